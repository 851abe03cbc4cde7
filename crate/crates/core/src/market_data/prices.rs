//! End-of-day and per-bar price files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use chrono::NaiveDate;
use csv::ByteRecord;

use super::grid::{assign_bar, Bar, TimeOfDay, BARS_PER_DAY};
use super::record::{parse_date, parse_f64, StockId};
use super::IngestError;

/// Closing prices keyed by id then date.
pub type EodTable = BTreeMap<StockId, BTreeMap<NaiveDate, f64>>;

/// Last price per bar; `None` where nothing traded in the bar.
pub type DayBars = Vec<Option<f64>>;

/// Intraday last prices keyed by id then date.
pub type IntradayTable = BTreeMap<StockId, BTreeMap<NaiveDate, DayBars>>;

pub fn empty_day() -> DayBars {
    vec![None; BARS_PER_DAY]
}

fn is_missing(b: &[u8]) -> bool {
    matches!(b, b"" | b"NA" | b"NaN" | b"nan" | b"null")
}

struct Rows<R: Read> {
    inner: csv::Reader<R>,
    idx: Vec<usize>,
    row: ByteRecord,
    what: &'static str,
}

impl<R: Read> Rows<R> {
    fn new(reader: R, delimiter: u8, names: &[&str], what: &'static str) -> Result<Self, IngestError> {
        let mut inner = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut header = ByteRecord::new();
        if !inner.read_byte_record(&mut header).map_err(|e| IngestError::Schema(e.to_string()))? {
            return Err(IngestError::Schema(format!("{what}: empty file")));
        }
        let idx = names
            .iter()
            .map(|n| {
                header
                    .iter()
                    .position(|h| h.trim_ascii() == n.as_bytes())
                    .ok_or_else(|| IngestError::Schema(format!("{what}: missing column '{n}'")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Rows { inner, idx, row: ByteRecord::new(), what })
    }

    /// Advances to the next non-blank row, returning its line number.
    fn advance(&mut self) -> Result<Option<u64>, IngestError> {
        loop {
            let more = self
                .inner
                .read_byte_record(&mut self.row)
                .map_err(|e| IngestError::Schema(format!("{}: {e}", self.what)))?;
            if !more {
                return Ok(None);
            }
            if self.row.len() == 1 && self.row[0].is_empty() {
                continue;
            }
            return Ok(Some(self.row.position().map(|p| p.line()).unwrap_or(0)));
        }
    }

    fn field(&self, i: usize, line: u64) -> Result<&[u8], IngestError> {
        self.row.get(self.idx[i]).map(<[u8]>::trim_ascii).ok_or_else(|| IngestError::Row {
            what: self.what,
            line,
            reason: "missing field".into(),
        })
    }

    fn bad(&self, line: u64, reason: impl Into<String>) -> IngestError {
        IngestError::Row { what: self.what, line, reason: reason.into() }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path).map(BufReader::new).map_err(|e| IngestError::io(path, e))
}

/// Reads `(date, id, close)` rows.
pub fn read_eod<R: Read>(reader: R, delimiter: u8) -> Result<EodTable, IngestError> {
    let mut rows = Rows::new(reader, delimiter, &["date", "id", "close"], "eod prices")?;
    let mut out = EodTable::new();
    while let Some(line) = rows.advance()? {
        let date = parse_date(rows.field(0, line)?).map_err(|e| rows.bad(line, e.to_string()))?;
        let id = StockId::from_bytes(rows.field(1, line)?).map_err(|e| rows.bad(line, e.to_string()))?;
        let close = parse_f64(rows.field(2, line)?).ok_or_else(|| rows.bad(line, "close is not a number"))?;
        if !(close.is_finite() && close > 0.0) {
            return Err(IngestError::NonPositivePrice { id: id.to_string(), date, bar: None, value: close });
        }
        if out.entry(id).or_default().insert(date, close).is_some() {
            return Err(rows.bad(line, format!("duplicate close for {id} on {date}")));
        }
    }
    Ok(out)
}

/// Reads `(date, id, bar, last_price)` rows. The bar column takes either a
/// 1-based bar index or a time of day; missing prices are `NA` or empty.
pub fn read_intraday<R: Read>(reader: R, delimiter: u8) -> Result<IntradayTable, IngestError> {
    let mut rows = Rows::new(reader, delimiter, &["date", "id", "bar", "last_price"], "intraday prices")?;
    let mut out = IntradayTable::new();
    while let Some(line) = rows.advance()? {
        let date = parse_date(rows.field(0, line)?).map_err(|e| rows.bad(line, e.to_string()))?;
        let id = StockId::from_bytes(rows.field(1, line)?).map_err(|e| rows.bad(line, e.to_string()))?;
        let bar_raw = rows.field(2, line)?;
        let bar = if bar_raw.contains(&b':') {
            let t = TimeOfDay::parse_bytes(bar_raw).map_err(|e| rows.bad(line, e.to_string()))?;
            assign_bar(t).ok_or_else(|| rows.bad(line, format!("time {t} is off-grid")))?
        } else {
            std::str::from_utf8(bar_raw)
                .ok()
                .and_then(|s| s.parse::<u16>().ok())
                .and_then(Bar::new)
                .ok_or_else(|| rows.bad(line, "bar must be 1..=237 or HH:MM:SS"))?
        };
        let raw = rows.field(3, line)?;
        let price = if is_missing(raw) {
            None
        } else {
            let p = parse_f64(raw).ok_or_else(|| rows.bad(line, "last_price is not a number"))?;
            if !(p.is_finite() && p > 0.0) {
                return Err(IngestError::NonPositivePrice { id: id.to_string(), date, bar: Some(bar), value: p });
            }
            Some(p)
        };
        let day = out.entry(id).or_default().entry(date).or_insert_with(empty_day);
        let cell = &mut day[bar.slot()];
        // a bar may be listed as NA and then filled; two prices are a conflict
        if cell.is_some() && price.is_some() {
            return Err(rows.bad(line, format!("duplicate last_price for {id} on {date} bar {bar}")));
        }
        if price.is_some() {
            *cell = price;
        }
    }
    Ok(out)
}

pub fn load_eod(path: &Path, delimiter: u8) -> Result<EodTable, IngestError> {
    read_eod(open(path)?, delimiter)
}

pub fn load_intraday(path: &Path, delimiter: u8) -> Result<IntradayTable, IngestError> {
    read_intraday(open(path)?, delimiter)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn eod_rows() {
        let t = read_eod("date,id,close\n2015-05-08,000001,10.0\n2015-05-11,000001,11.0\n".as_bytes(), b',').unwrap();
        let s: StockId = "000001".parse().unwrap();
        assert_eq!(t[&s][&d("2015-05-11")], 11.0);
    }

    #[test]
    fn eod_rejects_duplicates_and_nonpositive() {
        let dup = "date,id,close\n2015-05-08,A,10.0\n2015-05-08,A,10.5\n";
        assert!(matches!(read_eod(dup.as_bytes(), b','), Err(IngestError::Row { .. })));
        let neg = "date,id,close\n2015-05-08,A,0\n";
        match read_eod(neg.as_bytes(), b',') {
            Err(IngestError::NonPositivePrice { id, .. }) => assert_eq!(id, "A"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn intraday_bars_times_and_missing() {
        let body = "date,id,bar,last_price\n\
                    2015-05-08,399001,1,100.0\n\
                    2015-05-08,399001,13:00:30,101.0\n\
                    2015-05-08,399001,3,NA\n";
        let t = read_intraday(body.as_bytes(), b',').unwrap();
        let day = &t[&"399001".parse::<StockId>().unwrap()][&d("2015-05-08")];
        assert_eq!(day.len(), BARS_PER_DAY);
        assert_eq!(day[0], Some(100.0));
        assert_eq!(day[120], Some(101.0));
        assert_eq!(day[2], None);
        let off = "date,id,bar,last_price\n2015-05-08,X,12:00:00,1.0\n";
        assert!(read_intraday(off.as_bytes(), b',').is_err());
        let bad_bar = "date,id,bar,last_price\n2015-05-08,X,238,1.0\n";
        assert!(read_intraday(bad_bar.as_bytes(), b',').is_err());
    }
}
