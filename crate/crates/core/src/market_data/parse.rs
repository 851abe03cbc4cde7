use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use csv::ByteRecord;
use serde::{Deserialize, Serialize};

use super::grid::TimeOfDay;
use super::record::{parse_date, parse_f64, parse_u64, StockId, TransactionRecord};
use super::{IngestError, ParseFieldError};

pub const DEFAULT_MALFORMED_THRESHOLD: f64 = 0.001;
const KEPT_MALFORMED_SAMPLES: usize = 10;

/// Header names for each transaction field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub trade_date: String,
    pub stock_id: String,
    pub time: String,
    pub price: String,
    pub volume: String,
    pub buy_serial: String,
    pub sell_serial: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            trade_date: "trade_date".into(),
            stock_id: "stock_id".into(),
            time: "time".into(),
            price: "price".into(),
            volume: "volume".into(),
            buy_serial: "buy_serial".into(),
            sell_serial: "sell_serial".into(),
        }
    }
}

impl ColumnMap {
    fn names(&self) -> [&str; 7] {
        [
            &self.trade_date,
            &self.stock_id,
            &self.time,
            &self.price,
            &self.volume,
            &self.buy_serial,
            &self.sell_serial,
        ]
    }
}

/// Delimited-text layout of a transactions file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schema {
    /// Single ASCII delimiter character.
    pub delimiter: char,
    pub columns: ColumnMap,
    /// Fraction of malformed rows above which the parse aborts.
    pub max_malformed_fraction: f64,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            delimiter: ',',
            columns: ColumnMap::default(),
            max_malformed_fraction: DEFAULT_MALFORMED_THRESHOLD,
        }
    }
}

impl Schema {
    pub fn delimiter_byte(&self) -> Result<u8, IngestError> {
        if self.delimiter.is_ascii() && !self.delimiter.is_ascii_alphanumeric() {
            Ok(self.delimiter as u8)
        } else {
            Err(IngestError::Schema(format!("unsupported delimiter {:?}", self.delimiter)))
        }
    }

    fn resolve(&self, header: &ByteRecord) -> Result<[usize; 7], IngestError> {
        let mut idx = [0usize; 7];
        for (slot, name) in idx.iter_mut().zip(self.columns.names()) {
            *slot = header
                .iter()
                .position(|h| trim(h) == name.as_bytes())
                .ok_or_else(|| {
                    IngestError::Schema(format!(
                        "column '{name}' not found in header [{}]",
                        String::from_utf8_lossy(header.as_slice())
                    ))
                })?;
        }
        Ok(idx)
    }
}

fn trim(b: &[u8]) -> &[u8] {
    b.trim_ascii()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MalformedRow {
    pub line: u64,
    pub reason: String,
}

/// Running counters for one parse.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub rows: u64,
    pub records: u64,
    pub malformed: u64,
    pub off_grid: u64,
    /// First few malformed rows, for the abort summary.
    pub samples: Vec<MalformedRow>,
}

impl ParseStats {
    pub fn malformed_fraction(&self) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            self.malformed as f64 / self.rows as f64
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} rows, {} records, {} malformed ({:.4}%), {} off-grid",
            self.rows,
            self.records,
            self.malformed,
            100.0 * self.malformed_fraction(),
            self.off_grid
        );
        for m in &self.samples {
            s.push_str(&format!("; line {}: {}", m.line, m.reason));
        }
        s
    }
}

/// Single-pass streaming reader over a delimited transactions file.
///
/// Malformed rows are skipped and counted. When the input is exhausted the
/// malformed fraction is checked against the schema threshold and, if
/// exceeded, one final `Err(IngestError::TooManyMalformed)` is yielded.
pub struct TransactionReader<R: Read> {
    inner: csv::Reader<R>,
    idx: [usize; 7],
    row: ByteRecord,
    stats: ParseStats,
    threshold: f64,
    done: bool,
}

impl TransactionReader<BufReader<File>> {
    pub fn open(path: &Path, schema: &Schema) -> Result<Self, IngestError> {
        let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
        Self::new(BufReader::with_capacity(1 << 20, file), schema)
    }
}

impl<R: Read> TransactionReader<R> {
    pub fn new(reader: R, schema: &Schema) -> Result<Self, IngestError> {
        let mut inner = csv::ReaderBuilder::new()
            .delimiter(schema.delimiter_byte()?)
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut header = ByteRecord::new();
        let got = inner.read_byte_record(&mut header).map_err(csv_err)?;
        if !got {
            return Err(IngestError::Schema("empty file: missing header".into()));
        }
        let idx = schema.resolve(&header)?;
        Ok(TransactionReader {
            inner,
            idx,
            row: ByteRecord::new(),
            stats: ParseStats::default(),
            threshold: schema.max_malformed_fraction,
            done: false,
        })
    }

    pub fn stats(&self) -> &ParseStats {
        &self.stats
    }

    fn parse_row(&self) -> Result<TransactionRecord, ParseFieldError> {
        let r = &self.row;
        let field = |i: usize| -> Result<&[u8], ParseFieldError> {
            r.get(self.idx[i]).map(trim).ok_or(ParseFieldError::MissingColumn(i))
        };
        let date = parse_date(field(0)?)?;
        let stock = StockId::from_bytes(field(1)?)?;
        let time = TimeOfDay::parse_bytes(field(2)?)?;
        let price = parse_f64(field(3)?).ok_or_else(|| ParseFieldError::Number("price"))?;
        let volume = parse_u64(field(4)?).ok_or_else(|| ParseFieldError::Number("volume"))?;
        let buy = parse_u64(field(5)?).ok_or_else(|| ParseFieldError::Number("buy_serial"))?;
        let sell = parse_u64(field(6)?).ok_or_else(|| ParseFieldError::Number("sell_serial"))?;
        TransactionRecord::new(date, stock, time, price, volume, buy, sell)
    }
}

impl<R: Read> Iterator for TransactionReader<R> {
    type Item = Result<TransactionRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            match self.inner.read_byte_record(&mut self.row) {
                Ok(true) => {}
                Ok(false) => {
                    self.done = true;
                    if self.stats.malformed_fraction() > self.threshold {
                        return Some(Err(IngestError::TooManyMalformed {
                            threshold: self.threshold,
                            summary: self.stats.summary(),
                        }));
                    }
                    return None;
                }
                Err(e) => {
                    // An undecodable row is malformed, an I/O failure is fatal.
                    if e.is_io_error() {
                        self.done = true;
                        return Some(Err(csv_err(e)));
                    }
                    self.stats.rows += 1;
                    self.note_malformed(e.to_string());
                    continue;
                }
            }
            // blank lines are not rows
            if self.row.len() == 1 && self.row[0].is_empty() {
                continue;
            }
            self.stats.rows += 1;
            match self.parse_row() {
                Ok(rec) => {
                    self.stats.records += 1;
                    if rec.is_off_grid() {
                        self.stats.off_grid += 1;
                    }
                    return Some(Ok(rec));
                }
                Err(e) => self.note_malformed(e.to_string()),
            }
        }
    }
}

impl<R: Read> TransactionReader<R> {
    fn note_malformed(&mut self, reason: String) {
        self.stats.malformed += 1;
        if self.stats.samples.len() < KEPT_MALFORMED_SAMPLES {
            let line = self.row.position().map(|p| p.line()).unwrap_or(0);
            self.stats.samples.push(MalformedRow { line, reason });
        }
    }
}

fn csv_err(e: csv::Error) -> IngestError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io { path: None, source: io },
        other => IngestError::Schema(format!("{other:?}")),
    }
}

/// Convenience: parse a whole file, collecting records and final stats.
pub fn parse_transactions(
    path: &Path,
    schema: &Schema,
) -> Result<(Vec<TransactionRecord>, ParseStats), IngestError> {
    let mut reader = TransactionReader::open(path, schema)?;
    let mut out = Vec::new();
    for rec in reader.by_ref() {
        out.push(rec?);
    }
    Ok((out, reader.stats.clone()))
}
