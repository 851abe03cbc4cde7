use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;

use crate::market_data::{Bar, IngestError, Schema, StockId};
use crate::polarity::{DayRow, MantimeCounts, PanelKey, PolarityPanel};

#[derive(Clone, Debug, PartialEq)]
pub struct Recount {
    pub panel: PolarityPanel,
    pub rows: usize,
    pub off_grid: usize,
}

/// Bar number from minutes after midnight, by direct range checks.
fn naive_bar(minute: u32) -> Option<u16> {
    match minute {
        570..=689 => Some((minute - 570 + 1) as u16),
        780..=896 => Some((minute - 780 + 121) as u16),
        _ => None,
    }
}

fn naive_minute(s: &str) -> Option<u32> {
    let mut it = s.trim().split(':');
    let h: u32 = it.next()?.parse().ok()?;
    let m: u32 = it.next()?.parse().ok()?;
    let sec = it.next()?;
    let whole: u32 = sec.split('.').next()?.parse().ok()?;
    (h < 24 && m < 60 && whole < 60).then_some(h * 60 + m)
}

/// Deliberately plain recount: loads every row, groups by (stock, date, bar)
/// and counts distinct serials per side with hash sets.
pub fn brute_force_recount(path: &Path, schema: &Schema) -> Result<Recount, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter_byte()?)
        .from_path(path)
        .map_err(|e| IngestError::Schema(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| IngestError::Schema(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::Schema(format!("missing column '{name}'")))
    };
    let c = &schema.columns;
    let (di, si, ti, bi, ki) =
        (col(&c.trade_date)?, col(&c.stock_id)?, col(&c.time)?, col(&c.buy_serial)?, col(&c.sell_serial)?);

    type Cell = (HashSet<u64>, HashSet<u64>);
    let mut cells: HashMap<(String, String, u16), Cell> = HashMap::new();
    let (mut rows, mut off_grid) = (0, 0);
    let mut row = csv::StringRecord::new();
    for line in 2u64.. {
        let bad = |reason: &str| IngestError::Row { what: "recount", line, reason: reason.into() };
        if !rdr.read_record(&mut row).map_err(|e| bad(&e.to_string()))? {
            break;
        }
        rows += 1;
        let minute = naive_minute(&row[ti]).ok_or_else(|| bad("bad time"))?;
        let Some(bar) = naive_bar(minute) else {
            off_grid += 1;
            continue;
        };
        let buy: u64 = row[bi].trim().parse().map_err(|_| bad("bad buy serial"))?;
        let sell: u64 = row[ki].trim().parse().map_err(|_| bad("bad sell serial"))?;
        let cell = cells.entry((row[si].trim().to_string(), row[di].trim().to_string(), bar)).or_default();
        cell.0.insert(buy);
        cell.1.insert(sell);
    }

    let mut out: BTreeMap<PanelKey, DayRow> = BTreeMap::new();
    for ((stock, date, bar), (buys, sells)) in cells {
        let date = NaiveDate::parse_from_str(&date, "%Y-%m-%d")
            .or_else(|_| NaiveDate::parse_from_str(&date, "%Y%m%d"))
            .map_err(|e| IngestError::Schema(format!("bad date '{date}': {e}")))?;
        let stock: StockId = stock.parse().map_err(|e| IngestError::Schema(format!("{e}")))?;
        let counts = MantimeCounts { buy: buys.len() as u32, sell: sells.len() as u32 };
        out.entry(PanelKey { stock, date }).or_default().set(Bar::new(bar).expect("range-checked"), counts);
    }
    Ok(Recount { panel: PolarityPanel::from_rows(out), rows, off_grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn grid_edges() {
        assert_eq!(naive_bar(570), Some(1));
        assert_eq!(naive_bar(689), Some(120));
        assert_eq!(naive_bar(690), None);
        assert_eq!(naive_bar(780), Some(121));
        assert_eq!(naive_bar(896), Some(237));
        assert_eq!(naive_bar(897), None);
    }

    #[test]
    fn empty_and_off_grid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let header = "trade_date,stock_id,time,price,volume,buy_serial,sell_serial\n";
        std::fs::write(&p, header).unwrap();
        let r = brute_force_recount(&p, &Schema::default()).unwrap();
        assert!(r.panel.is_empty());

        let mut f = std::fs::File::create(&p).unwrap();
        write!(f, "{header}2015-05-04,600000,11:30:00.000,10.0,100,1,2\n").unwrap();
        let r = brute_force_recount(&p, &Schema::default()).unwrap();
        assert!(r.panel.is_empty());
        assert_eq!((r.rows, r.off_grid), (1, 1));
    }
}
