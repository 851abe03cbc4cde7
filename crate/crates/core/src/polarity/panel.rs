use std::collections::{BTreeMap, HashMap};
use std::io::{self, Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{polarity, MantimeCounts};
use crate::market_data::{
    assign_bar, Bar, CacheError, CacheKind, CacheReader, CacheWriter, StockDayBlock, StockId, TimeOfDay,
    TransactionRecord, BARS_PER_DAY,
};

/// How a serial that trades in several bars of one day is counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MantimeMode {
    /// Once in every bar it trades in.
    #[default]
    PerBar,
    /// Once per day, in the first bar it trades in.
    PerDay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PanelKey {
    pub stock: StockId,
    pub date: NaiveDate,
}

/// Man-times counts for the 237 bars of one stock-day.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DayRow {
    cells: Vec<MantimeCounts>,
}

impl Default for DayRow {
    fn default() -> Self {
        DayRow { cells: vec![MantimeCounts::default(); BARS_PER_DAY] }
    }
}

impl DayRow {
    pub fn from_cells(cells: Vec<MantimeCounts>) -> Self {
        assert_eq!(cells.len(), BARS_PER_DAY);
        DayRow { cells }
    }

    pub fn cells(&self) -> &[MantimeCounts] {
        &self.cells
    }

    pub fn cell(&self, bar: Bar) -> MantimeCounts {
        self.cells[bar.slot()]
    }

    pub fn set(&mut self, bar: Bar, counts: MantimeCounts) {
        self.cells[bar.slot()] = counts;
    }

    pub fn polarities(&self) -> Vec<Option<f64>> {
        self.cells.iter().map(MantimeCounts::polarity).collect()
    }
}

/// Per-stock, per-day, per-bar man-times counts and the derived polarity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PolarityPanel {
    rows: BTreeMap<PanelKey, DayRow>,
}

impl PolarityPanel {
    pub fn from_rows(rows: BTreeMap<PanelKey, DayRow>) -> Self {
        PolarityPanel { rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, stock: StockId, date: NaiveDate) -> Option<&DayRow> {
        self.rows.get(&PanelKey { stock, date })
    }

    pub fn polarity(&self, stock: StockId, date: NaiveDate, bar: Bar) -> Option<f64> {
        self.row(stock, date)?.cell(bar).polarity()
    }

    /// Rows in (stock, date) order.
    pub fn rows(&self) -> impl Iterator<Item = (&PanelKey, &DayRow)> {
        self.rows.iter()
    }

    pub fn stocks(&self) -> Vec<StockId> {
        let mut v: Vec<StockId> = self.rows.keys().map(|k| k.stock).collect();
        v.dedup();
        v
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut v: Vec<NaiveDate> = self.rows.keys().map(|k| k.date).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Every non-missing polarity value in the panel.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.values().flat_map(|r| r.cells.iter().filter_map(MantimeCounts::polarity))
    }

    pub fn insert(&mut self, key: PanelKey, row: DayRow) {
        self.rows.insert(key, row);
    }
}

/// Raw (bar, serial) observations for one stock-day, before distinct counting.
#[derive(Clone, Debug, Default)]
struct DayAccumulator {
    buys: Vec<(u16, u64)>,
    sells: Vec<(u16, u64)>,
}

impl DayAccumulator {
    fn finish(mut self, mode: MantimeMode) -> DayRow {
        let mut row = DayRow::default();
        for (side, is_buy) in [(&mut self.buys, true), (&mut self.sells, false)] {
            match mode {
                MantimeMode::PerBar => {
                    side.sort_unstable();
                    side.dedup();
                }
                MantimeMode::PerDay => {
                    side.sort_unstable_by_key(|&(bar, serial)| (serial, bar));
                    side.dedup_by_key(|&mut (_, serial)| serial);
                }
            }
            for &(bar, _) in side.iter() {
                let c = &mut row.cells[bar as usize - 1];
                if is_buy {
                    c.buy += 1;
                } else {
                    c.sell += 1;
                }
            }
        }
        row
    }
}

/// Accumulates trades and produces a [`PolarityPanel`].
///
/// Records may arrive in any order; off-grid records are ignored. The final
/// distinct-count pass runs in parallel over stock-days.
#[derive(Debug, Default)]
pub struct PanelBuilder {
    mode: MantimeMode,
    days: HashMap<PanelKey, DayAccumulator>,
}

impl PanelBuilder {
    pub fn new(mode: MantimeMode) -> Self {
        PanelBuilder { mode, days: HashMap::new() }
    }

    pub fn push(&mut self, r: &TransactionRecord) {
        let Some(bar) = r.bar else { return };
        let acc = self.days.entry(PanelKey { stock: r.stock_id, date: r.trade_date }).or_default();
        acc.buys.push((bar.get(), r.buy_serial));
        acc.sells.push((bar.get(), r.sell_serial));
    }

    pub fn push_block(&mut self, b: &StockDayBlock) {
        let key = PanelKey { stock: b.stock_id(), date: b.trade_date() };
        let on_grid: Vec<(usize, u16)> = (0..b.len())
            .filter_map(|i| TimeOfDay::from_millis(b.times[i]).and_then(assign_bar).map(|bar| (i, bar.get())))
            .collect();
        if on_grid.is_empty() {
            return;
        }
        let acc = self.days.entry(key).or_default();
        acc.buys.reserve(on_grid.len());
        acc.sells.reserve(on_grid.len());
        for (i, bar) in on_grid {
            acc.buys.push((bar, b.buy_serials[i]));
            acc.sells.push((bar, b.sell_serials[i]));
        }
    }

    pub fn finish(self) -> PolarityPanel {
        let mode = self.mode;
        let rows: Vec<(PanelKey, DayRow)> =
            self.days.into_par_iter().map(|(k, acc)| (k, acc.finish(mode))).collect();
        PolarityPanel { rows: rows.into_iter().collect() }
    }
}

impl Extend<TransactionRecord> for PanelBuilder {
    fn extend<I: IntoIterator<Item = TransactionRecord>>(&mut self, iter: I) {
        iter.into_iter().for_each(|r| self.push(&r));
    }
}

/// Builds a panel directly from cache blocks, one stock-day at a time.
///
/// Blocks for the same stock-day are merged before counting.
pub fn panel_from_blocks<I>(blocks: I, mode: MantimeMode) -> Result<PolarityPanel, CacheError>
where
    I: IntoIterator<Item = Result<StockDayBlock, CacheError>>,
{
    let mut b = PanelBuilder::new(mode);
    for block in blocks {
        b.push_block(&block?);
    }
    Ok(b.finish())
}

fn fmt_polarity(c: MantimeCounts) -> String {
    polarity(c.buy, c.sell).map(|p| p.to_string()).unwrap_or_else(|| "NA".into())
}

/// Writes `stock_id,date,bar,buy_mantimes,sell_mantimes,polarity` rows, `NA` for missing.
pub fn write_panel_csv<W: Write>(mut w: W, panel: &PolarityPanel) -> io::Result<()> {
    writeln!(w, "stock_id,date,bar,buy_mantimes,sell_mantimes,polarity")?;
    for (k, row) in panel.rows() {
        for (bar, c) in Bar::all().zip(row.cells()) {
            writeln!(w, "{},{},{},{},{},{}", k.stock, k.date, bar, c.buy, c.sell, fmt_polarity(*c))?;
        }
    }
    Ok(())
}

/// Panel cache: one block per stock-day with 237 `(buy u32, sell u32)` pairs.
pub fn write_panel_cache<W: Write>(out: W, panel: &PolarityPanel) -> io::Result<W> {
    let mut w = CacheWriter::new(out, CacheKind::Panel)?;
    let mut buf = Vec::with_capacity(BARS_PER_DAY * 8);
    for (k, row) in panel.rows() {
        w.begin_block(k.stock, k.date, BARS_PER_DAY as u32)?;
        buf.clear();
        for c in row.cells() {
            buf.extend_from_slice(&c.buy.to_le_bytes());
            buf.extend_from_slice(&c.sell.to_le_bytes());
        }
        w.payload().write_all(&buf)?;
    }
    w.finish()
}

pub fn read_panel_cache<R: Read>(input: R) -> Result<PolarityPanel, CacheError> {
    let mut r = CacheReader::new(input, CacheKind::Panel)?;
    let mut panel = PolarityPanel::default();
    while let Some(h) = r.next_header()? {
        if h.n as usize != BARS_PER_DAY {
            return Err(CacheError::Corrupt(format!("panel block with {} bars", h.n)));
        }
        let raw = r.read_bytes(BARS_PER_DAY * 8)?;
        let cells = raw
            .chunks_exact(8)
            .map(|c| MantimeCounts {
                buy: u32::from_le_bytes(c[..4].try_into().unwrap()),
                sell: u32::from_le_bytes(c[4..].try_into().unwrap()),
            })
            .collect();
        if panel.rows.insert(PanelKey { stock: h.stock, date: h.date }, DayRow { cells }).is_some() {
            return Err(CacheError::Corrupt(format!("duplicate panel block {} {}", h.stock, h.date)));
        }
    }
    Ok(panel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(stock: &str, t: &str, buy: u64, sell: u64) -> TransactionRecord {
        TransactionRecord::new("2015-05-08".parse().unwrap(), stock.parse().unwrap(), t.parse().unwrap(), 1.0, 100, buy, sell)
            .unwrap()
    }

    fn sample() -> Vec<TransactionRecord> {
        vec![
            rec("A", "09:30:00", 5, 2),
            rec("A", "09:30:10", 5, 7),
            rec("A", "09:30:59.999", 9, 8),
            // serial 9 again in the next bar
            rec("A", "09:31:00", 9, 8),
            rec("A", "11:30:00", 11, 12),
            rec("B", "13:00:00", 20, 21),
        ]
    }

    #[test]
    fn per_bar_distinct_counts() {
        let mut b = PanelBuilder::new(MantimeMode::PerBar);
        b.extend(sample());
        let p = b.finish();
        let (a, d) = ("A".parse().unwrap(), "2015-05-08".parse().unwrap());
        let row = p.row(a, d).unwrap();
        assert_eq!(row.cell(Bar::new(1).unwrap()), MantimeCounts { buy: 2, sell: 3 });
        assert_eq!(row.cell(Bar::new(2).unwrap()), MantimeCounts { buy: 1, sell: 1 });
        assert_eq!(row.cells().iter().map(|c| c.buy + c.sell).sum::<u32>(), 7);
        assert_eq!(p.polarity(a, d, Bar::new(1).unwrap()), Some(-0.2));
        assert_eq!(p.polarity(a, d, Bar::new(3).unwrap()), None);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn per_day_mode_counts_first_bar_only() {
        let mut b = PanelBuilder::new(MantimeMode::PerDay);
        b.extend(sample());
        let p = b.finish();
        let row = p.row("A".parse().unwrap(), "2015-05-08".parse().unwrap()).unwrap();
        assert_eq!(row.cell(Bar::new(1).unwrap()), MantimeCounts { buy: 2, sell: 3 });
        assert_eq!(row.cell(Bar::new(2).unwrap()), MantimeCounts::default());
    }

    #[test]
    fn off_grid_only_day_has_no_row() {
        let mut b = PanelBuilder::new(MantimeMode::PerBar);
        b.push(&rec("C", "09:25:00", 1, 2));
        assert!(b.finish().is_empty());
    }

    #[test]
    fn block_path_matches_record_path() {
        let mut by_rec = PanelBuilder::new(MantimeMode::PerBar);
        by_rec.extend(sample());
        let mut blocks: BTreeMap<StockId, StockDayBlock> = BTreeMap::new();
        for r in sample() {
            blocks.entry(r.stock_id).or_insert_with(|| StockDayBlock::new(r.stock_id, r.trade_date)).push(&r);
        }
        let via_blocks = panel_from_blocks(blocks.into_values().map(Ok), MantimeMode::PerBar).unwrap();
        assert_eq!(via_blocks, by_rec.finish());
    }

    #[test]
    fn panel_cache_and_csv() {
        let mut b = PanelBuilder::new(MantimeMode::PerBar);
        b.extend(sample());
        let p = b.finish();
        let buf = write_panel_cache(Vec::new(), &p).unwrap();
        assert_eq!(read_panel_cache(&buf[..]).unwrap(), p);
        assert!(read_panel_cache(&buf[..buf.len() - 1]).is_err());

        let mut csv = Vec::new();
        write_panel_csv(&mut csv, &p).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * BARS_PER_DAY);
        assert!(text.contains("A,2015-05-08,1,2,3,-0.2\n"));
        assert!(text.contains("A,2015-05-08,3,0,0,NA\n"));
    }
}
