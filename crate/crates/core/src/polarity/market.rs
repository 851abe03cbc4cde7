use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;

use super::{PolarityError, PolarityPanel, ReturnSeries};
use crate::market_data::{Bar, BARS_PER_DAY};

/// Per-day, per-bar market polarity (`None` where no stock traded).
pub type MarketPolaritySeries = BTreeMap<NaiveDate, Vec<Option<f64>>>;

/// Cross-stock mean polarity at one bar, over the stocks that traded in it.
pub fn market_polarity(panel: &PolarityPanel, date: NaiveDate, bar: Bar) -> Option<f64> {
    let (sum, n) = panel
        .rows()
        .filter(|(k, _)| k.date == date)
        .filter_map(|(_, row)| row.cell(bar).polarity())
        .fold((0.0, 0u32), |(s, n), p| (s + p, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Market polarity for every bar of every day in the panel.
///
/// Sums run in stock order, so each cell equals [`market_polarity`] exactly.
pub fn market_polarity_series(panel: &PolarityPanel) -> MarketPolaritySeries {
    let mut acc: BTreeMap<NaiveDate, (Vec<f64>, Vec<u32>)> = BTreeMap::new();
    for (k, row) in panel.rows() {
        let (sums, counts) = acc.entry(k.date).or_insert_with(|| (vec![0.0; BARS_PER_DAY], vec![0; BARS_PER_DAY]));
        for (i, p) in row.polarities().into_iter().enumerate() {
            if let Some(p) = p {
                sums[i] += p;
                counts[i] += 1;
            }
        }
    }
    acc.into_iter()
        .map(|(d, (sums, counts))| {
            let day = sums.iter().zip(&counts).map(|(&s, &n)| (n > 0).then(|| s / n as f64)).collect();
            (d, day)
        })
        .collect()
}

/// The bar where the index hit its daily low and the market polarity there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IndexMinPoint {
    pub bar: Bar,
    pub index_return: f64,
    pub polarity: Option<f64>,
}

/// Locates the minimum of `index_day` (earliest bar on ties) and reads
/// `market_day` at that bar. `None` if the index has no values.
pub fn polarity_at_index_min(market_day: &[Option<f64>], index_day: &[Option<f64>]) -> Option<IndexMinPoint> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in index_day.iter().enumerate() {
        if let Some(v) = *v {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    let (slot, index_return) = best?;
    Some(IndexMinPoint {
        bar: Bar::from_slot(slot)?,
        index_return,
        polarity: market_day.get(slot).copied().flatten(),
    })
}

/// Daily polarity at the index-minimum minute, using the index's intraday
/// change versus the prior close.
pub fn daily_polarity_at_index_min(
    panel: &PolarityPanel,
    index: &ReturnSeries,
    date: NaiveDate,
) -> Result<IndexMinPoint, PolarityError> {
    let index_day = index.intraday_pct_vs_prev_close.get(&date).ok_or(PolarityError::IndexMissing(date))?;
    let market_day: Vec<Option<f64>> = Bar::all().map(|b| market_polarity(panel, date, b)).collect();
    polarity_at_index_min(&market_day, index_day).ok_or(PolarityError::IndexMissing(date))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::StockId;
    use crate::polarity::{DayRow, MantimeCounts, PanelKey};

    fn panel_with(cells: &[(&str, u16, u32, u32)]) -> PolarityPanel {
        let date: NaiveDate = "2015-05-08".parse().unwrap();
        let mut rows: BTreeMap<PanelKey, DayRow> = BTreeMap::new();
        for &(s, bar, buy, sell) in cells {
            let key = PanelKey { stock: s.parse::<StockId>().unwrap(), date };
            rows.entry(key).or_default().set(Bar::new(bar).unwrap(), MantimeCounts { buy, sell });
        }
        PolarityPanel::from_rows(rows)
    }

    #[test]
    fn mean_over_available_stocks() {
        let d: NaiveDate = "2015-05-08".parse().unwrap();
        let b1 = Bar::new(1).unwrap();
        // 0.4 and -0.4
        let p = panel_with(&[("A", 1, 7, 3), ("B", 1, 3, 7), ("B", 2, 1, 0)]);
        assert_eq!(market_polarity(&p, d, b1), Some(0.0));
        // only B present at bar 2
        assert_eq!(market_polarity(&p, d, Bar::new(2).unwrap()), Some(1.0));
        assert_eq!(market_polarity(&p, d, Bar::new(3).unwrap()), None);
        let series = market_polarity_series(&p);
        assert_eq!(series[&d][0], Some(0.0));
        assert_eq!(series[&d][1], Some(1.0));
        assert_eq!(series[&d][2], None);
    }

    #[test]
    fn identical_polarity_everywhere() {
        let d: NaiveDate = "2015-05-08".parse().unwrap();
        let p = panel_with(&[("A", 5, 3, 1), ("B", 5, 6, 2), ("C", 5, 30, 10)]);
        assert_eq!(market_polarity(&p, d, Bar::new(5).unwrap()), Some(0.5));
    }

    #[test]
    fn index_minimum_lookup() {
        let market = [Some(0.1), Some(0.2), Some(0.0)];
        let pt = polarity_at_index_min(&market, &[Some(-0.01), Some(-0.03), Some(0.0)]).unwrap();
        assert_eq!((pt.bar.get(), pt.polarity), (2, Some(0.2)));
        let flat = polarity_at_index_min(&market, &[Some(0.0); 3]).unwrap();
        assert_eq!((flat.bar.get(), flat.polarity), (1, Some(0.1)));
        let gaps = polarity_at_index_min(&market, &[None, Some(0.01), Some(0.01)]).unwrap();
        assert_eq!(gaps.bar.get(), 2);
        assert!(polarity_at_index_min(&market, &[None, None]).is_none());
    }
}
