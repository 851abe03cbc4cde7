//! Trading polarity: the normalized imbalance between distinct buying and
//! selling order serials ("man-times") within a one-minute bar.

mod market;
mod panel;
mod ratios;
mod returns;

use chrono::NaiveDate;
use thiserror::Error;

pub use market::{
    daily_polarity_at_index_min, market_polarity, market_polarity_series, polarity_at_index_min,
    IndexMinPoint, MarketPolaritySeries,
};
pub use panel::{
    panel_from_blocks, read_panel_cache, write_panel_cache, write_panel_csv, DayRow, MantimeMode, PanelBuilder,
    PanelKey, PolarityPanel,
};
pub use ratios::{direction_ratios, DirectionRatios};
pub use returns::{returns, returns_all, LimitFlag, ReturnSeries, LIMIT_FRACTION, LIMIT_TOLERANCE};

use crate::market_data::{Bar, StockId, TransactionRecord};
use crate::stats::{MomentAccumulator, Moments};

/// Distinct buy and sell serial counts for one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MantimeCounts {
    pub buy: u32,
    pub sell: u32,
}

impl MantimeCounts {
    pub fn polarity(&self) -> Option<f64> {
        polarity(self.buy, self.sell)
    }
}

/// `(buy − sell) / (buy + sell)`, or `None` when nothing traded.
pub fn polarity(buy: u32, sell: u32) -> Option<f64> {
    let total = buy as u64 + sell as u64;
    (total > 0).then(|| (buy as f64 - sell as f64) / total as f64)
}

/// Counts distinct buy and sell serials in a batch of trades.
///
/// The caller guarantees every record shares one (stock, day, bar).
pub fn count_mantimes(records: &[TransactionRecord]) -> MantimeCounts {
    let distinct = |mut v: Vec<u64>| {
        v.sort_unstable();
        v.dedup();
        v.len() as u32
    };
    MantimeCounts {
        buy: distinct(records.iter().map(|r| r.buy_serial).collect()),
        sell: distinct(records.iter().map(|r| r.sell_serial).collect()),
    }
}

/// Moments of every non-missing polarity in the panel.
pub fn polarity_moments(panel: &PolarityPanel) -> Option<Moments> {
    panel.values().collect::<MomentAccumulator>().summary()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolarityError {
    #[error("no non-missing polarity for {stock} in period {period}")]
    EmptyPeriod { stock: StockId, period: String },
    #[error("index series has no data for {0}")]
    IndexMissing(NaiveDate),
    #[error("non-positive price {value} for {id} on {date}{}", bar.map(|b| format!(" bar {b}")).unwrap_or_default())]
    NonPositivePrice { id: StockId, date: NaiveDate, bar: Option<Bar>, value: f64 },
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn polarity_examples() {
        assert_eq!(polarity(7, 3), Some(0.4));
        assert_eq!(polarity(5, 5), Some(0.0));
        assert_eq!(polarity(0, 0), None);
        assert_eq!(polarity(4, 0), Some(1.0));
        assert_eq!(polarity(0, 4), Some(-1.0));
    }

    fn rec(buy: u64, sell: u64) -> TransactionRecord {
        TransactionRecord::new(
            "2015-05-08".parse().unwrap(),
            "000001".parse().unwrap(),
            "10:00:00".parse().unwrap(),
            1.0,
            100,
            buy,
            sell,
        )
        .unwrap()
    }

    #[test]
    fn mantimes_are_distinct_serials() {
        let batch = [rec(5, 2), rec(5, 7), rec(9, 8)];
        assert_eq!(count_mantimes(&batch), MantimeCounts { buy: 2, sell: 3 });
        assert_eq!(count_mantimes(&[]), MantimeCounts::default());
    }

    proptest! {
        #[test]
        fn antisymmetric_and_bounded(b in 0u32..10_000, s in 0u32..10_000) {
            match (polarity(b, s), polarity(s, b)) {
                (Some(p), Some(q)) => {
                    prop_assert_eq!(p, -q);
                    prop_assert!((-1.0..=1.0).contains(&p));
                    prop_assert_eq!(p == 1.0, s == 0);
                    prop_assert_eq!(p == -1.0, b == 0);
                }
                (None, None) => prop_assert_eq!(b + s, 0),
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn scale_invariant(b in 0u32..1000, s in 0u32..1000, k in 1u32..1000) {
            let (p, q) = (polarity(b, s), polarity(k * b, k * s));
            match (p, q) {
                (Some(p), Some(q)) => prop_assert!((p - q).abs() <= 1e-15),
                (None, None) => {}
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn count_is_order_independent(pairs in prop::collection::vec((1u64..20, 1u64..20), 0..40), seed in any::<u64>()) {
            let batch: Vec<_> = pairs.iter().map(|&(b, s)| rec(b, s)).collect();
            let mut shuffled = batch.clone();
            let n = shuffled.len();
            if n > 1 {
                for i in 0..n {
                    let j = (seed.wrapping_mul(i as u64 + 7) % n as u64) as usize;
                    shuffled.swap(i, j);
                }
            }
            prop_assert_eq!(count_mantimes(&batch), count_mantimes(&shuffled));
        }
    }
}
