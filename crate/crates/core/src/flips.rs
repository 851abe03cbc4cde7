//! Sign-flip statistics of a stock's intraday polarity sequence.
//!
//! All statistics run on the zero-removed sequence: missing minutes and
//! exactly-balanced minutes are dropped first, and flips, depth and runs are
//! then measured in positions of what remains.

use chrono::NaiveDate;
use serde::Serialize;

use crate::market_data::StockId;

/// Preprocessing choices recorded in flip outputs.
pub const FLIP_METADATA: &[(&str, &str)] = &[
    ("zero_removal", "zeros and missing minutes removed before flip detection"),
    ("depth_basis", "depth summed over flip positions of the zero-removed sequence"),
    ("run_units", "sequence positions of the zero-removed series"),
    ("boundary_runs", "excluded (runs touching day start or end are censored)"),
];

/// One stock-day of nonzero polarity values in time order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlipSeries {
    pub stock_id: StockId,
    pub trade_date: NaiveDate,
    pub values: Vec<f64>,
    /// Non-missing minutes in the day, zeros included.
    pub effective_length: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn of(v: f64) -> Option<Sign> {
        if v > 0.0 {
            Some(Sign::Positive)
        } else if v < 0.0 {
            Some(Sign::Negative)
        } else {
            None
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DailyFlipSummary {
    pub stock_id: StockId,
    pub trade_date: NaiveDate,
    pub flip_count: usize,
    pub standardized_flips: f64,
    pub depth: f64,
    /// `None` when the day has no flips.
    pub averaged_depth: Option<f64>,
}

/// A maximal same-sign run bounded on both sides by the opposite sign.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunLengthSample {
    pub stock_id: StockId,
    pub trade_date: NaiveDate,
    pub sign: Sign,
    pub length: u32,
}

pub fn build_flip_series(stock_id: StockId, trade_date: NaiveDate, day: &[Option<f64>]) -> FlipSeries {
    let present: Vec<f64> = day.iter().flatten().copied().collect();
    FlipSeries {
        stock_id,
        trade_date,
        effective_length: present.len(),
        values: present.into_iter().filter(|&v| v != 0.0).collect(),
    }
}

pub fn flip_stats(fs: &FlipSeries) -> DailyFlipSummary {
    let mut flip_count = 0usize;
    let mut depth = 0.0;
    for w in fs.values.windows(2) {
        if Sign::of(w[0]) != Sign::of(w[1]) {
            flip_count += 1;
            depth += (w[1] - w[0]).abs();
        }
    }
    DailyFlipSummary {
        stock_id: fs.stock_id,
        trade_date: fs.trade_date,
        flip_count,
        standardized_flips: if fs.effective_length == 0 {
            0.0
        } else {
            flip_count as f64 / fs.effective_length as f64
        },
        depth,
        averaged_depth: (flip_count > 0).then(|| depth / flip_count as f64),
    }
}

pub fn run_lengths(fs: &FlipSeries) -> Vec<RunLengthSample> {
    // (sign, length) of each maximal run
    let mut runs: Vec<(Sign, u32)> = Vec::new();
    for s in fs.values.iter().filter_map(|&v| Sign::of(v)) {
        match runs.last_mut() {
            Some((last, len)) if *last == s => *len += 1,
            _ => runs.push((s, 1)),
        }
    }
    if runs.len() < 3 {
        return Vec::new();
    }
    runs[1..runs.len() - 1]
        .iter()
        .map(|&(sign, length)| RunLengthSample { stock_id: fs.stock_id, trade_date: fs.trade_date, sign, length })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(values: &[f64], effective_length: usize) -> FlipSeries {
        FlipSeries {
            stock_id: "000001".parse().unwrap(),
            trade_date: "2015-05-08".parse().unwrap(),
            values: values.to_vec(),
            effective_length,
        }
    }

    #[test]
    fn build_drops_zeros_and_missing() {
        let fs = build_flip_series(
            "000001".parse().unwrap(),
            "2015-05-08".parse().unwrap(),
            &[Some(0.2), Some(0.0), Some(-0.3), None, Some(0.1)],
        );
        assert_eq!(fs.values, vec![0.2, -0.3, 0.1]);
        assert_eq!(fs.effective_length, 4);
        let empty = build_flip_series(fs.stock_id, fs.trade_date, &[None; 237]);
        assert!(empty.values.is_empty());
        assert_eq!(empty.effective_length, 0);
        assert_eq!(flip_stats(&empty).standardized_flips, 0.0);
    }

    #[test]
    fn worked_example() {
        let fs = series(&[0.2, -0.3, -0.4, -0.2, 0.3], 5);
        let s = flip_stats(&fs);
        assert_eq!(s.flip_count, 2);
        assert_eq!(s.standardized_flips, 0.4);
        assert!((s.depth - 1.0).abs() < 1e-15);
        assert!((s.averaged_depth.unwrap() - 0.5).abs() < 1e-15);
        let runs = run_lengths(&fs);
        assert_eq!(runs.len(), 1);
        assert_eq!((runs[0].sign, runs[0].length), (Sign::Negative, 3));
    }

    #[test]
    fn monotone_day() {
        let fs = series(&[0.1, 0.2, 0.3], 3);
        let s = flip_stats(&fs);
        assert_eq!((s.flip_count, s.depth, s.averaged_depth), (0, 0.0, None));
        assert!(run_lengths(&fs).is_empty());
    }

    #[test]
    fn alternating_closed_form() {
        for n in 2..12 {
            let p = 0.25;
            let vals: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { p } else { -p }).collect();
            let s = flip_stats(&series(&vals, n));
            assert_eq!(s.flip_count, n - 1);
            assert!((s.depth - (n - 1) as f64 * 2.0 * p).abs() < 1e-12);
            let runs = run_lengths(&series(&vals, n));
            assert_eq!(runs.len(), n.saturating_sub(2));
            assert!(runs.iter().all(|r| r.length == 1));
        }
    }

    fn nonzero() -> impl Strategy<Value = f64> {
        prop_oneof![0.01f64..=1.0, -1.0f64..=-0.01]
    }

    proptest! {
        #[test]
        fn negation_duality(vals in prop::collection::vec(nonzero(), 0..80), extra in 0usize..20) {
            let fs = series(&vals, vals.len() + extra);
            let neg = series(&vals.iter().map(|v| -v).collect::<Vec<_>>(), vals.len() + extra);
            let (a, b) = (flip_stats(&fs), flip_stats(&neg));
            prop_assert_eq!(a.flip_count, b.flip_count);
            prop_assert_eq!(a.standardized_flips, b.standardized_flips);
            prop_assert!((a.depth - b.depth).abs() < 1e-12);
            let ra = run_lengths(&fs);
            let rb = run_lengths(&neg);
            prop_assert_eq!(ra.len(), rb.len());
            for (x, y) in ra.iter().zip(&rb) {
                prop_assert_eq!(x.sign, y.sign.flip());
                prop_assert_eq!(x.length, y.length);
            }
        }

        #[test]
        fn bounds(vals in prop::collection::vec(nonzero(), 0..80), extra in 0usize..20) {
            let s = flip_stats(&series(&vals, vals.len() + extra));
            prop_assert!((0.0..=1.0).contains(&s.standardized_flips));
            prop_assert!(s.depth <= 2.0 * s.flip_count as f64 + 1e-12);
            prop_assert_eq!(s.averaged_depth.is_none(), s.flip_count == 0);
            let runs = run_lengths(&series(&vals, vals.len()));
            // interior runs are bounded by flips on both sides
            prop_assert_eq!(runs.len(), s.flip_count.saturating_sub(1));
            prop_assert!(runs.iter().map(|r| r.length as usize).sum::<usize>() <= vals.len());
        }
    }
}
