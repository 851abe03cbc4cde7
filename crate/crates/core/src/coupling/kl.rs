use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::stock_day_correlation;
use super::CouplingError;
use crate::market_data::StockId;
use crate::polarity::{PolarityPanel, ReturnSeries};

pub const DEFAULT_BINS: usize = 40;
pub const DEFAULT_PSEUDO_COUNT: f64 = 0.5;

/// Equal-width bins on `[-1, 1]`; the top edge belongs to the last bin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinGrid {
    pub bins: usize,
}

impl Default for BinGrid {
    fn default() -> Self {
        BinGrid { bins: DEFAULT_BINS }
    }
}

impl BinGrid {
    pub fn bin_of(&self, r: f64) -> usize {
        let w = 2.0 / self.bins as f64;
        (((r + 1.0) / w).floor() as usize).min(self.bins - 1)
    }

    /// Lower edge of bin `i`.
    pub fn lower(&self, i: usize) -> f64 {
        -1.0 + 2.0 * i as f64 / self.bins as f64
    }
}

/// One day's cross-section of polarity–return correlations and its smoothed histogram.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrDist {
    pub trade_date: NaiveDate,
    pub coefficients: Vec<f64>,
    pub grid: BinGrid,
    pub pseudo_count: f64,
    /// Probability per bin: `(count + pseudo) / (n + bins·pseudo)`.
    pub histogram: Vec<f64>,
}

impl CorrDist {
    pub fn new(
        trade_date: NaiveDate,
        coefficients: Vec<f64>,
        grid: BinGrid,
        pseudo_count: f64,
    ) -> Result<Self, CouplingError> {
        if grid.bins == 0 {
            return Err(CouplingError::InvalidHistogram("bin count must be positive".into()));
        }
        if !(pseudo_count.is_finite() && pseudo_count >= 0.0) {
            return Err(CouplingError::InvalidHistogram(format!("pseudo-count {pseudo_count} must be ≥ 0")));
        }
        if let Some(bad) = coefficients.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
            return Err(CouplingError::InvalidHistogram(format!("coefficient {bad} outside [-1, 1]")));
        }
        let total = coefficients.len() as f64 + grid.bins as f64 * pseudo_count;
        if total <= 0.0 {
            return Err(CouplingError::InvalidHistogram(format!("empty distribution for {trade_date}")));
        }
        let mut counts = vec![0usize; grid.bins];
        for &r in &coefficients {
            counts[grid.bin_of(r)] += 1;
        }
        let histogram = counts.iter().map(|&c| (c as f64 + pseudo_count) / total).collect();
        Ok(CorrDist { trade_date, coefficients, grid, pseudo_count, histogram })
    }

    pub fn n_stocks(&self) -> usize {
        self.coefficients.len()
    }
}

/// `Σ Q_today · ln(Q_today / Q_yesterday)`, natural log.
pub fn kl_divergence(today: &CorrDist, yesterday: &CorrDist) -> Result<f64, CouplingError> {
    if today.grid != yesterday.grid {
        return Err(CouplingError::GridMismatch { left: today.grid.bins, right: yesterday.grid.bins });
    }
    let mut kl = 0.0;
    for (&p, &q) in today.histogram.iter().zip(&yesterday.histogram) {
        if p > 0.0 {
            if q == 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += p * (p / q).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// Day-over-day divergences for date-ordered distributions; the first day has none.
pub fn kl_chain(dists: &[CorrDist]) -> Result<Vec<(NaiveDate, f64)>, CouplingError> {
    dists.windows(2).map(|w| Ok((w[1].trade_date, kl_divergence(&w[1], &w[0])?))).collect()
}

/// Builds each day's correlation distribution from the panel and per-stock log-returns.
pub fn daily_corr_dists(
    panel: &PolarityPanel,
    returns: &BTreeMap<StockId, ReturnSeries>,
    grid: BinGrid,
    pseudo_count: f64,
    min_bars: usize,
) -> Result<Vec<CorrDist>, CouplingError> {
    let mut by_day: BTreeMap<NaiveDate, Vec<(StockId, Vec<Option<f64>>)>> = BTreeMap::new();
    for (k, row) in panel.rows() {
        by_day.entry(k.date).or_default().push((k.stock, row.polarities()));
    }
    let days: Vec<_> = by_day.into_iter().collect();
    days.par_iter()
        .map(|(date, rows)| {
            let coefficients = rows
                .iter()
                .filter_map(|(stock, pol)| {
                    let rets = returns.get(stock)?.intraday_log.get(date)?;
                    stock_day_correlation(pol, rets, min_bars)
                })
                .collect();
            CorrDist::new(*date, coefficients, grid, pseudo_count)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(i: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 5, 4).unwrap() + chrono::Days::new(i)
    }

    #[test]
    fn binning_edges() {
        let g = BinGrid::default();
        assert_eq!(g.bin_of(-1.0), 0);
        assert_eq!(g.bin_of(1.0), 39);
        assert_eq!(g.bin_of(0.0), 20);
        assert_eq!(g.bin_of(-0.95), 1);
        assert_eq!(g.lower(20), 0.0);
    }

    #[test]
    fn histogram_normalized() {
        let d = CorrDist::new(day(0), vec![0.1, 0.2, -0.9, 1.0], BinGrid::default(), 0.5).unwrap();
        assert!((d.histogram.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(CorrDist::new(day(0), vec![1.5], BinGrid::default(), 0.5).is_err());
        assert!(CorrDist::new(day(0), vec![], BinGrid::default(), 0.0).is_err());
        assert!(CorrDist::new(day(0), vec![], BinGrid { bins: 0 }, 0.5).is_err());
        // no coefficients: pseudo-counts alone give the uniform distribution
        let u = CorrDist::new(day(0), vec![], BinGrid::default(), 0.5).unwrap();
        assert!(u.histogram.iter().all(|&p| (p - 1.0 / 40.0).abs() < 1e-15));
    }

    #[test]
    fn identity_and_mismatch() {
        let a = CorrDist::new(day(0), vec![0.1, 0.5, -0.3], BinGrid::default(), 0.5).unwrap();
        assert_eq!(kl_divergence(&a, &a).unwrap(), 0.0);
        let b = CorrDist::new(day(1), vec![0.1], BinGrid { bins: 20 }, 0.5).unwrap();
        assert!(matches!(kl_divergence(&a, &b), Err(CouplingError::GridMismatch { .. })));
    }

    #[test]
    fn concentrated_vs_uniform() {
        let uniform: Vec<f64> = (0..4000).map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / 4000.0).collect();
        let yesterday = CorrDist::new(day(0), uniform, BinGrid::default(), 0.5).unwrap();
        let today = CorrDist::new(day(1), vec![0.42; 1000], BinGrid::default(), 0.5).unwrap();
        assert!(kl_divergence(&today, &yesterday).unwrap() > 0.0);
        let chain = kl_chain(&[yesterday, today]).unwrap();
        assert_eq!(chain.len(), 1);
        assert_eq!(chain[0].0, day(1));
    }

    proptest! {
        #[test]
        fn non_negative_and_zero_iff_identical(
            a in prop::collection::vec(-1.0f64..=1.0, 0..200),
            b in prop::collection::vec(-1.0f64..=1.0, 0..200),
        ) {
            let p = CorrDist::new(day(1), a, BinGrid::default(), 0.5).unwrap();
            let q = CorrDist::new(day(0), b, BinGrid::default(), 0.5).unwrap();
            let kl = kl_divergence(&p, &q).unwrap();
            prop_assert!(kl >= 0.0);
            prop_assert_eq!(kl == 0.0, p.histogram == q.histogram);
        }
    }
}
