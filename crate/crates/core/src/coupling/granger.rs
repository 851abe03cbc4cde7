use std::collections::BTreeMap;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::polarity::{MarketPolaritySeries, ReturnSeries};

pub const DEFAULT_MAX_LAG: usize = 5;
pub const DEFAULT_MIN_OBS: usize = 60;
pub const SIGNIFICANCE: f64 = 0.05;

const RANK_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    PolarityToReturn,
    ReturnToPolarity,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::PolarityToReturn, Direction::ReturnToPolarity];

    pub fn label(self) -> &'static str {
        match self {
            Direction::PolarityToReturn => "polarity->return",
            Direction::ReturnToPolarity => "return->polarity",
        }
    }
}

/// Which index return series is paired with market polarity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReturnMode {
    /// One-minute log-return.
    #[default]
    VsPrevMinute,
    /// Percentage change against the previous close.
    VsPrevClose,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrangerConfig {
    pub max_lag: usize,
    pub min_obs: usize,
    pub alpha: f64,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        GrangerConfig { max_lag: DEFAULT_MAX_LAG, min_obs: DEFAULT_MIN_OBS, alpha: SIGNIFICANCE }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrangerTest {
    pub lag: usize,
    pub f_stat: f64,
    pub p_value: f64,
    pub n_obs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SkipReason {
    TooShort { n: usize, min: usize },
    Collinear,
    PerfectFit,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::TooShort { n, min } => write!(f, "{n} usable rows < {min}"),
            SkipReason::Collinear => f.write_str("collinear regressors"),
            SkipReason::PerfectFit => f.write_str("zero residual variance"),
        }
    }
}

/// Residual sum of squares of the least-squares fit, or `None` if the
/// design matrix is rank-deficient.
fn ols_rss(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<f64> {
    let mut xs = x.clone();
    for mut c in xs.column_iter_mut() {
        let norm = c.norm();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        c /= norm;
    }
    let (q, r) = xs.clone().qr().unpack();
    if (0..r.ncols()).any(|i| r[(i, i)].abs() < RANK_TOL) {
        return None;
    }
    let beta = r.solve_upper_triangular(&(q.transpose() * y))?;
    Some((y - xs * beta).norm_squared())
}

struct Rows {
    y: Vec<f64>,
    y_lags: Vec<Vec<f64>>,
    x_lags: Vec<Vec<f64>>,
}

/// Rows `t` where `effect[t]` and both series at lags `1..=max_lag` are all
/// present; every candidate lag order is fitted on this same sample.
fn build_rows(cause: &[Option<f64>], effect: &[Option<f64>], max_lag: usize) -> Rows {
    let mut rows = Rows { y: Vec::new(), y_lags: Vec::new(), x_lags: Vec::new() };
    let n = cause.len().min(effect.len());
    for t in max_lag..n {
        let Some(y) = effect[t] else { continue };
        let yl: Option<Vec<f64>> = (1..=max_lag).map(|l| effect[t - l]).collect();
        let xl: Option<Vec<f64>> = (1..=max_lag).map(|l| cause[t - l]).collect();
        if let (Some(yl), Some(xl)) = (yl, xl) {
            rows.y.push(y);
            rows.y_lags.push(yl);
            rows.x_lags.push(xl);
        }
    }
    rows
}

fn design(rows: &Rows, p: usize, with_cause: bool) -> DMatrix<f64> {
    let k = 1 + p + if with_cause { p } else { 0 };
    DMatrix::from_fn(rows.y.len(), k, |i, j| match j {
        0 => 1.0,
        j if j <= p => rows.y_lags[i][j - 1],
        j => rows.x_lags[i][j - p - 1],
    })
}

/// Tests whether `cause` helps predict `effect` beyond `effect`'s own lags.
/// The lag order minimizes BIC of the unrestricted model over `1..=max_lag`.
pub fn granger_test(
    cause: &[Option<f64>],
    effect: &[Option<f64>],
    cfg: &GrangerConfig,
) -> Result<GrangerTest, SkipReason> {
    let max_lag = cfg.max_lag.max(1);
    let rows = build_rows(cause, effect, max_lag);
    let n = rows.y.len();
    if n < cfg.min_obs.max(2 * max_lag + 2) {
        return Err(SkipReason::TooShort { n, min: cfg.min_obs });
    }
    let y = DVector::from_column_slice(&rows.y);
    let mut best: Option<(f64, usize, f64)> = None;
    for p in 1..=max_lag {
        let rss = ols_rss(&design(&rows, p, true), &y).ok_or(SkipReason::Collinear)?;
        if rss <= 0.0 {
            return Err(SkipReason::PerfectFit);
        }
        let k = (2 * p + 1) as f64;
        let bic = n as f64 * (rss / n as f64).ln() + k * (n as f64).ln();
        if best.is_none_or(|(b, _, _)| bic < b) {
            best = Some((bic, p, rss));
        }
    }
    let (_, p, rss_u) = best.expect("max_lag ≥ 1");
    let rss_r = ols_rss(&design(&rows, p, false), &y).ok_or(SkipReason::Collinear)?;
    let df2 = n - 2 * p - 1;
    let f_stat = ((rss_r - rss_u).max(0.0) / p as f64) / (rss_u / df2 as f64);
    let dist = FisherSnedecor::new(p as f64, df2 as f64).expect("positive degrees of freedom");
    Ok(GrangerTest { lag: p, f_stat, p_value: dist.sf(f_stat), n_obs: n })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrangerDayResult {
    pub trade_date: NaiveDate,
    pub direction: Direction,
    pub lag: usize,
    pub f_stat: f64,
    pub p_value: f64,
    pub reject: bool,
    pub n_obs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedDay {
    pub trade_date: NaiveDate,
    pub direction: Direction,
    pub reason: SkipReason,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionSummary {
    pub direction: Direction,
    pub testable: usize,
    pub rejected: usize,
    pub skipped: usize,
    /// Share of testable days rejecting the null; `None` with no testable day.
    pub pass_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrangerReport {
    pub summaries: Vec<DirectionSummary>,
    pub days: Vec<GrangerDayResult>,
    pub skipped: Vec<SkippedDay>,
}

/// Per-day tests in both directions; `days` maps date to `(polarity, return)`.
pub fn granger_pass_rates(
    days: &BTreeMap<NaiveDate, (Vec<Option<f64>>, Vec<Option<f64>>)>,
    cfg: &GrangerConfig,
) -> GrangerReport {
    let jobs: Vec<(NaiveDate, Direction)> =
        days.keys().flat_map(|d| Direction::BOTH.map(|dir| (*d, dir))).collect();
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|&(d, dir)| {
            let (pol, ret) = &days[&d];
            let res = match dir {
                Direction::PolarityToReturn => granger_test(pol, ret, cfg),
                Direction::ReturnToPolarity => granger_test(ret, pol, cfg),
            };
            (d, dir, res)
        })
        .collect();
    let mut report = GrangerReport { summaries: Vec::new(), days: Vec::new(), skipped: Vec::new() };
    for (trade_date, direction, res) in outcomes {
        match res {
            Ok(t) => report.days.push(GrangerDayResult {
                trade_date,
                direction,
                lag: t.lag,
                f_stat: t.f_stat,
                p_value: t.p_value,
                reject: t.p_value < cfg.alpha,
                n_obs: t.n_obs,
            }),
            Err(reason) => report.skipped.push(SkippedDay { trade_date, direction, reason }),
        }
    }
    report.summaries = Direction::BOTH
        .iter()
        .map(|&direction| {
            let tested: Vec<_> = report.days.iter().filter(|r| r.direction == direction).collect();
            let rejected = tested.iter().filter(|r| r.reject).count();
            DirectionSummary {
                direction,
                testable: tested.len(),
                rejected,
                skipped: report.skipped.iter().filter(|s| s.direction == direction).count(),
                pass_rate: (!tested.is_empty()).then(|| rejected as f64 / tested.len() as f64),
            }
        })
        .collect();
    report
}

/// Pairs market polarity with the index returns selected by `mode`.
pub fn granger_market(
    market: &MarketPolaritySeries,
    index: &ReturnSeries,
    mode: ReturnMode,
    cfg: &GrangerConfig,
) -> GrangerReport {
    let source = match mode {
        ReturnMode::VsPrevMinute => &index.intraday_log,
        ReturnMode::VsPrevClose => &index.intraday_pct_vs_prev_close,
    };
    let days = market
        .iter()
        .filter_map(|(d, pol)| source.get(d).map(|r| (*d, (pol.clone(), r.clone()))))
        .collect();
    granger_pass_rates(&days, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn detects_planted_lag() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = noise(&mut rng, 237);
        let e = noise(&mut rng, 237);
        let y: Vec<f64> = (0..237).map(|t| if t >= 2 { 0.8 * x[t - 2] + 0.3 * e[t] } else { e[t] }).collect();
        let t = granger_test(&some(&x), &some(&y), &GrangerConfig::default()).unwrap();
        assert!(t.p_value < 1e-6);
        assert!(t.lag >= 2);
        let back = granger_test(&some(&y), &some(&x), &GrangerConfig::default()).unwrap();
        assert!(back.p_value > 1e-3);
    }

    #[test]
    fn skips_short_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = noise(&mut rng, 237);
        let short = some(&x[..50]);
        assert!(matches!(
            granger_test(&short, &short, &GrangerConfig::default()),
            Err(SkipReason::TooShort { .. })
        ));
        let flat = vec![Some(0.0); 237];
        assert_eq!(granger_test(&some(&x), &flat, &GrangerConfig::default()), Err(SkipReason::Collinear));
        let mut gappy = some(&x);
        for t in (0..237).step_by(3) {
            gappy[t] = None;
        }
        assert!(granger_test(&gappy, &some(&x), &GrangerConfig::default()).is_err());
    }

    #[test]
    fn scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = noise(&mut rng, 237);
        let y: Vec<f64> = noise(&mut rng, 237).iter().zip(&x).map(|(e, x)| e + 0.2 * x).collect();
        let a = granger_test(&some(&x), &some(&y), &GrangerConfig::default()).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * 1e3 + 5.0).collect();
        let ys: Vec<f64> = y.iter().map(|v| v * 1e-4 - 2.0).collect();
        let b = granger_test(&some(&xs), &some(&ys), &GrangerConfig::default()).unwrap();
        assert_eq!(a.lag, b.lag);
        assert!((a.f_stat - b.f_stat).abs() <= 1e-8 * a.f_stat.abs().max(1.0));
    }

    #[test]
    fn pass_rate_bookkeeping() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d0: NaiveDate = "2015-05-04".parse().unwrap();
        let mut days = BTreeMap::new();
        for i in 0..4u64 {
            days.insert(d0 + chrono::Days::new(i), (some(&noise(&mut rng, 237)), some(&noise(&mut rng, 237))));
        }
        days.insert(d0 + chrono::Days::new(9), (vec![None; 237], vec![None; 237]));
        let r = granger_pass_rates(&days, &GrangerConfig::default());
        for s in &r.summaries {
            assert_eq!((s.testable, s.skipped), (4, 1));
        }
        assert_eq!(r.days.len(), 8);
    }
}
