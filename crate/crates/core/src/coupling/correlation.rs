use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use csv::ByteRecord;
use serde::Serialize;

use super::CouplingError;
use crate::market_data::{parse_date, IngestError};
use crate::period::{Phase, PhaseBounds};
use crate::polarity::MarketPolaritySeries;
use crate::stats::pearson;

pub const DEFAULT_MIN_ALIGNED_BARS: usize = 30;
pub const MIN_EMOTION_DAYS: usize = 3;

fn aligned(x: &[Option<f64>], y: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    x.iter().zip(y).filter_map(|(a, b)| Some(((*a)?, (*b)?))).unzip()
}

/// Pearson r between a stock-day's polarity and log-return rows, over bars
/// where both exist. `None` below `min_bars` aligned bars or for a constant side.
pub fn stock_day_correlation(polarity: &[Option<f64>], returns: &[Option<f64>], min_bars: usize) -> Option<f64> {
    let (x, y) = aligned(polarity, returns);
    if x.len() < min_bars.max(2) {
        return None;
    }
    pearson(&x, &y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarketCorrelation {
    pub r: f64,
    pub n: usize,
}

/// Pearson r between market polarity and the index's intraday change over
/// every minute where both are present.
pub fn market_correlation(
    market: &MarketPolaritySeries,
    index_pct: &BTreeMap<NaiveDate, Vec<Option<f64>>>,
) -> Result<MarketCorrelation, CouplingError> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (d, m) in market {
        if let Some(idx) = index_pct.get(d) {
            let (a, b) = aligned(m, idx);
            x.extend(a);
            y.extend(b);
        }
    }
    if x.len() < 2 {
        return Err(CouplingError::Degenerate(format!("only {} aligned minutes", x.len())));
    }
    let r = pearson(&x, &y).ok_or_else(|| CouplingError::Degenerate("a series is constant".into()))?;
    Ok(MarketCorrelation { r, n: x.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodCorrelation {
    pub label: String,
    pub n_days: usize,
    pub r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmotionCorrelation {
    pub overall: PeriodCorrelation,
    pub phases: Vec<PeriodCorrelation>,
}

fn period_corr(label: &str, pairs: &[(f64, f64)]) -> PeriodCorrelation {
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    PeriodCorrelation {
        label: label.into(),
        n_days: pairs.len(),
        r: if pairs.len() < MIN_EMOTION_DAYS { None } else { pearson(&x, &y) },
    }
}

/// Correlates the daily polarity at the index low with the external
/// joy-to-fear ratio, overall and per market phase.
pub fn emotion_correlation(
    daily_polarity: &BTreeMap<NaiveDate, f64>,
    rjf: &BTreeMap<NaiveDate, f64>,
    bounds: &PhaseBounds,
) -> EmotionCorrelation {
    let joined: Vec<(NaiveDate, f64, f64)> =
        daily_polarity.iter().filter_map(|(d, &p)| rjf.get(d).map(|&e| (*d, p, e))).collect();
    let all: Vec<(f64, f64)> = joined.iter().map(|&(_, p, e)| (p, e)).collect();
    let phases = Phase::ALL
        .iter()
        .map(|&ph| {
            let sub: Vec<(f64, f64)> =
                joined.iter().filter(|(d, _, _)| bounds.phase_of(*d) == ph).map(|&(_, p, e)| (p, e)).collect();
            period_corr(ph.label(), &sub)
        })
        .collect();
    EmotionCorrelation { overall: period_corr("all", &all), phases }
}

/// Reads `(date, rjf_value)` rows; values must be positive.
pub fn read_emotion<R: Read>(reader: R, delimiter: u8) -> Result<BTreeMap<NaiveDate, f64>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).has_headers(false).flexible(true).from_reader(reader);
    let mut row = ByteRecord::new();
    if !rdr.read_byte_record(&mut row).map_err(|e| IngestError::Schema(e.to_string()))? {
        return Err(IngestError::Schema("emotion series: empty file".into()));
    }
    let col = |name: &str| {
        row.iter()
            .position(|h| h.trim_ascii() == name.as_bytes())
            .ok_or_else(|| IngestError::Schema(format!("emotion series: missing column '{name}'")))
    };
    let (di, vi) = (col("date")?, col("rjf_value")?);
    let mut out = BTreeMap::new();
    loop {
        if !rdr.read_byte_record(&mut row).map_err(|e| IngestError::Schema(e.to_string()))? {
            break;
        }
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |reason: String| IngestError::Row { what: "emotion series", line, reason };
        let date = parse_date(row.get(di).unwrap_or_default().trim_ascii()).map_err(|e| bad(e.to_string()))?;
        let v: f64 = std::str::from_utf8(row.get(vi).unwrap_or_default())
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("rjf_value is not a number".into()))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(bad(format!("rjf_value must be positive, got {v}")));
        }
        if out.insert(date, v).is_some() {
            return Err(bad(format!("duplicate date {date}")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stock_day_edges() {
        let x: Vec<Option<f64>> = (0..40).map(|i| Some((i as f64 * 0.37).sin())).collect();
        assert_eq!(stock_day_correlation(&x, &x, 30), Some(1.0));
        let neg: Vec<Option<f64>> = x.iter().map(|v| v.map(|a| -a)).collect();
        assert_eq!(stock_day_correlation(&x, &neg, 30), Some(-1.0));
        let mut sparse = x.clone();
        for v in sparse.iter_mut().take(11) {
            *v = None;
        }
        assert_eq!(stock_day_correlation(&sparse, &x, 30), None);
        assert!(stock_day_correlation(&sparse, &x, 29).is_some());
        assert_eq!(stock_day_correlation(&x, &vec![Some(0.0); 40], 30), None);
    }

    #[test]
    fn market_affine_relation() {
        let d: NaiveDate = "2015-05-08".parse().unwrap();
        let m: Vec<Option<f64>> = (0..237).map(|i| Some(((i * 7919) % 101) as f64 / 100.0 - 0.5)).collect();
        let idx: Vec<Option<f64>> = m.iter().map(|v| v.map(|p| -0.03 * p + 0.01)).collect();
        let market: MarketPolaritySeries = [(d, m.clone())].into();
        let c = market_correlation(&market, &[(d, idx)].into()).unwrap();
        assert!((c.r + 1.0).abs() < 1e-12);
        assert_eq!(c.n, 237);
        let flat: BTreeMap<_, _> = [(d, vec![Some(0.0); 237])].into();
        assert!(market_correlation(&market, &flat).is_err());
        assert!(market_correlation(&market, &BTreeMap::new()).is_err());
    }

    #[test]
    fn emotion_join_and_phases() {
        let bounds = PhaseBounds::default();
        let start: NaiveDate = "2015-05-04".parse().unwrap();
        let mut pol = BTreeMap::new();
        let mut rjf = BTreeMap::new();
        for i in 0..90 {
            let d = start + chrono::Days::new(i);
            let p = ((i * 37) % 17) as f64 / 17.0 - 0.3;
            pol.insert(d, p);
            if i % 10 != 0 {
                rjf.insert(d, (-p).exp());
            }
        }
        let e = emotion_correlation(&pol, &rjf, &bounds);
        assert_eq!(e.overall.n_days, 81);
        assert!(e.overall.r.unwrap() < -0.95);
        assert_eq!(e.phases.len(), 3);
        assert!(e.phases.iter().all(|p| p.r.unwrap() < -0.95));

        let few: BTreeMap<_, _> = pol.iter().take(2).map(|(d, p)| (*d, *p)).collect();
        let e = emotion_correlation(&few, &rjf, &bounds);
        assert_eq!(e.overall.r, None);
    }

    #[test]
    fn emotion_file() {
        let s = "date,rjf_value\n2015-05-04,1.2\n2015-05-05,0.8\n";
        let m = read_emotion(s.as_bytes(), b',').unwrap();
        assert_eq!(m.len(), 2);
        assert!(read_emotion("date,rjf_value\n2015-05-04,-1\n".as_bytes(), b',').is_err());
        assert!(read_emotion("day,value\n".as_bytes(), b',').is_err());
    }
}
