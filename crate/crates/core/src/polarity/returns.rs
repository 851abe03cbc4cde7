use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;

use super::PolarityError;
use crate::market_data::{Bar, DayBars, EodTable, IntradayTable, StockId, BARS_PER_DAY};

/// Daily price-limit band, as a fraction of the prior close.
pub const LIMIT_FRACTION: f64 = 0.10;
/// Slack for tick rounding when classifying a move as a limit hit.
pub const LIMIT_TOLERANCE: f64 = 0.0015;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitFlag {
    /// Closed at (within tick rounding of) the ±10% band.
    AtLimit,
    /// Moved further than the band allows; a data warning, not an error.
    BeyondLimit,
}

fn limit_flag(pct: f64) -> Option<LimitFlag> {
    let a = pct.abs();
    if a > LIMIT_FRACTION + LIMIT_TOLERANCE {
        Some(LimitFlag::BeyondLimit)
    } else if a >= LIMIT_FRACTION - LIMIT_TOLERANCE {
        Some(LimitFlag::AtLimit)
    } else {
        None
    }
}

/// Return series for one stock or index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReturnSeries {
    pub id: Option<StockId>,
    /// Close-to-close percentage change; the first sample day has none.
    pub daily_pct: BTreeMap<NaiveDate, f64>,
    pub limit_flags: BTreeMap<NaiveDate, LimitFlag>,
    /// `ln p_t − ln p_{t−1}` within the day; bar 1 and gaps are `None`.
    pub intraday_log: BTreeMap<NaiveDate, Vec<Option<f64>>>,
    /// `(p_t − close_{d−1}) / close_{d−1}`; `None` without a prior close.
    pub intraday_pct_vs_prev_close: BTreeMap<NaiveDate, Vec<Option<f64>>>,
}

fn check(id: StockId, date: NaiveDate, bar: Option<Bar>, value: f64) -> Result<f64, PolarityError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(PolarityError::NonPositivePrice { id, date, bar, value })
    }
}

/// Builds all three return series for one id from its closes and bar prices.
pub fn returns(
    id: StockId,
    eod: &BTreeMap<NaiveDate, f64>,
    intraday: &BTreeMap<NaiveDate, DayBars>,
) -> Result<ReturnSeries, PolarityError> {
    let mut out = ReturnSeries { id: Some(id), ..Default::default() };
    let mut prev: Option<f64> = None;
    for (&d, &close) in eod {
        let close = check(id, d, None, close)?;
        if let Some(p) = prev {
            let pct = (close - p) / p;
            out.daily_pct.insert(d, pct);
            if let Some(flag) = limit_flag(pct) {
                out.limit_flags.insert(d, flag);
            }
        }
        prev = Some(close);
    }

    for (&d, bars) in intraday {
        let mut logs = vec![None; BARS_PER_DAY];
        let mut pcts = vec![None; BARS_PER_DAY];
        let prior_close = eod.range(..d).next_back().map(|(_, &c)| c);
        let mut last: Option<f64> = None;
        for (slot, price) in bars.iter().enumerate().take(BARS_PER_DAY) {
            let price = match price {
                Some(p) => Some(check(id, d, Bar::from_slot(slot), *p)?),
                None => None,
            };
            if let (Some(p), Some(q)) = (price, last) {
                logs[slot] = Some(p.ln() - q.ln());
            }
            if let (Some(p), Some(c)) = (price, prior_close) {
                pcts[slot] = Some((p - c) / c);
            }
            last = price;
        }
        out.intraday_log.insert(d, logs);
        out.intraday_pct_vs_prev_close.insert(d, pcts);
    }
    Ok(out)
}

/// Return series for every id present in either table.
pub fn returns_all(eod: &EodTable, intraday: &IntradayTable) -> Result<BTreeMap<StockId, ReturnSeries>, PolarityError> {
    let empty_eod = BTreeMap::new();
    let empty_intra = BTreeMap::new();
    let ids: std::collections::BTreeSet<StockId> = eod.keys().chain(intraday.keys()).copied().collect();
    ids.into_iter()
        .map(|id| {
            let r = returns(id, eod.get(&id).unwrap_or(&empty_eod), intraday.get(&id).unwrap_or(&empty_intra))?;
            Ok((id, r))
        })
        .collect()
}
