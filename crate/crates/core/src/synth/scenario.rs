use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::market_data::{Bar, BARS_PER_DAY};

pub const DEFAULT_INDEX_ID: &str = "399001";

/// How participant counts per side and bar are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountModel {
    /// Independent Poisson draws with the configured means.
    #[default]
    Poisson,
    /// The rates, rounded, used as exact counts.
    Fixed,
}

/// Order flow and price response over a block of dates and bars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSpec {
    pub name: String,
    pub buy_rate: f64,
    pub sell_rate: f64,
    #[serde(default)]
    pub count_model: CountModel,
    /// Fills per participant are `1 + Poisson(extra_fills_mean)`.
    #[serde(default = "default_extra_fills")]
    pub extra_fills_mean: f64,
    /// Drift of the one-minute log-return per unit of polarity.
    #[serde(default)]
    pub coupling: f64,
    #[serde(default = "default_return_sigma")]
    pub return_sigma: f64,
    /// Noise multipliers for negative, zero and positive polarity minutes.
    #[serde(default = "default_sigma_by_sign")]
    pub sigma_by_sign: [f64; 3],
    /// Inclusive date range; absent bounds are open.
    #[serde(default)]
    pub start_date: Option<NaiveDate>,
    #[serde(default)]
    pub end_date: Option<NaiveDate>,
    /// Inclusive bar range, 1-based.
    #[serde(default = "default_first_bar")]
    pub first_bar: u16,
    #[serde(default = "default_last_bar")]
    pub last_bar: u16,
}

fn default_extra_fills() -> f64 {
    0.5
}
fn default_return_sigma() -> f64 {
    0.001
}
fn default_sigma_by_sign() -> [f64; 3] {
    [1.0; 3]
}
fn default_first_bar() -> u16 {
    1
}
fn default_last_bar() -> u16 {
    BARS_PER_DAY as u16
}

impl RegimeSpec {
    pub fn new(name: impl Into<String>, buy_rate: f64, sell_rate: f64) -> Self {
        RegimeSpec {
            name: name.into(),
            buy_rate,
            sell_rate,
            count_model: CountModel::Poisson,
            extra_fills_mean: default_extra_fills(),
            coupling: 0.0,
            return_sigma: default_return_sigma(),
            sigma_by_sign: default_sigma_by_sign(),
            start_date: None,
            end_date: None,
            first_bar: 1,
            last_bar: BARS_PER_DAY as u16,
        }
    }

    pub fn covers(&self, date: NaiveDate, bar: Bar) -> bool {
        self.start_date.is_none_or(|s| date >= s)
            && self.end_date.is_none_or(|e| date <= e)
            && (self.first_bar..=self.last_bar).contains(&bar.get())
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Spec(format!("regime '{}': {m}", self.name)));
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.buy_rate) || !finite_nonneg(self.sell_rate) {
            return bad("rates must be finite and ≥ 0".into());
        }
        if !finite_nonneg(self.extra_fills_mean) || !finite_nonneg(self.return_sigma) {
            return bad("extra_fills_mean and return_sigma must be ≥ 0".into());
        }
        if !self.coupling.is_finite() || !self.sigma_by_sign.iter().all(|&s| finite_nonneg(s)) {
            return bad("coupling and sigma_by_sign must be finite, multipliers ≥ 0".into());
        }
        if self.first_bar < 1 || self.last_bar as usize > BARS_PER_DAY || self.first_bar > self.last_bar {
            return bad(format!("bar range {}..={} outside 1..={BARS_PER_DAY}", self.first_bar, self.last_bar));
        }
        if let (Some(s), Some(e)) = (self.start_date, self.end_date) {
            if s > e {
                return bad(format!("start {s} after end {e}"));
            }
        }
        Ok(())
    }
}

/// Index level response to lagged market polarity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexSpec {
    pub id: String,
    pub initial_level: f64,
    /// Log-return per unit of market polarity `lag` bars earlier.
    pub coupling: f64,
    pub lag: usize,
    pub sigma: f64,
    /// Forces the day's low to this bar.
    pub planted_min_bar: Option<u16>,
}

impl Default for IndexSpec {
    fn default() -> Self {
        IndexSpec {
            id: DEFAULT_INDEX_ID.into(),
            initial_level: 3000.0,
            coupling: -0.001,
            lag: 0,
            sigma: 0.0005,
            planted_min_bar: None,
        }
    }
}

/// Complete generator input; deserializable from a key–value config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub n_stocks: usize,
    pub start_date: NaiveDate,
    pub n_days: usize,
    #[serde(default = "default_initial_price")]
    pub initial_price: f64,
    #[serde(default)]
    pub index: IndexSpec,
    pub regimes: Vec<RegimeSpec>,
}

fn default_initial_price() -> f64 {
    10.0
}

impl ScenarioSpec {
    pub fn single(regime: RegimeSpec, n_stocks: usize, n_days: usize, seed: u64) -> Self {
        ScenarioSpec {
            seed,
            n_stocks,
            start_date: NaiveDate::from_ymd_opt(2015, 5, 4).expect("valid date"),
            n_days,
            initial_price: default_initial_price(),
            index: IndexSpec::default(),
            regimes: vec![regime],
        }
    }

    /// Weekdays from `start_date` on.
    pub fn trading_dates(&self) -> Vec<NaiveDate> {
        use chrono::Datelike;
        self.start_date
            .iter_days()
            .filter(|d| d.weekday().number_from_monday() <= 5)
            .take(self.n_days)
            .collect()
    }

    pub fn regime_at(&self, date: NaiveDate, bar: Bar) -> Option<&RegimeSpec> {
        self.regimes.iter().find(|r| r.covers(date, bar))
    }

    /// Checks parameter ranges and that exactly one regime covers every
    /// generated (date, bar).
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_stocks == 0 || self.n_days == 0 {
            return Err(SynthError::Spec("n_stocks and n_days must be positive".into()));
        }
        if self.n_stocks > 999_999 {
            return Err(SynthError::Spec("n_stocks must be below 10^6".into()));
        }
        if !(self.initial_price.is_finite() && self.initial_price > 0.0) {
            return Err(SynthError::Spec("initial_price must be positive".into()));
        }
        let ix = &self.index;
        if !(ix.initial_level.is_finite() && ix.initial_level > 0.0 && ix.sigma.is_finite() && ix.sigma >= 0.0)
            || !ix.coupling.is_finite()
            || ix.lag >= BARS_PER_DAY
        {
            return Err(SynthError::Spec("index: level > 0, sigma ≥ 0, lag < bars per day".into()));
        }
        if let Some(b) = ix.planted_min_bar {
            Bar::new(b).ok_or_else(|| SynthError::Spec(format!("index: planted_min_bar {b} off grid")))?;
        }
        crate::market_data::StockId::from_bytes(ix.id.as_bytes())
            .map_err(|e| SynthError::Spec(format!("index id: {e}")))?;
        for r in &self.regimes {
            r.validate()?;
        }
        for d in self.trading_dates() {
            for bar in Bar::all() {
                let mut hits = self.regimes.iter().filter(|r| r.covers(d, bar));
                match (hits.next(), hits.next()) {
                    (None, _) => return Err(SynthError::Spec(format!("no regime covers {d} bar {}", bar.get()))),
                    (Some(a), Some(b)) => {
                        return Err(SynthError::Spec(format!(
                            "regimes '{}' and '{}' overlap at {d} bar {}",
                            a.name,
                            b.name,
                            bar.get()
                        )))
                    }
                    _ => {}
                }
            }
        }
        if self.regimes.iter().all(|r| r.buy_rate == 0.0 && r.sell_rate == 0.0) {
            return Err(SynthError::Infeasible("every regime has zero participation".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_checks() {
        let mut s = ScenarioSpec::single(RegimeSpec::new("a", 1.0, 1.0), 2, 3, 0);
        assert!(s.validate().is_ok());
        assert_eq!(s.trading_dates().len(), 3);

        let mut am = RegimeSpec::new("am", 1.0, 1.0);
        am.last_bar = 120;
        let mut pm = RegimeSpec::new("pm", 2.0, 1.0);
        pm.first_bar = 121;
        s.regimes = vec![am.clone(), pm];
        assert!(s.validate().is_ok());

        s.regimes = vec![am.clone()];
        assert!(matches!(s.validate(), Err(SynthError::Spec(m)) if m.contains("no regime")));
        s.regimes = vec![am, RegimeSpec::new("all", 1.0, 1.0)];
        assert!(matches!(s.validate(), Err(SynthError::Spec(m)) if m.contains("overlap")));

        s.regimes = vec![RegimeSpec::new("dead", 0.0, 0.0)];
        assert!(matches!(s.validate(), Err(SynthError::Infeasible(_))));
        s.regimes = vec![RegimeSpec::new("neg", -1.0, 1.0)];
        assert!(s.validate().is_err());
    }

    #[test]
    fn weekdays_only() {
        let s = ScenarioSpec::single(RegimeSpec::new("a", 1.0, 1.0), 1, 6, 0);
        let d = s.trading_dates();
        // 2015-05-04 is a Monday
        assert_eq!(d[5], NaiveDate::from_ymd_opt(2015, 5, 11).unwrap());
    }
}
