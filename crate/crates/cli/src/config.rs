use std::path::{Path, PathBuf};

use polarity_core::coupling::{ReturnMode, DEFAULT_BINS, DEFAULT_MAX_LAG, DEFAULT_MIN_ALIGNED_BARS, DEFAULT_MIN_OBS, DEFAULT_PSEUDO_COUNT};
use polarity_core::market_data::{Schema, BARS_PER_DAY};
use polarity_core::period::PhaseBounds;
use polarity_core::polarity::MantimeMode;
use polarity_core::synth::{ScenarioSpec, DEFAULT_INDEX_ID};
use polarity_core::tailfit::{DEFAULT_MIN_SAMPLES, DEFAULT_XMIN_QUANTILE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub transactions: Option<PathBuf>,
    /// Binary transaction cache; preferred over `transactions` when set.
    pub cache: Option<PathBuf>,
    pub eod: Option<PathBuf>,
    pub intraday: Option<PathBuf>,
    pub emotion: Option<PathBuf>,
    pub capitalization: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Analysis {
    pub mantime_mode: MantimeMode,
    pub index_id: String,
    pub bins: usize,
    pub pseudo_count: f64,
    pub min_aligned_bars: usize,
    pub min_fit_samples: usize,
    pub xmin_quantile: f64,
    pub max_lag: usize,
    pub granger_min_obs: usize,
    pub granger_alpha: f64,
    pub return_mode: ReturnMode,
}

impl Default for Analysis {
    fn default() -> Self {
        Analysis {
            mantime_mode: MantimeMode::PerBar,
            index_id: DEFAULT_INDEX_ID.into(),
            bins: DEFAULT_BINS,
            pseudo_count: DEFAULT_PSEUDO_COUNT,
            min_aligned_bars: DEFAULT_MIN_ALIGNED_BARS,
            min_fit_samples: DEFAULT_MIN_SAMPLES,
            xmin_quantile: DEFAULT_XMIN_QUANTILE,
            max_lag: DEFAULT_MAX_LAG,
            granger_min_obs: DEFAULT_MIN_OBS,
            granger_alpha: 0.05,
            return_mode: ReturnMode::VsPrevMinute,
        }
    }
}

/// Everything a run depends on. Loaded from TOML, then overridden by flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub input: Inputs,
    pub schema: Schema,
    pub periods: PhaseBounds,
    pub analysis: Analysis,
    pub synth: Option<ScenarioSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: PathBuf::from("out"),
            seed: 1,
            input: Inputs::default(),
            schema: Schema::default(),
            periods: PhaseBounds::default(),
            analysis: Analysis::default(),
            synth: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// SHA-256 of the canonical TOML form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let text = toml::to_string(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let a = &self.analysis;
        let bad = |m: String| Err(CliError::Config(m));
        if !(1..=10_000).contains(&a.bins) {
            return bad(format!("analysis.bins = {} outside 1..=10000", a.bins));
        }
        if !(a.pseudo_count.is_finite() && a.pseudo_count >= 0.0) {
            return bad(format!("analysis.pseudo_count = {} must be ≥ 0", a.pseudo_count));
        }
        if !(2..=BARS_PER_DAY).contains(&a.min_aligned_bars) {
            return bad(format!("analysis.min_aligned_bars = {} outside 2..={BARS_PER_DAY}", a.min_aligned_bars));
        }
        if a.min_fit_samples < 2 {
            return bad("analysis.min_fit_samples must be ≥ 2".into());
        }
        if !(a.xmin_quantile > 0.0 && a.xmin_quantile <= 1.0) {
            return bad(format!("analysis.xmin_quantile = {} outside (0, 1]", a.xmin_quantile));
        }
        if !(1..=60).contains(&a.max_lag) {
            return bad(format!("analysis.max_lag = {} outside 1..=60", a.max_lag));
        }
        if a.granger_min_obs < 10 || a.granger_min_obs >= BARS_PER_DAY {
            return bad(format!("analysis.granger_min_obs = {} outside 10..{BARS_PER_DAY}", a.granger_min_obs));
        }
        if !(a.granger_alpha > 0.0 && a.granger_alpha < 1.0) {
            return bad(format!("analysis.granger_alpha = {} outside (0, 1)", a.granger_alpha));
        }
        if !self.periods.is_valid() {
            return bad("periods: pre_crash_end must precede crash_end".into());
        }
        if !(self.schema.max_malformed_fraction >= 0.0 && self.schema.max_malformed_fraction <= 1.0) {
            return bad("schema.max_malformed_fraction outside [0, 1]".into());
        }
        self.schema.delimiter_byte().map_err(CliError::from)?;
        a.index_id.parse::<polarity_core::market_data::StockId>().map_err(|e| CliError::Config(format!("analysis.index_id: {e}")))?;
        let i = &self.input;
        for (name, p) in [
            ("transactions", &i.transactions),
            ("cache", &i.cache),
            ("eod", &i.eod),
            ("intraday", &i.intraday),
            ("emotion", &i.emotion),
            ("capitalization", &i.capitalization),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return bad(format!("input.{name}: {} does not exist", p.display()));
                }
            }
        }
        Ok(())
    }

    /// Resolves an input that a command requires and checks it exists.
    pub fn require(&self, name: &str, path: &Option<PathBuf>) -> Result<PathBuf, CliError> {
        let p = path.clone().ok_or_else(|| CliError::Config(format!("input.{name} is required for this command")))?;
        if !p.exists() {
            return Err(CliError::Config(format!("input.{name}: {} does not exist", p.display())));
        }
        Ok(p)
    }
}
