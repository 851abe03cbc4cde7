use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use polarity_core::coupling::{
    daily_corr_dists, emotion_correlation, granger_market, impact_pairs, kl_chain, market_correlation,
    price_impact_groups, read_emotion, BinGrid, GrangerConfig, ReturnMode,
};
use polarity_core::flips::{build_flip_series, flip_stats, run_lengths, Sign, FLIP_METADATA};
use polarity_core::market_data::{
    load_eod, load_intraday, write_cache_file, BlockReader, StockId, TransactionReader, BARS_PER_DAY,
};
use polarity_core::period::Period;
use polarity_core::polarity::{
    daily_polarity_at_index_min, direction_ratios, market_polarity_series, panel_from_blocks, polarity_at_index_min,
    polarity_moments, returns_all, write_panel_csv, PanelBuilder, PolarityPanel, ReturnSeries, LIMIT_TOLERANCE,
};
use polarity_core::stats::FiveNumberSummary;
use polarity_core::synth::{self, generate, write_scenario, RegimeSpec, ScenarioSpec};
use polarity_core::tailfit::{burstiness, burstiness_tail, fit_power_law, FitConfig, FitError};
use polarity_core::verify::{self, VerifyConfig};
use rayon::prelude::*;

use crate::artifact::{num, opt, Meta, Output};
use crate::config::RunConfig;
use crate::error::CliError;

pub struct Ctx {
    pub cfg: RunConfig,
    pub hash: String,
}

type Decisions = Vec<(&'static str, String)>;

impl Ctx {
    fn out_dir(&self) -> &Path {
        &self.cfg.output_dir
    }

    fn meta(&self, command: &str, decisions: Decisions) -> Meta {
        let mode = toml::Value::try_from(self.cfg.analysis.mantime_mode).map_or_else(|_| "?".into(), |v| v.as_str().unwrap_or("?").to_string());
        let mut all: Decisions = vec![("mantime_mode", mode)];
        all.extend(decisions);
        Meta { command: command.into(), config_hash: self.hash.clone(), decisions: all }
    }

    fn load_panel(&self) -> Result<PolarityPanel, CliError> {
        let mode = self.cfg.analysis.mantime_mode;
        if self.cfg.input.cache.is_some() {
            let p = self.cfg.require("cache", &self.cfg.input.cache)?;
            return Ok(panel_from_blocks(BlockReader::open(&p)?, mode)?);
        }
        let p = self.cfg.require("transactions", &self.cfg.input.transactions)?;
        let mut rdr = TransactionReader::open(&p, &self.cfg.schema)?;
        let mut b = PanelBuilder::new(mode);
        for r in &mut rdr {
            b.push(&r?);
        }
        report_parse(rdr.stats());
        Ok(b.finish())
    }

    fn load_returns(&self) -> Result<BTreeMap<StockId, ReturnSeries>, CliError> {
        let d = self.cfg.schema.delimiter_byte()?;
        let eod = load_eod(&self.cfg.require("eod", &self.cfg.input.eod)?, d)?;
        let intraday = load_intraday(&self.cfg.require("intraday", &self.cfg.input.intraday)?, d)?;
        Ok(returns_all(&eod, &intraday)?)
    }

    fn index_id(&self) -> StockId {
        self.cfg.analysis.index_id.parse().expect("validated")
    }

    fn index<'a>(&self, rets: &'a BTreeMap<StockId, ReturnSeries>) -> Result<&'a ReturnSeries, CliError> {
        rets.get(&self.index_id())
            .ok_or_else(|| CliError::Data(format!("index {} not found in the price files", self.cfg.analysis.index_id)))
    }

    fn periods(&self) -> Vec<Period> {
        let mut v = vec![Period::all()];
        v.extend(Period::phases(&self.cfg.periods));
        v
    }

    fn fit_config(&self) -> FitConfig {
        FitConfig {
            min_samples: self.cfg.analysis.min_fit_samples,
            xmin_quantile: self.cfg.analysis.xmin_quantile,
            fixed_xmin: None,
        }
    }
}

fn report_parse(s: &polarity_core::market_data::ParseStats) {
    if s.malformed > 0 || s.off_grid > 0 {
        eprintln!("parsed {} rows: {} malformed, {} off-grid", s.rows, s.malformed, s.off_grid);
    }
}

fn date_str(d: NaiveDate) -> String {
    d.to_string()
}

fn fit_decisions(cfg: &RunConfig) -> Decisions {
    vec![
        ("xmin_selection", format!("minimum KS distance over distinct values up to quantile {}", cfg.analysis.xmin_quantile)),
        ("alpha_estimator", "discrete MLE via Hurwitz zeta, golden-section search on [1+1e-6, 50]".into()),
        ("stderr", "inverse observed Fisher information of the discrete likelihood".into()),
        ("min_samples", cfg.analysis.min_fit_samples.to_string()),
        ("burstiness", "sample mean and (n-1) standard deviation".into()),
    ]
}

fn flip_decisions() -> Decisions {
    FLIP_METADATA.iter().map(|(k, v)| (*k, v.to_string())).collect()
}

pub fn ingest(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let src = ctx.cfg.require("transactions", &ctx.cfg.input.transactions)?;
    let meta = ctx.meta("ingest", vec![("off_grid", "rows outside the 237 one-minute bars are dropped and counted".into())]);
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    let cache = ctx.out_dir().join("transactions.plab");
    let mut rdr = TransactionReader::open(&src, &ctx.cfg.schema)?;
    let built = write_cache_file(&cache, &mut rdr)?;
    let s = rdr.stats().clone();
    report_parse(&s);
    out.table(
        "ingest.csv",
        "counts of rows",
        &["rows", "records", "malformed", "off_grid", "blocks"],
        [vec![s.rows.to_string(), s.records.to_string(), s.malformed.to_string(), s.off_grid.to_string(), built.blocks.to_string()]],
    )?;
    if !s.samples.is_empty() {
        out.table(
            "malformed_samples.csv",
            "line numbers of the source file",
            &["line", "reason"],
            s.samples.iter().map(|x| vec![x.line.to_string(), x.reason.clone()]),
        )?;
    }
    out.written.push(cache);
    Ok(out.written)
}

pub fn polarity(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let panel = ctx.load_panel()?;
    let meta = ctx.meta(
        "polarity",
        vec![("std", "sample (n-1)".into()), ("kurtosis", "excess, normal = 0".into())],
    );
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    out.raw("panel.csv", "man-times counts; polarity dimensionless in [-1, 1]; NA = no trade", |w| {
        write_panel_csv(w, &panel)
    })?;
    let m = polarity_moments(&panel).ok_or_else(|| CliError::Data("panel holds no polarity values".into()))?;
    out.table(
        "moments.csv",
        "polarity dimensionless",
        &["n", "mean", "std", "excess_kurtosis"],
        [vec![m.n.to_string(), num(m.mean), num(m.std), num(m.excess_kurtosis)]],
    )?;
    Ok(out.written)
}

fn read_capitalization(path: &Path, delimiter: u8) -> Result<BTreeMap<StockId, f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Data(e.to_string()))?.clone();
    let col = |n: &str| {
        headers
            .iter()
            .position(|h| h.trim() == n)
            .ok_or_else(|| CliError::Data(format!("{}: missing column '{n}'", path.display())))
    };
    let (ii, ci) = (col("id")?, col("market_cap")?);
    let mut out = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| CliError::Data(e.to_string()))?;
        let bad = || CliError::Data(format!("{} line {}: bad row", path.display(), i + 2));
        let id: StockId = row[ii].parse().map_err(|_| bad())?;
        let cap: f64 = row[ci].trim().parse().map_err(|_| bad())?;
        if !(cap.is_finite() && cap > 0.0) {
            return Err(bad());
        }
        out.insert(id, cap);
    }
    Ok(out)
}

pub fn ratios(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let panel = ctx.load_panel()?;
    let caps = match &ctx.cfg.input.capitalization {
        Some(_) => Some(read_capitalization(
            &ctx.cfg.require("capitalization", &ctx.cfg.input.capitalization)?,
            ctx.cfg.schema.delimiter_byte()?,
        )?),
        None => None,
    };
    let meta = ctx.meta("ratios", vec![("ratio_basis", "share of non-missing minutes by polarity sign".into())]);
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    let mut rows = Vec::new();
    for stock in panel.stocks() {
        for p in ctx.periods() {
            let Ok(r) = direction_ratios(&panel, stock, &p) else { continue };
            let mut row = vec![stock.to_string(), p.label.clone(), r.n.to_string(), num(r.pos_ratio), num(r.neg_ratio), num(r.zero_ratio)];
            if let Some(c) = &caps {
                row.push(opt(c.get(&stock).copied()));
            }
            rows.push(row);
        }
    }
    let mut header = vec!["stock_id", "period", "n", "pos_ratio", "neg_ratio", "zero_ratio"];
    if caps.is_some() {
        header.push("market_cap");
    }
    out.table("ratios.csv", "ratios dimensionless; n in minutes; market_cap as supplied", &header, rows)?;
    Ok(out.written)
}

pub fn flips(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let panel = ctx.load_panel()?;
    let meta = ctx.meta("flips", flip_decisions());
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    let rows: Vec<_> = panel.rows().collect();
    let stats: Vec<_> = rows
        .par_iter()
        .map(|(k, row)| {
            let fs = build_flip_series(k.stock, k.date, &row.polarities());
            (fs.effective_length, flip_stats(&fs))
        })
        .collect();
    out.table(
        "flips_daily.csv",
        "flip_count in flips; standardized_flips per non-missing minute; depth in polarity units",
        &["stock_id", "date", "effective_length", "flip_count", "standardized_flips", "depth", "averaged_depth"],
        stats.iter().map(|(len, s)| {
            vec![
                s.stock_id.to_string(),
                date_str(s.trade_date),
                len.to_string(),
                s.flip_count.to_string(),
                num(s.standardized_flips),
                num(s.depth),
                opt(s.averaged_depth),
            ]
        }),
    )?;
    let mut by_date: BTreeMap<NaiveDate, Vec<&polarity_core::flips::DailyFlipSummary>> = BTreeMap::new();
    for (len, s) in &stats {
        if *len > 0 {
            by_date.entry(s.trade_date).or_default().push(s);
        }
    }
    out.table(
        "flips_by_date.csv",
        "cross-stock means of the daily values",
        &["date", "n_stocks", "mean_flip_count", "mean_standardized_flips", "mean_depth", "mean_averaged_depth"],
        by_date.iter().map(|(d, v)| {
            let n = v.len() as f64;
            let avg: Vec<f64> = v.iter().filter_map(|s| s.averaged_depth).collect();
            vec![
                date_str(*d),
                v.len().to_string(),
                num(v.iter().map(|s| s.flip_count as f64).sum::<f64>() / n),
                num(v.iter().map(|s| s.standardized_flips).sum::<f64>() / n),
                num(v.iter().map(|s| s.depth).sum::<f64>() / n),
                opt((!avg.is_empty()).then(|| avg.iter().sum::<f64>() / avg.len() as f64)),
            ]
        }),
    )?;
    Ok(out.written)
}

fn all_runs(panel: &PolarityPanel) -> Vec<polarity_core::flips::RunLengthSample> {
    let rows: Vec<_> = panel.rows().collect();
    rows.par_iter()
        .flat_map_iter(|(k, row)| run_lengths(&build_flip_series(k.stock, k.date, &row.polarities())))
        .collect()
}

pub fn runlengths(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let panel = ctx.load_panel()?;
    let runs = all_runs(&panel);
    let meta = ctx.meta("runlengths", flip_decisions());
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    out.table(
        "runlengths.csv",
        "length in positions of the zero-removed series",
        &["stock_id", "date", "sign", "length"],
        runs.iter().map(|r| vec![r.stock_id.to_string(), date_str(r.trade_date), r.sign.label().into(), r.length.to_string()]),
    )?;
    let mut hist: BTreeMap<(&str, u32), usize> = BTreeMap::new();
    for r in &runs {
        *hist.entry((r.sign.label(), r.length)).or_default() += 1;
        *hist.entry(("all", r.length)).or_default() += 1;
    }
    out.table(
        "runlength_hist.csv",
        "count of runs",
        &["sign", "length", "count"],
        hist.iter().map(|((s, l), c)| vec![s.to_string(), l.to_string(), c.to_string()]),
    )?;
    Ok(out.written)
}

fn read_sample(path: &Path) -> Result<Vec<u32>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        // optional header
        if std::mem::take(&mut first) && t.parse::<f64>().is_err() {
            continue;
        }
        let v: u32 = t
            .parse()
            .map_err(|_| CliError::Data(format!("{} line {}: expected a positive integer", path.display(), i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

pub fn fit(ctx: &Ctx, sample: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let samples: Vec<(String, Vec<u32>)> = match sample {
        Some(p) => vec![(p.file_name().map_or("sample".into(), |n| n.to_string_lossy().into_owned()), read_sample(p)?)],
        None => {
            let runs = all_runs(&ctx.load_panel()?);
            let of = |s: Option<Sign>| runs.iter().filter(|r| s.is_none_or(|s| r.sign == s)).map(|r| r.length).collect();
            vec![
                ("positive".into(), of(Some(Sign::Positive))),
                ("negative".into(), of(Some(Sign::Negative))),
                ("all".into(), of(None)),
            ]
        }
    };
    let cfg = ctx.fit_config();
    let fits: Vec<Result<_, FitError>> = samples.iter().map(|(_, xs)| fit_power_law(xs, &cfg)).collect();
    if fits.iter().all(|f| f.is_err()) {
        let msgs: Vec<String> = samples.iter().zip(&fits).map(|((n, _), f)| format!("{n}: {}", f.as_ref().unwrap_err())).collect();
        return Err(CliError::Numeric(format!("no sample could be fitted ({})", msgs.join("; "))));
    }
    let meta = ctx.meta("fit", fit_decisions(&ctx.cfg));
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    let rows = samples.iter().zip(&fits).map(|((name, xs), f)| {
        let xs_f: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        let b = burstiness(&xs_f).map(|b| b.b);
        match f {
            Ok(f) => vec![
                name.clone(),
                "ok".into(),
                f.n_total.to_string(),
                f.n_tail.to_string(),
                f.xmin.to_string(),
                num(f.alpha),
                num(f.stderr_alpha),
                num(f.ks_distance),
                opt(b),
                opt(burstiness_tail(&xs_f, f.xmin as f64).map(|b| b.b)),
            ],
            Err(e) => vec![
                name.clone(),
                e.to_string(),
                xs.len().to_string(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                opt(b),
                "NA".into(),
            ],
        }
    });
    out.table(
        "fit.csv",
        "alpha dimensionless exponent of P(x) ∝ x^-alpha; xmin and lengths in run positions; B in [-1, 1]",
        &["sample", "status", "n_total", "n_tail", "xmin", "alpha", "stderr_alpha", "ks_distance", "burstiness", "burstiness_tail"],
        rows,
    )?;
    Ok(out.written)
}

fn market_decisions() -> Decisions {
    vec![
        ("market_polarity", "mean over stocks with a value at the bar".into()),
        ("index_return", "percent change vs previous close for correlation and index low".into()),
        ("index_low_ties", "earliest bar".into()),
        ("limit_tolerance", LIMIT_TOLERANCE.to_string()),
    ]
}

pub fn market(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let panel = ctx.load_panel()?;
    let rets = ctx.load_returns()?;
    let index = ctx.index(&rets)?;
    let series = market_polarity_series(&panel);
    let meta = ctx.meta("market", market_decisions());
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    let empty = vec![None; BARS_PER_DAY];
    let mut rows = Vec::new();
    for (d, m) in &series {
        let pct = index.intraday_pct_vs_prev_close.get(d).unwrap_or(&empty);
        let log = index.intraday_log.get(d).unwrap_or(&empty);
        for slot in 0..BARS_PER_DAY {
            rows.push(vec![date_str(*d), (slot + 1).to_string(), opt(m[slot]), opt(pct[slot]), opt(log[slot])]);
        }
    }
    out.table(
        "market_polarity.csv",
        "polarity dimensionless; index_pct as a fraction of the previous close; index_log natural log-return",
        &["date", "bar", "market_polarity", "index_pct", "index_log"],
        rows,
    )?;
    let mut corr = Vec::new();
    for (label, source) in [("vs-prev-close", &index.intraday_pct_vs_prev_close), ("vs-prev-minute", &index.intraday_log)] {
        match market_correlation(&series, source) {
            Ok(c) => corr.push(vec![label.to_string(), num(c.r), c.n.to_string()]),
            Err(e) => corr.push(vec![label.to_string(), "NA".into(), format!("0 ({e})")]),
        }
    }
    out.table("market_corr.csv", "Pearson r; n in minutes", &["index_return", "r", "n"], corr)?;
    let mins = series.iter().filter_map(|(d, m)| {
        let idx = index.intraday_pct_vs_prev_close.get(d)?;
        polarity_at_index_min(m, idx).map(|p| vec![date_str(*d), p.bar.get().to_string(), num(p.index_return), opt(p.polarity)])
    });
    out.table(
        "index_min.csv",
        "index_return as a fraction of the previous close; polarity dimensionless",
        &["date", "bar", "index_return", "market_polarity"],
        mins.collect::<Vec<_>>(),
    )?;
    Ok(out.written)
}

pub fn kl(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let panel = ctx.load_panel()?;
    let rets = ctx.load_returns()?;
    let a = &ctx.cfg.analysis;
    let grid = BinGrid { bins: a.bins };
    let dists = daily_corr_dists(&panel, &rets, grid, a.pseudo_count, a.min_aligned_bars)?;
    let chain = kl_chain(&dists)?;
    let meta = ctx.meta(
        "kl",
        vec![
            ("bins", format!("{} equal-width on [-1, 1]", a.bins)),
            ("pseudo_count", a.pseudo_count.to_string()),
            ("log_base", "natural (nats)".into()),
            ("min_aligned_bars", a.min_aligned_bars.to_string()),
            ("direction", "KL(today || yesterday)".into()),
        ],
    );
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    let kl_by_date: BTreeMap<_, _> = chain.into_iter().collect();
    out.table(
        "kl.csv",
        "KL divergence in nats; n_stocks with a correlation that day",
        &["date", "n_stocks", "kl"],
        dists.iter().map(|d| vec![date_str(d.trade_date), d.n_stocks().to_string(), opt(kl_by_date.get(&d.trade_date).copied())]),
    )?;
    out.table(
        "corr_hist.csv",
        "probability per bin; bounds in correlation units",
        &["date", "bin", "lower", "upper", "probability"],
        dists.iter().flat_map(|d| {
            d.histogram.iter().enumerate().map(move |(i, p)| {
                vec![date_str(d.trade_date), i.to_string(), num(d.grid.lower(i)), num(d.grid.lower(i + 1)), num(*p)]
            })
        }),
    )?;
    Ok(out.written)
}

pub fn granger(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let panel = ctx.load_panel()?;
    let rets = ctx.load_returns()?;
    let index = ctx.index(&rets)?;
    let a = &ctx.cfg.analysis;
    let cfg = GrangerConfig { max_lag: a.max_lag, min_obs: a.granger_min_obs, alpha: a.granger_alpha };
    let report = granger_market(&market_polarity_series(&panel), index, a.return_mode, &cfg);
    let mode = match a.return_mode {
        ReturnMode::VsPrevMinute => "one-minute log-return",
        ReturnMode::VsPrevClose => "percent change vs previous close",
    };
    let meta = ctx.meta(
        "granger",
        vec![
            ("index_return", mode.into()),
            ("lag_selection", format!("BIC of the unrestricted model over 1..={} on a common sample", a.max_lag)),
            ("test", "F-test on the cause lags".into()),
            ("significance", a.granger_alpha.to_string()),
            ("min_obs", a.granger_min_obs.to_string()),
            ("collinear_days", "skipped and counted".into()),
        ],
    );
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    let mut rows: Vec<Vec<String>> = report
        .days
        .iter()
        .map(|r| {
            vec![
                date_str(r.trade_date),
                r.direction.label().into(),
                "tested".into(),
                r.lag.to_string(),
                num(r.f_stat),
                num(r.p_value),
                r.reject.to_string(),
                r.n_obs.to_string(),
            ]
        })
        .collect();
    rows.extend(report.skipped.iter().map(|s| {
        vec![
            date_str(s.trade_date),
            s.direction.label().into(),
            format!("skipped: {}", s.reason),
            "NA".into(),
            "NA".into(),
            "NA".into(),
            "NA".into(),
            "NA".into(),
        ]
    }));
    rows.sort();
    out.table(
        "granger_days.csv",
        "lag in minutes; p_value probability",
        &["date", "direction", "status", "lag", "f_stat", "p_value", "reject", "n_obs"],
        rows,
    )?;
    out.table(
        "granger_summary.csv",
        "counts of days; pass_rate fraction of testable days rejecting no-causality",
        &["direction", "testable", "rejected", "skipped", "pass_rate"],
        report.summaries.iter().map(|s| {
            vec![s.direction.label().into(), s.testable.to_string(), s.rejected.to_string(), s.skipped.to_string(), opt(s.pass_rate)]
        }),
    )?;
    Ok(out.written)
}

fn summary_row(period: &str, group: &str, s: &Option<FiveNumberSummary>) -> Vec<String> {
    match s {
        Some(s) => vec![
            period.into(),
            group.into(),
            s.n.to_string(),
            num(s.q1),
            num(s.median),
            num(s.q3),
            num(s.lower_fence),
            num(s.upper_fence),
            num(s.whisker_low),
            num(s.whisker_high),
            s.n_outliers.to_string(),
        ],
        None => {
            let mut v = vec![period.into(), group.into(), "0".into()];
            v.extend(std::iter::repeat_n("NA".to_string(), 7));
            v.push("0".into());
            v
        }
    }
}

pub fn impact(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let panel = ctx.load_panel()?;
    let rets = ctx.load_returns()?;
    let meta = ctx.meta(
        "impact",
        vec![
            ("grouping", "sign of the same minute's polarity".into()),
            ("quantiles", "linear interpolation (type 7); fences at 1.5 IQR".into()),
        ],
    );
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    let mut rows = Vec::new();
    for p in ctx.periods() {
        let g = price_impact_groups(&impact_pairs(&panel, &rets, &p));
        rows.push(summary_row(&p.label, "negative", &g.negative));
        rows.push(summary_row(&p.label, "zero", &g.zero));
        rows.push(summary_row(&p.label, "positive", &g.positive));
    }
    out.table(
        "impact.csv",
        "one-minute natural log-returns",
        &["period", "group", "n", "q1", "median", "q3", "lower_fence", "upper_fence", "whisker_low", "whisker_high", "n_outliers"],
        rows,
    )?;
    Ok(out.written)
}

pub fn emotion(ctx: &Ctx) -> Result<Vec<PathBuf>, CliError> {
    let path = ctx.cfg.require("emotion", &ctx.cfg.input.emotion)?;
    let f = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let rjf = read_emotion(std::io::BufReader::new(f), ctx.cfg.schema.delimiter_byte()?)?;
    let panel = ctx.load_panel()?;
    let rets = ctx.load_returns()?;
    let index = ctx.index(&rets)?;
    let mut daily = BTreeMap::new();
    let mut daily_rows = Vec::new();
    for d in panel.dates() {
        if let Ok(p) = daily_polarity_at_index_min(&panel, index, d) {
            if let Some(pol) = p.polarity {
                daily.insert(d, pol);
            }
            daily_rows.push(vec![date_str(d), p.bar.get().to_string(), opt(p.polarity), opt(rjf.get(&d).copied())]);
        }
    }
    let e = emotion_correlation(&daily, &rjf, &ctx.cfg.periods);
    let mut decisions = market_decisions();
    decisions.push(("min_days", polarity_core::coupling::MIN_EMOTION_DAYS.to_string()));
    let meta = ctx.meta("emotion", decisions);
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    out.table(
        "emotion_daily.csv",
        "polarity dimensionless at the index-low bar; rjf as supplied",
        &["date", "index_low_bar", "polarity", "rjf"],
        daily_rows,
    )?;
    out.table(
        "emotion.csv",
        "Pearson r; n in days",
        &["period", "n_days", "r"],
        std::iter::once(&e.overall).chain(&e.phases).map(|p| vec![p.label.clone(), p.n_days.to_string(), opt(p.r)]),
    )?;
    Ok(out.written)
}

pub struct SynthArgs {
    pub power_law_alpha: Option<f64>,
    pub xmin: u32,
    pub n: usize,
    pub stocks: Option<usize>,
    pub days: Option<usize>,
}

pub fn synth_cmd(ctx: &Ctx, args: &SynthArgs) -> Result<Vec<PathBuf>, CliError> {
    use rand::SeedableRng;
    let meta = ctx.meta("synth", vec![("seed", ctx.cfg.seed.to_string())]);
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    if let Some(alpha) = args.power_law_alpha {
        if !(alpha > 1.0 && alpha.is_finite()) || args.xmin == 0 || args.n == 0 {
            return Err(CliError::Config("power law needs alpha > 1, xmin ≥ 1, n ≥ 1".into()));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
        let xs = synth::discrete_power_law(&mut rng, alpha, args.xmin, args.n);
        out.table(
            "powerlaw_sample.csv",
            &format!("integers drawn from P(x) ∝ x^-{alpha} on x ≥ {}", args.xmin),
            &["value"],
            xs.iter().map(|x| vec![x.to_string()]),
        )?;
        return Ok(out.written);
    }
    let mut spec = ctx.cfg.synth.clone().unwrap_or_else(|| {
        let mut r = RegimeSpec::new("default", 10.8, 9.2);
        r.coupling = 0.002;
        ScenarioSpec::single(r, 50, 5, ctx.cfg.seed)
    });
    spec.seed = ctx.cfg.seed;
    if let Some(n) = args.stocks {
        spec.n_stocks = n;
    }
    if let Some(n) = args.days {
        spec.n_days = n;
    }
    let sc = generate(&spec)?;
    let files = write_scenario(&sc, ctx.out_dir())?;
    let [neg, zero, pos] = sc.truth.direction_counts();
    out.table(
        "truth_summary.csv",
        "counts",
        &["rows", "stock_days", "negative_bars", "zero_bars", "positive_bars", "index_lag"],
        [vec![
            sc.truth.n_rows.to_string(),
            sc.truth.counts.len().to_string(),
            neg.to_string(),
            zero.to_string(),
            pos.to_string(),
            sc.truth.index_lag.to_string(),
        ]],
    )?;
    out.table(
        "truth_index_min.csv",
        "bar index 1..237",
        &["date", "bar"],
        sc.truth.index_min_bar.iter().map(|(d, b)| vec![date_str(*d), b.get().to_string()]),
    )?;
    let spec_path = ctx.out_dir().join("scenario.toml");
    let text = toml::to_string(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(&spec_path, text).map_err(|e| CliError::io(&spec_path, e))?;
    out.written.extend([files.transactions, files.eod, files.intraday, spec_path]);
    Ok(out.written)
}

pub fn verify_cmd(ctx: &Ctx, quick: bool) -> Result<(Vec<PathBuf>, bool), CliError> {
    let mut vcfg = if quick { VerifyConfig::quick() } else { VerifyConfig::default() };
    vcfg.seed = ctx.cfg.seed;
    let scratch = ctx.out_dir().join("verify-scratch");
    std::fs::create_dir_all(&scratch).map_err(|e| CliError::io(&scratch, e))?;
    let checks = verify::run_all(&vcfg, &scratch);
    std::fs::remove_dir_all(&scratch).ok();
    let mut stdout = std::io::stdout().lock();
    for c in &checks {
        writeln!(stdout, "{c}").ok();
    }
    let meta = ctx.meta("verify", vec![("scale", if quick { "quick".into() } else { "full".to_string() })]);
    let mut out = Output::new(ctx.out_dir(), &meta)?;
    out.table(
        "verify.csv",
        "pass/fail per check",
        &["check", "status", "detail"],
        checks.iter().map(|c| {
            let status = if c.informational { "info" } else if c.passed { "pass" } else { "fail" };
            // throughput timing varies between runs
            let detail = if c.informational { "see stdout".to_string() } else { c.detail.clone() };
            vec![c.id.to_string(), status.into(), detail]
        }),
    )?;
    Ok((out.written, verify::all_passed(&checks)))
}
