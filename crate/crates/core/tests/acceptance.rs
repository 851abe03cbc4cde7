//! Acceptance suite: one PASS/FAIL/SKIP/INFO line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Set `POLARITY_FULL_DATA` to a directory holding `transactions.csv` (or
//! `transactions.plab`), `eod.csv` and `intraday.csv` to run criterion 8.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use polarity_core::coupling::market_correlation;
use polarity_core::market_data::{
    load_eod, load_intraday, parse_transactions, BlockReader, Schema, StockId,
};
use polarity_core::polarity::{
    market_polarity_series, panel_from_blocks, polarity_moments, returns, MantimeMode, PanelBuilder,
};
use polarity_core::synth::DEFAULT_INDEX_ID;
use polarity_core::verify::{self, Check, VerifyConfig};

struct Line {
    n: u8,
    status: &'static str,
    text: String,
}

fn from_check(n: u8, c: &Check) -> Line {
    let status = match (c.informational, c.passed) {
        (true, _) => "INFO",
        (false, true) => "PASS",
        (false, false) => "FAIL",
    };
    Line { n, status, text: format!("{}: {} [{} ms]", c.id, c.detail, c.elapsed_ms) }
}

fn full_data(dir: &Path) -> Line {
    let t = Instant::now();
    let run = || -> Result<(bool, String), String> {
        let cache = dir.join("transactions.plab");
        let panel = if cache.exists() {
            panel_from_blocks(BlockReader::open(&cache).map_err(|e| e.to_string())?, MantimeMode::PerBar)
                .map_err(|e| e.to_string())?
        } else {
            let (recs, _) =
                parse_transactions(&dir.join("transactions.csv"), &Schema::default()).map_err(|e| e.to_string())?;
            let mut b = PanelBuilder::new(MantimeMode::PerBar);
            recs.iter().for_each(|r| b.push(r));
            b.finish()
        };
        let m = polarity_moments(&panel).ok_or("empty panel")?;
        let eod = load_eod(&dir.join("eod.csv"), b',').map_err(|e| e.to_string())?;
        let intra = load_intraday(&dir.join("intraday.csv"), b',').map_err(|e| e.to_string())?;
        let id: StockId = DEFAULT_INDEX_ID.parse().map_err(|e| format!("{e}"))?;
        let index = returns(id, eod.get(&id).ok_or("index closes missing")?, intra.get(&id).ok_or("index bars missing")?)
            .map_err(|e| e.to_string())?;
        let r = market_correlation(&market_polarity_series(&panel), &index.intraday_pct_vs_prev_close)
            .map_err(|e| e.to_string())?;
        let ok = (m.mean - 0.08).abs() <= 0.005
            && (m.std - 0.34).abs() <= 0.01
            && (m.excess_kurtosis + 0.12).abs() <= 0.05
            && (r.r + 0.72).abs() <= 0.02;
        Ok((
            ok,
            format!(
                "mean {:.4}, std {:.4}, excess kurtosis {:.4}, market r {:.4} (n = {})",
                m.mean, m.std, m.excess_kurtosis, r.r, r.n
            ),
        ))
    };
    match run() {
        Ok((ok, text)) => Line {
            n: 8,
            status: if ok { "PASS" } else { "FAIL" },
            text: format!("full-data: {text} [{} ms]", t.elapsed().as_millis()),
        },
        Err(e) => Line { n: 8, status: "FAIL", text: format!("full-data: {e}") },
    }
}

fn main() -> ExitCode {
    // `cargo test -- <filter>` passes arguments; ignore everything but --list
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let scratch = tempfile::tempdir().expect("temp dir");
    let cfg = VerifyConfig::default();
    let seed = cfg.seed;
    let mut lines = Vec::new();

    let c1 = verify::oracle_equivalence(&cfg, scratch.path());
    let mut l1 = from_check(1, &c1);
    l1.text.push_str(if c1.elapsed_ms < 60_000 { " within 60 s" } else { " exceeds the 60 s budget" });
    lines.push(l1);
    lines.push(from_check(2, &verify::worked_example()));
    let c3 = verify::power_law_recovery(seed);
    let mut l3 = from_check(3, &c3);
    if c3.elapsed_ms >= 3 * 30_000 {
        l3.status = "FAIL";
        l3.text.push_str(" exceeds 30 s per fit");
    }
    lines.push(l3);
    lines.push(from_check(4, &verify::burstiness_anchors(seed)));
    lines.push(from_check(5, &verify::kl_properties(seed)));
    let c6 = verify::granger_calibration(seed);
    let mut l6 = from_check(6, &c6);
    if c6.elapsed_ms >= 120_000 {
        l6.status = "FAIL";
        l6.text.push_str(" exceeds 2 min");
    }
    lines.push(l6);
    lines.push(from_check(7, &verify::pearson_machinery(seed)));
    lines.push(match std::env::var_os("POLARITY_FULL_DATA") {
        Some(dir) => full_data(Path::new(&dir)),
        None => Line {
            n: 8,
            status: "SKIP",
            text: "full-data: POLARITY_FULL_DATA not set; the public dataset is not bundled".into(),
        },
    });
    lines.push(from_check(9, &verify::throughput(cfg.throughput_rows, scratch.path())));
    lines.push(from_check(0, &verify::planted_truth(seed)));

    for l in &lines {
        let label = if l.n == 0 { "extra".to_string() } else { format!("criterion {}", l.n) };
        println!("{:<4} {label:<12} {}", l.status, l.text);
    }
    if lines.iter().any(|l| l.status == "FAIL") {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    } else {
        println!("acceptance: ok");
        ExitCode::SUCCESS
    }
}
