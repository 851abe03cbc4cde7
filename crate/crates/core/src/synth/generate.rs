use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

use super::scenario::{CountModel, ScenarioSpec};
use super::SynthError;
use crate::market_data::{Bar, EodTable, IntradayTable, StockId, TimeOfDay, TransactionRecord, BARS_PER_DAY};
use crate::polarity::{polarity, DayRow, MantimeCounts, PanelKey, PolarityPanel};

const MS_PER_BAR: u32 = 60_000;
const INDEX_STREAM: u64 = 1;
/// Planted lows sit this far below the rest of the day.
const PLANTED_MIN_MARGIN: f64 = 0.002;

/// What the generator put in, for comparison with what the pipeline recovers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundTruth {
    /// Participant counts per stock-day that traded at least once.
    #[serde(skip)]
    pub counts: BTreeMap<PanelKey, Vec<MantimeCounts>>,
    /// Earliest bar of each day's index low.
    pub index_min_bar: BTreeMap<NaiveDate, Bar>,
    pub index_lag: usize,
    pub n_rows: usize,
}

impl GroundTruth {
    pub fn panel(&self) -> PolarityPanel {
        PolarityPanel::from_rows(self.counts.iter().map(|(k, c)| (*k, DayRow::from_cells(c.clone()))).collect())
    }

    pub fn polarities(&self, key: &PanelKey) -> Vec<Option<f64>> {
        self.counts.get(key).map_or_else(|| vec![None; BARS_PER_DAY], |c| {
            c.iter().map(|m| polarity(m.buy, m.sell)).collect()
        })
    }

    /// Number of negative, zero and positive polarity cells.
    pub fn direction_counts(&self) -> [usize; 3] {
        let mut n = [0; 3];
        for m in self.counts.values().flatten().filter(|m| m.buy + m.sell > 0) {
            n[(m.buy.cmp(&m.sell) as i8 + 1) as usize] += 1;
        }
        n
    }

    /// Sign runs of a stock-day after dropping zero and missing bars,
    /// excluding the first and last run: `(positive, length)`.
    pub fn interior_runs(&self, key: &PanelKey) -> Vec<(bool, u32)> {
        let mut runs: Vec<(bool, u32)> = Vec::new();
        for m in self.counts.get(key).into_iter().flatten() {
            if m.buy == m.sell {
                continue;
            }
            let pos = m.buy > m.sell;
            match runs.last_mut() {
                Some((s, n)) if *s == pos => *n += 1,
                _ => runs.push((pos, 1)),
            }
        }
        if runs.len() < 3 {
            return Vec::new();
        }
        runs[1..runs.len() - 1].to_vec()
    }
}

/// Generated scenario held in memory.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    /// Ordered by date, stock, time.
    pub transactions: Vec<TransactionRecord>,
    pub eod: EodTable,
    pub intraday: IntradayTable,
    pub index_id: StockId,
    pub truth: GroundTruth,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioFiles {
    pub transactions: PathBuf,
    pub eod: PathBuf,
    pub intraday: PathBuf,
}

pub fn stock_id(i: usize) -> StockId {
    StockId::from_bytes(format!("{:06}", 600_000 + i).as_bytes()).expect("six ASCII digits")
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u32
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

struct PendingTrade {
    stock: usize,
    time: u32,
    price: f64,
    volume: u64,
    buy_order: usize,
    sell_order: usize,
}

fn previous_weekday(d: NaiveDate) -> NaiveDate {
    let mut p = d.pred_opt().expect("date in range");
    while p.weekday().number_from_monday() > 5 {
        p = p.pred_opt().expect("date in range");
    }
    p
}

/// Generates a scenario. Identical specs give identical output.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut index_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    index_rng.set_stream(INDEX_STREAM);

    let dates = spec.trading_dates();
    let stocks: Vec<StockId> = (0..spec.n_stocks).map(stock_id).collect();
    let index_id = StockId::from_bytes(spec.index.id.as_bytes()).expect("validated");
    let seed_date = previous_weekday(dates[0]);

    let mut transactions = Vec::new();
    let mut eod = EodTable::new();
    let mut intraday = IntradayTable::new();
    let mut counts = BTreeMap::new();
    let mut index_min_bar = BTreeMap::new();

    let mut prices = vec![spec.initial_price; spec.n_stocks];
    for s in &stocks {
        eod.entry(*s).or_default().insert(seed_date, spec.initial_price);
    }
    let mut index_level = spec.index.initial_level;
    eod.entry(index_id).or_default().insert(seed_date, index_level);

    for &date in &dates {
        let mut trades: Vec<PendingTrade> = Vec::new();
        let mut first_time: Vec<u32> = Vec::new();
        let mut pol_sum = vec![0.0; BARS_PER_DAY];
        let mut pol_n = vec![0usize; BARS_PER_DAY];

        for (si, sid) in stocks.iter().enumerate() {
            let mut cells = vec![MantimeCounts::default(); BARS_PER_DAY];
            let mut bars = vec![None; BARS_PER_DAY];
            for bar in Bar::all() {
                let regime = spec.regime_at(date, bar).expect("validated coverage");
                let (mut b, mut s) = match regime.count_model {
                    CountModel::Poisson => (poisson(&mut rng, regime.buy_rate), poisson(&mut rng, regime.sell_rate)),
                    CountModel::Fixed => (regime.buy_rate.round() as u32, regime.sell_rate.round() as u32),
                };
                if b + s == 0 {
                    continue;
                }
                // every trade needs a counterparty
                b = b.max(1);
                s = s.max(1);
                cells[bar.slot()] = MantimeCounts { buy: b, sell: s };

                let pol = (b as f64 - s as f64) / (b + s) as f64;
                let mult = regime.sigma_by_sign[(b.cmp(&s) as i8 + 1) as usize];
                let r = regime.coupling * pol + regime.return_sigma * mult * normal(&mut rng);
                prices[si] *= r.exp();
                bars[bar.slot()] = Some(prices[si]);
                pol_sum[bar.slot()] += pol;
                pol_n[bar.slot()] += 1;

                let mut side_fills = |n: u32, rng: &mut ChaCha8Rng| -> Vec<usize> {
                    let mut owners = Vec::new();
                    for _ in 0..n {
                        let id = first_time.len();
                        first_time.push(u32::MAX);
                        owners.extend(std::iter::repeat_n(id, 1 + poisson(rng, regime.extra_fills_mean) as usize));
                    }
                    owners
                };
                let buys = side_fills(b, &mut rng);
                let sells = side_fills(s, &mut rng);
                let start = bar.start().millis();
                for k in 0..buys.len().max(sells.len()) {
                    let (bo, so) = (buys[k % buys.len()], sells[k % sells.len()]);
                    let time = start + rng.random_range(0..MS_PER_BAR);
                    first_time[bo] = first_time[bo].min(time);
                    first_time[so] = first_time[so].min(time);
                    let volume = 100 * rng.random_range(1..=10u64);
                    trades.push(PendingTrade { stock: si, time, price: prices[si], volume, buy_order: bo, sell_order: so });
                }
            }
            if cells.iter().any(|c| c.buy + c.sell > 0) {
                counts.insert(PanelKey { stock: *sid, date }, cells);
            }
            eod.entry(*sid).or_default().insert(date, prices[si]);
            intraday.entry(*sid).or_default().insert(date, bars);
        }

        // serials follow each order's first trade time across the whole market
        let mut order: Vec<usize> = (0..first_time.len()).collect();
        order.sort_by_key(|&o| (first_time[o], o));
        let mut serial = vec![0u64; first_time.len()];
        for (rank, &o) in order.iter().enumerate() {
            serial[o] = rank as u64 + 1;
        }
        trades.sort_by_key(|t| (t.stock, t.time, serial[t.buy_order], serial[t.sell_order]));
        for t in &trades {
            let rec = TransactionRecord::new(
                date,
                stocks[t.stock],
                TimeOfDay::from_millis(t.time).expect("on grid"),
                t.price,
                t.volume,
                serial[t.buy_order],
                serial[t.sell_order],
            )
            .map_err(|e| SynthError::Infeasible(format!("generated invalid record: {e}")))?;
            transactions.push(rec);
        }

        let market: Vec<f64> =
            pol_sum.iter().zip(&pol_n).map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 }).collect();
        let ix = &spec.index;
        let prev_close = index_level;
        let mut levels = Vec::with_capacity(BARS_PER_DAY);
        for t in 0..BARS_PER_DAY {
            let driver = t.checked_sub(ix.lag).map_or(0.0, |u| market[u]);
            index_level *= (ix.coupling * driver + ix.sigma * normal(&mut index_rng)).exp();
            levels.push(index_level);
        }
        if let Some(b) = ix.planted_min_bar.and_then(Bar::new) {
            let low = levels.iter().copied().fold(prev_close, f64::min);
            levels[b.slot()] = low * (1.0 - PLANTED_MIN_MARGIN);
            index_level = levels[BARS_PER_DAY - 1];
        }
        let min_slot = (0..BARS_PER_DAY).fold(0, |m, t| if levels[t] < levels[m] { t } else { m });
        index_min_bar.insert(date, Bar::from_slot(min_slot).expect("slot in range"));
        eod.entry(index_id).or_default().insert(date, index_level);
        intraday.entry(index_id).or_default().insert(date, levels.into_iter().map(Some).collect());
    }

    let truth = GroundTruth { counts, index_min_bar, index_lag: spec.index.lag, n_rows: transactions.len() };
    Ok(Scenario { spec: spec.clone(), transactions, eod, intraday, index_id, truth })
}

fn create(path: &Path) -> Result<BufWriter<File>, SynthError> {
    File::create(path).map(|f| BufWriter::with_capacity(1 << 20, f)).map_err(|e| SynthError::Io { path: path.to_owned(), source: e })
}

/// Writes transactions, closes and intraday prices in the default ingest layout.
pub fn write_scenario(sc: &Scenario, dir: &Path) -> Result<ScenarioFiles, SynthError> {
    let files = ScenarioFiles {
        transactions: dir.join("transactions.csv"),
        eod: dir.join("eod.csv"),
        intraday: dir.join("intraday.csv"),
    };
    let io = |path: &Path| {
        let path = path.to_owned();
        move |e| SynthError::Io { path, source: e }
    };

    let mut w = create(&files.transactions)?;
    (|| {
        writeln!(w, "trade_date,stock_id,time,price,volume,buy_serial,sell_serial")?;
        let mut date = (None, String::new());
        for r in &sc.transactions {
            if date.0 != Some(r.trade_date) {
                date = (Some(r.trade_date), r.trade_date.to_string());
            }
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                date.1, r.stock_id, r.timestamp, r.price, r.volume, r.buy_serial, r.sell_serial
            )?;
        }
        w.flush()
    })()
    .map_err(io(&files.transactions))?;

    let mut w = create(&files.eod)?;
    (|| {
        writeln!(w, "date,id,close")?;
        for (id, days) in &sc.eod {
            for (d, c) in days {
                writeln!(w, "{d},{id},{c}")?;
            }
        }
        w.flush()
    })()
    .map_err(io(&files.eod))?;

    let mut w = create(&files.intraday)?;
    (|| {
        writeln!(w, "date,id,bar,last_price")?;
        for (id, days) in &sc.intraday {
            for (d, bars) in days {
                for (slot, p) in bars.iter().enumerate() {
                    match p {
                        Some(p) => writeln!(w, "{d},{id},{},{p}", slot + 1)?,
                        None => writeln!(w, "{d},{id},{},NA", slot + 1)?,
                    }
                }
            }
        }
        w.flush()
    })()
    .map_err(io(&files.intraday))?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::super::scenario::RegimeSpec;
    use super::*;
    use crate::polarity::count_mantimes;

    #[test]
    fn fixed_counts_are_recovered() {
        let mut r = RegimeSpec::new("fixed", 3.0, 2.0);
        r.count_model = CountModel::Fixed;
        r.extra_fills_mean = 1.5;
        let sc = generate(&ScenarioSpec::single(r, 2, 1, 9)).unwrap();
        let d = sc.spec.trading_dates()[0];
        let bar = Bar::new(57).unwrap();
        for s in [stock_id(0), stock_id(1)] {
            let recs: Vec<_> =
                sc.transactions.iter().filter(|t| t.stock_id == s && t.bar == Some(bar)).copied().collect();
            assert!(recs.len() >= 3);
            assert_eq!(count_mantimes(&recs), MantimeCounts { buy: 3, sell: 2 });
            assert_eq!(sc.truth.counts[&PanelKey { stock: s, date: d }][bar.slot()], MantimeCounts { buy: 3, sell: 2 });
        }
    }

    #[test]
    fn deterministic() {
        let spec = ScenarioSpec::single(RegimeSpec::new("p", 2.0, 1.5), 3, 2, 42);
        let (a, b) = (generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_eq!(a.transactions, b.transactions);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.eod, b.eod);
        let mut other = spec.clone();
        other.seed = 43;
        assert_ne!(generate(&other).unwrap().transactions, a.transactions);
    }

    #[test]
    fn serials_follow_first_trade_time() {
        let spec = ScenarioSpec::single(RegimeSpec::new("p", 2.0, 2.0), 4, 2, 5);
        let sc = generate(&spec).unwrap();
        for d in spec.trading_dates() {
            let mut first: BTreeMap<u64, u32> = BTreeMap::new();
            for t in sc.transactions.iter().filter(|t| t.trade_date == d) {
                for s in [t.buy_serial, t.sell_serial] {
                    let e = first.entry(s).or_insert(u32::MAX);
                    *e = (*e).min(t.timestamp.millis());
                }
            }
            // serials run 1..=n each day and are ordered by first appearance
            assert_eq!(first.keys().copied().collect::<Vec<_>>(), (1..=first.len() as u64).collect::<Vec<_>>());
            assert!(first.values().collect::<Vec<_>>().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn planted_index_minimum() {
        let mut spec = ScenarioSpec::single(RegimeSpec::new("p", 2.0, 2.0), 3, 3, 1);
        spec.index.planted_min_bar = Some(150);
        let sc = generate(&spec).unwrap();
        assert!(sc.truth.index_min_bar.values().all(|b| b.get() == 150));
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let sc = generate(&ScenarioSpec::single(RegimeSpec::new("p", 1.0, 1.0), 2, 1, 3)).unwrap();
        let f = write_scenario(&sc, dir.path()).unwrap();
        let eod = crate::market_data::load_eod(&f.eod, b',').unwrap();
        assert_eq!(eod, sc.eod);
        let intra = crate::market_data::load_intraday(&f.intraday, b',').unwrap();
        assert_eq!(intra, sc.intraday);
    }
}
