//! Versioned little-endian binary cache.
//!
//! ```text
//! file    := magic "PLAB1" | version u16 | kind u16 | block* | trailer
//! block   := 0x01 | id_len u8 | id bytes | date i32 (days from CE) | n u32 | payload
//! trailer := 0xFF | block_count u64 | item_count u64
//! ```
//!
//! For `kind = TRANSACTIONS` a block holds one (stock, day) of trades in
//! columnar order: `time_ms u32 × n`, `price f64 × n`, `volume u64 × n`,
//! `buy_serial u64 × n`, `sell_serial u64 × n`. The same (stock, day) may
//! appear in more than one block when the source was not date-ordered;
//! readers must merge.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use super::grid::TimeOfDay;
use super::record::{StockId, TransactionRecord};
use super::{CacheError, IngestError};

pub const MAGIC: &[u8; 5] = b"PLAB1";
pub const VERSION: u16 = 1;

const TAG_BLOCK: u8 = 0x01;
const TAG_END: u8 = 0xFF;

/// What a cache file carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u16)]
pub enum CacheKind {
    Transactions = 1,
    Panel = 2,
}

impl CacheKind {
    fn from_u16(v: u16) -> Option<Self> {
        match v {
            1 => Some(CacheKind::Transactions),
            2 => Some(CacheKind::Panel),
            _ => None,
        }
    }
}

/// Trades of one stock on one day, columnar.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StockDayBlock {
    pub stock: Option<StockId>,
    pub date: Option<NaiveDate>,
    pub times: Vec<u32>,
    pub prices: Vec<f64>,
    pub volumes: Vec<u64>,
    pub buy_serials: Vec<u64>,
    pub sell_serials: Vec<u64>,
}

impl StockDayBlock {
    pub fn new(stock: StockId, date: NaiveDate) -> Self {
        StockDayBlock { stock: Some(stock), date: Some(date), ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, r: &TransactionRecord) {
        self.times.push(r.timestamp.millis());
        self.prices.push(r.price);
        self.volumes.push(r.volume);
        self.buy_serials.push(r.buy_serial);
        self.sell_serials.push(r.sell_serial);
    }

    pub fn stock_id(&self) -> StockId {
        self.stock.expect("block without stock id")
    }

    pub fn trade_date(&self) -> NaiveDate {
        self.date.expect("block without date")
    }

    /// Expands back into records (bar recomputed from the timestamp).
    pub fn records(&self) -> impl Iterator<Item = TransactionRecord> + '_ {
        let (stock, date) = (self.stock_id(), self.trade_date());
        (0..self.len()).map(move |i| {
            TransactionRecord::new(
                date,
                stock,
                TimeOfDay::from_millis(self.times[i]).expect("validated on read"),
                self.prices[i],
                self.volumes[i],
                self.buy_serials[i],
                self.sell_serials[i],
            )
            .expect("validated on read")
        })
    }
}

fn encode_date(d: NaiveDate) -> i32 {
    d.num_days_from_ce()
}

fn decode_date(v: i32) -> Option<NaiveDate> {
    NaiveDate::from_num_days_from_ce_opt(v)
}

/// Low-level block writer shared by the transaction and panel caches.
pub struct CacheWriter<W: Write> {
    out: W,
    blocks: u64,
    items: u64,
}

impl<W: Write> CacheWriter<W> {
    pub fn new(mut out: W, kind: CacheKind) -> io::Result<Self> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(kind as u16).to_le_bytes())?;
        Ok(CacheWriter { out, blocks: 0, items: 0 })
    }

    /// Writes a block header; the caller then writes `n` items of payload via [`Self::payload`].
    pub fn begin_block(&mut self, stock: StockId, date: NaiveDate, n: u32) -> io::Result<()> {
        let id = stock.as_bytes();
        self.out.write_all(&[TAG_BLOCK, id.len() as u8])?;
        self.out.write_all(id)?;
        self.out.write_all(&encode_date(date).to_le_bytes())?;
        self.out.write_all(&n.to_le_bytes())?;
        self.blocks += 1;
        self.items += n as u64;
        Ok(())
    }

    pub fn payload(&mut self) -> &mut W {
        &mut self.out
    }

    pub fn write_transactions(&mut self, b: &StockDayBlock) -> io::Result<()> {
        self.begin_block(b.stock_id(), b.trade_date(), b.len() as u32)?;
        let mut buf = Vec::with_capacity(b.len() * 36);
        b.times.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        b.prices.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        b.volumes.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        b.buy_serials.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        b.sell_serials.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        self.out.write_all(&buf)
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.write_all(&[TAG_END])?;
        self.out.write_all(&self.blocks.to_le_bytes())?;
        self.out.write_all(&self.items.to_le_bytes())?;
        self.out.flush()?;
        Ok(self.out)
    }
}

pub(crate) struct BlockHeader {
    pub stock: StockId,
    pub date: NaiveDate,
    pub n: u32,
}

/// Low-level block reader; validates magic, version, kind and trailer.
pub struct CacheReader<R: Read> {
    input: R,
    blocks: u64,
    items: u64,
    done: bool,
}

impl<R: Read> CacheReader<R> {
    pub fn new(mut input: R, expect: CacheKind) -> Result<Self, CacheError> {
        let mut head = [0u8; 9];
        input.read_exact(&mut head).map_err(trunc)?;
        if &head[..5] != MAGIC {
            return Err(CacheError::BadMagic);
        }
        let version = u16::from_le_bytes([head[5], head[6]]);
        if version != VERSION {
            return Err(CacheError::Version(version));
        }
        let kind = u16::from_le_bytes([head[7], head[8]]);
        if CacheKind::from_u16(kind) != Some(expect) {
            return Err(CacheError::Kind { expected: expect as u16, found: kind });
        }
        Ok(CacheReader { input, blocks: 0, items: 0, done: false })
    }

    pub(crate) fn next_header(&mut self) -> Result<Option<BlockHeader>, CacheError> {
        if self.done {
            return Ok(None);
        }
        let mut tag = [0u8; 1];
        self.input.read_exact(&mut tag).map_err(trunc)?;
        match tag[0] {
            TAG_END => {
                let mut tail = [0u8; 16];
                self.input.read_exact(&mut tail).map_err(trunc)?;
                let blocks = u64::from_le_bytes(tail[..8].try_into().unwrap());
                let items = u64::from_le_bytes(tail[8..].try_into().unwrap());
                self.done = true;
                if blocks != self.blocks || items != self.items {
                    return Err(CacheError::Corrupt(format!(
                        "trailer says {blocks} blocks/{items} items, read {}/{}",
                        self.blocks, self.items
                    )));
                }
                Ok(None)
            }
            TAG_BLOCK => {
                let mut len = [0u8; 1];
                self.input.read_exact(&mut len).map_err(trunc)?;
                let mut id = vec![0u8; len[0] as usize];
                self.input.read_exact(&mut id).map_err(trunc)?;
                let stock = StockId::from_bytes(&id).map_err(|e| CacheError::Corrupt(e.to_string()))?;
                let mut rest = [0u8; 8];
                self.input.read_exact(&mut rest).map_err(trunc)?;
                let date = decode_date(i32::from_le_bytes(rest[..4].try_into().unwrap()))
                    .ok_or_else(|| CacheError::Corrupt("bad date".into()))?;
                let n = u32::from_le_bytes(rest[4..].try_into().unwrap());
                self.blocks += 1;
                self.items += n as u64;
                Ok(Some(BlockHeader { stock, date, n }))
            }
            t => Err(CacheError::Corrupt(format!("unknown block tag {t:#x}"))),
        }
    }

    pub(crate) fn read_bytes(&mut self, len: usize) -> Result<Vec<u8>, CacheError> {
        let mut buf = vec![0u8; len];
        self.input.read_exact(&mut buf).map_err(trunc)?;
        Ok(buf)
    }
}

fn trunc(e: io::Error) -> CacheError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        CacheError::Truncated
    } else {
        CacheError::Io(e)
    }
}

fn le_u32s(b: &[u8]) -> Vec<u32> {
    b.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect()
}

fn le_u64s(b: &[u8]) -> Vec<u64> {
    b.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect()
}

fn le_f64s(b: &[u8]) -> Vec<f64> {
    b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
}

/// Iterates the transaction blocks of a cache file.
pub struct BlockReader<R: Read> {
    inner: CacheReader<R>,
}

impl BlockReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let f = File::open(path)?;
        BlockReader::new(BufReader::with_capacity(1 << 20, f))
    }
}

impl<R: Read> BlockReader<R> {
    pub fn new(input: R) -> Result<Self, CacheError> {
        Ok(BlockReader { inner: CacheReader::new(input, CacheKind::Transactions)? })
    }

    fn read_block(&mut self, h: BlockHeader) -> Result<StockDayBlock, CacheError> {
        let n = h.n as usize;
        let raw = self.inner.read_bytes(n * 36)?;
        let (times, rest) = raw.split_at(n * 4);
        let (prices, rest) = rest.split_at(n * 8);
        let (volumes, rest) = rest.split_at(n * 8);
        let (buys, sells) = rest.split_at(n * 8);
        let block = StockDayBlock {
            stock: Some(h.stock),
            date: Some(h.date),
            times: le_u32s(times),
            prices: le_f64s(prices),
            volumes: le_u64s(volumes),
            buy_serials: le_u64s(buys),
            sell_serials: le_u64s(sells),
        };
        let valid = block.times.iter().all(|&t| t < TimeOfDay::MAX_MS)
            && block.prices.iter().all(|&p| p.is_finite() && p > 0.0)
            && block.volumes.iter().all(|&v| v > 0)
            && block.buy_serials.iter().chain(&block.sell_serials).all(|&s| s > 0);
        if !valid {
            return Err(CacheError::Corrupt(format!("invalid values in block {} {}", h.stock, h.date)));
        }
        Ok(block)
    }
}

impl<R: Read> Iterator for BlockReader<R> {
    type Item = Result<StockDayBlock, CacheError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.inner.next_header() {
            Ok(Some(h)) => Some(self.read_block(h)),
            Ok(None) => None,
            Err(e) => {
                self.inner.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Summary of a cache build.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CacheBuildStats {
    pub blocks: u64,
    pub records: u64,
}

/// Streams records into a transaction cache, buffering one trading day at a time.
pub fn write_cache<W: Write, I>(out: W, records: I) -> Result<CacheBuildStats, IngestError>
where
    I: IntoIterator<Item = Result<TransactionRecord, IngestError>>,
{
    let mut w = CacheWriter::new(out, CacheKind::Transactions).map_err(IngestError::from)?;
    let mut day: Option<NaiveDate> = None;
    let mut pending: BTreeMap<StockId, StockDayBlock> = BTreeMap::new();
    let mut stats = CacheBuildStats::default();
    let flush = |w: &mut CacheWriter<W>, pending: &mut BTreeMap<StockId, StockDayBlock>, stats: &mut CacheBuildStats| {
        for (_, b) in std::mem::take(pending) {
            w.write_transactions(&b)?;
            stats.blocks += 1;
            stats.records += b.len() as u64;
        }
        Ok::<_, io::Error>(())
    };
    for rec in records {
        let rec = rec?;
        if day != Some(rec.trade_date) {
            flush(&mut w, &mut pending, &mut stats)?;
            day = Some(rec.trade_date);
        }
        pending
            .entry(rec.stock_id)
            .or_insert_with(|| StockDayBlock::new(rec.stock_id, rec.trade_date))
            .push(&rec);
    }
    flush(&mut w, &mut pending, &mut stats)?;
    w.finish()?;
    Ok(stats)
}

pub fn write_cache_file<I>(path: &Path, records: I) -> Result<CacheBuildStats, IngestError>
where
    I: IntoIterator<Item = Result<TransactionRecord, IngestError>>,
{
    let f = File::create(path).map_err(|e| IngestError::io(path, e))?;
    write_cache(BufWriter::with_capacity(1 << 20, f), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(date: &str, stock: &str, t: &str, buy: u64, sell: u64) -> TransactionRecord {
        TransactionRecord::new(date.parse().unwrap(), stock.parse().unwrap(), t.parse().unwrap(), 9.87, 300, buy, sell)
            .unwrap()
    }

    fn sample() -> Vec<TransactionRecord> {
        vec![
            rec("2015-05-08", "000002", "09:25:00", 1, 2),
            rec("2015-05-08", "000001", "09:30:01.5", 3, 4),
            rec("2015-05-08", "000002", "10:00:00", 5, 6),
            rec("2015-05-11", "000001", "14:56:59.999", 1, 2),
        ]
    }

    #[test]
    fn round_trip_preserves_records() {
        let mut buf = Vec::new();
        let stats = write_cache(&mut buf, sample().into_iter().map(Ok)).unwrap();
        assert_eq!(stats, CacheBuildStats { blocks: 3, records: 4 });
        assert_eq!(&buf[..5], MAGIC);
        let blocks: Vec<_> = BlockReader::new(&buf[..]).unwrap().collect::<Result<_, _>>().unwrap();
        let mut back: Vec<_> = blocks.iter().flat_map(|b| b.records()).collect();
        let mut orig = sample();
        let key = |r: &TransactionRecord| (r.trade_date, r.stock_id, r.timestamp);
        back.sort_by_key(key);
        orig.sort_by_key(key);
        assert_eq!(back, orig);
    }

    #[test]
    fn detects_damage() {
        let mut buf = Vec::new();
        write_cache(&mut buf, sample().into_iter().map(Ok)).unwrap();
        let cut = &buf[..buf.len() - 20];
        let res: Result<Vec<_>, _> = BlockReader::new(cut).unwrap().collect();
        assert!(matches!(res, Err(CacheError::Truncated)));

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(BlockReader::new(&bad[..]), Err(CacheError::BadMagic)));

        let mut v2 = buf.clone();
        v2[5] = 2;
        assert!(matches!(BlockReader::new(&v2[..]), Err(CacheError::Version(2))));

        let mut kind = buf;
        kind[7] = CacheKind::Panel as u8;
        assert!(matches!(BlockReader::new(&kind[..]), Err(CacheError::Kind { .. })));
    }
}
