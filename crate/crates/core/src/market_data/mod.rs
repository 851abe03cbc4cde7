//! Raw exchange records: parsing, validation, the trading-minute grid and
//! the binary cache.

mod cache;
mod grid;
mod parse;
mod prices;
mod record;

use std::io;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

pub use cache::{
    write_cache, write_cache_file, BlockReader, CacheBuildStats, CacheKind, CacheReader, CacheWriter,
    StockDayBlock, MAGIC, VERSION,
};
pub use grid::{assign_bar, Bar, TimeOfDay, BARS_PER_DAY, MORNING_BARS};
pub use parse::{
    parse_transactions, ColumnMap, MalformedRow, ParseStats, Schema, TransactionReader,
    DEFAULT_MALFORMED_THRESHOLD,
};
pub use prices::{
    empty_day, load_eod, load_intraday, read_eod, read_intraday, DayBars, EodTable, IntradayTable,
};
pub use record::{parse_date, StockId, TransactionRecord};

/// A single field failed to parse or validate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseFieldError {
    #[error("bad date {0:?}")]
    Date(String),
    #[error("bad time {0:?}")]
    Time(String),
    #[error("bad stock id {0:?}")]
    StockId(String),
    #[error("{0} is not a valid number")]
    Number(&'static str),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("row has no column #{0}")]
    MissingColumn(usize),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {}: {source}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "input".into()))]
    Io {
        path: Option<PathBuf>,
        #[source]
        source: io::Error,
    },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("malformed rows exceed {:.3}% threshold: {summary}", threshold * 100.0)]
    TooManyMalformed { threshold: f64, summary: String },
    #[error("{what} line {line}: {reason}")]
    Row { what: &'static str, line: u64, reason: String },
    #[error("non-positive price {value} for {id} on {date}{}", bar.map(|b| format!(" bar {b}")).unwrap_or_default())]
    NonPositivePrice { id: String, date: NaiveDate, bar: Option<Bar>, value: f64 },
    #[error(transparent)]
    Cache(#[from] CacheError),
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        IngestError::Io { path: Some(path.to_path_buf()), source }
    }
}

impl From<io::Error> for IngestError {
    fn from(source: io::Error) -> Self {
        IngestError::Io { path: None, source }
    }
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("not a PLAB1 cache file")]
    BadMagic,
    #[error("unsupported cache version {0}")]
    Version(u16),
    #[error("cache holds kind {found}, expected {expected}")]
    Kind { expected: u16, found: u16 },
    #[error("cache file is truncated")]
    Truncated,
    #[error("corrupt cache: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}
