use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::grid::{assign_bar, Bar, TimeOfDay};
use super::ParseFieldError;

const STOCK_ID_CAP: usize = 15;

/// Exchange symbol, stored inline so records stay `Copy`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StockId {
    len: u8,
    bytes: [u8; STOCK_ID_CAP],
}

impl StockId {
    pub fn from_bytes(b: &[u8]) -> Result<Self, ParseFieldError> {
        let bad = || ParseFieldError::StockId(String::from_utf8_lossy(b).into_owned());
        if b.is_empty() || b.len() > STOCK_ID_CAP || !b.iter().all(|c| c.is_ascii_graphic()) {
            return Err(bad());
        }
        let mut bytes = [0u8; STOCK_ID_CAP];
        bytes[..b.len()].copy_from_slice(b);
        Ok(StockId { len: b.len() as u8, bytes })
    }

    pub fn as_str(&self) -> &str {
        // constructor admits ASCII only
        std::str::from_utf8(&self.bytes[..self.len as usize]).unwrap()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..self.len as usize]
    }
}

impl fmt::Debug for StockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StockId({})", self.as_str())
    }
}

impl fmt::Display for StockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StockId {
    type Err = ParseFieldError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StockId::from_bytes(s.trim().as_bytes())
    }
}

impl Serialize for StockId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StockId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `YYYY-MM-DD` or `YYYYMMDD`.
pub fn parse_date(b: &[u8]) -> Result<NaiveDate, ParseFieldError> {
    let bad = || ParseFieldError::Date(String::from_utf8_lossy(b).into_owned());
    let digits = |s: &[u8]| -> Option<u32> {
        if s.is_empty() || !s.iter().all(u8::is_ascii_digit) {
            return None;
        }
        Some(s.iter().fold(0u32, |acc, &d| acc * 10 + (d - b'0') as u32))
    };
    let (y, m, d) = match b.len() {
        10 if b[4] == b'-' && b[7] == b'-' => (digits(&b[..4]), digits(&b[5..7]), digits(&b[8..])),
        8 => (digits(&b[..4]), digits(&b[4..6]), digits(&b[6..])),
        _ => return Err(bad()),
    };
    match (y, m, d) {
        (Some(y), Some(m), Some(d)) => NaiveDate::from_ymd_opt(y as i32, m, d).ok_or_else(bad),
        _ => Err(bad()),
    }
}

pub(crate) fn parse_u64(b: &[u8]) -> Option<u64> {
    if b.is_empty() || b.len() > 19 || !b.iter().all(u8::is_ascii_digit) {
        return None;
    }
    Some(b.iter().fold(0u64, |acc, &d| acc * 10 + (d - b'0') as u64))
}

pub(crate) fn parse_f64(b: &[u8]) -> Option<f64> {
    std::str::from_utf8(b).ok()?.trim().parse().ok()
}

/// One executed trade.
///
/// `bar` is `None` for off-grid prints (auction, lunch, closing call); those
/// records are kept so counts reconcile against the source file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransactionRecord {
    pub trade_date: NaiveDate,
    pub stock_id: StockId,
    pub timestamp: TimeOfDay,
    pub price: f64,
    pub volume: u64,
    pub buy_serial: u64,
    pub sell_serial: u64,
    pub bar: Option<Bar>,
}

impl TransactionRecord {
    pub fn new(
        trade_date: NaiveDate,
        stock_id: StockId,
        timestamp: TimeOfDay,
        price: f64,
        volume: u64,
        buy_serial: u64,
        sell_serial: u64,
    ) -> Result<Self, ParseFieldError> {
        if !(price.is_finite() && price > 0.0) {
            return Err(ParseFieldError::NonPositive("price"));
        }
        if volume == 0 {
            return Err(ParseFieldError::NonPositive("volume"));
        }
        if buy_serial == 0 {
            return Err(ParseFieldError::NonPositive("buy_serial"));
        }
        if sell_serial == 0 {
            return Err(ParseFieldError::NonPositive("sell_serial"));
        }
        Ok(TransactionRecord {
            trade_date,
            stock_id,
            timestamp,
            price,
            volume,
            buy_serial,
            sell_serial,
            bar: assign_bar(timestamp),
        })
    }

    pub fn is_off_grid(&self) -> bool {
        self.bar.is_none()
    }
}
