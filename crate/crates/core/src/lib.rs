//! Trading-polarity analytics over exchange transaction records.
//!
//! The pipeline runs raw trades through a one-minute grid, counts distinct
//! buy and sell order serials per bar, and derives polarity, flip statistics,
//! heavy-tail fits, burstiness and polarity–return coupling from the result.

pub mod market_data;
pub mod period;
pub mod polarity;
pub mod stats;
pub mod flips;
pub mod tailfit;
pub mod coupling;
pub mod synth;
pub mod verify;
