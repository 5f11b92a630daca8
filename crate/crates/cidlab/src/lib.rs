//! A desk-scale laboratory for strategic energy-storage trading in a
//! continuous intraday electricity market.
//!
//! The crate models quarter-hour delivery products traded continuously until
//! half an hour before delivery, a limit order book with price-then-time
//! matching settled pay-as-bid, and a storage unit whose schedule must absorb
//! every trade. On top of that sit a per-step acceptance optimiser, a
//! fitted-Q training loop over replayed order flow, and a backtester that
//! compares the learned policy against a rolling-intrinsic baseline.
//!
//! Start with the `examples/` directory; each example exercises one layer.

pub mod backtest;
pub mod cli;
pub mod config;
pub mod data;
pub mod episode;
pub mod features;
pub mod fitted_q;
pub mod market;
pub mod optimizer;
pub mod runtime;
pub mod storage;

pub use market::{
    AcceptanceReport, MarketCalendar, Order, OrderBook, OrderId, Price, Side, Volume,
};
pub use optimizer::{solve_trade, TradeProblem, TradeSolution};
pub use storage::{MarketPosition, StorageParams, StorageSchedule};
