//! Continuous intraday market: products, order book, depth aggregation.

pub mod book;
pub mod calendar;
pub mod depth;
pub mod units;

pub use book::{AcceptanceReport, BookError, Order, OrderBook, OrderId, Transaction};
pub use calendar::{CalendarError, MarketCalendar, Product, GATE_LEAD_MIN};
pub use depth::{aggregate_depth, DepthCurve, DepthPoint};
pub use units::{
    settle_cash, Power, Price, PriceBand, SettlementMode, Side, UnitError, Volume,
};
