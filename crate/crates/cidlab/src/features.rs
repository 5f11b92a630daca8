//! State reduction: order book distance features, per-step observations,
//! and the fixed-window pseudo-state fed to the value regressors.

use thiserror::Error;

use crate::market::{aggregate_depth, DepthCurve, OrderBook, Side};

/// Number of slots in the book feature block: ten distances plus the two
/// empty-side flags.
pub const BOOK_FEATURE_WIDTH: usize = 12;
/// Width of the exogenous block: 24 day-ahead hourly prices, the last four
/// quarter-hour imbalance prices and system imbalance volumes, hour of day,
/// month, and a weekend flag.
pub const EXOG_WIDTH: usize = 24 + 4 + 4 + 3;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("cannot build a pseudo-state from an empty history")]
    EmptyHistory,
    #[error("window capacity must be positive")]
    ZeroWindow,
}

/// Distance measures between the two aggregated depth curves.
///
/// `d[0]..d[4]` are signed price differences in EUR/MWh, `d[5]..d[9]`
/// absolute cumulative-volume differences in MW. A curve side with no
/// orders zeroes every feature touching it and raises its flag.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BookFeatures {
    pub d: [f64; 10],
    pub empty_buy: bool,
    pub empty_sell: bool,
}

impl BookFeatures {
    pub fn write_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.d);
        out.push(self.empty_buy as u8 as f64);
        out.push(self.empty_sell as u8 as f64);
    }
}

/// Computes the ten curve distances on the aggregated buy and sell depth.
///
/// Percentile convention: the q-quantile of a side is the first curve point
/// whose cumulative volume reaches q of the side's total; its price is the
/// quantile price and its cumulative volume the quantile volume. Mean price
/// is volume-weighted; mean cumulative volume is weighted by level volume.
pub fn book_features(book: &OrderBook) -> BookFeatures {
    let buy = aggregate_depth(book, Side::Buy);
    let sell = aggregate_depth(book, Side::Sell);
    let empty_buy = buy.is_empty();
    let empty_sell = sell.is_empty();
    if empty_buy || empty_sell {
        return BookFeatures { d: [0.0; 10], empty_buy, empty_sell };
    }

    let q = |curve: &DepthCurve, frac: f64| curve.percentile(frac).unwrap();
    let price = |curve: &DepthCurve, frac: f64| q(curve, frac).price.eur_per_mwh();
    let vol = |curve: &DepthCurve, frac: f64| q(curve, frac).cumulative.mw();

    let d = [
        buy.max_price().unwrap().eur_per_mwh() - sell.min_price().unwrap().eur_per_mwh(),
        buy.mean_price().unwrap() - sell.mean_price().unwrap(),
        price(&buy, 0.25) - price(&sell, 0.75),
        price(&buy, 0.50) - price(&sell, 0.50),
        price(&buy, 0.75) - price(&sell, 0.25),
        (buy.min_cumulative().unwrap().mw() - sell.min_cumulative().unwrap().mw()).abs(),
        (buy.mean_cumulative().unwrap() - sell.mean_cumulative().unwrap()).abs(),
        (vol(&buy, 0.25) - vol(&sell, 0.25)).abs(),
        (vol(&buy, 0.50) - vol(&sell, 0.50)).abs(),
        (vol(&buy, 0.75) - vol(&sell, 0.75)).abs(),
    ];
    BookFeatures { d, empty_buy, empty_sell }
}

/// Exogenous context attached to each trading step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExogenousRecord {
    pub da_prices_eur: [f64; 24],
    /// Imbalance price of the last four settled quarter hours, newest last.
    pub imbalance_price_eur: [f64; 4],
    /// System imbalance volume of the same quarter hours, MW.
    pub system_imbalance_mw: [f64; 4],
    pub hour_of_day: f64,
    pub month: f64,
    pub weekend: f64,
}

impl Default for ExogenousRecord {
    fn default() -> Self {
        ExogenousRecord {
            da_prices_eur: [0.0; 24],
            imbalance_price_eur: [0.0; 4],
            system_imbalance_mw: [0.0; 4],
            hour_of_day: 0.0,
            month: 1.0,
            weekend: 0.0,
        }
    }
}

impl ExogenousRecord {
    pub fn write_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.da_prices_eur);
        out.extend_from_slice(&self.imbalance_price_eur);
        out.extend_from_slice(&self.system_imbalance_mw);
        out.push(self.hour_of_day);
        out.push(self.month);
        out.push(self.weekend);
    }
}

/// Everything the agent observes at one trading step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepObservation {
    pub book: BookFeatures,
    /// Net contracted position per delivery slot, MW.
    pub position_mw: Vec<f64>,
    pub exog: ExogenousRecord,
    /// One-hot previous high-level action: `[idle, trade]`.
    pub prev_action: [f64; 2],
    pub prev_reward_eur: f64,
}

impl StepObservation {
    /// Flat width of one observation given the slot count.
    pub fn width(slots: usize) -> usize {
        BOOK_FEATURE_WIDTH + slots + EXOG_WIDTH + 2 + 1
    }

    pub fn write_into(&self, out: &mut Vec<f64>) {
        self.book.write_into(out);
        out.extend_from_slice(&self.position_mw);
        self.exog.write_into(out);
        out.extend_from_slice(&self.prev_action);
        out.push(self.prev_reward_eur);
    }
}

/// Fixed-length window of flattened observations, newest block last,
/// front-padded with zero blocks when the history is shorter than the
/// window capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoState {
    pub values: Vec<f64>,
    /// Observations actually present (the rest of the window is padding).
    pub filled: usize,
    pub block_width: usize,
}

impl PseudoState {
    pub fn window(&self) -> usize {
        if self.block_width == 0 { 0 } else { self.values.len() / self.block_width }
    }
}

/// Assembles the pseudo-state from the newest `min(len, window)` entries of
/// `history`.
pub fn build_pseudo_state(
    history: &[StepObservation],
    window: usize,
    slots: usize,
) -> Result<PseudoState, FeatureError> {
    if history.is_empty() {
        return Err(FeatureError::EmptyHistory);
    }
    if window == 0 {
        return Err(FeatureError::ZeroWindow);
    }
    let block = StepObservation::width(slots);
    let take = history.len().min(window);
    let mut values = vec![0.0; block * (window - take)];
    for obs in &history[history.len() - take..] {
        let before = values.len();
        obs.write_into(&mut values);
        debug_assert_eq!(values.len() - before, block);
    }
    Ok(PseudoState { values, filled: take, block_width: block })
}
