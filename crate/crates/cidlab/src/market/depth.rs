//! Aggregated depth curves.
//!
//! A depth curve merges every resting order of one side across all open
//! products into price levels and accumulates volume from the best price
//! outward: ascending prices for sells, descending for buys. Curve
//! statistics (endpoints, weighted means, volume percentiles) feed the
//! state features.

use std::collections::BTreeMap;

use super::book::OrderBook;
use super::units::{Price, Side, Volume};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthPoint {
    pub price: Price,
    /// Volume resting at exactly this price.
    pub level: Volume,
    /// Volume resting at this price or better.
    pub cumulative: Volume,
}

/// One side's cumulative depth, best price first.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthCurve {
    pub side: Side,
    pub points: Vec<DepthPoint>,
}

/// Builds the depth curve of `side` over every product present in `book`.
/// Callers that want only open products purge the book first.
pub fn aggregate_depth(book: &OrderBook, side: Side) -> DepthCurve {
    let mut levels: BTreeMap<i64, i64> = BTreeMap::new();
    for order in book.orders().filter(|o| o.side == side) {
        *levels.entry(order.price.cents()).or_insert(0) += order.volume.micro();
    }
    let iter: Box<dyn Iterator<Item = (i64, i64)>> = match side {
        Side::Sell => Box::new(levels.into_iter()),
        Side::Buy => Box::new(levels.into_iter().rev()),
    };
    let mut points = Vec::new();
    let mut cum = 0_i64;
    for (cents, micro) in iter {
        cum += micro;
        points.push(DepthPoint {
            price: Price::from_cents(cents),
            level: Volume::from_micro(micro),
            cumulative: Volume::from_micro(cum),
        });
    }
    DepthCurve { side, points }
}

impl DepthCurve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total(&self) -> Volume {
        self.points.last().map(|p| p.cumulative).unwrap_or(Volume::ZERO)
    }

    /// Best price on the curve: cheapest sell or highest buy.
    pub fn best_price(&self) -> Option<Price> {
        self.points.first().map(|p| p.price)
    }

    pub fn worst_price(&self) -> Option<Price> {
        self.points.last().map(|p| p.price)
    }

    pub fn min_price(&self) -> Option<Price> {
        match self.side {
            Side::Sell => self.best_price(),
            Side::Buy => self.worst_price(),
        }
    }

    pub fn max_price(&self) -> Option<Price> {
        match self.side {
            Side::Sell => self.worst_price(),
            Side::Buy => self.best_price(),
        }
    }

    /// Volume-weighted mean price over levels.
    pub fn mean_price(&self) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let total = self.total().mw();
        let sum: f64 = self.points.iter().map(|p| p.level.mw() * p.price.eur_per_mwh()).sum();
        Some(sum / total)
    }

    /// Smallest cumulative value on the curve: the best level's volume.
    pub fn min_cumulative(&self) -> Option<Volume> {
        self.points.first().map(|p| p.cumulative)
    }

    /// Volume-weighted mean of the cumulative depth over levels.
    pub fn mean_cumulative(&self) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let total = self.total().mw();
        let sum: f64 = self.points.iter().map(|p| p.level.mw() * p.cumulative.mw()).sum();
        Some(sum / total)
    }

    /// First curve point whose cumulative volume reaches `q` of the total,
    /// `0 < q <= 1`. Returns that point's price and cumulative volume.
    pub fn percentile(&self, q: f64) -> Option<DepthPoint> {
        if self.is_empty() {
            return None;
        }
        let threshold = q * self.total().micro() as f64 - 1e-6;
        self.points
            .iter()
            .find(|p| p.cumulative.micro() as f64 >= threshold)
            .or(self.points.last())
            .copied()
    }
}
