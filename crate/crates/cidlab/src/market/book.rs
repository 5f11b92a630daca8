//! Central limit order book with first-come-first-served matching.
//!
//! Orders queue per product and side, ranked by price and then arrival.
//! An incoming order trades against the opposite queue while it crosses,
//! always at the resting order's limit price, and any remainder rests.
//! The storage agent itself never posts orders; it lifts resting ones
//! through [`OrderBook::apply_acceptance`] with per-order fractions.

use std::collections::BTreeMap;

use thiserror::Error;

use super::units::{Power, Price, PriceBand, SettlementMode, Side, Volume, settle_cash};

pub type OrderId = u64;

#[derive(Debug, Error, PartialEq)]
pub enum BookError {
    #[error("order volume must be positive")]
    ZeroVolume,
    #[error(transparent)]
    Unit(#[from] super::units::UnitError),
    #[error("unknown order id {0}")]
    UnknownOrder(OrderId),
    #[error("acceptance fraction {fraction} for order {id} outside [0, 1]")]
    FractionRange { id: OrderId, fraction: f64 },
    #[error("duplicate acceptance for order id {0}")]
    DuplicateAcceptance(OrderId),
}

/// A resting limit order.
#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub id: OrderId,
    pub product: usize,
    pub side: Side,
    pub price: Price,
    pub volume: Volume,
    /// Arrival sequence; ties in price rank by this, oldest first.
    pub seq: u64,
}

/// One fill. `price` is always the resting order's limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub product: usize,
    pub resting_id: OrderId,
    /// Id of the incoming order, or `None` when the storage agent lifted the
    /// resting order directly.
    pub taker_id: Option<OrderId>,
    pub resting_side: Side,
    pub price: Price,
    pub volume: Volume,
}

/// Result of [`OrderBook::apply_acceptance`].
#[derive(Debug, Clone, Default)]
pub struct AcceptanceReport {
    pub transactions: Vec<Transaction>,
    /// Net position change per product, positive when the agent sold power.
    pub v_con_micro: BTreeMap<usize, i64>,
    /// Cash flow in EUR, positive when the agent receives money.
    pub cash_eur: f64,
}

#[derive(Debug, Clone, Default)]
struct ProductQueues {
    bids: Vec<Order>,
    asks: Vec<Order>,
}

/// Book over all products of one market.
#[derive(Debug, Clone)]
pub struct OrderBook {
    queues: BTreeMap<usize, ProductQueues>,
    band: PriceBand,
    next_seq: u64,
}

impl OrderBook {
    pub fn new(band: PriceBand) -> OrderBook {
        OrderBook { queues: BTreeMap::new(), band, next_seq: 0 }
    }

    /// Inserts an incoming limit order, matching it first-come-first-served
    /// against the opposite queue. Returns the id assigned to the order and
    /// the fills it caused, priced at each resting order's limit.
    pub fn match_insert(
        &mut self,
        product: usize,
        side: Side,
        price: Price,
        volume: Volume,
    ) -> Result<(OrderId, Vec<Transaction>), BookError> {
        if volume.is_zero() {
            return Err(BookError::ZeroVolume);
        }
        self.band.check(price)?;
        let id = self.next_seq;
        self.next_seq += 1;

        let queues = self.queues.entry(product).or_default();
        let mut remaining = volume;
        let mut fills = Vec::new();
        let opposite = match side {
            Side::Buy => &mut queues.asks,
            Side::Sell => &mut queues.bids,
        };
        while !remaining.is_zero() {
            let Some(best) = opposite.first_mut() else { break };
            let crosses = match side {
                Side::Buy => best.price.cents() <= price.cents(),
                Side::Sell => best.price.cents() >= price.cents(),
            };
            if !crosses {
                break;
            }
            let traded = remaining.min(best.volume);
            fills.push(Transaction {
                product,
                resting_id: best.id,
                taker_id: Some(id),
                resting_side: best.side,
                price: best.price,
                volume: traded,
            });
            remaining = remaining.saturating_sub(traded);
            best.volume = best.volume.saturating_sub(traded);
            if best.volume.is_zero() {
                opposite.remove(0);
            }
        }
        if !remaining.is_zero() {
            let order = Order { id, product, side, price, volume: remaining, seq: id };
            let queue = match side {
                Side::Buy => &mut queues.bids,
                Side::Sell => &mut queues.asks,
            };
            let pos = queue.partition_point(|o| ranks_before(o, &order));
            queue.insert(pos, order);
        }
        debug_assert!(self.product_uncrossed(product));
        Ok((id, fills))
    }

    fn product_uncrossed(&self, product: usize) -> bool {
        let Some(q) = self.queues.get(&product) else { return true };
        match (q.bids.first(), q.asks.first()) {
            (Some(b), Some(a)) => b.price.cents() < a.price.cents(),
            _ => true,
        }
    }

    /// True when no product has a bid at or above an ask.
    pub fn is_uncrossed(&self) -> bool {
        self.queues.keys().all(|&p| self.product_uncrossed(p))
    }

    /// Lifts fractions of resting orders. Each `(id, fraction)` removes
    /// `fraction` of the order's remaining volume, rounded to the micro-MW
    /// grain, and settles cash at the resting limit price over `duration_h`
    /// hours of delivery.
    pub fn apply_acceptance(
        &mut self,
        fills: &[(OrderId, f64)],
        duration_h: f64,
        mode: SettlementMode,
    ) -> Result<AcceptanceReport, BookError> {
        for (i, (id, fraction)) in fills.iter().enumerate() {
            if !fraction.is_finite() || *fraction < 0.0 || *fraction > 1.0 {
                return Err(BookError::FractionRange { id: *id, fraction: *fraction });
            }
            if fills[..i].iter().any(|(other, _)| other == id) {
                return Err(BookError::DuplicateAcceptance(*id));
            }
            if self.find_order(*id).is_none() {
                return Err(BookError::UnknownOrder(*id));
            }
        }

        let mut report = AcceptanceReport::default();
        for &(id, fraction) in fills {
            let order = self.find_order_mut(id).expect("validated above");
            let taken_micro = (fraction * order.volume.micro() as f64).round() as i64;
            if taken_micro == 0 {
                continue;
            }
            let taken = Volume::from_micro(taken_micro);
            let product = order.product;
            let side = order.side;
            let price = order.price;
            order.volume = order.volume.saturating_sub(taken);
            let emptied = order.volume.is_zero();
            report.transactions.push(Transaction {
                product,
                resting_id: id,
                taker_id: None,
                resting_side: side,
                price,
                volume: taken,
            });
            *report.v_con_micro.entry(product).or_insert(0) +=
                Power::from_acceptance(taken, side).micro();
            report.cash_eur +=
                side.acceptance_sign() as f64 * settle_cash(taken, price, duration_h, mode);
            if emptied {
                self.remove_order(id);
            }
        }
        Ok(report)
    }

    fn find_order(&self, id: OrderId) -> Option<&Order> {
        self.queues
            .values()
            .flat_map(|q| q.bids.iter().chain(q.asks.iter()))
            .find(|o| o.id == id)
    }

    fn find_order_mut(&mut self, id: OrderId) -> Option<&mut Order> {
        self.queues
            .values_mut()
            .flat_map(|q| q.bids.iter_mut().chain(q.asks.iter_mut()))
            .find(|o| o.id == id)
    }

    fn remove_order(&mut self, id: OrderId) {
        for q in self.queues.values_mut() {
            q.bids.retain(|o| o.id != id);
            q.asks.retain(|o| o.id != id);
        }
    }

    /// Removes and returns every order resting on products not in `open`.
    pub fn purge_closed(&mut self, open: &[usize]) -> Vec<Order> {
        let mut removed = Vec::new();
        let products: Vec<usize> = self.queues.keys().copied().collect();
        for p in products {
            if open.contains(&p) {
                continue;
            }
            let q = self.queues.remove(&p).unwrap();
            removed.extend(q.bids);
            removed.extend(q.asks);
        }
        removed
    }

    /// Resting orders of `product` on `side`, best price first.
    pub fn level(&self, product: usize, side: Side) -> &[Order] {
        static EMPTY: &[Order] = &[];
        match self.queues.get(&product) {
            Some(q) => match side {
                Side::Buy => &q.bids,
                Side::Sell => &q.asks,
            },
            None => EMPTY,
        }
    }

    /// All resting orders, iterated product by product, bids before asks.
    pub fn orders(&self) -> impl Iterator<Item = &Order> {
        self.queues.values().flat_map(|q| q.bids.iter().chain(q.asks.iter()))
    }

    pub fn best_bid(&self, product: usize) -> Option<&Order> {
        self.level(product, Side::Buy).first()
    }

    pub fn best_ask(&self, product: usize) -> Option<&Order> {
        self.level(product, Side::Sell).first()
    }

    /// Total resting volume in micro-MW.
    pub fn resting_micro(&self) -> i64 {
        self.orders().map(|o| o.volume.micro()).sum()
    }

    pub fn band(&self) -> PriceBand {
        self.band
    }
}

impl Default for OrderBook {
    fn default() -> Self {
        OrderBook::new(PriceBand::default())
    }
}

/// Queue order: better price first, then older arrival.
fn ranks_before(a: &Order, b: &Order) -> bool {
    let price_rank = match a.side {
        Side::Buy => a.price.cents() > b.price.cents(),
        Side::Sell => a.price.cents() < b.price.cents(),
    };
    price_rank || (a.price == b.price && a.seq < b.seq)
}
