//! Product definitions and the trading/delivery timetable.
//!
//! All times are minutes relative to a horizon origin (00:00 of the day
//! before delivery), so a full delivery day spans minutes 1440..2880 and an
//! evening trading session starts at minute 1020 (17:00 the day before).
//!
//! Each product covers one delivery slot; product index and slot index
//! coincide. The order gate of a product closes a fixed lead time before its
//! delivery starts, while the storage schedule for a slot stays adjustable
//! until physical delivery begins.

use thiserror::Error;

/// Minutes between gate closure and delivery start.
pub const GATE_LEAD_MIN: i64 = 30;

#[derive(Debug, Error, PartialEq)]
pub enum CalendarError {
    #[error("calendar needs at least one delivery slot and one decision step")]
    Empty,
    #[error("slot length and step length must be positive minutes")]
    BadGrid,
    #[error("time {0} min is not on the trading grid")]
    OffGrid(i64),
    #[error("time {t} min outside trading horizon [{first}, {last}]")]
    OutsideHorizon { t: i64, first: i64, last: i64 },
    #[error("product {0} unknown")]
    UnknownProduct(usize),
}

/// A tradable delivery slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Product {
    pub index: usize,
    pub delivery_start_min: i64,
    pub delivery_end_min: i64,
    pub gate_close_min: i64,
}

impl Product {
    /// Delivery duration in hours; the factor converting traded power to
    /// energy at settlement.
    pub fn duration_h(&self) -> f64 {
        (self.delivery_end_min - self.delivery_start_min) as f64 / 60.0
    }
}

/// Trading grid plus the delivery timetable it trades into.
///
/// The trading grid has `decision_steps() + 1` times: the agent acts at each
/// of the first `K` times, and the final grid time closes the episode.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketCalendar {
    products: Vec<Product>,
    trading_grid: Vec<i64>,
    tau_init_min: i64,
    slot_min: i64,
}

impl MarketCalendar {
    /// Builds a calendar of `slots` back-to-back products of `slot_min`
    /// minutes starting at `tau_init_min`, traded over a grid of
    /// `decision_steps + 1` times spaced `step_min` minutes from
    /// `trading_start_min`.
    pub fn new(
        tau_init_min: i64,
        slots: usize,
        slot_min: i64,
        trading_start_min: i64,
        step_min: i64,
        decision_steps: usize,
    ) -> Result<MarketCalendar, CalendarError> {
        if slots == 0 || decision_steps == 0 {
            return Err(CalendarError::Empty);
        }
        if slot_min <= 0 || step_min <= 0 {
            return Err(CalendarError::BadGrid);
        }
        let products = (0..slots)
            .map(|i| {
                let start = tau_init_min + i as i64 * slot_min;
                Product {
                    index: i,
                    delivery_start_min: start,
                    delivery_end_min: start + slot_min,
                    gate_close_min: start - GATE_LEAD_MIN,
                }
            })
            .collect();
        let trading_grid = (0..=decision_steps)
            .map(|k| trading_start_min + k as i64 * step_min)
            .collect();
        Ok(MarketCalendar { products, trading_grid, tau_init_min, slot_min })
    }

    /// Quarter-hourly products over a full delivery day (96 slots from minute
    /// 1440), traded from 16:00 the day before until the last gate closes.
    pub fn full_day() -> MarketCalendar {
        MarketCalendar::new(1440, 96, 15, 960, 15, 125).expect("static calendar")
    }

    /// Quarter-hourly products over a full delivery day, traded on the
    /// evening session grid: 17:00 the day before until 03:00, 40 decisions.
    pub fn evening_session() -> MarketCalendar {
        MarketCalendar::new(1440, 96, 15, 1020, 15, 40).expect("static calendar")
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn product(&self, index: usize) -> Result<&Product, CalendarError> {
        self.products.get(index).ok_or(CalendarError::UnknownProduct(index))
    }

    pub fn slots(&self) -> usize {
        self.products.len()
    }

    pub fn slot_minutes(&self) -> i64 {
        self.slot_min
    }

    /// Delivery slot length in hours.
    pub fn slot_h(&self) -> f64 {
        self.slot_min as f64 / 60.0
    }

    /// Start label of delivery slot `s`.
    pub fn slot_start_min(&self, s: usize) -> i64 {
        self.tau_init_min + s as i64 * self.slot_min
    }

    /// First delivery instant.
    pub fn tau_init_min(&self) -> i64 {
        self.tau_init_min
    }

    /// End of the last delivery slot.
    pub fn tau_term_min(&self) -> i64 {
        self.tau_init_min + self.products.len() as i64 * self.slot_min
    }

    /// Number of decision steps `K`; the grid holds one more time.
    pub fn decision_steps(&self) -> usize {
        self.trading_grid.len() - 1
    }

    pub fn trading_grid(&self) -> &[i64] {
        &self.trading_grid
    }

    pub fn step_time_min(&self, step: usize) -> i64 {
        self.trading_grid[step]
    }

    fn check_on_grid(&self, t_min: i64) -> Result<(), CalendarError> {
        let first = self.trading_grid[0];
        let last = *self.trading_grid.last().unwrap();
        if t_min < first || t_min > last {
            return Err(CalendarError::OutsideHorizon { t: t_min, first, last });
        }
        let step = self.trading_grid[1] - self.trading_grid[0];
        if (t_min - first) % step != 0 {
            return Err(CalendarError::OffGrid(t_min));
        }
        Ok(())
    }

    /// Products whose order gate is still open at `t_min`: those with
    /// `t <= gate_close`. Errors if `t_min` is off the trading grid.
    pub fn open_products(&self, t_min: i64) -> Result<Vec<usize>, CalendarError> {
        self.check_on_grid(t_min)?;
        Ok(self
            .products
            .iter()
            .filter(|p| t_min <= p.gate_close_min)
            .map(|p| p.index)
            .collect())
    }

    pub fn is_open(&self, product: usize, t_min: i64) -> Result<bool, CalendarError> {
        Ok(t_min <= self.product(product)?.gate_close_min)
    }

    /// Index of the first delivery slot whose schedule is still adjustable at
    /// `t_min` (delivery has not begun). Returns `slots()` when none is.
    pub fn first_adjustable_slot(&self, t_min: i64) -> usize {
        if t_min <= self.tau_init_min {
            return 0;
        }
        let offset = t_min - self.tau_init_min;
        let s = (offset + self.slot_min - 1) / self.slot_min;
        (s as usize).min(self.products.len())
    }
}
