//! Fixed-grain quantities shared by the market and storage layers.
//!
//! Volumes and power positions are carried as integer micro-megawatts and
//! prices as integer cents so that conservation checks and the per-slot
//! imbalance bookkeeping are exact integer identities. Public constructors
//! accept floating-point megawatts / EUR per MWh and enforce the coarser
//! exchange grains (0.001 MW, 0.01 EUR/MWh) at the boundary.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use thiserror::Error;

/// Micro-megawatts per megawatt.
pub const MICRO_PER_MW: i64 = 1_000_000;
/// Smallest volume an order may be expressed in: 0.001 MW.
pub const VOLUME_GRAIN_MICRO: i64 = 1_000;
/// Cents per EUR.
pub const CENTS_PER_EUR: i64 = 100;

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("volume {0} MW is not a non-negative multiple of 0.001 MW")]
    VolumeGrain(f64),
    #[error("price {0} EUR/MWh is not a multiple of 0.01 EUR/MWh")]
    PriceTick(f64),
    #[error("price {price} EUR/MWh outside allowed band [{lo}, {hi}]")]
    PriceBand { price: f64, lo: f64, hi: f64 },
}

/// Order side. `Buy` rests demand, `Sell` rests supply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    /// Sign of the position change when a resting order of this side is
    /// accepted: hitting a resting buy means the accepting agent delivers
    /// power (+1), hitting a resting sell means it takes power (-1).
    pub fn acceptance_sign(self) -> i64 {
        match self {
            Side::Buy => 1,
            Side::Sell => -1,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Buy => write!(f, "B"),
            Side::Sell => write!(f, "S"),
        }
    }
}

/// Non-negative quantity of power in micro-MW.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Volume(i64);

impl Volume {
    pub const ZERO: Volume = Volume(0);

    /// Constructs from megawatts, requiring a non-negative multiple of the
    /// 0.001 MW grain (up to f64 representation noise).
    pub fn from_mw(mw: f64) -> Result<Volume, UnitError> {
        let scaled = mw * MICRO_PER_MW as f64;
        let rounded = scaled.round();
        let off_grain = (scaled - rounded).abs() > 1e-3;
        if !rounded.is_finite() || rounded < 0.0 || off_grain {
            return Err(UnitError::VolumeGrain(mw));
        }
        let micro = rounded as i64;
        if micro % VOLUME_GRAIN_MICRO != 0 {
            return Err(UnitError::VolumeGrain(mw));
        }
        Ok(Volume(micro))
    }

    /// Constructs from raw micro-MW without grain validation. Used for
    /// partial-acceptance residuals, which may be finer than the order grain.
    pub fn from_micro(micro: i64) -> Volume {
        assert!(micro >= 0, "volume must be non-negative, got {micro} micro-MW");
        Volume(micro)
    }

    pub fn micro(self) -> i64 {
        self.0
    }

    pub fn mw(self) -> f64 {
        self.0 as f64 / MICRO_PER_MW as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn min(self, other: Volume) -> Volume {
        Volume(self.0.min(other.0))
    }

    pub fn saturating_sub(self, other: Volume) -> Volume {
        Volume((self.0 - other.0).max(0))
    }
}

impl Add for Volume {
    type Output = Volume;
    fn add(self, rhs: Volume) -> Volume {
        Volume(self.0 + rhs.0)
    }
}

impl AddAssign for Volume {
    fn add_assign(&mut self, rhs: Volume) {
        self.0 += rhs.0;
    }
}

impl fmt::Display for Volume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.mw())
    }
}

/// Signed power in micro-MW. Positive values mean net delivery (the agent has
/// sold power for the slot), negative values mean net offtake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Power(i64);

impl Power {
    pub const ZERO: Power = Power(0);

    pub fn from_micro(micro: i64) -> Power {
        Power(micro)
    }

    pub fn micro(self) -> i64 {
        self.0
    }

    pub fn mw(self) -> f64 {
        self.0 as f64 / MICRO_PER_MW as f64
    }

    /// Position change from accepting `volume` of a resting order of `side`.
    pub fn from_acceptance(volume: Volume, side: Side) -> Power {
        Power(side.acceptance_sign() * volume.micro())
    }

    pub fn positive_part(self) -> Power {
        Power(self.0.max(0))
    }

    pub fn negative_part(self) -> Power {
        Power((-self.0).max(0))
    }
}

impl Add for Power {
    type Output = Power;
    fn add(self, rhs: Power) -> Power {
        Power(self.0 + rhs.0)
    }
}

impl Sub for Power {
    type Output = Power;
    fn sub(self, rhs: Power) -> Power {
        Power(self.0 - rhs.0)
    }
}

impl AddAssign for Power {
    fn add_assign(&mut self, rhs: Power) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Power {
    fn sub_assign(&mut self, rhs: Power) {
        self.0 -= rhs.0;
    }
}

impl Neg for Power {
    type Output = Power;
    fn neg(self) -> Power {
        Power(-self.0)
    }
}

impl fmt::Display for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.mw())
    }
}

/// Limit price in cents per MWh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Price(i64);

impl Price {
    /// Constructs from EUR/MWh, requiring a multiple of the 0.01 tick.
    pub fn from_eur_per_mwh(eur: f64) -> Result<Price, UnitError> {
        let scaled = eur * CENTS_PER_EUR as f64;
        let rounded = scaled.round();
        if !rounded.is_finite() || (scaled - rounded).abs() > 1e-6 * scaled.abs().max(1.0) {
            return Err(UnitError::PriceTick(eur));
        }
        Ok(Price(rounded as i64))
    }

    pub fn from_cents(cents: i64) -> Price {
        Price(cents)
    }

    pub fn cents(self) -> i64 {
        self.0
    }

    pub fn eur_per_mwh(self) -> f64 {
        self.0 as f64 / CENTS_PER_EUR as f64
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.eur_per_mwh())
    }
}

/// Price band orders must fall inside, in EUR/MWh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBand {
    pub lo: f64,
    pub hi: f64,
}

impl Default for PriceBand {
    fn default() -> Self {
        PriceBand { lo: -3000.0, hi: 3000.0 }
    }
}

impl PriceBand {
    pub fn check(&self, price: Price) -> Result<(), UnitError> {
        let p = price.eur_per_mwh();
        if p < self.lo || p > self.hi {
            return Err(UnitError::PriceBand { price: p, lo: self.lo, hi: self.hi });
        }
        Ok(())
    }
}

/// Cash value of a fill: volume times price times the delivery duration in
/// hours under [`SettlementMode::Energy`], or volume times price directly
/// under [`SettlementMode::Power`].
pub fn settle_cash(volume: Volume, price: Price, duration_h: f64, mode: SettlementMode) -> f64 {
    let base = volume.mw() * price.eur_per_mwh();
    match mode {
        SettlementMode::Energy => base * duration_h,
        SettlementMode::Power => base,
    }
}

/// How fill cash flows are computed. `Energy` converts the traded power to
/// energy over the product's delivery duration; `Power` omits the duration
/// factor and settles power times price directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SettlementMode {
    #[default]
    Energy,
    Power,
}
