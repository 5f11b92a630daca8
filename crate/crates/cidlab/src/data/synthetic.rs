//! Seeded synthetic trading days: a mean-reverting mid price, per-slot
//! daily shape, two-sided order flow around the mid, and occasional
//! guaranteed cross-slot arbitrage pairs so a storage unit has something to
//! learn. Stands in for historical exchange data; no fidelity to any real
//! feed is claimed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::market::{MarketCalendar, Price, PriceBand, Side, Volume};

use super::{offset_day_id, DayRecord, DayStep, OrderEvent};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    /// Long-run mid price the hourly process reverts to.
    pub mid_mean_eur: f64,
    /// Mean-reversion weight per step, in `[0, 1]`.
    pub mid_reversion: f64,
    /// Standard deviation of the per-step mid increment.
    pub mid_volatility: f64,
    /// Half-spread bounds either side of the mid.
    pub spread_min_eur: f64,
    pub spread_max_eur: f64,
    /// Standard deviation of per-order price noise.
    pub price_jitter_eur: f64,
    /// Amplitude of the deterministic within-day slot price shape.
    pub slot_shape_eur: f64,
    /// Order volume bounds, MW.
    pub volume_min_mw: f64,
    pub volume_max_mw: f64,
    /// Mean arrivals per trading step.
    pub orders_per_step: f64,
    /// Probability that a step receives an injected sell-low/buy-high pair
    /// across two delivery slots.
    pub arbitrage_prob: f64,
    /// Price gap of the injected pair.
    pub arbitrage_gap_eur: f64,
    /// First day id of the run, `YYYY-MM-DD`.
    pub start_day: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            mid_mean_eur: 40.0,
            mid_reversion: 0.1,
            mid_volatility: 1.5,
            spread_min_eur: 0.5,
            spread_max_eur: 3.0,
            price_jitter_eur: 0.3,
            slot_shape_eur: 8.0,
            volume_min_mw: 0.5,
            volume_max_mw: 8.0,
            orders_per_step: 3.0,
            arbitrage_prob: 0.25,
            arbitrage_gap_eur: 12.0,
            start_day: "2018-01-01".into(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::BadConfig(m.into()));
        if !(0.0..=1.0).contains(&self.mid_reversion) {
            return bad("mid_reversion must be in [0, 1]");
        }
        if self.mid_volatility < 0.0 || self.orders_per_step < 0.0 || self.price_jitter_eur < 0.0 {
            return bad("volatility, jitter, and arrival rate must be non-negative");
        }
        if self.spread_min_eur < 0.0 || self.spread_max_eur < self.spread_min_eur {
            return bad("spread bounds must satisfy 0 <= min <= max");
        }
        if self.volume_min_mw < 0.001 || self.volume_max_mw < self.volume_min_mw {
            return bad("volume bounds must satisfy 0.001 <= min <= max");
        }
        if !(0.0..=1.0).contains(&self.arbitrage_prob) {
            return bad("arbitrage_prob must be a probability");
        }
        if super::parse_day_id(&self.start_day).is_none() {
            return bad("start_day must be YYYY-MM-DD");
        }
        Ok(())
    }
}

/// Standard normal draw by the polar method.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u = rng.gen_range(-1.0_f64..1.0);
        let v = rng.gen_range(-1.0_f64..1.0);
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Small-rate Poisson draw (product-of-uniforms method).
fn poisson(rng: &mut ChaCha8Rng, rate: f64) -> usize {
    if rate <= 0.0 {
        return 0;
    }
    let limit = (-rate).exp();
    let mut k = 0;
    let mut p = 1.0;
    loop {
        p *= rng.gen_range(0.0_f64..1.0);
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

fn snap_price(eur: f64, band: &PriceBand) -> Price {
    let clamped = eur.clamp(band.lo + 0.01, band.hi - 0.01);
    Price::from_cents((clamped * 100.0).round() as i64)
}

fn snap_volume(mw: f64, lo: f64, hi: f64) -> Volume {
    let clamped = mw.clamp(lo, hi);
    Volume::from_micro(((clamped * 1000.0).round() as i64).max(1) * 1000)
}

/// Deterministic within-day price shape: cheap night, morning ramp, evening
/// peak. `x` is the slot position in `[0, 1)`.
fn slot_shape(x: f64) -> f64 {
    use std::f64::consts::PI;
    0.6 * (2.0 * PI * (x - 0.3)).sin() + 0.4 * (4.0 * PI * (x - 0.15)).sin()
}

/// Generates `days` reproducible synthetic day records on the calendar's
/// trading grid. The same `(config, calendar, seed)` triple always yields
/// identical records; each day derives its own stream from the seed.
pub fn synth_generate(
    config: &SyntheticConfig,
    calendar: &MarketCalendar,
    days: usize,
    seed: u64,
) -> Result<Vec<DayRecord>, SynthError> {
    config.validate()?;
    let mut out = Vec::with_capacity(days);
    for d in 0..days {
        let day = offset_day_id(&config.start_day, d as i64)
            .ok_or_else(|| SynthError::BadConfig("day id overflow".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (d as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        out.push(generate_one(config, calendar, &day, &mut rng));
    }
    Ok(out)
}

fn generate_one(
    config: &SyntheticConfig,
    calendar: &MarketCalendar,
    day: &str,
    rng: &mut ChaCha8Rng,
) -> DayRecord {
    let band = PriceBand::default();
    let grid = calendar.trading_grid().to_vec();
    let slots = calendar.slots();
    let steps = grid.len();

    // Day-ahead hourly curve: the slot shape sampled hourly plus noise,
    // fixed for the whole day.
    let mut da = [0.0_f64; 24];
    let day_level = config.mid_mean_eur + 4.0 * normal(rng);
    for (h, v) in da.iter_mut().enumerate() {
        *v = day_level + config.slot_shape_eur * slot_shape(h as f64 / 24.0) + normal(rng);
    }

    // Imbalance series simulated per quarter hour, four quarters of history
    // before the first step.
    let mut imb_price = Vec::with_capacity(steps + 4);
    let mut imb_volume = Vec::with_capacity(steps + 4);
    let mut ip = day_level + 5.0;
    let mut iv = 0.0;
    for _ in 0..steps + 4 {
        ip += 0.2 * (day_level + 5.0 - ip) + 3.0 * normal(rng);
        iv = 0.7 * iv + 60.0 * normal(rng);
        imb_price.push(ip);
        imb_volume.push(iv);
    }

    let mut mid = day_level;
    let mut day_steps = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut step = DayStep::default();
        for q in 0..4 {
            step.exog.imbalance_price_eur[q] = imb_price[t + q];
            step.exog.system_imbalance_mw[q] = imb_volume[t + q];
        }
        step.exog.da_prices_eur = da;

        mid += config.mid_reversion * (config.mid_mean_eur - mid)
            + config.mid_volatility * normal(rng);
        let open = calendar
            .open_products(grid[t])
            .expect("grid times are always on the grid");
        if open.is_empty() {
            day_steps.push(step);
            continue;
        }

        for _ in 0..poisson(rng, config.orders_per_step) {
            let product = open[rng.gen_range(0..open.len())];
            let shape = config.slot_shape_eur * slot_shape(product as f64 / slots as f64);
            let half_spread = rng.gen_range(config.spread_min_eur..=config.spread_max_eur);
            let side = if rng.gen_bool(0.5) { Side::Buy } else { Side::Sell };
            let drift = match side {
                Side::Buy => -half_spread,
                Side::Sell => half_spread,
            };
            let price = mid + shape + drift + config.price_jitter_eur * normal(rng);
            step.orders.push(OrderEvent {
                product,
                side,
                price: snap_price(price, &band),
                volume: snap_volume(
                    rng.gen_range(config.volume_min_mw..=config.volume_max_mw),
                    config.volume_min_mw,
                    config.volume_max_mw,
                ),
            });
        }

        if open.len() >= 2 && rng.gen_bool(config.arbitrage_prob) {
            // A matched pair a storage unit can arbitrage: sell offered low
            // on one slot, buy bid high on another.
            let i = rng.gen_range(0..open.len());
            let mut j = rng.gen_range(0..open.len() - 1);
            if j >= i {
                j += 1;
            }
            let volume = snap_volume(
                rng.gen_range(config.volume_min_mw..=config.volume_max_mw),
                config.volume_min_mw,
                config.volume_max_mw,
            );
            step.orders.push(OrderEvent {
                product: open[i],
                side: Side::Sell,
                price: snap_price(mid - config.arbitrage_gap_eur / 2.0, &band),
                volume,
            });
            step.orders.push(OrderEvent {
                product: open[j],
                side: Side::Buy,
                price: snap_price(mid + config.arbitrage_gap_eur / 2.0, &band),
                volume,
            });
        }
        day_steps.push(step);
    }
    DayRecord { day: day.to_string(), steps: day_steps }
}
