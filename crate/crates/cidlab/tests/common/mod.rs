//! Shared helpers for the integration tests: an exact reference optimiser
//! and seeded random instance generators.

#![allow(dead_code)]

pub mod oracle;

use cidlab::market::{Price, SettlementMode, Side, Volume};
use cidlab::optimizer::{TradeOrder, TradeProblem};
use cidlab::storage::StorageParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Draws a small acceptance problem whose pre-existing state is feasible by
/// construction: the anchor schedule respects caps and the charge corridor,
/// the contracted position mirrors it exactly, and the terminal target is
/// the state the anchor schedule already reaches.
pub fn random_trade_problem(rng: &mut ChaCha8Rng, efficiency: f64) -> TradeProblem {
    let s = rng.gen_range(1..=4);
    let slot_minutes = 15;
    let slot_h = 0.25;
    let caps: [f64; 5] = [2.0, 5.0, 8.5, 10.0, 20.0];
    let c_cap = caps[rng.gen_range(0..caps.len())];
    let g_cap = caps[rng.gen_range(0..caps.len())];
    let socs: [f64; 4] = [1.0, 2.5, 5.0, 10.0];
    let soc_max = socs[rng.gen_range(0..socs.len())];
    let milli = |mw: f64| (mw * 1000.0).round() as i64 * 1000; // micro on the milli grain

    // Eighth-MWh grid: every reachable stored-energy node is then a small
    // dyadic rational, so the f64 path below never rounds.
    let anchor = {
        let frac = rng.gen_range(0.2..0.8);
        (frac * soc_max * 8.0).round() / 8.0
    };

    // Random pre-committed schedule, then zero out slots until the stored
    // energy path stays inside the corridor. Flows sit on a half-MW grid so
    // the quarter-hour energy steps are dyadic and the f64 path (and with it
    // the terminal target) is exact, which the rational reference optimiser
    // depends on. Lossy instances skip the pre-schedule: division by the
    // efficiency leaves the dyadic grid.
    let mut g = vec![0_i64; s];
    let mut c = vec![0_i64; s];
    if efficiency == 1.0 {
        for i in 0..s {
            if rng.gen_bool(0.5) {
                continue;
            }
            if rng.gen_bool(0.5) {
                g[i] = rng.gen_range(0..=(0.6 * g_cap) as i64) * 500_000;
            } else {
                c[i] = rng.gen_range(0..=(0.6 * c_cap) as i64) * 500_000;
            }
        }
    }
    let path = |g: &[i64], c: &[i64]| -> Vec<f64> {
        let mut soc = anchor;
        let mut out = vec![soc];
        for i in 0..s {
            soc += slot_h * (efficiency * c[i] as f64 / 1e6 - g[i] as f64 / 1e6 / efficiency);
            out.push(soc);
        }
        out
    };
    loop {
        let p = path(&g, &c);
        match p.iter().position(|&v| !(0.0..=soc_max).contains(&v)) {
            Some(node) => {
                g[node - 1] = 0;
                c[node - 1] = 0;
            }
            None => break,
        }
    }
    let soc_term = *path(&g, &c).last().unwrap();

    let n = rng.gen_range(0..=8);
    let mut orders = Vec::with_capacity(n);
    for id in 0..n {
        let slot = rng.gen_range(0..s);
        let side = if rng.gen_bool(0.5) { Side::Buy } else { Side::Sell };
        let cents = rng.gen_range(-5_000..15_000);
        let volume = milli(rng.gen_range(0.001..10.0)).max(1_000);
        orders.push(TradeOrder {
            id: id as u64,
            slot,
            side,
            price: Price::from_cents(cents),
            volume: Volume::from_micro(volume),
        });
    }

    TradeProblem {
        slot_ids: (0..s).collect(),
        p_mar_micro: (0..s).map(|i| g[i] - c[i]).collect(),
        g_micro: g,
        c_micro: c,
        soc_anchor_mwh: anchor,
        orders,
        params: StorageParams {
            soc_min_mwh: 0.0,
            soc_max_mwh: soc_max,
            soc_init_mwh: anchor,
            soc_term_mwh: soc_term,
            charge_min_mw: 0.0,
            charge_max_mw: c_cap,
            discharge_min_mw: 0.0,
            discharge_max_mw: g_cap,
            efficiency,
        },
        slot_minutes,
        mode: SettlementMode::Energy,
    }
}
