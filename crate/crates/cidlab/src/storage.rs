//! Storage asset: technical parameters, market position, delivery schedule.
//!
//! The position tracks per-slot contracted power `P_mar` (positive = net
//! sold), the schedule tracks planned discharge `G` and charge `C`, and the
//! per-slot imbalance is `Delta = (G - C) - P_mar`. All three live on the
//! integer micro-MW grid so the imbalance bookkeeping is exact; only the
//! state of charge, which involves the efficiency factor, is floating point.

use thiserror::Error;

use crate::market::Power;

const SOC_TOL_MWH: f64 = 1e-9;

/// State-of-charge drift tolerated under lossy efficiency, where micro-grain
/// fills cannot land exactly on the energy lattice and the residuals add up
/// over the day. The episode validator accepts corridor and terminal misses
/// up to this bound, and the trade solver relaxes its terminal pin by the
/// same amount so a drifted position is never spuriously infeasible. With
/// unit efficiency no drift at all is accepted.
pub const SOC_DRIFT_TOL_MWH: f64 = 1e-2;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("vector length {got} does not match slot count {want}")]
    LengthMismatch { want: usize, got: usize },
    #[error("invalid storage parameters: {0}")]
    BadParams(String),
}

/// Technical limits of the storage unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageParams {
    pub soc_min_mwh: f64,
    pub soc_max_mwh: f64,
    pub soc_init_mwh: f64,
    pub soc_term_mwh: f64,
    pub charge_min_mw: f64,
    pub charge_max_mw: f64,
    pub discharge_min_mw: f64,
    pub discharge_max_mw: f64,
    /// Conversion efficiency applied once when charging and once when
    /// discharging: the state of charge gains `eta * C` and loses `G / eta`.
    pub efficiency: f64,
}

impl Default for StorageParams {
    /// A 200 MWh unit with 200 MW symmetric power, held at half charge with
    /// perfect efficiency.
    fn default() -> Self {
        StorageParams {
            soc_min_mwh: 0.0,
            soc_max_mwh: 200.0,
            soc_init_mwh: 100.0,
            soc_term_mwh: 100.0,
            charge_min_mw: 0.0,
            charge_max_mw: 200.0,
            discharge_min_mw: 0.0,
            discharge_max_mw: 200.0,
            efficiency: 1.0,
        }
    }
}

impl StorageParams {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let bad = |msg: &str| Err(ScheduleError::BadParams(msg.to_string()));
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return bad("efficiency must be in (0, 1]");
        }
        if self.soc_min_mwh > self.soc_max_mwh {
            return bad("soc_min exceeds soc_max");
        }
        for (name, v) in [("soc_init", self.soc_init_mwh), ("soc_term", self.soc_term_mwh)] {
            if v < self.soc_min_mwh - SOC_TOL_MWH || v > self.soc_max_mwh + SOC_TOL_MWH {
                return bad(&format!("{name} outside [soc_min, soc_max]"));
            }
        }
        if self.charge_max_mw < 0.0 || self.discharge_max_mw < 0.0 {
            return bad("power caps must be non-negative");
        }
        if self.charge_min_mw != 0.0 || self.discharge_min_mw != 0.0 {
            return bad("minimum flows must be zero: a positive minimum makes the idle mode infeasible");
        }
        Ok(())
    }
}

/// Planned charge and discharge per delivery slot, micro-MW.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageSchedule {
    pub g_micro: Vec<i64>,
    pub c_micro: Vec<i64>,
}

impl StorageSchedule {
    pub fn idle(slots: usize) -> StorageSchedule {
        StorageSchedule { g_micro: vec![0; slots], c_micro: vec![0; slots] }
    }

    pub fn slots(&self) -> usize {
        self.g_micro.len()
    }

    /// State of charge at every slot boundary, starting from
    /// `params.soc_init_mwh`, computed by the forward recursion
    /// `soc' = soc + slot_h * (eta * C - G / eta)`.
    pub fn soc_profile(&self, params: &StorageParams, slot_h: f64) -> Vec<f64> {
        let eta = params.efficiency;
        let mut soc = Vec::with_capacity(self.slots() + 1);
        let mut cur = params.soc_init_mwh;
        soc.push(cur);
        for s in 0..self.slots() {
            let c = self.c_micro[s] as f64 / 1e6;
            let g = self.g_micro[s] as f64 / 1e6;
            cur += slot_h * (eta * c - g / eta);
            soc.push(cur);
        }
        soc
    }
}

/// Contracted position and accumulated imbalance per delivery slot, micro-MW.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPosition {
    pub p_mar_micro: Vec<i64>,
    pub delta_micro: Vec<i64>,
}

impl MarketPosition {
    pub fn flat(slots: usize) -> MarketPosition {
        MarketPosition { p_mar_micro: vec![0; slots], delta_micro: vec![0; slots] }
    }

    pub fn slots(&self) -> usize {
        self.p_mar_micro.len()
    }

    pub fn p_mar_mw(&self) -> Vec<f64> {
        self.p_mar_micro.iter().map(|&m| m as f64 / 1e6).collect()
    }
}

/// One broken invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ChargeBound { slot: usize, mw: f64 },
    DischargeBound { slot: usize, mw: f64 },
    SimultaneousFlow { slot: usize },
    SocLow { node: usize, mwh: f64 },
    SocHigh { node: usize, mwh: f64 },
    SocTerminal { mwh: f64, target: f64 },
    ImbalanceIdentity { slot: usize },
}

/// Applies one clearing round: the traded position change `v_con` and the
/// schedule adjustments `dg`, `dc`, all micro-MW per slot. The imbalance
/// update is `delta += dg - dc - v_con`, exact in integers.
pub fn update_after_clear(
    position: &mut MarketPosition,
    schedule: &mut StorageSchedule,
    v_con: &[i64],
    dg: &[i64],
    dc: &[i64],
) -> Result<(), ScheduleError> {
    let want = position.slots();
    for got in [v_con.len(), dg.len(), dc.len(), schedule.slots()] {
        if got != want {
            return Err(ScheduleError::LengthMismatch { want, got });
        }
    }
    for s in 0..want {
        position.p_mar_micro[s] += v_con[s];
        schedule.g_micro[s] += dg[s];
        schedule.c_micro[s] += dc[s];
        position.delta_micro[s] += dg[s] - dc[s] - v_con[s];
    }
    Ok(())
}

/// Schedule adjustments that mirror a fill: after applying them the net flow
/// `G - C` of each slot equals the post-fill contracted position, leaving
/// zero imbalance wherever the power caps allow. Caps are respected by
/// clamping; any capped remainder stays in the imbalance.
pub fn default_adjustments(
    position: &MarketPosition,
    schedule: &StorageSchedule,
    params: &StorageParams,
    v_con: &[i64],
) -> Result<(Vec<i64>, Vec<i64>), ScheduleError> {
    let want = position.slots();
    if v_con.len() != want || schedule.slots() != want {
        return Err(ScheduleError::LengthMismatch { want, got: v_con.len().min(schedule.slots()) });
    }
    let g_cap = (params.discharge_max_mw * 1e6).round() as i64;
    let c_cap = (params.charge_max_mw * 1e6).round() as i64;
    let mut dg = vec![0; want];
    let mut dc = vec![0; want];
    for s in 0..want {
        // Net flow G - C that cancels the post-fill imbalance.
        let net_target = position.p_mar_micro[s] + v_con[s];
        let g_new = net_target.max(0).min(g_cap);
        let c_new = (-net_target).max(0).min(c_cap);
        dg[s] = g_new - schedule.g_micro[s];
        dc[s] = c_new - schedule.c_micro[s];
    }
    Ok((dg, dc))
}

/// Checks every schedule and position invariant, returning an empty list iff
/// all hold within 1e-9 MW / MWh.
pub fn validate(
    schedule: &StorageSchedule,
    position: &MarketPosition,
    params: &StorageParams,
    slot_h: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let tol_mw = 1e-9;
    for s in 0..schedule.slots() {
        let g = schedule.g_micro[s] as f64 / 1e6;
        let c = schedule.c_micro[s] as f64 / 1e6;
        if g < -tol_mw || g > params.discharge_max_mw + tol_mw {
            out.push(Violation::DischargeBound { slot: s, mw: g });
        }
        if c < -tol_mw || c > params.charge_max_mw + tol_mw {
            out.push(Violation::ChargeBound { slot: s, mw: c });
        }
        if g > tol_mw && c > tol_mw {
            out.push(Violation::SimultaneousFlow { slot: s });
        }
        let net = schedule.g_micro[s] - schedule.c_micro[s];
        if position.delta_micro[s] != net - position.p_mar_micro[s] {
            out.push(Violation::ImbalanceIdentity { slot: s });
        }
    }
    let soc = schedule.soc_profile(params, slot_h);
    for (n, &v) in soc.iter().enumerate() {
        if v < params.soc_min_mwh - SOC_TOL_MWH {
            out.push(Violation::SocLow { node: n, mwh: v });
        }
        if v > params.soc_max_mwh + SOC_TOL_MWH {
            out.push(Violation::SocHigh { node: n, mwh: v });
        }
    }
    let terminal = *soc.last().unwrap();
    if (terminal - params.soc_term_mwh).abs() > SOC_TOL_MWH {
        out.push(Violation::SocTerminal { mwh: terminal, target: params.soc_term_mwh });
    }
    out
}

/// Convenience: net position change of a slot as [`Power`].
pub fn slot_net(schedule: &StorageSchedule, s: usize) -> Power {
    Power::from_micro(schedule.g_micro[s] - schedule.c_micro[s])
}
