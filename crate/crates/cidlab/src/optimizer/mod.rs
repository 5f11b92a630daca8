//! Per-step bid acceptance for the storage unit.
//!
//! Given the open book, the contracted position, and the current schedule,
//! [`solve_trade`] picks acceptance fractions for resting orders plus
//! schedule adjustments that maximise immediate cash subject to power caps,
//! state-of-charge limits, and the terminal state-of-charge target. Charging
//! and discharging are mutually exclusive per slot; the choice is a binary
//! mode variable handled by branch and bound over LP relaxations. With
//! perfect efficiency the relaxation is already exact (simultaneous flows
//! cancel at no cost and project onto an exclusive solution with the same
//! objective), so that path never branches.
//!
//! The solution's `reward_eur` is the continuous optimum, which the
//! independent brute-force oracle in the test suite reproduces to 1e-6 EUR.
//! The executable side of the solution (fractions, `v_con`, adjustments) is
//! quantized to the micro-MW grid and repaired so that the applied schedule
//! stays feasible; with perfect efficiency the repair is exact on an integer
//! lattice and the realized cash equals the reported reward to f64 noise.

pub mod simplex;

use std::collections::BinaryHeap;

use thiserror::Error;

use crate::market::{
    MarketCalendar, OrderBook, OrderId, Price, SettlementMode, Side, Volume, settle_cash,
};
use crate::storage::{
    MarketPosition, ScheduleError, StorageParams, StorageSchedule, SOC_DRIFT_TOL_MWH,
};
use simplex::{Lp, LpError, LpRow};

/// Branch-and-bound integrality tolerance on simultaneous flow, MW.
const INT_TOL_MW: f64 = 1e-6;
/// Micro-MW-minute lattice units per MWh.
const LAT_PER_MWH: f64 = 60.0 * 1e6;
const NODE_CAP: usize = 20_000;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("signed volume undefined for negative volume {0}")]
    NegativeVolume(f64),
    #[error("invalid problem: {0}")]
    BadProblem(String),
    #[error(transparent)]
    Params(#[from] ScheduleError),
    #[error("solver failed ({source}); problem dump:\n{dump}")]
    Numerical { source: LpError, dump: String },
}

/// Position change caused by fully accepting a resting order of `side` with
/// volume `volume_mw`: positive when the agent delivers (resting buy),
/// negative when it takes power (resting sell).
pub fn sign_volume(volume_mw: f64, side: Side) -> Result<f64, SolveError> {
    if volume_mw < 0.0 || !volume_mw.is_finite() {
        return Err(SolveError::NegativeVolume(volume_mw));
    }
    Ok(side.acceptance_sign() as f64 * volume_mw)
}

/// One resting order visible to the solver. `slot` is a local index into the
/// problem's adjustable slots.
#[derive(Debug, Clone)]
pub struct TradeOrder {
    pub id: OrderId,
    pub slot: usize,
    pub side: Side,
    pub price: Price,
    pub volume: Volume,
}

/// Snapshot of everything the per-step optimisation sees.
#[derive(Debug, Clone)]
pub struct TradeProblem {
    /// Global delivery-slot index of each local slot, ascending.
    pub slot_ids: Vec<usize>,
    pub p_mar_micro: Vec<i64>,
    pub g_micro: Vec<i64>,
    pub c_micro: Vec<i64>,
    /// State of charge entering the first local slot.
    pub soc_anchor_mwh: f64,
    pub orders: Vec<TradeOrder>,
    pub params: StorageParams,
    pub slot_minutes: i64,
    pub mode: SettlementMode,
}

/// Outcome of [`solve_trade`]. `reward_eur` is the continuous optimum;
/// `realized_eur` is the cash of the quantized executable solution, equal to
/// the reward up to grid noise.
#[derive(Debug, Clone)]
pub struct TradeSolution {
    pub reward_eur: f64,
    /// `(order id, acceptance fraction)` per problem order, in order.
    pub fractions: Vec<(OrderId, f64)>,
    pub v_con_micro: Vec<i64>,
    pub dg_micro: Vec<i64>,
    pub dc_micro: Vec<i64>,
    /// Charge-mode flag per local slot after the trade.
    pub k_charge: Vec<bool>,
    /// State of charge from the anchor node through every local slot.
    pub soc_mwh: Vec<f64>,
    pub realized_eur: f64,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub simplex_iterations: usize,
    pub nodes_explored: usize,
    /// Total micro-MW moved by the grid repair pass.
    pub repaired_micro: i64,
    /// True when the applied solution is exact on the integer lattice.
    pub lattice_exact: bool,
    /// Terminal state-of-charge residual of the applied solution, MWh.
    pub terminal_residual_mwh: f64,
}

impl TradeProblem {
    /// Builds the problem as seen at trading time `t_min`: all slots not yet
    /// in delivery are adjustable, and every resting order of a product whose
    /// gate is still open is a candidate.
    pub fn from_state(
        book: &OrderBook,
        calendar: &MarketCalendar,
        t_min: i64,
        position: &MarketPosition,
        schedule: &StorageSchedule,
        params: &StorageParams,
        mode: SettlementMode,
    ) -> Result<TradeProblem, SolveError> {
        params.validate()?;
        let slots = calendar.slots();
        if position.slots() != slots || schedule.slots() != slots {
            return Err(SolveError::BadProblem(format!(
                "state has {}/{} slots, calendar has {slots}",
                position.slots(),
                schedule.slots()
            )));
        }
        let first = calendar.first_adjustable_slot(t_min);
        let slot_ids: Vec<usize> = (first..slots).collect();
        let eta = params.efficiency;
        let slot_h = calendar.slot_h();
        let mut anchor = params.soc_init_mwh;
        for s in 0..first {
            let c = schedule.c_micro[s] as f64 / 1e6;
            let g = schedule.g_micro[s] as f64 / 1e6;
            anchor += slot_h * (eta * c - g / eta);
        }
        let mut orders = Vec::new();
        let open = calendar
            .open_products(t_min)
            .map_err(|e| SolveError::BadProblem(e.to_string()))?;
        for product in open {
            debug_assert!(product >= first);
            for side in [Side::Buy, Side::Sell] {
                for o in book.level(product, side) {
                    orders.push(TradeOrder {
                        id: o.id,
                        slot: product - first,
                        side: o.side,
                        price: o.price,
                        volume: o.volume,
                    });
                }
            }
        }
        Ok(TradeProblem {
            slot_ids,
            p_mar_micro: position.p_mar_micro[first..].to_vec(),
            g_micro: schedule.g_micro[first..].to_vec(),
            c_micro: schedule.c_micro[first..].to_vec(),
            soc_anchor_mwh: anchor,
            orders,
            params: *params,
            slot_minutes: calendar.slot_minutes(),
            mode,
        })
    }

    pub fn local_slots(&self) -> usize {
        self.slot_ids.len()
    }

    fn slot_h(&self) -> f64 {
        self.slot_minutes as f64 / 60.0
    }

    /// Objective coefficient of an order: cash per MW accepted.
    fn cash_per_mw(&self, o: &TradeOrder) -> f64 {
        let per_mwh = o.side.acceptance_sign() as f64 * o.price.eur_per_mwh();
        match self.mode {
            SettlementMode::Energy => per_mwh * self.slot_h(),
            SettlementMode::Power => per_mwh,
        }
    }

    /// State of charge entering the first local slot, on the integer
    /// micro-MW-minute lattice; `None` when it is not exactly representable
    /// there. With unit efficiency the frozen prefix is a sum of lattice
    /// terms, so the f64 anchor sits on a lattice point whenever the initial
    /// state does.
    fn anchor_lattice(&self) -> Option<i64> {
        if self.params.efficiency != 1.0 {
            return None;
        }
        to_lattice(self.soc_anchor_mwh)
    }
}

/// The no-trade solution: nothing accepted, schedule untouched.
pub fn idle(problem: &TradeProblem) -> TradeSolution {
    let s = problem.local_slots();
    let mut soc = Vec::with_capacity(s + 1);
    let mut cur = problem.soc_anchor_mwh;
    soc.push(cur);
    let eta = problem.params.efficiency;
    for i in 0..s {
        let c = problem.c_micro[i] as f64 / 1e6;
        let g = problem.g_micro[i] as f64 / 1e6;
        cur += problem.slot_h() * (eta * c - g / eta);
        soc.push(cur);
    }
    TradeSolution {
        reward_eur: 0.0,
        fractions: problem.orders.iter().map(|o| (o.id, 0.0)).collect(),
        v_con_micro: vec![0; s],
        dg_micro: vec![0; s],
        dc_micro: vec![0; s],
        k_charge: (0..s).map(|i| problem.c_micro[i] > 0).collect(),
        soc_mwh: soc,
        realized_eur: 0.0,
        stats: SolveStats { lattice_exact: true, ..SolveStats::default() },
    }
}

#[derive(Clone, Copy, PartialEq)]
enum SlotMode {
    Free,
    Charge,
    Discharge,
}

struct NodeLp {
    objective: f64,
    x: Vec<f64>,
    iterations: usize,
}

fn build_and_solve(problem: &TradeProblem, modes: &[SlotMode]) -> Result<Option<NodeLp>, LpError> {
    let s = problem.local_slots();
    let n = problem.orders.len();
    let eta = problem.params.efficiency;
    let slot_h = problem.slot_h();
    let c_cap = problem.params.charge_max_mw;
    let g_cap = problem.params.discharge_max_mw;

    let mut lp = Lp::default();
    // Columns: orders, then C per slot, then G per slot.
    for o in &problem.orders {
        lp.objective.push(problem.cash_per_mw(o));
        lp.lower.push(0.0);
        lp.upper.push(o.volume.mw());
    }
    let col_c = n;
    let col_g = n + s;
    for i in 0..s {
        lp.objective.push(0.0);
        lp.lower.push(0.0);
        lp.upper.push(match modes[i] {
            SlotMode::Discharge => 0.0,
            _ => c_cap,
        });
    }
    for i in 0..s {
        lp.objective.push(0.0);
        lp.lower.push(0.0);
        lp.upper.push(match modes[i] {
            SlotMode::Charge => 0.0,
            _ => g_cap,
        });
    }

    // Balance per slot: sum(signed w) + P_mar + C - G = 0.
    for i in 0..s {
        let mut coeffs = Vec::new();
        for (j, o) in problem.orders.iter().enumerate() {
            if o.slot == i {
                coeffs.push((j, o.side.acceptance_sign() as f64));
            }
        }
        coeffs.push((col_c + i, 1.0));
        coeffs.push((col_g + i, -1.0));
        let rhs = -(problem.p_mar_micro[i] as f64 / 1e6);
        lp.rows.push(LpRow { coeffs, lo: rhs, hi: rhs });
    }

    // State of charge after each slot, as a prefix sum of flows; the final
    // node is pinned to the terminal target.
    let anchor = problem.soc_anchor_mwh;
    for node in 1..=s {
        let mut coeffs = Vec::with_capacity(2 * node);
        for u in 0..node {
            coeffs.push((col_c + u, eta));
            coeffs.push((col_g + u, -1.0 / eta));
        }
        let (lo, hi) = if node == s {
            let t = (problem.params.soc_term_mwh - anchor) / slot_h;
            if eta == 1.0 {
                // Integer lattice repair restores exact terminal equality,
                // so the continuous model can afford an exact pin.
                (t, t)
            } else {
                // A lossy position drifts off the energy lattice by up to
                // the validator's tolerance; an exact pin would then reject
                // states the rest of the system accepts as feasible.
                let band = SOC_DRIFT_TOL_MWH / slot_h;
                (t - band, t + band)
            }
        } else {
            (
                (problem.params.soc_min_mwh - anchor) / slot_h,
                (problem.params.soc_max_mwh - anchor) / slot_h,
            )
        };
        lp.rows.push(LpRow { coeffs, lo, hi });
    }

    match simplex::solve(&lp) {
        Ok(sol) => Ok(Some(NodeLp {
            objective: sol.objective,
            x: sol.x,
            iterations: sol.iterations,
        })),
        Err(LpError::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

struct HeapNode {
    bound: f64,
    seq: u64,
    modes: Vec<SlotMode>,
    x: Vec<f64>,
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Solves the per-step problem. See the module docs for the split between
/// the reported continuous optimum and the quantized executable solution.
pub fn solve_trade(problem: &TradeProblem) -> Result<TradeSolution, SolveError> {
    solve_trade_with(problem, false)
}

/// Like [`solve_trade`], but `force_branching` disables the shortcut that
/// accepts the root relaxation under unit efficiency and runs the full
/// branch-and-bound search instead. The two must agree on the optimum; the
/// test suite checks exactly that.
pub fn solve_trade_with(
    problem: &TradeProblem,
    force_branching: bool,
) -> Result<TradeSolution, SolveError> {
    problem.params.validate()?;
    let s = problem.local_slots();
    for o in &problem.orders {
        if o.slot >= s {
            return Err(SolveError::BadProblem(format!(
                "order {} references slot {} of {s}",
                o.id, o.slot
            )));
        }
    }
    if s == 0 || problem.orders.is_empty() {
        return Ok(idle(problem));
    }

    let eta = problem.params.efficiency;
    let mut stats = SolveStats::default();
    let dump = |e: LpError| SolveError::Numerical { source: e, dump: format!("{problem:#?}") };

    let root = build_and_solve(problem, &vec![SlotMode::Free; s]).map_err(dump)?;
    let Some(root) = root else {
        return Err(SolveError::Numerical {
            source: LpError::Infeasible(f64::NAN),
            dump: format!("{problem:#?}"),
        });
    };
    stats.simplex_iterations += root.iterations;
    stats.nodes_explored = 1;

    let incumbent = if eta == 1.0 && !force_branching {
        // Exact relaxation: any simultaneous flow cancels at no cost.
        root
    } else {
        branch_and_bound(problem, root, &mut stats).map_err(dump)?
    };

    finish_solution(problem, incumbent, stats)
}

fn overlap(problem: &TradeProblem, x: &[f64], i: usize) -> f64 {
    let n = problem.orders.len();
    let s = problem.local_slots();
    x[n + i].min(x[n + s + i])
}

fn branch_and_bound(
    problem: &TradeProblem,
    root: NodeLp,
    stats: &mut SolveStats,
) -> Result<NodeLp, LpError> {
    let s = problem.local_slots();
    let mut heap = BinaryHeap::new();
    let mut seq = 0_u64;
    heap.push(HeapNode { bound: root.objective, seq, modes: vec![SlotMode::Free; s], x: root.x });
    let mut best: Option<NodeLp> = None;

    while let Some(node) = heap.pop() {
        if let Some(b) = &best {
            if node.bound <= b.objective + 1e-9 {
                break;
            }
        }
        // Most fractional mode: the slot with the largest simultaneous flow.
        let mut branch_slot = None;
        let mut worst = INT_TOL_MW;
        for i in 0..s {
            if node.modes[i] != SlotMode::Free {
                continue;
            }
            let v = overlap(problem, &node.x, i);
            if v > worst {
                worst = v;
                branch_slot = Some(i);
            }
        }
        let Some(i) = branch_slot else {
            // Integral: candidate incumbent.
            let better = match &best {
                None => true,
                Some(b) => node.bound > b.objective + 1e-9,
            };
            if better {
                best = Some(NodeLp { objective: node.bound, x: node.x, iterations: 0 });
            }
            continue;
        };
        for mode in [SlotMode::Discharge, SlotMode::Charge] {
            if stats.nodes_explored >= NODE_CAP {
                break;
            }
            let mut modes = node.modes.clone();
            modes[i] = mode;
            if let Some(sol) = build_and_solve(problem, &modes)? {
                stats.simplex_iterations += sol.iterations;
                stats.nodes_explored += 1;
                let prune = best
                    .as_ref()
                    .map(|b| sol.objective <= b.objective + 1e-9)
                    .unwrap_or(false);
                let integral = (0..s)
                    .filter(|&u| modes[u] == SlotMode::Free)
                    .all(|u| overlap(problem, &sol.x, u) <= INT_TOL_MW);
                if integral {
                    let better = match &best {
                        None => true,
                        Some(b) => sol.objective > b.objective + 1e-9,
                    };
                    if better {
                        best = Some(sol);
                    }
                } else if !prune {
                    seq += 1;
                    heap.push(HeapNode { bound: sol.objective, seq, modes, x: sol.x });
                }
            } else {
                stats.nodes_explored += 1;
            }
        }
    }
    Ok(best.unwrap_or_else(|| root_fallback(problem)))
}

fn root_fallback(problem: &TradeProblem) -> NodeLp {
    // Zero trade is always feasible.
    let n = problem.orders.len() + 2 * problem.local_slots();
    let mut x = vec![0.0; n];
    let s = problem.local_slots();
    for i in 0..s {
        x[problem.orders.len() + i] = problem.c_micro[i] as f64 / 1e6;
        x[problem.orders.len() + s + i] = problem.g_micro[i] as f64 / 1e6;
    }
    NodeLp { objective: 0.0, x, iterations: 0 }
}

fn to_lattice(mwh: f64) -> Option<i64> {
    let v = mwh * LAT_PER_MWH;
    let r = v.round();
    if (v - r).abs() <= 1e-3 && r.abs() < 9e17 {
        Some(r as i64)
    } else {
        None
    }
}

fn finish_solution(
    problem: &TradeProblem,
    incumbent: NodeLp,
    mut stats: SolveStats,
) -> Result<TradeSolution, SolveError> {
    let s = problem.local_slots();
    let n = problem.orders.len();
    let reward = incumbent.objective;

    // Quantize accepted volumes to the micro-MW grid.
    let mut w_micro: Vec<i64> = (0..n)
        .map(|j| {
            let v = (incumbent.x[j] * 1e6).round() as i64;
            v.clamp(0, problem.orders[j].volume.micro())
        })
        .collect();

    let applied = repair_applied(problem, &mut w_micro, &mut stats);
    let (v_con, g_new, c_new) = match applied {
        Some(t) => t,
        None => {
            // Unrepairable on the grid: fall back to no trade.
            let mut out = idle(problem);
            out.reward_eur = reward;
            out.stats = stats;
            return Ok(out);
        }
    };

    let mut realized = 0.0;
    let mut fractions = Vec::with_capacity(n);
    for (j, o) in problem.orders.iter().enumerate() {
        let frac = if o.volume.micro() == 0 {
            0.0
        } else {
            w_micro[j] as f64 / o.volume.micro() as f64
        };
        fractions.push((o.id, frac));
        realized += o.side.acceptance_sign() as f64
            * settle_cash(
                Volume::from_micro(w_micro[j]),
                o.price,
                problem.slot_h(),
                problem.mode,
            );
    }

    if realized < 0.0 {
        // The grid repair ate more than the trade earns; trading nothing
        // dominates.
        let mut out = idle(problem);
        out.reward_eur = reward;
        out.stats = stats;
        return Ok(out);
    }

    let eta = problem.params.efficiency;
    let slot_h = problem.slot_h();
    let mut soc = Vec::with_capacity(s + 1);
    let mut cur = problem.soc_anchor_mwh;
    soc.push(cur);
    for i in 0..s {
        cur += slot_h * (eta * c_new[i] as f64 / 1e6 - g_new[i] as f64 / 1e6 / eta);
        soc.push(cur);
    }
    stats.terminal_residual_mwh = (cur - problem.params.soc_term_mwh).abs();

    Ok(TradeSolution {
        reward_eur: reward,
        fractions,
        v_con_micro: v_con,
        dg_micro: (0..s).map(|i| g_new[i] - problem.g_micro[i]).collect(),
        dc_micro: (0..s).map(|i| c_new[i] - problem.c_micro[i]).collect(),
        k_charge: (0..s).map(|i| c_new[i] > 0).collect(),
        soc_mwh: soc,
        realized_eur: realized,
        stats,
    })
}

/// Derives integer per-slot flows from quantized acceptances and repairs the
/// rounding drift: power caps per slot, state-of-charge corridor at every
/// node, and the terminal target. Exact on the lattice for unit efficiency;
/// best-effort (caps exact, corridor within rounding noise) otherwise.
/// Returns `(v_con, g_new, c_new)`, or `None` when no on-grid repair exists.
fn repair_applied(
    problem: &TradeProblem,
    w_micro: &mut [i64],
    stats: &mut SolveStats,
) -> Option<(Vec<i64>, Vec<i64>, Vec<i64>)> {
    let s = problem.local_slots();
    let li = problem.slot_minutes;
    let g_cap = (problem.params.discharge_max_mw * 1e6).round() as i64;
    let c_cap = (problem.params.charge_max_mw * 1e6).round() as i64;

    let net = |w: &[i64]| -> Vec<i64> {
        let mut v = problem.p_mar_micro.clone();
        for (j, o) in problem.orders.iter().enumerate() {
            v[o.slot] += o.side.acceptance_sign() * w[j];
        }
        v
    };

    // Per-slot cap violations can be fixed slot-locally.
    for _ in 0..64 {
        let nets = net(w_micro);
        let mut fixed_all = true;
        for i in 0..s {
            let over = if nets[i] > g_cap {
                nets[i] - g_cap
            } else if nets[i] < -c_cap {
                nets[i] + c_cap
            } else {
                continue;
            };
            fixed_all = false;
            if !shift_slot_net(problem, w_micro, i, -over) {
                return None;
            }
            stats.repaired_micro += over.abs();
            break;
        }
        if fixed_all {
            break;
        }
    }

    let exact = problem.params.efficiency == 1.0;
    if exact {
        repair_lattice(problem, w_micro, stats, li, g_cap, c_cap)?;
    }

    let nets = net(w_micro);
    let mut v_con = vec![0; s];
    for i in 0..s {
        v_con[i] = nets[i] - problem.p_mar_micro[i];
    }
    let g_new: Vec<i64> = nets.iter().map(|&m| m.max(0)).collect();
    let c_new: Vec<i64> = nets.iter().map(|&m| (-m).max(0)).collect();
    stats.lattice_exact = exact;
    Some((v_con, g_new, c_new))
}

/// Adjusts orders of slot `i` so its net flow moves by exactly `delta`
/// micro-MW, preferring the order whose adjustment costs the least cash.
/// All-or-nothing: on failure `w_micro` is left untouched.
fn shift_slot_net(problem: &TradeProblem, w_micro: &mut [i64], i: usize, delta: i64) -> bool {
    let mut scratch = w_micro.to_vec();
    let mut remaining = delta;
    while remaining != 0 {
        // Candidates that can move the net in the wanted direction.
        let mut pick: Option<(usize, i64)> = None; // (order, room)
        let mut pick_cost = f64::INFINITY;
        for (j, o) in problem.orders.iter().enumerate() {
            if o.slot != i {
                continue;
            }
            let sign = o.side.acceptance_sign();
            let room = if sign.signum() == remaining.signum() {
                o.volume.micro() - scratch[j] // accept more
            } else {
                scratch[j] // accept less
            };
            if room <= 0 {
                continue;
            }
            // Cash impact per micro moved: adding acceptance costs or earns
            // the order's price; removing does the reverse.
            let unit = problem.cash_per_mw(o) / 1e6;
            let cost = if sign.signum() == remaining.signum() { -unit } else { unit };
            if cost < pick_cost - 1e-18 {
                pick_cost = cost;
                pick = Some((j, room));
            }
        }
        let Some((j, room)) = pick else { return false };
        let step = remaining.abs().min(room);
        let sign = problem.orders[j].side.acceptance_sign();
        if sign.signum() == remaining.signum() {
            scratch[j] += step;
        } else {
            scratch[j] -= step;
        }
        remaining -= remaining.signum() * step;
    }
    w_micro.copy_from_slice(&scratch);
    true
}

/// Exact lattice repair for unit efficiency: restores the state-of-charge
/// corridor and the terminal equality as integer identities.
fn repair_lattice(
    problem: &TradeProblem,
    w_micro: &mut [i64],
    stats: &mut SolveStats,
    li: i64,
    g_cap: i64,
    c_cap: i64,
) -> Option<()> {
    let s = problem.local_slots();
    let anchor = problem.anchor_lattice()?;
    let lo = to_lattice(problem.params.soc_min_mwh)?;
    let hi = to_lattice(problem.params.soc_max_mwh)?;
    let term = to_lattice(problem.params.soc_term_mwh)?;

    let nets = |w: &[i64]| -> Vec<i64> {
        let mut v = problem.p_mar_micro.clone();
        for (j, o) in problem.orders.iter().enumerate() {
            v[o.slot] += o.side.acceptance_sign() * w[j];
        }
        v
    };

    for _ in 0..10_000 {
        let net = nets(w_micro);
        // soc after slot i (lattice units) = anchor - li * prefix(net).
        let mut soc = anchor;
        let mut violation: Option<(usize, i64)> = None; // (node, needed net change before node)
        for i in 0..s {
            soc -= li * net[i];
            let (node_lo, node_hi) = if i == s - 1 { (term, term) } else { (lo, hi) };
            if soc > node_hi {
                // Too much charge so far: need to raise net on some slot <= i.
                let units = (soc - node_hi + li - 1) / li;
                violation = Some((i, units));
                break;
            }
            if soc < node_lo {
                let units = (soc - node_lo - li + 1) / li;
                violation = Some((i, units));
                break;
            }
        }
        let Some((node, units)) = violation else {
            return Some(());
        };
        // Move `units` micro-MW of net flow on the latest possible slot
        // <= node, respecting caps and order bounds.
        let mut moved = false;
        'slots: for i in (0..=node).rev() {
            let cur = nets(w_micro)[i];
            let headroom = if units > 0 { g_cap - cur } else { cur + c_cap };
            if headroom <= 0 {
                continue;
            }
            let step = units.abs().min(headroom) * units.signum();
            if shift_slot_net(problem, w_micro, i, step) {
                stats.repaired_micro += step.abs();
                moved = true;
                break 'slots;
            }
        }
        if !moved {
            return None;
        }
    }
    None
}
