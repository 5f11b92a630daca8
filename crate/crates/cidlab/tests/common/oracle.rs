//! Exact reference optimiser for the per-step acceptance problem.
//!
//! Independent of the production solver: every assignment of the per-slot
//! charge/discharge exclusivity bit is enumerated by brute force, and each
//! leaf is a linear program over arbitrary-precision rationals, solved by a
//! dense two-phase tableau simplex with Bland's rule. Slow and sure; the
//! only thing it shares with production code is the problem data itself.

use cidlab::market::SettlementMode;
use cidlab::optimizer::TradeProblem;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

type Rat = BigRational;

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

fn ratf(x: f64) -> Rat {
    Rat::from_float(x).expect("finite value")
}

enum Cmp {
    Le,
    Eq,
}

struct Row {
    coeffs: Vec<Rat>,
    cmp: Cmp,
    rhs: Rat,
}

/// Maximise `c . x` over `x >= 0` subject to `rows`; `None` if infeasible.
fn solve_exact(c: &[Rat], rows: Vec<Row>) -> Option<Rat> {
    let n = c.len();
    let m = rows.len();
    // Column layout: structural 0..n, then one slack or surplus per
    // inequality row, then one artificial per row that needs one.
    let mut extra = Vec::new(); // (row, coefficient) of slack/surplus columns
    let mut needs_art = vec![false; m];
    let mut norm: Vec<(Vec<Rat>, Rat)> = Vec::with_capacity(m);
    for (i, mut row) in rows.into_iter().enumerate() {
        let neg = row.rhs < Rat::zero();
        if neg {
            for v in &mut row.coeffs {
                *v = -v.clone();
            }
            row.rhs = -row.rhs;
        }
        match row.cmp {
            Cmp::Le => {
                // After negation a Le row becomes Ge: surplus plus artificial.
                extra.push((i, if neg { rat(-1, 1) } else { rat(1, 1) }));
                needs_art[i] = neg;
            }
            Cmp::Eq => needs_art[i] = true,
        }
        norm.push((row.coeffs, row.rhs));
    }
    let slack_base = n;
    let art_base = slack_base + extra.len();
    let n_art: usize = needs_art.iter().filter(|&&b| b).count();
    let ncols = art_base + n_art;

    let mut a: Vec<Vec<Rat>> = vec![vec![Rat::zero(); ncols]; m];
    let mut b: Vec<Rat> = Vec::with_capacity(m);
    for (i, (coeffs, rhs)) in norm.into_iter().enumerate() {
        for (j, v) in coeffs.into_iter().enumerate() {
            a[i][j] = v;
        }
        b.push(rhs);
    }
    let mut basis = vec![usize::MAX; m];
    for (col_off, &(i, ref coef)) in extra.iter().enumerate() {
        let col = slack_base + col_off;
        a[i][col] = coef.clone();
        if *coef == rat(1, 1) {
            basis[i] = col;
        }
    }
    let mut art_cols = Vec::new();
    {
        let mut next = art_base;
        for i in 0..m {
            if needs_art[i] {
                a[i][next] = rat(1, 1);
                basis[i] = next;
                art_cols.push(next);
                next += 1;
            }
        }
    }
    debug_assert!(basis.iter().all(|&j| j != usize::MAX));

    // Phase one: minimise the artificial total.
    if !art_cols.is_empty() {
        let cost: Vec<Rat> = (0..ncols)
            .map(|j| if j >= art_base { rat(-1, 1) } else { Rat::zero() })
            .collect();
        let value = pivot_to_optimum(&mut a, &mut b, &mut basis, &cost, &[]);
        if value < Rat::zero() {
            return None;
        }
        // Remove artificials from the basis; a row that cannot pivot them
        // out is redundant and gets dropped.
        let mut i = 0;
        while i < a.len() {
            if basis[i] >= art_base {
                match (0..art_base).find(|&j| !a[i][j].is_zero()) {
                    Some(j) => pivot(&mut a, &mut b, &mut basis, i, j),
                    None => {
                        a.remove(i);
                        b.remove(i);
                        basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![Rat::zero(); ncols];
    cost[..n].clone_from_slice(c);
    Some(pivot_to_optimum(&mut a, &mut b, &mut basis, &cost, &art_cols))
}

/// Bland-rule pivoting until no reduced cost is positive; returns the
/// objective value of the final basis.
fn pivot_to_optimum(
    a: &mut Vec<Vec<Rat>>,
    b: &mut Vec<Rat>,
    basis: &mut Vec<usize>,
    cost: &[Rat],
    blocked: &[usize],
) -> Rat {
    let ncols = cost.len();
    for _round in 0..50_000 {
        // Reduced costs against the current basis, recomputed from scratch:
        // r_j = c_j - sum_i c_basis(i) * a[i][j]. Wasteful and simple.
        let mut entering = None;
        'cols: for j in 0..ncols {
            if basis.contains(&j) || blocked.contains(&j) {
                continue;
            }
            let mut r = cost[j].clone();
            for i in 0..a.len() {
                if !cost[basis[i]].is_zero() && !a[i][j].is_zero() {
                    r -= cost[basis[i]].clone() * a[i][j].clone();
                }
            }
            if r > Rat::zero() {
                entering = Some(j);
                break 'cols;
            }
        }
        let Some(j) = entering else {
            let mut value = Rat::zero();
            for i in 0..a.len() {
                if !cost[basis[i]].is_zero() {
                    value += cost[basis[i]].clone() * b[i].clone();
                }
            }
            return value;
        };
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..a.len() {
            if a[i][j] > Rat::zero() {
                let ratio = b[i].clone() / a[i][j].clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (i, _) = leave.expect("reference problem is bounded");
        pivot(a, b, basis, i, j);
    }
    panic!("reference simplex did not converge");
}

fn pivot(a: &mut [Vec<Rat>], b: &mut [Rat], basis: &mut [usize], i: usize, j: usize) {
    let piv = a[i][j].clone();
    for v in &mut a[i] {
        *v /= piv.clone();
    }
    b[i] /= piv;
    for r in 0..a.len() {
        if r == i || a[r][j].is_zero() {
            continue;
        }
        let f = a[r][j].clone();
        for col in 0..a[r].len() {
            let delta = f.clone() * a[i][col].clone();
            a[r][col] -= delta;
        }
        let delta = f * b[i].clone();
        b[r] -= delta;
    }
    basis[i] = j;
}

/// Best attainable immediate cash for the problem, as an exact rational.
pub fn exact_best_reward(p: &TradeProblem) -> Rat {
    let s = p.slot_ids.len();
    let n = p.orders.len();
    assert!(s <= 16, "oracle enumerates 2^slots assignments");
    let slot_h = rat(p.slot_minutes, 60);
    let eta = ratf(p.params.efficiency);
    let eta_inv = rat(1, 1) / eta.clone();
    let c_cap = ratf(p.params.charge_max_mw);
    let g_cap = ratf(p.params.discharge_max_mw);
    let anchor = ratf(p.soc_anchor_mwh);
    let soc_min = ratf(p.params.soc_min_mwh);
    let soc_max = ratf(p.params.soc_max_mwh);
    let soc_term = ratf(p.params.soc_term_mwh);

    // Cash per unit acceptance fraction of each order.
    let cash: Vec<Rat> = p
        .orders
        .iter()
        .map(|o| {
            let sign = rat(o.side.acceptance_sign(), 1);
            let energy = match p.mode {
                SettlementMode::Energy => slot_h.clone(),
                SettlementMode::Power => rat(1, 1),
            };
            sign * rat(o.price.cents(), 100) * rat(o.volume.micro(), 1_000_000) * energy
        })
        .collect();

    let mut best: Option<Rat> = None;
    for mask in 0_u32..(1 << s) {
        let mut c = cash.clone();
        c.extend(std::iter::repeat_n(Rat::zero(), 2 * s));
        let col_c = |i: usize| n + i;
        let col_g = |i: usize| n + s + i;
        let ncols = n + 2 * s;
        let mut rows = Vec::new();
        for j in 0..n {
            let mut coeffs = vec![Rat::zero(); ncols];
            coeffs[j] = rat(1, 1);
            rows.push(Row { coeffs, cmp: Cmp::Le, rhs: rat(1, 1) });
        }
        for i in 0..s {
            let charging = mask & (1 << i) != 0;
            let mut coeffs = vec![Rat::zero(); ncols];
            coeffs[col_c(i)] = rat(1, 1);
            let rhs = if charging { c_cap.clone() } else { Rat::zero() };
            rows.push(Row { coeffs, cmp: Cmp::Le, rhs });
            let mut coeffs = vec![Rat::zero(); ncols];
            coeffs[col_g(i)] = rat(1, 1);
            let rhs = if charging { Rat::zero() } else { g_cap.clone() };
            rows.push(Row { coeffs, cmp: Cmp::Le, rhs });
        }
        for i in 0..s {
            // Power balance: delivery minus absorption matches the net
            // contracted position of the slot.
            let mut coeffs = vec![Rat::zero(); ncols];
            coeffs[col_g(i)] = rat(1, 1);
            coeffs[col_c(i)] = rat(-1, 1);
            for (j, o) in p.orders.iter().enumerate() {
                if o.slot == i {
                    coeffs[j] =
                        rat(-o.side.acceptance_sign(), 1) * rat(o.volume.micro(), 1_000_000);
                }
            }
            rows.push(Row {
                coeffs,
                cmp: Cmp::Eq,
                rhs: rat(p.p_mar_micro[i], 1_000_000),
            });
        }
        for node in 0..s {
            // Stored energy after this slot.
            let make = |scale: Rat, upto: usize| {
                let mut coeffs = vec![Rat::zero(); ncols];
                for u in 0..=upto {
                    coeffs[col_c(u)] = scale.clone() * slot_h.clone() * eta.clone();
                    coeffs[col_g(u)] = -scale.clone() * slot_h.clone() * eta_inv.clone();
                }
                coeffs
            };
            if node == s - 1 {
                rows.push(Row {
                    coeffs: make(rat(1, 1), node),
                    cmp: Cmp::Eq,
                    rhs: soc_term.clone() - anchor.clone(),
                });
            } else {
                rows.push(Row {
                    coeffs: make(rat(1, 1), node),
                    cmp: Cmp::Le,
                    rhs: soc_max.clone() - anchor.clone(),
                });
                rows.push(Row {
                    coeffs: make(rat(-1, 1), node),
                    cmp: Cmp::Le,
                    rhs: anchor.clone() - soc_min.clone(),
                });
            }
        }
        if let Some(v) = solve_exact(&c, rows) {
            best = Some(match best {
                None => v,
                Some(b) if v > b => v,
                Some(b) => b,
            });
        }
    }
    best.expect("the current schedule is always attainable in one assignment")
}

/// f64 view of the exact optimum, for tolerance comparisons.
pub fn exact_best_reward_f64(p: &TradeProblem) -> f64 {
    exact_best_reward(p).to_f64().expect("within f64 range")
}
