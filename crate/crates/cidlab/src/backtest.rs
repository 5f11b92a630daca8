//! Daily policy evaluation and the comparison report.
//!
//! A backtest replays each recorded day once per policy, sums the settled
//! step rewards into a daily return, and aggregates the two return lists
//! into descriptive statistics plus the per-day profitability ratio against
//! the rolling-intrinsic benchmark. Rendering helpers produce the stdout
//! table, a machine-readable CSV, and a histogram data file for plotting
//! the ratio distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::DayRecord;
use crate::episode::{Action, Episode, EpisodeError};
use crate::features::{build_pseudo_state, FeatureError, StepObservation};
use crate::fitted_q::{act, QEnsemble};
use crate::market::{MarketCalendar, SettlementMode};
use crate::storage::StorageParams;

/// Settlement can round a fill to the volume lattice, so a step whose
/// optimum is barely positive may settle a whisker under it. The
/// do-nothing action is always feasible, which bounds every rolling
/// intrinsic step reward below by zero up to that rounding.
const STEP_FLOOR_EUR: f64 = -1e-6;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("return lists disagree: {0}")]
    DayMismatch(String),
    #[error("no daily returns to aggregate")]
    Empty,
}

/// How the agent picks actions during a replayed day.
pub enum Policy<'a> {
    /// Trade every step: the rolling-intrinsic benchmark.
    RollingIntrinsic,
    /// Never trade; a zero baseline.
    AlwaysIdle,
    /// Follow the fitted value functions greedily, ties to Trade.
    Greedy(&'a QEnsemble),
    /// ε-greedy on the fitted value functions with an owned random stream,
    /// reseeded per day so a rerun reproduces the same decisions.
    Explore { ensemble: &'a QEnsemble, epsilon: f64, seed: u64 },
}

impl Policy<'_> {
    pub fn tag(&self) -> &'static str {
        match self {
            Policy::RollingIntrinsic => "ri",
            Policy::AlwaysIdle => "idle",
            Policy::Greedy(_) => "fq",
            Policy::Explore { .. } => "fq-eps",
        }
    }
}

/// One day's total settled return under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyReturn {
    pub day: String,
    pub policy: String,
    pub total_eur: f64,
}

/// Replays `day` under `policy` and sums the settled step rewards.
///
/// The episode checks the imbalance identity and the storage schedule after
/// every step and fails hard with a step dump on any breach, so a returned
/// value always comes from a physically consistent replay.
pub fn run_policy(
    day: &DayRecord,
    calendar: &MarketCalendar,
    params: &StorageParams,
    mode: SettlementMode,
    policy: &Policy,
) -> Result<DailyReturn, BacktestError> {
    let mut ep = Episode::new(day, calendar, *params, mode)?;
    let slots = calendar.slots();
    let steps = ep.steps_total();
    let mut rng = match policy {
        Policy::Explore { seed, .. } => ChaCha8Rng::seed_from_u64(*seed),
        _ => ChaCha8Rng::seed_from_u64(0),
    };
    let mut history: Vec<StepObservation> = Vec::with_capacity(steps);
    for t in 0..steps {
        let obs = ep.observe()?;
        let action = match policy {
            Policy::RollingIntrinsic => Action::Trade,
            Policy::AlwaysIdle => Action::Idle,
            Policy::Greedy(ensemble) => {
                history.push(obs);
                // An untrained ensemble reports window 0 and ignores the
                // state; any positive window serves it.
                let z = build_pseudo_state(&history, ensemble.window().max(1), slots)?;
                let q = ensemble.predict(t, &z);
                if q[1] >= q[0] {
                    Action::Trade
                } else {
                    Action::Idle
                }
            }
            Policy::Explore { ensemble, epsilon, .. } => {
                history.push(obs);
                let z = build_pseudo_state(&history, ensemble.window().max(1), slots)?;
                act(ensemble, t, &z, *epsilon, &mut rng)
            }
        };
        let report = ep.act(action)?;
        if matches!(policy, Policy::RollingIntrinsic) {
            assert!(
                report.reward_eur >= STEP_FLOOR_EUR,
                "rolling intrinsic earned {} at step {}; idling was feasible",
                report.reward_eur,
                t
            );
        }
    }
    let total_eur = ep.total_return_eur();
    assert!(total_eur.is_finite(), "daily return must be finite");
    Ok(DailyReturn { day: day.day.clone(), policy: policy.tag().to_string(), total_eur })
}

/// The benchmark run: trade every step.
pub fn rolling_intrinsic(
    day: &DayRecord,
    calendar: &MarketCalendar,
    params: &StorageParams,
    mode: SettlementMode,
) -> Result<DailyReturn, BacktestError> {
    run_policy(day, calendar, params, mode, &Policy::RollingIntrinsic)
}

/// Descriptive statistics of one policy's daily returns.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyStats {
    pub tag: String,
    pub days: usize,
    pub mean: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub sum: f64,
}

/// One day's head-to-head comparison; the ratio is only defined when the
/// benchmark made money that day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRatio {
    pub day: String,
    pub fq_eur: f64,
    pub ri_eur: f64,
    /// `100·(fq − ri)/ri` when `ri > 0`.
    pub ratio_pct: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub fq: PolicyStats,
    pub ri: PolicyStats,
    pub days: Vec<DayRatio>,
    /// `100·(Σfq − Σri)/Σri`, over all days, when `Σri ≠ 0`.
    pub r_sum_pct: Option<f64>,
    /// Days left out of the ratio statistics because the benchmark return
    /// was zero or negative.
    pub excluded_days: usize,
    pub mode: SettlementMode,
}

/// Linear-interpolation order statistic of an already sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn stats(tag: &str, returns: &[DailyReturn]) -> PolicyStats {
    let mut values: Vec<f64> = returns.iter().map(|r| r.total_eur).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sum: f64 = values.iter().sum();
    PolicyStats {
        tag: tag.to_string(),
        days: values.len(),
        mean: sum / values.len() as f64,
        min: values[0],
        q25: quantile(&values, 0.25),
        median: quantile(&values, 0.50),
        q75: quantile(&values, 0.75),
        max: *values.last().unwrap(),
        sum,
    }
}

/// Joins the two return lists on day id and computes the comparison table.
///
/// Both lists must cover exactly the same days. Ratio rows for days where
/// the benchmark earned nothing (or lost money) are marked undefined and
/// counted in `excluded_days`; the summary ratio uses the full sums.
pub fn report(
    fq: &[DailyReturn],
    ri: &[DailyReturn],
    mode: SettlementMode,
) -> Result<BacktestReport, BacktestError> {
    if fq.is_empty() || ri.is_empty() {
        return Err(BacktestError::Empty);
    }
    if fq.len() != ri.len() {
        return Err(BacktestError::DayMismatch(format!(
            "{} policy days vs {} benchmark days",
            fq.len(),
            ri.len()
        )));
    }
    let mut fq: Vec<DailyReturn> = fq.to_vec();
    let mut ri: Vec<DailyReturn> = ri.to_vec();
    fq.sort_by(|a, b| a.day.cmp(&b.day));
    ri.sort_by(|a, b| a.day.cmp(&b.day));

    let mut days = Vec::with_capacity(fq.len());
    let mut excluded = 0;
    for (f, r) in fq.iter().zip(ri.iter()) {
        if f.day != r.day {
            return Err(BacktestError::DayMismatch(format!("{} vs {}", f.day, r.day)));
        }
        let ratio_pct = if r.total_eur > 0.0 {
            Some(100.0 * (f.total_eur - r.total_eur) / r.total_eur)
        } else {
            excluded += 1;
            None
        };
        days.push(DayRatio {
            day: f.day.clone(),
            fq_eur: f.total_eur,
            ri_eur: r.total_eur,
            ratio_pct,
        });
    }

    let fq_stats = stats("fq", &fq);
    let ri_stats = stats("ri", &ri);
    let r_sum_pct = if ri_stats.sum != 0.0 {
        Some(100.0 * (fq_stats.sum - ri_stats.sum) / ri_stats.sum)
    } else {
        None
    };
    Ok(BacktestReport {
        fq: fq_stats,
        ri: ri_stats,
        days,
        r_sum_pct,
        excluded_days: excluded,
        mode,
    })
}

/// Per-day mean over repeated evaluations of independently trained
/// policies; all runs must cover the same days in the same order.
pub fn average_runs(runs: &[Vec<DailyReturn>]) -> Result<Vec<DailyReturn>, BacktestError> {
    let first = runs.first().ok_or(BacktestError::Empty)?;
    if first.is_empty() {
        return Err(BacktestError::Empty);
    }
    for run in runs.iter().skip(1) {
        if run.len() != first.len() || run.iter().zip(first).any(|(a, b)| a.day != b.day) {
            return Err(BacktestError::DayMismatch(
                "repeated runs cover different day lists".into(),
            ));
        }
    }
    Ok(first
        .iter()
        .enumerate()
        .map(|(i, base)| DailyReturn {
            day: base.day.clone(),
            policy: base.policy.clone(),
            total_eur: runs.iter().map(|run| run[i].total_eur).sum::<f64>() / runs.len() as f64,
        })
        .collect())
}

fn mode_label(mode: SettlementMode) -> &'static str {
    match mode {
        SettlementMode::Energy => "energy",
        SettlementMode::Power => "power",
    }
}

/// Human-readable summary table.
pub fn render_table(report: &BacktestReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("settlement mode: {}\n", mode_label(report.mode)));
    out.push_str(&format!(
        "{:<8}{:>12}{:>12}{:>12}{:>12}{:>12}{:>12}{:>14}\n",
        "policy", "mean", "min", "25%", "50%", "75%", "max", "sum"
    ));
    for s in [&report.fq, &report.ri] {
        out.push_str(&format!(
            "{:<8}{:>12.2}{:>12.2}{:>12.2}{:>12.2}{:>12.2}{:>12.2}{:>14.2}\n",
            s.tag, s.mean, s.min, s.q25, s.median, s.q75, s.max, s.sum
        ));
    }
    match report.r_sum_pct {
        Some(r) => out.push_str(&format!("r_sum = {r:.2}% over {} days", report.days.len())),
        None => out.push_str("r_sum undefined (benchmark sum is zero)"),
    }
    if report.excluded_days > 0 {
        out.push_str(&format!(
            "; {} day(s) excluded from ratios (benchmark return <= 0)",
            report.excluded_days
        ));
    }
    out.push('\n');
    out
}

/// Daily returns as CSV, one row per day and policy.
pub fn returns_csv(returns: &[DailyReturn]) -> String {
    let mut out = String::from("day,policy,return_eur\n");
    for r in returns {
        out.push_str(&format!("{},{},{}\n", r.day, r.policy, r.total_eur));
    }
    out
}

/// Parses the CSV written by [`returns_csv`].
pub fn parse_returns_csv(text: &str) -> Result<Vec<DailyReturn>, BacktestError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, ',').collect();
        let bad = || BacktestError::DayMismatch(format!("line {}: {:?}", i + 1, line));
        if fields.len() != 3 {
            return Err(bad());
        }
        let total_eur: f64 = fields[2].trim().parse().map_err(|_| bad())?;
        out.push(DailyReturn {
            day: fields[0].trim().to_string(),
            policy: fields[1].trim().to_string(),
            total_eur,
        });
    }
    if out.is_empty() {
        return Err(BacktestError::Empty);
    }
    Ok(out)
}

/// Per-day comparison as CSV; the ratio column is empty when undefined.
pub fn report_csv(report: &BacktestReport) -> String {
    let mut out = String::from("day,fq_eur,ri_eur,r_d_pct\n");
    for d in &report.days {
        let ratio = d.ratio_pct.map(|r| format!("{r}")).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", d.day, d.fq_eur, d.ri_eur, ratio));
    }
    out
}

/// Gnuplot-style histogram of the defined profitability ratios: one
/// `center count` row per bin of the given width (in percent).
pub fn histogram_data(report: &BacktestReport, bin_width_pct: f64) -> String {
    assert!(bin_width_pct > 0.0, "bin width must be positive");
    let ratios: Vec<f64> = report.days.iter().filter_map(|d| d.ratio_pct).collect();
    let mut out = format!("# r_d distribution, bin width {bin_width_pct}%\n");
    if ratios.is_empty() {
        return out;
    }
    let lo_bin = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_bin = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let first = (lo_bin / bin_width_pct).floor() as i64;
    let last = (hi_bin / bin_width_pct).floor() as i64;
    for bin in first..=last {
        let lo = bin as f64 * bin_width_pct;
        let hi = lo + bin_width_pct;
        let count = ratios.iter().filter(|&&r| r >= lo && (r < hi || bin == last)).count();
        out.push_str(&format!("{} {}\n", lo + bin_width_pct / 2.0, count));
    }
    out
}
