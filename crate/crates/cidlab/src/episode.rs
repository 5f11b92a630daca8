//! Single-day replay environment.
//!
//! An [`Episode`] drives the order book with a recorded day of market
//! activity while the caller picks [`Action::Idle`] or [`Action::Trade`] at
//! every decision step. Trading delegates to the optimizer, applies the
//! accepted fractions to the book, books the schedule adjustments, and then
//! re-checks every storage and position invariant. A broken invariant is a
//! hard error carrying a state dump, never a silent continuation.

use crate::data::{day_is_weekend, day_month, DayRecord};
use crate::features::{book_features, ExogenousRecord, StepObservation};
use crate::market::{
    BookError, MarketCalendar, OrderBook, PriceBand, SettlementMode,
};
use crate::optimizer::{solve_trade, SolveError, TradeProblem, TradeSolution};
use crate::storage::{
    self, MarketPosition, StorageParams, StorageSchedule, Violation,
    SOC_DRIFT_TOL_MWH,
};
use thiserror::Error;

/// The two high-level moves available at a decision step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Action {
    #[default]
    Idle,
    Trade,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Idle, Action::Trade];

    pub fn index(self) -> usize {
        match self {
            Action::Idle => 0,
            Action::Trade => 1,
        }
    }

    pub fn one_hot(self) -> [f64; 2] {
        let mut v = [0.0; 2];
        v[self.index()] = 1.0;
        v
    }
}

/// Cash reported by the solver and cash settled by the book must agree to
/// this bound; they are computed from the same integer volumes.
const CASH_AGREE_EUR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("day rejected: {0}")]
    BadDay(String),
    #[error("episode is finished after {0} steps")]
    Finished(usize),
    #[error("act() called before observe() at step {0}")]
    NotObserved(usize),
    #[error("observe() called twice at step {0}")]
    AlreadyObserved(usize),
    #[error("order event rejected at step {step}: {source}")]
    Event { step: usize, source: BookError },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invariants broken at step {step} after {action:?}: {dump}")]
    Invariant { step: usize, action: Action, dump: String },
}

/// Outcome of one applied decision.
#[derive(Debug)]
pub struct StepReport {
    pub step: usize,
    pub action: Action,
    /// Cash settled this step, EUR, as booked by the order book.
    pub reward_eur: f64,
    /// Solver output for `Trade` steps, `None` for `Idle`.
    pub solution: Option<TradeSolution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Next call must be `observe()`: arrivals not yet replayed.
    Arrive,
    /// Next call must be `act()`.
    Act,
}

/// Replay of one trading day against a storage asset.
pub struct Episode<'a> {
    day: &'a DayRecord,
    calendar: &'a MarketCalendar,
    params: StorageParams,
    mode: SettlementMode,
    book: OrderBook,
    position: MarketPosition,
    schedule: StorageSchedule,
    step: usize,
    phase: Phase,
    prev_action: Action,
    prev_reward_eur: f64,
    total_eur: f64,
    month: f64,
    weekend: f64,
}

impl<'a> Episode<'a> {
    /// Starts a fresh episode: empty book, flat position, idle schedule.
    ///
    /// The day must fit the calendar's grid, and its id must parse as a
    /// date so the month and weekend features can be derived.
    pub fn new(
        day: &'a DayRecord,
        calendar: &'a MarketCalendar,
        params: StorageParams,
        mode: SettlementMode,
    ) -> Result<Episode<'a>, EpisodeError> {
        day.validate(calendar).map_err(|e| EpisodeError::BadDay(e.to_string()))?;
        params.validate().map_err(|e| EpisodeError::BadDay(e.to_string()))?;
        let month = day_month(&day.day)
            .ok_or_else(|| EpisodeError::BadDay(format!("unparseable day id {:?}", day.day)))?;
        let weekend = day_is_weekend(&day.day).unwrap_or(false);
        let slots = calendar.slots();
        Ok(Episode {
            day,
            calendar,
            params,
            mode,
            book: OrderBook::new(PriceBand::default()),
            position: MarketPosition::flat(slots),
            schedule: StorageSchedule::idle(slots),
            step: 0,
            phase: Phase::Arrive,
            prev_action: Action::Idle,
            prev_reward_eur: 0.0,
            total_eur: 0.0,
            month: month as f64,
            weekend: if weekend { 1.0 } else { 0.0 },
        })
    }

    /// Number of decision steps in the day.
    pub fn steps_total(&self) -> usize {
        self.day.steps.len()
    }

    /// Index of the next decision step.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.steps_total()
    }

    /// Sum of settled step rewards so far, EUR.
    pub fn total_return_eur(&self) -> f64 {
        self.total_eur
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn position(&self) -> &MarketPosition {
        &self.position
    }

    pub fn schedule(&self) -> &StorageSchedule {
        &self.schedule
    }

    pub fn params(&self) -> &StorageParams {
        &self.params
    }

    /// Trading time of the current step, minutes.
    fn t_min(&self) -> i64 {
        self.calendar.step_time_min(self.step.min(self.steps_total() - 1))
    }

    /// Replays the current step's order arrivals into the book, drops orders
    /// whose gate has closed, and returns the resulting observation. Must be
    /// followed by [`Episode::act`].
    pub fn observe(&mut self) -> Result<StepObservation, EpisodeError> {
        if self.is_finished() {
            return Err(EpisodeError::Finished(self.steps_total()));
        }
        if self.phase != Phase::Arrive {
            return Err(EpisodeError::AlreadyObserved(self.step));
        }
        let t = self.t_min();
        let open = self
            .calendar
            .open_products(t)
            .map_err(|e| EpisodeError::BadDay(e.to_string()))?;
        self.book.purge_closed(&open);
        for ev in &self.day.steps[self.step].orders {
            self.book
                .match_insert(ev.product, ev.side, ev.price, ev.volume)
                .map_err(|source| EpisodeError::Event { step: self.step, source })?;
        }
        self.phase = Phase::Act;
        Ok(self.observation_now())
    }

    /// Applies the chosen action at the current step, settles its cash, and
    /// verifies the storage and position invariants.
    pub fn act(&mut self, action: Action) -> Result<StepReport, EpisodeError> {
        if self.is_finished() {
            return Err(EpisodeError::Finished(self.steps_total()));
        }
        if self.phase != Phase::Act {
            return Err(EpisodeError::NotObserved(self.step));
        }
        let step = self.step;
        let (reward, solution) = match action {
            Action::Idle => (0.0, None),
            Action::Trade => {
                let (cash, sol) = self.trade(step)?;
                (cash, Some(sol))
            }
        };
        self.prev_reward_eur = reward;
        self.prev_action = action;
        self.total_eur += reward;
        self.check_invariants(step, action)?;
        self.step += 1;
        self.phase = Phase::Arrive;
        Ok(StepReport { step, action, reward_eur: reward, solution })
    }

    /// Observation of the final state, for bootstrapping a value at the
    /// horizon. Only valid once the episode is finished; the exogenous block
    /// repeats the last step's record since the tape has ended.
    pub fn terminal_observation(&self) -> Result<StepObservation, EpisodeError> {
        if !self.is_finished() {
            return Err(EpisodeError::NotObserved(self.step));
        }
        Ok(self.observation_now())
    }

    fn observation_now(&self) -> StepObservation {
        let last = self.steps_total() - 1;
        let tape = &self.day.steps[self.step.min(last)].exog;
        let t = self.t_min();
        let exog = ExogenousRecord {
            da_prices_eur: tape.da_prices_eur,
            imbalance_price_eur: tape.imbalance_price_eur,
            system_imbalance_mw: tape.system_imbalance_mw,
            hour_of_day: (t.rem_euclid(1440)) as f64 / 60.0,
            month: self.month,
            weekend: self.weekend,
        };
        StepObservation {
            book: book_features(&self.book),
            position_mw: self.position.p_mar_mw(),
            exog,
            prev_action: self.prev_action.one_hot(),
            prev_reward_eur: self.prev_reward_eur,
        }
    }

    /// Solves the acceptance problem, applies it to the book and the storage
    /// state, and returns the settled cash with the solver's diagnostics.
    fn trade(&mut self, step: usize) -> Result<(f64, TradeSolution), EpisodeError> {
        let t = self.calendar.step_time_min(step);
        let problem = TradeProblem::from_state(
            &self.book,
            self.calendar,
            t,
            &self.position,
            &self.schedule,
            &self.params,
            self.mode,
        )?;
        let sol = solve_trade(&problem)?;

        let report = self
            .book
            .apply_acceptance(&sol.fractions, self.calendar.slot_h(), self.mode)
            .map_err(|source| EpisodeError::Event { step, source })?;
        if (report.cash_eur - sol.realized_eur).abs() > CASH_AGREE_EUR {
            return Err(EpisodeError::Invariant {
                step,
                action: Action::Trade,
                dump: format!(
                    "book settled {} EUR but solver reported {} EUR",
                    report.cash_eur, sol.realized_eur
                ),
            });
        }

        // Scatter the solver's local slot range back onto the full horizon.
        let slots = self.calendar.slots();
        let first = problem.slot_ids.first().copied().unwrap_or(slots);
        let mut v_con = vec![0i64; slots];
        let mut dg = vec![0i64; slots];
        let mut dc = vec![0i64; slots];
        for (i, &s) in problem.slot_ids.iter().enumerate() {
            v_con[s] = sol.v_con_micro[i];
            dg[s] = sol.dg_micro[i];
            dc[s] = sol.dc_micro[i];
        }
        let mut by_product = vec![0i64; slots];
        for (p, micro) in &report.v_con_micro {
            by_product[*p] = *micro;
        }
        if by_product != v_con {
            return Err(EpisodeError::Invariant {
                step,
                action: Action::Trade,
                dump: format!(
                    "book fills {:?} disagree with solver volumes {:?} (first adjustable {first})",
                    by_product, v_con
                ),
            });
        }
        storage::update_after_clear(&mut self.position, &mut self.schedule, &v_con, &dg, &dc)
            .map_err(|e| EpisodeError::Invariant {
                step,
                action: Action::Trade,
                dump: e.to_string(),
            })?;

        Ok((report.cash_eur, sol))
    }

    /// Fails with a dump unless the storage and position state is valid and
    /// the imbalance is identically zero.
    fn check_invariants(&self, step: usize, action: Action) -> Result<(), EpisodeError> {
        let violations = storage::validate(
            &self.schedule,
            &self.position,
            &self.params,
            self.calendar.slot_h(),
        );
        let lossy = self.params.efficiency != 1.0;
        let hard: Vec<&Violation> = violations
            .iter()
            .filter(|v| {
                let drift = match v {
                    Violation::SocLow { mwh, .. } => self.params.soc_min_mwh - mwh,
                    Violation::SocHigh { mwh, .. } => mwh - self.params.soc_max_mwh,
                    Violation::SocTerminal { mwh, target } => (mwh - target).abs(),
                    _ => return true,
                };
                !(lossy && drift <= SOC_DRIFT_TOL_MWH)
            })
            .collect();
        if !hard.is_empty() {
            return Err(EpisodeError::Invariant {
                step,
                action,
                dump: format!("{hard:?}; delta_micro = {:?}", self.position.delta_micro),
            });
        }
        if let Some(s) = self.position.delta_micro.iter().position(|&d| d != 0) {
            return Err(EpisodeError::Invariant {
                step,
                action,
                dump: format!(
                    "slot {s} carries imbalance {} micro-MW",
                    self.position.delta_micro[s]
                ),
            });
        }
        Ok(())
    }
}
