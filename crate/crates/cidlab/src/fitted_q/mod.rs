//! Value learning over replayed trading days.
//!
//! The policy is a sequence of per-step action-value functions fitted
//! backwards from recorded transitions: the value of the final step is the
//! immediate reward, and every earlier step regresses onto reward plus the
//! best successor value. Trajectories come from ε-greedy replays of training
//! days and live in a bounded double-ended store that forgets oldest-first.

mod checkpoint;
mod regressor;

pub use checkpoint::{
    load_checkpoint, read_ensemble, save_checkpoint, write_ensemble, CheckpointError,
};
pub use regressor::{MlpRegressor, Regressor, RegressorKind, TabularRegressor};

use std::collections::VecDeque;

use crate::data::DayRecord;
use crate::episode::{Action, Episode, EpisodeError};
use crate::features::{build_pseudo_state, FeatureError, PseudoState};
use crate::market::{MarketCalendar, SettlementMode};
use crate::storage::StorageParams;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no training days provided")]
    NoDays,
    #[error("bad training config: {0}")]
    BadConfig(String),
    #[error("stage {stage} has no samples to fit")]
    EmptyStage { stage: usize },
    #[error("pseudo-state width {got} does not match the model's {want}")]
    Width { want: usize, got: usize },
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// One recorded transition: state, action, settled reward, successor state.
#[derive(Debug, Clone)]
pub struct Quadruple {
    pub t: usize,
    pub z: PseudoState,
    pub action: Action,
    pub reward_eur: f64,
    pub z_next: PseudoState,
}

/// Provenance of a trajectory, enough to replay the episode that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrajectoryTag {
    pub actor_seed: u64,
    /// Global episode index in the training schedule.
    pub episode: usize,
    pub day: String,
}

/// One full episode worth of transitions, oldest step first.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tag: TrajectoryTag,
    pub steps: Vec<Quadruple>,
}

/// Bounded double-ended trajectory buffer; pushing past capacity evicts the
/// oldest entry.
#[derive(Debug)]
pub struct TrajectoryStore {
    capacity: usize,
    items: VecDeque<Trajectory>,
}

impl TrajectoryStore {
    pub fn new(capacity: usize) -> TrajectoryStore {
        assert!(capacity >= 1, "store capacity must be positive");
        TrajectoryStore { capacity, items: VecDeque::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends a trajectory, returning the evicted one if the store was full.
    pub fn push(&mut self, trajectory: Trajectory) -> Option<Trajectory> {
        let evicted =
            if self.items.len() == self.capacity { self.items.pop_front() } else { None };
        self.items.push_back(trajectory);
        evicted
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trajectory> {
        self.items.iter()
    }

    /// Highest step index present plus one, zero for an empty store.
    pub fn stage_count(&self) -> usize {
        self.items
            .iter()
            .flat_map(|tr| tr.steps.iter())
            .map(|q| q.t + 1)
            .max()
            .unwrap_or(0)
    }

    /// All stored transitions taken at step `t`.
    pub fn samples_at(&self, t: usize) -> Vec<&Quadruple> {
        self.items
            .iter()
            .flat_map(|tr| tr.steps.iter())
            .filter(|q| q.t == t)
            .collect()
    }
}

/// Training hyperparameters; regressor settings apply to the default
/// feedforward model.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Episodes generated per training day (E).
    pub episodes_per_day: usize,
    /// Episodes between refits of the value functions.
    pub refit_every: usize,
    /// Each actor draws its initial exploration rate uniformly from here.
    pub epsilon0_range: (f64, f64),
    /// Exploration decays as `ε0·exp(-decay·n)` over an actor's episodes.
    pub epsilon_decay: f64,
    /// Observation blocks per pseudo-state.
    pub window: usize,
    /// Trajectory store capacity.
    pub buffer_capacity: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes_per_day: 16,
            refit_every: 32,
            epsilon0_range: (0.1, 0.5),
            epsilon_decay: 0.01,
            window: 4,
            buffer_capacity: 4096,
            hidden: 64,
            epochs: 200,
            learning_rate: 1e-3,
            batch: 32,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let (lo, hi) = self.epsilon0_range;
        if self.episodes_per_day < 1 || self.refit_every < 1 {
            return Err(TrainError::BadConfig("episode counts must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(TrainError::BadConfig(format!(
                "epsilon0 range [{lo}, {hi}] must sit inside [0, 1]"
            )));
        }
        if self.epsilon_decay < 0.0 || !self.epsilon_decay.is_finite() {
            return Err(TrainError::BadConfig("epsilon decay must be finite and >= 0".into()));
        }
        if self.window < 1 || self.buffer_capacity < 1 {
            return Err(TrainError::BadConfig("window and buffer capacity must be >= 1".into()));
        }
        if self.hidden < 1 || self.epochs < 1 || self.batch < 1 {
            return Err(TrainError::BadConfig("regressor sizes must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(TrainError::BadConfig("learning rate must be positive".into()));
        }
        Ok(())
    }

    /// Factory for the default feedforward regressor under these settings.
    pub fn mlp_factory(&self) -> impl Fn(usize, usize) -> Box<dyn Regressor> + Send + Sync {
        let (hidden, epochs, lr, batch) = (self.hidden, self.epochs, self.learning_rate, self.batch);
        move |_stage, _width| Box::new(MlpRegressor::new(hidden, epochs, lr, batch)) as Box<dyn Regressor>
    }
}

/// Per-feature affine normalization frozen at fit time.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    fn from_rows(rows: &[&[f64]], width: usize) -> Normalizer {
        let mut mean = vec![0.0; width];
        let mut count = 0usize;
        for row in rows {
            for (m, v) in mean.iter_mut().zip(*row) {
                *m += v;
            }
            count += 1;
        }
        for m in &mut mean {
            *m /= count as f64;
        }
        let mut var = vec![0.0; width];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(*row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / count as f64).sqrt();
                if sd > 1e-12 { sd } else { 1.0 }
            })
            .collect();
        Normalizer { mean, std }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }
}

/// Affine scale of one stage's fitted targets, used to report values in EUR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TargetScale {
    pub mean: f64,
    pub std: f64,
}

/// The per-step action-value functions of one policy, plus the input and
/// target scalings they were fitted under. The value beyond the final step
/// is identically zero.
pub struct QEnsemble {
    pub(crate) stages: Vec<Option<Box<dyn Regressor>>>,
    pub(crate) norm: Option<Normalizer>,
    pub(crate) scales: Vec<TargetScale>,
    pub(crate) input_width: usize,
    pub(crate) window: usize,
}

impl QEnsemble {
    /// A policy with no fitted stages: every value reads zero, so greedy
    /// action selection falls back to the tie-break.
    pub fn untrained() -> QEnsemble {
        QEnsemble { stages: Vec::new(), norm: None, scales: Vec::new(), input_width: 0, window: 0 }
    }

    pub fn stages(&self) -> usize {
        self.stages.len()
    }

    /// Pseudo-state window the ensemble was fitted with; zero if untrained.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn is_untrained(&self) -> bool {
        self.stages.iter().all(|s| s.is_none())
    }

    /// Action values `[Idle, Trade]` in EUR at step `t`. Steps at or past the
    /// horizon are worth zero by definition.
    pub fn predict(&self, t: usize, z: &PseudoState) -> [f64; 2] {
        let Some(Some(reg)) = self.stages.get(t) else { return [0.0, 0.0] };
        assert_eq!(
            z.values.len(),
            self.input_width,
            "pseudo-state width differs from the fitted width"
        );
        let norm = self.norm.as_ref().expect("fitted ensemble has stats");
        let raw = reg.predict(&norm.apply(&z.values));
        let scale = self.scales[t];
        [raw[0] * scale.std + scale.mean, raw[1] * scale.std + scale.mean]
    }

    /// Best achievable value at step `t`.
    pub fn value(&self, t: usize, z: &PseudoState) -> f64 {
        let q = self.predict(t, z);
        q[0].max(q[1])
    }
}

impl std::fmt::Debug for QEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QEnsemble")
            .field("stages", &self.stages.len())
            .field("input_width", &self.input_width)
            .field("window", &self.window)
            .finish()
    }
}

/// Mixes a salt into a seed; used to derive independent random streams.
fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut x = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Random stream seed of one actor under a master seed.
pub fn actor_seed(master: u64, actor: usize) -> u64 {
    mix_seed(master, 0xAC70_0000 + actor as u64)
}

/// Fits the whole value sequence backwards from the stored transitions.
///
/// Stage `t` regresses `reward + max successor value` onto the stage-`t`
/// pseudo-states; the successor value comes from the stages already fitted
/// above, and from the zero function at the horizon. Every stage must have
/// at least one sample.
pub fn fit_q(
    store: &TrajectoryStore,
    config: &TrainConfig,
    factory: &dyn Fn(usize, usize) -> Box<dyn Regressor>,
) -> Result<QEnsemble, TrainError> {
    config.validate()?;
    let stages = store.stage_count();
    if stages == 0 {
        return Err(TrainError::EmptyStage { stage: 0 });
    }
    let mut per_stage: Vec<Vec<&Quadruple>> = vec![Vec::new(); stages];
    for tr in store.iter() {
        for q in &tr.steps {
            per_stage[q.t].push(q);
        }
    }
    if let Some(stage) = per_stage.iter().position(|s| s.is_empty()) {
        return Err(TrainError::EmptyStage { stage });
    }
    let width = per_stage[0][0].z.values.len();
    for stage in &per_stage {
        for q in stage {
            if q.z.values.len() != width || q.z_next.values.len() != width {
                return Err(TrainError::Width { want: width, got: q.z.values.len() });
            }
        }
    }
    let window = per_stage[0][0].z.window();

    let rows: Vec<&[f64]> =
        store.iter().flat_map(|tr| tr.steps.iter()).map(|q| q.z.values.as_slice()).collect();
    let norm = Normalizer::from_rows(&rows, width);

    let mut ensemble = QEnsemble {
        stages: (0..stages).map(|_| None).collect(),
        norm: Some(norm),
        scales: vec![TargetScale { mean: 0.0, std: 1.0 }; stages],
        input_width: width,
        window,
    };

    for t in (0..stages).rev() {
        let samples = &per_stage[t];
        let mut inputs = Vec::with_capacity(samples.len());
        let mut actions = Vec::with_capacity(samples.len());
        let mut targets = Vec::with_capacity(samples.len());
        for q in samples {
            let follow_on = if t + 1 < stages { ensemble.value(t + 1, &q.z_next) } else { 0.0 };
            inputs.push(ensemble.norm.as_ref().unwrap().apply(&q.z.values));
            actions.push(q.action);
            targets.push(q.reward_eur + follow_on);
        }
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        let var =
            targets.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / targets.len() as f64;
        let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        ensemble.scales[t] = TargetScale { mean, std };
        let scaled: Vec<f64> = targets.iter().map(|y| (y - mean) / std).collect();

        let mut reg = factory(t, width);
        reg.fit(&inputs, &actions, &scaled, mix_seed(config.seed, 0xF17 + t as u64))?;
        ensemble.stages[t] = Some(reg);
    }
    Ok(ensemble)
}

/// ε-greedy action choice: explore uniformly with probability `epsilon`,
/// otherwise take the higher-valued action, breaking exact ties toward
/// `Trade`.
pub fn act<R: Rng>(
    ensemble: &QEnsemble,
    t: usize,
    z: &PseudoState,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Action::ALL[rng.gen_range(0..2)];
    }
    let q = ensemble.predict(t, z);
    if q[Action::Trade.index()] >= q[Action::Idle.index()] {
        Action::Trade
    } else {
        Action::Idle
    }
}

/// Replays one day under the ε-greedy policy, recording every transition.
/// Returns the trajectory body and the day's total settled return.
pub fn run_episode(
    day: &DayRecord,
    calendar: &MarketCalendar,
    params: &StorageParams,
    mode: SettlementMode,
    ensemble: &QEnsemble,
    window: usize,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Quadruple>, f64), TrainError> {
    let mut ep = Episode::new(day, calendar, *params, mode)?;
    let slots = calendar.slots();
    let steps = ep.steps_total();
    let mut history = Vec::with_capacity(steps + 1);
    history.push(ep.observe()?);
    let mut z = build_pseudo_state(&history, window, slots)?;
    let mut quads = Vec::with_capacity(steps);
    for t in 0..steps {
        let action = act(ensemble, t, &z, epsilon, rng);
        let report = ep.act(action)?;
        history.push(if ep.is_finished() { ep.terminal_observation()? } else { ep.observe()? });
        let z_next = build_pseudo_state(&history, window, slots)?;
        quads.push(Quadruple {
            t,
            z,
            action,
            reward_eur: report.reward_eur,
            z_next: z_next.clone(),
        });
        z = z_next;
    }
    Ok((quads, ep.total_return_eur()))
}

/// Per-episode training telemetry.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressEvent {
    pub episode: usize,
    pub actor: usize,
    pub day: String,
    pub return_eur: f64,
    pub epsilon: f64,
}

/// One actor's trajectory source: an owned random stream, a privately drawn
/// initial exploration rate, and an exploration schedule over its own
/// episode count.
pub struct Generator {
    pub actor_seed: u64,
    rng: ChaCha8Rng,
    epsilon0: f64,
    episodes_run: usize,
    last_day: Option<String>,
}

impl Generator {
    pub fn new(actor_seed: u64, config: &TrainConfig) -> Generator {
        let mut rng = ChaCha8Rng::seed_from_u64(actor_seed);
        let (lo, hi) = config.epsilon0_range;
        let epsilon0 = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        Generator { actor_seed, rng, epsilon0, episodes_run: 0, last_day: None }
    }

    /// Exploration rate for this actor's next episode.
    pub fn epsilon(&self, config: &TrainConfig) -> f64 {
        self.epsilon0 * (-config.epsilon_decay * self.episodes_run as f64).exp()
    }

    pub fn episodes_run(&self) -> usize {
        self.episodes_run
    }

    /// Day drawn for the most recent episode attempt, for failure reports.
    pub fn last_day(&self) -> Option<String> {
        self.last_day.clone()
    }

    /// Runs one ε-greedy episode on a uniformly drawn day and tags it with
    /// the global schedule ticket.
    pub fn run_one(
        &mut self,
        ticket: usize,
        days: &[DayRecord],
        calendar: &MarketCalendar,
        params: &StorageParams,
        mode: SettlementMode,
        config: &TrainConfig,
        ensemble: &QEnsemble,
    ) -> Result<(Trajectory, ProgressEvent), TrainError> {
        if days.is_empty() {
            return Err(TrainError::NoDays);
        }
        let epsilon = self.epsilon(config);
        let day = &days[self.rng.gen_range(0..days.len())];
        self.last_day = Some(day.day.clone());
        let (steps, return_eur) = run_episode(
            day,
            calendar,
            params,
            mode,
            ensemble,
            config.window,
            epsilon,
            &mut self.rng,
        )?;
        self.episodes_run += 1;
        let tag =
            TrajectoryTag { actor_seed: self.actor_seed, episode: ticket, day: day.day.clone() };
        let event = ProgressEvent {
            episode: ticket,
            actor: 0,
            day: day.day.clone(),
            return_eur,
            epsilon,
        };
        Ok((Trajectory { tag, steps }, event))
    }
}

/// Sequential trajectory generation and backward fitting: one actor runs
/// `episodes_per_day·|days|` ε-greedy episodes, refitting the value
/// functions every `refit_every` episodes and once more at the end. This is
/// the reference semantics the concurrent runtime must reproduce in
/// deterministic mode.
pub fn train(
    days: &[DayRecord],
    calendar: &MarketCalendar,
    params: &StorageParams,
    mode: SettlementMode,
    config: &TrainConfig,
    factory: &dyn Fn(usize, usize) -> Box<dyn Regressor>,
    mut progress: impl FnMut(&ProgressEvent),
) -> Result<(QEnsemble, TrajectoryStore), TrainError> {
    config.validate()?;
    if days.is_empty() {
        return Err(TrainError::NoDays);
    }
    let total = config.episodes_per_day * days.len();
    let mut store = TrajectoryStore::new(config.buffer_capacity);
    let mut ensemble = QEnsemble::untrained();
    let mut generator = Generator::new(actor_seed(config.seed, 0), config);
    let mut done = 0;
    while done < total {
        let chunk = config.refit_every.min(total - done);
        for _ in 0..chunk {
            let (trajectory, event) =
                generator.run_one(done, days, calendar, params, mode, config, &ensemble)?;
            store.push(trajectory);
            progress(&event);
            done += 1;
        }
        ensemble = fit_q(&store, config, factory)?;
    }
    Ok((ensemble, store))
}

#[cfg(test)]
mod tests;
