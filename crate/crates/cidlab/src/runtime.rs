//! Concurrent trajectory generation with a single learner.
//!
//! Several actor threads replay ε-greedy episodes against their own
//! environment replicas and push whole local buffers of trajectories through
//! an ordered channel. The learner owns the global store, refits the value
//! functions whenever enough new material arrived, and publishes parameter
//! snapshots that actors pick up between flushes. An actor uses one snapshot
//! for the whole of each episode.
//!
//! The deterministic mode is the reference semantics: it runs the sequential
//! generation loop on one thread and is bit-identical to it.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};

use crate::data::DayRecord;
use crate::fitted_q::{
    actor_seed, fit_q, train, Generator, ProgressEvent, QEnsemble, Regressor, TrainConfig,
    TrainError, Trajectory, TrajectoryStore,
};
use crate::market::{MarketCalendar, SettlementMode};
use crate::storage::StorageParams;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("bad runtime config: {0}")]
    BadConfig(String),
    #[error("actor {actor} (seed {seed}) failed on day {day}: {source}")]
    ActorFailed { actor: usize, seed: u64, day: String, source: TrainError },
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// Orchestration settings for the actor and learner threads.
#[derive(Debug, Clone)]
pub struct RuntimeConfig {
    pub actors: usize,
    /// Trajectories an actor accumulates before flushing to the learner.
    pub local_buffer: usize,
    /// Global store capacity; defaults to the training config's buffer.
    pub global_capacity: Option<usize>,
    /// Publish a fresh parameter snapshot every this many interim refits.
    pub publish_every: usize,
    /// Run the sequential reference semantics on a single thread.
    pub deterministic: bool,
    /// Explicit per-actor seeds; derived from the training seed if absent.
    pub seeds: Option<Vec<u64>>,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            actors: 4,
            local_buffer: 4,
            global_capacity: None,
            publish_every: 1,
            deterministic: false,
            seeds: None,
        }
    }
}

impl RuntimeConfig {
    /// Actor threads actually used; the deterministic mode forces one.
    pub fn effective_actors(&self) -> usize {
        if self.deterministic { 1 } else { self.actors }
    }

    pub fn validate(&self) -> Result<(), RuntimeError> {
        if self.actors < 1 {
            return Err(RuntimeError::BadConfig("actor count must be >= 1".into()));
        }
        if self.local_buffer < 1 || self.publish_every < 1 {
            return Err(RuntimeError::BadConfig(
                "local buffer and publish cadence must be >= 1".into(),
            ));
        }
        if let Some(cap) = self.global_capacity {
            if cap < 1 {
                return Err(RuntimeError::BadConfig("global capacity must be >= 1".into()));
            }
        }
        if let Some(seeds) = &self.seeds {
            if seeds.len() < self.effective_actors() {
                return Err(RuntimeError::BadConfig(format!(
                    "{} seeds provided for {} actors",
                    seeds.len(),
                    self.effective_actors()
                )));
            }
        }
        Ok(())
    }

    fn seed_for(&self, master: u64, actor: usize) -> u64 {
        match &self.seeds {
            Some(seeds) => seeds[actor],
            None => actor_seed(master, actor),
        }
    }
}

/// Result of a training run plus learner telemetry.
#[derive(Debug)]
pub struct RunOutcome {
    pub ensemble: QEnsemble,
    pub store: TrajectoryStore,
    /// Refits triggered by the arrival threshold, excluding the final fit.
    pub interim_refits: usize,
}

/// Messages flowing from actors to the learner.
enum ActorMsg {
    Batch(Vec<(Trajectory, ProgressEvent)>),
    Done,
    Crash { actor: usize, seed: u64, day: String, error: TrainError },
}

/// Canonical progress line, one per generated episode.
pub fn progress_line(ev: &ProgressEvent) -> String {
    format!(
        "episode={} actor={} day={} return={:.2} epsilon={:.4}",
        ev.episode, ev.actor, ev.day, ev.return_eur, ev.epsilon
    )
}

/// Generates `episodes_per_day·|days|` trajectories and fits the value
/// functions from them, spreading generation over the configured actors.
/// Episode tickets come from a shared counter, so the total is exact no
/// matter how the actors interleave.
pub fn run(
    days: &[DayRecord],
    calendar: &MarketCalendar,
    params: &StorageParams,
    mode: SettlementMode,
    train_config: &TrainConfig,
    runtime: &RuntimeConfig,
    factory: &dyn Fn(usize, usize) -> Box<dyn Regressor>,
    mut progress: impl FnMut(&ProgressEvent),
) -> Result<RunOutcome, RuntimeError> {
    runtime.validate()?;
    train_config.validate()?;
    if days.is_empty() {
        return Err(RuntimeError::Train(TrainError::NoDays));
    }

    if runtime.deterministic {
        let (ensemble, store) =
            train(days, calendar, params, mode, train_config, factory, progress)?;
        let interim =
            (train_config.episodes_per_day * days.len()).div_ceil(train_config.refit_every) - 1;
        return Ok(RunOutcome { ensemble, store, interim_refits: interim });
    }

    let total = train_config.episodes_per_day * days.len();
    let actors = runtime.effective_actors();
    let capacity = runtime.global_capacity.unwrap_or(train_config.buffer_capacity);

    let tickets = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let snapshot: Mutex<Arc<QEnsemble>> = Mutex::new(Arc::new(QEnsemble::untrained()));
    let (tx, rx) = mpsc::channel::<ActorMsg>();

    let mut store = TrajectoryStore::new(capacity);
    let mut interim_refits = 0usize;
    let mut crash: Option<RuntimeError> = None;

    std::thread::scope(|scope| {
        for k in 0..actors {
            let seed = runtime.seed_for(train_config.seed, k);
            let tx = tx.clone();
            let tickets = &tickets;
            let abort = &abort;
            let snapshot = &snapshot;
            scope.spawn(move || {
                let mut generator = Generator::new(seed, train_config);
                let mut local: Vec<(Trajectory, ProgressEvent)> = Vec::new();
                let mut ensemble = snapshot.lock().unwrap().clone();
                loop {
                    if abort.load(Ordering::Relaxed) {
                        break;
                    }
                    let ticket = tickets.fetch_add(1, Ordering::Relaxed);
                    if ticket >= total {
                        break;
                    }
                    match generator.run_one(
                        ticket,
                        days,
                        calendar,
                        params,
                        mode,
                        train_config,
                        &ensemble,
                    ) {
                        Ok((trajectory, mut event)) => {
                            event.actor = k;
                            local.push((trajectory, event));
                            if local.len() >= runtime.local_buffer {
                                if tx.send(ActorMsg::Batch(std::mem::take(&mut local))).is_err() {
                                    break;
                                }
                                // A flush is the moment an actor may adopt
                                // newer parameters; never mid-episode.
                                ensemble = snapshot.lock().unwrap().clone();
                            }
                        }
                        Err(error) => {
                            let day = generator.last_day().unwrap_or_default();
                            let _ = tx.send(ActorMsg::Crash { actor: k, seed, day, error });
                            return;
                        }
                    }
                }
                if !local.is_empty() {
                    let _ = tx.send(ActorMsg::Batch(local));
                }
                let _ = tx.send(ActorMsg::Done);
            });
        }
        drop(tx);

        let mut running = actors;
        let mut since_refit = 0usize;
        while running > 0 {
            match rx.recv() {
                Ok(ActorMsg::Batch(batch)) => {
                    if crash.is_some() {
                        continue;
                    }
                    for (trajectory, event) in batch {
                        store.push(trajectory);
                        progress(&event);
                        since_refit += 1;
                    }
                    if since_refit >= train_config.refit_every {
                        match fit_q(&store, train_config, factory) {
                            Ok(fitted) => {
                                interim_refits += 1;
                                since_refit = 0;
                                if interim_refits % runtime.publish_every == 0 {
                                    *snapshot.lock().unwrap() = Arc::new(fitted);
                                }
                            }
                            Err(e) => {
                                crash = Some(RuntimeError::Train(e));
                                abort.store(true, Ordering::Relaxed);
                            }
                        }
                    }
                }
                Ok(ActorMsg::Done) => running -= 1,
                Ok(ActorMsg::Crash { actor, seed, day, error }) => {
                    running -= 1;
                    if crash.is_none() {
                        crash = Some(RuntimeError::ActorFailed {
                            actor,
                            seed,
                            day,
                            source: error,
                        });
                        abort.store(true, Ordering::Relaxed);
                    }
                }
                Err(_) => break,
            }
        }
    });

    if let Some(err) = crash {
        return Err(err);
    }
    let ensemble = fit_q(&store, train_config, factory)?;
    Ok(RunOutcome { ensemble, store, interim_refits })
}
