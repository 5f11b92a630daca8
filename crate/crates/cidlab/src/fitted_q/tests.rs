use super::*;
use crate::data::{DayStep, ExogStep, OrderEvent};
use crate::market::{Price, Side, Volume};

fn state(x: f64) -> PseudoState {
    PseudoState { values: vec![x], filled: 1, block_width: 1 }
}

fn quad(t: usize, z: f64, action: Action, reward: f64, z_next: f64) -> Quadruple {
    Quadruple { t, z: state(z), action, reward_eur: reward, z_next: state(z_next) }
}

fn tagged(episode: usize, steps: Vec<Quadruple>) -> Trajectory {
    Trajectory {
        tag: TrajectoryTag { actor_seed: 7, episode, day: "2018-01-01".into() },
        steps,
    }
}

fn table_factory() -> impl Fn(usize, usize) -> Box<dyn Regressor> {
    |_, _| Box::new(TabularRegressor::new()) as Box<dyn Regressor>
}

/// Two-stage deterministic decision problem used for the exact backward
/// induction comparison. States are scalars: 0 at the root, 1 and 2 after
/// Idle and Trade, 9 terminal.
fn toy_store() -> TrajectoryStore {
    let mut store = TrajectoryStore::new(8);
    store.push(tagged(0, vec![quad(0, 0.0, Action::Idle, 1.0, 1.0), quad(1, 1.0, Action::Idle, 2.0, 9.0)]));
    store.push(tagged(1, vec![quad(0, 0.0, Action::Idle, 1.0, 1.0), quad(1, 1.0, Action::Trade, 5.0, 9.0)]));
    store.push(tagged(2, vec![quad(0, 0.0, Action::Trade, 0.0, 2.0), quad(1, 2.0, Action::Idle, 10.0, 9.0)]));
    store.push(tagged(3, vec![quad(0, 0.0, Action::Trade, 0.0, 2.0), quad(1, 2.0, Action::Trade, 3.0, 9.0)]));
    store
}

#[test]
fn store_evicts_oldest_first() {
    let mut store = TrajectoryStore::new(2);
    assert!(store.push(tagged(0, vec![quad(0, 0.0, Action::Idle, 0.0, 1.0)])).is_none());
    assert!(store.push(tagged(1, vec![quad(0, 0.0, Action::Idle, 0.0, 1.0)])).is_none());
    let evicted = store.push(tagged(2, vec![quad(0, 0.0, Action::Idle, 0.0, 1.0)])).unwrap();
    assert_eq!(evicted.tag.episode, 0);
    assert_eq!(store.len(), 2);
    let kept: Vec<usize> = store.iter().map(|tr| tr.tag.episode).collect();
    assert_eq!(kept, vec![1, 2]);
    assert_eq!(store.stage_count(), 1);
    assert_eq!(store.samples_at(0).len(), 2);
}

#[test]
fn tabular_fit_matches_backward_induction() {
    let store = toy_store();
    let config = TrainConfig::default();
    let ensemble = fit_q(&store, &config, &table_factory()).unwrap();

    // Last stage: plain immediate rewards.
    let q1a = ensemble.predict(1, &state(1.0));
    let q1b = ensemble.predict(1, &state(2.0));
    assert!((q1a[0] - 2.0).abs() < 1e-9 && (q1a[1] - 5.0).abs() < 1e-9, "{q1a:?}");
    assert!((q1b[0] - 10.0).abs() < 1e-9 && (q1b[1] - 3.0).abs() < 1e-9, "{q1b:?}");
    // Root: reward plus the best successor value.
    let q0 = ensemble.predict(0, &state(0.0));
    assert!((q0[0] - 6.0).abs() < 1e-9 && (q0[1] - 10.0).abs() < 1e-9, "{q0:?}");
    // Beyond the horizon the value is identically zero.
    assert_eq!(ensemble.predict(2, &state(9.0)), [0.0, 0.0]);
    assert_eq!(ensemble.value(0, &state(0.0)), q0[1]);
}

#[test]
fn fit_q_names_the_empty_stage() {
    let mut store = TrajectoryStore::new(4);
    store.push(tagged(0, vec![quad(1, 1.0, Action::Idle, 2.0, 9.0)]));
    match fit_q(&store, &TrainConfig::default(), &table_factory()) {
        Err(TrainError::EmptyStage { stage: 0 }) => {}
        other => panic!("expected empty stage 0, got {other:?}"),
    }
    let empty = TrajectoryStore::new(4);
    assert!(matches!(
        fit_q(&empty, &TrainConfig::default(), &table_factory()),
        Err(TrainError::EmptyStage { stage: 0 })
    ));
}

#[test]
fn single_stage_targets_are_the_rewards() {
    let mut store = TrajectoryStore::new(4);
    store.push(tagged(0, vec![quad(0, 0.0, Action::Trade, 42.5, 9.0)]));
    store.push(tagged(1, vec![quad(0, 0.0, Action::Idle, -3.0, 9.0)]));
    let ensemble = fit_q(&store, &TrainConfig::default(), &table_factory()).unwrap();
    let q = ensemble.predict(0, &state(0.0));
    assert!((q[Action::Trade.index()] - 42.5).abs() < 1e-9);
    assert!((q[Action::Idle.index()] + 3.0).abs() < 1e-9);
}

#[test]
fn zero_rewards_fit_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut store = TrajectoryStore::new(64);
    for e in 0..48 {
        let z: f64 = rng.gen_range(-2.0..2.0);
        let action = if rng.gen_bool(0.5) { Action::Idle } else { Action::Trade };
        store.push(tagged(e, vec![quad(0, z, action, 0.0, 9.0)]));
    }
    let config = TrainConfig {
        hidden: 16,
        epochs: 300,
        learning_rate: 3e-3,
        batch: 8,
        ..TrainConfig::default()
    };
    let ensemble = fit_q(&store, &config, &config.mlp_factory()).unwrap();
    let mut worst = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0;
    for q in store.iter().flat_map(|tr| tr.steps.iter()) {
        let v = ensemble.predict(0, &q.z)[q.action.index()].abs();
        worst = worst.max(v);
        sum += v;
        count += 1;
    }
    // The tail sits on held-out samples that only see the fit indirectly.
    let mean = sum / count as f64;
    assert!(worst < 0.15, "worst training-input value {worst}");
    assert!(mean < 0.03, "mean training-input value {mean}");
}

#[test]
fn mlp_learns_a_linear_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 256;
    let mut inputs = Vec::with_capacity(n);
    let mut actions = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let x1: f64 = rng.gen_range(-1.0..1.0);
        let x2: f64 = rng.gen_range(-1.0..1.0);
        inputs.push(vec![x1, x2]);
        actions.push(if i % 2 == 0 { Action::Idle } else { Action::Trade });
        targets.push(2.0 * x1 - x2);
    }
    let mut mlp = MlpRegressor::new(32, 200, 1e-3, 16);
    mlp.fit(&inputs, &actions, &targets, 77).unwrap();
    let mae: f64 = inputs
        .iter()
        .zip(&actions)
        .zip(&targets)
        .map(|((x, a), y)| (mlp.predict(x)[a.index()] - y).abs())
        .sum::<f64>()
        / n as f64;
    assert!(mae < 0.25, "mean absolute error {mae}");
}

#[test]
fn mlp_fit_is_reproducible() {
    let inputs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 10.0, (i % 7) as f64]).collect();
    let actions: Vec<Action> =
        (0..30).map(|i| if i % 3 == 0 { Action::Trade } else { Action::Idle }).collect();
    let targets: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();

    let mut a = MlpRegressor::new(8, 40, 1e-3, 4);
    a.fit(&inputs, &actions, &targets, 123).unwrap();
    let mut b = MlpRegressor::new(8, 40, 1e-3, 4);
    b.fit(&inputs, &actions, &targets, 123).unwrap();

    let (mut pa, mut pb) = (Vec::new(), Vec::new());
    a.write_params(&mut pa);
    b.write_params(&mut pb);
    assert_eq!(pa, pb);

    let mut c = MlpRegressor::new(8, 40, 1e-3, 4);
    c.fit(&inputs, &actions, &targets, 124).unwrap();
    let mut pc = Vec::new();
    c.write_params(&mut pc);
    assert_ne!(pa, pc, "different seeds should explore different weights");
}

/// Hand-built single-stage ensemble whose table favors Idle 10 to 1.
fn idle_favoring_ensemble() -> QEnsemble {
    let mut table = TabularRegressor::new();
    table
        .fit(&[vec![0.0], vec![0.0]], &[Action::Idle, Action::Trade], &[10.0, 1.0], 0)
        .unwrap();
    QEnsemble {
        stages: vec![Some(Box::new(table))],
        norm: Some(Normalizer { mean: vec![0.0], std: vec![1.0] }),
        scales: vec![TargetScale { mean: 0.0, std: 1.0 }],
        input_width: 1,
        window: 1,
    }
}

#[test]
fn epsilon_greedy_mixes_as_specified() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let z = state(0.0);

    // Pure exploitation on a zero-knowledge ensemble: ties go to Trade.
    let fresh = QEnsemble::untrained();
    assert!((0..50).all(|_| act(&fresh, 0, &z, 0.0, &mut rng) == Action::Trade));

    // Full exploration is uniform.
    let trades = (0..20_000)
        .filter(|_| act(&fresh, 0, &z, 1.0, &mut rng) == Action::Trade)
        .count();
    let frac = trades as f64 / 20_000.0;
    assert!((frac - 0.5).abs() < 0.015, "explore fraction {frac}");

    // Mixed: P(Trade) = ε/2 when the greedy choice is Idle.
    let biased = idle_favoring_ensemble();
    assert_eq!(act(&biased, 0, &z, 0.0, &mut rng), Action::Idle);
    let trades = (0..20_000)
        .filter(|_| act(&biased, 0, &z, 0.4, &mut rng) == Action::Trade)
        .count();
    let frac = trades as f64 / 20_000.0;
    assert!((frac - 0.2).abs() < 0.015, "mixed fraction {frac}");
}

#[test]
fn exploration_anneals_exponentially() {
    let config = TrainConfig {
        epsilon0_range: (0.3, 0.3),
        epsilon_decay: 0.1,
        ..TrainConfig::default()
    };
    let mut gen = Generator::new(42, &config);
    assert_eq!(gen.epsilon(&config), 0.3);
    gen.episodes_run = 7;
    let want = 0.3 * (-0.7f64).exp();
    assert!((gen.epsilon(&config) - want).abs() < 1e-12);
    // The configured budget drives exploration below 1e-3.
    gen.episodes_run = 80;
    assert!(gen.epsilon(&config) < 1e-3);
}

#[test]
fn checkpoint_round_trips_byte_identically() {
    let store = toy_store();
    let config = TrainConfig::default();
    let ensemble = fit_q(&store, &config, &table_factory()).unwrap();

    let bytes = write_ensemble(&ensemble);
    let back = read_ensemble(&bytes).unwrap();
    assert_eq!(write_ensemble(&back), bytes);
    for z in [0.0, 1.0, 2.0] {
        assert_eq!(back.predict(0, &state(z)), ensemble.predict(0, &state(z)));
        assert_eq!(back.predict(1, &state(z)), ensemble.predict(1, &state(z)));
    }

    let empty = write_ensemble(&QEnsemble::untrained());
    let back = read_ensemble(&empty).unwrap();
    assert_eq!(back.stages(), 0);
    assert!(back.is_untrained());
}

#[test]
fn checkpoint_rejects_damage() {
    let bytes = write_ensemble(&QEnsemble::untrained());
    assert!(matches!(read_ensemble(&bytes[..bytes.len() - 2]), Err(CheckpointError::Corrupt(_))));

    let mut wrong_magic = bytes.clone();
    wrong_magic[0] = b'X';
    assert!(matches!(read_ensemble(&wrong_magic), Err(CheckpointError::BadMagic)));

    let mut future = bytes.clone();
    future[4] = 9;
    assert!(matches!(read_ensemble(&future), Err(CheckpointError::Version(9))));

    let mut trailing = bytes;
    trailing.push(0);
    assert!(matches!(read_ensemble(&trailing), Err(CheckpointError::Corrupt(_))));
}

#[test]
fn mlp_ensemble_survives_checkpointing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut store = TrajectoryStore::new(32);
    for e in 0..24 {
        let z: f64 = rng.gen_range(-1.0..1.0);
        let action = if rng.gen_bool(0.5) { Action::Idle } else { Action::Trade };
        store.push(tagged(e, vec![quad(0, z, action, z * 3.0, 9.0)]));
    }
    let config = TrainConfig { hidden: 8, epochs: 30, batch: 4, ..TrainConfig::default() };
    let ensemble = fit_q(&store, &config, &config.mlp_factory()).unwrap();
    let bytes = write_ensemble(&ensemble);
    let back = read_ensemble(&bytes).unwrap();
    assert_eq!(write_ensemble(&back), bytes);
    for z in [-0.9, 0.1, 0.7] {
        assert_eq!(back.predict(0, &state(z)), ensemble.predict(0, &state(z)));
    }
}

/// Three-step market day with one cross-slot arbitrage posted at the start.
mod market_training {
    use super::*;
    use crate::episode::Episode;
    use crate::market::{MarketCalendar, SettlementMode};
    use crate::storage::StorageParams;

    fn calendar() -> MarketCalendar {
        MarketCalendar::new(1440, 2, 60, 1380, 15, 2).unwrap()
    }

    fn battery() -> StorageParams {
        StorageParams {
            soc_min_mwh: 0.0,
            soc_max_mwh: 5.0,
            soc_init_mwh: 0.0,
            soc_term_mwh: 0.0,
            charge_min_mw: 0.0,
            charge_max_mw: 10.0,
            discharge_min_mw: 0.0,
            discharge_max_mw: 10.0,
            efficiency: 1.0,
        }
    }

    fn ev(product: usize, side: Side, eur: f64, mw: f64) -> OrderEvent {
        OrderEvent {
            product,
            side,
            price: Price::from_eur_per_mwh(eur).unwrap(),
            volume: Volume::from_mw(mw).unwrap(),
        }
    }

    fn day() -> DayRecord {
        DayRecord {
            day: "2018-01-05".into(),
            steps: vec![
                DayStep {
                    orders: vec![ev(0, Side::Sell, 20.0, 5.0), ev(1, Side::Buy, 60.0, 5.0)],
                    exog: ExogStep::default(),
                },
                DayStep { orders: vec![], exog: ExogStep::default() },
                DayStep { orders: vec![], exog: ExogStep::default() },
            ],
        }
    }

    #[test]
    fn training_on_an_arbitrage_day_captures_the_spread() {
        let cal = calendar();
        let day = day();
        let config = TrainConfig {
            episodes_per_day: 120,
            refit_every: 40,
            epsilon0_range: (0.5, 0.5),
            epsilon_decay: 0.02,
            window: 2,
            buffer_capacity: 256,
            hidden: 16,
            epochs: 120,
            batch: 8,
            seed: 11,
            ..TrainConfig::default()
        };
        let mut events = 0;
        let (ensemble, store) = train(
            &[day.clone()],
            &cal,
            &battery(),
            SettlementMode::Energy,
            &config,
            &config.mlp_factory(),
            |_| events += 1,
        )
        .unwrap();
        assert_eq!(events, 120);
        assert_eq!(store.len(), 120);
        assert_eq!(store.stage_count(), 3);
        assert_eq!(ensemble.stages(), 3);
        assert_eq!(ensemble.window(), 2);

        // A greedy rollout of the learned policy captures the 200 EUR
        // spread; the only possible day totals are 0 and 200.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, ret) = run_episode(
            &day,
            &cal,
            &battery(),
            SettlementMode::Energy,
            &ensemble,
            config.window,
            0.0,
            &mut rng,
        )
        .unwrap();
        assert!(ret > 100.0, "greedy policy earned {ret}");
    }

    #[test]
    fn schedule_counts_and_tags_follow_the_contract() {
        let cal = calendar();
        let d0 = day();
        let mut d1 = day();
        d1.day = "2018-01-06".into();
        let config = TrainConfig {
            episodes_per_day: 2,
            refit_every: 3,
            window: 1,
            buffer_capacity: 16,
            seed: 5,
            ..TrainConfig::default()
        };
        let mut seen = Vec::new();
        let (_, store) = train(
            &[d0, d1],
            &cal,
            &battery(),
            SettlementMode::Energy,
            &config,
            &table_factory(),
            |ev| seen.push(ev.clone()),
        )
        .unwrap();
        assert_eq!(store.len(), 4);
        let episodes: Vec<usize> = store.iter().map(|tr| tr.tag.episode).collect();
        assert_eq!(episodes, vec![0, 1, 2, 3]);
        assert!(store.iter().all(|tr| tr.steps.len() == 3));
        assert!(store.iter().all(|tr| tr.tag.actor_seed == actor_seed(5, 0)));
        assert_eq!(seen.len(), 4);
        assert!(seen.iter().all(|ev| ev.actor == 0));
        // ε anneals along the actor's own episode count.
        let e0 = seen[0].epsilon;
        assert!((seen[1].epsilon - e0 * (-config.epsilon_decay).exp()).abs() < 1e-12);

        // Every trajectory replays to the same return it was recorded with.
        for (tr, ev) in store.iter().zip(&seen) {
            let total: f64 = tr.steps.iter().map(|q| q.reward_eur).sum();
            assert!((total - ev.return_eur).abs() < 1e-9);
        }
    }

    #[test]
    fn run_episode_emits_one_quadruple_per_step() {
        let cal = calendar();
        let d = day();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (quads, ret) = run_episode(
            &d,
            &cal,
            &battery(),
            SettlementMode::Energy,
            &QEnsemble::untrained(),
            2,
            0.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(quads.len(), 3);
        assert!((ret - 200.0).abs() < 1e-9, "greedy-on-ties trades immediately, got {ret}");
        let width = crate::features::StepObservation::width(cal.slots()) * 2;
        for (t, q) in quads.iter().enumerate() {
            assert_eq!(q.t, t);
            assert_eq!(q.z.values.len(), width);
            assert_eq!(q.z_next.values.len(), width);
        }
        assert_eq!(quads[0].action, Action::Trade);
        assert!((quads[0].reward_eur - 200.0).abs() < 1e-9);
        // The successor state of each step is the state of the next.
        for pair in quads.windows(2) {
            assert_eq!(pair[0].z_next.values, pair[1].z.values);
        }
        // Replays are consistent with the episode driver.
        let mut ep = Episode::new(&d, &cal, battery(), SettlementMode::Energy).unwrap();
        ep.observe().unwrap();
        let direct = ep.act(Action::Trade).unwrap();
        assert!((direct.reward_eur - quads[0].reward_eur).abs() < 1e-12);
    }
}
