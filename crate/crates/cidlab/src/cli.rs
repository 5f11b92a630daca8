//! Command-line surface.
//!
//! Five subcommands cover the full workflow: `gen-data` writes a synthetic
//! corpus, `train` fits a policy and saves a checkpoint, `backtest` scores
//! it against the rolling-intrinsic benchmark over a day set, `report`
//! re-renders saved return CSVs, and `simulate` replays one day under one
//! policy.
//!
//! Every subcommand accepts `--config FILE` with plain `key=value` lines;
//! explicit flags override file values, and the data directory additionally
//! falls back to the `CIDLAB_DATA` environment variable.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use crate::backtest::{
    average_runs, histogram_data, parse_returns_csv, render_table, report, report_csv,
    returns_csv, run_policy, BacktestError, DailyReturn, Policy,
};
use crate::config::Settings;
use crate::data::split::split_days;
use crate::data::synthetic::{synth_generate, SyntheticConfig};
use crate::data::{load_day, save_day, DayRecord};
use crate::fitted_q::{
    actor_seed, load_checkpoint, save_checkpoint, Regressor, TabularRegressor, TrainConfig,
};
use crate::market::{MarketCalendar, SettlementMode};
use crate::runtime::{progress_line, run, RuntimeConfig};
use crate::storage::StorageParams;

/// Environment fallback for the data directory.
pub const DATA_ROOT_ENV: &str = "CIDLAB_DATA";

#[derive(Parser)]
#[command(
    name = "cidlab",
    about = "Continuous intraday market laboratory for storage trading",
    version
)]
pub struct Cli {
    /// Plain-text key=value configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a directory of synthetic day files.
    #[command(name = "gen-data")]
    GenData {
        /// Number of consecutive days to generate.
        #[arg(long)]
        days: Option<usize>,
        /// Generator seed; the same seed reproduces the corpus exactly.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, one CSV per day.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a policy on recorded days and save its checkpoint.
    Train {
        /// Directory of day CSV files.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Training fraction of the corpus; the rest is held out.
        #[arg(long)]
        split: Option<f64>,
        /// Episodes generated per training day.
        #[arg(long)]
        episodes: Option<usize>,
        /// Fixed initial exploration rate for every actor.
        #[arg(long)]
        ep: Option<f64>,
        /// Actor threads generating trajectories.
        #[arg(long)]
        actors: Option<usize>,
        /// Master seed for day draws, exploration, and fitting.
        #[arg(long)]
        seed: Option<u64>,
        /// Checkpoint path to write.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Train this many policies with derived seeds; policy k >= 2 is
        /// saved next to the first as MODEL.k.
        #[arg(long)]
        repeat: Option<usize>,
    },
    /// Score a trained policy against the rolling-intrinsic benchmark.
    Backtest {
        /// Directory of day CSV files.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Checkpoint written by `train`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Report path; siblings .csv, .fq.csv, .ri.csv and .hist.dat are
        /// written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate this many checkpoints (MODEL, MODEL.2, ...) and report
        /// per-day mean returns.
        #[arg(long)]
        repeat: Option<usize>,
    },
    /// Render the comparison table from two saved return CSVs.
    Report {
        /// Fitted-policy returns CSV.
        #[arg(long)]
        fq: Option<PathBuf>,
        /// Benchmark returns CSV.
        #[arg(long)]
        ri: Option<PathBuf>,
    },
    /// Replay one day file under one policy.
    Simulate {
        /// Day CSV file.
        #[arg(long)]
        day: Option<PathBuf>,
        /// One of `ri`, `idle`, or `model:PATH`.
        #[arg(long)]
        policy: Option<String>,
    },
}

/// Parses the process arguments, runs the command, and reports errors on
/// stderr.
pub fn run_from_env() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let ctx = Ctx { settings };
    match cli.command {
        Command::GenData { days, seed, out } => gen_data(&ctx, days, seed, out),
        Command::Train { data, split, episodes, ep, actors, seed, out, repeat } => {
            train_cmd(&ctx, data, split, episodes, ep, actors, seed, out, repeat)
        }
        Command::Backtest { data, model, out, repeat } => {
            backtest_cmd(&ctx, data, model, out, repeat)
        }
        Command::Report { fq, ri } => report_cmd(&ctx, fq, ri),
        Command::Simulate { day, policy } => simulate_cmd(&ctx, day, policy),
    }
}

struct Ctx {
    settings: Settings,
}

impl Ctx {
    /// Calendar preset: `evening` (default), `full`, or `custom` built from
    /// the slots/slot_minutes/trading_start_min/decision_steps keys.
    fn calendar(&self) -> Result<MarketCalendar> {
        match self.settings.get("calendar").unwrap_or("evening") {
            "evening" => Ok(MarketCalendar::evening_session()),
            "full" => Ok(MarketCalendar::full_day()),
            "custom" => {
                let need = |key: &str| {
                    self.settings
                        .lookup::<i64>(key)?
                        .ok_or_else(|| anyhow!("calendar=custom requires the {key} key"))
                };
                let slots = need("slots")? as usize;
                let slot_minutes = need("slot_minutes")?;
                let trading_start = need("trading_start_min")?;
                let decision_steps = need("decision_steps")? as usize;
                let first_delivery = self.settings.lookup_or("first_delivery_min", 1440i64)?;
                let step_min = self.settings.lookup_or("step_min", 15i64)?;
                MarketCalendar::new(
                    first_delivery,
                    slots,
                    slot_minutes,
                    trading_start,
                    step_min,
                    decision_steps,
                )
                .map_err(|e| anyhow!("invalid custom calendar: {e}"))
            }
            other => bail!("calendar must be evening, full, or custom, got {other:?}"),
        }
    }

    fn storage(&self) -> Result<StorageParams> {
        let s = &self.settings;
        let params = StorageParams {
            soc_min_mwh: s.lookup_or("soc_min_mwh", 0.0)?,
            soc_max_mwh: s.lookup_or("soc_max_mwh", 10.0)?,
            soc_init_mwh: s.lookup_or("soc_init_mwh", 0.0)?,
            soc_term_mwh: s.lookup_or("soc_term_mwh", 0.0)?,
            charge_min_mw: s.lookup_or("charge_min_mw", 0.0)?,
            charge_max_mw: s.lookup_or("charge_max_mw", 10.0)?,
            discharge_min_mw: s.lookup_or("discharge_min_mw", 0.0)?,
            discharge_max_mw: s.lookup_or("discharge_max_mw", 10.0)?,
            efficiency: s.lookup_or("efficiency", 1.0)?,
        };
        params.validate().map_err(|e| anyhow!("invalid storage parameters: {e}"))?;
        Ok(params)
    }

    fn settlement(&self) -> Result<SettlementMode> {
        match self.settings.get("settlement").unwrap_or("energy") {
            "energy" => Ok(SettlementMode::Energy),
            "power" => Ok(SettlementMode::Power),
            other => bail!("settlement must be energy or power, got {other:?}"),
        }
    }

    fn synthetic(&self) -> Result<SyntheticConfig> {
        let s = &self.settings;
        let base = SyntheticConfig::default();
        Ok(SyntheticConfig {
            mid_mean_eur: s.lookup_or("mid_mean_eur", base.mid_mean_eur)?,
            mid_reversion: s.lookup_or("mid_reversion", base.mid_reversion)?,
            mid_volatility: s.lookup_or("mid_volatility", base.mid_volatility)?,
            spread_min_eur: s.lookup_or("spread_min_eur", base.spread_min_eur)?,
            spread_max_eur: s.lookup_or("spread_max_eur", base.spread_max_eur)?,
            price_jitter_eur: s.lookup_or("price_jitter_eur", base.price_jitter_eur)?,
            slot_shape_eur: s.lookup_or("slot_shape_eur", base.slot_shape_eur)?,
            volume_min_mw: s.lookup_or("volume_min_mw", base.volume_min_mw)?,
            volume_max_mw: s.lookup_or("volume_max_mw", base.volume_max_mw)?,
            orders_per_step: s.lookup_or("orders_per_step", base.orders_per_step)?,
            arbitrage_prob: s.lookup_or("arbitrage_prob", base.arbitrage_prob)?,
            arbitrage_gap_eur: s.lookup_or("arbitrage_gap_eur", base.arbitrage_gap_eur)?,
            start_day: s.get("start_day").unwrap_or(&base.start_day).to_string(),
        })
    }

    fn train_config(
        &self,
        episodes: Option<usize>,
        ep: Option<f64>,
        seed: Option<u64>,
    ) -> Result<TrainConfig> {
        let s = &self.settings;
        let base = TrainConfig::default();
        let epsilon0_range = match ep.map(Ok).unwrap_or_else(|| s.lookup_or("ep", -1.0))? {
            e if e >= 0.0 => (e, e),
            _ => (
                s.lookup_or("epsilon0_lo", base.epsilon0_range.0)?,
                s.lookup_or("epsilon0_hi", base.epsilon0_range.1)?,
            ),
        };
        let config = TrainConfig {
            episodes_per_day: episodes
                .map(Ok)
                .unwrap_or_else(|| s.lookup_or("episodes", base.episodes_per_day))?,
            refit_every: s.lookup_or("refit_every", base.refit_every)?,
            epsilon0_range,
            epsilon_decay: s.lookup_or("epsilon_decay", base.epsilon_decay)?,
            window: s.lookup_or("window", base.window)?,
            buffer_capacity: s.lookup_or("buffer", base.buffer_capacity)?,
            hidden: s.lookup_or("hidden", base.hidden)?,
            epochs: s.lookup_or("epochs", base.epochs)?,
            learning_rate: s.lookup_or("learning_rate", base.learning_rate)?,
            batch: s.lookup_or("batch", base.batch)?,
            seed: seed.map(Ok).unwrap_or_else(|| s.lookup_or("seed", base.seed))?,
        };
        config.validate().map_err(|e| anyhow!("invalid training config: {e}"))?;
        Ok(config)
    }

    fn runtime_config(&self, actors: Option<usize>) -> Result<RuntimeConfig> {
        let s = &self.settings;
        let base = RuntimeConfig::default();
        let config = RuntimeConfig {
            actors: actors.map(Ok).unwrap_or_else(|| s.lookup_or("actors", base.actors))?,
            local_buffer: s.lookup_or("local_buffer", base.local_buffer)?,
            global_capacity: None,
            publish_every: s.lookup_or("publish_every", base.publish_every)?,
            deterministic: s.flag("deterministic", false)?,
            seeds: None,
        };
        config.validate().map_err(|e| anyhow!("invalid runtime config: {e}"))?;
        Ok(config)
    }

    /// Regressor family for training: `mlp` (default) or `table`.
    fn factory(
        &self,
        config: &TrainConfig,
    ) -> Result<Box<dyn Fn(usize, usize) -> Box<dyn Regressor> + Send + Sync>> {
        match self.settings.get("regressor").unwrap_or("mlp") {
            "mlp" => Ok(Box::new(config.mlp_factory())),
            "table" => Ok(Box::new(|_: usize, _: usize| {
                Box::new(TabularRegressor::new()) as Box<dyn Regressor>
            })),
            other => bail!("regressor must be mlp or table, got {other:?}"),
        }
    }

    /// Data directory: flag, then config key `data`, then `CIDLAB_DATA`.
    fn data_dir(&self, flag: Option<PathBuf>) -> Result<PathBuf> {
        if let Some(dir) = flag {
            return Ok(dir);
        }
        if let Some(dir) = self.settings.get("data") {
            return Ok(PathBuf::from(dir));
        }
        if let Some(dir) = std::env::var_os(DATA_ROOT_ENV) {
            return Ok(PathBuf::from(dir));
        }
        bail!("no data directory: pass --data, set data= in the config, or set {DATA_ROOT_ENV}")
    }

    fn required<T>(&self, flag: Option<T>, key: &'static str) -> Result<T>
    where
        T: From<String>,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.settings.get(key) {
            Some(raw) => Ok(T::from(raw.to_string())),
            None => bail!("missing --{key} (or {key}= in the config file)"),
        }
    }
}

fn load_days(dir: &Path, calendar: &MarketCalendar) -> Result<Vec<DayRecord>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read data directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no day files (*.csv) in {}", dir.display());
    }
    let mut days = Vec::with_capacity(paths.len());
    for path in paths {
        let record =
            load_day(&path).with_context(|| format!("cannot load {}", path.display()))?;
        record
            .validate(calendar)
            .with_context(|| format!("{} does not fit the calendar", path.display()))?;
        days.push(record);
    }
    Ok(days)
}

/// Splits the corpus the same way `train` and `backtest` must agree on:
/// a missing or out-of-range fraction keeps every day on both sides' input.
fn split_side(
    days: Vec<DayRecord>,
    fraction: Option<f64>,
    seed: u64,
    test_side: bool,
) -> Result<Vec<DayRecord>> {
    match fraction {
        Some(f) if f > 0.0 && f < 1.0 && days.len() >= 2 => {
            let (train, test) = split_days(days, f, seed)?;
            Ok(if test_side { test } else { train })
        }
        _ => Ok(days),
    }
}

fn gen_data(
    ctx: &Ctx,
    days: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<()> {
    let calendar = ctx.calendar()?;
    let config = ctx.synthetic()?;
    let days = days.map(Ok).unwrap_or_else(|| ctx.settings.lookup_or("days", 50usize))?;
    let seed = seed.map(Ok).unwrap_or_else(|| ctx.settings.lookup_or("seed", 1u64))?;
    let out: PathBuf = ctx.required(out, "out")?;
    if days == 0 {
        bail!("--days must be at least 1");
    }
    let records = synth_generate(&config, &calendar, days, seed)?;
    std::fs::create_dir_all(&out)
        .with_context(|| format!("cannot create {}", out.display()))?;
    for record in &records {
        let path = out.join(format!("{}.csv", record.day));
        save_day(record, &path).with_context(|| format!("cannot write {}", path.display()))?;
    }
    println!(
        "wrote {} day files to {} ({} to {})",
        records.len(),
        out.display(),
        records.first().map(|r| r.day.as_str()).unwrap_or("-"),
        records.last().map(|r| r.day.as_str()).unwrap_or("-"),
    );
    Ok(())
}

/// Checkpoint path for repetition `i`: the base path itself, then
/// `BASE.2`, `BASE.3`, ...
fn model_path_for(base: &Path, i: usize) -> PathBuf {
    if i == 0 {
        base.to_path_buf()
    } else {
        PathBuf::from(format!("{}.{}", base.display(), i + 1))
    }
}

/// Master seed for repetition `i`; the first repetition keeps the seed the
/// user asked for.
fn repeat_seed(master: u64, i: usize) -> u64 {
    if i == 0 {
        master
    } else {
        actor_seed(master, i)
    }
}

#[allow(clippy::too_many_arguments)]
fn train_cmd(
    ctx: &Ctx,
    data: Option<PathBuf>,
    split: Option<f64>,
    episodes: Option<usize>,
    ep: Option<f64>,
    actors: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    repeat: Option<usize>,
) -> Result<()> {
    let calendar = ctx.calendar()?;
    let params = ctx.storage()?;
    let mode = ctx.settlement()?;
    let out: PathBuf = ctx.required(out, "out")?;
    let base_config = ctx.train_config(episodes, ep, seed)?;
    let runtime = ctx.runtime_config(actors)?;
    let repeat = repeat.map(Ok).unwrap_or_else(|| ctx.settings.lookup_or("repeat", 1usize))?;
    if repeat == 0 {
        bail!("--repeat must be at least 1");
    }

    let dir = ctx.data_dir(data)?;
    let all_days = load_days(&dir, &calendar)?;
    let split = match split {
        Some(f) => Some(f),
        None => ctx.settings.lookup("split")?,
    };
    let train_days = split_side(all_days, split, base_config.seed, false)?;
    println!(
        "training on {} day(s), {} episodes per day, {} actor(s)",
        train_days.len(),
        base_config.episodes_per_day,
        runtime.effective_actors()
    );

    for i in 0..repeat {
        let config = TrainConfig { seed: repeat_seed(base_config.seed, i), ..base_config.clone() };
        let factory = ctx.factory(&config)?;
        let outcome = run(
            &train_days,
            &calendar,
            &params,
            mode,
            &config,
            &runtime,
            factory.as_ref(),
            |ev| println!("{}", progress_line(ev)),
        )?;
        let path = model_path_for(&out, i);
        save_checkpoint(&path, &outcome.ensemble)
            .with_context(|| format!("cannot write {}", path.display()))?;
        println!(
            "saved model to {} ({} trajectories stored, {} interim refit(s))",
            path.display(),
            outcome.store.len(),
            outcome.interim_refits
        );
    }
    Ok(())
}

/// Evaluates one policy over every day, days spread across worker threads;
/// the model is only read.
fn day_returns<'a>(
    days: &[DayRecord],
    calendar: &MarketCalendar,
    params: &StorageParams,
    mode: SettlementMode,
    make_policy: &(dyn Fn() -> Policy<'a> + Sync),
) -> Result<Vec<DailyReturn>, BacktestError> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<DailyReturn>>> = Mutex::new(vec![None; days.len()]);
    let failure: Mutex<Option<BacktestError>> = Mutex::new(None);
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(days.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= days.len() || failure.lock().unwrap().is_some() {
                    break;
                }
                match run_policy(&days[i], calendar, params, mode, &make_policy()) {
                    Ok(ret) => results.lock().unwrap()[i] = Some(ret),
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        break;
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(results.into_inner().unwrap().into_iter().map(|r| r.unwrap()).collect())
}

fn backtest_cmd(
    ctx: &Ctx,
    data: Option<PathBuf>,
    model: Option<PathBuf>,
    out: Option<PathBuf>,
    repeat: Option<usize>,
) -> Result<()> {
    let calendar = ctx.calendar()?;
    let params = ctx.storage()?;
    let mode = ctx.settlement()?;
    let model: PathBuf = ctx.required(model, "model")?;
    let out: PathBuf = ctx.required(out, "out")?;
    let repeat = repeat.map(Ok).unwrap_or_else(|| ctx.settings.lookup_or("repeat", 1usize))?;
    if repeat == 0 {
        bail!("--repeat must be at least 1");
    }

    let dir = ctx.data_dir(data)?;
    let all_days = load_days(&dir, &calendar)?;
    // With split and seed in the shared config file, the backtest scores
    // exactly the days `train` held out.
    let split = ctx.settings.lookup("split")?;
    let seed = ctx.settings.lookup_or("seed", TrainConfig::default().seed)?;
    let days = split_side(all_days, split, seed, true)?;
    println!("scoring {} day(s) from {}", days.len(), dir.display());

    let mut fq_runs: Vec<Vec<DailyReturn>> = Vec::with_capacity(repeat);
    for i in 0..repeat {
        let path = model_path_for(&model, i);
        let ensemble = load_checkpoint(&path)
            .map_err(|e| anyhow!("cannot load checkpoint {}: {e}", path.display()))?;
        fq_runs.push(day_returns(&days, &calendar, &params, mode, &|| {
            Policy::Greedy(&ensemble)
        })?);
    }
    let fq = average_runs(&fq_runs)?;
    let ri = day_returns(&days, &calendar, &params, mode, &|| Policy::RollingIntrinsic)?;

    let rep = report(&fq, &ri, mode)?;
    let table = render_table(&rep);
    print!("{table}");

    let write = |path: &Path, text: &str| {
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
    };
    write(&out, &table)?;
    write(&sibling(&out, "csv"), &report_csv(&rep))?;
    write(&sibling(&out, "fq.csv"), &returns_csv(&fq))?;
    write(&sibling(&out, "ri.csv"), &returns_csv(&ri))?;
    let bin = ctx.settings.lookup_or("hist_bin_pct", 1.0)?;
    write(&sibling(&out, "hist.dat"), &histogram_data(&rep, bin))?;
    println!("report written to {} (+ .csv, .fq.csv, .ri.csv, .hist.dat)", out.display());
    Ok(())
}

fn sibling(base: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{}", base.display(), suffix))
}

fn report_cmd(ctx: &Ctx, fq: Option<PathBuf>, ri: Option<PathBuf>) -> Result<()> {
    let fq_path: PathBuf = ctx.required(fq, "fq")?;
    let ri_path: PathBuf = ctx.required(ri, "ri")?;
    let mode = ctx.settlement()?;
    let read = |path: &Path| -> Result<Vec<DailyReturn>> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Ok(parse_returns_csv(&text)?)
    };
    let rep = report(&read(&fq_path)?, &read(&ri_path)?, mode)?;
    print!("{}", render_table(&rep));
    Ok(())
}

enum PolicySpec {
    Ri,
    Idle,
    Model(PathBuf),
}

fn parse_policy_spec(raw: &str) -> Result<PolicySpec> {
    match raw {
        "ri" => Ok(PolicySpec::Ri),
        "idle" => Ok(PolicySpec::Idle),
        _ => match raw.strip_prefix("model:") {
            Some(path) if !path.is_empty() => Ok(PolicySpec::Model(PathBuf::from(path))),
            _ => bail!("policy must be ri, idle, or model:PATH, got {raw:?}"),
        },
    }
}

fn simulate_cmd(ctx: &Ctx, day: Option<PathBuf>, policy: Option<String>) -> Result<()> {
    let calendar = ctx.calendar()?;
    let params = ctx.storage()?;
    let mode = ctx.settlement()?;
    let day_path: PathBuf = ctx.required(day, "day")?;
    let raw_policy = ctx.required(policy, "policy")?;
    let spec = parse_policy_spec(&raw_policy)?;

    let record = load_day(&day_path)
        .with_context(|| format!("cannot load {}", day_path.display()))?;
    record
        .validate(&calendar)
        .with_context(|| format!("{} does not fit the calendar", day_path.display()))?;

    let ensemble;
    let policy = match spec {
        PolicySpec::Ri => Policy::RollingIntrinsic,
        PolicySpec::Idle => Policy::AlwaysIdle,
        PolicySpec::Model(path) => {
            ensemble = load_checkpoint(&path)
                .map_err(|e| anyhow!("cannot load checkpoint {}: {e}", path.display()))?;
            Policy::Greedy(&ensemble)
        }
    };
    let ret = run_policy(&record, &calendar, &params, mode, &policy)?;
    println!("day={} policy={} return={:.2}", ret.day, ret.policy, ret.total_eur);
    Ok(())
}
