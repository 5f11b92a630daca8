//! Pluggable per-stage value regressors.

use std::collections::BTreeMap;

use super::checkpoint::{put_f64, put_u32, put_u64, CheckpointError, Reader};
use super::TrainError;
use crate::episode::Action;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A two-output value model: `fit` sees one scored action per sample and
/// must leave the other output untouched by the loss; `predict` reports
/// both action values for a single input row.
pub trait Regressor: Send + Sync {
    fn fit(
        &mut self,
        inputs: &[Vec<f64>],
        actions: &[Action],
        targets: &[f64],
        seed: u64,
    ) -> Result<(), TrainError>;

    /// Values indexed `[Idle, Trade]`.
    fn predict(&self, input: &[f64]) -> [f64; 2];

    fn kind(&self) -> RegressorKind;

    /// Appends the fitted parameters in the checkpoint encoding.
    fn write_params(&self, out: &mut Vec<u8>);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressorKind {
    Mlp,
    Table,
}

impl RegressorKind {
    pub(crate) fn tag(self) -> u8 {
        match self {
            RegressorKind::Mlp => 1,
            RegressorKind::Table => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<RegressorKind> {
        match tag {
            1 => Some(RegressorKind::Mlp),
            2 => Some(RegressorKind::Table),
            _ => None,
        }
    }
}

pub(crate) fn load_regressor(
    kind: RegressorKind,
    params: &[u8],
) -> Result<Box<dyn Regressor>, CheckpointError> {
    Ok(match kind {
        RegressorKind::Mlp => Box::new(MlpRegressor::from_params(params)?),
        RegressorKind::Table => Box::new(TabularRegressor::from_params(params)?),
    })
}

/// Feedforward network with two rectified hidden layers and one linear
/// output per action, trained by mini-batch gradient descent on a squared
/// loss over the taken action's output. Initialization and the epoch
/// shuffles derive from the fit seed, so identical data and seed reproduce
/// identical parameters.
pub struct MlpRegressor {
    hidden: usize,
    epochs: usize,
    learning_rate: f64,
    batch: usize,
    input_width: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w3: Vec<f64>,
    b3: Vec<f64>,
    trained: bool,
}

/// Epochs without meaningful improvement before training stops early.
const PLATEAU_PATIENCE: usize = 15;

impl MlpRegressor {
    pub fn new(hidden: usize, epochs: usize, learning_rate: f64, batch: usize) -> MlpRegressor {
        MlpRegressor {
            hidden,
            epochs,
            learning_rate,
            batch: batch.max(1),
            input_width: 0,
            w1: Vec::new(),
            b1: Vec::new(),
            w2: Vec::new(),
            b2: Vec::new(),
            w3: Vec::new(),
            b3: Vec::new(),
            trained: false,
        }
    }

    fn init_weights(&mut self, width: usize, rng: &mut ChaCha8Rng) {
        let h = self.hidden;
        let lim1 = (6.0 / width as f64).sqrt();
        let lim2 = (6.0 / h as f64).sqrt();
        self.input_width = width;
        self.w1 = (0..h * width).map(|_| rng.gen_range(-lim1..lim1)).collect();
        self.b1 = vec![0.0; h];
        self.w2 = (0..h * h).map(|_| rng.gen_range(-lim2..lim2)).collect();
        self.b2 = vec![0.0; h];
        self.w3 = (0..2 * h).map(|_| rng.gen_range(-lim2..lim2)).collect();
        self.b3 = vec![0.0; 2];
    }

    fn forward(&self, x: &[f64], a1: &mut [f64], a2: &mut [f64]) -> [f64; 2] {
        let h = self.hidden;
        for j in 0..h {
            let row = &self.w1[j * self.input_width..(j + 1) * self.input_width];
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[j];
            a1[j] = z.max(0.0);
        }
        for j in 0..h {
            let row = &self.w2[j * h..(j + 1) * h];
            let z: f64 = row.iter().zip(&*a1).map(|(w, v)| w * v).sum::<f64>() + self.b2[j];
            a2[j] = z.max(0.0);
        }
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.w3[k * h..(k + 1) * h];
            *o = row.iter().zip(&*a2).map(|(w, v)| w * v).sum::<f64>() + self.b3[k];
        }
        out
    }

    fn loss_over(
        &self,
        idx: &[usize],
        inputs: &[Vec<f64>],
        actions: &[Action],
        targets: &[f64],
        a1: &mut [f64],
        a2: &mut [f64],
    ) -> f64 {
        let mut sum = 0.0;
        for &i in idx {
            let out = self.forward(&inputs[i], a1, a2);
            let res = out[actions[i].index()] - targets[i];
            sum += res * res;
        }
        sum / idx.len().max(1) as f64
    }

    fn snapshot(&self) -> Vec<Vec<f64>> {
        vec![
            self.w1.clone(),
            self.b1.clone(),
            self.w2.clone(),
            self.b2.clone(),
            self.w3.clone(),
            self.b3.clone(),
        ]
    }

    fn restore(&mut self, snap: &[Vec<f64>]) {
        self.w1.copy_from_slice(&snap[0]);
        self.b1.copy_from_slice(&snap[1]);
        self.w2.copy_from_slice(&snap[2]);
        self.b2.copy_from_slice(&snap[3]);
        self.w3.copy_from_slice(&snap[4]);
        self.b3.copy_from_slice(&snap[5]);
    }

    fn from_params(bytes: &[u8]) -> Result<MlpRegressor, CheckpointError> {
        let mut r = Reader::new(bytes);
        let input_width = r.u32()? as usize;
        let hidden = r.u32()? as usize;
        let epochs = r.u32()? as usize;
        let batch = r.u32()? as usize;
        let learning_rate = r.f64()?;
        let read_vec = |r: &mut Reader, n: usize| -> Result<Vec<f64>, CheckpointError> {
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                v.push(r.f64()?);
            }
            Ok(v)
        };
        let w1 = read_vec(&mut r, hidden * input_width)?;
        let b1 = read_vec(&mut r, hidden)?;
        let w2 = read_vec(&mut r, hidden * hidden)?;
        let b2 = read_vec(&mut r, hidden)?;
        let w3 = read_vec(&mut r, 2 * hidden)?;
        let b3 = read_vec(&mut r, 2)?;
        Ok(MlpRegressor {
            hidden,
            epochs,
            learning_rate,
            batch,
            input_width,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            trained: true,
        })
    }
}

impl Regressor for MlpRegressor {
    fn fit(
        &mut self,
        inputs: &[Vec<f64>],
        actions: &[Action],
        targets: &[f64],
        seed: u64,
    ) -> Result<(), TrainError> {
        let n = inputs.len();
        if n == 0 || actions.len() != n || targets.len() != n {
            return Err(TrainError::BadConfig(format!(
                "regressor fed {n} inputs, {} actions, {} targets",
                actions.len(),
                targets.len()
            )));
        }
        let width = inputs[0].len();
        if width == 0 || inputs.iter().any(|row| row.len() != width) {
            return Err(TrainError::BadConfig("ragged or empty input rows".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.init_weights(width, &mut rng);
        let h = self.hidden;

        // Every tenth sample is held out to detect the loss plateau; tiny
        // datasets train on everything and plateau on the training loss.
        let (train_idx, eval_idx): (Vec<usize>, Vec<usize>) = if n >= 20 {
            (0..n).partition(|i| i % 10 != 9)
        } else {
            ((0..n).collect(), (0..n).collect())
        };

        let mut a1 = vec![0.0; h];
        let mut a2 = vec![0.0; h];
        let mut dz1 = vec![0.0; h];
        let mut dz2 = vec![0.0; h];
        let mut gw1 = vec![0.0; h * width];
        let mut gb1 = vec![0.0; h];
        let mut gw2 = vec![0.0; h * h];
        let mut gb2 = vec![0.0; h];
        let mut gw3 = vec![0.0; 2 * h];
        let mut gb3 = vec![0.0; 2];

        let mut order = train_idx.clone();
        let mut best_loss = f64::INFINITY;
        let mut best = self.snapshot();
        let mut patience = PLATEAU_PATIENCE;

        for _epoch in 0..self.epochs {
            // Fisher-Yates reshuffle of the training order.
            for i in (1..order.len()).rev() {
                order.swap(i, rng.gen_range(0..=i));
            }
            for chunk in order.chunks(self.batch) {
                gw1.fill(0.0);
                gb1.fill(0.0);
                gw2.fill(0.0);
                gb2.fill(0.0);
                gw3.fill(0.0);
                gb3.fill(0.0);
                for &i in chunk {
                    let x = &inputs[i];
                    let out = self.forward(x, &mut a1, &mut a2);
                    let ai = actions[i].index();
                    let dout = 2.0 * (out[ai] - targets[i]);
                    for j in 0..h {
                        gw3[ai * h + j] += dout * a2[j];
                        dz2[j] = if a2[j] > 0.0 { dout * self.w3[ai * h + j] } else { 0.0 };
                    }
                    gb3[ai] += dout;
                    for j in 0..h {
                        if dz2[j] != 0.0 {
                            let grow = &mut gw2[j * h..(j + 1) * h];
                            for (g, v) in grow.iter_mut().zip(&a1) {
                                *g += dz2[j] * v;
                            }
                            gb2[j] += dz2[j];
                        }
                    }
                    for j in 0..h {
                        if a1[j] <= 0.0 {
                            dz1[j] = 0.0;
                            continue;
                        }
                        let mut s = 0.0;
                        for k in 0..h {
                            s += dz2[k] * self.w2[k * h + j];
                        }
                        dz1[j] = s;
                    }
                    for j in 0..h {
                        if dz1[j] != 0.0 {
                            let grow = &mut gw1[j * width..(j + 1) * width];
                            for (g, v) in grow.iter_mut().zip(x) {
                                *g += dz1[j] * v;
                            }
                            gb1[j] += dz1[j];
                        }
                    }
                }
                let step = self.learning_rate / chunk.len() as f64;
                for (w, g) in self.w1.iter_mut().zip(&gw1) {
                    *w -= step * g;
                }
                for (w, g) in self.b1.iter_mut().zip(&gb1) {
                    *w -= step * g;
                }
                for (w, g) in self.w2.iter_mut().zip(&gw2) {
                    *w -= step * g;
                }
                for (w, g) in self.b2.iter_mut().zip(&gb2) {
                    *w -= step * g;
                }
                for (w, g) in self.w3.iter_mut().zip(&gw3) {
                    *w -= step * g;
                }
                for (w, g) in self.b3.iter_mut().zip(&gb3) {
                    *w -= step * g;
                }
            }
            let loss = self.loss_over(&eval_idx, inputs, actions, targets, &mut a1, &mut a2);
            if loss < best_loss {
                // A meaningful improvement resets the plateau countdown; a
                // marginal new best keeps the weights without consuming
                // patience, so noisy mini-batch descent is not cut short.
                let meaningful = best_loss.is_infinite() || loss < best_loss * (1.0 - 1e-5);
                best_loss = loss;
                best = self.snapshot();
                if meaningful {
                    patience = PLATEAU_PATIENCE;
                }
            } else {
                patience -= 1;
                if patience == 0 {
                    break;
                }
            }
        }
        self.restore(&best);
        self.trained = true;
        Ok(())
    }

    fn predict(&self, input: &[f64]) -> [f64; 2] {
        assert!(self.trained, "predict called before fit");
        assert_eq!(input.len(), self.input_width, "input width mismatch");
        let mut a1 = vec![0.0; self.hidden];
        let mut a2 = vec![0.0; self.hidden];
        self.forward(input, &mut a1, &mut a2)
    }

    fn kind(&self) -> RegressorKind {
        RegressorKind::Mlp
    }

    fn write_params(&self, out: &mut Vec<u8>) {
        put_u32(out, self.input_width as u32);
        put_u32(out, self.hidden as u32);
        put_u32(out, self.epochs as u32);
        put_u32(out, self.batch as u32);
        put_f64(out, self.learning_rate);
        for v in [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3] {
            for &w in v {
                put_f64(out, w);
            }
        }
    }
}

/// Exact lookup table keyed on the input bit pattern, predicting the mean
/// fitted target per action and zero for anything unseen. The least-squares
/// optimum over a finite input set, which makes backward fitting coincide
/// with exact dynamic programming on enumerable toy problems.
#[derive(Default)]
pub struct TabularRegressor {
    table: BTreeMap<Vec<u64>, [(f64, u64); 2]>,
}

impl TabularRegressor {
    pub fn new() -> TabularRegressor {
        TabularRegressor::default()
    }

    fn key(input: &[f64]) -> Vec<u64> {
        input.iter().map(|v| v.to_bits()).collect()
    }

    fn from_params(bytes: &[u8]) -> Result<TabularRegressor, CheckpointError> {
        let mut r = Reader::new(bytes);
        let entries = r.u64()? as usize;
        let mut table = BTreeMap::new();
        for _ in 0..entries {
            let klen = r.u64()? as usize;
            let mut key = Vec::with_capacity(klen);
            for _ in 0..klen {
                key.push(r.u64()?);
            }
            let mut cells = [(0.0, 0u64); 2];
            for cell in &mut cells {
                cell.0 = r.f64()?;
                cell.1 = r.u64()?;
            }
            table.insert(key, cells);
        }
        Ok(TabularRegressor { table })
    }
}

impl Regressor for TabularRegressor {
    fn fit(
        &mut self,
        inputs: &[Vec<f64>],
        actions: &[Action],
        targets: &[f64],
        _seed: u64,
    ) -> Result<(), TrainError> {
        if inputs.is_empty() {
            return Err(TrainError::BadConfig("regressor fed no samples".into()));
        }
        self.table.clear();
        let mut sums: BTreeMap<Vec<u64>, [(f64, u64); 2]> = BTreeMap::new();
        for ((input, action), target) in inputs.iter().zip(actions).zip(targets) {
            let cell = &mut sums.entry(Self::key(input)).or_insert([(0.0, 0); 2])[action.index()];
            cell.0 += target;
            cell.1 += 1;
        }
        self.table = sums
            .into_iter()
            .map(|(k, cells)| {
                (
                    k,
                    cells.map(|(sum, n)| if n == 0 { (0.0, 0) } else { (sum / n as f64, n) }),
                )
            })
            .collect();
        Ok(())
    }

    fn predict(&self, input: &[f64]) -> [f64; 2] {
        match self.table.get(&Self::key(input)) {
            None => [0.0, 0.0],
            Some(cells) => [cells[0].0, cells[1].0],
        }
    }

    fn kind(&self) -> RegressorKind {
        RegressorKind::Table
    }

    fn write_params(&self, out: &mut Vec<u8>) {
        put_u64(out, self.table.len() as u64);
        for (key, cells) in &self.table {
            put_u64(out, key.len() as u64);
            for &k in key {
                put_u64(out, k);
            }
            for &(mean, n) in cells {
                put_f64(out, mean);
                put_u64(out, n);
            }
        }
    }
}
