//! Forecaster architectures, training, and exact input gradients.
//!
//! All architectures use smooth activations (tanh), so the input gradient of
//! the squared-error loss exists everywhere. Forward and backward passes are
//! written out by hand per architecture; the backward pass returns both the
//! gradient with respect to the window entries (used by attacks) and with
//! respect to the parameters (used by training) in one sweep.

use super::{squared_error, FeatureWindow, ForecastError, Normalizer, FEATURE_COUNT};
use crate::mat::Mat;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Forecaster architecture. Hidden sizes are part of the descriptor so a
/// serialized model is self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Affine map over the flattened window.
    Linear,
    /// One tanh hidden layer over the flattened window.
    Mlp { hidden: usize },
    /// A single tanh recurrent cell run across the window rows.
    Recurrent { hidden: usize },
}

impl Architecture {
    pub fn param_count(&self, h: usize) -> usize {
        let d = h * FEATURE_COUNT;
        match *self {
            Architecture::Linear => d + 1,
            Architecture::Mlp { hidden } => hidden * d + hidden + hidden + 1,
            Architecture::Recurrent { hidden } => {
                hidden * FEATURE_COUNT + hidden * hidden + hidden + hidden + 1
            }
        }
    }

    fn init(&self, h: usize, rng: &mut StdRng) -> Vec<f64> {
        let fan_in = match *self {
            Architecture::Linear => h * FEATURE_COUNT,
            Architecture::Mlp { .. } => h * FEATURE_COUNT,
            Architecture::Recurrent { hidden } => FEATURE_COUNT + hidden,
        };
        let scale = 1.0 / (fan_in as f64).sqrt();
        (0..self.param_count(h))
            .map(|_| rng.gen_range(-scale..scale))
            .collect()
    }
}

/// Trained forecaster: architecture descriptor, flat parameter vector, and
/// the normalization statistics it was fitted with.
#[derive(Debug, Clone)]
pub struct ForecastModel {
    pub architecture: Architecture,
    pub h: usize,
    pub theta: Vec<f64>,
    pub normalizer: Normalizer,
    /// `(epoch, mean squared training error)` pairs recorded during training.
    pub training_log: Vec<(usize, f64)>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    architecture: Architecture,
    #[serde(rename = "H")]
    h: usize,
    #[serde(rename = "J")]
    j: usize,
    norm_stats: Vec<(f64, f64)>,
    theta: Vec<f64>,
    seed: u64,
}

impl ForecastModel {
    fn check_shape(&self, window: &FeatureWindow) -> Result<(), ForecastError> {
        if window.values.rows() != self.h || window.values.cols() != FEATURE_COUNT {
            return Err(ForecastError::ShapeMismatch {
                expected_rows: self.h,
                expected_cols: FEATURE_COUNT,
                rows: window.values.rows(),
                cols: window.values.cols(),
            });
        }
        Ok(())
    }

    /// Deterministic scalar forecast in normalized units.
    pub fn predict(&self, window: &FeatureWindow) -> Result<f64, ForecastError> {
        self.check_shape(window)?;
        Ok(forward(self.architecture, &self.theta, &window.values))
    }

    /// Squared error of the forecast against `target`.
    pub fn loss(&self, window: &FeatureWindow, target: f64) -> Result<f64, ForecastError> {
        Ok(squared_error(self.predict(window)?, target))
    }

    /// Exact reverse-mode gradient of [`ForecastModel::loss`] with respect to
    /// every window entry.
    pub fn input_gradient(
        &self,
        window: &FeatureWindow,
        target: f64,
    ) -> Result<Mat, ForecastError> {
        self.check_shape(window)?;
        let (_, input_grad, _) =
            loss_gradients(self.architecture, &self.theta, &window.values, target);
        Ok(input_grad)
    }

    /// Forecast converted to physical kW via the model's own normalizer.
    pub fn predict_kw(&self, window: &FeatureWindow) -> Result<f64, ForecastError> {
        Ok(self.normalizer.load_kw(self.predict(window)?))
    }

    pub fn save(&self, path: &Path) -> Result<(), ForecastError> {
        let file = ModelFile {
            architecture: self.architecture,
            h: self.h,
            j: FEATURE_COUNT,
            norm_stats: self.normalizer.ranges.to_vec(),
            theta: self.theta.clone(),
            seed: self.seed,
        };
        let json = serde_json::to_string_pretty(&file)
            .map_err(|e| ForecastError::ModelFile(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ForecastError> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| ForecastError::ModelFile(e.to_string()))?;
        if file.j != FEATURE_COUNT {
            return Err(ForecastError::ModelFile(format!(
                "model expects J={}, toolkit uses J={FEATURE_COUNT}",
                file.j
            )));
        }
        if file.theta.len() != file.architecture.param_count(file.h) {
            return Err(ForecastError::ModelFile(format!(
                "theta has {} entries, architecture needs {}",
                file.theta.len(),
                file.architecture.param_count(file.h)
            )));
        }
        let mut ranges = [(0.0, 1.0); FEATURE_COUNT];
        if file.norm_stats.len() != FEATURE_COUNT {
            return Err(ForecastError::ModelFile("norm_stats must have 6 entries".into()));
        }
        ranges.copy_from_slice(&file.norm_stats);
        Ok(ForecastModel {
            architecture: file.architecture,
            h: file.h,
            theta: file.theta,
            normalizer: Normalizer { ranges },
            training_log: Vec::new(),
            seed: file.seed,
        })
    }
}

/// Training configuration. Full-batch gradient descent with a fixed step and
/// epoch budget; the seed fixes parameter initialization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Documented default step size per architecture, small enough that the
    /// full-batch loss is non-increasing on normalized desk-scale data.
    pub fn default_learning_rate(architecture: Architecture) -> f64 {
        match architecture {
            Architecture::Linear => 0.005,
            Architecture::Mlp { .. } => 0.02,
            Architecture::Recurrent { .. } => 0.01,
        }
    }

    pub fn new(architecture: Architecture, epochs: usize, seed: u64) -> Self {
        Self {
            architecture,
            learning_rate: Self::default_learning_rate(architecture),
            epochs,
            seed,
        }
    }
}

/// Fit a forecaster on normalized samples by full-batch gradient descent on
/// the mean squared error. The returned model carries the per-epoch loss log.
pub fn train(
    samples: &[super::ForecastSample],
    normalizer: &Normalizer,
    config: TrainConfig,
) -> Result<ForecastModel, ForecastError> {
    if samples.is_empty() {
        return Err(ForecastError::EmptyDataset);
    }
    let h = samples[0].window.values.rows();
    let mut rng = StdRng::seed_from_u64(config.seed);
    let mut theta = config.architecture.init(h, &mut rng);
    let n = samples.len() as f64;
    let mut training_log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut grad = vec![0.0; theta.len()];
        let mut total_loss = 0.0;
        for s in samples {
            let (loss, _, param_grad) =
                loss_gradients(config.architecture, &theta, &s.window.values, s.target);
            total_loss += loss;
            for (g, pg) in grad.iter_mut().zip(&param_grad) {
                *g += pg;
            }
        }
        let mse = total_loss / n;
        if !mse.is_finite() {
            return Err(ForecastError::DivergedTraining { epoch, loss: mse });
        }
        training_log.push((epoch, mse));
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= config.learning_rate * g / n;
        }
    }

    Ok(ForecastModel {
        architecture: config.architecture,
        h,
        theta,
        normalizer: normalizer.clone(),
        training_log,
        seed: config.seed,
    })
}

fn forward(arch: Architecture, theta: &[f64], x: &Mat) -> f64 {
    match arch {
        Architecture::Linear => {
            let d = x.rows() * x.cols();
            let (w, b) = theta.split_at(d);
            let mut y = b[0];
            for (wi, xi) in w.iter().zip(x.as_slice()) {
                y += wi * xi;
            }
            y
        }
        Architecture::Mlp { hidden } => mlp_forward(theta, x, hidden).0,
        Architecture::Recurrent { hidden } => recurrent_forward(theta, x, hidden).0,
    }
}

/// Loss plus gradients with respect to the window and to `theta`.
fn loss_gradients(arch: Architecture, theta: &[f64], x: &Mat, target: f64) -> (f64, Mat, Vec<f64>) {
    match arch {
        Architecture::Linear => {
            let d = x.rows() * x.cols();
            let (w, _) = theta.split_at(d);
            let y = forward(arch, theta, x);
            let dy = 2.0 * (y - target);
            let mut input_grad = Mat::zeros(x.rows(), x.cols());
            for (g, wi) in input_grad.as_mut_slice().iter_mut().zip(w) {
                *g = dy * wi;
            }
            let mut param_grad = vec![0.0; theta.len()];
            for (pg, xi) in param_grad.iter_mut().zip(x.as_slice()) {
                *pg = dy * xi;
            }
            param_grad[d] = dy;
            (squared_error(y, target), input_grad, param_grad)
        }
        Architecture::Mlp { hidden } => {
            let (y, z) = mlp_forward(theta, x, hidden);
            let d = x.rows() * x.cols();
            let (w1, rest) = theta.split_at(hidden * d);
            let (_b1, rest) = rest.split_at(hidden);
            let (w2, _b2) = rest.split_at(hidden);

            let dy = 2.0 * (y - target);
            // dz_k = dy * w2_k * (1 - tanh(z_k)^2)
            let dz: Vec<f64> = (0..hidden)
                .map(|k| dy * w2[k] * (1.0 - z[k].tanh().powi(2)))
                .collect();

            let mut param_grad = vec![0.0; theta.len()];
            let xs = x.as_slice();
            for k in 0..hidden {
                let row = &mut param_grad[k * d..(k + 1) * d];
                for (pg, xi) in row.iter_mut().zip(xs) {
                    *pg = dz[k] * xi;
                }
                param_grad[hidden * d + k] = dz[k]; // b1
                param_grad[hidden * d + hidden + k] = dy * z[k].tanh(); // w2
            }
            param_grad[hidden * d + 2 * hidden] = dy; // b2

            let mut input_grad = Mat::zeros(x.rows(), x.cols());
            let gs = input_grad.as_mut_slice();
            for k in 0..hidden {
                let row = &w1[k * d..(k + 1) * d];
                for (g, wki) in gs.iter_mut().zip(row) {
                    *g += dz[k] * wki;
                }
            }
            (squared_error(y, target), input_grad, param_grad)
        }
        Architecture::Recurrent { hidden } => {
            recurrent_gradients(theta, x, hidden, target)
        }
    }
}

/// Returns `(output, pre-activation hidden vector)`.
fn mlp_forward(theta: &[f64], x: &Mat, hidden: usize) -> (f64, Vec<f64>) {
    let d = x.rows() * x.cols();
    let (w1, rest) = theta.split_at(hidden * d);
    let (b1, rest) = rest.split_at(hidden);
    let (w2, b2) = rest.split_at(hidden);
    let xs = x.as_slice();
    let mut z = Vec::with_capacity(hidden);
    let mut y = b2[0];
    for k in 0..hidden {
        let mut zk = b1[k];
        for (wki, xi) in w1[k * d..(k + 1) * d].iter().zip(xs) {
            zk += wki * xi;
        }
        y += w2[k] * zk.tanh();
        z.push(zk);
    }
    (y, z)
}

/// Returns `(output, hidden states h_1..h_H)`; `h_0` is the zero vector.
fn recurrent_forward(theta: &[f64], x: &Mat, hidden: usize) -> (f64, Vec<Vec<f64>>) {
    let j = x.cols();
    let (wx, rest) = theta.split_at(hidden * j);
    let (wh, rest) = rest.split_at(hidden * hidden);
    let (bh, rest) = rest.split_at(hidden);
    let (wo, bo) = rest.split_at(hidden);

    let mut states: Vec<Vec<f64>> = Vec::with_capacity(x.rows());
    let mut prev = vec![0.0; hidden];
    for i in 0..x.rows() {
        let row = x.row(i);
        let mut h = vec![0.0; hidden];
        for (k, hk) in h.iter_mut().enumerate() {
            let mut z = bh[k];
            for (w, v) in wx[k * j..(k + 1) * j].iter().zip(row) {
                z += w * v;
            }
            for (w, p) in wh[k * hidden..(k + 1) * hidden].iter().zip(&prev) {
                z += w * p;
            }
            *hk = z.tanh();
        }
        states.push(h.clone());
        prev = h;
    }
    let mut y = bo[0];
    for (w, hk) in wo.iter().zip(&prev) {
        y += w * hk;
    }
    (y, states)
}

fn recurrent_gradients(
    theta: &[f64],
    x: &Mat,
    hidden: usize,
    target: f64,
) -> (f64, Mat, Vec<f64>) {
    let j = x.cols();
    let steps = x.rows();
    let (wx, rest) = theta.split_at(hidden * j);
    let (wh, rest) = rest.split_at(hidden * hidden);
    let (_bh, rest) = rest.split_at(hidden);
    let (wo, _bo) = rest.split_at(hidden);

    let (y, states) = recurrent_forward(theta, x, hidden);
    let dy = 2.0 * (y - target);

    let mut param_grad = vec![0.0; theta.len()];
    let mut input_grad = Mat::zeros(steps, j);

    // Backpropagation through time: dh is dL/dh_i for the current step.
    let mut dh: Vec<f64> = wo.iter().map(|w| dy * w).collect();
    let off_wh = hidden * j;
    let off_bh = off_wh + hidden * hidden;
    let off_wo = off_bh + hidden;
    let off_bo = off_wo + hidden;
    for (k, hk) in states[steps - 1].iter().enumerate() {
        param_grad[off_wo + k] = dy * hk;
    }
    param_grad[off_bo] = dy;

    for i in (0..steps).rev() {
        let h = &states[i];
        let prev: Vec<f64> = if i == 0 { vec![0.0; hidden] } else { states[i - 1].clone() };
        // dz_k = dh_k * (1 - h_k^2)
        let dz: Vec<f64> = dh.iter().zip(h).map(|(d, hk)| d * (1.0 - hk * hk)).collect();
        let row = x.row(i);
        for k in 0..hidden {
            for (m, v) in row.iter().enumerate() {
                param_grad[k * j + m] += dz[k] * v;
            }
            for (m, p) in prev.iter().enumerate() {
                param_grad[off_wh + k * hidden + m] += dz[k] * p;
            }
            param_grad[off_bh + k] += dz[k];
            for m in 0..j {
                let g = input_grad.get(i, m) + dz[k] * wx[k * j + m];
                input_grad.set(i, m, g);
            }
        }
        if i > 0 {
            let mut dprev = vec![0.0; hidden];
            for (k, dzk) in dz.iter().enumerate() {
                for (m, dp) in dprev.iter_mut().enumerate() {
                    *dp += dzk * wh[k * hidden + m];
                }
            }
            dh = dprev;
        }
    }

    (squared_error(y, target), input_grad, param_grad)
}
