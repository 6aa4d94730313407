//! The joint spatio-temporal probability model ψ(d, Δt).
//!
//! A small feedforward binary classifier (2 → 100 → 1) maps a camera-pair
//! path distance and a time gap to the probability that the two observations
//! are consecutive points of one trajectory. Inputs are z-scored with
//! constants fitted on the training set and stored inside the model, so a
//! serialized model is self-contained.
//!
//! Training is full-batch gradient descent on the mean cross-entropy with a
//! backtracking step size, so the tracked loss never increases and a fixed
//! seed reproduces the fit bit for bit (the only randomness is the seeded
//! weight initialization).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden-layer width of ψ.
pub const HIDDEN_WIDTH: usize = 100;

/// Probabilities returned by ψ are clamped into this open interval.
const PROB_EPS: f64 = 1e-12;

/// One training example: a path distance, an absolute time gap and whether
/// the pair is a same-trajectory transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StSample {
    pub distance: f64,
    pub delta_t: f64,
    pub label: bool,
}

impl StSample {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance.is_finite() && self.distance >= 0.0) {
            return Err(Error::InvalidModelInput(format!(
                "distance must be finite and >= 0, got {}",
                self.distance
            )));
        }
        if !(self.delta_t.is_finite() && self.delta_t >= 0.0) {
            return Err(Error::InvalidModelInput(format!(
                "delta_t must be finite and >= 0, got {}",
                self.delta_t
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs_requested: usize,
    pub epochs_run: usize,
    pub lr: f64,
    pub final_loss: f64,
}

/// Trained ψ. Immutable once fitted; safe for concurrent queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Hidden nonlinearity; recorded so the fit is reproducible from file.
    pub activation: String,
    fitted: bool,
    shift: [f64; 2],
    scale: [f64; 2],
    /// Row-major `hidden_dim x input_dim`.
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    pub meta: Option<TrainMeta>,
}

impl StModel {
    /// A placeholder model that has not been fitted yet; querying it fails.
    pub fn unfitted() -> StModel {
        StModel {
            input_dim: 2,
            hidden_dim: HIDDEN_WIDTH,
            activation: "tanh".to_string(),
            fitted: false,
            shift: [0.0; 2],
            scale: [1.0; 2],
            w1: Vec::new(),
            b1: Vec::new(),
            w2: Vec::new(),
            b2: 0.0,
            meta: None,
        }
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    fn normalize(&self, distance: f64, delta_t: f64) -> [f64; 2] {
        [
            (distance - self.shift[0]) / self.scale[0],
            (delta_t - self.shift[1]) / self.scale[1],
        ]
    }

    fn forward(&self, x: [f64; 2]) -> f64 {
        let mut z2 = self.b2;
        for h in 0..self.hidden_dim {
            let z1 = self.w1[h * 2] * x[0] + self.w1[h * 2 + 1] * x[1] + self.b1[h];
            z2 += self.w2[h] * z1.tanh();
        }
        sigmoid(z2).clamp(PROB_EPS, 1.0 - PROB_EPS)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// ψ(d, Δt): probability that two observations separated by path distance
/// `distance` and time gap `delta_t` are consecutive points of one
/// trajectory. Always in (0,1).
pub fn st_probability(model: &StModel, distance: f64, delta_t: f64) -> Result<f64> {
    if !model.is_fitted() {
        return Err(Error::ModelNotFitted);
    }
    if !(distance.is_finite() && distance >= 0.0 && delta_t.is_finite() && delta_t >= 0.0) {
        return Err(Error::InvalidModelInput(format!(
            "inputs must be finite and >= 0, got ({distance}, {delta_t})"
        )));
    }
    Ok(model.forward(model.normalize(distance, delta_t)))
}

/// Fit ψ on labeled samples with full-batch gradient descent.
///
/// The step size backtracks whenever a step would raise the full-set loss,
/// so the tracked loss is non-increasing; if no acceptable step exists the
/// fit stops early with the best snapshot. `lr` is the initial step size.
pub fn train_st_model(
    samples: &[StSample],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<StModel> {
    if epochs < 1 {
        return Err(Error::InvalidModelInput("epochs must be >= 1".to_string()));
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::InvalidModelInput(format!("bad learning rate {lr}")));
    }
    for s in samples {
        s.validate()?;
    }
    let n_pos = samples.iter().filter(|s| s.label).count();
    if n_pos == 0 || n_pos == samples.len() {
        return Err(Error::SingleClassInput);
    }

    // Per-feature z-score constants. A degenerate feature (zero variance)
    // normalizes to exactly 0 via the scale floor.
    let n = samples.len() as f64;
    let mut shift = [0.0; 2];
    let mut scale = [0.0; 2];
    for s in samples {
        shift[0] += s.distance;
        shift[1] += s.delta_t;
    }
    shift[0] /= n;
    shift[1] /= n;
    for s in samples {
        scale[0] += (s.distance - shift[0]).powi(2);
        scale[1] += (s.delta_t - shift[1]).powi(2);
    }
    scale[0] = (scale[0] / n).sqrt().max(1e-9);
    scale[1] = (scale[1] / n).sqrt().max(1e-9);

    let mut model = StModel::unfitted();
    model.shift = shift;
    model.scale = scale;
    let h = model.hidden_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a1 = (6.0 / (2.0 + h as f64)).sqrt();
    let a2 = (6.0 / (h as f64 + 1.0)).sqrt();
    model.w1 = (0..h * 2).map(|_| rng.gen_range(-a1..a1)).collect();
    model.b1 = vec![0.0; h];
    model.w2 = (0..h).map(|_| rng.gen_range(-a2..a2)).collect();
    model.b2 = 0.0;

    let xs: Vec<[f64; 2]> = samples
        .iter()
        .map(|s| model.normalize(s.distance, s.delta_t))
        .collect();
    let ys: Vec<f64> = samples.iter().map(|s| f64::from(s.label)).collect();

    let full_loss = |m: &StModel| -> f64 {
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(&ys) {
            let p = m.forward(*x);
            loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        }
        loss / n
    };

    let mut loss = full_loss(&model);
    let mut epochs_run = 0;
    let mut step = lr;

    let mut act = vec![0.0; h];
    for epoch in 0..epochs {
        let mut dw1 = vec![0.0; h * 2];
        let mut db1 = vec![0.0; h];
        let mut dw2 = vec![0.0; h];
        let mut db2 = 0.0;
        for (x, &y) in xs.iter().zip(&ys) {
            let mut z2 = model.b2;
            for k in 0..h {
                let z1 = model.w1[k * 2] * x[0] + model.w1[k * 2 + 1] * x[1] + model.b1[k];
                act[k] = z1.tanh();
                z2 += model.w2[k] * act[k];
            }
            let p = sigmoid(z2);
            let g2 = p - y;
            db2 += g2;
            for k in 0..h {
                dw2[k] += g2 * act[k];
                let gh = g2 * model.w2[k] * (1.0 - act[k] * act[k]);
                dw1[k * 2] += gh * x[0];
                dw1[k * 2 + 1] += gh * x[1];
                db1[k] += gh;
            }
        }

        // Backtrack until the step does not raise the full-set loss.
        let mut accepted = false;
        while step > 1e-12 {
            let mut trial = model.clone();
            let scale = step / n;
            for k in 0..h {
                trial.w1[k * 2] -= scale * dw1[k * 2];
                trial.w1[k * 2 + 1] -= scale * dw1[k * 2 + 1];
                trial.b1[k] -= scale * db1[k];
                trial.w2[k] -= scale * dw2[k];
            }
            trial.b2 -= scale * db2;
            let trial_loss = full_loss(&trial);
            if !trial_loss.is_finite() {
                return Err(Error::Numerical {
                    stage: "train_st_model",
                    message: format!("loss became non-finite at epoch {}", epoch + 1),
                });
            }
            if trial_loss <= loss {
                model = trial;
                loss = trial_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        epochs_run = epoch + 1;
        if !accepted {
            // No descent step exists at any usable size: converged.
            break;
        }
        step = (step * 1.25).min(lr * 64.0);
    }

    model.fitted = true;
    model.meta = Some(TrainMeta {
        seed,
        epochs_requested: epochs,
        epochs_run,
        lr,
        final_loss: loss,
    });
    Ok(model)
}

/// One point of a ROC curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve and AUC from raw (score, label) pairs.
///
/// The AUC equals the Mann-Whitney pairwise statistic with ties counted 1/2,
/// computed via midranks.
pub fn roc_auc_from_scores(scored: &[(f64, bool)]) -> Result<(Vec<RocPoint>, f64)> {
    let n_pos = scored.iter().filter(|(_, l)| *l).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassInput);
    }

    // Midrank sum over positives.
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.partial_cmp(&scored[b].0).unwrap());
    let mut rank_pos_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scored[order[j]].0 == scored[order[i]].0 {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if scored[idx].1 {
                rank_pos_sum += midrank;
            }
        }
        i = j;
    }
    let np = n_pos as f64;
    let nn = n_neg as f64;
    let auc = (rank_pos_sum - np * (np + 1.0) / 2.0) / (np * nn);

    // ROC points: sweep thresholds from high to low, grouping tied scores.
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut k = order.len();
    while k > 0 {
        let mut j = k;
        let score = scored[order[k - 1]].0;
        while j > 0 && scored[order[j - 1]].0 == score {
            if scored[order[j - 1]].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            j -= 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / nn,
            tpr: tp as f64 / np,
        });
        k = j;
    }
    Ok((points, auc))
}

/// Score samples with ψ and compute the ROC curve and AUC.
pub fn evaluate_roc_auc(
    model: &StModel,
    samples: &[StSample],
) -> Result<(Vec<RocPoint>, f64)> {
    let mut scored = Vec::with_capacity(samples.len());
    for s in samples {
        scored.push((st_probability(model, s.distance, s.delta_t)?, s.label));
    }
    roc_auc_from_scores(&scored)
}
