//! Baseline linear SVM: `½‖w‖² + C Σ max(0, 1 − yᵢ(w·xᵢ + b))` with the
//! intercept left unpenalized.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hinge_qp::{HingeProblem, QpOptions};
use crate::linear_model::LinearModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvmSolver {
    /// Dual SMO with KKT polishing; exact up to `tol`.
    Dual,
    /// Seeded stochastic subgradient descent, step `1 / (1 + t/n)`, best iterate kept.
    Subgradient,
}

#[derive(Debug, Clone, Copy)]
pub struct SvmConfig {
    pub c: f64,
    pub max_epochs: usize,
    pub tol: f64,
    pub seed: u64,
    pub solver: SvmSolver,
    /// When false, `b` is held at 0.
    pub fit_intercept: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            max_epochs: 1000,
            tol: 1e-11,
            seed: 0,
            solver: SvmSolver::Dual,
            fit_intercept: true,
        }
    }
}

impl SvmConfig {
    pub fn with_c(c: f64) -> Self {
        SvmConfig { c, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::arg(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::arg("tol must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::arg("max_epochs must be at least 1"));
        }
        Ok(())
    }
}

pub fn svm_objective(model: &LinearModel, train: &Dataset, c: f64) -> Result<f64> {
    let y = train.signs()?;
    let s = model.scores(train)?;
    let reg = 0.5 * model.w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = s.iter().zip(&y).map(|(s, y)| (1.0 - y * s).max(0.0)).sum();
    Ok(reg + c * loss)
}

/// A subgradient `(∂w, ∂b)` of [`svm_objective`]. An instance exactly on its
/// margin is treated as violated.
pub fn svm_subgradient(model: &LinearModel, train: &Dataset, c: f64) -> Result<(Vec<f64>, f64)> {
    let y = train.signs()?;
    let s = model.scores(train)?;
    let mut gw = model.w.clone();
    let mut gb = 0.0;
    for (i, x) in train.instances().iter().enumerate() {
        if 1.0 - y[i] * s[i] >= 0.0 {
            for &(j, v) in x.features() {
                gw[j as usize - 1] -= c * y[i] * v;
            }
            gb -= c * y[i];
        }
    }
    Ok((gw, gb))
}

pub(crate) fn hinge_problem(train: &Dataset, dim: usize, c: f64) -> Result<HingeProblem> {
    let y = train.signs()?;
    let mut p = HingeProblem::new(dim);
    for (x, y) in train.instances().iter().zip(y) {
        p.push(x.to_dense(dim), y, 1.0, c);
    }
    Ok(p)
}

/// Trains the SVM; returns the model and its objective value.
pub fn train_svm(train: &Dataset, config: &SvmConfig) -> Result<(LinearModel, f64)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::arg("training set is empty"));
    }
    match config.solver {
        SvmSolver::Dual => {
            let mut p = hinge_problem(train, train.dim(), config.c)?;
            if !config.fit_intercept {
                p = p.without_intercept();
            }
            let sol = p.solve(&QpOptions {
                tol: config.tol,
                max_iter: config.max_epochs.saturating_mul(train.len()).max(100_000),
                ..Default::default()
            });
            let model = LinearModel::new(sol.w, sol.b);
            let obj = svm_objective(&model, train, config.c)?;
            Ok((model, obj))
        }
        SvmSolver::Subgradient => subgradient_descent(train, config),
    }
}

fn subgradient_descent(train: &Dataset, config: &SvmConfig) -> Result<(LinearModel, f64)> {
    let y = train.signs()?;
    let n = train.len();
    let c = config.c;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = LinearModel::zeros(train.dim());
    let mut best = (svm_objective(&model, train, c)?, model.clone());
    let mut avg = model.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    let mut last_best = best.0;

    for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = 1.0 / (1.0 + t as f64 / n as f64);
            let x = &train.instances()[i];
            let active = 1.0 - y[i] * (x.dot(&model.w) + model.b) >= 0.0;
            // per-instance share of the regularizer keeps the epoch sum equal to the full subgradient
            let shrink = 1.0 - eta / n as f64;
            for v in model.w.iter_mut() {
                *v *= shrink;
            }
            if active {
                for &(j, v) in x.features() {
                    model.w[j as usize - 1] += eta * c * y[i] * v;
                }
                if config.fit_intercept {
                    model.b += eta * c * y[i];
                }
            }
            t += 1;
            let keep = 1.0 / t as f64;
            avg = model.lerp(&avg, keep);
        }
        for cand in [&model, &avg] {
            let obj = svm_objective(cand, train, c)?;
            if obj < best.0 {
                best = (obj, cand.clone());
            }
        }
        if (last_best - best.0).abs() <= config.tol * best.0.abs().max(1e-12) && t > n {
            break;
        }
        last_best = best.0;
    }
    Ok((best.1, best.0))
}
