//! Feasible-direction solver for the transductive top-k objective.
//!
//! Minimizes the regularized training hinge loss (the SVM objective) over
//! linear models that predict exactly `k` test instances positive. Each
//! iteration projects the steepest-descent direction onto the cone that keeps
//! boundary test instances on their side, then takes an exact line search
//! step that stops short of any test score changing sign. When no descent
//! direction remains, a swap move exchanges one selected test instance with
//! an unselected one and descends again.

use std::fmt::Write as _;

use crate::dataset::TransductiveProblem;
use crate::error::{Error, Result};
use crate::hinge_qp::dot;
use crate::linear_model::{descending_order, LinearModel};
use crate::svm::{svm_objective, train_svm, SvmConfig};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct TtkOptions {
    /// Activity band coefficient: instances with `|score| ≤ eps_active·(1 + |b|)`
    /// are on the boundary. The same band marks training instances at a hinge kink.
    pub eps_active: f64,
    /// Iteration cap; `None` means `500·(d + 1)`.
    pub max_iters: Option<usize>,
    /// Directions whose directional derivative is above `-step_tol` count as stationary.
    pub step_tol: f64,
    /// Maximum number of accepted swap moves; 0 disables swaps.
    pub swap_budget: usize,
    /// Descent iterations granted to each tentative swap.
    pub swap_descent_iters: usize,
}

impl Default for TtkOptions {
    fn default() -> Self {
        TtkOptions {
            eps_active: 1e-6,
            max_iters: None,
            step_tol: 1e-8,
            swap_budget: 50,
            swap_descent_iters: 200,
        }
    }
}

impl TtkOptions {
    fn validate(&self) -> Result<()> {
        if !(self.eps_active > 0.0) {
            return Err(Error::arg("eps_active must be positive"));
        }
        if self.max_iters == Some(0) {
            return Err(Error::arg("max_iters must be at least 1"));
        }
        if !(self.step_tol > 0.0) {
            return Err(Error::arg("step_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Stationary,
    IterLimit,
    NoDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Descent,
    Swap,
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub initial_objective: f64,
    /// Objective after each accepted move.
    pub objectives: Vec<f64>,
    pub feasible_flags: Vec<bool>,
    pub moves: Vec<Move>,
    pub swaps_taken: usize,
    pub terminated_by: Termination,
}

impl SolverTrace {
    pub fn final_objective(&self) -> f64 {
        self.objectives.last().copied().unwrap_or(self.initial_objective)
    }

    /// CSV with columns `iter,objective,feasible,move`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,objective,feasible,move\n");
        for (i, ((obj, feas), mv)) in self
            .objectives
            .iter()
            .zip(&self.feasible_flags)
            .zip(&self.moves)
            .enumerate()
        {
            let mv = match mv {
                Move::Descent => "descent",
                Move::Swap => "swap",
            };
            writeln!(out, "{},{obj},{feas},{mv}", i + 1).unwrap();
        }
        out
    }
}

/// A search direction over `(w, b)`, scaled so that `max(|dw|, |db|) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dw: Vec<f64>,
    pub db: f64,
    /// Directional derivative of the objective along `(dw, db)`, with
    /// training instances at a hinge kink charged their worse side.
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineStep {
    pub alpha: f64,
    /// First step length at which a test score changes sign (`∞` if none).
    pub alpha_max: f64,
}

/// The training objective; test instances only enter through the constraint.
pub fn ttk_objective(model: &LinearModel, problem: &TransductiveProblem) -> Result<f64> {
    svm_objective(model, &problem.train, problem.c)
}

/// True iff exactly `k` test instances score strictly above zero.
pub fn is_feasible(model: &LinearModel, problem: &TransductiveProblem) -> Result<bool> {
    Ok(model.count_positive(&problem.test)? == problem.k)
}

/// The usual starting point: the SVM trained on the labeled data, with its
/// intercept shifted to select `k` test instances.
pub fn threshold_init(problem: &TransductiveProblem, config: &SvmConfig) -> Result<LinearModel> {
    let config = SvmConfig { c: problem.c, ..*config };
    let (svm, _) = train_svm(&problem.train, &config)?;
    crate::linear_model::adjust_intercept(&widen(&svm, problem.dim()), &problem.test, problem.k)
}

fn widen(model: &LinearModel, dim: usize) -> LinearModel {
    let mut w = model.w.clone();
    w.resize(dim.max(w.len()), 0.0);
    LinearModel::new(w, model.b)
}

pub fn feasible_direction(
    model: &LinearModel,
    problem: &TransductiveProblem,
    options: &TtkOptions,
) -> Result<Option<Direction>> {
    let prep = Prepared::new(problem, model)?;
    let z = prep.pack(model);
    prep.require_feasible(&z)?;
    Ok(prep.direction(&z, prep.band(&z, options), options.step_tol))
}

pub fn line_search(
    model: &LinearModel,
    direction: &Direction,
    problem: &TransductiveProblem,
    options: &TtkOptions,
) -> Result<LineStep> {
    let prep = Prepared::new(problem, model)?;
    let z = prep.pack(model);
    prep.require_feasible(&z)?;
    let mut d = direction.dw.clone();
    d.push(direction.db);
    Ok(prep.line_search(&z, &d, direction.slope, options))
}

/// Tries to exchange a selected boundary test instance with an unselected
/// one. Returns a model with strictly lower objective, or `None`.
pub fn swap_step(
    model: &LinearModel,
    problem: &TransductiveProblem,
    options: &TtkOptions,
) -> Result<Option<LinearModel>> {
    options.validate()?;
    let prep = Prepared::new(problem, model)?;
    let z = prep.pack(model);
    prep.require_feasible(&z)?;
    if options.swap_budget == 0 {
        return Ok(None);
    }
    Ok(prep.swap(&z, options).map(|z| prep.unpack(&z)))
}

/// Runs the feasible-direction method from a feasible `init`.
pub fn solve_fd(
    problem: &TransductiveProblem,
    init: &LinearModel,
    options: &TtkOptions,
) -> Result<(LinearModel, SolverTrace)> {
    options.validate()?;
    let prep = Prepared::new(problem, init)?;
    let z0 = prep.pack(init);
    if !prep.feasible(&z0) {
        return Err(Error::arg(format!(
            "initial model is infeasible: {} test instances positive, k = {}",
            prep.count_positive(&z0),
            prep.k
        )));
    }
    let max_iters = options.max_iters.unwrap_or(500 * (prep.dim + 1));
    let initial_objective = prep.objective(&z0);
    let mut trace = SolverTrace {
        initial_objective,
        objectives: Vec::new(),
        feasible_flags: Vec::new(),
        moves: Vec::new(),
        swaps_taken: 0,
        terminated_by: Termination::IterLimit,
    };
    let mut z = z0;
    let mut used = 0;
    loop {
        let (next, n, outcome) = prep.descend(z, options, max_iters - used, |f, feasible| {
            trace.record(f, feasible, Move::Descent)
        });
        z = next;
        used += n;
        let terminated_by = match outcome {
            Outcome::Limit => {
                trace.terminated_by = Termination::IterLimit;
                return Ok((prep.unpack(&z), trace));
            }
            Outcome::Stationary => Termination::Stationary,
            Outcome::Stalled => Termination::NoDirection,
        };
        let swapped = if trace.swaps_taken < options.swap_budget {
            prep.swap(&z, options)
        } else {
            None
        };
        match swapped {
            Some(next) if used < max_iters => {
                z = next;
                trace.swaps_taken += 1;
                trace.record(prep.objective(&z), prep.feasible(&z), Move::Swap);
            }
            Some(next) => {
                z = next;
                trace.swaps_taken += 1;
                trace.record(prep.objective(&z), prep.feasible(&z), Move::Swap);
                trace.terminated_by = Termination::IterLimit;
                return Ok((prep.unpack(&z), trace));
            }
            None => {
                trace.terminated_by = terminated_by;
                return Ok((prep.unpack(&z), trace));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    /// No descent direction at the finest band.
    Stationary,
    /// A direction exists but no step along it decreases the objective.
    Stalled,
    Limit,
}

/// Activity bands tried from coarse to fine. A coarse band treats nearby
/// kinks and boundary instances as active, which keeps steps from stalling
/// just short of them.
fn band_schedule(eps_active: f64) -> Vec<f64> {
    let mut bands: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
        .into_iter()
        .filter(|&b| b > eps_active)
        .collect();
    bands.push(eps_active);
    bands
}

impl SolverTrace {
    fn record(&mut self, objective: f64, feasible: bool, mv: Move) {
        self.objectives.push(objective);
        self.feasible_flags.push(feasible);
        self.moves.push(mv);
    }
}

/// Dense copy of a problem. Models are packed as `z = (w, b)`.
struct Prepared {
    dim: usize,
    train: Vec<Vec<f64>>,
    y: Vec<f64>,
    test: Vec<Vec<f64>>,
    k: usize,
    c: f64,
}

impl Prepared {
    fn new(problem: &TransductiveProblem, model: &LinearModel) -> Result<Self> {
        let dim = problem.dim();
        if model.dim() != dim {
            return Err(Error::arg(format!(
                "model dimension {} does not match problem dimension {dim}",
                model.dim()
            )));
        }
        if !model.is_finite() {
            return Err(Error::arg("model has non-finite entries"));
        }
        Ok(Prepared {
            dim,
            train: problem.train.dense_rows(dim),
            y: problem.train.signs()?,
            test: problem.test.dense_rows(dim),
            k: problem.k,
            c: problem.c,
        })
    }

    fn pack(&self, model: &LinearModel) -> Vec<f64> {
        let mut z = model.w.clone();
        z.push(model.b);
        z
    }

    fn unpack(&self, z: &[f64]) -> LinearModel {
        LinearModel::new(z[..self.dim].to_vec(), z[self.dim])
    }

    fn score(&self, z: &[f64], x: &[f64]) -> f64 {
        dot(&z[..self.dim], x) + z[self.dim]
    }

    /// `(x, 1) · d`.
    fn rate(&self, d: &[f64], x: &[f64]) -> f64 {
        dot(&d[..self.dim], x) + d[self.dim]
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let w = &z[..self.dim];
        let loss: f64 = self
            .train
            .iter()
            .zip(&self.y)
            .map(|(x, y)| (1.0 - y * self.score(z, x)).max(0.0))
            .sum();
        0.5 * dot(w, w) + self.c * loss
    }

    fn count_positive(&self, z: &[f64]) -> usize {
        self.test.iter().filter(|x| self.score(z, x) > 0.0).count()
    }

    fn feasible(&self, z: &[f64]) -> bool {
        self.count_positive(z) == self.k
    }

    fn require_feasible(&self, z: &[f64]) -> Result<()> {
        let positives = self.count_positive(z);
        if positives != self.k {
            return Err(Error::Infeasible { positives, k: self.k });
        }
        Ok(())
    }

    fn band(&self, z: &[f64], options: &TtkOptions) -> f64 {
        options.eps_active * (1.0 + z[self.dim].abs())
    }

    fn direction(&self, z: &[f64], band: f64, step_tol: f64) -> Option<Direction> {
        let p = self.dim + 1;
        let mut g0 = z[..self.dim].to_vec();
        g0.push(0.0);
        let mut kinks: Vec<Vec<f64>> = Vec::new();
        for (x, &y) in self.train.iter().zip(&self.y) {
            let u = y * self.score(z, x);
            if u < 1.0 - band {
                for (g, xv) in g0.iter_mut().zip(x) {
                    *g -= self.c * y * xv;
                }
                g0[self.dim] -= self.c * y;
            } else if u <= 1.0 + band {
                let mut v: Vec<f64> = x.iter().map(|xv| -self.c * y * xv).collect();
                v.push(-self.c * y);
                kinks.push(v);
            }
        }
        // boundary test instances: the direction may not move them across zero
        let mut cone: Vec<Vec<f64>> = Vec::new();
        for x in &self.test {
            let s = self.score(z, x);
            let side = if s > 0.0 && s <= band {
                1.0
            } else if s <= 0.0 && s >= -band {
                -1.0
            } else {
                continue;
            };
            let mut c: Vec<f64> = x.iter().map(|v| side * v).collect();
            c.push(side);
            cone.push(c);
        }

        let mut cols: Vec<Vec<f64>> = kinks.clone();
        let mut upper = vec![1.0; kinks.len()];
        for c in &cone {
            cols.push(c.iter().map(|v| -v).collect());
            upper.push(f64::INFINITY);
        }
        let r = min_norm_point(&g0, &cols, &upper);
        let scale = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        let d: Vec<f64> = r.iter().map(|v| -v / scale).collect();
        debug_assert_eq!(d.len(), p);
        let slope = dot(&g0, &d) + kinks.iter().map(|v| dot(v, &d).max(0.0)).sum::<f64>();
        if slope >= -step_tol {
            return None;
        }
        Some(Direction {
            dw: d[..self.dim].to_vec(),
            db: d[self.dim],
            slope,
        })
    }

    fn line_search(&self, z: &[f64], d: &[f64], slope: f64, options: &TtkOptions) -> LineStep {
        let band = self.band(z, options);
        let mut alpha_max = f64::INFINITY;
        let mut cap = f64::INFINITY;
        for x in &self.test {
            let s = self.score(z, x);
            let r = self.rate(d, x);
            // distance to zero along the direction, and where to stop short of it
            let (dist, speed) = if s > 0.0 && r < 0.0 {
                (s, -r)
            } else if s <= 0.0 && r > 0.0 {
                (-s, r)
            } else {
                continue;
            };
            let cross = dist / speed;
            alpha_max = alpha_max.min(cross);
            let land = if dist > 0.5 * band {
                (dist - 0.5 * band) / speed
            } else {
                0.5 * cross
            };
            cap = cap.min(land);
        }

        let f0 = self.objective(z);
        let mut alpha = self.exact_ray_minimizer(z, d, cap);
        for _ in 0..64 {
            if !(alpha > 0.0) {
                break;
            }
            let next = axpy(z, alpha, d);
            if self.feasible(&next) && self.objective(&next) <= f0 - 1e-4 * alpha * slope.abs() {
                return LineStep { alpha, alpha_max };
            }
            alpha *= 0.5;
        }
        LineStep { alpha: 0.0, alpha_max }
    }

    /// Minimizer over `[0, cap]` of the convex piecewise-quadratic
    /// `α ↦ objective(z + α d)`.
    fn exact_ray_minimizer(&self, z: &[f64], d: &[f64], cap: f64) -> f64 {
        let dw = &d[..self.dim];
        let q = dot(dw, dw);
        let l = dot(&z[..self.dim], dw);
        let mut slope_sum = 0.0;
        let mut events: Vec<(f64, f64)> = Vec::new();
        for (x, &y) in self.train.iter().zip(&self.y) {
            let gap = 1.0 - y * self.score(z, x);
            let rho = y * self.rate(d, x);
            let contrib = -self.c * rho;
            if rho > 0.0 {
                // active while α < gap / ρ
                if gap > 0.0 {
                    slope_sum += contrib;
                    events.push((gap / rho, -contrib));
                }
            } else if rho < 0.0 {
                if gap >= 0.0 {
                    slope_sum += contrib;
                } else {
                    events.push((gap / rho, contrib));
                }
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut a = 0.0;
        for &(t, delta) in &events {
            if t >= cap {
                break;
            }
            let da = q * a + l + slope_sum;
            if da >= 0.0 {
                return a;
            }
            if q > 0.0 {
                let root = -(l + slope_sum) / q;
                if root <= t {
                    return root;
                }
            }
            a = t;
            slope_sum += delta;
        }
        let da = q * a + l + slope_sum;
        if da >= 0.0 {
            return a;
        }
        if q > 0.0 {
            return (-(l + slope_sum) / q).min(cap);
        }
        if cap.is_finite() {
            cap
        } else {
            a
        }
    }

    /// Descent iterations without swaps; `on_step` sees each accepted
    /// objective and its feasibility.
    fn descend(
        &self,
        mut z: Vec<f64>,
        options: &TtkOptions,
        max_iters: usize,
        mut on_step: impl FnMut(f64, bool),
    ) -> (Vec<f64>, usize, Outcome) {
        let schedule = band_schedule(options.eps_active);
        let mut level = 0;
        let mut f = self.objective(&z);
        let mut used = 0;
        while used < max_iters {
            used += 1;
            let band = schedule[level] * (1.0 + z[self.dim].abs());
            let dir = self.direction(&z, band, options.step_tol);
            if let Some(dir) = &dir {
                let mut d = dir.dw.clone();
                d.push(dir.db);
                let step = self.line_search(&z, &d, dir.slope, options);
                if step.alpha > 0.0 {
                    let next = axpy(&z, step.alpha, &d);
                    let fn_ = self.objective(&next);
                    if fn_ < f {
                        z = next;
                        f = fn_;
                        on_step(f, self.feasible(&z));
                        continue;
                    }
                }
            }
            if level + 1 < schedule.len() {
                level += 1;
                continue;
            }
            let outcome = if dir.is_some() { Outcome::Stalled } else { Outcome::Stationary };
            return (z, used, outcome);
        }
        (z, used, Outcome::Limit)
    }

    fn swap(&self, z: &[f64], options: &TtkOptions) -> Option<Vec<f64>> {
        const CANDIDATES: usize = 3;
        let band = self.band(z, options);
        let scores: Vec<f64> = self.test.iter().map(|x| self.score(z, x)).collect();
        let order = descending_order(&scores);
        let (selected, rest) = order.split_at(self.k);
        if rest.is_empty() {
            return None;
        }
        // lowest-scoring selected first, highest-scoring unselected first
        let mut outs: Vec<usize> = selected.iter().rev().copied().filter(|&j| scores[j] <= band).collect();
        let mut ins: Vec<usize> = rest.iter().copied().filter(|&j| scores[j] >= -band).collect();
        if outs.is_empty() && ins.is_empty() {
            return None;
        }
        if outs.is_empty() {
            outs.push(selected[self.k - 1]);
        }
        if ins.is_empty() {
            ins.push(rest[0]);
        }
        outs.truncate(CANDIDATES);
        ins.truncate(CANDIDATES);

        let f0 = self.objective(z);
        let tol = 1e-12 * (1.0 + f0.abs());
        for &o in &outs {
            for &i in &ins {
                let dx: Vec<f64> = self.test[i].iter().zip(&self.test[o]).map(|(a, b)| a - b).collect();
                let nd = dot(&dx, &dx);
                if nd == 0.0 {
                    continue;
                }
                // smallest rotation putting i just above o
                let t = (scores[o] - scores[i] + band) / nd;
                let mut cand = z.to_vec();
                for (w, v) in cand[..self.dim].iter_mut().zip(&dx) {
                    *w += t * v;
                }
                let Some(cand) = self.reshift(cand) else {
                    continue;
                };
                let (settled, _, _) = self.descend(cand, options, options.swap_descent_iters, |_, _| {});
                if self.feasible(&settled) && self.objective(&settled) < f0 - tol {
                    return Some(settled);
                }
            }
        }
        None
    }

    /// Midpoint intercept between the k-th and (k+1)-th test scores.
    fn reshift(&self, mut z: Vec<f64>) -> Option<Vec<f64>> {
        z[self.dim] = 0.0;
        let scores: Vec<f64> = self.test.iter().map(|x| self.score(&z, x)).collect();
        let order = descending_order(&scores);
        let kth = scores[order[self.k - 1]];
        z[self.dim] = match order.get(self.k) {
            Some(&next) if scores[next] == kth => return None,
            Some(&next) => -0.5 * (kth + scores[next]),
            None => 1.0 - kth,
        };
        self.feasible(&z).then_some(z)
    }
}

fn axpy(z: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    z.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

/// Minimizes `½‖g0 + Σ uₖ colₖ‖²` over `0 ≤ uₖ ≤ upperₖ`; returns the
/// minimizing residual. Cyclic coordinate descent identifies the active
/// set, which is then solved exactly when the result passes the optimality
/// conditions.
fn min_norm_point(g0: &[f64], cols: &[Vec<f64>], upper: &[f64]) -> Vec<f64> {
    let mut r = g0.to_vec();
    if cols.is_empty() {
        return r;
    }
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let mut u = vec![0.0; cols.len()];
    for sweep in 0..20_000 {
        let mut moved = 0.0f64;
        for k in 0..cols.len() {
            if norms[k] == 0.0 {
                continue;
            }
            let target = (u[k] - dot(&cols[k], &r) / norms[k]).clamp(0.0, upper[k]);
            let delta = target - u[k];
            if delta != 0.0 {
                for (ri, ci) in r.iter_mut().zip(&cols[k]) {
                    *ri += delta * ci;
                }
                u[k] = target;
                moved = moved.max(delta.abs() * norms[k].sqrt());
            }
        }
        let rn = dot(&r, &r).sqrt();
        if moved <= 1e-15 * (1.0 + rn) {
            break;
        }
        if sweep % 50 == 49 {
            if let Some(exact) = polish_min_norm(g0, cols, upper, &u) {
                return exact;
            }
        }
    }
    polish_min_norm(g0, cols, upper, &u).unwrap_or(r)
}

fn polish_min_norm(g0: &[f64], cols: &[Vec<f64>], upper: &[f64], u: &[f64]) -> Option<Vec<f64>> {
    let p = g0.len();
    let scale = g0
        .iter()
        .chain(cols.iter().flatten())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut r0 = g0.to_vec();
    let mut free = Vec::new();
    for k in 0..cols.len() {
        if u[k] >= upper[k] {
            for (a, c) in r0.iter_mut().zip(&cols[k]) {
                *a += upper[k] * c;
            }
        } else if u[k] > 0.0 {
            free.push(k);
        }
    }
    let mut r = r0.clone();
    if !free.is_empty() {
        let a = DMatrix::from_fn(p, free.len(), |i, j| cols[free[j]][i]);
        let rhs = DVector::from_iterator(p, r0.iter().map(|v| -v));
        let v = a.clone().svd(true, true).solve(&rhs, 1e-12 * scale).ok()?;
        for (j, &k) in free.iter().enumerate() {
            if !v[j].is_finite() || v[j] < 0.0 || v[j] > upper[k] {
                return None;
            }
        }
        let fitted = &a * &v;
        for (ri, fi) in r.iter_mut().zip(fitted.iter()) {
            *ri += fi;
        }
    }
    let rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale * (1.0 + rn);
    for k in 0..cols.len() {
        if free.contains(&k) {
            continue;
        }
        let g = dot(&cols[k], &r);
        let ok = if u[k] >= upper[k] { g <= tol } else { g >= -tol };
        if !ok {
            return None;
        }
    }
    // components below rounding of the inputs are zero
    if rn <= 1e-13 * scale {
        return Some(vec![0.0; p]);
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Instance, Label};

    fn data(points: &[(&[f64], Option<Label>)]) -> Dataset {
        let dim = points.iter().map(|p| p.0.len()).max().unwrap_or(0);
        Dataset::with_dim(
            points
                .iter()
                .map(|(x, l)| Instance::from_dense(x, *l).unwrap())
                .collect(),
            dim,
        )
        .unwrap()
    }

    fn toy_problem() -> TransductiveProblem {
        use Label::*;
        let train = data(&[
            (&[2.0, 1.0], Some(Pos)),
            (&[1.5, -0.5], Some(Pos)),
            (&[-1.0, 0.5], Some(Neg)),
            (&[-2.0, -1.0], Some(Neg)),
        ]);
        let test = data(&[(&[1.0, 0.0], None), (&[0.2, 0.3], None), (&[-1.0, 0.0], None)]);
        TransductiveProblem::new(train, test, 1, 1.0).unwrap()
    }

    #[test]
    fn objective_is_svm_objective() {
        let p = toy_problem();
        let m = LinearModel::new(vec![0.3, -0.2], 0.1);
        assert_eq!(ttk_objective(&m, &p).unwrap(), svm_objective(&m, &p.train, 1.0).unwrap());
        let three = data(&[
            (&[1.0], Some(Label::Pos)),
            (&[2.0], Some(Label::Neg)),
            (&[3.0], Some(Label::Pos)),
        ]);
        let q = TransductiveProblem::new(three.clone(), three.unlabeled(), 1, 2.0).unwrap();
        assert_eq!(ttk_objective(&LinearModel::zeros(1), &q).unwrap(), 6.0);
    }

    #[test]
    fn feasibility_counts() {
        let train = data(&[(&[1.0], Some(Label::Pos)), (&[-1.0], Some(Label::Neg))]);
        let test = data(&[(&[0.2], None), (&[-0.1], None)]);
        let p = TransductiveProblem::new(train.clone(), test, 1, 1.0).unwrap();
        assert!(is_feasible(&LinearModel::new(vec![1.0], 0.0), &p).unwrap());
        let test2 = data(&[(&[0.2], None), (&[0.1], None)]);
        let p2 = TransductiveProblem::new(train.clone(), test2.clone(), 1, 1.0).unwrap();
        assert!(!is_feasible(&LinearModel::new(vec![1.0], 0.0), &p2).unwrap());
        let p3 = TransductiveProblem::new(train, test2, 2, 1.0).unwrap();
        assert!(is_feasible(&LinearModel::new(vec![1.0], 0.0), &p3).unwrap());
    }

    #[test]
    fn unconstrained_direction_is_normalized_negative_gradient() {
        // one violated training point, no test instance near the boundary
        let train = data(&[(&[1.0, 2.0], Some(Label::Pos))]);
        let test = data(&[(&[0.0, 0.0], None), (&[10.0, 10.0], None)]);
        let p = TransductiveProblem::new(train, test, 1, 1.0).unwrap();
        let m = LinearModel::new(vec![0.1, 0.0], -0.5);
        // gradient: w - C y (x, 1) = (0.1 - 1, -2, -1)
        let d = feasible_direction(&m, &p, &TtkOptions::default()).unwrap().unwrap();
        let g = [-0.9, -2.0, -1.0];
        let expect: Vec<f64> = g.iter().map(|v| -v / 2.0).collect();
        assert!((d.dw[0] - expect[0]).abs() < 1e-12);
        assert!((d.dw[1] - expect[1]).abs() < 1e-12);
        assert!((d.db - expect[2]).abs() < 1e-12);
        let gd: f64 = g.iter().zip(&expect).map(|(a, b)| a * b).sum();
        assert!((d.slope - gd).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_gives_no_direction() {
        // w = 0 and every training margin satisfied by the intercept alone
        let train = data(&[(&[0.5], Some(Label::Pos))]);
        let test = data(&[(&[1.0], None), (&[2.0], None)]);
        let p = TransductiveProblem::new(train, test, 2, 1.0).unwrap();
        let m = LinearModel::new(vec![0.0], 3.0);
        assert!(feasible_direction(&m, &p, &TtkOptions::default()).unwrap().is_none());
    }

    #[test]
    fn infeasible_model_is_a_contract_violation() {
        let p = toy_problem();
        let m = LinearModel::new(vec![1.0, 0.0], 5.0);
        assert!(matches!(
            feasible_direction(&m, &p, &TtkOptions::default()),
            Err(Error::Infeasible { positives: 3, k: 1 })
        ));
    }

    /// Minimum of `gᵀd` over `‖d‖∞ ≤ 1, cᵀd ≥ 0` in two variables, by
    /// enumerating box corners and the intersections of the constraint line
    /// with the box edges.
    fn lp_by_vertices(g: [f64; 2], c: [f64; 2]) -> f64 {
        let mut pts: Vec<[f64; 2]> = vec![[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]];
        for fixed in [-1.0, 1.0] {
            if c[1] != 0.0 {
                pts.push([fixed, -c[0] * fixed / c[1]]);
            }
            if c[0] != 0.0 {
                pts.push([-c[1] * fixed / c[0], fixed]);
            }
        }
        pts.iter()
            .filter(|p| p[0].abs() <= 1.0 + 1e-12 && p[1].abs() <= 1.0 + 1e-12)
            .filter(|p| c[0] * p[0] + c[1] * p[1] >= -1e-12)
            .map(|p| g[0] * p[0] + g[1] * p[1])
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn single_active_constraint_against_gradient() {
        // 1-D features: (w, b) is two-dimensional. Training pulls w up and b
        // down; the selected test point at x = 1 sits on the boundary.
        let train = data(&[(&[1.0], Some(Label::Pos)), (&[3.0], Some(Label::Neg))]);
        let test = data(&[(&[1.0], None), (&[-5.0], None)]);
        let p = TransductiveProblem::new(train, test, 1, 1.0).unwrap();
        let m = LinearModel::new(vec![0.5], -0.5 + 1e-9);
        let opts = TtkOptions::default();
        let d = feasible_direction(&m, &p, &opts).unwrap().unwrap();
        // constraint: score of x = 1 may not decrease: dw + db ≥ 0
        assert!(d.dw[0] + d.db >= -1e-12);
        assert!(d.dw[0].abs() <= 1.0 + 1e-12 && d.db.abs() <= 1.0 + 1e-12);
        let (gw, gb) = crate::svm::svm_subgradient(&m, &p.train, 1.0).unwrap();
        let gd = gw[0] * d.dw[0] + gb * d.db;
        let lp = lp_by_vertices([gw[0], gb], [1.0, 1.0]);
        assert!(gd >= lp - 1e-12, "{gd} < {lp}");
        assert!(gd < 0.0);
    }

    #[test]
    fn crossing_breakpoint() {
        let train = data(&[(&[1.0], Some(Label::Pos))]);
        let test = data(&[(&[1.0], None), (&[-3.0], None)]);
        let p = TransductiveProblem::new(train, test, 1, 1.0).unwrap();
        // test scores 0.5 and -3.5; direction lowers b at unit rate
        let m = LinearModel::new(vec![1.0], -0.5);
        let dir = Direction { dw: vec![0.0], db: -1.0, slope: -1.0 };
        let step = line_search(&m, &dir, &p, &TtkOptions::default()).unwrap();
        assert_eq!(step.alpha_max, 0.5);
        assert_eq!(step.alpha, 0.0, "moving b down only raises the training loss");
        let up = Direction { dw: vec![0.0], db: 1.0, slope: -1.0 };
        let step = line_search(&m, &up, &p, &TtkOptions::default()).unwrap();
        assert_eq!(step.alpha_max, 3.5);
        // training loss vanishes once b reaches 0
        assert!((step.alpha - 0.5).abs() < 1e-12, "{step:?}");
    }

    #[test]
    fn no_crossing_means_unbounded_breakpoint() {
        let train = data(&[(&[1.0], Some(Label::Pos)), (&[-1.0], Some(Label::Neg))]);
        let test = data(&[(&[2.0], None), (&[-2.0], None)]);
        let p = TransductiveProblem::new(train, test, 1, 1.0).unwrap();
        let m = LinearModel::new(vec![0.1], 0.0);
        let dir = Direction { dw: vec![1.0], db: 0.0, slope: -1.8 };
        let step = line_search(&m, &dir, &p, &TtkOptions::default()).unwrap();
        assert_eq!(step.alpha_max, f64::INFINITY);
        // ½(0.1 + α)² + 2 max(0, 1 - 0.1 - α) is minimized at α = 0.9
        assert!((step.alpha - 0.9).abs() < 1e-12, "{step:?}");
    }

    #[test]
    fn swap_needs_budget_and_candidates() {
        let p = toy_problem();
        let m = threshold_init(&p, &SvmConfig::default()).unwrap();
        let none = TtkOptions { swap_budget: 0, ..Default::default() };
        assert!(swap_step(&m, &p, &none).unwrap().is_none());
        // threshold midpoint keeps every test score well away from zero
        let far = LinearModel::new(m.w.iter().map(|v| v * 10.0).collect(), m.b * 10.0);
        assert!(swap_step(&far, &p, &TtkOptions::default()).unwrap().is_none());
    }

    #[test]
    fn solve_is_monotone_and_feasible() {
        let p = toy_problem();
        let init = threshold_init(&p, &SvmConfig::default()).unwrap();
        let (m, trace) = solve_fd(&p, &init, &TtkOptions::default()).unwrap();
        assert!(is_feasible(&m, &p).unwrap());
        assert!(trace.feasible_flags.iter().all(|&f| f));
        let mut prev = trace.initial_objective;
        for &o in &trace.objectives {
            assert!(o <= prev);
            prev = o;
        }
        assert!(ttk_objective(&m, &p).unwrap() <= ttk_objective(&init, &p).unwrap());
        let csv = trace.to_csv();
        assert!(csv.starts_with("iter,objective,feasible,move\n"));
        assert_eq!(csv.lines().count(), trace.objectives.len() + 1);
    }

    #[test]
    fn infeasible_init_rejected() {
        let p = toy_problem();
        let m = LinearModel::new(vec![1.0, 0.0], 5.0);
        assert!(matches!(
            solve_fd(&p, &m, &TtkOptions::default()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn optimal_init_is_a_fixed_point() {
        use Label::*;
        // separable; the SVM optimum already selects exactly the two positive test points
        let train = data(&[(&[2.0], Some(Pos)), (&[-2.0], Some(Neg))]);
        let test = data(&[(&[3.0], None), (&[2.5], None), (&[-3.0], None)]);
        let p = TransductiveProblem::new(train, test, 2, 1.0).unwrap();
        let (svm, obj) = train_svm(&p.train, &SvmConfig::default()).unwrap();
        assert!(is_feasible(&svm, &p).unwrap());
        let (m, trace) = solve_fd(&p, &svm, &TtkOptions::default()).unwrap();
        assert!((ttk_objective(&m, &p).unwrap() - obj).abs() < 1e-12);
        assert_eq!(trace.terminated_by, Termination::Stationary);
    }
}
