//! Exact minimizer for weighted hinge objectives with a free intercept:
//!
//! ```text
//! ½‖w‖² + Σᵢ cᵢ · max(0, mᵢ − yᵢ (w·xᵢ + b))
//! ```
//!
//! Low-dimensional problems go to a primal-dual interior-point method whose
//! Newton system has the size of `(w, b)`; others are solved in the dual by
//! sequential minimal optimization with second-order working-set selection.
//! Either result is polished by re-solving the KKT equations on the
//! identified free set. The intercept is always re-derived by exact
//! one-dimensional minimization for the final `w`.

use nalgebra::{DMatrix, DVector};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Default)]
pub struct HingeProblem {
    dim: usize,
    rows: Vec<Vec<f64>>,
    y: Vec<f64>,
    margin: Vec<f64>,
    weight: Vec<f64>,
    pinned_intercept: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpMethod {
    /// Interior point when `dim + 1 ≤ 64`, SMO otherwise.
    Auto,
    Smo,
    InteriorPoint,
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    /// SMO: stop when the maximal KKT violation of the dual falls below this.
    pub tol: f64,
    /// SMO iteration cap; 0 picks a size-dependent default.
    pub max_iter: usize,
    pub method: QpMethod,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions { tol: 1e-11, max_iter: 0, method: QpMethod::Auto }
    }
}

const IPM_MAX_DIM: usize = 64;

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub w: Vec<f64>,
    pub b: f64,
    pub objective: f64,
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl HingeProblem {
    pub fn new(dim: usize) -> Self {
        HingeProblem { dim, ..Default::default() }
    }

    /// Fixes `b = 0`; the dual then loses its equality constraint and is
    /// solved by single-coordinate updates instead of pairs.
    pub fn without_intercept(mut self) -> Self {
        self.pinned_intercept = true;
        self
    }

    /// Adds the term `weight · max(0, margin − y (w·x + b))`.
    pub fn push(&mut self, x: Vec<f64>, y: f64, margin: f64, weight: f64) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert!(y == 1.0 || y == -1.0);
        debug_assert!(weight >= 0.0);
        self.rows.push(x);
        self.y.push(y);
        self.margin.push(margin);
        self.weight.push(weight);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective(&self, w: &[f64], b: f64) -> f64 {
        let reg = 0.5 * dot(w, w);
        let loss: f64 = (0..self.len())
            .map(|i| {
                let v = self.margin[i] - self.y[i] * (dot(w, &self.rows[i]) + b);
                self.weight[i] * v.max(0.0)
            })
            .sum();
        reg + loss
    }

    pub fn solve(&self, opts: &QpOptions) -> QpSolution {
        let n = self.len();
        if n == 0 {
            return QpSolution {
                w: vec![0.0; self.dim],
                b: 0.0,
                objective: 0.0,
                alpha: Vec::new(),
                iterations: 0,
                converged: true,
            };
        }
        let max_iter = if opts.max_iter == 0 {
            (200 * n).max(1_000_000)
        } else {
            opts.max_iter
        };
        let interior = match opts.method {
            QpMethod::Auto => self.dim + 1 <= IPM_MAX_DIM,
            QpMethod::Smo => false,
            QpMethod::InteriorPoint => true,
        };
        let dual = |this: &Self| {
            if this.pinned_intercept {
                this.coordinate_descent(opts.tol, max_iter)
            } else {
                this.smo(opts.tol, max_iter)
            }
        };
        let (alpha, iterations, converged) = if interior {
            match self.interior_point() {
                (alpha, it, true) => (alpha, it, true),
                (_, it, false) => {
                    let (alpha, more, conv) = dual(self);
                    (alpha, it + more, conv)
                }
            }
        } else {
            dual(self)
        };

        let w = self.primal_w(&alpha);
        let b = self.best_intercept(&w);
        let mut best = (self.objective(&w, b), w, b);
        if let Some((wp, bp)) = self.polish(&alpha) {
            let op = self.objective(&wp, bp);
            if op < best.0 {
                best = (op, wp, bp);
            }
        }
        let (objective, w, b) = best;
        QpSolution { w, b, objective, alpha, iterations, converged }
    }

    fn smo(&self, tol: f64, max_iter: usize) -> (Vec<f64>, usize, bool) {
        let n = self.len();
        let (y, c, x) = (&self.y, &self.weight, &self.rows);
        let kdiag: Vec<f64> = x.iter().map(|r| dot(r, r)).collect();
        let mut alpha = vec![0.0; n];
        let mut w = vec![0.0; self.dim];
        let mut grad: Vec<f64> = self.margin.iter().map(|m| -m).collect();
        let mut iter = 0;
        let mut refreshed = false;

        loop {
            let Some((i, j)) = select_pair(y, c, &alpha, &grad, &kdiag, x, tol) else {
                // accumulated updates drift; confirm once against a fresh gradient
                if refreshed {
                    return (alpha, iter, true);
                }
                w = self.primal_w(&alpha);
                for t in 0..n {
                    grad[t] = y[t] * dot(&w, &x[t]) - self.margin[t];
                }
                refreshed = true;
                continue;
            };
            refreshed = false;
            if iter >= max_iter {
                return (alpha, iter, false);
            }
            iter += 1;

            let kij = dot(&x[i], &x[j]);
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let (ci, cj) = (c[i], c[j]);
            let (mut ai, mut aj) = (old_i, old_j);
            if y[i] != y[j] {
                let quad = (kdiag[i] + kdiag[j] + 2.0 * kij * (y[i] * y[j])).max(TAU);
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = ai - aj;
                ai += delta;
                aj += delta;
                if diff > 0.0 {
                    if aj < 0.0 {
                        aj = 0.0;
                        ai = diff;
                    }
                } else if ai < 0.0 {
                    ai = 0.0;
                    aj = -diff;
                }
                if diff > ci - cj {
                    if ai > ci {
                        ai = ci;
                        aj = ci - diff;
                    }
                } else if aj > cj {
                    aj = cj;
                    ai = cj + diff;
                }
            } else {
                let quad = (kdiag[i] + kdiag[j] - 2.0 * kij * (y[i] * y[j])).max(TAU);
                let delta = (grad[i] - grad[j]) / quad;
                let sum = ai + aj;
                ai -= delta;
                aj += delta;
                if sum > ci {
                    if ai > ci {
                        ai = ci;
                        aj = sum - ci;
                    }
                } else if aj < 0.0 {
                    aj = 0.0;
                    ai = sum;
                }
                if sum > cj {
                    if aj > cj {
                        aj = cj;
                        ai = sum - cj;
                    }
                } else if ai < 0.0 {
                    ai = 0.0;
                    aj = sum;
                }
            }
            alpha[i] = ai;
            alpha[j] = aj;

            let (di, dj) = ((ai - old_i) * y[i], (aj - old_j) * y[j]);
            let mut dw = vec![0.0; self.dim];
            for (k, v) in dw.iter_mut().enumerate() {
                *v = di * x[i][k] + dj * x[j][k];
                w[k] += *v;
            }
            for t in 0..n {
                grad[t] += y[t] * dot(&dw, &x[t]);
            }
        }
    }

    /// Mehrotra predictor-corrector on
    /// `min ½‖w‖² + Σ cᵢξᵢ  s.t.  yᵢ(w·xᵢ + b) + ξᵢ ≥ mᵢ, ξ ≥ 0`.
    /// Returns the multipliers of the margin constraints, which are the dual
    /// variables `alpha`, snapped to their bounds where complementarity
    /// identifies them.
    fn interior_point(&self) -> (Vec<f64>, usize, bool) {
        const MAX_ITER: usize = 200;
        let n_all = self.len();
        let idx: Vec<usize> = (0..n_all).filter(|&i| self.weight[i] > 0.0).collect();
        let n = idx.len();
        let mut alpha = vec![0.0; n_all];
        if n == 0 {
            return (alpha, 0, true);
        }
        let d = self.dim;
        let p = if self.pinned_intercept { d } else { d + 1 };
        let u: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| {
                let mut r: Vec<f64> = self.rows[i].iter().map(|v| self.y[i] * v).collect();
                if !self.pinned_intercept {
                    r.push(self.y[i]);
                }
                r
            })
            .collect();
        let m: Vec<f64> = idx.iter().map(|&i| self.margin[i]).collect();
        let c: Vec<f64> = idx.iter().map(|&i| self.weight[i]).collect();
        let cmax = c.iter().fold(0.0f64, |a, &v| a.max(v));
        let mmax = m.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let umax = u.iter().flatten().fold(0.0f64, |a, &v| a.max(v.abs()));

        let mut z = vec![0.0; p];
        let mut xi: Vec<f64> = m.iter().map(|v| v.max(0.0) + 1.0).collect();
        let mut s: Vec<f64> = (0..n).map(|i| xi[i] - m[i]).collect();
        let mut lam: Vec<f64> = c.iter().map(|v| 0.5 * v).collect();
        let mut mu: Vec<f64> = c.iter().map(|v| 0.5 * v).collect();

        let uz = |z: &[f64]| -> Vec<f64> { u.iter().map(|r| dot(r, z)).collect() };
        let mut converged = false;
        let mut iter = 0;
        while iter < MAX_ITER {
            iter += 1;
            let uzv = uz(&z);
            let mut r_d: Vec<f64> = z.clone();
            if !self.pinned_intercept {
                r_d[d] = 0.0;
            }
            for (r, &l) in u.iter().zip(&lam) {
                for (a, v) in r_d.iter_mut().zip(r) {
                    *a -= l * v;
                }
            }
            let r_xi: Vec<f64> = (0..n).map(|i| c[i] - lam[i] - mu[i]).collect();
            let r_p: Vec<f64> = (0..n).map(|i| uzv[i] + xi[i] - m[i] - s[i]).collect();
            let gap: f64 = (0..n).map(|i| lam[i] * s[i] + mu[i] * xi[i]).sum();
            let tau = gap / (2 * n) as f64;

            let primal = 0.5 * dot(&z[..d], &z[..d]) + dot(&c, &xi);
            let inf_d = r_d.iter().chain(&r_xi).fold(0.0f64, |a, v| a.max(v.abs()));
            let inf_p = r_p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if gap <= 1e-14 * (1.0 + primal.abs())
                && inf_d <= 1e-9 * (1.0 + cmax * umax)
                && inf_p <= 1e-9 * (1.0 + mmax)
            {
                converged = true;
                break;
            }

            let dinv: Vec<f64> = (0..n).map(|i| 1.0 / (xi[i] / mu[i] + s[i] / lam[i])).collect();
            let mut mat = DMatrix::<f64>::zeros(p, p);
            for k in 0..d {
                mat[(k, k)] = 1.0;
            }
            for (r, &w) in u.iter().zip(&dinv) {
                for a in 0..p {
                    let ra = w * r[a];
                    if ra == 0.0 {
                        continue;
                    }
                    for b in a..p {
                        mat[(a, b)] += ra * r[b];
                    }
                }
            }
            for a in 0..p {
                for b in 0..a {
                    mat[(a, b)] = mat[(b, a)];
                }
            }
            let chol = mat.clone().cholesky();

            let solve = |r_lam: &[f64], r_mu: &[f64]| -> Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
                let g: Vec<f64> = (0..n)
                    .map(|i| -r_p[i] + (r_mu[i] + xi[i] * r_xi[i]) / mu[i] - r_lam[i] / lam[i])
                    .collect();
                let mut rhs = DVector::<f64>::from_iterator(p, r_d.iter().map(|v| -v));
                for (i, r) in u.iter().enumerate() {
                    let gi = g[i] * dinv[i];
                    for a in 0..p {
                        rhs[a] += r[a] * gi;
                    }
                }
                let dz = match &chol {
                    Some(ch) => ch.solve(&rhs),
                    None => mat.clone().svd(true, true).solve(&rhs, 1e-15).ok()?,
                };
                let dz: Vec<f64> = dz.iter().copied().collect();
                let udz = uz(&dz);
                let dlam: Vec<f64> = (0..n).map(|i| (g[i] - udz[i]) * dinv[i]).collect();
                let dxi: Vec<f64> = (0..n)
                    .map(|i| (-r_mu[i] - xi[i] * r_xi[i] + xi[i] * dlam[i]) / mu[i])
                    .collect();
                let ds: Vec<f64> = (0..n).map(|i| (-r_lam[i] - s[i] * dlam[i]) / lam[i]).collect();
                let dmu: Vec<f64> = (0..n).map(|i| r_xi[i] - dlam[i]).collect();
                Some((dz, dxi, ds, dlam, dmu))
            };
            let max_step = |v: &[f64], dv: &[f64]| -> f64 {
                v.iter()
                    .zip(dv)
                    .filter(|(_, &dv)| dv < 0.0)
                    .map(|(&v, &dv)| -v / dv)
                    .fold(1.0f64, f64::min)
            };

            let r_lam: Vec<f64> = (0..n).map(|i| lam[i] * s[i]).collect();
            let r_mu: Vec<f64> = (0..n).map(|i| mu[i] * xi[i]).collect();
            let Some((_, dxi, ds, dlam, dmu)) = solve(&r_lam, &r_mu) else {
                break;
            };
            let ap = max_step(&xi, &dxi).min(max_step(&s, &ds));
            let ad = max_step(&lam, &dlam).min(max_step(&mu, &dmu));
            let a_aff = ap.min(ad);
            let gap_aff: f64 = (0..n)
                .map(|i| {
                    (lam[i] + a_aff * dlam[i]) * (s[i] + a_aff * ds[i])
                        + (mu[i] + a_aff * dmu[i]) * (xi[i] + a_aff * dxi[i])
                })
                .sum();
            let sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);
            let r_lam: Vec<f64> = (0..n).map(|i| r_lam[i] + dlam[i] * ds[i] - sigma * tau).collect();
            let r_mu: Vec<f64> = (0..n).map(|i| r_mu[i] + dmu[i] * dxi[i] - sigma * tau).collect();
            let Some((dz, dxi, ds, dlam, dmu)) = solve(&r_lam, &r_mu) else {
                break;
            };
            let ap = max_step(&xi, &dxi).min(max_step(&s, &ds));
            let ad = max_step(&lam, &dlam).min(max_step(&mu, &dmu));
            let mut step = (0.995 * ap.min(ad)).min(1.0);
            if !step.is_finite()
                || dz.iter().chain(&dxi).chain(&ds).chain(&dlam).chain(&dmu).any(|v| !v.is_finite())
            {
                break;
            }
            // stay in a wide neighbourhood of the central path
            for _ in 0..30 {
                let prods: Vec<f64> = (0..n)
                    .flat_map(|i| {
                        [
                            (lam[i] + step * dlam[i]) * (s[i] + step * ds[i]),
                            (mu[i] + step * dmu[i]) * (xi[i] + step * dxi[i]),
                        ]
                    })
                    .collect();
                let avg = prods.iter().sum::<f64>() / prods.len() as f64;
                if prods.iter().all(|&v| v >= 1e-3 * avg) {
                    break;
                }
                step *= 0.5;
            }
            for (a, v) in z.iter_mut().zip(&dz) {
                *a += step * v;
            }
            for i in 0..n {
                xi[i] += step * dxi[i];
                s[i] += step * ds[i];
                lam[i] += step * dlam[i];
                mu[i] += step * dmu[i];
            }
        }

        for (k, &i) in idx.iter().enumerate() {
            alpha[i] = if lam[k] < s[k] {
                0.0
            } else if mu[k] < xi[k] {
                c[k]
            } else {
                lam[k]
            };
        }
        (alpha, iter, converged)
    }

    fn coordinate_descent(&self, tol: f64, max_iter: usize) -> (Vec<f64>, usize, bool) {
        let n = self.len();
        let kdiag: Vec<f64> = self.rows.iter().map(|r| dot(r, r)).collect();
        let mut alpha = vec![0.0; n];
        let mut w = vec![0.0; self.dim];
        let mut iter = 0;
        loop {
            let mut worst = 0.0f64;
            for i in 0..n {
                let g = self.y[i] * dot(&w, &self.rows[i]) - self.margin[i];
                let pg = if alpha[i] <= 0.0 {
                    g.min(0.0)
                } else if alpha[i] >= self.weight[i] {
                    g.max(0.0)
                } else {
                    g
                };
                worst = worst.max(pg.abs());
                if pg == 0.0 || kdiag[i] == 0.0 {
                    continue;
                }
                let new = (alpha[i] - g / kdiag[i]).clamp(0.0, self.weight[i]);
                let d = (new - alpha[i]) * self.y[i];
                alpha[i] = new;
                for (wk, xk) in w.iter_mut().zip(&self.rows[i]) {
                    *wk += d * xk;
                }
            }
            iter += 1;
            if worst < tol {
                return (alpha, iter, true);
            }
            if iter >= max_iter {
                return (alpha, iter, false);
            }
        }
    }

    fn primal_w(&self, alpha: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.dim];
        for (t, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let s = a * self.y[t];
                for (wk, xk) in w.iter_mut().zip(&self.rows[t]) {
                    *wk += s * xk;
                }
            }
        }
        w
    }

    /// Exact minimizer over `b` of the loss for a fixed `w`.
    ///
    /// The right-derivative in `b` is `-Σ_{y=+1} c + Σ_{t ≤ b} c` over the
    /// breakpoints `t`, so the minimizer is a weighted median. On a flat
    /// stretch the midpoint is returned, or its finite end if unbounded.
    pub fn best_intercept(&self, w: &[f64]) -> f64 {
        if self.pinned_intercept {
            return 0.0;
        }
        let mut bps: Vec<(f64, f64)> = Vec::with_capacity(self.len());
        let mut lead = 0.0;
        let mut total = 0.0;
        for i in 0..self.len() {
            let c = self.weight[i];
            if c == 0.0 {
                continue;
            }
            let s = dot(w, &self.rows[i]);
            if self.y[i] > 0.0 {
                lead += c;
                bps.push((self.margin[i] - s, c));
            } else {
                bps.push((-self.margin[i] - s, c));
            }
            total += c;
        }
        if bps.is_empty() {
            return 0.0;
        }
        bps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let flat_tol = 1e-12 * total;
        if lead <= flat_tol {
            return bps[0].0;
        }
        let mut cum = 0.0;
        let mut k = 0;
        while k < bps.len() {
            let t = bps[k].0;
            while k < bps.len() && bps[k].0 == t {
                cum += bps[k].1;
                k += 1;
            }
            if (cum - lead).abs() <= flat_tol {
                return match bps.get(k) {
                    Some(&(next, _)) => 0.5 * (t + next),
                    None => t,
                };
            }
            if cum > lead {
                return t;
            }
        }
        bps[bps.len() - 1].0
    }

    /// Re-solves the equality system implied by the free set of `alpha`.
    fn polish(&self, alpha: &[f64]) -> Option<(Vec<f64>, f64)> {
        let free: Vec<usize> = (0..self.len())
            .filter(|&i| alpha[i] > 0.0 && alpha[i] < self.weight[i])
            .collect();
        if free.is_empty() {
            return None;
        }
        let m = free.len();
        let with_b = !self.pinned_intercept;
        let size = if with_b { m + 1 } else { m };
        let mut w_bound = vec![0.0; self.dim];
        let mut bound_sum = 0.0;
        for i in 0..self.len() {
            if alpha[i] > 0.0 && alpha[i] >= self.weight[i] {
                let s = self.weight[i] * self.y[i];
                bound_sum += s;
                for (wk, xk) in w_bound.iter_mut().zip(&self.rows[i]) {
                    *wk += s * xk;
                }
            }
        }
        let mut a = DMatrix::<f64>::zeros(size, size);
        let mut rhs = DVector::<f64>::zeros(size);
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                a[(r, s)] = self.y[j] * dot(&self.rows[i], &self.rows[j]);
            }
            if with_b {
                a[(r, m)] = 1.0;
            }
            rhs[r] = self.y[i] * self.margin[i] - dot(&w_bound, &self.rows[i]);
        }
        if with_b {
            for (s, &j) in free.iter().enumerate() {
                a[(m, s)] = self.y[j];
            }
            rhs[m] = -bound_sum;
        }

        if a.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        let scale = a.amax().max(1.0);
        let sol = a.clone().svd(true, true).solve(&rhs, 1e-13 * scale).ok()?;
        let resid = (&a * &sol - &rhs).amax();
        if !resid.is_finite() || resid > 1e-9 * rhs.amax().max(1.0) {
            return None;
        }
        let mut w = w_bound;
        for (s, &j) in free.iter().enumerate() {
            let aj = sol[s];
            if aj < -1e-12 * self.weight[j] || aj > self.weight[j] * (1.0 + 1e-12) {
                return None;
            }
            for (wk, xk) in w.iter_mut().zip(&self.rows[j]) {
                *wk += aj * self.y[j] * xk;
            }
        }
        let b = self.best_intercept(&w);
        Some((w, b))
    }
}

fn select_pair(
    y: &[f64],
    c: &[f64],
    alpha: &[f64],
    grad: &[f64],
    kdiag: &[f64],
    x: &[Vec<f64>],
    tol: f64,
) -> Option<(usize, usize)> {
    let n = y.len();
    let mut gmax = f64::NEG_INFINITY;
    let mut up = None;
    for t in 0..n {
        if y[t] > 0.0 {
            if alpha[t] < c[t] && -grad[t] >= gmax {
                gmax = -grad[t];
                up = Some(t);
            }
        } else if alpha[t] > 0.0 && grad[t] >= gmax {
            gmax = grad[t];
            up = Some(t);
        }
    }
    let i = up?;
    let mut gmax2 = f64::NEG_INFINITY;
    let mut low = None;
    let mut best = f64::INFINITY;
    for t in 0..n {
        let gd = if y[t] > 0.0 {
            if alpha[t] <= 0.0 {
                continue;
            }
            gmax2 = gmax2.max(grad[t]);
            gmax + grad[t]
        } else {
            if alpha[t] >= c[t] {
                continue;
            }
            gmax2 = gmax2.max(-grad[t]);
            gmax - grad[t]
        };
        if gd > 0.0 {
            let quad = (kdiag[i] + kdiag[t] - 2.0 * dot(&x[i], &x[t])).max(TAU);
            let obj = -(gd * gd) / quad;
            if obj <= best {
                best = obj;
                low = Some(t);
            }
        }
    }
    if gmax + gmax2 < tol {
        return None;
    }
    low.map(|j| (i, j))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
