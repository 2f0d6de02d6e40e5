//! Population-level view of top-quantile classification in two dimensions.
//!
//! A linear classifier `(w, b)` selects the halfspace `w·x + b > 0`. Under a
//! two-component Gaussian mixture, fixing the selected mass to `q` determines
//! `b` for each direction, so precision becomes a function of the direction
//! alone. The optimal direction generally changes with `q`; at an optimum the
//! gradients of the two component masses are collinear.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture")]
pub struct GaussianMixture {
    lambda: f64,
    mean_pos: Vec2,
    mean_neg: Vec2,
    cov_pos: Mat2,
    cov_neg: Mat2,
}

#[derive(Deserialize)]
struct RawMixture {
    lambda: f64,
    mean_pos: Vec2,
    mean_neg: Vec2,
    cov_pos: Mat2,
    cov_neg: Mat2,
}

impl TryFrom<RawMixture> for GaussianMixture {
    type Error = Error;

    fn try_from(r: RawMixture) -> Result<Self> {
        GaussianMixture::new(r.lambda, r.mean_pos, r.mean_neg, r.cov_pos, r.cov_neg)
    }
}

fn check_cov(cov: &Mat2, name: &str) -> Result<()> {
    if cov.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::arg(format!("{name} has non-finite entries")));
    }
    let off = (cov[0][1] - cov[1][0]).abs();
    if off > 1e-12 * (1.0 + cov[0][1].abs().max(cov[1][0].abs())) {
        return Err(Error::arg(format!("{name} is not symmetric")));
    }
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    if !(cov[0][0] > 0.0 && det > 0.0) {
        return Err(Error::arg(format!("{name} is not positive definite")));
    }
    Ok(())
}

impl GaussianMixture {
    pub fn new(lambda: f64, mean_pos: Vec2, mean_neg: Vec2, cov_pos: Mat2, cov_neg: Mat2) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::arg(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        if mean_pos.iter().chain(&mean_neg).any(|v| !v.is_finite()) {
            return Err(Error::arg("means must be finite"));
        }
        check_cov(&cov_pos, "cov_pos")?;
        check_cov(&cov_neg, "cov_neg")?;
        Ok(GaussianMixture { lambda, mean_pos, mean_neg, cov_pos, cov_neg })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn positive(&self) -> (Vec2, Mat2) {
        (self.mean_pos, self.cov_pos)
    }

    pub fn negative(&self) -> (Vec2, Mat2) {
        (self.mean_neg, self.cov_neg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSolution {
    /// Direction angle in `[0, 2π)`.
    pub theta: f64,
    pub w: Vec2,
    pub b: f64,
    pub q: f64,
    pub precision: f64,
    /// `None` when a component-mass gradient vanishes at the solution.
    pub kkt_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub q1: f64,
    pub q2: f64,
    pub angle_degrees: f64,
    pub solutions: [QuantileSolution; 2],
}

impl TheoremReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const DEMO_GRID: usize = 720;
const THETA_TOL: f64 = 1e-6;
const TIE_TOL: f64 = 1e-12;

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn standardized(w: Vec2, b: f64, mean: Vec2, cov: &Mat2) -> Result<(f64, f64, Vec2)> {
    if w == [0.0, 0.0] {
        return Err(Error::arg("w must be nonzero"));
    }
    let sw = [
        cov[0][0] * w[0] + cov[0][1] * w[1],
        cov[1][0] * w[0] + cov[1][1] * w[1],
    ];
    let var = w[0] * sw[0] + w[1] * sw[1];
    let sd = var.sqrt();
    let t = (w[0] * mean[0] + w[1] * mean[1] + b) / sd;
    Ok((t, sd, sw))
}

/// Gaussian mass of `{x : w·x + b > 0}`.
pub fn region_mass(w: Vec2, b: f64, mean: Vec2, cov: &Mat2) -> Result<f64> {
    let (t, _, _) = standardized(w, b, mean, cov)?;
    Ok(phi(t))
}

/// Gradient of [`region_mass`] with respect to `(w₁, w₂, b)`.
pub fn region_mass_gradient(w: Vec2, b: f64, mean: Vec2, cov: &Mat2) -> Result<[f64; 3]> {
    let (t, sd, sw) = standardized(w, b, mean, cov)?;
    let f = density(t);
    let num = t * sd;
    let dt = |k: usize| mean[k] / sd - num * sw[k] / (sd * sd * sd);
    Ok([f * dt(0), f * dt(1), f / sd])
}

/// Central finite-difference gradient of [`region_mass`] over `(w₁, w₂, b)`.
pub fn region_mass_gradient_fd(w: Vec2, b: f64, mean: Vec2, cov: &Mat2, step: f64) -> Result<[f64; 3]> {
    if !(step > 0.0) {
        return Err(Error::arg("finite-difference step must be positive"));
    }
    let f = |w: Vec2, b: f64| region_mass(w, b, mean, cov);
    Ok([
        (f([w[0] + step, w[1]], b)? - f([w[0] - step, w[1]], b)?) / (2.0 * step),
        (f([w[0], w[1] + step], b)? - f([w[0], w[1] - step], b)?) / (2.0 * step),
        (f(w, b + step)? - f(w, b - step)?) / (2.0 * step),
    ])
}

pub fn mixture_mass(w: Vec2, b: f64, mix: &GaussianMixture) -> Result<f64> {
    let pos = region_mass(w, b, mix.mean_pos, &mix.cov_pos)?;
    let neg = region_mass(w, b, mix.mean_neg, &mix.cov_neg)?;
    Ok(mix.lambda * pos + (1.0 - mix.lambda) * neg)
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::arg(format!("q must lie in (0, 1), got {q}")));
    }
    Ok(())
}

/// The intercept at which the selected region holds mixture mass `q`,
/// found by bisection down to adjacent floating-point values.
pub fn quantile_intercept(w: Vec2, mix: &GaussianMixture, q: f64) -> Result<f64> {
    check_q(q)?;
    let mass = |b: f64| mixture_mass(w, b, mix);
    let scale = {
        let (_, sp, _) = standardized(w, 0.0, mix.mean_pos, &mix.cov_pos)?;
        let (_, sn, _) = standardized(w, 0.0, mix.mean_neg, &mix.cov_neg)?;
        let reach = |m: Vec2| (w[0] * m[0] + w[1] * m[1]).abs();
        1.0 + sp.max(sn) + reach(mix.mean_pos).max(reach(mix.mean_neg))
    };
    let (mut lo, mut hi) = (-scale, scale);
    while mass(lo)? >= q {
        lo *= 2.0;
    }
    while mass(hi)? <= q {
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (dl, dh) = ((mass(lo)? - q).abs(), (mass(hi)? - q).abs());
    Ok(if dl <= dh { lo } else { hi })
}

/// Precision `λ·μ₊(R) / q` of the direction `w` at selected mass `q`.
pub fn precision_of(w: Vec2, mix: &GaussianMixture, q: f64) -> Result<f64> {
    let b = quantile_intercept(w, mix, q)?;
    Ok(mix.lambda * region_mass(w, b, mix.mean_pos, &mix.cov_pos)? / q)
}

fn direction(theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [c, s]
}

/// `(θ, precision)` over an even grid of directions.
pub fn precision_curve(mix: &GaussianMixture, q: f64, grid_size: usize) -> Result<Vec<(f64, f64)>> {
    (0..grid_size)
        .map(|i| {
            let theta = TAU * i as f64 / grid_size as f64;
            Ok((theta, precision_of(direction(theta), mix, q)?))
        })
        .collect()
}

/// Selected negative mass relative to `q`, i.e. `1 − precision`, computed
/// from the negative component directly so it keeps full relative accuracy
/// when precision is within rounding of 1.
fn false_share(w: Vec2, mix: &GaussianMixture, q: f64) -> Result<f64> {
    let b = quantile_intercept(w, mix, q)?;
    Ok((1.0 - mix.lambda) * region_mass(w, b, mix.mean_neg, &mix.cov_neg)? / q)
}

/// Maximizes precision over unit directions: a grid scan followed by
/// golden-section refinement around the best grid point. Ties go to the
/// lowest angle.
pub fn optimize_direction(mix: &GaussianMixture, q: f64, grid_size: usize) -> Result<QuantileSolution> {
    check_q(q)?;
    if grid_size < 36 {
        return Err(Error::arg(format!("grid_size must be at least 36, got {grid_size}")));
    }
    let f = |t: f64| false_share(direction(t), mix, q);
    let better = |new: f64, old: f64| new < old - TIE_TOL * old;
    let h = TAU / grid_size as f64;
    let mut theta = 0.0;
    let mut best = f(0.0)?;
    for i in 1..grid_size {
        let t = h * i as f64;
        let v = f(t)?;
        if better(v, best) {
            theta = t;
            best = v;
        }
    }

    let (mut a, mut b) = (theta - h, theta + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > THETA_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let refined = 0.5 * (a + b);
    if better(f(refined)?, best) {
        theta = refined.rem_euclid(TAU);
    }
    let w = direction(theta);
    let b = quantile_intercept(w, mix, q)?;
    let precision = mix.lambda * region_mass(w, b, mix.mean_pos, &mix.cov_pos)? / q;
    let kkt_residual = match kkt_collinearity_residual(w, b, mix, DEFAULT_FD_STEP) {
        Ok(r) => Some(r),
        Err(Error::DegenerateGradient(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(QuantileSolution { theta, w, b, q, precision, kkt_residual })
}

/// Norm of the part of `∇μ₊` orthogonal to `∇μ₋`, relative to `‖∇μ₊‖`,
/// with both gradients over `(w, b)` taken by central differences.
pub fn kkt_collinearity_residual(w: Vec2, b: f64, mix: &GaussianMixture, fd_step: f64) -> Result<f64> {
    let gp = region_mass_gradient_fd(w, b, mix.mean_pos, &mix.cov_pos, fd_step)?;
    let gn = region_mass_gradient_fd(w, b, mix.mean_neg, &mix.cov_neg, fd_step)?;
    let norm = |g: &[f64; 3]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (np, nn) = (norm(&gp), norm(&gn));
    if np < 1e-12 {
        return Err(Error::DegenerateGradient(np));
    }
    if nn < 1e-12 {
        return Err(Error::DegenerateGradient(nn));
    }
    let proj: f64 = gp.iter().zip(&gn).map(|(a, b)| a * b / nn).sum();
    let orth: Vec<f64> = gp.iter().zip(&gn).map(|(a, b)| a - proj * b / nn).collect();
    Ok(orth.iter().map(|v| v * v).sum::<f64>().sqrt() / np)
}

/// Optimal directions at two quantiles and the angle between them.
pub fn theorem_demo(mix: &GaussianMixture, q1: f64, q2: f64) -> Result<TheoremReport> {
    if q1 == q2 {
        return Err(Error::arg("the two quantiles must differ"));
    }
    let s1 = optimize_direction(mix, q1, DEMO_GRID)?;
    let s2 = optimize_direction(mix, q2, DEMO_GRID)?;
    let cos = (s1.w[0] * s2.w[0] + s1.w[1] * s2.w[1]).clamp(-1.0, 1.0);
    Ok(TheoremReport {
        q1,
        q2,
        angle_degrees: cos.acos().to_degrees(),
        solutions: [s1, s2],
    })
}

/// CSV with columns `theta,precision_q1,precision_q2`.
pub fn demo_curves_csv(mix: &GaussianMixture, q1: f64, q2: f64, grid_size: usize) -> Result<String> {
    let c1 = precision_curve(mix, q1, grid_size)?;
    let c2 = precision_curve(mix, q2, grid_size)?;
    let mut out = String::from("theta,precision_q1,precision_q2\n");
    for ((t, p1), (_, p2)) in c1.iter().zip(&c2) {
        writeln!(out, "{t},{p1},{p2}").unwrap();
    }
    Ok(out)
}
