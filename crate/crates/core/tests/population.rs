use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ttk_core::population::{
    kkt_collinearity_residual, mixture_mass, optimize_direction, precision_of, quantile_intercept, region_mass,
    region_mass_gradient, region_mass_gradient_fd, theorem_demo, GaussianMixture, Mat2, Vec2, DEFAULT_FD_STEP,
};

const I: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

fn anisotropic() -> GaussianMixture {
    GaussianMixture::new(0.3, [1.0, 0.0], [0.0, 0.0], [[1.0, 0.0], [0.0, 0.1]], [[0.1, 0.0], [0.0, 1.0]]).unwrap()
}

fn random_cov(rng: &mut ChaCha8Rng) -> Mat2 {
    let a = [[rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)], [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)]];
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * a[j][0] + a[i][1] * a[j][1] + if i == j { 0.1 } else { 0.0 };
        }
    }
    c
}

fn random_mixture(rng: &mut ChaCha8Rng) -> GaussianMixture {
    let mut mean = || [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    let (mp, mn) = (mean(), mean());
    let (cp, cn) = (random_cov(rng), random_cov(rng));
    GaussianMixture::new(rng.gen_range(0.1..0.9), mp, mn, cp, cn).unwrap()
}

fn sample(rng: &mut ChaCha8Rng, mean: Vec2, cov: &Mat2) -> Vec2 {
    let l00 = cov[0][0].sqrt();
    let l10 = cov[1][0] / l00;
    let l11 = (cov[1][1] - l10 * l10).sqrt();
    let z0: f64 = StandardNormal.sample(rng);
    let z1: f64 = StandardNormal.sample(rng);
    [mean[0] + l00 * z0, mean[1] + l10 * z0 + l11 * z1]
}

#[test]
fn region_mass_against_normal_cdf() {
    use statrs::distribution::{ContinuousCDF, Normal};
    let n = Normal::new(0.0, 1.0).unwrap();
    let v = region_mass([1.0, 0.0], -1.0, [0.0, 0.0], &I).unwrap();
    assert!((v - n.cdf(-1.0)).abs() < 1e-15);
    assert!((v - 0.158655).abs() < 1e-6);
}

#[test]
fn mixture_mass_against_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let mix = random_mixture(&mut rng);
        let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let b = rng.gen_range(-1.0..1.0);
        let n = 1_000_000;
        let (mp, cp) = mix.positive();
        let (mn, cn) = mix.negative();
        let mut hits = 0usize;
        for _ in 0..n {
            let x = if rng.gen::<f64>() < mix.lambda() { sample(&mut rng, mp, &cp) } else { sample(&mut rng, mn, &cn) };
            if w[0] * x[0] + w[1] * x[1] + b > 0.0 {
                hits += 1;
            }
        }
        let est = hits as f64 / n as f64;
        let se = (est * (1.0 - est) / n as f64).sqrt();
        let exact = mixture_mass(w, b, &mix).unwrap();
        assert!((est - exact).abs() <= 3.0 * se + 1e-6, "{est} vs {exact} (se {se})");
    }
}

#[test]
fn precision_against_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..4 {
        let mix = random_mixture(&mut rng);
        let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let q = rng.gen_range(0.05..0.6);
        let b = quantile_intercept(w, &mix, q).unwrap();
        let (mp, cp) = mix.positive();
        let (mn, cn) = mix.negative();
        let (mut selected, mut positive) = (0usize, 0usize);
        for _ in 0..1_000_000 {
            let is_pos = rng.gen::<f64>() < mix.lambda();
            let x = if is_pos { sample(&mut rng, mp, &cp) } else { sample(&mut rng, mn, &cn) };
            if w[0] * x[0] + w[1] * x[1] + b > 0.0 {
                selected += 1;
                positive += is_pos as usize;
            }
        }
        let est = positive as f64 / selected as f64;
        let se = (est * (1.0 - est) / selected as f64).sqrt();
        let exact = precision_of(w, &mix, q).unwrap();
        assert!((est - exact).abs() <= 3.0 * se + 1e-6, "{est} vs {exact} (se {se})");
    }
}

#[test]
fn analytic_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let cov = random_cov(&mut rng);
        let mean = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let b = rng.gen_range(-1.0..1.0);
        let g = region_mass_gradient(w, b, mean, &cov).unwrap();
        let fd = region_mass_gradient_fd(w, b, mean, &cov, DEFAULT_FD_STEP).unwrap();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff = g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!(diff <= 1e-5 * norm.max(1e-12), "{g:?} vs {fd:?}");
    }
}

#[test]
fn intercept_round_trip_on_random_mixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let mix = random_mixture(&mut rng);
        let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        for q in [0.001, 0.05, 0.5, 0.95] {
            let b = quantile_intercept(w, &mix, q).unwrap();
            assert!((mixture_mass(w, b, &mix).unwrap() - q).abs() <= 1e-9);
        }
    }
}

/// Mixtures whose optimum leaves a component-mass gradient below the
/// degeneracy threshold have no defined residual; they are counted and
/// replaced.
#[test]
fn optima_satisfy_collinearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut checked, mut degenerate) = (0, 0);
    while checked < 20 {
        let mix = random_mixture(&mut rng);
        let q = rng.gen_range(0.05..0.5);
        let s = optimize_direction(&mix, q, 360).unwrap();
        assert!((s.w[0].hypot(s.w[1]) - 1.0).abs() <= 1e-9);
        assert!((mixture_mass(s.w, s.b, &mix).unwrap() - q).abs() <= 1e-6);
        match s.kkt_residual {
            Some(r) => {
                assert!(r <= 1e-2, "residual {r} for {mix:?} at q = {q}");
                checked += 1;
            }
            None => degenerate += 1,
        }
    }
    assert!(degenerate <= 5, "{degenerate} degenerate optima");
}

#[test]
fn non_optimal_points_violate_collinearity() {
    let mix = anisotropic();
    let best = optimize_direction(&mix, 0.2, 360).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut tested = 0;
    while tested < 10 {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let w = [theta.cos(), theta.sin()];
        // stay away from the optimum and from its mirror image
        if precision_of(w, &mix, 0.2).unwrap() > best.precision - 0.05 || theta.sin().abs() < 0.2 {
            continue;
        }
        let b = quantile_intercept(w, &mix, 0.2).unwrap();
        let r = kkt_collinearity_residual(w, b, &mix, DEFAULT_FD_STEP).unwrap();
        assert!(r > 0.1, "theta {theta}: residual {r}");
        tested += 1;
    }
}

#[test]
fn equal_isotropic_covariances_keep_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let mp = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let mn = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let s2 = rng.gen_range(0.3..2.0);
        let cov = [[s2, 0.0], [0.0, s2]];
        let mix = GaussianMixture::new(rng.gen_range(0.2..0.8), mp, mn, cov, cov).unwrap();
        let (q1, q2) = (rng.gen_range(0.02..0.3), rng.gen_range(0.4..0.9));
        let r = theorem_demo(&mix, q1, q2).unwrap();
        assert!(r.angle_degrees <= 1.0, "{}", r.angle_degrees);
        // the likelihood-ratio direction
        let d = [mp[0] - mn[0], mp[1] - mn[1]];
        let n = d[0].hypot(d[1]);
        for s in &r.solutions {
            let cos = (s.w[0] * d[0] + s.w[1] * d[1]) / n;
            assert!(cos.clamp(-1.0, 1.0).acos().to_degrees() <= 1.0);
        }
    }
}

#[test]
fn grid_scan_never_beats_optimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let mix = random_mixture(&mut rng);
        let s = optimize_direction(&mix, 0.1, 72).unwrap();
        for i in 0..3600 {
            let t = std::f64::consts::TAU * i as f64 / 3600.0;
            let p = precision_of([t.cos(), t.sin()], &mix, 0.1).unwrap();
            assert!(p <= s.precision + 1e-6, "grid {p} vs optimizer {}", s.precision);
        }
    }
}

#[test]
fn reflection_symmetric_mixture_has_axis_optima() {
    // both means on the first axis and diagonal covariances: precision is an
    // even function of θ, and both optima land on the axis
    let r = theorem_demo(&anisotropic(), 0.05, 0.5).unwrap();
    for s in &r.solutions {
        assert!(s.w[1].abs() < 1e-3, "{s:?}");
    }
}

#[test]
fn asymmetric_mixture_turns_with_quantile() {
    let mix = GaussianMixture::new(0.3, [1.0, 0.0], [0.0, 0.0], [[0.1, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 0.1]]).unwrap();
    let r = theorem_demo(&mix, 0.05, 0.5).unwrap();
    assert!(r.angle_degrees >= 5.0, "{}", r.angle_degrees);
}
