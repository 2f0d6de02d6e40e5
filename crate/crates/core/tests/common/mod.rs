#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttk_core::svm::SvmConfig;
use ttk_core::ttk::threshold_init;
use ttk_core::{Dataset, Instance, Label, LinearModel, TransductiveProblem};

/// Small random problem: d ≤ 3, |train| ≤ 10, |test| ≤ 8, k ≤ 4. Labels come
/// from a random hyperplane plus noise; the first two training points are
/// forced to opposite classes. Test labels are kept for evaluation.
pub fn random_problem(seed: u64) -> TransductiveProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(1..=3);
    let ntr = rng.gen_range(4..=10);
    let nte = rng.gen_range(2..=8);
    let k = rng.gen_range(1..=4.min(nte - 1));
    let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut draw = |n: usize, force: bool| -> Vec<Instance> {
        (0..n)
            .map(|i| {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let s: f64 = x.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() + rng.gen_range(-0.7..0.7);
                let pos = if force && i < 2 { i == 0 } else { s > 0.0 };
                Instance::from_dense(&x, Some(if pos { Label::Pos } else { Label::Neg })).unwrap()
            })
            .collect()
    };
    let train = Dataset::with_dim(draw(ntr, true), d).unwrap();
    let test = Dataset::with_dim(draw(nte, false), d).unwrap();
    let c = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
    TransductiveProblem::new(train, test, k, c).unwrap()
}

/// The threshold-SVM start, or `None` when the SVM weight vanishes or the
/// k-th and (k+1)-th test scores tie.
pub fn usable_start(problem: &TransductiveProblem) -> Option<LinearModel> {
    let init = threshold_init(problem, &SvmConfig::default()).ok()?;
    let wmax = init.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (wmax >= 1e-8).then_some(init)
}

pub fn objective_at(problem: &TransductiveProblem, w: &[f64], b: f64) -> f64 {
    let mut loss = 0.0;
    for x in problem.train.instances() {
        let y = x.label().unwrap().sign();
        let s = x.dot(w) + b;
        loss += (1.0 - y * s).max(0.0);
    }
    0.5 * w.iter().map(|v| v * v).sum::<f64>() + problem.c * loss
}

pub fn positives_at(problem: &TransductiveProblem, w: &[f64], b: f64) -> usize {
    problem.test.instances().iter().filter(|x| x.dot(w) + b > 0.0).count()
}
