//! The two-dimensional figure scenario: two elongated Gaussian clusters and
//! a small off-axis pocket of positives. The accuracy-optimal boundary,
//! shifted to select the top `k` test instances, lands in a mixed region,
//! while some rotated boundary selects only positives.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{Dataset, Instance, Label, TransductiveProblem};
use crate::error::{Error, Result};
use crate::linear_model::{adjust_intercept, precision_at_k, top_k_of_scores};
use crate::svm::{train_svm, SvmConfig};

pub const FIGURE_K: usize = 4;
const PER_SPLIT_POS: usize = 22;
const PER_SPLIT_NEG: usize = 18;
const MAX_ATTEMPTS: usize = 2_000;
const SCAN_DIRECTIONS: usize = 720;

#[derive(Debug, Clone, Copy)]
struct Cluster {
    mean: [f64; 2],
    /// Standard deviations along the rotated axes.
    sd: [f64; 2],
    /// Rotation of the first axis, in radians.
    angle: f64,
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    pos: Cluster,
    neg: Cluster,
    pocket: Cluster,
    /// Positives per split drawn from the pocket.
    pocket_size: usize,
    tail: Cluster,
    /// Negatives per split drawn from the tail.
    tail_size: usize,
}

const FIGURE: Geometry = Geometry {
    pos: Cluster {
        mean: [1.6111476386754247, 0.2586348907303213],
        sd: [0.44617768581863476, 1.383144685210954],
        angle: -0.33835955657968064,
    },
    neg: Cluster {
        mean: [-0.9755934692000499, 0.387668348009917],
        sd: [0.5325804785624488, 2.0576818445310785],
        angle: 0.3752573633666416,
    },
    pocket: Cluster {
        mean: [2.9480377050017537, 1.7763061141699525],
        sd: [0.2780053818614332, 0.2247677709354911],
        angle: 0.0,
    },
    pocket_size: 4,
    tail: Cluster {
        mean: [2.06166733134545, -1.2945767184817845],
        sd: [0.2202573622941427, 0.220240551624138],
        angle: 0.0,
    },
    tail_size: 3,
};

impl Cluster {
    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        let (u, v) = (a * self.sd[0], b * self.sd[1]);
        let (s, c) = self.angle.sin_cos();
        [self.mean[0] + c * u - s * v, self.mean[1] + s * u + c * v]
    }
}

/// Generates the figure scenario: 40 training and 40 test instances, each
/// split holding 22 positives and 18 negatives, with `k = 4` and `C = 1`.
/// Test labels are kept for evaluation.
pub fn make_synthetic_figure(seed: u64) -> Result<TransductiveProblem> {
    make_synthetic_with(seed, &FIGURE)
}

fn make_synthetic_with(seed: u64, geometry: &Geometry) -> Result<TransductiveProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let train = draw_split(&mut rng, geometry);
        let test = draw_split(&mut rng, geometry);
        let problem = TransductiveProblem::new(train, test, FIGURE_K, 1.0)?;
        if shows_gap(&problem)? {
            return Ok(problem);
        }
    }
    Err(Error::arg(format!(
        "no figure scenario found for seed {seed} in {MAX_ATTEMPTS} attempts"
    )))
}

fn draw_split(rng: &mut ChaCha8Rng, g: &Geometry) -> Dataset {
    let mut points: Vec<([f64; 2], Label)> = Vec::with_capacity(PER_SPLIT_POS + PER_SPLIT_NEG);
    for i in 0..PER_SPLIT_POS {
        let cluster = if i < g.pocket_size { &g.pocket } else { &g.pos };
        points.push((cluster.sample(rng), Label::Pos));
    }
    for i in 0..PER_SPLIT_NEG {
        let cluster = if i < g.tail_size { &g.tail } else { &g.neg };
        points.push((cluster.sample(rng), Label::Neg));
    }
    points.shuffle(rng);
    let instances = points
        .iter()
        .map(|(x, l)| Instance::from_dense(x, Some(*l)).expect("finite sample"))
        .collect();
    Dataset::with_dim(instances, 2).expect("two features")
}

/// The thresholded SVM reaches precision exactly 0.5, while some direction
/// ranks `k` positives strictly above every other test instance.
fn shows_gap(problem: &TransductiveProblem) -> Result<bool> {
    let (svm, _) = train_svm(&problem.train, &SvmConfig::with_c(problem.c))?;
    let Ok(shifted) = adjust_intercept(&svm, &problem.test, problem.k) else {
        return Ok(false);
    };
    if precision_at_k(&shifted, &problem.test, problem.k)? != 0.5 {
        return Ok(false);
    }
    let rows = problem.test.dense_rows(2);
    let positive: Vec<bool> = problem
        .test
        .instances()
        .iter()
        .map(|x| x.label().is_some_and(Label::is_pos))
        .collect();
    for i in 0..SCAN_DIRECTIONS {
        let theta = std::f64::consts::TAU * i as f64 / SCAN_DIRECTIONS as f64;
        let (s, c) = theta.sin_cos();
        let scores: Vec<f64> = rows.iter().map(|x| c * x[0] + s * x[1]).collect();
        let top = top_k_of_scores(&scores, problem.k)?;
        if !top.iter().all(|&j| positive[j]) {
            continue;
        }
        let kth = top.iter().map(|&j| scores[j]).fold(f64::INFINITY, f64::min);
        let rest = (0..rows.len())
            .filter(|j| !top.contains(j))
            .map(|j| scores[j])
            .fold(f64::NEG_INFINITY, f64::max);
        if kth > rest {
            return Ok(true);
        }
    }
    Ok(false)
}
