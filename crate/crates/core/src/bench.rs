//! Experimental protocol: stratified splits, cross-validated `C`, per-split
//! precision@k, boundary statistics and paired significance tests.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dataset::{random_split, read_libsvm, stratified_folds, Dataset, TransductiveProblem};
use crate::error::{Error, Result};
use crate::exact::{solve_exact, ExactLimits};
use crate::linear_model::{adjust_intercept, precision_at_k, LinearModel};
use crate::svm::SvmConfig;
use crate::ttk::{is_feasible, solve_fd, threshold_init, ttk_objective, TtkOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SvmThreshold,
    TtkFd,
    TtkExact,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SvmThreshold => "svm_threshold",
            Method::TtkFd => "ttk_fd",
            Method::TtkExact => "ttk_exact",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset_path: PathBuf,
    /// A predefined labeled test set; `dataset_path` is then the training
    /// set, no splitting happens and `n_splits` must be 1.
    #[serde(default)]
    pub test_path: Option<PathBuf>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_k_fraction")]
    pub k_fraction: f64,
    #[serde(default = "default_n_splits")]
    pub n_splits: usize,
    #[serde(default = "default_c_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default = "default_cv_repeats")]
    pub cv_repeats: usize,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Half-width of the band counted as lying on the decision boundary.
    #[serde(default = "default_boundary_delta")]
    pub boundary_delta: f64,
    #[serde(default = "default_max_test")]
    pub exact_max_test: usize,
}

fn default_methods() -> Vec<Method> {
    vec![Method::SvmThreshold, Method::TtkFd]
}
fn default_k_fraction() -> f64 {
    0.05
}
fn default_n_splits() -> usize {
    10
}
fn default_c_grid() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0, 100.0]
}
fn default_cv_repeats() -> usize {
    5
}
fn default_cv_folds() -> usize {
    2
}
fn default_test_fraction() -> f64 {
    0.5
}
fn default_alpha() -> f64 {
    0.05
}
fn default_boundary_delta() -> f64 {
    1e-6
}
fn default_max_test() -> usize {
    ExactLimits::default().max_test
}

impl ExperimentConfig {
    pub fn new(dataset_path: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset_path: dataset_path.into(),
            test_path: None,
            methods: default_methods(),
            k_fraction: default_k_fraction(),
            n_splits: default_n_splits(),
            c_grid: default_c_grid(),
            cv_repeats: default_cv_repeats(),
            cv_folds: default_cv_folds(),
            seed: 0,
            test_fraction: default_test_fraction(),
            alpha: default_alpha(),
            boundary_delta: default_boundary_delta(),
            exact_max_test: default_max_test(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_fraction > 0.0 && self.k_fraction < 1.0) {
            return Err(Error::arg(format!("k_fraction must lie in (0, 1), got {}", self.k_fraction)));
        }
        if self.n_splits == 0 {
            return Err(Error::arg("n_splits must be at least 1"));
        }
        if self.test_path.is_some() && self.n_splits != 1 {
            return Err(Error::arg("a predefined test set allows only n_splits = 1"));
        }
        if self.c_grid.is_empty() {
            return Err(Error::arg("c_grid must not be empty"));
        }
        if let Some(c) = self.c_grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::arg(format!("c_grid values must be positive, got {c}")));
        }
        if self.methods.is_empty() {
            return Err(Error::arg("methods must not be empty"));
        }
        if self.cv_repeats == 0 || self.cv_folds < 2 {
            return Err(Error::arg("need cv_repeats >= 1 and cv_folds >= 2"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::arg("test_fraction must lie in (0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::arg("alpha must lie in (0, 1)"));
        }
        if !(self.boundary_delta > 0.0) {
            return Err(Error::arg("boundary_delta must be positive"));
        }
        Ok(())
    }
}

/// `max(1, round(fraction · n))` with halves rounded up.
pub fn k_from_fraction(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 + 0.5).floor() as usize).clamp(1, n.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryStats {
    pub at_boundary: usize,
    pub fraction_positive: f64,
}

pub fn boundary_stats(model: &LinearModel, data: &Dataset, delta: f64) -> Result<BoundaryStats> {
    if !(delta > 0.0) {
        return Err(Error::arg("delta must be positive"));
    }
    let scores = model.scores(data)?;
    let at_boundary = scores.iter().filter(|s| s.abs() <= delta).count();
    let positive = scores.iter().filter(|&&s| s > 0.0).count();
    let fraction_positive = if scores.is_empty() { 0.0 } else { positive as f64 / scores.len() as f64 };
    Ok(BoundaryStats { at_boundary, fraction_positive })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ABetter,
    BBetter,
    Tie,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::ABetter => "a_better",
            Verdict::BBetter => "b_better",
            Verdict::Tie => "tie",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: usize,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub verdict: Verdict,
    /// Zero-variance differences; `p` is 1 for a zero mean and 0 otherwise.
    pub degenerate: bool,
}

/// Two-sided paired-differences t-test on `a − b`.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::arg(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::arg("paired t-test needs at least two pairs"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg("alpha must lie in (0, 1)"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean_diff, sd_diff) = mean_sd(&d);
    let n = d.len();
    let df = n - 1;
    let by_sign = |m: f64| if m > 0.0 { Verdict::ABetter } else { Verdict::BBetter };
    if sd_diff == 0.0 {
        let (t, p, verdict) = if mean_diff == 0.0 {
            (0.0, 1.0, Verdict::Tie)
        } else {
            (mean_diff.signum() * f64::INFINITY, 0.0, by_sign(mean_diff))
        };
        return Ok(TTest { t, p, df, mean_diff, sd_diff, verdict, degenerate: true });
    }
    let t = mean_diff / (sd_diff / (n as f64).sqrt());
    let p = student_t_two_sided(t, df as f64);
    let verdict = if p >= alpha { Verdict::Tie } else { by_sign(mean_diff) };
    Ok(TTest { t, p, df, mean_diff, sd_diff, verdict, degenerate: false })
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    incomplete_beta(df / (df + t * t), 0.5 * df, 0.5)
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_fraction(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_fraction(1.0 - x, b, a) / b
    }
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - (a + b) * x / (a + 1.0));
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let even = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        d = 1.0 / guard(1.0 + even * d);
        c = guard(1.0 + even / c);
        h *= d * c;
        let odd = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 / guard(1.0 + odd * d);
        c = guard(1.0 + odd / c);
        let step = d * c;
        h *= step;
        if (step - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Lanczos approximation (g = 7, nine coefficients).
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Mean and sample standard deviation; the deviation of one value is 0.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

struct Fitted {
    model: LinearModel,
    objective: f64,
}

/// Trains `method` on `train` with `test` as the transductive set, and
/// returns a model that selects exactly `k` test instances.
fn fit(method: Method, train: &Dataset, test: &Dataset, k: usize, c: f64, max_test: usize) -> Result<Fitted> {
    let problem = TransductiveProblem::new(train.clone(), test.unlabeled(), k, c)?;
    let svm = SvmConfig::with_c(c);
    let model = match method {
        Method::SvmThreshold => start(&problem, &svm)?,
        Method::TtkFd => {
            let init = start(&problem, &svm)?;
            solve_fd(&problem, &init, &TtkOptions::default())?.0
        }
        Method::TtkExact => {
            let limits = ExactLimits { max_test, ..Default::default() };
            solve_exact(&problem, &limits)?.0
        }
    };
    if !is_feasible(&model, &problem)? {
        return Err(Error::Infeasible { positives: model.count_positive(&problem.test)?, k });
    }
    let objective = ttk_objective(&model, &problem)?;
    Ok(Fitted { model, objective })
}

/// The threshold SVM; when its test scores tie at the cut (a vanishing
/// weight vector does this), the class-mean difference direction instead.
fn start(problem: &TransductiveProblem, svm: &SvmConfig) -> Result<LinearModel> {
    match threshold_init(problem, svm) {
        Err(Error::Tie { .. }) => {
            let d = problem.dim();
            let (mut pos, mut neg) = (vec![0.0; d], vec![0.0; d]);
            let (np, nn) = problem.train.class_counts();
            for x in problem.train.instances() {
                let (acc, n) = if x.label().is_some_and(|l| l.is_pos()) { (&mut pos, np) } else { (&mut neg, nn) };
                for (a, v) in acc.iter_mut().zip(x.to_dense(d)) {
                    *a += v / n as f64;
                }
            }
            let w = pos.iter().zip(&neg).map(|(p, n)| p - n).collect();
            adjust_intercept(&LinearModel::new(w, 0.0), &problem.test, problem.k)
        }
        other => other,
    }
}

fn cv_seed(base: u64, repeat: usize, attempt: usize) -> u64 {
    base.wrapping_mul(1_000_003)
        .wrapping_add(repeat as u64 * 1_009)
        .wrapping_add(attempt as u64)
}

/// Picks `C` from the grid by repeated stratified k-fold cross-validation of
/// `method`, scoring precision at `k_fraction` of each held-out fold. Ties
/// go to the smaller `C`.
pub fn cross_validate_c(train: &Dataset, config: &ExperimentConfig, method: Method, seed: u64) -> Result<f64> {
    let mut grid = config.c_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    match grid.as_slice() {
        [] => return Err(Error::arg("c_grid must not be empty")),
        [c] => return Ok(*c),
        _ => {}
    }
    let (pos, neg) = train.class_counts();
    if pos < 4 || neg < 4 {
        return Err(Error::arg(format!(
            "cross-validation needs at least 4 instances per class, got {pos} positive and {neg} negative"
        )));
    }
    let splits: Vec<(Dataset, Dataset)> = cv_splits(train, config, seed)?
        .into_iter()
        .map(|(rest, held)| (train.select(&rest), train.select(&held)))
        .collect();
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &c in &grid {
        let mut total = 0.0;
        for (tr, held) in &splits {
            let k = k_from_fraction(config.k_fraction, held.len());
            let fitted = fit(method, tr, held, k, c, config.exact_max_test)?;
            total += precision_at_k(&fitted.model, held, k)?;
        }
        let score = total / splits.len() as f64;
        if score > best.0 {
            best = (score, c);
        }
    }
    Ok(best.1)
}

/// The `(fit, held-out)` index pairs used by [`cross_validate_c`]: for each
/// repeat a stratified partition into `cv_folds` folds, each fold held out
/// once. Partitions leaving a single class on either side are redrawn with
/// the next seed, up to 10 times.
pub fn cv_splits(train: &Dataset, config: &ExperimentConfig, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    const ATTEMPTS: usize = 10;
    let single_class = |idx: &[usize]| {
        let (p, n) = train.select(idx).class_counts();
        p == 0 || n == 0
    };
    let mut out = Vec::new();
    for repeat in 0..config.cv_repeats {
        let mut found = None;
        for attempt in 0..ATTEMPTS {
            let folds = stratified_folds(train, config.cv_folds, cv_seed(seed, repeat, attempt))?;
            let pairs: Vec<(Vec<usize>, Vec<usize>)> = (0..folds.len())
                .map(|f| {
                    let mut rest: Vec<usize> =
                        folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, v)| v.iter().copied()).collect();
                    rest.sort_unstable();
                    (rest, folds[f].clone())
                })
                .collect();
            if pairs.iter().all(|(rest, held)| !single_class(rest) && !single_class(held)) {
                found = Some(pairs);
                break;
            }
        }
        match found {
            Some(pairs) => out.extend(pairs),
            None => {
                return Err(Error::arg(format!(
                    "no non-degenerate {}-fold partition in {ATTEMPTS} attempts",
                    config.cv_folds
                )))
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub split: usize,
    pub c: f64,
    pub k: usize,
    pub test_size: usize,
    pub precision: f64,
    pub train_objective: f64,
    pub at_boundary: usize,
    pub fraction_positive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    /// `None` when the method refused the problem size.
    pub splits: Option<Vec<SplitOutcome>>,
}

impl MethodResult {
    pub fn precisions(&self) -> Option<Vec<f64>> {
        self.splits.as_ref().map(|s| s.iter().map(|o| o.precision).collect())
    }

    pub fn train_objectives(&self) -> Option<Vec<f64>> {
        self.splits.as_ref().map(|s| s.iter().map(|o| o.train_objective).collect())
    }

    pub fn precision_mean_sd(&self) -> Option<(f64, f64)> {
        self.precisions().map(|p| mean_sd(&p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: Method,
    pub b: Method,
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub n_splits: usize,
    pub methods: Vec<MethodResult>,
    /// All pairs of methods with at least two splits and no NA.
    pub comparisons: Vec<Comparison>,
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        format!("{v}")
    }
}

impl ResultTable {
    /// One row per method and split; refused methods get `NA` cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,split,c,k,test_size,precision,train_objective,at_boundary,fraction_positive\n");
        for m in &self.methods {
            match &m.splits {
                Some(splits) => {
                    for s in splits {
                        writeln!(
                            out,
                            "{},{},{},{},{},{},{},{},{}",
                            m.method.name(),
                            s.split,
                            fmt_num(s.c),
                            s.k,
                            s.test_size,
                            fmt_num(s.precision),
                            fmt_num(s.train_objective),
                            s.at_boundary,
                            fmt_num(s.fraction_positive)
                        )
                        .unwrap();
                    }
                }
                None => {
                    for split in 0..self.n_splits {
                        writeln!(out, "{},{split},NA,NA,NA,NA,NA,NA,NA", m.method.name()).unwrap();
                    }
                }
            }
        }
        out
    }

    /// Per-method mean and standard deviation of precision and training objective.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,n,precision_mean,precision_sd,objective_mean,objective_sd\n");
        for m in &self.methods {
            match (m.precisions(), m.train_objectives()) {
                (Some(p), Some(o)) => {
                    let (pm, ps) = mean_sd(&p);
                    let (om, os) = mean_sd(&o);
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        m.method.name(),
                        p.len(),
                        fmt_num(pm),
                        fmt_num(ps),
                        fmt_num(om),
                        fmt_num(os)
                    )
                    .unwrap();
                }
                _ => writeln!(out, "{},0,NA,NA,NA,NA", m.method.name()).unwrap(),
            }
        }
        out
    }

    pub fn ttest_csv(&self) -> String {
        let mut out = String::from("method_a,method_b,t,p,df,mean_diff,verdict,degenerate\n");
        for c in &self.comparisons {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.a.name(),
                c.b.name(),
                c.test.t,
                c.test.p,
                c.test.df,
                c.test.mean_diff,
                c.test.verdict.name(),
                c.test.degenerate
            )
            .unwrap();
        }
        out
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let data = read_libsvm(&config.dataset_path)?;
    match &config.test_path {
        Some(path) => run_experiment_fixed(&data, &read_libsvm(path)?, config),
        None => run_experiment_on(&data, config),
    }
}

/// Runs the protocol on an in-memory dataset; the paths are ignored.
/// Splits run concurrently, each seeded with `seed + split`.
pub fn run_experiment_on(data: &Dataset, config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    if !data.all_labeled() {
        return Err(Error::arg("benchmark data must be fully labeled"));
    }
    let per_split: Vec<Result<Vec<Option<SplitOutcome>>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.n_splits)
            .map(|split| {
                scope.spawn(move || {
                    let seed = config.seed.wrapping_add(split as u64);
                    let (train, test) = random_split(data, config.test_fraction, true, seed)?;
                    run_split(&train, &test, config, split, seed)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("split worker panicked")).collect()
    });
    tabulate(per_split.into_iter().collect::<Result<Vec<_>>>()?, config)
}

/// A single evaluation on a predefined train/test pair.
pub fn run_experiment_fixed(train: &Dataset, test: &Dataset, config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    if !train.all_labeled() || !test.all_labeled() {
        return Err(Error::arg("benchmark data must be fully labeled"));
    }
    let dim = train.dim().max(test.dim());
    let (train, test) = (train.widen(dim)?, test.widen(dim)?);
    let row = run_split(&train, &test, config, 0, config.seed)?;
    let config = ExperimentConfig { n_splits: 1, ..config.clone() };
    tabulate(vec![row], &config)
}

fn tabulate(per_split: Vec<Vec<Option<SplitOutcome>>>, config: &ExperimentConfig) -> Result<ResultTable> {
    let methods: Vec<MethodResult> = config
        .methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let cells: Option<Vec<SplitOutcome>> = per_split.iter().map(|s| s[m].clone()).collect();
            MethodResult { method, splits: cells }
        })
        .collect();

    let mut comparisons = Vec::new();
    if config.n_splits >= 2 {
        for i in 0..methods.len() {
            for j in i + 1..methods.len() {
                if let (Some(a), Some(b)) = (methods[i].precisions(), methods[j].precisions()) {
                    comparisons.push(Comparison {
                        a: methods[i].method,
                        b: methods[j].method,
                        test: paired_t_test(&a, &b, config.alpha)?,
                    });
                }
            }
        }
    }
    Ok(ResultTable { n_splits: config.n_splits, methods, comparisons })
}

fn run_split(
    train: &Dataset,
    test: &Dataset,
    config: &ExperimentConfig,
    split: usize,
    seed: u64,
) -> Result<Vec<Option<SplitOutcome>>> {
    let k = k_from_fraction(config.k_fraction, test.len());
    config
        .methods
        .iter()
        .map(|&method| {
            if method == Method::TtkExact && test.len() > config.exact_max_test {
                return Ok(None);
            }
            let c = cross_validate_c(train, config, method, seed)?;
            let fitted = fit(method, train, test, k, c, config.exact_max_test)?;
            let stats = boundary_stats(&fitted.model, test, config.boundary_delta)?;
            Ok(Some(SplitOutcome {
                split,
                c,
                k,
                test_size: test.len(),
                precision: precision_at_k(&fitted.model, test, k)?,
                train_objective: fitted.objective,
                at_boundary: stats.at_boundary,
                fraction_positive: stats.fraction_positive,
            }))
        })
        .collect()
}
