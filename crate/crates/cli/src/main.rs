use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ttk_core::bench::{boundary_stats, run_experiment, ExperimentConfig};
use ttk_core::dataset::{make_synthetic_figure, read_libsvm, write_libsvm};
use ttk_core::exact::{solve_exact, ExactLimits};
use ttk_core::linear_model::precision_at_k;
use ttk_core::population::{demo_curves_csv, theorem_demo, GaussianMixture, DEMO_GRID};
use ttk_core::svm::{train_svm, SvmConfig, SvmSolver};
use ttk_core::ttk::{solve_fd, threshold_init, ttk_objective, TtkOptions};
use ttk_core::{Dataset, Error, Label, LinearModel, TransductiveProblem};

#[derive(Parser)]
#[command(name = "ttk", version, about = "Transductive top-k linear classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic figure scenario as PREFIX.train.svm, PREFIX.test.svm
    /// (unlabeled) and PREFIX.json (k, C and the test labels).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a hinge-loss SVM.
    TrainSvm {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverArg::Dual)]
        solver: SolverArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Minimize the hinge objective subject to exactly k positive test predictions.
    Solve {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Fd)]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration CSV (fd only).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Threshold-SVM starting model JSON (fd only).
        #[arg(long)]
        init_out: Option<PathBuf>,
        /// Optimality certificate JSON (exact only).
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[arg(long, default_value_t = ExactLimits::default().max_test)]
        max_test: usize,
        #[arg(long, default_value_t = ExactLimits::default().max_nodes)]
        max_nodes: usize,
    },
    /// Precision@k and boundary statistics of a model on a test set.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        k: usize,
        /// JSON sidecar with `test_labels`, for unlabeled test files.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
    },
    /// Optimal directions of a Gaussian mixture at two quantiles.
    Popdemo {
        #[arg(long)]
        q1: f64,
        #[arg(long)]
        q2: f64,
        #[arg(long)]
        mixture: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Precision over a grid of directions at both quantiles.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Run the split / cross-validation protocol and write per-split results;
    /// summary and t-test tables go next to it.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Dual,
    Subgradient,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Fd,
    Exact,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(e) = e.downcast_ref::<Error>() {
        return match e {
            Error::Capacity { .. } => 3,
            Error::Argument(_) | Error::Parse { .. } | Error::Json(_) | Error::Io(_) => 2,
            _ => 1,
        };
    }
    if e.downcast_ref::<std::io::Error>().is_some() || e.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    e.downcast_ref::<ArgError>().map_or(1, |_| 2)
}

#[derive(Debug)]
struct ArgError(String);

impl std::fmt::Display for ArgError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ArgError {}

fn arg_error(msg: impl Into<String>) -> anyhow::Error {
    ArgError(msg.into()).into()
}

fn read_data(path: &Path) -> Result<Dataset> {
    read_libsvm(path).with_context(|| format!("reading {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn print(value: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth { out, seed } => synth(&out, seed),
        Command::TrainSvm { data, c, out, solver, seed } => {
            let train = read_data(&data)?;
            let config = SvmConfig {
                solver: match solver {
                    SolverArg::Dual => SvmSolver::Dual,
                    SolverArg::Subgradient => SvmSolver::Subgradient,
                },
                seed,
                ..SvmConfig::with_c(c)
            };
            let (model, objective) = train_svm(&train, &config)?;
            write(&out, &model.to_json())?;
            print(json!({ "objective": objective, "model": out }));
            Ok(())
        }
        Command::Solve { train, test, k, c, method, out, trace, init_out, certificate, max_test, max_nodes } => {
            if method == MethodArg::Fd && certificate.is_some() {
                return Err(arg_error("--certificate applies to --method exact"));
            }
            if method == MethodArg::Exact && (trace.is_some() || init_out.is_some()) {
                return Err(arg_error("--trace and --init-out apply to --method fd"));
            }
            let problem = TransductiveProblem::new(read_data(&train)?, read_data(&test)?.unlabeled(), k, c)?;
            let svm = SvmConfig::with_c(c);
            match method {
                MethodArg::Fd => {
                    let init = threshold_init(&problem, &svm)?;
                    let (model, tr) = solve_fd(&problem, &init, &TtkOptions::default())?;
                    write(&out, &model.to_json())?;
                    if let Some(path) = init_out {
                        write(&path, &init.to_json())?;
                    }
                    if let Some(path) = trace {
                        write(&path, &tr.to_csv())?;
                    }
                    print(json!({
                        "method": "fd",
                        "initial_objective": tr.initial_objective,
                        "objective": tr.final_objective(),
                        "iterations": tr.objectives.len(),
                        "swaps": tr.swaps_taken,
                        "terminated_by": format!("{:?}", tr.terminated_by),
                        "positives": model.count_positive(&problem.test)?,
                    }));
                }
                MethodArg::Exact => {
                    let limits = ExactLimits { max_test, max_nodes, ..Default::default() };
                    let (model, cert) = solve_exact(&problem, &limits)?;
                    write(&out, &model.to_json())?;
                    if let Some(path) = certificate {
                        write(&path, &cert.to_json())?;
                    }
                    print(json!({
                        "method": "exact",
                        "objective": ttk_objective(&model, &problem)?,
                        "chosen_set": cert.chosen_set,
                        "nodes_explored": cert.nodes_explored,
                        "bound_gap": cert.bound_gap,
                        "positives": model.count_positive(&problem.test)?,
                    }));
                }
            }
            Ok(())
        }
        Command::Eval { model, test, k, labels, delta } => {
            let model = LinearModel::from_json(&read_text(&model)?)?;
            let mut test = read_data(&test)?;
            if let Some(path) = labels {
                test = attach_labels(&test, &path)?;
            }
            if !test.all_labeled() {
                return Err(arg_error("test set is unlabeled; pass --labels"));
            }
            let test = test.widen(model.dim())?;
            if test.dim() != model.dim() {
                return Err(arg_error(format!(
                    "model has {} features, test data has {}",
                    model.dim(),
                    test.dim()
                )));
            }
            let stats = boundary_stats(&model, &test, delta)?;
            print(json!({
                "k": k,
                "precision_at_k": precision_at_k(&model, &test, k)?,
                "at_boundary": stats.at_boundary,
                "fraction_positive": stats.fraction_positive,
                "positives": model.count_positive(&test)?,
            }));
            Ok(())
        }
        Command::Popdemo { q1, q2, mixture, out, curves } => {
            let mix = GaussianMixture::from_json(&read_text(&mixture)?)?;
            let report = theorem_demo(&mix, q1, q2)?;
            write(&out, &report.to_json())?;
            if let Some(path) = curves {
                write(&path, &demo_curves_csv(&mix, q1, q2, DEMO_GRID)?)?;
            }
            print(json!({
                "angle_degrees": report.angle_degrees,
                "precision_q1": report.solutions[0].precision,
                "precision_q2": report.solutions[1].precision,
            }));
            Ok(())
        }
        Command::Bench { config: config_path, out } => {
            let mut config = ExperimentConfig::from_json(&read_text(&config_path)?)?;
            // relative data paths are taken from the config file's directory
            let dir = config_path.parent().unwrap_or(Path::new("")).to_path_buf();
            config.dataset_path = dir.join(&config.dataset_path);
            config.test_path = config.test_path.map(|p| dir.join(p));
            let table = run_experiment(&config)?;
            write(&out, &table.to_csv())?;
            let stem = out.with_extension("");
            write(&with_suffix(&stem, ".summary.csv"), &table.summary_csv())?;
            write(&with_suffix(&stem, ".ttest.csv"), &table.ttest_csv())?;
            print!("{}", table.summary_csv());
            Ok(())
        }
    }
}

fn synth(prefix: &Path, seed: u64) -> Result<()> {
    let problem = make_synthetic_figure(seed)?;
    let train_path = with_suffix(prefix, ".train.svm");
    let test_path = with_suffix(prefix, ".test.svm");
    let meta_path = with_suffix(prefix, ".json");
    write_libsvm(&problem.train, &train_path)?;
    write_libsvm(&problem.test.unlabeled(), &test_path)?;
    let labels: Vec<i8> = problem
        .test
        .instances()
        .iter()
        .map(|x| if x.label().is_some_and(Label::is_pos) { 1 } else { -1 })
        .collect();
    let meta = json!({ "seed": seed, "k": problem.k, "c": problem.c, "test_labels": labels });
    write(&meta_path, &serde_json::to_string_pretty(&meta)?)?;
    print(json!({ "train": train_path, "test": test_path, "labels": meta_path, "k": problem.k, "c": problem.c }));
    Ok(())
}

fn attach_labels(test: &Dataset, path: &Path) -> Result<Dataset> {
    let meta: serde_json::Value = serde_json::from_str(&read_text(path)?)?;
    let Some(raw) = meta.get("test_labels").and_then(|v| v.as_array()) else {
        return Err(arg_error(format!("{} has no test_labels array", path.display())));
    };
    if raw.len() != test.len() {
        return Err(arg_error(format!("{} labels for {} test instances", raw.len(), test.len())));
    }
    let mut instances = Vec::with_capacity(raw.len());
    for (x, v) in test.instances().iter().zip(raw) {
        let label = match v.as_i64() {
            Some(1) => Label::Pos,
            Some(-1) => Label::Neg,
            _ => bail!(arg_error(format!("test label must be 1 or -1, found {v}"))),
        };
        instances.push(x.clone().with_label(Some(label)));
    }
    Ok(Dataset::with_dim(instances, test.dim())?)
}
