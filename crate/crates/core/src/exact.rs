//! Exact small-scale solver: branch-and-bound over sign assignments of the
//! test instances. Each node is a convex problem in which assigned test
//! instances carry a heavily weighted hinge that enforces their sign with a
//! small margin.

use serde::{Deserialize, Serialize};

use crate::dataset::TransductiveProblem;
use crate::error::{Error, Result};
use crate::hinge_qp::{dot, HingeProblem, QpOptions};
use crate::linear_model::{adjust_intercept, top_k_set, LinearModel};
use crate::svm::{hinge_problem, svm_objective, train_svm, SvmConfig};

const PENALTY_ESCALATION: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactLimits {
    pub max_test: usize,
    pub max_nodes: usize,
    /// Assigned positives must score at least this, assigned negatives at most its negation.
    pub margin_delta: f64,
    /// `None` picks `10³ · C · max(1, |train|)`.
    pub penalty_weight: Option<f64>,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            max_test: 25,
            max_nodes: 2_000_000,
            margin_delta: 1e-9,
            penalty_weight: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub chosen_set: Vec<usize>,
    pub objective: f64,
    pub nodes_explored: usize,
    pub bound_gap: f64,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Minimizes the objective with the sign of every test instance fixed:
/// positive for `positive_set`, negative otherwise. Returns the model and its
/// penalty-free objective.
pub fn solve_assigned(
    problem: &TransductiveProblem,
    positive_set: &[usize],
    limits: &ExactLimits,
) -> Result<(LinearModel, f64)> {
    let ctx = Context::new(problem, limits)?;
    let n = problem.test.len();
    let mut sorted = positive_set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != positive_set.len() || sorted.iter().any(|&j| j >= n) {
        return Err(Error::arg("positive set must hold distinct test indices"));
    }
    if sorted.len() != problem.k {
        return Err(Error::arg(format!(
            "positive set has {} indices, k = {}",
            sorted.len(),
            problem.k
        )));
    }
    let signs = ctx.full_assignment(&sorted);
    let leaf = ctx.leaf(&signs)?;
    Ok((leaf.model, leaf.objective))
}

/// Branch-and-bound with pruning.
pub fn solve_exact(problem: &TransductiveProblem, limits: &ExactLimits) -> Result<(LinearModel, Certificate)> {
    Context::new(problem, limits)?.branch_and_bound(true)
}

/// Same search without pruning: every assignment with exactly `k` positives is solved.
pub fn solve_exhaustive(
    problem: &TransductiveProblem,
    limits: &ExactLimits,
) -> Result<(LinearModel, Certificate)> {
    Context::new(problem, limits)?.branch_and_bound(false)
}

struct Context<'a> {
    problem: &'a TransductiveProblem,
    base: HingeProblem,
    test: Vec<Vec<f64>>,
    delta: f64,
    weight: f64,
    max_nodes: usize,
}

#[derive(Clone)]
struct Node {
    /// Per test instance: `Some(+1.0)`, `Some(-1.0)` or unassigned.
    signs: Vec<Option<f64>>,
    positives: usize,
    negatives: usize,
    depth: usize,
    bound: f64,
    w: Vec<f64>,
    b: f64,
}

struct Leaf {
    model: LinearModel,
    objective: f64,
}

impl<'a> Context<'a> {
    fn new(problem: &'a TransductiveProblem, limits: &ExactLimits) -> Result<Self> {
        let n = problem.test.len();
        if n > limits.max_test {
            return Err(Error::Capacity {
                what: "test instances",
                got: n,
                limit: limits.max_test,
            });
        }
        if !(limits.margin_delta > 0.0) || !limits.margin_delta.is_finite() {
            return Err(Error::arg("margin_delta must be positive"));
        }
        let min_weight = 1e3 * problem.c;
        let weight = match limits.penalty_weight {
            Some(p) if !(p >= min_weight) || !p.is_finite() => {
                return Err(Error::arg(format!("penalty_weight must be at least {min_weight}")))
            }
            Some(p) => p,
            None => min_weight * (problem.train.len().max(1) as f64),
        };
        if limits.max_nodes == 0 {
            return Err(Error::arg("max_nodes must be at least 1"));
        }
        let dim = problem.dim();
        Ok(Context {
            problem,
            base: hinge_problem(&problem.train, dim, problem.c)?,
            test: problem.test.dense_rows(dim),
            delta: limits.margin_delta,
            weight,
            max_nodes: limits.max_nodes,
        })
    }

    fn full_assignment(&self, positive_set: &[usize]) -> Vec<Option<f64>> {
        let mut signs = vec![Some(-1.0); self.test.len()];
        for &j in positive_set {
            signs[j] = Some(1.0);
        }
        signs
    }

    /// Penalized optimum for a (partial) assignment: `(value, w, b)`.
    fn relax(&self, signs: &[Option<f64>], weight: f64) -> (f64, Vec<f64>, f64) {
        let mut p = self.base.clone();
        for (x, s) in self.test.iter().zip(signs) {
            if let Some(y) = *s {
                p.push(x.clone(), y, self.delta, weight);
            }
        }
        let sol = p.solve(&QpOptions::default());
        let value = p.objective(&sol.w, sol.b);
        (value, sol.w, sol.b)
    }

    fn satisfies(&self, signs: &[Option<f64>], w: &[f64], b: f64, margin: f64) -> bool {
        self.test.iter().zip(signs).all(|(x, s)| match s {
            Some(y) => y * (dot(w, x) + b) >= margin,
            None => true,
        })
    }

    fn plain_objective(&self, model: &LinearModel) -> Result<f64> {
        svm_objective(model, &self.problem.train, self.problem.c)
    }

    /// Solves a full assignment and verifies the signs; escalates the
    /// penalty once before declaring the assignment infeasible.
    fn leaf(&self, signs: &[Option<f64>]) -> Result<Leaf> {
        let (_, w, b) = self.relax(signs, self.weight);
        self.verify_leaf(signs, w, b)
    }

    fn verify_leaf(&self, signs: &[Option<f64>], w: Vec<f64>, b: f64) -> Result<Leaf> {
        let (mut w, mut b) = (w, b);
        if !self.satisfies(signs, &w, b, 0.5 * self.delta) {
            let (_, w2, b2) = self.relax(signs, self.weight * PENALTY_ESCALATION);
            if !self.satisfies(signs, &w2, b2, 0.5 * self.delta) {
                let violation = self
                    .test
                    .iter()
                    .zip(signs)
                    .filter_map(|(x, s)| s.map(|y| (self.delta - y * (dot(&w2, x) + b2)).max(0.0)))
                    .fold(0.0, f64::max);
                return Err(Error::InfeasibleAssignment { violation });
            }
            w = w2;
            b = b2;
        }
        let model = LinearModel::new(w, b);
        let objective = self.plain_objective(&model)?;
        Ok(Leaf { model, objective })
    }

    fn child(&self, parent: &Node, j: usize, y: f64) -> Node {
        let mut signs = parent.signs.clone();
        signs[j] = Some(y);
        let (positives, negatives) = if y > 0.0 {
            (parent.positives + 1, parent.negatives)
        } else {
            (parent.positives, parent.negatives + 1)
        };
        let n = self.test.len();
        let k = self.problem.k;
        // the cardinality forces the rest once either side is full
        let forced = if positives == k {
            Some(-1.0)
        } else if negatives == n - k {
            Some(1.0)
        } else {
            None
        };
        let (mut positives, mut negatives) = (positives, negatives);
        if let Some(f) = forced {
            for s in signs.iter_mut().filter(|s| s.is_none()) {
                *s = Some(f);
                if f > 0.0 {
                    positives += 1;
                } else {
                    negatives += 1;
                }
            }
        }
        // a parent optimum that already meets the new constraints stays optimal
        let (bound, w, b) = if self.satisfies(&signs, &parent.w, parent.b, self.delta) {
            (parent.bound, parent.w.clone(), parent.b)
        } else {
            self.relax(&signs, self.weight)
        };
        Node {
            signs,
            positives,
            negatives,
            depth: parent.depth + 1,
            bound: bound.max(parent.bound),
            w,
            b,
        }
    }

    fn branch_and_bound(&self, prune: bool) -> Result<(LinearModel, Certificate)> {
        let n = self.test.len();
        let k = self.problem.k;
        let mut nodes = 1usize;
        let mut incumbent: Option<(f64, LinearModel, Vec<usize>)> = None;

        // seed with the thresholded SVM's selection
        let svm = train_svm(&self.problem.train, &SvmConfig::with_c(self.problem.c))
            .map(|(m, _)| {
                let mut w = m.w;
                w.resize(self.problem.dim(), 0.0);
                LinearModel::new(w, m.b)
            })?;
        let mut order_model = svm.clone();
        if let Ok(shifted) = adjust_intercept(&svm, &self.problem.test, k) {
            let set = top_k_set(&shifted, &self.problem.test, k)?;
            nodes += 1;
            if let Ok(leaf) = self.leaf(&self.full_assignment(&set)) {
                order_model = leaf.model.clone();
                incumbent = Some((leaf.objective, leaf.model, set));
            }
        }

        // most ambiguous instances first
        let scores = order_model.scores(&self.problem.test)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| scores[a].abs().total_cmp(&scores[b].abs()).then(a.cmp(&b)));

        let (root_bound, w, b) = self.relax(&vec![None; n], self.weight);
        let root = Node {
            signs: vec![None; n],
            positives: 0,
            negatives: 0,
            depth: 0,
            bound: root_bound,
            w,
            b,
        };
        let mut stack = vec![root];
        let mut exhausted = false;

        let prunable = |bound: f64, inc: &Option<(f64, LinearModel, Vec<usize>)>| match inc {
            Some((best, _, _)) if prune => bound >= *best + 1e-12 * (1.0 + best.abs()),
            _ => false,
        };

        while let Some(node) = stack.pop() {
            if prunable(node.bound, &incumbent) {
                continue;
            }
            if node.positives + node.negatives == n {
                let set: Vec<usize> = (0..n).filter(|&j| node.signs[j] == Some(1.0)).collect();
                let leaf = if self.satisfies(&node.signs, &node.w, node.b, 0.5 * self.delta) {
                    self.verify_leaf(&node.signs, node.w.clone(), node.b)
                } else {
                    self.leaf(&node.signs)
                };
                match leaf {
                    Ok(leaf) => {
                        let better = match &incumbent {
                            Some((best, _, best_set)) => {
                                leaf.objective < *best || (leaf.objective == *best && set < *best_set)
                            }
                            None => true,
                        };
                        if better {
                            incumbent = Some((leaf.objective, leaf.model, set));
                        }
                    }
                    Err(Error::InfeasibleAssignment { .. }) => {}
                    Err(e) => return Err(e),
                }
                continue;
            }
            if nodes + 2 > self.max_nodes {
                stack.push(node);
                exhausted = true;
                break;
            }
            let j = *order.iter().find(|&&j| node.signs[j].is_none()).expect("unassigned instance");
            let pos = self.child(&node, j, 1.0);
            let neg = self.child(&node, j, -1.0);
            nodes += 2;
            // lower bound explored first
            if pos.bound <= neg.bound {
                stack.push(neg);
                stack.push(pos);
            } else {
                stack.push(pos);
                stack.push(neg);
            }
        }

        let (objective, model, chosen_set) = incumbent.ok_or(Error::InfeasibleAssignment { violation: f64::INFINITY })?;
        let bound_gap = if exhausted {
            let open = stack.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
            (objective - open).max(0.0)
        } else {
            0.0
        };
        Ok((
            model,
            Certificate {
                chosen_set,
                objective,
                nodes_explored: nodes,
                bound_gap,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Instance, Label};
    use crate::ttk::is_feasible;

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

    #[test]
    fn inactive_constraints_leave_svm_optimum() {
        use Label::*;
        let train = data(&[(&[2.0], Some(Pos)), (&[-2.0], Some(Neg))]);
        let test = data(&[(&[3.0], None), (&[4.0], None)]);
        let p = TransductiveProblem::new(train.clone(), test, 2, 1.0).unwrap();
        let (m, obj) = solve_assigned(&p, &[0, 1], &ExactLimits::default()).unwrap();
        let (_, svm_obj) = train_svm(&train, &SvmConfig::default()).unwrap();
        assert!((obj - svm_obj).abs() < 1e-9);
        assert!(is_feasible(&m, &p).unwrap());
    }

    #[test]
    fn contradicting_assignment_costs_more() {
        use Label::*;
        let train = data(&[(&[2.0], Some(Pos)), (&[-2.0], Some(Neg))]);
        let test = data(&[(&[2.0], None), (&[-2.0], None)]);
        let p = TransductiveProblem::new(train, test, 1, 1.0).unwrap();
        let limits = ExactLimits::default();
        let (_, agree) = solve_assigned(&p, &[0], &limits).unwrap();
        let (m, against) = solve_assigned(&p, &[1], &limits).unwrap();
        assert!(against > agree + 0.1);
        assert!(is_feasible(&m, &p).unwrap());
        assert!(m.score(&p.test.instances()[1]).unwrap() > 0.0);
    }

    #[test]
    fn one_dimensional_assignment_beats_grid() {
        let train = data(&[(&[2.0], Some(Label::Pos))]);
        let test = data(&[(&[-1.0], None)]);
        let p = TransductiveProblem::new(train, test, 1, 1.0).unwrap();
        let limits = ExactLimits::default();
        let (m, obj) = solve_assigned(&p, &[0], &limits).unwrap();
        assert!(m.score(&p.test.instances()[0]).unwrap() >= 0.5 * limits.margin_delta);
        // the free intercept makes the constraint cost nothing here
        assert!(obj < 1e-9);
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                let (w, b) = (-2.0 + i as f64 * 0.01, -2.0 + j as f64 * 0.01);
                if -w + b >= limits.margin_delta {
                    best = best.min(0.5 * w * w + (1.0 - (2.0 * w + b)).max(0.0));
                }
            }
        }
        assert!(obj <= best + 1e-9);
    }

    #[test]
    fn capacity_refusal() {
        let train = data(&[(&[1.0], Some(Label::Pos)), (&[-1.0], Some(Label::Neg))]);
        let pts: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let test = Dataset::new(pts.iter().map(|x| Instance::from_dense(x, None).unwrap()).collect());
        let p = TransductiveProblem::new(train, test, 3, 1.0).unwrap();
        assert!(matches!(
            solve_exact(&p, &ExactLimits::default()),
            Err(Error::Capacity { got: 30, limit: 25, .. })
        ));
    }

    #[test]
    fn limits_are_validated() {
        let train = data(&[(&[1.0], Some(Label::Pos)), (&[-1.0], Some(Label::Neg))]);
        let test = data(&[(&[1.0], None), (&[-1.0], None)]);
        let p = TransductiveProblem::new(train, test, 1, 2.0).unwrap();
        let low = ExactLimits { penalty_weight: Some(100.0), ..Default::default() };
        assert!(matches!(solve_exact(&p, &low), Err(Error::Argument(_))));
        let zero = ExactLimits { margin_delta: 0.0, ..Default::default() };
        assert!(matches!(solve_exact(&p, &zero), Err(Error::Argument(_))));
        assert!(matches!(solve_assigned(&p, &[0, 1], &Default::default()), Err(Error::Argument(_))));
        assert!(matches!(solve_assigned(&p, &[5], &Default::default()), Err(Error::Argument(_))));
    }

    #[test]
    fn two_test_points_pick_better_assignment() {
        use Label::*;
        let train = data(&[
            (&[1.0, 0.0], Some(Pos)),
            (&[0.0, 1.0], Some(Neg)),
            (&[0.8, 0.3], Some(Pos)),
        ]);
        let test = data(&[(&[0.5, 0.5], None), (&[0.2, 0.9], None)]);
        let p = TransductiveProblem::new(train, test, 1, 1.0).unwrap();
        let limits = ExactLimits::default();
        let a = solve_assigned(&p, &[0], &limits).map(|r| r.1).unwrap_or(f64::INFINITY);
        let b = solve_assigned(&p, &[1], &limits).map(|r| r.1).unwrap_or(f64::INFINITY);
        let (m, cert) = solve_exact(&p, &limits).unwrap();
        assert!((cert.objective - a.min(b)).abs() < 1e-12);
        assert_eq!(cert.chosen_set, if a <= b { vec![0] } else { vec![1] });
        assert!(is_feasible(&m, &p).unwrap());
        assert_eq!(cert.bound_gap, 0.0);
    }

    #[test]
    fn node_budget_reports_gap() {
        use Label::*;
        let train = data(&[
            (&[1.0, 0.2], Some(Pos)),
            (&[0.1, 1.0], Some(Neg)),
            (&[0.7, 0.6], Some(Pos)),
            (&[-0.5, 0.4], Some(Neg)),
        ]);
        let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()]).collect();
        let test = Dataset::new(pts.iter().map(|x| Instance::from_dense(x, None).unwrap()).collect());
        let p = TransductiveProblem::new(train, test, 3, 1.0).unwrap();
        let (_, full) = solve_exact(&p, &ExactLimits::default()).unwrap();
        let tight = ExactLimits { max_nodes: 3, ..Default::default() };
        let (m, cert) = solve_exact(&p, &tight).unwrap();
        assert!(cert.objective >= full.objective - 1e-12);
        assert!(cert.bound_gap >= 0.0);
        assert!(is_feasible(&m, &p).unwrap());
        assert_eq!(cert.chosen_set.len(), 3);
    }

    #[test]
    fn certificate_json_fields() {
        let c = Certificate { chosen_set: vec![1, 4], objective: 2.5, nodes_explored: 9, bound_gap: 0.0 };
        let v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(v["chosen_set"], serde_json::json!([1, 4]));
        assert_eq!(v["nodes_explored"], 9);
        let back: Certificate = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
