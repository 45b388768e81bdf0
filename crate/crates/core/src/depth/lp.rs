use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};
use serde::Serialize;

use crate::config::LpMode;
use crate::diagnostics::Warning;
use crate::{Error, Result};

/// Penalty per unit of slack in the soft problem.
const SLACK_WEIGHT: f64 = 1000.0;
/// A soft-mode term counts as violated once its slack exceeds this.
const VIOLATION_TOL: f64 = 1e-9;

/// One sampled ordering constraint reduced to surface scales:
/// `closer_depth * X[closer] + epsilon <= farther_depth * X[farther]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderingTerm {
    pub closer: u32,
    pub closer_depth: f64,
    pub farther: u32,
    pub farther_depth: f64,
}

impl OrderingTerm {
    /// Exact check of `closer_depth * X[closer] + epsilon <= farther_depth * X[farther]`.
    pub fn satisfied(&self, scales: &[f64], epsilon: f64) -> bool {
        self.closer_depth * scales[self.closer as usize] + epsilon
            <= self.farther_depth * scales[self.farther as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    /// Scale factor per continuous surface id.
    pub scales: Vec<f64>,
    /// Mode that produced `scales`; strict falls back to soft when infeasible.
    pub mode: LpMode,
    /// Indices of terms whose ordering does not hold in the result.
    pub violated: Vec<usize>,
    pub objective: f64,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

/// Minimises the sum of surface scales subject to the ordering terms.
///
/// In strict mode every term is a hard constraint; if that is infeasible the
/// penalised problem is solved instead and a warning records the fallback.
pub fn solve_ordering_lp(
    num_surfaces: usize,
    terms: &[OrderingTerm],
    epsilon: f64,
    eta: f64,
    mode: LpMode,
) -> Result<LpSolution> {
    if num_surfaces == 0 {
        return Ok(LpSolution {
            scales: Vec::new(),
            mode,
            violated: Vec::new(),
            objective: 0.0,
            warnings: Vec::new(),
        });
    }
    if mode == LpMode::Strict {
        match solve_strict(num_surfaces, terms, epsilon, eta)? {
            Some(scales) => {
                let violated = terms
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| !t.satisfied(&scales, epsilon))
                    .map(|(i, _)| i)
                    .collect();
                return Ok(LpSolution {
                    objective: scales.iter().sum(),
                    scales,
                    mode,
                    violated,
                    warnings: Vec::new(),
                });
            }
            None => {
                let mut sol = solve_soft(num_surfaces, terms, epsilon, eta)?;
                sol.warnings.push(Warning::new(
                    "ordering_infeasible",
                    format!(
                        "hard ordering constraints are infeasible; {} of {} pairs violated after penalised solve",
                        sol.violated.len(),
                        terms.len()
                    ),
                ));
                return Ok(sol);
            }
        }
    }
    solve_soft(num_surfaces, terms, epsilon, eta)
}

fn solve_strict(n: usize, terms: &[OrderingTerm], epsilon: f64, eta: f64) -> Result<Option<Vec<f64>>> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n).map(|_| problem.add_var(1.0, (eta, f64::INFINITY))).collect();
    for t in terms {
        if t.closer == t.farther {
            // same surface on both sides: only satisfiable if the shape already orders it
            if t.farther_depth - t.closer_depth <= 0.0 {
                return Ok(None);
            }
            problem.add_constraint(
                [(vars[t.closer as usize], t.closer_depth - t.farther_depth)],
                ComparisonOp::Le,
                -epsilon,
            );
            continue;
        }
        problem.add_constraint(
            [
                (vars[t.closer as usize], t.closer_depth),
                (vars[t.farther as usize], -t.farther_depth),
            ],
            ComparisonOp::Le,
            -epsilon,
        );
    }
    let solution = match problem.solve() {
        Ok(SolveOutcome::Solution(s)) => s,
        Ok(SolveOutcome::Interrupted(_)) => return Err(Error::Solver("ordering LP interrupted".into())),
        Err(microlp::Error::Infeasible) => return Ok(None),
        Err(e) => return Err(Error::Solver(format!("ordering LP: {e}"))),
    };
    let mut scales: Vec<f64> = vars.iter().map(|&v| solution.var_value(v).max(eta)).collect();
    polish(&mut scales, terms, epsilon);
    Ok(Some(scales))
}

/// Simplex output can miss constraints by rounding error. Raising the
/// farther scale of each short term until none is short is monotone, so it
/// terminates quickly when started from a near-feasible point.
fn polish(scales: &mut [f64], terms: &[OrderingTerm], epsilon: f64) {
    let limit = 64 * (terms.len() + 1);
    for _ in 0..limit {
        let mut changed = false;
        for t in terms {
            if t.closer == t.farther || t.satisfied(scales, epsilon) {
                continue;
            }
            let needed = (t.closer_depth * scales[t.closer as usize] + epsilon) / t.farther_depth;
            let mut x = needed.max(scales[t.farther as usize]);
            while t.closer_depth * scales[t.closer as usize] + epsilon > t.farther_depth * x {
                x = x.next_up();
            }
            scales[t.farther as usize] = x;
            changed = true;
        }
        if !changed {
            return;
        }
    }
}

fn solve_soft(n: usize, terms: &[OrderingTerm], epsilon: f64, eta: f64) -> Result<LpSolution> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n).map(|_| problem.add_var(1.0, (eta, f64::INFINITY))).collect();
    let mut slacks = Vec::with_capacity(terms.len());
    for t in terms {
        let s = problem.add_var(SLACK_WEIGHT, (0.0, f64::INFINITY));
        slacks.push(s);
        if t.closer == t.farther {
            problem.add_constraint(
                [(vars[t.closer as usize], t.closer_depth - t.farther_depth), (s, -1.0)],
                ComparisonOp::Le,
                -epsilon,
            );
        } else {
            problem.add_constraint(
                [
                    (vars[t.closer as usize], t.closer_depth),
                    (vars[t.farther as usize], -t.farther_depth),
                    (s, -1.0),
                ],
                ComparisonOp::Le,
                -epsilon,
            );
        }
    }
    let solution = match problem.solve() {
        Ok(SolveOutcome::Solution(s)) => s,
        Ok(SolveOutcome::Interrupted(_)) => return Err(Error::Solver("ordering LP interrupted".into())),
        Err(e) => return Err(Error::Solver(format!("penalised ordering LP: {e}"))),
    };
    let scales: Vec<f64> = vars.iter().map(|&v| solution.var_value(v).max(eta)).collect();
    let violated = slacks
        .iter()
        .enumerate()
        .filter(|(i, &s)| {
            solution.var_value(s) > VIOLATION_TOL || !terms[*i].satisfied(&scales, epsilon - VIOLATION_TOL)
        })
        .map(|(i, _)| i)
        .collect();
    Ok(LpSolution {
        objective: solution.objective(),
        scales,
        mode: LpMode::Soft,
        violated,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(closer: u32, farther: u32) -> OrderingTerm {
        OrderingTerm {
            closer,
            closer_depth: 1.0,
            farther,
            farther_depth: 1.0,
        }
    }

    #[test]
    fn chain_is_exactly_satisfied() {
        let terms = [term(0, 1), term(1, 2)];
        let sol = solve_ordering_lp(3, &terms, 0.05, 0.01, LpMode::Strict).unwrap();
        assert!(sol.violated.is_empty());
        for t in &terms {
            assert!(t.satisfied(&sol.scales, 0.05));
        }
        assert!((sol.scales[0] - 0.01).abs() < 1e-9);
        assert!((sol.scales[2] - 0.11).abs() < 1e-9);
    }

    #[test]
    fn cycle_falls_back_to_soft() {
        let terms = [term(0, 1), term(1, 2), term(2, 0)];
        let sol = solve_ordering_lp(3, &terms, 0.05, 0.01, LpMode::Strict).unwrap();
        assert_eq!(sol.mode, LpMode::Soft);
        assert_eq!(sol.warnings[0].code, "ordering_infeasible");
        assert_eq!(sol.violated, vec![0, 1, 2]);
        for &x in &sol.scales {
            assert!((x - 0.01).abs() < 1e-9);
        }
    }

    #[test]
    fn unconstrained_surfaces_sit_at_lower_bound() {
        let sol = solve_ordering_lp(2, &[], 0.05, 0.01, LpMode::Soft).unwrap();
        assert_eq!(sol.scales, vec![0.01, 0.01]);
    }
}
