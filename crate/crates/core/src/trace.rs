//! Iteration traces and the shared monotone descent loop.

use std::time::Instant;

use crate::error::Result;

/// Objective history of an iterative design.
///
/// `objective[0]` is the value at the initial point and `objective[i]` the
/// value after iteration `i`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationTrace {
    pub objective: Vec<f64>,
    /// Wall time since the start of the run when each entry was recorded.
    pub elapsed_ms: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Set when a step would have worsened the objective; that step was discarded.
    pub stopped_on_increase: bool,
}

impl IterationTrace {
    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("trace has the initial value")
    }

    /// Largest increase between consecutive entries (0 when nonincreasing).
    pub fn max_increase(&self) -> f64 {
        self.objective
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Whether consecutive increases stay within `slack` relative to the earlier entry.
    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.objective
            .windows(2)
            .all(|w| w[1] <= w[0] + slack * w[0].abs())
    }

    /// First iteration whose objective is within `rel` of the final value.
    pub fn iterations_to_within(&self, rel: f64) -> usize {
        let last = self.final_objective();
        self.objective
            .iter()
            .position(|v| (v - last).abs() <= rel * last.abs())
            .unwrap_or(self.objective.len() - 1)
    }
}

/// Relative slack on the objective before a step counts as an increase.
pub const INCREASE_SLACK: f64 = 1e-10;

/// Descent loop for minimization: `step` maps the current state to the next
/// state and its objective. Stops when the relative change drops below
/// `rel_tol` or after `max_iters` steps. A step that raises the objective by
/// more than [`INCREASE_SLACK`] is discarded and ends the run.
pub fn run_descent<S, F>(
    initial: S,
    initial_objective: f64,
    max_iters: usize,
    rel_tol: f64,
    mut step: F,
) -> Result<(S, IterationTrace)>
where
    F: FnMut(&S, usize) -> Result<(S, f64)>,
{
    let start = Instant::now();
    let mut trace = IterationTrace {
        objective: vec![initial_objective],
        elapsed_ms: vec![0.0],
        ..IterationTrace::default()
    };
    let mut state = initial;
    let mut current = initial_objective;
    for iter in 1..=max_iters {
        let (next, value) = step(&state, iter)?;
        if value > current + INCREASE_SLACK * current.abs() {
            log::warn!("objective rose from {current:e} to {value:e} at iteration {iter}; keeping previous iterate");
            trace.stopped_on_increase = true;
            break;
        }
        let change = (current - value).abs();
        state = next;
        trace.objective.push(value);
        trace.elapsed_ms.push(start.elapsed().as_secs_f64() * 1e3);
        trace.iterations_used = iter;
        let done = change <= rel_tol * current.abs();
        current = value;
        if done {
            trace.converged = true;
            break;
        }
    }
    Ok((state, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_geometric_decay() {
        let (s, t) =
            run_descent(1.0f64, 2.0, 1000, 1e-6, |x, _| Ok((x * 0.5, 1.0 + x * 0.5))).unwrap();
        assert!(t.converged);
        assert!(s < 1e-5);
        assert!(t.is_nonincreasing(0.0));
    }

    #[test]
    fn increase_is_rejected() {
        let (s, t) = run_descent(0u32, 1.0, 10, 1e-12, |x, i| {
            Ok((x + 1, if i == 3 { 2.0 } else { 1.0 - 0.1 * i as f64 }))
        })
        .unwrap();
        assert!(t.stopped_on_increase);
        assert_eq!(s, 2);
        assert_eq!(t.iterations_used, 2);
    }
}
