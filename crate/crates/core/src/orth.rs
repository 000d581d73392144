//! Orthogonal pilot assignment and power control by quadratic transform and
//! per-cell weighted bipartite matching.
//!
//! For fixed auxiliaries, placing user `u` on basis pilot `s` with power `p`
//! contributes `2 sqrt(p) a - p d` to the surrogate, with
//! `a = Re{phi_s^H v_u}` and `d = phi_s^H Q_u phi_s`. The best power on each
//! pilot is closed form, and the pilot choice is a matching within each cell.

use crate::error::{CoreError, Result};
use crate::estimation::{mse_vectors, weighted_sum};
use crate::fp::{surrogate_at, Surrogate};
use crate::linalg::{hermitian_form, CMatrix};
use crate::network::NetworkInstance;
use crate::pilots::OrthogonalPilots;
use crate::solvers::hungarian_max;
use crate::trace::{run_descent, IterationTrace};

/// Powers chosen at exactly zero are raised to this fraction of `P_max` so
/// that every configured power stays strictly positive.
pub const MIN_POWER_FRACTION: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrthStep {
    /// Per-cell maximum-weight matching; pilots stay distinct within a cell.
    Matching,
    /// Each user takes its best pilot independently (in-cell reuse allowed).
    LinearSearch,
}

#[derive(Clone, Debug)]
pub struct Algo2Options {
    pub step: OrthStep,
    pub weights: Vec<f64>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub init: OrthogonalPilots,
}

impl Algo2Options {
    /// Matching steps, 100 iterations, relative tolerance 1e-6.
    pub fn new(init: OrthogonalPilots, weights: Vec<f64>) -> Self {
        Self {
            step: OrthStep::Matching,
            weights,
            max_iters: 100,
            rel_tol: 1e-6,
            init,
        }
    }
}

/// Best power on pilot `s` for user `u` and the resulting surrogate contribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub power: f64,
    pub weight: f64,
}

/// `p = min{P_max, (a / d)^2}`, zero when `a <= 0` and `P_max` when `d` is
/// degenerate (the contribution is then increasing in `p`).
pub fn candidate_power(
    s: &Surrogate,
    basis: &CMatrix,
    u: usize,
    pilot: usize,
    p_max: f64,
) -> Candidate {
    let phi = basis.column(pilot).into_owned();
    let a = phi.dotc(&s.linear[u]).re;
    let d = hermitian_form(&s.quadratic[u], &phi);
    if !(a > 0.0) {
        return Candidate {
            power: 0.0,
            weight: 0.0,
        };
    }
    let ratio = a / d;
    let power = if d > 0.0 && ratio.is_finite() {
        (ratio * ratio).min(p_max)
    } else {
        p_max
    };
    Candidate {
        power,
        weight: 2.0 * power.sqrt() * a - power * d,
    }
}

/// Candidate power and weight of every (user, pilot) pair.
#[derive(Clone, Debug)]
pub struct MatchingWeights {
    pub power: Vec<Vec<f64>>,
    pub weight: Vec<Vec<f64>>,
}

pub fn matching_weights(
    instance: &NetworkInstance,
    s: &Surrogate,
    basis: &CMatrix,
) -> MatchingWeights {
    let tau = basis.ncols();
    let mut power = Vec::with_capacity(instance.num_users());
    let mut weight = Vec::with_capacity(instance.num_users());
    for u in 0..instance.num_users() {
        let c: Vec<Candidate> = (0..tau)
            .map(|pilot| candidate_power(s, basis, u, pilot, instance.p_max()))
            .collect();
        power.push(c.iter().map(|x| x.power).collect());
        weight.push(c.iter().map(|x| x.weight).collect());
    }
    MatchingWeights { power, weight }
}

/// Maximum-weight distinct pilot choice for the users of one cell.
pub fn match_cell(weights: &[Vec<f64>]) -> Vec<usize> {
    hungarian_max(weights).columns
}

fn floor_power(p: f64, p_max: f64) -> f64 {
    p.max(MIN_POWER_FRACTION * p_max)
}

/// Assignment by per-cell matching with the candidate powers.
pub fn matching_step(
    instance: &NetworkInstance,
    s: &Surrogate,
    basis: &CMatrix,
) -> Result<OrthogonalPilots> {
    let k_users = instance.users_per_cell();
    let tau = basis.ncols();
    if k_users > tau {
        return Err(CoreError::InvalidConfig(format!(
            "{k_users} users per cell cannot hold distinct pilots out of {tau}"
        )));
    }
    let w = matching_weights(instance, s, basis);
    let mut assignment = vec![0; instance.num_users()];
    let mut powers = vec![0.0; instance.num_users()];
    for l in 0..instance.num_cells() {
        let users = l * k_users..(l + 1) * k_users;
        let cols = match_cell(&w.weight[users.clone()]);
        for (u, col) in users.zip(cols) {
            assignment[u] = col;
            powers[u] = floor_power(w.power[u][col], instance.p_max());
        }
    }
    Ok(OrthogonalPilots {
        basis: basis.clone(),
        assignment,
        powers,
    })
}

/// Assignment where each user independently takes its best pilot; ties go to
/// the lowest index.
pub fn linear_search_step(
    instance: &NetworkInstance,
    s: &Surrogate,
    basis: &CMatrix,
) -> OrthogonalPilots {
    let w = matching_weights(instance, s, basis);
    let mut assignment = Vec::with_capacity(instance.num_users());
    let mut powers = Vec::with_capacity(instance.num_users());
    for u in 0..instance.num_users() {
        let mut best = 0;
        for pilot in 1..basis.ncols() {
            if w.weight[u][pilot] > w.weight[u][best] {
                best = pilot;
            }
        }
        assignment.push(best);
        powers.push(floor_power(w.power[u][best], instance.p_max()));
    }
    OrthogonalPilots {
        basis: basis.clone(),
        assignment,
        powers,
    }
}

fn run(
    instance: &NetworkInstance,
    options: &Algo2Options,
) -> Result<(OrthogonalPilots, IterationTrace)> {
    if !(options.rel_tol > 0.0) {
        return Err(CoreError::InvalidConfig("rel_tol must be positive".into()));
    }
    if options.weights.len() != instance.num_users()
        || options.weights.iter().any(|w| !(*w > 0.0 && w.is_finite()))
    {
        return Err(CoreError::InvalidConfig(
            "weights must be positive, one per user".into(),
        ));
    }
    let distinct = options.step == OrthStep::Matching;
    crate::pilots::PilotConfiguration::Orthogonal(options.init.clone())
        .validate(instance, distinct)?;
    let weights = &options.weights;
    let objective = |p: &OrthogonalPilots| -> Result<f64> {
        let vectors: Vec<_> = (0..p.assignment.len()).map(|u| p.pilot(u)).collect();
        Ok(weighted_sum(&mse_vectors(instance, &vectors)?, weights))
    };
    let start = objective(&options.init)?;
    run_descent(
        options.init.clone(),
        start,
        options.max_iters,
        options.rel_tol,
        |pilots, _| {
            let vectors: Vec<_> = (0..pilots.assignment.len())
                .map(|u| pilots.pilot(u))
                .collect();
            let s = surrogate_at(instance, &vectors, weights)?;
            let next = match options.step {
                OrthStep::Matching => matching_step(instance, &s, &pilots.basis)?,
                OrthStep::LinearSearch => linear_search_step(instance, &s, &pilots.basis),
            };
            let value = objective(&next)?;
            Ok((next, value))
        },
    )
}

/// Orthogonal design under uncorrelated fading.
pub fn run_algorithm2(
    instance: &NetworkInstance,
    options: &Algo2Options,
) -> Result<(OrthogonalPilots, IterationTrace)> {
    if instance.is_correlated() {
        return Err(CoreError::InvalidConfig(
            "instance is correlated; use run_algorithm2_correlated".into(),
        ));
    }
    run(instance, options)
}

/// Orthogonal design under spatially correlated fading; the candidate power is
/// `Re{phi_s^H v} / (phi_s^H Q phi_s)` squared and clamped to `[0, P_max]`.
pub fn run_algorithm2_correlated(
    instance: &NetworkInstance,
    options: &Algo2Options,
) -> Result<(OrthogonalPilots, IterationTrace)> {
    if !instance.is_correlated() {
        return Err(CoreError::InvalidConfig(
            "instance has no correlation matrices".into(),
        ));
    }
    run(instance, options)
}
