//! Max-min asymptotic rate over orthogonal pilots: Dinkelbach power control
//! alternated with a greedy per-cell pilot assignment.
//!
//! With `xi = p^2`, the large-M SINR of user `u` on its pilot is
//! `beta_uu^2 xi_u / sum_v beta_l(u),v^2 xi_v` over the other users `v` sharing
//! that pilot. Users without a co-pilot interferer have unbounded SINR and do
//! not enter the minimum.

use std::time::Instant;

use crate::error::{CoreError, Result};
use crate::estimation::{sinr_asymptotic_xi, sinr_cap};
use crate::network::NetworkInstance;
use crate::orth::MIN_POWER_FRACTION;
use crate::pilots::{OrthogonalPilots, PilotConfiguration};
use crate::solvers::{simplex_solve, LinearProgram, LpStatus};

#[derive(Clone, Debug)]
pub struct Algo3Options {
    /// Outer (assignment) iterations.
    pub max_outer: usize,
    /// Dinkelbach iterations per outer iteration.
    pub max_inner: usize,
    pub rel_tol: f64,
    /// Pass limit of the greedy assignment.
    pub assignment_passes: usize,
    pub init: OrthogonalPilots,
}

impl Algo3Options {
    /// One outer iteration, up to 100 Dinkelbach steps, relative tolerance 1e-6.
    pub fn new(init: OrthogonalPilots) -> Self {
        Self {
            max_outer: 1,
            max_inner: 100,
            rel_tol: 1e-6,
            assignment_passes: 10,
            init,
        }
    }
}

/// Minimum-SINR history of a max-min run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaxMinTrace {
    /// Accepted `lambda'` values: the initial point, after the assignment
    /// step of each outer iteration, then after every Dinkelbach step.
    pub lambda: Vec<f64>,
    /// Wall time since the start of the run when each `lambda` entry was recorded.
    pub elapsed_ms: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
    /// Set if a Dinkelbach step produced a lower `lambda'` than its input
    /// (the step is then discarded).
    pub raw_decrease: bool,
}

/// `lambda' = min` SINR over users with at least one co-pilot interferer;
/// the SINR cap when there is none.
pub fn min_sinr(instance: &NetworkInstance, xi: &[f64], assignment: &[usize]) -> f64 {
    sinr_asymptotic_xi(instance, assignment, xi)
        .into_iter()
        .flatten()
        .fold(sinr_cap(), f64::min)
}

/// Members of every pilot group with at least two users.
fn contended_groups(assignment: &[usize]) -> Vec<Vec<usize>> {
    let pilots = assignment.iter().copied().max().map_or(0, |m| m + 1);
    (0..pilots)
        .map(|s| {
            (0..assignment.len())
                .filter(|&u| assignment[u] == s)
                .collect::<Vec<_>>()
        })
        .filter(|g| g.len() > 1)
        .collect()
}

/// Scales a pilot group so its largest `xi` equals `P_max^2`, then floors
/// its powers at `MIN_POWER_FRACTION * P_max`. SINRs depend only on ratios
/// within a group, so the first step leaves them unchanged.
fn normalize_group(instance: &NetworkInstance, members: &[usize], xi: &mut [f64]) {
    let cap = instance.p_max() * instance.p_max();
    let floor = (MIN_POWER_FRACTION * instance.p_max()).powi(2);
    let top = members.iter().map(|&u| xi[u]).fold(0.0, f64::max);
    for &u in members {
        let x = if top > 0.0 {
            (xi[u] / top * cap).min(cap)
        } else {
            cap
        };
        xi[u] = x.max(floor);
    }
}

/// Smallest row scale relative to the largest; keeps rows of users with
/// vanishing interference inside the simplex pivot tolerance.
pub const ROW_SCALE_FLOOR: f64 = 1e-6;

/// Minimum SINR inside one pilot group.
fn group_min_sinr(instance: &NetworkInstance, members: &[usize], xi: &[f64]) -> f64 {
    members
        .iter()
        .map(|&u| {
            let l = instance.cell_of(u);
            let interference: f64 = members
                .iter()
                .filter(|&&v| v != u)
                .map(|&v| instance.beta(l, v).powi(2) * xi[v])
                .sum();
            if interference > 0.0 {
                instance.beta(l, u).powi(2) * xi[u] / interference
            } else {
                sinr_cap()
            }
        })
        .fold(sinr_cap(), f64::min)
}

/// One Dinkelbach step for a single pilot group at the current powers
/// `reference`: maximizes `min_u (beta_uu^2 xi_u - lambda I_u(xi)) / I_u(reference)`
/// over `0 <= xi <= P_max^2` through its epigraph linear program, where
/// `I_u(xi) = sum_v beta_l(u),v^2 xi_v` over the other group members `v`.
/// Writes the normalized maximizer into `xi[members]`.
///
/// Dividing each row by the interference at the current point gives the
/// superlinearly convergent form of the generalized Dinkelbach method. Any
/// positive row scaling keeps the key property: if the optimum is
/// nonnegative, every member of the maximizer has SINR at least `lambda`.
fn dinkelbach_group_step(
    instance: &NetworkInstance,
    members: &[usize],
    lambda: f64,
    reference: &[f64],
    iteration: usize,
    xi: &mut [f64],
) -> Result<()> {
    let cap = instance.p_max() * instance.p_max();
    // Full power is a maximizer when lambda <= 0 (every row is then
    // increasing in its own power only).
    if lambda <= 0.0 {
        for &u in members {
            xi[u] = cap;
        }
        return Ok(());
    }
    // Variables: [t, x_0 .. x_{g-1}] with xi = x * P_max^2. Row i reads
    // d_i t - x_i + lambda sum_j c_ij x_j <= 0 with c_ij = beta_lj^2 / beta_ii^2
    // and d_i the current interference in the same units, scaled to max 1.
    let g = members.len();
    let mut rows = Vec::with_capacity(g);
    let mut scales = Vec::with_capacity(g);
    for (i, &u) in members.iter().enumerate() {
        let l = instance.cell_of(u);
        let own = instance.beta(l, u).powi(2);
        let mut row = vec![0.0; g + 1];
        let mut d = 0.0;
        row[i + 1] = -1.0;
        for (j, &v) in members.iter().enumerate().filter(|(j, _)| *j != i) {
            let c = instance.beta(l, v).powi(2) / own;
            row[j + 1] = lambda * c;
            d += c * reference[v] / cap;
        }
        scales.push(d);
        rows.push(row);
    }
    let top = scales.iter().copied().fold(0.0, f64::max);
    for (row, d) in rows.iter_mut().zip(&scales) {
        row[0] = if top > 0.0 {
            (d / top).max(ROW_SCALE_FLOOR)
        } else {
            1.0
        };
    }
    let mut lower = vec![0.0; g + 1];
    lower[0] = f64::NEG_INFINITY;
    let mut upper = vec![1.0; g + 1];
    upper[0] = f64::INFINITY;
    let mut objective = vec![0.0; g + 1];
    objective[0] = 1.0;
    let sol = simplex_solve(&LinearProgram {
        objective,
        rhs: vec![0.0; g],
        rows,
        lower,
        upper,
    });
    if sol.status != LpStatus::Optimal {
        return Err(CoreError::LinearProgram {
            iteration,
            status: sol.status,
        });
    }
    // A zero optimum certifies that lambda is already the group's max-min
    // value; the origin is then among the maximizers, so keep the reference.
    if !(sol.x[0] > 0.0) || sol.x[1..].iter().all(|x| *x <= 0.0) {
        for &u in members {
            xi[u] = reference[u];
        }
        return Ok(());
    }
    for (i, &u) in members.iter().enumerate() {
        xi[u] = sol.x[i + 1].clamp(0.0, 1.0) * cap;
    }
    normalize_group(instance, members, xi);
    Ok(())
}

/// One Dinkelbach step at a common `lambda` for every pilot group (groups do
/// not interact, so each gets its own linear program). Uncontended users go
/// to full power.
pub fn dinkelbach_power_step(
    instance: &NetworkInstance,
    assignment: &[usize],
    lambda: f64,
    reference: &[f64],
    iteration: usize,
) -> Result<Vec<f64>> {
    let cap = instance.p_max() * instance.p_max();
    let mut xi = vec![cap; assignment.len()];
    for members in contended_groups(assignment) {
        dinkelbach_group_step(instance, &members, lambda, reference, iteration, &mut xi)?;
    }
    Ok(xi)
}

/// SINR of user `u` if it moved to `pilot`, everyone else unchanged.
fn sinr_on(
    instance: &NetworkInstance,
    xi: &[f64],
    assignment: &[usize],
    u: usize,
    pilot: usize,
) -> f64 {
    let l = instance.cell_of(u);
    let interference: f64 = (0..assignment.len())
        .filter(|&v| v != u && assignment[v] == pilot)
        .map(|v| instance.beta(l, v).powi(2) * xi[v])
        .sum();
    if interference > 0.0 {
        instance.beta(l, u).powi(2) * xi[u] / interference
    } else {
        f64::INFINITY
    }
}

/// Greedy per-cell assignment for fixed powers.
///
/// Cell by cell, the users are reassigned from scratch: the currently worst
/// user takes the unused pilot that maximizes its SINR against the other
/// cells, then the next worst, and so on (ties go to the lowest pilot index).
/// A cell's new assignment is kept only if it strictly raises the network
/// minimum SINR. Passes repeat until nothing changes or `max_passes` is hit.
pub fn smart_assignment(
    instance: &NetworkInstance,
    powers: &[f64],
    assignment: &[usize],
    max_passes: usize,
) -> Vec<usize> {
    let tau = instance.tau();
    let k_users = instance.users_per_cell();
    let xi: Vec<f64> = powers.iter().map(|p| p * p).collect();
    let mut current = assignment.to_vec();
    let mut best = min_sinr(instance, &xi, &current);
    for _ in 0..max_passes {
        let mut changed = false;
        for l in 0..instance.num_cells() {
            let users: Vec<usize> = (l * k_users..(l + 1) * k_users).collect();
            let sinr = sinr_asymptotic_xi(instance, &current, &xi);
            let mut order = users.clone();
            order.sort_by(|&a, &b| {
                let sa = sinr[a].unwrap_or(f64::INFINITY);
                let sb = sinr[b].unwrap_or(f64::INFINITY);
                sa.total_cmp(&sb).then(a.cmp(&b))
            });
            let mut trial = current.clone();
            // Users of this cell are placed one by one; unplaced ones must not
            // count as interferers, so park them on a sentinel pilot.
            for &u in &users {
                trial[u] = usize::MAX;
            }
            let mut used = vec![false; tau];
            for &u in &order {
                let mut pick = None;
                let mut pick_sinr = f64::NEG_INFINITY;
                for s in (0..tau).filter(|&s| !used[s]) {
                    let v = sinr_on(instance, &xi, &trial, u, s);
                    if v > pick_sinr {
                        pick_sinr = v;
                        pick = Some(s);
                    }
                }
                let s = pick.expect("at least as many pilots as users");
                used[s] = true;
                trial[u] = s;
            }
            if trial != current {
                let value = min_sinr(instance, &xi, &trial);
                if value > best {
                    best = value;
                    current = trial;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    current
}

/// Max-min asymptotic rate design. Returns the final configuration (powers
/// `sqrt(xi)`) and the `lambda'` history.
pub fn run_algorithm3(
    instance: &NetworkInstance,
    options: &Algo3Options,
) -> Result<(OrthogonalPilots, MaxMinTrace)> {
    if instance.is_correlated() {
        return Err(CoreError::InvalidConfig(
            "max-min design is defined for uncorrelated fading only".into(),
        ));
    }
    if !(options.rel_tol > 0.0) {
        return Err(CoreError::InvalidConfig("rel_tol must be positive".into()));
    }
    PilotConfiguration::Orthogonal(options.init.clone()).validate(instance, true)?;

    let start = Instant::now();
    let ms = |t: Instant| t.elapsed().as_secs_f64() * 1e3;
    let mut assignment = options.init.assignment.clone();
    let mut xi: Vec<f64> = options.init.powers.iter().map(|p| p * p).collect();
    let mut lambda = min_sinr(instance, &xi, &assignment);
    let mut trace = MaxMinTrace {
        lambda: vec![lambda],
        elapsed_ms: vec![0.0],
        ..MaxMinTrace::default()
    };
    let cap = sinr_cap();
    let mut step_index = 0;
    for _ in 0..options.max_outer {
        trace.outer_iterations += 1;
        let outer_start = lambda;
        let powers: Vec<f64> = xi.iter().map(|x| x.sqrt()).collect();
        let next = smart_assignment(instance, &powers, &assignment, options.assignment_passes);
        let next_lambda = min_sinr(instance, &xi, &next);
        if next_lambda >= lambda {
            assignment = next;
            lambda = next_lambda;
        }
        trace.lambda.push(lambda);
        trace.elapsed_ms.push(ms(start));

        // Pilot groups are independent, so each runs its own Dinkelbach
        // sequence; lambda' is the minimum over groups.
        let groups = contended_groups(&assignment);
        let mut group_lambda: Vec<f64> = groups
            .iter()
            .map(|g| group_min_sinr(instance, g, &xi))
            .collect();
        let mut active = vec![true; groups.len()];
        trace.converged = groups.is_empty();
        for _ in 0..options.max_inner {
            if !active.iter().any(|a| *a) {
                trace.converged = true;
                break;
            }
            step_index += 1;
            trace.inner_iterations += 1;
            for (gi, members) in groups.iter().enumerate() {
                if !active[gi] {
                    continue;
                }
                let current = group_lambda[gi];
                let mut candidate = xi.clone();
                dinkelbach_group_step(instance, members, current, &xi, step_index, &mut candidate)?;
                let value = group_min_sinr(instance, members, &candidate);
                if value < current {
                    if value < current * (1.0 - 1e-9) {
                        trace.raw_decrease = true;
                    }
                    active[gi] = false;
                    continue;
                }
                for &u in members {
                    xi[u] = candidate[u];
                }
                group_lambda[gi] = value;
                if value - current <= options.rel_tol * value || value >= cap {
                    active[gi] = false;
                }
            }
            let value = group_lambda.iter().copied().fold(cap, f64::min);
            log::debug!("dinkelbach step {step_index}: {lambda:.6e} -> {value:.6e}");
            lambda = value;
            trace.lambda.push(lambda);
            trace.elapsed_ms.push(ms(start));
        }
        if !active.iter().any(|a| *a) {
            trace.converged = true;
        }
        if lambda - outer_start <= options.rel_tol * lambda.max(f64::MIN_POSITIVE)
            && trace.outer_iterations > 1
        {
            break;
        }
    }
    let powers = xi.iter().map(|x| x.sqrt()).collect();
    Ok((
        OrthogonalPilots {
            basis: options.init.basis.clone(),
            assignment,
            powers,
        },
        trace,
    ))
}
