//! Nonorthogonal pilot design by alternating quadratic-transform updates.
//!
//! Each iteration refreshes the auxiliaries at their closed-form optimum and
//! then maximizes the surrogate over the pilots, either per user under the
//! energy cap (Lagrange multiplier by bisection) or jointly by solving the
//! uncapped problem and scaling every pilot by a common factor.

use crate::error::{CoreError, Result};
use crate::estimation::{mse_vectors, weighted_sum};
#[cfg(debug_assertions)]
use crate::fp::weighted_prior_energy;
use crate::fp::{surrogate_at, Surrogate};
use crate::linalg::{maximize_concave_quadratic, CVector, C64};
use crate::network::NetworkInstance;
use crate::pilots::PilotConfiguration;
use crate::trace::{run_descent, IterationTrace};

/// Maximum bisection halvings for the power multiplier.
pub const MAX_HALVINGS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateRule {
    /// Per-user multiplier found by bisection.
    LagrangeBisection,
    /// Multiplier dropped, then one common scaling meets every cap.
    NoiselessScaling,
}

#[derive(Clone, Debug)]
pub struct Algo1Options {
    pub update_rule: UpdateRule,
    pub weights: Vec<f64>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub init: PilotConfiguration,
}

impl Algo1Options {
    /// Lagrange updates, 500 iterations, relative tolerance 1e-6.
    pub fn new(init: PilotConfiguration, weights: Vec<f64>) -> Self {
        Self {
            update_rule: UpdateRule::LagrangeBisection,
            weights,
            max_iters: 500,
            rel_tol: 1e-6,
            init,
        }
    }

    fn validate(&self, instance: &NetworkInstance) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(CoreError::InvalidConfig("rel_tol must be positive".into()));
        }
        if self.weights.len() != instance.num_users()
            || self.weights.iter().any(|w| !(*w > 0.0 && w.is_finite()))
        {
            return Err(CoreError::InvalidConfig(
                "weights must be positive, one per user".into(),
            ));
        }
        self.init.validate(instance, false)
    }
}

/// Per-user maximizer of the surrogate under `||phi||^2 <= tau P_max`.
pub fn maximize_capped(instance: &NetworkInstance, s: &Surrogate) -> Result<Vec<CVector>> {
    let cap = instance.tau() as f64 * instance.p_max();
    (0..instance.num_users())
        .map(|u| {
            maximize_concave_quadratic(&s.quadratic[u], &s.linear[u], Some(cap), MAX_HALVINGS)
                .map(|r| r.x)
                .map_err(|halvings| CoreError::BisectionFailed { user: u, halvings })
        })
        .collect()
}

/// Uncapped maximizers scaled by `min_u sqrt(tau P_max) / ||phi_u||`.
/// Returns `None` when every uncapped pilot is zero.
pub fn maximize_scaled(instance: &NetworkInstance, s: &Surrogate) -> Option<Vec<CVector>> {
    let cap = instance.tau() as f64 * instance.p_max();
    let tentative: Vec<CVector> = (0..instance.num_users())
        .map(|u| {
            maximize_concave_quadratic(&s.quadratic[u], &s.linear[u], None, 0)
                .expect("uncapped maximizer needs no bisection")
                .x
        })
        .collect();
    let delta = tentative
        .iter()
        .map(|p| p.norm())
        .filter(|n| *n > 0.0)
        .map(|n| cap.sqrt() / n)
        .fold(f64::INFINITY, f64::min);
    if !delta.is_finite() {
        return None;
    }
    Some(
        tentative
            .into_iter()
            .map(|p| p * C64::new(delta, 0.0))
            .collect(),
    )
}

/// Lagrange pilot update for fixed auxiliaries `mu` (uncorrelated fading).
pub fn update_pilots_lagrange(
    instance: &NetworkInstance,
    mu: &[CVector],
    weights: &[f64],
) -> Result<Vec<CVector>> {
    maximize_capped(
        instance,
        &crate::fp::uncorrelated_surrogate(instance, mu, weights),
    )
}

/// Scaled pilot update for fixed auxiliaries `mu`; `fallback` is returned when
/// every tentative pilot vanishes.
pub fn update_pilots_scaled(
    instance: &NetworkInstance,
    mu: &[CVector],
    weights: &[f64],
    fallback: &[CVector],
) -> Vec<CVector> {
    maximize_scaled(
        instance,
        &crate::fp::uncorrelated_surrogate(instance, mu, weights),
    )
    .unwrap_or_else(|| fallback.to_vec())
}

fn run(
    instance: &NetworkInstance,
    options: &Algo1Options,
) -> Result<(PilotConfiguration, IterationTrace)> {
    options.validate(instance)?;
    let weights = &options.weights;
    let init = options.init.vectors();
    let objective =
        |p: &[CVector]| -> Result<f64> { Ok(weighted_sum(&mse_vectors(instance, p)?, weights)) };
    let start = objective(&init)?;
    let (pilots, trace) = run_descent(
        init.clone(),
        start,
        options.max_iters,
        options.rel_tol,
        |pilots, _| {
            let s = surrogate_at(instance, pilots, weights)?;
            #[cfg(debug_assertions)]
            {
                let current = objective(pilots)?;
                let prior = weighted_prior_energy(instance, weights);
                let bound = prior - s.value(pilots);
                debug_assert!(
                    (bound - current).abs() <= 1e-6 * current.abs().max(prior * 1e-9),
                    "quadratic transform not tight: {bound} vs {current}"
                );
            }
            let next = match options.update_rule {
                UpdateRule::LagrangeBisection => maximize_capped(instance, &s)?,
                UpdateRule::NoiselessScaling => {
                    maximize_scaled(instance, &s).unwrap_or_else(|| init.clone())
                }
            };
            let value = objective(&next)?;
            Ok((next, value))
        },
    )?;
    Ok((PilotConfiguration::Arbitrary(pilots), trace))
}

/// Nonorthogonal design under uncorrelated fading.
pub fn run_algorithm1(
    instance: &NetworkInstance,
    options: &Algo1Options,
) -> Result<(PilotConfiguration, IterationTrace)> {
    if instance.is_correlated() {
        return Err(CoreError::InvalidConfig(
            "instance is correlated; use run_algorithm1_correlated".into(),
        ));
    }
    run(instance, options)
}

/// Nonorthogonal design under spatially correlated fading.
pub fn run_algorithm1_correlated(
    instance: &NetworkInstance,
    options: &Algo1Options,
) -> Result<(PilotConfiguration, IterationTrace)> {
    if !instance.is_correlated() {
        return Err(CoreError::InvalidConfig(
            "instance has no correlation matrices".into(),
        ));
    }
    run(instance, options)
}
