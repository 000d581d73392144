//! Reference designs the optimized pilots are compared against.

use pilotforge_core::estimation::EstimationReport;
use pilotforge_core::maxmin::smart_assignment;
use pilotforge_core::pilots::dft_basis;
use pilotforge_core::rng::{
    complex_gaussian_vector, stream_rng, STREAM_ORTHOGONAL_BASELINE, STREAM_RANDOM_BASELINE,
};
use pilotforge_core::{CoreError, NetworkInstance, OrthogonalPilots, PilotConfiguration, Result};
use rand::seq::SliceRandom;

/// Each cell draws `K` distinct DFT pilots uniformly at random; everyone
/// transmits at `P_max`. Seeded by the instance seed.
pub fn baseline_orthogonal(instance: &NetworkInstance) -> Result<OrthogonalPilots> {
    let tau = instance.tau();
    let k = instance.users_per_cell();
    if tau < k {
        return Err(CoreError::InvalidConfig(format!(
            "orthogonal baseline needs tau >= {k}, got {tau}"
        )));
    }
    let mut rng = stream_rng(instance.config.seed, STREAM_ORTHOGONAL_BASELINE);
    let mut assignment = Vec::with_capacity(instance.num_users());
    for _ in 0..instance.num_cells() {
        let mut cols: Vec<usize> = (0..tau).collect();
        cols.shuffle(&mut rng);
        assignment.extend_from_slice(&cols[..k]);
    }
    Ok(OrthogonalPilots {
        basis: dft_basis(tau),
        assignment,
        powers: vec![instance.p_max(); instance.num_users()],
    })
}

/// I.i.d. CN(0, 1) symbols, each pilot rescaled to energy exactly `tau P_max`.
pub fn baseline_random(instance: &NetworkInstance) -> PilotConfiguration {
    let tau = instance.tau();
    let energy = tau as f64 * instance.p_max();
    let mut rng = stream_rng(instance.config.seed, STREAM_RANDOM_BASELINE);
    let pilots = (0..instance.num_users())
        .map(|_| {
            let g = complex_gaussian_vector(&mut rng, tau);
            let norm = g.norm();
            g.unscale(norm).scale(energy.sqrt())
        })
        .collect();
    PilotConfiguration::Arbitrary(pilots)
}

/// Greedy per-cell reassignment of the orthogonal baseline at full power
/// (reconstructed baseline).
pub fn baseline_smart(instance: &NetworkInstance, max_passes: usize) -> Result<OrthogonalPilots> {
    let mut pilots = baseline_orthogonal(instance)?;
    pilots.assignment = smart_assignment(instance, &pilots.powers, &pilots.assignment, max_passes);
    Ok(pilots)
}

/// Contamination-free MSE `M beta sigma^2 / (sigma^2 + beta tau P_max)`: each
/// user alone with its full-power pilot. No rates are reported.
pub fn lower_bound_mse(instance: &NetworkInstance, weights: &[f64]) -> EstimationReport {
    let m = instance.antennas() as f64;
    let s2 = instance.noise();
    let e = instance.tau() as f64 * instance.p_max();
    let mse: Vec<f64> = (0..instance.num_users())
        .map(|u| {
            let b = instance.beta_own(u);
            m * b * s2 / (s2 + b * e)
        })
        .collect();
    let weighted_sum_mse = mse.iter().zip(weights).map(|(x, w)| x * w).sum();
    EstimationReport {
        mse,
        weighted_sum_mse,
        rate_finite: None,
        rate_asymptotic: None,
        flagged: Vec::new(),
    }
}
