//! Oracle suite behind `pilotforge validate`: closed forms against Monte
//! Carlo simulation and against each other.

use pilotforge_core::estimation::{mse_vectors, rate_finite_vectors};
use pilotforge_core::network::exp_correlation;
use pilotforge_core::rng::{complex_gaussian_vector, stream_rng};
use pilotforge_core::{CoreError, NetworkConfig, NetworkInstance};

use crate::oracle::{mse_monte_carlo, rate_monte_carlo};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Draw counts of the suite.
#[derive(Clone, Copy, Debug)]
pub struct SuiteSize {
    pub mse_draws: usize,
    pub rate_draws: usize,
}

impl Default for SuiteSize {
    /// 10^4 draws for MSE, 10^5 for rates.
    fn default() -> Self {
        Self {
            mse_draws: 10_000,
            rate_draws: 100_000,
        }
    }
}

/// Small 2-cell, 2-user network with fixed gains, `tau = 3`.
pub fn oracle_instance(antennas: usize, correlated: bool, seed: u64) -> NetworkInstance {
    let cfg = NetworkConfig {
        num_cells: 2,
        users_per_cell: 2,
        antennas,
        pilot_length: 3,
        max_power_mw: 1.0,
        noise_power_mw: 0.2,
        correlated,
        seed,
        ..NetworkConfig::default()
    };
    let beta = vec![1.0, 0.7, 0.2, 0.1, 0.15, 0.3, 1.2, 0.8];
    let cov = correlated.then(|| {
        (0..8)
            .map(|i| exp_correlation(antennas, 0.5, 0.9 * i as f64 + seed as f64))
            .collect()
    });
    NetworkInstance::from_parts(cfg, beta, cov).expect("valid oracle instance")
}

pub fn oracle_pilots(seed: u64) -> Vec<pilotforge_core::linalg::CVector> {
    let mut rng = stream_rng(seed, 77);
    (0..4)
        .map(|_| complex_gaussian_vector(&mut rng, 3))
        .collect()
}

fn worst_relative(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs())
        .fold(0.0, f64::max)
}

/// MSE closed form against simulation, worst per-user relative gap.
pub fn mse_gap(correlated: bool, draws: usize, seed: u64) -> Result<f64, CoreError> {
    let inst = oracle_instance(8, correlated, seed);
    let pilots = oracle_pilots(seed);
    let exact = mse_vectors(&inst, &pilots)?;
    let emp = mse_monte_carlo(&inst, &pilots, draws, seed)?;
    Ok(worst_relative(&emp, &exact))
}

/// Finite-M rate closed form against the use-and-forget simulation, worst
/// per-user relative gap.
pub fn rate_gap(draws: usize, seed: u64) -> Result<f64, CoreError> {
    let inst = oracle_instance(16, false, seed);
    let pilots = oracle_pilots(seed);
    let exact = rate_finite_vectors(&inst, &pilots)?.rate;
    let mut emp = Vec::with_capacity(exact.len());
    for u in 0..exact.len() {
        emp.push(rate_monte_carlo(
            &inst,
            &pilots,
            u,
            draws,
            1.0,
            seed + u as u64,
        )?);
    }
    Ok(worst_relative(&emp, &exact))
}

/// Identity correlation must reproduce the uncorrelated MSE.
pub fn identity_correlation_gap(seed: u64) -> Result<f64, CoreError> {
    let corr = oracle_instance(6, true, seed).with_identity_correlation();
    let plain = oracle_instance(6, false, seed);
    let pilots = oracle_pilots(seed);
    Ok(worst_relative(
        &mse_vectors(&corr, &pilots)?,
        &mse_vectors(&plain, &pilots)?,
    ))
}

pub fn run_suite(size: SuiteSize) -> Vec<Check> {
    let mut out = Vec::new();
    let mut push = |name: &str, res: Result<f64, CoreError>, tol: f64| {
        let (passed, detail) = match res {
            Ok(gap) => (
                gap <= tol,
                format!("worst relative gap {gap:.3e} (tolerance {tol:e})"),
            ),
            Err(e) => (false, e.to_string()),
        };
        out.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    };
    push(
        "mse_uncorrelated_vs_monte_carlo",
        mse_gap(false, size.mse_draws, 1),
        0.02,
    );
    push(
        "mse_correlated_vs_monte_carlo",
        mse_gap(true, size.mse_draws, 2),
        0.02,
    );
    push(
        "rate_finite_vs_use_and_forget",
        rate_gap(size.rate_draws, 3),
        0.05,
    );
    push(
        "identity_correlation_reduction",
        identity_correlation_gap(4),
        1e-9,
    );
    out
}
