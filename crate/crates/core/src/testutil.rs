//! Small deterministic instances shared by unit tests.

use crate::linalg::CVector;
use crate::network::{exp_correlation, NetworkConfig, NetworkInstance};
use crate::rng::{complex_gaussian_vector, stream_rng};

pub fn tiny_instance(
    l: usize,
    k: usize,
    m: usize,
    tau: usize,
    noise: f64,
    seed: u64,
) -> NetworkInstance {
    let mut rng = stream_rng(seed, 99);
    let n = l * k;
    let beta: Vec<f64> = (0..l * n)
        .map(|idx| {
            let bs = idx / n;
            let u = idx % n;
            let own = u / k == bs;
            let x: f64 = rand::Rng::random_range(&mut rng, 0.2..1.0);
            if own {
                x + 0.5
            } else {
                0.3 * x
            }
        })
        .collect();
    let cfg = NetworkConfig {
        num_cells: l,
        users_per_cell: k,
        antennas: m,
        pilot_length: tau,
        max_power_mw: 1.0,
        noise_power_mw: noise,
        ..NetworkConfig::default()
    };
    NetworkInstance::from_parts(cfg, beta, None).unwrap()
}

pub fn correlated_tiny(
    l: usize,
    k: usize,
    m: usize,
    tau: usize,
    noise: f64,
    seed: u64,
) -> NetworkInstance {
    let base = tiny_instance(l, k, m, tau, noise, seed);
    let mut rng = stream_rng(seed, 98);
    let cov = (0..base.beta_tensor().len())
        .map(|_| exp_correlation(m, 0.7, rand::Rng::random_range(&mut rng, 0.0..6.28)))
        .collect();
    let mut cfg = base.config.clone();
    cfg.correlated = true;
    NetworkInstance::from_parts(cfg, base.beta_tensor().to_vec(), Some(cov)).unwrap()
}

pub fn random_pilots(n: usize, tau: usize, seed: u64) -> Vec<CVector> {
    let mut rng = stream_rng(seed, 97);
    (0..n)
        .map(|_| complex_gaussian_vector(&mut rng, tau))
        .collect()
}
