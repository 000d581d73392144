//! Monte Carlo oracles for the closed-form estimation metrics.
//!
//! Channels are drawn as `h = sqrt(beta) C g` with `C C^H = R` (identity for
//! uncorrelated fading), the received pilot block is
//! `Y_l = sum_v h_lv phi_v^T + sigma N`, and the estimates come from the same
//! MMSE estimator the closed forms describe.

use pilotforge_core::estimation::{correlated_w, mmse_filters, pilot_covariance_corr};
use pilotforge_core::linalg::{CMatrix, CVector, HermitianFactor, C64};
use pilotforge_core::rng::{
    complex_gaussian, complex_gaussian_vector, stream_rng, STREAM_MONTE_CARLO,
};
use pilotforge_core::{CoreError, NetworkInstance, Result};
use rand::Rng;

/// Square roots of the correlation matrices, per (bs, user) link.
struct ChannelSampler {
    factors: Option<Vec<CMatrix>>,
    users: usize,
    m: usize,
}

impl ChannelSampler {
    fn new(instance: &NetworkInstance) -> Result<Self> {
        let users = instance.num_users();
        let factors = if instance.is_correlated() {
            let mut out = Vec::with_capacity(instance.num_cells() * users);
            for bs in 0..instance.num_cells() {
                for u in 0..users {
                    let r = instance.correlation(bs, u).expect("correlated instance");
                    let chol =
                        r.clone()
                            .cholesky()
                            .ok_or_else(|| CoreError::NotPositiveDefinite {
                                context: "correlation matrix".into(),
                            })?;
                    out.push(chol.l());
                }
            }
            Some(out)
        } else {
            None
        };
        Ok(Self {
            factors,
            users,
            m: instance.antennas(),
        })
    }

    fn draw<R: Rng>(
        &self,
        instance: &NetworkInstance,
        rng: &mut R,
        bs: usize,
        u: usize,
    ) -> CVector {
        let g = complex_gaussian_vector(rng, self.m);
        let scale = C64::new(instance.beta(bs, u).sqrt(), 0.0);
        match &self.factors {
            Some(f) => &f[bs * self.users + u] * g * scale,
            None => g * scale,
        }
    }
}

/// Received pilot block at one BS for given channels.
fn received<R: Rng>(
    instance: &NetworkInstance,
    pilots: &[CVector],
    channels: &[CVector],
    rng: &mut R,
) -> CMatrix {
    let m = instance.antennas();
    let tau = instance.tau();
    let sigma = instance.noise().sqrt();
    let mut y = CMatrix::from_fn(m, tau, |_, _| complex_gaussian(rng) * sigma);
    for (h, phi) in channels.iter().zip(pilots) {
        y += h * phi.transpose();
    }
    y
}

/// Linear MMSE estimator of one user's channel at its serving BS.
enum Estimator {
    /// `h_hat = Y conj(mu)`.
    Filter(CVector),
    /// `h_hat = G vec(Y)`.
    Matrix(CMatrix),
}

impl Estimator {
    fn build(instance: &NetworkInstance, pilots: &[CVector]) -> Result<Vec<Estimator>> {
        if !instance.is_correlated() {
            return Ok(mmse_filters(instance, pilots)?
                .into_iter()
                .map(|mu| Estimator::Filter(mu.map(|z| z.conj())))
                .collect());
        }
        let k = instance.users_per_cell();
        let mut out = Vec::with_capacity(pilots.len());
        for l in 0..instance.num_cells() {
            let f = HermitianFactor::new(
                &pilot_covariance_corr(instance, pilots, l),
                "correlated covariance",
            )?;
            for u in l * k..(l + 1) * k {
                let w = correlated_w(instance, pilots, u);
                out.push(Estimator::Matrix(f.solve(&w.adjoint()).adjoint()));
            }
        }
        Ok(out)
    }

    fn apply(&self, y: &CMatrix) -> CVector {
        match self {
            Estimator::Filter(c) => y * c,
            Estimator::Matrix(g) => g * CVector::from_column_slice(y.as_slice()),
        }
    }
}

/// Empirical per-user `E ||h_hat - h||^2` over `draws` realizations.
pub fn mse_monte_carlo(
    instance: &NetworkInstance,
    pilots: &[CVector],
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = ChannelSampler::new(instance)?;
    let estimators = Estimator::build(instance, pilots)?;
    let n = instance.num_users();
    let k = instance.users_per_cell();
    let mut rng = stream_rng(seed, STREAM_MONTE_CARLO);
    let mut acc = vec![0.0; n];
    for _ in 0..draws {
        for l in 0..instance.num_cells() {
            let channels: Vec<CVector> = (0..n)
                .map(|v| sampler.draw(instance, &mut rng, l, v))
                .collect();
            let y = received(instance, pilots, &channels, &mut rng);
            for u in l * k..(l + 1) * k {
                acc[u] += (estimators[u].apply(&y) - &channels[u]).norm_squared();
            }
        }
    }
    Ok(acc.into_iter().map(|a| a / draws as f64).collect())
}

/// Empirical `E[y y^H]` of the rows of `Y_l`, which equals `D_l`.
pub fn pilot_covariance_monte_carlo(
    instance: &NetworkInstance,
    pilots: &[CVector],
    l: usize,
    draws: usize,
    seed: u64,
) -> Result<CMatrix> {
    let sampler = ChannelSampler::new(instance)?;
    let n = instance.num_users();
    let tau = instance.tau();
    let mut rng = stream_rng(seed, STREAM_MONTE_CARLO);
    let mut acc = CMatrix::zeros(tau, tau);
    for _ in 0..draws {
        let channels: Vec<CVector> = (0..n)
            .map(|v| sampler.draw(instance, &mut rng, l, v))
            .collect();
        let y = received(instance, pilots, &channels, &mut rng);
        // Each row y_m^T has covariance D_l, so sum_m conj(y_m) y_m^T / M.
        acc += y.transpose() * y.map(|z| z.conj());
    }
    Ok(acc / C64::new((draws * instance.antennas()) as f64, 0.0))
}

/// Use-and-then-forget rate of one user from simulated channels, pilot noise,
/// data symbols with power `data_power` and uplink noise, with MRC on the MMSE
/// estimate: `log2(1 + |mu|^2 E|x|^2 / E|Delta|^2)` with `mu = E[h_hat^H h]`.
pub fn rate_monte_carlo(
    instance: &NetworkInstance,
    pilots: &[CVector],
    user: usize,
    draws: usize,
    data_power: f64,
    seed: u64,
) -> Result<f64> {
    if draws == 0 || !(data_power >= 0.0) {
        return Err(CoreError::InvalidConfig(
            "draws must be positive and data_power nonnegative".into(),
        ));
    }
    let sampler = ChannelSampler::new(instance)?;
    let estimator = Estimator::build(instance, pilots)?.swap_remove(user);
    let n = instance.num_users();
    let l = instance.cell_of(user);
    let m = instance.antennas();
    let sigma = instance.noise().sqrt();
    let amp = data_power.sqrt();
    let mut rng = stream_rng(seed, STREAM_MONTE_CARLO);
    let (mut s_a, mut s_yx) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    let (mut s_yy, mut s_xx) = (0.0, 0.0);
    for _ in 0..draws {
        let channels: Vec<CVector> = (0..n)
            .map(|v| sampler.draw(instance, &mut rng, l, v))
            .collect();
        let y_pilot = received(instance, pilots, &channels, &mut rng);
        let h_hat = estimator.apply(&y_pilot);
        let mut rx = complex_gaussian_vector(&mut rng, m) * C64::new(sigma, 0.0);
        let mut x_own = C64::new(0.0, 0.0);
        for (v, h) in channels.iter().enumerate() {
            let x = complex_gaussian(&mut rng) * amp;
            if v == user {
                x_own = x;
            }
            rx += h * x;
        }
        let out = h_hat.dotc(&rx);
        s_a += h_hat.dotc(&channels[user]);
        s_yy += out.norm_sqr();
        s_yx += out * x_own.conj();
        s_xx += x_own.norm_sqr();
    }
    let d = draws as f64;
    let mu = s_a / d;
    let delta = s_yy / d - 2.0 * (mu.conj() * s_yx / d).re + mu.norm_sqr() * s_xx / d;
    let sinr = mu.norm_sqr() * data_power / delta;
    Ok((1.0 + sinr).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pilotforge_core::estimation::{mse_vectors, pilot_covariance, rate_finite_vectors};
    use pilotforge_core::network::exp_correlation;
    use pilotforge_core::NetworkConfig;

    fn instance(m: usize, correlated: bool) -> NetworkInstance {
        let cfg = NetworkConfig {
            num_cells: 2,
            users_per_cell: 2,
            antennas: m,
            pilot_length: 3,
            max_power_mw: 1.0,
            noise_power_mw: 0.2,
            correlated,
            ..NetworkConfig::default()
        };
        let beta = vec![1.0, 0.7, 0.2, 0.1, 0.15, 0.3, 1.2, 0.8];
        let cov = correlated.then(|| {
            (0..8)
                .map(|i| exp_correlation(m, 0.6, 0.7 * i as f64))
                .collect()
        });
        NetworkInstance::from_parts(cfg, beta, cov).unwrap()
    }

    fn pilots() -> Vec<CVector> {
        let mut rng = stream_rng(7, 40);
        (0..4)
            .map(|_| complex_gaussian_vector(&mut rng, 3))
            .collect()
    }

    #[test]
    fn empirical_covariance_matches_closed_form() {
        let inst = instance(8, false);
        let p = pilots();
        let emp = pilot_covariance_monte_carlo(&inst, &p, 0, 4000, 1).unwrap();
        let exact = pilot_covariance(&inst, &p, 0);
        let err = (&emp - &exact).norm() / exact.norm();
        assert!(err < 0.03, "{err}");
    }

    #[test]
    fn empirical_mse_matches_closed_form_in_both_models() {
        for correlated in [false, true] {
            let inst = instance(6, correlated);
            let p = pilots();
            let emp = mse_monte_carlo(&inst, &p, 4000, 2).unwrap();
            let exact = mse_vectors(&inst, &p).unwrap();
            for (a, b) in emp.iter().zip(&exact) {
                assert!((a - b).abs() < 0.05 * b, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_data_power_gives_zero_rate() {
        let inst = instance(4, false);
        assert_eq!(
            rate_monte_carlo(&inst, &pilots(), 1, 100, 0.0, 3).unwrap(),
            0.0
        );
    }

    #[test]
    fn rate_roughly_matches_closed_form() {
        let inst = instance(8, false);
        let p = pilots();
        let exact = rate_finite_vectors(&inst, &p).unwrap().rate;
        let emp = rate_monte_carlo(&inst, &p, 0, 20_000, 1.0, 4).unwrap();
        assert!(
            (emp - exact[0]).abs() < 0.1 * exact[0],
            "{emp} vs {}",
            exact[0]
        );
    }

    #[test]
    fn single_user_rate_tracks_log_m() {
        let make = |m: usize| {
            let cfg = NetworkConfig {
                num_cells: 1,
                users_per_cell: 1,
                antennas: m,
                pilot_length: 2,
                max_power_mw: 1.0,
                noise_power_mw: 1e-3,
                ..NetworkConfig::default()
            };
            NetworkInstance::from_parts(cfg, vec![1.0], None).unwrap()
        };
        let p = vec![CVector::from_element(2, C64::new(1.0, 0.0))];
        let r16 = rate_monte_carlo(&make(16), &p, 0, 20_000, 1.0, 5).unwrap();
        let r64 = rate_monte_carlo(&make(64), &p, 0, 20_000, 1.0, 5).unwrap();
        assert!((r64 - r16 - 2.0).abs() < 0.2, "{r16} -> {r64}");
    }
}
