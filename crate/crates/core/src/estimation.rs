//! Closed-form channel-estimation metrics: pilot covariance, MMSE estimates,
//! per-user MSE and achievable rates.

use crate::error::Result;
use crate::linalg::{add_scaled_outer, CMatrix, CVector, HermitianFactor, C64};
use crate::network::NetworkInstance;
use crate::pilots::{OrthogonalPilots, PilotConfiguration};

/// Rate reported for users whose SINR is unbounded or numerically infinite.
pub const RATE_CAP_BITS: f64 = 30.0;

/// SINR equivalent of [`RATE_CAP_BITS`].
pub fn sinr_cap() -> f64 {
    2f64.powf(RATE_CAP_BITS) - 1.0
}

pub fn rate_from_sinr(sinr: f64) -> f64 {
    (1.0 + sinr).log2().min(RATE_CAP_BITS)
}

/// Weight presets for the weighted sum MSE.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightPreset {
    /// All weights 1 (plain sum MSE).
    Unit,
    /// `1 / beta_llk`, i.e. MSE normalized by the channel strength.
    Normalized,
}

pub fn weights(instance: &NetworkInstance, preset: WeightPreset) -> Vec<f64> {
    (0..instance.num_users())
        .map(|u| match preset {
            WeightPreset::Unit => 1.0,
            WeightPreset::Normalized => 1.0 / instance.beta_own(u),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationReport {
    pub mse: Vec<f64>,
    pub weighted_sum_mse: f64,
    /// Finite-M rates; absent for correlated instances.
    pub rate_finite: Option<Vec<f64>>,
    /// Large-M rates; present only for orthogonal pilots.
    pub rate_asymptotic: Option<Vec<f64>>,
    /// Users whose finite-M SINR denominator vanished numerically.
    pub flagged: Vec<usize>,
}

/// `D_l = sigma^2 I + sum_(i,j) beta_lij phi_ij phi_ij^H`.
pub fn pilot_covariance(instance: &NetworkInstance, pilots: &[CVector], l: usize) -> CMatrix {
    let tau = instance.tau();
    let mut d = CMatrix::identity(tau, tau) * C64::new(instance.noise(), 0.0);
    for (u, phi) in pilots.iter().enumerate() {
        add_scaled_outer(&mut d, instance.beta(l, u), phi);
    }
    d
}

/// `U_l = sigma^2 I + sum_(i,j) beta_lij (phi_ij phi_ij^H) kron R_lij`, size `tau M`.
///
/// Panics if the instance carries no correlation tensor.
pub fn pilot_covariance_corr(instance: &NetworkInstance, pilots: &[CVector], l: usize) -> CMatrix {
    let tau = instance.tau();
    let m = instance.antennas();
    let mut u_mat = CMatrix::identity(tau * m, tau * m) * C64::new(instance.noise(), 0.0);
    for (u, phi) in pilots.iter().enumerate() {
        let r = instance.correlation(l, u).expect("correlated instance");
        let beta = instance.beta(l, u);
        for a in 0..tau {
            for b in 0..tau {
                let w = phi[a] * phi[b].conj() * beta;
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut block = u_mat.view_mut((a * m, b * m), (m, m));
                block += r * w;
            }
        }
    }
    u_mat
}

/// `mu_lk = beta_llk D_l^{-1} phi_lk` for every user of every cell.
pub fn mmse_filters(instance: &NetworkInstance, pilots: &[CVector]) -> Result<Vec<CVector>> {
    let k_users = instance.users_per_cell();
    let mut out = Vec::with_capacity(pilots.len());
    for l in 0..instance.num_cells() {
        let f = HermitianFactor::new(&pilot_covariance(instance, pilots, l), "pilot covariance")?;
        for u in l * k_users..(l + 1) * k_users {
            out.push(f.solve_vec(&pilots[u]) * C64::new(instance.beta_own(u), 0.0));
        }
    }
    Ok(out)
}

/// MMSE estimates of the `K` own-cell channels at BS `l` from the `M x tau`
/// received block, via `h_hat = Y_l conj(beta D_l^{-1} phi_lk)`.
pub fn mmse_estimate(
    y: &CMatrix,
    instance: &NetworkInstance,
    pilots: &[CVector],
    l: usize,
) -> Result<Vec<CVector>> {
    let f = HermitianFactor::new(&pilot_covariance(instance, pilots, l), "pilot covariance")?;
    let k_users = instance.users_per_cell();
    Ok((l * k_users..(l + 1) * k_users)
        .map(|u| {
            let mu = f.solve_vec(&pilots[u]) * C64::new(instance.beta_own(u), 0.0);
            y * mu.map(|z| z.conj())
        })
        .collect())
}

/// `W_lk = beta_llk phi_lk^H kron R_llk` (`M x tau M`).
pub fn correlated_w(instance: &NetworkInstance, pilots: &[CVector], u: usize) -> CMatrix {
    let l = instance.cell_of(u);
    let r = instance.correlation(l, u).expect("correlated instance");
    let row = pilots[u].adjoint() * C64::new(instance.beta(l, u), 0.0);
    row.kronecker(r)
}

/// Correlated MMSE estimates `W_lk U_l^{-1} vec(Y_l)` for the users of cell `l`.
pub fn mmse_estimate_corr(
    y: &CMatrix,
    instance: &NetworkInstance,
    pilots: &[CVector],
    l: usize,
) -> Result<Vec<CVector>> {
    let f = HermitianFactor::new(
        &pilot_covariance_corr(instance, pilots, l),
        "correlated covariance",
    )?;
    let vec_y = CVector::from_column_slice(y.as_slice());
    let z = f.solve_vec(&vec_y);
    let k_users = instance.users_per_cell();
    Ok((l * k_users..(l + 1) * k_users)
        .map(|u| correlated_w(instance, pilots, u) * &z)
        .collect())
}

/// Per-user MSE `M beta - M beta^2 phi^H D^{-1} phi` (uncorrelated fading).
pub fn mse_uncorrelated_vectors(
    instance: &NetworkInstance,
    pilots: &[CVector],
) -> Result<Vec<f64>> {
    let m = instance.antennas() as f64;
    let k_users = instance.users_per_cell();
    let mut mse = Vec::with_capacity(pilots.len());
    for l in 0..instance.num_cells() {
        let f = HermitianFactor::new(&pilot_covariance(instance, pilots, l), "pilot covariance")?;
        for u in l * k_users..(l + 1) * k_users {
            let beta = instance.beta_own(u);
            let q = f.inv_quadratic(&pilots[u]);
            // Roundoff can push 1 - beta q slightly below zero at very high SNR.
            mse.push((m * beta * (1.0 - beta * q)).max(f64::MIN_POSITIVE));
        }
    }
    Ok(mse)
}

/// Per-user MSE `beta tr R - tr(W U^{-1} W^H)` (correlated fading).
pub fn mse_correlated_vectors(instance: &NetworkInstance, pilots: &[CVector]) -> Result<Vec<f64>> {
    let k_users = instance.users_per_cell();
    let mut mse = Vec::with_capacity(pilots.len());
    for l in 0..instance.num_cells() {
        let f = HermitianFactor::new(
            &pilot_covariance_corr(instance, pilots, l),
            "correlated covariance",
        )?;
        for u in l * k_users..(l + 1) * k_users {
            let r = instance.correlation(l, u).expect("correlated instance");
            let w = correlated_w(instance, pilots, u);
            let x = f.solve(&w.adjoint());
            let explained = (&w * x).trace().re;
            let total = instance.beta_own(u) * r.trace().re;
            mse.push((total - explained).max(f64::MIN_POSITIVE));
        }
    }
    Ok(mse)
}

/// Per-user MSE under the instance's fading model.
pub fn mse_vectors(instance: &NetworkInstance, pilots: &[CVector]) -> Result<Vec<f64>> {
    if instance.is_correlated() {
        mse_correlated_vectors(instance, pilots)
    } else {
        mse_uncorrelated_vectors(instance, pilots)
    }
}

pub fn weighted_sum(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum()
}

/// Weighted sum MSE of a configuration under the instance's fading model.
pub fn weighted_sum_mse(
    instance: &NetworkInstance,
    pilots: &PilotConfiguration,
    weights: &[f64],
) -> Result<f64> {
    Ok(weighted_sum(
        &mse_vectors(instance, &pilots.vectors())?,
        weights,
    ))
}

fn mse_report(mse: Vec<f64>, weights: &[f64]) -> EstimationReport {
    EstimationReport {
        weighted_sum_mse: weighted_sum(&mse, weights),
        mse,
        rate_finite: None,
        rate_asymptotic: None,
        flagged: Vec::new(),
    }
}

pub fn mse_uncorrelated(
    instance: &NetworkInstance,
    pilots: &PilotConfiguration,
    weights: &[f64],
) -> Result<EstimationReport> {
    Ok(mse_report(
        mse_uncorrelated_vectors(instance, &pilots.vectors())?,
        weights,
    ))
}

pub fn mse_correlated(
    instance: &NetworkInstance,
    pilots: &PilotConfiguration,
    weights: &[f64],
) -> Result<EstimationReport> {
    Ok(mse_report(
        mse_correlated_vectors(instance, &pilots.vectors())?,
        weights,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRates {
    pub sinr: Vec<f64>,
    pub rate: Vec<f64>,
    pub flagged: Vec<usize>,
}

/// Finite-M uplink rate with MRC on MMSE estimates and uncorrelated fading.
///
/// With `q = phi_lk^H D_l^{-1} phi_lk`, the SINR is
/// `beta^2 q^2 / ((sum beta_lij + sigma^2) q / M + sum_(i,j)!=(l,k) beta_lij^2 |phi_lk^H D_l^{-1} phi_ij|^2)`.
/// The self term of the interference sum is dropped instead of being added and
/// subtracted. Users whose denominator is below `1e-15` of the numerator are
/// flagged and reported at the rate cap.
pub fn rate_finite_vectors(instance: &NetworkInstance, pilots: &[CVector]) -> Result<FiniteRates> {
    let m = instance.antennas() as f64;
    let n = pilots.len();
    let k_users = instance.users_per_cell();
    let mut out = FiniteRates {
        sinr: Vec::with_capacity(n),
        rate: Vec::with_capacity(n),
        flagged: Vec::new(),
    };
    for l in 0..instance.num_cells() {
        let f = HermitianFactor::new(&pilot_covariance(instance, pilots, l), "pilot covariance")?;
        let total_gain: f64 = (0..n).map(|v| instance.beta(l, v)).sum::<f64>() + instance.noise();
        for u in l * k_users..(l + 1) * k_users {
            let x = f.solve_vec(&pilots[u]);
            let q = pilots[u].dotc(&x).re;
            let beta = instance.beta(l, u);
            let numerator = (beta * q).powi(2);
            let interference: f64 = (0..n)
                .filter(|&v| v != u)
                .map(|v| instance.beta(l, v).powi(2) * x.dotc(&pilots[v]).norm_sqr())
                .sum();
            let denominator = total_gain * q / m + interference;
            if !(denominator > 1e-15 * numerator) {
                out.flagged.push(u);
                out.sinr.push(sinr_cap());
                out.rate.push(RATE_CAP_BITS);
            } else {
                let s = numerator / denominator;
                out.sinr.push(s);
                out.rate.push(rate_from_sinr(s));
            }
        }
    }
    Ok(out)
}

pub fn rate_finite(instance: &NetworkInstance, pilots: &PilotConfiguration) -> Result<FiniteRates> {
    rate_finite_vectors(instance, &pilots.vectors())
}

/// Large-M SINR `beta_llk^2 p_lk^2 / sum beta_lij^2 p_ij^2` over the other users on
/// the same pilot; `None` when that interference is absent.
pub fn sinr_asymptotic(instance: &NetworkInstance, pilots: &OrthogonalPilots) -> Vec<Option<f64>> {
    let xi: Vec<f64> = pilots.powers.iter().map(|p| p * p).collect();
    sinr_asymptotic_xi(instance, &pilots.assignment, &xi)
}

/// As [`sinr_asymptotic`] with squared powers `xi` given directly.
pub fn sinr_asymptotic_xi(
    instance: &NetworkInstance,
    assignment: &[usize],
    xi: &[f64],
) -> Vec<Option<f64>> {
    let n = assignment.len();
    (0..n)
        .map(|u| {
            let l = instance.cell_of(u);
            let interference: f64 = (0..n)
                .filter(|&v| v != u && assignment[v] == assignment[u])
                .map(|v| instance.beta(l, v).powi(2) * xi[v])
                .sum();
            if interference > 0.0 {
                Some(instance.beta(l, u).powi(2) * xi[u] / interference)
            } else {
                None
            }
        })
        .collect()
}

/// Large-M rate per user, capped at `cap_bits`.
pub fn rate_asymptotic(
    instance: &NetworkInstance,
    pilots: &OrthogonalPilots,
    cap_bits: f64,
) -> Vec<f64> {
    sinr_asymptotic(instance, pilots)
        .into_iter()
        .map(|s| s.map_or(cap_bits, |s| (1.0 + s).log2().min(cap_bits)))
        .collect()
}

/// MSE plus the rates that apply to this configuration.
pub fn evaluate(
    instance: &NetworkInstance,
    pilots: &PilotConfiguration,
    weights: &[f64],
) -> Result<EstimationReport> {
    let vectors = pilots.vectors();
    let mut report = mse_report(mse_vectors(instance, &vectors)?, weights);
    if !instance.is_correlated() {
        let rates = rate_finite_vectors(instance, &vectors)?;
        report.rate_finite = Some(rates.rate);
        report.flagged = rates.flagged;
    }
    if let Some(orth) = pilots.as_orthogonal() {
        report.rate_asymptotic = Some(rate_asymptotic(instance, orth, RATE_CAP_BITS));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{min_eigenvalue, real};
    use crate::network::{exp_correlation, NetworkConfig};
    use crate::rng::stream_rng;
    use crate::testutil::{correlated_tiny, random_pilots, tiny_instance};
    use proptest::prelude::*;

    fn single_user(m: usize, tau: usize, beta: f64, noise: f64) -> NetworkInstance {
        let cfg = NetworkConfig {
            num_cells: 1,
            users_per_cell: 1,
            antennas: m,
            pilot_length: tau,
            max_power_mw: 1.0,
            noise_power_mw: noise,
            ..NetworkConfig::default()
        };
        NetworkInstance::from_parts(cfg, vec![beta], None).unwrap()
    }

    #[test]
    fn covariance_single_user_example() {
        let inst = single_user(1, 2, 2.0, 1.0);
        let d = pilot_covariance(&inst, &[CVector::from_vec(vec![real(1.0), real(0.0)])], 0);
        assert_eq!(
            d,
            CMatrix::from_diagonal(&CVector::from_vec(vec![real(3.0), real(1.0)]))
        );
        let d0 = pilot_covariance(&inst, &[CVector::zeros(2)], 0);
        assert_eq!(d0, CMatrix::identity(2, 2));
    }

    #[test]
    fn single_user_mse_closed_form() {
        let inst = single_user(100, 8, 1.0, 0.1);
        let pilots = PilotConfiguration::orthogonal(8, vec![0], vec![1.0]);
        let r = mse_uncorrelated(&inst, &pilots, &[1.0]).unwrap();
        let expect = 100.0 * 0.1 / (0.1 + 8.0);
        assert!((r.mse[0] - expect).abs() < 1e-12 * expect);
        assert!((expect - 1.2345679).abs() < 1e-6);
    }

    #[test]
    fn contamination_free_mse_vanishes_with_noise() {
        let inst = tiny_instance(2, 2, 10, 4, 1e-14, 1);
        let pilots = PilotConfiguration::orthogonal(4, vec![0, 1, 2, 3], vec![1.0; 4]);
        let r = mse_uncorrelated(&inst, &pilots, &[1.0; 4]).unwrap();
        assert!(r.weighted_sum_mse < 1e-11);
    }

    /// Explicit Kronecker-form estimator for comparison.
    fn kron_estimate(
        y: &CMatrix,
        inst: &NetworkInstance,
        pilots: &[CVector],
        l: usize,
        u: usize,
    ) -> CVector {
        let m = inst.antennas();
        let d = pilot_covariance(inst, pilots, l);
        let im = CMatrix::identity(m, m);
        let big = d.kronecker(&im).try_inverse().unwrap();
        let left = (pilots[u].adjoint() * real(inst.beta(l, u))).kronecker(&im);
        let vec_y = CVector::from_column_slice(y.as_slice());
        left * big * vec_y
    }

    #[test]
    fn estimator_matches_kronecker_form() {
        let inst = tiny_instance(2, 2, 2, 3, 0.3, 5);
        let pilots = random_pilots(4, 3, 5);
        let mut rng = stream_rng(5, 1);
        let y = CMatrix::from_fn(2, 3, |_, _| crate::rng::complex_gaussian(&mut rng));
        for l in 0..2 {
            let est = mmse_estimate(&y, &inst, &pilots, l).unwrap();
            for k in 0..2 {
                let oracle = kron_estimate(&y, &inst, &pilots, l, l * 2 + k);
                assert!((&est[k] - oracle).norm() < 1e-10);
            }
        }
        let zero = mmse_estimate(&CMatrix::zeros(2, 3), &inst, &pilots, 0).unwrap();
        assert!(zero.iter().all(|h| h.norm() == 0.0));
    }

    #[test]
    fn noiseless_single_user_estimate_is_scaled_channel() {
        let inst = single_user(3, 4, 0.7, 1e-6);
        let pilots = PilotConfiguration::orthogonal(4, vec![1], vec![1.0]).vectors();
        let h = CVector::from_vec(vec![real(1.0), C64::new(0.0, 2.0), real(-0.5)]);
        let y = &h * pilots[0].transpose();
        let est = mmse_estimate(&y, &inst, &pilots, 0).unwrap();
        let g = 0.7 * 4.0;
        assert!((&est[0] - &h * real(g / (g + 1e-6))).norm() < 1e-12);
    }

    #[test]
    fn correlated_estimator_matches_dense_solve() {
        let inst = correlated_tiny(2, 1, 2, 2, 0.2, 3);
        let pilots = random_pilots(2, 2, 3);
        let mut rng = stream_rng(3, 2);
        let y = CMatrix::from_fn(2, 2, |_, _| crate::rng::complex_gaussian(&mut rng));
        let est = mmse_estimate_corr(&y, &inst, &pilots, 0).unwrap();
        let u_inv = pilot_covariance_corr(&inst, &pilots, 0)
            .try_inverse()
            .unwrap();
        let oracle =
            correlated_w(&inst, &pilots, 0) * u_inv * CVector::from_column_slice(y.as_slice());
        assert!((&est[0] - oracle).norm() < 1e-10);
    }

    #[test]
    fn correlated_covariance_matches_naive_sum() {
        let inst = correlated_tiny(2, 1, 2, 2, 0.2, 4);
        let pilots = random_pilots(2, 2, 4);
        let u_mat = pilot_covariance_corr(&inst, &pilots, 1);
        let mut naive = CMatrix::identity(4, 4) * real(0.2);
        for v in 0..2 {
            let outer = &pilots[v] * pilots[v].adjoint() * real(inst.beta(1, v));
            naive += outer.kronecker(inst.correlation(1, v).unwrap());
        }
        assert!((u_mat - naive).norm() < 1e-12);
    }

    #[test]
    fn identity_correlation_reduces_to_uncorrelated() {
        let base = tiny_instance(2, 2, 3, 3, 0.1, 8);
        let pilots = random_pilots(4, 3, 8);
        let ident = base.with_identity_correlation();
        let u_mat = pilot_covariance_corr(&ident, &pilots, 0);
        let kron = pilot_covariance(&base, &pilots, 0).kronecker(&CMatrix::identity(3, 3));
        assert!((u_mat - kron).norm() < 1e-12);
        let a = mse_uncorrelated_vectors(&base, &pilots).unwrap();
        let b = mse_correlated_vectors(&ident, &pilots).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9 * x);
        }
    }

    #[test]
    fn single_term_correlated_covariance() {
        let cfg = NetworkConfig {
            num_cells: 1,
            users_per_cell: 1,
            antennas: 3,
            pilot_length: 1,
            noise_power_mw: 0.5,
            max_power_mw: 2.0,
            correlated: true,
            ..NetworkConfig::default()
        };
        let r = exp_correlation(3, 0.4, 0.9);
        let inst = NetworkInstance::from_parts(cfg, vec![1.5], Some(vec![r.clone()])).unwrap();
        let phi = vec![CVector::from_element(1, real(2f64.sqrt()))];
        let u_mat = pilot_covariance_corr(&inst, &phi, 0);
        let expect = CMatrix::identity(3, 3) * real(0.5) + r * real(1.5 * 2.0);
        assert!((u_mat - expect).norm() < 1e-12);
    }

    #[test]
    fn strong_correlation_lowers_single_user_mse() {
        let make = |nu: f64| {
            let cfg = NetworkConfig {
                num_cells: 1,
                users_per_cell: 1,
                antennas: 4,
                pilot_length: 2,
                noise_power_mw: 1.0,
                max_power_mw: 1.0,
                correlated: true,
                ..NetworkConfig::default()
            };
            NetworkInstance::from_parts(cfg, vec![0.5], Some(vec![exp_correlation(4, nu, 0.3)]))
                .unwrap()
        };
        let pilots = PilotConfiguration::orthogonal(2, vec![0], vec![1.0]).vectors();
        let white = mse_correlated_vectors(&make(0.0), &pilots).unwrap()[0];
        let strong = mse_correlated_vectors(&make(0.99), &pilots).unwrap()[0];
        assert!(strong < white);
    }

    #[test]
    fn rate_two_cells_sharing_pilot_tends_to_one_bit() {
        let cfg = NetworkConfig {
            num_cells: 2,
            users_per_cell: 1,
            antennas: 1_000_000,
            pilot_length: 1,
            noise_power_mw: 1e-12,
            max_power_mw: 1.0,
            ..NetworkConfig::default()
        };
        let inst = NetworkInstance::from_parts(cfg, vec![1.0; 4], None).unwrap();
        let pilots = PilotConfiguration::orthogonal(1, vec![0, 0], vec![1.0, 1.0]);
        let r = rate_finite(&inst, &pilots).unwrap();
        for rate in r.rate {
            assert!((rate - 1.0).abs() < 1e-4, "{rate}");
        }
    }

    #[test]
    fn rate_denominator_cancellation() {
        // Single user: the only surviving denominator term is the 1/M one.
        let inst = single_user(10, 2, 2.0, 0.5);
        let phi = vec![CVector::from_vec(vec![real(1.0), C64::new(0.3, 0.2)])];
        let d = pilot_covariance(&inst, &phi, 0);
        let q = phi[0].dotc(&(d.try_inverse().unwrap() * &phi[0])).re;
        let full_denominator = (2.0 + 0.5) * q / 10.0 + (2.0 * q).powi(2) - (2.0 * q).powi(2);
        let expect = (2.0 * q).powi(2) / full_denominator;
        let r = rate_finite_vectors(&inst, &phi).unwrap();
        assert!((r.sinr[0] - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn asymptotic_rate_examples() {
        let cfg = NetworkConfig {
            num_cells: 2,
            users_per_cell: 1,
            antennas: 10,
            pilot_length: 2,
            noise_power_mw: 1.0,
            max_power_mw: 1.0,
            ..NetworkConfig::default()
        };
        let inst = NetworkInstance::from_parts(cfg, vec![1.0, 0.5, 0.5, 1.0], None).unwrap();
        let shared = PilotConfiguration::orthogonal(2, vec![0, 0], vec![1.0, 1.0]);
        let rates = rate_asymptotic(&inst, shared.as_orthogonal().unwrap(), RATE_CAP_BITS);
        assert!((rates[0] - 5f64.log2()).abs() < 1e-12);
        let unique = PilotConfiguration::orthogonal(2, vec![0, 1], vec![1.0, 1.0]);
        let rates = rate_asymptotic(&inst, unique.as_orthogonal().unwrap(), RATE_CAP_BITS);
        assert_eq!(rates, vec![RATE_CAP_BITS; 2]);
    }

    #[test]
    fn covariance_is_positive_definite() {
        let inst = tiny_instance(3, 2, 4, 3, 0.01, 2);
        let pilots = random_pilots(6, 3, 2);
        for l in 0..3 {
            assert!(min_eigenvalue(&pilot_covariance(&inst, &pilots, l)) > 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn mse_bounds_hold(seed in 0u64..10_000, l in 1usize..4, k in 1usize..3, tau in 1usize..5) {
            let inst = tiny_instance(l, k, 8, tau, 0.05, seed);
            let pilots = random_pilots(l * k, tau, seed);
            let mse = mse_uncorrelated_vectors(&inst, &pilots).unwrap();
            for (u, v) in mse.iter().enumerate() {
                prop_assert!(*v > 0.0);
                prop_assert!(*v <= 8.0 * inst.beta_own(u) * (1.0 + 1e-12));
            }
        }

        #[test]
        fn noise_scale_duality(seed in 0u64..10_000, delta in 0.1f64..10.0) {
            let inst = tiny_instance(2, 2, 4, 3, 0.2, seed);
            let pilots = random_pilots(4, 3, seed);
            let scaled: Vec<CVector> = pilots.iter().map(|p| p * real(delta)).collect();
            let a = weighted_sum(&mse_uncorrelated_vectors(&inst, &scaled).unwrap(), &[1.0; 4]);
            let b = weighted_sum(
                &mse_uncorrelated_vectors(&inst.with_noise(0.2 / (delta * delta)), &pilots).unwrap(),
                &[1.0; 4],
            );
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }

        #[test]
        fn mse_scales_linearly_in_antennas(seed in 0u64..10_000) {
            let inst = tiny_instance(2, 2, 4, 3, 0.2, seed);
            let pilots = random_pilots(4, 3, seed);
            let a = mse_uncorrelated_vectors(&inst.with_antennas(10), &pilots).unwrap();
            let b = mse_uncorrelated_vectors(&inst.with_antennas(40), &pilots).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x / y - 0.25).abs() < 1e-12);
            }
        }

        #[test]
        fn asymptotic_rates_are_power_scale_invariant(seed in 0u64..10_000, c in 0.01f64..1.0) {
            let inst = tiny_instance(3, 2, 4, 2, 0.2, seed);
            let powers: Vec<f64> = (0..6).map(|i| 0.2 + 0.1 * i as f64).collect();
            let a = PilotConfiguration::orthogonal(2, vec![0, 1, 1, 0, 0, 1], powers.clone());
            let b = PilotConfiguration::orthogonal(2, vec![0, 1, 1, 0, 0, 1], powers.iter().map(|p| p * c).collect());
            let ra = rate_asymptotic(&inst, a.as_orthogonal().unwrap(), RATE_CAP_BITS);
            let rb = rate_asymptotic(&inst, b.as_orthogonal().unwrap(), RATE_CAP_BITS);
            for (x, y) in ra.iter().zip(&rb) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn correlated_mse_is_positive(seed in 0u64..10_000) {
            let inst = correlated_tiny(2, 1, 2, 2, 0.1, seed);
            let pilots = random_pilots(2, 2, seed);
            for v in mse_correlated_vectors(&inst, &pilots).unwrap() {
                prop_assert!(v > 0.0);
                prop_assert!(v <= 2.0 * 2.0);
            }
        }
    }
}
