//! Quadratic transform (scalar and matrix form) and the surrogate objectives
//! it induces for pilot design.
//!
//! For fixed auxiliary variables every surrogate has the shape
//! `f(phi) = sum_u 2Re{phi_u^H v_u} - phi_u^H Q_u phi_u + const`, expressed in
//! the units of the MSE so that `sum_u alpha_u beta_uu tr(R_uu) - f` bounds the
//! weighted sum MSE from above, with equality at the optimal auxiliaries.

use crate::error::Result;
use crate::estimation::{correlated_w, pilot_covariance, pilot_covariance_corr};
use crate::linalg::{add_scaled_outer, hermitian_form, CMatrix, CVector, HermitianFactor, C64};
use crate::network::NetworkInstance;

/// `2Re{a^H mu} - mu^H B mu`.
pub fn qt_value(a: &CVector, b: &CMatrix, mu: &CVector) -> f64 {
    2.0 * a.dotc(mu).re - hermitian_form(b, mu)
}

/// Maximizer `B^{-1} a` of [`qt_value`] over `mu`.
pub fn qt_opt_aux(a: &CVector, b: &CMatrix) -> Result<CVector> {
    Ok(HermitianFactor::new(b, "quadratic transform")?.solve_vec(a))
}

/// `tr(2Re{W Lambda} - Lambda^H U Lambda)`.
pub fn matrix_qt_value(w: &CMatrix, u: &CMatrix, lambda: &CMatrix) -> f64 {
    2.0 * (w * lambda).trace().re - (lambda.adjoint() * u * lambda).trace().re
}

/// Maximizer `U^{-1} W^H` of [`matrix_qt_value`] over `Lambda`.
pub fn matrix_qt_opt_aux(w: &CMatrix, u: &CMatrix) -> Result<CMatrix> {
    Ok(HermitianFactor::new(u, "matrix quadratic transform")?.solve(&w.adjoint()))
}

/// `tr(C X)` for square blocks without forming the product.
fn trace_product(c: &CMatrix, x: nalgebra::DMatrixView<'_, C64>) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for m in 0..c.nrows() {
        for n in 0..c.ncols() {
            acc += c[(m, n)] * x[(n, m)];
        }
    }
    acc
}

/// Matrix `T` (`n2 x n1`) with `tr(((a b^H) kron C) F) = b^H T a` for all
/// `a` in `C^{n1}` and `b` in `C^{n2}`, where `C` is `n3 x n4` and `F` is
/// `n2 n4 x n1 n3`. Entry `(y, x)` is `tr(C F_yx)`, with `F_yx` the block on
/// rows `y n4 .. (y+1) n4` and columns `x n3 .. (x+1) n3`.
pub fn kron_trace_reduce(n1: usize, n2: usize, c: &CMatrix, f: &CMatrix) -> CMatrix {
    let (n3, n4) = (c.nrows(), c.ncols());
    assert_eq!(f.nrows(), n2 * n4, "F row count");
    assert_eq!(f.ncols(), n1 * n3, "F column count");
    CMatrix::from_fn(n2, n1, |y, x| {
        trace_product(c, f.view((y * n4, x * n3), (n4, n3)))
    })
}

/// Linear and quadratic coefficients of a surrogate for fixed auxiliaries.
#[derive(Clone, Debug)]
pub struct Surrogate {
    pub linear: Vec<CVector>,
    pub quadratic: Vec<CMatrix>,
    pub constant: f64,
}

impl Surrogate {
    /// Contribution `2Re{phi^H v_u} - phi^H Q_u phi` of user `u`.
    pub fn user_value(&self, u: usize, phi: &CVector) -> f64 {
        2.0 * phi.dotc(&self.linear[u]).re - hermitian_form(&self.quadratic[u], phi)
    }

    pub fn value(&self, pilots: &[CVector]) -> f64 {
        self.constant
            + pilots
                .iter()
                .enumerate()
                .map(|(u, p)| self.user_value(u, p))
                .sum::<f64>()
    }
}

/// `sum_u alpha_u beta_uu tr(R_uu)`, the weighted MSE with no pilots at all.
pub fn weighted_prior_energy(instance: &NetworkInstance, weights: &[f64]) -> f64 {
    let m = instance.antennas() as f64;
    weights
        .iter()
        .enumerate()
        .map(|(u, w)| w * instance.beta_own(u) * m)
        .sum()
}

/// Optimal auxiliaries `mu_u = beta_uu D_l^{-1} phi_u` (uncorrelated fading).
pub fn optimal_mu(instance: &NetworkInstance, pilots: &[CVector]) -> Result<Vec<CVector>> {
    crate::estimation::mmse_filters(instance, pilots)
}

/// Uncorrelated surrogate, scaled by `M`:
/// `v_u = M alpha_u beta_uu mu_u`, `Q_u = M sum_(i,j) alpha_ij beta_i,u mu_ij mu_ij^H`,
/// `const = -M sigma^2 sum alpha ||mu||^2`.
pub fn uncorrelated_surrogate(
    instance: &NetworkInstance,
    mu: &[CVector],
    weights: &[f64],
) -> Surrogate {
    let tau = instance.tau();
    let m = instance.antennas() as f64;
    let k_users = instance.users_per_cell();
    let n = instance.num_users();
    let per_cell: Vec<CMatrix> = (0..instance.num_cells())
        .map(|i| {
            let mut g = CMatrix::zeros(tau, tau);
            for v in i * k_users..(i + 1) * k_users {
                add_scaled_outer(&mut g, m * weights[v], &mu[v]);
            }
            g
        })
        .collect();
    let quadratic = (0..n)
        .map(|u| {
            let mut q = CMatrix::zeros(tau, tau);
            for (i, g) in per_cell.iter().enumerate() {
                q += g * C64::new(instance.beta(i, u), 0.0);
            }
            q
        })
        .collect();
    let linear = (0..n)
        .map(|u| &mu[u] * C64::new(m * weights[u] * instance.beta_own(u), 0.0))
        .collect();
    let constant = -m
        * instance.noise()
        * mu.iter()
            .zip(weights)
            .map(|(x, w)| w * x.norm_squared())
            .sum::<f64>();
    Surrogate {
        linear,
        quadratic,
        constant,
    }
}

/// Optimal matrix auxiliaries `Lambda_u = U_l^{-1} W_u^H` (correlated fading).
pub fn optimal_lambda(instance: &NetworkInstance, pilots: &[CVector]) -> Result<Vec<CMatrix>> {
    let k_users = instance.users_per_cell();
    let mut out = Vec::with_capacity(pilots.len());
    for l in 0..instance.num_cells() {
        let f = HermitianFactor::new(
            &pilot_covariance_corr(instance, pilots, l),
            "correlated covariance",
        )?;
        for u in l * k_users..(l + 1) * k_users {
            out.push(f.solve(&correlated_w(instance, pilots, u).adjoint()));
        }
    }
    Ok(out)
}

/// `v_u = alpha_u beta_uu t` with `t_s = tr(R_uu Lambda_u^(s))` over the `M x M`
/// row blocks of `Lambda_u`.
pub fn assemble_v(
    instance: &NetworkInstance,
    lambda: &[CMatrix],
    weights: &[f64],
    u: usize,
) -> CVector {
    let l = instance.cell_of(u);
    let r = instance.correlation(l, u).expect("correlated instance");
    let t = kron_trace_reduce(1, instance.tau(), r, &lambda[u]);
    t.column(0) * C64::new(weights[u] * instance.beta(l, u), 0.0)
}

/// `Q_u = sum_(i,j) alpha_ij beta_i,u T(R_i,u, Lambda_ij Lambda_ij^H)` where `T`
/// is the block-trace reduction of [`kron_trace_reduce`]. `tilde` holds the
/// precomputed `Lambda Lambda^H` of every user.
pub fn assemble_q(
    instance: &NetworkInstance,
    tilde: &[CMatrix],
    weights: &[f64],
    u: usize,
) -> CMatrix {
    let tau = instance.tau();
    let k_users = instance.users_per_cell();
    let mut q = CMatrix::zeros(tau, tau);
    for i in 0..instance.num_cells() {
        let r = instance.correlation(i, u).expect("correlated instance");
        let beta = instance.beta(i, u);
        for ij in i * k_users..(i + 1) * k_users {
            q += kron_trace_reduce(tau, tau, r, &tilde[ij]) * C64::new(weights[ij] * beta, 0.0);
        }
    }
    // Exactly Hermitian in exact arithmetic; symmetrize the roundoff.
    crate::linalg::hermitian_part(&q)
}

/// Correlated surrogate built from the matrix auxiliaries.
pub fn correlated_surrogate(
    instance: &NetworkInstance,
    lambda: &[CMatrix],
    weights: &[f64],
) -> Surrogate {
    let n = instance.num_users();
    let tilde: Vec<CMatrix> = lambda.iter().map(|x| x * x.adjoint()).collect();
    let constant = -instance.noise()
        * lambda
            .iter()
            .zip(weights)
            .map(|(x, w)| w * x.norm_squared())
            .sum::<f64>();
    Surrogate {
        linear: (0..n)
            .map(|u| assemble_v(instance, lambda, weights, u))
            .collect(),
        quadratic: (0..n)
            .map(|u| assemble_q(instance, &tilde, weights, u))
            .collect(),
        constant,
    }
}

/// Surrogate at the optimal auxiliaries of `pilots` for the instance's fading model.
pub fn surrogate_at(
    instance: &NetworkInstance,
    pilots: &[CVector],
    weights: &[f64],
) -> Result<Surrogate> {
    if instance.is_correlated() {
        Ok(correlated_surrogate(
            instance,
            &optimal_lambda(instance, pilots)?,
            weights,
        ))
    } else {
        Ok(uncorrelated_surrogate(
            instance,
            &optimal_mu(instance, pilots)?,
            weights,
        ))
    }
}

/// Direct evaluation of the uncorrelated surrogate from its definition,
/// `M sum_u alpha_u (2Re{beta_uu phi_u^H mu_u} - mu_u^H D_l mu_u)`.
pub fn uncorrelated_surrogate_direct(
    instance: &NetworkInstance,
    pilots: &[CVector],
    mu: &[CVector],
    weights: &[f64],
) -> f64 {
    let m = instance.antennas() as f64;
    let d: Vec<CMatrix> = (0..instance.num_cells())
        .map(|l| pilot_covariance(instance, pilots, l))
        .collect();
    (0..pilots.len())
        .map(|u| {
            let a = &pilots[u] * C64::new(instance.beta_own(u), 0.0);
            m * weights[u] * qt_value(&a, &d[instance.cell_of(u)], &mu[u])
        })
        .sum()
}

/// Direct evaluation of the correlated surrogate,
/// `sum_u alpha_u tr(2Re{W_u Lambda_u} - Lambda_u^H U_l Lambda_u)`.
pub fn correlated_surrogate_direct(
    instance: &NetworkInstance,
    pilots: &[CVector],
    lambda: &[CMatrix],
    weights: &[f64],
) -> f64 {
    let u_mats: Vec<CMatrix> = (0..instance.num_cells())
        .map(|l| pilot_covariance_corr(instance, pilots, l))
        .collect();
    (0..pilots.len())
        .map(|u| {
            let w = correlated_w(instance, pilots, u);
            weights[u] * matrix_qt_value(&w, &u_mats[instance.cell_of(u)], &lambda[u])
        })
        .sum()
}
