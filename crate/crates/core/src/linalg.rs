//! Dense complex linear algebra used throughout the crate.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
pub use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Cholesky factor of a Hermitian positive definite matrix.
///
/// If the plain factorization fails, a diagonal jitter starting at 1e-12 of
/// the mean diagonal is added and grown tenfold up to 1e-6.
#[derive(Clone, Debug)]
pub struct HermitianFactor {
    chol: Cholesky<C64, Dyn>,
}

impl HermitianFactor {
    pub fn new(m: &CMatrix, context: &str) -> Result<Self> {
        if let Some(chol) = m.clone().cholesky() {
            return Ok(Self { chol });
        }
        let n = m.nrows().max(1);
        let scale = (m.trace().re / n as f64).abs().max(f64::MIN_POSITIVE);
        let mut jitter = 1e-12;
        while jitter <= 1e-6 {
            let mut shifted = m.clone();
            for i in 0..m.nrows() {
                shifted[(i, i)] += C64::new(jitter * scale, 0.0);
            }
            if let Some(chol) = shifted.cholesky() {
                log::warn!("{context}: Cholesky needed jitter {jitter:e}");
                return Ok(Self { chol });
            }
            jitter *= 10.0;
        }
        Err(CoreError::NotPositiveDefinite {
            context: context.to_string(),
        })
    }

    pub fn solve_vec(&self, b: &CVector) -> CVector {
        self.chol.solve(b)
    }

    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> CMatrix {
        self.chol.inverse()
    }

    /// `x^H M^{-1} x`, computed as the squared norm of `L^{-1} x`.
    pub fn inv_quadratic(&self, x: &CVector) -> f64 {
        let mut y = x.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut y);
        y.norm_squared()
    }
}

/// Result of maximizing `2Re{x^H b} - x^H A x` under `||x||^2 <= cap`.
#[derive(Clone, Debug)]
pub struct CappedMaximizer {
    pub x: CVector,
    /// Lagrange multiplier of the norm constraint; zero when inactive.
    pub multiplier: f64,
    pub halvings: usize,
}

/// Maximizer of the concave quadratic `2Re{x^H b} - x^H A x` for Hermitian PSD `A`.
///
/// Uses the eigendecomposition `A = V diag(lambda) V^H`, for which
/// `x(eta) = (A + eta I)^{-1} b` has squared norm `sum |c_i|^2 / (lambda_i + eta)^2`
/// with `c = V^H b`. Components of `b` along the numerical null space of `A`
/// are dropped: for the surrogates of this crate `b` lies in the range of `A`
/// (the surrogates are bounded above), so such components are rounding noise.
/// With `cap = None` this gives the minimum-norm unconstrained maximizer.
/// With a cap, the multiplier is found by bisection on that secular function
/// and the returned point always sits on the feasible side.
pub fn maximize_concave_quadratic(
    a: &CMatrix,
    b: &CVector,
    cap: Option<f64>,
    max_halvings: usize,
) -> std::result::Result<CappedMaximizer, usize> {
    let n = b.len();
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(CappedMaximizer {
            x: CVector::zeros(n),
            multiplier: 0.0,
            halvings: 0,
        });
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let c = eig.eigenvectors.adjoint() * b;
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let lambda_max = lambda.iter().cloned().fold(0.0, f64::max);
    if lambda_max == 0.0 {
        // A = 0: the objective is linear, so go to the cap along b.
        return Ok(CappedMaximizer {
            x: match cap {
                Some(cap) => b * C64::new(cap.sqrt() / b_norm, 0.0),
                None => CVector::zeros(n),
            },
            multiplier: 0.0,
            halvings: 0,
        });
    }
    let null_tol = 1e-12 * lambda_max;
    let keep: Vec<bool> = lambda.iter().map(|&li| li > null_tol).collect();

    let assemble = |eta: f64| -> CVector {
        let scaled = CVector::from_fn(n, |i, _| {
            if keep[i] {
                c[i] / (lambda[i] + eta)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &eig.eigenvectors * scaled
    };
    let norm_sq = |eta: f64| -> f64 {
        (0..n)
            .filter(|&i| keep[i])
            .map(|i| c[i].norm_sqr() / ((lambda[i] + eta) * (lambda[i] + eta)))
            .sum()
    };

    let free = CappedMaximizer {
        x: assemble(0.0),
        multiplier: 0.0,
        halvings: 0,
    };
    let Some(cap) = cap else {
        return Ok(free);
    };
    if norm_sq(0.0) <= cap {
        return Ok(free);
    }

    // norm_sq is decreasing in eta and above the cap at 0.
    // `x(eta)` maximizes the Lagrangian, so for feasible `x(eta)` the loss
    // against the constrained optimum is at most `eta (cap - ||x(eta)||^2)`;
    // this is measured against `Re{x(eta)^H b}`, the scale of the objective.
    let gap_small = |eta: f64| -> bool {
        let scale: f64 = (0..n)
            .filter(|&i| keep[i])
            .map(|i| c[i].norm_sqr() / (lambda[i] + eta))
            .sum();
        eta * (cap - norm_sq(eta)) <= 1e-15 * scale
    };

    // At eta0 = ||b|| / sqrt(cap) the norm is already within the cap.
    let mut lo = 0.0;
    let mut hi = b_norm / cap.sqrt();
    let mut doublings = 0;
    while norm_sq(hi) > cap {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(doublings);
        }
    }
    let mut halvings = 0;
    while halvings < max_halvings && hi - lo > 1e-15 * hi && !gap_small(hi) {
        let mid = 0.5 * (lo + hi);
        if norm_sq(mid) > cap {
            lo = mid;
        } else {
            hi = mid;
        }
        halvings += 1;
    }
    if hi - lo > 1e-15 * hi && !gap_small(hi) {
        return Err(halvings);
    }
    Ok(CappedMaximizer {
        x: assemble(hi),
        multiplier: hi,
        halvings,
    })
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Largest absolute entry of `M - M^H`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// `x x^H`.
pub fn outer(x: &CVector) -> CMatrix {
    x * x.adjoint()
}

/// Adds `w * x x^H` into `acc` without allocating the outer product.
pub fn add_scaled_outer(acc: &mut CMatrix, w: f64, x: &CVector) {
    let n = x.len();
    for col in 0..n {
        let xc = x[col].conj() * w;
        for row in 0..n {
            acc[(row, col)] += x[row] * xc;
        }
    }
}

/// `x^H y`.
pub fn inner(x: &CVector, y: &CVector) -> C64 {
    x.dotc(y)
}

/// Real `x^H A x` for Hermitian `A`.
pub fn hermitian_form(a: &CMatrix, x: &CVector) -> f64 {
    x.dotc(&(a * x)).re
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_value(a: &CMatrix, b: &CVector, x: &CVector) -> f64 {
        2.0 * b.dotc(x).re - hermitian_form(a, x)
    }

    #[test]
    fn inactive_cap_returns_unconstrained_solution() {
        let a = identity(2) * real(2.0);
        let b = CVector::from_vec(vec![real(1.0), real(0.0)]);
        let r = maximize_concave_quadratic(&a, &b, Some(10.0), 200).unwrap();
        assert_eq!(r.multiplier, 0.0);
        assert!((r.x[0] - real(0.5)).norm() < 1e-14);
    }

    #[test]
    fn active_cap_lands_on_the_boundary() {
        let a = identity(2) * real(0.1);
        let b = CVector::from_vec(vec![real(1.0), C64::new(0.0, 1.0)]);
        let r = maximize_concave_quadratic(&a, &b, Some(1.0), 200).unwrap();
        assert!(r.multiplier > 0.0);
        assert!((r.x.norm_squared() - 1.0).abs() < 1e-12);
        assert!(r.x.norm_squared() <= 1.0);
        // Any other unit vector does no better.
        for k in 0..64 {
            let t = k as f64 * std::f64::consts::TAU / 64.0;
            let y = CVector::from_vec(vec![real(t.cos()), C64::new(0.0, t.sin())]);
            assert!(brute_force_value(&a, &b, &y) <= brute_force_value(&a, &b, &r.x) + 1e-12);
        }
    }

    #[test]
    fn rank_deficient_quadratic_uses_pseudo_inverse() {
        let v = CVector::from_vec(vec![real(1.0), real(1.0)]);
        let a = outer(&v);
        let b = &v * real(3.0);
        let r = maximize_concave_quadratic(&a, &b, None, 200).unwrap();
        // min-norm solution of (v v^H) x = 3 v is 3 v / ||v||^2
        assert!((&r.x - &v * real(1.5)).norm() < 1e-12);
    }

    #[test]
    fn factor_inverse_quadratic_matches_solve() {
        let m = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                real(3.0 + i as f64)
            } else {
                C64::new(0.2 * (i + j) as f64, 0.1 * (i as f64 - j as f64))
            }
        });
        let m = hermitian_part(&m);
        let f = HermitianFactor::new(&m, "test").unwrap();
        let x = CVector::from_vec(vec![real(1.0), C64::new(0.5, -0.3), real(-2.0)]);
        let direct = x.dotc(&f.solve_vec(&x)).re;
        assert!((direct - f.inv_quadratic(&x)).abs() < 1e-12);
    }

    #[test]
    fn rounding_noise_on_a_near_null_eigenvalue_is_dropped() {
        // Eigenvalue 1e-26 is below the null tolerance (5e-24); b's small
        // component along it is noise and must not soak up the energy cap.
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![
            real(5e-12),
            real(3e-12),
            real(1e-26),
        ]));
        let b = CVector::from_vec(vec![real(0.0), real(5.6e-16), real(9.6e-26)]);
        let r = maximize_concave_quadratic(&a, &b, Some(3192.0), 200).unwrap();
        assert_eq!(r.multiplier, 0.0);
        assert_eq!(r.x[2], real(0.0));
        assert!((r.x[1].re - 5.6e-16 / 3e-12).abs() < 1e-18);
    }

    #[test]
    fn zero_quadratic_goes_to_the_cap() {
        let b = CVector::from_vec(vec![real(3.0), C64::new(0.0, 4.0)]);
        let r = maximize_concave_quadratic(&CMatrix::zeros(2, 2), &b, Some(4.0), 200).unwrap();
        assert!((r.x.norm_squared() - 4.0).abs() < 1e-12);
        assert!((r.x[0].re - 1.2).abs() < 1e-12);
    }
}
