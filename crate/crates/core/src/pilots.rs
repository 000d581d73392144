//! Pilot configurations: arbitrary complex sequences or (pilot, power) pairs
//! over a fixed orthogonal basis.

use std::f64::consts::TAU;

use crate::error::{CoreError, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::network::NetworkInstance;

/// Relative slack allowed on the per-user energy cap `tau * P_max`.
pub const POWER_SLACK: f64 = 1e-9;

/// `tau`-point DFT basis whose columns have squared norm `tau`.
pub fn dft_basis(tau: usize) -> CMatrix {
    CMatrix::from_fn(tau, tau, |r, s| {
        C64::from_polar(1.0, -TAU * ((r * s) % tau) as f64 / tau as f64)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalPilots {
    /// Columns are the candidate pilots, each with squared norm `tau`.
    pub basis: CMatrix,
    /// Basis column of each user (0-based).
    pub assignment: Vec<usize>,
    /// Transmit power of each user in mW.
    pub powers: Vec<f64>,
}

impl OrthogonalPilots {
    /// Pilot of user `u`: `sqrt(p) * basis[:, s]`.
    pub fn pilot(&self, u: usize) -> CVector {
        self.basis.column(self.assignment[u]) * C64::new(self.powers[u].sqrt(), 0.0)
    }

    pub fn tau(&self) -> usize {
        self.basis.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PilotConfiguration {
    Arbitrary(Vec<CVector>),
    Orthogonal(OrthogonalPilots),
}

impl PilotConfiguration {
    /// Orthogonal configuration over the DFT basis.
    pub fn orthogonal(tau: usize, assignment: Vec<usize>, powers: Vec<f64>) -> Self {
        Self::Orthogonal(OrthogonalPilots {
            basis: dft_basis(tau),
            assignment,
            powers,
        })
    }

    pub fn num_users(&self) -> usize {
        match self {
            Self::Arbitrary(v) => v.len(),
            Self::Orthogonal(o) => o.assignment.len(),
        }
    }

    /// Materialized pilot vectors, one per user.
    pub fn vectors(&self) -> Vec<CVector> {
        match self {
            Self::Arbitrary(v) => v.clone(),
            Self::Orthogonal(o) => (0..o.assignment.len()).map(|u| o.pilot(u)).collect(),
        }
    }

    pub fn as_orthogonal(&self) -> Option<&OrthogonalPilots> {
        match self {
            Self::Orthogonal(o) => Some(o),
            Self::Arbitrary(_) => None,
        }
    }

    /// Checks dimensions, the energy cap and, for orthogonal pilots, the basis
    /// Gram matrix and (optionally) in-cell distinctness.
    pub fn validate(&self, instance: &NetworkInstance, distinct_in_cell: bool) -> Result<()> {
        let tau = instance.tau();
        let n = instance.num_users();
        let cap = tau as f64 * instance.p_max() * (1.0 + POWER_SLACK);
        if self.num_users() != n {
            return Err(CoreError::Dimension(format!(
                "{} pilots for {n} users",
                self.num_users()
            )));
        }
        match self {
            Self::Arbitrary(v) => {
                for (u, phi) in v.iter().enumerate() {
                    if phi.len() != tau {
                        return Err(CoreError::Dimension(format!(
                            "pilot {u} has length {}",
                            phi.len()
                        )));
                    }
                    if phi.norm_squared() > cap {
                        return Err(CoreError::InvalidConfig(format!(
                            "pilot {u} exceeds the power cap"
                        )));
                    }
                }
            }
            Self::Orthogonal(o) => {
                if o.basis.nrows() != tau || o.basis.ncols() != tau || o.powers.len() != n {
                    return Err(CoreError::Dimension(
                        "orthogonal basis or power vector".into(),
                    ));
                }
                let gram = o.basis.adjoint() * &o.basis;
                let defect = (gram - CMatrix::identity(tau, tau) * C64::new(tau as f64, 0.0))
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                if defect > 1e-9 * tau as f64 {
                    return Err(CoreError::InvalidConfig(
                        "basis is not orthogonal with norm tau".into(),
                    ));
                }
                for u in 0..n {
                    if o.assignment[u] >= tau {
                        return Err(CoreError::InvalidConfig(format!(
                            "user {u} has pilot index out of range"
                        )));
                    }
                    let p = o.powers[u];
                    if !(p >= 0.0 && p <= instance.p_max() * (1.0 + POWER_SLACK)) {
                        return Err(CoreError::InvalidConfig(format!(
                            "user {u} power {p} outside [0, P_max]"
                        )));
                    }
                }
                if distinct_in_cell {
                    let k = instance.users_per_cell();
                    for l in 0..instance.num_cells() {
                        let mut seen = vec![false; tau];
                        for u in l * k..(l + 1) * k {
                            if std::mem::replace(&mut seen[o.assignment[u]], true) {
                                return Err(CoreError::InvalidConfig(format!(
                                    "cell {l} reuses pilot {}",
                                    o.assignment[u]
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_basis_has_scaled_identity_gram() {
        for tau in [1, 2, 5, 16] {
            let b = dft_basis(tau);
            let g = b.adjoint() * &b;
            for i in 0..tau {
                for j in 0..tau {
                    let expect = if i == j { tau as f64 } else { 0.0 };
                    assert!((g[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn orthogonal_pilot_has_power_scaled_norm() {
        let cfg = PilotConfiguration::orthogonal(4, vec![2], vec![3.0]);
        let v = cfg.vectors();
        assert!((v[0].norm_squared() - 12.0).abs() < 1e-12);
    }
}
