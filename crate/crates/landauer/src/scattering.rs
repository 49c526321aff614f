//! On-shell scattering data of the coupled sample-lead system.
//!
//! At energy `ε` inside the band the leads enter only through the boundary
//! value of the surface Green's function: the sample feels the self-energy
//! `Σ(ε + i0) = g(ε + i0) K`, `K = Σ_k χ_k χ_k†`, and the `M × M` on-shell
//! scattering matrix is
//!
//! `s_{kj}(ε) = δ_{kj} + 2πi w(ε) (χ_k, G_S(ε) χ_j)`,
//!
//! with `G_S(ε) = (H_S - ε - Σ(ε + i0))⁻¹` and `w` the contact spectral
//! weight. The `+` sign is fixed by unitarity: `s - s† = 2πi w · s s†`
//! forces `s s† = I` given the Herglotz property of `g`. The transmittance
//! table is `𝒯_{kj} = |δ_{kj} - s_{kj}|²`.

use ndarray::Array2;
use thiserror::Error;

use crate::lead::{self, LeadError};
use crate::linalg;
use crate::model::{ModelError, SystemSpec};
use crate::C64;

/// Residual above which an on-shell matrix is reported as non-unitary.
pub const UNITARITY_TOL: f64 = 1e-8;

/// Condition number above which the effective Hamiltonian is reported
/// singular rather than inverted.
pub const CONDITION_LIMIT: f64 = 1e14;

#[derive(Debug, Error)]
pub enum ScatteringError {
    #[error(transparent)]
    Branch(#[from] LeadError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("effective hamiltonian at eps = {eps} is numerically singular (cond = {cond:.3e})")]
    SingularEffectiveHamiltonian { eps: f64, cond: f64 },
    #[error("scattering matrix at eps = {eps} violates unitarity (residual {residual:.3e})")]
    UnitarityViolation { eps: f64, residual: f64 },
}

/// Scattering data at a single energy.
#[derive(Debug, Clone)]
pub struct OnShellData {
    pub eps: f64,
    /// `M × M` unitary scattering matrix.
    pub s: Array2<C64>,
    /// Transmittance table `𝒯_{kj} = |δ_{kj} - s_{kj}|²`.
    pub transmittance: Array2<f64>,
}

impl OnShellData {
    /// Largest deviation of `s s†` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(self.s.view())
    }

    /// Largest deviation of `s` from its transpose.
    pub fn symmetry_residual(&self) -> f64 {
        let m = self.s.nrows();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..i {
                worst = worst.max((self.s[[i, j]] - self.s[[j, i]]).norm());
            }
        }
        worst
    }

    /// Largest row-minus-column sum deviation `|Σ_j (𝒯_{kj} - 𝒯_{jk})|`.
    pub fn transmittance_sum_residual(&self) -> f64 {
        let m = self.transmittance.nrows();
        let mut worst = 0.0f64;
        for k in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                acc += self.transmittance[[k, j]] - self.transmittance[[j, k]];
            }
            worst = worst.max(acc.abs());
        }
        worst
    }
}

/// Self-energy `Σ(z) = g(z) K` for `z` off the band.
pub fn self_energy(spec: &SystemSpec, z: C64) -> Result<Array2<C64>, ScatteringError> {
    let g = lead::surface_green(z)?;
    Ok(spec.coupling_matrix().mapv(|v| g * v))
}

/// Self-energy boundary value `Σ(ε + i0)` on the band.
pub fn self_energy_band(spec: &SystemSpec, eps: f64) -> Result<Array2<C64>, ScatteringError> {
    let g = lead::surface_green_band(eps)?;
    Ok(spec.coupling_matrix().mapv(|v| g * v))
}

/// Effective sample Green's function `G_S(ε) = (H_S - ε - Σ(ε + i0))⁻¹`.
pub fn effective_green(spec: &SystemSpec, eps: f64) -> Result<Array2<C64>, ScatteringError> {
    let a = effective_inverse(spec, eps)?;
    let n = a.nrows();
    let eye = Array2::<C64>::eye(n);
    Ok(linalg::solve_c(a.view(), eye.view()))
}

fn effective_inverse(spec: &SystemSpec, eps: f64) -> Result<Array2<C64>, ScatteringError> {
    let sigma = self_energy_band(spec, eps)?;
    let mut a = spec.sample().h().clone();
    a -= &sigma;
    let n = a.nrows();
    for i in 0..n {
        a[[i, i]] -= C64::new(eps, 0.0);
    }
    let cond = linalg::cond_2(a.view());
    if !(cond < CONDITION_LIMIT) {
        return Err(ScatteringError::SingularEffectiveHamiltonian { eps, cond });
    }
    Ok(a)
}

/// On-shell scattering matrix and transmittance table at energy `ε`.
pub fn on_shell_s_matrix(spec: &SystemSpec, eps: f64) -> Result<OnShellData, ScatteringError> {
    let w = lead::spectral_weight(eps)?;
    let a = effective_inverse(spec, eps)?;
    let c = spec.coupling_columns();
    // Y = G_S C via one solve; X = C† Y.
    let y = linalg::solve_c(a.view(), c.view());
    let x = c.t().mapv(|v| v.conj()).dot(&y);

    let m = spec.n_leads();
    let factor = C64::new(0.0, 2.0 * std::f64::consts::PI * w);
    let mut s = x.mapv(|v| factor * v);
    for k in 0..m {
        s[[k, k]] += 1.0;
    }

    let residual = linalg::unitarity_residual(s.view());
    if !(residual <= UNITARITY_TOL) {
        return Err(ScatteringError::UnitarityViolation { eps, residual });
    }

    let mut transmittance = Array2::<f64>::zeros((m, m));
    for k in 0..m {
        for j in 0..m {
            let delta = if k == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            transmittance[[k, j]] = (delta - s[[k, j]]).norm_sqr();
        }
    }
    Ok(OnShellData {
        eps,
        s,
        transmittance,
    })
}

/// Scattering data on every node of a grid. Fails on the first bad energy
/// with its index attached via the error's `eps` field.
pub fn transmittance_sweep(
    spec: &SystemSpec,
    nodes: &[f64],
) -> Result<Vec<OnShellData>, ScatteringError> {
    nodes.iter().map(|&e| on_shell_s_matrix(spec, e)).collect()
}

/// Transmission probability between two given leads at one energy.
pub fn transmission(spec: &SystemSpec, eps: f64, k: usize, j: usize) -> Result<f64, ScatteringError> {
    Ok(on_shell_s_matrix(spec, eps)?.transmittance[[k, j]])
}
