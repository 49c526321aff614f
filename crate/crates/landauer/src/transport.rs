//! Steady-state transport: Landauer-Büttiker currents, entropy production,
//! and the linear-response (Onsager) matrix.
//!
//! The particle and energy currents flowing out of reservoir `k` are
//!
//! `Φ^P_k = Σ_j ∫ 𝒯_{kj}(ε) (f_k - f_j) dε/2π`,
//! `Φ^E_k = Σ_j ∫ 𝒯_{kj}(ε) ε (f_k - f_j) dε/2π`,
//!
//! integrated over the band. The row-minus-column sum rule of `𝒯` makes
//! `Σ_k Φ_k = 0` hold pointwise in the integrand, so the reported
//! conservation residuals measure pure quadrature noise. Entropy production
//! is `σ = -Σ_k β_k Φ^H_k` with heat current `Φ^H_k = Φ^E_k - μ_k Φ^P_k`;
//! it is nonnegative and vanishes exactly at global equilibrium.

use ndarray::Array2;
use thiserror::Error;

use crate::fcs::{self, CountingField, FcsError, QuadPolicy};
use crate::model::{EquilibriumRef, SystemSpec};
use crate::numerics::{self, NumericsError};
use crate::scattering::{self, OnShellData, ScatteringError};

/// Absolute quadrature tolerance used for every current integral.
pub const CURRENT_ABS_TOL: f64 = 1e-10;

/// Step used for the counting-field Hessian in [`OnsagerMethod::Fcs`].
pub const FCS_HESSIAN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurrentKind {
    Particle,
    Energy,
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error(transparent)]
    Quadrature(#[from] NumericsError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error(transparent)]
    Fcs(#[from] FcsError),
    #[error(
        "entropy production undefined: zero-temperature reservoir {lead} carries \
         heat current {heat_current:.3e}"
    )]
    EpUndefined { lead: usize, heat_current: f64 },
    #[error("the fcs-based linear response method requires a time-reversal invariant system")]
    NotTRI,
}

/// Currents out of one reservoir.
#[derive(Debug, Clone, Copy)]
pub struct LeadCurrents {
    pub particle: f64,
    pub energy: f64,
    pub heat: f64,
}

/// Full steady-state budget of the junction.
#[derive(Debug, Clone)]
pub struct CurrentReport {
    pub leads: Vec<LeadCurrents>,
    /// `σ = -Σ_k β_k Φ^H_k ≥ 0`.
    pub entropy_production: f64,
    /// `Σ_k Φ^E_k` — quadrature noise only.
    pub conservation_residual_energy: f64,
    /// `Σ_k Φ^P_k` — quadrature noise only.
    pub conservation_residual_particle: f64,
    /// Sum of the quadrature error estimates of all integrals behind the
    /// report.
    pub quadrature_error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnsagerMethod {
    /// Moment integrals of the transmittance against `f̄(1-f̄)`.
    Direct,
    /// `-½ ×` the counting-field Hessian of the cumulant generating
    /// function at the reference equilibrium.
    Fcs,
}

/// Linear-response matrix in block order (energy rows/cols first, then
/// particle): entry `(a·M + k, b·M + j)` is `∂Φ^a_k / ∂X^b_j` at the
/// reference equilibrium. Symmetric and negative semidefinite for
/// time-reversal invariant systems.
#[derive(Debug, Clone)]
pub struct OnsagerMatrix {
    pub l: Array2<f64>,
    pub equilibrium: EquilibriumRef,
}

impl OnsagerMatrix {
    pub fn n_leads(&self) -> usize {
        self.l.nrows() / 2
    }

    /// Largest deviation from symmetry.
    pub fn asymmetry(&self) -> f64 {
        let n = self.l.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.l[[i, j]] - self.l[[j, i]]).abs());
            }
        }
        worst
    }
}

/// Breakpoints for the band integrals: zero-temperature chemical potentials,
/// where Fermi functions are discontinuous.
fn band_breakpoints(spec: &SystemSpec) -> Vec<f64> {
    spec.reservoirs()
        .iter()
        .filter(|r| r.is_zero_temperature())
        .map(|r| r.mu())
        .filter(|mu| mu.abs() < 1.0)
        .collect()
}

/// Adaptive band integral of a function of the on-shell scattering data.
/// Scattering failures inside the integrand abort the quadrature and are
/// reported with their energy.
pub(crate) fn integrate_scattering<F>(
    spec: &SystemSpec,
    abs_tol: f64,
    mut f: F,
) -> Result<numerics::QuadratureResult, TransportError>
where
    F: FnMut(&OnShellData) -> f64,
{
    let breakpoints = band_breakpoints(spec);
    let mut pending: Option<ScatteringError> = None;
    let result = numerics::integrate_band(
        |eps| match scattering::on_shell_s_matrix(spec, eps) {
            Ok(data) => f(&data),
            Err(e) => {
                pending = Some(e);
                f64::NAN
            }
        },
        abs_tol,
        &breakpoints,
    );
    if let Some(e) = pending {
        return Err(e.into());
    }
    Ok(result?)
}

fn current_integrand(spec: &SystemSpec, data: &OnShellData, k: usize, kind: CurrentKind) -> f64 {
    let m = spec.n_leads();
    let f_k = spec.reservoir(k).occupation(data.eps);
    let mut acc = 0.0;
    for j in 0..m {
        if j == k {
            continue;
        }
        let f_j = spec.reservoir(j).occupation(data.eps);
        acc += data.transmittance[[k, j]] * (f_k - f_j);
    }
    let weight = match kind {
        CurrentKind::Particle => 1.0,
        CurrentKind::Energy => data.eps,
    };
    acc * weight / (2.0 * std::f64::consts::PI)
}

/// Steady current of the given kind out of reservoir `k`, with the
/// quadrature error estimate.
pub fn steady_current(
    spec: &SystemSpec,
    k: usize,
    kind: CurrentKind,
) -> Result<(f64, f64), TransportError> {
    let r = integrate_scattering(spec, CURRENT_ABS_TOL, |data| {
        current_integrand(spec, data, k, kind)
    })?;
    Ok((r.value, r.error_estimate))
}

/// All lead currents, conservation residuals, and entropy production.
///
/// A zero-temperature reservoir whose heat current does not vanish (beyond
/// quadrature noise) makes `σ = +∞`; this is reported as
/// [`TransportError::EpUndefined`] instead of a number.
pub fn current_report(spec: &SystemSpec) -> Result<CurrentReport, TransportError> {
    let m = spec.n_leads();
    let mut leads = Vec::with_capacity(m);
    let mut err_total = 0.0;
    for k in 0..m {
        let (particle, ep) = steady_current(spec, k, CurrentKind::Particle)?;
        let (energy, ee) = steady_current(spec, k, CurrentKind::Energy)?;
        let heat = energy - spec.reservoir(k).mu() * particle;
        err_total += ep + ee;
        leads.push(LeadCurrents {
            particle,
            energy,
            heat,
        });
    }

    let mut sigma = 0.0;
    for (k, lc) in leads.iter().enumerate() {
        let res = spec.reservoir(k);
        if res.is_zero_temperature() {
            let heat_floor = 1e-9f64.max(10.0 * err_total);
            if lc.heat.abs() > heat_floor {
                return Err(TransportError::EpUndefined {
                    lead: k,
                    heat_current: lc.heat,
                });
            }
            // Vanishing heat contributes nothing even at β = ∞.
        } else {
            sigma -= res.beta() * lc.heat;
        }
    }

    Ok(CurrentReport {
        conservation_residual_energy: leads.iter().map(|l| l.energy).sum(),
        conservation_residual_particle: leads.iter().map(|l| l.particle).sum(),
        entropy_production: sigma,
        quadrature_error_estimate: err_total,
        leads,
    })
}

/// Entropy production rate `σ ≥ 0` of the steady state.
pub fn entropy_production(spec: &SystemSpec) -> Result<f64, TransportError> {
    Ok(current_report(spec)?.entropy_production)
}

/// Linear-response matrix at the reference equilibrium.
///
/// `Direct` evaluates the moment integrals
/// `L^{ab}_{kj} = ∫ 𝒯_{kj}(ε) ε^{#a+#b} f̄(1-f̄) dε/2π` for `k ≠ j`
/// (`#E = 1`, `#P = 0`) and fills diagonals from the vanishing row sums.
/// `Fcs` differentiates the cumulant generating function twice in the
/// counting fields; it requires time-reversal invariance.
pub fn onsager_matrix(
    spec: &SystemSpec,
    eq: &EquilibriumRef,
    method: OnsagerMethod,
) -> Result<OnsagerMatrix, TransportError> {
    match method {
        OnsagerMethod::Direct => onsager_direct(spec, eq),
        OnsagerMethod::Fcs => onsager_fcs(spec, eq),
    }
}

fn onsager_direct(spec: &SystemSpec, eq: &EquilibriumRef) -> Result<OnsagerMatrix, TransportError> {
    let m = spec.n_leads();
    let mut l = Array2::<f64>::zeros((2 * m, 2 * m));
    let two_pi = 2.0 * std::f64::consts::PI;
    for k in 0..m {
        for j in 0..m {
            if j == k {
                continue;
            }
            let mut moments = [0.0f64; 3];
            for (power, slot) in moments.iter_mut().enumerate() {
                let r = integrate_scattering(spec, CURRENT_ABS_TOL, |data| {
                    let f = eq.occupation(data.eps);
                    data.transmittance[[k, j]] * data.eps.powi(power as i32) * f * (1.0 - f)
                        / two_pi
                })?;
                *slot = r.value;
            }
            l[[k, j]] = moments[2]; // E-E
            l[[k, m + j]] = moments[1]; // E-P
            l[[m + k, j]] = moments[1]; // P-E
            l[[m + k, m + j]] = moments[0]; // P-P
        }
    }
    // Row sums vanish: a uniform shift of all reservoir parameters is just a
    // change of reference equilibrium and drives no current.
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    if j != k {
                        acc += l[[a * m + k, b * m + j]];
                    }
                }
                l[[a * m + k, b * m + k]] = -acc;
            }
        }
    }
    Ok(OnsagerMatrix {
        l,
        equilibrium: *eq,
    })
}

fn onsager_fcs(spec: &SystemSpec, eq: &EquilibriumRef) -> Result<OnsagerMatrix, TransportError> {
    if !spec.is_time_reversal_invariant() {
        return Err(TransportError::NotTRI);
    }
    let m = spec.n_leads();
    // Evaluate the generating function with every reservoir at the reference
    // equilibrium, where it is stationary and its Hessian encodes the
    // equilibrium fluctuations.
    let eq_spec = SystemSpec::new(
        spec.sample().clone(),
        spec.leads().to_vec(),
        vec![
            crate::model::ReservoirParams::new(eq.beta(), eq.mu()).expect("validated equilibrium");
            m
        ],
    )
    .expect("same shape as the validated input spec");
    let policy = QuadPolicy { abs_tol: 1e-12 };
    let h = FCS_HESSIAN_STEP;

    let eval = |y: &[f64]| -> Result<f64, TransportError> {
        let mut cf = CountingField::zero(m);
        for k in 0..m {
            cf.alpha[k] = y[k];
            cf.nu[k] = y[m + k];
        }
        Ok(fcs::cumulant_generating(&eq_spec, &policy, &cf)?.value)
    };

    let dim = 2 * m;
    let mut hess = Array2::<f64>::zeros((dim, dim));
    for u in 0..dim {
        let mut yp = vec![0.0; dim];
        yp[u] = h;
        let ep = eval(&yp)?;
        yp[u] = -h;
        let em = eval(&yp)?;
        hess[[u, u]] = (ep + em) / (h * h); // e(0) = 0 exactly
        for v in 0..u {
            let mut y = vec![0.0; dim];
            y[u] = h;
            y[v] = h;
            let epp = eval(&y)?;
            y[v] = -h;
            let epm = eval(&y)?;
            y[u] = -h;
            y[v] = h;
            let emp = eval(&y)?;
            y[v] = -h;
            let emm = eval(&y)?;
            let mixed = (epp - epm - emp + emm) / (4.0 * h * h);
            hess[[u, v]] = mixed;
            hess[[v, u]] = mixed;
        }
    }
    Ok(OnsagerMatrix {
        l: hess.mapv(|v| -0.5 * v),
        equilibrium: *eq,
    })
}
