//! Full counting statistics of the steady state.
//!
//! The long-time cumulant generating function of the energy and particle
//! transfers, per unit time and with one counting field pair `(α_k, ν_k)`
//! per lead, is
//!
//! `e_+(α, ν) = ∫ ln det(I + t(ε)[e^{q} s†(ε) e^{-q} s(ε) - I]) dε/2π`,
//!
//! where `q = diag(α_k ε + ν_k)` and `t = diag(f_k(ε))`. The determinant is
//! evaluated in the congruent Hermitian form
//!
//! `det[(I - t) + t^{1/2} C†C t^{1/2}]`, `C = e^{-q/2} s e^{q/2}`,
//!
//! which is positive definite for every unitary `s` (also at zero
//! temperature, where `t` is a projection), so the logarithm never sees a
//! complex phase. First derivatives at zero counting field reproduce the
//! steady currents; the Hessian encodes the noise.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::linalg;
use crate::model::SystemSpec;
use crate::numerics::{self, NumericsError};
use crate::scattering::{self, OnShellData, ScatteringError};
use crate::transport::CurrentKind;
use crate::C64;

/// Central-difference step for counting-field derivatives.
pub const CURRENT_STEP: f64 = 1e-4;

/// Largest counting field probed by the Legendre bisection; beyond this the
/// requested rate lies outside the attainable transfer range for any system
/// in the band.
pub const NU_CAP: f64 = 250.0;

#[derive(Debug, Error)]
pub enum FcsError {
    #[error(
        "levitov determinant lost positivity at eps = {eps} (re = {re:.3e}, im = {im:.3e})"
    )]
    DeterminantNotPositive { eps: f64, re: f64, im: f64 },
    #[error(transparent)]
    Quadrature(#[from] NumericsError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error("counting-field shape mismatch: {0}")]
    WrongShape(&'static str),
}

/// One counting field pair per lead: `α` couples to energy, `ν` to particle
/// number.
#[derive(Debug, Clone)]
pub struct CountingField {
    pub alpha: Array1<f64>,
    pub nu: Array1<f64>,
}

impl CountingField {
    pub fn new(alpha: Array1<f64>, nu: Array1<f64>) -> Result<Self, FcsError> {
        if alpha.len() != nu.len() {
            return Err(FcsError::WrongShape("alpha and nu must have equal length"));
        }
        if alpha.iter().chain(nu.iter()).any(|v| !v.is_finite()) {
            return Err(FcsError::WrongShape("counting fields must be finite"));
        }
        Ok(Self { alpha, nu })
    }

    pub fn zero(m: usize) -> Self {
        Self {
            alpha: Array1::zeros(m),
            nu: Array1::zeros(m),
        }
    }

    /// Single particle-counting field on lead `k`.
    pub fn particle(m: usize, k: usize, nu: f64) -> Self {
        let mut cf = Self::zero(m);
        cf.nu[k] = nu;
        cf
    }

    /// Single energy-counting field on lead `k`.
    pub fn energy(m: usize, k: usize, alpha: f64) -> Self {
        let mut cf = Self::zero(m);
        cf.alpha[k] = alpha;
        cf
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.alpha
            .iter()
            .chain(self.nu.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// Quadrature policy for generating-function integrals.
#[derive(Debug, Clone, Copy)]
pub struct QuadPolicy {
    pub abs_tol: f64,
}

impl Default for QuadPolicy {
    fn default() -> Self {
        Self { abs_tol: 1e-10 }
    }
}

/// Value of the cumulant generating function with its diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct GeneratingFunctionValue {
    pub value: f64,
    pub quadrature_error: f64,
    /// Smallest real part of the Levitov determinant seen across the band;
    /// positivity of this margin is what licenses the real logarithm.
    pub positivity_margin: f64,
}

/// `ln det` of the Levitov matrix at one energy, together with the real part
/// of the determinant.
///
/// Two-lead systems use the scalar closed form, which stays accurate at
/// counting fields far too large for the determinant (whose entries then span
/// `e^{|q|}` and cancel); more leads go through the Hermitian determinant.
fn levitov_log_det(
    spec: &SystemSpec,
    data: &OnShellData,
    cf: &CountingField,
) -> Result<(f64, f64), FcsError> {
    if spec.n_leads() == 2 {
        levitov_log_det_two_lead(spec, data, cf)
    } else {
        levitov_log_det_general(spec, data, cf)
    }
}

fn levitov_log_det_general(
    spec: &SystemSpec,
    data: &OnShellData,
    cf: &CountingField,
) -> Result<(f64, f64), FcsError> {
    let m = spec.n_leads();
    let eps = data.eps;
    let q: Vec<f64> = (0..m).map(|k| cf.alpha[k] * eps + cf.nu[k]).collect();
    let t: Vec<f64> = (0..m).map(|k| spec.reservoir(k).occupation(eps)).collect();

    // A = (I - t) + t^{1/2} C†C t^{1/2}, C = e^{-q/2} s e^{q/2}.
    let mut c = Array2::<C64>::zeros((m, m));
    for j in 0..m {
        for k in 0..m {
            c[[j, k]] = data.s[[j, k]] * ((q[k] - q[j]) * 0.5).exp();
        }
    }
    let cdag_c = linalg::adjoint(c.view()).dot(&c);
    let mut a = Array2::<C64>::zeros((m, m));
    for j in 0..m {
        for k in 0..m {
            a[[j, k]] = (t[j] * t[k]).sqrt() * cdag_c[[j, k]];
        }
        a[[j, j]] += 1.0 - t[j];
    }
    // Wipe the anti-Hermitian roundoff so the determinant stays on the real
    // axis.
    let ah = linalg::adjoint(a.view());
    let a = (&a + &ah).mapv(|v| 0.5 * v);

    let d = linalg::det_c(a.view());
    if !(d.re > 0.0) || d.im.abs() > 1e-10 * d.re.max(1e-300) {
        return Err(FcsError::DeterminantNotPositive {
            eps,
            re: d.re,
            im: d.im,
        });
    }
    Ok((d.re.ln(), d.re))
}

/// Two-lead determinant in closed form:
///
/// `D = 1 + f₀(1-f₁)𝒯(e^λ - 1) + f₁(1-f₀)𝒯(e^{-λ} - 1)`, `λ = q₀ - q₁`.
///
/// Regrouped as `e^{|λ|}(c₀ + c₁ e^{-|λ|} + c₂ e^{-2|λ|})` with
///
/// `c₁ = R + 𝒯[(1-f₀)(1-f₁) + f₀f₁]`
///
/// every coefficient is a sum of nonnegative products, so no subtraction ever
/// occurs; in particular the reflection probability `R` enters directly from
/// the diagonal of `s` rather than as `1 - 𝒯`.
fn levitov_log_det_two_lead(
    spec: &SystemSpec,
    data: &OnShellData,
    cf: &CountingField,
) -> Result<(f64, f64), FcsError> {
    let eps = data.eps;
    let f0 = spec.reservoir(0).occupation(eps);
    let f1 = spec.reservoir(1).occupation(eps);
    let trans = 0.5 * (data.transmittance[[0, 1]] + data.transmittance[[1, 0]]);
    let refl = 0.5 * (data.s[[0, 0]].norm_sqr() + data.s[[1, 1]].norm_sqr());

    let lambda = (cf.alpha[0] - cf.alpha[1]) * eps + cf.nu[0] - cf.nu[1];
    let fwd = f0 * (1.0 - f1) * trans;
    let bwd = f1 * (1.0 - f0) * trans;
    let mid = refl + trans * ((1.0 - f0) * (1.0 - f1) + f0 * f1);
    let (c0, c2) = if lambda >= 0.0 { (fwd, bwd) } else { (bwd, fwd) };
    let shift = lambda.abs();
    let arg = c0 + (-shift).exp() * mid + (-2.0 * shift).exp() * c2;
    if !(arg > 0.0) {
        return Err(FcsError::DeterminantNotPositive {
            eps,
            re: arg,
            im: 0.0,
        });
    }
    let logdet = shift + arg.ln();
    Ok((logdet, logdet.exp()))
}

/// Integrand of the cumulant generating function at one energy (natural
/// logarithm of the Levitov determinant, not yet divided by 2π).
pub fn levitov_integrand(
    spec: &SystemSpec,
    eps: f64,
    cf: &CountingField,
) -> Result<f64, FcsError> {
    check_shape(spec, cf)?;
    let data = scattering::on_shell_s_matrix(spec, eps)?;
    Ok(levitov_log_det(spec, &data, cf)?.0)
}

fn check_shape(spec: &SystemSpec, cf: &CountingField) -> Result<(), FcsError> {
    if cf.len() != spec.n_leads() {
        return Err(FcsError::WrongShape("one counting field pair per lead"));
    }
    Ok(())
}

fn zero_t_breakpoints(spec: &SystemSpec) -> Vec<f64> {
    spec.reservoirs()
        .iter()
        .filter(|r| r.is_zero_temperature())
        .map(|r| r.mu())
        .filter(|mu| mu.abs() < 1.0)
        .collect()
}

/// Band integral of `ln det / 2π` under the given policy.
///
/// When every reservoir is at zero temperature the integrand vanishes
/// identically outside `[min_k μ_k, max_k μ_k]` (all occupations coincide
/// there and the determinant is exactly 1), so the integral is restricted to
/// that window. Besides saving panels, this avoids evaluating the
/// determinant where large counting fields would amplify the unitarity
/// roundoff of `s` into the log.
pub fn cumulant_generating(
    spec: &SystemSpec,
    policy: &QuadPolicy,
    cf: &CountingField,
) -> Result<GeneratingFunctionValue, FcsError> {
    check_shape(spec, cf)?;
    let all_zero_t = spec.reservoirs().iter().all(|r| r.is_zero_temperature());
    let (lo, hi) = if all_zero_t {
        let mus: Vec<f64> = spec.reservoirs().iter().map(|r| r.mu()).collect();
        let lo = mus.iter().cloned().fold(f64::INFINITY, f64::min).max(-1.0);
        let hi = mus.iter().cloned().fold(f64::NEG_INFINITY, f64::max).min(1.0);
        (lo, hi)
    } else {
        (-1.0, 1.0)
    };
    if !(hi > lo) {
        return Ok(GeneratingFunctionValue {
            value: 0.0,
            quadrature_error: 0.0,
            positivity_margin: 1.0,
        });
    }
    let breakpoints: Vec<f64> = zero_t_breakpoints(spec)
        .into_iter()
        .filter(|mu| *mu > lo && *mu < hi)
        .collect();
    let mut pending: Option<FcsError> = None;
    let mut margin = f64::INFINITY;
    let two_pi = 2.0 * std::f64::consts::PI;
    let result = numerics::integrate_interval(
        |eps| {
            let outcome = scattering::on_shell_s_matrix(spec, eps)
                .map_err(FcsError::from)
                .and_then(|data| levitov_log_det(spec, &data, cf));
            match outcome {
                Ok((logdet, re)) => {
                    margin = margin.min(re);
                    logdet / two_pi
                }
                Err(e) => {
                    pending = Some(e);
                    f64::NAN
                }
            }
        },
        lo,
        hi,
        policy.abs_tol,
        &breakpoints,
    );
    if let Some(e) = pending {
        return Err(e);
    }
    let r = result?;
    Ok(GeneratingFunctionValue {
        value: r.value,
        quadrature_error: r.error_estimate,
        positivity_margin: margin,
    })
}

/// Steady current of lead `k` extracted from the generating function by a
/// central difference in the corresponding counting field.
pub fn current_from_fcs(spec: &SystemSpec, k: usize, kind: CurrentKind) -> Result<f64, FcsError> {
    let m = spec.n_leads();
    if k >= m {
        return Err(FcsError::WrongShape("lead index out of range"));
    }
    let policy = QuadPolicy { abs_tol: 1e-12 };
    let mk = |s: f64| match kind {
        CurrentKind::Particle => CountingField::particle(m, k, s),
        CurrentKind::Energy => CountingField::energy(m, k, s),
    };
    let ep = cumulant_generating(spec, &policy, &mk(CURRENT_STEP))?.value;
    let em = cumulant_generating(spec, &policy, &mk(-CURRENT_STEP))?.value;
    Ok((ep - em) / (2.0 * CURRENT_STEP))
}

/// Large-deviation rate function of the particle transfer in a two-lead
/// system: `I(q̂) = sup_ν [ν q̂ - ê_+(ν)]` with `ê_+(ν)` the generating
/// function counted on lead 0.
///
/// Returns `+∞` when `q̂` lies outside the attainable range of transfer
/// rates (the supremum is not achieved for any `|ν| ≤` [`NU_CAP`]).
pub fn rate_function(spec: &SystemSpec, qhat: f64) -> Result<f64, FcsError> {
    if spec.n_leads() != 2 {
        return Err(FcsError::WrongShape(
            "rate function is defined for two-lead systems",
        ));
    }
    if !qhat.is_finite() {
        return Err(FcsError::WrongShape("requested rate must be finite"));
    }
    let policy = QuadPolicy { abs_tol: 1e-12 };
    let e_hat = |nu: f64| -> Result<f64, FcsError> {
        Ok(cumulant_generating(spec, &policy, &CountingField::particle(2, 0, nu))?.value)
    };
    // ê is smooth and convex, so ê' - q̂ is nondecreasing; bracket a sign
    // change by geometric expansion, then bisect.
    let h = CURRENT_STEP;
    let slope = |nu: f64| -> Result<f64, FcsError> {
        Ok((e_hat(nu + h)? - e_hat(nu - h)?) / (2.0 * h) - qhat)
    };

    let mut lo = -1.0;
    let mut hi = 1.0;
    let mut f_lo = slope(lo)?;
    let mut f_hi = slope(hi)?;
    while f_lo > 0.0 && lo > -NU_CAP {
        lo *= 2.0;
        f_lo = slope(lo)?;
    }
    while f_hi < 0.0 && hi < NU_CAP {
        hi *= 2.0;
        f_hi = slope(hi)?;
    }
    if f_lo > 0.0 || f_hi < 0.0 {
        return Ok(f64::INFINITY);
    }
    for _ in 0..80 {
        if hi - lo <= 1e-10 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if slope(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu_star = 0.5 * (lo + hi);
    let value = nu_star * qhat - e_hat(nu_star)?;
    // The supremum dominates the ν = 0 value, which is exactly 0; anything
    // below is quadrature/bisection roundoff.
    debug_assert!(value > -1e-8, "rate function came out at {value}");
    Ok(value.max(0.0))
}

/// Zero-temperature two-lead comparison between the exact generating
/// function and its flat-transmittance (binomial) approximation over the
/// bias window.
#[derive(Debug, Clone, Copy)]
pub struct ZeroTempBinomial {
    /// `ê_+(ν)` integrated exactly over the bias window.
    pub exact: f64,
    /// Binomial value `(Δμ/2π) ln(1 - 𝒯̄ + 𝒯̄ e^{±ν})` with the
    /// transmittance frozen at the window midpoint.
    pub flat: f64,
    pub difference: f64,
    pub transmittance_mid: f64,
}

/// Evaluates [`ZeroTempBinomial`] for a system whose two reservoirs are both
/// at zero temperature. Outside the bias window the Levitov integrand
/// vanishes identically, so the exact value is an integral over the window
/// alone.
pub fn zero_temperature_two_lead(spec: &SystemSpec, nu: f64) -> Result<ZeroTempBinomial, FcsError> {
    if spec.n_leads() != 2 {
        return Err(FcsError::WrongShape(
            "binomial comparison is defined for two-lead systems",
        ));
    }
    if !spec.reservoirs().iter().all(|r| r.is_zero_temperature()) {
        return Err(FcsError::WrongShape(
            "binomial comparison requires both reservoirs at zero temperature",
        ));
    }
    let mu0 = spec.reservoir(0).mu();
    let mu1 = spec.reservoir(1).mu();
    let lo = mu0.min(mu1).max(-1.0);
    let hi = mu0.max(mu1).min(1.0);
    let mid = 0.5 * (lo + hi).clamp(-2.0, 2.0);
    if !(hi > lo) {
        return Ok(ZeroTempBinomial {
            exact: 0.0,
            flat: 0.0,
            difference: 0.0,
            transmittance_mid: f64::NAN,
        });
    }

    let cf = CountingField::particle(2, 0, nu);
    let mut pending: Option<FcsError> = None;
    let two_pi = 2.0 * std::f64::consts::PI;
    let result = numerics::integrate_interval(
        |eps| {
            match scattering::on_shell_s_matrix(spec, eps)
                .map_err(FcsError::from)
                .and_then(|data| levitov_log_det(spec, &data, &cf))
            {
                Ok((logdet, _)) => logdet / two_pi,
                Err(e) => {
                    pending = Some(e);
                    f64::NAN
                }
            }
        },
        lo,
        hi,
        1e-12,
        &[],
    );
    if let Some(e) = pending {
        return Err(e);
    }
    let exact = result?.value;

    let t_mid = scattering::on_shell_s_matrix(spec, mid)?.transmittance[[0, 1]];
    // Lead 0 emits when μ₀ > μ₁ and absorbs otherwise.
    let direction = if mu0 >= mu1 { nu } else { -nu };
    let flat = (hi - lo) / two_pi * (1.0 - t_mid + t_mid * direction.exp()).ln();
    Ok(ZeroTempBinomial {
        exact,
        flat,
        difference: exact - flat,
        transmittance_mid: t_mid,
    })
}
