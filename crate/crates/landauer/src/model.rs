//! System specification: sample, lead couplings, reservoir parameters.
//!
//! A system is a finite tight-binding sample (Hermitian `n_s × n_s` matrix)
//! coupled to `M ≥ 1` semi-infinite one-band leads, each lead attached
//! through a coupling vector `χ_k` acting between its contact site and the
//! sample, and each thermalized by a reservoir at inverse temperature `β_k`
//! and chemical potential `μ_k`. All validation happens at construction so
//! the numerical layers can assume well-formed data.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::lead;
use crate::linalg;
use crate::C64;

/// Entry-wise tolerance for Hermiticity and realness checks on input data.
pub const SPEC_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("sample hamiltonian is not hermitian (residual {residual:.3e})")]
    NonHermitianSample { residual: f64 },
    #[error("{context}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("system needs at least one lead")]
    EmptyLeads,
    #[error("inverse temperature must be positive (or +inf), got {0}")]
    BadBeta(f64),
    #[error("chemical potential must be finite, got {0}")]
    BadMu(f64),
    #[error("bound-state search failed: {0}")]
    RootFindFailure(String),
}

/// The finite sample: a validated Hermitian one-particle Hamiltonian.
#[derive(Debug, Clone)]
pub struct SampleSpec {
    h: Array2<C64>,
}

impl SampleSpec {
    pub fn new(h: Array2<C64>) -> Result<Self, ModelError> {
        let (r, c) = h.dim();
        if r != c || r == 0 {
            return Err(ModelError::DimensionMismatch {
                context: "sample hamiltonian must be square and nonempty",
                expected: r.max(1),
                found: c,
            });
        }
        let residual = linalg::hermiticity_residual(h.view());
        if !(residual <= SPEC_TOL) {
            return Err(ModelError::NonHermitianSample { residual });
        }
        Ok(Self { h })
    }

    pub fn n_sites(&self) -> usize {
        self.h.nrows()
    }

    pub fn h(&self) -> &Array2<C64> {
        &self.h
    }
}

/// Coupling vector between one lead's contact site and the sample.
#[derive(Debug, Clone)]
pub struct LeadCoupling {
    chi: Array1<C64>,
}

impl LeadCoupling {
    pub fn new(chi: Array1<C64>) -> Result<Self, ModelError> {
        if chi.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(ModelError::DimensionMismatch {
                context: "coupling vector must have finite entries",
                expected: chi.len(),
                found: chi.len(),
            });
        }
        Ok(Self { chi })
    }

    pub fn chi(&self) -> &Array1<C64> {
        &self.chi
    }
}

/// Thermodynamic state of one reservoir. `β = +∞` selects the sharp
/// zero-temperature occupation.
#[derive(Debug, Clone, Copy)]
pub struct ReservoirParams {
    beta: f64,
    mu: f64,
}

impl ReservoirParams {
    pub fn new(beta: f64, mu: f64) -> Result<Self, ModelError> {
        if beta.is_nan() || beta <= 0.0 {
            return Err(ModelError::BadBeta(beta));
        }
        if !mu.is_finite() {
            return Err(ModelError::BadMu(mu));
        }
        Ok(Self { beta, mu })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta.is_infinite()
    }

    /// Occupation of this reservoir at energy `eps`.
    pub fn occupation(&self, eps: f64) -> f64 {
        lead::fermi(self.beta, self.mu, eps)
    }
}

/// Reference equilibrium `(β̄, μ̄)` against which thermodynamic forces are
/// measured. Must have finite temperature.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumRef {
    beta: f64,
    mu: f64,
}

impl EquilibriumRef {
    pub fn new(beta: f64, mu: f64) -> Result<Self, ModelError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(ModelError::BadBeta(beta));
        }
        if !mu.is_finite() {
            return Err(ModelError::BadMu(mu));
        }
        Ok(Self { beta, mu })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Equilibrium occupation at energy `eps`.
    pub fn occupation(&self, eps: f64) -> f64 {
        lead::fermi(self.beta, self.mu, eps)
    }
}

/// Complete transport problem: sample, couplings, reservoir states.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    sample: SampleSpec,
    leads: Vec<LeadCoupling>,
    reservoirs: Vec<ReservoirParams>,
}

impl SystemSpec {
    pub fn new(
        sample: SampleSpec,
        leads: Vec<LeadCoupling>,
        reservoirs: Vec<ReservoirParams>,
    ) -> Result<Self, ModelError> {
        if leads.is_empty() {
            return Err(ModelError::EmptyLeads);
        }
        if leads.len() != reservoirs.len() {
            return Err(ModelError::DimensionMismatch {
                context: "one reservoir per lead",
                expected: leads.len(),
                found: reservoirs.len(),
            });
        }
        let n_s = sample.n_sites();
        for l in &leads {
            if l.chi().len() != n_s {
                return Err(ModelError::DimensionMismatch {
                    context: "coupling vector length must equal sample size",
                    expected: n_s,
                    found: l.chi().len(),
                });
            }
        }
        Ok(Self {
            sample,
            leads,
            reservoirs,
        })
    }

    pub fn sample(&self) -> &SampleSpec {
        &self.sample
    }

    pub fn n_leads(&self) -> usize {
        self.leads.len()
    }

    pub fn lead(&self, k: usize) -> &LeadCoupling {
        &self.leads[k]
    }

    pub fn leads(&self) -> &[LeadCoupling] {
        &self.leads
    }

    pub fn reservoir(&self, k: usize) -> &ReservoirParams {
        &self.reservoirs[k]
    }

    pub fn reservoirs(&self) -> &[ReservoirParams] {
        &self.reservoirs
    }

    /// Couplings as the columns of an `n_s × M` matrix.
    pub fn coupling_columns(&self) -> Array2<C64> {
        let n_s = self.sample.n_sites();
        let m = self.n_leads();
        let mut c = Array2::zeros((n_s, m));
        for (k, l) in self.leads.iter().enumerate() {
            c.column_mut(k).assign(l.chi());
        }
        c
    }

    /// The positive-semidefinite coupling sum `K = Σ_k χ_k χ_k†`.
    pub fn coupling_matrix(&self) -> Array2<C64> {
        let n_s = self.sample.n_sites();
        let mut k = Array2::<C64>::zeros((n_s, n_s));
        for l in &self.leads {
            let chi = l.chi();
            for i in 0..n_s {
                for j in 0..n_s {
                    k[[i, j]] += chi[i] * chi[j].conj();
                }
            }
        }
        k
    }

    /// True when sample Hamiltonian and all couplings are real (entry-wise,
    /// to [`SPEC_TOL`]); the scattering matrix is then symmetric.
    pub fn is_time_reversal_invariant(&self) -> bool {
        let h_real = self.sample.h().iter().all(|v| v.im.abs() <= SPEC_TOL);
        let chi_real = self
            .leads
            .iter()
            .all(|l| l.chi().iter().all(|v| v.im.abs() <= SPEC_TOL));
        h_real && chi_real
    }

    /// Thermodynamic forces `(X^E_k, X^P_k)` of every reservoir relative to
    /// the reference equilibrium:
    ///
    /// `X^E_k = β_k - β̄`, `X^P_k = β̄ μ̄ - β_k μ_k`.
    ///
    /// Both vanish identically when every reservoir sits at `(β̄, μ̄)`. With
    /// these signs the linear-response matrix of the steady currents is
    /// symmetric and negative semidefinite. Zero-temperature reservoirs give
    /// infinite forces; linear response is a finite-temperature notion.
    pub fn thermo_forces(&self, eq: &EquilibriumRef) -> (Vec<f64>, Vec<f64>) {
        let xe = self
            .reservoirs
            .iter()
            .map(|r| r.beta - eq.beta)
            .collect();
        let xp = self
            .reservoirs
            .iter()
            .map(|r| eq.beta * eq.mu - r.beta * r.mu)
            .collect();
        (xe, xp)
    }

    /// All eigenvalues `|E| > 1` of the coupled one-particle operator
    /// (sample plus semi-infinite leads), sorted ascending, with
    /// multiplicity.
    ///
    /// Outside the band an energy `E` is an eigenvalue iff
    /// `H_S - E - g(E) K` is singular. Each ascending-sorted eigenvalue
    /// branch of `H_S - g(E) K` minus `E` is strictly decreasing in `E` on
    /// either side of the band (since `g' > 0` there and `K ⪰ 0`), so every
    /// branch crosses zero at most once and plain bisection finds each root,
    /// degeneracies included. Eigenvalues embedded in `[-1, 1]` (possible
    /// only for sample states exactly decoupled from every lead) are outside
    /// the scope of this search.
    pub fn bound_states(&self) -> Result<Vec<f64>, ModelError> {
        let n_s = self.sample.n_sites();
        let k = self.coupling_matrix();
        let h = self.sample.h();

        let h_norm = {
            let (ev, _) = linalg::eigh_c(h.view());
            ev.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
        };
        let c = self.coupling_columns();
        let c_norm = *linalg::singular_values(c.view())
            .first()
            .unwrap_or(&0.0);
        let e_max = h_norm.max(1.0) + c_norm + 0.5;

        // Ascending branch i of H_S - g(E)K, minus E.
        let branch = |e: f64, i: usize| -> f64 {
            let g = lead::surface_green_outside(e);
            let mut m = h.clone();
            m.scaled_add(C64::new(-g, 0.0), &k);
            let (ev, _) = linalg::eigh_c(m.view());
            ev[i] - e
        };

        let mut roots = Vec::new();
        for side in [1.0f64, -1.0] {
            for i in 0..n_s {
                // On the positive side f(E) = μ_i(E) - E decreases from
                // f(1) to f(E_max) < 0; a root exists iff f(1) > 0. The
                // negative side mirrors this with the roles of the
                // endpoints swapped.
                let (mut lo, mut hi) = if side > 0.0 {
                    (1.0, e_max)
                } else {
                    (-e_max, -1.0)
                };
                let f_band_edge = branch(side, i);
                let f_far = branch(side * e_max, i);
                let bracketed = if side > 0.0 {
                    f_band_edge > 0.0
                } else {
                    f_band_edge < 0.0
                };
                if !bracketed {
                    continue;
                }
                if (f_band_edge > 0.0) == (f_far > 0.0) {
                    return Err(ModelError::RootFindFailure(format!(
                        "branch {i} does not change sign on [{lo}, {hi}]"
                    )));
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if hi - lo <= 1e-13 * mid.abs().max(1.0) {
                        break;
                    }
                    let fm = branch(mid, i);
                    // f is decreasing in E on both sides of the band.
                    if fm > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(roots)
    }
}
