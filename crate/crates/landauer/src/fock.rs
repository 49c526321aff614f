//! Exact fermionic second quantization at small mode count.
//!
//! Everything here works with dense matrices on the full 2^n-dimensional
//! antisymmetric Fock space, so it is capped at n = 12 modes. Its purpose is
//! exactness, not scale: it provides ground truth for the quasi-free Wick
//! identities and for the two-time measurement statistics that the fast
//! determinant formula in [`crate::timeevo`] is supposed to reproduce.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use thiserror::Error;

use crate::fcs::CountingField;
use crate::linalg;
use crate::timeevo::{self, FiniteSystem, TimeEvoError};
use crate::C64;

/// Mode cap for the general-purpose oracle (Fock dimension 4096).
pub const MAX_MODES: usize = 12;
/// Mode cap for the two-time oracle, which also diagonalizes a 2^n matrix.
pub const MAX_TWO_TIME_MODES: usize = 10;

const SINGULAR_TOL: f64 = 1e-10;
const WICK_TOL: f64 = 1e-10;
const TWO_TIME_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("{n} one-particle modes exceed the {max}-mode Fock-space cap")]
    TooLarge { n: usize, max: usize },
    #[error("generator eigenvalue {value} is within {tol:e} of 0 or 1")]
    SingularGenerator { value: f64, tol: f64 },
    #[error("{what}: independent evaluations differ by {gap:e} (tolerance {tol:e})")]
    OracleMismatch {
        what: &'static str,
        gap: f64,
        tol: f64,
    },
    #[error("shape mismatch: {0}")]
    WrongShape(&'static str),
    #[error("{0} must be Hermitian")]
    NotHermitian(&'static str),
    #[error(transparent)]
    TimeEvo(#[from] TimeEvoError),
}

/// Occupation-number basis of `n` fermionic modes with the Jordan-Wigner sign
/// convention: basis state `s` occupies the modes whose bits are set, and
/// `|s⟩ = a†_{i1}···a†_{ik}|vac⟩` with `i1 < ··· < ik`.
#[derive(Debug, Clone, Copy)]
pub struct FockOracle {
    n: usize,
}

/// Parity of the occupied modes below `mode` — the Jordan-Wigner string.
fn jw_sign(state: usize, mode: usize) -> f64 {
    if (state & ((1 << mode) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Occupied mode indices of `state` in ascending order.
fn occupied(state: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| state & (1 << i) != 0).collect()
}

impl FockOracle {
    pub fn new(n: usize) -> Result<Self, FockError> {
        if n > MAX_MODES {
            return Err(FockError::TooLarge { n, max: MAX_MODES });
        }
        Ok(Self { n })
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    /// Fock-space dimension 2^n.
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Dense matrix of `a†_i`. Entries are exactly 0 or ±1.
    pub fn creation(&self, i: usize) -> Array2<f64> {
        assert!(i < self.n, "mode index out of range");
        let dim = self.dim();
        let bit = 1 << i;
        let mut out = Array2::zeros((dim, dim));
        for state in 0..dim {
            if state & bit == 0 {
                out[[state | bit, state]] = jw_sign(state, i);
            }
        }
        out
    }

    /// Dense matrix of `a_i`.
    pub fn annihilation(&self, i: usize) -> Array2<f64> {
        self.creation(i).reversed_axes().to_owned()
    }

    /// Smeared creation operator `a*(g) = Σ_i g_i a†_i` (linear in `g`).
    pub fn create(&self, g: ArrayView1<'_, C64>) -> Result<Array2<C64>, FockError> {
        self.smeared(g, true)
    }

    /// Smeared annihilation operator `a(f) = Σ_i conj(f_i) a_i` (antilinear).
    pub fn annihilate(&self, f: ArrayView1<'_, C64>) -> Result<Array2<C64>, FockError> {
        self.smeared(f, false)
    }

    fn smeared(&self, v: ArrayView1<'_, C64>, create: bool) -> Result<Array2<C64>, FockError> {
        if v.len() != self.n {
            return Err(FockError::WrongShape(
                "smeared-mode vector must have one entry per mode",
            ));
        }
        let dim = self.dim();
        let mut out = Array2::zeros((dim, dim));
        for i in 0..self.n {
            let bit = 1 << i;
            let amp = if create { v[i] } else { v[i].conj() };
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            for state in 0..dim {
                if state & bit == 0 {
                    let sgn = jw_sign(state, i);
                    if create {
                        out[[state | bit, state]] += amp * sgn;
                    } else {
                        out[[state, state | bit]] += amp * sgn;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Basis states grouped by particle number.
    fn states_by_count(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.n + 1];
        for state in 0..self.dim() {
            classes[state.count_ones() as usize].push(state);
        }
        classes
    }

    fn check_square(&self, m: ArrayView2<'_, C64>, what: &'static str) -> Result<(), FockError> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(FockError::WrongShape(what));
        }
        Ok(())
    }
}

/// Second quantization `Γ(S)`: acts as `S^{⊗k}` on the k-particle sector.
///
/// Matrix elements between equal-particle-number states are minors of `S`
/// (rows/columns taken in ascending mode order); all other elements vanish.
/// Cost grows as the square of the Fock dimension.
pub fn second_quantize_gamma(
    orc: &FockOracle,
    s_mat: ArrayView2<'_, C64>,
) -> Result<Array2<C64>, FockError> {
    orc.check_square(s_mat, "one-particle matrix must be n×n")?;
    let dim = orc.dim();
    let mut out = Array2::zeros((dim, dim));
    for class in orc.states_by_count() {
        for &a in &class {
            let rows = occupied(a, orc.n);
            for &b in &class {
                let cols = occupied(b, orc.n);
                out[[a, b]] = match rows.len() {
                    0 => C64::new(1.0, 0.0),
                    1 => s_mat[[rows[0], cols[0]]],
                    k => {
                        let minor = Array2::from_shape_fn((k, k), |(r, c)| {
                            s_mat[[rows[r], cols[c]]]
                        });
                        linalg::det_c(minor.view())
                    }
                };
            }
        }
    }
    Ok(out)
}

/// Differential second quantization `dΓ(A) = Σ_{ij} A_{ij} a†_i a_j`.
///
/// Hermitian input gives a Hermitian result and `e^{it dΓ(A)} = Γ(e^{itA})`;
/// non-Hermitian input is accepted so that commutators close.
pub fn second_quantize_dgamma(
    orc: &FockOracle,
    a_mat: ArrayView2<'_, C64>,
) -> Result<Array2<C64>, FockError> {
    orc.check_square(a_mat, "one-particle matrix must be n×n")?;
    let n = orc.n;
    let dim = orc.dim();
    let mut out = Array2::zeros((dim, dim));
    for state in 0..dim {
        for j in 0..n {
            if state & (1 << j) == 0 {
                continue;
            }
            let sign_j = jw_sign(state, j);
            let without = state & !(1 << j);
            for i in 0..n {
                if i == j {
                    out[[state, state]] += a_mat[[j, j]];
                } else if without & (1 << i) == 0 {
                    let sign_i = jw_sign(without, i);
                    out[[without | (1 << i), state]] += a_mat[[i, j]] * (sign_i * sign_j);
                }
            }
        }
    }
    Ok(out)
}

/// Quasi-free expectation `ω(a*(g_m)···a*(g_1) a(f_1)···a(f_n))` in the
/// gauge-invariant state generated by `t_gen`.
///
/// Evaluates both the Wick determinant `δ_{nm} det[(f_j, T g_k)]` and the
/// literal trace against the normalized density matrix `Γ(T(I−T)^{-1})`, and
/// returns the determinant only after the two agree to 1e-10.
pub fn quasi_free_expectation(
    orc: &FockOracle,
    t_gen: ArrayView2<'_, C64>,
    gs: &[Array1<C64>],
    fs: &[Array1<C64>],
) -> Result<C64, FockError> {
    orc.check_square(t_gen, "generator must be n×n")?;
    if linalg::hermiticity_residual(t_gen) > 1e-12 {
        return Err(FockError::NotHermitian("quasi-free generator"));
    }
    for v in gs.iter().chain(fs.iter()) {
        if v.len() != orc.n {
            return Err(FockError::WrongShape(
                "smeared-mode vector must have one entry per mode",
            ));
        }
    }
    let (tau, _) = linalg::eigh_c(t_gen);
    for &t in tau.iter() {
        if t < SINGULAR_TOL || t > 1.0 - SINGULAR_TOL {
            return Err(FockError::SingularGenerator {
                value: t,
                tol: SINGULAR_TOL,
            });
        }
    }

    let det = if gs.len() != fs.len() {
        C64::new(0.0, 0.0)
    } else if gs.is_empty() {
        C64::new(1.0, 0.0)
    } else {
        let k = gs.len();
        let mut wick = Array2::zeros((k, k));
        for (col, g) in gs.iter().enumerate() {
            let tg = t_gen.dot(g);
            for (row, f) in fs.iter().enumerate() {
                wick[[row, col]] = f.iter().zip(tg.iter()).map(|(a, b)| a.conj() * b).sum();
            }
        }
        linalg::det_c(wick.view())
    };

    let eye = Array2::<C64>::eye(orc.n);
    let k_gen = linalg::solve_c((&eye - &t_gen).view(), t_gen);
    let unnormalized = second_quantize_gamma(orc, k_gen.view())?;
    let z: C64 = unnormalized.diag().sum();

    let mut product = Array2::<C64>::eye(orc.dim());
    for f in fs.iter().rev() {
        product = orc.annihilate(f.view())?.dot(&product);
    }
    for g in gs.iter() {
        product = orc.create(g.view())?.dot(&product);
    }
    let trace = unnormalized.dot(&product).diag().sum() / z;

    let gap = (det - trace).norm();
    if gap > WICK_TOL {
        return Err(FockError::OracleMismatch {
            what: "quasi-free expectation",
            gap,
            tol: WICK_TOL,
        });
    }
    Ok(det)
}

/// Exact two-time measurement statistics of the lead charges on a truncated
/// system, evaluated by brute force on the Fock space.
///
/// The joint charge family and the initial two-point function commute, so a
/// single one-particle basis (sample modes diagonalizing `T_S`, per-lead sine
/// modes) makes the initial density matrix and every spectral projection
/// diagonal. One Fock-space eigendecomposition of the second-quantized
/// Hamiltonian then gives the measurement distribution at any time.
#[derive(Debug)]
pub struct TwoTimeOracle {
    system: FiniteSystem,
    evals: Array1<f64>,
    evecs: Array2<C64>,
    /// Diagonal of the initial density matrix in the joint Fock basis.
    rho: Vec<f64>,
    /// Lead owning each joint mode (`None` for sample modes).
    mode_lead: Vec<Option<usize>>,
    /// Energy of each joint mode (0 for sample modes, which carry no charge).
    mode_energy: Vec<f64>,
}

impl TwoTimeOracle {
    pub fn new(fin: &FiniteSystem) -> Result<Self, FockError> {
        let n = fin.dim();
        if n > MAX_TWO_TIME_MODES {
            return Err(FockError::TooLarge {
                n,
                max: MAX_TWO_TIME_MODES,
            });
        }
        let n_s = fin.n_sample();
        let m = fin.n_leads();
        let r = fin.lead_sites();

        let (tau_s, v_s) = linalg::eigh_c(fin.two_point().slice(s![..n_s, ..n_s]));
        let mut basis = Array2::<C64>::zeros((n, n));
        basis.slice_mut(s![..n_s, ..n_s]).assign(&v_s);
        let sine = fin.sine();
        for k in 0..m {
            let off = fin.lead_offset(k);
            for x in 0..r {
                for mode in 0..r {
                    basis[[off + x, off + mode]] = C64::new(sine[[x, mode]], 0.0);
                }
            }
        }
        let h_modes = linalg::adjoint(basis.view())
            .dot(fin.hamiltonian())
            .dot(&basis);

        let mut tau: Vec<f64> = tau_s.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let mut mode_lead: Vec<Option<usize>> = vec![None; n_s];
        let mut mode_energy: Vec<f64> = vec![0.0; n_s];
        for k in 0..m {
            for mode in 0..r {
                tau.push(fin.occupations()[[k, mode]]);
                mode_lead.push(Some(k));
                mode_energy.push(fin.mode_energies()[mode]);
            }
        }

        let orc = FockOracle::new(n)?;
        let number_rep = second_quantize_dgamma(&orc, h_modes.view())?;
        let (evals, evecs) = linalg::eigh_c(number_rep.view());

        let dim = 1usize << n;
        let mut rho = vec![0.0; dim];
        for (state, slot) in rho.iter_mut().enumerate() {
            let mut p = 1.0;
            for (i, &occ) in tau.iter().enumerate() {
                p *= if state & (1 << i) != 0 { occ } else { 1.0 - occ };
            }
            *slot = p;
        }

        Ok(Self {
            system: fin.clone(),
            evals,
            evecs,
            rho,
            mode_lead,
            mode_energy,
        })
    }

    pub fn system(&self) -> &FiniteSystem {
        &self.system
    }

    /// `log Σ_{q,q'} ω(P_q τ^t(P_{q'})) e^{α·(q−q')}` from the raw double sum
    /// over joint charge sectors.
    pub fn log_chi(&self, cf: &CountingField, t: f64) -> Result<f64, FockError> {
        if cf.len() != self.system.n_leads() {
            return Err(FockError::WrongShape(
                "counting field must have one component per lead",
            ));
        }
        let n = self.system.dim();
        let weights: Vec<f64> = (0..n)
            .map(|i| match self.mode_lead[i] {
                Some(k) => cf.alpha[k] * self.mode_energy[i] + cf.nu[k],
                None => 0.0,
            })
            .collect();
        let dim = 1usize << n;
        let mut charge = vec![0.0; dim];
        for state in 1..dim {
            let low = state.trailing_zeros() as usize;
            charge[state] = charge[state & (state - 1)] + weights[low];
        }

        let mut scaled = self.evecs.clone();
        for (col, &lam) in self.evals.iter().enumerate() {
            let phase = C64::new(0.0, lam * t).exp();
            scaled.column_mut(col).mapv_inplace(|z| z * phase);
        }
        let propagator = scaled.dot(&linalg::adjoint(self.evecs.view()));

        let decrease: Vec<f64> = charge.iter().map(|&q| (-q).exp()).collect();
        let mut chi = 0.0;
        for row in 0..dim {
            if self.rho[row] == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for (col, dec) in decrease.iter().enumerate() {
                inner += propagator[[row, col]].norm_sqr() * dec;
            }
            chi += self.rho[row] * charge[row].exp() * inner;
        }
        Ok(chi.ln())
    }
}

/// Two-time measurement cumulant log χ_t(α, ν), cross-checked against the
/// determinant formula of [`timeevo::finite_fcs`] on the same system to 1e-9.
pub fn two_time_fcs(orc: &TwoTimeOracle, cf: &CountingField, t: f64) -> Result<f64, FockError> {
    let measured = orc.log_chi(cf, t)?;
    let determinant = timeevo::finite_fcs(orc.system(), cf, t)?;
    let gap = (measured - determinant).abs();
    if gap > TWO_TIME_TOL {
        return Err(FockError::OracleMismatch {
            what: "two-time counting statistics",
            gap,
            tol: TWO_TIME_TOL,
        });
    }
    Ok(measured)
}
