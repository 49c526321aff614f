//! Adaptive quadrature over the conduction band and small 1-D optimization
//! helpers shared by the transport and counting-statistics layers.
//!
//! The integrator is an adaptive Gauss-Kronrod 7-15 scheme with bisection of
//! the worst panel, seeded breakpoints for integrands with known kinks or
//! jumps (zero-temperature Fermi steps at the chemical potentials), and the
//! QUADPACK error-rescaling heuristic for the per-panel estimates. Panel
//! endpoints are never evaluated, so integrable behaviour at the band edges
//! needs no special casing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error(
        "quadrature budget of {budget} panels exhausted: error estimate {error_estimate:.3e} exceeds tolerance {abs_tol:.3e}"
    )]
    QuadratureFailure {
        budget: usize,
        error_estimate: f64,
        abs_tol: f64,
    },
    #[error("no interior maximum found within the bracket expansion budget")]
    BracketFailure,
    #[error("grid nodes must be strictly increasing and strictly inside (-1, 1)")]
    BadGrid,
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("integrand returned a non-finite value near x = {0}")]
    NonFiniteIntegrand(f64),
}

/// Energy nodes strictly inside the band, with optional weights and seeded
/// split points for the adaptive integrator.
#[derive(Debug, Clone)]
pub struct EnergyGrid {
    nodes: Vec<f64>,
    weights: Option<Vec<f64>>,
    breakpoints: Vec<f64>,
}

impl EnergyGrid {
    pub fn from_nodes(nodes: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self, NumericsError> {
        if nodes.is_empty() || nodes.iter().any(|x| x.abs() >= 1.0 || !x.is_finite()) {
            return Err(NumericsError::BadGrid);
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NumericsError::BadGrid);
        }
        if let Some(w) = &weights {
            if w.len() != nodes.len() {
                return Err(NumericsError::BadGrid);
            }
        }
        Ok(Self {
            nodes,
            weights,
            breakpoints: Vec::new(),
        })
    }

    /// `n` equally spaced nodes on `[emin, emax]`, endpoints included.
    pub fn uniform(emin: f64, emax: f64, n: usize) -> Result<Self, NumericsError> {
        if n < 2 || !(-1.0 < emin && emin < emax && emax < 1.0) {
            return Err(NumericsError::BadGrid);
        }
        let step = (emax - emin) / (n - 1) as f64;
        Self::from_nodes((0..n).map(|i| emin + step * i as f64).collect(), None)
    }

    pub fn with_breakpoints(mut self, mut pts: Vec<f64>) -> Self {
        pts.retain(|x| x.is_finite());
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        self.breakpoints = pts;
        self
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels_used: usize,
}

/// Hard cap on the number of panels in one adaptive integration.
pub const PANEL_BUDGET: usize = 10_000;

// 15-point Kronrod abscissae on [-1, 1] (positive half) and the embedded
// 7-point Gauss weights, QUADPACK dqk15 values.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// QUADPACK heuristic turning the raw |K - G| difference into a safer
/// per-panel error estimate.
fn rescale_error(err: f64, result_abs: f64, result_asc: f64) -> f64 {
    let mut err = err.abs();
    if result_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / result_asc).powf(1.5);
        err = if scale < 1.0 { result_asc * scale } else { result_asc };
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * result_abs;
        if min_err > err {
            err = min_err;
        }
    }
    err
}

/// One Gauss-Kronrod 7-15 evaluation on `[a, b]`.
/// Returns (kronrod value, rescaled error estimate).
fn qk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64), NumericsError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for (i, &x) in XGK.iter().enumerate().take(7) {
        fv[i] = f(center - half * x);
        fv[14 - i] = f(center + half * x);
    }
    if fv.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFiniteIntegrand(center));
    }

    let mut res_kronrod = WGK[7] * fc;
    let mut res_abs = res_kronrod.abs();
    for i in 0..7 {
        res_kronrod += WGK[i] * (fv[i] + fv[14 - i]);
        res_abs += WGK[i] * (fv[i].abs() + fv[14 - i].abs());
    }
    let mut res_gauss = WG[3] * fc;
    for i in 0..3 {
        res_gauss += WG[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for i in 0..7 {
        res_asc += WGK[i] * ((fv[i] - mean).abs() + (fv[14 - i] - mean).abs());
    }

    let raw_err = ((res_kronrod - res_gauss) * half).abs();
    let err = rescale_error(raw_err, res_abs * half.abs(), res_asc * half.abs());
    Ok((res_kronrod * half, err))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive integration of `f` over `[a, b]` to absolute tolerance `abs_tol`.
/// Interior `breakpoints` seed the initial partition so that discontinuities
/// land on panel boundaries (which are never evaluated).
pub fn integrate_interval(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    breakpoints: &[f64],
) -> Result<QuadratureResult, NumericsError> {
    if !(abs_tol > 0.0 && abs_tol.is_finite()) {
        return Err(NumericsError::BadTolerance(abs_tol));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            panels_used: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut edges: Vec<f64> = vec![lo];
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    edges.extend(pts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = qk15(&mut f, w[0], w[1])?;
        total_err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            err: e,
        });
    }

    while total_err > abs_tol && heap.len() < PANEL_BUDGET {
        let worst = heap.pop().expect("heap is nonempty while error is positive");
        // Give up on panels thinner than a few ulps instead of looping.
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = qk15(&mut f, worst.a, mid)?;
        let (v2, e2) = qk15(&mut f, mid, worst.b)?;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
    }

    // Recompute the totals from the final partition; the incremental updates
    // above accumulate cancellation noise over many splits.
    let panels = heap.into_vec();
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let err: f64 = panels.iter().map(|p| p.err).sum();
    if err > abs_tol {
        return Err(NumericsError::QuadratureFailure {
            budget: PANEL_BUDGET,
            error_estimate: err,
            abs_tol,
        });
    }
    Ok(QuadratureResult {
        value: sign * value,
        error_estimate: err,
        panels_used: panels.len(),
    })
}

/// Adaptive integration over the open band `(-1, 1)`.
pub fn integrate_band(
    f: impl FnMut(f64) -> f64,
    abs_tol: f64,
    breakpoints: &[f64],
) -> Result<QuadratureResult, NumericsError> {
    integrate_interval(f, -1.0, 1.0, abs_tol, breakpoints)
}

/// Bracket expansion policy for [`maximize_concave_1d`].
#[derive(Debug, Clone, Copy)]
pub struct BracketPolicy {
    /// Initial guess for the maximizer.
    pub x0: f64,
    /// Initial half-width of the search interval.
    pub step: f64,
    /// Geometric expansion budget; ~2^max_expand times the initial step.
    pub max_expand: u32,
}

impl Default for BracketPolicy {
    fn default() -> Self {
        Self {
            x0: 0.0,
            step: 1.0,
            max_expand: 60,
        }
    }
}

/// Golden-section maximizer for a concave function of one variable.
/// Returns `(argmax, max)` with the argmax located to about 1e-8.
pub fn maximize_concave_1d(
    mut h: impl FnMut(f64) -> f64,
    policy: BracketPolicy,
) -> Result<(f64, f64), NumericsError> {
    let mut a = policy.x0 - policy.step;
    let mut b = policy.x0 + policy.step;
    let mut fa = h(a);
    let mut fb = h(b);
    let mut m = policy.x0;
    let mut fm = h(m);

    // Expand until the midpoint dominates both endpoints.
    let mut expansions = 0;
    while fm < fa || fm < fb {
        if expansions >= policy.max_expand {
            return Err(NumericsError::BracketFailure);
        }
        if fa > fb {
            // Maximum lies to the left; slide the window.
            let width = b - a;
            b = m;
            fb = fm;
            m = a;
            fm = fa;
            a -= 2.0 * width;
            fa = h(a);
        } else {
            let width = b - a;
            a = m;
            fa = fm;
            m = b;
            fm = fb;
            b += 2.0 * width;
            fb = h(b);
        }
        expansions += 1;
    }
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(NumericsError::BracketFailure);
    }

    // Golden-section refinement on [a, b].
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = h(x1);
    let mut f2 = h(x2);
    let tol = 1e-8;
    while (b - a) > tol * (1.0 + m.abs()) {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = h(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = h(x2);
        }
        m = 0.5 * (a + b);
    }
    let xstar = 0.5 * (a + b);
    Ok((xstar, h(xstar)))
}
