//! Closed-form spectral data of the semi-infinite lead.
//!
//! Each lead is a half-line tight-binding chain with hopping 1/2 and Dirichlet
//! boundary (conduction band `[-1, 1]`, dispersion `cos k`). Everything
//! downstream needs only three scalar functions of it:
//!
//! - the spectral weight `w(ε) = (2/π)√(1-ε²)` of the contact site,
//! - the surface Green's function `g(z) = (δ₀, (H_lead - z)⁻¹ δ₀)`, a
//!   Herglotz function with the band as its branch cut,
//! - the Fermi-Dirac occupation of a reservoir.
//!
//! `g` is evaluated in closed form everywhere, including its `ε + i0`
//! boundary values on the band, so no finite-broadening parameter appears
//! anywhere in the crate.

use thiserror::Error;

use crate::C64;

#[derive(Debug, Error)]
pub enum LeadError {
    #[error("energy {0} lies outside the conduction band [-1, 1]")]
    OutOfBand(f64),
    #[error(
        "real z = {0} inside the band: request the boundary value via surface_green_band instead"
    )]
    BranchError(f64),
}

/// Spectral weight of the lead contact site, `(2/π)√(1-ε²)`.
pub fn spectral_weight(eps: f64) -> Result<f64, LeadError> {
    if !(eps.is_finite() && eps.abs() <= 1.0) {
        return Err(LeadError::OutOfBand(eps));
    }
    Ok(std::f64::consts::FRAC_2_PI * (1.0 - eps * eps).sqrt())
}

/// Surface Green's function off the band:sectionally analytic on
/// `ℂ ∖ [-1, 1]`, `g(z) = 2(√(z-1)√(z+1) - z)` with principal branches.
///
/// Real `z` strictly inside `[-1, 1]` is rejected; boundary values on the
/// band are served by [`surface_green_band`].
pub fn surface_green(z: C64) -> Result<C64, LeadError> {
    if z.im == 0.0 {
        let e = z.re;
        if e.abs() <= 1.0 {
            return Err(LeadError::BranchError(e));
        }
        return Ok(C64::new(surface_green_outside(e), 0.0));
    }
    let root = (z - 1.0).sqrt() * (z + 1.0).sqrt();
    Ok(2.0 * (root - z))
}

/// Real branch of `g` outside the band, in the cancellation-free form
/// `g(E) = -sgn(E)·2/(|E| + √(E²-1))`.
pub fn surface_green_outside(e: f64) -> f64 {
    debug_assert!(e.abs() >= 1.0);
    let a = e.abs();
    -e.signum() * 2.0 / (a + (a * a - 1.0).sqrt())
}

/// Boundary value `g(ε + i0) = -2ε + 2i√(1-ε²)` on the closed band.
pub fn surface_green_band(eps: f64) -> Result<C64, LeadError> {
    if !(eps.is_finite() && eps.abs() <= 1.0) {
        return Err(LeadError::OutOfBand(eps));
    }
    Ok(C64::new(-2.0 * eps, 2.0 * (1.0 - eps * eps).sqrt()))
}

/// Fermi-Dirac occupation `1/(1 + e^{β(ε-μ)})`.
///
/// `β = +∞` is the exact zero-temperature branch: a unit step down at `μ`
/// with value 1/2 on the step itself.
pub fn fermi(beta: f64, mu: f64, eps: f64) -> f64 {
    if beta.is_infinite() {
        return match eps.partial_cmp(&mu) {
            Some(std::cmp::Ordering::Less) => 1.0,
            Some(std::cmp::Ordering::Greater) => 0.0,
            _ => 0.5,
        };
    }
    let x = beta * (eps - mu);
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_band;

    /// Solves `(H^(R) - z) u = δ₀` on a truncated lead by the Thomas
    /// algorithm and returns `u₀`: the finite-lattice surface resolvent.
    fn truncated_surface_resolvent(z: C64, r: usize) -> C64 {
        let half = C64::new(0.5, 0.0);
        // Forward elimination for the tridiagonal (−z on diagonal, 1/2 off).
        let mut diag = vec![C64::new(0.0, 0.0); r];
        diag[r - 1] = -z;
        for i in (0..r - 1).rev() {
            diag[i] = -z - half * half / diag[i + 1];
        }
        // Only the first entry of the RHS is nonzero, so u₀ = 1/diag[0] after
        // eliminating from the far end toward the contact.
        1.0 / diag[0]
    }

    #[test]
    fn weight_band_edges_and_center() {
        assert_eq!(spectral_weight(1.0).unwrap(), 0.0);
        assert_eq!(spectral_weight(-1.0).unwrap(), 0.0);
        assert!((spectral_weight(0.0).unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!(matches!(spectral_weight(1.2), Err(LeadError::OutOfBand(_))));
    }

    #[test]
    fn weight_is_normalized() {
        let r = integrate_band(|x| spectral_weight(x).unwrap(), 1e-12, &[]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herglotz_reflection_symmetry() {
        let z = C64::new(0.3, 0.1);
        let g = surface_green(z).unwrap();
        let gbar = surface_green(z.conj()).unwrap();
        assert!((gbar - g.conj()).norm() < 1e-15);
    }

    #[test]
    fn herglotz_upper_half_plane() {
        // deterministic pseudo-grid over the upper half plane
        let mut x = 0.137f64;
        for _ in 0..200 {
            x = (x * 997.13).fract();
            let re = 6.0 * x - 3.0;
            let im = 2.0 * (x * 17.0).fract() + 1e-6;
            let g = surface_green(C64::new(re, im)).unwrap();
            assert!(g.im > 0.0, "Im g({re}, {im}) = {} not positive", g.im);
        }
    }

    #[test]
    fn resolvent_decay_at_large_argument() {
        for &z in &[
            C64::new(10.0, 0.0),
            C64::new(-25.0, 0.0),
            C64::new(7.0, 8.0),
            C64::new(-30.0, 4.0),
            C64::new(0.0, 12.0),
        ] {
            let g = surface_green(z).unwrap();
            assert!((z * g + 1.0).norm() <= 2.0 / z.norm_sqr());
        }
    }

    #[test]
    fn sokhotski_consistency_on_the_band() {
        for i in 0..999 {
            let eps = -0.999 + 1.998 * (i as f64) / 998.0;
            let g = surface_green_band(eps).unwrap();
            let w = spectral_weight(eps).unwrap();
            assert!((g.im - std::f64::consts::PI * w).abs() < 1e-14);
        }
    }

    #[test]
    fn band_edge_continuity() {
        let inside = surface_green_band(1.0).unwrap();
        let outside = surface_green(C64::new(1.0 + 1e-12, 0.0)).unwrap();
        assert!((inside.re - -2.0).abs() < 1e-12);
        assert!(inside.im == 0.0);
        assert!((inside - outside).norm() < 1e-5); // √ behaviour near the edge
        let g2 = surface_green(C64::new(2.0, 0.0)).unwrap();
        assert!((g2.re - 2.0 * (3f64.sqrt() - 2.0)).abs() < 1e-15);
        // odd symmetry of the outside branch
        let gm2 = surface_green(C64::new(-2.0, 0.0)).unwrap();
        assert!((gm2 + g2).norm() < 1e-15);
    }

    #[test]
    fn real_branch_inside_band_is_rejected() {
        assert!(matches!(
            surface_green(C64::new(0.5, 0.0)),
            Err(LeadError::BranchError(_))
        ));
    }

    #[test]
    fn outside_branch_matches_truncated_lattice_resolvent() {
        let oracle = truncated_surface_resolvent(C64::new(2.0, 0.0), 2000);
        let g = surface_green(C64::new(2.0, 0.0)).unwrap();
        assert!((g - oracle).norm() < 1e-10);
    }

    #[test]
    fn band_boundary_value_matches_vanishing_broadening_extrapolation() {
        // Im g(iη) of the truncated lattice, Richardson-extrapolated to η→0,
        // must recover Im g(0 + i0) = 2 = π w(0).
        let i1 = truncated_surface_resolvent(C64::new(0.0, 0.04), 2000).im;
        let i2 = truncated_surface_resolvent(C64::new(0.0, 0.02), 2000).im;
        let extrapolated = 2.0 * i2 - i1;
        assert!((extrapolated - 2.0).abs() < 1e-3);
        assert!((surface_green_band(0.0).unwrap() - C64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn fermi_values_and_zero_temperature_step() {
        assert!((fermi(1.0, 0.0, 0.0) - 0.5).abs() < 1e-15);
        assert_eq!(fermi(f64::INFINITY, 0.3, 0.2), 1.0);
        assert_eq!(fermi(f64::INFINITY, 0.3, 0.4), 0.0);
        assert_eq!(fermi(f64::INFINITY, 0.3, 0.3), 0.5);
        assert!((fermi(2.0, 0.5, -0.5) - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn fermi_monotone_and_particle_hole_symmetric() {
        let beta = 3.7;
        let mu = 0.2;
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let eps = -2.0 + 4.0 * (i as f64) / 199.0;
            let f = fermi(beta, mu, eps);
            assert!(f <= prev + 1e-15);
            prev = f;
            let mirrored = fermi(beta, mu, 2.0 * mu - eps);
            assert!((f + mirrored - 1.0).abs() < 1e-12);
        }
    }
}
