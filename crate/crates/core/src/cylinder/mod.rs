//! The Sobolev problem on the cylinder `Σ_T = (R/TZ) × S^{d-1}`: ODE orbits,
//! the period map, `S_d(T)`, Hill spectra of the Hessian and the quartic
//! constants at the bifurcation point `T_* = 2π/√(d-2)`.
//!
//! Functions of `t` alone are [`PeriodicProfile`]s. All integrals over `Σ_T`
//! carry the factor `|S^{d-1}|`; the orbit normalization is
//! `E_T[u]/‖u‖_q^q = d(d-2)/4`.

mod constant;
mod hill;
mod orbit;
mod profile;
mod quartic;

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::specialfn::sphere_area;

pub use constant::{
    cosh_trial_bound, nondegenerate_quotient, optimizer_profile, sobolev_constant_branch, sobolev_constant_cylinder,
    spectral_descent, Branch, CylinderConstant, DescentResult, CROSS_CHECK_TOL,
};
pub use hill::{c_t, c_t_closed_form, c_t_numeric, hessian_block_spectrum, l1_factorization_residual, HillOperator};
pub use orbit::{
    first_integral, inverse_period, period, period_by_integration, solve_orbit, solve_orbit_with, turning_point, Orbit,
    ORBIT_SAMPLES,
};
pub use profile::PeriodicProfile;
pub use quartic::{
    critical_mode, degenerate_quotient, degenerate_quotient_curve, degenerate_quotient_curve_with, quartic_constants,
    quartic_limit, split_stability_check, DegenerateCurve, QuarticConstants, SplitRow, SplitStability, QUARTIC_TOL,
};

/// Fourier modes in Hill discretizations.
pub const DEFAULT_MODES: usize = 128;
/// Uniform `t`-grid size used with [`DEFAULT_MODES`].
pub const DEFAULT_GRID: usize = 1024;
/// Eigenvalues below `KERNEL_RATIO · spectral_scale` count as kernel.
pub const KERNEL_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderParams {
    pub d: usize,
    /// The period `T`.
    pub period: f64,
    pub q: f64,
    pub t_star: f64,
}

impl CylinderParams {
    pub fn new(d: usize, period: f64) -> Result<Self> {
        if d < 3 {
            return Err(domain(format!("cylinder requires d >= 3, got {d}")));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(domain(format!("period must be positive and finite, got {period}")));
        }
        Ok(Self { d, period, q: critical_exponent(d), t_star: t_star(d) })
    }

    pub fn with_period(&self, period: f64) -> Result<Self> {
        Self::new(self.d, period)
    }

    /// `(d-2)²/4`.
    pub fn mass(&self) -> f64 {
        mass(self.d)
    }

    /// `d(d-2)/4`.
    pub fn nonlinearity(&self) -> f64 {
        let d = self.d as f64;
        d * (d - 2.0) / 4.0
    }

    /// `|S^{d-1}|`.
    pub fn cross_section(&self) -> f64 {
        sphere_area(self.d - 1)
    }

    /// `|Σ_T| = T |S^{d-1}|`.
    pub fn volume(&self) -> f64 {
        self.period * self.cross_section()
    }

    /// `2π/T`.
    pub fn frequency(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn is_critical(&self) -> bool {
        (self.period - self.t_star).abs() <= 1e-12 * self.t_star
    }
}

/// `2d/(d-2)`.
pub fn critical_exponent(d: usize) -> f64 {
    2.0 * d as f64 / (d as f64 - 2.0)
}

/// `2π/√(d-2)`.
pub fn t_star(d: usize) -> f64 {
    2.0 * PI / (d as f64 - 2.0).sqrt()
}

fn mass(d: usize) -> f64 {
    let a = (d as f64 - 2.0) / 2.0;
    a * a
}

/// The constant solution `((d-2)/d)^{(d-2)/4}`.
pub fn u0(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(domain(format!("u0 requires d >= 3, got {d}")));
    }
    let d = d as f64;
    Ok(((d - 2.0) / d).powf((d - 2.0) / 4.0))
}

/// `-u'' + (d-2)²/4 u - d(d-2)/4 u^{q-1}` for a constant `u`.
pub fn constant_residual(d: usize, u: f64) -> f64 {
    let q = critical_exponent(d);
    let df = d as f64;
    mass(d) * u - df * (df - 2.0) / 4.0 * u.powf(q - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_and_u0() {
        assert!(CylinderParams::new(2, 1.0).is_err());
        assert!(CylinderParams::new(3, 0.0).is_err());
        let p = CylinderParams::new(3, 1.0).unwrap();
        assert_eq!(p.q, 6.0);
        assert!((p.t_star - 2.0 * PI).abs() < 1e-14);
        assert!((u0(3).unwrap() - 3f64.powf(-0.25)).abs() < 1e-15);
        assert!((u0(4).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        for d in 3..12 {
            assert!(constant_residual(d, u0(d).unwrap()).abs() < 1e-14);
            assert!((critical_exponent(d) * (d as f64 - 2.0) - 2.0 * d as f64).abs() < 1e-13);
        }
    }
}
