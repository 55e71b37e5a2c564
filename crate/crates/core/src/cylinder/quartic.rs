//! Degenerate stability at `T = T_*`: the quartic constants, the trial
//! curve `u_* + εr_* + ε²s`, and the split deficit check.

use std::f64::consts::PI;

use nalgebra::{DVector, SymmetricEigen};

use super::hill::HillOperator;
use super::{u0, CylinderParams, PeriodicProfile, DEFAULT_MODES};
use crate::error::{computation, inconsistency, precondition, Result};
use crate::stability::richardson3;

/// Relative tolerance between numeric and closed-form quartic constants.
pub const QUARTIC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct QuarticConstants {
    pub d: usize,
    pub q: f64,
    /// `C_*` by grid quadrature of `r_* = cos(2πt/T_*)`.
    pub c_star: f64,
    pub c_star_closed: f64,
    /// Numeric `(L^⊥)^{-1}P^⊥f_*`.
    pub resolvent_profile: PeriodicProfile,
    /// Its `cos(4πt/T_*)` coefficient.
    pub resolvent_coefficient: f64,
    pub resolvent_coefficient_closed: f64,
    /// Relative size of everything in the resolvent but the `cos(4πt/T_*)` mode.
    pub resolvent_impurity: f64,
    pub inner_product: f64,
    pub inner_product_closed: f64,
    /// `C_* - ⟨P^⊥f_*, (L^⊥)^{-1}P^⊥f_*⟩`.
    pub gap: f64,
    pub gap_closed: f64,
    /// `E[u_*](C_* - ⟨…⟩)/E[r_*]²` from the numeric pieces.
    pub limit_numeric: f64,
    /// `(q+2)(q-2)/(12(q-1))`.
    pub limit_constant: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `(q+2)(q-2)/(12(q-1))`.
pub fn quartic_limit(d: usize) -> f64 {
    let q = super::critical_exponent(d);
    (q + 2.0) * (q - 2.0) / (12.0 * (q - 1.0))
}

fn critical_params(d: usize) -> Result<CylinderParams> {
    CylinderParams::new(d, super::t_star(d))
}

pub fn quartic_constants(d: usize, modes: usize) -> Result<QuarticConstants> {
    let p = critical_params(d)?;
    let q = p.q;
    let u0 = u0(d)?;
    let c0 = p.mass();
    let vol = p.volume();
    let op = HillOperator::new(p, modes)?;
    let grid = op.grid;
    let r_star = PeriodicProfile::mode(p, 1, false, modes, grid)?;
    let amp = (d as f64 - 2.0).powi(2) / 8.0 * (q - 1.0) * (q - 2.0) / u0;
    let f_samples: Vec<f64> = r_star.samples.iter().map(|r| amp * r * r).collect();
    let f = op.coefficients(&f_samples);

    let eig = SymmetricEigen::try_new(op.block(0, true), f64::EPSILON, 10_000)
        .ok_or_else(|| computation("Hill eigensolver failed at T_*"))?;
    let tol = op.kernel_tol();
    let kernel = eig.eigenvalues.iter().filter(|v| v.abs() < tol).count();
    if kernel != 3 {
        return Err(inconsistency(format!("expected a 3-dimensional kernel at T_*, found {kernel}")));
    }
    let mut f_perp = DVector::zeros(op.dim());
    let mut x = DVector::zeros(op.dim());
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() >= tol {
            let v = eig.eigenvectors.column(i);
            let c = v.dot(&f);
            f_perp += v * c;
            x += v * (c / lam);
        }
    }
    let t = p.period;
    let (n0, n1) = ((1.0 / t).sqrt(), (2.0 / t).sqrt());
    let mut cos = vec![0.0; modes + 1];
    let mut sin = vec![0.0; modes + 1];
    cos[0] = x[0] * n0;
    for k in 1..=modes {
        cos[k] = x[2 * k - 1] * n1;
        sin[k] = x[2 * k] * n1;
    }
    let resolvent_coefficient = cos.get(2).copied().unwrap_or(0.0);
    let mut rest = x.clone();
    if rest.len() > 3 {
        rest[3] = 0.0;
    }
    let resolvent_impurity = rest.norm() / x.norm();
    let resolvent_profile = PeriodicProfile::from_coeffs(p, cos, sin, grid)?;
    let inner_product = p.cross_section() * f_perp.dot(&x);

    let m2 = r_star.samples.iter().map(|r| r * r).sum::<f64>() / grid as f64;
    let m4 = r_star.samples.iter().map(|r| r.powi(4)).sum::<f64>() / grid as f64;
    let c_star = c0 * (q - 1.0) * (q - 2.0) / 4.0 / (u0 * u0) * vol * (-(q - 3.0) / 3.0 * m4 + (q - 1.0) * m2 * m2);
    let gap = c_star - inner_product;
    let e_u = PeriodicProfile::constant(p, u0, modes, grid)?.energy();
    let e_r = r_star.energy();
    let limit_numeric = e_u * gap / (e_r * e_r);

    let c_star_closed = c0 * (q - 1.0) * (q - 2.0) * (q + 1.0) / 32.0 * vol / (u0 * u0);
    let resolvent_coefficient_closed = (d as f64 - 2.0) / 48.0 * (q - 1.0) * (q - 2.0) / u0;
    let inner_product_closed = c0 * (q - 1.0).powi(2) * (q - 2.0) / 96.0 * vol / (u0 * u0);
    let gap_closed = c0 * vol / (u0 * u0) * (q - 1.0) * (q - 2.0) * (q + 2.0) / 48.0;
    let limit_constant = quartic_limit(d);

    for (name, a, b) in [
        ("C_*", c_star, c_star_closed),
        ("resolvent coefficient", resolvent_coefficient, resolvent_coefficient_closed),
        ("inner product", inner_product, inner_product_closed),
        ("gap", gap, gap_closed),
        ("limit", limit_numeric, limit_constant),
    ] {
        if rel(a, b) > QUARTIC_TOL {
            return Err(inconsistency(format!("quartic {name} at d={d}: numeric {a} vs closed form {b}")));
        }
    }
    Ok(QuarticConstants {
        d,
        q,
        c_star,
        c_star_closed,
        resolvent_profile,
        resolvent_coefficient,
        resolvent_coefficient_closed,
        resolvent_impurity,
        inner_product,
        inner_product_closed,
        gap,
        gap_closed,
        limit_numeric,
        limit_constant,
    })
}

fn check_s_orthogonality(r_star: &PeriodicProfile, s: &PeriodicProfile) -> Result<()> {
    let norm = s.l2_norm_sq().sqrt();
    if norm == 0.0 {
        return Ok(());
    }
    let dr = r_star.derivative();
    let checks = [
        ("∫s", s.cos[0] * s.params.volume().sqrt()),
        ("⟨r_*, s⟩", r_star.inner(s) / r_star.l2_norm_sq().sqrt()),
        ("⟨∂_t r_*, s⟩", dr.inner(s) / dr.l2_norm_sq().sqrt()),
    ];
    for (name, v) in checks {
        if v.abs() > 1e-10 * norm {
            return Err(precondition(format!("second-order correction violates orthogonality: {name} = {v:e}")));
        }
    }
    Ok(())
}

/// `E[u](E[u] - S_d(T_*)‖u‖_q²)/δ⁴` for `u = u_* + εr_* + ε²s`, with
/// `δ² = ε²E[r_*] + ε⁴E[s]`. `s = None` means `s = 0`.
pub fn degenerate_quotient(d: usize, eps: f64, s: Option<&PeriodicProfile>) -> Result<f64> {
    let p = critical_params(d)?;
    let (modes, grid) = s.map_or((DEFAULT_MODES, super::DEFAULT_GRID), |s| (s.modes(), s.grid()));
    let r_star = PeriodicProfile::mode(p, 1, false, modes, grid)?;
    let zero = PeriodicProfile::constant(p, 0.0, modes, grid)?;
    let s = s.unwrap_or(&zero);
    if s.params != p {
        return Err(precondition("second-order correction must live on Σ_{T_*}"));
    }
    check_s_orthogonality(&r_star, s)?;
    let sharp = p.mass() * p.volume().powf(1.0 - 2.0 / p.q);
    let u =
        PeriodicProfile::constant(p, u0(d)?, modes, grid)?.lincomb(1.0, &r_star, eps)?.lincomb(1.0, s, eps * eps)?;
    let delta_sq = eps * eps * r_star.energy() + eps.powi(4) * s.energy();
    if !(delta_sq > 0.0) {
        return Err(precondition("degenerate quotient needs eps != 0"));
    }
    let e = u.energy();
    Ok(e * u.deficit(sharp) / (delta_sq * delta_sq))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateCurve {
    pub rows: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub error_estimate: f64,
    /// Closed-form limit for the chosen `s`: `(q+2)(q-2)/(12(q-1))` for the
    /// resolvent, `C_*E[u_*]/E[r_*]²` for `s = 0`.
    pub predicted_limit: f64,
}

/// Curve with the numeric resolvent as `s`.
pub fn degenerate_quotient_curve(d: usize, eps_grid: &[f64], h: f64) -> Result<DegenerateCurve> {
    let qc = quartic_constants(d, DEFAULT_MODES)?;
    degenerate_quotient_curve_with(d, eps_grid, Some(&qc.resolvent_profile), h)
}

pub fn degenerate_quotient_curve_with(
    d: usize,
    eps_grid: &[f64],
    s: Option<&PeriodicProfile>,
    h: f64,
) -> Result<DegenerateCurve> {
    if !(h > 0.0) {
        return Err(precondition("Richardson step must be positive"));
    }
    let rows = eps_grid.iter().map(|&e| degenerate_quotient(d, e, s).map(|v| (e, v))).collect::<Result<Vec<_>>>()?;
    let f = [h, h / 2.0, h / 4.0, h / 8.0].iter().map(|&e| degenerate_quotient(d, e, s)).collect::<Result<Vec<_>>>()?;
    let extrapolated = richardson3(f[0], f[1], f[2]);
    let finer = richardson3(f[1], f[2], f[3]);
    let q = super::critical_exponent(d);
    let predicted_limit = match s {
        Some(_) => quartic_limit(d),
        None => (q - 2.0) * (q + 1.0) / (8.0 * (q - 1.0)),
    };
    Ok(DegenerateCurve { rows, extrapolated, error_estimate: (extrapolated - finer).abs(), predicted_limit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRow {
    pub eps: f64,
    pub deficit: f64,
    /// `E[πr]²/E[u]`.
    pub kernel_part: f64,
    /// `E[π^⊥r]`.
    pub complement_part: f64,
}

impl SplitRow {
    pub fn rhs(&self) -> f64 {
        self.kernel_part + self.complement_part
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitStability {
    pub rows: Vec<SplitRow>,
    /// Least-squares slope of `ln deficit` against `ln ε`.
    pub slope: f64,
    pub min_ratio: f64,
    /// `(c, deficit ≥ c·rhs on every row)` for each scanned `c`.
    pub holds: Vec<(f64, bool)>,
}

/// Evaluates both sides of the split bound on `u = u_* + εR` at `T_*`, with
/// `π` the projection onto `span{sin, cos}(2πt/T_*)` applied to `r = u - c u_*`
/// (`c u_*` the mean of `u`).
pub fn split_stability_check(d: usize, r: &PeriodicProfile, eps_grid: &[f64], scan: &[f64]) -> Result<SplitStability> {
    let p = critical_params(d)?;
    if r.params != p {
        return Err(precondition("perturbation must live on Σ_{T_*}"));
    }
    let sharp = p.mass() * p.volume().powf(1.0 - 2.0 / p.q);
    let ustar = PeriodicProfile::constant(p, u0(d)?, r.modes(), r.grid())?;
    let rows = eps_grid
        .iter()
        .map(|&eps| {
            let u = ustar.lincomb(1.0, r, eps)?;
            let mut rest = u.clone();
            rest.cos[0] = 0.0;
            let rest = PeriodicProfile::from_coeffs(p, rest.cos, rest.sin, r.grid())?;
            let par = rest.restrict_modes(&[1]);
            let perp = rest.lincomb(1.0, &par, -1.0)?;
            let e = u.energy();
            Ok(SplitRow {
                eps,
                deficit: u.deficit(sharp),
                kernel_part: if e > 0.0 { par.energy().powi(2) / e } else { 0.0 },
                complement_part: perp.energy(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.eps > 0.0 && r.deficit > 0.0).map(|r| (r.eps.ln(), r.deficit.ln())).collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|v| v.0).sum::<f64>() / n;
        let my = pts.iter().map(|v| v.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|v| (v.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    let min_ratio = rows.iter().filter(|r| r.rhs() > 0.0).map(|r| r.deficit / r.rhs()).fold(f64::INFINITY, f64::min);
    let holds = scan.iter().map(|&c| (c, rows.iter().all(|r| r.deficit >= c * r.rhs()))).collect();
    Ok(SplitStability { rows, slope, min_ratio, holds })
}

/// `cos(2πkt/T_*)` on the critical cylinder.
pub fn critical_mode(d: usize, k: usize, modes: usize, grid: usize) -> Result<PeriodicProfile> {
    let p = critical_params(d)?;
    let w = 2.0 * PI * k as f64 / p.period;
    PeriodicProfile::from_fn(p, modes, grid, |t| (w * t).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_agree_d3() {
        let c = quartic_constants(3, 32).unwrap();
        assert!((c.limit_constant - 8.0 / 15.0).abs() < 1e-15);
        assert!(rel(c.resolvent_coefficient, c.resolvent_coefficient_closed) < 1e-8);
        assert!(c.resolvent_impurity < 1e-10);
        assert!(c.gap > 0.0);
    }

    #[test]
    fn curve_d3() {
        let c = quartic_constants(3, 32).unwrap();
        let curve = degenerate_quotient_curve_with(3, &[1e-2], Some(&c.resolvent_profile), 0.04).unwrap();
        assert!(rel(curve.rows[0].1, 8.0 / 15.0) < 0.02, "{:?}", curve.rows);
        assert!(rel(curve.extrapolated, 8.0 / 15.0) < 1e-3, "{}", curve.extrapolated);
        let plain = degenerate_quotient_curve_with(3, &[], None, 0.04).unwrap();
        assert!(rel(plain.extrapolated, plain.predicted_limit) < 1e-3);
        assert!(plain.extrapolated > curve.extrapolated);
    }

    #[test]
    fn orthogonality_enforced() {
        let p = critical_params(3).unwrap();
        let bad = PeriodicProfile::mode(p, 1, true, 16, 64).unwrap();
        assert!(degenerate_quotient(3, 0.01, Some(&bad)).is_err());
    }

    #[test]
    fn split_slopes() {
        let eps = [0.04, 0.02, 0.01, 0.005];
        let perp = critical_mode(3, 2, 16, 128).unwrap();
        let par = critical_mode(3, 1, 16, 128).unwrap();
        let a = split_stability_check(3, &perp, &eps, &[0.0]).unwrap();
        let b = split_stability_check(3, &par, &eps, &[0.0]).unwrap();
        assert!((a.slope - 2.0).abs() < 0.1, "{}", a.slope);
        assert!((b.slope - 4.0).abs() < 0.1, "{}", b.slope);
        let z = split_stability_check(3, &perp, &[0.0], &[1.0]).unwrap();
        assert!(z.rows[0].deficit.abs() < 1e-12 && z.rows[0].rhs() == 0.0);
    }
}
