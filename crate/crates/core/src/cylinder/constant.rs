//! `S_d(T)`: branch values, a spectral descent cross-check, the cosh trial
//! bound and nondegenerate quotients.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::orbit::{inverse_period, solve_orbit_with};
use super::{u0, CylinderParams, PeriodicProfile};
use crate::error::{computation, inconsistency, precondition, Result};
use crate::specialfn::gauss_rule_cached;
use crate::zonal::{sharp_constant, SphereParams};

const DESCENT_MODES: usize = 64;
const DESCENT_GRID: usize = 512;
const DESCENT_STARTS: usize = 3;
const DESCENT_MAX_ITER: usize = 20_000;
/// Relative agreement required between descent and branch values.
pub const CROSS_CHECK_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    Constant,
    /// The `k = 1` orbit `u_α` with `τ(α) = T`.
    Orbit {
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentResult {
    pub value: f64,
    pub iterations: usize,
    pub profile: PeriodicProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderConstant {
    pub params: CylinderParams,
    pub value: f64,
    pub branch: Branch,
    pub descent: DescentResult,
    pub cosh_bound: f64,
    /// `S_d = S_{d,1}` on `R^d`.
    pub euclidean_constant: f64,
}

/// The optimizer `u_*` on the grid: `u0` for `T ≤ T_*`, else the orbit.
pub fn optimizer_profile(params: CylinderParams, modes: usize, grid: usize) -> Result<(PeriodicProfile, Branch)> {
    if params.period <= params.t_star {
        return Ok((PeriodicProfile::constant(params, u0(params.d)?, modes, grid)?, Branch::Constant));
    }
    let alpha = inverse_period(params.d, params.period)?;
    let orbit = solve_orbit_with(params.d, alpha, grid)?;
    Ok((orbit.profile(params, modes)?, Branch::Orbit { alpha }))
}

/// `S_d(T)` from the optimizer branch (constant for `T ≤ T_*`, `k = 1` orbit
/// otherwise).
pub fn sobolev_constant_branch(d: usize, period: f64) -> Result<(f64, Branch)> {
    let p = CylinderParams::new(d, period)?;
    if period <= p.t_star {
        return Ok((p.mass() * p.volume().powf(1.0 - 2.0 / p.q), Branch::Constant));
    }
    let alpha = inverse_period(d, period)?;
    let orbit = solve_orbit_with(d, alpha, super::DEFAULT_GRID)?;
    let h = period / orbit.trajectory.len() as f64;
    let c0 = p.mass();
    let e: f64 = orbit.trajectory.iter().map(|x| x[2] * x[2] + c0 * x[1] * x[1]).sum::<f64>() * h;
    let n: f64 = orbit.trajectory.iter().map(|x| x[1].powf(p.q)).sum::<f64>() * h;
    let area = p.cross_section();
    Ok((area * e / (area * n).powf(2.0 / p.q), Branch::Orbit { alpha }))
}

/// Minimizes `E_T[u]/‖u‖_q²` over profiles by the normalized iteration
/// `u ← E_T^{-1}(|u|^{q-2}u)`, which decreases the quotient monotonically.
pub fn spectral_descent(
    params: CylinderParams,
    modes: usize,
    grid: usize,
    starts: usize,
    seed: u64,
) -> Result<DescentResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = params.frequency();
    let c0 = params.mass();
    let mut best: Option<DescentResult> = None;
    for _ in 0..starts.max(1) {
        let mut cos = vec![0.0; modes + 1];
        let mut sin = vec![0.0; modes + 1];
        cos[0] = 1.0;
        for k in 1..=modes.min(3) {
            cos[k] = rng.random_range(-0.3..0.3) / k as f64;
            sin[k] = rng.random_range(-0.3..0.3) / k as f64;
        }
        let mut u = PeriodicProfile::from_coeffs(params, cos, sin, grid)?;
        let mut value = u.quotient();
        let mut iterations = 0;
        let mut stalled = 0;
        while iterations < DESCENT_MAX_ITER {
            iterations += 1;
            let g: Vec<f64> = u.samples.iter().map(|&v| v.abs().powf(params.q - 2.0) * v).collect();
            let g = PeriodicProfile::from_samples(params, g, modes)?;
            let cos: Vec<f64> = (0..=modes).map(|k| g.cos[k] / ((k as f64 * w).powi(2) + c0)).collect();
            let sin: Vec<f64> = (0..=modes).map(|k| g.sin[k] / ((k as f64 * w).powi(2) + c0)).collect();
            let next = PeriodicProfile::from_coeffs(params, cos, sin, grid)?;
            let next = next.scaled(1.0 / next.max_abs());
            let nv = next.quotient();
            if !nv.is_finite() {
                return Err(computation("spectral descent produced a non-finite quotient"));
            }
            let change = (value - nv).abs() / nv;
            u = next;
            value = nv;
            stalled = if change < 1e-14 { stalled + 1 } else { 0 };
            if stalled >= 3 {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(DescentResult { value, iterations, profile: u });
        }
    }
    best.ok_or_else(|| computation("spectral descent ran no starts"))
}

/// The trial value of `Q(t - T/2)`, `Q = cosh^{-(d-2)/2}`, on `Σ_T`.
pub fn cosh_trial_bound(d: usize, period: f64) -> Result<f64> {
    let p = CylinderParams::new(d, period)?;
    let rule = gauss_rule_cached(32, 0.0)?;
    let half = period / 2.0;
    let panels = (half.ceil() as usize).max(4) * 2;
    let width = half / panels as f64;
    let a = (d as f64 - 2.0) / 2.0;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..panels {
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let t = (j as f64 + 0.5 * (x + 1.0)) * width;
            let q = t.cosh().powf(-a);
            let dq = -a * t.tanh() * q;
            num += 0.5 * width * wt * (dq * dq + p.mass() * q * q);
            den += 0.5 * width * wt * q.powf(p.q);
        }
    }
    let area = p.cross_section();
    Ok(2.0 * area * num / (2.0 * area * den).powf(2.0 / p.q))
}

/// `S_d(T)` with the descent cross-check; disagreement beyond
/// [`CROSS_CHECK_TOL`] is an inconsistency.
pub fn sobolev_constant_cylinder(d: usize, period: f64, seed: u64) -> Result<CylinderConstant> {
    let params = CylinderParams::new(d, period)?;
    let (value, branch) = sobolev_constant_branch(d, period)?;
    let descent = spectral_descent(params, DESCENT_MODES, DESCENT_GRID, DESCENT_STARTS, seed)?;
    if (descent.value - value).abs() > CROSS_CHECK_TOL * value {
        return Err(inconsistency(format!("S_d(T) at d={d}, T={period}: branch {value} vs descent {}", descent.value)));
    }
    Ok(CylinderConstant {
        params,
        value,
        branch,
        descent,
        cosh_bound: cosh_trial_bound(d, period)?,
        euclidean_constant: sharp_constant(&SphereParams::new(d, 1.0)?),
    })
}

/// `(E_T[U] - S_d(T)‖U‖_q²)/(ε²E_T[R])` for `U = u_* + εR`, where `R` must be
/// `E_T`-orthogonal to `u_*` and `∂_t u_*` (so `δ[U]² = ε²E_T[R]` for small ε).
pub fn nondegenerate_quotient(r: &PeriodicProfile, eps: f64) -> Result<f64> {
    let params = r.params;
    let (ustar, _) = optimizer_profile(params, r.modes(), r.grid())?;
    let du = ustar.derivative();
    let er = r.energy();
    for (name, b) in [("u_*", &ustar), ("d/dt u_*", &du)] {
        let eb = b.energy();
        if eb > 0.0 && b.energy_inner(r).abs() > 1e-8 * (eb * er).sqrt() {
            return Err(precondition(format!("perturbation is not E_T-orthogonal to {name}")));
        }
    }
    let (sharp, _) = sobolev_constant_branch(params.d, params.period)?;
    let u = ustar.lincomb(1.0, r, eps)?;
    Ok(u.deficit(sharp) / (eps * eps * er))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::t_star;

    #[test]
    fn branch_values_below_euclidean() {
        for d in [3, 4, 5] {
            let sd = sharp_constant(&SphereParams::new(d, 1.0).unwrap());
            let ts = t_star(d);
            for f in [0.5, 1.0, 1.5, 2.5] {
                let (v, _) = sobolev_constant_branch(d, f * ts).unwrap();
                assert!(v < sd, "d={d} T={}", f * ts);
                assert!(cosh_trial_bound(d, f * ts).unwrap() >= v * (1.0 - 1e-12));
            }
            // continuity across T_*
            let (a, _) = sobolev_constant_branch(d, ts).unwrap();
            let (b, _) = sobolev_constant_branch(d, ts * (1.0 + 1e-7)).unwrap();
            assert!((a - b).abs() < 1e-6 * a, "{a} {b}");
        }
    }

    #[test]
    fn descent_agrees_with_branch() {
        for f in [0.6, 1.7] {
            let c = sobolev_constant_cylinder(3, f * t_star(3), 11).unwrap();
            assert!((c.descent.value - c.value).abs() < 1e-4 * c.value);
            assert!(c.value < c.euclidean_constant);
        }
    }

    #[test]
    fn nondegenerate_lower_bound() {
        let d = 3;
        for f in [0.7, 1.6] {
            let p = CylinderParams::new(d, f * t_star(d)).unwrap();
            let (ustar, _) = optimizer_profile(p, 64, 512).unwrap();
            let raw = PeriodicProfile::from_fn(p, 64, 512, |t| {
                (0.3 * (p.frequency() * t).cos() + (2.0 * p.frequency() * t).sin()).exp()
            })
            .unwrap();
            let r = raw.energy_orthogonalize(&[ustar.clone(), ustar.derivative()]).unwrap();
            let ct = crate::cylinder::c_t(d, p.period).unwrap();
            let qv = nondegenerate_quotient(&r, 1e-3).unwrap();
            assert!(qv >= ct - 1e-2, "T={} quotient {qv} c_T {ct}", p.period);
        }
    }
}
