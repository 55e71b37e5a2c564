//! Stereographic projection, the optimizer family `Q_ζ`, the axial Möbius
//! flow `γ_{δ,ξ}`, conformal pullbacks of zonal data and the Hersch
//! center-of-mass normalization.

use crate::error::{computation, domain, precondition, Result};
use crate::optimize::brent_root;
use crate::zonal::{dot, north_pole, SphereParams, ZonalFn};

const BALL_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalParam {
    zeta: Vec<f64>,
}

impl ConformalParam {
    pub fn new(zeta: Vec<f64>) -> Result<Self> {
        let n = dot(&zeta, &zeta).sqrt();
        if !(n < 1.0 - BALL_MARGIN) {
            return Err(domain(format!("conformal parameter must satisfy |zeta| < 1, got {n}")));
        }
        Ok(Self { zeta })
    }

    pub fn zero(d: usize) -> Self {
        Self { zeta: vec![0.0; d + 1] }
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn norm(&self) -> f64 {
        dot(&self.zeta, &self.zeta).sqrt()
    }

    /// `ζ/|ζ|`, or the north pole when `ζ = 0`.
    pub fn direction(&self) -> Vec<f64> {
        let n = self.norm();
        if n == 0.0 {
            north_pole(self.zeta.len() - 1)
        } else {
            self.zeta.iter().map(|v| v / n).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusFlowParam {
    pub delta: f64,
    pub xi: Vec<f64>,
}

impl MoebiusFlowParam {
    pub fn new(delta: f64, xi: Vec<f64>) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(domain(format!("flow parameter delta must be positive, got {delta}")));
        }
        let n = dot(&xi, &xi).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(domain(format!("flow direction must be a unit vector, |xi| = {n}")));
        }
        Ok(Self { delta, xi })
    }
}

/// Stereographic projection `R^d → S^d`.
pub fn stereo(x: &[f64]) -> Vec<f64> {
    let r2 = dot(x, x);
    let mut w: Vec<f64> = x.iter().map(|v| 2.0 * v / (1.0 + r2)).collect();
    w.push((1.0 - r2) / (1.0 + r2));
    w
}

/// Inverse stereographic projection; `None` at the south pole (the image of ∞).
pub fn stereo_inverse(omega: &[f64]) -> Option<Vec<f64>> {
    let (last, head) = omega.split_last()?;
    let den = 1.0 + last;
    if den.abs() < 1e-300 {
        return None;
    }
    Some(head.iter().map(|v| v / den).collect())
}

/// `J_S(x) = (2/(1+|x|²))^d`.
pub fn stereo_jacobian(x: &[f64]) -> f64 {
    (2.0 / (1.0 + dot(x, x))).powi(x.len() as i32)
}

/// `Q_ζ(ω) = (√(1-|ζ|²)/(1-ζ·ω))^{(d-2s)/2}` as a zonal function about `ζ/|ζ|`.
pub fn q_zeta(zeta: &ConformalParam, params: SphereParams, bandlimit: usize, quad_order: usize) -> Result<ZonalFn> {
    if zeta.zeta.len() != params.d + 1 {
        return Err(precondition("zeta must live in R^{d+1}"));
    }
    let r = zeta.norm();
    let expo = (params.d as f64 - 2.0 * params.s) / 2.0;
    let c = (1.0 - r * r).sqrt();
    ZonalFn::from_fn(params, bandlimit, quad_order, |t| (c / (1.0 - r * t)).powf(expo))?.with_axis(zeta.direction())
}

/// `ζ(a, λ)` for the bubble `λ^{-(d-2s)/2} Q((x-a)/λ)`.
pub fn moebius_param(a: &[f64], lambda: f64) -> Result<ConformalParam> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(domain(format!("lambda must be positive, got {lambda}")));
    }
    let eta = stereo(a);
    let d = a.len();
    let l2 = lambda * lambda;
    let den = 2.0 + l2 * (1.0 + eta[d]);
    let mut zeta: Vec<f64> = eta.iter().map(|v| 2.0 * v / den).collect();
    zeta[d] -= l2 * (1.0 + eta[d]) / den;
    ConformalParam::new(zeta)
}

/// `γ_{δ,ξ}(ω)`.
pub fn gamma_flow(p: &MoebiusFlowParam, omega: &[f64]) -> Vec<f64> {
    let a = dot(omega, &p.xi);
    let d2 = p.delta * p.delta;
    let den = (1.0 + a) + d2 * (1.0 - a);
    let tang = 2.0 * p.delta / den;
    let axial = ((1.0 + a) - d2 * (1.0 - a)) / den;
    omega.iter().zip(&p.xi).map(|(w, x)| tang * (w - a * x) + axial * x).collect()
}

/// Action of `γ_{δ,e}` on the axial coordinate `t = ω·e`.
pub fn flow_axial(delta: f64, t: f64) -> f64 {
    let d2 = delta * delta;
    ((1.0 + t) - d2 * (1.0 - t)) / ((1.0 + t) + d2 * (1.0 - t))
}

/// `|ζ|` signed along the flow axis for `γ_{δ,e}`: `(δ²-1)/(δ²+1)`.
pub fn flow_zeta(delta: f64) -> f64 {
    let d2 = delta * delta;
    (d2 - 1.0) / (d2 + 1.0)
}

/// Flow parameter `δ` with `flow_zeta(δ) = z`.
pub fn flow_delta(z: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(domain(format!("|z| must be < 1, got {z}")));
    }
    Ok(((1.0 + z) / (1.0 - z)).sqrt())
}

/// `J_{γ_{δ,e}}(t) = (√(1-z²)/(1-zt))^d` with `z = flow_zeta(δ)`.
pub fn flow_jacobian(d: usize, delta: f64, t: f64) -> f64 {
    let z = flow_zeta(delta);
    ((1.0 - z * z).sqrt() / (1.0 - z * t)).powi(d as i32)
}

/// `U_Ψ = J_Ψ^{1/q} U∘Ψ` for `Ψ = γ_{δ,e}` on the grid of `u`.
pub fn pullback_zonal(u: &ZonalFn, delta: f64) -> Result<ZonalFn> {
    pullback_zonal_exponent(u, delta, u.params.q, u.bandlimit, u.quad_order())
}

/// Pullback against an explicit flow; the flow axis must be the axis of `u`.
pub fn pullback_zonal_flow(u: &ZonalFn, flow: &MoebiusFlowParam) -> Result<ZonalFn> {
    let err: f64 = u.axis.iter().zip(&flow.xi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if u.axis.len() != flow.xi.len() || err > 1e-12 {
        return Err(precondition("flow axis must coincide with the zonal axis"));
    }
    pullback_zonal(u, flow.delta)
}

/// `J_Ψ^{1/p} U∘Ψ` sampled on a `(bandlimit, quad_order)` grid.
pub fn pullback_zonal_exponent(
    u: &ZonalFn,
    delta: f64,
    p: f64,
    bandlimit: usize,
    quad_order: usize,
) -> Result<ZonalFn> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(domain(format!("delta must be positive, got {delta}")));
    }
    let d = u.params.d;
    let target = ZonalFn::from_fn(u.params, bandlimit, quad_order, |t| {
        flow_jacobian(d, delta, t).powf(1.0 / p) * u.eval(flow_axial(delta, t))
    })?;
    target.with_axis(u.axis.clone())
}

/// Sphere function `U(ω) = J_S(x)^{-1/q} u(|x|)` for a radial profile `u` on `R^d`.
pub fn radial_transfer<F: Fn(f64) -> f64>(
    u_radial: F,
    params: SphereParams,
    bandlimit: usize,
    quad_order: usize,
) -> Result<ZonalFn> {
    let d = params.d as f64;
    let expo = d / params.q;
    let lift = |t: f64| {
        let r = ((1.0 - t) / (1.0 + t)).sqrt();
        (1.0 + t).powf(-expo) * u_radial(r)
    };
    let u = ZonalFn::from_fn(params, bandlimit, quad_order, lift)?;
    if u.samples.iter().any(|v| !v.is_finite()) {
        return Err(computation("radial transfer produced non-finite samples"));
    }
    let peak = u.samples.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for r in [1e4f64, 1e8] {
        let t = (1.0 - r * r) / (1.0 + r * r);
        let v = (2.0 / (1.0 + r * r)).powf(-expo) * u_radial(r);
        if !v.is_finite() || v.abs() > 1e3 * peak {
            return Err(computation(format!(
                "radial profile decays too slowly: lifted value {v:e} at t = {t:e} (r = {r:e}) against sample peak {peak:e}"
            )));
        }
    }
    Ok(u)
}

#[derive(Debug, Clone)]
pub struct HerschResult {
    pub delta_star: f64,
    /// Every sign change of the center-of-mass curve on the scan grid, refined.
    pub roots: Vec<f64>,
    pub normalized: ZonalFn,
    pub residual: f64,
}

/// Axial center of mass of `|F|^p` after moving it by `γ_{δ,e}`:
/// `G(δ) = ∫ γ_δ(ω)·e |F(ω)|^p dω`.
pub fn hersch_center(u: &ZonalFn, p: f64, delta: f64) -> f64 {
    u.integrate_samples(|t, f| flow_axial(delta, t) * f.abs().powf(p))
}

/// Finds `δ*` with `G(δ*) = 0` and returns `J^{1/p} F∘γ_{1/δ*}`, whose density
/// `|·|^p` has zero center of mass.
pub fn hersch_normalize(u: &ZonalFn, p: f64) -> Result<HerschResult> {
    let mass = u.integrate_samples(|_, f| f.abs().powf(p));
    if !(mass > 0.0) {
        return Err(precondition("density has zero mass"));
    }
    let g = |ld: f64| hersch_center(u, p, ld.exp()) / mass;
    let (mut lo, mut hi) = (1e-6f64.ln(), 1e6f64.ln());
    let mut expansions = 0;
    while g(lo) <= 0.0 || g(hi) >= 0.0 {
        lo *= 2.0;
        hi *= 2.0;
        expansions += 1;
        if expansions > 4 {
            return Err(computation(format!(
                "no sign change of the center of mass on log-delta [{lo}, {hi}]: G = ({}, {})",
                g(lo),
                g(hi)
            )));
        }
    }
    let n_scan = 400;
    let grid: Vec<f64> = (0..=n_scan).map(|i| lo + (hi - lo) * i as f64 / n_scan as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for i in 0..n_scan {
        if vals[i] == 0.0 {
            roots.push(grid[i].exp());
        } else if vals[i].signum() != vals[i + 1].signum() && vals[i + 1] != 0.0 {
            roots.push(brent_root(g, grid[i], grid[i + 1], 1e-15, 200)?.exp());
        }
    }
    let delta_star = *roots.first().ok_or_else(|| computation("center-of-mass scan found no root"))?;
    let normalized = pullback_zonal_exponent(u, 1.0 / delta_star, p, u.bandlimit, u.quad_order())?;
    let residual = hersch_center(&normalized, p, 1.0) / mass;
    Ok(HerschResult { delta_star, roots, normalized, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zonal::{energy, lq_norm};

    fn params() -> SphereParams {
        SphereParams::new(3, 1.0).unwrap()
    }

    #[test]
    fn stereo_basics() {
        let n = stereo(&[0.0, 0.0, 0.0]);
        assert_eq!(n, vec![0.0, 0.0, 0.0, 1.0]);
        let e = stereo(&[0.6, 0.0, 0.8]);
        assert!(e[3].abs() < 1e-15);
        let x = [0.3, -1.7, 2.2];
        let w = stereo(&x);
        assert!((dot(&w, &w) - 1.0).abs() < 1e-15);
        let back = stereo_inverse(&w).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(stereo_inverse(&[0.0, 0.0, -1.0]).is_none());
    }

    #[test]
    fn conformal_param_rejects_boundary() {
        assert!(ConformalParam::new(vec![0.0, 1.0]).is_err());
        assert!(ConformalParam::new(vec![0.0, 1.0 - 1e-13]).is_err());
        assert!(ConformalParam::new(vec![0.3, 0.4]).is_ok());
    }

    #[test]
    fn moebius_param_examples() {
        let z = moebius_param(&[0.0, 0.0, 0.0], 1.0).unwrap();
        assert!(z.norm() < 1e-15);
        let z = moebius_param(&[0.0, 0.0, 0.0], 3f64.sqrt()).unwrap();
        assert!((z.zeta()[3] + 0.5).abs() < 1e-15);
        let z1 = moebius_param(&[0.5, 0.0, 0.0], 1.0).unwrap();
        let z2 = moebius_param(&[0.0, 0.5, 0.0], 1.0).unwrap();
        assert!(z1 != z2);
    }

    #[test]
    fn flow_fixed_points() {
        let xi = vec![0.0, 0.0, 1.0];
        let w = vec![0.6, 0.0, 0.8];
        let id = gamma_flow(&MoebiusFlowParam::new(1.0, xi.clone()).unwrap(), &w);
        for (a, b) in id.iter().zip(&w) {
            assert!((a - b).abs() < 1e-15);
        }
        let anti = gamma_flow(&MoebiusFlowParam::new(0.3, xi.clone()).unwrap(), &[0.0, 0.0, -1.0]);
        assert!((anti[2] + 1.0).abs() < 1e-15);
        let lim = gamma_flow(&MoebiusFlowParam::new(1e-8, xi.clone()).unwrap(), &w);
        assert!((lim[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pullback_of_constant_is_bubble() {
        let sp = params();
        let one = ZonalFn::from_fn(sp, 32, 128, |_| 1.0).unwrap();
        for &delta in &[0.4, 1.0, 2.5] {
            let pulled = pullback_zonal(&one, delta).unwrap();
            let z = flow_zeta(delta);
            let expo = (sp.d as f64 - 2.0 * sp.s) / 2.0;
            let c = (1.0 - z * z).sqrt();
            for (&t, a) in pulled.nodes().iter().zip(&pulled.samples) {
                assert!((a - (c / (1.0 - z * t)).powf(expo)).abs() < 1e-12);
            }
            if z > 0.0 {
                let q = q_zeta(&ConformalParam::new(vec![0.0, 0.0, 0.0, z]).unwrap(), sp, 32, 128).unwrap();
                assert_eq!(q.axis, north_pole(3));
                for (a, b) in pulled.samples.iter().zip(&q.samples) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            assert!((lq_norm(&pulled, sp.q).unwrap().powf(sp.q) / sp.geometry().area - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pullback_axis_mismatch() {
        let sp = params();
        let one = ZonalFn::from_fn(sp, 8, 32, |t| 1.0 + t).unwrap();
        let bad = MoebiusFlowParam::new(2.0, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(pullback_zonal_flow(&one, &bad).is_err());
        let good = MoebiusFlowParam::new(2.0, north_pole(3)).unwrap();
        assert!(pullback_zonal_flow(&one, &good).is_ok());
    }

    #[test]
    fn bubble_norm_and_energy() {
        let sp = params();
        let zp = ConformalParam::new(vec![0.1, -0.2, 0.0, 0.3]).unwrap();
        let q = q_zeta(&zp, sp, 64, 256).unwrap();
        let area = sp.geometry().area;
        assert!((lq_norm(&q, sp.q).unwrap().powf(sp.q) / area - 1.0).abs() < 1e-10);
        assert!((energy(&q) / (sp.gamma_ratio_at(0) * area) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hersch_balanced_and_bubble() {
        let sp = params();
        let even = ZonalFn::from_fn(sp, 16, 64, |t| 1.0 + t * t).unwrap();
        let h = hersch_normalize(&even, sp.q).unwrap();
        assert!((h.delta_star - 1.0).abs() < 1e-10);
        assert_eq!(h.roots.len(), 1);

        let delta0 = 1.8;
        let z = flow_zeta(delta0);
        let q = q_zeta(&ConformalParam::new(vec![0.0, 0.0, 0.0, z]).unwrap(), sp, 48, 192).unwrap();
        let h = hersch_normalize(&q, sp.q).unwrap();
        assert!((h.delta_star / delta0 - 1.0).abs() < 1e-9, "{}", h.delta_star);
        assert!(h.residual.abs() < 1e-10);
        for v in &h.normalized.samples {
            assert!((v - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn radial_transfer_of_bubble() {
        let sp = params();
        let expo = (sp.d as f64 - 2.0 * sp.s) / 2.0;
        let u = radial_transfer(|r| (2.0 / (1.0 + r * r)).powf(expo), sp, 16, 64).unwrap();
        for v in &u.samples {
            assert!((v - 1.0).abs() < 1e-13);
        }
        assert!(radial_transfer(|r| 1.0 / (1.0 + r).sqrt(), sp, 16, 64).is_err());
    }
}
