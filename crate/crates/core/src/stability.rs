//! Sobolev deficit, distance to the optimizer manifold, Bianchi-Egnell
//! quotients and their small-perturbation limits.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conformal::ConformalParam;
use crate::error::{computation, precondition, LabError, Result};
use crate::optimize::{bfgs_minimize, BfgsOptions};
use crate::specialfn::{gauss_rule_cached, sphere_area};
use crate::zonal::{energy, hessian_form, lq_norm, sharp_constant, SphereParams, ZonalFn};

pub const DEFAULT_INNER_ORDER: usize = 96;
pub const DEGENERACY_RATIO: f64 = 1e-6;
pub const DEFAULT_RICHARDSON_H: f64 = 0.04;

/// `E_s[U] - S_{d,s} ‖U‖_q²`.
pub fn deficit(u: &ZonalFn) -> Result<f64> {
    let p = &u.params;
    Ok(energy(u) - sharp_constant(p) * lq_norm(u, p.q)?.powi(2))
}

/// `4s/(d+2s+2)`.
pub fn upper_bound_constant(d: usize, s: f64) -> f64 {
    4.0 * s / (d as f64 + 2.0 * s + 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartRecord {
    pub start: [f64; 2],
    pub a: f64,
    pub rho: f64,
    pub g: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceDiagnostics {
    pub starts: Vec<StartRecord>,
    /// Distinct `(a, ρ ≥ 0, G)` within `1e-10` relative of the best `G²`.
    pub maximizers: Vec<[f64; 3]>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub delta: f64,
    pub c_star: f64,
    pub zeta_star: ConformalParam,
    pub tau: f64,
    pub diagnostics: DistanceDiagnostics,
}

/// Quadrature for `∫_{S^d}` of functions of `(ω·e, ω·e⊥)`.
struct SphereProduct {
    t: Vec<f64>,
    wt: Vec<f64>,
    u: Vec<f64>,
    wu: Vec<f64>,
    u_mass: f64,
}

impl SphereProduct {
    fn new(u: &ZonalFn, inner: usize) -> Result<Self> {
        let d = u.params.d;
        let rule = u.rule();
        let wt = rule.weights.clone();
        let (un, uw) = if d == 2 {
            // Gauss-Chebyshev for (1-u²)^{-1/2}, times |S^0| = 2
            let n = inner;
            let nodes = (1..=n).map(|j| ((2 * j - 1) as f64 * PI / (2 * n) as f64).cos()).collect();
            (nodes, vec![2.0 * PI / n as f64; n])
        } else {
            let r = gauss_rule_cached(inner, (d as f64 - 3.0) / 2.0)?;
            let area = sphere_area(d - 2);
            (r.nodes.clone(), r.weights.iter().map(|w| w * area).collect())
        };
        let u_mass = uw.iter().sum();
        Ok(Self { t: rule.nodes.clone(), wt, u: un, wu: uw, u_mass })
    }
}

/// `G(ζ) = ∫ Q_ζ^{q-1} U dω` at `ζ = a e + ρ e⊥`.
fn g_value(prod: &SphereProduct, samples: &[f64], expo: f64, a: f64, rho: f64) -> f64 {
    let r2 = a * a + rho * rho;
    if r2 >= 1.0 {
        return 0.0;
    }
    let c = (1.0 - r2).sqrt();
    let mut acc = 0.0;
    for ((&t, &w), &f) in prod.t.iter().zip(&prod.wt).zip(samples) {
        let base = 1.0 - a * t;
        let inner = if rho == 0.0 {
            prod.u_mass * (c / base).powf(expo)
        } else {
            let st = rho * (1.0 - t * t).sqrt();
            prod.u.iter().zip(&prod.wu).map(|(&u, &v)| v * (c / (base - st * u)).powf(expo)).sum()
        };
        acc += w * f * inner;
    }
    acc
}

fn to_disc(y: &[f64]) -> (f64, f64) {
    let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
    if r < 1e-300 {
        return (y[0], y[1]);
    }
    let k = r.tanh() / r;
    (k * y[0], k * y[1])
}

fn perpendicular(axis: &[f64]) -> Vec<f64> {
    let k = (0..axis.len()).min_by(|&i, &j| axis[i].abs().total_cmp(&axis[j].abs())).unwrap_or(0);
    let mut v = vec![0.0; axis.len()];
    v[k] = 1.0;
    let proj = axis[k];
    for (vi, ai) in v.iter_mut().zip(axis) {
        *vi -= proj * ai;
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// `G(a e + ρ e⊥)` for a zonal `U`; exposed for diagnostics and tests.
pub fn bubble_overlap(u: &ZonalFn, a: f64, rho: f64, inner_order: usize) -> Result<f64> {
    let prod = SphereProduct::new(u, inner_order)?;
    let p = &u.params;
    Ok(g_value(&prod, &u.samples, (p.d as f64 + 2.0 * p.s) / 2.0, a, rho))
}

/// `δ[U]` by maximizing `G(ζ)²` over the `(a, ρ)` disc.
pub fn distance(u: &ZonalFn) -> Result<DistanceResult> {
    distance_with(u, DEFAULT_INNER_ORDER)
}

pub fn distance_with(u: &ZonalFn, inner_order: usize) -> Result<DistanceResult> {
    let p = u.params;
    let e = energy(u);
    if !(e > 0.0) {
        return Err(LabError::Degenerate("distance requires U != 0".into()));
    }
    let prod = SphereProduct::new(u, inner_order)?;
    let expo = (p.d as f64 + 2.0 * p.s) / 2.0;
    let area = sphere_area(p.d);
    let g = |a: f64, rho: f64| g_value(&prod, &u.samples, expo, a, rho);
    let scale = (area * u.samples.iter().map(|v| v.abs()).fold(0.0, f64::max)).max(f64::MIN_POSITIVE);

    // axis scan seeds the last start
    let scan: Vec<(f64, f64)> = (-40..=40)
        .map(|k| {
            let y = k as f64 * 0.08;
            (y, g(y.tanh(), 0.0).powi(2))
        })
        .collect();
    let best_axis = scan.iter().copied().fold((0.0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc }).0;

    let starts: Vec<[f64; 2]> = vec![[0.0, 0.0], [0.6, 0.0], [-0.6, 0.0], [0.0, 0.6], [0.35, -0.35], [best_axis, 0.0]];
    let opts = BfgsOptions { max_iter: 200, grad_tol: 1e-12, fd_step: 1e-6 };
    let records: Vec<StartRecord> = starts
        .par_iter()
        .map(|s0| {
            let obj = |y: &[f64]| {
                let (a, rho) = to_disc(y);
                -(g(a, rho) / scale).powi(2)
            };
            let res = bfgs_minimize(obj, s0, &opts);
            let (a, rho) = to_disc(&res.x);
            // stationarity in y, relative to the objective scale
            let h = 1e-5;
            let grad = (0..2)
                .map(|i| {
                    let mut yp = res.x.clone();
                    let mut ym = res.x.clone();
                    yp[i] += h;
                    ym[i] -= h;
                    (obj(&yp) - obj(&ym)) / (2.0 * h)
                })
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let converged = res.converged || grad < 1e-7 * res.value.abs().max(1e-12);
            StartRecord { start: *s0, a, rho: rho.abs(), g: g(a, rho), iterations: res.iterations, converged }
        })
        .collect();

    if records.iter().all(|r| !r.converged) {
        let best = records.iter().map(|r| r.g * r.g).fold(0.0, f64::max);
        return Err(computation(format!("distance: no start converged; best G^2 found = {best:e}")));
    }
    let best_g2 = records.iter().filter(|r| r.converged).map(|r| r.g * r.g).fold(0.0, f64::max);
    let mut maximizers: Vec<[f64; 3]> = Vec::new();
    for r in records.iter().filter(|r| r.converged && r.g * r.g >= best_g2 * (1.0 - 1e-10)) {
        if !maximizers.iter().any(|m| (m[0] - r.a).abs() < 1e-6 && (m[1] - r.rho).abs() < 1e-6) {
            maximizers.push([r.a, r.rho, r.g]);
        }
    }
    maximizers.sort_by(|x, y| {
        (y[2] * y[2]).total_cmp(&(x[2] * x[2])).then(x[1].total_cmp(&y[1])).then(y[0].total_cmp(&x[0]))
    });
    let [a, rho, gstar] = maximizers[0];

    let g0 = p.gamma_ratio_at(0);
    let delta2 = (e - g0 * gstar * gstar / area).max(0.0);
    let delta = delta2.sqrt();
    let c_star = gstar / area;
    let tau = delta / (e - delta2).sqrt();
    let perp = perpendicular(&u.axis);
    let zeta: Vec<f64> = u.axis.iter().zip(&perp).map(|(ei, pi)| a * ei + rho * pi).collect();
    Ok(DistanceResult {
        delta,
        c_star,
        zeta_star: ConformalParam::new(zeta)?,
        tau,
        diagnostics: DistanceDiagnostics { starts: records, maximizers, energy: e },
    })
}

/// `deficit(U)/δ[U]²`; a degenerate-input error on the optimizer manifold.
pub fn be_quotient(u: &ZonalFn) -> Result<f64> {
    let dist = distance(u)?;
    if dist.delta / dist.diagnostics.energy.sqrt() < DEGENERACY_RATIO {
        return Err(LabError::Degenerate(format!(
            "manifold point: delta/sqrt(E) = {:e}",
            dist.delta / dist.diagnostics.energy.sqrt()
        )));
    }
    Ok(deficit(u)? / (dist.delta * dist.delta))
}

/// `(8f(h/4) - 6f(h/2) + f(h))/3`, exact for `L + a h + b h²`.
pub fn richardson3(f_h: f64, f_h2: f64, f_h4: f64) -> f64 {
    (8.0 * f_h4 - 6.0 * f_h2 + f_h) / 3.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientCurve {
    pub rows: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub error_estimate: f64,
    /// `⟨R, L_s R⟩ / E_s[R]`.
    pub spectral_limit: f64,
}

/// Checks `∫R = 0` and `∫ωR = 0` for zonal `R` (degree-0 and degree-1 coefficients).
pub fn check_orthogonality(r: &ZonalFn) -> Result<()> {
    let norm = r.l2_norm_sq().sqrt();
    let c0 = r.coeffs.first().copied().unwrap_or(0.0);
    let c1 = r.coeffs.get(1).copied().unwrap_or(0.0);
    if c0.abs() > 1e-10 * norm || c1.abs() > 1e-10 * norm {
        return Err(precondition(format!(
            "perturbation violates orthogonality: |c0| = {:e}, |c1| = {:e}, |R| = {norm:e}",
            c0.abs(),
            c1.abs()
        )));
    }
    Ok(())
}

fn quotient_at(r: &ZonalFn, eps: f64) -> Result<f64> {
    let one = r.resampled(vec![1.0; r.samples.len()])?;
    let u = one.lincomb(1.0, r, eps)?;
    be_quotient(&u)
}

/// `(ε, deficit(1+εR)/δ[1+εR]²)` over `eps_grid`, with the `ε → 0` limit from
/// Richardson extrapolation on `{h, h/2, h/4}`.
pub fn quotient_curve(r: &ZonalFn, eps_grid: &[f64], h: f64) -> Result<QuotientCurve> {
    check_orthogonality(r)?;
    if !(h > 0.0) {
        return Err(precondition("Richardson step must be positive"));
    }
    let rows = eps_grid.par_iter().map(|&eps| quotient_at(r, eps).map(|q| (eps, q))).collect::<Result<Vec<_>>>()?;
    let f: Vec<f64> =
        [h, h / 2.0, h / 4.0, h / 8.0].par_iter().map(|&e| quotient_at(r, e)).collect::<Result<Vec<_>>>()?;
    let extrapolated = richardson3(f[0], f[1], f[2]);
    let finer = richardson3(f[1], f[2], f[3]);
    Ok(QuotientCurve {
        rows,
        extrapolated,
        error_estimate: (extrapolated - finer).abs(),
        spectral_limit: hessian_form(r) / energy(r),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityScan {
    pub trials: usize,
    pub min_quotient: f64,
    pub min_deficit_ratio: f64,
}

/// Random bandlimited `U` away from the manifold: quotient and deficit signs.
pub fn positivity_scan(
    params: SphereParams,
    trials: usize,
    bandlimit: usize,
    quad_order: usize,
    seed: u64,
) -> Result<PositivityScan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeff_sets: Vec<Vec<f64>> = (0..trials)
        .map(|_| {
            (0..=bandlimit)
                .map(|l| {
                    let base = if l == 0 { 2.0 } else { 0.0 };
                    base + rng.random_range(-1.0..1.0) / (1.0 + l as f64)
                })
                .collect()
        })
        .collect();
    let out = coeff_sets
        .into_par_iter()
        .map(|c| {
            let u = ZonalFn::from_coeffs(params, c, quad_order)?;
            let def = deficit(&u)?;
            Ok((be_quotient(&u)?, def / energy(&u)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PositivityScan {
        trials,
        min_quotient: out.iter().map(|v| v.0).fold(f64::INFINITY, f64::min),
        min_deficit_ratio: out.iter().map(|v| v.1).fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{flow_zeta, pullback_zonal, q_zeta};

    fn sp() -> SphereParams {
        SphereParams::new(3, 1.0).unwrap()
    }

    #[test]
    fn upper_bound_values() {
        assert!((upper_bound_constant(3, 1.0) - 4.0 / 7.0).abs() < 1e-15);
        assert!((upper_bound_constant(4, 1.0) - 0.5).abs() < 1e-15);
        assert!(upper_bound_constant(3, 1e-12) < 1e-11);
    }

    #[test]
    fn deficit_vanishes_on_bubbles() {
        let p = sp();
        let z = ConformalParam::new(vec![0.0, 0.2, 0.0, -0.3]).unwrap();
        let q = q_zeta(&z, p, 48, 192).unwrap();
        assert!(deficit(&q).unwrap().abs() < 1e-7 * energy(&q));
        let r = ZonalFn::from_coeffs(p, vec![0.0, 0.0, 1.0], 32).unwrap();
        let u = r.resampled(vec![1.0; 32]).unwrap().lincomb(1.0, &r, 0.1).unwrap();
        assert!(deficit(&u).unwrap() > 0.0);
        let ratio = deficit(&u).unwrap() / energy(&u);
        let u3 = u.scaled(3.0);
        assert!((deficit(&u3).unwrap() / energy(&u3) - ratio).abs() < 1e-13);
    }

    #[test]
    fn distance_on_manifold() {
        let p = sp();
        let delta0 = 1.5f64;
        let z = flow_zeta(delta0);
        let one = ZonalFn::from_fn(p, 24, 96, |_| 1.0).unwrap();
        let q = pullback_zonal(&one, delta0).unwrap();
        let dist = distance(&q).unwrap();
        assert!(dist.delta / energy(&q).sqrt() < 1e-5, "{dist:?}");
        assert!((dist.zeta_star.zeta()[3] - z).abs() < 1e-5);
        assert!(matches!(be_quotient(&q), Err(LabError::Degenerate(_))) || dist.delta / energy(&q).sqrt() >= 1e-6);
    }

    #[test]
    fn distance_near_constant() {
        let p = sp();
        let r = ZonalFn::from_coeffs(p, vec![0.0, 0.0, 1.0, 0.0], 32).unwrap();
        let eps = 0.05;
        let u = r.resampled(vec![1.0; 32]).unwrap().lincomb(1.0, &r, eps).unwrap();
        let dist = distance(&u).unwrap();
        let expected = eps * eps * energy(&r);
        assert!((dist.delta.powi(2) / expected - 1.0).abs() < 5e-3, "{} vs {expected}", dist.delta.powi(2));
    }

    #[test]
    fn orthogonality_enforced() {
        let p = sp();
        let r = ZonalFn::from_coeffs(p, vec![0.0, 0.1, 1.0], 32).unwrap();
        assert!(quotient_curve(&r, &[0.01], 0.04).is_err());
    }

    #[test]
    fn richardson_exact_on_quadratics() {
        let f = |h: f64| 0.3 + 2.0 * h - 5.0 * h * h;
        assert!((richardson3(f(0.1), f(0.05), f(0.025)) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn degree_two_and_three_limits() {
        for &(d, s) in &[(3usize, 1.0), (4, 1.0), (3, 0.5), (5, 2.0)] {
            let p = SphereParams::new(d, s).unwrap();
            let r2 = ZonalFn::harmonic(p, 2, 16, 64).unwrap();
            let c2 = quotient_curve(&r2, &[0.02, 0.01], DEFAULT_RICHARDSON_H).unwrap();
            let target = upper_bound_constant(d, s);
            assert!((c2.spectral_limit - target).abs() < 1e-12);
            assert!((c2.extrapolated / target - 1.0).abs() < 1e-3, "d={d} s={s} {c2:?}");
            let r3 = ZonalFn::harmonic(p, 3, 16, 64).unwrap();
            let c3 = quotient_curve(&r3, &[0.02], DEFAULT_RICHARDSON_H).unwrap();
            let g1 = p.gamma_ratio_at(1);
            let g3 = p.gamma_ratio_at(3);
            assert!((c3.spectral_limit - (g3 - g1) / g3).abs() < 1e-12);
            assert!((c3.extrapolated / c3.spectral_limit - 1.0).abs() < 1e-3, "{c3:?}");
            assert!(c3.extrapolated > c2.extrapolated);
        }
    }
}
