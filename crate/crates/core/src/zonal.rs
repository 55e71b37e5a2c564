//! Zonal functions on `S^d` in the L²-orthonormal Gegenbauer basis, the
//! fractional energy `E_s`, the Hessian form `L_s` and related multipliers.

use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, precondition, Result};
use crate::specialfn::{
    gamma_ratio, gauss_rule_cached, gegenbauer_all, gegenbauer_at_one, harmonic_multiplicity, log_gamma_ratio,
    orthonormal_polys, orthonormal_polys_with_derivative, sphere_area, QuadratureRule, SphereGeometry,
};

pub const DEFAULT_BANDLIMIT: usize = 64;
pub const DEFAULT_QUAD_ORDER: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereParams {
    pub d: usize,
    pub s: f64,
    pub q: f64,
}

impl SphereParams {
    pub fn new(d: usize, s: f64) -> Result<Self> {
        if d < 2 {
            return Err(domain(format!("sphere dimension must be >= 2, got {d}")));
        }
        let half = d as f64 / 2.0;
        if !(s > 0.0 && s < half) {
            return Err(domain(format!("s must lie in (0, {half}), got {s}")));
        }
        Ok(Self { d, s, q: 2.0 * d as f64 / (d as f64 - 2.0 * s) })
    }

    pub fn geometry(&self) -> SphereGeometry {
        SphereGeometry { dim: self.d, area: sphere_area(self.d), subsphere_area: sphere_area(self.d - 1) }
    }

    /// `Γ(l+d/2+s)/Γ(l+d/2-s)`, the eigenvalue of `A_s` on degree `l`.
    pub fn gamma_ratio_at(&self, l: usize) -> f64 {
        let h = l as f64 + self.d as f64 / 2.0;
        gamma_ratio(h + self.s, h - self.s).expect("s < d/2 keeps both arguments positive")
    }

    pub fn weight_exponent(&self) -> f64 {
        (self.d as f64 - 2.0) / 2.0
    }

    pub fn gegenbauer_index(&self) -> f64 {
        (self.d as f64 - 1.0) / 2.0
    }
}

/// A function `F(ω·e)` on `S^d`.
#[derive(Debug, Clone)]
pub struct ZonalFn {
    pub params: SphereParams,
    pub axis: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub samples: Vec<f64>,
    pub bandlimit: usize,
    rule: Arc<QuadratureRule>,
}

/// North pole `e_{d+1}` of `S^d ⊂ R^{d+1}`.
pub fn north_pole(d: usize) -> Vec<f64> {
    let mut e = vec![0.0; d + 1];
    e[d] = 1.0;
    e
}

fn basis_values(params: &SphereParams, l: usize, t: f64) -> Vec<f64> {
    let scale = params.geometry().subsphere_area.sqrt();
    let mut p = orthonormal_polys(l, params.weight_exponent(), t);
    p.iter_mut().for_each(|v| *v /= scale);
    p
}

/// Values of the orthonormal zonal basis `Y_0..Y_l` at `t`.
pub fn zonal_basis(params: &SphereParams, l: usize, t: f64) -> Vec<f64> {
    basis_values(params, l, t)
}

impl ZonalFn {
    /// Samples `f` at the nodes of `gauss_rule(quad_order, (d-2)/2)` and analyzes.
    pub fn from_fn<F: Fn(f64) -> f64>(params: SphereParams, bandlimit: usize, quad_order: usize, f: F) -> Result<Self> {
        let rule = gauss_rule_cached(quad_order, params.weight_exponent())?;
        let samples: Vec<f64> = rule.nodes.iter().map(|&t| f(t)).collect();
        Self::analyze_on(samples, params, bandlimit, rule)
    }

    /// Bandlimited function with the given coefficients.
    pub fn from_coeffs(params: SphereParams, coeffs: Vec<f64>, quad_order: usize) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(precondition("at least one coefficient required"));
        }
        let bandlimit = coeffs.len() - 1;
        if 2 * bandlimit > quad_order {
            return Err(precondition(format!("bandlimit {bandlimit} aliases with quadrature order {quad_order}")));
        }
        let rule = gauss_rule_cached(quad_order, params.weight_exponent())?;
        let samples = rule.nodes.iter().map(|&t| dot(&basis_values(&params, bandlimit, t), &coeffs)).collect();
        Ok(Self { params, axis: north_pole(params.d), coeffs, samples, bandlimit, rule })
    }

    /// Degree-`l` zonal harmonic with unit L² norm.
    pub fn harmonic(params: SphereParams, l: usize, bandlimit: usize, quad_order: usize) -> Result<Self> {
        if l > bandlimit {
            return Err(precondition(format!("degree {l} exceeds bandlimit {bandlimit}")));
        }
        let mut c = vec![0.0; bandlimit + 1];
        c[l] = 1.0;
        Self::from_coeffs(params, c, quad_order)
    }

    /// Quadrature samples to coefficients; the quadrature order is `samples.len()`.
    pub fn analyze(samples: Vec<f64>, params: SphereParams, bandlimit: usize) -> Result<Self> {
        let rule = gauss_rule_cached(samples.len(), params.weight_exponent())?;
        Self::analyze_on(samples, params, bandlimit, rule)
    }

    fn analyze_on(
        samples: Vec<f64>,
        params: SphereParams,
        bandlimit: usize,
        rule: Arc<QuadratureRule>,
    ) -> Result<Self> {
        if 2 * bandlimit > rule.order {
            return Err(precondition(format!("bandlimit {bandlimit} aliases with quadrature order {}", rule.order)));
        }
        if samples.len() != rule.order {
            return Err(precondition("sample count does not match quadrature order"));
        }
        let area = params.geometry().subsphere_area;
        let mut coeffs = vec![0.0; bandlimit + 1];
        for ((&t, &w), &f) in rule.nodes.iter().zip(&rule.weights).zip(&samples) {
            let y = basis_values(&params, bandlimit, t);
            for (c, yl) in coeffs.iter_mut().zip(&y) {
                *c += area * w * f * yl;
            }
        }
        Ok(Self { params, axis: north_pole(params.d), coeffs, samples, bandlimit, rule })
    }

    /// Coefficients to samples at the quadrature nodes.
    pub fn synthesize(&self) -> Vec<f64> {
        self.rule.nodes.iter().map(|&t| self.eval(t)).collect()
    }

    /// Bandlimited evaluation `Σ c_l Y_l(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        dot(&basis_values(&self.params, self.bandlimit, t), &self.coeffs)
    }

    /// Derivative of the bandlimited profile in `t`.
    pub fn eval_derivative(&self, t: f64) -> f64 {
        let (_, dp) = orthonormal_polys_with_derivative(self.bandlimit, self.params.weight_exponent(), t);
        dot(&dp, &self.coeffs) / self.params.geometry().subsphere_area.sqrt()
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn quad_order(&self) -> usize {
        self.rule.order
    }

    pub fn with_axis(mut self, axis: Vec<f64>) -> Result<Self> {
        if axis.len() != self.params.d + 1 {
            return Err(precondition("axis dimension must be d+1"));
        }
        let n = dot(&axis, &axis).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(precondition(format!("axis must be a unit vector, |axis| = {n}")));
        }
        self.axis = axis;
        Ok(self)
    }

    /// New function on the same grid from samples.
    pub fn resampled(&self, samples: Vec<f64>) -> Result<Self> {
        let mut out = Self::analyze_on(samples, self.params, self.bandlimit, Arc::clone(&self.rule))?;
        out.axis = self.axis.clone();
        Ok(out)
    }

    /// Same profile on a different grid and bandlimit.
    pub fn regrid(&self, bandlimit: usize, quad_order: usize) -> Result<Self> {
        let mut c = self.coeffs.clone();
        c.resize(bandlimit + 1, 0.0);
        let mut out = Self::from_coeffs(self.params, c, quad_order)?;
        out.axis = self.axis.clone();
        Ok(out)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|v| *v *= c);
        out.samples.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `a·self + b·other` on a shared grid.
    pub fn lincomb(&self, a: f64, other: &ZonalFn, b: f64) -> Result<Self> {
        if self.rule.order != other.rule.order || self.bandlimit != other.bandlimit || self.params != other.params {
            return Err(precondition("lincomb requires matching grids and parameters"));
        }
        if self.axis != other.axis {
            return Err(precondition("lincomb requires a common axis"));
        }
        let mut out = self.clone();
        for (x, y) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *x = a * *x + b * y;
        }
        for (x, y) in out.samples.iter_mut().zip(&other.samples) {
            *x = a * *x + b * y;
        }
        Ok(out)
    }

    /// `P_l U`, the single-coefficient truncation.
    pub fn project(&self, l: usize) -> Self {
        let mut c = vec![0.0; self.bandlimit + 1];
        if l <= self.bandlimit {
            c[l] = self.coeffs[l];
        }
        let mut out = Self::from_coeffs(self.params, c, self.rule.order).expect("grid already validated");
        out.axis = self.axis.clone();
        out
    }

    /// `∫ G(F(ω·e)) dω` by the zonal quadrature.
    pub fn integrate_samples<G: Fn(f64, f64) -> f64>(&self, g: G) -> f64 {
        let area = self.params.geometry().subsphere_area;
        area * self
            .rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .zip(&self.samples)
            .map(|((&t, &w), &f)| w * g(t, f))
            .sum::<f64>()
    }

    pub fn integral(&self) -> f64 {
        self.integrate_samples(|_, f| f)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn l2_norm_sq_quadrature(&self) -> f64 {
        self.integrate_samples(|_, f| f * f)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `S_{d,s} = Γ(d/2+s)/Γ(d/2-s) |S^d|^{2s/d}`.
pub fn sharp_constant(params: &SphereParams) -> f64 {
    params.gamma_ratio_at(0) * params.geometry().area.powf(2.0 * params.s / params.d as f64)
}

/// `‖U‖_p` with respect to unnormalized surface measure.
pub fn lq_norm(u: &ZonalFn, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(domain(format!("lq_norm requires p >= 1, got {p}")));
    }
    Ok(u.integrate_samples(|_, f| f.abs().powf(p)).powf(1.0 / p))
}

/// `E_s[U] = Σ Γ(l+d/2+s)/Γ(l+d/2-s) ‖P_l U‖²`.
pub fn energy(u: &ZonalFn) -> f64 {
    u.coeffs.iter().enumerate().map(|(l, c)| u.params.gamma_ratio_at(l) * c * c).sum()
}

/// `∫ |∇U|² + d(d-2)/4 U²` by quadrature of the profile derivative; equals
/// `energy` when `s = 1`.
pub fn gradient_energy(u: &ZonalFn) -> f64 {
    let d = u.params.d as f64;
    let area = u.params.geometry().subsphere_area;
    area * u
        .rule
        .nodes
        .iter()
        .zip(&u.rule.weights)
        .map(|(&t, &w)| {
            let f = u.eval(t);
            let df = u.eval_derivative(t);
            w * ((1.0 - t * t) * df * df + d * (d - 2.0) / 4.0 * f * f)
        })
        .sum::<f64>()
}

/// Eigenvalue of the kernel `(1-ω·ω')^{-alpha}` on degree-`l` harmonics of `S^d`.
pub fn funk_hecke_eigenvalue(d: usize, alpha: f64, l: usize) -> Result<f64> {
    let df = d as f64;
    if d < 2 || !(alpha > 0.0 && alpha < df / 2.0) {
        return Err(domain(format!("funk_hecke_eigenvalue requires d >= 2 and alpha in (0, d/2), got ({d}, {alpha})")));
    }
    let lf = l as f64;
    let log_val = df / 2.0 * (4.0 * std::f64::consts::PI).ln() - alpha * std::f64::consts::LN_2
        + log_gamma_ratio(df / 2.0 - alpha, alpha)?
        + log_gamma_ratio(lf + alpha, lf + df - alpha)?;
    Ok(log_val.exp())
}

/// `⟨R, L_s R⟩ = Σ_{l≥2} (Γratio(l) - Γratio(1)) ‖P_l R‖²`.
pub fn hessian_form(r: &ZonalFn) -> f64 {
    let g1 = r.params.gamma_ratio_at(1);
    r.coeffs.iter().enumerate().skip(2).map(|(l, c)| (r.params.gamma_ratio_at(l) - g1) * c * c).sum()
}

/// `⟨R, A_s R⟩ - (q-1)Γ_0 ‖R‖² + (q-2)Γ_0 |S^d|^{-1} (∫R)²`, the undiagonalized form.
pub fn hessian_form_operator(r: &ZonalFn) -> f64 {
    let p = &r.params;
    let g0 = p.gamma_ratio_at(0);
    let mean = r.integral();
    energy(r) - (p.q - 1.0) * g0 * r.l2_norm_sq_quadrature() + (p.q - 2.0) * g0 * mean * mean / p.geometry().area
}

/// `w_s(l) = 4s/(d-2s) · l(l+d-1) / ((l-1+d/2+s)(l+d/2-s))`.
pub fn w_weight(d: usize, s: f64, l: usize) -> f64 {
    let (df, lf) = (d as f64, l as f64);
    4.0 * s / (df - 2.0 * s) * lf * (lf + df - 1.0) / ((lf - 1.0 + df / 2.0 + s) * (lf + df / 2.0 - s))
}

/// The three-term expression that defines `w_s(l)`.
pub fn w_weight_three_term(d: usize, s: f64, l: usize) -> f64 {
    let (df, lf) = (d as f64, l as f64);
    let h = df / 2.0;
    (df + 2.0 * s) / (df - 2.0 * s)
        - (lf - 1.0 + h - s) / (lf - 1.0 + h + s) * lf / (2.0 * lf + df - 1.0)
        - (lf + h + s) / (lf + h - s) * (lf + df - 1.0) / (2.0 * lf + df - 1.0)
}

/// Zonal kernel of the projection onto degree-`l` harmonics, normalized by
/// `Tr P_l = ν_l`: `P_l(t) = ν_l C_l(t) / (|S^d| C_l(1))`.
pub fn projection_kernel(d: usize, l: usize, t: f64) -> f64 {
    let alpha = (d as f64 - 1.0) / 2.0;
    let c = gegenbauer_all(l, alpha, t)[l];
    harmonic_multiplicity(d, l) as f64 * c / (sphere_area(d) * gegenbauer_at_one(l, alpha))
}

/// Largest residual of `t P_l = (l+1)/(2l+d+1) P_{l+1} + (l+d-2)/(2l+d-3) P_{l-1}`
/// over `t_samples`, divided by `max(1, P_{l+1}(1))`.
pub fn coordinate_multiplier_identity_check(d: usize, l: usize, t_samples: &[f64]) -> Result<f64> {
    if d < 2 || l < 1 {
        return Err(precondition(format!("requires d >= 2 and l >= 1, got ({d}, {l})")));
    }
    let (df, lf) = (d as f64, l as f64);
    let a = (lf + 1.0) / (2.0 * lf + df + 1.0);
    let b = (lf + df - 2.0) / (2.0 * lf + df - 3.0);
    let scale = projection_kernel(d, l + 1, 1.0).abs().max(1.0);
    let mut worst: f64 = 0.0;
    for &t in t_samples {
        if !(-1.0..=1.0).contains(&t) {
            return Err(domain(format!("sample {t} outside [-1, 1]")));
        }
        let r =
            t * projection_kernel(d, l, t) - a * projection_kernel(d, l + 1, t) - b * projection_kernel(d, l - 1, t);
        worst = worst.max(r.abs());
    }
    Ok(worst / scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubcriticalReport {
    pub constant: f64,
    /// Lowest degree attaining the maximum.
    pub argmax: usize,
    /// Every degree within `1e-12` relative of the maximum; degrees 0 and 1
    /// tie exactly since `(q-1)Γratio(0)/(d/(q-2)) = Γratio(1)/(d + d/(q-2))`.
    pub maximizers: Vec<usize>,
    /// `max_{l≥2} ratio / constant`.
    pub higher_degree_ratio: f64,
    pub violations: usize,
    pub worst_margin: f64,
    pub tail_monotone: bool,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SubcriticalConfig {
    pub l_max: usize,
    pub random_trials: usize,
    pub bandlimit: usize,
    pub quad_order: usize,
    pub seed: u64,
}

impl Default for SubcriticalConfig {
    fn default() -> Self {
        Self { l_max: 500, random_trials: 50, bandlimit: 16, quad_order: 96, seed: 7 }
    }
}

/// Scans `Γratio(l) / (l(l+d-1) + d/(q-2))` with `s = d(1/2 - 1/q)` and checks
/// `∫|∇U|² + d/(q-2) U² ≥ d/(q-2) |S^d|^{1-2/q} ‖U‖_q²` on random zonal `U`.
pub fn subcritical_check(d: usize, q_sub: f64, cfg: &SubcriticalConfig) -> Result<SubcriticalReport> {
    let q_crit = if d > 2 { 2.0 * d as f64 / (d as f64 - 2.0) } else { f64::INFINITY };
    if d < 2 || !(q_sub > 2.0 && q_sub < q_crit) {
        return Err(domain(format!("q_sub must lie in (2, {q_crit}) for d = {d}, got {q_sub}")));
    }
    let df = d as f64;
    let s = df * (0.5 - 1.0 / q_sub);
    let params = SphereParams::new(d, s)?;
    let mass = df / (q_sub - 2.0);
    let ratios: Vec<f64> = (0..=cfg.l_max)
        .map(|l| {
            let lf = l as f64;
            params.gamma_ratio_at(l) / (lf * (lf + df - 1.0) + mass)
        })
        .collect();
    let constant = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let maximizers: Vec<usize> = (0..ratios.len()).filter(|&l| ratios[l] >= constant * (1.0 - 1e-12)).collect();
    let argmax = maximizers[0];
    let higher_degree_ratio = ratios[2..].iter().copied().fold(f64::NEG_INFINITY, f64::max) / constant;
    let tail_start = cfg.l_max / 2;
    let tail_monotone = ratios[tail_start..].windows(2).all(|w| w[1] < w[0]);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let area = params.geometry().area;
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    for _ in 0..cfg.random_trials {
        let coeffs: Vec<f64> = (0..=cfg.bandlimit)
            .map(|l| {
                let base = if l == 0 { rng.random_range(0.0..2.0) } else { 0.0 };
                base + rng.random_range(-1.0..1.0) / (1.0 + l as f64)
            })
            .collect();
        let u = ZonalFn::from_coeffs(params, coeffs, cfg.quad_order)?;
        let lhs: f64 = u
            .coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| {
                let lf = l as f64;
                (lf * (lf + df - 1.0) + mass) * c * c
            })
            .sum();
        let rhs = mass * area.powf(1.0 - 2.0 / q_sub) * lq_norm(&u, q_sub)?.powi(2);
        let margin = (lhs - rhs) / lhs;
        worst_margin = worst_margin.min(margin);
        if margin < -1e-9 {
            violations += 1;
        }
    }
    Ok(SubcriticalReport {
        constant,
        argmax,
        maximizers,
        higher_degree_ratio,
        violations,
        worst_margin,
        tail_monotone,
        samples: cfg.random_trials,
    })
}

/// Eigenvalues of a discretized operator block with kernel count.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
    pub modes: usize,
    pub quad_order: usize,
    pub kernel_tol: f64,
}

impl SpectrumReport {
    pub fn new(mut eigenvalues: Vec<f64>, kernel_tol: f64, modes: usize, quad_order: usize) -> Self {
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        let kernel_dim = eigenvalues.iter().filter(|v| v.abs() < kernel_tol).count();
        Self { eigenvalues, kernel_dim, modes, quad_order, kernel_tol }
    }

    /// Smallest `|λ|` outside the kernel.
    pub fn gap(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.abs()).filter(|v| *v >= self.kernel_tol).fold(f64::INFINITY, f64::min)
    }

    /// Largest `|λ|` inside the kernel.
    pub fn kernel_max(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.abs()).filter(|v| *v < self.kernel_tol).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(d: usize, s: f64) -> SphereParams {
        SphereParams::new(d, s).unwrap()
    }

    #[test]
    fn params_validate() {
        assert!(SphereParams::new(3, 1.5).is_err());
        assert!(SphereParams::new(3, 0.0).is_err());
        assert!(SphereParams::new(1, 0.2).is_err());
        let sp = p(3, 1.0);
        assert!((sp.q - 6.0).abs() < 1e-14);
    }

    #[test]
    fn constant_and_linear_coefficients() {
        let sp = p(3, 1.0);
        let one = ZonalFn::from_fn(sp, 8, 32, |_| 1.0).unwrap();
        assert!((one.coeffs[0] - sp.geometry().area.sqrt()).abs() < 1e-12);
        assert!(one.coeffs[1..].iter().all(|c| c.abs() < 1e-12));
        let lin = ZonalFn::from_fn(sp, 8, 32, |t| t).unwrap();
        for (l, c) in lin.coeffs.iter().enumerate() {
            assert_eq!(c.abs() > 1e-12, l == 1);
        }
        let sq = ZonalFn::from_fn(sp, 8, 32, |t| t * t).unwrap();
        for (l, c) in sq.coeffs.iter().enumerate() {
            assert_eq!(c.abs() > 1e-12, l == 0 || l == 2, "l={l}");
        }
    }

    #[test]
    fn aliasing_rejected() {
        let sp = p(3, 1.0);
        assert!(ZonalFn::from_fn(sp, 20, 32, |t| t).is_err());
    }

    #[test]
    fn sharp_constant_examples() {
        let s31 = sharp_constant(&p(3, 1.0));
        assert!((s31 - 3.0 * (PI / 2.0).powf(4.0 / 3.0)).abs() < 1e-12);
        assert!((s31 - 5.47790).abs() < 5e-6);
        let s41 = sharp_constant(&p(4, 1.0));
        assert!((s41 - 2.0 * (8.0 * PI * PI / 3.0_f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lq_norm_of_coordinate() {
        for d in 2..7 {
            let sp = p(d, 0.5);
            let u = ZonalFn::from_fn(sp, 4, 16, |t| t).unwrap();
            let exact = (sp.geometry().area / (d as f64 + 1.0)).sqrt();
            assert!((lq_norm(&u, 2.0).unwrap() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_examples() {
        let sp = p(3, 1.0);
        let one = ZonalFn::from_fn(sp, 4, 16, |_| 1.0).unwrap();
        assert!((energy(&one) - sp.gamma_ratio_at(0) * sp.geometry().area).abs() < 1e-12);
        let lin = ZonalFn::from_fn(sp, 4, 16, |t| t).unwrap();
        let expected = 3.75 * (2.0 * PI * PI / 4.0);
        assert!((energy(&lin) - expected).abs() < 1e-11);
        assert!((gradient_energy(&lin) - expected).abs() < 1e-11);
    }

    #[test]
    fn funk_hecke_low_degree() {
        let v = funk_hecke_eigenvalue(2, 0.5, 0).unwrap();
        assert!((v - 4.0 * 2f64.sqrt() * PI).abs() < 1e-12);
        let r = funk_hecke_eigenvalue(3, 1.0, 401).unwrap() / funk_hecke_eigenvalue(3, 1.0, 400).unwrap();
        assert!((r - 1.0).abs() < 1e-2);
    }

    #[test]
    fn hessian_vanishes_on_low_degrees() {
        let sp = p(3, 1.0);
        let r = ZonalFn::from_coeffs(sp, vec![0.3, -1.2, 0.0, 0.0], 16).unwrap();
        assert!(hessian_form(&r).abs() < 1e-14);
        assert!(hessian_form_operator(&r).abs() < 1e-10);
        let h2 = ZonalFn::harmonic(sp, 2, 4, 16).unwrap();
        // Γratio(l) at d=3, s=1 is (l+3/2)(l+1/2)
        assert!((hessian_form(&h2) - (3.5 * 2.5 - 2.5 * 1.5)).abs() < 1e-12);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(w_weight(3, 1.0, 0), 0.0);
        assert!((w_weight(3, 1.0, 1) - 3.2).abs() < 1e-14);
        for d in 2..8 {
            for &s in &[0.1, 0.5, 0.9] {
                for l in 0..40 {
                    assert!((w_weight(d, s, l) - w_weight_three_term(d, s, l)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn multiplier_identity_low_degree() {
        let ts = [-1.0, -0.3, 0.0, 0.4, 1.0];
        for d in 2..7 {
            for l in 1..=30 {
                assert!(coordinate_multiplier_identity_check(d, l, &ts).unwrap() < 1e-10, "d={d} l={l}");
            }
        }
        // d = 2, l = 2 at t = 0.4 with explicit Legendre polynomials
        let leg = |l: usize, t: f64| match l {
            1 => t,
            2 => 0.5 * (3.0 * t * t - 1.0),
            3 => 0.5 * (5.0 * t.powi(3) - 3.0 * t),
            _ => unreachable!(),
        };
        let pk = |l: usize, t: f64| (2 * l + 1) as f64 * leg(l, t) / (4.0 * PI);
        let t = 0.4;
        let res = t * pk(2, t) - 3.0 / 7.0 * pk(3, t) - 2.0 / 3.0 * pk(1, t);
        assert!(res.abs() < 1e-15);
        assert!((projection_kernel(2, 2, t) - pk(2, t)).abs() < 1e-15);
    }

    #[test]
    fn subcritical_small() {
        let cfg = SubcriticalConfig { l_max: 200, random_trials: 10, ..Default::default() };
        let r = subcritical_check(3, 4.0, &cfg).unwrap();
        assert_eq!(r.argmax, 0);
        assert_eq!(r.maximizers, vec![0, 1]);
        assert!(r.higher_degree_ratio < 1.0);
        assert_eq!(r.violations, 0, "{r:?}");
        assert!(r.tail_monotone);
        assert!(subcritical_check(3, 6.0, &cfg).is_err());
        assert!(subcritical_check(3, 2.0, &cfg).is_err());
    }

    #[test]
    fn spectrum_report_counts() {
        let r = SpectrumReport::new(vec![3.0, -1e-9, 1e-8, 0.5], 1e-6, 4, 0);
        assert_eq!(r.eigenvalues[0], -1e-9);
        assert_eq!(r.kernel_dim, 2);
        assert!((r.gap() - 0.5).abs() < 1e-15);
    }
}
