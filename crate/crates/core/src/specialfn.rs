//! Gamma functions, Gegenbauer polynomials, harmonic multiplicities and
//! Gauss rules for the symmetric Jacobi weight `(1-t^2)^beta`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{computation, domain, precondition, Result};

const STIRLING_SHIFT: f64 = 15.0;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k-1)) for k = 1..8
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

fn stirling_tail(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in STIRLING_COEFFS.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("log_gamma requires x > 0, got {x}")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    let mut y = x;
    let mut prod = 1.0;
    while y < STIRLING_SHIFT {
        prod *= y;
        y += 1.0;
    }
    let lg = (y - 0.5) * y.ln() - y + LN_SQRT_2PI + stirling_tail(y);
    Ok(lg - prod.ln())
}

/// `Γ(a)/Γ(b)`, evaluated in the log domain.
///
/// Both arguments are shifted together so the Stirling difference can use
/// `ln_1p`; this keeps ratios such as `Γ(l+d/2+s)/Γ(l+d/2-s)` accurate for
/// large `l`.
pub fn gamma_ratio(a: f64, b: f64) -> Result<f64> {
    Ok(log_gamma_ratio(a, b)?.exp())
}

/// `ln(Γ(a)/Γ(b))`.
pub fn log_gamma_ratio(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(domain(format!("gamma_ratio requires a, b > 0, got ({a}, {b})")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (mut x, mut y) = (a, b);
    let mut ratio = 1.0;
    while x < STIRLING_SHIFT || y < STIRLING_SHIFT {
        ratio *= y / x;
        x += 1.0;
        y += 1.0;
    }
    let h = x - y;
    let main = (y - 0.5) * (h / y).ln_1p() + h * x.ln() - h;
    Ok(main + stirling_tail(x) - stirling_tail(y) + ratio.ln())
}

/// Gegenbauer polynomial `C_l^{(alpha)}(t)` by upward three-term recursion.
pub fn gegenbauer(l: usize, alpha: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(domain(format!("gegenbauer requires alpha > 0, got {alpha}")));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(domain(format!("gegenbauer requires t in [-1, 1], got {t}")));
    }
    Ok(gegenbauer_all(l, alpha, t)[l])
}

/// `C_0^{(alpha)}(t), ..., C_l^{(alpha)}(t)`.
pub fn gegenbauer_all(l: usize, alpha: f64, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l + 1);
    out.push(1.0);
    if l == 0 {
        return out;
    }
    out.push(2.0 * alpha * t);
    for n in 1..l {
        let nf = n as f64;
        let next = (2.0 * (nf + alpha) * t * out[n] - (nf + 2.0 * alpha - 1.0) * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
    out
}

/// `C_l^{(alpha)}(1) = binom(l + 2 alpha - 1, l)`.
pub fn gegenbauer_at_one(l: usize, alpha: f64) -> f64 {
    let mut v = 1.0;
    for k in 1..=l {
        let kf = k as f64;
        v *= (kf + 2.0 * alpha - 1.0) / kf;
    }
    v
}

/// Dimension of the degree-`l` spherical harmonics on `S^d`.
pub fn harmonic_multiplicity(d: usize, l: usize) -> u128 {
    if d == 1 {
        return if l == 0 { 1 } else { 2 };
    }
    // binom(d-2+l, l) computed incrementally stays integral at every step.
    let mut binom: u128 = 1;
    for k in 1..=l as u128 {
        binom = binom * (d as u128 - 2 + k) / k;
    }
    binom * (d as u128 + 2 * l as u128 - 1) / (d as u128 - 1)
}

/// `|S^n|`, the surface area of the unit sphere in `R^{n+1}`.
pub fn sphere_area(n: usize) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    // log_gamma only fails for nonpositive input
    2.0 * PI.powf(h) / log_gamma(h).map(f64::exp).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereGeometry {
    pub dim: usize,
    pub area: f64,
    pub subsphere_area: f64,
}

impl SphereGeometry {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(domain(format!("sphere dimension must be >= 2, got {dim}")));
        }
        Ok(Self { dim, area: sphere_area(dim), subsphere_area: sphere_area(dim - 1) })
    }
}

/// Gauss rule for the weight `(1-t^2)^beta` on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub weight_exponent: f64,
    pub order: usize,
}

impl QuadratureRule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `∫_{-1}^{1} (1-t^2)^beta dt = B(1/2, beta+1)`.
pub fn jacobi_mass(beta: f64) -> f64 {
    PI.sqrt() * gamma_ratio(beta + 1.0, beta + 1.5).unwrap_or(f64::NAN)
}

fn recurrence_coeff(k: usize, beta: f64) -> f64 {
    let k = k as f64;
    let den = (2.0 * k + 2.0 * beta).powi(2) - 1.0;
    (k * (k + 2.0 * beta) / den).sqrt()
}

/// Orthonormal polynomial values `p_0..p_{n}` and derivatives at `x`.
fn orthonormal_with_derivative(n: usize, beta: f64, mu0: f64, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0 / mu0.sqrt();
    for k in 0..n {
        let bk1 = recurrence_coeff(k + 1, beta);
        let (pm, dpm, bk) = if k == 0 { (0.0, 0.0, 0.0) } else { (p[k - 1], dp[k - 1], recurrence_coeff(k, beta)) };
        p[k + 1] = (x * p[k] - bk * pm) / bk1;
        dp[k + 1] = (p[k] + x * dp[k] - bk * dpm) / bk1;
    }
    (p, dp)
}

/// Gauss rule with `order` nodes for the weight `(1-t^2)^beta`.
///
/// Golub-Welsch on the symmetric Jacobi matrix, then one Newton polish per
/// node and Christoffel weights from the orthonormal recurrence.
pub fn gauss_rule(order: usize, beta: f64) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(precondition("gauss_rule order must be >= 1"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(domain(format!("gauss_rule requires beta >= 0, got {beta}")));
    }
    let n = order;
    let mu0 = jacobi_mass(beta);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = recurrence_coeff(k, beta);
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::try_new(jac, f64::EPSILON, 10_000)
        .ok_or_else(|| computation(format!("Jacobi matrix eigensolve failed (order {n})")))?;
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = orthonormal_with_derivative(n, beta, mu0, *x);
            if dp[n] == 0.0 {
                break;
            }
            let step = p[n] / dp[n];
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (p, _) = orthonormal_with_derivative(n - 1, beta, mu0, *x);
        let s: f64 = p.iter().map(|v| v * v).sum();
        weights.push(1.0 / s);
    }
    if nodes.iter().any(|x| !(x.abs() < 1.0)) || weights.iter().any(|w| !(*w > 0.0)) {
        return Err(computation(format!("gauss_rule({n}, {beta}) produced invalid nodes")));
    }
    // Exact symmetry of the weight.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights, weight_exponent: beta, order: n })
}

type RuleCache = Mutex<HashMap<(usize, u64), Arc<QuadratureRule>>>;

/// Memoized [`gauss_rule`]; rules are immutable once built.
pub fn gauss_rule_cached(order: usize, beta: f64) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (order, beta.to_bits());
    if let Some(r) = cache.lock().map_err(|_| computation("rule cache poisoned"))?.get(&key) {
        return Ok(Arc::clone(r));
    }
    let rule = Arc::new(gauss_rule(order, beta)?);
    cache.lock().map_err(|_| computation("rule cache poisoned"))?.insert(key, Arc::clone(&rule));
    Ok(rule)
}

/// Orthonormal polynomials for the weight `(1-t^2)^beta`, degrees `0..=l`.
pub fn orthonormal_polys(l: usize, beta: f64, t: f64) -> Vec<f64> {
    let mu0 = jacobi_mass(beta);
    let mut p = vec![0.0; l + 1];
    p[0] = 1.0 / mu0.sqrt();
    for k in 0..l {
        let bk1 = recurrence_coeff(k + 1, beta);
        let pm = if k == 0 { 0.0 } else { recurrence_coeff(k, beta) * p[k - 1] };
        p[k + 1] = (t * p[k] - pm) / bk1;
    }
    p
}

/// Orthonormal polynomials together with their first derivatives.
pub fn orthonormal_polys_with_derivative(l: usize, beta: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
    orthonormal_with_derivative(l, beta, jacobi_mass(beta), t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta_fn(a: f64, b: f64) -> f64 {
        (log_gamma(a).unwrap() + log_gamma(b).unwrap() - log_gamma(a + b).unwrap()).exp()
    }

    #[test]
    fn log_gamma_trivial_values() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert!((log_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-15);
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-2.5).is_err());
    }

    #[test]
    fn log_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..60 {
            let lg = log_gamma(n as f64 + 1.0).unwrap();
            fact *= n as f64;
            if n >= 2 {
                assert!(((lg - fact.ln()) / fact.ln()).abs() < 1e-14, "n={n}");
            }
        }
    }

    #[test]
    fn gamma_ratio_products() {
        assert!((gamma_ratio(2.5, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(gamma_ratio(3.7, 3.7).unwrap(), 1.0);
        for l in 0..40 {
            let lf = l as f64;
            let exact = (lf + 1.5) * (lf + 0.5);
            let g = gamma_ratio(lf + 2.5, lf + 0.5).unwrap();
            assert!((g / exact - 1.0).abs() < 1e-14, "l={l}");
        }
        let big = gamma_ratio(10_000.5, 9_999.5).unwrap();
        assert!((big / 9_999.5 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gegenbauer_at_one_is_binomial() {
        for l in 0..15 {
            for &alpha in &[0.5, 1.0, 1.5, 2.0, 3.5] {
                let v = gegenbauer(l, alpha, 1.0).unwrap();
                let b = gegenbauer_at_one(l, alpha);
                assert!((v - b).abs() <= 1e-12 * b.max(1.0));
            }
        }
    }

    #[test]
    fn gegenbauer_unit_alpha_is_chebyshev_u() {
        let t: f64 = 0.3;
        let th = t.acos();
        let u4 = (5.0 * th).sin() / th.sin();
        assert!((gegenbauer(4, 1.0, t).unwrap() - u4).abs() < 1e-14);
        assert!((u4 - (16.0 * t.powi(4) - 12.0 * t * t + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn multiplicities() {
        assert_eq!(harmonic_multiplicity(2, 1), 3);
        assert_eq!(harmonic_multiplicity(3, 2), 9);
        assert_eq!(harmonic_multiplicity(5, 0), 1);
        for d in 2..8 {
            for l in 0..20 {
                let num = log_gamma((d + l - 1) as f64).unwrap() + ((d + 2 * l - 1) as f64).ln()
                    - log_gamma(l as f64 + 1.0).unwrap()
                    - log_gamma(d as f64).unwrap();
                let nu = harmonic_multiplicity(d, l) as f64;
                assert!((num.exp() / nu - 1.0).abs() < 1e-12, "d={d} l={l}");
            }
        }
    }

    #[test]
    fn gauss_rule_midpoint() {
        let r = gauss_rule(1, 0.0).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_rule_mass_and_moments() {
        for &beta in &[0.0, 0.5, 1.0, 1.5, 2.5] {
            for &n in &[2usize, 7, 32, 100] {
                let r = gauss_rule(n, beta).unwrap();
                let mass: f64 = r.weights.iter().sum();
                assert!((mass / jacobi_mass(beta) - 1.0).abs() < 1e-12, "beta={beta} n={n}");
                // ∫ t^{2k} (1-t^2)^beta = B(k+1/2, beta+1)
                for k in 0..n {
                    let exact = beta_fn(k as f64 + 0.5, beta + 1.0);
                    let got = r.integrate(|t| t.powi(2 * k as i32));
                    assert!(((got - exact) / exact).abs() < 1e-10, "beta={beta} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        for d in 2..10 {
            let g = SphereGeometry::new(d).unwrap();
            let r = gauss_rule(20, (d as f64 - 2.0) / 2.0).unwrap();
            let rec = g.subsphere_area * r.weights.iter().sum::<f64>();
            assert!((rec / g.area - 1.0).abs() < 1e-13);
        }
        assert!(SphereGeometry::new(1).is_err());
    }
}
