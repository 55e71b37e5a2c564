//! Duality between `A: R^n → ℓ^q(m)` and its adjoint at finite dimension:
//! norms, optimizer correspondence and the maps `f ↦ g`, `g ↦ f`.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{degenerate, domain, precondition, Result};
use crate::optimize::{bfgs_minimize, BfgsOptions};

const ASCENT_MAX_ITER: usize = 200_000;
const RANDOM_STARTS: usize = 16;
const UNIT_TOL: f64 = 1e-10;

/// `‖v‖_p` with counting measure.
pub fn lp_norm(v: &DVector<f64>, p: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `q' = q/(q-1)`.
pub fn conjugate(q: f64) -> f64 {
    q / (q - 1.0)
}

fn signed_pow(x: f64, e: f64) -> f64 {
    x.signum() * x.abs().powf(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteOperator {
    pub matrix: DMatrix<f64>,
    pub q: f64,
    /// `max_{|f|=1} ‖Af‖_q`.
    pub op_norm: f64,
    /// A maximizer, sign-normalized, lexicographically smallest among ties.
    pub maximizer: DVector<f64>,
    /// `max_{‖g‖_{q'}=1} |A^*g|`, computed by an independent ascent.
    pub adjoint_norm: f64,
}

impl FiniteOperator {
    pub fn new(matrix: DMatrix<f64>, q: f64, seed: u64) -> Result<Self> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(domain(format!("exponent q must be in (1, inf), got {q}")));
        }
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(domain("operator must have at least one row and column"));
        }
        let (op_norm, maximizer) = primal_ascent(&matrix, q, seed);
        let adjoint_norm = adjoint_ascent(&matrix, q, seed.wrapping_add(1));
        Ok(Self { matrix, q, op_norm, maximizer, adjoint_norm })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.matrix.nrows(), self.matrix.ncols())
    }

    /// `g = ‖Af‖_q^{1-q} |Af|^{q-2} Af` for a unit `f`.
    pub fn dual_vector(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        if (f.norm() - 1.0).abs() > UNIT_TOL {
            return Err(precondition(format!("dual_vector needs |f| = 1, got {}", f.norm())));
        }
        dual_map(&self.matrix, self.q, f)
    }

    /// `f = |A^*g|^{-1} A^*g` for `‖g‖_{q'} = 1`.
    pub fn primal_vector(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        let n = lp_norm(g, conjugate(self.q));
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(precondition(format!("primal_vector needs ‖g‖_q' = 1, got {n}")));
        }
        primal_map(&self.matrix, g)
    }

    /// `(‖Af_k‖_q, |A^*g_k|)` along the alternating iteration from `f0`.
    pub fn ascent_trace(&self, f0: &DVector<f64>, steps: usize) -> Result<Vec<(f64, f64)>> {
        let mut f = f0.normalize();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let g = dual_map(&self.matrix, self.q, &f)?;
            let h = self.matrix.tr_mul(&g);
            out.push((lp_norm(&(&self.matrix * &f), self.q), h.norm()));
            f = primal_map(&self.matrix, &g)?;
        }
        Ok(out)
    }
}

fn dual_map(a: &DMatrix<f64>, q: f64, f: &DVector<f64>) -> Result<DVector<f64>> {
    let af = a * f;
    let n = lp_norm(&af, q);
    if !(n > 0.0) {
        return Err(degenerate("Af = 0"));
    }
    Ok(af.map(|x| signed_pow(x, q - 1.0)) * n.powf(1.0 - q))
}

fn primal_map(a: &DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let h = a.tr_mul(g);
    let n = h.norm();
    if !(n > 0.0) {
        return Err(degenerate("A^*g = 0"));
    }
    Ok(h / n)
}

/// First nonzero entry positive.
fn sign_normalize(mut v: DVector<f64>) -> DVector<f64> {
    if let Some(x) = v.iter().find(|x| x.abs() > 1e-12) {
        if *x < 0.0 {
            v = -v;
        }
    }
    v
}

fn lex_less(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x - y).abs() > 1e-9 {
            return x < y;
        }
    }
    false
}

/// Alternating iteration `f ← A^*g(f)/|A^*g(f)|`; `‖Af‖_q` never decreases.
fn iterate_primal(a: &DMatrix<f64>, q: f64, f0: DVector<f64>) -> Option<(f64, DVector<f64>)> {
    let mut f = f0.normalize();
    let mut val = lp_norm(&(a * &f), q);
    if !(val > 0.0) {
        return None;
    }
    for _ in 0..ASCENT_MAX_ITER {
        let g = dual_map(a, q, &f).ok()?;
        let next = primal_map(a, &g).ok()?;
        let step = (&next - &f).norm();
        f = next;
        val = lp_norm(&(a * &f), q);
        if step < 1e-15 {
            break;
        }
    }
    Some((val, f))
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if v.norm() > 1e-3 {
            return v.normalize();
        }
    }
}

/// Multi-start ascent for `‖A‖_{2→q}`.
fn primal_ascent(a: &DMatrix<f64>, q: f64, seed: u64) -> (f64, DVector<f64>) {
    let n = a.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<DVector<f64>> = (0..n)
        .flat_map(|i| {
            let e = DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
            [e.clone(), e.clone() + DVector::from_element(n, 0.5)]
        })
        .collect();
    let svd = a.clone().svd(false, true);
    if let Some(vt) = svd.v_t {
        starts.push(vt.row(0).transpose());
    }
    starts.extend((0..RANDOM_STARTS).map(|_| random_unit(&mut rng, n)));
    let results: Vec<(f64, DVector<f64>)> =
        starts.into_iter().filter_map(|s| iterate_primal(a, q, s)).map(|(v, f)| (v, sign_normalize(f))).collect();
    let best = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let mut arg: Option<DVector<f64>> = None;
    for (v, f) in &results {
        if *v >= best * (1.0 - 1e-12) && arg.as_ref().is_none_or(|b| lex_less(f, b)) {
            arg = Some(f.clone());
        }
    }
    (best, arg.unwrap_or_else(|| DVector::from_fn(n, |j, _| if j == 0 { 1.0 } else { 0.0 })))
}

/// Multi-start ascent for `max |A^*g|` over `‖g‖_{q'} = 1`, started in `R^m`.
fn adjoint_ascent(a: &DMatrix<f64>, q: f64, seed: u64) -> f64 {
    let m = a.nrows();
    let qp = conjugate(q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<DVector<f64>> =
        (0..m).map(|i| DVector::from_fn(m, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    starts.extend((0..RANDOM_STARTS).map(|_| random_unit(&mut rng, m)));
    let mut best: f64 = 0.0;
    for s in starts {
        let mut g = &s / lp_norm(&s, qp);
        let mut val = a.tr_mul(&g).norm();
        for _ in 0..ASCENT_MAX_ITER {
            let Ok(f) = primal_map(a, &g) else { break };
            let Ok(next) = dual_map(a, q, &f) else { break };
            let step = (&next - &g).norm();
            g = next;
            val = a.tr_mul(&g).norm();
            if step < 1e-15 {
                break;
            }
        }
        best = best.max(val);
    }
    best
}

fn spherical(angles: &[f64]) -> DVector<f64> {
    let n = angles.len() + 1;
    let mut v = DVector::zeros(n);
    let mut s = 1.0;
    for (i, &a) in angles.iter().enumerate() {
        v[i] = s * a.cos();
        s *= a.sin();
    }
    v[n - 1] = s;
    v
}

/// Brute-force `‖A‖_{2→q}` for `n ≤ 4`: a dense grid over hyperspherical
/// angles of the half sphere, then BFGS polish of the best grid points.
pub fn grid_norm_oracle(a: &DMatrix<f64>, q: f64, resolution: usize) -> Result<f64> {
    let n = a.ncols();
    if n == 0 || n > 4 {
        return Err(domain(format!("grid oracle supports 1 <= n <= 4, got {n}")));
    }
    if n == 1 {
        return Ok(lp_norm(&a.column(0).into_owned(), q));
    }
    let k = n - 1;
    let r = resolution.max(4);
    let total = r.pow(k as u32);
    let value = |ang: &[f64]| lp_norm(&(a * spherical(ang)), q);
    let point = |idx: usize| -> Vec<f64> {
        let mut rem = idx;
        (0..k)
            .map(|_| {
                let i = rem % r;
                rem /= r;
                std::f64::consts::PI * (i as f64 + 0.5) / r as f64
            })
            .collect()
    };
    let mut scored: Vec<(f64, usize)> = (0..total).into_par_iter().map(|i| (value(&point(i)), i)).collect();
    scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let opts = BfgsOptions { max_iter: 500, grad_tol: 1e-12, fd_step: 1e-7 };
    let best = scored
        .iter()
        .take(8)
        .map(|&(v0, i)| {
            let r = bfgs_minimize(|x| -value(x), &point(i), &opts);
            (-r.value).max(v0)
        })
        .fold(0.0, f64::max);
    Ok(best)
}

/// Random instance: `m, n ∈ 1..=8`, entries in `(-1, 1)`, `q` from `{1.5, 2, 3, 6}`.
pub fn random_instance(rng: &mut ChaCha8Rng, max_dim: usize) -> (DMatrix<f64>, f64) {
    let m = rng.random_range(1..=max_dim);
    let n = rng.random_range(1..=max_dim);
    let q = [1.5, 2.0, 3.0, 6.0][rng.random_range(0..4)];
    (DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0)), q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub instances: usize,
    /// `max |‖A‖ - ‖A^*‖| / ‖A‖`.
    pub norm_gap: f64,
    /// `max |primal(dual(f_*)) ∓ f_*|`.
    pub round_trip: f64,
    /// `max |‖A^*g_*‖ - α| / α` with `g_* = dual(f_*)`.
    pub adjoint_attainment: f64,
    /// `max |⟨f, A^*g⟩ - ‖Af‖_q|` over random unit `f`.
    pub holder_identity: f64,
    /// `max |‖g‖_{q'} - 1|` over the same `f`.
    pub dual_unit: f64,
    /// `max |oracle - α| / α` over instances with `n ≤ 4`.
    pub oracle_gap: f64,
    pub oracle_instances: usize,
}

struct InstanceCheck {
    norm_gap: f64,
    round_trip: f64,
    attainment: f64,
    holder: f64,
    unit: f64,
    oracle: Option<f64>,
}

fn check_instance(a: DMatrix<f64>, q: f64, seed: u64) -> Result<InstanceCheck> {
    let n = a.ncols();
    let op = FiniteOperator::new(a, q, seed)?;
    let alpha = op.op_norm;
    let g = op.dual_vector(&op.maximizer)?;
    let back = op.primal_vector(&g)?;
    let round_trip = (&back - &op.maximizer).norm().min((&back + &op.maximizer).norm());
    let attainment = (op.matrix.tr_mul(&g).norm() - alpha).abs() / alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (mut holder, mut unit): (f64, f64) = (0.0, 0.0);
    for _ in 0..4 {
        let f = random_unit(&mut rng, n);
        let Ok(g) = op.dual_vector(&f) else { continue };
        let afq = lp_norm(&(&op.matrix * &f), q);
        holder = holder.max((f.dot(&op.matrix.tr_mul(&g)) - afq).abs());
        unit = unit.max((lp_norm(&g, conjugate(q)) - 1.0).abs());
    }
    let oracle = if n <= 4 {
        let res = match n {
            2 => 4000,
            3 => 240,
            _ => 48,
        };
        Some((grid_norm_oracle(&op.matrix, q, res)? - alpha).abs() / alpha)
    } else {
        None
    };
    Ok(InstanceCheck {
        norm_gap: (alpha - op.adjoint_norm).abs() / alpha,
        round_trip,
        attainment,
        holder,
        unit,
        oracle,
    })
}

/// Runs the finite duality properties over `instances` random operators.
pub fn duality_suite(instances: usize, seed: u64) -> Result<DualityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(DMatrix<f64>, f64, u64)> = (0..instances)
        .map(|i| {
            let (a, q) = random_instance(&mut rng, 8);
            (a, q, seed.wrapping_mul(1_000_003).wrapping_add(i as u64))
        })
        .collect();
    let checks = cases.into_par_iter().map(|(a, q, s)| check_instance(a, q, s)).collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(&InstanceCheck) -> f64| checks.iter().map(f).fold(0.0, f64::max);
    Ok(DualityReport {
        instances,
        norm_gap: fold(|c| c.norm_gap),
        round_trip: fold(|c| c.round_trip),
        adjoint_attainment: fold(|c| c.attainment),
        holder_identity: fold(|c| c.holder),
        dual_unit: fold(|c| c.unit),
        oracle_gap: checks.iter().filter_map(|c| c.oracle).fold(0.0, f64::max),
        oracle_instances: checks.iter().filter(|c| c.oracle.is_some()).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_self_dual_at_q2() {
        let op = FiniteOperator::new(DMatrix::identity(3, 3), 2.0, 1).unwrap();
        let f = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let g = op.dual_vector(&f).unwrap();
        assert!((&g - &f).norm() < 1e-15);
        assert!((op.op_norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dominant_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 3.0, 1.0]));
        let op = FiniteOperator::new(a, 3.0, 2).unwrap();
        assert!((op.maximizer[1].abs() - 1.0).abs() < 1e-10, "{}", op.maximizer);
        assert!((op.op_norm - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let op = FiniteOperator::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), 2.0, 3).unwrap();
        let f = DVector::from_vec(vec![0.0, 1.0]);
        assert!(matches!(op.dual_vector(&f), Err(crate::LabError::Degenerate(_))));
        assert!(op.dual_vector(&DVector::from_vec(vec![2.0, 0.0])).is_err());
        assert!(FiniteOperator::new(DMatrix::identity(2, 2), 1.0, 0).is_err());
    }

    #[test]
    fn sequence_version() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (a, _) = random_instance(&mut rng, 6);
        let op = FiniteOperator::new(a, 6.0, 4).unwrap();
        let trace = op.ascent_trace(&DVector::from_element(op.dims().1, 1.0), 400).unwrap();
        let (last_f, last_g) = trace[trace.len() - 1];
        assert!((last_f - op.op_norm).abs() < 1e-8 * op.op_norm);
        assert!((last_g - op.op_norm).abs() < 1e-8 * op.op_norm);
        for (x, y) in &trace {
            assert!(*y >= *x - 1e-12 && *y <= op.op_norm * (1.0 + 1e-12));
        }
    }

    #[test]
    fn small_suite() {
        let r = duality_suite(30, 5).unwrap();
        assert!(r.norm_gap < 1e-9 && r.round_trip < 1e-8 && r.adjoint_attainment < 1e-8, "{r:?}");
        assert!(r.holder_identity < 1e-12 && r.dual_unit < 1e-12, "{r:?}");
        assert!(r.oracle_gap < 1e-6, "{r:?}");
    }
}
