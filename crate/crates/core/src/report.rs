//! Verification suites, scan tables and the flat JSON/CSV emitters used by the
//! command-line front end. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conformal::{hersch_normalize, pullback_zonal_exponent, q_zeta, ConformalParam};
use crate::cylinder::{
    c_t, c_t_closed_form, c_t_numeric, critical_mode, degenerate_quotient_curve, period, period_by_integration,
    quartic_constants, quartic_limit, sobolev_constant_cylinder, split_stability_check, t_star, u0, CylinderParams,
    HillOperator,
};
use crate::duality::duality_suite;
use crate::error::{domain, LabError, Result};
use crate::stability::{distance, positivity_scan, quotient_curve, upper_bound_constant, DEFAULT_RICHARDSON_H};
use crate::zonal::{
    coordinate_multiplier_identity_check, energy, funk_hecke_eigenvalue, lq_norm, sharp_constant, subcritical_check,
    w_weight, w_weight_three_term, SphereParams, SubcriticalConfig, ZonalFn,
};

/// Name of the env var that caps the worker pool.
pub const THREADS_ENV: &str = "SOBOLEV_LAB_THREADS";

/// Builds the global rayon pool from `SOBOLEV_LAB_THREADS` if it is set.
/// Returns the thread count in effect.
pub fn init_thread_pool() -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize =
            v.trim().parse().map_err(|_| domain(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(domain(format!("{THREADS_ENV} must be positive")));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// `{:.16e}`, or `null` for non-finite values.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Floats(Vec<f64>),
}

impl Value {
    fn to_json(&self) -> String {
        match self {
            Value::Float(x) => format_float(*x),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Str(s) => json_string(s),
            Value::Floats(v) => format!("[{}]", v.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(",")),
        }
    }
}

/// A flat JSON object with keys in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record(pub Vec<(String, Value)>);

impl Record {
    pub fn push(&mut self, key: &str, value: Value) -> &mut Self {
        self.0.push((key.to_string(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn to_json(&self) -> String {
        let body: Vec<String> = self.0.iter().map(|(k, v)| format!("{}:{}", json_string(k), v.to_json())).collect();
        format!("{{{}}}", body.join(","))
    }
}

/// Numeric table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// One record per row, as a JSON array.
    pub fn to_json(&self) -> String {
        let recs: Vec<String> = self
            .rows
            .iter()
            .map(|row| {
                let mut r = Record::default();
                for (k, v) in self.header.iter().zip(row) {
                    r.push(k, Value::Float(*v));
                }
                r.to_json()
            })
            .collect();
        format!("[\n{}\n]\n", recs.join(",\n"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Cmp {
    fn holds(self, value: f64, limit: f64) -> bool {
        match self {
            Cmp::Lt => value < limit,
            Cmp::Le => value <= limit,
            Cmp::Gt => value > limit,
            Cmp::Ge => value >= limit,
            Cmp::Eq => value == limit,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Eq => "==",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub cmp: Cmp,
    pub limit: f64,
    pub passed: bool,
    /// Set when the computation behind the check failed.
    pub error: Option<String>,
}

impl Check {
    pub fn new(suite: &'static str, name: impl Into<String>, value: f64, cmp: Cmp, limit: f64) -> Self {
        Self { suite, name: name.into(), value, cmp, limit, passed: cmp.holds(value, limit), error: None }
    }

    fn failed(suite: &'static str, name: &str, err: LabError) -> Self {
        Self {
            suite,
            name: name.to_string(),
            value: f64::NAN,
            cmp: Cmp::Eq,
            limit: f64::NAN,
            passed: false,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Sphere,
    Conformal,
    Stability,
    Cylinder,
    Duality,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["sphere", "conformal", "stability", "cylinder", "duality", "all"];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Sphere => "sphere",
            Suite::Conformal => "conformal",
            Suite::Stability => "stability",
            Suite::Cylinder => "cylinder",
            Suite::Duality => "duality",
            Suite::All => "all",
        }
    }

    fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Sphere, Suite::Conformal, Suite::Stability, Suite::Cylinder, Suite::Duality],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Suite::Sphere),
            "conformal" => Ok(Suite::Conformal),
            "stability" => Ok(Suite::Stability),
            "cylinder" => Ok(Suite::Cylinder),
            "duality" => Ok(Suite::Duality),
            "all" => Ok(Suite::All),
            other => Err(domain(format!("unknown suite {other:?}; expected one of {}", Suite::NAMES.join(", ")))),
        }
    }
}

/// Numerical parameters shared by the suites and scans.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub d: usize,
    pub s: f64,
    /// Cylinder period; `None` means `1.5 T_*`.
    pub period: Option<f64>,
    pub bandlimit: usize,
    pub quad_order: usize,
    pub modes: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 3,
            s: 1.0,
            period: None,
            bandlimit: crate::zonal::DEFAULT_BANDLIMIT,
            quad_order: crate::zonal::DEFAULT_QUAD_ORDER,
            modes: crate::cylinder::DEFAULT_MODES,
            seed: 7,
        }
    }
}

impl RunConfig {
    /// Checks every module precondition the suites rely on.
    pub fn validate(&self) -> Result<()> {
        SphereParams::new(self.d, self.s)?;
        if self.bandlimit == 0 || self.quad_order <= self.bandlimit {
            return Err(domain(format!(
                "need 0 < bandlimit < quad_order, got ({}, {})",
                self.bandlimit, self.quad_order
            )));
        }
        if self.modes < 4 {
            return Err(domain(format!("modes must be at least 4, got {}", self.modes)));
        }
        if let Some(t) = self.period {
            CylinderParams::new(self.d, t)?;
        }
        Ok(())
    }

    pub fn cylinder_period(&self) -> f64 {
        self.period.unwrap_or_else(|| 1.5 * t_star(self.d))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<10} {:<width$} {:>24}    {:<26} {}\n", "suite", "check", "value", "limit", "status");
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            match &c.error {
                Some(e) => {
                    let _ =
                        writeln!(out, "{:<10} {:<width$} {:>24}    {:<26} {status} ({e})", c.suite, c.name, "-", "-");
                }
                None => {
                    let lim = format!("{} {}", c.cmp.symbol(), format_float(c.limit));
                    let _ = writeln!(
                        out,
                        "{:<10} {:<width$} {:>24}    {:<26} {status}",
                        c.suite,
                        c.name,
                        format_float(c.value),
                        lim
                    );
                }
            }
        }
        let n = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(out, "{n}/{} checks passed", self.checks.len());
        out
    }

    pub fn to_json(&self) -> String {
        let recs: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let mut r = Record::default();
                r.push("suite", Value::Str(c.suite.to_string()))
                    .push("check", Value::Str(c.name.clone()))
                    .push("value", Value::Float(c.value))
                    .push("cmp", Value::Str(c.cmp.symbol().to_string()))
                    .push("limit", Value::Float(c.limit))
                    .push("passed", Value::Bool(c.passed));
                if let Some(e) = &c.error {
                    r.push("error", Value::Str(e.clone()));
                }
                r.to_json()
            })
            .collect();
        format!("[\n{}\n]\n", recs.join(",\n"))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,check,value,cmp,limit,passed\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.suite,
                c.name,
                format_float(c.value),
                c.cmp.symbol(),
                format_float(c.limit),
                c.passed
            );
        }
        out
    }
}

/// Runs a group of checks; an error becomes one failing check named `step`.
fn guarded(out: &mut Vec<Check>, suite: &'static str, step: &str, f: impl FnOnce() -> Result<Vec<Check>>) {
    match f() {
        Ok(c) => out.extend(c),
        Err(e) => out.push(Check::failed(suite, step, e)),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn random_zeta(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> Result<ConformalParam> {
    loop {
        let z: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n <= 1.0 {
            return ConformalParam::new(z.iter().map(|x| x * radius).collect());
        }
    }
}

/// Random zonal function with `c_0 ∈ [1, 3)` and decaying higher coefficients.
pub fn random_zonal(
    rng: &mut ChaCha8Rng,
    params: SphereParams,
    bandlimit: usize,
    quad_order: usize,
) -> Result<ZonalFn> {
    let coeffs = (0..=bandlimit)
        .map(|l| {
            let base = if l == 0 { 2.0 } else { 0.0 };
            base + rng.random_range(-1.0..1.0) / (1.0 + l as f64)
        })
        .collect();
    ZonalFn::from_coeffs(params, coeffs, quad_order)
}

/// Largest relative error of `E_s[Q_ζ]/‖Q_ζ‖_q²` against the closed-form
/// constant over `trials` random `|ζ| ≤ radius`.
pub fn bubble_quotient_error(params: SphereParams, trials: usize, radius: f64, cfg: &RunConfig) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sharp = sharp_constant(&params);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let z = random_zeta(&mut rng, params.d, radius)?;
        let q = q_zeta(&z, params, cfg.bandlimit, cfg.quad_order)?;
        worst = worst.max(rel(energy(&q) / lq_norm(&q, params.q)?.powi(2), sharp));
    }
    Ok(worst)
}

/// Largest relative change of `E_s` and `‖·‖_q` under `U ↦ U_Ψ` for `trials`
/// random zonal `U` and `δ ∈ [0.2, 5]` (log-uniform).
pub fn conformal_invariance_error(params: SphereParams, trials: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut e_err, mut n_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..trials {
        // sign changes put kinks in |U|^q, so both sides use the fine grid
        let u = random_zonal(&mut rng, params, 8, 64)?.regrid(128, 512)?;
        let delta = rng.random_range(0.2f64.ln()..5f64.ln()).exp();
        let w = pullback_zonal_exponent(&u, delta, params.q, 128, 512)?;
        e_err = e_err.max(rel(energy(&w), energy(&u)));
        n_err = n_err.max(rel(lq_norm(&w, params.q)?, lq_norm(&u, params.q)?));
    }
    Ok((e_err, n_err))
}

fn sphere_suite(cfg: &RunConfig) -> Vec<Check> {
    const S: &str = "sphere";
    let mut out = Vec::new();
    let (d, s) = (cfg.d, cfg.s);
    guarded(&mut out, S, "bubble_quotient", || {
        let p = SphereParams::new(d, s)?;
        Ok(vec![Check::new(S, "bubble_quotient_rel_err", bubble_quotient_error(p, 5, 0.6, cfg)?, Cmp::Le, 1e-7)])
    });
    guarded(&mut out, S, "funk_hecke_multiplier", || {
        // λ_l(d/2 - s) Γratio(l) is independent of l
        let p = SphereParams::new(d, s)?;
        let prod: Vec<f64> = (0..=20)
            .map(|l| funk_hecke_eigenvalue(d, d as f64 / 2.0 - s, l).map(|v| v * p.gamma_ratio_at(l)))
            .collect::<Result<_>>()?;
        let spread = prod.iter().map(|v| rel(*v, prod[0])).fold(0.0, f64::max);
        Ok(vec![Check::new(S, "funk_hecke_multiplier_spread", spread, Cmp::Le, 1e-10)])
    });
    guarded(&mut out, S, "w_weight", || {
        let worst = (1..=50).map(|l| (w_weight(d, s, l) - w_weight_three_term(d, s, l)).abs()).fold(0.0, f64::max);
        Ok(vec![Check::new(S, "w_weight_identity", worst, Cmp::Le, 1e-12)])
    });
    guarded(&mut out, S, "projection_recurrence", || {
        let ts: Vec<f64> = (0..=40).map(|i| -1.0 + i as f64 / 20.0).collect();
        let worst = (1..=10).map(|l| coordinate_multiplier_identity_check(d, l, &ts)).collect::<Result<Vec<_>>>()?;
        Ok(vec![Check::new(S, "projection_recurrence", worst.into_iter().fold(0.0, f64::max), Cmp::Le, 1e-10)])
    });
    guarded(&mut out, S, "subcritical", || {
        let q_crit = if d > 2 { 2.0 * d as f64 / (d as f64 - 2.0) } else { 6.0 };
        let r =
            subcritical_check(d, 0.5 * (2.0 + q_crit), &SubcriticalConfig { seed: cfg.seed, ..Default::default() })?;
        Ok(vec![
            Check::new(S, "subcritical_argmax", r.argmax as f64, Cmp::Eq, 0.0),
            Check::new(S, "subcritical_higher_degree_ratio", r.higher_degree_ratio, Cmp::Lt, 1.0),
            Check::new(S, "subcritical_violations", r.violations as f64, Cmp::Eq, 0.0),
        ])
    });
    out
}

fn conformal_suite(cfg: &RunConfig) -> Vec<Check> {
    const S: &str = "conformal";
    let mut out = Vec::new();
    guarded(&mut out, S, "invariance", || {
        let p = SphereParams::new(cfg.d, cfg.s)?;
        let (e, n) = conformal_invariance_error(p, 10, cfg.seed)?;
        Ok(vec![
            Check::new(S, "energy_invariance", e, Cmp::Le, 1e-6),
            Check::new(S, "norm_invariance", n, Cmp::Le, 1e-6),
        ])
    });
    guarded(&mut out, S, "hersch", || {
        let p = SphereParams::new(cfg.d, cfg.s)?;
        let u = ZonalFn::from_fn(p, 16, 64, |t| (1.0 + 0.6 * t).powi(2) + 0.2)?;
        let h = hersch_normalize(&u, p.q)?;
        Ok(vec![
            Check::new(S, "hersch_residual", h.residual.abs(), Cmp::Le, 1e-10),
            Check::new(S, "hersch_roots", h.roots.len() as f64, Cmp::Eq, 1.0),
        ])
    });
    out
}

fn stability_suite(cfg: &RunConfig) -> Vec<Check> {
    const S: &str = "stability";
    let mut out = Vec::new();
    let target = upper_bound_constant(cfg.d, cfg.s);
    guarded(&mut out, S, "be_curves", || {
        let p = SphereParams::new(cfg.d, cfg.s)?;
        let c2 = be_curve(p, 2, &[], cfg)?;
        let c3 = be_curve(p, 3, &[], cfg)?;
        Ok(vec![
            Check::new(S, "be_degree2_rel_err", rel(c2.extrapolated, target), Cmp::Le, 1e-2),
            Check::new(S, "be_degree3_minus_degree2", c3.extrapolated - c2.extrapolated, Cmp::Gt, 0.0),
        ])
    });
    guarded(&mut out, S, "distance", || {
        let p = SphereParams::new(cfg.d, cfg.s)?;
        let r = ZonalFn::harmonic(p, 2, 16, 64)?;
        let eps = 0.05;
        let u = r.resampled(vec![1.0; r.samples.len()])?.lincomb(1.0, &r, eps)?;
        let dist = distance(&u)?;
        Ok(vec![Check::new(S, "distance_rel_err", rel(dist.delta.powi(2), eps * eps * energy(&r)), Cmp::Le, 5e-3)])
    });
    guarded(&mut out, S, "positivity", || {
        let p = SphereParams::new(cfg.d, cfg.s)?;
        let scan = positivity_scan(p, 10, 8, 64, cfg.seed)?;
        Ok(vec![Check::new(S, "min_deficit_ratio", scan.min_deficit_ratio, Cmp::Ge, -1e-9)])
    });
    out
}

fn cylinder_suite(cfg: &RunConfig) -> Vec<Check> {
    const S: &str = "cylinder";
    let mut out = Vec::new();
    let d = cfg.d;
    let period_t = cfg.cylinder_period();
    guarded(&mut out, S, "period_map", || {
        let ts = t_star(d);
        let base = u0(d)?;
        let limit = period(d, base + 1e-4)?;
        let table = period_map(d, &default_alpha_grid(d, 20)?)?;
        let increasing = table.rows.windows(2).all(|w| w[1][1] > w[0][1]);
        let worst = [0.3, 0.6, 0.9]
            .iter()
            .map(|f| {
                let a = base + f * (1.0 - base);
                Ok(rel(period_by_integration(d, a)?, period(d, a)?))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(vec![
            Check::new(S, "period_limit_abs_err", (limit - ts).abs(), Cmp::Le, 1e-3),
            Check::new(S, "period_increasing", if increasing { 1.0 } else { 0.0 }, Cmp::Eq, 1.0),
            Check::new(S, "period_quadrature_vs_ode", worst, Cmp::Le, 1e-7),
        ])
    });
    guarded(&mut out, S, "sobolev_constant", || {
        let c = sobolev_constant_cylinder(d, period_t, cfg.seed)?;
        Ok(vec![
            Check::new(S, "euclidean_margin", c.euclidean_constant - c.value, Cmp::Gt, 0.0),
            Check::new(S, "descent_rel_err", rel(c.descent.value, c.value), Cmp::Le, 1e-4),
        ])
    });
    guarded(&mut out, S, "hessian_kernel", || {
        let params = CylinderParams::new(d, period_t)?;
        let op = HillOperator::new(params, cfg.modes)?;
        let spectrum = op.spectrum(0)?;
        let expected = if params.is_critical() {
            3.0
        } else if period_t < params.t_star {
            1.0
        } else {
            2.0
        };
        let scale = op.spectral_scale();
        Ok(vec![
            Check::new(S, "kernel_dim", spectrum.kernel_dim as f64, Cmp::Eq, expected),
            Check::new(S, "kernel_max_over_scale", spectrum.kernel_max() / scale, Cmp::Lt, 1e-6),
            Check::new(S, "gap_over_scale", spectrum.gap() / scale, Cmp::Gt, 1e-3),
        ])
    });
    guarded(&mut out, S, "c_t", || {
        let ts = t_star(d);
        let mut v = Vec::new();
        if period_t <= ts {
            let err = (c_t_closed_form(d, period_t)? - c_t_numeric(d, period_t, cfg.modes.min(64))?).abs();
            v.push(Check::new(S, "c_t_closed_vs_numeric", err, Cmp::Le, 1e-8));
        } else {
            v.push(Check::new(S, "c_t_positive", c_t(d, period_t)?, Cmp::Gt, 0.0));
        }
        v.push(Check::new(S, "c_t_at_t_star", c_t_numeric(d, ts, cfg.modes.min(64))?.abs(), Cmp::Le, 1e-8));
        Ok(v)
    });
    guarded(&mut out, S, "quartic", || {
        let qc = quartic_constants(d, cfg.modes)?;
        let curve = degenerate_quotient_curve(d, &[1e-2], DEFAULT_RICHARDSON_H)?;
        Ok(vec![
            Check::new(
                S,
                "resolvent_coefficient_rel_err",
                rel(qc.resolvent_coefficient, qc.resolvent_coefficient_closed),
                Cmp::Le,
                1e-8,
            ),
            Check::new(S, "secondary_gap", qc.gap, Cmp::Gt, 0.0),
            Check::new(S, "degenerate_quotient_rel_err", rel(curve.rows[0].1, quartic_limit(d)), Cmp::Le, 2e-2),
        ])
    });
    guarded(&mut out, S, "split", || {
        let eps = [0.04, 0.02, 0.01, 0.005];
        let perp = critical_mode(d, 2, 16, 128)?;
        let par = critical_mode(d, 1, 16, 128)?;
        let a = split_stability_check(d, &perp, &eps, &[])?;
        let b = split_stability_check(d, &par, &eps, &[])?;
        Ok(vec![
            Check::new(S, "split_slope_complement", (a.slope - 2.0).abs(), Cmp::Le, 0.1),
            Check::new(S, "split_slope_kernel", (b.slope - 4.0).abs(), Cmp::Le, 0.1),
        ])
    });
    out
}

fn duality_checks(cfg: &RunConfig) -> Vec<Check> {
    const S: &str = "duality";
    let mut out = Vec::new();
    guarded(&mut out, S, "instances", || {
        let r = duality_suite(200, cfg.seed)?;
        Ok(vec![
            Check::new(S, "norm_vs_adjoint", r.norm_gap, Cmp::Le, 1e-9),
            Check::new(S, "round_trip", r.round_trip, Cmp::Le, 1e-8),
            Check::new(S, "adjoint_attainment", r.adjoint_attainment, Cmp::Le, 1e-8),
            Check::new(S, "holder_identity", r.holder_identity, Cmp::Le, 1e-12),
            Check::new(S, "dual_unit_norm", r.dual_unit, Cmp::Le, 1e-12),
            Check::new(S, "grid_oracle", r.oracle_gap, Cmp::Le, 1e-6),
        ])
    });
    out
}

/// Runs `suite` (all five for [`Suite::All`]) in a fixed order.
pub fn run_verify(suite: Suite, cfg: &RunConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let mut checks = Vec::new();
    for s in suite.expand() {
        checks.extend(match s {
            Suite::Sphere => sphere_suite(cfg),
            Suite::Conformal => conformal_suite(cfg),
            Suite::Stability => stability_suite(cfg),
            Suite::Cylinder => cylinder_suite(cfg),
            Suite::Duality => duality_checks(cfg),
            Suite::All => unreachable!(),
        });
    }
    Ok(VerifyReport { checks })
}

/// Periods at which `c_T` is sampled in [`constants_record`], as fractions of `T_*`.
pub const C_T_SAMPLE_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// `{s_ds, be_upper, t_star, c_t_formula_samples, quartic_constant}`.
pub fn constants_record(d: usize, s: f64) -> Result<Record> {
    let p = SphereParams::new(d, s)?;
    CylinderParams::new(d, t_star(d))?;
    let ts = t_star(d);
    let samples = C_T_SAMPLE_FRACTIONS.iter().map(|f| c_t_closed_form(d, f * ts)).collect::<Result<Vec<_>>>()?;
    let mut r = Record::default();
    r.push("d", Value::Int(d as i64))
        .push("s", Value::Float(s))
        .push("s_ds", Value::Float(sharp_constant(&p)))
        .push("be_upper", Value::Float(upper_bound_constant(d, s)))
        .push("t_star", Value::Float(ts))
        .push("c_t_sample_periods", Value::Floats(C_T_SAMPLE_FRACTIONS.iter().map(|f| f * ts).collect()))
        .push("c_t_formula_samples", Value::Floats(samples))
        .push("quartic_constant", Value::Float(quartic_limit(d)));
    Ok(r)
}

/// `n` amplitudes spaced evenly in `[u0 + 1e-4, 1 - 1e-3]`.
pub fn default_alpha_grid(d: usize, n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = (u0(d)? + 1e-4, 1.0 - 1e-3);
    if n < 2 {
        return Err(domain("alpha grid needs at least two points"));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// `alpha,tau` rows; every amplitude must lie in `(u0, 1)`.
pub fn period_map(d: usize, alphas: &[f64]) -> Result<Table> {
    if alphas.is_empty() {
        return Err(domain("alpha grid is empty"));
    }
    let rows = alphas.iter().map(|&a| period(d, a).map(|t| vec![a, t])).collect::<Result<Vec<_>>>()?;
    Ok(Table { header: vec!["alpha", "tau"], rows })
}

/// Default ε grid for the quotient scans.
pub const DEFAULT_EPS_GRID: [f64; 5] = [0.08, 0.04, 0.02, 0.01, 0.005];

fn check_eps_grid(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(domain("eps grid is empty"));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(domain(format!("eps values must lie in (0, 1), got {e}")));
    }
    Ok(())
}

fn be_curve(p: SphereParams, degree: usize, eps: &[f64], cfg: &RunConfig) -> Result<crate::stability::QuotientCurve> {
    let bl = cfg.bandlimit.clamp(degree + 1, 16);
    let r = ZonalFn::harmonic(p, degree, bl, 4 * bl)?;
    quotient_curve(&r, eps, DEFAULT_RICHARDSON_H)
}

/// Bianchi–Egnell quotient along `1 + εR` with `R` the zonal harmonic of the
/// given degree: `eps,quotient,extrapolated_limit`.
pub fn be_scan(cfg: &RunConfig, degree: usize, eps: &[f64]) -> Result<Table> {
    check_eps_grid(eps)?;
    if degree < 2 {
        return Err(domain(format!("perturbation degree must be at least 2, got {degree}")));
    }
    let p = SphereParams::new(cfg.d, cfg.s)?;
    let c = be_curve(p, degree, eps, cfg)?;
    Ok(Table {
        header: vec!["eps", "quotient", "extrapolated_limit"],
        rows: c.rows.iter().map(|&(e, q)| vec![e, q, c.extrapolated]).collect(),
    })
}

/// Degenerate quotient at `T_*` with the resolvent correction:
/// `eps,quotient,extrapolated_limit`.
pub fn quartic_scan(d: usize, eps: &[f64]) -> Result<Table> {
    check_eps_grid(eps)?;
    let c = degenerate_quotient_curve(d, eps, DEFAULT_RICHARDSON_H)?;
    Ok(Table {
        header: vec!["eps", "quotient", "extrapolated_limit"],
        rows: c.rows.iter().map(|&(e, q)| vec![e, q, c.extrapolated]).collect(),
    })
}
