//! Periodic solutions `u_α` of `u'' = (d-2)²/4 u - d(d-2)/4 u^{q-1}` with
//! `u(0) = α`, `u'(0) = 0`, and the period map `α ↦ τ(α)`.

use ode_solvers::{Dop853, OutputType, System, Vector2};

use super::{critical_exponent, mass, t_star, u0, CylinderParams, PeriodicProfile};
use crate::error::{computation, domain, Result};
use crate::optimize::brent_root;
use crate::specialfn::gauss_rule_cached;

const RTOL: f64 = 1e-13;
const ATOL: f64 = 1e-14;
const PANEL_ORDER: usize = 32;
const MAX_PANELS: usize = 4096;
/// Trajectory samples per period in [`solve_orbit`].
pub const ORBIT_SAMPLES: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub d: usize,
    pub alpha: f64,
    /// The lower turning point.
    pub u_min: f64,
    /// Return time from time integration.
    pub period: f64,
    /// `(t, u, u')` at `t_j = j·period/N`, `j = 0..N`.
    pub trajectory: Vec<[f64; 3]>,
    pub energy_constant: f64,
}

#[derive(Clone, Copy)]
struct OrbitOde {
    mass: f64,
    nonlin: f64,
    q: f64,
    stop_on_upturn: bool,
}

impl OrbitOde {
    fn new(d: usize) -> Self {
        let df = d as f64;
        Self { mass: mass(d), nonlin: df * (df - 2.0) / 4.0, q: critical_exponent(d), stop_on_upturn: false }
    }

    fn accel(&self, u: f64) -> f64 {
        self.mass * u - self.nonlin * u.abs().powf(self.q - 2.0) * u
    }
}

impl System<f64, Vector2<f64>> for OrbitOde {
    fn system(&self, _t: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        dy[0] = y[1];
        dy[1] = self.accel(y[0]);
    }

    fn solout(&mut self, t: f64, y: &Vector2<f64>, _dy: &Vector2<f64>) -> bool {
        self.stop_on_upturn && t > 0.0 && y[1] > 0.0
    }
}

fn advance(ode: OrbitOde, t0: f64, t1: f64, y: Vector2<f64>) -> Result<(f64, Vector2<f64>)> {
    if t1 == t0 {
        return Ok((t0, y));
    }
    let mut solver = Dop853::new(ode, t0, t1, t1 - t0, y, RTOL, ATOL);
    solver.set_output(OutputType::Sparse);
    solver.integrate().map_err(|e| computation(format!("orbit integration failed: {e}")))?;
    let (ts, ys) = solver.results().get();
    match (ts.last(), ys.last()) {
        (Some(&t), Some(&y)) => Ok((t, y)),
        _ => Err(computation("orbit integration produced no output")),
    }
}

/// `½u'² - (d-2)²u²/8 + d(d-2)|u|^q/(4q)`.
pub fn first_integral(d: usize, u: f64, du: f64) -> f64 {
    let q = critical_exponent(d);
    let df = d as f64;
    0.5 * du * du - mass(d) * u * u / 2.0 + df * (df - 2.0) / (4.0 * q) * u.abs().powf(q)
}

fn potential(d: usize, u: f64) -> f64 {
    first_integral(d, u, 0.0)
}

/// `F(a) - F(b)` with `h = a - b` supplied exactly, `b > 0`.
fn potential_diff(d: usize, a: f64, b: f64, h: f64) -> f64 {
    let q = critical_exponent(d);
    let df = d as f64;
    -mass(d) / 2.0 * h * (a + b) + df * (df - 2.0) / (4.0 * q) * b.powf(q) * (q * (h / b).ln_1p()).exp_m1()
}

fn check_alpha(d: usize, alpha: f64) -> Result<f64> {
    let u0 = u0(d)?;
    if !(alpha > u0 && alpha < 1.0) {
        return Err(domain(format!("amplitude must lie in (u0, 1) = ({u0}, 1), got {alpha}")));
    }
    Ok(u0)
}

/// The lower turning point `u_min ∈ (0, u0)` with `F(u_min) = F(α)`.
pub fn turning_point(d: usize, alpha: f64) -> Result<f64> {
    let u0 = check_alpha(d, alpha)?;
    let fa = potential(d, alpha);
    brent_root(|u| potential(d, u) - fa, 0.0, u0, 1e-17, 500)
}

fn composite_period(d: usize, alpha: f64, u_min: f64, panels: usize) -> Result<f64> {
    let rule = gauss_rule_cached(PANEL_ORDER, 0.0)?;
    let w = alpha - u_min;
    let width = std::f64::consts::FRAC_PI_2 / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let lo = p as f64 * width;
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let th = lo + 0.5 * width * (x + 1.0);
            let (s, c) = th.sin_cos();
            let u = u_min + w * s * s;
            // regularized at both turning points
            let gap = if th < std::f64::consts::FRAC_PI_4 {
                -potential_diff(d, u, u_min, w * s * s)
            } else {
                potential_diff(d, alpha, u, w * c * c)
            };
            sum += 0.5 * width * wt * 2.0 * w * s * c / (2.0 * gap).sqrt();
        }
    }
    Ok(2.0 * sum)
}

/// `τ(α)` by quadrature of the first integral after `u = u_min + (α-u_min) sin²θ`.
pub fn period(d: usize, alpha: f64) -> Result<f64> {
    let u_min = turning_point(d, alpha)?;
    let mut panels = 4;
    let mut prev = composite_period(d, alpha, u_min, panels)?;
    while panels < MAX_PANELS {
        panels *= 2;
        let next = composite_period(d, alpha, u_min, panels)?;
        if (next - prev).abs() <= 1e-14 * next {
            return Ok(next);
        }
        prev = next;
    }
    if prev.is_finite() {
        Ok(prev)
    } else {
        Err(computation(format!("period quadrature failed at alpha = {alpha}")))
    }
}

/// Half period from the first upturn of `u'`, refined by Newton on `u'(t) = 0`.
fn half_period(d: usize, alpha: f64) -> Result<(f64, Vector2<f64>)> {
    let mut ode = OrbitOde::new(d);
    ode.stop_on_upturn = true;
    let (mut t, mut y) = advance(ode, 0.0, 1e4, Vector2::new(alpha, 0.0))?;
    if !(y[1] > 0.0) {
        return Err(computation(format!("no return within t = 1e4 at alpha = {alpha}")));
    }
    ode.stop_on_upturn = false;
    for _ in 0..30 {
        let acc = ode.accel(y[0]);
        let dt = -y[1] / acc;
        if dt.abs() <= 1e-11 * t {
            // below the integrator's step floor: one Taylor step finishes it
            y = Vector2::new(y[0] + y[1] * dt + 0.5 * acc * dt * dt, 0.0);
            t += dt;
            break;
        }
        let (tn, yn) = advance(ode, t, t + dt, y)?;
        t = tn;
        y = yn;
    }
    Ok((t, y))
}

/// `τ(α)` as twice the first return time of `u'` to zero.
pub fn period_by_integration(d: usize, alpha: f64) -> Result<f64> {
    check_alpha(d, alpha)?;
    Ok(2.0 * half_period(d, alpha)?.0)
}

pub fn solve_orbit(d: usize, alpha: f64) -> Result<Orbit> {
    solve_orbit_with(d, alpha, ORBIT_SAMPLES)
}

/// Orbit sampled at `samples` (even) uniform points over one period.
///
/// The first half is integrated segment by segment; the second half is the
/// reflection `u(τ - t) = u(t)`.
pub fn solve_orbit_with(d: usize, alpha: f64, samples: usize) -> Result<Orbit> {
    check_alpha(d, alpha)?;
    if samples < 4 || !samples.is_multiple_of(2) {
        return Err(domain(format!("orbit sample count must be even and >= 4, got {samples}")));
    }
    let u_min = turning_point(d, alpha)?;
    let (th, _) = half_period(d, alpha)?;
    let period = 2.0 * th;
    let h = period / samples as f64;
    let ode = OrbitOde::new(d);
    let mut traj = vec![[0.0; 3]; samples];
    let mut y = Vector2::new(alpha, 0.0);
    let mut t = 0.0;
    traj[0] = [0.0, alpha, 0.0];
    for (j, slot) in traj.iter_mut().enumerate().take(samples / 2 + 1).skip(1) {
        let target = j as f64 * h;
        let (_, yn) = advance(ode, t, target, y)?;
        t = target;
        y = yn;
        *slot = [target, y[0], y[1]];
    }
    for j in samples / 2 + 1..samples {
        let m = traj[samples - j];
        traj[j] = [j as f64 * h, m[1], -m[2]];
    }
    Ok(Orbit { d, alpha, u_min, period, trajectory: traj, energy_constant: potential(d, alpha) })
}

impl Orbit {
    /// `max_j |H(u_j, u'_j) - H(α, 0)|` over the stored trajectory.
    pub fn max_energy_deviation(&self) -> f64 {
        self.trajectory
            .iter()
            .map(|p| (first_integral(self.d, p[1], p[2]) - self.energy_constant).abs())
            .fold(0.0, f64::max)
    }

    /// Largest first-integral drift when integrating `periods` full periods
    /// in one adaptive run.
    pub fn energy_drift(&self, periods: usize) -> Result<f64> {
        let ode = OrbitOde::new(self.d);
        let mut solver =
            Dop853::new(ode, 0.0, periods as f64 * self.period, 0.0, Vector2::new(self.alpha, 0.0), RTOL, ATOL);
        solver.set_output(OutputType::Sparse);
        solver.integrate().map_err(|e| computation(format!("orbit integration failed: {e}")))?;
        let (_, ys) = solver.results().get();
        Ok(ys.iter().map(|y| (first_integral(self.d, y[0], y[1]) - self.energy_constant).abs()).fold(0.0, f64::max))
    }

    /// Symmetry about `t = 0` and monotone decrease on `[0, τ/2]`, both on the
    /// sample grid: returns `(max |u(t) - u(τ - t)|, decreasing)`.
    pub fn shape_check(&self) -> (f64, bool) {
        let n = self.trajectory.len();
        let asym = (1..n).map(|j| (self.trajectory[j][1] - self.trajectory[n - j][1]).abs()).fold(0.0, f64::max);
        let decreasing = self.trajectory[..=n / 2].windows(2).all(|w| w[1][1] < w[0][1]);
        (asym, decreasing)
    }

    /// The orbit as a profile on `Σ_T`; `params.period` is expected to equal
    /// the orbit period.
    pub fn profile(&self, params: CylinderParams, modes: usize) -> Result<PeriodicProfile> {
        PeriodicProfile::from_samples(params, self.trajectory.iter().map(|p| p[1]).collect(), modes)
    }
}

/// `α = τ^{-1}(T)` for `T > T_*`, by Brent on the monotone period map.
pub fn inverse_period(d: usize, target: f64) -> Result<f64> {
    let ts = t_star(d);
    let u0 = u0(d)?;
    if !(target > ts) || !target.is_finite() {
        return Err(domain(format!("inverse_period requires T > T_* = {ts}, got {target}")));
    }
    let mut lo_gap = 1e-2 * (1.0 - u0);
    while period(d, u0 + lo_gap)? >= target {
        lo_gap /= 10.0;
        if lo_gap < 1e-13 {
            return Err(computation(format!("T = {target} too close to T_* to bracket")));
        }
    }
    let mut hi_gap = 1e-2;
    while period(d, 1.0 - hi_gap)? <= target {
        hi_gap /= 10.0;
        if hi_gap < 1e-14 {
            return Err(computation(format!("T = {target} too large to bracket")));
        }
    }
    let mut err = None;
    let root = brent_root(
        |a| match period(d, a) {
            Ok(p) => p - target,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        u0 + lo_gap,
        1.0 - hi_gap,
        1e-15,
        200,
    );
    if let Some(e) = err {
        return Err(e);
    }
    root
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn limits_of_period_map() {
        let u = u0(3).unwrap();
        let tau = period(3, u + 1e-4).unwrap();
        assert!((tau - 2.0 * PI).abs() < 1e-3, "{tau}");
        assert!(period(3, 1.0 - 1e-8).unwrap() > 20.0);
        assert!(period(3, u).is_err() && period(3, 1.0).is_err());
    }

    #[test]
    fn quadrature_matches_integration() {
        for d in [3, 4, 6] {
            let u = u0(d).unwrap();
            for frac in [0.05, 0.4, 0.9] {
                let a = u + frac * (1.0 - u);
                let p1 = period(d, a).unwrap();
                let p2 = period_by_integration(d, a).unwrap();
                assert!((p1 - p2).abs() < 1e-9 * p1, "d={d} a={a}: {p1} vs {p2}");
            }
        }
    }

    #[test]
    fn orbit_invariants() {
        let d = 3;
        let a = u0(d).unwrap() + 0.1;
        let o = solve_orbit_with(d, a, 256).unwrap();
        assert_eq!(o.trajectory[0][1], a);
        assert!(o.max_energy_deviation() < 1e-10);
        let (asym, dec) = o.shape_check();
        assert!(asym < 1e-9 && dec);
        assert!(o.energy_drift(10).unwrap() < 1e-7);
        assert!(o.u_min > 0.0 && o.u_min < u0(d).unwrap());
    }

    #[test]
    fn inverse_round_trip() {
        let d = 3;
        let ts = t_star(d);
        for target in [1.01 * ts, 2.0 * ts, 3.0 * ts] {
            let a = inverse_period(d, target).unwrap();
            assert!((period(d, a).unwrap() - target).abs() < 1e-9 * target);
        }
        assert!(inverse_period(d, ts).is_err());
    }

    #[test]
    fn near_homoclinic_profile() {
        // α close to 1: the orbit approaches cosh^{-(d-2)/2}(t) near t = 0
        let d = 3;
        let o = solve_orbit_with(d, 1.0 - 1e-10, 2048).unwrap();
        for p in o.trajectory.iter().take(200) {
            let q = p[0].cosh().powf(-0.5);
            assert!((p[1] - q).abs() < 1e-4, "t={} u={} Q={q}", p[0], p[1]);
        }
    }
}
