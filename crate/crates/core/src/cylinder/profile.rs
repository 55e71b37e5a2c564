//! `T`-periodic functions of `t`, as truncated real Fourier series plus
//! samples on a uniform grid.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::CylinderParams;
use crate::error::{precondition, Result};

/// `u(t) = a_0 + Σ_{k=1}^{K} (a_k cos kωt + b_k sin kωt)`, `ω = 2π/T`,
/// with `samples[j] = u(jT/N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicProfile {
    pub params: CylinderParams,
    /// `a_0, ..., a_K`.
    pub cos: Vec<f64>,
    /// `b_0 = 0, b_1, ..., b_K`.
    pub sin: Vec<f64>,
    pub samples: Vec<f64>,
}

fn fft(buf: &mut [Complex<f64>], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse { planner.plan_fft_inverse(buf.len()) } else { planner.plan_fft_forward(buf.len()) };
    plan.process(buf);
}

fn check_grid(modes: usize, grid: usize) -> Result<()> {
    if grid <= 2 * modes {
        return Err(precondition(format!("grid of {grid} points cannot resolve {modes} Fourier modes (need > 2K)")));
    }
    Ok(())
}

fn synthesize(cos: &[f64], sin: &[f64], grid: usize) -> Vec<f64> {
    let n = grid as f64;
    let mut buf = vec![Complex::new(0.0, 0.0); grid];
    buf[0] = Complex::new(n * cos[0], 0.0);
    for k in 1..cos.len() {
        let c = Complex::new(0.5 * n * cos[k], -0.5 * n * sin[k]);
        buf[k] = c;
        buf[grid - k] = c.conj();
    }
    fft(&mut buf, true);
    buf.iter().map(|z| z.re / n).collect()
}

impl PeriodicProfile {
    /// Analysis of uniform samples, truncated to `modes` Fourier modes.
    pub fn from_samples(params: CylinderParams, samples: Vec<f64>, modes: usize) -> Result<Self> {
        check_grid(modes, samples.len())?;
        let n = samples.len() as f64;
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft(&mut buf, false);
        let mut cos = vec![0.0; modes + 1];
        let mut sin = vec![0.0; modes + 1];
        cos[0] = buf[0].re / n;
        for k in 1..=modes {
            cos[k] = 2.0 * buf[k].re / n;
            sin[k] = -2.0 * buf[k].im / n;
        }
        Ok(Self { params, cos, sin, samples })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(params: CylinderParams, modes: usize, grid: usize, f: F) -> Result<Self> {
        let h = params.period / grid as f64;
        Self::from_samples(params, (0..grid).map(|j| f(j as f64 * h)).collect(), modes)
    }

    /// Synthesis from coefficients; `sin[0]` is ignored.
    pub fn from_coeffs(params: CylinderParams, cos: Vec<f64>, sin: Vec<f64>, grid: usize) -> Result<Self> {
        if cos.is_empty() || cos.len() != sin.len() {
            return Err(precondition("cos and sin coefficient vectors must be nonempty and equally long"));
        }
        check_grid(cos.len() - 1, grid)?;
        let mut sin = sin;
        sin[0] = 0.0;
        let samples = synthesize(&cos, &sin, grid);
        Ok(Self { params, cos, sin, samples })
    }

    pub fn constant(params: CylinderParams, value: f64, modes: usize, grid: usize) -> Result<Self> {
        let mut cos = vec![0.0; modes + 1];
        cos[0] = value;
        Self::from_coeffs(params, cos, vec![0.0; modes + 1], grid)
    }

    /// `cos(kωt)` (or `sin` when `sine`).
    pub fn mode(params: CylinderParams, k: usize, sine: bool, modes: usize, grid: usize) -> Result<Self> {
        if k > modes {
            return Err(precondition(format!("mode {k} exceeds bandlimit {modes}")));
        }
        let mut cos = vec![0.0; modes + 1];
        let mut sin = vec![0.0; modes + 1];
        if sine {
            sin[k] = 1.0;
        } else {
            cos[k] = 1.0;
        }
        Self::from_coeffs(params, cos, sin, grid)
    }

    pub fn modes(&self) -> usize {
        self.cos.len() - 1
    }

    pub fn grid(&self) -> usize {
        self.samples.len()
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.params.period / self.grid() as f64;
        (0..self.grid()).map(|j| j as f64 * h).collect()
    }

    /// Samples of the truncated series (differs from `samples` when the
    /// analyzed data were not bandlimited).
    pub fn synthesize(&self) -> Vec<f64> {
        synthesize(&self.cos, &self.sin, self.grid())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let w = self.params.frequency();
        self.cos[0]
            + (1..self.cos.len())
                .map(|k| {
                    let (s, c) = (k as f64 * w * t).sin_cos();
                    self.cos[k] * c + self.sin[k] * s
                })
                .sum::<f64>()
    }

    /// Same series on another grid or bandlimit.
    pub fn regrid(&self, modes: usize, grid: usize) -> Result<Self> {
        let mut cos = vec![0.0; modes + 1];
        let mut sin = vec![0.0; modes + 1];
        let m = modes.min(self.modes());
        cos[..=m].copy_from_slice(&self.cos[..=m]);
        sin[..=m].copy_from_slice(&self.sin[..=m]);
        Self::from_coeffs(self.params, cos, sin, grid)
    }

    pub fn derivative(&self) -> Self {
        let w = self.params.frequency();
        let cos: Vec<f64> = (0..self.cos.len()).map(|k| k as f64 * w * self.sin[k]).collect();
        let sin: Vec<f64> = (0..self.cos.len()).map(|k| -(k as f64) * w * self.cos[k]).collect();
        let samples = synthesize(&cos, &sin, self.grid());
        Self { params: self.params, cos, sin, samples }
    }

    /// `t ↦ u(t - s)`.
    pub fn translate(&self, s: f64) -> Self {
        let w = self.params.frequency();
        let mut cos = self.cos.clone();
        let mut sin = self.sin.clone();
        for k in 1..cos.len() {
            let (sn, cs) = (k as f64 * w * s).sin_cos();
            cos[k] = self.cos[k] * cs - self.sin[k] * sn;
            sin[k] = self.cos[k] * sn + self.sin[k] * cs;
        }
        let samples = synthesize(&cos, &sin, self.grid());
        Self { params: self.params, cos, sin, samples }
    }

    /// `a·self + b·other` on a common grid and bandlimit.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.grid() != other.grid() || self.modes() != other.modes() {
            return Err(precondition("lincomb requires the same grid and bandlimit"));
        }
        if self.params != other.params {
            return Err(precondition("lincomb requires the same cylinder"));
        }
        let comb = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, r)| a * p + b * r).collect::<Vec<_>>();
        Ok(Self {
            params: self.params,
            cos: comb(&self.cos, &other.cos),
            sin: comb(&self.sin, &other.sin),
            samples: comb(&self.samples, &other.samples),
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            params: self.params,
            cos: self.cos.iter().map(|v| c * v).collect(),
            sin: self.sin.iter().map(|v| c * v).collect(),
            samples: self.samples.iter().map(|v| c * v).collect(),
        }
    }

    /// Keeps only the listed modes (0 is the mean).
    pub fn restrict_modes(&self, keep: &[usize]) -> Self {
        let mut cos = vec![0.0; self.cos.len()];
        let mut sin = vec![0.0; self.cos.len()];
        for &k in keep.iter().filter(|&&k| k < self.cos.len()) {
            cos[k] = self.cos[k];
            sin[k] = self.sin[k];
        }
        let samples = synthesize(&cos, &sin, self.grid());
        Self { params: self.params, cos, sin, samples }
    }

    /// `∫_0^T g(t, u(t)) dt` by the periodic trapezoidal rule.
    pub fn integrate_samples<G: Fn(f64, f64) -> f64>(&self, g: G) -> f64 {
        let h = self.params.period / self.grid() as f64;
        self.samples.iter().enumerate().map(|(j, &u)| g(j as f64 * h, u)).sum::<f64>() * h
    }

    /// `∫_{Σ_T} u` from the mean coefficient.
    pub fn integral(&self) -> f64 {
        self.params.volume() * self.cos[0]
    }

    /// `∫_{Σ_T} u²` by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        let tail: f64 = (1..self.cos.len()).map(|k| self.cos[k].powi(2) + self.sin[k].powi(2)).sum();
        self.params.volume() * (self.cos[0].powi(2) + 0.5 * tail)
    }

    /// `∫_{Σ_T} u²` on the grid.
    pub fn l2_norm_sq_grid(&self) -> f64 {
        self.params.cross_section() * self.integrate_samples(|_, u| u * u)
    }

    /// `∫_{Σ_T} u v` by Parseval.
    pub fn inner(&self, other: &Self) -> f64 {
        let m = self.modes().min(other.modes());
        let tail: f64 = (1..=m).map(|k| self.cos[k] * other.cos[k] + self.sin[k] * other.sin[k]).sum();
        self.params.volume() * (self.cos[0] * other.cos[0] + 0.5 * tail)
    }

    /// `E_T[u, v] = ∫_{Σ_T} (u'v' + (d-2)²/4 uv)`.
    pub fn energy_inner(&self, other: &Self) -> f64 {
        let w = self.params.frequency();
        let c0 = self.params.mass();
        let m = self.modes().min(other.modes());
        let tail: f64 = (1..=m)
            .map(|k| ((k as f64 * w).powi(2) + c0) * (self.cos[k] * other.cos[k] + self.sin[k] * other.sin[k]))
            .sum();
        self.params.volume() * (c0 * self.cos[0] * other.cos[0] + 0.5 * tail)
    }

    /// `E_T[u]`.
    pub fn energy(&self) -> f64 {
        self.energy_inner(self)
    }

    /// `‖u‖_{L^p(Σ_T)}` on the grid.
    pub fn lp_norm(&self, p: f64) -> f64 {
        (self.params.cross_section() * self.integrate_samples(|_, u| u.abs().powf(p))).powf(1.0 / p)
    }

    /// `E_T[u]/‖u‖_q²`.
    pub fn quotient(&self) -> f64 {
        self.energy() / self.lp_norm(self.params.q).powi(2)
    }

    /// `E_T[u] - S ‖u‖_q²`.
    pub fn deficit(&self, sharp: f64) -> f64 {
        self.energy() - sharp * self.lp_norm(self.params.q).powi(2)
    }

    /// Removes the `E_T`-projection onto `span(basis)`; basis elements with
    /// vanishing energy are skipped.
    pub fn energy_orthogonalize(&self, basis: &[Self]) -> Result<Self> {
        let mut ortho: Vec<Self> = Vec::new();
        for b in basis {
            let mut v = b.clone();
            for o in &ortho {
                v = v.lincomb(1.0, o, -o.energy_inner(&v))?;
            }
            let e = v.energy();
            if e > 1e-24 * b.energy().max(f64::MIN_POSITIVE) && e > 0.0 {
                ortho.push(v.scaled(1.0 / e.sqrt()));
            }
        }
        let mut r = self.clone();
        for o in &ortho {
            r = r.lincomb(1.0, o, -o.energy_inner(&r))?;
        }
        Ok(r)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> CylinderParams {
        CylinderParams::new(3, 5.0).unwrap()
    }

    #[test]
    fn fft_round_trip() {
        let p = params();
        let u = PeriodicProfile::from_fn(p, 16, 64, |t| (1.0 + 0.3 * (2.0 * PI * t / 5.0).sin()).exp()).unwrap();
        let back = u.synthesize();
        let err = u.samples.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        let v = PeriodicProfile::from_coeffs(p, u.cos.clone(), u.sin.clone(), 64).unwrap();
        let w = PeriodicProfile::from_samples(p, v.samples.clone(), 16).unwrap();
        for k in 0..=16 {
            assert!((w.cos[k] - u.cos[k]).abs() < 1e-13 && (w.sin[k] - u.sin[k]).abs() < 1e-13);
        }
        assert!((u.eval(1.25) - (1.0 + 0.3 * (2.0 * PI * 0.25).sin()).exp()).abs() < 1e-10);
    }

    #[test]
    fn parseval_matches_grid() {
        let p = params();
        let u = PeriodicProfile::from_fn(p, 24, 128, |t| 1.0 / (1.2 + (2.0 * PI * t / 5.0).cos())).unwrap();
        assert!((u.l2_norm_sq() - u.l2_norm_sq_grid()).abs() < 1e-8 * u.l2_norm_sq());
        assert!(PeriodicProfile::from_fn(p, 64, 128, |t| t).is_err());
    }

    #[test]
    fn derivative_translate_energy() {
        let p = params();
        let w = p.frequency();
        let u = PeriodicProfile::mode(p, 2, false, 8, 32).unwrap();
        let du = u.derivative();
        assert!((du.sin[2] + 2.0 * w).abs() < 1e-14);
        let shifted = u.translate(0.3);
        assert!((shifted.eval(0.7) - (2.0 * w * 0.4).cos()).abs() < 1e-13);
        let e = p.volume() * 0.5 * ((2.0 * w).powi(2) + p.mass());
        assert!((u.energy() - e).abs() < 1e-12 * e);
        let one = PeriodicProfile::constant(p, 1.0, 8, 32).unwrap();
        assert!((one.lp_norm(6.0) - p.volume().powf(1.0 / 6.0)).abs() < 1e-13);
    }
}
