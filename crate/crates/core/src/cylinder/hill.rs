//! Fourier-Galerkin (Hill) discretization of the Hessian blocks
//! `L̃_{T,ℓ} = -∂_t² + ℓ(ℓ+d-2) + (d-2)²/4 - d(d+2)/4 u_*^{q-2}` and the
//! rank-one corrected `ℓ = 0` block of `L_T`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::constant::{optimizer_profile, Branch};
use super::orbit::Orbit;
use super::{critical_exponent, mass, CylinderParams, PeriodicProfile, DEFAULT_MODES, KERNEL_RATIO};
use crate::error::{computation, domain, Result};
use crate::zonal::SpectrumReport;

#[derive(Debug, Clone)]
pub struct HillOperator {
    pub params: CylinderParams,
    pub modes: usize,
    pub grid: usize,
    pub ustar: PeriodicProfile,
    pub branch: Branch,
    /// Orthonormal real Fourier basis at the grid nodes, `grid × (2K+1)`.
    basis: DMatrix<f64>,
    /// `d(d+2)/4 u_*^{q-2}` on the grid.
    potential: Vec<f64>,
}

fn grid_for(modes: usize) -> usize {
    (8 * modes).max(64)
}

impl HillOperator {
    pub fn new(params: CylinderParams, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(domain("Hill discretization needs at least one Fourier mode"));
        }
        let grid = grid_for(modes);
        let (ustar, branch) = optimizer_profile(params, modes, grid)?;
        let t = params.period;
        let w = params.frequency();
        let m = 2 * modes + 1;
        let (c0, c1) = ((1.0 / t).sqrt(), (2.0 / t).sqrt());
        let basis = DMatrix::from_fn(grid, m, |j, i| {
            let x = j as f64 * t / grid as f64;
            match i {
                0 => c0,
                _ if i % 2 == 1 => c1 * (i.div_ceil(2) as f64 * w * x).cos(),
                _ => c1 * ((i / 2) as f64 * w * x).sin(),
            }
        });
        let d = params.d as f64;
        let q = critical_exponent(params.d);
        let potential = ustar.samples.iter().map(|&u| d * (d + 2.0) / 4.0 * u.abs().powf(q - 2.0)).collect();
        Ok(Self { params, modes, grid, ustar, branch, basis, potential })
    }

    pub fn dim(&self) -> usize {
        2 * self.modes + 1
    }

    fn wavenumber(i: usize) -> usize {
        i.div_ceil(2)
    }

    /// Diagonal of `E_{T,ℓ} = -∂_t² + ℓ(ℓ+d-2) + (d-2)²/4` in the basis.
    pub fn energy_diagonal(&self, l: usize) -> Vec<f64> {
        let w = self.params.frequency();
        let shift = (l * (l + self.params.d - 2)) as f64 + mass(self.params.d);
        (0..self.dim()).map(|i| (Self::wavenumber(i) as f64 * w).powi(2) + shift).collect()
    }

    /// Basis coefficients of grid samples.
    pub fn coefficients(&self, samples: &[f64]) -> DVector<f64> {
        let h = self.params.period / self.grid as f64;
        self.basis.tr_mul(&DVector::from_iterator(self.grid, samples.iter().map(|v| v * h)))
    }

    /// `L̃_{T,ℓ}`, plus `d‖u_*‖_q^{-q}|u_*^{q-1}⟩⟨u_*^{q-1}|` when `ℓ = 0` and
    /// `corrected`.
    pub fn block(&self, l: usize, corrected: bool) -> DMatrix<f64> {
        let h = self.params.period / self.grid as f64;
        let mut weighted = self.basis.clone();
        for (j, mut row) in weighted.row_iter_mut().enumerate() {
            row *= h * self.potential[j];
        }
        let mut a = -self.basis.tr_mul(&weighted);
        for (i, e) in self.energy_diagonal(l).into_iter().enumerate() {
            a[(i, i)] += e;
        }
        if l == 0 && corrected {
            let q = self.params.q;
            let g = self.coefficients(&self.ustar.samples.iter().map(|u| u.abs().powf(q - 1.0)).collect::<Vec<_>>());
            let norm_q: f64 = self.ustar.samples.iter().map(|u| u.abs().powf(q)).sum::<f64>() * h;
            a += (self.params.d as f64 / norm_q) * &g * g.transpose();
        }
        a = 0.5 * (&a + a.transpose());
        a
    }

    /// `(d-2)²/4 + d(d+2)/4 · max u_*^{q-2}`.
    pub fn spectral_scale(&self) -> f64 {
        mass(self.params.d) + self.potential.iter().copied().fold(0.0, f64::max)
    }

    pub fn kernel_tol(&self) -> f64 {
        KERNEL_RATIO * self.spectral_scale()
    }

    fn eigen(&self, l: usize) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
        let a = self.block(l, true);
        let e = SymmetricEigen::try_new(a, f64::EPSILON, 10_000)
            .ok_or_else(|| computation(format!("Hill eigensolver failed for l = {l}")))?;
        if e.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(computation(format!("non-finite Hill eigenvalue for l = {l}")));
        }
        Ok(e)
    }

    /// Spectrum of block `ℓ` (rank-one corrected for `ℓ = 0`).
    pub fn spectrum(&self, l: usize) -> Result<SpectrumReport> {
        let e = self.eigen(l)?;
        Ok(SpectrumReport::new(e.eigenvalues.iter().copied().collect(), self.kernel_tol(), self.modes, self.grid))
    }

    /// The zero modes predicted for the `ℓ = 0` block:
    /// `u_*` (T < T_*), `{1, cos, sin}` (T = T_*), `{u_*, ∂_t u_*}` (T > T_*).
    pub fn predicted_kernel(&self) -> Vec<DVector<f64>> {
        let mut v = vec![self.coefficients(&self.ustar.samples)];
        match self.branch {
            Branch::Orbit { .. } => v.push(self.coefficients(&self.ustar.derivative().samples)),
            Branch::Constant if self.params.is_critical() => {
                for i in [1, 2] {
                    let mut e = DVector::zeros(self.dim());
                    e[i] = 1.0;
                    v.push(e);
                }
            }
            Branch::Constant => {}
        }
        v
    }

    /// `max ‖v - P_ker v‖/‖v‖` over `vectors`, with `P_ker` the numerical
    /// kernel projector of block `ℓ`.
    pub fn kernel_residual(&self, l: usize, vectors: &[DVector<f64>]) -> Result<f64> {
        let e = self.eigen(l)?;
        let tol = self.kernel_tol();
        let cols: Vec<usize> = (0..self.dim()).filter(|&i| e.eigenvalues[i].abs() < tol).collect();
        Ok(vectors
            .iter()
            .map(|v| {
                let mut p = DVector::zeros(self.dim());
                for &i in &cols {
                    let c = e.eigenvectors.column(i);
                    p += c * c.dot(v);
                }
                (v - p).norm() / v.norm()
            })
            .fold(0.0, f64::max))
    }

    /// Smallest generalized eigenvalue of `L v = λ E v` on block `ℓ`, with `v`
    /// `E`-orthogonal to the coefficient vectors in `constraints`.
    pub fn constrained_min(&self, l: usize, constraints: &[DVector<f64>]) -> Result<f64> {
        let dg = self.energy_diagonal(l);
        let s = DVector::from_iterator(self.dim(), dg.iter().map(|v| v.sqrt()));
        let a = self.block(l, true);
        let b = DMatrix::from_fn(self.dim(), self.dim(), |i, j| a[(i, j)] / (s[i] * s[j]));
        let mut z: Vec<DVector<f64>> = Vec::new();
        for c in constraints {
            let mut v = c.component_mul(&s);
            let scale = v.norm();
            for zk in &z {
                let proj = zk.dot(&v);
                v -= zk * proj;
            }
            if v.norm() > 1e-10 * scale && scale > 0.0 {
                z.push(v.normalize());
            }
        }
        let mut p = DMatrix::identity(self.dim(), self.dim());
        for zk in &z {
            p -= zk * zk.transpose();
        }
        let big = 10.0 * (b.amax() + 1.0);
        let mut m = &p * &b * &p;
        for zk in &z {
            m += big * zk * zk.transpose();
        }
        m = 0.5 * (&m + m.transpose());
        let e = SymmetricEigen::try_new(m, f64::EPSILON, 10_000)
            .ok_or_else(|| computation(format!("constrained eigensolver failed for l = {l}")))?;
        Ok(e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

pub fn hessian_block_spectrum(d: usize, period: f64, l: usize, modes: usize) -> Result<SpectrumReport> {
    HillOperator::new(CylinderParams::new(d, period)?, modes)?.spectrum(l)
}

/// `(m - (d-2))/(m + (d-2)²/4)`, `m = min{(2π/T)², d-1}`, valid for `T ≤ T_*`.
pub fn c_t_closed_form(d: usize, period: f64) -> Result<f64> {
    let p = CylinderParams::new(d, period)?;
    if period > p.t_star {
        return Err(domain(format!("closed form for c_T needs T <= T_* = {}, got {period}", p.t_star)));
    }
    let m = p.frequency().powi(2).min(d as f64 - 1.0);
    Ok((m - (d as f64 - 2.0)) / (m + p.mass()))
}

/// `c_T` from the Galerkin generalized eigenproblem on the `ℓ = 0` block
/// (constrained `E_T`-orthogonal to `u_*`, `∂_t u_*`) and the `ℓ = 1` block.
/// Blocks `ℓ ≥ 2` only add a positive constant to `E_{T,ℓ}` and cannot lower
/// the ratio.
pub fn c_t_numeric(d: usize, period: f64, modes: usize) -> Result<f64> {
    let op = HillOperator::new(CylinderParams::new(d, period)?, modes)?;
    let mut cons = vec![op.coefficients(&op.ustar.samples)];
    if let Branch::Orbit { .. } = op.branch {
        cons.push(op.coefficients(&op.ustar.derivative().samples));
    }
    let l0 = op.constrained_min(0, &cons)?;
    let l1 = op.constrained_min(1, &[])?;
    Ok(l0.min(l1))
}

/// Closed form for `T ≤ T_*`, Galerkin value otherwise.
pub fn c_t(d: usize, period: f64) -> Result<f64> {
    let p = CylinderParams::new(d, period)?;
    if period <= p.t_star {
        c_t_closed_form(d, period)
    } else {
        c_t_numeric(d, period, DEFAULT_MODES)
    }
}

/// Largest relative pointwise residual of `e^{±t}(u' ± (d-2)/2 u)` in
/// `-v'' + (d-1)v + (d-2)²/4 v - d(d+2)/4 u^{q-2} v = 0` along the orbit.
pub fn l1_factorization_residual(orbit: &Orbit) -> f64 {
    let d = orbit.d as f64;
    let q = critical_exponent(orbit.d);
    let c0 = mass(orbit.d);
    let nl = d * (d - 2.0) / 4.0;
    let a = (d - 2.0) / 2.0;
    let mut worst: f64 = 0.0;
    for p in &orbit.trajectory {
        let (u, du) = (p[1], p[2]);
        let d2u = c0 * u - nl * u.powf(q - 1.0);
        let d3u = (c0 - nl * (q - 1.0) * u.powf(q - 2.0)) * du;
        let pot = d * (d + 2.0) / 4.0 * u.powf(q - 2.0);
        for sgn in [1.0, -1.0] {
            // v = e^{±t} w; the exponential factors out of the residual
            let w = du + sgn * a * u;
            let dw = d2u + sgn * a * du;
            let d2w = d3u + sgn * a * d2u;
            let v2 = w + 2.0 * sgn * dw + d2w;
            let res = -v2 + (d - 1.0 + c0) * w - pot * w;
            let scale = v2.abs() + (d - 1.0 + c0) * w.abs() + pot * w.abs();
            if scale > 0.0 {
                worst = worst.max(res.abs() / scale);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::{inverse_period, solve_orbit_with, t_star};

    #[test]
    fn kernel_dimensions() {
        let d = 3;
        let ts = t_star(d);
        for (f, dim) in [(0.6, 1), (1.0, 3), (1.45, 2)] {
            let op = HillOperator::new(CylinderParams::new(d, f * ts).unwrap(), 64).unwrap();
            let s = op.spectrum(0).unwrap();
            assert_eq!(s.kernel_dim, dim, "T = {} T_*: {:?}", f, &s.eigenvalues[..5]);
            assert!(s.gap() > 1e-3 * op.spectral_scale());
            assert!(op.kernel_residual(0, &op.predicted_kernel()).unwrap() < 1e-6);
            let s1 = op.spectrum(1).unwrap();
            assert!(s1.eigenvalues[0] > 1e-3 * op.spectral_scale());
        }
    }

    #[test]
    fn translation_zero_mode() {
        let p = CylinderParams::new(3, 1.4 * t_star(3)).unwrap();
        let op = HillOperator::new(p, 64).unwrap();
        let v = op.coefficients(&op.ustar.derivative().samples);
        let a = op.block(0, false);
        let form = v.dot(&(&a * &v)) / v.norm_squared();
        assert!(form.abs() < 1e-8, "{form}");
    }

    #[test]
    fn c_t_matches_closed_form() {
        let d = 3;
        let ts = t_star(d);
        for f in [0.3, 0.5, 0.8, 0.95, 1.0] {
            let a = c_t_closed_form(d, f * ts).unwrap();
            let b = c_t_numeric(d, f * ts, 32).unwrap();
            assert!((a - b).abs() < 1e-8, "{f}: {a} vs {b}");
        }
        assert!((c_t_closed_form(3, ts / 2.0).unwrap() - 1.0 / 2.25).abs() < 1e-14);
        assert!(c_t_numeric(d, 1.2 * ts, 64).unwrap() > 0.0);
    }

    #[test]
    fn l1_factorization() {
        let a = inverse_period(3, 1.5 * t_star(3)).unwrap();
        let o = solve_orbit_with(3, a, 256).unwrap();
        assert!(l1_factorization_residual(&o) < 1e-12);
    }
}
