//! Fourier-Galerkin realization of the periodic variational problem in the
//! rescaled chart `s ∈ [-1, 1)`, `ε = 1/T`.
//!
//! A real function is stored as its coefficients `c_k`, `|k| <= K`, of
//! `f(s) = Σ c_k e^{iπks}`. A spinor `z = (a, b)` is stored in the eigenbasis
//! of `A_ε z = -ε J z' + J B z`: on mode `k` the symbol of `A_ε` is the
//! hermitian matrix `[[0, 1 - iω], [1 + iω, 0]]` with `ω = επk`, with
//! eigenvalues `±ρ`, `ρ = √(1 + ω²)`, and unit eigenvectors
//! `e± = ((1 - iω)/ρ, ±1)/√2`.
//!
//! Quartic terms are evaluated on a collocation grid of `N = 4(K + 1)` nodes,
//! which integrates degree-`4K` trigonometric polynomials exactly and projects
//! cubic products back onto `|k| <= K` without aliasing.

mod field;
mod ground_state;
mod reduction;

pub use field::{FieldDocument, PeriodicField, SpinorField};
pub(crate) use field::enforce_real;
pub use ground_state::{
    bump, concentration_diagnostic, cutoff_test_pair, default_modes, equilibrium_pair,
    ground_state, ConcentrationReport, GroundState, GroundStateDiagnostics, GroundStateOptions,
    IterationRecord, Stage,
};
pub use reduction::{
    nehari_project, nehari_residuals, reduce_g, reduction_objective, NehariProjection,
    NehariResiduals, ReductionOptions,
};

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex64;

/// Spectral data of `A_ε` on the modes `|k| <= K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumA {
    pub eps: f64,
    pub half_period: f64,
    pub modes: usize,
}

/// One eigenpair of `A_ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenpair {
    pub k: i64,
    pub omega: f64,
    pub lambda: f64,
    pub vector: [C64; 2],
}

impl SpectrumA {
    pub fn from_eps(eps: f64, modes: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {eps}")));
        }
        if modes < 1 {
            return Err(Error::InvalidInput("at least one Fourier mode is required".into()));
        }
        Ok(Self {
            eps,
            half_period: 1.0 / eps,
            modes,
        })
    }

    pub fn omega(&self, k: i64) -> f64 {
        self.eps * PI * k as f64
    }

    /// `ρ_k = √(1 + ω_k²)`, the modulus of both eigenvalues on mode `k`.
    pub fn rho(&self, k: i64) -> f64 {
        self.omega(k).hypot(1.0)
    }

    pub fn eigenvector(&self, k: i64, positive: bool) -> [C64; 2] {
        eigenvector(self.omega(k), positive)
    }

    pub fn eigenpairs(&self) -> Vec<Eigenpair> {
        let k_max = self.modes as i64;
        let mut out = Vec::with_capacity(2 * (2 * self.modes + 1));
        for k in -k_max..=k_max {
            for positive in [true, false] {
                let rho = self.rho(k);
                out.push(Eigenpair {
                    k,
                    omega: self.omega(k),
                    lambda: if positive { rho } else { -rho },
                    vector: self.eigenvector(k, positive),
                });
            }
        }
        out
    }

    /// Smallest `|λ|` over the truncated spectrum (always the `k = 0` pair).
    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.eigenpairs()
            .iter()
            .map(|p| p.lambda.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Spectrum of `A` for half period `T` truncated at `K` modes.
pub fn build_spectrum(half_period: f64, modes: usize) -> Result<SpectrumA> {
    if !(half_period > 0.0 && half_period.is_finite()) {
        return Err(Error::InvalidInput(format!("T must be positive, got {half_period}")));
    }
    SpectrumA::from_eps(1.0 / half_period, modes)
}

pub(crate) fn eigenvector(omega: f64, positive: bool) -> [C64; 2] {
    let rho = omega.hypot(1.0);
    let first = C64::new(1.0, -omega) / rho * FRAC_1_SQRT_2;
    let second = C64::new(if positive { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 }, 0.0);
    [first, second]
}

/// `A_ε z` computed diagonally in the eigenbasis.
pub fn apply_a(z: &SpinorField, sp: &SpectrumA) -> Result<SpinorField> {
    if z.modes != sp.modes {
        return Err(Error::TruncationMismatch {
            expected: sp.modes,
            found: z.modes,
        });
    }
    if (z.eps - sp.eps).abs() > 1e-14 * sp.eps {
        return Err(Error::InvalidInput(format!(
            "field has epsilon {} but spectrum has {}",
            z.eps, sp.eps
        )));
    }
    let mut out = z.clone();
    for (i, k) in z.indices() {
        let rho = sp.rho(k);
        out.plus[i] *= rho;
        out.minus[i] *= -rho;
    }
    Ok(out)
}

/// `(P⁺ z, P⁻ z)`.
pub fn project(z: &SpinorField) -> (SpinorField, SpinorField) {
    let mut plus = z.clone();
    let mut minus = z.clone();
    plus.minus.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
    minus.plus.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
    (plus, minus)
}

/// Rescaled norms of a field (not squared).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    /// `‖u‖_{1,ε}` with `‖u‖² = (1/ε)∫ ε²u'² + u²/4`.
    pub h1: f64,
    /// `‖z‖_{1/2,ε}` with `‖z‖² = (1/ε)∫ ||A_ε|^{1/2} z|²`.
    pub half: f64,
    /// `((1/ε)∫ u⁴)^{1/4}`.
    pub l4_u: f64,
    /// `((1/ε)∫ |z|⁴)^{1/4}`.
    pub l4_z: f64,
}

/// Pieces of `E_ε(u, z) = (scalar_quadratic + spinor_quadratic - coupling)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub scalar_quadratic: f64,
    pub spinor_quadratic: f64,
    pub coupling: f64,
    pub total: f64,
}

/// FFT plans and grid bookkeeping for one `(ε, K)` pair.
#[derive(Clone)]
pub struct Galerkin {
    pub spectrum: SpectrumA,
    pub grid_size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Galerkin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Galerkin")
            .field("spectrum", &self.spectrum)
            .field("grid_size", &self.grid_size)
            .finish()
    }
}

/// Grid values of `u`, `a`, `b` at `s_j = -1 + 2j/N`.
#[derive(Debug, Clone)]
pub struct GridValues {
    pub u: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Galerkin {
    pub fn new(eps: f64, modes: usize) -> Result<Self> {
        let spectrum = SpectrumA::from_eps(eps, modes)?;
        Ok(Self::with_grid(spectrum, 4 * (modes + 1)))
    }

    pub fn for_field(f: &PeriodicField) -> Result<Self> {
        Self::new(f.eps, f.modes)
    }

    /// A context with an explicit grid size `n >= 2K + 1` (no dealiasing guarantee).
    pub fn with_grid(spectrum: SpectrumA, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            spectrum,
            grid_size: n,
        }
    }

    pub fn eps(&self) -> f64 {
        self.spectrum.eps
    }

    pub fn modes(&self) -> usize {
        self.spectrum.modes
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.grid_size as f64;
        (0..self.grid_size).map(|j| -1.0 + 2.0 * j as f64 / n).collect()
    }

    fn check(&self, f: &PeriodicField) -> Result<()> {
        if f.modes != self.modes() {
            return Err(Error::TruncationMismatch {
                expected: self.modes(),
                found: f.modes,
            });
        }
        if (f.eps - self.eps()).abs() > 1e-14 * self.eps() {
            return Err(Error::InvalidInput(format!(
                "field has epsilon {} but context has {}",
                f.eps,
                self.eps()
            )));
        }
        Ok(())
    }

    /// Grid values of the real function with coefficients `coeffs` (`|k| <= K`).
    pub fn synthesize(&self, coeffs: &[C64]) -> Vec<f64> {
        let n = self.grid_size;
        let k_max = (coeffs.len() / 2) as i64;
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for (i, c) in coeffs.iter().enumerate() {
            let k = i as i64 - k_max;
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            buf[k.rem_euclid(n as i64) as usize] += c * sign;
        }
        self.inverse.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Coefficients `|k| <= K` of the trigonometric interpolant of grid values.
    pub fn analyze(&self, values: &[f64]) -> Vec<C64> {
        let n = self.grid_size;
        assert_eq!(values.len(), n, "grid size mismatch");
        let mut buf: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        let k_max = self.modes() as i64;
        let scale = 1.0 / n as f64;
        (-k_max..=k_max)
            .map(|k| {
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                buf[k.rem_euclid(n as i64) as usize] * (sign * scale)
            })
            .collect()
    }

    pub fn grid_values(&self, f: &PeriodicField) -> GridValues {
        let (a, b) = f.z.to_ab_coeffs();
        GridValues {
            u: self.synthesize(&f.u),
            a: self.synthesize(&a),
            b: self.synthesize(&b),
        }
    }

    /// `∫_{-1}^{1} g ds` by the collocation rule.
    pub fn integrate(&self, g: impl Iterator<Item = f64>) -> f64 {
        2.0 / self.grid_size as f64 * g.sum::<f64>()
    }

    pub fn norms(&self, f: &PeriodicField) -> Result<Norms> {
        self.check(f)?;
        let eps = self.eps();
        let g = self.grid_values(f);
        let l4_u = self.integrate(g.u.iter().map(|u| u.powi(4))) / eps;
        let l4_z = self.integrate(g.a.iter().zip(&g.b).map(|(a, b)| (a * a + b * b).powi(2))) / eps;
        Ok(Norms {
            h1: self.h1_sq(&f.u).sqrt(),
            half: self.half_sq(&f.z).sqrt(),
            l4_u: l4_u.max(0.0).powf(0.25),
            l4_z: l4_z.max(0.0).powf(0.25),
        })
    }

    /// `(ε²π²k² + 1/4)`, the symbol of `-ε²∂² + 1/4`.
    pub fn scalar_weight(&self, k: i64) -> f64 {
        let w = self.spectrum.omega(k);
        w * w + 0.25
    }

    pub fn h1_sq(&self, u: &[C64]) -> f64 {
        let k_max = self.modes() as i64;
        2.0 / self.eps()
            * u.iter()
                .enumerate()
                .map(|(i, c)| self.scalar_weight(i as i64 - k_max) * c.norm_sqr())
                .sum::<f64>()
    }

    pub fn half_sq(&self, z: &SpinorField) -> f64 {
        2.0 / self.eps()
            * z.indices()
                .map(|(i, k)| self.spectrum.rho(k) * (z.plus[i].norm_sqr() + z.minus[i].norm_sqr()))
                .sum::<f64>()
    }

    /// `⟨A_ε z, z⟩ / ε` integrated over `[-1, 1]`.
    pub fn spinor_quadratic(&self, z: &SpinorField) -> f64 {
        2.0 / self.eps()
            * z.indices()
                .map(|(i, k)| self.spectrum.rho(k) * (z.plus[i].norm_sqr() - z.minus[i].norm_sqr()))
                .sum::<f64>()
    }

    /// `(1/ε) ∫ u² |z|²`.
    pub fn coupling(&self, f: &PeriodicField) -> f64 {
        let g = self.grid_values(f);
        self.coupling_from_grid(&g)
    }

    fn coupling_from_grid(&self, g: &GridValues) -> f64 {
        self.integrate(
            g.u.iter()
                .zip(g.a.iter().zip(&g.b))
                .map(|(u, (a, b))| u * u * (a * a + b * b)),
        ) / self.eps()
    }

    pub fn energy(&self, f: &PeriodicField) -> Result<EnergyBreakdown> {
        self.check(f)?;
        let scalar_quadratic = self.h1_sq(&f.u);
        let spinor_quadratic = self.spinor_quadratic(&f.z);
        let coupling = self.coupling(f);
        Ok(EnergyBreakdown {
            scalar_quadratic,
            spinor_quadratic,
            coupling,
            total: 0.5 * (scalar_quadratic + spinor_quadratic - coupling),
        })
    }

    /// Projections `P_K(u|z|²)` and `P_K(u² z)` (the latter in the eigenbasis).
    fn nonlinear_terms(&self, g: &GridValues) -> (Vec<C64>, SpinorField) {
        let n = self.grid_size;
        let mut uz2 = vec![0.0; n];
        let mut u2a = vec![0.0; n];
        let mut u2b = vec![0.0; n];
        for j in 0..n {
            let (u, a, b) = (g.u[j], g.a[j], g.b[j]);
            uz2[j] = u * (a * a + b * b);
            u2a[j] = u * u * a;
            u2b[j] = u * u * b;
        }
        let nu = self.analyze(&uz2);
        let nz = SpinorField::from_ab_coeffs(self.eps(), &self.analyze(&u2a), &self.analyze(&u2b));
        (nu, nz)
    }

    /// L²-type residual coefficients `(-ε²u'' + u/4 - u|z|², A_ε z - u² z)`.
    ///
    /// The directional derivative of `E_ε` is `(2/ε) Re Σ_k conj(h_k)·r_k`,
    /// see [`Galerkin::pair`].
    pub fn gradient(&self, f: &PeriodicField) -> Result<PeriodicField> {
        self.check(f)?;
        let g = self.grid_values(f);
        let (nu, nz) = self.nonlinear_terms(&g);
        Ok(self.residual_from_terms(f, &nu, &nz))
    }

    fn residual_from_terms(&self, f: &PeriodicField, nu: &[C64], nz: &SpinorField) -> PeriodicField {
        let mut r = f.clone();
        let k_max = self.modes() as i64;
        for i in 0..f.u.len() {
            let k = i as i64 - k_max;
            let rho = self.spectrum.rho(k);
            r.u[i] = self.scalar_weight(k) * f.u[i] - nu[i];
            r.z.plus[i] = rho * f.z.plus[i] - nz.plus[i];
            r.z.minus[i] = -rho * f.z.minus[i] - nz.minus[i];
        }
        r
    }

    /// `dE_ε[h] = (2/ε) Re Σ_k (conj(h_u) r_u + conj(h_±) r_±)`.
    pub fn pair(&self, gradient: &PeriodicField, h: &PeriodicField) -> f64 {
        let dot = |x: &[C64], y: &[C64]| -> f64 {
            x.iter().zip(y).map(|(a, b)| (b.conj() * a).re).sum::<f64>()
        };
        2.0 / self.eps()
            * (dot(&gradient.u, &h.u)
                + dot(&gradient.z.plus, &h.z.plus)
                + dot(&gradient.z.minus, &h.z.minus))
    }

    /// Norm of the gradient dual to `‖(u, z)‖_ε`.
    pub fn dual_norm(&self, r: &PeriodicField) -> f64 {
        self.dual_parts(r).iter().sum::<f64>().sqrt()
    }

    /// Squared dual norms of the `u`, `z⁺` and `z⁻` blocks.
    pub fn dual_parts(&self, r: &PeriodicField) -> [f64; 3] {
        let k_max = self.modes() as i64;
        let mut parts = [0.0; 3];
        for i in 0..r.u.len() {
            let k = i as i64 - k_max;
            let rho = self.spectrum.rho(k);
            parts[0] += r.u[i].norm_sqr() / self.scalar_weight(k);
            parts[1] += r.z.plus[i].norm_sqr() / rho;
            parts[2] += r.z.minus[i].norm_sqr() / rho;
        }
        parts.map(|p| 2.0 / self.eps() * p)
    }

    /// Directional derivative of the residual map at `f` along `h`.
    pub(crate) fn residual_jvp(&self, f_grid: &GridValues, h: &PeriodicField) -> PeriodicField {
        let hg = self.grid_values(h);
        let n = self.grid_size;
        let mut du = vec![0.0; n];
        let mut da = vec![0.0; n];
        let mut db = vec![0.0; n];
        for j in 0..n {
            let (u, a, b) = (f_grid.u[j], f_grid.a[j], f_grid.b[j]);
            let (hu, ha, hb) = (hg.u[j], hg.a[j], hg.b[j]);
            let z2 = a * a + b * b;
            du[j] = hu * z2 + 2.0 * u * (a * ha + b * hb);
            da[j] = 2.0 * u * hu * a + u * u * ha;
            db[j] = 2.0 * u * hu * b + u * u * hb;
        }
        let nu = self.analyze(&du);
        let nz = SpinorField::from_ab_coeffs(self.eps(), &self.analyze(&da), &self.analyze(&db));
        self.residual_from_terms(h, &nu, &nz)
    }
}

/// `E_ε(f)` with a fresh context.
pub fn energy(f: &PeriodicField) -> Result<EnergyBreakdown> {
    Galerkin::for_field(f)?.energy(f)
}

/// Gradient coefficients of `E_ε` at `f` with a fresh context.
pub fn gradient(f: &PeriodicField) -> Result<PeriodicField> {
    Galerkin::for_field(f)?.gradient(f)
}

pub fn norms(f: &PeriodicField) -> Result<Norms> {
    Galerkin::for_field(f)?.norms(f)
}
