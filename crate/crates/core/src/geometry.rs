//! Spinors on ℝ³, the explicit ground state there, and the conformal maps
//! between the cylinder, punctured space and the sphere.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Generators `iσ₁, iσ₂, iσ₃`: skew-adjoint, pairwise anti-commuting, square `-1`.
pub const CLIFFORD_GENERATORS: [[[C64; 2]; 2]; 3] = [
    [[ZERO, I], [I, ZERO]],
    [[ZERO, ONE], [C64::new(-1.0, 0.0), ZERO]],
    [[I, ZERO], [ZERO, C64::new(0.0, -1.0)]],
];

/// A spinor value in ℂ² attached to a point of ℝ³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spinor2 {
    pub components: [C64; 2],
    pub base_point: [f64; 3],
}

impl Spinor2 {
    pub fn new(c0: C64, c1: C64) -> Self {
        Self {
            components: [c0, c1],
            base_point: [0.0; 3],
        }
    }

    pub fn at(mut self, x: [f64; 3]) -> Self {
        self.base_point = x;
        self
    }

    /// Hermitian product, conjugate-linear in the first slot.
    pub fn inner(&self, other: &Spinor2) -> C64 {
        self.components[0].conj() * other.components[0] + self.components[1].conj() * other.components[1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            components: [self.components[0] * s, self.components[1] * s],
            base_point: self.base_point,
        }
    }

    pub fn sub(&self, o: &Spinor2) -> Self {
        Self {
            components: [self.components[0] - o.components[0], self.components[1] - o.components[1]],
            base_point: self.base_point,
        }
    }
}

/// Clifford multiplication `x · φ`.
pub fn clifford_mult(x: [f64; 3], phi: &Spinor2) -> Spinor2 {
    let mut out = [ZERO; 2];
    for (j, g) in CLIFFORD_GENERATORS.iter().enumerate() {
        for r in 0..2 {
            out[r] += x[j] * (g[r][0] * phi.components[0] + g[r][1] * phi.components[1]);
        }
    }
    Spinor2 {
        components: out,
        base_point: phi.base_point,
    }
}

fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// `U_λ(x) = (2λ/(λ² + |x|²))^{1/2}` and `Ψ_λ(x) = (2λ/(λ² + |x|²))^{3/2} (1 - x)·Φ₀`.
pub fn ground_state_closed_form(lambda: f64, x: [f64; 3], phi0: &Spinor2) -> Result<(f64, Spinor2)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    if (phi0.norm_sqr() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("Φ₀ must have unit length".into()));
    }
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let f = 2.0 * lambda / (lambda * lambda + r2);
    let xphi = clifford_mult(x, phi0);
    let psi = phi0.sub(&xphi).scale(C64::new(f.powf(1.5), 0.0)).at(x);
    Ok((f.sqrt(), psi))
}

/// `(f₁, f₂) = (Re⟨Φ₀, Ψ⟩, Re⟨x̂·Φ₀, Ψ⟩)`.
pub fn radial_components(x: [f64; 3], phi0: &Spinor2, psi: &Spinor2) -> (f64, f64) {
    let r = norm3(x);
    let f1 = phi0.inner(psi).re;
    if r == 0.0 {
        return (f1, 0.0);
    }
    let xhat = [x[0] / r, x[1] / r, x[2] / r];
    (f1, clifford_mult(xhat, phi0).inner(psi).re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileChart {
    /// Grid is `t`; `f1`, `f2` hold the cylinder components `a`, `b`.
    Cylinder,
    /// Grid is `r > 0`.
    Euclidean,
    /// Grid is the polar angle `θ ∈ (0, π)`.
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub chart: ProfileChart,
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub lambda: Option<f64>,
}

impl RadialProfile {
    pub fn new(chart: ProfileChart, grid: Vec<f64>, u: Vec<f64>, f1: Vec<f64>, f2: Vec<f64>) -> Result<Self> {
        let p = Self { chart, grid, u, f1, f2, lambda: None };
        p.validate()?;
        Ok(p)
    }

    /// Sample `g(node) -> (u, f1, f2)` on `grid`.
    pub fn from_fn<F>(chart: ProfileChart, grid: Vec<f64>, g: F) -> Result<Self>
    where
        F: Fn(f64) -> (f64, f64, f64),
    {
        let (mut u, mut f1, mut f2) = (Vec::new(), Vec::new(), Vec::new());
        for &x in &grid {
            let (a, b, c) = g(x);
            u.push(a);
            f1.push(b);
            f2.push(c);
        }
        Self::new(chart, grid, u, f1, f2)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if self.u.len() != n || self.f1.len() != n || self.f2.len() != n {
            return Err(Error::InvalidInput("profile columns differ in length".into()));
        }
        if n < 2 {
            return Err(Error::InvalidInput("profile needs at least two nodes".into()));
        }
        if !self.grid.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("profile grid must be strictly increasing".into()));
        }
        match self.chart {
            ProfileChart::Euclidean if self.grid[0] <= 0.0 => {
                Err(Error::InvalidInput("euclidean grid must exclude r = 0".into()))
            }
            ProfileChart::Sphere if self.grid[0] <= 0.0 || self.grid[n - 1] >= std::f64::consts::PI => {
                Err(Error::InvalidInput("sphere grid must exclude both poles".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Log-uniform radii `r_j = e^{s_j}` with `s` uniform on `[ln lo, ln hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|j| (a + (b - a) * j as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Cubic interpolation through the four nodes nearest `x`; exact at nodes.
pub fn cubic_interpolate(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    let (lo, hi) = (xs[0], xs[n - 1]);
    let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    if !(x >= lo - slack && x <= hi + slack) {
        return Err(Error::GridCoverage { value: x, lo, hi });
    }
    let i = xs.partition_point(|&v| v < x);
    for j in [i.saturating_sub(1), i.min(n - 1)] {
        if (xs[j] - x).abs() <= 1e-13 * x.abs().max(1.0) {
            return Ok(ys[j]);
        }
    }
    if n < 4 {
        let j = i.clamp(1, n - 1);
        let w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
        return Ok(ys[j - 1] * (1.0 - w) + ys[j] * w);
    }
    let start = i.saturating_sub(2).min(n - 4);
    let mut acc = 0.0;
    for a in start..start + 4 {
        let mut w = 1.0;
        for b in start..start + 4 {
            if a != b {
                w *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        acc += w * ys[a];
    }
    Ok(acc)
}

/// Pull a cylinder profile back to ℝ³∖{0} along `r = e^{-t}`.
///
/// `u_E(r) = e^{t/2} u(t)`, `f₁(r) = -a(t) e^{t}`, `f₂(r) = b(t) e^{t}`.
pub fn cylinder_to_euclidean(cyl: &RadialProfile, r_grid: &[f64]) -> Result<RadialProfile> {
    if cyl.chart != ProfileChart::Cylinder {
        return Err(Error::InvalidInput("expected a cylinder profile".into()));
    }
    cyl.validate()?;
    let mut out = RadialProfile {
        chart: ProfileChart::Euclidean,
        grid: r_grid.to_vec(),
        u: Vec::with_capacity(r_grid.len()),
        f1: Vec::with_capacity(r_grid.len()),
        f2: Vec::with_capacity(r_grid.len()),
        lambda: cyl.lambda,
    };
    for &r in r_grid {
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
        }
        let t = -r.ln();
        let u = cubic_interpolate(&cyl.grid, &cyl.u, t)?;
        let a = cubic_interpolate(&cyl.grid, &cyl.f1, t)?;
        let b = cubic_interpolate(&cyl.grid, &cyl.f2, t)?;
        out.u.push((0.5 * t).exp() * u);
        out.f1.push(-a * t.exp());
        out.f2.push(b * t.exp());
    }
    out.validate()?;
    Ok(out)
}

/// Inverse of [`cylinder_to_euclidean`], interpolating in `ln r`.
pub fn euclidean_to_cylinder(euc: &RadialProfile, t_grid: &[f64]) -> Result<RadialProfile> {
    if euc.chart != ProfileChart::Euclidean {
        return Err(Error::InvalidInput("expected a euclidean profile".into()));
    }
    euc.validate()?;
    let s: Vec<f64> = euc.grid.iter().map(|r| r.ln()).collect();
    let mut out = RadialProfile {
        chart: ProfileChart::Cylinder,
        grid: t_grid.to_vec(),
        u: Vec::new(),
        f1: Vec::new(),
        f2: Vec::new(),
        lambda: euc.lambda,
    };
    for &t in t_grid {
        let x = -t;
        let u = cubic_interpolate(&s, &euc.u, x)?;
        let f1 = cubic_interpolate(&s, &euc.f1, x)?;
        let f2 = cubic_interpolate(&s, &euc.f2, x)?;
        out.u.push((-0.5 * t).exp() * u);
        out.f1.push(-f1 * (-t).exp());
        out.f2.push(f2 * (-t).exp());
    }
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingFit {
    pub kappa: f64,
    /// `max |-Δu - κ(f₁² + f₂²)u| / max |Δu|` over interior nodes.
    pub residual: f64,
    pub nodes: usize,
}

/// Fit `κ` in `-Δu = κ(f₁² + f₂²) u` on a log-uniform euclidean grid.
///
/// The radial Laplacian is `e^{-2s}(u_ss + u_s)` in `s = ln r`, by second
/// order central differences.
pub fn coupling_constant_fit(p: &RadialProfile) -> Result<CouplingFit> {
    if p.chart != ProfileChart::Euclidean {
        return Err(Error::InvalidInput("coupling fit needs a euclidean profile".into()));
    }
    p.validate()?;
    let n = p.len();
    if n < 5 {
        return Err(Error::InvalidInput(format!("coupling fit needs at least 5 nodes, got {n}")));
    }
    let s: Vec<f64> = p.grid.iter().map(|r| r.ln()).collect();
    let h = (s[n - 1] - s[0]) / (n - 1) as f64;
    if s.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-8 * h) {
        return Err(Error::InvalidInput("coupling fit needs a log-uniform grid".into()));
    }
    let mut lhs = Vec::with_capacity(n - 2);
    let mut rhs = Vec::with_capacity(n - 2);
    for j in 1..n - 1 {
        let uss = (p.u[j + 1] - 2.0 * p.u[j] + p.u[j - 1]) / (h * h);
        let us = (p.u[j + 1] - p.u[j - 1]) / (2.0 * h);
        lhs.push(-(-2.0 * s[j]).exp() * (uss + us));
        rhs.push((p.f1[j] * p.f1[j] + p.f2[j] * p.f2[j]) * p.u[j]);
    }
    let rr: f64 = rhs.iter().map(|x| x * x).sum();
    if rr == 0.0 {
        return Err(Error::DegenerateProfile);
    }
    let kappa = lhs.iter().zip(&rhs).map(|(x, y)| x * y).sum::<f64>() / rr;
    let scale = lhs.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let residual = lhs
        .iter()
        .zip(&rhs)
        .map(|(x, y)| (x - kappa * y).abs())
        .fold(0.0, f64::max)
        / scale;
    Ok(CouplingFit { kappa, residual, nodes: n - 2 })
}

/// How a euclidean profile is carried to the round sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereConvention {
    /// Output polar angles; `None` keeps the images `θ = 2 arctan r` of the input radii.
    pub theta_grid: Option<Vec<f64>>,
}

/// The conventions used by [`euclidean_to_sphere`], emitted with its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionDocument {
    pub schema: String,
    pub angle: String,
    pub conformal_factor: String,
    pub scalar_weight: f64,
    pub spinor_weight: f64,
    pub excluded: String,
}

impl Default for ConventionDocument {
    fn default() -> Self {
        Self {
            schema: crate::io::SCHEMA.into(),
            angle: "theta = 2 atan(r); theta = 0 at the origin, theta = pi at infinity".into(),
            conformal_factor: "g_sphere = (2/(1+r^2))^2 g_flat".into(),
            scalar_weight: 0.5,
            spinor_weight: 1.0,
            excluded: "both poles theta = 0 and theta = pi".into(),
        }
    }
}

/// `u_S = ((1+r²)/2)^{1/2} u_E`, `f_S = ((1+r²)/2) f_E` at `θ = 2 arctan r`.
pub fn euclidean_to_sphere(
    euc: &RadialProfile,
    convention: &SphereConvention,
) -> Result<(RadialProfile, ConventionDocument)> {
    if euc.chart != ProfileChart::Euclidean {
        return Err(Error::InvalidInput("expected a euclidean profile".into()));
    }
    euc.validate()?;
    let weights = |r: f64| {
        let w = 0.5 * (1.0 + r * r);
        (w.sqrt(), w)
    };
    let mut out = RadialProfile {
        chart: ProfileChart::Sphere,
        grid: Vec::new(),
        u: Vec::new(),
        f1: Vec::new(),
        f2: Vec::new(),
        lambda: euc.lambda,
    };
    match &convention.theta_grid {
        None => {
            for j in 0..euc.len() {
                let r = euc.grid[j];
                let (ws, wf) = weights(r);
                out.grid.push(2.0 * r.atan());
                out.u.push(ws * euc.u[j]);
                out.f1.push(wf * euc.f1[j]);
                out.f2.push(wf * euc.f2[j]);
            }
        }
        Some(thetas) => {
            let s: Vec<f64> = euc.grid.iter().map(|r| r.ln()).collect();
            for &th in thetas {
                if !(th > 0.0 && th < std::f64::consts::PI) {
                    return Err(Error::GridCoverage {
                        value: th,
                        lo: 2.0 * euc.grid[0].atan(),
                        hi: 2.0 * euc.grid[euc.len() - 1].atan(),
                    });
                }
                let r = (0.5 * th).tan();
                let (ws, wf) = weights(r);
                let x = r.ln();
                let cover = |e: Error| match e {
                    Error::GridCoverage { .. } => Error::GridCoverage {
                        value: th,
                        lo: 2.0 * euc.grid[0].atan(),
                        hi: 2.0 * euc.grid[euc.len() - 1].atan(),
                    },
                    other => other,
                };
                out.grid.push(th);
                out.u.push(ws * cubic_interpolate(&s, &euc.u, x).map_err(cover)?);
                out.f1.push(wf * cubic_interpolate(&s, &euc.f1, x).map_err(cover)?);
                out.f2.push(wf * cubic_interpolate(&s, &euc.f2, x).map_err(cover)?);
            }
        }
    }
    out.validate()?;
    Ok((out, ConventionDocument::default()))
}

/// The closed-form ground state on a euclidean grid, as radial components
/// `u = U_λ`, `f₁ = F^{3/2}`, `f₂ = -r F^{3/2}` with `F = 2λ/(λ² + r²)`.
pub fn closed_form_profile(lambda: f64, r_grid: Vec<f64>) -> Result<RadialProfile> {
    let phi0 = Spinor2::new(ONE, ZERO);
    let mut p = RadialProfile::from_fn(ProfileChart::Euclidean, r_grid, |r| {
        // Radial data do not depend on the direction; sample along the third axis.
        let x = [0.0, 0.0, r];
        match ground_state_closed_form(lambda, x, &phi0) {
            Ok((u, psi)) => {
                let (f1, f2) = radial_components(x, &phi0, &psi);
                (u, f1, f2)
            }
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        }
    })?;
    if p.u.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    p.lambda = Some(lambda);
    Ok(p)
}

/// Best `(λ, c)` with `u ≈ c U_λ` in least squares, searched over `ln λ`.
pub fn fit_bubble_scale(p: &RadialProfile) -> Result<(f64, f64, f64)> {
    if p.chart != ProfileChart::Euclidean {
        return Err(Error::InvalidInput("bubble fit needs a euclidean profile".into()));
    }
    let misfit = |lambda: f64| -> (f64, f64) {
        let basis: Vec<f64> = p
            .grid
            .iter()
            .map(|r| (2.0 * lambda / (lambda * lambda + r * r)).sqrt())
            .collect();
        let bb: f64 = basis.iter().map(|x| x * x).sum();
        let c = basis.iter().zip(&p.u).map(|(x, y)| x * y).sum::<f64>() / bb;
        let res = basis
            .iter()
            .zip(&p.u)
            .map(|(x, y)| (y - c * x).powi(2))
            .sum::<f64>()
            .sqrt();
        (c, res)
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((1e-4f64).ln(), (1e4f64).ln());
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (misfit(c.exp()).1, misfit(d.exp()).1);
    while hi - lo > 1e-10 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = misfit(c.exp()).1;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = misfit(d.exp()).1;
        }
    }
    let lambda = (0.5 * (lo + hi)).exp();
    let (amp, res) = misfit(lambda);
    Ok((lambda, amp, res))
}
