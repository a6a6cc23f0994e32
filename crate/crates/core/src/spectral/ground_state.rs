//! Ground states of `E_ε` on the Nehari set.
//!
//! Two stages: preconditioned gradient descent for the reduced functional
//! `F(u, z⁺) = E_ε(u, z⁺ + g(u, z⁺))` with every iterate scaled back onto the
//! Nehari set, then a Newton polish on the full Galerkin system bordered by
//! the translation generator.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::reduction::{nehari_project, nehari_residuals, NehariResiduals, ReductionOptions};
use super::{EnergyBreakdown, Galerkin, PeriodicField, SpinorField};
use crate::error::{Error, Result};
use crate::orbits::HomoclinicProfile;

type C64 = Complex64;

/// Smallest `K = 2^m - 1` whose top frequency `Kπε` reaches 19.
///
/// At that frequency the Fourier transform of the homoclinic profile has
/// decayed below `1e-10`, since its slowest component decays like `e^{-π|ω|/2}`.
pub fn default_modes(eps: f64) -> usize {
    let mut k = 7usize;
    while (k as f64) * PI * eps < 19.0 && k < (1 << 16) {
        k = 2 * k + 1;
    }
    k
}

/// Smooth bump: 1 on `[-1/2, 1/2]`, 0 outside `(-1, 1)`.
pub fn bump(t: f64) -> f64 {
    fn h(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-1.0 / x).exp()
        }
    }
    let x = ((1.0 - t.abs()) / 0.5).clamp(0.0, 1.0);
    let (p, q) = (h(x), h(1.0 - x));
    p / (p + q)
}

/// `u = 1`, `a = b = sign/(2√2)`: the constant solution matching `P±`.
pub fn equilibrium_pair(eps: f64, modes: usize, sign: f64) -> PeriodicField {
    let c = sign.signum() * 0.5 * FRAC_1_SQRT_2;
    let mut f = PeriodicField::zeros(eps, modes);
    f.u[modes] = C64::new(1.0, 0.0);
    f.z = SpinorField::from_constant(eps, modes, c, c);
    f
}

/// The homoclinic profile compressed by `ε` and cut off by [`bump`].
pub fn cutoff_test_pair(eps: f64, modes: usize) -> Result<PeriodicField> {
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(Error::InvalidInput(format!(
            "cutoff pair needs 0 < epsilon <= 1/4, got {eps}"
        )));
    }
    let h = HomoclinicProfile::derived();
    PeriodicField::from_fn(eps, modes, 8 * (modes + 1), |s| {
        let beta = bump(s);
        if beta == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let p = h.eval(s / eps);
        (beta * p.u, beta * p.a, beta * p.b)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Projection,
    Descent,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub stage: Stage,
    pub iteration: usize,
    pub energy: f64,
    pub gradient_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    /// Target for the dual gradient norm.
    pub grad_tol: f64,
    /// Target for [`NehariResiduals::relative`].
    pub nehari_tol: f64,
    /// Hand over to Newton once the descent gradient is below this.
    pub descent_tol: f64,
    pub max_descent_iters: usize,
    pub max_newton_iters: usize,
    pub reduction: ReductionOptions,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            nehari_tol: 1e-6,
            descent_tol: 1e-3,
            max_descent_iters: 200,
            max_newton_iters: 30,
            reduction: ReductionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateDiagnostics {
    pub history: Vec<IterationRecord>,
    pub gradient_norm: f64,
    pub energy: EnergyBreakdown,
    pub nehari: NehariResiduals,
    /// Scalings `(t, s)` applied by the first Nehari projection.
    pub initial_scaling: (f64, f64),
    pub descent_iterations: usize,
    pub newton_iterations: usize,
    /// Set when the solver landed on the constant equilibrium pair.
    pub is_equilibrium: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub field: PeriodicField,
    pub delta: f64,
    pub diagnostics: GroundStateDiagnostics,
}

/// Translate so that the first Fourier moment of `u²` is real and positive.
fn recenter(ctx: &Galerkin, f: &PeriodicField) -> PeriodicField {
    let u = ctx.synthesize(&f.u);
    let n = ctx.grid_size as f64;
    let mut m = C64::new(0.0, 0.0);
    for (j, s) in ctx.nodes().iter().enumerate() {
        m += C64::from_polar(u[j] * u[j], -PI * s) / n;
    }
    if m.norm() < 1e-14 {
        return f.clone();
    }
    f.translated(-m.arg() / PI)
}

fn precondition(ctx: &Galerkin, r: &PeriodicField) -> PeriodicField {
    let mut d = r.clone();
    let k_max = ctx.modes() as i64;
    for i in 0..r.u.len() {
        let k = i as i64 - k_max;
        d.u[i] = -r.u[i] / ctx.scalar_weight(k);
        d.z.plus[i] = -r.z.plus[i] / ctx.spectrum.rho(k);
        d.z.minus[i] = C64::new(0.0, 0.0);
    }
    d
}

fn newton_step(ctx: &Galerkin, f: &PeriodicField, r: &PeriodicField) -> Result<PeriodicField> {
    let n = f.param_len();
    let grid = ctx.grid_values(f);
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        let h = PeriodicField::from_params(f.eps, f.modes, &unit)?;
        unit[j] = 0.0;
        let col = ctx.residual_jvp(&grid, &h).to_params();
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    let tau = f.translation_generator().to_params();
    let scale = tau.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for (i, t) in tau.iter().enumerate() {
        m[(i, n)] = t / scale;
        m[(n, i)] = t / scale;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    for (i, v) in r.to_params().into_iter().enumerate() {
        rhs[i] = -v;
    }
    let sol = m.lu().solve(&rhs).ok_or(Error::NewtonDivergence {
        iterations: 0,
        residual: ctx.dual_norm(r),
    })?;
    PeriodicField::from_params(f.eps, f.modes, &sol.as_slice()[..n])
}

/// Compute a ground state at `eps` with `modes` Fourier modes.
///
/// `init` defaults to the cutoff pair for `ε <= 1/4` and to a perturbed
/// equilibrium pair otherwise.
pub fn ground_state(
    eps: f64,
    modes: usize,
    init: Option<&PeriodicField>,
    opts: &GroundStateOptions,
) -> Result<GroundState> {
    let ctx = Galerkin::new(eps, modes)?;
    let start = match init {
        Some(f) => {
            if (f.eps - eps).abs() > 1e-14 * eps {
                return Err(Error::InvalidInput(format!(
                    "initial field has epsilon {} but {} was requested",
                    f.eps, eps
                )));
            }
            f.with_modes(modes)
        }
        None if eps <= 0.25 => cutoff_test_pair(eps, modes)?,
        None => {
            let mut f = equilibrium_pair(eps, modes, 1.0);
            f.u[modes + 1] = C64::new(0.25, 0.0);
            f.u[modes - 1] = C64::new(0.25, 0.0);
            f
        }
    };
    let mut history = Vec::new();
    let proj = nehari_project(&ctx, &start, &opts.reduction)?;
    let initial_scaling = (proj.t, proj.s);
    let mut f = recenter(&ctx, &proj.field);
    let mut energy = ctx.energy(&f)?.total;
    let mut r = ctx.gradient(&f)?;
    let mut gnorm = ctx.dual_norm(&r);
    history.push(IterationRecord {
        stage: Stage::Projection,
        iteration: 0,
        energy,
        gradient_norm: gnorm,
        step: 0.0,
    });

    let mut eta: f64 = 1.0;
    let mut descent_iterations = 0;
    while descent_iterations < opts.max_descent_iters && gnorm > opts.descent_tol {
        let d = precondition(&ctx, &r);
        let slope = ctx.pair(&r, &d);
        let mut accepted = None;
        eta = (2.0 * eta).min(1.0);
        while eta > 1e-10 {
            let trial = f.axpy(eta, &d);
            if let Ok(p) = nehari_project(&ctx, &trial, &opts.reduction) {
                let e = ctx.energy(&p.field)?.total;
                if e <= energy + 1e-4 * eta * slope {
                    accepted = Some((p.field, e));
                    break;
                }
            }
            eta *= 0.5;
        }
        let Some((p, e)) = accepted else { break };
        descent_iterations += 1;
        f = recenter(&ctx, &p);
        energy = e;
        r = ctx.gradient(&f)?;
        gnorm = ctx.dual_norm(&r);
        history.push(IterationRecord {
            stage: Stage::Descent,
            iteration: descent_iterations,
            energy,
            gradient_norm: gnorm,
            step: eta,
        });
    }

    let floor = 1e-13 * (1.0 / eps).sqrt();
    let mut newton_iterations = 0;
    while newton_iterations < opts.max_newton_iters && gnorm > floor {
        let delta = match newton_step(&ctx, &f, &r) {
            Ok(d) => d,
            Err(_) => break,
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut trial = f.axpy(lambda, &delta);
            trial.enforce_real();
            let rt = ctx.gradient(&trial)?;
            let gt = ctx.dual_norm(&rt);
            if gt < gnorm * (1.0 - 1e-4 * lambda) {
                accepted = Some((trial, gt));
                break;
            }
            lambda *= 0.5;
        }
        let Some((trial, gt)) = accepted else { break };
        newton_iterations += 1;
        let stalled = gt > 0.5 * gnorm && gt < opts.grad_tol;
        f = recenter(&ctx, &trial);
        r = ctx.gradient(&f)?;
        gnorm = ctx.dual_norm(&r);
        energy = ctx.energy(&f)?.total;
        history.push(IterationRecord {
            stage: Stage::Newton,
            iteration: newton_iterations,
            energy,
            gradient_norm: gnorm,
            step: lambda,
        });
        if stalled {
            break;
        }
    }

    let nehari = nehari_residuals(&ctx, &f)?;
    let e = ctx.energy(&f)?;
    let u = ctx.synthesize(&f.u);
    let is_equilibrium = u.iter().all(|x| (x.abs() - 1.0).abs() < 1e-6);
    if !(gnorm <= opts.grad_tol && nehari.relative() <= opts.nehari_tol) {
        return Err(Error::NonConvergence {
            gradient_norm: gnorm,
            best: Box::new(f),
        });
    }
    Ok(GroundState {
        delta: e.total,
        diagnostics: GroundStateDiagnostics {
            history,
            gradient_norm: gnorm,
            energy: e,
            nehari,
            initial_scaling,
            descent_iterations,
            newton_iterations,
            is_equilibrium,
        },
        field: f,
    })
}

/// Windowed masses of a field around its point of highest concentration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    /// Center in the rescaled variable `s ∈ [-1, 1)`.
    pub y_center: f64,
    pub mass_u: f64,
    pub mass_z: f64,
}

/// Maximize `(1/ε)∫_{|s-y| <= ε r0} (u² + |z|²)` over `y` and report both masses there.
pub fn concentration_diagnostic(f: &PeriodicField, r0: f64) -> Result<ConcentrationReport> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidInput(format!("r0 must be positive, got {r0}")));
    }
    let eps = f.eps;
    let m = (4 * (f.modes + 1)).max((64.0 / (eps * r0)).ceil() as usize).min(1 << 20);
    let ctx = Galerkin::with_grid(f.spectrum()?, m);
    let g = ctx.grid_values(f);
    let du: Vec<f64> = g.u.iter().map(|x| x * x).collect();
    let dz: Vec<f64> = g.a.iter().zip(&g.b).map(|(a, b)| a * a + b * b).collect();
    let half = ((eps * r0) * m as f64 / 2.0).round().max(1.0) as usize;
    let half = half.min(m / 2);
    let window = |d: &[f64], center: usize| -> f64 {
        let mut s = 0.0;
        for off in 0..=2 * half {
            let j = (center + m + off - half) % m;
            let w = if off == 0 || off == 2 * half { 0.5 } else { 1.0 };
            s += w * d[j];
        }
        s * 2.0 / m as f64 / eps
    };
    // Sliding totals with a periodic prefix sum pick the center; the
    // trapezoid evaluation above refines the reported masses.
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut acc: f64 = (0..=2 * half).map(|o| du[(m + o - half) % m] + dz[(m + o - half) % m]).sum();
    for i in 0..m {
        if acc > best.1 + 1e-14 * acc.abs() {
            best = (i, acc);
        }
        let out = (i + m - half) % m;
        let inn = (i + half + 1) % m;
        acc += du[inn] + dz[inn] - du[out] - dz[out];
    }
    let i = best.0;
    Ok(ConcentrationReport {
        y_center: -1.0 + 2.0 * i as f64 / m as f64,
        mass_u: window(&du, i),
        mass_z: window(&dz, i),
    })
}
