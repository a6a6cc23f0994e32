//! Fixed-step time integration of the flow with energy monitoring.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::dynamics::{hamiltonian, vector_field, State4};
use crate::error::{Error, Result};
use crate::linear::{jacobian_at, ChartPoint};

/// Any component larger than this is treated as escape along the unstable direction.
pub const ESCAPE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ImplicitMidpoint,
    Rk4,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit_midpoint" | "implicit-midpoint" | "midpoint" => Ok(Method::ImplicitMidpoint),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::InvalidInput(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub method: Method,
    pub dt: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            method: Method::ImplicitMidpoint,
            dt: 1e-3,
            newton_tol: 1e-14,
            max_newton_iters: 50,
        }
    }
}

impl StepperConfig {
    pub fn rk4(dt: f64) -> Self {
        Self {
            method: Method::Rk4,
            dt,
            ..Self::default()
        }
    }

    pub fn midpoint(dt: f64) -> Self {
        Self {
            method: Method::ImplicitMidpoint,
            dt,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidInput("newton_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Samples of a solution on a uniform time grid.
///
/// Forward runs have increasing `times`; backward runs (negative final time)
/// have decreasing `times`, with the initial state always first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State4>,
    pub energy_series: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, s: State4) {
        self.times.push(t);
        self.energy_series.push(hamiltonian(&s));
        self.states.push(s);
    }

    pub fn last(&self) -> Option<State4> {
        self.states.last().copied()
    }
}

/// Classical fourth order Runge-Kutta step for an arbitrary autonomous field.
pub fn rk4_step<F>(s: State4, dt: f64, f: F) -> State4
where
    F: Fn(&State4) -> State4,
{
    let k1 = f(&s);
    let k2 = f(&(s + (0.5 * dt) * k1));
    let k3 = f(&(s + (0.5 * dt) * k2));
    let k4 = f(&(s + dt * k3));
    s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn midpoint_step(s: State4, dt: f64, tol: f64, max_iters: usize) -> Result<State4> {
    // Solve y = s + dt f((s + y)/2) by Newton, starting from an explicit Euler guess.
    let mut y = s + dt * vector_field(&s);
    let mut last = f64::INFINITY;
    for it in 0..max_iters {
        let mid = 0.5 * (s + y);
        let g = y - s - dt * vector_field(&mid);
        let jac = Matrix4::identity() - jacobian_at(ChartPoint::Original(mid)).entries * (0.5 * dt);
        let rhs = Vector4::from(g.to_array());
        let delta = jac.lu().solve(&rhs).ok_or(Error::NewtonDivergence {
            iterations: it,
            residual: g.max_abs(),
        })?;
        y = y - State4::new(delta[0], delta[1], delta[2], delta[3]);
        let size = delta.amax();
        if !size.is_finite() {
            break;
        }
        last = size;
        if size <= tol * y.max_abs().max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::NewtonDivergence {
        iterations: max_iters,
        residual: last,
    })
}

/// One step of the configured method with signed step `dt`.
pub fn step_signed(s: &State4, dt: f64, cfg: &StepperConfig) -> Result<State4> {
    match cfg.method {
        Method::Rk4 => Ok(rk4_step(*s, dt, vector_field)),
        Method::ImplicitMidpoint => midpoint_step(*s, dt, cfg.newton_tol, cfg.max_newton_iters),
    }
}

/// One forward step of size `cfg.dt`.
pub fn step(s: &State4, cfg: &StepperConfig) -> Result<State4> {
    cfg.validate()?;
    step_signed(s, cfg.dt, cfg)
}

/// Integrate from `t = 0` to `t_final` (either sign) on a uniform grid.
///
/// The step is `t_final / n` with `n = ceil(|t_final| / cfg.dt)`.
pub fn integrate(s0: &State4, t_final: f64, cfg: &StepperConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if t_final == 0.0 || !t_final.is_finite() {
        return Err(Error::InvalidInput(format!("t_final must be nonzero and finite, got {t_final}")));
    }
    let n = (t_final.abs() / cfg.dt).ceil().max(1.0) as usize;
    let h = t_final / n as f64;
    let mut tr = Trajectory::default();
    tr.times.reserve(n + 1);
    tr.push(0.0, *s0);
    let mut s = *s0;
    for k in 1..=n {
        s = step_signed(&s, h, cfg)?;
        let t = if k == n { t_final } else { h * k as f64 };
        if !s.is_finite() || s.max_abs() > ESCAPE_BOUND {
            return Err(Error::NonFiniteState { time: t });
        }
        tr.push(t, s);
    }
    Ok(tr)
}

/// `max_k |H_k - H_0|` along the trajectory.
pub fn energy_drift(tr: &Trajectory) -> Result<f64> {
    let h0 = *tr.energy_series.first().ok_or(Error::EmptyTrajectory)?;
    Ok(tr
        .energy_series
        .iter()
        .map(|h| (h - h0).abs())
        .fold(0.0, f64::max))
}
