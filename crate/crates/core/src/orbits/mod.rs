//! Periodic orbits by shooting, the Lyapunov family at `P₊`, the homoclinic
//! orbit, and comparison of ground states with it.

mod homoclinic;

pub use homoclinic::{
    derive_homoclinic_constants, CoefficientMatch, HomoclinicDerivation, HomoclinicProfile,
    Placement, DELTA0,
};

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};

use crate::dynamics::{from_rotated, p_plus, vector_field, EquilibriumCatalog, RotatedState4, State4};
use crate::error::{Error, Result};
use crate::integrate::{energy_drift, rk4_step, Trajectory, ESCAPE_BOUND};
use crate::linear::{jacobian_at, ChartPoint};
use crate::spectral::{default_modes, ground_state, GroundStateOptions, PeriodicField};

/// Evaluate the derived homoclinic profile at `t`.
pub fn homoclinic_profile(t: f64) -> State4 {
    HomoclinicProfile::derived().eval(t)
}

/// Step size used for shooting and for sampling orbits.
pub const SHOOTING_DT: f64 = 1e-3;

/// Closure tolerance for accepted orbits.
pub const CLOSURE_TOL: f64 = 1e-9;

/// A closed orbit with `s(2T) = s(0)`, sampled over `[0, 2T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub half_period: f64,
    pub initial_state: State4,
    pub trajectory: Trajectory,
    pub energy: f64,
    /// `‖s(2T) - s(0)‖`.
    pub residual: f64,
    pub energy_drift: f64,
    pub iterations: usize,
}

impl PeriodicOrbit {
    pub fn period(&self) -> f64 {
        2.0 * self.half_period
    }

    /// `sup_t ‖s(t) - p‖∞`.
    pub fn sup_distance(&self, p: &State4) -> f64 {
        self.trajectory
            .states
            .iter()
            .map(|s| s.dist_inf(p))
            .fold(0.0, f64::max)
    }

    /// Smallest sample time at which the orbit returns to a local minimum of
    /// its distance from `s(0)` well below the orbit diameter.
    pub fn minimal_period(&self) -> f64 {
        let s0 = self.initial_state;
        let d: Vec<f64> = self.trajectory.states.iter().map(|s| s.dist_inf(&s0)).collect();
        let diam = d.iter().cloned().fold(0.0, f64::max);
        if diam == 0.0 {
            return self.period();
        }
        let mut left = false;
        for k in 1..d.len().saturating_sub(1) {
            if d[k] > 0.5 * diam {
                left = true;
            }
            if left && d[k] <= d[k - 1] && d[k] <= d[k + 1] && d[k] < 1e-2 * diam {
                return self.trajectory.times[k];
            }
        }
        self.period()
    }
}

/// RK4 flow over `[0, duration]` in `n` steps together with its Jacobian.
fn flow_with_jacobian(x0: &State4, duration: f64, n: usize) -> Result<(State4, Matrix4<f64>)> {
    let h = duration / n as f64;
    let mut x = *x0;
    let mut m = Matrix4::<f64>::identity();
    let jac = |s: &State4| jacobian_at(ChartPoint::Original(*s)).entries;
    for k in 0..n {
        let j1 = jac(&x);
        let k1 = vector_field(&x);
        let x2 = x + (0.5 * h) * k1;
        let j2 = jac(&x2);
        let k2 = vector_field(&x2);
        let x3 = x + (0.5 * h) * k2;
        let j3 = jac(&x3);
        let k3 = vector_field(&x3);
        let x4 = x + h * k3;
        let j4 = jac(&x4);
        let m1 = j1 * m;
        let m2 = j2 * (m + m1 * (0.5 * h));
        let m3 = j3 * (m + m2 * (0.5 * h));
        let m4 = j4 * (m + m3 * h);
        m += (m1 + 2.0 * m2 + 2.0 * m3 + m4) * (h / 6.0);
        x = rk4_step(x, h, vector_field);
        if !x.is_finite() || x.max_abs() > ESCAPE_BOUND {
            return Err(Error::NonFiniteState { time: h * (k + 1) as f64 });
        }
    }
    Ok((x, m))
}

fn steps_for(duration: f64) -> usize {
    (duration / SHOOTING_DT).ceil().max(1.0) as usize
}

/// Sample the RK4 solution over `[0, duration]` in `n` steps.
fn sample(x0: &State4, duration: f64, n: usize) -> Result<Trajectory> {
    let h = duration / n as f64;
    let mut tr = Trajectory::default();
    tr.push(0.0, *x0);
    let mut x = *x0;
    for k in 1..=n {
        x = rk4_step(x, h, vector_field);
        if !x.is_finite() || x.max_abs() > ESCAPE_BOUND {
            return Err(Error::NonFiniteState { time: h * k as f64 });
        }
        tr.push(if k == n { duration } else { h * k as f64 }, x);
    }
    Ok(tr)
}

fn lstsq(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    a.svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidInput(e.to_string()))
}

fn finish(x0: State4, half_period: f64, n: usize, iterations: usize) -> Result<PeriodicOrbit> {
    let trajectory = sample(&x0, 2.0 * half_period, n)?;
    let last = trajectory.last().ok_or(Error::EmptyTrajectory)?;
    let residual = (last - x0).norm();
    let catalog = EquilibriumCatalog::new();
    let spread = trajectory
        .states
        .iter()
        .map(|s| catalog.nearest_distance(s))
        .fold(0.0, f64::max);
    if spread < 1e-8 {
        return Err(Error::ConvergedToEquilibrium { distance: spread });
    }
    if residual > CLOSURE_TOL {
        return Err(Error::NewtonDivergence { iterations, residual });
    }
    Ok(PeriodicOrbit {
        half_period,
        initial_state: x0,
        energy: crate::dynamics::hamiltonian(&x0),
        energy_drift: energy_drift(&trajectory)?,
        trajectory,
        residual,
        iterations,
    })
}

/// First time the solution from `x0` crosses `v = v(0)` against the direction
/// it started with, i.e. half a loop for an oscillation, if before `horizon`.
fn half_return(x0: &State4, horizon: f64) -> Option<f64> {
    let dir = vector_field(x0).v;
    if dir == 0.0 {
        return None;
    }
    let h = SHOOTING_DT;
    let mut x = *x0;
    let mut g_prev = 0.0;
    let mut t = 0.0;
    while t < horizon {
        x = rk4_step(x, h, vector_field);
        t += h;
        if !x.is_finite() || x.max_abs() > ESCAPE_BOUND {
            return None;
        }
        let g = (x.v - x0.v) * dir.signum();
        if g_prev > 0.0 && g <= 0.0 {
            return Some(t - h * g / (g - g_prev));
        }
        g_prev = g;
    }
    None
}

fn flow_to(x0: &State4, t: f64) -> State4 {
    let n = (t / SHOOTING_DT).ceil() as usize;
    let mut x = *x0;
    if n > 0 {
        let h = t / n as f64;
        for _ in 0..n {
            x = rk4_step(x, h, vector_field);
        }
    }
    x
}

/// Solve `s(2T) = s(0)` with the phase condition `v(0) = v_guess(0)` (zero by default).
///
/// Multiple shooting over segments of about one time unit keeps the
/// hyperbolic growth per segment small. Segment starts come from a single
/// closed loop through `u(0) = guess.u` found with a free period, repeated
/// modulo that period, so a guess near a short orbit supplies every lap.
pub fn shoot_periodic(half_period: f64, guess: &State4) -> Result<PeriodicOrbit> {
    shoot_periodic_with_phase(half_period, guess, 0.0)
}

pub fn shoot_periodic_with_phase(half_period: f64, guess: &State4, v0: f64) -> Result<PeriodicOrbit> {
    if !(half_period > 0.0 && half_period.is_finite()) {
        return Err(Error::InvalidInput(format!("T must be positive, got {half_period}")));
    }
    if !guess.is_finite() {
        return Err(Error::InvalidInput("guess must be finite".into()));
    }
    let duration = 2.0 * half_period;
    let segments = (duration.ceil() as usize).max(1);
    let per = steps_for(duration / segments as f64);
    let n = per * segments;
    let seg_len = duration / segments as f64;
    let wrap = half_return(guess, duration)
        .and_then(|th| close_loop(guess.u, guess.a, guess.b, 2.0 * th).ok());
    let mut xs: Vec<State4> = (0..segments)
        .map(|i| {
            let t = i as f64 * seg_len;
            match wrap {
                Some((x, p, _)) => flow_to(&x, t % p),
                None => flow_to(guess, t),
            }
        })
        .collect();
    let dim = 4 * segments;
    let assemble = |xs: &[State4]| -> Result<(DVector<f64>, Vec<Matrix4<f64>>)> {
        let mut r = DVector::<f64>::zeros(dim + 1);
        let mut ms = Vec::with_capacity(segments);
        for i in 0..segments {
            let (e, m) = flow_with_jacobian(&xs[i], seg_len, per)?;
            let d = (e - xs[(i + 1) % segments]).to_array();
            for k in 0..4 {
                r[4 * i + k] = d[k];
            }
            ms.push(m);
        }
        r[dim] = xs[0].v - v0;
        Ok((r, ms))
    };
    let (mut r, mut ms) = assemble(&xs)?;
    let mut res = r.norm();
    for it in 0..60 {
        if res <= 1e-13 {
            return finish(xs[0], half_period, n, it);
        }
        let mut a = DMatrix::<f64>::zeros(dim + 1, dim);
        for i in 0..segments {
            let j = (i + 1) % segments;
            for p in 0..4 {
                for q in 0..4 {
                    a[(4 * i + p, 4 * i + q)] += ms[i][(p, q)];
                }
                a[(4 * i + p, 4 * j + p)] -= 1.0;
            }
        }
        a[(dim, 1)] = 1.0;
        let dx = lstsq(a, -&r)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<State4> = (0..segments)
                .map(|i| {
                    xs[i] + lambda * State4::new(dx[4 * i], dx[4 * i + 1], dx[4 * i + 2], dx[4 * i + 3])
                })
                .collect();
            if let Ok((rt, mt)) = assemble(&trial) {
                let nt = rt.norm();
                if nt < res {
                    xs = trial;
                    r = rt;
                    ms = mt;
                    res = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return finish(xs[0], half_period, n, it);
        }
    }
    finish(xs[0], half_period, n, 60)
}

/// Frequency `2^{1/4}` of the elliptic pair at `P₊`.
fn center_frequency() -> f64 {
    2f64.powf(0.25)
}

/// Linear-theory start for amplitude `amp`: `P₊` displaced along the real
/// part of the elliptic eigenvector, which in the rotated chart is `(1, 0, ω², 0)`.
pub fn lyapunov_guess(amp: f64) -> State4 {
    let w2 = SQRT_2;
    from_rotated(&RotatedState4::new(1.0 + amp, 0.0, 0.5 + w2 * amp, 0.0))
}

/// Closed loop through `(u0, 0, a, b)` with `a`, `b` and the period free,
/// by Gauss-Newton from `(a0, b0, period)`.
fn close_loop(u0: f64, a0: f64, b0: f64, period: f64) -> Result<(State4, f64, usize)> {
    let (mut a0, mut b0, mut period) = (a0, b0, period);
    let eval = |a0: f64, b0: f64, p: f64| -> Result<(State4, State4, Matrix4<f64>)> {
        let x = State4::new(u0, 0.0, a0, b0);
        let (xe, m) = flow_with_jacobian(&x, p, steps_for(p))?;
        Ok((x, xe, m))
    };
    let mut last = f64::INFINITY;
    for it in 0..60 {
        let (x, xe, m) = eval(a0, b0, period)?;
        let r = xe - x;
        let res = r.norm();
        if res <= 0.1 * CLOSURE_TOL {
            return Ok((x, period, it));
        }
        let f = vector_field(&xe).to_array();
        let mut a = DMatrix::<f64>::zeros(4, 3);
        for i in 0..4 {
            a[(i, 0)] = m[(i, 2)] - if i == 2 { 1.0 } else { 0.0 };
            a[(i, 1)] = m[(i, 3)] - if i == 3 { 1.0 } else { 0.0 };
            a[(i, 2)] = f[i];
        }
        let b = DVector::from_iterator(4, r.to_array().into_iter().map(|c| -c));
        let d = lstsq(a, b)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let p = (period + lambda * d[2]).clamp(0.25 * period, 4.0 * period);
            if let Ok((xt, xte, _)) = eval(a0 + lambda * d[0], b0 + lambda * d[1], p) {
                if (xte - xt).norm() < res {
                    a0 += lambda * d[0];
                    b0 += lambda * d[1];
                    period = p;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if res <= CLOSURE_TOL {
                return Ok((x, period, it));
            }
            return Err(Error::NewtonDivergence { iterations: it, residual: res });
        }
        last = res;
    }
    Err(Error::NewtonDivergence { iterations: 60, residual: last })
}

/// One member of the family through `u(0) = 1 + amp`, `v(0) = 0`, with the
/// period as an unknown. The returned orbit has `2T` equal to its minimal period.
pub fn lyapunov_orbit(amp: f64) -> Result<PeriodicOrbit> {
    if !(amp >= 0.0 && amp.is_finite()) {
        return Err(Error::InvalidInput(format!("amplitude must be nonnegative, got {amp}")));
    }
    let start = lyapunov_guess(amp);
    let t0 = 2.0 * std::f64::consts::PI / center_frequency();
    let (x, period, it) = close_loop(start.u, start.a, start.b, t0)?;
    finish(x, 0.5 * period, steps_for(period), it)
}

/// Lyapunov orbits at `P₊` for each amplitude, computed concurrently.
pub fn lyapunov_family(amplitudes: &[f64]) -> Result<Vec<PeriodicOrbit>> {
    if let Some(bad) = amplitudes.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
        return Err(Error::InvalidInput(format!("amplitude must be nonnegative, got {bad}")));
    }
    let results: Vec<Result<PeriodicOrbit>> = std::thread::scope(|scope| {
        let handles: Vec<_> = amplitudes
            .iter()
            .map(|&amp| scope.spawn(move || lyapunov_orbit(amp)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("shooting thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Sup distance from `P₊` for each orbit of a family.
pub fn distances_to_center(family: &[PeriodicOrbit]) -> Vec<f64> {
    family.iter().map(|o| o.sup_distance(&p_plus())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicDistance {
    /// `t0` such that sample time `t` is compared with the profile at `t - t0`.
    pub shift: f64,
    pub sup_dist: f64,
}

/// Compare samples with the shifted derived homoclinic on `|t - t_peak| <= window`.
pub fn distance_to_homoclinic_samples(
    times: &[f64],
    states: &[State4],
    window: f64,
) -> Result<HomoclinicDistance> {
    if times.is_empty() || times.len() != states.len() {
        return Err(Error::EmptyTrajectory);
    }
    let profile = HomoclinicProfile::derived();
    let peak = states
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.u.total_cmp(&y.1.u))
        .map(|(i, _)| times[i])
        .ok_or(Error::EmptyTrajectory)?;
    let idx: Vec<usize> = (0..times.len())
        .filter(|&i| (times[i] - peak).abs() <= window)
        .collect();
    let objective = |t0: f64| -> f64 {
        idx.iter()
            .map(|&i| states[i].dist_inf(&profile.eval(times[i] - t0)))
            .fold(0.0, f64::max)
    };
    // Coarse scan, then golden-section refinement around the best node.
    let span = 2.0;
    let coarse = 400;
    let mut best = (peak, objective(peak));
    for k in 0..=coarse {
        let t0 = peak - span + 2.0 * span * k as f64 / coarse as f64;
        let v = objective(t0);
        if v < best.1 {
            best = (t0, v);
        }
    }
    let h = 2.0 * span / coarse as f64;
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while hi - lo > 1e-12 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = objective(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = objective(mid);
    let (shift, sup_dist) = if fm <= best.1 { (mid, fm) } else { best };
    Ok(HomoclinicDistance { shift, sup_dist })
}

pub fn distance_to_homoclinic(orbit: &PeriodicOrbit) -> Result<HomoclinicDistance> {
    distance_to_homoclinic_samples(&orbit.trajectory.times, &orbit.trajectory.states, 10.0)
}

/// A ground-state field viewed as a `2T`-periodic orbit on `t ∈ [0, 2T]`.
pub fn orbit_from_field(f: &PeriodicField, samples: usize) -> Result<PeriodicOrbit> {
    let (mut times, mut states) = f.orbit_samples(samples)?;
    let end = f.state_at(1.0);
    times.push(2.0 / f.eps);
    states.push(end);
    let mut trajectory = Trajectory::default();
    for (t, s) in times.into_iter().zip(states) {
        trajectory.push(t, s);
    }
    let mean = trajectory.energy_series.iter().sum::<f64>() / trajectory.len() as f64;
    let spread = trajectory
        .energy_series
        .iter()
        .map(|h| (h - mean).abs())
        .fold(0.0, f64::max);
    let initial_state = trajectory.states[0];
    Ok(PeriodicOrbit {
        half_period: 1.0 / f.eps,
        initial_state,
        residual: (end - initial_state).norm(),
        energy: mean,
        energy_drift: spread,
        trajectory,
        iterations: 0,
    })
}

/// One row of the `(ε, δ_ε)` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramRow {
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub half_period: f64,
    pub delta_eps: f64,
    pub gap: f64,
    pub converged: bool,
}

/// `δ_ε` and `|δ_ε - δ₀|` for each `ε`, one thread per entry.
///
/// A run that fails to converge still contributes a row built from its best
/// iterate, flagged `converged = false`.
pub fn period_energy_diagram(eps_grid: &[f64], opts: &GroundStateOptions) -> Result<Vec<DiagramRow>> {
    if let Some(bad) = eps_grid.iter().find(|e| !(**e > 0.0 && **e <= 0.25)) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1/4], got {bad}")));
    }
    let delta0 = HomoclinicProfile::derived().ground_energy();
    std::thread::scope(|scope| {
        let handles: Vec<_> = eps_grid
            .iter()
            .map(|&eps| {
                scope.spawn(move || -> Result<DiagramRow> {
                    let (delta_eps, converged) = match ground_state(eps, default_modes(eps), None, opts) {
                        Ok(gs) => (gs.delta, true),
                        Err(Error::NonConvergence { best, .. }) => {
                            (crate::spectral::energy(&best)?.total, false)
                        }
                        Err(e) => return Err(e),
                    };
                    Ok(DiagramRow {
                        epsilon: eps,
                        half_period: 1.0 / eps,
                        delta_eps,
                        gap: (delta_eps - delta0).abs(),
                        converged,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ground-state thread panicked"))
            .collect()
    })
}

/// Serializable orbit with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    #[serde(rename = "T")]
    pub half_period: f64,
    pub epsilon: f64,
    #[serde(rename = "H")]
    pub energy: f64,
    pub residual: f64,
    pub initial_state: State4,
    pub samples: Vec<OrbitSample>,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub a: f64,
    pub b: f64,
}

impl OrbitRecord {
    /// Keep every `stride`-th sample of the orbit.
    pub fn from_orbit(orbit: &PeriodicOrbit, stride: usize, provenance: impl Into<String>) -> Self {
        let stride = stride.max(1);
        let samples = orbit
            .trajectory
            .times
            .iter()
            .zip(&orbit.trajectory.states)
            .step_by(stride)
            .map(|(&t, s)| OrbitSample { t, u: s.u, v: s.v, a: s.a, b: s.b })
            .collect();
        Self {
            half_period: orbit.half_period,
            epsilon: 1.0 / orbit.half_period,
            energy: orbit.energy,
            residual: orbit.residual,
            initial_state: orbit.initial_state,
            samples,
            provenance: provenance.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_guess_is_rejected() {
        let err = shoot_periodic(2.7, &p_plus()).unwrap_err();
        assert!(matches!(err, Error::ConvergedToEquilibrium { .. }), "{err:?}");
        let err = lyapunov_orbit(0.0).unwrap_err();
        assert!(matches!(err, Error::ConvergedToEquilibrium { .. }), "{err:?}");
        assert!(lyapunov_family(&[-1e-3]).is_err());
    }

    #[test]
    fn small_lyapunov_orbit() {
        let o = lyapunov_orbit(1e-3).unwrap();
        let t0 = 2f64.powf(0.75) * std::f64::consts::PI;
        assert!((o.period() - t0).abs() < 0.01 * t0);
        assert!(o.residual <= CLOSURE_TOL);
        assert!(o.energy_drift <= 1e-8);
        assert!((o.minimal_period() - o.period()).abs() < 1e-2);
    }

    #[test]
    fn fixed_period_shooting_near_center() {
        let o = lyapunov_orbit(1e-2).unwrap();
        // Closing over twice the minimal period reproduces the same orbit on two laps.
        let two_laps = shoot_periodic(o.period(), &lyapunov_guess(1e-2));
        let two_laps = two_laps.unwrap();
        assert!(two_laps.residual <= CLOSURE_TOL);
        assert!(two_laps.sup_distance(&p_plus()) > 1e-3);
        assert!(two_laps.energy_drift <= 1e-8);
        assert!((two_laps.minimal_period() - o.period()).abs() < 1e-2);
    }

    #[test]
    fn homoclinic_distance_of_itself_and_shift() {
        let h = HomoclinicProfile::derived();
        let times: Vec<f64> = (0..=4000).map(|k| -20.0 + 0.01 * k as f64).collect();
        let states: Vec<State4> = times.iter().map(|&t| h.eval(t)).collect();
        let d = distance_to_homoclinic_samples(&times, &states, 10.0).unwrap();
        assert!(d.sup_dist <= 1e-12 && d.shift.abs() <= 1e-9, "{d:?}");
        let shifted: Vec<State4> = times.iter().map(|&t| h.eval(t - 1.3)).collect();
        let d = distance_to_homoclinic_samples(&times, &shifted, 10.0).unwrap();
        assert!((d.shift - 1.3).abs() <= 0.01 && d.sup_dist < 1e-8, "{d:?}");
    }
}
