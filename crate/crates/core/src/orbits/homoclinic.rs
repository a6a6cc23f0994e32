//! The explicit orbit homoclinic to `P₀` and the derivation of its amplitudes.

use std::f64::consts::{LN_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::dynamics::{hamiltonian, vector_field, State4};

/// `δ₀ = (1/2)∫u²|z|²` on the homoclinic, in closed form.
pub const DELTA0: f64 = 9.0 * PI / 32.0;

/// Which spinor component grows as `e^{t/2}` for `t → -∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// `a ∝ e^{t/2} cosh^{-3/2} t`, `b ∝ e^{-t/2} cosh^{-3/2} t`.
    AForward,
    /// The time-reversed twin with `a` and `b` exchanged.
    BForward,
}

/// `u = α cosh^{-1/2} t` with spinor components `β e^{±t/2} cosh^{-3/2} t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicProfile {
    pub alpha: f64,
    pub beta: f64,
    pub placement: Placement,
}

/// `ln sech t`, accurate for all `t`.
fn ln_sech(t: f64) -> f64 {
    let x = t.abs();
    LN_2 - x - (-2.0 * x).exp().ln_1p()
}

/// Unit-amplitude shape functions and their first derivatives.
struct Shapes {
    p: f64,
    dp: f64,
    ddp: f64,
    qa: f64,
    dqa: f64,
    qb: f64,
    dqb: f64,
}

fn shapes(t: f64) -> Shapes {
    let ls = ln_sech(t);
    let th = t.tanh();
    let sech2 = (2.0 * ls).exp();
    let p = (0.5 * ls).exp();
    let qa = (0.5 * t + 1.5 * ls).exp();
    let qb = (-0.5 * t + 1.5 * ls).exp();
    Shapes {
        p,
        dp: -0.5 * p * th,
        ddp: p * (0.25 - 0.75 * sech2),
        qa,
        dqa: qa * (0.5 - 1.5 * th),
        qb,
        dqb: qb * (-0.5 - 1.5 * th),
    }
}

impl HomoclinicProfile {
    /// Amplitudes `α = √(3/2)`, `β = √(3/8)` with `a ∝ e^{t/2}`.
    pub fn derived() -> Self {
        Self {
            alpha: 1.5f64.sqrt(),
            beta: 0.375f64.sqrt(),
            placement: Placement::AForward,
        }
    }

    /// The constants and placement as printed with the theorem.
    pub fn printed() -> Self {
        Self {
            alpha: 2f64.powf(-0.25),
            beta: 3.0 / (2.0 * SQRT_2),
            placement: Placement::BForward,
        }
    }

    pub fn eval(&self, t: f64) -> State4 {
        let s = shapes(t);
        let (a, b) = match self.placement {
            Placement::AForward => (s.qa, s.qb),
            Placement::BForward => (s.qb, s.qa),
        };
        State4::new(self.alpha * s.p, self.alpha * s.dp, self.beta * a, self.beta * b)
    }

    /// Exact time derivative of [`HomoclinicProfile::eval`].
    pub fn derivative(&self, t: f64) -> State4 {
        let s = shapes(t);
        let (da, db) = match self.placement {
            Placement::AForward => (s.dqa, s.dqb),
            Placement::BForward => (s.dqb, s.dqa),
        };
        State4::new(self.alpha * s.dp, self.alpha * s.ddp, self.beta * da, self.beta * db)
    }

    /// `‖d/dt profile - X(profile)‖∞` at `t`.
    pub fn ode_residual(&self, t: f64) -> f64 {
        (self.derivative(t) - vector_field(&self.eval(t))).max_abs()
    }

    /// Largest ODE residual and largest `|H|` on `n + 1` uniform nodes of `[t0, t1]`.
    pub fn audit(&self, t0: f64, t1: f64, n: usize) -> (f64, f64) {
        let mut res: f64 = 0.0;
        let mut h: f64 = 0.0;
        for k in 0..=n {
            let t = t0 + (t1 - t0) * k as f64 / n as f64;
            res = res.max(self.ode_residual(t));
            h = h.max(hamiltonian(&self.eval(t)).abs());
        }
        (res, h)
    }

    /// `(1/2)∫u²(a² + b²) dt` by composite Simpson on `[-40, 40]`.
    pub fn ground_energy(&self) -> f64 {
        let n = 80_000;
        let (lo, hi) = (-40.0, 40.0);
        let h = (hi - lo) / n as f64;
        let f = |t: f64| {
            let s = self.eval(t);
            s.u * s.u * (s.a * s.a + s.b * s.b)
        };
        let mut acc = f(lo) + f(hi);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + h * k as f64);
        }
        0.5 * acc * h / 3.0
    }
}

/// Least-squares fit of an equation `L = c R` over the sample nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMatch {
    /// Coordinates of `L` in the basis used for this equation.
    pub lhs: [f64; 2],
    /// Coordinates of `R` in the same basis.
    pub rhs: [f64; 2],
    /// The matched constant `c`.
    pub value: f64,
    /// `max |L - c R|` over the nodes.
    pub defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicDerivation {
    pub alpha: f64,
    pub beta: f64,
    /// The `a` equation divided by the `a` shape, in the basis `{1, tanh t}`.
    pub a_equation: CoefficientMatch,
    /// The `u` equation divided by the `u` shape, in the basis `{sech² t, 0}`.
    pub u_equation: CoefficientMatch,
    pub derived_residual: f64,
    pub derived_energy: f64,
    pub printed_residual: f64,
    pub printed_energy: f64,
}

fn fit_two(basis: &[[f64; 2]], y: &[f64]) -> [f64; 2] {
    let (mut g00, mut g01, mut g11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (b, v) in basis.iter().zip(y) {
        g00 += b[0] * b[0];
        g01 += b[0] * b[1];
        g11 += b[1] * b[1];
        r0 += b[0] * v;
        r1 += b[1] * v;
    }
    if g11 == 0.0 {
        return [r0 / g00, 0.0];
    }
    let det = g00 * g11 - g01 * g01;
    [(g11 * r0 - g01 * r1) / det, (g00 * r1 - g01 * r0) / det]
}

fn match_constant(basis: &[[f64; 2]], lhs: &[f64], rhs: &[f64]) -> CoefficientMatch {
    let l = fit_two(basis, lhs);
    let r = fit_two(basis, rhs);
    let value = (l[0] * r[0] + l[1] * r[1]) / (r[0] * r[0] + r[1] * r[1]);
    let defect = lhs
        .iter()
        .zip(rhs)
        .map(|(x, y)| (x - value * y).abs())
        .fold(0.0, f64::max);
    CoefficientMatch { lhs: l, rhs: r, value, defect }
}

/// Fix `α²` from `a' = -a + u² b` and `β²` from `u'' = -(a² + b² - 1/4) u`.
///
/// With the ansatz, `a'/a + 1 = 3/2 - (3/2) tanh t` and `u² b / a = α²(1 - tanh t)`,
/// while `u''/u - 1/4 = -(3/4) sech² t` and `a² + b² = 2β² sech² t`.
pub fn derive_homoclinic_constants() -> HomoclinicDerivation {
    let nodes: Vec<f64> = (0..=400).map(|k| -10.0 + 0.05 * k as f64).collect();
    let mut basis_a = Vec::new();
    let mut lhs_a = Vec::new();
    let mut rhs_a = Vec::new();
    let mut basis_u = Vec::new();
    let mut lhs_u = Vec::new();
    let mut rhs_u = Vec::new();
    for &t in &nodes {
        let s = shapes(t);
        let sech2 = (2.0 * ln_sech(t)).exp();
        basis_a.push([1.0, t.tanh()]);
        lhs_a.push(s.dqa / s.qa + 1.0);
        rhs_a.push(s.p * s.p * s.qb / s.qa);
        basis_u.push([sech2, 0.0]);
        lhs_u.push(s.ddp / s.p - 0.25);
        rhs_u.push(-(s.qa * s.qa + s.qb * s.qb));
    }
    let a_equation = match_constant(&basis_a, &lhs_a, &rhs_a);
    let u_equation = match_constant(&basis_u, &lhs_u, &rhs_u);
    let derived = HomoclinicProfile {
        alpha: a_equation.value.sqrt(),
        beta: u_equation.value.sqrt(),
        placement: Placement::AForward,
    };
    let (derived_residual, derived_energy) = derived.audit(-10.0, 10.0, 2000);
    let (printed_residual, printed_energy) = HomoclinicProfile::printed().audit(-10.0, 10.0, 2000);
    HomoclinicDerivation {
        alpha: derived.alpha,
        beta: derived.beta,
        a_equation,
        u_equation,
        derived_residual,
        derived_energy,
        printed_residual,
        printed_energy,
    }
}
