//! The reduced cylinder system as a four dimensional Hamiltonian flow.
//!
//! Phase space points are `(u, v, a, b)` with `v = u'`; the flow is
//!
//! ```text
//! u' = v
//! v' = -(a² + b² - 1/4) u
//! a' = -a + u² b
//! b' =  b - u² a
//! ```
//!
//! generated by `H = v²/2 + (u²/2)(a² + b² - 1/4) - ab`. The rotated chart
//! `ā = (a+b)/√2`, `b̄ = (a-b)/√2` moves the centers `P±` onto the `ā` axis.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(u, v, a, b)` of the phase space, or a tangent vector at one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State4 {
    pub u: f64,
    pub v: f64,
    pub a: f64,
    pub b: f64,
}

impl State4 {
    pub const ZERO: State4 = State4::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(u: f64, v: f64, a: f64, b: f64) -> Self {
        Self { u, v, a, b }
    }

    pub fn from_array(x: [f64; 4]) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.u, self.v, self.a, self.b]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Sup-norm distance to another state.
    pub fn dist_inf(&self, other: &State4) -> f64 {
        (*self - *other).max_abs()
    }
}

impl Add for State4 {
    type Output = State4;
    fn add(self, o: State4) -> State4 {
        State4::new(self.u + o.u, self.v + o.v, self.a + o.a, self.b + o.b)
    }
}

impl Sub for State4 {
    type Output = State4;
    fn sub(self, o: State4) -> State4 {
        State4::new(self.u - o.u, self.v - o.v, self.a - o.a, self.b - o.b)
    }
}

impl Mul<State4> for f64 {
    type Output = State4;
    fn mul(self, s: State4) -> State4 {
        State4::new(self * s.u, self * s.v, self * s.a, self * s.b)
    }
}

impl Neg for State4 {
    type Output = State4;
    fn neg(self) -> State4 {
        -1.0 * self
    }
}

/// A point of the rotated chart `(u, v, ā, b̄)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RotatedState4 {
    pub u: f64,
    pub v: f64,
    pub abar: f64,
    pub bbar: f64,
}

impl RotatedState4 {
    pub const fn new(u: f64, v: f64, abar: f64, bbar: f64) -> Self {
        Self { u, v, abar, bbar }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.u, self.v, self.abar, self.bbar]
    }

    pub fn from_array(x: [f64; 4]) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }
}

/// The equilibria with `u >= 0` and their energy levels.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumCatalog {
    pub p0: State4,
    pub p_plus: State4,
    pub p_minus: State4,
    pub energies: [f64; 3],
}

impl EquilibriumCatalog {
    pub fn new() -> Self {
        let p0 = State4::ZERO;
        let p_plus = p_plus();
        let p_minus = p_minus();
        let energies = [hamiltonian(&p0), hamiltonian(&p_plus), hamiltonian(&p_minus)];
        Self {
            p0,
            p_plus,
            p_minus,
            energies,
        }
    }

    /// `(name, point, energy)` triples in catalog order.
    pub fn entries(&self) -> [(&'static str, State4, f64); 3] {
        [
            ("P0", self.p0, self.energies[0]),
            ("P+", self.p_plus, self.energies[1]),
            ("P-", self.p_minus, self.energies[2]),
        ]
    }

    /// Smallest sup-norm distance from `s` to any catalogued equilibrium.
    pub fn nearest_distance(&self, s: &State4) -> f64 {
        self.entries()
            .iter()
            .map(|(_, p, _)| s.dist_inf(p))
            .fold(f64::INFINITY, f64::min)
    }
}

impl Default for EquilibriumCatalog {
    fn default() -> Self {
        Self::new()
    }
}

/// `1/(2√2)`, the spinor coordinate of the centers.
pub const CENTER_SPINOR: f64 = 0.353_553_390_593_273_73;

pub fn p_plus() -> State4 {
    State4::new(1.0, 0.0, CENTER_SPINOR, CENTER_SPINOR)
}

pub fn p_minus() -> State4 {
    State4::new(1.0, 0.0, -CENTER_SPINOR, -CENTER_SPINOR)
}

pub fn hamiltonian(s: &State4) -> f64 {
    let State4 { u, v, a, b } = *s;
    0.5 * v * v + 0.5 * u * u * (a * a + b * b - 0.25) - a * b
}

/// Second printed form of `H`, algebraically identical to [`hamiltonian`].
pub fn hamiltonian_split_form(s: &State4) -> f64 {
    let State4 { u, v, a, b } = *s;
    let d = a - b;
    0.5 * v * v + 0.5 * (u * u - 1.0) * (a * a + b * b - 0.25) + 0.5 * (d * d - 0.25)
}

pub fn vector_field(s: &State4) -> State4 {
    let State4 { u, v, a, b } = *s;
    let u2 = u * u;
    State4::new(v, -(a * a + b * b - 0.25) * u, -a + u2 * b, b - u2 * a)
}

pub fn to_rotated(s: &State4) -> RotatedState4 {
    RotatedState4::new(
        s.u,
        s.v,
        (s.a + s.b) * FRAC_1_SQRT_2,
        (s.a - s.b) * FRAC_1_SQRT_2,
    )
}

pub fn from_rotated(r: &RotatedState4) -> State4 {
    State4::new(
        r.u,
        r.v,
        (r.abar + r.bbar) * FRAC_1_SQRT_2,
        (r.abar - r.bbar) * FRAC_1_SQRT_2,
    )
}

pub fn rotated_vector_field(r: &RotatedState4) -> RotatedState4 {
    let RotatedState4 { u, v, abar, bbar } = *r;
    let u2 = u * u;
    RotatedState4::new(
        v,
        (0.25 - (abar * abar + bbar * bbar)) * u,
        -(1.0 + u2) * bbar,
        (u2 - 1.0) * abar,
    )
}

pub fn hamiltonian_rotated(r: &RotatedState4) -> f64 {
    let RotatedState4 { u, v, abar, bbar } = *r;
    0.5 * v * v
        + 0.5 * (u * u - 1.0) * (abar * abar + bbar * bbar - 0.25)
        + 0.5 * (2.0 * bbar * bbar - 0.25)
}

/// Reversing symmetry `(u, v, a, b) ↦ (u, -v, b, a)`.
///
/// If `t ↦ s(t)` solves the system then so does `t ↦ time_reversal_swap(s(-t))`.
pub fn time_reversal_swap(s: &State4) -> State4 {
    State4::new(s.u, -s.v, s.b, s.a)
}

/// The complex form `ψ± = a ± i b` of the spinor coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorPair {
    pub psi_plus: Complex64,
    pub psi_minus: Complex64,
}

pub fn spinor_from_state(s: &State4) -> SpinorPair {
    SpinorPair {
        psi_plus: Complex64::new(s.a, s.b),
        psi_minus: Complex64::new(s.a, -s.b),
    }
}

/// Tolerance on `|conj(ψ+) - ψ-|` relative to `max(1, |ψ+|)`.
pub const CONJUGACY_TOL: f64 = 1e-12;

pub fn state_from_spinor(u: f64, v: f64, p: &SpinorPair) -> Result<State4> {
    let defect = (p.psi_plus.conj() - p.psi_minus).norm();
    if !(defect <= CONJUGACY_TOL * p.psi_plus.norm().max(1.0)) {
        return Err(Error::NonConjugatePair { defect });
    }
    let a = 0.5 * (p.psi_plus.re + p.psi_minus.re);
    let b = 0.5 * (p.psi_plus.im - p.psi_minus.im);
    Ok(State4::new(u, v, a, b))
}
