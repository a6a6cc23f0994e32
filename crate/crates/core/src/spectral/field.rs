use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{eigenvector, Galerkin, SpectrumA};
use crate::dynamics::State4;
use crate::error::{Error, Result};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Spinor part `z = z⁺ + z⁻` stored as eigen-coefficients `α±_k`, `|k| <= K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinorField {
    pub eps: f64,
    pub modes: usize,
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
}

/// A pair `(u, z)` on `[-1, 1)`: Fourier coefficients of `u`, eigen-coefficients of `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicField {
    pub eps: f64,
    pub modes: usize,
    pub u: Vec<C64>,
    pub z: SpinorField,
}

/// Symmetrize a coefficient vector so it represents a real function.
pub(crate) fn enforce_real(c: &mut [C64]) {
    let k_max = c.len() / 2;
    c[k_max].im = 0.0;
    for k in 1..=k_max {
        let avg = 0.5 * (c[k_max + k] + c[k_max - k].conj());
        c[k_max + k] = avg;
        c[k_max - k] = avg.conj();
    }
}

fn modes_of(len: usize) -> Result<usize> {
    if len % 2 == 0 || len < 3 {
        return Err(Error::InvalidInput(format!(
            "coefficient vector of length {len} is not of the form 2K+1 with K >= 1"
        )));
    }
    Ok(len / 2)
}

impl SpinorField {
    pub fn zeros(eps: f64, modes: usize) -> Self {
        Self {
            eps,
            modes,
            plus: vec![ZERO; 2 * modes + 1],
            minus: vec![ZERO; 2 * modes + 1],
        }
    }

    /// The constant spinor `(a, b)`.
    pub fn from_constant(eps: f64, modes: usize, a: f64, b: f64) -> Self {
        let mut ca = vec![ZERO; 2 * modes + 1];
        let mut cb = ca.clone();
        ca[modes] = C64::new(a, 0.0);
        cb[modes] = C64::new(b, 0.0);
        Self::from_ab_coeffs(eps, &ca, &cb)
    }

    /// `(i, k)` pairs with `i` the storage index of mode `k`.
    pub fn indices(&self) -> impl Iterator<Item = (usize, i64)> {
        let k_max = self.modes as i64;
        (0..2 * self.modes + 1).map(move |i| (i, i as i64 - k_max))
    }

    fn omega(&self, k: i64) -> f64 {
        self.eps * PI * k as f64
    }

    /// Fourier coefficients of the components `a` and `b`.
    pub fn to_ab_coeffs(&self) -> (Vec<C64>, Vec<C64>) {
        let mut a = vec![ZERO; self.plus.len()];
        let mut b = vec![ZERO; self.plus.len()];
        for (i, k) in self.indices() {
            let ep = eigenvector(self.omega(k), true);
            let em = eigenvector(self.omega(k), false);
            a[i] = self.plus[i] * ep[0] + self.minus[i] * em[0];
            b[i] = self.plus[i] * ep[1] + self.minus[i] * em[1];
        }
        (a, b)
    }

    /// Eigen-coefficients from Fourier coefficients of `a` and `b`.
    pub fn from_ab_coeffs(eps: f64, a: &[C64], b: &[C64]) -> Self {
        let modes = a.len() / 2;
        let mut out = Self::zeros(eps, modes);
        for (i, k) in out.indices().collect::<Vec<_>>() {
            let w = eps * PI * k as f64;
            let ep = eigenvector(w, true);
            let em = eigenvector(w, false);
            out.plus[i] = ep[0].conj() * a[i] + ep[1].conj() * b[i];
            out.minus[i] = em[0].conj() * a[i] + em[1].conj() * b[i];
        }
        out
    }

    /// `A_ε z` from the differential formula `(-ε b' + b, ε a' + a)`.
    pub fn apply_a_differential(&self) -> Self {
        let (a, b) = self.to_ab_coeffs();
        let mut na = vec![ZERO; a.len()];
        let mut nb = vec![ZERO; a.len()];
        for (i, k) in self.indices() {
            let d = C64::new(0.0, self.omega(k));
            na[i] = -d * b[i] + b[i];
            nb[i] = d * a[i] + a[i];
        }
        Self::from_ab_coeffs(self.eps, &na, &nb)
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.plus.iter_mut().chain(out.minus.iter_mut()).for_each(|c| *c *= t);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.plus.iter().chain(&self.minus).all(|c| *c == ZERO)
    }
}

impl PeriodicField {
    pub fn zeros(eps: f64, modes: usize) -> Self {
        Self {
            eps,
            modes,
            u: vec![ZERO; 2 * modes + 1],
            z: SpinorField::zeros(eps, modes),
        }
    }

    pub fn spectrum(&self) -> Result<SpectrumA> {
        SpectrumA::from_eps(self.eps, self.modes)
    }

    /// Build a field from samples of `u`, `a`, `b` at `s_j = -1 + 2j/N`, keeping `|k| <= K`.
    pub fn from_samples(eps: f64, modes: usize, u: &[f64], a: &[f64], b: &[f64]) -> Result<Self> {
        let n = u.len();
        if a.len() != n || b.len() != n {
            return Err(Error::InvalidInput("sample arrays differ in length".into()));
        }
        if n < 2 * modes + 1 {
            return Err(Error::InvalidInput(format!(
                "{n} samples cannot resolve {modes} modes"
            )));
        }
        let ctx = Galerkin::with_grid(SpectrumA::from_eps(eps, modes)?, n);
        Ok(Self {
            eps,
            modes,
            u: ctx.analyze(u),
            z: SpinorField::from_ab_coeffs(eps, &ctx.analyze(a), &ctx.analyze(b)),
        })
    }

    /// Sample a closure `s -> (u, a, b)` at `n` nodes and truncate to `K` modes.
    pub fn from_fn<F>(eps: f64, modes: usize, n: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> (f64, f64, f64),
    {
        let (mut u, mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for j in 0..n {
            let (x, y, w) = f(-1.0 + 2.0 * j as f64 / n as f64);
            u.push(x);
            a.push(y);
            b.push(w);
        }
        Self::from_samples(eps, modes, &u, &a, &b)
    }

    /// `self + t h`.
    pub fn axpy(&self, t: f64, h: &PeriodicField) -> Self {
        let mut out = self.clone();
        let add = |x: &mut [C64], y: &[C64]| x.iter_mut().zip(y).for_each(|(p, q)| *p += q * t);
        add(&mut out.u, &h.u);
        add(&mut out.z.plus, &h.z.plus);
        add(&mut out.z.minus, &h.z.minus);
        out
    }

    pub fn scaled(&self, tu: f64, tz: f64) -> Self {
        let mut out = self.clone();
        out.u.iter_mut().for_each(|c| *c *= tu);
        out.z = out.z.scaled(tz);
        out
    }

    /// The field `s ↦ f(s + shift)`.
    pub fn translated(&self, shift: f64) -> Self {
        let mut out = self.clone();
        let k_max = self.modes as i64;
        for i in 0..self.u.len() {
            let k = i as i64 - k_max;
            let phase = C64::from_polar(1.0, PI * k as f64 * shift);
            out.u[i] *= phase;
            out.z.plus[i] *= phase;
            out.z.minus[i] *= phase;
        }
        out
    }

    /// The generator of translations, `d/ds` applied componentwise.
    pub fn translation_generator(&self) -> Self {
        let mut out = self.clone();
        let k_max = self.modes as i64;
        for i in 0..self.u.len() {
            let d = C64::new(0.0, PI * (i as i64 - k_max) as f64);
            out.u[i] *= d;
            out.z.plus[i] *= d;
            out.z.minus[i] *= d;
        }
        out
    }

    /// Zero-pad or truncate to `modes`.
    pub fn with_modes(&self, modes: usize) -> Self {
        let mut out = Self::zeros(self.eps, modes);
        let (old, new) = (self.modes as i64, modes as i64);
        for k in -old.min(new)..=old.min(new) {
            let (i, j) = ((k + old) as usize, (k + new) as usize);
            out.u[j] = self.u[i];
            out.z.plus[j] = self.z.plus[i];
            out.z.minus[j] = self.z.minus[i];
        }
        out
    }

    pub fn enforce_real(&mut self) {
        enforce_real(&mut self.u);
        enforce_real(&mut self.z.plus);
        enforce_real(&mut self.z.minus);
    }

    /// Length of the real parameter vector used by the Newton solver.
    pub fn param_len(&self) -> usize {
        3 * (2 * self.modes + 1)
    }

    /// Pack as `[Re c_0, Re c_1, Im c_1, ..., Re c_K, Im c_K]` per block (`u`, `z⁺`, `z⁻`).
    pub fn to_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_len());
        let k_max = self.modes;
        for block in [&self.u, &self.z.plus, &self.z.minus] {
            out.push(block[k_max].re);
            for k in 1..=k_max {
                out.push(block[k_max + k].re);
                out.push(block[k_max + k].im);
            }
        }
        out
    }

    pub fn from_params(eps: f64, modes: usize, p: &[f64]) -> Result<Self> {
        let mut out = Self::zeros(eps, modes);
        if p.len() != out.param_len() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                out.param_len(),
                p.len()
            )));
        }
        let per = 2 * modes + 1;
        for (b, block) in [&mut out.u, &mut out.z.plus, &mut out.z.minus].into_iter().enumerate() {
            let q = &p[b * per..(b + 1) * per];
            block[modes] = C64::new(q[0], 0.0);
            for k in 1..=modes {
                let c = C64::new(q[2 * k - 1], q[2 * k]);
                block[modes + k] = c;
                block[modes - k] = c.conj();
            }
        }
        Ok(out)
    }

    /// `(u, u_s, a, b)` at a single point `s` by direct summation.
    pub fn eval(&self, s: f64) -> [f64; 4] {
        let (a, b) = self.z.to_ab_coeffs();
        let k_max = self.modes as i64;
        let mut out = [0.0; 4];
        for i in 0..self.u.len() {
            let k = i as i64 - k_max;
            let e = C64::from_polar(1.0, PI * k as f64 * s);
            out[0] += (self.u[i] * e).re;
            out[1] += (self.u[i] * e * C64::new(0.0, PI * k as f64)).re;
            out[2] += (a[i] * e).re;
            out[3] += (b[i] * e).re;
        }
        out
    }

    /// State in the original time variable `t = (s + 1)/ε`, so `v = ε u_s`.
    pub fn state_at(&self, s: f64) -> State4 {
        let [u, us, a, b] = self.eval(s);
        State4::new(u, us * self.eps, a, b)
    }

    /// Uniform samples over one period `t ∈ [0, 2T)` with `T = 1/ε`.
    pub fn orbit_samples(&self, n: usize) -> Result<(Vec<f64>, Vec<State4>)> {
        if n < 2 * self.modes + 1 {
            return Err(Error::InvalidInput(format!(
                "{n} samples cannot resolve {} modes",
                self.modes
            )));
        }
        let ctx = Galerkin::with_grid(self.spectrum()?, n);
        let du = self.translation_generator();
        let (a, b) = self.z.to_ab_coeffs();
        let u = ctx.synthesize(&self.u);
        let v = ctx.synthesize(&du.u);
        let a = ctx.synthesize(&a);
        let b = ctx.synthesize(&b);
        let nodes = ctx.nodes();
        let times = nodes.iter().map(|s| (s + 1.0) / self.eps).collect();
        let states = (0..n)
            .map(|j| State4::new(u[j], v[j] * self.eps, a[j], b[j]))
            .collect();
        Ok((times, states))
    }

    /// Largest imbalance `|c_{-k} - conj(c_k)|` over all blocks.
    pub fn reality_defect(&self) -> f64 {
        let k_max = self.modes;
        let mut worst: f64 = 0.0;
        for block in [&self.u, &self.z.plus, &self.z.minus] {
            worst = worst.max(block[k_max].im.abs());
            for k in 1..=k_max {
                worst = worst.max((block[k_max - k] - block[k_max + k].conj()).norm());
            }
        }
        worst
    }

    /// Coefficients `c_0..c_K` of each block as `[re, im]` pairs.
    pub fn to_document(&self) -> FieldDocument {
        let half = |c: &[C64]| c[self.modes..].iter().map(|z| [z.re, z.im]).collect();
        FieldDocument {
            epsilon: self.eps,
            modes: self.modes,
            u_coeffs: half(&self.u),
            z_plus_coeffs: half(&self.z.plus),
            z_minus_coeffs: half(&self.z.minus),
        }
    }

    pub fn from_document(doc: &FieldDocument) -> Result<Self> {
        let k = doc.modes;
        for c in [&doc.u_coeffs, &doc.z_plus_coeffs, &doc.z_minus_coeffs] {
            if c.len() != k + 1 {
                return Err(Error::TruncationMismatch {
                    expected: k,
                    found: c.len().saturating_sub(1),
                });
            }
        }
        let full = |c: &[[f64; 2]]| -> Vec<C64> {
            let mut out = vec![ZERO; 2 * k + 1];
            for (j, [re, im]) in c.iter().enumerate() {
                out[k + j] = C64::new(*re, *im);
                out[k - j] = C64::new(*re, -*im);
            }
            out[k].im = 0.0;
            out
        };
        modes_of(2 * k + 1)?;
        Ok(Self {
            eps: doc.epsilon,
            modes: k,
            u: full(&doc.u_coeffs),
            z: SpinorField {
                eps: doc.epsilon,
                modes: k,
                plus: full(&doc.z_plus_coeffs),
                minus: full(&doc.z_minus_coeffs),
            },
        })
    }
}

/// Serializable coefficient listing for nonnegative modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDocument {
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub modes: usize,
    pub u_coeffs: Vec<[f64; 2]>,
    pub z_plus_coeffs: Vec<[f64; 2]>,
    pub z_minus_coeffs: Vec<[f64; 2]>,
}
