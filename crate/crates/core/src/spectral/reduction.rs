//! The reduction `z⁺ ↦ g(u, z⁺)` onto the negative space and the Nehari scaling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Galerkin, PeriodicField, SpinorField};
use crate::error::{Error, Result};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionOptions {
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            max_iters: 2000,
        }
    }
}

fn dot(x: &[C64], y: &[C64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p.conj() * q).re).sum()
}

/// `β ↦ |λ| β + P⁻ P_K(u² w)` with `w` the minus-space field of coefficients `β`.
fn minus_operator(ctx: &Galerkin, u2: &[f64], beta: &[C64]) -> Vec<C64> {
    let w = SpinorField {
        eps: ctx.eps(),
        modes: ctx.modes(),
        plus: vec![C64::new(0.0, 0.0); beta.len()],
        minus: beta.to_vec(),
    };
    let mut out = minus_of_product(ctx, u2, &w);
    let k_max = ctx.modes() as i64;
    for (i, o) in out.iter_mut().enumerate() {
        *o += ctx.spectrum.rho(i as i64 - k_max) * beta[i];
    }
    out
}

/// Minus-space coefficients of `P_K(u² z)` given grid values `u²`.
fn minus_of_product(ctx: &Galerkin, u2: &[f64], z: &SpinorField) -> Vec<C64> {
    let (a, b) = z.to_ab_coeffs();
    let ga = ctx.synthesize(&a);
    let gb = ctx.synthesize(&b);
    let pa: Vec<f64> = ga.iter().zip(u2).map(|(x, w)| x * w).collect();
    let pb: Vec<f64> = gb.iter().zip(u2).map(|(x, w)| x * w).collect();
    SpinorField::from_ab_coeffs(ctx.eps(), &ctx.analyze(&pa), &ctx.analyze(&pb)).minus
}

/// Solve `A_ε w = P⁻(u²(w + v))` for `w` in the negative space, `v = P⁺ z_plus`.
///
/// Only the plus part of `z_plus` is read. Preconditioned conjugate gradients
/// on `(|A_ε| + P⁻u²P⁻) w = -P⁻(u² v)`, which is symmetric positive definite.
pub fn reduce_g(
    ctx: &Galerkin,
    u: &[C64],
    z_plus: &SpinorField,
    opts: &ReductionOptions,
) -> Result<SpinorField> {
    let len = 2 * ctx.modes() + 1;
    if u.len() != len || z_plus.plus.len() != len {
        return Err(Error::TruncationMismatch {
            expected: ctx.modes(),
            found: u.len().max(z_plus.plus.len()) / 2,
        });
    }
    let mut out = SpinorField::zeros(ctx.eps(), ctx.modes());
    let u2: Vec<f64> = ctx.synthesize(u).into_iter().map(|x| x * x).collect();
    let v = SpinorField {
        minus: vec![C64::new(0.0, 0.0); len],
        ..z_plus.clone()
    };
    let rhs: Vec<C64> = minus_of_product(ctx, &u2, &v).into_iter().map(|c| -c).collect();
    let rhs_norm = dot(&rhs, &rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok(out);
    }
    let k_max = ctx.modes() as i64;
    let inv: Vec<f64> = (0..len).map(|i| 1.0 / ctx.spectrum.rho(i as i64 - k_max)).collect();
    let precond = |r: &[C64]| -> Vec<C64> { r.iter().zip(&inv).map(|(c, w)| c * *w).collect() };

    let mut x = vec![C64::new(0.0, 0.0); len];
    let mut r = rhs.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = rhs_norm;
    for _ in 0..opts.max_iters {
        let ap = minus_operator(ctx, &u2, &p);
        let alpha = rz / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += pi * alpha);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= ai * alpha);
        res = dot(&r, &r).sqrt();
        if res <= opts.rel_tol * rhs_norm {
            out.minus = x;
            super::field::enforce_real(&mut out.minus);
            return Ok(out);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + *pi * beta);
    }
    Err(Error::SolverStall {
        iterations: opts.max_iters,
        residual: res / rhs_norm,
    })
}

/// `K(w) = -‖w‖²_{1/2,ε} - (1/ε)∫u²|w|² - (2/ε)∫u²⟨v, w⟩`, concave in `w ∈ H⁻`.
pub fn reduction_objective(ctx: &Galerkin, u: &[C64], v: &SpinorField, w: &SpinorField) -> f64 {
    let f = |z: &SpinorField| PeriodicField {
        eps: ctx.eps(),
        modes: ctx.modes(),
        u: u.to_vec(),
        z: z.clone(),
    };
    let mut vw = v.clone();
    vw.plus.iter_mut().zip(&w.plus).for_each(|(p, q)| *p += q);
    vw.minus.iter_mut().zip(&w.minus).for_each(|(p, q)| *p += q);
    -ctx.half_sq(w) - ctx.coupling(&f(&vw)) + ctx.coupling(&f(v))
}

/// Defects of the three Nehari identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NehariResiduals {
    /// `|‖u‖²_{1,ε} - c|`.
    pub r1: f64,
    /// `|⟨A_ε z, z⟩/ε - c|`.
    pub r2: f64,
    /// Dual `H^{1/2}` norm of `P⁻(A_ε z - u² z)`.
    pub r3: f64,
    /// `c = (1/ε)∫u²|z|²`.
    pub coupling: f64,
    /// Set for the zero pair, which satisfies the identities but is excluded from the Nehari set.
    pub trivial: bool,
}

impl NehariResiduals {
    /// `max(r1, r2, r3) / c`; infinite for a trivial pair.
    pub fn relative(&self) -> f64 {
        if self.trivial || self.coupling <= 0.0 {
            return f64::INFINITY;
        }
        self.r1.max(self.r2).max(self.r3) / self.coupling
    }
}

pub fn nehari_residuals(ctx: &Galerkin, f: &PeriodicField) -> Result<NehariResiduals> {
    let e = ctx.energy(f)?;
    let r = ctx.gradient(f)?;
    let trivial = f.u.iter().all(|c| c.norm() == 0.0) && f.z.is_zero();
    Ok(NehariResiduals {
        r1: (e.scalar_quadratic - e.coupling).abs(),
        r2: (e.spinor_quadratic - e.coupling).abs(),
        r3: ctx.dual_parts(&r)[2].sqrt(),
        coupling: e.coupling,
        trivial,
    })
}

/// Outcome of scaling `(u, z⁺)` onto the Nehari set.
#[derive(Debug, Clone, PartialEq)]
pub struct NehariProjection {
    pub field: PeriodicField,
    pub t: f64,
    pub s: f64,
}

/// Find `t, s > 0` with `(t u, s(z⁺ + g(t u, z⁺)))` on the Nehari set.
///
/// Uses `g(tu, s v) = s g(tu, v)`: the spinor identity fixes `t` through
/// `N(t) = t² Q(t)`, after which `s² = ‖u‖²_{1,ε} / Q(t)`.
pub fn nehari_project(
    ctx: &Galerkin,
    f: &PeriodicField,
    opts: &ReductionOptions,
) -> Result<NehariProjection> {
    let v = SpinorField {
        minus: vec![C64::new(0.0, 0.0); f.z.plus.len()],
        ..f.z.clone()
    };
    let v_sq = ctx.half_sq(&v);
    let u_sq = ctx.h1_sq(&f.u);
    if v_sq == 0.0 || u_sq == 0.0 {
        return Err(Error::InvalidInput(
            "Nehari projection needs nonzero u and z⁺".into(),
        ));
    }
    let assemble = |t: f64| -> Result<(PeriodicField, f64, f64)> {
        let tu: Vec<C64> = f.u.iter().map(|c| c * t).collect();
        let w = reduce_g(ctx, &tu, &v, opts)?;
        let zeta = SpinorField {
            minus: w.minus,
            ..v.clone()
        };
        let g = PeriodicField {
            eps: f.eps,
            modes: f.modes,
            u: f.u.clone(),
            z: zeta,
        };
        let q = ctx.coupling(&g);
        let n = ctx.spinor_quadratic(&g.z);
        Ok((g, n - t * t * q, q))
    };

    // Bracket the root of phi(t) = N(t) - t² Q(t); phi(0) = ‖v‖² > 0.
    let (mut lo, mut flo) = (0.0, v_sq);
    let mut hi = 1.0;
    let mut fhi = assemble(hi)?.1;
    let mut expansions = 0;
    while fhi > 0.0 {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = assemble(hi)?.1;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::NewtonDivergence {
                iterations: expansions,
                residual: fhi,
            });
        }
    }
    // Illinois regula falsi.
    let mut side = 0i8;
    let mut t = hi;
    for _ in 0..200 {
        t = (lo * fhi - hi * flo) / (fhi - flo);
        let ft = assemble(t)?.1;
        if ft.abs() <= 1e-15 * v_sq || (hi - lo) <= 1e-15 * hi {
            break;
        }
        if ft > 0.0 {
            lo = t;
            flo = ft;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = t;
            fhi = ft;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    let (g, _, q) = assemble(t)?;
    let s = (u_sq / q).sqrt();
    Ok(NehariProjection {
        field: g.scaled(t, s),
        t,
        s,
    })
}
