use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cde_core::dynamics::{
    from_rotated, hamiltonian, hamiltonian_split_form, rotated_vector_field, spinor_from_state,
    state_from_spinor, time_reversal_swap, to_rotated, vector_field, EquilibriumCatalog, State4,
};
use cde_core::geometry::{
    clifford_mult, cylinder_to_euclidean, euclidean_to_cylinder, euclidean_to_sphere, log_grid,
    ProfileChart, RadialProfile, SphereConvention, Spinor2, CLIFFORD_GENERATORS,
};
use cde_core::integrate::{integrate, step_signed, StepperConfig};
use cde_core::linear::{center_linearization, eigenvalues_4x4, jacobian_at, ChartPoint};
use cde_core::orbits::{distance_to_homoclinic_samples, HomoclinicProfile};
use cde_core::spectral::{
    apply_a, project, reduce_g, Galerkin, PeriodicField, ReductionOptions, SpectrumA,
};
use cde_core::verify::random_field;

type C64 = Complex64;

fn state() -> impl Strategy<Value = State4> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_map(|(u, v, a, b)| State4::new(u, v, a, b))
}

fn field(seed: u64, eps: f64, modes: usize) -> PeriodicField {
    random_field(&mut ChaCha8Rng::seed_from_u64(seed), eps, modes)
}

#[test]
fn two_forms_of_h_agree_to_rounding() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let s = State4::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        );
        let (u, v, a, b) = (s.u, s.v, s.a, s.b);
        // One ulp of the largest intermediate term bounds the rounding of either form.
        let scale = (0.5 * v * v)
            .max(0.5 * (u * u + 1.0) * (a * a + b * b + 0.25))
            .max((a * b).abs())
            .max(0.5 * ((a - b).powi(2) + 0.25));
        let d = (hamiltonian(&s) - hamiltonian_split_form(&s)).abs();
        assert!(d <= 4.0 * f64::EPSILON * scale, "{s:?}: {d:e}");
    }
}

#[test]
fn equilibria_are_exact_and_fixed_by_the_steppers() {
    let cat = EquilibriumCatalog::new();
    for (_, p, _) in cat.entries() {
        // 1/(2√2) is not representable, so P± is fixed only to rounding.
        assert!(vector_field(&p).max_abs() <= f64::EPSILON);
        for cfg in [StepperConfig::rk4(1e-2), StepperConfig::midpoint(1e-2)] {
            let q = step_signed(&p, cfg.dt, &cfg).unwrap();
            assert!(q.dist_inf(&p) <= 1e-15);
        }
        let m = jacobian_at(ChartPoint::Original(p)).entries;
        let ev = eigenvalues_4x4(&m).unwrap().eigenvalues;
        for l in ev {
            let nearest = ev.iter().map(|m| (m + l).norm()).fold(f64::INFINITY, f64::min);
            assert!(nearest <= 1e-9, "{ev:?}");
        }
    }
    assert_eq!(cat.energies, [0.0, -0.125, -0.125]);
}

#[test]
fn center_eigenvalues_are_fourth_roots_of_two() {
    let sr = eigenvalues_4x4(&center_linearization().entries).unwrap();
    for l in sr.eigenvalues {
        assert!((l.powi(4) - 2.0).norm() <= 1e-10, "{l}");
    }
}

#[test]
fn rk4_is_fourth_order() {
    let x0 = State4::new(0.8, 0.1, 0.3, -0.2);
    let reference = *integrate(&x0, 1.0, &StepperConfig::rk4(1e-4)).unwrap().states.last().unwrap();
    let err = |dt: f64| {
        integrate(&x0, 1.0, &StepperConfig::rk4(dt)).unwrap().states.last().unwrap().dist_inf(&reference)
    };
    let ratio = err(0.02) / err(0.01);
    assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rotation_conjugates_the_flow(s in state()) {
        let r = to_rotated(&s);
        prop_assert!(from_rotated(&r).dist_inf(&s) <= 1e-15);
        let lhs = from_rotated(&rotated_vector_field(&r));
        prop_assert!(lhs.dist_inf(&vector_field(&s)) <= 1e-13 * (1.0 + s.max_abs().powi(3)));
    }

    #[test]
    fn reversal_symmetry_of_the_field(s in state()) {
        // d/dt R s(-t) = -R X(s) must equal X(R s).
        let lhs = time_reversal_swap(&vector_field(&s));
        let rhs = vector_field(&time_reversal_swap(&s));
        prop_assert!((lhs + rhs).max_abs() <= 1e-14 * (1.0 + s.max_abs().powi(3)));
        prop_assert_eq!(hamiltonian(&time_reversal_swap(&s)), hamiltonian(&s));
    }

    #[test]
    fn spinor_view_round_trips(s in state()) {
        let back = state_from_spinor(s.u, s.v, &spinor_from_state(&s)).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn field_is_symplectic_gradient(s in state()) {
        let h = 1e-5;
        let dh = |k: usize| {
            let mut p = s.to_array();
            let mut m = s.to_array();
            p[k] += h;
            m[k] -= h;
            (hamiltonian(&State4::from_array(p)) - hamiltonian(&State4::from_array(m))) / (2.0 * h)
        };
        // (u, v) canonical; (a, b) with a' = ∂H/∂b, b' = -∂H/∂a.
        let expected = [dh(1), -dh(0), dh(3), -dh(2)];
        let x = vector_field(&s).to_array();
        for k in 0..4 {
            prop_assert!((x[k] - expected[k]).abs() <= 1e-6 * x[k].abs().max(1.0), "{k}: {} {}", x[k], expected[k]);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(s in state()) {
        let j = jacobian_at(ChartPoint::Original(s)).entries;
        let h = 1e-6;
        for c in 0..4 {
            let mut p = s.to_array();
            let mut m = s.to_array();
            p[c] += h;
            m[c] -= h;
            let fp = vector_field(&State4::from_array(p)).to_array();
            let fm = vector_field(&State4::from_array(m)).to_array();
            for r in 0..4 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                prop_assert!((j[(r, c)] - fd).abs() <= 1e-7 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn jacobian_spectrum_is_symmetric(s in state()) {
        let m = jacobian_at(ChartPoint::Original(s)).entries;
        if let Ok(sr) = eigenvalues_4x4(&m) {
            let scale = sr.eigenvalues.iter().map(|l| l.norm()).fold(1.0, f64::max);
            for l in sr.eigenvalues {
                let nearest = sr.eigenvalues.iter().map(|m| (m + l).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(nearest <= 1e-7 * scale, "{:?}", sr.eigenvalues);
            }
        }
    }

    #[test]
    fn midpoint_is_symmetric(s in state(), dt in 1e-3..5e-2f64) {
        let cfg = StepperConfig::midpoint(dt);
        if let Ok(fwd) = step_signed(&s, dt, &cfg) {
            let back = step_signed(&fwd, -dt, &cfg).unwrap();
            prop_assert!(back.dist_inf(&s) <= 1e-12 * (1.0 + s.max_abs()));
        }
    }

    #[test]
    fn operator_square_and_splitting(seed in any::<u64>(), eps in 0.05..1.0f64, modes in 2usize..24) {
        let f = field(seed, eps, modes);
        let sp = SpectrumA::from_eps(eps, modes).unwrap();
        let twice = apply_a(&apply_a(&f.z, &sp).unwrap(), &sp).unwrap();
        let (a, b) = f.z.to_ab_coeffs();
        let (ta, tb) = twice.to_ab_coeffs();
        for (i, k) in f.z.indices() {
            let w = 1.0 + (eps * PI * k as f64).powi(2);
            prop_assert!((ta[i] - a[i] * w).norm() <= 1e-12 * w);
            prop_assert!((tb[i] - b[i] * w).norm() <= 1e-12 * w);
        }
        prop_assert_eq!(sp.min_abs_eigenvalue(), 1.0);
        let ctx = Galerkin::new(eps, modes).unwrap();
        let (p, m) = project(&f.z);
        let whole = ctx.half_sq(&f.z);
        prop_assert!((whole - ctx.half_sq(&p) - ctx.half_sq(&m)).abs() <= 1e-12 * whole);
    }

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), eps in 0.05..0.5f64, modes in 3usize..20) {
        let f = field(seed, eps, modes);
        let h = field(seed.wrapping_add(1), eps, modes);
        let ctx = Galerkin::new(eps, modes).unwrap();
        let exact = ctx.pair(&ctx.gradient(&f).unwrap(), &h);
        let d = 1e-5;
        let fd = (ctx.energy(&f.axpy(d, &h)).unwrap().total - ctx.energy(&f.axpy(-d, &h)).unwrap().total) / (2.0 * d);
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{fd} {exact}");
    }

    #[test]
    fn reduction_maximizes_over_the_minus_space(seed in any::<u64>(), eps in 0.1..0.5f64, modes in 3usize..16, scale in 1e-3..1.0f64) {
        let f = field(seed, eps, modes);
        let ctx = Galerkin::new(eps, modes).unwrap();
        let (plus, _) = project(&f.z);
        let g = reduce_g(&ctx, &f.u, &plus, &ReductionOptions::default()).unwrap();
        let mut at_g = f.clone();
        at_g.z.minus = g.minus.clone();
        at_g.z.plus = plus.plus.clone();
        let w = field(seed.wrapping_add(7), eps, modes).z;
        let mut at_w = at_g.clone();
        at_w.z.minus.iter_mut().zip(&w.minus).for_each(|(x, y)| *x += y * scale);
        let eg = ctx.energy(&at_g).unwrap().total;
        let ew = ctx.energy(&at_w).unwrap().total;
        prop_assert!(eg > ew, "{eg} {ew}");
    }

    #[test]
    fn clifford_relations(x in prop::array::uniform3(-5.0..5.0f64), re in prop::array::uniform2(-1.0..1.0f64), im in prop::array::uniform2(-1.0..1.0f64)) {
        let phi = Spinor2::new(C64::new(re[0], im[0]), C64::new(re[1], im[1]));
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let xx = clifford_mult(x, &clifford_mult(x, &phi));
        prop_assert!(xx.sub(&phi.scale(C64::new(-r2, 0.0))).norm_sqr().sqrt() <= 1e-13 * (1.0 + r2));
        // e_i e_j + e_j e_i = -2 δ_ij on the generators themselves.
        for i in 0..3 {
            for j in 0..3 {
                let (gi, gj) = (CLIFFORD_GENERATORS[i], CLIFFORD_GENERATORS[j]);
                for r in 0..2 {
                    for c in 0..2 {
                        let s: C64 = (0..2).map(|k| gi[r][k] * gj[k][c] + gj[r][k] * gi[k][c]).sum();
                        let expect = if i == j && r == c { -2.0 } else { 0.0 };
                        prop_assert!((s - C64::new(expect, 0.0)).norm() == 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn cylinder_euclidean_round_trip(lo in 1e-3..0.5f64, span in 1.0..100.0f64, n in 8usize..200, c in prop::array::uniform3(-2.0..2.0f64)) {
        let r = log_grid(lo, lo * span, n);
        let euc = RadialProfile::from_fn(ProfileChart::Euclidean, r.clone(), |x| {
            let w = 1.0 / (1.0 + x * x);
            (c[0] * w.sqrt(), c[1] * w, c[2] * x * w)
        }).unwrap();
        let t: Vec<f64> = r.iter().rev().map(|x| -x.ln()).collect();
        let back = cylinder_to_euclidean(&euclidean_to_cylinder(&euc, &t).unwrap(), &r).unwrap();
        for j in 0..n {
            prop_assert!((back.u[j] - euc.u[j]).abs() <= 1e-12 * (1.0 + euc.u[j].abs()));
            prop_assert!((back.f1[j] - euc.f1[j]).abs() <= 1e-12 * (1.0 + euc.f1[j].abs()));
            prop_assert!((back.f2[j] - euc.f2[j]).abs() <= 1e-12 * (1.0 + euc.f2[j].abs()));
        }
    }

    #[test]
    fn kelvin_symmetric_input_gives_equatorial_symmetry(half in 4usize..60, c in 0.1..2.0f64) {
        // u(1/r) = r u(r) is the inversion symmetry for weight 1/2 and
        // f(1/r) = r² f(r) for spinor weight 1.
        let s: Vec<f64> = (-(half as i64)..=half as i64).map(|k| 0.05 * k as f64).collect();
        let r: Vec<f64> = s.iter().map(|x| x.exp()).collect();
        let euc = RadialProfile::from_fn(ProfileChart::Euclidean, r, |x| {
            let w = 1.0 / (1.0 + x * x);
            (c * (2.0 * w).sqrt() * (1.0 + 0.3 * ((x.ln()).powi(2)).tanh()), w * (1.0 + x.ln().powi(2)), -w)
        }).unwrap();
        let (sph, _) = euclidean_to_sphere(&euc, &SphereConvention { theta_grid: None }).unwrap();
        let n = sph.len();
        for j in 0..n {
            prop_assert!((sph.grid[j] + sph.grid[n - 1 - j] - PI).abs() <= 1e-14);
            prop_assert!((sph.u[j] - sph.u[n - 1 - j]).abs() <= 1e-12 * (1.0 + sph.u[j].abs()));
            prop_assert!((sph.f1[j] - sph.f1[n - 1 - j]).abs() <= 1e-12 * (1.0 + sph.f1[j].abs()));
            prop_assert!(sph.grid[j] > 0.0 && sph.grid[j] < PI);
        }
    }

    #[test]
    fn homoclinic_reversal_symmetry(t in -30.0..30.0f64) {
        let h = HomoclinicProfile::derived();
        prop_assert!(time_reversal_swap(&h.eval(-t)).dist_inf(&h.eval(t)) <= 1e-15);
        prop_assert!(h.ode_residual(t) <= 1e-10);
        prop_assert!(hamiltonian(&h.eval(t)).abs() <= 1e-12);
    }

    #[test]
    fn homoclinic_distance_is_shift_equivariant(shift in -1.5..1.5f64) {
        let h = HomoclinicProfile::derived();
        let times: Vec<f64> = (0..=2000).map(|k| -12.0 + 0.012 * k as f64).collect();
        let states: Vec<State4> = times.iter().map(|&t| h.eval(t - shift)).collect();
        let d = distance_to_homoclinic_samples(&times, &states, 10.0).unwrap();
        prop_assert!((d.shift - shift).abs() <= 1e-6, "{d:?}");
        prop_assert!(d.sup_dist <= 1e-6);
    }
}
