//! Self-checks grouped into named suites, as run by `cde-lab verify`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{hamiltonian, vector_field, EquilibriumCatalog, State4};
use crate::error::{Error, Result};
use crate::geometry::{
    clifford_mult, closed_form_profile, coupling_constant_fit, cylinder_to_euclidean,
    euclidean_to_cylinder, log_grid, ProfileChart, RadialProfile, Spinor2,
};
use crate::integrate::{energy_drift, integrate, StepperConfig};
use crate::linear::{center_linearization, eigenvalues_4x4, lyapunov_period};
use crate::orbits::{
    derive_homoclinic_constants, distance_to_homoclinic, distances_to_center, homoclinic_profile,
    lyapunov_family, lyapunov_orbit, orbit_from_field, HomoclinicProfile, DELTA0,
};
use crate::spectral::{
    apply_a, default_modes, ground_state, project, Galerkin, GroundStateOptions, PeriodicField,
    SpectrumA, SpinorField,
};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Recorded value without a pass/fail threshold.
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub tolerance: Option<f64>,
}

impl Check {
    /// Passes when `value <= tol`.
    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            status: if value <= tol { Status::Pass } else { Status::Fail },
            value,
            tolerance: Some(tol),
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            value: if ok { 1.0 } else { 0.0 },
            tolerance: None,
        }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            status: Status::Info,
            value,
            tolerance: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        };
        write!(f, "{tag} {} = {:?}", self.name, self.value)?;
        if let Some(t) = self.tolerance {
            write!(f, " (tol {t:?})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Equilibria,
    Linear,
    Homoclinic,
    Operator,
    Lyapunov,
    GroundState,
    Convergence,
    Gradient,
    Geometry,
    Energy,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Equilibria,
        Suite::Linear,
        Suite::Homoclinic,
        Suite::Operator,
        Suite::Lyapunov,
        Suite::GroundState,
        Suite::Convergence,
        Suite::Gradient,
        Suite::Geometry,
        Suite::Energy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Equilibria => "equilibria",
            Suite::Linear => "linear",
            Suite::Homoclinic => "homoclinic",
            Suite::Operator => "operator",
            Suite::Lyapunov => "lyapunov",
            Suite::GroundState => "ground-state",
            Suite::Convergence => "convergence",
            Suite::Gradient => "gradient",
            Suite::Geometry => "geometry",
            Suite::Energy => "energy",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 7 }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    match suite {
        Suite::Equilibria => equilibria(),
        Suite::Linear => linear(),
        Suite::Homoclinic => homoclinic(),
        Suite::Operator => operator(opts),
        Suite::Lyapunov => lyapunov(),
        Suite::GroundState => ground_states(),
        Suite::Convergence => convergence(),
        Suite::Gradient => gradient(opts),
        Suite::Geometry => geometry(opts),
        Suite::Energy => energy(),
    }
}

fn equilibria() -> Result<Vec<Check>> {
    let cat = EquilibriumCatalog::new();
    let expected = [0.0, -0.125, -0.125];
    let mut out = Vec::new();
    for ((name, p, h), e) in cat.entries().into_iter().zip(expected) {
        out.push(Check::at_most(format!("|X({name})|"), vector_field(&p).max_abs(), 1e-15));
        out.push(Check::at_most(format!("|H({name}) - ({e})|"), (h - e).abs(), 0.0));
    }
    Ok(out)
}

fn linear() -> Result<Vec<Check>> {
    let sr = eigenvalues_4x4(&center_linearization().entries)?;
    let w = 2f64.powf(0.25);
    let targets = [C64::new(w, 0.0), C64::new(-w, 0.0), C64::new(0.0, w), C64::new(0.0, -w)];
    let err = targets
        .iter()
        .map(|t| sr.eigenvalues.iter().map(|l| (l - t).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let t0 = lyapunov_period(&sr)?;
    Ok(vec![
        Check::at_most("eigenvalue error vs ±2^(1/4), ±i 2^(1/4)", err, 1e-10),
        Check::at_most("|T0 - 2^(3/4) pi|", (t0 - 2f64.powf(0.75) * PI).abs(), 1e-10),
        Check::info("T0", t0),
    ])
}

fn homoclinic() -> Result<Vec<Check>> {
    let d = derive_homoclinic_constants();
    let h = HomoclinicProfile::derived();
    let tr = integrate(&homoclinic_profile(0.0), 10.0, &StepperConfig::rk4(1e-3))?;
    let track = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(t, s)| s.dist_inf(&h.eval(*t)))
        .fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("|alpha^2 - 3/2|", (d.alpha * d.alpha - 1.5).abs(), 1e-12),
        Check::at_most("|beta^2 - 3/8|", (d.beta * d.beta - 0.375).abs(), 1e-12),
        Check::info("alpha", d.alpha),
        Check::info("beta", d.beta),
        Check::at_most("ODE residual on [-10, 10]", d.derived_residual, 1e-10),
        Check::at_most("max |H| on [-10, 10]", d.derived_energy, 1e-12),
        Check::at_most("rk4 tracking error on [0, 10], dt = 1e-3", track, 1e-6),
        Check::at_most("|delta0 quadrature - 9 pi/32|", (h.ground_energy() - DELTA0).abs(), 1e-10),
        Check::info("printed-constant ODE residual", d.printed_residual),
        Check::info("printed-constant max |H|", d.printed_energy),
    ])
}

fn random_coeffs(rng: &mut ChaCha8Rng, modes: usize) -> Vec<C64> {
    let mut c: Vec<C64> = (0..2 * modes + 1)
        .map(|i| {
            let k = (i as f64 - modes as f64).abs();
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (1.0 + k * k)
        })
        .collect();
    crate::spectral::enforce_real(&mut c);
    c
}

/// A real-valued band-limited field with decaying random coefficients.
pub fn random_field(rng: &mut ChaCha8Rng, eps: f64, modes: usize) -> PeriodicField {
    let mut f = PeriodicField::zeros(eps, modes);
    f.u = random_coeffs(rng, modes);
    f.z.plus = random_coeffs(rng, modes);
    f.z.minus = random_coeffs(rng, modes);
    f
}

fn l2_ab(z: &SpinorField) -> f64 {
    let (a, b) = z.to_ab_coeffs();
    a.iter().chain(&b).map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn operator(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (eps, modes) = (0.3, 12);
    let sp = SpectrumA::from_eps(eps, modes)?;
    let formula = sp
        .eigenpairs()
        .iter()
        .map(|p| {
            let exact = (1.0 + (p.k as f64 * PI * eps).powi(2)).sqrt();
            (p.lambda.abs() - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    let mut a2 = 0.0f64;
    let mut diag = 0.0f64;
    let mut idem = 0.0f64;
    let mut orth = 0.0f64;
    let mut complete = 0.0f64;
    for _ in 0..20 {
        let z = random_field(&mut rng, eps, modes).z;
        let w = random_field(&mut rng, eps, modes).z;
        // A²z against -ε²z'' + z, both in (a, b) coefficients.
        let twice = z.apply_a_differential().apply_a_differential();
        let (a, b) = z.to_ab_coeffs();
        let (ta, tb) = twice.to_ab_coeffs();
        for (i, k) in z.indices() {
            let m = 1.0 + (eps * PI * k as f64).powi(2);
            a2 = a2.max((ta[i] - a[i] * m).norm()).max((tb[i] - b[i] * m).norm());
        }
        let x = apply_a(&z, &sp)?;
        let y = z.apply_a_differential();
        let (xa, xb) = x.to_ab_coeffs();
        let (ya, yb) = y.to_ab_coeffs();
        for i in 0..xa.len() {
            diag = diag.max((xa[i] - ya[i]).norm()).max((xb[i] - yb[i]).norm());
        }
        let (p, m) = project(&z);
        let (pp, pm) = project(&p);
        idem = idem.max(l2_ab(&diff(&pp, &p))).max(l2_ab(&pm));
        let (_, mw) = project(&w);
        let (pa, pb) = p.to_ab_coeffs();
        let (ma, mb) = mw.to_ab_coeffs();
        let ip: C64 = pa.iter().zip(&ma).chain(pb.iter().zip(&mb)).map(|(x, y)| x.conj() * y).sum();
        orth = orth.max(ip.norm());
        let sum = sum_fields(&p, &m);
        complete = complete.max(l2_ab(&diff(&sum, &z)));
    }
    Ok(vec![
        Check::at_most("relative |lambda_k| - sqrt(1 + (k pi / T)^2)", formula, 4.0 * f64::EPSILON),
        Check::at_most("A^2 z - (-z'' + z)", a2, 1e-12),
        Check::at_most("eigenbasis A vs differential A", diag, 1e-12),
        Check::at_most("|min |lambda| - 1|", (sp.min_abs_eigenvalue() - 1.0).abs(), 0.0),
        Check::at_most("P+ idempotent", idem, 1e-12),
        Check::at_most("P+ orthogonal to P-", orth, 1e-12),
        Check::at_most("P+ + P- = I", complete, 1e-12),
    ])
}

fn diff(x: &SpinorField, y: &SpinorField) -> SpinorField {
    let mut out = x.clone();
    out.plus.iter_mut().zip(&y.plus).for_each(|(p, q)| *p -= q);
    out.minus.iter_mut().zip(&y.minus).for_each(|(p, q)| *p -= q);
    out
}

fn sum_fields(x: &SpinorField, y: &SpinorField) -> SpinorField {
    diff(x, &y.scaled(-1.0))
}

fn lyapunov() -> Result<Vec<Check>> {
    let t0 = 2f64.powf(0.75) * PI;
    let o = lyapunov_orbit(1e-3)?;
    let fam = lyapunov_family(&[1e-2, 1e-3, 1e-4])?;
    let d = distances_to_center(&fam);
    let spread = o
        .trajectory
        .states
        .iter()
        .map(|s| s.dist_inf(&o.initial_state))
        .fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("relative period error at amplitude 1e-3", (o.minimal_period() - t0).abs() / t0, 0.01),
        Check::info("period at amplitude 1e-3", o.minimal_period()),
        Check::at_most("closure residual", o.residual, 1e-9),
        Check::holds("orbit is non-constant", spread > 1e-6),
        Check::holds("sup-distance to P+ decreasing in amplitude", d.windows(2).all(|w| w[1] < w[0])),
        Check::info("sup-distance at 1e-2", d[0]),
        Check::info("sup-distance at 1e-3", d[1]),
        Check::info("sup-distance at 1e-4", d[2]),
    ])
}

fn ground_states() -> Result<Vec<Check>> {
    let opts = GroundStateOptions::default();
    let mut out = Vec::new();
    let mut gaps = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let modes = default_modes(eps);
        let g = ground_state(eps, modes, None, &opts)?;
        let ctx = Galerkin::new(eps, modes)?;
        let e = ctx.energy(&g.field)?;
        let gap = (g.delta - DELTA0).abs() / DELTA0;
        gaps.push(gap);
        out.push(Check::info(format!("eps {eps}: K"), modes as f64));
        out.push(Check::info(format!("eps {eps}: delta"), g.delta));
        out.push(Check::at_most(format!("eps {eps}: gradient norm"), g.diagnostics.gradient_norm, 1e-8));
        out.push(Check::at_most(format!("eps {eps}: Nehari residual"), g.diagnostics.nehari.relative(), 1e-6));
        out.push(Check::at_most(
            format!("eps {eps}: |E - coupling/2| / E"),
            (e.total - 0.5 * e.coupling).abs() / e.total.abs(),
            1e-6,
        ));
        out.push(Check::holds(format!("eps {eps}: delta < 1/(4 eps)"), g.delta < 0.25 / eps));
    }
    out.push(Check::holds("|delta - delta0| decreasing", gaps.windows(2).all(|w| w[1] < w[0])));
    out.push(Check::at_most("|delta_0.05 - delta0| / delta0", gaps[2], 0.05));
    Ok(out)
}

fn convergence() -> Result<Vec<Check>> {
    let eps = 0.05;
    let g = ground_state(eps, default_modes(eps), None, &GroundStateOptions::default())?;
    let o = orbit_from_field(&g.field, 4096)?;
    let d = distance_to_homoclinic(&o)?;
    Ok(vec![
        Check::at_most("sup-distance to homoclinic, eps 0.05", d.sup_dist, 5e-2),
        Check::info("optimal shift", d.shift),
    ])
}

fn gradient(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let eps = rng.gen_range(0.05..0.5);
        let modes = rng.gen_range(3..16);
        let ctx = Galerkin::new(eps, modes)?;
        let f = random_field(&mut rng, eps, modes);
        let h = random_field(&mut rng, eps, modes);
        let exact = ctx.pair(&ctx.gradient(&f)?, &h);
        let d = 1e-5;
        let fd = (ctx.energy(&f.axpy(d, &h))?.total - ctx.energy(&f.axpy(-d, &h))?.total) / (2.0 * d);
        worst = worst.max((fd - exact).abs() / exact.abs().max(1e-300));
    }
    Ok(vec![Check::at_most("worst relative error over 50 fields", worst, 1e-6)])
}

fn geometry(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut cliff = 0.0f64;
    for _ in 0..100 {
        let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let phi = Spinor2::new(
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        );
        let r2 = x.iter().map(|v| v * v).sum::<f64>();
        let lhs = clifford_mult(x, &clifford_mult(x, &phi));
        let rhs = phi.scale(C64::new(-r2, 0.0));
        cliff = cliff.max(lhs.sub(&rhs).norm_sqr().sqrt() / (r2 * phi.norm_sqr().sqrt()));
    }
    let euc = closed_form_profile(1.0, log_grid(0.1, 10.0, 4001))?;
    let fit = coupling_constant_fit(&euc)?;

    let t_grid: Vec<f64> = euc.grid.iter().rev().map(|r| -r.ln()).collect();
    let cyl = euclidean_to_cylinder(&euc, &t_grid)?;
    let basis: Vec<f64> = t_grid.iter().map(|t| t.cosh().powf(-0.5)).collect();
    let amp = basis.iter().zip(&cyl.u).map(|(x, y)| x * y).sum::<f64>()
        / basis.iter().map(|x| x * x).sum::<f64>();
    let shape = basis
        .iter()
        .zip(&cyl.u)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    let h = HomoclinicProfile::derived();
    let hom = RadialProfile::from_fn(ProfileChart::Cylinder, t_grid.clone(), |t| {
        let s = h.eval(t);
        (s.u, s.a, s.b)
    })?;
    let back = euclidean_to_cylinder(&cylinder_to_euclidean(&hom, &euc.grid)?, &t_grid)?;
    let round = (0..back.len())
        .map(|j| {
            (back.u[j] - hom.u[j])
                .abs()
                .max((back.f1[j] - hom.f1[j]).abs())
                .max((back.f2[j] - hom.f2[j]).abs())
        })
        .fold(0.0, f64::max);
    let hom_fit = coupling_constant_fit(&cylinder_to_euclidean(&hom, &euc.grid)?)?;

    Ok(vec![
        Check::at_most("Clifford relation x.x.phi + |x|^2 phi (relative)", cliff, 1e-14),
        Check::at_most("closed form: |kappa - 1|", (fit.kappa - 1.0).abs(), 1e-6),
        Check::info("closed form: fitted kappa", fit.kappa),
        Check::at_most("closed form: fit residual", fit.residual, 1e-6),
        Check::at_most("cylinder/euclidean round trip", round, 1e-12),
        Check::at_most("cylinder image of U1: |amplitude - 1|", (amp - 1.0).abs(), 1e-12),
        Check::at_most("cylinder image of U1: sup |u - cosh^(-1/2)|", shape, 1e-12),
        Check::info("derived homoclinic: fitted kappa", hom_fit.kappa),
        Check::info("derived homoclinic: fit residual", hom_fit.residual),
    ])
}

/// Drift of `H` along the midpoint flow from `x0` over `[0, t]`, or `None` on escape.
fn midpoint_drift(x0: &State4, t: f64, dt: f64) -> Option<f64> {
    integrate(x0, t, &StepperConfig::midpoint(dt))
        .and_then(|tr| energy_drift(&tr))
        .ok()
}

fn energy() -> Result<Vec<Check>> {
    let x0 = lyapunov_orbit(1e-3)?.initial_state;
    let h0 = hamiltonian(&x0);
    let mut out = vec![Check::info("H on the starting orbit", h0)];
    match midpoint_drift(&x0, 50.0, 1e-3) {
        Some(d) => {
            out.push(Check::at_most("|H drift| on [0, 50], dt = 1e-3", d, 1e-8));
            let d2 = midpoint_drift(&x0, 50.0, 5e-4).unwrap_or(f64::INFINITY);
            out.push(Check::holds("drift ratio under halving near 4 on [0, 50]", (d / d2 - 4.0).abs() < 0.5));
        }
        None => {
            out.push(Check::holds("orbit stays bounded on [0, 50], dt = 1e-3", false));
        }
    }
    // Before the unstable direction takes over, the order of the method is visible.
    let x1 = lyapunov_orbit(1e-2)?.initial_state;
    let d1 = midpoint_drift(&x1, 10.0, 1e-3).unwrap_or(f64::INFINITY);
    let d2 = midpoint_drift(&x1, 10.0, 5e-4).unwrap_or(f64::INFINITY);
    out.push(Check::at_most("|H drift| on [0, 10], amplitude 1e-2, dt = 1e-3", d1, 1e-8));
    out.push(Check::at_most("|drift ratio under halving - 4| on [0, 10]", (d1 / d2 - 4.0).abs(), 0.5));
    Ok(out)
}
