use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cde_core::dynamics::{EquilibriumCatalog, State4};
use cde_core::geometry::{
    cylinder_to_euclidean, euclidean_to_sphere, ProfileChart, RadialProfile, SphereConvention,
};
use cde_core::integrate::{energy_drift, integrate, Method, StepperConfig};
use cde_core::io::{
    fmt_f64, read_profile_csv, to_json, write_diagram_csv, write_field_csv, write_profile_csv,
    write_trajectory_csv, FieldRecord, OrbitDocument, SCHEMA,
};
use cde_core::orbits::{
    derive_homoclinic_constants, lyapunov_family, orbit_from_field, period_energy_diagram,
    HomoclinicProfile, OrbitRecord,
};
use cde_core::spectral::{
    default_modes, ground_state, nehari_residuals, Galerkin, GroundStateOptions,
};
use cde_core::verify::{run_suite, Status, Suite, VerifyOptions};
use cde_core::{hamiltonian, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "cde-lab", version, about = "Periodic orbits, ground states and conformal profiles of the reduced Dirac-Einstein system")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; JSON by default, plain text lines for `verify`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Gradient tolerance for the ground-state solver.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChartArg {
    Cylinder,
    Euclidean,
    Sphere,
}

impl From<ChartArg> for ProfileChart {
    fn from(c: ChartArg) -> Self {
        match c {
            ChartArg::Cylinder => ProfileChart::Cylinder,
            ChartArg::Euclidean => ProfileChart::Euclidean,
            ChartArg::Sphere => ProfileChart::Sphere,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List P0 and P± with their energies.
    Equilibria,
    /// Integrate from a state.
    Integrate {
        /// Initial state `u,v,a,b`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        state: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t_final: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// `implicit-midpoint` or `rk4`.
        #[arg(long, default_value = "implicit-midpoint")]
        method: String,
    },
    /// Periodic orbits of the Lyapunov family at P₊.
    Lyapunov {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        amplitudes: Vec<f64>,
    },
    /// Ground state of the rescaled functional.
    GroundState {
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
        /// Fourier modes; defaults to the K(ε) table.
        #[arg(long)]
        modes: Option<usize>,
    },
    /// The (ε, δ_ε) table.
    Continuation {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        eps_grid: Vec<f64>,
    },
    /// The homoclinic orbit and its derivation report.
    Homoclinic {
        /// Sample the profile with the printed amplitudes instead of the derived ones.
        #[arg(long)]
        paper_constants: bool,
    },
    /// Carry a radial profile between charts.
    Transform {
        #[arg(long, value_enum)]
        from: ChartArg,
        #[arg(long, value_enum)]
        to: ChartArg,
        /// CSV profile with header `t,u,a,b` or `r,u,f1,f2`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Run a named self-check suite, or `all`.
    Verify { suite: String },
}

fn parse_state(v: &[f64]) -> Result<State4> {
    match v {
        [u, p, a, b] => Ok(State4::new(*u, *p, *a, *b)),
        _ => Err(Error::InvalidInput("--state needs four values u,v,a,b".into())),
    }
}

fn json_doc<T: Serialize>(body: T) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Doc<T> {
        schema: &'static str,
        #[serde(flatten)]
        body: T,
    }
    Ok(to_json(&Doc { schema: SCHEMA, body })?.into_bytes())
}

fn csv_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn ground_opts(tol: Option<f64>) -> Result<GroundStateOptions> {
    let mut opts = GroundStateOptions::default();
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("--tol must be positive, got {t}")));
        }
        opts.grad_tol = t;
    }
    Ok(opts)
}

/// Output bytes and whether every check passed.
fn run(cli: &Cli) -> Result<(Vec<u8>, bool)> {
    let fmt = cli.format.unwrap_or(Format::Json);
    let out = match &cli.command {
        Command::Equilibria => {
            let cat = EquilibriumCatalog::new();
            match fmt {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Row {
                        name: &'static str,
                        state: State4,
                        #[serde(rename = "H")]
                        energy: f64,
                    }
                    let rows: Vec<Row> = cat
                        .entries()
                        .into_iter()
                        .map(|(name, state, energy)| Row { name, state, energy })
                        .collect();
                    json_doc(serde_json::json!({ "equilibria": rows }))?
                }
                Format::Csv => csv_rows(
                    &["name", "u", "v", "a", "b", "H"],
                    cat.entries().into_iter().map(|(n, p, h)| {
                        vec![n.to_string(), fmt_f64(p.u), fmt_f64(p.v), fmt_f64(p.a), fmt_f64(p.b), fmt_f64(h)]
                    }),
                )?,
            }
        }
        Command::Integrate { state, t_final, dt, method } => {
            let s0 = parse_state(state)?;
            let method: Method = method.parse()?;
            let cfg = StepperConfig { method, dt: *dt, ..StepperConfig::default() };
            let tr = integrate(&s0, *t_final, &cfg)?;
            match fmt {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_trajectory_csv(&mut buf, &tr)?;
                    buf
                }
                Format::Json => json_doc(serde_json::json!({
                    "method": method,
                    "dt": dt,
                    "initial_H": hamiltonian(&s0),
                    "energy_drift": energy_drift(&tr)?,
                    "trajectory": tr,
                }))?,
            }
        }
        Command::Lyapunov { amplitudes } => {
            let fam = lyapunov_family(amplitudes)?;
            match fmt {
                Format::Csv => csv_rows(
                    &["amplitude", "T", "period", "H", "residual", "distance_to_center"],
                    amplitudes.iter().zip(&fam).map(|(a, o)| {
                        vec![
                            fmt_f64(*a),
                            fmt_f64(o.half_period),
                            fmt_f64(o.minimal_period()),
                            fmt_f64(o.energy),
                            fmt_f64(o.residual),
                            fmt_f64(o.sup_distance(&cde_core::p_plus())),
                        ]
                    }),
                )?,
                Format::Json => {
                    let docs: Vec<OrbitDocument> = amplitudes
                        .iter()
                        .zip(&fam)
                        .map(|(a, o)| {
                            OrbitDocument::new(
                                OrbitRecord::from_orbit(o, 16, format!("lyapunov shooting, amplitude {a:?}")),
                                None,
                            )
                        })
                        .collect();
                    json_doc(serde_json::json!({ "orbits": docs }))?
                }
            }
        }
        Command::GroundState { epsilon, modes } => {
            let eps = *epsilon;
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidInput(format!("--epsilon must be positive, got {eps}")));
            }
            let modes = modes.unwrap_or_else(|| default_modes(eps));
            let g = ground_state(eps, modes, None, &ground_opts(cli.tol)?)?;
            match fmt {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_field_csv(&mut buf, &g.field, 8 * (modes + 1))?;
                    buf
                }
                Format::Json => {
                    let ctx = Galerkin::for_field(&g.field)?;
                    let field = FieldRecord::new(&g.field, ctx.energy(&g.field)?, nehari_residuals(&ctx, &g.field)?);
                    let orbit = orbit_from_field(&g.field, 8 * (modes + 1))?;
                    let rec = OrbitRecord::from_orbit(&orbit, 1, format!("ground state, epsilon {eps:?}, K {modes}"));
                    to_json(&OrbitDocument::new(rec, Some(field)))?.into_bytes()
                }
            }
        }
        Command::Continuation { eps_grid } => {
            let rows = period_energy_diagram(eps_grid, &ground_opts(cli.tol)?)?;
            match fmt {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_diagram_csv(&mut buf, &rows)?;
                    buf
                }
                Format::Json => json_doc(serde_json::json!({ "rows": rows }))?,
            }
        }
        Command::Homoclinic { paper_constants } => {
            let profile = if *paper_constants {
                HomoclinicProfile::printed()
            } else {
                HomoclinicProfile::derived()
            };
            let times: Vec<f64> = (0..=400).map(|k| -10.0 + 0.05 * k as f64).collect();
            let states: Vec<State4> = times.iter().map(|t| profile.eval(*t)).collect();
            match fmt {
                Format::Csv => csv_rows(
                    &["t", "u", "v", "a", "b", "H"],
                    times.iter().zip(&states).map(|(t, s)| {
                        [*t, s.u, s.v, s.a, s.b, hamiltonian(s)].iter().map(|x| fmt_f64(*x)).collect()
                    }),
                )?,
                Format::Json => {
                    let (residual, max_h) = profile.audit(-10.0, 10.0, 2000);
                    json_doc(serde_json::json!({
                        "profile": profile,
                        "ode_residual": residual,
                        "max_abs_H": max_h,
                        "derivation": derive_homoclinic_constants(),
                        "times": times,
                        "states": states,
                    }))?
                }
            }
        }
        Command::Transform { from, to, input } => {
            let p = read_profile_csv(File::open(input)?)?;
            if p.chart != ProfileChart::from(*from) {
                return Err(Error::InvalidInput(format!(
                    "input header is a {:?} profile, not {from:?}",
                    p.chart
                )));
            }
            let (out, convention) = transform(&p, *to)?;
            match fmt {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_profile_csv(&mut buf, &out)?;
                    buf
                }
                Format::Json => json_doc(serde_json::json!({ "profile": out, "convention": convention }))?,
            }
        }
        Command::Verify { suite } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse()?]
            };
            let opts = VerifyOptions { seed: cli.seed };
            let mut results = Vec::new();
            for s in suites {
                results.push((s, run_suite(s, &opts)?));
            }
            let ok = results.iter().all(|(_, cs)| cs.iter().all(|c| c.passed()));
            let body = match cli.format {
                None => results
                    .iter()
                    .flat_map(|(s, cs)| cs.iter().map(move |c| format!("[{}] {c}\n", s.name())))
                    .collect::<String>()
                    .into_bytes(),
                Some(Format::Json) => {
                    let suites: Vec<_> = results
                        .iter()
                        .map(|(s, cs)| serde_json::json!({ "suite": s.name(), "checks": cs }))
                        .collect();
                    json_doc(serde_json::json!({ "suites": suites, "passed": ok }))?
                }
                Some(Format::Csv) => csv_rows(
                    &["suite", "check", "status", "value", "tolerance"],
                    results.iter().flat_map(|(s, cs)| {
                        cs.iter().map(move |c| {
                            let status = match c.status {
                                Status::Pass => "pass",
                                Status::Fail => "fail",
                                Status::Info => "info",
                            };
                            vec![
                                s.name().to_string(),
                                c.name.clone(),
                                status.to_string(),
                                fmt_f64(c.value),
                                c.tolerance.map(fmt_f64).unwrap_or_default(),
                            ]
                        })
                    }),
                )?,
            };
            return Ok((body, ok));
        }
    };
    Ok((out, true))
}

fn transform(p: &RadialProfile, to: ChartArg) -> Result<(RadialProfile, Option<serde_json::Value>)> {
    let radii = |cyl: &RadialProfile| -> Vec<f64> { cyl.grid.iter().rev().map(|t| (-t).exp()).collect() };
    match (p.chart, to) {
        (ProfileChart::Cylinder, ChartArg::Euclidean) => Ok((cylinder_to_euclidean(p, &radii(p))?, None)),
        (ProfileChart::Cylinder, ChartArg::Sphere) => {
            let euc = cylinder_to_euclidean(p, &radii(p))?;
            let (s, doc) = euclidean_to_sphere(&euc, &SphereConvention { theta_grid: None })?;
            Ok((s, Some(serde_json::to_value(doc)?)))
        }
        (ProfileChart::Euclidean, ChartArg::Sphere) => {
            let (s, doc) = euclidean_to_sphere(p, &SphereConvention { theta_grid: None })?;
            Ok((s, Some(serde_json::to_value(doc)?)))
        }
        (from, to) => Err(Error::InvalidInput(format!("no transform from {from:?} to {to:?}"))),
    }
}

fn emit(cli: &Cli, bytes: &[u8]) -> io::Result<()> {
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(bytes)?;
            w.flush()
        }
        None => io::stdout().lock().write_all(bytes),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((bytes, ok)) => {
            if let Err(e) = emit(&cli, &bytes) {
                if e.kind() == io::ErrorKind::BrokenPipe {
                    return ExitCode::SUCCESS;
                }
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_invalid_input() { 2 } else { 1 })
        }
    }
}
