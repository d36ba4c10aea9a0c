//! The four pipelines.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use cosserat_core::compatibility::{
    burgers_circuit, impulse_defect, rectangle_loop, strain_cochain, strain_incompatibility,
};
use cosserat_core::constitutive::build_stiffness;
use cosserat_core::forms::{BodyGrid, Chain, Cochain, FlatConnection, SmoothForm};
use cosserat_core::io::{self as fio, IoError, SixColumns};
use cosserat_core::kinematics::{finite_strain, infinitesimal_strain, Configuration, DisplacementField, StrainState};
use cosserat_core::lie_euclid::{exp_so3, CoMotor, EuclideanMotion, Motor};
use cosserat_core::mechanics::{balance_residual, LoadState};
use cosserat_core::solver::{
    assemble, auto_method, manufactured_loads, mms_verify, reconstruct_stress, solve_linear, ElastostaticsProblem,
    MmsReport, SolverError,
};
use cosserat_core::verify::{run_criterion, CriterionResult, Level, VerifyOptions, CRITERIA};
use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::config::{ConfigurationSpec, CsvKind, DisplacementSpec, Loaded, LoadSpec, LoopSpec, StrainSource};
use crate::output::Output;
use crate::CliError;

pub struct Context {
    pub loaded: Loaded,
    pub level: Level,
    pub seed: u64,
    pub out: Output,
}

fn io_error(path: &Path, e: IoError) -> CliError {
    match e {
        IoError::Kinematics(k) => CliError::Validation(format!("{}: {k}", path.display())),
        other => CliError::Config(format!("{}: {other}", path.display())),
    }
}

fn open(ctx: &mut Context, rel: &Path) -> Result<(std::path::PathBuf, BufReader<File>), CliError> {
    let path = ctx.loaded.resolve(rel);
    let file = File::open(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    ctx.out.input_file(&path)?;
    Ok((path, BufReader::new(file)))
}

fn csv<V: SixColumns>(form: &SmoothForm<V>) -> Vec<u8> {
    let mut buf = Vec::new();
    fio::write_form_csv(&mut buf, form).expect("in-memory write");
    buf
}

fn vtk<V: SixColumns>(name: &str, form: &SmoothForm<V>) -> Vec<u8> {
    let mut buf = Vec::new();
    fio::write_vtk(&mut buf, name, form).expect("in-memory write");
    buf
}

fn cochain_csv<V: SixColumns>(c: &Cochain<V>) -> Vec<u8> {
    let mut buf = Vec::new();
    fio::write_cochain_csv(&mut buf, c).expect("in-memory write");
    buf
}

fn start(ctx: &mut Context) -> Result<BodyGrid, CliError> {
    let grid = ctx.loaded.grid()?;
    ctx.out.grid(ctx.loaded.config.grid.clone());
    Ok(grid)
}

fn configuration(ctx: &mut Context, grid: BodyGrid, spec: &ConfigurationSpec) -> Result<Configuration, CliError> {
    let invalid = |e: cosserat_core::kinematics::KinematicsError| CliError::Validation(e.to_string());
    match spec {
        ConfigurationSpec::Identity => Ok(Configuration::identity(grid)),
        ConfigurationSpec::Rigid { translation, rotation } => {
            let g = EuclideanMotion::new(Vector3::from(*translation), exp_so3(&Vector3::from(*rotation)))
                .map_err(|e| CliError::Validation(e.to_string()))?;
            Configuration::rigid(grid, &g).map_err(invalid)
        }
        ConfigurationSpec::Shear { amount } => {
            Configuration::from_fn(grid, |x| (x + Vector3::y() * (amount * x[0]), Matrix3::identity())).map_err(invalid)
        }
        ConfigurationSpec::Twist { rate } => Configuration::from_fn(grid, |x| {
            let q = exp_so3(&(Vector3::z() * (rate * x[2])));
            (q * x, q)
        })
        .map_err(invalid),
        ConfigurationSpec::Csv { path } => {
            let (path, r) = open(ctx, path)?;
            fio::read_configuration_csv(r, grid).map_err(|e| io_error(&path, e))
        }
    }
}

fn displacement(ctx: &mut Context, grid: BodyGrid, spec: &DisplacementSpec) -> Result<DisplacementField, CliError> {
    match (spec.analytic(), spec) {
        (Some(preset), _) => {
            let field = preset.field();
            Ok(DisplacementField::from_fn(grid, |x| Motor::from_array(field.eval(x))))
        }
        (None, DisplacementSpec::Csv { path }) => {
            let (path, r) = open(ctx, path)?;
            let form = fio::read_form_csv(r, grid, 0).map_err(|e| io_error(&path, e))?;
            DisplacementField::from_form(&form).map_err(|e| CliError::Validation(e.to_string()))
        }
        (None, _) => unreachable!("every non-CSV displacement preset is analytic"),
    }
}

#[derive(Serialize)]
struct StrainReport {
    kind: &'static str,
    max_translational: f64,
    max_rotational: f64,
}

pub fn cmd_strain(ctx: &mut Context) -> Result<(), CliError> {
    let grid = start(ctx)?;
    let cfg = ctx.loaded.config.clone();
    let (kind, e) = match (&cfg.configuration, &cfg.displacement) {
        (Some(spec), None) => ("finite", finite_strain(&configuration(ctx, grid, spec)?)),
        (None, Some(spec)) => ("infinitesimal", infinitesimal_strain(&displacement(ctx, grid, spec)?).to_form()),
        _ => return Err(CliError::Config("strain needs exactly one of configuration or displacement".into())),
    };
    let s = StrainState::from_form(&e).expect("strain is a 1-form");
    let amax = |m: &[Matrix3<f64>]| m.iter().map(|x| x.amax()).fold(0.0, f64::max);
    ctx.out.add("strain.csv", csv(&e));
    ctx.out.add("strain.vtk", vtk("strain", &e));
    ctx.out.add_json("strain_report.json", &StrainReport { kind, max_translational: amax(s.eps()), max_rotational: amax(s.tau()) });
    println!("{kind} strain: max |eps| {:e}, max |tau| {:e}", amax(s.eps()), amax(s.tau()));
    Ok(())
}

#[derive(Serialize)]
struct CircuitReport {
    burgers: [f64; 6],
    flux: Option<[f64; 6]>,
}

#[derive(Serialize)]
struct CompatReport {
    defect_max: Option<f64>,
    cochain_defect_max: f64,
    circuit: Option<CircuitReport>,
}

/// Oriented edge chain through consecutive grid neighbours.
fn path_chain(grid: &BodyGrid, vertices: &[[usize; 3]]) -> Result<Chain, CliError> {
    let mut edges = Vec::new();
    for w in vertices.windows(2) {
        let (p, q) = (w[0], w[1]);
        let diff: Vec<usize> = (0..3).filter(|&a| p[a] != q[a]).collect();
        let step = match diff.as_slice() {
            [a] if p[*a] + 1 == q[*a] => (*a, p, 1),
            [a] if q[*a] + 1 == p[*a] => (*a, q, -1),
            _ => return Err(CliError::Validation(format!("loop vertices {p:?} and {q:?} are not grid neighbours"))),
        };
        edges.push(step);
    }
    Chain::from_cells(grid, 1, edges).map_err(|e| CliError::Validation(format!("loop leaves the grid: {e}")))
}

/// Face cochain spread over the lowest corner of each face as a density.
fn cochain_density(c: &Cochain<Motor>) -> SmoothForm<Motor> {
    let g = *c.grid();
    let h = g.spacing();
    SmoothForm::from_vertex_fn(g, 2, |v, a| {
        let area = (0..3).filter(|&b| b != a).map(|b| h[b]).product::<f64>();
        g.cell_index(2, a, g.vertex_coords(v)).map_or(Motor::zero(), |i| c.value(i) * (1.0 / area))
    })
}

pub fn cmd_compat(ctx: &mut Context) -> Result<(), CliError> {
    let grid = start(ctx)?;
    let spec = ctx.loaded.config.compat.clone().ok_or_else(|| CliError::Config("config has no compat section".into()))?;
    let conn = FlatConnection::new(grid);
    let (smooth, e) = match &spec.source {
        StrainSource::Integrable { field } => {
            let f = field.field();
            let d = DisplacementField::from_fn(grid, |x| Motor::from_array(f.eval(x)));
            let u = Cochain::new(grid, 0, d.to_form().component(0).to_vec()).expect("one value per vertex");
            (Some(infinitesimal_strain(&d)), u.covariant_d(&conn).expect("0-cochain"))
        }
        StrainSource::Impulse { at } => {
            (None, impulse_defect(grid, at[0], at[1]).map_err(|e| CliError::Validation(e.to_string()))?)
        }
        StrainSource::Csv { path, kind } => {
            let (path, r) = open(ctx, path)?;
            match kind {
                CsvKind::Field => {
                    let form = fio::read_form_csv(r, grid, 1).map_err(|e| io_error(&path, e))?;
                    let s = StrainState::from_form(&form).expect("1-form");
                    let c = strain_cochain(&s);
                    (Some(s), c)
                }
                CsvKind::Cochain => (None, fio::read_cochain_csv(r, grid, 1).map_err(|e| io_error(&path, e))?),
            }
        }
    };
    let de = e.covariant_d(&conn).expect("1-cochain");
    let mut report = CompatReport { defect_max: None, cochain_defect_max: de.amax(), circuit: None };
    if let Some(s) = &smooth {
        let j = strain_incompatibility(s);
        report.defect_max = Some(j.amax());
        ctx.out.add("defect.csv", csv(j.form()));
        ctx.out.add("defect.vtk", vtk("defect", j.form()));
    } else {
        ctx.out.add("defect.vtk", vtk("defect", &cochain_density(&de)));
    }
    ctx.out.add("defect_cochain.csv", cochain_csv(&de));

    let circuit = match (&spec.circuit, &spec.source) {
        (Some(l), _) => Some(l.clone()),
        (None, StrainSource::Impulse { at }) => {
            Some(LoopSpec::Rectangle { i: [at[0], at[0] + 1], j: [at[1], at[1] + 1], k: 0 })
        }
        (None, _) => None,
    };
    if let Some(l) = circuit {
        report.circuit = Some(match l {
            LoopSpec::Rectangle { i, j, k } => {
                let (lp, cap) = rectangle_loop(&grid, (i[0], i[1]), (j[0], j[1]), k)
                    .map_err(|e| CliError::Validation(format!("loop leaves the grid: {e}")))?;
                let (b, f) = burgers_circuit(&e, &lp, &cap).map_err(|e| CliError::Validation(e.to_string()))?;
                CircuitReport { burgers: b.to_array(), flux: Some(f.to_array()) }
            }
            LoopSpec::Path(vertices) => {
                if vertices.len() < 2 || vertices.first() != vertices.last() {
                    return Err(CliError::Validation("loop not closed: first and last vertex differ".into()));
                }
                let lp = path_chain(&grid, &vertices)?;
                let b = e.transported().integrate(&lp).map_err(|e| CliError::Validation(e.to_string()))?;
                CircuitReport { burgers: b.to_array(), flux: None }
            }
        });
    }
    if let Some(c) = &report.circuit {
        println!("burgers circuit {:?}", c.burgers);
    }
    println!("max cochain defect {:e}", report.cochain_defect_max);
    ctx.out.add_json("compat_report.json", &report);
    Ok(())
}

#[derive(Serialize)]
struct MmsSummary {
    l2_error: f64,
    max_error: f64,
    refinement: MmsReport,
}

#[derive(Serialize)]
struct SolveReport {
    method: cosserat_core::solver::Method,
    unknowns: usize,
    pd_margin: f64,
    /// `‖AU − b‖ / ‖b‖` of the assembled system.
    linear_residual: f64,
    /// Largest interior balance residual of the stress recovered from `U` by
    /// differencing; a truncation-level consistency measure.
    stress_balance_residual: f64,
    mms: Option<MmsSummary>,
}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::NotPositiveDefinite(_) | SolverError::Shape(_) | SolverError::NoInterior => {
            CliError::Validation(e.to_string())
        }
        other => CliError::Solver(other.to_string()),
    }
}

pub fn cmd_solve(ctx: &mut Context) -> Result<(), CliError> {
    let grid = start(ctx)?;
    let (path, material) = ctx.loaded.material()?;
    ctx.out.input_file(&path)?;
    let c = build_stiffness(&material.constants, material.class)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let margin = c.pd_margin();
    let spec = ctx.loaded.config.loads.clone().unwrap_or(LoadSpec::Zero);
    let mut exact = None;
    let (loads, dirichlet) = match &spec {
        LoadSpec::Zero => (LoadState::zeros(grid), DisplacementField::zeros(grid)),
        LoadSpec::Uniform { force, torque } => {
            let w = CoMotor::new(Vector3::from(*force), Vector3::from(*torque));
            (LoadState::from_fn(grid, |_| w), DisplacementField::zeros(grid))
        }
        LoadSpec::Mms { field, .. } => {
            let u = field.field();
            let load = manufactured_loads(&c, &u);
            let d = DisplacementField::from_fn(grid, |x| Motor::from_array(u.eval(x)));
            exact = Some(d.clone());
            (LoadState::from_fn(grid, |x| CoMotor::from_array(load.eval(x))), d)
        }
        LoadSpec::Csv { path } => {
            let (path, r) = open(ctx, path)?;
            let form: SmoothForm<CoMotor> = fio::read_form_csv(r, grid, 0).map_err(|e| io_error(&path, e))?;
            let (f, m) = form.component(0).iter().map(|w| (w.f, w.m)).unzip();
            (LoadState::new(grid, f, m).expect("one value per vertex"), DisplacementField::zeros(grid))
        }
    };
    let problem = ElastostaticsProblem::new(c.clone(), loads.clone(), dirichlet).map_err(solver_error)?;
    let method = ctx.loaded.config.solve.as_ref().and_then(|s| s.method).unwrap_or_else(|| auto_method(&grid));
    let sys = assemble(&problem);
    let x = solve_linear(&sys.a, &sys.b, method).map_err(solver_error)?;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ax = sys.a.mul_vec(&x);
    let diff: Vec<f64> = ax.iter().zip(&sys.b).map(|(a, b)| a - b).collect();
    let linear_residual = norm(&diff) / norm(&sys.b).max(f64::MIN_POSITIVE);
    let d = sys.field(&x);
    let stress = reconstruct_stress(&c, &d);
    let (rf, rm) = balance_residual(&stress, &loads).expect("same grid");
    let stress_balance = (0..grid.n_vertices())
        .filter(|&v| !grid.is_boundary(grid.vertex_coords(v)))
        .map(|v| rf[v].amax().max(rm[v].amax()))
        .fold(0.0, f64::max);

    let mms = match (&spec, exact) {
        (LoadSpec::Mms { field, grids }, Some(x)) => {
            let grids = grids.clone().unwrap_or_else(|| match ctx.level {
                Level::Quick => vec![8, 16],
                Level::Full => vec![8, 16, 32],
            });
            let refinement = mms_verify(&c, *field, &grids).map_err(solver_error)?;
            let err = |v: usize| (d.motor(v) - x.motor(v)).amax();
            for r in &refinement.rows {
                println!("n={:<4} h={:.4e} L2={:.4e} max={:.4e}", r.n, r.h, r.l2_error, r.max_error);
            }
            println!("observed order {:.3}", refinement.order);
            Some(MmsSummary {
                l2_error: grid.integrate_volume(|v| err(v).powi(2)).sqrt(),
                max_error: (0..grid.n_vertices()).map(err).fold(0.0, f64::max),
                refinement,
            })
        }
        _ => None,
    };
    let report = SolveReport {
        method,
        unknowns: x.len(),
        pd_margin: margin,
        linear_residual,
        stress_balance_residual: stress_balance,
        mms,
    };
    let u = d.to_form();
    let s = stress.to_form();
    ctx.out.add("displacement.csv", csv(&u));
    ctx.out.add("displacement.vtk", vtk("displacement", &u));
    ctx.out.add("stress.csv", csv(&s));
    ctx.out.add("stress.vtk", vtk("stress", &s));
    ctx.out.add_json("solve_report.json", &report);
    println!("solved {} unknowns with {method:?}, relative residual {linear_residual:e}", report.unknowns);
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    level: Level,
    seed: u64,
    passed: bool,
    criteria: Vec<CriterionResult>,
}

pub fn cmd_verify(ctx: &mut Context) -> Result<bool, CliError> {
    let selected = ctx
        .loaded
        .config
        .verify
        .as_ref()
        .and_then(|v| v.criteria.clone())
        .unwrap_or_else(|| (1..=CRITERIA.len()).collect());
    if let Some(bad) = selected.iter().find(|&&i| i == 0 || i > CRITERIA.len()) {
        return Err(CliError::Config(format!("no criterion {bad}; expected 1..={}", CRITERIA.len())));
    }
    let opts = VerifyOptions::new(ctx.level, ctx.seed);
    let mut results = Vec::new();
    for &i in &selected {
        let r = run_criterion(i, &opts);
        println!("{r}");
        results.push(r);
    }
    let passed = results.iter().all(CriterionResult::passed);
    let n_ok = results.iter().filter(|r| r.passed()).count();
    println!("{n_ok}/{} criteria passed", results.len());
    ctx.out.add_json("verify_report.json", &VerifyReport { level: ctx.level, seed: ctx.seed, passed, criteria: results });
    Ok(passed)
}
