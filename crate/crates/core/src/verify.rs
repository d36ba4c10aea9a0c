//! Property and convergence suite behind `cosserat verify` and the
//! acceptance tests.
//!
//! Each criterion runs a batch of checks and passes only if all of them do.
//! Refinement studies report the least-squares slope over the grid sequence
//! of the chosen level.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticForm, Trig6};
use crate::compatibility::{burgers_circuit, impulse_defect, rectangle_loop, strain_incompatibility};
use crate::constitutive::{
    build_stiffness, circle_cycle, cycle_work, energy_gradient_check, material_symmetry_check, MaterialConstants,
    OddEntry, StiffnessMatrix, StiffnessOperator, SymmetryClass,
};
use crate::forms::{covariant_d, covariant_d_star, BodyGrid, Chain, Cochain, FlatConnection};
use crate::kinematics::{finite_strain, linearization_check, moving_frames_strain, Configuration, DisplacementField, StrainState};
use crate::lie_euclid::{ad, coad, exp_se3, exp_so3, log_se3, pair, CoMotor, Motor};
use crate::mechanics::{balance_form, balance_residual, virtual_work_residual, LoadState, StressState};
use crate::solver::{mms_verify, observed_order, reciprocity_defect, Method, Preset};

/// Tolerance on observed convergence orders.
pub const ORDER_TOLERANCE: f64 = 0.2;

pub type CoadFn = fn(&Motor, &CoMotor) -> CoMotor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    #[default]
    Quick,
    Full,
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(format!("unknown level {other:?}, expected quick or full")),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Quick => "quick",
            Level::Full => "full",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    /// Co-adjoint action checked by the duality test.
    pub coad: CoadFn,
}

impl VerifyOptions {
    pub fn new(level: Level, seed: u64) -> Self {
        Self { level, seed, coad }
    }

    fn grids(&self) -> &'static [usize] {
        match self.level {
            Level::Quick => &[8, 16],
            Level::Full => &[8, 16, 32],
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self::new(Level::Quick, 0)
    }
}

/// One labelled measurement inside a criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub index: usize,
    pub name: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let detail: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{}{}={:.3e}", if c.passed { "" } else { "!" }, c.label, c.value))
            .collect();
        write!(f, "[{status}] {}. {} ({:.1}s) {}", self.index, self.name, self.seconds, detail.join(" "))
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn below(&mut self, label: &str, value: f64, bound: f64) {
        self.0.push(Check { label: label.into(), value, passed: value < bound });
    }

    fn above(&mut self, label: &str, value: f64, bound: f64) {
        self.0.push(Check { label: label.into(), value, passed: value > bound });
    }

    fn exact(&mut self, label: &str, value: f64) {
        self.0.push(Check { label: label.into(), value, passed: value == 0.0 });
    }

    fn order(&mut self, label: &str, value: f64, expected: f64, tol: f64) {
        self.0.push(Check { label: label.into(), value, passed: (value - expected).abs() <= tol });
    }
}

pub const CRITERIA: [&str; 9] = [
    "algebraic kernel",
    "exactness",
    "rigid-motion nullity and invariance",
    "linearization",
    "moving-frames oracle",
    "compatibility",
    "balance",
    "constitutive",
    "solver",
];

pub fn run_criterion(index: usize, opts: &VerifyOptions) -> CriterionResult {
    let start = Instant::now();
    let mut checks = Checks(Vec::new());
    match index {
        1 => algebraic_kernel(opts, &mut checks, start),
        2 => exactness(opts, &mut checks),
        3 => rigid_nullity(opts, &mut checks),
        4 => linearization(opts, &mut checks),
        5 => moving_frames(opts, &mut checks),
        6 => compatibility(opts, &mut checks),
        7 => balance(opts, &mut checks),
        8 => constitutive(opts, &mut checks),
        9 => solver(opts, &mut checks),
        _ => checks.0.push(Check { label: "unknown criterion".into(), value: index as f64, passed: false }),
    }
    let name = CRITERIA.get(index.wrapping_sub(1)).copied().unwrap_or("unknown").to_string();
    CriterionResult { index, name, checks: checks.0, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_suite(opts: &VerifyOptions) -> Vec<CriterionResult> {
    (1..=CRITERIA.len()).map(|i| run_criterion(i, opts)).collect()
}

fn rand_vec(rng: &mut ChaCha8Rng, r: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.gen_range(-r..r))
}

fn rand_motor(rng: &mut ChaCha8Rng) -> Motor {
    Motor::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
}

fn rand_comotor(rng: &mut ChaCha8Rng) -> CoMotor {
    CoMotor::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
}

/// Rotation vector uniform in the ball of radius `r`.
fn rand_rotation_vector(rng: &mut ChaCha8Rng, r: f64) -> Vector3<f64> {
    loop {
        let v = rand_vec(rng, r);
        if v.norm() < r {
            return v;
        }
    }
}

fn unit_cube(n: usize) -> BodyGrid {
    BodyGrid::unit_cube(n).expect("valid grid")
}

fn slope(grids: &[usize], values: &[f64]) -> f64 {
    let h: Vec<f64> = grids.iter().map(|&n| 1.0 / n as f64).collect();
    observed_order(&h, values)
}

/// Smooth configuration `y = x + a·T(x)`, `Q = exp(b·R(x))`.
pub fn smooth_configuration(grid: BodyGrid, field: &Trig6, a: f64, b: f64) -> Configuration {
    Configuration::from_fn(grid, |x| {
        let v = field.eval(x);
        let y = x + Vector3::new(v[0], v[1], v[2]) * a;
        (y, exp_so3(&(Vector3::new(v[3], v[4], v[5]) * b)))
    })
    .expect("rotations from the exponential are proper")
}

fn algebraic_kernel(opts: &VerifyOptions, checks: &mut Checks, start: Instant) {
    let n = match opts.level {
        Level::Quick => 2_000,
        Level::Full => 10_000,
    };
    let mut rng = opts.rng(1);
    let mut round_trip: f64 = 0.0;
    let mut duality: f64 = 0.0;
    for _ in 0..n {
        let w = Motor::new(rand_vec(&mut rng, 2.0), rand_rotation_vector(&mut rng, 3.0));
        let back = log_se3(&exp_se3(&w)).map(|b| (b - w).amax()).unwrap_or(f64::INFINITY);
        round_trip = round_trip.max(back);
        let (x, y, mu) = (rand_motor(&mut rng), rand_motor(&mut rng), rand_comotor(&mut rng));
        duality = duality.max((pair(&(opts.coad)(&x, &mu), &y) + pair(&mu, &ad(&x, &y))).abs());
    }
    checks.below("exp_log_round_trip", round_trip, 1e-10);
    checks.below("coadjoint_duality", duality, 1e-12);
    checks.below("seconds", start.elapsed().as_secs_f64(), 5.0);
}

fn random_chain(rng: &mut ChaCha8Rng, grid: &BodyGrid, degree: usize, cells: usize) -> Chain {
    let total = grid.cell_count(degree);
    let picks: Vec<(usize, i64)> = (0..cells).map(|_| (rng.gen_range(0..total), rng.gen_range(-2..=2))).collect();
    Chain::from_indices(grid, degree, &picks).expect("indices in range")
}

fn integer_cochain(rng: &mut ChaCha8Rng, grid: BodyGrid, degree: usize) -> Cochain<f64> {
    let data = (0..grid.cell_count(degree)).map(|_| f64::from(rng.gen_range(-9i32..=9))).collect();
    Cochain::new(grid, degree, data).expect("sized data")
}

fn exactness(opts: &VerifyOptions, checks: &mut Checks) {
    let mut rng = opts.rng(2);
    let mut dd: f64 = 0.0;
    let mut stokes: f64 = 0.0;
    for n in [2, 4, 8, 16] {
        let g = unit_cube(n);
        for k in 0..2 {
            let a = integer_cochain(&mut rng, g, k);
            dd = dd.max(a.coboundary().and_then(|d| d.coboundary()).map(|x| x.amax()).unwrap_or(f64::INFINITY));
        }
        for k in 1..=3 {
            let a = integer_cochain(&mut rng, g, k - 1);
            let da = a.coboundary().expect("degree below 3");
            for _ in 0..8 {
                let c = random_chain(&mut rng, &g, k, 40);
                let lhs = a.integrate(&c.boundary(&g)).expect("matching degree");
                let rhs = da.integrate(&c).expect("matching degree");
                stokes = stokes.max((lhs - rhs).abs());
            }
        }
    }
    checks.exact("coboundary_squared", dd);
    checks.exact("discrete_stokes", stokes);

    let grids = opts.grids();
    let alpha = AnalyticForm::random(&mut rng, 0, 2, 2.0);
    let y = AnalyticForm::random(&mut rng, 1, 2, 2.0);
    let (mut ddr, mut dsr) = (Vec::new(), Vec::new());
    for &n in grids {
        let g = unit_cube(n);
        let conn = FlatConnection::new(g);
        let inner = alpha.exact_covariant_d(g).expect("0-form");
        ddr.push(covariant_d(&inner, &conn).expect("1-form").amax());
        let inner = y.exact_covariant_d_star(g).expect("1-form");
        dsr.push(covariant_d_star(&inner, &conn).expect("2-form").amax());
    }
    checks.order("DD_order", slope(grids, &ddr), 2.0, ORDER_TOLERANCE);
    checks.order("DstarDstar_order", slope(grids, &dsr), 2.0, ORDER_TOLERANCE);
}

fn rigid_nullity(opts: &VerifyOptions, checks: &mut Checks) {
    let mut rng = opts.rng(3);
    let g = BodyGrid::new([6, 5, 7], [0.2, 0.3, 0.15], [-0.5, 0.2, 0.1]).expect("valid grid");
    let mut rigid: f64 = 0.0;
    for _ in 0..100 {
        let m = exp_se3(&Motor::new(rand_vec(&mut rng, 3.0), rand_rotation_vector(&mut rng, 3.0)));
        let cfg = Configuration::rigid(g, &m).expect("proper frame");
        rigid = rigid.max(finite_strain(&cfg).amax());
    }
    checks.below("rigid_strain", rigid, 1e-10);

    let field = Trig6::random(&mut rng, 2, 2.0);
    let cfg = smooth_configuration(g, &field, 0.2, 0.5);
    let e = finite_strain(&cfg);
    let trials = match opts.level {
        Level::Quick => 20,
        Level::Full => 100,
    };
    let mut inv: f64 = 0.0;
    for _ in 0..trials {
        let m = exp_se3(&Motor::new(rand_vec(&mut rng, 3.0), rand_rotation_vector(&mut rng, 3.0)));
        inv = inv.max(finite_strain(&cfg.left_multiply(&m)).sub(&e).amax());
    }
    checks.below("left_invariance", inv, 1e-10);
}

fn linearization(opts: &VerifyOptions, checks: &mut Checks) {
    let mut rng = opts.rng(4);
    let g = unit_cube(8);
    let field = Trig6::random(&mut rng, 2, 2.0);
    let xi = DisplacementField::from_fn(g, |x| Motor::from_array(field.eval(x)));
    let ts = [1e-2, 1e-3, 1e-4];
    let defects: Vec<f64> = ts.iter().map(|&t| linearization_check(&xi, t).unwrap_or(f64::NAN)).collect();
    checks.order("slope_in_t", observed_order(&ts, &defects), 1.0, 0.1);
}

fn moving_frames(opts: &VerifyOptions, checks: &mut Checks) {
    let mut rng = opts.rng(5);
    let field = Trig6::random(&mut rng, 2, 2.0);
    let grids = opts.grids();
    let mut diffs = Vec::new();
    for &n in grids {
        let cfg = smooth_configuration(unit_cube(n), &field, 0.2, 0.5);
        let d = moving_frames_strain(&cfg).map(|m| m.sub(&finite_strain(&cfg)).amax()).unwrap_or(f64::NAN);
        diffs.push(d);
    }
    checks.order("oracle_order", slope(grids, &diffs), 2.0, ORDER_TOLERANCE);
}

fn compatibility(opts: &VerifyOptions, checks: &mut Checks) {
    let mut rng = opts.rng(6);
    let grids = opts.grids();
    let u = AnalyticForm::random(&mut rng, 0, 2, 2.0);
    let mut res = Vec::new();
    for &n in grids {
        let e = u.exact_covariant_d(unit_cube(n)).expect("0-form");
        let strain = StrainState::from_form(&e).expect("1-form");
        res.push(strain_incompatibility(&strain).amax());
    }
    checks.order("De_order", slope(grids, &res), 2.0, ORDER_TOLERANCE);

    let g = BodyGrid::new([6, 6, 4], [1.0; 3], [0.0; 3]).expect("valid grid");
    let conn = FlatConnection::new(g);
    let background = Cochain::new(
        g,
        0,
        (0..g.cell_count(0))
            .map(|_| Motor::from_array(std::array::from_fn(|_| f64::from(rng.gen_range(-5i32..=5)))))
            .collect(),
    )
    .expect("sized data");
    let e = impulse_defect(g, 2, 3)
        .expect("interior face")
        .add(&background.covariant_d(&conn).expect("0-cochain"));
    let (l1, c1) = rectangle_loop(&g, (2, 3), (3, 4), 1).expect("inside grid");
    let (l2, c2) = rectangle_loop(&g, (0, 5), (1, 6), 1).expect("inside grid");
    match (burgers_circuit(&e, &l1, &c1), burgers_circuit(&e, &l2, &c2)) {
        (Ok((b1, f1)), Ok((b2, f2))) => {
            checks.exact("circuit_minus_flux", (b1 - f1).amax().max((b2 - f2).amax()));
            checks.exact("circuit_minus_unit_burgers", (b1 - Motor::basis(0)).amax());
            checks.exact("homotopic_loops", (b1 - b2).amax());
        }
        _ => checks.0.push(Check { label: "burgers_circuit".into(), value: f64::NAN, passed: false }),
    }
}

fn balance(opts: &VerifyOptions, checks: &mut Checks) {
    let mut rng = opts.rng(7);
    let grids = opts.grids();
    let sigma = AnalyticForm::random(&mut rng, 2, 2, 2.0);
    let xis: Vec<Trig6> = (0..20).map(|_| Trig6::random(&mut rng, 2, 2.0)).collect();
    let (mut comp, mut cov, mut agree) = (Vec::new(), Vec::new(), 0.0f64);
    let mut work = vec![Vec::new(); xis.len()];
    for &n in grids {
        let g = unit_cube(n);
        let exact = sigma.exact_covariant_d_star(g).expect("2-form");
        let (f, m) = exact.component(0).iter().map(|w| (-w.f, -w.m)).unzip();
        let loads = LoadState::new(g, f, m).expect("sized fields");
        let s = StressState::from_form(&sigma.sample_comotor(g)).expect("2-form");
        let (rf, rm) = balance_residual(&s, &loads).expect("same grid");
        let form = balance_form(&s, &loads).expect("same grid");
        let mut worst: f64 = 0.0;
        for v in 0..g.n_vertices() {
            let w = form.value(v, 0);
            agree = agree.max((w.f - rf[v]).amax()).max((w.m - rm[v]).amax());
            worst = worst.max(rf[v].amax()).max(rm[v].amax());
        }
        comp.push(worst);
        cov.push(form.amax());
        for (k, xi) in xis.iter().enumerate() {
            let d = DisplacementField::from_fn(g, |x| Motor::from_array(xi.eval(x)));
            work[k].push(virtual_work_residual(&s, &loads, &d).map(f64::abs).unwrap_or(f64::NAN));
        }
    }
    checks.below("component_vs_covariant", agree, 1e-10);
    checks.order("component_order", slope(grids, &comp), 2.0, ORDER_TOLERANCE);
    checks.order("covariant_order", slope(grids, &cov), 2.0, ORDER_TOLERANCE);
    let rms: Vec<f64> = (0..grids.len())
        .map(|i| (work.iter().map(|w| w[i] * w[i]).sum::<f64>() / work.len() as f64).sqrt())
        .collect();
    checks.order("virtual_work_rms_order", slope(grids, &rms), 2.0, ORDER_TOLERANCE);
}

/// Isotropic reference material used by the suite and the CLI presets.
pub fn reference_constants() -> MaterialConstants {
    MaterialConstants::isotropic(1.0, 2.0, 0.5, 0.5, 1.5, 0.3)
}

pub fn reference_isotropic() -> StiffnessOperator {
    build_stiffness(&reference_constants(), SymmetryClass::Isotropic).expect("consistent constants")
}

pub fn reference_hemitropic() -> StiffnessOperator {
    build_stiffness(&reference_constants().with_coupling(0.1, 0.3, 0.1), SymmetryClass::Hemitropic)
        .expect("consistent constants")
}

fn constitutive(opts: &VerifyOptions, checks: &mut Checks) {
    let mut rng = opts.rng(8);
    let a = StiffnessMatrix::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let sym = StiffnessOperator::from_matrix(a + a.transpose(), SymmetryClass::Anisotropic).expect("finite");
    let g = unit_cube(2);
    let n = g.n_vertices();
    let mut rand_mats = || -> Vec<Matrix3<f64>> { (0..n).map(|_| Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0))).collect() };
    let strain = StrainState::new(g, rand_mats(), rand_mats()).expect("sized fields");
    checks.below("gradient_check", energy_gradient_check(&sym, &strain), 1e-6);

    let mut odd_k = reference_constants();
    odd_k.odd.push(OddEntry { a: 1, b: 12, k: 0.6 });
    let odd = build_stiffness(&odd_k, SymmetryClass::Odd).expect("consistent constants");
    let (sa, sb, r) = (1, 12, 0.7);
    let expected = std::f64::consts::PI * r * r * (odd.matrix()[(sb, sa)] - odd.matrix()[(sa, sb)]);
    let w = cycle_work(&odd, &circle_cycle(sa, sb, r, 1000)).unwrap_or(f64::NAN);
    checks.below("odd_cycle_work_rel", ((w - expected) / expected).abs(), 1e-4);

    let iso = reference_isotropic();
    let hemi = reference_hemitropic();
    let mut iso_defect: f64 = 0.0;
    let mut hemi_proper: f64 = 0.0;
    for k in 0..50 {
        let q = exp_so3(&rand_rotation_vector(&mut rng, 3.0));
        let r = if k % 2 == 0 { q } else { -q };
        iso_defect = iso_defect.max(material_symmetry_check(&iso, &r).unwrap_or(f64::INFINITY));
        hemi_proper = hemi_proper.max(material_symmetry_check(&hemi, &q).unwrap_or(f64::INFINITY));
    }
    checks.below("isotropic_O3_defect", iso_defect, 1e-10);
    checks.below("hemitropic_SO3_defect", hemi_proper, 1e-10);
    let chiral = material_symmetry_check(&hemi, &(-Matrix3::identity())).unwrap_or(0.0);
    checks.above("hemitropic_inversion_defect", chiral, 1e-8);
}

fn solver(opts: &VerifyOptions, checks: &mut Checks) {
    let grids = opts.grids();
    for (label, c, preset) in
        [("mms_isotropic_order", reference_isotropic(), Preset::Sine), ("mms_hemitropic_order", reference_hemitropic(), Preset::Full)]
    {
        let order = mms_verify(&c, preset, grids).map(|r| r.order).unwrap_or(f64::NAN);
        checks.order(label, order, 2.0, ORDER_TOLERANCE);
    }
    let mut rng = opts.rng(9);
    let g = unit_cube(6);
    let (t1, t2) = (Trig6::random(&mut rng, 2, 3.0), Trig6::random(&mut rng, 2, 3.0));
    let f1 = LoadState::from_fn(g, |x| CoMotor::from_array(t1.eval(x)));
    let f2 = LoadState::from_fn(g, |x| CoMotor::from_array(t2.eval(x)));
    let defect = reciprocity_defect(&reference_hemitropic(), &f1, &f2, Method::Direct).unwrap_or(f64::NAN);
    checks.below("reciprocity", defect, 1e-8);
}
