//! Stress as a co-motor valued 2-form, balance laws and virtual work.
//!
//! A stress state packs the force stress `σ_ij` and couple stress `χ_ij`
//! into `Σ = σ_ij v*_j A_i + χ_ij r*_j A_i`. Equilibrium is `D*Σ + F = 0`
//! in the body and `T = Σ` on the boundary.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::forms::{covariant_d_star, BodyGrid, FieldValue, FlatConnection, FormError, SmoothForm};
use crate::kinematics::{infinitesimal_strain, Configuration, DisplacementField, KinematicsError};
use crate::levi_civita;
use crate::lie_euclid::{pair, CoMotor, EuclideanMotion};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanicsError {
    #[error("field length {got} does not match the {expected} grid vertices")]
    Shape { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("deformation gradient is not invertible at vertex {vertex} (det {det:e})")]
    SingularJacobian { vertex: usize, det: f64 },
    #[error("invalid face selector {0:?}")]
    BadFace(String),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

fn check_len(grid: &BodyGrid, len: usize) -> Result<(), MechanicsError> {
    if len != grid.n_vertices() {
        return Err(MechanicsError::Shape { expected: grid.n_vertices(), got: len });
    }
    Ok(())
}

/// Force stress `sigma[(i, j)]` and couple stress `chi[(i, j)]`, with `i` the
/// area index and `j` the direction index.
#[derive(Debug, Clone, PartialEq)]
pub struct StressState {
    grid: BodyGrid,
    sigma: Vec<Matrix3<f64>>,
    chi: Vec<Matrix3<f64>>,
}

impl StressState {
    pub fn new(grid: BodyGrid, sigma: Vec<Matrix3<f64>>, chi: Vec<Matrix3<f64>>) -> Result<Self, MechanicsError> {
        check_len(&grid, sigma.len())?;
        check_len(&grid, chi.len())?;
        Ok(Self { grid, sigma, chi })
    }

    pub fn zeros(grid: BodyGrid) -> Self {
        let n = grid.n_vertices();
        Self { grid, sigma: vec![Matrix3::zeros(); n], chi: vec![Matrix3::zeros(); n] }
    }

    pub fn grid(&self) -> &BodyGrid {
        &self.grid
    }

    pub fn sigma(&self) -> &[Matrix3<f64>] {
        &self.sigma
    }

    pub fn chi(&self) -> &[Matrix3<f64>] {
        &self.chi
    }

    /// The value `Σ_i` on the area element `A_i` at vertex `v`.
    pub fn comotor(&self, v: usize, i: usize) -> CoMotor {
        CoMotor::new(self.sigma[v].row(i).transpose(), self.chi[v].row(i).transpose())
    }

    pub fn to_form(&self) -> SmoothForm<CoMotor> {
        SmoothForm::from_vertex_fn(self.grid, 2, |v, i| self.comotor(v, i))
    }

    pub fn from_form(form: &SmoothForm<CoMotor>) -> Result<Self, MechanicsError> {
        if form.degree() != 2 {
            return Err(FormError::BadDegree(form.degree()).into());
        }
        let n = form.grid().n_vertices();
        let rows = |v: usize, f: fn(&CoMotor) -> Vector3<f64>| {
            Matrix3::from_rows(&[
                f(&form.value(v, 0)).transpose(),
                f(&form.value(v, 1)).transpose(),
                f(&form.value(v, 2)).transpose(),
            ])
        };
        Ok(Self {
            grid: *form.grid(),
            sigma: (0..n).map(|v| rows(v, |m| m.f)).collect(),
            chi: (0..n).map(|v| rows(v, |m| m.m)).collect(),
        })
    }

    pub fn amax(&self) -> f64 {
        self.sigma.iter().chain(&self.chi).map(FieldValue::amax).fold(0.0, f64::max)
    }
}

/// Body force `f` and body torque `m` per unit volume.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadState {
    grid: BodyGrid,
    f: Vec<Vector3<f64>>,
    m: Vec<Vector3<f64>>,
}

impl LoadState {
    pub fn new(grid: BodyGrid, f: Vec<Vector3<f64>>, m: Vec<Vector3<f64>>) -> Result<Self, MechanicsError> {
        check_len(&grid, f.len())?;
        check_len(&grid, m.len())?;
        Ok(Self { grid, f, m })
    }

    pub fn zeros(grid: BodyGrid) -> Self {
        let n = grid.n_vertices();
        Self { grid, f: vec![Vector3::zeros(); n], m: vec![Vector3::zeros(); n] }
    }

    pub fn from_fn(grid: BodyGrid, load: impl Fn(&Vector3<f64>) -> CoMotor) -> Self {
        let (f, m) = grid.points().iter().map(|x| {
            let w = load(x);
            (w.f, w.m)
        }).unzip();
        Self { grid, f, m }
    }

    pub fn grid(&self) -> &BodyGrid {
        &self.grid
    }

    pub fn force(&self) -> &[Vector3<f64>] {
        &self.f
    }

    pub fn torque(&self) -> &[Vector3<f64>] {
        &self.m
    }

    pub fn comotor(&self, v: usize) -> CoMotor {
        CoMotor::new(self.f[v], self.m[v])
    }

    /// The load as a co-motor valued 3-form.
    pub fn to_form(&self) -> SmoothForm<CoMotor> {
        SmoothForm::from_vertex_fn(self.grid, 3, |v, _| self.comotor(v))
    }
}

/// Local balance residuals `∂_j σ_ji + f_i` and `∂_j χ_ji + ε_ijk σ_jk + m_i`.
pub fn balance_residual(
    s: &StressState,
    l: &LoadState,
) -> Result<(Vec<Vector3<f64>>, Vec<Vector3<f64>>), MechanicsError> {
    if s.grid != l.grid {
        return Err(MechanicsError::GridMismatch);
    }
    let g = &s.grid;
    let d_sigma: Vec<_> = (0..3).map(|a| g.partial(&s.sigma, a)).collect();
    let d_chi: Vec<_> = (0..3).map(|a| g.partial(&s.chi, a)).collect();
    let n = g.n_vertices();
    let force = (0..n)
        .map(|v| Vector3::from_fn(|i, _| (0..3).map(|j| d_sigma[j][v][(j, i)]).sum::<f64>() + l.f[v][i]))
        .collect();
    let moment = (0..n)
        .map(|v| {
            Vector3::from_fn(|i, _| {
                let mut r = l.m[v][i];
                for j in 0..3 {
                    r += d_chi[j][v][(j, i)];
                    for k in 0..3 {
                        r += levi_civita(i, j, k) * s.sigma[v][(j, k)];
                    }
                }
                r
            })
        })
        .collect();
    Ok((force, moment))
}

/// `D*Σ + F` as a co-motor valued 3-form.
pub fn balance_form(s: &StressState, l: &LoadState) -> Result<SmoothForm<CoMotor>, MechanicsError> {
    if s.grid != l.grid {
        return Err(MechanicsError::GridMismatch);
    }
    Ok(covariant_d_star(&s.to_form(), &FlatConnection::new(s.grid))?.add(&l.to_form()))
}

/// One of the six faces of the box, `±x_{axis+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Face {
    pub axis: usize,
    pub positive: bool,
}

impl Face {
    pub fn new(axis: usize, positive: bool) -> Result<Self, MechanicsError> {
        if axis > 2 {
            return Err(MechanicsError::BadFace(format!("axis {axis}")));
        }
        Ok(Self { axis, positive })
    }

    pub fn all() -> [Face; 6] {
        std::array::from_fn(|k| Face { axis: k / 2, positive: k % 2 == 1 })
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", if self.positive { '+' } else { '-' }, self.axis + 1)
    }
}

impl FromStr for Face {
    type Err = MechanicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MechanicsError::BadFace(s.to_string());
        let mut chars = s.chars();
        let positive = match chars.next() {
            Some('+') => true,
            Some('-') => false,
            _ => return Err(bad()),
        };
        match (chars.next(), chars.next(), chars.next()) {
            (Some('x'), Some(d @ '1'..='3'), None) => Face::new(d as usize - '1' as usize, positive),
            _ => Err(bad()),
        }
    }
}

/// Traction on one boundary face, signed by the outward orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTraction {
    face: Face,
    grid: BodyGrid,
    vertices: Vec<usize>,
    values: Vec<CoMotor>,
}

impl BoundaryTraction {
    pub fn face(&self) -> Face {
        self.face
    }

    /// Grid indices of the face vertices.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn values(&self) -> &[CoMotor] {
        &self.values
    }

    /// Trapezoid integral of `⟨ξ, T⟩` over the face.
    pub fn work(&self, xi: &DisplacementField) -> f64 {
        let g = &self.grid;
        let h = g.spacing();
        let dims = g.dims();
        self.vertices
            .iter()
            .zip(&self.values)
            .map(|(&v, t)| {
                let p = g.vertex_coords(v);
                let w: f64 = (0..3)
                    .filter(|&a| a != self.face.axis)
                    .map(|a| h[a] * if p[a] == 0 || p[a] == dims[a] { 0.5 } else { 1.0 })
                    .product();
                w * pair(t, &xi.motor(v))
            })
            .sum()
    }
}

/// Restriction of `Σ` to `face`: per-area force `σ_n·` and couple `χ_n·`,
/// negated on the faces whose outward normal points down the axis.
pub fn boundary_traction(s: &StressState, face: Face) -> BoundaryTraction {
    let g = s.grid;
    let [nx, ny, nz] = g.vertex_dims();
    let level = if face.positive { g.dims()[face.axis] } else { 0 };
    let sign = if face.positive { 1.0 } else { -1.0 };
    let mut vertices = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let p = [i, j, k];
                if p[face.axis] == level {
                    vertices.push(g.vertex_index(p));
                }
            }
        }
    }
    let values = vertices.iter().map(|&v| s.comotor(v, face.axis) * sign).collect();
    BoundaryTraction { face, grid: g, vertices, values }
}

/// `∫⟨ξ, F⟩ + ∮⟨ξ, T⟩ − ∫⟨Dξ, Σ⟩` with `T` the boundary trace of `Σ`.
pub fn virtual_work_residual(s: &StressState, l: &LoadState, xi: &DisplacementField) -> Result<f64, MechanicsError> {
    let tractions: Vec<_> = Face::all().iter().map(|&f| boundary_traction(s, f)).collect();
    virtual_work_residual_with(s, l, &tractions, xi)
}

/// Virtual-work residual with prescribed boundary tractions.
pub fn virtual_work_residual_with(
    s: &StressState,
    l: &LoadState,
    tractions: &[BoundaryTraction],
    xi: &DisplacementField,
) -> Result<f64, MechanicsError> {
    if s.grid != l.grid || s.grid != *xi.grid() || tractions.iter().any(|t| t.grid != s.grid) {
        return Err(MechanicsError::GridMismatch);
    }
    let g = s.grid;
    let e = infinitesimal_strain(xi);
    let external = g.integrate_volume(|v| pair(&l.comotor(v), &xi.motor(v)));
    let internal = g.integrate_volume(|v| {
        (0..3)
            .map(|i| s.sigma[v].row(i).dot(&e.eps()[v].row(i)) + s.chi[v].row(i).dot(&e.tau()[v].row(i)))
            .sum()
    });
    let surface: f64 = tractions.iter().map(|t| t.work(xi)).sum();
    Ok(external + surface - internal)
}

/// `Σ = D*Y` for a co-motor valued 1-form `Y`.
pub fn stress_potential(y: &SmoothForm<CoMotor>) -> Result<StressState, MechanicsError> {
    if y.degree() != 1 {
        return Err(FormError::BadDegree(y.degree()).into());
    }
    StressState::from_form(&covariant_d_star(y, &FlatConnection::new(*y.grid()))?)
}

/// `Y + D*α`, which leaves `D*Y` unchanged.
pub fn gauge_shift(y: &SmoothForm<CoMotor>, alpha: &SmoothForm<CoMotor>) -> Result<SmoothForm<CoMotor>, MechanicsError> {
    if alpha.degree() != 0 {
        return Err(FormError::BadDegree(alpha.degree()).into());
    }
    if y.grid() != alpha.grid() {
        return Err(MechanicsError::GridMismatch);
    }
    Ok(y.add(&covariant_d_star(alpha, &FlatConnection::new(*y.grid()))?))
}

/// Pullback of a spatial stress to the reference body: the area elements by
/// the cofactor of `∂y/∂x` and the values by the co-adjoint action of `Q`.
pub fn pullback_stress(s: &StressState, cfg: &Configuration) -> Result<SmoothForm<CoMotor>, MechanicsError> {
    if s.grid != *cfg.grid() {
        return Err(MechanicsError::GridMismatch);
    }
    let f = cfg.deformation_gradient();
    let mut cof = Vec::with_capacity(f.len());
    for (vertex, fv) in f.iter().enumerate() {
        let det = fv.determinant();
        if !(det > 0.0) {
            return Err(MechanicsError::SingularJacobian { vertex, det });
        }
        cof.push(fv.try_inverse().expect("nonzero determinant").transpose() * det);
    }
    let frames: Vec<_> =
        cfg.rotations().iter().map(|q| EuclideanMotion::from_frame(*q).expect("validated frame")).collect();
    Ok(SmoothForm::from_vertex_fn(s.grid, 2, |v, j| {
        let mut acc = CoMotor::zero();
        for i in 0..3 {
            acc += frames[v].co_adjoint(&s.comotor(v, i)) * cof[v][(i, j)];
        }
        acc
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::AnalyticForm;
    use crate::lie_euclid::{coad, exp_so3, Motor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn form_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let g = BodyGrid::unit_cube(3).unwrap();
        let n = g.n_vertices();
        let s = StressState::new(
            g,
            (0..n).map(|_| rand_mat(&mut rng)).collect(),
            (0..n).map(|_| rand_mat(&mut rng)).collect(),
        )
        .unwrap();
        assert_eq!(StressState::from_form(&s.to_form()).unwrap(), s);
        assert!(StressState::new(g, vec![], vec![]).is_err());
    }

    #[test]
    fn constant_stress_residuals() {
        let g = BodyGrid::unit_cube(4).unwrap();
        let n = g.n_vertices();
        let sigma = Matrix3::new(1.0, 2.0, 0.0, -1.0, 3.0, 0.5, 4.0, 0.0, 2.0);
        let s = StressState::new(g, vec![sigma; n], vec![Matrix3::new(1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0); n])
            .unwrap();
        let (rf, rm) = balance_residual(&s, &LoadState::zeros(g)).unwrap();
        let axial = Vector3::new(sigma[(1, 2)] - sigma[(2, 1)], sigma[(2, 0)] - sigma[(0, 2)], sigma[(0, 1)] - sigma[(1, 0)]);
        for v in 0..n {
            assert!(rf[v].amax() < 1e-12);
            assert!((rm[v] - axial).amax() < 1e-12);
        }
        let (rf, rm) = balance_residual(&StressState::zeros(g), &LoadState::zeros(g)).unwrap();
        assert!(rf.iter().chain(&rm).all(|r| r.amax() == 0.0));
    }

    #[test]
    fn component_balance_matches_covariant_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let g = BodyGrid::new([6, 7, 5], [0.2, 0.15, 0.25], [0.0; 3]).unwrap();
        let s = StressState::from_form(&AnalyticForm::random(&mut rng, 2, 2, 2.0).sample_comotor(g)).unwrap();
        let l = LoadState::from_fn(g, |x| CoMotor::new(x * 2.0, Vector3::new(x[1], 1.0, -x[0])));
        let (rf, rm) = balance_residual(&s, &l).unwrap();
        let form = balance_form(&s, &l).unwrap();
        for v in 0..g.n_vertices() {
            let w = form.value(v, 0);
            assert!((w.f - rf[v]).amax() < 1e-12);
            assert!((w.m - rm[v]).amax() < 1e-12);
        }
    }

    #[test]
    fn coad_relations_used_in_balance() {
        for i in 0..3 {
            for j in 0..3 {
                let a = coad(&Motor::translation_generator(i), &CoMotor::force_dual(j));
                let expect = CoMotor::new(Vector3::zeros(), Vector3::from_fn(|k, _| levi_civita(i, j, k)));
                assert_eq!(a, expect);
                assert_eq!(coad(&Motor::translation_generator(i), &CoMotor::moment_dual(j)), CoMotor::zero());
            }
        }
    }

    #[test]
    fn face_selectors() {
        assert_eq!("+x1".parse::<Face>().unwrap(), Face { axis: 0, positive: true });
        assert_eq!("-x3".parse::<Face>().unwrap(), Face { axis: 2, positive: false });
        for bad in ["x1", "+x4", "+y1", "+x12", ""] {
            assert!(bad.parse::<Face>().is_err());
        }
        for f in Face::all() {
            assert_eq!(f.to_string().parse::<Face>().unwrap(), f);
        }
        assert!(Face::new(3, true).is_err());
    }

    #[test]
    fn uniaxial_traction() {
        let g = BodyGrid::unit_cube(3).unwrap();
        let n = g.n_vertices();
        let s = StressState::new(g, vec![Matrix3::identity(); n], vec![Matrix3::zeros(); n]).unwrap();
        let t = boundary_traction(&s, "+x1".parse().unwrap());
        assert_eq!(t.vertices().len(), 16);
        assert!(t.values().iter().all(|w| *w == CoMotor::force_dual(0)));
        let t = boundary_traction(&s, "-x2".parse().unwrap());
        assert!(t.values().iter().all(|w| *w == CoMotor::force_dual(1) * -1.0));
        let z = boundary_traction(&StressState::zeros(g), "+x3".parse().unwrap());
        assert!(z.values().iter().all(|w| w.amax() == 0.0));
    }

    #[test]
    fn zero_virtual_field_has_zero_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let g = BodyGrid::unit_cube(4).unwrap();
        let s = StressState::from_form(&AnalyticForm::random(&mut rng, 2, 2, 2.0).sample_comotor(g)).unwrap();
        let l = LoadState::from_fn(g, |x| CoMotor::new(*x, x * 3.0));
        assert_eq!(virtual_work_residual(&s, &l, &DisplacementField::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn potentials_are_self_equilibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let g = BodyGrid::unit_cube(6).unwrap();
        let y = AnalyticForm::random(&mut rng, 1, 2, 2.0).sample_comotor(g);
        let s = stress_potential(&y).unwrap();
        assert!(balance_form(&s, &LoadState::zeros(g)).unwrap().amax() < 1e-10);
        let alpha = AnalyticForm::random(&mut rng, 0, 2, 2.0).sample_comotor(g);
        let shifted = stress_potential(&gauge_shift(&y, &alpha).unwrap()).unwrap();
        assert!(StressState::from_form(&shifted.to_form().sub(&s.to_form())).unwrap().amax() < 1e-10);
        assert_eq!(stress_potential(&SmoothForm::zeros(g, 1)).unwrap().amax(), 0.0);
    }

    #[test]
    fn pullback_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let g = BodyGrid::unit_cube(3).unwrap();
        let n = g.n_vertices();
        let s = StressState::new(
            g,
            (0..n).map(|_| rand_mat(&mut rng)).collect(),
            (0..n).map(|_| rand_mat(&mut rng)).collect(),
        )
        .unwrap();
        let same = pullback_stress(&s, &Configuration::identity(g)).unwrap();
        assert!(same.sub(&s.to_form()).amax() < 1e-12);

        let r = exp_so3(&Vector3::new(0.3, -0.8, 0.5));
        let rigid = Configuration::rigid(g, &EuclideanMotion::new(Vector3::new(1.0, 2.0, 3.0), r).unwrap()).unwrap();
        let back = StressState::from_form(&pullback_stress(&s, &rigid).unwrap()).unwrap();
        for v in 0..n {
            assert!((back.sigma()[v] - r.transpose() * s.sigma()[v] * r).amax() < 1e-12);
            assert!((back.chi()[v] - r.transpose() * s.chi()[v] * r).amax() < 1e-12);
        }

        let dilated = Configuration::from_fn(g, |x| (x * 2.0, Matrix3::identity())).unwrap();
        let back = pullback_stress(&s, &dilated).unwrap();
        assert!(back.sub(&s.to_form().map(|w| *w * 4.0)).amax() < 1e-12);

        let flipped = Configuration::from_fn(g, |x| (Vector3::new(-x[0], x[1], x[2]), Matrix3::identity())).unwrap();
        assert!(matches!(pullback_stress(&s, &flipped), Err(MechanicsError::SingularJacobian { .. })));
    }
}
