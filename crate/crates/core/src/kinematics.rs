//! Configurations, finite and infinitesimal strain.
//!
//! All fields are collocated at grid vertices and every strain is reported in
//! the global `S = I` trivialisation: component `i` of a strain 1-form is the
//! motor `(ε_i·, τ_i·)` it assigns to `∂_i`.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::forms::{BodyGrid, FieldValue, FormError, SmoothForm};
use crate::levi_civita;
use crate::lie_euclid::{
    exp_se3, hat, log_se3, orthogonality_defect, vee_antisym, EuclideanMotion, LieError, Motor, ORTHOGONALITY_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("frame at vertex {vertex} is not orthogonal (defect {defect:e})")]
    NonOrthogonal { vertex: usize, defect: f64 },
    #[error("frame at vertex {vertex} is not a proper rotation")]
    Improper { vertex: usize },
    #[error("field length {got} does not match the {expected} grid vertices")]
    Shape { expected: usize, got: usize },
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

fn check_len(grid: &BodyGrid, len: usize) -> Result<(), KinematicsError> {
    if len != grid.n_vertices() {
        return Err(KinematicsError::Shape { expected: grid.n_vertices(), got: len });
    }
    Ok(())
}

fn check_frames(frames: &[Matrix3<f64>], proper: bool) -> Result<(), KinematicsError> {
    for (vertex, s) in frames.iter().enumerate() {
        let defect = orthogonality_defect(s);
        if !defect.is_finite() || defect > ORTHOGONALITY_TOL {
            return Err(KinematicsError::NonOrthogonal { vertex, defect });
        }
        if proper && s.determinant() < 0.0 {
            return Err(KinematicsError::Improper { vertex });
        }
    }
    Ok(())
}

/// Placement `y` and microrotation `Q` of every material point.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    grid: BodyGrid,
    y: Vec<Vector3<f64>>,
    q: Vec<Matrix3<f64>>,
}

impl Configuration {
    pub fn new(grid: BodyGrid, y: Vec<Vector3<f64>>, q: Vec<Matrix3<f64>>) -> Result<Self, KinematicsError> {
        check_len(&grid, y.len())?;
        check_len(&grid, q.len())?;
        check_frames(&q, true)?;
        Ok(Self { grid, y, q })
    }

    pub fn from_fn(
        grid: BodyGrid,
        f: impl Fn(&Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) + Sync,
    ) -> Result<Self, KinematicsError> {
        let (y, q) = grid.points().par_iter().map(&f).unzip();
        Self::new(grid, y, q)
    }

    pub fn identity(grid: BodyGrid) -> Self {
        Self { grid, y: grid.points(), q: vec![Matrix3::identity(); grid.n_vertices()] }
    }

    /// The rigid placement `x ↦ g·x` with every frame equal to that of `g`.
    pub fn rigid(grid: BodyGrid, g: &EuclideanMotion) -> Result<Self, KinematicsError> {
        Self::from_fn(grid, |x| (g.act(x), *g.frame()))
    }

    pub fn grid(&self) -> &BodyGrid {
        &self.grid
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.y
    }

    pub fn rotations(&self) -> &[Matrix3<f64>] {
        &self.q
    }

    pub fn motion(&self, v: usize) -> EuclideanMotion {
        EuclideanMotion::new(self.y[v], self.q[v]).expect("validated frame")
    }

    /// `g·ψ` for a constant motion `g`.
    pub fn left_multiply(&self, g: &EuclideanMotion) -> Self {
        let s = g.frame();
        Self {
            grid: self.grid,
            y: self.y.iter().map(|y| g.act(y)).collect(),
            q: self.q.iter().map(|q| s * q).collect(),
        }
    }

    /// Deformation gradient `∂y_i/∂x_j` by finite differences.
    pub fn deformation_gradient(&self) -> Vec<Matrix3<f64>> {
        let dy: Vec<_> = (0..3).map(|a| self.grid.partial(&self.y, a)).collect();
        (0..self.grid.n_vertices())
            .map(|v| Matrix3::from_columns(&[dy[0][v], dy[1][v], dy[2][v]]))
            .collect()
    }
}

/// Infinitesimal displacement `u` and microrotation `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    grid: BodyGrid,
    u: Vec<Vector3<f64>>,
    phi: Vec<Vector3<f64>>,
}

impl DisplacementField {
    pub fn new(grid: BodyGrid, u: Vec<Vector3<f64>>, phi: Vec<Vector3<f64>>) -> Result<Self, KinematicsError> {
        check_len(&grid, u.len())?;
        check_len(&grid, phi.len())?;
        if u.iter().chain(&phi).any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(KinematicsError::Parameter("non-finite displacement".into()));
        }
        Ok(Self { grid, u, phi })
    }

    pub fn from_fn(grid: BodyGrid, f: impl Fn(&Vector3<f64>) -> Motor + Sync) -> Self {
        let (u, phi) = grid.points().par_iter().map(|x| {
            let m = f(x);
            (m.u, m.phi)
        }).unzip();
        Self { grid, u, phi }
    }

    pub fn zeros(grid: BodyGrid) -> Self {
        Self::from_fn(grid, |_| Motor::zero())
    }

    /// Infinitesimal rigid motion `u = a + b × x`, `phi = b`.
    pub fn rigid(grid: BodyGrid, a: Vector3<f64>, b: Vector3<f64>) -> Self {
        Self::from_fn(grid, |x| Motor::new(a + b.cross(x), b))
    }

    pub fn grid(&self) -> &BodyGrid {
        &self.grid
    }

    pub fn u(&self) -> &[Vector3<f64>] {
        &self.u
    }

    pub fn phi(&self) -> &[Vector3<f64>] {
        &self.phi
    }

    pub fn motor(&self, v: usize) -> Motor {
        Motor::new(self.u[v], self.phi[v])
    }

    pub fn to_form(&self) -> SmoothForm<Motor> {
        SmoothForm::from_vertex_fn(self.grid, 0, |v, _| self.motor(v))
    }

    pub fn from_form(form: &SmoothForm<Motor>) -> Result<Self, KinematicsError> {
        if form.degree() != 0 {
            return Err(FormError::BadDegree(form.degree()).into());
        }
        let c = form.component(0);
        Ok(Self { grid: *form.grid(), u: c.iter().map(|m| m.u).collect(), phi: c.iter().map(|m| m.phi).collect() })
    }
}

/// Translational strain `eps[(i, j)]` and wryness `tau[(i, j)]`, with `i` the
/// form index and `j` the value index.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainState {
    grid: BodyGrid,
    eps: Vec<Matrix3<f64>>,
    tau: Vec<Matrix3<f64>>,
}

impl StrainState {
    pub fn new(grid: BodyGrid, eps: Vec<Matrix3<f64>>, tau: Vec<Matrix3<f64>>) -> Result<Self, KinematicsError> {
        check_len(&grid, eps.len())?;
        check_len(&grid, tau.len())?;
        Ok(Self { grid, eps, tau })
    }

    pub fn zeros(grid: BodyGrid) -> Self {
        let n = grid.n_vertices();
        Self { grid, eps: vec![Matrix3::zeros(); n], tau: vec![Matrix3::zeros(); n] }
    }

    pub fn grid(&self) -> &BodyGrid {
        &self.grid
    }

    pub fn eps(&self) -> &[Matrix3<f64>] {
        &self.eps
    }

    pub fn tau(&self) -> &[Matrix3<f64>] {
        &self.tau
    }

    pub fn to_form(&self) -> SmoothForm<Motor> {
        SmoothForm::from_vertex_fn(self.grid, 1, |v, i| {
            Motor::new(self.eps[v].row(i).transpose(), self.tau[v].row(i).transpose())
        })
    }

    pub fn from_form(form: &SmoothForm<Motor>) -> Result<Self, KinematicsError> {
        if form.degree() != 1 {
            return Err(FormError::BadDegree(form.degree()).into());
        }
        let n = form.grid().n_vertices();
        let rows = |v: usize, f: fn(&Motor) -> Vector3<f64>| {
            Matrix3::from_rows(&[
                f(&form.value(v, 0)).transpose(),
                f(&form.value(v, 1)).transpose(),
                f(&form.value(v, 2)).transpose(),
            ])
        };
        Ok(Self {
            grid: *form.grid(),
            eps: (0..n).map(|v| rows(v, |m| m.u)).collect(),
            tau: (0..n).map(|v| rows(v, |m| m.phi)).collect(),
        })
    }

    pub fn amax(&self) -> f64 {
        self.eps.iter().chain(&self.tau).map(FieldValue::amax).fold(0.0, f64::max)
    }
}

/// Finite strain `(Qᵀdy − dx, vee(QᵀdQ))`.
pub fn finite_strain(cfg: &Configuration) -> SmoothForm<Motor> {
    let g = &cfg.grid;
    // Differentiating y − x instead of y keeps Qᵀdy − dx free of cancellation.
    let disp: Vec<_> = cfg.y.iter().zip(g.points()).map(|(y, x)| y - x).collect();
    let du: Vec<_> = (0..3).map(|a| g.partial(&disp, a)).collect();
    let dq: Vec<_> = (0..3).map(|a| g.partial(&cfg.q, a)).collect();
    SmoothForm::from_vertex_fn(*g, 1, |v, i| {
        let qt = cfg.q[v].transpose();
        let rotated_axis = (qt - Matrix3::identity()).column(i).into_owned();
        Motor::new(rotated_axis + qt * du[i][v], vee_antisym(&(qt * dq[i][v])))
    })
}

/// Re-expresses a strain 1-form in a different global section `S`.
pub fn section_change(e: &SmoothForm<Motor>, s: &[Matrix3<f64>]) -> Result<SmoothForm<Motor>, KinematicsError> {
    check_len(e.grid(), s.len())?;
    check_frames(s, false)?;
    if e.degree() != 1 {
        return Err(FormError::BadDegree(e.degree()).into());
    }
    Ok(SmoothForm::from_vertex_fn(*e.grid(), 1, |v, i| {
        let m = e.value(v, i);
        let st = s[v].transpose();
        Motor::new(st * m.u, vee_antisym(&(st * hat(&m.phi) * s[v])))
    }))
}

/// `ε_ij = ∂_i u_j − ε_ijk φ_k`, `τ_ij = ∂_i φ_j`.
pub fn infinitesimal_strain(d: &DisplacementField) -> StrainState {
    let g = &d.grid;
    let du: Vec<_> = (0..3).map(|a| g.partial(&d.u, a)).collect();
    let dphi: Vec<_> = (0..3).map(|a| g.partial(&d.phi, a)).collect();
    let n = g.n_vertices();
    let eps = (0..n)
        .map(|v| {
            Matrix3::from_fn(|i, j| {
                let twist: f64 = (0..3).map(|k| levi_civita(i, j, k) * d.phi[v][k]).sum();
                du[i][v][j] - twist
            })
        })
        .collect();
    let tau = (0..n).map(|v| Matrix3::from_fn(|i, j| dphi[i][v][j])).collect();
    StrainState { grid: *g, eps, tau }
}

/// The one-parameter family `ψ_t(x) = p(x)·exp(t ξ(x))` through the
/// reference placement `p(x) = (x, I)`.
pub fn perturbed_configuration(xi: &DisplacementField, t: f64) -> Configuration {
    let g = xi.grid;
    let (y, q) = (0..g.n_vertices())
        .map(|v| {
            let m = exp_se3(&(xi.motor(v) * t));
            (g.vertex_point(v) + m.position(), *m.frame())
        })
        .unzip();
    Configuration { grid: g, y, q }
}

/// `‖E(ψ_t)/t − e‖∞` for the family of [`perturbed_configuration`].
pub fn linearization_check(xi: &DisplacementField, t: f64) -> Result<f64, KinematicsError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(KinematicsError::Parameter(format!("t must be positive, got {t}")));
    }
    let big = finite_strain(&perturbed_configuration(xi, t));
    let small = infinitesimal_strain(xi).to_form();
    Ok(big.map(|m| *m * (1.0 / t)).sub(&small).amax())
}

/// Second-order discrete `F⁻¹∂_aF` from group logarithms of neighbouring frames.
fn frame_derivative(grid: &BodyGrid, frames: &[EuclideanMotion], v: usize, a: usize) -> Result<Motor, LieError> {
    let p = grid.vertex_coords(v);
    let n = grid.dims()[a];
    let h = grid.spacing()[a];
    let stride = match a {
        0 => 1,
        1 => grid.vertex_dims()[0],
        _ => grid.vertex_dims()[0] * grid.vertex_dims()[1],
    };
    let rel = |from: usize, to: usize| log_se3(&frames[from].inverse().compose(&frames[to]));
    let m = if p[a] == 0 {
        (rel(v, v + stride)? * 4.0 - rel(v, v + 2 * stride)?) * (0.5 / h)
    } else if p[a] == n {
        (rel(v, v - stride)? * 4.0 - rel(v, v - 2 * stride)?) * (-0.5 / h)
    } else {
        rel(v - stride, v + stride)? * (0.5 / h)
    };
    Ok(m)
}

/// Strain as the difference of the material and spatial Cartan connections,
/// `F⁻¹dF − E⁻¹dE`, with frame tuples `E = (x, e_i)` and `F = (y, Q e_i)`.
pub fn moving_frames_strain(cfg: &Configuration) -> Result<SmoothForm<Motor>, KinematicsError> {
    let g = cfg.grid;
    let spatial: Vec<_> = (0..g.n_vertices()).map(|v| cfg.motion(v)).collect();
    let material: Vec<_> = g.points().into_iter().map(EuclideanMotion::translation).collect();
    let values: Result<Vec<Vec<Motor>>, LieError> = (0..3)
        .map(|a| {
            (0..g.n_vertices())
                .into_par_iter()
                .map(|v| Ok(frame_derivative(&g, &spatial, v, a)? - frame_derivative(&g, &material, v, a)?))
                .collect()
        })
        .collect();
    Ok(SmoothForm::new(g, 1, values?)?)
}
