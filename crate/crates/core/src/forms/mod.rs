//! Lie-algebra valued differential forms on a box.
//!
//! Two representations share one vocabulary: [`SmoothForm`] holds components
//! sampled at grid vertices and differentiates with finite differences, while
//! [`Cochain`] attaches one value per oriented cell of the cubical complex and
//! differentiates with the signed incidence matrices.
//!
//! Component conventions: a 1-form is `α_i dx_i`, a 2-form is `β_i A_i` with
//! `A_1 = dx2∧dx3`, `A_2 = dx3∧dx1`, `A_3 = dx1∧dx2`, and a 3-form is
//! `γ vol` with `vol = dx1∧dx2∧dx3`, so that `dx_i ∧ A_j = δ_ij vol`.

mod cochain;
mod grid;
mod smooth;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::lie_euclid::{CoMotor, Motor, MotorMatrix};

pub use cochain::{incidence_matrix, Chain, Cochain};
pub use grid::{face_tangents, BodyGrid};
pub use smooth::{
    covariant_d, covariant_d_star, covariant_d_star_with, covariant_d_with, pairing, wedge_bracket, wedge_matrix,
    wedge_with, SmoothForm,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("degree overflow: {0} + {1} > 3")]
    DegreeOverflow(usize, usize),
    #[error("operation undefined on degree-{0} forms")]
    BadDegree(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cell {index} out of range for degree-{degree} cells")]
    CellOutOfRange { degree: usize, index: usize },
    #[error("chain is not closed")]
    OpenChain,
    #[error("boundary of the cap does not match the loop")]
    CapMismatch,
}

/// Values a form can carry: closed under addition and real scaling.
pub trait FieldValue:
    Copy
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    fn zero() -> Self {
        Self::default()
    }

    /// Largest absolute component.
    fn amax(&self) -> f64;
}

impl FieldValue for f64 {
    fn amax(&self) -> f64 {
        self.abs()
    }
}

impl FieldValue for Vector3<f64> {
    fn amax(&self) -> f64 {
        Vector3::amax(self)
    }
}

impl FieldValue for Matrix3<f64> {
    fn amax(&self) -> f64 {
        Matrix3::amax(self)
    }
}

impl FieldValue for Motor {
    fn amax(&self) -> f64 {
        Motor::amax(self)
    }
}

impl FieldValue for CoMotor {
    fn amax(&self) -> f64 {
        CoMotor::amax(self)
    }
}

impl FieldValue for MotorMatrix {
    fn amax(&self) -> f64 {
        MotorMatrix::amax(self)
    }
}

/// Number of components of a smooth degree-`k` form.
pub fn n_components(k: usize) -> usize {
    match k {
        0 | 3 => 1,
        1 | 2 => 3,
        _ => 0,
    }
}

/// The flat Maurer-Cartan form `ω = v_i dx_i` of the reference placement in
/// the `S = I` trivialisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatConnection {
    grid: BodyGrid,
}

impl FlatConnection {
    pub fn new(grid: BodyGrid) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &BodyGrid {
        &self.grid
    }

    pub fn smooth(&self) -> SmoothForm<Motor> {
        SmoothForm::from_fn(self.grid, 1, |_, c| Motor::translation_generator(c))
    }

    /// Edge cochain `h_a v_a` on edges along axis `a`.
    pub fn cochain(&self) -> Cochain<Motor> {
        let h = self.grid.spacing();
        Cochain::from_cells(self.grid, 1, |axis, _| Motor::translation_generator(axis) * h[axis])
    }

    /// `dω + ω∧ω`, computed with matrix products of the embeddings.
    pub fn curvature(&self) -> SmoothForm<Motor> {
        let w = self.smooth();
        let dw = w.d().expect("1-form");
        let ww = smooth::wedge_bracket(&w, &w).expect("1-form");
        dw.zip_map(&ww, |a, b| *a + *b)
    }
}
