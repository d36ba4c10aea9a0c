//! Geometric micropolar (Cosserat) mechanics.
//!
//! Strain is the difference between a pulled-back Maurer-Cartan form and the
//! flat reference connection, stress is a co-motor valued 2-form, and balance
//! laws come out of the covariant codifferential. Everything is discretised on
//! tensor-product grids, either as vertex-sampled smooth fields with
//! second-order finite differences or as cochains on the cubical complex.

pub mod analytic;
pub mod compatibility;
pub mod constitutive;
pub mod forms;
pub mod io;
pub mod kinematics;
pub mod lie_euclid;
pub mod mechanics;
pub mod solver;
pub mod verify;

pub use forms::{BodyGrid, Cochain, FieldValue, FlatConnection, FormError, SmoothForm};
pub use lie_euclid::{CoMotor, EuclideanMotion, LieError, Motor, MotorMatrix};

/// Levi-Civita symbol on indices in `0..3`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}
