//! Closed-form trigonometric fields with exact derivatives.
//!
//! A [`TrigField`] is an affine function plus a finite sum of plane sine
//! waves. The class is closed under partial differentiation and linear
//! combination, which is all the manufactured-solution machinery needs.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::Vector3;
use rand::Rng;

use crate::forms::{
    face_tangents, n_components, wedge_bracket, wedge_with, BodyGrid, Cochain, FlatConnection, FormError, SmoothForm,
};
use crate::lie_euclid::{coad, CoMotor, Motor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub amp: f64,
    pub wave: [f64; 3],
    pub phase: f64,
}

/// `c + l·x + Σ amp sin(wave·x + phase)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigField {
    pub constant: f64,
    pub linear: [f64; 3],
    pub terms: Vec<TrigTerm>,
}

impl TrigField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { constant: c, ..Self::default() }
    }

    pub fn affine(c: f64, linear: [f64; 3]) -> Self {
        Self { constant: c, linear, terms: Vec::new() }
    }

    pub fn sine(amp: f64, wave: [f64; 3], phase: f64) -> Self {
        Self { terms: vec![TrigTerm { amp, wave, phase }], ..Self::default() }
    }

    /// `amp · sin(k₁x₁) sin(k₂x₂) sin(k₃x₃)` expanded into four plane waves.
    pub fn sine_product(amp: f64, k: [f64; 3]) -> Self {
        let q = 0.25 * amp;
        let wave = |s: [f64; 3]| [s[0] * k[0], s[1] * k[1], s[2] * k[2]];
        let mut f = Self::sine(q, wave([1.0, 1.0, -1.0]), 0.0);
        f += Self::sine(q, wave([1.0, -1.0, 1.0]), 0.0);
        f += Self::sine(q, wave([-1.0, 1.0, 1.0]), 0.0);
        f += Self::sine(-q, wave([1.0, 1.0, 1.0]), 0.0);
        f
    }

    /// Random sum of `n_terms` waves with wave numbers in `[-max_wave, max_wave]`.
    pub fn random(rng: &mut impl Rng, n_terms: usize, max_wave: f64) -> Self {
        let mut f = Self::constant(rng.gen_range(-1.0..1.0));
        for _ in 0..n_terms {
            let wave = std::array::from_fn(|_| rng.gen_range(-max_wave..=max_wave));
            f += Self::sine(rng.gen_range(-1.0..1.0), wave, rng.gen_range(0.0..std::f64::consts::TAU));
        }
        f
    }

    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        let mut s = self.constant + self.linear[0] * x[0] + self.linear[1] * x[1] + self.linear[2] * x[2];
        for t in &self.terms {
            s += t.amp * (t.wave[0] * x[0] + t.wave[1] * x[1] + t.wave[2] * x[2] + t.phase).sin();
        }
        s
    }

    pub fn partial(&self, a: usize) -> Self {
        Self {
            constant: self.linear[a],
            linear: [0.0; 3],
            terms: self
                .terms
                .iter()
                .filter(|t| t.wave[a] != 0.0)
                .map(|t| TrigTerm { amp: t.amp * t.wave[a], wave: t.wave, phase: t.phase + FRAC_PI_2 })
                .collect(),
        }
    }
}

impl AddAssign for TrigField {
    fn add_assign(&mut self, o: Self) {
        self.constant += o.constant;
        for a in 0..3 {
            self.linear[a] += o.linear[a];
        }
        self.terms.extend(o.terms);
    }
}

impl Add for TrigField {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl Mul<f64> for TrigField {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self {
            constant: self.constant * s,
            linear: self.linear.map(|l| l * s),
            terms: self
                .terms
                .into_iter()
                .filter(|_| s != 0.0)
                .map(|t| TrigTerm { amp: t.amp * s, ..t })
                .collect(),
        }
    }
}

impl Neg for TrigField {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Sub for TrigField {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

/// Six trigonometric components, read either as a motor or a co-motor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trig6(pub [TrigField; 6]);

impl Trig6 {
    pub fn random(rng: &mut impl Rng, n_terms: usize, max_wave: f64) -> Self {
        Self(std::array::from_fn(|_| TrigField::random(rng, n_terms, max_wave)))
    }

    pub fn eval(&self, x: &Vector3<f64>) -> [f64; 6] {
        std::array::from_fn(|i| self.0[i].eval(x))
    }

    pub fn partial(&self, a: usize) -> Self {
        Self(std::array::from_fn(|i| self.0[i].partial(a)))
    }

    fn zip(self, o: Self, f: impl Fn(TrigField, TrigField) -> TrigField) -> Self {
        let [a0, a1, a2, a3, a4, a5] = self.0;
        let [b0, b1, b2, b3, b4, b5] = o.0;
        Self([f(a0, b0), f(a1, b1), f(a2, b2), f(a3, b3), f(a4, b4), f(a5, b5)])
    }
}

impl Add for Trig6 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.zip(o, |a, b| a + b)
    }
}

impl Sub for Trig6 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.zip(o, |a, b| a - b)
    }
}

/// A form whose components are [`Trig6`] fields, with an exact exterior
/// derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticForm {
    degree: usize,
    comps: Vec<Trig6>,
}

impl AnalyticForm {
    pub fn new(degree: usize, comps: Vec<Trig6>) -> Result<Self, FormError> {
        if degree > 3 {
            return Err(FormError::BadDegree(degree));
        }
        if comps.len() != n_components(degree) {
            return Err(FormError::ShapeMismatch(format!("degree {degree} needs {} components", n_components(degree))));
        }
        Ok(Self { degree, comps })
    }

    pub fn random(rng: &mut impl Rng, degree: usize, n_terms: usize, max_wave: f64) -> Self {
        let comps = (0..n_components(degree)).map(|_| Trig6::random(rng, n_terms, max_wave)).collect();
        Self { degree, comps }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn component(&self, c: usize) -> &Trig6 {
        &self.comps[c]
    }

    /// Exact exterior derivative.
    pub fn d(&self) -> Result<Self, FormError> {
        let c = &self.comps;
        let comps = match self.degree {
            0 => (0..3).map(|a| c[0].partial(a)).collect(),
            1 => (0..3)
                .map(|k| {
                    let (t1, t2) = face_tangents(k);
                    c[t2].partial(t1) - c[t1].partial(t2)
                })
                .collect(),
            2 => vec![c[0].partial(0) + c[1].partial(1) + c[2].partial(2)],
            k => return Err(FormError::BadDegree(k)),
        };
        Ok(Self { degree: self.degree + 1, comps })
    }

    pub fn motor_at(&self, x: &Vector3<f64>, c: usize) -> Motor {
        Motor::from_array(self.comps[c].eval(x))
    }

    pub fn comotor_at(&self, x: &Vector3<f64>, c: usize) -> CoMotor {
        CoMotor::from_array(self.comps[c].eval(x))
    }

    pub fn sample_motor(&self, grid: BodyGrid) -> SmoothForm<Motor> {
        SmoothForm::from_fn(grid, self.degree, |x, c| self.motor_at(x, c))
    }

    pub fn sample_comotor(&self, grid: BodyGrid) -> SmoothForm<CoMotor> {
        SmoothForm::from_fn(grid, self.degree, |x, c| self.comotor_at(x, c))
    }

    /// de Rham integrals over the cells of the grid.
    pub fn cochain_motor(&self, grid: BodyGrid) -> Cochain<Motor> {
        Cochain::sample(grid, self.degree, |x, c| self.motor_at(x, c))
    }

    /// `Dα` evaluated exactly at the vertices: exact `dα` plus the pointwise
    /// connection term.
    pub fn exact_covariant_d(&self, grid: BodyGrid) -> Result<SmoothForm<Motor>, FormError> {
        let omega = FlatConnection::new(grid).smooth();
        let twist = wedge_bracket(&omega, &self.sample_motor(grid))?;
        Ok(self.d()?.sample_motor(grid).add(&twist))
    }

    /// `D*Π` evaluated exactly at the vertices.
    pub fn exact_covariant_d_star(&self, grid: BodyGrid) -> Result<SmoothForm<CoMotor>, FormError> {
        let omega = FlatConnection::new(grid).smooth();
        let twist = wedge_with(&omega, &self.sample_comotor(grid), coad)?;
        Ok(self.d()?.sample_comotor(grid).add(&twist))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let f = TrigField::random(&mut rng, 4, 3.0) + TrigField::affine(0.5, [1.0, -2.0, 0.25]);
        let x = Vector3::new(0.3, -0.4, 0.9);
        let h = 1e-5;
        for a in 0..3 {
            let e = Vector3::ith(a, h);
            let fd = (f.eval(&(x + e)) - f.eval(&(x - e))) / (2.0 * h);
            assert!((f.partial(a).eval(&x) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn sine_product_expansion() {
        let f = TrigField::sine_product(2.0, [1.0, 2.0, 3.0]);
        let x = Vector3::new(0.2f64, 0.7, -0.3);
        let direct = 2.0 * x[0].sin() * (2.0 * x[1]).sin() * (3.0 * x[2]).sin();
        assert!((f.eval(&x) - direct).abs() < 1e-14);
    }

    #[test]
    fn exact_d_squares_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let a = AnalyticForm::random(&mut rng, 0, 3, 2.0);
        let dd = a.d().unwrap().d().unwrap();
        let x = Vector3::new(0.1, 0.2, 0.3);
        for c in 0..3 {
            assert!(dd.comps[c].eval(&x).iter().all(|v| v.abs() < 1e-12));
        }
        let b = AnalyticForm::random(&mut rng, 1, 3, 2.0);
        assert!(b.d().unwrap().d().unwrap().comps[0].eval(&x).iter().all(|v| v.abs() < 1e-12));
    }
}
