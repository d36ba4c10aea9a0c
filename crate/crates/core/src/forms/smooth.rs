use nalgebra::Vector3;
use rayon::prelude::*;

use super::{face_tangents, n_components, BodyGrid, FieldValue, FlatConnection, FormError};
use crate::lie_euclid::{coad, pair, CoMotor, Motor, MotorMatrix};

/// Degree-`k` form sampled at grid vertices, one vertex field per component.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothForm<V> {
    grid: BodyGrid,
    degree: usize,
    comps: Vec<Vec<V>>,
}

impl<V: FieldValue> SmoothForm<V> {
    pub fn new(grid: BodyGrid, degree: usize, comps: Vec<Vec<V>>) -> Result<Self, FormError> {
        if degree > 3 {
            return Err(FormError::BadDegree(degree));
        }
        if comps.len() != n_components(degree) || comps.iter().any(|c| c.len() != grid.n_vertices()) {
            return Err(FormError::ShapeMismatch(format!(
                "degree {degree} needs {} components of {} values",
                n_components(degree),
                grid.n_vertices()
            )));
        }
        Ok(Self { grid, degree, comps })
    }

    pub fn zeros(grid: BodyGrid, degree: usize) -> Self {
        Self::from_vertex_fn(grid, degree, |_, _| V::zero())
    }

    /// Component `c` at position `x`.
    pub fn from_fn(grid: BodyGrid, degree: usize, f: impl Fn(&Vector3<f64>, usize) -> V + Sync) -> Self {
        Self::from_vertex_fn(grid, degree, |v, c| f(&grid.vertex_point(v), c))
    }

    /// Component `c` at vertex index `v`.
    pub fn from_vertex_fn(grid: BodyGrid, degree: usize, f: impl Fn(usize, usize) -> V + Sync) -> Self {
        assert!(degree <= 3, "degree {degree} > 3");
        let comps = (0..n_components(degree))
            .map(|c| (0..grid.n_vertices()).into_par_iter().map(|v| f(v, c)).collect())
            .collect();
        Self { grid, degree, comps }
    }

    pub fn grid(&self) -> &BodyGrid {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn component(&self, c: usize) -> &[V] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<V>] {
        &self.comps
    }

    pub fn value(&self, v: usize, c: usize) -> V {
        self.comps[c][v]
    }

    pub fn map<W: FieldValue>(&self, f: impl Fn(&V) -> W + Sync) -> SmoothForm<W> {
        SmoothForm {
            grid: self.grid,
            degree: self.degree,
            comps: self.comps.iter().map(|c| c.par_iter().map(&f).collect()).collect(),
        }
    }

    pub fn zip_map<W: FieldValue, U: FieldValue>(
        &self,
        other: &SmoothForm<W>,
        f: impl Fn(&V, &W) -> U + Sync,
    ) -> SmoothForm<U> {
        assert_eq!(self.degree, other.degree, "degree mismatch");
        assert_eq!(self.grid, other.grid, "grid mismatch");
        SmoothForm {
            grid: self.grid,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.par_iter().zip(b.par_iter()).map(|(x, y)| f(x, y)).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| *a + *b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| *a - *b)
    }

    pub fn amax(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).map(FieldValue::amax).fold(0.0, f64::max)
    }

    /// Largest absolute value over vertices at least `margin` layers away from
    /// the boundary.
    pub fn amax_interior(&self, margin: usize) -> f64 {
        let dims = self.grid.dims();
        let mut m: f64 = 0.0;
        for v in 0..self.grid.n_vertices() {
            let p = self.grid.vertex_coords(v);
            if (0..3).all(|a| p[a] >= margin && p[a] + margin <= dims[a]) {
                for c in &self.comps {
                    m = m.max(c[v].amax());
                }
            }
        }
        m
    }

    /// Exterior derivative by finite differences.
    pub fn d(&self) -> Result<Self, FormError> {
        let g = &self.grid;
        let comps = match self.degree {
            0 => (0..3).map(|a| g.partial(&self.comps[0], a)).collect(),
            1 => (0..3)
                .map(|c| {
                    let (t1, t2) = face_tangents(c);
                    let a = g.partial(&self.comps[t2], t1);
                    let b = g.partial(&self.comps[t1], t2);
                    a.into_iter().zip(b).map(|(x, y)| x - y).collect()
                })
                .collect(),
            2 => {
                let mut sum = g.partial(&self.comps[0], 0);
                for a in 1..3 {
                    for (s, t) in sum.iter_mut().zip(g.partial(&self.comps[a], a)) {
                        *s += t;
                    }
                }
                vec![sum]
            }
            k => return Err(FormError::BadDegree(k)),
        };
        Ok(Self { grid: self.grid, degree: self.degree + 1, comps })
    }
}

/// Pointwise graded product `a ∧ b` with value multiplication `prod`.
pub fn wedge_with<A, B, C>(
    a: &SmoothForm<A>,
    b: &SmoothForm<B>,
    prod: impl Fn(&A, &B) -> C + Sync,
) -> Result<SmoothForm<C>, FormError>
where
    A: FieldValue,
    B: FieldValue,
    C: FieldValue,
{
    let (p, q) = (a.degree, b.degree);
    if p + q > 3 {
        return Err(FormError::DegreeOverflow(p, q));
    }
    if a.grid != b.grid {
        return Err(FormError::ShapeMismatch("forms live on different grids".into()));
    }
    let out = |c: usize, v: usize| -> C {
        let (x, y) = (&a.comps, &b.comps);
        match (p, q) {
            (0, _) => prod(&x[0][v], &y[c][v]),
            (_, 0) => prod(&x[c][v], &y[0][v]),
            (1, 1) => {
                let (t1, t2) = face_tangents(c);
                prod(&x[t1][v], &y[t2][v]) - prod(&x[t2][v], &y[t1][v])
            }
            _ => {
                let mut s = prod(&x[0][v], &y[0][v]);
                for i in 1..3 {
                    s += prod(&x[i][v], &y[i][v]);
                }
                s
            }
        }
    };
    Ok(SmoothForm::from_vertex_fn(a.grid, p + q, |v, c| out(c, v)))
}

/// `a ∧ b` with values multiplied as 4×4 matrix embeddings.
pub fn wedge_matrix(a: &SmoothForm<Motor>, b: &SmoothForm<Motor>) -> Result<SmoothForm<MotorMatrix>, FormError> {
    wedge_with(a, b, |x, y| MotorMatrix::from(*x).matmul(&MotorMatrix::from(*y)))
}

/// Graded commutator `a∧b − (−1)^{pq} b∧a`, which is again motor valued.
pub fn wedge_bracket(a: &SmoothForm<Motor>, b: &SmoothForm<Motor>) -> Result<SmoothForm<Motor>, FormError> {
    let ab = wedge_matrix(a, b)?;
    let ba = wedge_matrix(b, a)?;
    let sign = if a.degree * b.degree % 2 == 0 { 1.0 } else { -1.0 };
    Ok(ab.zip_map(&ba, |x, y| (*x - *y * sign).to_motor()))
}

/// Scalar form `⟨σ ∧ e⟩` from the natural pairing of values.
pub fn pairing(sigma: &SmoothForm<CoMotor>, e: &SmoothForm<Motor>) -> Result<SmoothForm<f64>, FormError> {
    wedge_with(sigma, e, pair)
}

/// `Dα = dα + ω∧α − (−1)^p α∧ω` for the flat reference connection.
pub fn covariant_d(alpha: &SmoothForm<Motor>, conn: &FlatConnection) -> Result<SmoothForm<Motor>, FormError> {
    covariant_d_with(alpha, &conn.smooth())
}

/// Exterior covariant derivative with respect to an arbitrary motor-valued
/// 1-form `eta`.
pub fn covariant_d_with(alpha: &SmoothForm<Motor>, eta: &SmoothForm<Motor>) -> Result<SmoothForm<Motor>, FormError> {
    if alpha.degree > 2 {
        return Err(FormError::BadDegree(alpha.degree));
    }
    if eta.degree != 1 {
        return Err(FormError::BadDegree(eta.degree));
    }
    Ok(alpha.d()?.add(&wedge_bracket(eta, alpha)?))
}

/// `D*Π = dΠ + ad*_ω ∧ Π` for the flat reference connection.
pub fn covariant_d_star(pi: &SmoothForm<CoMotor>, conn: &FlatConnection) -> Result<SmoothForm<CoMotor>, FormError> {
    covariant_d_star_with(pi, &conn.smooth())
}

pub fn covariant_d_star_with(pi: &SmoothForm<CoMotor>, eta: &SmoothForm<Motor>) -> Result<SmoothForm<CoMotor>, FormError> {
    if pi.degree > 2 {
        return Err(FormError::BadDegree(pi.degree));
    }
    if eta.degree != 1 {
        return Err(FormError::BadDegree(eta.degree));
    }
    Ok(pi.d()?.add(&wedge_with(eta, pi, coad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_euclid::ad;
    use crate::levi_civita;
    use nalgebra::Matrix3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> BodyGrid {
        BodyGrid::new([4, 5, 3], [0.25, 0.2, 0.5], [0.0, 1.0, -1.0]).unwrap()
    }

    fn random_form<V: FieldValue>(g: BodyGrid, k: usize, mut f: impl FnMut() -> V) -> SmoothForm<V> {
        let comps = (0..n_components(k)).map(|_| (0..g.n_vertices()).map(|_| f()).collect()).collect();
        SmoothForm::new(g, k, comps).unwrap()
    }

    fn rand6(rng: &mut ChaCha8Rng) -> [f64; 6] {
        std::array::from_fn(|_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn d_of_linear_fields() {
        let g = grid();
        let f = SmoothForm::from_fn(g, 0, |x, _| 2.0 * x[0] - x[2]);
        let df = f.d().unwrap();
        for v in 0..g.n_vertices() {
            assert!((df.value(v, 0) - 2.0).abs() < 1e-12);
            assert!(df.value(v, 1).abs() < 1e-12);
            assert!((df.value(v, 2) + 1.0).abs() < 1e-12);
        }
        // α = x2 dx3 − x3 dx2 has dα = 2 A_1
        let a = SmoothForm::from_fn(g, 1, |x, c| [0.0, -x[2], x[1]][c]);
        let da = a.d().unwrap();
        assert!((da.component(0).iter().map(|v| (v - 2.0).abs()).fold(0.0, f64::max)) < 1e-12);
        assert!(da.component(1).iter().chain(da.component(2)).all(|v| v.abs() < 1e-12));
        // β = x_i A_i has dβ = 3 vol
        let b = SmoothForm::from_fn(g, 2, |x, c| x[c]);
        assert!(b.d().unwrap().component(0).iter().all(|v| (v - 3.0).abs() < 1e-12));
        assert_eq!(b.d().unwrap().d(), Err(FormError::BadDegree(3)));
    }

    #[test]
    fn wedge_structure_constants() {
        let g = grid();
        let dx = |i: usize| SmoothForm::from_fn(g, 1, move |_, c| if c == i { 1.0 } else { 0.0 });
        let a3 = wedge_with(&dx(0), &dx(1), |a, b| a * b).unwrap();
        assert_eq!(a3.value(0, 2), 1.0);
        assert_eq!(a3.value(0, 0), 0.0);
        let a_basis = |j: usize| SmoothForm::from_fn(g, 2, move |_, c| if c == j { 1.0 } else { 0.0 });
        for i in 0..3 {
            for j in 0..3 {
                let v = wedge_with(&dx(i), &a_basis(j), |a, b| a * b).unwrap().value(0, 0);
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
        assert!(matches!(wedge_with(&a_basis(0), &a_basis(1), |a, b| a * b), Err(FormError::DegreeOverflow(2, 2))));
    }

    #[test]
    fn wedge_of_commuting_form_with_itself_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_form(grid(), 1, || rng.gen_range(-1.0..1.0));
        assert_eq!(wedge_with(&a, &a, |x, y| x * y).unwrap().amax(), 0.0);
    }

    #[test]
    fn bracket_agrees_with_lie_bracket() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = grid();
        let a = random_form(g, 1, || Motor::from_array(rand6(&mut rng)));
        let b = random_form(g, 1, || Motor::from_array(rand6(&mut rng)));
        let via_matrices = wedge_bracket(&a, &b).unwrap();
        // [a∧b] with the Lie bracket as product
        let via_ad = wedge_with(&a, &b, ad).unwrap();
        assert!(via_matrices.sub(&via_ad).amax() < 1e-14);
    }

    #[test]
    fn covariant_d_of_constant_section() {
        let g = grid();
        let conn = FlatConnection::new(g);
        let u0 = Vector3::new(1.0, -2.0, 0.5);
        let phi0 = Vector3::new(0.3, 0.2, -0.7);
        let xi = SmoothForm::from_fn(g, 0, |_, _| Motor::new(u0, phi0));
        let dxi = covariant_d(&xi, &conn).unwrap();
        for i in 0..3 {
            // −Φ₀ dx: component i is −phi0 × e_i
            let expected = Motor::new(-phi0.cross(&Vector3::ith(i, 1.0)), Vector3::zeros());
            assert!((dxi.value(7, i) - expected).amax() < 1e-14);
        }
        let dw = covariant_d(&conn.smooth(), &conn).unwrap();
        assert!(dw.amax() < 1e-14);
    }

    #[test]
    fn pairing_is_the_strain_stress_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = grid();
        let sigma = random_form(g, 2, || CoMotor::from_array(rand6(&mut rng)));
        let e = random_form(g, 1, || Motor::from_array(rand6(&mut rng)));
        let p = pairing(&sigma, &e).unwrap();
        for v in 0..g.n_vertices() {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += e.value(v, i).u[j] * sigma.value(v, i).f[j] + e.value(v, i).phi[j] * sigma.value(v, i).m[j];
                }
            }
            assert!((p.value(v, 0) - s).abs() < 1e-13);
        }
        let unit = SmoothForm::from_fn(g, 2, |_, c| if c == 0 { CoMotor::force_dual(0) } else { CoMotor::zero() });
        let dx1 = SmoothForm::from_fn(g, 1, |_, c| if c == 0 { Motor::translation_generator(0) } else { Motor::zero() });
        assert_eq!(pairing(&unit, &dx1).unwrap().value(0, 0), 1.0);
        assert_eq!(pairing(&SmoothForm::zeros(g, 2), &e).unwrap().amax(), 0.0);
    }

    #[test]
    fn d_star_of_constant_force_stress_is_the_moment_coupling() {
        let g = grid();
        let conn = FlatConnection::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let s = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let sigma = SmoothForm::from_fn(g, 2, |_, i| CoMotor::new(s.row(i).transpose(), Vector3::zeros()));
        let out = covariant_d_star(&sigma, &conn).unwrap();
        for v in [0, 17, g.n_vertices() - 1] {
            let val = out.value(v, 0);
            assert!(val.f.amax() < 1e-13);
            for l in 0..3 {
                let mut expected = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        expected += levi_civita(i, j, l) * s[(i, j)];
                    }
                }
                assert!((val.m[l] - expected).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn flat_compositions_vanish_to_roundoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let g = grid();
        let conn = FlatConnection::new(g);
        let xi = random_form(g, 0, || Motor::from_array(rand6(&mut rng)));
        let dd = covariant_d(&covariant_d(&xi, &conn).unwrap(), &conn).unwrap();
        assert!(dd.amax() < 1e-10);
        let y = random_form(g, 1, || CoMotor::from_array(rand6(&mut rng)));
        let dsds = covariant_d_star(&covariant_d_star(&y, &conn).unwrap(), &conn).unwrap();
        assert!(dsds.amax() < 1e-10);
    }
}
