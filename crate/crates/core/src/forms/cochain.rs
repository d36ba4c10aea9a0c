use std::collections::BTreeMap;

use nalgebra::Vector3;
use rayon::prelude::*;

use super::grid::shift;
use super::{face_tangents, BodyGrid, FieldValue, FlatConnection, FormError};
use crate::lie_euclid::{coad, pair, CoMotor, EuclideanMotion, Motor, MotorMatrix};

/// One value per oriented `k`-cell of the cubical complex.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain<V> {
    grid: BodyGrid,
    degree: usize,
    data: Vec<V>,
}

/// Integer combination of oriented `k`-cells, keyed by linear cell index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    degree: usize,
    cells: BTreeMap<usize, i64>,
}

impl Chain {
    pub fn empty(degree: usize) -> Self {
        Self { degree, cells: BTreeMap::new() }
    }

    /// Builds a chain from `(axis, lowest corner, coefficient)` triples.
    pub fn from_cells(
        grid: &BodyGrid,
        degree: usize,
        cells: impl IntoIterator<Item = (usize, [usize; 3], i64)>,
    ) -> Result<Self, FormError> {
        let mut chain = Self::empty(degree);
        for (axis, p, coeff) in cells {
            let idx = grid.cell_index(degree, axis, p).ok_or(FormError::CellOutOfRange { degree, index: usize::MAX })?;
            chain.add(idx, coeff);
        }
        Ok(chain)
    }

    /// Builds a chain from `(linear index, coefficient)` pairs.
    pub fn from_indices(grid: &BodyGrid, degree: usize, cells: &[(usize, i64)]) -> Result<Self, FormError> {
        let mut chain = Self::empty(degree);
        for &(idx, coeff) in cells {
            if idx >= grid.cell_count(degree) {
                return Err(FormError::CellOutOfRange { degree, index: idx });
            }
            chain.add(idx, coeff);
        }
        Ok(chain)
    }

    fn add(&mut self, idx: usize, coeff: i64) {
        let e = self.cells.entry(idx).or_insert(0);
        *e += coeff;
        if *e == 0 {
            self.cells.remove(&idx);
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.cells.iter().map(|(&i, &c)| (i, c))
    }

    pub fn boundary(&self, grid: &BodyGrid) -> Chain {
        let mut out = Chain::empty(self.degree.saturating_sub(1));
        if self.degree == 0 {
            return out;
        }
        for (&idx, &coeff) in &self.cells {
            let (axis, p) = grid.cell_at(self.degree, idx).expect("validated cell");
            for (b_axis, q, s) in BodyGrid::cell_boundary(self.degree, axis, p) {
                let b = grid.cell_index(self.degree - 1, b_axis, q).expect("boundary inside grid");
                out.add(b, coeff * i64::from(s));
            }
        }
        out
    }

    pub fn is_closed(&self, grid: &BodyGrid) -> bool {
        self.boundary(grid).is_empty()
    }
}

impl<V: FieldValue> Cochain<V> {
    pub fn new(grid: BodyGrid, degree: usize, data: Vec<V>) -> Result<Self, FormError> {
        if degree > 3 {
            return Err(FormError::BadDegree(degree));
        }
        if data.len() != grid.cell_count(degree) {
            return Err(FormError::ShapeMismatch(format!(
                "degree-{degree} cochain needs {} values, got {}",
                grid.cell_count(degree),
                data.len()
            )));
        }
        Ok(Self { grid, degree, data })
    }

    pub fn zeros(grid: BodyGrid, degree: usize) -> Self {
        Self::from_cells(grid, degree, |_, _| V::zero())
    }

    /// Value from `(axis, lowest corner)` of each cell.
    pub fn from_cells(grid: BodyGrid, degree: usize, f: impl Fn(usize, [usize; 3]) -> V + Sync) -> Self {
        assert!(degree <= 3, "degree {degree} > 3");
        let data = (0..grid.cell_count(degree))
            .into_par_iter()
            .map(|idx| {
                let (axis, p) = grid.cell_at(degree, idx).expect("index in range");
                f(axis, p)
            })
            .collect();
        Self { grid, degree, data }
    }

    pub fn grid(&self) -> &BodyGrid {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[V] {
        &self.data
    }

    pub fn value(&self, idx: usize) -> V {
        self.data[idx]
    }

    /// Value on the cell `(axis, p)`; panics if the cell is outside the grid.
    pub fn at(&self, axis: usize, p: [usize; 3]) -> V {
        self.data[self.grid.cell_index(self.degree, axis, p).expect("cell inside grid")]
    }

    pub fn set(&mut self, axis: usize, p: [usize; 3], value: V) {
        let idx = self.grid.cell_index(self.degree, axis, p).expect("cell inside grid");
        self.data[idx] = value;
    }

    pub fn map<W: FieldValue>(&self, f: impl Fn(&V) -> W + Sync) -> Cochain<W> {
        Cochain { grid: self.grid, degree: self.degree, data: self.data.par_iter().map(&f).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.degree, self.grid), (other.degree, other.grid));
        Cochain {
            grid: self.grid,
            degree: self.degree,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.map(|v| -*v))
    }

    pub fn amax(&self) -> f64 {
        self.data.iter().map(FieldValue::amax).fold(0.0, f64::max)
    }

    /// Applies the signed incidence matrix.
    pub fn coboundary(&self) -> Result<Self, FormError> {
        let k = self.degree;
        if k >= 3 {
            return Err(FormError::BadDegree(k));
        }
        let grid = self.grid;
        Ok(Cochain::from_cells(grid, k + 1, |axis, p| {
            let mut acc = V::zero();
            for (b_axis, q, s) in BodyGrid::cell_boundary(k + 1, axis, p) {
                let v = self.at(b_axis, q);
                if s > 0 {
                    acc += v;
                } else {
                    acc += -v;
                }
            }
            acc
        }))
    }

    /// Cubical cup product with value multiplication `prod`.
    pub fn cup_with<B, C>(&self, other: &Cochain<B>, prod: impl Fn(&V, &B) -> C + Sync) -> Result<Cochain<C>, FormError>
    where
        B: FieldValue,
        C: FieldValue,
    {
        let (p, q) = (self.degree, other.degree);
        if p + q > 3 {
            return Err(FormError::DegreeOverflow(p, q));
        }
        if self.grid != other.grid {
            return Err(FormError::ShapeMismatch("cochains live on different grids".into()));
        }
        let (a, b) = (self, other);
        Ok(Cochain::from_cells(self.grid, p + q, |axis, c| match (p, q) {
            (0, _) => prod(&a.at(0, c), &b.at(axis, c)),
            (_, 0) => {
                let (_, top) = BodyGrid::cell_corners(p, axis, c);
                prod(&a.at(axis, c), &b.at(0, top))
            }
            (1, 1) => {
                let (t1, t2) = face_tangents(axis);
                prod(&a.at(t1, c), &b.at(t2, shift(c, t1))) - prod(&a.at(t2, c), &b.at(t1, shift(c, t2)))
            }
            (1, 2) => {
                let mut s = C::zero();
                for i in 0..3 {
                    s += prod(&a.at(i, c), &b.at(i, shift(c, i)));
                }
                s
            }
            _ => {
                let mut s = C::zero();
                for i in 0..3 {
                    let far = [c[0] + 1, c[1] + 1, c[2] + 1];
                    let mut start = far;
                    start[i] -= 1;
                    s += prod(&a.at(i, c), &b.at(i, start));
                }
                s
            }
        }))
    }

    /// Signed sum of values over a chain.
    pub fn integrate(&self, chain: &Chain) -> Result<V, FormError> {
        if chain.degree() != self.degree {
            return Err(FormError::ShapeMismatch(format!(
                "degree-{} chain against degree-{} cochain",
                chain.degree(),
                self.degree
            )));
        }
        let mut acc = V::zero();
        for (idx, coeff) in chain.cells() {
            let v = *self.data.get(idx).ok_or(FormError::CellOutOfRange { degree: self.degree, index: idx })?;
            acc += v * coeff as f64;
        }
        Ok(acc)
    }

    /// de Rham map: integrates component `c` of a smooth form over each cell
    /// with tensor 2-point Gauss rules (exact for per-axis cubics).
    pub fn sample(grid: BodyGrid, degree: usize, f: impl Fn(&Vector3<f64>, usize) -> V + Sync) -> Self {
        let g = 0.5 / 3f64.sqrt();
        let nodes = [0.5 - g, 0.5 + g];
        let h = grid.spacing();
        Cochain::from_cells(grid, degree, |axis, p| {
            let x0 = grid.point(p);
            let spanned: Vec<usize> = (0..3).filter(|&b| BodyGrid::spans(degree, axis, b)).collect();
            let weight: f64 = spanned.iter().map(|&b| 0.5 * h[b]).product();
            let mut acc = V::zero();
            for code in 0..(1usize << spanned.len()) {
                let mut x = x0;
                for (bit, &b) in spanned.iter().enumerate() {
                    x[b] += nodes[(code >> bit) & 1] * h[b];
                }
                acc += f(&x, axis);
            }
            acc * weight
        })
    }
}

/// Rows of the signed incidence matrix `δ_k`: for every `(k+1)`-cell, its
/// boundary `k`-cells with orientation signs.
pub fn incidence_matrix(grid: &BodyGrid, k: usize) -> Result<Vec<Vec<(usize, i8)>>, FormError> {
    if k >= 3 {
        return Err(FormError::BadDegree(k));
    }
    Ok((0..grid.cell_count(k + 1))
        .map(|idx| {
            let (axis, p) = grid.cell_at(k + 1, idx).expect("index in range");
            BodyGrid::cell_boundary(k + 1, axis, p)
                .into_iter()
                .map(|(b_axis, q, s)| (grid.cell_index(k, b_axis, q).expect("inside grid"), s))
                .collect()
        })
        .collect())
}

fn matrix_product(a: &Motor, b: &Motor) -> MotorMatrix {
    MotorMatrix::from(*a).matmul(&MotorMatrix::from(*b))
}

impl Cochain<Motor> {
    /// `Dα = dα + ω∪α − (−1)^p α∪ω` with the flat edge connection.
    pub fn covariant_d(&self, conn: &FlatConnection) -> Result<Cochain<Motor>, FormError> {
        let w = conn.cochain();
        let left = w.cup_with(self, matrix_product)?;
        let right = self.cup_with(&w, matrix_product)?;
        let sign = if self.degree % 2 == 0 { 1.0 } else { -1.0 };
        let twist = Cochain {
            grid: self.grid,
            degree: self.degree + 1,
            data: left.data.iter().zip(&right.data).map(|(l, r)| (*l - *r * sign).to_motor()).collect(),
        };
        Ok(self.coboundary()?.add(&twist))
    }

    /// Each value moved to the global frame by `Ad` of the reference placement
    /// at the cell's last vertex.
    pub fn transported(&self) -> Cochain<Motor> {
        let grid = self.grid;
        let k = self.degree;
        Cochain::from_cells(grid, k, |axis, p| {
            let (_, top) = BodyGrid::cell_corners(k, axis, p);
            EuclideanMotion::translation(grid.point(top)).adjoint(&self.at(axis, p))
        })
    }
}

impl Cochain<CoMotor> {
    /// `D*Π = dΠ + ω ∪ Π` with `ad*` as value product.
    pub fn covariant_d_star(&self, conn: &FlatConnection) -> Result<Cochain<CoMotor>, FormError> {
        let w = conn.cochain();
        Ok(self.coboundary()?.add(&w.cup_with(self, coad)?))
    }

    /// Scalar cochain `⟨Σ ∪ e⟩`.
    pub fn pairing(&self, e: &Cochain<Motor>) -> Result<Cochain<f64>, FormError> {
        self.cup_with(e, pair)
    }
}
