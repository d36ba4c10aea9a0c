use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FieldValue, FormError};

/// Regular box-shaped grid of `dims[a]` cells per axis, with vertices at
/// `origin + p ⊙ spacing` for `p ∈ [0, dims]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyGrid {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

/// The two tangent axes of a face with normal `a`, in orientation order.
pub fn face_tangents(a: usize) -> (usize, usize) {
    ((a + 1) % 3, (a + 2) % 3)
}

pub(crate) fn shift(p: [usize; 3], a: usize) -> [usize; 3] {
    let mut q = p;
    q[a] += 1;
    q
}

impl BodyGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self, FormError> {
        if dims.iter().any(|&n| n < 2) {
            return Err(FormError::InvalidGrid(format!("need at least 2 cells per axis, got {dims:?}")));
        }
        if spacing.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
            return Err(FormError::InvalidGrid(format!("spacing must be positive, got {spacing:?}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(FormError::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { dims, spacing, origin })
    }

    /// `n³` cells covering `[0, 1]³`.
    pub fn unit_cube(n: usize) -> Result<Self, FormError> {
        let h = 1.0 / n as f64;
        Self::new([n; 3], [h; 3], [0.0; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> Vector3<f64> {
        Vector3::from(self.origin)
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn vertex_dims(&self) -> [usize; 3] {
        [self.dims[0] + 1, self.dims[1] + 1, self.dims[2] + 1]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_dims().iter().product()
    }

    pub fn vertex_index(&self, p: [usize; 3]) -> usize {
        let [n0, n1, _] = self.vertex_dims();
        p[0] + n0 * (p[1] + n1 * p[2])
    }

    pub fn vertex_coords(&self, idx: usize) -> [usize; 3] {
        let [n0, n1, _] = self.vertex_dims();
        [idx % n0, (idx / n0) % n1, idx / (n0 * n1)]
    }

    pub fn point(&self, p: [usize; 3]) -> Vector3<f64> {
        Vector3::from_fn(|a, _| self.origin[a] + p[a] as f64 * self.spacing[a])
    }

    pub fn vertex_point(&self, idx: usize) -> Vector3<f64> {
        self.point(self.vertex_coords(idx))
    }

    pub fn points(&self) -> Vec<Vector3<f64>> {
        (0..self.n_vertices()).map(|v| self.vertex_point(v)).collect()
    }

    pub fn is_boundary(&self, p: [usize; 3]) -> bool {
        (0..3).any(|a| p[a] == 0 || p[a] == self.dims[a])
    }

    /// Trapezoid-rule volume weight of a vertex.
    pub fn trapezoid_weight(&self, p: [usize; 3]) -> f64 {
        (0..3)
            .map(|a| {
                let end = p[a] == 0 || p[a] == self.dims[a];
                self.spacing[a] * if end { 0.5 } else { 1.0 }
            })
            .product()
    }

    /// Weighted sum `Σ w_v f(v)` approximating a volume integral.
    pub fn integrate_volume(&self, f: impl Fn(usize) -> f64 + Sync) -> f64 {
        // Fixed chunking keeps the reduction order independent of the thread count.
        let n = self.n_vertices();
        let partial: Vec<f64> = (0..n.div_ceil(4096))
            .into_par_iter()
            .map(|c| (c * 4096..((c + 1) * 4096).min(n)).map(|v| self.trapezoid_weight(self.vertex_coords(v)) * f(v)).sum())
            .collect();
        partial.iter().sum()
    }

    /// Axes spanned by a `k`-cell with orientation axis `a`. Edges are labelled
    /// by their direction, faces by their normal.
    pub fn spans(k: usize, axis: usize, b: usize) -> bool {
        match k {
            0 => false,
            1 => b == axis,
            2 => b != axis,
            _ => true,
        }
    }

    pub fn n_axes(k: usize) -> usize {
        if k == 1 || k == 2 {
            3
        } else {
            1
        }
    }

    pub fn cell_shape(&self, k: usize, axis: usize) -> [usize; 3] {
        std::array::from_fn(|b| self.dims[b] + 1 - usize::from(Self::spans(k, axis, b)))
    }

    fn block_offset(&self, k: usize, axis: usize) -> usize {
        (0..axis).map(|a| self.cell_shape(k, a).iter().product::<usize>()).sum()
    }

    pub fn cell_count(&self, k: usize) -> usize {
        (0..Self::n_axes(k)).map(|a| self.cell_shape(k, a).iter().product::<usize>()).sum()
    }

    /// Linear index of the `k`-cell with lowest corner `p`, or `None` if the
    /// cell leaves the grid.
    pub fn cell_index(&self, k: usize, axis: usize, p: [usize; 3]) -> Option<usize> {
        if k > 3 || axis >= Self::n_axes(k) {
            return None;
        }
        let s = self.cell_shape(k, axis);
        if (0..3).any(|b| p[b] >= s[b]) {
            return None;
        }
        Some(self.block_offset(k, axis) + p[0] + s[0] * (p[1] + s[1] * p[2]))
    }

    /// Inverse of [`cell_index`](Self::cell_index).
    pub fn cell_at(&self, k: usize, idx: usize) -> Option<(usize, [usize; 3])> {
        let mut rest = idx;
        for axis in 0..Self::n_axes(k) {
            let s = self.cell_shape(k, axis);
            let count: usize = s.iter().product();
            if rest < count {
                return Some((axis, [rest % s[0], (rest / s[0]) % s[1], rest / (s[0] * s[1])]));
            }
            rest -= count;
        }
        None
    }

    /// First (lowest) and last (highest) vertex of a cell.
    pub fn cell_corners(k: usize, axis: usize, p: [usize; 3]) -> ([usize; 3], [usize; 3]) {
        let top = std::array::from_fn(|b| p[b] + usize::from(Self::spans(k, axis, b)));
        (p, top)
    }

    /// Signed boundary of a `k`-cell (k ≥ 1) as `(axis, corner, sign)` of
    /// `(k-1)`-cells.
    pub fn cell_boundary(k: usize, axis: usize, p: [usize; 3]) -> Vec<(usize, [usize; 3], i8)> {
        match k {
            1 => vec![(0, shift(p, axis), 1), (0, p, -1)],
            2 => {
                let (t1, t2) = face_tangents(axis);
                vec![(t1, p, 1), (t2, shift(p, t1), 1), (t1, shift(p, t2), -1), (t2, p, -1)]
            }
            3 => (0..3).flat_map(|a| [(a, shift(p, a), 1), (a, p, -1)]).collect(),
            _ => Vec::new(),
        }
    }

    /// Second-order finite-difference derivative along `axis` of a
    /// vertex-collocated field: central in the interior, one-sided at the ends.
    pub fn partial<V: FieldValue>(&self, f: &[V], axis: usize) -> Vec<V> {
        assert_eq!(f.len(), self.n_vertices(), "field does not match grid");
        let n = self.dims[axis];
        let inv2h = 0.5 / self.spacing[axis];
        let stride = match axis {
            0 => 1,
            1 => self.dims[0] + 1,
            _ => (self.dims[0] + 1) * (self.dims[1] + 1),
        };
        (0..f.len())
            .into_par_iter()
            .map(|v| {
                let i = self.vertex_coords(v)[axis];
                if i == 0 {
                    ((f[v + stride] - f[v]) * 4.0 - (f[v + 2 * stride] - f[v])) * inv2h
                } else if i == n {
                    ((f[v] - f[v - stride]) * 4.0 - (f[v] - f[v - 2 * stride])) * inv2h
                } else {
                    (f[v + stride] - f[v - stride]) * inv2h
                }
            })
            .collect()
    }
}
