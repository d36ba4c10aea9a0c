//! Linear micropolar elastostatics on a box with Dirichlet data on the whole
//! boundary.
//!
//! With `U = (u, φ)` at each vertex the strain is `E = Σ_k G_k ∂_k U + Z U`
//! and equilibrium reads `(−Σ_k ∂_k G_kᵀ + Zᵀ) C E = F`. The operator is
//! discretised with second-order central differences on the interior
//! vertices. For symmetric `C` the assembled matrix is symmetric.

use nalgebra::{DMatrix, DVector, Matrix6, SMatrix, Vector3, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{Trig6, TrigField};
use crate::constitutive::{apply_law, StiffnessOperator};
use crate::forms::BodyGrid;
use crate::kinematics::{infinitesimal_strain, DisplacementField, KinematicsError};
use crate::levi_civita;
use crate::lie_euclid::{CoMotor, Motor};
use crate::mechanics::{LoadState, MechanicsError, StressState};

/// Relative residual at which conjugate gradients stop.
pub const CG_TOLERANCE: f64 = 1e-10;
/// Largest system handed to the dense factorisation.
pub const DIRECT_LIMIT: usize = 2000;

const CHUNK: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("stiffness is not positive definite (margin {0:e})")]
    NotPositiveDefinite(f64),
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {:e})", history.last().copied().unwrap_or(f64::NAN))]
    NotConverged { iterations: usize, history: Vec<f64> },
    #[error("matrix is singular")]
    Singular,
    #[error("system of {0} unknowns exceeds the dense limit")]
    TooLarge(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("grid has no interior vertices")]
    NoInterior,
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    ConjugateGradient,
}

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col = Vec::with_capacity(nnz);
        let mut val = Vec::with_capacity(nnz);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (c, v) in r {
                col.push(c);
                val.push(v);
            }
            row_ptr.push(col.len());
        }
        Self { n, row_ptr, col, val }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self, SolverError> {
        if !m.is_square() {
            return Err(SolverError::Shape(format!("{}×{} is not square", m.nrows(), m.ncols())));
        }
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j as u32, m[(i, j)])).collect())
            .collect();
        Ok(Self::from_rows(rows))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows((0..n).map(|i| vec![(i as u32, 1.0)]).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().zip(&self.val[r]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.val[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).into_par_iter().map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `max |A_ij − A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Fixed chunks make the reduction order independent of the thread count.
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    partial.iter().sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
pub fn solve_cg(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, usize), SolverError> {
    let n = a.dim();
    if b.len() != n {
        return Err(SolverError::Shape(format!("rhs has {} entries for {n} unknowns", b.len())));
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let diag = a.diagonal();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return Err(SolverError::Singular);
    }
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    let max_iter = 10 * n.max(1);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            history.push(norm(&r) / b_norm);
            return Err(SolverError::NotConverged { iterations: it, history });
        }
        let step = rz / pap;
        x.par_iter_mut().zip(&p).for_each(|(x, p)| *x += step * p);
        r.par_iter_mut().zip(&ap).for_each(|(r, q)| *r -= step * q);
        let rel = norm(&r) / b_norm;
        history.push(rel);
        if rel < CG_TOLERANCE {
            log::debug!("conjugate gradients converged in {it} iterations");
            return Ok((x, it));
        }
        z.par_iter_mut().zip(&r).zip(&inv).for_each(|((z, r), d)| *z = r * d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    Err(SolverError::NotConverged { iterations: max_iter, history })
}

/// Dense LU with partial pivoting.
pub fn solve_direct(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = a.dim();
    if n > DIRECT_LIMIT {
        return Err(SolverError::TooLarge(n));
    }
    if b.len() != n {
        return Err(SolverError::Shape(format!("rhs has {} entries for {n} unknowns", b.len())));
    }
    let dense = a.to_dense();
    let scale = dense.amax();
    let lu = dense.lu();
    let u = lu.u();
    if scale == 0.0 || (0..n).any(|i| u[(i, i)].abs() <= 1e-13 * scale) {
        return Err(SolverError::Singular);
    }
    let x = lu.solve(&DVector::from_column_slice(b)).ok_or(SolverError::Singular)?;
    Ok(x.as_slice().to_vec())
}

pub fn solve_linear(a: &CsrMatrix, b: &[f64], method: Method) -> Result<Vec<f64>, SolverError> {
    match method {
        Method::Direct => solve_direct(a, b),
        Method::ConjugateGradient => solve_cg(a, b).map(|(x, _)| x),
    }
}

/// `G_k`: maps `∂_k U` into the packed strain slots.
fn gradient_map(k: usize) -> SMatrix<f64, 18, 6> {
    let mut g = SMatrix::<f64, 18, 6>::zeros();
    for j in 0..3 {
        g[(3 * k + j, j)] = 1.0;
        g[(9 + 3 * k + j, 3 + j)] = 1.0;
    }
    g
}

/// `Z`: the zeroth-order part `ε_ij ∋ −ε_ijk φ_k`.
fn twist_map() -> SMatrix<f64, 18, 6> {
    let mut z = SMatrix::<f64, 18, 6>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                z[(3 * i + j, 3 + k)] = -levi_civita(i, j, k);
            }
        }
    }
    z
}

/// Constant-coefficient stencil of the discrete operator as
/// `(offset, 6×6 block)` pairs.
fn stencil(c: &StiffnessOperator, h: [f64; 3]) -> Vec<([isize; 3], Matrix6<f64>)> {
    let cm = c.matrix();
    let g: Vec<_> = (0..3).map(gradient_map).collect();
    let z = twist_map();
    let k_block = |a: usize, b: usize| -> Matrix6<f64> { g[a].transpose() * cm * g[b] };
    let mut out: Vec<([isize; 3], Matrix6<f64>)> = Vec::new();
    let mut push = |off: [isize; 3], m: Matrix6<f64>| match out.iter_mut().find(|(o, _)| *o == off) {
        Some((_, acc)) => *acc += m,
        None => out.push((off, m)),
    };
    let unit = |a: usize, s: isize| {
        let mut o = [0isize; 3];
        o[a] = s;
        o
    };
    push([0; 3], z.transpose() * cm * z);
    for a in 0..3 {
        let kaa = k_block(a, a) * (1.0 / (h[a] * h[a]));
        push([0; 3], kaa * 2.0);
        push(unit(a, 1), -kaa);
        push(unit(a, -1), -kaa);
        let b_a = g[a].transpose() * cm * z;
        let first = (b_a.transpose() - b_a) * (0.5 / h[a]);
        push(unit(a, 1), first);
        push(unit(a, -1), -first);
        for b in a + 1..3 {
            let cross = (k_block(a, b) + k_block(b, a)) * (-0.25 / (h[a] * h[b]));
            for (sa, sb, s) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                let mut o = [0isize; 3];
                o[a] = sa;
                o[b] = sb;
                push(o, cross * s);
            }
        }
    }
    out.sort_by_key(|(o, _)| (o[2], o[1], o[0]));
    out
}

/// Pure-Dirichlet elastostatics problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ElastostaticsProblem {
    grid: BodyGrid,
    c: StiffnessOperator,
    loads: LoadState,
    dirichlet: DisplacementField,
}

impl ElastostaticsProblem {
    /// `dirichlet` is read on boundary vertices only.
    pub fn new(
        c: StiffnessOperator,
        loads: LoadState,
        dirichlet: DisplacementField,
    ) -> Result<Self, SolverError> {
        let margin = c.pd_margin();
        if !(margin > 0.0) {
            return Err(SolverError::NotPositiveDefinite(margin));
        }
        let grid = *loads.grid();
        if *dirichlet.grid() != grid {
            return Err(SolverError::Shape("loads and boundary data live on different grids".into()));
        }
        if grid.dims().iter().any(|&n| n < 2) {
            return Err(SolverError::NoInterior);
        }
        Ok(Self { grid, c, loads, dirichlet })
    }

    pub fn grid(&self) -> &BodyGrid {
        &self.grid
    }

    pub fn stiffness(&self) -> &StiffnessOperator {
        &self.c
    }

    pub fn loads(&self) -> &LoadState {
        &self.loads
    }

    pub fn dirichlet(&self) -> &DisplacementField {
        &self.dirichlet
    }
}

/// Assembled system over the interior unknowns.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    interior: Vec<usize>,
    grid: BodyGrid,
    boundary: DisplacementField,
}

impl LinearSystem {
    /// Grid vertex of each unknown block, in unknown order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Field with the boundary data and the interior values `x`.
    pub fn field(&self, x: &[f64]) -> DisplacementField {
        let mut u = self.boundary.u().to_vec();
        let mut phi = self.boundary.phi().to_vec();
        for (blk, &v) in self.interior.iter().enumerate() {
            u[v] = Vector3::new(x[6 * blk], x[6 * blk + 1], x[6 * blk + 2]);
            phi[v] = Vector3::new(x[6 * blk + 3], x[6 * blk + 4], x[6 * blk + 5]);
        }
        DisplacementField::new(self.grid, u, phi).expect("grid-sized fields")
    }
}

pub fn assemble(p: &ElastostaticsProblem) -> LinearSystem {
    let g = p.grid;
    let [nx, ny, nz] = g.dims();
    let sten = stencil(&p.c, g.spacing());
    let (ix, iy) = (nx - 1, ny - 1);
    let block_of = |q: [usize; 3]| -> Option<usize> {
        let inside = (0..3).all(|a| q[a] >= 1 && q[a] < g.dims()[a]);
        inside.then(|| (q[0] - 1) + ix * ((q[1] - 1) + iy * (q[2] - 1)))
    };
    let interior: Vec<usize> = (1..nz)
        .flat_map(|k| (1..ny).flat_map(move |j| (1..nx).map(move |i| [i, j, k])))
        .map(|q| g.vertex_index(q))
        .collect();
    let rows: Vec<(Vec<Vec<(u32, f64)>>, [f64; 6])> = interior
        .par_iter()
        .map(|&v| {
            let pv = g.vertex_coords(v);
            let mut rows = vec![Vec::with_capacity(6 * sten.len()); 6];
            let load = p.loads.comotor(v).to_array();
            let mut rhs = load;
            for (off, m) in &sten {
                let q = std::array::from_fn(|a| (pv[a] as isize + off[a]) as usize);
                match block_of(q) {
                    Some(blk) => {
                        for (r, row) in rows.iter_mut().enumerate() {
                            for cidx in 0..6 {
                                let val = m[(r, cidx)];
                                if val != 0.0 {
                                    row.push(((6 * blk + cidx) as u32, val));
                                }
                            }
                        }
                    }
                    None => {
                        let w = Vector6::from(p.dirichlet.motor(g.vertex_index(q)).to_array());
                        let shift = m * w;
                        for r in 0..6 {
                            rhs[r] -= shift[r];
                        }
                    }
                }
            }
            (rows, rhs)
        })
        .collect();
    let mut a_rows = Vec::with_capacity(6 * interior.len());
    let mut b = Vec::with_capacity(6 * interior.len());
    for (r, rhs) in rows {
        a_rows.extend(r);
        b.extend(rhs);
    }
    LinearSystem { a: CsrMatrix::from_rows(a_rows), b, interior, grid: g, boundary: p.dirichlet.clone() }
}

/// Assembles and solves, returning the full displacement field.
pub fn solve(p: &ElastostaticsProblem, method: Method) -> Result<DisplacementField, SolverError> {
    let sys = assemble(p);
    let x = solve_linear(&sys.a, &sys.b, method)?;
    Ok(sys.field(&x))
}

/// Direct for small systems, conjugate gradients otherwise.
pub fn auto_method(grid: &BodyGrid) -> Method {
    let [nx, ny, nz] = grid.dims();
    if 6 * (nx - 1) * (ny - 1) * (nz - 1) <= DIRECT_LIMIT {
        Method::Direct
    } else {
        Method::ConjugateGradient
    }
}

/// Stress of a displacement field through the constitutive law.
pub fn reconstruct_stress(c: &StiffnessOperator, d: &DisplacementField) -> StressState {
    apply_law(c, &infinitesimal_strain(d))
}

/// Analytic displacement presets on the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `u = a + b × x`, `φ = b`.
    Rigid,
    /// `u_j = sin πx₁ sin πx₂ sin πx₃`, `φ = 0`.
    Sine,
    /// Independent trigonometric products in every component of `u` and `φ`.
    Full,
}

impl Preset {
    pub fn field(self) -> Trig6 {
        use std::f64::consts::PI;
        match self {
            Preset::Rigid => {
                let (a, b) = ([0.3, -0.2, 0.5], [0.1, 0.4, -0.3]);
                let u = |i: usize| {
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    let mut lin = [0.0; 3];
                    lin[k] = b[j];
                    lin[j] = -b[k];
                    TrigField::affine(a[i], lin)
                };
                Trig6([u(0), u(1), u(2), TrigField::constant(b[0]), TrigField::constant(b[1]), TrigField::constant(b[2])])
            }
            Preset::Sine => {
                let s = || TrigField::sine_product(1.0, [PI; 3]);
                Trig6([s(), s(), s(), TrigField::zero(), TrigField::zero(), TrigField::zero()])
            }
            Preset::Full => {
                let waves = [[1.0, 1.0, 1.0], [2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0], [2.0, 2.0, 1.0], [1.0, 2.0, 2.0]];
                let amps = [1.0, -0.7, 0.5, 0.8, -0.6, 0.4];
                Trig6(std::array::from_fn(|c| {
                    let k = waves[c].map(|w: f64| w * PI);
                    TrigField::sine_product(amps[c], k) + TrigField::sine(0.2 * amps[c], [k[1], k[2], k[0]], 0.3 * c as f64)
                }))
            }
        }
    }
}

/// Closed-form body loads `(−Σ_k ∂_k G_kᵀ + Zᵀ) C (Σ_m G_m ∂_m + Z) U`.
pub fn manufactured_loads(c: &StiffnessOperator, u: &Trig6) -> Trig6 {
    let cm = c.matrix();
    let g: Vec<_> = (0..3).map(gradient_map).collect();
    let z = twist_map();
    let du: Vec<Trig6> = (0..3).map(|k| u.partial(k)).collect();
    let combine = |terms: Vec<(f64, &TrigField)>| {
        let mut f = TrigField::zero();
        for (w, t) in terms {
            if w != 0.0 {
                f += t.clone() * w;
            }
        }
        f
    };
    let strain: Vec<TrigField> = (0..18)
        .map(|s| {
            let mut terms = Vec::new();
            for r in 0..6 {
                for (k, gk) in g.iter().enumerate() {
                    terms.push((gk[(s, r)], &du[k].0[r]));
                }
                terms.push((z[(s, r)], &u.0[r]));
            }
            combine(terms)
        })
        .collect();
    let stress: Vec<TrigField> =
        (0..18).map(|s| combine((0..18).map(|t| (cm[(s, t)], &strain[t])).collect())).collect();
    let d_stress: Vec<Vec<TrigField>> = (0..3).map(|k| stress.iter().map(|f| f.partial(k)).collect()).collect();
    Trig6(std::array::from_fn(|r| {
        let mut terms = Vec::new();
        for s in 0..18 {
            for (k, gk) in g.iter().enumerate() {
                terms.push((-gk[(s, r)], &d_stress[k][s]));
            }
            terms.push((z[(s, r)], &stress[s]));
        }
        combine(terms)
    }))
}

/// One grid of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmsRow {
    pub n: usize,
    pub h: f64,
    pub l2_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmsReport {
    pub rows: Vec<MmsRow>,
    pub order: f64,
}

/// Least-squares slope of `log e` against `log h`.
pub fn observed_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len().min(e.len()) as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = h.iter().zip(e).map(|(h, e)| (h.ln(), e.ln())).unzip();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Manufactured-solution problem for `preset` on the unit cube with `n`
/// cells per side.
pub fn mms_problem(c: &StiffnessOperator, preset: Preset, n: usize) -> Result<ElastostaticsProblem, SolverError> {
    let grid = BodyGrid::unit_cube(n).map_err(|e| SolverError::Shape(e.to_string()))?;
    let exact = preset.field();
    let load = manufactured_loads(c, &exact);
    let loads = LoadState::from_fn(grid, |x| CoMotor::from_array(load.eval(x)));
    let dirichlet = DisplacementField::from_fn(grid, |x| Motor::from_array(exact.eval(x)));
    ElastostaticsProblem::new(c.clone(), loads, dirichlet)
}

/// Solves the preset on each grid and reports errors and the observed order.
pub fn mms_verify(c: &StiffnessOperator, preset: Preset, grids: &[usize]) -> Result<MmsReport, SolverError> {
    let exact = preset.field();
    let mut rows = Vec::new();
    for &n in grids {
        let p = mms_problem(c, preset, n)?;
        let g = *p.grid();
        let d = solve(&p, auto_method(&g))?;
        let err = |v: usize| {
            let e = Motor::from_array(exact.eval(&g.vertex_point(v)));
            (d.motor(v) - e).amax()
        };
        let l2 = g.integrate_volume(|v| err(v).powi(2)).sqrt();
        let max = (0..g.n_vertices()).map(err).fold(0.0, f64::max);
        log::info!("mms {preset:?} n={n}: L2 {l2:e}, max {max:e}");
        rows.push(MmsRow { n, h: g.max_spacing(), l2_error: l2, max_error: max });
    }
    let order = if rows.len() >= 2 {
        observed_order(&rows.iter().map(|r| r.h).collect::<Vec<_>>(), &rows.iter().map(|r| r.l2_error).collect::<Vec<_>>())
    } else {
        f64::NAN
    };
    Ok(MmsReport { rows, order })
}

/// Relative Betti defect `|⟨U₁, F₂⟩ − ⟨U₂, F₁⟩| / max` for two load cases
/// under homogeneous boundary data.
pub fn reciprocity_defect(
    c: &StiffnessOperator,
    f1: &LoadState,
    f2: &LoadState,
    method: Method,
) -> Result<f64, SolverError> {
    let g = *f1.grid();
    let solve_for = |f: &LoadState| solve(&ElastostaticsProblem::new(c.clone(), f.clone(), DisplacementField::zeros(g))?, method);
    let (u1, u2) = (solve_for(f1)?, solve_for(f2)?);
    let work = |u: &DisplacementField, f: &LoadState| {
        g.integrate_volume(|v| crate::lie_euclid::pair(&f.comotor(v), &u.motor(v)))
    };
    let (w12, w21) = (work(&u1, f2), work(&u2, f1));
    let scale = w12.abs().max(w21.abs());
    Ok(if scale == 0.0 { 0.0 } else { (w12 - w21).abs() / scale })
}
