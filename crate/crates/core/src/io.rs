//! Field exchange: six-column CSV for forms and cochains, legacy VTK for
//! plotting.
//!
//! Every CSV row is `cell,i,j,k,c1,...,c6`. The cell label names the cell
//! type of a cochain (`vertex`, `edge1..3`, `face1..3`, `cube`) or the form
//! slot of a vertex-sampled field (`dx1` is stored as `edge1`, `dx2∧dx3` as
//! `face1`), and `i,j,k` is the lowest vertex of the cell.

use std::io::{Read, Write};

use nalgebra::Vector3;
use thiserror::Error;

use crate::forms::{n_components, BodyGrid, Cochain, FieldValue, FormError, SmoothForm};
use crate::kinematics::{Configuration, KinematicsError};
use crate::lie_euclid::{exp_so3, CoMotor, Motor};

pub const CSV_HEADER: &str = "cell,i,j,k,c1,c2,c3,c4,c5,c6";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("expected header {CSV_HEADER:?}, found {0:?}")]
    Header(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{missing} of {expected} entries missing")]
    Incomplete { missing: usize, expected: usize },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Values stored in the six CSV columns.
pub trait SixColumns: FieldValue {
    fn columns(&self) -> [f64; 6];
    fn from_columns(c: [f64; 6]) -> Self;
}

impl SixColumns for Motor {
    fn columns(&self) -> [f64; 6] {
        self.to_array()
    }

    fn from_columns(c: [f64; 6]) -> Self {
        Motor::from_array(c)
    }
}

impl SixColumns for CoMotor {
    fn columns(&self) -> [f64; 6] {
        self.to_array()
    }

    fn from_columns(c: [f64; 6]) -> Self {
        CoMotor::from_array(c)
    }
}

/// Label of the `axis`-th cell type of degree `k`.
pub fn cell_label(k: usize, axis: usize) -> &'static str {
    match (k, axis) {
        (0, _) => "vertex",
        (1, 0) => "edge1",
        (1, 1) => "edge2",
        (1, _) => "edge3",
        (2, 0) => "face1",
        (2, 1) => "face2",
        (2, _) => "face3",
        _ => "cube",
    }
}

fn parse_label(label: &str) -> Option<(usize, usize)> {
    Some(match label {
        "vertex" => (0, 0),
        "edge1" => (1, 0),
        "edge2" => (1, 1),
        "edge3" => (1, 2),
        "face1" => (2, 0),
        "face2" => (2, 1),
        "face3" => (2, 2),
        "cube" => (3, 0),
        _ => return None,
    })
}

fn write_row<W: Write>(w: &mut W, label: &str, p: [usize; 3], c: [f64; 6]) -> std::io::Result<()> {
    write!(w, "{label},{},{},{}", p[0], p[1], p[2])?;
    for x in c {
        write!(w, ",{x:e}")?;
    }
    writeln!(w)
}

pub fn write_form_csv<W: Write, V: SixColumns>(w: &mut W, form: &SmoothForm<V>) -> std::io::Result<()> {
    let g = form.grid();
    writeln!(w, "{CSV_HEADER}")?;
    for c in 0..n_components(form.degree()) {
        let label = cell_label(form.degree(), c);
        for v in 0..g.n_vertices() {
            write_row(w, label, g.vertex_coords(v), form.value(v, c).columns())?;
        }
    }
    Ok(())
}

pub fn write_cochain_csv<W: Write, V: SixColumns>(w: &mut W, cochain: &Cochain<V>) -> std::io::Result<()> {
    let g = cochain.grid();
    let k = cochain.degree();
    writeln!(w, "{CSV_HEADER}")?;
    for (idx, value) in cochain.values().iter().enumerate() {
        let (axis, p) = g.cell_at(k, idx).expect("index within the cell count");
        write_row(w, cell_label(k, axis), p, value.columns())?;
    }
    Ok(())
}

struct Row {
    line: usize,
    degree: usize,
    axis: usize,
    p: [usize; 3],
    c: [f64; 6],
}

fn read_rows<R: Read>(r: R) -> Result<Vec<Row>, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(r);
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec?.iter().collect::<Vec<_>>().join(","),
        None => String::new(),
    };
    if header != CSV_HEADER {
        return Err(IoError::Header(header));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec?;
        let line_no = rec.position().map_or(0, |p| p.line() as usize);
        let err = |reason: String| IoError::Parse { line: line_no, reason };
        if rec.len() != 10 {
            return Err(err(format!("expected 10 fields, found {}", rec.len())));
        }
        let (degree, axis) = parse_label(&rec[0]).ok_or_else(|| err(format!("unknown cell type {:?}", &rec[0])))?;
        let mut p = [0; 3];
        for a in 0..3 {
            let f = &rec[1 + a];
            p[a] = f.parse().map_err(|e| err(format!("index {f:?}: {e}")))?;
        }
        let mut c = [0.0f64; 6];
        for a in 0..6 {
            let f = &rec[4 + a];
            c[a] = f.parse().map_err(|e| err(format!("value {f:?}: {e}")))?;
            if !c[a].is_finite() {
                return Err(err(format!("non-finite value {f:?}")));
            }
        }
        rows.push(Row { line: line_no, degree, axis, p, c });
    }
    Ok(rows)
}

/// Reads a vertex-sampled form of the given degree; every slot at every
/// vertex must appear exactly once.
pub fn read_form_csv<R: Read, V: SixColumns>(r: R, grid: BodyGrid, degree: usize) -> Result<SmoothForm<V>, IoError> {
    if degree > 3 {
        return Err(FormError::BadDegree(degree).into());
    }
    let n = grid.n_vertices();
    let slots = n_components(degree);
    let mut comps: Vec<Vec<Option<V>>> = vec![vec![None; n]; slots];
    for row in read_rows(r)? {
        let err = |reason: String| IoError::Parse { line: row.line, reason };
        if row.degree != degree {
            return Err(err(format!("cell type of degree {} in a degree {degree} field", row.degree)));
        }
        if (0..3).any(|a| row.p[a] > grid.dims()[a]) {
            return Err(err(format!("vertex {:?} outside the grid", row.p)));
        }
        let slot = &mut comps[row.axis][grid.vertex_index(row.p)];
        if slot.is_some() {
            return Err(err(format!("duplicate entry at {:?}", row.p)));
        }
        *slot = Some(V::from_columns(row.c));
    }
    let missing = comps.iter().flatten().filter(|x| x.is_none()).count();
    if missing > 0 {
        return Err(IoError::Incomplete { missing, expected: n * slots });
    }
    let comps = comps.into_iter().map(|c| c.into_iter().flatten().collect()).collect();
    Ok(SmoothForm::new(grid, degree, comps)?)
}

pub fn read_cochain_csv<R: Read, V: SixColumns>(r: R, grid: BodyGrid, degree: usize) -> Result<Cochain<V>, IoError> {
    if degree > 3 {
        return Err(FormError::BadDegree(degree).into());
    }
    let count = grid.cell_count(degree);
    let mut data: Vec<Option<V>> = vec![None; count];
    for row in read_rows(r)? {
        let err = |reason: String| IoError::Parse { line: row.line, reason };
        if row.degree != degree {
            return Err(err(format!("cell type of degree {} in a degree {degree} cochain", row.degree)));
        }
        let idx = grid
            .cell_index(degree, row.axis, row.p)
            .ok_or_else(|| err(format!("cell {:?} outside the grid", row.p)))?;
        if data[idx].is_some() {
            return Err(err(format!("duplicate entry at {:?}", row.p)));
        }
        data[idx] = Some(V::from_columns(row.c));
    }
    let missing = data.iter().filter(|x| x.is_none()).count();
    if missing > 0 {
        return Err(IoError::Incomplete { missing, expected: count });
    }
    Ok(Cochain::new(grid, degree, data.into_iter().flatten().collect())?)
}

/// Configuration from a vertex CSV holding the placement `y` in `c1..c3` and
/// the rotation vector of `Q` in `c4..c6`.
pub fn read_configuration_csv<R: Read>(r: R, grid: BodyGrid) -> Result<Configuration, IoError> {
    let form: SmoothForm<Motor> = read_form_csv(r, grid, 0)?;
    let (y, q) = form.component(0).iter().map(|m| (m.u, exp_so3(&m.phi))).unzip();
    Ok(Configuration::new(grid, y, q)?)
}

/// Legacy ASCII VTK with one scalar array per slot and column, named
/// `{name}_{cell}_{column}`.
pub fn write_vtk<W: Write, V: SixColumns>(w: &mut W, name: &str, form: &SmoothForm<V>) -> std::io::Result<()> {
    let g = form.grid();
    let [nx, ny, nz] = g.vertex_dims();
    let o: Vector3<f64> = g.origin();
    let h = g.spacing();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{name}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {nx} {ny} {nz}")?;
    writeln!(w, "ORIGIN {:e} {:e} {:e}", o[0], o[1], o[2])?;
    writeln!(w, "SPACING {:e} {:e} {:e}", h[0], h[1], h[2])?;
    writeln!(w, "POINT_DATA {}", g.n_vertices())?;
    for c in 0..n_components(form.degree()) {
        let columns: Vec<[f64; 6]> = form.component(c).iter().map(SixColumns::columns).collect();
        for col in 0..6 {
            writeln!(w, "SCALARS {name}_{}_{} double 1", cell_label(form.degree(), c), col + 1)?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for row in &columns {
                writeln!(w, "{:e}", row[col])?;
            }
        }
    }
    Ok(())
}
