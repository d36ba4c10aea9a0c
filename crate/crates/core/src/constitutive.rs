//! Linear micropolar constitutive laws.
//!
//! Strain and stress are packed into 18-vectors: `ε_ij` (or `σ_ij`) at slot
//! `3i + j`, then `τ_ij` (or `χ_ij`) at slot `9 + 3i + j`. A stiffness
//! operator is an 18×18 matrix in this basis.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::StrainState;
use crate::lie_euclid::{orthogonality_defect, ORTHOGONALITY_TOL};
use crate::mechanics::StressState;

pub type Packed = SVector<f64, 18>;
pub type StiffnessMatrix = SMatrix<f64, 18, 18>;

/// Relative step of the energy-gradient finite differences.
pub const GRADIENT_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("constants do not fit the {class:?} class: {reason}")]
    Inconsistent { class: SymmetryClass, reason: String },
    #[error("stiffness lacks major symmetry (defect {0:e})")]
    Asymmetric(f64),
    #[error("transformation is not orthogonal (defect {0:e})")]
    NotOrthogonal(f64),
    #[error("strain path is not closed")]
    OpenPath,
    #[error("strain path needs at least two samples")]
    ShortPath,
    #[error("non-finite stiffness entry")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryClass {
    Isotropic,
    Hemitropic,
    Centrosymmetric,
    Anisotropic,
    Odd,
}

/// One antisymmetric entry pair `K_ab = k`, `K_ba = −k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OddEntry {
    pub a: usize,
    pub b: usize,
    pub k: f64,
}

/// Material constants. The translational moduli `λ, μ₁, μ₂` and the
/// coupling moduli `c₁, c₂, c₃` carry units of force per area, the
/// rotational moduli `α, β₁, β₂` units of force.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConstants {
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub mu1: f64,
    #[serde(default)]
    pub mu2: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta1: f64,
    #[serde(default)]
    pub beta2: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    #[serde(default)]
    pub c3: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub odd: Vec<OddEntry>,
    /// Full 18×18 matrix, rows first, for the anisotropic class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl MaterialConstants {
    pub fn isotropic(lambda: f64, mu1: f64, mu2: f64, alpha: f64, beta1: f64, beta2: f64) -> Self {
        Self { lambda, mu1, mu2, alpha, beta1, beta2, ..Self::default() }
    }

    pub fn with_coupling(self, c1: f64, c2: f64, c3: f64) -> Self {
        Self { c1, c2, c3, ..self }
    }
}

pub fn pack(eps: &Matrix3<f64>, tau: &Matrix3<f64>) -> Packed {
    Packed::from_fn(|s, _| if s < 9 { eps[(s / 3, s % 3)] } else { tau[((s - 9) / 3, (s - 9) % 3)] })
}

pub fn unpack(p: &Packed) -> (Matrix3<f64>, Matrix3<f64>) {
    (Matrix3::from_fn(|i, j| p[3 * i + j]), Matrix3::from_fn(|i, j| p[9 + 3 * i + j]))
}

/// `x λ δ_ij δ_kl + y δ_ik δ_jl + z δ_il δ_jk` written into the block whose
/// rows start at `r` and columns at `c`.
fn isotropic_block(m: &mut StiffnessMatrix, r: usize, c: usize, x: f64, y: f64, z: f64) {
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                for k in 0..3 {
                    m[(r + 4 * i, c + 4 * k)] += x;
                }
            }
            m[(r + 3 * i + j, c + 3 * i + j)] += y;
            m[(r + 3 * i + j, c + 3 * j + i)] += z;
        }
    }
}

/// Stiffness operator with its symmetry class.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessOperator {
    c: StiffnessMatrix,
    class: SymmetryClass,
}

impl StiffnessOperator {
    pub fn from_matrix(c: StiffnessMatrix, class: SymmetryClass) -> Result<Self, ConstitutiveError> {
        if c.iter().any(|x| !x.is_finite()) {
            return Err(ConstitutiveError::NonFinite);
        }
        Ok(Self { c, class })
    }

    pub fn identity() -> Self {
        Self { c: StiffnessMatrix::identity(), class: SymmetryClass::Anisotropic }
    }

    pub fn matrix(&self) -> &StiffnessMatrix {
        &self.c
    }

    pub fn class(&self) -> SymmetryClass {
        self.class
    }

    /// `C = Cᵀ` exactly as stored.
    pub fn is_hyperelastic(&self) -> bool {
        self.c == self.c.transpose()
    }

    pub fn asymmetry(&self) -> f64 {
        (self.c - self.c.transpose()).amax()
    }

    /// Smallest eigenvalue of the symmetric part; positive iff `⟨CE, E⟩ > 0`
    /// for every nonzero `E`.
    pub fn pd_margin(&self) -> f64 {
        let sym = (self.c + self.c.transpose()) * 0.5;
        let d = DMatrix::from_iterator(18, 18, sym.iter().copied());
        d.symmetric_eigenvalues().min()
    }

    /// The operator with both translation-rotation coupling blocks zeroed.
    pub fn centrosymmetric_part(&self) -> Self {
        let mut c = self.c;
        c.fixed_view_mut::<9, 9>(0, 9).fill(0.0);
        c.fixed_view_mut::<9, 9>(9, 0).fill(0.0);
        Self { c, class: SymmetryClass::Centrosymmetric }
    }

    pub fn coupling_norm(&self) -> f64 {
        self.c.fixed_view::<9, 9>(0, 9).amax().max(self.c.fixed_view::<9, 9>(9, 0).amax())
    }

    pub fn stress(&self, e: &Packed) -> Packed {
        self.c * e
    }

    /// `½⟨CE, E⟩`, defined for any `C`.
    pub fn energy(&self, e: &Packed) -> f64 {
        0.5 * e.dot(&(self.c * e))
    }
}

pub fn build_stiffness(k: &MaterialConstants, class: SymmetryClass) -> Result<StiffnessOperator, ConstitutiveError> {
    let inconsistent = |reason: &str| ConstitutiveError::Inconsistent { class, reason: reason.into() };
    let coupled = k.c1 != 0.0 || k.c2 != 0.0 || k.c3 != 0.0;
    let mut c = StiffnessMatrix::zeros();
    match class {
        SymmetryClass::Anisotropic => {
            let rows = k.matrix.as_ref().ok_or_else(|| inconsistent("missing matrix"))?;
            if rows.len() != 18 || rows.iter().any(|r| r.len() != 18) {
                return Err(inconsistent("matrix must be 18×18"));
            }
            c = StiffnessMatrix::from_fn(|i, j| rows[i][j]);
        }
        _ if k.matrix.is_some() => return Err(inconsistent("a full matrix is only allowed for the anisotropic class")),
        _ => {
            if matches!(class, SymmetryClass::Isotropic | SymmetryClass::Centrosymmetric) && coupled {
                return Err(inconsistent("coupling constants must vanish"));
            }
            if class != SymmetryClass::Odd && !k.odd.is_empty() {
                return Err(inconsistent("odd entries need the odd class"));
            }
            isotropic_block(&mut c, 0, 0, k.lambda, k.mu1, k.mu2);
            isotropic_block(&mut c, 9, 9, k.alpha, k.beta1, k.beta2);
            isotropic_block(&mut c, 0, 9, k.c1, k.c2, k.c3);
            isotropic_block(&mut c, 9, 0, k.c1, k.c2, k.c3);
            if class == SymmetryClass::Odd {
                if k.odd.is_empty() {
                    return Err(inconsistent("no odd entries"));
                }
                for e in &k.odd {
                    if e.a >= 18 || e.b >= 18 || e.a == e.b {
                        return Err(inconsistent("odd entry slots must be distinct and below 18"));
                    }
                    c[(e.a, e.b)] += e.k;
                    c[(e.b, e.a)] -= e.k;
                }
            }
        }
    }
    let op = StiffnessOperator::from_matrix(c, class)?;
    let margin = op.pd_margin();
    if margin <= 0.0 {
        log::warn!("{class:?} stiffness is not positive definite (margin {margin:e})");
    }
    Ok(op)
}

/// Pointwise `S = C E`.
pub fn apply_law(c: &StiffnessOperator, e: &StrainState) -> StressState {
    let (sigma, chi) = e
        .eps()
        .iter()
        .zip(e.tau())
        .map(|(eps, tau)| unpack(&c.stress(&pack(eps, tau))))
        .unzip();
    StressState::new(*e.grid(), sigma, chi).expect("same grid")
}

/// Stored energy density `½⟨CE, E⟩` at every vertex.
pub fn stored_energy(c: &StiffnessOperator, e: &StrainState) -> Result<Vec<f64>, ConstitutiveError> {
    if !c.is_hyperelastic() {
        return Err(ConstitutiveError::Asymmetric(c.asymmetry()));
    }
    Ok(e.eps().iter().zip(e.tau()).map(|(eps, tau)| c.energy(&pack(eps, tau))).collect())
}

/// Largest `|∂U/∂E − CE|` at one strain, by central differences of `U`.
pub fn energy_gradient_defect(c: &StiffnessOperator, e: &Packed) -> f64 {
    let s = c.stress(e);
    let h = GRADIENT_STEP * e.amax().max(1.0);
    (0..18)
        .map(|a| {
            let mut ep = *e;
            let mut em = *e;
            ep[a] += h;
            em[a] -= h;
            ((c.energy(&ep) - c.energy(&em)) / (2.0 * h) - s[a]).abs()
        })
        .fold(0.0, f64::max)
}

/// Relative gradient defect `max|∂U/∂E − S| / max|S|` over a strain field.
pub fn energy_gradient_check(c: &StiffnessOperator, e: &StrainState) -> f64 {
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (eps, tau) in e.eps().iter().zip(e.tau()) {
        let p = pack(eps, tau);
        defect = defect.max(energy_gradient_defect(c, &p));
        scale = scale.max(c.stress(&p).amax());
    }
    if scale == 0.0 { defect } else { defect / scale }
}

/// `(RᵀεR, det R · RᵀτR)`.
pub fn transform_strain(e: &Packed, r: &Matrix3<f64>) -> Packed {
    let (eps, tau) = unpack(e);
    pack(&(r.transpose() * eps * r), &(r.transpose() * tau * r * r.determinant()))
}

/// Largest `|U(E) − U(E_R)|` over a fixed sample of random strains.
pub fn material_symmetry_check(c: &StiffnessOperator, r: &Matrix3<f64>) -> Result<f64, ConstitutiveError> {
    let defect = orthogonality_defect(r);
    if !(defect <= ORTHOGONALITY_TOL) {
        return Err(ConstitutiveError::NotOrthogonal(defect));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    Ok((0..32)
        .map(|_| {
            let e = Packed::from_fn(|_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0));
            (c.energy(&e) - c.energy(&transform_strain(&e, r))).abs()
        })
        .fold(0.0, f64::max))
}

/// Work `∮⟨S, dE⟩` along a closed strain path by the trapezoid rule.
pub fn cycle_work(c: &StiffnessOperator, path: &[Packed]) -> Result<f64, ConstitutiveError> {
    let (first, last) = match (path.first(), path.last()) {
        (Some(f), Some(l)) if path.len() >= 2 => (f, l),
        _ => return Err(ConstitutiveError::ShortPath),
    };
    if (first - last).amax() > 1e-12 * first.amax().max(1.0) {
        return Err(ConstitutiveError::OpenPath);
    }
    Ok(path
        .windows(2)
        .map(|w| 0.5 * (c.stress(&w[0]) + c.stress(&w[1])).dot(&(w[1] - w[0])))
        .sum())
}

/// Counter-clockwise circle of radius `r` in the strain slots `(a, b)`,
/// sampled at `steps + 1` points with the last equal to the first.
pub fn circle_cycle(a: usize, b: usize, r: f64, steps: usize) -> Vec<Packed> {
    let mut path: Vec<Packed> = (0..steps)
        .map(|k| {
            let t = TAU * k as f64 / steps as f64;
            let mut e = Packed::zeros();
            e[a] += r * t.cos();
            e[b] += r * t.sin();
            e
        })
        .collect();
    if let Some(&first) = path.first() {
        path.push(first);
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::BodyGrid;
    use crate::lie_euclid::exp_so3;
    use nalgebra::Vector3;
    use rand::Rng;
    use std::f64::consts::PI;

    fn iso() -> MaterialConstants {
        MaterialConstants::isotropic(1.2, 2.0, 0.5, 0.7, 1.5, 0.3)
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        exp_so3(&Vector3::from_fn(|_, _| rng.gen_range(-3.0..3.0)))
    }

    fn random_packed(rng: &mut ChaCha8Rng) -> Packed {
        Packed::from_fn(|_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn pack_round_trip() {
        let eps = Matrix3::from_fn(|i, j| (3 * i + j) as f64);
        let tau = Matrix3::from_fn(|i, j| (9 + 3 * i + j) as f64);
        let p = pack(&eps, &tau);
        assert_eq!(p, Packed::from_fn(|s, _| s as f64));
        assert_eq!(unpack(&p), (eps, tau));
    }

    #[test]
    fn diagonal_isotropic_law() {
        let k = MaterialConstants::isotropic(0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        let c = build_stiffness(&k, SymmetryClass::Isotropic).unwrap();
        let (sigma, chi) = unpack(&c.stress(&pack(&Matrix3::identity(), &Matrix3::zeros())));
        assert_eq!(sigma, Matrix3::identity());
        assert_eq!(chi, Matrix3::zeros());
    }

    #[test]
    fn isotropic_components() {
        let k = iso();
        let c = build_stiffness(&k, SymmetryClass::Isotropic).unwrap();
        assert!(c.is_hyperelastic());
        assert!(c.pd_margin() > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let (eps, tau) = unpack(&random_packed(&mut rng));
        let (sigma, chi) = unpack(&c.stress(&pack(&eps, &tau)));
        let expect_s = Matrix3::identity() * k.lambda * eps.trace() + eps * k.mu1 + eps.transpose() * k.mu2;
        let expect_c = Matrix3::identity() * k.alpha * tau.trace() + tau * k.beta1 + tau.transpose() * k.beta2;
        assert!((sigma - expect_s).amax() < 1e-14);
        assert!((chi - expect_c).amax() < 1e-14);
    }

    #[test]
    fn class_consistency() {
        let hemi = iso().with_coupling(0.1, 0.2, 0.3);
        assert!(build_stiffness(&hemi, SymmetryClass::Isotropic).is_err());
        assert!(build_stiffness(&iso(), SymmetryClass::Anisotropic).is_err());
        assert!(build_stiffness(&iso(), SymmetryClass::Odd).is_err());
        let mut odd = iso();
        odd.odd.push(OddEntry { a: 0, b: 0, k: 1.0 });
        assert!(build_stiffness(&odd, SymmetryClass::Odd).is_err());
        odd.odd[0].b = 4;
        assert!(build_stiffness(&odd, SymmetryClass::Hemitropic).is_err());
        let c = build_stiffness(&odd, SymmetryClass::Odd).unwrap();
        assert!(!c.is_hyperelastic());
        assert_eq!(c.asymmetry(), 2.0);
    }

    #[test]
    fn centrosymmetric_projection_recovers_isotropic() {
        let hemi = build_stiffness(&iso().with_coupling(0.1, 0.2, 0.3), SymmetryClass::Hemitropic).unwrap();
        assert!(hemi.coupling_norm() > 0.0);
        let projected = hemi.centrosymmetric_part();
        assert_eq!(projected.coupling_norm(), 0.0);
        assert_eq!(projected.matrix(), build_stiffness(&iso(), SymmetryClass::Isotropic).unwrap().matrix());
    }

    #[test]
    fn apply_law_matches_index_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let c = StiffnessOperator::from_matrix(StiffnessMatrix::from_fn(|_, _| rng.gen_range(-1.0..1.0)), SymmetryClass::Anisotropic)
            .unwrap();
        let g = BodyGrid::unit_cube(2).unwrap();
        let n = g.n_vertices();
        let eps: Vec<Matrix3<f64>> = (0..n).map(|_| Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0))).collect();
        let tau: Vec<Matrix3<f64>> = (0..n).map(|_| Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0))).collect();
        let e = StrainState::new(g, eps.clone(), tau.clone()).unwrap();
        let s = apply_law(&c, &e);
        for v in 0..n {
            let strain = [eps[v], tau[v]];
            for a in 0..2 {
                for i in 0..3 {
                    for j in 0..3 {
                        let mut acc = 0.0;
                        for b in 0..2 {
                            for k in 0..3 {
                                for l in 0..3 {
                                    acc += c.matrix()[(9 * a + 3 * i + j, 9 * b + 3 * k + l)] * strain[b][(k, l)];
                                }
                            }
                        }
                        let got = if a == 0 { s.sigma()[v][(i, j)] } else { s.chi()[v][(i, j)] };
                        assert!((got - acc).abs() < 1e-13);
                    }
                }
            }
        }
        assert_eq!(apply_law(&c, &StrainState::zeros(g)).amax(), 0.0);
        let id = apply_law(&StiffnessOperator::identity(), &e);
        assert_eq!(id.sigma(), &eps[..]);
        assert_eq!(id.chi(), &tau[..]);
    }

    #[test]
    fn energy_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let a = StiffnessMatrix::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let sym = StiffnessOperator::from_matrix(a + a.transpose(), SymmetryClass::Anisotropic).unwrap();
        let g = BodyGrid::unit_cube(2).unwrap();
        let n = g.n_vertices();
        let eps: Vec<_> = (0..n).map(|_| Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0))).collect();
        let tau: Vec<_> = (0..n).map(|_| Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0))).collect();
        let e = StrainState::new(g, eps.clone(), tau.clone()).unwrap();
        assert!(energy_gradient_check(&sym, &e) < 1e-6);
        assert_eq!(energy_gradient_check(&sym, &StrainState::zeros(g)), 0.0);
        assert!(stored_energy(&sym, &StrainState::zeros(g)).unwrap().iter().all(|u| *u == 0.0));

        let doubled = StrainState::new(g, eps.iter().map(|m| m * 2.0).collect(), tau.iter().map(|m| m * 2.0).collect()).unwrap();
        let u1 = stored_energy(&sym, &e).unwrap();
        let u2 = stored_energy(&sym, &doubled).unwrap();
        for (x, y) in u1.iter().zip(&u2) {
            assert!((4.0 * x - y).abs() < 1e-12 * y.abs().max(1.0));
        }

        let asym = StiffnessOperator::from_matrix(a, SymmetryClass::Odd).unwrap();
        assert!(matches!(stored_energy(&asym, &e), Err(ConstitutiveError::Asymmetric(_))));
        assert!(energy_gradient_check(&asym, &e) > 1e-2);
    }

    #[test]
    fn gradient_defect_is_half_the_antisymmetric_part() {
        let mut c = StiffnessMatrix::identity();
        c[(2, 7)] = 0.8;
        let op = StiffnessOperator::from_matrix(c, SymmetryClass::Odd).unwrap();
        let e = Packed::from_fn(|s, _| if s == 7 { 1.0 } else { 0.0 });
        assert!((energy_gradient_defect(&op, &e) - 0.4).abs() < 1e-8);
    }

    #[test]
    fn isotropy_and_chirality() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let iso_c = build_stiffness(&iso(), SymmetryClass::Isotropic).unwrap();
        let hemi = build_stiffness(&iso().with_coupling(0.2, 0.3, -0.1), SymmetryClass::Hemitropic).unwrap();
        for _ in 0..20 {
            let r = random_rotation(&mut rng);
            assert!(material_symmetry_check(&iso_c, &r).unwrap() < 1e-10);
            assert!(material_symmetry_check(&iso_c, &(-r)).unwrap() < 1e-10);
            assert!(material_symmetry_check(&hemi, &r).unwrap() < 1e-10);
        }
        assert!(material_symmetry_check(&hemi, &(-Matrix3::identity())).unwrap() > 1e-3);
        let a = StiffnessMatrix::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let aniso = StiffnessOperator::from_matrix(a + a.transpose(), SymmetryClass::Anisotropic).unwrap();
        assert!(material_symmetry_check(&aniso, &random_rotation(&mut rng)).unwrap() > 1e-3);
        assert!(material_symmetry_check(&iso_c, &(Matrix3::identity() * 2.0)).is_err());
    }

    #[test]
    fn cycle_work_cases() {
        let sym = build_stiffness(&iso(), SymmetryClass::Isotropic).unwrap();
        let w = cycle_work(&sym, &circle_cycle(0, 13, 1.0, 1000)).unwrap();
        assert!(w.abs() < 1e-6);
        assert_eq!(cycle_work(&sym, &circle_cycle(0, 13, 0.0, 10)).unwrap(), 0.0);

        let mut k = iso();
        k.odd.push(OddEntry { a: 3, b: 5, k: 0.75 });
        let odd = build_stiffness(&k, SymmetryClass::Odd).unwrap();
        let (a, b, r) = (3, 5, 0.5);
        let m = odd.matrix();
        let expect = PI * r * r * (m[(b, a)] - m[(a, b)]);
        let w = cycle_work(&odd, &circle_cycle(a, b, r, 1000)).unwrap();
        assert!(((w - expect) / expect).abs() < 1e-4, "{w} {expect}");

        let mut open = circle_cycle(a, b, r, 10);
        open.pop();
        assert_eq!(cycle_work(&odd, &open), Err(ConstitutiveError::OpenPath));
        assert_eq!(cycle_work(&odd, &open[..1]), Err(ConstitutiveError::ShortPath));
    }
}
