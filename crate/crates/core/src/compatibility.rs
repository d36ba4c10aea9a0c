//! Integrability of strain and the defect densities that obstruct it.
//!
//! The incompatibility of an infinitesimal strain `e` is the motor-valued
//! 2-form `J = De`. Its translational part is the dislocation density `T` and
//! its rotational part the disclination density `Ω`. On the cochain path the
//! Burgers circuit of `e` around a loop equals the flux of `J` through any
//! cap of that loop, exactly.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::forms::{
    covariant_d, face_tangents, wedge_bracket, wedge_matrix, BodyGrid, Chain, Cochain, FlatConnection,
    FormError, SmoothForm,
};
use crate::kinematics::{finite_strain, Configuration, StrainState};
use crate::levi_civita;
use crate::lie_euclid::{EuclideanMotion, Motor};

/// Smallest admissible `|det θ|` of a Cartan coframe.
pub const COFRAME_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompatibilityError {
    #[error("coframe is singular at vertex {vertex} (det {det:e})")]
    SingularCoframe { vertex: usize, det: f64 },
    #[error("impulse position {0:?} is not an interior face")]
    ImpulsePosition([usize; 2]),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Motor-valued 2-form `J`. Component `c` is the value on `A_c`; its `u`
/// part carries `T` and its `phi` part carries `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectDensity {
    form: SmoothForm<Motor>,
}

impl DefectDensity {
    pub fn new(form: SmoothForm<Motor>) -> Result<Self, FormError> {
        if form.degree() != 2 {
            return Err(FormError::BadDegree(form.degree()));
        }
        Ok(Self { form })
    }

    pub fn form(&self) -> &SmoothForm<Motor> {
        &self.form
    }

    pub fn grid(&self) -> &BodyGrid {
        self.form.grid()
    }

    /// `T_ijk` at vertex `v`: form indices `i, j`, value index `k`.
    pub fn dislocation(&self, v: usize, i: usize, j: usize, k: usize) -> f64 {
        self.slot(v, i, j, |m| m.u[k])
    }

    /// `Ω_ijk` at vertex `v`.
    pub fn disclination(&self, v: usize, i: usize, j: usize, k: usize) -> f64 {
        self.slot(v, i, j, |m| m.phi[k])
    }

    fn slot(&self, v: usize, i: usize, j: usize, f: impl Fn(&Motor) -> f64) -> f64 {
        (0..3).map(|c| levi_civita(i, j, c) * f(&self.form.value(v, c))).sum()
    }

    pub fn amax(&self) -> f64 {
        self.form.amax()
    }
}

/// `De` assembled from its components:
/// `T_abc = ∂_a ε_bc − ∂_b ε_ac + ε_caq τ_bq − ε_cbq τ_aq` and
/// `Ω_abc = ∂_a τ_bc − ∂_b τ_ac`.
pub fn strain_incompatibility(e: &StrainState) -> DefectDensity {
    let g = *e.grid();
    let d_eps: Vec<_> = (0..3).map(|a| g.partial(e.eps(), a)).collect();
    let d_tau: Vec<_> = (0..3).map(|a| g.partial(e.tau(), a)).collect();
    let form = SmoothForm::from_vertex_fn(g, 2, |v, face| {
        let (a, b) = face_tangents(face);
        let tau = &e.tau()[v];
        let t = Vector3::from_fn(|c, _| {
            let mut s = d_eps[a][v][(b, c)] - d_eps[b][v][(a, c)];
            for q in 0..3 {
                s += levi_civita(c, a, q) * tau[(b, q)] - levi_civita(c, b, q) * tau[(a, q)];
            }
            s
        });
        let w = Vector3::from_fn(|c, _| d_tau[a][v][(b, c)] - d_tau[b][v][(a, c)]);
        Motor::new(t, w)
    });
    DefectDensity { form }
}

/// `‖DJ‖∞`, which vanishes for every `J` of the form `De`.
pub fn bianchi_check(j: &DefectDensity) -> f64 {
    covariant_d(&j.form, &FlatConnection::new(*j.grid())).expect("2-form").amax()
}

/// Motor-valued 1-form `η` whose translational part is an invertible coframe.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanConnection {
    eta: SmoothForm<Motor>,
}

impl CartanConnection {
    pub fn new(eta: SmoothForm<Motor>) -> Result<Self, CompatibilityError> {
        if eta.degree() != 1 {
            return Err(FormError::BadDegree(eta.degree()).into());
        }
        for v in 0..eta.grid().n_vertices() {
            let theta = Matrix3::from_rows(&[
                eta.value(v, 0).u.transpose(),
                eta.value(v, 1).u.transpose(),
                eta.value(v, 2).u.transpose(),
            ]);
            let det = theta.determinant();
            if !(det.abs() > COFRAME_TOL) {
                return Err(CompatibilityError::SingularCoframe { vertex: v, det });
            }
        }
        Ok(Self { eta })
    }

    pub fn flat(grid: BodyGrid) -> Self {
        Self { eta: FlatConnection::new(grid).smooth() }
    }

    /// The pulled-back Maurer-Cartan form `ω + E(ψ)` of a configuration.
    pub fn pullback(cfg: &Configuration) -> Result<Self, CompatibilityError> {
        let omega = FlatConnection::new(*cfg.grid()).smooth();
        Self::new(omega.add(&finite_strain(cfg)))
    }

    pub fn form(&self) -> &SmoothForm<Motor> {
        &self.eta
    }

    pub fn grid(&self) -> &BodyGrid {
        self.eta.grid()
    }
}

/// Curvature `Θ = dη + η∧η`.
pub fn cartan_curvature(eta: &CartanConnection) -> SmoothForm<Motor> {
    let f = &eta.eta;
    let ww = wedge_matrix(f, f).expect("1-forms");
    f.d().expect("1-form").zip_map(&ww, |a, b| *a + b.to_motor())
}

/// `‖dE + η∧E + E∧η + E∧E + Θ‖∞`, the curvature of `η + E`.
pub fn finite_compatibility_residual(
    e: &SmoothForm<Motor>,
    eta: &CartanConnection,
) -> Result<f64, CompatibilityError> {
    if e.degree() != 1 {
        return Err(FormError::BadDegree(e.degree()).into());
    }
    let twist = wedge_bracket(&eta.eta, e)?;
    let quad = wedge_matrix(e, e)?.map(|m| m.to_motor());
    let r = e.d()?.add(&twist).add(&quad).add(&cartan_curvature(eta));
    Ok(r.amax())
}

/// Edge cochain of a vertex strain field: each edge carries the trapezoid
/// integral of the globally transported strain, mapped back by the transport
/// at the edge's last vertex.
pub fn strain_cochain(e: &StrainState) -> Cochain<Motor> {
    let g = *e.grid();
    let form = e.to_form();
    let h = g.spacing();
    let global = |p: [usize; 3], a: usize| {
        EuclideanMotion::translation(g.point(p)).adjoint(&form.value(g.vertex_index(p), a))
    };
    Cochain::from_cells(g, 1, |a, p| {
        let (_, top) = BodyGrid::cell_corners(1, a, p);
        let mean = (global(p, a) + global(top, a)) * (0.5 * h[a]);
        EuclideanMotion::translation(g.point(top)).inverse().adjoint(&mean)
    })
}

/// Burgers circuit of `e` around `loop_chain` and the flux of `De` through
/// `cap`, both in the global frame.
pub fn burgers_circuit(e: &Cochain<Motor>, loop_chain: &Chain, cap: &Chain) -> Result<(Motor, Motor), FormError> {
    let grid = e.grid();
    if e.degree() != 1 {
        return Err(FormError::BadDegree(e.degree()));
    }
    if loop_chain.degree() != 1 {
        return Err(FormError::BadDegree(loop_chain.degree()));
    }
    if cap.degree() != 2 {
        return Err(FormError::BadDegree(cap.degree()));
    }
    if !loop_chain.is_closed(grid) {
        return Err(FormError::OpenChain);
    }
    if cap.boundary(grid) != *loop_chain {
        return Err(FormError::CapMismatch);
    }
    let circuit = e.transported().integrate(loop_chain)?;
    let flux = e.covariant_d(&FlatConnection::new(*grid))?.transported().integrate(cap)?;
    Ok((circuit, flux))
}

/// Strain cochain whose incompatibility is `v₁` on the `A₃` faces with lowest
/// corner `(i0, j0, k)` for every `k`, and zero elsewhere.
pub fn impulse_defect(grid: BodyGrid, i0: usize, j0: usize) -> Result<Cochain<Motor>, CompatibilityError> {
    let [nx, ny, _] = grid.dims();
    if i0 >= nx || j0 >= ny {
        return Err(CompatibilityError::ImpulsePosition([i0, j0]));
    }
    let v1 = Motor::translation_generator(0);
    Ok(Cochain::from_cells(grid, 1, |a, p| if a == 1 && p[1] == j0 && p[0] > i0 { v1 } else { Motor::zero() }))
}

/// Boundary loop of the rectangle of `A₃` faces `[i0, i1) × [j0, j1)` at
/// height `k`, together with that rectangle as its cap.
pub fn rectangle_loop(
    grid: &BodyGrid,
    (i0, i1): (usize, usize),
    (j0, j1): (usize, usize),
    k: usize,
) -> Result<(Chain, Chain), FormError> {
    let faces = (i0..i1).flat_map(|i| (j0..j1).map(move |j| (2, [i, j, k], 1)));
    let cap = Chain::from_cells(grid, 2, faces)?;
    Ok((cap.boundary(grid), cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{AnalyticForm, TrigField};
    use crate::kinematics::{infinitesimal_strain, DisplacementField};
    use crate::lie_euclid::exp_so3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_strain(g: BodyGrid, seed: u64) -> StrainState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let form = AnalyticForm::random(&mut rng, 1, 2, 2.0).sample_motor(g);
        StrainState::from_form(&form).unwrap()
    }

    #[test]
    fn explicit_components_match_covariant_derivative() {
        let g = BodyGrid::new([6, 5, 7], [0.2, 0.25, 0.15], [0.1, -0.3, 0.2]).unwrap();
        let e = random_strain(g, 5);
        let j = strain_incompatibility(&e);
        let de = covariant_d(&e.to_form(), &FlatConnection::new(g)).unwrap();
        assert!(j.form().sub(&de).amax() < 1e-12);
    }

    #[test]
    fn density_is_antisymmetric_in_form_indices() {
        let g = BodyGrid::unit_cube(4).unwrap();
        let j = strain_incompatibility(&random_strain(g, 6));
        for v in [0, 17, 63] {
            for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 0, 1)] {
                assert_eq!(j.dislocation(v, a, b, c), -j.dislocation(v, b, a, c));
                assert_eq!(j.disclination(v, a, b, c), -j.disclination(v, b, a, c));
            }
        }
    }

    #[test]
    fn simple_strains() {
        let g = BodyGrid::unit_cube(6).unwrap();
        let skew = Matrix3::new(0.0, 1.0, -2.0, -1.0, 0.0, 0.5, 2.0, -0.5, 0.0);
        let n = g.n_vertices();
        let e = StrainState::new(g, vec![skew; n], vec![Matrix3::zeros(); n]).unwrap();
        assert!(strain_incompatibility(&e).amax() < 1e-12);

        // τ₃₃ = x₁² leaves ∂₁τ₃₃ as the single nonzero slot.
        let tau: Vec<_> = g
            .points()
            .iter()
            .map(|x| Matrix3::from_fn(|i, j| if i == 2 && j == 2 { x[0] * x[0] } else { 0.0 }))
            .collect();
        let e = StrainState::new(g, vec![Matrix3::zeros(); n], tau).unwrap();
        let j = strain_incompatibility(&e);
        for v in 0..n {
            let x = g.vertex_point(v);
            for (a, b, c) in itertools(3) {
                let expect = if (a, b, c) == (0, 2, 2) {
                    2.0 * x[0]
                } else if (a, b, c) == (2, 0, 2) {
                    -2.0 * x[0]
                } else {
                    0.0
                };
                assert!((j.disclination(v, a, b, c) - expect).abs() < 1e-12);
            }
        }
    }

    fn itertools(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
        (0..n).flat_map(move |a| (0..n).flat_map(move |b| (0..n).map(move |c| (a, b, c))))
    }

    #[test]
    fn bianchi_identity_on_image_of_d() {
        let g = BodyGrid::unit_cube(5).unwrap();
        assert_eq!(bianchi_check(&DefectDensity::new(SmoothForm::zeros(g, 2)).unwrap()), 0.0);
        let j = strain_incompatibility(&random_strain(g, 7));
        assert!(bianchi_check(&j) < 1e-9);
        let bad = SmoothForm::from_fn(g, 2, |x, c| if c == 0 { Motor::basis(0) * x[0] } else { Motor::zero() });
        assert!((bianchi_check(&DefectDensity::new(bad).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_and_perturbed_curvature() {
        let g = BodyGrid::unit_cube(4).unwrap();
        assert!(cartan_curvature(&CartanConnection::flat(g)).amax() < 1e-12);

        let a = Motor::new(Vector3::new(0.1, -0.2, 0.3), Vector3::new(0.4, 0.5, -0.6));
        let omega = FlatConnection::new(g).smooth();
        let pert = SmoothForm::from_fn(g, 1, |_, c| if c == 0 { a } else { Motor::zero() });
        let eta = CartanConnection::new(omega.add(&pert)).unwrap();
        let expect = wedge_matrix(&omega, &pert).unwrap().zip_map(&wedge_matrix(&pert, &omega).unwrap(), |x, y| {
            (*x + *y).to_motor()
        });
        assert!(cartan_curvature(&eta).sub(&expect).amax() < 1e-12);
        assert!(expect.amax() > 0.1);

        let e = SmoothForm::zeros(g, 1);
        let res = finite_compatibility_residual(&e, &eta).unwrap();
        assert!((res - cartan_curvature(&eta).amax()).abs() < 1e-15);
    }

    #[test]
    fn singular_coframe_is_rejected() {
        let g = BodyGrid::unit_cube(2).unwrap();
        let eta = SmoothForm::from_fn(g, 1, |_, c| if c < 2 { Motor::translation_generator(c) } else { Motor::zero() });
        assert!(matches!(CartanConnection::new(eta), Err(CompatibilityError::SingularCoframe { .. })));
    }

    fn twisted_configuration(g: BodyGrid) -> Configuration {
        Configuration::from_fn(g, |x| {
            let y = x + Vector3::new(0.1 * (x[1] * 2.0).sin(), 0.2 * x[0] * x[2], 0.1 * (x[0] + x[1]).cos());
            let q = exp_so3(&Vector3::new(0.3 * x[2].sin(), 0.2 * x[0], -0.25 * (x[1] * x[0]).cos()));
            (y, q)
        })
        .unwrap()
    }

    #[test]
    fn pulled_back_form_is_flat_at_second_order() {
        let res = |n| {
            let g = BodyGrid::unit_cube(n).unwrap();
            let cfg = twisted_configuration(g);
            let e = finite_strain(&cfg);
            finite_compatibility_residual(&e, &CartanConnection::flat(g)).unwrap()
        };
        let (r1, r2) = (res(8), res(16));
        let order = (r1 / r2).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn impulse_circuit_equals_unit_flux() {
        let g = BodyGrid::unit_cube(6).unwrap();
        let e = impulse_defect(g, 2, 3).unwrap();
        let de = e.covariant_d(&FlatConnection::new(g)).unwrap();
        for idx in 0..g.cell_count(2) {
            let (axis, p) = g.cell_at(2, idx).unwrap();
            let expect = if axis == 2 && p[0] == 2 && p[1] == 3 { Motor::basis(0) } else { Motor::zero() };
            assert_eq!(de.value(idx), expect);
        }
        let (lp, cap) = rectangle_loop(&g, (2, 3), (3, 4), 1).unwrap();
        let (circuit, flux) = burgers_circuit(&e, &lp, &cap).unwrap();
        assert_eq!(circuit, Motor::basis(0));
        assert_eq!(flux, circuit);

        let (big, big_cap) = rectangle_loop(&g, (0, 5), (1, 5), 4).unwrap();
        assert_eq!(burgers_circuit(&e, &big, &big_cap).unwrap().0, circuit);
        let (miss, miss_cap) = rectangle_loop(&g, (3, 5), (0, 6), 2).unwrap();
        assert_eq!(burgers_circuit(&e, &miss, &miss_cap).unwrap().0, Motor::zero());
    }

    #[test]
    fn chain_preconditions() {
        let g = BodyGrid::unit_cube(4).unwrap();
        let e = impulse_defect(g, 1, 1).unwrap();
        let (lp, cap) = rectangle_loop(&g, (1, 2), (1, 2), 0).unwrap();
        let open = Chain::from_cells(&g, 1, [(0, [0, 0, 0], 1), (1, [1, 0, 0], 1)]).unwrap();
        assert_eq!(burgers_circuit(&e, &open, &cap), Err(FormError::OpenChain));
        let (_, other_cap) = rectangle_loop(&g, (0, 2), (1, 2), 0).unwrap();
        assert_eq!(burgers_circuit(&e, &lp, &other_cap), Err(FormError::CapMismatch));
        assert!(impulse_defect(g, 4, 0).is_err());
    }

    #[test]
    fn integrable_strain_has_small_circuit() {
        let circuit = |n: usize| {
            let g = BodyGrid::unit_cube(n).unwrap();
            let u = TrigField::sine(0.3, [1.0, 2.0, 0.5], 0.2);
            let d = DisplacementField::from_fn(g, |x| {
                Motor::new(Vector3::new(u.eval(x), x[0] * x[1], 0.0), Vector3::new(0.0, 0.2 * x[2], u.eval(x)))
            });
            let e = strain_cochain(&infinitesimal_strain(&d));
            let (lp, cap) = rectangle_loop(&g, (1, n - 1), (1, n - 1), n / 2).unwrap();
            burgers_circuit(&e, &lp, &cap).unwrap().0.amax()
        };
        let (c1, c2) = (circuit(8), circuit(16));
        assert!(c1 < 1e-2 && c2 < c1 / 3.0, "{c1} {c2}");
    }

    #[test]
    fn homotopic_loops_with_integrable_background() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let g = BodyGrid::new([5, 5, 3], [1.0; 3], [0.0; 3]).unwrap();
        let values = (0..g.cell_count(0))
            .map(|_| Motor::from_array(std::array::from_fn(|_| f64::from(rng.gen_range(-4i32..=4)))))
            .collect();
        let f = Cochain::new(g, 0, values).unwrap();
        let conn = FlatConnection::new(g);
        let e = impulse_defect(g, 2, 2).unwrap().add(&f.covariant_d(&conn).unwrap());
        let (l1, c1) = rectangle_loop(&g, (2, 3), (2, 3), 1).unwrap();
        let (l2, c2) = rectangle_loop(&g, (1, 4), (0, 4), 1).unwrap();
        let (b1, f1) = burgers_circuit(&e, &l1, &c1).unwrap();
        let (b2, f2) = burgers_circuit(&e, &l2, &c2).unwrap();
        assert_eq!(b1, f1);
        assert_eq!(b2, f2);
        assert_eq!(b1, b2);
        assert_eq!(b1, Motor::basis(0));
    }
}
