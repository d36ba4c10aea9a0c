use cosserat_core::analytic::{AnalyticForm, Trig6};
use cosserat_core::forms::BodyGrid;
use cosserat_core::kinematics::DisplacementField;
use cosserat_core::lie_euclid::Motor;
use cosserat_core::mechanics::{boundary_traction, virtual_work_residual_with, Face, LoadState, StressState};
use cosserat_core::solver::observed_order;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GRIDS: [usize; 3] = [8, 16, 32];

fn equilibrium(sigma: &AnalyticForm, n: usize) -> (StressState, LoadState) {
    let g = BodyGrid::unit_cube(n).unwrap();
    let div = sigma.exact_covariant_d_star(g).unwrap();
    let s = StressState::from_form(&sigma.sample_comotor(g)).unwrap();
    let (f, m) = div.component(0).iter().map(|w| (-w.f, -w.m)).unzip();
    let loads = LoadState::new(g, f, m).unwrap();
    (s, loads)
}

fn order(errors: &[f64]) -> f64 {
    let h: Vec<f64> = GRIDS.iter().map(|&n| 1.0 / n as f64).collect();
    observed_order(&h, errors)
}

#[test]
fn global_force_and_moment_balance_converge() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let sigma = AnalyticForm::random(&mut rng, 2, 2, 2.0);
    let modes: Vec<(Vector3<f64>, Vector3<f64>)> = (0..6)
        .map(|k| {
            let e = Vector3::ith(k % 3, 1.0);
            if k < 3 { (e, Vector3::zeros()) } else { (Vector3::zeros(), e) }
        })
        .collect();
    let mut worst = vec![0.0f64; GRIDS.len()];
    for (i, &n) in GRIDS.iter().enumerate() {
        let (s, loads) = equilibrium(&sigma, n);
        let tractions: Vec<_> = Face::all().into_iter().map(|f| boundary_traction(&s, f)).collect();
        for &(a, b) in &modes {
            let xi = DisplacementField::rigid(*s.grid(), a, b);
            let r = virtual_work_residual_with(&s, &loads, &tractions, &xi).unwrap();
            worst[i] = worst[i].max(r.abs());
        }
    }
    let p = order(&worst);
    assert!((p - 2.0).abs() <= 0.2, "order {p}, residuals {worst:?}");
}

#[test]
fn virtual_work_converges_over_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let sigma = AnalyticForm::random(&mut rng, 2, 2, 2.0);
    let fields: Vec<Trig6> = (0..20).map(|_| Trig6::random(&mut rng, 2, 2.0)).collect();
    let mut rms = Vec::new();
    for &n in &GRIDS {
        let (s, loads) = equilibrium(&sigma, n);
        let tractions: Vec<_> = Face::all().into_iter().map(|f| boundary_traction(&s, f)).collect();
        let sum: f64 = fields
            .iter()
            .map(|t| {
                let xi = DisplacementField::from_fn(*s.grid(), |x| Motor::from_array(t.eval(x)));
                virtual_work_residual_with(&s, &loads, &tractions, &xi).unwrap().powi(2)
            })
            .sum();
        rms.push((sum / fields.len() as f64).sqrt());
    }
    let p = order(&rms);
    assert!((p - 2.0).abs() <= 0.2, "order {p}, residuals {rms:?}");
}
