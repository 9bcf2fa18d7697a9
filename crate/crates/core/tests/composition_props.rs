mod support;

use nalgebra::DMatrix;
use qsrgs_core::composition::compose_theorem1;
use qsrgs_core::linalg::{max_sym_eig, min_sym_eig};
use qsrgs_core::qsr::{QsrTriple, SpecialCase};
use qsrgs_core::scheduling::SchedulingFamily;
use rand::Rng;
use std::time::Instant;

#[test]
fn composed_supply_rates_are_sound() {
    let start = Instant::now();
    let worst = support::soundness_worst(31, 100, 10);
    assert!(worst >= -1e-6, "smallest supply prefix {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 120.0);
}

#[test]
fn scalar_scheduling_recovers_scalar_formulas() {
    let worst = support::base_case_worst(32, 200);
    assert!(worst <= 1e-12, "worst deviation {worst:e}");
}

#[test]
fn am_qm_inequality() {
    let mut rng = support::rng(33);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=8);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let sum: f64 = u.iter().sum();
        let sq: f64 = u.iter().map(|v| v * v).sum();
        assert!(sum * sum <= n as f64 * sq * (1.0 + 1e-14));
        let c = u[0];
        let lhs = (n as f64 * c).powi(2);
        assert!((lhs - n as f64 * n as f64 * c * c).abs() <= 1e-12 * lhs.max(1.0));
    }
}

fn osp_bank(scales: &[f64], eps: &[f64], n: usize) -> (Vec<QsrTriple>, Vec<SchedulingFamily>) {
    let grid: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
    let triples = eps
        .iter()
        .map(|&e| QsrTriple::special(SpecialCase::Osp { epsilon: e }, n).unwrap())
        .collect();
    let bank = scales
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let m = DMatrix::identity(n, n) * c;
            SchedulingFamily::constant(i + 1, grid.clone(), m.clone(), m).unwrap()
        })
        .collect();
    (triples, bank)
}

#[test]
fn osp_banks_compose_to_positive_semidefinite_r() {
    let mut rng = support::rng(34);
    let grid: Vec<f64> = (0..30).map(|k| k as f64 * 0.1).collect();
    for _ in 0..200 {
        let n = rng.random_range(1..=3);
        let n_sub = rng.random_range(1..=4);
        let triples: Vec<QsrTriple> = (0..n_sub)
            .map(|_| {
                QsrTriple::special(
                    SpecialCase::Osp {
                        epsilon: rng.random_range(0.05..3.0),
                    },
                    n,
                )
                .unwrap()
            })
            .collect();
        let bank: Vec<SchedulingFamily> = (0..n_sub)
            .map(|i| {
                let m0 = support::random_matrix(&mut rng, n, n);
                let m1 = support::random_matrix(&mut rng, n, n);
                let phi_y: Vec<DMatrix<f64>> = grid.iter().map(|&t| &m0 + &m1 * t.sin()).collect();
                let phi_u = phi_y.iter().map(|m| m.transpose()).collect();
                SchedulingFamily::new(i + 1, grid.clone(), phi_u, phi_y).unwrap()
            })
            .collect();
        let r = compose_theorem1(&triples, &bank).unwrap();
        let rr = r.composed.r();
        assert!(min_sym_eig(rr) >= -1e-12 * rr.norm().max(1.0));
    }
}

#[test]
fn osp_r_vanishes_only_for_matched_ratios() {
    // σ̄²/√ε equal across subsystems with equal ε: R = 0.
    let (t, b) = osp_bank(&[0.8, 0.8, 0.8], &[0.5, 0.5, 0.5], 2);
    let r = compose_theorem1(&t, &b).unwrap();
    assert!(max_sym_eig(r.composed.r()).abs() <= 1e-12);
    // Unequal ratios: R ≻ 0.
    let (t, b) = osp_bank(&[0.8, 1.3], &[0.5, 0.5], 2);
    let r = compose_theorem1(&t, &b).unwrap();
    assert!(min_sym_eig(r.composed.r()) > 1e-6);
    // Matched ratios but different ε: the ε_min bound is not tight, R ≻ 0.
    let eps = [0.25, 1.0];
    let scales: Vec<f64> = eps.iter().map(|e: &f64| e.sqrt().sqrt()).collect();
    let (t, b) = osp_bank(&scales, &eps, 1);
    let r = compose_theorem1(&t, &b).unwrap();
    assert!(r.composed.r()[(0, 0)] > 1e-6);
}
