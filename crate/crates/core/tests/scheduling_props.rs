mod support;

use nalgebra::{Complex, DMatrix, DVector};
use qsrgs_core::linalg::jacobi_svd;
use qsrgs_core::scheduling::{
    build_pseudo_commuting, stacked_sigma, sv_bounds, svd_reduced, verify_pseudo_commute, SchedulingFamily,
};
use rand::Rng;
use std::time::Instant;
use support::{numerical_rank, random_blocks, random_matrix, random_s};

#[test]
fn construction_pseudo_commutes() {
    let start = Instant::now();
    let worst = support::pseudo_commute_worst(7, 1000);
    assert!(worst <= 1e-10, "worst residual {worst:e}");
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

/// Projects a random `(Φ_u, Φ_y)` onto the solution set of `Φ_yᵀS = SΦ_u`.
fn random_commuting_pair(rng: &mut rand_chacha::ChaCha8Rng, s: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n_y, n_u) = s.shape();
    let unknowns = n_u * n_u + n_y * n_y;
    let map = |x: &DVector<f64>| {
        let pu = DMatrix::from_column_slice(n_u, n_u, &x.as_slice()[..n_u * n_u]);
        let py = DMatrix::from_column_slice(n_y, n_y, &x.as_slice()[n_u * n_u..]);
        let r = py.transpose() * s - s * pu;
        DVector::from_column_slice(r.as_slice())
    };
    let mut l = DMatrix::zeros(n_y * n_u, unknowns);
    for j in 0..unknowns {
        let mut e = DVector::zeros(unknowns);
        e[j] = 1.0;
        l.set_column(j, &map(&e));
    }
    // Row space of the map from the singular vectors of Lᵀ.
    let (u, sv, _) = jacobi_svd(&l.transpose());
    let tol = unknowns as f64 * f64::EPSILON * sv[0];
    let rank = sv.iter().filter(|&&v| v > tol).count();
    let basis = u.columns(0, rank);
    let x = DVector::from_fn(unknowns, |_, _| rng.random_range(-1.0..1.0));
    let x = &x - basis * (basis.transpose() * &x);
    (
        DMatrix::from_column_slice(n_u, n_u, &x.as_slice()[..n_u * n_u]),
        DMatrix::from_column_slice(n_y, n_y, &x.as_slice()[n_u * n_u..]),
    )
}

#[test]
fn commuting_pairs_have_the_block_pattern() {
    let mut rng = support::rng(8);
    for trial in 0..300 {
        let shapes = [(1, 1), (2, 3), (3, 2), (3, 3), (2, 2)];
        let (n_y, n_u) = shapes[trial % shapes.len()];
        let s = random_s(&mut rng, n_y, n_u);
        let (pu, py) = random_commuting_pair(&mut rng, &s);
        let fam = SchedulingFamily::constant(0, vec![0.0], pu.clone(), py.clone()).unwrap();
        let (ok, res) = verify_pseudo_commute(&fam, &s, 1e-12);
        assert!(ok, "projected pair residual {res:e}");
        let svd = svd_reduced(&s).unwrap();
        let rho = svd.rank;
        let zu = svd.v.transpose() * &pu * &svd.v;
        let zy = svd.u.transpose() * &py * &svd.u;
        assert!(zu.view((0, rho), (rho, n_u - rho)).amax() <= 1e-8);
        assert!(zy.view((0, rho), (rho, n_y - rho)).amax() <= 1e-8);
        let sigma = DMatrix::from_diagonal(&svd.sigma1);
        let sigma_inv = DMatrix::from_diagonal(&svd.sigma1.map(|v| 1.0 / v));
        let expect = &sigma_inv * zu.view((0, 0), (rho, rho)).transpose() * &sigma;
        assert!((zy.view((0, 0), (rho, rho)) - expect).amax() <= 1e-8);
    }
}

fn match_spectra(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

#[test]
fn square_full_rank_s_gives_similar_matrices() {
    let mut rng = support::rng(9);
    let grid: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
    for trial in 0..200 {
        let n = 1 + trial % 3;
        let s = random_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * 2.0;
        assert_eq!(numerical_rank(&s), n);
        let blocks = random_blocks(&mut rng, n, n, n, &grid, true);
        let fam = build_pseudo_commuting(1, &s, &blocks).unwrap();
        for (pu, py) in fam.phi_u().iter().zip(fam.phi_y()) {
            let ea: Vec<_> = pu.complex_eigenvalues().iter().copied().collect();
            let eb: Vec<_> = py.transpose().complex_eigenvalues().iter().copied().collect();
            let scale = pu.norm().max(1.0);
            assert!(match_spectra(&ea, &eb) <= 1e-8 * scale);
        }
    }
}

#[test]
fn stacked_sigma_trace_bound() {
    let mut rng = support::rng(10);
    let grid: Vec<f64> = (0..40).map(|k| k as f64 * 0.05).collect();
    for _ in 0..200 {
        let n_y = rng.random_range(1..=3);
        let n_u = rng.random_range(1..=3);
        let n_sub = rng.random_range(1..=4);
        let bank: Vec<SchedulingFamily> = (0..n_sub)
            .map(|i| {
                let s = random_s(&mut rng, n_y, n_u);
                let blocks = random_blocks(&mut rng, numerical_rank(&s), n_u, n_y, &grid, false);
                build_pseudo_commuting(i, &s, &blocks).unwrap()
            })
            .collect();
        let psi = stacked_sigma(&bank).unwrap();
        let bound: f64 = n_y as f64 * bank.iter().map(|f| sv_bounds(f).sigma_bar_y.powi(2)).sum::<f64>();
        assert!(psi * psi <= bound * (1.0 + 1e-12));
    }
}
