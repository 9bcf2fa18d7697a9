mod support;

#[test]
fn lyapunov_random_stable_systems() {
    let worst = support::solvers::lyapunov_worst(11, 500);
    assert!(worst <= 1e-9, "worst scaled residual {worst:e}");
}

#[test]
fn are_random_stabilizable_systems() {
    let worst = support::solvers::are_worst(12, 500);
    assert!(worst <= 1e-8, "worst scaled residual {worst:e}");
}
