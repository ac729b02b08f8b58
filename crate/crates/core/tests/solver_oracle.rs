mod common;

use bisac_core::socp::{solve_real, SolverSettings, SolverState};
use common::{dual_grid_optimum, fitted_dual_bound, random_subproblem, unconstrained_subproblem};

#[test]
fn small_instances_match_dual_grid_search() {
    for seed in 0..4 {
        let data = random_subproblem(seed);
        let sol = solve_real(&data, &SolverSettings::default());
        assert_eq!(sol.status.state, SolverState::Optimal, "seed {seed}");
        assert!(data.max_violation(&sol.x) <= 1e-9 * data.radius_sq.max(1.0));
        let reference = dual_grid_optimum(&data);
        let scale = reference.abs().max(1.0);
        // Weak duality: every dual value bounds the feasible objectives.
        assert!(sol.objective <= reference + 1e-9 * scale);
        let err = (sol.objective - reference).abs() / scale;
        assert!(err <= 1e-3, "seed {seed}: solver {} vs grid {reference}", sol.objective);
        let certified = fitted_dual_bound(&data, &sol.x);
        assert!((certified - sol.objective).abs() <= 1e-7 * scale, "seed {seed}");
    }
}

#[test]
fn unconstrained_instances_hit_the_stationary_point() {
    for seed in 0..5 {
        let (data, x_star) = unconstrained_subproblem(seed);
        let sol = solve_real(&data, &SolverSettings { tol: 1e-10, max_iter: 200 });
        assert_eq!(sol.status.state, SolverState::Optimal);
        assert!((&sol.x - &x_star).norm() <= 1e-8 * x_star.norm().max(1.0), "seed {seed}");
    }
}
