use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thin_obstacle::coefficients::{ProblemDescription, ProblemSpec, ScalarSpec, Term};
use thin_obstacle::grid::build_grid;
use thin_obstacle::operator::{apply_operator, assemble_energy};
use thin_obstacle::solver::{complementarity_report, solve_penalized, solve_psor_with, suggested_omega, PsorOptions};

fn cap(c0: f64, c2: f64) -> ScalarSpec {
    ScalarSpec::Polynomial { terms: vec![Term { c: c0, x: vec![0], y: 0.0 }, Term { c: -c2, x: vec![2], y: 0.0 }] }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// The constrained solution is feasible, complementary, and no feasible
    /// perturbation lowers the discrete energy.
    #[test]
    fn psor_minimizes_over_the_feasible_set(
        a in 0.0f64..0.9,
        c0 in -0.2f64..0.3,
        c2 in 0.0f64..2.0,
        f in -2.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let h = 1.0 / 16.0;
        let grid = build_grid(1, 1.0, h, h, a).unwrap();
        let desc = ProblemDescription { obstacle: cap(c0, c2), source: ScalarSpec::constant(f), ..Default::default() };
        let problem = ProblemSpec::build(&grid, a, &desc).unwrap();
        let form = assemble_energy(&grid, &problem).unwrap();
        let opts = PsorOptions { omega: suggested_omega(&grid), tol: 1e-11, ..Default::default() };
        let sol = solve_psor_with(&form, &problem, &opts).unwrap();

        let rep = complementarity_report(&sol, &problem);
        prop_assert!(rep.feasibility <= 1e-12);
        prop_assert!(rep.min_gap_max <= 1e-9, "{rep:?}");

        let r = apply_operator(&form, &sol.values);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let mut phi = vec![0.0; form.len()];
            for i in 0..form.len() {
                if form.fixed[i] || rng.gen::<f64>() > 0.2 {
                    continue;
                }
                let mut v: f64 = rng.gen_range(-1.0..1.0);
                if grid.is_thin(i) && sol.values[i] - problem.psi[i] < 1e-3 {
                    v = v.abs();
                }
                phi[i] = v;
            }
            let t = 1e-3;
            let kphi: Vec<f64> = (0..form.len()).map(|i| if form.fixed[i] { 0.0 } else { form.row_dot(i, &phi) }).collect();
            let de: f64 = (0..form.len()).map(|i| phi[i] * (t * r[i] + 0.5 * t * t * kphi[i])).sum();
            prop_assert!(de >= -1e-13, "energy dropped by {de:e}");
        }
    }

    /// The penalized solution sits below the obstacle by at most O(ε) and
    /// approaches the constrained one.
    #[test]
    fn penalization_converges(a in 0.0f64..0.9, c0 in 0.0f64..0.3, c2 in 0.5f64..2.0) {
        let h = 1.0 / 16.0;
        let grid = build_grid(1, 1.0, h, h, a).unwrap();
        let desc = ProblemDescription { obstacle: cap(c0, c2), ..Default::default() };
        let problem = ProblemSpec::build(&grid, a, &desc).unwrap();
        let form = assemble_energy(&grid, &problem).unwrap();
        let psor = solve_psor_with(&form, &problem, &PsorOptions { tol: 1e-11, ..Default::default() }).unwrap();
        let mut last = f64::INFINITY;
        for &eps in &[1e-1, 1e-2, 1e-3] {
            let pen = solve_penalized(&form, &problem, eps, 1e-10).unwrap();
            let d = pen.values.iter().zip(&psor.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let below = complementarity_report(&pen, &problem).feasibility;
            prop_assert!(d < last, "eps {eps}: {d} vs {last}");
            prop_assert!(below <= 10.0 * eps, "eps {eps}: {below}");
            last = d;
        }
    }
}
