//! Solves the Signorini problem with boundary data taken from the homogeneous
//! profile and compares the solution with it under refinement.
//!
//!     cargo run --release --example solve_profile -- 0.5

use thin_obstacle::coefficients::{ProblemDescription, ProblemSpec, ScalarSpec};
use thin_obstacle::grid::build_grid;
use thin_obstacle::operator::assemble_energy;
use thin_obstacle::oracle::{exact_solution, OracleKind};
use thin_obstacle::solver::{complementarity_report, solve_psor_with, suggested_omega, PsorOptions};

fn main() -> thin_obstacle::Result<()> {
    let a: f64 = std::env::args().nth(1).map_or(0.0, |s| s.parse().expect("a must be a number"));
    let exact = exact_solution(OracleKind::SignoriniProfile, a)?;
    println!("a = {a}, homogeneity {:.3}", exact.kappa);
    println!("{:>6} {:>12} {:>7} {:>10} {:>8}", "1/h", "Linf error", "order", "min gap", "sweeps");
    let mut prev: Option<f64> = None;
    for m in [16, 32, 64, 128] {
        let h = 1.0 / m as f64;
        let grid = build_grid(1, 1.0, h, h, a)?;
        let desc = ProblemDescription {
            boundary: ScalarSpec::oracle(OracleKind::SignoriniProfile),
            ..Default::default()
        };
        let problem = ProblemSpec::build(&grid, a, &desc)?;
        let form = assemble_energy(&grid, &problem)?;
        let opts = PsorOptions { omega: suggested_omega(&grid), tol: 1e-10, ..Default::default() };
        let sol = solve_psor_with(&form, &problem, &opts)?;
        let err = (0..grid.node_count())
            .map(|i| (sol.values[i] - exact.value(&grid.node_point(i))).abs())
            .fold(0.0, f64::max);
        let order = prev.map_or(String::from("-"), |e| format!("{:.2}", (e / err).log2()));
        let comp = complementarity_report(&sol, &problem);
        println!("{m:>6} {err:>12.3e} {order:>7} {:>10.1e} {:>8}", comp.min_gap_max, sol.iterations);
        prev = Some(err);
    }
    Ok(())
}
