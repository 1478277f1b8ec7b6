//! Penalized solves along a decreasing ε ladder approach the constrained
//! solution. The obstacle is a cap pushed against by a source.

use thin_obstacle::coefficients::{ProblemDescription, ProblemSpec, ScalarSpec, Term};
use thin_obstacle::grid::build_grid;
use thin_obstacle::operator::assemble_energy;
use thin_obstacle::solver::{
    complementarity_report, solve_penalized_with, solve_psor_with, suggested_omega, PenaltyOptions, PsorOptions,
};

fn main() -> thin_obstacle::Result<()> {
    let a = 0.3;
    let h = 1.0 / 64.0;
    let grid = build_grid(1, 1.0, h, h, a)?;
    let desc = ProblemDescription {
        obstacle: ScalarSpec::Polynomial {
            terms: vec![Term { c: 0.1, x: vec![0], y: 0.0 }, Term { c: -1.0, x: vec![2], y: 0.0 }],
        },
        source: ScalarSpec::constant(2.0),
        ..Default::default()
    };
    let problem = ProblemSpec::build(&grid, a, &desc)?;
    let form = assemble_energy(&grid, &problem)?;
    let psor = solve_psor_with(&form, &problem, &PsorOptions { omega: suggested_omega(&grid), ..Default::default() })?;

    println!("{:>8} {:>12} {:>12} {:>8}", "eps", "|U-U_psor|", "max(psi-U)", "newton");
    let mut warm = None;
    for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
        let opts = PenaltyOptions { initial: warm.take(), ..Default::default() };
        let pen = solve_penalized_with(&form, &problem, eps, 1e-10, &opts)?;
        let d = pen.values.iter().zip(&psor.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let below = complementarity_report(&pen, &problem).feasibility;
        println!("{eps:>8.0e} {d:>12.3e} {below:>12.3e} {:>8}", pen.iterations);
        warm = Some(pen.values);
    }
    Ok(())
}
