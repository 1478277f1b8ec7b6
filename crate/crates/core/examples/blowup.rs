//! Almgren blow-ups at the origin of a non-homogeneous solution. The
//! rescalings settle on the homogeneous profile as the scale shrinks.

use thin_obstacle::coefficients::{ProblemDescription, ProblemSpec, ScalarSpec};
use thin_obstacle::freeboundary::blowup;
use thin_obstacle::grid::build_grid;
use thin_obstacle::operator::assemble_energy;
use thin_obstacle::oracle::OracleKind;
use thin_obstacle::solver::{solve_psor_with, suggested_omega, PsorOptions};

fn main() -> thin_obstacle::Result<()> {
    let a = 0.0;
    let h = 1.0 / 128.0;
    let grid = build_grid(1, 1.0, h, h, a)?;
    let boundary = ScalarSpec::Sum {
        terms: vec![
            ScalarSpec::oracle(OracleKind::SignoriniProfile),
            ScalarSpec::Scaled { factor: 0.5, inner: Box::new(ScalarSpec::oracle(OracleKind::EvenPoly)) },
        ],
    };
    let problem = ProblemSpec::build(&grid, a, &ProblemDescription { boundary, ..Default::default() })?;
    let form = assemble_energy(&grid, &problem)?;
    let sol = solve_psor_with(&form, &problem, &PsorOptions { omega: suggested_omega(&grid), ..Default::default() })?;

    let mut prev: Option<Vec<f64>> = None;
    println!("{:>7} {:>11} {:>9} {:>14}", "r", "d_r", "H(1)", "change");
    for r in [0.5, 0.25, 0.125, 0.0625] {
        let b = blowup(&sol, &problem, &[0.0], r, None)?;
        let change = prev.as_ref().map_or(String::from("-"), |p| {
            let d = p.iter().zip(&b.field.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            format!("{d:.3e}")
        });
        println!("{r:>7.3} {:>11.4e} {:>9.4} {change:>14}", b.d_r, b.height_at_one);
        prev = Some(b.field.values);
    }
    Ok(())
}
