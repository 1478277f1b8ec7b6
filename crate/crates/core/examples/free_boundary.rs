//! Contact set, free boundary and point classification for a dome-shaped
//! obstacle in three dimensions.

use thin_obstacle::coefficients::{ProblemDescription, ProblemSpec, ScalarSpec, Term};
use thin_obstacle::freeboundary::{analyze, FreeBoundaryOptions, PointClass};
use thin_obstacle::grid::build_grid;
use thin_obstacle::operator::assemble_energy;
use thin_obstacle::solver::{solve_psor_with, suggested_omega, PsorOptions};

fn main() -> thin_obstacle::Result<()> {
    let a = 0.0;
    let h = 1.0 / 24.0;
    let grid = build_grid(2, 1.0, h, h, a)?;
    let dome = ScalarSpec::Polynomial {
        terms: vec![
            Term { c: 0.2, x: vec![0, 0], y: 0.0 },
            Term { c: -1.0, x: vec![2, 0], y: 0.0 },
            Term { c: -1.0, x: vec![0, 2], y: 0.0 },
        ],
    };
    let problem = ProblemSpec::build(&grid, a, &ProblemDescription { obstacle: dome, ..Default::default() })?;
    let form = assemble_energy(&grid, &problem)?;
    let sol = solve_psor_with(&form, &problem, &PsorOptions { omega: suggested_omega(&grid), ..Default::default() })?;

    let rep = analyze(&sol, &problem, &FreeBoundaryOptions { max_points: 16, ..Default::default() })?;
    println!(
        "contact nodes {}, free boundary nodes {}, extended free boundary nodes {}",
        rep.contact_nodes, rep.gamma_nodes, rep.gamma_star_nodes
    );
    let count = |c: PointClass| rep.classifications.iter().filter(|k| k.class == c).count();
    println!(
        "classified {}: regular {}, degenerate {}, unresolved {}",
        rep.classifications.len(),
        count(PointClass::Regular),
        count(PointClass::Degenerate),
        count(PointClass::Unresolved)
    );
    for (c, x) in rep.classifications.iter().zip(&rep.crossings).take(6) {
        println!(
            "  x0 = ({:+.3}, {:+.3})  |x| = {:.3}  Ntilde = {:.3}  {:?}",
            x[0],
            x[1],
            x[0].hypot(x[1]),
            c.ntilde,
            c.class
        );
    }
    if let Some(note) = &rep.graph_note {
        println!("graph: {note}");
    }
    Ok(())
}
