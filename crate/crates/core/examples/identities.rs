//! Differentiated identities on the homogeneous profile: the derivative of
//! the height, the solid and surface forms of the energy, and the Rellich
//! identity.

use thin_obstacle::coefficients::{ProblemDescription, ProblemSpec, ScalarSpec};
use thin_obstacle::functionals::{default_r_grid, identity_checks};
use thin_obstacle::grid::build_grid;
use thin_obstacle::operator::assemble_energy;
use thin_obstacle::oracle::OracleKind;
use thin_obstacle::solver::{solve_psor_with, suggested_omega, PsorOptions};

fn main() -> thin_obstacle::Result<()> {
    for a in [0.0, 0.25, 0.5] {
        let h = 1.0 / 128.0;
        let grid = build_grid(1, 1.0, h, h, a)?;
        let desc = ProblemDescription {
            boundary: ScalarSpec::oracle(OracleKind::SignoriniProfile),
            ..Default::default()
        };
        let problem = ProblemSpec::build(&grid, a, &desc)?;
        let form = assemble_energy(&grid, &problem)?;
        let sol = solve_psor_with(&form, &problem, &PsorOptions { omega: suggested_omega(&grid), ..Default::default() })?;
        let rep = identity_checks(&sol, &problem, &default_r_grid(h, 1.0), 0.2, 0.8)?;
        println!(
            "a = {a:<4}  H' {:.3}%  surface {:.3}%  Rellich {:.3}%  trace const {:.2}  Poincare const {:.2}",
            100.0 * rep.height_error,
            100.0 * rep.surface_error,
            100.0 * rep.rellich_error.unwrap_or(f64::NAN),
            rep.trace_constant,
            rep.poincare_constant
        );
    }
    Ok(())
}
