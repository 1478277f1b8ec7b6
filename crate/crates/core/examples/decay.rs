//! Decay diagnostics at the regular point of the profile: growth of U − ψ,
//! oscillation of the weighted normal derivative, and the best fit by
//! b·y^{1−a}.

use thin_obstacle::coefficients::{ProblemDescription, ProblemSpec, ScalarSpec};
use thin_obstacle::freeboundary::decay_fit;
use thin_obstacle::functionals::{campanato_decay, oscillation_decay};
use thin_obstacle::grid::build_grid;
use thin_obstacle::operator::assemble_energy;
use thin_obstacle::oracle::OracleKind;
use thin_obstacle::solver::{solve_psor_with, suggested_omega, PsorOptions};

fn main() -> thin_obstacle::Result<()> {
    let a = 0.5;
    let h = 1.0 / 128.0;
    let grid = build_grid(1, 1.0, h, h, a)?;
    let desc = ProblemDescription { boundary: ScalarSpec::oracle(OracleKind::SignoriniProfile), ..Default::default() };
    let problem = ProblemSpec::build(&grid, a, &desc)?;
    let form = assemble_energy(&grid, &problem)?;
    let sol = solve_psor_with(&form, &problem, &PsorOptions { omega: suggested_omega(&grid), ..Default::default() })?;

    let d = decay_fit(&sol, &problem, &[0.0], None)?;
    println!("sup |U-psi| ~ r^{:.3}   (expected {:.3})", d.slope, d.target_slope);
    println!("H(r)        ~ r^{:.3}   (expected {:.0})", d.h_slope, d.target_h);
    let o = oscillation_decay(&sol, &[0.0], None)?;
    println!("oscillation ~ r^{:.3}   (must exceed {:.3})", o.slope, o.target);

    // odd field with a known leading term and a faster correction
    let v = grid.sample(|p| 1.5 * p.y.powf(1.0 - a) + p.x[0] * p.x[0] * p.y.powf(1.0 - a));
    let c = campanato_decay(&grid, &v, &[0.0], a, 0.5, None)?;
    println!("campanato: b(r_min) = {:.5}, residual slope {:.3} (target {:.3})", c.b0, c.slope, c.target);
    Ok(())
}
