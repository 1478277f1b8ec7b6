//! Radial functionals for a variable-coefficient run. The monotonicity
//! constants of the adjusted frequency and of the Weiss energy are calibrated
//! on the ladder 0, 0.1, 0.2, ...

use thin_obstacle::coefficients::{CoefficientSpec, ProblemDescription, ProblemSpec, ScalarSpec};
use thin_obstacle::functionals::{frequency_profile, KPrime, ProfileOptions};
use thin_obstacle::grid::build_grid;
use thin_obstacle::operator::assemble_energy;
use thin_obstacle::oracle::OracleKind;
use thin_obstacle::solver::{solve_psor_with, suggested_omega, PsorOptions};

fn main() -> thin_obstacle::Result<()> {
    let a = 0.0;
    let h = 1.0 / 96.0;
    let grid = build_grid(1, 1.0, h, h, a)?;
    let boundary = ScalarSpec::Sum {
        terms: vec![
            ScalarSpec::oracle(OracleKind::SignoriniProfile),
            ScalarSpec::Scaled { factor: 0.3, inner: Box::new(ScalarSpec::oracle(OracleKind::EvenPoly)) },
        ],
    };
    let desc = ProblemDescription { boundary, coefficients: CoefficientSpec::affine_b11(1, 0.4), ..Default::default() };
    let problem = ProblemSpec::build(&grid, a, &desc)?;
    let form = assemble_energy(&grid, &problem)?;
    let sol = solve_psor_with(&form, &problem, &PsorOptions { omega: suggested_omega(&grid), ..Default::default() })?;

    let opts = ProfileOptions { k_prime: KPrime::Calibrate, c_weiss: KPrime::Calibrate, ..Default::default() };
    let prof = frequency_profile(&sol, &problem, &opts)?;
    println!("{:>7} {:>9} {:>9} {:>9} {:>10}", "r", "N", "Ntilde", "Phi", "W");
    for k in (0..prof.len()).step_by(4) {
        println!(
            "{:>7.4} {:>9.4} {:>9.4} {:>9.4} {:>10.3e}",
            prof.r[k], prof.n[k], prof.ntilde[k], prof.phi[k], prof.w[k]
        );
    }
    println!("alpha = {:.4} ± {:.1e}", prof.alpha, prof.alpha_error);
    println!("calibrated K' = {:?}, C_weiss = {:?}", prof.k_prime, prof.c_weiss);
    println!("{}", serde_json::to_string_pretty(&prof.summary()).expect("summary serializes"));
    Ok(())
}
