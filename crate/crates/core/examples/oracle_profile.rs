//! Angular profiles of the homogeneous solutions by shooting, across the
//! weight exponent.

use thin_obstacle::oracle::{profile_ode, DEFAULT_PROFILE_STEPS};

fn main() -> thin_obstacle::Result<()> {
    println!("{:>5} {:>6} {:>10} {:>10} {:>9} {:>9}", "a", "kappa", "residual", "neumann", "phi(pi/2)", "phi(3pi/4)");
    for a in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9] {
        let kappa = 0.5 * (3.0 - a);
        let p = profile_ode(a, kappa, DEFAULT_PROFILE_STEPS)?;
        let pi = std::f64::consts::PI;
        println!(
            "{a:>5} {kappa:>6.3} {:>10.1e} {:>10.1e} {:>9.5} {:>9.5}",
            p.residual,
            p.neumann_defect,
            p.eval(0.5 * pi),
            p.eval(0.75 * pi)
        );
    }
    let p = profile_ode(0.5, 1.25, DEFAULT_PROFILE_STEPS)?;
    let csv = p.to_csv();
    println!("\nfirst rows of the a = 0.5 table:");
    for line in csv.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
