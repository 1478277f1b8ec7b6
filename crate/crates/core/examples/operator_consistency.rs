//! Residual of the discrete weighted operator on sampled exact solutions.
//! The scheme reproduces y^{1−a} and x² − y²/(1+a) to rounding; the
//! homogeneous profile converges at second order away from its contact ray.

use thin_obstacle::coefficients::{ProblemDescription, ProblemSpec, ScalarSpec};
use thin_obstacle::grid::build_grid;
use thin_obstacle::operator::{assemble_energy, residual_norm};
use thin_obstacle::oracle::{exact_solution, OracleKind};

fn main() -> thin_obstacle::Result<()> {
    for a in [0.0, 0.25, 0.5, 0.75] {
        for kind in OracleKind::ALL {
            let exact = exact_solution(kind, a)?;
            let mut line = format!("a = {a:<4} {:<18}", kind.name());
            let mut prev: Option<f64> = None;
            for m in [32, 64, 128] {
                let h = 1.0 / m as f64;
                let grid = build_grid(1, 1.0, h, h, a)?;
                let desc = ProblemDescription { boundary: ScalarSpec::oracle(kind), ..Default::default() };
                let problem = ProblemSpec::build(&grid, a, &desc)?;
                let form = assemble_energy(&grid, &problem)?;
                let u = grid.sample(|p| exact.value(p));
                let res = residual_norm(&form, &u, |p| {
                    let d = if p.x[0] <= 0.0 { p.y } else { p.x[0].hypot(p.y) };
                    d >= 0.125
                });
                line += &format!(" {res:>10.2e}");
                if let Some(r0) = prev {
                    if res > 1e-10 {
                        line += &format!(" ({:.2})", (r0 / res).log2());
                    }
                }
                prev = Some(res);
            }
            println!("{line}");
        }
    }
    Ok(())
}
