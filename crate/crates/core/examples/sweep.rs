//! Sweep of the weight exponent through the same pipeline the `sweep` verb
//! uses. Artifacts land in a temporary directory; the table is printed.

use serde_json::json;
use thin_obstacle::cli::{sweep, ExperimentConfig};

fn main() -> thin_obstacle::Result<()> {
    let cfg = ExperimentConfig::from_value(json!({
        "schema": "thin-obstacle/1",
        "n": 1,
        "a": 0.0,
        "R": 1.0,
        "hx": 1.0 / 48.0,
        "hy": 1.0 / 48.0,
        "boundary": "oracle:signorini_profile",
    }))?;
    let out = std::env::temp_dir().join("thin_obstacle_sweep_example");
    let table = sweep(&cfg, "a", &[0.0, 0.2, 0.4, 0.6, 0.8], &out)?;
    print!("{table}");
    println!("runs written under {}", out.display());
    Ok(())
}
