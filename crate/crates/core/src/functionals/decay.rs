use serde::Serialize;

use super::cover_product;
use super::profile::geometric;
use crate::error::{Error, Result};
use crate::grid::{Grid, Point};
use crate::solver::SolutionField;

/// Log-log decay fit of an oscillation-type quantity.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `+∞` when the quantity vanishes at every radius.
    pub slope: f64,
    /// Exponent the slope is compared against.
    pub target: f64,
    pub usable: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampanatoFit {
    pub radii: Vec<f64>,
    /// Minimized `∫ (V − b y^{1−a})² y^a` per radius.
    pub residuals: Vec<f64>,
    /// Minimizing `b` per radius.
    pub coefficients: Vec<f64>,
    pub slope: f64,
    pub target: f64,
    /// `b` at the smallest radius.
    pub b0: f64,
}

/// Least-squares slope of `ln v` against `ln r` over entries above `floor`.
pub(crate) fn fit_slope(radii: &[f64], values: &[f64], floor: f64) -> Result<(f64, usize)> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > floor)
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    if pts.is_empty() {
        return Ok((f64::INFINITY, 0));
    }
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable radii, need at least 4",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok((sxy / sxx, pts.len()))
}

fn radii_or_default(grid: &Grid, r_grid: Option<&[f64]>) -> Vec<f64> {
    r_grid
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| geometric(4.0 * grid.max_spacing(), 0.5 * grid.radius, 12))
}

fn thin_center(grid: &Grid, x0: &[f64]) -> Result<Point> {
    if x0.len() != grid.n {
        return Err(Error::config("x0", format!("expected {} coordinates", grid.n)));
    }
    let p = Point::thin(x0);
    if !grid.contains(&p) {
        return Err(Error::OutOfDomain { point: x0.to_vec() });
    }
    Ok(p)
}

/// Decay of the weighted oscillation of `w = y^a U_y` on half balls around a
/// thin point `x0`.
pub fn oscillation_decay(sol: &SolutionField, x0: &[f64], r_grid: Option<&[f64]>) -> Result<DecayFit> {
    let grid = &sol.grid;
    let center = thin_center(grid, x0)?;
    let radii = radii_or_default(grid, r_grid);
    let t = grid.thin_node_count();
    let half = grid.thin_corners();
    let u = &sol.values;
    // per-cell w and y^{-a} measure
    let cells = grid.cell_count();
    let mut w = vec![0.0; cells];
    let mut meas = vec![0.0; cells];
    for c in 0..cells {
        let (nodes, _) = grid.cell_nodes(c);
        let (_, _, cj) = grid.cell_ijk(c);
        let layer = &grid.layers[cj];
        let mut s = 0.0;
        for k in 0..half {
            let lo = nodes[k];
            s += layer.conductance * (u[lo + t] - u[lo]);
        }
        w[c] = s / half as f64;
        meas[c] = grid.thin_cell_area() * layer.inverse_measure;
    }
    let mut values = Vec::with_capacity(radii.len());
    let mut scale = 0.0f64;
    for &rho in &radii {
        let ball = grid.ball_cells_at(&center, rho)?;
        let mut total = 0.0;
        let mut first = 0.0;
        for &(c, f) in &ball {
            total += f * meas[c];
            first += f * meas[c] * w[c];
        }
        let mean = if total > 0.0 { first / total } else { 0.0 };
        let mut osc = 0.0;
        let mut sq = 0.0;
        for &(c, f) in &ball {
            osc += f * meas[c] * (w[c] - mean).powi(2);
            sq += f * meas[c] * w[c] * w[c];
        }
        scale = scale.max(sq);
        values.push(2.0 * osc);
    }
    let (slope, usable) = fit_slope(&radii, &values, 1e-24 * scale)?;
    let a = grid.a;
    Ok(DecayFit {
        radii,
        values,
        slope,
        target: grid.n as f64 + 1.0 - a,
        usable,
    })
}

/// Best approximation of an odd field `V` by `b · y^{1−a}` on half balls
/// around `x0`.
pub fn campanato_decay(
    grid: &Grid,
    v: &[f64],
    x0: &[f64],
    a: f64,
    beta_target: f64,
    r_grid: Option<&[f64]>,
) -> Result<CampanatoFit> {
    if v.len() != grid.node_count() {
        return Err(Error::config("field", "length does not match the grid"));
    }
    if !(beta_target >= 0.0) {
        return Err(Error::InvalidParameter { name: "beta_target", value: beta_target });
    }
    let center = thin_center(grid, x0)?;
    let radii = radii_or_default(grid, r_grid);
    let phi = grid.sample(|p| p.y.powf(1.0 - a));
    let mut residuals = Vec::with_capacity(radii.len());
    let mut coefficients = Vec::with_capacity(radii.len());
    let mut scale = 0.0f64;
    for &rho in &radii {
        let cover = grid.ball_cover_at(&center, rho)?;
        let q = |x: &[f64], y: &[f64]| -> f64 { cover_product(grid, &cover, x, y) };
        let qvp = q(v, &phi);
        let qpp = q(&phi, &phi);
        let b = if qpp > 0.0 { qvp / qpp } else { 0.0 };
        let diff: Vec<f64> = v.iter().zip(&phi).map(|(x, p)| x - b * p).collect();
        scale = scale.max(q(v, v));
        residuals.push(q(&diff, &diff));
        coefficients.push(b);
    }
    let (slope, _) = fit_slope(&radii, &residuals, 1e-24 * scale)?;
    Ok(CampanatoFit {
        b0: coefficients[0],
        radii,
        residuals,
        coefficients,
        slope,
        target: grid.n as f64 + 1.0 + a + 2.0 * (1.0 + beta_target),
    })
}
