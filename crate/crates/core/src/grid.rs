//! Tensor-product discretization of the upper half box `[-R, R]^n x [0, R]`.
//!
//! Every cell carries its exact weighted volume `∫_cell y^a dX`, computed from
//! the antiderivative of `y^a`, so nothing is ever evaluated at the singular or
//! degenerate point `y = 0`. Per layer the grid also stores
//!
//! * the exact one-dimensional conductance `1 / ∫ y^{-a} dy`, which makes the
//!   discrete flux of `y^{1-a}` exact, and
//! * a split of the layer measure into a lower and an upper part. The split
//!   point is the Cauchy mean-value point of `y^2` against `y^{1-a}`, which is
//!   what makes even quadratics in `y` discretely exact as well.

use crate::error::{Error, Result};
use crate::quadrature::GaussJacobi;

/// Point of the thick space: thin coordinates `x` (only the first `n` used)
/// and the extension coordinate `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: [f64; 2],
    pub y: f64,
}

impl Point {
    pub fn new(x: &[f64], y: f64) -> Self {
        let mut xs = [0.0; 2];
        xs[..x.len()].copy_from_slice(x);
        Self { x: xs, y }
    }

    pub fn thin(x: &[f64]) -> Self {
        Self::new(x, 0.0)
    }

    pub fn norm(&self, n: usize) -> f64 {
        let mut s = self.y * self.y;
        for k in 0..n {
            s += self.x[k] * self.x[k];
        }
        s.sqrt()
    }
}

/// Per-layer data for the strip `y_j < y < y_{j+1}`.
#[derive(Debug, Clone, Copy)]
pub struct Layer {
    /// `∫ y^a dy` over the layer.
    pub measure: f64,
    /// `∫ y^{-a} dy` over the layer (infinite for `a = 1` on the first layer).
    pub inverse_measure: f64,
    /// `1 / ∫ y^{-a} dy`.
    pub conductance: f64,
    /// Part of `measure` attributed to the lower node row.
    pub lower: f64,
    /// Part of `measure` attributed to the upper node row.
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub n: usize,
    pub radius: f64,
    pub hx: f64,
    pub hy: f64,
    pub a: f64,
    /// Cells per thin axis.
    pub cells_x: usize,
    /// Cells in the extension direction.
    pub cells_y: usize,
    pub layers: Vec<Layer>,
    pub thin_index: Vec<usize>,
}

fn layer_for(y0: f64, y1: f64, a: f64) -> Layer {
    let measure = (y1.powf(1.0 + a) - y0.powf(1.0 + a)) / (1.0 + a);
    let inverse_measure = if (1.0 - a).abs() < 1e-14 {
        if y0 == 0.0 {
            f64::INFINITY
        } else {
            (y1 / y0).ln()
        }
    } else {
        (y1.powf(1.0 - a) - y0.powf(1.0 - a)) / (1.0 - a)
    };
    let conductance = if inverse_measure.is_finite() {
        1.0 / inverse_measure
    } else {
        0.0
    };
    let split = conductance * (y1 * y1 - y0 * y0) / (2.0 * (1.0 + a));
    let lower = (split - y0.powf(1.0 + a) / (1.0 + a)).clamp(0.0, measure);
    Layer {
        measure,
        inverse_measure,
        conductance,
        lower,
        upper: measure - lower,
    }
}

/// Builds the half-box grid. Spacings are adjusted to the nearest values that
/// tile the box exactly.
pub fn build_grid(n: usize, radius: f64, hx: f64, hy: f64, a: f64) -> Result<Grid> {
    if n != 1 && n != 2 {
        return Err(Error::config("n", format!("thin dimension must be 1 or 2, got {n}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::config("R", format!("must be positive and finite, got {radius}")));
    }
    if !(hx.is_finite() && hx > 0.0 && hx < radius) {
        return Err(Error::config("hx", format!("must lie in (0, R), got {hx}")));
    }
    if !(hy.is_finite() && hy > 0.0 && hy < radius) {
        return Err(Error::config("hy", format!("must lie in (0, R), got {hy}")));
    }
    if !(a.is_finite() && a > -1.0 && a <= 1.0) {
        return Err(Error::config("a", format!("must lie in (-1, 1], got {a}")));
    }
    let cells_x = ((2.0 * radius / hx).round() as usize).max(2);
    let cells_y = ((radius / hy).round() as usize).max(1);
    let hx = 2.0 * radius / cells_x as f64;
    let hy = radius / cells_y as f64;

    let layers = (0..cells_y)
        .map(|j| layer_for(j as f64 * hy, (j + 1) as f64 * hy, a))
        .collect();

    let mut grid = Grid {
        n,
        radius,
        hx,
        hy,
        a,
        cells_x,
        cells_y,
        layers,
        thin_index: Vec::new(),
    };
    grid.thin_index = (0..grid.thin_node_count()).collect();
    Ok(grid)
}

impl Grid {
    pub fn nodes_x(&self) -> usize {
        self.cells_x + 1
    }

    pub fn nodes_y(&self) -> usize {
        self.cells_y + 1
    }

    /// Node count along the second thin axis (1 when `n = 1`).
    fn nodes_x2(&self) -> usize {
        if self.n == 2 {
            self.nodes_x()
        } else {
            1
        }
    }

    fn cells_x2(&self) -> usize {
        if self.n == 2 {
            self.cells_x
        } else {
            1
        }
    }

    pub fn thin_node_count(&self) -> usize {
        self.nodes_x() * self.nodes_x2()
    }

    pub fn node_count(&self) -> usize {
        self.thin_node_count() * self.nodes_y()
    }

    pub fn cell_count(&self) -> usize {
        self.cells_x * self.cells_x2() * self.cells_y
    }

    pub fn node_index(&self, i: usize, k: usize, j: usize) -> usize {
        (j * self.nodes_x2() + k) * self.nodes_x() + i
    }

    /// Inverse of [`Grid::node_index`]: `(i, k, j)`.
    pub fn node_ijk(&self, idx: usize) -> (usize, usize, usize) {
        let nx = self.nodes_x();
        let nk = self.nodes_x2();
        let i = idx % nx;
        let k = (idx / nx) % nk;
        let j = idx / (nx * nk);
        (i, k, j)
    }

    pub fn x_coord(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.hx
    }

    pub fn y_coord(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    pub fn node_point(&self, idx: usize) -> Point {
        let (i, k, j) = self.node_ijk(idx);
        let mut x = [self.x_coord(i), 0.0];
        if self.n == 2 {
            x[1] = self.x_coord(k);
        }
        Point { x, y: self.y_coord(j) }
    }

    pub fn is_thin(&self, idx: usize) -> bool {
        idx < self.thin_node_count()
    }

    /// True on the outer box boundary, where Dirichlet data is imposed.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, k, j) = self.node_ijk(idx);
        let last = self.cells_x;
        j == self.cells_y
            || i == 0
            || i == last
            || (self.n == 2 && (k == 0 || k == last))
    }

    pub fn thin_cell_area(&self) -> f64 {
        self.hx.powi(self.n as i32)
    }

    /// Thin-space control area of a node (a full thin cell for interior nodes).
    pub fn thin_control_area(&self, idx: usize) -> f64 {
        let (i, k, _) = self.node_ijk(idx);
        let mut area = self.thin_cell_area();
        if i == 0 || i == self.cells_x {
            area *= 0.5;
        }
        if self.n == 2 && (k == 0 || k == self.cells_x) {
            area *= 0.5;
        }
        area
    }

    /// Weighted control volume of a node: the share of neighbouring cell
    /// measures attributed to it.
    pub fn node_weight(&self, idx: usize) -> f64 {
        let (_, _, j) = self.node_ijk(idx);
        let mut wy = 0.0;
        if j < self.cells_y {
            wy += self.layers[j].lower;
        }
        if j > 0 {
            wy += self.layers[j - 1].upper;
        }
        self.thin_control_area(idx) * wy
    }

    pub fn cell_index(&self, ci: usize, ck: usize, cj: usize) -> usize {
        (cj * self.cells_x2() + ck) * self.cells_x + ci
    }

    pub fn cell_ijk(&self, c: usize) -> (usize, usize, usize) {
        let nx = self.cells_x;
        let nk = self.cells_x2();
        (c % nx, (c / nx) % nk, c / (nx * nk))
    }

    /// Exact `∫_cell y^a dX`.
    pub fn cell_measure(&self, c: usize) -> f64 {
        let (_, _, cj) = self.cell_ijk(c);
        self.thin_cell_area() * self.layers[cj].measure
    }

    pub fn cell_center(&self, c: usize) -> Point {
        let (ci, ck, cj) = self.cell_ijk(c);
        let mut x = [self.x_coord(ci) + 0.5 * self.hx, 0.0];
        if self.n == 2 {
            x[1] = self.x_coord(ck) + 0.5 * self.hx;
        }
        Point {
            x,
            y: self.y_coord(cj) + 0.5 * self.hy,
        }
    }

    /// Number of thin corners of a cell, `2^n`.
    pub fn thin_corners(&self) -> usize {
        1 << self.n
    }

    /// Node indices of a cell: thin corner `t` at level `l` (0 bottom, 1 top)
    /// is entry `l * 2^n + t`; bit 0 of `t` steps along x1, bit 1 along x2.
    pub fn cell_nodes(&self, c: usize) -> ([usize; 8], usize) {
        let (ci, ck, cj) = self.cell_ijk(c);
        let tc = self.thin_corners();
        let mut out = [0usize; 8];
        for level in 0..2 {
            for t in 0..tc {
                let di = t & 1;
                let dk = (t >> 1) & 1;
                out[level * tc + t] = self.node_index(ci + di, ck + dk, cj + level);
            }
        }
        (out, 2 * tc)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let tol = 1e-12 * self.radius;
        if p.y < -tol || p.y > self.radius + tol {
            return false;
        }
        (0..self.n).all(|k| p.x[k].abs() <= self.radius + tol)
    }

    /// Multilinear interpolation of nodal values. Points are clamped into the
    /// box; callers reflect `y` themselves.
    pub fn interpolate(&self, values: &[f64], p: &Point) -> f64 {
        let locate = |coord: f64, lo: f64, h: f64, cells: usize| -> (usize, f64) {
            let s = ((coord - lo) / h).clamp(0.0, cells as f64);
            let c = (s.floor() as usize).min(cells - 1);
            (c, s - c as f64)
        };
        let (i, tx) = locate(p.x[0], -self.radius, self.hx, self.cells_x);
        let (j, ty) = locate(p.y, 0.0, self.hy, self.cells_y);
        if self.n == 1 {
            let v00 = values[self.node_index(i, 0, j)];
            let v10 = values[self.node_index(i + 1, 0, j)];
            let v01 = values[self.node_index(i, 0, j + 1)];
            let v11 = values[self.node_index(i + 1, 0, j + 1)];
            let bottom = v00 + tx * (v10 - v00);
            let top = v01 + tx * (v11 - v01);
            bottom + ty * (top - bottom)
        } else {
            let (k, tz) = locate(p.x[1], -self.radius, self.hx, self.cells_x);
            let mut acc = 0.0;
            for dj in 0..2 {
                let wy = if dj == 0 { 1.0 - ty } else { ty };
                for dk in 0..2 {
                    let wz = if dk == 0 { 1.0 - tz } else { tz };
                    for di in 0..2 {
                        let wx = if di == 0 { 1.0 - tx } else { tx };
                        let w = wx * wy * wz;
                        if w != 0.0 {
                            acc += w * values[self.node_index(i + di, k + dk, j + dj)];
                        }
                    }
                }
            }
            acc
        }
    }

    /// Multilinear interpolation of a thin-node table at a thin point.
    pub fn interpolate_thin(&self, values: &[f64], x: &[f64; 2]) -> f64 {
        let locate = |coord: f64| -> (usize, f64) {
            let s = ((coord + self.radius) / self.hx).clamp(0.0, self.cells_x as f64);
            let c = (s.floor() as usize).min(self.cells_x - 1);
            (c, s - c as f64)
        };
        let (i, tx) = locate(x[0]);
        if self.n == 1 {
            return values[i] + tx * (values[i + 1] - values[i]);
        }
        let (k, tz) = locate(x[1]);
        let nx = self.nodes_x();
        let v = |di: usize, dk: usize| values[(k + dk) * nx + i + di];
        let lo = v(0, 0) + tx * (v(1, 0) - v(0, 0));
        let hi = v(0, 1) + tx * (v(1, 1) - v(0, 1));
        lo + tz * (hi - lo)
    }

    /// Interpolation of an evenly reflected field at a point of the full space.
    pub fn interpolate_even(&self, values: &[f64], p: &Point) -> f64 {
        let q = Point { x: p.x, y: p.y.abs() };
        self.interpolate(values, &q)
    }

    /// Samples a function at every node.
    pub fn sample<F: Fn(&Point) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.node_count()).map(|idx| f(&self.node_point(idx))).collect()
    }

    /// Exact `∫ y^a dX` over the whole box.
    pub fn total_measure(&self) -> f64 {
        (2.0 * self.radius).powi(self.n as i32) * self.radius.powf(1.0 + self.a) / (1.0 + self.a)
    }

    pub fn max_spacing(&self) -> f64 {
        self.hx.max(self.hy)
    }

    /// Cells meeting the upper half ball of radius `r` around the origin.
    pub fn ball_cells(&self, r: f64) -> Result<Vec<(usize, f64)>> {
        self.ball_cells_at(&Point::thin(&[0.0, 0.0]), r)
    }

    /// Cells meeting the upper half ball of radius `r` centred at the thin
    /// point `center`, with the covered fraction of each cell.
    pub fn ball_cells_at(&self, center: &Point, r: f64) -> Result<Vec<(usize, f64)>> {
        Ok(self.ball_cover_at(center, r)?.into_iter().map(|c| (c.cell, c.fraction())).collect())
    }

    /// Cells meeting the upper half ball of radius `r` around `center`. Cut
    /// cells carry the covered fraction of each corner sub-box, estimated from
    /// a fixed subsample.
    pub fn ball_cover_at(&self, center: &Point, r: f64) -> Result<Vec<CoveredCell>> {
        if !(r > 0.0 && r <= self.radius * (1.0 + 1e-12)) || !r.is_finite() {
            return Err(Error::UnsupportedRadius {
                radius: r,
                min: 0.0,
                max: self.radius,
            });
        }
        // samples per axis, even so that every corner sub-box gets the same count
        let sub: usize = if self.n == 1 { 16 } else { 6 };
        let offs: Vec<f64> = (0..sub).map(|s| (s as f64 + 0.5) / sub as f64).collect();
        let r2 = r * r;
        let range = |c: f64| -> (usize, usize) {
            let lo = ((c - r + self.radius) / self.hx).floor().max(0.0) as usize;
            let hi = (((c + r + self.radius) / self.hx).ceil() as usize).min(self.cells_x);
            (lo, hi)
        };
        let (i0, i1) = range(center.x[0]);
        let (k0, k1) = if self.n == 2 { range(center.x[1]) } else { (0, 1) };
        let j1 = ((r / self.hy).ceil() as usize).min(self.cells_y);
        let tc = self.thin_corners();

        let mut out = Vec::new();
        for cj in 0..j1 {
            let ylo = self.y_coord(cj);
            let yhi = ylo + self.hy;
            for ck in k0..k1 {
                for ci in i0..i1 {
                    let mut near = 0.0;
                    let mut far = 0.0;
                    let mut axis = |lo: f64, hi: f64, c: f64| {
                        let d_near = if c < lo {
                            lo - c
                        } else if c > hi {
                            c - hi
                        } else {
                            0.0
                        };
                        let d_far = (c - lo).abs().max((hi - c).abs());
                        near += d_near * d_near;
                        far += d_far * d_far;
                    };
                    let xlo = self.x_coord(ci);
                    axis(xlo, xlo + self.hx, center.x[0]);
                    if self.n == 2 {
                        let zlo = self.x_coord(ck);
                        axis(zlo, zlo + self.hx, center.x[1]);
                    }
                    axis(ylo, yhi, 0.0);
                    if near >= r2 {
                        continue;
                    }
                    let cell = self.cell_index(ci, ck, cj);
                    if far <= r2 {
                        out.push(CoveredCell { cell, count: 2 * tc, corners: None });
                        continue;
                    }
                    let mut inside = [0usize; 8];
                    let zs: &[f64] = if self.n == 2 { &offs } else { &[0.0] };
                    for &oy in &offs {
                        let dy = ylo + oy * self.hy;
                        let level = usize::from(oy > 0.5);
                        for &oz in zs {
                            let (dz, bz) = if self.n == 2 {
                                (self.x_coord(ck) + oz * self.hx - center.x[1], usize::from(oz > 0.5))
                            } else {
                                (0.0, 0)
                            };
                            for &ox in &offs {
                                let dx = xlo + ox * self.hx - center.x[0];
                                if dx * dx + dy * dy + dz * dz < r2 {
                                    inside[level * tc + (usize::from(ox > 0.5) | (bz << 1))] += 1;
                                }
                            }
                        }
                    }
                    if inside.iter().any(|&k| k > 0) {
                        let per_box = (sub / 2).pow(self.n as u32 + 1) as f64;
                        let mut corners = [0.0; 8];
                        for (c, k) in corners.iter_mut().zip(inside) {
                            *c = k as f64 / per_box;
                        }
                        out.push(CoveredCell { cell, count: 2 * tc, corners: Some(corners) });
                    }
                }
            }
        }
        Ok(out)
    }
}

/// A cell meeting a half ball; `corners` is `None` when the cell is covered,
/// otherwise the covered fraction of each of the `count` corner sub-boxes in
/// `cell_nodes` order.
#[derive(Debug, Clone, Copy)]
pub struct CoveredCell {
    pub cell: usize,
    pub count: usize,
    pub corners: Option<[f64; 8]>,
}

impl CoveredCell {
    /// Covered fraction of the whole cell.
    pub fn fraction(&self) -> f64 {
        match &self.corners {
            None => 1.0,
            Some(c) => c[..self.count].iter().sum::<f64>() / self.count as f64,
        }
    }
}

/// Quadrature on the upper half sphere `S_r^+` with the weight `|y|^a` and
/// the surface measure folded into the weights.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub r: f64,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn integrate<F: FnMut(&Point) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| w * f(p))
            .sum()
    }

    /// Unit outward normal at a rule point.
    pub fn normal(&self, p: &Point) -> Point {
        Point {
            x: [p.x[0] / self.r, p.x[1] / self.r],
            y: p.y / self.r,
        }
    }
}

/// Default number of polar nodes.
pub const DEFAULT_ANGLES: usize = 64;

/// Builds the `|y|^a`-weighted rule on the upper half sphere of radius `r`.
///
/// For `n = 1` the angle `θ ∈ (0, π)` is mapped to `t ∈ (-1, 1)` and the
/// factor `(θ(π-θ))^a` is absorbed into a symmetric Gauss–Jacobi rule; the
/// remaining smooth factor `(sin θ / (θ(π-θ)))^a` goes into the weights. For
/// `n = 2` the height `s = y/r` carries the exact weight `s^a ds` and the
/// azimuth uses the periodic trapezoid rule.
pub fn sphere_quadrature(grid: &Grid, r: f64, n_angles: usize, a: f64) -> Result<SphereRule> {
    let min = 2.0 * grid.max_spacing();
    if !r.is_finite() || r > grid.radius * (1.0 + 1e-12) || r < min {
        return Err(Error::UnsupportedRadius {
            radius: r,
            min,
            max: grid.radius,
        });
    }
    if n_angles < 8 {
        return Err(Error::InvalidParameter {
            name: "n_angles",
            value: n_angles as f64,
        });
    }
    use std::f64::consts::PI;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    if grid.n == 1 {
        let gj = GaussJacobi::new(n_angles, a, a)?;
        let scale = 0.5 * PI * (0.25 * PI * PI).powf(a) * r.powf(1.0 + a);
        for (&t, &w) in gj.nodes.iter().zip(&gj.weights) {
            let theta = 0.5 * PI * (1.0 + t);
            let smooth = (theta.sin() / (theta * (PI - theta))).powf(a);
            points.push(Point::new(&[r * theta.cos()], r * theta.sin()));
            weights.push(w * scale * smooth);
        }
    } else {
        let gj = GaussJacobi::new(n_angles, 0.0, a)?;
        let n_az = 2 * n_angles;
        let dphi = 2.0 * PI / n_az as f64;
        let scale = 2f64.powf(-a) * 0.5 * r.powf(2.0 + a) * dphi;
        for (&t, &w) in gj.nodes.iter().zip(&gj.weights) {
            let s = 0.5 * (1.0 + t);
            let rho = r * (1.0 - s * s).max(0.0).sqrt();
            for m in 0..n_az {
                let phi = (m as f64 + 0.5) * dphi;
                points.push(Point::new(&[rho * phi.cos(), rho * phi.sin()], r * s));
                weights.push(w * scale);
            }
        }
    }
    Ok(SphereRule { r, points, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn unweighted_cells_have_plain_volume() {
        let g = build_grid(1, 1.0, 0.5, 0.5, 0.0).unwrap();
        for c in 0..g.cell_count() {
            assert_relative_eq!(g.cell_measure(c), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn linear_weight_first_cell() {
        let g = build_grid(1, 1.0, 0.5, 0.5, 1.0).unwrap();
        let c = g.cell_index(0, 0, 0);
        assert_relative_eq!(g.cell_measure(c), 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn total_measure_three_dimensional() {
        let g = build_grid(2, 1.0, 0.25, 0.25, 0.5).unwrap();
        let total: f64 = (0..g.cell_count()).map(|c| g.cell_measure(c)).sum();
        assert_relative_eq!(total, 8.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(g.total_measure(), 8.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn node_weights_partition_the_measure() {
        let g = build_grid(2, 1.0, 0.25, 0.125, 0.3).unwrap();
        let total: f64 = (0..g.node_count()).map(|i| g.node_weight(i)).sum();
        assert_relative_eq!(total, g.total_measure(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(build_grid(3, 1.0, 0.1, 0.1, 0.0).is_err());
        assert!(build_grid(1, 1.0, 0.1, 0.1, 1.5).is_err());
        assert!(build_grid(1, f64::NAN, 0.1, 0.1, 0.0).is_err());
        assert!(build_grid(1, 1.0, 2.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn sphere_constant_unweighted_half_circle() {
        let g = build_grid(1, 1.0, 0.05, 0.05, 0.0).unwrap();
        let rule = sphere_quadrature(&g, 1.0, 64, 0.0).unwrap();
        assert_relative_eq!(rule.integrate(|_| 1.0), std::f64::consts::PI, epsilon = 1e-10);
    }

    #[test]
    fn sphere_constant_linear_weight() {
        let g = build_grid(1, 1.0, 0.05, 0.05, 1.0).unwrap();
        let rule = sphere_quadrature(&g, 1.0, 64, 1.0).unwrap();
        assert_relative_eq!(rule.integrate(|_| 1.0), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn sphere_rule_profile_square() {
        let g = build_grid(1, 1.0, 0.05, 0.05, 0.0).unwrap();
        let rule = sphere_quadrature(&g, 1.0, 64, 0.0).unwrap();
        let val = rule.integrate(|p| {
            let th = p.y.atan2(p.x[0]);
            (1.5 * th).cos().powi(2)
        });
        assert!((val - std::f64::consts::FRAC_PI_2).abs() < 1e-4);
    }

    #[test]
    fn sphere_weighted_mass_matches_closed_form() {
        use std::f64::consts::PI;
        for &a in &[0.0, 0.25, 0.5, 0.75] {
            // n = 1: r^{1+a} ∫_0^π sin^a = r^{1+a} √π Γ((1+a)/2) / Γ(1 + a/2)
            let g = build_grid(1, 1.0, 0.05, 0.05, a).unwrap();
            let r = 0.7;
            let rule = sphere_quadrature(&g, r, 64, a).unwrap();
            let exact = r.powf(1.0 + a) * PI.sqrt() * gamma((1.0 + a) / 2.0) / gamma(1.0 + a / 2.0);
            assert_relative_eq!(rule.integrate(|_| 1.0), exact, max_relative = 1e-6);
            assert!(rule.weights.iter().all(|&w| w >= 0.0));

            let g2 = build_grid(2, 1.0, 0.1, 0.1, a).unwrap();
            let rule2 = sphere_quadrature(&g2, r, 16, a).unwrap();
            let exact2 = 2.0 * PI * r.powf(2.0 + a) / (1.0 + a);
            assert_relative_eq!(rule2.integrate(|_| 1.0), exact2, max_relative = 1e-10);
        }
    }

    #[test]
    fn sphere_radius_checks() {
        let g = build_grid(1, 1.0, 0.1, 0.1, 0.0).unwrap();
        assert!(sphere_quadrature(&g, 1.5, 64, 0.0).is_err());
        assert!(sphere_quadrature(&g, 0.1, 64, 0.0).is_err());
        assert!(sphere_quadrature(&g, 0.5, 4, 0.0).is_err());
    }

    #[test]
    fn ball_cells_full_and_small() {
        let g = build_grid(1, 1.0, 0.1, 0.1, 0.0).unwrap();
        let all = g.ball_cells(1.0).unwrap();
        // cells entirely inside have full coverage
        assert!(all.iter().any(|&(_, f)| f == 1.0));
        let tiny = g.ball_cells(0.05).unwrap();
        assert!(!tiny.is_empty());
        let origin_cells: Vec<usize> = vec![g.cell_index(9, 0, 0), g.cell_index(10, 0, 0)];
        for c in origin_cells {
            assert!(tiny.iter().any(|&(cc, _)| cc == c));
        }
    }

    #[test]
    fn ball_cells_half_disc_area() {
        let g = build_grid(1, 1.0, 0.05, 0.05, 0.0).unwrap();
        let area: f64 = g
            .ball_cells(0.5)
            .unwrap()
            .iter()
            .map(|&(c, f)| f * g.cell_measure(c))
            .sum();
        let exact = std::f64::consts::PI * 0.25 / 2.0;
        assert!((area - exact).abs() / exact < 0.02);
    }

    #[test]
    fn weighted_ball_measure_converges() {
        // ∫_{B_r^+} y^a for n = 1 is r^{2+a}/(2+a) · √π Γ((1+a)/2)/Γ(1+a/2)
        let a = 0.5;
        let r: f64 = 0.6;
        let exact = r.powf(2.0 + a) / (2.0 + a) * std::f64::consts::PI.sqrt() * gamma((1.0 + a) / 2.0)
            / gamma(1.0 + a / 2.0);
        let mut errs = Vec::new();
        for &h in &[0.1, 0.05, 0.025] {
            let g = build_grid(1, 1.0, h, h, a).unwrap();
            let m: f64 = g
                .ball_cells(r)
                .unwrap()
                .iter()
                .map(|&(c, f)| f * g.cell_measure(c))
                .sum();
            errs.push((m - exact).abs() / exact);
        }
        assert!(errs[2] < errs[0]);
        assert!(errs[2] < 5e-3);
    }

    #[test]
    fn interpolation_reproduces_bilinear_fields() {
        let g = build_grid(2, 1.0, 0.25, 0.125, 0.0).unwrap();
        let f = |p: &Point| 1.0 + 2.0 * p.x[0] - p.x[1] + 0.5 * p.y + p.x[0] * p.y;
        let vals = g.sample(f);
        let p = Point::new(&[0.13, -0.41], 0.37);
        assert_relative_eq!(g.interpolate(&vals, &p), f(&p), epsilon = 1e-13);
    }

    proptest! {
        #[test]
        fn layer_split_is_admissible(a in -0.95f64..0.99, j in 0usize..400) {
            let l = layer_for(j as f64 * 0.01, (j + 1) as f64 * 0.01, a);
            prop_assert!(l.measure > 0.0 && l.measure.is_finite());
            prop_assert!(l.lower > 0.0 && l.upper > 0.0);
            prop_assert!((l.lower + l.upper - l.measure).abs() <= 1e-14 * l.measure.max(1e-300));
        }

        #[test]
        fn total_measure_is_exact(a in -0.9f64..0.99, cells in 2usize..40) {
            let h = 1.0 / cells as f64;
            let g = build_grid(1, 1.0, h, h, a).unwrap();
            let total: f64 = (0..g.cell_count()).map(|c| g.cell_measure(c)).sum();
            prop_assert!((total - g.total_measure()).abs() <= 1e-12 * g.total_measure());
        }
    }
}
