//! Radial functionals of a solved field and the identities relating them.
//!
//! Every integral is over the full ball or sphere of the evenly reflected
//! field, so it is twice the corresponding upper-half quantity.

mod decay;
mod geometry;
mod profile;

pub use decay::{campanato_decay, oscillation_decay, CampanatoFit, DecayFit};
pub(crate) use decay::fit_slope;
pub(crate) use profile::{derivative, frequency_from_heights, geometric};
pub use geometry::{geometry_fields, GeometryFields};
pub use profile::{
    calibrate_ladder, default_r_grid, frequency_profile, identity_checks, integrate_psi_sigma, monotonicity_violation,
    weiss, IdentityReport, KPrime, Monotonicity, ProfileOptions, PsiSigma, RadialProfile,
};

use crate::coefficients::ProblemSpec;
use crate::error::{Error, Result};
use crate::grid::{sphere_quadrature, CoveredCell, Grid, Point, SphereRule, DEFAULT_ANGLES};
use crate::coefficients::CoefficientField;
use crate::operator::{cell_energy, cell_energy_corners};
use crate::solver::SolutionField;

/// Per-cell integrals and gradient tables of one solved field.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub grid: Grid,
    pub a: f64,
    pub values: Vec<f64>,
    pub geo: GeometryFields,
    /// `∫_cell ⟨A∇U,∇U⟩ y^a`.
    cell_energy: Vec<f64>,
    /// `∫_cell U² y^a`.
    cell_mass: Vec<f64>,
    /// `∫_cell U f y^a`.
    cell_source: Vec<f64>,
    coeff: CoefficientField,
    f: Vec<f64>,
    /// Thin gradient components at nodes.
    grad_x: [Vec<f64>; 2],
    /// Layer fluxes `y^a U_y`, `layers × thin nodes`.
    flux: Vec<f64>,
    pub n_angles: usize,
    h_max: f64,
}

/// `∫_cell V W y^a` with the assembly split of the layer measure.
pub(crate) fn cell_product(grid: &Grid, v: &[f64], w: &[f64], cell: usize) -> f64 {
    let (parts, count) = cell_product_corners(grid, v, w, cell);
    parts[..count].iter().sum()
}

/// `cell_product` split over the corner sub-boxes in `cell_nodes` order.
pub(crate) fn cell_product_corners(grid: &Grid, v: &[f64], w: &[f64], cell: usize) -> ([f64; 8], usize) {
    let (_, _, cj) = grid.cell_ijk(cell);
    let layer = &grid.layers[cj];
    let (nodes, count) = grid.cell_nodes(cell);
    let half = count / 2;
    let corner = grid.thin_cell_area() / half as f64;
    let mut out = [0.0; 8];
    for k in 0..half {
        out[k] = corner * layer.lower * v[nodes[k]] * w[nodes[k]];
        out[half + k] = corner * layer.upper * v[nodes[half + k]] * w[nodes[half + k]];
    }
    (out, count)
}

/// Sum of per-cell integrals over the half ball `B_r^+(center)`: covered cells
/// use `totals`, cut cells weight the corner parts from `parts` by their
/// covered fractions.
pub(crate) fn ball_integral<F: Fn(usize) -> ([f64; 8], usize)>(
    grid: &Grid,
    center: &Point,
    r: f64,
    totals: &[f64],
    parts: F,
) -> Result<f64> {
    let mut sum = 0.0;
    for cc in grid.ball_cover_at(center, r)? {
        match cc.corners {
            None => sum += totals[cc.cell],
            Some(frac) => {
                let (p, count) = parts(cc.cell);
                sum += p[..count].iter().zip(&frac).map(|(v, f)| v * f).sum::<f64>();
            }
        }
    }
    Ok(sum)
}

/// `∫ V W y^a` over a precomputed ball cover.
pub(crate) fn cover_product(grid: &Grid, cover: &[CoveredCell], v: &[f64], w: &[f64]) -> f64 {
    cover
        .iter()
        .map(|cc| {
            let (p, count) = cell_product_corners(grid, v, w, cc.cell);
            match cc.corners {
                None => p[..count].iter().sum::<f64>(),
                Some(frac) => p[..count].iter().zip(&frac).map(|(x, f)| x * f).sum(),
            }
        })
        .sum()
}

impl Analysis {
    pub fn new(sol: &SolutionField, problem: &ProblemSpec) -> Result<Self> {
        Self::with_angles(sol, problem, DEFAULT_ANGLES)
    }

    pub fn with_angles(sol: &SolutionField, problem: &ProblemSpec, n_angles: usize) -> Result<Self> {
        let grid = &problem.grid;
        if sol.values.len() != grid.node_count() {
            return Err(Error::config("solution", "field does not match the problem grid"));
        }
        let u = &sol.values;
        let geo = geometry_fields(grid, &problem.coeff, problem.a);
        let cells = grid.cell_count();
        let cell_energy_v = (0..cells).map(|c| cell_energy(grid, &problem.coeff, u, c)).collect();
        let cell_mass = (0..cells).map(|c| cell_product(grid, u, u, c)).collect();
        let cell_source = (0..cells).map(|c| cell_product(grid, u, &problem.f, c)).collect();

        let t = grid.thin_node_count();
        let nx = grid.nodes_x();
        let mut grad_x = [vec![0.0; grid.node_count()], vec![0.0; grid.node_count()]];
        for idx in 0..grid.node_count() {
            let (i, k, _) = grid.node_ijk(idx);
            for (axis, g) in grad_x.iter_mut().enumerate().take(grid.n) {
                let (pos, stride) = if axis == 0 { (i, 1) } else { (k, nx) };
                let last = grid.cells_x;
                let (lo, hi, span) = if pos == 0 {
                    (idx, idx + stride, 1.0)
                } else if pos == last {
                    (idx - stride, idx, 1.0)
                } else {
                    (idx - stride, idx + stride, 2.0)
                };
                g[idx] = (u[hi] - u[lo]) / (span * grid.hx);
            }
        }
        let mut flux = Vec::with_capacity(grid.cells_y * t);
        for (j, layer) in grid.layers.iter().enumerate() {
            for s in 0..t {
                flux.push(layer.conductance * (u[(j + 1) * t + s] - u[j * t + s]));
            }
        }

        Ok(Self {
            grid: grid.clone(),
            a: problem.a,
            values: u.clone(),
            geo,
            cell_energy: cell_energy_v,
            cell_mass,
            cell_source,
            coeff: problem.coeff.clone(),
            f: problem.f.clone(),
            grad_x,
            flux,
            n_angles,
            h_max: grid.max_spacing(),
        })
    }

    /// Smallest radius the sphere rules accept.
    pub fn min_radius(&self) -> f64 {
        2.0 * self.h_max
    }

    pub fn value(&self, p: &Point) -> f64 {
        self.grid.interpolate_even(&self.values, p)
    }

    /// `y^a U_y` at a point with `y > 0`, interpolated between layer midpoints
    /// and held constant in the first and last half layers.
    pub fn weighted_dy(&self, p: &Point) -> f64 {
        let g = &self.grid;
        let t = g.thin_node_count();
        let s = p.y / g.hy - 0.5;
        let m = g.cells_y;
        let at = |j: usize| g.interpolate_thin(&self.flux[j * t..(j + 1) * t], &p.x);
        if s <= 0.0 {
            at(0)
        } else if s >= (m - 1) as f64 {
            at(m - 1)
        } else {
            let j = s.floor() as usize;
            let f = s - j as f64;
            (1.0 - f) * at(j) + f * at(j + 1)
        }
    }

    /// `(∇_x U, U_y)` at a point with `y > 0`.
    pub fn gradient(&self, p: &Point) -> ([f64; 2], f64) {
        let mut gx = [0.0; 2];
        for (k, g) in gx.iter_mut().enumerate().take(self.grid.n) {
            *g = self.grid.interpolate(&self.grad_x[k], p);
        }
        let dy = self.weighted_dy(p) / p.y.powf(self.a);
        (gx, dy)
    }

    pub fn rule(&self, r: f64) -> Result<SphereRule> {
        sphere_quadrature(&self.grid, r, self.n_angles, self.a)
    }

    fn ball_sum<F: Fn(usize) -> ([f64; 8], usize)>(&self, totals: &[f64], r: f64, parts: F) -> Result<f64> {
        let origin = Point::thin(&[0.0, 0.0]);
        Ok(2.0 * ball_integral(&self.grid, &origin, r, totals, parts)?)
    }

    /// `H(r) = ∫_{S_r} U² μ`.
    pub fn height(&self, r: f64) -> Result<f64> {
        let rule = self.rule(r)?;
        Ok(2.0 * rule.integrate(|p| {
            let u = self.value(p);
            u * u * self.geo.mu_tilde_at(p)
        }))
    }

    /// `∫_{S_r} U² L_a|X|`.
    pub fn height_la(&self, r: f64) -> Result<f64> {
        let rule = self.rule(r)?;
        Ok(2.0 * rule.integrate(|p| {
            let u = self.value(p);
            u * u * self.geo.la_r_unweighted_at(p)
        }))
    }

    /// `D(r) = ∫_{B_r} ⟨A∇U,∇U⟩ |y|^a`.
    pub fn dirichlet(&self, r: f64) -> Result<f64> {
        self.ball_sum(&self.cell_energy, r, |c| cell_energy_corners(&self.grid, &self.coeff, &self.values, c))
    }

    /// `B(r) = ∫_{B_r} U² |y|^a`.
    pub fn mass(&self, r: f64) -> Result<f64> {
        self.ball_sum(&self.cell_mass, r, |c| cell_product_corners(&self.grid, &self.values, &self.values, c))
    }

    /// `∫_{B_r} U f |y|^a`.
    pub fn source_pairing(&self, r: f64) -> Result<f64> {
        self.ball_sum(&self.cell_source, r, |c| cell_product_corners(&self.grid, &self.values, &self.f, c))
    }

    /// `I(r) = D(r) + ∫_{B_r} U f |y|^a`.
    pub fn total_energy(&self, r: f64) -> Result<f64> {
        Ok(self.dirichlet(r)? + self.source_pairing(r)?)
    }

    /// Conormal derivative `⟨A∇U, ν⟩` at a sphere point.
    fn conormal(&self, rule: &SphereRule, p: &Point) -> f64 {
        let nu = rule.normal(p);
        let (gx, dy) = self.gradient(p);
        let b = self.geo.coefficient().b_at(&p.x);
        let mut s = dy * nu.y;
        for i in 0..self.grid.n {
            for j in 0..self.grid.n {
                s += b[i][j] * gx[j] * nu.x[i];
            }
        }
        s
    }

    /// `I(r) = ∫_{S_r} U ⟨A∇U,ν⟩ |y|^a` evaluated on the sphere.
    pub fn total_energy_surface(&self, r: f64) -> Result<f64> {
        let rule = self.rule(r)?;
        Ok(2.0 * rule.integrate(|p| self.value(p) * self.conormal(&rule, p)))
    }

    /// `∫_{S_r} ⟨A∇U,ν⟩² / μ̃ |y|^a`.
    pub fn conormal_square(&self, r: f64) -> Result<f64> {
        let rule = self.rule(r)?;
        Ok(2.0 * rule.integrate(|p| {
            let c = self.conormal(&rule, p);
            c * c / self.geo.mu_tilde_at(p)
        }))
    }

    /// `G(r)`, falling back to `(n + a)/r` when `H(r) ≤ h_floor`.
    pub fn g_ratio(&self, r: f64, h_floor: f64) -> Result<f64> {
        let h = self.height(r)?;
        let na = self.grid.n as f64 + self.a;
        if h <= h_floor {
            return Ok(na / r);
        }
        Ok(self.height_la(r)? / h)
    }
}

/// `H(r)` of a solution.
pub fn height(sol: &SolutionField, problem: &ProblemSpec, r: f64) -> Result<f64> {
    Analysis::new(sol, problem)?.height(r)
}

/// `D(r)` of a solution.
pub fn dirichlet(sol: &SolutionField, problem: &ProblemSpec, r: f64) -> Result<f64> {
    Analysis::new(sol, problem)?.dirichlet(r)
}

/// `B(r)` of a solution.
pub fn mass(sol: &SolutionField, problem: &ProblemSpec, r: f64) -> Result<f64> {
    Analysis::new(sol, problem)?.mass(r)
}

/// `I(r)` by the solid formula and by the surface integral.
pub fn total_energy(sol: &SolutionField, problem: &ProblemSpec, r: f64) -> Result<(f64, f64)> {
    let an = Analysis::new(sol, problem)?;
    Ok((an.total_energy(r)?, an.total_energy_surface(r)?))
}

/// `G(r)` with the default floor relative to `h_max`.
pub fn g_ratio(sol: &SolutionField, problem: &ProblemSpec, r: f64, h_max: f64) -> Result<f64> {
    Analysis::new(sol, problem)?.g_ratio(r, 1e-14 * h_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::ProblemDescription;
    use crate::grid::build_grid;
    use crate::oracle::{exact_solution, OracleKind};
    use std::f64::consts::PI;

    pub(crate) fn sampled(kind: OracleKind, n: usize, h: f64, a: f64) -> (ProblemSpec, SolutionField) {
        let g = build_grid(n, 1.0, h, h, a).unwrap();
        let p = ProblemSpec::build(&g, a, &ProblemDescription::default()).unwrap();
        let ex = exact_solution(kind, a).unwrap();
        let u = g.sample(|q| ex.value(q));
        let t = g.thin_node_count();
        let sol = SolutionField::from_parts(g, u, &p.psi, vec![0.0; t], 0, 0.0);
        (p, sol)
    }

    #[test]
    fn zero_field_has_zero_functionals() {
        let g = build_grid(1, 1.0, 0.05, 0.05, 0.3).unwrap();
        let p = ProblemSpec::build(&g, 0.3, &ProblemDescription::default()).unwrap();
        let t = g.thin_node_count();
        let sol = SolutionField::from_parts(g.clone(), vec![0.0; g.node_count()], &p.psi, vec![0.0; t], 0, 0.0);
        let an = Analysis::new(&sol, &p).unwrap();
        assert_eq!(an.height(0.5).unwrap(), 0.0);
        assert_eq!(an.total_energy(0.5).unwrap(), 0.0);
        assert_eq!(an.g_ratio(0.5, 0.0).unwrap(), 1.3 / 0.5);
    }

    #[test]
    fn profile_height_and_scaling() {
        let (p, sol) = sampled(OracleKind::SignoriniProfile, 1, 1.0 / 128.0, 0.0);
        let an = Analysis::new(&sol, &p).unwrap();
        let h1 = an.height(1.0).unwrap();
        assert!((h1 - PI).abs() < 1e-3, "{h1}");
        let h5 = an.height(0.5).unwrap();
        assert!((h5 / h1 / 0.0625 - 1.0).abs() < 0.01);
    }

    #[test]
    fn profile_energy_identities() {
        let (p, sol) = sampled(OracleKind::SignoriniProfile, 1, 1.0 / 128.0, 0.0);
        let an = Analysis::new(&sol, &p).unwrap();
        for &r in &[0.3, 0.5, 0.7] {
            let d = an.dirichlet(r).unwrap();
            let h = an.height(r).unwrap();
            assert!((d / (1.5 * h / r) - 1.0).abs() < 0.02, "r {r}");
            let s = an.total_energy_surface(r).unwrap();
            assert!((s / d - 1.0).abs() < 0.02, "r {r}: {s} vs {d}");
        }
    }

    #[test]
    fn constant_field() {
        let g = build_grid(1, 1.0, 0.05, 0.05, 0.5).unwrap();
        let p = ProblemSpec::build(&g, 0.5, &ProblemDescription::default()).unwrap();
        let t = g.thin_node_count();
        let sol = SolutionField::from_parts(g.clone(), vec![2.0; g.node_count()], &p.psi, vec![0.0; t], 0, 0.0);
        let an = Analysis::new(&sol, &p).unwrap();
        assert!(an.dirichlet(0.6).unwrap().abs() < 1e-14);
        // 4 · ∫_{B_r} |y|^a with ∫_{B_r} |y|^a = 2 r^{2+a}/(2+a) · √π Γ((1+a)/2)/Γ(1+a/2)
        use statrs::function::gamma::gamma;
        let r: f64 = 0.6;
        let exact = 4.0 * 2.0 * r.powf(2.5) / 2.5 * PI.sqrt() * gamma(0.75) / gamma(1.25);
        assert!((an.mass(r).unwrap() / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn y_power_dirichlet_closed_form() {
        // D(1) = (1-a)² ∫_{B_1} |y|^{-a}; ∫_{B_1}|y|^{-a} = 2/(2-a) · √π Γ((1-a)/2)/Γ(1-a/2)
        use statrs::function::gamma::gamma;
        for &a in &[0.0, 0.25, 0.5] {
            let (p, sol) = sampled(OracleKind::YPower, 1, 1.0 / 64.0, a);
            let an = Analysis::new(&sol, &p).unwrap();
            let exact = (1.0 - a).powi(2) * 2.0 / (2.0 - a) * PI.sqrt() * gamma((1.0 - a) / 2.0) / gamma(1.0 - a / 2.0);
            let d = an.dirichlet(1.0).unwrap();
            assert!((d / exact - 1.0).abs() < 0.02, "a {a}: {d} vs {exact}");
        }
    }

    #[test]
    fn identity_coefficients_give_radial_g() {
        let (p, sol) = sampled(OracleKind::SignoriniProfile, 1, 1.0 / 32.0, 0.5);
        let an = Analysis::new(&sol, &p).unwrap();
        for &r in &[0.2, 0.5, 0.9] {
            let g = an.g_ratio(r, 0.0).unwrap();
            assert!((g - 1.5 / r).abs() < 1e-12 / r);
        }
    }

    #[test]
    fn radius_checks() {
        let (p, sol) = sampled(OracleKind::EvenPoly, 1, 0.1, 0.0);
        let an = Analysis::new(&sol, &p).unwrap();
        assert!(matches!(an.height(0.1), Err(Error::UnsupportedRadius { .. })));
        assert!(an.height(1.2).is_err());
    }
}
