//! Discrete weighted energy `∫ ⟨A∇U, ∇U⟩ y^a` and everything derived from it.
//!
//! The cell quadrature splits into a thin part and a normal part.
//!
//! * Thin part: at each corner of a cell the thin gradient is taken from the
//!   cell edges through that corner and contracted with `B` at the cell centre.
//!   Bottom corners carry the lower share of the layer measure, top corners the
//!   upper share (see [`crate::grid::Layer`]).
//! * Normal part: every vertical edge carries the exact conductance
//!   `1/∫ y^{-a}` of its layer times its share of the thin cell area.
//!
//! Because `B` does not depend on `y`, the matrix factors as
//! `K = S ⊗ diag(ω) + diag(A) ⊗ T`, with `S` the thin stiffness, `ω_j` the
//! row share of the layer measures, `A` the thin control areas and `T` the
//! one-dimensional conductance Laplacian. Only those factors are stored.

use crate::coefficients::{CoefficientField, ProblemSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

#[derive(Debug, Clone)]
pub struct SymmetricForm {
    pub grid: Grid,
    /// In-plane neighbour offsets `(di, dk)` with a nonzero coefficient somewhere.
    offsets: Vec<(isize, isize)>,
    /// Linear index shift of each offset.
    shifts: Vec<isize>,
    /// Thin stiffness, `thin_nodes × offsets`.
    thin_stiffness: Vec<f64>,
    /// Row share `ω_j` of the layer measures.
    row_share: Vec<f64>,
    /// Layer conductances.
    conductance: Vec<f64>,
    /// Thin control area per thin node.
    pub thin_area: Vec<f64>,
    /// Weighted control volume per node.
    pub row_weight: Vec<f64>,
    pub load: Vec<f64>,
    /// Dirichlet rows.
    pub fixed: Vec<bool>,
    pub thin_rows: Vec<usize>,
}

/// Thin-gradient functionals at the corners of a thin cell. Each corner has up
/// to `n` gradient components, each a difference of two nodes.
fn corner_gradients(grid: &Grid, ci: usize, ck: usize) -> Vec<Vec<(usize, usize)>> {
    let h = grid.n;
    let mut out = Vec::new();
    if h == 1 {
        let e = (grid.node_index(ci, 0, 0), grid.node_index(ci + 1, 0, 0));
        out.push(vec![e]);
        out.push(vec![e]);
    } else {
        for t in 0..4 {
            let di = t & 1;
            let dk = (t >> 1) & 1;
            let g1 = (grid.node_index(ci, ck + dk, 0), grid.node_index(ci + 1, ck + dk, 0));
            let g2 = (grid.node_index(ci + di, ck, 0), grid.node_index(ci + di, ck + 1, 0));
            out.push(vec![g1, g2]);
        }
    }
    out
}

fn thin_cells(grid: &Grid) -> impl Iterator<Item = (usize, usize)> + '_ {
    let nk = if grid.n == 2 { grid.cells_x } else { 1 };
    (0..nk).flat_map(move |ck| (0..grid.cells_x).map(move |ci| (ci, ck)))
}

fn thin_cell_centre(grid: &Grid, ci: usize, ck: usize) -> [f64; 2] {
    let mut x = [grid.x_coord(ci) + 0.5 * grid.hx, 0.0];
    if grid.n == 2 {
        x[1] = grid.x_coord(ck) + 0.5 * grid.hx;
    }
    x
}

/// Per-corner thin energies `w ⟨B g, g⟩` of one thin cell for the values of
/// one node row (`base` is the linear index of the row start).
fn thin_corner_energies(grid: &Grid, b: &[[f64; 2]; 2], ci: usize, ck: usize, values: &[f64], base: usize) -> [f64; 4] {
    let w = grid.thin_cell_area() / grid.thin_corners() as f64;
    let h = grid.hx;
    let mut out = [0.0; 4];
    for (slot, grads) in out.iter_mut().zip(corner_gradients(grid, ci, ck)) {
        let mut g = [0.0; 2];
        for (p, &(lo, hi)) in grads.iter().enumerate() {
            g[p] = (values[base + hi] - values[base + lo]) / h;
        }
        let mut q = 0.0;
        for p in 0..grid.n {
            for r in 0..grid.n {
                q += b[p][r] * g[p] * g[r];
            }
        }
        *slot = w * q;
    }
    out
}

pub fn assemble_energy(grid: &Grid, problem: &ProblemSpec) -> Result<SymmetricForm> {
    let pg = &problem.grid;
    if pg.n != grid.n
        || pg.node_count() != grid.node_count()
        || (pg.radius - grid.radius).abs() > 1e-14 * grid.radius
        || (pg.a - grid.a).abs() > 1e-15
    {
        return Err(Error::Assembly("problem was built on a different grid".into()));
    }
    if problem.f.len() != grid.node_count() || problem.psi.len() != grid.thin_node_count() {
        return Err(Error::Assembly("data tables do not match the grid".into()));
    }
    Ok(assemble_with(grid, &problem.coeff, &problem.f))
}

/// Assembly from a coefficient field and nodal source values.
pub fn assemble_with(grid: &Grid, coeff: &CoefficientField, f: &[f64]) -> SymmetricForm {
    let n = grid.n;
    let nx = grid.nodes_x() as isize;
    let all_offsets: Vec<(isize, isize)> = if n == 1 {
        vec![(0, 0), (-1, 0), (1, 0)]
    } else {
        let mut v = vec![(0, 0)];
        for dk in -1..=1 {
            for di in -1..=1 {
                if (di, dk) != (0, 0) {
                    v.push((di, dk));
                }
            }
        }
        v
    };
    let n_off = all_offsets.len();
    let t_count = grid.thin_node_count();
    let mut stiff = vec![0.0; t_count * n_off];
    let offset_slot = |from: usize, to: usize| -> usize {
        let (fi, fk, _) = grid.node_ijk(from);
        let (ti, tk, _) = grid.node_ijk(to);
        let d = (ti as isize - fi as isize, tk as isize - fk as isize);
        all_offsets.iter().position(|&o| o == d).expect("corner stencil stays within one cell")
    };

    let w = grid.thin_cell_area() / grid.thin_corners() as f64;
    let h2 = grid.hx * grid.hx;
    for (ci, ck) in thin_cells(grid) {
        let b = coeff.b_at(&thin_cell_centre(grid, ci, ck));
        for grads in corner_gradients(grid, ci, ck) {
            // g_p = (U[hi_p] - U[lo_p]) / h
            for (p, &(lo_p, hi_p)) in grads.iter().enumerate() {
                for (r, &(lo_r, hi_r)) in grads.iter().enumerate() {
                    let c = w * b[p][r] / h2;
                    if c == 0.0 {
                        continue;
                    }
                    for &(u, su) in &[(lo_p, -1.0), (hi_p, 1.0)] {
                        for &(v, sv) in &[(lo_r, -1.0), (hi_r, 1.0)] {
                            stiff[u * n_off + offset_slot(u, v)] += c * su * sv;
                        }
                    }
                }
            }
        }
    }

    let used: Vec<usize> = (0..n_off)
        .filter(|&o| o == 0 || (0..t_count).any(|t| stiff[t * n_off + o] != 0.0))
        .collect();
    let offsets: Vec<(isize, isize)> = used.iter().map(|&o| all_offsets[o]).collect();
    let shifts = offsets.iter().map(|&(di, dk)| di + dk * nx).collect();
    let thin_stiffness = (0..t_count)
        .flat_map(|t| used.iter().map(move |&o| (t, o)))
        .map(|(t, o)| stiff[t * n_off + o])
        .collect();

    let m = grid.cells_y;
    let row_share: Vec<f64> = (0..=m)
        .map(|j| {
            let mut s = 0.0;
            if j < m {
                s += grid.layers[j].lower;
            }
            if j > 0 {
                s += grid.layers[j - 1].upper;
            }
            s
        })
        .collect();
    let conductance = grid.layers.iter().map(|l| l.conductance).collect();
    let thin_area: Vec<f64> = (0..t_count).map(|t| grid.thin_control_area(t)).collect();
    let row_weight: Vec<f64> = (0..grid.node_count())
        .map(|i| thin_area[i % t_count] * row_share[i / t_count])
        .collect();
    let load = f.iter().zip(&row_weight).map(|(fi, wi)| fi * wi).collect();
    let fixed = (0..grid.node_count()).map(|i| grid.is_boundary(i)).collect();

    SymmetricForm {
        grid: grid.clone(),
        offsets,
        shifts,
        thin_stiffness,
        row_share,
        conductance,
        thin_area,
        row_weight,
        load,
        fixed,
        thin_rows: (0..t_count).collect(),
    }
}

impl SymmetricForm {
    pub fn len(&self) -> usize {
        self.row_weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_weight.is_empty()
    }

    fn thin_count(&self) -> usize {
        self.thin_area.len()
    }

    /// Calls `visit(column, coefficient)` for every structural nonzero of row `i`,
    /// the diagonal first.
    #[inline]
    pub fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, mut visit: F) {
        let t_count = self.thin_count();
        let t = i % t_count;
        let j = i / t_count;
        let n_off = self.offsets.len();
        let share = self.row_share[j];
        let row = &self.thin_stiffness[t * n_off..(t + 1) * n_off];
        let m = self.conductance.len();
        let up = if j < m { self.conductance[j] } else { 0.0 };
        let down = if j > 0 { self.conductance[j - 1] } else { 0.0 };
        let area = self.thin_area[t];
        visit(i, share * row[0] + area * (up + down));
        for o in 1..n_off {
            let c = row[o];
            if c != 0.0 {
                visit((i as isize + self.shifts[o]) as usize, share * c);
            }
        }
        if j < m {
            visit(i + t_count, -area * up);
        }
        if j > 0 {
            visit(i - t_count, -area * down);
        }
    }

    #[inline]
    pub fn diagonal(&self, i: usize) -> f64 {
        let t_count = self.thin_count();
        let t = i % t_count;
        let j = i / t_count;
        let m = self.conductance.len();
        let up = if j < m { self.conductance[j] } else { 0.0 };
        let down = if j > 0 { self.conductance[j - 1] } else { 0.0 };
        self.row_share[j] * self.thin_stiffness[t * self.offsets.len()] + self.thin_area[t] * (up + down)
    }

    /// `(K U)_i`.
    #[inline]
    pub fn row_dot(&self, i: usize, u: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_each_in_row(i, |c, v| s += v * u[c]);
        s
    }

    /// `K U` on every row.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.row_dot(i, u)).collect()
    }

    /// `½⟨KU,U⟩ + ⟨load,U⟩`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let ku = self.apply(u);
        ku.iter()
            .zip(u)
            .zip(&self.load)
            .map(|((k, x), l)| 0.5 * k * x + l * x)
            .sum()
    }

    /// Number of stored in-plane offsets.
    pub fn stencil_width(&self) -> usize {
        self.offsets.len() + 2
    }
}

/// `K U + load` on every node.
pub fn apply_operator(form: &SymmetricForm, u: &[f64]) -> Vec<f64> {
    (0..form.len()).map(|i| form.row_dot(i, u) + form.load[i]).collect()
}

/// Weighted `L²` norm of the pointwise residual `(KU + load)_i / W_i` over the
/// free rows off the thin set whose node satisfies `keep`.
pub fn residual_norm<F: Fn(&Point) -> bool>(form: &SymmetricForm, u: &[f64], keep: F) -> f64 {
    let g = &form.grid;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..form.len() {
        if form.fixed[i] || g.is_thin(i) {
            continue;
        }
        let p = g.node_point(i);
        if !keep(&p) {
            continue;
        }
        let w = form.row_weight[i];
        let r = (form.row_dot(i, u) + form.load[i]) / w;
        num += w * r * r;
        den += w;
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Discrete weighted Neumann trace `y^a ∂_y U` at thin nodes: the flux through
/// the first layer with the exact layer conductance.
pub fn neumann_trace(grid: &Grid, u: &[f64], a: f64) -> Vec<f64> {
    let t = grid.thin_node_count();
    let c0 = if (a - grid.a).abs() < 1e-15 {
        grid.layers[0].conductance
    } else {
        let h = grid.hy;
        if (1.0 - a).abs() < 1e-14 {
            0.0
        } else {
            (1.0 - a) / h.powf(1.0 - a)
        }
    };
    (0..t).map(|i| c0 * (u[i + t] - u[i])).collect()
}

/// Trace from the discrete balance at thin rows: `-(KU + load)_i / A_i`. For a
/// solution of the discrete obstacle problem this makes complementarity exact.
pub fn balance_trace(form: &SymmetricForm, u: &[f64]) -> Vec<f64> {
    form.thin_rows
        .iter()
        .map(|&i| -(form.row_dot(i, u) + form.load[i]) / form.thin_area[i])
        .collect()
}

/// Energy density integral `∫_cell ⟨A∇U,∇U⟩ y^a` under the assembly quadrature.
pub fn cell_energy(grid: &Grid, coeff: &CoefficientField, u: &[f64], cell: usize) -> f64 {
    let (parts, count) = cell_energy_corners(grid, coeff, u, cell);
    parts[..count].iter().sum()
}

/// `cell_energy` split over the corner sub-boxes in `cell_nodes` order. Each
/// vertical difference is shared equally by the two sub-boxes it crosses.
pub fn cell_energy_corners(grid: &Grid, coeff: &CoefficientField, u: &[f64], cell: usize) -> ([f64; 8], usize) {
    let (ci, ck, cj) = grid.cell_ijk(cell);
    let t = grid.thin_node_count();
    let layer = &grid.layers[cj];
    let b = coeff.b_at(&thin_cell_centre(grid, ci, ck));
    let bottom = thin_corner_energies(grid, &b, ci, ck, u, cj * t);
    let top = thin_corner_energies(grid, &b, ci, ck, u, (cj + 1) * t);
    let (nodes, count) = grid.cell_nodes(cell);
    let half = count / 2;
    let w = grid.thin_cell_area() / grid.thin_corners() as f64;
    let mut out = [0.0; 8];
    for k in 0..half {
        let d = u[nodes[half + k]] - u[nodes[k]];
        let vertical = 0.5 * layer.conductance * w * d * d;
        out[k] = layer.lower * bottom[k] + vertical;
        out[half + k] = layer.upper * top[k] + vertical;
    }
    (out, count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// A half-space field extended to `y < 0`.
#[derive(Debug, Clone)]
pub struct ReflectedField {
    pub grid: Grid,
    pub parity: Parity,
    pub half: Vec<f64>,
}

impl ReflectedField {
    pub fn value(&self, p: &Point) -> f64 {
        let v = self.grid.interpolate(&self.half, &Point { x: p.x, y: p.y.abs() });
        match self.parity {
            Parity::Odd if p.y < 0.0 => -v,
            _ => v,
        }
    }

    /// Node values on the full lattice `y_j, j = -M..=M`, lowest layer first.
    pub fn full_values(&self) -> Vec<f64> {
        let t = self.grid.thin_node_count();
        let m = self.grid.cells_y;
        let mut out = Vec::with_capacity(t * (2 * m + 1));
        for jj in 0..=(2 * m) {
            let (j, neg) = if jj < m { (m - jj, true) } else { (jj - m, false) };
            for i in 0..t {
                let v = self.half[j * t + i];
                out.push(if neg && self.parity == Parity::Odd { -v } else { v });
            }
        }
        out
    }
}

pub fn reflect(grid: &Grid, u: &[f64], parity: Parity) -> ReflectedField {
    ReflectedField {
        grid: grid.clone(),
        parity,
        half: u.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientSpec, ProblemDescription};
    use crate::grid::build_grid;
    use crate::oracle::{exact_solution, OracleKind};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn form_for(n: usize, h: f64, a: f64) -> SymmetricForm {
        let g = build_grid(n, 1.0, h, h, a).unwrap();
        let p = ProblemSpec::build(&g, a, &ProblemDescription::default()).unwrap();
        assemble_energy(&g, &p).unwrap()
    }

    fn random_field(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn classical_stencil_for_unit_weight() {
        let form = form_for(1, 0.25, 0.0);
        let g = &form.grid;
        let i = g.node_index(4, 0, 2);
        let mut row = Vec::new();
        form.for_each_in_row(i, |c, v| row.push((c, v)));
        // h² · (4/h², -1/h² ×4) = (4, -1, -1, -1, -1)
        assert_relative_eq!(row[0].1, 4.0, epsilon = 1e-13);
        for &(_, v) in &row[1..] {
            assert_relative_eq!(v, -1.0, epsilon = 1e-13);
        }
        assert_eq!(row.len(), 5);

        let form3 = form_for(2, 0.25, 0.0);
        let g3 = &form3.grid;
        let i3 = g3.node_index(3, 4, 2);
        let mut row3 = Vec::new();
        form3.for_each_in_row(i3, |c, v| row3.push((c, v)));
        assert_eq!(row3.len(), 7);
        let h = 0.25;
        assert_relative_eq!(row3[0].1, 6.0 * h, epsilon = 1e-13);
        for &(_, v) in &row3[1..] {
            assert_relative_eq!(v, -h, epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_field_zero_residual() {
        let form = form_for(1, 0.1, 0.3);
        let r = apply_operator(&form, &vec![0.0; form.len()]);
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reference_fields_are_discretely_exact() {
        for &a in &[0.0, 0.25, 0.5, 0.75] {
            let form = form_for(1, 0.05, a);
            for kind in [OracleKind::YPower, OracleKind::EvenPoly] {
                let ex = exact_solution(kind, a).unwrap();
                let u = form.grid.sample(|p| ex.value(p));
                let res = residual_norm(&form, &u, |_| true);
                assert!(res < 1e-9, "a = {a}, {kind:?}: {res:e}");
            }
        }
    }

    #[test]
    fn y_power_trace_is_exact() {
        for &a in &[0.0, 0.25, 0.5, 0.75] {
            let form = form_for(1, 0.1, a);
            let ex = exact_solution(OracleKind::YPower, a).unwrap();
            let u = form.grid.sample(|p| ex.value(p));
            for t in neumann_trace(&form.grid, &u, a) {
                assert_relative_eq!(t, 1.0 - a, epsilon = 1e-12);
            }
            let bal = balance_trace(&form, &u);
            for (k, t) in bal.iter().enumerate() {
                if !form.fixed[k] {
                    assert_relative_eq!(*t, 1.0 - a, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn even_field_trace_vanishes() {
        let mut prev = f64::INFINITY;
        for &h in &[0.1, 0.05, 0.025] {
            let g = build_grid(1, 1.0, h, h, 0.0).unwrap();
            let u = g.sample(|p| (1.0 + p.x[0]) * (p.y * p.y).cos());
            let tr = neumann_trace(&g, &u, 0.0);
            let m = tr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(m < prev);
            prev = m;
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn profile_trace_vanishes_on_the_positive_side() {
        let mut last = Vec::new();
        for &h in &[0.05, 0.025, 0.0125] {
            let g = build_grid(1, 1.0, h, h, 0.0).unwrap();
            let ex = exact_solution(OracleKind::SignoriniProfile, 0.0).unwrap();
            let u = g.sample(|p| ex.value(p));
            let tr = neumann_trace(&g, &u, 0.0);
            let worst = (0..g.thin_node_count())
                .filter(|&i| g.node_point(i).x[0] >= 0.25)
                .map(|i| tr[i].abs())
                .fold(0.0, f64::max);
            last.push(worst);
        }
        assert!(last[2] < last[0] && last[2] < 0.02, "{last:?}");
    }

    #[test]
    fn energy_matches_cell_sum() {
        let g = build_grid(2, 1.0, 0.25, 0.2, 0.4).unwrap();
        let desc = ProblemDescription {
            coefficients: CoefficientSpec::affine_b11(2, 0.1),
            ..Default::default()
        };
        let p = ProblemSpec::build(&g, 0.4, &desc).unwrap();
        let form = assemble_energy(&g, &p).unwrap();
        let u = random_field(g.node_count(), 3);
        let quad: f64 = form.apply(&u).iter().zip(&u).map(|(k, x)| k * x).sum();
        let cells: f64 = (0..g.cell_count()).map(|c| cell_energy(&g, &p.coeff, &u, c)).sum();
        assert_relative_eq!(quad, cells, max_relative = 1e-12);
    }

    #[test]
    fn energy_converges_for_smooth_field() {
        // U = x y² is smooth after even reflection; with a = 0.5
        // ∫_{[-1,1]×[0,1]} |∇U|² y^a = 2/(5+a) + (2/3)·4/(3+a)
        let a = 0.5;
        let exact = 2.0 / (5.0 + a) + (2.0 / 3.0) * 4.0 / (3.0 + a);
        let mut errs = Vec::new();
        for &h in &[0.1, 0.05, 0.025, 0.0125] {
            let form = form_for(1, h, a);
            let u = form.grid.sample(|p| p.x[0] * p.y * p.y);
            let q: f64 = form.apply(&u).iter().zip(&u).map(|(k, x)| k * x).sum();
            errs.push((q - exact).abs());
        }
        let order = (errs[2] / errs[3]).log2();
        assert!(order >= 1.9, "{errs:?}");
    }

    #[test]
    fn flux_compatibility() {
        let g = build_grid(1, 1.0, 0.05, 0.05, 0.25).unwrap();
        let p = ProblemSpec::build(&g, 0.25, &ProblemDescription::default()).unwrap();
        let form = assemble_energy(&g, &p).unwrap();
        let ex = exact_solution(OracleKind::YPower, 0.25).unwrap();
        let u = g.sample(|q| ex.value(q) + 0.2 * q.x[0]);
        let tr = neumann_trace(&g, &u, 0.25);
        let rows: f64 = form.thin_rows.iter().filter(|&&i| !form.fixed[i]).map(|&i| form.row_dot(i, &u)).sum();
        let flux: f64 = form
            .thin_rows
            .iter()
            .filter(|&&i| !form.fixed[i])
            .map(|&i| tr[i] * form.thin_area[i])
            .sum();
        assert!((rows + flux).abs() < 0.05 * flux.abs());
    }

    #[test]
    fn reflection() {
        let g = build_grid(1, 1.0, 0.1, 0.1, 0.5).unwrap();
        let sq = g.sample(|p| p.y * p.y);
        let even = reflect(&g, &sq, Parity::Even);
        assert_relative_eq!(even.value(&Point::new(&[0.3], -0.5)), 0.25, epsilon = 1e-12);
        let yp = g.sample(|p| p.y.powf(0.5));
        let odd = reflect(&g, &yp, Parity::Odd);
        assert_relative_eq!(odd.value(&Point::new(&[0.3], -0.4)), -(0.4f64.sqrt()), epsilon = 1e-12);
        let full = even.full_values();
        let t = g.thin_node_count();
        let m = g.cells_y;
        assert_eq!(&full[m * t..], &sq[..]);
    }

    #[test]
    fn rejects_mismatched_problem() {
        let g = build_grid(1, 1.0, 0.1, 0.1, 0.0).unwrap();
        let g2 = build_grid(1, 1.0, 0.05, 0.05, 0.0).unwrap();
        let p = ProblemSpec::build(&g2, 0.0, &ProblemDescription::default()).unwrap();
        assert!(matches!(assemble_energy(&g, &p), Err(Error::Assembly(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn symmetric_and_semidefinite(seed in 0u64..1000, a in 0.0f64..0.95, n in 1usize..3) {
            let g = build_grid(n, 1.0, 0.25, 0.2, a).unwrap();
            let desc = ProblemDescription {
                coefficients: CoefficientSpec::affine_b11(n, 0.3),
                ..Default::default()
            };
            let p = ProblemSpec::build(&g, a, &desc).unwrap();
            let form = assemble_energy(&g, &p).unwrap();
            let u = random_field(g.node_count(), seed);
            let v = random_field(g.node_count(), seed + 1);
            let ku = form.apply(&u);
            let kv = form.apply(&v);
            let uv: f64 = ku.iter().zip(&v).map(|(x, y)| x * y).sum();
            let vu: f64 = kv.iter().zip(&u).map(|(x, y)| x * y).sum();
            prop_assert!((uv - vu).abs() <= 1e-12 * uv.abs().max(1.0));
            let uu: f64 = ku.iter().zip(&u).map(|(x, y)| x * y).sum();
            prop_assert!(uu >= -1e-12);
            // constants are in the kernel
            let ones = vec![1.0; g.node_count()];
            prop_assert!(form.apply(&ones).iter().all(|v| v.abs() < 1e-12));
        }
    }
}
