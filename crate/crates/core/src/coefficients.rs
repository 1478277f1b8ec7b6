//! Coefficient matrix `A(x) = B(x) ⊕ 1`, obstacle, source and boundary data,
//! and the change of variables that makes `A(x0)` the identity.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_grid, Grid, Point};
use crate::oracle::{exact_solution, OracleKind};
use crate::solver::SolutionField;

/// A scalar function of a point of the half space.
pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Thin block `B(x)` as a function of the thin variables, stored in a 2×2
/// array whose leading `n×n` part is used.
pub type MatrixFn = Arc<dyn Fn(&[f64; 2]) -> [[f64; 2]; 2] + Send + Sync>;

/// Monomial `c · x1^p1 · x2^p2 · y^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub c: f64,
    #[serde(default)]
    pub x: Vec<i32>,
    #[serde(default)]
    pub y: f64,
}

/// Description of obstacle, source or boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarSpec {
    Constant { value: f64 },
    Polynomial { terms: Vec<Term> },
    /// Node values; thin-node tables are extended constantly in `y`.
    Tabulated { values: Vec<f64> },
    Oracle { name: OracleKind },
    Sum { terms: Vec<ScalarSpec> },
    Scaled { factor: f64, inner: Box<ScalarSpec> },
}

impl Default for ScalarSpec {
    fn default() -> Self {
        ScalarSpec::Constant { value: 0.0 }
    }
}

impl ScalarSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        ScalarSpec::Constant { value }
    }

    pub fn oracle(name: OracleKind) -> Self {
        ScalarSpec::Oracle { name }
    }

    /// Turns the description into an evaluator on `grid` with weight exponent `a`.
    pub fn compile(&self, grid: &Grid, a: f64) -> Result<ScalarFn> {
        Ok(match self {
            ScalarSpec::Constant { value } => {
                let v = *value;
                if !v.is_finite() {
                    return Err(Error::config("constant", "non-finite value"));
                }
                Arc::new(move |_| v)
            }
            ScalarSpec::Polynomial { terms } => {
                for t in terms {
                    if !t.c.is_finite() || !t.y.is_finite() || t.y < 0.0 || t.x.len() > grid.n {
                        return Err(Error::config(
                            "polynomial",
                            format!("malformed term {:?} for n = {}", t, grid.n),
                        ));
                    }
                }
                let terms = terms.clone();
                Arc::new(move |p: &Point| {
                    terms
                        .iter()
                        .map(|t| {
                            let mut v = t.c;
                            for (k, &e) in t.x.iter().enumerate() {
                                v *= p.x[k].powi(e);
                            }
                            if t.y != 0.0 {
                                v *= p.y.abs().powf(t.y);
                            }
                            v
                        })
                        .sum()
                })
            }
            ScalarSpec::Tabulated { values } => {
                let full = if values.len() == grid.node_count() {
                    values.clone()
                } else if values.len() == grid.thin_node_count() {
                    let t = grid.thin_node_count();
                    (0..grid.node_count()).map(|i| values[i % t]).collect()
                } else {
                    return Err(Error::config(
                        "tabulated",
                        format!(
                            "expected {} or {} values, got {}",
                            grid.node_count(),
                            grid.thin_node_count(),
                            values.len()
                        ),
                    ));
                };
                if full.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("tabulated", "non-finite entry"));
                }
                let g = grid.clone();
                Arc::new(move |p: &Point| g.interpolate_even(&full, p))
            }
            ScalarSpec::Oracle { name } => {
                let reference = exact_solution(*name, a)?;
                Arc::new(move |p: &Point| reference.value(p))
            }
            ScalarSpec::Sum { terms } => {
                let parts = terms
                    .iter()
                    .map(|t| t.compile(grid, a))
                    .collect::<Result<Vec<_>>>()?;
                Arc::new(move |p: &Point| parts.iter().map(|f| f(p)).sum())
            }
            ScalarSpec::Scaled { factor, inner } => {
                let c = *factor;
                let f = inner.compile(grid, a)?;
                Arc::new(move |p: &Point| c * f(p))
            }
        })
    }
}

/// Description of the thin block `B(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientSpec {
    #[default]
    Identity,
    /// Entries `b_ij` as scalar descriptions evaluated on the thin set.
    Entries { entries: Vec<Vec<ScalarSpec>> },
    /// One row-major `n×n` matrix per thin node.
    Tabulated { values: Vec<Vec<f64>> },
}

impl CoefficientSpec {
    /// `b_11(x) = 1 + slope · x1`, identity elsewhere.
    pub fn affine_b11(n: usize, slope: f64) -> Self {
        let b11 = ScalarSpec::Polynomial {
            terms: vec![
                Term { c: 1.0, x: vec![], y: 0.0 },
                Term { c: slope, x: vec![1], y: 0.0 },
            ],
        };
        let mut entries = vec![vec![ScalarSpec::zero(); n]; n];
        entries[0][0] = b11;
        if n == 2 {
            entries[1][1] = ScalarSpec::constant(1.0);
        }
        CoefficientSpec::Entries { entries }
    }

    fn compile(&self, grid: &Grid, a: f64) -> Result<(MatrixFn, Option<usize>)> {
        let n = grid.n;
        match self {
            CoefficientSpec::Identity => Ok((Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]]), None)),
            CoefficientSpec::Entries { entries } => {
                if entries.len() != n || entries.iter().any(|r| r.len() != n) {
                    return Err(Error::config(
                        "coefficients",
                        format!("expected a {n}x{n} table of entries"),
                    ));
                }
                let mut fns = Vec::new();
                for row in entries {
                    for e in row {
                        fns.push(e.compile(grid, a)?);
                    }
                }
                Ok((
                    Arc::new(move |x: &[f64; 2]| {
                        let p = Point { x: *x, y: 0.0 };
                        let mut m = [[0.0; 2]; 2];
                        for i in 0..n {
                            for j in 0..n {
                                m[i][j] = fns[i * n + j](&p);
                            }
                        }
                        m
                    }),
                    None,
                ))
            }
            CoefficientSpec::Tabulated { values } => {
                if values.len() != grid.thin_node_count() {
                    return Err(Error::config(
                        "coefficients",
                        format!("expected {} tabulated matrices, got {}", grid.thin_node_count(), values.len()),
                    ));
                }
                if let Some((node, _)) = values.iter().enumerate().find(|(_, m)| m.len() != n * n) {
                    return Err(Error::InvalidCoefficient {
                        node,
                        reason: format!("expected {} entries", n * n),
                    });
                }
                let tn = grid.thin_node_count();
                let nodes = grid.node_count();
                let tables: Vec<Vec<f64>> = (0..n * n)
                    .map(|e| (0..nodes).map(|i| values[i % tn][e]).collect())
                    .collect();
                let g = grid.clone();
                Ok((
                    Arc::new(move |x: &[f64; 2]| {
                        let p = Point { x: *x, y: 0.0 };
                        let mut m = [[0.0; 2]; 2];
                        for i in 0..n {
                            for j in 0..n {
                                m[i][j] = g.interpolate(&tables[i * n + j], &p);
                            }
                        }
                        m
                    }),
                    Some(tn),
                ))
            }
        }
    }
}

/// Validated coefficient field with its ellipticity bounds.
#[derive(Clone)]
pub struct CoefficientField {
    pub n: usize,
    /// `B` at every thin node.
    pub table: Vec<[[f64; 2]; 2]>,
    pub lambda: f64,
    pub big_lambda: f64,
    pub lip: f64,
    pub identity: bool,
    eval: MatrixFn,
    spacing: f64,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("n", &self.n)
            .field("lambda", &self.lambda)
            .field("Lambda", &self.big_lambda)
            .field("lip", &self.lip)
            .field("identity", &self.identity)
            .finish()
    }
}

fn eigen_bounds(m: &[[f64; 2]; 2], n: usize) -> (f64, f64) {
    if n == 1 {
        return (m[0][0], m[0][0]);
    }
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = 0.5 * tr;
    let disc = (half * half - det).max(0.0).sqrt();
    (half - disc, half + disc)
}

fn spectral_norm_of_difference(p: &[[f64; 2]; 2], q: &[[f64; 2]; 2], n: usize) -> f64 {
    let mut d = [[0.0; 2]; 2];
    for i in 0..n {
        for j in 0..n {
            d[i][j] = p[i][j] - q[i][j];
        }
    }
    let (lo, hi) = eigen_bounds(&d, n);
    lo.abs().max(hi.abs())
}

impl CoefficientField {
    fn from_fn(grid: &Grid, eval: MatrixFn, identity: bool) -> Result<Self> {
        let n = grid.n;
        let mut table = Vec::with_capacity(grid.thin_node_count());
        let mut lambda = f64::INFINITY;
        let mut big_lambda = 0.0f64;
        for node in 0..grid.thin_node_count() {
            let p = grid.node_point(node);
            let m = eval(&p.x);
            for i in 0..n {
                for j in 0..n {
                    if !m[i][j].is_finite() {
                        return Err(Error::InvalidCoefficient {
                            node,
                            reason: format!("non-finite entry b_{}{}", i + 1, j + 1),
                        });
                    }
                }
            }
            if n == 2 {
                let scale = m[0][1].abs().max(m[1][0].abs()).max(1.0);
                if (m[0][1] - m[1][0]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidCoefficient {
                        node,
                        reason: format!("asymmetric: b_12 = {} but b_21 = {}", m[0][1], m[1][0]),
                    });
                }
            }
            let (lo, hi) = eigen_bounds(&m, n);
            if lo <= 0.0 {
                return Err(Error::InvalidCoefficient {
                    node,
                    reason: format!("nonpositive eigenvalue {lo}"),
                });
            }
            lambda = lambda.min(lo);
            big_lambda = big_lambda.max(hi);
            table.push(m);
        }

        let mut lip = 0.0f64;
        let nx = grid.nodes_x();
        let nk = if n == 2 { nx } else { 1 };
        for k in 0..nk {
            for i in 0..nx {
                let here = grid.node_index(i, k, 0);
                if i + 1 < nx {
                    let there = grid.node_index(i + 1, k, 0);
                    lip = lip.max(spectral_norm_of_difference(&table[here], &table[there], n) / grid.hx);
                }
                if n == 2 && k + 1 < nk {
                    let there = grid.node_index(i, k + 1, 0);
                    lip = lip.max(spectral_norm_of_difference(&table[here], &table[there], n) / grid.hx);
                }
            }
        }

        Ok(Self {
            n,
            table,
            lambda,
            big_lambda,
            lip,
            identity,
            eval,
            spacing: grid.hx,
        })
    }

    pub fn identity(grid: &Grid) -> Self {
        Self::from_fn(grid, Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]]), true)
            .expect("identity is a valid coefficient field")
    }

    /// `B` at an arbitrary thin point.
    pub fn b_at(&self, x: &[f64; 2]) -> [[f64; 2]; 2] {
        (self.eval)(x)
    }

    /// `Σ_i ∂_i b_ij` by central differences with the grid spacing.
    pub fn divergence_at(&self, x: &[f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        if self.identity {
            return out;
        }
        let h = 0.5 * self.spacing;
        for i in 0..self.n {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            let bp = self.b_at(&xp);
            let bm = self.b_at(&xm);
            for j in 0..self.n {
                out[j] += (bp[i][j] - bm[i][j]) / (2.0 * h);
            }
        }
        out
    }
}

pub fn build_coefficients(grid: &Grid, spec: &CoefficientSpec) -> Result<CoefficientField> {
    let identity = matches!(spec, CoefficientSpec::Identity);
    let (eval, _) = spec.compile(grid, 0.0)?;
    CoefficientField::from_fn(grid, eval, identity)
}

/// `(λ, Λ, lip)`.
pub fn ellipticity_report(field: &CoefficientField) -> (f64, f64, f64) {
    (field.lambda, field.big_lambda, field.lip)
}

/// A fully specified discrete problem on a grid.
#[derive(Clone)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub a: f64,
    pub coeff: CoefficientField,
    /// Obstacle at thin nodes.
    pub psi: Vec<f64>,
    /// Source at every node.
    pub f: Vec<f64>,
    /// Dirichlet data at every node (only boundary nodes are used).
    pub boundary: Vec<f64>,
    pub f_independent_of_y: bool,
    psi_fn: ScalarFn,
    f_fn: ScalarFn,
    boundary_fn: ScalarFn,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("n", &self.grid.n)
            .field("a", &self.a)
            .field("coeff", &self.coeff)
            .field("f_independent_of_y", &self.f_independent_of_y)
            .finish()
    }
}

/// The descriptions a [`ProblemSpec`] is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ProblemDescription {
    #[serde(default)]
    pub coefficients: CoefficientSpec,
    #[serde(default)]
    pub obstacle: ScalarSpec,
    #[serde(default)]
    pub source: ScalarSpec,
    #[serde(default)]
    pub boundary: ScalarSpec,
    #[serde(default)]
    pub source_independent_of_y: bool,
}

impl ProblemSpec {
    pub fn build(grid: &Grid, a: f64, desc: &ProblemDescription) -> Result<Self> {
        if !(0.0..1.0).contains(&a) {
            return Err(Error::config("a", format!("must lie in [0, 1), got {a}")));
        }
        if (grid.a - a).abs() > 1e-15 {
            return Err(Error::config("a", "grid and problem exponents differ"));
        }
        let coeff = build_coefficients(grid, &desc.coefficients)?;
        let psi_fn = desc.obstacle.compile(grid, a)?;
        let f_fn = desc.source.compile(grid, a)?;
        let boundary_fn = desc.boundary.compile(grid, a)?;
        Self::from_parts(grid.clone(), a, coeff, psi_fn, f_fn, boundary_fn, desc.source_independent_of_y)
    }

    fn from_parts(
        grid: Grid,
        a: f64,
        coeff: CoefficientField,
        psi_fn: ScalarFn,
        f_fn: ScalarFn,
        boundary_fn: ScalarFn,
        f_independent_of_y: bool,
    ) -> Result<Self> {
        let psi: Vec<f64> = (0..grid.thin_node_count())
            .map(|i| {
                let p = grid.node_point(i);
                psi_fn(&p)
            })
            .collect();
        let f = grid.sample(|p| f_fn(p));
        let boundary = grid.sample(|p| boundary_fn(p));
        if let Some(i) = psi.iter().position(|v| !v.is_finite()) {
            return Err(Error::config("obstacle", format!("non-finite value at thin node {i}")));
        }
        if let Some(i) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::config("source", format!("non-finite value at node {i}")));
        }
        if let Some(i) = (0..grid.node_count()).find(|&i| grid.is_boundary(i) && !boundary[i].is_finite()) {
            return Err(Error::config("boundary", format!("non-finite value at node {i}")));
        }
        if f_independent_of_y {
            let t = grid.thin_node_count();
            for (i, &v) in f.iter().enumerate() {
                let base = f[i % t];
                if (v - base).abs() > 1e-12 * base.abs().max(1.0) {
                    return Err(Error::config("source", "flagged independent of y but varies with y"));
                }
            }
        }
        Ok(Self {
            grid,
            a,
            coeff,
            psi,
            f,
            boundary,
            f_independent_of_y,
            psi_fn,
            f_fn,
            boundary_fn,
        })
    }

    /// Obstacle at an arbitrary thin point.
    pub fn obstacle_at(&self, x: &[f64; 2]) -> f64 {
        (self.psi_fn)(&Point { x: *x, y: 0.0 })
    }

    pub fn source_at(&self, p: &Point) -> f64 {
        (self.f_fn)(p)
    }

    pub fn boundary_at(&self, p: &Point) -> f64 {
        (self.boundary_fn)(p)
    }

    /// Problem with a different obstacle, keeping everything else.
    pub fn with_obstacle(&self, psi: ScalarFn) -> Result<Self> {
        Self::from_parts(
            self.grid.clone(),
            self.a,
            self.coeff.clone(),
            psi,
            self.f_fn.clone(),
            self.boundary_fn.clone(),
            self.f_independent_of_y,
        )
    }

    /// Problem with different source and boundary data, keeping coefficients and obstacle.
    pub fn with_data(&self, f: ScalarFn, boundary: ScalarFn) -> Result<Self> {
        Self::from_parts(
            self.grid.clone(),
            self.a,
            self.coeff.clone(),
            self.psi_fn.clone(),
            f,
            boundary,
            false,
        )
    }

    /// Same data on another grid with the same exponent.
    pub fn on_grid(&self, grid: &Grid) -> Result<Self> {
        let coeff = CoefficientField::from_fn(grid, self.coeff.eval.clone(), self.coeff.identity)?;
        Self::from_parts(
            grid.clone(),
            self.a,
            coeff,
            self.psi_fn.clone(),
            self.f_fn.clone(),
            self.boundary_fn.clone(),
            self.f_independent_of_y,
        )
    }

    /// Coefficients `x ↦ B(r x)` on another grid with zero data, the problem
    /// a blow-up at scale `r` lives on.
    pub fn rescaled(&self, grid: &Grid, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter { name: "r", value: r });
        }
        let b = self.coeff.eval.clone();
        let eval: MatrixFn = Arc::new(move |x: &[f64; 2]| b(&[r * x[0], r * x[1]]));
        let coeff = CoefficientField::from_fn(grid, eval, self.coeff.identity)?;
        let zero: ScalarFn = Arc::new(|_: &Point| 0.0);
        Self::from_parts(grid.clone(), self.a, coeff, zero.clone(), zero.clone(), zero, true)
    }

    /// Obstacle scale used for relative tolerances.
    pub fn scale(&self) -> f64 {
        let bmax = (0..self.grid.node_count())
            .filter(|&i| self.grid.is_boundary(i))
            .map(|i| self.boundary[i].abs())
            .fold(0.0, f64::max);
        let pmax = self.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        bmax.max(pmax).max(1e-300)
    }
}

/// Symmetric square root of `B(x0)` and its inverse.
fn sqrt_and_inverse(m: &[[f64; 2]; 2], n: usize) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let eig = SymmetricEigen::new(mat);
    let v = &eig.eigenvectors;
    let mut s = [[0.0; 2]; 2];
    let mut si = [[0.0; 2]; 2];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let l = eig.eigenvalues[k];
                s[i][j] += v[(i, k)] * l.sqrt() * v[(j, k)];
                si[i][j] += v[(i, k)] / l.sqrt() * v[(j, k)];
            }
        }
    }
    (s, si)
}

fn mat_mul(p: &[[f64; 2]; 2], q: &[[f64; 2]; 2], n: usize) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[i][j] += p[i][k] * q[k][j];
            }
        }
    }
    out
}

/// Change of thin variables `x ↦ x0 + A^{1/2}(x0) x`.
#[derive(Debug, Clone, Copy)]
pub struct Normalization {
    pub x0: [f64; 2],
    pub sqrt: [[f64; 2]; 2],
    pub inv_sqrt: [[f64; 2]; 2],
}

impl Normalization {
    pub fn map(&self, p: &Point, n: usize) -> Point {
        let mut x = self.x0;
        for i in 0..n {
            for j in 0..n {
                x[i] += self.sqrt[i][j] * p.x[j];
            }
        }
        Point { x, y: p.y }
    }
}

/// Recentres and normalizes a problem and a solution at the thin point `x0`,
/// so that the transformed coefficient matrix is the identity at the origin.
/// The new grid keeps the spacings and shrinks the radius until the mapped
/// box fits inside the original one.
pub fn normalize_at(
    problem: &ProblemSpec,
    field: &SolutionField,
    x0: &[f64],
) -> Result<(ProblemSpec, SolutionField, Normalization)> {
    let grid = &problem.grid;
    let n = grid.n;
    if x0.len() != n {
        return Err(Error::OutOfDomain { point: x0.to_vec() });
    }
    let centre = Point::thin(x0);
    if !grid.contains(&centre) {
        return Err(Error::OutOfDomain { point: x0.to_vec() });
    }
    let b0 = problem.coeff.b_at(&centre.x);
    let (s, si) = sqrt_and_inverse(&b0, n);
    let norm = Normalization {
        x0: centre.x,
        sqrt: s,
        inv_sqrt: si,
    };

    let mut radius = grid.radius;
    for k in 0..n {
        let spread: f64 = (0..n).map(|l| s[k][l].abs()).sum();
        radius = radius.min((grid.radius - x0[k].abs()) / spread);
    }
    let identity_map = x0.iter().all(|&v| v == 0.0) && problem.coeff.identity;
    let new_grid = if identity_map {
        grid.clone()
    } else {
        if radius <= 2.0 * grid.hx.max(grid.hy) {
            return Err(Error::OutOfDomain { point: x0.to_vec() });
        }
        build_grid(n, radius, grid.hx, grid.hy, grid.a)?
    };

    let b_eval = problem.coeff.eval.clone();
    let coeff_fn: MatrixFn = Arc::new(move |x: &[f64; 2]| {
        let p = norm.map(&Point { x: *x, y: 0.0 }, n);
        let b = b_eval(&p.x);
        mat_mul(&mat_mul(&si, &b, n), &si, n)
    });
    let coeff = CoefficientField::from_fn(&new_grid, coeff_fn, problem.coeff.identity)?;

    let at_origin = coeff.b_at(&[0.0, 0.0]);
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            if (at_origin[i][j] - target).abs() > 1e-12 {
                return Err(Error::Internal(format!(
                    "normalized coefficient at the origin is not the identity: {at_origin:?}"
                )));
            }
        }
    }

    let wrap = |f: &ScalarFn| -> ScalarFn {
        let f = f.clone();
        Arc::new(move |p: &Point| f(&norm.map(p, n)))
    };
    let new_problem = ProblemSpec::from_parts(
        new_grid.clone(),
        problem.a,
        coeff,
        wrap(&problem.psi_fn),
        wrap(&problem.f_fn),
        wrap(&problem.boundary_fn),
        problem.f_independent_of_y,
    )?;

    let values = new_grid.sample(|p| grid.interpolate(&field.values, &norm.map(p, n)));
    let thin_trace: Vec<f64> = {
        let mut full = vec![0.0; grid.node_count()];
        let t = grid.thin_node_count();
        for i in 0..grid.node_count() {
            full[i] = field.trace[i % t];
        }
        (0..new_grid.thin_node_count())
            .map(|i| grid.interpolate(&full, &norm.map(&new_grid.node_point(i), n)))
            .collect()
    };
    let new_field = SolutionField::from_parts(
        new_grid,
        values,
        &new_problem.psi,
        thin_trace,
        field.iterations,
        field.final_residual,
    );
    Ok((new_problem, new_field, norm))
}
