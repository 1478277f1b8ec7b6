use crate::coefficients::CoefficientField;
use crate::grid::{Grid, Point};

/// Pointwise geometric quantities of the coefficient field.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    pub n: usize,
    pub a: f64,
    /// `μ = μ̃ |y|^a` at nodes (zero at the origin).
    pub mu: Vec<f64>,
    /// `μ̃ = ⟨AX,X⟩/|X|²` at nodes (one at the origin).
    pub mu_tilde: Vec<f64>,
    /// `L_a|X|` at nodes (zero at the origin).
    pub la_r: Vec<f64>,
    /// `Z = AX/μ̃` at nodes, components `(x1, x2, y)`.
    pub z: Vec<[f64; 3]>,
    coeff: CoefficientField,
}

impl GeometryFields {
    /// `⟨A(x)X,X⟩` and `|X|²`.
    fn quadratic(&self, p: &Point) -> (f64, f64, [[f64; 2]; 2]) {
        let b = self.coeff.b_at(&p.x);
        let mut q = p.y * p.y;
        let mut r2 = p.y * p.y;
        for i in 0..self.n {
            r2 += p.x[i] * p.x[i];
            for j in 0..self.n {
                q += b[i][j] * p.x[i] * p.x[j];
            }
        }
        (q, r2, b)
    }

    pub fn mu_tilde_at(&self, p: &Point) -> f64 {
        let (q, r2, _) = self.quadratic(p);
        if r2 == 0.0 {
            1.0
        } else {
            q / r2
        }
    }

    /// `L_a|X| / |y|^a`.
    pub fn la_r_unweighted_at(&self, p: &Point) -> f64 {
        let (q, r2, b) = self.quadratic(p);
        if r2 == 0.0 {
            return 0.0;
        }
        let r = r2.sqrt();
        let tr: f64 = (0..self.n).map(|i| b[i][i]).sum();
        let div = self.coeff.divergence_at(&p.x);
        let dx: f64 = (0..self.n).map(|j| div[j] * p.x[j]).sum();
        (tr + 1.0 + self.a) / r - q / (r2 * r) + dx / r
    }

    pub fn la_r_at(&self, p: &Point) -> f64 {
        self.la_r_unweighted_at(p) * p.y.abs().powf(self.a)
    }

    pub fn z_at(&self, p: &Point) -> [f64; 3] {
        let (q, r2, b) = self.quadratic(p);
        if r2 == 0.0 {
            return [0.0; 3];
        }
        let mt = q / r2;
        let mut z = [0.0, 0.0, p.y / mt];
        for i in 0..self.n {
            for j in 0..self.n {
                z[i] += b[i][j] * p.x[j] / mt;
            }
        }
        z
    }

    pub fn coefficient(&self) -> &CoefficientField {
        &self.coeff
    }
}

pub fn geometry_fields(grid: &Grid, coeff: &CoefficientField, a: f64) -> GeometryFields {
    let mut g = GeometryFields {
        n: grid.n,
        a,
        mu: Vec::with_capacity(grid.node_count()),
        mu_tilde: Vec::with_capacity(grid.node_count()),
        la_r: Vec::with_capacity(grid.node_count()),
        z: Vec::with_capacity(grid.node_count()),
        coeff: coeff.clone(),
    };
    for i in 0..grid.node_count() {
        let p = grid.node_point(i);
        let w = if p.y == 0.0 && a == 0.0 { 1.0 } else { p.y.abs().powf(a) };
        let mt = g.mu_tilde_at(&p);
        let origin = p.norm(grid.n) == 0.0;
        g.mu_tilde.push(mt);
        g.mu.push(if origin { 0.0 } else { mt * w });
        g.la_r.push(if origin { 0.0 } else { g.la_r_unweighted_at(&p) * w });
        g.z.push(g.z_at(&p));
    }
    g
}
