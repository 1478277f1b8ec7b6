//! Coincidence set, free boundary and extended free boundary of a solution;
//! frequency-based classification, decay exponents, blow-ups and the graph
//! of the regular part.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coefficients::{normalize_at, ProblemSpec};
use crate::error::{Error, Result};
use crate::functionals::{fit_slope, frequency_from_heights, geometric, Analysis};
use crate::grid::{build_grid, Grid, Point, DEFAULT_ANGLES};
use crate::solver::SolutionField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Regular,
    Degenerate,
    Unresolved,
}

/// Thresholded masks over thin nodes.
#[derive(Debug, Clone, Serialize)]
pub struct ContactSets {
    /// `U − ψ ≤ tol_c`.
    pub lambda: Vec<bool>,
    /// Interior nodes of `lambda` with a neighbour outside it.
    pub gamma: Vec<bool>,
    /// Interior nodes with `U − ψ ≤ tol_c` and `|trace| ≤ tol_trace`.
    pub gamma_star: Vec<bool>,
    pub tol_c: f64,
    pub tol_trace: f64,
}

impl ContactSets {
    pub fn gamma_nodes(&self) -> Vec<usize> {
        (0..self.gamma.len()).filter(|&i| self.gamma[i]).collect()
    }

    /// Nodes of `gamma` missing from `gamma_star`.
    pub fn gamma_outside_star(&self) -> usize {
        self.gamma.iter().zip(&self.gamma_star).filter(|(g, s)| **g && !**s).count()
    }
}

/// `10 · solver tol · obstacle scale`.
pub fn default_contact_tol(solver_tol: f64, problem: &ProblemSpec) -> f64 {
    10.0 * solver_tol * problem.scale()
}

fn thin_neighbours(grid: &Grid, s: usize) -> Vec<usize> {
    let nx = grid.nodes_x();
    let (i, k) = (s % nx, s / nx);
    let mut out = Vec::with_capacity(4);
    if i > 0 {
        out.push(s - 1);
    }
    if i + 1 < nx {
        out.push(s + 1);
    }
    if grid.n == 2 {
        if k > 0 {
            out.push(s - nx);
        }
        if k + 1 < nx {
            out.push(s + nx);
        }
    }
    out
}

/// Masks of the coincidence set, the free boundary and the extended free
/// boundary. The trace threshold is `2 max|trace| (h/R)^{(1+a)/2}`, the size
/// of the trace one cell away from a regular free boundary point.
pub fn contact_set(sol: &SolutionField, problem: &ProblemSpec, tol_c: f64) -> ContactSets {
    let grid = &sol.grid;
    let t = grid.thin_node_count();
    let a = problem.a;
    let lambda: Vec<bool> = (0..t).map(|i| sol.values[i] - problem.psi[i] <= tol_c).collect();
    let interior = |i: usize| !grid.is_boundary(i);
    let tmax = (0..t)
        .filter(|&i| interior(i))
        .map(|i| sol.trace[i].abs())
        .fold(0.0, f64::max);
    let tol_trace = (2.0 * tmax * (grid.hx / grid.radius).powf((1.0 + a) / 2.0)).max(tol_c);
    let gamma: Vec<bool> = (0..t)
        .map(|i| interior(i) && lambda[i] && thin_neighbours(grid, i).iter().any(|&j| !lambda[j]))
        .collect();
    let gamma_star: Vec<bool> = (0..t)
        .map(|i| interior(i) && lambda[i] && sol.trace[i].abs() <= tol_trace)
        .collect();
    ContactSets {
        lambda,
        gamma,
        gamma_star,
        tol_c,
        tol_trace,
    }
}

/// `U − ψ(x)`, the obstacle extended constantly in `y`.
fn subtract_obstacle(problem: &ProblemSpec, field: &SolutionField) -> SolutionField {
    let g = &problem.grid;
    let values: Vec<f64> = (0..g.node_count())
        .map(|i| field.values[i] - problem.obstacle_at(&g.node_point(i).x))
        .collect();
    let t = g.thin_node_count();
    SolutionField::from_parts(g.clone(), values, &vec![0.0; t], field.trace.clone(), field.iterations, field.final_residual)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Defaults to four times the largest spacing.
    #[serde(default)]
    pub r_min: Option<f64>,
    /// Defaults to `min(0.2, (δ + a)/4)`.
    #[serde(default)]
    pub tau_gap: Option<f64>,
    #[serde(default = "half")]
    pub delta: f64,
    #[serde(default)]
    pub k_prime: f64,
    #[serde(default = "default_angles")]
    pub n_angles: usize,
}

fn half() -> f64 {
    0.5
}

fn default_angles() -> usize {
    DEFAULT_ANGLES
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            r_min: None,
            tau_gap: None,
            delta: 0.5,
            k_prime: 0.0,
            n_angles: DEFAULT_ANGLES,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub x0: Vec<f64>,
    pub class: PointClass,
    /// `Ñ(r_min)`, NaN when it could not be computed.
    pub ntilde: f64,
    pub r_min: f64,
    pub tau_gap: f64,
    /// Regular below this value.
    pub regular_below: f64,
    /// Degenerate above this value.
    pub degenerate_above: f64,
    /// Exponent of `sup |U − ψ|` and the class it implies with the same thresholds.
    pub decay_slope: Option<f64>,
    pub decay_class: Option<PointClass>,
    /// Whether the frequency and decay classes agree.
    pub agree: Option<bool>,
    pub note: Option<String>,
}

fn bucket(value: f64, lo: f64, hi: f64) -> PointClass {
    if value < lo {
        PointClass::Regular
    } else if value > hi {
        PointClass::Degenerate
    } else {
        PointClass::Unresolved
    }
}

/// Classifies a free boundary point by the truncated frequency at `r_min`,
/// after recentring and normalizing the coefficients at `x0` and subtracting
/// the obstacle.
pub fn classify(sol: &SolutionField, problem: &ProblemSpec, x0: &[f64], opts: &ClassifyOptions) -> Result<Classification> {
    let a = problem.a;
    let delta = opts.delta;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter { name: "delta", value: delta });
    }
    let tau = opts.tau_gap.unwrap_or(0.2f64.min((delta + a) / 4.0));
    let lo = (3.0 - a) / 2.0 + tau;
    let hi = (3.0 + delta) / 2.0 - tau;
    let (p2, s2, _) = normalize_at(problem, sol, x0)?;
    let v = subtract_obstacle(&p2, &s2);
    let an = Analysis::with_angles(&v, &p2, opts.n_angles)?;
    let grid = &p2.grid;
    let r_min = opts.r_min.unwrap_or(4.0 * grid.max_spacing());
    let r_top = (0.9 * grid.radius).min(1.0);
    if r_min < an.min_radius() || r_min * 1.5 > r_top {
        return Err(Error::UnsupportedRadius {
            radius: r_min,
            min: an.min_radius(),
            max: r_top / 1.5,
        });
    }
    let radii = geometric(r_min, r_top, 24);
    let (nt, _) = frequency_from_heights(&an, &radii, delta, opts.k_prime)?;
    let ntilde = nt[0];
    let class = bucket(ntilde, lo, hi);
    let (decay_slope, decay_class) = match decay_fit(sol, problem, x0, None) {
        Ok(d) if d.slope.is_finite() => (Some(d.slope), Some(bucket(d.slope, lo, hi))),
        Ok(_) => (Some(f64::INFINITY), Some(PointClass::Degenerate)),
        Err(_) => (None, None),
    };
    Ok(Classification {
        x0: x0.to_vec(),
        class,
        ntilde,
        r_min,
        tau_gap: tau,
        regular_below: lo,
        degenerate_above: hi,
        decay_slope,
        decay_class,
        agree: decay_class.map(|c| c == class),
        note: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub x0: Vec<f64>,
    pub radii: Vec<f64>,
    /// `sup_{B_r^+(x0)} |U − ψ|`.
    pub sup: Vec<f64>,
    /// `H(r)` of `U − ψ` around `x0`.
    pub heights: Vec<f64>,
    pub slope: f64,
    pub h_slope: f64,
    /// `(3 − a)/2`.
    pub target_slope: f64,
    /// `n + 3`.
    pub target_h: f64,
}

/// Decay exponents of `U − ψ` at `x0`, from the supremum over half balls and
/// from `H(r)`.
pub fn decay_fit(sol: &SolutionField, problem: &ProblemSpec, x0: &[f64], r_grid: Option<&[f64]>) -> Result<DecayReport> {
    let grid = &problem.grid;
    let (p2, s2, _) = normalize_at(problem, sol, x0)?;
    let v = subtract_obstacle(&p2, &s2);
    let an = Analysis::new(&v, &p2)?;
    let radii = match r_grid {
        Some(r) => r.to_vec(),
        None => {
            let lo = 4.0 * grid.max_spacing();
            let hi = 0.5 * p2.grid.radius;
            if hi <= lo * 1.5 {
                return Err(Error::InsufficientData(format!("no room for radii at {x0:?}")));
            }
            geometric(lo, hi, 12)
        }
    };
    // nodes sorted by distance from x0 with the running maximum of |U − ψ|
    let centre = Point::thin(x0);
    let mut dist: Vec<(f64, f64)> = (0..grid.node_count())
        .map(|i| {
            let p = grid.node_point(i);
            let mut d2 = p.y * p.y;
            for k in 0..grid.n {
                d2 += (p.x[k] - centre.x[k]).powi(2);
            }
            (d2.sqrt(), (sol.values[i] - problem.obstacle_at(&p.x)).abs())
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut run = 0.0f64;
    for e in dist.iter_mut() {
        run = run.max(e.1);
        e.1 = run;
    }
    let sup: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let k = dist.partition_point(|e| e.0 <= r * (1.0 + 1e-12));
            if k == 0 {
                0.0
            } else {
                dist[k - 1].1
            }
        })
        .collect();
    let heights = radii.iter().map(|&r| an.height(r)).collect::<Result<Vec<f64>>>()?;
    let smax = sup.iter().fold(0.0f64, |m, v| m.max(*v));
    let hmax = heights.iter().fold(0.0f64, |m, v| m.max(*v));
    let (slope, _) = fit_slope(&radii, &sup, 1e-12 * smax)?;
    let (h_slope, _) = fit_slope(&radii, &heights, 1e-24 * hmax)?;
    Ok(DecayReport {
        x0: x0.to_vec(),
        radii,
        sup,
        heights,
        slope,
        h_slope,
        target_slope: (3.0 - problem.a) / 2.0,
        target_h: grid.n as f64 + 3.0,
    })
}

/// An Almgren rescaling `U_r(X) = (U − ψ)(x0 + r X)/d_r`, `d_r = M(r)^{1/2}`.
#[derive(Debug, Clone)]
pub struct BlowUp {
    pub r: f64,
    pub d_r: f64,
    pub field: SolutionField,
    /// Rescaled coefficients on the reference grid, zero data.
    pub problem: ProblemSpec,
    /// `H_{U_r}(1)`.
    pub height_at_one: f64,
}

/// Blow-up at scale `r` resampled onto `reference` (by default the unit box
/// with the spacings of the normalized grid).
pub fn blowup(sol: &SolutionField, problem: &ProblemSpec, x0: &[f64], r: f64, reference: Option<&Grid>) -> Result<BlowUp> {
    let (p2, s2, _) = normalize_at(problem, sol, x0)?;
    let v = subtract_obstacle(&p2, &s2);
    let an = Analysis::new(&v, &p2)?;
    let g2 = &p2.grid;
    let r_top = (0.9 * g2.radius).min(1.0);
    if !(r >= an.min_radius() && r * 1.5 <= r_top) {
        return Err(Error::UnsupportedRadius {
            radius: r,
            min: an.min_radius(),
            max: r_top / 1.5,
        });
    }
    let radii = geometric(r, r_top, 24);
    let (_, m) = frequency_from_heights(&an, &radii, 0.5, 0.0)?;
    let h_top = an.height(r_top)?;
    let h_r = an.height(r)?;
    if !(h_r > 1e-14 * h_top) || !(m[0] > 0.0) {
        return Err(Error::DegenerateHeight { radius: r, value: m[0] });
    }
    let d_r = m[0].sqrt();
    let reference = match reference {
        Some(g) => g.clone(),
        None => build_grid(g2.n, 1.0, g2.hx, g2.hy, g2.a)?,
    };
    if reference.radius * r > g2.radius * (1.0 + 1e-12) {
        return Err(Error::UnsupportedRadius {
            radius: r,
            min: 0.0,
            max: g2.radius / reference.radius,
        });
    }
    let scale_point = |p: &Point| Point {
        x: [r * p.x[0], r * p.x[1]],
        y: r * p.y,
    };
    let values = reference.sample(|p| g2.interpolate(&v.values, &scale_point(p)) / d_r);
    let t = reference.thin_node_count();
    let trace_factor = r.powf(1.0 - p2.a) / d_r;
    let trace: Vec<f64> = (0..t)
        .map(|i| {
            let q = scale_point(&reference.node_point(i));
            trace_factor * g2.interpolate_thin(&v.trace, &q.x)
        })
        .collect();
    let rp = p2.rescaled(&reference, r)?;
    let field = SolutionField::from_parts(reference, values, &rp.psi, trace, sol.iterations, sol.final_residual);
    let height_at_one = Analysis::new(&field, &rp)?.height(1.0)?;
    Ok(BlowUp {
        r,
        d_r,
        field,
        problem: rp,
        height_at_one,
    })
}

/// Graph `x_⊥ = g(s)` of the regular free boundary in rotated coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct GraphFit {
    /// Angle of the tangent direction with the `x1` axis.
    pub angle: f64,
    pub s: Vec<f64>,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    /// `(γ, small-scale quotient, large-scale quotient)`.
    pub quotients: Vec<(f64, f64, f64)>,
    /// Largest `γ` whose small-scale quotient stays within twice the large-scale one.
    pub gamma_est: Option<f64>,
}

impl GraphFit {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,g,dg\n");
        for k in 0..self.s.len() {
            let _ = writeln!(out, "{},{},{}", self.s[k], self.g[k], self.dg[k]);
        }
        out
    }
}

/// Fits the graph through the free boundary crossings of the regular points
/// (n = 2 only).
pub fn graph_fit(report: &FreeBoundaryReport) -> Result<GraphFit> {
    if report.n != 2 {
        return Err(Error::config("n", "graph fit needs two thin dimensions"));
    }
    let pts: Vec<[f64; 2]> = report
        .classifications
        .iter()
        .zip(&report.crossings)
        .filter(|(c, _)| c.class == PointClass::Regular)
        .map(|(_, x)| *x)
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientData(format!("{} regular points, need at least 5", pts.len())));
    }
    // principal direction of the point cloud
    let m = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / m;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &pts {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (c, s) = (angle.cos(), angle.sin());
    let h = report.spacing;
    // bin by the tangential coordinate
    let mut rotated: Vec<(f64, f64)> = pts
        .iter()
        .map(|p| {
            let (dx, dy) = (p[0] - cx, p[1] - cy);
            (c * dx + s * dy, -s * dx + c * dy)
        })
        .collect();
    rotated.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut sv: Vec<f64> = Vec::new();
    let mut gv: Vec<f64> = Vec::new();
    let mut count: Vec<f64> = Vec::new();
    for (ss, tt) in rotated {
        match sv.last() {
            Some(&last) if ss - last / count.last().unwrap() < 0.5 * h => {
                let k = sv.len() - 1;
                sv[k] += ss;
                gv[k] += tt;
                count[k] += 1.0;
            }
            _ => {
                sv.push(ss);
                gv.push(tt);
                count.push(1.0);
            }
        }
    }
    for k in 0..sv.len() {
        sv[k] /= count[k];
        gv[k] /= count[k];
    }
    if sv.len() < 5 {
        return Err(Error::InsufficientData(format!("{} graph samples, need at least 5", sv.len())));
    }
    let dg = crate::functionals::derivative(&sv, &gv);
    let mut quotients = Vec::new();
    let mut gamma_est = None;
    for step in 1..=9 {
        let gamma = step as f64 / 10.0;
        let (mut small, mut large) = (0.0f64, 0.0f64);
        for i in 0..sv.len() {
            for j in i + 1..sv.len() {
                let d = sv[j] - sv[i];
                let q = (dg[j] - dg[i]).abs() / d.powf(gamma);
                if d <= 4.0 * h {
                    small = small.max(q);
                } else {
                    large = large.max(q);
                }
            }
        }
        if small <= 2.0 * large + 1e-12 {
            gamma_est = Some(gamma);
        }
        quotients.push((gamma, small, large));
    }
    Ok(GraphFit {
        angle,
        s: sv,
        g: gv,
        dg,
        quotients,
        gamma_est,
    })
}

/// Position where `U − ψ` reaches zero between a contact node and its
/// non-contact neighbours, using that `(U − ψ)^{2/(3−a)}` is linear in the
/// distance near a regular point.
fn crossing(sol: &SolutionField, problem: &ProblemSpec, sets: &ContactSets, node: usize) -> [f64; 2] {
    let grid = &sol.grid;
    let nx = grid.nodes_x();
    let pw = 2.0 / (3.0 - problem.a);
    let gap = |i: usize| (sol.values[i] - problem.psi[i]).max(0.0).powf(pw);
    let here = grid.node_point(node).x;
    let mut acc = [0.0; 2];
    let mut count = 0.0;
    for j in thin_neighbours(grid, node) {
        if sets.lambda[j] {
            continue;
        }
        let step = j as isize - node as isize;
        let beyond = j as isize + step;
        let there = grid.node_point(j).x;
        let same_line = beyond >= 0
            && (beyond as usize) < grid.thin_node_count()
            && (step.abs() == nx as isize || (beyond as usize) / nx == j / nx);
        let frac = if same_line && !sets.lambda[beyond as usize] {
            let (l1, l2) = (gap(j), gap(beyond as usize));
            if l2 > l1 {
                (1.0 - l1 / (l2 - l1)).clamp(0.0, 1.0)
            } else {
                0.5
            }
        } else {
            0.5
        };
        for k in 0..2 {
            acc[k] += here[k] + frac * (there[k] - here[k]);
        }
        count += 1.0;
    }
    if count == 0.0 {
        return here;
    }
    [acc[0] / count, acc[1] / count]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeBoundaryOptions {
    /// Defaults to `10 · solver_tol · obstacle scale`.
    #[serde(default)]
    pub tol_c: Option<f64>,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default)]
    pub classify: ClassifyOptions,
    /// Largest number of free boundary points classified (evenly subsampled).
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

fn default_solver_tol() -> f64 {
    1e-10
}

fn default_max_points() -> usize {
    64
}

impl Default for FreeBoundaryOptions {
    fn default() -> Self {
        Self {
            tol_c: None,
            solver_tol: default_solver_tol(),
            classify: ClassifyOptions::default(),
            max_points: default_max_points(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeBoundaryReport {
    pub n: usize,
    pub a: f64,
    pub spacing: f64,
    pub tol_c: f64,
    pub tol_trace: f64,
    pub contact_nodes: usize,
    pub gamma_nodes: usize,
    pub gamma_star_nodes: usize,
    /// Free boundary nodes outside the extended free boundary.
    pub gamma_outside_star: usize,
    /// Classified points (a subsample of the free boundary when it is large).
    pub classifications: Vec<Classification>,
    /// Sub-cell crossing estimate for every classified point.
    pub crossings: Vec<[f64; 2]>,
    /// Points where the frequency and decay classes differ.
    pub disagreements: usize,
    pub graph: Option<GraphFit>,
    pub graph_note: Option<String>,
}

impl FreeBoundaryReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per classified point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,x2,class,ntilde,decay_slope,cross1,cross2\n");
        for (c, x) in self.classifications.iter().zip(&self.crossings) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.x0[0],
                c.x0.get(1).copied().unwrap_or(0.0),
                match c.class {
                    PointClass::Regular => "regular",
                    PointClass::Degenerate => "degenerate",
                    PointClass::Unresolved => "unresolved",
                },
                c.ntilde,
                c.decay_slope.unwrap_or(f64::NAN),
                x[0],
                x[1]
            );
        }
        out
    }
}

/// Full free boundary analysis of a solution.
pub fn analyze(sol: &SolutionField, problem: &ProblemSpec, opts: &FreeBoundaryOptions) -> Result<FreeBoundaryReport> {
    let grid = &sol.grid;
    let tol_c = opts.tol_c.unwrap_or_else(|| default_contact_tol(opts.solver_tol, problem));
    let sets = contact_set(sol, problem, tol_c);
    let nodes = sets.gamma_nodes();
    let chosen: Vec<usize> = if nodes.len() > opts.max_points && opts.max_points > 0 {
        (0..opts.max_points)
            .map(|k| nodes[k * nodes.len() / opts.max_points])
            .collect()
    } else {
        nodes.clone()
    };
    let mut classifications = Vec::with_capacity(chosen.len());
    let mut crossings = Vec::with_capacity(chosen.len());
    for &i in &chosen {
        let p = grid.node_point(i);
        let x0 = &p.x[..grid.n];
        let c = classify(sol, problem, x0, &opts.classify).unwrap_or_else(|e| Classification {
            x0: x0.to_vec(),
            class: PointClass::Unresolved,
            ntilde: f64::NAN,
            r_min: opts.classify.r_min.unwrap_or(f64::NAN),
            tau_gap: f64::NAN,
            regular_below: f64::NAN,
            degenerate_above: f64::NAN,
            decay_slope: None,
            decay_class: None,
            agree: None,
            note: Some(e.to_string()),
        });
        classifications.push(c);
        crossings.push(crossing(sol, problem, &sets, i));
    }
    let disagreements = classifications.iter().filter(|c| c.agree == Some(false)).count();
    let mut report = FreeBoundaryReport {
        n: grid.n,
        a: problem.a,
        spacing: grid.hx,
        tol_c,
        tol_trace: sets.tol_trace,
        contact_nodes: sets.lambda.iter().filter(|&&b| b).count(),
        gamma_nodes: nodes.len(),
        gamma_star_nodes: sets.gamma_star.iter().filter(|&&b| b).count(),
        gamma_outside_star: sets.gamma_outside_star(),
        classifications,
        crossings,
        disagreements,
        graph: None,
        graph_note: None,
    };
    if grid.n == 2 {
        match graph_fit(&report) {
            Ok(g) => report.graph = Some(g),
            Err(e) => report.graph_note = Some(e.to_string()),
        }
    }
    Ok(report)
}
