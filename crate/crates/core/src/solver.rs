//! Discrete Signorini problem: projected SOR (reference) and the penalized
//! formulation solved by damped Newton with Jacobi-preconditioned CG.

use crate::coefficients::ProblemSpec;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operator::{balance_trace, SymmetricForm};

#[derive(Debug, Clone)]
pub struct SolutionField {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Thin nodes where `U = ψ`.
    pub active: Vec<bool>,
    /// Weighted Neumann trace at thin nodes.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
    /// Energy after every sweep or Newton step, when recorded.
    pub energy_history: Vec<f64>,
}

/// Relative threshold below which `U - ψ` counts as contact.
pub const ACTIVE_TOL: f64 = 1e-12;

impl SolutionField {
    pub fn from_parts(
        grid: Grid,
        values: Vec<f64>,
        psi: &[f64],
        trace: Vec<f64>,
        iterations: usize,
        final_residual: f64,
    ) -> Self {
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let active = psi
            .iter()
            .enumerate()
            .map(|(i, &p)| values[i] - p <= ACTIVE_TOL * scale)
            .collect();
        Self {
            grid,
            values,
            active,
            trace,
            iterations,
            final_residual,
            energy_history: Vec::new(),
        }
    }

    pub fn thin_values(&self) -> &[f64] {
        &self.values[..self.grid.thin_node_count()]
    }
}

/// The penalty `β_ε`: zero for `s ≥ 0`, `ε + s/ε` for `s ≤ -2ε²`, and the
/// parabola `-s²/(4ε³)` in between.
pub fn penalty(s: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter { name: "epsilon", value: eps });
    }
    Ok(penalty_unchecked(s, eps))
}

fn penalty_unchecked(s: f64, eps: f64) -> f64 {
    if s >= 0.0 {
        0.0
    } else if s <= -2.0 * eps * eps {
        eps + s / eps
    } else {
        -s * s / (4.0 * eps * eps * eps)
    }
}

/// `β_ε'`.
pub fn penalty_derivative(s: f64, eps: f64) -> f64 {
    if s >= 0.0 {
        0.0
    } else if s <= -2.0 * eps * eps {
        1.0 / eps
    } else {
        -s / (2.0 * eps * eps * eps)
    }
}

/// Antiderivative of `β_ε` vanishing on `s ≥ 0`.
pub fn penalty_primitive(s: f64, eps: f64) -> f64 {
    if s >= 0.0 {
        0.0
    } else if s <= -2.0 * eps * eps {
        2.0 / 3.0 * eps.powi(3) + eps * s + s * s / (2.0 * eps)
    } else {
        -s.powi(3) / (12.0 * eps.powi(3))
    }
}

#[derive(Debug, Clone)]
pub struct PsorOptions {
    pub omega: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub record_energy: bool,
    pub initial: Option<Vec<f64>>,
}

impl Default for PsorOptions {
    fn default() -> Self {
        Self {
            omega: 1.7,
            tol: 1e-10,
            max_iter: 200_000,
            record_energy: false,
            initial: None,
        }
    }
}

/// Relaxation factor from the SOR model for the lowest Dirichlet mode of the
/// box, clamped to `[1.7, 1.995]`.
pub fn suggested_omega(grid: &Grid) -> f64 {
    let d = (grid.n + 1) as f64;
    let h = grid.hx.max(grid.hy);
    let lambda_min = d * (std::f64::consts::PI / (2.0 * grid.radius)).powi(2);
    let mu = 1.0 - h * h * lambda_min / (2.0 * d);
    let w = 2.0 / (1.0 + (1.0 - mu * mu).max(0.0).sqrt());
    w.clamp(1.7, 1.995)
}

fn initial_guess(form: &SymmetricForm, problem: &ProblemSpec, initial: Option<&Vec<f64>>) -> Result<Vec<f64>> {
    let len = form.len();
    let mut u = match initial {
        Some(v) if v.len() == len => v.clone(),
        Some(v) => {
            return Err(Error::config(
                "initial",
                format!("expected {len} values, got {}", v.len()),
            ))
        }
        None => vec![0.0; len],
    };
    for i in 0..len {
        if form.fixed[i] {
            u[i] = problem.boundary[i];
        }
    }
    for &i in &form.thin_rows {
        if !form.fixed[i] {
            u[i] = u[i].max(problem.psi[i]);
        }
    }
    Ok(u)
}

/// Largest violation of the thin-row optimality conditions, in trace units.
fn thin_defect(form: &SymmetricForm, problem: &ProblemSpec, u: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for &i in &form.thin_rows {
        if form.fixed[i] {
            continue;
        }
        let r = form.row_dot(i, u) + form.load[i];
        let at_obstacle = u[i] <= problem.psi[i];
        let v = if at_obstacle { (-r).max(0.0) } else { r.abs() };
        worst = worst.max(v / form.thin_area[i]);
    }
    worst
}

pub fn solve_psor(form: &SymmetricForm, problem: &ProblemSpec, tol: f64, max_iter: usize) -> Result<SolutionField> {
    solve_psor_with(
        form,
        problem,
        &PsorOptions {
            tol,
            max_iter,
            ..Default::default()
        },
    )
}

/// Projected SOR on `min ½⟨KU,U⟩ + ⟨load,U⟩` subject to `U ≥ ψ` on free thin
/// nodes. Stops once the largest nodal update is below `tol` and the thin rows
/// satisfy the optimality conditions to `tol` in trace units.
pub fn solve_psor_with(form: &SymmetricForm, problem: &ProblemSpec, opts: &PsorOptions) -> Result<SolutionField> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::InvalidParameter { name: "tol", value: opts.tol });
    }
    if !(opts.omega > 0.0 && opts.omega < 2.0) {
        return Err(Error::InvalidParameter { name: "omega", value: opts.omega });
    }
    let mut u = initial_guess(form, problem, opts.initial.as_ref())?;
    let t_count = form.grid.thin_node_count();
    let free: Vec<usize> = (0..form.len()).filter(|&i| !form.fixed[i]).collect();
    let diag: Vec<f64> = (0..form.len()).map(|i| form.diagonal(i)).collect();
    let mut history = Vec::new();
    if opts.record_energy {
        history.push(form.energy(&u));
    }
    let mut last_update = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let mut max_update = 0.0f64;
        for &i in &free {
            let r = form.row_dot(i, &u) + form.load[i];
            let mut v = u[i] - opts.omega * r / diag[i];
            if i < t_count {
                v = v.max(problem.psi[i]);
            }
            max_update = max_update.max((v - u[i]).abs());
            u[i] = v;
        }
        if opts.record_energy {
            history.push(form.energy(&u));
        }
        last_update = max_update;
        if !max_update.is_finite() {
            break;
        }
        if max_update <= opts.tol && thin_defect(form, problem, &u) <= opts.tol {
            let trace = balance_trace(form, &u);
            let mut sol = SolutionField::from_parts(form.grid.clone(), u, &problem.psi, trace, iter, max_update);
            sol.energy_history = history;
            return Ok(sol);
        }
    }
    let trace = balance_trace(form, &u);
    let mut last = SolutionField::from_parts(form.grid.clone(), u, &problem.psi, trace, opts.max_iter, last_update);
    last.energy_history = history;
    Err(Error::NonConverged {
        iterations: opts.max_iter,
        residual: last_update,
        last: Box::new(last),
    })
}

enum PcgFailure {
    MaxIter(f64),
    Indefinite,
}

impl PcgFailure {
    fn into_error(self, form: &SymmetricForm, problem: &ProblemSpec, x: Vec<f64>, iterations: usize) -> Error {
        match self {
            PcgFailure::Indefinite => Error::Internal("conjugate gradients lost positive definiteness".into()),
            PcgFailure::MaxIter(residual) => {
                let trace = balance_trace(form, &x);
                Error::NonConverged {
                    iterations,
                    residual,
                    last: Box::new(SolutionField::from_parts(form.grid.clone(), x, &problem.psi, trace, iterations, residual)),
                }
            }
        }
    }
}

/// Preconditioned conjugate gradients on the rows not marked `fixed`, with
/// `x` holding the initial guess (fixed entries are left untouched).
fn pcg<A: Fn(&[f64], &mut [f64])>(
    apply: A,
    diag: &[f64],
    fixed: &[bool],
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> std::result::Result<usize, PcgFailure> {
    let len = rhs.len();
    let mut ax = vec![0.0; len];
    apply(x, &mut ax);
    let mut r: Vec<f64> = (0..len).map(|i| if fixed[i] { 0.0 } else { rhs[i] - ax[i] }).collect();
    // reference norm of the right-hand side including the Dirichlet lift
    let lift: Vec<f64> = (0..len).map(|i| if fixed[i] { x[i] } else { 0.0 }).collect();
    let mut klift = vec![0.0; len];
    apply(&lift, &mut klift);
    let bnorm = (0..len)
        .filter(|&i| !fixed[i])
        .map(|i| (rhs[i] - klift[i]).powi(2))
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    let mut z: Vec<f64> = (0..len).map(|i| if fixed[i] { 0.0 } else { r[i] / diag[i] }).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; len];
    for it in 0..max_iter {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok(it);
        }
        apply(&p, &mut ap);
        for i in 0..len {
            if fixed[i] {
                ap[i] = 0.0;
            }
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 || !pap.is_finite() {
            return Err(PcgFailure::Indefinite);
        }
        let alpha = rz / pap;
        for i in 0..len {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..len {
            z[i] = if fixed[i] { 0.0 } else { r[i] / diag[i] };
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..len {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(PcgFailure::MaxIter(r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm))
}

/// Solves the problem without the obstacle constraint.
pub fn solve_unconstrained(form: &SymmetricForm, problem: &ProblemSpec, tol: f64) -> Result<SolutionField> {
    let len = form.len();
    let mut u = vec![0.0; len];
    for i in 0..len {
        if form.fixed[i] {
            u[i] = problem.boundary[i];
        }
    }
    let diag: Vec<f64> = (0..len).map(|i| form.diagonal(i)).collect();
    let rhs: Vec<f64> = form.load.iter().map(|l| -l).collect();
    let max_iter = 20 * len + 100;
    let iters = match pcg(
        |x, out| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = form.row_dot(i, x);
            }
        },
        &diag,
        &form.fixed,
        &rhs,
        &mut u,
        tol,
        max_iter,
    ) {
        Ok(it) => it,
        Err(f) => return Err(f.into_error(form, problem, u, max_iter)),
    };
    let trace = balance_trace(form, &u);
    Ok(SolutionField::from_parts(form.grid.clone(), u, &problem.psi, trace, iters, 0.0))
}

fn penalized_energy(form: &SymmetricForm, problem: &ProblemSpec, u: &[f64], eps: f64) -> f64 {
    let mut e = form.energy(u);
    for &i in &form.thin_rows {
        if !form.fixed[i] {
            e += form.thin_area[i] * penalty_primitive(u[i] - problem.psi[i], eps);
        }
    }
    e
}

/// Options for the penalized solver.
#[derive(Debug, Clone)]
pub struct PenaltyOptions {
    pub max_newton: usize,
    pub cg_tol: f64,
    pub initial: Option<Vec<f64>>,
}

impl Default for PenaltyOptions {
    fn default() -> Self {
        Self {
            max_newton: 200,
            cg_tol: 1e-12,
            initial: None,
        }
    }
}

pub fn solve_penalized(form: &SymmetricForm, problem: &ProblemSpec, eps: f64, tol: f64) -> Result<SolutionField> {
    solve_penalized_with(form, problem, eps, tol, &PenaltyOptions::default())
}

/// Damped Newton on the convex energy
/// `½⟨KU,U⟩ + ⟨load,U⟩ + Σ_thin A_i B_ε(U_i - ψ_i)` with `B_ε' = β_ε`.
pub fn solve_penalized_with(
    form: &SymmetricForm,
    problem: &ProblemSpec,
    eps: f64,
    tol: f64,
    opts: &PenaltyOptions,
) -> Result<SolutionField> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter { name: "epsilon", value: eps });
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter { name: "tol", value: tol });
    }
    let len = form.len();
    let mut u = initial_guess(form, problem, opts.initial.as_ref())?;
    let base_diag: Vec<f64> = (0..len).map(|i| form.diagonal(i)).collect();
    let is_thin_free = |i: usize| i < form.thin_rows.len() && !form.fixed[i];
    let mut history = vec![penalized_energy(form, problem, &u, eps)];
    let mut last_step = f64::INFINITY;

    for it in 1..=opts.max_newton {
        let mut grad: Vec<f64> = (0..len).map(|i| form.row_dot(i, &u) + form.load[i]).collect();
        let mut curv = vec![0.0; len];
        for i in 0..form.thin_rows.len() {
            if is_thin_free(i) {
                let s = u[i] - problem.psi[i];
                grad[i] += form.thin_area[i] * penalty_unchecked(s, eps);
                curv[i] = form.thin_area[i] * penalty_derivative(s, eps);
                debug_assert!(curv[i] >= 0.0);
            }
        }
        let diag: Vec<f64> = base_diag.iter().zip(&curv).map(|(d, c)| d + c).collect();
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut step = vec![0.0; len];
        pcg(
            |x, out| {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = form.row_dot(i, x) + curv[i] * x[i];
                }
            },
            &diag,
            &form.fixed,
            &rhs,
            &mut step,
            opts.cg_tol,
            20 * len + 100,
        )
        .map_err(|f| f.into_error(form, problem, u.clone(), it))?;
        for i in 0..len {
            if form.fixed[i] {
                step[i] = 0.0;
            }
        }
        let slope: f64 = grad.iter().zip(&step).map(|(g, d)| g * d).sum();
        let e0 = *history.last().unwrap();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(x, d)| x + t * d).collect();
            let e = penalized_energy(form, problem, &trial, eps);
            if e <= e0 + 1e-4 * t * slope || (e - e0).abs() <= 1e-15 * e0.abs().max(1e-300) {
                accepted = Some((trial, e));
                break;
            }
            t *= 0.5;
        }
        let Some((next, e)) = accepted else {
            break;
        };
        last_step = step.iter().fold(0.0f64, |m, d| m.max((t * d).abs()));
        u = next;
        history.push(e);
        if last_step <= tol {
            let mut trace = balance_trace(form, &u);
            for (i, tr) in trace.iter_mut().enumerate() {
                if form.fixed[i] {
                    *tr = 0.0;
                }
            }
            let mut sol = SolutionField::from_parts(form.grid.clone(), u, &problem.psi, trace, it, last_step);
            sol.energy_history = history;
            return Ok(sol);
        }
    }
    let trace = balance_trace(form, &u);
    let mut last = SolutionField::from_parts(form.grid.clone(), u, &problem.psi, trace, opts.max_newton, last_step);
    last.energy_history = history;
    Err(Error::NonConverged {
        iterations: opts.max_newton,
        residual: last_step,
        last: Box::new(last),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ComplementarityReport {
    /// `max |min{U-ψ, -trace}|`.
    pub min_gap_max: f64,
    /// Area-weighted `L²` norm of `min{U-ψ, -trace}`.
    pub min_gap_l2: f64,
    /// `max |(U-ψ)·(-trace)|`.
    pub product_gap_max: f64,
    pub product_gap_l2: f64,
    /// `max (ψ - U)^+`.
    pub feasibility: f64,
    pub nodes: usize,
}

/// Complementarity statistics over the free thin nodes.
pub fn complementarity_report(sol: &SolutionField, problem: &ProblemSpec) -> ComplementarityReport {
    let g = &sol.grid;
    let mut rep = ComplementarityReport {
        min_gap_max: 0.0,
        min_gap_l2: 0.0,
        product_gap_max: 0.0,
        product_gap_l2: 0.0,
        feasibility: 0.0,
        nodes: 0,
    };
    for i in 0..g.thin_node_count() {
        if g.is_boundary(i) {
            continue;
        }
        let gap = sol.values[i] - problem.psi[i];
        let flux = -sol.trace[i];
        let m = gap.min(flux);
        let p = gap * flux;
        let area = g.thin_control_area(i);
        rep.min_gap_max = rep.min_gap_max.max(m.abs());
        rep.min_gap_l2 += area * m * m;
        rep.product_gap_max = rep.product_gap_max.max(p.abs());
        rep.product_gap_l2 += area * p * p;
        rep.feasibility = rep.feasibility.max(-gap);
        rep.nodes += 1;
    }
    rep.min_gap_l2 = rep.min_gap_l2.sqrt();
    rep.product_gap_l2 = rep.product_gap_l2.sqrt();
    rep
}
