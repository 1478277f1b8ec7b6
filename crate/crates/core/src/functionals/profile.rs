use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Analysis;
use crate::coefficients::ProblemSpec;
use crate::error::{Error, Result};
use crate::solver::SolutionField;

/// A constant that is either given or calibrated on a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KPrime {
    Fixed(f64),
    Calibrate,
}

impl Default for KPrime {
    fn default() -> Self {
        KPrime::Fixed(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    #[serde(default)]
    pub r_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub k_prime: KPrime,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub c_weiss: KPrime,
    #[serde(default = "default_angles")]
    pub n_angles: usize,
}

fn default_delta() -> f64 {
    0.5
}

fn default_angles() -> usize {
    crate::grid::DEFAULT_ANGLES
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            r_grid: None,
            k_prime: KPrime::default(),
            delta: default_delta(),
            c_weiss: KPrime::default(),
            n_angles: default_angles(),
        }
    }
}

/// Geometric radii, 40 points in `[4 h, 0.9 R]`.
pub fn default_r_grid(h_max: f64, radius: f64) -> Vec<f64> {
    geometric(4.0 * h_max, 0.9 * radius, 40)
}

pub(crate) fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (l0 + (l1 - l0) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Derivative of samples on an increasing grid, central in the interior and
/// one-sided at the ends.
pub(crate) fn derivative(r: &[f64], v: &[f64]) -> Vec<f64> {
    let n = r.len();
    (0..n)
        .map(|k| {
            if k == 0 {
                (v[1] - v[0]) / (r[1] - r[0])
            } else if k == n - 1 {
                (v[n - 1] - v[n - 2]) / (r[n - 1] - r[n - 2])
            } else {
                // three-point formula for uneven spacing
                let h0 = r[k] - r[k - 1];
                let h1 = r[k + 1] - r[k];
                (v[k + 1] * h0 * h0 - v[k - 1] * h1 * h1 + v[k] * (h1 * h1 - h0 * h0)) / (h0 * h1 * (h0 + h1))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monotonicity {
    /// Largest drop below the running maximum.
    pub violation: f64,
    pub range: f64,
    pub points: usize,
    pub passes: bool,
}

/// Checks that `values` (ordered by increasing radius) are nondecreasing up to
/// `tolerance · range`, using only entries with `mask` set.
pub fn monotonicity_violation(values: &[f64], mask: &[bool], tolerance: f64) -> Monotonicity {
    let mut run = f64::NEG_INFINITY;
    let mut violation = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut points = 0;
    for (v, &m) in values.iter().zip(mask) {
        if !m || !v.is_finite() {
            continue;
        }
        points += 1;
        run = run.max(*v);
        violation = violation.max(run - v);
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let range = if points > 0 { hi - lo } else { 0.0 };
    Monotonicity {
        violation,
        range,
        points,
        passes: points >= 2 && violation <= tolerance * range,
    }
}

/// Smallest constant on the ladder `0, 0.1, 0.2, …, 10` for which
/// `adjust(c)` is nondecreasing within 1% of its range.
pub fn calibrate_ladder<F: Fn(f64) -> Vec<f64>>(adjust: F, mask: &[bool]) -> Option<f64> {
    (0..=100).map(|k| k as f64 * 0.1).find(|&c| monotonicity_violation(&adjust(c), mask, 0.01).passes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiSigma {
    pub psi: Vec<f64>,
    pub sigma: Vec<f64>,
    pub alpha: f64,
    /// `β e^β r_min`.
    pub alpha_error: f64,
    /// `max |G(r) − (n+a)/r|`.
    pub beta: f64,
}

/// Integrates `ψ'/ψ = G` with `ψ(1) = 1` on an increasing grid; beyond the
/// last radius `G` is continued by `(n + a)/r`.
pub fn integrate_psi_sigma(r: &[f64], g: &[f64], n: usize, a: f64) -> Result<PsiSigma> {
    if r.len() != g.len() || r.len() < 2 {
        return Err(Error::config("r_grid", "need at least two radii with matching G samples"));
    }
    if r.windows(2).any(|w| w[1] <= w[0]) || r[0] <= 0.0 {
        return Err(Error::config("r_grid", "radii must be positive and increasing"));
    }
    if r[0] > 1.0 {
        return Err(Error::config("r_grid", "smallest radius must not exceed 1"));
    }
    let na = n as f64 + a;
    // cumulative ∫_{r_0}^{r_k} G dr = ∫ (r G) d ln r
    let mut cum = vec![0.0; r.len()];
    for k in 1..r.len() {
        let dl = (r[k] / r[k - 1]).ln();
        cum[k] = cum[k - 1] + 0.5 * dl * (r[k] * g[k] + r[k - 1] * g[k - 1]);
    }
    let last = r.len() - 1;
    let at_one = if r[last] <= 1.0 {
        cum[last] - na * r[last].ln()
    } else {
        let k = r.iter().position(|&x| x > 1.0).unwrap();
        let t = (1.0f64 / r[k - 1]).ln() / (r[k] / r[k - 1]).ln();
        cum[k - 1] + t * (cum[k] - cum[k - 1])
    };
    let psi: Vec<f64> = cum.iter().map(|c| (c - at_one).exp()).collect();
    if psi.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::Internal("ψ lost positivity".into()));
    }
    let sigma: Vec<f64> = psi.iter().zip(r).map(|(p, x)| p / x.powf(na - 1.0)).collect();
    let beta = r.iter().zip(g).map(|(x, gv)| (gv - na / x).abs()).fold(0.0, f64::max);
    Ok(PsiSigma {
        alpha: sigma[0] / r[0],
        alpha_error: beta * beta.exp() * r[0],
        beta,
        psi,
        sigma,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
    pub i: Vec<f64>,
    pub i_surface: Vec<f64>,
    pub g: Vec<f64>,
    pub psi: Vec<f64>,
    pub sigma: Vec<f64>,
    pub m: Vec<f64>,
    pub j: Vec<f64>,
    pub phi: Vec<f64>,
    pub n: Vec<f64>,
    pub ntilde: Vec<f64>,
    pub w: Vec<f64>,
    pub lambda_mask: Vec<bool>,
    pub gamma_mask: Vec<bool>,
    pub alpha: f64,
    pub alpha_error: f64,
    pub beta: f64,
    pub k_prime: Option<f64>,
    pub delta: f64,
    pub c_weiss: Option<f64>,
    pub phi_monotonicity: Option<Monotonicity>,
    pub weiss_monotonicity: Option<Monotonicity>,
    /// Scale of the terms entering `W`.
    pub weiss_scale: f64,
}

impl RadialProfile {
    pub fn empty(r: Vec<f64>) -> Self {
        let z = vec![0.0; r.len()];
        let f = vec![false; r.len()];
        Self {
            h: z.clone(),
            b: z.clone(),
            d: z.clone(),
            i: z.clone(),
            i_surface: z.clone(),
            g: z.clone(),
            psi: z.clone(),
            sigma: z.clone(),
            m: z.clone(),
            j: z.clone(),
            phi: z.clone(),
            n: z.clone(),
            ntilde: z.clone(),
            w: z,
            lambda_mask: f.clone(),
            gamma_mask: f,
            r,
            alpha: 0.0,
            alpha_error: 0.0,
            beta: 0.0,
            k_prime: None,
            delta: 0.5,
            c_weiss: None,
            phi_monotonicity: None,
            weiss_monotonicity: None,
            weiss_scale: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Linear interpolation of a column in `ln r`.
    pub fn at(&self, column: &[f64], r: f64) -> Result<f64> {
        let n = self.r.len();
        if n == 0 || r < self.r[0] * (1.0 - 1e-12) || r > self.r[n - 1] * (1.0 + 1e-12) {
            return Err(Error::UnsupportedRadius {
                radius: r,
                min: self.r.first().copied().unwrap_or(0.0),
                max: self.r.last().copied().unwrap_or(0.0),
            });
        }
        let k = self.r.iter().position(|&x| x >= r).unwrap_or(n - 1).max(1);
        let t = ((r / self.r[k - 1]).ln() / (self.r[k] / self.r[k - 1]).ln()).clamp(0.0, 1.0);
        Ok(column[k - 1] + t * (column[k] - column[k - 1]))
    }

    /// One row per radius.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,H,B,D,I,I_surface,G,psi,sigma,M,J,Phi,N,Ntilde,W,lambda_mask,gamma_mask\n");
        for k in 0..self.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.r[k],
                self.h[k],
                self.b[k],
                self.d[k],
                self.i[k],
                self.i_surface[k],
                self.g[k],
                self.psi[k],
                self.sigma[k],
                self.m[k],
                self.j[k],
                self.phi[k],
                self.n[k],
                self.ntilde[k],
                self.w[k],
                self.lambda_mask[k] as u8,
                self.gamma_mask[k] as u8
            );
        }
        s
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "alpha": self.alpha,
            "alpha_error": self.alpha_error,
            "beta_est": self.beta,
            "k_prime": self.k_prime,
            "delta": self.delta,
            "c_weiss": self.c_weiss,
            "phi_monotonicity": self.phi_monotonicity,
            "weiss_monotonicity": self.weiss_monotonicity,
            "ntilde_min_radius": self.ntilde.first(),
            "radii": self.len(),
        })
    }
}

/// `W(r) = σ/r^{3−a} (J − (3−a)/(2r) M)`.
pub fn weiss(sigma: f64, j: f64, m: f64, r: f64, a: f64) -> f64 {
    sigma / r.powf(3.0 - a) * (j - (3.0 - a) / (2.0 * r) * m)
}

fn validate_grid(r: &[f64], an: &Analysis) -> Result<()> {
    if r.len() < 5 {
        return Err(Error::config("r_grid", format!("need at least 5 radii, got {}", r.len())));
    }
    if r.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("r_grid", "radii must be strictly increasing"));
    }
    let lo = an.min_radius();
    let hi = an.grid.radius;
    if r[0] < lo || r[r.len() - 1] > hi {
        return Err(Error::UnsupportedRadius {
            radius: if r[0] < lo { r[0] } else { r[r.len() - 1] },
            min: lo,
            max: hi,
        });
    }
    Ok(())
}

/// Computes every radial column on the grid of `opts` (default grid if none).
pub fn frequency_profile(sol: &SolutionField, problem: &ProblemSpec, opts: &ProfileOptions) -> Result<RadialProfile> {
    let an = Analysis::with_angles(sol, problem, opts.n_angles)?;
    profile_from_analysis(&an, problem, opts)
}

pub(crate) fn profile_from_analysis(an: &Analysis, problem: &ProblemSpec, opts: &ProfileOptions) -> Result<RadialProfile> {
    let grid = &an.grid;
    let r = opts
        .r_grid
        .clone()
        .unwrap_or_else(|| default_r_grid(grid.max_spacing(), grid.radius));
    validate_grid(&r, an)?;
    let delta = opts.delta;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter { name: "delta", value: delta });
    }
    let a = problem.a;
    let n = grid.n;
    let na = n as f64 + a;
    let mut prof = RadialProfile::empty(r.clone());
    prof.delta = delta;
    let mut h_la = vec![0.0; r.len()];
    for (k, &rk) in r.iter().enumerate() {
        prof.h[k] = an.height(rk)?;
        h_la[k] = an.height_la(rk)?;
        prof.b[k] = an.mass(rk)?;
        prof.d[k] = an.dirichlet(rk)?;
        prof.i[k] = prof.d[k] + an.source_pairing(rk)?;
        prof.i_surface[k] = an.total_energy_surface(rk)?;
    }
    let h_floor = 1e-14 * prof.h.iter().fold(0.0f64, |m, v| m.max(*v));
    for k in 0..r.len() {
        prof.g[k] = if prof.h[k] > h_floor { h_la[k] / prof.h[k] } else { na / r[k] };
    }
    let ps = integrate_psi_sigma(&r, &prof.g, n, a)?;
    prof.alpha = ps.alpha;
    prof.alpha_error = ps.alpha_error;
    prof.beta = ps.beta;
    prof.psi = ps.psi;
    prof.sigma = ps.sigma;
    for k in 0..r.len() {
        prof.m[k] = prof.h[k] / prof.psi[k];
        prof.j[k] = prof.i[k] / prof.psi[k];
        prof.phi[k] = if prof.h[k] > h_floor { prof.sigma[k] * prof.j[k] / prof.m[k] } else { 0.0 };
        prof.lambda_mask[k] = prof.h[k] > prof.psi[k] * r[k].powf(3.0 + delta);
        prof.gamma_mask[k] = prof.h[k] > (-prof.beta).exp() * r[k].powf(3.0 + delta + na);
        prof.w[k] = weiss(prof.sigma[k], prof.j[k], prof.m[k], r[k], a);
    }
    prof.weiss_scale = (0..r.len())
        .map(|k| (prof.sigma[k] / r[k].powf(3.0 - a) * prof.j[k]).abs())
        .fold(0.0, f64::max);

    let expo = (1.0 - delta) / 2.0;
    let phi_adjusted = |kp: f64| -> Vec<f64> {
        (0..r.len())
            .map(|k| (kp * r[k].powf(expo)).exp() * prof.phi[k])
            .collect()
    };
    let gamma_mask = prof.gamma_mask.clone();
    prof.k_prime = match opts.k_prime {
        KPrime::Fixed(v) => Some(v),
        KPrime::Calibrate => calibrate_ladder(phi_adjusted, &gamma_mask),
    };
    let kp = prof.k_prime.unwrap_or(0.0);
    prof.phi_monotonicity = Some(monotonicity_violation(&phi_adjusted(kp), &gamma_mask, 0.01));

    let wexp = (1.0 + a) / 2.0;
    let all = vec![true; r.len()];
    let weiss_adjusted = |c: f64| -> Vec<f64> { (0..r.len()).map(|k| prof.w[k] + c * r[k].powf(wexp)).collect() };
    prof.c_weiss = match opts.c_weiss {
        KPrime::Fixed(v) => Some(v),
        KPrime::Calibrate => calibrate_ladder(weiss_adjusted, &all),
    };
    let cw = prof.c_weiss.unwrap_or(0.0);
    prof.weiss_monotonicity = Some(monotonicity_violation(&weiss_adjusted(cw), &all, 0.01));

    let (nn, nt) = truncated_frequency(&r, &prof.m, &prof.sigma, delta, kp);
    prof.n = nn;
    prof.ntilde = nt;
    Ok(prof)
}

/// `N` and `Ñ = r N / σ` from `M` and `σ`, with the log-derivative of
/// `max(M, r^{3+δ})` taken in `ln r`.
pub(crate) fn truncated_frequency(r: &[f64], m: &[f64], sigma: &[f64], delta: f64, kp: f64) -> (Vec<f64>, Vec<f64>) {
    let lnr: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let logm: Vec<f64> = (0..r.len()).map(|k| m[k].max(r[k].powf(3.0 + delta)).ln()).collect();
    let dlog = derivative(&lnr, &logm);
    let expo = (1.0 - delta) / 2.0;
    let mut n = vec![0.0; r.len()];
    let mut nt = vec![0.0; r.len()];
    for k in 0..r.len() {
        let factor = (kp * r[k].powf(expo)).exp();
        n[k] = 0.5 * sigma[k] * factor * dlog[k] / r[k];
        nt[k] = r[k] / sigma[k] * n[k];
    }
    (n, nt)
}

/// `Ñ` on `r` from heights alone (the source does not enter).
pub(crate) fn frequency_from_heights(an: &Analysis, r: &[f64], delta: f64, kp: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    validate_grid(r, an)?;
    let na = an.grid.n as f64 + an.a;
    let mut h = vec![0.0; r.len()];
    let mut g = vec![0.0; r.len()];
    for (k, &rk) in r.iter().enumerate() {
        h[k] = an.height(rk)?;
        g[k] = an.height_la(rk)?;
    }
    let h_floor = 1e-14 * h.iter().fold(0.0f64, |m, v| m.max(*v));
    for k in 0..r.len() {
        g[k] = if h[k] > h_floor { g[k] / h[k] } else { na / r[k] };
    }
    let ps = integrate_psi_sigma(r, &g, an.grid.n, an.a)?;
    let m: Vec<f64> = h.iter().zip(&ps.psi).map(|(h, p)| h / p).collect();
    let (_, nt) = truncated_frequency(r, &m, &ps.sigma, delta, kp);
    Ok((nt, m))
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub r: Vec<f64>,
    pub h_prime: Vec<f64>,
    /// `2 I(r) + ∫_{S_r} U² L_a|X|`.
    pub h_prime_rhs: Vec<f64>,
    pub solid_i: Vec<f64>,
    pub surface_i: Vec<f64>,
    pub d_prime: Vec<f64>,
    /// Rellich right-hand side, only for `A = I` and `f = 0`.
    pub rellich_rhs: Option<Vec<f64>>,
    pub height_error: f64,
    pub surface_error: f64,
    pub rellich_error: Option<f64>,
    /// Smallest `C` with `H ≤ C (B/r + r D)`.
    pub trace_constant: f64,
    /// Smallest `C` with `B/r ≤ C (H + r D)`.
    pub poincare_constant: f64,
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Differentiated identities on `r_grid`; errors are maximized over radii in
/// `[r_lo, r_hi]` (derivatives at the two end radii are one-sided and skipped).
pub fn identity_checks(
    sol: &SolutionField,
    problem: &ProblemSpec,
    r_grid: &[f64],
    r_lo: f64,
    r_hi: f64,
) -> Result<IdentityReport> {
    let an = Analysis::new(sol, problem)?;
    validate_grid(r_grid, &an)?;
    let r = r_grid.to_vec();
    let len = r.len();
    let mut h = vec![0.0; len];
    let mut h_la = vec![0.0; len];
    let mut d = vec![0.0; len];
    let mut b = vec![0.0; len];
    let mut solid = vec![0.0; len];
    let mut surface = vec![0.0; len];
    for (k, &rk) in r.iter().enumerate() {
        h[k] = an.height(rk)?;
        h_la[k] = an.height_la(rk)?;
        d[k] = an.dirichlet(rk)?;
        b[k] = an.mass(rk)?;
        solid[k] = d[k] + an.source_pairing(rk)?;
        surface[k] = an.total_energy_surface(rk)?;
    }
    let h_prime = derivative(&r, &h);
    let d_prime = derivative(&r, &d);
    let h_prime_rhs: Vec<f64> = (0..len).map(|k| 2.0 * solid[k] + h_la[k]).collect();
    let exact_case = problem.coeff.identity && problem.f.iter().all(|&v| v == 0.0);
    let rellich_rhs = if exact_case {
        let na1 = problem.grid.n as f64 - 1.0 + problem.a;
        Some(
            r.iter()
                .enumerate()
                .map(|(k, &rk)| Ok(2.0 * an.conormal_square(rk)? + na1 / rk * d[k]))
                .collect::<Result<Vec<f64>>>()?,
        )
    } else {
        None
    };

    let window: Vec<usize> = (1..len - 1).filter(|&k| r[k] >= r_lo && r[k] <= r_hi).collect();
    let scale_h = h_prime.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-12;
    let scale_i = solid.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-12;
    let scale_d = d_prime.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-12;
    let height_error = window
        .iter()
        .map(|&k| rel(h_prime[k], h_prime_rhs[k], scale_h.max(1e-300)))
        .fold(0.0, f64::max);
    let surface_error = window
        .iter()
        .map(|&k| rel(solid[k], surface[k], scale_i.max(1e-300)))
        .fold(0.0, f64::max);
    let rellich_error = rellich_rhs.as_ref().map(|rhs| {
        window
            .iter()
            .map(|&k| rel(d_prime[k], rhs[k], scale_d.max(1e-300)))
            .fold(0.0, f64::max)
    });
    let mut trace_constant = 0.0f64;
    let mut poincare_constant = 0.0f64;
    for k in 0..len {
        let den1 = b[k] / r[k] + r[k] * d[k];
        if den1 > 0.0 {
            trace_constant = trace_constant.max(h[k] / den1);
        }
        let den2 = h[k] + r[k] * d[k];
        if den2 > 0.0 {
            poincare_constant = poincare_constant.max(b[k] / r[k] / den2);
        }
    }
    Ok(IdentityReport {
        r,
        h_prime,
        h_prime_rhs,
        solid_i: solid,
        surface_i: surface,
        d_prime,
        rellich_rhs,
        height_error,
        surface_error,
        rellich_error,
        trace_constant,
        poincare_constant,
    })
}
