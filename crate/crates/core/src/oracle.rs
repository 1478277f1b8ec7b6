//! Reference solutions of the weighted model problem `div(|y|^a ∇U) = 0`.
//!
//! The homogeneous Signorini profile of degree `(3-a)/2` has a closed form
//! only for `a = 0`. For general `a` its angular part solves
//!
//! ```text
//! ((sin θ)^a φ')' + κ(κ + a) (sin θ)^a φ = 0   on (0, π)
//! ```
//!
//! with a regular (Neumann) end at `θ = 0` and a Dirichlet end at `θ = π`,
//! where `φ ~ (π - θ)^{1-a}`. Both ends are regular singular points, so the
//! profile is built from Frobenius series near the ends and RK4 in between;
//! the mismatch of the two branches in the middle is the reported residual.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::RadialProfile;
use crate::grid::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// `y^{1-a}`.
    YPower,
    /// `x1^2 - y^2/(1+a)`.
    EvenPoly,
    /// `r^{(3-a)/2} φ(θ)` in the `(x1, y)` plane.
    SignoriniProfile,
}

impl OracleKind {
    pub const ALL: [OracleKind; 3] = [OracleKind::YPower, OracleKind::EvenPoly, OracleKind::SignoriniProfile];

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::YPower => "y_power",
            OracleKind::EvenPoly => "even_poly",
            OracleKind::SignoriniProfile => "signorini_profile",
        }
    }
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OracleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnsupportedKind(s.to_string()))
    }
}

/// Frobenius series `t^p Σ d_k t^{2k}` around one end of `(0, π)`.
#[derive(Debug, Clone)]
struct Series {
    p: f64,
    d: Vec<f64>,
}

impl Series {
    /// Coefficients of `(sin t / t)^a` in powers of `t^2`.
    fn sine_ratio_power(a: f64, terms: usize) -> Vec<f64> {
        let mut f = vec![1.0; terms];
        let mut fact = 1.0;
        for j in 1..terms {
            fact *= ((2 * j) * (2 * j + 1)) as f64;
            f[j] = if j % 2 == 1 { -1.0 / fact } else { 1.0 / fact };
        }
        let mut g = vec![0.0; terms];
        g[0] = 1.0;
        for k in 1..terms {
            let mut s = 0.0;
            for j in 1..=k {
                s += ((a + 1.0) * j as f64 - k as f64) * f[j] * g[k - j];
            }
            g[k] = s / k as f64;
        }
        g
    }

    fn new(a: f64, lambda: f64, p: f64, terms: usize) -> Self {
        let sigma = Self::sine_ratio_power(a, terms);
        let mut d = vec![0.0; terms];
        d[0] = 1.0;
        for big_n in 1..terms {
            let nn = big_n as f64;
            let outer = a + p - 1.0 + 2.0 * nn;
            let mut s = 0.0;
            for k in 0..big_n {
                s += sigma[big_n - k] * d[k] * (p + 2.0 * k as f64) * outer;
            }
            for k in 0..big_n {
                s += lambda * sigma[big_n - 1 - k] * d[k];
            }
            d[big_n] = -s / ((p + 2.0 * nn) * outer);
        }
        Series { p, d }
    }

    /// `(φ, (sin t)^a φ')` at `t`, derivative taken in `t`.
    fn eval(&self, t: f64, a: f64) -> (f64, f64) {
        let x = t * t;
        let mut val = 0.0;
        let mut der = 0.0;
        let mut pw = 1.0;
        for (k, &dk) in self.d.iter().enumerate() {
            val += dk * pw;
            der += dk * (self.p + 2.0 * k as f64) * pw;
            pw *= x;
        }
        let phi = t.powf(self.p) * val;
        // t^{p-1} · Σ d_k (p+2k) t^{2k}, multiplied by sin^a t
        let dphi = if t == 0.0 {
            if self.p == 0.0 {
                0.0
            } else {
                f64::NAN
            }
        } else {
            t.powf(self.p - 1.0) * der
        };
        let q = if t == 0.0 {
            // the weighted derivative has a finite limit at the end point
            if self.p == 0.0 {
                0.0
            } else {
                self.d[0] * self.p
            }
        } else {
            t.sin().powf(a) * dphi
        };
        (phi, q)
    }
}

/// Angular profile `φ` on `[0, π]` with `φ(0) = 1`.
#[derive(Debug, Clone)]
pub struct AngularProfile {
    pub a: f64,
    pub kappa: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// Normalized Wronskian mismatch of the two shooting branches.
    pub residual: f64,
    /// `lim_{θ→0} (sin θ)^a φ'(θ)`.
    pub neumann_defect: f64,
    left: Series,
    right: Series,
    right_scale: f64,
    matching: f64,
}

const MATCH_OFFSET: f64 = 0.25;

fn rk4_branch(a: f64, lambda: f64, start: f64, end: f64, init: (f64, f64), steps: usize) -> Vec<(f64, f64, f64)> {
    let rhs = |th: f64, phi: f64, q: f64| -> (f64, f64) {
        let s = th.sin().powf(a);
        (q / s, -lambda * s * phi)
    };
    let h = (end - start) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut phi, mut q) = init;
    out.push((start, phi, q));
    for k in 0..steps {
        let th = start + k as f64 * h;
        let (k1p, k1q) = rhs(th, phi, q);
        let (k2p, k2q) = rhs(th + 0.5 * h, phi + 0.5 * h * k1p, q + 0.5 * h * k1q);
        let (k3p, k3q) = rhs(th + 0.5 * h, phi + 0.5 * h * k2p, q + 0.5 * h * k2q);
        let (k4p, k4q) = rhs(th + h, phi + h * k3p, q + h * k3q);
        phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        out.push((start + (k + 1) as f64 * h, phi, q));
    }
    out
}

/// Shooting tolerance on the normalized Wronskian mismatch.
pub const SHOOTING_TOLERANCE: f64 = 1e-6;

/// Solves the angular equation of a `κ`-homogeneous solution of the weighted
/// Signorini problem in the `(x1, y)` half plane.
pub fn profile_ode(a: f64, kappa: f64, n_steps: usize) -> Result<AngularProfile> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::InvalidParameter { name: "a", value: a });
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidParameter { name: "kappa", value: kappa });
    }
    if n_steps < 16 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            value: n_steps as f64,
        });
    }
    let lambda = kappa * (kappa + a);
    let terms = 40;
    let left = Series::new(a, lambda, 0.0, terms);
    let right = Series::new(a, lambda, 1.0 - a, terms);

    let mid = 0.5 * PI;
    let half_steps = n_steps.div_ceil(2);
    let l_init = left.eval(MATCH_OFFSET, a);
    let left_branch = rk4_branch(a, lambda, MATCH_OFFSET, mid, l_init, half_steps);
    let (r_phi, r_q) = right.eval(MATCH_OFFSET, a);
    // θ = π - t, so dφ/dθ = -dφ/dt
    let right_branch = rk4_branch(a, lambda, PI - MATCH_OFFSET, mid, (r_phi, -r_q), half_steps);

    let &(_, pl, ql) = left_branch.last().unwrap();
    let &(_, pr, qr) = right_branch.last().unwrap();
    let wronskian = pl * qr - pr * ql;
    let residual = wronskian.abs() / ((pl * pl + ql * ql).sqrt() * (pr * pr + qr * qr).sqrt());
    let right_scale = if pr.abs() >= qr.abs() { pl / pr } else { ql / qr };
    if !right_scale.is_finite() || !residual.is_finite() {
        return Err(Error::OracleFailure("shooting produced non-finite values".into()));
    }

    let mut theta = Vec::new();
    let mut phi = Vec::new();
    let mut dphi = Vec::new();
    let mut push = |th: f64, p: f64, q: f64| {
        theta.push(th);
        phi.push(p);
        dphi.push(q / th.sin().powf(a));
    };
    for &(th, p, q) in &left_branch {
        push(th, p, q);
    }
    for &(th, p, q) in right_branch.iter().rev().skip(1) {
        push(th, right_scale * p, right_scale * q);
    }

    let profile = AngularProfile {
        a,
        kappa,
        theta,
        phi,
        dphi,
        residual,
        neumann_defect: left.eval(0.0, a).1,
        left,
        right,
        right_scale,
        matching: MATCH_OFFSET,
    };
    if residual > SHOOTING_TOLERANCE {
        return Err(Error::OracleFailure(format!(
            "shooting mismatch {residual:.3e} exceeds {SHOOTING_TOLERANCE:.0e} for a = {a}, kappa = {kappa}"
        )));
    }
    Ok(profile)
}

impl AngularProfile {
    /// `φ(θ)` for `θ ∈ [0, π]`.
    pub fn eval(&self, theta: f64) -> f64 {
        let th = theta.clamp(0.0, PI);
        if th <= self.matching {
            return self.left.eval(th, self.a).0;
        }
        if th >= PI - self.matching {
            return self.right_scale * self.right.eval(PI - th, self.a).0;
        }
        let h = self.theta[1] - self.theta[0];
        let k = (((th - self.theta[0]) / h).floor() as usize).min(self.theta.len() - 2);
        let t0 = self.theta[k];
        let hk = self.theta[k + 1] - t0;
        let s = (th - t0) / hk;
        let (p0, p1) = (self.phi[k], self.phi[k + 1]);
        let (m0, m1) = (self.dphi[k] * hk, self.dphi[k + 1] * hk);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1
    }

    /// Value at the Dirichlet end.
    pub fn dirichlet_value(&self) -> f64 {
        self.right_scale * self.right.eval(0.0, self.a).0
    }

    /// CSV table `theta,phi,dphi`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,phi,dphi\n");
        for k in 0..self.theta.len() {
            let _ = writeln!(s, "{:.12e},{:.12e},{:.12e}", self.theta[k], self.phi[k], self.dphi[k]);
        }
        s
    }
}

/// An exact or independently computed solution of the model problem.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub kind: OracleKind,
    pub a: f64,
    /// Homogeneity degree.
    pub kappa: f64,
    pub profile: Option<Arc<AngularProfile>>,
}

/// Default number of RK4 steps for the angular profile.
pub const DEFAULT_PROFILE_STEPS: usize = 4000;

pub fn exact_solution(kind: OracleKind, a: f64) -> Result<ReferenceSolution> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::InvalidParameter { name: "a", value: a });
    }
    let (kappa, profile) = match kind {
        OracleKind::YPower => (1.0 - a, None),
        OracleKind::EvenPoly => (2.0, None),
        OracleKind::SignoriniProfile => {
            let kappa = 0.5 * (3.0 - a);
            if a == 0.0 {
                (kappa, None)
            } else {
                (kappa, Some(Arc::new(profile_ode(a, kappa, DEFAULT_PROFILE_STEPS)?)))
            }
        }
    };
    Ok(ReferenceSolution { kind, a, kappa, profile })
}

impl ReferenceSolution {
    /// Value at a point; the field is even in `y`.
    pub fn value(&self, p: &Point) -> f64 {
        let y = p.y.abs();
        match self.kind {
            OracleKind::YPower => y.powf(1.0 - self.a),
            OracleKind::EvenPoly => p.x[0] * p.x[0] - y * y / (1.0 + self.a),
            OracleKind::SignoriniProfile => {
                let x = p.x[0];
                let r = x.hypot(y);
                if r == 0.0 {
                    return 0.0;
                }
                let theta = y.atan2(x);
                let ang = match &self.profile {
                    Some(prof) => prof.eval(theta),
                    None => (1.5 * theta).cos(),
                };
                r.powf(self.kappa) * ang
            }
        }
    }

    /// Whether a thin point belongs to the exact contact set with zero obstacle.
    pub fn in_contact(&self, x: &[f64]) -> bool {
        match self.kind {
            OracleKind::YPower => true,
            OracleKind::EvenPoly => x.iter().take(1).all(|&v| v == 0.0),
            OracleKind::SignoriniProfile => x[0] <= 0.0,
        }
    }
}

/// Closed-form columns of a `κ`-homogeneous solution with `A = I`, `f = 0`
/// and height `H(1) = h1`, evaluated on `r_grid`.
pub fn homogeneous_functionals(kappa: f64, n: usize, a: f64, h1: f64, r_grid: &[f64]) -> RadialProfile {
    let na = n as f64 + a;
    let e = na + 2.0 * kappa;
    let mut prof = RadialProfile::empty(r_grid.to_vec());
    for (k, &r) in r_grid.iter().enumerate() {
        let h = h1 * r.powf(e);
        prof.h[k] = h;
        prof.b[k] = h1 * r.powf(e + 1.0) / (e + 1.0);
        prof.d[k] = kappa * h / r;
        prof.i[k] = kappa * h / r;
        prof.g[k] = na / r;
        prof.psi[k] = r.powf(na);
        prof.sigma[k] = r;
        prof.m[k] = h1 * r.powf(2.0 * kappa);
        prof.j[k] = kappa * h1 * r.powf(2.0 * kappa - 1.0);
        prof.phi[k] = kappa;
        prof.n[k] = kappa;
        prof.ntilde[k] = kappa;
        prof.w[k] = (kappa - 0.5 * (3.0 - a)) * h1 * r.powf(2.0 * kappa - (3.0 - a));
    }
    prof.alpha = 1.0;
    prof.beta = 0.0;
    prof
}
