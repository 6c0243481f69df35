//! Time stepping for `D^{alpha,beta} x = f(t, x)` through the equivalent
//! Volterra equation
//!
//! ```text
//! x(z) = x0 z^{gamma-1} + I^alpha [f(., x)](z)
//! ```
//!
//! in weighted form `v = z^{1-gamma} x`. The right-hand side is written as
//! `z^{-s} G(z)` with `G` bounded; its leading part `G(0) z^{-s}` is
//! integrated exactly, the remainder by product integration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WeightedGridFunction;
use crate::mesh::{Grading, Mesh};
use crate::params::ProblemParams;
use crate::power::{blowup_threshold, exact_solution, matched_beta};
use crate::quadrature::{left_sum_split, KernelMoments};
use crate::special::{gamma_fn, recip_gamma};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Number of mesh intervals.
    pub n: usize,
    /// Grading exponent `q` toward the initial point.
    pub grading: f64,
    /// Final time `T_end > a`.
    pub horizon: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub blowup_cap: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            n: 512,
            grading: 3.0,
            horizon: 2.0,
            picard_tol: 1e-12,
            picard_max: 50,
            blowup_cap: 1e8,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.picard_tol > 0.0) {
            return Err(Error::param("picard_tol", "must be positive"));
        }
        if self.picard_max == 0 {
            return Err(Error::param("picard_max", "must be positive"));
        }
        if !(self.blowup_cap > 1.0) {
            return Err(Error::param("blowup_cap", "must exceed 1"));
        }
        if !self.horizon.is_finite() {
            return Err(Error::param("horizon", "must be finite"));
        }
        Ok(())
    }

    pub fn mesh(&self, params: &ProblemParams) -> Result<Mesh> {
        if !(self.horizon > params.a) {
            return Err(Error::param(
                "horizon",
                format!("{} must exceed a = {}", self.horizon, params.a),
            ));
        }
        Mesh::new(params.a, self.horizon, params.rho, self.n, self.grading, Grading::Left)
    }

    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n, ..self.clone() }
    }
}

/// Right-hand side `f(t, x)`.
pub trait Rhs: Sync {
    fn eval(&self, t: f64, z: f64, x: f64) -> f64;

    /// `df/dx`, if known.
    fn dx(&self, _t: f64, _z: f64, _x: f64) -> Option<f64> {
        None
    }

    /// Exponent `s` with `z^s f(t, z^{-w} v)` bounded near the initial point.
    fn singular_exponent(&self, _w: f64) -> f64 {
        0.0
    }

    /// `G = z^s f(t, z^{-w} v)`. At `z = 0` the caller passes a small
    /// positive `z` instead.
    fn scaled(&self, t: f64, z: f64, v: f64, w: f64) -> f64 {
        let s = self.singular_exponent(w);
        z.powf(s) * self.eval(t, z, z.powf(-w) * v)
    }

    fn scaled_dv(&self, t: f64, z: f64, v: f64, w: f64) -> f64 {
        let s = self.singular_exponent(w);
        match self.dx(t, z, z.powf(-w) * v) {
            Some(d) => z.powf(s - w) * d,
            None => {
                let h = v.abs().max(1.0) * f64::EPSILON.cbrt();
                (self.scaled(t, z, v + h, w) - self.scaled(t, z, v - h, w)) / (2.0 * h)
            }
        }
    }
}

/// `lambda z^mu |x|^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRhs {
    pub lambda: f64,
    pub mu: f64,
    pub m: f64,
}

impl PowerRhs {
    pub fn from_params(p: &ProblemParams) -> Self {
        Self { lambda: p.lambda, mu: p.mu, m: p.m }
    }
}

impl Rhs for PowerRhs {
    fn eval(&self, _t: f64, z: f64, x: f64) -> f64 {
        self.lambda * z.powf(self.mu) * x.abs().powf(self.m)
    }

    fn dx(&self, _t: f64, z: f64, x: f64) -> Option<f64> {
        Some(self.lambda * z.powf(self.mu) * self.m * x.abs().powf(self.m - 1.0) * x.signum())
    }

    fn singular_exponent(&self, w: f64) -> f64 {
        self.m * w - self.mu
    }

    fn scaled(&self, _t: f64, _z: f64, v: f64, _w: f64) -> f64 {
        self.lambda * v.abs().powf(self.m)
    }

    fn scaled_dv(&self, _t: f64, _z: f64, v: f64, _w: f64) -> f64 {
        self.lambda * self.m * v.abs().powf(self.m - 1.0) * v.signum()
    }
}

/// Closure right-hand side `f(t, x)`.
pub struct FnRhs<F> {
    f: F,
}

impl<F: Fn(f64, f64) -> f64 + Sync> FnRhs<F> {
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> Rhs for FnRhs<F> {
    fn eval(&self, t: f64, _z: f64, x: f64) -> f64 {
        (self.f)(t, x)
    }
}

/// Output of [`solve_ivp`]: the weighted solution up to the last accepted
/// node, and the crossing time if the solution escaped.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub solution: WeightedGridFunction,
    pub blowup_at: Option<f64>,
}

impl Trajectory {
    pub fn blew_up(&self) -> bool {
        self.blowup_at.is_some()
    }
}

enum Step {
    Converged(f64),
    Escaped,
}

pub fn solve_ivp(params: &ProblemParams, rhs: &dyn Rhs, config: &SolveConfig) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    let mesh = config.mesh(params)?;
    let z = mesh.z();
    let t = mesh.t();
    let n = mesh.n();
    let alpha = params.alpha;
    let w = params.weight();
    let s = rhs.singular_exponent(w);
    if s >= 1.0 {
        return Err(Error::Integrability(format!(
            "right-hand side behaves like z^-{s} at the initial point"
        )));
    }
    let e0 = w + alpha - s;
    let critical = e0.abs() < 1e-9;
    if !critical && e0 < 0.0 {
        return Err(Error::Domain(format!(
            "right-hand side is too singular for the weighted space (net exponent {e0})"
        )));
    }
    let v0 = params.x_a * recip_gamma(params.gamma());
    let z_floor = z[1] * 1e-6;
    let g_at = |j: usize, v: f64| {
        let zj = if z[j] == 0.0 { z_floor } else { z[j] };
        rhs.scaled(t[j], zj, v, w)
    };
    let dg_at = |j: usize, v: f64| {
        let zj = if z[j] == 0.0 { z_floor } else { z[j] };
        rhs.scaled_dv(t[j], zj, v, w)
    };
    let g0 = g_at(0, v0);
    if !g0.is_finite() {
        return Err(Error::NonFinite { t: t[0] });
    }
    // exact integral of the leading part g0 z^{-s}
    let c_s = gamma_fn(1.0 - s)? * recip_gamma(1.0 - s + alpha);
    let km = KernelMoments::new(alpha);
    let norm = recip_gamma(alpha);

    let mut v = vec![v0; n + 1];
    // remainder samples z^{-s} (G - g0)
    let mut r = vec![0.0; n + 1];
    let mut blowup_at = None;
    let mut last = 0;
    for j in 1..=n {
        let zj = z[j];
        let zw = if w == 0.0 { 1.0 } else { zj.powf(w) };
        let (hist, coef) = left_sum_split(z, &r, j, &km);
        let lead = if critical { 0.0 } else { c_s * g0 * zj.powf(e0) };
        let base = lead + zw * hist * norm;
        let zs = if s == 0.0 { 1.0 } else { zj.powf(-s) };
        let k = zw * coef * norm * zs;
        let guess = if j >= 2 { 2.0 * v[j - 1] - v[j - 2] } else { v[j - 1] };
        let unweighted = |vj: f64| vj * zj.powf(-w);
        let cap = config.blowup_cap + (v0 * zj.powf(-w)).abs();
        match step(
            |x| v0 + base + k * (g_at(j, x) - g0),
            |x| 1.0 - k * dg_at(j, x),
            guess,
            v[j - 1],
            config,
            |x| unweighted(x).abs() > cap,
        ) {
            Some(Step::Converged(vj)) => {
                if (unweighted(vj) - v0 * zj.powf(-w)).abs() > config.blowup_cap {
                    blowup_at = Some(t[j]);
                    break;
                }
                v[j] = vj;
                r[j] = zs * (g_at(j, vj) - g0);
                last = j;
            }
            Some(Step::Escaped) => {
                blowup_at = Some(t[j]);
                break;
            }
            None => {
                return Err(Error::NonConvergence {
                    t: t[j],
                    iterations: config.picard_max,
                })
            }
        }
    }
    v.truncate(last + 1);
    let solution = if last == n {
        WeightedGridFunction::new(mesh, w, v)?
    } else {
        let part = Mesh::from_z(mesh.a(), mesh.rho(), z[..=last.max(1)].to_vec(), mesh.grading(), mesh.side())?;
        if v.len() < 2 {
            v.push(v[0]);
        }
        WeightedGridFunction::new(part, w, v)?
    };
    Ok(Trajectory { solution, blowup_at })
}

/// Solves `x = phi(x)` by damped fixed-point iteration, switching to Newton
/// on `x - phi(x)` after half the iteration budget.
fn step(
    phi: impl Fn(f64) -> f64,
    dres: impl Fn(f64) -> f64,
    guess: f64,
    prev: f64,
    config: &SolveConfig,
    escaped: impl Fn(f64) -> bool,
) -> Option<Step> {
    let tol = |x: f64| config.picard_tol * x.abs().max(1.0);
    let half = (config.picard_max / 2).max(1);
    let mut x = guess;
    let mut damp = 1.0;
    let mut last_delta = f64::INFINITY;
    let mut peak = prev.abs().max(1.0);
    for _ in 0..half {
        let y = phi(x);
        if !y.is_finite() || escaped(y) {
            break;
        }
        let delta = y - x;
        if delta.abs() <= tol(y) {
            return Some(Step::Converged(y));
        }
        if delta.abs() >= last_delta {
            damp *= 0.5;
        }
        last_delta = delta.abs();
        x += damp * delta;
        peak = peak.max(x.abs());
    }
    // When every probe has phi(x) on the same side of x, the step equation
    // has no root: the discrete solution cannot be continued.
    let mut signs = (false, false);
    let mut x = guess;
    for _ in half..config.picard_max.max(half + 1) {
        let res = x - phi(x);
        if res < 0.0 {
            signs.0 = true;
        } else {
            signs.1 = true;
        }
        let d = dres(x);
        if !res.is_finite() || !d.is_finite() || d == 0.0 {
            return Some(Step::Escaped);
        }
        let next = x - res / d;
        if !next.is_finite() || escaped(next) {
            return Some(Step::Escaped);
        }
        if (next - x).abs() <= tol(next) {
            return Some(Step::Converged(next));
        }
        x = next;
        peak = peak.max(x.abs());
    }
    if signs.0 != signs.1 || peak > 10.0 * prev.abs().max(1.0) {
        Some(Step::Escaped)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    GlobalTracked,
    Blowup,
    Inconclusive,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::GlobalTracked => "global_tracked",
            Classification::Blowup => "blowup",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub classification: Classification,
    pub t_blow_estimate: Option<f64>,
    pub final_norm: f64,
    pub mesh_levels_used: usize,
}

/// Relative gap allowed between blow-up times on two mesh levels.
pub const BLOWUP_AGREEMENT: f64 = 0.05;
/// Weighted relative error allowed when tracking the power solution.
pub const TRACKING_TOL: f64 = 1e-2;

fn final_norm(tr: &Trajectory) -> f64 {
    let sol = &tr.solution;
    let j = sol.mesh().n();
    sol.unweighted()[j].abs()
}

/// Max weighted relative deviation of `sol` from the power solution.
pub fn tracking_error(sol: &WeightedGridFunction, params: &ProblemParams) -> Result<f64> {
    let exact = exact_solution(params)?;
    let w = sol.weight_exp();
    let z = sol.mesh().z();
    let mut worst: f64 = 0.0;
    for (j, &zj) in z.iter().enumerate().skip(1) {
        let want = exact.power.eval_z(zj) * zj.powf(w);
        worst = worst.max((sol.values()[j] - want).abs() / want.abs());
    }
    Ok(worst)
}

pub fn detect_blowup(params: &ProblemParams, config: &SolveConfig) -> Result<BlowupReport> {
    if !(params.x_a > 0.0) {
        return Err(Error::Precondition(format!("x_a = {} must be positive", params.x_a)));
    }
    let m_star = blowup_threshold(params)?;
    let rhs = PowerRhs::from_params(params);
    let coarse = solve_ivp(params, &rhs, config)?;
    let Some(t1) = coarse.blowup_at else {
        let tracked = if params.m > m_star {
            let matched = exact_solution(params)?
                .x_a
                .is_some_and(|xa| (xa - params.x_a).abs() <= 1e-9 * xa.abs());
            matched && tracking_error(&coarse.solution, params)? <= TRACKING_TOL
        } else {
            true
        };
        return Ok(BlowupReport {
            classification: if tracked {
                Classification::GlobalTracked
            } else {
                Classification::Inconclusive
            },
            t_blow_estimate: None,
            final_norm: final_norm(&coarse),
            mesh_levels_used: 1,
        });
    };
    let fine = solve_ivp(params, &rhs, &config.refined())?;
    let a = params.a;
    let report = match fine.blowup_at {
        Some(t2) if (t1 - t2).abs() <= BLOWUP_AGREEMENT * (t2 - a) => {
            // first-order Richardson extrapolation of the crossing time
            let est = (2.0 * t2 - t1).clamp(a + f64::EPSILON * a.max(1.0), config.horizon);
            BlowupReport {
                classification: Classification::Blowup,
                t_blow_estimate: Some(est),
                final_norm: final_norm(&fine),
                mesh_levels_used: 2,
            }
        }
        _ => BlowupReport {
            classification: Classification::Inconclusive,
            t_blow_estimate: None,
            final_norm: final_norm(&fine),
            mesh_levels_used: 2,
        },
    };
    Ok(report)
}

/// How sweep cells above the threshold choose their type parameter and
/// initial value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Every cell uses the base parameters.
    #[default]
    Fixed,
    /// Cells with `m > m*` switch to the type parameter and initial value
    /// for which the power solution is an admissible global solution.
    MatchGlobal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub params: ProblemParams,
    pub m_star: Option<f64>,
    pub report: Result<BlowupReport>,
}

impl SweepCell {
    /// A classified cell that disagrees with the side of the threshold it is on.
    pub fn contradicts(&self) -> bool {
        let (Some(m_star), Ok(r)) = (self.m_star, &self.report) else {
            return false;
        };
        let m = self.params.m;
        match r.classification {
            Classification::Blowup => m > m_star,
            Classification::GlobalTracked => m < m_star,
            Classification::Inconclusive => true,
        }
    }
}

fn cell_params(base: &ProblemParams, m: f64, mu: f64, mode: SweepMode) -> Result<(ProblemParams, f64)> {
    let mut p = base.with_m(m).with_mu(mu);
    let m_star = blowup_threshold(&p)?;
    if !(m > 1.0) {
        return Err(Error::param("m", format!("{m} must exceed 1")));
    }
    if mode == SweepMode::MatchGlobal && m > m_star {
        p = p.with_beta(matched_beta(p.alpha, mu, m));
        let xa = exact_solution(&p)?
            .x_a
            .ok_or_else(|| Error::Domain("power solution outside the weighted space".into()))?;
        p = p.with_x_a(xa);
    }
    p.validate()?;
    Ok((p, m_star))
}

/// One report per `(m, mu)` pair, `m` outermost. Cell errors are kept in
/// the cell.
pub fn sweep(
    params_base: &ProblemParams,
    m_values: &[f64],
    mu_values: &[f64],
    config: &SolveConfig,
    mode: SweepMode,
) -> Vec<SweepCell> {
    let pairs: Vec<(f64, f64)> = m_values
        .iter()
        .flat_map(|&m| mu_values.iter().map(move |&mu| (m, mu)))
        .collect();
    pairs
        .par_iter()
        .map(|&(m, mu)| {
            let base = params_base.with_m(m).with_mu(mu);
            match cell_params(params_base, m, mu, mode) {
                Ok((p, m_star)) => SweepCell {
                    params: p,
                    m_star: Some(m_star),
                    report: detect_blowup(&p, config),
                },
                Err(e) => SweepCell {
                    params: base,
                    m_star: blowup_threshold(&base).ok(),
                    report: Err(e),
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_critical(params: &ProblemParams) -> bool {
        let w = params.weight();
        (w + params.alpha - (params.m * w - params.mu)).abs() <= 1e-9
    }

    fn regression() -> (ProblemParams, SolveConfig) {
        let p = ProblemParams { m: 3.0, ..Default::default() };
        let xa = exact_solution(&p).unwrap().x_a.unwrap();
        (p.with_x_a(xa), SolveConfig { n: 256, ..Default::default() })
    }

    #[test]
    fn zero_rhs_reproduces_initial_term() {
        let p = ProblemParams::default();
        let zero = FnRhs::new(|_, _| 0.0);
        let tr = solve_ivp(&p, &zero, &SolveConfig { n: 64, ..Default::default() }).unwrap();
        let want = 1.0 / gamma_fn(p.gamma()).unwrap();
        assert!(tr.solution.values().iter().all(|&v| (v - want).abs() < 1e-15));
        let zeroed = solve_ivp(&p.with_x_a(0.0), &zero, &SolveConfig::default()).unwrap();
        assert!(zeroed.solution.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn critical_power_solution_is_reproduced() {
        let (p, cfg) = regression();
        assert!(is_critical(&p));
        let tr = solve_ivp(&p, &PowerRhs::from_params(&p), &cfg).unwrap();
        assert!(!tr.blew_up());
        let err = tracking_error(&tr.solution, &p).unwrap();
        assert!(err < 1e-12, "{err} {:?} {:?}", &tr.solution.values()[..4], p);
    }

    #[test]
    fn linear_caputo_problem_matches_mittag_leffler() {
        // D^{1/2} x = x with x(a) = 1 (beta = 1): x = E_{1/2}(z^{1/2})
        // = exp(z) erfc(-sqrt z). At z = 1: 5.00898008076228346...
        let p = ProblemParams { beta: 1.0, m: 1.0 + 1e-300, ..Default::default() };
        let rhs = FnRhs::new(|_, x| x);
        let cfg = SolveConfig { n: 1024, ..Default::default() };
        let tr = solve_ivp(&ProblemParams { m: 2.0, ..p }, &rhs, &cfg).unwrap();
        let got = *tr.solution.values().last().unwrap();
        assert!((got / 5.008_980_080_762_283 - 1.0).abs() < 1e-4, "{got}");
    }

    #[test]
    fn blowup_example_is_detected() {
        let p = ProblemParams { beta: 1.0, m: 1.5, ..Default::default() };
        let cfg = SolveConfig { n: 400, horizon: 40.0, ..Default::default() };
        let r = detect_blowup(&p, &cfg).unwrap();
        assert_eq!(r.classification, Classification::Blowup, "{r:?}");
        let tb = r.t_blow_estimate.unwrap();
        assert!(tb > 1.0 && tb <= 40.0);
    }

    #[test]
    fn detect_blowup_preconditions() {
        let p = ProblemParams::default();
        assert!(matches!(detect_blowup(&p.with_x_a(0.0), &SolveConfig::default()), Err(Error::Precondition(_))));
        let bad = ProblemParams { mu: -0.6, ..Default::default() };
        assert!(matches!(detect_blowup(&bad, &SolveConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn sweep_keeps_order_and_cell_errors() {
        let base = ProblemParams { beta: 1.0, ..Default::default() };
        let cfg = SolveConfig { n: 64, horizon: 3.0, ..Default::default() };
        assert!(sweep(&base, &[], &[0.0], &cfg, SweepMode::Fixed).is_empty());
        let cells = sweep(&base, &[1.5, 2.5], &[0.0, -0.7], &cfg, SweepMode::MatchGlobal);
        let got: Vec<(f64, f64)> = cells.iter().map(|c| (c.params.m, c.params.mu)).collect();
        assert_eq!(got, vec![(1.5, 0.0), (1.5, -0.7), (2.5, 0.0), (2.5, -0.7)]);
        assert!(cells[1].report.is_err() && cells[3].report.is_err());
    }
}
