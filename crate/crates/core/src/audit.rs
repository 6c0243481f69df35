//! Finite-horizon audit of the test-function argument behind the
//! non-existence result: a cutoff `phi` is paired with a (super)solution,
//! derivatives are moved onto `phi` by fractional integration by parts, and
//! every inequality of the chain is evaluated numerically.
//!
//! All integrals are taken in `t` and computed in `z`, so the cutoff enters
//! as `psi = phi t^{1-rho}` (from `dt = t^{1-rho} dz`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{integrate_weighted, nodal_derivative, sample_values, Profile, WeightedGridFunction};
use crate::mesh::{Grading, Mesh};
use crate::operators::{generalized_derivative, left_integral, right_integral_values};
use crate::params::ProblemParams;
use crate::power::{power_hilfer_closed, power_integral_closed, PowerSum, ScaledPower};
use crate::special::{gamma_fn, recip_gamma};

/// Relative slack allowed on every audited inequality.
pub const AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    #[default]
    CubicSmoothstep,
}

/// `phi(t) = S(u)^lambda` with `u = (T - t) / (T - theta T)` clamped to
/// `[0, 1]` and `S(u) = 3u^2 - 2u^3`: one on `[a, theta T]`, zero from `T` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub theta: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub a: f64,
    pub ramp: Ramp,
    /// Exponent applied to the whole cutoff (1 is the plain ramp).
    pub exponent: f64,
}

pub fn build_test_function(theta: f64, t_end: f64, a: f64) -> Result<TestFunction> {
    TestFunction::new(theta, t_end, a, 1.0)
}

impl TestFunction {
    pub fn new(theta: f64, t_end: f64, a: f64, exponent: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 0.5) {
            return Err(Error::Geometry(format!("theta = {theta} not in (0, 1/2]")));
        }
        if !(t_end.is_finite() && a < theta * t_end) {
            return Err(Error::Geometry(format!(
                "need a < theta T, got a = {a}, theta T = {}",
                theta * t_end
            )));
        }
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(Error::param("lambda_tf", format!("{exponent} must be >= 1")));
        }
        Ok(Self {
            theta,
            t_end,
            a,
            ramp: Ramp::CubicSmoothstep,
            exponent,
        })
    }

    /// Smallest cutoff exponent for which `|phi'| / phi^{1/m}` stays bounded.
    pub fn bounded_quotient_exponent(m: f64) -> f64 {
        (0.5 * m / (m - 1.0)).max(1.0)
    }

    fn ramp_len(&self) -> f64 {
        self.t_end * (1.0 - self.theta)
    }

    fn u(&self, t: f64) -> f64 {
        ((self.t_end - t) / self.ramp_len()).clamp(0.0, 1.0)
    }

    pub fn phi(&self, t: f64) -> f64 {
        let u = self.u(t);
        let s = u * u * (3.0 - 2.0 * u);
        if self.exponent == 1.0 {
            s
        } else {
            s.powf(self.exponent)
        }
    }

    /// `d phi / dt`; zero outside the ramp and at both of its ends.
    pub fn dphi(&self, t: f64) -> f64 {
        let u = self.u(t);
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let s = u * u * (3.0 - 2.0 * u);
        let ds = 6.0 * u * (1.0 - u);
        let outer = if self.exponent == 1.0 {
            1.0
        } else {
            self.exponent * s.powf(self.exponent - 1.0)
        };
        -outer * ds / self.ramp_len()
    }

    /// `t^{1-rho} phi'(t)`.
    pub fn delta_rho(&self, t: f64, rho: f64) -> f64 {
        t.powf(1.0 - rho) * self.dphi(t)
    }

    /// `|delta_rho phi| / phi^{1/m}`, zero where `phi' = 0`. Factored so the
    /// limit at `T` is exact when the exponent makes it finite.
    pub fn quotient(&self, t: f64, rho: f64, m: f64) -> f64 {
        let u = self.u(t);
        if u >= 1.0 {
            return 0.0;
        }
        // S^{lambda - 1 - lambda/m} * 6u(1-u) with S = u^2 (3 - 2u)
        let e = self.exponent * (1.0 - 1.0 / m) - 1.0;
        let core = u.powf(2.0 * e + 1.0) * (3.0 - 2.0 * u).powf(e) * 6.0 * (1.0 - u);
        t.powf(1.0 - rho) * self.exponent * core / self.ramp_len()
    }
}

/// Function audited against the differential inequality.
#[derive(Debug, Clone, PartialEq)]
pub enum Candidate {
    /// Closed-form power combination; derivatives and integrals are exact.
    Power(PowerSum),
    /// Numerical solution; operators are applied on the audit mesh.
    Grid(WeightedGridFunction),
}

impl From<PowerSum> for Candidate {
    fn from(p: PowerSum) -> Self {
        Candidate::Power(p)
    }
}

impl From<ScaledPower> for Candidate {
    fn from(p: ScaledPower) -> Self {
        Candidate::Power(p.into())
    }
}

impl From<WeightedGridFunction> for Candidate {
    fn from(g: WeightedGridFunction) -> Self {
        Candidate::Grid(g)
    }
}

impl Candidate {
    fn profile(&self) -> &dyn Profile {
        match self {
            Candidate::Power(p) => p,
            Candidate::Grid(g) => g,
        }
    }

    /// `(weight, values)` of the generalized derivative on `mesh`.
    fn derivative(&self, params: &ProblemParams, mesh: &Mesh) -> Result<(f64, Vec<f64>)> {
        match self {
            Candidate::Power(p) => {
                let d = p.map(|q| power_hilfer_closed(q, params))?;
                Ok((d.weight_exp(), sample_values(&d, mesh)?))
            }
            Candidate::Grid(g) => {
                let d = generalized_derivative(g, params, mesh, None)?;
                Ok((d.weight_exp(), d.into_values()))
            }
        }
    }

    /// `(weight, values)` of `I^{1-gamma}` on `mesh`.
    fn initial_integral(&self, params: &ProblemParams, mesh: &Mesh) -> Result<(f64, Vec<f64>)> {
        let order = params.weight();
        match self {
            Candidate::Power(p) => {
                let ix = p.map(|q| power_integral_closed(q, order))?;
                Ok((ix.weight_exp(), sample_values(&ix, mesh)?))
            }
            Candidate::Grid(g) if order == 0.0 => Ok((g.weight_exp(), sample_values(g, mesh)?)),
            Candidate::Grid(g) => {
                let ix = left_integral(g, order, mesh)?;
                Ok((ix.weight_exp(), ix.into_values()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub theta: f64,
    /// `int phi D x dt`.
    pub weak_lhs: f64,
    /// `int z^mu |x|^m phi dt`.
    pub weak_rhs: f64,
    /// Pivot after integration by parts, differentiating the right integral
    /// of the cutoff numerically.
    pub pivot_numeric: f64,
    /// Same pivot with the derivative moved inside the right integral.
    pub pivot_inner: f64,
    pub constant: f64,
    pub vanishing_bound: f64,
    /// `(int z^mu |x|^m psi)^{1/m}` and
    /// `(int |I_{T-} psi'|^{m'} (z^mu psi)^{-m'/m})^{1/m'}`: the two factors
    /// of the Hölder split.
    pub holder_brackets: (f64, f64),
    pub young_ok: bool,
    pub directions_ok: bool,
}

/// `a >= b` up to the audit slack.
fn at_least(a: f64, b: f64) -> bool {
    a >= b - AUDIT_TOL * a.abs().max(b.abs())
}

/// Normalized constant: `max(1, theta^{mu/m})^{m'} int_theta^1
/// ((I_{1-}^{1-alpha} Q)(s))^{m'} ds` with `Q = |phi_1'| / phi_1^{1/m}` for
/// the cutoff rescaled to `T = 1`.
pub fn bound_constant(params: &ProblemParams, tf: &TestFunction, n: usize, grading: f64) -> Result<f64> {
    let m = params.m;
    let mc = params.m_conj();
    if tf.exponent * (1.0 - 1.0 / m) < 0.5 {
        return Err(Error::Integrability(format!(
            "cutoff exponent {} leaves |phi'|/phi^(1/m) unbounded; need at least {}",
            tf.exponent,
            TestFunction::bounded_quotient_exponent(m)
        )));
    }
    let unit = TestFunction { t_end: 1.0, a: 0.0, ..*tf };
    let mesh = Mesh::new(tf.theta, 1.0, 1.0, n, grading, Grading::Right)?;
    let q: Vec<f64> = mesh.t().iter().map(|&s| unit.quotient(s, 1.0, m)).collect();
    let iq = right_integral_values(mesh.z(), &q, 1.0 - params.alpha);
    let pw: Vec<f64> = iq.iter().map(|v| v.abs().powf(mc)).collect();
    let integral = integrate_weighted(mesh.z(), 0.0, &pw)?;
    Ok(tf.theta.powf(params.mu / m).max(1.0).powf(mc) * integral)
}

/// `C z(theta T)^{-mu m'/m}` for `mu >= 0`, `C z(T)^{-m' - mu m'/m}` below.
pub fn vanishing_bound(params: &ProblemParams, tf: &TestFunction, c: f64) -> f64 {
    let (mu, m, mc) = (params.mu, params.m, params.m_conj());
    if mu >= 0.0 {
        c * params.z(tf.theta * tf.t_end).powf(-mu * mc / m)
    } else {
        c * params.z(tf.t_end).powf(-mc - mu * mc / m)
    }
}

pub fn audit_inequality_chain(
    x: &Candidate,
    params: &ProblemParams,
    tf: &TestFunction,
    mesh: &Mesh,
) -> Result<AuditReport> {
    params.validate()?;
    let m_star = (1.0 + params.mu) / (1.0 - params.alpha);
    if params.m >= m_star {
        return Err(Error::Integrability(format!(
            "m = {} >= {m_star}: the nonlinear term need not be integrable",
            params.m
        )));
    }
    if (mesh.a() - params.a).abs() > 1e-12 * params.a
        || (mesh.b() - tf.t_end).abs() > 1e-9 * tf.t_end
        || (mesh.rho() - params.rho).abs() > 0.0
    {
        return Err(Error::Geometry(format!(
            "mesh [{}, {}] does not match [a, T] = [{}, {}]",
            mesh.a(),
            mesh.b(),
            params.a,
            tf.t_end
        )));
    }
    let (m, mu, rho) = (params.m, params.mu, params.rho);
    let z = mesh.z();
    let t = mesh.t();
    let psi: Vec<f64> = t.iter().map(|&s| tf.phi(s) * s.powf(1.0 - rho)).collect();
    // d psi / dz = t^{1-rho} d/dt (phi t^{1-rho})
    let dpsi: Vec<f64> = t
        .iter()
        .map(|&s| {
            let j = s.powf(1.0 - rho);
            j * (tf.dphi(s) * j + tf.phi(s) * (1.0 - rho) * s.powf(-rho))
        })
        .collect();

    let profile = x.profile();
    let wx = profile.weight_exp();
    let vx = sample_values(profile, mesh)?;

    let (wd, dv) = x.derivative(params, mesh)?;
    let prod: Vec<f64> = dv.iter().zip(&psi).map(|(a, b)| a * b).collect();
    let lhs = integrate_weighted(z, wd, &prod)?;

    let wr = m * wx - mu;
    let nonlin: Vec<f64> = vx.iter().zip(&psi).map(|(v, p)| v.abs().powf(m) * p).collect();
    let rhs = integrate_weighted(z, wr, &nonlin)?;

    let (wi, iv) = x.initial_integral(params, mesh)?;
    let kappa = params.beta * (1.0 - params.alpha);
    let (rpsi, rdpsi) = if kappa == 0.0 {
        (psi.clone(), dpsi.clone())
    } else {
        (right_integral_values(z, &psi, kappa), right_integral_values(z, &dpsi, kappa))
    };
    let d_rpsi = nodal_derivative(z, &rpsi);
    let pair = |g: &[f64]| -> Vec<f64> { iv.iter().zip(g).map(|(a, b)| a * b).collect() };
    let l7 = -integrate_weighted(z, wi, &pair(&d_rpsi))?;
    let l9 = -integrate_weighted(z, wi, &pair(&rdpsi))?;

    // Hölder factors and pointwise Young checks on the same split
    let mc = params.m_conj();
    let mut young_ok = true;
    let mut dual = vec![0.0; z.len()];
    for j in 1..z.len() {
        if psi[j] <= 0.0 {
            continue;
        }
        let scale = (z[j].powf(mu) * psi[j]).powf(1.0 / m);
        let left = scale * (vx[j] * z[j].powf(-wx)).abs();
        let right = rdpsi[j].abs() / scale;
        dual[j] = right.powf(mc);
        young_ok &= young_split(left, right, m).1;
    }
    let holder = (rhs.max(0.0).powf(1.0 / m), integrate_weighted(z, 0.0, &dual)?.powf(1.0 / mc));

    let c = bound_constant(params, tf, mesh.n(), mesh.grading())?;
    let bound = vanishing_bound(params, tf, c);
    let directions_ok = at_least(lhs, rhs) && at_least(l7, rhs) && at_least(bound, rhs);
    Ok(AuditReport {
        t_end: tf.t_end,
        theta: tf.theta,
        weak_lhs: lhs,
        weak_rhs: rhs,
        pivot_numeric: l7,
        pivot_inner: l9,
        constant: c,
        vanishing_bound: bound,
        holder_brackets: holder,
        young_ok,
        directions_ok,
    })
}

/// Young's inequality `phi eta <= phi^m / m + eta^{m'} / m'`; returns the
/// right-hand side and whether it holds.
pub fn young_split(phi_val: f64, eta: f64, m: f64) -> (f64, bool) {
    let mc = m / (m - 1.0);
    let bound = phi_val.powf(m) / m + eta.powf(mc) / mc;
    (bound, phi_val * eta <= bound + 1e-14)
}

/// Mesh and cutoff settings shared by every horizon of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSettings {
    pub theta: f64,
    pub lambda_tf: f64,
    pub n: usize,
    pub grading: f64,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            theta: 0.5,
            lambda_tf: 1.0,
            n: 2048,
            grading: 3.0,
        }
    }
}

impl AuditSettings {
    pub fn mesh(&self, params: &ProblemParams, t_end: f64) -> Result<Mesh> {
        let n = self.n + self.n % 2;
        Mesh::new(params.a, t_end, params.rho, n, self.grading, Grading::Both)
    }

    pub fn test_function(&self, params: &ProblemParams, t_end: f64) -> Result<TestFunction> {
        TestFunction::new(self.theta, t_end, params.a, self.lambda_tf)
    }
}

/// Full audit at every horizon; horizons must be strictly increasing.
pub fn audit_trace(
    params: &ProblemParams,
    horizons: &[f64],
    x: &Candidate,
    settings: &AuditSettings,
) -> Result<Vec<AuditReport>> {
    params.validate()?;
    if params.mu <= -params.alpha {
        return Err(Error::Domain(format!(
            "mu = {} must exceed -alpha = {}",
            params.mu, -params.alpha
        )));
    }
    if horizons.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Geometry("horizons must be strictly increasing".into()));
    }
    horizons
        .par_iter()
        .map(|&t_end| {
            let tf = settings.test_function(params, t_end)?;
            let mesh = settings.mesh(params, t_end)?;
            audit_inequality_chain(x, params, &tf, &mesh)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub weak_rhs: f64,
    pub vanishing_bound: f64,
}

pub fn vanishing_bound_trace(
    params: &ProblemParams,
    horizons: &[f64],
    x: &Candidate,
    settings: &AuditSettings,
) -> Result<Vec<TraceRow>> {
    Ok(audit_trace(params, horizons, x, settings)?
        .into_iter()
        .map(|r| TraceRow {
            t_end: r.t_end,
            weak_rhs: r.weak_rhs,
            vanishing_bound: r.vanishing_bound,
        })
        .collect())
}

/// `eps (z^{gamma-1} + 1)` with `eps` small enough that
/// `D^{alpha,beta} x >= z^mu |x|^m` holds with a factor-2 margin on
/// `(0, z_max]`. Its initial value is `eps Gamma(gamma) > 0`.
pub fn supersolution(params: &ProblemParams, z_max: f64) -> Result<PowerSum> {
    let (alpha, mu, m) = (params.alpha, params.mu, params.m);
    let gamma = params.gamma();
    if gamma >= 1.0 {
        return Err(Error::Domain("needs gamma < 1 (beta < 1)".into()));
    }
    // near the anchor: D x ~ z^{-alpha}, nonlinearity ~ z^{mu + m(gamma-1)}
    if mu + m * (gamma - 1.0) < -alpha {
        return Err(Error::Domain(format!(
            "nonlinearity dominates the derivative at the initial point (m = {m})"
        )));
    }
    let slope = recip_gamma(1.0 - alpha);
    let probes: Vec<f64> = (0..=4000)
        .map(|k| z_max * 10f64.powf(-12.0 * (1.0 - k as f64 / 4000.0)))
        .collect();
    let holds = |eps: f64| {
        probes.iter().all(|&z| {
            let x = eps * (z.powf(gamma - 1.0) + 1.0);
            eps * slope * z.powf(-alpha) >= 2.0 * z.powf(mu) * x.powf(m)
        })
    };
    let mut eps = 1.0;
    while !holds(eps) {
        eps *= 0.5;
        if eps < 1e-200 {
            return Err(Error::Domain("no admissible scale found".into()));
        }
    }
    Ok(PowerSum::new(vec![
        ScaledPower::new(eps, gamma - 1.0, params.a, params.rho),
        ScaledPower::new(eps, 0.0, params.a, params.rho),
    ]))
}

/// `lim_{t -> a+} I^{1-gamma} x` for a power combination.
pub fn initial_value(x: &PowerSum, params: &ProblemParams) -> Result<f64> {
    let gamma = params.gamma();
    let mut total = 0.0;
    for p in &x.terms {
        if (p.exponent - (gamma - 1.0)).abs() <= 1e-12 {
            total += p.coeff * gamma_fn(gamma)?;
        } else if p.exponent < gamma - 1.0 && p.coeff != 0.0 {
            return Err(Error::Domain("term too singular for the weighted space".into()));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(mu: f64, m: f64) -> ProblemParams {
        ProblemParams { alpha: 0.5, beta: 0.5, mu, m, ..Default::default() }
    }

    #[test]
    fn test_function_shape() {
        let tf = build_test_function(0.5, 10.0, 1.0).unwrap();
        assert_eq!(tf.phi(1.0), 1.0);
        assert_eq!(tf.phi(10.0), 0.0);
        assert!((tf.phi(7.5) - 0.5).abs() < 1e-15);
        assert!(tf.dphi(7.5) < 0.0);
        assert_eq!(tf.dphi(5.0), 0.0);
        assert_eq!(tf.dphi(10.0), 0.0);
        assert!(matches!(build_test_function(0.5, 2.0, 1.0), Err(Error::Geometry(_))));
        assert!(matches!(build_test_function(0.6, 20.0, 1.0), Err(Error::Geometry(_))));
    }

    #[test]
    fn young_examples() {
        assert_eq!(young_split(2.0, 3.0, 2.0), (6.5, true));
        assert!(young_split(0.0, 5.0, 3.0).1);
        // equality exactly when phi^m = eta^{m'}
        for m in [2.0, 3.0, 1.5] {
            let x = 1.7_f64;
            let phi = x.powf(1.0 / (m - 1.0));
            let (bound, ok) = young_split(phi, x, m);
            assert!(ok && (bound - phi * x).abs() < 1e-12 * bound, "{m}");
        }
    }

    #[test]
    fn zero_candidate_is_degenerate_but_consistent() {
        let p = scenario(0.5, 2.0).with_x_a(0.0);
        let zero = Candidate::from(ScaledPower::new(0.0, 0.0, 1.0, 1.0));
        let s = AuditSettings { n: 256, ..Default::default() };
        let r = audit_trace(&p, &[10.0], &zero, &s).unwrap()[0];
        assert_eq!((r.weak_lhs, r.weak_rhs), (0.0, 0.0));
        assert!(r.pivot_numeric == 0.0 && r.directions_ok);
    }

    #[test]
    fn supersolution_is_positive_and_audits_cleanly() {
        let p = scenario(0.5, 2.0);
        let x = supersolution(&p, 999.0).unwrap();
        assert!(initial_value(&x, &p).unwrap() > 0.0);
        let s = AuditSettings { n: 1024, ..Default::default() };
        let r = audit_trace(&p, &[10.0, 100.0], &x.into(), &s).unwrap();
        for row in &r {
            assert!(row.directions_ok && row.young_ok, "{row:?}");
            assert!((row.pivot_numeric - row.pivot_inner).abs() <= 1e-4 * row.pivot_inner.abs(), "{row:?}");
        }
        assert!(r[1].vanishing_bound < r[0].vanishing_bound);
    }

    #[test]
    fn above_threshold_is_rejected() {
        let p = scenario(0.0, 2.5);
        let tf = build_test_function(0.5, 10.0, 1.0).unwrap();
        let mesh = AuditSettings::default().mesh(&p, 10.0).unwrap();
        let x = Candidate::from(ScaledPower::new(1.0, 0.0, 1.0, 1.0));
        assert!(matches!(audit_inequality_chain(&x, &p, &tf, &mesh), Err(Error::Integrability(_))));
    }
}
