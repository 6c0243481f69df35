use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar parameters of the fractional initial-value problem
/// `D^{alpha,beta} x = lambda * z^mu * |x|^m`, `I^{1-gamma} x (a+) = x_a`,
/// where `z = (t^rho - a^rho) / rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub a: f64,
    pub mu: f64,
    pub m: f64,
    pub lambda: f64,
    pub x_a: f64,
}

impl ProblemParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: f64,
        beta: f64,
        rho: f64,
        a: f64,
        mu: f64,
        m: f64,
        lambda: f64,
        x_a: f64,
    ) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            rho,
            a,
            mu,
            m,
            lambda,
            x_a,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks every field invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("rho", self.rho),
            ("a", self.a),
            ("mu", self.mu),
            ("m", self.m),
            ("lambda", self.lambda),
            ("x_a", self.x_a),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(field, "must be finite"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("{} not in (0, 1)", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::param("beta", format!("{} not in [0, 1]", self.beta)));
        }
        if self.rho <= 0.0 {
            return Err(Error::param("rho", format!("{} must be positive", self.rho)));
        }
        if self.a <= 0.0 {
            return Err(Error::param("a", format!("{} must be positive", self.a)));
        }
        if self.m <= 1.0 {
            return Err(Error::param("m", format!("{} must exceed 1", self.m)));
        }
        if self.lambda <= 0.0 {
            return Err(Error::param("lambda", format!("{} must be positive", self.lambda)));
        }
        Ok(())
    }

    /// Effective singularity order `alpha + beta (1 - alpha)`.
    pub fn gamma(&self) -> f64 {
        self.alpha + self.beta * (1.0 - self.alpha)
    }

    /// Conjugate exponent `m / (m - 1)`.
    pub fn m_conj(&self) -> f64 {
        self.m / (self.m - 1.0)
    }

    /// Weight exponent `1 - gamma` of the solution space.
    pub fn weight(&self) -> f64 {
        (1.0 - self.beta) * (1.0 - self.alpha)
    }

    /// `(t^rho - a^rho) / rho`.
    pub fn z(&self, t: f64) -> f64 {
        (t.powf(self.rho) - self.a.powf(self.rho)) / self.rho
    }

    /// Inverse of [`ProblemParams::z`].
    pub fn t_of_z(&self, z: f64) -> f64 {
        (self.a.powf(self.rho) + self.rho * z).powf(1.0 / self.rho)
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_x_a(mut self, x_a: f64) -> Self {
        self.x_a = x_a;
        self
    }
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            rho: 1.0,
            a: 1.0,
            mu: 0.0,
            m: 3.0,
            lambda: 1.0,
            x_a: 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = ProblemParams::default();
        assert!((p.gamma() - 0.75).abs() < 1e-15);
        assert!((1.0 / p.m + 1.0 / p.m_conj() - 1.0).abs() < 1e-15);
        assert!((p.weight() - (1.0 - p.gamma())).abs() < 1e-15);
        let q = p.with_beta(0.0);
        assert_eq!(q.gamma(), q.alpha);
    }

    #[test]
    fn rejects_bad_fields() {
        let base = ProblemParams::default();
        let cases = [
            (ProblemParams { alpha: 1.5, ..base }, "alpha"),
            (ProblemParams { beta: -0.1, ..base }, "beta"),
            (ProblemParams { rho: 0.0, ..base }, "rho"),
            (ProblemParams { a: 0.0, ..base }, "a"),
            (ProblemParams { m: 1.0, ..base }, "m"),
            (ProblemParams { lambda: -1.0, ..base }, "lambda"),
        ];
        for (p, field) in cases {
            match p.validate() {
                Err(Error::InvalidParam { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected error on {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn z_round_trip() {
        let p = ProblemParams { rho: 2.0, ..Default::default() };
        let t = 1.7;
        assert!((p.t_of_z(p.z(t)) - t).abs() < 1e-14);
        assert_eq!(p.z(p.a), 0.0);
    }
}
