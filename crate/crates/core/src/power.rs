//! Symbolic power functions `c * z^nu`, `z = (t^rho - a^rho) / rho`, and the
//! closed-form action of the fractional operators on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::special::{gamma_fn, recip_gamma};

/// Exponents closer than this are treated as equal in the degenerate cases
/// (`xi == gamma`, critical weights).
pub const EXPONENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledPower {
    pub coeff: f64,
    pub exponent: f64,
    pub anchor: f64,
    pub rho: f64,
}

impl ScaledPower {
    pub fn new(coeff: f64, exponent: f64, anchor: f64, rho: f64) -> Self {
        Self {
            coeff,
            exponent,
            anchor,
            rho,
        }
    }

    /// `(t^rho - a^rho) / rho`.
    pub fn z(&self, t: f64) -> f64 {
        (t.powf(self.rho) - self.anchor.powf(self.rho)) / self.rho
    }

    /// Value as a function of `z`. At `z == 0` a negative exponent yields
    /// an infinity carrying the sign of the coefficient.
    pub fn eval_z(&self, z: f64) -> f64 {
        if self.coeff == 0.0 {
            return 0.0;
        }
        if z <= 0.0 {
            return if self.exponent > 0.0 {
                0.0
            } else if self.exponent == 0.0 {
                self.coeff
            } else {
                self.coeff.signum() * f64::INFINITY
            };
        }
        self.coeff * z.powf(self.exponent)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_z(self.z(t))
    }

    /// Derivative with respect to `z`, itself a scaled power.
    pub fn derivative(&self) -> ScaledPower {
        ScaledPower {
            coeff: self.coeff * self.exponent,
            exponent: self.exponent - 1.0,
            ..*self
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff == 0.0
    }

    fn scaled(&self, factor: f64, exponent: f64) -> ScaledPower {
        ScaledPower {
            coeff: self.coeff * factor,
            exponent,
            ..*self
        }
    }
}

/// A finite sum of scaled powers sharing anchor and `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSum {
    pub terms: Vec<ScaledPower>,
}

impl PowerSum {
    pub fn new(terms: Vec<ScaledPower>) -> Self {
        Self { terms }
    }

    pub fn eval_z(&self, z: f64) -> f64 {
        self.terms.iter().map(|p| p.eval_z(z)).sum()
    }

    /// Most singular exponent among the non-zero terms.
    pub fn leading_exponent(&self) -> f64 {
        self.terms
            .iter()
            .filter(|p| !p.is_zero())
            .map(|p| p.exponent)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(&ScaledPower) -> Result<ScaledPower>) -> Result<PowerSum> {
        Ok(PowerSum {
            terms: self.terms.iter().map(f).collect::<Result<_>>()?,
        })
    }
}

impl From<ScaledPower> for PowerSum {
    fn from(p: ScaledPower) -> Self {
        PowerSum { terms: vec![p] }
    }
}

/// Left fractional integral of order `alpha` of `c z^{sigma-1}`:
/// multiplies the coefficient by `Gamma(sigma) / Gamma(sigma + alpha)`.
pub fn power_integral_closed(p: &ScaledPower, alpha: f64) -> Result<ScaledPower> {
    let sigma = p.exponent + 1.0;
    if sigma <= 0.0 {
        return Err(Error::Domain(format!(
            "integral of z^{} diverges at the anchor (sigma = {sigma} <= 0)",
            p.exponent
        )));
    }
    if alpha < 0.0 {
        return Err(Error::Domain(format!("integral order {alpha} < 0")));
    }
    if alpha == 0.0 {
        return Ok(*p);
    }
    let factor = gamma_fn(sigma)? * recip_gamma(sigma + alpha);
    Ok(p.scaled(factor, p.exponent + alpha))
}

/// Left Riemann-Liouville-type derivative of order `order in (0,1)` of
/// `c z^{sigma-1}`: coefficient times `Gamma(sigma) / Gamma(sigma - order)`.
/// The `sigma == order` case is the kernel function and maps to zero.
pub fn power_derivative_closed(p: &ScaledPower, order: f64) -> Result<ScaledPower> {
    let sigma = p.exponent + 1.0;
    if sigma <= 0.0 {
        return Err(Error::Domain(format!(
            "derivative of z^{} undefined (sigma = {sigma} <= 0)",
            p.exponent
        )));
    }
    let factor = gamma_fn(sigma)? * recip_gamma(sigma - order);
    Ok(p.scaled(factor, p.exponent - order))
}

/// Generalized derivative `D^{alpha,beta}` of `c z^{xi-1}`.
///
/// Certified for `xi >= gamma`; at `xi == gamma` the inner integral is a
/// constant and the result is the zero function.
pub fn power_hilfer_closed(p: &ScaledPower, params: &ProblemParams) -> Result<ScaledPower> {
    let xi = p.exponent + 1.0;
    let gamma = params.gamma();
    let out_exp = xi - params.alpha - 1.0;
    if xi <= 0.0 {
        return Err(Error::Domain(format!("xi = {xi} must be positive")));
    }
    if (xi - gamma).abs() <= EXPONENT_TOL {
        return Ok(p.scaled(0.0, out_exp));
    }
    if xi < gamma {
        return Err(Error::Domain(format!(
            "xi = {xi} below gamma = {gamma}: outer integral of z^{} diverges",
            xi - gamma - 1.0
        )));
    }
    let factor = gamma_fn(xi)? * recip_gamma(xi - params.alpha);
    Ok(p.scaled(factor, out_exp))
}

/// Global-existence threshold `m* = (1 + mu) / (1 - alpha)`; requires `mu > -alpha`.
pub fn blowup_threshold(params: &ProblemParams) -> Result<f64> {
    if params.mu <= -params.alpha {
        return Err(Error::Domain(format!(
            "mu = {} must exceed -alpha = {}",
            params.mu, -params.alpha
        )));
    }
    Ok((1.0 + params.mu) / (1.0 - params.alpha))
}

/// Type parameter for which the power solution has exactly the singular
/// order of the solution space, `nu = gamma - 1`; the power solution then
/// carries a non-zero initial value.
pub fn matched_beta(alpha: f64, mu: f64, m: f64) -> f64 {
    1.0 - (alpha + mu) / ((m - 1.0) * (1.0 - alpha))
}

/// Power-law solution of `D^{alpha,beta} g = lambda z^mu g^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub power: ScaledPower,
    /// `lim_{t -> a+} I^{1-gamma} y`; `None` when `y` is too singular to
    /// belong to the weighted space.
    pub x_a: Option<f64>,
}

pub fn exact_solution(params: &ProblemParams) -> Result<ExactSolution> {
    let (alpha, mu, m) = (params.alpha, params.mu, params.m);
    let m_star = (1.0 + mu) / (1.0 - alpha);
    if m <= m_star {
        return Err(Error::Threshold { m, m_star });
    }
    let nu = (alpha + mu) / (1.0 - m);
    let base = gamma_fn(nu + 1.0)? * recip_gamma(nu - alpha + 1.0) / params.lambda;
    if recip_gamma(nu - alpha + 1.0) == 0.0 {
        return Err(Error::Pole(nu - alpha + 1.0));
    }
    if base <= 0.0 {
        return Err(Error::Domain(format!(
            "coefficient base {base} is not positive"
        )));
    }
    let coeff = base.powf(1.0 / (m - 1.0));
    let power = ScaledPower::new(coeff, nu, params.a, params.rho);
    let excess = nu + 1.0 - params.gamma();
    let x_a = if excess.abs() <= EXPONENT_TOL {
        Some(coeff * gamma_fn(params.gamma())?)
    } else if excess > 0.0 {
        Some(0.0)
    } else {
        None
    };
    Ok(ExactSolution { power, x_a })
}
