//! Numerical Katugampola integrals and derivatives on graded meshes.
//!
//! Inputs are read through [`Profile`] as `x(z) = z^{-w} v(z)`. The leading
//! term `v(0) z^{-w}` is mapped in closed form; the remainder
//! `z^{-w} (v - v(0))` is product-integrated against the exact Abel kernel
//! with a piecewise-linear interpolant in `z`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    integrate_weighted, nodal_derivative, sample_values, Profile, WeightedGridFunction,
};
use crate::mesh::Mesh;
use crate::params::ProblemParams;
use crate::power::EXPONENT_TOL;
use crate::quadrature::{left_sum, right_sum, KernelMoments};
use crate::special::{gamma_fn, recip_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

fn check_order(alpha: f64, what: &str) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("{what} order {alpha} must be positive")));
    }
    Ok(())
}

/// `z^e`, with `0^0 = 1`.
#[inline]
fn zpow(z: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        z.powf(e)
    }
}

fn snap(e: f64) -> f64 {
    if e.abs() <= EXPONENT_TOL {
        0.0
    } else {
        e
    }
}

/// Left integral of order `kappa >= 0` of `z^{-w} v` given node values,
/// returned with weight `w - kappa`.
pub(crate) fn left_integral_values(z: &[f64], w: f64, v: &[f64], kappa: f64) -> Result<Vec<f64>> {
    let v0 = v[0];
    if w >= 1.0 && v0 != 0.0 {
        return Err(Error::Integrability(format!(
            "leading term z^-{w} is not integrable at the anchor"
        )));
    }
    let w_out = w - kappa;
    // remainder z^{-w} (v - v0), zero at the anchor
    let g: Vec<f64> = z
        .iter()
        .zip(v)
        .map(|(&zk, &vk)| if zk == 0.0 { 0.0 } else { zpow(zk, -w) * (vk - v0) })
        .collect();
    if kappa == 0.0 {
        return Ok(v.to_vec());
    }
    let lead = if v0 == 0.0 {
        0.0
    } else {
        v0 * gamma_fn(1.0 - w)? * recip_gamma(1.0 - w + kappa)
    };
    let km = KernelMoments::new(kappa);
    let norm = recip_gamma(kappa);
    let out = (0..z.len())
        .into_par_iter()
        .map(|j| {
            if j == 0 {
                return lead;
            }
            lead + zpow(z[j], w_out) * left_sum(z, &g, j, &km) * norm
        })
        .collect();
    Ok(out)
}

/// `rho I_{a+}^alpha f` at the mesh nodes.
pub fn left_integral(f: &dyn Profile, alpha: f64, mesh: &Mesh) -> Result<WeightedGridFunction> {
    check_order(alpha, "integral")?;
    let w = f.weight_exp();
    let v = sample_values(f, mesh)?;
    let out = left_integral_values(mesh.z(), w, &v, alpha)?;
    WeightedGridFunction::new(mesh.clone(), snap(w - alpha), out)
}

/// `rho I_{b-}^alpha f` at the mesh nodes, with weight 0. An input singular
/// at the anchor (`w > 0`) is allowed when `alpha > w`; only the value at the
/// anchor feels the singularity and it is split off in closed form there.
pub fn right_integral(f: &dyn Profile, alpha: f64, mesh: &Mesh) -> Result<WeightedGridFunction> {
    check_order(alpha, "integral")?;
    let w = f.weight_exp();
    if w > 0.0 && alpha <= w {
        return Err(Error::Integrability(format!(
            "right integral of order {alpha} at the anchor diverges for weight {w}"
        )));
    }
    let v = sample_values(f, mesh)?;
    let z = mesh.z();
    let mut x: Vec<f64> = z.iter().zip(&v).map(|(&zk, &vk)| crate::grid::unweight(zk, w, vk)).collect();
    if w <= 0.0 {
        return WeightedGridFunction::new(mesh.clone(), 0.0, right_integral_values(z, &x, alpha));
    }
    x[0] = 0.0;
    let mut out = right_integral_values(z, &x, alpha);
    let v0 = v[0];
    let rem: Vec<f64> = z
        .iter()
        .zip(&v)
        .map(|(&zk, &vk)| if zk == 0.0 { 0.0 } else { zk.powf(-w) * (vk - v0) })
        .collect();
    let km = KernelMoments::new(alpha);
    let span = mesh.span();
    out[0] = v0 * span.powf(alpha - w) * gamma_fn(1.0 - w)? * recip_gamma(1.0 + alpha - w)
        + right_sum(z, &rem, 0, &km) * recip_gamma(alpha);
    WeightedGridFunction::new(mesh.clone(), 0.0, out)
}

pub fn right_integral_values(z: &[f64], x: &[f64], alpha: f64) -> Vec<f64> {
    let km = KernelMoments::new(alpha);
    let norm = recip_gamma(alpha);
    (0..z.len())
        .into_par_iter()
        .map(|j| right_sum(z, x, j, &km) * norm)
        .collect()
}

/// `delta_rho f (t) = t^{1-rho} f'(t)`, i.e. the derivative with respect to
/// `z = (t^rho - a^rho) / rho`. Uses `df` when supplied, a central difference
/// with step `max(|t|, 1) eps^{1/3}` otherwise.
pub fn delta_rho(
    f: &dyn Fn(f64) -> f64,
    df: Option<&dyn Fn(f64) -> f64>,
    t: f64,
    rho: f64,
) -> Result<f64> {
    let slope = match df {
        Some(d) => d(t),
        None => {
            let h = t.abs().max(1.0) * f64::EPSILON.cbrt();
            (f(t + h) - f(t - h)) / (2.0 * h)
        }
    };
    let out = t.powf(1.0 - rho) * slope;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NonFinite { t })
    }
}

/// Left derivative of order `order in (0, 1]` from node values: the leading
/// term in closed form, the remainder through
/// `D^order h = h(a) z^-order / Gamma(1-order) + I^{1-order} h'`.
pub(crate) fn left_derivative_values(
    z: &[f64],
    w: f64,
    v: &[f64],
    dv: &[f64],
    order: f64,
) -> Result<Vec<f64>> {
    if w >= 1.0 {
        return Err(Error::Integrability(format!("weight {w} >= 1")));
    }
    let v0 = v[0];
    let lead = if v0 == 0.0 {
        0.0
    } else {
        v0 * gamma_fn(1.0 - w)? * recip_gamma(1.0 - w - order)
    };
    // z^w d/dz [z^{-w} (v - v0)]
    let rem: Vec<f64> = (0..z.len())
        .map(|j| {
            if j == 0 {
                (1.0 - w) * dv[0]
            } else {
                dv[j] - w * (v[j] - v0) / z[j]
            }
        })
        .collect();
    let inner = left_integral_values(z, w, &rem, 1.0 - order)?;
    // inner carries weight w - (1 - order); bring it to w + order
    let w_inner = w - (1.0 - order);
    Ok((0..z.len())
        .map(|j| {
            if j == 0 {
                lead
            } else {
                lead + inner[j] * zpow(z[j], order + w - w_inner)
            }
        })
        .collect())
}

fn derivative_samples(f: &dyn Profile, f_prime: Option<&dyn Fn(f64) -> f64>, mesh: &Mesh, v: &[f64]) -> Result<Vec<f64>> {
    let z = mesh.z();
    if let Some(d) = f_prime {
        return z.iter().zip(mesh.t()).map(|(&zj, &t)| {
            let y = d(zj);
            if y.is_finite() { Ok(y) } else { Err(Error::NonFinite { t }) }
        }).collect();
    }
    if f.weighted_dz(z[0]).is_some() {
        return z
            .iter()
            .zip(mesh.t())
            .map(|(&zj, &t)| match f.weighted_dz(zj) {
                Some(y) if y.is_finite() => Ok(y),
                _ => Err(Error::NonFinite { t }),
            })
            .collect();
    }
    Ok(nodal_derivative(z, v))
}

/// `rho D_{a+}^alpha f`, returned with weight `w + alpha`.
///
/// `f_prime`, when given, is `dv/dz` for the weighted values `v` of `f`
/// (for plain samples that is `delta_rho f`); otherwise the profile's own
/// derivative or a finite difference of the samples is used.
pub fn left_derivative(
    f: &dyn Profile,
    alpha: f64,
    mesh: &Mesh,
    f_prime: Option<&dyn Fn(f64) -> f64>,
) -> Result<WeightedGridFunction> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("derivative order {alpha} not in (0, 1]")));
    }
    let w = f.weight_exp();
    let v = sample_values(f, mesh).map_err(|e| match e {
        Error::NonFinite { t } if t == mesh.a() => Error::SingularAtStart,
        e => e,
    })?;
    let dv = derivative_samples(f, f_prime, mesh, &v)?;
    let out = left_derivative_values(mesh.z(), w, &v, &dv, alpha)?;
    WeightedGridFunction::new(mesh.clone(), snap(w + alpha), out)
}

/// `rho D_{a+}^{alpha,beta} f = I^{beta(1-alpha)} D^gamma f`.
pub fn generalized_derivative(
    f: &dyn Profile,
    params: &ProblemParams,
    mesh: &Mesh,
    f_prime: Option<&dyn Fn(f64) -> f64>,
) -> Result<WeightedGridFunction> {
    let inner = left_derivative(f, params.gamma(), mesh, f_prime)?;
    let outer = params.beta * (1.0 - params.alpha);
    if outer == 0.0 {
        return Ok(inner);
    }
    let w = inner.weight_exp();
    let out = left_integral_values(mesh.z(), w, inner.values(), outer)?;
    WeightedGridFunction::new(mesh.clone(), snap(w - outer), out)
}

/// Max over the nodes of `|I^alpha I^beta2 f - I^{alpha+beta2} f|` in
/// weighted values.
pub fn semigroup_residual(f: &dyn Profile, alpha: f64, beta2: f64, mesh: &Mesh) -> Result<f64> {
    let inner = left_integral(f, beta2, mesh)?;
    let nested = left_integral(&inner, alpha, mesh)?;
    let direct = left_integral(f, alpha + beta2, mesh)?;
    Ok(nested
        .values()
        .iter()
        .zip(direct.values())
        .fold(0.0, |m, (p, q)| m.max((p - q).abs())))
}

/// Both sides of `int t^{rho-1} g I_{a+}^alpha h dt = int t^{rho-1} h I_{b-}^alpha g dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ByPartsSides {
    pub lhs: f64,
    pub rhs: f64,
}

impl ByPartsSides {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

pub fn int_by_parts_sides(
    g: &dyn Profile,
    h: &dyn Profile,
    alpha: f64,
    mesh: &Mesh,
) -> Result<ByPartsSides> {
    let z = mesh.z();
    let ih = left_integral(h, alpha, mesh)?;
    let gv = sample_values(g, mesh)?;
    // g * I h with weight w_g + w_ih
    let wl = g.weight_exp() + ih.weight_exp();
    let prod_l: Vec<f64> = gv.iter().zip(ih.values()).map(|(a, b)| a * b).collect();
    let lhs = integrate_weighted(z, wl, &prod_l)?;

    let ig = right_integral(g, alpha, mesh)?;
    let hv = sample_values(h, mesh)?;
    let prod_r: Vec<f64> = hv.iter().zip(ig.values()).map(|(a, b)| a * b).collect();
    let rhs = integrate_weighted(z, h.weight_exp(), &prod_r)?;
    Ok(ByPartsSides { lhs, rhs })
}

pub fn int_by_parts_residual(g: &dyn Profile, h: &dyn Profile, alpha: f64, mesh: &Mesh) -> Result<f64> {
    Ok(int_by_parts_sides(g, h, alpha, mesh)?.residual())
}

/// Endpoint value of a fractional integral together with the decay bound
/// `h_end^{alpha - weight}` it should respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimit {
    pub value: f64,
    /// Value one node in from the endpoint.
    pub adjacent: f64,
    pub bound_rate: f64,
}

/// Value at the anchor (left) or at `b` (right) of `I^alpha f` for `f` of
/// weight order `w < alpha`.
pub fn boundary_limit(f: &dyn Profile, alpha: f64, side: Side, mesh: &Mesh) -> Result<BoundaryLimit> {
    let w = f.weight_exp().max(0.0);
    if alpha <= w {
        return Err(Error::Precondition(format!(
            "order {alpha} must exceed the weight order {w}"
        )));
    }
    let z = mesh.z();
    let n = mesh.n();
    match side {
        Side::Left => {
            let g = left_integral(f, alpha, mesh)?;
            Ok(BoundaryLimit {
                value: g.value_at(0),
                adjacent: g.value_at(1),
                bound_rate: z[1].powf(alpha - w),
            })
        }
        Side::Right => {
            let g = right_integral(f, alpha, mesh)?;
            Ok(BoundaryLimit {
                value: g.value_at(n),
                adjacent: g.value_at(n - 1),
                bound_rate: (z[n] - z[n - 1]).powf(alpha),
            })
        }
    }
}
