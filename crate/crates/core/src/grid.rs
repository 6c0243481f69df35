//! Functions sampled on a [`Mesh`] in weighted form, and the [`Profile`]
//! abstraction through which operators read their inputs.
//!
//! A function `x` on `(a, b]` is carried as `x(z) = z^{-w} v(z)` where
//! `z = (t^rho - a^rho) / rho`, `w` is the weight exponent and `v` is
//! finite up to and including `z = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::power::{PowerSum, ScaledPower};

/// Weighted description of a function of `z`.
pub trait Profile: Sync {
    /// `w` in `x(z) = z^{-w} v(z)`.
    fn weight_exp(&self) -> f64;
    /// `v(z)`; finite on `[0, Z]`.
    fn weighted(&self, z: f64) -> f64;
    /// `dv/dz` when known in closed form.
    fn weighted_dz(&self, _z: f64) -> Option<f64> {
        None
    }
}

impl Profile for ScaledPower {
    fn weight_exp(&self) -> f64 {
        -self.exponent
    }

    fn weighted(&self, _z: f64) -> f64 {
        self.coeff
    }

    fn weighted_dz(&self, _z: f64) -> Option<f64> {
        Some(0.0)
    }
}

impl Profile for PowerSum {
    fn weight_exp(&self) -> f64 {
        let lead = self.leading_exponent();
        if lead.is_finite() {
            -lead
        } else {
            0.0
        }
    }

    fn weighted(&self, z: f64) -> f64 {
        let w = self.weight_exp();
        self.terms
            .iter()
            .map(|p| ScaledPower { exponent: p.exponent + w, ..*p }.eval_z(z))
            .sum()
    }
}

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A closure-backed profile, parameterized by `z`.
pub struct FnProfile {
    weight: f64,
    v: RealFn,
    dv: Option<RealFn>,
}

impl FnProfile {
    /// Plain samples: `x(z) = f(z)`, bounded at the anchor.
    pub fn plain(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            weight: 0.0,
            v: Box::new(f),
            dv: None,
        }
    }

    /// `x(z) = z^{-w} v(z)`.
    pub fn weighted(w: f64, v: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            weight: w,
            v: Box::new(v),
            dv: None,
        }
    }

    /// Attach the closed-form derivative of the weighted values.
    pub fn with_derivative(mut self, dv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.dv = Some(Box::new(dv));
        self
    }
}

impl Profile for FnProfile {
    fn weight_exp(&self) -> f64 {
        self.weight
    }

    fn weighted(&self, z: f64) -> f64 {
        (self.v)(z)
    }

    fn weighted_dz(&self, z: f64) -> Option<f64> {
        self.dv.as_ref().map(|d| d(z))
    }
}

/// Node values `v_j = z_j^w x(t_j)` on a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGridFunction {
    mesh: Mesh,
    weight_exp: f64,
    values: Vec<f64>,
}

impl WeightedGridFunction {
    pub fn new(mesh: Mesh, weight_exp: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.z().len() {
            return Err(Error::Domain(format!(
                "{} values for a mesh with {} nodes",
                values.len(),
                mesh.z().len()
            )));
        }
        Ok(Self {
            mesh,
            weight_exp,
            values,
        })
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            values: vec![0.0; mesh.z().len()],
            mesh: mesh.clone(),
            weight_exp: 0.0,
        }
    }

    /// Samples `profile` at the mesh nodes, keeping its weight.
    pub fn sample(profile: &dyn Profile, mesh: &Mesh) -> Result<Self> {
        let values = sample_values(profile, mesh)?;
        Ok(Self {
            mesh: mesh.clone(),
            weight_exp: profile.weight_exp(),
            values,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn weight_exp(&self) -> f64 {
        self.weight_exp
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Unweighted value at node `j`; infinite at the anchor when `w > 0`.
    pub fn value_at(&self, j: usize) -> f64 {
        unweight(self.mesh.z()[j], self.weight_exp, self.values[j])
    }

    pub fn unweighted(&self) -> Vec<f64> {
        (0..self.values.len()).map(|j| self.value_at(j)).collect()
    }

    /// Re-express with another weight; fails at the anchor if that would
    /// require an infinite value.
    pub fn reweighted(&self, w: f64) -> Result<Self> {
        let z = self.mesh.z();
        let values = self
            .values
            .iter()
            .zip(z)
            .map(|(&v, &zj)| reweight(zj, self.weight_exp, w, v))
            .collect::<Vec<_>>();
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: self.mesh.t()[j] });
        }
        Self::new(self.mesh.clone(), w, values)
    }

    /// Max norm of the weighted values.
    pub fn weighted_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Monotone piecewise-cubic interpolation of the weighted values at `z`.
    pub fn interpolate(&self, z: f64) -> f64 {
        pchip(self.mesh.z(), &self.values, z)
    }
}

impl Profile for WeightedGridFunction {
    fn weight_exp(&self) -> f64 {
        self.weight_exp
    }

    fn weighted(&self, z: f64) -> f64 {
        self.interpolate(z)
    }
}

pub(crate) fn sample_values(profile: &dyn Profile, mesh: &Mesh) -> Result<Vec<f64>> {
    mesh.z()
        .iter()
        .zip(mesh.t())
        .map(|(&z, &t)| {
            let v = profile.weighted(z);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { t })
            }
        })
        .collect()
}

/// `z^{-w} v`, with the anchor limits `0` (w < 0) and `sign(v) inf` (w > 0).
pub(crate) fn unweight(z: f64, w: f64, v: f64) -> f64 {
    if w == 0.0 {
        v
    } else if z == 0.0 {
        if w < 0.0 || v == 0.0 {
            0.0
        } else {
            v.signum() * f64::INFINITY
        }
    } else {
        v * z.powf(-w)
    }
}

fn reweight(z: f64, from: f64, to: f64, v: f64) -> f64 {
    let e = to - from;
    if e == 0.0 {
        v
    } else if z == 0.0 {
        if e > 0.0 || v == 0.0 {
            0.0
        } else {
            v.signum() * f64::INFINITY
        }
    } else {
        v * z.powf(e)
    }
}

/// Fritsch-Carlson monotone cubic Hermite interpolation; exact at the nodes,
/// constant extrapolation outside.
pub fn pchip(x: &[f64], y: &[f64], at: f64) -> f64 {
    let n = x.len();
    if n == 1 || at <= x[0] {
        return y[0];
    }
    if at >= x[n - 1] {
        return y[n - 1];
    }
    let k = match x.binary_search_by(|p| p.partial_cmp(&at).unwrap()) {
        Ok(k) => return y[k],
        Err(k) => k - 1,
    };
    let slope = |i: usize| (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    let node_slope = |i: usize| -> f64 {
        if i == 0 {
            return slope(0);
        }
        if i == n - 1 {
            return slope(n - 2);
        }
        let (d0, d1) = (slope(i - 1), slope(i));
        if d0 * d1 <= 0.0 {
            return 0.0;
        }
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
        (w1 + w2) / (w1 / d0 + w2 / d1)
    };
    let h = x[k + 1] - x[k];
    let s = (at - x[k]) / h;
    let (m0, m1) = (node_slope(k) * h, node_slope(k + 1) * h);
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y[k]
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * y[k + 1]
        + (s3 - s2) * m1
}

/// `int_0^Z z^{-w} v(z) dz` for `v` piecewise linear on `z`, with exact
/// moments of the weight on every interval. Requires `w < 1`.
pub fn integrate_weighted(z: &[f64], w: f64, v: &[f64]) -> Result<f64> {
    if w >= 1.0 {
        return Err(Error::Integrability(format!(
            "weight exponent {w} >= 1 is not integrable at the anchor"
        )));
    }
    let mut total = 0.0;
    for k in 0..z.len() - 1 {
        let (z0, z1) = (z[k], z[k + 1]);
        let h = z1 - z0;
        if w == 0.0 {
            total += 0.5 * h * (v[k] + v[k + 1]);
            continue;
        }
        // int z^{-w} and int z^{-w} (z - z0) over [z0, z1]
        let p = 1.0 - w;
        let m0 = (z1.powf(p) - z0.powf(p)) / p;
        let m1 = if z0 > 0.0 && h < 0.05 * z0 {
            // z^{-w} is smooth on a short interval far from the anchor
            gauss_legendre_4(z0, z1, |s| s.powf(-w) * (s - z0))
        } else {
            (z1.powf(p + 1.0) - z0.powf(p + 1.0)) / (p + 1.0) - z0 * m0
        };
        total += v[k] * m0 + (v[k + 1] - v[k]) * m1 / h;
    }
    Ok(total)
}

pub(crate) fn gauss_legendre_4(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let mut s = 0.0;
    for i in 0..2 {
        s += W[i] * (f(c - r * X[i]) + f(c + r * X[i]));
    }
    s * r
}

/// Second-order finite-difference derivative of nodal values on a
/// non-uniform grid (one-sided three-point stencils at the ends).
pub fn nodal_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 2 {
        let d = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![d, d];
    }
    let three_point = |i0: usize, at: usize| -> f64 {
        let (x0, x1, x2) = (x[i0], x[i0 + 1], x[i0 + 2]);
        let (y0, y1, y2) = (y[i0], y[i0 + 1], y[i0 + 2]);
        let xa = x[at];
        y0 * (2.0 * xa - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (2.0 * xa - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (2.0 * xa - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    (0..n)
        .map(|i| match i {
            0 => three_point(0, 0),
            i if i == n - 1 => three_point(n - 3, n - 1),
            i => three_point(i - 1, i),
        })
        .collect()
}
