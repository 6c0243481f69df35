use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which end(s) of the interval the nodes cluster toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Grading {
    #[default]
    Left,
    Right,
    Both,
}

/// Nodes `a = t_0 < ... < t_n = b`, graded in the variable
/// `z = (t^rho - a^rho) / rho` by `z_j = Z (j/n)^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    a: f64,
    b: f64,
    rho: f64,
    grading: f64,
    side: Grading,
    t: Vec<f64>,
    z: Vec<f64>,
}

impl Mesh {
    pub fn new(a: f64, b: f64, rho: f64, n: usize, grading: f64, side: Grading) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::param("a", format!("{a} must be positive")));
        }
        if !(b > a && b.is_finite()) {
            return Err(Error::param("b", format!("{b} must exceed a = {a}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::param("rho", format!("{rho} must be positive")));
        }
        if n == 0 {
            return Err(Error::param("n", "need at least one interval"));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::param("grading", format!("{grading} must be >= 1")));
        }
        if side == Grading::Both && !n.is_multiple_of(2) {
            return Err(Error::param("n", "two-sided grading needs an even interval count"));
        }
        let span = (b.powf(rho) - a.powf(rho)) / rho;
        let nf = n as f64;
        let z: Vec<f64> = (0..=n)
            .map(|j| {
                if j == n {
                    return span;
                }
                let s = j as f64 / nf;
                match side {
                    Grading::Left => span * s.powf(grading),
                    Grading::Right => span - span * (1.0 - s).powf(grading),
                    Grading::Both => {
                        let half = 0.5 * span;
                        if 2 * j <= n {
                            half * (2.0 * s).powf(grading)
                        } else {
                            span - half * (2.0 * (1.0 - s)).powf(grading)
                        }
                    }
                }
            })
            .collect();
        Self::from_z(a, rho, z, grading, side)
    }

    /// Mesh from explicit `z` nodes starting at 0; must be strictly increasing.
    pub fn from_z(a: f64, rho: f64, z: Vec<f64>, grading: f64, side: Grading) -> Result<Self> {
        if z.len() < 2 || z[0] != 0.0 {
            return Err(Error::param("nodes", "need z_0 = 0 and at least two nodes"));
        }
        if z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("nodes", "z nodes must be strictly increasing"));
        }
        let ar = a.powf(rho);
        let mut t: Vec<f64> = z.iter().map(|&zj| (ar + rho * zj).powf(1.0 / rho)).collect();
        t[0] = a;
        let b = *t.last().unwrap();
        Ok(Self {
            a,
            b,
            rho,
            grading,
            side,
            t,
            z,
        })
    }

    pub fn with_b(&self, b: f64, n: usize) -> Result<Self> {
        Self::new(self.a, b, self.rho, n, self.grading, self.side)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn side(&self) -> Grading {
        self.side
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Total length in `z`.
    pub fn span(&self) -> f64 {
        *self.z.last().unwrap()
    }

    pub fn z_of(&self, t: f64) -> f64 {
        (t.powf(self.rho) - self.a.powf(self.rho)) / self.rho
    }

    pub fn t_of(&self, z: f64) -> f64 {
        (self.a.powf(self.rho) + self.rho * z).powf(1.0 / self.rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_monotonicity() {
        for side in [Grading::Left, Grading::Right, Grading::Both] {
            let m = Mesh::new(1.0, 2.0, 2.0, 64, 3.0, side).unwrap();
            assert_eq!(m.t()[0], 1.0);
            assert!((m.t()[64] - 2.0).abs() < 1e-15);
            assert!(m.t().windows(2).all(|w| w[1] > w[0]));
            assert_eq!(m.span(), 1.5);
        }
    }

    #[test]
    fn uniform_in_z_when_q_is_one() {
        let m = Mesh::new(1.0, 3.0, 0.5, 8, 1.0, Grading::Left).unwrap();
        let h = m.z()[1];
        for w in m.z().windows(2) {
            assert!((w[1] - w[0] - h).abs() < 1e-14);
        }
    }

    #[test]
    fn grading_clusters_at_the_requested_end() {
        let left = Mesh::new(1.0, 2.0, 1.0, 10, 3.0, Grading::Left).unwrap();
        let right = Mesh::new(1.0, 2.0, 1.0, 10, 3.0, Grading::Right).unwrap();
        assert!((left.z()[1] - 1e-3).abs() < 1e-15);
        assert!((1.0 - right.z()[9] - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Mesh::new(0.0, 2.0, 1.0, 4, 1.0, Grading::Left).is_err());
        assert!(Mesh::new(1.0, 1.0, 1.0, 4, 1.0, Grading::Left).is_err());
        assert!(Mesh::new(1.0, 2.0, 1.0, 0, 1.0, Grading::Left).is_err());
        assert!(Mesh::new(1.0, 2.0, 1.0, 4, 0.5, Grading::Left).is_err());
        assert!(Mesh::new(1.0, 2.0, 1.0, 5, 2.0, Grading::Both).is_err());
    }
}
