//! Product integration of the Abel kernel `r^{kappa-1}` against piecewise
//! linear data. After the change of variable `z = (s^rho - a^rho) / rho`
//! every Katugampola kernel is of this form.

const SERIES_TERMS: usize = 16;
const SERIES_RATIO: f64 = 0.1;

/// Exact moments of `r^{kappa-1}` against the two hat pieces of an interval.
#[derive(Debug, Clone)]
pub(crate) struct KernelMoments {
    kappa: f64,
    far: [f64; SERIES_TERMS],
    near: [f64; SERIES_TERMS],
}

impl KernelMoments {
    pub(crate) fn new(kappa: f64) -> Self {
        let mut far = [0.0; SERIES_TERMS];
        let mut near = [0.0; SERIES_TERMS];
        // binomial(kappa - 1, i)
        let mut c = 1.0;
        for i in 0..SERIES_TERMS {
            let fi = i as f64;
            far[i] = c / (fi + 2.0);
            near[i] = c / ((fi + 1.0) * (fi + 2.0));
            c *= (kappa - 1.0 - fi) / (fi + 1.0);
        }
        Self { kappa, far, near }
    }

    /// For an interval at kernel distances `x < y`, returns
    /// `(int r^{k-1} (r - x) dr, int r^{k-1} (y - r) dr)` over `[x, y]`.
    /// The first multiplies the node far from the singularity, the second
    /// the near node.
    #[inline]
    pub(crate) fn moments(&self, x: f64, y: f64) -> (f64, f64) {
        let k = self.kappa;
        let h = y - x;
        if x <= 0.0 {
            let p = h.powf(k + 1.0) / (k + 1.0);
            return (p, p / k);
        }
        let r = h / x;
        if r <= SERIES_RATIO {
            let scale = x.powf(k + 1.0) * r * r;
            let (mut sf, mut sn, mut rp) = (0.0, 0.0, 1.0);
            for i in 0..SERIES_TERMS {
                sf += self.far[i] * rp;
                sn += self.near[i] * rp;
                rp *= r;
            }
            return (scale * sf, scale * sn);
        }
        let (xk, yk) = (x.powf(k), y.powf(k));
        let d0 = (yk - xk) / k;
        let d1 = (yk * y - xk * x) / (k + 1.0);
        (d1 - x * d0, y * d0 - d1)
    }
}

/// `int_0^{z_j} (z_j - s)^{kappa-1} g(s) ds` with `g` linear between the
/// nodes `z[0..=j]`.
pub(crate) fn left_sum(z: &[f64], g: &[f64], j: usize, km: &KernelMoments) -> f64 {
    let zj = z[j];
    let mut acc = 0.0;
    for k in 0..j {
        let (g0, g1) = (g[k], g[k + 1]);
        if g0 == 0.0 && g1 == 0.0 {
            continue;
        }
        let (p, q) = km.moments(zj - z[k + 1], zj - z[k]);
        acc += (g0 * p + g1 * q) / (z[k + 1] - z[k]);
    }
    acc
}

/// The history part of [`left_sum`] (intervals `0..j-1`) plus the two
/// coefficients of the last interval, so callers can solve for `g[j]`.
pub(crate) fn left_sum_split(z: &[f64], g: &[f64], j: usize, km: &KernelMoments) -> (f64, f64) {
    let zj = z[j];
    let mut acc = 0.0;
    for k in 0..j - 1 {
        let (g0, g1) = (g[k], g[k + 1]);
        if g0 == 0.0 && g1 == 0.0 {
            continue;
        }
        let (p, q) = km.moments(zj - z[k + 1], zj - z[k]);
        acc += (g0 * p + g1 * q) / (z[k + 1] - z[k]);
    }
    let h = z[j] - z[j - 1];
    let (p, q) = km.moments(0.0, h);
    (acc + g[j - 1] * p / h, q / h)
}

/// `int_{z_j}^{Z} (s - z_j)^{kappa-1} g(s) ds` with `g` linear between nodes.
pub(crate) fn right_sum(z: &[f64], g: &[f64], j: usize, km: &KernelMoments) -> f64 {
    let zj = z[j];
    let mut acc = 0.0;
    for k in j..z.len() - 1 {
        let (g0, g1) = (g[k], g[k + 1]);
        if g0 == 0.0 && g1 == 0.0 {
            continue;
        }
        let (p, q) = km.moments(z[k] - zj, z[k + 1] - zj);
        acc += (g1 * p + g0 * q) / (z[k + 1] - z[k]);
    }
    acc
}
