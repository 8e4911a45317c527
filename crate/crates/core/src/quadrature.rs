//! Collapsed Gauss–Legendre rules on reference simplices.

/// Quadrature rule on the reference simplex of dimension `dim` (1, 2 or 3).
///
/// Points are barycentric (`dim + 1` entries used); weights sum to `1 / dim!`,
/// the reference volume, so a physical integral is `|det| * sum w f`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

impl QuadratureRule {
    /// Rule exact for polynomials of total degree `degree`.
    pub fn simplex(dim: usize, degree: usize) -> Self {
        assert!((1..=3).contains(&dim), "simplex dimension {dim}");
        let n = (degree + dim).div_ceil(2).max(1);
        let (gx, gw) = gauss_legendre(n);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match dim {
            1 => {
                for i in 0..n {
                    points.push([1.0 - gx[i], gx[i], 0.0, 0.0]);
                    weights.push(gw[i]);
                }
            }
            2 => {
                for i in 0..n {
                    for j in 0..n {
                        let x = gx[i];
                        let y = gx[j] * (1.0 - gx[i]);
                        points.push([1.0 - x - y, x, y, 0.0]);
                        weights.push(gw[i] * gw[j] * (1.0 - gx[i]));
                    }
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        for l in 0..n {
                            let (u, v, s) = (gx[i], gx[j], gx[l]);
                            let x = u;
                            let y = v * (1.0 - u);
                            let z = s * (1.0 - u) * (1.0 - v);
                            points.push([1.0 - x - y - z, x, y, z]);
                            weights.push(gw[i] * gw[j] * gw[l] * (1.0 - u) * (1.0 - u) * (1.0 - v));
                        }
                    }
                }
            }
        }
        QuadratureRule { dim, degree, points, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
