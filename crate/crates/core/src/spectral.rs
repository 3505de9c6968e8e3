//! Gauss and Gauss-Lobatto-Legendre rules and tensor-product Lagrange elements.

use crate::error::{Result, ShellError};
use crate::kinematics::legendre;

/// Gauss-Legendre points and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p[n] / dp[n];
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[n - 1 - i] = z;
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp[n] * dp[n]);
    }
    (x, w)
}

/// Gauss-Lobatto-Legendre nodes on [-1, 1] for polynomial order p (p + 1 nodes).
pub fn gll_nodes(p: usize) -> Vec<f64> {
    assert!(p >= 1);
    let mut x = vec![0.0; p + 1];
    x[0] = -1.0;
    x[p] = 1.0;
    // interior nodes are roots of P'_p; start from Chebyshev-Gauss-Lobatto points
    for i in 1..p {
        let mut z = -(std::f64::consts::PI * i as f64 / p as f64).cos();
        for _ in 0..100 {
            let (pp, dp) = legendre(p, z);
            // P''_p from the Legendre differential equation
            let d2 = (2.0 * z * dp[p] - (p * (p + 1)) as f64 * pp[p]) / (1.0 - z * z);
            let dz = dp[p] / d2;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
    }
    x
}

/// One-dimensional Lagrange basis on a node set.
#[derive(Debug, Clone)]
pub struct Lagrange1d {
    pub nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl Lagrange1d {
    pub fn new(nodes: Vec<f64>) -> Lagrange1d {
        let n = nodes.len();
        let bary = (0..n)
            .map(|j| 1.0 / (0..n).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product::<f64>())
            .collect();
        Lagrange1d { nodes, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values and first derivatives of every basis function at x.
    pub fn eval(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes.len();
        let mut v = vec![0.0; n];
        let mut d = vec![0.0; n];
        for j in 0..n {
            let mut prod = 1.0;
            let mut dsum = 0.0;
            for k in 0..n {
                if k == j {
                    continue;
                }
                let t = x - self.nodes[k];
                // derivative of the product by the product rule
                dsum = dsum * t + prod;
                prod *= t;
            }
            v[j] = prod * self.bary[j];
            d[j] = dsum * self.bary[j];
        }
        (v, d)
    }
}

/// Shape function values and parametric derivatives at one point.
#[derive(Debug, Clone)]
pub struct ShapeValues {
    pub n: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Tensor-product spectral element of order p with GLL nodes.
#[derive(Debug, Clone)]
pub struct SpectralElement {
    pub order: usize,
    pub basis: Lagrange1d,
}

impl SpectralElement {
    pub fn new(order: usize) -> Result<SpectralElement> {
        if order == 0 || order > 16 {
            return Err(ShellError::InvalidOrder(format!("element order must be in 1..=16, got {order}")));
        }
        Ok(SpectralElement { order, basis: Lagrange1d::new(gll_nodes(order)) })
    }

    pub fn nodes_per_element(&self) -> usize {
        (self.order + 1) * (self.order + 1)
    }

    /// Shape functions at reference point (ξ, η); local node index is j*(p+1) + i.
    /// Derivatives are scaled to the parametric box of size (h1, h2).
    pub fn shape(&self, xi: f64, eta: f64, h1: f64, h2: f64) -> ShapeValues {
        let (v1, d1) = self.basis.eval(xi);
        let (v2, d2) = self.basis.eval(eta);
        let q = self.order + 1;
        let mut out = ShapeValues { n: vec![0.0; q * q], d1: vec![0.0; q * q], d2: vec![0.0; q * q] };
        for j in 0..q {
            for i in 0..q {
                let k = j * q + i;
                out.n[k] = v1[i] * v2[j];
                out.d1[k] = d1[i] * v2[j] * 2.0 / h1;
                out.d2[k] = v1[i] * d2[j] * 2.0 / h2;
            }
        }
        out
    }
}

/// In-plane and through-thickness quadrature.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub plane_points: Vec<(f64, f64)>,
    pub plane_weights: Vec<f64>,
    pub thickness_points: Vec<f64>,
    pub thickness_weights: Vec<f64>,
}

impl QuadratureRule {
    /// `plane` Gauss points per direction and `thickness` points across [zb, zt].
    pub fn new(plane: usize, thickness: usize, zeta_bounds: (f64, f64)) -> Result<QuadratureRule> {
        if plane == 0 || thickness == 0 {
            return Err(ShellError::InvalidOrder("quadrature needs at least one point".into()));
        }
        let (x, w) = gauss_legendre(plane);
        let mut plane_points = Vec::with_capacity(plane * plane);
        let mut plane_weights = Vec::with_capacity(plane * plane);
        for j in 0..plane {
            for i in 0..plane {
                plane_points.push((x[i], x[j]));
                plane_weights.push(w[i] * w[j]);
            }
        }
        let (zx, zw) = gauss_legendre(thickness);
        let (zb, zt) = zeta_bounds;
        let half = 0.5 * (zt - zb);
        let mid = 0.5 * (zt + zb);
        Ok(QuadratureRule {
            plane_points,
            plane_weights,
            thickness_points: zx.iter().map(|t| mid + half * t).collect(),
            thickness_weights: zw.iter().map(|w| w * half).collect(),
        })
    }
}
