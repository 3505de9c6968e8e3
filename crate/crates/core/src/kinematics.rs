//! Through-thickness expansion, gradient operators and invariant derivatives.
//!
//! Nine-component columns list a 3×3 tensor row-major in the frame
//! (η1, η2, ζ): index `3*i + j` holds component (i, j).

use crate::error::{Result, ShellError};
use crate::geometry::FramePointData;
use serde::{Deserialize, Serialize};

pub type M9 = [[f64; 9]; 9];

pub const I_TILDE: [f64; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    Monomial,
    Legendre,
}

/// Thickness functions for the three displacement components.
#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessBasis {
    pub orders: [usize; 3],
    pub family: BasisFamily,
    pub zeta_bounds: (f64, f64),
    /// Legendre centre and half-thickness.
    pub r1_scale: f64,
    pub r2_scale: f64,
}

/// Basis rows A and dA/dζ at one ζ, per displacement family.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisRows {
    pub a: [Vec<f64>; 3],
    pub da: [Vec<f64>; 3],
}

/// Position of one coefficient inside the per-node DOF block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalDof {
    pub family: usize,
    pub order: usize,
}

impl ThicknessBasis {
    pub fn new(orders: [i64; 3], family: BasisFamily, zeta_bounds: (f64, f64)) -> Result<ThicknessBasis> {
        if orders.iter().any(|&o| o < 0) {
            return Err(ShellError::InvalidOrder(format!("orders must be nonnegative, got {orders:?}")));
        }
        if orders.iter().any(|&o| o > 12) {
            return Err(ShellError::InvalidOrder(format!("orders above 12 are not supported, got {orders:?}")));
        }
        let (zb, zt) = zeta_bounds;
        if !(zb < zt) {
            return Err(ShellError::InvalidOrder(format!(
                "thickness bounds must satisfy zeta_b < zeta_t, got ({zb}, {zt})"
            )));
        }
        Ok(ThicknessBasis {
            orders: [orders[0] as usize, orders[1] as usize, orders[2] as usize],
            family,
            zeta_bounds,
            r1_scale: 0.5 * (zt + zb),
            r2_scale: 0.5 * (zt - zb),
        })
    }

    /// DOFs per node, n + m + p + 3.
    pub fn ndof(&self) -> usize {
        self.orders.iter().map(|o| o + 1).sum()
    }

    /// Offset of each family inside a node block.
    pub fn offsets(&self) -> [usize; 3] {
        [0, self.orders[0] + 1, self.orders[0] + self.orders[1] + 2]
    }

    pub fn index(&self, dof: LocalDof) -> usize {
        self.offsets()[dof.family] + dof.order
    }

    pub fn local_dof(&self, index: usize) -> LocalDof {
        let off = self.offsets();
        let family = if index >= off[2] { 2 } else if index >= off[1] { 1 } else { 0 };
        LocalDof { family, order: index - off[family] }
    }

    /// Values f_i(ζ) and derivatives for i = 0..=order.
    pub fn functions(&self, order: usize, zeta: f64) -> (Vec<f64>, Vec<f64>) {
        let mut f = vec![0.0; order + 1];
        let mut df = vec![0.0; order + 1];
        match self.family {
            BasisFamily::Monomial => {
                f[0] = 1.0;
                for i in 1..=order {
                    f[i] = f[i - 1] * zeta;
                    df[i] = i as f64 * f[i - 1];
                }
            }
            BasisFamily::Legendre => {
                let x = (zeta - self.r1_scale) / self.r2_scale;
                let (p, dp) = legendre(order, x);
                for i in 0..=order {
                    f[i] = p[i];
                    df[i] = dp[i] / self.r2_scale;
                }
            }
        }
        (f, df)
    }

    pub fn rows(&self, zeta: f64) -> BasisRows {
        let r: Vec<(Vec<f64>, Vec<f64>)> = self.orders.iter().map(|&o| self.functions(o, zeta)).collect();
        BasisRows {
            a: [r[0].0.clone(), r[1].0.clone(), r[2].0.clone()],
            da: [r[0].1.clone(), r[1].1.clone(), r[2].1.clone()],
        }
    }

    /// Frame displacement (u_η1, u_η2, u_ζ) at ζ for a node-block coefficient vector.
    pub fn displacement(&self, phi: &[f64], zeta: f64) -> [f64; 3] {
        let rows = self.rows(zeta);
        let off = self.offsets();
        let mut u = [0.0; 3];
        for f in 0..3 {
            u[f] = rows.a[f].iter().enumerate().map(|(i, a)| a * phi[off[f] + i]).sum();
        }
        u
    }
}

/// Legendre polynomials and derivatives up to `order` at x.
pub fn legendre(order: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; order + 1];
    let mut dp = vec![0.0; order + 1];
    p[0] = 1.0;
    if order >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for k in 1..order {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        dp[k + 1] = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
    }
    (p, dp)
}

/// G1, G2, G3 at one point, each 9×n̂ row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientOperators {
    pub ndof: usize,
    pub g: [Vec<f64>; 3],
}

impl GradientOperators {
    #[inline]
    pub fn get(&self, which: usize, row: usize, col: usize) -> f64 {
        self.g[which][row * self.ndof + col]
    }

    /// L̃ = G1 Φ + G2 Φ,η1 + G3 Φ,η2.
    pub fn displacement_gradient(&self, phi: &[f64], phi_1: &[f64], phi_2: &[f64]) -> [f64; 9] {
        let n = self.ndof;
        let mut l = [0.0; 9];
        for (r, lr) in l.iter_mut().enumerate() {
            let row = r * n;
            let mut acc = 0.0;
            for k in 0..n {
                acc += self.g[0][row + k] * phi[k] + self.g[1][row + k] * phi_1[k] + self.g[2][row + k] * phi_2[k];
            }
            *lr = acc;
        }
        l
    }

    pub fn deformation_gradient(&self, phi: &[f64], phi_1: &[f64], phi_2: &[f64]) -> [f64; 9] {
        let mut f = self.displacement_gradient(phi, phi_1, phi_2);
        for k in 0..9 {
            f[k] += I_TILDE[k];
        }
        f
    }
}

/// Builds G1, G2, G3 from the frame coefficients and thickness rows.
pub fn gradient_operators(data: &FramePointData, basis: &ThicknessBasis, rows: &BasisRows) -> GradientOperators {
    let n = basis.ndof();
    let off = basis.offsets();
    let [a1, a2, a3] = data.a;
    let [b1, b2, b3] = data.b;
    let [c1, c2, c3, c4] = data.c;
    let mut g = [vec![0.0; 9 * n], vec![0.0; 9 * n], vec![0.0; 9 * n]];

    // put coefficient * A_family into `row` of matrix `m`
    let mut put = |m: usize, row: usize, fam: usize, coef: f64, deriv: bool| {
        if coef == 0.0 {
            return;
        }
        let src = if deriv { &rows.da[fam] } else { &rows.a[fam] };
        for (i, v) in src.iter().enumerate() {
            g[m][row * n + off[fam] + i] += coef * v;
        }
    };
    let (th, s, z) = (0, 1, 2);

    put(0, 0, s, -(b1 * c3 + a1 * c1), false);
    put(0, 0, z, -(b2 * c3 + a2 * c1), false);
    put(0, 1, s, -(b1 * c4 + a1 * c2), false);
    put(0, 1, z, -(b2 * c4 + a2 * c2), false);
    put(0, 2, th, 1.0, true);
    put(0, 3, th, b1 * c3 + a1 * c1, false);
    put(0, 3, z, -(b3 * c3 + a3 * c1), false);
    put(0, 4, th, b1 * c4 + a1 * c2, false);
    put(0, 4, z, -(b3 * c4 + a3 * c2), false);
    put(0, 5, s, 1.0, true);
    put(0, 6, th, b2 * c3 + a2 * c1, false);
    put(0, 6, s, b3 * c3 + a3 * c1, false);
    put(0, 7, th, b2 * c4 + a2 * c2, false);
    put(0, 7, s, b3 * c4 + a3 * c2, false);
    put(0, 8, z, 1.0, true);

    for (fam, row) in [(th, 0), (s, 3), (z, 6)] {
        put(1, row, fam, c1, false);
        put(1, row + 1, fam, c2, false);
        put(2, row, fam, c3, false);
        put(2, row + 1, fam, c4, false);
    }
    GradientOperators { ndof: n, g }
}

#[inline]
fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn levi(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[inline]
fn m(l: &[f64; 9], i: usize, j: usize) -> f64 {
    l[3 * i + j]
}

fn build(mut entry: impl FnMut(usize, usize, usize, usize) -> f64) -> M9 {
    let mut out = [[0.0; 9]; 9];
    for i in 0..3 {
        for j in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    out[3 * i + j][3 * a + b] = entry(i, j, a, b);
                }
            }
        }
    }
    out
}

pub fn matmul3(x: &[f64; 9], y: &[f64; 9]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = (0..3).map(|k| x[3 * i + k] * y[3 * k + j]).sum();
        }
    }
    out
}

pub fn transpose3(x: &[f64; 9]) -> [f64; 9] {
    [x[0], x[3], x[6], x[1], x[4], x[7], x[2], x[5], x[8]]
}

pub fn det3(x: &[f64; 9]) -> f64 {
    x[0] * (x[4] * x[8] - x[5] * x[7]) - x[1] * (x[3] * x[8] - x[5] * x[6]) + x[2] * (x[3] * x[7] - x[4] * x[6])
}

pub fn mat_vec(a: &M9, x: &[f64; 9]) -> [f64; 9] {
    let mut y = [0.0; 9];
    for i in 0..9 {
        y[i] = (0..9).map(|k| a[i][k] * x[k]).sum();
    }
    y
}

pub fn dot9(a: &[f64; 9], b: &[f64; 9]) -> f64 {
    (0..9).map(|k| a[k] * b[k]).sum()
}

/// Constant matrix with B1 L̃ equal to the column of 2L + Lᵀ.
pub fn b1_matrix() -> M9 {
    build(|i, j, a, b| 2.0 * delta(i, a) * delta(j, b) + delta(j, a) * delta(i, b))
}

/// Constant matrix with ½(G0 L̃)·L̃ equal to the second invariant of L.
pub fn g0_matrix() -> M9 {
    build(|i, j, a, b| delta(a, b) * delta(i, j) - delta(j, a) * delta(i, b))
}

/// Linear in L: ½ B2 L̃ is the column of LᵀL + L² + LLᵀ.
pub fn b2_matrix(l: &[f64; 9]) -> M9 {
    build(|i, j, a, b| {
        delta(i, b) * m(l, a, j)
            + m(l, a, i) * delta(j, b)
            + delta(i, a) * m(l, b, j)
            + m(l, i, a) * delta(j, b)
            + delta(i, a) * m(l, j, b)
            + m(l, i, b) * delta(j, a)
    })
}

/// Quadratic in L: ⅓ B3 L̃ is the column of L Lᵀ L.
pub fn b3_matrix(l: &[f64; 9]) -> M9 {
    let ltl = matmul3(&transpose3(l), l);
    let llt = matmul3(l, &transpose3(l));
    build(|i, j, a, b| delta(i, a) * m(&ltl, b, j) + m(l, i, b) * m(l, a, j) + m(&llt, i, a) * delta(j, b))
}

/// Linear in L: ½ G_cof L̃ is the cofactor column of L.
pub fn gcof_matrix(l: &[f64; 9]) -> M9 {
    build(|i, j, a, b| {
        let mut acc = 0.0;
        for n in 0..3 {
            for q in 0..3 {
                let e = levi(i, a, n) * levi(j, b, q);
                if e != 0.0 {
                    acc += e * m(l, n, q);
                }
            }
        }
        acc
    })
}

/// Displacement gradient, deformation gradient and invariants at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub l: [f64; 9],
    pub f: [f64; 9],
    pub i1: f64,
    pub i2: f64,
    pub j: f64,
}

impl KinematicState {
    pub fn new(l: [f64; 9]) -> KinematicState {
        let (i1, i2, j) = invariants(&l);
        let mut f = l;
        for k in 0..9 {
            f[k] += I_TILDE[k];
        }
        KinematicState { l, f, i1, i2, j }
    }
}

/// (I1, I2, J) = (tr C, tr C², det F) with J = 1 + I + II + III.
pub fn invariants(l: &[f64; 9]) -> (f64, f64, f64) {
    let mut f = *l;
    for k in 0..9 {
        f[k] += I_TILDE[k];
    }
    let c = matmul3(&transpose3(&f), &f);
    let i1 = c[0] + c[4] + c[8];
    let i2 = dot9(&c, &c);
    (i1, i2, jacobian(l))
}

pub fn jacobian(l: &[f64; 9]) -> f64 {
    let first = l[0] + l[4] + l[8];
    let second = 0.5 * dot9(&mat_vec(&g0_matrix(), l), l);
    let cof = cofactor(l);
    let third = dot9(&cof, l) / 3.0;
    1.0 + first + second + third
}

/// Cofactor column of L, equal to ½ G_cof L̃.
pub fn cofactor(l: &[f64; 9]) -> [f64; 9] {
    let mut c = [0.0; 9];
    for i in 0..3 {
        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
        for j in 0..3 {
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            c[3 * i + j] = m(l, i1, j1) * m(l, i2, j2) - m(l, i1, j2) * m(l, i2, j1);
        }
    }
    c
}

/// Columns of F C = Ĩ + B1L̃ + ½B2L̃ + ⅓B3L̃ and cof F = Ĩ + (G0 + ½G_cof)L̃.
pub fn fc_and_cof(l: &[f64; 9]) -> ([f64; 9], [f64; 9]) {
    let mut f = *l;
    for k in 0..9 {
        f[k] += I_TILDE[k];
    }
    let fc = matmul3(&f, &matmul3(&transpose3(&f), &f));
    let cof = cofactor(&f);
    (fc, cof)
}

/// Every derivative quantity of the invariants with respect to L̃.
#[derive(Debug, Clone)]
pub struct InvariantDerivatives {
    pub d_i1: [f64; 9],
    pub d_i2: [f64; 9],
    pub d_j: [f64; 9],
    pub b1: M9,
    pub b2: M9,
    pub b3: M9,
    pub g0: M9,
    pub gcof: M9,
}

pub fn invariant_derivatives(l: &[f64; 9]) -> InvariantDerivatives {
    let b1 = b1_matrix();
    let b2 = b2_matrix(l);
    let b3 = b3_matrix(l);
    let g0 = g0_matrix();
    let gcof = gcof_matrix(l);
    let (v1, v2, v3) = (mat_vec(&b1, l), mat_vec(&b2, l), mat_vec(&b3, l));
    let (w1, w2) = (mat_vec(&g0, l), mat_vec(&gcof, l));
    let mut d_i1 = [0.0; 9];
    let mut d_i2 = [0.0; 9];
    let mut d_j = [0.0; 9];
    for k in 0..9 {
        d_i1[k] = 2.0 * (I_TILDE[k] + l[k]);
        d_i2[k] = 4.0 * (I_TILDE[k] + v1[k] + 0.5 * v2[k] + v3[k] / 3.0);
        d_j[k] = I_TILDE[k] + w1[k] + 0.5 * w2[k];
    }
    InvariantDerivatives { d_i1, d_i2, d_j, b1, b2, b3, g0, gcof }
}
