//! Compressible isotropic hyperelastic models written in (I1, I2, J).

use crate::error::{Result, ShellError};
use crate::kinematics::{self, I_TILDE, M9};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum MaterialModel {
    SaintVenantKirchhoff { lambda: f64, mu: f64 },
    NeoHookean { lambda: f64, mu: f64 },
    MooneyRivlin { c1: f64, c2: f64, bulk: f64 },
}

/// ψ, β_n = (2∂ψ/∂I1, 4∂ψ/∂I2, ∂ψ/∂J) and β_{n,i} with the same scalings applied to β_n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialResponse {
    pub psi: f64,
    pub beta: [f64; 3],
    pub beta_derivs: [[f64; 3]; 3],
}

/// Lamé constants from Young's modulus and Poisson's ratio.
pub fn lame_from_young(e: f64, nu: f64) -> (f64, f64) {
    let mu = e / (2.0 * (1.0 + nu));
    (lame_lambda(mu, nu), mu)
}

/// First Lamé constant from the shear modulus and Poisson's ratio.
pub fn lame_lambda(mu: f64, nu: f64) -> f64 {
    2.0 * mu * nu / (1.0 - 2.0 * nu)
}

impl MaterialModel {
    pub fn name(&self) -> &'static str {
        match self {
            MaterialModel::SaintVenantKirchhoff { .. } => "saint_venant_kirchhoff",
            MaterialModel::NeoHookean { .. } => "neo_hookean",
            MaterialModel::MooneyRivlin { .. } => "mooney_rivlin",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MaterialModel::SaintVenantKirchhoff { lambda, mu } | MaterialModel::NeoHookean { lambda, mu } => {
                lambda > 0.0 && mu > 0.0
            }
            MaterialModel::MooneyRivlin { c1, c2, bulk } => c1 >= 0.0 && c2 >= 0.0 && bulk > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ShellError::InvalidMaterial(format!("{self:?}")))
        }
    }

    /// Sum β1 + β2 + β3 in the undeformed state; nonzero means residual stress.
    pub fn natural_state_stress(&self) -> f64 {
        let r = self.evaluate(3.0, 3.0, 1.0).expect("J = 1 is admissible");
        r.beta.iter().sum()
    }

    /// Small-strain shear modulus and first Lamé constant.
    pub fn linearized_lame(&self) -> (f64, f64) {
        match *self {
            MaterialModel::SaintVenantKirchhoff { lambda, mu } | MaterialModel::NeoHookean { lambda, mu } => (lambda, mu),
            MaterialModel::MooneyRivlin { c1, c2, bulk } => {
                let mu = 2.0 * (c1 + c2);
                (bulk - 2.0 * mu / 3.0, mu)
            }
        }
    }

    pub fn evaluate(&self, i1: f64, i2: f64, j: f64) -> Result<MaterialResponse> {
        match *self {
            MaterialModel::SaintVenantKirchhoff { lambda, mu } => {
                let psi = 0.25 * mu * (i2 - 2.0 * i1 + 3.0) + lambda / 8.0 * (i1 - 3.0).powi(2);
                let mut beta_derivs = [[0.0; 3]; 3];
                beta_derivs[0][0] = lambda;
                Ok(MaterialResponse { psi, beta: [0.5 * lambda * (i1 - 3.0) - mu, mu, 0.0], beta_derivs })
            }
            MaterialModel::NeoHookean { lambda, mu } => {
                if !(j > 0.0) {
                    return Err(ShellError::NonpositiveJacobian { value: j, context: "neo-Hookean".into() });
                }
                let lj = j.ln();
                let psi = 0.5 * lambda * lj * lj - mu * lj + 0.5 * mu * (i1 - 3.0);
                let mut beta_derivs = [[0.0; 3]; 3];
                beta_derivs[2][2] = (lambda + mu - lambda * lj) / (j * j);
                Ok(MaterialResponse { psi, beta: [mu, 0.0, (lambda * lj - mu) / j], beta_derivs })
            }
            MaterialModel::MooneyRivlin { c1, c2, bulk } => {
                if !(j > 0.0) {
                    return Err(ShellError::NonpositiveJacobian { value: j, context: "Mooney-Rivlin".into() });
                }
                let j23 = j.powf(-2.0 / 3.0);
                let j53 = j23 / j;
                let j83 = j53 / j;
                let ii_c = 0.5 * (i1 * i1 - i2);
                let psi = c1 * (j23 * i1 - 3.0) + c2 * (j23 * ii_c - 3.0) + 0.5 * bulk * (j - 1.0).powi(2);
                let beta = [
                    2.0 * j23 * (c1 + c2 * i1),
                    -2.0 * c2 * j23,
                    -2.0 / 3.0 * j53 * (c1 * i1 + c2 * ii_c) + bulk * (j - 1.0),
                ];
                let b13 = -4.0 / 3.0 * j53 * (c1 + c2 * i1);
                let b23 = 4.0 / 3.0 * c2 * j53;
                let beta_derivs = [
                    [4.0 * c2 * j23, 0.0, b13],
                    [0.0, 0.0, b23],
                    [b13, b23, 10.0 / 9.0 * j83 * (c1 * i1 + c2 * ii_c) + bulk],
                ];
                Ok(MaterialResponse { psi, beta, beta_derivs })
            }
        }
    }

    /// First Piola-Kirchhoff stress column P = β1 F + β2 F C + β3 cof F.
    pub fn first_pk_stress(&self, f_vec: &[f64; 9]) -> Result<[f64; 9]> {
        let l = sub_identity(f_vec);
        let (i1, i2, j) = kinematics::invariants(&l);
        self.check_j(j)?;
        let r = self.evaluate(i1, i2, j)?;
        let (fc, cof) = kinematics::fc_and_cof(&l);
        let mut p = [0.0; 9];
        for k in 0..9 {
            p[k] = r.beta[0] * f_vec[k] + r.beta[1] * fc[k] + r.beta[2] * cof[k];
        }
        Ok(p)
    }

    /// Cauchy stress column σ = β3 I + J⁻¹β1 B + J⁻¹β2 B².
    pub fn cauchy_stress(&self, f_vec: &[f64; 9]) -> Result<[f64; 9]> {
        let l = sub_identity(f_vec);
        let (i1, i2, j) = kinematics::invariants(&l);
        self.check_j(j)?;
        let r = self.evaluate(i1, i2, j)?;
        let b = kinematics::matmul3(f_vec, &kinematics::transpose3(f_vec));
        let bb = kinematics::matmul3(&b, &b);
        let mut s = [0.0; 9];
        for k in 0..9 {
            s[k] = r.beta[2] * I_TILDE[k] + (r.beta[0] * b[k] + r.beta[1] * bb[k]) / j;
        }
        Ok(s)
    }

    fn check_j(&self, j: f64) -> Result<()> {
        if j > 0.0 {
            Ok(())
        } else {
            Err(ShellError::NonpositiveJacobian { value: j, context: self.name().into() })
        }
    }
}

fn sub_identity(f: &[f64; 9]) -> [f64; 9] {
    let mut l = *f;
    for k in 0..9 {
        l[k] -= I_TILDE[k];
    }
    l
}

/// Stress column S = ∂ψ/∂L̃ and its tangent at one material point.
#[derive(Debug, Clone)]
pub struct PointResponse {
    pub psi: f64,
    pub j: f64,
    pub stress: [f64; 9],
    pub tangent: Option<M9>,
    /// B̂0 with S = (β1+β2+β3) Ĩ + B̂0 L̃.
    pub secant: Option<M9>,
}

/// Evaluates the stress column and optionally the consistent tangent and secant matrices.
pub fn point_response(model: &MaterialModel, l: &[f64; 9], tangent: bool, secant: bool) -> Result<PointResponse> {
    let (i1, i2, j) = kinematics::invariants(l);
    if !(j > 0.0) {
        return Err(ShellError::NonpositiveJacobian { value: j, context: "material point".into() });
    }
    let r = model.evaluate(i1, i2, j)?;
    let (fc, cof) = kinematics::fc_and_cof(l);
    let mut f = *l;
    for k in 0..9 {
        f[k] += I_TILDE[k];
    }
    let [bt1, bt2, bt3] = r.beta;
    let mut stress = [0.0; 9];
    for k in 0..9 {
        stress[k] = bt1 * f[k] + bt2 * fc[k] + bt3 * cof[k];
    }

    let needs_b = tangent || secant;
    let b23 = (needs_b && bt2 != 0.0).then(|| (kinematics::b2_matrix(l), kinematics::b3_matrix(l)));
    let gcof = (needs_b && bt3 != 0.0).then(|| kinematics::gcof_matrix(l));
    let b1 = kinematics::b1_matrix();
    let g0 = kinematics::g0_matrix();

    let assemble = |w2: f64, w3: f64| -> M9 {
        let mut t = [[0.0; 9]; 9];
        for i in 0..9 {
            t[i][i] = bt1;
        }
        if let Some((b2, b3)) = &b23 {
            for i in 0..9 {
                for k in 0..9 {
                    t[i][k] += bt2 * (b1[i][k] + w2 * b2[i][k] + w3 * b3[i][k]);
                }
            }
        }
        if let Some(gc) = &gcof {
            for i in 0..9 {
                for k in 0..9 {
                    t[i][k] += bt3 * (g0[i][k] + w2 * gc[i][k]);
                }
            }
        }
        t
    };

    let tangent = if tangent {
        let mut t = assemble(1.0, 1.0);
        let v = [f, fc, cof];
        for n in 0..3 {
            for i in 0..3 {
                let c = r.beta_derivs[n][i];
                if c == 0.0 {
                    continue;
                }
                for p in 0..9 {
                    let vp = c * v[n][p];
                    for q in 0..9 {
                        t[p][q] += vp * v[i][q];
                    }
                }
            }
        }
        Some(t)
    } else {
        None
    };
    let secant = if secant { Some(assemble(0.5, 1.0 / 3.0)) } else { None };
    Ok(PointResponse { psi: r.psi, j, stress, tangent, secant })
}
