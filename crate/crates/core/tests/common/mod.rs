//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the crate's formulas for the quantity being
//! checked: frames come from finite differences of explicit position maps,
//! invariants from plain 3×3 algebra, energies from textbook expressions.
#![allow(dead_code)]

use hyshell::expr::Field;
use hyshell::geometry::{CurveFrame, GeometryKind};
use hyshell::kinematics::BasisFamily;
use hyshell::material::MaterialModel;
use hyshell::mesh::{BcKind, BoundaryCondition, Edge, LoadCase, ModelSpec};

pub type V3 = [f64; 3];
pub type M3 = [[f64; 3]; 3];

pub fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
pub fn mul(s: f64, a: V3) -> V3 {
    [s * a[0], s * a[1], s * a[2]]
}
pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
pub fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
pub fn unit(a: V3) -> V3 {
    mul(1.0 / dot(a, a).sqrt(), a)
}

/// Rodrigues rotation of v about unit axis k by angle t.
pub fn rotate(v: V3, k: V3, t: f64) -> V3 {
    let (s, c) = t.sin_cos();
    add(add(mul(c, v), mul(s, cross(k, v))), mul(dot(k, v) * (1.0 - c), k))
}

/// Five-point central difference.
pub fn d5<F: Fn(f64) -> V3>(f: F, x: f64, h: f64) -> V3 {
    let a = f(x - 2.0 * h);
    let b = f(x - h);
    let c = f(x + h);
    let d = f(x + 2.0 * h);
    std::array::from_fn(|k| (a[k] - 8.0 * b[k] + 8.0 * c[k] - d[k]) / (12.0 * h))
}

pub fn d5s<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

// ---------------------------------------------------------------- curves

/// A reference curve with frame (T, M1, M2), evaluated without the crate's integrator.
pub enum CurveOracle {
    Straight,
    /// Constant Cartan components: closed-form rigid rotation about the Darboux vector.
    Constant { k: V3, origin: V3, t0: V3, m10: V3 },
    /// Variable components: fine fixed-step RK4 from s = 0 with the default placement.
    Varying(Box<dyn Fn(f64) -> V3 + Send + Sync>),
}

impl CurveOracle {
    /// (position, T, M1, M2).
    pub fn eval(&self, s: f64) -> [V3; 4] {
        match self {
            CurveOracle::Straight => [[0.0, 0.0, s], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            CurveOracle::Constant { k, origin, t0, m10 } => {
                let m20 = cross(*t0, *m10);
                // ω = κ3 T − κ2 M1 + κ1 M2 is fixed in space
                let w = add(add(mul(k[2], *t0), mul(-k[1], *m10)), mul(k[0], m20));
                let wn = dot(w, w).sqrt();
                if wn < 1e-14 {
                    return [add(*origin, mul(s, *t0)), *t0, *m10, m20];
                }
                let ax = mul(1.0 / wn, w);
                let par = dot(*t0, ax);
                let perp = sub(*t0, mul(par, ax));
                let x = add(
                    add(mul(par * s, ax), mul((wn * s).sin() / wn, perp)),
                    mul((1.0 - (wn * s).cos()) / wn, cross(ax, perp)),
                );
                [add(*origin, x), rotate(*t0, ax, wn * s), rotate(*m10, ax, wn * s), rotate(m20, ax, wn * s)]
            }
            CurveOracle::Varying(k) => {
                let n = ((s.abs() / 2.5e-4).ceil() as usize).max(1);
                let h = s / n as f64;
                let f = |s: f64, y: &[V3; 4]| -> [V3; 4] {
                    let [k1, k2, k3] = k(s);
                    [
                        y[1],
                        add(mul(k1, y[2]), mul(k2, y[3])),
                        add(mul(-k1, y[1]), mul(k3, y[3])),
                        add(mul(-k2, y[1]), mul(-k3, y[2])),
                    ]
                };
                let step = |y: &[V3; 4], d: &[V3; 4], a: f64| -> [V3; 4] { std::array::from_fn(|i| add(y[i], mul(a, d[i]))) };
                let mut y = [[0.0; 3], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
                for i in 0..n {
                    let s0 = i as f64 * h;
                    let a = f(s0, &y);
                    let b = f(s0 + 0.5 * h, &step(&y, &a, 0.5 * h));
                    let c = f(s0 + 0.5 * h, &step(&y, &b, 0.5 * h));
                    let d = f(s0 + h, &step(&y, &c, h));
                    for j in 0..4 {
                        for q in 0..3 {
                            y[j][q] += h / 6.0 * (a[j][q] + 2.0 * b[j][q] + 2.0 * c[j][q] + d[j][q]);
                        }
                    }
                }
                y
            }
        }
    }
}

// ---------------------------------------------------------------- surfaces

/// A reference surface given only by its position map.
pub struct SurfaceOracle {
    pub position: Box<dyn Fn(f64, f64) -> V3 + Send + Sync>,
}

/// Frame coefficients rebuilt from finite differences of the position map.
#[derive(Debug, Clone, Copy)]
pub struct OracleFrame {
    pub a: V3,
    pub b: V3,
    pub m: [[f64; 2]; 2],
    pub g: f64,
    pub c: [f64; 4],
}

impl SurfaceOracle {
    pub fn tube(curve: CurveOracle, radius: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> SurfaceOracle {
        SurfaceOracle {
            position: Box::new(move |th, s| {
                let [c, _, m1, m2] = curve.eval(s);
                let r = radius(th, s);
                add(c, add(mul(r * th.cos(), m1), mul(r * th.sin(), m2)))
            }),
        }
    }

    pub fn sphere(r: f64) -> SurfaceOracle {
        SurfaceOracle {
            position: Box::new(move |p, t| [r * p.sin() * t.cos(), r * p.sin() * t.sin(), r * p.cos()]),
        }
    }

    pub fn plate() -> SurfaceOracle {
        SurfaceOracle { position: Box::new(|x, y| [x, y, 0.0]) }
    }

    /// (ê1, ê2, n̂) with ê1 along ∂P/∂η1 and n̂ along ∂P/∂η1 × ∂P/∂η2.
    pub fn frame(&self, e1: f64, e2: f64) -> [V3; 3] {
        let h = 1e-4;
        let p1 = d5(|x| (self.position)(x, e2), e1, h);
        let p2 = d5(|y| (self.position)(e1, y), e2, h);
        let t1 = unit(p1);
        let n = unit(cross(p1, p2));
        [t1, cross(n, t1), n]
    }

    pub fn point(&self, e1: f64, e2: f64, zeta: f64) -> V3 {
        add((self.position)(e1, e2), mul(zeta, self.frame(e1, e2)[2]))
    }

    pub fn coefficients(&self, e1: f64, e2: f64, zeta: f64) -> OracleFrame {
        let h = 2e-3;
        let f = self.frame(e1, e2);
        let d1: [V3; 3] = std::array::from_fn(|k| d5(|x| self.frame(x, e2)[k], e1, h));
        let d2: [V3; 3] = std::array::from_fn(|k| d5(|y| self.frame(e1, y)[k], e2, h));
        let a = [dot(f[1], d1[0]), dot(f[2], d1[0]), dot(f[2], d1[1])];
        let b = [dot(f[1], d2[0]), dot(f[2], d2[0]), dot(f[2], d2[1])];
        let x1 = d5(|x| (self.position)(x, e2), e1, 1e-4);
        let x2 = d5(|y| (self.position)(e1, y), e2, 1e-4);
        let dx = [add(x1, mul(zeta, d1[2])), add(x2, mul(zeta, d2[2]))];
        let m = [[dot(f[0], dx[0]), dot(f[0], dx[1])], [dot(f[1], dx[0]), dot(f[1], dx[1])]];
        let g = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        OracleFrame { a, b, m, g, c: [m[1][1] / g, -m[0][1] / g, -m[1][0] / g, m[0][0] / g] }
    }
}

/// Test geometries paired with oracles describing the same surface.
pub struct GeometryCase {
    pub name: &'static str,
    pub kind: GeometryKind,
    pub oracle: SurfaceOracle,
    pub eta1: [f64; 2],
    pub eta2: [f64; 2],
    pub thickness: f64,
}

fn field(s: &str) -> Field {
    Field::parse(s).unwrap()
}

pub fn geometry_cases() -> Vec<GeometryCase> {
    let tp = std::f64::consts::PI * 2.0;
    let r2 = 0.5f64.sqrt();
    vec![
        GeometryCase {
            name: "plate",
            kind: GeometryKind::Plate,
            oracle: SurfaceOracle::plate(),
            eta1: [0.0, 1.0],
            eta2: [0.0, 1.0],
            thickness: 0.1,
        },
        GeometryCase {
            name: "sphere",
            kind: GeometryKind::Sphere { radius: 2.0 },
            oracle: SurfaceOracle::sphere(2.0),
            eta1: [0.4, 2.6],
            eta2: [0.0, tp],
            thickness: 0.1,
        },
        GeometryCase {
            name: "cylinder",
            kind: GeometryKind::Cylinder { radius: 1.3 },
            oracle: SurfaceOracle::tube(CurveOracle::Straight, |_, _| 1.3),
            eta1: [0.0, tp],
            eta2: [0.0, 2.0],
            thickness: 0.1,
        },
        GeometryCase {
            name: "surface_of_revolution",
            kind: GeometryKind::SurfaceOfRevolution { radius: field("1 + 0.3*sin(s)") },
            oracle: SurfaceOracle::tube(CurveOracle::Straight, |_, s| 1.0 + 0.3 * s.sin()),
            eta1: [0.0, tp],
            eta2: [0.0, 3.0],
            thickness: 0.1,
        },
        GeometryCase {
            name: "constant_tube",
            kind: GeometryKind::ConstantTube {
                radius: 0.3,
                curve: CurveFrame::frenet(Field::constant(0.5), Field::constant(-0.5)).with_placement(
                    [1.0, 0.0, 0.0],
                    [0.0, r2, r2],
                    [-1.0, 0.0, 0.0],
                ),
            },
            oracle: SurfaceOracle::tube(
                CurveOracle::Constant { k: [0.5, 0.0, -0.5], origin: [1.0, 0.0, 0.0], t0: [0.0, r2, r2], m10: [-1.0, 0.0, 0.0] },
                |_, _| 0.3,
            ),
            eta1: [0.0, tp],
            eta2: [0.0, 3.0],
            thickness: 0.05,
        },
        GeometryCase {
            name: "circular_tube",
            kind: GeometryKind::CircularTube {
                radius: field("0.3 + 0.05*s"),
                curve: CurveFrame::cartan(Field::constant(0.5), Field::constant(0.2), Field::constant(-0.4)),
            },
            oracle: SurfaceOracle::tube(
                CurveOracle::Constant { k: [0.5, 0.2, -0.4], origin: [0.0; 3], t0: [0.0, 0.0, 1.0], m10: [1.0, 0.0, 0.0] },
                |_, s| 0.3 + 0.05 * s,
            ),
            eta1: [0.0, tp],
            eta2: [0.0, 3.0],
            thickness: 0.05,
        },
        GeometryCase {
            name: "circular_tube_varying_curve",
            kind: GeometryKind::CircularTube {
                radius: field("0.3 + 0.05*sin(s)"),
                curve: CurveFrame::cartan(field("0.4 + 0.1*s"), field("0.1*cos(s)"), Field::constant(0.3)),
            },
            oracle: SurfaceOracle::tube(
                CurveOracle::Varying(Box::new(|s| [0.4 + 0.1 * s, 0.1 * s.cos(), 0.3])),
                |_, s| 0.3 + 0.05 * s.sin(),
            ),
            eta1: [0.0, tp],
            eta2: [0.0, 2.5],
            thickness: 0.05,
        },
        GeometryCase {
            name: "general_tube",
            kind: GeometryKind::GeneralTube {
                radius: field("0.3 + 0.05*cos(theta) + 0.02*s*sin(2*theta)"),
                curve: CurveFrame::cartan(field("0.4 + 0.1*s"), field("0.1*cos(s)"), field("0.3 - 0.05*s")),
            },
            oracle: SurfaceOracle::tube(
                CurveOracle::Varying(Box::new(|s| [0.4 + 0.1 * s, 0.1 * s.cos(), 0.3 - 0.05 * s])),
                |th, s| 0.3 + 0.05 * th.cos() + 0.02 * s * (2.0 * th).sin(),
            ),
            eta1: [0.0, tp],
            eta2: [0.0, 2.5],
            thickness: 0.05,
        },
    ]
}

// ---------------------------------------------------------------- tensors

pub fn m3(v: &[f64; 9]) -> M3 {
    [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]
}
pub fn v9(m: &M3) -> [f64; 9] {
    [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]]
}
pub fn mm(a: &M3, b: &M3) -> M3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}
pub fn tr(a: &M3) -> M3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}
pub fn madd(a: &M3, b: &M3) -> M3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + b[i][j]))
}
pub fn trace(a: &M3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}
pub fn eye() -> M3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}
/// Determinant by the rule of Sarrus.
pub fn det(a: &M3) -> f64 {
    a[0][0] * a[1][1] * a[2][2] + a[0][1] * a[1][2] * a[2][0] + a[0][2] * a[1][0] * a[2][1]
        - a[0][2] * a[1][1] * a[2][0]
        - a[0][0] * a[1][2] * a[2][1]
        - a[0][1] * a[1][0] * a[2][2]
}
/// Cofactor matrix from 2×2 minors.
pub fn cof(a: &M3) -> M3 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let r: Vec<usize> = (0..3).filter(|&x| x != i).collect();
            let c: Vec<usize> = (0..3).filter(|&x| x != j).collect();
            let minor = a[r[0]][c[0]] * a[r[1]][c[1]] - a[r[0]][c[1]] * a[r[1]][c[0]];
            if (i + j) % 2 == 0 {
                minor
            } else {
                -minor
            }
        })
    })
}

/// (I1, I2, J) with I1 = tr C, I2 = tr C², J = det F.
pub fn invariants_of(f: &M3) -> (f64, f64, f64) {
    let c = mm(&tr(f), f);
    (trace(&c), trace(&mm(&c, &c)), det(f))
}

/// Strain energies written directly in F.
pub fn energy(model: &MaterialModel, f: &M3) -> f64 {
    let (i1, i2, j) = invariants_of(f);
    match *model {
        MaterialModel::SaintVenantKirchhoff { lambda, mu } => {
            let c = mm(&tr(f), f);
            let e: M3 = std::array::from_fn(|i| std::array::from_fn(|k| 0.5 * (c[i][k] - eye()[i][k])));
            0.5 * lambda * trace(&e).powi(2) + mu * trace(&mm(&e, &e))
        }
        MaterialModel::NeoHookean { lambda, mu } => 0.5 * mu * (i1 - 3.0) - mu * j.ln() + 0.5 * lambda * j.ln().powi(2),
        MaterialModel::MooneyRivlin { c1, c2, bulk } => {
            let s = j.powf(-2.0 / 3.0);
            c1 * (s * i1 - 3.0) + c2 * (0.5 * s * (i1 * i1 - i2) - 3.0) + 0.5 * bulk * (j - 1.0).powi(2)
        }
    }
}

/// Energy as a function of the invariants, for derivative checks.
pub fn energy_invariants(model: &MaterialModel, i1: f64, i2: f64, j: f64) -> f64 {
    match *model {
        MaterialModel::SaintVenantKirchhoff { lambda, mu } => 0.25 * mu * (i2 - 2.0 * i1 + 3.0) + lambda / 8.0 * (i1 - 3.0).powi(2),
        MaterialModel::NeoHookean { lambda, mu } => 0.5 * mu * (i1 - 3.0) - mu * j.ln() + 0.5 * lambda * j.ln().powi(2),
        MaterialModel::MooneyRivlin { c1, c2, bulk } => {
            let s = j.powf(-2.0 / 3.0);
            c1 * (s * i1 - 3.0) + c2 * (0.5 * s * (i1 * i1 - i2) - 3.0) + 0.5 * bulk * (j - 1.0).powi(2)
        }
    }
}

pub fn materials() -> Vec<MaterialModel> {
    vec![
        MaterialModel::SaintVenantKirchhoff { lambda: 1.7, mu: 0.9 },
        MaterialModel::NeoHookean { lambda: 1.7, mu: 0.9 },
        MaterialModel::MooneyRivlin { c1: 0.4, c2: 0.1, bulk: 2.5 },
    ]
}

/// |a − b| ≤ rel · max(|a|, |b|, floor).
pub fn rel_close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
}

// ---------------------------------------------------------------- thickness basis

/// Thickness functions evaluated without the crate.
pub fn thickness_functions(family: BasisFamily, order: usize, zeta: f64, bounds: (f64, f64)) -> Vec<f64> {
    match family {
        BasisFamily::Monomial => (0..=order).map(|i| zeta.powi(i as i32)).collect(),
        BasisFamily::Legendre => {
            let x = (zeta - 0.5 * (bounds.0 + bounds.1)) / (0.5 * (bounds.1 - bounds.0));
            let p = [1.0, x, 0.5 * (3.0 * x * x - 1.0), 0.5 * (5.0 * x * x * x - 3.0 * x), (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0];
            assert!(order < p.len());
            p[..=order].to_vec()
        }
    }
}

// ---------------------------------------------------------------- models

pub fn base_spec(kind: GeometryKind, eta1: [f64; 2], eta2: [f64; 2], thickness: f64, material: MaterialModel) -> ModelSpec {
    ModelSpec {
        geometry: kind,
        eta1,
        eta2,
        thickness,
        family: BasisFamily::Monomial,
        orders: [1, 1, 2],
        material,
        elements: [1, 1],
        element_order: 2,
        periodic: Some(false),
        plane_points: None,
        thickness_points: None,
        bcs: vec![],
        pins: vec![],
        loads: LoadCase::default(),
    }
}

pub fn fixed(edge: Edge) -> BoundaryCondition {
    BoundaryCondition { edge, kind: BcKind::Fixed }
}

// ---------------------------------------------------------------- material/kinematics checks

use hyshell::kinematics as kin;

fn fd9<F: Fn(&[f64; 9]) -> f64>(f: F, l: &[f64; 9], k: usize, h: f64) -> f64 {
    d5s(
        |t| {
            let mut x = *l;
            x[k] += t;
            f(&x)
        },
        0.0,
        h,
    )
}

fn f_of(l: &[f64; 9]) -> M3 {
    madd(&m3(l), &eye())
}

fn worst(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}

/// Worst relative errors of one random state: (β, β_{n,i}, ψ, J, dI, B-matrices, stress, tangent).
#[derive(Debug, Clone, Copy, Default)]
pub struct MaterialErrors {
    pub beta: f64,
    pub beta_derivs: f64,
    pub psi: f64,
    pub jacobian: f64,
    pub invariant_derivs: f64,
    pub b_matrices: f64,
    pub stress: f64,
    pub tangent: f64,
    pub secant: f64,
}

impl MaterialErrors {
    pub fn max(self, o: MaterialErrors) -> MaterialErrors {
        MaterialErrors {
            beta: self.beta.max(o.beta),
            beta_derivs: self.beta_derivs.max(o.beta_derivs),
            psi: self.psi.max(o.psi),
            jacobian: self.jacobian.max(o.jacobian),
            invariant_derivs: self.invariant_derivs.max(o.invariant_derivs),
            b_matrices: self.b_matrices.max(o.b_matrices),
            stress: self.stress.max(o.stress),
            tangent: self.tangent.max(o.tangent),
            secant: self.secant.max(o.secant),
        }
    }
}

/// Random displacement gradient with det F bounded away from zero.
pub fn random_gradient<R: rand::Rng>(rng: &mut R, amp: f64) -> [f64; 9] {
    loop {
        let l: [f64; 9] = std::array::from_fn(|_| rng.gen_range(-amp..amp));
        if det(&f_of(&l)) > 0.3 {
            return l;
        }
    }
}

pub fn material_errors(model: &MaterialModel, l: &[f64; 9]) -> MaterialErrors {
    let f = f_of(l);
    let (i1, i2, j) = invariants_of(&f);
    let resp = model.evaluate(i1, i2, j).unwrap();
    let mut e = MaterialErrors::default();

    // β_n = (2, 4, 1)_n ∂ψ/∂I_n
    let scale = [2.0, 4.0, 1.0];
    let inv = [i1, i2, j];
    let psi_at = |k: usize, t: f64| {
        let mut v = inv;
        v[k] += t;
        energy_invariants(model, v[0], v[1], v[2])
    };
    let fd_beta: Vec<f64> = (0..3).map(|k| scale[k] * d5s(|t| psi_at(k, t), 0.0, 1e-4 * (1.0 + inv[k].abs()))).collect();
    e.beta = worst(&resp.beta, &fd_beta);
    let mut got = vec![];
    let mut want = vec![];
    for n in 0..3 {
        for i in 0..3 {
            got.push(resp.beta_derivs[n][i]);
            want.push(
                scale[i]
                    * d5s(
                        |t| {
                            let mut v = inv;
                            v[i] += t;
                            model.evaluate(v[0], v[1], v[2]).unwrap().beta[n]
                        },
                        0.0,
                        1e-4 * (1.0 + inv[i].abs()),
                    ),
            );
        }
    }
    e.beta_derivs = worst(&got, &want);
    e.psi = (resp.psi - energy(model, &f)).abs() / energy(model, &f).abs().max(1e-12);

    e.jacobian = (kin::jacobian(l) - det(&f)).abs() / det(&f).abs();

    let d = kin::invariant_derivatives(l);
    let h = 1e-4;
    let fd_i1: Vec<f64> = (0..9).map(|k| fd9(|x| invariants_of(&f_of(x)).0, l, k, h)).collect();
    let fd_i2: Vec<f64> = (0..9).map(|k| fd9(|x| invariants_of(&f_of(x)).1, l, k, h)).collect();
    let fd_j: Vec<f64> = (0..9).map(|k| fd9(|x| invariants_of(&f_of(x)).2, l, k, h)).collect();
    e.invariant_derivs = worst(&d.d_i1, &fd_i1).max(worst(&d.d_i2, &fd_i2)).max(worst(&d.d_j, &fd_j));

    // B2, B3, G_cof columns from direct matrix algebra
    let lm = m3(l);
    let q = |a: &M3| madd(&madd(&mm(&tr(a), a), &mm(a, a)), &mm(a, &tr(a)));
    let mut err: f64 = 0.0;
    for k in 0..9 {
        let mut ev = [0.0; 9];
        ev[k] = 1.0;
        let em = m3(&ev);
        let le = madd(&lm, &em);
        let pol = |g: &dyn Fn(&M3) -> M3| -> [f64; 9] {
            let (x, y, z) = (v9(&g(&le)), v9(&g(&lm)), v9(&g(&em)));
            std::array::from_fn(|i| x[i] - y[i] - z[i])
        };
        let b2col = pol(&q);
        let gcol = pol(&cof);
        let b3m = madd(&madd(&mm(&em, &mm(&tr(&lm), &lm)), &mm(&lm, &mm(&tr(&em), &lm))), &mm(&lm, &mm(&tr(&lm), &em)));
        let b3col = v9(&b3m);
        let col = |m: &kin::M9| -> Vec<f64> { (0..9).map(|i| m[i][k]).collect() };
        err = err.max(worst(&col(&d.b2), &b2col)).max(worst(&col(&d.b3), &b3col)).max(worst(&col(&d.gcof), &gcol));
        // B1 and G0: linear parts of F C and cof F
        let lin_fc = v9(&madd(&madd(&em, &em), &tr(&em)));
        let lin_cof: [f64; 9] = std::array::from_fn(|i| trace(&em) * v9(&eye())[i] - v9(&tr(&em))[i]);
        err = err.max(worst(&col(&d.b1), &lin_fc)).max(worst(&col(&d.g0), &lin_cof));
    }
    e.b_matrices = err;

    // stress = ∂ψ/∂L̃ and tangent = ∂S/∂L̃
    let pr = hyshell::material::point_response(model, l, true, true).unwrap();
    let fd_s: Vec<f64> = (0..9).map(|k| fd9(|x| energy(model, &f_of(x)), l, k, h)).collect();
    e.stress = worst(&pr.stress, &fd_s);
    let t = pr.tangent.unwrap();
    let mut got = vec![];
    let mut want = vec![];
    for c in 0..9 {
        for r in 0..9 {
            got.push(t[r][c]);
            want.push(fd9(|x| hyshell::material::point_response(model, x, false, false).unwrap().stress[r], l, c, h));
        }
    }
    e.tangent = worst(&got, &want);
    // S = (β1+β2+β3) Ĩ + B̂0 L̃
    let bs: f64 = resp.beta.iter().sum();
    let b0 = pr.secant.unwrap();
    let rebuilt: Vec<f64> = (0..9).map(|r| bs * v9(&eye())[r] + (0..9).map(|c| b0[r][c] * l[c]).sum::<f64>()).collect();
    e.secant = worst(&pr.stress, &rebuilt);
    e
}

// ---------------------------------------------------------------- assembled-model checks

use hyshell::assembly::Assembler;
use hyshell::mesh::ShellModel;

/// Random admissible full state: order-k coefficients scaled so every gradient entry is O(amp).
pub fn random_state<R: rand::Rng>(model: &ShellModel, rng: &mut R, amp: f64) -> Vec<f64> {
    let half = 0.5 * model.thickness;
    (0..model.n_full())
        .map(|g| {
            let (_, ld) = model.local_dof(g);
            let s = match model.basis.family {
                BasisFamily::Monomial if ld.order > 0 => half / half.powi(ld.order as i32),
                _ => half,
            };
            amp * s * rng.gen_range(-1.0..1.0)
        })
        .collect()
}

/// Worst entrywise FD mismatch and relative asymmetry of the reduced tangent.
pub struct TangentErrors {
    pub fd: f64,
    pub symmetry: f64,
    pub n: usize,
}

pub fn tangent_errors(model: &ShellModel, u: &[f64]) -> TangentErrors {
    let asm = Assembler::new(model).unwrap();
    let ev = asm.evaluate(u, true).unwrap();
    let t = asm.to_dense(ev.tangent.as_ref().unwrap());
    let free = &model.dofs.free;
    let n = free.len();
    let tmax = t.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut fd_err: f64 = 0.0;
    for (c, &gc) in free.iter().enumerate() {
        let h = 1e-6 * (1.0 + u[gc].abs());
        let mut up = u.to_vec();
        up[gc] += h;
        let mut um = u.to_vec();
        um[gc] -= h;
        let rp = model.dofs.restrict_vec(&asm.evaluate(&up, false).unwrap().internal);
        let rm = model.dofs.restrict_vec(&asm.evaluate(&um, false).unwrap().internal);
        for r in 0..n {
            let fd = (rp[r] - rm[r]) / (2.0 * h);
            let scale = t[r][c].abs().max(fd.abs()).max(1e-6 * tmax);
            fd_err = fd_err.max((t[r][c] - fd).abs() / scale);
        }
    }
    let mut sym: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            sym = sym.max((t[r][c] - t[c][r]).abs() / tmax);
        }
    }
    TangentErrors { fd: fd_err, symmetry: sym, n }
}

/// One-element models for every geometry kind.
pub fn single_element_specs(material: &MaterialModel) -> Vec<(&'static str, ModelSpec)> {
    geometry_cases()
        .into_iter()
        .map(|c| {
            // keep the patch small enough that the frame varies smoothly across it
            let e1 = [c.eta1[0] + 0.1, c.eta1[0] + 0.1 + (c.eta1[1] - c.eta1[0]).min(1.2)];
            let e2 = [c.eta2[0] + 0.1, c.eta2[0] + 0.1 + (c.eta2[1] - c.eta2[0]).min(1.2)];
            (c.name, base_spec(c.kind, e1, e2, c.thickness, material.clone()))
        })
        .collect()
}

/// Pinched hyperboloid: R(s) = R1 sqrt(1 + (s/c)²) with R(±L/2) = R2, loads ±F at s = 0.
/// `eighth` models θ ∈ [0, π/2], s ∈ [0, L/2]; otherwise θ spans the full ring over s ∈ [0, L/2]
/// with a mirror at s = 0 and two u_θ pins against rigid motion.
pub fn hyperboloid_spec(eighth: bool, elements: [usize; 2], order: usize, force: f64) -> ModelSpec {
    use hyshell::mesh::{NodePin, NodeSelector, PointLoad};
    use std::f64::consts::PI;
    let (l, r1, r2, h) = (40.0f64, 7.5f64, 15.0f64, 0.04);
    let c = 0.5 * l / ((r2 / r1).powi(2) - 1.0).sqrt();
    let kind = GeometryKind::SurfaceOfRevolution { radius: field(&format!("{r1}*sqrt(1 + (s/{c})^2)")) };
    let mu = 1.6e6;
    let material = MaterialModel::NeoHookean { lambda: hyshell::material::lame_lambda(mu, 0.25), mu };
    let quarter = [0.0, 0.5 * PI, PI, 1.5 * PI];
    let mut spec = base_spec(kind, [0.0, if eighth { 0.5 * PI } else { 2.0 * PI }], [0.0, 0.5 * l], h, material);
    spec.element_order = order;
    spec.elements = if eighth { elements } else { [4 * elements[0], elements[1]] };
    spec.periodic = Some(!eighth);
    spec.loads.scale_on_symmetry = true;
    let n = if eighth { 2 } else { 4 };
    spec.loads.point_loads = quarter[..n]
        .iter()
        .enumerate()
        .map(|(k, &t)| PointLoad { at: NodeSelector::At([t, 0.0]), force: [0.0, 0.0, if k % 2 == 0 { -force } else { force }] })
        .collect();
    spec.bcs = vec![BoundaryCondition { edge: Edge::Eta2Min, kind: BcKind::SymmetryEta2 }];
    if eighth {
        spec.bcs.push(BoundaryCondition { edge: Edge::Eta1Min, kind: BcKind::SymmetryEta1 });
        spec.bcs.push(BoundaryCondition { edge: Edge::Eta1Max, kind: BcKind::SymmetryEta1 });
    } else {
        spec.pins = [0.0, 0.5 * PI].iter().map(|&t| NodePin { at: NodeSelector::At([t, 0.0]), family: 0, orders: None }).collect();
    }
    spec
}

/// Worst relative coefficient mismatch along the specialisation chains
/// general → circular → constant tube → (κ = 0) cylinder and revolution → cylinder,
/// each link compared at `points` random (θ, s, ζ).
pub fn reduction_chain_errors(points: usize, seed: u64) -> Vec<(&'static str, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let curve = CurveFrame::cartan(field("0.3 + 0.1*sin(s)"), field("-0.2*cos(0.5*s)"), field("0.4 - 0.05*s"));
    let radius = "0.5 + 0.1*sin(1.3*s)";
    let r0 = 0.45;
    let zero = CurveFrame::cartan(Field::constant(0.0), Field::constant(0.0), Field::constant(0.0));
    let links: Vec<(&'static str, GeometryKind, GeometryKind)> = vec![
        (
            "general_tube -> circular_tube",
            GeometryKind::GeneralTube { radius: field(radius), curve: curve.clone() },
            GeometryKind::CircularTube { radius: field(radius), curve: curve.clone() },
        ),
        (
            "circular_tube -> constant_tube",
            GeometryKind::CircularTube { radius: Field::constant(r0), curve: curve.clone() },
            GeometryKind::ConstantTube { radius: r0, curve: curve.clone() },
        ),
        (
            "constant_tube(kappa = 0) -> cylinder",
            GeometryKind::ConstantTube { radius: r0, curve: zero },
            GeometryKind::Cylinder { radius: r0 },
        ),
        (
            "surface_of_revolution -> cylinder",
            GeometryKind::SurfaceOfRevolution { radius: Field::constant(r0) },
            GeometryKind::Cylinder { radius: r0 },
        ),
        (
            "circular_tube(straight) -> surface_of_revolution",
            GeometryKind::CircularTube { radius: field(radius), curve: CurveFrame::straight() },
            GeometryKind::SurfaceOfRevolution { radius: field(radius) },
        ),
    ];
    links
        .into_iter()
        .map(|(name, a, b)| {
            let mut worst: f64 = 0.0;
            for _ in 0..points {
                let th = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                let s = rng.gen_range(0.0..3.0);
                let z = rng.gen_range(-0.02..0.02);
                let da = a.frame_coefficients(th, s, z).unwrap();
                let db = b.frame_coefficients(th, s, z).unwrap();
                worst = worst.max(da.max_rel_diff(&db));
            }
            (name, worst)
        })
        .collect()
}
