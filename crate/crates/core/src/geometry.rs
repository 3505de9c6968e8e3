//! Orthonormal moving-frame coefficients for the supported reference surfaces.
//!
//! Every geometry reduces to the same set of numbers at a point: the
//! connection coefficients `a`, `b` of the frame (derivatives of the frame
//! vectors along the two surface coordinates), the inverse metric block `c`
//! and the volume density `g`. Tubes additionally expose their α, ξ and κ̂
//! intermediates.

use crate::error::{Result, ShellError};
use crate::expr::{Field, Var};
use serde::Serialize;

pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn axpy(alpha: f64, x: Vec3, y: Vec3) -> Vec3 {
    [y[0] + alpha * x[0], y[1] + alpha * x[1], y[2] + alpha * x[2]]
}

pub(crate) fn scale(alpha: f64, x: Vec3) -> Vec3 {
    [alpha * x[0], alpha * x[1], alpha * x[2]]
}

pub(crate) fn norm(x: Vec3) -> f64 {
    dot(x, x).sqrt()
}

pub(crate) fn normalize(x: Vec3) -> Vec3 {
    scale(1.0 / norm(x), x)
}

/// Reference curve of a tube, framed by (T, M1, M2) with Cartan components κ1, κ2, κ3.
#[derive(Debug, Clone)]
pub struct CurveFrame {
    pub kappa1: Field,
    pub kappa2: Field,
    pub kappa3: Field,
    /// Cartesian placement of the curve at s = 0.
    pub origin: Vec3,
    pub tangent: Vec3,
    pub normal: Vec3,
}

/// Position and frame of the reference curve at one arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub position: Vec3,
    pub t: Vec3,
    pub m1: Vec3,
    pub m2: Vec3,
}

impl CurveFrame {
    /// Straight axis along +z, with M1 = x and M2 = y.
    pub fn straight() -> CurveFrame {
        CurveFrame {
            kappa1: Field::constant(0.0),
            kappa2: Field::constant(0.0),
            kappa3: Field::constant(0.0),
            origin: [0.0; 3],
            tangent: [0.0, 0.0, 1.0],
            normal: [1.0, 0.0, 0.0],
        }
    }

    pub fn cartan(kappa1: Field, kappa2: Field, kappa3: Field) -> CurveFrame {
        CurveFrame { kappa1, kappa2, kappa3, ..CurveFrame::straight() }
    }

    /// Frenet frame: M1 is the principal normal, M2 the binormal.
    pub fn frenet(curvature: Field, torsion: Field) -> CurveFrame {
        CurveFrame::cartan(curvature, Field::constant(0.0), torsion)
    }

    pub fn with_placement(mut self, origin: Vec3, tangent: Vec3, normal: Vec3) -> CurveFrame {
        self.origin = origin;
        self.tangent = tangent;
        self.normal = normal;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("kappa1", &self.kappa1), ("kappa2", &self.kappa2), ("kappa3", &self.kappa3)] {
            if k.depends_on(Var::Theta) {
                return Err(ShellError::InvalidGeometry(format!(
                    "{name} must be a function of s only"
                )));
            }
        }
        let t = norm(self.tangent);
        let n = norm(self.normal);
        if (t - 1.0).abs() > 1e-8 || (n - 1.0).abs() > 1e-8 || dot(self.tangent, self.normal).abs() > 1e-8 {
            return Err(ShellError::InvalidGeometry(
                "curve tangent and normal must be orthonormal".into(),
            ));
        }
        Ok(())
    }

    pub fn is_straight(&self) -> bool {
        [&self.kappa1, &self.kappa2, &self.kappa3]
            .iter()
            .all(|k| k.expr().as_const() == Some(0.0))
    }

    /// κ values and their s-derivatives.
    pub fn kappas(&self, s: f64) -> ([f64; 3], [f64; 3]) {
        let k1 = self.kappa1.eval(0.0, s);
        let k2 = self.kappa2.eval(0.0, s);
        let k3 = self.kappa3.eval(0.0, s);
        ([k1.v, k2.v, k3.v], [k1.s, k2.s, k3.s])
    }

    /// Integrates the frame equations from s = 0 with classical RK4.
    pub fn point(&self, s: f64) -> CurvePoint {
        let m2 = cross(self.tangent, self.normal);
        let start = CurvePoint { position: self.origin, t: self.tangent, m1: self.normal, m2 };
        if self.is_straight() {
            return CurvePoint { position: axpy(s, self.tangent, self.origin), ..start };
        }
        let steps = ((s.abs() / 2e-3).ceil() as usize).max(1);
        let h = s / steps as f64;
        let rhs = |s: f64, y: &[Vec3; 4]| -> [Vec3; 4] {
            let ([k1, k2, k3], _) = self.kappas(s);
            let [_, t, m1, m2] = *y;
            [
                t,
                axpy(k2, m2, scale(k1, m1)),
                axpy(k3, m2, scale(-k1, t)),
                axpy(-k3, m1, scale(-k2, t)),
            ]
        };
        let comb = |y: &[Vec3; 4], k: &[Vec3; 4], a: f64| -> [Vec3; 4] {
            [axpy(a, k[0], y[0]), axpy(a, k[1], y[1]), axpy(a, k[2], y[2]), axpy(a, k[3], y[3])]
        };
        let mut y = [start.position, start.t, start.m1, start.m2];
        for i in 0..steps {
            let s0 = i as f64 * h;
            let k1 = rhs(s0, &y);
            let k2 = rhs(s0 + 0.5 * h, &comb(&y, &k1, 0.5 * h));
            let k3 = rhs(s0 + 0.5 * h, &comb(&y, &k2, 0.5 * h));
            let k4 = rhs(s0 + h, &comb(&y, &k3, h));
            for j in 0..4 {
                for c in 0..3 {
                    y[j][c] += h / 6.0 * (k1[j][c] + 2.0 * k2[j][c] + 2.0 * k3[j][c] + k4[j][c]);
                }
            }
        }
        // restore orthonormality lost to truncation
        let t = normalize(y[1]);
        let m1 = normalize(axpy(-dot(y[2], t), t, y[2]));
        let m2 = cross(t, m1);
        CurvePoint { position: y[0], t, m1, m2 }
    }
}

/// Reference-surface description. Tube-family surfaces use (η1, η2) = (θ, s);
/// the sphere uses (φ, θ); the plate uses (x, y).
#[derive(Debug, Clone)]
pub enum GeometryKind {
    GeneralTube { radius: Field, curve: CurveFrame },
    CircularTube { radius: Field, curve: CurveFrame },
    ConstantTube { radius: f64, curve: CurveFrame },
    SurfaceOfRevolution { radius: Field },
    Cylinder { radius: f64 },
    Sphere { radius: f64 },
    Plate,
}

/// Intermediate quantities of the tube family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TubeCoefficients {
    pub alpha: [f64; 5],
    pub xi: f64,
    pub kappa_hat: [f64; 2],
}

/// Local geometric coefficients at one point (η1, η2, ζ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FramePointData {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 4],
    pub g: f64,
    pub tube: Option<TubeCoefficients>,
}

impl FramePointData {
    /// Largest relative difference over a, b, c and g.
    pub fn max_rel_diff(&self, other: &FramePointData) -> f64 {
        let a: Vec<f64> = self.a.iter().chain(&self.b).chain(&self.c).chain([&self.g]).copied().collect();
        let b: Vec<f64> = other.a.iter().chain(&other.b).chain(&other.c).chain([&other.g]).copied().collect();
        let scale = a.iter().chain(&b).fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / scale))
    }
}

pub fn volume_weight(data: &FramePointData) -> f64 {
    data.g
}

fn finish(
    a: [f64; 3],
    b: [f64; 3],
    m: [[f64; 2]; 2],
    tube: Option<TubeCoefficients>,
    at: (f64, f64, f64),
) -> Result<FramePointData> {
    let g = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(g > 0.0) || !g.is_finite() {
        return Err(ShellError::NonpositiveJacobian {
            value: g,
            context: format!("volume element at (eta1={}, eta2={}, zeta={})", at.0, at.1, at.2),
        });
    }
    let c = [m[1][1] / g, -m[0][1] / g, -m[1][0] / g, m[0][0] / g];
    Ok(FramePointData { a, b, c, g, tube })
}

fn check_radius(r: f64, at: (f64, f64)) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(ShellError::DomainError(format!(
            "radius {r} is not positive at (eta1={}, eta2={})",
            at.0, at.1
        )));
    }
    Ok(())
}

impl GeometryKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeometryKind::GeneralTube { .. } => "general_tube",
            GeometryKind::CircularTube { .. } => "circular_tube",
            GeometryKind::ConstantTube { .. } => "constant_tube",
            GeometryKind::SurfaceOfRevolution { .. } => "surface_of_revolution",
            GeometryKind::Cylinder { .. } => "cylinder",
            GeometryKind::Sphere { .. } => "sphere",
            GeometryKind::Plate => "plate",
        }
    }

    /// True when η1 is the circumferential angle θ of a closed cross-section.
    pub fn is_tube_family(&self) -> bool {
        !matches!(self, GeometryKind::Sphere { .. } | GeometryKind::Plate)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GeometryKind::GeneralTube { curve, .. } => curve.validate(),
            GeometryKind::CircularTube { radius, curve } => {
                if radius.depends_on(Var::Theta) {
                    return Err(ShellError::InvalidGeometry(
                        "circular tube radius must not depend on theta".into(),
                    ));
                }
                curve.validate()
            }
            GeometryKind::ConstantTube { radius, curve } => {
                check_radius(*radius, (0.0, 0.0))?;
                curve.validate()
            }
            GeometryKind::SurfaceOfRevolution { radius } => {
                if radius.depends_on(Var::Theta) {
                    return Err(ShellError::InvalidGeometry(
                        "surface of revolution radius must not depend on theta".into(),
                    ));
                }
                Ok(())
            }
            GeometryKind::Cylinder { radius } | GeometryKind::Sphere { radius } => check_radius(*radius, (0.0, 0.0)),
            GeometryKind::Plate => Ok(()),
        }
    }

    /// Smallest radius over a sampled parametric box, used for thickness sanity checks.
    pub fn min_radius(&self, eta1: [f64; 2], eta2: [f64; 2]) -> f64 {
        let sample = |f: &Field| {
            let mut m = f64::INFINITY;
            for i in 0..=16 {
                for j in 0..=16 {
                    let t = eta1[0] + (eta1[1] - eta1[0]) * i as f64 / 16.0;
                    let s = eta2[0] + (eta2[1] - eta2[0]) * j as f64 / 16.0;
                    m = m.min(f.value(t, s));
                }
            }
            m
        };
        match self {
            GeometryKind::GeneralTube { radius, .. }
            | GeometryKind::CircularTube { radius, .. }
            | GeometryKind::SurfaceOfRevolution { radius } => sample(radius),
            GeometryKind::ConstantTube { radius, .. }
            | GeometryKind::Cylinder { radius }
            | GeometryKind::Sphere { radius } => *radius,
            GeometryKind::Plate => f64::INFINITY,
        }
    }

    pub fn frame_coefficients(&self, eta1: f64, eta2: f64, zeta: f64) -> Result<FramePointData> {
        let at = (eta1, eta2, zeta);
        match self {
            GeometryKind::GeneralTube { radius, curve } => general_tube(radius, curve, eta1, eta2, zeta),
            GeometryKind::CircularTube { radius, curve } => {
                let (th, s) = (eta1, eta2);
                let rv = radius.eval(th, s);
                check_radius(rv.v, (th, s))?;
                let (r, rs, rss) = (rv.v, rv.s, rv.ss);
                let ([k1, k2, k3], [k1p, k2p, _]) = curve.kappas(s);
                let (sn, cs) = th.sin_cos();
                let kh1 = k1 * cs + k2 * sn;
                let kh2 = k1 * sn - k2 * cs;
                let xi = 1.0 - r * kh1;
                let xi_s = -rs * kh1 - r * (k1p * cs + k2p * sn);
                let a1r = -rs;
                let sq = (a1r * a1r + xi * xi).sqrt();
                let a4 = r * sq;
                if !(a4 > 0.0) {
                    return Err(ShellError::DomainError(format!("alpha4 vanishes at ({th}, {s})")));
                }
                let a = [-r * rs / a4, -xi / sq, a1r * r * kh2 / (sq * sq)];
                let b = [
                    r * k3 * a1r / a4 + xi * r * kh2 / a4,
                    -r * xi * k3 / a4 - r * kh2 * rs / a4,
                    kh1 + r * r * (xi * rss - rs * xi_s) / (a4 * a4),
                ];
                let m = [[r - a[1] * zeta, k3 * r - b[1] * zeta], [-a[2] * zeta, a4 / r - b[2] * zeta]];
                let tube = TubeCoefficients {
                    alpha: [a1r, r * cs, -r * sn, a4, r],
                    xi,
                    kappa_hat: [kh1, kh2],
                };
                finish(a, b, m, Some(tube), at)
            }
            GeometryKind::ConstantTube { radius, curve } => {
                let (th, s) = (eta1, eta2);
                let r = *radius;
                check_radius(r, (th, s))?;
                let ([k1, k2, k3], _) = curve.kappas(s);
                let (sn, cs) = th.sin_cos();
                let kh1 = k1 * cs + k2 * sn;
                let kh2 = k1 * sn - k2 * cs;
                let xi = 1.0 - r * kh1;
                if !(xi > 0.0) {
                    return Err(ShellError::DomainError(format!(
                        "tube radius exceeds the curve's radius of curvature at ({th}, {s})"
                    )));
                }
                let a = [0.0, -1.0, 0.0];
                let b = [kh2, -k3, kh1];
                let m = [[r + zeta, k3 * (r + zeta)], [0.0, xi - kh1 * zeta]];
                let tube = TubeCoefficients {
                    alpha: [0.0, r * cs, -r * sn, r * xi, r],
                    xi,
                    kappa_hat: [kh1, kh2],
                };
                finish(a, b, m, Some(tube), at)
            }
            GeometryKind::SurfaceOfRevolution { radius } => {
                let (th, s) = (eta1, eta2);
                let rv = radius.eval(th, s);
                check_radius(rv.v, (th, s))?;
                let (r, rs, rss) = (rv.v, rv.s, rv.ss);
                let sq = (rs * rs + 1.0).sqrt();
                let a4 = r * sq;
                let a = [-rs / sq, -1.0 / sq, 0.0];
                let b = [0.0, 0.0, r * r * rss / (a4 * a4)];
                let m = [[r - a[1] * zeta, 0.0], [0.0, sq - b[2] * zeta]];
                let (sn, cs) = th.sin_cos();
                let tube = TubeCoefficients {
                    alpha: [-rs, r * cs, -r * sn, a4, r],
                    xi: 1.0,
                    kappa_hat: [0.0, 0.0],
                };
                finish(a, b, m, Some(tube), at)
            }
            GeometryKind::Cylinder { radius } => {
                let r = *radius;
                check_radius(r, (eta1, eta2))?;
                let (sn, cs) = eta1.sin_cos();
                let tube = TubeCoefficients {
                    alpha: [0.0, r * cs, -r * sn, r, r],
                    xi: 1.0,
                    kappa_hat: [0.0, 0.0],
                };
                finish([0.0, -1.0, 0.0], [0.0; 3], [[r + zeta, 0.0], [0.0, 1.0]], Some(tube), at)
            }
            GeometryKind::Sphere { radius } => {
                let (phi, _) = (eta1, eta2);
                let (sp, cp) = phi.sin_cos();
                if sp.abs() < 1e-12 {
                    return Err(ShellError::DomainError(format!(
                        "sphere evaluated at a pole (phi = {phi})"
                    )));
                }
                let rz = radius + zeta;
                finish([0.0, -1.0, 0.0], [cp, 0.0, -sp], [[rz, 0.0], [0.0, rz * sp]], None, at)
            }
            GeometryKind::Plate => finish([0.0; 3], [0.0; 3], [[1.0, 0.0], [0.0, 1.0]], None, at),
        }
    }

    /// Cartesian frame (ê_η1, ê_η2, n̂) at a reference-surface point.
    pub fn frame_vectors(&self, eta1: f64, eta2: f64) -> [Vec3; 3] {
        match self {
            GeometryKind::Plate => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            GeometryKind::Sphere { .. } => {
                let (sp, cp) = eta1.sin_cos();
                let (st, ct) = eta2.sin_cos();
                [[ct * cp, st * cp, -sp], [-st, ct, 0.0], [ct * sp, st * sp, cp]]
            }
            _ => {
                let (th, s) = (eta1, eta2);
                let (r, rt, rs) = self.radius_derivs(th, s);
                let curve = self.curve();
                let cp = curve.point(s);
                let ([k1, k2, k3], _) = curve.kappas(s);
                let (sn, cs) = th.sin_cos();
                let xi = 1.0 - r * (k1 * cs + k2 * sn);
                let al1 = k3 * rt - rs;
                let al2 = rt * sn + r * cs;
                let al3 = rt * cs - r * sn;
                let al5 = (rt * rt + r * r).sqrt();
                let al4 = (r * r * al1 * al1 + xi * xi * al5 * al5).sqrt();
                let combo = |t: f64, m1: f64, m2: f64| -> Vec3 {
                    axpy(m2, cp.m2, axpy(m1, cp.m1, scale(t, cp.t)))
                };
                let e1 = combo(0.0, al3 / al5, al2 / al5);
                let e2 = combo(
                    xi * al5 / al4,
                    -r * al1 * al2 / (al5 * al4),
                    r * al1 * al3 / (al5 * al4),
                );
                let n = combo(r * al1 / al4, xi * al2 / al4, -xi * al3 / al4);
                [e1, e2, n]
            }
        }
    }

    /// Cartesian position of (η1, η2, ζ).
    pub fn position(&self, eta1: f64, eta2: f64, zeta: f64) -> Vec3 {
        match self {
            GeometryKind::Plate => [eta1, eta2, zeta],
            GeometryKind::Sphere { radius } => {
                let [_, _, n] = self.frame_vectors(eta1, eta2);
                scale(radius + zeta, n)
            }
            _ => {
                let (r, _, _) = self.radius_derivs(eta1, eta2);
                let cp = self.curve().point(eta2);
                let (sn, cs) = eta1.sin_cos();
                let p = axpy(r * sn, cp.m2, axpy(r * cs, cp.m1, cp.position));
                let [_, _, n] = self.frame_vectors(eta1, eta2);
                axpy(zeta, n, p)
            }
        }
    }

    fn curve(&self) -> CurveFrame {
        match self {
            GeometryKind::GeneralTube { curve, .. }
            | GeometryKind::CircularTube { curve, .. }
            | GeometryKind::ConstantTube { curve, .. } => curve.clone(),
            _ => CurveFrame::straight(),
        }
    }

    fn radius_derivs(&self, th: f64, s: f64) -> (f64, f64, f64) {
        match self {
            GeometryKind::GeneralTube { radius, .. }
            | GeometryKind::CircularTube { radius, .. }
            | GeometryKind::SurfaceOfRevolution { radius } => {
                let v = radius.eval(th, s);
                (v.v, v.t, v.s)
            }
            GeometryKind::ConstantTube { radius, .. } | GeometryKind::Cylinder { radius } => (*radius, 0.0, 0.0),
            _ => (0.0, 0.0, 0.0),
        }
    }
}

fn general_tube(radius: &Field, curve: &CurveFrame, th: f64, s: f64, zeta: f64) -> Result<FramePointData> {
    let rv = radius.eval(th, s);
    check_radius(rv.v, (th, s))?;
    let (r, rt, rs, rtt, rss, rts) = (rv.v, rv.t, rv.s, rv.tt, rv.ss, rv.ts);
    let ([k1, k2, k3], [k1p, k2p, k3p]) = curve.kappas(s);
    let (sn, cs) = th.sin_cos();
    let kh1 = k1 * cs + k2 * sn;
    let kh2 = k1 * sn - k2 * cs;
    let xi = 1.0 - r * kh1;
    let xi_s = -rs * kh1 - r * (k1p * cs + k2p * sn);

    let al1 = k3 * rt - rs;
    let al2 = rt * sn + r * cs;
    let al3 = rt * cs - r * sn;
    let al5 = (rt * rt + r * r).sqrt();
    let al4 = (r * r * al1 * al1 + xi * xi * al5 * al5).sqrt();
    if !(al4 > 0.0) {
        return Err(ShellError::DomainError(format!("alpha4 vanishes at ({th}, {s})")));
    }

    let al1_t = k3 * rtt - rts;
    let al1_s = k3p * rt + k3 * rts - rss;
    let al2_t = rtt * sn + 2.0 * rt * cs - r * sn;
    let al2_s = rts * sn + rs * cs;
    let al3_t = rtt * cs - 2.0 * rt * sn - r * cs;
    let al3_s = rts * cs - rs * sn;
    let al5_t = (rt * rtt + r * rt) / al5;
    let al5_s = (rt * rts + r * rs) / al5;

    let a44 = al4 * al4;
    let a1 = r * al1 / (al4 * al5 * al5) * (r * r + 2.0 * rt * rt - r * rtt);
    let a2 = xi / (al4 * al5) * (al2 * al3_t - al3 * al2_t);
    let a3 = al1 * al5 / a44 * (r * r * kh2 - rt) + r * xi / a44 * (al1 * al5_t - al5 * al1_t);
    let b1 = r * k3 * al1 / al4 - xi / al4 * (kh1 * rt - r * kh2)
        + r * al1 / (al4 * al5 * al5) * (rs * rt - r * rts);
    let b2 = -xi * k3 * al5 / al4 - r * al1 / (al4 * al5) * (kh1 * rt - r * kh2)
        + xi / (al4 * al5) * (al2 * al3_s - al3 * al2_s);
    let b3 = (r * kh1 + rt * kh2) / al5 - al1 * al5 / a44 * (xi * rs - r * xi_s)
        - r * xi / a44 * (al5 * al1_s - al1 * al5_s);

    let x = (rs * rt + k3 * r * r) / al5;
    let m = [[al5 - a2 * zeta, x - b2 * zeta], [-a3 * zeta, al4 / al5 - b3 * zeta]];
    let tube = TubeCoefficients { alpha: [al1, al2, al3, al4, al5], xi, kappa_hat: [kh1, kh2] };
    finish([a1, a2, a3], [b1, b2, b3], m, Some(tube), (th, s, zeta))
}
