//! Declarative run configuration in TOML.
//!
//! A file may name a `preset`; its own tables are then deep-merged over the
//! preset, key by key, so a file only needs to list what it changes.

use crate::error::{Result, ShellError};
use crate::expr::{Expr, Field};
use crate::geometry::{CurveFrame, GeometryKind, Vec3};
use crate::kinematics::BasisFamily;
use crate::material::{lame_from_young, lame_lambda, MaterialModel};
use crate::mesh::{BodyForce, BoundaryCondition, LoadCase, ModelSpec, NodePin, NodeSelector, PointLoad, Pressure};
use crate::presets;
use crate::solver::SolverSettings;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const REQUIRED_SECTIONS: [&str; 5] = ["geometry", "shell", "material", "mesh", "loads"];

/// A number, or an expression string evaluated once (`"pi/2"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    pub fn value(&self, field: &str) -> Result<f64> {
        match self {
            Scalar::Number(v) => Ok(*v),
            Scalar::Expr(src) => {
                let e = Expr::parse(src).map_err(|e| at_field(field, e))?;
                e.as_const().ok_or_else(|| {
                    ShellError::ConfigError(format!("{field}: `{src}` must not depend on theta or s"))
                })
            }
        }
    }
}

/// A field of (theta, s): a number, an expression, or a named profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Number(f64),
    Expr(String),
    Profile(Profile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    /// R(s) = r0 + (r1 − r0)·s/length.
    Linear { r0: f64, r1: f64, length: f64 },
    /// R(s) = r1·sqrt(1 + (s/c)²) with c chosen so that R(±length/2) = r2.
    Hyperboloid { r1: f64, r2: f64, length: f64 },
}

impl FieldSpec {
    pub fn to_field(&self, field: &str) -> Result<Field> {
        match self {
            FieldSpec::Number(v) => Ok(Field::constant(*v)),
            FieldSpec::Expr(src) => Field::parse(src).map_err(|e| at_field(field, e)),
            FieldSpec::Profile(p) => Field::parse(&p.expression(field)?),
        }
    }

    /// The value when the field is constant.
    pub fn constant(&self, field: &str) -> Result<f64> {
        let f = self.to_field(field)?;
        f.expr().as_const().ok_or_else(|| ShellError::ConfigError(format!("{field}: this geometry needs a constant")))
    }
}

impl Profile {
    fn expression(&self, field: &str) -> Result<String> {
        let bad = |m: &str| Err(ShellError::ConfigError(format!("{field}: {m}")));
        match *self {
            Profile::Constant { value } => Ok(format!("{value:?}")),
            Profile::Linear { r0, r1, length } => {
                if !(length > 0.0) {
                    return bad("length must be positive");
                }
                Ok(format!("{r0:?} + {:?}*s", (r1 - r0) / length))
            }
            Profile::Hyperboloid { r1, r2, length } => {
                if !(r1 > 0.0 && r2 > r1 && length > 0.0) {
                    return bad("hyperboloid needs 0 < r1 < r2 and length > 0");
                }
                let c = 0.5 * length / ((r2 / r1).powi(2) - 1.0).sqrt();
                Ok(format!("{r1:?}*sqrt(1 + (s/{c:?})^2)"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryName {
    GeneralTube,
    CircularTube,
    ConstantTube,
    SurfaceOfRevolution,
    Cylinder,
    Sphere,
    Plate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameName {
    #[default]
    Straight,
    Frenet,
    Cartan,
}

/// Reference curve of the tube family; placement defaults to the +z axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    #[serde(default)]
    pub frame: FrameName,
    pub curvature: Option<FieldSpec>,
    pub torsion: Option<FieldSpec>,
    pub kappa1: Option<FieldSpec>,
    pub kappa2: Option<FieldSpec>,
    pub kappa3: Option<FieldSpec>,
    pub origin: Option<Vec3>,
    pub tangent: Option<Vec3>,
    pub normal: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryName,
    pub radius: Option<FieldSpec>,
    pub curve: Option<CurveConfig>,
    pub eta1: [Scalar; 2],
    pub eta2: [Scalar; 2],
    pub periodic: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellConfig {
    pub thickness: f64,
    #[serde(default = "default_basis")]
    pub basis: BasisFamily,
    pub orders: [i64; 3],
}

fn default_basis() -> BasisFamily {
    BasisFamily::Monomial
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialName {
    SaintVenantKirchhoff,
    NeoHookean,
    MooneyRivlin,
}

/// Elastic constants as given by the user: (young, nu), (mu, nu) or (lambda, mu).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub model: MaterialName,
    pub young: Option<f64>,
    pub nu: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub bulk: Option<f64>,
}

impl MaterialConfig {
    pub fn to_model(&self) -> Result<MaterialModel> {
        let err = |m: String| ShellError::ConfigError(format!("material: {m}"));
        let model = match self.model {
            MaterialName::SaintVenantKirchhoff | MaterialName::NeoHookean => {
                let (lambda, mu) = match (self.young, self.nu, self.mu, self.lambda) {
                    (Some(e), Some(nu), None, None) => lame_from_young(e, nu),
                    (None, Some(nu), Some(mu), None) => (lame_lambda(mu, nu), mu),
                    (None, None, Some(mu), Some(l)) => (l, mu),
                    _ => return Err(err("give exactly one of (young, nu), (mu, nu) or (lambda, mu)".into())),
                };
                if let Some(nu) = self.nu {
                    if !(nu > -1.0 && nu < 0.5) {
                        return Err(err(format!("nu = {nu} must lie in (-1, 0.5)")));
                    }
                }
                if self.c1.is_some() || self.c2.is_some() || self.bulk.is_some() {
                    return Err(err("c1, c2 and bulk belong to mooney_rivlin".into()));
                }
                if self.model == MaterialName::NeoHookean {
                    MaterialModel::NeoHookean { lambda, mu }
                } else {
                    MaterialModel::SaintVenantKirchhoff { lambda, mu }
                }
            }
            MaterialName::MooneyRivlin => match (self.c1, self.c2, self.bulk) {
                (Some(c1), Some(c2), Some(bulk)) if self.young.is_none() && self.nu.is_none() && self.mu.is_none() && self.lambda.is_none() => {
                    MaterialModel::MooneyRivlin { c1, c2, bulk }
                }
                _ => return Err(err("mooney_rivlin takes exactly c1, c2 and bulk".into())),
            },
        };
        model.validate().map_err(|e| err(e.to_string()))?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub elements: [usize; 2],
    pub order: usize,
    pub plane_points: Option<usize>,
    pub thickness_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointLoadConfig {
    pub at: [Scalar; 2],
    pub force: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinConfig {
    pub at: [Scalar; 2],
    pub family: usize,
    pub orders: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    #[serde(default)]
    pub point_loads: Vec<PointLoadConfig>,
    pub pressure: Option<Pressure>,
    pub body_force: Option<BodyForce>,
    #[serde(default)]
    pub scale_on_symmetry: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Probe points (η1, η2, ζ).
    #[serde(default)]
    pub probes: Vec<[Scalar; 3]>,
    /// Write a VTK surface every this many accepted steps; 0 disables.
    #[serde(default = "default_vtk_every")]
    pub vtk_every: usize,
}

fn default_directory() -> PathBuf {
    PathBuf::from("output")
}

fn default_vtk_every() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_directory(), probes: vec![], vtk_every: default_vtk_every() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub geometry: GeometryConfig,
    pub shell: ShellConfig,
    pub material: MaterialConfig,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub bcs: Vec<BoundaryCondition>,
    #[serde(default)]
    pub pins: Vec<PinConfig>,
    pub loads: LoadConfig,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub output: OutputConfig,
}

fn at_field(field: &str, e: ShellError) -> ShellError {
    match e {
        ShellError::ExpressionParseError(m) => ShellError::ExpressionParseError(format!("{field}: {m}")),
        other => ShellError::ConfigError(format!("{field}: {other}")),
    }
}

/// Overlays `top` on `base`: tables merge recursively, anything else replaces.
pub fn deep_merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => deep_merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_table(text: &str, origin: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| ShellError::ConfigError(format!("{origin}: {e}")))
}

/// Parses a config file, resolving a `preset` key if present.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with_preset(text, None)
}

/// As [`parse_config`]; `preset` overrides the file's own `preset` key.
pub fn parse_config_with_preset(text: &str, preset: Option<&str>) -> Result<RunConfig> {
    let user = parse_table(text, "config")?;
    let name = match preset {
        Some(p) => Some(p.to_string()),
        None => match user.get("preset") {
            Some(toml::Value::String(s)) => Some(s.clone()),
            Some(other) => return Err(ShellError::ConfigError(format!("preset: expected a string, found {}", other.type_str()))),
            None => None,
        },
    };
    let Some(name) = name else {
        check_sections(&user)?;
        return toml::from_str::<RunConfig>(text).map_err(|e| ShellError::ConfigError(e.to_string())).and_then(validated);
    };
    let mut merged = parse_table(presets::preset_text(&name)?, &format!("preset {name}"))?;
    deep_merge(&mut merged, user);
    merged.insert("preset".into(), toml::Value::String(name));
    check_sections(&merged)?;
    let de = toml::Value::Table(merged);
    let cfg: RunConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| ShellError::ConfigError(format!("{}: {}", e.path(), e.inner())))?;
    validated(cfg)
}

fn check_sections(t: &toml::Table) -> Result<()> {
    let missing: Vec<String> = REQUIRED_SECTIONS.iter().filter(|s| !t.contains_key(**s)).map(|s| format!("[{s}]")).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ShellError::ConfigError(format!("missing required sections: {}", missing.join(", "))))
    }
}

fn validated(cfg: RunConfig) -> Result<RunConfig> {
    cfg.model_spec()?;
    cfg.solver.validate()?;
    cfg.probes()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn eta_ranges(&self) -> Result<([f64; 2], [f64; 2])> {
        let g = &self.geometry;
        Ok((
            [g.eta1[0].value("geometry.eta1[0]")?, g.eta1[1].value("geometry.eta1[1]")?],
            [g.eta2[0].value("geometry.eta2[0]")?, g.eta2[1].value("geometry.eta2[1]")?],
        ))
    }

    pub fn geometry_kind(&self) -> Result<GeometryKind> {
        let g = &self.geometry;
        let radius = || {
            g.radius.as_ref().ok_or_else(|| ShellError::ConfigError(format!("geometry.radius: required for {:?}", g.kind)))
        };
        let curve = || -> Result<CurveFrame> {
            let c = g.curve.clone().unwrap_or_default();
            curve_frame(&c)
        };
        let no_curve = || -> Result<()> {
            if g.curve.is_some() {
                return Err(ShellError::ConfigError(format!("geometry.curve: not used by {:?}", g.kind)));
            }
            Ok(())
        };
        let kind = match g.kind {
            GeometryName::GeneralTube => GeometryKind::GeneralTube { radius: radius()?.to_field("geometry.radius")?, curve: curve()? },
            GeometryName::CircularTube => {
                let radius = radius()?.to_field("geometry.radius")?;
                if radius.depends_on(crate::expr::Var::Theta) {
                    return Err(ShellError::ConfigError("geometry.radius: circular_tube radius must not depend on theta".into()));
                }
                GeometryKind::CircularTube { radius, curve: curve()? }
            }
            GeometryName::ConstantTube => GeometryKind::ConstantTube { radius: radius()?.constant("geometry.radius")?, curve: curve()? },
            GeometryName::SurfaceOfRevolution => {
                no_curve()?;
                GeometryKind::SurfaceOfRevolution { radius: radius()?.to_field("geometry.radius")? }
            }
            GeometryName::Cylinder => {
                no_curve()?;
                GeometryKind::Cylinder { radius: radius()?.constant("geometry.radius")? }
            }
            GeometryName::Sphere => {
                no_curve()?;
                GeometryKind::Sphere { radius: radius()?.constant("geometry.radius")? }
            }
            GeometryName::Plate => {
                no_curve()?;
                if g.radius.is_some() {
                    return Err(ShellError::ConfigError("geometry.radius: a plate has no radius".into()));
                }
                GeometryKind::Plate
            }
        };
        kind.validate().map_err(|e| ShellError::ConfigError(format!("geometry: {e}")))?;
        Ok(kind)
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let (eta1, eta2) = self.eta_ranges()?;
        let at = |a: &[Scalar; 2], f: &str| -> Result<NodeSelector> {
            Ok(NodeSelector::At([a[0].value(&format!("{f}.at[0]"))?, a[1].value(&format!("{f}.at[1]"))?]))
        };
        let point_loads = self
            .loads
            .point_loads
            .iter()
            .enumerate()
            .map(|(i, p)| Ok(PointLoad { at: at(&p.at, &format!("loads.point_loads[{i}]"))?, force: p.force }))
            .collect::<Result<Vec<_>>>()?;
        let pins = self
            .pins
            .iter()
            .enumerate()
            .map(|(i, p)| Ok(NodePin { at: at(&p.at, &format!("pins[{i}]"))?, family: p.family, orders: p.orders.clone() }))
            .collect::<Result<Vec<_>>>()?;
        if !(self.shell.thickness > 0.0) {
            return Err(ShellError::ConfigError(format!("shell.thickness: must be positive, got {}", self.shell.thickness)));
        }
        Ok(ModelSpec {
            geometry: self.geometry_kind()?,
            eta1,
            eta2,
            thickness: self.shell.thickness,
            family: self.shell.basis,
            orders: self.shell.orders,
            material: self.material.to_model()?,
            elements: self.mesh.elements,
            element_order: self.mesh.order,
            periodic: self.geometry.periodic,
            plane_points: self.mesh.plane_points,
            thickness_points: self.mesh.thickness_points,
            bcs: self.bcs.clone(),
            pins,
            loads: LoadCase {
                point_loads,
                pressure: self.loads.pressure,
                body_force: self.loads.body_force,
                scale_on_symmetry: self.loads.scale_on_symmetry,
            },
        })
    }

    pub fn probes(&self) -> Result<Vec<[f64; 3]>> {
        self.output
            .probes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let f = |k: usize| p[k].value(&format!("output.probes[{i}][{k}]"));
                Ok([f(0)?, f(1)?, f(2)?])
            })
            .collect()
    }

    /// Magnitude of the load at λ = 1, used to report applied load.
    pub fn reference_load_magnitude(&self) -> f64 {
        if let Some(p) = self.loads.pressure {
            return p.value.abs();
        }
        let point = self.loads.point_loads.iter().map(|p| p.force.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
        if point > 0.0 {
            return point;
        }
        match self.loads.body_force {
            Some(b) => b.density.abs() * b.b.iter().map(|x| x * x).sum::<f64>().sqrt(),
            None => 0.0,
        }
    }
}

fn curve_frame(c: &CurveConfig) -> Result<CurveFrame> {
    let f = |v: &Option<FieldSpec>, name: &str| -> Result<Field> {
        match v {
            Some(v) => v.to_field(&format!("geometry.curve.{name}")),
            None => Ok(Field::constant(0.0)),
        }
    };
    let cartan_given = c.kappa1.is_some() || c.kappa2.is_some() || c.kappa3.is_some();
    let frenet_given = c.curvature.is_some() || c.torsion.is_some();
    let frame = match c.frame {
        FrameName::Straight if cartan_given || frenet_given => {
            return Err(ShellError::ConfigError("geometry.curve: curvatures need frame = \"frenet\" or \"cartan\"".into()))
        }
        FrameName::Straight => CurveFrame::straight(),
        FrameName::Frenet if cartan_given => {
            return Err(ShellError::ConfigError("geometry.curve: a frenet frame takes curvature and torsion".into()))
        }
        FrameName::Frenet => CurveFrame::frenet(f(&c.curvature, "curvature")?, f(&c.torsion, "torsion")?),
        FrameName::Cartan if frenet_given => {
            return Err(ShellError::ConfigError("geometry.curve: a cartan frame takes kappa1, kappa2 and kappa3".into()))
        }
        FrameName::Cartan => CurveFrame::cartan(f(&c.kappa1, "kappa1")?, f(&c.kappa2, "kappa2")?, f(&c.kappa3, "kappa3")?),
    };
    let base = CurveFrame::straight();
    let frame = frame.with_placement(
        c.origin.unwrap_or(base.origin),
        c.tangent.unwrap_or(base.tangent),
        c.normal.unwrap_or(base.normal),
    );
    frame.validate().map_err(|e| ShellError::ConfigError(format!("geometry.curve: {e}")))?;
    Ok(frame)
}
