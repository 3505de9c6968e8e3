//! Structured parametric meshes, DOF numbering, boundary conditions and constraints.

use crate::error::{Result, ShellError};
use crate::geometry::{cross, dot, GeometryKind, Vec3};
use crate::kinematics::{BasisFamily, LocalDof, ThicknessBasis};
use crate::material::MaterialModel;
use crate::spectral::{QuadratureRule, SpectralElement};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

/// Tensor-product mesh of spectral elements on [η1_0, η1_1] × [η2_0, η2_1].
#[derive(Debug, Clone)]
pub struct StructuredMesh {
    pub elements: [usize; 2],
    pub order: usize,
    pub eta1: [f64; 2],
    pub eta2: [f64; 2],
    pub periodic: bool,
    /// Distinct node coordinates along each direction.
    pub coords: [Vec<f64>; 2],
}

impl StructuredMesh {
    pub fn new(elements: [usize; 2], order: usize, eta1: [f64; 2], eta2: [f64; 2], periodic: bool, gll: &[f64]) -> Result<StructuredMesh> {
        if elements[0] == 0 || elements[1] == 0 {
            return Err(ShellError::ConfigError("mesh needs at least one element per direction".into()));
        }
        if !(eta1[1] > eta1[0]) || !(eta2[1] > eta2[0]) {
            return Err(ShellError::ConfigError(format!("empty parametric domain {eta1:?} x {eta2:?}")));
        }
        if periodic && elements[0] * order < 2 {
            return Err(ShellError::ConfigError("periodic direction needs at least two distinct nodes".into()));
        }
        let line = |n: usize, range: [f64; 2]| -> Vec<f64> {
            let h = (range[1] - range[0]) / n as f64;
            let mut v = Vec::with_capacity(n * order + 1);
            for e in 0..n {
                for (k, x) in gll.iter().enumerate() {
                    if e > 0 && k == 0 {
                        continue;
                    }
                    v.push(range[0] + h * (e as f64 + 0.5 * (x + 1.0)));
                }
            }
            v
        };
        let mut c1 = line(elements[0], eta1);
        if periodic {
            c1.pop();
        }
        let c2 = line(elements[1], eta2);
        Ok(StructuredMesh { elements, order, eta1, eta2, periodic, coords: [c1, c2] })
    }

    pub fn n1(&self) -> usize {
        self.coords[0].len()
    }

    pub fn n2(&self) -> usize {
        self.coords[1].len()
    }

    pub fn num_nodes(&self) -> usize {
        self.n1() * self.n2()
    }

    pub fn num_elements(&self) -> usize {
        self.elements[0] * self.elements[1]
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        let i = if self.periodic { i % self.n1() } else { i };
        j * self.n1() + i
    }

    pub fn node_coords(&self, id: usize) -> (f64, f64) {
        let (i, j) = (id % self.n1(), id / self.n1());
        (self.coords[0][i], self.coords[1][j])
    }

    /// Element index e = e2 * n_e1 + e1.
    pub fn element_ij(&self, e: usize) -> (usize, usize) {
        (e % self.elements[0], e / self.elements[0])
    }

    /// Global node ids in local order j*(p+1) + i.
    pub fn element_nodes(&self, e: usize) -> Vec<usize> {
        let (e1, e2) = self.element_ij(e);
        let q = self.order + 1;
        let mut out = Vec::with_capacity(q * q);
        for j in 0..q {
            for i in 0..q {
                out.push(self.node(e1 * self.order + i, e2 * self.order + j));
            }
        }
        out
    }

    pub fn element_box(&self, e: usize) -> ([f64; 2], [f64; 2]) {
        let (e1, e2) = self.element_ij(e);
        let h1 = (self.eta1[1] - self.eta1[0]) / self.elements[0] as f64;
        let h2 = (self.eta2[1] - self.eta2[0]) / self.elements[1] as f64;
        let a1 = self.eta1[0] + e1 as f64 * h1;
        let a2 = self.eta2[0] + e2 as f64 * h2;
        ([a1, a1 + h1], [a2, a2 + h2])
    }

    pub fn edge_nodes(&self, edge: Edge) -> Result<Vec<usize>> {
        let (n1, n2) = (self.n1(), self.n2());
        match edge {
            Edge::Eta1Min | Edge::Eta1Max if self.periodic => Err(ShellError::ConfigError(format!(
                "edge {edge:?} does not exist on a periodic mesh"
            ))),
            Edge::Eta1Min => Ok((0..n2).map(|j| self.node(0, j)).collect()),
            Edge::Eta1Max => Ok((0..n2).map(|j| self.node(n1 - 1, j)).collect()),
            Edge::Eta2Min => Ok((0..n1).map(|i| self.node(i, 0)).collect()),
            Edge::Eta2Max => Ok((0..n1).map(|i| self.node(i, n2 - 1)).collect()),
        }
    }

    /// Element and reference coordinates containing (η1, η2).
    pub fn locate(&self, eta1: f64, eta2: f64) -> Option<(usize, f64, f64)> {
        let span1 = self.eta1[1] - self.eta1[0];
        let mut t = (eta1 - self.eta1[0]) / span1;
        if self.periodic {
            t = t.rem_euclid(1.0);
        }
        let u = (eta2 - self.eta2[0]) / (self.eta2[1] - self.eta2[0]);
        let tol = 1e-12;
        if t < -tol || t > 1.0 + tol || u < -tol || u > 1.0 + tol {
            return None;
        }
        let f1 = (t * self.elements[0] as f64).clamp(0.0, self.elements[0] as f64);
        let f2 = (u * self.elements[1] as f64).clamp(0.0, self.elements[1] as f64);
        let e1 = (f1.floor() as usize).min(self.elements[0] - 1);
        let e2 = (f2.floor() as usize).min(self.elements[1] - 1);
        let xi = 2.0 * (f1 - e1 as f64) - 1.0;
        let eta = 2.0 * (f2 - e2 as f64) - 1.0;
        Some((e2 * self.elements[0] + e1, xi, eta))
    }

    /// Node at the given parametric coordinates, within a small tolerance.
    pub fn find_node(&self, eta1: f64, eta2: f64) -> Option<usize> {
        let span1 = self.eta1[1] - self.eta1[0];
        let tol1 = 1e-9 * span1;
        let tol2 = 1e-9 * (self.eta2[1] - self.eta2[0]);
        let e1 = if self.periodic { self.eta1[0] + (eta1 - self.eta1[0]).rem_euclid(span1) } else { eta1 };
        let i = self.coords[0].iter().position(|&c| (c - e1).abs() <= tol1 || (self.periodic && (c + span1 - e1).abs() <= tol1))?;
        let j = self.coords[1].iter().position(|&c| (c - eta2).abs() <= tol2)?;
        Some(self.node(i, j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Eta1Min,
    Eta1Max,
    Eta2Min,
    Eta2Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BcKind {
    /// Every coefficient of every edge node is zero.
    Fixed,
    /// Mid-surface translations vanish; higher-order coefficients stay free.
    Hinged,
    /// Mirror plane η1 = const: all η1-family coefficients vanish.
    SymmetryEta1,
    /// Mirror plane η2 = const: all η2-family coefficients vanish.
    SymmetryEta2,
    /// Zero selected coefficients of one family (all orders when `orders` is absent).
    PrescribedDof { family: usize, orders: Option<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub edge: Edge,
    #[serde(flatten)]
    pub kind: BcKind,
}

/// Zeroes selected coefficients of one family at a single node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePin {
    pub at: NodeSelector,
    pub family: usize,
    #[serde(default)]
    pub orders: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeSelector {
    Index(usize),
    At([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointLoad {
    pub at: NodeSelector,
    /// Frame components (η1, η2, ζ).
    pub force: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Top,
    Bottom,
}

/// Pressure on a lateral face; positive values push into the shell.
///
/// Dead by default: fixed direction and magnitude per reference area. With
/// `follower` it acts along the deformed face normal over the deformed area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pressure {
    pub value: f64,
    pub surface: Surface,
    #[serde(default)]
    pub follower: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyForce {
    pub density: f64,
    /// Force per unit mass in frame components.
    pub b: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LoadCase {
    pub point_loads: Vec<PointLoad>,
    pub pressure: Option<Pressure>,
    pub body_force: Option<BodyForce>,
    /// Divide point loads by 2 for every symmetry plane through their node.
    pub scale_on_symmetry: bool,
}

/// Everything needed to build a [`ShellModel`].
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub geometry: GeometryKind,
    pub eta1: [f64; 2],
    pub eta2: [f64; 2],
    pub thickness: f64,
    pub family: BasisFamily,
    pub orders: [i64; 3],
    pub material: MaterialModel,
    pub elements: [usize; 2],
    pub element_order: usize,
    /// None: periodic when a tube domain spans 2π in θ.
    pub periodic: Option<bool>,
    pub plane_points: Option<usize>,
    pub thickness_points: Option<usize>,
    pub bcs: Vec<BoundaryCondition>,
    pub pins: Vec<NodePin>,
    pub loads: LoadCase,
}

/// Linear constraints on full DOFs: zeros and ties `slave = Σ coef·master`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    pub zero: BTreeSet<usize>,
    pub ties: BTreeMap<usize, Vec<(usize, f64)>>,
}

/// Map between full DOFs and the reduced (free) unknowns.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_full: usize,
    pub free: Vec<usize>,
    /// For every full DOF, its expansion in reduced unknowns.
    pub expand: Vec<Vec<(usize, f64)>>,
}

impl DofMap {
    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn expand_vec(&self, u: &[f64]) -> Vec<f64> {
        self.expand.iter().map(|row| row.iter().map(|&(k, c)| c * u[k]).sum()).collect()
    }

    /// Transpose action: reduced vector from a full one.
    pub fn restrict_vec(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.free.len()];
        for (d, row) in self.expand.iter().enumerate() {
            for &(k, c) in row {
                out[k] += c * r[d];
            }
        }
        out
    }

    pub fn is_constrained(&self, d: usize) -> bool {
        !matches!(self.expand[d].as_slice(), [(_, c)] if *c == 1.0 && self.free[self.expand[d][0].0] == d)
    }
}

/// A meshed shell problem, immutable after construction.
#[derive(Debug, Clone)]
pub struct ShellModel {
    pub geometry: GeometryKind,
    pub thickness: f64,
    pub basis: ThicknessBasis,
    pub material: MaterialModel,
    pub element: SpectralElement,
    pub mesh: StructuredMesh,
    pub quadrature: QuadratureRule,
    pub bcs: Vec<BoundaryCondition>,
    pub pins: Vec<NodePin>,
    pub loads: LoadCase,
    pub constraints: ConstraintSet,
    pub dofs: DofMap,
}

impl ShellModel {
    pub fn build(spec: ModelSpec) -> Result<ShellModel> {
        spec.geometry.validate()?;
        spec.material.validate()?;
        if !(spec.thickness > 0.0) {
            return Err(ShellError::ConfigError(format!("thickness must be positive, got {}", spec.thickness)));
        }
        let h = spec.thickness;
        let basis = ThicknessBasis::new(spec.orders, spec.family, (-0.5 * h, 0.5 * h))?;
        let element = SpectralElement::new(spec.element_order)?;
        let full_turn = (spec.eta1[1] - spec.eta1[0] - 2.0 * PI).abs() < 1e-9;
        let periodic = spec.periodic.unwrap_or(spec.geometry.is_tube_family() && full_turn);
        if periodic && !(spec.geometry.is_tube_family() && full_turn) {
            return Err(ShellError::ConfigError(
                "periodic meshes need a tube geometry with theta spanning 2*pi".into(),
            ));
        }
        if let GeometryKind::Sphere { .. } = spec.geometry {
            if spec.eta1[0] <= 0.0 || spec.eta1[1] >= PI {
                return Err(ShellError::DomainError(format!(
                    "sphere domain phi in {:?} must exclude the poles",
                    spec.eta1
                )));
            }
        }
        let rmin = spec.geometry.min_radius(spec.eta1, spec.eta2);
        if !(rmin > 0.5 * h) {
            return Err(ShellError::InvalidGeometry(format!(
                "half thickness {} reaches the minimum radius {rmin}",
                0.5 * h
            )));
        }
        let mesh = StructuredMesh::new(spec.elements, spec.element_order, spec.eta1, spec.eta2, periodic, &element.basis.nodes)?;
        let nplane = spec.plane_points.unwrap_or(spec.element_order + 1);
        let nthick = spec.thickness_points.unwrap_or(basis.ndof() + 1);
        let quadrature = QuadratureRule::new(nplane, nthick, basis.zeta_bounds)?;

        let mut model = ShellModel {
            geometry: spec.geometry,
            thickness: h,
            basis,
            material: spec.material,
            element,
            mesh,
            quadrature,
            bcs: spec.bcs,
            pins: spec.pins,
            loads: spec.loads,
            constraints: ConstraintSet::default(),
            dofs: DofMap { n_full: 0, free: vec![], expand: vec![] },
        };
        if model.material.natural_state_stress().abs() > 0.0 {
            log::warn!(
                "material {} carries residual stress {} in the undeformed state",
                model.material.name(),
                model.material.natural_state_stress()
            );
        }
        model.constraints = model.collect_constraints()?;
        model.dofs = model.build_dof_map()?;
        // validate load targets early
        for pl in &model.loads.point_loads {
            model.resolve_node(&pl.at)?;
        }
        Ok(model)
    }

    pub fn ndof_node(&self) -> usize {
        self.basis.ndof()
    }

    pub fn n_full(&self) -> usize {
        self.mesh.num_nodes() * self.ndof_node()
    }

    pub fn global_dof(&self, node: usize, local: usize) -> usize {
        node * self.ndof_node() + local
    }

    pub fn resolve_node(&self, sel: &NodeSelector) -> Result<usize> {
        match sel {
            NodeSelector::Index(i) if *i < self.mesh.num_nodes() => Ok(*i),
            NodeSelector::Index(i) => Err(ShellError::UnknownNode(format!("node index {i} out of range"))),
            NodeSelector::At([a, b]) => self
                .mesh
                .find_node(*a, *b)
                .ok_or_else(|| ShellError::UnknownNode(format!("no node at (eta1={a}, eta2={b})"))),
        }
    }

    /// Number of symmetry planes passing through a node.
    pub fn symmetry_planes_at(&self, node: usize) -> usize {
        let mut edges: BTreeSet<Edge> = BTreeSet::new();
        for bc in &self.bcs {
            if matches!(bc.kind, BcKind::SymmetryEta1 | BcKind::SymmetryEta2) {
                if let Ok(nodes) = self.mesh.edge_nodes(bc.edge) {
                    if nodes.contains(&node) {
                        edges.insert(bc.edge);
                    }
                }
            }
        }
        edges.len()
    }

    fn collect_constraints(&self) -> Result<ConstraintSet> {
        let nd = self.ndof_node();
        let off = self.basis.offsets();
        let ord = self.basis.orders;
        let mut zero = BTreeSet::new();
        let mut ties: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        let a0 = self.basis.rows(0.0);
        for bc in &self.bcs {
            let nodes = self.mesh.edge_nodes(bc.edge)?;
            for &n in &nodes {
                let g = |local: usize| n * nd + local;
                match &bc.kind {
                    BcKind::Fixed => zero.extend((0..nd).map(g)),
                    BcKind::SymmetryEta1 => zero.extend((0..=ord[0]).map(|i| g(off[0] + i))),
                    BcKind::SymmetryEta2 => zero.extend((0..=ord[1]).map(|i| g(off[1] + i))),
                    BcKind::PrescribedDof { family, orders } => {
                        zero.extend(self.selected_dofs(n, *family, orders.as_deref())?);
                    }
                    BcKind::Hinged => {
                        for f in 0..3 {
                            let row = &a0.a[f];
                            let slave = g(off[f]);
                            let masters: Vec<(usize, f64)> = (1..row.len())
                                .filter(|&i| row[i] != 0.0)
                                .map(|i| (g(off[f] + i), -row[i] / row[0]))
                                .collect();
                            if masters.is_empty() {
                                zero.insert(slave);
                            } else {
                                ties.push((slave, masters));
                            }
                        }
                    }
                }
            }
        }
        for pin in &self.pins {
            let n = self.resolve_node(&pin.at)?;
            zero.extend(self.selected_dofs(n, pin.family, pin.orders.as_deref())?);
        }
        let mut tie_map: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (slave, masters) in ties {
            let masters: Vec<(usize, f64)> = masters.into_iter().filter(|(m, _)| !zero.contains(m)).collect();
            if zero.contains(&slave) {
                if !masters.is_empty() {
                    return Err(ShellError::ConflictingConstraints(format!(
                        "dof {slave} is both fixed and tied to free coefficients"
                    )));
                }
                continue;
            }
            match tie_map.get(&slave) {
                Some(prev) if *prev != masters => {
                    return Err(ShellError::ConflictingConstraints(format!(
                        "dof {slave} carries two different multipoint constraints"
                    )))
                }
                _ => {
                    tie_map.insert(slave, masters);
                }
            }
        }
        for masters in tie_map.values() {
            if masters.iter().any(|(m, _)| tie_map.contains_key(m)) {
                return Err(ShellError::ConflictingConstraints("chained multipoint constraints".into()));
            }
        }
        Ok(ConstraintSet { zero, ties: tie_map })
    }

    /// Global indices of the listed orders (all when `None`) of one family at a node.
    fn selected_dofs(&self, node: usize, family: usize, orders: Option<&[usize]>) -> Result<Vec<usize>> {
        if family > 2 {
            return Err(ShellError::ConfigError(format!("family index {family} must be 0, 1 or 2")));
        }
        let top = self.basis.orders[family];
        let list: Vec<usize> = orders.map(|o| o.to_vec()).unwrap_or_else(|| (0..=top).collect());
        list.into_iter()
            .map(|o| {
                if o > top {
                    Err(ShellError::ConfigError(format!("order {o} exceeds the expansion order {top} of family {family}")))
                } else {
                    Ok(self.global_dof(node, self.basis.offsets()[family] + o))
                }
            })
            .collect()
    }

    fn build_dof_map(&self) -> Result<DofMap> {
        let n_full = self.n_full();
        let mut index = vec![usize::MAX; n_full];
        let mut free = Vec::new();
        for d in 0..n_full {
            if !self.constraints.zero.contains(&d) && !self.constraints.ties.contains_key(&d) {
                index[d] = free.len();
                free.push(d);
            }
        }
        if free.is_empty() {
            return Err(ShellError::ConflictingConstraints("every DOF is constrained".into()));
        }
        let mut expand = vec![Vec::new(); n_full];
        for d in 0..n_full {
            if index[d] != usize::MAX {
                expand[d] = vec![(index[d], 1.0)];
            } else if let Some(masters) = self.constraints.ties.get(&d) {
                expand[d] = masters.iter().map(|&(m, c)| (index[m], c)).collect();
            }
        }
        Ok(DofMap { n_full, free, expand })
    }

    /// Coefficients reproducing u(ζ) = a + b ζ in one family's thickness basis.
    fn linear_in_zeta(&self, family: usize, a: f64, b: f64) -> Vec<f64> {
        let o = self.basis.orders[family];
        let mut c = vec![0.0; o + 1];
        match self.basis.family {
            BasisFamily::Monomial => {
                c[0] = a;
                if o >= 1 {
                    c[1] = b;
                }
            }
            BasisFamily::Legendre => {
                c[0] = a + b * self.basis.r1_scale;
                if o >= 1 {
                    c[1] = b * self.basis.r2_scale;
                }
            }
        }
        c
    }

    /// Full DOF vectors of the six Cartesian rigid motions: three translations, three rotations.
    pub fn rigid_modes(&self) -> Vec<Vec<f64>> {
        let nd = self.ndof_node();
        let off = self.basis.offsets();
        let axes: [Vec3; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut modes = vec![vec![0.0; self.n_full()]; 6];
        for node in 0..self.mesh.num_nodes() {
            let (e1, e2) = self.mesh.node_coords(node);
            let frame = self.geometry.frame_vectors(e1, e2);
            let p = self.geometry.position(e1, e2, 0.0);
            for (k, axis) in axes.iter().enumerate() {
                let wp = cross(*axis, p);
                let wn = cross(*axis, frame[2]);
                for f in 0..3 {
                    let t = self.linear_in_zeta(f, dot(*axis, frame[f]), 0.0);
                    let r = self.linear_in_zeta(f, dot(frame[f], wp), dot(frame[f], wn));
                    for i in 0..t.len() {
                        modes[k][node * nd + off[f] + i] = t[i];
                        modes[3 + k][node * nd + off[f] + i] = r[i];
                    }
                }
            }
        }
        modes
    }

    /// How many rigid motions survive the constraint set.
    pub fn free_rigid_modes(&self) -> usize {
        let modes = self.rigid_modes();
        let mut rows: Vec<[f64; 6]> = Vec::new();
        for &d in &self.constraints.zero {
            rows.push(std::array::from_fn(|k| modes[k][d]));
        }
        for (&s, masters) in &self.constraints.ties {
            rows.push(std::array::from_fn(|k| modes[k][s] - masters.iter().map(|&(m, c)| c * modes[k][m]).sum::<f64>()));
        }
        let scale: [f64; 6] = std::array::from_fn(|k| modes[k].iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300));
        let mut gram = faer::Mat::<f64>::zeros(6, 6);
        for r in &rows {
            for a in 0..6 {
                for b in 0..6 {
                    gram[(a, b)] += r[a] / scale[a] * r[b] / scale[b];
                }
            }
        }
        let eig = gram.self_adjoint_eigenvalues(faer::Side::Lower).unwrap_or_else(|_| vec![0.0; 6]);
        let top = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if top == 0.0 {
            return 6;
        }
        eig.iter().filter(|&&v| v <= 1e-14 * top.max(1.0)).count()
    }

    pub fn local_dof(&self, global: usize) -> (usize, LocalDof) {
        let nd = self.ndof_node();
        (global / nd, self.basis.local_dof(global % nd))
    }
}
