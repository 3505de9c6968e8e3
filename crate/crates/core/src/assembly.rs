//! Element integration, load vectors and global sparse assembly.

use crate::error::{Result, ShellError};
use crate::geometry::Vec3;
use crate::kinematics::{fc_and_cof, g0_matrix, gcof_matrix, gradient_operators, GradientOperators};
use crate::material::point_response;
use crate::mesh::{ShellModel, Surface};
use crate::spectral::ShapeValues;
use rayon::prelude::*;

/// One thickness sample of an in-plane quadrature point.
#[derive(Debug, Clone)]
struct Layer {
    ops: GradientOperators,
    /// g · w_ζ · w_plane · |J_plane|.
    w: f64,
}

#[derive(Debug, Clone)]
struct QuadPoint {
    shape: ShapeValues,
    /// Parametric coordinates (η1, η2).
    at: (f64, f64),
    /// w_plane · |J_plane|.
    area_w: f64,
    layers: Vec<Layer>,
    /// Operators on the loaded face, present for follower pressure.
    face: Option<Layer>,
}

#[derive(Debug, Clone)]
struct ElementData {
    nodes: Vec<usize>,
    points: Vec<QuadPoint>,
}

/// Sparse pattern of the reduced tangent (compressed columns, sorted rows).
#[derive(Debug, Clone)]
pub struct SparsePattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
}

impl SparsePattern {
    #[inline]
    pub fn position(&self, row: usize, col: usize) -> usize {
        let rows = &self.row_idx[self.col_ptr[col]..self.col_ptr[col + 1]];
        self.col_ptr[col] + rows.binary_search(&row).expect("entry outside the sparsity pattern")
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }
}

/// Reduced tangent values laid out on a [`SparsePattern`].
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub values: Vec<f64>,
}

/// Quantities evaluated at one displacement state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub energy: f64,
    /// Full-length internal force.
    pub internal: Vec<f64>,
    pub tangent: Option<SparseMatrix>,
}

/// Precomputed element data plus the reduced sparsity pattern for one model.
pub struct Assembler<'m> {
    pub model: &'m ShellModel,
    elements: Vec<ElementData>,
    pub pattern: SparsePattern,
    reference_load: Vec<f64>,
}

impl<'m> Assembler<'m> {
    pub fn new(model: &'m ShellModel) -> Result<Assembler<'m>> {
        let elements = (0..model.mesh.num_elements())
            .into_par_iter()
            .map(|e| precompute_element(model, e))
            .collect::<Result<Vec<_>>>()?;
        let pattern = build_pattern(model, &elements);
        let mut a = Assembler { model, elements, pattern, reference_load: vec![] };
        a.reference_load = a.external_load()?;
        Ok(a)
    }

    pub fn n_full(&self) -> usize {
        self.model.n_full()
    }

    pub fn n_free(&self) -> usize {
        self.model.dofs.n_free()
    }

    /// Full-length reference load f̂ (scaled by λ during continuation).
    pub fn reference_load(&self) -> &[f64] {
        &self.reference_load
    }

    /// Undeformed volume by quadrature.
    pub fn reference_volume(&self) -> f64 {
        self.elements.iter().flat_map(|e| &e.points).flat_map(|p| &p.layers).map(|l| l.w).sum()
    }

    fn element_coefficients(&self, el: &ElementData, u: &[f64]) -> Vec<f64> {
        let nd = self.model.ndof_node();
        let mut ue = Vec::with_capacity(el.nodes.len() * nd);
        for &n in &el.nodes {
            ue.extend_from_slice(&u[n * nd..(n + 1) * nd]);
        }
        ue
    }

    /// Energy, internal force and stiffness of one element.
    fn element(&self, index: usize, u: &[f64], want_tangent: bool) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let el = &self.elements[index];
        let nd = self.model.ndof_node();
        let nen = el.nodes.len();
        let size = nen * nd;
        let ue = self.element_coefficients(el, u);
        let mut fe = vec![0.0; size];
        let mut ke = if want_tangent { vec![0.0; size * size] } else { vec![] };
        let mut energy = 0.0;

        let mut phi = [vec![0.0; nd], vec![0.0; nd], vec![0.0; nd]];
        let mut h = [vec![0.0; nd], vec![0.0; nd], vec![0.0; nd]];
        let mut hm = vec![0.0; 9 * nd * nd];
        let mut gd = vec![0.0; 9 * nd];
        for (qi, qp) in el.points.iter().enumerate() {
            let sv = [&qp.shape.n, &qp.shape.d1, &qp.shape.d2];
            for i in 0..3 {
                phi[i].iter_mut().for_each(|v| *v = 0.0);
                for k in 0..nen {
                    let s = sv[i][k];
                    if s != 0.0 {
                        for a in 0..nd {
                            phi[i][a] += s * ue[k * nd + a];
                        }
                    }
                }
                h[i].iter_mut().for_each(|v| *v = 0.0);
            }
            if want_tangent {
                hm.iter_mut().for_each(|v| *v = 0.0);
            }
            for layer in &qp.layers {
                let l = layer.ops.displacement_gradient(&phi[0], &phi[1], &phi[2]);
                let resp = point_response(&self.model.material, &l, want_tangent, false).map_err(|e| match e {
                    ShellError::NonpositiveJacobian { value, .. } => {
                        ShellError::ElementInversion { element: index, point: qi, jacobian: value }
                    }
                    other => other,
                })?;
                energy += layer.w * resp.psi;
                for i in 0..3 {
                    let g = &layer.ops.g[i];
                    for r in 0..9 {
                        let s = layer.w * resp.stress[r];
                        if s != 0.0 {
                            for a in 0..nd {
                                h[i][a] += g[r * nd + a] * s;
                            }
                        }
                    }
                }
                if let Some(d) = &resp.tangent {
                    // D G_j, then G_i^T (D G_j)
                    for j in 0..3 {
                        let gj = &layer.ops.g[j];
                        gd.iter_mut().for_each(|v| *v = 0.0);
                        for r in 0..9 {
                            for q in 0..9 {
                                let dv = d[r][q];
                                if dv != 0.0 {
                                    for b in 0..nd {
                                        gd[r * nd + b] += dv * gj[q * nd + b];
                                    }
                                }
                            }
                        }
                        for i in 0..3 {
                            let gi = &layer.ops.g[i];
                            let block = &mut hm[(3 * i + j) * nd * nd..(3 * i + j + 1) * nd * nd];
                            for r in 0..9 {
                                for a in 0..nd {
                                    let ga = gi[r * nd + a];
                                    if ga == 0.0 {
                                        continue;
                                    }
                                    let ga = ga * layer.w;
                                    for b in 0..nd {
                                        block[a * nd + b] += ga * gd[r * nd + b];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            for k in 0..nen {
                for a in 0..nd {
                    fe[k * nd + a] += sv[0][k] * h[0][a] + sv[1][k] * h[1][a] + sv[2][k] * h[2][a];
                }
            }
            if want_tangent {
                for i in 0..3 {
                    for j in 0..3 {
                        let block = &hm[(3 * i + j) * nd * nd..(3 * i + j + 1) * nd * nd];
                        for k in 0..nen {
                            let nik = sv[i][k];
                            if nik == 0.0 {
                                continue;
                            }
                            for l in 0..nen {
                                let w = nik * sv[j][l];
                                if w == 0.0 {
                                    continue;
                                }
                                for a in 0..nd {
                                    let row = &mut ke[(k * nd + a) * size + l * nd..(k * nd + a) * size + (l + 1) * nd];
                                    let src = &block[a * nd..(a + 1) * nd];
                                    for b in 0..nd {
                                        row[b] += w * src[b];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok((energy, fe, ke))
    }

    /// Energy, full internal force and (optionally) reduced tangent at full displacement `u`.
    pub fn evaluate(&self, u: &[f64], want_tangent: bool) -> Result<Evaluation> {
        let order: Vec<usize> = (0..self.elements.len()).collect();
        self.evaluate_in_order(u, want_tangent, &order)
    }

    /// As [`Assembler::evaluate`], scattering elements in the given order.
    pub fn evaluate_in_order(&self, u: &[f64], want_tangent: bool, order: &[usize]) -> Result<Evaluation> {
        assert_eq!(u.len(), self.n_full());
        assert_eq!(order.len(), self.elements.len());
        if u.iter().any(|v| !v.is_finite()) {
            return Err(ShellError::NonFinite("displacement vector".into()));
        }
        let mut internal = vec![0.0; self.n_full()];
        let mut values = if want_tangent { vec![0.0; self.pattern.nnz()] } else { vec![] };
        let mut energy = 0.0;
        let chunk = 64;
        let ne = order.len();
        let mut start = 0;
        while start < ne {
            let end = (start + chunk).min(ne);
            let results: Vec<Result<(f64, Vec<f64>, Vec<f64>)>> =
                order[start..end].par_iter().map(|&e| self.element(e, u, want_tangent)).collect();
            // ordered scatter keeps sums bitwise reproducible
            for (&e, res) in order[start..end].iter().zip(results) {
                let (en, fe, ke) = res?;
                energy += en;
                self.scatter(e, &fe, &ke, &mut internal, &mut values);
            }
            start = end;
        }
        if !energy.is_finite() || internal.iter().any(|v| !v.is_finite()) {
            return Err(ShellError::NonFinite("internal force".into()));
        }
        Ok(Evaluation { energy, internal, tangent: want_tangent.then_some(SparseMatrix { values }) })
    }

    /// Reactions r_d = f_int,d − λ f_d on every constrained full DOF.
    pub fn reactions(&self, u: &[f64], lambda: f64) -> Result<Vec<(usize, f64)>> {
        let ev = self.evaluate(u, false)?;
        let (fol, _) = self.follower_load(u, false)?;
        let dofs = &self.model.dofs;
        Ok((0..self.n_full())
            .filter(|&d| dofs.is_constrained(d))
            .map(|d| (d, ev.internal[d] - lambda * (self.reference_load[d] + fol[d])))
            .collect())
    }

    /// True when part of the load depends on the displacement.
    pub fn has_follower_load(&self) -> bool {
        self.model.loads.pressure.is_some_and(|p| p.follower)
    }

    /// Follower pressure vector f(U) (full length, unit load factor) and, optionally,
    /// its reduced derivative ∂f/∂U. Zero when the model has no follower load.
    pub fn follower_load(&self, u: &[f64], want_tangent: bool) -> Result<(Vec<f64>, Option<SparseMatrix>)> {
        let mut f = vec![0.0; self.n_full()];
        let mut values = if want_tangent { vec![0.0; self.pattern.nnz()] } else { vec![] };
        if !self.has_follower_load() {
            return Ok((f, want_tangent.then_some(SparseMatrix { values })));
        }
        let results: Vec<(Vec<f64>, Vec<f64>)> =
            (0..self.elements.len()).into_par_iter().map(|e| self.element_follower(e, u, want_tangent)).collect();
        for (e, (fe, ke)) in results.into_iter().enumerate() {
            self.scatter(e, &fe, &ke, &mut f, &mut values);
        }
        Ok((f, want_tangent.then_some(SparseMatrix { values })))
    }

    fn element_follower(&self, index: usize, u: &[f64], want_tangent: bool) -> (Vec<f64>, Vec<f64>) {
        let el = &self.elements[index];
        let nd = self.model.ndof_node();
        let off = self.model.basis.offsets();
        let nen = el.nodes.len();
        let size = nen * nd;
        let ue = self.element_coefficients(el, u);
        let (zeta, _) = face_of(self.model, self.model.loads.pressure.expect("follower pressure").surface);
        let rows = self.model.basis.rows(zeta);
        let g0 = g0_matrix();
        let mut fe = vec![0.0; size];
        let mut ke = if want_tangent { vec![0.0; size * size] } else { vec![] };
        let mut phi = [vec![0.0; nd], vec![0.0; nd], vec![0.0; nd]];
        for qp in &el.points {
            let face = qp.face.as_ref().expect("face operators");
            let sv = [&qp.shape.n, &qp.shape.d1, &qp.shape.d2];
            for i in 0..3 {
                phi[i].iter_mut().for_each(|v| *v = 0.0);
                for k in 0..nen {
                    for a in 0..nd {
                        phi[i][a] += sv[i][k] * ue[k * nd + a];
                    }
                }
            }
            let l = face.ops.displacement_gradient(&phi[0], &phi[1], &phi[2]);
            // Nanson: traction per reference area is p cof(F) N with N = n̂
            let (_, cof) = fc_and_cof(&l);
            // per-family weights q A_{f,i}(ζ) and the node-independent row of ∂t/∂Φ
            for k in 0..nen {
                let nk = sv[0][k] * face.w;
                for fam in 0..3 {
                    for (i, a) in rows.a[fam].iter().enumerate() {
                        fe[k * nd + off[fam] + i] += nk * a * cof[3 * fam + 2];
                    }
                }
            }
            if !want_tangent {
                continue;
            }
            let gc = gcof_matrix(&l);
            // dt_f/dΦ^(j) = Σ_c D[f][c] G_j[c,:]
            let mut dt = [[vec![0.0; nd], vec![0.0; nd], vec![0.0; nd]], [vec![0.0; nd], vec![0.0; nd], vec![0.0; nd]], [vec![0.0; nd], vec![0.0; nd], vec![0.0; nd]]];
            for fam in 0..3 {
                let r = 3 * fam + 2;
                for c in 0..9 {
                    let d = g0[r][c] + gc[r][c];
                    if d == 0.0 {
                        continue;
                    }
                    for j in 0..3 {
                        let g = &face.ops.g[j];
                        for b in 0..nd {
                            dt[fam][j][b] += d * g[c * nd + b];
                        }
                    }
                }
            }
            for k in 0..nen {
                let nk = sv[0][k] * face.w;
                for fam in 0..3 {
                    for (i, a) in rows.a[fam].iter().enumerate() {
                        let row = (k * nd + off[fam] + i) * size;
                        let wa = nk * a;
                        for l2 in 0..nen {
                            for j in 0..3 {
                                let w = wa * sv[j][l2];
                                if w == 0.0 {
                                    continue;
                                }
                                for b in 0..nd {
                                    ke[row + l2 * nd + b] += w * dt[fam][j][b];
                                }
                            }
                        }
                    }
                }
            }
        }
        (fe, ke)
    }

    /// Adds an element vector to a full vector and an element matrix to reduced values.
    fn scatter(&self, e: usize, fe: &[f64], ke: &[f64], full: &mut [f64], values: &mut [f64]) {
        let nd = self.model.ndof_node();
        let expand = &self.model.dofs.expand;
        let el = &self.elements[e];
        let size = el.nodes.len() * nd;
        let gdofs: Vec<usize> = el.nodes.iter().flat_map(|&n| (0..nd).map(move |a| n * nd + a)).collect();
        for (a, &g) in gdofs.iter().enumerate() {
            full[g] += fe[a];
        }
        if ke.is_empty() {
            return;
        }
        for (a, &ga) in gdofs.iter().enumerate() {
            let ea = &expand[ga];
            if ea.is_empty() {
                continue;
            }
            for (b, &gb) in gdofs.iter().enumerate() {
                let v = ke[a * size + b];
                if v == 0.0 {
                    continue;
                }
                for &(rb, cb) in &expand[gb] {
                    for &(ra, ca) in ea {
                        values[self.pattern.position(ra, rb)] += ca * cb * v;
                    }
                }
            }
        }
    }

    /// Dense copy of a reduced tangent, for tests and small problems.
    pub fn to_dense(&self, m: &SparseMatrix) -> Vec<Vec<f64>> {
        let n = self.pattern.n;
        let mut d = vec![vec![0.0; n]; n];
        for c in 0..n {
            for p in self.pattern.col_ptr[c]..self.pattern.col_ptr[c + 1] {
                d[self.pattern.row_idx[p]][c] = m.values[p];
            }
        }
        d
    }

    /// Full-length external load: point loads, dead pressure and body force.
    fn external_load(&self) -> Result<Vec<f64>> {
        let model = self.model;
        let nd = model.ndof_node();
        let off = model.basis.offsets();
        let mut f = vec![0.0; model.n_full()];
        let loads = &model.loads;
        for pl in &loads.point_loads {
            let node = model.resolve_node(&pl.at)?;
            let scale = if loads.scale_on_symmetry { 0.5f64.powi(model.symmetry_planes_at(node) as i32) } else { 1.0 };
            for fam in 0..3 {
                f[node * nd + off[fam]] += scale * pl.force[fam];
            }
        }
        if let Some(p) = loads.pressure.filter(|p| !p.follower) {
            let (zeta, sign) = face_of(model, p.surface);
            let rows = model.basis.rows(zeta);
            for el in &self.elements {
                for qp in &el.points {
                    let (x1, x2) = qp.at;
                    let data = model.geometry.frame_coefficients(x1, x2, zeta)?;
                    let q = sign * p.value * data.g * qp.area_w;
                    for (k, &node) in el.nodes.iter().enumerate() {
                        let nk = qp.shape.n[k] * q;
                        for (i, a) in rows.a[2].iter().enumerate() {
                            f[node * nd + off[2] + i] += nk * a;
                        }
                    }
                }
            }
        }
        if let Some(bf) = loads.body_force {
            let zs = &model.quadrature.thickness_points;
            for el in &self.elements {
                for qp in &el.points {
                    for (layer, &z) in qp.layers.iter().zip(zs) {
                        let rows = model.basis.rows(z);
                        for (k, &node) in el.nodes.iter().enumerate() {
                            let nk = qp.shape.n[k] * layer.w * bf.density;
                            for fam in 0..3 {
                                for (i, a) in rows.a[fam].iter().enumerate() {
                                    f[node * nd + off[fam] + i] += nk * bf.b[fam] * a;
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(f)
    }

    /// Frame displacement components at (η1, η2, ζ).
    pub fn displacement_at(&self, u: &[f64], eta1: f64, eta2: f64, zeta: f64) -> Result<[f64; 3]> {
        let model = self.model;
        let (e, xi, eta) = model.mesh.locate(eta1, eta2).ok_or_else(|| {
            ShellError::UnknownNode(format!("point (eta1={eta1}, eta2={eta2}) lies outside the mesh"))
        })?;
        let (b1, b2) = model.mesh.element_box(e);
        let sv = model.element.shape(xi, eta, b1[1] - b1[0], b2[1] - b2[0]);
        let nd = model.ndof_node();
        let el = &self.elements[e];
        let mut phi = vec![0.0; nd];
        for (k, &n) in el.nodes.iter().enumerate() {
            for a in 0..nd {
                phi[a] += sv.n[k] * u[n * nd + a];
            }
        }
        Ok(model.basis.displacement(&phi, zeta))
    }

    /// Cartesian displacement at (η1, η2, ζ).
    pub fn cartesian_displacement(&self, u: &[f64], eta1: f64, eta2: f64, zeta: f64) -> Result<Vec3> {
        let d = self.displacement_at(u, eta1, eta2, zeta)?;
        let fr = self.model.geometry.frame_vectors(eta1, eta2);
        Ok(std::array::from_fn(|k| d[0] * fr[0][k] + d[1] * fr[1][k] + d[2] * fr[2][k]))
    }
}

/// ζ of a lateral face and the sign mapping inward pressure to +n̂ traction.
fn face_of(model: &ShellModel, surface: Surface) -> (f64, f64) {
    let (zb, zt) = model.basis.zeta_bounds;
    match surface {
        Surface::Bottom => (zb, 1.0),
        Surface::Top => (zt, -1.0),
    }
}

fn precompute_element(model: &ShellModel, e: usize) -> Result<ElementData> {
    let (b1, b2) = model.mesh.element_box(e);
    let (h1, h2) = (b1[1] - b1[0], b2[1] - b2[0]);
    let jac = 0.25 * h1 * h2;
    let q = &model.quadrature;
    let rows: Vec<_> = q.thickness_points.iter().map(|&z| model.basis.rows(z)).collect();
    let mut points = Vec::with_capacity(q.plane_points.len());
    for (&(xi, eta), &w) in q.plane_points.iter().zip(&q.plane_weights) {
        let x1 = b1[0] + 0.5 * (xi + 1.0) * h1;
        let x2 = b2[0] + 0.5 * (eta + 1.0) * h2;
        let shape = model.element.shape(xi, eta, h1, h2);
        let mut layers = Vec::with_capacity(rows.len());
        for ((&z, &wz), r) in q.thickness_points.iter().zip(&q.thickness_weights).zip(&rows) {
            let data = model.geometry.frame_coefficients(x1, x2, z)?;
            layers.push(Layer { ops: gradient_operators(&data, &model.basis, r), w: data.g * wz * w * jac });
        }
        let face = match model.loads.pressure {
            Some(p) if p.follower => {
                let (zeta, sign) = face_of(model, p.surface);
                let data = model.geometry.frame_coefficients(x1, x2, zeta)?;
                let ops = gradient_operators(&data, &model.basis, &model.basis.rows(zeta));
                Some(Layer { ops, w: sign * p.value * data.g * w * jac })
            }
            _ => None,
        };
        points.push(QuadPoint { shape, at: (x1, x2), area_w: w * jac, layers, face });
    }
    Ok(ElementData { nodes: model.mesh.element_nodes(e), points })
}

fn build_pattern(model: &ShellModel, elements: &[ElementData]) -> SparsePattern {
    let nd = model.ndof_node();
    let n = model.dofs.n_free();
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for el in elements {
        let mut red: Vec<usize> = el
            .nodes
            .iter()
            .flat_map(|&nn| (0..nd).map(move |a| nn * nd + a))
            .flat_map(|g| model.dofs.expand[g].iter().map(|&(r, _)| r))
            .collect();
        red.sort_unstable();
        red.dedup();
        for &c in &red {
            cols[c].extend_from_slice(&red);
        }
    }
    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut row_idx = Vec::new();
    col_ptr.push(0);
    for mut c in cols {
        c.sort_unstable();
        c.dedup();
        row_idx.extend(c);
        col_ptr.push(row_idx.len());
    }
    SparsePattern { n, col_ptr, row_idx }
}
