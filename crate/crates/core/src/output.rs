//! Result files: `curve.csv`, `surface_<step>.vtk` and `run.json`.
//!
//! Every accepted step is flushed to disk as soon as it arrives, so an
//! interrupted run keeps the path traced so far.

use crate::assembly::Assembler;
use crate::error::{Result, ShellError};
use crate::geometry::Vec3;
use crate::solver::EquilibriumState;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

fn io_err(path: &Path, e: impl std::fmt::Display) -> ShellError {
    ShellError::Io(std::io::Error::other(format!("{}: {e}", path.display())))
}

/// One accepted step in the structured run log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLog {
    pub step: usize,
    pub lambda: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub preset: Option<String>,
    pub method: String,
    pub free_dofs: usize,
    pub status: String,
    pub error: Option<String>,
    pub steps: Vec<StepLog>,
}

pub fn csv_header(probes: usize) -> Vec<String> {
    let mut h: Vec<String> = ["step", "lambda", "load", "iterations"].iter().map(|s| s.to_string()).collect();
    for k in 0..probes {
        for c in ["u1", "u2", "u3", "magnitude"] {
            h.push(format!("probe{k}_{c}"));
        }
    }
    h
}

pub struct Emitter<'a, 'm> {
    asm: &'a Assembler<'m>,
    dir: PathBuf,
    probes: Vec<[f64; 3]>,
    load_scale: f64,
    vtk_every: usize,
    csv: csv::Writer<File>,
    log: RunLog,
}

impl<'a, 'm> Emitter<'a, 'm> {
    /// Creates the directory and writes the CSV header.
    pub fn create(
        asm: &'a Assembler<'m>,
        dir: &Path,
        probes: Vec<[f64; 3]>,
        load_scale: f64,
        vtk_every: usize,
        log: RunLog,
    ) -> Result<Emitter<'a, 'm>> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for p in &probes {
            asm.displacement_at(&vec![0.0; asm.n_full()], p[0], p[1], p[2])?;
        }
        let path = dir.join("curve.csv");
        let mut csv = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        csv.write_record(csv_header(probes.len())).map_err(|e| io_err(&path, e))?;
        csv.flush().map_err(|e| io_err(&path, e))?;
        let em = Emitter { asm, dir: dir.to_path_buf(), probes, load_scale, vtk_every, csv, log };
        em.write_log()?;
        Ok(em)
    }

    pub fn record(&mut self, state: &EquilibriumState) -> Result<()> {
        let mut row = vec![
            state.step.to_string(),
            state.lambda.to_string(),
            (state.lambda * self.load_scale).to_string(),
            state.iterations.to_string(),
        ];
        for p in &self.probes {
            let d = self.asm.displacement_at(&state.u, p[0], p[1], p[2])?;
            let m = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            row.extend(d.iter().chain([&m]).map(|v| v.to_string()));
        }
        let path = self.dir.join("curve.csv");
        self.csv.write_record(&row).map_err(|e| io_err(&path, e))?;
        self.csv.flush().map_err(|e| io_err(&path, e))?;
        if self.vtk_every > 0 && state.step % self.vtk_every == 0 {
            write_vtk(self.asm, &state.u, &self.dir.join(format!("surface_{}.vtk", state.step)), state.step)?;
        }
        self.log.steps.push(StepLog {
            step: state.step,
            lambda: state.lambda,
            iterations: state.iterations,
            residual_history: state.residual_history.clone(),
            radius: state.radius,
        });
        self.write_log()
    }

    /// Records the final status and returns the log.
    pub fn finish(mut self, outcome: std::result::Result<(), &ShellError>) -> Result<RunLog> {
        match outcome {
            Ok(()) => self.log.status = "completed".into(),
            Err(e) => {
                self.log.status = "failed".into();
                self.log.error = Some(e.to_string());
            }
        }
        self.write_log()?;
        Ok(self.log)
    }

    fn write_log(&self) -> Result<()> {
        let path = self.dir.join("run.json");
        let text = serde_json::to_string_pretty(&self.log).map_err(|e| io_err(&path, e))?;
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}

/// Deformed reference surface at the mesh nodes.
pub fn deformed_points(asm: &Assembler, u: &[f64]) -> Vec<Vec3> {
    let model = asm.model;
    let nd = model.ndof_node();
    (0..model.mesh.num_nodes())
        .map(|n| {
            let (e1, e2) = model.mesh.node_coords(n);
            let d = model.basis.displacement(&u[n * nd..(n + 1) * nd], 0.0);
            let fr = model.geometry.frame_vectors(e1, e2);
            let p = model.geometry.position(e1, e2, 0.0);
            std::array::from_fn(|k| p[k] + d[0] * fr[0][k] + d[1] * fr[1][k] + d[2] * fr[2][k])
        })
        .collect()
}

/// Quads between neighbouring mesh nodes, wrapping around a periodic direction.
pub fn surface_quads(asm: &Assembler) -> Vec<[usize; 4]> {
    let mesh = &asm.model.mesh;
    let cols = if mesh.periodic { mesh.n1() } else { mesh.n1() - 1 };
    let mut quads = Vec::with_capacity(cols * (mesh.n2() - 1));
    for j in 0..mesh.n2() - 1 {
        for i in 0..cols {
            quads.push([mesh.node(i, j), mesh.node(i + 1, j), mesh.node(i + 1, j + 1), mesh.node(i, j + 1)]);
        }
    }
    quads
}

/// Legacy-VTK ASCII polydata with the frame displacement as point vectors.
pub fn write_vtk(asm: &Assembler, u: &[f64], path: &Path, step: usize) -> Result<()> {
    let model = asm.model;
    let nd = model.ndof_node();
    let points = deformed_points(asm, u);
    let quads = surface_quads(asm);
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "deformed reference surface, step {step}")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET POLYDATA")?;
        writeln!(w, "POINTS {} double", points.len())?;
        for p in &points {
            writeln!(w, "{:e} {:e} {:e}", p[0], p[1], p[2])?;
        }
        writeln!(w, "POLYGONS {} {}", quads.len(), 5 * quads.len())?;
        for q in &quads {
            writeln!(w, "4 {} {} {} {}", q[0], q[1], q[2], q[3])?;
        }
        writeln!(w, "POINT_DATA {}", points.len())?;
        writeln!(w, "VECTORS frame_displacement double")?;
        for n in 0..points.len() {
            let d = model.basis.displacement(&u[n * nd..(n + 1) * nd], 0.0);
            writeln!(w, "{:e} {:e} {:e}", d[0], d[1], d[2])?;
        }
        w.flush()
    };
    body().map_err(|e| io_err(path, e))
}
