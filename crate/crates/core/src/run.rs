//! Builds the model described by a [`RunConfig`], solves it and writes results.

use crate::assembly::Assembler;
use crate::config::RunConfig;
use crate::error::{Result, ShellError};
use crate::mesh::ShellModel;
use crate::output::{Emitter, RunLog};
use crate::solver::{EquilibriumState, Method, Solver};
use std::path::Path;

pub struct RunOutcome {
    pub states: Vec<EquilibriumState>,
    pub log: RunLog,
    /// The solver error, if the path ended early.
    pub error: Option<ShellError>,
}

/// Runs the configured analysis, streaming results into `dir`.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let model = ShellModel::build(cfg.model_spec()?)?;
    let asm = Assembler::new(&model)?;
    let solver = Solver::new(&asm, cfg.solver.clone())?;
    log::info!("{} free unknowns, {} elements, method {:?}", asm.n_free(), model.mesh.num_elements(), cfg.solver.method);
    let log = RunLog {
        preset: cfg.preset.clone(),
        method: match cfg.solver.method {
            Method::Newton => "newton".into(),
            Method::ArcLength => "arc_length".into(),
        },
        free_dofs: asm.n_free(),
        status: "running".into(),
        error: None,
        steps: vec![],
    };
    let mut emitter = Emitter::create(&asm, dir, cfg.probes()?, cfg.reference_load_magnitude(), cfg.output.vtk_every, log)?;
    let mut states = Vec::new();
    let result = solver.run(&mut |s: &EquilibriumState| {
        states.push(s.clone());
        emitter.record(s)
    });
    match result {
        Ok(_) => Ok(RunOutcome { states, log: emitter.finish(Ok(()))?, error: None }),
        Err(e) => {
            let log = emitter.finish(Err(&e))?;
            Ok(RunOutcome { states, log, error: Some(e) })
        }
    }
}
