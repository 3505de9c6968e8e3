//! Load-controlled Newton and cylindrical arc-length continuation.

use crate::assembly::Assembler;
use crate::error::{Result, ShellError};
use crate::linsolve::{Factorization, LinearSolver};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Newton,
    ArcLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub method: Method,
    pub tol: f64,
    pub max_iterations: usize,
    pub max_steps: usize,
    /// Newton: explicit load factors; when empty, `max_steps` equal increments up to `max_load_factor`.
    pub load_factors: Vec<f64>,
    pub max_load_factor: f64,
    pub max_cutbacks: usize,
    pub initial_radius: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub desired_iterations: usize,
    /// Load weighting in the arc-length constraint.
    pub psi: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            method: Method::Newton,
            tol: 1e-3,
            max_iterations: 25,
            max_steps: 10,
            load_factors: vec![],
            max_load_factor: 1.0,
            max_cutbacks: 5,
            initial_radius: 0.1,
            min_radius: 1e-6,
            max_radius: 1.0,
            desired_iterations: 5,
            psi: 0.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ShellError::ConfigError(m.to_string()));
        if !(self.tol > 0.0) {
            return bad("solver tolerance must be positive");
        }
        if self.max_iterations == 0 || self.max_steps == 0 {
            return bad("max_iterations and max_steps must be at least 1");
        }
        if self.method == Method::ArcLength {
            if !(self.min_radius > 0.0 && self.min_radius <= self.initial_radius && self.initial_radius <= self.max_radius) {
                return bad("arc-length radii must satisfy 0 < min <= initial <= max");
            }
            if self.desired_iterations == 0 {
                return bad("desired_iterations must be at least 1");
            }
            if !(self.psi >= 0.0) {
                return bad("psi must be nonnegative");
            }
        }
        Ok(())
    }
}

/// A converged point on the equilibrium path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumState {
    /// Full-length DOF vector.
    pub u: Vec<f64>,
    pub lambda: f64,
    pub step: usize,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub radius: Option<f64>,
}

pub type Observer<'o> = dyn FnMut(&EquilibriumState) -> Result<()> + 'o;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub struct Solver<'a, 'm> {
    pub asm: &'a Assembler<'m>,
    pub settings: SolverSettings,
    linear: LinearSolver,
    load: Vec<f64>,
}

struct Linearization {
    residual: Vec<f64>,
    factor: Option<Factorization>,
    /// Reduced load at unit λ for the current state.
    load: Vec<f64>,
}

impl<'a, 'm> Solver<'a, 'm> {
    pub fn new(asm: &'a Assembler<'m>, settings: SolverSettings) -> Result<Solver<'a, 'm>> {
        settings.validate()?;
        let rigid = asm.model.free_rigid_modes();
        if rigid > 0 {
            return Err(ShellError::SingularSystem {
                message: "boundary conditions leave rigid-body motion unrestrained".into(),
                rigid_modes: rigid,
            });
        }
        let linear = LinearSolver::new(&asm.pattern)?;
        let load = asm.model.dofs.restrict_vec(asm.reference_load());
        Ok(Solver { asm, settings, linear, load })
    }

    /// Reduced reference load.
    pub fn reference_load(&self) -> &[f64] {
        &self.load
    }

    fn full(&self, u: &[f64]) -> Vec<f64> {
        self.asm.model.dofs.expand_vec(u)
    }

    fn linearize(&self, u: &[f64], lambda: f64, tangent: bool) -> Result<Linearization> {
        let full = self.full(u);
        let ev = self.asm.evaluate(&full, tangent)?;
        let mut tangent_matrix = ev.tangent;
        let mut load = self.load.clone();
        if self.asm.has_follower_load() {
            let (f, df) = self.asm.follower_load(&full, tangent)?;
            for (a, b) in load.iter_mut().zip(self.asm.model.dofs.restrict_vec(&f)) {
                *a += b;
            }
            if let (Some(k), Some(df)) = (tangent_matrix.as_mut(), df) {
                for (a, b) in k.values.iter_mut().zip(&df.values) {
                    *a -= lambda * b;
                }
            }
        }
        let mut residual = self.asm.model.dofs.restrict_vec(&ev.internal);
        for (r, f) in residual.iter_mut().zip(&load) {
            *r -= lambda * f;
        }
        let factor = match tangent_matrix {
            Some(k) => Some(self.linear.factorize(&k)?),
            None => None,
        };
        Ok(Linearization { residual, factor, load })
    }

    fn scale(lambda: f64, load: &[f64]) -> f64 {
        (lambda.abs() * norm(load)).max(1.0)
    }

    /// Equilibrium at a fixed load factor starting from `u0` (reduced).
    pub fn newton(&self, u0: &[f64], lambda: f64) -> Result<(Vec<f64>, usize, Vec<f64>)> {
        let mut u = u0.to_vec();
        let mut history = Vec::new();
        for it in 0..=self.settings.max_iterations {
            let lin = self.linearize(&u, lambda, true)?;
            let rn = norm(&lin.residual) / Self::scale(lambda, &lin.load);
            history.push(rn);
            log::debug!("newton lambda={lambda:.6e} it={it} residual={rn:.3e}");
            if !rn.is_finite() {
                return Err(ShellError::NonFinite("residual".into()));
            }
            if rn <= self.settings.tol {
                return Ok((u, it, history));
            }
            if it == self.settings.max_iterations {
                break;
            }
            let du = lin.factor.as_ref().expect("tangent requested").solve(&lin.residual)?;
            for (x, d) in u.iter_mut().zip(&du) {
                *x -= d;
            }
        }
        Err(ShellError::NonConvergence(format!(
            "Newton did not converge at lambda={lambda} within {} iterations (residual {:.3e})",
            self.settings.max_iterations,
            history.last().copied().unwrap_or(f64::NAN)
        )))
    }

    fn targets(&self) -> Vec<f64> {
        if !self.settings.load_factors.is_empty() {
            return self.settings.load_factors.clone();
        }
        let n = self.settings.max_steps;
        (1..=n).map(|k| self.settings.max_load_factor * k as f64 / n as f64).collect()
    }

    /// Runs the configured method and returns every accepted state.
    pub fn run(&self, observer: &mut Observer<'_>) -> Result<Vec<EquilibriumState>> {
        match self.settings.method {
            Method::Newton => self.run_newton(observer),
            Method::ArcLength => self.run_arc_length(observer),
        }
    }

    pub fn run_newton(&self, observer: &mut Observer<'_>) -> Result<Vec<EquilibriumState>> {
        let n = self.asm.n_free();
        let mut u = vec![0.0; n];
        let mut lambda = 0.0;
        let mut out = Vec::new();
        for target in self.targets() {
            let mut cut: usize = 0;
            while lambda != target {
                let trial = if cut == 0 { target } else { lambda + (target - lambda) * 0.5f64.powi(cut as i32) };
                match self.newton(&u, trial) {
                    Ok((un, iterations, residual_history)) => {
                        u = un;
                        lambda = trial;
                        let state = EquilibriumState {
                            u: self.full(&u),
                            lambda,
                            step: out.len() + 1,
                            iterations,
                            residual_history,
                            radius: None,
                        };
                        log::info!("step {} lambda={lambda:.6e} iterations={iterations}", state.step);
                        observer(&state)?;
                        out.push(state);
                        cut = cut.saturating_sub(1);
                    }
                    Err(e) if e.is_step_failure() && cut < self.settings.max_cutbacks => {
                        cut += 1;
                        log::warn!("load increment to {trial:.6e} failed ({e}); halving");
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(out)
    }

    fn predictor(
        &self,
        fac: &Factorization,
        load: &[f64],
        radius: f64,
        prev: Option<(&[f64], f64)>,
    ) -> Result<(Vec<f64>, f64, Vec<f64>)> {
        let ut = fac.solve(load)?;
        let ff = dot(load, load);
        let psi2 = self.settings.psi * self.settings.psi;
        let denom = (dot(&ut, &ut) + psi2 * ff).sqrt();
        if !(denom > 0.0) {
            return Err(ShellError::SingularSystem { message: "zero reference load".into(), rigid_modes: 0 });
        }
        let mut dl = radius / denom;
        if let Some((du_prev, dlam_prev)) = prev {
            if dot(du_prev, &ut) + psi2 * dlam_prev * ff < 0.0 {
                dl = -dl;
            }
        }
        Ok((ut.iter().map(|v| dl * v).collect(), dl, ut))
    }

    /// One arc-length step from (u, λ); returns the converged increment.
    fn arc_step(
        &self,
        u: &[f64],
        lambda: f64,
        radius: f64,
        prev: Option<(&[f64], f64)>,
    ) -> Result<(Vec<f64>, f64, usize, Vec<f64>)> {
        let psi2 = self.settings.psi * self.settings.psi;
        let lin0 = self.linearize(u, lambda, true)?;
        let (mut du, mut dlam, _) = self.predictor(lin0.factor.as_ref().unwrap(), &lin0.load, radius, prev)?;
        let mut history = Vec::new();
        let mut trial: Vec<f64> = u.to_vec();
        for it in 1..=self.settings.max_iterations {
            for ((t, a), b) in trial.iter_mut().zip(u).zip(&du) {
                *t = a + b;
            }
            let lam = lambda + dlam;
            let lin = self.linearize(&trial, lam, true)?;
            let rn = norm(&lin.residual) / Self::scale(lam, &lin.load);
            history.push(rn);
            log::debug!("arc-length lambda={lam:.6e} it={it} residual={rn:.3e}");
            if !rn.is_finite() {
                return Err(ShellError::NonFinite("residual".into()));
            }
            if rn <= self.settings.tol {
                return Ok((du, dlam, it, history));
            }
            let fac = lin.factor.as_ref().unwrap();
            let ff = dot(&lin.load, &lin.load);
            let sol = fac.solve_many(&[&lin.residual, &lin.load])?;
            let ur: Vec<f64> = sol[0].iter().map(|v| -v).collect();
            let ut = &sol[1];
            let w: Vec<f64> = du.iter().zip(&ur).map(|(a, b)| a + b).collect();
            let a = dot(ut, ut) + psi2 * ff;
            let b = 2.0 * dot(&w, ut) + 2.0 * psi2 * dlam * ff;
            let c = dot(&w, &w) + psi2 * dlam * dlam * ff - radius * radius;
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return Err(ShellError::ComplexRoots);
            }
            let sq = disc.sqrt();
            let q = -0.5 * (b + b.signum() * sq);
            let roots = if q == 0.0 { [0.0, 0.0] } else { [q / a, c / q] };
            let mut best = None;
            for &r in &roots {
                let cand: Vec<f64> = w.iter().zip(ut).map(|(x, y)| x + r * y).collect();
                let cos = dot(&cand, &du) + psi2 * (dlam + r) * dlam * ff;
                if best.as_ref().is_none_or(|(bc, _, _)| cos > *bc) {
                    best = Some((cos, r, cand));
                }
            }
            let (_, r, cand) = best.unwrap();
            du = cand;
            dlam += r;
        }
        Err(ShellError::NonConvergence(format!(
            "arc-length corrector did not converge within {} iterations",
            self.settings.max_iterations
        )))
    }

    pub fn run_arc_length(&self, observer: &mut Observer<'_>) -> Result<Vec<EquilibriumState>> {
        let s = &self.settings;
        let mut u = vec![0.0; self.asm.n_free()];
        let mut lambda: f64 = 0.0;
        let mut radius = s.initial_radius;
        let mut prev: Option<(Vec<f64>, f64)> = None;
        let mut out = Vec::new();
        while out.len() < s.max_steps && lambda.abs() < s.max_load_factor {
            let mut cuts = 0;
            let (du, dlam, iterations, history) = loop {
                match self.arc_step(&u, lambda, radius, prev.as_ref().map(|(a, b)| (a.as_slice(), *b))) {
                    Ok(r) => break r,
                    Err(e) if e.is_step_failure() => {
                        cuts += 1;
                        radius *= 0.5;
                        log::warn!("arc-length step failed ({e}); radius halved to {radius:.3e}");
                        if radius < s.min_radius || cuts > s.max_cutbacks {
                            return Err(ShellError::NonConvergence(format!(
                                "arc-length step {} failed after {cuts} cutbacks: {e}",
                                out.len() + 1
                            )));
                        }
                    }
                    Err(e) => return Err(e),
                }
            };
            for (a, b) in u.iter_mut().zip(&du) {
                *a += b;
            }
            lambda += dlam;
            let state = EquilibriumState {
                u: self.full(&u),
                lambda,
                step: out.len() + 1,
                iterations,
                residual_history: history,
                radius: Some(radius),
            };
            log::info!("step {} lambda={lambda:.6e} iterations={iterations} radius={radius:.3e}", state.step);
            observer(&state)?;
            out.push(state);
            prev = Some((du, dlam));
            let ratio = (s.desired_iterations as f64 / iterations.max(1) as f64).sqrt();
            radius = (radius * ratio).clamp(s.min_radius, s.max_radius);
        }
        Ok(out)
    }
}
