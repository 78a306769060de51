//! Convergence experiment driver with CSV and markdown output.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use log::{info, warn};

use super::errors::{eoc, error_quantities, ErrorQuantities};
use super::manufactured::{BoundaryData, ManufacturedCase};
use crate::constitutive::ModelParams;
use crate::forms::Assembler;
use crate::mesh::Mesh;
use crate::rothe::{run_rothe, RotheConfig, Trajectory};
use crate::Result;

/// Names of the five error quantities, in [`ErrorQuantities::as_array`] order.
pub const QUANTITIES: [&str; 5] = ["eF", "eJump", "eFstar", "eL2", "eQ"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `(p, ρ)` pairs.
    pub cases: Vec<(f64, f64)>,
    /// Refinement levels, ascending.
    pub levels: Vec<u32>,
    /// Template for everything except `p`.
    pub params: ModelParams,
    pub t_final: f64,
    pub rothe: RotheConfig,
    pub boundary_data: BoundaryData,
    pub volume_degree: usize,
    pub face_points: usize,
    /// Record wall-clock seconds in the CSV (breaks byte reproducibility).
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            cases: vec![(2.0, 0.1), (2.5, 0.1), (2.0, 0.2), (2.5, 0.2)],
            levels: vec![1, 2, 3, 4],
            params: ModelParams::default(),
            t_final: 0.1,
            rothe: RotheConfig::default(),
            boundary_data: BoundaryData::default(),
            volume_degree: 6,
            face_points: 3,
            timing: true,
        }
    }
}

/// Time steps on level `n`.
pub fn steps_at_level(level: u32) -> usize {
    1 << (level + 2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub level: u32,
    pub h: f64,
    pub tau: f64,
    pub errors: ErrorQuantities,
    /// EOC against the previous level, per quantity.
    pub eoc: [Option<f64>; 5],
    pub newton_iterations: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub case_id: String,
    pub p: f64,
    pub rho: f64,
    pub levels: Vec<LevelRecord>,
}

impl ErrorReport {
    pub fn last_eoc(&self, quantity: usize) -> Option<f64> {
        self.levels.last().and_then(|l| l.eoc[quantity])
    }
}

/// Outcome of one level: the trajectory together with its assembler.
pub struct LevelRun {
    pub assembler: Assembler,
    pub case: ManufacturedCase,
    pub trajectory: Trajectory,
    pub errors: ErrorQuantities,
    pub wall_seconds: f64,
}

/// Solve one `(p, ρ)` case on one level.
pub fn run_level(config: &ExperimentConfig, p: f64, rho: f64, level: u32) -> Result<LevelRun> {
    let start = Instant::now();
    let mut params = config.params.clone();
    params.p = p;
    let case = ManufacturedCase::new(params.clone(), rho, config.boundary_data)?;
    let assembler = Assembler::new(Mesh::at_level(level), params, config.volume_degree, config.face_points)?;
    let initial = assembler.project_velocity(|x| case.exact_velocity(0.0, x))?;
    let k = steps_at_level(level);
    let trajectory = run_rothe(&assembler, &case, &initial, k, config.t_final, &config.rothe)?;
    let errors = error_quantities(&assembler, &trajectory, &case)?;
    Ok(LevelRun {
        assembler,
        case,
        trajectory,
        errors,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn case_id(p: f64, rho: f64) -> String {
    format!("p{p}_rho{rho}")
}

/// Run all levels of one case.
pub fn run_case(config: &ExperimentConfig, p: f64, rho: f64) -> Result<ErrorReport> {
    let mut levels: Vec<LevelRecord> = Vec::new();
    for &level in &config.levels {
        let run = run_level(config, p, rho, level)?;
        let h = run.assembler.mesh().h_max();
        let tau = run.trajectory.tau;
        let mut rates = [None; 5];
        if let Some(prev) = levels.last() {
            let a = prev.errors.as_array();
            let b = run.errors.as_array();
            for i in 0..5 {
                rates[i] = eoc(a[i], b[i], prev.h + prev.tau, h + tau);
            }
        }
        info!(
            "p = {p}, ρ = {rho}, level {level}: errors {:?}, eoc {:?} ({:.1} s)",
            run.errors.as_array(),
            rates,
            run.wall_seconds
        );
        levels.push(LevelRecord {
            level,
            h,
            tau,
            errors: run.errors,
            eoc: rates,
            newton_iterations: run.trajectory.newton_iterations(),
            wall_seconds: if config.timing { run.wall_seconds } else { 0.0 },
        });
    }
    Ok(ErrorReport {
        case_id: case_id(p, rho),
        p,
        rho,
        levels,
    })
}

/// Run every case; a failing case is logged and reported as an error
/// without stopping the others.
pub fn run_experiment(config: &ExperimentConfig) -> Vec<(f64, f64, Result<ErrorReport>)> {
    config
        .cases
        .iter()
        .map(|&(p, rho)| {
            let r = run_case(config, p, rho);
            if let Err(e) = &r {
                warn!("case p = {p}, ρ = {rho} failed: {e}");
            }
            (p, rho, r)
        })
        .collect()
}

pub const CSV_HEADER: &str = "case,p,rho,level,h,tau,eF,eJump,eFstar,eL2,eQ,eocF,eocJump,eocFstar,eocL2,eocQ,newton_iters_total,wall_seconds";

/// One CSV row per `(p, ρ, level)`; missing EOCs are empty fields.
pub fn write_csv<W: Write>(mut out: W, reports: &[ErrorReport]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        for l in &r.levels {
            let mut line = format!("{},{},{},{},{:.12e},{:.12e}", r.case_id, r.p, r.rho, l.level, l.h, l.tau);
            for e in l.errors.as_array() {
                let _ = write!(line, ",{e:.12e}");
            }
            for e in l.eoc {
                match e {
                    Some(v) => {
                        let _ = write!(line, ",{v:.6}");
                    }
                    None => line.push(','),
                }
            }
            let _ = write!(line, ",{},{:.3}", l.newton_iterations, l.wall_seconds);
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// Markdown tables of the EOCs, one per error quantity, with one row per
/// case and one column per level.
pub fn markdown_tables(reports: &[ErrorReport]) -> String {
    let mut out = String::new();
    let levels: Vec<u32> = reports.first().map(|r| r.levels.iter().map(|l| l.level).collect()).unwrap_or_default();
    for (qi, name) in QUANTITIES.iter().enumerate() {
        let _ = writeln!(out, "EOC of {name}\n");
        let _ = write!(out, "| (p, ρ) |");
        for l in &levels {
            let _ = write!(out, " n={l} |");
        }
        let _ = write!(out, "\n|---|");
        for _ in &levels {
            out.push_str("---|");
        }
        out.push('\n');
        for r in reports {
            let _ = write!(out, "| ({}, {}) |", r.p, r.rho);
            for l in &r.levels {
                match l.eoc[qi] {
                    Some(v) => {
                        let _ = write!(out, " {v:.3} |");
                    }
                    None => out.push_str(" – |"),
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
