//! Implicit Euler time stepping, time interpolants and temporal means.

use log::info;

use crate::elements::gauss_legendre_unit;
use crate::forms::{Assembler, BoundaryDatum, EnergyTerms, StepContext};
use crate::solver::{newton_solve, LinearSolver, NewtonConfig};
use crate::tensor::Tensor2;
use crate::{Error, Result};

/// Time-dependent data of the evolution problem.
pub trait ProblemData {
    /// `(g, G)` at `(t, x)`, the body force and the divergence-form force.
    fn forcing(&self, t: f64, x: [f64; 2]) -> ([f64; 2], Tensor2);

    /// Dirichlet datum on `∂Ω`; `None` means homogeneous.
    fn boundary(&self, _t: f64, _x: [f64; 2]) -> Option<[f64; 2]> {
        None
    }
}

/// No forcing and homogeneous boundary values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unforced;

impl ProblemData for Unforced {
    fn forcing(&self, _t: f64, _x: [f64; 2]) -> ([f64; 2], Tensor2) {
        ([0.0; 2], Tensor2::ZERO)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotheConfig {
    pub newton: NewtonConfig,
    /// Use temporal means of the forcing over each step instead of point
    /// values at the step end.
    pub clement: bool,
}

impl Default for RotheConfig {
    fn default() -> Self {
        Self {
            newton: NewtonConfig::default(),
            clement: false,
        }
    }
}

/// Per-step solver and energy information.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub newton_iterations: usize,
    pub final_residual: f64,
    pub energy: EnergyTerms,
}

/// Iterates `x^k`, `k = 0..=K`, over the full unknown vector
/// `[velocity, pressure, λ]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tau: f64,
    pub t_final: f64,
    pub n_velocity: usize,
    pub n_pressure: usize,
    pub states: Vec<Vec<f64>>,
    /// One record per step `k = 1..=K`.
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    pub fn velocity(&self, k: usize) -> &[f64] {
        &self.states[k][..self.n_velocity]
    }

    pub fn pressure(&self, k: usize) -> &[f64] {
        &self.states[k][self.n_velocity..self.n_velocity + self.n_pressure]
    }

    pub fn newton_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.newton_iterations).sum()
    }
}

/// Assemble the step data at time `t`.
pub fn step_context<P: ProblemData>(
    assembler: &Assembler,
    problem: &P,
    t: f64,
    tau: f64,
    v_prev: Vec<f64>,
    clement: bool,
) -> StepContext {
    let forcing = if clement {
        clement_mean(|s| assembler.forcing_vector(|x| problem.forcing(s, x)), (t / tau).round() as usize, tau)
    } else {
        assembler.forcing_vector(|x| problem.forcing(t, x))
    };
    let has_datum = assembler
        .mesh()
        .boundary_faces()
        .next()
        .map(|(_, f)| problem.boundary(t, assembler.mesh().vertices()[f.vertices[0]]).is_some())
        .unwrap_or(false);
    let datum = has_datum.then(|| {
        BoundaryDatum::new(&assembler.calc, |x| problem.boundary(t, x).unwrap_or([0.0; 2]))
    });
    StepContext {
        tau: Some(tau),
        v_prev,
        forcing,
        datum,
    }
}

/// Run `K` implicit Euler steps on `(0, T]` from the velocity `initial`.
/// The Newton iteration at step `k` starts from the solution of step `k-1`.
pub fn run_rothe<P: ProblemData>(
    assembler: &Assembler,
    problem: &P,
    initial: &[f64],
    k_steps: usize,
    t_final: f64,
    config: &RotheConfig,
) -> Result<Trajectory> {
    if k_steps == 0 || !(t_final > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need K ≥ 1 and T > 0, got K = {k_steps}, T = {t_final}"
        )));
    }
    let nv = assembler.n_velocity();
    if initial.len() != nv {
        return Err(Error::InvalidArgument(format!(
            "initial velocity has length {}, expected {nv}",
            initial.len()
        )));
    }
    let tau = t_final / k_steps as f64;
    let mut x = vec![0.0; assembler.n_unknowns()];
    x[..nv].copy_from_slice(initial);
    let mut states = vec![x.clone()];
    let mut steps = Vec::with_capacity(k_steps);
    let mut solver = LinearSolver::with_reuse();
    for k in 1..=k_steps {
        let t = k as f64 * tau;
        let ctx = step_context(assembler, problem, t, tau, x[..nv].to_vec(), config.clement);
        let report = newton_solve(&mut x, &config.newton, &mut solver, |y, jac| assembler.assemble(y, &ctx, jac))
            .map_err(|e| Error::TimeStep {
                step: k,
                source: Box::new(e),
            })?;
        info!(
            "step {k}/{k_steps}: {} Newton iterations, residual {:.3e}",
            report.iterations,
            report.residuals.last().copied().unwrap_or(0.0)
        );
        let energy = assembler.energy_terms(&x, &ctx)?;
        steps.push(StepRecord {
            newton_iterations: report.iterations,
            final_residual: *report.residuals.last().unwrap_or(&0.0),
            energy,
        });
        states.push(x.clone());
    }
    Ok(Trajectory {
        tau,
        t_final,
        n_velocity: nv,
        n_pressure: assembler.n_pressure(),
        states,
        steps,
    })
}

fn check_time(traj: &Trajectory, t: f64) -> Result<usize> {
    if !(t > 0.0 && t <= traj.t_final * (1.0 + 1e-14)) {
        return Err(Error::TimeOutOfRange { t, t_final: traj.t_final });
    }
    Ok(((t / traj.tau).ceil() as usize).clamp(1, traj.n_steps()))
}

/// Piecewise constant interpolant: `x^k` on `((k-1)τ, kτ]`.
pub fn pc_interpolant(traj: &Trajectory, t: f64) -> Result<Vec<f64>> {
    let k = check_time(traj, t)?;
    Ok(traj.states[k].clone())
}

/// Piecewise affine interpolant through the nodes `(kτ, x^k)`.
pub fn pa_interpolant(traj: &Trajectory, t: f64) -> Result<Vec<f64>> {
    let k = check_time(traj, t)?;
    let s = (t / traj.tau - (k - 1) as f64).clamp(0.0, 1.0);
    Ok(traj.states[k]
        .iter()
        .zip(&traj.states[k - 1])
        .map(|(a, b)| s * a + (1.0 - s) * b)
        .collect())
}

/// Temporal mean `(1/τ) ∫_{I_k} f(s) ds` over `I_k = ((k-1)τ, kτ]`
/// with 5-point Gauss quadrature, `k ≥ 1`.
pub fn clement_mean<F: Fn(f64) -> Vec<f64>>(f: F, k: usize, tau: f64) -> Vec<f64> {
    let k = k as f64;
    let (points, weights) = gauss_legendre_unit(5);
    let mut out: Vec<f64> = Vec::new();
    for (s, w) in points.iter().zip(&weights) {
        let val = f((k - 1.0 + s) * tau);
        if out.is_empty() {
            out = vec![0.0; val.len()];
        }
        for (o, v) in out.iter_mut().zip(&val) {
            *o += w * v;
        }
    }
    out
}

/// Outcome of the discrete integration-by-parts inequality
/// `Σ_{k=j+1}^{l} τ (d_τ v^k, v^k) ≥ ½‖v^l‖² - ½‖v^j‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpReport {
    /// Smallest `lhs - rhs` over all pairs `j ≤ l`.
    pub min_slack: f64,
    /// Largest `|lhs - rhs - (τ/2) Σ ‖d_τ v^k‖²|`, which vanishes exactly.
    pub max_identity_defect: f64,
}

/// Check the discrete integration-by-parts formula on the velocity of a
/// trajectory with the inner product `inner`.
pub fn discrete_ibp_check<I: Fn(&[f64], &[f64]) -> f64>(traj: &Trajectory, inner: I) -> IbpReport {
    let kk = traj.n_steps();
    let norms: Vec<f64> = (0..=kk).map(|k| inner(traj.velocity(k), traj.velocity(k))).collect();
    let mut lhs_terms = vec![0.0; kk + 1];
    let mut slack_terms = vec![0.0; kk + 1];
    for k in 1..=kk {
        let d: Vec<f64> = traj
            .velocity(k)
            .iter()
            .zip(traj.velocity(k - 1))
            .map(|(a, b)| (a - b) / traj.tau)
            .collect();
        lhs_terms[k] = traj.tau * inner(&d, traj.velocity(k));
        slack_terms[k] = 0.5 * traj.tau * traj.tau * inner(&d, &d);
    }
    let mut min_slack = f64::INFINITY;
    let mut defect: f64 = 0.0;
    for j in 0..=kk {
        let mut lhs = 0.0;
        let mut slack = 0.0;
        for l in j..=kk {
            if l > j {
                lhs += lhs_terms[l];
                slack += slack_terms[l];
            }
            let rhs = 0.5 * norms[l] - 0.5 * norms[j];
            min_slack = min_slack.min(lhs - rhs);
            defect = defect.max((lhs - rhs - slack).abs());
        }
    }
    IbpReport {
        min_slack,
        max_identity_defect: defect,
    }
}

/// Discrete energy balance of a solved trajectory:
/// `½‖v^l‖² ≤ ½‖v^0‖² + Σ_{k≤l} τ (⟨f_k, v^k⟩ - ⟨S v^k, v^k⟩ - ⟨B v^k, v^k⟩ - (∇q^k, v^k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// `max_l (lhs_l - rhs_l) / scale`; nonpositive up to rounding when
    /// the inequality holds.
    pub max_relative_violation: f64,
    /// `max_k |⟨B v^k, v^k⟩| / ⟨S v^k, v^k⟩`.
    pub max_relative_convection: f64,
    /// `max_k ‖v^k‖_2`.
    pub max_l2: f64,
}

pub fn energy_check(assembler: &Assembler, traj: &Trajectory) -> EnergyReport {
    let kinetic = |k: usize| 0.5 * assembler.mass_inner(traj.velocity(k), traj.velocity(k));
    let e0 = kinetic(0);
    let mut budget = e0;
    let mut scale = e0;
    let mut violation = f64::NEG_INFINITY;
    let mut conv: f64 = 0.0;
    let mut max_l2 = e0.sqrt() * 2f64.sqrt();
    for (i, step) in traj.steps.iter().enumerate() {
        let k = i + 1;
        let en = &step.energy;
        budget += traj.tau * (en.forcing - en.dissipation - en.convection - en.pressure + en.residual);
        scale += traj.tau * (en.forcing.abs() + en.dissipation.abs() + en.convection.abs() + en.pressure.abs());
        let ek = kinetic(k);
        scale = scale.max(ek);
        violation = violation.max((ek - budget) / scale.max(f64::MIN_POSITIVE));
        if en.dissipation > 0.0 {
            conv = conv.max(en.convection.abs() / en.dissipation);
        }
        max_l2 = max_l2.max((2.0 * ek).sqrt());
    }
    EnergyReport {
        max_relative_violation: violation,
        max_relative_convection: conv,
        max_l2,
    }
}

/// `Σ_k τ ‖v^k‖^p_{∇,p,h}` over `k = 1..=K`, with boundary jumps measured
/// against the Dirichlet datum of `problem` at `t_k`.
pub fn dissipation_integral<P: ProblemData>(assembler: &Assembler, traj: &Trajectory, problem: &P, p: f64) -> Result<f64> {
    let mut total = 0.0;
    for k in 1..=traj.n_steps() {
        let t = traj.time(k);
        let v = assembler.velocity_field(&traj.states[k]);
        let datum = |x: [f64; 2]| problem.boundary(t, x).unwrap_or([0.0; 2]);
        let norm = assembler.calc.dg_norm_with_datum(&v, p, crate::dgcalc::NormVariant::Full, datum)?;
        total += traj.tau * norm.powf(p);
    }
    Ok(total)
}
