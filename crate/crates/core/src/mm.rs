//! Majorization-minimization outer loop shared by every solver mode.
//!
//! Each outer iteration minorizes every sensing SCNR at the current waveform,
//! runs the PDA on the surrogate problem, restores exact feasibility of the
//! iterate-independent sets by cyclic projections, and accepts the result
//! only if the true worst-case SCNR did not drop.

use crate::array::{steering_vector, SystemConfig, TargetSpec};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::metrics::scnr;
use crate::pda::{pda_solve, DecisionPoint, PenaltySchedule, ProjectionSet, StopRule, Trace};
use crate::sets::{AuxLayout, RadarSurrogateSet};
use crate::surrogate::build_surrogate;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub schedule: PenaltySchedule,
    /// `None` uses the defaults scaled by the power budget.
    pub stop: Option<StopRule>,
    pub accelerate: bool,
    /// Expand the surrogate at an extrapolated point when that point is
    /// feasible and no worse than the current iterate.
    pub extrapolate: bool,
    /// Relative change of the worst-case SCNR that ends the outer loop.
    pub mm_tol: f64,
    /// The outer loop also waits for `‖x^t - x^{t-1}‖ <= mm_step_tol sqrt(P)`.
    pub mm_step_tol: f64,
    /// Factor applied to the initial penalty each time a candidate is rejected.
    pub accuracy_boost: f64,
    /// Number of times the inner accuracy may be raised before stopping.
    pub accuracy_levels: usize,
    /// Weight of the proximal term, relative to `max_k sigma_k^2 / sigma_0^2`.
    pub proximal_weight: f64,
    pub mm_max_iters: usize,
    /// Continue the penalty from where the previous inner solve ended.
    pub warm_penalty: bool,
    pub polish_max_sweeps: usize,
    pub polish_tol: f64,
    pub keep_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            schedule: PenaltySchedule {
                period: 20,
                ..PenaltySchedule::default()
            },
            stop: None,
            accelerate: true,
            extrapolate: true,
            mm_tol: 1e-4,
            mm_step_tol: 1e-3,
            accuracy_boost: 3.0,
            accuracy_levels: 6,
            proximal_weight: 0.01,
            mm_max_iters: 100,
            warm_penalty: false,
            polish_max_sweeps: 50_000,
            polish_tol: 1e-11,
            keep_trace: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    /// Worst-case SCNR over the design grid.
    pub grid_min: f64,
    /// Worst-case SCNR over a ten times finer validation grid.
    pub fine_grid_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub infeasible: bool,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    /// Worst-case SCNR of every accepted iterate, starting with the initial point.
    pub objective_trace: Vec<f64>,
    /// `‖x^t - x^{t-1}‖` for every accepted iterate.
    pub step_norms: Vec<f64>,
    /// Final distance to each constraint family (largest over its members).
    pub residuals: Vec<ResidualEntry>,
    pub wall_ms: f64,
    /// Index into `objective_trace` of the first feasible iterate.
    pub first_feasible: Option<usize>,
    pub stopped_by_safeguard: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub radius: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid_check: Option<GridCheck>,
    #[serde(skip)]
    pub trace: Trace,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }
}

/// A fully assembled problem: the sensing targets whose SCNR forms the
/// objective and every constraint set that does not depend on the iterate.
pub struct Assembly {
    pub sensing: Vec<TargetSpec>,
    /// Polished in order; the power ball should come last.
    pub fixed: Vec<Box<dyn ProjectionSet>>,
    pub layout: AuxLayout,
    pub n_d: usize,
}

#[derive(Debug, Clone)]
pub struct MmOutcome {
    pub point: DecisionPoint,
    pub report: SolveReport,
}

/// `S = sqrt(P) max_k sigma_k^2 / sigma_0^2`. The SCNR grows like `P`, so
/// `gamma / S` grows like `sqrt(P)`: large enough that the penalty does not
/// swamp the objective, small enough that the epigraph normals stay well
/// conditioned.
pub fn objective_scale(cfg: &SystemConfig, sensing: &[TargetSpec]) -> f64 {
    let top = sensing.iter().map(|t| t.rcs_power).fold(0.0, f64::max);
    (cfg.power.sqrt() * top / cfg.rx_noise_power).max(f64::MIN_POSITIVE)
}

pub fn worst_scnr(x: &[C64], sensing: &[TargetSpec], cfg: &SystemConfig) -> f64 {
    sensing
        .iter()
        .map(|t| scnr(x, t, cfg))
        .fold(f64::INFINITY, f64::min)
}

/// `x_l = sqrt(P/L) * sum_k a_t(theta_k) / ‖sum_k a_t(theta_k)‖` for every slot.
pub fn matched_filter_start(cfg: &SystemConfig, targets: &[TargetSpec]) -> Vec<C64> {
    let mut s = vec![C64::new(0.0, 0.0); cfg.n_tx];
    for t in targets {
        let a = steering_vector(t.angle, cfg.n_tx, cfg.spacing_ratio);
        for (si, ai) in s.iter_mut().zip(&a.0) {
            *si += ai;
        }
    }
    let mut n = crate::linalg::norm(&s);
    if n < 1e-12 {
        s = steering_vector(
            targets.first().map_or(0.0, |t| t.angle),
            cfg.n_tx,
            cfg.spacing_ratio,
        )
        .0;
        n = 1.0;
    }
    let g = (cfg.power / cfg.frame_len as f64).sqrt() / n;
    (0..cfg.frame_len)
        .flat_map(|_| s.iter().map(move |z| z * g))
        .collect()
}

fn family(label: &str) -> &str {
    label.split('[').next().unwrap_or(label)
}

fn residual_table(p: &DecisionPoint, sets: &[&dyn ProjectionSet]) -> Result<Vec<ResidualEntry>> {
    let mut out: Vec<ResidualEntry> = Vec::new();
    for s in sets {
        let label = s.label();
        let fam = family(&label).to_string();
        let v = s.residual(p)?;
        match out.iter_mut().find(|e| e.label == fam) {
            Some(e) => e.value = e.value.max(v),
            None => out.push(ResidualEntry {
                label: fam,
                value: v,
            }),
        }
    }
    Ok(out)
}

/// Cyclic projections onto the fixed sets. Returns the final largest
/// distance.
pub fn polish(
    p: &mut DecisionPoint,
    sets: &[&dyn ProjectionSet],
    max_sweeps: usize,
    tol: f64,
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for _ in 0..max_sweeps {
        worst = 0.0;
        for s in sets {
            let mut acc = p.zeros_like();
            let d2 = s.displace(p, &mut acc)?;
            if d2 > 0.0 {
                p.axpy(1.0, &acc);
                worst = f64::max(worst, d2.sqrt());
            }
        }
        if worst <= tol {
            break;
        }
    }
    Ok(worst)
}

pub fn run_mm(
    cfg: &SystemConfig,
    assembly: &Assembly,
    init: DecisionPoint,
    opts: &SolveOptions,
) -> Result<MmOutcome> {
    let started = Instant::now();
    if assembly.sensing.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one sensing target is required".into(),
        ));
    }
    if init.x.len() != cfg.dim()
        || init.aux.len() != assembly.layout.len()
        || init.d.len() != assembly.n_d
    {
        return Err(Error::Dimension {
            expected: cfg.dim(),
            got: init.x.len(),
        });
    }
    let stop = opts.stop.unwrap_or_else(|| StopRule::for_power(cfg.power));
    let scale = objective_scale(cfg, &assembly.sensing);
    let fixed: Vec<&dyn ProjectionSet> = assembly.fixed.iter().map(|b| b.as_ref()).collect();
    let feas_tol = stop.residual_tol;

    let mut current = init;
    let mut gamma = worst_scnr(&current.x, &assembly.sensing, cfg);
    current.xi = -gamma / scale;
    let init_resid = residual_table(&current, &fixed)?;
    let mut feasible = init_resid.iter().all(|e| e.value <= feas_tol);

    let mut report = SolveReport {
        converged: false,
        infeasible: false,
        outer_iters: 0,
        inner_iters_total: 0,
        objective_trace: vec![gamma],
        step_norms: vec![],
        residuals: init_resid,
        wall_ms: 0.0,
        first_feasible: if feasible { Some(0) } else { None },
        stopped_by_safeguard: false,
        tau: None,
        radius: None,
        grid_check: None,
        trace: Trace::default(),
    };
    let mut schedule = opts.schedule;
    let mut previous: Option<DecisionPoint> = None;
    // extrapolation counter, reset whenever an extrapolated point is rejected
    let mut k_ext: usize = 1;
    // inner accuracy level; rho starts at rho_init * accuracy_boost^level
    let mut level: usize = 0;
    let step_tol = opts.mm_step_tol * cfg.power.sqrt();
    let prox = opts.proximal_weight
        * assembly
            .sensing
            .iter()
            .map(|t| t.rcs_power)
            .fold(0.0, f64::max)
        / cfg.rx_noise_power;

    for t in 0..opts.mm_max_iters {
        report.outer_iters = t + 1;
        let mut centers = vec![];
        if let (true, true, Some(prev)) = (opts.extrapolate, feasible, previous.as_ref()) {
            let beta = (k_ext as f64 - 1.0) / (k_ext as f64 + 2.0);
            let mut y = current.clone();
            y.axpy(beta, &current);
            y.axpy(-beta, prev);
            let worst = polish(&mut y, &fixed, opts.polish_max_sweeps, opts.polish_tol)?;
            let g = worst_scnr(&y.x, &assembly.sensing, cfg);
            if beta > 0.0 && worst <= feas_tol && g >= gamma {
                y.xi = -g / scale;
                centers.push(y);
            }
        }
        centers.push(current.clone());

        let mut accepted = None;
        let mut attempt = 0;
        while attempt < centers.len() {
            let center = &centers[attempt];
            let extrapolated = attempt + 1 < centers.len();
            let radar: Vec<RadarSurrogateSet> = assembly
                .sensing
                .iter()
                .enumerate()
                .map(|(k, tg)| {
                    build_surrogate(&center.x, tg, cfg)
                        .with_proximal(prox, &center.x)
                        .to_set(format!("radar[{k}]"), scale)
                })
                .collect();
            let mut sets: Vec<&dyn ProjectionSet> =
                radar.iter().map(|r| r as &dyn ProjectionSet).collect();
            sets.extend(fixed.iter().copied());

            let mut sched = schedule;
            sched.rho_init =
                (schedule.rho_init * opts.accuracy_boost.powi(level as i32)).min(schedule.rho_max);
            let inner = pda_solve(center, &sets, &sched, opts.accelerate, &stop)?;
            if opts.keep_trace {
                let off = report.trace.rows.last().map_or(0, |r| r.iter + 1);
                report.trace.extend_offset(&inner.trace, off);
            }
            report.inner_iters_total += inner.iterations;
            if opts.warm_penalty {
                schedule.rho_init = inner.final_rho;
            }

            let mut cand = inner.point;
            let worst = polish(&mut cand, &fixed, opts.polish_max_sweeps, opts.polish_tol)?;
            let cand_feasible = worst <= feas_tol;
            let cand_gamma = worst_scnr(&cand.x, &assembly.sensing, cfg);
            cand.xi = -cand_gamma / scale;
            // a feasible iterate is never traded for a worse or infeasible one
            let rejected = feasible && (!cand_feasible || cand_gamma < gamma * (1.0 - 1e-9));
            if !rejected {
                k_ext = if extrapolated { k_ext + 1 } else { 2 };
                accepted = Some((cand, cand_gamma, cand_feasible));
                break;
            }
            k_ext = 2;
            if extrapolated {
                attempt += 1;
            } else if level < opts.accuracy_levels {
                // the inner solve was too coarse to certify progress: tighten it
                level += 1;
            } else {
                break;
            }
        }
        let Some((cand, cand_gamma, cand_feasible)) = accepted else {
            report.stopped_by_safeguard = true;
            report.converged = true;
            break;
        };

        let step = crate::linalg::norm(&crate::linalg::sub(&cand.x, &current.x));
        let change = (cand_gamma - gamma).abs() / gamma.abs().max(f64::MIN_POSITIVE);
        let was_feasible = feasible;
        previous = Some(std::mem::replace(&mut current, cand));
        gamma = cand_gamma;
        feasible = cand_feasible;
        report.objective_trace.push(gamma);
        report.step_norms.push(step);
        if feasible && report.first_feasible.is_none() {
            report.first_feasible = Some(report.objective_trace.len() - 1);
        }
        if was_feasible && feasible && change < opts.mm_tol && step <= step_tol {
            report.converged = true;
            break;
        }
    }

    report.residuals = residual_table(&current, &fixed)?;
    report.infeasible = !feasible;
    if !feasible {
        report.converged = false;
    }
    report.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(MmOutcome {
        point: current,
        report,
    })
}
