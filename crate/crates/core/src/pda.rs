//! Proximal distance algorithm over projection-defined sets.
//!
//! Minimizes `xi` subject to `y ∈ C_i` for every registered set by driving the
//! penalized objective `xi + (rho / 2N) sum_i dist(y, C_i)^2` down while `rho`
//! grows along a homotopy schedule.

use crate::error::{Error, Result};
use crate::linalg::C64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// `y = {x, d, xi, aux}`, viewed as one real Euclidean vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub x: Vec<C64>,
    pub d: Vec<C64>,
    pub xi: f64,
    pub aux: Vec<f64>,
}

impl DecisionPoint {
    pub fn new(x: Vec<C64>, d: Vec<C64>, xi: f64, aux: Vec<f64>) -> Self {
        Self { x, d, xi, aux }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            x: vec![C64::new(0.0, 0.0); self.x.len()],
            d: vec![C64::new(0.0, 0.0); self.d.len()],
            xi: 0.0,
            aux: vec![0.0; self.aux.len()],
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.x.len() == other.x.len()
            && self.d.len() == other.d.len()
            && self.aux.len() == other.aux.len()
    }

    /// Real inner product over every component.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert!(self.same_shape(other));
        let cx: f64 = self
            .x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        let cd: f64 = self
            .d
            .iter()
            .zip(&other.d)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        let ca: f64 = self.aux.iter().zip(&other.aux).map(|(a, b)| a * b).sum();
        cx + cd + self.xi * other.xi + ca
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += b * alpha;
        }
        for (a, b) in self.d.iter_mut().zip(&other.d) {
            *a += b * alpha;
        }
        self.xi += alpha * other.xi;
        for (a, b) in self.aux.iter_mut().zip(&other.aux) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.x.iter_mut().for_each(|v| *v *= alpha);
        self.d.iter_mut().for_each(|v| *v *= alpha);
        self.xi *= alpha;
        self.aux.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn distance_sqr(&self, other: &Self) -> f64 {
        let mut diff = self.clone();
        diff.axpy(-1.0, other);
        diff.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.xi.is_finite()
            && self.x.iter().all(|v| v.re.is_finite() && v.im.is_finite())
            && self.d.iter().all(|v| v.re.is_finite() && v.im.is_finite())
            && self.aux.iter().all(|v| v.is_finite())
    }
}

/// A closed convex set with a Euclidean projection.
///
/// Components outside a set's scope pass through unchanged.
pub trait ProjectionSet: Send + Sync {
    fn label(&self) -> String;

    /// Adds `Π(p) - p` to `acc` and returns `‖Π(p) - p‖²`.
    fn displace(&self, p: &DecisionPoint, acc: &mut DecisionPoint) -> Result<f64>;

    fn project(&self, p: &DecisionPoint) -> Result<DecisionPoint> {
        let mut out = p.clone();
        self.displace(p, &mut out)?;
        Ok(out)
    }

    fn residual(&self, p: &DecisionPoint) -> Result<f64> {
        let mut scratch = p.zeros_like();
        Ok(self.displace(p, &mut scratch)?.sqrt())
    }
}

/// `{y : <n, y> >= b}` over the full real embedding of the point.
#[derive(Debug, Clone)]
pub struct PointHalfspace {
    pub normal: DecisionPoint,
    pub offset: f64,
    pub label: String,
}

impl ProjectionSet for PointHalfspace {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn displace(&self, p: &DecisionPoint, acc: &mut DecisionPoint) -> Result<f64> {
        let nn = self.normal.norm_sqr();
        if nn == 0.0 {
            return Err(Error::InvalidArgument("halfspace normal is zero".into()));
        }
        let gap = self.offset - self.normal.inner(p);
        if gap <= 0.0 {
            return Ok(0.0);
        }
        acc.axpy(gap / nn, &self.normal);
        Ok(gap * gap / nn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySchedule {
    pub rho_init: f64,
    pub growth: f64,
    pub period: usize,
    pub rho_max: f64,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        Self {
            rho_init: 1.0,
            growth: 1.5,
            period: 10,
            rho_max: 1e6,
        }
    }
}

impl PenaltySchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_init > 0.0)
            || !(self.growth > 1.0)
            || self.period == 0
            || !(self.rho_max >= self.rho_init)
        {
            return Err(Error::InvalidConfig(
                "penalty schedule needs rho_init > 0, growth > 1, period >= 1, rho_max >= rho_init"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Penalty in force at (zero-based) iteration `k`.
    pub fn rho_at(&self, k: usize) -> f64 {
        let steps = (k / self.period) as i32;
        (self.rho_init * self.growth.powi(steps)).min(self.rho_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iters: usize,
    pub residual_tol: f64,
    pub step_tol: f64,
}

impl StopRule {
    /// Defaults with the residual tolerance scaled by `sqrt(power)`.
    pub fn for_power(power: f64) -> Self {
        Self {
            max_iters: 5000,
            residual_tol: 1e-5 * power.sqrt().max(1.0),
            step_tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.residual_tol > 0.0) || !(self.step_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "stopping thresholds must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub xi: f64,
    pub rho: f64,
    pub max_residual: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,xi,rho,max_residual,step_norm\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e}",
                r.iter, r.xi, r.rho, r.max_residual, r.step_norm
            );
        }
        s
    }

    pub fn extend_offset(&mut self, other: &Trace, offset: usize) {
        self.rows.extend(other.rows.iter().map(|r| TraceRow {
            iter: r.iter + offset,
            ..*r
        }));
    }
}

#[derive(Debug, Clone)]
pub struct PdaOutcome {
    pub point: DecisionPoint,
    pub converged: bool,
    pub iterations: usize,
    pub final_rho: f64,
    pub max_residual: f64,
    pub trace: Trace,
}

/// `xi + (rho / 2N) sum_i dist(y, C_i)^2`.
pub fn penalized_objective(
    p: &DecisionPoint,
    sets: &[&dyn ProjectionSet],
    rho: f64,
) -> Result<f64> {
    assert!(rho > 0.0, "rho must be positive");
    if sets.is_empty() {
        return Ok(p.xi);
    }
    let mut scratch = p.zeros_like();
    let mut total = 0.0;
    for s in sets {
        total += s.displace(p, &mut scratch)?;
    }
    Ok(p.xi + rho / (2.0 * sets.len() as f64) * total)
}

struct StepInfo {
    next: DecisionPoint,
    max_residual: f64,
    penalty_sum: f64,
}

fn step_with_info(p: &DecisionPoint, sets: &[&dyn ProjectionSet], rho: f64) -> Result<StepInfo> {
    let mut acc = p.zeros_like();
    let mut max_sq: f64 = 0.0;
    let mut total = 0.0;
    for s in sets {
        let d2 = s.displace(p, &mut acc)?;
        max_sq = max_sq.max(d2);
        total += d2;
    }
    let mut next = p.clone();
    next.axpy(1.0 / sets.len() as f64, &acc);
    next.xi -= 1.0 / rho;
    if !next.is_finite() {
        return Err(Error::numerical("pda step", "non-finite iterate"));
    }
    Ok(StepInfo {
        next,
        max_residual: max_sq.sqrt(),
        penalty_sum: total,
    })
}

/// Averaged projections followed by the proximal map of `xi`.
pub fn pda_step(p: &DecisionPoint, sets: &[&dyn ProjectionSet], rho: f64) -> Result<DecisionPoint> {
    assert!(rho > 0.0, "rho must be positive");
    assert!(!sets.is_empty(), "pda_step needs at least one set");
    Ok(step_with_info(p, sets, rho)?.next)
}

pub fn pda_solve(
    initial: &DecisionPoint,
    sets: &[&dyn ProjectionSet],
    schedule: &PenaltySchedule,
    accelerate: bool,
    stop: &StopRule,
) -> Result<PdaOutcome> {
    schedule.validate()?;
    stop.validate()?;
    if sets.is_empty() {
        return Err(Error::InvalidArgument(
            "no constraint sets registered".into(),
        ));
    }
    let n = sets.len() as f64;
    let mut y = initial.clone();
    let mut y_prev = initial.clone();
    let mut trace = Trace::default();
    // momentum counter, reset on restart
    let mut k_mom: usize = 1;
    let mut last_obj = f64::INFINITY;
    let mut last_rho = schedule.rho_at(0);
    let mut max_residual = f64::INFINITY;

    for it in 0..stop.max_iters {
        let rho = schedule.rho_at(it);
        if rho != last_rho {
            // objectives at different rho are not comparable
            last_obj = f64::INFINITY;
            last_rho = rho;
        }
        let base = if accelerate && k_mom > 1 {
            let zeta = (k_mom as f64 - 1.0) / (k_mom as f64 + 3.0);
            let mut e = y.clone();
            e.axpy(zeta, &y);
            e.axpy(-zeta, &y_prev);
            e
        } else {
            y.clone()
        };
        let info = step_with_info(&base, sets, rho)?;
        let obj = base.xi + rho / (2.0 * n) * info.penalty_sum;
        if accelerate && obj > last_obj && k_mom > 1 {
            // objective went up: drop the momentum and redo from y
            k_mom = 1;
            last_obj = f64::INFINITY;
            let info = step_with_info(&y, sets, rho)?;
            max_residual = info.max_residual;
            let step = info.next.distance_sqr(&y).sqrt();
            y_prev = std::mem::replace(&mut y, info.next);
            trace.rows.push(TraceRow {
                iter: it,
                xi: y.xi,
                rho,
                max_residual,
                step_norm: step,
            });
            continue;
        }
        last_obj = obj;
        k_mom += 1;
        max_residual = info.max_residual;
        let step = info.next.distance_sqr(&y).sqrt();
        y_prev = std::mem::replace(&mut y, info.next);
        trace.rows.push(TraceRow {
            iter: it,
            xi: y.xi,
            rho,
            max_residual,
            step_norm: step,
        });
        if max_residual <= stop.residual_tol && step <= stop.step_tol {
            return Ok(PdaOutcome {
                point: y,
                converged: true,
                iterations: it + 1,
                final_rho: rho,
                max_residual,
                trace,
            });
        }
    }
    Ok(PdaOutcome {
        point: y,
        converged: false,
        iterations: stop.max_iters,
        final_rho: schedule.rho_at(stop.max_iters - 1),
        max_residual,
        trace,
    })
}
