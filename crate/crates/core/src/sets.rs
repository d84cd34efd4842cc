//! Closed-form Euclidean projections used by the ISCC solvers.
//!
//! Each set touches a few components of a [`DecisionPoint`] and passes the
//! rest through. Layout of the auxiliary real vector is described by
//! [`AuxLayout`].

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sqr, C64};
use crate::pda::{DecisionPoint, ProjectionSet};
use nalgebra::DMatrix;
use std::sync::Arc;

const BISECTION_MAX: usize = 200;

/// Index map for `aux`: `[upsilon (2 K_U L) | tau (2 K_U) | r (L)]`, with
/// the QAM and robust blocks present only in those modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuxLayout {
    pub n_users: usize,
    pub frame_len: usize,
    pub qam: bool,
    pub robust: bool,
}

impl AuxLayout {
    pub fn upsilon(&self, k: usize, l: usize) -> usize {
        debug_assert!(self.qam);
        2 * (l * self.n_users + k)
    }

    pub fn tau(&self, k: usize) -> usize {
        debug_assert!(self.qam);
        2 * self.n_users * self.frame_len + 2 * k
    }

    fn qam_len(&self) -> usize {
        if self.qam {
            2 * self.n_users * self.frame_len + 2 * self.n_users
        } else {
            0
        }
    }

    pub fn radius(&self, l: usize) -> usize {
        debug_assert!(self.robust);
        self.qam_len() + l
    }

    pub fn len(&self) -> usize {
        self.qam_len() + if self.robust { self.frame_len } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Bisection for the root of a non-decreasing `g` on `[0, inf)` with
/// `g(0) < 0`. Returns the right bracket end, where `g >= 0`.
pub(crate) fn bisect_increasing(context: &str, mut g: impl FnMut(f64) -> f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut expansions = 0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > BISECTION_MAX || !hi.is_finite() {
            return Err(Error::numerical(context, "bracket expansion exhausted"));
        }
    }
    for _ in 0..BISECTION_MAX {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `‖x‖² <= P`.
#[derive(Debug, Clone)]
pub struct PowerBall {
    pub power: f64,
}

impl ProjectionSet for PowerBall {
    fn label(&self) -> String {
        "power".into()
    }

    fn displace(&self, p: &DecisionPoint, acc: &mut DecisionPoint) -> Result<f64> {
        let e = norm_sqr(&p.x);
        if e <= self.power {
            return Ok(0.0);
        }
        let n = e.sqrt();
        let f = self.power.sqrt() / n - 1.0;
        for (a, v) in acc.x.iter_mut().zip(&p.x) {
            *a += v * f;
        }
        Ok((n - self.power.sqrt()).powi(2))
    }
}

/// `Re{h~^H x_l} >= mu`, one slot of the waveform.
#[derive(Debug, Clone)]
pub struct SepHalfspace {
    pub slot: usize,
    pub n_tx: usize,
    pub h_tilde: Vec<C64>,
    pub mu: f64,
    pub label: String,
    h_norm_sqr: f64,
}

impl SepHalfspace {
    pub fn new(slot: usize, h_tilde: Vec<C64>, mu: f64, label: String) -> Result<Self> {
        let hn = norm_sqr(&h_tilde);
        if !(hn > 0.0) {
            return Err(Error::InvalidArgument(
                "zero effective channel in SEP halfspace".into(),
            ));
        }
        Ok(Self {
            slot,
            n_tx: h_tilde.len(),
            h_tilde,
            mu,
            label,
            h_norm_sqr: hn,
        })
    }

    pub fn margin(&self, x: &[C64]) -> f64 {
        let xl = &x[self.slot * self.n_tx..(self.slot + 1) * self.n_tx];
        dot(&self.h_tilde, xl).re
    }
}

impl ProjectionSet for SepHalfspace {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn displace(&self, p: &DecisionPoint, acc: &mut DecisionPoint) -> Result<f64> {
        let gap = self.mu - self.margin(&p.x);
        if gap <= 0.0 {
            return Ok(0.0);
        }
        let f = gap / self.h_norm_sqr;
        let off = self.slot * self.n_tx;
        for (a, h) in acc.x[off..off + self.n_tx].iter_mut().zip(&self.h_tilde) {
            *a += h * f;
        }
        Ok(gap * gap / self.h_norm_sqr)
    }
}

/// `Re{h~^H x_l} - eps * r_l >= mu` in the joint space of `(x_l, r_l)`.
#[derive(Debug, Clone)]
pub struct RobustSepHalfspace {
    pub slot: usize,
    pub n_tx: usize,
    pub h_tilde: Vec<C64>,
    pub eps: f64,
    pub mu: f64,
    pub radius_index: usize,
    pub label: String,
    normal_sqr: f64,
}

impl RobustSepHalfspace {
    pub fn new(
        slot: usize,
        h_tilde: Vec<C64>,
        eps: f64,
        mu: f64,
        radius_index: usize,
        label: String,
    ) -> Result<Self> {
        let hn = norm_sqr(&h_tilde);
        if !(hn > 0.0) {
            return Err(Error::InvalidArgument(
                "zero nominal channel in robust halfspace".into(),
            ));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(
                "uncertainty radius must be nonnegative".into(),
            ));
        }
        Ok(Self {
            slot,
            n_tx: h_tilde.len(),
            h_tilde,
            eps,
            mu,
            radius_index,
            label,
            normal_sqr: hn + eps * eps,
        })
    }
}

impl ProjectionSet for RobustSepHalfspace {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn displace(&self, p: &DecisionPoint, acc: &mut DecisionPoint) -> Result<f64> {
        let off = self.slot * self.n_tx;
        let xl = &p.x[off..off + self.n_tx];
        let value = dot(&self.h_tilde, xl).re - self.eps * p.aux[self.radius_index];
        let gap = self.mu - value;
        if gap <= 0.0 {
            return Ok(0.0);
        }
        let f = gap / self.normal_sqr;
        for (a, h) in acc.x[off..off + self.n_tx].iter_mut().zip(&self.h_tilde) {
            *a += h * f;
        }
        acc.aux[self.radius_index] -= self.eps * f;
        Ok(gap * gap / self.normal_sqr)
    }
}

/// Second-order cone `‖x_l‖ <= r_l`.
#[derive(Debug, Clone)]
pub struct SocSet {
    pub slot: usize,
    pub n_tx: usize,
    pub radius_index: usize,
}

/// Projection of `(v, r)` onto `{‖v‖ <= r}`: returns the scale applied to `v`
/// and the new radius.
pub fn soc_scale(norm_v: f64, r: f64) -> (f64, f64) {
    if norm_v <= r {
        (1.0, r)
    } else if norm_v <= -r {
        (0.0, 0.0)
    } else {
        let t = 0.5 * (norm_v + r);
        (t / norm_v, t)
    }
}

impl ProjectionSet for SocSet {
    fn label(&self) -> String {
        format!("soc[{}]", self.slot)
    }

    fn displace(&self, p: &DecisionPoint, acc: &mut DecisionPoint) -> Result<f64> {
        let off = self.slot * self.n_tx;
        let xl = &p.x[off..off + self.n_tx];
        let nv = norm_sqr(xl).sqrt();
        let r = p.aux[self.radius_index];
        let (f, r_new) = soc_scale(nv, r);
        if f == 1.0 && r_new == r {
            return Ok(0.0);
        }
        for (a, v) in acc.x[off..off + self.n_tx].iter_mut().zip(xl) {
            *a += v * (f - 1.0);
        }
        acc.aux[self.radius_index] += r_new - r;
        Ok((nv * (1.0 - f)).powi(2) + (r_new - r).powi(2))
    }
}

/// `(1/L) sum_l |a^H x_l - d u_l|^2 <= delta` over `(x, d_k)`.
///
/// With `B = [I ⊗ a^H, -u]` and unit-norm `a`, `B B^H = I + u u^H`, so the
/// multiplier equation only needs the split of `B z` along `u`.
#[derive(Debug, Clone)]
pub struct NoiseShapingSet {
    pub target: usize,
    pub steering: Vec<C64>,
    pub reference: Vec<C64>,
    pub delta: f64,
    pub label: String,
    u_norm_sqr: f64,
}

impl NoiseShapingSet {
    pub fn new(
        target: usize,
        steering: Vec<C64>,
        reference: Vec<C64>,
        delta: f64,
        label: String,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(
                "noise-shaping tolerance must be positive".into(),
            ));
        }
        let an = norm_sqr(&steering);
        if (an - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(
                "noise-shaping steering vector must have unit norm".into(),
            ));
        }
        let u_norm_sqr = norm_sqr(&reference);
        Ok(Self {
            target,
            steering,
            reference,
            delta,
            label,
            u_norm_sqr,
        })
    }

    fn frame_len(&self) -> usize {
        self.reference.len()
    }

    /// `B z` for the current point.
    pub fn residual_vector(&self, p: &DecisionPoint) -> Vec<C64> {
        let n = self.steering.len();
        let d = p.d[self.target];
        p.x.chunks(n)
            .zip(&self.reference)
            .map(|(xl, ul)| dot(&self.steering, xl) - d * ul)
            .collect()
    }
}

impl ProjectionSet for NoiseShapingSet {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn displace(&self, p: &DecisionPoint, acc: &mut DecisionPoint) -> Result<f64> {
        let bound = self.frame_len() as f64 * self.delta;
        let w = self.residual_vector(p);
        let wn = norm_sqr(&w);
        if wn <= bound {
            return Ok(0.0);
        }
        let uu = self.u_norm_sqr;
        // w = w_par + w_perp, w_par along u
        let (c_par, par_sqr) = if uu > 0.0 {
            let c = dot(&self.reference, &w) / uu;
            (c, c.norm_sqr() * uu)
        } else {
            (C64::new(0.0, 0.0), 0.0)
        };
        let perp_sqr = (wn - par_sqr).max(0.0);
        let lam = bisect_increasing("noise-shaping projection", |lam| {
            bound - par_sqr / (1.0 + lam * (1.0 + uu)).powi(2) - perp_sqr / (1.0 + lam).powi(2)
        })?;
        // v = (I + lam B B^H)^{-1} w
        let f_par = 1.0 / (1.0 + lam * (1.0 + uu)) - 1.0 / (1.0 + lam);
        let v: Vec<C64> = w
            .iter()
            .zip(&self.reference)
            .map(|(wl, ul)| wl / (1.0 + lam) + c_par * ul * f_par)
            .collect();
        // z = z_bar - lam B^H v
        let n = self.steering.len();
        let mut moved = 0.0;
        for (l, vl) in v.iter().enumerate() {
            for (i, a) in self.steering.iter().enumerate() {
                let delta = -a * vl * lam;
                acc.x[l * n + i] += delta;
                moved += delta.norm_sqr();
            }
        }
        let dd = dot(&self.reference, &v) * lam;
        acc.d[self.target] += dd;
        moved += dd.norm_sqr();
        Ok(moved)
    }
}

/// Minorizer data for one radar constraint, already divided by the objective
/// scale: `phi~(x) = -x^H M x + 2 Re{m^H x} + kappa`, set `phi~/S + xi >= 0`.
///
/// `M = U diag(lambda) U^H` is kept in eigenform so the multiplier equation
/// costs `O(rank)` per evaluation.
#[derive(Debug, Clone)]
pub struct RadarSurrogateSet {
    pub label: String,
    pub mbar: Vec<C64>,
    pub kappa: f64,
    pub scale: f64,
    /// Isotropic part `c` of the curvature `M = c I + sum_c w_c w_c^H`.
    pub shift: f64,
    eig_vectors: Vec<Vec<C64>>,
    eig_values: Vec<f64>,
}

impl RadarSurrogateSet {
    /// `factors` are the columns `w_c` with `M = shift I + sum_c w_c w_c^H`.
    pub fn new(
        label: String,
        mbar: Vec<C64>,
        factors: &[Vec<C64>],
        shift: f64,
        kappa: f64,
        scale: f64,
    ) -> Self {
        assert!(scale > 0.0, "objective scale must be positive");
        assert!(shift >= 0.0, "curvature shift must be nonnegative");
        let r = factors.len();
        let mut eig_vectors = Vec::new();
        let mut eig_values = Vec::new();
        if r > 0 {
            let gram = DMatrix::<C64>::from_fn(r, r, |i, j| dot(&factors[i], &factors[j]));
            let eig = nalgebra::SymmetricEigen::new(gram);
            let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
            for (j, &ev) in eig.eigenvalues.iter().enumerate() {
                if ev <= top * 1e-13 || ev <= 0.0 {
                    continue;
                }
                let s = ev.sqrt();
                let mut u = vec![C64::new(0.0, 0.0); mbar.len()];
                for (i, w) in factors.iter().enumerate() {
                    let c = eig.eigenvectors[(i, j)] / s;
                    for (ui, wi) in u.iter_mut().zip(w) {
                        *ui += wi * c;
                    }
                }
                eig_vectors.push(u);
                eig_values.push(ev);
            }
        }
        Self {
            label,
            mbar,
            kappa,
            scale,
            shift,
            eig_vectors,
            eig_values,
        }
    }

    /// Rank of the low-rank part of the curvature.
    pub fn rank(&self) -> usize {
        self.eig_values.len()
    }

    /// `phi~(x)` before scaling.
    pub fn surrogate_value(&self, x: &[C64]) -> f64 {
        let quad: f64 = self
            .eig_vectors
            .iter()
            .zip(&self.eig_values)
            .map(|(u, &l)| l * dot(u, x).norm_sqr())
            .sum();
        -quad - self.shift * norm_sqr(x) + 2.0 * dot(&self.mbar, x).re + self.kappa
    }

    pub fn constraint_value(&self, p: &DecisionPoint) -> f64 {
        self.surrogate_value(&p.x) / self.scale + p.xi
    }
}

impl ProjectionSet for RadarSurrogateSet {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn displace(&self, p: &DecisionPoint, acc: &mut DecisionPoint) -> Result<f64> {
        if self.constraint_value(p) >= 0.0 {
            return Ok(0.0);
        }
        let s = self.scale;
        let c = self.shift;
        let pc: Vec<C64> = self.eig_vectors.iter().map(|u| dot(u, &p.x)).collect();
        let qc: Vec<C64> = self
            .eig_vectors
            .iter()
            .map(|u| dot(u, &self.mbar))
            .collect();
        // components orthogonal to the low-rank span
        let mut x_perp = p.x.clone();
        let mut m_perp = self.mbar.clone();
        for (u, (a, b)) in self.eig_vectors.iter().zip(pc.iter().zip(&qc)) {
            for ((xp, mp), ui) in x_perp.iter_mut().zip(m_perp.iter_mut()).zip(u) {
                *xp -= ui * a;
                *mp -= ui * b;
            }
        }
        let xx = norm_sqr(&x_perp);
        let mx = dot(&m_perp, &x_perp).re;
        let mm = norm_sqr(&m_perp);
        // g(lam) = phi~(x(lam))/S + xi + S lam / 2, x(lam) = (I + lam M)^{-1}(x + lam m)
        let g = |lam: f64| -> f64 {
            let den = 1.0 + lam * c;
            let perp_sqr = (xx + 2.0 * lam * mx + lam * lam * mm) / (den * den);
            let mut quad = c * perp_sqr;
            let mut lin = (mx + lam * mm) / den;
            for ((a, b), &ev) in pc.iter().zip(&qc).zip(&self.eig_values) {
                let z = (a + b * lam) / (1.0 + lam * (c + ev));
                quad += (c + ev) * z.norm_sqr();
                lin += (b.conj() * z).re;
            }
            (-quad + 2.0 * lin + self.kappa) / s + p.xi + s * lam / 2.0
        };
        let lam = bisect_increasing("radar surrogate projection", g)?;
        let den = 1.0 + lam * c;
        let mut delta: Vec<C64> = m_perp
            .iter()
            .zip(&x_perp)
            .map(|(m, x)| (m * lam - x * (lam * c)) / den)
            .collect();
        for ((u, (a, b)), &ev) in self
            .eig_vectors
            .iter()
            .zip(pc.iter().zip(&qc))
            .zip(&self.eig_values)
        {
            let z = (a + b * lam) / (1.0 + lam * (c + ev)) - a;
            for (di, ui) in delta.iter_mut().zip(u) {
                *di += ui * z;
            }
        }
        let dxi = s * lam / 2.0;
        for (a, dv) in acc.x.iter_mut().zip(&delta) {
            *a += dv;
        }
        acc.xi += dxi;
        Ok(norm_sqr(&delta) + dxi * dxi)
    }
}

/// One side of a QAM decision box on one axis; `None` is an unbounded side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBounds {
    /// Odd-integer symbol level on this axis.
    pub level: f64,
    pub a: Option<f64>,
    pub c: Option<f64>,
}

impl AxisBounds {
    /// Shifts both finite sides by `t` (robust tightening).
    pub fn tightened(&self, t: f64) -> Self {
        Self {
            level: self.level,
            a: self.a.map(|v| v + t),
            c: self.c.map(|v| v + t),
        }
    }

    pub fn lower(&self, tau: f64) -> Option<f64> {
        self.a.map(|a| (self.level - 1.0) * tau + a)
    }

    pub fn upper(&self, tau: f64) -> Option<f64> {
        self.c.map(|c| (self.level + 1.0) * tau - c)
    }

    /// Signed slack of `v` inside the box at `tau` (negative when outside).
    pub fn slack(&self, v: f64, tau: f64) -> f64 {
        let lo = self.lower(tau).map_or(f64::INFINITY, |lo| v - lo);
        let hi = self.upper(tau).map_or(f64::INFINITY, |hi| hi - v);
        lo.min(hi)
    }
}

/// Exact projection of `(v_bar, tau_bar)` onto
/// `{(v, tau) : lower_l(tau) <= v_l <= upper_l(tau), tau >= tau_min}`.
///
/// Breakpoint search over the piecewise quadratic `f(tau)`.
pub fn project_axis(v_bar: &[f64], tau_bar: f64, bounds: &[AxisBounds]) -> (Vec<f64>, f64) {
    assert_eq!(v_bar.len(), bounds.len());
    let mut tau_min: f64 = 0.0;
    for b in bounds {
        if let (Some(a), Some(c)) = (b.a, b.c) {
            tau_min = tau_min.max(0.5 * (a + c));
        }
    }
    let clamp_v = |tau: f64| -> Vec<f64> {
        v_bar
            .iter()
            .zip(bounds)
            .map(|(&v, b)| {
                let mut w = v;
                if let Some(lo) = b.lower(tau) {
                    w = w.max(lo);
                }
                if let Some(hi) = b.upper(tau) {
                    w = w.min(hi);
                }
                w
            })
            .collect()
    };
    let objective = |tau: f64| -> f64 {
        let v = clamp_v(tau);
        (tau - tau_bar).powi(2)
            + v.iter()
                .zip(v_bar)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
    };
    let feasible = tau_bar >= tau_min
        && v_bar
            .iter()
            .zip(bounds)
            .all(|(&v, b)| b.slack(v, tau_bar) >= 0.0);
    if feasible {
        return (v_bar.to_vec(), tau_bar);
    }

    let mut knots = vec![tau_min];
    for (&v, b) in v_bar.iter().zip(bounds) {
        if let Some(a) = b.a {
            if b.level != 1.0 {
                knots.push((v - a) / (b.level - 1.0));
            }
        }
        if let Some(c) = b.c {
            if b.level != -1.0 {
                knots.push((v + c) / (b.level + 1.0));
            }
        }
    }
    knots.retain(|t| t.is_finite() && *t >= tau_min);
    knots.sort_by(|a, b| a.total_cmp(b));
    knots.dedup();

    let mut best_tau = tau_min;
    let mut best_f = objective(tau_min);
    for (i, &lo) in knots.iter().enumerate() {
        let hi = knots.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let mid = if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            lo + 1.0
        };
        // regimes are constant on the open interval; read them at its midpoint
        let mut num = tau_bar;
        let mut den = 1.0;
        for (&v, b) in v_bar.iter().zip(bounds) {
            if let Some(l) = b.lower(mid) {
                if v < l {
                    let sl = b.level - 1.0;
                    num -= sl * (b.a.unwrap() - v);
                    den += sl * sl;
                    continue;
                }
            }
            if let Some(u) = b.upper(mid) {
                if v > u {
                    let su = b.level + 1.0;
                    num += su * (b.c.unwrap() + v);
                    den += su * su;
                }
            }
        }
        let cand = (num / den).clamp(lo, hi);
        let f = objective(cand);
        if f < best_f {
            best_f = f;
            best_tau = cand;
        }
    }
    (clamp_v(best_tau), best_tau)
}

/// Per-(user, slot) QAM bounds, `[k][l]` with real and imaginary axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SepBounds {
    pub re: Vec<Vec<AxisBounds>>,
    pub im: Vec<Vec<AxisBounds>>,
}

/// Joint margin set over `(upsilon, tau)`; in robust mode the boxes are
/// tightened by `eps_k * r_l` read from the incoming point.
#[derive(Debug, Clone)]
pub struct QamMarginSet {
    pub bounds: SepBounds,
    pub layout: AuxLayout,
    pub eps_user: Vec<f64>,
}

impl QamMarginSet {
    fn axis_problem(
        &self,
        p: &DecisionPoint,
        k: usize,
        imag: bool,
    ) -> (Vec<f64>, f64, Vec<AxisBounds>) {
        let lay = &self.layout;
        let off = usize::from(imag);
        let rows = if imag {
            &self.bounds.im[k]
        } else {
            &self.bounds.re[k]
        };
        let v: Vec<f64> = (0..lay.frame_len)
            .map(|l| p.aux[lay.upsilon(k, l) + off])
            .collect();
        let tau = p.aux[lay.tau(k) + off];
        let b: Vec<AxisBounds> = rows
            .iter()
            .enumerate()
            .map(|(l, ab)| {
                if lay.robust && self.eps_user[k] > 0.0 {
                    ab.tightened(self.eps_user[k] * p.aux[lay.radius(l)])
                } else {
                    *ab
                }
            })
            .collect();
        (v, tau, b)
    }
}

impl ProjectionSet for QamMarginSet {
    fn label(&self) -> String {
        "qam-margins".into()
    }

    fn displace(&self, p: &DecisionPoint, acc: &mut DecisionPoint) -> Result<f64> {
        let lay = self.layout;
        let mut moved = 0.0;
        for k in 0..lay.n_users {
            for imag in [false, true] {
                let off = usize::from(imag);
                let (v, tau, b) = self.axis_problem(p, k, imag);
                let (v_new, tau_new) = project_axis(&v, tau, &b);
                for (l, (old, new)) in v.iter().zip(&v_new).enumerate() {
                    acc.aux[lay.upsilon(k, l) + off] += new - old;
                    moved += (new - old).powi(2);
                }
                acc.aux[lay.tau(k) + off] += tau_new - tau;
                moved += (tau_new - tau).powi(2);
            }
        }
        Ok(moved)
    }
}

/// `upsilon_l = H x_l` for one slot.
#[derive(Debug, Clone)]
pub struct ChannelCouplingSet {
    pub slot: usize,
    pub layout: AuxLayout,
    pub factor: Arc<CouplingFactor>,
}

/// `H` and the shared `(H^H H + I)^{-1}`.
#[derive(Debug, Clone)]
pub struct CouplingFactor {
    pub h: DMatrix<C64>,
    pub inverse: DMatrix<C64>,
}

impl CouplingFactor {
    /// `channels` are the user vectors `h_k`; row `k` of `H` is `h_k^H`.
    pub fn new(channels: &[Vec<C64>]) -> Result<Self> {
        let k = channels.len();
        let n = channels.first().map_or(0, |h| h.len());
        let h = DMatrix::<C64>::from_fn(k, n, |i, j| channels[i][j].conj());
        let gram = h.adjoint() * &h + DMatrix::<C64>::identity(n, n);
        let inverse = gram
            .cholesky()
            .ok_or_else(|| Error::numerical("coupling factor", "H^H H + I not positive definite"))?
            .inverse();
        Ok(Self { h, inverse })
    }
}

impl ProjectionSet for ChannelCouplingSet {
    fn label(&self) -> String {
        format!("coupling[{}]", self.slot)
    }

    fn displace(&self, p: &DecisionPoint, acc: &mut DecisionPoint) -> Result<f64> {
        let lay = self.layout;
        let h = &self.factor.h;
        let (ku, n) = (h.nrows(), h.ncols());
        let off = self.slot * n;
        let xl = nalgebra::DVector::from_column_slice(&p.x[off..off + n]);
        let ups = nalgebra::DVector::from_fn(ku, |k, _| {
            let i = lay.upsilon(k, self.slot);
            C64::new(p.aux[i], p.aux[i + 1])
        });
        if (h * &xl - &ups).norm() == 0.0 {
            return Ok(0.0);
        }
        let x_new = &self.factor.inverse * (&xl + h.adjoint() * &ups);
        let u_new = h * &x_new;
        let mut moved = 0.0;
        for i in 0..n {
            let dv = x_new[i] - xl[i];
            acc.x[off + i] += dv;
            moved += dv.norm_sqr();
        }
        for k in 0..ku {
            let i = lay.upsilon(k, self.slot);
            let dv = u_new[k] - ups[k];
            acc.aux[i] += dv.re;
            acc.aux[i + 1] += dv.im;
            moved += dv.norm_sqr();
        }
        Ok(moved)
    }
}
