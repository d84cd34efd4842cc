//! Array geometry, radar scene and user channel models.
//!
//! Everything here is a pure constructor or sampler. Angles are radians;
//! the transmit waveform is the stacked vector `x = [x_1; ...; x_L]` with one
//! `n_tx`-long slice per symbol slot.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sqr, ShiftedLowRank, C64};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const DEFAULT_SPACING_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub frame_len: usize,
    /// Energy budget for the whole frame, `||x||^2 <= power`.
    pub power: f64,
    pub spacing_ratio: f64,
    pub rx_noise_power: f64,
    pub user_noise_powers: Vec<f64>,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.frame_len == 0 {
            return Err(Error::InvalidConfig(
                "antenna counts and frame length must be >= 1".into(),
            ));
        }
        if !(self.power >= 0.0) {
            return Err(Error::InvalidConfig(
                "power budget must be nonnegative".into(),
            ));
        }
        if !(self.spacing_ratio > 0.0) {
            return Err(Error::InvalidConfig(
                "spacing ratio must be positive".into(),
            ));
        }
        if !(self.rx_noise_power > 0.0) || self.user_noise_powers.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidConfig("noise powers must be positive".into()));
        }
        Ok(())
    }

    /// Length of the stacked waveform.
    pub fn dim(&self) -> usize {
        self.n_tx * self.frame_len
    }

    pub fn tx_steering(&self, angle: f64) -> SteeringVector {
        steering_vector(angle, self.n_tx, self.spacing_ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clutter {
    pub angle: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub angle: f64,
    pub rcs_power: f64,
    /// Scatterers sharing the target's range bin.
    pub clutter: Vec<Clutter>,
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rcs_power > 0.0) || self.clutter.iter().any(|c| !(c.power > 0.0)) {
            return Err(Error::InvalidConfig(
                "target and clutter powers must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Same target and clutter, looked at from a different angle.
    pub fn at_angle(&self, angle: f64) -> TargetSpec {
        TargetSpec {
            angle,
            ..self.clone()
        }
    }
}

/// Unit-norm ULA response.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub Vec<C64>);

impl SteeringVector {
    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `a(theta)_i = exp(j 2 pi (d/lambda) (i-1) sin(theta)) / sqrt(n)`.
pub fn steering_vector(angle: f64, n: usize, spacing_ratio: f64) -> SteeringVector {
    assert!(n >= 1, "steering vector needs at least one element");
    let amp = 1.0 / (n as f64).sqrt();
    let phase = 2.0 * PI * spacing_ratio * angle.sin();
    SteeringVector(
        (0..n)
            .map(|i| C64::from_polar(amp, phase * i as f64))
            .collect(),
    )
}

/// `I_L ⊗ (a_r a_t^H)`, kept as its rank-one factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMatrix {
    pub tx: SteeringVector,
    pub rx: SteeringVector,
    pub frame_len: usize,
}

impl SteeringMatrix {
    pub fn new(angle: f64, cfg: &SystemConfig) -> Self {
        Self {
            tx: steering_vector(angle, cfg.n_tx, cfg.spacing_ratio),
            rx: steering_vector(angle, cfg.n_rx, cfg.spacing_ratio),
            frame_len: cfg.frame_len,
        }
    }

    pub fn n_tx(&self) -> usize {
        self.tx.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx.len()
    }

    /// Per-slot transmit gains `a_t^H x_l`.
    pub fn tx_gains(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n_tx() * self.frame_len, "waveform length");
        x.chunks(self.n_tx())
            .map(|xl| dot(self.tx.as_slice(), xl))
            .collect()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let gains = self.tx_gains(x);
        let mut out = Vec::with_capacity(self.n_rx() * self.frame_len);
        for g in gains {
            out.extend(self.rx.0.iter().map(|a| a * g));
        }
        out
    }

    pub fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        assert_eq!(y.len(), self.n_rx() * self.frame_len, "echo length");
        let mut out = Vec::with_capacity(self.n_tx() * self.frame_len);
        for yl in y.chunks(self.n_rx()) {
            let g = dot(self.rx.as_slice(), yl);
            out.extend(self.tx.0.iter().map(|a| a * g));
        }
        out
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.frame_len as f64 * norm_sqr(self.rx.as_slice()) * norm_sqr(self.tx.as_slice())
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let (nt, nr, l) = (self.n_tx(), self.n_rx(), self.frame_len);
        let mut m = DMatrix::zeros(nr * l, nt * l);
        for b in 0..l {
            for i in 0..nr {
                for j in 0..nt {
                    m[(b * nr + i, b * nt + j)] = self.rx.0[i] * self.tx.0[j].conj();
                }
            }
        }
        m
    }
}

/// `R_k = rcs^{-2} (sigma0^2 I + sum_c power_c (A_c x)(A_c x)^H)`.
#[derive(Debug, Clone)]
pub struct InterferenceCovariance {
    rcs_power: f64,
    inner: ShiftedLowRank,
}

impl InterferenceCovariance {
    pub fn new(target: &TargetSpec, x: &[C64], cfg: &SystemConfig) -> Self {
        let cols = target
            .clutter
            .iter()
            .map(|c| {
                let mut v = SteeringMatrix::new(c.angle, cfg).apply(x);
                let s = c.power.sqrt();
                v.iter_mut().for_each(|z| *z *= s);
                v
            })
            .collect();
        Self {
            rcs_power: target.rcs_power,
            inner: ShiftedLowRank::new(cfg.rx_noise_power, cols),
        }
    }

    /// Solves `R_k y = b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut y = self.inner.solve(b);
        y.iter_mut().for_each(|z| *z *= self.rcs_power);
        y
    }

    pub fn clutter_rank(&self) -> usize {
        self.inner.rank()
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<C64> {
        self.inner.to_dense(n) / C64::new(self.rcs_power, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    /// Line-of-sight departure angle.
    pub angle: f64,
    pub rician_factor: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserChannelSet {
    pub channels: Vec<Vec<C64>>,
    pub rician_factors: Vec<f64>,
    pub n_paths: Vec<usize>,
    pub los_angles: Vec<f64>,
    pub path_angles: Vec<Vec<f64>>,
}

impl UserChannelSet {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Wraps fixed channel vectors (no fading metadata).
    pub fn from_vectors(channels: Vec<Vec<C64>>) -> Self {
        let k = channels.len();
        Self {
            channels,
            rician_factors: vec![f64::INFINITY; k],
            n_paths: vec![0; k],
            los_angles: vec![f64::NAN; k],
            path_angles: vec![vec![]; k],
        }
    }
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Block Rician channels: a scaled LoS steering vector plus `n_paths`
/// scattered paths with CN(0,1) gains at angles uniform in [-pi/2, pi/2].
pub fn sample_rician_channels<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    users: &[UserSpec],
    rng: &mut R,
) -> Result<UserChannelSet> {
    let n = cfg.n_tx;
    let nf = n as f64;
    let mut set = UserChannelSet {
        channels: Vec::with_capacity(users.len()),
        rician_factors: Vec::with_capacity(users.len()),
        n_paths: Vec::with_capacity(users.len()),
        los_angles: Vec::with_capacity(users.len()),
        path_angles: Vec::with_capacity(users.len()),
    };
    for u in users {
        if u.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be >= 1".into()));
        }
        if !(u.rician_factor >= 0.0) {
            return Err(Error::InvalidConfig(
                "rician factor must be nonnegative".into(),
            ));
        }
        let v = u.rician_factor;
        let (w_los, w_nlos) = if v.is_infinite() {
            (1.0, 0.0)
        } else {
            ((v / (1.0 + v)).sqrt(), (1.0 / (1.0 + v)).sqrt())
        };
        let los = steering_vector(u.angle, n, cfg.spacing_ratio);
        let mut h: Vec<C64> = los.0.iter().map(|a| a * (w_los * nf.sqrt())).collect();
        let path_scale = w_nlos * (nf / u.n_paths as f64).sqrt();
        let mut angles = Vec::with_capacity(u.n_paths);
        for _ in 0..u.n_paths {
            let gain = complex_gaussian(rng);
            let omega = rng.gen_range(-PI / 2.0..=PI / 2.0);
            angles.push(omega);
            let a = steering_vector(omega, n, cfg.spacing_ratio);
            for (hi, ai) in h.iter_mut().zip(&a.0) {
                *hi += ai * gain * path_scale;
            }
        }
        set.channels.push(h);
        set.rician_factors.push(v);
        set.n_paths.push(u.n_paths);
        set.los_angles.push(u.angle);
        set.path_angles.push(angles);
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    Psk,
    Qam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub kind: ConstellationKind,
    /// PSK: number of points. QAM: `M` for a `4M^2`-point grid.
    pub order: usize,
    pub points: Vec<C64>,
}

impl Constellation {
    pub fn psk(m: usize) -> Self {
        assert!(m >= 2, "PSK needs at least two points");
        let points = (0..m)
            .map(|n| C64::from_polar(1.0, 2.0 * PI * n as f64 / m as f64))
            .collect();
        Self {
            kind: ConstellationKind::Psk,
            order: m,
            points,
        }
    }

    /// Square QAM with `4 m^2` points on the odd-integer grid.
    pub fn qam(m: usize) -> Self {
        assert!(m >= 1);
        let levels = qam_levels(m);
        let mut points = Vec::with_capacity(4 * m * m);
        for &re in &levels {
            for &im in &levels {
                points.push(C64::new(re, im));
            }
        }
        Self {
            kind: ConstellationKind::Qam,
            order: m,
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Largest per-axis QAM level, `2M - 1`.
    pub fn qam_edge(&self) -> f64 {
        (2 * self.order - 1) as f64
    }

    /// PSK decision by angular sector.
    pub fn decide_psk(&self, y: C64) -> usize {
        let m = self.order as f64;
        let k = (y.arg() * m / (2.0 * PI)).round();
        k.rem_euclid(m) as usize
    }

    /// QAM decision per axis on a grid with half-spacings `tau`.
    pub fn decide_qam(&self, y: C64, tau_re: f64, tau_im: f64) -> usize {
        let m = self.order;
        let level = |v: f64| -> usize {
            // levels -(2M-1), ..., (2M-1) map to indices 0..2M
            let idx = ((v + (2 * m - 1) as f64) / 2.0).round();
            idx.clamp(0.0, (2 * m - 1) as f64) as usize
        };
        let re = if tau_re > 0.0 { y.re / tau_re } else { 0.0 };
        let im = if tau_im > 0.0 { y.im / tau_im } else { 0.0 };
        level(re) * 2 * m + level(im)
    }

    pub fn decide(&self, y: C64, tau: (f64, f64)) -> usize {
        match self.kind {
            ConstellationKind::Psk => self.decide_psk(y),
            ConstellationKind::Qam => self.decide_qam(y, tau.0, tau.1),
        }
    }
}

fn qam_levels(m: usize) -> Vec<f64> {
    (0..2 * m)
        .map(|i| (2 * i) as f64 - (2 * m - 1) as f64)
        .collect()
}

/// Symbols per user and slot, `[k][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub indices: Vec<Vec<usize>>,
    pub symbols: Vec<Vec<C64>>,
}

impl SymbolFrame {
    pub fn n_users(&self) -> usize {
        self.symbols.len()
    }

    pub fn frame_len(&self) -> usize {
        self.symbols.first().map_or(0, |s| s.len())
    }

    pub fn from_indices(constellation: &Constellation, indices: Vec<Vec<usize>>) -> Self {
        let symbols = indices
            .iter()
            .map(|row| row.iter().map(|&i| constellation.points[i]).collect())
            .collect();
        Self { indices, symbols }
    }
}

pub fn draw_symbol_frame<R: Rng + ?Sized>(
    constellation: &Constellation,
    n_users: usize,
    frame_len: usize,
    rng: &mut R,
) -> SymbolFrame {
    assert!(!constellation.is_empty());
    let indices = (0..n_users)
        .map(|_| {
            (0..frame_len)
                .map(|_| rng.gen_range(0..constellation.len()))
                .collect()
        })
        .collect();
    SymbolFrame::from_indices(constellation, indices)
}

/// Gaussian reference sequences `u_k` and tolerances `delta_k` for the
/// noise-shaping constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseShapingAux {
    pub reference: Vec<Vec<C64>>,
    pub tolerance: Vec<f64>,
}

impl NoiseShapingAux {
    pub fn new(reference: Vec<Vec<C64>>, delta: f64) -> Self {
        let k = reference.len();
        Self {
            reference,
            tolerance: vec![delta; k],
        }
    }
}

pub fn draw_noise_reference<R: Rng + ?Sized>(
    n_targets: usize,
    frame_len: usize,
    rng: &mut R,
) -> Vec<Vec<C64>> {
    (0..n_targets)
        .map(|_| (0..frame_len).map(|_| complex_gaussian(rng)).collect())
        .collect()
}

/// Targets to sense and users to serve.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub targets: Vec<TargetSpec>,
    pub channels: UserChannelSet,
}

impl Scene {
    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn n_users(&self) -> usize {
        self.channels.len()
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        cfg.validate()?;
        for t in &self.targets {
            t.validate()?;
        }
        for h in &self.channels.channels {
            if h.len() != cfg.n_tx {
                return Err(Error::Dimension {
                    expected: cfg.n_tx,
                    got: h.len(),
                });
            }
        }
        if cfg.user_noise_powers.len() != self.n_users() {
            return Err(Error::InvalidConfig(format!(
                "{} user noise powers for {} users",
                cfg.user_noise_powers.len(),
                self.n_users()
            )));
        }
        Ok(())
    }
}
