//! QAM symbol-level ISCC design.
//!
//! Decision regions of a square QAM grid scale with a per-user dynamic range
//! `tau` (one half-spacing per axis, shared over the frame). The received
//! points `upsilon_l = H x_l` are carried as auxiliary variables so that the
//! margin boxes and the channel coupling each project in closed form.

use crate::array::{
    Constellation, ConstellationKind, NoiseShapingAux, Scene, SymbolFrame, SystemConfig,
};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::metrics::Waveform;
use crate::mm::{matched_filter_start, run_mm, Assembly, SolveOptions, SolveReport};
use crate::pda::{DecisionPoint, ProjectionSet};
use crate::psk::{check_frame, noise_sets};
use crate::sets::{
    AuxLayout, AxisBounds, ChannelCouplingSet, CouplingFactor, PowerBall, QamMarginSet, SepBounds,
};
use crate::special::q_inv;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::sync::Arc;

/// Interior margin `alpha` and edge margin `beta` for a per-user SEP budget.
/// Both axes must succeed, so each axis gets `1 - sqrt(1 - eps)`; interior
/// levels split it over two sides.
pub fn qam_margins(epsilon: f64, sigma: f64) -> (f64, f64) {
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    assert!(sigma > 0.0, "sigma must be positive");
    let per_axis = 1.0 - (1.0 - epsilon).sqrt();
    let s = sigma / SQRT_2;
    (s * q_inv(per_axis / 2.0), s * q_inv(per_axis))
}

/// Box sides for one axis level on a grid whose outermost level is `edge`.
pub fn axis_bounds(level: f64, edge: f64, alpha: f64, beta: f64) -> AxisBounds {
    if level >= edge {
        AxisBounds {
            level,
            a: Some(beta),
            c: None,
        }
    } else if level <= -edge {
        AxisBounds {
            level,
            a: None,
            c: Some(beta),
        }
    } else {
        AxisBounds {
            level,
            a: Some(alpha),
            c: Some(alpha),
        }
    }
}

/// Per-(user, slot) bounds on both axes, with the margins of every user.
pub fn qam_bounds(
    constellation: &Constellation,
    frame: &SymbolFrame,
    epsilon: f64,
    sigmas: &[f64],
) -> (SepBounds, Vec<(f64, f64)>) {
    assert_eq!(constellation.kind, ConstellationKind::Qam);
    assert_eq!(sigmas.len(), frame.n_users());
    let edge = constellation.qam_edge();
    let margins: Vec<(f64, f64)> = sigmas.iter().map(|&s| qam_margins(epsilon, s)).collect();
    let mut re = Vec::with_capacity(frame.n_users());
    let mut im = Vec::with_capacity(frame.n_users());
    for (row, &(alpha, beta)) in frame.symbols.iter().zip(&margins) {
        re.push(
            row.iter()
                .map(|s| axis_bounds(s.re, edge, alpha, beta))
                .collect(),
        );
        im.push(
            row.iter()
                .map(|s| axis_bounds(s.im, edge, alpha, beta))
                .collect(),
        );
    }
    (SepBounds { re, im }, margins)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QamSpec {
    /// `M` of a `4 M^2`-point grid.
    pub order: usize,
    /// Per-user symbol error budget.
    pub epsilon: f64,
}

impl QamSpec {
    pub fn constellation(&self) -> Constellation {
        Constellation::qam(self.order)
    }
}

#[derive(Debug, Clone)]
pub struct QamSolution {
    pub waveform: Waveform,
    pub d: Vec<C64>,
    /// `(tau_re, tau_im)` per user.
    pub tau: Vec<(f64, f64)>,
    pub report: SolveReport,
}

/// Margin and coupling sets for a QAM frame, plus the matching layout.
pub(crate) fn qam_sets(
    scene: &Scene,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    spec: &QamSpec,
    eps_user: Option<&[f64]>,
) -> Result<(Vec<Box<dyn ProjectionSet>>, AuxLayout)> {
    if !(spec.epsilon > 0.0 && spec.epsilon < 1.0) || spec.order == 0 {
        return Err(Error::InvalidArgument(
            "QAM needs order >= 1 and epsilon in (0, 1)".into(),
        ));
    }
    let layout = AuxLayout {
        n_users: scene.n_users(),
        frame_len: cfg.frame_len,
        qam: true,
        robust: eps_user.is_some(),
    };
    if scene.n_users() == 0 {
        return Ok((vec![], layout));
    }
    let sigmas: Vec<f64> = cfg.user_noise_powers.iter().map(|v| v.sqrt()).collect();
    let (bounds, _) = qam_bounds(&spec.constellation(), frame, spec.epsilon, &sigmas);
    let eps_user = eps_user.map_or_else(|| vec![0.0; scene.n_users()], |e| e.to_vec());
    let mut sets: Vec<Box<dyn ProjectionSet>> = vec![Box::new(QamMarginSet {
        bounds,
        layout,
        eps_user,
    })];
    let factor = Arc::new(CouplingFactor::new(&scene.channels.channels)?);
    for l in 0..cfg.frame_len {
        sets.push(Box::new(ChannelCouplingSet {
            slot: l,
            layout,
            factor: Arc::clone(&factor),
        }));
    }
    Ok((sets, layout))
}

/// Starting point with `upsilon = H x`, and `tau` (with `upsilon`) moved onto
/// the margin boxes.
pub(crate) fn qam_start(
    scene: &Scene,
    cfg: &SystemConfig,
    layout: AuxLayout,
    margin: Option<&dyn ProjectionSet>,
    x: Vec<C64>,
    n_d: usize,
) -> Result<DecisionPoint> {
    let mut aux = vec![0.0; layout.len()];
    for l in 0..cfg.frame_len {
        let xl = &x[l * cfg.n_tx..(l + 1) * cfg.n_tx];
        for (k, h) in scene.channels.channels.iter().enumerate() {
            let v = crate::linalg::dot(h, xl);
            aux[layout.upsilon(k, l)] = v.re;
            aux[layout.upsilon(k, l) + 1] = v.im;
        }
        if layout.robust {
            aux[layout.radius(l)] = crate::linalg::norm(xl);
        }
    }
    let mut p = DecisionPoint::new(x, vec![C64::new(0.0, 0.0); n_d], 0.0, aux);
    if let Some(m) = margin {
        let mut acc = p.zeros_like();
        m.displace(&p, &mut acc)?;
        p.axpy(1.0, &acc);
    }
    Ok(p)
}

pub(crate) fn read_tau(layout: &AuxLayout, aux: &[f64]) -> Vec<(f64, f64)> {
    (0..layout.n_users)
        .map(|k| (aux[layout.tau(k)], aux[layout.tau(k) + 1]))
        .collect()
}

/// QAM design. Passing no noise-shaping data drops the covertness
/// constraints.
pub fn solve_iscc_qam(
    scene: &Scene,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    spec: &QamSpec,
    aux: Option<&NoiseShapingAux>,
    opts: &SolveOptions,
) -> Result<QamSolution> {
    check_frame(scene, cfg, frame)?;
    let (mut fixed, layout) = qam_sets(scene, cfg, frame, spec, None)?;
    if let Some(aux) = aux {
        for (k, t) in scene.targets.iter().enumerate() {
            fixed.extend(noise_sets(cfg, k, &[t.angle], aux)?);
        }
    }
    fixed.push(Box::new(PowerBall { power: cfg.power }));
    let margin = if scene.n_users() > 0 {
        Some(fixed[0].as_ref())
    } else {
        None
    };
    let init = qam_start(
        scene,
        cfg,
        layout,
        margin,
        matched_filter_start(cfg, &scene.targets),
        scene.n_targets(),
    )?;
    let assembly = Assembly {
        sensing: scene.targets.clone(),
        fixed,
        layout,
        n_d: scene.n_targets(),
    };
    let out = run_mm(cfg, &assembly, init, opts)?;
    let tau = read_tau(&layout, &out.point.aux);
    let mut report = out.report;
    report.tau = Some(tau.iter().map(|&(r, i)| [r, i]).collect());
    Ok(QamSolution {
        waveform: Waveform::new(cfg.n_tx, out.point.x),
        d: out.point.d,
        tau,
        report,
    })
}
