//! Worst-case ISCC design under bounded channel and angle uncertainty.
//!
//! A user channel known up to a ball of radius `eps_U` loses at most
//! `eps_U ‖x_l‖` of margin, so each SEP halfspace gains a slack radius
//! `r_l >= ‖x_l‖`. Target angles known up to `± eps_T` are covered by a grid
//! of surrogate and noise-shaping sets.

use crate::array::{NoiseShapingAux, Scene, SymbolFrame, SystemConfig, TargetSpec};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, C64};
use crate::metrics::{min_scnr, Waveform};
use crate::mm::{matched_filter_start, run_mm, Assembly, GridCheck, SolveOptions, SolveReport};
use crate::pda::{DecisionPoint, ProjectionSet};
use crate::psk::{check_frame, noise_sets, rotated_symbols, PskSpec};
use crate::qam::{qam_sets, qam_start, read_tau, QamSpec};
use crate::sets::{AuxLayout, PowerBall, RobustSepHalfspace, SocSet};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Uniform,
    Chebyshev,
}

/// Angles covering `[theta - eps, theta + eps]`.
pub fn angle_grid(theta_hat: f64, eps: f64, size: usize, kind: GridKind) -> Vec<f64> {
    assert!(size >= 1, "grid needs at least one point");
    assert!(eps >= 0.0, "half-width must be nonnegative");
    if size == 1 {
        return vec![theta_hat];
    }
    let m = size as f64;
    (1..=size)
        .map(|i| {
            let i = i as f64;
            match kind {
                GridKind::Uniform => theta_hat + eps * (2.0 * i - m - 1.0) / (m - 1.0),
                GridKind::Chebyshev => theta_hat + eps * ((2.0 * i - 1.0) * PI / (2.0 * m)).cos(),
            }
        })
        .collect()
}

/// Channel-ball radius per user, angle half-width (radians) per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyModel {
    pub eps_user: Vec<f64>,
    pub eps_target: Vec<f64>,
    pub grid_size: usize,
    pub grid_kind: GridKind,
}

impl UncertaintyModel {
    /// Same radii for every user and target, five-point uniform grid.
    pub fn uniform(n_users: usize, n_targets: usize, eps_user: f64, eps_target: f64) -> Self {
        Self {
            eps_user: vec![eps_user; n_users],
            eps_target: vec![eps_target; n_targets],
            grid_size: 5,
            grid_kind: GridKind::Uniform,
        }
    }

    pub fn validate(&self, scene: &Scene) -> Result<()> {
        if self.eps_user.len() != scene.n_users() || self.eps_target.len() != scene.n_targets() {
            return Err(Error::InvalidConfig(
                "uncertainty radii must match the user and target counts".into(),
            ));
        }
        if self.grid_size == 0
            || self
                .eps_user
                .iter()
                .chain(&self.eps_target)
                .any(|e| !(*e >= 0.0))
        {
            return Err(Error::InvalidConfig(
                "grid size must be positive and radii nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self, k: usize, theta_hat: f64) -> Vec<f64> {
        angle_grid(
            theta_hat,
            self.eps_target[k],
            self.grid_size,
            self.grid_kind,
        )
    }
}

/// `min over ‖dh‖ <= eps of Re{(h + dh)^H x s~} = Re{h^H x s~} - eps ‖x‖`.
pub fn worst_case_sep_margin_psk(x_slot: &[C64], h_hat: &[C64], s_rot: C64, eps: f64) -> f64 {
    (dot(h_hat, x_slot) * s_rot).re - eps * norm(x_slot)
}

#[derive(Debug, Clone)]
pub struct RobustPskSolution {
    pub waveform: Waveform,
    pub d: Vec<C64>,
    pub radius: Vec<f64>,
    pub report: SolveReport,
}

#[derive(Debug, Clone)]
pub struct RobustQamSolution {
    pub waveform: Waveform,
    pub d: Vec<C64>,
    pub tau: Vec<(f64, f64)>,
    pub radius: Vec<f64>,
    pub report: SolveReport,
}

fn grid_targets(scene: &Scene, unc: &UncertaintyModel) -> Vec<TargetSpec> {
    scene
        .targets
        .iter()
        .enumerate()
        .flat_map(|(k, t)| {
            unc.grid(k, t.angle)
                .into_iter()
                .map(move |th| t.at_angle(th))
        })
        .collect()
}

fn covert_and_cone_sets(
    scene: &Scene,
    cfg: &SystemConfig,
    unc: &UncertaintyModel,
    aux: Option<&NoiseShapingAux>,
    layout: AuxLayout,
) -> Result<Vec<Box<dyn ProjectionSet>>> {
    let mut out: Vec<Box<dyn ProjectionSet>> = Vec::new();
    if let Some(aux) = aux {
        for (k, t) in scene.targets.iter().enumerate() {
            out.extend(noise_sets(cfg, k, &unc.grid(k, t.angle), aux)?);
        }
    }
    for l in 0..cfg.frame_len {
        out.push(Box::new(SocSet {
            slot: l,
            n_tx: cfg.n_tx,
            radius_index: layout.radius(l),
        }));
    }
    out.push(Box::new(PowerBall { power: cfg.power }));
    Ok(out)
}

fn grid_check(
    x: &[C64],
    scene: &Scene,
    unc: &UncertaintyModel,
    cfg: &SystemConfig,
    design: &[TargetSpec],
) -> GridCheck {
    let fine: Vec<TargetSpec> = scene
        .targets
        .iter()
        .enumerate()
        .flat_map(|(k, t)| {
            angle_grid(
                t.angle,
                unc.eps_target[k],
                10 * unc.grid_size,
                GridKind::Uniform,
            )
            .into_iter()
            .map(move |th| t.at_angle(th))
        })
        .collect();
    GridCheck {
        grid_min: min_scnr(x, design, cfg),
        fine_grid_min: min_scnr(x, &fine, cfg),
    }
}

fn radii(layout: &AuxLayout, aux: &[f64]) -> Vec<f64> {
    (0..layout.frame_len)
        .map(|l| aux[layout.radius(l)])
        .collect()
}

/// Robust PSK design.
pub fn solve_robust_psk(
    scene: &Scene,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    spec: &PskSpec,
    unc: &UncertaintyModel,
    aux: Option<&NoiseShapingAux>,
    opts: &SolveOptions,
) -> Result<RobustPskSolution> {
    check_frame(scene, cfg, frame)?;
    unc.validate(scene)?;
    let layout = AuxLayout {
        n_users: scene.n_users(),
        frame_len: cfg.frame_len,
        qam: false,
        robust: true,
    };
    let mut fixed: Vec<Box<dyn ProjectionSet>> = Vec::new();
    for (k, h) in scene.channels.channels.iter().enumerate() {
        let mu = spec
            .qos
            .psk_threshold(cfg.user_noise_powers[k].sqrt(), spec.order);
        for l in 0..cfg.frame_len {
            let (st, sb) = rotated_symbols(frame.symbols[k][l], spec.order);
            for (tag, r) in [("a", st), ("b", sb)] {
                let ht: Vec<C64> = h.iter().map(|z| z * r.conj()).collect();
                let set = RobustSepHalfspace::new(
                    l,
                    ht,
                    unc.eps_user[k],
                    mu,
                    layout.radius(l),
                    format!("robust-sep[{k},{l},{tag}]"),
                )?;
                fixed.push(Box::new(set));
            }
        }
    }
    fixed.extend(covert_and_cone_sets(scene, cfg, unc, aux, layout)?);
    let sensing = grid_targets(scene, unc);
    let x0 = matched_filter_start(cfg, &scene.targets);
    let r0: Vec<f64> = x0.chunks(cfg.n_tx).map(norm).collect();
    let init = DecisionPoint::new(x0, vec![C64::new(0.0, 0.0); scene.n_targets()], 0.0, r0);
    let assembly = Assembly {
        sensing: sensing.clone(),
        fixed,
        layout,
        n_d: scene.n_targets(),
    };
    let out = run_mm(cfg, &assembly, init, opts)?;
    let radius = radii(&layout, &out.point.aux);
    let mut report = out.report;
    report.radius = Some(radius.clone());
    report.grid_check = Some(grid_check(&out.point.x, scene, unc, cfg, &sensing));
    Ok(RobustPskSolution {
        waveform: Waveform::new(cfg.n_tx, out.point.x),
        d: out.point.d,
        radius,
        report,
    })
}

/// Robust QAM design. Inside the margin projection the slack radii are
/// held at their incoming values; the cone sets enforce `‖x_l‖ <= r_l`.
pub fn solve_robust_qam(
    scene: &Scene,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    spec: &QamSpec,
    unc: &UncertaintyModel,
    aux: Option<&NoiseShapingAux>,
    opts: &SolveOptions,
) -> Result<RobustQamSolution> {
    check_frame(scene, cfg, frame)?;
    unc.validate(scene)?;
    let (mut fixed, layout) = qam_sets(scene, cfg, frame, spec, Some(&unc.eps_user))?;
    let has_margin = !fixed.is_empty();
    fixed.extend(covert_and_cone_sets(scene, cfg, unc, aux, layout)?);
    let margin = if has_margin {
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
    let sensing = grid_targets(scene, unc);
    let assembly = Assembly {
        sensing: sensing.clone(),
        fixed,
        layout,
        n_d: scene.n_targets(),
    };
    let out = run_mm(cfg, &assembly, init, opts)?;
    let radius = radii(&layout, &out.point.aux);
    let tau = read_tau(&layout, &out.point.aux);
    let mut report = out.report;
    report.radius = Some(radius.clone());
    report.tau = Some(tau.iter().map(|&(r, i)| [r, i]).collect());
    report.grid_check = Some(grid_check(&out.point.x, scene, unc, cfg, &sensing));
    Ok(RobustQamSolution {
        waveform: Waveform::new(cfg.n_tx, out.point.x),
        d: out.point.d,
        tau,
        radius,
        report,
    })
}
