//! PSK symbol-level ISCC design.
//!
//! Each user's symbol must land inside its constructive-interference sector
//! with a safety margin that caps the symbol error probability. In rotated
//! coordinates the sector becomes two halfspaces per (user, slot).

use crate::array::{NoiseShapingAux, Scene, SymbolFrame, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::metrics::Waveform;
use crate::mm::{matched_filter_start, run_mm, Assembly, SolveOptions, SolveReport};
use crate::pda::{DecisionPoint, ProjectionSet};
use crate::sets::{AuxLayout, NoiseShapingSet, PowerBall, SepHalfspace};
use crate::special::q_inv;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// `mu = Q^{-1}(eps/2) sigma / sqrt(2)`.
pub fn qos_threshold_psk(epsilon: f64, sigma: f64) -> f64 {
    assert!(
        epsilon > 0.0 && epsilon <= 1.0,
        "epsilon must lie in (0, 1]"
    );
    assert!(sigma > 0.0, "sigma must be positive");
    q_inv(epsilon / 2.0) * sigma / SQRT_2
}

/// SNR-threshold form `mu = sigma sin(pi/M) sqrt(Gamma)`.
pub fn qos_threshold_psk_snr(gamma: f64, sigma: f64, m: usize) -> f64 {
    assert!(gamma >= 0.0 && sigma > 0.0);
    sigma * (PI / m as f64).sin() * gamma.sqrt()
}

/// Per-user reliability requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qos {
    /// Target symbol error probability.
    Sep(f64),
    /// Linear SNR threshold.
    Snr(f64),
}

impl Qos {
    pub fn psk_threshold(&self, sigma: f64, m: usize) -> f64 {
        match *self {
            Qos::Sep(eps) => qos_threshold_psk(eps, sigma),
            Qos::Snr(g) => qos_threshold_psk_snr(g, sigma, m),
        }
    }
}

/// `s~ = s*(sin(pi/M) + j cos(pi/M))` and `s- = s*(sin(pi/M) - j cos(pi/M))`.
pub fn rotated_symbols(s: C64, m: usize) -> (C64, C64) {
    let (sn, cs) = ((PI / m as f64).sin(), (PI / m as f64).cos());
    (s.conj() * C64::new(sn, cs), s.conj() * C64::new(sn, -cs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PskSpec {
    pub order: usize,
    pub qos: Qos,
}

#[derive(Debug, Clone)]
pub struct PskSolution {
    pub waveform: Waveform,
    pub d: Vec<C64>,
    pub report: SolveReport,
}

pub(crate) fn check_frame(scene: &Scene, cfg: &SystemConfig, frame: &SymbolFrame) -> Result<()> {
    scene.validate(cfg)?;
    if frame.n_users() != scene.n_users() {
        return Err(Error::InvalidArgument(format!(
            "frame carries {} users, scene has {}",
            frame.n_users(),
            scene.n_users()
        )));
    }
    if scene.n_users() > 0 && frame.frame_len() != cfg.frame_len {
        return Err(Error::Dimension {
            expected: cfg.frame_len,
            got: frame.frame_len(),
        });
    }
    Ok(())
}

/// Both rotated SEP halfspaces for every (user, slot).
pub(crate) fn psk_sep_sets(
    scene: &Scene,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    spec: &PskSpec,
) -> Result<Vec<Box<dyn ProjectionSet>>> {
    let mut out: Vec<Box<dyn ProjectionSet>> = Vec::new();
    for (k, h) in scene.channels.channels.iter().enumerate() {
        let mu = spec
            .qos
            .psk_threshold(cfg.user_noise_powers[k].sqrt(), spec.order);
        for l in 0..cfg.frame_len {
            let (st, sb) = rotated_symbols(frame.symbols[k][l], spec.order);
            for (tag, r) in [("a", st), ("b", sb)] {
                // Re{h^H x s~} = Re{(h conj(s~))^H x}
                let ht: Vec<C64> = h.iter().map(|z| z * r.conj()).collect();
                out.push(Box::new(SepHalfspace::new(
                    l,
                    ht,
                    mu,
                    format!("sep[{k},{l},{tag}]"),
                )?));
            }
        }
    }
    Ok(out)
}

/// Noise-shaping sets for every target, at the given transmit angles.
pub(crate) fn noise_sets(
    cfg: &SystemConfig,
    target: usize,
    angles: &[f64],
    aux: &NoiseShapingAux,
) -> Result<Vec<Box<dyn ProjectionSet>>> {
    let u = aux
        .reference
        .get(target)
        .ok_or_else(|| Error::InvalidArgument(format!("no noise reference for target {target}")))?;
    if u.len() != cfg.frame_len {
        return Err(Error::Dimension {
            expected: cfg.frame_len,
            got: u.len(),
        });
    }
    angles
        .iter()
        .enumerate()
        .map(|(m, &th)| {
            let a = cfg.tx_steering(th).0;
            let set = NoiseShapingSet::new(
                target,
                a,
                u.clone(),
                aux.tolerance[target],
                format!("noise[{target},{m}]"),
            )?;
            Ok(Box::new(set) as Box<dyn ProjectionSet>)
        })
        .collect()
}

/// PSK design. Passing no noise-shaping data gives plain symbol-level
/// precoding without the covertness constraints.
pub fn solve_iscc_psk(
    scene: &Scene,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    spec: &PskSpec,
    aux: Option<&NoiseShapingAux>,
    opts: &SolveOptions,
) -> Result<PskSolution> {
    check_frame(scene, cfg, frame)?;
    let mut fixed = psk_sep_sets(scene, cfg, frame, spec)?;
    if let Some(aux) = aux {
        for (k, t) in scene.targets.iter().enumerate() {
            fixed.extend(noise_sets(cfg, k, &[t.angle], aux)?);
        }
    }
    fixed.push(Box::new(PowerBall { power: cfg.power }));
    let layout = AuxLayout {
        n_users: scene.n_users(),
        frame_len: cfg.frame_len,
        qam: false,
        robust: false,
    };
    let assembly = Assembly {
        sensing: scene.targets.clone(),
        fixed,
        layout,
        n_d: scene.n_targets(),
    };
    let init = DecisionPoint::new(
        matched_filter_start(cfg, &scene.targets),
        vec![C64::new(0.0, 0.0); scene.n_targets()],
        0.0,
        vec![],
    );
    let out = run_mm(cfg, &assembly, init, opts)?;
    Ok(PskSolution {
        waveform: Waveform::new(cfg.n_tx, out.point.x),
        d: out.point.d,
        report: out.report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        assert!(qos_threshold_psk(1.0, 1.0).abs() < 1e-15);
        let mu = qos_threshold_psk(0.0455, 1.0);
        assert!((mu - std::f64::consts::SQRT_2).abs() < 2e-3, "{mu}");
        assert!(
            (qos_threshold_psk_snr(10.0, 1.0, 4) - (PI / 4.0).sin() * 10f64.sqrt()).abs() < 1e-15
        );
    }

    #[test]
    fn rotated_symbols_have_unit_modulus() {
        for m in [2, 4, 8] {
            for n in 0..m {
                let s = C64::from_polar(1.0, 2.0 * PI * n as f64 / m as f64);
                let (a, b) = rotated_symbols(s, m);
                assert!((a.norm() - 1.0).abs() < 1e-15 && (b.norm() - 1.0).abs() < 1e-15);
            }
        }
    }
}
