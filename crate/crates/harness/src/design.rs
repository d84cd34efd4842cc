//! One entry point that designs a frame with any method.

use crate::baselines::bf_baseline;
use crate::eval::DesignedFrame;
use crate::scene::SceneConfig;
use iscc_core::array::{Constellation, ConstellationKind, Scene, SystemConfig};
use iscc_core::mm::{SolveOptions, SolveReport};
use iscc_core::psk::{solve_iscc_psk, PskSpec, Qos};
use iscc_core::qam::{solve_iscc_qam, QamSpec};
use iscc_core::rng::SeedStreams;
use iscc_core::robust::{solve_robust_psk, solve_robust_qam, UncertaintyModel};
use iscc_core::special::q_inv;
use iscc_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Covert design with noise shaping.
    Iscc,
    /// Symbol-level precoding without noise shaping.
    Slp,
    /// Zero-forcing beamformer with a nullspace radar beam (heuristic).
    Bf,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Iscc => "iscc",
            Method::Slp => "slp",
            Method::Bf => "bf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Modulation {
    /// `order` points on the unit circle.
    Psk { order: usize },
    /// `4 order^2` points on the odd-integer grid.
    Qam { order: usize },
}

impl Modulation {
    pub fn constellation(&self) -> Constellation {
        match *self {
            Modulation::Psk { order } => Constellation::psk(order),
            Modulation::Qam { order } => Constellation::qam(order),
        }
    }
}

/// Reliability target shared by all methods of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub modulation: Modulation,
    pub qos: Qos,
    /// Noise-shaping tolerance, ignored by the baselines.
    pub delta: f64,
}

impl Requirement {
    /// Linear SNR the beamformer gives every user. A SEP budget is turned
    /// into the SNR whose PSK margin threshold matches it.
    pub fn beamformer_snr(&self) -> Result<f64> {
        match (self.qos, self.modulation) {
            (Qos::Snr(g), _) => Ok(g),
            (Qos::Sep(eps), Modulation::Psk { order }) => {
                let r = q_inv(eps / 2.0) / (SQRT_2 * (PI / order as f64).sin());
                Ok(r * r)
            }
            (Qos::Sep(eps), Modulation::Qam { .. }) => {
                // interior levels on one axis: 2 Q(sqrt(2 snr / E_s)) per axis
                let per_axis = 1.0 - (1.0 - eps).sqrt();
                let q = q_inv(per_axis / 2.0);
                let es = self.modulation.constellation().mean_energy();
                Ok(q * q * es / 2.0)
            }
        }
    }

    fn qam_epsilon(&self) -> Result<f64> {
        match self.qos {
            Qos::Sep(eps) => Ok(eps),
            Qos::Snr(_) => Err(Error::InvalidConfig(
                "QAM designs take a SEP budget, not an SNR threshold".into(),
            )),
        }
    }
}

/// Designed frame plus what the solver reported (none for the beamformer).
#[derive(Debug, Clone)]
pub struct Design {
    pub frame: DesignedFrame,
    pub report: Option<SolveReport>,
}

/// Designs frame `index` of `scene` with `method`. The beamformer is a
/// block design; rebuilding it per frame is cheap and keeps frames
/// independent jobs.
#[allow(clippy::too_many_arguments)]
pub fn design_frame(
    method: Method,
    sc: &SceneConfig,
    cfg: &SystemConfig,
    scene: &Scene,
    seeds: &SeedStreams,
    index: u64,
    req: &Requirement,
    uncertainty: Option<&UncertaintyModel>,
    opts: &SolveOptions,
) -> Result<Design> {
    let constellation = req.modulation.constellation();
    let (frame, aux) = sc.frame(seeds, index, &constellation, req.delta);
    let covert = if method == Method::Iscc {
        Some(&aux)
    } else {
        None
    };
    let (waveform, tau, report) = match (method, req.modulation, uncertainty) {
        (Method::Bf, _, _) => {
            let bf = bf_baseline(scene, cfg, &constellation, req.beamformer_snr()?)?;
            let tau = match constellation.kind {
                ConstellationKind::Qam => Some(bf.user_gain.iter().map(|&g| (g, g)).collect()),
                ConstellationKind::Psk => None,
            };
            (bf.apply(&frame), tau, None)
        }
        (_, Modulation::Psk { order }, None) => {
            let s = solve_iscc_psk(
                scene,
                cfg,
                &frame,
                &PskSpec {
                    order,
                    qos: req.qos,
                },
                covert,
                opts,
            )?;
            (s.waveform, None, Some(s.report))
        }
        (_, Modulation::Psk { order }, Some(u)) => {
            let s = solve_robust_psk(
                scene,
                cfg,
                &frame,
                &PskSpec {
                    order,
                    qos: req.qos,
                },
                u,
                covert,
                opts,
            )?;
            (s.waveform, None, Some(s.report))
        }
        (_, Modulation::Qam { order }, None) => {
            let spec = QamSpec {
                order,
                epsilon: req.qam_epsilon()?,
            };
            let s = solve_iscc_qam(scene, cfg, &frame, &spec, covert, opts)?;
            (s.waveform, Some(s.tau), Some(s.report))
        }
        (_, Modulation::Qam { order }, Some(u)) => {
            let spec = QamSpec {
                order,
                epsilon: req.qam_epsilon()?,
            };
            let s = solve_robust_qam(scene, cfg, &frame, &spec, u, covert, opts)?;
            (s.waveform, Some(s.tau), Some(s.report))
        }
    };
    Ok(Design {
        frame: DesignedFrame {
            index,
            frame,
            waveform,
            tau,
        },
        report,
    })
}
