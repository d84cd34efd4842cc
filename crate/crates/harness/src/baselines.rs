//! Reference designs: symbol-level precoding without covertness and a
//! block-level zero-forcing beamformer with a radar beam in the users'
//! nullspace.

use iscc_core::array::{steering_vector, Constellation, Scene, SymbolFrame, SystemConfig};
use iscc_core::linalg::C64;
use iscc_core::metrics::Waveform;
use iscc_core::mm::{SolveOptions, SolveReport};
use iscc_core::psk::{solve_iscc_psk, PskSpec};
use iscc_core::qam::{solve_iscc_qam, QamSpec};
use iscc_core::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Symbol-level precoding with the same pipeline as the covert design, minus
/// the noise-shaping sets.
pub fn slp_baseline_psk(
    scene: &Scene,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    spec: &PskSpec,
    opts: &SolveOptions,
) -> Result<(Waveform, SolveReport)> {
    let s = solve_iscc_psk(scene, cfg, frame, spec, None, opts)?;
    Ok((s.waveform, s.report))
}

/// Per-user `(tau_re, tau_im)` dynamic ranges.
pub type DynamicRanges = Vec<(f64, f64)>;

/// QAM variant of [`slp_baseline_psk`]; also returns the dynamic ranges.
pub fn slp_baseline_qam(
    scene: &Scene,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    spec: &QamSpec,
    opts: &SolveOptions,
) -> Result<(Waveform, DynamicRanges, SolveReport)> {
    let s = solve_iscc_qam(scene, cfg, frame, spec, None, opts)?;
    Ok((s.waveform, s.tau, s.report))
}

/// Block beamformer. Heuristic: zero-forcing user beams scaled to SNR
/// `gamma` exactly, the rest of the budget on the dominant direction of the
/// summed target correlation restricted to the users' nullspace.
#[derive(Debug, Clone)]
pub struct BfPrecoder {
    /// Column `k` feeds user `k`.
    pub beams: Vec<Vec<C64>>,
    /// Unit radar direction, orthogonal to every user channel.
    pub radar_dir: Vec<C64>,
    /// Radar energy per slot.
    pub radar_power: f64,
    /// Real gain `h_k^H w_k` each user sees on its own symbol.
    pub user_gain: Vec<f64>,
    pub frame_len: usize,
}

impl BfPrecoder {
    /// `x_l = W s_l + sqrt(p_r) w_r`.
    pub fn apply(&self, frame: &SymbolFrame) -> Waveform {
        let n = self.radar_dir.len();
        let r = self.radar_power.sqrt();
        let mut x = Vec::with_capacity(n * self.frame_len);
        for l in 0..self.frame_len {
            for i in 0..n {
                let mut v = self.radar_dir[i] * r;
                for (k, w) in self.beams.iter().enumerate() {
                    v += w[i] * frame.symbols[k][l];
                }
                x.push(v);
            }
        }
        Waveform::new(n, x)
    }

    /// Energy per frame averaged over independent zero-mean symbols.
    pub fn mean_energy(&self, symbol_energy: f64) -> f64 {
        let users: f64 = self
            .beams
            .iter()
            .map(|w| w.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        self.frame_len as f64 * (symbol_energy * users + self.radar_power)
    }
}

pub fn bf_baseline(
    scene: &Scene,
    cfg: &SystemConfig,
    constellation: &Constellation,
    gamma: f64,
) -> Result<BfPrecoder> {
    scene.validate(cfg)?;
    let n = cfg.n_tx;
    let ku = scene.n_users();
    if ku > n {
        return Err(Error::InvalidConfig(format!(
            "{ku} users exceed {n} antennas"
        )));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(
            "SNR target must be nonnegative".into(),
        ));
    }
    let es = constellation.mean_energy();
    let h = DMatrix::<C64>::from_fn(ku, n, |k, i| scene.channels.channels[k][i].conj());
    let (beams, user_gain, projector) = if ku == 0 {
        (vec![], vec![], DMatrix::<C64>::identity(n, n))
    } else {
        let gram_inv = (&h * h.adjoint())
            .try_inverse()
            .ok_or_else(|| Error::InvalidConfig("user channels are linearly dependent".into()))?;
        let zf = h.adjoint() * &gram_inv;
        let mut beams = Vec::with_capacity(ku);
        let mut gains = Vec::with_capacity(ku);
        for k in 0..ku {
            let g = (gamma * cfg.user_noise_powers[k] / es).sqrt();
            beams.push(zf.column(k).iter().map(|z| z * g).collect::<Vec<_>>());
            gains.push(g);
        }
        let projector = DMatrix::<C64>::identity(n, n) - h.adjoint() * &gram_inv * &h;
        (beams, gains, projector)
    };
    let slot_budget = cfg.power / cfg.frame_len as f64;
    let user_energy: f64 = es
        * beams
            .iter()
            .map(|w| w.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>();
    if user_energy > slot_budget * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!(
            "zero-forcing needs {user_energy:.4} per slot, budget is {slot_budget:.4}"
        )));
    }
    let mut corr = DMatrix::<C64>::zeros(n, n);
    for t in &scene.targets {
        let a = DVector::from_vec(steering_vector(t.angle, n, cfg.spacing_ratio).0);
        corr += &a * a.adjoint();
    }
    let restricted = &projector * corr * &projector;
    let eig = restricted.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    let mut dir: Vec<C64> = eig.eigenvectors.column(top).iter().copied().collect();
    // re-project to clean rounding, then normalize
    let v = &projector * DVector::from_vec(dir.clone());
    let norm = v.norm();
    if norm > 0.0 {
        dir = v.iter().map(|z| z / norm).collect();
    }
    Ok(BfPrecoder {
        beams,
        radar_dir: dir,
        radar_power: (slot_budget - user_energy).max(0.0),
        user_gain,
        frame_len: cfg.frame_len,
    })
}
