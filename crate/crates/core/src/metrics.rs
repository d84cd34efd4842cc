//! Sensing, communication and covertness figures of merit.

use crate::array::{
    steering_vector, Clutter, InterferenceCovariance, NoiseShapingAux, Scene, SteeringMatrix,
    SystemConfig, TargetSpec,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sqr, C64};
use crate::special::{q_func, q_inv};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, SQRT_2};

/// Stacked transmit codeword `x = [x_1; ...; x_L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub n_tx: usize,
    pub stacked: Vec<C64>,
}

impl Waveform {
    pub fn new(n_tx: usize, stacked: Vec<C64>) -> Self {
        assert!(
            n_tx > 0 && stacked.len().is_multiple_of(n_tx),
            "waveform length must be a multiple of n_tx"
        );
        Self { n_tx, stacked }
    }

    pub fn zeros(n_tx: usize, frame_len: usize) -> Self {
        Self::new(n_tx, vec![C64::new(0.0, 0.0); n_tx * frame_len])
    }

    pub fn frame_len(&self) -> usize {
        self.stacked.len() / self.n_tx
    }

    pub fn slot(&self, l: usize) -> &[C64] {
        &self.stacked[l * self.n_tx..(l + 1) * self.n_tx]
    }

    pub fn slots(&self) -> std::slice::ChunksExact<'_, C64> {
        self.stacked.chunks_exact(self.n_tx)
    }

    pub fn energy(&self) -> f64 {
        norm_sqr(&self.stacked)
    }
}

/// `gamma_k(x) = (A_k x)^H R_k(x)^{-1} (A_k x)`.
pub fn scnr(x: &[C64], target: &TargetSpec, cfg: &SystemConfig) -> f64 {
    let ax = SteeringMatrix::new(target.angle, cfg).apply(x);
    let r = InterferenceCovariance::new(target, x, cfg);
    dot(&ax, &r.solve(&ax)).re.max(0.0)
}

pub fn min_scnr(x: &[C64], targets: &[TargetSpec], cfg: &SystemConfig) -> f64 {
    targets
        .iter()
        .map(|t| scnr(x, t, cfg))
        .fold(f64::INFINITY, f64::min)
}

/// `P_D = Q(Q^{-1}(p_fa) - sqrt(gamma))`.
pub fn detection_probability(scnr: f64, p_fa: f64) -> f64 {
    assert!(
        p_fa > 0.0 && p_fa < 1.0,
        "false-alarm probability must lie in (0, 1)"
    );
    assert!(scnr >= 0.0, "SCNR must be nonnegative");
    q_func(q_inv(p_fa) - scnr.sqrt())
}

/// `beta = Re{h^H x s*} - |Im{h^H x s*}| cot(pi/M)`.
pub fn psk_safety_margin(x_slot: &[C64], h: &[C64], symbol: C64, m: usize) -> f64 {
    let z = dot(h, x_slot) * symbol.conj();
    z.re - z.im.abs() / (PI / m as f64).tan()
}

/// Clipped bound `min(1, 2 Q(beta sqrt(2) sin(pi/M) / sigma))`.
pub fn psk_sep_bound(margin: f64, sigma: f64, m: usize) -> f64 {
    assert!(sigma > 0.0, "noise standard deviation must be positive");
    (2.0 * q_func(margin * SQRT_2 * (PI / m as f64).sin() / sigma)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeampatternMode {
    /// `(1/L) sum_l |a_t(theta)^H x_l|^2`.
    TxPower,
    /// SCNR of a unit-RCS probe target at `theta` against the scene clutter.
    EchoScnr,
}

pub fn beampattern(
    x: &[C64],
    angles: &[f64],
    cfg: &SystemConfig,
    mode: BeampatternMode,
    scene: &Scene,
) -> Vec<(f64, f64)> {
    assert!(!angles.is_empty(), "beampattern grid is empty");
    let clutter: Vec<Clutter> = scene
        .targets
        .iter()
        .flat_map(|t| t.clutter.iter().copied())
        .collect();
    angles
        .iter()
        .map(|&th| {
            let v = match mode {
                BeampatternMode::TxPower => {
                    let a = steering_vector(th, cfg.n_tx, cfg.spacing_ratio);
                    x.chunks(cfg.n_tx)
                        .map(|xl| dot(&a.0, xl).norm_sqr())
                        .sum::<f64>()
                        / cfg.frame_len as f64
                }
                BeampatternMode::EchoScnr => {
                    let probe = TargetSpec {
                        angle: th,
                        rcs_power: 1.0,
                        clutter: clutter.clone(),
                    };
                    scnr(x, &probe, cfg)
                }
            };
            (th, v)
        })
        .collect()
}

/// Symmetric square box `[-half_width, half_width]^2` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBox {
    pub half_width: f64,
}

impl SupportBox {
    /// Box covering the 99.5th percentile of the pooled per-axis magnitudes.
    pub fn pooled(a: &[C64], b: &[C64]) -> Self {
        let mut mags: Vec<f64> = a
            .iter()
            .chain(b)
            .map(|z| z.re.abs().max(z.im.abs()))
            .collect();
        mags.sort_by(|p, q| p.total_cmp(q));
        let idx = ((mags.len() as f64) * 0.995).ceil() as usize;
        let hw = mags[idx.clamp(1, mags.len()) - 1];
        Self { half_width: hw }
    }
}

pub const JSD_BINS: usize = 32;

fn cell_counts(samples: &[C64], bins: usize, support: SupportBox) -> Vec<f64> {
    let hw = support.half_width;
    let cell = |v: f64| -> usize {
        let t = ((v + hw) / (2.0 * hw) * bins as f64).floor();
        // out-of-box samples land in the edge cells
        t.clamp(0.0, (bins - 1) as f64) as usize
    };
    let mut h = vec![0.0; bins * bins];
    for z in samples {
        h[cell(z.re) * bins + cell(z.im)] += 1.0;
    }
    h
}

/// Add-one-half smoothing over the cells occupied by the pooled sample.
fn smoothed(counts: &[f64], occupied: &[bool]) -> Vec<f64> {
    let mut h: Vec<f64> = counts
        .iter()
        .zip(occupied)
        .map(|(&c, &o)| if o { c + 0.5 } else { 0.0 })
        .collect();
    let total: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= total);
    h
}

/// Histogram Jensen-Shannon divergence in nats, in `[0, ln 2]`.
pub fn js_divergence(a: &[C64], b: &[C64], bins: usize, support: SupportBox) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "sample sets must be non-empty".into(),
        ));
    }
    if bins == 0 || !(support.half_width > 0.0) || !support.half_width.is_finite() {
        return Err(Error::InvalidArgument(
            "degenerate histogram support".into(),
        ));
    }
    let ca = cell_counts(a, bins, support);
    let cb = cell_counts(b, bins, support);
    let occupied: Vec<bool> = ca.iter().zip(&cb).map(|(x, y)| x + y > 0.0).collect();
    let p = smoothed(&ca, &occupied);
    let q = smoothed(&cb, &occupied);
    let mut js = 0.0;
    for (&pi, &qi) in p.iter().zip(&q) {
        if pi + qi == 0.0 {
            continue;
        }
        let m = 0.5 * (pi + qi);
        js += 0.5 * (pi * (pi / m).ln() + qi * (qi / m).ln());
    }
    Ok(js.clamp(0.0, LN_2))
}

/// Default estimator: 32x32 bins over the pooled 99.5% box.
pub fn js_divergence_default(a: &[C64], b: &[C64]) -> Result<f64> {
    let support = SupportBox::pooled(a, b);
    js_divergence(a, b, JSD_BINS, support)
}

/// `(1/L) sum_l |a_t(theta_k)^H x_l - d_k u_{k,l}|^2`.
pub fn noise_shaping_residual(
    x: &[C64],
    target: &TargetSpec,
    cfg: &SystemConfig,
    k: usize,
    d_k: C64,
    aux: &NoiseShapingAux,
) -> f64 {
    let a = steering_vector(target.angle, cfg.n_tx, cfg.spacing_ratio);
    let u = &aux.reference[k];
    assert_eq!(u.len(), cfg.frame_len, "reference length");
    x.chunks(cfg.n_tx)
        .zip(u)
        .map(|(xl, ul)| (dot(&a.0, xl) - d_k * ul).norm_sqr())
        .sum::<f64>()
        / cfg.frame_len as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{complex_gaussian, UserChannelSet};
    use crate::linalg::to_dvector;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(nt: usize, nr: usize, l: usize, power: f64) -> SystemConfig {
        SystemConfig {
            n_tx: nt,
            n_rx: nr,
            frame_len: l,
            power,
            spacing_ratio: 0.5,
            rx_noise_power: 0.7,
            user_noise_powers: vec![],
        }
    }

    fn gvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n).map(|_| complex_gaussian(rng)).collect()
    }

    fn dense_scnr(x: &[C64], t: &TargetSpec, c: &SystemConfig) -> f64 {
        let n = c.n_rx * c.frame_len;
        let mut r = DMatrix::<C64>::identity(n, n) * C64::new(c.rx_noise_power, 0.0);
        for cl in &t.clutter {
            let v = SteeringMatrix::new(cl.angle, c).to_dense() * to_dvector(x);
            r += (&v * v.adjoint()) * C64::new(cl.power, 0.0);
        }
        r /= C64::new(t.rcs_power, 0.0);
        let ax = SteeringMatrix::new(t.angle, c).to_dense() * to_dvector(x);
        let y = r.lu().solve(&ax).unwrap();
        ax.dotc(&y).re
    }

    #[test]
    fn aligned_waveform_scnr_without_clutter() {
        let c = cfg(5, 4, 3, 6.0);
        let t = TargetSpec {
            angle: 0.25,
            rcs_power: 1.3,
            clutter: vec![],
        };
        let a = c.tx_steering(t.angle);
        let s = (c.power / c.frame_len as f64).sqrt();
        let x: Vec<C64> = (0..3)
            .flat_map(|_| a.0.iter().map(|z| z * s).collect::<Vec<_>>())
            .collect();
        let want = c.power * t.rcs_power / c.rx_noise_power;
        assert!((scnr(&x, &t, &c) - want).abs() < 1e-10 * want);
        assert!((dense_scnr(&x, &t, &c) - want).abs() < 1e-10 * want);
        assert_eq!(scnr(&vec![C64::new(0.0, 0.0); 15], &t, &c), 0.0);
    }

    #[test]
    fn scnr_matches_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let c = cfg(3, 3, 2, 1.0);
            let t = TargetSpec {
                angle: rng.gen_range(-1.0..1.0),
                rcs_power: rng.gen_range(0.5..2.0),
                clutter: vec![Clutter {
                    angle: rng.gen_range(-1.5..1.5),
                    power: rng.gen_range(0.5..5.0),
                }],
            };
            let x = gvec(&mut rng, 6);
            let (got, want) = (scnr(&x, &t, &c), dense_scnr(&x, &t, &c));
            assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn scnr_phase_invariance_and_clutter_penalty() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let c = cfg(4, 3, 3, 1.0);
            let t = TargetSpec {
                angle: rng.gen_range(-1.0..1.0),
                rcs_power: 1.0,
                clutter: (0..2)
                    .map(|_| Clutter {
                        angle: rng.gen_range(-1.5..1.5),
                        power: rng.gen_range(0.1..3.0),
                    })
                    .collect(),
            };
            let x = gvec(&mut rng, 12);
            let g = scnr(&x, &t, &c);
            let ph = C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
            let xr: Vec<C64> = x.iter().map(|z| z * ph).collect();
            assert!((scnr(&xr, &t, &c) - g).abs() <= 1e-10 * g.max(1.0));
            let clean = TargetSpec {
                clutter: vec![],
                ..t.clone()
            };
            assert!(g <= scnr(&x, &clean, &c) + 1e-10);
        }
    }

    #[test]
    fn detection_probability_edges_and_monotonicity() {
        assert!((detection_probability(0.0, 1e-3) - 1e-3).abs() < 1e-14);
        for g in [0.5, 2.0, 9.0] {
            assert!((detection_probability(g, 0.5) - q_func(-g.sqrt())).abs() < 1e-15);
        }
        let mut prev = 0.0;
        for i in 0..200 {
            let p = detection_probability(i as f64 * 0.25, 1e-4);
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn safety_margin_examples() {
        let h = [C64::new(1.0, 0.0)];
        assert!(
            (psk_safety_margin(&[C64::new(1.0, 0.0)], &h, C64::new(1.0, 0.0), 4) - 1.0).abs()
                < 1e-15
        );
        assert!(
            (psk_safety_margin(&[C64::new(0.0, 1.0)], &h, C64::new(1.0, 0.0), 4) + 1.0).abs()
                < 1e-12
        );
    }

    #[test]
    fn safety_margin_is_min_of_rotated_halfspaces() {
        // beta sin(pi/M) = min(Re{h^H x s~}, Re{h^H x s^-}) with the rotated symbols
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let m = [2usize, 4, 8, 16][rng.gen_range(0..4)];
            let h = gvec(&mut rng, 3);
            let x = gvec(&mut rng, 3);
            let s = C64::from_polar(1.0, 2.0 * PI * rng.gen_range(0..m) as f64 / m as f64);
            let (sn, cs) = ((PI / m as f64).sin(), (PI / m as f64).cos());
            let st = s.conj() * C64::new(sn, cs);
            let sb = s.conj() * C64::new(sn, -cs);
            let hx = dot(&h, &x);
            let brute = (hx * st).re.min((hx * sb).re);
            assert!(
                (psk_safety_margin(&x, &h, s, m) * sn - brute).abs() < 1e-10 * (1.0 + brute.abs())
            );
        }
    }

    #[test]
    fn sep_bound_behaviour() {
        assert_eq!(psk_sep_bound(0.0, 1.0, 4), 1.0);
        assert_eq!(psk_sep_bound(-3.0, 1.0, 4), 1.0);
        assert!(psk_sep_bound(1e3, 1.0, 4) < 1e-300);
        for &(eps, sig, m) in &[(1e-2, 1.0, 4usize), (1e-3, 0.5, 8), (0.2, 2.0, 2)] {
            let beta = sig / (SQRT_2 * (PI / m as f64).sin()) * q_inv(eps / 2.0);
            assert!((psk_sep_bound(beta, sig, m) - eps).abs() < 1e-10 * eps.max(1e-3));
        }
        let mut prev = 1.0;
        for i in 0..100 {
            let v = psk_sep_bound(i as f64 * 0.05, 1.0, 4);
            assert!(v <= prev);
            prev = v;
        }
        let mut prev = 1.0;
        for i in 1..100 {
            let v = psk_sep_bound(0.8, 5.0 / i as f64, 4);
            assert!(v <= prev);
            prev = v;
        }
    }

    fn empty_scene() -> Scene {
        Scene {
            targets: vec![],
            channels: UserChannelSet::from_vectors(vec![]),
        }
    }

    #[test]
    fn beampattern_peak_and_echo() {
        let c = cfg(6, 6, 4, 8.0);
        let a = c.tx_steering(0.2);
        let s = (c.power / 4.0).sqrt();
        let x: Vec<C64> = (0..4)
            .flat_map(|_| a.0.iter().map(|z| z * s).collect::<Vec<_>>())
            .collect();
        let bp = beampattern(&x, &[0.2], &c, BeampatternMode::TxPower, &empty_scene());
        assert!((bp[0].1 - 2.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xr = gvec(&mut rng, 24);
        for th in [-0.9, 0.0, 0.4] {
            let echo = beampattern(&xr, &[th], &c, BeampatternMode::EchoScnr, &empty_scene())[0].1;
            let at = c.tx_steering(th);
            let want: f64 = xr
                .chunks(6)
                .map(|xl| dot(&at.0, xl).norm_sqr())
                .sum::<f64>()
                / c.rx_noise_power;
            assert!((echo - want).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn isotropic_tx_power_average() {
        let c = cfg(4, 1, 3, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (mut acc, mut energy) = (0.0, 0.0);
        for _ in 0..20_000 {
            let x = gvec(&mut rng, 12);
            energy += norm_sqr(&x);
            acc += beampattern(&x, &[0.6], &c, BeampatternMode::TxPower, &empty_scene())[0].1;
        }
        let want = energy / (3.0 * 4.0);
        assert!((acc - want).abs() < 0.03 * want);
    }

    #[test]
    fn jsd_identity_symmetry_and_disjointness() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = gvec(&mut rng, 10_000);
        let b: Vec<C64> = gvec(&mut rng, 10_000).iter().map(|z| z * 2.0).collect();
        assert!(js_divergence_default(&a, &a).unwrap().abs() < 1e-12);
        let ab = js_divergence_default(&a, &b).unwrap();
        let ba = js_divergence_default(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12 && ab > 0.0 && ab <= LN_2);
        let left = vec![C64::new(-0.9, -0.9); 10_000];
        let right = vec![C64::new(0.9, 0.9); 10_000];
        let js = js_divergence(&left, &right, 32, SupportBox { half_width: 1.0 }).unwrap();
        assert!(js < LN_2 && LN_2 - js < 0.01, "{js}");
        assert!(js_divergence(&a, &[], 32, SupportBox { half_width: 1.0 }).is_err());
        assert!(js_divergence(&a, &a, 32, SupportBox { half_width: 0.0 }).is_err());
    }

    #[test]
    fn noise_shaping_residual_examples() {
        let c = cfg(3, 1, 4, 1.0);
        let t = TargetSpec {
            angle: -0.3,
            rcs_power: 1.0,
            clutter: vec![],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let u = gvec(&mut rng, 4);
        let aux = NoiseShapingAux::new(vec![u.clone()], 0.1);
        let d = C64::new(0.4, -1.1);
        let a = c.tx_steering(t.angle);
        let x: Vec<C64> = u
            .iter()
            .flat_map(|ul| a.0.iter().map(move |z| z * d * ul))
            .collect();
        assert!(noise_shaping_residual(&x, &t, &c, 0, d, &aux) < 1e-24);
        assert_eq!(
            noise_shaping_residual(
                &[C64::new(0.0, 0.0); 12],
                &t,
                &c,
                0,
                C64::new(0.0, 0.0),
                &aux
            ),
            0.0
        );
        let xr = gvec(&mut rng, 12);
        let mut want = 0.0;
        for l in 0..4 {
            let mut g = C64::new(0.0, 0.0);
            for i in 0..3 {
                g += a.0[i].conj() * xr[3 * l + i];
            }
            want += (g - d * u[l]).norm_sqr();
        }
        want /= 4.0;
        assert!(
            (noise_shaping_residual(&xr, &t, &c, 0, d, &aux) - want).abs() < 1e-12 * want.max(1.0)
        );
    }
}
