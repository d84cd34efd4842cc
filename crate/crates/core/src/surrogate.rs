//! Concave quadratic minorizer of the SCNR.
//!
//! With `t = R(x̄)^{-1} A_k x̄`, joint convexity of `(y, R) -> y^H R^{-1} y`
//! gives `phi(x) >= 2 Re{t^H A_k x} - t^H R(x) t`, tight at `x̄`. Expanding
//! `R(x)` yields `-x^H M x + 2 Re{m^H x} + kappa` with
//! `M = sum_c w_c w_c^H`, `w_c = (sigma_c / sigma_k) A_c^H t`.

use crate::array::{InterferenceCovariance, SteeringMatrix, SystemConfig, TargetSpec};
use crate::linalg::{dot, norm_sqr, C64};
use crate::sets::RadarSurrogateSet;

#[derive(Debug, Clone)]
pub struct SurrogateData {
    pub mbar: Vec<C64>,
    /// Columns `w_c` of the PSD curvature `M = sum_c w_c w_c^H`.
    pub factors: Vec<Vec<C64>>,
    /// Isotropic curvature added by a proximal term; zero for the plain minorizer.
    pub shift: f64,
    pub kappa: f64,
    /// `phi(x̄)`, the SCNR at the expansion point.
    pub phi_at_center: f64,
}

impl SurrogateData {
    pub fn value(&self, x: &[C64]) -> f64 {
        let quad: f64 = self.factors.iter().map(|w| dot(w, x).norm_sqr()).sum();
        -quad - self.shift * norm_sqr(x) + 2.0 * dot(&self.mbar, x).re + self.kappa
    }

    pub fn to_set(&self, label: String, scale: f64) -> RadarSurrogateSet {
        RadarSurrogateSet::new(
            label,
            self.mbar.clone(),
            &self.factors,
            self.shift,
            self.kappa,
            scale,
        )
    }

    /// Subtracts `c ‖x - x̄‖^2`. The result is still a minorizer tangent at
    /// `x̄`, now strongly concave, so every accepted MM step gains at least
    /// `c ‖x^{t+1} - x^t‖^2`.
    pub fn with_proximal(mut self, c: f64, x_bar: &[C64]) -> Self {
        assert!(c >= 0.0, "proximal weight must be nonnegative");
        for (m, x) in self.mbar.iter_mut().zip(x_bar) {
            *m += x * c;
        }
        self.kappa -= c * norm_sqr(x_bar);
        self.shift += c;
        self
    }
}

pub fn build_surrogate(x_bar: &[C64], target: &TargetSpec, cfg: &SystemConfig) -> SurrogateData {
    let a = SteeringMatrix::new(target.angle, cfg);
    let ax = a.apply(x_bar);
    let r = InterferenceCovariance::new(target, x_bar, cfg);
    let t = r.solve(&ax);
    let mbar = a.apply_adjoint(&t);
    let ratio = 1.0 / target.rcs_power.sqrt();
    let factors = target
        .clutter
        .iter()
        .map(|c| {
            let mut w = SteeringMatrix::new(c.angle, cfg).apply_adjoint(&t);
            let s = c.power.sqrt() * ratio;
            w.iter_mut().for_each(|z| *z *= s);
            w
        })
        .collect();
    let kappa = -cfg.rx_noise_power * norm_sqr(&t) / target.rcs_power;
    SurrogateData {
        mbar,
        factors,
        shift: 0.0,
        kappa,
        phi_at_center: dot(&ax, &t).re,
    }
}
