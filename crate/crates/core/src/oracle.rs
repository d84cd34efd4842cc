//! Slow, generic reference solvers for validating the closed-form projections.
//!
//! Everything here works in dense real coordinates and shares no code with
//! [`crate::sets`] beyond the point type. Used by the test suites and by the
//! `oracle` CLI command.

use crate::linalg::C64;
use crate::pda::{DecisionPoint, ProjectionSet};
use crate::sets::AxisBounds;
use nalgebra::{DMatrix, DVector};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Real embedding `[Re x, Im x, Re d, Im d, xi, aux]`.
pub fn to_real(p: &DecisionPoint) -> DVector<f64> {
    let mut v = Vec::with_capacity(2 * p.x.len() + 2 * p.d.len() + 1 + p.aux.len());
    v.extend(p.x.iter().map(|z| z.re));
    v.extend(p.x.iter().map(|z| z.im));
    v.extend(p.d.iter().map(|z| z.re));
    v.extend(p.d.iter().map(|z| z.im));
    v.push(p.xi);
    v.extend(p.aux.iter().copied());
    DVector::from_vec(v)
}

pub fn from_real(v: &DVector<f64>, shape: &DecisionPoint) -> DecisionPoint {
    let (n, m) = (shape.x.len(), shape.d.len());
    let x = (0..n).map(|i| C64::new(v[i], v[n + i])).collect();
    let d = (0..m)
        .map(|i| C64::new(v[2 * n + i], v[2 * n + m + i]))
        .collect();
    let xi = v[2 * n + 2 * m];
    let aux = (0..shape.aux.len())
        .map(|i| v[2 * n + 2 * m + 1 + i])
        .collect();
    DecisionPoint::new(x, d, xi, aux)
}

/// Index helpers for the real embedding.
#[derive(Debug, Clone, Copy)]
pub struct RealIndex {
    pub n_x: usize,
    pub n_d: usize,
    pub n_aux: usize,
}

impl RealIndex {
    pub fn of(p: &DecisionPoint) -> Self {
        Self {
            n_x: p.x.len(),
            n_d: p.d.len(),
            n_aux: p.aux.len(),
        }
    }
    pub fn dim(&self) -> usize {
        2 * self.n_x + 2 * self.n_d + 1 + self.n_aux
    }
    pub fn x_re(&self, i: usize) -> usize {
        i
    }
    pub fn x_im(&self, i: usize) -> usize {
        self.n_x + i
    }
    pub fn d_re(&self, k: usize) -> usize {
        2 * self.n_x + k
    }
    pub fn d_im(&self, k: usize) -> usize {
        2 * self.n_x + self.n_d + k
    }
    pub fn xi(&self) -> usize {
        2 * self.n_x + 2 * self.n_d
    }
    pub fn aux(&self, i: usize) -> usize {
        self.xi() + 1 + i
    }
}

/// `g(z) = z^T Q z + 2 b^T z + c <= 0` with `Q` symmetric PSD.
#[derive(Debug, Clone)]
pub struct RealQuadratic {
    pub q: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl RealQuadratic {
    pub fn zero(dim: usize) -> Self {
        Self {
            q: DMatrix::zeros(dim, dim),
            b: DVector::zeros(dim),
            c: 0.0,
        }
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        z.dot(&(&self.q * z)) + 2.0 * self.b.dot(z) + self.c
    }

    /// Adds `|w^H v|^2` where `v` is a complex linear image of `z`, described
    /// by its real and imaginary coefficient rows.
    pub fn add_abs_sqr(&mut self, re_row: &DVector<f64>, im_row: &DVector<f64>, weight: f64) {
        self.q += (re_row * re_row.transpose() + im_row * im_row.transpose()) * weight;
    }

    /// Real and imaginary coefficient rows of `z -> w^H x` over the x block
    /// starting at complex offset `off`.
    pub fn inner_rows(idx: &RealIndex, w: &[C64], off: usize) -> (DVector<f64>, DVector<f64>) {
        let mut re = DVector::zeros(idx.dim());
        let mut im = DVector::zeros(idx.dim());
        for (i, wi) in w.iter().enumerate() {
            // conj(w)(xr + j xi) = (wr xr + wi xi) + j(wr xi - wi xr)
            re[idx.x_re(off + i)] += wi.re;
            re[idx.x_im(off + i)] += wi.im;
            im[idx.x_im(off + i)] += wi.re;
            im[idx.x_re(off + i)] -= wi.im;
        }
        (re, im)
    }
}

/// Maximizes a concave function on `[lo, hi]` by golden-section search.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let mut a = hi - GOLDEN * (hi - lo);
    let mut b = lo + GOLDEN * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..iters {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + GOLDEN * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - GOLDEN * (hi - lo);
            fa = f(a);
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Projection onto one convex quadratic constraint by maximizing the
/// concave Lagrange dual `q(lam) = min_z ‖z - z0‖^2 + lam g(z)`.
pub fn project_quadratic(z0: &DVector<f64>, g: &RealQuadratic) -> DVector<f64> {
    if g.value(z0) <= 0.0 {
        return z0.clone();
    }
    let n = z0.len();
    let primal = |lam: f64| -> DVector<f64> {
        let m = DMatrix::<f64>::identity(n, n) + &g.q * lam;
        let rhs = z0 - &g.b * lam;
        m.lu().solve(&rhs).expect("I + lam Q is nonsingular")
    };
    let dual = |lam: f64| -> f64 {
        let z = primal(lam);
        (&z - z0).norm_squared() + lam * g.value(&z)
    };
    let mut hi = 1.0;
    while g.value(&primal(hi)) > 0.0 {
        hi *= 2.0;
        assert!(hi < 1e300, "constraint cannot be satisfied");
    }
    let lam = golden_max(dual, 0.0, hi, 400);
    // the dual is flat near its peak; settle the last digits on the
    // complementary-slackness equation g(z(lam)) = 0
    let (mut lo, mut up) = (lam * (1.0 - 1e-6), lam * (1.0 + 1e-6) + 1e-300);
    if g.value(&primal(lo)) > 0.0 && g.value(&primal(up)) <= 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if mid <= lo || mid >= up {
                break;
            }
            if g.value(&primal(mid)) > 0.0 {
                lo = mid;
            } else {
                up = mid;
            }
        }
        return primal(up);
    }
    primal(lam)
}

/// SOC projection by a one-dimensional search over the new radius.
pub fn project_soc_search(v: &[C64], r: f64) -> (Vec<C64>, f64) {
    let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nv <= r {
        return (v.to_vec(), r);
    }
    // for radius t >= 0 the best v is the radial clip of v to length t
    let cost = |t: f64| -> f64 { -((t - r).powi(2) + (nv - t).max(0.0).powi(2)) };
    let hi = nv.max(r.abs()) + 1.0;
    let t = golden_max(cost, 0.0, hi, 400);
    let s = if nv > 0.0 { t.min(nv) / nv } else { 0.0 };
    (v.iter().map(|z| z * s).collect(), t)
}

fn axis_cost(v_bar: &[f64], tau_bar: f64, bounds: &[AxisBounds], tau: f64) -> (f64, Vec<f64>) {
    let mut cost = (tau - tau_bar).powi(2);
    let mut v = Vec::with_capacity(v_bar.len());
    for (&vb, b) in v_bar.iter().zip(bounds) {
        let lo = b.a.map_or(f64::NEG_INFINITY, |a| (b.level - 1.0) * tau + a);
        let hi = b.c.map_or(f64::INFINITY, |c| (b.level + 1.0) * tau - c);
        let w = vb.max(lo).min(hi);
        cost += (w - vb).powi(2);
        v.push(w);
    }
    (cost, v)
}

fn axis_tau_floor(bounds: &[AxisBounds]) -> f64 {
    bounds
        .iter()
        .filter_map(|b| Some(0.5 * (b.a? + b.c?)))
        .fold(0.0, f64::max)
}

/// QAM axis projection by golden-section search over `tau`.
pub fn project_axis_search(v_bar: &[f64], tau_bar: f64, bounds: &[AxisBounds]) -> (Vec<f64>, f64) {
    let floor = axis_tau_floor(bounds);
    let scale: f64 = v_bar.iter().map(|v| v.abs()).fold(tau_bar.abs(), f64::max);
    let hi = floor + 10.0 * (scale + 1.0);
    let tau = golden_max(|t| -axis_cost(v_bar, tau_bar, bounds, t).0, floor, hi, 400);
    let (_, v) = axis_cost(v_bar, tau_bar, bounds, tau);
    (v, tau)
}

/// Scalar QAM projection by brute force over a `(v, tau)` grid.
pub fn project_axis_grid(
    v_bar: f64,
    tau_bar: f64,
    bound: &AxisBounds,
    half_width: f64,
    step: f64,
) -> (f64, f64) {
    let n = (2.0 * half_width / step).round() as i64;
    let mut best = (f64::INFINITY, v_bar, tau_bar);
    for i in 0..=n {
        let tau = tau_bar - half_width + i as f64 * step;
        if tau < 0.0 {
            continue;
        }
        for j in 0..=n {
            let v = v_bar - half_width + j as f64 * step;
            if bound.slack(v, tau) < 0.0 {
                continue;
            }
            let f = (v - v_bar).powi(2) + (tau - tau_bar).powi(2);
            if f < best.0 {
                best = (f, v, tau);
            }
        }
    }
    (best.1, best.2)
}

/// Like [`project_axis_grid`] but the grid is centred on `centre` while the
/// distance is still measured from `(v_bar, tau_bar)`.
pub fn project_axis_grid_toward(
    v_bar: f64,
    tau_bar: f64,
    bound: &AxisBounds,
    centre: (f64, f64),
    half_width: f64,
    step: f64,
) -> (f64, f64) {
    let n = (2.0 * half_width / step).round() as i64;
    let mut best = (f64::INFINITY, centre.0, centre.1);
    for i in 0..=n {
        let tau = centre.1 - half_width + i as f64 * step;
        if tau < 0.0 {
            continue;
        }
        for j in 0..=n {
            let v = centre.0 - half_width + j as f64 * step;
            if bound.slack(v, tau) < 0.0 {
                continue;
            }
            let f = (v - v_bar).powi(2) + (tau - tau_bar).powi(2);
            if f < best.0 {
                best = (f, v, tau);
            }
        }
    }
    (best.1, best.2)
}

/// Coupling projection `min ‖x - x0‖^2 + ‖u - u0‖^2, u = H x` as a dense
/// least-squares problem `min ‖[I; H] x - [x0; u0]‖`.
pub fn project_coupling_lstsq(h: &DMatrix<C64>, x0: &[C64], u0: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let (k, n) = (h.nrows(), h.ncols());
    let mut a = DMatrix::<C64>::zeros(n + k, n);
    for i in 0..n {
        a[(i, i)] = C64::new(1.0, 0.0);
    }
    for r in 0..k {
        for c in 0..n {
            a[(n + r, c)] = h[(r, c)];
        }
    }
    let rhs = DVector::from_iterator(n + k, x0.iter().chain(u0).copied());
    let svd = a.svd(true, true);
    let x = svd.solve(&rhs, 1e-14).expect("svd solve");
    let u = h * &x;
    (x.iter().copied().collect(), u.iter().copied().collect())
}

/// Projection onto the intersection of convex sets by Dykstra's method.
pub fn dykstra(
    p: &DecisionPoint,
    sets: &[&dyn ProjectionSet],
    sweeps: usize,
    tol: f64,
) -> DecisionPoint {
    let mut y = p.clone();
    let mut incr: Vec<DecisionPoint> = sets.iter().map(|_| p.zeros_like()).collect();
    for _ in 0..sweeps {
        let start = y.clone();
        for (s, inc) in sets.iter().zip(incr.iter_mut()) {
            let mut z = y.clone();
            z.axpy(1.0, inc);
            let proj = s.project(&z).expect("projection");
            let mut new_inc = z;
            new_inc.axpy(-1.0, &proj);
            *inc = new_inc;
            y = proj;
        }
        if y.distance_sqr(&start).sqrt() <= tol {
            break;
        }
    }
    y
}

/// Maximizes the concave `phi(x) = -x^H M x + 2 Re{m^H x}` over the
/// intersection of `sets` by accelerated projected gradient, with each
/// projection computed by Dykstra's method.
pub fn projected_gradient_max(
    start: &DecisionPoint,
    m_quad: &DMatrix<C64>,
    m_lin: &[C64],
    sets: &[&dyn ProjectionSet],
    iters: usize,
) -> DecisionPoint {
    let lip = 2.0 * m_quad.norm().max(1e-3);
    let step = 1.0 / lip;
    let grad = |x: &[C64]| -> Vec<C64> {
        let xv = DVector::from_column_slice(x);
        let mx = m_quad * xv;
        m_lin
            .iter()
            .zip(mx.iter())
            .map(|(a, b)| (a - b) * 2.0)
            .collect()
    };
    let mut x = dykstra(start, sets, 20_000, 1e-13);
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    for _ in 0..iters {
        let g = grad(&y.x);
        let mut z = y.clone();
        for (zi, gi) in z.x.iter_mut().zip(&g) {
            *zi += gi * step;
        }
        let x_new = dykstra(&z, sets, 20_000, 1e-13);
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mut y_new = x_new.clone();
        let mut diff = x_new.clone();
        diff.axpy(-1.0, &x);
        y_new.axpy((t - 1.0) / t_new, &diff);
        x = x_new;
        y = y_new;
        t = t_new;
    }
    x
}


/// Randomized comparison of every closed-form projection family against the
/// reference solvers above.
pub mod suite {
    use super::*;
    use crate::array::complex_gaussian;
    use crate::rng::{SeedStreams, Stream};
    use crate::sets::{
        project_axis, soc_scale, AuxLayout, ChannelCouplingSet, CouplingFactor, NoiseShapingSet,
        PowerBall, RadarSurrogateSet, RobustSepHalfspace, SepHalfspace,
    };
    use rand::Rng;
    use rand_chacha::ChaCha12Rng;
    use serde::Serialize;
    use std::sync::Arc;

    #[derive(Debug, Clone, Serialize)]
    pub struct FamilyReport {
        pub family: String,
        pub instances: usize,
        pub max_error: f64,
        pub tolerance: f64,
        pub idempotence_error: f64,
        pub passed: bool,
    }

    fn gvec(rng: &mut ChaCha12Rng, n: usize) -> Vec<C64> {
        (0..n).map(|_| complex_gaussian(rng)).collect()
    }

    fn random_point(
        rng: &mut ChaCha12Rng,
        nx: usize,
        nd: usize,
        naux: usize,
        spread: f64,
    ) -> DecisionPoint {
        DecisionPoint::new(
            gvec(rng, nx).into_iter().map(|z| z * spread).collect(),
            gvec(rng, nd).into_iter().map(|z| z * spread).collect(),
            rng.gen_range(-spread..spread),
            (0..naux).map(|_| rng.gen_range(-spread..spread)).collect(),
        )
    }

    struct Tally {
        family: &'static str,
        tolerance: f64,
        count: usize,
        max_error: f64,
        idem: f64,
    }

    impl Tally {
        fn new(family: &'static str, tolerance: f64) -> Self {
            Self {
                family,
                tolerance,
                count: 0,
                max_error: 0.0,
                idem: 0.0,
            }
        }
        fn record(&mut self, err: f64) {
            self.count += 1;
            self.max_error = self
                .max_error
                .max(if err.is_nan() { f64::INFINITY } else { err });
        }
        fn record_set(
            &mut self,
            set: &dyn ProjectionSet,
            p: &DecisionPoint,
            oracle: &DecisionPoint,
        ) {
            let got = set.project(p).expect("projection");
            self.record(got.distance_sqr(oracle).sqrt());
            let again = set.project(&got).expect("projection");
            self.idem = self.idem.max(again.distance_sqr(&got).sqrt());
        }
        fn finish(self) -> FamilyReport {
            FamilyReport {
                family: self.family.into(),
                instances: self.count,
                max_error: self.max_error,
                tolerance: self.tolerance,
                idempotence_error: self.idem,
                passed: self.max_error <= self.tolerance && self.idem <= 1e-9,
            }
        }
    }

    fn dense(p: &DecisionPoint, g: &RealQuadratic) -> DecisionPoint {
        from_real(&project_quadratic(&to_real(p), g), p)
    }

    pub fn radar_surrogate(rng: &mut ChaCha12Rng, instances: usize) -> FamilyReport {
        let mut t = Tally::new("radar-surrogate", 1e-6);
        for i in 0..instances {
            let nx = 6;
            let rank = i % 4;
            let factors: Vec<Vec<C64>> = (0..rank).map(|_| gvec(rng, nx)).collect();
            let mbar = gvec(rng, nx);
            let kappa = -rng.gen_range(0.0..2.0);
            let scale = rng.gen_range(0.5..4.0);
            let shift = if i % 2 == 0 {
                0.0
            } else {
                rng.gen_range(0.0..1.5)
            };
            let set =
                RadarSurrogateSet::new("radar".into(), mbar.clone(), &factors, shift, kappa, scale);
            let mut p = random_point(rng, nx, 1, 0, 1.5);
            p.xi -= 3.0;
            let idx = RealIndex::of(&p);
            let mut g = RealQuadratic::zero(idx.dim());
            for w in &factors {
                let (re, im) = RealQuadratic::inner_rows(&idx, w, 0);
                g.add_abs_sqr(&re, &im, 1.0 / scale);
            }
            for j in 0..nx {
                let mut e = vec![C64::new(0.0, 0.0); nx];
                e[j] = C64::new(1.0, 0.0);
                let (re, im) = RealQuadratic::inner_rows(&idx, &e, 0);
                g.add_abs_sqr(&re, &im, shift / scale);
            }
            let (mre, _) = RealQuadratic::inner_rows(&idx, &mbar, 0);
            g.b = -mre / scale;
            g.b[idx.xi()] = -0.5;
            g.c = -kappa / scale;
            t.record_set(&set, &p, &dense(&p, &g));
        }
        t.finish()
    }

    pub fn sep_halfspace(rng: &mut ChaCha12Rng, instances: usize) -> FamilyReport {
        let mut t = Tally::new("sep-halfspace", 1e-6);
        for _ in 0..instances {
            let (n, l) = (4, 3);
            let slot = rng.gen_range(0..l);
            let h = gvec(rng, n);
            let mu = rng.gen_range(0.1..3.0);
            let set = SepHalfspace::new(slot, h.clone(), mu, "sep".into()).unwrap();
            let p = random_point(rng, n * l, 1, 0, 1.0);
            let idx = RealIndex::of(&p);
            let mut g = RealQuadratic::zero(idx.dim());
            let (re, _) = RealQuadratic::inner_rows(&idx, &h, slot * n);
            g.b = -re / 2.0;
            g.c = mu;
            t.record_set(&set, &p, &dense(&p, &g));
        }
        t.finish()
    }

    pub fn noise_shaping(rng: &mut ChaCha12Rng, instances: usize) -> FamilyReport {
        let mut t = Tally::new("noise-shaping", 1e-6);
        for _ in 0..instances {
            let (n, l, kt) = (3, 4, 2);
            let k = rng.gen_range(0..kt);
            let a = crate::array::steering_vector(rng.gen_range(-1.4..1.4), n, 0.5).0;
            let u = gvec(rng, l);
            let delta = rng.gen_range(0.05..0.5);
            let set = NoiseShapingSet::new(k, a.clone(), u.clone(), delta, "ns".into()).unwrap();
            let p = random_point(rng, n * l, kt, 0, 1.5);
            let idx = RealIndex::of(&p);
            let mut g = RealQuadratic::zero(idx.dim());
            for (ll, ul) in u.iter().enumerate() {
                let (mut re, mut im) = RealQuadratic::inner_rows(&idx, &a, ll * n);
                re[idx.d_re(k)] -= ul.re;
                re[idx.d_im(k)] += ul.im;
                im[idx.d_re(k)] -= ul.im;
                im[idx.d_im(k)] -= ul.re;
                g.add_abs_sqr(&re, &im, 1.0);
            }
            g.c = -(l as f64) * delta;
            t.record_set(&set, &p, &dense(&p, &g));
        }
        t.finish()
    }

    pub fn power_ball(rng: &mut ChaCha12Rng, instances: usize) -> FamilyReport {
        let mut t = Tally::new("power-ball", 1e-6);
        for _ in 0..instances {
            let p = random_point(rng, 8, 1, 1, 1.0);
            let power = rng.gen_range(0.5..12.0);
            let set = PowerBall { power };
            let idx = RealIndex::of(&p);
            let mut g = RealQuadratic::zero(idx.dim());
            for i in 0..8 {
                g.q[(idx.x_re(i), idx.x_re(i))] = 1.0;
                g.q[(idx.x_im(i), idx.x_im(i))] = 1.0;
            }
            g.c = -power;
            t.record_set(&set, &p, &dense(&p, &g));
        }
        t.finish()
    }

    pub fn robust_halfspace(rng: &mut ChaCha12Rng, instances: usize) -> FamilyReport {
        let mut t = Tally::new("robust-halfspace", 1e-6);
        for _ in 0..instances {
            let (n, l) = (3, 2);
            let slot = rng.gen_range(0..l);
            let h = gvec(rng, n);
            let eps = rng.gen_range(0.0..0.5);
            let mu = rng.gen_range(0.1..2.0);
            let set =
                RobustSepHalfspace::new(slot, h.clone(), eps, mu, slot, "rob".into()).unwrap();
            let p = random_point(rng, n * l, 0, l, 1.0);
            let idx = RealIndex::of(&p);
            let mut g = RealQuadratic::zero(idx.dim());
            let (re, _) = RealQuadratic::inner_rows(&idx, &h, slot * n);
            g.b = -re / 2.0;
            g.b[idx.aux(slot)] = eps / 2.0;
            g.c = mu;
            t.record_set(&set, &p, &dense(&p, &g));
        }
        t.finish()
    }

    pub fn soc(rng: &mut ChaCha12Rng, instances: usize) -> FamilyReport {
        let mut t = Tally::new("soc", 1e-6);
        for _ in 0..instances {
            let v = gvec(rng, 4);
            let r = rng.gen_range(-3.0..3.0);
            let set = crate::sets::SocSet {
                slot: 0,
                n_tx: 4,
                radius_index: 0,
            };
            let p = DecisionPoint::new(v.clone(), vec![], 0.0, vec![r]);
            let (vo, ro) = project_soc_search(&v, r);
            let oracle = DecisionPoint::new(vo, vec![], 0.0, vec![ro]);
            t.record_set(&set, &p, &oracle);
            let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let _ = soc_scale(nv, r);
        }
        t.finish()
    }

    fn random_axis_bounds(rng: &mut ChaCha12Rng, l: usize) -> Vec<AxisBounds> {
        let m = 2usize;
        let edge = (2 * m - 1) as f64;
        let alpha = rng.gen_range(0.2..1.5);
        let beta = rng.gen_range(0.2..1.5);
        (0..l)
            .map(|_| {
                let level = (2 * rng.gen_range(0..2 * m)) as f64 - edge;
                if level == edge {
                    AxisBounds {
                        level,
                        a: Some(beta),
                        c: None,
                    }
                } else if level == -edge {
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
            })
            .collect()
    }

    pub fn qam_margins(rng: &mut ChaCha12Rng, instances: usize) -> FamilyReport {
        let mut t = Tally::new("qam-margins", 1e-6);
        for _ in 0..instances {
            let l = 8;
            let b = random_axis_bounds(rng, l);
            let v: Vec<f64> = (0..l).map(|_| rng.gen_range(-6.0..6.0)).collect();
            let tau = rng.gen_range(-1.0..2.0);
            let (vg, tg) = project_axis(&v, tau, &b);
            let (vo, to) = project_axis_search(&v, tau, &b);
            let err = (tg - to).powi(2)
                + vg.iter()
                    .zip(&vo)
                    .map(|(a, c)| (a - c).powi(2))
                    .sum::<f64>();
            t.record(err.sqrt());
            let (v2, t2) = project_axis(&vg, tg, &b);
            let idem = (t2 - tg).powi(2)
                + v2.iter()
                    .zip(&vg)
                    .map(|(a, c)| (a - c).powi(2))
                    .sum::<f64>();
            t.idem = t.idem.max(idem.sqrt());
        }
        t.finish()
    }

    pub fn qam_scalar_grid(rng: &mut ChaCha12Rng, instances: usize) -> FamilyReport {
        let mut t = Tally::new("qam-scalar-grid", 1e-3);
        let fixed = AxisBounds {
            level: 1.0,
            a: Some(1.0),
            c: Some(1.0),
        };
        for i in 0..instances {
            let (b, v, tau) = if i == 0 {
                (fixed, 0.0, 0.0)
            } else {
                let b = random_axis_bounds(rng, 1)[0];
                (b, rng.gen_range(-2.0..2.0), rng.gen_range(0.0..1.5))
            };
            let (vg, tg) = project_axis(&[v], tau, &[b]);
            // coarse grid around the input, then a 1e-4 grid around its best cell
            let (vo, to) = project_axis_grid(v, tau, &b, 6.0, 6e-3);
            let (vf, tf) = project_axis_grid_toward(v, tau, &b, (vo, to), 5e-2, 1e-4);
            let err = ((vg[0] - vf).powi(2) + (tg - tf).powi(2)).sqrt();
            t.record(err);
        }
        t.finish()
    }

    pub fn coupling(rng: &mut ChaCha12Rng, instances: usize) -> FamilyReport {
        let mut t = Tally::new("channel-coupling", 1e-10);
        for _ in 0..instances {
            let (n, ku, l) = (4, 2, 2);
            let hs: Vec<Vec<C64>> = (0..ku).map(|_| gvec(rng, n)).collect();
            let lay = AuxLayout {
                n_users: ku,
                frame_len: l,
                qam: true,
                robust: false,
            };
            let f = Arc::new(CouplingFactor::new(&hs).unwrap());
            let slot = rng.gen_range(0..l);
            let set = ChannelCouplingSet {
                slot,
                layout: lay,
                factor: f.clone(),
            };
            let p = random_point(rng, n * l, 0, lay.len(), 1.0);
            let x0 = &p.x[slot * n..(slot + 1) * n];
            let u0: Vec<C64> = (0..ku)
                .map(|k| {
                    let i = lay.upsilon(k, slot);
                    C64::new(p.aux[i], p.aux[i + 1])
                })
                .collect();
            let (xo, uo) = project_coupling_lstsq(&f.h, x0, &u0);
            let mut oracle = p.clone();
            oracle.x[slot * n..(slot + 1) * n].copy_from_slice(&xo);
            for (k, u) in uo.iter().enumerate() {
                let i = lay.upsilon(k, slot);
                oracle.aux[i] = u.re;
                oracle.aux[i + 1] = u.im;
            }
            t.record_set(&set, &p, &oracle);
        }
        t.finish()
    }

    /// Runs every family with `instances` random cases each.
    pub fn run(seed: u64, instances: usize) -> Vec<FamilyReport> {
        let streams = SeedStreams::new(seed);
        let families: [fn(&mut ChaCha12Rng, usize) -> FamilyReport; 9] = [
            radar_surrogate,
            sep_halfspace,
            noise_shaping,
            power_ball,
            qam_margins,
            qam_scalar_grid,
            soc,
            robust_halfspace,
            coupling,
        ];
        families
            .iter()
            .enumerate()
            .map(|(i, f)| f(&mut streams.rng(Stream::Oracle, i as u64), instances))
            .collect()
    }
}
