use iscc_core::array::{steering_vector, Clutter, SystemConfig, TargetSpec};
use iscc_core::linalg::{norm, C64};
use iscc_core::metrics::{js_divergence_default, psk_sep_bound, scnr};
use iscc_core::pda::{pda_step, penalized_objective, DecisionPoint, ProjectionSet};
use iscc_core::qam::axis_bounds;
use iscc_core::sets::{
    AuxLayout, NoiseShapingSet, PowerBall, QamMarginSet, RobustSepHalfspace, SepBounds,
    SepHalfspace, SocSet,
};
use iscc_core::special::{q_func, q_inv};
use proptest::prelude::*;
use std::f64::consts::LN_2;

const N: usize = 3;
const L: usize = 2;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), len)
        .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

/// Points with `N L` waveform entries, one `d`, and `L` radii.
fn point() -> impl Strategy<Value = DecisionPoint> {
    (
        complex_vec(N * L),
        complex_vec(1),
        -3.0..3.0f64,
        prop::collection::vec(-3.0..3.0f64, L),
    )
        .prop_map(|(x, d, xi, aux)| DecisionPoint::new(x, d, xi, aux))
}

fn layout() -> AuxLayout {
    AuxLayout {
        n_users: 0,
        frame_len: L,
        qam: false,
        robust: true,
    }
}

/// Every family that acts on the generic point shape.
fn sets(
    h: Vec<C64>,
    u: Vec<C64>,
    mu: f64,
    eps: f64,
    delta: f64,
    power: f64,
) -> Vec<Box<dyn ProjectionSet>> {
    let lay = layout();
    let a = steering_vector(0.3, N, 0.5).0;
    vec![
        Box::new(PowerBall { power }),
        Box::new(SepHalfspace::new(1, h.clone(), mu, "sep".into()).unwrap()),
        Box::new(RobustSepHalfspace::new(0, h, eps, mu, lay.radius(0), "robust".into()).unwrap()),
        Box::new(SocSet {
            slot: 1,
            n_tx: N,
            radius_index: lay.radius(1),
        }),
        Box::new(NoiseShapingSet::new(0, a, u, delta, "noise".into()).unwrap()),
    ]
}

fn set_params() -> impl Strategy<Value = (Vec<C64>, Vec<C64>, f64, f64, f64, f64)> {
    (
        complex_vec(N).prop_filter("nonzero channel", |h| norm(h) > 1e-3),
        complex_vec(L),
        -2.0..2.0f64,
        0.0..0.5f64,
        0.01..2.0f64,
        0.1..10.0f64,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projections_are_idempotent_and_nonexpansive(params in set_params(), p in point(), q in point()) {
        let (h, u, mu, eps, delta, power) = params;
        for s in sets(h, u, mu, eps, delta, power) {
            let pp = s.project(&p).unwrap();
            let qq = s.project(&q).unwrap();
            let again = s.project(&pp).unwrap();
            prop_assert!(again.distance_sqr(&pp).sqrt() <= 1e-9 * (1.0 + pp.norm_sqr().sqrt()), "{} not idempotent", s.label());
            let before = p.distance_sqr(&q).sqrt();
            let after = pp.distance_sqr(&qq).sqrt();
            prop_assert!(after <= before * (1.0 + 1e-9) + 1e-12, "{} expands: {after} > {before}", s.label());
            prop_assert!(s.residual(&pp).unwrap() <= 1e-7 * (1.0 + pp.norm_sqr().sqrt()));
        }
    }

    #[test]
    fn projection_is_closest_among_feasible_samples(params in set_params(), p in point(), probe in point()) {
        // any feasible point is at least as far from p as the projection
        let (h, u, mu, eps, delta, power) = params;
        for s in sets(h, u, mu, eps, delta, power) {
            let pp = s.project(&p).unwrap();
            let other = s.project(&probe).unwrap();
            prop_assert!(pp.distance_sqr(&p) <= other.distance_sqr(&p) * (1.0 + 1e-9) + 1e-12, "{}", s.label());
        }
    }

    #[test]
    fn steering_vectors_have_unit_norm(angle in -1.6..1.6f64, n in 1usize..32, ratio in 0.1..1.0f64) {
        let a = steering_vector(angle, n, ratio);
        prop_assert_eq!(a.len(), n);
        prop_assert!((norm(&a.0) - 1.0).abs() < 1e-12);
        prop_assert!(a.0.iter().all(|z| (z.norm() - 1.0 / (n as f64).sqrt()).abs() < 1e-12));
    }

    #[test]
    fn scnr_ignores_a_common_phase(x in complex_vec(N * L), phase in -3.2..3.2f64, theta in -1.2..1.2f64, off in 0.1..0.6f64) {
        let cfg = SystemConfig {
            n_tx: N,
            n_rx: N,
            frame_len: L,
            power: 10.0,
            spacing_ratio: 0.5,
            rx_noise_power: 1.0,
            user_noise_powers: vec![],
        };
        let t = TargetSpec {
            angle: theta,
            rcs_power: 1.0,
            clutter: vec![Clutter { angle: theta + off, power: 0.5 }],
        };
        let rot = C64::from_polar(1.0, phase);
        let y: Vec<C64> = x.iter().map(|z| z * rot).collect();
        let (a, b) = (scnr(&x, &t, &cfg), scnr(&y, &t, &cfg));
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn js_divergence_is_bounded_and_symmetric(a in complex_vec(40), b in complex_vec(40)) {
        let ab = js_divergence_default(&a, &b).unwrap();
        let ba = js_divergence_default(&b, &a).unwrap();
        prop_assert!((0.0..=LN_2).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(js_divergence_default(&a, &a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn unaccelerated_pda_never_raises_the_penalized_objective(params in set_params(), p in point(), rho in 0.1..100.0f64) {
        let (h, u, mu, eps, delta, power) = params;
        let owned = sets(h, u, mu, eps, delta, power);
        let refs: Vec<&dyn ProjectionSet> = owned.iter().map(|b| b.as_ref()).collect();
        let mut y = p;
        let mut f = penalized_objective(&y, &refs, rho).unwrap();
        for _ in 0..25 {
            y = pda_step(&y, &refs, rho).unwrap();
            let g = penalized_objective(&y, &refs, rho).unwrap();
            prop_assert!(g <= f + 1e-10 * (1.0 + f.abs()), "{g} > {f}");
            f = g;
        }
    }

    #[test]
    fn sep_bound_is_a_probability_and_decreasing(m1 in -5.0..5.0f64, gap in 0.0..3.0f64, sigma in 0.1..3.0f64, order in prop::sample::select(vec![2usize, 4, 8, 16])) {
        let lo = psk_sep_bound(m1 + gap, sigma, order);
        let hi = psk_sep_bound(m1, sigma, order);
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(lo <= hi);
    }

    #[test]
    fn q_inverse_inverts(x in -6.0..6.0f64) {
        let p = q_func(x);
        prop_assert!((q_inv(p) - x).abs() < 1e-7 * (1.0 + x.abs()));
    }

    #[test]
    fn qam_margin_projection_permutes_with_users(
        levels in prop::collection::vec(prop::sample::select(vec![-3.0, -1.0, 1.0, 3.0]), 2 * 2 * L),
        aux in prop::collection::vec(-4.0..4.0f64, 2 * 2 * L + 4),
    ) {
        let lay = AuxLayout { n_users: 2, frame_len: L, qam: true, robust: false };
        let bounds = |user: usize, imag: bool| -> Vec<_> {
            (0..L).map(|l| axis_bounds(levels[(user * L + l) * 2 + usize::from(imag)], 3.0, 0.7, 1.1)).collect()
        };
        let make = |order: [usize; 2]| QamMarginSet {
            bounds: SepBounds {
                re: order.iter().map(|&k| bounds(k, false)).collect(),
                im: order.iter().map(|&k| bounds(k, true)).collect(),
            },
            layout: lay,
            eps_user: vec![0.0; 2],
        };
        let swap = |v: &[f64]| -> Vec<f64> {
            let mut out = v.to_vec();
            for l in 0..L {
                for o in 0..2 {
                    out[lay.upsilon(0, l) + o] = v[lay.upsilon(1, l) + o];
                    out[lay.upsilon(1, l) + o] = v[lay.upsilon(0, l) + o];
                }
            }
            for o in 0..2 {
                out[lay.tau(0) + o] = v[lay.tau(1) + o];
                out[lay.tau(1) + o] = v[lay.tau(0) + o];
            }
            out
        };
        let p = DecisionPoint::new(vec![], vec![], 0.0, aux.clone());
        let q = DecisionPoint::new(vec![], vec![], 0.0, swap(&aux));
        let direct = make([0, 1]).project(&p).unwrap();
        let swapped = make([1, 0]).project(&q).unwrap();
        prop_assert_eq!(swap(&direct.aux), swapped.aux);
    }
}
