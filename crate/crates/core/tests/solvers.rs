mod common;

use iscc_core::array::{
    complex_gaussian, Clutter, Constellation, Scene, SymbolFrame, SystemConfig, TargetSpec,
    UserChannelSet,
};
use iscc_core::linalg::{dot, norm, C64};
use iscc_core::metrics::{min_scnr, noise_shaping_residual, psk_safety_margin, scnr};
use iscc_core::mm::{matched_filter_start, objective_scale, SolveOptions};
use iscc_core::oracle::projected_gradient_max;
use iscc_core::pda::{pda_solve, DecisionPoint, PenaltySchedule, ProjectionSet, StopRule};
use iscc_core::psk::{qos_threshold_psk, rotated_symbols, solve_iscc_psk, PskSpec, Qos};
use iscc_core::qam::{axis_bounds, qam_bounds, qam_margins, solve_iscc_qam, QamSpec};
use iscc_core::robust::{
    solve_robust_psk, solve_robust_qam, worst_case_sep_margin_psk, UncertaintyModel,
};
use iscc_core::sets::{PowerBall, SepHalfspace};
use iscc_core::special::q_inv;
use iscc_core::surrogate::build_surrogate;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, SQRT_2};

const SEED: u64 = 1;
const DELTA: f64 = 0.1;

fn qpsk_spec(eps: f64) -> PskSpec {
    PskSpec {
        order: 4,
        qos: Qos::Sep(eps),
    }
}

fn unit_sphere(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
    let r = norm(&v);
    v.into_iter().map(|z| z / r).collect()
}

fn slot(x: &[C64], n: usize, l: usize) -> &[C64] {
    &x[l * n..(l + 1) * n]
}

/// Power, noise shaping and both rotated margins of every (user, slot).
fn assert_psk_feasible(
    cfg: &SystemConfig,
    scene: &Scene,
    frame: &SymbolFrame,
    x: &[C64],
    d: &[C64],
    aux: &iscc_core::array::NoiseShapingAux,
    eps: f64,
) {
    let energy: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    assert!(energy <= cfg.power * (1.0 + 1e-6), "energy {energy}");
    for (k, t) in scene.targets.iter().enumerate() {
        let r = noise_shaping_residual(x, t, cfg, k, d[k], aux);
        assert!(r <= DELTA * (1.0 + 1e-4), "noise residual {r}");
    }
    let sigma = 1.0;
    let mu = qos_threshold_psk(eps, sigma);
    for (k, h) in scene.channels.channels.iter().enumerate() {
        for l in 0..cfg.frame_len {
            let xl = slot(x, cfg.n_tx, l);
            let s = frame.symbols[k][l];
            let (st, sb) = rotated_symbols(s, 4);
            for r in [st, sb] {
                let m = (dot(h, xl) * r).re;
                assert!(m >= mu * (1.0 - 1e-4), "margin {m} < {mu}");
            }
            let beta = psk_safety_margin(xl, h, s, 4);
            assert!(beta * SQRT_2 * (PI / 4.0).sin() / sigma >= q_inv(eps / 2.0) - 1e-4);
        }
    }
}

#[test]
fn psk_desk_solution_meets_every_constraint() {
    let (cfg, scene) = common::desk_scene(SEED);
    let (frame, aux) = common::desk_frame(SEED, &cfg, &scene, &Constellation::psk(4), DELTA);
    let sol = solve_iscc_psk(
        &scene,
        &cfg,
        &frame,
        &qpsk_spec(1e-2),
        Some(&aux),
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(!sol.report.infeasible);
    assert_psk_feasible(
        &cfg,
        &scene,
        &frame,
        &sol.waveform.stacked,
        &sol.d,
        &aux,
        1e-2,
    );
    let trace = &sol.report.objective_trace;
    let first = sol.report.first_feasible.expect("a feasible iterate");
    for w in trace[first..].windows(2) {
        assert!(
            w[1] >= w[0] - 1e-6 * w[0].abs(),
            "objective dropped {} -> {}",
            w[0],
            w[1]
        );
    }
    assert!(
        (min_scnr(&sol.waveform.stacked, &scene.targets, &cfg) - sol.report.final_objective())
            .abs()
            <= 1e-9 * sol.report.final_objective()
    );

    // dropping the covert sets can only enlarge the feasible set
    let slp = solve_iscc_psk(
        &scene,
        &cfg,
        &frame,
        &qpsk_spec(1e-2),
        None,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(slp.report.final_objective() >= sol.report.final_objective() * (1.0 - 1e-6));
}

fn single_target_scene(rcs: f64) -> (SystemConfig, Scene) {
    let cfg = SystemConfig {
        n_tx: 8,
        n_rx: 8,
        frame_len: 4,
        power: 40.0,
        spacing_ratio: 0.5,
        rx_noise_power: 0.5,
        user_noise_powers: vec![],
    };
    let scene = Scene {
        targets: vec![TargetSpec {
            angle: 0.4,
            rcs_power: rcs,
            clutter: vec![],
        }],
        channels: UserChannelSet::from_vectors(vec![]),
    };
    (cfg, scene)
}

#[test]
fn unconstrained_single_target_reaches_the_rank_one_optimum() {
    let rcs = 2.0;
    let (cfg, scene) = single_target_scene(rcs);
    let bound = cfg.power * rcs / cfg.rx_noise_power;
    let empty = SymbolFrame {
        indices: vec![],
        symbols: vec![],
    };
    let psk = solve_iscc_psk(
        &scene,
        &cfg,
        &empty,
        &qpsk_spec(1e-2),
        None,
        &SolveOptions::default(),
    )
    .unwrap();
    let qam = solve_iscc_qam(
        &scene,
        &cfg,
        &empty,
        &QamSpec {
            order: 2,
            epsilon: 0.05,
        },
        None,
        &SolveOptions::default(),
    )
    .unwrap();
    for x in [&psk.waveform.stacked, &qam.waveform.stacked] {
        let g = min_scnr(x, &scene.targets, &cfg);
        assert!((g - bound).abs() <= 0.01 * bound, "{g} vs {bound}");
        assert!(g <= bound * (1.0 + 1e-9));
    }
}

#[test]
fn qam_desk_solution_sits_inside_its_boxes() {
    let (cfg, scene) = common::desk_scene(SEED);
    let spec = QamSpec {
        order: 2,
        epsilon: 0.05,
    };
    let c = spec.constellation();
    let (frame, aux) = common::desk_frame(SEED, &cfg, &scene, &c, DELTA);
    let sol = solve_iscc_qam(
        &scene,
        &cfg,
        &frame,
        &spec,
        Some(&aux),
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(!sol.report.infeasible);
    let x = &sol.waveform.stacked;
    assert!(sol.waveform.energy() <= cfg.power * (1.0 + 1e-6));
    for (k, t) in scene.targets.iter().enumerate() {
        assert!(noise_shaping_residual(x, t, &cfg, k, sol.d[k], &aux) <= DELTA * (1.0 + 1e-4));
    }
    let (bounds, _) = qam_bounds(&c, &frame, spec.epsilon, &[1.0, 1.0]);
    for (k, h) in scene.channels.channels.iter().enumerate() {
        let (tr, ti) = sol.tau[k];
        assert!(tr > 0.0 && ti > 0.0, "tau {:?}", sol.tau[k]);
        for l in 0..cfg.frame_len {
            let y = dot(h, slot(x, cfg.n_tx, l));
            assert!(
                bounds.re[k][l].slack(y.re, tr) >= -1e-4,
                "re slack {}",
                bounds.re[k][l].slack(y.re, tr)
            );
            assert!(
                bounds.im[k][l].slack(y.im, ti) >= -1e-4,
                "im slack {}",
                bounds.im[k][l].slack(y.im, ti)
            );
        }
    }
    let tau = sol.report.tau.as_ref().expect("tau in the report");
    assert_eq!(tau.len(), 2);
}

#[test]
fn zero_uncertainty_matches_the_nominal_designs() {
    let (cfg, scene) = common::desk_scene(SEED);
    let mut unc = UncertaintyModel::uniform(2, 2, 0.0, 0.0);
    unc.grid_size = 1;
    // both sides stop on a slow drift; compare them at a tight outer tolerance
    let opts = SolveOptions {
        mm_tol: 1e-7,
        mm_step_tol: 1e-5,
        ..SolveOptions::default()
    };

    let (frame, aux) = common::desk_frame(SEED, &cfg, &scene, &Constellation::psk(4), DELTA);
    let nominal =
        solve_iscc_psk(&scene, &cfg, &frame, &qpsk_spec(1e-2), Some(&aux), &opts).unwrap();
    let robust = solve_robust_psk(
        &scene,
        &cfg,
        &frame,
        &qpsk_spec(1e-2),
        &unc,
        Some(&aux),
        &opts,
    )
    .unwrap();
    assert_eq!(nominal.report.infeasible, robust.report.infeasible);
    let (a, b) = (
        nominal.report.final_objective(),
        robust.report.final_objective(),
    );
    assert!((a - b).abs() <= 1e-3 * a, "psk nominal {a} robust {b}");

    let spec = QamSpec {
        order: 2,
        epsilon: 0.05,
    };
    let (frame, aux) = common::desk_frame(SEED, &cfg, &scene, &spec.constellation(), DELTA);
    let nominal = solve_iscc_qam(&scene, &cfg, &frame, &spec, Some(&aux), &opts).unwrap();
    let robust = solve_robust_qam(&scene, &cfg, &frame, &spec, &unc, Some(&aux), &opts).unwrap();
    assert_eq!(nominal.report.infeasible, robust.report.infeasible);
    let (a, b) = (
        nominal.report.final_objective(),
        robust.report.final_objective(),
    );
    assert!((a - b).abs() <= 1e-3 * a, "qam nominal {a} robust {b}");
}

#[test]
fn angle_grid_minimum_never_exceeds_the_nominal_angle() {
    let (cfg, scene) = common::desk_scene(SEED);
    let unc = UncertaintyModel::uniform(2, 2, 0.0, 3f64.to_radians());
    let (frame, aux) = common::desk_frame(SEED, &cfg, &scene, &Constellation::psk(4), DELTA);
    let sol = solve_robust_psk(
        &scene,
        &cfg,
        &frame,
        &qpsk_spec(1e-2),
        &unc,
        Some(&aux),
        &SolveOptions::default(),
    )
    .unwrap();
    let check = sol.report.grid_check.as_ref().expect("grid check");
    let at_nominal = min_scnr(&sol.waveform.stacked, &scene.targets, &cfg);
    assert!(check.grid_min <= at_nominal * (1.0 + 1e-12));
    assert!(check.fine_grid_min <= check.grid_min * (1.0 + 1e-12));
    let radius = sol.report.radius.as_ref().expect("radii");
    for (l, r) in radius.iter().enumerate() {
        assert!(norm(slot(&sol.waveform.stacked, cfg.n_tx, l)) <= r * (1.0 + 1e-4) + 1e-6);
    }
}

#[test]
fn worst_case_margin_is_the_sampled_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 8;
    for _ in 0..100 {
        let x: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng) * 3.0).collect();
        let h: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
        let s = C64::from_polar(1.0, rand::Rng::gen_range(&mut rng, 0.0..2.0 * PI));
        let eps = rand::Rng::gen_range(&mut rng, 0.01..0.3);
        let formula = worst_case_sep_margin_psk(&x, &h, s, eps);
        let margin = |dh: &[C64]| -> f64 {
            let hp: Vec<C64> = h.iter().zip(dh).map(|(a, b)| a + b).collect();
            (dot(&hp, &x) * s).re
        };
        let mut lowest = f64::INFINITY;
        for _ in 0..2000 {
            let dh: Vec<C64> = unit_sphere(&mut rng, n)
                .into_iter()
                .map(|z| z * eps)
                .collect();
            let m = margin(&dh);
            assert!(m >= formula - 1e-9);
            lowest = lowest.min(m);
        }
        // the minimizer -eps x s / ‖x‖ lies on the sphere
        let xn = norm(&x);
        let worst: Vec<C64> = x.iter().map(|z| -z * s * (eps / xn)).collect();
        lowest = lowest.min(margin(&worst));
        assert!(
            lowest - formula <= 1e-3 * eps * xn,
            "gap {}",
            lowest - formula
        );
    }
}

#[test]
fn tightened_qam_boxes_hold_for_every_channel_in_the_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 8;
    let (alpha, beta) = qam_margins(0.05, 1.0);
    for i in 0..100 {
        let x: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
        let h: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
        let r = norm(&x) * (1.0 + 0.1 * (i % 3) as f64);
        let eps = 0.05;
        let level = [-3.0, -1.0, 1.0, 3.0][i % 4];
        let b = axis_bounds(level, 3.0, alpha, beta);
        let tight = b.tightened(eps * r);
        let y = dot(&h, &x);
        let tau = 1.5;
        for axis in [false, true] {
            let pick = |z: C64| if axis { z.im } else { z.re };
            let robust_slack = tight.slack(pick(y), tau);
            let mut lowest = f64::INFINITY;
            for _ in 0..500 {
                let dh: Vec<C64> = unit_sphere(&mut rng, n)
                    .into_iter()
                    .map(|z| z * eps)
                    .collect();
                let hp: Vec<C64> = h.iter().zip(&dh).map(|(a, d)| a + d).collect();
                let v = b.slack(pick(dot(&hp, &x)), tau);
                assert!(
                    v >= robust_slack - 1e-12,
                    "sampled slack {v} below tightened {robust_slack}"
                );
                lowest = lowest.min(v);
            }
            // push the received point straight at the binding side
            let binding_low = b.lower(tau).map_or(f64::INFINITY, |lo| pick(y) - lo)
                <= b.upper(tau).map_or(f64::INFINITY, |hi| hi - pick(y));
            let dir = if binding_low { -1.0 } else { 1.0 };
            let unit = if axis {
                C64::new(0.0, dir)
            } else {
                C64::new(dir, 0.0)
            };
            // (h + dh)^H x moves by dh^H x = unit * eps ‖x‖
            let xn = norm(&x);
            let dh: Vec<C64> = x.iter().map(|z| z * unit.conj() * (eps / xn)).collect();
            let hp: Vec<C64> = h.iter().zip(&dh).map(|(a, d)| a + d).collect();
            lowest = lowest.min(b.slack(pick(dot(&hp, &x)), tau));
            let exact = robust_slack + eps * (r - xn);
            assert!(
                (lowest - exact).abs() <= 1e-3 * eps * r + 1e-12,
                "lowest {lowest} exact {exact}"
            );
        }
    }
}

/// One surrogate subproblem on a small PSK instance: the PDA optimum
/// matches projected gradient ascent on the same concave program.
#[test]
fn pda_solves_a_small_psk_subproblem_to_the_convex_optimum() {
    let cfg = SystemConfig {
        n_tx: 3,
        n_rx: 3,
        frame_len: 2,
        power: 6.0,
        spacing_ratio: 0.5,
        rx_noise_power: 1.0,
        user_noise_powers: vec![1.0],
    };
    let target = TargetSpec {
        angle: 0.3,
        rcs_power: 1.0,
        clutter: vec![Clutter {
            angle: -0.2,
            power: 0.5,
        }],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h: Vec<C64> = (0..3).map(|_| complex_gaussian(&mut rng) * 1.5).collect();
    let symbols = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
    let mu = qos_threshold_psk(1e-2, 1.0);
    let mut fixed: Vec<Box<dyn ProjectionSet>> = Vec::new();
    for (l, s) in symbols.iter().enumerate() {
        let (st, sb) = rotated_symbols(*s, 4);
        for r in [st, sb] {
            let ht: Vec<C64> = h.iter().map(|z| z * r.conj()).collect();
            fixed.push(Box::new(
                SepHalfspace::new(l, ht, mu, "sep".into()).unwrap(),
            ));
        }
    }
    fixed.push(Box::new(PowerBall { power: cfg.power }));

    let x_bar = matched_filter_start(&cfg, std::slice::from_ref(&target));
    let sur = build_surrogate(&x_bar, &target, &cfg).with_proximal(0.05, &x_bar);
    let scale = objective_scale(&cfg, std::slice::from_ref(&target));
    let radar = sur.to_set("radar".into(), scale);
    let mut sets: Vec<&dyn ProjectionSet> = vec![&radar];
    sets.extend(fixed.iter().map(|b| b.as_ref()));
    let start = DecisionPoint::new(x_bar.clone(), vec![], -sur.value(&x_bar) / scale, vec![]);
    let stop = StopRule {
        max_iters: 200_000,
        residual_tol: 1e-8,
        step_tol: 1e-12,
    };
    let out = pda_solve(&start, &sets, &PenaltySchedule::default(), true, &stop).unwrap();

    let dim = cfg.dim();
    let mut m = DMatrix::<C64>::identity(dim, dim) * C64::new(sur.shift, 0.0);
    for w in &sur.factors {
        let v = nalgebra::DVector::from_column_slice(w);
        m += &v * v.adjoint();
    }
    let fixed_refs: Vec<&dyn ProjectionSet> = fixed.iter().map(|b| b.as_ref()).collect();
    let oracle = projected_gradient_max(&start, &m, &sur.mbar, &fixed_refs, 4000);
    let best = sur.value(&oracle.x);
    let got = sur.value(&out.point.x);
    assert!(
        (got - best).abs() <= 1e-3 * best.abs(),
        "pda {got} oracle {best}"
    );
    let dist = out
        .point
        .x
        .iter()
        .zip(&oracle.x)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(dist <= 1e-2 * cfg.power.sqrt(), "distance {dist}");
    // the surrogate optimum is no better than the true SCNR there
    assert!(got <= scnr(&out.point.x, &target, &cfg) + 1e-6);
}
