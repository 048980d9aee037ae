use super::*;
use crate::baseline::bd_fully_digital_precoder;
use crate::channel::{sample_channel, ChannelParams};
use crate::linalg::{c, identity};
use crate::projections::{is_member, Element};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

fn desk(seed: u64, users: usize) -> (SystemConfig, DigitalPrecoder, ChannelRealization) {
    let cfg = SystemConfig::new(16, 4, users, 1, 4);
    let ch = sample_channel(
        &cfg,
        &ChannelParams::default(),
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
    .unwrap();
    let f_opt = bd_fully_digital_precoder(&ch, &cfg).unwrap();
    (cfg, f_opt, ch)
}

#[test]
fn power_ball_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let y = gaussian(6, 3, &mut rng);
    let y0 = &y * c((4.0 / fro_sq(&y)).sqrt(), 0.0);
    let (same, flag) = project_power_ball(&y0, 4.0);
    assert!(!flag);
    assert!((same - &y0).norm() < 1e-14);
    let (halved, _) = project_power_ball(&(&y0 * c(2.0, 0.0)), 4.0);
    assert!((halved - &y0).norm() < 1e-14);
    for _ in 0..50 {
        let y = gaussian(5, 2, &mut rng) * c(7.3, 0.0);
        let (p, _) = project_power_ball(&y, 8.0);
        assert!((fro_sq(&p) - 8.0).abs() < 1e-12);
    }
    let (p, flag) = project_power_ball(&CMatrix::zeros(2, 2), 4.0);
    assert!(flag);
    assert!((fro_sq(&p) - 4.0).abs() < 1e-12);
}

#[test]
fn nullspace_axis_aligned() {
    let h = CMatrix::from_row_slice(1, 2, &[c(1.0, 0.0), c(0.0, 0.0)]);
    let a = CMatrix::from_column_slice(2, 1, &[c(3.0, 1.0), c(-2.0, 0.5)]);
    let x = project_nullspace(&a, &h);
    assert!(x[(0, 0)].norm() < 1e-15);
    assert!((x[(1, 0)] - c(-2.0, 0.5)).norm() < 1e-15);
}

#[test]
fn nullspace_fixes_members_and_agrees_with_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let h = gaussian(4, 8, &mut rng);
        let a = gaussian(8, 2, &mut rng);
        let x = project_nullspace(&a, &h);
        let x2 = project_nullspace_normal_eq(&a, &h).unwrap();
        assert!((&x - &x2).norm() <= 1e-9 * fro(&a));
        assert!((project_nullspace(&x, &h) - &x).norm() <= 1e-12 * fro(&a));
        assert!(fro(&(&h * &x)) <= 1e-9 * fro(&x));
    }
}

#[test]
fn duals_accumulate_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f_rf = gaussian(4, 2, &mut rng);
    let f_bb = vec![gaussian(2, 2, &mut rng)];
    let product = &f_rf * &f_bb[0];
    let mut state = AdmmState {
        r: f_rf.clone(),
        b: vec![product.clone()],
        f_approx: vec![product.clone()],
        u: CMatrix::zeros(4, 2),
        w: vec![CMatrix::zeros(4, 2)],
        z: vec![CMatrix::zeros(4, 2)],
        f_rf,
        f_bb,
    };
    update_duals(&mut state);
    assert_eq!(state.u, CMatrix::zeros(4, 2));
    assert_eq!(state.w[0], CMatrix::zeros(4, 2));

    let delta = gaussian(4, 2, &mut rng);
    state.r = &state.f_rf - &delta;
    state.b[0] = &product - &delta;
    state.f_approx[0] = &product - &delta;
    update_duals(&mut state);
    assert!((&state.u - &delta).norm() < 1e-14);
    assert!((&state.w[0] - &delta).norm() < 1e-14);
    update_duals(&mut state);
    assert!((&state.z[0] - &delta * c(2.0, 0.0)).norm() < 1e-14);
}

fn random_state(problem: &Problem, n_rf: usize, rng: &mut ChaCha8Rng) -> AdmmState {
    let n_tx = problem.f_opt[0].nrows();
    let cols = problem.f_opt[0].ncols();
    let nk = problem.f_opt.len();
    let per_k =
        |rng: &mut ChaCha8Rng, r, c| (0..nk).map(|_| gaussian(r, c, rng)).collect::<Vec<_>>();
    AdmmState {
        f_rf: gaussian(n_tx, n_rf, rng),
        f_bb: per_k(rng, n_rf, cols),
        r: project(
            &gaussian(n_tx, n_rf, rng),
            &Architecture::fully_connected(Element::Ups),
        ),
        b: per_k(rng, n_tx, cols),
        f_approx: per_k(rng, n_tx, cols),
        u: gaussian(n_tx, n_rf, rng),
        w: per_k(rng, n_tx, cols),
        z: per_k(rng, n_tx, cols),
    }
}

#[test]
fn digital_update_is_least_squares_for_orthonormal_analog() {
    let (_, f_opt, ch) = desk(4, 2);
    let prm = AdmmParams {
        eta: 0.0,
        mu: 0.0,
        ..Default::default()
    };
    let problem = Problem::new(&f_opt, &ch, &prm);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut state = random_state(&problem, 4, &mut rng);
    state.f_rf = crate::linalg::orthonormal_completion(&CMatrix::zeros(16, 0), 4);
    let fbb = update_fbb(&state, &problem, &prm).unwrap();
    assert!((&fbb[0] - state.f_rf.adjoint() * &problem.f_opt[0]).norm() < 1e-12);
}

#[test]
fn digital_update_is_linear() {
    let (_, f_opt, ch) = desk(5, 2);
    let prm = AdmmParams::default();
    let problem = Problem::new(&f_opt, &ch, &prm);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let state = random_state(&problem, 4, &mut rng);
    let base = update_fbb(&state, &problem, &prm).unwrap();
    let two = c(2.0, 0.0);
    let mut doubled = state.clone();
    doubled.b = state.b.iter().map(|m| m * two).collect();
    doubled.w = state.w.iter().map(|m| m * two).collect();
    doubled.f_approx = state.f_approx.iter().map(|m| m * two).collect();
    doubled.z = state.z.iter().map(|m| m * two).collect();
    let mut doubled_problem = problem.clone();
    doubled_problem.f_opt = problem.f_opt.iter().map(|m| m * two).collect();
    let out = update_fbb(&doubled, &doubled_problem, &prm).unwrap();
    assert!((&out[0] - &base[0] * two).norm() < 1e-10 * fro(&base[0]));
}

#[test]
fn analog_update_follows_penalty_when_rho_dominates() {
    let (_, f_opt, ch) = desk(6, 1);
    let prm = AdmmParams {
        rho: 1e9,
        eta: 0.0,
        mu: 0.0,
        ..Default::default()
    };
    let problem = Problem::new(&f_opt, &ch, &prm);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut state = random_state(&problem, 1, &mut rng);
    state.f_bb = vec![identity(1)];
    let f_rf = update_frf(&state, &problem, &prm).unwrap();
    assert!((f_rf - (&state.r - &state.u)).norm() < 1e-6);
}

#[test]
fn block_updates_do_not_increase_the_lagrangian() {
    let (_, f_opt, ch) = desk(7, 2);
    let prm = AdmmParams::default();
    let problem = Problem::new(&f_opt, &ch, &prm);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut state = random_state(&problem, 4, &mut rng);
    let before = augmented_lagrangian(&state, &problem, &prm);
    state.f_rf = update_frf(&state, &problem, &prm).unwrap();
    let mid = augmented_lagrangian(&state, &problem, &prm);
    // Random perturbations of each block minimizer never do better.
    for _ in 0..100 {
        let mut p = state.clone();
        p.f_rf += gaussian(16, 4, &mut rng) * c(1e-3, 0.0);
        assert!(augmented_lagrangian(&p, &problem, &prm) >= mid - 1e-9 * mid.abs());
    }
    state.f_bb = update_fbb(&state, &problem, &prm).unwrap();
    let after = augmented_lagrangian(&state, &problem, &prm);
    assert!(mid <= before + 1e-9 * before.abs());
    assert!(after <= mid + 1e-9 * mid.abs());
    for _ in 0..100 {
        let mut p = state.clone();
        for fb in p.f_bb.iter_mut() {
            *fb += gaussian(4, 2, &mut rng) * c(1e-3, 0.0);
        }
        assert!(augmented_lagrangian(&p, &problem, &prm) >= after - 1e-9 * after.abs());
    }
}

#[test]
fn zero_iterations_rejected() {
    let (cfg, f_opt, ch) = desk(8, 2);
    let prm = AdmmParams {
        max_iters: 0,
        ..Default::default()
    };
    let arch = Architecture::fully_connected(Element::Ups);
    let err = design_hybrid(
        &cfg,
        &f_opt,
        &ch,
        &arch,
        &prm,
        &mut ChaCha8Rng::seed_from_u64(1),
    );
    assert!(matches!(err, Err(Error::Config { .. })));
}

#[test]
fn single_iteration_is_feasible_for_every_architecture() {
    let (cfg, f_opt, ch) = desk(9, 2);
    let prm = AdmmParams {
        max_iters: 1,
        ..Default::default()
    };
    for label in [
        "fc-ups",
        "fc-qps2",
        "fc-si",
        "fc-switch",
        "fc-as",
        "fc-dps",
        "aosa-ups:2",
        "daosa-qps3:1",
        "daosa-dps:2",
    ] {
        let arch: Architecture = label.parse().unwrap();
        let d = design_hybrid(
            &cfg,
            &f_opt,
            &ch,
            &arch,
            &prm,
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        assert!(is_member(&d.precoder.f_rf, &arch), "{label}");
        let power = fro_sq(&d.precoder.effective(0));
        assert!((power - 2.0).abs() < 1e-10, "{label}: {power}");
        assert_eq!(d.trace.len(), 1);
    }
}

#[test]
fn initialization_is_deterministic_and_feasible() {
    let (_, f_opt, ch) = desk(10, 2);
    let prm = AdmmParams::default();
    let problem = Problem::new(&f_opt, &ch, &prm);
    let arch: Architecture = "daosa-ups:1".parse().unwrap();
    let mut flags = DesignFlags::default();
    let a = initialize(
        &problem,
        &arch,
        4,
        &prm,
        &mut ChaCha8Rng::seed_from_u64(3),
        &mut flags,
    )
    .unwrap();
    let b = initialize(
        &problem,
        &arch,
        4,
        &prm,
        &mut ChaCha8Rng::seed_from_u64(3),
        &mut flags,
    )
    .unwrap();
    assert_eq!(a, b);
    assert!(is_member(&a.r, &arch));
    assert_eq!(a.u, CMatrix::zeros(16, 4));
    assert!(a
        .w
        .iter()
        .chain(a.z.iter())
        .all(|m| m.iter().all(|z| *z == Complex64::default())));
}

#[test]
fn finalize_recovers_exact_factorization() {
    let (_, f_opt, ch) = desk(11, 2);
    let prm = AdmmParams::default();
    let problem = Problem::new(&f_opt, &ch, &prm);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state = random_state(&problem, 4, &mut rng);
    let g = gaussian(4, 2, &mut rng);
    state.f_approx = vec![&state.r * &g];
    let mut flags = DesignFlags::default();
    let p = finalize(&state, &problem, &prm, &mut flags).unwrap();
    // Up to the power rescaling, the digital part is G.
    let scale = fro(&(&state.r * &g)) / 2f64.sqrt();
    assert!((&p.f_bb[0] * c(scale, 0.0) - &g).norm() < 1e-10 * fro(&g));
}

/// Plain matrix-approximation ADMM with only the analog and power constraints.
fn two_constraint_oracle(
    f_opt: &CMatrix,
    arch: &Architecture,
    init_rf: CMatrix,
    rho: f64,
    eta: f64,
    iters: usize,
) -> (Vec<f64>, CMatrix, CMatrix) {
    let power = f_opt.ncols() as f64;
    let mut f = init_rf.clone();
    let mut fb = (f.adjoint() * &f).try_inverse().unwrap() * f.adjoint() * f_opt;
    let mut r = f.clone();
    let mut b = {
        let p = &f * &fb;
        let n = fro(&p);
        p * c(power.sqrt() / n, 0.0)
    };
    let mut u = CMatrix::zeros(f.nrows(), f.ncols());
    let mut w = CMatrix::zeros(f_opt.nrows(), f_opt.ncols());
    let mut objective = Vec::new();
    for _ in 0..iters {
        let lhs = (f_opt + (&b - &w) * c(eta, 0.0)) * fb.adjoint() + (&r - &u) * c(rho, 0.0);
        let gram = &fb * fb.adjoint() * c(1.0 + eta, 0.0) + identity(f.ncols()) * c(rho, 0.0);
        f = lhs * gram.try_inverse().unwrap();
        fb = (f.adjoint() * &f).try_inverse().unwrap()
            * f.adjoint()
            * (f_opt + (&b - &w) * c(eta, 0.0))
            * c(1.0 / (1.0 + eta), 0.0);
        r = project(&(&f + &u), arch);
        let y = &f * &fb + &w;
        b = &y * c(power.sqrt() / fro(&y), 0.0);
        u += &f - &r;
        w += &f * &fb - &b;
        objective.push(fro_sq(&(f_opt - &f * &fb)));
    }
    let p = &f * &fb;
    let mut fb_hat = (r.adjoint() * &r).try_inverse().unwrap() * r.adjoint() * &p;
    let scale = (power / fro_sq(&(&r * &fb_hat))).sqrt();
    fb_hat *= c(scale, 0.0);
    (objective, r, fb_hat)
}

#[test]
fn without_nulling_single_user_matches_two_constraint_admm() {
    let cfg = SystemConfig::new(16, 4, 1, 2, 4);
    let ch = sample_channel(
        &cfg,
        &ChannelParams::default(),
        &mut ChaCha8Rng::seed_from_u64(12),
    )
    .unwrap();
    let f_opt = bd_fully_digital_precoder(&ch, &cfg).unwrap();
    let arch = Architecture::fully_connected(Element::Ups);
    for eta in [0.0, 0.05] {
        let prm = AdmmParams {
            mu: 0.0,
            eta,
            max_iters: 30,
            init: InitMode::Random,
            ..Default::default()
        };
        let design = design_hybrid(
            &cfg,
            &f_opt,
            &ch,
            &arch,
            &prm,
            &mut ChaCha8Rng::seed_from_u64(13),
        )
        .unwrap();

        // Reproduce the initial analog matrix from the same stream.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let phases = CMatrix::from_fn(16, 4, |_, _| {
            Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
        });
        let (objective, r, fb) = two_constraint_oracle(
            &f_opt.f_opt[0],
            &arch,
            project(&phases, &arch),
            0.05,
            eta,
            30,
        );
        for (rec, obj) in design.trace.iter().zip(&objective) {
            assert!(
                (rec.objective - obj).abs() <= 1e-8 * obj.max(1.0),
                "{} vs {}",
                rec.objective,
                obj
            );
        }
        assert!((&design.precoder.f_rf - r).norm() < 1e-8);
        assert!((&design.precoder.f_bb[0] - fb).norm() < 1e-8);
    }
}

fn initial_fit_error(init: InitMode, seed: u64, arch: &Architecture) -> f64 {
    let (_, f_opt, ch) = desk(seed, 4);
    let prm = AdmmParams {
        init,
        ..AdmmParams::default()
    };
    let problem = Problem::new(&f_opt, &ch, &prm);
    let mut flags = DesignFlags::default();
    let st = initialize(
        &problem,
        arch,
        4,
        &prm,
        &mut ChaCha8Rng::seed_from_u64(seed),
        &mut flags,
    )
    .unwrap();
    fro_sq(&(&problem.f_opt[0] - &st.f_rf * &st.f_bb[0]))
}

#[test]
fn target_start_fits_better_than_random_phases() {
    for label in ["fc-ups", "fc-qps2", "fc-si"] {
        let arch: Architecture = label.parse().unwrap();
        let (mut target, mut random) = (0.0, 0.0);
        for seed in 0..20 {
            target += initial_fit_error(InitMode::Target, seed, &arch);
            random += initial_fit_error(InitMode::Random, seed, &arch);
        }
        assert!(target < random, "{label}: {target} vs {random}");
    }
}

#[test]
fn target_start_with_double_phase_shifters_is_nearly_exact() {
    // Four users, one stream each and four chains: the targets span the
    // analog columns, so only the modulus clamp can leave an error.
    let arch: Architecture = "fc-dps".parse().unwrap();
    for seed in 0..10 {
        let err = initial_fit_error(InitMode::Target, seed, &arch);
        assert!(err < 0.5, "seed {seed}: {err}");
    }
}

#[test]
fn kept_iterate_is_never_worse_than_the_last() {
    let arch: Architecture = "fc-qps2".parse().unwrap();
    for seed in 0..10 {
        let (cfg, f_opt, ch) = desk(seed, 4);
        let merit = |keep_best| {
            let prm = AdmmParams {
                keep_best,
                max_iters: 40,
                ..AdmmParams::default()
            };
            let d = design_hybrid(
                &cfg,
                &f_opt,
                &ch,
                &arch,
                &prm,
                &mut ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap();
            assert!(is_member(&d.precoder.f_rf, &arch));
            candidate_merit(&Problem::new(&f_opt, &ch, &prm), &d.precoder, prm.mu)
        };
        assert!(merit(true) <= merit(false), "seed {seed}");
    }
}

#[test]
fn init_mode_parses_from_config_text() {
    let prm: AdmmParams = toml::from_str("init = \"random\"\nkeep_best = false").unwrap();
    assert_eq!(prm.init, InitMode::Random);
    assert!(!prm.keep_best);
    assert_eq!(AdmmParams::default().init, InitMode::Target);
    assert!(toml::from_str::<AdmmParams>("init = \"svd\"").is_err());
}
