use super::*;
use crate::kernels::KernelSpec;
use crate::noise::StreamTag;
use std::f64::consts::PI;

fn heat_model(diffusion: Diffusion, profile: Profile, horizon: f64) -> ModelSpec {
    ModelSpec {
        domain: Domain::UnitInterval,
        drift: Drift::Zero,
        diffusion,
        initial: InitialCondition { profile, hoelder_alpha: 0.9 },
        horizon,
    }
}

fn lipschitz_sigma() -> Diffusion {
    Diffusion::SineModulated { base: 1.0, amplitude: 0.5, envelope: Envelope::Flat }
}

fn run_deterministic(model: &ModelSpec, grid: &SpaceTimeGrid, options: SolverOptions, init: Vec<f64>) -> Vec<f64> {
    let mut stepper = Stepper::new(model, grid, options).unwrap();
    let mut state = FieldState { values: init, step: 0, time: 0.0 };
    let zero = vec![0.0; grid.n_space];
    for _ in 0..grid.n_time {
        stepper.step(&mut state, &zero).unwrap();
    }
    state.values
}

fn heat_error(n: usize, scheme: Scheme, ratio: f64) -> f64 {
    let dx = 1.0 / n as f64;
    let m = heat_model(Diffusion::Additive { value: 0.0 }, Profile::SinePi { amplitude: 1.0 }, 0.25);
    let g = m.grid(n, ratio * dx * dx, scheme).unwrap();
    let u = run_deterministic(&m, &g, SolverOptions { scheme, flux: Flux::Central }, m.initial_field(&g));
    (0..=n)
        .map(|i| (u[i] - (-PI * PI * 0.25).exp() * (PI * g.x(i)).sin()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn heat_step_decays_the_first_eigenfunction() {
    for scheme in [Scheme::CrankNicolson, Scheme::BackwardEuler, Scheme::Explicit] {
        let ratio = if scheme == Scheme::Explicit { 0.25 } else { 1.0 };
        let coarse = heat_error(32, scheme, ratio);
        let fine = heat_error(64, scheme, ratio);
        assert!(fine < 5e-4, "{scheme:?}: {fine}");
        // O(dx² + dt) with dt ∝ dx²: the error drops by about four.
        assert!(coarse / fine > 3.5 && coarse / fine < 4.5, "{scheme:?}: {}", coarse / fine);
    }
}

/// Cole-Hopf solution of `u_t + u u_x = u_xx` from
/// `φ = 1 + c √(t₀/(t+t₀)) exp(-x²/4(t+t₀))`.
fn cole_hopf(t: f64, x: f64) -> f64 {
    let (c, t0) = (2.0, 0.25);
    let s = t + t0;
    let e = c * (t0 / s).sqrt() * (-x * x / (4.0 * s)).exp();
    x / s * e / (1.0 + e)
}

fn burgers_error(n: usize, flux: Flux) -> f64 {
    let m = ModelSpec {
        domain: Domain::WholeLine { half_width: 8.0 },
        drift: Drift::BurgersHalfSquare,
        diffusion: Diffusion::Additive { value: 0.0 },
        initial: InitialCondition { profile: Profile::Zero, hoelder_alpha: 1.0 },
        horizon: 0.5,
    };
    let dx = 16.0 / n as f64;
    let g = m.grid(n, dx * dx, Scheme::CrankNicolson).unwrap();
    let init: Vec<f64> = (0..=n).map(|i| if i == 0 || i == n { 0.0 } else { cole_hopf(0.0, g.x(i)) }).collect();
    let u = run_deterministic(&m, &g, SolverOptions { scheme: Scheme::CrankNicolson, flux }, init);
    (0..=n).map(|i| (u[i] - cole_hopf(0.5, g.x(i))).abs()).fold(0.0, f64::max)
}

#[test]
fn deterministic_burgers_matches_cole_hopf() {
    let (c1, c2) = (burgers_error(256, Flux::Central), burgers_error(512, Flux::Central));
    assert!(c2 < 5e-4, "{c2}");
    assert!(c1 / c2 > 3.0, "central order: {}", c1 / c2);
    let (u1, u2) = (burgers_error(256, Flux::Upwind), burgers_error(512, Flux::Upwind));
    assert!(u2 < 5e-3, "{u2}");
    assert!(u1 / u2 > 1.6, "upwind order: {}", u1 / u2);
}

#[test]
fn zero_drift_and_noise_conserve_mass_on_the_whole_line() {
    let m = ModelSpec {
        domain: Domain::WholeLine { half_width: 8.0 },
        drift: Drift::Zero,
        diffusion: Diffusion::Additive { value: 0.0 },
        initial: InitialCondition { profile: Profile::Gaussian { amplitude: 1.0, width: 0.5 }, hoelder_alpha: 1.0 },
        horizon: 0.5,
    };
    let g = m.grid(256, 1.0 / 256.0, Scheme::CrankNicolson).unwrap();
    let u0 = m.initial_field(&g);
    let u = run_deterministic(&m, &g, SolverOptions::default(), u0.clone());
    let (a, b): (f64, f64) = (u0.iter().sum(), u.iter().sum());
    assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
}

#[test]
fn ito_isometry_for_additive_noise() {
    let m = heat_model(Diffusion::Additive { value: 1.0 }, Profile::Zero, 0.125);
    let n = 64;
    let g = m.grid(n, 1.0 / (n * n) as f64, Scheme::CrankNicolson).unwrap();
    let t = g.time(g.n_time);
    let probes = [Probe::new(t, 0.5)];
    let replicas = 4000;
    let second: Vec<f64> = (0..replicas)
        .map(|r| {
            let tr = simulate(&m, &g, SolverOptions::default(), SeedSpec::solution(17, r), &probes, None).unwrap();
            tr.probe_values[0].powi(2)
        })
        .collect();
    let mean = second.iter().sum::<f64>() / replicas as f64;
    let var = second.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (replicas as f64 - 1.0);
    let se = (var / replicas as f64).sqrt();
    let theory = crate::kernels::time_integrated_weighted(&KernelSpec::dirichlet(), t, 0.5, |_| 1.0, &[]).unwrap();
    assert!((mean - theory).abs() < 3.0 * se, "{mean} vs {theory} (se {se})");
}

#[test]
fn same_seed_is_bit_identical() {
    let m = heat_model(lipschitz_sigma(), Profile::SinePi { amplitude: 1.0 }, 0.125);
    let g = m.grid(32, 1.0 / 1024.0, Scheme::CrankNicolson).unwrap();
    let probes = [Probe::new(0.0625, 0.5), Probe::new(0.125, 0.25), Probe::new(0.0, 0.5)];
    let a = simulate(&m, &g, SolverOptions::default(), SeedSpec::solution(3, 9), &probes, None).unwrap();
    let b = simulate(&m, &g, SolverOptions::default(), SeedSpec::solution(3, 9), &probes, None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.probe_values[2], 1.0);
    let c = simulate(&m, &g, SolverOptions::default(), SeedSpec::solution(3, 10), &probes, None).unwrap();
    assert_ne!(a, c);
}

#[test]
fn off_grid_probes_are_named() {
    let m = heat_model(lipschitz_sigma(), Profile::Zero, 0.125);
    let g = m.grid(32, 1.0 / 1024.0, Scheme::CrankNicolson).unwrap();
    let err = simulate(&m, &g, SolverOptions::default(), SeedSpec::solution(3, 9), &[Probe::new(0.0625, 0.3)], None)
        .unwrap_err();
    match err {
        Error::InvalidConfig(v) => assert!(v[0].contains("probe 0")),
        e => panic!("{e:?}"),
    }
}

#[test]
fn dirichlet_boundaries_stay_zero() {
    let mut m = heat_model(lipschitz_sigma(), Profile::SinePi { amplitude: 2.0 }, 1.0 / 16.0);
    m.drift = Drift::CappedBurgers { cap: 3.0 };
    let g = m.grid(32, 1.0 / 1024.0, Scheme::CrankNicolson).unwrap();
    let tr = simulate(&m, &g, SolverOptions::default(), SeedSpec::solution(1, 1), &[], Some(1)).unwrap();
    assert_eq!(tr.snapshots.len(), g.n_time + 1);
    for s in &tr.snapshots {
        assert_eq!(s.values[0], 0.0);
        assert_eq!(s.values[32], 0.0);
    }
}

#[test]
fn blow_up_is_reported() {
    let mut m = heat_model(Diffusion::Additive { value: 0.0 }, Profile::Zero, 1.0 / 64.0);
    m.drift = Drift::BurgersHalfSquare;
    let g = m.grid(16, 1.0 / 1024.0, Scheme::CrankNicolson).unwrap();
    let mut stepper = Stepper::new(&m, &g, SolverOptions::default()).unwrap();
    let mut state = FieldState { values: vec![1e200; 17], step: 0, time: 0.0 };
    state.values[0] = 0.0;
    state.values[16] = 0.0;
    let err = stepper.step(&mut state, &vec![0.0; 16]).unwrap_err();
    assert!(matches!(err, Error::BlowUp { .. }));
}

#[test]
fn free_step_function_matches_stepper() {
    let m = heat_model(lipschitz_sigma(), Profile::SinePi { amplitude: 1.0 }, 0.125);
    let g = m.grid(16, 1.0 / 256.0, Scheme::CrankNicolson).unwrap();
    let mut s = crate::noise::derive_stream(SeedSpec::solution(4, 0));
    let slice = crate::noise::sample_slice(&mut s, &g, 0).unwrap();
    let state = FieldState::initial(&m, &g);
    let next = step(&state, &m, &g, SolverOptions::default(), &slice).unwrap();
    let mut manual = state.clone();
    Stepper::new(&m, &g, SolverOptions::default()).unwrap().step(&mut manual, &slice.values).unwrap();
    assert_eq!(next, manual);
    assert_eq!(next.step, 1);
    assert_eq!(next.time, g.dt);
}

#[test]
fn frozen_copy_coincides_when_coefficients_ignore_the_field() {
    let m = heat_model(Diffusion::Additive { value: 0.7 }, Profile::SinePi { amplitude: 1.0 }, 0.25);
    let g = m.grid(32, 1.0 / 1024.0, Scheme::CrankNicolson).unwrap();
    let fam = simulate_frozen_family(&m, &g, SolverOptions::default(), SeedSpec::solution(8, 2), 0.25, &[1.0 / 64.0, 1.0 / 16.0])
        .unwrap();
    assert_eq!(fam.exact, fam.frozen[0]);
    assert_eq!(fam.exact, fam.frozen[1]);
}

#[test]
fn frozen_family_shares_the_true_path() {
    let mut m = heat_model(lipschitz_sigma(), Profile::SinePi { amplitude: 1.0 }, 0.25);
    m.drift = Drift::CappedBurgers { cap: 2.0 };
    let g = m.grid(32, 1.0 / 1024.0, Scheme::CrankNicolson).unwrap();
    let seed = SeedSpec::solution(8, 5);
    let eps = [1.0 / 1024.0, 1.0 / 32.0];
    let fam = simulate_frozen_family(&m, &g, SolverOptions::default(), seed, 0.25, &eps).unwrap();
    let probes: Vec<Probe> = (0..=32).map(|i| Probe::new(0.25, g.x(i))).collect();
    let path = simulate(&m, &g, SolverOptions::default(), seed, &probes, None).unwrap();
    assert_eq!(path.probe_values, fam.exact);
    let start: Vec<Probe> = (0..=32).map(|i| Probe::new(0.25 - 1.0 / 32.0, g.x(i))).collect();
    let early = simulate(&m, &g, SolverOptions::default(), seed, &start, None).unwrap();
    assert_eq!(early.probe_values, fam.start[1]);

    // One frozen step differs from the true step only through σ and g at the same field.
    let one_step: f64 = fam.exact.iter().zip(&fam.frozen[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let long: f64 = fam.exact.iter().zip(&fam.frozen[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert_eq!(one_step, 0.0);
    assert!(long > 0.0);
}

#[test]
fn frozen_window_must_be_aligned_and_short() {
    let m = heat_model(lipschitz_sigma(), Profile::Zero, 0.25);
    let g = m.grid(32, 1.0 / 1024.0, Scheme::CrankNicolson).unwrap();
    let seed = SeedSpec::solution(8, 5);
    assert!(simulate_frozen(&m, &g, SolverOptions::default(), seed, 0.25, 0.0001).is_err());
    assert!(simulate_frozen(&m, &g, SolverOptions::default(), seed, 0.25, 0.125).is_err());
    assert!(simulate_frozen(&m, &g, SolverOptions::default(), seed, 0.2501, 0.01).is_err());
}

#[test]
fn conditional_variance_reference_cases() {
    let spec = KernelSpec::whole_line();
    let mut m = ModelSpec {
        domain: Domain::WholeLine { half_width: 4.0 },
        drift: Drift::Zero,
        diffusion: Diffusion::Additive { value: 1.0 },
        initial: InitialCondition { profile: Profile::Zero, hoelder_alpha: 1.0 },
        horizon: 0.25,
    };
    let g = m.grid(128, 1.0 / 1024.0, Scheme::CrankNicolson).unwrap();
    let field = FieldState { values: vec![0.3; 129], step: 192, time: 0.1875 };
    let eps = 0.0625;
    let v = conditional_variance(&m, &g, &field, 0.25, eps, 0.0, &spec).unwrap();
    assert!((v - (eps / (2.0 * PI)).sqrt()).abs() < 1e-9 * v);

    m.diffusion = Diffusion::Additive { value: 0.0 };
    assert_eq!(conditional_variance(&m, &g, &field, 0.25, eps, 0.0, &spec).unwrap(), 0.0);

    let early = FieldState { time: 0.1, ..field.clone() };
    assert!(conditional_variance(&m, &g, &early, 0.25, eps, 0.0, &spec).is_err());
}

#[test]
fn conditional_variance_respects_the_floor() {
    let m = heat_model(lipschitz_sigma(), Profile::SinePi { amplitude: 1.0 }, 0.25);
    let g = m.grid(32, 1.0 / 1024.0, Scheme::CrankNicolson).unwrap();
    let spec = KernelSpec::dirichlet();
    let k = m.diffusion.lower_bound(&m.domain);
    let fam = simulate_frozen_family(&m, &g, SolverOptions::default(), SeedSpec::solution(2, 2), 0.25, &[1.0 / 16.0])
        .unwrap();
    let field = FieldState { values: fam.start[0].clone(), step: 192, time: 0.1875 };
    for &x in &[0.25, 0.5, 0.75] {
        let v = conditional_variance(&m, &g, &field, 0.25, 1.0 / 16.0, x, &spec).unwrap();
        let floor = crate::kernels::time_integrated_l2(&spec, 0.25, 1.0 / 16.0, x).unwrap();
        assert!(v / floor >= k, "{}", v / floor);
    }
}

/// Coarse increments are sums of the fine ones they contain.
fn aggregate(fine: &[Vec<f64>], factor: usize) -> Vec<Vec<f64>> {
    let steps = factor * factor;
    fine.chunks(steps)
        .map(|block| {
            let cells = block[0].len() / factor;
            (0..cells).map(|j| block.iter().map(|s| s[j * factor..(j + 1) * factor].iter().sum::<f64>()).sum()).collect()
        })
        .collect()
}

#[test]
fn refinement_with_coupled_noise_converges() {
    let m = heat_model(lipschitz_sigma(), Profile::SinePi { amplitude: 1.0 }, 0.125);
    let finest = m.grid(32, 1.0 / 1024.0, Scheme::CrankNicolson).unwrap();
    let grids = [
        m.grid(8, 1.0 / 64.0, Scheme::CrankNicolson).unwrap(),
        m.grid(16, 1.0 / 256.0, Scheme::CrankNicolson).unwrap(),
        finest,
    ];
    let replicas = 4000;
    let mut probes = vec![vec![0.0; replicas]; 3];
    for r in 0..replicas {
        let mut stream = crate::noise::derive_stream(SeedSpec::new(21, r as u64, StreamTag::Solution));
        let fine: Vec<Vec<f64>> = (0..finest.n_time)
            .map(|k| crate::noise::sample_slice(&mut stream, &finest, k).unwrap().values)
            .collect();
        for (level, g) in grids.iter().enumerate() {
            let factor = 1 << (2 - level);
            let slices = if factor == 1 { fine.clone() } else { aggregate(&fine, factor) };
            let mut stepper = Stepper::new(&m, g, SolverOptions::default()).unwrap();
            let mut state = FieldState::initial(&m, g);
            for s in &slices {
                stepper.step(&mut state, s).unwrap();
            }
            probes[level][r] = state.values[g.node_of(0.5).unwrap()];
        }
    }
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    let stats = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        (mean, v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64)
    };
    let (d1, d2) = (gap(&probes[0], &probes[1]), gap(&probes[1], &probes[2]));
    assert!(d2 < d1, "pathwise gaps {d1} then {d2}");
    let s: Vec<(f64, f64)> = probes.iter().map(|p| stats(p)).collect();
    assert!((s[1].0 - s[2].0).abs() < (s[0].0 - s[1].0).abs());
    assert!((s[1].1 - s[2].1).abs() < (s[0].1 - s[1].1).abs());
}
