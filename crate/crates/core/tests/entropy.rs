use nalgebra::DMatrix;
use qsd_entropy::coherence::{ix, CoherenceState, StatePreset, N};
use qsd_entropy::dynamics::noise::WienerSource;
use qsd_entropy::dynamics::{euler_step, CompiledSde, LindbladModel, Mat15, SzCompact};
use qsd_entropy::entropy::{
    accumulate, build_coupling, corrected_derivative, entropy_increment_1d, entropy_increment_general, EntropyAccumulator,
    EntropyEngine, EntropyError, StepInput, Tolerances,
};

fn diffusion(model: &LindbladModel, s: &[f64; N]) -> Mat15 {
    CompiledSde::new(model).evaluate(&CoherenceState::new(*s)).diffusion()
}

/// Runs a short Euler trajectory and returns its final state.
fn evolved(model: &LindbladModel, start: StatePreset, steps: usize, seed: u64) -> [f64; N] {
    let sde = CompiledSde::new(model);
    let k = sde.n_channels();
    let mut src = WienerSource::new(seed, 0, k, 1e-4);
    let mut dw = vec![0.0; k];
    let mut s = start.coherence();
    for _ in 0..steps {
        src.fill(&mut dw);
        s = euler_step(&s, &sde.evaluate(&s), 1e-4, &dw);
    }
    s.s
}

#[test]
fn case1_singlet_coupling() {
    let model = LindbladModel::case1(1.0, 1.0);
    for s in [StatePreset::Singlet.coherence().s, evolved(&model, StatePreset::Singlet, 3000, 1)] {
        let c = build_coupling(&diffusion(&model, &s), &[ix::S12], &[ix::S3, ix::S15], &Tolerances::default()).unwrap();
        assert!((c.r[(0, 0)] + 1.0).abs() < 1e-12);
        assert!(c.r[(1, 0)].abs() < 1e-12);
    }
}

#[test]
fn coupling_without_spectators_is_empty() {
    let d = Mat15::from_diagonal(&nalgebra::SVector::<f64, N>::from_fn(|i, _| 1.0 + i as f64));
    let c = build_coupling(&d, &[0, 1], &[], &Tolerances::default()).unwrap();
    assert_eq!(c.r.shape(), (0, 2));
    let partials = vec![DMatrix::from_element(2, 2, 3.0), DMatrix::from_element(2, 2, 5.0)];
    assert_eq!(corrected_derivative(&partials, &c, 1), partials[1]);
}

#[test]
fn total_sz_coupling_is_the_noise_ratio() {
    let model = LindbladModel::total_sz(1.0);
    for start in [StatePreset::SxPlusPlus, StatePreset::CaseEState, StatePreset::CaseBSuperposition] {
        let s = evolved(&model, start, 2000, 2);
        let tol = Tolerances::default();
        let d = diffusion(&model, &s);
        let c = build_coupling(&d, &[ix::S3], &[ix::S12, ix::S15], &tol).unwrap();
        let SzCompact { kappa, nu, gamma } = SzCompact::new(s[ix::S3], s[ix::S12], s[ix::S15]);
        assert!((c.r[(0, 0)] - kappa / nu).abs() < 1e-9 * (1.0 + (kappa / nu).abs()));
        assert!((c.r[(1, 0)] - gamma / nu).abs() < 1e-9 * (1.0 + (gamma / nu).abs()));

        let group = [ix::S3, ix::S12, ix::S15];
        let block = DMatrix::from_fn(3, 3, |i, j| d[(group[i], group[j])]);
        for row in c.null_basis.row_iter() {
            let v = row.transpose();
            assert!((&block * v).norm() <= tol.null_tol * block.norm());
        }
    }
}

#[test]
fn one_dimensional_increment_worked_values() {
    assert_eq!(entropy_increment_1d(0.7, 0.0, 0.0, 0.01, 1e-4, 0.0).unwrap(), 0.0);
    assert!(matches!(entropy_increment_1d(0.0, 1.0, 0.0, 0.01, 1e-4, 0.0), Err(EntropyError::SingularD(_))));
    assert!(matches!(entropy_increment_1d(f64::NAN, 1.0, 0.0, 0.01, 1e-4, 0.0), Err(EntropyError::NonFinite)));
    let (d, g, h, dx, dt) = (0.5, 0.3, -0.2, 0.01, 1e-4);
    let want = -(g / d) * dx - h * dt + g * g / d * dt;
    assert!((entropy_increment_1d(d, g, h, dx, dt, 0.0).unwrap() - want).abs() < 1e-16);
}

#[test]
fn general_increment_reduces_to_one_dimension() {
    let model = LindbladModel::total_sz(1.0);
    let sde = CompiledSde::new(&model);
    let engine = EntropyEngine::new(&sde, &[ix::S3], &[ix::S12, ix::S15], Tolerances::default()).unwrap();
    for seed in 0..20 {
        let s = evolved(&model, StatePreset::SxPlusPlus, 500, seed);
        let red = engine.reduce(&s).unwrap();
        let (dx, dt) = (0.004, 1e-4);
        let general = entropy_increment_general(&red, &[dx], dt, 0.0).unwrap();
        let one = entropy_increment_1d(red.dred[(0, 0)], red.grad[0][(0, 0)], red.hess[0][0][(0, 0)], dx, dt, 0.0).unwrap();
        assert!((general - one).abs() <= 1e-12 * one.abs().max(1e-12));
    }
}

fn step_along(s: &[f64; N], dyn_idx: &[usize], spec_idx: &[usize], r: &DMatrix<f64>, m: usize, h: f64) -> [f64; N] {
    let mut out = *s;
    out[dyn_idx[m]] += h;
    for (l, &sp) in spec_idx.iter().enumerate() {
        out[sp] += h * r[(l, m)];
    }
    out
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

#[test]
fn case2_reduction_matches_finite_differences() {
    let model = LindbladModel::case2(1.0, 1.0);
    let sde = CompiledSde::new(&model);
    let (dyn_idx, spec_idx) = ([ix::S1, ix::S12], [ix::S13]);
    let engine = EntropyEngine::new(&sde, &dyn_idx, &spec_idx, Tolerances::default()).unwrap();
    let h = 1e-6;
    for seed in 0..10 {
        let s = evolved(&model, StatePreset::Singlet, 1500, seed);
        let red = engine.reduce(&s).unwrap();

        // Reduced D is ½ B_dyn B_dynᵀ and matches the printed 2×2 form.
        let (s1, s12, s13) = (s[ix::S1], s[ix::S12], s[ix::S13]);
        let d11 = 0.5 * ((s1 * s12 - s13).powi(2) + (1.0 - s1 * s1).powi(2));
        assert!((red.dred[(0, 0)] - d11).abs() < 1e-12);

        for m in 0..2 {
            let plus = engine.reduce(&step_along(&s, &dyn_idx, &spec_idx, &red.r, m, h)).unwrap();
            let minus = engine.reduce(&step_along(&s, &dyn_idx, &spec_idx, &red.r, m, -h)).unwrap();
            let fd = (&plus.dred - &minus.dred) / (2.0 * h);
            assert!(max_abs(&(&fd - &red.grad[m])) < 1e-6 * (1.0 + max_abs(&red.grad[m])));
            let fd_a = (&plus.ared - &minus.ared) / (2.0 * h);
            for i in 0..2 {
                assert!((fd_a[i] - red.dadx[(i, m)]).abs() < 1e-6);
            }
            for k in 0..2 {
                let fd2 = (&plus.grad[k] - &minus.grad[k]) / (2.0 * h);
                assert!(
                    max_abs(&(&fd2 - &red.hess[m][k])) < 1e-5 * (1.0 + max_abs(&red.hess[m][k])),
                    "seed {seed}, k {k}, m {m}"
                );
            }
        }

        // The coupling-corrected derivative equals the chain rule on the
        // plain partials.
        let group: Vec<usize> = dyn_idx.iter().chain(&spec_idx).copied().collect();
        let partials: Vec<DMatrix<f64>> = group
            .iter()
            .map(|&g| {
                let mut p = s;
                let mut q = s;
                p[g] += h;
                q[g] -= h;
                (engine.reduce(&p).unwrap().dred - engine.reduce(&q).unwrap().dred) / (2.0 * h)
            })
            .collect();
        let c = build_coupling(&diffusion(&model, &s), &dyn_idx, &spec_idx, &Tolerances::default()).unwrap();
        for m in 0..2 {
            let chain = corrected_derivative(&partials, &c, m);
            assert!(max_abs(&(&chain - &red.grad[m])) < 1e-6 * (1.0 + max_abs(&red.grad[m])));
        }
    }
}

#[test]
fn engine_rejects_open_and_invalid_partitions() {
    let sde = CompiledSde::new(&LindbladModel::total_sz(1.0));
    let tol = Tolerances::default();
    assert!(matches!(EntropyEngine::new(&sde, &[ix::S3], &[ix::S12], tol), Err(EntropyError::NotClosed { .. })));
    assert!(matches!(EntropyEngine::new(&sde, &[], &[ix::S3], tol), Err(EntropyError::InvalidPartition)));
    assert!(matches!(EntropyEngine::new(&sde, &[ix::S3], &[ix::S3], tol), Err(EntropyError::InvalidPartition)));
    assert!(matches!(EntropyEngine::new(&sde, &[N], &[], tol), Err(EntropyError::InvalidPartition)));
}

#[test]
fn engine_flags_collapsed_states() {
    let sde = CompiledSde::new(&LindbladModel::total_sz(1.0));
    let engine = EntropyEngine::new(&sde, &[ix::S3], &[ix::S12, ix::S15], Tolerances::default()).unwrap();
    let up = StatePreset::TripletSzPlus.coherence().s;
    assert!(matches!(engine.increment(&up, &[0.0], 1e-4), Err(EntropyError::SingularD(_))));
}

#[test]
fn spectator_correction_changes_the_increment() {
    let model = LindbladModel::case1(1.0, 1.0);
    let sde = CompiledSde::new(&model);
    let engine = EntropyEngine::new(&sde, &[ix::S12], &[ix::S3, ix::S15], Tolerances::default()).unwrap();
    let bare = engine.clone().without_correction();
    let s = evolved(&model, StatePreset::Singlet, 2000, 5);
    let a = engine.increment(&s, &[0.0], 1e-4).unwrap();
    let b = bare.increment(&s, &[0.0], 1e-4).unwrap();
    assert!((a - b).abs() > 1e-6);
}

#[test]
fn accumulation_sums_and_stops_at_exclusion() {
    let acc = accumulate(std::iter::empty(), |_| Ok(1.0), 1);
    assert_eq!(acc.value, 0.0);
    assert!(acc.excluded.is_none());

    let s = [0.0; N];
    let steps: Vec<StepInput> = (0..10).map(|i| StepInput { t: i as f64, s: &s, dx: &[], dw: &[], dt: 1.0 }).collect();
    let acc = accumulate(steps.clone(), |st| Ok(st.t), 2);
    assert_eq!(acc.value, 45.0);
    assert_eq!(acc.series.len(), 6);
    assert_eq!(acc.series[5], (10.0, 45.0));

    let acc = accumulate(steps, |st| if st.t < 4.0 { Ok(1.0) } else { Err(EntropyError::SingularD(0.0)) }, 1);
    assert_eq!(acc.value, 4.0);
    assert_eq!(acc.excluded.as_ref().unwrap().t, 4.0);
    assert_eq!(acc.series.last(), Some(&(4.0, 4.0)));

    let mut acc = EntropyAccumulator::new();
    acc.record(0.0, Ok(f64::INFINITY));
    assert!(acc.is_excluded());
}
