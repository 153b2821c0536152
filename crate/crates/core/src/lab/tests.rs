use std::fs;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::energies::EnergySpec;
use crate::error::Error;
use crate::integrator::{IntegratorKind, NlsParams};
use crate::spectral::{sobolev_norm, Grid, GridSpec};

fn grid(dim: usize, n: usize) -> Arc<Grid> {
    Grid::new(GridSpec::cube(dim, n).unwrap()).unwrap()
}

fn random(s: f64, amplitude: f64, seed: u64) -> InitSpec {
    InitSpec::RandomSobolev {
        s,
        amplitude,
        seed,
        norm_s: None,
        background: 0.0,
    }
}

fn config(dir: &std::path::Path, init: InitSpec, n: usize, dt: f64, t_end: f64) -> RunConfig {
    let mut c = RunConfig::new(GridSpec::cube(2, n).unwrap(), NlsParams::new(2, 3.0, dt, t_end), init);
    c.output_dir = Some(dir.to_path_buf());
    c
}

#[test]
fn plane_wave_init() {
    let g = grid(2, 16);
    let u = make_initial(
        &InitSpec::PlaneWave {
            k: vec![1, -2],
            amplitude: 0.7,
            phase: 0.3,
        },
        &g,
    )
    .unwrap();
    let want = Complex64::from_polar(0.7, 0.3);
    for (idx, v) in u.to_physical().iter().enumerate() {
        let x = g.point(idx);
        let expect = want * Complex64::from_polar(1.0, x[0] - 2.0 * x[1]);
        assert!((v - expect).norm() < 1e-13);
    }
}

#[test]
fn random_sobolev_hits_requested_norm() {
    for (dim, n, s) in [(1, 64, 0.5), (2, 32, 2.0), (3, 16, 1.0)] {
        let g = grid(dim, n);
        let u = make_initial(&random(s, 0.8, 5), &g).unwrap();
        assert!((sobolev_norm(&u, s) - 0.8).abs() <= 1e-12);
        let mask = g.dealias_mask();
        for (i, c) in u.coeffs().iter().enumerate() {
            if !mask[i] {
                assert_eq!(*c, Complex64::new(0.0, 0.0));
            }
        }
    }
}

#[test]
fn norm_index_and_background() {
    let g = grid(2, 32);
    let spec = InitSpec::RandomSobolev {
        s: 2.0,
        amplitude: 1.0,
        seed: 3,
        norm_s: Some(1.0),
        background: 0.5,
    };
    let u = make_initial(&spec, &g).unwrap();
    let bare = make_initial(&spec.clone_with_background(0.0), &g).unwrap();
    assert!((sobolev_norm(&bare, 1.0) - 1.0).abs() <= 1e-12);
    let diff = u.sub(&bare).unwrap();
    assert!((diff.coeff_at(&[0, 0]).unwrap() - Complex64::new(0.5, 0.0)).norm() < 1e-14);
    assert!((sobolev_norm(&diff, 0.0) - 0.5).abs() < 1e-14);
}

trait WithBackground {
    fn clone_with_background(&self, b: f64) -> InitSpec;
}

impl WithBackground for InitSpec {
    fn clone_with_background(&self, b: f64) -> InitSpec {
        let mut out = self.clone();
        if let InitSpec::RandomSobolev { background, .. } = &mut out {
            *background = b;
        }
        out
    }
}

#[test]
fn same_seed_same_coefficients() {
    let g = grid(2, 32);
    let a = make_initial(&random(2.0, 1.0, 42), &g).unwrap();
    let b = make_initial(&random(2.0, 1.0, 42), &g).unwrap();
    let c = make_initial(&random(2.0, 1.0, 43), &g).unwrap();
    assert_eq!(a.coeffs(), b.coeffs());
    assert_ne!(a.coeffs(), c.coeffs());
}

#[test]
fn refinement_keeps_coarse_modes() {
    // Unnormalized mode draws agree; after rescaling they differ by one factor.
    let coarse = make_initial(&random(2.0, 1.0, 9), &grid(2, 32)).unwrap();
    let fine = make_initial(&random(2.0, 1.0, 9), &grid(2, 64)).unwrap();
    let ratio = fine.coeff_at(&[1, 0]).unwrap() / coarse.coeff_at(&[1, 0]).unwrap();
    assert!(ratio.im.abs() < 1e-12 && ratio.re > 0.0);
    for k in [[0, 0], [3, -2], [-10, 7], [5, 10]] {
        let c = coarse.coeff_at(&k).unwrap();
        let f = fine.coeff_at(&k).unwrap();
        assert!((f - c * ratio).norm() <= 1e-12 * c.norm().max(1e-300), "{k:?}");
    }
}

#[test]
fn gaussian_bump_is_periodic_and_centered() {
    let g = grid(2, 64);
    let u = make_initial(
        &InitSpec::GaussianBump {
            width: 0.4,
            amplitude: 2.0,
            center: Some(vec![0.0, 0.0]),
        },
        &g,
    )
    .unwrap();
    let v = u.to_physical();
    assert!((v[0].re - 2.0).abs() < 1e-12);
    // Points at x = h and x = L − h are equidistant from the origin.
    let n = 64;
    assert!((v[1].re - v[n - 1].re).abs() < 1e-12);
    assert!((v[n].re - v[n * (n - 1)].re).abs() < 1e-12);
}

#[test]
fn init_validation() {
    let g = grid(2, 16);
    let bad = [
        InitSpec::PlaneWave {
            k: vec![1],
            amplitude: 1.0,
            phase: 0.0,
        },
        InitSpec::PlaneWave {
            k: vec![1, 1],
            amplitude: 0.0,
            phase: 0.0,
        },
        random(1.0, -1.0, 0),
        InitSpec::GaussianBump {
            width: 0.0,
            amplitude: 1.0,
            center: None,
        },
        InitSpec::Shell {
            k_min: 3.0,
            k_max: 2.0,
            amplitude: 1.0,
            seed: 0,
            norm_s: 1.0,
        },
    ];
    for spec in bad {
        assert!(make_initial(&spec, &g).unwrap_err().is_validation(), "{spec:?}");
    }
    let empty = InitSpec::Shell {
        k_min: 100.0,
        k_max: 200.0,
        amplitude: 1.0,
        seed: 0,
        norm_s: 1.0,
    };
    assert!(make_initial(&empty, &g).is_err());
}

#[test]
fn shell_support_and_norm() {
    let g = grid(2, 64);
    let u = make_initial(
        &InitSpec::Shell {
            k_min: 4.0,
            k_max: 6.0,
            amplitude: 1.0,
            seed: 1,
            norm_s: 1.0,
        },
        &g,
    )
    .unwrap();
    assert!((sobolev_norm(&u, 1.0) - 1.0).abs() < 1e-12);
    for (i, c) in u.coeffs().iter().enumerate() {
        let q = g.ksq()[i].sqrt();
        if *c != Complex64::new(0.0, 0.0) {
            assert!((4.0..=6.0).contains(&q));
        }
    }
}

#[test]
fn init_toml_shapes() {
    let s: InitSpec = toml::from_str("kind = \"random_sobolev\"\ns = 2\namplitude = 1\nseed = 7\n").unwrap();
    assert_eq!(s, random(2.0, 1.0, 7));
    assert!(toml::from_str::<InitSpec>("kind = \"plane_wave\"\nk = [1]\namplitude = 1\nextra = 2\n").is_err());
    let shell: InitSpec = toml::from_str("kind = \"shell\"\nk_min = 1\nk_max = 2\namplitude = 1\nseed = 0\n").unwrap();
    assert_eq!(shell.seed(), Some(0));
    assert_eq!(shell.with_seed(5).seed(), Some(5));
}

const EXAMPLE: &str = r#"
cadence_steps = 5
[grid]
n = [16, 16]
[params]
dim = 2
p = 3
dt = 0.01
t_end = 0.1
[init]
kind = "plane_wave"
k = [1, 0]
amplitude = 0.5
[observables]
sobolev = [1, 2]
[[observables.energies]]
kind = "even"
p = 3
"#;

#[test]
fn config_toml_roundtrip_and_validation() {
    let c = RunConfig::from_toml_str(EXAMPLE).unwrap();
    assert_eq!(c.cadence_steps, 5);
    assert!(c.deterministic);
    assert_eq!(c.observables.columns(), ["mass", "hamiltonian", "h1", "h2", "E2"]);
    assert_eq!(RunConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);

    let cases = [
        (EXAMPLE.replace("dim = 2", "dim = 3"), "params.dim"),
        (EXAMPLE.replace("cadence_steps = 5", "cadence_steps = 0"), "cadence_steps"),
        (EXAMPLE.replace("kind = \"even\"\np = 3", "kind = \"even\"\np = 5"), "observables.energies.p"),
        (EXAMPLE.replace("sobolev = [1, 2]", "sobolev = [1, 1]"), "observables"),
        (EXAMPLE.replace("amplitude = 0.5", "amplitude = -0.5"), "init.amplitude"),
    ];
    for (text, field) in cases {
        match RunConfig::from_toml_str(&text) {
            Err(Error::Invalid { field: f, .. }) => assert_eq!(f, field),
            other => panic!("{field}: {other:?}"),
        }
    }
    let unknown = format!("{EXAMPLE}\n[bogus]\nx = 1\n");
    assert!(matches!(RunConfig::from_toml_str(&unknown), Err(Error::Format { .. })));
}

#[test]
fn zero_horizon_writes_manifest_and_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let init = InitSpec::PlaneWave {
        k: vec![1, 0],
        amplitude: 0.5,
        phase: 0.0,
    };
    let out = run_experiment(&config(dir.path(), init, 16, 0.01, 0.0)).unwrap();
    assert_eq!(out.status, RunStatus::Completed);
    assert_eq!(out.records_written, 1);
    let m = Manifest::read(dir.path()).unwrap();
    assert_eq!(m.format, MANIFEST_FORMAT);
    assert_eq!(m.last_step, Some(0));
    assert!(m.wall_clock.is_none());
    assert_eq!(m.identities[0].derivative, "0");
    assert_eq!(m.identities[1].derivative, "0");
    let recs = read_series(dir.path()).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!((recs[0].step, recs[0].t), (0, 0.0));
    assert_eq!(recs[0].values.len(), m.columns.len());
}

#[test]
fn plane_wave_norms_stay_constant() {
    let dir = tempfile::tempdir().unwrap();
    let init = InitSpec::PlaneWave {
        k: vec![2, -1],
        amplitude: 0.6,
        phase: 0.2,
    };
    let mut c = config(dir.path(), init, 32, 1e-3, 0.5);
    c.cadence_steps = 50;
    c.observables.sobolev = vec![0.0, 1.0, 2.0, 3.5];
    c.observables.energies = vec![EnergySpec::even(1, 3.0), EnergySpec::odd(3.0)];
    run_experiment(&c).unwrap();
    let recs = read_series(dir.path()).unwrap();
    assert_eq!(recs.len(), 11);
    let xi2 = 5.0f64;
    for s in [0.0, 1.0, 2.0, 3.5] {
        let want = 0.6 * (1.0 + xi2).powf(s / 2.0);
        for (_, v) in column(&recs, &sobolev_column(s)).unwrap() {
            assert!((v - want).abs() <= 1e-10 * want, "h{s}: {v} vs {want}");
        }
    }
    for name in ["E2", "E3", "mass", "hamiltonian"] {
        let col = column(&recs, name).unwrap();
        for (_, v) in &col {
            assert!((v - col[0].1).abs() <= 1e-10 * col[0].1.abs());
        }
    }
}

fn random_config(dir: &std::path::Path) -> RunConfig {
    let mut c = config(dir, random(3.0, 0.5, 17), 16, 0.01, 0.4);
    c.cadence_steps = 4;
    c.observables.energies = vec![EnergySpec::even(1, 3.0)];
    c
}

#[test]
fn deterministic_reruns_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&random_config(a.path())).unwrap();
    // Rerun from the manifest echo into a fresh directory.
    let mut c = load_config(&a.path().join(MANIFEST_FILE)).unwrap();
    c.output_dir = Some(b.path().to_path_buf());
    run_experiment(&c).unwrap();
    let sa = fs::read(a.path().join(SERIES_FILE)).unwrap();
    let sb = fs::read(b.path().join(SERIES_FILE)).unwrap();
    assert!(!sa.is_empty());
    assert_eq!(sa, sb);
}

#[test]
fn interrupted_and_resumed_run_matches_uninterrupted() {
    let whole = tempfile::tempdir().unwrap();
    let split = tempfile::tempdir().unwrap();
    run_experiment(&random_config(whole.path())).unwrap();

    let c = random_config(split.path());
    let first = run_with_options(
        &c,
        &RunOptions {
            resume: false,
            stop_at_step: Some(17),
        },
    )
    .unwrap();
    assert_eq!(first.status, RunStatus::Interrupted);
    assert_eq!(first.last_step, Some(20));
    // A torn trailing line from a crash is discarded on resume.
    let series = split.path().join(SERIES_FILE);
    let mut text = fs::read_to_string(&series).unwrap();
    text.push_str("{\"step\":24,\"t\":0.2");
    fs::write(&series, text).unwrap();

    let second = resume_experiment(split.path()).unwrap();
    assert_eq!(second.status, RunStatus::Completed);
    assert_eq!(second.last_step, Some(40));
    assert_eq!(
        fs::read(whole.path().join(SERIES_FILE)).unwrap(),
        fs::read(&series).unwrap()
    );
    // Resuming a completed run does nothing.
    assert_eq!(resume_experiment(split.path()).unwrap().records_written, 0);
}

#[test]
fn non_deterministic_mode_adds_timestamps_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = random_config(dir.path());
    c.deterministic = false;
    run_experiment(&c).unwrap();
    let m = Manifest::read(dir.path()).unwrap();
    let w = m.wall_clock.unwrap();
    assert!(w.finished_unix_ms.unwrap() >= w.started_unix_ms);
}

#[test]
fn non_finite_observable_aborts_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let init = InitSpec::PlaneWave {
        k: vec![0, 0],
        amplitude: 1e160,
        phase: 0.0,
    };
    let err = run_experiment(&config(dir.path(), init, 8, 0.01, 0.1)).unwrap_err();
    let Error::NonFinite { step, path: Some(path), .. } = &err else {
        panic!("{err:?}")
    };
    assert_eq!(*step, 0);
    assert!(!err.is_validation());
    let d: Diagnostic = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(d.values["mass"], None);
    assert_eq!(d.last_good_step, None);
    let m = Manifest::read(dir.path()).unwrap();
    assert_eq!(m.status, RunStatus::Failed);
    assert_eq!(m.diagnostic.as_deref(), Some(DIAGNOSTIC_FILE));
}

#[test]
fn checkpoint_roundtrip_and_corruption() {
    let g = grid(2, 8);
    let u = crate::test_util::random_field(&g, 1, 1.0);
    let ck = Checkpoint {
        step: 12,
        t: 0.12,
        n: vec![8, 8],
        coeffs: u.coeffs().to_vec(),
    };
    let bytes = ck.encode();
    assert_eq!(Checkpoint::decode(&bytes).unwrap(), ck);
    for cut in [0, 7, 16, bytes.len() - 1] {
        assert!(Checkpoint::decode(&bytes[..cut]).is_err());
    }
    let mut flipped = bytes.clone();
    flipped[40] ^= 1;
    assert!(Checkpoint::decode(&flipped).is_err());
}

#[test]
fn series_parsing_errors_name_the_line() {
    let good = Record {
        step: 1,
        t: 0.5,
        values: [("mass".to_string(), 2.0)].into_iter().collect(),
    };
    let line = good.to_line();
    assert_eq!(line, "{\"step\":1,\"t\":0.5,\"mass\":2.0}\n");
    assert_eq!(parse_series(&line).unwrap(), vec![good]);
    let text = format!("{line}not json\n");
    let err = parse_series(&text).unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn report_on_plane_wave_run() {
    let dir = tempfile::tempdir().unwrap();
    let init = InitSpec::PlaneWave {
        k: vec![1, 1],
        amplitude: 0.5,
        phase: 0.0,
    };
    let mut c = config(dir.path(), init, 16, 0.01, 3.0);
    c.cadence_steps = 5;
    run_experiment(&c).unwrap();
    let r = write_report(dir.path(), &FitOptions::default()).unwrap();
    assert_eq!(r.fits.len(), 2);
    for f in &r.fits {
        let fit = f.fit.as_ref().unwrap();
        assert!(fit.exponent_or_rate.abs() < 1e-9);
        assert!(fit.within_envelope);
        assert_eq!(f.envelope.as_ref().unwrap().model, GrowthModel::Polynomial);
        assert_eq!(f.sensitivity.len(), SENSITIVITY_FRACTIONS.len());
    }
    assert_eq!(r.fits[1].envelope.as_ref().unwrap().exponent, Some(1.0));
    assert!(r.h1_bound.as_ref().unwrap().holds);
    assert!(r.columns["mass"].max_relative_drift < 1e-13);
    let json = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(json, r.to_json());
    assert!(dir.path().join(PLOTS_DIR).join("h2.svg").exists());
    // Reports are a pure function of the run directory.
    assert_eq!(write_report(dir.path(), &FitOptions::default()).unwrap().to_json(), json);
}

#[test]
fn report_records_fit_errors_instead_of_failing() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        InitSpec::PlaneWave {
            k: vec![1, 0],
            amplitude: 0.5,
            phase: 0.0,
        },
        16,
        0.01,
        0.05,
    );
    run_experiment(&c).unwrap();
    let r = write_report(dir.path(), &FitOptions::default()).unwrap();
    assert!(r.fits.iter().all(|f| f.fit.is_none() && f.error.is_some()));
}

#[test]
fn h1_bound_holds_on_random_run() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&random_config(dir.path())).unwrap();
    let recs = read_series(dir.path()).unwrap();
    let m = Manifest::read(dir.path()).unwrap();
    let r = build_report(&m, &recs, &FitOptions::default()).unwrap();
    let b = r.h1_bound.unwrap();
    assert!(b.holds, "{b:?}");
}

#[test]
fn ensemble_members_are_independent_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = random_config(dir.path());
    c.params.t_end = 0.08;
    let outs = run_ensemble(&c, 3, 2).unwrap();
    assert_eq!(outs.len(), 3);
    let series: Vec<Vec<u8>> = outs
        .iter()
        .map(|o| fs::read(o.as_ref().unwrap().dir.join(SERIES_FILE)).unwrap())
        .collect();
    assert_ne!(series[0], series[1]);
    let solo = run_experiment(&ensemble_member(&c, 1).unwrap()).unwrap();
    assert_eq!(fs::read(solo.dir.join(SERIES_FILE)).unwrap(), series[1]);
    let plane = config(
        dir.path(),
        InitSpec::PlaneWave {
            k: vec![1, 0],
            amplitude: 1.0,
            phase: 0.0,
        },
        8,
        0.1,
        0.1,
    );
    assert!(run_ensemble(&plane, 2, 1).unwrap_err().is_validation());
}

#[test]
fn convergence_orders() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), random(3.0, 1.0, 4), 32, 0.01, 0.5);
    let strang = convergence_study(&c, &[0.02, 0.01, 0.005]).unwrap();
    let order = strang.hamiltonian.order().unwrap();
    assert!((order - 2.0).abs() <= 0.2, "{strang:?}");
    assert!(matches!(strang.mass, Slope::Exact { .. }), "{strang:?}");

    // The integrating-factor error constant grows with the largest |ξ|², so
    // the fourth-order regime needs dt·max|ξ|² well below one.
    let mut c = config(dir.path(), random(3.0, 1.0, 4), 16, 0.01, 0.5);
    c.params.integrator = IntegratorKind::Rk4;
    let rk4 = convergence_study(&c, &[0.02, 0.01, 0.005]).unwrap();
    let order = rk4.hamiltonian.order().unwrap();
    assert!((order - 4.0).abs() <= 0.4, "{rk4:?}");

    let mut pw = config(
        dir.path(),
        InitSpec::PlaneWave {
            k: vec![1, 2],
            amplitude: 0.8,
            phase: 0.0,
        },
        16,
        0.01,
        0.5,
    );
    let exact = convergence_study(&pw, &[0.02, 0.01, 0.005]).unwrap();
    assert!(matches!(exact.hamiltonian, Slope::Exact { .. }), "{exact:?}");
    pw.params.dt = 0.01;
    assert!(matches!(
        convergence_study(&pw, &[0.02, 0.01]),
        Err(Error::InsufficientData(_))
    ));
    assert!(convergence_study(&pw, &[0.03, 0.01, 0.005]).unwrap_err().is_validation());
}

#[test]
fn verify_identity_on_plane_wave() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(
        dir.path(),
        InitSpec::PlaneWave {
            k: vec![1, -1],
            amplitude: 0.7,
            phase: 0.0,
        },
        16,
        1e-3,
        0.1,
    );
    c.cadence_steps = 5;
    let r = verify_identity(&c, &EnergySpec::even(1, 3.0), &[0.02, 0.01, 0.005]).unwrap();
    for w in &r.widths {
        assert!(w.max_residual <= 1e-9);
    }
    assert!(verify_identity(&c, &EnergySpec::even(1, 5.0), &[0.01]).unwrap_err().is_validation());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn checkpoint_roundtrips(step in any::<u64>(), t in -1e6f64..1e6, n in 3u32..5, seed in any::<u64>()) {
        let g = grid(2, 1 << n);
        let u = crate::test_util::random_field(&g, seed, 1.0);
        let ck = Checkpoint { step, t, n: vec![1 << n, 1 << n], coeffs: u.coeffs().to_vec() };
        prop_assert_eq!(Checkpoint::decode(&ck.encode()).unwrap(), ck);
    }

    #[test]
    fn checkpoint_decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let _ = Checkpoint::decode(&bytes);
    }

    #[test]
    fn records_roundtrip(step in any::<u64>(), t in -1e9f64..1e9, v in proptest::collection::vec(-1e300f64..1e300, 0..5)) {
        let r = Record {
            step,
            t,
            values: v.iter().enumerate().map(|(i, x)| (format!("h{i}"), *x)).collect(),
        };
        prop_assert_eq!(Record::parse(r.to_line().trim_end()).unwrap(), r);
    }

    #[test]
    fn random_data_norm_is_exact(s in -1.0f64..4.0, amp in 1e-3f64..1e3, seed in any::<u64>()) {
        let g = grid(2, 16);
        let u = make_initial(&random(s, amp, seed), &g).unwrap();
        prop_assert!((sobolev_norm(&u, s) - amp).abs() <= 1e-12 * amp.max(1.0));
    }
}

