//! End-to-end acceptance suite. Each test covers one numbered criterion and
//! prints a single pass/fail line (visible with `--nocapture`; the test
//! harness result mirrors it either way).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kahlerdec::geometry::{
    self, conformal_chart, flat_chart, nabla_omega, perturbed_j_chart, perturbed_metric_chart,
    realize_pointwise, RealizeMode,
};
use kahlerdec::hspace::{
    decompose, membership_residual, module_dimensions, project_component, project_to_hspace,
    random_hspace_element, sigma, tau1, DEFAULT_TOL,
};
use kahlerdec::invariants::{
    invariant_independence_rank, psi_vector, string_invariant, InvariantString,
};
use kahlerdec::realize::{
    commuting_basis, skew_adjoint_basis, surjectivity_certificate, theta0, theta_tilde0, xi,
    RealizationMap, XiTildeVariant,
};
use kahlerdec::space::sample_group;
use kahlerdec::tensor::pullback;
use kahlerdec::{EndoOneForm, HermitianSpace, Kind};

fn criterion(n: u32, name: &str, f: impl FnOnce() + std::panic::UnwindSafe) {
    match std::panic::catch_unwind(f) {
        Ok(()) => println!("criterion {n} ({name}): PASS"),
        Err(e) => {
            println!("criterion {n} ({name}): FAIL");
            std::panic::resume_unwind(e);
        }
    }
}

fn m6_spaces() -> Vec<HermitianSpace> {
    vec![
        HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap(),
        HermitianSpace::new(6, 2, 4, Kind::Pseudo).unwrap(),
        HermitianSpace::new(6, 3, 3, Kind::Para).unwrap(),
    ]
}

fn grid(dims: &[usize]) -> Vec<HermitianSpace> {
    let mut spaces = Vec::new();
    for &m in dims {
        for p in (0..=m).step_by(2) {
            spaces.push(HermitianSpace::new(m, p, m - p, Kind::Pseudo).unwrap());
        }
        spaces.push(HermitianSpace::new(m, m / 2, m / 2, Kind::Para).unwrap());
    }
    spaces
}

#[test]
fn criterion_1_worked_component_values() {
    criterion(1, "worked component values", || {
        for s in m6_spaces() {
            let sg = s.sign();
            let mbar = s.half_dim();
            let h = xi(&EndoOneForm::single(6, 2, theta0(&s)), &s).unwrap();
            assert!((h.get(mbar + 1, 0, 2) - (-sg)).abs() < 1e-12);
            assert!((h.get(mbar, 1, 2) - sg).abs() < 1e-12);
            let p1 = project_component(&h, 1, &s).unwrap();
            assert!((p1.get(mbar + 1, 0, 2) - (-sg / 6.0)).abs() < 1e-12);
            let p3 = project_component(&h, 3, &s).unwrap();
            assert!((p3.get(mbar + 1, 0, 2) - (-sg / 2.0)).abs() < 1e-12);
            let t = tau1(&h, &s).unwrap();
            assert!(t.iter().all(|v| v.abs() < 1e-12));

            let h = xi(&EndoOneForm::single(6, 1, theta0(&s)), &s).unwrap();
            let t = tau1(&h, &s).unwrap();
            assert!((t[mbar] - sg * s.eps(1)).abs() < 1e-12);
            for (i, v) in t.iter().enumerate() {
                if i != mbar {
                    assert!(v.abs() < 1e-12);
                }
            }
            let p2 = project_component(&h, 2, &s).unwrap();
            assert!((p2.get(mbar + 1, mbar, mbar + 1) - (-0.5)).abs() < 1e-12);
        }
    });
}

#[test]
fn criterion_2_projector_algebra() {
    criterion(2, "projector algebra", || {
        for s in grid(&[4, 6, 8]) {
            for sample in 0..100 {
                let h = random_hspace_element(&s, 10_000 + sample);
                let scale = 1.0f64.max(h.frob_norm());
                let report = decompose(&h, &s, DEFAULT_TOL).unwrap();
                // idempotence of the eigenprojectors
                for i in [1usize, 2, 3] {
                    let p = project_component(&h, i, &s).unwrap();
                    let pp = project_component(&p, i, &s).unwrap();
                    assert!(pp.sub(&p).max_abs() / scale < 1e-10);
                }
                // the third projector annihilates the first two
                for i in [1usize, 2] {
                    let p = project_component(&h, i, &s).unwrap();
                    let killed = project_component(&p, 3, &s).unwrap();
                    assert!(killed.max_abs() / scale < 1e-10);
                }
                // the three eigenprojectors sum to the identity
                let sum = project_component(&h, 1, &s)
                    .unwrap()
                    .add(&project_component(&h, 2, &s).unwrap())
                    .add(&project_component(&h, 3, &s).unwrap());
                assert!(sum.sub(&h).max_abs() / scale < 1e-10);
                // pairwise orthogonality of the four components
                for a in 0..4 {
                    for b in a + 1..4 {
                        let ip = kahlerdec::tensor::tensor3_inner(
                            &report.components[a],
                            &report.components[b],
                            &s,
                        )
                        .unwrap();
                        assert!(ip.abs() / (scale * scale) < 1e-10);
                    }
                }
                assert!(report.residual_reconstruction / scale < 1e-10);
            }
        }
    });
}

#[test]
fn criterion_3_trace_splitting_identity() {
    criterion(3, "trace of the splitting map", || {
        for s in grid(&[4, 6, 8]) {
            let m = s.dim();
            for b in 0..m {
                let mut phi = vec![0.0; m];
                phi[b] = 1.0;
                let lhs = tau1(&sigma(&phi, &s).unwrap(), &s).unwrap();
                let rhs = kahlerdec::hspace::j_pullback_covector(&phi, &s);
                for i in 0..m {
                    assert!((lhs[i] - (m as f64 - 2.0) * rhs[i]).abs() < 1e-12);
                }
            }
        }
    });
}

#[test]
fn criterion_4_dimension_certificates() {
    criterion(4, "dimension and rank certificates", || {
        for s in grid(&[4, 6, 8]) {
            let dims = module_dimensions(&s);
            let m = s.dim();
            assert_eq!(dims.dim_h, dims.dim_w.iter().sum::<usize>());
            assert_eq!(dims.dim_w[3], m);
            if m == 4 {
                assert_eq!(dims.dim_w[0], 0);
                assert_eq!(dims.dim_w[2], 0);
            }
        }
        // surjectivity of both realization maps in dimensions 6 and 8
        for m in [6usize, 8] {
            let spaces = [
                HermitianSpace::new(m, 0, m, Kind::Pseudo).unwrap(),
                HermitianSpace::new(m, 2, m - 2, Kind::Pseudo).unwrap(),
                HermitianSpace::new(m, m / 2, m / 2, Kind::Para).unwrap(),
            ];
            for s in spaces {
                let (rank, dim, ok) = surjectivity_certificate(&s, RealizationMap::Xi);
                assert!(ok, "structure map rank {rank} vs {dim} (m={m})");
                let (rank, dim, ok) = surjectivity_certificate(&s, RealizationMap::XiTilde);
                assert!(ok, "metric map rank {rank} vs {dim} (m={m})");
            }
        }
    });
}

#[test]
fn criterion_5_invariant_suite() {
    criterion(5, "quadratic invariants", || {
        for (si, s) in m6_spaces().iter().enumerate() {
            let h = random_hspace_element(s, 777 + si as u64);
            let base = psi_vector(&h, s).unwrap();
            let scale = base.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            // invariance under 50 sampled group elements, half anticommuting
            for g in 0..25u64 {
                for anti in [false, true] {
                    let t = sample_group(s, anti, 31 * si as u64 + g);
                    let moved = psi_vector(&pullback(&t.mat, &h).unwrap(), s).unwrap();
                    for (a, b) in base.iter().zip(&moved) {
                        assert!((a - b).abs() / scale < 1e-9);
                    }
                }
            }
            // reduction identities: each string collapses to one psi
            let sg = s.sign();
            let cases = [
                ("(1,J2;3)(1,J2;3)", base[0]),
                ("(1,J2;3)(1,J3;2)", base[1]),
                ("(J1,2;1)(J3,2;3)", base[2]),
            ];
            for (spec, psi) in cases {
                let val =
                    string_invariant(&InvariantString::parse(spec).unwrap(), &h, s).unwrap();
                assert!(
                    (val - (-sg) * psi).abs() / scale < 1e-10,
                    "{spec}: {val} vs {}",
                    -sg * psi
                );
            }
            // independence
            assert_eq!(invariant_independence_rank(s, 12, 99 + si as u64), 4);
        }
    });
}

#[test]
fn criterion_6_geometric_cross_validation() {
    criterion(6, "geometric cross-validation", || {
        let h = 1e-4;
        for s in m6_spaces() {
            let origin = [0.0; 6];
            let mut a = vec![0.0; 6];
            a[0] = 1.0;
            // flat charts are flat
            let flat = flat_chart(&s);
            assert!(nabla_omega(&flat, &origin, h).unwrap().max_abs() < 1e-12);
            // conformal rescaling produces exactly the splitting-map image
            let conf = conformal_chart(&flat, &a).unwrap();
            let fd = nabla_omega(&conf, &origin, h).unwrap();
            let expected = sigma(&a, &s).unwrap().scale(-1.0);
            assert!(fd.sub(&expected).max_abs() < 1e-5);
            // halving the step divides the error by about four
            let err_at = |hh: f64| {
                nabla_omega(&conf, &origin, hh)
                    .unwrap()
                    .sub(&expected)
                    .max_abs()
            };
            let ratio = err_at(1e-3) / err_at(5e-4);
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
            // structure perturbation realizes the algebraic map
            let theta = EndoOneForm::single(6, 2, theta0(&s));
            let pj = perturbed_j_chart(&s, &theta, 1.0).unwrap();
            let fd = nabla_omega(&pj, &origin, h).unwrap();
            assert!(fd.sub(&xi(&theta, &s).unwrap()).max_abs() < 1e-5);
            // metric perturbation: trace concentrated on the f_1 slot
            // with weight -2s, matching the hand computation from the
            // Christoffel symbols of the diagonal example metric
            let theta = EndoOneForm::single(6, 0, theta_tilde0(&s));
            let pg = perturbed_metric_chart(&s, &theta, 1.0).unwrap();
            let fd = nabla_omega(&pg, &origin, h).unwrap();
            let t = tau1(&fd, &s).unwrap();
            assert!((t[3] - (-2.0 * s.sign())).abs() < 1e-5);
            for (i, v) in t.iter().enumerate() {
                if i != 3 {
                    assert!(v.abs() < 1e-5);
                }
            }
            assert_eq!(
                geometry::select_xi_tilde_variant(&s, h).unwrap(),
                XiTildeVariant::SignCorrected
            );
            // coordinate-constant structure fields land in the third block
            for chart in [&conf, &pg] {
                let fd = nabla_omega(chart, &origin, h).unwrap();
                let clean = project_to_hspace(&fd, &s).unwrap();
                let u3 = project_component(&clean, 3, &s).unwrap();
                assert!(u3.sub(&clean).max_abs() < 1e-5);
                assert!(membership_residual(&fd, &s).unwrap() < 1e-5);
            }
        }
    });
}

#[test]
fn criterion_7_pointwise_realization() {
    criterion(7, "pointwise realization end to end", || {
        let h = 1e-4;
        for (si, s) in m6_spaces().iter().enumerate() {
            for sample in 0..20u64 {
                let seed = 40_000 + 100 * si as u64 + sample;
                let raw = random_hspace_element(s, seed);
                let (target, mode) = if sample % 2 == 0 {
                    (raw, RealizeMode::VaryJ)
                } else {
                    let rep = decompose(&raw, s, DEFAULT_TOL).unwrap();
                    (
                        rep.components[2].add(&rep.components[3]),
                        RealizeMode::VaryMetric,
                    )
                };
                let (_, report) = realize_pointwise(&target, s, mode, h).unwrap();
                assert!(
                    report.achieved_error <= 1e-4,
                    "seed {seed}: error {}",
                    report.achieved_error
                );
            }
        }
    });
}

#[test]
fn criterion_8_metric_negation_labels() {
    criterion(8, "metric-negation label invariance", || {
        let h = 1e-4;
        let spaces = [
            HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap(),
            HermitianSpace::new(6, 2, 4, Kind::Pseudo).unwrap(),
        ];
        for seed in 0..10u64 {
            let s = &spaces[(seed % 2) as usize];
            let mut rng = ChaCha8Rng::seed_from_u64(50_000 + seed);
            let chart = match seed % 3 {
                0 => {
                    let basis = skew_adjoint_basis(s);
                    let mut theta = EndoOneForm::zeros(6);
                    for k in 0..6 {
                        let gen = &basis[rng.gen_range(0..basis.len())];
                        theta = theta.add(&EndoOneForm::single(
                            6,
                            k,
                            gen * rng.gen_range(-0.5..0.5),
                        ));
                    }
                    perturbed_j_chart(s, &theta, 1.0).unwrap()
                }
                1 => {
                    let basis = commuting_basis(s);
                    let mut theta = EndoOneForm::zeros(6);
                    for k in 0..6 {
                        let gen = &basis[rng.gen_range(0..basis.len())];
                        theta = theta.add(&EndoOneForm::single(
                            6,
                            k,
                            gen * rng.gen_range(-0.5..0.5),
                        ));
                    }
                    perturbed_metric_chart(s, &theta, 1.0).unwrap()
                }
                _ => {
                    let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let theta = EndoOneForm::single(6, 2, theta0(s));
                    let base = perturbed_j_chart(s, &theta, 1.0).unwrap();
                    conformal_chart(&base, &coeffs).unwrap()
                }
            };
            let neg = geometry::negate_metric(&chart);
            let fd = nabla_omega(&chart, &[0.0; 6], h).unwrap();
            let fdn = nabla_omega(&neg, &[0.0; 6], h).unwrap();
            let l = decompose(&fd, chart.space(), 1e-4).unwrap().label;
            let ln = decompose(&fdn, neg.space(), 1e-4).unwrap().label;
            assert_eq!(l.flags, ln.flags, "seed {seed}");
            assert_eq!(l.name, ln.name, "seed {seed}");
        }
    });
}

#[test]
fn criterion_9_mutation_sanity() {
    criterion(9, "mutation sanity of the verify suite", || {
        let bin = env!("CARGO_BIN_EXE_kahlerdec");
        let clean = std::process::Command::new(bin)
            .args(["verify", "--dims", "4,6", "--samples", "5"])
            .output()
            .expect("run verify");
        assert_eq!(clean.status.code(), Some(0), "clean suite must pass");
        let mutated = std::process::Command::new(bin)
            .args([
                "verify",
                "--dims",
                "4,6",
                "--samples",
                "5",
                "--mutate",
                "pi3-sign",
            ])
            .output()
            .expect("run mutated verify");
        assert_eq!(
            mutated.status.code(),
            Some(3),
            "mutated suite must fail with the suite exit code"
        );
        let text = String::from_utf8_lossy(&mutated.stdout);
        assert!(text.contains("FAIL"), "mutated suite prints failures");
    });
}
