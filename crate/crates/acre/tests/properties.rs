use acre::config::SpecConfig;
use acre::extremes::gap_sweep;
use acre::finitekernel::KernelContext;
use acre::limits::LimitProfile;
use acre::potentials::{BoundaryCondition, Ensemble, EnsembleSpec};
use acre::radialnorms::norm_table;
use acre::sampler::ModuliSampler;
use acre::ward::cauchy_transform;
use num_complex::Complex64;
use proptest::prelude::*;

fn profiles(rho: f64) -> Vec<LimitProfile> {
    vec![
        LimitProfile::Free { rho },
        LimitProfile::SoftHard { rho },
        LimitProfile::Interpolated { rho, c1: 3.0, c2: 0.5 },
        LimitProfile::HardAnnulus { rho, tau1: 0.1, tau2: 0.8 },
        LimitProfile::HardDiskOuter { rho, tau: 0.6 },
        LimitProfile::HardDiskRescaled { rho, tau: 0.6 },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn limit_kernels_are_hermitian_and_bounded(
        rho in 0.5f64..6.0,
        zx in -1.5f64..1.5, zy in -2.0f64..2.0,
        wx in -1.5f64..1.5, wy in -2.0f64..2.0,
    ) {
        let (z, w) = (Complex64::new(zx, zy), Complex64::new(wx, wy));
        for p in profiles(rho) {
            let a = p.kernel(z, w);
            let b = p.kernel(w, z);
            prop_assert!((a - b.conj()).norm() <= 1e-10 * a.norm().max(1e-12), "{p}");
            let bound = (p.density(zx) * p.density(wx)).sqrt();
            prop_assert!(a.norm() <= bound * (1.0 + 1e-9) + 1e-300, "{p}");
            prop_assert!(p.density(zx) >= 0.0);
        }
    }

    #[test]
    fn spec_hash_ignores_key_order(n in 32usize..500, rho in 0.5f64..8.0, c in 0.2f64..5.0) {
        let lines = [format!("n={n}"), format!("rho={rho}"), "bc.kind=interpolated".into(), format!("bc.c1={c}"), "bc.c2=inf".into()];
        let a = SpecConfig::parse(&lines.join("\n")).unwrap().spec().unwrap();
        let mut rev = lines.clone();
        rev.reverse();
        let b = SpecConfig::parse(&rev.join("\n")).unwrap().spec().unwrap();
        prop_assert_eq!(a.hash(), b.hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gap_laws_are_monotone_probabilities(n in 8usize..40, rho in 1.0f64..4.0, r0 in 0.7f64..1.0, dr in 0.01f64..0.4) {
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(n, rho, BoundaryCondition::Free).unwrap()).unwrap();
        let t = norm_table(&ens).unwrap();
        let s = gap_sweep(&ens, &t, &[r0, r0 + dr]).unwrap();
        let (f, g) = (s.max_cdf(), s.min_survival());
        prop_assert!(0.0 <= f[0] && f[0] <= f[1] && f[1] <= 1.0);
        prop_assert!(1.0 >= g[0] && g[0] >= g[1] && g[1] >= 0.0);
    }

    #[test]
    fn sampled_moduli_respect_hard_walls(seed in 0u64..1000, tau1 in 0.05f64..0.4, width in 0.2f64..0.5) {
        let bc = BoundaryCondition::HardAnnulus { tau1, tau2: tau1 + width };
        let ens = Ensemble::new(EnsembleSpec::induced_ginibre(24, 2.0, bc).unwrap()).unwrap();
        let (lo, hi) = (ens.r_tau(tau1).unwrap(), ens.r_tau(tau1 + width).unwrap());
        let t = norm_table(&ens).unwrap();
        let s = ModuliSampler::new(ens, t, seed).unwrap();
        for r in s.sample_moduli(0) {
            prop_assert!(r >= lo && r <= hi);
        }
    }
}

#[test]
fn finite_n_profile_tracks_each_limit() {
    let xs: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
    for bc in [
        BoundaryCondition::Free,
        BoundaryCondition::Interpolated { c1: 2.0, c2: 0.5 },
        BoundaryCondition::soft_hard(),
        BoundaryCondition::HardAnnulus { tau1: 0.2, tau2: 0.9 },
    ] {
        let errs: Vec<f64> = [256usize, 1024]
            .iter()
            .map(|&n| {
                let ens = Ensemble::new(EnsembleSpec::induced_ginibre(n, 3.0, bc).unwrap()).unwrap();
                let t = norm_table(&ens).unwrap();
                KernelContext::new(ens, t).unwrap().sup_error(&xs, 0.05)
            })
            .collect();
        assert!(errs[1] < errs[0] && errs[1] < 0.02, "{bc}: {errs:?}");
    }
}

#[test]
fn cauchy_transform_is_odd_for_even_profiles() {
    for p in [LimitProfile::Free { rho: 2.0 }, LimitProfile::Interpolated { rho: 4.0, c1: 3.0, c2: 3.0 }] {
        for x in [0.1, 0.35, 0.8] {
            let a = cauchy_transform(&p, Complex64::new(x, 0.0), 8.0).unwrap();
            let b = cauchy_transform(&p, Complex64::new(-x, 0.0), 8.0).unwrap();
            assert!((a + b).norm() <= 1e-10 * a.norm(), "{p} x={x}: {a} {b}");
        }
        assert!(cauchy_transform(&p, Complex64::new(0.0, 0.0), 8.0).unwrap().norm() <= 1e-12);
    }
}

#[test]
fn wide_free_strip_satisfies_ward_in_the_bulk() {
    let p = LimitProfile::Free { rho: 40.0 };
    assert!((p.density(0.5) - 1.0).abs() < 1e-12);
    let g = acre::ward::ward_residual(&p, &[(0.0, 0.0), (0.5, 0.3)], &Default::default()).unwrap();
    assert!(g.max_abs < 1e-3, "{}", g.max_abs);
}
