use proptest::prelude::*;
use streammode_core::oracle::{central_difference, kernel_integral, kernel_tail_mass};
use streammode_core::{KernelFamily, KernelSpec};

fn all_kernels(eps: f64) -> Vec<KernelSpec> {
    vec![
        KernelSpec::new(KernelFamily::Gaussian, eps, 1).unwrap(),
        KernelSpec::new(KernelFamily::Cauchy, eps, 1).unwrap(),
        KernelSpec::new(KernelFamily::Fejer, eps, 1).unwrap(),
        KernelSpec::new(KernelFamily::MultivariateGaussian, eps, 1).unwrap(),
        KernelSpec::new(KernelFamily::MultivariateGaussian, eps, 2).unwrap(),
    ]
}

#[test]
fn every_kernel_integrates_to_one() {
    for eps in [0.5, 1.0, 2.0] {
        for k in all_kernels(eps) {
            let mass = kernel_integral(&k).unwrap();
            assert!(
                (mass - 1.0).abs() < 1e-4,
                "{} eps={eps} dim={}: {mass}",
                k.family(),
                k.dim()
            );
        }
    }
}

#[test]
fn tail_mass_shrinks_with_bandwidth() {
    for fam_dim in [
        (KernelFamily::Gaussian, 1),
        (KernelFamily::Cauchy, 1),
        (KernelFamily::Fejer, 1),
        (KernelFamily::MultivariateGaussian, 2),
    ] {
        let tails: Vec<f64> = [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|&eps| {
                let k = KernelSpec::new(fam_dim.0, eps, fam_dim.1).unwrap();
                kernel_tail_mass(&k, 1.0).unwrap()
            })
            .collect();
        assert!(
            tails.windows(2).all(|w| w[1] < w[0]),
            "{:?}: {tails:?}",
            fam_dim
        );
    }
}

#[test]
fn gaussian_tails_vanish_quickly() {
    for (fam, dim) in [
        (KernelFamily::Gaussian, 1),
        (KernelFamily::MultivariateGaussian, 2),
    ] {
        let k = KernelSpec::new(fam, 0.125, dim).unwrap();
        assert!(kernel_tail_mass(&k, 1.0).unwrap() < 1e-3);
    }
}

#[test]
fn cauchy_tail_matches_closed_form() {
    // Outside [-1, 1] the scaled Cauchy kernel holds (2/pi) atan(eps).
    for eps in [1.0, 0.5, 0.25, 0.125] {
        let k = KernelSpec::new(KernelFamily::Cauchy, eps, 1).unwrap();
        let expected = 2.0 / std::f64::consts::PI * f64::atan(eps);
        let got = kernel_tail_mass(&k, 1.0).unwrap();
        assert!((got - expected).abs() < 2e-5, "eps={eps}: {got} vs {expected}");
    }
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    // Relative to the analytic value, floored where the gradient crosses zero.
    (analytic - numeric).abs() / analytic.abs().max(1e-4)
}

fn check_gradient(k: &KernelSpec, x: &[f64]) -> Result<(), TestCaseError> {
    let analytic = k.grad(x).unwrap();
    let numeric = central_difference(|p| k.value(p), x, 1e-6).unwrap();
    for (a, n) in analytic.iter().zip(&numeric) {
        prop_assert!(
            rel_err(*a, *n) < 1e-5,
            "{} eps={} at {:?}: analytic {} vs fd {}",
            k.family(),
            k.epsilon(),
            x,
            a,
            n
        );
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn univariate_gradients_match_finite_differences(
        x in -6.0f64..6.0,
        eps in prop::sample::select(vec![0.5, 1.0, 2.0]),
    ) {
        for k in all_kernels(eps).into_iter().filter(|k| k.dim() == 1) {
            check_gradient(&k, &[x])?;
        }
    }

    #[test]
    fn bivariate_gradient_matches_finite_differences(
        x in -4.0f64..4.0, y in -4.0f64..4.0,
        eps in prop::sample::select(vec![0.5, 1.0, 2.0]),
    ) {
        let k = KernelSpec::new(KernelFamily::MultivariateGaussian, eps, 2).unwrap();
        check_gradient(&k, &[x, y])?;
    }

    #[test]
    fn kernels_are_even_and_gradients_odd(x in -50.0f64..50.0, y in -5.0f64..5.0) {
        for k in all_kernels(0.8) {
            let p: Vec<f64> = if k.dim() == 1 { vec![x] } else { vec![x, y] };
            let q: Vec<f64> = p.iter().map(|v| -v).collect();
            prop_assert_eq!(k.value(&p).unwrap(), k.value(&q).unwrap());
            let gp = k.grad(&p).unwrap();
            let gq = k.grad(&q).unwrap();
            for (a, b) in gp.iter().zip(&gq) {
                prop_assert_eq!(*a, -*b);
            }
            prop_assert!(k.value(&p).unwrap() >= 0.0);
        }
    }
}
