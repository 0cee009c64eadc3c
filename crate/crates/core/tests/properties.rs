mod common;

use common::random_model;
use gica::spectral::{integrate_band, mixed_model_radius, psd, SpectralProfile};
use gica::var::compute_autocovariance;
use gica::{analyze_model, restricted_ar, restricted_x, Band, BivariateVarModel, FrequencyGrid};
use proptest::prelude::*;

fn grid(n: usize) -> FrequencyGrid {
    FrequencyGrid::new(n, 1.0).unwrap()
}

fn norm(m: [[f64; 2]; 2]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn full_band(p: &SpectralProfile) -> f64 {
    integrate_band(p, 0.0, 0.5).unwrap().integral
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn directed_coherence_identity_chain(seed in any::<u64>()) {
        let m = random_model(seed, 4, 0.9, false);
        let s = analyze_model(&m, 20, &grid(513)).unwrap();
        let dc = &s.spectra.dc;
        for i in 0..513 {
            let (yx, yy) = (dc.from_driver.values[i], dc.from_target.values[i]);
            prop_assert!((yx + yy - 1.0).abs() < 1e-12);
            // -ln(1 - u) amplifies rounding in u by 1 / (1 - u)
            let tol = |u: f64| 1e-12 * (1.0 + 1.0 / (1.0 - u));
            prop_assert!((s.spectra.gc.values[i] + (1.0 - yx).ln()).abs() < tol(yx));
            if yy < 1.0 {
                prop_assert!((s.spectra.gi.values[i] + (1.0 - yy).ln()).abs() < tol(yy));
            }
        }
    }

    #[test]
    fn target_spectrum_splits_into_driver_and_own_parts(seed in any::<u64>()) {
        let m = random_model(seed, 4, 0.9, false);
        let g = grid(257);
        let p = psd(&m, &g).unwrap();
        let s = analyze_model(&m, 20, &g).unwrap();
        for i in 0..257 {
            let py = p.p_y.values[i];
            let from_x = s.spectra.dc.from_driver.values[i] * py;
            let from_y = s.spectra.dc.from_target.values[i] * py;
            prop_assert!(((from_x + from_y) - py).abs() <= 1e-10 * py);
        }
    }

    #[test]
    fn spectral_measures_integrate_to_time_domain(seed in any::<u64>()) {
        let m = random_model(seed, 3, 0.85, false);
        let s = analyze_model(&m, 20, &grid(4097)).unwrap();
        prop_assume!(mixed_model_radius(&s.model, &s.restricted_x) < 1.0);
        prop_assert!((full_band(&s.spectra.gc) - s.time.f_xy).abs() < 1e-3);
        prop_assert!((full_band(&s.spectra.ga.a) - s.time.a_y).abs() < 1e-3);
        prop_assert!(full_band(&s.spectra.ga.a_bar).abs() < 5e-3);
    }

    #[test]
    fn ga_vanishes_without_target_self_dependence(seed in any::<u64>()) {
        let m = random_model(seed, 3, 0.9, false);
        let a: Vec<_> = m.coeffs().iter().map(|ak| {
            let mut ak = *ak;
            ak[1][1] = 0.0;
            ak
        }).collect();
        let m = BivariateVarModel::new(a, m.sigma()).unwrap();
        prop_assume!(m.spectral_radius() < 1.0);
        let s = analyze_model(&m, 20, &grid(513)).unwrap();
        prop_assert!(s.spectra.ga.a.max_abs() < 1e-6);
    }

    #[test]
    fn band_integrals_converge_under_grid_refinement(seed in any::<u64>()) {
        let m = random_model(seed, 3, 0.85, false);
        let coarse = analyze_model(&m, 20, &grid(2049)).unwrap();
        let fine = analyze_model(&m, 20, &grid(4097)).unwrap();
        let mut bands = Band::defaults();
        bands.push(Band::new("whole", 0.0, 0.5));
        for band in &bands {
            let (c, f) = (coarse.band(band).unwrap(), fine.band(band).unwrap());
            for (a, b) in [(c.integral.gc, f.integral.gc), (c.integral.ga, f.integral.ga)] {
                prop_assert!((a - b).abs() < 1e-4);
            }
            if c.integral.gi.is_finite() {
                prop_assert!((c.integral.gi - f.integral.gi).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn restricted_variances_are_monotone_and_bounded(seed in any::<u64>()) {
        let m = random_model(seed, 4, 0.9, false);
        let gam = compute_autocovariance(&m, 21).unwrap();
        let full = m.var_y();
        for route in [restricted_ar, restricted_x] {
            let mut prev = f64::INFINITY;
            for q in 1..=21 {
                let r = route(&gam, q).unwrap();
                prop_assert!(r.resid_var <= prev + 1e-12);
                prop_assert!(r.resid_var >= full - 1e-9);
                prev = r.resid_var;
            }
        }
    }

    #[test]
    fn autocovariance_decays(seed in any::<u64>()) {
        let m = random_model(seed, 4, 0.9, true);
        let gam = compute_autocovariance(&m, 20).unwrap();
        prop_assert!(norm(gam.gamma(20)) < norm(gam.gamma(0)));
    }

    #[test]
    fn unstable_models_fail_loudly(seed in any::<u64>(), scale in 1.01f64..1.5) {
        let m = random_model(seed, 3, 0.9, false);
        let r = m.spectral_radius();
        prop_assume!(r > 0.05);
        let s = scale / r;
        let a: Vec<_> = m.coeffs().iter().enumerate().map(|(k, ak)| {
            let f = s.powi(k as i32 + 1);
            ak.map(|row| row.map(|v| v * f))
        }).collect();
        let u = BivariateVarModel::new(a, m.sigma()).unwrap();
        prop_assert!(u.check_stable().is_err());
        prop_assert!(compute_autocovariance(&u, 20).is_err());
        prop_assert!(psd(&u, &grid(33)).is_err());
        prop_assert!(analyze_model(&u, 20, &grid(33)).is_err());
    }
}
