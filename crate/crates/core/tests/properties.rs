use proptest::prelude::*;

use ion_cavity::closed_form::{inversion_double_sum, inversion_poisson_closed, resummed_term};
use ion_cavity::fock::{
    coherent_populations, cosine_position, default_cutoff, thermal_populations, ModeTruncation, DEFAULT_TAIL_TOL,
};
use ion_cavity::numeric::uniform_grid;
use ion_cavity::timescales::{field_revival_time, sliding_envelope, vib_collapse_time, vib_revival_time};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn populations_are_subnormalized(mean in 0.0f64..60.0, extra in 0usize..20) {
        let trunc = ModeTruncation::new(default_cutoff(mean) + extra, 0.5).unwrap();
        for d in [coherent_populations(mean, trunc).unwrap(), thermal_populations(mean, trunc).unwrap()] {
            prop_assert!(d.populations().iter().all(|p| *p >= 0.0 && *p <= 1.0));
            prop_assert!(d.retained_mass() <= 1.0 + 1e-12);
            prop_assert!(d.tail_mass() >= 0.0);
        }
    }

    #[test]
    fn default_coherent_cutoff_meets_default_tol(mean in 0.0f64..200.0) {
        let d = coherent_populations(mean, ModeTruncation::for_mean(mean)).unwrap();
        prop_assert!(d.tail_mass() <= DEFAULT_TAIL_TOL);
        prop_assert!((d.truncated_mean() - mean).abs() < 1e-6 * mean.max(1.0));
    }

    #[test]
    fn inversion_bounded_by_retained_mass(
        nbar in 0.0f64..30.0,
        mbar in 0.0f64..8.0,
        eta in 0.0f64..0.1,
        gt_max in 1.0f64..300.0,
    ) {
        let f = coherent_populations(nbar, ModeTruncation::new(default_cutoff(nbar), 0.5).unwrap()).unwrap();
        let v = coherent_populations(mbar, ModeTruncation::new(default_cutoff(mbar), 0.5).unwrap()).unwrap();
        let grid = uniform_grid(gt_max, gt_max / 400.0);
        let a = inversion_double_sum(&f, &v, eta, &grid).unwrap();
        prop_assert!(a.check_bounds().is_ok());
        prop_assert!((a.values[0] - a.retained_mass).abs() < 1e-14);
        let b = inversion_poisson_closed(&f, mbar, eta, &grid).unwrap();
        prop_assert!(b.check_bounds().is_ok());
        let dev = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(dev < 1e-9, "resummation deviation {dev:e}");
    }

    #[test]
    fn resummed_term_is_bounded(n in 0usize..200, mbar in 0.0f64..20.0, eta in 0.0f64..0.3, gt in 0.0f64..5000.0) {
        prop_assert!(resummed_term(n, mbar, eta, gt).abs() <= 1.0);
    }

    #[test]
    fn cosine_operator_is_contraction(eta in 0.0f64..0.5, cutoff in 0usize..30) {
        // cos of a Hermitian operator has spectrum in [-1, 1]; entries cannot exceed 1
        let c = cosine_position(eta, cutoff).unwrap();
        prop_assert!(c.matrix().iter().all(|z| z.norm() <= 1.0 + 1e-12));
        prop_assert!((c.matrix() - c.matrix().adjoint()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn timescale_scalings(nbar in 0.0f64..100.0, mbar in 0.0f64..10.0, eta in 0.005f64..0.1) {
        prop_assume!(eta * eta * (1.0 + 2.0 * mbar) / 2.0 < 0.9);
        let t1 = field_revival_time(nbar, mbar, eta, 1).unwrap();
        let t3 = field_revival_time(nbar, mbar, eta, 3).unwrap();
        prop_assert!((t3 - 3.0 * t1).abs() <= 1e-12 * t3.max(1.0));
        let v1 = vib_revival_time(nbar, eta, 1).unwrap();
        let v2 = vib_revival_time(nbar, eta / 2.0, 1).unwrap();
        prop_assert!((v2 / v1 - 4.0).abs() < 1e-12);
        if mbar > 0.0 {
            let c = vib_collapse_time(nbar, mbar, eta).unwrap();
            prop_assert!(c > 0.0 && c.is_finite());
        }
    }

    #[test]
    fn envelope_dominates_signal(values in prop::collection::vec(-1.0f64..1.0, 1..300), window in 1usize..60) {
        let env = sliding_envelope(&values, window);
        prop_assert_eq!(env.len(), values.len());
        for (e, v) in env.iter().zip(&values) {
            prop_assert!(*e >= v.abs());
        }
    }
}
