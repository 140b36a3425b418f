use proptest::prelude::*;

use sgmix::bench::{calibrate_noise, credible_bands, rmse, uniform_design, ScalePriorSpec};
use sgmix::diagnostics::ess;
use sgmix::kernels::MotherFunction;
use sgmix::measures::{
    build_particle_measure, sample_polya_urn, sample_sga, BaseMeasure, SGaParams, UniformPrior,
};
use sgmix::models::{FittedValuesCache, GaussianRegression, RegressionDataset};
use sgmix::sampler::{Chain, SamplerConfig};
use sgmix::SimRng;

#[derive(Debug, Clone)]
enum Op {
    Push(Vec<f64>, f64),
    Remove(usize),
    Weight(usize, f64),
    Replace(usize, Vec<f64>, f64),
    Scale(f64),
}

const N: usize = 6;

fn op() -> impl Strategy<Value = Op> {
    let resp = || prop::collection::vec(-3.0..3.0f64, N);
    prop_oneof![
        (resp(), -2.0..2.0f64).prop_map(|(r, w)| Op::Push(r, w)),
        any::<usize>().prop_map(Op::Remove),
        (any::<usize>(), -2.0..2.0f64).prop_map(|(k, w)| Op::Weight(k, w)),
        (any::<usize>(), resp(), -2.0..2.0f64).prop_map(|(k, r, w)| Op::Replace(k, r, w)),
        (0.5..2.0f64).prop_map(Op::Scale),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cache_tracks_full_recomputation(ops in prop::collection::vec(op(), 1..200)) {
        let mut cache = FittedValuesCache::new(N);
        for op in ops {
            let len = cache.len();
            match op {
                Op::Push(r, w) => { cache.push(r, w).unwrap(); }
                Op::Remove(k) if len > 0 => cache.swap_remove(k % len).unwrap(),
                Op::Weight(k, w) if len > 0 => cache.set_weight(k % len, w).unwrap(),
                Op::Replace(k, r, w) if len > 0 => cache.apply_atom_delta(k % len, r, w).unwrap(),
                Op::Scale(c) => cache.scale_all(c),
                _ => {}
            }
            prop_assert!(cache.max_drift() < 1e-9);
        }
    }

    #[test]
    fn cache_rejects_bad_slots(k in 0usize..10) {
        let mut cache = FittedValuesCache::new(N);
        prop_assert!(cache.swap_remove(k).is_err());
        prop_assert!(cache.push(vec![0.0; N + 1], 1.0).is_err());
    }

    #[test]
    fn rmse_is_a_scaled_distance(
        a in prop::collection::vec(-5.0..5.0f64, 1..50),
        shift in -3.0..3.0f64,
        c in 0.1..4.0f64,
    ) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + (i as f64).sin()).collect();
        let d = rmse(&a, &b).unwrap();
        prop_assert!(rmse(&a, &a).unwrap() == 0.0);
        prop_assert!((rmse(&b, &a).unwrap() - d).abs() < 1e-12);
        let sa: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let sb: Vec<f64> = b.iter().map(|v| v + shift).collect();
        prop_assert!((rmse(&sa, &sb).unwrap() - d).abs() < 1e-9);
        let ca: Vec<f64> = a.iter().map(|v| c * v).collect();
        let cb: Vec<f64> = b.iter().map(|v| c * v).collect();
        prop_assert!((rmse(&ca, &cb).unwrap() - c * d).abs() < 1e-9 * (1.0 + d));
    }

    #[test]
    fn noise_calibration_is_equivariant(
        f in prop::collection::vec(-5.0..5.0f64, 2..64),
        c in 0.1..10.0f64,
        shift in -5.0..5.0f64,
        rsnr in 0.5..10.0f64,
    ) {
        prop_assume!(f.iter().any(|v| (v - f[0]).abs() > 1e-3));
        let s = calibrate_noise(&f, rsnr).unwrap();
        let g: Vec<f64> = f.iter().map(|v| c * v + shift).collect();
        prop_assert!((calibrate_noise(&g, rsnr).unwrap() - c * s).abs() < 1e-9 * (1.0 + c * s));
        prop_assert!((calibrate_noise(&f, 2.0 * rsnr).unwrap() - s / 2.0).abs() < 1e-12 * (1.0 + s));
    }

    #[test]
    fn bands_are_ordered(seed in any::<u64>(), m in 20usize..80, level in 0.05..1.0f64) {
        let mut rng = SimRng::seed_from(seed);
        let curves: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..8).map(|_| sample_sga(&SGaParams::new(1.0, 1.0).unwrap(), &mut rng)).collect())
            .collect();
        let b = credible_bands(&curves, level).unwrap();
        prop_assert!(b.kept >= 1 && b.kept <= m);
        for i in 0..8 {
            prop_assert!(b.lower[i] <= b.upper[i]);
            let lo = curves.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min);
            let hi = curves.iter().map(|c| c[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(b.lower[i] >= lo && b.upper[i] <= hi);
        }
    }

    #[test]
    fn urn_bookkeeping(seed in any::<u64>(), p in 1usize..200, alpha in 0.01..50.0f64) {
        let base = BaseMeasure::new(alpha, UniformPrior { lo: 0.0, hi: 1.0 }).unwrap();
        let (x, state) = sample_polya_urn(&base, p, &mut SimRng::seed_from(seed)).unwrap();
        state.check().unwrap();
        prop_assert_eq!(x.len(), p);
        prop_assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn particle_mass_is_additive(seed in any::<u64>(), p in 1usize..100, cut in 0.0..1.0f64) {
        let base = BaseMeasure::new(1.0, UniformPrior { lo: 0.0, hi: 1.0 }).unwrap();
        let q = build_particle_measure(2.0, &base, p, &mut SimRng::seed_from(seed)).unwrap();
        let left = q.mass_of(|x| *x < cut);
        let right = q.mass_of(|x| *x >= cut);
        let all = q.mass_of(|_| true);
        prop_assert!((left + right - all).abs() < 1e-9 * (1.0 + all.abs()));
    }

    #[test]
    fn sga_streams_reproduce(seed in any::<u64>(), stream in 0u64..8, a in 0.1..5.0f64, b in 0.1..5.0f64) {
        let params = SGaParams::new(a, b).unwrap();
        let draw = || {
            let mut rng = SimRng::stream(seed, stream);
            (0..16).map(|_| sample_sga(&params, &mut rng)).collect::<Vec<f64>>()
        };
        prop_assert_eq!(draw(), draw());
    }

    #[test]
    fn ess_bounded_by_length(seed in any::<u64>(), n in 10usize..400) {
        let mut rng = SimRng::seed_from(seed);
        let x: Vec<f64> = (0..n).map(|_| sample_sga(&SGaParams::new(1.0, 1.0).unwrap(), &mut rng)).collect();
        let e = ess(&x).unwrap();
        prop_assert!(e > 0.0 && e <= n as f64 + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chain_state_stays_consistent(seed in any::<u64>(), p in 5usize..40, kernel in prop_oneof![Just(MotherFunction::Gaussian), Just(MotherFunction::Symmlet8)]) {
        let x = uniform_design(24);
        let y: Vec<f64> = x.iter().map(|v| (6.0 * v).sin()).collect();
        let spec = ScalePriorSpec::default();
        let data = RegressionDataset::new(x, 1, y, 1.0).unwrap();
        let model = GaussianRegression::new(data, spec.kernel(kernel)).unwrap();
        let config = SamplerConfig { p, ..SamplerConfig::default() };
        let mut chain = Chain::new(config, spec.prior().unwrap(), &model, SimRng::seed_from(seed)).unwrap();
        for _ in 0..25 {
            chain.sweep().unwrap();
            chain.state().check(&model, 1e-8).unwrap();
        }
    }
}
