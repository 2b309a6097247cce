mod common;

use common::*;
use proptest::prelude::*;
use snm::risk::{binomial_se, estimate_risk, risk_landscape_flatness};
use snm::sampling::Decoder;
use snm::{edf, mle_decode, sample_observation, zoo, DesignStrategy, Family, Graph, Observation, RngHandle, Sensing, Verdict};
use statrs::distribution::{ContinuousCDF, Normal};

fn phi(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

#[test]
fn unsensed_coordinates_are_exactly_zero() {
    let f = Family::explicit(vec![vec![1.0, 2.0, 3.0]], 1.0).unwrap();
    let b: Sensing = DesignStrategy::new(vec![2.0, 0.0, 1.0]).unwrap().into();
    let mut rng = RngHandle::new(4, 0);
    for _ in 0..100 {
        let obs = sample_observation(&f, 0, &b, &mut rng).unwrap();
        assert_eq!(obs.y[1], 0.0);
    }
}

#[test]
fn observation_moments() {
    let f = Family::explicit(vec![vec![0.5, -1.0]], 2.0).unwrap();
    let energies = [4.0, 0.25];
    let b: Sensing = DesignStrategy::new(energies.to_vec()).unwrap().into();
    let mut rng = RngHandle::new(11, 3);
    let n = 100_000;
    let (mut s, mut s2) = ([0.0; 2], [0.0; 2]);
    for _ in 0..n {
        let y = sample_observation(&f, 0, &b, &mut rng).unwrap().y;
        for i in 0..2 {
            s[i] += y[i];
            s2[i] += y[i] * y[i];
        }
    }
    let mean_true = [1.0, -2.0];
    for i in 0..2 {
        let mean = s[i] / n as f64;
        let var = s2[i] / n as f64 - mean * mean;
        assert!((mean - mean_true[i]).abs() < 4.0 / (energies[i] * n as f64).sqrt());
        assert!((var * energies[i] - 1.0).abs() < 0.1);
    }
}

#[test]
fn streams_reproduce() {
    let f = zoo::make_ksets(6, 2, 1.0).unwrap();
    let draw = |seed, stream| {
        let mut rng = RngHandle::new(seed, stream);
        sample_observation(&f, 3, &Sensing::ISOTROPIC, &mut rng).unwrap()
    };
    assert_eq!(draw(1, 2), draw(1, 2));
    assert_ne!(draw(1, 2).y, draw(1, 3).y);
    assert_ne!(draw(1, 2).y, draw(2, 2).y);
}

#[test]
fn decode_examples() {
    let f = Family::explicit(vec![vec![0.0, 0.0], vec![2.0, 0.0]], 1.0).unwrap();
    let obs = |y: Vec<f64>| Observation {
        y,
        hypothesis: None,
        sensing: Sensing::ISOTROPIC,
    };
    assert_eq!(mle_decode(&f, &obs(vec![0.9, 0.0])).unwrap(), 0);
    assert_eq!(mle_decode(&f, &obs(vec![2.0, 0.0])).unwrap(), 1);
    let g = Family::explicit(vec![vec![0.0], vec![2.0]], 1.0).unwrap();
    assert_eq!(mle_decode(&g, &obs(vec![1.0])).unwrap(), 0);
    assert!(mle_decode(&g, &obs(vec![1.0, 0.0])).is_err());
}

#[test]
fn two_hypothesis_error_rate() {
    let delta = 2.0;
    let f = Family::explicit(vec![vec![0.0, 0.0], vec![delta, 0.0]], 1.0).unwrap();
    let r = estimate_risk(&f, &Sensing::ISOTROPIC, 100_000, 17).unwrap();
    let p = phi(-delta / 2.0);
    assert!((p - 0.158_655).abs() < 1e-6);
    for h in &r.hypotheses {
        assert!((h.phat - p).abs() <= 3.0 * binomial_se(p, h.trials), "{h:?}");
    }
    assert!(r.max_risk <= (-delta * delta / 8.0f64).exp());
}

#[test]
fn designed_two_hypothesis_error_rate() {
    // only coordinate 0 discriminates; energy b scales the effective separation by sqrt(b)
    let f = Family::explicit(vec![vec![0.0, 0.0], vec![1.0, 0.0]], 1.0).unwrap();
    let b: Sensing = DesignStrategy::new(vec![2.25, 0.75]).unwrap().into();
    let r = estimate_risk(&f, &b, 50_000, 2).unwrap();
    let p = phi(-1.5 / 2.0);
    for h in &r.hypotheses {
        assert!((h.phat - p).abs() <= 3.0 * binomial_se(p, h.trials));
    }
}

#[test]
fn strong_signal_ksets() {
    let f = zoo::make_ksets(8, 2, 10.0).unwrap();
    let r = estimate_risk(&f, &Sensing::ISOTROPIC, 2_000, 5).unwrap();
    assert!(r.max_risk < 0.01);
    assert!(edf(&f, 8.0).unwrap().w < 1e-3);
}

#[test]
fn intervals_bracket_estimates() {
    let f = zoo::make_stars(&Graph::path(4), 0.8).unwrap();
    let r = estimate_risk(&f, &Sensing::ISOTROPIC, 500, 1).unwrap();
    for h in &r.hypotheses {
        assert!(0.0 <= h.lo && h.lo <= h.phat && h.phat <= h.hi && h.hi <= 1.0);
    }
    let max = r.hypotheses.iter().map(|h| h.phat).fold(0.0, f64::max);
    assert_eq!(r.max_risk, max);
    assert_eq!(r.hypotheses[r.argmax].phat, max);
}

#[test]
fn flatness_separates_symmetric_and_path() {
    let sym = estimate_risk(&zoo::make_ksets(6, 2, 1.5).unwrap(), &Sensing::ISOTROPIC, 4_000, 8).unwrap();
    assert_eq!(risk_landscape_flatness(&sym).verdict, Verdict::Pass);
    let path = estimate_risk(&zoo::make_stars(&Graph::path(3), 1.0).unwrap(), &Sensing::ISOTROPIC, 4_000, 8).unwrap();
    let fl = risk_landscape_flatness(&path);
    assert_eq!(fl.verdict, Verdict::Fail, "{fl:?}");
}

fn family_and_point() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (1usize..6, 1usize..5).prop_flat_map(|(m, d)| {
        (
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), m),
            prop::collection::vec(-4.0f64..4.0, d),
            prop::collection::vec(-4.0f64..4.0, d),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn decoder_is_argmin((vs, y, _) in family_and_point()) {
        let f = Family::explicit(vs.clone(), 1.0).unwrap();
        let j = Decoder::new(&f).unwrap().decode(&y, &Sensing::ISOTROPIC).unwrap();
        let dj = sq_dist(&vs[j], &y);
        for (k, v) in vs.iter().enumerate() {
            let dk = sq_dist(v, &y);
            prop_assert!(dj <= dk + 1e-9);
            if k < j {
                prop_assert!(dk > dj - 1e-9);
            }
        }
    }

    #[test]
    fn decoder_translation_invariant((vs, y, shift) in family_and_point()) {
        // integer-valued shifts keep the arithmetic exact enough to compare argmins
        let shift: Vec<f64> = shift.iter().map(|x| x.round()).collect();
        let vs: Vec<Vec<f64>> = vs.iter().map(|v| v.iter().map(|x| (x * 4.0).round() / 4.0).collect()).collect();
        let y: Vec<f64> = y.iter().map(|x| (x * 8.0).round() / 8.0 + 1.0 / 16.0).collect();
        let moved: Vec<Vec<f64>> = vs.iter().map(|v| v.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        let ym: Vec<f64> = y.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let a = Decoder::new(&Family::explicit(vs, 1.0).unwrap()).unwrap().decode(&y, &Sensing::ISOTROPIC).unwrap();
        let b = Decoder::new(&Family::explicit(moved, 1.0).unwrap()).unwrap().decode(&ym, &Sensing::ISOTROPIC).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn uniform_weights_match_isotropic((vs, y, _) in family_and_point(), c in 0.1f64..10.0) {
        let f = Family::explicit(vs.clone(), 1.0).unwrap();
        let dec = Decoder::new(&f).unwrap();
        let b: Sensing = DesignStrategy::new(vec![c; vs[0].len()]).unwrap().into();
        let iso = dec.decode(&y, &Sensing::ISOTROPIC).unwrap();
        let des = dec.decode(&y, &b).unwrap();
        if iso != des {
            // only an exact tie can flip the argmin
            prop_assert!((sq_dist(&vs[iso], &y) - sq_dist(&vs[des], &y)).abs() < 1e-9);
        }
    }

    #[test]
    fn risk_deterministic((vs, _, _) in family_and_point(), seed in any::<u64>()) {
        let f = Family::explicit(vs, 1.0).unwrap();
        let a = estimate_risk(&f, &Sensing::ISOTROPIC, 20, seed).unwrap();
        let b = estimate_risk(&f, &Sensing::ISOTROPIC, 20, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
