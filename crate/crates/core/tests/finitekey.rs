use keyforge::finitekey::*;
use keyforge::Error;
use proptest::prelude::*;

fn h(q: f64) -> f64 {
    -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
}

fn spec(n: u64, m: u64, q_x: f64, q_z: f64) -> FiniteRunSpec {
    FiniteRunSpec {
        n,
        m,
        q_x,
        q_z,
        d_a: 2,
        d: 4,
    }
}

const UNIT_EC: LeakModel = LeakModel::Plain { f_ec: 1.0 };

#[test]
fn binary_entropy_examples() {
    assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
    assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
    assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
    assert!((binary_entropy(0.11).unwrap() - 0.4999).abs() < 1e-4);
    assert!(matches!(binary_entropy(1.5), Err(Error::OutOfRange(_))));
}

#[test]
fn serfling_examples() {
    assert_eq!(serfling_bound(1e6, 1e4, 0.0).unwrap(), 1.0);
    let expected = (-2.0 * 0.01f64.powi(2) * 1e6 * 1e4 / (1e6 - 1e4 + 1.0)).exp();
    let b = serfling_bound(1e6, 1e4, 0.01).unwrap();
    assert!((b - expected).abs() < 1e-15);
    assert!((b - 0.1326).abs() < 1e-4);

    let beta = serfling_deviation(1e6, 1e4, 1e-10).unwrap();
    assert!((beta - (990001.0 * 1e10f64.ln() / 2e10).sqrt()).abs() < 1e-15);
    assert!((beta - 0.03376).abs() < 1e-5);

    assert!(serfling_bound(10.0, 10.0, 0.1).is_err());
    assert!(serfling_deviation(10.0, 2.0, 0.0).is_err());
    assert!(serfling_bound(10.0, 2.0, -0.1).is_err());
}

#[test]
fn aep_examples() {
    let eta = aep_eta(1.0, 1.0);
    assert!((eta - (0.5f64.sqrt() + 2f64.sqrt() + 1.0)).abs() < 1e-15);
    assert!((eta - 3.1213).abs() < 1e-4);
    let delta = aep_delta(1e-8, eta);
    assert!((delta - 48.34).abs() < 1e-2);
    let b = aep_correction(1_000_000, 1.0, 1.0, 1.0, 1e-8).unwrap();
    assert!((b - (1e6 - 1e3 * delta)).abs() < 1e-6);
    assert!((b - (1e6 - 4.834e4)).abs() < 10.0);

    assert!(aep_correction(1_000_000, 0.0, 1.0, 1.0, 1e-8).unwrap() <= 0.0);
    // δ / sqrt(n) = 48.34 / sqrt(n) drops below 1e-3 only past n ≈ 2.3e9
    let n = 10_000_000_000;
    assert!((aep_correction(n, 0.7, 1.0, 1.0, 1e-8).unwrap() / n as f64 - 0.7).abs() < 1e-3);

    let required = aep_min_rounds(1e-8);
    assert_eq!(required, (1.6 * (2e16f64).log2()).ceil() as u64);
    assert_eq!(
        aep_correction(required - 1, 1.0, 1.0, 1.0, 1e-8).unwrap_err(),
        Error::TooFewRounds {
            n: required - 1,
            required
        }
    );
    assert!(aep_correction(required, 1.0, 1.0, 1.0, 1e-8).is_ok());
}

#[test]
fn leftover_hashing_examples() {
    let k = key_length_leftover(1000.0, 300.0, 1e-10);
    assert!((k.raw - (700.0 - 2.0 * (1.0 / 2e-10f64).log2())).abs() < 1e-9);
    assert_eq!(k.length, 635);
    let k = key_length_leftover(1000.0, 300.0, 0.5);
    assert_eq!((k.raw, k.length), (700.0, 700));
    let k = key_length_leftover(100.0, 300.0, 0.5);
    assert_eq!(k.length, 0);
    assert!(k.raw < 0.0);
}

#[test]
fn leak_examples() {
    let (ep, eir) = (1e-10f64, 1e-10f64);
    let logs = (8.0 / (ep * ep) + 2.0 / (2.0 - ep)).log2() + (1.0 / eir).log2();
    assert!((leak_ir_bound(1000, 0.0, ep, eir, UNIT_EC).unwrap() - logs).abs() < 1e-9);

    let l = leak_ir_bound(1_000_000, 0.05, ep, eir, UNIT_EC).unwrap();
    assert!((l - (1e6 * h(0.05) + logs)).abs() < 1e-6);
    assert!((1e6 * h(0.05) - 286_397.0).abs() < 1.0);

    let default = leak_ir_bound(1_000_000, 0.05, ep, eir, LeakModel::default()).unwrap();
    assert!((default - (1.16 * 1e6 * h(0.05) + logs)).abs() < 1e-6);

    assert!(leak_ir_bound(10, 0.05, ep, eir, LeakModel::Plain { f_ec: 0.9 }).is_err());
    assert!(leak_ir_bound(10, 0.6, ep, eir, UNIT_EC).is_err());
}

#[test]
fn aep_leak_exceeds_plain_leak() {
    for n in [1_000u64, 100_000, 10_000_000] {
        for q in [0.0, 0.01, 0.05, 0.11] {
            let plain = leak_ir_bound(n, q, 1e-10, 1e-10, UNIT_EC).unwrap();
            let aep = leak_ir_bound(n, q, 1e-10, 1e-10, LeakModel::Aep { d_a: 2 }).unwrap();
            assert!(aep > plain, "n={n} q={q}");
        }
    }
}

#[test]
fn eur_examples() {
    let params = SecurityParams::uniform(1e-10).unwrap();
    // at Q = 0 the Serfling widening (0.0338) dominates the penalties
    let k = eur_bb84_key_length(&spec(1_000_000, 10_000, 0.0, 0.0), &params, UNIT_EC).unwrap();
    let q_up = serfling_deviation(1_010_000.0, 10_000.0, 1e-10).unwrap();
    assert!((q_up - 0.03376).abs() < 1e-5);
    assert!(k.rate < 1.0 - h(q_up));
    assert!(k.rate > 1.0 - h(q_up) - 1e-3, "{}", k.rate);

    let k = eur_bb84_key_length(&spec(1_000_000, 10_000, 0.5, 0.0), &params, UNIT_EC).unwrap();
    assert_eq!(k.key.length, 0);

    // explicit composition
    let s = spec(1_000_000, 10_000, 0.02, 0.03);
    let q_up = 0.02 + serfling_deviation(1_010_000.0, 10_000.0, 1e-10).unwrap();
    let hmin = 1e6 * (1.0 - h(q_up));
    let leak = leak_ir_bound(1_000_000, 0.03, 1e-10, 1e-10, UNIT_EC).unwrap();
    let k = eur_bb84_key_length(&s, &params, UNIT_EC).unwrap();
    assert!((k.hmin_bits - hmin).abs() < 1e-6);
    assert_eq!(k.key, key_length_leftover(hmin, leak, 1e-10));

    assert!(eur_bb84_key_length(&spec(10, 10, 0.0, 0.0), &params, UNIT_EC).is_err());
}

#[test]
fn eur_convergence_to_asymptotic_rate() {
    let params = SecurityParams::uniform(1e-10).unwrap();
    let target = 1.0 - 2.0 * h(0.01);
    let n = 10_000_000_000u64;
    let k = eur_bb84_key_length(&spec(n, n / 100, 0.01, 0.01), &params, UNIT_EC).unwrap();
    assert!(k.rate <= target + 1e-9);
    assert!(target - k.rate < 5e-3, "{}", k.rate);
    for n in [100u64, 1_000] {
        let k = eur_bb84_key_length(&spec(n, n / 100, 0.01, 0.01), &params, UNIT_EC).unwrap();
        assert_eq!(k.key.length, 0);
    }
}

#[test]
fn security_parameters() {
    let p = SecurityParams::new(1e-10, 2e-10, 3e-10).unwrap();
    assert!((p.eps_sec() - 7e-10).abs() < 1e-22);
    assert_eq!(p.eps_cor(), 2e-10);
    assert!(SecurityParams::new(0.0, 0.1, 0.1).is_err());
    assert!(SecurityParams::new(0.5, 0.1, 0.4).is_err());
}

#[test]
fn postselection_examples() {
    let lift = postselection_lift(1e5, 1e-60, 1_000_000, 4).unwrap();
    assert!((lift.penalty - 30.0 * 1_000_001f64.log2()).abs() < 1e-9);
    assert!((lift.penalty - 597.9).abs() < 0.05);
    assert_eq!(lift.key.length, 99_402);
    assert!((lift.eps.log10() - (15.0 * 1_000_001f64.log10() - 60.0)).abs() < 1e-9);
    assert!((lift.eps.log10() - 30.0).abs() < 1e-4);

    let id = postselection_lift(1234.0, 1e-9, 1_000_000, 1).unwrap();
    assert_eq!((id.key.raw, id.eps, id.penalty), (1234.0, 1e-9, 0.0));
}

#[test]
fn eat_examples() {
    let c = eat_constant(2, 1.0, 0.01, 1.0).unwrap();
    assert!((c - 2.0 * (5f64.log2() + 1.0) * (1.0 - 2.0 * 0.01f64.log2()).sqrt()).abs() < 1e-12);
    assert!((c - 25.11).abs() < 1e-2);
    assert!(eat_rate(1_000_000, 0.0, 2, 1.0, 0.01, 1.0).unwrap() <= 0.0);
    let n = 10_000_000_000u64;
    assert!((eat_rate(n, 0.5, 2, 1.0, 0.01, 1.0).unwrap() / n as f64 - 0.5).abs() < 1e-3);
    // the ceiling applies to the gradient norm
    assert_eq!(eat_constant(2, 0.2, 0.01, 1.0).unwrap(), c);
    assert!(eat_constant(2, 1.0, 0.01, 0.0).is_err());
}

proptest! {
    #[test]
    fn serfling_round_trip(n in 100.0f64..1e9, frac in 0.001f64..0.5, log_eps in -30.0f64..-1.0) {
        let m = (n * frac).max(1.0).floor();
        let eps = 10f64.powf(log_eps);
        let beta = serfling_deviation(n, m, eps).unwrap();
        let back = serfling_bound(n, m, beta).unwrap();
        prop_assert!((back - eps).abs() <= 1e-12 * eps);
    }

    #[test]
    fn stricter_security_never_lengthens_the_key(
        log_n in 4.0f64..9.0, q in 0.0f64..0.08, log_eps in -12.0f64..-3.0, which in 0usize..3,
    ) {
        let n = 10f64.powf(log_n) as u64;
        let s = spec(n, n / 100, q, q);
        let loose = SecurityParams::uniform(10f64.powf(log_eps)).unwrap();
        let mut strict = loose;
        match which {
            0 => strict.eps_pa /= 10.0,
            1 => strict.eps_ir /= 10.0,
            _ => strict.eps_smooth /= 10.0,
        }
        let a = eur_bb84_key_length(&s, &loose, UNIT_EC).unwrap();
        let b = eur_bb84_key_length(&s, &strict, UNIT_EC).unwrap();
        prop_assert!(b.key.length <= a.key.length);
    }

    #[test]
    fn finite_rate_stays_below_asymptotic(log_n in 3.0f64..11.0, q in 0.0f64..0.11) {
        let n = 10f64.powf(log_n) as u64;
        let params = SecurityParams::uniform(1e-10).unwrap();
        let k = eur_bb84_key_length(&spec(n, (n / 100).max(1), q, q), &params, UNIT_EC).unwrap();
        prop_assert!(k.rate <= 1.0 - 2.0 * h(q) + 1e-9 || k.key.length == 0);
    }
}
