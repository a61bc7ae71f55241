use std::collections::BTreeSet;

use dpmeter_core::error::ProtocolFailure;
use dpmeter_core::math::Running;
use dpmeter_core::noise::{laplace_cdf, utility_bounds, LaplaceScale};
use dpmeter_core::protocol::*;
use dpmeter_core::rng::{seeded, stream, Domain};
use dpmeter_core::secure_agg::wire::{Record, Transcript};
use dpmeter_core::secure_agg::{FixedPointCodec, DEFAULT_SCALE};
use dpmeter_core::stats::ks_one_sample;
use rand::seq::index::sample;
use rand::Rng;

fn config(n: u32, m: u32, w: f64, variant: Variant) -> ClusterConfig {
    let codec = FixedPointCodec::with_headroom(DEFAULT_SCALE, n, 5000.0, 20_000.0).unwrap();
    ClusterConfig::new(n, m, w, 1.0, 10, codec, variant).unwrap()
}

fn measurements(n: u32, slot: u32) -> Vec<f64> {
    let mut rng = stream(99, Domain::Scenario, slot as u64, 0);
    (0..n).map(|_| rng.random_range(0.0..5000.0)).collect()
}

#[test]
fn surviving_shares_give_laplace_noise() {
    let (n, m) = (100u32, 20u32);
    let session = ClusterSession::new(config(n, m, 30.0, Variant::Robust), 11).unwrap();
    let lambda = LaplaceScale::new(1200.0).unwrap();
    let mut rng = seeded(12);
    let mut errors = vec![];
    for slot in 0..10_000u32 {
        let failures: BTreeSet<u32> = sample(&mut rng, n as usize, m as usize).iter().map(|i| i as u32).collect();
        let r = session
            .run_round(&RoundInput {
                slot,
                measurements: measurements(n, slot),
                lambda: Some(lambda),
                failures,
                ..Default::default()
            })
            .unwrap();
        assert!(!r.failed());
        assert_eq!(r.live_count, n - m);
        // Exactness against the meters' own noisy readings.
        let want: i128 = r.readings.iter().map(|x| (x.noisy * DEFAULT_SCALE).round() as i128).sum();
        assert_eq!(r.recovered_encoded, Some(want));
        errors.push(r.error());
    }
    // Quantization adds at most 0.05 W per meter, far below λ.
    let ks = ks_one_sample(&errors, |x| laplace_cdf(x, lambda));
    assert!(ks.passes(0.01), "{ks:?}");
}

#[test]
fn all_live_error_matches_bound() {
    let (n, m) = (100u32, 20u32);
    let session = ClusterSession::new(config(n, m, 30.0, Variant::Robust), 21).unwrap();
    let lambda = LaplaceScale::new(1000.0).unwrap();
    let mut acc = Running::default();
    let mut total = 0.0;
    for slot in 0..10_000u32 {
        let x = vec![50.0; n as usize];
        let r = session
            .run_round(&RoundInput { slot, measurements: x, lambda: Some(lambda), ..Default::default() })
            .unwrap();
        total = r.true_sum;
        acc.push(r.error().abs() / (r.true_sum + 1.0));
    }
    let b = utility_bounds(0.2, lambda, total).unwrap();
    assert!((acc.mean() / b.mu - 1.0).abs() < 0.02, "{} vs {}", acc.mean(), b.mu);
}

#[test]
fn message_counts() {
    let session = ClusterSession::new(config(30, 5, 6.0, Variant::Robust), 3).unwrap();
    let failures = BTreeSet::from([1, 4, 9]);
    let r = session
        .run_round(&RoundInput { slot: 1, measurements: measurements(30, 1), failures, ..Default::default() })
        .unwrap();
    assert_eq!((r.messages_round1, r.broadcasts, r.messages_round2), (27, 1, 27));
}

#[test]
fn same_seed_same_result() {
    let input = RoundInput {
        slot: 4,
        measurements: measurements(40, 4),
        lambda: Some(LaplaceScale::new(300.0).unwrap()),
        failures: BTreeSet::from([3, 7]),
        ..Default::default()
    };
    let a = ClusterSession::new(config(40, 4, 8.0, Variant::Robust), 5).unwrap().run_round(&input).unwrap();
    let b = ClusterSession::new(config(40, 4, 8.0, Variant::Robust), 5).unwrap().run_round(&input).unwrap();
    assert_eq!(a, b);
    let c = ClusterSession::new(config(40, 4, 8.0, Variant::Robust), 6).unwrap().run_round(&input).unwrap();
    assert_ne!(a.recovered_encoded, c.recovered_encoded);
}

#[test]
fn announced_failures_beyond_tolerance_are_refused() {
    let session = ClusterSession::new(config(10, 2, 3.0, Variant::Robust), 1).unwrap();
    let r = session
        .run_round(&RoundInput {
            measurements: measurements(10, 0),
            failures: BTreeSet::from([1]),
            claimed_missing: BTreeSet::from([2, 3]),
            ..Default::default()
        })
        .unwrap();
    assert!(matches!(r.failure, Some(ProtocolFailure::TooManyFailures { .. })));
}

fn ciphertext_of(t: &Transcript, node: u32) -> u64 {
    t.records
        .iter()
        .find_map(|r| match r {
            Record::Ciphertext(c) if c.sender == node => Some(c.value),
            _ => None,
        })
        .unwrap()
}

#[test]
fn simple_variant_leaks_a_falsely_missing_node() {
    // The aggregator receives node 0's ciphertext but announces node 0 as
    // missing; its participants answer with their dummy keys towards it,
    // which cancel node 0's dummy keys.
    let n = 8;
    let session = ClusterSession::new(config(n, 0, 3.0, Variant::Simple), 8).unwrap();
    let x = measurements(n, 2);
    let mut t = Transcript::new(session.config().modulus());
    let r = session
        .run_round_recorded(
            &RoundInput {
                slot: 2,
                measurements: x.clone(),
                claimed_missing: BTreeSet::from([0]),
                ..Default::default()
            },
            Some(&mut t),
        )
        .unwrap();
    assert!(!r.failed());
    let m = session.config().modulus();
    let mut acc = m.sub(ciphertext_of(&t, 0), session.keystream(0, 2).unwrap());
    for rec in &t.records {
        if let Record::Response(resp) = rec {
            acc = m.add(acc, resp.value);
        }
    }
    let exposed = m.to_signed(acc);
    assert_eq!(exposed, (x[0] * DEFAULT_SCALE).round() as i128);
}

#[test]
fn robust_variant_hides_a_falsely_missing_node() {
    let n = 8;
    let session = ClusterSession::new(config(n, 2, 3.0, Variant::Robust), 8).unwrap();
    let x = measurements(n, 2);
    let mut t = Transcript::new(session.config().modulus());
    session
        .run_round_recorded(
            &RoundInput { slot: 2, measurements: x.clone(), claimed_missing: BTreeSet::from([0]), ..Default::default() },
            Some(&mut t),
        )
        .unwrap();
    let m = session.config().modulus();
    let mut acc = m.sub(ciphertext_of(&t, 0), session.keystream(0, 2).unwrap());
    for rec in &t.records {
        if let Record::Response(resp) = rec {
            acc = m.add(acc, resp.value);
        }
    }
    assert_ne!(m.to_signed(acc), (x[0] * DEFAULT_SCALE).round() as i128);
}

#[test]
fn lying_supplier_exposure_in_a_real_round() {
    // Find a slot where node 0 has at most M participants, claim them all
    // missing and read node 0's value out of its ciphertext and response.
    let (n, tol) = (12u32, 4u32);
    let session = ClusterSession::new(config(n, tol, 2.0, Variant::Robust), 31).unwrap();
    let slot = (0..1000).find(|&s| {
        let p = session.participants(0, s).unwrap();
        !p.is_empty() && p.len() <= tol as usize
    });
    let slot = slot.unwrap();
    let parts = session.participants(0, slot).unwrap();
    let x = measurements(n, slot);
    let mut t = Transcript::new(session.config().modulus());
    session
        .run_round_recorded(
            &RoundInput { slot, measurements: x.clone(), claimed_missing: parts.iter().copied().collect(), ..Default::default() },
            Some(&mut t),
        )
        .unwrap();
    let m = session.config().modulus();
    let resp0 = t
        .records
        .iter()
        .find_map(|r| match r {
            Record::Response(c) if c.sender == 0 => Some(c.value),
            _ => None,
        })
        .unwrap();
    let exposed = m.to_signed(m.sub(m.sub(ciphertext_of(&t, 0), resp0), session.keystream(0, slot).unwrap()));
    assert_eq!(exposed, (x[0] * DEFAULT_SCALE).round() as i128);
}

#[test]
fn selection_simulation_matches_closed_forms() {
    let mut rng = seeded(41);
    // Collusion only.
    for &(n, t, w) in &[(20u32, 10u32, 3.0), (50, 30, 5.0)] {
        let p = collusion_success_prob(n, t, w).unwrap();
        let adv = AdversaryConfig::new(t, 0, AdversaryMode::HonestButCurious);
        let e = simulate_attack(n, w, &adv, 1_000_000, &mut rng).unwrap();
        assert!((e.rate() - p).abs() < 3.0 * e.std_error(p), "{} vs {p}", e.rate());
    }
    // Lying supplier.
    let (n, t, m, w) = (40u32, 10u32, 15u32, 4.0);
    let p = lying_supplier_success_prob(n, t, m, w).unwrap();
    let adv = AdversaryConfig::new(t, m, AdversaryMode::DishonestNonIntrusive);
    let e = simulate_attack(n, w, &adv, 1_000_000, &mut rng).unwrap();
    assert!((e.rate() - p).abs() < 3.0 * e.std_error(p), "{} vs {p}", e.rate());
}

#[test]
fn prf_selection_attack_matches_closed_form() {
    let (n, t, w) = (20u32, 10u32, 3.0);
    let session = ClusterSession::new(config(n, 0, w, Variant::Robust), 77).unwrap();
    let adv = AdversaryConfig::new(t, 0, AdversaryMode::HonestButCurious);
    let e = simulate_attack_protocol(&session, &adv, 0..20_000).unwrap();
    let p = collusion_success_prob(n, t, w).unwrap();
    assert!((e.rate() - p).abs() < 3.0 * e.std_error(p), "{} vs {p}", e.rate());
}

#[test]
fn attack_extremes() {
    let mut rng = seeded(1);
    let all = AdversaryConfig::new(99, 0, AdversaryMode::HonestButCurious);
    assert_eq!(simulate_attack(100, 30.0, &all, 1000, &mut rng).unwrap().rate(), 1.0);
    let none = AdversaryConfig::new(0, 0, AdversaryMode::DishonestNonIntrusive);
    assert_eq!(simulate_attack(100, 30.0, &none, 100_000, &mut rng).unwrap().rate(), 0.0);
}

#[test]
fn years_to_compromise() {
    let p = collusion_success_prob(100, 50, 30.0).unwrap();
    let years = expected_years_to_compromise(p, 5);
    assert!(years > 400.0 && years < 500.0, "{years}");
}

#[test]
fn recorded_rounds_replay_from_bytes() {
    for variant in [Variant::Robust, Variant::Simple] {
        let session = ClusterSession::new(config(12, 3, 4.0, variant), 41).unwrap();
        for (slot, failures) in [(0u32, vec![]), (1, vec![2u32, 7])] {
            let mut t = Transcript::new(session.config().modulus());
            let r = session
                .run_round_recorded(
                    &RoundInput {
                        slot,
                        measurements: measurements(12, slot),
                        lambda: Some(LaplaceScale::new(300.0).unwrap()),
                        failures: failures.into_iter().collect(),
                        ..Default::default()
                    },
                    Some(&mut t),
                )
                .unwrap();
            let back = Transcript::from_bytes(&t.to_bytes()).unwrap();
            assert_eq!(Some(session.replay(&back).unwrap().encoded), r.recovered_encoded);
        }
    }
    let session = ClusterSession::new(config(12, 3, 4.0, Variant::Robust), 41).unwrap();
    assert!(session.replay(&Transcript::new(session.config().modulus())).is_err());
}
