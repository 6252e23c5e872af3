use mimo_cc::combinatorics::binomial;
use mimo_cc::delivery::{
    audit_delivery, build_codewords, build_placement, plan_transmissions, read_plan_dump,
    write_codeword_dump, write_plan_dump, Library,
};
use mimo_cc::{Error, NetworkConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(K, t, Ω)` with `t < K`, `t+1 ≤ Ω ≤ K`.
fn shape(max_k: usize) -> impl Strategy<Value = (usize, usize, usize)> {
    (1..=max_k)
        .prop_flat_map(|k| (Just(k), 0..k))
        .prop_flat_map(|(k, t)| (Just(k), Just(t), t + 1..=k))
}

#[test]
fn slot_count_matches_demand() {
    for k in 1..=12usize {
        for t in 0..k {
            for omega in t + 1..=k {
                assert_eq!(
                    binomial(k - 1, omega - 1) * binomial(omega - 1, t),
                    binomial(k - 1, t) * binomial(k - t - 1, omega - t - 1),
                    "K={k} t={t} Ω={omega}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_is_exact((k, t, omega) in shape(6), q in 1..=3usize, bits in 1..300usize, seed in any::<u64>()) {
        let mut cfg = NetworkConfig::with_gain(k, omega - t, 1, t).unwrap();
        cfg.file_size_bits = bits;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let library = Library::random(cfg.library_size, bits, &mut rng);
        let requests: Vec<usize> = (0..k).map(|_| rng.random_range(0..cfg.library_size)).collect();
        let plan = plan_transmissions(&cfg, omega, 1, q).unwrap();
        let placement = build_placement(&cfg, &library).unwrap();
        let cw = build_codewords(&plan, &requests, &placement).unwrap();
        let audit = audit_delivery(&plan, &cw, &placement, &requests, &library).unwrap();
        prop_assert!(audit.freshness.is_clean());
        prop_assert_eq!(audit.freshness.delivered, audit.freshness.demanded);
        prop_assert_eq!(plan.transmissions.len() as u64, binomial(k, omega));
        for tx in &plan.transmissions {
            prop_assert_eq!(tx.groups.len() as u64, binomial(omega, t + 1));
        }
    }

    #[test]
    fn cache_holds_m_files((k, t, _omega) in shape(7), chunks in 1..20usize) {
        let mut cfg = NetworkConfig::with_gain(k, 1, 1, t).unwrap();
        // file length a multiple of C(K,t): no padding
        cfg.file_size_bits = chunks * binomial(k, t) as usize;
        let library = Library::random(cfg.library_size, cfg.file_size_bits, &mut ChaCha8Rng::seed_from_u64(3));
        let placement = build_placement(&cfg, &library).unwrap();
        for user in 0..k {
            prop_assert_eq!(placement.cached_bits(user), cfg.cache_size * cfg.file_size_bits);
        }
    }
}

#[test]
fn plans_and_codewords_are_byte_identical() {
    let cfg = NetworkConfig::with_gain(5, 2, 1, 2).unwrap();
    let dump = || {
        let library = Library::random(cfg.library_size, 333, &mut ChaCha8Rng::seed_from_u64(9));
        let plan = plan_transmissions(&cfg, 4, 1, 2).unwrap();
        let placement = build_placement(&cfg, &library).unwrap();
        let cw = build_codewords(&plan, &[4, 4, 0, 1, 2], &placement).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_plan_dump(&plan, &mut a).unwrap();
        write_codeword_dump(&plan, &cw, &mut b).unwrap();
        (a, b)
    };
    let (plan_a, cw_a) = dump();
    assert_eq!(dump(), (plan_a.clone(), cw_a));
    let records = read_plan_dump(plan_a.as_slice()).unwrap();
    assert_eq!(records.len(), 5);
}

#[test]
fn flipped_bit_is_caught() {
    let cfg = NetworkConfig::with_gain(4, 2, 1, 1).unwrap();
    let library = Library::random(cfg.library_size, 120, &mut ChaCha8Rng::seed_from_u64(4));
    let plan = plan_transmissions(&cfg, 3, 1, 1).unwrap();
    let placement = build_placement(&cfg, &library).unwrap();
    let requests = [0, 1, 2, 3];
    for target in 0..plan.transmissions.len() {
        let mut cw = build_codewords(&plan, &requests, &placement).unwrap();
        let word = cw
            .codewords
            .iter_mut()
            .find(|c| c.transmission == target)
            .unwrap();
        let b = !word.substreams[0][5];
        word.substreams[0].set(5, b);
        let b = !word.payload[5];
        word.payload.set(5, b);
        let err = audit_delivery(&plan, &cw, &placement, &requests, &library).unwrap_err();
        assert!(matches!(err, Error::Verification { .. }), "{err}");
        assert_eq!(err.exit_code(), 4);
    }
}
