use proptest::prelude::*;
use sumlab_core::verify::{tuple_records, SweepSpec, Target, VerifyError};

/// `(p, κ, λ)` with `2 ≤ λ < κ ≤ 6` and `λ ≤ 4`, optionally with `3λ ≤ 2κ`.
fn cell(depth: bool) -> impl Strategy<Value = (u64, u32, u32)> {
    (prop_oneof![Just(3u64), Just(5u64)], 3u32..=6)
        .prop_flat_map(move |(p, k)| {
            let top = if depth { 2 * k / 3 } else { (k - 1).min(4) };
            (Just(p), Just(k), 2u32..=top.max(2))
        })
        .prop_filter("admissible", move |&(_, k, l)| l < k && (!depth || 3 * l <= 2 * k))
}

fn assert_all_pass(target: Target, p: u64, kappa: u32, lambda: u32, index: usize, seed: u64, skip: &[&str]) {
    let spec = SweepSpec { seed, ..SweepSpec::default() };
    let records = tuple_records(target, &spec, p, kappa, lambda, index).unwrap();
    for r in records.iter().filter(|r| !skip.contains(&r.claim.as_str())) {
        assert!(r.pass, "{target} p={p} κ={kappa} λ={lambda} #{index} seed {seed}: {r:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_matches_naive((p, k, l) in cell(false), index in 0usize..4096, seed in any::<u64>()) {
        assert_all_pass(Target::Eq43, p, k, l, index, seed, &[]);
    }

    #[test]
    fn dual_sums_split((p, k, l) in cell(false), index in 0usize..4096, seed in any::<u64>()) {
        assert_all_pass(Target::CstarSplit, p, k, l, index, seed, &[]);
    }

    #[test]
    fn coprime_parts_vanish((p, k, l) in cell(false), index in 0usize..4096, seed in any::<u64>()) {
        assert_all_pass(Target::Lemma5, p, k, l, index, seed, &[]);
    }

    #[test]
    fn p_part_bounds_and_gates((p, k, l) in cell(true), index in 0usize..4096, seed in any::<u64>()) {
        assert_all_pass(Target::Lemma6, p, k, l, index, seed, &[]);
        assert_all_pass(Target::Lemma7, p, k, l, index, seed, &[]);
    }

    /// The equality of the two congruence systems is checked separately; it
    /// fails at some points where `p | n2`.
    #[test]
    fn quintic_counts_and_inclusions((p, k, l) in cell(true), index in 0usize..4096, seed in any::<u64>()) {
        assert_all_pass(Target::Quintic, p, k, l, index, seed, &["system_matches_gamma_system"]);
    }
}

#[test]
fn tuples_reproduce() {
    let spec = SweepSpec::default();
    let a = tuple_records(Target::Lemma6, &spec, 3, 6, 4, 17).unwrap();
    let b = tuple_records(Target::Lemma6, &spec, 3, 6, 4, 17).unwrap();
    assert_eq!(a, b);
}

#[test]
fn tuples_respect_the_caps() {
    let spec = SweepSpec::default();
    assert!(matches!(tuple_records(Target::Lemma6, &spec, 3, 4, 3, 0), Err(VerifyError::SpecInvalid(_))));
    assert!(matches!(tuple_records(Target::Eq43, &spec, 11, 4, 2, 0), Err(VerifyError::SpecInvalid(_))));
    assert!(matches!(tuple_records(Target::Circle, &spec, 3, 4, 2, 0), Err(VerifyError::SpecInvalid(_))));
}
