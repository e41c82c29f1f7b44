use ldl_core::families::registry::{cm_family, rank_family};
use ldl_core::families::{
    builtin, builtin_names, complete_moment, nu_d, rank_bias, traces, traces_brute, FamilySpec, LemmaVariant,
    MomentTable, Poly, Side, SieveExponent,
};
use ldl_core::primes::sieve_primes;
use ldl_core::suites::verify_closed_forms;
use num_traits::Zero;
use proptest::prelude::*;
use std::collections::BTreeSet;

fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    sieve_primes(hi).unwrap().primes().iter().copied().filter(|&p| p >= lo).collect()
}

#[test]
fn verified_closed_forms_equal_point_counts_to_300() {
    for name in builtin_names() {
        let rep = verify_closed_forms(&builtin(name).unwrap(), 300, LemmaVariant::Verified).unwrap();
        assert!(rep.mismatches.is_empty(), "{name}: {:?}", &rep.mismatches[..rep.mismatches.len().min(4)]);
        assert!(rep.missing.is_empty(), "{name}");
        assert_eq!(rep.comparisons, 60 * 9);
    }
}

#[test]
fn printed_lemmas_fail_only_on_recorded_entries() {
    for name in builtin_names() {
        let rep = verify_closed_forms(&builtin(name).unwrap(), 300, LemmaVariant::Printed).unwrap();
        let bad: BTreeSet<(u32, Side)> = rep.mismatches.iter().map(|m| (m.1, m.2)).collect();
        let expected: BTreeSet<(u32, Side)> = match name {
            "rank1_36t" => [(2, Side::Good)].into(),
            "rank0_36t_b2" | "noncm_3x12t" => [(1, Side::Good)].into(),
            _ => BTreeSet::new(),
        };
        assert_eq!(bad, expected, "{name}");
    }
}

#[test]
fn cm_moments_vanish_on_inert_primes() {
    let mut fams: Vec<FamilySpec> = [1, 2, 3, 6].iter().flat_map(|&b| [cm_family(b, 1), cm_family(b, 2)]).collect();
    fams.extend([rank_family(1), rank_family(2)]);
    for fam in &fams {
        let modulus = if fam.name.starts_with("cm") { 3 } else { 4 };
        for p in primes_between(5, 300).into_iter().filter(|p| p % modulus == modulus - 1) {
            for r in 1..=8 {
                assert!(complete_moment(fam, p, r, Side::Good).unwrap().is_zero(), "{} p = {p} r = {r}", fam.name);
            }
        }
    }
}

#[test]
fn hasse_bound_for_every_trace() {
    for name in builtin_names() {
        let fam = builtin(name).unwrap();
        for p in primes_between(2, 300) {
            for (t, a) in traces(&fam, p).unwrap().into_iter().enumerate() {
                assert!((a * a) as u64 <= 4 * p, "{name} t = {t} p = {p} a = {a}");
            }
        }
    }
}

#[test]
fn kappa_one_moments_do_not_depend_on_b() {
    let base: Vec<MomentTable> =
        primes_between(5, 100).into_iter().map(|p| MomentTable::compute(&cm_family(1, 1), p, 6, 6).unwrap()).collect();
    for b in [2, 3, 6] {
        let fam = cm_family(b, 1);
        for t0 in &base {
            let t = MomentTable::compute(&fam, t0.p, 6, 6).unwrap();
            assert_eq!(t.moments, t0.moments, "B = {b}, p = {}", t0.p);
            assert_eq!(t.bad_moments, t0.bad_moments, "B = {b}, p = {}", t0.p);
            assert!((t.a_tilde - t0.a_tilde).abs() < 1e-12);
        }
    }
}

#[test]
fn rank_bias_cm_family_is_zero() {
    let v = rank_bias(&cm_family(1, 1), 1e4).unwrap();
    assert!(v.abs() < 0.1, "{v}");
}

fn coprime(m: u64, n: u64) -> bool {
    num_integer::gcd(m, n) == 1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nu_is_multiplicative(m in 1u64..1000, n in 1u64..1000, which in 0usize..3) {
        prop_assume!(coprime(m, n));
        let fam = [cm_family(1, 1), rank_family(1), cm_family(2, 2)][which].clone();
        prop_assert_eq!(nu_d(&fam, m * n).unwrap(), nu_d(&fam, m).unwrap() * nu_d(&fam, n).unwrap());
    }

    #[test]
    fn fast_traces_equal_definition(
        a in proptest::collection::vec(-20i64..20, 1..3),
        b in proptest::collection::vec(-20i64..20, 1..3),
        idx in 2usize..95,
    ) {
        let fam = FamilySpec {
            name: "random".into(),
            a: Poly::new(a),
            b: Poly::new(b),
            d_factors: vec![Poly::new(vec![1, 6])],
            k: SieveExponent::Infinite,
            forced_zero_primes: [2, 3].into(),
        };
        prop_assume!(fam.validate().is_ok());
        let p = sieve_primes(500).unwrap().primes()[idx];
        prop_assert_eq!(traces(&fam, p).unwrap(), traces_brute(&fam, p).unwrap());
    }

    #[test]
    fn family_json_round_trips(
        a in proptest::collection::vec(-50i64..50, 1..4),
        b in proptest::collection::vec(-50i64..50, 1..4),
        k in 3u32..8,
    ) {
        let fam = FamilySpec {
            name: "rt".into(),
            a: Poly::new(a),
            b: Poly::new(b),
            d_factors: vec![Poly::new(vec![1, 6])],
            k: SieveExponent::Finite(k),
            forced_zero_primes: [2, 3].into(),
        };
        prop_assume!(fam.validate().is_ok());
        let back = FamilySpec::from_json(&fam.to_json().to_string()).unwrap();
        prop_assert_eq!(back, fam);
    }
}

#[test]
fn missing_field_is_reported_by_path() {
    let err = FamilySpec::from_json(r#"{"name": "x", "A": [0], "B": [1, 6], "D_factors": [[1, "six"]], "k": 6}"#)
        .unwrap_err();
    assert!(err.to_string().contains("D_factors[0][1]"), "{err}");
}
