use ldl_core::constants::{
    aggregate_by_name, catalog, catalog_names, compute_constant, compute_constant_in, compute_many,
    exact_cancellation_report, export_csv, lookup, AggregateOptions, CatalogRow, Source, CSV_HEADER,
};
use ldl_core::primes::{first_n_primes, Method, Truncation};
use ldl_core::Error;
use std::collections::BTreeMap;

#[test]
fn catalog_keys_are_unique_and_resolvable() {
    let names = catalog_names();
    let mut seen = std::collections::BTreeSet::new();
    for n in &names {
        assert!(seen.insert(*n), "duplicate {n}");
        assert_eq!(lookup(n).unwrap().name, *n);
    }
    assert!(names.len() >= 15);
    assert!(matches!(lookup("nope"), Err(Error::UnknownConstant(_))));
}

#[test]
fn doubling_truncation_moves_less_than_tail_bound() {
    let table = first_n_primes(400_000).unwrap();
    for spec in catalog().into_iter().filter(|s| s.source == Source::PrimeSum) {
        let a = compute_constant_in(&table, spec.name, Truncation::FirstPrimes(200_000), spec.default_method).unwrap();
        let b = compute_constant_in(&table, spec.name, Truncation::FirstPrimes(400_000), spec.default_method).unwrap();
        assert!(
            (a.value - b.value).abs() <= a.tail_bound,
            "{}: moved {} > tail {}",
            spec.name,
            (a.value - b.value).abs(),
            a.tail_bound
        );
    }
}

#[test]
fn cm_constant_ordering() {
    let t = Truncation::FirstPrimes(100_000);
    assert!(compute_constant("gamma_cm_14", t).unwrap().value > compute_constant("gamma_cm_13", t).unwrap().value);
}

#[test]
fn batch_matches_single_evaluation() {
    let t = Truncation::FirstPrimes(50_000);
    let names = ["gamma_pnt", "gamma_st_0", "gamma_cm_13", "gamma_23"];
    let batch = compute_many(&names, Some(t), None, &[]).unwrap();
    for (n, r) in names.iter().zip(&batch) {
        let single = compute_constant(n, t).unwrap();
        assert_eq!(single.value.to_bits(), r.value.to_bits(), "{n}");
    }
    let both = compute_many(&["gamma_st_atilde"], Some(t), None, &[Method::DirectSum, Method::ClosedForm]).unwrap();
    assert_eq!(both.len(), 2);
    assert!((both[0].value - both[1].value).abs() < 1e-12);
    assert!(matches!(
        compute_many(&["gamma_st_0"], Some(t), None, &[Method::MomentSeries]),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn csv_header_is_fixed() {
    let r = compute_constant("gamma_23", Truncation::PrimeLimit(3)).unwrap();
    let csv = export_csv(&[CatalogRow::new(&r).unwrap()]).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn symbolic_and_per_prime_cancellation() {
    let rep = exact_cancellation_report(2000).unwrap();
    assert!(rep.holds());
    assert!(rep.perturbed_nonzero);
}

#[test]
fn mixed_truncations_need_consent() {
    let mut overrides = BTreeMap::new();
    overrides.insert("gamma_st_2".to_string(), Truncation::FirstPrimes(20_000));
    let opts = AggregateOptions { prime_truncation: Truncation::FirstPrimes(10_000), overrides, ..Default::default() };
    assert!(matches!(aggregate_by_name("cusp", &opts), Err(Error::Truncation(_))));
    let ok = AggregateOptions { allow_mixed: true, ..opts };
    aggregate_by_name("cusp", &ok).unwrap();
}

#[test]
fn cusp_aggregate_is_gamma_pnt() {
    let opts = AggregateOptions { prime_truncation: Truncation::FirstPrimes(100_000), ..Default::default() };
    let agg = aggregate_by_name("cusp", &opts).unwrap();
    let g = compute_constant("gamma_pnt", Truncation::FirstPrimes(100_000)).unwrap().value;
    assert_eq!(agg.derived_total, g);
    let st: f64 = agg.bracket.iter().filter(|t| t.name.starts_with("gamma_st")).map(|t| t.sign * t.value).sum();
    assert!((agg.bracket_total.unwrap() - (g + st)).abs() < 1e-15);
    assert!(st.abs() < 1e-6, "Sato-Tate combination {st}");
}

#[test]
fn family_constants_need_enough_primes() {
    assert!(matches!(
        compute_constant("gamma_cm_atilde_11", Truncation::FirstPrimes(100)),
        Err(Error::Precondition(_))
    ));
}
