//! Catalog of named γ constants, family constants from point counts, and
//! the assembled lower-order coefficients.

mod aggregate;
mod family;

pub use aggregate::*;
pub use family::*;

use crate::error::{Error, Result};
use crate::families::{builtin, FamilySpec};
use crate::numerics::{literals, ordered_sum};
use crate::primes::{
    first_n_primes, gamma_pnt, gamma_pnt_ab, log_power_tail, nth_prime_upper_bound, sieve_primes, ConstantResult,
    Method, PrimeTable, Truncation,
};
use crate::series::{g_st_at_prime, moment_series_sum, MomentKind};
use num_traits::ToPrimitive;
use serde::Serialize;
use std::collections::BTreeMap;

/// How a catalog entry is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Convergent sum over primes.
    PrimeSum,
    /// Finite closed expression.
    Exact,
    /// Ã main part of a built-in family.
    FamilyAtilde,
    /// Ã sieve part of a built-in family.
    FamilySieve,
    /// Zeroth/second moment sieve parts of a built-in family.
    FamilySieve012,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantSpec {
    pub name: &'static str,
    pub summand: &'static str,
    /// Residue class (a, b) the sum runs over, if any.
    pub class: Option<(u64, u64)>,
    pub default_truncation: Truncation,
    pub default_method: Method,
    pub source: Source,
    /// Built-in family for family constants.
    pub family: Option<&'static str>,
    pub reference_value: Option<f64>,
    /// Stated error of the reference value, when one is given.
    pub reference_error: Option<f64>,
    pub reference_note: &'static str,
}

const MILLION: Truncation = Truncation::FirstPrimes(1_000_000);
const FOUR_MILLION: Truncation = Truncation::FirstPrimes(4_000_000);
const FIVE_K: Truncation = Truncation::FirstPrimes(5_000);
const TEN_K: Truncation = Truncation::FirstPrimes(10_000);

#[allow(clippy::too_many_arguments)]
fn entry(
    name: &'static str,
    summand: &'static str,
    class: Option<(u64, u64)>,
    default_truncation: Truncation,
    default_method: Method,
    source: Source,
    family: Option<&'static str>,
    reference: (Option<f64>, Option<f64>, &'static str),
) -> ConstantSpec {
    ConstantSpec {
        name,
        summand,
        class,
        default_truncation,
        default_method,
        source,
        family,
        reference_value: reference.0,
        reference_error: reference.1,
        reference_note: reference.2,
    }
}

/// Every named constant, in display order.
pub fn catalog() -> Vec<ConstantSpec> {
    use Method::*;
    use Source::*;
    let mut v = vec![
        entry(
            "gamma_pnt",
            "-γ - Σ log p/(p²-p)  (= 1 + ∫ E(t)/t² dt)",
            None,
            MILLION,
            ClosedForm,
            PrimeSum,
            None,
            (Some(-1.33258), Some(5e-6), "cusp-form correction; first million primes"),
        ),
        entry(
            "gamma_pnt_13",
            "1 + ∫ 2E_{1,3}(t)/t² dt",
            Some((1, 3)),
            FOUR_MILLION,
            ClosedForm,
            PrimeSum,
            None,
            (Some(-2.375494), Some(1e-5), "p ≡ 1 mod 3 PNT constant; four million primes"),
        ),
        entry(
            "gamma_pnt_14",
            "1 + ∫ 2E_{1,4}(t)/t² dt",
            Some((1, 4)),
            FOUR_MILLION,
            ClosedForm,
            PrimeSum,
            None,
            (Some(-2.224837), Some(1e-5), "p ≡ 1 mod 4 PNT constant; four million primes"),
        ),
        entry(
            "gamma_st_0",
            "2 log p/(p(p+1))",
            None,
            MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(0.7691106216), Some(2e-8), "Sato-Tate zeroth moment constant"),
        ),
        entry(
            "gamma_st_2",
            "(4p²+3p+1) log p/(p(p+1)³)",
            None,
            FOUR_MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(1.1851820642), Some(1e-6), "Sato-Tate second moment constant"),
        ),
        entry(
            "gamma_st_atilde",
            "Σ_ℓ C_ℓ P(ℓ) = (2p+1)(p-1) log p/(p(p+1)³)",
            None,
            MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(0.4160714430), Some(1e-7), "Sato-Tate r >= 3 constant; first million primes"),
        ),
        entry(
            "gamma_cm_13",
            "2(3p+1) log p/(p+1)³, p ≡ 1 mod 3",
            Some((1, 3)),
            MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(0.38184489), Some(1e-6), "CM r >= 3 constant; first million primes"),
        ),
        entry(
            "gamma_cm_14",
            "2(3p+1) log p/(p+1)³, p ≡ 1 mod 4",
            Some((1, 4)),
            MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(0.46633061), Some(1e-6), "CM r >= 3 constant; first million primes"),
        ),
        entry(
            "gamma_cm0_ge5",
            "4 log p/(p(p+1)), p >= 5",
            None,
            MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(0.709919), Some(1e-4), "zeroth moment constant of y² = x³ + B(6T+1)^κ; first million primes"),
        ),
        entry(
            "gamma_23",
            "log 2 + 2 log 3/3",
            None,
            Truncation::PrimeLimit(3),
            ClosedForm,
            Exact,
            None,
            (Some(1.4255554), Some(1e-6), "contribution of p = 2, 3"),
        ),
        entry(
            "gamma_cm2_13",
            "2(5p²+2p+1) log p/(p(p+1)³), p ≡ 1 mod 3",
            Some((1, 3)),
            FOUR_MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(0.6412881898), Some(1e-6), "second moment constant of y² = x³ + B(6T+1)^κ"),
        ),
        entry(
            "gamma_ap_3",
            "2[log p/(p³-p) + [p≡1(12)] log p/(p²-1) - [p≡5(12)] log p/(p²-1)], p >= 5",
            None,
            MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(-0.082971426), Some(1e-8), "bad-prime constant of y² = x³ - 3x + 12T"),
        ),
        entry(
            "gamma_0_3",
            "(4p-2) log p/(p²(p+1)), p >= 5",
            None,
            MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(0.331539448), Some(1e-8), "zeroth moment constant of y² = x³ - 3x + 12T, as printed"),
        ),
        entry(
            "gamma_1_3",
            "[(3/p)+(-3/p)](p-1) log p/(p²(p+1)²), p >= 5",
            None,
            MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(-0.013643784), Some(1e-8), "first moment constant of y² = x³ - 3x + 12T, as printed"),
        ),
        entry(
            "gamma_2_3",
            "((2-e)p⁴ - (13+7e)p³ - (25+6e)p² - (16+2e)p - 4) log p/(p³(p+1)³), e = (-3/p), p >= 5",
            None,
            MILLION,
            DirectSum,
            PrimeSum,
            None,
            (Some(0.085627), Some(5e-6), "second moment constant of y² = x³ - 3x + 12T, as printed"),
        ),
        entry(
            "gamma_atilde_3",
            "Ã(p) p^{3/2}(p-1) log p/(p(p+1)³)",
            None,
            FIVE_K,
            DirectSum,
            FamilyAtilde,
            Some("noncm_3x12t"),
            (Some(0.3369), Some(0.0367), "r >= 3 constant of y² = x³ - 3x + 12T"),
        ),
    ];
    for (b, kappa, main, sieve) in [
        (1, 1, 0.3437, 0.000446),
        (1, 2, 0.4203, 0.000699),
        (2, 2, 0.5670, 0.000761),
        (3, 2, 0.1413, 0.000125),
        (6, 2, 0.2620, 0.000199),
    ] {
        let fam: &'static str = Box::leak(format!("cm_b{b}_kappa{kappa}").into_boxed_str());
        v.push(entry(
            Box::leak(format!("gamma_cm_atilde_{b}{kappa}").into_boxed_str()),
            "Ã(p) p^{3/2}(p-1) log p/(p(p+1)³)",
            Some((1, 3)),
            FIVE_K,
            Method::DirectSum,
            FamilyAtilde,
            Some(fam),
            (Some(main), Some(0.0367), "r >= 3 constant; first 5000 primes"),
        ));
        v.push(entry(
            Box::leak(format!("gamma_cm_sieve_{b}{kappa}").into_boxed_str()),
            "Ã(p) H^sieve(p) p^{3/2}(p-1) log p/(p(p+1)³)",
            Some((1, 3)),
            FIVE_K,
            Method::DirectSum,
            FamilySieve,
            Some(fam),
            (Some(sieve), Some(1e-4), "sieved r >= 3 constant"),
        ));
    }
    v.push(entry(
        "gamma_cm_sieve_012",
        "-H^sieve(p) log p [2𝒜₀/(p(p+1)) - 𝒜₂(p-1)/(p(p+1)³)]",
        None,
        FIVE_K,
        Method::DirectSum,
        FamilySieve012,
        Some("cm_b1_kappa2"),
        (Some(-0.004288), Some(1e-4), "sieved r ∈ {0,1,2} constant"),
    ));
    for (b, name, main, sieve) in [(1, "rank1_36t", -0.1109, -0.0003), (2, "rank0_36t_b2", 0.6279, 0.0013)] {
        v.push(entry(
            Box::leak(format!("gamma_rank_atilde_{b}").into_boxed_str()),
            "Ã(p) p^{3/2}(p-1) log p/(p(p+1)³)",
            Some((1, 4)),
            TEN_K,
            Method::DirectSum,
            FamilyAtilde,
            Some(name),
            (Some(main), Some(0.05), "r >= 3 constant of y² = x³ - B(36T+6)(36T+5)x; first 10^4 primes"),
        ));
        v.push(entry(
            Box::leak(format!("gamma_rank_sieve_{b}").into_boxed_str()),
            "Ã(p) H^sieve(p) p^{3/2}(p-1) log p/(p(p+1)³)",
            Some((1, 4)),
            TEN_K,
            Method::DirectSum,
            FamilySieve,
            Some(name),
            (Some(sieve), Some(1e-4), "sieved r >= 3 constant of y² = x³ - B(36T+6)(36T+5)x"),
        ));
    }
    v
}

pub fn catalog_names() -> Vec<&'static str> {
    catalog().into_iter().map(|c| c.name).collect()
}

pub fn lookup(name: &str) -> Result<ConstantSpec> {
    catalog().into_iter().find(|c| c.name == name).ok_or_else(|| Error::UnknownConstant(name.to_string()))
}

/// Sieves enough primes for a truncation.
pub fn table_for(t: Truncation) -> Result<PrimeTable> {
    match t {
        Truncation::FirstPrimes(n) => first_n_primes(n as usize),
        Truncation::PrimeLimit(x) => sieve_primes(x.max(2)),
    }
}

/// Evaluates a catalog constant with its default method.
pub fn compute_constant(name: &str, truncation: Truncation) -> Result<ConstantResult> {
    let spec = lookup(name)?;
    compute_constant_with(name, truncation, spec.default_method)
}

pub fn compute_constant_with(name: &str, truncation: Truncation, method: Method) -> Result<ConstantResult> {
    let spec = lookup(name)?;
    if matches!(spec.source, Source::PrimeSum | Source::Exact) {
        let table = table_for(truncation)?;
        compute_in(&table, &spec, truncation, method)
    } else {
        compute_family_constant(&spec, truncation, method)
    }
}

/// Evaluates a prime-sum or exact constant from an existing prime table.
pub fn compute_constant_in(
    table: &PrimeTable,
    name: &str,
    truncation: Truncation,
    method: Method,
) -> Result<ConstantResult> {
    let spec = lookup(name)?;
    if spec.source != Source::PrimeSum && spec.source != Source::Exact {
        return compute_family_constant(&spec, truncation, method);
    }
    compute_in(table, &spec, truncation, method)
}

fn unsupported(name: &str, m: Method) -> Error {
    Error::Unsupported(format!("method {m:?} for '{name}'"))
}

fn compute_in(table: &PrimeTable, spec: &ConstantSpec, trunc: Truncation, method: Method) -> Result<ConstantResult> {
    let name = spec.name;
    if spec.source == Source::Exact {
        if method != Method::ClosedForm && method != Method::DirectSum {
            return Err(unsupported(name, method));
        }
        return Ok(ConstantResult {
            name: name.into(),
            value: 2f64.ln() + 2.0 * literals::ln_3() / 3.0,
            truncation: Truncation::PrimeLimit(3),
            last_prime: 3,
            tail_bound: 0.0,
            method: Method::ClosedForm,
        });
    }
    match name {
        "gamma_pnt" => return gamma_pnt(table, method, trunc),
        "gamma_pnt_13" => return gamma_pnt_ab(table, 1, 3, method, trunc),
        "gamma_pnt_14" => return gamma_pnt_ab(table, 1, 4, method, trunc),
        _ => {}
    }
    let ps = table.truncate(trunc)?;
    let last = *ps.last().ok_or_else(|| Error::Precondition("empty truncation".into()))?;
    let x = last as f64;
    let result = |value: f64, tail_bound: f64, method: Method| ConstantResult {
        name: name.into(),
        value,
        truncation: trunc,
        last_prime: last,
        tail_bound,
        method,
    };
    let in_class = |a: u64, b: u64| -> Vec<u64> { ps.iter().copied().filter(|p| p % b == a).collect() };
    let lg = |p: u64| (p as f64).ln();
    match (name, method) {
        ("gamma_st_atilde", Method::MomentSeries) => {
            let (s, _) = moment_series_sum(MomentKind::SatoTate, ps)?;
            Ok(result(s.value, 2.0 * log_power_tail(x, 2.0) + s.tail_bound, method))
        }
        ("gamma_st_atilde", Method::ClosedForm) => {
            // g_ST(p/(p+1)²)·(p−1)/(p+1) in exact arithmetic
            let v = ordered_sum(ps, |&p| {
                let w = g_st_at_prime(p) * num_rational::BigRational::new((p - 1).into(), (p + 1).into());
                w.to_f64().unwrap_or(f64::NAN) * lg(p)
            });
            Ok(result(v, 2.0 * log_power_tail(x, 2.0), method))
        }
        ("gamma_cm_13" | "gamma_cm_14", Method::MomentSeries) => {
            let b = if name == "gamma_cm_13" { 3 } else { 4 };
            let (s, _) = moment_series_sum(MomentKind::Cm, &in_class(1, b))?;
            Ok(result(s.value, 3.0 * log_power_tail(x, 2.0) + s.tail_bound, method))
        }
        (_, Method::DirectSum) => {
            let (f, coef, s): (fn(u64) -> f64, f64, f64) = match name {
                "gamma_st_0" => (st0, 2.0, 2.0),
                "gamma_st_2" => (st2, 4.0, 2.0),
                "gamma_st_atilde" => (st_atilde, 2.0, 2.0),
                "gamma_cm_13" => (cm13, 3.0, 2.0),
                "gamma_cm_14" => (cm14, 3.0, 2.0),
                "gamma_cm0_ge5" => (cm0, 4.0, 2.0),
                "gamma_cm2_13" => (cm2, 5.0, 2.0),
                "gamma_ap_3" => (ap3, 2.0, 2.0),
                "gamma_0_3" => (g0_3, 4.0, 2.0),
                "gamma_1_3" => (g1_3, 2.0, 3.0),
                "gamma_2_3" => (g2_3, 3.0, 2.0),
                _ => return Err(unsupported(name, method)),
            };
            let v = ordered_sum(ps, |&p| f(p));
            Ok(result(v, coef * log_power_tail(x, s), method))
        }
        _ => Err(unsupported(name, method)),
    }
}

fn st0(p: u64) -> f64 {
    let q = p as f64;
    2.0 * q.ln() / (q * (q + 1.0))
}

fn st2(p: u64) -> f64 {
    let q = p as f64;
    (4.0 * q * q + 3.0 * q + 1.0) * q.ln() / (q * (q + 1.0).powi(3))
}

fn st_atilde(p: u64) -> f64 {
    let q = p as f64;
    (2.0 * q + 1.0) * (q - 1.0) * q.ln() / (q * (q + 1.0).powi(3))
}

fn cm_rest(p: u64) -> f64 {
    let q = p as f64;
    2.0 * (3.0 * q + 1.0) * q.ln() / (q + 1.0).powi(3)
}

fn cm13(p: u64) -> f64 {
    if p % 3 == 1 {
        cm_rest(p)
    } else {
        0.0
    }
}

fn cm14(p: u64) -> f64 {
    if p % 4 == 1 {
        cm_rest(p)
    } else {
        0.0
    }
}

fn cm0(p: u64) -> f64 {
    if p < 5 {
        return 0.0;
    }
    2.0 * st0(p)
}

fn cm2(p: u64) -> f64 {
    if p % 3 != 1 {
        return 0.0;
    }
    let q = p as f64;
    2.0 * (5.0 * q * q + 2.0 * q + 1.0) * q.ln() / (q * (q + 1.0).powi(3))
}

fn ap3(p: u64) -> f64 {
    if p < 5 {
        return 0.0;
    }
    let q = p as f64;
    let lp = q.ln();
    let mut s = lp / (q * q * q - q);
    match p % 12 {
        1 => s += lp / (q * q - 1.0),
        5 => s -= lp / (q * q - 1.0),
        _ => {}
    }
    2.0 * s
}

fn g0_3(p: u64) -> f64 {
    if p < 5 {
        return 0.0;
    }
    let q = p as f64;
    (4.0 * q - 2.0) * q.ln() / (q * q * (q + 1.0))
}

fn g1_3(p: u64) -> f64 {
    if p < 5 {
        return 0.0;
    }
    let q = p as f64;
    let e = (crate::primes::legendre(3, p) + crate::primes::legendre(-3, p)) as f64;
    e * (q - 1.0) * q.ln() / (q * q * (q + 1.0).powi(2))
}

fn g2_3(p: u64) -> f64 {
    if p < 5 {
        return 0.0;
    }
    let q = p as f64;
    let e = crate::primes::legendre(-3, p) as f64;
    let num =
        (2.0 - e) * q.powi(4) - (13.0 + 7.0 * e) * q.powi(3) - (25.0 + 6.0 * e) * q * q - (16.0 + 2.0 * e) * q - 4.0;
    num * q.ln() / (q.powi(3) * (q + 1.0).powi(3))
}

/// Main and sieve Ã constants of a family over its first `prime_count`
/// primes. `with_sieve = false` reports a zero sieve part.
pub fn family_constant_atilde(fam: &FamilySpec, prime_count: usize, with_sieve: bool) -> Result<(f64, f64)> {
    let r = family_atilde_detail(fam, prime_count)?;
    Ok((r.value.main, if with_sieve { r.value.sieve } else { 0.0 }))
}

/// Ã constants with provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtildeResult {
    pub family: String,
    pub value: SplitValue,
    pub sieve_012: f64,
    pub truncation: Truncation,
    pub last_prime: u64,
    pub tail_bound: f64,
}

/// Smallest prime count accepted for family Ã constants.
pub const MIN_ATILDE_PRIMES: usize = 5000;

pub fn family_atilde_detail(fam: &FamilySpec, prime_count: usize) -> Result<AtildeResult> {
    if prime_count < MIN_ATILDE_PRIMES {
        return Err(Error::Precondition(format!(
            "family Ã constants need at least {MIN_ATILDE_PRIMES} primes, got {prime_count}"
        )));
    }
    atilde_detail_unchecked(fam, prime_count)
}

fn atilde_detail_unchecked(fam: &FamilySpec, prime_count: usize) -> Result<AtildeResult> {
    let table = first_n_primes(prime_count)?;
    let records = family_records(fam, table.primes(), None)?;
    Ok(atilde_from_records(fam, &records))
}

/// Ã constants over point-count records, which must be the first primes.
pub fn atilde_from_records(fam: &FamilySpec, records: &[PrimeRecord]) -> AtildeResult {
    let last = records.last().map_or(0, |r| r.p);
    AtildeResult {
        family: fam.name.clone(),
        value: atilde_constant(records),
        sieve_012: sieve_012_constant(records),
        truncation: Truncation::FirstPrimes(records.len() as u64),
        last_prime: last,
        tail_bound: atilde_tail_bound(last as f64),
    }
}

fn family_truncation_count(trunc: Truncation) -> Result<usize> {
    Ok(match trunc {
        Truncation::FirstPrimes(n) => n as usize,
        Truncation::PrimeLimit(x) => sieve_primes(x.max(2))?.len(),
    })
}

fn compute_family_constant(spec: &ConstantSpec, trunc: Truncation, method: Method) -> Result<ConstantResult> {
    if method != Method::DirectSum {
        return Err(unsupported(spec.name, method));
    }
    let fam = builtin(spec.family.expect("family constants name their family"))?;
    let r = family_atilde_detail(&fam, family_truncation_count(trunc)?)?;
    family_constant_from(spec, &fam, &r)
}

fn family_constant_from(spec: &ConstantSpec, fam: &FamilySpec, r: &AtildeResult) -> Result<ConstantResult> {
    let hs_last = crate::families::h_factor(fam, r.last_prime)?.sieve;
    let (value, tail) = match spec.source {
        Source::FamilyAtilde => (r.value.main, r.tail_bound),
        Source::FamilySieve => (r.value.sieve, r.tail_bound * hs_last),
        Source::FamilySieve012 => {
            let x = r.last_prime as f64;
            (r.sieve_012, 2.0 * log_power_tail(x, 2.0) * hs_last)
        }
        _ => unreachable!("prime sums handled elsewhere"),
    };
    Ok(ConstantResult {
        name: spec.name.into(),
        value,
        truncation: r.truncation,
        last_prime: r.last_prime,
        tail_bound: tail,
        method: Method::DirectSum,
    })
}

/// Batch evaluation for catalog listings. Prime sums share one table and
/// family constants share one point-count pass per family.
///
/// `prime_truncation` and `family_truncation` replace the defaults of the
/// two kinds. Each name is evaluated with every method in `methods` it
/// supports (its default method when `methods` is empty); a name that
/// supports none of them is an error.
pub fn compute_many(
    names: &[&str],
    prime_truncation: Option<Truncation>,
    family_truncation: Option<Truncation>,
    methods: &[Method],
) -> Result<Vec<ConstantResult>> {
    let specs = names.iter().map(|n| lookup(n)).collect::<Result<Vec<_>>>()?;
    let is_prime_sum = |s: &ConstantSpec| matches!(s.source, Source::PrimeSum | Source::Exact);
    let trunc_of = |s: &ConstantSpec| {
        if is_prime_sum(s) {
            prime_truncation.unwrap_or(s.default_truncation)
        } else {
            family_truncation.unwrap_or(s.default_truncation)
        }
    };
    let need = specs.iter().filter(|s| is_prime_sum(s)).map(&trunc_of).fold((0u64, 0u64), |(n, x), t| match t {
        Truncation::FirstPrimes(k) => (n.max(k), x),
        Truncation::PrimeLimit(l) => (n, x.max(l)),
    });
    let table = if need == (0, 0) {
        None
    } else {
        let by_count = if need.0 > 0 { nth_prime_upper_bound(need.0) } else { 2 };
        Some(sieve_primes(by_count.max(need.1).max(2))?)
    };
    let mut atilde: BTreeMap<(String, usize), (FamilySpec, AtildeResult)> = BTreeMap::new();
    let mut out = Vec::new();
    for spec in &specs {
        let trunc = trunc_of(spec);
        let wanted = if methods.is_empty() { vec![spec.default_method] } else { methods.to_vec() };
        let mut any = false;
        let mut last_err = None;
        for &m in &wanted {
            let r = if is_prime_sum(spec) {
                compute_in(table.as_ref().expect("table built for prime sums"), spec, trunc, m)
            } else if m != Method::DirectSum {
                Err(unsupported(spec.name, m))
            } else {
                let fam_name = spec.family.expect("family constants name their family");
                let n = family_truncation_count(trunc)?;
                let key = (fam_name.to_string(), n);
                if !atilde.contains_key(&key) {
                    let fam = builtin(fam_name)?;
                    let r = family_atilde_detail(&fam, n)?;
                    atilde.insert(key.clone(), (fam, r));
                }
                let (fam, r) = &atilde[&key];
                family_constant_from(spec, fam, r)
            };
            match r {
                Ok(v) => {
                    any = true;
                    out.push(v);
                }
                Err(e @ Error::Unsupported(_)) if wanted.len() > 1 => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        if !any {
            return Err(last_err.unwrap_or_else(|| unsupported(spec.name, wanted[0])));
        }
    }
    Ok(out)
}

/// One exported catalog row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogRow {
    pub name: String,
    pub value: f64,
    pub truncation: String,
    pub tail_bound: f64,
    pub method: Method,
    pub reference_value: Option<f64>,
    pub reference_note: String,
}

impl CatalogRow {
    pub fn new(r: &ConstantResult) -> Result<Self> {
        let spec = lookup(&r.name)?;
        Ok(CatalogRow {
            name: r.name.clone(),
            value: r.value,
            truncation: r.truncation.to_string(),
            tail_bound: r.tail_bound,
            method: r.method,
            reference_value: spec.reference_value,
            reference_note: spec.reference_note.to_string(),
        })
    }
}

pub const CSV_HEADER: [&str; 7] =
    ["name", "value", "truncation", "tail_bound", "method", "reference_value", "reference_note"];

/// CSV with a fixed header; floats in Rust's shortest round-trip form.
pub fn export_csv(rows: &[CatalogRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Resource(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        let method =
            serde_json::to_value(r.method).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        w.write_record([
            r.name.clone(),
            format!("{:e}", r.value),
            r.truncation.clone(),
            format!("{:e}", r.tail_bound),
            method,
            r.reference_value.map(|v| format!("{v}")).unwrap_or_default(),
            r.reference_note.clone(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Resource(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Resource(format!("csv: {e}")))
}

pub fn export_json(rows: &[CatalogRow]) -> serde_json::Value {
    serde_json::to_value(rows).unwrap_or(serde_json::Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::sieve_primes;

    #[test]
    fn catalog_is_well_formed() {
        let names = catalog_names();
        assert!(names.len() >= 15);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert!(matches!(compute_constant("gamma_nope", Truncation::FirstPrimes(10)), Err(Error::UnknownConstant(_))));
        for c in catalog() {
            if matches!(c.source, Source::FamilyAtilde | Source::FamilySieve | Source::FamilySieve012) {
                assert!(builtin(c.family.unwrap()).is_ok(), "{}", c.name);
            }
        }
    }

    #[test]
    fn exact_two_three_term() {
        let r = compute_constant("gamma_23", Truncation::PrimeLimit(3)).unwrap();
        assert_eq!(r.value, 2f64.ln() + 2.0 * 3f64.ln() / 3.0);
        assert_eq!(r.tail_bound, 0.0);
    }

    #[test]
    fn atilde_st_three_routes_agree() {
        let t = Truncation::FirstPrimes(20_000);
        let d = compute_constant_with("gamma_st_atilde", t, Method::DirectSum).unwrap();
        let c = compute_constant_with("gamma_st_atilde", t, Method::ClosedForm).unwrap();
        let m = compute_constant_with("gamma_st_atilde", t, Method::MomentSeries).unwrap();
        assert!((d.value - c.value).abs() < 1e-12);
        assert!((d.value - m.value).abs() < 1e-10, "{} vs {}", d.value, m.value);
        assert!(compute_constant_with("gamma_st_0", t, Method::MomentSeries).is_err());
    }

    #[test]
    fn cm_moment_routes_agree() {
        let t = Truncation::FirstPrimes(20_000);
        for name in ["gamma_cm_13", "gamma_cm_14"] {
            let d = compute_constant_with(name, t, Method::DirectSum).unwrap();
            let m = compute_constant_with(name, t, Method::MomentSeries).unwrap();
            assert!((d.value - m.value).abs() < 1e-10, "{name}");
        }
        let a = compute_constant("gamma_cm_13", t).unwrap().value;
        let b = compute_constant("gamma_cm_14", t).unwrap().value;
        assert!(b > a);
    }

    #[test]
    fn doubling_stays_within_tail() {
        let table = sieve_primes(500_000).unwrap();
        for name in ["gamma_st_0", "gamma_st_2", "gamma_cm0_ge5", "gamma_ap_3", "gamma_2_3", "gamma_cm2_13"] {
            let a = compute_constant_in(&table, name, Truncation::FirstPrimes(10_000), Method::DirectSum).unwrap();
            let b = compute_constant_in(&table, name, Truncation::FirstPrimes(20_000), Method::DirectSum).unwrap();
            assert!((a.value - b.value).abs() <= a.tail_bound, "{name}");
        }
    }

    #[test]
    fn family_constants_need_enough_primes() {
        let fam = builtin("cm_b1_kappa2").unwrap();
        assert!(matches!(family_constant_atilde(&fam, 4999, true), Err(Error::Precondition(_))));
        assert!(matches!(
            compute_constant("gamma_cm_atilde_12", Truncation::FirstPrimes(100)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let r = compute_constant("gamma_23", Truncation::PrimeLimit(3)).unwrap();
        let text = export_csv(&[CatalogRow::new(&r).unwrap()]).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER.to_vec());
        let row = rd.records().next().unwrap().unwrap();
        assert_eq!(row[0].to_string(), "gamma_23");
        assert_eq!(row[1].parse::<f64>().unwrap(), r.value);
        assert_eq!(row[4].to_string(), "closed_form");
    }
}
