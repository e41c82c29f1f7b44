//! Assembled lower-order coefficients and the exact cusp-form cancellation.

use super::family::{density_model, derived_pieces, family_records, ClassGammas, Piece, PIECE_NAMES};
use super::{atilde_from_records, compute_constant_in, table_for, AtildeResult, MIN_ATILDE_PRIMES};
use crate::error::{Error, Result};
use crate::families::{builtin, FamilySpec};
use crate::primes::{first_n_primes, ConstantResult, Method, PrimeTable, Truncation};
use crate::series::g_st_at_prime;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use std::collections::BTreeMap;

/// What to assemble.
#[derive(Debug, Clone, PartialEq)]
pub enum AggregateTarget {
    /// Holomorphic cusp forms of weight k and level N → ∞.
    Cusp,
    Family(FamilySpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateOptions {
    /// Truncation shared by every convergent prime sum.
    pub prime_truncation: Truncation,
    /// Primes with point counts; `None` uses the family default.
    pub family_primes: Option<usize>,
    /// Closed-form moments continue the per-prime route up to here.
    pub closed_limit: Option<u64>,
    /// Per-constant truncations.
    pub overrides: BTreeMap<String, Truncation>,
    /// Accept overrides that differ from `prime_truncation`.
    pub allow_mixed: bool,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        AggregateOptions {
            prime_truncation: Truncation::FirstPrimes(1_000_000),
            family_primes: None,
            closed_limit: Some(1_000_000),
            overrides: BTreeMap::new(),
            allow_mixed: false,
        }
    }
}

/// Point-count truncation of a built-in family's Ã constants.
pub fn default_family_primes(fam: &FamilySpec) -> usize {
    if fam.name.starts_with("rank") {
        10_000
    } else {
        5_000
    }
}

/// One signed constant of a theorem's bracket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketTerm {
    pub name: String,
    pub sign: f64,
    pub value: f64,
    pub truncation: Truncation,
    /// Reference value of this constant, if catalogued.
    pub reference_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyLowerOrder {
    pub family: String,
    /// Coefficients of 2φ̂(0)/log R from the per-prime route.
    pub pieces: Vec<Piece>,
    pub derived_total: f64,
    /// The theorem's bracket of named constants, when one exists.
    pub bracket: Vec<BracketTerm>,
    pub bracket_total: Option<f64>,
    /// Σ sign·reference over the bracket, when every term has a reference.
    pub reference_bracket_total: Option<f64>,
    /// Aggregate quoted for the family.
    pub reference_total: Option<f64>,
    /// The bracket total if present, else the derived total.
    pub total: f64,
    /// Coefficient of φ(0).
    pub main_term: f64,
    pub atilde: Option<AtildeResult>,
}

struct Ctx<'a> {
    table: PrimeTable,
    opts: &'a AggregateOptions,
    cache: BTreeMap<String, ConstantResult>,
}

impl Ctx<'_> {
    fn new(opts: &AggregateOptions) -> Result<Ctx<'_>> {
        let mut widest = opts.prime_truncation;
        for (name, t) in &opts.overrides {
            if *t != opts.prime_truncation && !opts.allow_mixed {
                return Err(Error::Truncation(format!(
                    "'{name}' at {t} differs from the shared truncation {}; pass allow_mixed to accept",
                    opts.prime_truncation
                )));
            }
            if reach(*t) > reach(widest) {
                widest = *t;
            }
        }
        Ok(Ctx { table: table_for(widest)?, opts, cache: BTreeMap::new() })
    }

    fn get(&mut self, name: &str) -> Result<ConstantResult> {
        if let Some(r) = self.cache.get(name) {
            return Ok(r.clone());
        }
        let spec = super::lookup(name)?;
        let t = self.opts.overrides.get(name).copied().unwrap_or(self.opts.prime_truncation);
        let method = match name {
            "gamma_pnt" | "gamma_pnt_13" | "gamma_pnt_14" => Method::ClosedForm,
            _ => spec.default_method,
        };
        let r = compute_constant_in(&self.table, name, t, method)?;
        self.cache.insert(name.to_string(), r.clone());
        Ok(r)
    }

    fn term(&mut self, name: &str, sign: f64) -> Result<BracketTerm> {
        let r = self.get(name)?;
        Ok(BracketTerm {
            name: name.into(),
            sign,
            value: r.value,
            truncation: r.truncation,
            reference_value: super::lookup(name)?.reference_value,
        })
    }

    fn gammas(&mut self) -> Result<ClassGammas> {
        Ok(ClassGammas {
            all: self.get("gamma_pnt")?.value,
            r13: self.get("gamma_pnt_13")?.value,
            r14: self.get("gamma_pnt_14")?.value,
        })
    }
}

fn reach(t: Truncation) -> f64 {
    match t {
        Truncation::FirstPrimes(n) => crate::primes::nth_prime_upper_bound(n) as f64,
        Truncation::PrimeLimit(x) => x as f64,
    }
}

fn fixed(name: &str, sign: f64, value: f64, truncation: Truncation, reference_value: Option<f64>) -> BracketTerm {
    BracketTerm { name: name.into(), sign, value, truncation, reference_value }
}

fn totals(bracket: &[BracketTerm]) -> (f64, Option<f64>) {
    let fresh = bracket.iter().map(|t| t.sign * t.value).sum();
    let cited = bracket.iter().map(|t| t.reference_value.map(|v| t.sign * v)).sum();
    (fresh, cited)
}

/// Signed lower-order aggregate with its per-piece breakdown.
pub fn aggregate_lower_order(target: &AggregateTarget, opts: &AggregateOptions) -> Result<FamilyLowerOrder> {
    let mut ctx = Ctx::new(opts)?;
    match target {
        AggregateTarget::Cusp => cusp(&mut ctx),
        AggregateTarget::Family(fam) => family(&mut ctx, fam),
    }
}

fn cusp(ctx: &mut Ctx) -> Result<FamilyLowerOrder> {
    let bracket = vec![
        ctx.term("gamma_st_0", -1.0)?,
        ctx.term("gamma_st_2", 1.0)?,
        ctx.term("gamma_st_atilde", -1.0)?,
        ctx.term("gamma_pnt", 1.0)?,
    ];
    let (fresh, cited) = totals(&bracket);
    let g = bracket[3].value;
    // The three Sato-Tate sums cancel prime by prime, so only γ_PNT survives.
    let pieces = PIECE_NAMES
        .iter()
        .map(|n| Piece { name: n.to_string(), main: if *n == "S_0" { g } else { 0.0 }, sieve: 0.0 })
        .collect();
    Ok(FamilyLowerOrder {
        family: "cusp".into(),
        pieces,
        derived_total: g,
        bracket,
        bracket_total: Some(fresh),
        reference_bracket_total: cited,
        reference_total: Some(-1.33258),
        total: fresh,
        main_term: 0.5,
        atilde: None,
    })
}

fn family(ctx: &mut Ctx, fam: &FamilySpec) -> Result<FamilyLowerOrder> {
    let model = density_model(fam)?;
    let n = ctx.opts.family_primes.unwrap_or_else(|| default_family_primes(fam));
    let counted = first_n_primes(n)?;
    let records = family_records(fam, counted.primes(), ctx.opts.closed_limit)?;
    let gammas = ctx.gammas()?;
    let pieces = derived_pieces(&records, &model, &gammas)?;
    let derived_total: f64 = pieces.iter().map(Piece::total).sum();
    if n < MIN_ATILDE_PRIMES {
        return Err(Error::Precondition(format!(
            "family Ã constants need at least {MIN_ATILDE_PRIMES} primes, got {n}"
        )));
    }
    let at = atilde_from_records(fam, &records[..n]);
    let ft = at.truncation;
    let (bracket, reference_total) = if let Some(bk) = cm_params(&fam.name) {
        let key = format!("{}{}", bk.0, bk.1);
        let refs = |name: String| super::lookup(&name).ok().and_then(|s| s.reference_value);
        let b = vec![
            ctx.term("gamma_pnt", 2.0)?,
            ctx.term("gamma_cm0_ge5", -1.0)?,
            ctx.term("gamma_23", -1.0)?,
            ctx.term("gamma_pnt_13", -1.0)?,
            ctx.term("gamma_cm2_13", 1.0)?,
            fixed(&format!("gamma_cm_atilde_{key}"), -1.0, at.value.main, ft, refs(format!("gamma_cm_atilde_{key}"))),
            fixed("gamma_cm_sieve_012", -1.0, at.sieve_012, ft, refs("gamma_cm_sieve_012".into())),
            fixed(&format!("gamma_cm_sieve_{key}"), -1.0, at.value.sieve, ft, refs(format!("gamma_cm_sieve_{key}"))),
        ];
        let total = match key.as_str() {
            "11" => Some(-2.124),
            "12" => Some(-2.201),
            "22" => Some(-2.347),
            "32" => Some(-1.921),
            "62" => Some(-2.042),
            _ => None,
        };
        (b, total)
    } else if fam.name == "noncm_3x12t" {
        let half23 = ctx.get("gamma_23")?.value / 2.0;
        let b = vec![
            ctx.term("gamma_ap_3", -1.0)?,
            ctx.term("gamma_0_3", -1.0)?,
            ctx.term("gamma_1_3", -1.0)?,
            ctx.term("gamma_2_3", -1.0)?,
            fixed("gamma_atilde_3", -1.0, at.value.main, ft, Some(0.3369)),
            fixed("half_gamma_23", -1.0, half23, Truncation::PrimeLimit(3), Some(1.4255554 / 2.0)),
            ctx.term("gamma_pnt", 1.0)?,
        ];
        (b, Some(-2.703))
    } else {
        (Vec::new(), None)
    };
    let (bracket_total, reference_bracket_total) = if bracket.is_empty() {
        (None, None)
    } else {
        let (f, c) = totals(&bracket);
        (Some(f), c)
    };
    Ok(FamilyLowerOrder {
        family: fam.name.clone(),
        pieces,
        derived_total,
        bracket,
        bracket_total,
        reference_bracket_total,
        reference_total,
        total: bracket_total.unwrap_or(derived_total),
        main_term: model.main_term(),
        atilde: Some(at),
    })
}

fn cm_params(name: &str) -> Option<(i64, u32)> {
    let rest = name.strip_prefix("cm_b")?;
    let (b, k) = rest.split_once("_kappa")?;
    Some((b.parse().ok()?, k.parse().ok()?))
}

/// Aggregate of a built-in family by name, or "cusp".
pub fn aggregate_by_name(name: &str, opts: &AggregateOptions) -> Result<FamilyLowerOrder> {
    let target = if name == "cusp" { AggregateTarget::Cusp } else { AggregateTarget::Family(builtin(name)?) };
    aggregate_lower_order(&target, opts)
}

/// Outcome of the cusp-form cancellation check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CancellationReport {
    /// −2(p+1)² + (4p²+3p+1) − (2p+1)(p−1) is the zero polynomial.
    pub symbolic_zero: bool,
    pub primes_checked: usize,
    /// Primes whose combined rational summand is nonzero.
    pub nonzero_at: Vec<u64>,
    /// Raising one coefficient by 1 leaves a nonzero polynomial.
    pub perturbed_nonzero: bool,
}

impl CancellationReport {
    pub fn holds(&self) -> bool {
        self.symbolic_zero && self.nonzero_at.is_empty() && self.perturbed_nonzero && self.primes_checked > 0
    }
}

type IntPoly = Vec<i64>;

fn poly_mul(a: &[i64], b: &[i64]) -> IntPoly {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[i64], b: &[i64], sb: i64) -> IntPoly {
    let n = a.len().max(b.len());
    (0..n).map(|i| a.get(i).copied().unwrap_or(0) + sb * b.get(i).copied().unwrap_or(0)).collect()
}

/// Numerator over p(p+1)³, coefficients lowest degree first.
fn cancellation_numerator(second: &[i64]) -> IntPoly {
    let p1 = [1, 1];
    let st0 = poly_mul(&[-2], &poly_mul(&p1, &p1));
    let atilde = poly_mul(&[1, 2], &[-1, 1]);
    poly_add(&poly_add(&st0, second, 1), &atilde, -1)
}

fn combined_summand(p: u64) -> BigRational {
    let q = BigInt::from(p);
    let one = BigInt::from(1);
    let r = |n: BigInt, d: BigInt| BigRational::new(n, d);
    let p1 = &q + &one;
    let st0 = r(BigInt::from(-2), &q * &p1);
    let st2 = r(BigInt::from(4) * &q * &q + BigInt::from(3) * &q + &one, &q * &p1 * &p1 * &p1);
    let st_atilde = g_st_at_prime(p) * r(&q - &one, p1);
    st0 + st2 - st_atilde
}

/// Checks −γ_ST;0 + γ_ST;2 − γ_ST;Ã = 0 symbolically and prime by prime up
/// to `limit` in exact arithmetic.
pub fn exact_cancellation_report(limit: u64) -> Result<CancellationReport> {
    let second = [1, 3, 4];
    let symbolic_zero = cancellation_numerator(&second).iter().all(|&c| c == 0);
    let perturbed_nonzero = cancellation_numerator(&[1, 3, 5]).iter().any(|&c| c != 0);
    let table = crate::primes::sieve_primes(limit.max(2))?;
    let nonzero_at = table.primes().iter().copied().filter(|&p| !combined_summand(p).is_zero()).collect();
    Ok(CancellationReport { symbolic_zero, primes_checked: table.len(), nonzero_at, perturbed_nonzero })
}

pub fn exact_cancellation_check() -> bool {
    exact_cancellation_report(10_000).map(|r| r.holds()).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_holds() {
        let r = exact_cancellation_report(500).unwrap();
        assert!(r.symbolic_zero && r.perturbed_nonzero && r.nonzero_at.is_empty());
        assert_eq!(r.primes_checked, 95);
        assert!(combined_summand(2).is_zero());
        assert!(r.holds());
    }

    #[test]
    fn perturbed_numerator_is_nonzero() {
        assert_eq!(cancellation_numerator(&[1, 3, 4]), vec![0, 0, 0]);
        assert_eq!(cancellation_numerator(&[1, 3, 5]), vec![0, 0, 1]);
    }

    #[test]
    fn mixed_truncations_need_consent() {
        let mut opts = AggregateOptions { prime_truncation: Truncation::FirstPrimes(20_000), ..Default::default() };
        opts.overrides.insert("gamma_st_2".into(), Truncation::FirstPrimes(40_000));
        assert!(matches!(aggregate_lower_order(&AggregateTarget::Cusp, &opts), Err(Error::Truncation(_))));
        opts.allow_mixed = true;
        let r = aggregate_lower_order(&AggregateTarget::Cusp, &opts).unwrap();
        assert_eq!(r.bracket[1].truncation, Truncation::FirstPrimes(40_000));
    }

    #[test]
    fn cusp_aggregate_is_gamma_pnt() {
        let opts = AggregateOptions { prime_truncation: Truncation::FirstPrimes(20_000), ..Default::default() };
        let r = aggregate_lower_order(&AggregateTarget::Cusp, &opts).unwrap();
        let g = r.bracket[3].value;
        assert!((r.total - g).abs() < 1e-12);
        assert_eq!(r.derived_total, g);
        assert_eq!(r.main_term, 0.5);
    }

    #[test]
    fn custom_family_has_no_model() {
        let mut fam = builtin("cm_b1_kappa2").unwrap();
        fam.name = "custom".into();
        let opts = AggregateOptions { prime_truncation: Truncation::FirstPrimes(20_000), ..Default::default() };
        assert!(matches!(aggregate_lower_order(&AggregateTarget::Family(fam), &opts), Err(Error::Unsupported(_))));
    }
}
