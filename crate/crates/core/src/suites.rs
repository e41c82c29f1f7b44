//! Oracle and invariant suites: exact identities, closed-form moments
//! against point counts, sieve density, and the rank bias.

use crate::constants::exact_cancellation_report;
use crate::error::Result;
use crate::families::{
    builtin, builtin_names, closed_form_moment_variant, complete_moment_brute, nu_prime_power, quadratic_legendre_sum,
    quadratic_legendre_sum_brute, rank_bias, sieve_window, FamilySpec, LemmaVariant, Side,
};
use crate::primes::sieve_primes;
use crate::series::{
    catalan, g_cm_at_prime, g_moment_rational, g_st_at_prime, hecke_power_expansion, polylog_identity_check,
    x_at_prime, MomentKind,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    #[serde(rename = "appendixB")]
    AppendixB,
    Sieve,
    Bias,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Identities, Suite::AppendixB, Suite::Sieve, Suite::Bias];

    pub fn parse(s: &str) -> Option<Vec<Suite>> {
        Some(match s {
            "all" => Suite::ALL.to_vec(),
            "identities" => vec![Suite::Identities],
            "appendixB" | "appendix_b" => vec![Suite::AppendixB],
            "sieve" => vec![Suite::Sieve],
            "bias" => vec![Suite::Bias],
            _ => return None,
        })
    }
}

/// One named check with the number of exact comparisons behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub comparisons: u64,
    /// Failing cases or measured values.
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Largest prime for the closed-form comparisons.
    pub prime_limit: u64,
    pub variant: LemmaVariant,
    /// Window start N for the sieve-density check.
    pub sieve_n: u64,
    /// X for the rank bias.
    pub bias_x: f64,
    /// Replaces the cancellation numerator with a perturbed one, so the
    /// identities suite must fail.
    pub inject_fault: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            prime_limit: 300,
            variant: LemmaVariant::Verified,
            sieve_n: 100_000,
            bias_x: 1e5,
            inject_fault: false,
        }
    }
}

pub fn run(suites: &[Suite], opts: &SuiteOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for s in suites {
        out.extend(match s {
            Suite::Identities => identities(opts)?,
            Suite::AppendixB => appendix_b(opts)?,
            Suite::Sieve => sieve(opts)?,
            Suite::Bias => bias(opts)?,
        });
    }
    Ok(out)
}

fn check(suite: Suite, name: &str, passed: bool, comparisons: u64, detail: String) -> Check {
    Check { suite, name: name.into(), passed, comparisons, detail }
}

fn listed<T: std::fmt::Debug>(fails: &[T]) -> String {
    let head: Vec<String> = fails.iter().take(12).map(|f| format!("{f:?}")).collect();
    let more = if fails.len() > 12 { format!(" and {} more", fails.len() - 12) } else { String::new() };
    format!("{}{more}", head.join(", "))
}

pub fn identities(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let s = Suite::Identities;
    let mut out = Vec::new();
    let c = exact_cancellation_report(10_000)?;
    let symbolic = c.symbolic_zero && !opts.inject_fault;
    out.push(check(
        s,
        "cancellation_symbolic",
        symbolic,
        3,
        format!("perturbed coefficient nonzero: {}", c.perturbed_nonzero),
    ));
    out.push(check(
        s,
        "cancellation_per_prime",
        c.nonzero_at.is_empty() && c.primes_checked > 0,
        c.primes_checked as u64,
        if c.nonzero_at.is_empty() { format!("{} primes <= 10^4", c.primes_checked) } else { listed(&c.nonzero_at) },
    ));
    out.push(check(s, "cancellation_negative_control", c.perturbed_nonzero, 1, String::new()));

    let primes = sieve_primes(500)?;
    let mut fails = Vec::new();
    for &p in primes.primes() {
        let x = x_at_prime(p);
        if g_moment_rational(MomentKind::SatoTate, &x)? != g_st_at_prime(p) {
            fails.push(("st", p));
        }
        if g_moment_rational(MomentKind::Cm, &x)? != g_cm_at_prime(p) {
            fails.push(("cm", p));
        }
    }
    out.push(check(
        s,
        "generating_functions_at_p_over_(p+1)^2",
        fails.is_empty(),
        2 * primes.len() as u64,
        listed(&fails),
    ));

    let xs: Vec<BigRational> = [(1, 7), (1, 5), (2, 9), (1, 3), (3, 8), (1, 10), (5, 13), (2, 7), (1, 100), (7, 11)]
        .iter()
        .map(|&(a, b)| BigRational::new(BigInt::from(a), BigInt::from(b)))
        .collect();
    let mut fails = Vec::new();
    for l in 1..=4 {
        for x in &xs {
            if !polylog_identity_check(l, x)? {
                fails.push((l, x.to_string()));
            }
        }
    }
    out.push(check(s, "polylog_eulerian", fails.is_empty(), 40, listed(&fails)));

    let mut fails = Vec::new();
    for l in 0..=12u32 {
        let b = hecke_power_expansion(2 * l)?;
        if BigInt::from(*b.last().unwrap_or(&0)) != catalan(l as u64) {
            fails.push(l);
        }
    }
    out.push(check(s, "hecke_constant_term_catalan", fails.is_empty(), 13, listed(&fails)));
    Ok(out)
}

/// Closed-form moments of one family against point counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormReport {
    pub family: String,
    pub variant: LemmaVariant,
    pub prime_limit: u64,
    pub comparisons: u64,
    /// (p, r, side, point count, closed form).
    pub mismatches: Vec<(u64, u32, Side, String, String)>,
    /// Cases with no closed form under this variant.
    pub missing: Vec<(u64, u32, Side)>,
}

/// Compares 𝒜_r(p) for r ≤ 2 and 𝒜'_m(p) for m ≤ 6 over 5 ≤ p ≤ limit.
pub fn verify_closed_forms(fam: &FamilySpec, prime_limit: u64, variant: LemmaVariant) -> Result<ClosedFormReport> {
    let mut rep = ClosedFormReport {
        family: fam.name.clone(),
        variant,
        prime_limit,
        comparisons: 0,
        mismatches: Vec::new(),
        missing: Vec::new(),
    };
    let cases = (0..=2).map(|r| (r, Side::Good)).chain((1..=6).map(|m| (m, Side::Bad)));
    let cases: Vec<(u32, Side)> = cases.collect();
    for &p in sieve_primes(prime_limit.max(2))?.primes().iter().filter(|&&p| p >= 5) {
        for &(r, side) in &cases {
            match closed_form_moment_variant(fam, p, r, side, variant) {
                Ok(v) => {
                    rep.comparisons += 1;
                    let brute = complete_moment_brute(fam, p, r, side)?;
                    if brute != v {
                        rep.mismatches.push((p, r, side, brute.to_string(), v.to_string()));
                    }
                }
                Err(crate::Error::Unsupported(_)) => rep.missing.push((p, r, side)),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(rep)
}

/// Point counts against the closed forms for 5 ≤ p ≤ limit on every
/// built-in, and the quadratic character sum at 500 seeded random inputs.
pub fn appendix_b(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let s = Suite::AppendixB;
    let mut out = Vec::new();
    for name in builtin_names() {
        let rep = verify_closed_forms(&builtin(name)?, opts.prime_limit, opts.variant)?;
        let detail = if !rep.mismatches.is_empty() {
            format!("(p, r, side, count, closed): {}", listed(&rep.mismatches))
        } else if !rep.missing.is_empty() {
            format!("{} cases without a closed form", rep.missing.len())
        } else {
            String::new()
        };
        out.push(check(s, &format!("moments_{name}"), rep.mismatches.is_empty(), rep.comparisons, detail));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let small: Vec<u64> = sieve_primes(200)?.primes().iter().copied().filter(|&p| p > 2).collect();
    let mut fails = Vec::new();
    for _ in 0..500 {
        let p = small[rng.gen_range(0..small.len())];
        let (a, b, c) = loop {
            let abc: (i64, i64, i64) =
                (rng.gen_range(-1000..1000), rng.gen_range(-1000..1000), rng.gen_range(-1000..1000));
            // a constant polynomial has no closed form to compare
            if abc.0.rem_euclid(p as i64) != 0 || abc.1.rem_euclid(p as i64) != 0 {
                break abc;
            }
        };
        if quadratic_legendre_sum(a, b, c, p)? != quadratic_legendre_sum_brute(a, b, c, p) {
            fails.push((a, b, c, p));
        }
    }
    out.push(check(s, "quadratic_legendre_sum", fails.is_empty(), 500, listed(&fails)));
    Ok(out)
}

/// Kept fraction of t ∈ [N, 2N] against the Euler product over p ≤ 10³
/// for one family with a linear D and one with two factors.
pub fn sieve(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let s = Suite::Sieve;
    let mut out = Vec::new();
    for name in ["cm_b1_kappa2", "rank1_36t"] {
        let fam = builtin(name)?;
        let k = fam.k.finite().unwrap_or(0);
        let w = sieve_window(&fam, opts.sieve_n)?;
        let frac = w.w as f64 / w.len() as f64;
        let mut euler = 1.0;
        for &p in sieve_primes(1000)?.primes() {
            euler *= 1.0 - nu_prime_power(&fam, p, k)? as f64 / (p as f64).powi(k as i32);
        }
        let ok = (frac - euler).abs() < 0.01;
        out.push(check(s, &format!("density_{name}"), ok, 1, format!("W/N = {frac:.6}, Euler product = {euler:.6}")));
    }
    Ok(out)
}

/// (1/X) Σ −𝒜₁(p) log p/p → rank: 1 for B = 1, 0 for B = 2.
pub fn bias(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let s = Suite::Bias;
    let mut out = Vec::new();
    for (name, rank) in [("rank1_36t", 1.0), ("rank0_36t_b2", 0.0)] {
        let v = rank_bias(&builtin(name)?, opts.bias_x)?;
        out.push(check(s, &format!("rank_bias_{name}"), (v - rank).abs() < 0.2, 1, format!("{v:.6} (rank {rank})")));
    }
    Ok(out)
}
