//! Frobenius traces a_t(p) for every t mod p, and the moment sums built
//! from them.
//!
//! [`traces_brute`] is the O(p²) definition. [`traces`] picks a faster
//! exact route from the shape of the family:
//!
//! * A ≡ 0: a_t depends only on the class of B(t) in F_p*/(F_p*)⁶.
//! * B ≡ 0: a_t depends only on the class of A(t) in F_p*/(F_p*)⁴.
//! * A constant: all p values come out of one cyclic correlation
//!   a(c) = −Σ_v cnt(v)·((v + c)/p), where cnt(v) = #{x : x³ + Ax = v},
//!   done with an FFT and rounded back to integers.
//! * otherwise the definition, cached on (A(t), B(t)) mod p.

use super::{FamilySpec, Poly, SieveExponent};
use crate::error::{Error, Result};
use crate::numerics::NeumaierSum;
use crate::primes::{is_prime, legendre, pow_mod, quadratic_character_table, sieve_primes};
use num_bigint::BigInt;
use num_integer::Integer;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEngine {
    Auto,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Good,
    Bad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionType {
    Good,
    Additive,
    Split,
    Nonsplit,
}

fn check_prime(fam: &FamilySpec, p: u64) -> Result<bool> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if fam.forced_zero_primes.contains(&p) {
        return Ok(true);
    }
    if p == 2 {
        return Err(Error::Unsupported(format!("p = 2 needs a forced-zero designation for family '{}'", fam.name)));
    }
    Ok(false)
}

/// a_t(p) from the Legendre-sum definition.
pub fn a_t_p(fam: &FamilySpec, t: i64, p: u64) -> Result<i64> {
    if check_prime(fam, p)? {
        return Ok(0);
    }
    let tt = t.rem_euclid(p as i64) as u64;
    let a = fam.a.eval_mod(tt, p);
    let b = fam.b.eval_mod(tt, p);
    let mut s = 0i64;
    for x in 0..p {
        let v =
            ((x as u128 * x as u128 % p as u128 * x as u128 + a as u128 * x as u128 + b as u128) % p as u128) as i64;
        s += legendre(v, p) as i64;
    }
    Ok(-s)
}

/// Values of `f` at t = 0..p−1 mod p by forward differences.
pub fn poly_values_mod(f: &Poly, p: u64) -> Vec<u64> {
    let d = f.degree();
    let n = p as usize;
    let mut diffs: Vec<u64> = (0..=d as u64).map(|t| f.eval_mod(t, p)).collect();
    for level in 1..=d {
        for i in (level..=d).rev() {
            diffs[i] = (diffs[i] + p - diffs[i - 1]) % p;
        }
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(diffs[0]);
        for i in 0..d {
            let s = diffs[i] + diffs[i + 1];
            diffs[i] = if s >= p { s - p } else { s };
        }
    }
    out
}

#[inline]
fn cubic_sum(chi: &[i8], p: u64, a: u64, b: u64) -> i64 {
    let mut s = 0i64;
    for x in 0..p {
        let x2 = x * x % p;
        let v = (x2 * x + a * x + b) % p;
        s += chi[v as usize] as i64;
    }
    -s
}

/// a_t(p) for t = 0..p−1 from the definition.
pub fn traces_brute(fam: &FamilySpec, p: u64) -> Result<Vec<i64>> {
    if check_prime(fam, p)? {
        return Ok(vec![0; p as usize]);
    }
    let chi = quadratic_character_table(p);
    let av = poly_values_mod(&fam.a, p);
    let bv = poly_values_mod(&fam.b, p);
    Ok((0..p as usize).map(|t| cubic_sum(&chi, p, av[t], bv[t])).collect())
}

pub fn traces(fam: &FamilySpec, p: u64) -> Result<Vec<i64>> {
    traces_with(fam, p, TraceEngine::Auto)
}

pub fn traces_with(fam: &FamilySpec, p: u64, engine: TraceEngine) -> Result<Vec<i64>> {
    if engine == TraceEngine::Brute {
        return traces_brute(fam, p);
    }
    if check_prime(fam, p)? {
        return Ok(vec![0; p as usize]);
    }
    if p < 50 {
        return traces_brute(fam, p);
    }
    if fam.a.is_zero() {
        let bv = poly_values_mod(&fam.b, p);
        return Ok(class_traces(p, 6, &bv, |chi, c| cubic_sum(chi, p, 0, c)));
    }
    if fam.b.is_zero() {
        let av = poly_values_mod(&fam.a, p);
        return Ok(class_traces(p, 4, &av, |chi, c| cubic_sum(chi, p, c, 0)));
    }
    if fam.a.is_constant() {
        if let Some(table) = correlation_traces(p, fam.a.eval_mod(0, p)) {
            let bv = poly_values_mod(&fam.b, p);
            return Ok(bv.iter().map(|&b| table[b as usize]).collect());
        }
        return traces_brute(fam, p);
    }
    let chi = quadratic_character_table(p);
    let av = poly_values_mod(&fam.a, p);
    let bv = poly_values_mod(&fam.b, p);
    let mut cache: HashMap<(u64, u64), i64> = HashMap::new();
    Ok((0..p as usize)
        .map(|t| *cache.entry((av[t], bv[t])).or_insert_with(|| cubic_sum(&chi, p, av[t], bv[t])))
        .collect())
}

fn primitive_root(p: u64) -> u64 {
    let mut m = p - 1;
    let mut factors = Vec::new();
    let mut d = 2;
    while d * d <= m {
        if m.is_multiple_of(d) {
            factors.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    (2..p).find(|&g| factors.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1)).unwrap()
}

/// Traces when a_t depends only on the class of `vals[t]` modulo e-th
/// powers; `eval(chi, c)` computes the trace for a representative c.
/// A zero value gives trace 0 (the curve is y² = x³ or y² = x³ + 0·x).
fn class_traces<F: Fn(&[i8], u64) -> i64>(p: u64, e: u64, vals: &[u64], eval: F) -> Vec<i64> {
    let g = primitive_root(p);
    let n = p as usize;
    let mut ind = vec![0u32; n];
    let mut x = 1u64;
    for i in 0..(p - 1) {
        ind[x as usize] = i as u32;
        x = x * g % p;
    }
    let classes = e.gcd(&(p - 1));
    let chi = quadratic_character_table(p);
    let mut by_class = vec![None; classes as usize];
    vals.iter()
        .map(|&v| {
            if v == 0 {
                return 0;
            }
            let c = (ind[v as usize] as u64 % classes) as usize;
            *by_class[c].get_or_insert_with(|| eval(&chi, pow_mod(g, c as u64, p)))
        })
        .collect()
}

/// a(c) for y² = x³ + a·x + c and all c mod p, or `None` if rounding of
/// the floating-point correlation is not clean.
fn correlation_traces(p: u64, a: u64) -> Option<Vec<i64>> {
    let n = p as usize;
    let size = (2 * n).next_power_of_two();
    let chi = quadratic_character_table(p);
    let mut f = vec![Complex::new(0.0, 0.0); size];
    for u in 0..2 * n {
        f[u].re = chi[u % n] as f64;
    }
    let mut g = vec![Complex::new(0.0, 0.0); size];
    for x in 0..p {
        let v = ((x * x % p) * x + a * x) % p;
        g[v as usize].re += 1.0;
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    fwd.process(&mut f);
    fwd.process(&mut g);
    for (x, y) in f.iter_mut().zip(&g) {
        *x *= y.conj();
    }
    inv.process(&mut f);
    let scale = 1.0 / size as f64;
    let mut out = Vec::with_capacity(n);
    for c in f.iter().take(n) {
        let v = c.re * scale;
        let r = v.round();
        if (v - r).abs() > 0.25 {
            return None;
        }
        out.push(-(r as i64));
    }
    Some(out)
}

/// Whether p | Δ(t), for each t mod p.
pub fn bad_mask(fam: &FamilySpec, p: u64) -> Vec<bool> {
    let av = poly_values_mod(&fam.a, p);
    let bv = poly_values_mod(&fam.b, p);
    let p128 = p as u128;
    av.iter()
        .zip(&bv)
        .map(|(&a, &b)| {
            let (a, b) = (a as u128, b as u128);
            let inner = (4 * (a * a % p128) * a + 27 * (b * b % p128)) % p128;
            (16 * inner).is_multiple_of(p128)
        })
        .collect()
}

pub fn reduction_type(fam: &FamilySpec, t: i64, p: u64) -> Result<ReductionType> {
    if p < 5 || !is_prime(p) {
        return Err(Error::Domain(format!("reduction type needs a prime p >= 5, got {p}")));
    }
    let tt = t.rem_euclid(p as i64) as u64;
    let a = a_t_p(fam, t, p)?;
    if fam.discriminant_mod(tt, p) != 0 {
        return Ok(ReductionType::Good);
    }
    match a {
        0 => Ok(ReductionType::Additive),
        1 => Ok(ReductionType::Split),
        -1 => Ok(ReductionType::Nonsplit),
        _ => Err(Error::Consistency(format!("a_t(p) = {a} at a bad prime (t={t}, p={p})"))),
    }
}

fn power_sums(traces: &[i64], mask: &[bool], want_bad: bool, r_max: u32) -> Vec<BigInt> {
    let mut acc = vec![0i128; r_max as usize + 1];
    for (&a, &bad) in traces.iter().zip(mask) {
        if bad != want_bad {
            continue;
        }
        let mut pw: i128 = 1;
        for slot in acc.iter_mut() {
            *slot += pw;
            pw *= a as i128;
        }
    }
    acc.into_iter().map(BigInt::from).collect()
}

/// 𝒜_r(p) (good side) or 𝒜'_r(p) (bad side) from the auto engine.
pub fn complete_moment(fam: &FamilySpec, p: u64, r: u32, side: Side) -> Result<BigInt> {
    let tr = traces(fam, p)?;
    let mask = bad_mask(fam, p);
    Ok(power_sums(&tr, &mask, side == Side::Bad, r).pop().unwrap())
}

/// Same as [`complete_moment`] but always from the O(p²) definition.
pub fn complete_moment_brute(fam: &FamilySpec, p: u64, r: u32, side: Side) -> Result<BigInt> {
    let tr = traces_brute(fam, p)?;
    let mask = bad_mask(fam, p);
    Ok(power_sums(&tr, &mask, side == Side::Bad, r).pop().unwrap())
}

/// Ã(p) = Σ_{good t} a³/(p^{3/2}(p+1−a)) from precomputed traces,
/// summed by trace value in ascending order.
pub fn a_tilde_from_traces(p: u64, traces: &[i64], mask: &[bool]) -> f64 {
    let mut hist: std::collections::BTreeMap<i64, u64> = Default::default();
    for (&a, &bad) in traces.iter().zip(mask) {
        if !bad && a != 0 {
            *hist.entry(a).or_default() += 1;
        }
    }
    let pf = p as f64;
    let norm = pf * pf.sqrt();
    let mut s = NeumaierSum::new();
    for (&a, &n) in &hist {
        let af = a as f64;
        s.add(n as f64 * af * af * af / (norm * (pf + 1.0 - af)));
    }
    s.value()
}

pub fn a_tilde(fam: &FamilySpec, p: u64) -> Result<f64> {
    if p < 5 {
        return Err(Error::Domain(format!("Ã needs p >= 5, got {p}")));
    }
    let tr = traces(fam, p)?;
    Ok(a_tilde_from_traces(p, &tr, &bad_mask(fam, p)))
}

/// Per-prime record of moments, Ã and the sieve factor.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub p: u64,
    pub moments: Vec<BigInt>,
    pub bad_moments: Vec<BigInt>,
    pub bad_count: u64,
    pub a_tilde: f64,
    /// ν_D(p^k); `None` when k = ∞.
    pub nu: Option<u64>,
    pub h: f64,
    pub h_sieve: f64,
}

impl MomentTable {
    pub fn compute(fam: &FamilySpec, p: u64, r_max: u32, m_max: u32) -> Result<MomentTable> {
        let tr = traces(fam, p)?;
        let mask = bad_mask(fam, p);
        let moments = power_sums(&tr, &mask, false, r_max);
        let bad_moments = power_sums(&tr, &mask, true, m_max);
        let bad_count = mask.iter().filter(|&&b| b).count() as u64;
        let a_tilde = if p >= 3 { a_tilde_from_traces(p, &tr, &mask) } else { 0.0 };
        let hf = super::sieve::h_factor(fam, p)?;
        let nu = match fam.k {
            SieveExponent::Finite(k) => Some(super::sieve::nu_prime_power(fam, p, k)?),
            SieveExponent::Infinite => None,
        };
        Ok(MomentTable { p, moments, bad_moments, bad_count, a_tilde, nu, h: hf.total(), h_sieve: hf.sieve })
    }
}

/// Σ_t ((a t² + b t + c)/p) in closed form.
pub fn quadratic_legendre_sum(a: i64, b: i64, c: i64, p: u64) -> Result<i64> {
    if p <= 2 || !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not an odd prime")));
    }
    let pi = p as i64;
    if a.rem_euclid(pi) == 0 && b.rem_euclid(pi) == 0 {
        return Err(Error::Domain("a and b are both zero mod p".into()));
    }
    let disc = (b as i128 * b as i128 - 4 * a as i128 * c as i128).rem_euclid(p as i128);
    let chi_a = legendre(a, p) as i64;
    Ok(if disc == 0 { (pi - 1) * chi_a } else { -chi_a })
}

pub fn quadratic_legendre_sum_brute(a: i64, b: i64, c: i64, p: u64) -> i64 {
    let pi = p as i128;
    (0..pi)
        .map(|t| {
            let v = (a as i128 * t * t + b as i128 * t + c as i128).rem_euclid(pi);
            legendre(v as i64, p) as i64
        })
        .sum()
}

/// (1/X) Σ_{p ≤ X} −(𝒜₁(p)/p) log p.
pub fn rank_bias(fam: &FamilySpec, x: f64) -> Result<f64> {
    if x < 2.0 {
        return Err(Error::Precondition("rank_bias needs X >= 2".into()));
    }
    let table = sieve_primes(x as u64)?;
    let mut s = NeumaierSum::new();
    for &p in table.primes() {
        let tr = traces(fam, p)?;
        let mask = bad_mask(fam, p);
        let a1: i64 = tr.iter().zip(&mask).filter(|(_, &b)| !b).map(|(&a, _)| a).sum();
        s.add(-(a1 as f64) / p as f64 * (p as f64).ln());
    }
    Ok(s.value() / x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::builtin;

    #[test]
    fn forward_differences_match_eval() {
        let f = Poly::new(vec![-30, -396, -1296]);
        for p in [5u64, 7, 101, 1009] {
            let v = poly_values_mod(&f, p);
            for t in 0..p {
                assert_eq!(v[t as usize], f.eval_mod(t, p));
            }
        }
    }

    #[test]
    fn example_traces() {
        let f = builtin("noncm_3x12t").unwrap();
        assert_eq!(a_t_p(&f, 0, 5).unwrap(), 4);
        let cm = builtin("cm_b1_kappa2").unwrap();
        // 6t + 1 ≡ 0 mod 7 at t = 1
        assert_eq!(a_t_p(&cm, 1, 7).unwrap(), 0);
        assert_eq!(reduction_type(&cm, 1, 7).unwrap(), ReductionType::Additive);
    }

    #[test]
    fn fast_engines_agree_with_definition() {
        for name in super::super::builtin_names() {
            let f = builtin(name).unwrap();
            for p in [53u64, 97, 193, 389, 769] {
                assert_eq!(traces(&f, p).unwrap(), traces_brute(&f, p).unwrap(), "{name} p={p}");
            }
        }
    }

    #[test]
    fn generic_family_rejects_two() {
        let f = FamilySpec {
            name: "g".into(),
            a: Poly::new(vec![1, 1]),
            b: Poly::new(vec![1]),
            d_factors: vec![],
            k: SieveExponent::Infinite,
            forced_zero_primes: Default::default(),
        };
        assert!(matches!(a_t_p(&f, 0, 2), Err(Error::Unsupported(_))));
        // generic engine with a cache
        assert_eq!(traces(&f, 101).unwrap(), traces_brute(&f, 101).unwrap());
    }

    #[test]
    fn quadratic_sum_examples() {
        assert_eq!(quadratic_legendre_sum(1, 0, 0, 5).unwrap(), 4);
        assert_eq!(quadratic_legendre_sum(1, 0, 1, 5).unwrap(), -1);
        assert_eq!(quadratic_legendre_sum(2, 4, 2, 7).unwrap(), 6);
        assert_eq!(quadratic_legendre_sum_brute(2, 4, 2, 7), 6);
        assert!(quadratic_legendre_sum(0, 0, 1, 5).is_err());
    }
}
