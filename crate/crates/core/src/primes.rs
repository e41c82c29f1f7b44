//! Primes, residue classes, Chebyshev theta and the PNT constants.
//!
//! The segmented sieve here is the source of truth for every prime sum in
//! the crate. Deterministic Miller-Rabin is only used for spot checks and
//! argument validation.
//!
//! The θ-error integral is evaluated exactly: θ is a step function, so
//!
//! ```text
//! ∫₁^X (θ_{a,b}(t) − t/φ(b)) / t² dt = Σ_{p ≤ X, p ≡ a (b)} log p (1/p − 1/X) − log X / φ(b)
//! ```
//!
//! with no quadrature involved.

use crate::error::{Error, Result};
use crate::explicit_formula::TestFunctionPair;
use crate::numerics::{literals, ordered_sum, NeumaierSum};
use serde::{Deserialize, Serialize};

/// Largest sieve limit accepted by [`sieve_primes`].
pub const DEFAULT_HARD_CAP: u64 = 10_000_000_000;

const SEGMENT: u64 = 1 << 20;

/// All primes up to an inclusive limit, ascending.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Primes `<= x`.
    pub fn up_to(&self, x: u64) -> &[u64] {
        let n = self.primes.partition_point(|&p| p <= x);
        &self.primes[..n]
    }

    /// The first `n` primes, or an error if the table is too short.
    pub fn first(&self, n: usize) -> Result<&[u64]> {
        if n > self.primes.len() {
            return Err(Error::IncompleteSum { required: nth_prime_upper_bound(n as u64), available: self.limit });
        }
        Ok(&self.primes[..n])
    }

    /// Primes congruent to `a` mod `b`.
    pub fn residue_class(&self, a: u64, b: u64) -> Vec<u64> {
        self.primes.iter().copied().filter(|p| p % b == a % b).collect()
    }

    /// Resolves a truncation to the slice of primes it covers.
    pub fn truncate(&self, t: Truncation) -> Result<&[u64]> {
        match t {
            Truncation::FirstPrimes(n) => self.first(n as usize),
            Truncation::PrimeLimit(x) => {
                if x > self.limit {
                    Err(Error::IncompleteSum { required: x, available: self.limit })
                } else {
                    Ok(self.up_to(x))
                }
            }
        }
    }
}

/// Sieves all primes up to `limit` with the default hard cap.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    sieve_primes_capped(limit, DEFAULT_HARD_CAP)
}

pub fn sieve_primes_capped(limit: u64, cap: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::EmptyTable(limit));
    }
    if limit > cap {
        return Err(Error::Resource(format!("sieve limit {limit} exceeds hard cap {cap}")));
    }
    let est = (limit as f64 / (limit as f64).ln() * 1.15) as usize + 16;
    let mut primes = Vec::with_capacity(est);
    for_each_prime_segment(2, limit, |seg| primes.extend_from_slice(seg));
    Ok(PrimeTable { limit, primes })
}

/// Sieves enough primes to hold the first `n` primes.
pub fn first_n_primes(n: usize) -> Result<PrimeTable> {
    let mut t = sieve_primes(nth_prime_upper_bound(n as u64))?;
    t.primes.truncate(n);
    t.limit = t.primes.last().copied().unwrap_or(2);
    Ok(t)
}

/// Rosser-Schoenfeld style upper bound for the n-th prime.
pub fn nth_prime_upper_bound(n: u64) -> u64 {
    if n < 6 {
        return 13;
    }
    let x = n as f64;
    (x * (x.ln() + x.ln().ln())).ceil() as u64 + 1
}

fn small_primes(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut comp = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !comp[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                comp[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Streams the primes of `[lo, hi]` in ascending batches, one batch per
/// sieve segment. Memory use is bounded by the segment size plus the base
/// primes up to √hi.
pub fn for_each_prime_segment<F: FnMut(&[u64])>(lo: u64, hi: u64, mut f: F) {
    if hi < 2 || lo > hi {
        return;
    }
    let lo = lo.max(2);
    let root = isqrt(hi);
    let base = small_primes(root.max(2));
    let mut batch = Vec::with_capacity(SEGMENT as usize / 8);
    if lo <= 2 {
        batch.push(2);
    }
    // odd numbers only: index i stands for start + 2i
    let mut start = if lo <= 3 { 3 } else { lo | 1 };
    let mut flags = vec![true; (SEGMENT / 2) as usize];
    while start <= hi {
        let end = (start + SEGMENT - 1).min(hi);
        let count = ((end - start) / 2 + 1) as usize;
        flags[..count].iter_mut().for_each(|b| *b = true);
        for &p in base.iter().skip(1) {
            let p2 = p * p;
            if p2 > end {
                break;
            }
            let mut m = if p2 >= start { p2 } else { start.div_ceil(p) * p };
            if m % 2 == 0 {
                m += p;
            }
            let mut idx = ((m - start) / 2) as usize;
            while idx < count {
                flags[idx] = false;
                idx += p as usize;
            }
        }
        for (i, &is_p) in flags[..count].iter().enumerate() {
            if is_p {
                let v = start + 2 * i as u64;
                if v > 1 {
                    batch.push(v);
                }
            }
        }
        if !batch.is_empty() {
            f(&batch);
            batch.clear();
        }
        start = end + 1;
        if start % 2 == 0 {
            start += 1;
        }
    }
    if !batch.is_empty() {
        f(&batch);
    }
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin with the first seven prime bases, valid
/// below 341 550 071 728 321.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 7] = [2, 3, 5, 7, 11, 13, 17];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi_symbol(a: i64, n: u64) -> Result<i8> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(Error::Domain(format!("Jacobi symbol needs odd positive modulus, got {n}")));
    }
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut sign = 1i8;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    Ok(if n == 1 { sign } else { 0 })
}

/// Legendre symbol (a/p); `p` must be an odd prime.
pub fn legendre_symbol(a: i64, p: u64) -> Result<i8> {
    if p == 2 || !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not an odd prime")));
    }
    jacobi_symbol(a, p)
}

/// Unchecked Legendre symbol for callers that already know `p` is an odd
/// prime.
#[inline]
pub fn legendre(a: i64, p: u64) -> i8 {
    jacobi_symbol(a, p).unwrap_or(0)
}

/// `chi[x] = (x/p)` for `x` in `0..p`.
pub fn quadratic_character_table(p: u64) -> Vec<i8> {
    let n = p as usize;
    let mut chi = vec![-1i8; n];
    chi[0] = 0;
    for x in 1..=n / 2 {
        chi[(x * x) % n] = 1;
    }
    chi
}

/// Euler's totient.
pub fn totient(mut n: u64) -> u64 {
    let mut r = n;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            while n.is_multiple_of(d) {
                n /= d;
            }
            r -= r / d;
        }
        d += 1;
    }
    if n > 1 {
        r -= r / n;
    }
    r
}

/// Index set of a prime sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class {
    All,
    Residue { a: u64, b: u64 },
}

impl Class {
    pub fn contains(&self, p: u64) -> bool {
        match *self {
            Class::All => true,
            Class::Residue { a, b } => p % b == a % b,
        }
    }

    /// φ(b), or 1 for all primes.
    pub fn weight(&self) -> f64 {
        match *self {
            Class::All => 1.0,
            Class::Residue { b, .. } => totient(b) as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Class::Residue { a, b } = *self {
            if b == 0 || num_integer::gcd(a, b) != 1 {
                return Err(Error::Domain(format!("residue class {a} mod {b} is not coprime")));
            }
        }
        Ok(())
    }
}

/// Step function θ restricted to a residue class, stored at its jumps.
#[derive(Debug, Clone)]
pub struct ThetaAccumulator {
    pub class: Class,
    pub cuts: Vec<u64>,
    pub theta: Vec<f64>,
}

impl ThetaAccumulator {
    pub fn new(table: &PrimeTable, class: Class) -> Result<Self> {
        class.validate()?;
        let cuts: Vec<u64> = table.primes().iter().copied().filter(|&p| class.contains(p)).collect();
        let mut s = NeumaierSum::new();
        let theta = cuts
            .iter()
            .map(|&p| {
                s.add((p as f64).ln());
                s.value()
            })
            .collect();
        Ok(Self { class, cuts, theta })
    }

    /// θ(t), the sum of log p over class primes p ≤ t.
    pub fn theta_at(&self, t: f64) -> f64 {
        let n = self.cuts.partition_point(|&p| (p as f64) <= t);
        if n == 0 {
            0.0
        } else {
            self.theta[n - 1]
        }
    }

    /// E(t) = θ(t) − t/φ(b).
    pub fn error_at(&self, t: f64) -> f64 {
        self.theta_at(t) - t / self.class.weight()
    }
}

/// ∫₁^X E(t)/t² dt, evaluated exactly piecewise.
pub fn theta_error_integral(table: &PrimeTable, class: Class, x: f64) -> Result<f64> {
    class.validate()?;
    if x < 2.0 {
        return Err(Error::Precondition(format!("upper limit {x} < 2")));
    }
    if x > table.limit() as f64 {
        return Err(Error::IncompleteSum { required: x.ceil() as u64, available: table.limit() });
    }
    let ps: Vec<u64> = table.up_to(x as u64).iter().copied().filter(|&p| class.contains(p)).collect();
    let a = ordered_sum(&ps, |&p| (p as f64).ln() / p as f64);
    let theta = ordered_sum(&ps, |&p| (p as f64).ln());
    Ok(a - theta / x - x.ln() / class.weight())
}

/// How far a prime sum was carried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    FirstPrimes(u64),
    PrimeLimit(u64),
}

impl std::fmt::Display for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Truncation::FirstPrimes(n) => write!(f, "first {n} primes"),
            Truncation::PrimeLimit(x) => write!(f, "p <= {x}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DirectSum,
    ClosedForm,
    Integral,
    /// Σ_ℓ M_ℓ P(ℓ): moment-weighted sums before the generating function
    /// is collapsed.
    MomentSeries,
}

/// A named prime-sum constant with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantResult {
    pub name: String,
    pub value: f64,
    pub truncation: Truncation,
    /// Largest prime actually summed.
    pub last_prime: u64,
    pub tail_bound: f64,
    pub method: Method,
}

/// ∫_X^∞ log t / t^s dt for s > 1.
pub fn log_power_tail(x: f64, s: f64) -> f64 {
    let a = s - 1.0;
    x.powf(-a) * (x.ln() / a + 1.0 / (a * a))
}

/// Heuristic bound for ∫_X^∞ |E(t)|/t² dt assuming |E(t)| ≤ √t log²t / (8π).
pub fn theta_tail_bound(x: f64) -> f64 {
    let l = x.ln();
    2.0 * (l * l + 4.0 * l + 8.0) / (8.0 * std::f64::consts::PI * x.sqrt())
}

/// γ_PNT = 1 + ∫₁^∞ E(t)/t² dt.
pub fn gamma_pnt(table: &PrimeTable, method: Method, trunc: Truncation) -> Result<ConstantResult> {
    let ps = table.truncate(trunc)?;
    if ps.len() < 10_000 {
        return Err(Error::Precondition("gamma_pnt needs at least 10^4 primes".into()));
    }
    let last = *ps.last().unwrap();
    let x = last as f64;
    let (value, tail_bound) = match method {
        Method::Integral | Method::DirectSum => {
            let v = 1.0 + theta_error_integral(table, Class::All, x)?;
            (v, theta_tail_bound(x))
        }
        Method::ClosedForm => {
            let s = ordered_sum(ps, |&p| {
                let pf = p as f64;
                pf.ln() / (pf * pf - pf)
            });
            (-literals::euler_gamma() - s, log_power_tail(x, 2.0) * x / (x - 1.0))
        }
        Method::MomentSeries => return Err(Error::Unsupported("moment series for gamma_pnt".into())),
    };
    Ok(ConstantResult { name: "gamma_pnt".into(), value, truncation: trunc, last_prime: last, tail_bound, method })
}

/// γ_PNT;a,b = 1 + ∫₁^∞ φ(b) E_{a,b}(t)/t² dt for (a,b) ∈ {(1,3), (1,4)}.
pub fn gamma_pnt_ab(table: &PrimeTable, a: u64, b: u64, method: Method, trunc: Truncation) -> Result<ConstantResult> {
    if !matches!((a, b), (1, 3) | (1, 4)) {
        return Err(Error::Domain(format!("gamma_pnt_ab supports (1,3) and (1,4), got ({a},{b})")));
    }
    let ps = table.truncate(trunc)?;
    let last = *ps.last().ok_or_else(|| Error::Precondition("empty truncation".into()))?;
    let x = last as f64;
    let class = Class::Residue { a, b };
    let (value, tail_bound) = match method {
        Method::Integral | Method::DirectSum => {
            let v = 1.0 + class.weight() * theta_error_integral(table, class, x)?;
            (v, class.weight() * theta_tail_bound(x))
        }
        Method::ClosedForm => {
            let g = literals::euler_gamma();
            let head = if b == 3 {
                -2.0 * g - 4.0 * literals::ln_2pi() + literals::ln_3() + 6.0 * literals::ln_gamma_1_3()
            } else {
                -2.0 * g - 3.0 * literals::ln_2pi() + 4.0 * literals::ln_gamma_1_4()
            };
            let s = ordered_sum(ps, |&p| {
                if p % b == 0 || (b == 4 && p == 2) {
                    return 0.0;
                }
                let pf = p as f64;
                let d = if p % b == 1 { pf } else { 1.0 };
                pf.ln() / (pf * pf - d)
            });
            (head - 2.0 * s, 2.0 * log_power_tail(x, 2.0) * x * x / (x * x - x))
        }
        Method::MomentSeries => return Err(Error::Unsupported("moment series for gamma_pnt_ab".into())),
    };
    Ok(ConstantResult {
        name: format!("gamma_pnt_{a}{b}"),
        value,
        truncation: trunc,
        last_prime: last,
        tail_bound,
        method,
    })
}

/// Result of [`pnt_weighted_sum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PntWeightedSum {
    /// φ(b) Σ_{p ≡ a (b)} 2 log p/(p log R) φ̂(2 log p/log R).
    pub sum: f64,
    /// φ(0)/2 + 2 φ̂(0) γ / log R with γ the class constant.
    pub asymptotic: f64,
    pub gamma: f64,
}

/// The weighted prime sum of the PNT lemmas, normalized by φ(b) so that
/// every class has the same main term φ(0)/2.
pub fn pnt_weighted_sum(
    table: &PrimeTable,
    phi: &TestFunctionPair,
    log_r: f64,
    class: Class,
) -> Result<PntWeightedSum> {
    class.validate()?;
    let need = (phi.sigma * log_r / 2.0).exp();
    if need > table.limit() as f64 {
        return Err(Error::IncompleteSum { required: need.ceil() as u64, available: table.limit() });
    }
    let ps: Vec<u64> = table.up_to(need.ceil() as u64).iter().copied().filter(|&p| class.contains(p)).collect();
    let s = ordered_sum(&ps, |&p| {
        let lp = (p as f64).ln();
        2.0 * lp / (p as f64 * log_r) * phi.phihat(2.0 * lp / log_r)
    });
    let gamma = match class {
        Class::All => {
            let full = table.len() >= 10_000;
            if full {
                gamma_pnt(table, Method::ClosedForm, Truncation::PrimeLimit(table.limit()))?.value
            } else {
                -literals::euler_gamma() - ordered_sum(table.primes(), |&p| (p as f64).ln() / ((p * p - p) as f64))
            }
        }
        Class::Residue { a: 1, b } if b == 3 || b == 4 => {
            gamma_pnt_ab(table, 1, b, Method::ClosedForm, Truncation::PrimeLimit(table.limit()))?.value
        }
        c => 1.0 + c.weight() * theta_error_integral(table, c, table.limit() as f64)?,
    };
    let sum = class.weight() * s;
    Ok(PntWeightedSum { sum, asymptotic: phi.phi0 / 2.0 + 2.0 * phi.phihat0 * gamma / log_r, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tables() {
        assert_eq!(sieve_primes(10).unwrap().primes(), &[2, 3, 5, 7]);
        assert_eq!(sieve_primes(2).unwrap().primes(), &[2]);
        assert!(matches!(sieve_primes(1), Err(Error::EmptyTable(1))));
        assert!(matches!(sieve_primes_capped(1000, 100), Err(Error::Resource(_))));
    }

    #[test]
    fn segment_boundaries() {
        let t = sieve_primes(3 * SEGMENT + 17).unwrap();
        let naive = small_primes(3 * SEGMENT + 17);
        assert_eq!(t.primes(), &naive[..]);
        let mut got = Vec::new();
        for_each_prime_segment(SEGMENT - 50, SEGMENT + 50, |s| got.extend_from_slice(s));
        let want: Vec<u64> = naive.iter().copied().filter(|&p| (SEGMENT - 50..=SEGMENT + 50).contains(&p)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_symbol(1, 7).unwrap(), 1);
        assert_eq!(legendre_symbol(3, 7).unwrap(), -1);
        assert_eq!(legendre_symbol(14, 7).unwrap(), 0);
        assert!(legendre_symbol(3, 9).is_err());
        assert!(legendre_symbol(3, 2).is_err());
    }

    #[test]
    fn theta_integral_below_three() {
        let t = sieve_primes(100).unwrap();
        let v = theta_error_integral(&t, Class::All, 2.0).unwrap();
        assert!((v + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn non_coprime_class_rejected() {
        let t = sieve_primes(100).unwrap();
        assert!(theta_error_integral(&t, Class::Residue { a: 2, b: 4 }, 50.0).is_err());
    }
}
