//! Root counts ν_D(d), the local sieve factor H_{D,k}(p), and k-th power
//! free windows of parameters.

use super::{FamilySpec, Poly, SieveExponent};
use crate::error::{Error, Result};
use crate::primes::{is_prime, legendre, sieve_primes};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// Moduli up to this size are handled by scanning every residue.
pub const DIRECT_SCAN_LIMIT: u64 = 1_000_000;
const LIFT_SET_CAP: usize = 10_000_000;

fn scan(fam: &FamilySpec, d: u64) -> u64 {
    (0..d).filter(|&t| fam.d_mod(t, d) == 0).count() as u64
}

fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut q = 2u64;
    while q * q <= n {
        if n.is_multiple_of(q) {
            let mut e = 0;
            while n.is_multiple_of(q) {
                n /= q;
                e += 1;
            }
            out.push((q, e));
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// ν_D(d) = #{t mod d : D(t) ≡ 0 mod d}.
pub fn nu_d(fam: &FamilySpec, d: u64) -> Result<u64> {
    if d == 0 {
        return Err(Error::Domain("nu_D needs d >= 1".into()));
    }
    if d <= DIRECT_SCAN_LIMIT {
        return Ok(scan(fam, d));
    }
    let mut acc = 1u64;
    for (p, e) in factor(d) {
        acc = acc.checked_mul(nu_prime_power(fam, p, e)?).ok_or_else(|| Error::Width("nu_D overflow".into()))?;
    }
    Ok(acc)
}

fn checked_pow(p: u64, e: u32) -> Option<u64> {
    let mut m = 1u64;
    for _ in 0..e {
        m = m.checked_mul(p)?;
    }
    Some(m)
}

/// ν_D(p^e).
///
/// When p divides no pairwise resultant of the factors, the roots of the
/// product are the disjoint union of the roots of each factor. Simple roots
/// mod p lift uniquely; singular ones are lifted digit by digit.
pub fn nu_prime_power(fam: &FamilySpec, p: u64, e: u32) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if e == 0 {
        return Ok(1);
    }
    if let Some(m) = checked_pow(p, e) {
        if m <= DIRECT_SCAN_LIMIT {
            return Ok(scan(fam, m));
        }
    }
    nu_lifted(fam, &pairwise_resultants(fam), p, e)
}

fn pairwise_resultants(fam: &FamilySpec) -> Vec<(usize, usize, BigInt)> {
    let d = &fam.d_factors;
    let mut out = Vec::new();
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            out.push((i, j, super::poly::resultant(&d[i], &d[j])));
        }
    }
    out
}

fn nu_lifted(fam: &FamilySpec, resultants: &[(usize, usize, BigInt)], p: u64, e: u32) -> Result<u64> {
    if let Some(m) = checked_pow(p, e) {
        if m <= DIRECT_SCAN_LIMIT {
            return Ok(scan(fam, m));
        }
    }
    let pb = BigInt::from(p);
    for (i, j, r) in resultants {
        if (r % &pb).is_zero() {
            return Err(Error::Unsupported(format!(
                "nu_D({p}^{e}): factors {i} and {j} share a root mod {p} and the modulus is too large to scan"
            )));
        }
    }
    let mut total = 0u64;
    for f in &fam.d_factors {
        total += roots_count_prime_power(f, p, e)?;
    }
    Ok(total)
}

fn mod_coeffs(f: &Poly, p: u64) -> Vec<u64> {
    let pi = p as i128;
    let mut c: Vec<u64> = f.coeffs().iter().map(|&x| (x as i128).rem_euclid(pi) as u64).collect();
    while c.len() > 1 && *c.last().unwrap() == 0 {
        c.pop();
    }
    c
}

/// Roots of f mod p, split into (simple count, singular roots).
fn roots_mod_p(f: &Poly, p: u64) -> Result<(u64, Vec<u64>)> {
    let c = mod_coeffs(f, p);
    let deg = c.len() - 1;
    if deg == 0 {
        if c[0] == 0 {
            return Ok((0, (0..p).collect()));
        }
        return Ok((0, vec![]));
    }
    if deg == 1 {
        return Ok((1, vec![]));
    }
    if deg == 2 {
        let (c0, c1, c2) = (f.coeffs()[0] as i128, f.coeffs()[1] as i128, f.coeffs()[2] as i128);
        let disc = (c1 * c1 - 4 * c2 * c0).rem_euclid(p as i128) as i64;
        if p == 2 {
            return split_by_scan(f, p);
        }
        return Ok(match legendre(disc, p) {
            1 => (2, vec![]),
            -1 => (0, vec![]),
            _ => {
                // double root −c1/(2c2)
                let inv = crate::primes::pow_mod((2 * c[2]) % p, p - 2, p);
                let r = ((p - c[1] % p) % p) as u128 * inv as u128 % p as u128;
                (0, vec![r as u64])
            }
        });
    }
    if p > 100_000_000 {
        return Err(Error::Unsupported(format!("roots of a degree-{deg} factor mod {p}")));
    }
    split_by_scan(f, p)
}

fn split_by_scan(f: &Poly, p: u64) -> Result<(u64, Vec<u64>)> {
    let df = f.derivative();
    let mut simple = 0;
    let mut singular = Vec::new();
    for t in 0..p {
        if f.eval_mod(t, p) == 0 {
            if df.eval_mod(t, p) != 0 {
                simple += 1;
            } else {
                singular.push(t);
            }
        }
    }
    Ok((simple, singular))
}

fn roots_count_prime_power(f: &Poly, p: u64, e: u32) -> Result<u64> {
    let (simple, singular) = roots_mod_p(f, p)?;
    if singular.is_empty() {
        return Ok(simple);
    }
    checked_pow(p, e)
        .filter(|&m| m < (1u64 << 62))
        .ok_or_else(|| Error::Width(format!("{p}^{e} exceeds the lifting width")))?;
    let lifted = lift_roots(f, p, e, singular)?;
    Ok(simple + lifted.len() as u64)
}

/// All roots mod p^e lying above the given roots mod p.
fn lift_roots(f: &Poly, p: u64, e: u32, mut roots: Vec<u64>) -> Result<Vec<u64>> {
    let mut pj = p;
    for _ in 1..e {
        let next_mod = pj * p;
        let mut next = Vec::new();
        for &r in &roots {
            for s in 0..p {
                let t = r + s * pj;
                if f.eval_mod(t, next_mod) == 0 {
                    next.push(t);
                    if next.len() > LIFT_SET_CAP {
                        return Err(Error::Resource(format!("too many roots of a D factor mod {p}^{e}")));
                    }
                }
            }
        }
        roots = next;
        pj = next_mod;
    }
    Ok(roots)
}

/// All roots of f mod p^e; p^e must fit comfortably in 64 bits.
pub fn roots_mod_prime_power(f: &Poly, p: u64, e: u32) -> Result<Vec<u64>> {
    checked_pow(p, e)
        .filter(|&m| m < (1u64 << 62))
        .ok_or_else(|| Error::Width(format!("{p}^{e} exceeds the lifting width")))?;
    let base: Vec<u64> = (0..p).filter(|&t| f.eval_mod(t, p) == 0).collect();
    lift_roots(f, p, e, base)
}

/// H_{D,k}(p) split as main (always 1) plus the sieve part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HFactor {
    pub main: f64,
    pub sieve: f64,
}

impl HFactor {
    pub fn total(&self) -> f64 {
        self.main + self.sieve
    }
}

pub fn h_factor(fam: &FamilySpec, p: u64) -> Result<HFactor> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    SieveContext::new(fam).h_factor_at_prime(p)
}

/// A family with its factor resultants precomputed, for H_{D,k}(p) over
/// many primes.
#[derive(Debug, Clone)]
pub struct SieveContext<'a> {
    fam: &'a FamilySpec,
    resultants: Vec<(usize, usize, BigInt)>,
}

impl<'a> SieveContext<'a> {
    pub fn new(fam: &'a FamilySpec) -> Self {
        let resultants = if fam.k.finite().is_some() { pairwise_resultants(fam) } else { Vec::new() };
        SieveContext { fam, resultants }
    }

    /// H_{D,k}(p) for a prime p (not checked).
    pub fn h_factor_at_prime(&self, p: u64) -> Result<HFactor> {
        let k = match self.fam.k {
            SieveExponent::Infinite => return Ok(HFactor { main: 1.0, sieve: 0.0 }),
            SieveExponent::Finite(k) => k,
        };
        let nu = if k == 0 { 1 } else { nu_lifted(self.fam, &self.resultants, p, k)? };
        h_from_nu(p, k, nu)
    }
}

fn h_from_nu(p: u64, k: u32, nu: u64) -> Result<HFactor> {
    if let Some(m) = checked_pow(p, k) {
        if nu >= m {
            return Err(Error::DegenerateSieve { p, nu });
        }
    }
    let x = nu as f64 / (p as f64).powi(k as i32);
    Ok(HFactor { main: 1.0, sieve: x / (1.0 - x) })
}

/// Parameters t ∈ [N, 2N] with every D factor k-th power free.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveWindow {
    pub n: u64,
    /// Bit i is set when t = N + i is kept.
    pub good_t: Vec<u64>,
    pub w: u64,
    pub log_r: f64,
}

impl SieveWindow {
    pub fn len(&self) -> u64 {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_good(&self, t: u64) -> bool {
        if t < self.n || t > 2 * self.n {
            return false;
        }
        let i = (t - self.n) as usize;
        self.good_t[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn with_log_r(mut self, log_r: f64) -> Self {
        self.log_r = log_r;
        self
    }
}

/// Marks t ∈ [N, 2N] whose D factors are all k-th power free by striking
/// the residue classes of roots mod q^k for every prime q up to the
/// largest possible k-th root. `log_r` defaults to log N.
pub fn sieve_window(fam: &FamilySpec, n: u64) -> Result<SieveWindow> {
    if n == 0 {
        return Err(Error::Domain("window start N must be >= 1".into()));
    }
    let len = (n + 1) as usize;
    let mut bits = vec![u64::MAX; len.div_ceil(64)];
    if !len.is_multiple_of(64) {
        *bits.last_mut().unwrap() = (1u64 << (len % 64)) - 1;
    }
    if let SieveExponent::Finite(k) = fam.k {
        let hi = 2 * n;
        for f in &fam.d_factors {
            let mut max_abs = 0u128;
            for t in [n, hi] {
                let big = eval_big(f, t);
                let v = big.abs().to_u128().ok_or_else(|| Error::Width(format!("|D({t})| exceeds 128 bits")))?;
                max_abs = max_abs.max(v);
            }
            // bound |f| on the window by its endpoint values plus the coefficient mass
            let mass: u128 = f.coeffs().iter().map(|&c| c.unsigned_abs() as u128).sum::<u128>()
                * (hi as u128).checked_pow(f.degree() as u32).ok_or_else(|| Error::Width("window too wide".into()))?;
            max_abs = max_abs.max(mass);
            let bound = kth_root(max_abs, k);
            let table = sieve_primes(bound.max(2))?;
            for &q in table.primes() {
                let qk = match checked_pow(q, k) {
                    Some(m) if (m as u128) <= max_abs && m < (1u64 << 62) => m,
                    _ => continue,
                };
                for r in roots_mod_prime_power(f, q, k)? {
                    let mut t = n + (r + qk - n % qk) % qk;
                    while t <= hi {
                        let i = (t - n) as usize;
                        bits[i / 64] &= !(1u64 << (i % 64));
                        t += qk;
                    }
                }
            }
        }
    }
    let w = bits.iter().map(|b| b.count_ones() as u64).sum();
    Ok(SieveWindow { n, good_t: bits, w, log_r: (n as f64).ln() })
}

fn eval_big(f: &Poly, t: u64) -> BigInt {
    let tb = BigInt::from(t);
    let mut acc = BigInt::zero();
    for &c in f.coeffs().iter().rev() {
        acc = acc * &tb + BigInt::from(c);
    }
    acc
}

fn kth_root(x: u128, k: u32) -> u64 {
    let mut r = (x as f64).powf(1.0 / k as f64) as u64 + 2;
    while r > 0 && (r as u128).checked_pow(k).is_none_or(|v| v > x) {
        r -= 1;
    }
    r
}
