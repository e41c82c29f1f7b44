//! Moment sequences, their generating functions, P(ℓ) prime sums,
//! polylogarithms of negative order and the Hecke power expansion.

use crate::error::{Error, Result};
use crate::numerics::{ordered_sum, NeumaierSum};
use crate::primes::log_power_tail;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Exact rational used for identity checks.
pub type RationalValue = BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    /// Even moments C_ℓ of the semicircle.
    SatoTate,
    /// Even moments binom(2ℓ, ℓ) of the CM analogue.
    Cm,
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    let k = k.min(n - k);
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

pub fn catalan(l: u64) -> BigInt {
    binomial(2 * l, l) / BigInt::from(l + 1)
}

pub fn central_binomial(l: u64) -> BigInt {
    binomial(2 * l, l)
}

/// M_ℓ for the given kind.
pub fn moment(kind: MomentKind, l: u64) -> BigInt {
    match kind {
        MomentKind::SatoTate => catalan(l),
        MomentKind::Cm => central_binomial(l),
    }
}

fn moment_ratio(kind: MomentKind, l: u64) -> f64 {
    // M_{ℓ+1} / M_ℓ
    let l = l as f64;
    match kind {
        MomentKind::SatoTate => 2.0 * (2.0 * l + 1.0) / (l + 2.0),
        MomentKind::Cm => 2.0 * (2.0 * l + 1.0) / (l + 1.0),
    }
}

/// Generating function Σ_{ℓ≥2} M_ℓ x^ℓ in closed form.
pub fn g_moment(kind: MomentKind, x: f64) -> Result<f64> {
    if !(0.0..0.25).contains(&x) {
        return Err(Error::Divergent(format!("g_moment needs 0 <= x < 1/4, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let s = (1.0 - 4.0 * x).sqrt();
    Ok(match kind {
        MomentKind::SatoTate => (1.0 - s) / (2.0 * x) - 1.0 - x,
        MomentKind::Cm => (1.0 - s) / s - 2.0 * x,
    })
}

/// Exact rational square root, if one exists.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

/// Exact generating function at rational x where 1 − 4x is a rational
/// square, for instance x = p/(p+1)².
pub fn g_moment_rational(kind: MomentKind, x: &BigRational) -> Result<BigRational> {
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    if x.is_negative() || x >= &quarter {
        return Err(Error::Divergent("g_moment needs 0 <= x < 1/4".into()));
    }
    if x.is_zero() {
        return Ok(BigRational::zero());
    }
    let one = BigRational::one();
    let disc = &one - x * BigRational::from_integer(BigInt::from(4));
    let s = rational_sqrt(&disc).ok_or_else(|| Error::Unsupported("1 - 4x is not a rational square".into()))?;
    Ok(match kind {
        MomentKind::SatoTate => (&one - &s) / (x * BigRational::from_integer(BigInt::from(2))) - &one - x,
        MomentKind::Cm => (&one - &s) / &s - x * BigRational::from_integer(BigInt::from(2)),
    })
}

/// x = p/(p+1)².
pub fn x_at_prime(p: u64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(p + 1).pow(2))
}

/// (2p+1)/(p(p+1)²).
pub fn g_st_at_prime(p: u64) -> BigRational {
    let p = BigInt::from(p);
    let q: BigInt = &p + 1;
    BigRational::new(&p * 2 + 1, &p * q.pow(2))
}

/// 2(3p+1)/((p−1)(p+1)²).
pub fn g_cm_at_prime(p: u64) -> BigRational {
    let p = BigInt::from(p);
    let q: BigInt = &p + 1;
    BigRational::new((&p * 3 + 1) * 2, (&p - 1) * q.pow(2))
}

/// Σ_{ℓ=2}^{n} M_ℓ x^ℓ.
pub fn g_series(kind: MomentKind, x: f64, n: u64) -> f64 {
    let mut s = NeumaierSum::new();
    let mut term = moment(kind, 2).to_f64().unwrap() * x * x;
    for l in 2..=n {
        s.add(term);
        term *= moment_ratio(kind, l) * x;
    }
    s.value()
}

/// A truncated prime sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimeSum {
    pub value: f64,
    pub tail_bound: f64,
    pub last_prime: u64,
}

#[inline]
fn p_weight(p: u64) -> (f64, f64) {
    let pf = p as f64;
    ((pf - 1.0) * pf.ln() / (pf + 1.0), pf / ((pf + 1.0) * (pf + 1.0)))
}

/// P(ℓ) = Σ_p (p−1) log p/(p+1) · (p/(p+1)²)^ℓ over the given primes.
pub fn p_ell_sum(primes: &[u64], l: u32) -> Result<PrimeSum> {
    if l < 2 {
        return Err(Error::Domain(format!("P(ℓ) needs ℓ >= 2, got {l}")));
    }
    let last = *primes.last().ok_or_else(|| Error::Precondition("no primes".into()))?;
    // the summand decreases in p for p >= 5 and ℓ >= 2, so stop once it is
    // negligible next to the leading term
    let lead = primes.iter().take(3).map(|&p| {
        let (w, x) = p_weight(p);
        w * x.powi(l as i32)
    });
    let floor = 1e-24 * lead.fold(0.0, f64::max);
    let cut = primes.partition_point(|&p| {
        let (w, x) = p_weight(p);
        p < 5 || w * x.powi(l as i32) > floor
    });
    let value = ordered_sum(&primes[..cut], |&p| {
        let (w, x) = p_weight(p);
        w * x.powi(l as i32)
    });
    Ok(PrimeSum { value, tail_bound: log_power_tail(last as f64, l as f64), last_prime: last })
}

/// Σ_ℓ M_ℓ P(ℓ) with the ℓ-sum continued until its geometric tail drops
/// below 1e-17. `primes` may already be restricted to a residue class.
pub fn moment_series_sum(kind: MomentKind, primes: &[u64]) -> Result<(PrimeSum, u32)> {
    let first = *primes.first().ok_or_else(|| Error::Precondition("no primes".into()))?;
    let last = *primes.last().unwrap();
    let (_, xmax) = p_weight(first);
    let ratio = 4.0 * xmax;
    let mut acc = NeumaierSum::new();
    let mut tail = 0.0;
    let mut m = moment(kind, 2).to_f64().unwrap();
    let mut l = 2u32;
    loop {
        let ps = p_ell_sum(primes, l)?;
        let term = m * ps.value;
        acc.add(term);
        tail += m * ps.tail_bound;
        if l >= 4 && term * ratio / (1.0 - ratio) < 1e-17 {
            tail += term * ratio / (1.0 - ratio);
            break;
        }
        m *= moment_ratio(kind, l as u64);
        l += 1;
        if l > 2000 {
            return Err(Error::Divergent("moment series did not converge".into()));
        }
    }
    Ok((PrimeSum { value: acc.value(), tail_bound: tail, last_prime: last }, l))
}

/// Eulerian numbers ⟨r j⟩ for j = 0..=r (row 0 is [1]).
pub fn eulerian_row(r: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for n in 1..=r {
        let mut next = vec![BigInt::zero(); n + 1];
        for j in 0..=n {
            let mut v = BigInt::zero();
            if j < row.len() {
                v += &row[j] * BigInt::from(j + 1);
            }
            if j >= 1 && j - 1 < row.len() {
                v += &row[j - 1] * BigInt::from(n - j);
            }
            next[j] = v;
        }
        row = next;
    }
    row
}

pub fn eulerian(r: usize, j: usize) -> BigInt {
    eulerian_row(r).get(j).cloned().unwrap_or_else(BigInt::zero)
}

/// Li_{−r}(x) as an exact rational.
///
/// For r ≥ 1 this is Σ_j ⟨r j⟩ x^{r−j}/(1−x)^{r+1}. That form is off by
/// one at r = 0, where Li_0(x) = x/(1−x) is used directly.
pub fn polylog_neg_rational(r: usize, x: &BigRational) -> Result<BigRational> {
    let one = BigRational::one();
    if x.abs() >= one {
        return Err(Error::Divergent("polylog needs |x| < 1".into()));
    }
    let denom = (&one - x).pow(r as i32 + 1);
    if r == 0 {
        return Ok(x / denom);
    }
    let row = eulerian_row(r);
    let mut num = BigRational::zero();
    for (j, e) in row.iter().enumerate() {
        num += BigRational::from_integer(e.clone()) * x.pow((r - j) as i32);
    }
    Ok(num / denom)
}

pub fn polylog_neg(r: usize, x: f64) -> Result<f64> {
    if x.abs() >= 1.0 {
        return Err(Error::Divergent("polylog needs |x| < 1".into()));
    }
    if r == 0 {
        return Ok(x / (1.0 - x));
    }
    let row = eulerian_row(r);
    let num: f64 = row.iter().enumerate().map(|(j, e)| e.to_f64().unwrap() * x.powi((r - j) as i32)).sum();
    Ok(num / (1.0 - x).powi(r as i32 + 1))
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients (ascending in k) of Π_{j<ℓ} (k² − j²).
pub fn a_coefficients(l: usize) -> Vec<BigInt> {
    let mut poly = vec![BigInt::one()];
    for j in 0..l {
        let jj = BigInt::from(j * j);
        poly = poly_mul(&poly, &[-jj, BigInt::zero(), BigInt::one()]);
    }
    poly
}

/// Coefficients (ascending in k) of (2k+1) Π_{j<ℓ} (k−j)(k+1+j).
pub fn b_coefficients(l: usize) -> Vec<BigInt> {
    let mut poly = vec![BigInt::one(), BigInt::from(2)];
    for j in 0..l {
        let j = j as i64;
        poly = poly_mul(&poly, &[BigInt::from(-j), BigInt::one()]);
        poly = poly_mul(&poly, &[BigInt::from(1 + j), BigInt::one()]);
    }
    poly
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

/// Both sides of the even and odd polylogarithm identities.
#[derive(Debug, Clone, PartialEq)]
pub struct PolylogSides {
    pub even_lhs: BigRational,
    pub even_rhs: BigRational,
    pub odd_lhs: BigRational,
    pub odd_rhs: BigRational,
}

pub fn polylog_identity_sides(l: usize, x: &BigRational) -> Result<PolylogSides> {
    if l == 0 || l > 6 {
        return Err(Error::Domain(format!("identity check supports 1 <= ℓ <= 6, got {l}")));
    }
    let lincomb = |coeffs: &[BigInt]| -> Result<BigRational> {
        let mut s = BigRational::zero();
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                s += BigRational::from_integer(c.clone()) * polylog_neg_rational(i, x)?;
            }
        }
        Ok(s)
    };
    let one = BigRational::one();
    let core = x.pow(l as i32) * (&one + x);
    let even_rhs = BigRational::from_integer(factorial(2 * l) / 2) * &core / (&one - x).pow(2 * l as i32 + 1);
    let odd_rhs = BigRational::from_integer(factorial(2 * l + 1)) * &core / (&one - x).pow(2 * l as i32 + 2);
    Ok(PolylogSides {
        even_lhs: lincomb(&a_coefficients(l))?,
        even_rhs,
        odd_lhs: lincomb(&b_coefficients(l))?,
        odd_rhs,
    })
}

/// Whether both identities hold exactly, with the right sides multiplied
/// by `scale` (pass 1 for the genuine check).
pub fn polylog_identity_check_scaled(l: usize, x: &BigRational, scale: &BigRational) -> Result<bool> {
    let s = polylog_identity_sides(l, x)?;
    Ok(s.even_lhs == &s.even_rhs * scale && s.odd_lhs == &s.odd_rhs * scale)
}

pub fn polylog_identity_check(l: usize, x: &BigRational) -> Result<bool> {
    polylog_identity_check_scaled(l, x, &BigRational::one())
}

/// Coefficients b_{r,r−2k}, k = 0..=⌊r/2⌋, with λ^r = Σ b_{r,m} λ(p^m).
pub fn hecke_power_expansion(r: u32) -> Result<Vec<u64>> {
    if r > 30 {
        return Err(Error::Domain(format!("r must be <= 30, got {r}")));
    }
    // c[m] is the coefficient of λ(p^m); multiply by λ using
    // λ·λ(p^m) = λ(p^{m+1}) + λ(p^{m−1}).
    let mut c = vec![0u64; r as usize + 2];
    c[0] = 1;
    for _ in 0..r {
        let mut next = vec![0u64; c.len()];
        for m in 0..c.len() {
            if c[m] == 0 {
                continue;
            }
            if m + 1 < c.len() {
                next[m + 1] += c[m];
            }
            if m >= 1 {
                next[m - 1] += c[m];
            }
        }
        c = next;
    }
    Ok((0..=r / 2).map(|k| c[(r - 2 * k) as usize]).collect())
}

/// λ(p^m) = U_m(λ/2), the Chebyshev recurrence in λ.
pub fn hecke_eigen_power(lambda: f64, m: u32) -> f64 {
    let (mut a, mut b) = (1.0, lambda);
    if m == 0 {
        return 1.0;
    }
    for _ in 1..m {
        let c = lambda * b - a;
        a = b;
        b = c;
    }
    b
}

/// Reduces a rational to lowest terms with positive denominator; the
/// `BigRational` constructor already does this, so this is a check.
pub fn is_normalized(r: &BigRational) -> bool {
    r.denom().is_positive() && r.numer().gcd(r.denom()).is_one()
}
