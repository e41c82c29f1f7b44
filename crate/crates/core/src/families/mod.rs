//! One-parameter families y² = x³ + A(T)x + B(T) over ℚ(T).
//!
//! Fourier coefficients are always the Legendre sum
//! a_t(p) = −Σ_x ((x³ + A(t)x + B(t))/p), even at parameters where the
//! Weierstrass equation is not minimal. Those parameters carry sieve weight
//! zero, so their values never reach a sieved aggregate.

pub mod poly;
pub mod registry;
pub mod sieve;
pub mod traces;

pub use poly::Poly;
pub use registry::{
    builtin, builtin_names, closed_form_moment, closed_form_moment_variant, elliptic_a_e_y2_x3_minus_x, ClosedForms,
    LemmaVariant,
};
pub use sieve::{h_factor, nu_d, nu_prime_power, sieve_window, HFactor, SieveContext, SieveWindow};
pub use traces::{
    a_t_p, a_tilde, a_tilde_from_traces, complete_moment, complete_moment_brute, quadratic_legendre_sum,
    quadratic_legendre_sum_brute, rank_bias, reduction_type, traces, traces_brute, MomentTable, ReductionType, Side,
    TraceEngine,
};

use crate::error::{Error, Result};
use crate::primes::sieve_primes;
use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::Value;
use std::collections::BTreeSet;

/// Sieve exponent: D(t) must be k-th power free, or no sieving at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SieveExponent {
    Finite(u32),
    Infinite,
}

impl SieveExponent {
    pub fn finite(&self) -> Option<u32> {
        match self {
            SieveExponent::Finite(k) => Some(*k),
            SieveExponent::Infinite => None,
        }
    }
}

impl std::fmt::Display for SieveExponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SieveExponent::Finite(k) => write!(f, "{k}"),
            SieveExponent::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub name: String,
    pub a: Poly,
    pub b: Poly,
    pub d_factors: Vec<Poly>,
    pub k: SieveExponent,
    pub forced_zero_primes: BTreeSet<u64>,
}

/// Primes checked against the pairwise resultants of the D factors.
pub const RESULTANT_CHECK_BOUND: u64 = 10_000;

impl FamilySpec {
    /// Δ(T) = −16(4A³ + 27B²) as big-integer coefficients.
    pub fn discriminant(&self) -> Vec<BigInt> {
        use poly::{big_add, big_mul, big_scale};
        let a = self.a.to_big();
        let b = self.b.to_big();
        let a3 = big_mul(&big_mul(&a, &a), &a);
        let b2 = big_mul(&b, &b);
        big_scale(&big_add(&big_scale(&a3, 4), &big_scale(&b2, 27)), -16)
    }

    /// Δ(t) mod p.
    pub fn discriminant_mod(&self, t: u64, p: u64) -> u64 {
        let a = self.a.eval_mod(t, p) as u128;
        let b = self.b.eval_mod(t, p) as u128;
        let p128 = p as u128;
        let inner = (4 * (a * a % p128) * a + 27 * (b * b % p128)) % p128;
        ((p128 - (16 * inner) % p128) % p128) as u64
    }

    /// D(t) mod m for the product of the D factors.
    pub fn d_mod(&self, t: u64, m: u64) -> u64 {
        let mut acc: u128 = 1 % m as u128;
        for f in &self.d_factors {
            acc = acc * f.eval_mod(t, m) as u128 % m as u128;
        }
        acc as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.discriminant().iter().all(|c| c.is_zero()) {
            return Err(Error::Domain(format!("family '{}' has identically zero discriminant", self.name)));
        }
        if let SieveExponent::Finite(k) = self.k {
            if k < 3 {
                return Err(Error::Domain(format!("sieve exponent must be >= 3, got {k}")));
            }
        }
        for f in &self.d_factors {
            if f.is_zero() {
                return Err(Error::Domain("zero D factor".into()));
            }
        }
        for &p in &self.forced_zero_primes {
            if !crate::primes::is_prime(p) {
                return Err(Error::Domain(format!("forced-zero entry {p} is not prime")));
            }
        }
        let primes = sieve_primes(RESULTANT_CHECK_BOUND)?;
        for i in 0..self.d_factors.len() {
            for j in i + 1..self.d_factors.len() {
                let r = poly::resultant(&self.d_factors[i], &self.d_factors[j]);
                if r.is_zero() {
                    return Err(Error::Domain(format!("D factors {i} and {j} share a common factor")));
                }
                for &p in primes.primes().iter().filter(|&&p| p >= 5) {
                    if (&r % BigInt::from(p)).is_zero() {
                        return Err(Error::Domain(format!("prime {p} divides the resultant of D factors {i} and {j}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses the JSON family config, reporting the failing field path.
    pub fn from_json(text: &str) -> Result<FamilySpec> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| Error::Config { path: "$".into(), msg: e.to_string() })?;
        let obj = v.as_object().ok_or_else(|| cfg("$", "expected an object"))?;
        let name = obj
            .get("name")
            .ok_or_else(|| cfg("name", "missing"))?
            .as_str()
            .ok_or_else(|| cfg("name", "expected a string"))?
            .to_string();
        let poly_at = |key: &str, val: Option<&Value>| -> Result<Poly> {
            let arr =
                val.ok_or_else(|| cfg(key, "missing"))?.as_array().ok_or_else(|| cfg(key, "expected an array"))?;
            let mut c = Vec::with_capacity(arr.len());
            for (i, x) in arr.iter().enumerate() {
                c.push(x.as_i64().ok_or_else(|| cfg(&format!("{key}[{i}]"), "expected an integer"))?);
            }
            if c.is_empty() {
                return Err(cfg(key, "empty coefficient list"));
            }
            Ok(Poly::new(c))
        };
        let a = poly_at("A", obj.get("A"))?;
        let b = poly_at("B", obj.get("B"))?;
        let dl = obj
            .get("D_factors")
            .ok_or_else(|| cfg("D_factors", "missing"))?
            .as_array()
            .ok_or_else(|| cfg("D_factors", "expected an array"))?;
        let mut d_factors = Vec::new();
        for (i, f) in dl.iter().enumerate() {
            d_factors.push(poly_at(&format!("D_factors[{i}]"), Some(f))?);
        }
        let k = match obj.get("k").ok_or_else(|| cfg("k", "missing"))? {
            Value::String(s) if s == "inf" => SieveExponent::Infinite,
            Value::Number(n) => SieveExponent::Finite(
                n.as_u64()
                    .and_then(|k| u32::try_from(k).ok())
                    .ok_or_else(|| cfg("k", "expected a positive integer"))?,
            ),
            _ => return Err(cfg("k", "expected an integer or \"inf\"")),
        };
        let mut forced_zero_primes = BTreeSet::new();
        if let Some(fz) = obj.get("forced_zero_primes") {
            let arr = fz.as_array().ok_or_else(|| cfg("forced_zero_primes", "expected an array"))?;
            for (i, x) in arr.iter().enumerate() {
                forced_zero_primes
                    .insert(x.as_u64().ok_or_else(|| cfg(&format!("forced_zero_primes[{i}]"), "expected an integer"))?);
            }
        }
        let fam = FamilySpec { name, a, b, d_factors, k, forced_zero_primes };
        fam.validate().map_err(|e| cfg("$", &e.to_string()))?;
        Ok(fam)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "name": self.name,
            "A": self.a.0,
            "B": self.b.0,
            "D_factors": self.d_factors.iter().map(|f| f.0.clone()).collect::<Vec<_>>(),
            "k": match self.k {
                SieveExponent::Finite(k) => Value::from(k),
                SieveExponent::Infinite => Value::from("inf"),
            },
            "forced_zero_primes": self.forced_zero_primes.iter().copied().collect::<Vec<_>>(),
        })
    }
}

fn cfg(path: &str, msg: &str) -> Error {
    Error::Config { path: path.into(), msg: msg.into() }
}
