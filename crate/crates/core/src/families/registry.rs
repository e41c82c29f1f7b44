//! Built-in families and their closed-form moments.

use super::{FamilySpec, Poly, Side, SieveExponent};
use crate::error::{Error, Result};
use crate::primes::{is_prime, isqrt, legendre};
use num_bigint::BigInt;

const CM_B: [i64; 4] = [1, 2, 3, 6];

pub fn builtin_names() -> Vec<&'static str> {
    vec![
        "cm_b1_kappa1",
        "cm_b1_kappa2",
        "cm_b2_kappa1",
        "cm_b2_kappa2",
        "cm_b3_kappa1",
        "cm_b3_kappa2",
        "cm_b6_kappa1",
        "cm_b6_kappa2",
        "rank1_36t",
        "rank0_36t_b2",
        "noncm_3x12t",
    ]
}

fn forced() -> std::collections::BTreeSet<u64> {
    [2, 3].into_iter().collect()
}

/// y² = x³ + B(6T+1)^κ.
pub fn cm_family(b: i64, kappa: u32) -> FamilySpec {
    let bpoly = if kappa == 1 { vec![b, 6 * b] } else { vec![b, 12 * b, 36 * b] };
    FamilySpec {
        name: format!("cm_b{b}_kappa{kappa}"),
        a: Poly::constant(0),
        b: Poly::new(bpoly),
        d_factors: vec![Poly::new(vec![1, 6])],
        k: SieveExponent::Finite(6 / kappa),
        forced_zero_primes: forced(),
    }
}

/// y² = x³ − B(36T+6)(36T+5)x.
pub fn rank_family(b: i64) -> FamilySpec {
    FamilySpec {
        name: if b == 1 { "rank1_36t".into() } else { format!("rank0_36t_b{b}") },
        a: Poly::new(vec![-30 * b, -396 * b, -1296 * b]),
        b: Poly::constant(0),
        d_factors: vec![Poly::new(vec![6, 36]), Poly::new(vec![5, 36])],
        k: SieveExponent::Finite(3),
        forced_zero_primes: forced(),
    }
}

/// y² = x³ − 3x + 12T.
pub fn noncm_family() -> FamilySpec {
    FamilySpec {
        name: "noncm_3x12t".into(),
        a: Poly::constant(-3),
        b: Poly::new(vec![0, 12]),
        d_factors: vec![Poly::new(vec![-1, 6]), Poly::new(vec![1, 6])],
        k: SieveExponent::Infinite,
        forced_zero_primes: forced(),
    }
}

pub fn builtin(name: &str) -> Result<FamilySpec> {
    for b in CM_B {
        for kappa in [1, 2] {
            if name == format!("cm_b{b}_kappa{kappa}") {
                return Ok(cm_family(b, kappa));
            }
        }
    }
    match name {
        "rank1_36t" => Ok(rank_family(1)),
        "rank0_36t_b2" => Ok(rank_family(2)),
        "noncm_3x12t" => Ok(noncm_family()),
        _ => Err(Error::UnknownName(name.to_string())),
    }
}

/// a_E(p) for E: y² = x³ − x, from p = a² + b² with a odd, b even and
/// a + b ≡ 1 mod 4, giving a_E(p) = 2a; zero for p ≡ 3 mod 4.
pub fn elliptic_a_e_y2_x3_minus_x(p: u64) -> Result<i64> {
    if p < 3 || !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not an odd prime")));
    }
    if p % 4 == 3 {
        return Ok(0);
    }
    let (a, b) = two_squares(p)?;
    let (a, b) = if a % 2 == 1 { (a as i64, b as i64) } else { (b as i64, a as i64) };
    for x in [a, -a] {
        if (x + b).rem_euclid(4) == 1 || (x - b).rem_euclid(4) == 1 {
            return Ok(2 * x);
        }
    }
    Err(Error::Consistency(format!("no normalized decomposition of {p}")))
}

/// p = a² + b² for p ≡ 1 mod 4 by Cornacchia's algorithm.
fn two_squares(p: u64) -> Result<(u64, u64)> {
    use crate::primes::pow_mod;
    let c = (2..p)
        .find(|&c| legendre(c as i64, p) == -1)
        .ok_or_else(|| Error::Consistency(format!("no non-residue mod {p}")))?;
    let mut r0 = p;
    let mut r1 = pow_mod(c, (p - 1) / 4, p);
    let bound = isqrt(p);
    while r1 > bound {
        let t = r0 % r1;
        r0 = r1;
        r1 = t;
    }
    let rest = p - r1 * r1;
    let b = isqrt(rest);
    if b * b != rest {
        return Err(Error::Consistency(format!("{p} ≡ 1 mod 4 is not a sum of two squares")));
    }
    Ok((r1, b))
}

#[derive(Debug, Clone, Copy)]
enum Known {
    Cm,
    Rank(i64),
    NonCm,
}

fn identify(fam: &FamilySpec) -> Result<Known> {
    let reg = builtin(&fam.name).map_err(|_| Error::Unsupported(format!("no closed forms for '{}'", fam.name)))?;
    if &reg != fam {
        return Err(Error::Unsupported(format!("'{}' differs from the built-in of that name", fam.name)));
    }
    Ok(if fam.name.starts_with("cm_") {
        Known::Cm
    } else if fam.name == "noncm_3x12t" {
        Known::NonCm
    } else if fam.name == "rank1_36t" {
        Known::Rank(1)
    } else {
        Known::Rank(2)
    })
}

/// Which version of the moment lemmas to evaluate.
///
/// `Printed` is the lemma text as stated. `Verified` differs in three
/// places, each confirmed against the point-count definition:
/// * y² = x³ − B(36T+6)(36T+5)x, r = 1: −2p·q where q = ±1 when
///   B^{(p−1)/4} ≡ ±1 mod p and q = 0 otherwise (printed: −2p(B/p)).
/// * same family, r = 2: 2p(p−1) − a_{E_B}(p)² with E_B: y² = x³ − Bx
///   (printed for B = 1: 2p(p−3) − a_E(p)²; nothing printed for B = 2).
/// * y² = x³ − 3x + 12T, r = 1: −((3/p) + (−3/p)) (printed without the
///   minus sign).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaVariant {
    Printed,
    Verified,
}

/// Closed-form 𝒜_r(p) (good side) or 𝒜'_r(p) (bad side) for the
/// built-ins, as printed in the moment lemmas.
pub fn closed_form_moment(fam: &FamilySpec, p: u64, r: u32, side: Side) -> Result<BigInt> {
    closed_form_moment_variant(fam, p, r, side, LemmaVariant::Printed)
}

/// Good side: r ≤ 2. Bad side: every m. At p ∈ {2, 3} every parameter is
/// bad and every trace vanishes.
pub fn closed_form_moment_variant(
    fam: &FamilySpec,
    p: u64,
    r: u32,
    side: Side,
    variant: LemmaVariant,
) -> Result<BigInt> {
    ClosedForms::new(fam, variant)?.moment(p, r, side).map(BigInt::from)
}

/// Closed-form moments of one built-in, identified once.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForms {
    known: Known,
    variant: LemmaVariant,
}

impl ClosedForms {
    pub fn new(fam: &FamilySpec, variant: LemmaVariant) -> Result<Self> {
        Ok(ClosedForms { known: identify(fam)?, variant })
    }

    pub fn moment(&self, p: u64, r: u32, side: Side) -> Result<i64> {
        if !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        self.moment_at_prime(p, r, side)
    }

    /// As [`ClosedForms::moment`] without the primality check; `p` must be
    /// prime.
    pub fn moment_at_prime(&self, p: u64, r: u32, side: Side) -> Result<i64> {
        let pi = p as i64;
        if p <= 3 {
            return Ok(match (side, r) {
                (Side::Bad, 0) => pi,
                _ => 0,
            });
        }
        let printed = self.variant == LemmaVariant::Printed;
        Ok(match (self.known, side) {
            (Known::Cm, Side::Bad) => i64::from(r == 0),
            (Known::Rank(_), Side::Bad) => {
                if r == 0 {
                    2
                } else {
                    0
                }
            }
            (Known::NonCm, Side::Bad) => {
                let (l3, lm3) = (legendre(3, p) as i64, legendre(-3, p) as i64);
                l3.pow(r) + lm3.pow(r)
            }
            (_, Side::Good) if r > 2 => {
                return Err(Error::Unsupported(format!("no closed form for r = {r}")));
            }
            (Known::Cm, Side::Good) => match r {
                0 => pi - 1,
                1 => 0,
                _ => {
                    if p % 3 == 1 {
                        2 * pi * pi - 2 * pi
                    } else {
                        0
                    }
                }
            },
            (Known::Rank(b), Side::Good) => match r {
                0 => pi - 2,
                _ if p % 4 == 3 => 0,
                1 if printed => -2 * pi * legendre(b, p) as i64,
                1 => -2 * pi * quartic_sign(b, p),
                _ if printed && b != 1 => {
                    return Err(Error::Unsupported("no printed second-moment lemma for B = 2".into()));
                }
                _ if printed => {
                    let ae = elliptic_a_e_y2_x3_minus_x(p)?;
                    2 * pi * (pi - 3) - ae * ae
                }
                _ => {
                    let ae = elliptic_a_e_y2_x3_minus_x(p)?;
                    2 * pi * (pi - 1) - twisted_square(ae, b, p)
                }
            },
            (Known::NonCm, Side::Good) => {
                let (l3, lm3) = (legendre(3, p) as i64, legendre(-3, p) as i64);
                match r {
                    0 => pi - 2,
                    1 if printed => l3 + lm3,
                    1 => -(l3 + lm3),
                    _ => pi * pi - 2 * pi - 2 - pi * lm3,
                }
            }
        })
    }
}

/// a_{E_B}(p)² for y² = x³ − Bx and p ≡ 1 mod 4, from a_E(p) of
/// y² = x³ − x: writing p = a² + c² with a_E = 2a, the value is 4a² when
/// B is a square mod p and 4c² otherwise.
fn twisted_square(ae: i64, b: i64, p: u64) -> i64 {
    if legendre(b, p) == 1 {
        ae * ae
    } else {
        4 * p as i64 - ae * ae
    }
}

/// ±1 when B^{(p−1)/4} ≡ ±1 mod p, else 0; p ≡ 1 mod 4.
fn quartic_sign(b: i64, p: u64) -> i64 {
    let bb = b.rem_euclid(p as i64) as u64;
    let x = crate::primes::pow_mod(bb, (p - 1) / 4, p);
    if x == 1 {
        1
    } else if x == p - 1 {
        -1
    } else {
        0
    }
}
