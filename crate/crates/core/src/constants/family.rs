//! Per-prime family data and the coefficient sums built from it.

use crate::error::{Error, Result};
use crate::families::traces::bad_mask;
use crate::families::{h_factor, traces, ClosedForms, FamilySpec, LemmaVariant, Side, SieveContext};
use crate::numerics::ordered_sums;
use crate::primes::{for_each_prime_segment, Class};
use rayon::prelude::*;
use serde::Serialize;

/// Everything the lower-order sums need from one prime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrimeRecord {
    pub p: u64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    /// Σ_{m≥1} 𝒜'_m(p)/p^{m+1}.
    /// Bad t with a_t(p) = +1 and −1 (multiplicative reduction).
    pub bad_plus: u32,
    pub bad_minus: u32,
    /// Ã(p); absent beyond the point-count range.
    pub a_tilde: Option<f64>,
    pub h_sieve: f64,
}

/// Record from the point counts of every t mod p.
pub fn record_from_counts(fam: &FamilySpec, p: u64) -> Result<PrimeRecord> {
    let tr = traces(fam, p)?;
    let mask = bad_mask(fam, p);
    let (mut a0, mut a1, mut a2) = (0i128, 0i128, 0i128);
    let (mut plus, mut minus) = (0u32, 0u32);
    for (&a, &is_bad) in tr.iter().zip(&mask) {
        if is_bad {
            match a {
                0 => {}
                1 => plus += 1,
                -1 => minus += 1,
                _ => return Err(Error::Consistency(format!("a_t({p}) = {a} at a singular fibre"))),
            }
        } else {
            let a = a as i128;
            a0 += 1;
            a1 += a;
            a2 += a * a;
        }
    }
    let a_tilde = if p >= 5 { crate::families::a_tilde_from_traces(p, &tr, &mask) } else { 0.0 };
    Ok(PrimeRecord {
        p,
        a0: a0 as f64,
        a1: a1 as f64,
        a2: a2 as f64,
        bad_plus: plus,
        bad_minus: minus,
        a_tilde: Some(a_tilde),
        h_sieve: h_factor(fam, p)?.sieve,
    })
}

/// Record from the verified closed forms; Ã is left out.
pub fn record_from_closed_forms(cf: &ClosedForms, sieve: &SieveContext, p: u64) -> Result<PrimeRecord> {
    let m = |r| cf.moment_at_prime(p, r, Side::Good).map(|v| v as f64);
    let (m1, m2) = (cf.moment_at_prime(p, 1, Side::Bad)?, cf.moment_at_prime(p, 2, Side::Bad)?);
    if (m1 + m2) % 2 != 0 || m2 < m1.abs() {
        return Err(Error::Consistency(format!(
            "bad-side moments {m1}, {m2} at p = {p} are not from traces in {{0, ±1}}"
        )));
    }
    Ok(PrimeRecord {
        p,
        a0: m(0)?,
        a1: m(1)?,
        a2: m(2)?,
        bad_plus: ((m2 + m1) / 2) as u32,
        bad_minus: ((m2 - m1) / 2) as u32,
        a_tilde: None,
        h_sieve: sieve.h_factor_at_prime(p)?.sieve,
    })
}

/// Records for `counted` by point counts, then for every further prime up
/// to `closed_limit` by closed forms (built-ins only).
pub fn family_records(fam: &FamilySpec, counted: &[u64], closed_limit: Option<u64>) -> Result<Vec<PrimeRecord>> {
    let mut out: Vec<PrimeRecord> = counted.par_iter().map(|&p| record_from_counts(fam, p)).collect::<Result<_>>()?;
    if let Some(limit) = closed_limit {
        let cf = ClosedForms::new(fam, LemmaVariant::Verified)?;
        let sieve = SieveContext::new(fam);
        let start = counted.last().map_or(2, |&p| p + 1);
        if limit >= start {
            let mut err = None;
            for_each_prime_segment(start, limit, |seg| {
                if err.is_some() {
                    return;
                }
                match seg.par_iter().map(|&p| record_from_closed_forms(&cf, &sieve, p)).collect::<Result<Vec<_>>>() {
                    Ok(v) => out.extend(v),
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(out)
}

/// Main and sieve parts of one family constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitValue {
    pub main: f64,
    pub sieve: f64,
}

impl PrimeRecord {
    /// 𝒜'_m(p).
    pub fn bad_moment(&self, m: u32) -> f64 {
        let minus = if m.is_multiple_of(2) { self.bad_minus as f64 } else { -(self.bad_minus as f64) };
        self.bad_plus as f64 + minus
    }

    /// Σ_{m ≥ 1} 𝒜'_m(p)/p^{m+1} = Σ_bad a/(p(p − a)).
    pub fn bad_geometric(&self) -> f64 {
        let p = self.p as f64;
        self.bad_plus as f64 / (p * (p - 1.0)) - self.bad_minus as f64 / (p * (p + 1.0))
    }
}

impl SplitValue {
    pub fn total(&self) -> f64 {
        self.main + self.sieve
    }
}

#[inline]
fn atilde_weight(p: u64) -> f64 {
    let pf = p as f64;
    pf.sqrt() * (pf - 1.0) * pf.ln() / (pf + 1.0).powi(3)
}

/// Σ_p Ã(p) H(p) p^{3/2}(p−1) log p/(p(p+1)³), split by H = 1 + H^sieve.
pub fn atilde_constant(records: &[PrimeRecord]) -> SplitValue {
    let s = ordered_sums(records, 2, |r, acc| {
        if let Some(at) = r.a_tilde {
            let w = at * atilde_weight(r.p);
            acc[0] = w;
            acc[1] = w * r.h_sieve;
        }
    });
    SplitValue { main: s[0], sieve: s[1] }
}

/// −Σ_p H^sieve log p [2𝒜₀/(p(p+1)) − 𝒜₂(p−1)/(p(p+1)³)]: the sieve
/// parts of the zeroth and second moment terms, sign-flipped.
pub fn sieve_012_constant(records: &[PrimeRecord]) -> f64 {
    ordered_sums(records, 1, |r, acc| {
        let p = r.p as f64;
        let lp = p.ln();
        acc[0] = -r.h_sieve * lp * (2.0 * r.a0 / (p * (p + 1.0)) - r.a2 * (p - 1.0) / (p * (p + 1.0).powi(3)));
    })[0]
}

/// Heuristic bound on the Ã tail beyond X: 8/√X · X/(X + 1 − 2√X).
pub fn atilde_tail_bound(x: f64) -> f64 {
    8.0 / x.sqrt() * x / (x + 1.0 - 2.0 * x.sqrt())
}

/// Shape of the first and second moments at large p, which decides the
/// non-convergent prime sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstMoment {
    /// 𝒜₁(p) = O(1).
    Bounded,
    /// 𝒜₁(p) = μ p on a residue class, O(1) elsewhere.
    Linear { mu: f64, class: Class },
    /// 𝒜₁(p) = p u(p) with u oscillating around mean zero.
    MeanZero,
}

/// 𝒜₂(p) = ρ p² + O(p) on `rho_class`, O(p) elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityModel {
    pub rho: f64,
    pub rho_class: Class,
    pub first: FirstMoment,
}

impl DensityModel {
    /// Coefficient of φ(0) in S.
    pub fn main_term(&self) -> f64 {
        let second = self.rho / (2.0 * self.rho_class.weight());
        let first = match self.first {
            FirstMoment::Linear { mu, class } => mu / class.weight(),
            _ => 0.0,
        };
        1.0 - second - first
    }

    /// Coefficient of φ(0) in each of S_A', S_0, S_1, S_2, S_Ã.
    pub fn piece_main_terms(&self) -> [f64; 5] {
        let first = match self.first {
            FirstMoment::Linear { mu, class } => -mu / class.weight(),
            _ => 0.0,
        };
        [0.0, 1.0, first, -self.rho / (2.0 * self.rho_class.weight()), 0.0]
    }

    /// u(p) with 𝒜₁ = p u + v.
    pub fn linear_part(&self, p: u64, a1: f64) -> f64 {
        match self.first {
            FirstMoment::Bounded => 0.0,
            FirstMoment::Linear { mu, class } => {
                if p >= 5 && class.contains(p) {
                    mu
                } else {
                    0.0
                }
            }
            FirstMoment::MeanZero => (a1 / p as f64).round(),
        }
    }

    pub fn rho_at(&self, p: u64) -> f64 {
        if self.rho_class.contains(p) {
            self.rho
        } else {
            0.0
        }
    }
}

/// Density models of the built-in families.
pub fn density_model(fam: &FamilySpec) -> Result<DensityModel> {
    let reg = crate::families::builtin(&fam.name).ok().filter(|b| b == fam);
    let name = reg.map(|b| b.name).ok_or_else(|| {
        Error::Unsupported(format!("no density model for '{}': lower-order sums need a built-in family", fam.name))
    })?;
    let m14 = Class::Residue { a: 1, b: 4 };
    Ok(if name.starts_with("cm_") {
        DensityModel { rho: 2.0, rho_class: Class::Residue { a: 1, b: 3 }, first: FirstMoment::Bounded }
    } else if name == "rank1_36t" {
        DensityModel { rho: 2.0, rho_class: m14, first: FirstMoment::Linear { mu: -2.0, class: m14 } }
    } else if name == "rank0_36t_b2" {
        DensityModel { rho: 2.0, rho_class: m14, first: FirstMoment::MeanZero }
    } else {
        DensityModel { rho: 1.0, rho_class: Class::All, first: FirstMoment::Bounded }
    })
}

/// γ constants of the prime classes that appear in density models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassGammas {
    pub all: f64,
    pub r13: f64,
    pub r14: f64,
}

impl ClassGammas {
    pub fn of(&self, c: Class) -> Result<f64> {
        match c {
            Class::All => Ok(self.all),
            Class::Residue { a: 1, b: 3 } => Ok(self.r13),
            Class::Residue { a: 1, b: 4 } => Ok(self.r14),
            other => Err(Error::Unsupported(format!("no PNT constant for {other:?}"))),
        }
    }
}

pub const PIECE_NAMES: [&str; 5] = ["S_A'", "S_0", "S_1", "S_2", "S_Atilde"];

/// Coefficient of 2φ̂(0)/log R contributed by one explicit-formula piece.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Piece {
    pub name: String,
    pub main: f64,
    pub sieve: f64,
}

impl Piece {
    pub fn total(&self) -> f64 {
        self.main + self.sieve
    }
}

/// Lower-order coefficients of the five pieces from per-prime data, with
/// every φ̂-weighted divergent sum replaced by its class PNT constant.
pub fn derived_pieces(records: &[PrimeRecord], model: &DensityModel, gammas: &ClassGammas) -> Result<Vec<Piece>> {
    let s = ordered_sums(records, 10, |r, acc| {
        let p = r.p as f64;
        let lp = p.ln();
        let p1 = p + 1.0;
        let hs = r.h_sieve;
        let u = model.linear_part(r.p, r.a1);
        let v = r.a1 - p * u;
        let w = r.a2 - p * p * model.rho_at(r.p);
        // S_A'
        let g = r.bad_geometric();
        acc[0] = -lp * g;
        acc[1] = -hs * lp * g;
        // S_0
        acc[2] = -2.0 * r.a0 * lp / (p * p * p1) - 2.0 * (p - r.a0) * lp / (p * p);
        acc[3] = hs * 2.0 * r.a0 * lp / (p * p1);
        // S_1
        let mut s1 = r.a1 * (3.0 * p + 1.0) * lp / (p * p * p1 * p1) - v * lp / (p * p);
        if model.first == FirstMoment::MeanZero {
            s1 -= u * lp / p;
        }
        acc[4] = s1;
        acc[5] = -hs * r.a1 * (p - 1.0) * lp / (p * p1 * p1);
        // S_2
        acc[6] = r.a2 * (4.0 * p * p + 3.0 * p + 1.0) * lp / (p.powi(3) * p1.powi(3)) - w * lp / p.powi(3);
        acc[7] = -hs * r.a2 * (p - 1.0) * lp / (p * p1.powi(3));
        // S_Ã
        if let Some(at) = r.a_tilde {
            let t = at * atilde_weight(r.p);
            acc[8] = -t;
            acc[9] = -hs * t;
        }
    });
    let mut main = [s[0], s[2] + 2.0 * gammas.all, s[4], s[6], s[8]];
    if let FirstMoment::Linear { mu, class } = model.first {
        main[2] -= mu * gammas.of(class)? / class.weight();
    }
    main[3] -= model.rho * gammas.of(model.rho_class)? / model.rho_class.weight();
    let sieve = [s[1], s[3], s[5], s[7], s[9]];
    Ok(PIECE_NAMES
        .iter()
        .zip(main.iter().zip(sieve))
        .map(|(n, (&m, s))| Piece { name: n.to_string(), main: m, sieve: s })
        .collect())
}
