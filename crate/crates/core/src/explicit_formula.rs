//! Test functions, the conductor term, the five prime-sum pieces of the
//! family explicit formula, and random-matrix 1-level densities.

use crate::constants::{density_model, family_records, record_from_closed_forms, Piece, PrimeRecord, PIECE_NAMES};
use crate::error::{Error, Result};
use crate::families::{builtin, ClosedForms, FamilySpec, LemmaVariant, SieveContext};
use crate::numerics::{digamma, ordered_sums, NeumaierSum};
use crate::primes::{first_n_primes, for_each_prime_segment};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// φ̂(u) = (1 − |u|/σ)₊, φ(x) = σ·sinc²(πσx).
    Fejer,
    /// φ̂(u) = (e^{−4(u/σ)²} − e^{−4})₊.
    GaussianTruncated,
    /// C^∞ smoothed indicator: φ̂ = 1 on |u| ≤ σ/2, then the smooth step
    /// e^{−1/(1−s)}/(e^{−1/(1−s)} + e^{−1/s}) with s = 2|u|/σ − 1.
    IndicatorSmooth,
}

/// An even φ with φ̂ supported in [−σ, σ].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TestFunctionPair {
    pub name: String,
    pub kind: PairKind,
    pub sigma: f64,
    pub phi0: f64,
    pub phihat0: f64,
}

const QUAD_PANELS: usize = 4000;

impl TestFunctionPair {
    pub fn new(kind: PairKind, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Domain(format!("support radius must be positive, got {sigma}")));
        }
        let tag = match kind {
            PairKind::Fejer => "fejer",
            PairKind::GaussianTruncated => "gaussian",
            PairKind::IndicatorSmooth => "smooth",
        };
        let mut pair = TestFunctionPair { name: format!("{tag}:{sigma}"), kind, sigma, phi0: 0.0, phihat0: 0.0 };
        pair.phihat0 = pair.phihat(0.0);
        pair.phi0 = pair.phi(0.0);
        Ok(pair)
    }

    pub fn fejer(sigma: f64) -> Result<Self> {
        Self::new(PairKind::Fejer, sigma)
    }

    /// Parses `name:sigma` with name one of fejer, gaussian, smooth (long
    /// forms fejer_sigma, gaussian_truncated, indicator_smooth also accepted).
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, s) = spec
            .split_once(':')
            .or_else(|| spec.strip_suffix(')').and_then(|r| r.split_once('(')))
            .ok_or_else(|| Error::UnknownName(spec.to_string()))?;
        let kind = match name {
            "fejer" | "fejer_sigma" => PairKind::Fejer,
            "gaussian" | "gaussian_truncated" => PairKind::GaussianTruncated,
            "smooth" | "indicator_smooth" => PairKind::IndicatorSmooth,
            _ => return Err(Error::UnknownName(name.to_string())),
        };
        let sigma: f64 = s.trim().parse().map_err(|_| Error::Domain(format!("cannot parse support radius '{s}'")))?;
        Self::new(kind, sigma)
    }

    #[inline]
    pub fn phihat(&self, u: f64) -> f64 {
        let v = u.abs() / self.sigma;
        if v >= 1.0 {
            return 0.0;
        }
        match self.kind {
            PairKind::Fejer => 1.0 - v,
            PairKind::GaussianTruncated => (-4.0 * v * v).exp() - (-4.0f64).exp(),
            PairKind::IndicatorSmooth => {
                if v <= 0.5 {
                    return 1.0;
                }
                let s = 2.0 * v - 1.0;
                let a = (-1.0 / (1.0 - s)).exp();
                let b = (-1.0 / s).exp();
                a / (a + b)
            }
        }
    }

    /// φ(x): closed form for Fejér, quadrature of 2∫₀^σ φ̂(u)cos(2πux)du
    /// otherwise.
    pub fn phi(&self, x: f64) -> f64 {
        match self.kind {
            PairKind::Fejer => {
                let y = PI * self.sigma * x;
                if y.abs() < 1e-8 {
                    self.sigma * (1.0 - y * y / 3.0)
                } else {
                    self.sigma * (y.sin() / y).powi(2)
                }
            }
            _ => self.phi_quadrature(x, QUAD_PANELS),
        }
    }

    /// Composite Gauss–Legendre (5 nodes) over [0, σ].
    pub fn phi_quadrature(&self, x: f64, panels: usize) -> f64 {
        const NODES: [f64; 5] =
            [0.0, -0.538_469_310_105_683, 0.538_469_310_105_683, -0.906_179_845_938_664, 0.906_179_845_938_664];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
            0.236_926_885_056_189,
        ];
        let h = self.sigma / panels as f64;
        let mut acc = crate::numerics::NeumaierSum::new();
        for i in 0..panels {
            let mid = (i as f64 + 0.5) * h;
            for (n, w) in NODES.iter().zip(WEIGHTS) {
                let u = mid + 0.5 * h * n;
                acc.add(w * 0.5 * h * self.phihat(u) * (2.0 * PI * u * x).cos());
            }
        }
        2.0 * acc.value()
    }
}

/// A(k) = ψ(k/4) + ψ((k+2)/4) − 2 log π.
pub fn a_of_k(k: u32) -> Result<f64> {
    if k < 2 || k % 2 == 1 {
        return Err(Error::Domain(format!("weight must be even and >= 2, got {k}")));
    }
    Ok(digamma(k as f64 / 4.0) + digamma((k as f64 + 2.0) / 4.0) - 2.0 * PI.ln())
}

/// φ̂(0)(log N + A(k))/log R.
pub fn conductor_term(k: u32, level: f64, log_r: f64, phi: &TestFunctionPair) -> Result<f64> {
    Ok(phi.phihat0 * (level.ln() + a_of_k(k)?) / log_r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Symmetry {
    #[serde(rename = "SO_even")]
    SoEven,
    #[serde(rename = "SO_odd")]
    SoOdd,
    O,
    #[serde(rename = "USp")]
    USp,
    U,
}

impl std::str::FromStr for Symmetry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "SO_even" | "SO(even)" => Symmetry::SoEven,
            "SO_odd" | "SO(odd)" => Symmetry::SoOdd,
            "O" => Symmetry::O,
            "USp" => Symmetry::USp,
            "U" => Symmetry::U,
            _ => return Err(Error::UnknownName(s.into())),
        })
    }
}

/// 1-level density of the scaling limit for supp φ̂ ⊂ (−1, 1). The
/// second field is a warning when σ ≥ 1, where the formulas change.
pub fn rmt_prediction(sym: Symmetry, phi: &TestFunctionPair) -> (f64, Option<String>) {
    let warn =
        (phi.sigma >= 1.0).then(|| format!("support radius {} >= 1: formulas valid only inside (-1, 1)", phi.sigma));
    let v = match sym {
        Symmetry::U => phi.phihat0,
        Symmetry::USp => phi.phihat0 - 0.5 * phi.phi0,
        Symmetry::O | Symmetry::SoEven | Symmetry::SoOdd => phi.phihat0 + 0.5 * phi.phi0,
    };
    (v, warn)
}

/// Where the per-prime moments come from.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentSource {
    /// Point counts, then verified closed forms (built-ins only).
    Family(FamilySpec),
    /// Sato-Tate idealization of a cusp-form family: 𝒜₀ = p, 𝒜₁ = 0,
    /// 𝒜₂ = p², no bad fibres, Ã(p) = (2p+1)/p^{3/2}.
    CuspModel,
}

impl MomentSource {
    pub fn name(&self) -> String {
        match self {
            MomentSource::Family(f) => f.name.clone(),
            MomentSource::CuspModel => "cusp_model".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SOptions {
    /// Primes with point counts (and hence Ã); `None` uses the family's
    /// default truncation.
    pub counted_primes: Option<usize>,
}

/// The five pieces of S at one scale R.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SDecomposition {
    pub family: String,
    pub phi: String,
    pub sigma: f64,
    pub log_r: f64,
    pub prime_limit: u64,
    /// Largest prime with point counts; Ã vanishes beyond it.
    pub counted_limit: u64,
    pub pieces: Vec<Piece>,
    pub total: f64,
    /// φ(0) times the family's density-model main term.
    pub main_term_estimate: Option<f64>,
    /// (total − main)·log R/(2φ̂(0)).
    pub lower_order_coefficient: Option<f64>,
    /// The same normalization applied piece by piece, in piece order.
    pub piece_coefficients: Option<Vec<f64>>,
    pub model: bool,
}

/// Smallest prime limit for which every φ̂-weighted sum is complete: the
/// 𝒜₁ line carries φ̂(log p/log R), so p < R^σ.
pub fn required_prime_limit(phi: &TestFunctionPair, log_r: f64) -> Result<u64> {
    let x = (phi.sigma * log_r).exp();
    if !x.is_finite() || x > 1e15 {
        return Err(Error::Resource(format!("R^σ = e^{} is beyond reach", phi.sigma * log_r)));
    }
    Ok(x.floor() as u64)
}

const BAD_TERM_TOL: f64 = 1e-16;

struct Weights<'a> {
    phi: &'a TestFunctionPair,
    log_r: f64,
}

impl Weights<'_> {
    /// Per-prime contributions: (main, sieve) for each piece in order.
    fn lanes(&self, r: &PrimeRecord, acc: &mut [f64]) {
        let p = r.p as f64;
        let lp = p.ln();
        let l = self.log_r;
        let x1 = lp / l;
        let h0 = self.phi.phihat0;
        let u1 = self.phi.phihat(x1);
        let u2 = self.phi.phihat(2.0 * x1);
        let p1 = p + 1.0;
        let hs = r.h_sieve;

        let mut bad = NeumaierSum::new();
        if r.bad_plus + r.bad_minus > 0 {
            let mut pw = p;
            let root = p.sqrt();
            let mut bound = 1.0;
            for m in 1..=200u32 {
                pw *= p;
                bad.add(r.bad_moment(m) / pw);
                bound *= 2.0 / root;
                if bound < BAD_TERM_TOL {
                    break;
                }
            }
        }
        let s_ap = -2.0 * h0 * bad.value() * x1;
        let s0 = -2.0 * h0 * 2.0 * r.a0 * x1 / (p * p * p1) + 2.0 * 2.0 * r.a0 * x1 / (p * p) * u2;
        let s1 = -2.0 * r.a1 / (p * p) * x1 * u1 + 2.0 * h0 * r.a1 * (3.0 * p + 1.0) / (p * p * p1 * p1) * x1;
        let s2 = -2.0 * r.a2 * x1 / (p * p * p) * u2
            + 2.0 * h0 * r.a2 * (4.0 * p * p + 3.0 * p + 1.0) * x1 / (p.powi(3) * p1.powi(3));
        let st = match r.a_tilde {
            Some(at) => -2.0 * h0 * at * p.sqrt() * (p - 1.0) * x1 / p1.powi(3),
            None => 0.0,
        };
        for (i, v) in [s_ap, s0, s1, s2, st].into_iter().enumerate() {
            acc[2 * i] = v;
            acc[2 * i + 1] = v * hs;
        }
    }
}

fn model_record(p: u64) -> PrimeRecord {
    let pf = p as f64;
    PrimeRecord {
        p,
        a0: pf,
        a1: 0.0,
        a2: pf * pf,
        bad_plus: 0,
        bad_minus: 0,
        a_tilde: Some((2.0 * pf + 1.0) / pf.powf(1.5)),
        h_sieve: 0.0,
    }
}

/// Evaluates S_A', S_0, S_1, S_2, S_Ã term by term at R = e^{log_r} over
/// all primes up to `prime_limit`.
pub fn evaluate_s(
    source: &MomentSource,
    phi: &TestFunctionPair,
    log_r: f64,
    prime_limit: u64,
    opts: &SOptions,
) -> Result<SDecomposition> {
    Ok(evaluate_s_multi(source, phi, &[log_r], prime_limit, opts)?.remove(0))
}

/// [`evaluate_s`] at several scales in one pass over the primes; every
/// scale sums over the same primes up to `prime_limit`.
pub fn evaluate_s_multi(
    source: &MomentSource,
    phi: &TestFunctionPair,
    log_rs: &[f64],
    prime_limit: u64,
    opts: &SOptions,
) -> Result<Vec<SDecomposition>> {
    if log_rs.is_empty() {
        return Err(Error::Domain("no log R given".into()));
    }
    for &log_r in log_rs {
        if !(log_r.is_finite() && log_r > 0.0) {
            return Err(Error::Domain(format!("log R must be positive, got {log_r}")));
        }
        let required = required_prime_limit(phi, log_r)?;
        if prime_limit < required {
            return Err(Error::IncompleteSum { required, available: prime_limit });
        }
    }
    let ws: Vec<Weights> = log_rs.iter().map(|&log_r| Weights { phi, log_r }).collect();
    let width = 10 * ws.len();
    let mut lanes: Vec<NeumaierSum> = (0..width).map(|_| NeumaierSum::new()).collect();
    let mut fold = |records: &[PrimeRecord]| {
        let s = ordered_sums(records, width, |r, acc| {
            for (w, chunk) in ws.iter().zip(acc.chunks_mut(10)) {
                w.lanes(r, chunk);
            }
        });
        for (l, v) in lanes.iter_mut().zip(s) {
            l.add(v);
        }
    };
    let (counted_limit, main) = match source {
        MomentSource::CuspModel => {
            for_each_prime_segment(2, prime_limit, |seg| {
                let recs: Vec<PrimeRecord> = seg.iter().map(|&p| model_record(p)).collect();
                fold(&recs);
            });
            (prime_limit, Some([0.0, 1.0, 0.0, -0.5, 0.0]))
        }
        MomentSource::Family(fam) => {
            let n = opts.counted_primes.unwrap_or_else(|| crate::constants::default_family_primes(fam));
            let table = first_n_primes(n)?;
            let counted: Vec<u64> = table.primes().iter().copied().take_while(|&p| p <= prime_limit).collect();
            let last = counted.last().copied().unwrap_or(1);
            fold(&family_records(fam, &counted, None)?);
            if prime_limit > table.limit() {
                let known = builtin(&fam.name).ok().filter(|b| b == fam);
                if known.is_none() {
                    return Err(Error::Dependency(format!(
                        "moments of '{}' beyond p = {last} need closed forms, which exist only for built-in families",
                        fam.name
                    )));
                }
                let cf = ClosedForms::new(fam, LemmaVariant::Verified)?;
                let sieve = SieveContext::new(fam);
                let mut err = None;
                for_each_prime_segment(last + 1, prime_limit, |seg| {
                    if err.is_some() {
                        return;
                    }
                    match seg.par_iter().map(|&p| record_from_closed_forms(&cf, &sieve, p)).collect::<Result<Vec<_>>>()
                    {
                        Ok(recs) => fold(&recs),
                        Err(e) => err = Some(e),
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
            }
            (last, density_model(fam).ok().map(|m| m.piece_main_terms()))
        }
    };
    let v: Vec<f64> = lanes.iter().map(NeumaierSum::value).collect();
    Ok(log_rs
        .iter()
        .zip(v.chunks(10))
        .map(|(&log_r, v)| {
            let pieces: Vec<Piece> = PIECE_NAMES
                .iter()
                .enumerate()
                .map(|(i, n)| Piece { name: n.to_string(), main: v[2 * i], sieve: v[2 * i + 1] })
                .collect();
            let total = pieces.iter().map(Piece::total).sum::<f64>();
            let scale = log_r / (2.0 * phi.phihat0);
            let main_term_estimate = main.map(|m| m.iter().sum::<f64>() * phi.phi0);
            let piece_coefficients =
                main.map(|m| pieces.iter().zip(m).map(|(p, mi)| (p.total() - mi * phi.phi0) * scale).collect());
            SDecomposition {
                family: source.name(),
                phi: phi.name.clone(),
                sigma: phi.sigma,
                log_r,
                prime_limit,
                counted_limit,
                pieces,
                total,
                main_term_estimate,
                lower_order_coefficient: main_term_estimate.map(|m| (total - m) * scale),
                piece_coefficients,
                model: matches!(source, MomentSource::CuspModel),
            }
        })
        .collect())
}

/// Per-prime contributions of the five pieces (main and sieve lanes
/// interleaved), for tests and diagnostics.
pub fn s_lanes(record: &PrimeRecord, phi: &TestFunctionPair, log_r: f64) -> [f64; 10] {
    let mut acc = [0.0; 10];
    Weights { phi, log_r }.lanes(record, &mut acc);
    acc
}

/// M₃(p) = Σ_{m≥3} (α^m + β^m)/p^{m/2} for Satake parameters with
/// α + β = λ, αβ = 1, in closed form.
pub fn m3_closed(p: u64, lambda: f64) -> f64 {
    let pf = p as f64;
    let s = pf.sqrt();
    let l = lambda;
    (l * l * l * s - l * l - 3.0 * l * s + 2.0) / (pf * (pf + 1.0 - l * s))
}

/// M₃(p) summed directly over m = 3..terms+2 from the power-sum recurrence
/// s_m = λ s_{m−1} − s_{m−2}.
pub fn m3_direct(p: u64, lambda: f64, terms: u32) -> f64 {
    let s = (p as f64).sqrt();
    let (mut prev, mut cur) = (2.0, lambda);
    let mut scale = 1.0 / s;
    let mut acc = NeumaierSum::new();
    for m in 2..terms + 3 {
        let next = lambda * cur - prev;
        prev = cur;
        cur = next;
        scale /= s;
        if m >= 3 {
            acc.add(cur * scale);
        }
    }
    acc.value()
}

/// M₃(p) from its expansion in powers of λ: 2/(p(p+1))
/// − √p(3p+1)λ/(p(p+1)²) − (4p²+3p+1)λ²/(p(p+1)³) plus
/// Σ_{r=3}^{r_max} p^{r/2}(p−1)λ^r/(p+1)^{r+1}.
pub fn m3_expanded(p: u64, lambda: f64, r_max: u32) -> f64 {
    let pf = p as f64;
    let p1 = pf + 1.0;
    let mut acc = NeumaierSum::new();
    acc.add(2.0 / (pf * p1));
    acc.add(-pf.sqrt() * (3.0 * pf + 1.0) * lambda / (pf * p1 * p1));
    acc.add(-(4.0 * pf * pf + 3.0 * pf + 1.0) * lambda * lambda / (pf * p1.powi(3)));
    let ratio = pf.sqrt() * lambda / p1;
    let mut term = (pf - 1.0) / p1 * ratio.powi(2);
    for _ in 3..=r_max {
        term *= ratio;
        acc.add(term);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_record(p: u64) -> PrimeRecord {
        PrimeRecord { p, a0: 0.0, a1: 0.0, a2: 0.0, bad_plus: 0, bad_minus: 0, a_tilde: Some(0.0), h_sieve: 0.3 }
    }

    #[test]
    fn fejer_examples() {
        let f = TestFunctionPair::fejer(1.0).unwrap();
        assert_eq!(f.phihat0, 1.0);
        assert!((f.phi0 - 1.0).abs() < 1e-15);
        assert_eq!(f.phihat(1.5), 0.0);
        assert!(TestFunctionPair::fejer(0.0).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!(TestFunctionPair::parse("fejer_sigma(0.5)").unwrap().kind, PairKind::Fejer);
        assert_eq!(TestFunctionPair::parse("smooth:0.2").unwrap().sigma, 0.2);
        assert!(matches!(TestFunctionPair::parse("boxcar:1"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn pairs_are_even_and_supported() {
        for kind in [PairKind::Fejer, PairKind::GaussianTruncated, PairKind::IndicatorSmooth] {
            let f = TestFunctionPair::new(kind, 0.8).unwrap();
            for i in 0..40 {
                let u = -1.0 + i as f64 * 0.05;
                assert_eq!(f.phihat(u), f.phihat(-u));
                if u.abs() >= 0.8 {
                    assert_eq!(f.phihat(u), 0.0);
                }
            }
            assert!((f.phi(0.7) - f.phi(-0.7)).abs() < 1e-14);
        }
    }

    /// Trapezoid rule on a fine grid as an independent inverse transform.
    fn phi_trapezoid(f: &TestFunctionPair, x: f64) -> f64 {
        let n = 200_000;
        let h = f.sigma / n as f64;
        let mut acc = NeumaierSum::new();
        for i in 0..=n {
            let u = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc.add(w * f.phihat(u) * (2.0 * PI * u * x).cos());
        }
        2.0 * h * acc.value()
    }

    #[test]
    fn fourier_pair_consistency() {
        for kind in [PairKind::Fejer, PairKind::GaussianTruncated, PairKind::IndicatorSmooth] {
            let f = TestFunctionPair::new(kind, 0.9).unwrap();
            for i in 0..20 {
                let x = i as f64 * 0.37;
                let a = f.phi(x);
                let b = phi_trapezoid(&f, x);
                let scale = a.abs().max(1e-3 * f.phi0);
                assert!((a - b).abs() / scale < 1e-6, "{kind:?} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn conductor_constant_at_weight_two() {
        let g = crate::numerics::literals::euler_gamma();
        let want = -2.0 * g - 2.0 * 2f64.ln() - 2.0 * PI.ln();
        assert!((a_of_k(2).unwrap() - want).abs() < 1e-12);
        assert!(matches!(a_of_k(3), Err(Error::Domain(_))));
        let diff = a_of_k(4).unwrap() - a_of_k(2).unwrap();
        let by_series = (digamma(1.0) - digamma(0.5)) + (digamma(1.5) - digamma(1.0));
        assert!((diff - by_series).abs() < 1e-12);
        let f = TestFunctionPair::fejer(0.5).unwrap();
        let r = 1e6f64;
        let v = conductor_term(2, r / a_of_k(2).unwrap().exp(), r.ln(), &f).unwrap();
        assert!((v - f.phihat0).abs() < 1e-12);
    }

    #[test]
    fn rmt_table() {
        let f = TestFunctionPair::fejer(0.9).unwrap();
        let u = rmt_prediction(Symmetry::U, &f).0;
        assert_eq!(u, f.phihat0);
        assert_eq!(rmt_prediction(Symmetry::USp, &f).0, f.phihat0 - 0.5 * f.phi0);
        assert_eq!(rmt_prediction(Symmetry::O, &f).0, rmt_prediction(Symmetry::SoEven, &f).0);
        let diff = rmt_prediction(Symmetry::O, &f).0 - u;
        assert!((diff - 0.5 * f.phi0).abs() < 1e-15);
        assert!(rmt_prediction(Symmetry::O, &f).1.is_none());
        assert!(rmt_prediction(Symmetry::O, &TestFunctionPair::fejer(1.5).unwrap()).1.is_some());
    }

    #[test]
    fn zero_moments_give_zero_pieces() {
        let f = TestFunctionPair::fejer(0.5).unwrap();
        for p in [2, 5, 101, 7919] {
            assert!(s_lanes(&zero_record(p), &f, 30.0).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn cm_first_moment_piece_vanishes() {
        let fam = builtin("cm_b1_kappa2").unwrap();
        let f = TestFunctionPair::new(PairKind::IndicatorSmooth, 0.5).unwrap();
        for l in [10.0, 16.0] {
            let lim = required_prime_limit(&f, l).unwrap();
            let s = evaluate_s(&MomentSource::Family(fam.clone()), &f, l, lim, &SOptions::default()).unwrap();
            let s1 = &s.pieces[2];
            assert_eq!((s1.name.as_str(), s1.main, s1.sieve), ("S_1", 0.0, 0.0));
            let sum: f64 = s.pieces.iter().map(Piece::total).sum();
            assert_eq!(s.total, sum);
        }
    }

    #[test]
    fn short_prime_limit_is_rejected() {
        let f = TestFunctionPair::fejer(0.5).unwrap();
        let err = evaluate_s(&MomentSource::CuspModel, &f, 20.0, 1000, &SOptions::default()).unwrap_err();
        assert_eq!(err, Error::IncompleteSum { required: 22026, available: 1000 });
    }

    #[test]
    fn custom_family_needs_point_counts() {
        let mut fam = builtin("cm_b1_kappa2").unwrap();
        fam.name = "custom".into();
        let f = TestFunctionPair::fejer(0.5).unwrap();
        let opts = SOptions { counted_primes: Some(10) };
        let err = evaluate_s(&MomentSource::Family(fam.clone()), &f, 12.0, 500, &opts).unwrap_err();
        assert!(matches!(err, Error::Dependency(_)));
        let ok =
            evaluate_s(&MomentSource::Family(fam), &f, 12.0, 500, &SOptions { counted_primes: Some(200) }).unwrap();
        assert!(ok.main_term_estimate.is_none());
    }

    #[test]
    fn bad_fibres_enter_term_by_term() {
        let f = TestFunctionPair::fejer(0.5).unwrap();
        let mut r = zero_record(13);
        r.bad_plus = 1;
        r.bad_minus = 1;
        let lanes = s_lanes(&r, &f, 20.0);
        let x1 = 13f64.ln() / 20.0;
        let want = -2.0 * r.bad_geometric() * x1;
        assert!((lanes[0] - want).abs() < 1e-16);
        assert!((lanes[1] - 0.3 * want).abs() < 1e-16);
    }

    #[test]
    fn m3_forms_agree() {
        for (p, l) in [(3u64, 1.9), (5, -2.0), (101, 0.3), (7919, -1.2)] {
            let c = m3_closed(p, l);
            assert!((c - m3_direct(p, l, 60)).abs() < 1e-12);
            assert!((c - m3_expanded(p, l, 200)).abs() < 1e-12);
        }
    }
}
