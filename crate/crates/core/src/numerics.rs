//! Floating-point plumbing shared by every prime sum.
//!
//! All long sums go through [`NeumaierSum`], and parallel sums are split
//! into fixed-size chunks whose partial results are folded in ascending
//! order. The thread count therefore never changes a single bit of output.

use rayon::prelude::*;

/// Items per chunk in [`ordered_sum`] and [`ordered_sums`].
pub const CHUNK: usize = 8192;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum into this one.
    #[inline]
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of `f(item)` over `items`, deterministic under any
/// rayon pool size.
pub fn ordered_sum<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    let parts: Vec<NeumaierSum> = items.par_chunks(CHUNK).map(|c| c.iter().map(&f).collect()).collect();
    let mut total = NeumaierSum::new();
    for p in &parts {
        total.merge(p);
    }
    total.value()
}

/// Like [`ordered_sum`] but accumulates `lanes` independent sums in one
/// pass. `f` adds its contribution for one item into the lane slice.
pub fn ordered_sums<T, F>(items: &[T], lanes: usize, f: F) -> Vec<f64>
where
    T: Sync,
    F: Fn(&T, &mut [f64]) + Sync,
{
    let parts: Vec<Vec<NeumaierSum>> = items
        .par_chunks(CHUNK)
        .map(|c| {
            let mut acc = vec![NeumaierSum::new(); lanes];
            let mut buf = vec![0.0; lanes];
            for it in c {
                buf.iter_mut().for_each(|b| *b = 0.0);
                f(it, &mut buf);
                for (a, b) in acc.iter_mut().zip(&buf) {
                    a.add(*b);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![NeumaierSum::new(); lanes];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total.iter().map(|s| s.value()).collect()
}

/// Double-double number: an unevaluated sum `hi + lo` carrying about 32
/// significant digits. Used only to self-test the built-in literals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[allow(clippy::should_implement_trait)]
impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from_f64(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from_f64(q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from_f64(q3))
    }

    pub fn div_f64(self, d: f64) -> Dd {
        self.div(Dd::from_f64(d))
    }

    /// Parses a plain decimal literal such as `"2.6789385347"`.
    pub fn parse(s: &str) -> Option<Dd> {
        let (neg, s) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let mut v = Dd::ZERO;
        let mut scale = Dd::ONE;
        let mut seen_dot = false;
        for ch in s.chars() {
            match ch {
                '.' if !seen_dot => seen_dot = true,
                '0'..='9' => {
                    v = v.mul(Dd::from_f64(10.0)).add(Dd::from_f64((ch as u8 - b'0') as f64));
                    if seen_dot {
                        scale = scale.mul(Dd::from_f64(10.0));
                    }
                }
                _ => return None,
            }
        }
        let v = v.div(scale);
        Some(if neg { v.neg() } else { v })
    }

    /// atanh(z) by its Taylor series; intended for |z| <= 1/3.
    pub fn atanh_small(z: Dd) -> Dd {
        let z2 = z.mul(z);
        let mut pow = z;
        let mut acc = Dd::ZERO;
        let mut k = 0u32;
        loop {
            let term = pow.div_f64((2 * k + 1) as f64);
            acc = acc.add(term);
            if term.hi.abs() <= 1e-34 * acc.hi.abs() {
                break;
            }
            pow = pow.mul(z2);
            k += 1;
        }
        acc
    }

    pub fn ln2() -> Dd {
        Dd::atanh_small(Dd::from_f64(1.0).div_f64(3.0)).mul(Dd::from_f64(2.0))
    }

    /// Natural logarithm of a positive double-double.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "ln of non-positive value");
        let e = self.hi.log2().floor();
        let m = self.div(Dd::from_f64(2f64.powi(e as i32)));
        let z = m.sub(Dd::ONE).div(m.add(Dd::ONE));
        Dd::atanh_small(z).mul(Dd::from_f64(2.0)).add(Dd::ln2().mul(Dd::from_f64(e)))
    }

    /// pi from Machin's formula.
    pub fn pi() -> Dd {
        fn atan_inv(n: f64) -> Dd {
            let x = Dd::ONE.div_f64(n);
            let x2 = x.mul(x);
            let mut pow = x;
            let mut acc = Dd::ZERO;
            let mut k = 0u32;
            loop {
                let term = pow.div_f64((2 * k + 1) as f64);
                acc = if k.is_multiple_of(2) { acc.add(term) } else { acc.sub(term) };
                if term.hi.abs() < 1e-34 {
                    break;
                }
                pow = pow.mul(x2);
                k += 1;
            }
            acc
        }
        atan_inv(5.0).mul(Dd::from_f64(16.0)).sub(atan_inv(239.0).mul(Dd::from_f64(4.0)))
    }
}

/// Bernoulli numbers B_0..=B_n as exact rationals.
pub fn bernoulli(n: usize) -> Vec<num_rational::BigRational> {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Zero};
    let mut b = vec![BigRational::zero(); n + 1];
    b[0] = BigRational::one();
    for m in 1..=n {
        let mut s = BigRational::zero();
        let mut binom = BigInt::one();
        for (k, bk) in b.iter().enumerate().take(m) {
            s += BigRational::from_integer(binom.clone()) * bk;
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b[m] = -s / BigRational::from_integer(BigInt::from(m + 1));
    }
    b
}

fn rat_to_dd(r: &num_rational::BigRational) -> Dd {
    let to_dd = |x: &num_bigint::BigInt| {
        use num_traits::ToPrimitive;
        let hi = x.to_f64().unwrap();
        let rest = x - num_bigint::BigInt::from(hi as i128);
        Dd { hi, lo: rest.to_f64().unwrap() }
    };
    to_dd(r.numer()).div(to_dd(r.denom()))
}

/// ln Gamma(x) for 0 < x <= 1 in double-double, via recurrence up to
/// x + 40 and the Stirling series.
pub fn ln_gamma_dd(x: Dd) -> Dd {
    const SHIFT: usize = 40;
    let bern = bernoulli(30);
    let mut shift_log = Dd::ZERO;
    let mut z = x;
    for _ in 0..SHIFT {
        shift_log = shift_log.add(z.ln());
        z = z.add(Dd::ONE);
    }
    let half = Dd::from_f64(0.5);
    let ln2pi = Dd::pi().mul(Dd::from_f64(2.0)).ln();
    let mut s = z.sub(half).mul(z.ln()).sub(z).add(ln2pi.mul(half));
    let zinv = Dd::ONE.div(z);
    let zinv2 = zinv.mul(zinv);
    let mut zpow = zinv;
    for k in 1..=15usize {
        let b = rat_to_dd(&bern[2 * k]);
        let denom = (2 * k * (2 * k - 1)) as f64;
        s = s.add(b.mul(zpow).div_f64(denom));
        zpow = zpow.mul(zinv2);
    }
    s.sub(shift_log)
}

/// Euler's constant from Euler-Maclaurin at n = 40.
pub fn euler_gamma_dd() -> Dd {
    let n = 40usize;
    let bern = bernoulli(24);
    let mut h = Dd::ZERO;
    for k in 1..=n {
        h = h.add(Dd::ONE.div_f64(k as f64));
    }
    let nd = Dd::from_f64(n as f64);
    let mut g = h.sub(nd.ln()).sub(Dd::ONE.div(nd.mul(Dd::from_f64(2.0))));
    let n2 = nd.mul(nd);
    let mut npow = n2;
    for k in 1..=12usize {
        let b = rat_to_dd(&bern[2 * k]);
        g = g.add(b.div(npow.mul(Dd::from_f64((2 * k) as f64))));
        npow = npow.mul(n2);
    }
    g
}

/// Built-in 30-digit literals.
pub mod literals {
    pub const EULER_GAMMA: &str = "0.577215664901532860606512090082";
    pub const LN_2PI: &str = "1.83787706640934548356065947281";
    pub const LN_3: &str = "1.09861228866810969139524523692";
    pub const GAMMA_1_3: &str = "2.67893853470774763365569294097";
    pub const GAMMA_1_4: &str = "3.62560990822190831193068515587";

    pub fn euler_gamma() -> f64 {
        parse(EULER_GAMMA)
    }
    pub fn ln_2pi() -> f64 {
        parse(LN_2PI)
    }
    pub fn ln_3() -> f64 {
        parse(LN_3)
    }
    /// ln Gamma(1/3).
    pub fn ln_gamma_1_3() -> f64 {
        super::Dd::parse(GAMMA_1_3).unwrap().ln().to_f64()
    }
    /// ln Gamma(1/4).
    pub fn ln_gamma_1_4() -> f64 {
        super::Dd::parse(GAMMA_1_4).unwrap().ln().to_f64()
    }

    fn parse(s: &str) -> f64 {
        super::Dd::parse(s).unwrap().to_f64()
    }
}

/// Outcome of recomputing one literal.
#[derive(Debug, Clone)]
pub struct LiteralCheck {
    pub name: &'static str,
    pub literal: f64,
    pub recomputed: f64,
    pub rel_err: f64,
}

/// Recomputes every literal by an independent series and reports the
/// relative discrepancy, which should sit well below 1e-20.
pub fn literal_self_test() -> Vec<LiteralCheck> {
    use literals::*;
    let three = Dd::from_f64(3.0);
    let cases: Vec<(&'static str, &str, Dd)> = vec![
        ("euler_gamma", EULER_GAMMA, euler_gamma_dd()),
        ("ln_2pi", LN_2PI, Dd::pi().mul(Dd::from_f64(2.0)).ln()),
        ("ln_3", LN_3, three.ln()),
        ("gamma_1_3", GAMMA_1_3, ln_gamma_dd(Dd::ONE.div(three)).exp_dd()),
        ("gamma_1_4", GAMMA_1_4, ln_gamma_dd(Dd::from_f64(0.25)).exp_dd()),
    ];
    cases
        .into_iter()
        .map(|(name, lit, val)| {
            let l = Dd::parse(lit).unwrap();
            let diff = l.sub(val);
            LiteralCheck {
                name,
                literal: l.to_f64(),
                recomputed: val.to_f64(),
                rel_err: (diff.to_f64() / l.to_f64()).abs(),
            }
        })
        .collect()
}

impl Dd {
    /// exp by argument halving and Taylor series.
    pub fn exp_dd(self) -> Dd {
        let k = 12;
        let mut r = self.div_f64(2f64.powi(k));
        let mut term = Dd::ONE;
        let mut acc = Dd::ONE;
        for n in 1..40 {
            term = term.mul(r).div_f64(n as f64);
            acc = acc.add(term);
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..k {
            acc = acc.mul(acc);
        }
        r = acc;
        r
    }
}

/// Digamma function to about 14 digits for x > 0.
pub fn digamma(mut x: f64) -> f64 {
    assert!(x > 0.0);
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    // B_2k / (2k) for k = 1..7
    let coeffs = [1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0, 1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0];
    let mut series = 0.0;
    let mut p = x2;
    for c in coeffs {
        series += c * p;
        p *= x2;
    }
    acc + x.ln() - 0.5 / x - series
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancellation() {
        let s: NeumaierSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn literals_match_series() {
        for c in literal_self_test() {
            assert!(c.rel_err < 1e-20, "{} off by {:e}", c.name, c.rel_err);
        }
    }

    #[test]
    fn digamma_special_values() {
        let g = literals::euler_gamma();
        assert!((digamma(1.0) + g).abs() < 1e-13);
        assert!((digamma(0.5) + g + 2.0 * 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn ordered_sums_lanes() {
        let v: Vec<u64> = (1..=100_000).collect();
        let s = ordered_sums(&v, 2, |&x, out| {
            out[0] = x as f64;
            out[1] = 1.0;
        });
        assert_eq!(s, vec![5_000_050_000.0, 100_000.0]);
    }
}
