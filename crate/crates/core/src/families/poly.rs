use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

/// Integer polynomial in T, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Poly(pub Vec<i64>);

impl Poly {
    pub fn new(mut c: Vec<i64>) -> Self {
        while c.len() > 1 && *c.last().unwrap() == 0 {
            c.pop();
        }
        Poly(c)
    }

    pub fn constant(c: i64) -> Self {
        Poly(vec![c])
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0).unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Value at t reduced into [0, m).
    #[inline]
    pub fn eval_mod(&self, t: u64, m: u64) -> u64 {
        let m128 = m as i128;
        let t = (t % m) as i128;
        let mut acc: i128 = 0;
        for &c in self.0.iter().rev() {
            acc = (acc * t + c as i128).rem_euclid(m128);
        }
        acc as u64
    }

    /// Exact value at t, or `None` on i128 overflow.
    pub fn eval_i128(&self, t: i64) -> Option<i128> {
        let mut acc: i128 = 0;
        for &c in self.0.iter().rev() {
            acc = acc.checked_mul(t as i128)?.checked_add(c as i128)?;
        }
        Some(acc)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0]);
        }
        Poly::new(self.0.iter().enumerate().skip(1).map(|(i, &c)| c * i as i64).collect())
    }

    pub fn to_big(&self) -> Vec<BigInt> {
        self.0.iter().map(|&c| BigInt::from(c)).collect()
    }
}

pub fn big_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn big_add(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let n = a.len().max(b.len());
    (0..n).map(|i| a.get(i).cloned().unwrap_or_default() + b.get(i).cloned().unwrap_or_default()).collect()
}

pub fn big_scale(a: &[BigInt], s: i64) -> Vec<BigInt> {
    a.iter().map(|x| x * s).collect()
}

/// Resultant of two integer polynomials via the Sylvester matrix and
/// fraction-free (Bareiss) elimination.
pub fn resultant(f: &Poly, g: &Poly) -> BigInt {
    let (m, n) = (f.degree(), g.degree());
    if m == 0 && n == 0 {
        return BigInt::from(1);
    }
    let size = m + n;
    let mut mat = vec![vec![BigInt::zero(); size]; size];
    let fc: Vec<BigInt> = f.0[..=m].iter().rev().map(|&c| BigInt::from(c)).collect();
    let gc: Vec<BigInt> = g.0[..=n].iter().rev().map(|&c| BigInt::from(c)).collect();
    for i in 0..n {
        for (j, c) in fc.iter().enumerate() {
            mat[i][i + j] = c.clone();
        }
    }
    for i in 0..m {
        for (j, c) in gc.iter().enumerate() {
            mat[n + i][i + j] = c.clone();
        }
    }
    bareiss_det(mat)
}

fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = 1i32;
    let mut prev = BigInt::from(1);
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

pub fn is_zero_poly(p: &[BigInt]) -> bool {
    p.iter().all(|c| c.is_zero())
}

pub fn abs_big(x: &BigInt) -> BigInt {
    x.abs()
}
