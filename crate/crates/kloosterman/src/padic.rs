//! Exact arithmetic over Z[1/p]: scalars written as n/p^e, rational matrices,
//! p-adic valuations and modular inverses.

use std::fmt;

use num::rational::Ratio;
use num::{BigInt, FromPrimitive, Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Integer scalar type the exact layer is generic over. `BigInt` is the
/// default (see the aliases at the crate root); `i64`/`i128` work for small
/// experiments where overflow is impossible.
pub trait ExactInt:
    Integer
    + Signed
    + FromPrimitive
    + ToPrimitive
    + num::traits::NumAssign
    + Clone
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl<T> ExactInt for T where
    T: Integer
        + Signed
        + FromPrimitive
        + ToPrimitive
        + num::traits::NumAssign
        + Clone
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// p^e as an exact integer.
pub fn p_pow<I: ExactInt>(p: u64, e: u32) -> I {
    let p = I::from_u64(p).expect("prime fits scalar type");
    let mut acc = I::one();
    for _ in 0..e {
        acc *= p.clone();
    }
    acc
}

/// An exact element of Z[1/p]: value = num / p^exp with p ∤ num or exp = 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicScalar<I: ExactInt> {
    p: u64,
    num: I,
    exp: u32,
}

impl<I: ExactInt> PadicScalar<I> {
    /// Builds num / p^exp and puts it in canonical form.
    pub fn new(p: u64, num: I, exp: u32) -> Self {
        let mut s = PadicScalar { p, num, exp };
        s.canonicalize();
        s
    }

    pub fn from_integer(p: u64, num: I) -> Self {
        PadicScalar { p, num, exp: 0 }
    }

    /// Parses an exact rational whose denominator must be a p-power.
    pub fn from_ratio(p: u64, r: &Ratio<I>) -> Result<Self> {
        let mut den = r.denom().abs();
        let mut num = if r.denom().is_negative() {
            -r.numer().clone()
        } else {
            r.numer().clone()
        };
        let pv = I::from_u64(p).expect("prime fits scalar type");
        let mut exp = 0u32;
        while den > I::one() {
            let (q, rem) = den.div_rem(&pv);
            if !rem.is_zero() {
                return Err(Error::NonPPowerDenominator {
                    denominator: r.denom().to_string(),
                    p,
                });
            }
            den = q;
            exp += 1;
        }
        let _ = &mut num;
        Ok(PadicScalar::new(p, num, exp))
    }

    fn canonicalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let pv = I::from_u64(self.p).expect("prime fits scalar type");
        while self.exp > 0 {
            let (q, rem) = self.num.div_rem(&pv);
            if rem.is_zero() {
                self.num = q;
                self.exp -= 1;
            } else {
                break;
            }
        }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// μ(a): 0 for p-integral a, otherwise −v_p(a).
    pub fn mu(&self) -> u32 {
        self.exp
    }

    pub fn is_integral(&self) -> bool {
        self.exp == 0
    }

    /// The numerator of the canonical form (the unit part c when μ > 0).
    pub fn unit_part(&self) -> &I {
        &self.num
    }

    pub fn to_ratio(&self) -> Ratio<I> {
        Ratio::new(self.num.clone(), p_pow(self.p, self.exp))
    }
}

impl<I: ExactInt> fmt::Display for PadicScalar<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}^{}", self.num, self.p, self.exp)
        }
    }
}

/// μ(a) for a rational a (0 on Z_p, else −v_p).
pub fn mu<I: ExactInt>(p: u64, a: &Ratio<I>) -> Result<u32> {
    Ok(PadicScalar::from_ratio(p, a)?.mu())
}

/// Inverse of c modulo p^m (0 ≤ result < p^m). Errors when p | c.
pub fn mod_inverse<I: ExactInt>(c: &I, p: u64, m: u32) -> Result<I> {
    let modulus: I = p_pow(p, m);
    if modulus.is_one() {
        return Ok(I::zero());
    }
    let c_red = c.mod_floor(&modulus);
    let gcd = c_red.extended_gcd(&modulus);
    if !gcd.gcd.is_one() {
        return Err(Error::NotAUnit {
            value: c.to_string(),
            modulus: modulus.to_string(),
        });
    }
    Ok(gcd.x.mod_floor(&modulus))
}

/// Inverse of c modulo m over u64, for the enumeration hot path.
pub fn mod_inverse_u64(c: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (c as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// A square matrix of exact rationals attached to a prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMatrix<I: ExactInt> {
    p: u64,
    n: usize,
    a: Vec<Ratio<I>>,
}

impl<I: ExactInt> RationalMatrix<I> {
    pub fn zero(p: u64, n: usize) -> Self {
        RationalMatrix {
            p,
            n,
            a: vec![Ratio::zero(); n * n],
        }
    }

    pub fn identity(p: u64, n: usize) -> Self {
        let mut m = Self::zero(p, n);
        for i in 0..n {
            m.a[i * n + i] = Ratio::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Entry at 1-based (row, col).
    pub fn get(&self, row: usize, col: usize) -> &Ratio<I> {
        &self.a[(row - 1) * self.n + (col - 1)]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Ratio<I>) {
        self.a[(row - 1) * self.n + (col - 1)] = v;
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        assert_eq!(self.p, other.p);
        let n = self.n;
        let mut out = Self::zero(self.p, n);
        for i in 0..n {
            for k in 0..n {
                let lik = &self.a[i * n + k];
                if lik.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let r = &other.a[k * n + j];
                    if r.is_zero() {
                        continue;
                    }
                    out.a[i * n + j] = out.a[i * n + j].clone() + lik.clone() * r.clone();
                }
            }
        }
        out
    }

    /// Adds `factor * column src` to `column dst` in place.
    pub fn col_axpy(&mut self, dst: usize, src: usize, factor: &Ratio<I>) {
        for row in 1..=self.n {
            let v = self.get(row, src).clone() * factor.clone() + self.get(row, dst).clone();
            self.set(row, dst, v);
        }
    }

    /// Exact determinant by fraction-free-ish Gaussian elimination.
    pub fn det(&self) -> Ratio<I> {
        let n = self.n;
        let mut a = self.a.clone();
        let mut det = Ratio::one();
        for col in 0..n {
            let pivot_row = match (col..n).find(|&r| !a[r * n + col].is_zero()) {
                Some(r) => r,
                None => return Ratio::zero(),
            };
            if pivot_row != col {
                for j in 0..n {
                    a.swap(pivot_row * n + j, col * n + j);
                }
                det = -det;
            }
            let pivot = a[col * n + col].clone();
            det *= pivot.clone();
            for r in (col + 1)..n {
                let f = a[r * n + col].clone() / pivot.clone();
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j].clone();
                    a[r * n + j] = a[r * n + j].clone() - f.clone() * v;
                }
            }
        }
        det
    }

    /// Exact inverse; panics if singular (callers only invert known units).
    pub fn inverse(&self) -> Self {
        let n = self.n;
        let mut a = self.a.clone();
        let mut inv = Self::identity(self.p, n);
        for col in 0..n {
            let pivot_row = (col..n)
                .find(|&r| !a[r * n + col].is_zero())
                .expect("matrix is singular");
            if pivot_row != col {
                for j in 0..n {
                    a.swap(pivot_row * n + j, col * n + j);
                    inv.a.swap(pivot_row * n + j, col * n + j);
                }
            }
            let pivot = a[col * n + col].clone();
            for j in 0..n {
                a[col * n + j] = a[col * n + j].clone() / pivot.clone();
                inv.a[col * n + j] = inv.a[col * n + j].clone() / pivot.clone();
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let av = a[col * n + j].clone();
                    let iv = inv.a[col * n + j].clone();
                    a[r * n + j] = a[r * n + j].clone() - f.clone() * av;
                    inv.a[r * n + j] = inv.a[r * n + j].clone() - f.clone() * iv;
                }
            }
        }
        inv
    }

    /// True when every entry lies in Z_p: the reduced denominator is not
    /// divisible by p (denominators coprime to p are p-adic units).
    pub fn is_p_integral(&self) -> bool {
        let pv = I::from_u64(self.p).expect("prime fits scalar type");
        self.a
            .iter()
            .all(|x| !(x.denom().abs() % pv.clone()).is_zero())
    }

    /// Embeds a 2x2 block at rows/cols (i, j) of the identity (1-based, i < j).
    pub fn embed_2x2(p: u64, n: usize, i: usize, j: usize, block: [[Ratio<I>; 2]; 2]) -> Self {
        let mut m = Self::identity(p, n);
        let [[a, b], [c, d]] = block;
        m.set(i, i, a);
        m.set(i, j, b);
        m.set(j, i, c);
        m.set(j, j, d);
        m
    }
}

impl<I: ExactInt> fmt::Display for RationalMatrix<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 1..=self.n {
            write!(f, "[")?;
            for col in 1..=self.n {
                if col > 1 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(row, col))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Convenience: BigInt from i64.
pub fn big(v: i64) -> BigInt {
    BigInt::from_i64(v).unwrap()
}

/// Convenience: BigRational from an i64 numerator and p-power denominator.
pub fn bigrat(num: i64, den: i64) -> Ratio<BigInt> {
    Ratio::new(big(num), big(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    type S = PadicScalar<BigInt>;

    #[test]
    fn mu_examples() {
        // integral value
        assert_eq!(S::new(5, big(3), 0).mu(), 0);
        // 1/p
        assert_eq!(S::new(5, big(1), 1).mu(), 1);
        // 7/4 at p = 2 has valuation -2
        let a = bigrat(7, 4);
        assert_eq!(mu(2, &a).unwrap(), 2);
        // canonical form divides out p from the numerator
        assert_eq!(S::new(3, big(9), 1).mu(), 0);
        assert_eq!(S::new(3, big(9), 1).unit_part(), &big(3));
        // zero is integral
        assert_eq!(S::new(3, big(0), 4).mu(), 0);
    }

    #[test]
    fn from_ratio_rejects_non_p_power_denominators() {
        let a = bigrat(1, 6);
        assert!(matches!(
            S::from_ratio(2, &a),
            Err(Error::NonPPowerDenominator { .. })
        ));
        assert_eq!(S::from_ratio(2, &bigrat(3, 8)).unwrap().mu(), 3);
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(&big(1), 2, 3).unwrap(), big(1));
        assert_eq!(mod_inverse(&big(3), 2, 3).unwrap(), big(3));
        assert_eq!(mod_inverse(&big(2), 3, 2).unwrap(), big(5));
        assert!(mod_inverse(&big(6), 3, 2).is_err());
        assert_eq!(mod_inverse_u64(3, 8), Some(3));
        assert_eq!(mod_inverse_u64(2, 9), Some(5));
        assert_eq!(mod_inverse_u64(6, 9), None);
    }

    #[test]
    fn mod_inverse_involution() {
        for p in [2u64, 3, 5, 7] {
            for m in 1..=4u32 {
                let modulus = p_pow::<BigInt>(p, m);
                let mut c = big(1);
                while c < modulus {
                    if !(c.clone() % big(p as i64)).is_zero() {
                        let d = mod_inverse(&c, p, m).unwrap();
                        let dd = mod_inverse(&d, p, m).unwrap();
                        assert_eq!(dd, c);
                    }
                    c += 1;
                }
            }
        }
    }

    #[test]
    fn matrix_basics() {
        let mut m = RationalMatrix::<BigInt>::identity(2, 3);
        m.set(1, 2, bigrat(1, 2));
        let inv = m.inverse();
        assert_eq!(m.mul(&inv), RationalMatrix::identity(2, 3));
        assert_eq!(m.det(), bigrat(1, 1));
        assert!(!m.is_p_integral());
        let e = RationalMatrix::<BigInt>::embed_2x2(
            5,
            3,
            2,
            3,
            [
                [bigrat(1, 3), bigrat(0, 1)],
                [bigrat(5, 1), bigrat(3, 1)],
            ],
        );
        assert_eq!(e.get(2, 2), &bigrat(1, 3));
        assert_eq!(e.get(3, 2), &bigrat(5, 1));
        assert_eq!(e.get(1, 1), &bigrat(1, 1));
        assert!(e.is_p_integral());
        assert_eq!(e.det(), bigrat(1, 1));
    }
}
