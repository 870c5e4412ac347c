//! Exact accumulation of p-power-order character sums.
//!
//! A value is an integer combination Σ n_t·e(t/p^K) kept as an unreduced
//! coefficient vector over Z/p^K. Addition and integer scaling are exact.
//! Equality is decided on reduced coordinates (rewriting exponents above
//! φ(p^K) through the vanishing relation of the p^K-th cyclotomic
//! polynomial), and the complex embedding carries a certified error bound.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Ψ(t/p^k): the standard additive character evaluated at a rational with
/// p-power denominator, recorded as the residue t mod p^k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharArg {
    p: u64,
    k: u32,
    t: u64,
}

impl CharArg {
    pub fn new(p: u64, k: u32, t: u64) -> Self {
        let modulus = p.checked_pow(k).expect("p^k fits u64");
        CharArg {
            p,
            k,
            t: t % modulus,
        }
    }

    pub fn trivial(p: u64) -> Self {
        CharArg { p, k: 0, t: 0 }
    }

    /// Ψ(x) = 1 exactly when the argument is integral.
    pub fn is_trivial(&self) -> bool {
        self.t == 0
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn denominator_exponent(&self) -> u32 {
        self.k
    }

    pub fn residue(&self) -> u64 {
        self.t
    }

    /// The image of an exact rational in Q_p/Z_p: for x = a/(u·p^e) with u a
    /// p-unit this is Ψ(a·ū/p^e).
    pub fn from_rational(p: u64, x: &num::rational::Ratio<num::BigInt>) -> crate::error::Result<Self> {
        use num::{Integer, One, Signed, ToPrimitive, Zero};
        let pv = num::BigInt::from(p);
        let mut unit = x.denom().abs();
        let mut e = 0u32;
        while (unit.clone() % pv.clone()).is_zero() {
            unit /= pv.clone();
            e += 1;
        }
        if e == 0 {
            return Ok(CharArg::trivial(p));
        }
        let modulus = crate::padic::p_pow::<num::BigInt>(p, e);
        let mut numer = x.numer().clone();
        if x.denom().is_negative() {
            numer = -numer;
        }
        if !unit.is_one() {
            numer *= crate::padic::mod_inverse(&unit, p, e)?;
        }
        let t = numer
            .mod_floor(&modulus)
            .to_u64()
            .ok_or_else(|| crate::error::Error::Precondition("residue exceeds u64".into()))?;
        Ok(CharArg::new(p, e, t))
    }
}

/// An exact element of Z[ζ_{p^K}] with unreduced coefficients over Z/p^K.
#[derive(Debug, Clone, Serialize)]
pub struct CyclotomicValue {
    p: u64,
    k: u32,
    modulus: u64,
    coeffs: HashMap<u64, i64>,
}

impl CyclotomicValue {
    pub fn zero(p: u64, k: u32) -> Self {
        let modulus = p.checked_pow(k).expect("p^k fits u64");
        CyclotomicValue {
            p,
            k,
            modulus,
            coeffs: HashMap::new(),
        }
    }

    /// The constant 1 (= e(0)).
    pub fn one(p: u64) -> Self {
        let mut v = Self::zero(p, 0);
        v.add_coeff(0, 1);
        v
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.k
    }

    fn add_coeff(&mut self, t: u64, n: i64) {
        let e = self.coeffs.entry(t % self.modulus).or_insert(0);
        *e += n;
        if *e == 0 {
            self.coeffs.remove(&(t % self.modulus));
        }
    }

    /// Adds Ψ(arg) to the sum. The argument's denominator must divide p^K.
    pub fn accumulate(&mut self, arg: CharArg) -> Result<()> {
        if arg.p != self.p {
            return Err(Error::PrimeMismatch {
                left: self.p,
                right: arg.p,
            });
        }
        if arg.k > self.k {
            return Err(Error::Precondition(format!(
                "argument denominator p^{} exceeds accumulator level p^{}",
                arg.k, self.k
            )));
        }
        let lift = self.p.pow(self.k - arg.k);
        self.add_coeff(arg.t * lift, 1);
        Ok(())
    }

    /// Returns a copy at level k' ≥ k (coefficients move to lifted indices).
    pub fn lift_to(&self, k_new: u32) -> Self {
        assert!(k_new >= self.k);
        let mut out = Self::zero(self.p, k_new);
        let lift = self.p.pow(k_new - self.k);
        for (&t, &n) in &self.coeffs {
            out.add_coeff(t * lift, n);
        }
        out
    }

    /// Exact sum of two values, lifting to the larger level.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch {
                left: self.p,
                right: other.p,
            });
        }
        let k = self.k.max(other.k);
        let mut out = self.lift_to(k);
        let o = other.lift_to(k);
        for (&t, &n) in &o.coeffs {
            out.add_coeff(t, n);
        }
        Ok(out)
    }

    pub fn negate(&self) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v = -*v;
        }
        out
    }

    /// Multiplies the value by an integer scalar.
    pub fn scale(&self, factor: i64) -> Self {
        if factor == 0 {
            return Self::zero(self.p, self.k);
        }
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v *= factor;
        }
        out
    }

    /// Multiplies the value by p^e.
    pub fn scale_p_pow(&self, e: u32) -> Self {
        let f = self.p.checked_pow(e).expect("p^e fits u64") as i64;
        self.scale(f)
    }

    pub fn coeff_abs_sum(&self) -> f64 {
        self.coeffs.values().map(|&n| (n as f64).abs()).sum()
    }

    /// Sparse coefficients sorted by index; the stable serialization order.
    pub fn sparse_coeffs(&self) -> Vec<(u64, i64)> {
        let mut v: Vec<(u64, i64)> = self.coeffs.iter().map(|(&t, &n)| (t, n)).collect();
        v.sort_unstable();
        v
    }

    /// Coordinates in the power basis 1, ζ, …, ζ^{φ(p^K)−1}. Exact; two
    /// values are equal in Z[ζ] iff their reduced coordinates agree.
    pub fn reduced_coeffs(&self) -> Vec<i64> {
        if self.k == 0 {
            return vec![*self.coeffs.get(&0).unwrap_or(&0)];
        }
        let modulus = self.modulus as usize;
        let stride = (self.modulus / self.p) as usize; // p^{K-1}
        let phi = stride * (self.p as usize - 1);
        let mut dense = vec![0i64; modulus];
        for (&t, &n) in &self.coeffs {
            dense[t as usize] += n;
        }
        // ζ^{φ+s} = −Σ_{j<p−1} ζ^{s+j·p^{K−1}} for 0 ≤ s < p^{K−1}
        for t in (phi..modulus).rev() {
            let v = dense[t];
            if v == 0 {
                continue;
            }
            dense[t] = 0;
            let s = t - phi;
            for j in 0..(self.p as usize - 1) {
                dense[s + j * stride] -= v;
            }
        }
        dense.truncate(phi);
        dense
    }

    pub fn is_zero_exact(&self) -> bool {
        self.reduced_coeffs().iter().all(|&n| n == 0)
    }

    /// Exact equality in Z[ζ] (coefficient level, after lifting).
    pub fn eq_exact(&self, other: &Self) -> Result<bool> {
        let diff = self.add(&other.negate())?;
        Ok(diff.is_zero_exact())
    }

    /// Complex embedding with Kahan-compensated summation.
    /// Returns (re, im, per-component error bound).
    pub fn embed(&self) -> (f64, f64, f64) {
        let mut re = 0.0f64;
        let mut im = 0.0f64;
        let mut cre = 0.0f64;
        let mut cim = 0.0f64;
        let order = self.sparse_coeffs();
        let modulus = self.modulus as f64;
        for (t, n) in order {
            let angle = 2.0 * std::f64::consts::PI * (t as f64) / modulus;
            let (s, c) = angle.sin_cos();
            let nf = n as f64;
            // Kahan step for the real part
            let y = nf * c - cre;
            let tr = re + y;
            cre = (tr - re) - y;
            re = tr;
            // and for the imaginary part
            let y = nf * s - cim;
            let ti = im + y;
            cim = (ti - im) - y;
            im = ti;
        }
        let err = 16.0 * f64::EPSILON * self.coeff_abs_sum();
        (re, im, err)
    }

    /// |value| under the complex embedding with a certified absolute error.
    pub fn magnitude(&self) -> (f64, f64) {
        let (re, im, comp_err) = self.embed();
        let mag = (re * re + im * im).sqrt();
        let err = 2.0 * comp_err + 4.0 * f64::EPSILON * mag;
        (mag, err)
    }
}
