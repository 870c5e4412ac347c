//! Definition-level brute force: enumerates the Kloosterman set
//! U(Z_p)\(U 𝔫 U ∩ Γ)/U_w(Z_p) by scanning bounded-denominator coset
//! representatives and deciding membership with exact row clearing, and
//! computes the sum straight from the definition. Independent of the path
//! formulas; used as ground truth at desk scale.

use num::rational::Ratio;
use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::cyclotomic::{CharArg, CyclotomicValue};
use crate::error::{Error, Result};
use crate::padic::{big, p_pow, PadicScalar, RationalMatrix};
use crate::weyl::WeylElement;

type Rat = Ratio<BigInt>;
type Matrix = RationalMatrix<BigInt>;

/// The congruence subgroup the membership test runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subgroup {
    Full,
    /// Γ0(p^l): bottom row ≡ (0, …, 0, *) mod p^l.
    Gamma0(u32),
}

/// One double coset u·𝔫·u′, recorded through canonical representatives of
/// the two unipotent factors (entries reduced mod 1).
#[derive(Debug, Clone)]
pub struct CosetPair {
    pub u: Matrix,
    pub u_prime: Matrix,
}

/// 𝔫 = fc·w with fc = diag(p^{−r_1}, p^{r_1−r_2}, …, p^{r_N}) and the
/// signed representative of w.
pub fn modulus_matrix(w: &WeylElement, p: u64, r: &[u32]) -> Result<Matrix> {
    let n = w.dimension() as usize;
    if r.len() != n - 1 {
        return Err(Error::BadExponentVector {
            expected: n - 1,
            got: r.len(),
        });
    }
    let mut fc = Matrix::zero(p, n);
    for i in 1..=n {
        let e: i64 = if i == 1 {
            -(r[0] as i64)
        } else if i == n {
            r[n - 2] as i64
        } else {
            r[i - 2] as i64 - r[i - 1] as i64
        };
        fc.set(i, i, crate::bruhat::ppow_ratio(p, e));
    }
    Ok(fc.mul(&w.signed_matrix(p)))
}

fn denom_exponent(p: u64, x: &Rat) -> u32 {
    let pv = big(p as i64);
    let mut den = x.denom().abs();
    let mut e = 0;
    while (den.clone() % pv.clone()).is_zero() {
        den /= pv.clone();
        e += 1;
    }
    e
}

/// Any solution x of A·x ≡ b mod p; unknowns are the columns of `a`.
#[allow(clippy::needless_range_loop)]
fn solve_mod_p(a: &[Vec<u64>], b: &[u64], p: u64) -> Option<Vec<u64>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    if cols == 0 {
        return if b.iter().all(|&x| x % p == 0) {
            Some(Vec::new())
        } else {
            None
        };
    }
    let mut aug: Vec<Vec<u64>> = (0..rows)
        .map(|r| {
            let mut row = a[r].clone();
            row.push(b[r] % p);
            row
        })
        .collect();
    let mut pivot_col_of_row = vec![usize::MAX; rows];
    let mut rank = 0;
    for col in 0..cols {
        let pr = (rank..rows).find(|&r| !aug[r][col].is_multiple_of(p));
        let Some(pr) = pr else { continue };
        aug.swap(rank, pr);
        let inv = crate::padic::mod_inverse_u64(aug[rank][col] % p, p)?;
        for c in col..=cols {
            aug[rank][c] = aug[rank][c] % p * inv % p;
        }
        for r in 0..rows {
            if r != rank && !aug[r][col].is_multiple_of(p) {
                let f = aug[r][col] % p;
                for c in col..=cols {
                    aug[r][c] = (aug[r][c] + (p - f) * aug[rank][c]) % p;
                }
            }
        }
        pivot_col_of_row[rank] = col;
        rank += 1;
        if rank == rows {
            break;
        }
    }
    for r in rank..rows {
        if !aug[r][cols].is_multiple_of(p) {
            return None;
        }
    }
    let mut x = vec![0u64; cols];
    for r in 0..rank {
        x[pivot_col_of_row[r]] = aug[r][cols] % p;
    }
    Some(x)
}

/// Decides M ∈ U(Q_p)·GL(Z_p) by clearing denominators bottom-up; on
/// success returns (u, g) with u ∈ U(Q_p) and g = u·M ∈ GL(Z_p).
fn clear_rows(m: &Matrix) -> Option<(Matrix, Matrix)> {
    let p = m.prime();
    let n = m.dim();
    let mut g = m.clone();
    let mut u = Matrix::identity(p, n);
    let pv = big(p as i64);
    for i in (1..=n).rev() {
        loop {
            let e = (1..=n)
                .map(|c| denom_exponent(p, g.get(i, c)))
                .max()
                .unwrap_or(0);
            if e == 0 {
                break;
            }
            let scale: Rat = crate::bruhat::ppow_ratio(p, e as i64);
            let target: Vec<u64> = (1..=n)
                .map(|c| {
                    let y = g.get(i, c).clone() * scale.clone();
                    debug_assert!(y.denom().is_one());
                    y.numer().mod_floor(&pv).to_u64().unwrap()
                })
                .collect();
            let lower: Vec<Vec<u64>> = (1..=n)
                .map(|c| {
                    ((i + 1)..=n)
                        .map(|j| g.get(j, c).numer().mod_floor(&pv).to_u64().unwrap())
                        .collect()
                })
                .collect();
            let lambda = solve_mod_p(&lower, &target, p)?;
            let shift: Rat = crate::bruhat::ppow_ratio(p, -(e as i64));
            for (idx, &l) in lambda.iter().enumerate() {
                if l == 0 {
                    continue;
                }
                let j = i + 1 + idx;
                let f = -Rat::from_integer(big(l as i64)) * shift.clone();
                for c in 1..=n {
                    let v = g.get(i, c).clone() + f.clone() * g.get(j, c).clone();
                    g.set(i, c, v);
                    let v = u.get(i, c).clone() + f.clone() * u.get(j, c).clone();
                    u.set(i, c, v);
                }
            }
        }
    }
    Some((u, g))
}

/// Decides M ∈ GL(Z_p)·U(Q_p) by clearing denominators left-to-right; on
/// success returns (g, u′) with u′ ∈ U(Q_p) and g = M·u′ ∈ GL(Z_p).
fn clear_cols(m: &Matrix) -> Option<(Matrix, Matrix)> {
    let p = m.prime();
    let n = m.dim();
    let mut g = m.clone();
    let mut u = Matrix::identity(p, n);
    let pv = big(p as i64);
    for j in 1..=n {
        loop {
            let e = (1..=n)
                .map(|r| denom_exponent(p, g.get(r, j)))
                .max()
                .unwrap_or(0);
            if e == 0 {
                break;
            }
            let scale: Rat = crate::bruhat::ppow_ratio(p, e as i64);
            let target: Vec<u64> = (1..=n)
                .map(|r| {
                    let y = g.get(r, j).clone() * scale.clone();
                    debug_assert!(y.denom().is_one());
                    y.numer().mod_floor(&pv).to_u64().unwrap()
                })
                .collect();
            let earlier: Vec<Vec<u64>> = (1..=n)
                .map(|r| {
                    (1..j)
                        .map(|c| g.get(r, c).numer().mod_floor(&pv).to_u64().unwrap())
                        .collect()
                })
                .collect();
            let lambda = solve_mod_p(&earlier, &target, p)?;
            let shift: Rat = crate::bruhat::ppow_ratio(p, -(e as i64));
            for (idx, &l) in lambda.iter().enumerate() {
                if l == 0 {
                    continue;
                }
                let c = idx + 1;
                let f = -Rat::from_integer(big(l as i64)) * shift.clone();
                for r in 1..=n {
                    let v = g.get(r, j).clone() + f.clone() * g.get(r, c).clone();
                    g.set(r, j, v);
                    let v = u.get(r, j).clone() + f.clone() * u.get(r, c).clone();
                    u.set(r, j, v);
                }
            }
        }
    }
    Some((g, u))
}

/// Reduces a unipotent upper-triangular u mod U(Z_p) on the left: entries
/// become their fractional parts, processed along ascending diagonals.
fn canonicalize_left(u: &Matrix) -> Matrix {
    let n = u.dim();
    let mut out = u.clone();
    for d in 1..n {
        for i in 1..=(n - d) {
            let j = i + d;
            let t = out.get(i, j).floor();
            if t.is_zero() {
                continue;
            }
            for c in j..=n {
                let v = out.get(i, c).clone() - t.clone() * out.get(j, c).clone();
                out.set(i, c, v);
            }
        }
    }
    out
}

/// Reduces a unipotent upper-triangular u′ mod U(Z_p) on the right: entries
/// become their fractional parts, processed bottom row first.
fn canonicalize_right(u: &Matrix) -> Matrix {
    let n = u.dim();
    let mut out = u.clone();
    for i in (1..n).rev() {
        for j in (i + 1)..=n {
            let t = out.get(i, j).floor();
            if t.is_zero() {
                continue;
            }
            for r in 1..=i {
                let v = out.get(r, j).clone() - t.clone() * out.get(r, i).clone();
                out.set(r, j, v);
            }
        }
    }
    out
}

/// The fractions a/p^e with 0 ≤ e ≤ bound in canonical form.
fn fraction_values(p: u64, bound: u32) -> Vec<Rat> {
    let mut out = vec![Rat::zero()];
    for e in 1..=bound {
        let den: BigInt = p_pow(p, e);
        for a in 1..p.pow(e) {
            if a % p != 0 {
                out.push(Rat::new(big(a as i64), den.clone()));
            }
        }
    }
    out
}

fn apply_candidate(support: &[(usize, usize)], values: &[Rat], p: u64, n: usize) -> Matrix {
    let mut u = Matrix::identity(p, n);
    for (&(i, j), v) in support.iter().zip(values) {
        u.set(i, j, v.clone());
    }
    u
}

fn candidate_count(p: u64, bound: u32, positions: usize) -> u128 {
    let per = (p as u128).saturating_pow(bound);
    let mut total = 1u128;
    for _ in 0..positions {
        total = total.saturating_mul(per);
    }
    total
}

fn scan_candidates<T: Send>(
    support: &[(usize, usize)],
    p: u64,
    n: usize,
    bound: u32,
    test: impl Fn(&Matrix) -> Option<T> + Sync,
) -> Vec<T> {
    let values = fraction_values(p, bound);
    if support.is_empty() {
        let u = Matrix::identity(p, n);
        return test(&u).into_iter().collect();
    }

    fn rec<T>(
        support: &[(usize, usize)],
        values: &[Rat],
        p: u64,
        n: usize,
        stack: &mut Vec<Rat>,
        test: &(impl Fn(&Matrix) -> Option<T> + Sync),
        found: &mut Vec<T>,
    ) {
        if stack.len() == support.len() {
            let u = apply_candidate(support, stack, p, n);
            if let Some(t) = test(&u) {
                found.push(t);
            }
            return;
        }
        for v in values {
            stack.push(v.clone());
            rec(support, values, p, n, stack, test, found);
            stack.pop();
        }
    }

    // parallel over the first coordinate, ordered merge of the chunks
    let chunks: Vec<Vec<T>> = values
        .par_iter()
        .map(|first| {
            let mut found = Vec::new();
            let mut stack: Vec<Rat> = vec![first.clone()];
            rec(support, &values, p, n, &mut stack, &test, &mut found);
            found
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// Enumerates X(𝔫) for 𝔫 = fc·w: scans u′ ∈ U_w(Q_p)/U_w(Z_p) with entry
/// denominators up to p^bound, keeps the candidates where 𝔫·u′ completes to
/// an element of Γ, and recovers the left factor u. The result does not
/// depend on the bound once it reaches Σ r_l.
pub fn enumerate_kloosterman_set(
    w: &WeylElement,
    p: u64,
    r: &[u32],
    bound: u32,
    subgroup: Subgroup,
    budget: u128,
) -> Result<Vec<CosetPair>> {
    let n = w.dimension() as usize;
    let nmat = modulus_matrix(w, p, r)?;
    let support = crate::bruhat::u_w_support(w);
    let required = candidate_count(p, bound, support.len());
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let pairs = scan_candidates(&support, p, n, bound, |u_prime| {
        let m = nmat.mul(u_prime);
        let (u, g) = clear_rows(&m)?;
        if let Subgroup::Gamma0(l) = subgroup {
            let pl = p_pow::<BigInt>(p, l);
            for c in 1..n {
                let entry = g.get(n, c);
                debug_assert!(entry.denom().is_one());
                if !(entry.numer().clone() % pl.clone()).is_zero() {
                    return None;
                }
            }
        }
        Some(CosetPair {
            u: canonicalize_left(&u),
            u_prime: u_prime.clone(),
        })
    });
    Ok(pairs)
}

fn phase_arg(pair_u: &Matrix, chi: &[i64]) -> Rat {
    let n = pair_u.dim();
    let mut arg = Rat::zero();
    for i in 1..n {
        if chi[i - 1] != 0 {
            arg += Rat::from_integer(big(chi[i - 1])) * pair_u.get(i, i + 1).clone();
        }
    }
    arg
}

/// Σ ψ(u)·ψ′(u′) over a precomputed coset list, exactly.
pub fn phases_from_set(
    set: &[CosetPair],
    p: u64,
    psi: &[i64],
    psi_prime: &[i64],
) -> Result<CyclotomicValue> {
    let mut args = Vec::with_capacity(set.len());
    let mut k = 0u32;
    for pair in set {
        let total = phase_arg(&pair.u, psi) + phase_arg(&pair.u_prime, psi_prime);
        let scalar = PadicScalar::from_ratio(p, &total)?;
        let e = scalar.mu();
        k = k.max(e);
        let modulus: BigInt = p_pow(p, e);
        let t = scalar
            .unit_part()
            .mod_floor(&modulus)
            .to_u64()
            .ok_or_else(|| Error::Precondition("oracle phase residue exceeds u64".into()))?;
        args.push(CharArg::new(p, e, t));
    }
    let mut v = CyclotomicValue::zero(p, k);
    for arg in args {
        v.accumulate(arg)?;
    }
    Ok(v)
}

/// The Kloosterman sum straight from the definition. `bound` defaults to
/// Σ r_l.
#[allow(clippy::too_many_arguments)]
pub fn oracle_sum(
    w: &WeylElement,
    p: u64,
    r: &[u32],
    psi: &[i64],
    psi_prime: &[i64],
    subgroup: Subgroup,
    bound: Option<u32>,
    budget: u128,
) -> Result<CyclotomicValue> {
    let b = bound.unwrap_or_else(|| r.iter().sum());
    let set = enumerate_kloosterman_set(w, p, r, b, subgroup, budget)?;
    phases_from_set(&set, p, psi, psi_prime)
}

/// Enumerates the opposite-quotient set X′(𝔫̃) for an explicit modulus
/// matrix with Weyl part w̃: scans u ∈ U_{w̃^{−1}}(Z_p)\U_{w̃^{−1}}(Q_p) and
/// completes on the right with a full unipotent factor.
pub fn enumerate_x_prime_set(
    w_tilde: &WeylElement,
    n_matrix: &Matrix,
    p: u64,
    bound: u32,
    budget: u128,
) -> Result<Vec<CosetPair>> {
    let n = w_tilde.dimension() as usize;
    let support = crate::bruhat::u_w_support(&w_tilde.inverse());
    let required = candidate_count(p, bound, support.len());
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let pairs = scan_candidates(&support, p, n, bound, |u| {
        let m = u.mul(n_matrix);
        let (_, u_prime) = clear_cols(&m)?;
        Some(CosetPair {
            u: u.clone(),
            u_prime: canonicalize_right(&u_prime),
        })
    });
    Ok(pairs)
}

/// Kl′ from the definition: phases χ_left(u)·χ_right(u′) over X′(𝔫̃).
pub fn oracle_sum_x_prime(
    w_tilde: &WeylElement,
    n_matrix: &Matrix,
    p: u64,
    chi_left: &[i64],
    chi_right: &[i64],
    bound: u32,
    budget: u128,
) -> Result<CyclotomicValue> {
    let set = enumerate_x_prime_set(w_tilde, n_matrix, p, bound, budget)?;
    phases_from_set(&set, p, chi_left, chi_right)
}
