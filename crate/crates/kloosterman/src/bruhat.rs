//! Exact Bruhat machinery: b_α images and their products, extraction of the
//! unique L·C·R factorization over a Bruhat cell, the two-block path
//! formulas for the factors, and the multi-block recursion for the entries
//! the character sums read off.

use std::collections::BTreeMap;

use num::rational::Ratio;
use num::{One, Zero};

use crate::diagram::{build_diagram, VertexClass};
use crate::error::{Error, Result};
use crate::padic::{p_pow, ExactInt, RationalMatrix};
use crate::weyl::{EndpointRule, Vertex, WeylElement};

/// Per-vertex coordinates (m_{i,j}, c_{i,j}) of a cell point. The exact
/// inverse d_{i,j} = 1/c (zero when m = 0) is derived on demand; the
/// character-sum module uses integer inverses instead.
#[derive(Debug, Clone)]
pub struct Cell<I: ExactInt> {
    p: u64,
    entries: BTreeMap<Vertex, (u32, I)>,
}

impl<I: ExactInt> Cell<I> {
    /// Builds a cell for `w` from (m, c) values listed in γ order.
    pub fn new(p: u64, w: &WeylElement, values: Vec<(u32, I)>) -> Result<Self> {
        let order = w.gamma_order();
        if values.len() != order.len() {
            return Err(Error::CellMismatch {
                expected: order.len(),
                got: values.len(),
            });
        }
        let pv = I::from_u64(p).expect("prime fits scalar");
        let mut entries = BTreeMap::new();
        for (&v, (m, c)) in order.iter().zip(values) {
            if m > 0 && (c.clone() % pv.clone()).is_zero() {
                return Err(Error::NotAUnit {
                    value: c.to_string(),
                    modulus: format!("{p}^{m}"),
                });
            }
            entries.insert(v, (m, c));
        }
        Ok(Cell { p, entries })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn m(&self, v: Vertex) -> u32 {
        self.entries[&v].0
    }

    pub fn c(&self, v: Vertex) -> &I {
        &self.entries[&v].1
    }

    /// a = c·p^{−m}.
    pub fn a(&self, v: Vertex) -> Ratio<I> {
        let (m, c) = &self.entries[&v];
        Ratio::new(c.clone(), p_pow(self.p, *m))
    }

    /// The exact formal inverse: 1/c when m > 0, zero when m = 0.
    pub fn d_exact(&self, v: Vertex) -> Ratio<I> {
        let (m, c) = &self.entries[&v];
        if *m == 0 {
            Ratio::zero()
        } else {
            Ratio::new(I::one(), c.clone())
        }
    }

    /// c·d − 1: exactly 0 when m > 0 and −1 when m = 0.
    pub fn cd_minus_one(&self, v: Vertex) -> Ratio<I> {
        let c = Ratio::from_integer(self.c(v).clone());
        c * self.d_exact(v) - Ratio::one()
    }

    /// Restriction to the vertices of another element (labels preserved).
    pub fn restrict(&self, w: &WeylElement) -> Result<Cell<I>> {
        let mut entries = BTreeMap::new();
        for &v in w.gamma_order() {
            let e = self
                .entries
                .get(&v)
                .ok_or(Error::UnknownVertex { i: v.i, j: v.j })?;
            entries.insert(v, e.clone());
        }
        Ok(Cell {
            p: self.p,
            entries,
        })
    }
}

/// p^e for signed e, as an exact rational.
pub fn ppow_ratio<I: ExactInt>(p: u64, e: i64) -> Ratio<I> {
    if e >= 0 {
        Ratio::from_integer(p_pow(p, e as u32))
    } else {
        Ratio::new(I::one(), p_pow(p, (-e) as u32))
    }
}

/// The image b_α(a) for the root α_{i,j}, embedded at rows/cols (i, j+1).
pub fn b_alpha<I: ExactInt>(p: u64, dim: usize, root: Vertex, m: u32, c: &I) -> RationalMatrix<I> {
    let (r, s) = (root.i as usize, (root.j + 1) as usize);
    if m == 0 {
        // a ∈ Z_p: ((0, −1), (1, a))
        RationalMatrix::embed_2x2(
            p,
            dim,
            r,
            s,
            [
                [Ratio::zero(), -Ratio::one()],
                [Ratio::one(), Ratio::from_integer(c.clone())],
            ],
        )
    } else {
        // a = c·p^{−m}: ((c^{−1}, 0), (p^m, c))
        RationalMatrix::embed_2x2(
            p,
            dim,
            r,
            s,
            [
                [Ratio::new(I::one(), c.clone()), Ratio::zero()],
                [
                    Ratio::from_integer(p_pow(p, m)),
                    Ratio::from_integer(c.clone()),
                ],
            ],
        )
    }
}

/// b_α(a) for an exact Z[1/p] scalar in canonical form.
pub fn b_alpha_scalar<I: ExactInt>(
    dim: usize,
    root: Vertex,
    a: &crate::padic::PadicScalar<I>,
) -> RationalMatrix<I> {
    b_alpha(a.prime(), dim, root, a.mu(), a.unit_part())
}

/// The product of the b factors over the fixed reduced expression of `w`,
/// with the coordinate of letter t taken at its root γ_t.
pub fn b_product<I: ExactInt>(w: &WeylElement, cell: &Cell<I>) -> RationalMatrix<I> {
    let dim = w.dimension() as usize;
    let p = cell.prime();
    let mut acc = RationalMatrix::identity(p, dim);
    for (t, &s) in w.reduced_expression().iter().enumerate() {
        let gamma = w.gamma_order()[t];
        let (m, c) = (cell.m(gamma), cell.c(gamma).clone());
        let factor = b_alpha(p, dim, Vertex::new(s, s), m, &c);
        acc = acc.mul(&factor);
    }
    acc
}

/// The unique factorization M = L·C·R with L unipotent upper triangular,
/// C monomial on the permutation of `w`, and R ∈ U_w.
#[derive(Debug, Clone)]
pub struct BruhatTriple<I: ExactInt> {
    pub l: RationalMatrix<I>,
    pub c: RationalMatrix<I>,
    pub r: RationalMatrix<I>,
}

/// Support of U_w = U ∩ w^{−1} U^− w: pairs (i, j), i < j, with π(i) > π(j).
pub fn u_w_support(w: &WeylElement) -> Vec<(usize, usize)> {
    let n = w.dimension() as usize;
    let mut out = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            if w.permutation(i as u32) > w.permutation(j as u32) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Extracts the Bruhat triple of `m` over the cell of `w`: the right factor
/// is peeled with column operations pinned to the pivot pattern of the
/// permutation, then the monomial and left factors are read off.
pub fn bruhat_factorize<I: ExactInt>(
    m: &RationalMatrix<I>,
    w: &WeylElement,
) -> Result<BruhatTriple<I>> {
    let n = w.dimension() as usize;
    assert_eq!(m.dim(), n);
    let p = m.prime();
    let support = u_w_support(w);
    let mut work = m.clone();
    let mut r_inv = RationalMatrix::identity(p, n);
    for j in 1..=n {
        let mut sources: Vec<usize> = support
            .iter()
            .filter(|&&(_, jj)| jj == j)
            .map(|&(i, _)| i)
            .collect();
        sources.sort_by_key(|&i| std::cmp::Reverse(w.permutation(i as u32)));
        for i in sources {
            let pivot_row = w.permutation(i as u32) as usize;
            let pivot = work.get(pivot_row, i).clone();
            if pivot.is_zero() {
                return Err(Error::NotInCell {
                    row: pivot_row,
                    col: i,
                });
            }
            let coeff = work.get(pivot_row, j).clone() / pivot;
            if coeff.is_zero() {
                continue;
            }
            let neg = -coeff;
            work.col_axpy(j, i, &neg);
            r_inv.col_axpy(j, i, &neg);
        }
    }
    // work is now L·C: column c has its lowest nonzero entry at row π(c)
    let mut c_mat = RationalMatrix::zero(p, n);
    let mut l_mat = RationalMatrix::zero(p, n);
    for col in 1..=n {
        let pivot_row = w.permutation(col as u32) as usize;
        let pivot = work.get(pivot_row, col).clone();
        if pivot.is_zero() {
            return Err(Error::NotInCell {
                row: pivot_row,
                col,
            });
        }
        for row in (pivot_row + 1)..=n {
            if !work.get(row, col).is_zero() {
                return Err(Error::NotInCell { row, col });
            }
        }
        c_mat.set(pivot_row, col, pivot.clone());
        for row in 1..=pivot_row {
            l_mat.set(row, pivot_row, work.get(row, col).clone() / pivot.clone());
        }
    }
    let r_mat = r_inv.inverse();
    Ok(BruhatTriple {
        l: l_mat,
        c: c_mat,
        r: r_mat,
    })
}

fn path_sum<I: ExactInt>(
    cell: &Cell<I>,
    diagram: &crate::diagram::Diagram,
    from: Vertex,
    to: Vertex,
    rule: EndpointRule,
) -> Ratio<I> {
    let p = cell.prime();
    let paths = diagram
        .minimal_paths(from, to, rule)
        .expect("formula endpoints lie in one component");
    let mut total: Ratio<I> = Ratio::zero();
    for path in paths {
        let mut factor: Ratio<I> = Ratio::one();
        let mut exp: i64 = 0;
        match rule {
            EndpointRule::X | EndpointRule::Y => {
                for (&v, &class) in path.vertices.iter().zip(&path.classes) {
                    match class {
                        VertexClass::Rd => {
                            factor *= Ratio::from_integer(cell.c(v).clone())
                        }
                        VertexClass::Lu => factor *= cell.d_exact(v),
                        VertexClass::Lr | VertexClass::Du => {}
                        other => panic!("unexpected class {other:?} on an up-right path"),
                    }
                    exp -= cell.m(v) as i64;
                }
            }
            EndpointRule::Z | EndpointRule::W => {
                for (&v, &class) in path.vertices.iter().zip(&path.classes) {
                    match class {
                        VertexClass::Ru => {
                            factor *= Ratio::from_integer(cell.c(v).clone())
                        }
                        VertexClass::Ld => factor *= cell.d_exact(v),
                        VertexClass::Lr => {
                            factor *= cell.cd_minus_one(v);
                            exp -= cell.m(v) as i64;
                        }
                        VertexClass::Du => exp += cell.m(v) as i64,
                        other => panic!("unexpected class {other:?} on an up-left path"),
                    }
                }
            }
        }
        if factor.is_zero() {
            continue;
        }
        total += factor * ppow_ratio(p, exp);
    }
    total
}

/// Closed forms for the factors of a two-block element: every entry of L, C
/// and R as a signed sum over minimal paths in the diagram.
pub fn path_formula_entries<I: ExactInt>(
    w: &WeylElement,
    cell: &Cell<I>,
) -> Result<BruhatTriple<I>> {
    let blocks = w.composition().blocks();
    if blocks.len() != 2 {
        return Err(Error::NotTwoBlock);
    }
    let p = cell.prime();
    let k = blocks[0];
    let n = w.dimension() - 1; // an element of GL_{n+1}
    let rest = n + 1 - k;
    let dim = w.dimension() as usize;
    let diagram = build_diagram(w)?;

    let row_m_sum =
        |row: u32| -> i64 { (k..=n).map(|l| cell.m(Vertex::new(row, l)) as i64).sum() };
    let col_m_sum =
        |col: u32| -> i64 { (1..=k).map(|l| cell.m(Vertex::new(l, col)) as i64).sum() };

    // right factor [[I, X], [0, I]]
    let mut r_mat = RationalMatrix::identity(p, dim);
    for i in 1..=rest {
        for j in 1..=k {
            let base = path_sum(
                cell,
                &diagram,
                Vertex::new(1, k + i - 1),
                Vertex::new(j, n),
                EndpointRule::X,
            );
            let signed = if (i + rest).is_multiple_of(2) { base } else { -base };
            r_mat.set(i as usize, (rest + j) as usize, signed);
        }
    }

    // left factor [[Y, Z], [0, W]]
    let mut l_mat = RationalMatrix::identity(p, dim);
    for i in 1..=k {
        for j in i..=k {
            let base = path_sum(
                cell,
                &diagram,
                Vertex::new(i, k),
                Vertex::new(j, n),
                EndpointRule::Y,
            );
            l_mat.set(i as usize, j as usize, base * ppow_ratio(p, row_m_sum(j)));
        }
    }
    for i in 1..=k {
        for j in 1..=rest {
            let base = path_sum(
                cell,
                &diagram,
                Vertex::new(1, j + k - 1),
                Vertex::new(i, k),
                EndpointRule::Z,
            );
            l_mat.set(
                i as usize,
                (k + j) as usize,
                base * ppow_ratio(p, -col_m_sum(j + k - 1)),
            );
        }
    }
    for i in 1..=rest {
        for j in i..=rest {
            let base = path_sum(
                cell,
                &diagram,
                Vertex::new(1, j + k - 1),
                Vertex::new(k, i + k - 1),
                EndpointRule::W,
            );
            l_mat.set(
                (k + i) as usize,
                (k + j) as usize,
                base * ppow_ratio(p, -col_m_sum(j + k - 1)),
            );
        }
    }

    // central factor [[0, C_1], [C_2, 0]]
    let mut c_mat = RationalMatrix::zero(p, dim);
    for i in 1..=k {
        let base: Ratio<I> = ppow_ratio(p, -row_m_sum(i));
        let signed = if rest.is_multiple_of(2) { base } else { -base };
        c_mat.set(i as usize, (rest + i) as usize, signed);
    }
    for i in 1..=rest {
        c_mat.set(
            (k + i) as usize,
            i as usize,
            ppow_ratio(p, col_m_sum(i + k - 1)),
        );
    }

    Ok(BruhatTriple {
        l: l_mat,
        c: c_mat,
        r: r_mat,
    })
}

/// The entries of the Bruhat factors of a multi-block element that the
/// character sums read: the full first off-diagonals of L and R, and the
/// full central factor, assembled by recursion over the block factorization.
#[derive(Debug, Clone)]
pub struct RecursionEntries<I: ExactInt> {
    /// fL_{i,i+1} for i = 1..N.
    pub l_offdiag: Vec<Ratio<I>>,
    /// fR_{i,i+1} for i = 1..N.
    pub r_offdiag: Vec<Ratio<I>>,
    pub central: RationalMatrix<I>,
}

fn recursion_helper<I: ExactInt>(w: &WeylElement, cell: &Cell<I>) -> Result<RecursionEntries<I>> {
    let p = cell.prime();
    let dim = w.dimension() as usize;
    if w.composition().n_blocks() == 2 {
        let triple = path_formula_entries(w, cell)?;
        let l_offdiag = (1..dim).map(|i| triple.l.get(i, i + 1).clone()).collect();
        let r_offdiag = (1..dim).map(|i| triple.r.get(i, i + 1).clone()).collect();
        return Ok(RecursionEntries {
            l_offdiag,
            r_offdiag,
            central: triple.c,
        });
    }
    let (w_prime, k, combined, f) = w.factor_top_blocks()?;
    let n = combined - 1; // the tail is a two-block element of GL_{n+1}
    let cap_n = w.dimension() - 1;
    let m_off = (cap_n + 1 - combined) as usize;

    let tail = crate::weyl::make_admissible(&[k, combined - k])?;
    let tail_cell = cell.restrict(&tail)?;
    let tail_triple = path_formula_entries(&tail, &tail_cell)?;
    let prime_cell = cell.restrict(&w_prime)?;
    let prime = recursion_helper(&w_prime, &prime_cell)?;

    // left off-diagonal: conjugation by C' multiplies the tail entry at
    // (i, i+1) by p^{Σ_{j>n} (m_{i+1,j} − m_{i,j})}
    let mut l_offdiag = Vec::with_capacity(cap_n as usize);
    for i in 1..=cap_n {
        if i <= n {
            let mut shift: i64 = 0;
            for j in (n + 1)..=cap_n {
                shift += cell.m(Vertex::new(i + 1, j)) as i64;
                shift -= cell.m(Vertex::new(i, j)) as i64;
            }
            let tail_entry = tail_triple.l.get(i as usize, (i + 1) as usize).clone();
            let v =
                prime.l_offdiag[(i - 1) as usize].clone() + tail_entry * ppow_ratio(p, shift);
            l_offdiag.push(v);
        } else {
            l_offdiag.push(prime.l_offdiag[(i - 1) as usize].clone());
        }
    }

    // right off-diagonal
    let mut r_offdiag = Vec::with_capacity(cap_n as usize);
    for i in 1..m_off {
        r_offdiag.push(prime.r_offdiag[i - 1].clone());
    }
    {
        // fR_{M,M+1} = Σ_{j≤k+1} c_{j,n+f} d_{j,k} p^{Σ_{l<j}(m_{l,k}−m_{l,n+f}) − m_{j,n+f}}
        let mut total: Ratio<I> = Ratio::zero();
        let src_col = n + f;
        for j in 1..=(k + 1) {
            let src = Vertex::new(j, src_col);
            let c_val = Ratio::from_integer(cell.c(src).clone());
            let d_val = if j <= k {
                cell.d_exact(Vertex::new(j, k))
            } else {
                Ratio::one()
            };
            if c_val.is_zero() || d_val.is_zero() {
                continue;
            }
            let mut e: i64 = -(cell.m(src) as i64);
            for l in 1..j {
                e += cell.m(Vertex::new(l, k)) as i64;
                e -= cell.m(Vertex::new(l, src_col)) as i64;
            }
            total += c_val * d_val * ppow_ratio(p, e);
        }
        r_offdiag.push(total);
    }
    for d in 1..=n {
        r_offdiag.push(tail_triple.r.get(d as usize, (d + 1) as usize).clone());
    }

    // central factor: fC = C'·(I_M ⊕ C_tail)
    let mut embedded = RationalMatrix::zero(p, dim);
    for d in 1..=m_off {
        embedded.set(d, d, Ratio::one());
    }
    for r in 1..=(n + 1) as usize {
        for c in 1..=(n + 1) as usize {
            embedded.set(m_off + r, m_off + c, tail_triple.c.get(r, c).clone());
        }
    }
    let central = prime.central.mul(&embedded);

    Ok(RecursionEntries {
        l_offdiag,
        r_offdiag,
        central,
    })
}

/// Recursion entries for an element with at least three blocks.
pub fn recursion_entries<I: ExactInt>(
    w: &WeylElement,
    cell: &Cell<I>,
) -> Result<RecursionEntries<I>> {
    if w.composition().n_blocks() < 3 {
        return Err(Error::TooFewBlocks {
            needed: 3,
            got: w.composition().n_blocks(),
        });
    }
    recursion_helper(w, cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{big, bigrat};
    use crate::weyl::{compositions, make_admissible};
    use num::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(i: u32, j: u32) -> Vertex {
        Vertex::new(i, j)
    }

    fn cell_from_map(p: u64, w: &WeylElement, vals: &[((u32, u32), (u32, i64))]) -> Cell<BigInt> {
        let map: BTreeMap<Vertex, (u32, BigInt)> = vals
            .iter()
            .map(|&((i, j), (m, c))| (v(i, j), (m, big(c))))
            .collect();
        let ordered: Vec<(u32, BigInt)> =
            w.gamma_order().iter().map(|g| map[g].clone()).collect();
        Cell::new(p, w, ordered).unwrap()
    }

    fn random_cell(p: u64, w: &WeylElement, max_m: u32, rng: &mut ChaCha8Rng) -> Cell<BigInt> {
        let vals: Vec<(u32, BigInt)> = w
            .gamma_order()
            .iter()
            .map(|_| {
                let m = rng.gen_range(0..=max_m);
                let c = if m == 0 {
                    big(rng.gen_range(0..(p.pow(3) as i64 + 1)))
                } else {
                    loop {
                        let c = rng.gen_range(1..(p.pow(3) as i64 + 2));
                        if c % p as i64 != 0 {
                            break big(c);
                        }
                    }
                };
                (m, c)
            })
            .collect();
        Cell::new(p, w, vals).unwrap()
    }

    fn check_triple(m: &RationalMatrix<BigInt>, w: &WeylElement, t: &BruhatTriple<BigInt>) {
        let n = m.dim();
        for r in 1..=n {
            assert_eq!(t.l.get(r, r), &bigrat(1, 1));
            for c in 1..r {
                assert!(t.l.get(r, c).is_zero());
            }
        }
        for r in 1..=n {
            for c in 1..=n {
                if w.permutation(c as u32) as usize != r {
                    assert!(t.c.get(r, c).is_zero());
                } else {
                    assert!(!t.c.get(r, c).is_zero());
                }
            }
        }
        let support = u_w_support(w);
        for r in 1..=n {
            for c in 1..=n {
                if r == c {
                    assert_eq!(t.r.get(r, c), &bigrat(1, 1));
                } else if !t.r.get(r, c).is_zero() {
                    assert!(support.contains(&(r, c)), "R[{r}][{c}] outside U_w");
                }
            }
        }
        assert_eq!(&t.l.mul(&t.c).mul(&t.r), m);
    }

    #[test]
    fn b_alpha_examples() {
        // a = 0 at the simple root of GL_2 gives the signed reflection
        let m: RationalMatrix<BigInt> = b_alpha(2, 2, v(1, 1), 0, &big(0));
        assert_eq!(m.get(1, 1), &bigrat(0, 1));
        assert_eq!(m.get(1, 2), &bigrat(-1, 1));
        assert_eq!(m.get(2, 1), &bigrat(1, 1));
        assert_eq!(m.get(2, 2), &bigrat(0, 1));
        // a = c·p^{−m}
        let m: RationalMatrix<BigInt> = b_alpha(5, 2, v(1, 1), 1, &big(3));
        assert_eq!(m.get(1, 1), &bigrat(1, 3));
        assert_eq!(m.get(1, 2), &bigrat(0, 1));
        assert_eq!(m.get(2, 1), &bigrat(5, 1));
        assert_eq!(m.get(2, 2), &bigrat(3, 1));
        // α_{2,2} in GL_3 embeds at rows/cols 2..3
        let m: RationalMatrix<BigInt> = b_alpha(5, 3, v(2, 2), 1, &big(3));
        assert_eq!(m.get(1, 1), &bigrat(1, 1));
        assert_eq!(m.get(2, 2), &bigrat(1, 3));
        assert_eq!(m.get(3, 2), &bigrat(5, 1));
        assert_eq!(m.get(3, 3), &bigrat(3, 1));
        assert_eq!(m.det(), bigrat(1, 1));
    }

    #[test]
    fn b_alpha_from_scalar() {
        use crate::padic::PadicScalar;
        // a = 3/5 at p = 5 embeds ((1/3, 0), (5, 3)) at rows/cols 2..3
        let a = PadicScalar::from_ratio(5, &bigrat(3, 5)).unwrap();
        let m = b_alpha_scalar(3, v(2, 2), &a);
        assert_eq!(m.get(2, 2), &bigrat(1, 3));
        assert_eq!(m.get(3, 2), &bigrat(5, 1));
        assert_eq!(m.get(3, 3), &bigrat(3, 1));
        // integral a keeps the reflection shape
        let a = PadicScalar::from_ratio(5, &bigrat(7, 1)).unwrap();
        let m = b_alpha_scalar(2, v(1, 1), &a);
        assert_eq!(m.get(1, 2), &bigrat(-1, 1));
        assert_eq!(m.get(2, 2), &bigrat(7, 1));
    }

    #[test]
    fn b_product_gl2_integral() {
        let w = make_admissible(&[1, 1]).unwrap();
        let cell = cell_from_map(3, &w, &[((1, 1), (0, 7))]);
        let m = b_product(&w, &cell);
        assert_eq!(m.get(1, 1), &bigrat(0, 1));
        assert_eq!(m.get(1, 2), &bigrat(-1, 1));
        assert_eq!(m.get(2, 1), &bigrat(1, 1));
        assert_eq!(m.get(2, 2), &bigrat(7, 1));
    }

    #[test]
    fn b_product_lands_in_glzp() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for blocks in compositions(5, 2) {
            let w = make_admissible(&blocks).unwrap();
            for p in [2u64, 3] {
                for _ in 0..10 {
                    let cell = random_cell(p, &w, 3, &mut rng);
                    let m = b_product(&w, &cell);
                    assert!(m.is_p_integral(), "blocks {blocks:?} p={p}");
                    assert_eq!(m.det(), bigrat(1, 1));
                }
            }
        }
    }

    #[test]
    fn factorize_gl2() {
        let w = make_admissible(&[1, 1]).unwrap();
        // integral a: L = I, C = signed reflection, R = ((1, a), (0, 1))
        let cell = cell_from_map(3, &w, &[((1, 1), (0, 4))]);
        let m = b_product(&w, &cell);
        let t = bruhat_factorize(&m, &w).unwrap();
        assert!(t.l.get(1, 2).is_zero());
        assert_eq!(t.c.get(1, 2), &bigrat(-1, 1));
        assert_eq!(t.c.get(2, 1), &bigrat(1, 1));
        assert_eq!(t.r.get(1, 2), &bigrat(4, 1));
        check_triple(&m, &w, &t);
        // a = c·p^{−m}: L_{1,2} = p^{−m}/c, C = ((0, −p^{−m}), (p^m, 0)),
        // R_{1,2} = c·p^{−m}
        let cell = cell_from_map(3, &w, &[((1, 1), (2, 5))]);
        let m = b_product(&w, &cell);
        let t = bruhat_factorize(&m, &w).unwrap();
        assert_eq!(t.l.get(1, 2), &bigrat(1, 45));
        assert_eq!(t.c.get(1, 2), &bigrat(-1, 9));
        assert_eq!(t.c.get(2, 1), &bigrat(9, 1));
        assert_eq!(t.r.get(1, 2), &bigrat(5, 9));
        check_triple(&m, &w, &t);
    }

    #[test]
    fn factorize_s1_s2_product() {
        // blocks (1,2): letters s_1 s_2, roots (1,1), (1,2)
        let w = make_admissible(&[1, 2]).unwrap();
        for (m1, c1, m2, c2) in [(1u32, 1i64, 1u32, 1i64), (2, 3, 1, 2), (0, 4, 2, 7)] {
            let cell = cell_from_map(5, &w, &[((1, 1), (m1, c1)), ((1, 2), (m2, c2))]);
            let m = b_product(&w, &cell);
            let t = bruhat_factorize(&m, &w).unwrap();
            check_triple(&m, &w, &t);
            // L_{1,3} = (c d − 1)·d_{1,2}·p^{−m_{1,2}−m_{1,1}}: zero unless
            // m_{1,1} = 0, in which case it equals −d_{1,2}·p^{−m_{1,2}}
            let expect = if m1 > 0 || m2 == 0 {
                bigrat(0, 1)
            } else {
                -bigrat(1, c2 * 5i64.pow(m2))
            };
            assert_eq!(t.l.get(1, 3), &expect);
            // L_{2,3} = c_{1,1}·d_{1,2}·p^{−m_{1,2}}
            let expect = if m2 == 0 {
                bigrat(0, 1)
            } else {
                bigrat(c1, c2 * 5i64.pow(m2))
            };
            assert_eq!(t.l.get(2, 3), &expect);
        }
    }

    #[test]
    fn not_in_cell_reports_position() {
        // the identity matrix is not in the big cell of the GL_2 reflection
        let w = make_admissible(&[1, 1]).unwrap();
        let m = RationalMatrix::<BigInt>::identity(2, 2);
        assert!(matches!(
            bruhat_factorize(&m, &w),
            Err(Error::NotInCell { .. })
        ));
    }

    #[test]
    fn theorem1_w0_example_entries() {
        // w_0 = blocks (2,3): check the worked formulas at a concrete cell
        let w = make_admissible(&[2, 3]).unwrap();
        let p = 3u64;
        let cell = cell_from_map(
            p,
            &w,
            &[
                ((1, 2), (1, 2)),
                ((1, 3), (1, 1)),
                ((1, 4), (2, 4)),
                ((2, 2), (1, 1)),
                ((2, 3), (0, 5)),
                ((2, 4), (1, 2)),
            ],
        );
        let t = path_formula_entries(&w, &cell).unwrap();
        let m = |i, j| cell.m(v(i, j)) as i64;
        let c = |i, j| Ratio::from_integer(cell.c(v(i, j)).clone());
        let d = |i, j| cell.d_exact(v(i, j));
        let pw = |e: i64| ppow_ratio::<BigInt>(p, e);
        // L_{1,2} = c22 d12 p^{−m12} + c23 d13 p^{−m12−m13+m22}
        //          + c24 d14 p^{−m12−m13−m14+m22+m23}
        let expect = c(2, 2) * d(1, 2) * pw(-m(1, 2))
            + c(2, 3) * d(1, 3) * pw(-m(1, 2) - m(1, 3) + m(2, 2))
            + c(2, 4) * d(1, 4) * pw(-m(1, 2) - m(1, 3) - m(1, 4) + m(2, 2) + m(2, 3));
        assert_eq!(t.l.get(1, 2), &expect);
        // L_{2,3} = Z_{2,1} = d_{2,2}·p^{−m_{2,2}}
        assert_eq!(t.l.get(2, 3), &(d(2, 2) * pw(-m(2, 2))));
        // R_{3,4} = X_{3,1} = c_{1,4}·p^{−m_{1,4}}
        assert_eq!(t.r.get(3, 4), &(c(1, 4) * pw(-m(1, 4))));
        // central factor
        assert_eq!(t.c.get(1, 4), &(-pw(-m(1, 2) - m(1, 3) - m(1, 4))));
        assert_eq!(t.c.get(2, 5), &(-pw(-m(2, 2) - m(2, 3) - m(2, 4))));
        assert_eq!(t.c.get(3, 1), &pw(m(1, 2) + m(2, 2)));
        assert_eq!(t.c.get(4, 2), &pw(m(1, 3) + m(2, 3)));
        assert_eq!(t.c.get(5, 3), &pw(m(1, 4) + m(2, 4)));
        // and the whole triple matches the direct factorization
        let prod = b_product(&w, &cell);
        let direct = bruhat_factorize(&prod, &w).unwrap();
        assert_eq!(t.l, direct.l);
        assert_eq!(t.c, direct.c);
        assert_eq!(t.r, direct.r);
    }

    #[test]
    fn theorem1_random_two_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for blocks in compositions(5, 2) {
            if blocks.len() != 2 {
                continue;
            }
            for p in [2u64, 3] {
                for _ in 0..25 {
                    let w = make_admissible(&blocks).unwrap();
                    let cell = random_cell(p, &w, 3, &mut rng);
                    let prod = b_product(&w, &cell);
                    let direct = bruhat_factorize(&prod, &w).unwrap();
                    check_triple(&prod, &w, &direct);
                    let formula = path_formula_entries(&w, &cell).unwrap();
                    assert_eq!(formula.l, direct.l, "L blocks {blocks:?} p={p}");
                    assert_eq!(formula.c, direct.c, "C blocks {blocks:?} p={p}");
                    assert_eq!(formula.r, direct.r, "R blocks {blocks:?} p={p}");
                }
            }
        }
    }

    #[test]
    fn y_and_w_diagonals_are_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = make_admissible(&[2, 3]).unwrap();
        let cell = random_cell(3, &w, 2, &mut rng);
        let t = path_formula_entries(&w, &cell).unwrap();
        for i in 1..=5 {
            assert_eq!(t.l.get(i, i), &bigrat(1, 1));
        }
    }

    #[test]
    fn theorem3_gl3_long() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = make_admissible(&[1, 1, 1]).unwrap();
        for p in [2u64, 3] {
            for _ in 0..40 {
                let cell = random_cell(p, &w, 3, &mut rng);
                let prod = b_product(&w, &cell);
                let direct = bruhat_factorize(&prod, &w).unwrap();
                let rec = recursion_entries(&w, &cell).unwrap();
                for i in 1..=2usize {
                    assert_eq!(&rec.l_offdiag[i - 1], direct.l.get(i, i + 1), "L off {i}");
                    assert_eq!(&rec.r_offdiag[i - 1], direct.r.get(i, i + 1), "R off {i}");
                }
                assert_eq!(rec.central, direct.c);
            }
        }
    }

    #[test]
    fn theorem3_all_m_zero_adds_offdiagonals() {
        let w = make_admissible(&[1, 1, 1]).unwrap();
        let cell = cell_from_map(
            2,
            &w,
            &[((1, 1), (0, 1)), ((1, 2), (0, 1)), ((2, 2), (0, 1))],
        );
        let rec = recursion_entries(&w, &cell).unwrap();
        let w_prime = make_admissible(&[2, 1]).unwrap();
        let prime = path_formula_entries(&w_prime, &cell.restrict(&w_prime).unwrap()).unwrap();
        let tail = make_admissible(&[1, 1]).unwrap();
        let tail_t = path_formula_entries(&tail, &cell.restrict(&tail).unwrap()).unwrap();
        // with all m = 0 the p-power shifts disappear
        let expect = prime.l.get(1, 2).clone() + tail_t.l.get(1, 2).clone();
        assert_eq!(rec.l_offdiag[0], expect);
    }

    #[test]
    fn theorem3_random_three_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for blocks in compositions(5, 3) {
            if blocks.len() != 3 {
                continue;
            }
            let w = make_admissible(&blocks).unwrap();
            let cap_n = w.dimension() as usize - 1;
            for p in [2u64, 3] {
                for _ in 0..10 {
                    let cell = random_cell(p, &w, 2, &mut rng);
                    let prod = b_product(&w, &cell);
                    let direct = bruhat_factorize(&prod, &w).unwrap();
                    let rec = recursion_entries(&w, &cell).unwrap();
                    for i in 1..=cap_n {
                        assert_eq!(
                            &rec.l_offdiag[i - 1],
                            direct.l.get(i, i + 1),
                            "L off {i} blocks {blocks:?} p={p}"
                        );
                        assert_eq!(
                            &rec.r_offdiag[i - 1],
                            direct.r.get(i, i + 1),
                            "R off {i} blocks {blocks:?} p={p}"
                        );
                    }
                    assert_eq!(rec.central, direct.c, "C blocks {blocks:?} p={p}");
                }
            }
        }
    }

    #[test]
    fn recursion_rejects_two_block() {
        let w = make_admissible(&[2, 3]).unwrap();
        let cell = cell_from_map(
            2,
            &w,
            &[
                ((1, 2), (0, 0)),
                ((1, 3), (0, 0)),
                ((1, 4), (0, 0)),
                ((2, 2), (0, 0)),
                ((2, 3), (0, 0)),
                ((2, 4), (0, 0)),
            ],
        );
        assert!(matches!(
            recursion_entries(&w, &cell),
            Err(Error::TooFewBlocks { .. })
        ));
    }
}
