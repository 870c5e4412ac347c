//! Admissible Weyl elements of GL(N+1): block anti-diagonal permutations,
//! their fixed reduced expression, lengths, and the index set I_w.

use num::One;

use crate::error::{Error, Result};
use crate::padic::{ExactInt, RationalMatrix};

/// A vertex (i, j) of the index set I_w, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub i: u32,
    pub j: u32,
}

impl Vertex {
    pub fn new(i: u32, j: u32) -> Self {
        Vertex { i, j }
    }
}

impl std::fmt::Display for Vertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// An ordered composition k_1, …, k_n of N+1 into positive blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockComposition {
    blocks: Vec<u32>,
}

impl BlockComposition {
    pub fn new(blocks: Vec<u32>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptyBlocks);
        }
        if blocks.contains(&0) {
            return Err(Error::ZeroBlock);
        }
        Ok(BlockComposition { blocks })
    }

    pub fn blocks(&self) -> &[u32] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// N+1 = Σ k_a.
    pub fn dimension(&self) -> u32 {
        self.blocks.iter().sum()
    }

    /// κ_l = k_1 + … + k_l, with κ_0 = 0.
    pub fn kappa(&self, l: usize) -> u32 {
        self.blocks[..l].iter().sum()
    }
}

/// The treatment of a path endpoint in the two-block entry formulas: each
/// rule fixes the virtual edge directions at the first and last vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointRule {
    /// First vertex: incoming from below; last vertex: outgoing right.
    X,
    /// First vertex: incoming from the left; last vertex: outgoing right.
    Y,
    /// First vertex: incoming from below; last vertex: outgoing left.
    Z,
    /// First vertex: incoming from below; last vertex: outgoing upwards.
    W,
}

/// An admissible Weyl element: identity blocks on the anti-diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeylElement {
    comp: BlockComposition,
    /// Simple-reflection indices of the fixed reduced expression (1-based).
    letters: Vec<u32>,
    /// γ_t in coordinates (i, j): the root sent negative by the prefix ending
    /// at letter t; the vertex order of the index set.
    gamma: Vec<Vertex>,
    /// Permutation: perm[c-1] = r means column c maps to row r (1-based).
    perm: Vec<u32>,
    /// Signed representative entries (0, ±1), row-major.
    signed: Vec<i8>,
}

fn runs(k1: u32, dim: u32) -> Vec<u32> {
    // (s_{k1} … s_{N}) ∘ (s_{k1−1} … s_{N−1}) ∘ … ∘ (s_1 … s_{N+1−k1})
    let mut out = Vec::new();
    for j in 1..=k1 {
        for s in (k1 + 1 - j)..=(dim - j) {
            out.push(s);
        }
    }
    out
}

fn expression(blocks: &[u32]) -> Vec<u32> {
    if blocks.len() <= 1 {
        return Vec::new();
    }
    let dim: u32 = blocks.iter().sum();
    let k1 = blocks[0];
    let mut expr: Vec<u32> = expression(&blocks[1..]).iter().map(|s| s + k1).collect();
    expr.extend(runs(k1, dim));
    expr
}

impl WeylElement {
    pub fn composition(&self) -> &BlockComposition {
        &self.comp
    }

    pub fn dimension(&self) -> u32 {
        self.comp.dimension()
    }

    /// l(w) = Σ_{a<b} k_a k_b.
    pub fn length(&self) -> u64 {
        let b = self.comp.blocks();
        let mut l = 0u64;
        for a in 0..b.len() {
            for c in (a + 1)..b.len() {
                l += b[a] as u64 * b[c] as u64;
            }
        }
        l
    }

    /// The fixed reduced expression as simple-reflection indices.
    pub fn reduced_expression(&self) -> &[u32] {
        &self.letters
    }

    /// γ_1, …, γ_{l(w)}: the index-set vertices in expression order.
    pub fn gamma_order(&self) -> &[Vertex] {
        &self.gamma
    }

    /// Position of vertex v in the γ order.
    pub fn gamma_position(&self, v: Vertex) -> Option<usize> {
        self.gamma.iter().position(|&g| g == v)
    }

    /// perm maps column c to row perm(c) (both 1-based).
    pub fn permutation(&self, col: u32) -> u32 {
        self.perm[(col - 1) as usize]
    }

    /// The permutation matrix (entries 0/1).
    pub fn permutation_matrix<I: ExactInt>(&self, p: u64) -> RationalMatrix<I> {
        let n = self.dimension() as usize;
        let mut m = RationalMatrix::zero(p, n);
        for c in 1..=n as u32 {
            m.set(
                self.permutation(c) as usize,
                c as usize,
                num::rational::Ratio::one(),
            );
        }
        m
    }

    /// The determinant-one representative: the product of the s_i matrices
    /// over the fixed reduced expression.
    pub fn signed_matrix<I: ExactInt>(&self, p: u64) -> RationalMatrix<I> {
        let n = self.dimension() as usize;
        let mut m = RationalMatrix::zero(p, n);
        for r in 1..=n {
            for c in 1..=n {
                let v = self.signed[(r - 1) * n + (c - 1)];
                if v != 0 {
                    m.set(
                        r,
                        c,
                        num::rational::Ratio::from_integer(I::from_i8(v).unwrap()),
                    );
                }
            }
        }
        m
    }

    /// The per-level subsets I_l = {(i,j): 1 ≤ i ≤ κ_l ≤ j ≤ κ_{l+1}−1};
    /// empty for a single-block element.
    pub fn index_levels(&self) -> Vec<Vec<Vertex>> {
        let n = self.comp.n_blocks();
        let mut levels = Vec::new();
        for l in 1..n {
            let kl = self.comp.kappa(l);
            let kl1 = self.comp.kappa(l + 1);
            let mut set = Vec::new();
            for i in 1..=kl {
                for j in kl..=(kl1 - 1) {
                    set.push(Vertex::new(i, j));
                }
            }
            levels.push(set);
        }
        levels
    }

    /// Union of the I_l in γ order.
    pub fn index_set(&self) -> &[Vertex] {
        &self.gamma
    }

    /// The level l with (i,j) ∈ I_l, i.e. the unique l with κ_l ≤ j < κ_{l+1}.
    pub fn level_of(&self, v: Vertex) -> Option<usize> {
        for l in 1..self.comp.n_blocks() {
            if self.comp.kappa(l) <= v.j && v.j < self.comp.kappa(l + 1) {
                return if v.i <= self.comp.kappa(l) { Some(l) } else { None };
            }
        }
        None
    }

    /// Splits off the top two blocks: returns (w′ with the merged top block,
    /// k = size of the top block, n+1 = combined size of the top two blocks,
    /// f = size of the third block).
    pub fn factor_top_blocks(&self) -> Result<(WeylElement, u32, u32, u32)> {
        let b = self.comp.blocks();
        if b.len() < 3 {
            return Err(Error::TooFewBlocks {
                needed: 3,
                got: b.len(),
            });
        }
        let k = b[0];
        let combined = b[0] + b[1];
        let f = b[2];
        let mut merged = vec![combined];
        merged.extend_from_slice(&b[2..]);
        Ok((make_admissible(&merged)?, k, combined, f))
    }

    /// The admissible element of the reversed composition (the inverse
    /// permutation).
    pub fn inverse(&self) -> WeylElement {
        let mut rev: Vec<u32> = self.comp.blocks().to_vec();
        rev.reverse();
        make_admissible(&rev).expect("reversed composition is valid")
    }
}

/// Builds the admissible Weyl element with anti-diagonal identity blocks
/// I_{k_1}, …, I_{k_n} (top-right first).
pub fn make_admissible(blocks: &[u32]) -> Result<WeylElement> {
    let comp = BlockComposition::new(blocks.to_vec())?;
    let dim = comp.dimension();
    let n = comp.n_blocks();

    // permutation: block a occupies rows κ_{a−1}+1..κ_a and columns
    // N+2−κ_a..N+1−κ_{a−1}
    let mut perm = vec![0u32; dim as usize];
    for a in 1..=n {
        let row_lo = comp.kappa(a - 1) + 1;
        let col_lo = dim - comp.kappa(a) + 1;
        for off in 0..comp.blocks()[a - 1] {
            perm[(col_lo + off - 1) as usize] = row_lo + off;
        }
    }

    let letters = expression(comp.blocks());

    // γ_t = (prefix permutation)(α_{i_t}) tracked as root e_a − e_b
    let mut gamma = Vec::with_capacity(letters.len());
    let mut pre: Vec<u32> = (1..=dim).collect(); // pre[x-1] = image of x
    for &s in &letters {
        let a = pre[(s - 1) as usize];
        let b = pre[s as usize];
        debug_assert!(a < b, "prefix keeps the letter root positive");
        gamma.push(Vertex::new(a, b - 1));
        pre.swap((s - 1) as usize, s as usize);
    }

    // signed representative: product of s_i matrices over the expression
    let nd = dim as usize;
    let mut signed = vec![0i8; nd * nd];
    for d in 0..nd {
        signed[d * nd + d] = 1;
    }
    for &s in &letters {
        // right-multiply by s_s: acts on columns s, s+1:
        // new col_s = old col_{s+1} * ... ; s_i = [[0,-1],[1,0]] at (s, s+1)
        let (cs, cs1) = ((s - 1) as usize, s as usize);
        for r in 0..nd {
            let a = signed[r * nd + cs];
            let b = signed[r * nd + cs1];
            // (row)·s: col_s' = b·1 = b, col_{s+1}' = a·(−1)
            signed[r * nd + cs] = b;
            signed[r * nd + cs1] = -a;
        }
    }

    let w = WeylElement {
        comp,
        letters,
        gamma,
        perm,
        signed,
    };
    debug_assert_eq!(w.gamma.len() as u64, w.length());
    Ok(w)
}

/// All compositions of `dim` into at least `min_blocks` ordered parts.
pub fn compositions(dim: u32, min_blocks: usize) -> Vec<Vec<u32>> {
    fn rec(rest: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for k in 1..=rest {
            cur.push(k);
            rec(rest - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, &mut Vec::new(), &mut out);
    out.retain(|c| c.len() >= min_blocks);
    out
}
