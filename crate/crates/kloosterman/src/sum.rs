//! Parametrized evaluation of the generalized Kloosterman sums: moduli
//! assignments and representative spaces, the edge-formula phase engine,
//! reference sums (classical and hyper-Kloosterman), the Γ0(q) variant, and
//! the scaling identity check.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use num::One;
use rayon::prelude::*;

use crate::cyclotomic::{CharArg, CyclotomicValue};
use crate::diagram::{build_diagram, Diagram};
use crate::error::{Error, Result};
use crate::padic::mod_inverse_u64;
use crate::weyl::{Vertex, WeylElement};

/// Default cap on the number of phase evaluations in one call.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// The twisting characters ψ and ψ′, one integer per simple root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterPair {
    pub psi: Vec<i64>,
    pub psi_prime: Vec<i64>,
}

impl CharacterPair {
    pub fn new(psi: Vec<i64>, psi_prime: Vec<i64>) -> Self {
        CharacterPair { psi, psi_prime }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.psi.len() != n {
            return Err(Error::BadCharacterVector {
                expected: n,
                got: self.psi.len(),
            });
        }
        if self.psi_prime.len() != n {
            return Err(Error::BadCharacterVector {
                expected: n,
                got: self.psi_prime.len(),
            });
        }
        Ok(())
    }

    /// The data transform of the Γ0(q) reduction: reverse and negate both
    /// character vectors.
    pub fn gamma0_transform(&self) -> CharacterPair {
        let flip = |v: &[i64]| -> Vec<i64> { v.iter().rev().map(|&x| -x).collect() };
        CharacterPair {
            psi: flip(&self.psi),
            psi_prime: flip(&self.psi_prime),
        }
    }
}

/// A moduli assignment m ∈ M_w(r): one nonnegative integer per vertex with
/// the level sums pinned to the exponent vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<Vertex, u32>,
}

impl Assignment {
    pub fn from_map(values: BTreeMap<Vertex, u32>) -> Self {
        Assignment { values }
    }

    pub fn m(&self, v: Vertex) -> u32 {
        self.values[&v]
    }

    pub fn get(&self, v: Vertex) -> Option<u32> {
        self.values.get(&v).copied()
    }

    /// Values listed in the γ order of `w`.
    pub fn gamma_vec(&self, w: &WeylElement) -> Vec<u32> {
        w.gamma_order().iter().map(|&v| self.values[&v]).collect()
    }

    /// κ(m): the number of nonzero entries.
    pub fn kappa(&self) -> u32 {
        self.values.values().filter(|&&m| m > 0).count() as u32
    }

    pub fn total(&self) -> u32 {
        self.values.values().sum()
    }
}

/// All solutions of the level constraints Σ_{i≤l≤j} m_{i,j} = r_l, in
/// lexicographic order of the γ-ordered value vector.
pub fn moduli_assignments(w: &WeylElement, r: &[u32]) -> Result<Vec<Assignment>> {
    let n = w.dimension() as usize - 1;
    if r.len() != n {
        return Err(Error::BadExponentVector {
            expected: n,
            got: r.len(),
        });
    }
    let order = w.gamma_order().to_vec();
    // level l is finished after the last γ position whose vertex covers it
    let mut last_pos = vec![usize::MAX; n + 1];
    for (t, v) in order.iter().enumerate() {
        for l in v.i..=v.j {
            last_pos[l as usize] = t;
        }
    }
    let mut remaining: Vec<i64> = std::iter::once(0)
        .chain(r.iter().map(|&x| x as i64))
        .collect();
    let mut out = Vec::new();
    let mut current: Vec<u32> = Vec::with_capacity(order.len());

    fn rec(
        order: &[Vertex],
        last_pos: &[usize],
        remaining: &mut [i64],
        current: &mut Vec<u32>,
        out: &mut Vec<Assignment>,
    ) {
        let t = current.len();
        if t == order.len() {
            if remaining.iter().all(|&x| x == 0) {
                let values = order
                    .iter()
                    .zip(current.iter())
                    .map(|(&v, &m)| (v, m))
                    .collect();
                out.push(Assignment::from_map(values));
            }
            return;
        }
        let v = order[t];
        let cap = (v.i..=v.j)
            .map(|l| remaining[l as usize])
            .min()
            .unwrap_or(0)
            .max(0) as u32;
        for m in 0..=cap {
            for l in v.i..=v.j {
                remaining[l as usize] -= m as i64;
            }
            // levels no later vertex covers must be exhausted now
            let ok = (1..remaining.len())
                .all(|l| last_pos[l] != t || remaining[l] == 0);
            if ok {
                current.push(m);
                rec(order, last_pos, remaining, current, out);
                current.pop();
            }
            for l in v.i..=v.j {
                remaining[l as usize] += m as i64;
            }
        }
    }
    rec(&order, &last_pos, &mut remaining, &mut current, &mut out);
    Ok(out)
}

/// The cell moduli C_{i,j} = p^{M_{i,j}} recorded through their exponents.
#[derive(Debug, Clone)]
pub struct CellModuli {
    exponents: BTreeMap<Vertex, u32>,
}

impl CellModuli {
    pub fn exponent(&self, v: Vertex) -> u32 {
        self.exponents[&v]
    }

    pub fn modulus(&self, v: Vertex, p: u64) -> u64 {
        p.pow(self.exponents[&v])
    }
}

/// M_{i,j} = Σ_{a≤i} m_{a,j} + Σ_{a>j, within the block} m_{i,a}.
pub fn cell_moduli(w: &WeylElement, m: &Assignment) -> CellModuli {
    let mut exponents = BTreeMap::new();
    for &v in w.gamma_order() {
        let l = w.level_of(v).expect("vertex has a level");
        let col_end = w.composition().kappa(l + 1) - 1;
        let mut e = 0u32;
        for a in 1..=v.i {
            e += m.m(Vertex::new(a, v.j));
        }
        for a in (v.j + 1)..=col_end {
            e += m.m(Vertex::new(v.i, a));
        }
        exponents.insert(v, e);
    }
    CellModuli { exponents }
}

/// |C_w(m)|: the number of representative tuples.
pub fn representative_count(w: &WeylElement, m: &Assignment, p: u64) -> u128 {
    let cm = cell_moduli(w, m);
    let mut count: u128 = 1;
    for &v in w.gamma_order() {
        let size = p.pow(cm.exponent(v)) as u128;
        if m.m(v) > 0 {
            count *= size - size / p as u128;
        } else {
            count *= size;
        }
    }
    count
}

/// Streams the representative tuples of C_w(m) in lexicographic γ order.
pub struct RepresentativeIter {
    /// (modulus, coprime-to-p required) per γ position.
    ranges: Vec<(u64, bool)>,
    p: u64,
    state: Vec<u64>,
    done: bool,
}

impl RepresentativeIter {
    fn first_valid(&self, idx: usize) -> u64 {
        if self.ranges[idx].1 {
            1
        } else {
            0
        }
    }

    fn advance_slot(&mut self, idx: usize) -> bool {
        loop {
            self.state[idx] += 1;
            if self.state[idx] >= self.ranges[idx].0 {
                return false;
            }
            if !self.ranges[idx].1 || !self.state[idx].is_multiple_of(self.p) {
                return true;
            }
        }
    }
}

impl Iterator for RepresentativeIter {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        let item = self.state.clone();
        let mut idx = self.ranges.len();
        loop {
            if idx == 0 {
                self.done = true;
                break;
            }
            idx -= 1;
            if self.advance_slot(idx) {
                for later in (idx + 1)..self.ranges.len() {
                    self.state[later] = self.first_valid(later);
                }
                break;
            }
        }
        Some(item)
    }
}

/// Iterator over all c-tuples of C_w(m), γ-ordered coordinates.
pub fn representative_space(w: &WeylElement, m: &Assignment, p: u64) -> RepresentativeIter {
    let cm = cell_moduli(w, m);
    let ranges: Vec<(u64, bool)> = w
        .gamma_order()
        .iter()
        .map(|&v| (p.pow(cm.exponent(v)), m.m(v) > 0))
        .collect();
    let state: Vec<u64> = ranges
        .iter()
        .map(|&(_, coprime)| if coprime { 1 } else { 0 })
        .collect();
    // a coprimality constraint with modulus 1 admits no value
    let done = ranges.iter().any(|&(modulus, coprime)| coprime && modulus <= 1);
    RepresentativeIter {
        ranges,
        p,
        state,
        done,
    }
}

/// One additive term of the parametrized phase:
/// χ·c_{src}·d_{dst}·p^{exponent}, missing endpoints contributing one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseTerm {
    pub number: u32,
    pub dotted: bool,
    pub src: Option<Vertex>,
    pub dst: Option<Vertex>,
    pub exponent: i64,
}

/// The full term list of the edge formula for (w, m): one term per directed
/// edge, exponents resolved from the ordered edge sets.
pub fn edge_formula_terms(diagram: &Diagram, m: &Assignment) -> Vec<PhaseTerm> {
    let sets = diagram.edge_sets();
    let mval = |v: Option<Vertex>| -> i64 { v.map(|v| m.m(v) as i64).unwrap_or(0) };
    let mut terms = Vec::new();
    for (&number, edges) in &sets.plain {
        let mut shift: i64 = 0;
        for e in edges {
            terms.push(PhaseTerm {
                number,
                dotted: false,
                src: e.src,
                dst: e.dst,
                exponent: -mval(e.dst) + shift,
            });
            shift += mval(e.src) - mval(e.dst);
        }
    }
    for (&number, edges) in &sets.dotted {
        let mut shift: i64 = 0;
        for e in edges {
            terms.push(PhaseTerm {
                number,
                dotted: true,
                src: e.src,
                dst: e.dst,
                exponent: -mval(e.src) + shift,
            });
            shift += mval(e.dst) - mval(e.src);
        }
    }
    terms
}

/// The same term list read off the block-structured closed formula (four
/// sums per block level); an independent route used by cross-check tests.
pub fn block_formula_terms(w: &WeylElement, m: &Assignment) -> Vec<PhaseTerm> {
    let n_blocks = w.composition().n_blocks();
    let cap_n = w.dimension() - 1;
    let kappa = |l: usize| w.composition().kappa(l);
    let mm = |i: u32, j: u32| m.m(Vertex::new(i, j)) as i64;
    let mut terms = Vec::new();
    for q in 1..n_blocks {
        let kq = kappa(q);
        let kq1 = kappa(q + 1);
        // vertical edges: ψ_i terms c_{i+1,j}·d_{i,j}
        for i in 1..kq {
            for j in kq..=(kq1 - 1) {
                let mut e = -mm(i, j);
                for l in kq..j {
                    e += mm(i + 1, l) - mm(i, l);
                }
                for l in kq1..=cap_n {
                    e += mm(i + 1, l) - mm(i, l);
                }
                terms.push(PhaseTerm {
                    number: i,
                    dotted: false,
                    src: Some(Vertex::new(i + 1, j)),
                    dst: Some(Vertex::new(i, j)),
                    exponent: e,
                });
            }
        }
        // entry term: ψ_{κ_q} with the formal inverse d_{κ_q,κ_q}
        {
            let mut e = -mm(kq, kq);
            for l in kq1..=cap_n {
                e += mm(kq + 1, l) - mm(kq, l);
            }
            terms.push(PhaseTerm {
                number: kq,
                dotted: false,
                src: None,
                dst: Some(Vertex::new(kq, kq)),
                exponent: e,
            });
        }
        // horizontal edges: ψ_j terms c_{i,j−1}·d_{i,j}
        for j in (kq + 1)..=(kq1 - 1) {
            for i in 1..=kq {
                let mut e = -mm(i, j);
                for l in (i + 1)..=kq {
                    e += mm(l, j - 1) - mm(l, j);
                }
                for l in kq1..=cap_n {
                    e += mm(j + 1, l) - mm(j, l);
                }
                terms.push(PhaseTerm {
                    number: j,
                    dotted: false,
                    src: Some(Vertex::new(i, j - 1)),
                    dst: Some(Vertex::new(i, j)),
                    exponent: e,
                });
            }
        }
        // dotted terms: ψ′_{N+1−κ_q} with c_{i,κ_{q+1}−1}·d_{i,κ_{q−1}}
        let kprev = kappa(q - 1);
        for i in 1..=(kprev + 1) {
            let mut e = -mm(i, kq1 - 1);
            for jj in 1..i {
                e += mm(jj, kprev) - mm(jj, kq1 - 1);
            }
            terms.push(PhaseTerm {
                number: cap_n + 1 - kq,
                dotted: true,
                src: Some(Vertex::new(i, kq1 - 1)),
                dst: if i <= kprev {
                    Some(Vertex::new(i, kprev))
                } else {
                    None
                },
                exponent: e,
            });
        }
    }
    terms
}

struct ActiveTerm {
    src_slot: Option<usize>,
    dst_slot: Option<usize>,
    /// (χ mod p^K)·p^{K−denominator} mod p^K.
    chi_scale: u64,
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// The exact value of one parametrized cell sum with its representative
/// count.
#[derive(Debug, Clone)]
pub struct CellSum {
    pub value: CyclotomicValue,
    pub count: u128,
}

/// Evaluates Kl_p(m, ψ, ψ′, w) by the edge formula, exactly.
pub fn evaluate_cell_sum(
    w: &WeylElement,
    p: u64,
    m: &Assignment,
    chars: &CharacterPair,
    budget: u128,
) -> Result<CellSum> {
    let diagram = build_diagram(w)?;
    evaluate_cell_sum_with(w, &diagram, p, m, chars, budget)
}

fn evaluate_cell_sum_with(
    w: &WeylElement,
    diagram: &Diagram,
    p: u64,
    m: &Assignment,
    chars: &CharacterPair,
    budget: u128,
) -> Result<CellSum> {
    chars.check(w.dimension() as usize - 1)?;
    let count = representative_count(w, m, p);
    if count > budget {
        return Err(Error::BudgetExceeded {
            required: count,
            budget,
        });
    }
    let terms = edge_formula_terms(diagram, m);

    // keep the terms that can contribute a nontrivial phase
    let mut active: Vec<(PhaseTerm, i64, u32)> = Vec::new();
    let mut k_level: u32 = 0;
    for t in &terms {
        let chi = if t.dotted {
            chars.psi_prime[(t.number - 1) as usize]
        } else {
            chars.psi[(t.number - 1) as usize]
        };
        if chi == 0 || t.exponent >= 0 {
            continue;
        }
        let denom = (-t.exponent) as u32;
        // a character coefficient divisible by p^denom leaves the term integral
        let mut reduced = chi.unsigned_abs();
        let mut val = 0u32;
        while val < denom && reduced % p == 0 {
            reduced /= p;
            val += 1;
        }
        if val >= denom {
            continue;
        }
        k_level = k_level.max(denom);
        active.push((t.clone(), chi, denom));
    }

    if active.is_empty() {
        let whole = i64::try_from(count)
            .map_err(|_| Error::Precondition("cell count exceeds i64".into()))?;
        let value = CyclotomicValue::one(p).scale(whole);
        return Ok(CellSum { value, count });
    }

    if (k_level as f64) * (p as f64).log2() > 62.0 {
        return Err(Error::Precondition(format!(
            "character modulus {p}^{k_level} does not fit u64"
        )));
    }
    let pk = p.pow(k_level);

    // slots: vertices that actually enter the phase, in γ order
    let order = w.gamma_order();
    let cm = cell_moduli(w, m);
    let mut needed: HashMap<Vertex, bool> = HashMap::new();
    for (t, _, _) in &active {
        if let Some(s) = t.src {
            needed.insert(s, true);
        }
        if let Some(d) = t.dst {
            if m.m(d) > 0 {
                needed.insert(d, true);
            }
        }
    }
    let mut slot_of: HashMap<Vertex, usize> = HashMap::new();
    let mut slots: Vec<Vertex> = Vec::new();
    for &v in order {
        if needed.contains_key(&v) {
            slot_of.insert(v, slots.len());
            slots.push(v);
        }
    }

    // vertices that never enter the phase contribute a plain multiplicity
    let mut free_mult: u128 = 1;
    for &v in order {
        if !slot_of.contains_key(&v) {
            let size = p.pow(cm.exponent(v)) as u128;
            free_mult *= if m.m(v) > 0 {
                size - size / p as u128
            } else {
                size
            };
        }
    }

    // value lists per slot; ranges larger than p^K are compressed to
    // residues with uniform multiplicity
    let slot_values: Vec<Vec<(u64, u64, u64)>> = slots
        .iter()
        .map(|&v| {
            let me = cm.exponent(v);
            let coprime = m.m(v) > 0;
            let span = me.min(k_level);
            let mult = p.pow(me - span);
            let modulus = p.pow(span);
            let mut values = Vec::new();
            for c in 0..modulus {
                if coprime && c % p == 0 {
                    continue;
                }
                let d = if coprime {
                    mod_inverse_u64(c % pk, pk).expect("unit has an inverse")
                } else {
                    0
                };
                values.push((c % pk, d, mult));
            }
            values
        })
        .collect();
    if slot_values.iter().any(|v| v.is_empty()) {
        // a coprime slot with modulus ≤ 1 admits no representative
        return Ok(CellSum {
            value: CyclotomicValue::zero(p, 0),
            count: 0,
        });
    }

    let active_terms: Vec<ActiveTerm> = active
        .iter()
        .map(|(t, chi, denom)| {
            let chi_mod = chi.rem_euclid(pk as i64) as u64;
            let scale = p.pow(k_level - *denom);
            ActiveTerm {
                src_slot: t.src.map(|s| slot_of[&s]),
                dst_slot: t.dst.and_then(|d| slot_of.get(&d).copied()),
                chi_scale: mulmod(chi_mod, scale, pk),
            }
        })
        .collect();

    fn rec(
        slot_values: &[Vec<(u64, u64, u64)>],
        terms: &[ActiveTerm],
        pk: u64,
        prefix: &mut Vec<(u64, u64)>,
        weight: u64,
        acc: &mut HashMap<u64, i64>,
    ) {
        let idx = prefix.len();
        if idx == slot_values.len() {
            let mut residue: u64 = 0;
            for t in terms {
                let c = t.src_slot.map(|s| prefix[s].0).unwrap_or(1);
                let d = match t.dst_slot {
                    Some(s) => prefix[s].1,
                    None => 1,
                };
                let term = mulmod(mulmod(t.chi_scale, c, pk), d, pk);
                residue = (residue + term) % pk;
            }
            *acc.entry(residue).or_insert(0) += weight as i64;
            return;
        }
        for &(c, d, mult) in &slot_values[idx] {
            prefix.push((c, d));
            rec(slot_values, terms, pk, prefix, weight * mult, acc);
            prefix.pop();
        }
    }

    // parallel over the outermost γ coordinate; integer merges commute, so
    // the combined map is deterministic
    let maps: Vec<HashMap<u64, i64>> = slot_values[0]
        .par_iter()
        .map(|&(c, d, mult)| {
            let mut acc = HashMap::new();
            let mut prefix = vec![(c, d)];
            rec(&slot_values, &active_terms, pk, &mut prefix, mult, &mut acc);
            acc
        })
        .collect();

    let free = i64::try_from(free_mult)
        .map_err(|_| Error::Precondition("free multiplier exceeds i64".into()))?;
    let mut combined: HashMap<u64, i64> = HashMap::new();
    for map in maps {
        for (t, n) in map {
            *combined.entry(t).or_insert(0) += n;
        }
    }
    let mut value = CyclotomicValue::zero(p, k_level);
    for (t, n) in combined {
        let mut single = CyclotomicValue::zero(p, k_level);
        single.accumulate(CharArg::new(p, k_level, t))?;
        value = value.add(&single.scale(n * free))?;
    }
    Ok(CellSum { value, count })
}

/// Per-assignment breakdown of a full sum.
#[derive(Debug, Clone)]
pub struct AssignmentResult {
    pub m: Vec<u32>,
    pub count: u128,
    pub value: CyclotomicValue,
    pub magnitude: f64,
    pub magnitude_error: f64,
}

/// The result of a full sum evaluation.
#[derive(Debug, Clone)]
pub struct SumResult {
    pub p: u64,
    pub blocks: Vec<u32>,
    pub r: Vec<u32>,
    pub psi: Vec<i64>,
    pub psi_prime: Vec<i64>,
    pub level: Option<u32>,
    pub value: CyclotomicValue,
    pub magnitude: f64,
    pub magnitude_error: f64,
    pub cell_count: u128,
    pub assignments: Vec<AssignmentResult>,
    pub elapsed_ms: u64,
}

impl SumResult {
    /// Stable JSON record (coefficients sparse and sorted by index).
    pub fn to_json(&self) -> serde_json::Value {
        let coeffs: Vec<serde_json::Value> = self
            .value
            .sparse_coeffs()
            .into_iter()
            .map(|(t, n)| serde_json::json!([t, n]))
            .collect();
        let assignments: Vec<serde_json::Value> = self
            .assignments
            .iter()
            .map(|a| {
                serde_json::json!({
                    "m": a.m,
                    "count": a.count.to_string(),
                    "coefficients": a
                        .value
                        .sparse_coeffs()
                        .into_iter()
                        .map(|(t, n)| serde_json::json!([t, n]))
                        .collect::<Vec<_>>(),
                    "magnitude": a.magnitude,
                    "magnitude_error": a.magnitude_error,
                })
            })
            .collect();
        serde_json::json!({
            "schema": 1,
            "p": self.p,
            "blocks": self.blocks,
            "r": self.r,
            "psi": self.psi,
            "psi_prime": self.psi_prime,
            "level": self.level,
            "modulus_exponent": self.value.level(),
            "value_coefficients": coeffs,
            "magnitude": self.magnitude,
            "magnitude_error": self.magnitude_error,
            "cell_count": self.cell_count.to_string(),
            "assignments": assignments,
            "elapsed_ms": self.elapsed_ms,
        })
    }

    /// CSV table, one row per assignment.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,blocks,r,m,count,magnitude,magnitude_error\n");
        let join = |v: &[u32]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        for a in &self.assignments {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.p,
                join(&self.blocks),
                join(&self.r),
                join(&a.m),
                a.count,
                a.magnitude,
                a.magnitude_error
            ));
        }
        out
    }
}

fn finish_sum(
    w: &WeylElement,
    p: u64,
    r: &[u32],
    chars: &CharacterPair,
    level: Option<u32>,
    assignments: Vec<(Assignment, CellSum)>,
    started: Instant,
) -> Result<SumResult> {
    let mut total = CyclotomicValue::zero(p, 0);
    let mut cell_count: u128 = 0;
    let mut breakdown = Vec::new();
    for (m, cs) in &assignments {
        total = total.add(&cs.value)?;
        cell_count += cs.count;
        let (mag, err) = cs.value.magnitude();
        breakdown.push(AssignmentResult {
            m: m.gamma_vec(w),
            count: cs.count,
            value: cs.value.clone(),
            magnitude: mag,
            magnitude_error: err,
        });
    }
    let (magnitude, magnitude_error) = total.magnitude();
    Ok(SumResult {
        p,
        blocks: w.composition().blocks().to_vec(),
        r: r.to_vec(),
        psi: chars.psi.clone(),
        psi_prime: chars.psi_prime.clone(),
        level,
        value: total,
        magnitude,
        magnitude_error,
        cell_count,
        assignments: breakdown,
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}

/// Kl_p(ψ, ψ′, fc·w) = Σ_{m ∈ M_w(r)} Kl_p(m, ψ, ψ′, w), exactly.
pub fn evaluate_sum(
    w: &WeylElement,
    p: u64,
    r: &[u32],
    chars: &CharacterPair,
    budget: u128,
) -> Result<SumResult> {
    let started = Instant::now();
    if w.composition().n_blocks() < 2 {
        return Err(Error::SingleBlock);
    }
    chars.check(w.dimension() as usize - 1)?;
    let assignments = moduli_assignments(w, r)?;
    let total: u128 = assignments
        .iter()
        .map(|m| representative_count(w, m, p))
        .sum();
    if total > budget {
        return Err(Error::BudgetExceeded {
            required: total,
            budget,
        });
    }
    let diagram = build_diagram(w)?;
    let mut evaluated = Vec::new();
    for m in assignments {
        let cs = evaluate_cell_sum_with(w, &diagram, p, &m, chars, budget)?;
        evaluated.push((m, cs));
    }
    finish_sum(w, p, r, chars, None, evaluated, started)
}

/// (w_l·A·w_l)^T for the long permutation w_l: the anti-transpose.
fn anti_transpose(m: &crate::padic::RationalMatrix<num::BigInt>) -> crate::padic::RationalMatrix<num::BigInt> {
    let n = m.dim();
    let mut out = crate::padic::RationalMatrix::zero(m.prime(), n);
    for i in 1..=n {
        for j in 1..=n {
            out.set(i, j, m.get(n + 1 - j, n + 1 - i).clone());
        }
    }
    out
}

/// The Γ0(p^level) sum: transform the data (reverse/negate characters,
/// reverse the exponent vector, invert the Weyl element, absorb the sign
/// difference of the representatives) and restrict the moduli sum to
/// m ≥ level at the vertex carrying the unique s_1 letter.
pub fn evaluate_sum_gamma0(
    w: &WeylElement,
    p: u64,
    r: &[u32],
    chars: &CharacterPair,
    level: u32,
    budget: u128,
) -> Result<SumResult> {
    let started = Instant::now();
    if w.composition().n_blocks() < 2 {
        return Err(Error::SingleBlock);
    }
    let cap_n = w.dimension() as usize - 1;
    chars.check(cap_n)?;
    let w_inv = w.inverse();
    let r_rev: Vec<u32> = r.iter().rev().copied().collect();
    let mut t_chars = chars.gamma0_transform();
    // the transformed modulus ((fc·w)^{T_w})^{−1} differs from the standard
    // form fc̃·w̃ of the inverted element by a ±1 diagonal D determined by
    // the fixed signed representatives; pulling D out of the coset twists
    // the right character entries by s_i = D_i·D_{i+1}
    {
        let original = crate::oracle::modulus_matrix(w, p, r)?;
        let transformed = anti_transpose(&original).inverse();
        let base = crate::oracle::modulus_matrix(&w_inv, p, &r_rev)?;
        let d = base.inverse().mul(&transformed);
        for i in 1..=cap_n {
            let di = d.get(i, i).clone();
            let dj = d.get(i + 1, i + 1).clone();
            let s = di * dj;
            if s == -num::rational::Ratio::one() {
                t_chars.psi_prime[i - 1] = -t_chars.psi_prime[i - 1];
            } else {
                debug_assert!(s == num::rational::Ratio::one());
            }
        }
    }
    let s1_pos = w_inv
        .reduced_expression()
        .iter()
        .position(|&s| s == 1)
        .expect("every admissible element has exactly one s_1 letter");
    let pivot = w_inv.gamma_order()[s1_pos];
    let assignments: Vec<Assignment> = moduli_assignments(&w_inv, &r_rev)?
        .into_iter()
        .filter(|m| m.m(pivot) >= level)
        .collect();
    let total: u128 = assignments
        .iter()
        .map(|m| representative_count(&w_inv, m, p))
        .sum();
    if total > budget {
        return Err(Error::BudgetExceeded {
            required: total,
            budget,
        });
    }
    let diagram = build_diagram(&w_inv)?;
    let mut evaluated = Vec::new();
    for m in assignments {
        let cs = evaluate_cell_sum_with(&w_inv, &diagram, p, &m, &t_chars, budget)?;
        evaluated.push((m, cs));
    }
    finish_sum(&w_inv, p, &r_rev, &t_chars, Some(level), evaluated, started)
}

/// A classical exponential sum over Z/c kept as an exact coefficient vector.
#[derive(Debug, Clone)]
pub struct ClassicalSum {
    pub c: u64,
    pub coeffs: BTreeMap<u64, i64>,
}

impl ClassicalSum {
    pub fn magnitude(&self) -> (f64, f64) {
        let mut re = 0.0f64;
        let mut im = 0.0f64;
        let mut abs = 0.0f64;
        for (&t, &n) in &self.coeffs {
            let angle = 2.0 * std::f64::consts::PI * (t as f64) / (self.c as f64);
            re += n as f64 * angle.cos();
            im += n as f64 * angle.sin();
            abs += (n as f64).abs();
        }
        let mag = (re * re + im * im).sqrt();
        (mag, 32.0 * f64::EPSILON * abs + 4.0 * f64::EPSILON * mag)
    }

    /// Reinterpret over Z[ζ_{p^k}] when c = p^k.
    pub fn to_cyclotomic(&self, p: u64) -> Result<CyclotomicValue> {
        let mut c = self.c;
        let mut k = 0u32;
        while c > 1 {
            if !c.is_multiple_of(p) {
                return Err(Error::Precondition(format!(
                    "{} is not a power of {p}",
                    self.c
                )));
            }
            c /= p;
            k += 1;
        }
        let mut v = CyclotomicValue::zero(p, k);
        for (&t, &n) in &self.coeffs {
            let mut single = CyclotomicValue::zero(p, k);
            single.accumulate(CharArg::new(p, k, t))?;
            v = v.add(&single.scale(n))?;
        }
        Ok(v)
    }
}

/// S(m, n; c) = Σ_{x ∈ (Z/c)^*} e((m·x + n·x̄)/c) by direct enumeration.
pub fn classical_kloosterman(mm: i64, nn: i64, c: u64) -> ClassicalSum {
    let mut coeffs: BTreeMap<u64, i64> = BTreeMap::new();
    if c == 1 {
        coeffs.insert(0, 1);
        return ClassicalSum { c, coeffs };
    }
    let ci = c as i64;
    let mr = mm.rem_euclid(ci) as u64;
    let nr = nn.rem_euclid(ci) as u64;
    for x in 1..=c {
        if num::integer::gcd(x, c) != 1 {
            continue;
        }
        let xbar = mod_inverse_u64(x % c, c).expect("unit");
        let t = (mulmod(mr, x % c, c) + mulmod(nr, xbar, c)) % c;
        *coeffs.entry(t).or_insert(0) += 1;
    }
    ClassicalSum { c, coeffs }
}

/// The hyper-Kloosterman sum Kl_k(a; p^r): Ψ((x_1+…+x_k)/p^r) summed over
/// unit tuples with x_1·…·x_k ≡ a.
pub fn hyper_kloosterman(a: i64, k: u32, p: u64, r: u32) -> Result<CyclotomicValue> {
    let modulus = p.pow(r);
    let a_red = a.rem_euclid(modulus as i64) as u64;
    if modulus > 1 && a_red.is_multiple_of(p) {
        return Err(Error::NotAUnit {
            value: a.to_string(),
            modulus: format!("{p}^{r}"),
        });
    }
    let mut v = CyclotomicValue::zero(p, r);
    if modulus == 1 {
        v.accumulate(CharArg::new(p, 0, 0))?;
        return Ok(v);
    }
    let units: Vec<u64> = (1..modulus).filter(|x| x % p != 0).collect();

    #[allow(clippy::too_many_arguments)]
    fn rec(
        units: &[u64],
        depth: u32,
        k: u32,
        modulus: u64,
        p: u64,
        r: u32,
        sum: u64,
        prod: u64,
        a: u64,
        v: &mut CyclotomicValue,
    ) {
        if depth == k - 1 {
            let last = mulmod(a, mod_inverse_u64(prod, modulus).expect("unit"), modulus);
            let t = (sum + last) % modulus;
            let mut single = CyclotomicValue::zero(p, r);
            single
                .accumulate(CharArg::new(p, r, t))
                .expect("same prime");
            *v = v.add(&single).expect("same prime");
            return;
        }
        for &x in units {
            rec(
                units,
                depth + 1,
                k,
                modulus,
                p,
                r,
                (sum + x) % modulus,
                mulmod(prod, x, modulus),
                a,
                v,
            );
        }
    }
    rec(&units, 0, k, modulus, p, r, 0, 1, a_red, &mut v);
    Ok(v)
}

/// Checks the scaling identity on a long Weyl element:
/// Kl_p(m, ψ, ψ′, w) = p^{−(N+1−k)k}·Kl_p(m̃, ψ̃, ψ̃′, w), where m̃ adds one
/// on the (k−1)-th diagonal and the k-th (resp. N+1−k-th) character entries
/// pick up a factor p.
pub fn scaling_identity_check(
    w: &WeylElement,
    p: u64,
    m: &Assignment,
    chars: &CharacterPair,
    k: u32,
    budget: u128,
) -> Result<bool> {
    let cap_n = w.dimension() - 1;
    if w.composition().blocks().iter().any(|&b| b != 1) {
        return Err(Error::Precondition(
            "scaling identity applies to the long Weyl element".into(),
        ));
    }
    if k < 1 || k > cap_n {
        return Err(Error::Precondition(format!("k must lie in 1..={cap_n}")));
    }
    if w.gamma_order().iter().any(|&v| m.m(v) == 0) {
        return Err(Error::Precondition(
            "scaling identity needs all moduli positive".into(),
        ));
    }
    let mut scaled = BTreeMap::new();
    for &v in w.gamma_order() {
        let bump = if v.j - v.i == k - 1 { 1 } else { 0 };
        scaled.insert(v, m.m(v) + bump);
    }
    let m_tilde = Assignment::from_map(scaled);
    // bumping the (k−1)-diagonal deepens exactly the phase terms carrying
    // the character index N+1−k, on both sides
    let mut psi = chars.psi.clone();
    let mut psi_prime = chars.psi_prime.clone();
    psi[(cap_n - k) as usize] *= p as i64;
    psi_prime[(cap_n - k) as usize] *= p as i64;
    let chars_tilde = CharacterPair::new(psi, psi_prime);

    let lhs = evaluate_cell_sum(w, p, m, chars, budget)?;
    let rhs = evaluate_cell_sum(w, p, &m_tilde, &chars_tilde, budget)?;
    let factor = (cap_n + 1 - k) * k;
    lhs.value.scale_p_pow(factor).eq_exact(&rhs.value)
}

/// Checks the inversion identity Kl(ψ, ψ′, 𝔫) = Kl′(ψ̄′, ψ̄, 𝔫^{−1}) with
/// both sides computed by definition-level oracles (the right side in the
/// opposite quotient convention). `bound` defaults to Σ r_l.
pub fn inversion_identity_check(
    w: &WeylElement,
    p: u64,
    r: &[u32],
    chars: &CharacterPair,
    bound: Option<u32>,
    budget: u128,
) -> Result<bool> {
    chars.check(w.dimension() as usize - 1)?;
    let b = bound.unwrap_or_else(|| r.iter().sum());
    let lhs = crate::oracle::oracle_sum(
        w,
        p,
        r,
        &chars.psi,
        &chars.psi_prime,
        crate::oracle::Subgroup::Full,
        Some(b),
        budget,
    )?;
    let n_matrix = crate::oracle::modulus_matrix(w, p, r)?;
    let n_inverse = n_matrix.inverse();
    let w_tilde = w.inverse();
    let neg = |v: &[i64]| -> Vec<i64> { v.iter().map(|&x| -x).collect() };
    let rhs = crate::oracle::oracle_sum_x_prime(
        &w_tilde,
        &n_inverse,
        p,
        &neg(&chars.psi_prime),
        &neg(&chars.psi),
        b,
        budget,
    )?;
    lhs.eq_exact(&rhs)
}
