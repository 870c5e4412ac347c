//! Configurable verification suites behind the CLI: factorization formulas
//! against direct Bruhat extraction, counting identities, oracle agreement,
//! the scaling/inversion identities, and bound assertions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bruhat::{b_product, bruhat_factorize, path_formula_entries, recursion_entries, Cell};
use crate::bounds::{bound_report, trivial_bound, weil_bound};
use crate::error::Result;
use crate::oracle::{enumerate_kloosterman_set, oracle_sum, phases_from_set, Subgroup};
use crate::padic::big;
use crate::sum::{
    classical_kloosterman, evaluate_sum, evaluate_sum_gamma0, inversion_identity_check,
    moduli_assignments, representative_count, representative_space, scaling_identity_check,
    Assignment, CharacterPair,
};
use crate::weyl::{compositions, make_admissible, WeylElement};

/// Scale knobs for the verification suites.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub primes: Vec<u64>,
    pub max_dim: u32,
    pub cases: usize,
    pub max_r: u32,
    pub seed: u64,
    pub budget: u128,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            primes: vec![2, 3],
            max_dim: 5,
            cases: 200,
            max_r: 3,
            seed: 0,
            budget: crate::sum::DEFAULT_BUDGET,
        }
    }
}

/// Outcome of one verification suite.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            cases: 0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let status = if self.passed() { "ok" } else { "FAILED" };
        let _ = writeln!(out, "{}: {} ({} cases)", self.name, status, self.cases);
        for n in &self.notes {
            let _ = writeln!(out, "  {n}");
        }
        for f in &self.failures {
            let _ = writeln!(out, "  failure: {f}");
        }
        out
    }
}

/// A random cell point for formula verification: moduli up to `max_m`,
/// unit parts sampled beyond the moduli range to exercise reduction.
pub fn random_cell(p: u64, w: &WeylElement, max_m: u32, rng: &mut ChaCha8Rng) -> Cell<BigInt> {
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
    Cell::new(p, w, vals).expect("random cell data is valid")
}

/// Two-block path formulas and the multi-block recursion against direct
/// factorization of the b product, entrywise over exact rationals.
pub fn verify_bruhat(cfg: &VerifyConfig) -> CheckReport {
    let mut report = CheckReport::new("bruhat");
    for dim in 2..=cfg.max_dim {
        for blocks in compositions(dim, 2) {
            let w = make_admissible(&blocks).expect("valid composition");
            for &p in &cfg.primes {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    cfg.seed ^ (dim as u64) << 32 ^ p ^ blocks.len() as u64,
                );
                let n_cases = if blocks.len() == 2 {
                    cfg.cases
                } else {
                    cfg.cases / 2
                };
                for case in 0..n_cases {
                    let cell = random_cell(p, &w, 3, &mut rng);
                    let prod = b_product(&w, &cell);
                    let direct = match bruhat_factorize(&prod, &w) {
                        Ok(t) => t,
                        Err(e) => {
                            report
                                .failures
                                .push(format!("{blocks:?} p={p} case {case}: {e}"));
                            continue;
                        }
                    };
                    report.cases += 1;
                    if blocks.len() == 2 {
                        let formula = path_formula_entries(&w, &cell).expect("two-block");
                        if formula.l != direct.l || formula.c != direct.c || formula.r != direct.r
                        {
                            report.failures.push(format!(
                                "path formulas disagree: blocks {blocks:?} p={p} case {case}"
                            ));
                        }
                    } else {
                        let rec = recursion_entries(&w, &cell).expect("multi-block");
                        let n = w.dimension() as usize;
                        let mut ok = rec.central == direct.c;
                        for i in 1..n {
                            ok &= &rec.l_offdiag[i - 1] == direct.l.get(i, i + 1);
                            ok &= &rec.r_offdiag[i - 1] == direct.r.get(i, i + 1);
                        }
                        if !ok {
                            report.failures.push(format!(
                                "recursion disagrees: blocks {blocks:?} p={p} case {case}"
                            ));
                        }
                    }
                }
            }
        }
    }
    report
}

fn exponent_vectors(n: usize, max_total: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(n, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max_total, &mut Vec::new(), &mut out);
    out
}

/// Streamed representative counts against the closed counting formula, the
/// aggregated counting bound, and (at oracle scale) the enumerated set size.
pub fn verify_counts(cfg: &VerifyConfig) -> CheckReport {
    let mut report = CheckReport::new("counts");
    for dim in 2..=cfg.max_dim.min(4) {
        for blocks in compositions(dim, 2) {
            let w = make_admissible(&blocks).expect("valid composition");
            let n = dim as usize - 1;
            for &p in &cfg.primes {
                for r in exponent_vectors(n, cfg.max_r) {
                    let assignments = moduli_assignments(&w, &r).expect("valid r");
                    let mut total: u128 = 0;
                    for m in &assignments {
                        report.cases += 1;
                        let count = representative_count(&w, m, p);
                        let streamed = representative_space(&w, m, p).count() as u128;
                        let kappa = m.kappa();
                        let ht: u32 = r.iter().sum();
                        // p^{ht}·(1−1/p)^κ as integers: count·p^κ = p^{ht}(p−1)^κ
                        let lhs = count * (p as u128).pow(kappa);
                        let rhs = (p as u128).pow(ht) * ((p - 1) as u128).pow(kappa);
                        if streamed != count || lhs != rhs {
                            report.failures.push(format!(
                                "count mismatch: blocks {blocks:?} p={p} r={r:?} m={:?}",
                                m.gamma_vec(&w)
                            ));
                        }
                        total += count;
                    }
                    let bound = trivial_bound(&w, &r, p).expect("valid r");
                    if total != bound {
                        report
                            .failures
                            .push(format!("trivial bound: blocks {blocks:?} p={p} r={r:?}"));
                    }
                    if dim <= 3 {
                        match enumerate_kloosterman_set(
                            &w,
                            p,
                            &r,
                            r.iter().sum(),
                            Subgroup::Full,
                            cfg.budget,
                        ) {
                            Ok(set) => {
                                if set.len() as u128 != bound {
                                    report.failures.push(format!(
                                        "oracle size: blocks {blocks:?} p={p} r={r:?}: {} vs {bound}",
                                        set.len()
                                    ));
                                }
                            }
                            Err(e) => report
                                .failures
                                .push(format!("oracle: blocks {blocks:?} p={p} r={r:?}: {e}")),
                        }
                    }
                }
            }
        }
    }
    report
}

/// Definition-level oracle equality for one configuration.
pub fn verify_oracle(
    cfg: &VerifyConfig,
    blocks: &[u32],
    r: &[u32],
    chars: &CharacterPair,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("oracle");
    let w = make_admissible(blocks)?;
    for &p in &cfg.primes {
        report.cases += 1;
        let s = evaluate_sum(&w, p, r, chars, cfg.budget)?;
        let o = oracle_sum(
            &w,
            p,
            r,
            &chars.psi,
            &chars.psi_prime,
            Subgroup::Full,
            None,
            cfg.budget,
        )?;
        if !s.value.eq_exact(&o)? {
            report
                .failures
                .push(format!("blocks {blocks:?} p={p} r={r:?}"));
        } else {
            report
                .notes
                .push(format!("p={p}: |Kl| = {:.6}", s.magnitude));
        }
    }
    Ok(report)
}

/// The scaling identity, the inversion identity, and agreement of the two
/// term-list routes for the parametrized phase.
pub fn verify_identities(cfg: &VerifyConfig) -> CheckReport {
    let mut report = CheckReport::new("identities");
    // term lists of the edge route and the block-structured route agree
    for dim in 2..=cfg.max_dim {
        for blocks in compositions(dim, 2) {
            let w = make_admissible(&blocks).expect("valid composition");
            let n = dim as usize - 1;
            let r: Vec<u32> = (0..n).map(|i| (i as u32 % 2) + 1).collect();
            let diagram = crate::diagram::build_diagram(&w).expect("multi-block");
            for m in moduli_assignments(&w, &r).expect("valid r").into_iter().take(6) {
                report.cases += 1;
                let mut a = crate::sum::edge_formula_terms(&diagram, &m);
                let mut b = crate::sum::block_formula_terms(&w, &m);
                let key = |t: &crate::sum::PhaseTerm| {
                    (t.dotted, t.number, t.src, t.dst, t.exponent)
                };
                a.sort_by_key(key);
                b.sort_by_key(key);
                if a != b {
                    report
                        .failures
                        .push(format!("term routes differ: blocks {blocks:?}"));
                }
            }
        }
    }
    // scaling identity on long elements
    for dim in 2..=cfg.max_dim.min(3) {
        let blocks = vec![1u32; dim as usize];
        let w = make_admissible(&blocks).expect("valid composition");
        let order = w.gamma_order().to_vec();
        let assignment =
            Assignment::from_map(order.iter().map(|&v| (v, 1)).collect::<BTreeMap<_, _>>());
        let n = dim - 1;
        let chars = CharacterPair::new(vec![1; n as usize], vec![1; n as usize]);
        for &p in &cfg.primes {
            for k in 1..=n {
                report.cases += 1;
                match scaling_identity_check(&w, p, &assignment, &chars, k, cfg.budget) {
                    Ok(true) => {}
                    Ok(false) => report
                        .failures
                        .push(format!("scaling fails: dim {dim} p={p} k={k}")),
                    Err(e) => report
                        .failures
                        .push(format!("scaling error: dim {dim} p={p} k={k}: {e}")),
                }
            }
        }
    }
    // inversion identity at oracle scale
    for blocks in compositions(3, 2) {
        let w = make_admissible(&blocks).expect("valid composition");
        let chars = CharacterPair::new(vec![1, 1], vec![1, 1]);
        for r in exponent_vectors(2, cfg.max_r.min(3)) {
            report.cases += 1;
            match inversion_identity_check(&w, 2, &r, &chars, None, cfg.budget) {
                Ok(true) => {}
                Ok(false) => report
                    .failures
                    .push(format!("inversion fails: blocks {blocks:?} r={r:?}")),
                Err(e) => report
                    .failures
                    .push(format!("inversion error: blocks {blocks:?} r={r:?}: {e}")),
            }
        }
    }
    report
}

/// Hard bound assertions (counting bound everywhere, Weil bound for GL_2)
/// plus the diagnostic ratio table.
pub fn verify_bounds(cfg: &VerifyConfig) -> CheckReport {
    let mut report = CheckReport::new("bounds");
    let mut table = String::from(crate::bounds::BoundReport::csv_header());
    for dim in 2..=cfg.max_dim.min(3) {
        for blocks in compositions(dim, 2) {
            let w = make_admissible(&blocks).expect("valid composition");
            let n = dim as usize - 1;
            let chars = CharacterPair::new(vec![1; n], vec![1; n]);
            for &p in &cfg.primes {
                for r in exponent_vectors(n, cfg.max_r) {
                    report.cases += 1;
                    let s = match evaluate_sum(&w, p, &r, &chars, cfg.budget) {
                        Ok(s) => s,
                        Err(e) => {
                            report
                                .failures
                                .push(format!("blocks {blocks:?} p={p} r={r:?}: {e}"));
                            continue;
                        }
                    };
                    let rep = bound_report(&w, &s, &chars).expect("report");
                    if !rep.observed_within_trivial() {
                        report.failures.push(format!(
                            "counting bound violated: blocks {blocks:?} p={p} r={r:?}"
                        ));
                    }
                    if dim == 2 {
                        let wb = weil_bound(chars.psi[0], chars.psi_prime[0], p.pow(r[0]));
                        if s.magnitude > wb + s.magnitude_error {
                            report.failures.push(format!(
                                "Weil bound violated: p={p} r={r:?} |S|={}",
                                s.magnitude
                            ));
                        }
                    }
                    table.push_str(&rep.csv_row());
                }
            }
        }
    }
    report.notes.push(table);
    report
}

/// GL_2 recovery of the classical sums over a small grid.
pub fn verify_gl2(cfg: &VerifyConfig) -> CheckReport {
    let mut report = CheckReport::new("gl2");
    let w = make_admissible(&[1, 1]).expect("valid composition");
    for &p in &cfg.primes {
        for r in 0..=cfg.max_r {
            for a in [0i64, 1, 2, p as i64] {
                for b in [1i64, 2] {
                    report.cases += 1;
                    let chars = CharacterPair::new(vec![a], vec![b]);
                    let s = evaluate_sum(&w, p, &[r], &chars, cfg.budget).expect("in budget");
                    let cl = classical_kloosterman(a, b, p.pow(r))
                        .to_cyclotomic(p)
                        .expect("prime power");
                    if !s.value.eq_exact(&cl).expect("same prime") {
                        report
                            .failures
                            .push(format!("p={p} r={r} psi=({a},{b})"));
                    }
                }
            }
        }
    }
    report
}

/// The Γ0 transform against the restricted-membership oracle.
pub fn verify_gamma0(cfg: &VerifyConfig) -> CheckReport {
    let mut report = CheckReport::new("gamma0");
    for dim in 2..=cfg.max_dim.min(3) {
        for blocks in compositions(dim, 2) {
            let w = make_admissible(&blocks).expect("valid composition");
            let n = dim as usize - 1;
            let chars = CharacterPair::new(vec![1; n], vec![1; n]);
            for &p in &cfg.primes {
                for r in exponent_vectors(n, cfg.max_r.min(3)) {
                    report.cases += 1;
                    let got = evaluate_sum_gamma0(&w, p, &r, &chars, 1, cfg.budget)
                        .expect("in budget");
                    let set = enumerate_kloosterman_set(
                        &w,
                        p,
                        &r,
                        r.iter().sum(),
                        Subgroup::Gamma0(1),
                        cfg.budget,
                    )
                    .expect("in budget");
                    let want =
                        phases_from_set(&set, p, &chars.psi, &chars.psi_prime).expect("phases");
                    if !got.value.eq_exact(&want).expect("same prime") {
                        report
                            .failures
                            .push(format!("blocks {blocks:?} p={p} r={r:?}"));
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            primes: vec![2],
            max_dim: 4,
            cases: 10,
            max_r: 2,
            seed: 7,
            budget: crate::sum::DEFAULT_BUDGET,
        }
    }

    #[test]
    fn suites_pass_at_small_scale() {
        let cfg = small();
        for report in [
            verify_bruhat(&cfg),
            verify_counts(&cfg),
            verify_identities(&cfg),
            verify_bounds(&cfg),
            verify_gl2(&cfg),
            verify_gamma0(&cfg),
        ] {
            assert!(report.passed(), "{}", report.render());
            assert!(report.cases > 0);
        }
        let chars = CharacterPair::new(vec![1, 1], vec![1, 1]);
        let r = verify_oracle(&cfg, &[1, 1, 1], &[1, 1], &chars).unwrap();
        assert!(r.passed(), "{}", r.render());
    }
}
