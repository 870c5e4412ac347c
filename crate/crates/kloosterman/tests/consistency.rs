//! Cross-route consistency: the residues produced by the edge-formula
//! engine must equal the character arguments read off the exact Bruhat
//! factors, tuple by tuple.

use std::collections::BTreeMap;

use num::rational::Ratio;
use num::{BigInt, Zero};

use kloosterman::bruhat::{path_formula_entries, recursion_entries, Cell};
use kloosterman::cyclotomic::CharArg;
use kloosterman::diagram::build_diagram;
use kloosterman::padic::{big, mod_inverse_u64};
use kloosterman::sum::{
    cell_moduli, edge_formula_terms, moduli_assignments, representative_space, CharacterPair,
};
use kloosterman::weyl::{make_admissible, Vertex, WeylElement};

type Rat = Ratio<BigInt>;

/// The engine-side phase: integer inverses modulo p^K, residues mod p^K.
fn engine_phase(
    w: &WeylElement,
    p: u64,
    m: &kloosterman::sum::Assignment,
    chars: &CharacterPair,
    values: &BTreeMap<Vertex, u64>,
) -> CharArg {
    let diagram = build_diagram(w).unwrap();
    let terms = edge_formula_terms(&diagram, m);
    let mut active = Vec::new();
    let mut k = 0u32;
    for t in &terms {
        let chi = if t.dotted {
            chars.psi_prime[(t.number - 1) as usize]
        } else {
            chars.psi[(t.number - 1) as usize]
        };
        if chi == 0 || t.exponent >= 0 {
            continue;
        }
        k = k.max((-t.exponent) as u32);
        active.push((t.clone(), chi));
    }
    if active.is_empty() {
        return CharArg::trivial(p);
    }
    let pk = p.pow(k);
    let mut residue = 0u64;
    for (t, chi) in active {
        let c = t.src.map(|v| values[&v] % pk).unwrap_or(1);
        let d = match t.dst {
            Some(v) if m.m(v) > 0 => mod_inverse_u64(values[&v] % pk, pk).unwrap(),
            Some(_) => 0,
            None => 1,
        };
        let chi_mod = chi.rem_euclid(pk as i64) as u64;
        let scale = p.pow(k - (-t.exponent) as u32);
        let term = (((chi_mod as u128 * c as u128) % pk as u128) * d as u128 % pk as u128)
            * scale as u128
            % pk as u128;
        residue = ((residue as u128 + term) % pk as u128) as u64;
    }
    CharArg::new(p, k, residue)
}

/// The exact phase: ψ and ψ′ paired with the first off-diagonals of the
/// Bruhat factors, reduced into Q_p/Z_p.
fn exact_phase(
    w: &WeylElement,
    p: u64,
    chars: &CharacterPair,
    cell: &Cell<BigInt>,
) -> CharArg {
    let n = w.dimension() as usize;
    let (l_off, r_off): (Vec<Rat>, Vec<Rat>) = if w.composition().n_blocks() == 2 {
        let t = path_formula_entries(w, cell).unwrap();
        (
            (1..n).map(|i| t.l.get(i, i + 1).clone()).collect(),
            (1..n).map(|i| t.r.get(i, i + 1).clone()).collect(),
        )
    } else {
        let rec = recursion_entries(w, cell).unwrap();
        (rec.l_offdiag, rec.r_offdiag)
    };
    let mut arg = Rat::zero();
    for i in 0..(n - 1) {
        arg += Rat::from_integer(big(chars.psi[i])) * l_off[i].clone();
        arg += Rat::from_integer(big(chars.psi_prime[i])) * r_off[i].clone();
    }
    CharArg::from_rational(p, &arg).unwrap()
}

fn args_equal(p: u64, a: CharArg, b: CharArg) -> bool {
    let k = a.denominator_exponent().max(b.denominator_exponent());
    let lift = |x: CharArg| x.residue() * p.pow(k - x.denominator_exponent());
    lift(a) == lift(b)
}

#[test]
fn engine_phase_matches_exact_bruhat_entries() {
    let char_sets: [(Vec<i64>, Vec<i64>); 2] = [
        (vec![1, 1, 1], vec![1, 1, 1]),
        (vec![2, 1, 3], vec![1, 2, 1]),
    ];
    for blocks in [
        vec![1u32, 1],
        vec![1, 2],
        vec![2, 1],
        vec![2, 2],
        vec![1, 3],
        vec![1, 1, 1],
        vec![1, 1, 2],
        vec![2, 1, 1],
        vec![1, 2, 1],
    ] {
        let w = make_admissible(&blocks).unwrap();
        let n = w.dimension() as usize - 1;
        for p in [2u64, 3] {
            for total in 0..=3u32 {
                let mut r = vec![0u32; n];
                r[0] = total / 2;
                r[n - 1] += total - total / 2;
                for m in moduli_assignments(&w, &r).unwrap() {
                    for (psi, psi_prime) in &char_sets {
                        let chars = CharacterPair::new(
                            psi[..n].to_vec(),
                            psi_prime[..n].to_vec(),
                        );
                        for tuple in representative_space(&w, &m, p).take(120) {
                            let values: BTreeMap<Vertex, u64> = w
                                .gamma_order()
                                .iter()
                                .copied()
                                .zip(tuple.iter().copied())
                                .collect();
                            let cell_vals: Vec<(u32, BigInt)> = w
                                .gamma_order()
                                .iter()
                                .map(|&v| (m.m(v), big(values[&v] as i64)))
                                .collect();
                            let cell = Cell::new(p, &w, cell_vals).unwrap();
                            let engine = engine_phase(&w, p, &m, &chars, &values);
                            let exact = exact_phase(&w, p, &chars, &cell);
                            assert!(
                                args_equal(p, engine, exact),
                                "blocks {blocks:?} p={p} m={:?} tuple {tuple:?}: {engine:?} vs {exact:?}",
                                m.gamma_vec(&w)
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn cell_moduli_bound_the_tuples() {
    // every streamed tuple respects its cell modulus and coprimality
    let w = make_admissible(&[2, 2]).unwrap();
    let r = [1u32, 2, 1];
    for m in moduli_assignments(&w, &r).unwrap() {
        let cm = cell_moduli(&w, &m);
        for tuple in representative_space(&w, &m, 2) {
            for (&v, &c) in w.gamma_order().iter().zip(&tuple) {
                assert!(c < cm.modulus(v, 2));
                if m.m(v) > 0 {
                    assert_eq!(c % 2, 1);
                }
            }
        }
    }
}
