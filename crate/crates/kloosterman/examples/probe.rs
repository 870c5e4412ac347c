use kloosterman::cyclotomic::{CharArg, CyclotomicValue};
use kloosterman::padic::mod_inverse_u64;
use kloosterman::sum::{
    evaluate_cell_sum, moduli_assignments, representative_space, CharacterPair, DEFAULT_BUDGET,
};
use kloosterman::weyl::{make_admissible, Vertex};

fn main() {
    let w = make_admissible(&[1, 1, 1]).unwrap();
    let p = 2u64;
    for m in moduli_assignments(&w, &[2, 2]).unwrap() {
        println!("assignment {:?}", m.gamma_vec(&w));
        let cs = evaluate_cell_sum(&w, p, &m, &CharacterPair::new(vec![1, 1], vec![1, 1]), DEFAULT_BUDGET).unwrap();
        // manual brute force straight from the four phase terms with d = 0 at m = 0
        let v11 = Vertex::new(1, 1);
        let v12 = Vertex::new(1, 2);
        let v22 = Vertex::new(2, 2);
        let (m11, m12, m22) = (m.m(v11) as i64, m.m(v12) as i64, m.m(v22) as i64);
        let k = 6u32;
        let pk = p.pow(k);
        let dval = |mv: i64, c: u64, denom: i64| -> u64 {
            if mv == 0 || denom <= 0 { if mv == 0 { 0 } else { 1 } } else { mod_inverse_u64(c % pk, pk).unwrap() }
        };
        let mut manual = CyclotomicValue::zero(p, k);
        for tuple in representative_space(&w, &m, p) {
            // γ order: (2,2), (1,2), (1,1)
            let (c22, c12, c11) = (tuple[0], tuple[1], tuple[2]);
            let term = |chi: i64, c: u64, d: u64, e: i64| -> u64 {
                if e >= 0 { return 0; }
                let denom = (-e) as u32;
                if denom > k { panic!("k too small"); }
                let scale = p.pow(k - denom);
                let chi_m = chi.rem_euclid(pk as i64) as u64;
                ((chi_m as u128 * c as u128 % pk as u128) * d as u128 % pk as u128 * scale as u128 % pk as u128) as u64
            };
            let mut t = 0u64;
            // psi_1: c22·d12·p^{-m12} + 1·d11·p^{-m11+m22-m12}
            t = (t + term(1, c22, dval(m12, c12, m12), -m12)) % pk;
            t = (t + term(1, 1, dval(m11, c11, m11 - m22 + m12), -m11 + m22 - m12)) % pk;
            // psi_2: d22·p^{-m22}
            t = (t + term(1, 1, dval(m22, c22, m22), -m22)) % pk;
            // psi'_1: c12·d11·p^{-m12} + c22·1·p^{-m22+m11-m12}
            t = (t + term(1, c12, dval(m11, c11, m12), -m12)) % pk;
            t = (t + term(1, c22, 1, -m22 + m11 - m12)) % pk;
            // psi'_2: c11·p^{-m11}
            t = (t + term(1, c11, 1, -m11)) % pk;
            manual.accumulate(CharArg::new(p, k, t)).unwrap();
        }
        println!("  engine |{:.6}|  manual |{:.6}|  equal={}",
            cs.value.magnitude().0, manual.magnitude().0,
            cs.value.eq_exact(&manual).unwrap());
    }
}
