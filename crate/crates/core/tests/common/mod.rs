//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use weilrep_core::symp_module::{FiniteGroup, ModVec, SympModule};

/// Image candidates for basis vector `j`: elements killed by its order.
fn torsion(m: &SympModule, j: usize) -> Vec<ModVec> {
    let ord = m.moduli()[j];
    m.elements()
        .filter(|v| {
            v.iter()
                .zip(m.moduli())
                .all(|(&x, &md)| (x as u128 * ord as u128) % md as u128 == 0)
        })
        .collect()
}

/// Counts `|Sp(W)|` by backtracking over column images that respect the form.
pub fn brute_sp_order(m: &SympModule) -> usize {
    let k = m.dim();
    let cands: Vec<Vec<ModVec>> = (0..k).map(|j| torsion(m, j)).collect();
    let gram: Vec<Vec<u64>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| m.form(&m.basis_vec(a), &m.basis_vec(b)))
                .collect()
        })
        .collect();
    fn go(
        j: usize,
        cols: &mut Vec<ModVec>,
        cands: &[Vec<ModVec>],
        gram: &[Vec<u64>],
        m: &SympModule,
    ) -> usize {
        if j == cands.len() {
            return 1;
        }
        let mut n = 0;
        for v in &cands[j] {
            if (0..j).all(|i| m.form(&cols[i], v) == gram[i][j]) {
                cols.push(v.clone());
                n += go(j + 1, cols, cands, gram, m);
                cols.pop();
            }
        }
        n
    }
    go(0, &mut Vec::new(), &cands, &gram, m)
}

/// Orbit count on `W` using every group element instead of generators.
pub fn brute_orbit_count(g: &FiniteGroup) -> usize {
    let m = &g.module;
    let mut seen = vec![false; m.size()];
    let mut count = 0;
    for v in m.elements() {
        let i = m.encode(&v);
        if seen[i] {
            continue;
        }
        count += 1;
        for h in g.elements() {
            seen[m.encode(&m.apply(&h, &v))] = true;
        }
    }
    count
}
