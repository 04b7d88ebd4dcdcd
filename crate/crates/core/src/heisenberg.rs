//! Heisenberg groups over finite symplectic modules and their
//! Schrödinger models induced from self-dual subgroups.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linop::{CMat, Monomial, C64, ZERO};
use crate::local_ring::{AdditiveChar, RingError, RingParams};
use crate::symp_module::{ModVec, SympModule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeisError {
    #[error("subgroup is not self-dual")]
    NotSelfDual,
    #[error("module has {0} elements, too many to enumerate")]
    TooLarge(usize),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Element `(w, t)` of `H(W) = W x O_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HeisElem {
    pub w: ModVec,
    pub t: u64,
}

/// Limit on `|W|` for anything that tabulates the module.
pub const MAX_TABULATED: usize = 1 << 22;

/// `(w,t)(w',t') = (w+w', t+t'+beta(w,w')/2)`.
pub fn heis_mul(m: &SympModule, a: &HeisElem, b: &HeisElem) -> HeisElem {
    let q = m.ring_modulus();
    let inv2 = m.ring().inv2() as u128;
    let half = ((m.form(&a.w, &b.w) as u128 * inv2) % q as u128) as u64;
    HeisElem {
        w: m.add(&a.w, &b.w),
        t: (a.t + b.t + half) % q,
    }
}

pub fn heis_inv(m: &SympModule, a: &HeisElem) -> HeisElem {
    let q = m.ring_modulus();
    HeisElem {
        w: m.neg(&a.w),
        t: (q - a.t) % q,
    }
}

/// Seeded sample of `count` pairs `(group index, Heisenberg element)`.
pub fn sample_heis(
    m: &SympModule,
    order: usize,
    count: usize,
    seed: u64,
) -> Vec<(usize, HeisElem)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = m.ring_modulus();
    (0..count)
        .map(|_| {
            let w = m.moduli().iter().map(|&md| rng.gen_range(0..md)).collect();
            (
                rng.gen_range(0..order),
                HeisElem {
                    w,
                    t: rng.gen_range(0..q),
                },
            )
        })
        .collect()
}

/// Submodule of `W`, stored as a membership table.
#[derive(Debug, Clone)]
pub struct SubgroupA {
    pub gens: Vec<ModVec>,
    members: Vec<bool>,
    size: usize,
}

impl SubgroupA {
    pub fn span(m: &SympModule, gens: &[ModVec]) -> Result<Self, HeisError> {
        if m.size() > MAX_TABULATED {
            return Err(HeisError::TooLarge(m.size()));
        }
        let mut members = vec![false; m.size()];
        members[0] = true;
        let mut stack = vec![m.zero()];
        let mut size = 1;
        while let Some(v) = stack.pop() {
            for g in gens {
                let w = m.add(&v, g);
                let i = m.encode(&w);
                if !members[i] {
                    members[i] = true;
                    size += 1;
                    stack.push(w);
                }
            }
        }
        Ok(SubgroupA {
            gens: gens.to_vec(),
            members,
            size,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, m: &SympModule, v: &[u64]) -> bool {
        self.members[m.encode(v)]
    }

    pub fn elements<'a>(&'a self, m: &'a SympModule) -> impl Iterator<Item = ModVec> + 'a {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| m.decode(i))
    }

    pub fn intersection(&self, m: &SympModule, o: &SubgroupA) -> SubgroupA {
        let members: Vec<bool> = self
            .members
            .iter()
            .zip(&o.members)
            .map(|(a, b)| *a && *b)
            .collect();
        let size = members.iter().filter(|&&b| b).count();
        let gens = members
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| m.decode(i))
            .collect();
        SubgroupA {
            gens,
            members,
            size,
        }
    }

    pub fn is_self_dual(&self, m: &SympModule) -> bool {
        let d = dual_subgroup(m, self);
        d.members == self.members
    }
}

/// `A* = {v : psi(beta(v, a)) = 1 for all a in A}`; with `psi` primitive this is `A^perp`.
pub fn dual_subgroup(m: &SympModule, a: &SubgroupA) -> SubgroupA {
    let members: Vec<bool> = (0..m.size())
        .map(|i| {
            let v = m.decode(i);
            a.gens.iter().all(|g| m.form(&v, g) == 0)
        })
        .collect();
    let size = members.iter().filter(|&&b| b).count();
    let gens = members
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| m.decode(i))
        .collect();
    SubgroupA {
        gens,
        members,
        size,
    }
}

/// Span of the first `h` coordinates (the `e`-side).
pub fn standard_selfdual(m: &SympModule) -> Result<SubgroupA, HeisError> {
    SubgroupA::span(m, &(0..m.h()).map(|i| m.basis_vec(i)).collect::<Vec<_>>())
}

/// Span of the last `h` coordinates (the `f`-side).
pub fn standard_selfdual_f(m: &SympModule) -> Result<SubgroupA, HeisError> {
    SubgroupA::span(
        m,
        &(m.h()..m.dim()).map(|i| m.basis_vec(i)).collect::<Vec<_>>(),
    )
}

/// Model of `rho_psi` on functions with `phi(a + w) = psi(beta(w, a)/2) phi(w)`,
/// coordinates being values at a fixed list of coset representatives.
#[derive(Debug, Clone)]
pub struct SchrodingerModel {
    pub module: SympModule,
    pub a: SubgroupA,
    pub psi: AdditiveChar,
    half: AdditiveChar,
    pub reps: Vec<ModVec>,
    rep_of: Vec<u32>,
}

impl SchrodingerModel {
    pub fn new(m: &SympModule, a: SubgroupA, psi: AdditiveChar) -> Result<Self, HeisError> {
        if psi.params != m.ring() {
            return Err(RingError::ParamMismatch(psi.params.modulus(), m.ring_modulus()).into());
        }
        if !a.is_self_dual(m) {
            return Err(HeisError::NotSelfDual);
        }
        let mut rep_of = vec![u32::MAX; m.size()];
        let mut reps = Vec::new();
        let elems: Vec<ModVec> = a.elements(m).collect();
        for i in 0..m.size() {
            if rep_of[i] != u32::MAX {
                continue;
            }
            let c = m.decode(i);
            let k = reps.len() as u32;
            for e in &elems {
                rep_of[m.encode(&m.add(&c, e))] = k;
            }
            reps.push(c);
        }
        Ok(SchrodingerModel {
            module: m.clone(),
            a,
            psi,
            half: psi.half(),
            reps,
            rep_of,
        })
    }

    /// Model with `A` the `e`-side and the canonical character.
    pub fn standard(m: &SympModule) -> Result<Self, HeisError> {
        Self::new(m, standard_selfdual(m)?, AdditiveChar::canonical(m.ring()))
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn ring(&self) -> RingParams {
        self.module.ring()
    }

    /// `psi(x/2)` for an integer representative `x`.
    #[inline]
    pub fn half_psi(&self, x: u64) -> C64 {
        self.half.at(x as i128)
    }

    /// Write `w = a + c` with `c` a representative; returns `(index of c, a)`.
    pub fn locate(&self, w: &[u64]) -> (usize, ModVec) {
        let k = self.rep_of[self.module.encode(w)] as usize;
        (k, self.module.sub(w, &self.reps[k]))
    }

    /// `phi(w)` in terms of the representative value: `phi(w) = factor * phi[k]`.
    pub fn value_factor(&self, w: &[u64]) -> (usize, C64) {
        let (k, a) = self.locate(w);
        (k, self.half_psi(self.module.form(&self.reps[k], &a)))
    }

    /// `rho(w,t) phi(w') = psi(t + beta(w', w)/2) phi(w' + w)`.
    pub fn heis_op(&self, h: &HeisElem) -> Monomial {
        let m = &self.module;
        let mut cols = Vec::with_capacity(self.dim());
        let mut phases = Vec::with_capacity(self.dim());
        let ct = self.psi.at(h.t as i128);
        for c in &self.reps {
            let (k, f) = self.value_factor(&m.add(c, &h.w));
            cols.push(k);
            phases.push(ct * self.half_psi(m.form(c, &h.w)) * f);
        }
        Monomial { cols, phases }
    }

    /// Extend representative values to the full function on `W`.
    pub fn full_function(&self, phi: &[C64]) -> Vec<C64> {
        (0..self.module.size())
            .map(|i| {
                let (k, f) = self.value_factor(&self.module.decode(i));
                f * phi[k]
            })
            .collect()
    }

    /// `(1/|W|) sum_w |tr rho(w,0)|^2`, the character norm over `H(W)`.
    pub fn character_norm(&self) -> f64 {
        let m = &self.module;
        let s: f64 = m
            .elements()
            .map(|w| self.heis_op(&HeisElem { w, t: 0 }).trace().norm_sqr())
            .sum();
        s / m.size() as f64
    }
}

/// `I_{B,A} phi(w) = sum_{b in B/(A cap B)} phi(w + b) psi(beta(b, w)/2)`,
/// as a matrix from the `A`-model into the `B`-model.
pub fn intertwiner(to: &SchrodingerModel, from: &SchrodingerModel) -> CMat {
    let m = &to.module;
    let inter = to.a.intersection(m, &from.a).size() as f64;
    let belems: Vec<ModVec> = to.a.elements(m).collect();
    let mut out = CMat::zeros(to.dim());
    for (i, c) in to.reps.iter().enumerate() {
        for b in &belems {
            let (k, f) = from.value_factor(&m.add(c, b));
            out.add_at(i, k, f * to.half_psi(m.form(b, c)) / inter);
        }
    }
    out
}

/// Gram matrix `G[w][w'] = tr(rho(w,0) rho(w',0)^dagger)` over all of `W`.
pub fn op_basis_gram(model: &SchrodingerModel) -> CMat {
    let m = &model.module;
    let ops: Vec<Monomial> = m
        .elements()
        .map(|w| model.heis_op(&HeisElem { w, t: 0 }))
        .collect();
    let mut g = CMat::zeros(ops.len());
    for i in 0..ops.len() {
        for j in 0..ops.len() {
            let v = ops[i].hs_inner(&ops[j]);
            if v != ZERO {
                g.set(i, j, v);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symp_module::b_module;

    #[test]
    fn dual_of_trivial_and_whole() {
        let m = b_module(3, 1, 0, 1).unwrap();
        let zero = SubgroupA::span(&m, &[]).unwrap();
        assert_eq!(dual_subgroup(&m, &zero).size(), 81);
        let all = SubgroupA::span(&m, &[m.basis_vec(0), m.basis_vec(1)]).unwrap();
        assert_eq!(dual_subgroup(&m, &all).size(), 1);
        let a = standard_selfdual(&m).unwrap();
        assert!(a.is_self_dual(&m));
        assert_eq!(a.size(), 9);
    }

    #[test]
    fn selfdual_sizes() {
        for ((r, l, n), s) in [((1, 1, 1), 3), ((2, 1, 1), 27)] {
            let m = b_module(3, r, l, n).unwrap();
            let a = standard_selfdual(&m).unwrap();
            assert_eq!(a.size(), s);
            assert_eq!(a.size() * a.size(), m.size());
        }
    }

    #[test]
    fn group_law_associative() {
        let m = b_module(3, 1, 1, 1).unwrap();
        let q = m.ring_modulus();
        let elems: Vec<HeisElem> = m
            .elements()
            .flat_map(|w| (0..q).step_by(4).map(move |t| HeisElem { w: w.clone(), t }))
            .collect();
        for a in &elems {
            for b in &elems {
                for c in elems.iter().step_by(5) {
                    let l = heis_mul(&m, &heis_mul(&m, a, b), c);
                    let r = heis_mul(&m, a, &heis_mul(&m, b, c));
                    assert_eq!(l, r);
                }
            }
            let e = heis_mul(&m, a, &heis_inv(&m, a));
            assert_eq!(e, HeisElem { w: m.zero(), t: 0 });
        }
    }

    #[test]
    fn schrodinger_is_representation() {
        let m = b_module(3, 1, 0, 1).unwrap();
        let s = SchrodingerModel::standard(&m).unwrap();
        assert_eq!(s.dim(), 9);
        for (i, w) in m.elements().enumerate().step_by(7) {
            let h1 = HeisElem {
                w,
                t: (i % 9) as u64,
            };
            let h2 = HeisElem {
                w: m.decode((i * 13 + 4) % 81),
                t: 2,
            };
            let lhs = s.heis_op(&h1).compose(&s.heis_op(&h2));
            let rhs = s.heis_op(&heis_mul(&m, &h1, &h2));
            assert!(lhs.to_dense().max_dev(&rhs.to_dense()) < 1e-9);
        }
        let central = s.heis_op(&HeisElem { w: m.zero(), t: 4 });
        let want = CMat::identity(9).scale(s.psi.at(4));
        assert!(central.to_dense().max_dev(&want) < 1e-12);
    }

    #[test]
    fn irreducible_over_heisenberg() {
        for (r, l, n) in [(1, 0, 0), (1, 1, 1), (1, 0, 1)] {
            let m = b_module(3, r, l, n).unwrap();
            let s = SchrodingerModel::standard(&m).unwrap();
            assert!((s.character_norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn intertwiner_between_e_and_f_models() {
        let m = b_module(3, 1, 0, 1).unwrap();
        let psi = AdditiveChar::canonical(m.ring());
        let a = SchrodingerModel::new(&m, standard_selfdual(&m).unwrap(), psi).unwrap();
        let b = SchrodingerModel::new(&m, standard_selfdual_f(&m).unwrap(), psi).unwrap();
        let iba = intertwiner(&b, &a);
        let iab = intertwiner(&a, &b);
        for (i, w) in m.elements().enumerate().step_by(3) {
            let h = HeisElem {
                w,
                t: (i % 9) as u64,
            };
            let lhs = iba.mul(&a.heis_op(&h).to_dense());
            let rhs = b.heis_op(&h).to_dense().mul(&iba);
            assert!(lhs.max_dev(&rhs) < 1e-9);
        }
        let prod = iab.mul(&iba);
        let c = prod.at(0, 0);
        assert!(c.re > 0.0 && c.im.abs() < 1e-9);
        assert!(prod.max_dev(&CMat::identity(9).scale(c)) < 1e-9);
        let iaa = intertwiner(&a, &a);
        assert!(iaa.max_dev(&CMat::identity(9)) < 1e-12);
    }

    #[test]
    fn operator_basis() {
        let m = b_module(3, 1, 0, 1).unwrap();
        let s = SchrodingerModel::standard(&m).unwrap();
        let g = op_basis_gram(&s);
        assert!(g.max_dev(&CMat::identity(81).scale(C64::new(9.0, 0.0))) < 1e-9);
        let m = b_module(3, 1, 1, 1).unwrap();
        let s = SchrodingerModel::standard(&m).unwrap();
        assert_eq!(op_basis_gram(&s).rank(1e-9), 9);
    }

    #[test]
    fn rejects_non_selfdual() {
        let m = b_module(3, 1, 0, 1).unwrap();
        let half = SubgroupA::span(&m, &[m.scale(3, &m.basis_vec(0))]).unwrap();
        let err = SchrodingerModel::new(&m, half, AdditiveChar::canonical(m.ring())).unwrap_err();
        assert_eq!(err, HeisError::NotSelfDual);
    }
}
