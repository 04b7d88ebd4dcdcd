//! Finite symplectic modules over `O_n = Z/p^{n+1}` with mixed cyclic
//! coordinate orders, their automorphism groups and orbit machinery.
//!
//! A module has `2h` coordinates arranged in pairs `(i, h+i)`. Pair `i`
//! carries a twist `t_i`: both coordinates live in `Z/p^{N - t_i}` and
//! `beta(e_i, e_{h+i}) = p^{t_i}`. The modules `b_n` and `b*_n` are of this
//! shape with twists in `{0, 1}`.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::local_ring::{is_odd_prime, pow_u64, rem, val_mod, RingElem, RingError, RingParams};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SympError {
    #[error("invalid parameters: need 0 <= l <= r and r >= 1, got r = {r}, l = {l}")]
    InvalidRank { r: usize, l: usize },
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("group closure exceeded the cap of {cap} elements")]
    CapExceeded { cap: usize },
    #[error("module mismatch")]
    ModuleMismatch,
    #[error("matrix does not define a symplectic automorphism")]
    NotSymplectic,
    #[error("group element keys overflow 128 bits for this module")]
    KeyOverflow,
    #[error("lattice is not stable under the group")]
    NotStable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// `b_n = B / pi^{n+1} B*`
    B,
    /// `b*_n = B* / pi^n B`
    BStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SympModuleParams {
    pub p: u64,
    pub r: usize,
    pub l: usize,
    pub n: u32,
    pub flavor: Flavor,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SympModule {
    pub p: u64,
    /// Ring level `N`; scalars live in `Z/p^N`.
    pub level: u32,
    pub twists: Vec<u32>,
    pub params: Option<SympModuleParams>,
    exps: Vec<u32>,
    moduli: Vec<u64>,
    size: usize,
}

/// Coordinate vector of a module element.
pub type ModVec = Vec<u64>;

/// Symplectic automorphism as a constrained integer matrix.
///
/// Column `j` is the image of `e_j`; row `i` is reduced mod `p^{a_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElem {
    pub mat: Vec<u64>,
}

impl SympModule {
    pub fn from_twists(p: u64, level: u32, twists: Vec<u32>) -> Result<Self, SympError> {
        if !is_odd_prime(p) {
            return Err(RingError::NotOddPrime(p).into());
        }
        RingParams::new(p, level)?;
        let h = twists.len();
        let mut exps = vec![0; 2 * h];
        for (i, &t) in twists.iter().enumerate() {
            let a = level.saturating_sub(t);
            exps[i] = a;
            exps[h + i] = a;
        }
        let moduli: Vec<u64> = exps.iter().map(|&a| pow_u64(p, a)).collect();
        let size = moduli
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m as usize))
            .ok_or(SympError::KeyOverflow)?;
        Ok(SympModule {
            p,
            level,
            twists,
            params: None,
            exps,
            moduli,
            size,
        })
    }

    /// Standard symplectic `F_p`-space of dimension `2h`.
    pub fn field(p: u64, h: usize) -> Result<Self, SympError> {
        Self::from_twists(p, 1, vec![0; h])
    }

    pub fn h(&self) -> usize {
        self.twists.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.h()
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ring(&self) -> RingParams {
        RingParams {
            p: self.p,
            m: self.level,
        }
    }

    pub fn ring_modulus(&self) -> u64 {
        pow_u64(self.p, self.level)
    }

    pub fn zero(&self) -> ModVec {
        vec![0; self.dim()]
    }

    pub fn basis_vec(&self, i: usize) -> ModVec {
        let mut v = self.zero();
        v[i] = 1 % self.moduli[i];
        v
    }

    pub fn reduce(&self, v: &[i128]) -> ModVec {
        v.iter()
            .zip(&self.moduli)
            .map(|(&x, &m)| rem(x, m))
            .collect()
    }

    pub fn add(&self, v: &[u64], w: &[u64]) -> ModVec {
        v.iter()
            .zip(w)
            .zip(&self.moduli)
            .map(|((a, b), m)| (a + b) % m)
            .collect()
    }

    pub fn sub(&self, v: &[u64], w: &[u64]) -> ModVec {
        v.iter()
            .zip(w)
            .zip(&self.moduli)
            .map(|((a, b), m)| (a + m - b) % m)
            .collect()
    }

    pub fn neg(&self, v: &[u64]) -> ModVec {
        v.iter()
            .zip(&self.moduli)
            .map(|(a, m)| (m - a) % m)
            .collect()
    }

    pub fn scale(&self, c: u64, v: &[u64]) -> ModVec {
        v.iter()
            .zip(&self.moduli)
            .map(|(a, m)| ((c as u128 * *a as u128) % *m as u128) as u64)
            .collect()
    }

    /// Lexicographic index, coordinate 0 most significant.
    pub fn encode(&self, v: &[u64]) -> usize {
        v.iter()
            .zip(&self.moduli)
            .fold(0usize, |acc, (&x, &m)| acc * m as usize + x as usize)
    }

    pub fn decode(&self, mut idx: usize) -> ModVec {
        let mut v = vec![0; self.dim()];
        for i in (0..self.dim()).rev() {
            let m = self.moduli[i] as usize;
            v[i] = (idx % m) as u64;
            idx /= m;
        }
        v
    }

    pub fn elements(&self) -> impl Iterator<Item = ModVec> + '_ {
        (0..self.size).map(move |i| self.decode(i))
    }

    /// `beta(v, w)` as an integer in `[0, p^N)`.
    pub fn form(&self, v: &[u64], w: &[u64]) -> u64 {
        let h = self.h();
        let q = self.ring_modulus() as i128;
        let mut s: i128 = 0;
        for i in 0..h {
            let c = pow_u64(self.p, self.twists[i]) as i128;
            s += c * (v[i] as i128 * w[h + i] as i128 - v[h + i] as i128 * w[i] as i128);
            s %= q;
        }
        rem(s, q as u64)
    }

    pub fn form_eval(&self, v: &[u64], w: &[u64]) -> RingElem {
        RingElem {
            params: self.ring(),
            value: self.form(v, w),
        }
    }

    // ---- group elements ----

    pub fn identity(&self) -> GroupElem {
        let k = self.dim();
        let mut mat = vec![0; k * k];
        for i in 0..k {
            mat[i * k + i] = 1 % self.moduli[i];
        }
        GroupElem { mat }
    }

    pub fn neg_identity(&self) -> GroupElem {
        let id = self.identity();
        self.neg_elem(&id)
    }

    pub fn neg_elem(&self, g: &GroupElem) -> GroupElem {
        let k = self.dim();
        let mat = (0..k * k)
            .map(|e| (self.moduli[e / k] - g.mat[e]) % self.moduli[e / k])
            .collect();
        GroupElem { mat }
    }

    /// Build from columns (images of the coordinate basis).
    pub fn from_columns(&self, cols: &[ModVec]) -> GroupElem {
        let k = self.dim();
        let mut mat = vec![0; k * k];
        for (j, c) in cols.iter().enumerate() {
            for i in 0..k {
                mat[i * k + j] = c[i] % self.moduli[i];
            }
        }
        GroupElem { mat }
    }

    /// Build from signed integer entries, row-major.
    pub fn from_rows(&self, rows: &[i128]) -> GroupElem {
        let k = self.dim();
        GroupElem {
            mat: (0..k * k)
                .map(|e| rem(rows[e], self.moduli[e / k]))
                .collect(),
        }
    }

    pub fn column(&self, g: &GroupElem, j: usize) -> ModVec {
        let k = self.dim();
        (0..k).map(|i| g.mat[i * k + j]).collect()
    }

    pub fn apply(&self, g: &GroupElem, v: &[u64]) -> ModVec {
        let k = self.dim();
        (0..k)
            .map(|i| {
                let m = self.moduli[i] as u128;
                let mut s: u128 = 0;
                for j in 0..k {
                    s += g.mat[i * k + j] as u128 * v[j] as u128;
                }
                (s % m) as u64
            })
            .collect()
    }

    pub fn mul(&self, g: &GroupElem, h: &GroupElem) -> GroupElem {
        let k = self.dim();
        let mut mat = vec![0; k * k];
        for i in 0..k {
            let m = self.moduli[i] as u128;
            for j in 0..k {
                let mut s: u128 = 0;
                for t in 0..k {
                    s += g.mat[i * k + t] as u128 * h.mat[t * k + j] as u128;
                }
                mat[i * k + j] = (s % m) as u64;
            }
        }
        GroupElem { mat }
    }

    /// Inverse via `g^{-1} = Omega^{-1} g^T Omega`.
    pub fn inverse(&self, g: &GroupElem) -> GroupElem {
        let k = self.dim();
        let h = self.h();
        let tw = |i: usize| self.twists[i % h];
        let m_entry = |i: usize, j: usize| -> i128 {
            // (S^{-1} g^T S)_{ij} = g_{ji} p^{t_j - t_i}
            let gji = g.mat[j * k + i] as i128;
            let (ti, tj) = (tw(i), tw(j));
            if ti >= tj {
                gji / pow_u64(self.p, ti - tj) as i128
            } else {
                gji * pow_u64(self.p, tj - ti) as i128
            }
        };
        let sigma = |i: usize| if i < h { i + h } else { i - h };
        let eps = |i: usize| if i < h { 1i128 } else { -1 };
        let epsp = |j: usize| if j >= h { 1i128 } else { -1 };
        let mut mat = vec![0; k * k];
        for i in 0..k {
            for j in 0..k {
                let v = -eps(i) * epsp(j) * m_entry(sigma(i), sigma(j));
                mat[i * k + j] = rem(v, self.moduli[i]);
            }
        }
        GroupElem { mat }
    }

    /// Divisibility constraints making the matrix a well-defined endomorphism.
    pub fn is_well_formed(&self, g: &GroupElem) -> bool {
        let k = self.dim();
        (0..k).all(|i| {
            (0..k).all(|j| {
                let e = g.mat[i * k + j];
                let need = self.exps[i].saturating_sub(self.exps[j]);
                e < self.moduli[i] && val_mod(e, self.p, self.exps[i]) >= need
            })
        })
    }

    pub fn is_symplectic(&self, g: &GroupElem) -> bool {
        if !self.is_well_formed(g) {
            return false;
        }
        let k = self.dim();
        let cols: Vec<ModVec> = (0..k).map(|j| self.column(g, j)).collect();
        for i in 0..k {
            for j in (i + 1)..k {
                if self.form(&cols[i], &cols[j])
                    != self.form(&self.basis_vec(i), &self.basis_vec(j))
                {
                    return false;
                }
            }
        }
        // symplectic endomorphisms of a nondegenerate module are injective
        true
    }

    pub fn is_identity(&self, g: &GroupElem) -> bool {
        *g == self.identity()
    }

    /// `tau_{a,v}: w -> w + a beta(v, w) v`.
    pub fn transvection(&self, a: u64, v: &[u64]) -> GroupElem {
        let k = self.dim();
        let q = self.ring_modulus() as u128;
        let cols: Vec<ModVec> = (0..k)
            .map(|j| {
                let e = self.basis_vec(j);
                let c = ((a as u128 * self.form(v, &e) as u128) % q) as u64;
                self.add(&e, &self.scale(c, v))
            })
            .collect();
        self.from_columns(&cols)
    }

    /// Whether `v` lies in the image of `pi B*`: every twist-0 coordinate divisible by `p`.
    pub fn in_scaled_dual(&self, v: &[u64]) -> bool {
        let h = self.h();
        (0..self.dim()).all(|i| self.twists[i % h] > 0 || v[i] % self.p == 0)
    }

    /// `w -> w + (beta(v, w) / p) v` for `v` in the image of `pi B*`; the
    /// finite shadow of the lattice transvection `tau_{pi^{-1}, v}`.
    pub fn dual_transvection(&self, v: &[u64]) -> Option<GroupElem> {
        if !self.in_scaled_dual(v) {
            return None;
        }
        let k = self.dim();
        let cols: Vec<ModVec> = (0..k)
            .map(|j| {
                let e = self.basis_vec(j);
                let c = self.form(v, &e) / self.p;
                self.add(&e, &self.scale(c, v))
            })
            .collect();
        Some(self.from_columns(&cols))
    }

    /// Canonical hash key: columns encoded as module indices.
    pub fn key(&self, g: &GroupElem) -> u128 {
        let k = self.dim();
        let mut key: u128 = 0;
        for j in (0..k).rev() {
            let c = self.column(g, j);
            key = key * self.size as u128 + self.encode(&c) as u128;
        }
        key
    }

    fn key_fits(&self) -> bool {
        let bits = (self.size as f64).log2() * self.dim() as f64;
        bits < 127.0
    }
}

/// Build `b_n` or `b*_n` for the given parameters.
pub fn build_module(params: SympModuleParams) -> Result<SympModule, SympError> {
    let SympModuleParams { p, r, l, n, flavor } = params;
    if r == 0 || l > r {
        return Err(SympError::InvalidRank { r, l });
    }
    let twists = match flavor {
        Flavor::B => (0..r).map(|i| if i < l { 1 } else { 0 }).collect(),
        Flavor::BStar => (0..r).map(|i| if i < l { 0 } else { 1 }).collect(),
    };
    let mut m = SympModule::from_twists(p, n + 1, twists)?;
    m.params = Some(params);
    Ok(m)
}

pub fn b_module(p: u64, r: usize, l: usize, n: u32) -> Result<SympModule, SympError> {
    build_module(SympModuleParams {
        p,
        r,
        l,
        n,
        flavor: Flavor::B,
    })
}

/// Coordinate permutation carrying `b*_n(r, l)` onto `b_n(r, r - l)`:
/// coordinate `i` of the former is coordinate `perm[i]` of the latter.
pub fn bstar_relabel(r: usize, l: usize) -> Vec<usize> {
    let half: Vec<usize> = (0..r)
        .map(|i| if i < l { (r - l) + i } else { i - l })
        .collect();
    half.iter()
        .copied()
        .chain(half.iter().map(|&j| j + r))
        .collect()
}

/// Diagonal sublattice `{v : v_i in p^{e_i}}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    pub exps: Vec<u32>,
}

impl Lattice {
    pub fn new(m: &SympModule, exps: Vec<u32>) -> Self {
        Lattice {
            exps: exps.iter().zip(m.exps()).map(|(&e, &a)| e.min(a)).collect(),
        }
    }

    pub fn contains(&self, m: &SympModule, v: &[u64]) -> bool {
        v.iter()
            .zip(&self.exps)
            .enumerate()
            .all(|(i, (&x, &e))| val_mod(x, m.p, m.exps()[i]) >= e)
    }

    pub fn size(&self, m: &SympModule) -> usize {
        m.exps()
            .iter()
            .zip(&self.exps)
            .map(|(&a, &e)| pow_u64(m.p, a - e) as usize)
            .product()
    }

    /// Moduli of the quotient `W / L`.
    pub fn quotient_moduli(&self, m: &SympModule) -> Vec<u64> {
        self.exps.iter().map(|&e| pow_u64(m.p, e)).collect()
    }

    /// Canonical representative of `v + L`.
    pub fn rep(&self, m: &SympModule, v: &[u64]) -> ModVec {
        v.iter()
            .zip(self.quotient_moduli(m))
            .map(|(&x, q)| x % q)
            .collect()
    }

    pub fn quotient_size(&self, m: &SympModule) -> usize {
        self.quotient_moduli(m)
            .iter()
            .map(|&q| q as usize)
            .product()
    }

    pub fn quotient_index(&self, m: &SympModule, v: &[u64]) -> usize {
        v.iter()
            .zip(self.quotient_moduli(m))
            .fold(0usize, |acc, (&x, q)| acc * q as usize + (x % q) as usize)
    }

    pub fn quotient_decode(&self, m: &SympModule, mut idx: usize) -> ModVec {
        let qm = self.quotient_moduli(m);
        let mut v = vec![0; qm.len()];
        for i in (0..qm.len()).rev() {
            v[i] = (idx % qm[i] as usize) as u64;
            idx /= qm[i] as usize;
        }
        v
    }

    pub fn is_stable(&self, m: &SympModule, g: &GroupElem) -> bool {
        (0..m.dim()).all(|j| {
            let mut e = m.zero();
            e[j] = pow_u64(m.p, self.exps[j]) % m.moduli()[j];
            self.contains(m, &m.apply(g, &e))
        })
    }
}

/// Subgroup of `Sp(W)` enumerated by closure.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    pub module: SympModule,
    k: usize,
    mats: Vec<u32>,
    index: HashMap<u128, u32>,
    pub gens: Vec<GroupElem>,
}

pub const DEFAULT_GROUP_CAP: usize = 2_000_000;

impl FiniteGroup {
    pub fn order(&self) -> usize {
        self.index.len()
    }

    pub fn elem(&self, i: usize) -> GroupElem {
        let kk = self.k * self.k;
        GroupElem {
            mat: self.mats[i * kk..(i + 1) * kk]
                .iter()
                .map(|&x| x as u64)
                .collect(),
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElem> + '_ {
        (0..self.order()).map(move |i| self.elem(i))
    }

    pub fn find(&self, g: &GroupElem) -> Option<usize> {
        self.index.get(&self.module.key(g)).map(|&i| i as usize)
    }

    pub fn contains(&self, g: &GroupElem) -> bool {
        self.find(g).is_some()
    }

    fn push(&mut self, g: &GroupElem, key: u128) -> usize {
        let i = self.index.len();
        self.index.insert(key, i as u32);
        self.mats.extend(g.mat.iter().map(|&x| x as u32));
        i
    }

    fn trivial(module: &SympModule) -> Result<Self, SympError> {
        if !module.key_fits() {
            return Err(SympError::KeyOverflow);
        }
        let k = module.dim();
        let mut g = FiniteGroup {
            module: module.clone(),
            k,
            mats: Vec::new(),
            index: HashMap::new(),
            gens: Vec::new(),
        };
        let id = module.identity();
        let key = module.key(&id);
        g.push(&id, key);
        Ok(g)
    }

    /// Add a generator and re-close. Returns false when already a member.
    pub fn adjoin(&mut self, s: &GroupElem, cap: usize) -> Result<bool, SympError> {
        if self.contains(s) {
            return Ok(false);
        }
        self.gens.push(s.clone());
        let m = self.module.clone();
        let mut queue: VecDeque<usize> = VecDeque::new();
        // old elements only need the new generator
        let old = self.order();
        for i in 0..old {
            let x = m.mul(&self.elem(i), s);
            let key = m.key(&x);
            if !self.index.contains_key(&key) {
                if self.order() >= cap {
                    return Err(SympError::CapExceeded { cap });
                }
                queue.push_back(self.push(&x, key));
            }
        }
        while let Some(i) = queue.pop_front() {
            let g = self.elem(i);
            for t in 0..self.gens.len() {
                let x = m.mul(&g, &self.gens[t]);
                let key = m.key(&x);
                if !self.index.contains_key(&key) {
                    if self.order() >= cap {
                        return Err(SympError::CapExceeded { cap });
                    }
                    queue.push_back(self.push(&x, key));
                }
            }
        }
        Ok(true)
    }
}

/// Subgroup generated by `gens`.
pub fn group_closure(
    module: &SympModule,
    gens: &[GroupElem],
    cap: usize,
) -> Result<FiniteGroup, SympError> {
    let mut g = FiniteGroup::trivial(module)?;
    for s in gens {
        if !module.is_symplectic(s) {
            return Err(SympError::NotSymplectic);
        }
        g.adjoin(s, cap)?;
    }
    Ok(g)
}

/// All unit transvections `tau_{1,v}`, `v != 0`, in lexicographic order of `v`.
/// Together they generate every `tau_{a,v}` since `tau_{a,v} tau_{b,v} = tau_{a+b,v}`.
pub fn unit_transvections(module: &SympModule) -> impl Iterator<Item = GroupElem> + '_ {
    (1..module.size()).map(move |i| module.transvection(1, &module.decode(i)))
}

/// Dual transvections for every nonzero `v` in the image of `pi B*`.
pub fn dual_transvections(module: &SympModule) -> impl Iterator<Item = GroupElem> + '_ {
    (1..module.size()).filter_map(move |i| module.dual_transvection(&module.decode(i)))
}

/// Candidate generators of `Sp(W)`: unit transvections, then dual transvections.
pub fn sp_generators(module: &SympModule) -> impl Iterator<Item = GroupElem> + '_ {
    unit_transvections(module).chain(dual_transvections(module))
}

/// The group generated by [`sp_generators`], keeping only generators that enlarged it.
pub fn transvection_group(module: &SympModule, cap: usize) -> Result<FiniteGroup, SympError> {
    let mut g = FiniteGroup::trivial(module)?;
    for t in sp_generators(module) {
        g.adjoin(&t, cap)?;
    }
    Ok(g)
}

/// `count` index pairs drawn from `0..order`, reproducible from `seed`.
pub fn sample_pairs(order: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (rng.gen_range(0..order), rng.gen_range(0..order)))
        .collect()
}

/// Exhaustive pairs when `order^2 <= count`, otherwise a seeded sample.
pub fn pairs_or_sample(order: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    if order.saturating_mul(order) <= count {
        (0..order)
            .flat_map(|a| (0..order).map(move |b| (a, b)))
            .collect()
    } else {
        sample_pairs(order, count, seed)
    }
}

/// Distinct non-identity generators only, without enumerating the group.
pub fn generator_list(module: &SympModule) -> Vec<GroupElem> {
    let mut seen = std::collections::HashSet::new();
    sp_generators(module)
        .filter(|g| !module.is_identity(g) && seen.insert(module.key(g)))
        .collect()
}

/// Orbits of `G` on `W / L` (or on `W` when `lattice` is `None`), as sorted
/// lists of quotient indices, ordered by their smallest member.
pub fn orbits(
    group: &FiniteGroup,
    lattice: Option<&Lattice>,
) -> Result<Vec<Vec<usize>>, SympError> {
    orbits_by_gens(&group.module, &group.gens, lattice)
}

/// Orbits of the group generated by `gens`; no enumeration of the group.
pub fn orbits_by_gens(
    m: &SympModule,
    gens: &[GroupElem],
    lattice: Option<&Lattice>,
) -> Result<Vec<Vec<usize>>, SympError> {
    let full = Lattice::new(m, m.exps().to_vec());
    let lat = lattice.unwrap_or(&full);
    for s in gens {
        if !lat.is_stable(m, s) {
            return Err(SympError::NotStable);
        }
    }
    let n = lat.quotient_size(m);
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut orbit = vec![start];
        let mut q = VecDeque::from([start]);
        while let Some(i) = q.pop_front() {
            let v = lat.quotient_decode(m, i);
            for s in gens {
                let j = lat.quotient_index(m, &m.apply(s, &v));
                if !seen[j] {
                    seen[j] = true;
                    orbit.push(j);
                    q.push_back(j);
                }
            }
        }
        orbit.sort_unstable();
        out.push(orbit);
    }
    Ok(out)
}

/// Reduce an automorphism of `b_{n+1}` to one of `b_n` (same `r`, `l`).
pub fn reduction_map(
    g: &GroupElem,
    from: &SympModule,
    to: &SympModule,
) -> Result<GroupElem, SympError> {
    if from.p != to.p || from.twists != to.twists || from.level != to.level + 1 {
        return Err(SympError::ModuleMismatch);
    }
    let k = to.dim();
    Ok(GroupElem {
        mat: (0..k * k).map(|e| g.mat[e] % to.moduli()[e / k]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_sizes_and_forms() {
        let m = b_module(3, 1, 0, 1).unwrap();
        assert_eq!(m.moduli(), &[9, 9]);
        assert_eq!(m.size(), 81);
        assert_eq!(m.form(&[1, 0], &[0, 1]), 1);
        let m = b_module(3, 1, 1, 1).unwrap();
        assert_eq!(m.moduli(), &[3, 3]);
        assert_eq!(m.size(), 9);
        assert_eq!(m.form(&[1, 0], &[0, 1]), 3);
        let m = b_module(3, 2, 1, 1).unwrap();
        assert_eq!(m.moduli(), &[3, 9, 3, 9]);
        assert_eq!(m.size(), 729);
        for (p, r, l, n) in [(3u64, 2usize, 1usize, 2u32), (5, 2, 0, 1), (3, 3, 2, 2)] {
            let m = b_module(p, r, l, n).unwrap();
            let e = 2 * n as usize * l + 2 * (n as usize + 1) * (r - l);
            assert_eq!(m.size(), (p as usize).pow(e as u32));
        }
        assert_eq!(
            b_module(3, 1, 2, 1),
            Err(SympError::InvalidRank { r: 1, l: 2 })
        );
    }

    #[test]
    fn form_is_alternating_and_nondegenerate() {
        let m = b_module(3, 2, 1, 1).unwrap();
        for v in m.elements().step_by(7) {
            assert_eq!(m.form(&v, &v), 0);
        }
        // only 0 pairs trivially with everything
        let radical: Vec<_> = m
            .elements()
            .filter(|v| (0..m.dim()).all(|j| m.form(v, &m.basis_vec(j)) == 0))
            .collect();
        assert_eq!(radical, vec![m.zero()]);
    }

    #[test]
    fn transvections_are_symplectic() {
        let m = b_module(3, 2, 1, 1).unwrap();
        for (i, v) in m.elements().enumerate().step_by(11) {
            let a = (i % 9) as u64;
            let t = m.transvection(a, &v);
            assert!(m.is_symplectic(&t));
            assert_eq!(m.apply(&t, &v), v);
            let s = m.transvection(5, &v);
            assert_eq!(m.mul(&t, &s), m.transvection((a + 5) % 9, &v));
        }
        assert!(m.is_identity(&m.transvection(0, &m.decode(17))));
    }

    #[test]
    fn inverse_formula() {
        let m = b_module(3, 2, 1, 1).unwrap();
        let mut g = m.identity();
        for i in [5usize, 100, 333, 600, 42] {
            g = m.mul(&g, &m.transvection(1, &m.decode(i)));
        }
        assert!(m.is_identity(&m.mul(&g, &m.inverse(&g))));
        assert!(m.is_identity(&m.mul(&m.inverse(&g), &g)));
    }

    #[test]
    fn small_group_orders() {
        let m = b_module(3, 1, 0, 0).unwrap();
        assert_eq!(
            transvection_group(&m, DEFAULT_GROUP_CAP).unwrap().order(),
            24
        );
        let m = b_module(3, 1, 0, 1).unwrap();
        let g = transvection_group(&m, DEFAULT_GROUP_CAP).unwrap();
        assert_eq!(g.order(), 648);
        assert!(g.gens.len() < 10);
        assert_eq!(
            transvection_group(&m, 100).unwrap_err(),
            SympError::CapExceeded { cap: 100 }
        );
    }

    #[test]
    fn orbit_sizes() {
        let m = b_module(3, 1, 0, 1).unwrap();
        let g = transvection_group(&m, DEFAULT_GROUP_CAP).unwrap();
        let orb = orbits(&g, None).unwrap();
        let mut sizes: Vec<_> = orb.iter().map(|o| o.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 8, 72]);
        assert_eq!(orb[0], vec![0]);
        let uperp = Lattice::new(&m, vec![1, 1]);
        let orb = orbits(&g, Some(&uperp)).unwrap();
        assert_eq!(orb.len(), 2);
    }

    #[test]
    fn reduction_is_functorial() {
        let hi = b_module(3, 1, 0, 1).unwrap();
        let lo = b_module(3, 1, 0, 0).unwrap();
        let g = transvection_group(&hi, DEFAULT_GROUP_CAP).unwrap();
        let a = g.elem(17);
        let b = g.elem(301);
        let lhs = reduction_map(&hi.mul(&a, &b), &hi, &lo).unwrap();
        let rhs = lo.mul(
            &reduction_map(&a, &hi, &lo).unwrap(),
            &reduction_map(&b, &hi, &lo).unwrap(),
        );
        assert_eq!(lhs, rhs);
        assert!(lo.is_identity(&reduction_map(&hi.identity(), &hi, &lo).unwrap()));
    }

    #[test]
    fn bstar_matches_relabelled_b() {
        let (r, l, n) = (3usize, 1usize, 1u32);
        let bs = build_module(SympModuleParams {
            p: 3,
            r,
            l,
            n,
            flavor: Flavor::BStar,
        })
        .unwrap();
        let b = b_module(3, r, r - l, n).unwrap();
        let perm = bstar_relabel(r, l);
        for i in 0..bs.dim() {
            assert_eq!(bs.moduli()[i], b.moduli()[perm[i]]);
        }
        let map = |v: &ModVec| {
            let mut w = b.zero();
            for i in 0..v.len() {
                w[perm[i]] = v[i];
            }
            w
        };
        for (i, v) in bs.elements().enumerate().step_by(97) {
            let w = bs.decode((i * 31 + 5) % bs.size());
            assert_eq!(bs.form(&v, &w), b.form(&map(&v), &map(&w)));
        }
    }
}
