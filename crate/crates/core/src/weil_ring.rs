//! Weil representation of `Sp(b_n)` induced from the canonical invariant
//! isotropic submodule, its orbit/parity decomposition, tensor products and
//! support shells.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use thiserror::Error;

use crate::heisenberg::HeisElem;
use crate::linop::{BlockMonomial, CMat, Monomial, C64, ZERO};
use crate::local_ring::{legendre_u64, pow_u64, AdditiveChar};
use crate::symp_module::{
    b_module, orbits_by_gens, reduction_map, FiniteGroup, GroupElem, Lattice, ModVec, SympError,
    SympModule,
};
use crate::weil_field::{FieldError, FieldWeil};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingRepError {
    #[error(
        "no nonzero invariant isotropic submodule at n = 0; use the finite-field representation"
    )]
    NoIsotropic,
    #[error("coordinate twists must be 0 or 1")]
    UnsupportedTwist,
    #[error("representation dimension {dim} exceeds the cap {cap}")]
    DimCap { dim: usize, cap: usize },
    #[error("modules are incompatible")]
    ModuleMismatch,
    #[error(transparent)]
    Symp(#[from] SympError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub const DEFAULT_DIM_CAP: usize = 2000;

/// `U`, `U^perp` and the residue space `U^perp / U`.
#[derive(Debug, Clone)]
pub struct IsotropicData {
    pub u: Lattice,
    pub uperp: Lattice,
    /// First-half indices `i` whose pair `(i, h+i)` survives in the residue.
    pub residue_pairs: Vec<usize>,
    pub residue: SympModule,
    /// Module coordinate carried by each residue coordinate.
    pub residue_coords: Vec<usize>,
}

pub fn canonical_isotropic(m: &SympModule) -> Result<IsotropicData, RingRepError> {
    if m.twists.iter().any(|&t| t > 1) {
        return Err(RingRepError::UnsupportedTwist);
    }
    if m.level < 2 {
        return Err(RingRepError::NoIsotropic);
    }
    let n = m.level - 1;
    let half = n / 2;
    let odd = n % 2 == 1;
    let h = m.h();
    let mut eu = vec![0; m.dim()];
    let mut ep = vec![0; m.dim()];
    let mut residue_pairs = Vec::new();
    for i in 0..h {
        let t = m.twists[i];
        let (a, b, res) = match (odd, t) {
            (false, 1) => (half, half, false),
            (false, _) => (half + 1, half, true),
            (true, 1) => (half + 1, half, true),
            (true, _) => (half + 1, half + 1, false),
        };
        let cap = m.exps()[i];
        for c in [i, h + i] {
            eu[c] = a.min(cap);
            ep[c] = b.min(cap);
        }
        if res && eu[i] > ep[i] {
            residue_pairs.push(i);
        }
    }
    let residue = SympModule::field(m.p, residue_pairs.len())?;
    let residue_coords = residue_pairs
        .iter()
        .copied()
        .chain(residue_pairs.iter().map(|&i| h + i))
        .collect();
    Ok(IsotropicData {
        u: Lattice::new(m, eu),
        uperp: Lattice::new(m, ep),
        residue_pairs,
        residue,
        residue_coords,
    })
}

impl IsotropicData {
    /// Image in the residue of `u in U^perp`.
    pub fn residue_vec(&self, m: &SympModule, u: &[u64]) -> ModVec {
        self.residue_coords
            .iter()
            .map(|&c| (u[c] / pow_u64(m.p, self.uperp.exps[c])) % m.p)
            .collect()
    }

    /// `r_U(g)`: the induced automorphism of `U^perp / U`.
    pub fn reduce_elem(&self, m: &SympModule, g: &GroupElem) -> GroupElem {
        let k = m.dim();
        let rc = &self.residue_coords;
        let rows: Vec<i128> = rc
            .iter()
            .flat_map(|&i| {
                rc.iter().map(move |&j| {
                    let x = g.mat[i * k + j] as u128 * pow_u64(m.p, self.uperp.exps[j]) as u128;
                    let x = x % m.moduli()[i] as u128;
                    ((x / pow_u64(m.p, self.uperp.exps[i]) as u128) % m.p as u128) as i128
                })
            })
            .collect();
        self.residue.from_rows(&rows)
    }
}

/// Generators `g` of `Sp(b_n)` whose residue image `r_U(g)` differs from that
/// of their reduction to `b_{n-2}`. Zero means the residue representations
/// chosen at the two levels agree on the whole group.
pub fn residue_reduction_mismatches(
    m: &SympModule,
    gens: &[GroupElem],
) -> Result<usize, RingRepError> {
    if m.level < 4 {
        return Err(RingRepError::NoIsotropic);
    }
    let mid = SympModule::from_twists(m.p, m.level - 1, m.twists.clone())?;
    let lo = SympModule::from_twists(m.p, m.level - 2, m.twists.clone())?;
    let (hi_iso, lo_iso) = (canonical_isotropic(m)?, canonical_isotropic(&lo)?);
    if hi_iso.residue.dim() != lo_iso.residue.dim() {
        return Err(RingRepError::ModuleMismatch);
    }
    let mut bad = 0;
    for g in gens {
        let g_lo = reduction_map(&reduction_map(g, m, &mid)?, &mid, &lo)?;
        if hi_iso.reduce_elem(m, g) != lo_iso.reduce_elem(&lo, &g_lo) {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Induced model: functions `phi: W -> H_sigma` with
/// `phi(x + u) = psi(beta(x,u)/2) rho(u) phi(x)` for `u` in `U^perp`,
/// stored as their values at coset representatives of `W / U^perp`.
#[derive(Debug)]
pub struct RingWeilRep {
    pub module: SympModule,
    pub iso: IsotropicData,
    pub sigma: FieldWeil,
    pub psi: AdditiveChar,
    half: AdditiveChar,
    pub reps: Vec<ModVec>,
    res_heis: Vec<Monomial>,
    sigma_cache: RwLock<HashMap<Vec<u64>, Arc<CMat>>>,
}

pub fn build_ring_rep(m: &SympModule, cap_dim: usize) -> Result<RingWeilRep, RingRepError> {
    let iso = canonical_isotropic(m)?;
    let sigma = FieldWeil::new(m.p, iso.residue_pairs.len())?;
    let ncos = iso.uperp.quotient_size(m);
    let dim = ncos * sigma.dim();
    if dim > cap_dim {
        return Err(RingRepError::DimCap { dim, cap: cap_dim });
    }
    let reps = (0..ncos).map(|i| iso.uperp.quotient_decode(m, i)).collect();
    let rm = &sigma.module;
    let res_heis = (0..rm.size())
        .map(|i| {
            sigma.model.heis_op(&HeisElem {
                w: rm.decode(i),
                t: 0,
            })
        })
        .collect();
    let psi = AdditiveChar::canonical(m.ring());
    Ok(RingWeilRep {
        module: m.clone(),
        iso,
        sigma,
        psi,
        half: psi.half(),
        reps,
        res_heis,
        sigma_cache: RwLock::new(HashMap::new()),
    })
}

impl RingWeilRep {
    pub fn dim(&self) -> usize {
        self.reps.len() * self.sigma_dim()
    }

    pub fn sigma_dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn coset_count(&self) -> usize {
        self.reps.len()
    }

    /// `(j, u)` with `v = x_j + u`, `u` in `U^perp`.
    pub fn locate(&self, v: &[u64]) -> (usize, ModVec) {
        let m = &self.module;
        let j = self.iso.uperp.quotient_index(m, v);
        (j, m.sub(v, &self.reps[j]))
    }

    pub fn coset_of(&self, v: &[u64]) -> usize {
        self.iso.uperp.quotient_index(&self.module, v)
    }

    fn half_psi(&self, x: u64) -> C64 {
        self.half.at(x as i128)
    }

    pub fn residue_heis(&self, u: &[u64]) -> &Monomial {
        let ru = self.iso.residue_vec(&self.module, u);
        &self.res_heis[self.iso.residue.encode(&ru)]
    }

    /// `sigma(r_U(g))`, cached by residue matrix.
    pub fn sigma_op(&self, g: &GroupElem) -> Arc<CMat> {
        let r = self.iso.reduce_elem(&self.module, g);
        if let Some(s) = self.sigma_cache.read().unwrap().get(&r.mat) {
            return s.clone();
        }
        let s = Arc::new(
            self.sigma
                .operator(&r)
                .expect("residue element is symplectic"),
        );
        self.sigma_cache.write().unwrap().insert(r.mat, s.clone());
        s
    }

    /// `S(g) phi(x) = sigma(g) phi(g^{-1} x)`.
    pub fn operator(&self, g: &GroupElem) -> BlockMonomial {
        let m = &self.module;
        let ginv = m.inverse(g);
        let sig = self.sigma_op(g);
        let d = self.sigma_dim();
        let mut cols = Vec::with_capacity(self.reps.len());
        let mut blocks = Vec::with_capacity(self.reps.len());
        for x in &self.reps {
            let (j, u) = self.locate(&m.apply(&ginv, x));
            let ph = self.half_psi(m.form(&self.reps[j], &u));
            blocks.push(sigma_times_monomial(&sig, self.residue_heis(&u), d).scale(ph));
            cols.push(j);
        }
        BlockMonomial { d, cols, blocks }
    }

    /// `R(w,t) phi(x) = psi(t + beta(x,w)/2) phi(x + w)`.
    pub fn heis_operator(&self, h: &HeisElem) -> BlockMonomial {
        let m = &self.module;
        let d = self.sigma_dim();
        let ct = self.psi.at(h.t as i128);
        let mut cols = Vec::with_capacity(self.reps.len());
        let mut blocks = Vec::with_capacity(self.reps.len());
        for x in &self.reps {
            let (j, u) = self.locate(&m.add(x, &h.w));
            let ph = ct * self.half_psi(m.form(x, &h.w)) * self.half_psi(m.form(&self.reps[j], &u));
            blocks.push(self.residue_heis(&u).to_dense().scale(ph));
            cols.push(j);
        }
        BlockMonomial { d, cols, blocks }
    }

    /// Traces of `S(g)` restricted to each class of coset representatives.
    pub fn class_traces(&self, g: &GroupElem, class_of: &[usize], nclass: usize) -> Vec<C64> {
        let m = &self.module;
        let ginv = m.inverse(g);
        let mut out = vec![ZERO; nclass];
        let mut sig: Option<Arc<CMat>> = None;
        for (i, x) in self.reps.iter().enumerate() {
            let v = m.apply(&ginv, x);
            if self.coset_of(&v) != i {
                continue;
            }
            let u = m.sub(&v, x);
            let s = sig.get_or_insert_with(|| self.sigma_op(g));
            let rho = self.residue_heis(&u);
            let tr: C64 = rho
                .cols
                .iter()
                .zip(&rho.phases)
                .enumerate()
                .map(|(c, (&a, &ph))| s.at(a, c) * ph)
                .sum();
            out[class_of[i]] += tr * self.half_psi(m.form(x, &u));
        }
        out
    }

    pub fn trace(&self, g: &GroupElem) -> C64 {
        self.class_traces(g, &vec![0; self.reps.len()], 1)[0]
    }

    /// `sigma_{G,x}(g) = sigma(g) rho(g^{-1}x - x, beta(x, g^{-1}x)/2)` on the stabilizer of `x + U^perp`.
    pub fn sigma_gx(&self, x: &[u64], g: &GroupElem) -> Option<CMat> {
        let m = &self.module;
        let v = m.apply(&m.inverse(g), x);
        let u = m.sub(&v, x);
        if !self.iso.uperp.contains(m, &u) {
            return None;
        }
        let ph = self.half_psi(m.form(x, &v));
        Some(
            sigma_times_monomial(&self.sigma_op(g), self.residue_heis(&u), self.sigma_dim())
                .scale(ph),
        )
    }
}

fn sigma_times_monomial(s: &CMat, rho: &Monomial, d: usize) -> CMat {
    let mut out = CMat::zeros(d);
    for (c, (&col, &ph)) in rho.cols.iter().zip(&rho.phases).enumerate() {
        for a in 0..d {
            out.add_at(a, col, s.at(a, c) * ph);
        }
    }
    out
}

/// Irreducible summand `S_{O,eps}`: functions supported on orbit `O` with `S(-1) = eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summand {
    pub orbit: usize,
    pub sign: i32,
    pub dim: usize,
    pub orbit_size: usize,
    pub orbit_rep: ModVec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub orbits: Vec<Vec<usize>>,
    pub summands: Vec<Summand>,
}

impl Decomposition {
    pub fn class_of(&self, n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for (k, o) in self.orbits.iter().enumerate() {
            for &i in o {
                c[i] = k;
            }
        }
        c
    }

    pub fn total_dim(&self) -> usize {
        self.summands.iter().map(|s| s.dim).sum()
    }
}

/// Orbits of the generated group on `W / U^perp`, each split by the sign of `S(-1)`.
pub fn decompose(rep: &RingWeilRep, gens: &[GroupElem]) -> Result<Decomposition, RingRepError> {
    let m = &rep.module;
    let orbits = orbits_by_gens(m, gens, Some(&rep.iso.uperp))?;
    let mut dec = Decomposition {
        orbits,
        summands: Vec::new(),
    };
    let class_of = dec.class_of(rep.coset_count());
    let tr = rep.class_traces(&m.neg_identity(), &class_of, dec.orbits.len());
    let d = rep.sigma_dim() as f64;
    for (k, o) in dec.orbits.iter().enumerate() {
        let total = o.len() as f64 * d;
        for sign in [1i32, -1] {
            let dim = ((total + sign as f64 * tr[k].re) / 2.0).round() as usize;
            if dim > 0 {
                dec.summands.push(Summand {
                    orbit: k,
                    sign,
                    dim,
                    orbit_size: o.len(),
                    orbit_rep: rep.reps[o[0]].clone(),
                });
            }
        }
    }
    Ok(dec)
}

/// Deterministic parallel sum: fixed chunking, sequential combination.
pub fn det_sum<F>(n: usize, f: F) -> C64
where
    F: Fn(usize) -> C64 + Sync,
{
    const CHUNK: usize = 2048;
    let parts: Vec<C64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum())
        .collect();
    parts.into_iter().sum()
}

/// Orbit traces `T[o][g]` for every element of an enumerated group.
pub fn orbit_trace_table(
    rep: &RingWeilRep,
    group: &FiniteGroup,
    dec: &Decomposition,
) -> Vec<Vec<C64>> {
    let class_of = dec.class_of(rep.coset_count());
    let norb = dec.orbits.len();
    let rows: Vec<Vec<C64>> = (0..group.order())
        .into_par_iter()
        .map(|i| rep.class_traces(&group.elem(i), &class_of, norb))
        .collect();
    (0..norb)
        .map(|o| rows.iter().map(|r| r[o]).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterReport {
    /// `<chi_s, chi_t>` over the group.
    pub gram: Vec<Vec<C64>>,
    /// Largest distance of a Gram entry from the nearest integer.
    pub rounding_dev: f64,
    /// `(1/|G|) sum |tr S(g)|^2`.
    pub full_norm: f64,
    /// Largest deviation of `chi_s(1)` from the summand dimension.
    pub dim_dev: f64,
}

/// Characters `chi_{O,eps}(g) = (T_O(g) + eps T_O(-g)) / 2` and their inner products.
pub fn summand_characters(
    rep: &RingWeilRep,
    group: &FiniteGroup,
    dec: &Decomposition,
) -> CharacterReport {
    let m = &rep.module;
    let table = orbit_trace_table(rep, group, dec);
    let n = group.order();
    let neg: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| {
            group
                .find(&m.neg_elem(&group.elem(i)))
                .expect("-1 in group")
        })
        .collect();
    let chars: Vec<Vec<C64>> = dec
        .summands
        .iter()
        .map(|s| {
            (0..n)
                .map(|g| (table[s.orbit][g] + table[s.orbit][neg[g]] * s.sign as f64) / 2.0)
                .collect()
        })
        .collect();
    let ns = chars.len();
    let mut gram = vec![vec![ZERO; ns]; ns];
    let mut rounding_dev: f64 = 0.0;
    for a in 0..ns {
        for b in 0..ns {
            let v = det_sum(n, |g| chars[a][g] * chars[b][g].conj()) / n as f64;
            rounding_dev = rounding_dev.max((v - C64::new(v.re.round(), 0.0)).norm());
            gram[a][b] = v;
        }
    }
    let full_norm = det_sum(n, |g| {
        C64::new(table.iter().map(|t| t[g]).sum::<C64>().norm_sqr(), 0.0)
    })
    .re / n as f64;
    let id = group.find(&m.identity()).unwrap();
    let dim_dev = dec
        .summands
        .iter()
        .zip(&chars)
        .map(|(s, c)| (c[id] - C64::new(s.dim as f64, 0.0)).norm())
        .fold(0.0, f64::max);
    CharacterReport {
        gram,
        rounding_dev,
        full_norm,
        dim_dev,
    }
}

/// `(1/|G|) sum_g |tr S(g)|^2` for any enumerated subgroup.
pub fn character_norm(rep: &RingWeilRep, group: &FiniteGroup) -> f64 {
    let n = group.order();
    let traces: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|i| rep.trace(&group.elem(i)))
        .collect();
    det_sum(n, |i| C64::new(traces[i].norm_sqr(), 0.0)).re / n as f64
}

// ---- direct sums and tensor products ----

/// Orthogonal sum `W1 + W2` in standard layout, with coordinate embeddings.
#[derive(Debug, Clone)]
pub struct DirectSum {
    pub module: SympModule,
    pub perm1: Vec<usize>,
    pub perm2: Vec<usize>,
}

pub fn direct_sum(m1: &SympModule, m2: &SympModule) -> Result<DirectSum, RingRepError> {
    if m1.p != m2.p || m1.level != m2.level {
        return Err(RingRepError::ModuleMismatch);
    }
    let (h1, h2) = (m1.h(), m2.h());
    let h = h1 + h2;
    let twists = m1.twists.iter().chain(&m2.twists).copied().collect();
    let module = SympModule::from_twists(m1.p, m1.level, twists)?;
    let perm1 = (0..2 * h1)
        .map(|i| if i < h1 { i } else { h + i - h1 })
        .collect();
    let perm2 = (0..2 * h2)
        .map(|i| if i < h2 { h1 + i } else { h + h1 + i - h2 })
        .collect();
    Ok(DirectSum {
        module,
        perm1,
        perm2,
    })
}

impl DirectSum {
    pub fn embed_vec(&self, v1: &[u64], v2: &[u64]) -> ModVec {
        let mut w = self.module.zero();
        for (i, &x) in v1.iter().enumerate() {
            w[self.perm1[i]] = x;
        }
        for (i, &x) in v2.iter().enumerate() {
            w[self.perm2[i]] = x;
        }
        w
    }

    pub fn split_vec(&self, w: &[u64]) -> (ModVec, ModVec) {
        (
            self.perm1.iter().map(|&i| w[i]).collect(),
            self.perm2.iter().map(|&i| w[i]).collect(),
        )
    }

    /// `g1 (+) g2`.
    pub fn embed_pair(&self, g1: &GroupElem, g2: &GroupElem) -> GroupElem {
        let k = self.module.dim();
        let mut mat = vec![0; k * k];
        for (perm, g) in [(&self.perm1, g1), (&self.perm2, g2)] {
            let kk = perm.len();
            for i in 0..kk {
                for j in 0..kk {
                    mat[perm[i] * k + perm[j]] = g.mat[i * kk + j];
                }
            }
        }
        GroupElem { mat }
    }
}

/// Permutation `(phi1 (x) phi2)(w1 + w2) = phi1(w1) phi2(w2)`: entry `b1 * dim2 + b2`
/// of the tensor basis maps to the returned index in the big model.
pub fn tensor_basis_map(
    rep1: &RingWeilRep,
    rep2: &RingWeilRep,
    big: &RingWeilRep,
    ds: &DirectSum,
) -> Vec<usize> {
    let (d1, d2) = (rep1.sigma_dim(), rep2.sigma_dim());
    let mut map = Vec::with_capacity(rep1.dim() * rep2.dim());
    for x1 in &rep1.reps {
        for y1 in 0..d1 {
            for x2 in &rep2.reps {
                for y2 in 0..d2 {
                    let j = big.coset_of(&ds.embed_vec(x1, x2));
                    map.push(j * big.sigma_dim() + y1 * d2 + y2);
                }
            }
        }
    }
    map
}

/// Largest deviation of `I (S1(g1) (x) S2(g2))` from `S(g1 (+) g2) I`.
pub fn tensor_intertwining_dev(
    rep1: &RingWeilRep,
    rep2: &RingWeilRep,
    big: &RingWeilRep,
    ds: &DirectSum,
    pairs: &[(GroupElem, GroupElem)],
) -> f64 {
    let map = tensor_basis_map(rep1, rep2, big, ds);
    let n = map.len();
    let mut perm = CMat::zeros(n);
    for (a, &b) in map.iter().enumerate() {
        perm.set(b, a, C64::new(1.0, 0.0));
    }
    pairs
        .par_iter()
        .map(|(g1, g2)| {
            let s1 = rep1.operator(g1).to_dense();
            let s2 = rep2.operator(g2).to_dense();
            let lhs = perm.mul(&s1.kron(&s2));
            let rhs = big.operator(&ds.embed_pair(g1, g2)).to_dense().mul(&perm);
            lhs.max_dev(&rhs)
        })
        .reduce(|| 0.0, f64::max)
}

// ---- support shells ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShellKind {
    /// `E_0 = U^perp`.
    Core,
    /// `E_t = pi^{N+1-t} B* minus pi^{N+1-t} B`, `t >= 1`.
    Dual,
    /// `E_{t,1} = pi^{N-t} B minus pi^{N+1-t} B*`.
    Lattice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellRow {
    pub kind: ShellKind,
    pub t: u32,
    pub cosets: usize,
    pub dim_plus: i64,
    pub dim_minus: i64,
    pub formula_plus: i64,
    pub formula_minus: i64,
    pub visible: bool,
}

impl ShellRow {
    pub fn label(&self) -> String {
        match self.kind {
            ShellKind::Core => "E_0".to_string(),
            ShellKind::Dual => format!("E_{}", self.t),
            ShellKind::Lattice => format!("E_{{{},1}}", self.t),
        }
    }

    pub fn matches(&self) -> bool {
        !self.visible
            || (self.dim_plus == self.formula_plus && self.dim_minus == self.formula_minus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellTable {
    pub rows: Vec<ShellRow>,
    pub total_dim: usize,
    pub coset_total: usize,
}

/// Closed-form shell dimensions `(plus, minus)`.
pub fn shell_formula(q: u64, r: u32, l: u32, kind: ShellKind, t: u32) -> (i64, i64) {
    let q = q as i64;
    let pw = |e: u32| q.pow(e);
    match kind {
        ShellKind::Core => (1 + (pw(l) - 1) / 2, (pw(l) - 1) / 2),
        ShellKind::Dual => {
            let v = pw(2 * r * t - l) * (pw(2 * l) - 1) / 2;
            (v, v)
        }
        ShellKind::Lattice => {
            let v = pw(2 * r * t + l) * (pw(2 * (r - l)) - 1) / 2;
            (v, v)
        }
    }
}

/// Shells inside the model on `b_{2N+1}`, parity-split by `(-1/q)^k S(-1)`.
pub fn shell_dimensions(
    p: u64,
    r: usize,
    l: usize,
    big_n: u32,
) -> Result<ShellTable, RingRepError> {
    let m = b_module(p, r, l, 2 * big_n + 1)?;
    let rep = build_ring_rep(&m, usize::MAX)?;
    let h = m.h();
    // L_{2s} = pi^{N+1-s} B*, L_{2s+1} = pi^{N-s} B
    let in_b = |v: &[u64], a: u32| (0..m.dim()).all(|i| v[i] % pow_u64(p, a.min(m.exps()[i])) == 0);
    let in_bstar = |v: &[u64], a: u32| {
        (0..m.dim()).all(|i| {
            let e = if m.twists[i % h] == 1 {
                a.saturating_sub(1)
            } else {
                a
            };
            v[i] % pow_u64(p, e.min(m.exps()[i])) == 0
        })
    };
    let nclass = 2 * big_n as usize + 2;
    let class_of: Vec<usize> = rep
        .reps
        .iter()
        .map(|x| {
            (0..nclass)
                .find(|&c| {
                    let s = (c / 2) as u32;
                    if c % 2 == 0 {
                        in_bstar(x, big_n + 1 - s)
                    } else {
                        in_b(x, big_n - s)
                    }
                })
                .expect("every element lies in B")
        })
        .collect();
    let k = rep.iso.residue_pairs.len() as u32;
    let sgn = (legendre_u64(p - 1, p) as f64).powi(k as i32);
    let tr = rep.class_traces(&m.neg_identity(), &class_of, nclass);
    let d = rep.sigma_dim();
    let mut rows = Vec::new();
    for c in 0..nclass {
        let cosets = class_of.iter().filter(|&&x| x == c).count();
        let s = (c / 2) as u32;
        let (kind, t) = match c {
            0 => (ShellKind::Core, 0),
            _ if c % 2 == 1 => (ShellKind::Lattice, s),
            _ => (ShellKind::Dual, s),
        };
        let total = (cosets * d) as f64;
        let ptr = sgn * tr[c].re;
        let dim_plus = ((total + ptr) / 2.0).round() as i64;
        let dim_minus = ((total - ptr) / 2.0).round() as i64;
        let (formula_plus, formula_minus) = shell_formula(p, r as u32, l as u32, kind, t);
        rows.push(ShellRow {
            kind,
            t,
            cosets,
            dim_plus,
            dim_minus,
            formula_plus,
            formula_minus,
            visible: true,
        });
    }
    let (fp, fm) = shell_formula(p, r as u32, l as u32, ShellKind::Dual, big_n + 1);
    rows.push(ShellRow {
        kind: ShellKind::Dual,
        t: big_n + 1,
        cosets: 0,
        dim_plus: 0,
        dim_minus: 0,
        formula_plus: fp,
        formula_minus: fm,
        visible: false,
    });
    Ok(ShellTable {
        rows,
        total_dim: rep.dim(),
        coset_total: rep.coset_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::{dual_subgroup, SubgroupA};
    use crate::symp_module::{transvection_group, DEFAULT_GROUP_CAP};

    fn lattice_subgroup(m: &SympModule, l: &Lattice) -> SubgroupA {
        let gens: Vec<ModVec> = (0..m.dim())
            .map(|i| m.scale(pow_u64(m.p, l.exps[i]), &m.basis_vec(i)))
            .collect();
        SubgroupA::span(m, &gens).unwrap()
    }

    #[test]
    fn residue_choice_is_stable_under_reduction() {
        for (p, r, l, n) in [
            (3u64, 1usize, 1usize, 3u32),
            (3, 1, 1, 4),
            (3, 2, 1, 3),
            (5, 1, 1, 3),
            (3, 1, 0, 3),
        ] {
            let m = b_module(p, r, l, n).unwrap();
            let gens = crate::symp_module::generator_list(&m);
            assert_eq!(
                residue_reduction_mismatches(&m, &gens).unwrap(),
                0,
                "({p},{r},{l},{n})"
            );
        }
    }

    #[test]
    fn isotropic_data() {
        let m = b_module(3, 1, 0, 1).unwrap();
        let iso = canonical_isotropic(&m).unwrap();
        assert_eq!(iso.u.size(&m), 9);
        assert_eq!(iso.uperp.size(&m), 9);
        assert_eq!(iso.residue.dim(), 0);
        let m = b_module(3, 1, 1, 1).unwrap();
        assert_eq!(canonical_isotropic(&m).unwrap().residue.dim(), 2);
        for (r, l, n) in [(2, 1, 1), (2, 1, 2), (1, 0, 2), (1, 1, 3)] {
            let m = b_module(3, r, l, n).unwrap();
            let iso = canonical_isotropic(&m).unwrap();
            let u = lattice_subgroup(&m, &iso.u);
            let up = lattice_subgroup(&m, &iso.uperp);
            assert_eq!(dual_subgroup(&m, &u).size(), up.size());
            assert!(u.elements(&m).all(|x| up.contains(&m, &x)));
            assert!(u
                .elements(&m)
                .all(|x| u.elements(&m).all(|y| m.form(&x, &y) == 0)));
        }
        assert_eq!(
            canonical_isotropic(&b_module(3, 1, 0, 0).unwrap()).unwrap_err(),
            RingRepError::NoIsotropic
        );
    }

    #[test]
    fn residue_reduction_is_homomorphism() {
        let m = b_module(3, 2, 1, 1).unwrap();
        let iso = canonical_isotropic(&m).unwrap();
        let gens = crate::symp_module::generator_list(&m);
        for a in gens.iter().step_by(37) {
            for b in gens.iter().step_by(53) {
                let lhs = iso.reduce_elem(&m, &m.mul(a, b));
                let rhs = iso
                    .residue
                    .mul(&iso.reduce_elem(&m, a), &iso.reduce_elem(&m, b));
                assert_eq!(lhs, rhs);
                assert!(iso.residue.is_symplectic(&lhs));
            }
        }
    }

    #[test]
    fn ring_rep_is_genuine_and_intertwines() {
        for (r, l) in [(1, 0), (1, 1)] {
            let m = b_module(3, r, l, 1).unwrap();
            let rep = build_ring_rep(&m, DEFAULT_DIM_CAP).unwrap();
            let g = transvection_group(&m, DEFAULT_GROUP_CAP).unwrap();
            let n = g.order();
            let ops: Vec<CMat> = g.elements().map(|e| rep.operator(&e).to_dense()).collect();
            for a in (0..n).step_by(5) {
                for b in (0..n).step_by(7) {
                    let ab = g.find(&m.mul(&g.elem(a), &g.elem(b))).unwrap();
                    assert!(ops[a].mul(&ops[b]).max_dev(&ops[ab]) < 1e-8);
                }
                assert!((rep.trace(&g.elem(a)) - ops[a].trace()).norm() < 1e-9);
            }
            for (i, w) in m.elements().enumerate() {
                let a = (i * 31) % n;
                let h = HeisElem {
                    w,
                    t: (i % 9) as u64,
                };
                let ga = g.elem(a);
                let lhs = ops[a].mul(&rep.heis_operator(&h).to_dense());
                let rhs = rep
                    .heis_operator(&HeisElem {
                        w: m.apply(&ga, &h.w),
                        t: h.t,
                    })
                    .to_dense()
                    .mul(&ops[a]);
                assert!(lhs.max_dev(&rhs) < 1e-8);
            }
        }
    }

    #[test]
    fn decomposition_small() {
        let m = b_module(3, 1, 0, 1).unwrap();
        let rep = build_ring_rep(&m, DEFAULT_DIM_CAP).unwrap();
        let g = transvection_group(&m, DEFAULT_GROUP_CAP).unwrap();
        let dec = decompose(&rep, &g.gens).unwrap();
        let dims: Vec<usize> = dec.summands.iter().map(|s| s.dim).collect();
        assert_eq!(dims, vec![1, 4, 4]);
        let ch = summand_characters(&rep, &g, &dec);
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ch.gram[a][b] - C64::new(want, 0.0)).norm() < 1e-6);
            }
        }
        assert!((ch.full_norm - 3.0).abs() < 1e-6);
        assert!((character_norm(&rep, &g) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn sigma_gx_depends_on_class_mod_u() {
        let m = b_module(3, 1, 0, 2).unwrap();
        let rep = build_ring_rep(&m, DEFAULT_DIM_CAP).unwrap();
        let g = transvection_group(&m, DEFAULT_GROUP_CAP).unwrap();
        let x = m.decode(10);
        let u: Vec<ModVec> = (0..m.size())
            .map(|i| m.decode(i))
            .filter(|v| rep.iso.u.contains(&m, v))
            .collect();
        let mut checked = 0;
        for e in g.elements().step_by(13) {
            if let Some(a) = rep.sigma_gx(&x, &e) {
                for du in u.iter().take(5) {
                    let b = rep.sigma_gx(&m.add(&x, du), &e).unwrap();
                    assert!(a.max_dev(&b) < 1e-9);
                }
                checked += 1;
            }
        }
        assert!(checked > 0);
        assert!(
            rep.sigma_gx(&m.zero(), &m.identity())
                .unwrap()
                .max_dev(&CMat::identity(1))
                < 1e-12
        );
    }

    #[test]
    fn shells_small() {
        let t = shell_dimensions(3, 2, 1, 0).unwrap();
        assert_eq!(t.total_dim, 27);
        let dims: Vec<(i64, i64)> = t
            .rows
            .iter()
            .filter(|r| r.visible)
            .map(|r| (r.dim_plus, r.dim_minus))
            .collect();
        assert_eq!(dims, vec![(2, 1), (12, 12)]);
        assert!(t.rows.iter().all(|r| r.matches()));
        let t = shell_dimensions(3, 1, 0, 0).unwrap();
        assert_eq!((t.rows[0].dim_plus, t.rows[0].dim_minus), (1, 0));
        let t = shell_dimensions(3, 1, 1, 0).unwrap();
        assert_eq!(t.rows[1].cosets, 0);
    }

    #[test]
    fn direct_sum_embeds() {
        let m1 = b_module(3, 1, 0, 1).unwrap();
        let m2 = b_module(3, 1, 1, 1).unwrap();
        let ds = direct_sum(&m1, &m2).unwrap();
        let g1 = transvection_group(&m1, DEFAULT_GROUP_CAP).unwrap();
        let g2 = transvection_group(&m2, DEFAULT_GROUP_CAP).unwrap();
        for (a, b) in [(3, 5), (100, 17), (600, 23)] {
            let e = ds.embed_pair(&g1.elem(a), &g2.elem(b));
            assert!(ds.module.is_symplectic(&e));
            let v1 = m1.decode(a % 81);
            let v2 = m2.decode(b % 9);
            let w = ds.module.apply(&e, &ds.embed_vec(&v1, &v2));
            assert_eq!(
                ds.split_vec(&w),
                (m1.apply(&g1.elem(a), &v1), m2.apply(&g2.elem(b), &v2))
            );
        }
    }
}
