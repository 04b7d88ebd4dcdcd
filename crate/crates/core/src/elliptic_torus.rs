//! Elliptic maximal tori of `Sp(W)`, `W = k''` a quadratic extension of
//! `Q_p` with form `beta_u(x, y) = tr(u x^tau y) / 2`, acting on finite
//! quotients `b_n`; characters, conductors, multiplicities and weight vectors.
//!
//! Coordinates. Unramified: `u = p^uval nu`, `nu^2 = d`, lattice `B = O''`
//! with basis `(1, nu/d)`, so `x + y nu` acts by `[[x, y], [y d, x]]`.
//! Ramified: `u = pi`, `pi^2 = p`, `B = pi^{-1} O''` with basis `(1, pi^{-1})`,
//! so `x + y pi` acts by `[[x, y], [p y, x]]`. Both bases are symplectic.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::linop::{norm, BlockMonomial, C64, ONE, ZERO};
use crate::local_ring::{
    in_congruence, is_odd_prime, least_nonresidue, legendre_u64, mod_inv, norm_one_group, pow_u64,
    rem, root_of_unity, QuadElem, QuadKind, QuadRingParams, RingError, TAU_EQ,
};
use crate::symp_module::{
    b_module, group_closure, orbits_by_gens, transvection_group, FiniteGroup, GroupElem, ModVec,
    SympError, SympModule,
};
use crate::weil_field::{weil_index, FieldError};
use crate::weil_ring::{build_ring_rep, det_sum, direct_sum, RingRepError, RingWeilRep};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TorusError {
    #[error("invalid torus parameters: {0}")]
    InvalidParams(String),
    #[error("truncation too shallow: depth {needed} needed, have {depth}")]
    InsufficientTruncation { needed: u32, depth: u32 },
    #[error("parameters out of range: {0}")]
    ParameterRange(String),
    #[error("finite torus of order {0} is not cyclic")]
    NotCyclic(usize),
    #[error("operation needs an unramified torus")]
    NotUnramified,
    #[error("character does not appear")]
    DoesNotAppear,
    #[error("weight vectors are built on b_n with n odd, got n = {0}")]
    EvenTruncation(u32),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Symp(#[from] SympError),
    #[error(transparent)]
    Rep(#[from] RingRepError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TorusKind {
    /// `v''(u) = uval`, `nu^2 = d`.
    Unramified {
        uval: u32,
        d: u64,
    },
    Ramified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusParams {
    pub p: u64,
    pub kind: TorusKind,
    pub n: u32,
}

impl TorusParams {
    pub fn unramified(p: u64, uval: u32, n: u32) -> Result<Self, TorusError> {
        Self::check(p, n)?;
        if uval > 1 {
            return Err(TorusError::InvalidParams(format!(
                "uval must be 0 or 1, got {uval}"
            )));
        }
        Ok(TorusParams {
            p,
            kind: TorusKind::Unramified {
                uval,
                d: least_nonresidue(p),
            },
            n,
        })
    }

    pub fn ramified(p: u64, n: u32) -> Result<Self, TorusError> {
        Self::check(p, n)?;
        Ok(TorusParams {
            p,
            kind: TorusKind::Ramified,
            n,
        })
    }

    fn check(p: u64, n: u32) -> Result<(), TorusError> {
        if !is_odd_prime(p) {
            return Err(TorusError::InvalidParams(format!(
                "p = {p} is not an odd prime"
            )));
        }
        if n == 0 {
            return Err(TorusError::InvalidParams("n must be at least 1".into()));
        }
        Ok(())
    }

    /// `mu = -v''(u)` (here `e = 1`, `delta = 0`, `lambda_psi = 0`).
    pub fn mu(&self) -> i32 {
        match self.kind {
            TorusKind::Unramified { uval, .. } => -(uval as i32),
            TorusKind::Ramified => -1,
        }
    }

    pub fn autodual(&self) -> bool {
        !matches!(self.kind, TorusKind::Unramified { uval: 1, .. })
    }

    pub fn module(&self) -> Result<SympModule, TorusError> {
        let l = usize::from(!self.autodual());
        Ok(b_module(self.p, 1, l, self.n)?)
    }

    /// Truncation of `O''` through which the torus acts on `b_n`.
    pub fn quad(&self) -> Result<QuadRingParams, TorusError> {
        Ok(match self.kind {
            TorusKind::Unramified { uval, d } => {
                QuadRingParams::unramified(self.p, d, self.n + 1 - uval)?
            }
            TorusKind::Ramified => QuadRingParams::ramified(self.p, 2 * (self.n + 1))?,
        })
    }

    pub fn label(&self) -> String {
        match self.kind {
            TorusKind::Unramified { uval, d } => {
                format!("unramified(p={}, uval={uval}, d={d}, n={})", self.p, self.n)
            }
            TorusKind::Ramified => format!("ramified(p={}, n={})", self.p, self.n),
        }
    }
}

/// Finite torus `C = T / T_level`, listed as powers of a generator, and its image in `Sp(b_n)`.
#[derive(Debug, Clone)]
pub struct TorusEmbedding {
    pub params: TorusParams,
    pub module: SympModule,
    pub quad: QuadRingParams,
    /// `elems[i] = g0^i`.
    pub elems: Vec<QuadElem>,
    pub mats: Vec<GroupElem>,
    /// Congruence depth of each element (`level` for the identity).
    pub depth: Vec<u32>,
    index: HashMap<(u64, u64), usize>,
}

fn matrix_of(params: &TorusParams, m: &SympModule, z: &QuadElem) -> GroupElem {
    let (x, y) = (z.xi as i128, z.eta as i128);
    let rows = match params.kind {
        TorusKind::Unramified { d, .. } => [x, y, y * d as i128, x],
        TorusKind::Ramified => [x, y, y * params.p as i128, x],
    };
    m.from_rows(&rows)
}

pub fn build_embedding(params: &TorusParams) -> Result<TorusEmbedding, TorusError> {
    let module = params.module()?;
    let quad = params.quad()?;
    let group = norm_one_group(&quad);
    let ord = group.len();
    let one = quad.one();
    let order_of = |g: &QuadElem| {
        let mut x = *g;
        let mut k = 1;
        while x != one {
            x = x.mul(g);
            k += 1;
        }
        k
    };
    let g0 = *group
        .iter()
        .find(|g| order_of(g) == ord)
        .ok_or(TorusError::NotCyclic(ord))?;
    let mut elems = Vec::with_capacity(ord);
    let mut x = one;
    for _ in 0..ord {
        elems.push(x);
        x = x.mul(&g0);
    }
    let mats: Vec<GroupElem> = elems
        .iter()
        .map(|z| matrix_of(params, &module, z))
        .collect();
    let level = quad.level;
    let depth = elems
        .iter()
        .map(|z| {
            (0..=level)
                .rev()
                .find(|&j| in_congruence(z, j))
                .unwrap_or(0)
        })
        .collect();
    let index = elems
        .iter()
        .enumerate()
        .map(|(i, z)| ((z.xi, z.eta), i))
        .collect();
    Ok(TorusEmbedding {
        params: *params,
        module,
        quad,
        elems,
        mats,
        depth,
        index,
    })
}

impl TorusEmbedding {
    pub fn order(&self) -> usize {
        self.elems.len()
    }

    pub fn level(&self) -> u32 {
        self.quad.level
    }

    pub fn index_of(&self, z: &QuadElem) -> Option<usize> {
        self.index.get(&(z.xi, z.eta)).copied()
    }

    pub fn generator(&self) -> &GroupElem {
        &self.mats[1 % self.order()]
    }

    /// Index of the smallest nontrivial element of `C cap T_j`; cosets of `T_j` are residues mod it.
    pub fn congruence_step(&self, j: u32) -> usize {
        (1..self.order())
            .find(|&i| self.depth[i] >= j)
            .unwrap_or(self.order())
    }

    /// Largest deviation from an injective form-preserving homomorphism.
    pub fn embedding_defects(&self) -> usize {
        let m = &self.module;
        let ord = self.order();
        let mut bad = 0;
        let mut seen = std::collections::HashSet::new();
        for (i, g) in self.mats.iter().enumerate() {
            if !m.is_symplectic(g) || !seen.insert(g.mat.clone()) {
                bad += 1;
            }
            if m.mul(g, &self.mats[1 % ord]) != self.mats[(i + 1) % ord] {
                bad += 1;
            }
        }
        bad
    }
}

/// Character `chi_id(g0^i) = exp(2 pi i id i / |C|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusChar {
    pub id: usize,
    pub order: usize,
    pub conductor: u32,
}

impl TorusChar {
    pub fn value(&self, i: usize) -> C64 {
        root_of_unity(((self.id * i) % self.order) as u64, self.order as u64)
    }

    pub fn values(&self) -> Vec<C64> {
        (0..self.order).map(|i| self.value(i)).collect()
    }

    pub fn is_trivial_at(&self, i: usize) -> bool {
        (self.id * i) % self.order == 0
    }

    /// Order of the character in the dual group.
    pub fn char_order(&self) -> usize {
        self.order / gcd(self.id, self.order)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest `lambda` with `C cap T_lambda` in the kernel.
pub fn conductor(emb: &TorusEmbedding, id: usize) -> u32 {
    let ord = emb.order();
    (0..=emb.level())
        .find(|&lam| (0..ord).all(|i| emb.depth[i] < lam || (id * i) % ord == 0))
        .unwrap_or(emb.level())
}

pub fn characters(emb: &TorusEmbedding) -> Vec<TorusChar> {
    let ord = emb.order();
    (0..ord)
        .map(|id| TorusChar {
            id,
            order: ord,
            conductor: conductor(emb, id),
        })
        .collect()
}

/// Character id whose values match `vals` within `tol`.
pub fn identify(emb: &TorusEmbedding, vals: &[C64], tol: f64) -> Option<usize> {
    let ord = emb.order();
    (0..ord).find(|&id| {
        (0..ord)
            .all(|i| (root_of_unity(((id * i) % ord) as u64, ord as u64) - vals[i]).norm() < tol)
    })
}

fn sqrt_one_mod(c: i128, p: u64, e: u32) -> i128 {
    // Newton from 1: c = 1 mod p.
    let m = pow_u64(p, e) as i128;
    let mut x: i128 = 1;
    for _ in 0..=e {
        let f = (x * x - c).rem_euclid(m);
        let inv = mod_inv(rem(2 * x, m as u64), m as u64).expect("2x is a unit") as i128;
        x = (x - f * inv).rem_euclid(m);
    }
    x
}

/// `theta_j(eta)`: the unique element of `T_j` (`T_{2j+1}` ramified) whose
/// generator coordinate is `p^j eta`.
pub fn theta_j(quad: &QuadRingParams, eta: i128, j: u32) -> Result<QuadElem, TorusError> {
    let (ex, ee) = quad.coord_exps();
    let p = quad.p;
    let (needed, s) = match quad.kind {
        QuadKind::Unramified { d } => {
            if j == 0 {
                return Err(TorusError::ParameterRange(
                    "theta_j needs j >= 1 for unramified tori".into(),
                ));
            }
            (j, d)
        }
        QuadKind::Ramified => (2 * j + 1, p),
    };
    if needed > quad.level {
        return Err(TorusError::InsufficientTruncation {
            needed,
            depth: quad.level,
        });
    }
    let y = rem(pow_u64(p, j) as i128 * eta, pow_u64(p, ee)) as i128;
    let xi = sqrt_one_mod(1 + s as i128 * y * y, p, ex);
    Ok(quad.elem(xi, y))
}

/// Values of `chi_{b,lambda,j}` on `C cap T_j` (unramified), or of
/// `chi_{b,2 lambda,j}` on `C cap T_{2j+1}` (ramified); `None` off the domain.
pub fn chi_blj(
    emb: &TorusEmbedding,
    b: i128,
    lam: u32,
    j: u32,
) -> Result<Vec<Option<C64>>, TorusError> {
    let p = emb.params.p;
    let (ee, dom, coef) = match emb.quad.kind {
        QuadKind::Unramified { d } => {
            if !(j >= 1 && j < lam && lam <= 3 * j) {
                return Err(TorusError::ParameterRange(format!(
                    "need j < lambda <= 3j, j >= 1; got j = {j}, lambda = {lam}"
                )));
            }
            (emb.quad.coord_exps().1, j, -(d as i128))
        }
        QuadKind::Ramified => {
            if !(j < lam && lam <= 3 * j + 1) {
                return Err(TorusError::ParameterRange(format!(
                    "need j < lambda <= 3j + 1; got j = {j}, lambda = {lam}"
                )));
            }
            let sign = if lam % 2 == 0 { 1 } else { -1 };
            (emb.quad.coord_exps().1, 2 * j + 1, sign)
        }
    };
    if lam > ee {
        return Err(TorusError::InsufficientTruncation {
            needed: lam,
            depth: ee,
        });
    }
    let modl = pow_u64(p, lam);
    let inv2 = (modl + 1) / 2;
    Ok((0..emb.order())
        .map(|i| {
            (emb.depth[i] >= dom).then(|| {
                let eta = emb.elems[i].eta as i128;
                root_of_unity(rem(coef * b * eta * inv2 as i128, modl), modl)
            })
        })
        .collect())
}

fn restricts_to(chi: &TorusChar, vals: &[Option<C64>]) -> bool {
    vals.iter()
        .enumerate()
        .all(|(i, v)| v.map_or(true, |v| (chi.value(i) - v).norm() < TAU_EQ))
}

/// First `a = (x, y)` with `N(a) = b mod p^k`, optionally with `x` a unit.
pub fn norm_preimage(quad: &QuadRingParams, b: u64, k: u32, xi_unit: bool) -> Option<(u64, u64)> {
    let p = quad.p;
    let m = pow_u64(p, k);
    let s = quad.square_of_generator() as i128;
    (0..m)
        .flat_map(|x| (0..m).map(move |y| (x, y)))
        .find(|&(x, y)| {
            let (xi, yi) = (x as i128, y as i128);
            (x % p != 0 || !xi_unit)
                && (x % p != 0 || (y % p != 0 && s % p as i128 != 0))
                && rem(xi * xi - s * yi * yi, m) == b % m
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// `b` modulo `p^{lambda - j}`.
    pub b: u64,
    pub lam: u32,
    pub j: u32,
    /// `a = a0 + a1 (nu | pi)` with `a a^tau = b`.
    pub a: (u64, u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub appears: bool,
    pub rule: &'static str,
    pub witness: Option<Witness>,
}

fn find_witness(
    emb: &TorusEmbedding,
    chi: &TorusChar,
    lam: u32,
    j: u32,
    xi_unit: bool,
) -> Option<Witness> {
    let p = emb.params.p;
    let kb = match emb.quad.kind {
        QuadKind::Unramified { .. } => lam - j,
        QuadKind::Ramified => lam - j,
    };
    let mb = pow_u64(p, kb);
    (1..mb).filter(|b| b % p != 0).find_map(|b| {
        let vals = chi_blj(emb, b as i128, lam, j).ok()?;
        if !restricts_to(chi, &vals) {
            return None;
        }
        let a = norm_preimage(&emb.quad, b, kb, xi_unit)?;
        Some(Witness { b, lam, j, a })
    })
}

/// Appearance rule for `chi`: conductor parity plus the norm condition.
pub fn predicate(emb: &TorusEmbedding, chi: &TorusChar, eta0_id: Option<usize>) -> Verdict {
    let c = chi.conductor;
    let no = |rule| Verdict {
        appears: false,
        rule,
        witness: None,
    };
    if c == 0 {
        return Verdict {
            appears: true,
            rule: "trivial",
            witness: None,
        };
    }
    match emb.params.kind {
        TorusKind::Unramified { uval: 0, .. } => {
            if c % 2 == 1 {
                return no("odd conductor");
            }
            let j = c / 2;
            match find_witness(emb, chi, c, j, false) {
                Some(w) => Verdict {
                    appears: true,
                    rule: "even conductor with norm condition",
                    witness: Some(w),
                },
                None => no("norm condition fails"),
            }
        }
        TorusKind::Unramified { .. } => {
            if c == 1 {
                return if Some(chi.id) == eta0_id {
                    no("eta0 excluded")
                } else {
                    Verdict {
                        appears: true,
                        rule: "conductor 1, not eta0",
                        witness: None,
                    }
                };
            }
            if c % 2 == 0 {
                return no("even conductor");
            }
            let j = (c - 1) / 2;
            match find_witness(emb, chi, c, j + 1, true) {
                Some(w) => Verdict {
                    appears: true,
                    rule: "odd conductor with norm condition",
                    witness: Some(w),
                },
                None => no("norm condition fails"),
            }
        }
        TorusKind::Ramified => {
            if c % 2 == 1 {
                return no("odd conductor");
            }
            let j = c / 2;
            match find_witness(emb, chi, j, j / 2, false) {
                Some(w) => Verdict {
                    appears: true,
                    rule: "even conductor with norm condition",
                    witness: Some(w),
                },
                None => no("norm condition fails"),
            }
        }
    }
}

// ---- eta_0 ----

#[derive(Debug, Clone, PartialEq)]
pub struct Eta0Report {
    /// Closed form `(2 d (x - 1) / p)` with `(0/p) = 1`.
    pub closed: Vec<i32>,
    /// Hilbert 90: `g = z / z^tau`, value `(N z / p)`.
    pub hilbert: Vec<i32>,
    pub agree: bool,
    pub id: Option<usize>,
}

pub fn eta0_closed(emb: &TorusEmbedding, i: usize) -> Result<i32, TorusError> {
    let TorusKind::Unramified { d, .. } = emb.params.kind else {
        return Err(TorusError::NotUnramified);
    };
    let p = emb.params.p;
    let x = emb.elems[i].xi as i128;
    let v = legendre_u64(rem(2 * d as i128 * (x - 1), p), p);
    Ok(if v == 0 { 1 } else { v })
}

pub fn eta0(emb: &TorusEmbedding) -> Result<Eta0Report, TorusError> {
    if !matches!(emb.params.kind, TorusKind::Unramified { .. }) {
        return Err(TorusError::NotUnramified);
    }
    let p = emb.params.p;
    let ord = emb.order();
    let mut hilbert = vec![0; ord];
    let mut found = 0;
    for z in emb.quad.elements() {
        if !z.is_unit() {
            continue;
        }
        let g = z.mul(&z.conj().inv().expect("unit"));
        if let Some(i) = emb.index_of(&g) {
            if hilbert[i] == 0 {
                hilbert[i] = legendre_u64(z.norm().value % p, p);
                found += 1;
                if found == ord {
                    break;
                }
            }
        }
    }
    let closed = (0..ord)
        .map(|i| eta0_closed(emb, i))
        .collect::<Result<Vec<_>, _>>()?;
    let agree = closed == hilbert;
    let vals: Vec<C64> = closed.iter().map(|&s| C64::new(s as f64, 0.0)).collect();
    Ok(Eta0Report {
        id: identify(emb, &vals, 1e-9),
        closed,
        hilbert,
        agree,
    })
}

// ---- the representation restricted to the torus ----

/// Torus image together with the Weil representation of `Sp(b_n)`.
#[derive(Debug)]
pub struct TorusModel {
    pub emb: TorusEmbedding,
    pub rep: RingWeilRep,
    pub chars: Vec<TorusChar>,
    pub traces: Vec<C64>,
    pub ops: Vec<BlockMonomial>,
}

pub fn torus_model(params: &TorusParams, cap_dim: usize) -> Result<TorusModel, TorusError> {
    let emb = build_embedding(params)?;
    let rep = build_ring_rep(&emb.module, cap_dim)?;
    let ops: Vec<BlockMonomial> = emb.mats.par_iter().map(|g| rep.operator(g)).collect();
    let traces = ops.iter().map(|o| o.trace()).collect();
    let chars = characters(&emb);
    Ok(TorusModel {
        emb,
        rep,
        chars,
        traces,
        ops,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultRow {
    pub id: usize,
    pub conductor: u32,
    pub mult: i64,
    /// Distance of the inner product from the nearest integer.
    pub dev: f64,
}

/// `mult(chi) = |C|^{-1} sum_t conj(chi(t)) tr S(t)`.
pub fn torus_multiplicities(model: &TorusModel) -> Vec<MultRow> {
    let ord = model.emb.order();
    model
        .chars
        .par_iter()
        .map(|chi| {
            let v = det_sum(ord, |i| chi.value(i).conj() * model.traces[i]) / ord as f64;
            let mult = v.re.round() as i64;
            MultRow {
                id: chi.id,
                conductor: chi.conductor,
                mult,
                dev: (v - C64::new(mult as f64, 0.0)).norm(),
            }
        })
        .collect()
}

/// `(|C|^{-1} sum |tr S(t)|^2, number of C-orbits on b_n)`.
pub fn orbit_identity(model: &TorusModel) -> Result<(f64, usize), TorusError> {
    let ord = model.emb.order();
    let norm2 = det_sum(ord, |i| C64::new(model.traces[i].norm_sqr(), 0.0)).re / ord as f64;
    let orbits = orbits_by_gens(&model.emb.module, &[model.emb.generator().clone()], None)?;
    Ok((norm2, orbits.len()))
}

// ---- global twist diagnostic ----

#[derive(Debug, Clone, PartialEq)]
pub struct TwistReport {
    pub group_order: usize,
    pub derived_order: usize,
    /// Torus characters that extend to `Sp(b_n)`.
    pub candidates: Vec<usize>,
    pub raw_match: bool,
    /// Twists `lambda` with `predicate(chi) <=> mult(chi lambda) = 1` for all `chi`.
    pub matching: Vec<usize>,
}

/// Normal closure of the generator commutators.
pub fn derived_subgroup(group: &FiniteGroup, cap: usize) -> Result<FiniteGroup, TorusError> {
    let m = &group.module;
    let gens = &group.gens;
    let comm =
        |a: &GroupElem, b: &GroupElem| m.mul(&m.mul(a, b), &m.mul(&m.inverse(a), &m.inverse(b)));
    let mut cs = Vec::new();
    for a in gens {
        for b in gens {
            cs.push(comm(a, b));
        }
    }
    let mut d = group_closure(m, &cs, cap)?;
    loop {
        let mut grew = false;
        let dg = d.gens.clone();
        for s in gens {
            let sinv = m.inverse(s);
            for x in &dg {
                let c = m.mul(&m.mul(s, x), &sinv);
                grew |= d.adjoin(&c, cap)?;
            }
        }
        if !grew {
            return Ok(d);
        }
    }
}

pub fn twist_diagnostic(
    model: &TorusModel,
    verdicts: &[Verdict],
    mults: &[MultRow],
    cap: usize,
) -> Result<TwistReport, TorusError> {
    let emb = &model.emb;
    let g = transvection_group(&emb.module, cap)?;
    let d = derived_subgroup(&g, cap)?;
    let ord = emb.order();
    let inside: Vec<usize> = (0..ord).filter(|&i| d.contains(&emb.mats[i])).collect();
    let candidates: Vec<usize> = (0..ord)
        .filter(|&t| inside.iter().all(|&i| (t * i) % ord == 0))
        .collect();
    let fits = |t: usize| (0..ord).all(|k| verdicts[k].appears == (mults[(k + t) % ord].mult == 1));
    let matching = candidates.iter().copied().filter(|&t| fits(t)).collect();
    Ok(TwistReport {
        group_order: g.order(),
        derived_order: d.order(),
        candidates,
        raw_match: fits(0),
        matching,
    })
}

// ---- weight vectors ----

/// Function with value `e_y` at `x`, zero off `x + U^perp`.
pub fn delta_at(rep: &RingWeilRep, x: &[u64], y: usize) -> Vec<C64> {
    let m = &rep.module;
    let d = rep.sigma_dim();
    let (j, u) = rep.locate(x);
    let ph = rep.psi.half().at(-(m.form(&rep.reps[j], &u) as i128));
    let rho = rep.residue_heis(&m.neg(&u));
    let mut e = vec![ZERO; d];
    e[y] = ONE;
    let mut out = vec![ZERO; rep.dim()];
    for (k, v) in rho.apply(&e).into_iter().enumerate() {
        out[j * d + k] = ph * v;
    }
    out
}

fn scale_vec(m: &SympModule, c: u64, v: &[i128]) -> ModVec {
    m.reduce(&v.iter().map(|&x| x * c as i128).collect::<Vec<_>>())
}

/// `pi^k (c0 + c1 pi) = (p c1, c0)` applied `k` times.
fn pi_shift(p: u64, mut c: (i128, i128), k: u32) -> (i128, i128) {
    for _ in 0..k {
        c = (p as i128 * c.1, c.0);
    }
    c
}

/// Weight vector of `chi` for the representation twisted to match the
/// criteria: `S(t) phi = chi(t) lambda(t) phi`, where `lambda = chars[twist]`.
pub fn eigenvector_phi(
    model: &TorusModel,
    chi: &TorusChar,
    verdict: &Verdict,
    twist: usize,
) -> Result<Vec<C64>, TorusError> {
    if !verdict.appears {
        return Err(TorusError::DoesNotAppear);
    }
    let emb = &model.emb;
    let rep = &model.rep;
    let m = &emb.module;
    let params = emb.params;
    if params.n % 2 == 0 {
        return Err(TorusError::EvenTruncation(params.n));
    }
    let big_n = (params.n - 1) / 2;
    let p = params.p;
    let lam = &model.chars[twist];
    let c = chi.conductor;
    if c == 0 && params.autodual() {
        return Ok(delta_at(rep, &m.zero(), 0));
    }
    let a = verdict
        .witness
        .as_ref()
        .map(|w| (w.a.0 as i128, w.a.1 as i128));
    let ga = |i: usize| {
        let g = &emb.elems[i];
        let s = emb.quad.square_of_generator() as i128;
        let (a0, a1) = a.expect("witness");
        let (x, y) = (g.xi as i128, g.eta as i128);
        (x * a0 + s * y * a1, x * a1 + y * a0)
    };
    let mut phi = vec![ZERO; rep.dim()];
    let add = |phi: &mut Vec<C64>, w: C64, v: &[C64]| {
        for (o, x) in phi.iter_mut().zip(v) {
            *o += w * x;
        }
    };
    match params.kind {
        TorusKind::Unramified { uval: 0, d } => {
            let j = c / 2;
            let step = emb.congruence_step(j);
            let sc = pow_u64(p, big_n + 1 - j);
            for i in 0..step {
                let (x0, x1) = ga(i);
                let pt = scale_vec(m, sc, &[x0, x1 * d as i128]);
                add(&mut phi, chi.value(i).conj(), &delta_at(rep, &pt, 0));
            }
        }
        TorusKind::Ramified => {
            let j = c / 2;
            let step = emb.congruence_step(c);
            for i in 0..step {
                let w = pi_shift(p, ga(i), 2 * big_n + 2 - j);
                let pt = m.reduce(&[w.1, w.0]);
                add(&mut phi, chi.value(i).conj(), &delta_at(rep, &pt, 0));
            }
        }
        TorusKind::Unramified { d, .. } => {
            // Weighted average of the twisted S(g) conj(lambda(g)) over T / T_{j+1}.
            let average = |v: &[C64], j1: u32| {
                let step = emb.congruence_step(j1);
                let mut out = vec![ZERO; rep.dim()];
                for i in 0..step {
                    let w = chi.value(i).conj() * lam.value(i).conj();
                    add(&mut out, w, &model.ops[i].apply(v));
                }
                out
            };
            if c <= 1 {
                for y in 0..rep.sigma_dim() {
                    let v = average(&delta_at(rep, &m.zero(), y), 1);
                    if norm(&v) > 1e-6 {
                        return Ok(v);
                    }
                }
                return Err(TorusError::DoesNotAppear);
            }
            let j = (c - 1) / 2;
            let (a0, a1) = a.expect("witness");
            let pt = scale_vec(m, pow_u64(p, big_n - j), &[a0, a1 * d as i128]);
            let y0 = rep.sigma.model.locate(&rep.sigma.module.zero()).0;
            phi = average(&delta_at(rep, &pt, y0), j + 1);
        }
    }
    Ok(phi)
}

/// `max_t |S(t) phi - chi(t) lambda(t) phi| / |phi|`.
pub fn eigen_residual(model: &TorusModel, phi: &[C64], chi: &TorusChar, twist: usize) -> f64 {
    let nphi = norm(phi);
    let lam = &model.chars[twist];
    (0..model.emb.order())
        .into_par_iter()
        .map(|i| {
            let s = model.ops[i].apply(phi);
            let e = chi.value(i) * lam.value(i);
            s.iter()
                .zip(phi)
                .map(|(a, b)| (a - e * b).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / nphi
        })
        .reduce(|| 0.0, f64::max)
}

// ---- full analysis ----

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterRow {
    pub id: usize,
    pub char_order: usize,
    pub conductor: u32,
    pub mult: i64,
    pub mult_dev: f64,
    pub predicted: bool,
    pub rule: &'static str,
    pub witness: Option<Witness>,
    pub eigen_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct TorusOptions {
    pub cap_dim: usize,
    pub cap_group: usize,
    /// Run the twist diagnostic when `p = 3`.
    pub twist_diagnostic: bool,
}

impl Default for TorusOptions {
    fn default() -> Self {
        TorusOptions {
            cap_dim: crate::weil_ring::DEFAULT_DIM_CAP,
            cap_group: crate::symp_module::DEFAULT_GROUP_CAP,
            twist_diagnostic: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TorusAnalysis {
    pub params: TorusParams,
    pub torus_order: usize,
    pub dim: usize,
    /// Largest conductor observable at this truncation.
    pub visibility: u32,
    pub embedding_defects: usize,
    pub rows: Vec<CharacterRow>,
    pub mult_sum: i64,
    pub multiplicity_free: bool,
    pub max_mult_dev: f64,
    pub eta0: Option<Eta0Report>,
    pub char_norm: f64,
    pub orbit_count: usize,
    pub twist: Option<TwistReport>,
    pub applied_twist: usize,
    pub criteria_match: bool,
    pub max_eigen_residual: f64,
}

pub fn analyze_torus(
    params: &TorusParams,
    opts: &TorusOptions,
) -> Result<TorusAnalysis, TorusError> {
    let model = torus_model(params, opts.cap_dim)?;
    analyze_model(&model, opts)
}

pub fn analyze_model(model: &TorusModel, opts: &TorusOptions) -> Result<TorusAnalysis, TorusError> {
    let emb = &model.emb;
    let params = emb.params;
    let mults = torus_multiplicities(model);
    let eta = match params.kind {
        TorusKind::Unramified { .. } => Some(eta0(emb)?),
        TorusKind::Ramified => None,
    };
    let eta_id = eta.as_ref().and_then(|e| e.id);
    let verdicts: Vec<Verdict> = model
        .chars
        .par_iter()
        .map(|chi| predicate(emb, chi, eta_id))
        .collect();
    let raw_match = (0..emb.order()).all(|k| verdicts[k].appears == (mults[k].mult == 1));
    let twist = if opts.twist_diagnostic && params.p == 3 {
        Some(twist_diagnostic(model, &verdicts, &mults, opts.cap_group)?)
    } else {
        None
    };
    let applied_twist = if raw_match {
        0
    } else {
        twist
            .as_ref()
            .and_then(|t| t.matching.first().copied())
            .unwrap_or(0)
    };
    let criteria_match = raw_match || twist.as_ref().is_some_and(|t| !t.matching.is_empty());
    let residuals: Vec<Option<f64>> = model
        .chars
        .par_iter()
        .zip(&verdicts)
        .map(|(chi, v)| {
            if !v.appears || params.n % 2 == 0 {
                return None;
            }
            let phi = eigenvector_phi(model, chi, v, applied_twist).ok()?;
            Some(eigen_residual(model, &phi, chi, applied_twist))
        })
        .collect();
    let rows: Vec<CharacterRow> = model
        .chars
        .iter()
        .zip(verdicts)
        .zip(&mults)
        .zip(&residuals)
        .map(|(((chi, v), mr), res)| CharacterRow {
            id: chi.id,
            char_order: chi.char_order(),
            conductor: chi.conductor,
            mult: mr.mult,
            mult_dev: mr.dev,
            predicted: v.appears,
            rule: v.rule,
            witness: v.witness,
            eigen_residual: *res,
        })
        .collect();
    let (char_norm, orbit_count) = orbit_identity(model)?;
    let max_eigen_residual = rows
        .iter()
        .filter(|r| r.predicted)
        .map(|r| {
            r.eigen_residual.unwrap_or(if params.n % 2 == 0 {
                0.0
            } else {
                f64::INFINITY
            })
        })
        .fold(0.0, f64::max);
    Ok(TorusAnalysis {
        params,
        torus_order: emb.order(),
        dim: model.rep.dim(),
        visibility: emb.level(),
        embedding_defects: emb.embedding_defects(),
        mult_sum: rows.iter().map(|r| r.mult).sum(),
        multiplicity_free: rows.iter().all(|r| r.mult == 0 || r.mult == 1),
        max_mult_dev: rows.iter().map(|r| r.mult_dev).fold(0.0, f64::max),
        rows,
        eta0: eta,
        char_norm,
        orbit_count,
        twist,
        applied_twist,
        criteria_match,
        max_eigen_residual,
    })
}

// ---- residue-level operator formulas ----

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueCheck {
    pub p: u64,
    /// Torus elements with `g != +-1` compared against the Gauss-sum matrix.
    pub compared: usize,
    /// Literal formula (built on `conj(psi)` and the Weil index of `conj(psi)/2`) against `S`.
    pub gauss_dev: f64,
    /// Literal formula against the model attached to `conj(psi)`, i.e. the
    /// entrywise conjugate of `S` in the delta basis.
    pub gauss_dev_conj: f64,
    /// `S(-1) phi_s = (-1/p) phi_{-s}`.
    pub neg_one_dev: f64,
    /// `-tr S(g) = eta0(g)` for `g != 1`.
    pub trace_sign_ok: bool,
    pub trace_dev: f64,
}

/// Operators of the torus on the residue space `b* = O''/p O''` (the `n = 1`
/// non-autodual model) against closed Gauss-sum formulas; `gamma_0 = 1`.
pub fn residue_operator_check(p: u64) -> Result<ResidueCheck, TorusError> {
    let params = TorusParams::unramified(p, 1, 1)?;
    let model = torus_model(&params, usize::MAX)?;
    let TorusKind::Unramified { d, .. } = params.kind else {
        unreachable!()
    };
    let emb = &model.emb;
    let eta = eta0(emb)?;
    let rep = &model.rep;
    let dim = rep.sigma_dim();
    // phi_s is the delta at s nu = (s d) (nu/d), i.e. sigma basis index s d.
    let idx = |s: u64| rep.sigma.model.locate(&[0, (s * d) % p]).0;
    let w = weil_index(p, 1)?;
    let pref = |conj: bool| if conj { w.inv() } else { w.conj().inv() };
    let psi = |x: i128, conj: bool| {
        let v = root_of_unity(rem(x, p), p);
        if conj {
            v
        } else {
            v.conj()
        }
    };
    let inv2 = (p + 1) / 2;
    let mut out = ResidueCheck {
        p,
        compared: 0,
        gauss_dev: 0.0,
        gauss_dev_conj: 0.0,
        neg_one_dev: 0.0,
        trace_sign_ok: true,
        trace_dev: 0.0,
    };
    for i in 0..emb.order() {
        let g = &emb.elems[i];
        let op = model.ops[i].to_dense();
        assert_eq!(op.n, dim);
        let (x, y) = (g.xi % p, g.eta % p);
        if i != 0 {
            let tr = -model.traces[i];
            let e = eta.closed[i] as f64;
            out.trace_dev = out.trace_dev.max((tr - C64::new(e, 0.0)).norm());
            out.trace_sign_ok &= (tr.re - e).abs() < 0.5;
        }
        if y == 0 {
            if x == p - 1 {
                let leg = legendre_u64(p - 1, p) as f64;
                for s in 0..p {
                    for t in 0..p {
                        let want = if t == (p - s) % p {
                            C64::new(leg, 0.0)
                        } else {
                            ZERO
                        };
                        out.neg_one_dev =
                            out.neg_one_dev.max((op.at(idx(t), idx(s)) - want).norm());
                    }
                }
            }
            continue;
        }
        out.compared += 1;
        let yinv = mod_inv(y, p).unwrap();
        let leg = legendre_u64(d * y % p, p) as f64;
        for conj in [false, true] {
            let mut dev: f64 = 0.0;
            for s in 0..p {
                for t in 0..p {
                    let (si, ti) = (s as i128, t as i128);
                    let arg = inv2 as i128
                        * (d * yinv % p) as i128
                        * (x as i128 * (si * si + ti * ti) - 2 * si * ti);
                    let want = pref(conj) * psi(arg, conj) * leg / (p as f64).sqrt();
                    dev = dev.max((op.at(idx(t), idx(s)) - want).norm());
                }
            }
            if conj {
                out.gauss_dev_conj = out.gauss_dev_conj.max(dev);
            } else {
                out.gauss_dev = out.gauss_dev.max(dev);
            }
        }
    }
    Ok(out)
}

// ---- products of tori ----

#[derive(Debug, Clone, PartialEq)]
pub struct ProductReport {
    pub factors: Vec<TorusParams>,
    pub dim: usize,
    pub torus_order: usize,
    /// Characters `(id_1, ..., id_k)` with the product multiplicity and the factor product.
    pub table: Vec<(Vec<usize>, i64, i64)>,
    pub mismatches: usize,
    pub max_mult_dev: f64,
    /// Largest residual of tensor weight vectors over appearing product characters.
    pub eigen_residual: f64,
}

fn mixed_radix(mut idx: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (o, &s) in out.iter_mut().zip(sizes).rev() {
        *o = idx % s;
        idx /= s;
    }
    out
}

/// Multiplicities of `chi_1 x ... x chi_k` in the Weil representation of
/// the orthogonal sum, against the products of factor multiplicities.
pub fn product_torus_multiplicities(
    factors_in: &[TorusParams],
    opts: &TorusOptions,
) -> Result<ProductReport, TorusError> {
    if factors_in.is_empty() {
        return Err(TorusError::InvalidParams("empty factor list".into()));
    }
    let models: Vec<TorusModel> = factors_in
        .iter()
        .map(|s| torus_model(s, opts.cap_dim))
        .collect::<Result<_, _>>()?;
    let factor_mults: Vec<Vec<MultRow>> = models.iter().map(torus_multiplicities).collect();
    let factor_an: Vec<TorusAnalysis> = models
        .iter()
        .map(|m| analyze_model(m, opts))
        .collect::<Result<_, _>>()?;
    // fold orthogonal sums, tracking where each factor's coordinates land
    let mut big = models[0].emb.module.clone();
    let mut perms: Vec<Vec<usize>> = vec![(0..big.dim()).collect()];
    for md in &models[1..] {
        let ds = direct_sum(&big, &md.emb.module)?;
        for pm in perms.iter_mut() {
            for c in pm.iter_mut() {
                *c = ds.perm1[*c];
            }
        }
        perms.push(ds.perm2.clone());
        big = ds.module;
    }
    let dim_prod: usize = models.iter().map(|m| m.rep.dim()).product();
    let big_rep = build_ring_rep(&big, opts.cap_dim.max(dim_prod))?;
    let sizes: Vec<usize> = models.iter().map(|m| m.emb.order()).collect();
    let total: usize = sizes.iter().product();
    let k = big.dim();
    let embed = |tuple: &[usize]| {
        let mut mat = vec![0u64; k * k];
        for (f, &i) in tuple.iter().enumerate() {
            let g = &models[f].emb.mats[i];
            let kk = perms[f].len();
            for r in 0..kk {
                for c in 0..kk {
                    mat[perms[f][r] * k + perms[f][c]] = g.mat[r * kk + c];
                }
            }
        }
        GroupElem { mat }
    };
    let ops: Vec<BlockMonomial> = (0..total)
        .into_par_iter()
        .map(|t| big_rep.operator(&embed(&mixed_radix(t, &sizes))))
        .collect();
    let traces: Vec<C64> = ops.iter().map(|o| o.trace()).collect();
    let char_val = |ids: &[usize], tuple: &[usize]| -> C64 {
        ids.iter()
            .zip(tuple)
            .zip(&models)
            .map(|((&id, &i), m)| m.chars[id].value(i))
            .product()
    };
    let rows: Vec<(Vec<usize>, i64, i64, f64)> = (0..total)
        .into_par_iter()
        .map(|c| {
            let ids = mixed_radix(c, &sizes);
            let v = det_sum(total, |t| {
                char_val(&ids, &mixed_radix(t, &sizes)).conj() * traces[t]
            }) / total as f64;
            let mult = v.re.round() as i64;
            let expect: i64 = ids
                .iter()
                .zip(&factor_mults)
                .map(|(&id, fm)| fm[id].mult)
                .product();
            (ids, mult, expect, (v - C64::new(mult as f64, 0.0)).norm())
        })
        .collect();
    // tensor weight vectors
    let tensor_index = |coords: &[(usize, usize)]| {
        let mut w = big.zero();
        let mut yi = 0;
        for (f, &(ci, y)) in coords.iter().enumerate() {
            let x = &models[f].rep.reps[ci];
            for (c, &v) in x.iter().enumerate() {
                w[perms[f][c]] = v;
            }
            yi = yi * models[f].rep.sigma_dim() + y;
        }
        big_rep.coset_of(&w) * big_rep.sigma_dim() + yi
    };
    let mut eigen_residual: f64 = 0.0;
    let mut vectors: Vec<Vec<Vec<C64>>> = Vec::new();
    for (f, m) in models.iter().enumerate() {
        let an = &factor_an[f];
        let mut vs = Vec::new();
        for (chi, row) in m.chars.iter().zip(&an.rows) {
            let v = Verdict {
                appears: row.predicted,
                rule: row.rule,
                witness: row.witness.clone(),
            };
            vs.push(if row.mult == 1 && row.predicted {
                eigenvector_phi(m, chi, &v, an.applied_twist).unwrap_or_default()
            } else {
                Vec::new()
            });
        }
        vectors.push(vs);
    }
    for (ids, mult, _, _) in rows.iter().filter(|r| r.1 == 1) {
        let parts: Vec<&Vec<C64>> = ids
            .iter()
            .enumerate()
            .map(|(f, &id)| &vectors[f][id])
            .collect();
        if parts.iter().any(|v| v.is_empty()) || *mult != 1 {
            continue;
        }
        let mut phi = vec![ZERO; big_rep.dim()];
        let fdims: Vec<usize> = models.iter().map(|m| m.rep.dim()).collect();
        for t in 0..dim_prod {
            let loc = mixed_radix(t, &fdims);
            let val: C64 = loc.iter().zip(&parts).map(|(&b, v)| v[b]).product();
            if val == ZERO {
                continue;
            }
            let coords: Vec<(usize, usize)> = loc
                .iter()
                .zip(&models)
                .map(|(&b, m)| (b / m.rep.sigma_dim(), b % m.rep.sigma_dim()))
                .collect();
            phi[tensor_index(&coords)] += val;
        }
        let twist_ids: Vec<usize> = factor_an.iter().map(|a| a.applied_twist).collect();
        let nphi = norm(&phi);
        let res = (0..total)
            .into_par_iter()
            .map(|t| {
                let tuple = mixed_radix(t, &sizes);
                let e = char_val(ids, &tuple) * char_val(&twist_ids, &tuple);
                let s = ops[t].apply(&phi);
                s.iter()
                    .zip(&phi)
                    .map(|(a, b)| (a - e * b).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
                    / nphi
            })
            .reduce(|| 0.0, f64::max);
        eigen_residual = eigen_residual.max(res);
    }
    Ok(ProductReport {
        factors: factors_in.to_vec(),
        dim: big_rep.dim(),
        torus_order: total,
        mismatches: rows.iter().filter(|r| r.1 != r.2).count(),
        max_mult_dev: rows.iter().map(|r| r.3).fold(0.0, f64::max),
        table: rows.into_iter().map(|(i, a, b, _)| (i, a, b)).collect(),
        eigen_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_u(p: u64, uval: u32, n: u32) -> TorusParams {
        TorusParams::unramified(p, uval, n).unwrap()
    }

    #[test]
    fn embedding_is_faithful() {
        for s in [
            params_u(3, 0, 1),
            params_u(3, 1, 1),
            TorusParams::ramified(3, 1).unwrap(),
            params_u(5, 0, 1),
        ] {
            let e = build_embedding(&s).unwrap();
            assert_eq!(e.embedding_defects(), 0, "{}", s.label());
        }
        assert_eq!(build_embedding(&params_u(3, 0, 1)).unwrap().order(), 12);
        assert_eq!(build_embedding(&params_u(3, 1, 1)).unwrap().order(), 4);
        assert_eq!(
            build_embedding(&TorusParams::ramified(3, 1).unwrap())
                .unwrap()
                .order(),
            18
        );
    }

    #[test]
    fn theta_basics() {
        let q = QuadRingParams::unramified(3, 2, 3).unwrap();
        assert!(theta_j(&q, 0, 1).unwrap().is_one());
        for eta in 0..9 {
            let t = theta_j(&q, eta, 1).unwrap();
            assert_eq!(t.norm().value, 1);
            assert!(in_congruence(&t, 1));
            assert_eq!(t.mul(&theta_j(&q, -eta, 1).unwrap()), q.one());
            // theta - p eta nu - 1 in p^2 O'
            assert_eq!((t.xi + 9 - 1) % 9, 0);
        }
        // additive modulo T_{j+1}
        let q2 = QuadRingParams::unramified(3, 2, 2).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let prod = theta_j(&q2, a, 1)
                    .unwrap()
                    .mul(&theta_j(&q2, b, 1).unwrap());
                let sum = theta_j(&q2, a + b, 1).unwrap();
                assert!(in_congruence(&prod.mul(&sum.inv().unwrap()), 2));
            }
        }
        let r = QuadRingParams::ramified(3, 4).unwrap();
        let t = theta_j(&r, 1, 0).unwrap();
        assert!(in_congruence(&t, 1) && t.norm().value == 1);
        assert!(matches!(
            theta_j(&q2, 1, 3),
            Err(TorusError::InsufficientTruncation { .. })
        ));
    }

    #[test]
    fn conductors_unramified_level_two() {
        let e = build_embedding(&params_u(3, 0, 1)).unwrap();
        let cs = characters(&e);
        let count = |c| cs.iter().filter(|x| x.conductor == c).count();
        assert_eq!((count(0), count(1), count(2)), (1, 3, 8));
    }

    #[test]
    fn ramified_conductors_are_even_except_sign() {
        let e = build_embedding(&TorusParams::ramified(3, 1).unwrap()).unwrap();
        let cs = characters(&e);
        let odd: Vec<_> = cs.iter().filter(|c| c.conductor % 2 == 1).collect();
        assert_eq!(odd.len(), 1);
        assert_eq!(odd[0].char_order(), 2);
    }

    #[test]
    fn chi_blj_classification() {
        let e = build_embedding(&params_u(3, 0, 1)).unwrap();
        let zero = chi_blj(&e, 0, 2, 1).unwrap();
        assert!(zero.iter().flatten().all(|v| (v - ONE).norm() < 1e-12));
        let c1 = chi_blj(&e, 1, 2, 1).unwrap();
        let c2 = chi_blj(&e, 2, 2, 1).unwrap();
        assert_ne!(c1, c2);
        for a in [1, 2] {
            for b in [1, 2] {
                let same = chi_blj(&e, a, 2, 1).unwrap() == chi_blj(&e, b, 2, 1).unwrap();
                assert_eq!(same, (b - a) % 3 == 0);
            }
        }
        assert!(chi_blj(&e, 1, 4, 1).is_err());
    }

    #[test]
    fn multiplicity_one_small() {
        for s in [
            params_u(3, 0, 1),
            params_u(3, 1, 1),
            TorusParams::ramified(3, 1).unwrap(),
        ] {
            let a = analyze_torus(&s, &TorusOptions::default()).unwrap();
            assert!(
                a.multiplicity_free && a.mult_sum == a.dim as i64,
                "{}",
                s.label()
            );
            assert!(a.criteria_match);
            assert!(a.max_eigen_residual < 1e-9);
            assert_eq!(a.orbit_count as f64, a.char_norm.round());
        }
    }

    #[test]
    fn non_autodual_excludes_eta0() {
        let a = analyze_torus(&params_u(3, 1, 1), &TorusOptions::default()).unwrap();
        let eta = a.eta0.as_ref().unwrap().id.unwrap();
        for r in &a.rows {
            assert_eq!(r.mult == 0, r.id == eta);
        }
        assert_eq!(a.rows[eta].char_order, 2);
    }

    #[test]
    fn autodual_trivial_weight_is_delta0() {
        let model = torus_model(&params_u(3, 0, 1), 100).unwrap();
        let v = predicate(&model.emb, &model.chars[0], None);
        let phi = eigenvector_phi(&model, &model.chars[0], &v, 0).unwrap();
        assert_eq!(phi, delta_at(&model.rep, &model.emb.module.zero(), 0));
        let bad = Verdict {
            appears: false,
            rule: "",
            witness: None,
        };
        assert_eq!(
            eigenvector_phi(&model, &model.chars[1], &bad, 0),
            Err(TorusError::DoesNotAppear)
        );
    }

    #[test]
    fn residue_formulas() {
        let r = residue_operator_check(3).unwrap();
        assert!(r.neg_one_dev < 1e-9 && r.trace_sign_ok && r.compared == 2);
        assert!(r.gauss_dev_conj < 1e-9);
    }

    #[test]
    fn product_of_two_tori() {
        let a = params_u(3, 0, 1);
        let b = params_u(3, 1, 1);
        let r = product_torus_multiplicities(&[a, b], &TorusOptions::default()).unwrap();
        assert_eq!(r.mismatches, 0);
        assert_eq!(r.dim, 27);
        assert!(r.eigen_residual < 1e-9);
    }

    #[test]
    fn eta0_formulas_agree() {
        for p in [3, 5, 7] {
            let e = build_embedding(&params_u(p, 1, 1)).unwrap();
            let r = eta0(&e).unwrap();
            assert!(r.agree, "p = {p}: {:?} {:?}", r.closed, r.hilbert);
            assert!(r.id.is_some());
            assert_eq!(r.closed[0], 1);
        }
        let e = build_embedding(&params_u(3, 1, 1)).unwrap();
        let minus = e.index_of(&e.quad.elem(-1, 0)).unwrap();
        assert_eq!(eta0(&e).unwrap().closed[minus], 1);
        assert!(eta0(&build_embedding(&TorusParams::ramified(3, 1).unwrap()).unwrap()).is_err());
    }
}
