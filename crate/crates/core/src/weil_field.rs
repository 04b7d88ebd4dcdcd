//! The canonical Weil representation of `Sp(2l, F_p)`: Weil indices,
//! Bruhat factorization relative to the Siegel parabolic, Rao's `theta`
//! and the normalized operators `S(g) = m(g) q^{j/2} M_X(g)`.

use rayon::prelude::*;
use thiserror::Error;

use crate::heisenberg::{HeisElem, HeisError, SchrodingerModel};
use crate::linop::{CMat, C64};
use crate::local_ring::{
    legendre_u64, mod_inv, rem, root_of_unity, AdditiveChar, QuadRingParams, RingError,
};
use crate::symp_module::{transvection_group, FiniteGroup, GroupElem, SympError, SympModule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("module is not a standard symplectic space over F_p")]
    NotField,
    #[error("the Weil index is only defined on units")]
    ZeroArgument,
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Symp(#[from] SympError),
    #[error(transparent)]
    Heis(#[from] HeisError),
}

/// `omega(a) = p^{-1/2} sum_t psi(a t^2 / 2)` for the canonical `psi` on `F_p`.
#[derive(Debug, Clone)]
pub struct WeilIndexTable {
    pub p: u64,
    values: Vec<C64>,
}

impl WeilIndexTable {
    pub fn new(p: u64) -> Self {
        let inv2 = (p + 1) / 2;
        let norm = (p as f64).sqrt();
        let values = (0..p)
            .map(|a| {
                if a == 0 {
                    return C64::new(0.0, 0.0);
                }
                let s: C64 = (0..p)
                    .map(|t| root_of_unity((a * t % p) * t % p * inv2 % p, p))
                    .sum();
                s / norm
            })
            .collect();
        WeilIndexTable { p, values }
    }

    pub fn get(&self, a: u64) -> Result<C64, FieldError> {
        let a = a % self.p;
        if a == 0 {
            return Err(FieldError::ZeroArgument);
        }
        Ok(self.values[a as usize])
    }
}

pub fn weil_index(p: u64, a: u64) -> Result<C64, FieldError> {
    WeilIndexTable::new(p).get(a)
}

/// `omega'(1)` for `F_{p^2}`: `p^{-1} sum_t psi(tr(t^2) / 2)`.
pub fn weil_index_quadratic(p: u64) -> Result<C64, FieldError> {
    let d = crate::local_ring::least_nonresidue(p);
    let f = QuadRingParams::unramified(p, d, 1)?;
    let psi = AdditiveChar::canonical(f.base()).half();
    let s: C64 = f
        .elements()
        .map(|t| psi.at(t.mul(&t).trace().value as i128))
        .sum();
    Ok(s / p as f64)
}

// ---- small dense matrices over F_p ----

mod fp {
    use crate::local_ring::{mod_inv, rem};

    pub type Mat = Vec<i64>;

    pub fn identity(n: usize) -> Mat {
        let mut m = vec![0; n * n];
        for i in 0..n {
            m[i * n + i] = 1;
        }
        m
    }

    pub fn transpose(a: &Mat, n: usize) -> Mat {
        (0..n * n).map(|e| a[(e % n) * n + e / n]).collect()
    }

    /// Inverse and determinant by Gauss-Jordan.
    pub fn inv_det(a: &Mat, n: usize, p: u64) -> Option<(Mat, i64)> {
        let mut m = a.clone();
        let mut inv = identity(n);
        let mut det: i128 = 1;
        let pi = p as i128;
        for c in 0..n {
            let r = (c..n).find(|&r| m[r * n + c] % p as i64 != 0)?;
            if r != c {
                for k in 0..n {
                    m.swap(r * n + k, c * n + k);
                    inv.swap(r * n + k, c * n + k);
                }
                det = -det;
            }
            let pv = m[c * n + c];
            det = (det * pv as i128).rem_euclid(pi);
            let iv = mod_inv(rem(pv as i128, p), p)? as i128;
            for k in 0..n {
                m[c * n + k] = (m[c * n + k] as i128 * iv).rem_euclid(pi) as i64;
                inv[c * n + k] = (inv[c * n + k] as i128 * iv).rem_euclid(pi) as i64;
            }
            for r in 0..n {
                if r == c || m[r * n + c] == 0 {
                    continue;
                }
                let f = m[r * n + c] as i128;
                for k in 0..n {
                    m[r * n + k] =
                        (m[r * n + k] as i128 - f * m[c * n + k] as i128).rem_euclid(pi) as i64;
                    inv[r * n + k] =
                        (inv[r * n + k] as i128 - f * inv[c * n + k] as i128).rem_euclid(pi) as i64;
                }
            }
        }
        Some((inv, det.rem_euclid(pi) as i64))
    }

    pub fn det(a: &Mat, n: usize, p: u64) -> i64 {
        inv_det(a, n, p).map(|x| x.1).unwrap_or(0)
    }

    /// `(M, N, j)` with `M c N = diag(I_j, 0)`, `M`, `N` invertible.
    pub fn rank_normal_form(c: &Mat, n: usize, p: u64) -> (Mat, Mat, usize) {
        let pi = p as i128;
        let mut a = c.clone();
        let mut mm = identity(n);
        let mut nn = identity(n);
        let mut k = 0;
        while k < n {
            let Some((pr, pc)) = (k..n)
                .flat_map(|r| (k..n).map(move |s| (r, s)))
                .find(|&(r, s)| a[r * n + s] != 0)
            else {
                break;
            };
            for t in 0..n {
                a.swap(pr * n + t, k * n + t);
                mm.swap(pr * n + t, k * n + t);
            }
            for t in 0..n {
                a.swap(t * n + pc, t * n + k);
                nn.swap(t * n + pc, t * n + k);
            }
            let iv = mod_inv(a[k * n + k] as u64, p).unwrap() as i128;
            for t in 0..n {
                a[k * n + t] = (a[k * n + t] as i128 * iv).rem_euclid(pi) as i64;
                mm[k * n + t] = (mm[k * n + t] as i128 * iv).rem_euclid(pi) as i64;
            }
            for r in 0..n {
                if r != k && a[r * n + k] != 0 {
                    let f = a[r * n + k] as i128;
                    for t in 0..n {
                        a[r * n + t] =
                            (a[r * n + t] as i128 - f * a[k * n + t] as i128).rem_euclid(pi) as i64;
                        mm[r * n + t] = (mm[r * n + t] as i128 - f * mm[k * n + t] as i128)
                            .rem_euclid(pi) as i64;
                    }
                }
            }
            for s in 0..n {
                if s != k && a[k * n + s] != 0 {
                    let f = a[k * n + s] as i128;
                    for t in 0..n {
                        a[t * n + s] =
                            (a[t * n + s] as i128 - f * a[t * n + k] as i128).rem_euclid(pi) as i64;
                        nn[t * n + s] = (nn[t * n + s] as i128 - f * nn[t * n + k] as i128)
                            .rem_euclid(pi) as i64;
                    }
                }
            }
            k += 1;
        }
        (mm, nn, k)
    }
}

/// `g = p1 tau_S p2` with `p1`, `p2` in the Siegel parabolic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruhatFactorization {
    pub p1: GroupElem,
    pub s: Vec<usize>,
    pub p2: GroupElem,
    pub j: usize,
    /// Legendre symbol of a representative of `theta(g)`.
    pub theta: i32,
}

fn check_field(m: &SympModule) -> Result<(), FieldError> {
    if m.level != 1 || m.twists.iter().any(|&t| t != 0) {
        return Err(FieldError::NotField);
    }
    Ok(())
}

fn block(g: &GroupElem, l: usize, bi: usize, bj: usize) -> fp::Mat {
    let k = 2 * l;
    (0..l * l)
        .map(|e| g.mat[(bi * l + e / l) * k + bj * l + e % l] as i64)
        .collect()
}

fn from_blocks(m: &SympModule, a: &fp::Mat, b: &fp::Mat, c: &fp::Mat, d: &fp::Mat) -> GroupElem {
    let l = m.h();
    let k = 2 * l;
    let mut rows = vec![0i128; k * k];
    for i in 0..l {
        for j in 0..l {
            rows[i * k + j] = a[i * l + j] as i128;
            rows[i * k + l + j] = b[i * l + j] as i128;
            rows[(l + i) * k + j] = c[i * l + j] as i128;
            rows[(l + i) * k + l + j] = d[i * l + j] as i128;
        }
    }
    m.from_rows(&rows)
}

/// `m(a) = diag(a, a^{-T})`.
pub fn levi(m: &SympModule, a: &[i64]) -> GroupElem {
    let l = m.h();
    let (ainv, _) = fp::inv_det(&a.to_vec(), l, m.p).expect("invertible");
    let z = vec![0; l * l];
    from_blocks(m, &a.to_vec(), &z, &z, &fp::transpose(&ainv, l))
}

/// `n(s) = [[I, s], [0, I]]`, `s` symmetric.
pub fn unipotent(m: &SympModule, s: &[i64]) -> GroupElem {
    let l = m.h();
    let id = fp::identity(l);
    from_blocks(m, &id, &s.to_vec(), &vec![0; l * l], &id)
}

/// `tau_S: e_i -> f_i, f_i -> -e_i` for `i` in `S`.
pub fn tau(m: &SympModule, s: &[usize]) -> GroupElem {
    let l = m.h();
    let mut e = vec![0; l * l];
    for &i in s {
        e[i * l + i] = 1;
    }
    let ie: fp::Mat = (0..l * l).map(|x| fp::identity(l)[x] - e[x]).collect();
    let ne: fp::Mat = e.iter().map(|x| -x).collect();
    from_blocks(m, &ie, &ne, &e, &ie)
}

/// `-tau_{1..l}`.
pub fn j_element(m: &SympModule) -> GroupElem {
    let all: Vec<usize> = (0..m.h()).collect();
    m.neg_elem(&tau(m, &all))
}

pub fn is_parabolic(m: &SympModule, g: &GroupElem) -> bool {
    block(g, m.h(), 1, 0).iter().all(|&x| x == 0)
}

/// Determinant of the action on `X` of a parabolic element.
pub fn det_x(m: &SympModule, g: &GroupElem) -> i64 {
    fp::det(&block(g, m.h(), 0, 0), m.h(), m.p)
}

pub fn bruhat_decompose(m: &SympModule, g: &GroupElem) -> Result<BruhatFactorization, FieldError> {
    check_field(m)?;
    let (l, p) = (m.h(), m.p);
    let c = block(g, l, 1, 0);
    let (mm, nn, j) = fp::rank_normal_form(&c, l, p);
    let (mm_inv, det_m) = fp::inv_det(&mm, l, p).expect("invertible");
    let a1 = fp::transpose(&mm_inv, l);
    let b1 = nn.clone();
    let det_a1 = mod_inv(det_m as u64, p).unwrap() as i64;
    let det_b1 = fp::det(&b1, l, p);
    let ma1 = levi(m, &a1);
    let mb1 = levi(m, &b1);
    let g1 = m.mul(&m.mul(&ma1, g), &mb1);

    let in_s = |i: usize| i < j;
    let a = block(&g1, l, 0, 0);
    let mut s = vec![0i64; l * l];
    for r in 0..l {
        for q in 0..l {
            if in_s(q) {
                s[r * l + q] = -a[r * l + q];
            } else if in_s(r) {
                s[r * l + q] = -a[q * l + r];
            }
        }
    }
    let ns = unipotent(m, &s);
    let g2 = m.mul(&ns, &g1);

    let d = block(&g2, l, 1, 1);
    let mut s2 = vec![0i64; l * l];
    for r in 0..l {
        for q in 0..l {
            if in_s(r) {
                s2[r * l + q] = -d[r * l + q];
            } else if in_s(q) {
                s2[r * l + q] = -d[q * l + r];
            }
        }
    }
    let ns2 = unipotent(m, &s2);
    let g3 = m.mul(&g2, &ns2);

    let sset: Vec<usize> = (0..j).collect();
    let t = tau(m, &sset);
    let par = m.mul(&g3, &m.inverse(&t));
    debug_assert!(is_parabolic(m, &par));
    let p1 = m.mul(&m.mul(&m.inverse(&ma1), &m.inverse(&ns)), &par);
    let p2 = m.mul(&m.inverse(&ns2), &m.inverse(&mb1));
    let th = rem(
        det_a1 as i128 * det_b1 as i128 % p as i128 * det_x(m, &par) as i128,
        p,
    );
    Ok(BruhatFactorization {
        p1,
        s: sset,
        p2,
        j,
        theta: legendre_u64(th, p),
    })
}

/// Rao's `theta(g)` as a Legendre sign.
pub fn theta(m: &SympModule, g: &GroupElem) -> Result<i32, FieldError> {
    Ok(bruhat_decompose(m, g)?.theta)
}

/// Weil representation on the Schrödinger model with `A = X` the `e`-side.
#[derive(Debug, Clone)]
pub struct FieldWeil {
    pub module: SympModule,
    pub model: SchrodingerModel,
    pub omega: WeilIndexTable,
    x_elems: Vec<Vec<u64>>,
}

impl FieldWeil {
    pub fn new(p: u64, l: usize) -> Result<Self, FieldError> {
        let m = SympModule::field(p, l)?;
        let model = SchrodingerModel::standard(&m)?;
        let x_elems = model.a.elements(&m).collect();
        Ok(FieldWeil {
            module: m,
            model,
            omega: WeilIndexTable::new(p),
            x_elems,
        })
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// `M_X(g) phi(w) = |X|^{-1} sum_x psi(beta(x,w)/2) phi(g^{-1}(w+x))`.
    pub fn m_x(&self, g: &GroupElem) -> CMat {
        let m = &self.module;
        let ginv = m.inverse(g);
        let nx = self.x_elems.len() as f64;
        let mut out = CMat::zeros(self.dim());
        for (i, c) in self.model.reps.iter().enumerate() {
            for x in &self.x_elems {
                let v = m.apply(&ginv, &m.add(c, x));
                let (k, f) = self.model.value_factor(&v);
                out.add_at(i, k, self.model.half_psi(m.form(x, c)) * f / nx);
            }
        }
        out
    }

    /// `m(g) = omega(theta)^{-1} omega(1)^{1-j}`, with `j`.
    pub fn rao_scalar(&self, g: &GroupElem) -> Result<(C64, usize), FieldError> {
        let b = bruhat_decompose(&self.module, g)?;
        let p = self.module.p;
        let th = if b.theta == 1 {
            1
        } else {
            crate::local_ring::least_nonresidue(p)
        };
        let w1 = self.omega.get(1)?;
        let s = self.omega.get(th)?.inv() * w1.powi(1 - b.j as i32);
        Ok((s, b.j))
    }

    pub fn operator(&self, g: &GroupElem) -> Result<CMat, FieldError> {
        if self.module.dim() == 0 {
            return Ok(CMat::identity(1));
        }
        let (s, j) = self.rao_scalar(g)?;
        let q = (self.module.p as f64).powf(j as f64 / 2.0);
        Ok(self.m_x(g).scale(s * q))
    }

    pub fn heis(&self, h: &HeisElem) -> CMat {
        self.model.heis_op(h).to_dense()
    }
}

/// The group `Sp(2l, F_p)` together with all Weil operators.
#[derive(Debug, Clone)]
pub struct CanonicalWeilRep {
    pub group: FiniteGroup,
    pub weil: FieldWeil,
    pub ops: Vec<CMat>,
}

pub fn canonical_rep(l: usize, p: u64, cap: usize) -> Result<CanonicalWeilRep, FieldError> {
    let weil = FieldWeil::new(p, l)?;
    let group = transvection_group(&weil.module, cap)?;
    let ops = (0..group.order())
        .into_par_iter()
        .map(|i| weil.operator(&group.elem(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CanonicalWeilRep { group, weil, ops })
}

impl CanonicalWeilRep {
    pub fn op_of(&self, g: &GroupElem) -> Option<&CMat> {
        self.group.find(g).map(|i| &self.ops[i])
    }

    /// `max |S(g)S(h) - S(gh)|` over the given index pairs.
    pub fn homomorphism_dev(&self, pairs: &[(usize, usize)]) -> f64 {
        let m = &self.group.module;
        pairs
            .par_iter()
            .map(|&(a, b)| {
                let gh = m.mul(&self.group.elem(a), &self.group.elem(b));
                let k = self.group.find(&gh).expect("closed");
                self.ops[a].mul(&self.ops[b]).max_dev(&self.ops[k])
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `max |S(g) rho(h) - rho(g.h) S(g)|` over sampled `(g, h)`.
    pub fn intertwining_dev(&self, pairs: &[(usize, HeisElem)]) -> f64 {
        let m = &self.group.module;
        pairs
            .par_iter()
            .map(|(a, h)| {
                let g = self.group.elem(*a);
                let gh = HeisElem {
                    w: m.apply(&g, &h.w),
                    t: h.t,
                };
                let lhs = self.ops[*a].mul(&self.weil.heis(h));
                let rhs = self.weil.heis(&gh).mul(&self.ops[*a]);
                lhs.max_dev(&rhs)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `(1/|G|) sum |tr S(g)|^2`.
    pub fn character_norm(&self) -> f64 {
        let parts: Vec<f64> = self
            .ops
            .par_chunks(4096)
            .map(|c| c.iter().map(|o| o.trace().norm_sqr()).sum())
            .collect();
        parts.iter().sum::<f64>() / self.ops.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicReport {
    pub parabolic_count: usize,
    pub parabolic_dev: f64,
    /// Deviation of `S(J_l)` from `(-1/q)^l omega(1)^{-l} q^{l/2} M_X(J_l)`.
    pub j_dev: f64,
}

/// `S(p) = (det_X p / q) M_X(p)` on the parabolic, and the scalar at `J_l`.
pub fn parabolic_identities_check(rep: &CanonicalWeilRep) -> Result<ParabolicReport, FieldError> {
    let w = &rep.weil;
    let m = &w.module;
    let p = m.p;
    let mut count = 0;
    let mut dev: f64 = 0.0;
    for (i, g) in rep.group.elements().enumerate() {
        if !is_parabolic(m, &g) {
            continue;
        }
        count += 1;
        let z = legendre_u64(rem(det_x(m, &g) as i128, p), p) as f64;
        dev = dev.max(rep.ops[i].max_dev(&w.m_x(&g).scale(C64::new(z, 0.0))));
    }
    let l = m.h() as i32;
    let jel = j_element(m);
    let sign = (legendre_u64(p - 1, p) as f64).powi(l);
    let scalar = w.omega.get(1)?.powi(-l) * sign * (p as f64).powf(l as f64 / 2.0);
    let j_dev = w.operator(&jel)?.max_dev(&w.m_x(&jel).scale(scalar));
    Ok(ParabolicReport {
        parabolic_count: count,
        parabolic_dev: dev,
        j_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symp_module::DEFAULT_GROUP_CAP;

    #[test]
    fn gauss_identities() {
        for p in [3u64, 5, 7] {
            let t = WeilIndexTable::new(p);
            let w1 = t.get(1).unwrap();
            assert!((w1 * w1 - legendre_u64(p - 1, p) as f64).norm() < 1e-9);
            for a in 1..p {
                let wa = t.get(a).unwrap();
                assert!((wa.norm() - 1.0).abs() < 1e-9);
                assert!((wa.inv() * w1 - legendre_u64(a, p) as f64).norm() < 1e-9);
            }
            assert_eq!(t.get(0), Err(FieldError::ZeroArgument));
        }
        for p in [3u64, 5] {
            let w1 = weil_index(p, 1).unwrap();
            let wq = weil_index_quadratic(p).unwrap();
            assert!((-wq - (-w1) * (-w1)).norm() < 1e-9);
        }
    }

    #[test]
    fn bruhat_reconstructs() {
        for (p, l) in [(3u64, 1usize), (5, 1), (3, 2)] {
            let m = SympModule::field(p, l).unwrap();
            let g = transvection_group(&m, DEFAULT_GROUP_CAP).unwrap();
            for e in g.elements().step_by(7) {
                let b = bruhat_decompose(&m, &e).unwrap();
                assert!(is_parabolic(&m, &b.p1) && is_parabolic(&m, &b.p2));
                let rec = m.mul(&m.mul(&b.p1, &tau(&m, &b.s)), &b.p2);
                assert_eq!(rec, e);
                let c = block(&e, l, 1, 0);
                assert_eq!(b.j, fp::rank_normal_form(&c, l, p).2);
            }
        }
    }

    #[test]
    fn theta_basics() {
        let m = SympModule::field(3, 2).unwrap();
        assert_eq!(theta(&m, &m.identity()).unwrap(), 1);
        for s in [vec![], vec![0], vec![1], vec![0, 1]] {
            let b = bruhat_decompose(&m, &tau(&m, &s)).unwrap();
            assert_eq!(b.j, s.len());
            assert_eq!(b.theta, 1);
        }
        // diag(2, 2^{-1}) in SL2(F3)
        let m = SympModule::field(3, 1).unwrap();
        assert_eq!(theta(&m, &levi(&m, &[2])).unwrap(), -1);
    }

    #[test]
    fn theta_independent_of_factorization() {
        let m = SympModule::field(5, 1).unwrap();
        let g = transvection_group(&m, DEFAULT_GROUP_CAP).unwrap();
        let pars: Vec<GroupElem> = g.elements().filter(|e| is_parabolic(&m, e)).collect();
        for e in g.elements().step_by(11) {
            let t0 = theta(&m, &e).unwrap();
            for q in pars.iter().step_by(9) {
                // theta(q g q^{-1}) = theta(g) since det_X(q) det_X(q^{-1}) is a square
                let conj = m.mul(&m.mul(q, &e), &m.inverse(q));
                assert_eq!(theta(&m, &conj).unwrap(), t0);
                let shifted = m.mul(q, &e);
                let dq = legendre_u64(rem(det_x(&m, q) as i128, 5), 5);
                assert_eq!(theta(&m, &shifted).unwrap(), dq * t0);
            }
        }
    }

    #[test]
    fn sl2_f3_is_genuine() {
        let rep = canonical_rep(1, 3, DEFAULT_GROUP_CAP).unwrap();
        assert_eq!(rep.group.order(), 24);
        assert_eq!(rep.weil.dim(), 3);
        let n = rep.group.order();
        let pairs: Vec<_> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
        assert!(rep.homomorphism_dev(&pairs) < 1e-8);
        assert!((rep.character_norm() - 2.0).abs() < 1e-9);
        for o in &rep.ops {
            assert!(o.unitarity_dev() < 1e-9);
        }
    }

    #[test]
    fn intertwines_heisenberg() {
        let rep = canonical_rep(1, 5, DEFAULT_GROUP_CAP).unwrap();
        let m = rep.weil.module.clone();
        let pairs: Vec<_> = (0..rep.group.order())
            .step_by(3)
            .map(|i| {
                (
                    i,
                    HeisElem {
                        w: m.decode(i % 25),
                        t: (i % 5) as u64,
                    },
                )
            })
            .collect();
        assert!(rep.intertwining_dev(&pairs) < 1e-8);
    }

    #[test]
    fn sp4_f3_sampled() {
        let rep = canonical_rep(2, 3, DEFAULT_GROUP_CAP).unwrap();
        assert_eq!(rep.group.order(), 51840);
        let n = rep.group.order();
        let pairs: Vec<_> = (0..500)
            .map(|i| ((i * 7919) % n, (i * 104729 + 13) % n))
            .collect();
        assert!(rep.homomorphism_dev(&pairs) < 1e-8);
        let r = parabolic_identities_check(&rep).unwrap();
        assert!(r.parabolic_dev < 1e-9 && r.j_dev < 1e-9);
    }

    #[test]
    fn parabolic_scalars() {
        for p in [3u64, 5] {
            let rep = canonical_rep(1, p, DEFAULT_GROUP_CAP).unwrap();
            let r = parabolic_identities_check(&rep).unwrap();
            assert_eq!(r.parabolic_count, (p * (p - 1)) as usize);
            assert!(r.parabolic_dev < 1e-9 && r.j_dev < 1e-9);
        }
    }
}
