//! Dense complex matrices and block-monomial operators.

use num_complex::Complex64;

use crate::local_ring::Phase;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul(&self, o: &CMat) -> CMat {
        assert_eq!(self.n, o.n);
        let n = self.n;
        let mut r = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &o.data[k * n..(k + 1) * n];
                let out = &mut r.data[i * n..(i + 1) * n];
                for (o, b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        r
    }

    pub fn adjoint(&self) -> CMat {
        let n = self.n;
        let mut r = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                r.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        r
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, o: &CMat) -> CMat {
        CMat {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &CMat) -> CMat {
        CMat {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }

    /// Largest entry modulus of `self - o`.
    pub fn max_dev(&self, o: &CMat) -> f64 {
        self.data
            .iter()
            .zip(&o.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `self * self^dagger` from the identity.
    pub fn unitarity_dev(&self) -> f64 {
        self.mul(&self.adjoint()).max_dev(&CMat::identity(self.n))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn kron(&self, o: &CMat) -> CMat {
        let (n, m) = (self.n, o.n);
        let mut r = CMat::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self.at(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        r.set(i * m + k, j * m + l, a * o.at(k, l));
                    }
                }
            }
        }
        r
    }

    pub fn rank(&self, tol: f64) -> usize {
        rank_of_rows(self.n, self.n, self.data.clone(), tol)
    }
}

/// Rank of a `rows x cols` matrix by Gaussian elimination with partial pivoting.
pub fn rank_of_rows(rows: usize, cols: usize, mut a: Vec<C64>, tol: f64) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let (piv, best) = (rank..rows)
            .map(|r| (r, a[r * cols + c].norm()))
            .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            continue;
        }
        for k in 0..cols {
            a.swap(rank * cols + k, piv * cols + k);
        }
        let inv = ONE / a[rank * cols + c];
        for r in (rank + 1)..rows {
            let f = a[r * cols + c] * inv;
            if f == ZERO {
                continue;
            }
            for k in c..cols {
                let v = a[rank * cols + k];
                a[r * cols + k] -= f * v;
            }
        }
        rank += 1;
    }
    rank
}

/// Orthonormal basis (Gram-Schmidt) of the span of `vecs`, dropping dependent ones.
pub fn orthonormal_span(vecs: &[Vec<C64>], tol: f64) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::new();
    for v in vecs {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &out {
                let c: C64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nrm = norm(&w);
        if nrm > tol {
            out.push(w.iter().map(|x| x / nrm).collect());
        }
    }
    out
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Operator whose row block `i` reads column block `cols[i]` through `blocks[i]`.
///
/// `(A phi)_i = blocks[i] * phi_{cols[i]}`, each block `d x d`.
#[derive(Debug, Clone)]
pub struct BlockMonomial {
    pub d: usize,
    pub cols: Vec<usize>,
    pub blocks: Vec<CMat>,
}

impl BlockMonomial {
    pub fn dim(&self) -> usize {
        self.d * self.cols.len()
    }

    pub fn trace(&self) -> C64 {
        self.cols
            .iter()
            .enumerate()
            .filter(|(i, c)| *i == **c)
            .map(|(i, _)| self.blocks[i].trace())
            .sum()
    }

    pub fn to_dense(&self) -> CMat {
        let d = self.d;
        let mut m = CMat::zeros(self.dim());
        for (i, (&c, b)) in self.cols.iter().zip(&self.blocks).enumerate() {
            for r in 0..d {
                for s in 0..d {
                    m.set(i * d + r, c * d + s, b.at(r, s));
                }
            }
        }
        m
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let d = self.d;
        let mut out = vec![ZERO; self.dim()];
        for (i, (&c, b)) in self.cols.iter().zip(&self.blocks).enumerate() {
            let src = &v[c * d..(c + 1) * d];
            let y = b.apply(src);
            out[i * d..(i + 1) * d].copy_from_slice(&y);
        }
        out
    }
}

/// Exact-phase helper: `true` when `|a - b| < tol`.
pub fn close(a: Phase, b: Phase, tol: f64) -> bool {
    (a - b).norm() < tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_and_trace() {
        let mut a = CMat::identity(2);
        a.set(0, 1, C64::new(0.0, 1.0));
        let b = CMat::identity(3).scale(C64::new(2.0, 0.0));
        let k = a.kron(&b);
        assert!((k.trace() - C64::new(12.0, 0.0)).norm() < 1e-12);
        assert_eq!(k.rank(1e-9), 6);
    }

    #[test]
    fn rank_detects_dependence() {
        let v = vec![ONE, ONE, ONE, ONE];
        assert_eq!(rank_of_rows(2, 2, v, 1e-9), 1);
        let span = orthonormal_span(&[vec![ONE, ZERO], vec![ONE, ZERO], vec![ONE, ONE]], 1e-9);
        assert_eq!(span.len(), 2);
    }

    #[test]
    fn block_monomial_matches_dense() {
        let b = BlockMonomial {
            d: 1,
            cols: vec![1, 0],
            blocks: vec![CMat::identity(1), CMat::identity(1)],
        };
        let dense = b.to_dense();
        let v = vec![ONE, C64::new(2.0, 0.0)];
        assert_eq!(b.apply(&v), dense.apply(&v));
        assert_eq!(b.trace(), ZERO);
    }
}

/// Monomial operator: `(M phi)[i] = phases[i] * phi[cols[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub cols: Vec<usize>,
    pub phases: Vec<C64>,
}

impl Monomial {
    pub fn identity(n: usize) -> Self {
        Monomial {
            cols: (0..n).collect(),
            phases: vec![ONE; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.cols
            .iter()
            .zip(&self.phases)
            .map(|(&c, &a)| a * v[c])
            .collect()
    }

    /// `self * o`.
    pub fn compose(&self, o: &Monomial) -> Monomial {
        let cols = self.cols.iter().map(|&c| o.cols[c]).collect();
        let phases = self
            .cols
            .iter()
            .zip(&self.phases)
            .map(|(&c, &a)| a * o.phases[c])
            .collect();
        Monomial { cols, phases }
    }

    pub fn trace(&self) -> C64 {
        self.cols
            .iter()
            .zip(&self.phases)
            .enumerate()
            .filter(|(i, (c, _))| i == *c)
            .map(|(_, (_, a))| *a)
            .sum()
    }

    /// `tr(self * o^dagger)`.
    pub fn hs_inner(&self, o: &Monomial) -> C64 {
        (0..self.dim())
            .filter(|&i| self.cols[i] == o.cols[i])
            .map(|i| self.phases[i] * o.phases[i].conj())
            .sum()
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim());
        for (i, (&c, &a)) in self.cols.iter().zip(&self.phases).enumerate() {
            m.set(i, c, a);
        }
        m
    }
}

#[cfg(test)]
mod monomial_tests {
    use super::*;

    #[test]
    fn compose_matches_dense() {
        let a = Monomial {
            cols: vec![1, 2, 0],
            phases: vec![ONE, C64::new(0.0, 1.0), -ONE],
        };
        let b = Monomial {
            cols: vec![2, 0, 1],
            phases: vec![C64::new(0.0, -1.0), ONE, ONE],
        };
        assert!(
            a.compose(&b)
                .to_dense()
                .max_dev(&a.to_dense().mul(&b.to_dense()))
                < 1e-12
        );
        assert!((a.hs_inner(&a) - C64::new(3.0, 0.0)).norm() < 1e-12);
    }
}
