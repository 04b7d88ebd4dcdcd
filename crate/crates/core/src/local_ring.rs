//! Arithmetic in `Z/p^m` for odd `p`, additive characters, Legendre symbols,
//! and truncated quadratic extensions with their norm-one groups.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Unit-modulus complex scalar. Compared up to [`TAU_EQ`].
pub type Phase = Complex64;

/// Equality tolerance for phases and operator entries.
pub const TAU_EQ: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("p = {0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("ring level must be at least 1")]
    ZeroLevel,
    #[error("legendre symbol needs a residue field element, got level {0}")]
    LevelNotOne(u32),
    #[error("ring mismatch: Z/{0} vs Z/{1}")]
    ParamMismatch(u64, u64),
    #[error("{0} is not a quadratic nonresidue mod {1}")]
    NotNonresidue(u64, u64),
    #[error("character scale {0} is not a unit")]
    NotUnit(u64),
    #[error("congruence level {j} exceeds truncation depth {depth}")]
    DepthExceeded { j: u32, depth: u32 },
    #[error("modulus p^m = {p}^{m} overflows the integer backend")]
    Overflow { p: u64, m: u32 },
}

pub fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub fn pow_u64(p: u64, e: u32) -> u64 {
    p.checked_pow(e).expect("modulus overflow")
}

pub fn mod_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = ((r as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inv(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

/// Reduce a signed integer into `[0, m)`.
#[inline]
pub fn rem(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

/// p-adic valuation of `a` in `Z/p^m`; `val(0) = m`.
pub fn val_mod(a: u64, p: u64, m: u32) -> u32 {
    let a = a % pow_u64(p, m);
    if a == 0 {
        return m;
    }
    let (mut a, mut v) = (a, 0);
    while a % p == 0 {
        a /= p;
        v += 1;
    }
    v
}

/// Euler criterion on plain integers: +1, -1 or 0.
pub fn legendre_u64(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if mod_pow(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Smallest quadratic nonresidue mod `p`.
pub fn least_nonresidue(p: u64) -> u64 {
    (2..p).find(|&a| legendre_u64(a, p) == -1).unwrap()
}

/// Primitive phase `exp(2 pi i num / den)`.
pub fn root_of_unity(num: u64, den: u64) -> Phase {
    let k = num % den;
    let ang = 2.0 * PI * (k as f64) / (den as f64);
    Complex64::new(ang.cos(), ang.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingParams {
    pub p: u64,
    pub m: u32,
}

impl RingParams {
    pub fn new(p: u64, m: u32) -> Result<Self, RingError> {
        if !is_odd_prime(p) {
            return Err(RingError::NotOddPrime(p));
        }
        if m == 0 {
            return Err(RingError::ZeroLevel);
        }
        if p.checked_pow(m).map_or(true, |q| q > u32::MAX as u64) {
            return Err(RingError::Overflow { p, m });
        }
        Ok(RingParams { p, m })
    }

    pub fn modulus(&self) -> u64 {
        pow_u64(self.p, self.m)
    }

    pub fn elem(&self, v: i128) -> RingElem {
        RingElem {
            params: *self,
            value: rem(v, self.modulus()),
        }
    }

    pub fn zero(&self) -> RingElem {
        self.elem(0)
    }

    pub fn one(&self) -> RingElem {
        self.elem(1)
    }

    pub fn elements(&self) -> impl Iterator<Item = RingElem> + '_ {
        (0..self.modulus()).map(move |v| RingElem {
            params: *self,
            value: v,
        })
    }

    pub fn inv2(&self) -> u64 {
        mod_inv(2, self.modulus()).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingElem {
    pub params: RingParams,
    pub value: u64,
}

impl RingElem {
    pub fn val(&self) -> u32 {
        val_mod(self.value, self.params.p, self.params.m)
    }

    pub fn is_unit(&self) -> bool {
        self.value % self.params.p != 0
    }

    pub fn inv(&self) -> Option<RingElem> {
        mod_inv(self.value, self.params.modulus()).map(|v| RingElem {
            params: self.params,
            value: v,
        })
    }

    pub fn pow(&self, e: u64) -> RingElem {
        RingElem {
            params: self.params,
            value: mod_pow(self.value, e, self.params.modulus()),
        }
    }

    fn check(&self, o: &RingElem) {
        debug_assert_eq!(self.params, o.params, "ring mismatch");
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.params.modulus())
    }
}

impl Add for RingElem {
    type Output = RingElem;
    fn add(self, o: RingElem) -> RingElem {
        self.check(&o);
        self.params.elem(self.value as i128 + o.value as i128)
    }
}

impl Sub for RingElem {
    type Output = RingElem;
    fn sub(self, o: RingElem) -> RingElem {
        self.check(&o);
        self.params.elem(self.value as i128 - o.value as i128)
    }
}

impl Mul for RingElem {
    type Output = RingElem;
    fn mul(self, o: RingElem) -> RingElem {
        self.check(&o);
        self.params.elem(self.value as i128 * o.value as i128)
    }
}

impl Neg for RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        self.params.elem(-(self.value as i128))
    }
}

/// Legendre symbol of a residue-field element.
pub fn legendre(a: &RingElem) -> Result<i32, RingError> {
    if a.params.m != 1 {
        return Err(RingError::LevelNotOne(a.params.m));
    }
    Ok(legendre_u64(a.value, a.params.p))
}

/// `x -> exp(2 pi i scale x / p^m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdditiveChar {
    pub params: RingParams,
    pub scale: u64,
}

impl AdditiveChar {
    pub fn new(params: RingParams, scale: u64) -> Result<Self, RingError> {
        if scale % params.p == 0 {
            return Err(RingError::NotUnit(scale));
        }
        Ok(AdditiveChar {
            params,
            scale: scale % params.modulus(),
        })
    }

    pub fn canonical(params: RingParams) -> Self {
        AdditiveChar { params, scale: 1 }
    }

    /// The character `x -> psi(x/2)`.
    pub fn half(&self) -> Self {
        let q = self.params.modulus();
        AdditiveChar {
            params: self.params,
            scale: ((self.scale as u128 * self.params.inv2() as u128) % q as u128) as u64,
        }
    }

    /// Evaluate on a raw integer representative.
    pub fn at(&self, x: i128) -> Phase {
        let q = self.params.modulus();
        let v = rem(x, q);
        root_of_unity(((v as u128 * self.scale as u128) % q as u128) as u64, q)
    }

    pub fn eval(&self, x: &RingElem) -> Result<Phase, RingError> {
        if x.params != self.params {
            return Err(RingError::ParamMismatch(
                self.params.modulus(),
                x.params.modulus(),
            ));
        }
        Ok(self.at(x.value as i128))
    }
}

/// Shorthand for [`AdditiveChar::eval`].
pub fn psi_eval(chi: &AdditiveChar, x: &RingElem) -> Result<Phase, RingError> {
    chi.eval(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadKind {
    /// `O'' = O[nu]`, `nu^2 = d` a nonresidue unit.
    Unramified { d: u64 },
    /// `O'' = O[pi]`, `pi^2 = p`.
    Ramified,
}

/// Truncation `O''/pi''^level` of a quadratic extension of `Z_p`.
/// For the unramified kind `pi'' = p`, so the level is the `p`-adic depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadRingParams {
    pub p: u64,
    pub kind: QuadKind,
    pub level: u32,
}

impl QuadRingParams {
    pub fn unramified(p: u64, d: u64, level: u32) -> Result<Self, RingError> {
        RingParams::new(p, level.max(1))?;
        if legendre_u64(d, p) != -1 {
            return Err(RingError::NotNonresidue(d, p));
        }
        Ok(QuadRingParams {
            p,
            kind: QuadKind::Unramified { d },
            level,
        })
    }

    pub fn ramified(p: u64, level: u32) -> Result<Self, RingError> {
        RingParams::new(p, level.div_ceil(2).max(1))?;
        Ok(QuadRingParams {
            p,
            kind: QuadKind::Ramified,
            level,
        })
    }

    /// Exponents of the moduli of the `xi` and `eta` coordinates.
    pub fn coord_exps(&self) -> (u32, u32) {
        match self.kind {
            QuadKind::Unramified { .. } => (self.level, self.level),
            QuadKind::Ramified => (self.level.div_ceil(2), self.level / 2),
        }
    }

    pub fn coord_moduli(&self) -> (u64, u64) {
        let (a, b) = self.coord_exps();
        (pow_u64(self.p, a), pow_u64(self.p, b))
    }

    /// Ring in which norms and traces live.
    pub fn base(&self) -> RingParams {
        RingParams {
            p: self.p,
            m: self.coord_exps().0.max(1),
        }
    }

    /// `nu^2` or `pi^2`.
    pub fn square_of_generator(&self) -> u64 {
        match self.kind {
            QuadKind::Unramified { d } => d,
            QuadKind::Ramified => self.p,
        }
    }

    pub fn elem(&self, xi: i128, eta: i128) -> QuadElem {
        let (mx, me) = self.coord_moduli();
        QuadElem {
            params: *self,
            xi: rem(xi, mx),
            eta: rem(eta, me),
        }
    }

    pub fn one(&self) -> QuadElem {
        self.elem(1, 0)
    }

    pub fn elements(&self) -> impl Iterator<Item = QuadElem> + '_ {
        let (mx, me) = self.coord_moduli();
        (0..mx).flat_map(move |x| (0..me).map(move |y| self.elem(x as i128, y as i128)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadElem {
    pub params: QuadRingParams,
    pub xi: u64,
    pub eta: u64,
}

impl QuadElem {
    pub fn mul(&self, o: &QuadElem) -> QuadElem {
        let s = self.params.square_of_generator() as i128;
        let (a, b, c, d) = (
            self.xi as i128,
            self.eta as i128,
            o.xi as i128,
            o.eta as i128,
        );
        self.params.elem(a * c + s * b * d, a * d + b * c)
    }

    pub fn conj(&self) -> QuadElem {
        self.params.elem(self.xi as i128, -(self.eta as i128))
    }

    pub fn norm(&self) -> RingElem {
        let s = self.params.square_of_generator() as i128;
        let (a, b) = (self.xi as i128, self.eta as i128);
        self.params.base().elem(a * a - s * b * b)
    }

    pub fn trace(&self) -> RingElem {
        self.params.base().elem(2 * self.xi as i128)
    }

    pub fn is_one(&self) -> bool {
        let (mx, me) = self.params.coord_moduli();
        self.xi == 1 % mx && self.eta % me == 0
    }

    /// Valuation with respect to `pi''`, truncated at the level.
    pub fn val(&self) -> u32 {
        let (ex, ee) = self.params.coord_exps();
        let p = self.params.p;
        match self.params.kind {
            QuadKind::Unramified { .. } => val_mod(self.xi, p, ex).min(val_mod(self.eta, p, ee)),
            QuadKind::Ramified => {
                let vx = 2 * val_mod(self.xi, p, ex);
                let ve = if ee == 0 {
                    self.params.level
                } else {
                    2 * val_mod(self.eta, p, ee) + 1
                };
                vx.min(ve).min(self.params.level)
            }
        }
    }

    pub fn is_unit(&self) -> bool {
        self.norm().is_unit()
    }

    pub fn inv(&self) -> Option<QuadElem> {
        let n = self.norm().inv()?;
        let c = self.conj();
        Some(self.params.elem(
            c.xi as i128 * n.value as i128,
            c.eta as i128 * n.value as i128,
        ))
    }
}

pub fn quad_norm(z: &QuadElem) -> RingElem {
    z.norm()
}

pub fn quad_trace(z: &QuadElem) -> RingElem {
    z.trace()
}

pub fn quad_conj(z: &QuadElem) -> QuadElem {
    z.conj()
}

/// All elements of norm one in the truncated ring.
pub fn norm_one_group(params: &QuadRingParams) -> Vec<QuadElem> {
    params
        .elements()
        .filter(|z| z.norm().value == 1 % params.base().modulus())
        .collect()
}

/// Congruence subgroup `T_j = {g : g - 1 in pi''^j O''}`.
pub fn congruence_filtration(group: &[QuadElem], j: u32) -> Result<Vec<QuadElem>, RingError> {
    let Some(first) = group.first() else {
        return Ok(Vec::new());
    };
    let params = first.params;
    if j > params.level {
        return Err(RingError::DepthExceeded {
            j,
            depth: params.level,
        });
    }
    Ok(group
        .iter()
        .copied()
        .filter(|g| in_congruence(g, j))
        .collect())
}

/// Membership `g - 1 in pi''^j O''`.
pub fn in_congruence(g: &QuadElem, j: u32) -> bool {
    let d = g.params.elem(g.xi as i128 - 1, g.eta as i128);
    d.val() >= j
}

/// Depth of `g` in the congruence filtration (`level` for the identity).
pub fn congruence_depth(g: &QuadElem) -> u32 {
    g.params.elem(g.xi as i128 - 1, g.eta as i128).val()
}
