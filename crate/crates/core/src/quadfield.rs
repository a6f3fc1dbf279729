//! Exact arithmetic in the maximal order of Q(sqrt D), D prime, class number one.
//!
//! Elements are stored as a + b*omega where omega = (1 + sqrt D)/2 for D = 1 mod 4
//! and omega = sqrt D otherwise. Products are formed in i128 and narrowed with a
//! checked conversion, so overflow panics instead of wrapping.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ntheory::{factorize, is_prime, is_square, isqrt, kronecker};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OmegaKind {
    SqrtD,
    HalfIntegral,
}

/// a + b*omega.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct QuadInt {
    pub a: i64,
    pub b: i64,
}

impl QuadInt {
    pub const ZERO: QuadInt = QuadInt { a: 0, b: 0 };
    pub const ONE: QuadInt = QuadInt { a: 1, b: 0 };

    pub const fn new(a: i64, b: i64) -> Self {
        QuadInt { a, b }
    }

    pub const fn int(n: i64) -> Self {
        QuadInt { a: n, b: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn is_rational(&self) -> bool {
        self.b == 0
    }

    /// gcd of the two coordinates.
    pub fn content(&self) -> i64 {
        crate::ntheory::gcd(self.a, self.b)
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

impl std::ops::Add for QuadInt {
    type Output = QuadInt;
    fn add(self, o: QuadInt) -> QuadInt {
        QuadInt::new(self.a.checked_add(o.a).unwrap(), self.b.checked_add(o.b).unwrap())
    }
}

impl std::ops::Sub for QuadInt {
    type Output = QuadInt;
    fn sub(self, o: QuadInt) -> QuadInt {
        QuadInt::new(self.a.checked_sub(o.a).unwrap(), self.b.checked_sub(o.b).unwrap())
    }
}

impl std::ops::Neg for QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        QuadInt::new(-self.a, -self.b)
    }
}

fn narrow(x: i128) -> i64 {
    i64::try_from(x).expect("ring element exceeds i64")
}

/// Z-lattice Z(a,0) + Z(b,c) in omega-coordinates, a, c > 0, 0 <= b < a.
/// Every nonzero ideal of the order has a unique such form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ideal {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Ideal {
    pub fn norm(&self) -> i64 {
        self.a * self.c
    }

    pub fn is_one(&self) -> bool {
        self.a == 1 && self.c == 1
    }

    pub fn contains(&self, x: QuadInt) -> bool {
        self.reduce(x).is_zero()
    }

    /// Canonical representative in the box 0 <= a' < A, 0 <= b' < C.
    pub fn reduce(&self, x: QuadInt) -> QuadInt {
        let q = x.b.div_euclid(self.c);
        let b = x.b - q * self.c;
        let a = (x.a as i128 - q as i128 * self.b as i128).rem_euclid(self.a as i128);
        QuadInt::new(a as i64, b)
    }
}

/// Hermite form of the lattice spanned by integer row vectors (x, y).
/// Returns None when the rows do not span a rank-2 lattice.
pub fn hnf_rows(rows: &[(i128, i128)]) -> Option<Ideal> {
    let mut rows: Vec<(i128, i128)> = rows.to_vec();
    loop {
        let mut nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].1 != 0).collect();
        if nz.len() <= 1 {
            break;
        }
        nz.sort_by_key(|&i| rows[i].1.abs());
        let p = rows[nz[0]];
        for &i in &nz[1..] {
            let q = rows[i].1.div_euclid(p.1);
            rows[i].0 -= q * p.0;
            rows[i].1 -= q * p.1;
        }
    }
    let piv = *rows.iter().find(|r| r.1 != 0)?;
    let piv = if piv.1 < 0 { (-piv.0, -piv.1) } else { piv };
    let mut a: i128 = 0;
    for r in rows.iter().filter(|r| r.1 == 0) {
        a = num_integer::Integer::gcd(&a, &r.0);
    }
    if a == 0 {
        return None;
    }
    Some(Ideal { a: narrow(a), b: narrow(piv.0.rem_euclid(a)), c: narrow(piv.1) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimeFactor {
    pub p: i64,
    pub prime_ideal_generator: QuadInt,
    pub splitting: Splitting,
    pub exponent: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealFactorization {
    pub n: i64,
    pub factors: Vec<PrimeFactor>,
}

/// Static data of K = Q(sqrt D).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldContext {
    pub d: i64,
    pub disc: i64,
    pub omega_kind: OmegaKind,
    pub eps0: QuadInt,
    pub log_eps0: f64,
    pub class_number: u64,
    pub narrow_class_number: u64,
    pub minkowski_bound: f64,
    /// omega^2 = t*omega + s
    t: i64,
    s: i64,
}

/// Builds the context for prime D, certifying class number one.
pub fn make_field(d: i64) -> Result<FieldContext> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    let (omega_kind, disc, t, s) = if d % 4 == 1 {
        (OmegaKind::HalfIntegral, d, 1, (d - 1) / 4)
    } else {
        (OmegaKind::SqrtD, 4 * d, 0, d)
    };
    let mut ctx = FieldContext {
        d,
        disc,
        omega_kind,
        eps0: QuadInt::ONE,
        log_eps0: 0.0,
        class_number: 0,
        narrow_class_number: 0,
        minkowski_bound: (disc as f64).sqrt() / 2.0,
        t,
        s,
    };
    ctx.eps0 = ctx.fundamental_unit_cf()?;
    ctx.log_eps0 = ctx.embed(ctx.eps0).0.ln();
    let hplus = narrow_class_number(disc);
    let h = if ctx.norm(ctx.eps0) == -1 { hplus } else { hplus / 2 };
    ctx.narrow_class_number = hplus;
    ctx.class_number = h;
    let certified = ctx.minkowski_certificate();
    if h == 1 && !certified {
        return Err(Error::UnsupportedRing(format!(
            "form-cycle class number 1 disagrees with the Minkowski check for D={d}"
        )));
    }
    if h != 1 {
        return Err(Error::ClassNumberNotOne { d, h });
    }
    Ok(ctx)
}

/// Number of cycles of reduced indefinite forms of discriminant disc.
pub fn narrow_class_number(disc: i64) -> u64 {
    let dd = disc as i128;
    let r = isqrt(dd);
    let lt_sqrt = |x: i128| x < 0 || x * x < dd;
    let gt_sqrt = |x: i128| x > 0 && x * x > dd;
    let mut forms = Vec::new();
    for b in 1..=r {
        if (b - dd).rem_euclid(2) != 0 {
            continue;
        }
        let ac = (b * b - dd) / 4;
        for a in 1..=ac.abs() {
            if ac % a != 0 {
                continue;
            }
            for sa in [a, -a] {
                let c = ac / sa;
                // sqrt(disc) - b < 2|a| < sqrt(disc) + b
                if gt_sqrt(2 * a + b) && lt_sqrt(2 * a - b) {
                    forms.push((sa, b, c));
                }
            }
        }
    }
    let index: HashMap<(i128, i128, i128), usize> =
        forms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let mut seen = vec![false; forms.len()];
    let mut cycles = 0;
    for start in 0..forms.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut f = forms[start];
        loop {
            let i = index[&f];
            if seen[i] {
                break;
            }
            seen[i] = true;
            let (_, b, c) = f;
            let m = 2 * c.abs();
            let nb = r - (r + b).rem_euclid(m);
            let nc = (nb * nb - dd) / (4 * c);
            f = (c, nb, nc);
        }
    }
    cycles
}

impl FieldContext {
    pub fn omega_sq(&self) -> (i64, i64) {
        (self.t, self.s)
    }

    pub fn mul(&self, x: QuadInt, y: QuadInt) -> QuadInt {
        let (a, b, c, d) = (x.a as i128, x.b as i128, y.a as i128, y.b as i128);
        let bd = b * d;
        QuadInt::new(narrow(a * c + bd * self.s as i128), narrow(a * d + b * c + bd * self.t as i128))
    }

    pub fn scale(&self, x: QuadInt, k: i64) -> QuadInt {
        QuadInt::new(x.a.checked_mul(k).unwrap(), x.b.checked_mul(k).unwrap())
    }

    pub fn conj(&self, x: QuadInt) -> QuadInt {
        QuadInt::new(x.a + x.b * self.t, -x.b)
    }

    pub fn norm(&self, x: QuadInt) -> i64 {
        let (a, b) = (x.a as i128, x.b as i128);
        narrow(a * a + self.t as i128 * a * b - self.s as i128 * b * b)
    }

    pub fn trace(&self, x: QuadInt) -> i64 {
        2 * x.a + self.t * x.b
    }

    /// The generator delta = sqrt D of the different.
    pub fn sqrt_d(&self) -> QuadInt {
        match self.omega_kind {
            OmegaKind::HalfIntegral => QuadInt::new(-1, 2),
            OmegaKind::SqrtD => QuadInt::new(0, 1),
        }
    }

    /// k with (delta) = k * (different): 1 for the half-integral basis, 2 for Z[sqrt D].
    pub fn different_index(&self) -> i64 {
        match self.omega_kind {
            OmegaKind::HalfIntegral => 1,
            OmegaKind::SqrtD => 2,
        }
    }

    /// Tr(x/delta), an integer for x in the order.
    pub fn tr_over_delta(&self, x: QuadInt) -> i64 {
        match self.omega_kind {
            OmegaKind::HalfIntegral => x.b,
            OmegaKind::SqrtD => 2 * x.b,
        }
    }

    pub fn omega_real(&self) -> (f64, f64) {
        let sd = (self.d as f64).sqrt();
        match self.omega_kind {
            OmegaKind::HalfIntegral => ((1.0 + sd) / 2.0, (1.0 - sd) / 2.0),
            OmegaKind::SqrtD => (sd, -sd),
        }
    }

    /// The two real embeddings (x, x').
    pub fn embed(&self, x: QuadInt) -> (f64, f64) {
        let (w, wp) = self.omega_real();
        (x.a as f64 + x.b as f64 * w, x.a as f64 + x.b as f64 * wp)
    }

    pub fn pow(&self, x: QuadInt, e: u32) -> QuadInt {
        let mut r = QuadInt::ONE;
        let mut base = x;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        r
    }

    /// eps0^k for any integer k.
    pub fn unit_pow(&self, k: i64) -> QuadInt {
        if k >= 0 {
            self.pow(self.eps0, k as u32)
        } else {
            let inv = self.scale(self.conj(self.eps0), self.norm(self.eps0));
            self.pow(inv, (-k) as u32)
        }
    }

    /// x / y when exact in the order.
    pub fn div_exact(&self, x: QuadInt, y: QuadInt) -> Option<QuadInt> {
        let n = self.norm(y);
        if n == 0 {
            return None;
        }
        let p = self.mul(x, self.conj(y));
        (p.a % n == 0 && p.b % n == 0).then(|| QuadInt::new(p.a / n, p.b / n))
    }

    /// m | x in the order.
    pub fn divides(&self, m: QuadInt, x: QuadInt) -> bool {
        if m.is_zero() {
            return x.is_zero();
        }
        self.div_exact(x, m).is_some()
    }

    pub fn congruent(&self, x: QuadInt, y: QuadInt, m: QuadInt) -> bool {
        self.divides(m, x - y)
    }

    pub fn is_unit(&self, x: QuadInt) -> bool {
        self.norm(x).abs() == 1
    }

    fn lattice_rows(&self, x: QuadInt) -> [(i128, i128); 2] {
        let xw = self.mul(x, QuadInt::new(0, 1));
        [(x.a as i128, x.b as i128), (xw.a as i128, xw.b as i128)]
    }

    /// The principal ideal (x), x != 0.
    pub fn ideal(&self, x: QuadInt) -> Ideal {
        hnf_rows(&self.lattice_rows(x)).expect("ideal of zero")
    }

    /// (x_1, ..., x_k) as a sum of principal ideals.
    pub fn ideal_sum(&self, xs: &[QuadInt]) -> Option<Ideal> {
        let rows: Vec<(i128, i128)> =
            xs.iter().filter(|x| !x.is_zero()).flat_map(|&x| self.lattice_rows(x)).collect();
        hnf_rows(&rows)
    }

    /// (x, c) = (1) as ideals.
    pub fn coprime(&self, x: QuadInt, c: QuadInt) -> bool {
        match self.ideal_sum(&[x, c]) {
            Some(i) => i.is_one(),
            None => false,
        }
    }

    /// Generator of the ideal gcd (x) + (y), canonical up to the unit action.
    pub fn gcd(&self, x: QuadInt, y: QuadInt) -> QuadInt {
        if x.is_zero() && y.is_zero() {
            return QuadInt::ZERO;
        }
        let g = self.ideal_sum(&[x, y]).unwrap();
        self.generator_of(g).expect("class number one")
    }

    fn fundamental_unit_cf(&self) -> Result<QuadInt> {
        let overflow = || Error::UnsupportedRing(format!("fundamental unit of D={} overflows i64", self.d));
        // continued fraction of omega written as (P + sqrt D)/Q
        let d = self.d as i128;
        let sd = isqrt(d);
        let (mut p, mut q): (i128, i128) = match self.omega_kind {
            OmegaKind::HalfIntegral => (1, 2),
            OmegaKind::SqrtD => (0, 1),
        };
        let (mut h1, mut h2): (i128, i128) = (1, 0);
        let (mut k1, mut k2): (i128, i128) = (0, 1);
        for _ in 0..100_000 {
            let a = (p + sd).div_euclid(q);
            let h = a.checked_mul(h1).and_then(|v| v.checked_add(h2)).ok_or_else(overflow)?;
            let k = a.checked_mul(k1).and_then(|v| v.checked_add(k2)).ok_or_else(overflow)?;
            h2 = h1;
            h1 = h;
            k2 = k1;
            k1 = k;
            if h > i64::MAX as i128 / 4 || k > i64::MAX as i128 / 4 {
                return Err(overflow());
            }
            let u = QuadInt::new(h as i64, -(k as i64));
            let (a_, b_) = (u.a as i128, u.b as i128);
            let n = a_
                .checked_mul(a_)
                .and_then(|v| v.checked_add(self.t as i128 * a_ * b_))
                .and_then(|v| v.checked_sub(self.s as i128 * b_ * b_))
                .ok_or_else(overflow)?;
            if n.abs() == 1 {
                let cands = [u, -u, self.conj(u), -self.conj(u)];
                let best = cands
                    .into_iter()
                    .find(|&c| self.embed(c).0 > 1.0)
                    .ok_or_else(|| Error::UnsupportedRing("no unit > 1".into()))?;
                return Ok(best);
            }
            p = a * q - p;
            q = (d - p * p) / q;
        }
        Err(Error::UnsupportedRing("continued fraction did not reach a unit".into()))
    }

    /// Exact check that every prime ideal of norm below the Minkowski bound is principal.
    pub fn minkowski_certificate(&self) -> bool {
        let m = self.minkowski_bound.floor() as i64;
        (2..=m)
            .filter(|&p| is_prime(p) && kronecker(self.disc, p) != -1)
            .all(|p| self.element_of_norm(p, self.norm_search_bound(p)).is_some())
    }

    /// Bound on |b| guaranteeing a generator of a principal ideal of norm p is found:
    /// some associate x has 1 <= |x/x'| < eps^2, hence |x| < eps*sqrt(p), |x'| <= sqrt(p).
    pub fn norm_search_bound(&self, p: i64) -> i64 {
        let eps = self.embed(self.eps0).0;
        ((eps + 1.0) * (p as f64).sqrt() / (self.disc as f64).sqrt()).ceil() as i64 + 1
    }

    /// Some x with |N(x)| = p and |b| <= bound, preferring small |b|.
    pub fn element_of_norm(&self, p: i64, bound: i64) -> Option<QuadInt> {
        let disc = self.disc as i128;
        for b in 0..=bound {
            for sgn in [1i128, -1] {
                // a^2 + t b a - s b^2 - sgn p = 0
                let bb = b as i128;
                let delta = disc * bb * bb + 4 * sgn * p as i128;
                if let Some(r) = is_square(delta) {
                    for num in [-(self.t as i128) * bb + r, -(self.t as i128) * bb - r] {
                        if num.rem_euclid(2) == 0 {
                            let x = QuadInt::new(narrow(num / 2), b);
                            if self.norm(x).abs() == p {
                                return Some(x);
                            }
                        }
                    }
                }
            }
        }
        None
    }

    /// Canonical associate: 1 <= |x/x'| < eps^2 and x > 0 in the first embedding.
    pub fn canonical_associate(&self, x: QuadInt) -> QuadInt {
        if x.is_zero() {
            return x;
        }
        let (e1, e2) = self.embed(x);
        let ratio = (e1.abs() / e2.abs()).ln();
        let k = -(ratio / (2.0 * self.log_eps0)).floor() as i64;
        let mut y = self.mul(x, self.unit_pow(k));
        // guard against rounding at the boundary
        for _ in 0..3 {
            let (f1, f2) = self.embed(y);
            let r = (f1.abs() / f2.abs()).ln() / (2.0 * self.log_eps0);
            if r < -1e-9 {
                y = self.mul(y, self.eps0);
            } else if r >= 1.0 - 1e-9 && self.ideal(y) == self.ideal(self.mul(y, self.unit_pow(-1))) {
                if r >= 1.0 + 1e-9 {
                    y = self.mul(y, self.unit_pow(-1));
                } else {
                    // exact boundary: pick the lexicographically smaller of the two
                    let z = self.mul(y, self.unit_pow(-1));
                    if (z.b.abs(), z.a.abs()) < (y.b.abs(), y.a.abs()) {
                        y = z;
                    }
                    break;
                }
            } else {
                break;
            }
        }
        if self.embed(y).0 < 0.0 {
            y = -y;
        }
        y
    }

    /// A generator of an ideal given in Hermite form.
    pub fn generator_of(&self, i: Ideal) -> Option<QuadInt> {
        if i.is_one() {
            return Some(QuadInt::ONE);
        }
        let n = i.norm();
        let bound = self.norm_search_bound(n);
        let disc = self.disc as i128;
        for b in 0..=bound {
            for sb in if b == 0 { vec![0] } else { vec![b, -b] } {
                for sgn in [1i128, -1] {
                    let bb = sb as i128;
                    let delta = disc * bb * bb + 4 * sgn * n as i128;
                    if let Some(r) = is_square(delta) {
                        for num in [-(self.t as i128) * bb + r, -(self.t as i128) * bb - r] {
                            if num.rem_euclid(2) == 0 {
                                let x = QuadInt::new(narrow(num / 2), sb);
                                if self.norm(x).abs() == n && self.ideal(x) == i {
                                    return Some(self.canonical_associate(x));
                                }
                            }
                        }
                    }
                }
            }
        }
        None
    }

    pub fn splitting(&self, p: i64) -> Splitting {
        match kronecker(self.disc, p) {
            1 => Splitting::Split,
            -1 => Splitting::Inert,
            _ => Splitting::Ramified,
        }
    }

    /// Generators of the prime ideals above the rational prime p.
    pub fn primes_above(&self, p: i64) -> Result<Vec<(QuadInt, Splitting)>> {
        let sp = self.splitting(p);
        Ok(match sp {
            Splitting::Inert => vec![(QuadInt::int(p), sp)],
            Splitting::Ramified | Splitting::Split => {
                let bound = self.norm_search_bound(p);
                let x = self
                    .element_of_norm(p, bound)
                    .ok_or(Error::GeneratorSearchExhausted { norm: p, bound })?;
                let x = self.canonical_associate(x);
                if sp == Splitting::Ramified {
                    vec![(x, sp)]
                } else {
                    let y = self.canonical_associate(self.conj(x));
                    let mut v = vec![(x, sp), (y, sp)];
                    v.sort_by_key(|(g, _)| (g.b.abs(), g.a.abs(), *g));
                    v
                }
            }
        })
    }

    /// Factorization of the ideal (n) into prime ideals.
    pub fn factor_in_k(&self, n: i64) -> Result<IdealFactorization> {
        self.factor_in_k_bounded(n, None)
    }

    /// As `factor_in_k` with an explicit generator search bound.
    pub fn factor_in_k_bounded(&self, n: i64, bound: Option<i64>) -> Result<IdealFactorization> {
        if n == 0 {
            return Err(Error::ZeroModulus);
        }
        let mut factors = Vec::new();
        for (p, e) in factorize(n) {
            let sp = self.splitting(p);
            let gens = match (sp, bound) {
                (Splitting::Inert, _) | (_, None) => self.primes_above(p)?,
                (_, Some(bd)) => {
                    let x = self
                        .element_of_norm(p, bd)
                        .ok_or(Error::GeneratorSearchExhausted { norm: p, bound: bd })?;
                    let x = self.canonical_associate(x);
                    if sp == Splitting::Ramified {
                        vec![(x, sp)]
                    } else {
                        vec![(x, sp), (self.canonical_associate(self.conj(x)), sp)]
                    }
                }
            };
            let exp = if sp == Splitting::Ramified { 2 * e } else { e };
            for (g, s) in gens {
                factors.push(PrimeFactor { p, prime_ideal_generator: g, splitting: s, exponent: exp });
            }
        }
        Ok(IdealFactorization { n, factors })
    }

    /// Prime ideal factorization of the principal ideal (x).
    pub fn factor_element(&self, x: QuadInt) -> Result<Vec<PrimeFactor>> {
        if x.is_zero() {
            return Err(Error::ZeroModulus);
        }
        let mut out = Vec::new();
        for (p, _) in factorize(self.norm(x)) {
            for (g, sp) in self.primes_above(p)? {
                let mut v = 0;
                let mut y = x;
                while let Some(z) = self.div_exact(y, g) {
                    y = z;
                    v += 1;
                }
                if v > 0 {
                    out.push(PrimeFactor { p, prime_ideal_generator: g, splitting: sp, exponent: v });
                }
            }
        }
        Ok(out)
    }

    /// Generators of all ideal divisors of (n), n >= 1.
    pub fn ideal_divisors(&self, n: i64) -> Result<Vec<QuadInt>> {
        let f = self.factor_in_k(n)?;
        Ok(self.divisors_from_factors(&f.factors))
    }

    /// Generators of all ideal divisors of (x).
    pub fn element_divisors(&self, x: QuadInt) -> Result<Vec<QuadInt>> {
        let f = self.factor_element(x)?;
        Ok(self.divisors_from_factors(&f))
    }

    pub fn divisors_from_factors(&self, factors: &[PrimeFactor]) -> Vec<QuadInt> {
        let mut ds = vec![QuadInt::ONE];
        for f in factors {
            let cur = ds.clone();
            let mut pk = QuadInt::ONE;
            for _ in 0..f.exponent {
                pk = self.mul(pk, f.prime_ideal_generator);
                ds.extend(cur.iter().map(|&d| self.mul(d, pk)));
            }
        }
        let mut ds: Vec<QuadInt> = ds.into_iter().map(|d| self.canonical_associate(d)).collect();
        ds.sort_by_key(|d| (self.norm(*d).abs(), *d));
        ds
    }

    /// Canonical generators of the ideals of norm exactly n.
    pub fn ideals_of_norm(&self, n: i64) -> Result<Vec<QuadInt>> {
        Ok(self.ideal_divisors(n)?.into_iter().filter(|&g| self.abs_norm(g) == n).collect())
    }

    /// Canonical generators of all ideals of norm at most bound, ordered by norm.
    pub fn ideals_up_to_norm(&self, bound: i64) -> Result<Vec<QuadInt>> {
        let mut out = Vec::new();
        for n in 1..=bound {
            out.extend(self.ideals_of_norm(n)?);
        }
        Ok(out)
    }

    /// Absolute norm of the ideal (x).
    pub fn abs_norm(&self, x: QuadInt) -> i64 {
        self.norm(x).abs()
    }

    /// Residue ring O_K/(c).
    pub fn residue_ring(&self, c: QuadInt) -> Result<ResidueRing> {
        ResidueRing::new(self, c)
    }
}

/// Explicit representatives and unit group of O_K/(c).
#[derive(Clone, Debug)]
pub struct ResidueRing {
    pub modulus: QuadInt,
    pub size: usize,
    pub reps: Vec<QuadInt>,
    pub unit_reps: Vec<QuadInt>,
    pub inverse_table: HashMap<QuadInt, QuadInt>,
    /// Smith invariant factors e1 | e2 of O_K/(c) as an abelian group.
    pub invariant_factors: (i64, i64),
    pub lattice: Ideal,
}

impl ResidueRing {
    pub fn new(ctx: &FieldContext, c: QuadInt) -> Result<Self> {
        if c.is_zero() {
            return Err(Error::ZeroModulus);
        }
        let lattice = ctx.ideal(c);
        let mut reps = Vec::with_capacity(lattice.norm() as usize);
        for b in 0..lattice.c {
            for a in 0..lattice.a {
                reps.push(QuadInt::new(a, b));
            }
        }
        let unit_reps: Vec<QuadInt> = if lattice.is_one() {
            reps.clone()
        } else {
            reps.iter().copied().filter(|&x| ctx.coprime(x, c)).collect()
        };
        let phi = unit_reps.len() as u64;
        let mut inverse_table = HashMap::with_capacity(unit_reps.len());
        for &u in &unit_reps {
            let inv = pow_mod(ctx, &lattice, u, phi.saturating_sub(1));
            inverse_table.insert(u, inv);
        }
        let e1 = crate::ntheory::gcd(crate::ntheory::gcd(lattice.a, lattice.b), lattice.c);
        let invariant_factors = (e1, lattice.norm() / e1);
        Ok(ResidueRing { modulus: c, size: reps.len(), reps, unit_reps, inverse_table, invariant_factors, lattice })
    }

    pub fn reduce(&self, x: QuadInt) -> QuadInt {
        self.lattice.reduce(x)
    }

    pub fn inverse(&self, x: QuadInt) -> Option<QuadInt> {
        self.inverse_table.get(&self.reduce(x)).copied()
    }

    pub fn phi(&self) -> usize {
        self.unit_reps.len()
    }
}

fn pow_mod(ctx: &FieldContext, lat: &Ideal, x: QuadInt, mut e: u64) -> QuadInt {
    let mut r = lat.reduce(QuadInt::ONE);
    let mut base = lat.reduce(x);
    while e > 0 {
        if e & 1 == 1 {
            r = lat.reduce(ctx.mul(r, base));
        }
        base = lat.reduce(ctx.mul(base, base));
        e >>= 1;
    }
    r
}
