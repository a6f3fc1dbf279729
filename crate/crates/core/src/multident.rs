//! Multiplicative identities: the density R(n,d), local Euler factors, the divisor
//! identities relating sums over K to sums over Q, and a Hecke-eigenvalue model.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::charsums::ramanujan_z;
use crate::error::{Error, Result};
use crate::ntheory::{divisors, factorize, gcd, is_prime, kronecker, mobius, valuation};
use crate::quadfield::{FieldContext, QuadInt, Splitting};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// R(n,d) = (1/(dn)) sum over a | d of (mu(a)/a) prod over p | na/d of 1/(1+1/p).
pub fn r_density(n: i64, d: i64) -> Result<BigRational> {
    if n < 1 || d < 1 || n % d != 0 {
        return Err(Error::DNotDividesN { d: d.to_string(), n: n.to_string() });
    }
    let mut total = BigRational::zero();
    for a in divisors(d) {
        let mu = mobius(a);
        if mu == 0 {
            continue;
        }
        let mut term = q(mu, a);
        for (p, _) in factorize(n / d * a) {
            term *= q(p, p + 1);
        }
        total += term;
    }
    Ok(total / BigRational::from_integer(BigInt::from(d * n)))
}

/// Closed forms at prime powers: R(p^l, p^i).
pub fn r_prime_power(p: i64, l: u32, i: u32) -> BigRational {
    assert!(i <= l);
    let pl = q(p.pow(l), 1);
    let f = q(p, p + 1);
    if l == 0 {
        BigRational::one()
    } else if i == 0 {
        f / pl
    } else if i == l {
        f / (pl.clone() * pl)
    } else {
        q(p - 1, p + 1) / q(p.pow(l + i), 1)
    }
}

/// R(n,d) assembled from prime-power closed forms.
pub fn r_from_prime_powers(n: i64, d: i64) -> BigRational {
    factorize(n)
        .into_iter()
        .map(|(p, l)| r_prime_power(p, l, valuation(d, p)))
        .fold(BigRational::one(), |acc, x| acc * x)
}

/// sum over d | n of R(n,d).
pub fn r_sum_check(n: i64) -> Result<BigRational> {
    let mut s = BigRational::zero();
    for d in divisors(n) {
        s += r_density(n, d)?;
    }
    Ok(s)
}

/// mu_k with |eps0|^{i mu} = 1 for every unit.
pub fn mu_lattice(k: i64, ctx: &FieldContext) -> f64 {
    k as f64 * std::f64::consts::PI / ctx.log_eps0
}

/// omega_mu(x) = |x/x'|^{i mu}.
pub fn omega_mu(x: QuadInt, mu: f64, ctx: &FieldContext) -> Complex64 {
    let (a, b) = ctx.embed(x);
    Complex64::from_polar(1.0, mu * (a / b).abs().ln())
}

fn npow(n: i64, s: Complex64) -> Complex64 {
    (s * (n as f64).ln()).exp()
}

/// sigma_{s,omega}(l) = sum over ideal divisors a of (l) of omega(a) N(a)^s.
pub fn sigma_omega(l: QuadInt, s: Complex64, mu_k: i64, ctx: &FieldContext) -> Result<Complex64> {
    sigma_omega_mu(l, s, mu_lattice(mu_k, ctx), 1, ctx)
}

/// As `sigma_omega` with omega^power and an explicit mu.
pub fn sigma_omega_mu(l: QuadInt, s: Complex64, mu: f64, power: i32, ctx: &FieldContext) -> Result<Complex64> {
    if l.is_zero() {
        return Err(Error::ZeroModulus);
    }
    Ok(ctx
        .element_divisors(l)?
        .into_iter()
        .map(|a| omega_mu(a, mu, ctx).powi(power) * npow(ctx.abs_norm(a), s))
        .sum())
}

/// tau_{it}(n) = sum over ab = n of chi_D(a) (a/b)^{it}.
pub fn tau_it(n: i64, t: f64, ctx: &FieldContext) -> Complex64 {
    divisors(n)
        .into_iter()
        .map(|a| {
            let b = n / a;
            kronecker(ctx.disc, a) as f64 * Complex64::from_polar(1.0, t * (a as f64 / b as f64).ln())
        })
        .sum()
}

/// psi_mu(y) = sum over ideals q of norm y of omega_mu(q).
pub fn psi_mu(y: i64, mu: f64, ctx: &FieldContext) -> Result<Complex64> {
    Ok(ctx.ideals_of_norm(y)?.into_iter().map(|g| omega_mu(g, mu, ctx)).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompaResidual {
    /// N(l)^{it} sigma_{-2it,0}(l) against sum over r | l of tau_{it}(ll'/r^2)
    pub residual1: f64,
    /// omega_mu(l)^{-2} sigma_{0,omega^2}(l) against sum over r | l of psi_mu(ll'/r^2)
    pub residual2: f64,
    /// the second identity with prefactor omega_mu(l)^{-1}
    pub residual2_exponent_minus_one: f64,
}

pub fn compa_identity_check(l: QuadInt, t: f64, mu_index: i64, ctx: &FieldContext) -> Result<CompaResidual> {
    let n = ctx.abs_norm(l);
    let mu = mu_lattice(mu_index, ctx);
    let rs: Vec<i64> = divisors(l.content());
    let lhs1 = npow(n, Complex64::new(0.0, t)) * sigma_omega_mu(l, Complex64::new(0.0, -2.0 * t), 0.0, 1, ctx)?;
    let rhs1: Complex64 = rs.iter().map(|r| tau_it(n / (r * r), t, ctx)).sum();
    let sig2 = sigma_omega_mu(l, Complex64::new(0.0, 0.0), mu, 2, ctx)?;
    let w = omega_mu(l, mu, ctx);
    let mut rhs2 = Complex64::new(0.0, 0.0);
    for r in &rs {
        rhs2 += psi_mu(n / (r * r), mu, ctx)?;
    }
    Ok(CompaResidual {
        residual1: (lhs1 - rhs1).norm(),
        residual2: (w.powi(-2) * sig2 - rhs2).norm(),
        residual2_exponent_minus_one: (w.powi(-1) * sig2 - rhs2).norm(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EulerKind {
    /// sum over k of f_{p^k}(y) p^{-ks} against the displayed factor
    RamanujanL { y: i64 },
    Split { mu_index: i64 },
    Inert,
    Ramified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerResidual {
    pub residual: f64,
    pub series: Complex64,
    pub closed: Complex64,
    /// v_p(y) for the Ramanujan factor
    pub valuation: u32,
}

const POLE_EPS: f64 = 1e-8;

fn guard(den: Complex64) -> Result<Complex64> {
    if den.norm() < POLE_EPS {
        Err(Error::PoleProximity(den.norm()))
    } else {
        Ok(den)
    }
}

fn one_minus(z: Complex64) -> Result<Complex64> {
    guard(Complex64::new(1.0, 0.0) - z)
}

/// p^{-s}
fn pinv(p: i64, s: Complex64) -> Complex64 {
    npow(p, -s)
}

/// Local series sum over k of sigma_{2it,omega^2}(p^k) p^{-k(s+2it)}, summing omega^2(a) N(a)^{2it}
/// over ideal divisors a of (p^k) generated from the primes above p.
fn asai_local_series(p: i64, s: Complex64, t: f64, mu: f64, ctx: &FieldContext) -> Result<Complex64> {
    let x = pinv(p, s + Complex64::new(0.0, 2.0 * t));
    let primes = ctx.primes_above(p)?;
    // (omega^2 N^{2it}) of each prime, and its ramification multiplicity in (p)
    let local: Vec<(Complex64, u32)> = primes
        .iter()
        .map(|&(g, sp)| {
            let w = omega_mu(g, mu, ctx).powi(2) * npow(ctx.abs_norm(g), Complex64::new(0.0, 2.0 * t));
            (w, if sp == Splitting::Ramified { 2 } else { 1 })
        })
        .collect();
    let sigma = |k: u32| -> Complex64 {
        match local.as_slice() {
            [(w, e)] => (0..=k * e).map(|j| w.powi(j as i32)).sum(),
            [(w1, _), (w2, _)] => {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..=k {
                    for j in 0..=k {
                        acc += w1.powi(i as i32) * w2.powi(j as i32);
                    }
                }
                acc
            }
            _ => unreachable!(),
        }
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let mut xk = Complex64::new(1.0, 0.0);
    for k in 0..4000u32 {
        let term = sigma(k) * xk;
        acc += term;
        if (k as f64 + 1.0).powi(2) * xk.norm() < 1e-18 {
            return Ok(acc);
        }
        xk *= x;
    }
    Err(Error::TruncationBudgetExceeded(format!("Euler series at p={p} did not converge")))
}

/// (1 - p^{-2s}) / ((1 - p^{-s})(1 - chi(p) p^{-s})(1 - p^{-s-2it})(1 - p^{-s+2it}))
fn general_form(p: i64, s: Complex64, t: f64, chi: i32) -> Result<Complex64> {
    let ps = pinv(p, s);
    let it2 = Complex64::new(0.0, 2.0 * t);
    let num = Complex64::new(1.0, 0.0) - ps * ps;
    let den = one_minus(ps)? * one_minus(ps * chi as f64)? * one_minus(pinv(p, s + it2))? * one_minus(pinv(p, s - it2))?;
    Ok(num / guard(den)?)
}

pub fn euler_factor_identity_check(kind: EulerKind, s: Complex64, t: f64, p: i64, ctx: &FieldContext) -> Result<EulerResidual> {
    if !is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not prime")));
    }
    if pinv(p, s).norm() >= 1.0 {
        return Err(Error::Precondition("need |p^-s| < 1".into()));
    }
    let it2 = Complex64::new(0.0, 2.0 * t);
    let want = |sp: Splitting| -> Result<()> {
        if ctx.splitting(p) != sp {
            return Err(Error::Precondition(format!("{p} is not {sp:?}")));
        }
        Ok(())
    };
    match kind {
        EulerKind::RamanujanL { y } => {
            let x = pinv(p, s);
            let v = if y == 0 { u32::MAX } else { valuation(y, p) };
            if v == u32::MAX {
                return Err(Error::Precondition("y = 0 gives a divergent series".into()));
            }
            let mut series = Complex64::new(0.0, 0.0);
            let mut xk = Complex64::new(1.0, 0.0);
            for k in 0..=(v + 1) {
                series += xk * ramanujan_z(p.pow(k), y) as f64;
                xk *= x;
            }
            let closed = if v == 0 { 1.0 - x } else { (1.0 - x) * (1.0 + x * p as f64) };
            Ok(EulerResidual { residual: (series - closed).norm(), series, closed, valuation: v })
        }
        EulerKind::Split { mu_index } => {
            want(Splitting::Split)?;
            let mu = mu_lattice(mu_index, ctx);
            let gens = ctx.primes_above(p)?;
            let ps = pinv(p, s);
            let w1 = omega_mu(gens[0].0, mu, ctx).powi(2);
            let w2 = omega_mu(gens[1].0, mu, ctx).powi(2);
            let den = one_minus(w1 * ps)? * one_minus(w2 * ps)? * one_minus(pinv(p, s + it2))? * one_minus(pinv(p, s - it2))?;
            let closed = (1.0 - ps * ps) / guard(den)?;
            let series = asai_local_series(p, s, t, mu, ctx)?;
            Ok(EulerResidual { residual: (series - closed).norm(), series, closed, valuation: 0 })
        }
        EulerKind::Inert | EulerKind::Ramified => {
            let ramified = matches!(kind, EulerKind::Ramified);
            want(if ramified { Splitting::Ramified } else { Splitting::Inert })?;
            let ps = pinv(p, s);
            let num = if ramified { 1.0 + ps } else { Complex64::new(1.0, 0.0) };
            let lhs = num / guard(one_minus(pinv(p, s + it2))? * one_minus(pinv(p, s - it2))?)?;
            let rhs = general_form(p, s, t, kronecker(ctx.disc, p))?;
            let series = asai_local_series(p, s, t, 0.0, ctx)?;
            let residual = (series - lhs).norm().max((lhs - rhs).norm());
            Ok(EulerResidual { residual, series, closed: rhs, valuation: 0 })
        }
    }
}

/// Fourier coefficients a_n built from Satake parameters with nebentypus (disc/.).
#[derive(Clone, Debug)]
pub struct HeckeSequence {
    pub satake: BTreeMap<i64, Complex64>,
    pub disc: i64,
    values: Vec<Complex64>,
}

impl HeckeSequence {
    /// Values a_1..a_limit; every prime up to limit must have a Satake parameter.
    pub fn new(satake: BTreeMap<i64, Complex64>, disc: i64, limit: usize) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); limit + 1];
        if limit >= 1 {
            values[1] = Complex64::new(1.0, 0.0);
        }
        for n in 2..=limit as i64 {
            let f = factorize(n);
            let mut v = Complex64::new(1.0, 0.0);
            for (p, e) in f {
                v *= Self::prime_power(&satake, disc, p, e);
            }
            values[n as usize] = v;
        }
        HeckeSequence { satake, disc, values }
    }

    fn prime_power(satake: &BTreeMap<i64, Complex64>, disc: i64, p: i64, e: u32) -> Complex64 {
        let alpha = satake[&p];
        let chi = kronecker(disc, p) as f64;
        let ap = if chi == 0.0 { alpha } else { alpha + chi / alpha };
        let (mut prev, mut cur) = (Complex64::new(1.0, 0.0), ap);
        if e == 0 {
            return prev;
        }
        for _ in 1..e {
            let next = ap * cur - prev * chi;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Satake parameters uniformly on the unit circle for primes up to limit.
    pub fn random(seed: u64, disc: i64, limit: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let satake = (2..=limit as i64)
            .filter(|&p| is_prime(p))
            .map(|p| (p, Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))))
            .collect();
        Self::new(satake, disc, limit)
    }

    pub fn limit(&self) -> usize {
        self.values.len() - 1
    }

    pub fn a(&self, n: i64) -> Complex64 {
        self.values[n as usize]
    }

    pub fn chi(&self, n: i64) -> i32 {
        kronecker(self.disc, n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeckeResidual {
    /// a_m a_n = sum over r | (m,n) of chi(r) a_{mn/r^2}
    pub rational: f64,
    /// the relation without chi
    pub rational_untwisted: f64,
    /// alpha over ideals coprime to D
    pub alpha_coprime: f64,
    /// alpha over all ideals, including the ramified prime
    pub alpha_all: f64,
}

/// alpha_l = sum over rational r | l of a_{N(l)/r^2}.
pub fn alpha_l(seq: &HeckeSequence, l: QuadInt, ctx: &FieldContext) -> Complex64 {
    let n = ctx.abs_norm(l);
    divisors(l.content()).into_iter().map(|r| seq.a(n / (r * r))).sum()
}

pub fn hecke_relation_check(seq: &HeckeSequence, depth: i64, ctx: &FieldContext) -> Result<HeckeResidual> {
    if ((depth * depth) as usize) > seq.limit() {
        return Err(Error::Precondition(format!("sequence limit {} below depth^2", seq.limit())));
    }
    let mut rational: f64 = 0.0;
    let mut untwisted: f64 = 0.0;
    for m in 1..=depth {
        for n in 1..=depth {
            let lhs = seq.a(m) * seq.a(n);
            let mut rhs = Complex64::new(0.0, 0.0);
            let mut rhs0 = Complex64::new(0.0, 0.0);
            for r in divisors(gcd(m, n)) {
                let v = seq.a(m * n / (r * r));
                rhs += v * seq.chi(r) as f64;
                rhs0 += v;
            }
            rational = rational.max((lhs - rhs).norm());
            untwisted = untwisted.max((lhs - rhs0).norm());
        }
    }
    let ideals = ctx.ideals_up_to_norm(depth)?;
    let mut coprime: f64 = 0.0;
    let mut all: f64 = 0.0;
    for &x in &ideals {
        for &y in &ideals {
            if ctx.abs_norm(x) * ctx.abs_norm(y) > seq.limit() as i64 {
                continue;
            }
            let lhs = alpha_l(seq, x, ctx) * alpha_l(seq, y, ctx);
            let g = ctx.gcd(x, y);
            let xy = ctx.mul(x, y);
            let mut rhs = Complex64::new(0.0, 0.0);
            for r in ctx.element_divisors(g)? {
                let q = ctx.div_exact(xy, ctx.mul(r, r)).unwrap();
                rhs += alpha_l(seq, q, ctx);
            }
            let res = (lhs - rhs).norm();
            all = all.max(res);
            if ctx.abs_norm(xy) % ctx.d != 0 {
                coprime = coprime.max(res);
            }
        }
    }
    Ok(HeckeResidual { rational, rational_untwisted: untwisted, alpha_coprime: coprime, alpha_all: all })
}

/// Random point s = sigma + i tau with sigma fixed.
pub fn random_s<R: Rng>(rng: &mut R, sigma: f64, span: f64) -> Complex64 {
    Complex64::new(sigma, rng.random_range(-span..span))
}
