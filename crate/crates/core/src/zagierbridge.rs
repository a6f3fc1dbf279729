//! Exponential sums over r with r r' = 1 (mod Da) against chi_D-twisted Kloosterman sums.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charsums::{e_frac, kloosterman_twisted, CompensatedSum};
use crate::error::{Error, Result};
use crate::ntheory::{divisors, kronecker, mod_inverse};
use crate::quadfield::{FieldContext, OmegaKind, QuadInt};
use crate::solnsets::AdmissibleR;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeInstance {
    pub d: i64,
    pub a: i64,
    pub l: QuadInt,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_error: f64,
    /// the coprime form, when (l, D) = 1
    pub rhs_coprime: Option<Complex64>,
}

/// sum over r mod n/delta, r r' = 1 (mod n), of e((r l + r' l')/n), n = D a.
pub fn bridge_lhs(a: i64, l: QuadInt, ctx: &FieldContext) -> Result<Complex64> {
    let n = ctx.d * a;
    let adm = AdmissibleR::new(n, ctx)?;
    Ok(bridge_lhs_with(&adm, l, ctx))
}

pub fn bridge_lhs_with(adm: &AdmissibleR, l: QuadInt, ctx: &FieldContext) -> Complex64 {
    adm.reps
        .iter()
        .map(|&r| e_frac(ctx.trace(ctx.mul(r, l)), adm.n))
        .collect::<CompensatedSum>()
        .value()
}

fn require_fundamental(ctx: &FieldContext) -> Result<()> {
    if ctx.omega_kind != OmegaKind::HalfIntegral {
        return Err(Error::UnsupportedRing(format!("bridge needs disc = D, got disc = {}", ctx.disc)));
    }
    Ok(())
}

/// Positive rational r dividing both a and l in O_K.
fn common_rational_divisors(a: i64, l: QuadInt) -> Vec<i64> {
    let g = l.content();
    divisors(a).into_iter().filter(|r| g % r == 0).collect()
}

/// (1/sqrt D) sum over r | a, r | l of r S_D(l l'/r^2, 1, D a/r).
pub fn bridge_rhs_coprime(a: i64, l: QuadInt, ctx: &FieldContext) -> Result<Complex64> {
    require_fundamental(ctx)?;
    let nl = ctx.norm(l);
    if nl % ctx.d == 0 {
        return Err(Error::LNotCoprimeToD(l.to_string()));
    }
    let mut acc = CompensatedSum::new();
    for r in common_rational_divisors(a, l) {
        acc.add(kloosterman_twisted(nl / (r * r), 1, ctx.d * a / r, ctx) * r as f64);
    }
    Ok(acc.value() / (ctx.d as f64).sqrt())
}

/// H_b(n,m) for prime D, split over D = D1 D2 with D2 in {1, D}.
pub fn h_b(b: i64, n: i64, m: i64, ctx: &FieldContext) -> Complex64 {
    let d = ctx.d;
    // D2 = 1: (1/(bD)) S_D(n, m, bD)
    let mut v = kloosterman_twisted(n, m, b * d, ctx) / (b * d) as f64;
    // D2 = D: psi(D)/D (1/b) (b/D) S((n/D) Dbar, m, b), psi(D) = sqrt D
    if n % d == 0 && b % d != 0 {
        let mut s = CompensatedSum::new();
        for x in 0..b {
            let Some(xb) = mod_inverse(x, b) else { continue };
            let dbar = mod_inverse(d, b).unwrap();
            let k = ((n / d) as i128 * dbar as i128 * xb as i128 + m as i128 * x as i128).rem_euclid(b as i128);
            s.add(e_frac(k as i64, b));
        }
        let sym = kronecker(b, d) as f64;
        v += s.value() * ((d as f64).sqrt() / d as f64 / b as f64 * sym);
    }
    v
}

/// a sqrt(D) sum over r | a, r | l of H_{a/r}(-l l'/r^2, -1).
pub fn bridge_rhs_general(a: i64, l: QuadInt, ctx: &FieldContext) -> Result<Complex64> {
    require_fundamental(ctx)?;
    let nl = ctx.norm(l);
    let mut acc = CompensatedSum::new();
    for r in common_rational_divisors(a, l) {
        acc.add(h_b(a / r, -nl / (r * r), -1, ctx));
    }
    Ok(acc.value() * (a as f64 * (ctx.d as f64).sqrt()))
}

pub fn bridge_instance(a: i64, l: QuadInt, ctx: &FieldContext) -> Result<BridgeInstance> {
    let lhs = bridge_lhs(a, l, ctx)?;
    let rhs = bridge_rhs_general(a, l, ctx)?;
    let rhs_coprime = match bridge_rhs_coprime(a, l, ctx) {
        Ok(v) => Some(v),
        Err(Error::LNotCoprimeToD(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(BridgeInstance { d: ctx.d, a, l, lhs, rhs, abs_error: (lhs - rhs).norm(), rhs_coprime })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::make_field;

    #[test]
    fn d5_a1_l1() {
        let k = make_field(5).unwrap();
        let want = 2.0 * (4.0 * std::f64::consts::PI / 5.0).cos();
        let l = bridge_lhs(1, QuadInt::ONE, &k).unwrap();
        let c = bridge_rhs_coprime(1, QuadInt::ONE, &k).unwrap();
        let g = bridge_rhs_general(1, QuadInt::ONE, &k).unwrap();
        for v in [l, c, g] {
            assert!((v.re - want).abs() < 1e-12 && v.im.abs() < 1e-12, "{v}");
        }
        assert!((want + 1.618033988749895).abs() < 1e-12);
    }

    #[test]
    fn both_forms_agree() {
        for d in [5, 13] {
            let k = make_field(d).unwrap();
            for a in 1..=8 {
                for l in [QuadInt::ONE, QuadInt::new(2, 1), QuadInt::new(3, 0), QuadInt::new(4, -1), QuadInt::new(6, 3)] {
                    let inst = bridge_instance(a, l, &k).unwrap();
                    assert!(inst.abs_error < 1e-9, "{inst:?}");
                    if let Some(c) = inst.rhs_coprime {
                        assert!((c - inst.rhs).norm() < 1e-9);
                    }
                    assert!(inst.lhs.im.abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn ramified_l_rejected_by_coprime_form() {
        let k = make_field(5).unwrap();
        assert!(matches!(bridge_rhs_coprime(1, k.sqrt_d(), &k), Err(Error::LNotCoprimeToD(_))));
        let k3 = make_field(3).unwrap();
        assert!(matches!(bridge_rhs_general(1, QuadInt::ONE, &k3), Err(Error::UnsupportedRing(_))));
    }
}
