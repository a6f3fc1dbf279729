//! The solution sets X(c,n), Y(c,n), the map x -> r between them, and the
//! refinements X_n(r,d) used by the main-term count.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadfield::{FieldContext, Ideal, QuadInt, ResidueRing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct XSolution {
    pub x: QuadInt,
    pub m: i64,
    pub c: QuadInt,
    pub n: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct YSolution {
    pub r: QuadInt,
    pub n: i64,
    pub c: QuadInt,
    pub d: QuadInt,
}

/// Tr(delta c x') = delta' c' x + delta c x'.
pub fn trace_form(c: QuadInt, x: QuadInt, ctx: &FieldContext) -> i64 {
    let y = ctx.mul(ctx.mul(ctx.sqrt_d(), c), ctx.conj(x));
    ctx.trace(y)
}

/// N(delta c) = -D N(c).
pub fn norm_delta_c(c: QuadInt, ctx: &FieldContext) -> i64 {
    -ctx.d * ctx.norm(c)
}

pub fn enumerate_x(c: QuadInt, n: i64, ctx: &FieldContext) -> Result<Vec<XSolution>> {
    let ring = ctx.residue_ring(c)?;
    Ok(enumerate_x_with(&ring, n, ctx))
}

pub fn enumerate_x_with(ring: &ResidueRing, n: i64, ctx: &FieldContext) -> Vec<XSolution> {
    let c = ring.modulus;
    let nd = norm_delta_c(c, ctx);
    ring.unit_reps
        .iter()
        .filter_map(|&x| {
            let t = trace_form(c, x, ctx);
            let rest = n - t;
            (rest % nd == 0).then(|| XSolution { x, m: rest / nd, c, n })
        })
        .collect()
}

/// gcd(c, c') as k or k*sqrt(D) with k the content of c.
pub fn conj_gcd(c: QuadInt, ctx: &FieldContext) -> QuadInt {
    let k = c.content();
    let c0 = QuadInt::new(c.a / k, c.b / k);
    if ctx.divides(ctx.sqrt_d(), c0) {
        ctx.scale(ctx.sqrt_d(), k)
    } else {
        QuadInt::int(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum X0Branch {
    /// c = gamma a
    Rational { a: i64 },
    /// c = gamma b sqrt(D)
    SqrtD { b: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct X0Structure {
    pub c: QuadInt,
    pub nonempty: bool,
    pub solutions: Vec<XSolution>,
    pub branch: Option<X0Branch>,
    /// gamma = sign * eps0^unit_exponent
    pub unit_exponent: i64,
    pub sign: i64,
    /// congruence of the displayed statement, checked on every solution
    pub witness_statement: bool,
    /// congruence as derived in the argument (eta and eta' swapped)
    pub witness_derived: bool,
}

fn unit_log(u: QuadInt, ctx: &FieldContext) -> Option<(i64, i64)> {
    if !ctx.is_unit(u) {
        return None;
    }
    let (e1, _) = ctx.embed(u);
    let m = (e1.abs().ln() / ctx.log_eps0).round() as i64;
    let base = ctx.unit_pow(m);
    if base == u {
        Some((m, 1))
    } else if -base == u {
        Some((m, -1))
    } else {
        None
    }
}

/// Shape of c when X(c,0) can be nonempty, with the unit gamma.
pub fn x0_shape(c: QuadInt, ctx: &FieldContext) -> Option<(X0Branch, i64, i64)> {
    let k = c.content();
    let c0 = QuadInt::new(c.a / k, c.b / k);
    if let Some((m, s)) = unit_log(c0, ctx) {
        return Some((X0Branch::Rational { a: k }, m, s));
    }
    let q = ctx.div_exact(c0, ctx.sqrt_d())?;
    let (m, s) = unit_log(q, ctx)?;
    Some((X0Branch::SqrtD { b: k }, m, s))
}

pub fn enumerate_x0(c: QuadInt, ctx: &FieldContext) -> Result<X0Structure> {
    let ring = ctx.residue_ring(c)?;
    let solutions = enumerate_x_with(&ring, 0, ctx);
    let shape = x0_shape(c, ctx);
    let (branch, m, sign) = match shape {
        Some((b, m, s)) => (Some(b), m, s),
        None => (None, 0, 1),
    };
    let eta = ctx.unit_pow(m);
    let etac = ctx.conj(eta);
    let mut stmt = true;
    let mut derived = true;
    for s in &solutions {
        let xb = ring.inverse(s.x).unwrap();
        let xbc = ctx.conj(xb);
        let (lhs_s, rhs_s, lhs_d, rhs_d, modulus) = match branch {
            Some(X0Branch::Rational { a }) => (
                ctx.mul(etac, xb),
                ctx.mul(eta, xbc),
                ctx.mul(eta, xb),
                ctx.mul(etac, xbc),
                ctx.scale(ctx.sqrt_d(), a),
            ),
            Some(X0Branch::SqrtD { b }) => (
                ctx.mul(eta, xb),
                -ctx.mul(etac, xbc),
                ctx.mul(etac, xb),
                -ctx.mul(eta, xbc),
                QuadInt::int(ctx.d * b),
            ),
            None => {
                stmt = false;
                derived = false;
                break;
            }
        };
        stmt &= ctx.congruent(lhs_s, rhs_s, modulus);
        derived &= ctx.congruent(lhs_d, rhs_d, modulus);
    }
    Ok(X0Structure {
        c,
        nonempty: !solutions.is_empty(),
        solutions,
        branch,
        unit_exponent: m,
        sign,
        witness_statement: stmt,
        witness_derived: derived,
    })
}

/// Ideal lattice of n/delta, or None when D does not divide n.
fn n_over_delta(n: i64, ctx: &FieldContext) -> Option<QuadInt> {
    ctx.div_exact(QuadInt::int(n), ctx.sqrt_d())
}

/// r = (n xbar - delta' c')/(delta c), reduced modulo n/delta.
pub fn map_to_r(sol: &XSolution, ring: &ResidueRing, ctx: &FieldContext) -> Result<YSolution> {
    let xb = ring.inverse(sol.x).ok_or_else(|| Error::NonIntegralR(format!("{} is not a unit mod {}", sol.x, sol.c)))?;
    map_to_r_from_inverse(sol, xb, ctx)
}

/// As `map_to_r` with an explicit choice of inverse representative.
pub fn map_to_r_from_inverse(sol: &XSolution, xb: QuadInt, ctx: &FieldContext) -> Result<YSolution> {
    let sd = ctx.sqrt_d();
    let num = ctx.scale(xb, sol.n) - ctx.mul(ctx.conj(sd), ctx.conj(sol.c));
    let r = ctx
        .div_exact(num, ctx.mul(sd, sol.c))
        .ok_or_else(|| Error::NonIntegralR(format!("c={} n={} x={}", sol.c, sol.n, sol.x)))?;
    let m = n_over_delta(sol.n, ctx).ok_or_else(|| Error::NonIntegralR(format!("n/delta for n={}", sol.n)))?;
    Ok(YSolution { r: ctx.ideal(m).reduce(r), n: sol.n, c: sol.c, d: conj_gcd(sol.c, ctx) })
}

/// Classes r mod n/delta with r r' = 1 mod n; shared by every c at fixed n.
#[derive(Clone, Debug)]
pub struct AdmissibleR {
    pub n: i64,
    pub modulus: Option<QuadInt>,
    pub lattice: Option<Ideal>,
    pub reps: Vec<QuadInt>,
}

impl AdmissibleR {
    pub fn new(n: i64, ctx: &FieldContext) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroModulus);
        }
        let Some(m) = n_over_delta(n, ctx) else {
            return Ok(AdmissibleR { n, modulus: None, lattice: None, reps: Vec::new() });
        };
        let lat = ctx.ideal(m);
        let nl = ctx.ideal(QuadInt::int(n));
        let mut reps = Vec::new();
        for b in 0..lat.c {
            for a in 0..lat.a {
                let r = QuadInt::new(a, b);
                let rr = ctx.mul(r, ctx.conj(r)) - QuadInt::ONE;
                if nl.contains(rr) {
                    reps.push(r);
                }
            }
        }
        Ok(AdmissibleR { n, modulus: Some(m), lattice: Some(lat), reps })
    }
}

/// (n/d) and the ideals (n/k) for proper ideal divisors k of d.
fn divisor_conditions(n: i64, d: QuadInt, ctx: &FieldContext) -> Result<(Ideal, Vec<Ideal>)> {
    let nq = QuadInt::int(n);
    let nd = ctx.div_exact(nq, d).ok_or_else(|| Error::DNotDividesN { d: d.to_string(), n: n.to_string() })?;
    let dn = ctx.abs_norm(d);
    let mut forbidden = Vec::new();
    for k in ctx.element_divisors(d)? {
        if ctx.abs_norm(k) < dn {
            forbidden.push(ctx.ideal(ctx.div_exact(nq, k).unwrap()));
        }
    }
    Ok((ctx.ideal(nd), forbidden))
}

/// Membership c in X_n(r, d) with (n, r, d) fixed: (c, c') = (d) and the congruences on
/// v = (delta c/d) r + delta' c'/d.
#[derive(Clone, Debug)]
pub struct XnFilter {
    pub n: i64,
    pub r: QuadInt,
    pub d: QuadInt,
    d_ideal: Ideal,
    n_over_d: Ideal,
    forbidden: Vec<Ideal>,
}

impl XnFilter {
    pub fn new(n: i64, r: QuadInt, d: QuadInt, ctx: &FieldContext) -> Result<Self> {
        if !ctx.divides(QuadInt::int(n), ctx.mul(r, ctx.conj(r)) - QuadInt::ONE) {
            return Err(Error::Precondition(format!("r r' != 1 mod {n} for r={r}")));
        }
        let (n_over_d, forbidden) = divisor_conditions(n, d, ctx)?;
        Ok(XnFilter { n, r, d, d_ideal: ctx.ideal(d), n_over_d, forbidden })
    }

    pub fn admits(&self, c: QuadInt, ctx: &FieldContext) -> bool {
        if c.is_zero() || ctx.ideal(conj_gcd(c, ctx)) != self.d_ideal {
            return false;
        }
        let sd = ctx.sqrt_d();
        let (Some(dc), Some(dcc)) = (ctx.div_exact(ctx.mul(sd, c), self.d), ctx.div_exact(ctx.mul(ctx.conj(sd), ctx.conj(c)), self.d)) else {
            return false;
        };
        let v = ctx.mul(dc, self.r) + dcc;
        self.n_over_d.contains(v) && !self.forbidden.iter().any(|f| f.contains(v))
    }
}

/// Data fixed by (c, n) for the Y conditions.
struct YConditions {
    dc: QuadInt,
    dcc: QuadInt,
    n_over_d: Ideal,
    forbidden: Vec<Ideal>,
}

impl YConditions {
    fn new(c: QuadInt, n: i64, d: QuadInt, ctx: &FieldContext) -> Result<Self> {
        let (n_over_d, forbidden) = divisor_conditions(n, d, ctx)?;
        let sd = ctx.sqrt_d();
        let dc = ctx.div_exact(ctx.mul(sd, c), d).unwrap();
        let dcc = ctx.div_exact(ctx.mul(ctx.conj(sd), ctx.conj(c)), d).unwrap();
        Ok(YConditions { dc, dcc, n_over_d, forbidden })
    }

    fn admits(&self, r: QuadInt, ctx: &FieldContext) -> bool {
        let v = ctx.mul(self.dc, r) + self.dcc;
        self.n_over_d.contains(v) && !self.forbidden.iter().any(|f| f.contains(v))
    }
}

pub fn enumerate_y(c: QuadInt, n: i64, ctx: &FieldContext) -> Result<Vec<YSolution>> {
    let adm = AdmissibleR::new(n, ctx)?;
    enumerate_y_with(c, &adm, ctx)
}

pub fn enumerate_y_with(c: QuadInt, adm: &AdmissibleR, ctx: &FieldContext) -> Result<Vec<YSolution>> {
    if c.is_zero() {
        return Err(Error::ZeroModulus);
    }
    let d = conj_gcd(c, ctx);
    let cond = YConditions::new(c, adm.n, d, ctx)?;
    Ok(adm
        .reps
        .iter()
        .filter(|&&r| cond.admits(r, ctx))
        .map(|&r| YSolution { r, n: adm.n, c, d })
        .collect())
}

/// Inverse construction: xi = (c' - c r)/(n/delta) should be a unit mod c.
pub fn y_preimage(y: &YSolution, ctx: &FieldContext) -> Option<QuadInt> {
    let m = n_over_delta(y.n, ctx)?;
    let xi = ctx.div_exact(ctx.conj(y.c) - ctx.mul(y.c, y.r), m)?;
    ctx.coprime(xi, y.c).then_some(xi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BijectionOutcome {
    pub c: QuadInt,
    pub n: i64,
    pub x_count: usize,
    pub y_count: usize,
    pub images_in_y: bool,
    pub injective: bool,
    pub injective_mod_n: bool,
    pub rr_one: bool,
    pub d_divides_n: bool,
}

impl BijectionOutcome {
    pub fn pass(&self) -> bool {
        self.x_count == self.y_count && self.images_in_y && self.injective && self.rr_one
    }
}

/// Runs map_to_r over X(c,n) and compares with Y(c,n).
pub fn check_bijection(c: QuadInt, adm: &AdmissibleR, ctx: &FieldContext) -> Result<BijectionOutcome> {
    let n = adm.n;
    let ring = ctx.residue_ring(c)?;
    let xs = enumerate_x_with(&ring, n, ctx);
    let (ys, d_divides_n) = match enumerate_y_with(c, adm, ctx) {
        Ok(ys) => (ys, true),
        Err(Error::DNotDividesN { .. }) => (Vec::new(), false),
        Err(e) => return Err(e),
    };
    let yset: HashSet<QuadInt> = ys.iter().map(|y| y.r).collect();
    let nl = ctx.ideal(QuadInt::int(n));
    let mut images = HashSet::new();
    let mut images_n = HashSet::new();
    let mut in_y = true;
    let mut rr_one = true;
    for s in &xs {
        let y = map_to_r(s, &ring, ctx)?;
        in_y &= yset.contains(&y.r);
        rr_one &= nl.contains(ctx.mul(y.r, ctx.conj(y.r)) - QuadInt::ONE);
        images.insert(y.r);
        images_n.insert(nl.reduce(y.r));
    }
    Ok(BijectionOutcome {
        c,
        n,
        x_count: xs.len(),
        y_count: ys.len(),
        images_in_y: in_y,
        injective: images.len() == xs.len(),
        injective_mod_n: images_n.len() == xs.len(),
        rr_one,
        d_divides_n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisibilityCertificate {
    pub n: i64,
    pub divisible: bool,
}

/// n = delta' c' x + delta c x' + m N(delta c), with the check D | n.
pub fn check_d_divides_n(c: QuadInt, x: QuadInt, m: i64, ctx: &FieldContext) -> DivisibilityCertificate {
    let n = trace_form(c, x, ctx) as i128 + m as i128 * norm_delta_c(c, ctx) as i128;
    let n = i64::try_from(n).expect("n exceeds i64");
    DivisibilityCertificate { n, divisible: n % ctx.d == 0 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaVerdict {
    pub lambda: QuadInt,
    /// (lambda) + (d) = (1)
    pub ideal_coprime: bool,
    /// gcd of the coordinates of lambda with the content of d
    pub rational_gcd_one: bool,
}

/// lambda from delta' c'/d = -(delta c/d) r + lambda n/d and its coprimality with d.
pub fn lambda_criterion(c: QuadInt, d: QuadInt, r: QuadInt, n: i64, ctx: &FieldContext) -> Result<LambdaVerdict> {
    let c1 = ctx.div_exact(c, d).ok_or_else(|| Error::Precondition(format!("{d} does not divide {c}")))?;
    let c2 = ctx.div_exact(ctx.conj(c), d).ok_or_else(|| Error::Precondition(format!("{d} does not divide conj {c}")))?;
    if !ctx.coprime(c1, c2) {
        return Err(Error::Precondition(format!("c/d and c'/d share a factor for c={c}")));
    }
    if !ctx.divides(QuadInt::int(n), ctx.mul(r, ctx.conj(r)) - QuadInt::ONE) {
        return Err(Error::Precondition(format!("r r' != 1 mod {n} for r={r}")));
    }
    let sd = ctx.sqrt_d();
    let num = ctx.mul(ctx.mul(sd, c), r) + ctx.mul(ctx.conj(sd), ctx.conj(c));
    let lambda = ctx
        .div_exact(num, QuadInt::int(n))
        .ok_or_else(|| Error::NonIntegralLambda(format!("c={c} r={r} n={n}")))?;
    let g = crate::ntheory::gcd(lambda.content(), d.content());
    Ok(LambdaVerdict { lambda, ideal_coprime: ctx.coprime(lambda, d), rational_gcd_one: g == 1 })
}

/// Direct test r in Y(c,n), i.e. c in X_n(r,d) with d = gcd(c,c').
pub fn y_membership(c: QuadInt, r: QuadInt, n: i64, ctx: &FieldContext) -> Result<bool> {
    let d = conj_gcd(c, ctx);
    let cond = YConditions::new(c, n, d, ctx)?;
    Ok(cond.admits(r, ctx))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DKind {
    /// d = d'
    Symmetric,
    /// d = -d'
    Antisymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcardCount {
    pub count: i64,
    pub expected: i64,
    pub kind: DKind,
    pub modulus: QuadInt,
    /// r = 1 mod sqrt(D)
    pub r_one_mod_sqrt_d: bool,
}

/// Counts classes c mod nf/(d delta) with c r = c' modulo that ideal.
pub fn count_congruence_solutions(n: i64, r: QuadInt, d: QuadInt, f: i64, ctx: &FieldContext) -> Result<DcardCount> {
    if !ctx.divides(QuadInt::int(n), ctx.mul(r, ctx.conj(r)) - QuadInt::ONE) {
        return Err(Error::Precondition(format!("r r' != 1 mod {n} for r={r}")));
    }
    let (kind, k) = if ctx.conj(d) == d {
        (DKind::Symmetric, d.a.abs())
    } else if ctx.conj(d) == -d {
        let q = ctx.div_exact(d, ctx.sqrt_d()).unwrap();
        (DKind::Antisymmetric, q.a.abs())
    } else {
        return Err(Error::Precondition(format!("d={d} is neither d' nor -d'")));
    };
    if f < 1 || !ctx.divides(QuadInt::int(f), d) {
        return Err(Error::Precondition(format!("f={f} does not divide d={d}")));
    }
    let m = ctx
        .div_exact(QuadInt::int(n * f), ctx.mul(d, ctx.sqrt_d()))
        .ok_or_else(|| Error::Precondition(format!("nf/(d delta) not integral for n={n} f={f} d={d}")))?;
    let lat = ctx.ideal(m);
    let mut count = 0;
    for b in 0..lat.c {
        for a in 0..lat.a {
            let c = QuadInt::new(a, b);
            if lat.contains(ctx.mul(c, r) - ctx.conj(c)) {
                count += 1;
            }
        }
    }
    let expected = match kind {
        DKind::Symmetric => n * f / k,
        DKind::Antisymmetric => n * f / (ctx.d * k),
    };
    Ok(DcardCount {
        count,
        expected,
        kind,
        modulus: m,
        r_one_mod_sqrt_d: ctx.congruent(r, QuadInt::ONE, ctx.sqrt_d()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::make_field;

    #[test]
    fn x_for_unit_modulus() {
        let k = make_field(5).unwrap();
        // N(delta) = -5: the single class solves iff 5 | n
        assert_eq!(enumerate_x(QuadInt::ONE, 10, &k).unwrap().len(), 1);
        assert!(enumerate_x(QuadInt::ONE, 7, &k).unwrap().is_empty());
    }

    #[test]
    fn x0_examples() {
        let k = make_field(5).unwrap();
        let s = enumerate_x0(QuadInt::int(3), &k).unwrap();
        assert!(s.nonempty);
        assert_eq!(s.branch, Some(X0Branch::Rational { a: 3 }));
        // Tr(x) = 2x mod sqrt(D), so the sqrt(D) branch is empty for odd D
        let s = enumerate_x0(k.sqrt_d(), &k).unwrap();
        assert!(!s.nonempty);
        assert_eq!(s.branch, Some(X0Branch::SqrtD { b: 1 }));
        let k2 = make_field(2).unwrap();
        let s = enumerate_x0(k2.sqrt_d(), &k2).unwrap();
        assert!(s.nonempty && s.witness_statement);
        assert_eq!(s.branch, Some(X0Branch::SqrtD { b: 1 }));
        let s = enumerate_x0(QuadInt::new(3, 1), &k).unwrap();
        assert!(!s.nonempty);
        assert_eq!(s.branch, None);
        // 1 + omega is a unit, so X(c,0) is the trivial class
        assert!(enumerate_x0(QuadInt::new(1, 1), &k).unwrap().nonempty);
    }

    #[test]
    fn bijection_small() {
        for d in [5, 13] {
            let k = make_field(d).unwrap();
            for n in [-2 * d, d, 2 * d, 3 * d, 4 * d] {
                let adm = AdmissibleR::new(n, &k).unwrap();
                for c in k.ideals_up_to_norm(40).unwrap() {
                    for c in [c, -k.mul(c, k.eps0)] {
                        let o = check_bijection(c, &adm, &k).unwrap();
                        assert!(o.pass(), "{o:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn r_well_defined() {
        let k = make_field(5).unwrap();
        let c = QuadInt::new(4, 1);
        let ring = k.residue_ring(c).unwrap();
        for s in enumerate_x_with(&ring, 20, &k) {
            let xb = ring.inverse(s.x).unwrap();
            let y0 = map_to_r_from_inverse(&s, xb, &k).unwrap();
            let y1 = map_to_r_from_inverse(&s, xb + k.mul(c, QuadInt::new(2, -3)), &k).unwrap();
            assert_eq!(y0.r, y1.r);
            assert!(y_preimage(&y0, &k).is_some());
        }
    }

    #[test]
    fn d_divides_n_examples() {
        let k = make_field(5).unwrap();
        assert_eq!(check_d_divides_n(QuadInt::new(2, 3), QuadInt::ZERO, 0, &k).n, 0);
        let cert = check_d_divides_n(QuadInt::new(2, 3), QuadInt::new(-1, 4), 7, &k);
        assert!(cert.divisible);
    }

    #[test]
    fn lambda_d_one() {
        let k = make_field(5).unwrap();
        let c = QuadInt::new(4, 1);
        let adm = AdmissibleR::new(10, &k).unwrap();
        for &r in &adm.reps {
            if let Ok(v) = lambda_criterion(c, QuadInt::ONE, r, 10, &k) {
                assert!(v.ideal_coprime && v.rational_gcd_one);
            }
        }
    }

    #[test]
    fn dcard_examples() {
        let k = make_field(5).unwrap();
        let c = count_congruence_solutions(5, QuadInt::ONE, QuadInt::ONE, 1, &k).unwrap();
        assert_eq!((c.count, c.expected), (5, 5));
        let c = count_congruence_solutions(5, QuadInt::ONE, k.sqrt_d(), 1, &k).unwrap();
        assert_eq!(c.kind, DKind::Antisymmetric);
        assert_eq!(c.count, c.expected);
        assert!(matches!(count_congruence_solutions(5, QuadInt::int(2), QuadInt::ONE, 1, &k), Err(Error::Precondition(_))));
    }
}
