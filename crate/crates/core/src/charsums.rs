//! Characters and complete exponential sums over Z and O_K.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ntheory::{euler_phi, gcd, kronecker, mobius, mod_inverse};
use crate::quadfield::{FieldContext, QuadInt, ResidueRing};

pub type ComplexValue = Complex64;

/// e(k/n) with k reduced exactly before the float conversion.
pub fn e_frac(k: i64, n: i64) -> Complex64 {
    debug_assert!(n > 0);
    let mut k = k.rem_euclid(n);
    if 2 * k > n {
        k -= n;
    }
    let (s, c) = (std::f64::consts::TAU * k as f64 / n as f64).sin_cos();
    Complex64::new(c, s)
}

/// e(k/n) for i128 numerators.
pub fn e_frac128(k: i128, n: i128) -> Complex64 {
    let m = k.rem_euclid(n);
    e_frac(m as i64, n as i64)
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

fn two_sum(acc: &mut f64, comp: &mut f64, x: f64) {
    let t = *acc + x;
    if acc.abs() >= x.abs() {
        *comp += (*acc - t) + x;
    } else {
        *comp += (x - t) + *acc;
    }
    *acc = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        two_sum(&mut self.sum.re, &mut self.comp.re, z.re);
        two_sum(&mut self.sum.im, &mut self.comp.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for z in iter {
            s.add(z);
        }
        s
    }
}

pub fn chi_d(n: i64, ctx: &FieldContext) -> i32 {
    kronecker(ctx.disc, n)
}

/// e(x/delta + x'/delta') for x = num/den, den > 0.
pub fn psi_additive(num: QuadInt, den: i64, ctx: &FieldContext) -> Complex64 {
    e_frac(ctx.tr_over_delta(num), den)
}

/// Tr(y/(delta c)) as an exact fraction k / |N(c)|.
fn phase_over(y: QuadInt, c: QuadInt, ctx: &FieldContext) -> (i64, i64) {
    let n = ctx.norm(c);
    let k = ctx.tr_over_delta(ctx.mul(y, ctx.conj(c)));
    if n < 0 {
        (-k, -n)
    } else {
        (k, n)
    }
}

/// S(r,s,c) = sum over x in (O_K/c)* of e(Tr((r x^-1 + s x)/(delta c))).
pub fn kloosterman_k(r: QuadInt, s: QuadInt, c: QuadInt, ctx: &FieldContext) -> Result<Complex64> {
    let ring = ctx.residue_ring(c)?;
    Ok(kloosterman_k_with(r, s, &ring, ctx))
}

pub fn kloosterman_k_with(r: QuadInt, s: QuadInt, ring: &ResidueRing, ctx: &FieldContext) -> Complex64 {
    if ring.size == 1 {
        return Complex64::new(1.0, 0.0);
    }
    let c = ring.modulus;
    ring.unit_reps
        .iter()
        .map(|&x| {
            let xb = ring.inverse_table[&x];
            let y = ctx.mul(r, xb) + ctx.mul(s, x);
            let (k, n) = phase_over(y, c, ctx);
            e_frac(k, n)
        })
        .collect::<CompensatedSum>()
        .value()
}

/// S_D(n,m,c) = sum over x in (Z/c)* of chi_D(x) e((n x + m x^-1)/c).
pub fn kloosterman_twisted(n: i64, m: i64, c: i64, ctx: &FieldContext) -> Complex64 {
    kloosterman_twisted_disc(n, m, c, ctx.disc)
}

/// As `kloosterman_twisted` with an explicit character modulus; disc = 1 gives the plain sum.
pub fn kloosterman_twisted_disc(n: i64, m: i64, c: i64, disc: i64) -> Complex64 {
    assert!(c >= 1, "modulus must be positive");
    if c == 1 {
        return Complex64::new(kronecker(disc, 1) as f64, 0.0);
    }
    let mut acc = CompensatedSum::new();
    for x in 1..c {
        let Some(xb) = mod_inverse(x, c) else { continue };
        let ch = kronecker(disc, x);
        if ch == 0 {
            continue;
        }
        let k = (n as i128 * x as i128 + m as i128 * xb as i128).rem_euclid(c as i128);
        acc.add(e_frac(k as i64, c) * ch as f64);
    }
    acc.value()
}

/// Classical Ramanujan sum via mu(n/g) phi(n)/phi(n/g).
pub fn ramanujan_z(n: i64, y: i64) -> i64 {
    assert!(n >= 1);
    let g = gcd(y, n);
    let q = n / g;
    mobius(q) * euler_phi(n) / euler_phi(q)
}

/// Brute-force Ramanujan sum, rounded after checking integrality to 1e-9.
pub fn ramanujan_z_brute(n: i64, y: i64) -> i64 {
    let table: Vec<Complex64> = (0..n).map(|k| e_frac(k, n)).collect();
    ramanujan_z_table(n, y, &table)
}

/// Brute force using a precomputed table of e(k/n), k = 0..n.
pub fn ramanujan_z_table(n: i64, y: i64, table: &[Complex64]) -> i64 {
    let ym = y.rem_euclid(n);
    let s: CompensatedSum = (0..n)
        .filter(|&x| gcd(x, n) == 1)
        .map(|x| table[((x * ym) % n) as usize])
        .collect();
    let v = s.value();
    let r = v.re.round();
    assert!((v.re - r).abs() < 1e-9 && v.im.abs() < 1e-9, "non-integral Ramanujan sum {v}");
    r as i64
}

/// S(r,0,c) in closed form from the prime-ideal factorization of c.
/// For Z[sqrt D] the character has conductor c/2 relative to delta = sqrt D, so r enters as 2r.
pub fn ramanujan_k(r: QuadInt, c: QuadInt, ctx: &FieldContext) -> Result<i64> {
    if c.is_zero() {
        return Err(Error::ZeroModulus);
    }
    let r = ctx.scale(r, ctx.different_index());
    let mut out = 1i64;
    for f in ctx.factor_element(c)? {
        let np = ctx.abs_norm(f.prime_ideal_generator);
        let e = f.exponent;
        let v = if r.is_zero() {
            u32::MAX
        } else {
            let mut v = 0;
            let mut y = r;
            while let Some(z) = ctx.div_exact(y, f.prime_ideal_generator) {
                y = z;
                v += 1;
                if v > e {
                    break;
                }
            }
            v
        };
        let ne1 = np.pow(e - 1);
        out *= if v >= e {
            ne1 * np - ne1
        } else if v + 1 == e {
            -ne1
        } else {
            return Ok(0);
        };
    }
    Ok(out)
}

/// S(r,0,c) by enumeration of (O_K/c)*.
pub fn ramanujan_k_enum(r: QuadInt, c: QuadInt, ctx: &FieldContext) -> Result<Complex64> {
    kloosterman_k(QuadInt::ZERO, r, c, ctx)
}

/// The ideal Moebius form: sum over (a) | (r),(c) of mu_K((c)/(a)) N(a).
pub fn ramanujan_k_mobius(r: QuadInt, c: QuadInt, ctx: &FieldContext) -> Result<i64> {
    if c.is_zero() {
        return Err(Error::ZeroModulus);
    }
    let r = ctx.scale(r, ctx.different_index());
    let mut total = 0i64;
    for a in ctx.element_divisors(c)? {
        if !ctx.divides(a, r) {
            continue;
        }
        let q = ctx.div_exact(c, a).unwrap();
        let mu = if ctx.is_unit(q) {
            1
        } else {
            let fs = ctx.factor_element(q)?;
            if fs.iter().any(|f| f.exponent > 1) {
                0
            } else if fs.len() % 2 == 0 {
                1
            } else {
                -1
            }
        };
        total += mu * ctx.abs_norm(a);
    }
    Ok(total)
}
