//! Geometric-side numerics: the I and H integrals, the A_0 limit, the A_n main term
//! and the identity between the H-integral and the convolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charsums::ramanujan_z;
use crate::error::{Error, Result};
use crate::multident::r_density;
use crate::quad::panel_nodes;
use crate::quadfield::{FieldContext, QuadInt};
use crate::solnsets::XnFilter;
use crate::spectransform::{convolve, TestFunction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub c_norm_max: f64,
    pub m_max: i64,
    pub mtt_max: i64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { c_norm_max: 1e8, m_max: 100_000, mtt_max: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoConfig {
    pub d: i64,
    pub l: QuadInt,
    /// unit integral on its support
    pub g: TestFunction,
    pub v1: TestFunction,
    pub v2: TestFunction,
    pub x_values: Vec<f64>,
    pub truncation: Truncation,
    pub tolerance: f64,
}

impl GeoConfig {
    /// g = bump(1,2) normalized, V1 = bump(1,3), V2 = bump(1.5,4), X in {1e2, 1e3, 1e4}.
    pub fn standard(d: i64, l: QuadInt) -> Result<Self> {
        let g0 = TestFunction::bump(1.0, 2.0)?;
        let g = g0.scaled(1.0 / g0.integral()?);
        Ok(GeoConfig {
            d,
            l,
            g,
            v1: TestFunction::bump(1.0, 3.0)?,
            v2: TestFunction::bump(1.5, 4.0)?,
            x_values: vec![1e2, 1e3, 1e4],
            truncation: Truncation::default(),
            tolerance: 1e-2,
        })
    }
}

const T_PANELS: usize = 4;
const DEGREE: usize = 16;

/// Quadrature data for t over supp g, with the embeddings of l.
struct Inner {
    t: Vec<(f64, f64)>,
    l1: f64,
    l2: f64,
    d: f64,
}

impl Inner {
    fn new(cfg: &GeoConfig, ctx: &FieldContext, mtt: i64) -> Result<Self> {
        let (l1, l2) = ctx.embed(cfg.l);
        if l1 <= 0.0 || l2 <= 0.0 {
            return Err(Error::Precondition(format!("l = {} must be totally positive", cfg.l)));
        }
        let m2 = (mtt * mtt) as f64;
        let t = match cfg.g.support() {
            None => Vec::new(),
            Some((a, b)) => panel_nodes(a / m2, b / m2, T_PANELS, DEGREE)
                .into_iter()
                .map(|(t, w)| (t, w * cfg.g.eval(m2 * t)))
                .filter(|&(_, w)| w != 0.0)
                .collect(),
        };
        Ok(Inner { t, l1, l2, d: ctx.d as f64 })
    }

    /// integral of e(-t n/(D x y)) g V1(4 pi sqrt(l t)/x) V2(4 pi sqrt(l' t)/y) dt
    fn i_xy(&self, n: f64, x: f64, y: f64, cfg: &GeoConfig) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(t, w) in &self.t {
            let a = cfg.v1.eval(4.0 * PI * (self.l1 * t).sqrt() / x);
            if a == 0.0 {
                continue;
            }
            let b = cfg.v2.eval(4.0 * PI * (self.l2 * t).sqrt() / y);
            if b == 0.0 {
                continue;
            }
            acc += Complex64::from_polar(w * a * b, -2.0 * PI * t * n / (self.d * x * y));
        }
        acc
    }

    /// H_n(x, y) = (1/xy) e(-(x l'/(n y) + y l/(n x))) I(n, x, y)
    fn h(&self, n: f64, x: f64, y: f64, cfg: &GeoConfig) -> Complex64 {
        let i = self.i_xy(n, x, y, cfg);
        if i == Complex64::new(0.0, 0.0) {
            return i;
        }
        let ph = -2.0 * PI * (x * self.l2 / (n * y) + y * self.l1 / (n * x));
        i * Complex64::from_polar(1.0 / (x * y), ph)
    }

    /// Range of x (resp. y) where the integrand can be nonzero.
    fn x_range(&self, v: &TestFunction, l: f64) -> Option<(f64, f64)> {
        let (a, b) = v.support()?;
        let (t0, t1) = self.t.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t)));
        if self.t.is_empty() {
            return None;
        }
        Some((4.0 * PI * (l * t0).sqrt() / b, 4.0 * PI * (l * t1).sqrt() / a))
    }
}

/// I(n, c, X) = integral of e(X t n/N(delta c)) g(mtt^2 t) V1(4 pi sqrt(X t l)/c) V2(4 pi sqrt(X t l')/c') dt.
pub fn i_integral(n: i64, c: QuadInt, x_big: f64, mtt: i64, cfg: &GeoConfig, ctx: &FieldContext) -> Result<Complex64> {
    if x_big <= 0.0 {
        return Err(Error::Precondition("X must be positive".into()));
    }
    if mtt < 1 {
        return Err(Error::Precondition("mtt must be positive".into()));
    }
    let (c1, c2) = ctx.embed(c);
    if c1 <= 0.0 || c2 <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let inner = Inner::new(cfg, ctx, mtt)?;
    // N(delta c) = -D N(c); rescale so that x = c/sqrt(X)
    let s = x_big.sqrt();
    Ok(inner.i_xy(n as f64, c1 / s, c2 / s, cfg))
}

fn log_nodes(lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
    panel_nodes(lo.ln(), hi.ln(), panels, DEGREE).into_iter().map(|(u, w)| (u.exp(), w * u.exp())).collect()
}

fn h_double_integral(n: f64, inner: &Inner, cfg: &GeoConfig, panels: usize) -> Complex64 {
    let (Some((x0, x1)), Some((y0, y1))) = (inner.x_range(&cfg.v1, inner.l1), inner.x_range(&cfg.v2, inner.l2)) else {
        return Complex64::new(0.0, 0.0);
    };
    let xs = log_nodes(x0, x1, panels);
    let ys = log_nodes(y0, y1, panels);
    xs.par_iter()
        .map(|&(x, wx)| ys.iter().map(|&(y, wy)| inner.h(n, x, y, cfg) * (wx * wy)).sum::<Complex64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StIdentity {
    pub n: i64,
    pub z: f64,
    /// double integral of H_n over (0, inf)^2
    pub h_integral: Complex64,
    pub quad_error: f64,
    /// D (V1*V2)(4 pi sqrt(l l')/n)
    pub literal_rhs: Complex64,
    pub literal_rel_residual: f64,
    /// conj of (V1(sqrt D .) * V2(sqrt D .))(4 pi sqrt(l l')/n), from the change of variables
    pub derived_rhs: Complex64,
    pub derived_rel_residual: f64,
}

/// Nested quadrature of H_n, compared with the convolution at z = 4 pi sqrt(l l')/n.
pub fn h_n_integral(n: i64, cfg: &GeoConfig, ctx: &FieldContext) -> Result<StIdentity> {
    if n == 0 {
        return Err(Error::Precondition("n must be nonzero".into()));
    }
    let inner = Inner::new(cfg, ctx, 1)?;
    let nf = n as f64;
    let coarse = h_double_integral(nf, &inner, cfg, 12);
    let fine = h_double_integral(nf, &inner, cfg, 24);
    let quad_error = (fine - coarse).norm();
    if quad_error > 1e-6 * fine.norm().max(1e-12) {
        return Err(Error::QuadratureFailure(format!("H_{n} integral refinement moved value by {quad_error:e}")));
    }
    let z = 4.0 * PI * (inner.l1 * inner.l2).sqrt() / nf.abs();
    let zero = cfg.v1.is_zero() || cfg.v2.is_zero();
    let literal_rhs = if zero { Complex64::new(0.0, 0.0) } else { convolve(&cfg.v1, &cfg.v2, z)? * inner.d };
    let sd = inner.d.sqrt();
    let derived_rhs = if zero { Complex64::new(0.0, 0.0) } else { convolve(&cfg.v1.dilate(sd), &cfg.v2.dilate(sd), z)?.conj() };
    let rel = |rhs: Complex64| {
        let s = fine.norm().max(rhs.norm());
        if s == 0.0 {
            0.0
        } else {
            (fine - rhs).norm() / s
        }
    };
    Ok(StIdentity {
        n,
        z,
        h_integral: fine,
        quad_error,
        literal_rhs,
        literal_rel_residual: rel(literal_rhs),
        derived_rhs,
        derived_rel_residual: rel(derived_rhs),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub x: f64,
    pub value: Complex64,
    /// against the stated target
    pub error: f64,
    /// against the alternative limit
    pub alt_error: f64,
    pub terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A0Table {
    pub diagonal: bool,
    /// delta(l,l') (1+1/D)/2 integral V1(x) V2(y) dx dy/(xy)
    pub target: f64,
    /// delta(l,l') (1 + D/(D+1)) integral V1 V2 du/u
    pub alt_limit: f64,
    /// scale for the off-diagonal check: (1+1/D)/2 integral V1/x integral V2/y
    pub scale: f64,
    pub rows: Vec<ConvergenceRow>,
}

fn weighted_integral(v: &TestFunction, w: Option<&TestFunction>) -> Result<f64> {
    Ok(v.integrate_against(|x| Ok(Complex64::new(w.map_or(1.0, |w| w.eval(x)) / x, 0.0)), 1e-14)?.0.re)
}

/// (1/X) sum over N of [sum over a | N of f_a(beta)] F(N/sqrt X) plus the
/// b-terms with f_{Db}(D beta) at N sqrt(D/X), F(x) = x^{-2} integral of g V1 V2 on the diagonal.
pub fn a0_limit_experiment(cfg: &GeoConfig, ctx: &FieldContext) -> Result<A0Table> {
    let l = cfg.l;
    let lc = ctx.conj(l);
    let beta = ctx
        .div_exact(l - lc, ctx.sqrt_d())
        .map(|q| q.a)
        .ok_or_else(|| Error::Precondition(format!("(l - l')/delta not rational for l = {l}")))?;
    let diagonal = l == lc;
    let inner = Inner::new(cfg, ctx, 1)?;
    let f = |x: f64| -> f64 {
        let mut acc = 0.0;
        for &(t, w) in &inner.t {
            acc += w * cfg.v1.eval(4.0 * PI * (inner.l1 * t).sqrt() / x) * cfg.v2.eval(4.0 * PI * (inner.l2 * t).sqrt() / x);
        }
        acc / (x * x)
    };
    let (lo, hi) = match (inner.x_range(&cfg.v1, inner.l1), inner.x_range(&cfg.v2, inner.l2)) {
        (Some(a), Some(b)) => (a.0.max(b.0), a.1.min(b.1)),
        _ => (1.0, 0.0),
    };
    let d = ctx.d;
    let one = weighted_integral(&cfg.v1, Some(&cfg.v2))?;
    let prod = weighted_integral(&cfg.v1, None)? * weighted_integral(&cfg.v2, None)?;
    let df = d as f64;
    let scale = (1.0 + 1.0 / df) / 2.0 * prod;
    let target = if diagonal { scale } else { 0.0 };
    let alt_limit = if diagonal { (1.0 + df / (df + 1.0)) * one } else { 0.0 };
    let mut rows = Vec::new();
    for &x_big in &cfg.x_values {
        let s = x_big.sqrt();
        let n_max = (hi * s).floor() as i64 + 1;
        if n_max as f64 > cfg.truncation.c_norm_max {
            return Err(Error::TruncationBudgetExceeded(format!("A0 needs N up to {n_max}")));
        }
        let mut total = 0.0;
        let mut terms = 0;
        if lo < hi {
            let mut coef_a = vec![0i64; n_max as usize + 1];
            for a in 1..=n_max {
                let fa = ramanujan_z(a, beta);
                if fa != 0 {
                    for m in (a..=n_max).step_by(a as usize) {
                        coef_a[m as usize] += fa;
                    }
                }
            }
            let sd = (df / x_big).sqrt();
            let nb_max = (hi / sd).floor() as i64 + 1;
            let mut coef_b = vec![0i64; nb_max as usize + 1];
            for b in 1..=nb_max {
                let fb = ramanujan_z(d * b, d * beta);
                if fb != 0 {
                    for m in (b..=nb_max).step_by(b as usize) {
                        coef_b[m as usize] += fb;
                    }
                }
            }
            for (nn, &c) in coef_a.iter().enumerate().skip(1) {
                let x = nn as f64 / s;
                if c != 0 && x > lo && x < hi {
                    total += c as f64 * f(x);
                    terms += 1;
                }
            }
            for (nn, &c) in coef_b.iter().enumerate().skip(1) {
                let x = nn as f64 * sd;
                if c != 0 && x > lo && x < hi {
                    total += c as f64 * f(x);
                    terms += 1;
                }
            }
        }
        let value = Complex64::new(total / x_big, 0.0);
        let err = |t: f64| if diagonal { (value.re - t).abs() / t.abs() } else { value.norm() / scale };
        rows.push(ConvergenceRow { x: x_big, value, error: err(target), alt_error: err(alt_limit), terms });
    }
    Ok(A0Table { diagonal, target, alt_limit, scale, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub constant: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnTable {
    pub n: i64,
    pub r: QuadInt,
    pub d: QuadInt,
    pub h_integral: Complex64,
    pub r_nd: f64,
    pub rows: Vec<ConvergenceRow>,
    /// LHS / integral of H_n at the largest X
    pub empirical_constant: Complex64,
    pub candidates: Vec<Candidate>,
    pub best: Candidate,
}

/// Sum over c = a + b omega with both embeddings in (lo, hi) satisfying the filter.
fn lattice_sum(lo: f64, hi: f64, filter: &XnFilter, ctx: &FieldContext, f: &(dyn Fn(f64, f64) -> Complex64 + Sync)) -> (Complex64, usize) {
    let (w1, w2) = ctx.omega_real();
    let span = (w1 - w2).abs();
    let bmax = ((hi - lo) / span).ceil() as i64 + 1;
    (-bmax..=bmax)
        .into_par_iter()
        .map(|b| {
            let bf = b as f64;
            let amin = (lo - bf * w1).max(lo - bf * w2).ceil() as i64;
            let amax = (hi - bf * w1).min(hi - bf * w2).floor() as i64;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut count = 0usize;
            for a in amin..=amax {
                let c = QuadInt::new(a, b);
                let (c1, c2) = (a as f64 + bf * w1, a as f64 + bf * w2);
                if c1 <= lo || c2 <= lo || c1 >= hi || c2 >= hi || !filter.admits(c, ctx) {
                    continue;
                }
                acc += f(c1, c2);
                count += 1;
            }
            (acc, count)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((Complex64::new(0.0, 0.0), 0), |(a, n), (b, m)| (a + b, n + m))
}

/// k for d = k, and k D for d = k sqrt D.
pub fn rational_size(d: QuadInt, ctx: &FieldContext) -> i64 {
    let k = d.content();
    if ctx.abs_norm(d) == k * k {
        k
    } else {
        k * ctx.d
    }
}

/// (1/X) sum over mtt >= 1 and c in X_n(r, d) with c, c' > 0 of H_n(mtt c/sqrt X, mtt c'/sqrt X),
/// against candidate constants times the integral of H_n.
pub fn an_mainterm_experiment(n: i64, r: QuadInt, d: QuadInt, cfg: &GeoConfig, ctx: &FieldContext) -> Result<AnTable> {
    let filter = XnFilter::new(n, r, d, ctx)?;
    let st = h_n_integral(n, cfg, ctx)?;
    let inner = Inner::new(cfg, ctx, 1)?;
    let (xr, yr) = match (inner.x_range(&cfg.v1, inner.l1), inner.x_range(&cfg.v2, inner.l2)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Precondition("V1 or V2 vanishes".into())),
    };
    let lo = xr.0.min(yr.0);
    let hi = xr.1.max(yr.1);
    let r_nd = r_density(n, rational_size(d, ctx))?.to_f64().unwrap_or(f64::NAN);
    let nf = n as f64;
    let mut rows = Vec::new();
    for &x_big in &cfg.x_values {
        let s = x_big.sqrt();
        let mut total = Complex64::new(0.0, 0.0);
        let mut terms = 0;
        let mut m = 1;
        loop {
            let (clo, chi) = (lo * s / m as f64, hi * s / m as f64);
            if chi * chi < 1.0 {
                break;
            }
            if m > cfg.truncation.mtt_max || chi * chi > cfg.truncation.c_norm_max {
                return Err(Error::TruncationBudgetExceeded(format!("A_n sum at X = {x_big}, mtt = {m}")));
            }
            let mf = m as f64;
            let h = |c1: f64, c2: f64| inner.h(nf, mf * c1 / s, mf * c2 / s, cfg);
            let (v, k) = lattice_sum(clo, chi, &filter, ctx, &h);
            total += v;
            terms += k;
            m += 1;
        }
        let value = total / x_big;
        rows.push(ConvergenceRow { x: x_big, value, error: 0.0, alt_error: 0.0, terms });
    }
    let sd = (ctx.d as f64).sqrt();
    let cands = [
        ("R/sqrt(D)", r_nd / sd),
        ("R/(sqrt(D) n)", r_nd / (sd * nf)),
        ("R/D^(3/2)", r_nd / (sd * ctx.d as f64)),
    ];
    let last = rows.last().map(|r| r.value).unwrap_or_default();
    let empirical_constant = last / st.h_integral;
    let candidates: Vec<Candidate> = cands
        .iter()
        .map(|&(label, c)| Candidate { label: label.to_string(), constant: c, rel_error: (empirical_constant - c).norm() / c })
        .collect();
    let best = candidates.iter().min_by(|a, b| a.rel_error.total_cmp(&b.rel_error)).cloned().unwrap();
    for row in &mut rows {
        let k = row.value / st.h_integral;
        row.error = (k - best.constant).norm() / best.constant;
        row.alt_error = (k - empirical_constant).norm() / empirical_constant.norm();
    }
    Ok(AnTable { n, r, d, h_integral: st.h_integral, r_nd, rows, empirical_constant, candidates, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::make_field;

    #[test]
    fn i_decays_and_vanishes() {
        let k = make_field(5).unwrap();
        let cfg = GeoConfig::standard(5, QuadInt::ONE).unwrap();
        let c = QuadInt::new(160, 1);
        let vals: Vec<f64> = [5, 10, 20, 40].iter().map(|&n| i_integral(n, c, 400.0, 1, &cfg, &k).unwrap().norm()).collect();
        assert!(vals[0] > 0.0 && vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
        let mut far = cfg.clone();
        far.v1 = TestFunction::bump(50.0, 60.0).unwrap();
        assert_eq!(i_integral(5, c, 400.0, 1, &far, &k).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn st_identity_d5() {
        let k = make_field(5).unwrap();
        let cfg = GeoConfig::standard(5, QuadInt::ONE).unwrap();
        let st = h_n_integral(5, &cfg, &k).unwrap();
        assert!(st.derived_rel_residual < 1e-6, "{st:?}");
        assert!(st.literal_rel_residual > 0.1);
        let mut zero = cfg.clone();
        zero.v1 = TestFunction::zero();
        let st0 = h_n_integral(5, &zero, &k).unwrap();
        assert_eq!(st0.h_integral, Complex64::new(0.0, 0.0));
        assert_eq!(st0.literal_rhs, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn a0_tables() {
        let k = make_field(5).unwrap();
        let cfg = GeoConfig::standard(5, QuadInt::ONE).unwrap();
        let t = a0_limit_experiment(&cfg, &k).unwrap();
        let last = t.rows.last().unwrap();
        assert!(last.alt_error < 1e-4, "{t:?}");
        assert!((t.target - 0.0290).abs() < 5e-4 && (last.value.re - 0.0673).abs() < 5e-4, "{t:?}");
        let off = a0_limit_experiment(&GeoConfig::standard(5, QuadInt::new(1, 1)).unwrap(), &k).unwrap();
        assert!(!off.diagonal && off.rows.last().unwrap().error < 1e-2, "{off:?}");
        let mut half = cfg.clone();
        half.g = cfg.g.scaled(0.5);
        let h = a0_limit_experiment(&half, &k).unwrap();
        assert!((h.rows[2].value.re - 0.5 * last.value.re).abs() < 1e-14);
    }

    #[test]
    fn an_constant_n5() {
        let k = make_field(5).unwrap();
        let cfg = GeoConfig::standard(5, QuadInt::ONE).unwrap();
        let t = an_mainterm_experiment(5, QuadInt::ONE, QuadInt::ONE, &cfg, &k).unwrap();
        let want = 5f64.sqrt() / 6.0;
        assert!((t.empirical_constant.re - want).abs() < 5e-3 * want, "{t:?}");
        assert!(t.best.rel_error > 0.05);
        let errs: Vec<f64> = t.rows.iter().map(|r| r.alt_error).collect();
        assert!(errs[1] < errs[0], "{errs:?}");
    }
}
