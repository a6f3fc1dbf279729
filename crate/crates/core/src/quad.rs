//! Gauss–Legendre panels and a bisecting adaptive integrator for complex integrands.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

type Rule = Arc<[(f64, f64)]>;

/// Nodes and weights on [-1, 1], cached per degree.
pub fn rule(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            let gl = GaussLegendre::new(NonZeroUsize::new(n).expect("degree must be positive"));
            gl.as_node_weight_pairs().iter().copied().collect()
        })
        .clone()
}

/// Fixed-degree rule mapped to [a, b].
pub fn gl<F: FnMut(f64) -> Complex64>(n: usize, a: f64, b: f64, mut f: F) -> Complex64 {
    let h = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    rule(n).iter().map(|&(x, w)| f(m + h * x) * w).sum::<Complex64>() * h
}

/// Nodes and weights on [a, b] split into equal panels.
pub fn panel_nodes(a: f64, b: f64, panels: usize, n: usize) -> Vec<(f64, f64)> {
    let r = rule(n);
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * n);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let h = 0.5 * width;
        for &(x, w) in r.iter() {
            out.push((lo + h * (x + 1.0), w * h));
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub max_depth: u32,
    pub degree: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive { abs_tol: 1e-13, max_depth: 24, degree: 16 }
    }
}

impl Adaptive {
    /// Returns (value, error estimate).
    pub fn integrate<F: Fn(f64) -> Complex64>(&self, a: f64, b: f64, f: F) -> Result<(Complex64, f64)> {
        if a == b {
            return Ok((Complex64::new(0.0, 0.0), 0.0));
        }
        let whole = gl(self.degree, a, b, &f);
        self.step(&f, a, b, whole, self.abs_tol, 0)
    }

    fn step<F: Fn(f64) -> Complex64>(&self, f: &F, a: f64, b: f64, whole: Complex64, tol: f64, depth: u32) -> Result<(Complex64, f64)> {
        let m = 0.5 * (a + b);
        let left = gl(self.degree, a, m, f);
        let right = gl(self.degree, m, b, f);
        let diff = (left + right - whole).norm();
        if diff <= tol || diff <= 8.0 * f64::EPSILON * (left.norm() + right.norm()) {
            return Ok((left + right, diff));
        }
        if depth >= self.max_depth {
            return Err(Error::QuadratureFailure(format!("no convergence on [{a}, {b}] (diff {diff:e})")));
        }
        let (l, el) = self.step(f, a, m, left, (0.5 * tol).max(self.abs_tol / 64.0), depth + 1)?;
        let (r, er) = self.step(f, m, b, right, (0.5 * tol).max(self.abs_tol / 64.0), depth + 1)?;
        Ok((l + r, el + er))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = gl(8, 0.0, 2.0, |x| Complex64::new(x.powi(15), 0.0));
        assert!((v.re - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn adaptive_oscillatory() {
        let (v, e) = Adaptive::default().integrate(0.0, 50.0, |x| Complex64::from_polar(1.0, x * x / 10.0)).unwrap();
        // Fresnel-type reference from a much finer fixed rule
        let fine = panel_nodes(0.0, 50.0, 400, 32).into_iter().map(|(x, w)| Complex64::from_polar(w, x * x / 10.0)).sum::<Complex64>();
        assert!((v - fine).norm() < 1e-11 && e < 1e-12);
    }
}
