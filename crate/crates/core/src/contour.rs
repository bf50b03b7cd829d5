//! Combinatorial evaluation of `(1/2πi)∮ dz / ∏ⱼ(z − λⱼ)` over a contour
//! enclosing T of the s+1 real poles, together with a quadrature oracle.
//!
//! Positions are numbered 1..=s+1 as in the combinatorial formula: positions
//! 1..=T hold the enclosed values (X), positions T+1..=s+1 the rest (Y).

use crate::error::{Error, Result};
use crate::par::tree_sum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Default cap on s for exhaustive enumeration.
pub const DEFAULT_MAX_S: usize = 18;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    pub t: usize,
    pub s: usize,
    pub m: Vec<usize>,
}

/// All compositions of s into T positive parts, in lexicographic order.
/// Empty when T = 0 or T > s.
pub fn enumerate_compositions(t: usize, s: usize) -> Vec<Composition> {
    let mut out = Vec::new();
    if t == 0 || t > s {
        return out;
    }
    let mut cur = Vec::with_capacity(t);
    fn rec(t: usize, s: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Composition>) {
        let parts_left = t - cur.len();
        if parts_left == 1 {
            cur.push(left);
            out.push(Composition { t, s, m: cur.clone() });
            cur.pop();
            return;
        }
        for first in 1..=(left - (parts_left - 1)) {
            cur.push(first);
            rec(t, s, left - first, cur, out);
            cur.pop();
        }
    }
    rec(t, s, s, &mut cur, &mut out);
    out
}

/// C(n, k) as f64.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileGraph {
    pub t: usize,
    pub s: usize,
    pub composition: Vec<usize>,
    /// Directed edges (X position → Y position), 1-based positions.
    pub edges: Vec<(usize, usize)>,
    /// Degree of each Y position T+1..=s+1, in order.
    pub degrees: Vec<usize>,
    pub r_c: usize,
}

impl ProfileGraph {
    pub fn x_len(&self) -> usize {
        self.t
    }

    pub fn y_len(&self) -> usize {
        self.s + 1 - self.t
    }
}

/// Build `G(X, Y | L)`: X position j connects to every position in
/// `[(s+1) − Σ_{k≤j}(m_k − 1), (s+1) − Σ_{k<j}(m_k − 1)]`.
pub fn build_profile(x_len: usize, y_len: usize, l: &Composition) -> Result<ProfileGraph> {
    let (t, s) = (l.t, l.s);
    if l.m.len() != t || l.m.iter().any(|&v| v == 0) || l.m.iter().sum::<usize>() != s {
        return Err(Error::ShapeError(format!("{:?} is not a composition of {s} into {t} parts", l.m)));
    }
    if x_len != t || x_len + y_len != s + 1 {
        return Err(Error::ShapeError(format!(
            "lengths X = {x_len}, Y = {y_len} do not match T = {t}, s = {s}"
        )));
    }
    let top = s + 1;
    let mut edges = Vec::with_capacity(s);
    let mut before = 0;
    for (j, &mj) in l.m.iter().enumerate() {
        let hi = top - before;
        let lo = hi - (mj - 1);
        for pos in (lo..=hi).rev() {
            edges.push((j + 1, pos));
        }
        before += mj - 1;
    }
    let mut degrees = vec![0usize; y_len];
    for &(_, yp) in &edges {
        degrees[yp - t - 1] += 1;
    }
    let r_c = degrees.iter().map(|d| d.saturating_sub(1)).sum();
    Ok(ProfileGraph { t, s, composition: l.m.clone(), edges, degrees, r_c })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileStats {
    pub degrees: Vec<usize>,
    pub r_c: usize,
    pub edge_count: usize,
    pub min_y_degree: usize,
}

pub fn profile_stats(g: &ProfileGraph) -> ProfileStats {
    ProfileStats {
        degrees: g.degrees.clone(),
        r_c: g.r_c,
        edge_count: g.edges.len(),
        min_y_degree: g.degrees.iter().copied().min().unwrap_or(0),
    }
}

/// `Σ (d(j) − 1)` over the listed Y positions (1-based, each in T+1..=s+1).
pub fn excess_degree(g: &ProfileGraph, y_positions: &[usize]) -> usize {
    y_positions
        .iter()
        .map(|&p| g.degrees[p - g.t - 1].saturating_sub(1))
        .sum()
}

/// `w(X, Y | L) = ∏_{edges} 1/(λ_{e⁺} − λ_{e⁻})`; 0 when either side is empty.
pub fn profile_weight(g: &ProfileGraph, values_x: &[f64], values_y: &[f64]) -> Result<f64> {
    if values_x.is_empty() || values_y.is_empty() {
        return Ok(0.0);
    }
    if values_x.len() != g.x_len() || values_y.len() != g.y_len() {
        return Err(Error::ShapeError("value lists do not match the profile".into()));
    }
    let mut w = 1.0;
    for &(xp, yp) in &g.edges {
        let d = values_x[xp - 1] - values_y[yp - g.t - 1];
        if d == 0.0 {
            return Err(Error::DegenerateGap(format!("edge {xp}→{yp} joins equal values")));
        }
        w /= d;
    }
    Ok(w)
}

/// Contour integral with the `inside` poles enclosed, evaluated as
/// `(−1)^{T+1} Σ_{L} w(X, Y | L)`.
pub fn integral_combinatorial(inside: &[f64], outside: &[f64]) -> Result<f64> {
    integral_combinatorial_with_limit(inside, outside, DEFAULT_MAX_S)
}

pub fn integral_combinatorial_with_limit(inside: &[f64], outside: &[f64], max_s: usize) -> Result<f64> {
    let t = inside.len();
    if t == 0 {
        return Ok(0.0);
    }
    if outside.is_empty() {
        return Err(Error::UnsupportedAllInside);
    }
    for &a in inside {
        if outside.contains(&a) {
            return Err(Error::DegenerateGap(format!("value {a} is both inside and outside")));
        }
    }
    let s = t + outside.len() - 1;
    if s > max_s {
        return Err(Error::PreconditionFailed(format!("s = {s} exceeds the enumeration cap {max_s}")));
    }
    let mut terms = Vec::new();
    for l in enumerate_compositions(t, s) {
        let g = build_profile(t, outside.len(), &l)?;
        terms.push(profile_weight(&g, inside, outside)?);
    }
    let sign = if t % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * tree_sum(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub value: f64,
    pub inside: bool,
}

const GL_ORDER: usize = 32;
const MAX_DOUBLINGS: usize = 20;

/// Gauss–Legendre nodes and weights on [0, 1].
fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static NODES: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = [(0.0, 0.0); GL_ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out[i] = (0.5 * (1.0 - x), 0.5 * w);
        }
        out
    })
}

fn integrand(z: Complex64, poles: &[f64]) -> Complex64 {
    let mut d = Complex64::new(1.0, 0.0);
    for &p in poles {
        d *= z - p;
    }
    d.inv()
}

fn rectangle_integral(corners: &[Complex64; 4], poles: &[f64], panels: usize) -> Complex64 {
    let gl = gauss_legendre();
    let mut total = Complex64::new(0.0, 0.0);
    for e in 0..4 {
        let (z0, z1) = (corners[e], corners[(e + 1) % 4]);
        let dz = (z1 - z0) / panels as f64;
        let mut edge = Complex64::new(0.0, 0.0);
        for k in 0..panels {
            let base = z0 + dz * k as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(t, w) in gl.iter() {
                acc += integrand(base + dz * t, poles) * w;
            }
            edge += acc * dz;
        }
        total += edge;
    }
    total / Complex64::new(0.0, 2.0 * std::f64::consts::PI)
}

/// `(1/2πi)∮ dz / ∏(z − λ)` over an axis-aligned rectangle enclosing exactly the
/// poles flagged `inside`; vertical edges bisect the gaps to the nearest outside poles.
pub fn integral_numeric(poles: &[Pole], tol: f64) -> Result<Complex64> {
    if poles.is_empty() {
        return Err(Error::ShapeError("no poles".into()));
    }
    let values: Vec<f64> = poles.iter().map(|p| p.value).collect();
    let lo_all = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_all = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi_all - lo_all;
    let inside: Vec<f64> = poles.iter().filter(|p| p.inside).map(|p| p.value).collect();
    let outside: Vec<f64> = poles.iter().filter(|p| !p.inside).map(|p| p.value).collect();
    let (left, right, height) = if inside.is_empty() {
        let right = lo_all - 0.5 * (1.0 + spread);
        (right - 1.0, right, 1.0)
    } else {
        let a = inside.iter().copied().fold(f64::INFINITY, f64::min);
        let b = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if outside.iter().any(|&o| o >= a && o <= b) {
            return Err(Error::NoSeparatingContour);
        }
        let below = outside.iter().copied().filter(|&o| o < a).fold(f64::NEG_INFINITY, f64::max);
        let above = outside.iter().copied().filter(|&o| o > b).fold(f64::INFINITY, f64::min);
        let margin = 1e-6 * spread.max(f64::MIN_POSITIVE);
        if a - below < 2.0 * margin || above - b < 2.0 * margin {
            return Err(Error::NoSeparatingContour);
        }
        let pad = 1.0 + (b - a);
        let left = if below.is_finite() { 0.5 * (a + below) } else { a - pad };
        let right = if above.is_finite() { 0.5 * (b + above) } else { b + pad };
        (left, right, 1.0 + (b - a))
    };
    let h = 0.5 * height;
    let corners = [
        Complex64::new(left, -h),
        Complex64::new(right, -h),
        Complex64::new(right, h),
        Complex64::new(left, h),
    ];
    let mut panels = 1;
    let mut prev = rectangle_integral(&corners, &values, panels);
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let cur = rectangle_integral(&corners, &values, panels);
        if (cur - prev).norm() < tol * cur.norm().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergent(MAX_DOUBLINGS))
}

/// Convenience wrapper taking the two pole groups separately.
pub fn integral_numeric_split(inside: &[f64], outside: &[f64], tol: f64) -> Result<Complex64> {
    let poles: Vec<Pole> = inside
        .iter()
        .map(|&value| Pole { value, inside: true })
        .chain(outside.iter().map(|&value| Pole { value, inside: false }))
        .collect();
    integral_numeric(&poles, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_examples() {
        let c: Vec<Vec<usize>> = enumerate_compositions(2, 3).into_iter().map(|c| c.m).collect();
        assert_eq!(c, vec![vec![1, 2], vec![2, 1]]);
        let c: Vec<Vec<usize>> = enumerate_compositions(1, 5).into_iter().map(|c| c.m).collect();
        assert_eq!(c, vec![vec![5]]);
        assert_eq!(enumerate_compositions(3, 5).len(), 6);
        assert!(enumerate_compositions(4, 3).is_empty());
        assert!(enumerate_compositions(0, 3).is_empty());
    }

    #[test]
    fn worked_profile_example() {
        let l = Composition { t: 3, s: 5, m: vec![1, 1, 3] };
        let g = build_profile(3, 3, &l).unwrap();
        let mut edges = g.edges.clone();
        edges.sort();
        assert_eq!(edges, vec![(1, 6), (2, 6), (3, 4), (3, 5), (3, 6)]);
        let st = profile_stats(&g);
        assert_eq!(st.degrees, vec![1, 1, 3]);
        assert_eq!(st.r_c, 2);
        assert_eq!(st.edge_count, 5);
    }

    #[test]
    fn worked_weight_example() {
        let l = Composition { t: 3, s: 5, m: vec![1, 1, 3] };
        let g = build_profile(3, 3, &l).unwrap();
        let lam = |i: usize| 10.0 / i as f64 + i as f64 * 0.37;
        let w = profile_weight(&g, &[lam(1), lam(1), lam(2)], &[lam(3), lam(3), lam(9)]).unwrap();
        let expect = 1.0
            / ((lam(1) - lam(9)).powi(2) * (lam(2) - lam(9)) * (lam(2) - lam(3)).powi(2));
        assert!((w - expect).abs() <= 1e-14 * expect.abs());
    }

    #[test]
    fn single_edge_weight_and_empty_sides() {
        let l = Composition { t: 1, s: 1, m: vec![1] };
        let g = build_profile(1, 1, &l).unwrap();
        assert_eq!(profile_weight(&g, &[1.0], &[0.0]).unwrap(), 1.0);
        assert_eq!(profile_weight(&g, &[], &[0.0]).unwrap(), 0.0);
        assert!(matches!(profile_weight(&g, &[1.0], &[1.0]), Err(Error::DegenerateGap(_))));
    }

    #[test]
    fn shape_errors() {
        let l = Composition { t: 2, s: 3, m: vec![1, 2] };
        assert!(matches!(build_profile(2, 1, &l), Err(Error::ShapeError(_))));
        let bad = Composition { t: 2, s: 3, m: vec![1, 1] };
        assert!(matches!(build_profile(2, 2, &bad), Err(Error::ShapeError(_))));
    }

    #[test]
    fn two_pole_integral() {
        let (a, b) = (2.0, 0.0);
        assert_eq!(integral_combinatorial(&[b], &[a]).unwrap(), 1.0 / (b - a));
        let v = integral_numeric_split(&[b], &[a], 1e-12).unwrap();
        assert!((v.re + 0.5).abs() < 1e-10);
        assert!(v.im.abs() < 1e-10);
    }

    #[test]
    fn trivial_numeric_cases() {
        let one = integral_numeric_split(&[0.3], &[], 1e-12).unwrap();
        assert!((one.re - 1.0).abs() < 1e-12 && one.im.abs() < 1e-12);
        let zero = integral_numeric_split(&[], &[0.3, -0.5], 1e-12).unwrap();
        assert!(zero.norm() < 1e-10);
        assert_eq!(integral_combinatorial(&[], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn separated_example_matches() {
        let inside = [2.0, 1.5];
        let outside = [0.3, -0.1, -1.0];
        let c = integral_combinatorial(&inside, &outside).unwrap();
        let q = integral_numeric_split(&inside, &outside, 1e-12).unwrap();
        assert!((c - q.re).abs() <= 1e-8 * c.abs().max(1.0));
    }

    #[test]
    fn interleaved_poles_have_no_contour() {
        let r = integral_numeric_split(&[0.0, 2.0], &[1.0], 1e-10);
        assert!(matches!(r, Err(Error::NoSeparatingContour)));
    }

    #[test]
    fn all_inside_is_refused() {
        assert!(matches!(integral_combinatorial(&[1.0, 2.0], &[]), Err(Error::UnsupportedAllInside)));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = gauss_legendre();
        let wsum: f64 = gl.iter().map(|&(_, w)| w).sum();
        assert!((wsum - 1.0).abs() < 1e-14);
        let m: f64 = gl.iter().map(|&(t, w)| w * t.powi(40)).sum();
        assert!((m - 1.0 / 41.0).abs() < 1e-14);
    }
}
