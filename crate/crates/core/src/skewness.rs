//! Spectral neighborhoods, gaps and the skewness quantities x, y, w (plus the
//! auxiliary x̄, ȳ, σ) for symmetric and rectangular perturbation problems.

use crate::error::{Error, Result};
use crate::spectral::{singular_order_values, validate_index_set, RectSpectrum, Spectrum, SymMatrix};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub s: Vec<usize>,
    pub lambda_bar: f64,
    /// `N_λ̄(S)`, sorted ascending.
    pub n_set: Vec<usize>,
    pub p: usize,
    pub r: usize,
}

impl Selection {
    pub fn outside(&self, n: usize) -> Vec<usize> {
        let mut inside = vec![false; n];
        for &j in &self.n_set {
            inside[j] = true;
        }
        (0..n).filter(|&j| !inside[j]).collect()
    }
}

pub fn select_neighborhood(spec: &Spectrum, s: &[usize], lambda_bar: f64) -> Result<Selection> {
    select_neighborhood_values(&spec.eigenvalues, s, lambda_bar)
}

/// Neighborhood over an arbitrary list of (eigen- or singular) values.
pub fn select_neighborhood_values(vals: &[f64], s: &[usize], lambda_bar: f64) -> Result<Selection> {
    if !(lambda_bar > 0.0) || !lambda_bar.is_finite() {
        return Err(Error::InvalidRadius(lambda_bar));
    }
    validate_index_set(s, vals.len())?;
    let n_set: Vec<usize> = (0..vals.len())
        .filter(|&j| s.iter().any(|&i| (vals[i] - vals[j]).abs() <= lambda_bar))
        .collect();
    Ok(Selection { s: s.to_vec(), lambda_bar, p: s.len(), r: n_set.len(), n_set })
}

/// `{0, .., p-1}`.
pub fn leading(p: usize) -> Vec<usize> {
    (0..p).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// `min |λᵢ − λⱼ|`, i ∈ S, j ∉ S.
    pub delta_s: f64,
    /// `λ_p − λ_{p+1}`.
    pub delta_p: Option<f64>,
    /// `min(δ_{p−1}, δ_p)`; equals `δ_p` when p = 1.
    pub delta_paren_p: Option<f64>,
    /// Boundary gap of the top-p singular selection.
    pub delta_bar_p: Option<f64>,
    /// Contour margin, at most `delta_s`.
    pub delta: f64,
}

impl GapReport {
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || delta > self.delta_s {
            return Err(Error::PreconditionFailed(format!(
                "contour margin {delta} must lie in (0, δ_S = {}]",
                self.delta_s
            )));
        }
        self.delta = delta;
        Ok(self)
    }
}

pub fn spectral_gaps(spec: &Spectrum, s: &[usize], p: usize) -> Result<GapReport> {
    spectral_gaps_values(&spec.eigenvalues, s, p)
}

fn boundary_gap(vals: &[f64], s: &[usize]) -> f64 {
    let mut inside = vec![false; vals.len()];
    for &i in s {
        inside[i] = true;
    }
    let mut best = f64::INFINITY;
    for &i in s {
        for (j, &v) in vals.iter().enumerate() {
            if !inside[j] {
                best = best.min((vals[i] - v).abs());
            }
        }
    }
    best
}

pub fn spectral_gaps_values(vals: &[f64], s: &[usize], p: usize) -> Result<GapReport> {
    let n = vals.len();
    validate_index_set(s, n)?;
    if s.len() == n {
        return Err(Error::InvalidSelection("S must be a proper subset".into()));
    }
    let delta_s = boundary_gap(vals, s);
    if !(delta_s > 0.0) {
        return Err(Error::DegenerateGap("δ_S = 0".into()));
    }
    let gap = |k: usize| vals[k - 1] - vals[k];
    let (delta_p, delta_paren_p, delta_bar_p) = if p >= 1 && p < n {
        let dp = gap(p);
        let dpp = if p >= 2 { gap(p - 1).min(dp) } else { dp };
        let top = singular_order_values(vals);
        (Some(dp), Some(dpp), Some(boundary_gap(vals, top.top(p))))
    } else {
        (None, None, None)
    };
    Ok(GapReport { delta_s, delta_p, delta_paren_p, delta_bar_p, delta: delta_s })
}

/// x, y, w of the perturbation problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Xyw {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

/// x̄, ȳ, σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxQuantities {
    pub xbar: f64,
    pub ybar: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewnessReport {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub xbar: f64,
    pub ybar: f64,
    pub sigma: f64,
    #[serde(rename = "E_norm")]
    pub e_norm: f64,
    pub p: usize,
    pub r: usize,
    pub lambda_bar: f64,
    #[serde(rename = "delta_S")]
    pub delta_s: f64,
}

impl SkewnessReport {
    pub fn assemble(xyw: Xyw, aux: AuxQuantities, e_norm: f64, sel: &Selection, gaps: &GapReport) -> Self {
        Self {
            x: xyw.x,
            y: xyw.y,
            w: xyw.w,
            xbar: aux.xbar,
            ybar: aux.ybar,
            sigma: aux.sigma,
            e_norm,
            p: sel.p,
            r: sel.r,
            lambda_bar: sel.lambda_bar,
            delta_s: gaps.delta_s,
        }
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

fn check_kset(kset: &[usize], s: &[usize]) -> Result<()> {
    match kset.iter().find(|k| !s.contains(k)) {
        Some(k) => Err(Error::InvalidSelection(format!("k = {k} is not in S"))),
        None => Ok(()),
    }
}

/// `max_{i≠j, k} |Σ_l W_li W_lj / (λ_k − λ_l)|`, with the sum over the rows of `wm`.
/// Summation runs in row order for reproducibility.
fn resolvent_form(wm: &DMatrix<f64>, out_vals: &[f64], k_vals: &[f64]) -> Result<f64> {
    let r = wm.ncols();
    let mut best = 0.0_f64;
    for &lk in k_vals {
        let mut inv = Vec::with_capacity(out_vals.len());
        for &ll in out_vals {
            let d = lk - ll;
            if d == 0.0 {
                return Err(Error::DegenerateGap(format!(
                    "λ_k = λ_l = {lk} for an index outside the neighborhood"
                )));
            }
            inv.push(1.0 / d);
        }
        for i in 0..r {
            // The form is symmetric in (i, j), so i < j covers i ≠ j.
            for j in (i + 1)..r {
                let mut acc = 0.0;
                for (l, c) in inv.iter().enumerate() {
                    acc += wm[(l, i)] * wm[(l, j)] * c;
                }
                best = best.max(acc.abs());
            }
        }
    }
    Ok(best)
}

/// x, y, w for a symmetric problem. `kset` selects the k range in y (normally all of S).
pub fn skew_xyw(spec: &Spectrum, e: &SymMatrix, sel: &Selection, kset: &[usize]) -> Result<Xyw> {
    let n = spec.n();
    if e.n() != n {
        return Err(Error::DimensionError { expected: n, found: e.n() });
    }
    check_kset(kset, &sel.s)?;
    let un = spec.columns(&sel.n_set);
    let eu = e.as_matrix() * &un;
    let x = max_abs(&(un.transpose() * &eu));
    let w = eu.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let out = sel.outside(n);
    let y = if out.is_empty() || sel.r < 2 {
        0.0
    } else {
        let wm = spec.columns(&out).transpose() * &eu;
        let out_vals: Vec<f64> = out.iter().map(|&l| spec.eigenvalues[l]).collect();
        let k_vals: Vec<f64> = kset.iter().map(|&k| spec.eigenvalues[k]).collect();
        resolvent_form(&wm, &out_vals, &k_vals)?
    };
    Ok(Xyw { x, y, w })
}

/// x̄ over all eigenvector pairs, ȳ = max_{i≠j∈N}|uᵢᵀE²uⱼ|, σ = min_{i<p}|λᵢ|.
pub fn skew_aux(spec: &Spectrum, e: &SymMatrix, sel: &Selection, p: usize) -> Result<AuxQuantities> {
    let n = spec.n();
    if e.n() != n {
        return Err(Error::DimensionError { expected: n, found: e.n() });
    }
    if p == 0 || p > n {
        return Err(Error::InvalidSelection(format!("p = {p} out of range")));
    }
    let u = &spec.eigenvectors;
    let xbar = max_abs(&(u.transpose() * (e.as_matrix() * u)));
    let eun = e.as_matrix() * spec.columns(&sel.n_set);
    let g = eun.transpose() * &eun;
    let mut ybar = 0.0_f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            if i != j {
                ybar = ybar.max(g[(i, j)].abs());
            }
        }
    }
    let sigma = spec.eigenvalues[..p].iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    Ok(AuxQuantities { xbar, ybar, sigma })
}

/// All quantities for (A, E, S) in one pass.
pub fn skewness_report(spec: &Spectrum, e: &SymMatrix, sel: &Selection, gaps: &GapReport) -> Result<SkewnessReport> {
    let xyw = skew_xyw(spec, e, sel, &sel.s)?;
    let aux = skew_aux(spec, e, sel, sel.p)?;
    Ok(SkewnessReport::assemble(xyw, aux, e.norm()?, sel, gaps))
}

/// Rectangular x, y, w over the singular triplets of `A` (m×n) and a noise `E` of the same shape.
/// Left and right vectors outside `min(m,n)` carry singular value 0.
pub fn rect_skew_xyw(rs: &RectSpectrum, e: &DMatrix<f64>, sel: &Selection, kset: &[usize]) -> Result<Xyw> {
    let (m, n) = (rs.u.nrows(), rs.v.nrows());
    if e.shape() != (m, n) {
        return Err(Error::DimensionError { expected: m * n, found: e.nrows() * e.ncols() });
    }
    check_kset(kset, &sel.s)?;
    if sel.n_set.iter().any(|&i| i >= rs.singular_values.len()) {
        return Err(Error::InvalidSelection("neighborhood exceeds the singular indices".into()));
    }
    let un = rs.u.select_columns(&sel.n_set);
    let vn = rs.v.select_columns(&sel.n_set);
    let ev = e * &vn;
    let etu = e.transpose() * &un;
    let x = max_abs(&(un.transpose() * &ev));
    let w = ev
        .column_iter()
        .chain(etu.column_iter())
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let k_vals: Vec<f64> = kset.iter().map(|&k| rs.singular_values[k]).collect();
    let mut y = 0.0_f64;
    if sel.r >= 2 {
        let in_n = |l: &usize| sel.n_set.contains(l);
        let out_left: Vec<usize> = (0..m).filter(|l| !in_n(l)).collect();
        let out_right: Vec<usize> = (0..n).filter(|l| !in_n(l)).collect();
        if !out_left.is_empty() {
            let wm = rs.u.select_columns(&out_left).transpose() * &ev;
            let vals: Vec<f64> = out_left.iter().map(|&l| rs.sigma_left(l)).collect();
            y = y.max(resolvent_form(&wm, &vals, &k_vals)?);
        }
        if !out_right.is_empty() {
            let wm = rs.v.select_columns(&out_right).transpose() * &etu;
            let vals: Vec<f64> = out_right.iter().map(|&l| rs.sigma_right(l)).collect();
            y = y.max(resolvent_form(&wm, &vals, &k_vals)?);
        }
    }
    Ok(Xyw { x, y, w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::decompose_symmetric;

    fn diag_spec(vals: &[f64]) -> Spectrum {
        decompose_symmetric(&SymMatrix::from_diagonal(vals).unwrap()).unwrap()
    }

    #[test]
    fn neighborhood_examples() {
        let mut v = vec![10.0, 9.0];
        v.extend(std::iter::repeat(0.0).take(6));
        let sel = select_neighborhood_values(&v, &[0], 2.0).unwrap();
        assert_eq!(sel.n_set, vec![0, 1]);
        assert_eq!(sel.r, 2);
        let all = select_neighborhood_values(&v, &[0], 10.0).unwrap();
        assert_eq!(all.r, v.len());
        assert!(matches!(select_neighborhood_values(&v, &[0], 0.0), Err(Error::InvalidRadius(_))));
    }

    #[test]
    fn gap_examples() {
        let g = spectral_gaps_values(&[5.0, 3.0, 1.0], &[0], 1).unwrap();
        assert_eq!(g.delta_s, 2.0);
        let g = spectral_gaps_values(&[5.0, 3.0, 1.0], &[1], 1).unwrap();
        assert_eq!(g.delta_s, 2.0);
        let lam = 100.0;
        let delta = 3.0;
        let g = spectral_gaps_values(&[lam, lam - delta, 0.0, 0.0], &[0], 1).unwrap();
        assert_eq!(g.delta_s, delta);
        assert!(matches!(spectral_gaps_values(&[1.0, 1.0, 0.0], &[0], 1), Err(Error::DegenerateGap(_))));
        assert!(g.clone().with_delta(4.0).is_err());
        assert_eq!(g.with_delta(1.0).unwrap().delta, 1.0);
    }

    #[test]
    fn zero_noise_gives_zero_quantities() {
        let spec = diag_spec(&[5.0, 4.0, 1.0, 0.5]);
        let e = SymMatrix::zeros(4).unwrap();
        let sel = select_neighborhood(&spec, &[0], 1.5).unwrap();
        let q = skew_xyw(&spec, &e, &sel, &[0]).unwrap();
        assert_eq!((q.x, q.y, q.w), (0.0, 0.0, 0.0));
    }

    #[test]
    fn scalar_noise_aux() {
        let spec = diag_spec(&[5.0, 4.0, 1.0, 0.5]);
        let e = SymMatrix::from_diagonal(&[0.3; 4]).unwrap();
        let sel = select_neighborhood(&spec, &[0], 1.5).unwrap();
        let aux = skew_aux(&spec, &e, &sel, 1).unwrap();
        assert!((aux.xbar - 0.3).abs() < 1e-15);
        assert!(aux.ybar.abs() < 1e-15);
        assert_eq!(aux.sigma, 5.0);
    }

    #[test]
    fn single_offdiagonal_coupling_is_xbar() {
        let spec = diag_spec(&[5.0, 4.0, 1.0]);
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 0.25;
        m[(1, 0)] = 0.25;
        let e = SymMatrix::new(m).unwrap();
        let sel = select_neighborhood(&spec, &[0], 1.5).unwrap();
        assert!((skew_aux(&spec, &e, &sel, 1).unwrap().xbar - 0.25).abs() < 1e-15);
        assert!((skew_xyw(&spec, &e, &sel, &[0]).unwrap().x - 0.25).abs() < 1e-15);
    }

    #[test]
    fn kset_outside_s_rejected() {
        let spec = diag_spec(&[5.0, 4.0, 1.0]);
        let e = SymMatrix::zeros(3).unwrap();
        let sel = select_neighborhood(&spec, &[0], 1.5).unwrap();
        assert!(matches!(skew_xyw(&spec, &e, &sel, &[1]), Err(Error::InvalidSelection(_))));
    }
}
