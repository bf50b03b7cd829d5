//! Eigenvalue shift certificates, the least-singular-value floor and the
//! deformed Wigner outlier prediction.

use crate::error::{Error, Result};
use crate::skewness::{leading, select_neighborhood, skew_xyw, Selection};
use crate::spectral::{Spectrum, SymMatrix};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Noise measurements entering the certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseQuantities {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub e_norm: f64,
}

pub fn noise_quantities(spec: &Spectrum, e: &SymMatrix, sel: &Selection) -> Result<NoiseQuantities> {
    let q = skew_xyw(spec, e, sel, &sel.s)?;
    Ok(NoiseQuantities { x: q.x, y: q.y, w: q.w, e_norm: e.norm()? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn at_least(name: &str, lhs: f64, rhs: f64) -> Hypothesis {
    Hypothesis { name: name.into(), lhs, rhs, holds: lhs >= rhs }
}

fn below(name: &str, lhs: f64, rhs: f64) -> Hypothesis {
    Hypothesis { name: name.into(), lhs, rhs, holds: lhs < rhs }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftCertificate {
    /// 0-based eigenvalue index.
    pub target: usize,
    pub direction: Direction,
    pub r: usize,
    pub delta_internal: f64,
    pub bound: f64,
    pub hypotheses: Vec<Hypothesis>,
    pub valid: bool,
}

impl ShiftCertificate {
    fn new(target: usize, direction: Direction, r: usize, delta_internal: f64, hypotheses: Vec<Hypothesis>) -> Self {
        let valid = hypotheses.iter().all(|h| h.holds);
        Self { target, direction, r, delta_internal, bound: delta_internal / 2.0, hypotheses, valid }
    }

    pub fn failing(&self) -> Vec<&str> {
        self.hypotheses.iter().filter(|h| !h.holds).map(|h| h.name.as_str()).collect()
    }
}

fn internal_gap(r: usize, x: f64, w: f64, lambda_bar: f64) -> f64 {
    let r = r as f64;
    (12.0 * r * x).max(144.0 * r * w * w / lambda_bar)
}

/// Certificate for `λ_p − λ̃_p` (p is 1-based). `q` must be measured on `N_λ̄({1..p})`.
pub fn lower_eigen_shift(spec: &Spectrum, q: &NoiseQuantities, p: usize, lambda_bar: f64) -> Result<ShiftCertificate> {
    let n = spec.n();
    if p == 0 || p >= n {
        return Err(Error::InvalidSelection(format!("p = {p} must lie in [1, n)")));
    }
    let sel = select_neighborhood(spec, &leading(p), lambda_bar)?;
    let r = sel.r;
    let dp = spec.eigenvalues[p - 1] - spec.eigenvalues[p];
    let di = internal_gap(r, q.x, q.w, lambda_bar);
    let sr = (r as f64).sqrt();
    let eig_bound = 12.0 * (q.e_norm / lambda_bar + sr * q.x / dp + sr * q.y / dp);
    let hyps = vec![
        at_least("lambda_bar >= 12|E|", lambda_bar, 12.0 * q.e_norm),
        at_least("delta_p >= delta", dp, di),
        below("eigenspace bound < 1", eig_bound, 1.0),
    ];
    Ok(ShiftCertificate::new(p - 1, Direction::Lower, r, di, hyps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperForm {
    /// Caller-chosen λ̄ ≥ 24‖E‖.
    Neighborhood,
    /// λ̄ = λ₁/2 with λ₁ ≥ 48‖E‖, w replaced by ‖E‖.
    HalfTop,
}

/// Certificate for `λ̃₁ − λ₁`. `q` must be measured on `N_λ̄({1})`.
pub fn upper_eigen_shift(spec: &Spectrum, q: &NoiseQuantities, lambda_bar: f64, form: UpperForm) -> Result<ShiftCertificate> {
    let l1 = spec.eigenvalues[0];
    match form {
        UpperForm::Neighborhood => {
            let sel = select_neighborhood(spec, &[0], lambda_bar)?;
            let di = internal_gap(sel.r, q.x, q.w, lambda_bar);
            let hyps = vec![at_least("lambda_bar >= 24|E|", lambda_bar, 24.0 * q.e_norm)];
            Ok(ShiftCertificate::new(0, Direction::Upper, sel.r, di, hyps))
        }
        UpperForm::HalfTop => {
            if !(l1 > 0.0) {
                return Err(Error::NegativeSpike(l1));
            }
            let sel = select_neighborhood(spec, &[0], l1 / 2.0)?;
            let r = sel.r as f64;
            let di = (12.0 * r * q.x).max(144.0 * r * q.e_norm * q.e_norm / l1);
            let hyps = vec![at_least("lambda_1 >= 48|E|", l1, 48.0 * q.e_norm)];
            Ok(ShiftCertificate::new(0, Direction::Upper, sel.r, di, hyps))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularFloor {
    pub t: f64,
    /// Indices of eigenvalues with |λ| ≤ T.
    pub lambda_t: Vec<usize>,
    pub r_t: usize,
    pub x_t: f64,
    pub sigma_min: f64,
    pub e_norm: f64,
    /// `48(‖E‖/T + r x/σ_min + r‖E‖²/(Tσ_min))`.
    pub lhs: f64,
    pub guaranteed: bool,
}

pub fn least_singular_floor(spec: &Spectrum, e: &SymMatrix, t: f64) -> Result<SingularFloor> {
    if !(t > 0.0) {
        return Err(Error::PreconditionFailed(format!("T = {t} must be positive")));
    }
    let sigma_min = spec.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if sigma_min == 0.0 {
        return Err(Error::SingularInput);
    }
    let lambda_t: Vec<usize> = (0..spec.n()).filter(|&i| spec.eigenvalues[i].abs() <= t).collect();
    let x_t = if lambda_t.is_empty() {
        0.0
    } else {
        let ut = spec.columns(&lambda_t);
        let g = ut.transpose() * (e.as_matrix() * &ut);
        g.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    };
    let e_norm = e.norm()?;
    let r = lambda_t.len() as f64;
    let lhs = 48.0 * (e_norm / t + r * x_t / sigma_min + r * e_norm * e_norm / (t * sigma_min));
    Ok(SingularFloor { t, r_t: lambda_t.len(), lambda_t, x_t, sigma_min, e_norm, lhs, guaranteed: lhs < 1.0 })
}

/// Append a zero row and column.
pub fn augment_zero(a: &SymMatrix) -> SymMatrix {
    let n = a.n();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(a.as_matrix());
    SymMatrix::symmetrized(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionGuard {
    /// Upper bound on κ(Ã)/κ(A).
    pub kappa_ratio_bound: f64,
    pub sigma_max: f64,
    pub floor_guaranteed: bool,
    pub slack_ok: bool,
    pub valid: bool,
}

/// κ(Ã)/κ(A) ≤ (1 + ‖E‖/σ_max) / max(1/2, 1 − ‖E‖/σ_min) once the floor holds.
/// The certificate additionally requires σ_max ≥ 10‖E‖.
pub fn condition_guard(spec: &Spectrum, e: &SymMatrix, t: f64) -> Result<ConditionGuard> {
    let floor = least_singular_floor(spec, e, t)?;
    let sigma_max = spec.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let en = floor.e_norm;
    let weyl = 1.0 - en / floor.sigma_min;
    let denom = if floor.guaranteed { weyl.max(0.5) } else { weyl };
    let kappa_ratio_bound = if denom > 0.0 { (1.0 + en / sigma_max) / denom } else { f64::INFINITY };
    let slack_ok = sigma_max >= 10.0 * en;
    Ok(ConditionGuard {
        kappa_ratio_bound,
        sigma_max,
        floor_guaranteed: floor.guaranteed,
        slack_ok,
        valid: floor.guaranteed && slack_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierPrediction {
    /// `n/λ`.
    pub prediction: f64,
    /// `n/λ + x`, constant-free.
    pub correction_bound: f64,
    /// λ ≥ 48√n.
    pub wigner_regime: bool,
    /// λ ≥ 24‖E‖.
    pub general_regime: bool,
}

pub fn dw_outlier(lambda: f64, n: usize, x: f64, e_norm: f64) -> OutlierPrediction {
    let nf = n as f64;
    OutlierPrediction {
        prediction: nf / lambda,
        correction_bound: nf / lambda + x,
        wigner_regime: lambda >= 48.0 * nf.sqrt(),
        general_regime: lambda >= 24.0 * e_norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::decompose_symmetric;

    #[test]
    fn zero_noise_certificates() {
        let spec = decompose_symmetric(&SymMatrix::from_diagonal(&[10.0, 3.0, 1.0]).unwrap()).unwrap();
        let q = NoiseQuantities { x: 0.0, y: 0.0, w: 0.0, e_norm: 0.0 };
        let lo = lower_eigen_shift(&spec, &q, 1, 5.0).unwrap();
        assert!(lo.valid);
        assert_eq!(lo.bound, 0.0);
        let up = upper_eigen_shift(&spec, &q, 5.0, UpperForm::Neighborhood).unwrap();
        assert_eq!(up.bound, 0.0);
        assert_eq!(up.bound, up.delta_internal / 2.0);
    }

    #[test]
    fn floor_and_guard_at_zero_noise() {
        let spec = decompose_symmetric(&SymMatrix::from_diagonal(&[10.0, -3.0, 1.0]).unwrap()).unwrap();
        let e = SymMatrix::zeros(3).unwrap();
        let f = least_singular_floor(&spec, &e, 2.0).unwrap();
        assert_eq!(f.lhs, 0.0);
        assert!(f.guaranteed);
        assert_eq!(f.lambda_t, vec![1]);
        let g = condition_guard(&spec, &e, 2.0).unwrap();
        assert_eq!(g.kappa_ratio_bound, 1.0);
    }

    #[test]
    fn guard_rejects_large_noise() {
        let spec = decompose_symmetric(&SymMatrix::from_diagonal(&[1.0, 0.5]).unwrap()).unwrap();
        let e = SymMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        let g = condition_guard(&spec, &e, 0.7).unwrap();
        assert!(!g.valid);
    }

    #[test]
    fn singular_input_rejected() {
        let spec = decompose_symmetric(&SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap()).unwrap();
        let e = SymMatrix::zeros(2).unwrap();
        assert!(matches!(least_singular_floor(&spec, &e, 1.0), Err(Error::SingularInput)));
    }

    #[test]
    fn outlier_prediction() {
        let o = dw_outlier(100.0, 100, 0.5, 20.0);
        assert_eq!(o.prediction, 1.0);
        assert_eq!(o.correction_bound, 1.5);
    }
}
