//! Assumption checks and eigenspace perturbation bounds.
//!
//! Every bound is reported even when its assumption fails (`valid = false`),
//! so sweeps can chart where a guarantee stops applying. Comparator bounds
//! from the literature are reported without their hidden O(·) constants.

use crate::error::{Error, Result};
use crate::skewness::{GapReport, Selection, SkewnessReport};
use crate::spectral::{Spectrum, SymMatrix};
use serde::{Deserialize, Serialize};

pub const ASSUMPTION_LEVEL: f64 = 1.0 / 12.0;
const LEVEL_SLACK: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssumptionKind {
    C0,
    D0,
    C1,
    D1,
    C2,
    C3,
    #[serde(rename = "C3'")]
    C3Prime,
}

/// Inputs for `check_assumption`. Only the fields used by the requested kind
/// need to be set; for C1/D1 `lambda_bar` carries σ̄ and the gaps are singular gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AssumptionInputs {
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub e_norm: Option<f64>,
    pub lambda_bar: Option<f64>,
    pub delta_s: Option<f64>,
    pub delta: Option<f64>,
    pub x: Option<f64>,
    pub w: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub eta: Option<f64>,
    pub t1: Option<f64>,
    /// `λ_p − λ_{r+1}`.
    pub spike_gap: Option<f64>,
    pub lambda1: Option<f64>,
    pub delta_paren_p: Option<f64>,
    pub delta_p: Option<f64>,
    pub n_samples: Option<f64>,
}

impl AssumptionInputs {
    /// Fields for C0/D0 (or C1/D1) from measured quantities; `delta` is the contour margin.
    pub fn from_report(sk: &SkewnessReport, gap: f64, delta: f64) -> Self {
        Self {
            p: Some(sk.p as f64),
            r: Some(sk.r as f64),
            e_norm: Some(sk.e_norm),
            lambda_bar: Some(sk.lambda_bar),
            delta_s: Some(gap),
            delta: Some(delta),
            x: Some(sk.x),
            w: Some(sk.w),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionVerdict {
    pub kind: AssumptionKind,
    pub terms: Vec<NamedValue>,
    pub max_ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

fn nv(name: &str, value: f64) -> NamedValue {
    NamedValue { name: name.to_string(), value }
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::IncompleteInput(name.to_string()))
}

fn positive(v: f64, name: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::PreconditionFailed(format!("{name} must be positive, found {v}")))
    }
}

/// `a / b` where a zero numerator wins over a zero denominator.
fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn check_assumption(kind: AssumptionKind, inp: &AssumptionInputs) -> Result<AssumptionVerdict> {
    use AssumptionKind::*;
    let terms = match kind {
        C0 | D0 | C1 | D1 => {
            let p = need(inp.p, "p")?;
            let r = need(inp.r, "r")?;
            let en = need(inp.e_norm, "E_norm")?;
            let lb = positive(need(inp.lambda_bar, "lambda_bar")?, "lambda_bar")?;
            let g = match kind {
                C0 | C1 => positive(need(inp.delta_s, "delta_S")?, "delta_S")?,
                _ => positive(need(inp.delta, "delta")?, "delta")?,
            };
            let x = need(inp.x, "x")?;
            let w = need(inp.w, "w")?;
            vec![
                nv("noise", p.sqrt() * en / lb),
                nv("x", ratio(r * x, g)),
                nv("w", ratio(r.sqrt() * w, (lb * g).sqrt())),
            ]
        }
        C2 => {
            let p = need(inp.p, "p")?;
            let r = need(inp.r, "r")?;
            let e1 = need(inp.eps1, "eps1")?;
            let e2 = need(inp.eps2, "eps2")?;
            let eta = need(inp.eta, "eta")?;
            let t1 = need(inp.t1, "t1")?;
            vec![nv("eps1", p.sqrt() * e1), nv("t1_eps2", r * t1 * e2), nv("eta", (r * eta).sqrt())]
        }
        C3 | C3Prime => {
            let p = need(inp.p, "p")?;
            let r = need(inp.r, "r")?;
            let en = need(inp.e_norm, "E_norm")?;
            let sg = positive(need(inp.spike_gap, "spike_gap")?, "spike_gap")?;
            let l1 = need(inp.lambda1, "lambda1")?;
            let n = positive(need(inp.n_samples, "n_samples")?, "n_samples")?;
            let g = if kind == C3 {
                positive(need(inp.delta_paren_p, "delta_paren_p")?, "delta_paren_p")?
            } else {
                positive(need(inp.delta_p, "delta_p")?, "delta_p")?
            };
            vec![
                nv("noise", p.sqrt() * en / sg),
                nv("spike", r * l1 / (g * n.sqrt())),
                nv("mixed", ratio(r.sqrt() * en, (sg * g).sqrt())),
            ]
        }
    };
    let max_ratio = terms.iter().map(|t| t.value).fold(0.0, f64::max);
    Ok(AssumptionVerdict { kind, terms, holds: max_ratio <= ASSUMPTION_LEVEL + LEVEL_SLACK, max_ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub method: String,
    pub value: f64,
    pub terms: Vec<NamedValue>,
    pub assumption: Option<AssumptionVerdict>,
    pub valid: bool,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl BoundReport {
    fn from_terms(method: &str, terms: Vec<NamedValue>, assumption: Option<AssumptionVerdict>) -> Self {
        let value: f64 = terms.iter().map(|t| t.value).sum();
        let holds = assumption.as_ref().map_or(true, |a| a.holds);
        Self {
            method: method.to_string(),
            value,
            valid: holds && value.is_finite(),
            terms,
            assumption,
            flags: Vec::new(),
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    /// Name of the largest term.
    pub fn dominant_term(&self) -> Option<&str> {
        self.terms
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .map(|t| t.name.as_str())
    }
}

/// Weyl's eigenvalue bound and the Davis–Kahan sin θ bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBounds {
    pub weyl: f64,
    pub davis_kahan: f64,
}

pub fn classical_bounds(e_norm: f64, delta_s: f64) -> Result<ClassicalBounds> {
    if !(delta_s > 0.0) {
        return Err(Error::DegenerateGap(format!("δ = {delta_s}")));
    }
    Ok(ClassicalBounds { weyl: e_norm, davis_kahan: 2.0 * e_norm / delta_s })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenspaceMode {
    /// S = {1..p}; gap δ_p, assumption C0.
    LeadingP,
    /// S = top-p singular indices; gap δ̄_p, valid only when the bound is below 1.
    SingularP,
    /// Arbitrary S; assumption D0 with the contour margin, gap δ_S in the bound.
    GeneralS,
}

fn opt_gap(v: Option<f64>, name: &str) -> Result<f64> {
    match v {
        Some(g) if g > 0.0 => Ok(g),
        Some(_) => Err(Error::DegenerateGap(format!("{name} = 0"))),
        None => Err(Error::IncompleteInput(name.to_string())),
    }
}

/// `12√p(‖E‖/λ̄ + √r x/g + √r y/g)`.
pub fn eigenspace_bound(
    mode: EigenspaceMode,
    sk: &SkewnessReport,
    sel: &Selection,
    gaps: &GapReport,
) -> Result<BoundReport> {
    let (g, verdict, method) = match mode {
        EigenspaceMode::LeadingP => {
            let g = opt_gap(gaps.delta_p, "delta_p")?;
            let v = check_assumption(AssumptionKind::C0, &AssumptionInputs::from_report(sk, g, g))?;
            (g, v, "leading_p")
        }
        EigenspaceMode::SingularP => {
            let g = opt_gap(gaps.delta_bar_p, "delta_bar_p")?;
            let v = check_assumption(AssumptionKind::C0, &AssumptionInputs::from_report(sk, g, g))?;
            (g, v, "singular_p")
        }
        EigenspaceMode::GeneralS => {
            let g = opt_gap(Some(gaps.delta_s), "delta_S")?;
            let v = check_assumption(AssumptionKind::D0, &AssumptionInputs::from_report(sk, g, gaps.delta))?;
            (g, v, "general_s")
        }
    };
    let c = 12.0 * (sel.p as f64).sqrt();
    let sr = (sel.r as f64).sqrt();
    let terms = vec![
        nv("noise_term", c * sk.e_norm / sel.lambda_bar),
        nv("x_term", c * sr * sk.x / g),
        nv("y_term", c * sr * sk.y / g),
    ];
    let mut rep = BoundReport::from_terms(method, terms, Some(verdict));
    if mode == EigenspaceMode::SingularP && rep.value >= 1.0 {
        rep.valid = false;
        rep.flags.push("rhs_not_below_one".into());
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YVariant {
    Trivial,
    SpectralSum,
    LowRank,
}

/// Bounds that replace y by a computable surrogate. S = {1..p}.
pub fn y_variant_bounds(
    variant: YVariant,
    sk: &SkewnessReport,
    sel: &Selection,
    gaps: &GapReport,
    spec: &Spectrum,
) -> Result<BoundReport> {
    let dp = opt_gap(gaps.delta_p, "delta_p")?;
    let p = sel.p;
    let c = 12.0 * (p as f64).sqrt();
    let r = sel.r as f64;
    let sr = r.sqrt();
    let verdict = check_assumption(AssumptionKind::C0, &AssumptionInputs::from_report(sk, dp, dp))?;
    let lp = spec.eigenvalues[p - 1];
    let terms = match variant {
        YVariant::Trivial => vec![
            nv("noise_term", c * sk.e_norm / sel.lambda_bar),
            nv("x_term", c * sr * sk.x / dp),
            nv("y_term", c * sr * sk.e_norm * sk.e_norm / (dp * sel.lambda_bar)),
        ],
        YVariant::SpectralSum => {
            let mut tail = 0.0;
            for &l in &spec.eigenvalues[sel.r..] {
                let d = lp - l;
                if !(d > 0.0) {
                    return Err(Error::DegenerateGap(format!("λ_p − λ_l = {d} for l > r")));
                }
                tail += 1.0 / d;
            }
            vec![
                nv("noise_term", c * sk.e_norm / sel.lambda_bar),
                nv("x_term", c * sr * sk.x / dp),
                nv("y_term", c * sr * sk.xbar * sk.xbar / dp * tail),
            ]
        }
        YVariant::LowRank => {
            if !(lp > 0.0) {
                return Err(Error::NegativeSpike(lp));
            }
            let sigma = positive(sk.sigma, "sigma")?;
            vec![
                nv("noise_term", c * sk.e_norm / lp),
                nv("x_term", c * sr * sk.x / dp),
                nv("ybar_term", c * sr * sk.ybar / (dp * sigma)),
                nv("x2_term", c * r.powf(1.5) * sk.x * sk.x / (dp * sigma)),
            ]
        }
    };
    let name = match variant {
        YVariant::Trivial => "trivial",
        YVariant::SpectralSum => "spectral_sum",
        YVariant::LowRank => "low_rank",
    };
    Ok(BoundReport::from_terms(name, terms, Some(verdict)))
}

/// `12√(2p)(‖E‖/σ̄ + (√r x + √r y)/δ_S)`, valid for both the left and right singular spaces.
pub fn rectangular_bound(sk: &SkewnessReport, sel: &Selection, gaps: &GapReport) -> Result<BoundReport> {
    let g = opt_gap(Some(gaps.delta_s), "delta_S")?;
    let verdict = check_assumption(AssumptionKind::D1, &AssumptionInputs::from_report(sk, g, gaps.delta))?;
    let c = 12.0 * (2.0 * sel.p as f64).sqrt();
    let sr = (sel.r as f64).sqrt();
    let terms = vec![
        nv("noise_term", c * sk.e_norm / sel.lambda_bar),
        nv("x_term", c * sr * sk.x / g),
        nv("y_term", c * sr * sk.y / g),
    ];
    Ok(BoundReport::from_terms("rectangular", terms, Some(verdict)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    /// First-order expansion plus quadratic remainder.
    KL,
    /// Bootstrap-style bound with its own r.
    BT,
    /// Relative-perturbation bound for PSD matrices.
    JW,
}

fn constant_free(mut rep: BoundReport) -> BoundReport {
    rep.flags.push("constant-free".into());
    rep
}

/// Literature comparators for S = {1..p}, evaluated from the exact spectrum and noise.
pub fn comparator_bounds(method: Comparator, spec: &Spectrum, e: &SymMatrix, p: usize) -> Result<BoundReport> {
    let n = spec.n();
    if p == 0 || p >= n {
        return Err(Error::InvalidSelection(format!("p = {p} must lie in [1, n)")));
    }
    let lam = &spec.eigenvalues;
    let u = &spec.eigenvectors;
    let dp = lam[p - 1] - lam[p];
    let g = u.transpose() * (e.as_matrix() * u);
    match method {
        Comparator::KL => {
            let en = e.norm()?;
            if 2.0 * en > dp {
                return Err(Error::PreconditionFailed(format!("2‖E‖ = {} > δ_p = {dp}", 2.0 * en)));
            }
            let xbar = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let mut s = 0.0;
            for i in 0..p {
                for j in p..n {
                    s += 1.0 / (lam[i] - lam[j]);
                }
            }
            let terms = vec![nv("linear_term", xbar * s), nv("quadratic_term", (en / dp).powi(2))];
            Ok(constant_free(BoundReport::from_terms("KL", terms, None)))
        }
        Comparator::BT => {
            let en = e.norm()?;
            let lp = lam[p - 1].abs();
            if 4.0 * en > dp || dp > lp / 4.0 {
                return Err(Error::PreconditionFailed(format!(
                    "need 4‖E‖ ≤ δ_p ≤ |λ_p|/4, found ‖E‖ = {en}, δ_p = {dp}, |λ_p| = {lp}"
                )));
            }
            let r = bt_r(lam, p);
            let mut x = 0.0_f64;
            for i in 0..r {
                for j in 0..r {
                    x = x.max(g[(i, j)].abs());
                }
            }
            let sigma1 = lam.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let terms = vec![
                nv("noise_term", en / lp * (6.0 * sigma1 / dp).ln()),
                nv("x_term", (r * r) as f64 * x / dp),
            ];
            Ok(constant_free(BoundReport::from_terms("BT", terms, None)))
        }
        Comparator::JW => {
            let tol = 1e-12 * lam[0].abs().max(1.0);
            if lam[n - 1] < -tol {
                return Err(Error::PreconditionFailed(format!(
                    "A is not positive semidefinite (λ_n = {})",
                    lam[n - 1]
                )));
            }
            let mut x0 = 0.0_f64;
            for i in 0..n {
                for j in 0..n {
                    let num = g[(i, j)].abs();
                    if num > 0.0 {
                        let den = (lam[i] * lam[j]).max(0.0).sqrt();
                        x0 = x0.max(if den > 0.0 { num / den } else { f64::INFINITY });
                    }
                }
            }
            let rp = jw_rp(lam, p)?;
            if x0 > 0.0 && rp > 1.0 / (8.0 * x0) {
                return Err(Error::PreconditionFailed(format!("r_p = {rp} > 1/(8 x₀) = {}", 1.0 / (8.0 * x0))));
            }
            let mut s = 0.0;
            for i in 0..p {
                for j in p..n {
                    s += lam[i] * lam[j] / (lam[i] - lam[j]).powi(2);
                }
            }
            let terms = vec![nv("jw_term", ratio(x0, 1.0) * s.sqrt())];
            Ok(constant_free(BoundReport::from_terms("JW", terms, None)))
        }
    }
}

/// Smallest r ≥ p (1-based) with `|λ_p|/2 ≤ |λ_p − λ_{r+1}|`; n when none exists.
pub fn bt_r(lam: &[f64], p: usize) -> usize {
    let lp = lam[p - 1];
    (p..lam.len())
        .find(|&r| lp.abs() / 2.0 <= (lp - lam[r]).abs())
        .unwrap_or(lam.len())
}

/// `Σ_{i≤p} λᵢ / min_{j>p}|λᵢ−λⱼ| + Σ_{j>p} λⱼ / min_{i≤p}|λⱼ−λᵢ|`.
pub fn jw_rp(lam: &[f64], p: usize) -> Result<f64> {
    let n = lam.len();
    let mut rp = 0.0;
    for i in 0..p {
        let m = (p..n).map(|j| (lam[i] - lam[j]).abs()).fold(f64::INFINITY, f64::min);
        if m == 0.0 {
            return Err(Error::DegenerateGap("λ_i = λ_j across p".into()));
        }
        rp += lam[i] / m;
    }
    for j in p..n {
        let m = (0..p).map(|i| (lam[j] - lam[i]).abs()).fold(f64::INFINITY, f64::min);
        rp += lam[j] / m;
    }
    Ok(rp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    /// `h(i) = i^{−c}`.
    Polynomial,
    /// `h(i) = e^{−ci}`.
    Exponential,
    /// `h(i) = (log₂(i+1))^{−c}`, shifted so that h(1) = 1.
    Logarithmic,
}

impl Decay {
    /// `log h(i)` for 1-based i.
    pub fn log_h(self, i: usize, c: f64) -> f64 {
        let i = i as f64;
        match self {
            Decay::Polynomial => -c * i.ln(),
            Decay::Exponential => -c * i,
            Decay::Logarithmic => -c * ((i + 1.0).ln() / std::f64::consts::LN_2).ln(),
        }
    }
}

/// Both sides of the decay-profile comparison, as natural logs of the
/// (constant-free) values, for a spectrum `λᵢ = λ₁ h(i)` with Wigner-scale noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayComparison {
    pub log_jw: f64,
    pub log_tv: f64,
}

impl DecayComparison {
    /// JW-style value divided by the skewness-style value.
    pub fn advantage(&self) -> f64 {
        (self.log_jw - self.log_tv).exp()
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn decay_comparison(decay: Decay, c: f64, n: usize, p: usize, lambda1: f64) -> Result<DecayComparison> {
    if p == 0 || p >= n || !(c > 0.0) || !(lambda1 > 0.0) {
        return Err(Error::PreconditionFailed("need 1 ≤ p < n, c > 0, λ₁ > 0".into()));
    }
    let lh: Vec<f64> = (1..=n).map(|i| decay.log_h(i, c)).collect();
    // h(i)h(j)/(h(i)−h(j))² = t/(1−t)² with t = h(j)/h(i) ≤ 1.
    let mut logs = Vec::with_capacity(p * (n - p));
    for i in 0..p {
        for j in p..n {
            let lt = lh[j] - lh[i];
            logs.push(lt - 2.0 * (-lt.exp_m1()).ln());
        }
    }
    let log_jw = -lambda1.ln() - lh[n - 1] + 0.5 * log_sum_exp(&logs);
    let hp = lh[p - 1].exp();
    let gap = |l: usize| hp * -(lh[l] - lh[p - 1]).exp_m1();
    let first_gap = gap(p);
    let tail: f64 = (p..n).map(|l| 1.0 / (lambda1 * gap(l))).sum();
    let tv = (n as f64).sqrt() / lambda1 + 1.0 / (lambda1 * first_gap) + tail / (lambda1 * first_gap);
    Ok(DecayComparison { log_jw, log_tv: tv.ln() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikedModel {
    Johnstone,
    Byz,
}

/// Limiting eigenvector perturbation `‖ũ_pũ_pᵀ − u_pu_pᵀ‖` for a spiked covariance
/// model with aspect ratio `γ = d/n`; `h` lists the non-spike population eigenvalues.
pub fn spiked_limit(model: SpikedModel, lambda_p: f64, gamma: f64, h: &[f64]) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(0.0);
    }
    match model {
        SpikedModel::Johnstone => {
            let threshold = 1.0 + gamma.sqrt();
            if lambda_p <= threshold {
                return Err(Error::SubcriticalSpike { lambda: lambda_p, threshold });
            }
            let a = lambda_p - 1.0;
            Ok((lambda_p * gamma / (a * a + a * gamma)).sqrt())
        }
        SpikedModel::Byz => {
            if h.is_empty() {
                return Err(Error::IncompleteInput("non-spike eigenvalues".into()));
            }
            let m = h.len() as f64;
            let mut mean_phi = 0.0;
            let mut mean_dphi = 0.0;
            for &t in h {
                let d = lambda_p - t;
                if d == 0.0 {
                    return Err(Error::DegenerateGap(format!("λ_p = {t} is a bulk eigenvalue")));
                }
                mean_phi += t * lambda_p / d;
                mean_dphi += t * t / (d * d);
            }
            let phi = lambda_p + gamma * mean_phi / m;
            let dphi = 1.0 - gamma * mean_dphi / m;
            if !(dphi > 0.0) {
                return Err(Error::SubcriticalSpike { lambda: lambda_p, threshold: f64::NAN });
            }
            Ok((1.0 - lambda_p * dphi / phi).max(0.0).sqrt())
        }
    }
}

/// Regime for the (ε₁, ε₂, η) triple of the random-noise bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseRegime {
    /// r = rank(A): denominators use λ_p.
    LowRank,
    /// r from the neighborhood: denominators use λ_p − λ_{r+1}.
    HighRank,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTriple {
    pub eps1: f64,
    pub eps2: f64,
    pub eta: f64,
}

/// ε₁, ε₂, η for S = {1..p} (1-based p) with neighborhood size r.
pub fn epsilon_triple(regime: NoiseRegime, lam: &[f64], p: usize, r: usize, e_norm: f64) -> Result<EpsilonTriple> {
    if p == 0 || p >= lam.len() || r < p {
        return Err(Error::InvalidSelection("need 1 ≤ p ≤ r and p < n".into()));
    }
    let dp = positive(lam[p - 1] - lam[p], "delta_p")?;
    let base = match regime {
        NoiseRegime::LowRank => lam[p - 1],
        NoiseRegime::HighRank => lam[p - 1] - lam.get(r).copied().unwrap_or(0.0),
    };
    let base = positive(base, "spike denominator")?;
    Ok(EpsilonTriple { eps1: e_norm / base, eps2: 1.0 / dp, eta: e_norm * e_norm / (base * dp) })
}

pub fn c2_inputs(p: usize, r: usize, eps: EpsilonTriple, t1: f64) -> AssumptionInputs {
    AssumptionInputs {
        p: Some(p as f64),
        r: Some(r as f64),
        eps1: Some(eps.eps1),
        eps2: Some(eps.eps2),
        eta: Some(eps.eta),
        t1: Some(t1),
        ..Default::default()
    }
}

/// `12√p(ε₁ + √r t₁ε₂ + √r(t₂+μ)ε₁ε₂/‖E‖)` under C2.
#[allow(clippy::too_many_arguments)]
pub fn random_noise_bound(p: usize, r: usize, eps: EpsilonTriple, t1: f64, t2: f64, mu: f64, e_norm: f64) -> Result<BoundReport> {
    let verdict = check_assumption(AssumptionKind::C2, &c2_inputs(p, r, eps, t1))?;
    let c = 12.0 * (p as f64).sqrt();
    let sr = (r as f64).sqrt();
    let terms = vec![
        nv("noise_term", c * eps.eps1),
        nv("x_term", c * sr * t1 * eps.eps2),
        nv("y_term", c * sr * (t2 + mu) * ratio(eps.eps1 * eps.eps2, e_norm)),
    ];
    Ok(BoundReport::from_terms("random_noise", terms, Some(verdict)))
}

fn bernstein_tail(t: f64, sigma: f64, k: f64) -> f64 {
    (-(t * t / 2.0) / (2.0 * sigma * sigma + k * t)).exp()
}

/// Failure probability of the low-rank random bound.
pub fn low_rank_failure_probability(r: usize, t1: f64, sigma: f64, k: f64, n: usize, m4: f64, t2: f64) -> f64 {
    let r = r as f64;
    let p = r * r * bernstein_tail(t1, sigma, k) + 5.0 * r * (r - 1.0) * n as f64 * m4 / (2.0 * t2 * t2);
    p.clamp(0.0, 1.0)
}

/// Failure probability of the high-rank random bound.
#[allow(clippy::too_many_arguments)]
pub fn high_rank_failure_probability(r: usize, p: usize, n: usize, sigma: f64, k: f64, t1: f64, t2: f64) -> f64 {
    let r = r as f64;
    let s2 = sigma * sigma;
    let v = r * r * bernstein_tail(t1, sigma, k) + 6.0 * r * (r - 1.0) * p as f64 * n as f64 * s2 * (s2 + k * k) / (t2 * t2);
    v.clamp(0.0, 1.0)
}

/// `(t₁, t₂)` giving confidence 1 − α for the regular-noise bound.
pub fn confidence_parameters(sigma: f64, k: f64, r: usize, alpha: f64, n: usize, m4: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::PreconditionFailed(format!("α = {alpha} must lie in (0, 1)")));
    }
    let t1 = 4.0 * (sigma + k) * (r as f64 / alpha).ln().max(0.0).sqrt();
    let t2 = 5.0 * r as f64 * (n as f64 * m4).sqrt();
    Ok((t1, t2))
}

/// Extra term `c_r d / (δ_(p) n)` of the unstructured spiked bound.
pub fn spiked_correction(c_r: f64, d: usize, delta_paren_p: f64, n: usize) -> Result<f64> {
    let g = positive(delta_paren_p, "delta_paren_p")?;
    Ok(c_r * d as f64 / (g * n as f64))
}

/// Inputs of the general spiked covariance bound; `lam` is the population spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikedBoundInputs {
    pub lam: Vec<f64>,
    pub p: usize,
    pub r: usize,
    pub e_norm: f64,
    pub n_samples: usize,
    pub t1: f64,
    pub t2: f64,
    pub c_r: f64,
}

/// Spiked covariance bound with its universal constant set to 1.
pub fn spiked_bound(inp: &SpikedBoundInputs) -> Result<BoundReport> {
    let lam = &inp.lam;
    let (p, r) = (inp.p, inp.r);
    if p == 0 || r < p || r >= lam.len() {
        return Err(Error::InvalidSelection("need 1 ≤ p ≤ r < d".into()));
    }
    let sg = positive(lam[p - 1] - lam[r], "spike_gap")?;
    let dp = lam[p - 1] - lam[p];
    let dpp = if p >= 2 { (lam[p - 2] - lam[p - 1]).min(dp) } else { dp };
    let dpp = positive(dpp, "delta_paren_p")?;
    let n = inp.n_samples as f64;
    let l12 = (lam[0] * lam.get(1).copied().unwrap_or(0.0)).max(0.0).sqrt();
    let tail_sq: f64 = lam[r..].iter().map(|l| l * l).sum();
    let tail: f64 = lam[r..].iter().sum();
    let c = (p as f64).sqrt();
    let sr = (r as f64).sqrt();
    let terms = vec![
        nv("noise_term", c * inp.e_norm / sg),
        nv("x_term", c * sr / dpp * lam[0] * inp.t1 / n.sqrt()),
        nv("y_term", c * sr * l12 * inp.t2 / (dpp * n) * tail_sq.sqrt() / sg),
        nv("kurtosis_term", c * sr / dpp * tail / sg * inp.c_r * l12 * inp.t2 / n),
    ];
    let verdict = check_assumption(
        AssumptionKind::C3,
        &AssumptionInputs {
            p: Some(p as f64),
            r: Some(r as f64),
            e_norm: Some(inp.e_norm),
            spike_gap: Some(sg),
            lambda1: Some(lam[0]),
            delta_paren_p: Some(dpp),
            n_samples: Some(n),
            ..Default::default()
        },
    )?;
    Ok(constant_free(BoundReport::from_terms("spiked", terms, Some(verdict))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(x: f64, y: f64, w: f64, e: f64, p: usize, r: usize, lb: f64) -> SkewnessReport {
        SkewnessReport { x, y, w, xbar: x, ybar: 0.0, sigma: 1.0, e_norm: e, p, r, lambda_bar: lb, delta_s: 1.0 }
    }

    #[test]
    fn zero_noise_assumption_holds() {
        let sk = report(0.0, 0.0, 0.0, 0.0, 1, 2, 5.0);
        let v = check_assumption(AssumptionKind::C0, &AssumptionInputs::from_report(&sk, 1.0, 1.0)).unwrap();
        assert_eq!(v.max_ratio, 0.0);
        assert!(v.holds);
    }

    #[test]
    fn c0_w_term_decides() {
        let lb = 24.0;
        let ds = 48.0;
        let en = lb / 24.0;
        let inp = AssumptionInputs {
            p: Some(1.0),
            r: Some(2.0),
            e_norm: Some(en),
            lambda_bar: Some(lb),
            delta_s: Some(ds),
            x: Some(ds / 48.0),
            w: Some(en),
            ..Default::default()
        };
        let v = check_assumption(AssumptionKind::C0, &inp).unwrap();
        let wt = 2f64.sqrt() * en / (lb * ds).sqrt();
        assert_eq!(v.terms[2].value, wt);
        assert_eq!(v.holds, wt.max(1.0 / 24.0).max(2.0 / 48.0) <= 1.0 / 12.0);
    }

    #[test]
    fn missing_field_is_reported() {
        let err = check_assumption(AssumptionKind::C2, &AssumptionInputs::default()).unwrap_err();
        assert!(matches!(err, Error::IncompleteInput(_)));
    }

    #[test]
    fn classical_examples() {
        let eps = 0.01;
        let c = classical_bounds(5.0 * eps, eps).unwrap();
        assert!((c.davis_kahan - 10.0).abs() < 1e-12);
        assert_eq!(classical_bounds(0.0, 1.0).unwrap().davis_kahan, 0.0);
        assert_eq!(classical_bounds(1.0, 4.0).unwrap().davis_kahan, 0.5);
        assert!(matches!(classical_bounds(1.0, 0.0), Err(Error::DegenerateGap(_))));
    }

    #[test]
    fn johnstone_examples() {
        let v = spiked_limit(SpikedModel::Johnstone, 9.0, 1.0, &[]).unwrap();
        assert!((v - (9.0f64 / 72.0).sqrt()).abs() < 1e-15);
        assert_eq!(spiked_limit(SpikedModel::Johnstone, 9.0, 0.0, &[]).unwrap(), 0.0);
        assert!(matches!(
            spiked_limit(SpikedModel::Johnstone, 1.5, 1.0, &[]),
            Err(Error::SubcriticalSpike { .. })
        ));
        let byz = spiked_limit(SpikedModel::Byz, 9.0, 1.0, &[1.0; 50]).unwrap();
        assert!((byz - v).abs() < 1e-14);
        assert!(matches!(spiked_limit(SpikedModel::Byz, 1.0, 1.0, &[1.0]), Err(Error::DegenerateGap(_))));
    }

    #[test]
    fn terms_sum_to_value() {
        let sk = report(0.3, 0.2, 0.5, 1.0, 2, 3, 30.0);
        let sel = Selection { s: vec![0, 1], lambda_bar: 30.0, n_set: vec![0, 1, 2], p: 2, r: 3 };
        let gaps = GapReport { delta_s: 10.0, delta_p: Some(10.0), delta_paren_p: Some(10.0), delta_bar_p: Some(10.0), delta: 10.0 };
        let b = eigenspace_bound(EigenspaceMode::LeadingP, &sk, &sel, &gaps).unwrap();
        let s: f64 = b.terms.iter().map(|t| t.value).sum();
        assert_eq!(s, b.value);
    }

    #[test]
    fn log_decay_is_normalized() {
        assert_eq!(Decay::Logarithmic.log_h(1, 2.0), 0.0);
        assert_eq!(Decay::Polynomial.log_h(1, 2.0), 0.0);
    }
}
