//! Seeded generators for the noise and signal models, and plug-in evaluators
//! for the tail and norm estimates used by the random-noise theorems.
//!
//! Every generator is a pure function of its spec: row `i` of a noise matrix
//! draws from its own stream `child_seed(seed, i)`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{child_seed, rng_from_seed, TrialRng};
use crate::spectral::SymMatrix;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const ROW_SUM_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum EntryDist {
    Gaussian,
    Rademacher,
    /// Uniform on `[−k, k]`.
    BoundedUniform { k: f64 },
}

impl EntryDist {
    pub fn sample(self, rng: &mut TrialRng) -> f64 {
        match self {
            EntryDist::Gaussian => rng.sample(StandardNormal),
            EntryDist::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDist::BoundedUniform { k } => rng.gen_range(-k..=k),
        }
    }

    pub fn variance(self) -> f64 {
        match self {
            EntryDist::Gaussian | EntryDist::Rademacher => 1.0,
            EntryDist::BoundedUniform { k } => k * k / 3.0,
        }
    }

    /// `E y⁴ − 3` of the standardized variable.
    pub fn excess_kurtosis(self) -> f64 {
        match self {
            EntryDist::Gaussian => 0.0,
            EntryDist::Rademacher => -2.0,
            EntryDist::BoundedUniform { .. } => -1.2,
        }
    }

    /// Almost-sure bound on |entry|, if any.
    pub fn bound(self) -> Option<f64> {
        match self {
            EntryDist::Gaussian => None,
            EntryDist::Rademacher => Some(1.0),
            EntryDist::BoundedUniform { k } => Some(k),
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            EntryDist::BoundedUniform { k } if !(k > 0.0 && k.is_finite()) => {
                Err(Error::ProfileError(format!("uniform bound {k} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Wigner,
    GeneralizedWigner,
    Regular,
    KBounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub entry_dist: EntryDist,
    /// Per-entry variance multipliers σᵢⱼ²; required for generalized Wigner and regular kinds.
    #[serde(default)]
    pub variance_profile: Option<Vec<Vec<f64>>>,
    /// Declared comparability constant C for generalized Wigner profiles.
    #[serde(default)]
    pub comparability: Option<f64>,
    /// Clip entries to `[−K, K]`.
    #[serde(default)]
    pub truncation: Option<f64>,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn wigner(n: usize, entry_dist: EntryDist, seed: u64) -> Self {
        Self {
            kind: EnsembleKind::Wigner,
            n,
            entry_dist,
            variance_profile: None,
            comparability: None,
            truncation: None,
            seed,
        }
    }

    /// Entry bound K, if entries are bounded.
    pub fn entry_bound(&self) -> Option<f64> {
        let base = self.entry_dist.bound();
        let prof = self.max_multiplier().sqrt();
        match (base, self.truncation) {
            (Some(b), Some(t)) => Some(prof * b.min(t)),
            (Some(b), None) => Some(prof * b),
            (None, Some(t)) => Some(prof * t),
            (None, None) => None,
        }
    }

    fn max_multiplier(&self) -> f64 {
        match &self.variance_profile {
            Some(p) => p.iter().flatten().copied().fold(0.0, f64::max),
            None => 1.0,
        }
    }

    /// Largest off-diagonal entry variance σ².
    pub fn max_variance(&self) -> f64 {
        self.max_multiplier() * self.entry_dist.variance()
    }
}

fn row_sums(p: &[Vec<f64>]) -> Vec<f64> {
    p.iter().map(|r| r.iter().sum()).collect()
}

fn validate_profile(spec: &EnsembleSpec) -> Result<()> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::ProfileError("dimension must be at least 1".into()));
    }
    spec.entry_dist.validate()?;
    if let Some(t) = spec.truncation {
        if !(t > 0.0) {
            return Err(Error::ProfileError(format!("truncation level {t} must be positive")));
        }
    }
    let needs_profile = matches!(spec.kind, EnsembleKind::GeneralizedWigner | EnsembleKind::Regular);
    match (&spec.variance_profile, spec.kind) {
        (Some(_), EnsembleKind::Wigner) => {
            return Err(Error::ProfileError("the wigner kind takes no variance profile".into()))
        }
        (None, _) if needs_profile => return Err(Error::ProfileError("variance profile required".into())),
        _ => {}
    }
    if spec.kind == EnsembleKind::KBounded && spec.entry_bound().is_none() {
        return Err(Error::ProfileError("k_bounded needs bounded entries or a truncation level".into()));
    }
    let Some(p) = &spec.variance_profile else { return Ok(()) };
    if p.len() != n || p.iter().any(|r| r.len() != n) {
        return Err(Error::ProfileError(format!("profile must be {n}x{n}")));
    }
    for i in 0..n {
        for j in 0..n {
            let v = p[i][j];
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::ProfileError(format!("entry ({i},{j}) = {v} is not a variance")));
            }
            if v != p[j][i] {
                return Err(Error::ProfileError(format!("profile not symmetric at ({i},{j})")));
            }
        }
    }
    if needs_profile {
        let sums = row_sums(p);
        let hi = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
        if hi - lo > ROW_SUM_TOL * hi.max(1.0) {
            return Err(Error::ProfileError(format!("row sums range over [{lo}, {hi}]")));
        }
    }
    if spec.kind == EnsembleKind::GeneralizedWigner {
        let c = spec
            .comparability
            .ok_or_else(|| Error::ProfileError("generalized wigner needs a comparability constant".into()))?;
        let flat = p.iter().flatten().copied();
        let lo = flat.clone().fold(f64::INFINITY, f64::min);
        let hi = flat.fold(0.0, f64::max);
        if !(lo > 0.0) || hi / lo > c {
            return Err(Error::ProfileError(format!("variances not comparable within C = {c}")));
        }
    }
    Ok(())
}

/// Symmetric circulant profile `σᵢⱼ² = f((j − i) mod n)`, which has equal row sums.
pub fn circulant_profile(n: usize, f: impl Fn(usize) -> f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = (j + n - i) % n;
                    f(d.min(n - d))
                })
                .collect()
        })
        .collect()
}

pub fn gen_symmetric_noise(spec: &EnsembleSpec) -> Result<SymMatrix> {
    validate_profile(spec)?;
    let n = spec.n;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut rng = rng_from_seed(child_seed(spec.seed, i as u64));
        for j in i..n {
            let mut v = spec.entry_dist.sample(&mut rng);
            if let Some(t) = spec.truncation {
                v = v.clamp(-t, t);
            }
            let scale = match (&spec.variance_profile, spec.kind) {
                (Some(p), _) => p[i][j].sqrt(),
                (None, EnsembleKind::Wigner) if i == j => std::f64::consts::SQRT_2,
                (None, _) => 1.0,
            };
            m[(i, j)] = scale * v;
            m[(j, i)] = scale * v;
        }
    }
    Ok(SymMatrix::symmetrized(m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    DiagSpikes { spikes: Vec<f64> },
    RotatedLowRank { spikes: Vec<f64>, seed: u64 },
    /// Expectation matrix of a block model; `densities` is the k×k block table.
    Sbm { blocks: Vec<usize>, densities: Vec<Vec<f64>> },
}

/// Orthonormal n×k basis from the QR factor of a seeded Gaussian matrix.
pub fn random_orthonormal(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

pub fn gen_signal(kind: &SignalKind, n: usize) -> Result<SymMatrix> {
    match kind {
        SignalKind::DiagSpikes { spikes } => {
            if spikes.len() > n {
                return Err(Error::ShapeError(format!("{} spikes exceed n = {n}", spikes.len())));
            }
            let mut d = vec![0.0; n];
            d[..spikes.len()].copy_from_slice(spikes);
            SymMatrix::from_diagonal(&d)
        }
        SignalKind::RotatedLowRank { spikes, seed } => {
            let k = spikes.len();
            if k > n {
                return Err(Error::ShapeError(format!("{k} spikes exceed n = {n}")));
            }
            let q = random_orthonormal(n, k, *seed);
            let mut qd = q.clone();
            for (c, &l) in spikes.iter().enumerate() {
                qd.column_mut(c).scale_mut(l);
            }
            SymMatrix::new(&qd * q.transpose())
        }
        SignalKind::Sbm { blocks, densities } => {
            let k = blocks.len();
            if blocks.iter().sum::<usize>() != n {
                return Err(Error::ShapeError("block sizes must sum to n".into()));
            }
            if densities.len() != k || densities.iter().any(|r| r.len() != k) {
                return Err(Error::ShapeError(format!("density table must be {k}x{k}")));
            }
            let label: Vec<usize> = blocks.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat(b).take(s)).collect();
            SymMatrix::from_fn(n, |i, j| densities[label[i]][label[j]])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenCliques {
    /// Sum of clique indicator blocks `Σ 1_X 1_Xᵀ` (loops included).
    pub a_truth: SymMatrix,
    /// ±1 adjacency with the cliques planted.
    pub a_tilde: SymMatrix,
    /// Vertex lists, one per clique, each sorted.
    pub memberships: Vec<Vec<usize>>,
}

impl HiddenCliques {
    pub fn noise(&self) -> Result<SymMatrix> {
        self.a_tilde.sub(&self.a_truth)
    }
}

/// Plant disjoint cliques on seeded random vertex sets of a ±1 random graph.
pub fn gen_hidden_cliques(n: usize, clique_sizes: &[usize], seed: u64) -> Result<HiddenCliques> {
    if n == 0 {
        return Err(Error::LayoutError("n must be positive".into()));
    }
    let total: usize = clique_sizes.iter().sum();
    if total > n {
        return Err(Error::LayoutError(format!("cliques cover {total} vertices but n = {n}")));
    }
    if clique_sizes.contains(&0) {
        return Err(Error::LayoutError("clique sizes must be positive".into()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(child_seed(seed, 0x636c)));
    let mut label = vec![usize::MAX; n];
    let mut memberships = Vec::with_capacity(clique_sizes.len());
    let mut at = 0;
    for (c, &k) in clique_sizes.iter().enumerate() {
        let mut vs = perm[at..at + k].to_vec();
        vs.sort_unstable();
        for &v in &vs {
            label[v] = c;
        }
        memberships.push(vs);
        at += k;
    }
    let mut truth = DMatrix::zeros(n, n);
    let mut tilde = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut rng = rng_from_seed(child_seed(seed, i as u64 + 1));
        for j in i..n {
            let coin = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let same = label[i] != usize::MAX && label[i] == label[j];
            let (t, a) = if same { (1.0, 1.0) } else { (0.0, coin) };
            truth[(i, j)] = t;
            truth[(j, i)] = t;
            tilde[(i, j)] = a;
            tilde[(j, i)] = a;
        }
    }
    Ok(HiddenCliques {
        a_truth: SymMatrix::symmetrized(truth),
        a_tilde: SymMatrix::symmetrized(tilde),
        memberships,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikedModelSpec {
    /// Population covariance, row-major.
    pub m: Vec<Vec<f64>>,
    pub n_samples: usize,
    pub entry_dist: EntryDist,
    pub seed: u64,
}

impl SpikedModelSpec {
    pub fn diagonal(diag: &[f64], n_samples: usize, entry_dist: EntryDist, seed: u64) -> Self {
        let d = diag.len();
        let m = (0..d).map(|i| (0..d).map(|j| if i == j { diag[i] } else { 0.0 }).collect()).collect();
        Self { m, n_samples, entry_dist, seed }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikedSamples {
    /// d × n matrix whose columns are the samples Xᵢ.
    pub samples: DMatrix<f64>,
    pub m_tilde: SymMatrix,
    pub e: SymMatrix,
}

/// Spectral square root; eigenvalues in `[−tol‖M‖, 0)` are clipped to 0.
pub fn psd_sqrt(m: &SymMatrix) -> Result<DMatrix<f64>> {
    let a = m.as_matrix();
    let n = a.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0));
    if diagonal {
        let top = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = clip_root(a[(i, i)], top)?;
        }
        return Ok(out);
    }
    let (vals, vecs) = linalg::eigh(a)?;
    let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut scaled = vecs.clone();
    for (c, &v) in vals.iter().enumerate() {
        scaled.column_mut(c).scale_mut(clip_root(v, top)?);
    }
    Ok(&scaled * vecs.transpose())
}

fn clip_root(v: f64, top: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v.sqrt())
    } else if v >= -PSD_TOL * top {
        Ok(0.0)
    } else {
        Err(Error::NotPsd(v))
    }
}

/// Draw `Xᵢ = M^{1/2}Yᵢ` with iid standardized entries; returns the samples,
/// `M̃ = (1/n)Σ XᵢXᵢᵀ` and `E = M̃ − M`.
pub fn gen_spiked_samples(spec: &SpikedModelSpec) -> Result<SpikedSamples> {
    let d = spec.dim();
    if d == 0 || spec.m.iter().any(|r| r.len() != d) {
        return Err(Error::ShapeError("covariance must be square and non-empty".into()));
    }
    if spec.n_samples == 0 {
        return Err(Error::PreconditionFailed("need at least one sample".into()));
    }
    spec.entry_dist.validate()?;
    let m = SymMatrix::new(DMatrix::from_fn(d, d, |i, j| spec.m[i][j]))?;
    let root = psd_sqrt(&m)?;
    let n = spec.n_samples;
    let sd = spec.entry_dist.variance().sqrt();
    let mut y = DMatrix::zeros(d, n);
    for c in 0..n {
        let mut rng = rng_from_seed(child_seed(spec.seed, c as u64));
        for r in 0..d {
            y[(r, c)] = spec.entry_dist.sample(&mut rng) / sd;
        }
    }
    let is_diag = (0..d).all(|i| (0..d).all(|j| i == j || root[(i, j)] == 0.0));
    let x = if is_diag {
        let mut x = y;
        for r in 0..d {
            x.row_mut(r).scale_mut(root[(r, r)]);
        }
        x
    } else {
        &root * y
    };
    let m_tilde = SymMatrix::new((&x * x.transpose()) / n as f64)?;
    let e = m_tilde.sub(&m)?;
    Ok(SpikedSamples { samples: x, m_tilde, e })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// `P(|uᵀEv| ≥ t) ≤ exp(−(t²/2)/(2σ² + Kt))`.
    BernsteinUEv,
    /// `P(|G₁₂ − μ| ≥ t/(λ − λ_{r+1})) ≤ 6nσ²(σ² + K²)/t²`.
    ChebyshevG12,
    /// `P(|Eu₁·Eu₂ − μ| ≥ t) ≤ 5nm₄/t²`.
    ChebyshevEuEv,
    /// `P(‖E‖ ≥ t) ≤ (d + n)exp(−(t²n/2)/(V + 2Lt/3))`.
    MatrixBernstein,
    /// Norm estimate `(2 + max|Ey⁴ − 3|)(λ₁√(r_λ log(n+d)/n) + L log(n+d))`; not a probability.
    MatrixBernsteinSpiked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBoundQuery {
    pub kind: TailKind,
    pub parameters: BTreeMap<String, f64>,
}

impl TailBoundQuery {
    pub fn new(kind: TailKind, params: &[(&str, f64)]) -> Self {
        Self { kind, parameters: params.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }

    fn get(&self, name: &str) -> Result<f64> {
        let v = *self
            .parameters
            .get(name)
            .ok_or_else(|| Error::IncompleteInput(name.to_string()))?;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::PreconditionFailed(format!("{name} = {v} must be a finite nonnegative number")));
        }
        Ok(v)
    }

    fn get_pos(&self, name: &str) -> Result<f64> {
        let v = self.get(name)?;
        if v == 0.0 {
            return Err(Error::PreconditionFailed(format!("{name} must be positive")));
        }
        Ok(v)
    }
}

/// Plug-in evaluation. Probabilities are clamped to `[0, 1]`.
pub fn tail_bound(q: &TailBoundQuery) -> Result<f64> {
    let prob = |v: f64| v.clamp(0.0, 1.0);
    match q.kind {
        TailKind::BernsteinUEv => {
            let (t, s, k) = (q.get_pos("t")?, q.get("sigma")?, q.get("K")?);
            Ok(prob((-(t * t / 2.0) / (2.0 * s * s + k * t)).exp()))
        }
        TailKind::ChebyshevG12 => {
            let (t, s, k, n) = (q.get_pos("t")?, q.get("sigma")?, q.get("K")?, q.get("n")?);
            let s2 = s * s;
            Ok(prob(6.0 * n * s2 * (s2 + k * k) / (t * t)))
        }
        TailKind::ChebyshevEuEv => {
            let (t, n, m4) = (q.get_pos("t")?, q.get("n")?, q.get("m4")?);
            Ok(prob(5.0 * n * m4 / (t * t)))
        }
        TailKind::MatrixBernstein => {
            let (t, n, d) = (q.get_pos("t")?, q.get_pos("n")?, q.get("d")?);
            let (v, l) = (q.get("V")?, q.get("L")?);
            Ok(prob((d + n) * (-(t * t * n / 2.0) / (v + 2.0 * l * t / 3.0)).exp()))
        }
        TailKind::MatrixBernsteinSpiked => {
            let (n, d) = (q.get_pos("n")?, q.get("d")?);
            let (l1, rl, l, kx) = (q.get("lambda1")?, q.get("r_lambda")?, q.get("L")?, q.get("kurtosis_excess")?);
            let lg = (n + d).ln();
            Ok((2.0 + kx) * (l1 * (rl * lg / n).sqrt() + l * lg))
        }
    }
}

/// `μ = max_{k<l} |Σᵢ u_{ki}u_{li} Σⱼσⱼᵢ²|` over the columns of `u`.
pub fn profile_mu(u: &DMatrix<f64>, profile: &[Vec<f64>]) -> Result<f64> {
    let n = u.nrows();
    if profile.len() != n || profile.iter().any(|r| r.len() != n) {
        return Err(Error::ProfileError(format!("profile must be {n}x{n}")));
    }
    let col_sums: Vec<f64> = (0..n).map(|i| (0..n).map(|j| profile[j][i]).sum()).collect();
    let mut mu: f64 = 0.0;
    for k in 0..u.ncols() {
        for l in (k + 1)..u.ncols() {
            let s: f64 = (0..n).map(|i| u[(i, k)] * u[(i, l)] * col_sums[i]).sum();
            mu = mu.max(s.abs());
        }
    }
    Ok(mu)
}

/// `c_r = max_{i,j ≤ r; l,l' > r} |Σ_k (Ey_k⁴ − 3)u_{ik}u_{jk}u_{lk}u_{l'k}|` for the
/// eigenvector matrix `u` (columns ordered by eigenvalue, descending).
pub fn kurtosis_coupling(u: &DMatrix<f64>, excess: &[f64], r: usize) -> Result<f64> {
    let d = u.nrows();
    if excess.len() != d || u.ncols() != d || r == 0 || r >= d {
        return Err(Error::ShapeError("need a d×d basis, d excess values and 1 ≤ r < d".into()));
    }
    if excess.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let out = u.columns(r, d - r);
    let mut best: f64 = 0.0;
    for i in 0..r {
        for j in i..r {
            let w: Vec<f64> = (0..d).map(|k| excess[k] * u[(k, i)] * u[(k, j)]).collect();
            let mut weighted = out.clone_owned();
            for (k, wk) in w.iter().enumerate() {
                weighted.row_mut(k).scale_mut(*wk);
            }
            let g = out.transpose() * weighted;
            best = best.max(g.iter().fold(0.0, |a: f64, v| a.max(v.abs())));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{decompose_symmetric, eigenvalues_desc};

    #[test]
    fn noise_is_deterministic() {
        let spec = EnsembleSpec::wigner(30, EntryDist::Gaussian, 7);
        assert_eq!(gen_symmetric_noise(&spec).unwrap(), gen_symmetric_noise(&spec).unwrap());
        let other = EnsembleSpec { seed: 8, ..spec.clone() };
        assert_ne!(gen_symmetric_noise(&spec).unwrap(), gen_symmetric_noise(&other).unwrap());
    }

    #[test]
    fn regular_profile_has_equal_row_sums() {
        let n = 40;
        let prof = circulant_profile(n, |d| if d == 0 { 0.0 } else { 1.0 / (d * d) as f64 });
        let sums = row_sums(&prof);
        assert!(sums.iter().all(|s| (s - sums[0]).abs() < 1e-12));
        let spec = EnsembleSpec {
            kind: EnsembleKind::Regular,
            n,
            entry_dist: EntryDist::Rademacher,
            variance_profile: Some(prof.clone()),
            comparability: None,
            truncation: None,
            seed: 3,
        };
        let e = gen_symmetric_noise(&spec).unwrap();
        assert_eq!(e.get(0, 0), 0.0);
        let u = decompose_symmetric(&gen_signal(&SignalKind::RotatedLowRank { spikes: vec![3.0, 2.0, 1.0], seed: 1 }, n).unwrap())
            .unwrap()
            .columns(&[0, 1, 2]);
        assert!(profile_mu(&u, &prof).unwrap() < 1e-12);
    }

    #[test]
    fn profile_errors() {
        let mut spec = EnsembleSpec::wigner(3, EntryDist::Gaussian, 0);
        spec.kind = EnsembleKind::Regular;
        assert!(matches!(gen_symmetric_noise(&spec), Err(Error::ProfileError(_))));
        spec.variance_profile = Some(vec![vec![1.0, 2.0, 1.0], vec![2.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]]);
        assert!(matches!(gen_symmetric_noise(&spec), Err(Error::ProfileError(_))));
        spec.kind = EnsembleKind::KBounded;
        spec.variance_profile = None;
        assert!(matches!(gen_symmetric_noise(&spec), Err(Error::ProfileError(_))));
        spec.truncation = Some(2.0);
        let e = gen_symmetric_noise(&spec).unwrap();
        assert!(e.as_matrix().iter().all(|v| v.abs() <= 2.0));
    }

    #[test]
    fn generalized_wigner_checks_comparability() {
        let n = 10;
        let prof = circulant_profile(n, |d| if d % 2 == 0 { 1.0 } else { 2.0 });
        let mut spec = EnsembleSpec {
            kind: EnsembleKind::GeneralizedWigner,
            n,
            entry_dist: EntryDist::Gaussian,
            variance_profile: Some(prof),
            comparability: Some(1.5),
            truncation: None,
            seed: 1,
        };
        assert!(gen_symmetric_noise(&spec).is_err());
        spec.comparability = Some(2.0);
        assert!(gen_symmetric_noise(&spec).is_ok());
    }

    #[test]
    fn signals() {
        let a = gen_signal(&SignalKind::DiagSpikes { spikes: vec![10.0, 5.0] }, 100).unwrap();
        let v = eigenvalues_desc(&a).unwrap();
        assert_eq!((v[0], v[1], v[2]), (10.0, 5.0, 0.0));
        let spikes = vec![4.0, -2.5, 1.0];
        let b = gen_signal(&SignalKind::RotatedLowRank { spikes: spikes.clone(), seed: 11 }, 20).unwrap();
        let mut ev = eigenvalues_desc(&b).unwrap();
        ev.retain(|x| x.abs() > 1e-8);
        assert_eq!(ev.len(), 3);
        for (x, y) in ev.iter().zip([4.0, 1.0, -2.5]) {
            assert!((x - y).abs() < 1e-10);
        }
        let q = 0.7;
        let c = gen_signal(&SignalKind::Sbm { blocks: vec![5, 5], densities: vec![vec![q, 0.0], vec![0.0, q]] }, 10).unwrap();
        let rank = eigenvalues_desc(&c).unwrap().iter().filter(|x| x.abs() > 1e-10).count();
        assert!(rank <= 2);
    }

    #[test]
    fn single_clique_truth() {
        let k = 6;
        let h = gen_hidden_cliques(30, &[k], 5).unwrap();
        let s = decompose_symmetric(&h.a_truth).unwrap();
        assert!((s.eigenvalues[0] - k as f64).abs() < 1e-10);
        let u = s.u(0);
        let sign = u[h.memberships[0][0]].signum();
        for i in 0..30 {
            let expect = if h.memberships[0].contains(&i) { 1.0 / (k as f64).sqrt() } else { 0.0 };
            assert!((sign * u[i] - expect).abs() < 1e-10);
        }
        assert!(h.a_tilde.as_matrix().iter().all(|v| v.abs() == 1.0));
        let e = h.noise().unwrap();
        for &i in &h.memberships[0] {
            for &j in &h.memberships[0] {
                assert_eq!(e.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn clique_layout() {
        let h = gen_hidden_cliques(12, &[], 1).unwrap();
        assert!(h.a_truth.as_matrix().iter().all(|&v| v == 0.0));
        assert!(matches!(gen_hidden_cliques(5, &[3, 3], 1), Err(Error::LayoutError(_))));
        let h = gen_hidden_cliques(20, &[5, 4], 2).unwrap();
        assert!(h.memberships[0].iter().all(|v| !h.memberships[1].contains(v)));
    }

    #[test]
    fn spiked_samples() {
        let spec = SpikedModelSpec::diagonal(&[9.0, 1.0, 1.0, 1.0], 4000, EntryDist::Gaussian, 4);
        let s = gen_spiked_samples(&spec).unwrap();
        assert_eq!(s, gen_spiked_samples(&spec).unwrap());
        let top = eigenvalues_desc(&s.m_tilde).unwrap()[0];
        assert!((top - 9.0).abs() < 1.5);
        let bad = SpikedModelSpec::diagonal(&[1.0, -1.0], 10, EntryDist::Gaussian, 0);
        assert!(matches!(gen_spiked_samples(&bad), Err(Error::NotPsd(_))));
        let m = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let r = psd_sqrt(&m).unwrap();
        assert!((&r * &r - m.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn tail_examples() {
        let q = TailBoundQuery::new(TailKind::BernsteinUEv, &[("t", 10.0), ("sigma", 1.0), ("K", 1.0)]);
        assert!((tail_bound(&q).unwrap() - (-50.0f64 / 12.0).exp()).abs() < 1e-15);
        let q = TailBoundQuery::new(TailKind::ChebyshevEuEv, &[("t", 1.0), ("n", 10.0), ("m4", 3.0)]);
        assert_eq!(tail_bound(&q).unwrap(), 1.0);
        let q = TailBoundQuery::new(TailKind::MatrixBernstein, &[("t", 1.0), ("n", 10.0)]);
        assert!(matches!(tail_bound(&q), Err(Error::IncompleteInput(_))));
    }

    #[test]
    fn kurtosis_coupling_trivial_bound() {
        let d = 8;
        let u = random_orthonormal(d, d, 2);
        let ex = vec![-2.0; d];
        let c = kurtosis_coupling(&u, &ex, 2).unwrap();
        assert!(c <= 2.0 + 1e-12);
        assert_eq!(kurtosis_coupling(&u, &vec![0.0; d], 2).unwrap(), 0.0);
    }
}
