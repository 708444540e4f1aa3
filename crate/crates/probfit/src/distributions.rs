//! Parameterized probability distributions.
//!
//! Every family implements the same four operations: `log_probability`,
//! `summarize` (data → additive statistics, pure), `from_summaries`
//! (statistics → new parameters), and `sample`. Parameter estimates are
//! the population MLE ratios of the accumulated sums; no Bessel
//! correction is applied.

use rand::Rng;
use rand_distr::{Distribution as RandDistribution, Exp, Normal, Poisson as PoissonSampler};
use statrs::function::gamma::ln_gamma;

use crate::data::DataBatch;
use crate::error::{Error, Result};
use crate::math::{cholesky, forward_solve, LN_2PI};
use crate::stats::{CategoricalStats, GaussianStats, MvGaussianStats, RateStats, SuffStats};

/// Smallest variance a Gaussian is allowed to reach; keeps EM alive when
/// a component collapses onto a single point.
pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Ridge added to a covariance matrix when its factorization fails.
pub const COVARIANCE_RIDGE: f64 = 1e-6;

fn blend(old: f64, mle: f64, inertia: f64) -> f64 {
    inertia * old + (1.0 - inertia) * mle
}

fn check_finite(x: &[f64]) -> Result<()> {
    for &v in x {
        if !v.is_finite() {
            return Err(Error::NonFiniteData(format!("input value {}", v)));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovarianceMode {
    Full,
    Diagonal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnivariateGaussian {
    pub mu: f64,
    pub sigma2: f64,
}

impl UnivariateGaussian {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma2.is_finite() || sigma2 < VARIANCE_FLOOR {
            return Err(Error::InvalidDocument(format!(
                "Gaussian parameters must be finite with variance >= {}: mu={}, sigma2={}",
                VARIANCE_FLOOR, mu, sigma2
            )));
        }
        Ok(UnivariateGaussian { mu, sigma2 })
    }

    pub fn log_probability(&self, x: f64) -> f64 {
        let d = x - self.mu;
        -0.5 * (LN_2PI + self.sigma2.ln()) - d * d / (2.0 * self.sigma2)
    }
}

/// Dense multivariate Gaussian in full or diagonal covariance mode.
/// The Cholesky factor and log-determinant are cached at construction.
#[derive(Clone, Debug)]
pub struct MultivariateGaussian {
    mean: Vec<f64>,
    /// Row-major d×d in full mode; just the diagonal in diagonal mode.
    cov: Vec<f64>,
    mode: CovarianceMode,
    chol: Vec<f64>,
    log_det: f64,
}

impl PartialEq for MultivariateGaussian {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.cov == other.cov && self.mode == other.mode
    }
}

impl MultivariateGaussian {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>, mode: CovarianceMode) -> Result<Self> {
        let d = mean.len();
        let expected = match mode {
            CovarianceMode::Full => d * d,
            CovarianceMode::Diagonal => d,
        };
        if cov.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "covariance length {} for dimension {}",
                cov.len(),
                d
            )));
        }
        check_finite(&mean)?;
        check_finite(&cov)?;
        let mut out = MultivariateGaussian {
            mean,
            cov,
            mode,
            chol: Vec::new(),
            log_det: 0.0,
        };
        out.refresh()?;
        Ok(out)
    }

    pub fn isotropic(dim: usize) -> Self {
        let cov = (0..dim * dim)
            .map(|i| if i % (dim + 1) == 0 { 1.0 } else { 0.0 })
            .collect();
        MultivariateGaussian::new(vec![0.0; dim], cov, CovarianceMode::Full).unwrap()
    }

    pub fn diagonal(mean: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        MultivariateGaussian::new(mean, variances, CovarianceMode::Diagonal)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &[f64] {
        &self.cov
    }

    pub fn mode(&self) -> CovarianceMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Recompute the factorization after a parameter change; regularizes
    /// once with a small ridge and errors if the matrix still fails.
    fn refresh(&mut self) -> Result<()> {
        let d = self.mean.len();
        match self.mode {
            CovarianceMode::Diagonal => {
                for v in &mut self.cov {
                    if *v < VARIANCE_FLOOR {
                        *v = VARIANCE_FLOOR;
                    }
                }
                self.log_det = self.cov.iter().map(|v| v.ln()).sum();
                self.chol.clear();
                Ok(())
            }
            CovarianceMode::Full => {
                // Enforce symmetry before factorizing.
                for i in 0..d {
                    for j in 0..i {
                        let s = 0.5 * (self.cov[i * d + j] + self.cov[j * d + i]);
                        self.cov[i * d + j] = s;
                        self.cov[j * d + i] = s;
                    }
                }
                let l = match cholesky(&self.cov, d) {
                    Some(l) => l,
                    None => {
                        for i in 0..d {
                            self.cov[i * d + i] += COVARIANCE_RIDGE;
                        }
                        cholesky(&self.cov, d).ok_or(Error::NotPositiveDefinite)?
                    }
                };
                self.log_det = l
                    .iter()
                    .step_by(d + 1)
                    .map(|&x| 2.0 * x.ln())
                    .sum();
                self.chol = l;
                Ok(())
            }
        }
    }

    pub fn log_probability(&self, x: &[f64]) -> Result<f64> {
        let d = self.mean.len();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        check_finite(x)?;
        match self.mode {
            CovarianceMode::Diagonal => {
                let mut lp = 0.0;
                for i in 0..d {
                    let diff = x[i] - self.mean[i];
                    lp += -0.5 * (LN_2PI + self.cov[i].ln()) - diff * diff / (2.0 * self.cov[i]);
                }
                Ok(lp)
            }
            CovarianceMode::Full => {
                let diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
                let y = forward_solve(&self.chol, d, &diff);
                let quad: f64 = y.iter().map(|v| v * v).sum();
                Ok(-0.5 * (d as f64 * LN_2PI + self.log_det + quad))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.mean.len();
        let std_normal = Normal::new(0.0, 1.0).unwrap();
        let z: Vec<f64> = (0..d).map(|_| std_normal.sample(rng)).collect();
        match self.mode {
            CovarianceMode::Diagonal => (0..d)
                .map(|i| self.mean[i] + self.cov[i].sqrt() * z[i])
                .collect(),
            CovarianceMode::Full => (0..d)
                .map(|i| {
                    self.mean[i]
                        + (0..=i).map(|k| self.chol[i * d + k] * z[k]).sum::<f64>()
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
    /// Added to every count before normalization in `from_summaries`.
    /// Zero for plain MLE; models that can starve a category pass 1e-8.
    pub pseudocount: f64,
}

impl Categorical {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
            return Err(Error::InvalidDocument(
                "categorical probabilities must lie in [0, 1]".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDocument(format!(
                "categorical probabilities must sum to 1, got {}",
                total
            )));
        }
        Ok(Categorical {
            probs,
            pseudocount: 0.0,
        })
    }

    pub fn uniform(k: usize) -> Self {
        Categorical {
            probs: vec![1.0 / k as f64; k],
            pseudocount: 0.0,
        }
    }

    pub fn with_pseudocount(mut self, pseudocount: f64) -> Self {
        self.pseudocount = pseudocount;
        self
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_categories(&self) -> usize {
        self.probs.len()
    }

    pub fn log_probability(&self, index: usize) -> Result<f64> {
        if index >= self.probs.len() {
            return Err(Error::CategoryOutOfRange {
                index,
                categories: self.probs.len(),
            });
        }
        Ok(self.probs[index].ln())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Exponential {
    pub rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidDocument(format!(
                "exponential rate must be positive and finite, got {}",
                rate
            )));
        }
        Ok(Exponential { rate })
    }

    pub fn log_probability(&self, x: f64) -> f64 {
        if x < 0.0 {
            f64::NEG_INFINITY
        } else {
            self.rate.ln() - self.rate * x
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Poisson {
    pub lambda: f64,
}

impl Poisson {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidDocument(format!(
                "Poisson lambda must be positive and finite, got {}",
                lambda
            )));
        }
        Ok(Poisson { lambda })
    }

    pub fn log_probability(&self, x: f64) -> f64 {
        if x < 0.0 || x.fract() != 0.0 {
            f64::NEG_INFINITY
        } else {
            x * self.lambda.ln() - self.lambda - ln_gamma(x + 1.0)
        }
    }
}

/// Tagged union over all supported families. Interpreting a data row is
/// family-specific: univariate families read `x[0]`, the categorical
/// family reads `x[0]` as an integer category, and the multivariate
/// Gaussian consumes the full row.
#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    Gaussian(UnivariateGaussian),
    MultivariateGaussian(MultivariateGaussian),
    Categorical(Categorical),
    Exponential(Exponential),
    Poisson(Poisson),
}

fn scalar(x: &[f64]) -> Result<f64> {
    if x.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: x.len(),
        });
    }
    if !x[0].is_finite() {
        return Err(Error::NonFiniteData(format!("input value {}", x[0])));
    }
    Ok(x[0])
}

fn category(x: &[f64], k: usize) -> Result<usize> {
    let v = scalar(x)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::NonFiniteData(format!(
            "expected a nonnegative integer category, got {}",
            v
        )));
    }
    let idx = v as usize;
    if idx >= k {
        return Err(Error::CategoryOutOfRange {
            index: idx,
            categories: k,
        });
    }
    Ok(idx)
}

impl Distribution {
    pub fn dimension(&self) -> usize {
        match self {
            Distribution::MultivariateGaussian(d) => d.dim(),
            _ => 1,
        }
    }

    pub fn log_probability(&self, x: &[f64]) -> Result<f64> {
        match self {
            Distribution::Gaussian(d) => Ok(d.log_probability(scalar(x)?)),
            Distribution::MultivariateGaussian(d) => d.log_probability(x),
            Distribution::Categorical(d) => d.log_probability(category(x, d.n_categories())?),
            Distribution::Exponential(d) => Ok(d.log_probability(scalar(x)?)),
            Distribution::Poisson(d) => Ok(d.log_probability(scalar(x)?)),
        }
    }

    /// Empty statistics of the right kind and shape for this family.
    pub fn zero_stats(&self) -> SuffStats {
        match self {
            Distribution::Gaussian(_) => SuffStats::Gaussian(GaussianStats::default()),
            Distribution::MultivariateGaussian(d) => {
                let dim = d.dim();
                let n = match d.mode() {
                    CovarianceMode::Full => dim * dim,
                    CovarianceMode::Diagonal => dim,
                };
                SuffStats::MvGaussian(MvGaussianStats {
                    w_sum: 0.0,
                    wx_sum: vec![0.0; dim],
                    wxx_sum: vec![0.0; n],
                    diagonal: d.mode() == CovarianceMode::Diagonal,
                })
            }
            Distribution::Categorical(d) => SuffStats::Categorical(CategoricalStats {
                counts: vec![0.0; d.n_categories()],
            }),
            Distribution::Exponential(_) => SuffStats::Exponential(RateStats::default()),
            Distribution::Poisson(_) => SuffStats::Poisson(RateStats::default()),
        }
    }

    /// Add one weighted observation into `stats`.
    pub fn accumulate(&self, stats: &mut SuffStats, x: &[f64], w: f64) -> Result<()> {
        if w < 0.0 {
            return Err(Error::NegativeWeight(w));
        }
        match (self, stats) {
            (Distribution::Gaussian(_), SuffStats::Gaussian(s)) => {
                let v = scalar(x)?;
                s.w_sum += w;
                s.wx_sum += w * v;
                s.wx2_sum += w * v * v;
                Ok(())
            }
            (Distribution::MultivariateGaussian(d), SuffStats::MvGaussian(s)) => {
                let dim = d.dim();
                if x.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: x.len(),
                    });
                }
                check_finite(x)?;
                s.w_sum += w;
                for i in 0..dim {
                    s.wx_sum[i] += w * x[i];
                }
                if s.diagonal {
                    for i in 0..dim {
                        s.wxx_sum[i] += w * x[i] * x[i];
                    }
                } else {
                    for i in 0..dim {
                        for j in 0..dim {
                            s.wxx_sum[i * dim + j] += w * x[i] * x[j];
                        }
                    }
                }
                Ok(())
            }
            (Distribution::Categorical(d), SuffStats::Categorical(s)) => {
                let idx = category(x, d.n_categories())?;
                s.counts[idx] += w;
                Ok(())
            }
            (Distribution::Exponential(_), SuffStats::Exponential(s))
            | (Distribution::Poisson(_), SuffStats::Poisson(s)) => {
                let v = scalar(x)?;
                s.w_sum += w;
                s.wx_sum += w * v;
                Ok(())
            }
            (d, s) => Err(Error::StatsKindMismatch {
                left: d.family_name(),
                right: s.kind(),
            }),
        }
    }

    /// Statistics of a whole batch; pure with respect to the parameters.
    pub fn summarize(&self, batch: &DataBatch) -> Result<SuffStats> {
        let mut stats = self.zero_stats();
        for i in 0..batch.n_rows() {
            self.accumulate(&mut stats, batch.row(i), batch.weight(i))?;
        }
        Ok(stats)
    }

    /// Batch statistics with an extra per-row weight factor
    /// (responsibilities from an E-step).
    pub fn summarize_weighted(&self, batch: &DataBatch, extra: &[f64]) -> Result<SuffStats> {
        if extra.len() != batch.n_rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} responsibilities for {} rows",
                extra.len(),
                batch.n_rows()
            )));
        }
        let mut stats = self.zero_stats();
        for i in 0..batch.n_rows() {
            self.accumulate(&mut stats, batch.row(i), batch.weight(i) * extra[i])?;
        }
        Ok(stats)
    }

    /// Update parameters from accumulated statistics. `inertia` blends
    /// each scalar as `inertia*old + (1-inertia)*mle`; zero total weight
    /// leaves the distribution unchanged.
    pub fn from_summaries(&mut self, stats: &SuffStats, inertia: f64) -> Result<()> {
        if stats.weight() <= 0.0 {
            return Ok(());
        }
        match (self, stats) {
            (Distribution::Gaussian(d), SuffStats::Gaussian(s)) => {
                let mu = s.wx_sum / s.w_sum;
                let var = s.wx2_sum / s.w_sum - mu * mu;
                d.mu = blend(d.mu, mu, inertia);
                d.sigma2 = blend(d.sigma2, var, inertia).max(VARIANCE_FLOOR);
                Ok(())
            }
            (Distribution::MultivariateGaussian(d), SuffStats::MvGaussian(s)) => {
                let dim = d.dim();
                if s.wx_sum.len() != dim || s.diagonal != (d.mode() == CovarianceMode::Diagonal) {
                    return Err(Error::ShapeMismatch(
                        "multivariate statistics shape does not match distribution".into(),
                    ));
                }
                let mu: Vec<f64> = s.wx_sum.iter().map(|&v| v / s.w_sum).collect();
                for i in 0..dim {
                    d.mean[i] = blend(d.mean[i], mu[i], inertia);
                }
                if s.diagonal {
                    for i in 0..dim {
                        let var = s.wxx_sum[i] / s.w_sum - mu[i] * mu[i];
                        d.cov[i] = blend(d.cov[i], var, inertia);
                    }
                } else {
                    for i in 0..dim {
                        for j in 0..dim {
                            let cov = s.wxx_sum[i * dim + j] / s.w_sum - mu[i] * mu[j];
                            d.cov[i * dim + j] = blend(d.cov[i * dim + j], cov, inertia);
                        }
                    }
                }
                d.refresh()
            }
            (Distribution::Categorical(d), SuffStats::Categorical(s)) => {
                if s.counts.len() != d.probs.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "{} counts for {} categories",
                        s.counts.len(),
                        d.probs.len()
                    )));
                }
                let pc = d.pseudocount;
                let total: f64 = s.counts.iter().sum::<f64>() + pc * s.counts.len() as f64;
                for (p, &c) in d.probs.iter_mut().zip(&s.counts) {
                    *p = blend(*p, (c + pc) / total, inertia);
                }
                // Renormalize so blending cannot drift the simplex.
                let norm: f64 = d.probs.iter().sum();
                for p in &mut d.probs {
                    *p /= norm;
                }
                Ok(())
            }
            (Distribution::Exponential(d), SuffStats::Exponential(s)) => {
                if s.wx_sum > 0.0 {
                    d.rate = blend(d.rate, s.w_sum / s.wx_sum, inertia);
                }
                Ok(())
            }
            (Distribution::Poisson(d), SuffStats::Poisson(s)) => {
                let lambda = s.wx_sum / s.w_sum;
                if lambda > 0.0 {
                    d.lambda = blend(d.lambda, lambda, inertia);
                }
                Ok(())
            }
            (d, s) => Err(Error::StatsKindMismatch {
                left: d.family_name(),
                right: s.kind(),
            }),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Distribution::Gaussian(d) => {
                let n = Normal::new(d.mu, d.sigma2.sqrt()).unwrap();
                vec![n.sample(rng)]
            }
            Distribution::MultivariateGaussian(d) => d.sample(rng),
            Distribution::Categorical(d) => vec![d.sample(rng) as f64],
            Distribution::Exponential(d) => {
                let e = Exp::new(d.rate).unwrap();
                vec![e.sample(rng)]
            }
            Distribution::Poisson(d) => {
                let p = PoissonSampler::new(d.lambda).unwrap();
                vec![p.sample(rng)]
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Distribution::Gaussian(_) => "UnivariateGaussian",
            Distribution::MultivariateGaussian(_) => "MultivariateGaussian",
            Distribution::Categorical(_) => "Categorical",
            Distribution::Exponential(_) => "Exponential",
            Distribution::Poisson(_) => "Poisson",
        }
    }
}

/// Family selector used where models are built from data and the
/// concrete parameters are not yet known.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    Gaussian,
    MultivariateGaussian(CovarianceMode),
    Categorical { n_categories: usize },
    Exponential,
    Poisson,
}

impl FamilySpec {
    /// A neutral starting distribution of this family for `dim` columns.
    pub fn default_distribution(&self, dim: usize) -> Result<Distribution> {
        match self {
            FamilySpec::Gaussian => {
                if dim != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: dim,
                    });
                }
                Ok(Distribution::Gaussian(UnivariateGaussian::new(0.0, 1.0)?))
            }
            FamilySpec::MultivariateGaussian(mode) => match mode {
                CovarianceMode::Full => Ok(Distribution::MultivariateGaussian(
                    MultivariateGaussian::isotropic(dim),
                )),
                CovarianceMode::Diagonal => Ok(Distribution::MultivariateGaussian(
                    MultivariateGaussian::diagonal(vec![0.0; dim], vec![1.0; dim])?,
                )),
            },
            FamilySpec::Categorical { n_categories } => {
                Ok(Distribution::Categorical(Categorical::uniform(*n_categories)))
            }
            FamilySpec::Exponential => Ok(Distribution::Exponential(Exponential::new(1.0)?)),
            FamilySpec::Poisson => Ok(Distribution::Poisson(Poisson::new(1.0)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(mu: f64, s2: f64) -> Distribution {
        Distribution::Gaussian(UnivariateGaussian::new(mu, s2).unwrap())
    }

    #[test]
    fn standard_normal_at_zero() {
        let d = gaussian(0.0, 1.0);
        assert!((d.log_probability(&[0.0]).unwrap() - (-0.9189385)).abs() < 1e-6);
    }

    #[test]
    fn categorical_log_probability() {
        let d = Distribution::Categorical(Categorical::new(vec![0.25, 0.75]).unwrap());
        assert!((d.log_probability(&[1.0]).unwrap() - 0.75f64.ln()).abs() < 1e-12);
        assert!(d.log_probability(&[2.0]).is_err());
        assert!(d.log_probability(&[f64::NAN]).is_err());
    }

    #[test]
    fn mv_standard_normal_at_origin() {
        let d = Distribution::MultivariateGaussian(MultivariateGaussian::isotropic(2));
        assert!((d.log_probability(&[0.0, 0.0]).unwrap() - (-1.8378771)).abs() < 1e-6);
        assert!(d.log_probability(&[0.0]).is_err());
    }

    #[test]
    fn mv_full_matches_hand_computed_density() {
        // cov = [[2, 0.5], [0.5, 1]], x - mu = [1, -1].
        let d = MultivariateGaussian::new(
            vec![0.0, 0.0],
            vec![2.0, 0.5, 0.5, 1.0],
            CovarianceMode::Full,
        )
        .unwrap();
        let det: f64 = 2.0 * 1.0 - 0.25;
        let inv = [1.0 / det, -0.5 / det, -0.5 / det, 2.0 / det];
        let quad = inv[0] + (inv[1] + inv[2]) * (1.0) * (-1.0) + inv[3];
        let expected = -0.5 * (2.0 * LN_2PI + det.ln() + quad);
        assert!((d.log_probability(&[1.0, -1.0]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn gaussian_summarize_accumulates_weighted_sums() {
        let d = gaussian(0.0, 1.0);
        let batch = DataBatch::from_values(&[1.0, 2.0, 3.0]).unwrap();
        match d.summarize(&batch).unwrap() {
            SuffStats::Gaussian(s) => {
                assert_eq!((s.w_sum, s.wx_sum, s.wx2_sum), (3.0, 6.0, 14.0));
            }
            _ => unreachable!(),
        }
        let zero = DataBatch::from_values(&[5.0, 7.0])
            .unwrap()
            .with_weights(vec![0.0, 0.0])
            .unwrap();
        match d.summarize(&zero).unwrap() {
            SuffStats::Gaussian(s) => {
                assert_eq!((s.w_sum, s.wx_sum, s.wx2_sum), (0.0, 0.0, 0.0));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn categorical_summarize_counts_weights() {
        let d = Distribution::Categorical(Categorical::uniform(2));
        let batch = DataBatch::from_values(&[0.0, 1.0, 1.0])
            .unwrap()
            .with_weights(vec![1.0, 1.0, 2.0])
            .unwrap();
        match d.summarize(&batch).unwrap() {
            SuffStats::Categorical(s) => assert_eq!(s.counts, vec![1.0, 3.0]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn gaussian_from_summaries_is_population_mle() {
        let mut d = gaussian(0.0, 1.0);
        let s = SuffStats::Gaussian(GaussianStats {
            w_sum: 3.0,
            wx_sum: 6.0,
            wx2_sum: 14.0,
        });
        d.from_summaries(&s, 0.0).unwrap();
        match &d {
            Distribution::Gaussian(g) => {
                assert!((g.mu - 2.0).abs() < 1e-12);
                assert!((g.sigma2 - 2.0 / 3.0).abs() < 1e-12);
            }
            _ => unreachable!(),
        }

        let mut d = gaussian(0.0, 1.0);
        let s = SuffStats::Gaussian(GaussianStats {
            w_sum: 4.0,
            wx_sum: 10.0,
            wx2_sum: 100.0,
        });
        d.from_summaries(&s, 0.0).unwrap();
        match &d {
            Distribution::Gaussian(g) => {
                assert!((g.mu - 2.5).abs() < 1e-12);
                assert!((g.sigma2 - 18.75).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn zero_weight_stats_are_a_no_op() {
        let mut d = gaussian(1.5, 2.5);
        let before = d.clone();
        d.from_summaries(&d.zero_stats(), 0.0).unwrap();
        assert_eq!(d, before);
    }

    #[test]
    fn inertia_blends_per_scalar() {
        let mut d = gaussian(0.0, 1.0);
        let s = SuffStats::Gaussian(GaussianStats {
            w_sum: 1.0,
            wx_sum: 10.0,
            wx2_sum: 100.0,
        });
        d.from_summaries(&s, 0.5).unwrap();
        match &d {
            Distribution::Gaussian(g) => {
                assert!((g.mu - 5.0).abs() < 1e-12); // 0.5*0 + 0.5*10
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn weight_scaling_leaves_mle_unchanged() {
        let batch = DataBatch::from_values(&[1.0, 4.0, 7.0]).unwrap();
        let doubled = DataBatch::from_values(&[1.0, 4.0, 7.0])
            .unwrap()
            .with_weights(vec![2.0, 2.0, 2.0])
            .unwrap();
        let mut a = gaussian(0.0, 1.0);
        let mut b = gaussian(0.0, 1.0);
        a.from_summaries(&a.summarize(&batch).unwrap(), 0.0).unwrap();
        b.from_summaries(&b.summarize(&doubled).unwrap(), 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponential_and_poisson_mle() {
        let batch = DataBatch::from_values(&[1.0, 2.0, 3.0]).unwrap();
        let mut e = Distribution::Exponential(Exponential::new(1.0).unwrap());
        e.from_summaries(&e.summarize(&batch).unwrap(), 0.0).unwrap();
        match &e {
            Distribution::Exponential(x) => assert!((x.rate - 0.5).abs() < 1e-12),
            _ => unreachable!(),
        }
        let mut p = Distribution::Poisson(Poisson::new(1.0).unwrap());
        p.from_summaries(&p.summarize(&batch).unwrap(), 0.0).unwrap();
        match &p {
            Distribution::Poisson(x) => assert!((x.lambda - 2.0).abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn poisson_log_pmf_matches_direct_formula() {
        let p = Poisson::new(3.5).unwrap();
        // P(X=4) = e^-3.5 3.5^4 / 4!
        let direct = (-3.5f64).exp() * 3.5f64.powi(4) / 24.0;
        assert!((p.log_probability(4.0) - direct.ln()).abs() < 1e-12);
        assert_eq!(p.log_probability(-1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn degenerate_categorical_always_samples_category_zero() {
        let d = Categorical::new(vec![1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), 0);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed_and_unbiased() {
        let d = gaussian(0.0, 1.0);
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..100).map(|_| d.sample(&mut r1)[0]).collect();
        let b: Vec<f64> = (0..100).map(|_| d.sample(&mut r2)[0]).collect();
        assert_eq!(a, b);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| d.sample(&mut rng)[0]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "sample mean {}", mean);
    }

    #[test]
    fn gaussian_density_integrates_to_one() {
        // Simpson quadrature over +-8 sigma.
        let d = UnivariateGaussian::new(1.0, 4.0).unwrap();
        let (lo, hi) = (1.0 - 8.0 * 2.0, 1.0 + 8.0 * 2.0);
        let n = 4000;
        let h = (hi - lo) / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let f = d.log_probability(x).exp();
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            total += c * f;
        }
        total *= h / 3.0;
        assert!((total - 1.0).abs() < 1e-6, "integral {}", total);
    }

    #[test]
    fn covariance_regularization_recovers_singular_updates() {
        // All mass on one point makes the covariance singular; the ridge
        // keeps the distribution usable.
        let mut d =
            Distribution::MultivariateGaussian(MultivariateGaussian::isotropic(2));
        let batch = DataBatch::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let s = d.summarize(&batch).unwrap();
        d.from_summaries(&s, 0.0).unwrap();
        assert!(d.log_probability(&[1.0, 2.0]).unwrap().is_finite());
    }
}
