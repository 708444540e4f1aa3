//! Naive Bayes and Bayes classifiers.
//!
//! One implementation covers both: the per-class distribution is either a
//! product of independent univariate distributions (naive) or a single
//! joint distribution such as a full-covariance multivariate Gaussian.
//! Supervised training is single-pass MLE. When the label column
//! contains -1 the fit switches to a semi-supervised MLE+EM hybrid:
//! labeled rows contribute one-hot statistics, unlabeled rows contribute
//! responsibility-weighted statistics, and the two merge before every
//! parameter update.

use crate::data::{BatchSource, DataBatch};
use crate::distributions::{CovarianceMode, Distribution, FamilySpec};
use crate::engine::{self, FitConfig, FitReport, Summarize, Trainable, TrainingMode};
use crate::error::{Error, Result};
use crate::math::logsumexp;
use crate::stats::{ClassifierStats, SuffStats};

/// Per-class distribution: independent per-feature factors, or one joint
/// density over the whole row.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassDist {
    Naive(Vec<Distribution>),
    Joint(Distribution),
}

impl ClassDist {
    pub fn dimension(&self) -> usize {
        match self {
            ClassDist::Naive(feats) => feats.len(),
            ClassDist::Joint(d) => d.dimension(),
        }
    }

    pub fn log_probability(&self, x: &[f64]) -> Result<f64> {
        match self {
            ClassDist::Naive(feats) => {
                if x.len() != feats.len() {
                    return Err(Error::DimensionMismatch {
                        expected: feats.len(),
                        got: x.len(),
                    });
                }
                let mut lp = 0.0;
                for (f, v) in feats.iter().zip(x) {
                    lp += f.log_probability(std::slice::from_ref(v))?;
                }
                Ok(lp)
            }
            ClassDist::Joint(d) => d.log_probability(x),
        }
    }

    fn zero_stats(&self) -> SuffStats {
        match self {
            ClassDist::Naive(feats) => {
                SuffStats::Product(feats.iter().map(|f| f.zero_stats()).collect())
            }
            ClassDist::Joint(d) => d.zero_stats(),
        }
    }

    fn accumulate(&self, stats: &mut SuffStats, x: &[f64], w: f64) -> Result<()> {
        match (self, stats) {
            (ClassDist::Naive(feats), SuffStats::Product(parts)) => {
                for ((f, part), v) in feats.iter().zip(parts).zip(x) {
                    f.accumulate(part, std::slice::from_ref(v), w)?;
                }
                Ok(())
            }
            (ClassDist::Joint(d), s) => d.accumulate(s, x, w),
            (_, s) => Err(Error::StatsKindMismatch {
                left: "Product",
                right: s.kind(),
            }),
        }
    }

    fn from_summaries(&mut self, stats: &SuffStats, inertia: f64) -> Result<()> {
        match (self, stats) {
            (ClassDist::Naive(feats), SuffStats::Product(parts)) => {
                for (f, part) in feats.iter_mut().zip(parts) {
                    f.from_summaries(part, inertia)?;
                }
                Ok(())
            }
            (ClassDist::Joint(d), s) => d.from_summaries(s, inertia),
            (_, s) => Err(Error::StatsKindMismatch {
                left: "Product",
                right: s.kind(),
            }),
        }
    }
}

/// Which per-class distribution the classifier is built from.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassFamily {
    /// Independent univariate distributions, one per feature column.
    Naive(Vec<FamilySpec>),
    /// A joint multivariate Gaussian per class.
    JointGaussian(CovarianceMode),
}

/// Blueprint for a classifier before any data is seen.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierSpec {
    pub n_classes: usize,
    pub family: ClassFamily,
}

impl ClassifierSpec {
    /// Gaussian naive Bayes over `n_features` columns.
    pub fn gaussian_naive(n_classes: usize, n_features: usize) -> Self {
        ClassifierSpec {
            n_classes,
            family: ClassFamily::Naive(vec![FamilySpec::Gaussian; n_features]),
        }
    }

    /// Full-covariance multivariate Gaussian Bayes classifier.
    pub fn gaussian_full(n_classes: usize) -> Self {
        ClassifierSpec {
            n_classes,
            family: ClassFamily::JointGaussian(CovarianceMode::Full),
        }
    }

    fn build_class_dist(&self, dim: usize) -> Result<ClassDist> {
        match &self.family {
            ClassFamily::Naive(specs) => {
                if specs.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: specs.len(),
                        got: dim,
                    });
                }
                Ok(ClassDist::Naive(
                    specs
                        .iter()
                        .map(|s| s.default_distribution(1))
                        .collect::<Result<_>>()?,
                ))
            }
            ClassFamily::JointGaussian(mode) => Ok(ClassDist::Joint(
                FamilySpec::MultivariateGaussian(*mode).default_distribution(dim)?,
            )),
        }
    }

    /// Instantiates an untrained classifier for `dim`-dimensional rows.
    pub fn build_model(&self, dim: usize) -> Result<BayesClassifier> {
        if self.n_classes < 2 {
            return Err(Error::InvalidConfig(
                "a classifier needs at least 2 classes".into(),
            ));
        }
        let class_dists = (0..self.n_classes)
            .map(|_| self.build_class_dist(dim))
            .collect::<Result<_>>()?;
        BayesClassifier::new(
            vec![1.0 / self.n_classes as f64; self.n_classes],
            class_dists,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BayesClassifier {
    priors: Vec<f64>,
    class_dists: Vec<ClassDist>,
}

impl BayesClassifier {
    pub fn new(priors: Vec<f64>, class_dists: Vec<ClassDist>) -> Result<Self> {
        if priors.len() < 2 || priors.len() != class_dists.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} priors for {} class distributions",
                priors.len(),
                class_dists.len()
            )));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 || priors.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidDocument(format!(
                "class priors must be nonnegative and sum to 1, got {}",
                total
            )));
        }
        let dim = class_dists[0].dimension();
        if class_dists.iter().any(|c| c.dimension() != dim) {
            return Err(Error::ShapeMismatch(
                "class distributions must share a dimension".into(),
            ));
        }
        Ok(BayesClassifier {
            priors,
            class_dists,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.priors.len()
    }

    pub fn dimension(&self) -> usize {
        self.class_dists[0].dimension()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn class_dists(&self) -> &[ClassDist] {
        &self.class_dists
    }

    pub fn is_naive(&self) -> bool {
        matches!(self.class_dists[0], ClassDist::Naive(_))
    }

    /// Unnormalized per-class log posteriors log(prior) + log p(x|c).
    fn joint_log_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.priors
            .iter()
            .zip(&self.class_dists)
            .map(|(p, c)| Ok(p.ln() + c.log_probability(x)?))
            .collect()
    }

    /// Marginal log-likelihood of a row under the class mixture.
    pub fn log_probability(&self, x: &[f64]) -> Result<f64> {
        Ok(logsumexp(&self.joint_log_probs(x)?))
    }

    /// Normalized log posterior over classes; exponentiates to sum 1.
    pub fn predict_log_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let joint = self.joint_log_probs(x)?;
        let total = logsumexp(&joint);
        if !total.is_finite() {
            return Err(Error::ZeroProbabilitySample(0));
        }
        Ok(joint.iter().map(|l| l - total).collect())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.predict_log_proba(x)?.iter().map(|l| l.exp()).collect())
    }

    /// argmax of the posterior, ties to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let joint = self.joint_log_probs(x)?;
        let mut best = 0;
        let mut best_l = f64::NEG_INFINITY;
        for (c, &l) in joint.iter().enumerate() {
            if l > best_l {
                best_l = l;
                best = c;
            }
        }
        if !best_l.is_finite() {
            return Err(Error::ZeroProbabilitySample(0));
        }
        Ok(best)
    }

    fn zero_stats(&self, with_loglik: bool) -> ClassifierStats {
        ClassifierStats {
            prior_mass: vec![0.0; self.n_classes()],
            per_class: self.class_dists.iter().map(|c| c.zero_stats()).collect(),
            log_likelihood: if with_loglik { Some(0.0) } else { None },
        }
    }

    fn check_label(&self, label: Option<i64>, allow_unlabeled: bool) -> Result<Option<usize>> {
        let label = label.ok_or(Error::MissingLabels)?;
        if label == -1 {
            if allow_unlabeled {
                return Ok(None);
            }
            return Err(Error::LabelOutOfRange {
                label,
                classes: self.n_classes(),
            });
        }
        if label < 0 || label as usize >= self.n_classes() {
            return Err(Error::LabelOutOfRange {
                label,
                classes: self.n_classes(),
            });
        }
        Ok(Some(label as usize))
    }
}

/// Supervised single-pass MLE: every row must carry a label in 0..C-1.
impl Summarize for BayesClassifier {
    type Batch = DataBatch;

    fn summarize(&self, batch: &DataBatch) -> Result<SuffStats> {
        let mut stats = self.zero_stats(false);
        for i in 0..batch.n_rows() {
            let c = self
                .check_label(batch.label(i), false)?
                .expect("unlabeled rejected above");
            let w = batch.weight(i);
            stats.prior_mass[c] += w;
            self.class_dists[c].accumulate(&mut stats.per_class[c], batch.row(i), w)?;
        }
        Ok(SuffStats::Classifier(stats))
    }
}

impl Trainable for BayesClassifier {
    fn apply_summaries(&mut self, stats: &SuffStats, inertia: f64) -> Result<()> {
        let s = match stats {
            SuffStats::Classifier(s) => s,
            other => {
                return Err(Error::StatsKindMismatch {
                    left: "Classifier",
                    right: other.kind(),
                })
            }
        };
        if s.prior_mass.len() != self.n_classes() {
            return Err(Error::ShapeMismatch(format!(
                "{} prior masses for {} classes",
                s.prior_mass.len(),
                self.n_classes()
            )));
        }
        let total: f64 = s.prior_mass.iter().sum();
        if total <= 0.0 {
            return Ok(());
        }
        for c in 0..self.n_classes() {
            let mle = s.prior_mass[c] / total;
            self.priors[c] = inertia * self.priors[c] + (1.0 - inertia) * mle;
            self.class_dists[c].from_summaries(&s.per_class[c], inertia)?;
        }
        let norm: f64 = self.priors.iter().sum();
        for p in &mut self.priors {
            *p /= norm;
        }
        Ok(())
    }

    fn training_mode(&self) -> TrainingMode {
        TrainingMode::SinglePass
    }
}

/// EM wrapper: labeled rows one-hot, unlabeled rows by responsibility.
struct SemiSupervised(BayesClassifier);

impl Summarize for SemiSupervised {
    type Batch = DataBatch;

    fn summarize(&self, batch: &DataBatch) -> Result<SuffStats> {
        let model = &self.0;
        let mut stats = model.zero_stats(true);
        let mut loglik = 0.0;
        for i in 0..batch.n_rows() {
            let x = batch.row(i);
            let w = batch.weight(i);
            match model.check_label(batch.label(i), true)? {
                Some(c) => {
                    stats.prior_mass[c] += w;
                    model.class_dists[c].accumulate(&mut stats.per_class[c], x, w)?;
                    loglik += w
                        * (model.priors[c].ln() + model.class_dists[c].log_probability(x)?);
                }
                None => {
                    let joint = model.joint_log_probs(x)?;
                    let total = logsumexp(&joint);
                    if !total.is_finite() {
                        return Err(Error::ZeroProbabilitySample(i));
                    }
                    loglik += w * total;
                    for c in 0..model.n_classes() {
                        let rw = w * (joint[c] - total).exp();
                        stats.prior_mass[c] += rw;
                        model.class_dists[c].accumulate(&mut stats.per_class[c], x, rw)?;
                    }
                }
            }
        }
        stats.log_likelihood = Some(loglik);
        Ok(SuffStats::Classifier(stats))
    }
}

impl Trainable for SemiSupervised {
    fn apply_summaries(&mut self, stats: &SuffStats, inertia: f64) -> Result<()> {
        self.0.apply_summaries(stats, inertia)
    }

    fn training_mode(&self) -> TrainingMode {
        TrainingMode::Iterative
    }
}

fn peek_dimension<S>(source: &mut S) -> Result<usize>
where
    S: BatchSource<Batch = DataBatch> + ?Sized,
{
    source.reset()?;
    match source.next_batch()? {
        Some(b) => Ok(b.n_cols()),
        None => Err(Error::EmptySource),
    }
}

/// Pure-MLE supervised fit; rejects -1 labels.
pub fn fit_supervised<S>(
    spec: &ClassifierSpec,
    source: &mut S,
    config: &FitConfig,
) -> Result<BayesClassifier>
where
    S: BatchSource<Batch = DataBatch> + ?Sized,
{
    let dim = peek_dimension(source)?;
    let mut model = spec.build_model(dim)?;
    let stats = engine::parallel_summarize(&model, source, config)?;
    if let SuffStats::Classifier(s) = &stats {
        if let Some(c) = s.prior_mass.iter().position(|&m| m <= 0.0) {
            return Err(Error::EmptyClass(c));
        }
    }
    model.apply_summaries(&stats, config.inertia)?;
    Ok(model)
}

/// Outcome of `fit_auto`: whether the -1 convention kicked in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitKind {
    Supervised,
    SemiSupervised,
}

/// MLE-on-labeled initialization followed by EM over all rows.
///
/// Step 1 fits priors and class distributions on labeled rows only; step
/// 2 repeats hybrid summarize/update epochs per the engine loop. With no
/// unlabeled rows this degenerates to the supervised fit (reported via
/// `FitKind`, not an error).
pub fn fit_semisupervised<S>(
    spec: &ClassifierSpec,
    source: &mut S,
    config: &FitConfig,
) -> Result<(BayesClassifier, FitReport, FitKind)>
where
    S: BatchSource<Batch = DataBatch> + ?Sized,
{
    config.validate()?;
    let dim = peek_dimension(source)?;
    let mut model = spec.build_model(dim)?;

    // Step 1: MLE on the labeled rows, counting unlabeled rows as we go.
    source.reset()?;
    let mut stats = model.zero_stats(false);
    let mut unlabeled = 0usize;
    let mut any_rows = false;
    while let Some(batch) = source.next_batch()? {
        for i in 0..batch.n_rows() {
            any_rows = true;
            match model.check_label(batch.label(i), true)? {
                Some(c) => {
                    let w = batch.weight(i);
                    stats.prior_mass[c] += w;
                    model.class_dists[c].accumulate(&mut stats.per_class[c], batch.row(i), w)?;
                }
                None => unlabeled += 1,
            }
        }
    }
    if !any_rows {
        return Err(Error::EmptySource);
    }
    if let Some(c) = stats.prior_mass.iter().position(|&m| m <= 0.0) {
        return Err(Error::NoLabeledRows(c));
    }
    model.apply_summaries(&SuffStats::Classifier(stats), 0.0)?;

    if unlabeled == 0 {
        return Ok((model, FitReport::default(), FitKind::Supervised));
    }

    // Step 2: EM over labeled + unlabeled rows.
    let mut trainer = SemiSupervised(model);
    let report = engine::fit(&mut trainer, source, config)?;
    Ok((trainer.0, report, FitKind::SemiSupervised))
}

/// Dispatch per the -1 convention: any -1 label triggers the
/// semi-supervised path, otherwise a plain supervised fit.
pub fn fit_auto<S>(
    spec: &ClassifierSpec,
    source: &mut S,
    config: &FitConfig,
) -> Result<(BayesClassifier, FitReport, FitKind)>
where
    S: BatchSource<Batch = DataBatch> + ?Sized,
{
    fit_semisupervised(spec, source, config)
}
