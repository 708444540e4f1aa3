//! Additive sufficient statistics.
//!
//! `SuffStats` is the only object exchanged between data scanning and
//! parameter updates. Statistics form a commutative monoid under `merge`:
//! every accumulator field adds elementwise, which is what makes
//! out-of-core, minibatch, and data-parallel training interchangeable
//! with a single full pass.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Accumulators for a univariate Gaussian: Σw, Σwx, Σwx².
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaussianStats {
    pub w_sum: f64,
    pub wx_sum: f64,
    pub wx2_sum: f64,
}

/// Accumulators for a multivariate Gaussian: Σw, Σwx (d), and Σw·xxᵀ
/// (d×d row-major, or just the diagonal in diagonal mode).
#[derive(Clone, Debug, PartialEq)]
pub struct MvGaussianStats {
    pub w_sum: f64,
    pub wx_sum: Vec<f64>,
    pub wxx_sum: Vec<f64>,
    pub diagonal: bool,
}

/// Per-category weight sums.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoricalStats {
    pub counts: Vec<f64>,
}

/// Σw and Σwx, enough for rate-style families (exponential, Poisson).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateStats {
    pub w_sum: f64,
    pub wx_sum: f64,
}

/// Per-class prior mass plus per-class distribution statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierStats {
    pub prior_mass: Vec<f64>,
    pub per_class: Vec<SuffStats>,
    /// Training log-likelihood observed during the pass (EM mode only).
    pub log_likelihood: Option<f64>,
}

/// Per-component weight mass and statistics from one E-step pass.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureStats {
    pub mass: Vec<f64>,
    pub components: Vec<SuffStats>,
    pub log_likelihood: f64,
    /// Lowest-likelihood row seen, kept for degenerate-component rescue.
    pub worst_row: Option<(f64, Vec<f64>)>,
}

/// Baum-Welch expected counts: initial mass γ₀, transition mass Σξ,
/// optional end mass, and per-state emission statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct HmmStats {
    pub init_mass: Vec<f64>,
    pub trans_mass: Vec<f64>, // n*n row-major
    pub end_mass: Option<Vec<f64>>,
    pub emissions: Vec<SuffStats>,
    pub log_likelihood: f64,
    pub seq_weight: f64,
}

/// Weighted n-gram counts for an order-k Markov chain.
#[derive(Clone, Debug, PartialEq)]
pub struct NgramStats {
    pub order: usize,
    pub alphabet: usize,
    /// Unconditional counts for positions 0..order-1.
    pub initial_counts: Vec<Vec<f64>>,
    /// Context tuple → next-symbol counts.
    pub transition_counts: BTreeMap<Vec<u32>, Vec<f64>>,
    pub w_sum: f64,
}

/// Weighted child-given-parents counts, one table per network variable.
#[derive(Clone, Debug, PartialEq)]
pub struct CptStats {
    /// counts[var][parent_assignment_index][child_value]
    pub counts: Vec<Vec<Vec<f64>>>,
    pub w_sum: f64,
}

/// Weighted singleton and pairwise joint counts over discrete columns,
/// the input to mutual-information computation.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCountStats {
    pub cards: Vec<usize>,
    pub singles: Vec<Vec<f64>>,
    /// Flattened c_i×c_j joint counts for each pair i<j, in (i,j) order.
    pub pairs: Vec<Vec<f64>>,
    pub w_sum: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SuffStats {
    Gaussian(GaussianStats),
    MvGaussian(MvGaussianStats),
    Categorical(CategoricalStats),
    Exponential(RateStats),
    Poisson(RateStats),
    /// Independent per-feature bundles (naive-Bayes style products).
    Product(Vec<SuffStats>),
    Classifier(ClassifierStats),
    Mixture(MixtureStats),
    Hmm(HmmStats),
    Ngram(NgramStats),
    Cpt(CptStats),
    PairCounts(PairCountStats),
}

fn add_vec(a: &mut [f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "{}: {} vs {}",
            what,
            a.len(),
            b.len()
        )));
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    Ok(())
}

impl SuffStats {
    pub fn kind(&self) -> &'static str {
        match self {
            SuffStats::Gaussian(_) => "Gaussian",
            SuffStats::MvGaussian(_) => "MultivariateGaussian",
            SuffStats::Categorical(_) => "Categorical",
            SuffStats::Exponential(_) => "Exponential",
            SuffStats::Poisson(_) => "Poisson",
            SuffStats::Product(_) => "Product",
            SuffStats::Classifier(_) => "Classifier",
            SuffStats::Mixture(_) => "Mixture",
            SuffStats::Hmm(_) => "Hmm",
            SuffStats::Ngram(_) => "Ngram",
            SuffStats::Cpt(_) => "Cpt",
            SuffStats::PairCounts(_) => "PairCounts",
        }
    }

    /// Total weight of data summarized into these statistics.
    pub fn weight(&self) -> f64 {
        match self {
            SuffStats::Gaussian(s) => s.w_sum,
            SuffStats::MvGaussian(s) => s.w_sum,
            SuffStats::Categorical(s) => s.counts.iter().sum(),
            SuffStats::Exponential(s) | SuffStats::Poisson(s) => s.w_sum,
            SuffStats::Product(children) => children.first().map_or(0.0, |c| c.weight()),
            SuffStats::Classifier(s) => s.prior_mass.iter().sum(),
            SuffStats::Mixture(s) => s.mass.iter().sum(),
            SuffStats::Hmm(s) => s.seq_weight,
            SuffStats::Ngram(s) => s.w_sum,
            SuffStats::Cpt(s) => s.w_sum,
            SuffStats::PairCounts(s) => s.w_sum,
        }
    }

    /// Training log-likelihood recorded during summarization, when the
    /// model kind computes one (EM models).
    pub fn log_likelihood(&self) -> Option<f64> {
        match self {
            SuffStats::Classifier(s) => s.log_likelihood,
            SuffStats::Mixture(s) => Some(s.log_likelihood),
            SuffStats::Hmm(s) => Some(s.log_likelihood),
            _ => None,
        }
    }

    /// Same-shape statistics with every accumulator zeroed: the merge
    /// identity.
    pub fn zero_like(&self) -> SuffStats {
        match self {
            SuffStats::Gaussian(_) => SuffStats::Gaussian(GaussianStats::default()),
            SuffStats::MvGaussian(s) => SuffStats::MvGaussian(MvGaussianStats {
                w_sum: 0.0,
                wx_sum: vec![0.0; s.wx_sum.len()],
                wxx_sum: vec![0.0; s.wxx_sum.len()],
                diagonal: s.diagonal,
            }),
            SuffStats::Categorical(s) => SuffStats::Categorical(CategoricalStats {
                counts: vec![0.0; s.counts.len()],
            }),
            SuffStats::Exponential(_) => SuffStats::Exponential(RateStats::default()),
            SuffStats::Poisson(_) => SuffStats::Poisson(RateStats::default()),
            SuffStats::Product(children) => {
                SuffStats::Product(children.iter().map(|c| c.zero_like()).collect())
            }
            SuffStats::Classifier(s) => SuffStats::Classifier(ClassifierStats {
                prior_mass: vec![0.0; s.prior_mass.len()],
                per_class: s.per_class.iter().map(|c| c.zero_like()).collect(),
                log_likelihood: s.log_likelihood.map(|_| 0.0),
            }),
            SuffStats::Mixture(s) => SuffStats::Mixture(MixtureStats {
                mass: vec![0.0; s.mass.len()],
                components: s.components.iter().map(|c| c.zero_like()).collect(),
                log_likelihood: 0.0,
                worst_row: None,
            }),
            SuffStats::Hmm(s) => SuffStats::Hmm(HmmStats {
                init_mass: vec![0.0; s.init_mass.len()],
                trans_mass: vec![0.0; s.trans_mass.len()],
                end_mass: s.end_mass.as_ref().map(|e| vec![0.0; e.len()]),
                emissions: s.emissions.iter().map(|c| c.zero_like()).collect(),
                log_likelihood: 0.0,
                seq_weight: 0.0,
            }),
            SuffStats::Ngram(s) => SuffStats::Ngram(NgramStats {
                order: s.order,
                alphabet: s.alphabet,
                initial_counts: vec![vec![0.0; s.alphabet]; s.order],
                transition_counts: BTreeMap::new(),
                w_sum: 0.0,
            }),
            SuffStats::Cpt(s) => SuffStats::Cpt(CptStats {
                counts: s
                    .counts
                    .iter()
                    .map(|t| t.iter().map(|r| vec![0.0; r.len()]).collect())
                    .collect(),
                w_sum: 0.0,
            }),
            SuffStats::PairCounts(s) => SuffStats::PairCounts(PairCountStats {
                cards: s.cards.clone(),
                singles: s.singles.iter().map(|v| vec![0.0; v.len()]).collect(),
                pairs: s.pairs.iter().map(|v| vec![0.0; v.len()]).collect(),
                w_sum: 0.0,
            }),
        }
    }

    /// Elementwise-add `other` into `self`.
    pub fn merge_from(&mut self, other: &SuffStats) -> Result<()> {
        match (self, other) {
            (SuffStats::Gaussian(a), SuffStats::Gaussian(b)) => {
                a.w_sum += b.w_sum;
                a.wx_sum += b.wx_sum;
                a.wx2_sum += b.wx2_sum;
                Ok(())
            }
            (SuffStats::MvGaussian(a), SuffStats::MvGaussian(b)) => {
                if a.diagonal != b.diagonal {
                    return Err(Error::ShapeMismatch(
                        "mixed diagonal and full covariance statistics".into(),
                    ));
                }
                a.w_sum += b.w_sum;
                add_vec(&mut a.wx_sum, &b.wx_sum, "wx_sum")?;
                add_vec(&mut a.wxx_sum, &b.wxx_sum, "wxx_sum")
            }
            (SuffStats::Categorical(a), SuffStats::Categorical(b)) => {
                add_vec(&mut a.counts, &b.counts, "category counts")
            }
            (SuffStats::Exponential(a), SuffStats::Exponential(b))
            | (SuffStats::Poisson(a), SuffStats::Poisson(b)) => {
                a.w_sum += b.w_sum;
                a.wx_sum += b.wx_sum;
                Ok(())
            }
            (SuffStats::Product(a), SuffStats::Product(b)) => {
                if a.len() != b.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "product arity: {} vs {}",
                        a.len(),
                        b.len()
                    )));
                }
                for (x, y) in a.iter_mut().zip(b) {
                    x.merge_from(y)?;
                }
                Ok(())
            }
            (SuffStats::Classifier(a), SuffStats::Classifier(b)) => {
                add_vec(&mut a.prior_mass, &b.prior_mass, "prior mass")?;
                if a.per_class.len() != b.per_class.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "class count: {} vs {}",
                        a.per_class.len(),
                        b.per_class.len()
                    )));
                }
                for (x, y) in a.per_class.iter_mut().zip(&b.per_class) {
                    x.merge_from(y)?;
                }
                a.log_likelihood = match (a.log_likelihood, b.log_likelihood) {
                    (None, None) => None,
                    (x, y) => Some(x.unwrap_or(0.0) + y.unwrap_or(0.0)),
                };
                Ok(())
            }
            (SuffStats::Mixture(a), SuffStats::Mixture(b)) => {
                add_vec(&mut a.mass, &b.mass, "component mass")?;
                if a.components.len() != b.components.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "component count: {} vs {}",
                        a.components.len(),
                        b.components.len()
                    )));
                }
                for (x, y) in a.components.iter_mut().zip(&b.components) {
                    x.merge_from(y)?;
                }
                a.log_likelihood += b.log_likelihood;
                a.worst_row = match (a.worst_row.take(), b.worst_row.clone()) {
                    (None, w) => w,
                    (w, None) => w,
                    (Some(x), Some(y)) => Some(if y.0 < x.0 { y } else { x }),
                };
                Ok(())
            }
            (SuffStats::Hmm(a), SuffStats::Hmm(b)) => {
                add_vec(&mut a.init_mass, &b.init_mass, "initial mass")?;
                add_vec(&mut a.trans_mass, &b.trans_mass, "transition mass")?;
                match (&mut a.end_mass, &b.end_mass) {
                    (Some(x), Some(y)) => add_vec(x, y, "end mass")?,
                    (None, None) => {}
                    _ => {
                        return Err(Error::ShapeMismatch(
                            "mixed end-state and no-end-state statistics".into(),
                        ))
                    }
                }
                if a.emissions.len() != b.emissions.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "state count: {} vs {}",
                        a.emissions.len(),
                        b.emissions.len()
                    )));
                }
                for (x, y) in a.emissions.iter_mut().zip(&b.emissions) {
                    x.merge_from(y)?;
                }
                a.log_likelihood += b.log_likelihood;
                a.seq_weight += b.seq_weight;
                Ok(())
            }
            (SuffStats::Ngram(a), SuffStats::Ngram(b)) => {
                if a.order != b.order || a.alphabet != b.alphabet {
                    return Err(Error::ShapeMismatch(format!(
                        "ngram shape: order {}/{} alphabet {}/{}",
                        a.order, b.order, a.alphabet, b.alphabet
                    )));
                }
                for (x, y) in a.initial_counts.iter_mut().zip(&b.initial_counts) {
                    add_vec(x, y, "initial counts")?;
                }
                for (ctx, counts) in &b.transition_counts {
                    let entry = a
                        .transition_counts
                        .entry(ctx.clone())
                        .or_insert_with(|| vec![0.0; a.alphabet]);
                    add_vec(entry, counts, "transition counts")?;
                }
                a.w_sum += b.w_sum;
                Ok(())
            }
            (SuffStats::Cpt(a), SuffStats::Cpt(b)) => {
                if a.counts.len() != b.counts.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "variable count: {} vs {}",
                        a.counts.len(),
                        b.counts.len()
                    )));
                }
                for (ta, tb) in a.counts.iter_mut().zip(&b.counts) {
                    if ta.len() != tb.len() {
                        return Err(Error::ShapeMismatch("CPT table shape".into()));
                    }
                    for (ra, rb) in ta.iter_mut().zip(tb) {
                        add_vec(ra, rb, "CPT row")?;
                    }
                }
                a.w_sum += b.w_sum;
                Ok(())
            }
            (SuffStats::PairCounts(a), SuffStats::PairCounts(b)) => {
                if a.cards != b.cards {
                    return Err(Error::ShapeMismatch("pair-count cardinalities".into()));
                }
                for (x, y) in a.singles.iter_mut().zip(&b.singles) {
                    add_vec(x, y, "single counts")?;
                }
                for (x, y) in a.pairs.iter_mut().zip(&b.pairs) {
                    add_vec(x, y, "pair counts")?;
                }
                a.w_sum += b.w_sum;
                Ok(())
            }
            (a, b) => Err(Error::StatsKindMismatch {
                left: a.kind(),
                right: b.kind(),
            }),
        }
    }

    /// `merge(a, b)` as a pure function.
    pub fn merged(&self, other: &SuffStats) -> Result<SuffStats> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }
}
