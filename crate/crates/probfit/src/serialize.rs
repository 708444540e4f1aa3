//! Versioned JSON model documents.
//!
//! Every model serializes to {"format_version": 1, "type": ..., "payload":
//! ...}. Documents are canonical: keys are emitted in sorted order and
//! floats use the shortest round-trip representation, so
//! serialize → deserialize → serialize is byte-identical. Loading goes
//! back through each model's validating constructor, so a tampered
//! document fails with an error naming the violated invariant.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::bayesnet::{DiscreteBayesianNetwork, Variable};
use crate::classifiers::{BayesClassifier, ClassDist};
use crate::distributions::{
    Categorical, CovarianceMode, Distribution, Exponential, MultivariateGaussian, Poisson,
    UnivariateGaussian,
};
use crate::error::{Error, Result};
use crate::hmm::HiddenMarkovModel;
use crate::kmeans::KMeansModel;
use crate::markovchain::MarkovChain;
use crate::mixture::GeneralMixtureModel;

pub const FORMAT_VERSION: u64 = 1;

/// Any serializable model in the library.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Distribution(Distribution),
    KMeans(KMeansModel),
    BayesClassifier(BayesClassifier),
    Mixture(GeneralMixtureModel),
    Hmm(HiddenMarkovModel),
    MarkovChain(MarkovChain),
    BayesNet(DiscreteBayesianNetwork),
}

fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| json!(x)).collect())
}

fn matrix(rows: &[Vec<f64>]) -> Value {
    Value::Array(rows.iter().map(|r| reals(r)).collect())
}

fn distribution_value(d: &Distribution) -> Value {
    let parameters = match d {
        Distribution::Gaussian(g) => json!([g.mu, g.sigma2]),
        Distribution::MultivariateGaussian(m) => {
            let mode = match m.mode() {
                CovarianceMode::Full => "full",
                CovarianceMode::Diagonal => "diagonal",
            };
            json!([reals(m.mean()), reals(m.covariance()), mode])
        }
        Distribution::Categorical(c) => json!([reals(c.probs())]),
        Distribution::Exponential(e) => json!([e.rate]),
        Distribution::Poisson(p) => json!([p.lambda]),
    };
    json!({ "type": d.family_name(), "parameters": parameters })
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::InvalidDocument(format!("{} must be a number", what)))
}

fn as_f64_vec(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::InvalidDocument(format!("{} must be an array", what)))?
        .iter()
        .map(|x| as_f64(x, what))
        .collect()
}

fn as_f64_matrix(v: &Value, what: &str) -> Result<Vec<Vec<f64>>> {
    v.as_array()
        .ok_or_else(|| Error::InvalidDocument(format!("{} must be an array", what)))?
        .iter()
        .map(|row| as_f64_vec(row, what))
        .collect()
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::InvalidDocument(format!("missing field {:?}", key)))
}

fn distribution_from_value(v: &Value) -> Result<Distribution> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::InvalidDocument("distribution must be an object".into()))?;
    let name = field(obj, "type")?
        .as_str()
        .ok_or_else(|| Error::InvalidDocument("distribution type must be a string".into()))?;
    let params = field(obj, "parameters")?
        .as_array()
        .ok_or_else(|| Error::InvalidDocument("parameters must be an array".into()))?;
    let arity = |n: usize| -> Result<()> {
        if params.len() != n {
            return Err(Error::InvalidDocument(format!(
                "{} takes {} parameters, got {}",
                name,
                n,
                params.len()
            )));
        }
        Ok(())
    };
    match name {
        "UnivariateGaussian" => {
            arity(2)?;
            Ok(Distribution::Gaussian(UnivariateGaussian::new(
                as_f64(&params[0], "mu")?,
                as_f64(&params[1], "sigma2")?,
            )?))
        }
        "MultivariateGaussian" => {
            arity(3)?;
            let mean = as_f64_vec(&params[0], "mean")?;
            let cov = as_f64_vec(&params[1], "covariance")?;
            let mode = match params[2].as_str() {
                Some("full") => CovarianceMode::Full,
                Some("diagonal") => CovarianceMode::Diagonal,
                _ => {
                    return Err(Error::InvalidDocument(
                        "covariance mode must be \"full\" or \"diagonal\"".into(),
                    ))
                }
            };
            Ok(Distribution::MultivariateGaussian(
                MultivariateGaussian::new(mean, cov, mode)?,
            ))
        }
        "Categorical" => {
            arity(1)?;
            Ok(Distribution::Categorical(Categorical::new(as_f64_vec(
                &params[0],
                "probs",
            )?)?))
        }
        "Exponential" => {
            arity(1)?;
            Ok(Distribution::Exponential(Exponential::new(as_f64(
                &params[0], "rate",
            )?)?))
        }
        "Poisson" => {
            arity(1)?;
            Ok(Distribution::Poisson(Poisson::new(as_f64(
                &params[0], "lambda",
            )?)?))
        }
        other => Err(Error::UnknownModelType(other.to_string())),
    }
}

fn model_payload(model: &Model) -> (&'static str, Value) {
    match model {
        Model::Distribution(d) => ("Distribution", distribution_value(d)),
        Model::KMeans(km) => ("KMeans", json!({ "centroids": matrix(&km.centroids) })),
        Model::BayesClassifier(c) => {
            let distributions: Vec<Value> = c
                .class_dists()
                .iter()
                .map(|cd| match cd {
                    ClassDist::Naive(feats) => {
                        Value::Array(feats.iter().map(distribution_value).collect())
                    }
                    ClassDist::Joint(d) => distribution_value(d),
                })
                .collect();
            (
                "BayesClassifier",
                json!({
                    "naive": c.is_naive(),
                    "priors": reals(c.priors()),
                    "distributions": distributions,
                }),
            )
        }
        Model::Mixture(m) => (
            "GeneralMixtureModel",
            json!({
                "weights": reals(m.weights()),
                "distributions": m.components().iter().map(distribution_value).collect::<Vec<_>>(),
            }),
        ),
        Model::Hmm(h) => (
            "HiddenMarkovModel",
            json!({
                "initial": reals(&h.initial()),
                "transitions": matrix(&h.transitions()),
                "ends": h.ends().map(|e| reals(&e)).unwrap_or(Value::Null),
                "emissions": h.emissions().iter().map(distribution_value).collect::<Vec<_>>(),
            }),
        ),
        Model::MarkovChain(mc) => {
            let transitions: Map<String, Value> = mc
                .transitions()
                .iter()
                .map(|(ctx, probs)| {
                    let key = ctx
                        .iter()
                        .map(|s| s.to_string())
                        .collect::<Vec<_>>()
                        .join(",");
                    (key, reals(probs))
                })
                .collect();
            (
                "MarkovChain",
                json!({
                    "order": mc.order(),
                    "alphabet": mc.alphabet(),
                    "initials": matrix(mc.initials()),
                    "transitions": transitions,
                }),
            )
        }
        Model::BayesNet(bn) => (
            "BayesianNetwork",
            json!({
                "variables": bn.variables().iter().map(|v| json!({
                    "name": v.name,
                    "cardinality": v.cardinality,
                })).collect::<Vec<_>>(),
                "parents": bn.parents(),
                "cpts": bn.cpts().iter().map(|t| matrix(t)).collect::<Vec<_>>(),
            }),
        ),
    }
}

/// Serializes a model as canonical single-line JSON.
pub fn serialize_model(model: &Model) -> String {
    let (type_tag, payload) = model_payload(model);
    let doc = json!({
        "format_version": FORMAT_VERSION,
        "type": type_tag,
        "payload": payload,
    });
    serde_json::to_string(&doc).expect("JSON maps of plain values cannot fail to serialize")
}

fn classifier_from_payload(payload: &Map<String, Value>) -> Result<BayesClassifier> {
    let naive = field(payload, "naive")?
        .as_bool()
        .ok_or_else(|| Error::InvalidDocument("naive must be a boolean".into()))?;
    let priors = as_f64_vec(field(payload, "priors")?, "priors")?;
    let dists = field(payload, "distributions")?
        .as_array()
        .ok_or_else(|| Error::InvalidDocument("distributions must be an array".into()))?;
    let class_dists: Vec<ClassDist> = dists
        .iter()
        .map(|v| {
            if naive {
                let feats = v
                    .as_array()
                    .ok_or_else(|| {
                        Error::InvalidDocument(
                            "naive class entries must be arrays of distributions".into(),
                        )
                    })?
                    .iter()
                    .map(distribution_from_value)
                    .collect::<Result<_>>()?;
                Ok(ClassDist::Naive(feats))
            } else {
                Ok(ClassDist::Joint(distribution_from_value(v)?))
            }
        })
        .collect::<Result<_>>()?;
    BayesClassifier::new(priors, class_dists)
}

fn markov_chain_from_payload(payload: &Map<String, Value>) -> Result<MarkovChain> {
    let order = field(payload, "order")?
        .as_u64()
        .ok_or_else(|| Error::InvalidDocument("order must be an integer".into()))?
        as usize;
    let alphabet = field(payload, "alphabet")?
        .as_u64()
        .ok_or_else(|| Error::InvalidDocument("alphabet must be an integer".into()))?
        as usize;
    let initials = as_f64_matrix(field(payload, "initials")?, "initials")?;
    let raw = field(payload, "transitions")?
        .as_object()
        .ok_or_else(|| Error::InvalidDocument("transitions must be an object".into()))?;
    let mut transitions = BTreeMap::new();
    for (key, probs) in raw {
        let ctx: Vec<u32> = key
            .split(',')
            .map(|s| {
                s.parse::<u32>().map_err(|_| {
                    Error::InvalidDocument(format!("bad transition context key {:?}", key))
                })
            })
            .collect::<Result<_>>()?;
        transitions.insert(ctx, as_f64_vec(probs, "transition probabilities")?);
    }
    MarkovChain::new(order, alphabet, initials, transitions)
}

fn bayesnet_from_payload(payload: &Map<String, Value>) -> Result<DiscreteBayesianNetwork> {
    let variables = field(payload, "variables")?
        .as_array()
        .ok_or_else(|| Error::InvalidDocument("variables must be an array".into()))?
        .iter()
        .map(|v| {
            let obj = v
                .as_object()
                .ok_or_else(|| Error::InvalidDocument("variable must be an object".into()))?;
            let name = field(obj, "name")?
                .as_str()
                .ok_or_else(|| Error::InvalidDocument("variable name must be a string".into()))?;
            let cardinality = field(obj, "cardinality")?
                .as_u64()
                .ok_or_else(|| {
                    Error::InvalidDocument("cardinality must be an integer".into())
                })? as usize;
            Ok(Variable::new(name, cardinality))
        })
        .collect::<Result<_>>()?;
    let parents = field(payload, "parents")?
        .as_array()
        .ok_or_else(|| Error::InvalidDocument("parents must be an array".into()))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| Error::InvalidDocument("parent lists must be arrays".into()))?
                .iter()
                .map(|p| {
                    p.as_u64().map(|x| x as usize).ok_or_else(|| {
                        Error::InvalidDocument("parent ids must be integers".into())
                    })
                })
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<_>>()?;
    let cpts = field(payload, "cpts")?
        .as_array()
        .ok_or_else(|| Error::InvalidDocument("cpts must be an array".into()))?
        .iter()
        .map(|t| as_f64_matrix(t, "cpt"))
        .collect::<Result<_>>()?;
    DiscreteBayesianNetwork::new(variables, parents, cpts)
}

/// Parses and validates a model document.
pub fn deserialize_model(text: &str) -> Result<Model> {
    let doc: Value = serde_json::from_str(text)?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::InvalidDocument("document must be a JSON object".into()))?;
    let version = field(obj, "format_version")?
        .as_u64()
        .ok_or_else(|| Error::InvalidDocument("format_version must be an integer".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let type_tag = field(obj, "type")?
        .as_str()
        .ok_or_else(|| Error::InvalidDocument("type must be a string".into()))?;
    let payload = field(obj, "payload")?;
    let payload_obj = || -> Result<&Map<String, Value>> {
        payload
            .as_object()
            .ok_or_else(|| Error::InvalidDocument("payload must be an object".into()))
    };

    match type_tag {
        "Distribution" => Ok(Model::Distribution(distribution_from_value(payload)?)),
        "KMeans" => {
            let centroids = as_f64_matrix(field(payload_obj()?, "centroids")?, "centroids")?;
            if centroids.is_empty() {
                return Err(Error::InvalidDocument(
                    "a k-means model needs at least one centroid".into(),
                ));
            }
            let d = centroids[0].len();
            if centroids.iter().any(|c| c.len() != d) {
                return Err(Error::InvalidDocument(
                    "centroids must share a dimension".into(),
                ));
            }
            Ok(Model::KMeans(KMeansModel { centroids }))
        }
        "BayesClassifier" => Ok(Model::BayesClassifier(classifier_from_payload(
            payload_obj()?,
        )?)),
        "GeneralMixtureModel" => {
            let p = payload_obj()?;
            let weights = as_f64_vec(field(p, "weights")?, "weights")?;
            let components = field(p, "distributions")?
                .as_array()
                .ok_or_else(|| {
                    Error::InvalidDocument("distributions must be an array".into())
                })?
                .iter()
                .map(distribution_from_value)
                .collect::<Result<_>>()?;
            Ok(Model::Mixture(GeneralMixtureModel::new(
                weights, components,
            )?))
        }
        "HiddenMarkovModel" => {
            let p = payload_obj()?;
            let initial = as_f64_vec(field(p, "initial")?, "initial")?;
            let transitions = as_f64_matrix(field(p, "transitions")?, "transitions")?;
            let ends = match field(p, "ends")? {
                Value::Null => None,
                v => Some(as_f64_vec(v, "ends")?),
            };
            let emissions = field(p, "emissions")?
                .as_array()
                .ok_or_else(|| Error::InvalidDocument("emissions must be an array".into()))?
                .iter()
                .map(distribution_from_value)
                .collect::<Result<_>>()?;
            Ok(Model::Hmm(HiddenMarkovModel::new(
                initial,
                transitions,
                ends,
                emissions,
            )?))
        }
        "MarkovChain" => Ok(Model::MarkovChain(markov_chain_from_payload(
            payload_obj()?,
        )?)),
        "BayesianNetwork" => Ok(Model::BayesNet(bayesnet_from_payload(payload_obj()?)?)),
        other => Err(Error::UnknownModelType(other.to_string())),
    }
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serialize_model(model) + "\n")?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let text = std::fs::read_to_string(path)?;
    deserialize_model(&text)
}
