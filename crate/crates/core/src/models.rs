//! Offspring and lifetime laws, model files and the derived constants.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, gcd};

pub const NORMALIZATION_TOL: f64 = 1e-12;
pub const CRITICALITY_TOL: f64 = 1e-9;

/// Offspring distribution with finite support `0..=kmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    pmf: Vec<f64>,
    /// `tail[j] = P(xi > j)`
    tail: Vec<f64>,
    mean: f64,
    variance: f64,
    second_log_moment: f64,
    thresholds: Vec<u64>,
}

/// Converts a cumulative probability into a threshold for comparison with a
/// uniform `u64`.
fn cdf_threshold(cdf: f64) -> u64 {
    if cdf >= 1.0 {
        u64::MAX
    } else {
        // 2^64 * cdf, saturating
        (cdf * 18_446_744_073_709_551_616.0) as u64
    }
}

fn thresholds_from(pmf: &[f64]) -> Vec<u64> {
    let mut acc = 0.0;
    pmf.iter()
        .map(|&p| {
            acc += p;
            cdf_threshold(acc)
        })
        .collect()
}

/// Validates a probability vector: nonnegative entries, total mass within
/// [`NORMALIZATION_TOL`] of one. Returns the renormalized vector.
fn normalized(pmf: &[f64], what: &str) -> Result<Vec<f64>> {
    if pmf.is_empty() {
        return Err(Error::InvalidModel(format!("{what} pmf is empty")));
    }
    if let Some((k, p)) = pmf.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidModel(format!("{what} pmf entry {k} = {p} is not a probability")));
    }
    let total = compensated_sum(pmf.iter().copied());
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidModel(format!(
            "{what} pmf sums to {total}, residual mass {} exceeds {NORMALIZATION_TOL:e}",
            1.0 - total
        )));
    }
    Ok(pmf.iter().map(|p| p / total).collect())
}

impl OffspringLaw {
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }
    pub fn mean(&self) -> f64 {
        self.mean
    }
    pub fn variance(&self) -> f64 {
        self.variance
    }
    /// `E xi^2 log(xi + 1)`.
    pub fn second_log_moment(&self) -> f64 {
        self.second_log_moment
    }
    pub fn max_offspring(&self) -> usize {
        self.pmf.len() - 1
    }

    /// `f(s) = E s^xi`.
    pub fn pgf(&self, s: f64) -> f64 {
        self.pmf.iter().rev().fold(0.0, |acc, &p| acc * s + p)
    }

    /// `1 - f(1 - q)`, evaluated as `q * sum_j (1-q)^j P(xi > j)` so that
    /// every term is nonnegative.
    pub fn pgf_complement(&self, q: f64) -> f64 {
        let s = 1.0 - q;
        q * self.tail.iter().rev().fold(0.0, |acc, &p| acc * s + p)
    }

    /// `f^{(j)}(u)` for `j = 0..=order`.
    pub fn pgf_derivatives(&self, u: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        // Horner on successive derivative coefficients.
        let mut coeffs = self.pmf.clone();
        for slot in out.iter_mut() {
            if coeffs.is_empty() {
                break;
            }
            *slot = coeffs.iter().rev().fold(0.0, |acc, &p| acc * u + p);
            coeffs = coeffs.iter().enumerate().skip(1).map(|(m, &c)| c * m as f64).collect();
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let x = rng.next_u64();
        let last = self.thresholds.len() - 1;
        for (k, &thr) in self.thresholds[..last].iter().enumerate() {
            if x < thr {
                return k as u32;
            }
        }
        last as u32
    }
}

/// Builds and validates an offspring law from a truncated pmf.
pub fn make_offspring(pmf: &[f64]) -> Result<OffspringLaw> {
    let pmf = normalized(pmf, "offspring")?;
    let mean = compensated_sum(pmf.iter().enumerate().map(|(k, p)| k as f64 * p));
    if (mean - 1.0).abs() > CRITICALITY_TOL {
        return Err(Error::InvalidModel(format!(
            "offspring mean {mean} differs from 1 (process is not critical)"
        )));
    }
    let second = compensated_sum(pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p));
    let variance = second - mean * mean;
    if !(variance > CRITICALITY_TOL) {
        return Err(Error::InvalidModel(format!("offspring variance {variance} is not positive")));
    }
    let second_log_moment = compensated_sum(
        pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * (k as f64 + 1.0).ln() * p),
    );
    let mut tail = vec![0.0; pmf.len()];
    let mut acc = 0.0;
    for j in (0..pmf.len()).rev() {
        tail[j] = acc;
        acc += pmf[j];
    }
    let thresholds = thresholds_from(&pmf);
    Ok(OffspringLaw { pmf, tail, mean, variance, second_log_moment, thresholds })
}

#[derive(Debug, Clone, PartialEq)]
pub enum LifetimeLaw {
    /// `pmf[l - 1] = P(tau = l)` for `l = 1..=lmax`.
    Lattice { pmf: Vec<f64>, thresholds: Vec<u64> },
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
}

impl LifetimeLaw {
    pub fn is_lattice(&self) -> bool {
        matches!(self, LifetimeLaw::Lattice { .. })
    }

    pub fn mean(&self) -> f64 {
        match self {
            LifetimeLaw::Lattice { pmf, .. } => {
                compensated_sum(pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p))
            }
            LifetimeLaw::Exponential { rate } => 1.0 / rate,
            LifetimeLaw::Uniform { a, b } => 0.5 * (a + b),
        }
    }

    pub fn third_moment(&self) -> f64 {
        match self {
            LifetimeLaw::Lattice { pmf, .. } => {
                compensated_sum(pmf.iter().enumerate().map(|(i, p)| ((i + 1) as f64).powi(3) * p))
            }
            LifetimeLaw::Exponential { rate } => 6.0 / rate.powi(3),
            LifetimeLaw::Uniform { a, b } => (b.powi(4) - a.powi(4)) / (4.0 * (b - a)),
        }
    }

    /// `G(x) = P(tau <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            LifetimeLaw::Lattice { pmf, .. } => {
                let n = (x.floor() as usize).min(pmf.len());
                compensated_sum(pmf[..n].iter().copied()).min(1.0)
            }
            LifetimeLaw::Exponential { rate } => -(-rate * x).exp_m1(),
            LifetimeLaw::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
        }
    }

    /// `1 - G(x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match self {
            LifetimeLaw::Lattice { pmf, .. } => {
                let n = (x.floor() as usize).min(pmf.len());
                compensated_sum(pmf[n..].iter().copied()).min(1.0)
            }
            LifetimeLaw::Exponential { rate } => (-rate * x).exp(),
            LifetimeLaw::Uniform { .. } => 1.0 - self.cdf(x),
        }
    }

    /// Lattice pmf `(g_1, ..., g_lmax)`, or `None` for continuous laws.
    pub fn lattice_pmf(&self) -> Option<&[f64]> {
        match self {
            LifetimeLaw::Lattice { pmf, .. } => Some(pmf),
            _ => None,
        }
    }

    /// Largest possible lifetime, if bounded.
    pub fn max_lifetime(&self) -> Option<f64> {
        match self {
            LifetimeLaw::Lattice { pmf, .. } => Some(pmf.len() as f64),
            LifetimeLaw::Exponential { .. } => None,
            LifetimeLaw::Uniform { b, .. } => Some(*b),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LifetimeLaw::Lattice { thresholds, .. } => {
                let x = rng.next_u64();
                let last = thresholds.len() - 1;
                for (i, &thr) in thresholds[..last].iter().enumerate() {
                    if x < thr {
                        return (i + 1) as f64;
                    }
                }
                (last + 1) as f64
            }
            LifetimeLaw::Exponential { rate } => {
                let u: f64 = rng.sample(Open01);
                -u.ln() / rate
            }
            LifetimeLaw::Uniform { a, b } => {
                let u: f64 = rng.sample(Open01);
                a + (b - a) * u
            }
        }
    }
}

/// Serialized lifetime description, as found in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LifetimeSpec {
    /// Keys are lattice points (positive integers), values their masses.
    Lattice {
        #[serde(with = "lattice_keys")]
        pmf: BTreeMap<u32, f64>,
    },
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
}

/// JSON object keys are strings; inside an internally tagged enum serde
/// cannot coerce them to integers on its own.
mod lattice_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<u32, f64>, s: S) -> Result<S::Ok, S::Error> {
        let named: BTreeMap<String, f64> = map.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        named.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, f64>, D::Error> {
        let named = BTreeMap::<String, f64>::deserialize(d)?;
        named
            .into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<u32>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("lattice point '{k}' is not a nonnegative integer")))
            })
            .collect()
    }
}

impl LifetimeSpec {
    /// gcd of the lattice support; `None` for continuous laws.
    pub fn lattice_span(&self) -> Option<u64> {
        match self {
            LifetimeSpec::Lattice { pmf } => Some(
                pmf.iter().filter(|(_, p)| **p > 0.0).fold(0, |g, (l, _)| gcd(g, *l as u64)),
            ),
            _ => None,
        }
    }

    pub fn lattice_atoms(&self) -> Option<usize> {
        match self {
            LifetimeSpec::Lattice { pmf } => Some(pmf.values().filter(|p| **p > 0.0).count()),
            _ => None,
        }
    }
}

/// Builds a lifetime law. A single-atom lattice law is refused unless
/// `oracle_mode` is set; a lattice span above one is always refused.
pub fn make_lifetime(spec: &LifetimeSpec, oracle_mode: bool) -> Result<LifetimeLaw> {
    match spec {
        LifetimeSpec::Lattice { pmf } => {
            if pmf.contains_key(&0) {
                return Err(Error::InvalidModel("lattice lifetimes must be positive".into()));
            }
            let lmax = *pmf.keys().next_back().ok_or_else(|| {
                Error::InvalidModel("lattice lifetime pmf is empty".into())
            })? as usize;
            let mut dense = vec![0.0; lmax];
            for (&l, &p) in pmf {
                dense[l as usize - 1] = p;
            }
            let dense = normalized(&dense, "lifetime")?;
            // trailing zero atoms would make lmax misleading
            let last_positive = dense.iter().rposition(|p| *p > 0.0).unwrap_or(0);
            let dense = dense[..=last_positive].to_vec();
            let span = spec.lattice_span().unwrap_or(0);
            if span > 1 {
                return Err(Error::InvalidModel(format!(
                    "lattice lifetime has span {span} > 1 (maximal step must be 1)"
                )));
            }
            if spec.lattice_atoms() == Some(1) && !oracle_mode {
                return Err(Error::InvalidModel(
                    "lattice lifetime is degenerate (single atom); allowed only in oracle mode".into(),
                ));
            }
            let thresholds = thresholds_from(&dense);
            Ok(LifetimeLaw::Lattice { pmf: dense, thresholds })
        }
        LifetimeSpec::Exponential { rate } => {
            if !(rate.is_finite() && *rate > 0.0) {
                return Err(Error::InvalidModel(format!("exponential rate {rate} must be positive")));
            }
            Ok(LifetimeLaw::Exponential { rate: *rate })
        }
        LifetimeSpec::Uniform { a, b } => {
            if !(a.is_finite() && b.is_finite() && *a >= 0.0 && a < b) {
                return Err(Error::InvalidModel(format!("uniform({a}, {b}) needs 0 <= a < b")));
            }
            Ok(LifetimeLaw::Uniform { a: *a, b: *b })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelConstants {
    pub mu: f64,
    pub sigma2: f64,
    /// `sigma2 / (2 mu)`
    pub b: f64,
    pub is_lattice: bool,
}

pub fn constants(offspring: &OffspringLaw, lifetime: &LifetimeLaw) -> ModelConstants {
    let mu = lifetime.mean();
    let sigma2 = offspring.variance();
    ModelConstants { mu, sigma2, b: sigma2 / (2.0 * mu), is_lattice: lifetime.is_lattice() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffspringSpec {
    pub pmf: Vec<f64>,
}

/// Model file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub offspring: OffspringSpec,
    pub lifetime: LifetimeSpec,
    #[serde(default)]
    pub oracle_mode: bool,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<Model> {
        let offspring = make_offspring(&self.offspring.pmf)?;
        let lifetime = make_lifetime(&self.lifetime, self.oracle_mode)?;
        Ok(Model::new(offspring, lifetime, self.oracle_mode))
    }
}

/// Reference models used throughout the tests and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// Binary splitting `(1/2, 0, 1/2)`, lifetimes uniform on `{1, 2}`.
    BinLat,
    /// Geometric(1/2) offspring truncated at 60, exponential(1) lifetimes.
    GeoExp,
    /// Geometric offspring with unit lifetimes: a Galton-Watson process.
    GeoDet,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::BinLat, Builtin::GeoExp, Builtin::GeoDet];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::BinLat => "bin-lat",
            Builtin::GeoExp => "geo-exp",
            Builtin::GeoDet => "geo-det",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn spec(self) -> ModelSpec {
        let geometric: Vec<f64> = (0..=60).map(|k| 0.5f64.powi(k + 1)).collect();
        match self {
            Builtin::BinLat => ModelSpec {
                offspring: OffspringSpec { pmf: vec![0.5, 0.0, 0.5] },
                lifetime: LifetimeSpec::Lattice { pmf: BTreeMap::from([(1, 0.5), (2, 0.5)]) },
                oracle_mode: false,
            },
            Builtin::GeoExp => ModelSpec {
                offspring: OffspringSpec { pmf: geometric },
                lifetime: LifetimeSpec::Exponential { rate: 1.0 },
                oracle_mode: false,
            },
            Builtin::GeoDet => ModelSpec {
                offspring: OffspringSpec { pmf: geometric },
                lifetime: LifetimeSpec::Lattice { pmf: BTreeMap::from([(1, 1.0)]) },
                oracle_mode: true,
            },
        }
    }

    pub fn model(self) -> Model {
        self.spec().build().expect("builtin models are valid")
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated model: offspring law, lifetime law and derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub offspring: OffspringLaw,
    pub lifetime: LifetimeLaw,
    pub oracle_mode: bool,
    constants: ModelConstants,
}

impl Model {
    pub fn new(offspring: OffspringLaw, lifetime: LifetimeLaw, oracle_mode: bool) -> Self {
        let constants = constants(&offspring, &lifetime);
        Model { offspring, lifetime, oracle_mode, constants }
    }

    pub fn constants(&self) -> ModelConstants {
        self.constants
    }

    pub fn b(&self) -> f64 {
        self.constants.b
    }

    /// Lattice pmf or an `Unsupported` error naming the operation.
    pub fn require_lattice(&self, op: &str) -> Result<&[f64]> {
        self.lifetime
            .lattice_pmf()
            .ok_or_else(|| Error::Unsupported(format!("{op} requires a lattice lifetime law")))
    }
}

/// Loads a model from `builtin:<name>` or a JSON file path.
pub fn load_model_spec(reference: &str) -> Result<ModelSpec> {
    if let Some(name) = reference.strip_prefix("builtin:") {
        return Builtin::from_name(name)
            .map(Builtin::spec)
            .ok_or_else(|| Error::InvalidModel(format!("unknown builtin model '{name}'")));
    }
    let text = std::fs::read_to_string(Path::new(reference))?;
    ModelSpec::from_json(&text)
}
