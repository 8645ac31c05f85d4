//! Benchmark problem families, solution encodings and suite builders.
//!
//! Three categories are supported: continuous benchmark families (ZDT/DTLZ),
//! the multi-objective 0/1 knapsack, and the multi-objective travelling
//! salesman problem with open (default) or closed tours.

mod cmop;
mod generate;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cmop::{zdt5_substrings, Family, ZDT5_HEAD_BITS, ZDT5_TAIL_BITS};
pub use generate::{generate_mokp, generate_motsp, make_suite, toy_suite, TOY_SEED};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("encoding mismatch: instance expects {expected}, genome is {found}")]
    EncodingMismatch { expected: Encoding, found: Encoding },
    #[error("genome length {found} does not match n_var {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("variable {index} = {value} lies outside [{lower}, {upper}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("genome is not a permutation of 0..{0}")]
    InvalidPermutation(usize),
    #[error("{family} produced a non-finite objective value")]
    NonFinite { family: String },
    #[error("unknown benchmark family `{0}`")]
    UnknownFamily(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("reference fronts exist only for continuous benchmark families")]
    NotCmop,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("instance serialization: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("instance io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Cmop,
    Mokp,
    Motsp,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Cmop, Category::Mokp, Category::Motsp];

    pub fn name(self) -> &'static str {
        match self {
            Category::Cmop => "cmop",
            Category::Mokp => "mokp",
            Category::Motsp => "motsp",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cmop" => Ok(Category::Cmop),
            "mokp" => Ok(Category::Mokp),
            "motsp" => Ok(Category::Motsp),
            _ => Err(ProblemError::UnknownCategory(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Real,
    Bitstring,
    Permutation,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Real => "real",
            Encoding::Bitstring => "bitstring",
            Encoding::Permutation => "permutation",
        })
    }
}

/// A candidate solution in one of the three encodings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", content = "values", rename_all = "lowercase")]
pub enum Genome {
    Real(Vec<f64>),
    Bits(Vec<bool>),
    Perm(Vec<usize>),
}

impl Genome {
    pub fn encoding(&self) -> Encoding {
        match self {
            Genome::Real(_) => Encoding::Real,
            Genome::Bits(_) => Encoding::Bitstring,
            Genome::Perm(_) => Encoding::Permutation,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Genome::Real(v) => v.len(),
            Genome::Bits(v) => v.len(),
            Genome::Perm(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Wire form: reals as numbers, bits as 0/1, permutation entries as integers.
    pub fn to_wire(&self) -> Vec<serde_json::Value> {
        match self {
            Genome::Real(v) => v.iter().map(|x| serde_json::Value::from(*x)).collect(),
            Genome::Bits(v) => v.iter().map(|b| serde_json::Value::from(u8::from(*b))).collect(),
            Genome::Perm(v) => v.iter().map(|i| serde_json::Value::from(*i as u64)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Minimize,
    Maximize,
}

/// Objective values on the problem's native scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub values: Vec<f64>,
    pub orientation: Orientation,
}

impl ObjectiveVector {
    /// Values with maximization objectives negated.
    pub fn to_minimization(&self) -> Vec<f64> {
        match self.orientation {
            Orientation::Minimize => self.values.clone(),
            Orientation::Maximize => self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// Per-objective (ideal, nadir) estimates, stored in minimization orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds {
    pub ideal: Vec<f64>,
    pub nadir: Vec<f64>,
}

impl ObjectiveBounds {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.ideal.len() != self.nadir.len() {
            return Err(ProblemError::InvalidInstance("ideal/nadir length mismatch".into()));
        }
        for (i, (lo, hi)) in self.ideal.iter().zip(&self.nadir).enumerate() {
            if !(lo < hi) {
                return Err(ProblemError::InvalidInstance(format!(
                    "objective {i}: ideal {lo} is not below nadir {hi}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    Cmop {
        family: Family,
    },
    Mokp {
        weights: Vec<u64>,
        /// `profits[i][j]`: profit of item `j` under objective `i`.
        profits: Vec<Vec<u64>>,
        capacity: u64,
    },
    Motsp {
        /// One symmetric distance matrix per objective.
        distances: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        closed_tour: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub id: String,
    pub category: Category,
    pub encoding: Encoding,
    pub n_var: usize,
    pub k: usize,
    pub payload: Payload,
    pub bounds: ObjectiveBounds,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Number of samples used to derive CMOP objective bounds from the front.
const CMOP_BOUND_SAMPLES: usize = 1000;

impl ProblemInstance {
    pub fn cmop(id: impl Into<String>, family: Family, n_var: usize) -> Result<Self, ProblemError> {
        family.check_n_var(n_var)?;
        let front = family.reference_front(n_var, CMOP_BOUND_SAMPLES);
        let k = family.objectives();
        let mut ideal = vec![f64::INFINITY; k];
        let mut nadir = vec![f64::NEG_INFINITY; k];
        for p in &front {
            for i in 0..k {
                ideal[i] = ideal[i].min(p[i]);
                nadir[i] = nadir[i].max(p[i]);
            }
        }
        let instance = ProblemInstance {
            id: id.into(),
            category: Category::Cmop,
            encoding: if family.is_binary() {
                Encoding::Bitstring
            } else {
                Encoding::Real
            },
            n_var,
            k,
            payload: Payload::Cmop { family },
            bounds: ObjectiveBounds { ideal, nadir },
            seed: None,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn mokp(
        id: impl Into<String>,
        weights: Vec<u64>,
        profits: Vec<Vec<u64>>,
        capacity: u64,
    ) -> Result<Self, ProblemError> {
        let k = profits.len();
        let ideal = profits.iter().map(|row| -(row.iter().sum::<u64>() as f64)).collect();
        let instance = ProblemInstance {
            id: id.into(),
            category: Category::Mokp,
            encoding: Encoding::Bitstring,
            n_var: weights.len(),
            k,
            payload: Payload::Mokp {
                weights,
                profits,
                capacity,
            },
            bounds: ObjectiveBounds {
                ideal,
                nadir: vec![0.0; k],
            },
            seed: None,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn motsp(
        id: impl Into<String>,
        distances: Vec<Vec<Vec<f64>>>,
        closed_tour: bool,
    ) -> Result<Self, ProblemError> {
        let k = distances.len();
        let n = distances.first().map(Vec::len).unwrap_or(0);
        let edges = if closed_tour { n } else { n.saturating_sub(1) };
        let instance = ProblemInstance {
            id: id.into(),
            category: Category::Motsp,
            encoding: Encoding::Permutation,
            n_var: n,
            k,
            payload: Payload::Motsp {
                distances,
                closed_tour,
            },
            bounds: ObjectiveBounds {
                ideal: vec![0.0; k],
                nadir: vec![edges as f64 * std::f64::consts::SQRT_2; k],
            },
            seed: None,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn family(&self) -> Option<Family> {
        match self.payload {
            Payload::Cmop { family } => Some(family),
            _ => None,
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self.category {
            Category::Mokp => Orientation::Maximize,
            _ => Orientation::Minimize,
        }
    }

    /// Variable box of real-coded instances.
    pub fn variable_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match (&self.payload, self.encoding) {
            (Payload::Cmop { family }, Encoding::Real) => family.variable_bounds(self.n_var),
            _ => None,
        }
    }

    /// Checks every structural invariant of the instance.
    pub fn validate(&self) -> Result<(), ProblemError> {
        let bad = |msg: String| Err(ProblemError::InvalidInstance(msg));
        if self.id.is_empty() {
            return bad("empty id".into());
        }
        if self.n_var == 0 || self.k < 2 {
            return bad(format!("n_var = {}, k = {}", self.n_var, self.k));
        }
        if self.bounds.ideal.len() != self.k {
            return bad("bounds length differs from k".into());
        }
        self.bounds.validate()?;
        match &self.payload {
            Payload::Cmop { family } => {
                if self.category != Category::Cmop || family.objectives() != self.k {
                    return bad(format!("{family} payload inconsistent with header"));
                }
                let expected = if family.is_binary() {
                    Encoding::Bitstring
                } else {
                    Encoding::Real
                };
                if self.encoding != expected {
                    return bad(format!("{family} requires {expected} encoding"));
                }
                family.check_n_var(self.n_var)?;
            }
            Payload::Mokp {
                weights,
                profits,
                capacity,
            } => {
                if self.category != Category::Mokp || self.encoding != Encoding::Bitstring {
                    return bad("knapsack payload inconsistent with header".into());
                }
                if weights.len() != self.n_var || profits.len() != self.k {
                    return bad("knapsack dimensions inconsistent".into());
                }
                if profits.iter().any(|row| row.len() != self.n_var) {
                    return bad("profit row length differs from item count".into());
                }
                if weights.iter().any(|w| *w == 0) || profits.iter().flatten().any(|p| *p == 0) {
                    return bad("weights and profits must be positive".into());
                }
                let max_w = weights.iter().copied().max().unwrap_or(0);
                let total: u64 = weights.iter().sum();
                if *capacity < max_w || *capacity >= total {
                    return bad(format!(
                        "capacity {capacity} must satisfy max weight {max_w} <= C < total {total}"
                    ));
                }
            }
            Payload::Motsp { distances, .. } => {
                if self.category != Category::Motsp || self.encoding != Encoding::Permutation {
                    return bad("tsp payload inconsistent with header".into());
                }
                if distances.len() != self.k || self.n_var < 2 {
                    return bad("tsp dimensions inconsistent".into());
                }
                for (i, d) in distances.iter().enumerate() {
                    if d.len() != self.n_var || d.iter().any(|row| row.len() != self.n_var) {
                        return bad(format!("distance matrix {i} is not {0}x{0}", self.n_var));
                    }
                    for u in 0..self.n_var {
                        if d[u][u] != 0.0 {
                            return bad(format!("matrix {i} has nonzero diagonal at {u}"));
                        }
                        for v in 0..self.n_var {
                            if !(d[u][v] >= 0.0 && d[u][v].is_finite()) || d[u][v] != d[v][u] {
                                return bad(format!("matrix {i} is not symmetric nonnegative at ({u},{v})"));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks that `genome` has the right encoding, length and domain.
    pub fn validate_genome(&self, genome: &Genome) -> Result<(), ProblemError> {
        if genome.encoding() != self.encoding {
            return Err(ProblemError::EncodingMismatch {
                expected: self.encoding,
                found: genome.encoding(),
            });
        }
        if genome.len() != self.n_var {
            return Err(ProblemError::LengthMismatch {
                expected: self.n_var,
                found: genome.len(),
            });
        }
        match genome {
            Genome::Real(x) => {
                let (lower, upper) = self.variable_bounds().expect("real-coded instance has bounds");
                for (index, v) in x.iter().enumerate() {
                    if !(lower[index] <= *v && *v <= upper[index]) {
                        return Err(ProblemError::OutOfBounds {
                            index,
                            value: *v,
                            lower: lower[index],
                            upper: upper[index],
                        });
                    }
                }
            }
            Genome::Perm(p) => {
                if !is_permutation(p) {
                    return Err(ProblemError::InvalidPermutation(self.n_var));
                }
            }
            Genome::Bits(_) => {}
        }
        Ok(())
    }

    /// Objective values of `genome`.
    ///
    /// Knapsack profits are returned whether or not the selection fits; use
    /// [`ProblemInstance::feasible`] for the capacity check.
    pub fn evaluate(&self, genome: &Genome) -> Result<ObjectiveVector, ProblemError> {
        self.validate_genome(genome)?;
        let values = match (&self.payload, genome) {
            (Payload::Cmop { family }, Genome::Real(x)) => family.evaluate_real(x),
            (Payload::Cmop { family }, Genome::Bits(x)) => family.evaluate_bits(x),
            (Payload::Mokp { profits, .. }, Genome::Bits(x)) => profits
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(x)
                        .filter(|(_, take)| **take)
                        .map(|(p, _)| *p as f64)
                        .sum()
                })
                .collect(),
            (
                Payload::Motsp {
                    distances,
                    closed_tour,
                },
                Genome::Perm(p),
            ) => distances
                .iter()
                .map(|d| {
                    let open: f64 = p.windows(2).map(|w| d[w[0]][w[1]]).sum();
                    if *closed_tour {
                        open + d[p[p.len() - 1]][p[0]]
                    } else {
                        open
                    }
                })
                .collect(),
            _ => unreachable!("validate_genome checked the encoding"),
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite {
                family: self
                    .family()
                    .map(|f| f.name().to_string())
                    .unwrap_or_else(|| self.category.to_string()),
            });
        }
        Ok(ObjectiveVector {
            values,
            orientation: self.orientation(),
        })
    }

    /// Capacity check; non-knapsack instances are unconstrained.
    pub fn feasible(&self, genome: &Genome) -> bool {
        match (&self.payload, genome) {
            (Payload::Mokp { capacity, .. }, Genome::Bits(_)) => self.total_weight(genome) <= *capacity,
            _ => true,
        }
    }

    /// Total selected weight for knapsack genomes, zero otherwise.
    pub fn total_weight(&self, genome: &Genome) -> u64 {
        match (&self.payload, genome) {
            (Payload::Mokp { weights, .. }, Genome::Bits(x)) => weights
                .iter()
                .zip(x)
                .filter(|(_, take)| **take)
                .map(|(w, _)| *w)
                .sum(),
            _ => 0,
        }
    }

    /// Samples of the analytic Pareto front (continuous families only).
    pub fn reference_front(&self, n_points: usize) -> Result<Vec<ObjectiveVector>, ProblemError> {
        let family = self.family().ok_or(ProblemError::NotCmop)?;
        Ok(family
            .reference_front(self.n_var, n_points)
            .into_iter()
            .map(|values| ObjectiveVector {
                values,
                orientation: Orientation::Minimize,
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String, ProblemError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates an instance.
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        let instance: ProblemInstance = serde_json::from_str(text)?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn load(path: &Path) -> Result<Self, ProblemError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Uniform sample over the instance's encoding space.
pub fn random_genome<R: Rng + ?Sized>(instance: &ProblemInstance, rng: &mut R) -> Genome {
    match instance.encoding {
        Encoding::Real => {
            let (lower, upper) = instance.variable_bounds().expect("real-coded instance has bounds");
            Genome::Real(
                lower
                    .iter()
                    .zip(&upper)
                    .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
                    .collect(),
            )
        }
        Encoding::Bitstring => Genome::Bits((0..instance.n_var).map(|_| rng.gen_bool(0.5)).collect()),
        Encoding::Permutation => {
            let mut p: Vec<usize> = (0..instance.n_var).collect();
            p.shuffle(rng);
            Genome::Perm(p)
        }
    }
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &i in p {
        if i >= p.len() || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteRole {
    Validation,
    Testing,
    Toy,
}

impl fmt::Display for SuiteRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuiteRole::Validation => "validation",
            SuiteRole::Testing => "testing",
            SuiteRole::Toy => "toy",
        })
    }
}

impl FromStr for SuiteRole {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "validation" => Ok(SuiteRole::Validation),
            "testing" => Ok(SuiteRole::Testing),
            "toy" => Ok(SuiteRole::Toy),
            _ => Err(ProblemError::InvalidInstance(format!("unknown suite role `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub category: Category,
    pub role: SuiteRole,
    pub instances: Vec<ProblemInstance>,
}

impl SuiteSpec {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Keeps only the first `n` instances.
    pub fn truncated(mut self, n: usize) -> Self {
        self.instances.truncate(n);
        self
    }

    /// Writes `suite.json` (header plus ordered ids) and one file per instance.
    pub fn save_dir(&self, dir: &Path) -> Result<(), ProblemError> {
        std::fs::create_dir_all(dir)?;
        let header = SuiteHeader {
            category: self.category,
            role: self.role,
            instances: self.instances.iter().map(|i| i.id.clone()).collect(),
        };
        std::fs::write(dir.join("suite.json"), serde_json::to_string_pretty(&header)?)?;
        for instance in &self.instances {
            std::fs::write(dir.join(format!("{}.json", instance.id)), instance.to_json()?)?;
        }
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self, ProblemError> {
        let header: SuiteHeader = serde_json::from_str(&std::fs::read_to_string(dir.join("suite.json"))?)?;
        let instances = header
            .instances
            .iter()
            .map(|id| ProblemInstance::load(&dir.join(format!("{id}.json"))))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(bad) = instances.iter().find(|i| i.category != header.category) {
            return Err(ProblemError::InvalidInstance(format!(
                "{} is {} but the suite is {}",
                bad.id, bad.category, header.category
            )));
        }
        Ok(SuiteSpec {
            category: header.category,
            role: header.role,
            instances,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SuiteHeader {
    category: Category,
    role: SuiteRole,
    instances: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_knapsack(capacity: u64) -> ProblemInstance {
        ProblemInstance::mokp("kp", vec![2, 3, 4], vec![vec![1, 2, 3], vec![3, 2, 1]], capacity).unwrap()
    }

    #[test]
    fn knapsack_profit_sums() {
        let kp = small_knapsack(5);
        let all = Genome::Bits(vec![true, true, true]);
        assert_eq!(kp.evaluate(&all).unwrap().values, vec![6.0, 6.0]);
        let none = Genome::Bits(vec![false; 3]);
        assert_eq!(kp.evaluate(&none).unwrap().values, vec![0.0, 0.0]);
    }

    #[test]
    fn knapsack_feasibility() {
        let kp = small_knapsack(5);
        assert!(kp.feasible(&Genome::Bits(vec![true, true, false])));
        assert!(!kp.feasible(&Genome::Bits(vec![true, true, true])));
        let zdt1 = ProblemInstance::cmop("z", Family::Zdt1, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(zdt1.feasible(&random_genome(&zdt1, &mut rng)));
    }

    #[test]
    fn capacity_must_bind() {
        // C = 9 equals the total weight, so the constraint never binds.
        assert!(ProblemInstance::mokp("kp", vec![2, 3, 4], vec![vec![1, 2, 3], vec![3, 2, 1]], 9).is_err());
        // C = 3 is below the heaviest item.
        assert!(ProblemInstance::mokp("kp", vec![2, 3, 4], vec![vec![1, 2, 3], vec![3, 2, 1]], 3).is_err());
    }

    #[test]
    fn zdt1_all_zero() {
        let zdt1 = ProblemInstance::cmop("z", Family::Zdt1, 30).unwrap();
        let f = zdt1.evaluate(&Genome::Real(vec![0.0; 30])).unwrap();
        assert_eq!(f.values, vec![0.0, 1.0]);
    }

    fn three_city(closed: bool) -> ProblemInstance {
        let d1 = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]];
        let d2 = vec![vec![0.0, 5.0, 1.0], vec![5.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        ProblemInstance::motsp("tsp", vec![d1, d2], closed).unwrap()
    }

    #[test]
    fn open_tour_sums_consecutive_edges() {
        let tsp = three_city(false);
        let f = tsp.evaluate(&Genome::Perm(vec![0, 1, 2])).unwrap();
        assert_eq!(f.values[0], 3.0);
        let closed = three_city(true);
        assert_eq!(closed.evaluate(&Genome::Perm(vec![0, 1, 2])).unwrap().values[0], 6.0);
    }

    #[test]
    fn encoding_mismatch_is_reported() {
        let kp = small_knapsack(5);
        let err = kp.evaluate(&Genome::Real(vec![0.0; 3])).unwrap_err();
        assert!(matches!(err, ProblemError::EncodingMismatch { .. }));
        let tsp = three_city(false);
        assert!(matches!(
            tsp.evaluate(&Genome::Perm(vec![0, 0, 2])),
            Err(ProblemError::InvalidPermutation(3))
        ));
        let zdt1 = ProblemInstance::cmop("z", Family::Zdt1, 30).unwrap();
        assert!(matches!(
            zdt1.evaluate(&Genome::Real(vec![1.5; 30])),
            Err(ProblemError::OutOfBounds { index: 0, .. })
        ));
    }

    #[test]
    fn random_genome_is_deterministic() {
        let tsp = generate_motsp(30, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let a = random_genome(&tsp, &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_genome(&tsp, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        match a {
            Genome::Perm(p) => {
                assert_eq!(p.len(), 30);
                assert!(is_permutation(&p));
            }
            other => panic!("expected permutation, got {other:?}"),
        }
    }

    #[test]
    fn random_bits_are_fair() {
        let kp = generate_mokp(50, 2, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let ones = (0..10_000)
            .filter(|_| match random_genome(&kp, &mut rng) {
                Genome::Bits(b) => b[0],
                _ => unreachable!(),
            })
            .count();
        let frac = ones as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&frac), "fraction of ones {frac}");
    }

    #[test]
    fn instance_json_round_trip() {
        let kp = generate_mokp(60, 2, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(ProblemInstance::from_json(&kp.to_json().unwrap()).unwrap(), kp);
        let tsp = generate_motsp(12, 2, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(ProblemInstance::from_json(&tsp.to_json().unwrap()).unwrap(), tsp);
        let dtlz = ProblemInstance::cmop("d", Family::Dtlz7, 22).unwrap();
        assert_eq!(ProblemInstance::from_json(&dtlz.to_json().unwrap()).unwrap(), dtlz);
    }

    #[test]
    fn corrupted_json_fails_validation() {
        let kp = small_knapsack(5);
        let text = kp.to_json().unwrap().replace("\"capacity\": 5", "\"capacity\": 100");
        assert!(ProblemInstance::from_json(&text).is_err());
    }

    #[test]
    fn reference_front_requires_cmop() {
        assert!(matches!(small_knapsack(5).reference_front(10), Err(ProblemError::NotCmop)));
    }
}
