//! NSGA-II reference solver with encoding-matched variation operators.

pub mod operators;
pub mod sorting;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{FrontApproximation, MetricContext, MetricError};
use crate::problems::{random_genome, Category, Genome, ProblemError, ProblemInstance};

pub use sorting::{crowding_distance, fast_nondominated_sort, survive, RankCrowding};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub sbx_eta: f64,
    pub sbx_prob_var: f64,
    pub pm_eta: f64,
    /// Per-variable mutation rate; `None` means `1 / n_var`.
    pub pm_rate: Option<f64>,
    /// Per-bit flip rate; `None` means `1 / n_var`.
    pub bitflip_rate: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            population_size: 100,
            generations: 200,
            crossover_prob: 0.9,
            sbx_eta: 15.0,
            sbx_prob_var: 0.5,
            pm_eta: 20.0,
            pm_rate: None,
            bitflip_rate: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.population_size < 4 || self.population_size % 2 != 0 {
            return Err(SolverError::Config(format!(
                "population_size must be even and at least 4, got {}",
                self.population_size
            )));
        }
        if self.generations == 0 {
            return Err(SolverError::Config("generations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(SolverError::Config("crossover_prob must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Result of one solver run.
#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub front: FrontApproximation,
    /// Category indicator after initialization and after every generation.
    pub trace: Vec<f64>,
    pub population: Vec<Genome>,
    pub objectives: Vec<Vec<f64>>,
}

/// Runs NSGA-II and returns its final nondominated set and indicator trace.
pub fn nsga2_run<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    config: &SolverConfig,
    rng: &mut R,
) -> Result<SolverOutcome, SolverError> {
    nsga2_run_observed(instance, config, rng, |_, _| {})
}

/// As [`nsga2_run`], calling `observer(generation, population)` after
/// initialization (generation 0) and after each survival step.
pub fn nsga2_run_observed<R, F>(
    instance: &ProblemInstance,
    config: &SolverConfig,
    rng: &mut R,
    mut observer: F,
) -> Result<SolverOutcome, SolverError>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &[Genome]),
{
    config.validate()?;
    instance.validate()?;
    let metric = MetricContext::new(instance);
    let n = config.population_size;
    let mut population: Vec<Genome> = (0..n)
        .map(|_| {
            let mut g = random_genome(instance, rng);
            operators::rand_weight_repair(instance, &mut g, rng);
            g
        })
        .collect();
    let mut objectives = evaluate_all(instance, &population)?;
    let mut trace = vec![metric.measure(&objectives)?];
    observer(0, &population);

    for generation in 1..=config.generations {
        let ranking = RankCrowding::compute(&objectives);
        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = &population[ranking.binary_tournament(rng)];
            let b = &population[ranking.binary_tournament(rng)];
            let (c1, c2) = vary(instance, config, a, b, rng);
            offspring.push(c1);
            offspring.push(c2);
        }
        offspring.truncate(n);
        let offspring_obj = evaluate_all(instance, &offspring)?;

        population.extend(offspring);
        objectives.extend(offspring_obj);
        let keep = survive(&objectives, n);
        population = keep.iter().map(|&i| population[i].clone()).collect();
        objectives = keep.iter().map(|&i| objectives[i].clone()).collect();
        trace.push(metric.measure(&objectives)?);
        observer(generation, &population);
    }

    Ok(SolverOutcome {
        front: FrontApproximation::from_points(instance.id.clone(), &objectives),
        trace,
        population,
        objectives,
    })
}

fn evaluate_all(instance: &ProblemInstance, genomes: &[Genome]) -> Result<Vec<Vec<f64>>, ProblemError> {
    genomes
        .iter()
        .map(|g| instance.evaluate(g).map(|f| f.to_minimization()))
        .collect()
}

fn vary<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    config: &SolverConfig,
    a: &Genome,
    b: &Genome,
    rng: &mut R,
) -> (Genome, Genome) {
    let n_var = instance.n_var as f64;
    let cross = rng.gen::<f64>() < config.crossover_prob;
    match (a, b) {
        (Genome::Real(a), Genome::Real(b)) => {
            let (lower, upper) = instance.variable_bounds().expect("real-coded instance has bounds");
            let (mut c1, mut c2) = if cross {
                operators::sbx(a, b, &lower, &upper, config.sbx_eta, config.sbx_prob_var, rng)
            } else {
                (a.clone(), b.clone())
            };
            let rate = config.pm_rate.unwrap_or(1.0 / n_var);
            operators::polynomial_mutation(&mut c1, &lower, &upper, config.pm_eta, rate, rng);
            operators::polynomial_mutation(&mut c2, &lower, &upper, config.pm_eta, rate, rng);
            (Genome::Real(c1), Genome::Real(c2))
        }
        (Genome::Bits(a), Genome::Bits(b)) => {
            let (mut c1, mut c2) = if cross {
                operators::two_point_crossover(a, b, rng)
            } else {
                (a.clone(), b.clone())
            };
            let rate = config.bitflip_rate.unwrap_or(1.0 / n_var);
            operators::bitflip(&mut c1, rate, rng);
            operators::bitflip(&mut c2, rate, rng);
            let mut c1 = Genome::Bits(c1);
            let mut c2 = Genome::Bits(c2);
            if instance.category == Category::Mokp {
                operators::rand_weight_repair(instance, &mut c1, rng);
                operators::rand_weight_repair(instance, &mut c2, rng);
            }
            (c1, c2)
        }
        (Genome::Perm(a), Genome::Perm(b)) => {
            let (mut c1, mut c2) = if cross {
                (operators::order_crossover(a, b, rng), operators::order_crossover(b, a, rng))
            } else {
                (a.clone(), b.clone())
            };
            operators::inversion_mutation(&mut c1, rng);
            operators::inversion_mutation(&mut c2, rng);
            (Genome::Perm(c1), Genome::Perm(c2))
        }
        _ => unreachable!("population shares one encoding"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::dominates;
    use crate::problems::{generate_mokp, generate_motsp, Family};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> SolverConfig {
        SolverConfig {
            population_size: 20,
            generations: 10,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn config_invariants() {
        assert!(SolverConfig { population_size: 5, ..small() }.validate().is_err());
        assert!(SolverConfig { population_size: 2, ..small() }.validate().is_err());
        assert!(SolverConfig { generations: 0, ..small() }.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }

    #[test]
    fn single_generation_front_is_nondominated() {
        let z = ProblemInstance::cmop("z", Family::Zdt2, 30).unwrap();
        let cfg = SolverConfig { generations: 1, ..small() };
        let out = nsga2_run(&z, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for a in &out.front.points {
            assert!(!out.front.points.iter().any(|b| dominates(b, a)));
        }
        assert_eq!(out.trace.len(), 2);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let z = ProblemInstance::cmop("z", Family::Dtlz2, 12).unwrap();
        let a = nsga2_run(&z, &small(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let b = nsga2_run(&z, &small(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.population, b.population);
    }

    #[test]
    fn population_size_is_preserved() {
        let tsp = generate_motsp(15, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut sizes = Vec::new();
        nsga2_run_observed(&tsp, &small(), &mut ChaCha8Rng::seed_from_u64(3), |_, pop| sizes.push(pop.len())).unwrap();
        assert_eq!(sizes, vec![20; 11]);
    }

    #[test]
    fn knapsack_population_is_always_feasible() {
        let kp = generate_mokp(60, 2, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut all_feasible = true;
        let out = nsga2_run_observed(&kp, &small(), &mut ChaCha8Rng::seed_from_u64(4), |_, pop| {
            all_feasible &= pop.iter().all(|g| kp.feasible(g));
        })
        .unwrap();
        assert!(all_feasible);
        assert!(out.trace.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn zdt5_bitstrings_run() {
        let z = ProblemInstance::cmop("z5", Family::Zdt5, 50).unwrap();
        let out = nsga2_run(&z, &small(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert!(out.trace.iter().all(|v| v.is_finite()));
    }
}
