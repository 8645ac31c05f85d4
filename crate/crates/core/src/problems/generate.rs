use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Category, Family, ProblemError, ProblemInstance, SuiteRole, SuiteSpec};

const ITEM_VALUE_RANGE: std::ops::RangeInclusive<u64> = 10..=100;
const CMOP_TEST_N_VAR: usize = 50;

/// Seed of the fixed toy instances used for pilot runs.
pub const TOY_SEED: u64 = 0x70_79;

/// Random knapsack with integer weights and profits in [10, 100].
///
/// Capacity is half the total weight, raised to the heaviest item when
/// needed so every single item fits.
pub fn generate_mokp<R: Rng + ?Sized>(n_items: usize, k: usize, rng: &mut R) -> Result<ProblemInstance, ProblemError> {
    if n_items < 2 || k < 2 {
        return Err(ProblemError::InvalidInstance(format!(
            "knapsack needs n_items >= 2 and k >= 2, got {n_items} and {k}"
        )));
    }
    let weights: Vec<u64> = (0..n_items).map(|_| rng.gen_range(ITEM_VALUE_RANGE)).collect();
    let profits: Vec<Vec<u64>> = (0..k)
        .map(|_| (0..n_items).map(|_| rng.gen_range(ITEM_VALUE_RANGE)).collect())
        .collect();
    let total: u64 = weights.iter().sum();
    let heaviest = weights.iter().copied().max().unwrap_or(0);
    let capacity = ((total as f64) * 0.5).round() as u64;
    let capacity = capacity.max(heaviest);
    if capacity >= total {
        // Two items of identical weight: halving cannot bind and still fit both.
        return Err(ProblemError::InvalidInstance(format!(
            "capacity {capacity} cannot bind with total weight {total}"
        )));
    }
    ProblemInstance::mokp(format!("mokp-n{n_items}"), weights, profits, capacity)
}

/// Random bi- or multi-objective TSP from independent unit-square point sets.
pub fn generate_motsp<R: Rng + ?Sized>(n_cities: usize, k: usize, rng: &mut R) -> Result<ProblemInstance, ProblemError> {
    if n_cities < 3 || k < 2 {
        return Err(ProblemError::InvalidInstance(format!(
            "tsp needs n_cities >= 3 and k >= 2, got {n_cities} and {k}"
        )));
    }
    let distances = (0..k)
        .map(|_| {
            let pts: Vec<(f64, f64)> = (0..n_cities).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
            let mut d = vec![vec![0.0; n_cities]; n_cities];
            for u in 0..n_cities {
                for v in (u + 1)..n_cities {
                    let dist = (pts[u].0 - pts[v].0).hypot(pts[u].1 - pts[v].1);
                    d[u][v] = dist;
                    d[v][u] = dist;
                }
            }
            d
        })
        .collect();
    ProblemInstance::motsp(format!("motsp-n{n_cities}"), distances, false)
}

/// Builds the validation or testing suite for one category.
///
/// Every instance carries its own generator seed so it can be rebuilt alone.
pub fn make_suite<R: Rng + ?Sized>(category: Category, role: SuiteRole, rng: &mut R) -> Result<SuiteSpec, ProblemError> {
    let tag = match role {
        SuiteRole::Validation => "val",
        SuiteRole::Testing => "test",
        SuiteRole::Toy => "toy",
    };
    if role == SuiteRole::Toy {
        return Ok(toy_suite(category));
    }
    let mut instances = Vec::new();
    match category {
        Category::Cmop => {
            for family in Family::ALL {
                let n_var = match role {
                    SuiteRole::Validation => family.default_n_var(),
                    _ => CMOP_TEST_N_VAR,
                };
                instances.push(ProblemInstance::cmop(format!("{family}-{tag}"), family, n_var)?);
            }
        }
        Category::Mokp => {
            let (count, sizes) = match role {
                SuiteRole::Validation => (10, 50..=200),
                _ => (10, 100..=200),
            };
            for i in 0..count {
                let seed = rng.gen::<u64>();
                let mut sub = ChaCha8Rng::seed_from_u64(seed);
                let n = sub.gen_range(sizes.clone());
                let mut instance = generate_mokp(n, 2, &mut sub)?.with_seed(seed);
                instance.id = format!("mokp-{tag}-{i:02}");
                instances.push(instance);
            }
        }
        Category::Motsp => {
            let count = match role {
                SuiteRole::Validation => 20,
                _ => 10,
            };
            for i in 0..count {
                let seed = rng.gen::<u64>();
                let mut sub = ChaCha8Rng::seed_from_u64(seed);
                let n = match role {
                    SuiteRole::Validation => 30,
                    _ => sub.gen_range(100..=200),
                };
                let mut instance = generate_motsp(n, 2, &mut sub)?.with_seed(seed);
                instance.id = format!("motsp-{tag}-{i:02}");
                instances.push(instance);
            }
        }
    }
    Ok(SuiteSpec {
        category,
        role,
        instances,
    })
}

/// One small instance of the category, used for pilot runs.
pub fn toy_suite(category: Category) -> SuiteSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(TOY_SEED);
    let mut instance = match category {
        Category::Cmop => ProblemInstance::cmop("zdt1", Family::Zdt1, 10),
        Category::Mokp => generate_mokp(20, 2, &mut rng),
        Category::Motsp => generate_motsp(10, 2, &mut rng),
    }
    .expect("toy instances are valid by construction");
    instance.id = format!("{category}-toy");
    if category != Category::Cmop {
        instance.seed = Some(TOY_SEED);
    }
    SuiteSpec {
        category,
        role: SuiteRole::Toy,
        instances: vec![instance],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{random_genome, Genome, Payload};
    use std::collections::HashSet;

    #[test]
    fn mokp_generator_is_deterministic_and_binding() {
        let a = generate_mokp(50, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = generate_mokp(50, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let Payload::Mokp { weights, capacity, .. } = &a.payload else {
            panic!("not a knapsack")
        };
        let total: u64 = weights.iter().sum();
        let ratio = *capacity as f64 / total as f64;
        assert!((ratio - 0.5).abs() <= 0.5 / total as f64 + 1e-12, "ratio {ratio}");
        assert!(weights.iter().all(|w| (10..=100).contains(w)));
    }

    #[test]
    fn two_item_knapsack_keeps_heaviest_item_feasible() {
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if let Ok(kp) = generate_mokp(2, 2, &mut rng) {
                kp.validate().unwrap();
            }
        }
    }

    #[test]
    fn motsp_matrices_are_metric_like() {
        let tsp = generate_motsp(25, 2, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let Payload::Motsp { distances, closed_tour } = &tsp.payload else {
            panic!("not a tsp")
        };
        assert!(!closed_tour);
        for d in distances {
            for u in 0..25 {
                assert_eq!(d[u][u], 0.0);
                for v in 0..25 {
                    assert_eq!(d[u][v], d[v][u]);
                    assert!(d[u][v] <= std::f64::consts::SQRT_2);
                }
            }
        }
        let again = generate_motsp(25, 2, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!(tsp, again);
    }

    #[test]
    fn suite_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(make_suite(Category::Cmop, SuiteRole::Validation, &mut rng).unwrap().len(), 13);
        let tsp = make_suite(Category::Motsp, SuiteRole::Validation, &mut rng).unwrap();
        assert_eq!(tsp.len(), 20);
        assert!(tsp.instances.iter().all(|i| i.n_var == 30));
        let kp = make_suite(Category::Mokp, SuiteRole::Validation, &mut rng).unwrap();
        assert_eq!(kp.len(), 10);
        assert!(kp.instances.iter().all(|i| (50..=200).contains(&i.n_var)));
        let kp_test = make_suite(Category::Mokp, SuiteRole::Testing, &mut rng).unwrap();
        assert!(kp_test.instances.iter().all(|i| (100..=200).contains(&i.n_var)));
    }

    #[test]
    fn cmop_testing_suite_uses_fifty_slots() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let suite = make_suite(Category::Cmop, SuiteRole::Testing, &mut rng).unwrap();
        assert!(suite.instances.iter().all(|i| i.n_var == 50));
    }

    #[test]
    fn validation_and_testing_ids_are_disjoint() {
        for category in Category::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let val = make_suite(category, SuiteRole::Validation, &mut rng).unwrap();
            let test = make_suite(category, SuiteRole::Testing, &mut rng).unwrap();
            let ids: HashSet<_> = val.instances.iter().map(|i| i.id.clone()).collect();
            assert!(test.instances.iter().all(|i| !ids.contains(&i.id)));
            assert_eq!(ids.len(), val.len());
        }
    }

    #[test]
    fn suites_are_deterministic() {
        let a = make_suite(Category::Mokp, SuiteRole::Testing, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = make_suite(Category::Mokp, SuiteRole::Testing, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_cmop_family_evaluates_at_both_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for role in [SuiteRole::Validation, SuiteRole::Testing] {
            let suite = make_suite(Category::Cmop, role, &mut rng).unwrap();
            for instance in &suite.instances {
                for _ in 0..1000 {
                    let g = random_genome(instance, &mut rng);
                    let f = instance.evaluate(&g).unwrap();
                    assert_eq!(f.values.len(), instance.k);
                }
            }
        }
    }

    #[test]
    fn toy_suites_are_small() {
        assert_eq!(toy_suite(Category::Cmop).instances[0].n_var, 10);
        assert_eq!(toy_suite(Category::Mokp).instances[0].n_var, 20);
        assert_eq!(toy_suite(Category::Motsp).instances[0].n_var, 10);
        let kp = &toy_suite(Category::Mokp).instances[0];
        assert!(kp.feasible(&Genome::Bits(vec![false; 20])));
    }

    #[test]
    fn suite_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let suite = make_suite(Category::Motsp, SuiteRole::Validation, &mut ChaCha8Rng::seed_from_u64(4))
            .unwrap()
            .truncated(3);
        suite.save_dir(dir.path()).unwrap();
        assert_eq!(SuiteSpec::load_dir(dir.path()).unwrap(), suite);
    }
}
