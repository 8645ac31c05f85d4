use rand::Rng;

use crate::problems::{Genome, ProblemInstance};

/// Bounded simulated binary crossover.
pub fn sbx<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    lower: &[f64],
    upper: &[f64],
    eta: f64,
    prob_var: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    for i in 0..a.len() {
        if rng.gen::<f64>() >= prob_var || (a[i] - b[i]).abs() <= 1e-14 {
            continue;
        }
        let (y1, y2) = if a[i] < b[i] { (a[i], b[i]) } else { (b[i], a[i]) };
        let (xl, xu) = (lower[i], upper[i]);
        let u = rng.gen::<f64>();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (y1 - xl) / (y2 - y1));
        let bq2 = spread(1.0 + 2.0 * (xu - y2) / (y2 - y1));
        let mut v1 = (0.5 * (y1 + y2 - bq1 * (y2 - y1))).clamp(xl, xu);
        let mut v2 = (0.5 * (y1 + y2 + bq2 * (y2 - y1))).clamp(xl, xu);
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut v1, &mut v2);
        }
        c1[i] = v1;
        c2[i] = v2;
    }
    (c1, c2)
}

/// Polynomial mutation applied independently to each variable with `rate`.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    x: &mut [f64],
    lower: &[f64],
    upper: &[f64],
    eta: f64,
    rate: f64,
    rng: &mut R,
) {
    let pow = 1.0 / (eta + 1.0);
    for i in 0..x.len() {
        if rng.gen::<f64>() >= rate {
            continue;
        }
        let (xl, xu) = (lower[i], upper[i]);
        let span = xu - xl;
        if span <= 0.0 {
            continue;
        }
        let y = x[i];
        let d1 = (y - xl) / span;
        let d2 = (xu - y) / span;
        let u = rng.gen::<f64>();
        let dq = if u <= 0.5 {
            let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        x[i] = (y + dq * span).clamp(xl, xu);
    }
}

/// Exchanges the segment between two distinct cut points.
pub fn two_point_crossover<T: Clone, R: Rng + ?Sized>(a: &[T], b: &[T], rng: &mut R) -> (Vec<T>, Vec<T>) {
    let n = a.len();
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    if n < 2 {
        return (c1, c2);
    }
    let mut i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    } else {
        std::mem::swap(&mut i, &mut j);
    }
    for k in i..j {
        c1[k] = b[k].clone();
        c2[k] = a[k].clone();
    }
    (c1, c2)
}

pub fn bitflip<R: Rng + ?Sized>(x: &mut [bool], rate: f64, rng: &mut R) {
    for bit in x.iter_mut() {
        if rng.gen::<f64>() < rate {
            *bit = !*bit;
        }
    }
}

/// Order crossover: keeps a slice of `a` and fills the rest in `b`'s order.
pub fn order_crossover<R: Rng + ?Sized>(a: &[usize], b: &[usize], rng: &mut R) -> Vec<usize> {
    let n = a.len();
    if n < 2 {
        return a.to_vec();
    }
    let mut i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n);
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    let mut child = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for k in i..=j {
        child[k] = a[k];
        used[a[k]] = true;
    }
    let mut pos = (j + 1) % n;
    for step in 0..n {
        let city = b[(j + 1 + step) % n];
        if used[city] {
            continue;
        }
        child[pos] = city;
        used[city] = true;
        pos = (pos + 1) % n;
    }
    child
}

/// Reverses a random contiguous segment.
pub fn inversion_mutation<R: Rng + ?Sized>(x: &mut [usize], rng: &mut R) {
    let n = x.len();
    if n < 2 {
        return;
    }
    let mut i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n);
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    x[i..=j].reverse();
}

/// Drops uniformly random selected items until the knapsack fits.
pub fn rand_weight_repair<R: Rng + ?Sized>(instance: &ProblemInstance, genome: &mut Genome, rng: &mut R) {
    while !instance.feasible(genome) {
        let Genome::Bits(bits) = genome else { return };
        let selected: Vec<usize> = (0..bits.len()).filter(|&j| bits[j]).collect();
        if selected.is_empty() {
            return;
        }
        bits[selected[rng.gen_range(0..selected.len())]] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::is_permutation;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn repair_leaves_feasible_genomes_alone() {
        let kp = ProblemInstance::mokp("kp", vec![2, 3, 4], vec![vec![1, 2, 3], vec![3, 2, 1]], 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g = Genome::Bits(vec![true, true, false]);
        rand_weight_repair(&kp, &mut g, &mut rng);
        assert_eq!(g, Genome::Bits(vec![true, true, false]));
    }

    #[test]
    fn repair_removes_items_until_feasible() {
        let kp = ProblemInstance::mokp("kp", vec![2, 3, 4], vec![vec![1, 2, 3], vec![3, 2, 1]], 5).unwrap();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = Genome::Bits(vec![true; 3]);
            rand_weight_repair(&kp, &mut g, &mut rng);
            assert!(kp.feasible(&g));
            let Genome::Bits(b) = g else { unreachable!() };
            assert!(b.iter().filter(|x| **x).count() < 3);
        }
    }

    #[test]
    fn order_crossover_yields_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let mut a: Vec<usize> = (0..30).collect();
            let mut b = a.clone();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            assert!(is_permutation(&order_crossover(&a, &b, &mut rng)));
        }
    }

    #[test]
    fn order_crossover_keeps_parent_slice() {
        let a: Vec<usize> = (0..8).collect();
        let b: Vec<usize> = (0..8).rev().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let child = order_crossover(&a, &b, &mut rng);
        // At least one position inherits from `a` verbatim.
        assert!(child.iter().enumerate().any(|(i, c)| *c == a[i]));
    }

    #[test]
    fn inversion_keeps_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut x: Vec<usize> = (0..30).collect();
        for _ in 0..100 {
            inversion_mutation(&mut x, &mut rng);
            assert!(is_permutation(&x));
        }
    }

    #[test]
    fn sbx_respects_bounds_and_identical_parents() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lo = vec![0.0; 10];
        let hi = vec![1.0; 10];
        for _ in 0..500 {
            let a: Vec<f64> = (0..10).map(|_| rng.gen()).collect();
            let b: Vec<f64> = (0..10).map(|_| rng.gen()).collect();
            let (c1, c2) = sbx(&a, &b, &lo, &hi, 15.0, 0.5, &mut rng);
            assert!(c1.iter().chain(&c2).all(|v| (0.0..=1.0).contains(v)));
        }
        let a = vec![0.3; 10];
        assert_eq!(sbx(&a, &a, &lo, &hi, 15.0, 1.0, &mut rng), (a.clone(), a));
    }

    #[test]
    fn sbx_preserves_mean_per_variable_without_clipping() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lo = vec![-100.0];
        let hi = vec![100.0];
        for _ in 0..100 {
            let (c1, c2) = sbx(&[0.4], &[0.6], &lo, &hi, 15.0, 1.0, &mut rng);
            assert!((c1[0] + c2[0] - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn polynomial_mutation_stays_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let lo = vec![-5.0; 5];
        let hi = vec![5.0; 5];
        for _ in 0..1000 {
            let mut x: Vec<f64> = (0..5).map(|_| rng.gen_range(-5.0..=5.0)).collect();
            polynomial_mutation(&mut x, &lo, &hi, 20.0, 1.0, &mut rng);
            assert!(x.iter().all(|v| (-5.0..=5.0).contains(v)));
        }
    }

    #[test]
    fn two_point_crossover_conserves_genes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = vec![true; 20];
        let b = vec![false; 20];
        for _ in 0..100 {
            let (c1, c2) = two_point_crossover(&a, &b, &mut rng);
            for k in 0..20 {
                assert_ne!(c1[k], c2[k]);
            }
            assert!(c1.iter().any(|x| !x));
        }
    }

    #[test]
    fn bitflip_rate_one_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut x = vec![true, false, true];
        bitflip(&mut x, 1.0, &mut rng);
        assert_eq!(x, vec![false, true, false]);
    }
}
