use std::cmp::Ordering;

use rand::Rng;

use crate::metrics::dominates;

/// Partitions indices into successive nondominated fronts.
pub fn fast_nondominated_sort(objectives: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&objectives[i], &objectives[j]) {
                dominated_by[i].push(j);
                counts[j] += 1;
            } else if dominates(&objectives[j], &objectives[i]) {
                dominated_by[j].push(i);
                counts[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                counts[j] -= 1;
                if counts[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front`, boundary points infinite.
pub fn crowding_distance(objectives: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = objectives[front[0]].len();
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..m {
        order.sort_by(|&a, &b| {
            objectives[front[a]][obj]
                .total_cmp(&objectives[front[b]][obj])
                .then(a.cmp(&b))
        });
        let lo = objectives[front[order[0]]][obj];
        let hi = objectives[front[order[n - 1]]][obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let gap = objectives[front[order[w + 1]]][obj] - objectives[front[order[w - 1]]][obj];
            dist[order[w]] += gap / span;
        }
    }
    dist
}

/// Rank and crowding of every individual.
#[derive(Debug, Clone)]
pub struct RankCrowding {
    pub rank: Vec<usize>,
    pub crowding: Vec<f64>,
}

impl RankCrowding {
    pub fn compute(objectives: &[Vec<f64>]) -> Self {
        let mut rank = vec![0; objectives.len()];
        let mut crowding = vec![0.0; objectives.len()];
        for (r, front) in fast_nondominated_sort(objectives).iter().enumerate() {
            for (&i, d) in front.iter().zip(crowding_distance(objectives, front)) {
                rank[i] = r;
                crowding[i] = d;
            }
        }
        RankCrowding { rank, crowding }
    }

    /// Lower rank first, then larger crowding, then lower index.
    pub fn compare(&self, a: usize, b: usize) -> Ordering {
        self.rank[a]
            .cmp(&self.rank[b])
            .then(self.crowding[b].total_cmp(&self.crowding[a]))
            .then(a.cmp(&b))
    }

    pub fn binary_tournament<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.rank.len();
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        match self.compare(a, b) {
            Ordering::Greater => b,
            _ => a,
        }
    }
}

/// Indices of the `n` survivors under rank-then-crowding truncation.
pub fn survive(objectives: &[Vec<f64>], n: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(n);
    for front in fast_nondominated_sort(objectives) {
        if chosen.len() + front.len() <= n {
            chosen.extend_from_slice(&front);
            if chosen.len() == n {
                break;
            }
            continue;
        }
        let dist = crowding_distance(objectives, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(front[a].cmp(&front[b])));
        let missing = n - chosen.len();
        chosen.extend(order.into_iter().take(missing).map(|i| front[i]));
        break;
    }
    chosen
}
