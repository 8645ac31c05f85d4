use rand::Rng;
use sha2::{Digest, Sha256};

use super::{EvolutionError, OperatorCandidate};

/// Floor applied to every selection probability before renormalizing.
pub const PROBABILITY_FLOOR: f64 = 1e-6;

/// Softmax of the scores, computed after subtracting the maximum.
pub fn selection_probabilities(scores: &[f64]) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Draws `n_s` distinct indices without replacement.
///
/// Each probability is raised to at least [`PROBABILITY_FLOOR`]; after each
/// draw the remaining weights are renormalized.
pub fn sample_parents<R: Rng + ?Sized>(probs: &[f64], n_s: usize, rng: &mut R) -> Result<Vec<usize>, EvolutionError> {
    if n_s > probs.len() {
        return Err(EvolutionError::Config(format!(
            "cannot sample {n_s} parents from a population of {}",
            probs.len()
        )));
    }
    let mut remaining: Vec<(usize, f64)> = probs
        .iter()
        .enumerate()
        .map(|(i, p)| (i, if p.is_finite() { p.max(PROBABILITY_FLOOR) } else { PROBABILITY_FLOOR }))
        .collect();
    let mut picked = Vec::with_capacity(n_s);
    for _ in 0..n_s {
        let total: f64 = remaining.iter().map(|(_, w)| w).sum();
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = remaining.len() - 1;
        for (pos, (_, w)) in remaining.iter().enumerate() {
            acc += w;
            if target < acc {
                chosen = pos;
                break;
            }
        }
        picked.push(remaining.remove(chosen).0);
    }
    Ok(picked)
}

/// True with probability `1 / n_ev`.
pub fn mutation_gate<R: Rng + ?Sized>(n_ev: usize, rng: &mut R) -> bool {
    rng.gen::<f64>() < 1.0 / n_ev as f64
}

/// Inserts `candidate`, keeps the population sorted by descending score and
/// truncates it to `n_ev`. Equal scores keep their admission order, so an
/// incumbent stays ahead of a newcomer with the same score.
///
/// Returns the newcomer's rank when it survives.
pub fn elitist_update(population: &mut Vec<OperatorCandidate>, candidate: OperatorCandidate, n_ev: usize) -> Option<usize> {
    let id = candidate.artifact.id.clone();
    population.push(candidate);
    population.sort_by(|a, b| b.score().total_cmp(&a.score()));
    population.truncate(n_ev);
    population.iter().position(|c| c.artifact.id == id)
}

/// Stable 64-bit seed for one (operator, instance) evaluation.
pub fn derive_seed(run_seed: u64, operator_id: &str, instance_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(run_seed.to_le_bytes());
    for part in [operator_id, instance_id] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
