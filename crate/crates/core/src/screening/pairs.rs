use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use crate::data::{Dataset, EffectIndex};
use crate::error::{Error, Result};

use super::kernel::{scan_pairs, PairVisitor, ResponseMoments};

/// Effects kept by all-pairs screening, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectSet {
    pub effects: Vec<EffectIndex>,
    pub scores: Vec<f64>,
}

impl EffectSet {
    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn contains(&self, e: EffectIndex) -> bool {
        self.effects.contains(&e)
    }

    /// Variables appearing in any retained effect.
    pub fn variables(&self) -> BTreeSet<usize> {
        self.effects
            .iter()
            .flat_map(|e| [e.j, e.k])
            .filter(|&v| v != 0)
            .collect()
    }

    /// Retained interactions whose parent main effects are not both retained.
    pub fn orphaned_interactions(&self) -> Vec<EffectIndex> {
        let mains: BTreeSet<usize> = self
            .effects
            .iter()
            .filter(|e| e.is_main())
            .map(|e| e.k)
            .collect();
        self.effects
            .iter()
            .filter(|e| !e.is_main() && !(mains.contains(&e.j) && mains.contains(&e.k)))
            .copied()
            .collect()
    }

    pub fn is_hierarchy_complete(&self) -> bool {
        self.orphaned_interactions().is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Ranked {
    score: f64,
    effect: EffectIndex,
}

// `Greater` means worse, so a max-heap keeps the worst retained effect on top.
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.effect.cmp(&other.effect))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

struct TopEffects {
    d: usize,
    heap: BinaryHeap<Ranked>,
}

impl TopEffects {
    fn push(&mut self, r: Ranked) {
        if self.heap.len() < self.d {
            self.heap.push(r);
        } else if let Some(worst) = self.heap.peek() {
            if r < *worst {
                self.heap.pop();
                self.heap.push(r);
            }
        }
    }
}

impl PairVisitor for TopEffects {
    fn visit(&mut self, j: usize, k: usize, cor: f64) {
        self.push(Ranked {
            score: cor.abs(),
            effect: EffectIndex { j, k },
        });
    }

    fn merge(&mut self, other: Self) {
        for r in other.heap {
            self.push(r);
        }
    }
}

/// Top `d` effects `(j, k)`, `0 <= j < k <= p`, by `|cor(x_j ∘ x_k, y)|`,
/// ties by lexicographic `(j, k)`.
pub fn all_pairs_sis(ds: &Dataset, d: usize, workers: usize) -> Result<EffectSet> {
    if d == 0 {
        return Err(Error::InvalidGamma("d must be at least 1".into()));
    }
    let out = scan_pairs(ds, ResponseMoments::pearson(ds.y()), workers, || TopEffects {
        d,
        heap: BinaryHeap::with_capacity(d + 1),
    });
    let ranked = out.visitor.heap.into_sorted_vec();
    Ok(EffectSet {
        effects: ranked.iter().map(|r| r.effect).collect(),
        scores: ranked.iter().map(|r| r.score).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{interaction_column, pearson, standardize, Family};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        standardize(&y, &x, p, Family::Gaussian).unwrap()
    }

    #[test]
    fn budget_above_candidate_count_keeps_all() {
        let ds = random_dataset(12, 2, 1);
        let s = all_pairs_sis(&ds, 3, 1).unwrap();
        let mut e = s.effects.clone();
        e.sort();
        assert_eq!(
            e,
            vec![EffectIndex::main(1), EffectIndex::main(2), EffectIndex::pair(1, 2)]
        );
        assert_eq!(all_pairs_sis(&ds, 10, 1).unwrap().len(), 3);
    }

    #[test]
    fn exact_interaction_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 30;
        let x: Vec<f64> = (0..n * 4).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ramp: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let ds0 = standardize(&ramp, &x, 4, Family::Gaussian).unwrap();
        let y: Vec<f64> = (0..n).map(|i| ds0.column(1)[i] * ds0.column(2)[i]).collect();
        let ds = standardize(&y, ds0.x(), 4, Family::Gaussian).unwrap();
        let s = all_pairs_sis(&ds, 1, 1).unwrap();
        assert_eq!(s.effects, vec![EffectIndex::pair(1, 2)]);
        assert!(!s.is_hierarchy_complete());
    }

    #[test]
    fn matches_exhaustive_ranking() {
        let ds = random_dataset(20, 5, 3);
        let mut all: Vec<(f64, EffectIndex)> = Vec::new();
        for k in 1..=5 {
            for j in 0..k {
                let e = EffectIndex::new(j, k).unwrap();
                let z = interaction_column(&ds, e).unwrap();
                all.push((pearson(&z, ds.y()).unwrap().abs(), e));
            }
        }
        all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for d in [1, 4, 9, 15] {
            let s = all_pairs_sis(&ds, d, 2).unwrap();
            let expect: Vec<EffectIndex> = all.iter().take(d).map(|t| t.1).collect();
            assert_eq!(s.effects, expect, "d={d}");
            for (a, b) in s.scores.iter().zip(&all) {
                assert!((a - b.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_across_workers() {
        let ds = random_dataset(25, 200, 4);
        let a = all_pairs_sis(&ds, 50, 1).unwrap();
        let b = all_pairs_sis(&ds, 50, 5).unwrap();
        assert_eq!(a, b);
    }
}
