//! Seeded synthetic interaction data.
//!
//! The two-block generator splits users and items into two communities with
//! interaction probability `p_in` inside a community and `p_out` across. Its
//! fixtures stand in for real datasets in tests and examples.

use rand::Rng;

use crate::dataset::InteractionDataset;
use crate::error::Result;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoBlockConfig {
    pub num_users: usize,
    pub num_items: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl TwoBlockConfig {
    /// The bundled 40 x 40 toy dataset (`data/toy.inter.tsv`).
    pub fn toy() -> Self {
        Self {
            num_users: 40,
            num_items: 40,
            p_in: 0.5,
            p_out: 0.02,
            seed: 11,
        }
    }

    /// 200 x 200 fixture used for spectral-correlation studies.
    pub fn spectral_fixture() -> Self {
        Self {
            num_users: 200,
            num_items: 200,
            p_in: 0.2,
            p_out: 0.02,
            seed: 17,
        }
    }

    fn block(index: usize, count: usize) -> usize {
        index * 2 / count
    }

    /// Samples the interactions. Every user ends up with at least one item.
    pub fn generate(&self) -> Result<InteractionDataset> {
        let mut rng = stream(self.seed, Stream::Synthetic);
        let mut pairs = Vec::new();
        for u in 0..self.num_users {
            let ub = Self::block(u, self.num_users);
            let start = pairs.len();
            for i in 0..self.num_items {
                let p = if Self::block(i, self.num_items) == ub {
                    self.p_in
                } else {
                    self.p_out
                };
                if rng.gen_bool(p) {
                    pairs.push((u as u32, i as u32));
                }
            }
            if pairs.len() == start && self.num_items > 0 {
                pairs.push((u as u32, rng.gen_range(0..self.num_items) as u32));
            }
        }
        InteractionDataset::from_indices(self.num_users, self.num_items, pairs)
    }
}

/// Erdos-Renyi bipartite interactions with edge probability `p`.
pub fn random_bipartite(num_users: usize, num_items: usize, p: f64, rng: &mut impl Rng) -> Result<InteractionDataset> {
    let mut pairs = Vec::new();
    for u in 0..num_users {
        for i in 0..num_items {
            if rng.gen_bool(p) {
                pairs.push((u as u32, i as u32));
            }
        }
    }
    InteractionDataset::from_indices(num_users, num_items, pairs)
}

/// Bipartite graph with exactly `edges` distinct random interactions.
pub fn random_bipartite_edges(
    num_users: usize,
    num_items: usize,
    edges: usize,
    rng: &mut impl Rng,
) -> Result<InteractionDataset> {
    let cap = num_users * num_items;
    let edges = edges.min(cap);
    let mut seen = std::collections::HashSet::with_capacity(edges);
    while seen.len() < edges {
        let u = rng.gen_range(0..num_users) as u32;
        let i = rng.gen_range(0..num_items) as u32;
        seen.insert((u, i));
    }
    let mut pairs: Vec<_> = seen.into_iter().collect();
    pairs.sort_unstable();
    InteractionDataset::from_indices(num_users, num_items, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let a = TwoBlockConfig::toy().generate().unwrap();
        let b = TwoBlockConfig::toy().generate().unwrap();
        assert_eq!(a.pairs(), b.pairs());
        assert!((0..a.num_users()).all(|u| !a.items_of(u).is_empty()));
    }

    #[test]
    fn blocks_are_dense_inside() {
        let ds = TwoBlockConfig::toy().generate().unwrap();
        let inside = ds
            .pairs()
            .iter()
            .filter(|(u, i)| (*u as usize * 2 / 40) == (*i as usize * 2 / 40))
            .count();
        assert!(inside as f64 > 0.8 * ds.len() as f64);
    }

    #[test]
    fn exact_edge_count() {
        let mut rng = stream(3, Stream::Synthetic);
        let ds = random_bipartite_edges(30, 40, 200, &mut rng).unwrap();
        assert_eq!(ds.len(), 200);
    }
}
