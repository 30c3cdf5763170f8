#![allow(dead_code)]

use collat_core::{
    is_nash_equilibrium, random_network, CollateralMatrix, EdgeSet, InvestmentNetwork,
    RandomProfile, Rational,
};
use rand::Rng;

/// Every pure profile checked for equilibrium; true iff the only one is
/// all-cooperate.
pub fn unique_all_cooperate(net: &InvestmentNetwork, c: &CollateralMatrix) -> bool {
    let m = net.edge_count();
    assert!(m <= 16, "exhaustive oracle is limited to 16 edges");
    let full = (1u64 << m) - 1;
    (0..=full).all(|mask| {
        let ne = is_nash_equilibrium(net, c, &EdgeSet::from_mask(m, mask));
        ne == (mask == full)
    })
}

/// Collateral per edge drawn from zero, full, and a few fractions of `x`.
pub fn random_matrix(net: &InvestmentNetwork, rng: &mut impl Rng) -> CollateralMatrix {
    let values = net
        .edges()
        .iter()
        .map(|e| match rng.random_range(0..4) {
            0 => Rational::zero(),
            1 => e.amount.clone(),
            _ => &e.amount * Rational::new(rng.random_range(1..4), 4),
        })
        .collect();
    CollateralMatrix::new(net, values).unwrap()
}

/// Small cyclic networks with at most `max_edges` edges, one per seed offset.
pub fn small_networks(count: usize, max_edges: usize, base_seed: u64) -> Vec<InvestmentNetwork> {
    let mut out = Vec::with_capacity(count);
    let mut seed = base_seed;
    while out.len() < count {
        let profile = RandomProfile {
            n: 3 + (seed % 4) as usize,
            max_out_degree: 3,
            acyclic: seed.is_multiple_of(5),
            weight_range: (1, 4),
            large_alpha: seed.is_multiple_of(3),
            seed,
        };
        seed += 1;
        let net = random_network(&profile).unwrap();
        if net.edge_count() <= max_edges {
            out.push(net);
        }
    }
    out
}
