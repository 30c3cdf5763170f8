//! Instance generators: the three-enterprise cycle family, the feedback
//! vertex set gadget, the inverse-knapsack star, and seeded random networks.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::InstanceError;
use crate::model::{InvestmentNetwork, NetworkBuilder};
use crate::rational::Rational;
use crate::star_solver::StarInstance;

/// Largest item count [`inverse_knapsack_brute`] enumerates.
pub const KNAPSACK_BRUTE_LIMIT: usize = 20;

/// Enterprises `A`, `B`, `C` investing in each other around a cycle with
/// weight 1, each with spikes of weight 1 and `k`; `Z = k + 1`, `alpha = 2k`.
/// The optimum costs `k + 5` while each star alone costs 2.
pub fn gen_cycle_family(k: i64) -> Result<InvestmentNetwork, InstanceError> {
    if k < 3 {
        return Err(InstanceError::Parameter(format!(
            "cycle family needs k >= 3, got {k}"
        )));
    }
    let names = ["A", "B", "C"];
    let mut b = NetworkBuilder::new();
    for v in names {
        b = b.enterprise(v, k + 1, 2 * k);
    }
    for (j, v) in names.iter().enumerate() {
        b = b.edge(v, names[(j + 1) % 3], 1);
    }
    for v in names {
        let lower = v.to_lowercase();
        b = b
            .edge(v, &format!("{lower}1"), 1)
            .edge(v, &format!("{lower}{k}"), k);
    }
    Ok(b.build())
}

/// Turns a directed graph on `0..n` into a large-alpha network whose optimum
/// secures a minimum feedback vertex set. Vertices that cannot lie on a cycle
/// through their out-edges are stripped first; self-loops and repeated arcs
/// are ignored.
pub fn gen_fvs_gadget(
    n: usize,
    arcs: &[(usize, usize)],
) -> Result<InvestmentNetwork, InstanceError> {
    if let Some(&(u, v)) = arcs.iter().find(|&&(u, v)| u >= n || v >= n) {
        return Err(InstanceError::Parameter(format!(
            "arc ({u}, {v}) references a vertex outside 0..{n}"
        )));
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in arcs {
        if u != v && !succ[u].contains(&v) {
            succ[u].push(v);
        }
    }
    let max_out = succ.iter().map(Vec::len).max().unwrap_or(0) as i64;
    let k = 1 + max_out;

    let mut alive = vec![true; n];
    loop {
        let dead: Vec<usize> = (0..n)
            .filter(|&u| alive[u] && !succ[u].iter().any(|&v| alive[v]))
            .collect();
        if dead.is_empty() {
            break;
        }
        for u in dead {
            alive[u] = false;
        }
    }

    let mut b = NetworkBuilder::new();
    for u in (0..n).filter(|&u| alive[u]) {
        b = b.enterprise(&format!("v{u}"), k + 1, 2 * k);
    }
    for u in (0..n).filter(|&u| alive[u]) {
        for &v in succ[u].iter().filter(|&&v| alive[v]) {
            b = b.edge(&format!("v{u}"), &format!("v{v}"), 1);
        }
        b = b.edge(&format!("v{u}"), &format!("v{u}_s1"), 1).edge(
            &format!("v{u}"),
            &format!("v{u}_s{k}"),
            k,
        );
    }
    Ok(b.build())
}

/// Star whose optimal full-collateral set solves the inverse knapsack
/// instance `(xs, t)`: players `xs` plus one of size `max(xs) + 1`,
/// `Z = max(xs) + 1 + t`, `alpha = 2Z`.
pub fn gen_knapsack_star(xs: &[i64], t: i64) -> Result<StarInstance, InstanceError> {
    if xs.is_empty() {
        return Err(InstanceError::Parameter("xs must not be empty".into()));
    }
    if let Some(x) = xs.iter().find(|&&x| x <= 0) {
        return Err(InstanceError::Parameter(format!(
            "items must be positive, got {x}"
        )));
    }
    if t < 0 {
        return Err(InstanceError::Parameter(format!(
            "t must be non-negative, got {t}"
        )));
    }
    let max = *xs.iter().max().expect("non-empty");
    let sum: i64 = xs.iter().sum();
    if t > sum - max {
        return Err(InstanceError::Parameter(format!(
            "t = {t} exceeds sum(xs) - max(xs) = {}",
            sum - max
        )));
    }
    let x_max = max + 1;
    let z = x_max + t;
    let mut amounts: Vec<i64> = xs.to_vec();
    amounts.push(x_max);
    StarInstance::from_integers(&amounts, z, 2 * z)
        .map_err(|e| InstanceError::Parameter(e.to_string()))
}

/// Minimum-sum index set with sum strictly above `t`, by enumeration. Ties go
/// to the lexicographically smallest index list.
pub fn inverse_knapsack_brute(xs: &[i64], t: i64) -> Result<Vec<usize>, InstanceError> {
    if xs.len() > KNAPSACK_BRUTE_LIMIT {
        return Err(InstanceError::TooLarge {
            size: xs.len(),
            limit: KNAPSACK_BRUTE_LIMIT,
        });
    }
    let total: i64 = xs.iter().sum();
    let mut best: Option<(i64, Vec<usize>)> = None;
    for mask in 0u32..1 << xs.len() {
        let set: Vec<usize> = (0..xs.len()).filter(|&j| mask >> j & 1 == 1).collect();
        let sum: i64 = set.iter().map(|&j| xs[j]).sum();
        if sum <= t {
            continue;
        }
        let better = match &best {
            None => true,
            Some((s, b)) => sum < *s || (sum == *s && set < *b),
        };
        if better {
            best = Some((sum, set));
        }
    }
    best.map(|(_, set)| set).ok_or(InstanceError::NoSolution {
        threshold: t,
        total,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomProfile {
    pub n: usize,
    pub max_out_degree: usize,
    pub acyclic: bool,
    /// Inclusive integer range for edge weights.
    pub weight_range: (i64, i64),
    /// Integer costs with `alpha = Z + 1` or more, instead of rational rates.
    pub large_alpha: bool,
    pub seed: u64,
}

impl Default for RandomProfile {
    fn default() -> Self {
        RandomProfile {
            n: 8,
            max_out_degree: 3,
            acyclic: false,
            weight_range: (1, 5),
            large_alpha: false,
            seed: 0,
        }
    }
}

/// Seeded random network that always passes validation. Each vertex draws up
/// to `max_out_degree` distinct investors; with `acyclic` set, investors come
/// later in a random topological order. Costs are drawn below the total
/// opportunity and rates are raised until the enterprise is profitable.
pub fn random_network(profile: &RandomProfile) -> Result<InvestmentNetwork, InstanceError> {
    let (lo, hi) = profile.weight_range;
    if lo <= 0 || hi < lo {
        return Err(InstanceError::Parameter(format!(
            "weight range must satisfy 0 < lo <= hi, got {lo}..={hi}"
        )));
    }
    let n = profile.n;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let mut topo: Vec<usize> = (0..n).collect();
    topo.shuffle(&mut rng);

    let mut arcs: Vec<(usize, usize, i64)> = Vec::new();
    for (pos, &k) in topo.iter().enumerate() {
        let pool: Vec<usize> = if profile.acyclic {
            topo[pos + 1..].to_vec()
        } else {
            (0..n).filter(|&v| v != k).collect()
        };
        let d = rng.random_range(0..=profile.max_out_degree.min(pool.len()));
        let mut picks: Vec<usize> = index::sample(&mut rng, pool.len(), d)
            .into_iter()
            .map(|j| pool[j])
            .collect();
        picks.sort_unstable();
        for i in picks {
            arcs.push((k, i, rng.random_range(lo..=hi)));
        }
    }
    arcs.sort_unstable_by_key(|&(k, i, _)| (k, i));

    let mut opportunity = vec![0i64; n];
    for &(k, _, x) in &arcs {
        opportunity[k] += x;
    }
    let mut b = NetworkBuilder::new();
    for (v, &x) in opportunity.iter().enumerate() {
        let id = format!("v{v}");
        if x == 0 {
            b = b.spike(&id);
            continue;
        }
        let z = rng.random_range(0..x);
        let rate = if profile.large_alpha {
            Rational::from_integer(z + rng.random_range(1..=3))
        } else {
            // Least profitable rate, plus a positive margin in halves.
            Rational::new(z, x - z) + Rational::new(rng.random_range(1..=4), 2)
        };
        b = b.enterprise(&id, z, rate);
    }
    for (k, i, x) in arcs {
        b = b.edge(&format!("v{k}"), &format!("v{i}"), x);
    }
    Ok(b.build())
}

/// Seeded star with `1..=max_players` players and rational weights.
pub fn random_star(rng: &mut impl Rng, max_players: usize, large_alpha: bool) -> StarInstance {
    let d = rng.random_range(1..=max_players);
    if large_alpha {
        let amounts: Vec<i64> = (0..d).map(|_| rng.random_range(1..=6)).collect();
        let x: i64 = amounts.iter().sum();
        let z = rng.random_range(0..x);
        return StarInstance::from_integers(&amounts, z, z + rng.random_range(1..=3))
            .expect("positive amounts");
    }
    let amounts: Vec<Rational> = (0..d)
        .map(|_| Rational::new(rng.random_range(1..=12), rng.random_range(1..=3)))
        .collect();
    let x: Rational = amounts.iter().sum();
    let cost = &x * Rational::new(rng.random_range(0..10), 10);
    let least = &cost / (&x - &cost);
    let rate = least + Rational::new(rng.random_range(1..=6), rng.random_range(1..=4));
    StarInstance::new(amounts, cost, rate).expect("valid star")
}
