//! Acceptance suite: one PASS/FAIL line per criterion, exact comparisons only.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use collat_core::instances::random_star;
use collat_core::{
    brute_force_star, gen_cycle_family, gen_knapsack_star, inverse_knapsack_brute, is_viable,
    random_network, reducible_coordinates, solvability_check, solve, solve_dag, solve_exact,
    solve_star, witness_holds, CollateralMatrix, InvestmentNetwork, Nec, RandomProfile, Rational,
    Solution, Solvability, SolveError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_matrix, small_networks, unique_all_cooperate};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cycle_costs() -> Outcome {
    let mut slowest = Duration::ZERO;
    for k in [3i64, 7, 13] {
        let net = gen_cycle_family(k).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let sol = solve(&net).map_err(|e| format!("k={k}: {e}"))?;
        let took = start.elapsed();
        slowest = slowest.max(took);
        ensure(sol.total == k + 5, || format!("k={k}: total {}", sol.total))?;
        ensure(sol.star_optimum_sum() == 6, || {
            format!("k={k}: star sum {}", sol.star_optimum_sum())
        })?;
        ensure(sol.nec == Nec::Ratio(Rational::new(k + 5, 6)), || {
            format!("k={k}: NEC {}", sol.nec)
        })?;
        ensure(took < Duration::from_secs(10), || {
            format!("k={k}: took {took:?}")
        })?;
    }
    Ok(format!(
        "k in {{3,7,13}}: totals k+5, NEC 4/3, 2, 3; slowest {slowest:?}"
    ))
}

fn dag_optimality(solved: &mut Vec<(InvestmentNetwork, Solution)>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut exact_checked = 0;
    for trial in 0..50 {
        let profile = RandomProfile {
            n: rng.random_range(2..=12),
            max_out_degree: rng.random_range(1..=4),
            acyclic: true,
            weight_range: (1, 6),
            large_alpha: false,
            seed: rng.random(),
        };
        let net = random_network(&profile).map_err(|e| e.to_string())?;
        let sol = solve_dag(&net).map_err(|e| format!("trial {trial}: {e}"))?;
        ensure(sol.total == sol.star_optimum_sum(), || {
            format!(
                "trial {trial}: total {} vs stars {}",
                sol.total,
                sol.star_optimum_sum()
            )
        })?;
        ensure(sol.nec == Nec::Ratio(Rational::one()), || {
            format!("trial {trial}: NEC {}", sol.nec)
        })?;
        if net.edge_count() <= 20 {
            let exact = solve_exact(&net).map_err(|e| format!("trial {trial}: {e}"))?;
            ensure(exact.total == sol.total, || {
                format!("trial {trial}: exact {} vs dag {}", exact.total, sol.total)
            })?;
            exact_checked += 1;
        }
        solved.push((net, sol));
    }
    Ok(format!(
        "50 DAGs, NEC 1; {exact_checked} cross-checked against the exact solver"
    ))
}

fn star_oracle(stars: &mut Vec<(InvestmentNetwork, CollateralMatrix)>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..200 {
        let star = random_star(&mut rng, 7, false);
        let fast = solve_star(&star).map_err(|e| e.to_string())?;
        let slow = brute_force_star(&star).map_err(|e| e.to_string())?;
        ensure(fast.total == slow.total, || {
            format!(
                "trial {trial}: solve_star {} vs brute force {}",
                fast.total, slow.total
            )
        })?;
        let net = star.to_network();
        let c = CollateralMatrix::new(&net, fast.collaterals).map_err(|e| e.to_string())?;
        stars.push((net, c));
    }
    Ok("200 random stars, d <= 7".into())
}

fn viability_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checks = 0;
    for (t, net) in small_networks(100, 10, 400).iter().enumerate() {
        let mut matrices: Vec<CollateralMatrix> =
            (0..4).map(|_| random_matrix(net, &mut rng)).collect();
        matrices.push(CollateralMatrix::full(net));
        if let Ok(sol) = solve(net) {
            matrices.push(sol.collaterals);
        }
        for c in &matrices {
            ensure(is_viable(net, c) == unique_all_cooperate(net, c), || {
                format!(
                    "network {t}: IESDS and enumeration disagree on {:?}",
                    c.values()
                )
            })?;
            checks += 1;
        }
    }
    Ok(format!(
        "100 networks, {checks} matrices checked against all pure profiles"
    ))
}

fn solvability_equivalence() -> Outcome {
    let mut infeasible = 0;
    for (t, net) in small_networks(100, 10, 400).iter().enumerate() {
        let verdict = solvability_check(net);
        let full_viable = is_viable(net, &CollateralMatrix::full(net));
        ensure(verdict.is_solvable() == full_viable, || {
            format!(
                "network {t}: check says {}, full collateral says {full_viable}",
                verdict.is_solvable()
            )
        })?;
        if let Solvability::Infeasible(w) = verdict {
            infeasible += 1;
            ensure(witness_holds(net, &w.vertices), || {
                format!("network {t}: witness {w} fails the direct check")
            })?;
        }
    }
    Ok(format!(
        "100 networks, {infeasible} infeasible with verified witnesses"
    ))
}

fn large_alpha_structure(solved: &mut Vec<(InvestmentNetwork, Solution)>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut networks = 0;
    let mut skipped = 0;
    while networks < 100 {
        let profile = RandomProfile {
            n: rng.random_range(3..=7),
            max_out_degree: rng.random_range(1..=3),
            acyclic: rng.random_bool(0.3),
            weight_range: (1, 5),
            large_alpha: true,
            seed: rng.random(),
        };
        let net = random_network(&profile).map_err(|e| e.to_string())?;
        match solve(&net) {
            Ok(sol) => {
                for (e, edge) in net.edges().iter().enumerate() {
                    let c = sol.collaterals.get(e);
                    ensure(c.is_zero() || *c == edge.amount, || {
                        format!(
                            "network {networks}: edge {} gets {c} of {}",
                            net.label(e),
                            edge.amount
                        )
                    })?;
                }
                networks += 1;
                solved.push((net, sol));
            }
            Err(SolveError::Infeasible(_)) | Err(SolveError::TooLarge { .. }) => skipped += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    for trial in 0..100 {
        let star = random_star(&mut rng, 8, true);
        let sol = solve_star(&star).map_err(|e| e.to_string())?;
        let max = star.amounts.iter().max().unwrap();
        for (j, c) in sol.collaterals.iter().enumerate() {
            ensure(c.is_zero() || *c == star.amounts[j], || {
                format!("star {trial}: player {j} gets {c} of {}", star.amounts[j])
            })?;
        }
        ensure(
            (0..star.len()).any(|j| star.amounts[j] == *max && sol.collaterals[j].is_zero()),
            || format!("star {trial}: every largest player is paid"),
        )?;
    }
    Ok(format!(
        "100 networks ({skipped} infeasible skipped) and 100 stars all-or-nothing"
    ))
}

fn partial_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = 0;
    for trial in 0..300 {
        let star = random_star(&mut rng, 8, trial % 2 == 0);
        let sol = solve_star(&star).map_err(|e| e.to_string())?;
        let x = &star.amounts;
        let c = &sol.collaterals;
        let partial: Vec<usize> = (0..star.len()).filter(|&j| c[j] < x[j]).collect();
        for &a in &partial {
            for &b in &partial {
                // Two zero collaterals carry no ordering information.
                if x[a] <= x[b] || (c[a].is_zero() && c[b].is_zero()) {
                    continue;
                }
                pairs += 1;
                ensure(c[a] > c[b] && &c[a] / &x[a] > &c[b] / &x[b], || {
                    format!("star {trial}: players {a}, {b} get {} and {}", c[a], c[b])
                })?;
            }
        }
    }
    Ok(format!("300 stars, {pairs} partial pairs ordered"))
}

fn minimality(cases: &[(InvestmentNetwork, CollateralMatrix)]) -> Outcome {
    for (t, (net, c)) in cases.iter().enumerate() {
        ensure(is_viable(net, c), || format!("output {t} is not viable"))?;
        let loose = reducible_coordinates(net, c);
        ensure(loose.is_empty(), || {
            format!("output {t}: edges {loose:?} can be lowered")
        })?;
    }
    Ok(format!(
        "{} solver outputs, no coordinate can be lowered",
        cases.len()
    ))
}

fn knapsack_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..50 {
        let len = rng.random_range(2..=12);
        let xs: Vec<i64> = (0..len).map(|_| rng.random_range(1..=20)).collect();
        let slack = xs.iter().sum::<i64>() - xs.iter().max().unwrap();
        let t = rng.random_range(0..=slack);
        let star = gen_knapsack_star(&xs, t).map_err(|e| e.to_string())?;
        let sol = solve_star(&star).map_err(|e| e.to_string())?;
        let paid: i64 = sol
            .full_set
            .iter()
            .map(|&j| if j < xs.len() { xs[j] } else { i64::MAX / 4 })
            .sum();
        let oracle: i64 = inverse_knapsack_brute(&xs, t)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|&j| xs[j])
            .sum();
        ensure(paid == oracle, || {
            format!("trial {trial}: xs={xs:?} t={t}: solver {paid} vs oracle {oracle}")
        })?;
    }
    Ok("50 instances, |xs| <= 12".into())
}

fn main() -> ExitCode {
    let mut solved: Vec<(InvestmentNetwork, Solution)> = Vec::new();
    let mut stars: Vec<(InvestmentNetwork, CollateralMatrix)> = Vec::new();
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "cycle-cost reproduction", cycle_costs()),
        (2, "DAG optimality", dag_optimality(&mut solved)),
        (3, "star oracle equivalence", star_oracle(&mut stars)),
        (4, "viability oracle", viability_oracle()),
        (5, "solvability equivalence", solvability_equivalence()),
        (
            6,
            "large-alpha structure",
            large_alpha_structure(&mut solved),
        ),
        (7, "partial-collateral monotonicity", partial_monotonicity()),
    ];
    let mut cases: Vec<(InvestmentNetwork, CollateralMatrix)> = solved
        .into_iter()
        .map(|(net, sol)| (net, sol.collaterals))
        .collect();
    for k in [3, 7] {
        let net = gen_cycle_family(k).unwrap();
        let c = solve(&net).unwrap().collaterals;
        cases.push((net, c));
    }
    cases.extend(stars);
    results.push((8, "minimality", minimality(&cases)));
    results.push((9, "knapsack reduction", knapsack_reduction()));

    let mut failed = false;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS - {detail}"),
            Err(why) => {
                failed = true;
                println!("criterion {n} ({name}): FAIL - {why}");
            }
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
