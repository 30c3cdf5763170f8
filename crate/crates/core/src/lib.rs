//! Minimum-collateral schemes for investment networks with default cascades.
//!
//! Every quantity is an exact rational. The main entry points are
//! [`validate_network`], [`solvability_check`], [`solve`] and [`is_viable`].

pub mod analysis;
pub mod document;
pub mod error;
pub mod instances;
pub mod model;
pub mod network_solver;
pub mod rational;
pub mod star_solver;

pub use analysis::{
    full_collateral_condition, is_large_alpha, is_viable, iterated_elimination,
    reducible_coordinates, resolvable, solvability_check, witness_holds, zero_collateral_condition,
    Elimination, EliminationOrder, InfeasibilityWitness, Reduction, Solvability, SyntheticSpike,
};
pub use document::{CollateralDocument, NetworkDocument};
pub use error::{DocumentError, InstanceError, ModelError, ParseRationalError, SolveError};
pub use instances::{
    gen_cycle_family, gen_fvs_gadget, gen_knapsack_star, inverse_knapsack_brute, random_network,
    RandomProfile,
};
pub use model::{
    best_response, default_determination, edge_utility, enterprise_return, is_nash_equilibrium,
    player_utility, validate_network, Action, CollateralMatrix, Edge, EdgeId, EdgeSet, InvestState,
    InvestmentNetwork, NetworkBuilder, ValidationReport, Vertex, VertexId, Violation,
};
pub use network_solver::{
    auto_method, compute_nec, is_acyclic, minimal_matrix_for_resolved_set, solve, solve_dag,
    solve_exact, solve_large_alpha, solve_single_star, solve_with, star_decomposition, Method, Nec,
    Solution, StarBreakdown, StarPart,
};
pub use rational::{Money, Rate, Rational};
pub use star_solver::{
    brute_force_star, minimal_vector_for_order, optimal_partial_for_set, solve_star, StarInstance,
    StarSolution,
};
