//! Optimal collaterals for a single enterprise and its investors.
//!
//! For a fixed elimination order, each investor gets exactly the shortfall
//! between its investment and its worst-case return given that everyone
//! earlier in the order invests. An optimal vector always has the shape
//! "some set of players fully collateralized first, the rest in decreasing
//! investment order", so the optimum is a search over that set.

use std::cmp::Ordering;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, One, ToPrimitive};
use rayon::prelude::*;

use crate::error::SolveError;
use crate::model::{InvestmentNetwork, NetworkBuilder};
use crate::rational::{Money, Rate, Rational};

/// Largest star `solve_star` will enumerate (2^d subsets).
pub const STAR_SUBSET_LIMIT: usize = 25;

/// Largest star `brute_force_star` will enumerate (d! orders).
pub const STAR_PERMUTATION_LIMIT: usize = 9;

pub type CollateralVector = Vec<Money>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarInstance {
    pub amounts: Vec<Money>,
    pub cost: Money,
    pub rate: Rate,
}

impl StarInstance {
    pub fn new(amounts: Vec<Money>, cost: Money, rate: Rate) -> Result<Self, SolveError> {
        if let Some(x) = amounts.iter().find(|x| !x.is_positive()) {
            return Err(SolveError::Precondition(format!(
                "investment amounts must be positive, got {x}"
            )));
        }
        if cost.is_negative() {
            return Err(SolveError::Precondition(format!("negative cost {cost}")));
        }
        if !rate.is_positive() {
            return Err(SolveError::Precondition(format!(
                "interest rate must be positive, got {rate}"
            )));
        }
        Ok(StarInstance {
            amounts,
            cost,
            rate,
        })
    }

    /// Integer convenience constructor for tests and generators.
    pub fn from_integers(amounts: &[i64], cost: i64, rate: i64) -> Result<Self, SolveError> {
        Self::new(
            amounts.iter().map(|&x| Rational::from_integer(x)).collect(),
            Rational::from_integer(cost),
            Rational::from_integer(rate),
        )
    }

    pub fn len(&self) -> usize {
        self.amounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amounts.is_empty()
    }

    pub fn total_opportunity(&self) -> Money {
        self.amounts.iter().sum()
    }

    /// `(1 + alpha)(X - Z) >= X`.
    pub fn is_profitable(&self) -> bool {
        let x = self.total_opportunity();
        (Rational::one() + &self.rate) * (&x - &self.cost) >= x
    }

    /// Center `k`, investors `p0..p{d-1}`.
    pub fn to_network(&self) -> InvestmentNetwork {
        let mut b = NetworkBuilder::new().enterprise("k", self.cost.clone(), self.rate.clone());
        for (j, x) in self.amounts.iter().enumerate() {
            b = b.edge("k", &format!("p{j}"), x.clone());
        }
        b.build()
    }

    /// Player indices by non-increasing investment, ties by input index.
    pub fn decreasing_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.amounts[b].cmp(&self.amounts[a]).then(a.cmp(&b)));
        idx
    }

    /// Collateral that makes player `j` weakly prefer investing when the
    /// investors before it (including `j`) have raised `cumulative`.
    fn shortfall(&self, j: usize, cumulative: &Money) -> Money {
        let x = &self.amounts[j];
        let fraction = Rational::one()
            - (Rational::one() + &self.rate) * (Rational::one() - &self.cost / cumulative);
        x * fraction.clamp_to(&Rational::zero(), &Rational::one())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarSolution {
    pub collaterals: CollateralVector,
    pub total: Money,
    /// Elimination order over players.
    pub order: Vec<usize>,
    /// Players with full collateral, ascending.
    pub full_set: Vec<usize>,
}

impl StarSolution {
    fn from_vector(star: &StarInstance, collaterals: CollateralVector) -> Self {
        let full_set: Vec<usize> = (0..star.len())
            .filter(|&j| collaterals[j] == star.amounts[j])
            .collect();
        let mut order = full_set.clone();
        order.extend(
            star.decreasing_order()
                .into_iter()
                .filter(|j| collaterals[*j] != star.amounts[*j]),
        );
        let total = collaterals.iter().sum();
        StarSolution {
            collaterals,
            total,
            order,
            full_set,
        }
    }
}

/// Minimal collateral vector under which `order` is an elimination order.
pub fn minimal_vector_for_order(
    star: &StarInstance,
    order: &[usize],
) -> Result<CollateralVector, SolveError> {
    let d = star.len();
    let mut seen = vec![false; d];
    if order.len() != d
        || order
            .iter()
            .any(|&j| j >= d || std::mem::replace(&mut seen[j], true))
    {
        return Err(SolveError::Precondition(format!(
            "{order:?} is not a permutation of 0..{d}"
        )));
    }
    let mut c = vec![Rational::zero(); d];
    let mut cumulative = Rational::zero();
    for &j in order {
        cumulative += &star.amounts[j];
        c[j] = star.shortfall(j, &cumulative);
    }
    Ok(c)
}

/// Full collateral for `full`, then the remaining players in decreasing
/// investment order each receive their shortfall.
pub fn optimal_partial_for_set(star: &StarInstance, full: &[usize]) -> CollateralVector {
    let mut in_full = vec![false; star.len()];
    for &j in full {
        in_full[j] = true;
    }
    partial_for_mask(star, &in_full, &star.decreasing_order())
}

fn partial_for_mask(
    star: &StarInstance,
    in_full: &[bool],
    decreasing: &[usize],
) -> CollateralVector {
    let mut c = vec![Rational::zero(); star.len()];
    let mut cumulative = Rational::zero();
    for j in 0..star.len() {
        if in_full[j] {
            c[j] = star.amounts[j].clone();
            cumulative += &star.amounts[j];
        }
    }
    for &j in decreasing.iter().filter(|&&j| !in_full[j]) {
        cumulative += &star.amounts[j];
        c[j] = star.shortfall(j, &cumulative);
        if c[j].is_zero() {
            // Everyone later raises the cumulative sum further.
            break;
        }
    }
    c
}

/// Optimum over all full-collateral sets. Ties go to the lexicographically
/// smallest set.
pub fn solve_star(star: &StarInstance) -> Result<StarSolution, SolveError> {
    let d = star.len();
    if d > STAR_SUBSET_LIMIT {
        return Err(SolveError::TooLarge {
            what: "star",
            size: d,
            limit: STAR_SUBSET_LIMIT,
        });
    }
    let decreasing = star.decreasing_order();
    let masks = 0u32..((1u64 << d) as u32).max(1);
    let fast = ScaledStar::new(star).and_then(|scaled| {
        masks
            .clone()
            .into_par_iter()
            .map(|mask| scaled.total(mask, &decreasing).map(|t| (t, mask)))
            .try_reduce_with(|a, b| Some(if better_mask(&b, &a) { b } else { a }))
            .flatten()
    });
    let mask = match fast {
        Some((_, mask)) => mask,
        None => {
            masks
                .into_par_iter()
                .map(|mask| {
                    let c = partial_for_mask(star, &mask_bits(mask, d), &decreasing);
                    (c.iter().sum::<Money>(), mask)
                })
                .reduce_with(|a, b| if better_mask(&b, &a) { b } else { a })
                .expect("at least the empty set is evaluated")
                .1
        }
    };
    let c = partial_for_mask(star, &mask_bits(mask, d), &decreasing);
    Ok(StarSolution::from_vector(star, c))
}

fn mask_bits(mask: u32, d: usize) -> Vec<bool> {
    (0..d).map(|j| mask >> j & 1 == 1).collect()
}

/// Lower total wins; equal totals go to the lexicographically smaller set.
fn better_mask<T: Ord>(a: &(T, u32), b: &(T, u32)) -> bool {
    match a.0.cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            let diff = a.1 ^ b.1;
            if diff == 0 {
                return false;
            }
            let low = diff & diff.wrapping_neg();
            let above = !(low | (low - 1));
            // The set holding the first differing element is smaller, unless
            // the other set stops there and is a prefix of it.
            if a.1 & low != 0 {
                b.1 & above != 0
            } else {
                a.1 & above == 0
            }
        }
    }
}

/// The star over a common denominator, for overflow-checked `i128` totals.
struct ScaledStar {
    amounts: Vec<i128>,
    cost: i128,
    /// `alpha = p / q`.
    p: i128,
    q: i128,
}

impl ScaledStar {
    fn new(star: &StarInstance) -> Option<Self> {
        let denom = star
            .amounts
            .iter()
            .chain(std::iter::once(&star.cost))
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let scale = |x: &Rational| (x.numer() * (&denom / x.denom())).to_i128();
        let amounts = star
            .amounts
            .iter()
            .map(scale)
            .collect::<Option<Vec<i128>>>()?;
        // Every cumulative sum below must fit.
        amounts
            .iter()
            .try_fold(0i128, |acc, &v| acc.checked_add(v))?;
        Some(ScaledStar {
            amounts,
            cost: scale(&star.cost)?,
            p: star.rate.numer().to_i128()?,
            q: star.rate.denom().to_i128()?,
        })
    }

    /// Total for a full set, in units of the common denominator. `None` on
    /// overflow.
    fn total(&self, mask: u32, decreasing: &[usize]) -> Option<Ratio<i128>> {
        let full = |j: usize| mask >> j & 1 == 1;
        let mut cumulative: i128 = (0..self.amounts.len())
            .filter(|&j| full(j))
            .map(|j| self.amounts[j])
            .sum();
        let mut total = Ratio::from_integer(cumulative);
        for &j in decreasing.iter().filter(|&&j| !full(j)) {
            let a = self.amounts[j];
            cumulative += a;
            if cumulative <= self.cost {
                total = total.checked_add(&Ratio::from_integer(a))?;
                continue;
            }
            // Shortfall fraction ((p + q) Z - p S) / (q S), clamped at zero.
            let num = (self.p.checked_add(self.q)?)
                .checked_mul(self.cost)?
                .checked_sub(self.p.checked_mul(cumulative)?)?;
            if num <= 0 {
                break;
            }
            let den = self.q.checked_mul(cumulative)?;
            let term = Ratio::new(a, 1).checked_mul(&Ratio::new(num, den))?;
            total = total.checked_add(&term)?;
        }
        Some(total)
    }
}

/// Optimum over all `d!` elimination orders. Test oracle for [`solve_star`].
pub fn brute_force_star(star: &StarInstance) -> Result<StarSolution, SolveError> {
    let d = star.len();
    if d > STAR_PERMUTATION_LIMIT {
        return Err(SolveError::TooLarge {
            what: "star",
            size: d,
            limit: STAR_PERMUTATION_LIMIT,
        });
    }
    let mut best: Option<(Money, CollateralVector)> = None;
    for perm in (0..d).permutations(d) {
        let c = minimal_vector_for_order(star, &perm)?;
        let total: Money = c.iter().sum();
        if best.as_ref().is_none_or(|(t, _)| total < *t) {
            best = Some((total, c));
        }
    }
    let (_, c) = best.expect("at least one permutation");
    Ok(StarSolution::from_vector(star, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::is_viable;
    use crate::model::CollateralMatrix;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn ints(v: &[i64]) -> Vec<Money> {
        v.iter().map(|&x| Rational::from_integer(x)).collect()
    }

    #[test]
    fn order_vector_examples() {
        let s = StarInstance::from_integers(&[1, 1], 1, 1).unwrap();
        assert_eq!(
            minimal_vector_for_order(&s, &[0, 1]).unwrap(),
            ints(&[1, 0])
        );

        let s = StarInstance::from_integers(&[3, 2, 1], 3, 1).unwrap();
        let c = minimal_vector_for_order(&s, &[2, 0, 1]).unwrap();
        assert_eq!(c, vec![q(3, 2), Rational::zero(), Rational::one()]);

        let s = StarInstance::from_integers(&[4], 1, 1).unwrap();
        assert_eq!(minimal_vector_for_order(&s, &[0]).unwrap(), ints(&[0]));
    }

    #[test]
    fn order_must_be_a_permutation() {
        let s = StarInstance::from_integers(&[1, 1], 1, 1).unwrap();
        assert!(minimal_vector_for_order(&s, &[0, 0]).is_err());
        assert!(minimal_vector_for_order(&s, &[0]).is_err());
        assert!(minimal_vector_for_order(&s, &[0, 2]).is_err());
    }

    #[test]
    fn partial_for_set_examples() {
        let s = StarInstance::from_integers(&[3, 2, 1], 3, 1).unwrap();
        assert_eq!(
            optimal_partial_for_set(&s, &[2]),
            vec![q(3, 2), Rational::zero(), Rational::one()]
        );
        let s = StarInstance::from_integers(&[2, 1], 2, 1).unwrap();
        let c = optimal_partial_for_set(&s, &[1]);
        assert_eq!(c, vec![q(2, 3), Rational::one()]);
        assert_eq!(c.iter().sum::<Money>(), q(5, 3));
        assert_eq!(optimal_partial_for_set(&s, &[0, 1]), ints(&[2, 1]));
    }

    #[test]
    fn solve_examples() {
        let s = StarInstance::from_integers(&[3, 2, 1], 3, 1).unwrap();
        let sol = solve_star(&s).unwrap();
        assert_eq!(sol.total, q(5, 2));
        assert_eq!(sol.full_set, vec![2]);
        assert_eq!(sol.order, vec![2, 0, 1]);

        let s = StarInstance::from_integers(&[1, 1], 1, 1).unwrap();
        let sol = solve_star(&s).unwrap();
        assert_eq!(sol.total, 1);
        assert_eq!(sol.collaterals, ints(&[1, 0]));

        let s = StarInstance::from_integers(&[4], 1, 1).unwrap();
        assert_eq!(solve_star(&s).unwrap().total, 0);
    }

    #[test]
    fn brute_force_examples() {
        let s = StarInstance::from_integers(&[1, 1], 1, 1).unwrap();
        assert_eq!(brute_force_star(&s).unwrap().total, 1);
        let s = StarInstance::from_integers(&[3, 2, 1], 3, 1).unwrap();
        assert_eq!(brute_force_star(&s).unwrap().total, q(5, 2));
        let big = StarInstance::from_integers(&[1; 10], 1, 1).unwrap();
        assert!(matches!(
            brute_force_star(&big),
            Err(SolveError::TooLarge { .. })
        ));
    }

    #[test]
    fn solution_is_viable_on_the_star_network() {
        let s = StarInstance::from_integers(&[5, 3, 3, 2, 1], 7, 1).unwrap();
        let sol = solve_star(&s).unwrap();
        let net = s.to_network();
        let c = CollateralMatrix::new(&net, sol.collaterals.clone()).unwrap();
        assert!(is_viable(&net, &c));
    }

    #[test]
    fn guard_refuses_huge_stars() {
        let s = StarInstance::from_integers(&[1; 26], 1, 1).unwrap();
        assert!(matches!(
            solve_star(&s),
            Err(SolveError::TooLarge { size: 26, .. })
        ));
    }

    #[test]
    fn constructor_checks_inputs() {
        assert!(StarInstance::from_integers(&[0, 1], 1, 1).is_err());
        assert!(StarInstance::from_integers(&[1], -1, 1).is_err());
        assert!(StarInstance::from_integers(&[1], 1, 0).is_err());
        assert!(StarInstance::from_integers(&[2, 2], 1, 1)
            .unwrap()
            .is_profitable());
        assert!(!StarInstance::from_integers(&[2, 1], 2, 1)
            .unwrap()
            .is_profitable());
    }

    #[test]
    fn tie_break_prefers_lexicographically_smaller_sets() {
        let set = |bits: &[u32]| bits.iter().fold(0u32, |m, &b| m | 1 << b);
        // {0, 2} < {1}
        assert!(better_mask(&(0, set(&[0, 2])), &(0, set(&[1]))));
        // {0} < {0, 1}
        assert!(better_mask(&(0, set(&[0])), &(0, set(&[0, 1]))));
        assert!(!better_mask(&(0, set(&[0, 1])), &(0, set(&[0]))));
        // {} < {3}
        assert!(better_mask(&(0, 0), &(0, set(&[3]))));
        assert!(better_mask(&(1, set(&[5])), &(2, set(&[0]))));
        assert!(!better_mask(&(0, 6), &(0, 6)));
    }

    #[test]
    fn overflow_falls_back_to_big_rationals() {
        let huge = Rational::from_big(num_rational::BigRational::new(
            BigInt::from(10).pow(40u32),
            BigInt::from(3),
        ));
        let star =
            StarInstance::new(vec![huge.clone(), q(2, 1), q(1, 7)], huge.clone(), q(1, 1)).unwrap();
        assert!(ScaledStar::new(&star).is_none());
        let fast = solve_star(&star).unwrap();
        let slow = brute_force_star(&star).unwrap();
        assert_eq!(fast.total, slow.total);
    }
}
