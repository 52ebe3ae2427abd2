//! ε-equilibrium verification and best-response dynamics.

use serde::Serialize;

use crate::auction::{
    evaluate_profile, AuctionInstance, BidDistribution, BidderKind, OutcomeSummary, StrategyProfile,
};
use crate::error::{Error, Result};
use crate::frontier::{
    best_response, best_response_utility, truthful_proxy, BestResponse, CandidateGrid,
};

fn current_objective(instance: &AuctionInstance, outcome: &OutcomeSummary, bidder: usize) -> f64 {
    match instance.kind(bidder) {
        BidderKind::UtilityMax => outcome.roi_slack(bidder),
        BidderKind::ValueMax => outcome.per_bidder_value[bidder],
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} is not a positive number"),
        ));
    }
    Ok(())
}

fn gap_from_outcome(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    outcome: &OutcomeSummary,
    bidder: usize,
    grid: CandidateGrid,
    epsilon: f64,
) -> Result<f64> {
    if instance.kind(bidder) == BidderKind::ValueMax {
        let slack = outcome.roi_slack(bidder);
        if slack < -epsilon {
            return Err(Error::InfeasibleProfile {
                bidder,
                slack,
                epsilon,
            });
        }
    }
    let br = best_response(instance, profile, bidder, grid)?;
    Ok(br.objective - current_objective(instance, outcome, bidder))
}

/// Best-response objective minus current objective for `bidder`: utility
/// for utility maximizers, value for value maximizers. Can be slightly
/// negative when the current strategy uses bids off the candidate grid.
///
/// Fails with [`Error::InfeasibleProfile`] when `bidder` is a value
/// maximizer whose ROI slack is below `-epsilon`.
pub fn best_response_gap(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    grid: CandidateGrid,
    epsilon: f64,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    instance.check_bidder(bidder)?;
    let outcome = evaluate_profile(instance, profile)?;
    gap_from_outcome(instance, profile, &outcome, bidder, grid, epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    /// Per-bidder best-response gap, clamped at 0.
    pub gaps: Vec<f64>,
    pub roi_slack: Vec<f64>,
    pub epsilon: f64,
    pub is_equilibrium: bool,
    pub outcome: OutcomeSummary,
}

/// Checks that every bidder is within `epsilon` of a best response and
/// every value maximizer is ROI-feasible within `epsilon`.
pub fn verify_equilibrium(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    grid: CandidateGrid,
    epsilon: f64,
) -> Result<EquilibriumReport> {
    check_epsilon(epsilon)?;
    let outcome = evaluate_profile(instance, profile)?;
    let n = instance.num_bidders();
    let gaps = (0..n)
        .map(|i| {
            gap_from_outcome(instance, profile, &outcome, i, grid, epsilon).map(|g| g.max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let roi_slack: Vec<f64> = (0..n).map(|i| outcome.roi_slack(i)).collect();
    let is_equilibrium = gaps.iter().all(|&g| g <= epsilon)
        && (0..n).all(|i| instance.kind(i) == BidderKind::UtilityMax || roi_slack[i] >= -epsilon);
    Ok(EquilibriumReport {
        gaps,
        roi_slack,
        epsilon,
        is_equilibrium,
        outcome,
    })
}

/// Everyone bids their value deterministically.
pub fn truthful_profile(instance: &AuctionInstance) -> StrategyProfile {
    let rows = (0..instance.num_bidders())
        .map(|i| truthful_proxy(instance, i).expect("bidder index in range"))
        .collect();
    StrategyProfile::new(rows).expect("one truthful bid per auction")
}

/// Value maximizers bid truthfully; each utility maximizer best-responds
/// to everyone else bidding truthfully.
pub fn default_initial_profile(
    instance: &AuctionInstance,
    grid: CandidateGrid,
) -> Result<StrategyProfile> {
    let truthful = truthful_profile(instance);
    let mut profile = truthful.clone();
    for i in 0..instance.num_bidders() {
        if instance.kind(i) == BidderKind::UtilityMax {
            let br = best_response_utility(instance, &truthful, i, grid)?;
            profile = profile.with_row(i, br.row)?;
        }
    }
    Ok(profile)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsResult {
    #[serde(serialize_with = "crate::io::serialize_profile")]
    pub profile: StrategyProfile,
    pub converged: bool,
    /// Sweeps started, counting a final partial sweep.
    pub iters: usize,
}

/// Round-robin best-response dynamics in bidder order `0..n`.
///
/// A bidder switches to its best response when its gap exceeds `epsilon`
/// or, for a value maximizer, when its ROI slack is below `-epsilon`.
/// A bidder's check stays valid until some other bidder changes its row;
/// the run converges once every bidder holds a valid check, and gives up
/// after `max_iters` sweeps. Value maximizers left infeasible by a
/// non-converged run are switched to truthful bids, which are feasible
/// against any opponents.
pub fn best_response_dynamics(
    instance: &AuctionInstance,
    initial: &StrategyProfile,
    grid: CandidateGrid,
    max_iters: usize,
    epsilon: f64,
) -> Result<DynamicsResult> {
    check_epsilon(epsilon)?;
    if max_iters == 0 {
        return Err(Error::invalid("max_iters", "must be at least 1"));
    }
    initial.check_shape(instance)?;
    let n = instance.num_bidders();
    let mut profile = initial.clone();
    let mut settled = vec![false; n];
    let mut iters = 0;
    let mut converged = false;
    'sweeps: while iters < max_iters {
        iters += 1;
        for i in 0..n {
            let outcome = evaluate_profile(instance, &profile)?;
            let infeasible =
                instance.kind(i) == BidderKind::ValueMax && outcome.roi_slack(i) < -epsilon;
            let br = best_response(instance, &profile, i, grid)?;
            let gap = br.objective - current_objective(instance, &outcome, i);
            if infeasible || gap > epsilon {
                let row = keep_equivalent_bids(&profile, &outcome, i, br);
                profile = profile.with_row(i, row)?;
                settled.iter_mut().for_each(|s| *s = false);
            }
            settled[i] = true;
            if settled.iter().all(|&s| s) {
                converged = true;
                break 'sweeps;
            }
        }
    }
    if !converged {
        profile = restore_feasibility(instance, profile, epsilon)?;
    }
    Ok(DynamicsResult {
        profile,
        converged,
        iters,
    })
}

/// Tolerance under which a current per-auction outcome counts as equal
/// to the best response's.
const SAME_OUTCOME: f64 = 1e-12;

/// The best-response row, except that auctions where the current bids
/// already give the same expected value and payment keep them. Without
/// this a bidder that loses an auction at a high bid would switch to
/// abstaining whenever it updates elsewhere, which restarts undercutting.
fn keep_equivalent_bids(
    profile: &StrategyProfile,
    outcome: &OutcomeSummary,
    bidder: usize,
    br: BestResponse,
) -> Vec<BidDistribution> {
    br.row
        .into_iter()
        .enumerate()
        .map(|(j, d)| {
            let same = (outcome.exp_value[bidder][j] - br.expected_value[j]).abs() <= SAME_OUTCOME
                && (outcome.exp_payment[bidder][j] - br.expected_payment[j]).abs() <= SAME_OUTCOME;
            if same {
                profile.get(bidder, j).clone()
            } else {
                d
            }
        })
        .collect()
}

fn restore_feasibility(
    instance: &AuctionInstance,
    mut profile: StrategyProfile,
    epsilon: f64,
) -> Result<StrategyProfile> {
    for _ in 0..instance.num_bidders() {
        let outcome = evaluate_profile(instance, &profile)?;
        let bad: Vec<usize> = (0..instance.num_bidders())
            .filter(|&i| {
                instance.kind(i) == BidderKind::ValueMax && outcome.roi_slack(i) < -epsilon
            })
            .collect();
        if bad.is_empty() {
            break;
        }
        for i in bad {
            profile = profile.with_row(i, truthful_proxy(instance, i)?)?;
        }
    }
    Ok(profile)
}
