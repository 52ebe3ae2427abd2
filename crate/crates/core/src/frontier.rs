//! Value-payment frontiers and best responses.
//!
//! Fix a bidder and an auction. Against the competitors' (fixed) bids, a
//! deterministic bid `b` wins with probability `q(b)`, earning `v * q(b)` in
//! expectation and paying `b * q(b)`. Randomizing over bids reaches every
//! convex combination of those points, so the best achievable value at each
//! expected payment is the upper concave envelope of the attainable points.
//!
//! `q` is a step function whose jumps sit at the competitors' bids. Optima
//! therefore sit at those bids, or just above them when the bidder loses the
//! tie there. Candidate bids are built around that fact.

use serde::Serialize;

use crate::auction::{AuctionInstance, Bid, BidDistribution, BidderKind, StrategyProfile};
use crate::error::{Error, Result};

/// One possible value of the highest competing bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandscapeAtom {
    pub threshold: f64,
    /// Probability that the highest competing bid equals `threshold`.
    pub prob: f64,
    /// Part of `prob` in which the focal bidder also wins a tie at
    /// `threshold` against every competitor bidding it.
    pub tie_win_prob: f64,
}

impl LandscapeAtom {
    /// The focal bidder wins every tie at this threshold.
    pub fn tie_wins(&self) -> bool {
        self.tie_win_prob >= self.prob
    }
}

/// Distribution of the highest competing bid in one auction, seen from one
/// bidder. Abstaining competitors never compete; the event "everybody else
/// abstains" is folded into the atom at threshold 0 as a won tie.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompetitorLandscape {
    atoms: Vec<LandscapeAtom>,
    #[serde(skip)]
    below: Vec<f64>,
}

impl CompetitorLandscape {
    pub fn new(atoms: Vec<LandscapeAtom>) -> Result<Self> {
        let mut below = Vec::with_capacity(atoms.len() + 1);
        let mut acc = 0.0;
        below.push(0.0);
        for (k, a) in atoms.iter().enumerate() {
            if !(a.threshold.is_finite() && a.threshold >= 0.0) {
                return Err(Error::invalid(
                    format!("landscape[{k}].threshold"),
                    "must be finite and nonnegative",
                ));
            }
            if k > 0 && atoms[k - 1].threshold >= a.threshold {
                return Err(Error::invalid(
                    format!("landscape[{k}].threshold"),
                    "thresholds must be strictly increasing",
                ));
            }
            if !(a.prob > 0.0 && a.tie_win_prob >= 0.0 && a.tie_win_prob <= a.prob) {
                return Err(Error::invalid(
                    format!("landscape[{k}]"),
                    "need 0 < prob and 0 <= tie_win_prob <= prob",
                ));
            }
            acc += a.prob;
            below.push(acc);
        }
        if (acc - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "landscape",
                format!("probabilities sum to {acc}, expected 1"),
            ));
        }
        Ok(Self { atoms, below })
    }

    /// Shorthand for tests and demos: `(threshold, prob, tie_wins)` triples.
    pub fn from_triples(triples: &[(f64, f64, bool)]) -> Result<Self> {
        Self::new(
            triples
                .iter()
                .map(|&(threshold, prob, wins)| LandscapeAtom {
                    threshold,
                    prob,
                    tie_win_prob: if wins { prob } else { 0.0 },
                })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[LandscapeAtom] {
        &self.atoms
    }

    /// Probability that `bid` wins, given the auction's reserve.
    pub fn win_probability(&self, bid: Bid, reserve: Option<f64>) -> f64 {
        let Bid::Amount(b) = bid else { return 0.0 };
        if reserve.is_some_and(|r| b < r) {
            return 0.0;
        }
        let idx = self.atoms.partition_point(|a| a.threshold < b);
        let mut q = self.below[idx];
        if let Some(a) = self.atoms.get(idx) {
            if a.threshold == b {
                q += a.tie_win_prob;
            }
        }
        q.min(1.0)
    }
}

/// Exact landscape faced by `bidder` in `auction`.
pub fn competitor_landscape(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    auction: usize,
) -> Result<CompetitorLandscape> {
    profile.check_shape(instance)?;
    instance.check_bidder(bidder)?;
    instance.check_auction(auction)?;
    let competitors: Vec<(&BidDistribution, bool)> = (0..instance.num_bidders())
        .filter(|&k| k != bidder)
        .map(|k| {
            (
                profile.get(k, auction),
                instance.wins_tie(auction, bidder, k),
            )
        })
        .collect();

    let mut thresholds: Vec<f64> = competitors.iter().flat_map(|(d, _)| d.amounts()).collect();
    let all_abstain: f64 = competitors.iter().map(|(d, _)| d.prob_abstain()).product();
    if all_abstain > 0.0 {
        thresholds.push(0.0);
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut atoms = Vec::with_capacity(thresholds.len());
    for (idx, &t) in thresholds.iter().enumerate() {
        let (mut below, mut at_most, mut won) = (1.0, 1.0, 1.0);
        for (d, wins_tie) in &competitors {
            let lt = d.prob_below(t);
            let eq = d.prob_at(t);
            below *= lt;
            at_most *= (lt + eq).min(1.0);
            won *= (lt + if *wins_tie { eq } else { 0.0 }).min(1.0);
        }
        // the all-abstain event belongs to the first atom
        if idx == 0 {
            below = 0.0;
        }
        let prob = at_most - below;
        if prob <= 0.0 {
            continue;
        }
        let tie_win_prob = (won - below).clamp(0.0, prob);
        atoms.push(LandscapeAtom {
            threshold: t,
            prob,
            tie_win_prob,
        });
    }
    // Telescoping leaves the total within rounding of one; renormalize the
    // last atom so the landscape invariant holds exactly.
    let total: f64 = atoms.iter().map(|a| a.prob).sum();
    if let Some(last) = atoms.last_mut() {
        let fixed = last.prob + (1.0 - total);
        last.tie_win_prob = last.tie_win_prob.min(fixed);
        last.prob = fixed;
    }
    CompetitorLandscape::new(atoms)
}

/// How candidate bids are generated around the structural ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateGrid {
    /// Number of uniform steps on `[0, v]`; 0 disables the uniform grid.
    pub size: usize,
    /// Overbid used to break a lost tie at a competitor's bid.
    pub delta: f64,
}

impl Default for CandidateGrid {
    fn default() -> Self {
        Self {
            size: 200,
            delta: 1e-9,
        }
    }
}

impl CandidateGrid {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            ..Self::default()
        }
    }

    pub fn refined(self) -> Self {
        Self {
            size: (self.size * 2).max(1),
            ..self
        }
    }
}

/// Candidate bids: abstain, a uniform grid on `[0, value]`, every competitor
/// threshold, each threshold plus `delta` where the tie there is not won
/// outright, the value itself and the reserve.
pub fn candidate_bids(
    landscape: &CompetitorLandscape,
    value: f64,
    reserve: Option<f64>,
    grid: CandidateGrid,
) -> Vec<Bid> {
    let mut amounts = Vec::with_capacity(grid.size + 2 * landscape.atoms.len() + 3);
    if grid.size > 0 {
        amounts.extend((0..=grid.size).map(|k| value * k as f64 / grid.size as f64));
    }
    for a in &landscape.atoms {
        amounts.push(a.threshold);
        if !a.tie_wins() {
            amounts.push(a.threshold + grid.delta);
        }
    }
    amounts.push(value);
    amounts.extend(reserve);
    amounts.retain(|b| b.is_finite() && *b >= 0.0);
    amounts.sort_by(f64::total_cmp);
    amounts.dedup();
    std::iter::once(Bid::Abstain)
        .chain(amounts.into_iter().map(Bid::Amount))
        .collect()
}

/// Expected (payment, value) of a deterministic bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttainablePoint {
    pub payment: f64,
    pub value: f64,
    pub bid: Bid,
}

pub fn attainable_point(
    landscape: &CompetitorLandscape,
    value: f64,
    reserve: Option<f64>,
    bid: Bid,
) -> AttainablePoint {
    let q = landscape.win_probability(bid, reserve);
    AttainablePoint {
        payment: bid.price() * q,
        value: value * q,
        bid,
    }
}

/// Points of every candidate bid, with dominated ones removed, ordered by
/// payment. A point is dominated when another pays no more and earns at
/// least as much; among exact duplicates the smaller bid is kept.
pub fn attainable_points(
    landscape: &CompetitorLandscape,
    value: f64,
    reserve: Option<f64>,
    candidates: &[Bid],
) -> Vec<AttainablePoint> {
    let raw: Vec<AttainablePoint> = candidates
        .iter()
        .map(|&b| attainable_point(landscape, value, reserve, b))
        .collect();
    pareto_filter(raw)
}

fn pareto_filter(mut points: Vec<AttainablePoint>) -> Vec<AttainablePoint> {
    points.sort_by(|a, b| {
        a.payment
            .total_cmp(&b.payment)
            .then(b.value.total_cmp(&a.value))
            .then(a.bid.total_cmp(&b.bid))
    });
    let mut kept: Vec<AttainablePoint> = Vec::with_capacity(points.len());
    for p in points {
        match kept.last() {
            Some(last) if p.value <= last.value => {}
            _ => kept.push(p),
        }
    }
    kept
}

/// Piecewise-linear concave value-payment curve. Beyond the last breakpoint
/// the curve stays flat.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frontier {
    breakpoints: Vec<AttainablePoint>,
    value_cap: f64,
}

/// Slope drops below this (relative) margin are treated as collinear.
const COLLINEAR_TOLERANCE: f64 = 1e-12;

/// Upper concave envelope of `points`. The input must contain a point with
/// payment 0 (abstaining always provides one).
pub fn concave_envelope(points: &[AttainablePoint], value_cap: f64) -> Frontier {
    let filtered = pareto_filter(points.to_vec());
    assert!(
        filtered.first().is_some_and(|p| p.payment == 0.0),
        "concave_envelope needs a payment-0 point"
    );
    let mut hull: Vec<AttainablePoint> = Vec::with_capacity(filtered.len());
    for p in filtered {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let s1 = (b.value - a.value) / (b.payment - a.payment);
            let s2 = (p.value - b.value) / (p.payment - b.payment);
            if s2 >= s1 - COLLINEAR_TOLERANCE * s1.abs().max(1.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Frontier {
        breakpoints: hull,
        value_cap,
    }
}

impl Frontier {
    pub fn breakpoints(&self) -> &[AttainablePoint] {
        &self.breakpoints
    }

    pub fn value_cap(&self) -> f64 {
        self.value_cap
    }

    /// Slope of the segment ending at breakpoint `k + 1`.
    pub fn slope(&self, k: usize) -> f64 {
        let (a, b) = (self.breakpoints[k], self.breakpoints[k + 1]);
        (b.value - a.value) / (b.payment - a.payment)
    }

    pub fn slopes(&self) -> Vec<f64> {
        (0..self.breakpoints.len().saturating_sub(1))
            .map(|k| self.slope(k))
            .collect()
    }

    /// Highest expected value reachable with expected payment `payment`.
    pub fn value_at(&self, payment: f64) -> f64 {
        let bps = &self.breakpoints;
        if payment <= 0.0 {
            return bps[0].value;
        }
        let idx = bps.partition_point(|p| p.payment <= payment);
        if idx >= bps.len() {
            return bps[bps.len() - 1].value;
        }
        let (a, b) = (bps[idx - 1], bps[idx]);
        a.value + (b.value - a.value) * (payment - a.payment) / (b.payment - a.payment)
    }

    /// Bid distribution reaching `H(payment)`: a point bid at a breakpoint,
    /// otherwise a mixture of the two neighbouring breakpoints.
    pub fn realize(&self, payment: f64) -> BidDistribution {
        let bps = &self.breakpoints;
        let idx = bps.partition_point(|p| p.payment <= payment);
        if idx == 0 {
            return BidDistribution::point(bps[0].bid);
        }
        if idx >= bps.len() || bps[idx - 1].payment == payment {
            return BidDistribution::point(bps[idx - 1].bid);
        }
        let (a, b) = (bps[idx - 1], bps[idx]);
        let w = (payment - a.payment) / (b.payment - a.payment);
        mixture(a.bid, b.bid, w)
    }
}

fn mixture(low: Bid, high: Bid, weight_high: f64) -> BidDistribution {
    if weight_high <= 0.0 {
        return BidDistribution::point(low);
    }
    if weight_high >= 1.0 {
        return BidDistribution::point(high);
    }
    BidDistribution::two_point(low, high, weight_high)
        .expect("mixture of two distinct bids with weight in (0, 1)")
}

/// Everything needed to inspect one bidder's per-auction choices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuctionView {
    pub landscape: CompetitorLandscape,
    pub points: Vec<AttainablePoint>,
    pub frontier: Frontier,
}

/// Landscape, attainable points and frontier of `bidder` in `auction`.
pub fn auction_view(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    auction: usize,
    grid: CandidateGrid,
) -> Result<AuctionView> {
    let landscape = competitor_landscape(instance, profile, bidder, auction)?;
    let value = instance.value(bidder, auction);
    let reserve = instance.reserve(auction);
    let candidates = candidate_bids(&landscape, value, reserve, grid);
    let points = attainable_points(&landscape, value, reserve, &candidates);
    let frontier = concave_envelope(&points, value);
    Ok(AuctionView {
        landscape,
        points,
        frontier,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponse {
    pub bidder: usize,
    pub kind: BidderKind,
    #[serde(serialize_with = "crate::io::serialize_row")]
    pub row: Vec<BidDistribution>,
    /// Utility for utility maximizers, value for value maximizers.
    pub objective: f64,
    pub expected_value: Vec<f64>,
    pub expected_payment: Vec<f64>,
    #[serde(skip)]
    pub views: Vec<AuctionView>,
}

impl BestResponse {
    pub fn total_value(&self) -> f64 {
        self.expected_value.iter().sum()
    }

    pub fn total_payment(&self) -> f64 {
        self.expected_payment.iter().sum()
    }

    pub fn roi_slack(&self) -> f64 {
        self.total_value() - self.total_payment()
    }
}

fn require_kind(instance: &AuctionInstance, bidder: usize, expected: BidderKind) -> Result<()> {
    instance.check_bidder(bidder)?;
    let actual = instance.kind(bidder);
    if actual != expected {
        return Err(Error::WrongKind {
            bidder,
            expected: expected.name(),
            actual: actual.name(),
        });
    }
    Ok(())
}

fn views_for(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    grid: CandidateGrid,
) -> Result<Vec<AuctionView>> {
    (0..instance.num_auctions())
        .map(|j| auction_view(instance, profile, bidder, j, grid))
        .collect()
}

/// Utility tolerance under which two candidate points count as tied.
const UTILITY_TIE: f64 = 1e-12;

/// Per-auction utility-maximizing bid. Among near-ties the smaller payment
/// wins, then the smaller bid (abstaining counts as the smallest).
pub fn best_response_utility(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    grid: CandidateGrid,
) -> Result<BestResponse> {
    require_kind(instance, bidder, BidderKind::UtilityMax)?;
    let views = views_for(instance, profile, bidder, grid)?;
    let mut row = Vec::with_capacity(views.len());
    let mut expected_value = Vec::with_capacity(views.len());
    let mut expected_payment = Vec::with_capacity(views.len());
    for view in &views {
        let best = best_utility_point(&view.points);
        row.push(BidDistribution::point(best.bid));
        expected_value.push(best.value);
        expected_payment.push(best.payment);
    }
    let objective = expected_value
        .iter()
        .zip(&expected_payment)
        .map(|(v, p)| v - p)
        .sum();
    Ok(BestResponse {
        bidder,
        kind: BidderKind::UtilityMax,
        row,
        objective,
        expected_value,
        expected_payment,
        views,
    })
}

fn best_utility_point(points: &[AttainablePoint]) -> AttainablePoint {
    let top = points
        .iter()
        .map(|p| p.value - p.payment)
        .fold(f64::NEG_INFINITY, f64::max);
    *points
        .iter()
        .filter(|p| p.value - p.payment >= top - UTILITY_TIE)
        .min_by(|a, b| {
            a.payment
                .total_cmp(&b.payment)
                .then(a.bid.total_cmp(&b.bid))
        })
        .expect("abstaining is always a candidate")
}

/// Value-maximizing response under `E[value] >= E[payment]`.
///
/// Each auction starts at the end of its frontier prefix with slopes >= 1;
/// that prefix only adds slack. The remaining segments all trade slack for
/// value at rate `s / (1 - s)`, increasing in the slope `s`, so they are
/// bought globally in order of decreasing slope until the slack runs out.
/// The segment where it runs out is bought fractionally, as a two-point
/// mixture, so at most one auction ends up randomizing.
pub fn best_response_value(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    grid: CandidateGrid,
) -> Result<BestResponse> {
    require_kind(instance, bidder, BidderKind::ValueMax)?;
    let views = views_for(instance, profile, bidder, grid)?;
    let frontiers: Vec<&Frontier> = views.iter().map(|v| &v.frontier).collect();
    let plan = waterfill(&frontiers);

    let mut row = Vec::with_capacity(views.len());
    let mut expected_value = Vec::with_capacity(views.len());
    let mut expected_payment = Vec::with_capacity(views.len());
    for (f, &payment) in frontiers.iter().zip(&plan) {
        row.push(f.realize(payment));
        expected_value.push(f.value_at(payment));
        expected_payment.push(payment);
    }
    let objective = expected_value.iter().sum();
    Ok(BestResponse {
        bidder,
        kind: BidderKind::ValueMax,
        row,
        objective,
        expected_value,
        expected_payment,
        views,
    })
}

/// Expected payment per frontier maximizing total value subject to total
/// value >= total payment.
pub fn waterfill(frontiers: &[&Frontier]) -> Vec<f64> {
    let mut position: Vec<usize> = vec![0; frontiers.len()];
    let mut slack = 0.0;
    for (j, f) in frontiers.iter().enumerate() {
        let slopes = f.slopes();
        let k = slopes.iter().take_while(|&&s| s >= 1.0).count();
        position[j] = k;
        let bp = f.breakpoints()[k];
        slack += bp.value - bp.payment;
    }
    let mut payments: Vec<f64> = frontiers
        .iter()
        .zip(&position)
        .map(|(f, &k)| f.breakpoints()[k].payment)
        .collect();

    let mut segments: Vec<(f64, usize, usize)> = frontiers
        .iter()
        .enumerate()
        .flat_map(|(j, f)| {
            f.slopes()
                .into_iter()
                .enumerate()
                .skip(position[j])
                .map(move |(k, s)| (s, j, k))
        })
        .collect();
    segments.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    for (s, j, k) in segments {
        if s <= 0.0 || slack <= 0.0 {
            break;
        }
        debug_assert_eq!(position[j], k);
        let bps = frontiers[j].breakpoints();
        let width = bps[k + 1].payment - bps[k].payment;
        let cost = (1.0 - s) * width;
        if cost <= slack {
            slack -= cost;
            position[j] = k + 1;
            payments[j] = bps[k + 1].payment;
        } else {
            payments[j] = bps[k].payment + width * (slack / cost);
            break;
        }
    }
    payments
}

/// Deterministic truthful row: bid the value in every auction.
pub fn truthful_proxy(instance: &AuctionInstance, bidder: usize) -> Result<Vec<BidDistribution>> {
    instance.check_bidder(bidder)?;
    Ok((0..instance.num_auctions())
        .map(|j| BidDistribution::deterministic(instance.value(bidder, j)))
        .collect())
}

/// Best response for whichever kind `bidder` is.
pub fn best_response(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    grid: CandidateGrid,
) -> Result<BestResponse> {
    instance.check_bidder(bidder)?;
    match instance.kind(bidder) {
        BidderKind::UtilityMax => best_response_utility(instance, profile, bidder, grid),
        BidderKind::ValueMax => best_response_value(instance, profile, bidder, grid),
    }
}
