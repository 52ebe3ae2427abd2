#![allow(dead_code)]

use autobid_fpa::auction::{
    win_probability, AuctionInstance, Bid, BidDistribution, StrategyProfile,
};
use autobid_fpa::frontier::{candidate_bids, competitor_landscape, CandidateGrid};
use rand::Rng;

/// Distribution with up to `max_atoms` atoms on [0, 1.2) and sometimes an
/// abstain atom.
pub fn random_distribution(rng: &mut impl Rng, max_atoms: usize) -> BidDistribution {
    let k = rng.gen_range(1..=max_atoms);
    let mut pairs: Vec<(Bid, f64)> = (0..k)
        .map(|_| {
            // coarse bids make ties common
            let b = (rng.gen::<f64>() * 12.0).floor() / 10.0;
            (Bid::Amount(b), rng.gen_range(0.05..1.0))
        })
        .collect();
    if rng.gen_bool(0.2) {
        pairs.push((Bid::Abstain, rng.gen_range(0.05..1.0)));
    }
    BidDistribution::from_weights(pairs).expect("positive weights")
}

pub fn random_profile(rng: &mut impl Rng, n: usize, m: usize, max_atoms: usize) -> StrategyProfile {
    let rows = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| random_distribution(rng, max_atoms))
                .collect()
        })
        .collect();
    StrategyProfile::new(rows).expect("rectangular")
}

/// `(payment, value)` of each candidate bid, computed directly from the
/// exact win probability.
fn candidate_points(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    auction: usize,
    grid: CandidateGrid,
) -> Vec<(f64, f64)> {
    let landscape = competitor_landscape(instance, profile, bidder, auction).unwrap();
    let v = instance.value(bidder, auction);
    candidate_bids(&landscape, v, instance.reserve(auction), grid)
        .into_iter()
        .map(|b| {
            let q = win_probability(instance, profile, bidder, auction, b).unwrap();
            (b.price() * q, v * q)
        })
        .collect()
}

pub fn candidate_count(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    grid: CandidateGrid,
) -> usize {
    (0..instance.num_auctions())
        .map(|j| candidate_points(instance, profile, bidder, j, grid).len())
        .max()
        .unwrap_or(0)
}

/// Best value of a two-point mixture of `a` and `b` whose slack
/// `value - payment`, added to `carry`, stays nonnegative.
fn best_pair_exact(a: (f64, f64), b: (f64, f64), carry: f64) -> f64 {
    let (sa, sb) = (a.1 - a.0, b.1 - b.0);
    let crossing = if sb != sa {
        (-(carry + sa) / (sb - sa)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    [0.0, 1.0, crossing]
        .into_iter()
        .filter(|&w| carry + (1.0 - w) * sa + w * sb >= -1e-12)
        .map(|w| (1.0 - w) * a.1 + w * b.1)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn best_exact(points: &[(f64, f64)], carry: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i..] {
            best = best.max(best_pair_exact(a, b, carry));
        }
    }
    best
}

/// Exhaustive value-maximizing response over per-auction two-point
/// mixtures of candidate bids, for one or two auctions. With two auctions
/// the mixture weight in one auction runs over a 1e-3 grid and the other
/// auction is solved exactly, in both orders.
pub fn value_oracle(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    grid: CandidateGrid,
) -> f64 {
    let pts: Vec<Vec<(f64, f64)>> = (0..instance.num_auctions())
        .map(|j| candidate_points(instance, profile, bidder, j, grid))
        .collect();
    match pts.len() {
        1 => best_exact(&pts[0], 0.0),
        2 => {
            let mut best = f64::NEG_INFINITY;
            for (first, second) in [(&pts[0], &pts[1]), (&pts[1], &pts[0])] {
                for (i, &a) in first.iter().enumerate() {
                    for &b in &first[i..] {
                        for k in 0..=1000 {
                            let w = k as f64 / 1000.0;
                            let pay = (1.0 - w) * a.0 + w * b.0;
                            let val = (1.0 - w) * a.1 + w * b.1;
                            let rest = best_exact(second, val - pay);
                            best = best.max(val + rest);
                        }
                    }
                }
            }
            best
        }
        _ => panic!("oracle handles at most two auctions"),
    }
}
