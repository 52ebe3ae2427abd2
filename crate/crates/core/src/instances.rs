//! Hard instances, discretization of continuous bid CDFs, and random
//! instance generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::auction::{AuctionInstance, Bid, BidAtom, BidDistribution, BidderKind, StrategyProfile};
use crate::bounds::{phi_mixed, t_ln_t};
use crate::error::{Error, Result};
use crate::io::Scenario;

/// An instance bundled with an equilibrium profile and its welfare ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamHardInstance {
    pub instance: AuctionInstance,
    pub profile: StrategyProfile,
    pub predicted_ratio: f64,
    pub params: Map<String, Value>,
}

impl ParamHardInstance {
    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            instance: self.instance.clone(),
            profile: Some(self.profile.clone()),
            predicted_ratio: Some(self.predicted_ratio),
            params: Some(self.params.clone()),
        }
    }
}

fn params(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(map) => map,
        _ => unreachable!("params are built from object literals"),
    }
}

/// Two value maximizers, two auctions. Bidder 0 wins the auction it values
/// at price 0 (value tie-break) and also wins the other auction at price 1,
/// which its ROI budget exactly affords, so bidder 1 gets nothing.
pub fn thm1_instance(epsilon: f64) -> Result<ParamHardInstance> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} is not in (0, 1)"),
        ));
    }
    let instance = AuctionInstance::new(
        vec![vec![1.0, 0.0], vec![0.0, 1.0 - epsilon]],
        vec![BidderKind::ValueMax; 2],
        None,
        None,
    )?;
    let profile = StrategyProfile::deterministic(&[vec![0.0, 1.0], vec![0.0, 0.0]])?;
    Ok(ParamHardInstance {
        instance,
        profile,
        predicted_ratio: 1.0 / (2.0 - epsilon),
        params: params(json!({ "construction": "thm1", "epsilon": epsilon })),
    })
}

/// CDF of the value maximizer's bid in the utility maximizer's auction:
/// `min{1, t / (1 - b)}` on `[0, 1 - t]`, with an atom of mass `t` at 0.
pub fn lemma_lb_cdf(t: f64, b: f64) -> f64 {
    if b < 0.0 {
        0.0
    } else {
        (t / (1.0 - b)).min(1.0)
    }
}

/// A utility maximizer (bidder 0) and a value maximizer (bidder 1).
///
/// Bidder 1 has value 0 in auction 0 but randomizes there with the CDF
/// [`lemma_lb_cdf`], which keeps bidder 0's utility at exactly `t` for
/// every bid in `[0, 1 - t]`. Bidder 1 wins auction 1 for free and spends
/// all of its value `1 - t + t ln t` in auction 0.
pub fn lemma_lb_instance(t: f64, grid: usize) -> Result<ParamHardInstance> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid("t", format!("{t} is not in (0, 1)")));
    }
    if grid < 10 {
        return Err(Error::invalid(
            "grid",
            format!("{grid} is below the minimum of 10"),
        ));
    }
    let v22 = 1.0 - t + t_ln_t(t);
    let instance = AuctionInstance::new(
        vec![vec![1.0, 0.0], vec![0.0, v22]],
        vec![BidderKind::UtilityMax, BidderKind::ValueMax],
        None,
        None,
    )?;
    let mixed = discretize_cdf(|b| lemma_lb_cdf(t, b), 0.0, 1.0 - t, grid)?;
    let profile = StrategyProfile::new(vec![
        vec![
            BidDistribution::deterministic(0.0),
            BidDistribution::deterministic(0.0),
        ],
        vec![mixed, BidDistribution::deterministic(0.0)],
    ])?;
    Ok(ParamHardInstance {
        instance,
        profile,
        predicted_ratio: phi_mixed(t),
        params: params(json!({ "construction": "lem-lb", "t": t, "grid": grid })),
    })
}

/// Quantizes `cdf` onto `points` equally spaced bids spanning `[lo, hi]`.
///
/// The atom at `b_k` gets `cdf(b_k) - cdf(b_{k-1})`, and the atom at `lo`
/// gets `cdf(lo)`, so a point mass at `lo` is kept exactly. Rounding
/// residue up to 1e-12 goes to the top atom; larger deficits (but at most
/// 1e-9) are removed by rescaling. Zero-probability atoms are dropped.
pub fn discretize_cdf(
    cdf: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<BidDistribution> {
    if points < 2 {
        return Err(Error::invalid("points", "need at least 2 grid points"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::invalid(
            "range",
            format!("[{lo}, {hi}] is not a valid bid range"),
        ));
    }
    let step = (hi - lo) / (points - 1) as f64;
    let mut atoms = Vec::with_capacity(points);
    let mut prev = 0.0;
    for k in 0..points {
        let b = if k + 1 == points {
            hi
        } else {
            lo + k as f64 * step
        };
        let c = cdf(b);
        if !c.is_finite() || c < prev || c > 1.0 + 1e-12 {
            return Err(Error::invalid(
                "cdf",
                format!("value {c} at {b} is not a nondecreasing probability"),
            ));
        }
        if c > prev {
            atoms.push(BidAtom {
                bid: Bid::Amount(b),
                prob: c - prev,
            });
        }
        prev = c;
    }
    if prev < 1.0 - 1e-9 {
        return Err(Error::invalid("cdf", format!("cdf({hi}) = {prev} < 1")));
    }
    let residue = 1.0 - atoms.iter().map(|a| a.prob).sum::<f64>();
    if residue.abs() <= 1e-12 {
        atoms.last_mut().expect("total mass is positive").prob += residue;
    } else {
        let total = 1.0 - residue;
        for a in &mut atoms {
            a.prob /= total;
        }
    }
    BidDistribution::new(atoms)
}

/// Settings for [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomInstanceConfig {
    pub num_bidders: usize,
    pub num_auctions: usize,
    /// Probability that a bidder is a utility maximizer.
    pub utility_share: f64,
    /// When set, every auction gets a reserve drawn uniformly from
    /// `[gamma * max_value, max_value]`.
    pub gamma: Option<f64>,
}

impl RandomInstanceConfig {
    pub fn new(num_bidders: usize, num_auctions: usize) -> Self {
        Self {
            num_bidders,
            num_auctions,
            utility_share: 0.5,
            gamma: None,
        }
    }
}

/// Values uniform on `[0, 1)` and bidder kinds drawn independently, all
/// from a ChaCha stream seeded with `seed`.
pub fn random_instance(seed: u64, config: RandomInstanceConfig) -> Result<AuctionInstance> {
    let RandomInstanceConfig {
        num_bidders: n,
        num_auctions: m,
        utility_share,
        gamma,
    } = config;
    if n == 0 || m == 0 {
        return Err(Error::invalid(
            "shape",
            "need at least one bidder and one auction",
        ));
    }
    if !(0.0..=1.0).contains(&utility_share) {
        return Err(Error::invalid(
            "utility_share",
            format!("{utility_share} is not in [0, 1]"),
        ));
    }
    if let Some(g) = gamma {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::invalid("gamma", format!("{g} is not in [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds: Vec<BidderKind> = (0..n)
        .map(|_| {
            if rng.gen_bool(utility_share) {
                BidderKind::UtilityMax
            } else {
                BidderKind::ValueMax
            }
        })
        .collect();
    let mut values: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| rng.gen::<f64>()).collect())
        .collect();
    if values.iter().flatten().all(|&v| v == 0.0) {
        values[0][0] = 1.0;
    }
    let reserves = gamma.map(|g| {
        (0..m)
            .map(|j| {
                let top = values.iter().map(|r| r[j]).fold(0.0, f64::max);
                top * (g + (1.0 - g) * rng.gen::<f64>())
            })
            .collect()
    });
    AuctionInstance::new(values, kinds, reserves, gamma)
}
