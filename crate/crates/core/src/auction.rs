//! Auction instances, randomized bids, and exact outcome evaluation.
//!
//! Every auction is a sealed-bid first-price auction. The highest bid wins
//! and pays its bid. Ties go to the bidder with the higher value for the
//! item, then to the smaller bidder index. When an auction carries a
//! reserve, only bids at or above it are eligible.
//!
//! Evaluation is exact. Bidders randomize independently, so the event "bidder
//! `i` bidding `b` wins auction `j`" is the intersection of one independent
//! event per competitor ("competitor `k` is beaten by `b`"). Its probability
//! is a product of per-competitor probabilities, which avoids walking the
//! joint support. [`enumerate_outcomes`] walks the joint support explicitly
//! and is kept as a reference path for small auctions.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total probability of a distribution may deviate from one by this much.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// Default cap on the number of joint competitor outcomes
/// [`enumerate_outcomes`] is willing to walk.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BidderKind {
    /// Maximizes expected value minus expected payment.
    #[serde(rename = "utility")]
    UtilityMax,
    /// Maximizes expected value subject to expected payment <= expected value.
    #[serde(rename = "value")]
    ValueMax,
}

impl BidderKind {
    pub fn name(self) -> &'static str {
        match self {
            BidderKind::UtilityMax => "utility",
            BidderKind::ValueMax => "value",
        }
    }
}

/// A single sealed bid. `Abstain` never wins and never pays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bid {
    Abstain,
    Amount(f64),
}

impl Bid {
    pub fn amount(self) -> Option<f64> {
        match self {
            Bid::Abstain => None,
            Bid::Amount(b) => Some(b),
        }
    }

    /// What the bidder pays if this bid wins.
    pub fn price(self) -> f64 {
        self.amount().unwrap_or(0.0)
    }

    /// `Abstain` sorts below every amount; amounts sort numerically.
    pub fn total_cmp(&self, other: &Bid) -> Ordering {
        match (self, other) {
            (Bid::Abstain, Bid::Abstain) => Ordering::Equal,
            (Bid::Abstain, Bid::Amount(_)) => Ordering::Less,
            (Bid::Amount(_), Bid::Abstain) => Ordering::Greater,
            (Bid::Amount(a), Bid::Amount(b)) => a.total_cmp(b),
        }
    }
}

impl PartialOrd for Bid {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl Serialize for Bid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bid::Abstain => s.serialize_str("abstain"),
            Bid::Amount(b) => s.serialize_f64(*b),
        }
    }
}

impl std::fmt::Display for Bid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bid::Abstain => f.write_str("abstain"),
            Bid::Amount(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidAtom {
    pub bid: Bid,
    pub prob: f64,
}

impl BidAtom {
    /// Probability in (0, 1] and, for amounts, a finite nonnegative bid.
    pub(crate) fn check(&self, field: &str) -> Result<()> {
        if !(self.prob.is_finite() && self.prob > 0.0 && self.prob <= 1.0) {
            return Err(Error::invalid(
                format!("{field}.prob"),
                format!("probability {} outside (0, 1]", self.prob),
            ));
        }
        if let Bid::Amount(b) = self.bid {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::invalid(
                    format!("{field}.bid"),
                    format!("bid {b} is not a finite nonnegative number"),
                ));
            }
        }
        Ok(())
    }
}

/// A finite-support randomized bid for one bidder in one auction.
///
/// Atoms are sorted strictly by bid (`Abstain` first), every probability lies
/// in `(0, 1]` and the total is one within [`PROB_SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct BidDistribution {
    atoms: Vec<BidAtom>,
    // cumulative[k] = total probability of atoms[..k]
    cumulative: Vec<f64>,
}

impl BidDistribution {
    pub fn new(atoms: Vec<BidAtom>) -> Result<Self> {
        Self::validated(atoms, "atoms")
    }

    /// Same as [`BidDistribution::new`], with `field` used as the prefix of
    /// any diagnostic.
    pub fn validated(atoms: Vec<BidAtom>, field: &str) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid(field, "distribution has no atoms"));
        }
        for (k, atom) in atoms.iter().enumerate() {
            atom.check(&format!("{field}[{k}]"))?;
            if k > 0 && atoms[k - 1].bid.total_cmp(&atom.bid) != Ordering::Less {
                return Err(Error::invalid(
                    format!("{field}[{k}].bid"),
                    "bids must be strictly increasing with abstain first and at most once",
                ));
            }
        }
        let mut cumulative = Vec::with_capacity(atoms.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for atom in &atoms {
            acc += atom.prob;
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::invalid(
                field,
                format!("probabilities sum to {acc}, expected 1"),
            ));
        }
        Ok(Self { atoms, cumulative })
    }

    /// Builds a distribution from arbitrary (bid, weight) pairs: zero weights
    /// are dropped, equal bids merged, and the weights rescaled to sum to one.
    pub fn from_weights(pairs: impl IntoIterator<Item = (Bid, f64)>) -> Result<Self> {
        let mut pairs: Vec<(Bid, f64)> = pairs.into_iter().filter(|(_, w)| *w > 0.0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<BidAtom> = Vec::with_capacity(pairs.len());
        for (bid, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.bid == bid => last.prob += w,
                _ => merged.push(BidAtom { bid, prob: w }),
            }
        }
        let total: f64 = merged.iter().map(|a| a.prob).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::invalid("weights", "total weight must be positive"));
        }
        for atom in &mut merged {
            atom.prob /= total;
        }
        Self::new(merged)
    }

    pub fn deterministic(bid: f64) -> Self {
        Self::point(Bid::Amount(bid))
    }

    pub fn abstain() -> Self {
        Self::point(Bid::Abstain)
    }

    pub fn point(bid: Bid) -> Self {
        Self {
            atoms: vec![BidAtom { bid, prob: 1.0 }],
            cumulative: vec![0.0, 1.0],
        }
    }

    /// Mixture placing `weight_high` on `high` and the rest on `low`.
    pub fn two_point(low: Bid, high: Bid, weight_high: f64) -> Result<Self> {
        Self::from_weights([(low, 1.0 - weight_high), (high, weight_high)])
    }

    pub fn atoms(&self) -> &[BidAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn prob_abstain(&self) -> f64 {
        match self.atoms.first() {
            Some(BidAtom {
                bid: Bid::Abstain,
                prob,
            }) => *prob,
            _ => 0.0,
        }
    }

    /// Probability of abstaining or bidding strictly below `amount`.
    pub fn prob_below(&self, amount: f64) -> f64 {
        let idx = self
            .atoms
            .partition_point(|a| a.bid.total_cmp(&Bid::Amount(amount)) == Ordering::Less);
        self.cumulative[idx]
    }

    /// Probability of bidding exactly `amount`.
    pub fn prob_at(&self, amount: f64) -> f64 {
        let target = Bid::Amount(amount);
        let idx = self
            .atoms
            .partition_point(|a| a.bid.total_cmp(&target) == Ordering::Less);
        match self.atoms.get(idx) {
            Some(a) if a.bid == target => a.prob,
            _ => 0.0,
        }
    }

    /// Amounts in the support, ascending.
    pub fn amounts(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().filter_map(|a| a.bid.amount())
    }
}

/// `n` bidders, `m` auctions, a value for every pair, each bidder's kind and
/// optional per-auction reserves of accuracy `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionInstance {
    values: Vec<Vec<f64>>,
    kinds: Vec<BidderKind>,
    reserves: Option<Vec<f64>>,
    gamma: Option<f64>,
}

impl AuctionInstance {
    pub fn new(
        values: Vec<Vec<f64>>,
        kinds: Vec<BidderKind>,
        reserves: Option<Vec<f64>>,
        gamma: Option<f64>,
    ) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::invalid("values", "need at least one bidder"));
        }
        let m = values[0].len();
        if m == 0 {
            return Err(Error::invalid("values", "need at least one auction"));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(Error::invalid(
                    format!("values[{i}]"),
                    format!("row has {} entries, expected {m}", row.len()),
                ));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::invalid(
                        format!("values[{i}][{j}]"),
                        format!("value {v} is not a finite nonnegative number"),
                    ));
                }
            }
        }
        if kinds.len() != n {
            return Err(Error::invalid(
                "kinds",
                format!("{} kinds for {n} bidders", kinds.len()),
            ));
        }
        let column_max: Vec<f64> = (0..m)
            .map(|j| values.iter().map(|row| row[j]).fold(0.0, f64::max))
            .collect();
        if column_max.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid(
                "values",
                "optimal welfare must be positive (some value must be > 0)",
            ));
        }
        if let Some(g) = gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::invalid("gamma", format!("{g} outside [0, 1]")));
            }
            if reserves.is_none() {
                return Err(Error::invalid("gamma", "accuracy given without reserves"));
            }
        }
        if let Some(rs) = &reserves {
            if rs.len() != m {
                return Err(Error::invalid(
                    "reserves",
                    format!("{} reserves for {m} auctions", rs.len()),
                ));
            }
            let g = gamma.unwrap_or(0.0);
            for (j, (&r, &top)) in rs.iter().zip(&column_max).enumerate() {
                let slack = 1e-12 * top.max(1.0);
                if !r.is_finite() || r < g * top - slack || r > top + slack {
                    return Err(Error::invalid(
                        format!("reserves[{j}]"),
                        format!("reserve {r} outside [{}, {top}]", g * top),
                    ));
                }
            }
        }
        Ok(Self {
            values,
            kinds,
            reserves,
            gamma,
        })
    }

    pub fn num_bidders(&self) -> usize {
        self.values.len()
    }

    pub fn num_auctions(&self) -> usize {
        self.values[0].len()
    }

    pub fn value(&self, bidder: usize, auction: usize) -> f64 {
        self.values[bidder][auction]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn kind(&self, bidder: usize) -> BidderKind {
        self.kinds[bidder]
    }

    pub fn kinds(&self) -> &[BidderKind] {
        &self.kinds
    }

    pub fn reserve(&self, auction: usize) -> Option<f64> {
        self.reserves.as_ref().map(|r| r[auction])
    }

    pub fn reserves(&self) -> Option<&[f64]> {
        self.reserves.as_deref()
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn max_value(&self, auction: usize) -> f64 {
        self.values
            .iter()
            .map(|row| row[auction])
            .fold(0.0, f64::max)
    }

    /// Whether `a` beats `b` when both submit the same bid in `auction`.
    pub fn wins_tie(&self, auction: usize, a: usize, b: usize) -> bool {
        let (va, vb) = (self.values[a][auction], self.values[b][auction]);
        va > vb || (va == vb && a < b)
    }

    pub(crate) fn check_bidder(&self, bidder: usize) -> Result<()> {
        if bidder >= self.num_bidders() {
            return Err(Error::IndexOutOfRange {
                what: "bidder",
                index: bidder,
                limit: self.num_bidders(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_auction(&self, auction: usize) -> Result<()> {
        if auction >= self.num_auctions() {
            return Err(Error::IndexOutOfRange {
                what: "auction",
                index: auction,
                limit: self.num_auctions(),
            });
        }
        Ok(())
    }

    /// Returns a copy with every value and reserve multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.values
                .iter()
                .map(|row| row.iter().map(|v| v * c).collect())
                .collect(),
            self.kinds.clone(),
            self.reserves
                .as_ref()
                .map(|rs| rs.iter().map(|r| r * c).collect()),
            self.gamma,
        )
    }
}

/// One bid distribution per (bidder, auction). Bidders randomize
/// independently of each other and across auctions.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    rows: Vec<Vec<BidDistribution>>,
}

impl StrategyProfile {
    pub fn new(rows: Vec<Vec<BidDistribution>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || m == 0 {
            return Err(Error::invalid("profile", "profile must be non-empty"));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::invalid(
                format!("profile[{i}]"),
                format!("row has {} entries, expected {m}", rows[i].len()),
            ));
        }
        Ok(Self { rows })
    }

    /// Every bidder bids `bids[i][j]` deterministically.
    pub fn deterministic(bids: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            bids.iter()
                .map(|row| {
                    row.iter()
                        .map(|&b| BidDistribution::deterministic(b))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn num_bidders(&self) -> usize {
        self.rows.len()
    }

    pub fn num_auctions(&self) -> usize {
        self.rows[0].len()
    }

    pub fn get(&self, bidder: usize, auction: usize) -> &BidDistribution {
        &self.rows[bidder][auction]
    }

    pub fn row(&self, bidder: usize) -> &[BidDistribution] {
        &self.rows[bidder]
    }

    pub fn rows(&self) -> &[Vec<BidDistribution>] {
        &self.rows
    }

    /// Copy of this profile with `bidder`'s row replaced.
    pub fn with_row(&self, bidder: usize, row: Vec<BidDistribution>) -> Result<Self> {
        if bidder >= self.rows.len() {
            return Err(Error::IndexOutOfRange {
                what: "bidder",
                index: bidder,
                limit: self.rows.len(),
            });
        }
        if row.len() != self.num_auctions() {
            return Err(Error::invalid(
                format!("profile[{bidder}]"),
                format!(
                    "row has {} entries, expected {}",
                    row.len(),
                    self.num_auctions()
                ),
            ));
        }
        let mut rows = self.rows.clone();
        rows[bidder] = row;
        Ok(Self { rows })
    }

    pub fn check_shape(&self, instance: &AuctionInstance) -> Result<()> {
        if self.num_bidders() != instance.num_bidders()
            || self.num_auctions() != instance.num_auctions()
        {
            return Err(Error::ShapeMismatch {
                n: instance.num_bidders(),
                m: instance.num_auctions(),
                got_rows: self.num_bidders(),
                got_cols: self.num_auctions(),
            });
        }
        Ok(())
    }
}

/// Exact expected allocation, value and payment for every (bidder, auction).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeSummary {
    pub win_prob: Vec<Vec<f64>>,
    pub exp_value: Vec<Vec<f64>>,
    pub exp_payment: Vec<Vec<f64>>,
    pub per_bidder_value: Vec<f64>,
    pub per_bidder_payment: Vec<f64>,
    pub welfare: f64,
    pub optimal_welfare: f64,
    pub ratio: f64,
}

impl OutcomeSummary {
    /// Expected value minus expected payment for `bidder`.
    pub fn roi_slack(&self, bidder: usize) -> f64 {
        self.per_bidder_value[bidder] - self.per_bidder_payment[bidder]
    }
}

/// The bidder with the highest value in `auction`, ties to the smaller index.
pub fn rightful_winner(instance: &AuctionInstance, auction: usize) -> usize {
    let mut best = 0;
    for i in 1..instance.num_bidders() {
        if instance.value(i, auction) > instance.value(best, auction) {
            best = i;
        }
    }
    best
}

/// Sum over auctions of the highest value.
pub fn optimal_welfare(instance: &AuctionInstance) -> f64 {
    (0..instance.num_auctions())
        .map(|j| instance.max_value(j))
        .sum()
}

/// Winner of a single realized bid vector, or `None` if nobody is eligible.
pub fn allocate(instance: &AuctionInstance, auction: usize, bids: &[Bid]) -> Option<usize> {
    let reserve = instance.reserve(auction).unwrap_or(0.0);
    let mut winner: Option<(usize, f64)> = None;
    for (i, bid) in bids.iter().enumerate() {
        let Bid::Amount(b) = *bid else { continue };
        if b < reserve {
            continue;
        }
        winner = match winner {
            None => Some((i, b)),
            Some((w, wb)) => {
                if b > wb || (b == wb && instance.wins_tie(auction, i, w)) {
                    Some((i, b))
                } else {
                    Some((w, wb))
                }
            }
        };
    }
    winner.map(|(i, _)| i)
}

/// Exact probability that `bidder` wins `auction` by submitting `bid`,
/// holding every other bidder's distribution in `profile` fixed.
pub fn win_probability(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    auction: usize,
    bid: Bid,
) -> Result<f64> {
    profile.check_shape(instance)?;
    instance.check_bidder(bidder)?;
    instance.check_auction(auction)?;
    Ok(win_probability_unchecked(
        instance, profile, bidder, auction, bid,
    ))
}

pub(crate) fn win_probability_unchecked(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    bidder: usize,
    auction: usize,
    bid: Bid,
) -> f64 {
    let Bid::Amount(b) = bid else { return 0.0 };
    if let Some(r) = instance.reserve(auction) {
        if b < r {
            return 0.0;
        }
    }
    let mut q = 1.0;
    for k in 0..instance.num_bidders() {
        if k == bidder {
            continue;
        }
        let dist = profile.get(k, auction);
        let mut beaten = dist.prob_below(b);
        if instance.wins_tie(auction, bidder, k) {
            beaten += dist.prob_at(b);
        }
        q *= beaten.min(1.0);
        if q == 0.0 {
            break;
        }
    }
    q
}

/// Exact expected outcome of `profile`.
pub fn evaluate_profile(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
) -> Result<OutcomeSummary> {
    profile.check_shape(instance)?;
    let (n, m) = (instance.num_bidders(), instance.num_auctions());
    let mut win_prob = vec![vec![0.0; m]; n];
    let mut exp_payment = vec![vec![0.0; m]; n];
    for j in 0..m {
        for i in 0..n {
            let (mut x, mut p) = (0.0, 0.0);
            for atom in profile.get(i, j).atoms() {
                let q = win_probability_unchecked(instance, profile, i, j, atom.bid);
                x += atom.prob * q;
                p += atom.prob * q * atom.bid.price();
            }
            win_prob[i][j] = x;
            exp_payment[i][j] = p;
        }
    }
    Ok(summarize(instance, win_prob, exp_payment))
}

pub(crate) fn summarize(
    instance: &AuctionInstance,
    win_prob: Vec<Vec<f64>>,
    exp_payment: Vec<Vec<f64>>,
) -> OutcomeSummary {
    let exp_value: Vec<Vec<f64>> = win_prob
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, x)| x * instance.value(i, j))
                .collect()
        })
        .collect();
    let per_bidder_value: Vec<f64> = exp_value.iter().map(|r| r.iter().sum()).collect();
    let per_bidder_payment: Vec<f64> = exp_payment.iter().map(|r| r.iter().sum()).collect();
    let welfare: f64 = per_bidder_value.iter().sum();
    let optimal = optimal_welfare(instance);
    OutcomeSummary {
        win_prob,
        exp_value,
        exp_payment,
        per_bidder_value,
        per_bidder_payment,
        welfare,
        optimal_welfare: optimal,
        ratio: welfare / optimal,
    }
}

/// One point of the joint bid space of a single auction.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcome {
    pub prob: f64,
    pub bids: Vec<Bid>,
    pub winner: Option<usize>,
}

/// Walks the full product of bid supports in `auction`. Fails when the
/// product has more than `cap` outcomes.
pub fn enumerate_outcomes(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    auction: usize,
    cap: u128,
) -> Result<Vec<JointOutcome>> {
    profile.check_shape(instance)?;
    instance.check_auction(auction)?;
    let n = instance.num_bidders();
    let size = (0..n).fold(1u128, |acc, i| {
        acc.saturating_mul(profile.get(i, auction).len() as u128)
    });
    if size > cap {
        return Err(Error::EnumerationCap { auction, size, cap });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut idx = vec![0usize; n];
    loop {
        let mut prob = 1.0;
        let mut bids = Vec::with_capacity(n);
        for (i, &k) in idx.iter().enumerate() {
            let atom = profile.get(i, auction).atoms()[k];
            prob *= atom.prob;
            bids.push(atom.bid);
        }
        let winner = allocate(instance, auction, &bids);
        out.push(JointOutcome { prob, bids, winner });
        // odometer increment
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < profile.get(pos, auction).len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}
