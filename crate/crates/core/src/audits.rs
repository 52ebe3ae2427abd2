//! Ledger quantities of an equilibrium and the inequalities between them.
//!
//! Bidders split into utility maximizers `B_u` and value maximizers `B_v`;
//! auctions split by the kind of their rightful winner.
//!
//! - `A`: total value of value maximizers.
//! - `B`: value utility maximizers get in auctions they rightfully win.
//! - `C`: all payments in auctions rightfully won by value maximizers.
//! - `D`: payments by everyone else in auctions rightfully won by utility
//!   maximizers.
//! - `V1`, `V2`: optimal welfare from the two groups of auctions.
//!
//! Every check reports `lhs`, `rhs`, `margin = lhs - rhs` and passes when
//! the margin is at least `-tolerance`.

use serde::Serialize;

use crate::auction::{
    evaluate_profile, rightful_winner, AuctionInstance, BidderKind, OutcomeSummary, StrategyProfile,
};
use crate::bounds::local_factor;
use crate::error::{Error, Result};

/// Local payment bound of one auction rightfully won by a utility maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalEntry {
    pub auction: usize,
    pub rightful_winner: usize,
    /// Win probability of the rightful winner.
    pub x: f64,
    /// `(1 - x + x ln x) v`.
    pub bound: f64,
    pub others_payment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditLedger {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "V1")]
    pub v1: f64,
    #[serde(rename = "V2")]
    pub v2: f64,
    /// `min(1, A / V1)`, so that `A >= x V1`, when `V1 > 0`.
    pub x_value: Option<f64>,
    /// `B / V2` when `V2 > 0`.
    pub y_value: Option<f64>,
    pub per_auction: Vec<LocalEntry>,
    pub welfare: f64,
    pub total_payment: f64,
    /// Payments of utility maximizers in auctions they rightfully win.
    pub rightful_utility_payment: f64,
}

fn is_value(instance: &AuctionInstance, bidder: usize) -> bool {
    instance.kind(bidder) == BidderKind::ValueMax
}

fn local_entry(
    instance: &AuctionInstance,
    outcome: &OutcomeSummary,
    auction: usize,
    gamma: f64,
) -> LocalEntry {
    let rw = rightful_winner(instance, auction);
    let v = instance.value(rw, auction);
    let x = outcome.win_prob[rw][auction].clamp(0.0, 1.0);
    let others_payment = (0..instance.num_bidders())
        .filter(|&i| i != rw)
        .map(|i| outcome.exp_payment[i][auction])
        .sum();
    LocalEntry {
        auction,
        rightful_winner: rw,
        x,
        bound: local_factor(x, gamma) * v,
        others_payment,
    }
}

/// Ledger of the exact outcome of `profile`.
pub fn compute_ledger(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
) -> Result<AuditLedger> {
    let outcome = evaluate_profile(instance, profile)?;
    Ok(ledger_from_outcome(instance, &outcome))
}

fn ledger_from_outcome(instance: &AuctionInstance, outcome: &OutcomeSummary) -> AuditLedger {
    let (n, m) = (instance.num_bidders(), instance.num_auctions());
    let a = (0..n)
        .filter(|&i| is_value(instance, i))
        .map(|i| outcome.per_bidder_value[i])
        .sum();
    let (mut b, mut c, mut d, mut v1, mut v2, mut own) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut per_auction = Vec::new();
    for j in 0..m {
        let rw = rightful_winner(instance, j);
        let paid: f64 = (0..n).map(|i| outcome.exp_payment[i][j]).sum();
        if is_value(instance, rw) {
            v1 += instance.value(rw, j);
            c += paid;
        } else {
            v2 += instance.value(rw, j);
            b += outcome.exp_value[rw][j];
            own += outcome.exp_payment[rw][j];
            d += paid - outcome.exp_payment[rw][j];
            per_auction.push(local_entry(instance, outcome, j, 0.0));
        }
    }
    AuditLedger {
        a,
        b,
        c,
        d,
        v1,
        v2,
        x_value: (v1 > 0.0).then(|| (a / v1).min(1.0)),
        y_value: (v2 > 0.0).then(|| b / v2),
        per_auction,
        welfare: outcome.welfare,
        total_payment: outcome.per_bidder_payment.iter().sum(),
        rightful_utility_payment: own,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuditCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = lhs - rhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            tolerance,
            pass: margin >= -tolerance,
        }
    }
}

/// Floating-point slack added to every tolerance.
const ROUNDING: f64 = 1e-9;

/// Tolerance for the aggregate inequalities at an `epsilon`-equilibrium.
///
/// Each value maximizer can fall `epsilon` short of its best value and of
/// ROI feasibility, and each utility maximizer `epsilon` short of the best
/// utility in each auction.
pub fn aggregate_tolerance(instance: &AuctionInstance, epsilon: f64) -> f64 {
    let (n, m) = (
        instance.num_bidders() as f64,
        instance.num_auctions() as f64,
    );
    n * (m + 1.0) * epsilon + ROUNDING
}

/// Tolerance for the local payment bound of an auction whose rightful
/// winner has value `v`.
///
/// An `epsilon` utility shortfall loosens the bound on the competing-bid
/// CDF from `(v - b) F(b) / (v - t)` to `((v - b) F(b) + epsilon) / (v - t)`;
/// integrating the difference costs at most `epsilon (2 + ln(1 + v / epsilon))`.
pub fn local_tolerance(v: f64, epsilon: f64) -> f64 {
    epsilon * (2.0 + (1.0 + v / epsilon).ln()) + ROUNDING
}

/// `A + C >= V1`.
pub fn audit_lemma_value(ledger: &AuditLedger, tolerance: f64) -> AuditCheck {
    AuditCheck::new("value", ledger.a + ledger.c, ledger.v1, tolerance)
}

/// `(1 - gamma) A + C >= V1`.
pub fn audit_lemma_value_ml(ledger: &AuditLedger, gamma: f64, tolerance: f64) -> AuditCheck {
    AuditCheck::new(
        "value_ml",
        (1.0 - gamma) * ledger.a + ledger.c,
        ledger.v1,
        tolerance,
    )
}

/// `welfare >= max{A, C + D} + B`.
pub fn audit_lemma_combination(ledger: &AuditLedger, tolerance: f64) -> AuditCheck {
    AuditCheck::new(
        "combination",
        ledger.welfare,
        ledger.a.max(ledger.c + ledger.d) + ledger.b,
        tolerance,
    )
}

/// Result of the local payment bound in one auction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalCheck {
    pub entry: LocalEntry,
    pub gamma: f64,
    pub check: AuditCheck,
}

fn local_check(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    auction: usize,
    gamma: f64,
    epsilon: f64,
    name: &str,
) -> Result<LocalCheck> {
    instance.check_auction(auction)?;
    let outcome = evaluate_profile(instance, profile)?;
    let entry = local_entry(instance, &outcome, auction, gamma);
    let v = instance.value(entry.rightful_winner, auction);
    Ok(LocalCheck {
        entry,
        gamma,
        check: AuditCheck::new(
            format!("{name}[{auction}]"),
            entry.others_payment,
            entry.bound,
            local_tolerance(v, epsilon),
        ),
    })
}

/// Others' payment in `auction` is at least `(1 - x + x ln x) v`, where `x`
/// is the win probability of the rightful winner and `v` its value.
pub fn audit_lemma_local(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    auction: usize,
    epsilon: f64,
) -> Result<LocalCheck> {
    local_check(instance, profile, auction, 0.0, epsilon, "local")
}

/// Others' payment in `auction` is at least `(1 - x + (1 - gamma) x ln x) v`.
pub fn audit_lemma_local_ml(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    auction: usize,
    gamma: f64,
    epsilon: f64,
) -> Result<LocalCheck> {
    check_gamma(gamma)?;
    local_check(instance, profile, auction, gamma, epsilon, "local_ml")
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("{gamma} is not in [0, 1]")));
    }
    Ok(())
}

/// Reserve accuracy to audit against: the declared `gamma`, or else the
/// largest accuracy the reserves satisfy. `None` without reserves.
pub fn effective_gamma(instance: &AuctionInstance) -> Option<f64> {
    let reserves = instance.reserves()?;
    Some(instance.gamma().unwrap_or_else(|| {
        reserves
            .iter()
            .enumerate()
            .map(|(j, &r)| (r / instance.max_value(j)).min(1.0))
            .fold(1.0, f64::min)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub ledger: AuditLedger,
    pub gamma: Option<f64>,
    pub epsilon: f64,
    pub checks: Vec<AuditCheck>,
    pub all_pass: bool,
}

/// Runs every applicable audit: value, combination and the local bound in
/// each auction rightfully won by a utility maximizer, plus the
/// reserve-aware versions when the instance has reserves.
pub fn run_audits(
    instance: &AuctionInstance,
    profile: &StrategyProfile,
    epsilon: f64,
) -> Result<AuditReport> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} is not a nonnegative number"),
        ));
    }
    let outcome = evaluate_profile(instance, profile)?;
    let ledger = ledger_from_outcome(instance, &outcome);
    let tol = aggregate_tolerance(instance, epsilon);
    let gamma = effective_gamma(instance);
    let mut checks = vec![
        audit_lemma_value(&ledger, tol),
        audit_lemma_combination(&ledger, tol),
    ];
    for e in &ledger.per_auction {
        let v = instance.value(e.rightful_winner, e.auction);
        checks.push(AuditCheck::new(
            format!("local[{}]", e.auction),
            e.others_payment,
            e.bound,
            local_tolerance(v, epsilon),
        ));
    }
    if let Some(g) = gamma {
        checks.push(audit_lemma_value_ml(&ledger, g, tol));
        for e in &ledger.per_auction {
            let ml = local_entry(instance, &outcome, e.auction, g);
            let v = instance.value(e.rightful_winner, e.auction);
            checks.push(AuditCheck::new(
                format!("local_ml[{}]", e.auction),
                ml.others_payment,
                ml.bound,
                local_tolerance(v, epsilon),
            ));
        }
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(AuditReport {
        ledger,
        gamma,
        epsilon,
        checks,
        all_pass,
    })
}
