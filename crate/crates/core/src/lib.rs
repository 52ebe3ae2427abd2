//! First-price auctions shared by quasi-linear utility maximizers and
//! ROI-constrained value maximizers.
//!
//! * [`auction`]: instances, randomized bids, exact outcome evaluation.
//! * [`frontier`]: value-payment frontiers and best responses.
//! * [`equilibrium`]: best-response gaps, equilibrium reports, dynamics.
//! * [`bounds`]: closed-form price-of-anarchy bounds and their grid checks.
//! * [`instances`]: the extremal constructions and CDF discretization.
//! * [`audits`]: welfare/payment ledger and the inequalities it must satisfy.
//! * [`io`]: JSON formats.

pub mod auction;
pub mod audits;
pub mod bounds;
pub mod equilibrium;
pub mod error;
pub mod frontier;
pub mod instances;
pub mod io;

pub use auction::{
    evaluate_profile, optimal_welfare, rightful_winner, win_probability, AuctionInstance, Bid,
    BidAtom, BidDistribution, BidderKind, OutcomeSummary, StrategyProfile,
};
pub use error::{Error, Result};
pub use frontier::{CandidateGrid, Frontier};
