//! JSON file formats.
//!
//! Instance:
//! `{"n":2,"m":2,"values":[[1,0],[0,0.99]],"kinds":["value","value"],"reserves":[..],"gamma":..}`
//! with `reserves` and `gamma` optional.
//!
//! Profile: an `n x m` array of atom lists, each atom either
//! `{"bid":0.5,"prob":0.5}` or `{"abstain":true,"prob":0.5}`.
//!
//! A scenario bundles an instance with an optional profile plus metadata
//! written by the instance constructors.

use serde::{Deserialize, Serialize};

use crate::auction::{AuctionInstance, Bid, BidAtom, BidDistribution, BidderKind, StrategyProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRepr {
    pub n: usize,
    pub m: usize,
    pub values: Vec<Vec<f64>>,
    pub kinds: Vec<BidderKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserves: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl From<&AuctionInstance> for InstanceRepr {
    fn from(inst: &AuctionInstance) -> Self {
        Self {
            n: inst.num_bidders(),
            m: inst.num_auctions(),
            values: inst.values().to_vec(),
            kinds: inst.kinds().to_vec(),
            reserves: inst.reserves().map(<[f64]>::to_vec),
            gamma: inst.gamma(),
        }
    }
}

impl InstanceRepr {
    pub fn to_instance(&self) -> Result<AuctionInstance> {
        if self.values.len() != self.n {
            return Err(Error::invalid(
                "values",
                format!("{} rows but n = {}", self.values.len(), self.n),
            ));
        }
        if let Some(i) = self.values.iter().position(|r| r.len() != self.m) {
            return Err(Error::invalid(
                format!("values[{i}]"),
                format!("{} entries but m = {}", self.values[i].len(), self.m),
            ));
        }
        AuctionInstance::new(
            self.values.clone(),
            self.kinds.clone(),
            self.reserves.clone(),
            self.gamma,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abstain: Option<bool>,
    pub prob: f64,
}

/// JSON form of one [`BidDistribution`].
pub type DistributionRepr = Vec<AtomRepr>;

pub(crate) fn serialize_row<S: serde::Serializer>(
    row: &[BidDistribution],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let repr: Vec<DistributionRepr> = row.iter().map(distribution_repr).collect();
    repr.serialize(s)
}

pub(crate) fn serialize_profile<S: serde::Serializer>(
    profile: &StrategyProfile,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    profile_repr(profile).serialize(s)
}

pub fn distribution_repr(d: &BidDistribution) -> DistributionRepr {
    d.atoms()
        .iter()
        .map(|a| match a.bid {
            Bid::Abstain => AtomRepr {
                bid: None,
                abstain: Some(true),
                prob: a.prob,
            },
            Bid::Amount(b) => AtomRepr {
                bid: Some(b),
                abstain: None,
                prob: a.prob,
            },
        })
        .collect()
}

pub fn parse_distribution(repr: &[AtomRepr], field: &str) -> Result<BidDistribution> {
    let mut atoms = Vec::with_capacity(repr.len());
    for (k, a) in repr.iter().enumerate() {
        let bid = match (a.bid, a.abstain) {
            (Some(b), None | Some(false)) => Bid::Amount(b),
            (None, Some(true)) => Bid::Abstain,
            _ => {
                return Err(Error::invalid(
                    format!("{field}[{k}]"),
                    "atom needs exactly one of `bid` or `\"abstain\": true`",
                ))
            }
        };
        let atom = BidAtom { bid, prob: a.prob };
        atom.check(&format!("{field}[{k}]"))?;
        atoms.push(atom);
    }
    // files may list atoms in any order; checked first so diagnostics
    // carry the file's indices
    atoms.sort_by(|a, b| a.bid.total_cmp(&b.bid));
    BidDistribution::validated(atoms, field)
}

pub type ProfileRepr = Vec<Vec<DistributionRepr>>;

pub fn profile_repr(profile: &StrategyProfile) -> ProfileRepr {
    profile
        .rows()
        .iter()
        .map(|row| row.iter().map(distribution_repr).collect())
        .collect()
}

pub fn parse_profile(repr: &ProfileRepr) -> Result<StrategyProfile> {
    let rows = repr
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, d)| parse_distribution(d, &format!("profile[{i}][{j}]")))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    StrategyProfile::new(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRepr {
    pub instance: InstanceRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Map<String, serde_json::Value>>,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub instance: AuctionInstance,
    pub profile: Option<StrategyProfile>,
    pub predicted_ratio: Option<f64>,
    pub params: Option<serde_json::Map<String, serde_json::Value>>,
}

impl Scenario {
    pub fn to_repr(&self) -> ScenarioRepr {
        ScenarioRepr {
            instance: InstanceRepr::from(&self.instance),
            profile: self.profile.as_ref().map(profile_repr),
            predicted_ratio: self.predicted_ratio,
            params: self.params.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_repr()).expect("scenario serializes")
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::invalid("json", e.to_string())
}

pub fn parse_instance(text: &str) -> Result<AuctionInstance> {
    let repr: InstanceRepr = serde_json::from_str(text).map_err(json_error)?;
    repr.to_instance()
}

pub fn instance_to_json(instance: &AuctionInstance) -> String {
    serde_json::to_string(&InstanceRepr::from(instance)).expect("instance serializes")
}

pub fn parse_profile_json(text: &str) -> Result<StrategyProfile> {
    let repr: ProfileRepr = serde_json::from_str(text).map_err(json_error)?;
    parse_profile(&repr)
}

pub fn profile_to_json(profile: &StrategyProfile) -> String {
    serde_json::to_string(&profile_repr(profile)).expect("profile serializes")
}

/// Accepts either a scenario object or a bare instance object.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(json_error)?;
    let repr: ScenarioRepr = if value.get("instance").is_some() {
        serde_json::from_value(value).map_err(json_error)?
    } else {
        ScenarioRepr {
            instance: serde_json::from_value(value).map_err(json_error)?,
            profile: None,
            predicted_ratio: None,
            params: None,
        }
    };
    let instance = repr
        .instance
        .to_instance()
        .map_err(|e| prefix(e, "instance"))?;
    let profile = repr.profile.as_ref().map(parse_profile).transpose()?;
    if let Some(p) = &profile {
        p.check_shape(&instance)?;
    }
    Ok(Scenario {
        instance,
        profile,
        predicted_ratio: repr.predicted_ratio,
        params: repr.params,
    })
}

fn prefix(e: Error, outer: &str) -> Error {
    match e {
        Error::Invalid { field, message } => Error::Invalid {
            field: format!("{outer}.{field}"),
            message,
        },
        other => other,
    }
}
