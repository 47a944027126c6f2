//! Query strategies.
//!
//! Uncertainty methods score every valid patch placement per image, keep the
//! best non-overlapping placements per image ([`select_image_patches`]), then
//! pick the final query from the pooled candidates ([`global_select`]),
//! optionally after Gumbel perturbation ([`perturb_scores`]). Random
//! baselines draw placements directly ([`random_query`], [`fg_aware_query`]),
//! and [`starting_budget`] seeds the first annotation round.

mod budget;
mod noise;
mod random;
mod select;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use budget::starting_budget;
pub use noise::{gumbel_from_uniform, perturb_scores};
pub use random::{fg_aware_query, random_query, DrawMode, Drawn, ForegroundIndex, RETRIES_PER_PATCH};
pub use select::{global_select, select_image_patches};

use crate::error::Error;
use crate::uncertainty::UncertaintyKind;
use crate::volumes::PatchBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Random,
    #[serde(rename = "Random33FG")]
    Random33Fg,
    #[serde(rename = "Random66FG")]
    Random66Fg,
    #[serde(rename = "PE")]
    PredictiveEntropy,
    #[serde(rename = "BALD")]
    Bald,
    #[serde(rename = "PowerPE")]
    PowerPe,
    #[serde(rename = "PowerBALD")]
    PowerBald,
    #[serde(rename = "SoftrankBALD")]
    SoftrankBald,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Random,
        Method::Random33Fg,
        Method::Random66Fg,
        Method::PredictiveEntropy,
        Method::Bald,
        Method::PowerPe,
        Method::PowerBald,
        Method::SoftrankBald,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "Random",
            Method::Random33Fg => "Random33FG",
            Method::Random66Fg => "Random66FG",
            Method::PredictiveEntropy => "PE",
            Method::Bald => "BALD",
            Method::PowerPe => "PowerPE",
            Method::PowerBald => "PowerBALD",
            Method::SoftrankBald => "SoftrankBALD",
        }
    }

    /// Uncertainty the method ranks by; `None` for the random baselines.
    pub fn uncertainty(self) -> Option<UncertaintyKind> {
        match self {
            Method::PredictiveEntropy | Method::PowerPe => Some(UncertaintyKind::PredictiveEntropy),
            Method::Bald | Method::PowerBald | Method::SoftrankBald => Some(UncertaintyKind::Bald),
            _ => None,
        }
    }

    /// Share of foreground-oversampled draws for the random baselines.
    pub fn foreground_share(self) -> Option<f64> {
        match self {
            Method::Random => Some(0.0),
            Method::Random33Fg => Some(0.33),
            Method::Random66Fg => Some(0.66),
            _ => None,
        }
    }

    /// Noise used when the configuration does not override it (beta = 1).
    pub fn default_noise(self) -> NoiseSpec {
        match self {
            Method::PowerPe | Method::PowerBald => NoiseSpec::power(Beta::new(1.0)),
            Method::SoftrankBald => NoiseSpec::softrank(Beta::new(1.0)),
            _ => NoiseSpec::none(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Inverse noise scale. Serialized as a number, or `"inf"` for no noise.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Beta(f64);

impl Beta {
    pub const INFINITY: Beta = Beta(f64::INFINITY);

    /// Panics unless `beta > 0` (infinity allowed).
    pub fn new(beta: f64) -> Self {
        Self::try_new(beta).expect("beta must be positive")
    }

    pub fn try_new(beta: f64) -> Result<Self, Error> {
        if beta > 0.0 {
            Ok(Beta(beta))
        } else {
            Err(Error::InvalidConfig(format!("beta must be > 0, got {beta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl Serialize for Beta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let v = match Raw::deserialize(d)? {
            Raw::Num(v) => v,
            Raw::Text(t) if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity") => {
                f64::INFINITY
            }
            Raw::Text(t) => return Err(serde::de::Error::custom(format!("invalid beta {t:?}"))),
        };
        Beta::try_new(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    /// `ln(score) + Gumbel(0, 1/beta)`.
    Power,
    /// `-ln(rank) + Gumbel(0, 1/beta)`.
    Softrank,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub beta: Beta,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            beta: Beta::INFINITY,
        }
    }

    pub fn power(beta: Beta) -> Self {
        Self {
            kind: NoiseKind::Power,
            beta,
        }
    }

    pub fn softrank(beta: Beta) -> Self {
        Self {
            kind: NoiseKind::Softrank,
            beta,
        }
    }
}

/// A scored placement in one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub image_id: String,
    pub patch: PatchBox,
    pub score: f64,
}

impl Candidate {
    pub fn new(image_id: impl Into<String>, patch: PatchBox, score: f64) -> Self {
        Self {
            image_id: image_id.into(),
            patch,
            score,
        }
    }

    /// Descending score, then `(image_id, origin)` ascending.
    pub(crate) fn rank_cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.tie_key().cmp(&other.tie_key()))
    }

    pub(crate) fn tie_key(&self) -> (&str, [usize; 3]) {
        (&self.image_id, self.patch.origin)
    }
}

/// One patch of a persisted query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPatch {
    pub image: String,
    pub origin: [usize; 3],
    pub size: [usize; 3],
    pub score: Option<f64>,
}

impl QueryPatch {
    pub fn patch(&self) -> PatchBox {
        PatchBox::new(self.origin, self.size)
    }
}

impl From<Candidate> for QueryPatch {
    fn from(c: Candidate) -> Self {
        Self {
            image: c.image_id,
            origin: c.patch.origin,
            size: c.patch.size,
            score: Some(c.score),
        }
    }
}

/// The patches requested in one loop; serialized as `loop_XXX.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    #[serde(rename = "loop")]
    pub loop_index: usize,
    pub method: Method,
    pub seed: u64,
    pub patches: Vec<QueryPatch>,
    /// Foreground-oversampled draws that fell back to a fully random patch.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub fallback_draws: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}
