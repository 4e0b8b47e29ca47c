//! Conditioning events on the population size at the observation time.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schedule::Schedule;

/// Slack added before flooring `B phi(t)` so that exact integers survive
/// floating-point noise.
pub const FLOOR_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditioningEvent {
    /// `Z(t) > 0`
    Survival,
    /// `0 < Z(t) <= B phi(t)`, accepted as `Z(t) <= floor(B phi(t) + 1e-12)`.
    SmallPopulation { phi: Schedule },
    /// `0 < Z(t) < B a t`, accepted as `Z(t) <= ceil(B a t) - 1`.
    Linear { a: f64 },
}

impl ConditioningEvent {
    /// Largest accepted population size, or `None` when unbounded.
    pub fn max_population(&self, b: f64, t: f64) -> Option<u64> {
        match *self {
            ConditioningEvent::Survival => None,
            ConditioningEvent::SmallPopulation { phi } => {
                Some((b * phi.eval(t) + FLOOR_SLACK).floor().max(0.0) as u64)
            }
            ConditioningEvent::Linear { a } => Some(((b * a * t).ceil() - 1.0).max(0.0) as u64),
        }
    }

    pub fn accepts(&self, z: u64, max_population: Option<u64>) -> bool {
        z > 0 && max_population.is_none_or(|m| z <= m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConditioningEvent::Survival => Ok(()),
            ConditioningEvent::SmallPopulation { phi } => {
                if phi.is_increasing() || matches!(phi, Schedule::Const(c) if c > 0.0) {
                    Ok(())
                } else {
                    Err(Error::Schedule(format!("{phi} cannot bound a population")))
                }
            }
            ConditioningEvent::Linear { a } if a > 0.0 => Ok(()),
            ConditioningEvent::Linear { a } => {
                Err(Error::Precondition(format!("linear event needs a > 0, got {a}")))
            }
        }
    }
}

impl fmt::Display for ConditioningEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditioningEvent::Survival => f.write_str("survival"),
            ConditioningEvent::SmallPopulation { phi } => write!(f, "small:{phi}"),
            ConditioningEvent::Linear { a } => write!(f, "linear:{a}"),
        }
    }
}

impl FromStr for ConditioningEvent {
    type Err = Error;

    /// `survival`, `small:<schedule>` (e.g. `small:pow:0.6`) or `linear:<a>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "survival" {
            return Ok(ConditioningEvent::Survival);
        }
        if let Some(rest) = s.strip_prefix("small:") {
            return Ok(ConditioningEvent::SmallPopulation { phi: rest.parse()? });
        }
        if let Some(rest) = s.strip_prefix("linear:") {
            let a = rest
                .parse()
                .map_err(|_| Error::Precondition(format!("'{rest}' is not a number")))?;
            return Ok(ConditioningEvent::Linear { a });
        }
        Err(Error::Precondition(format!("unknown event '{s}'")))
    }
}

impl Serialize for ConditioningEvent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
