//! Named parametric time schedules (`pow:g`, `lin:a`, `const:c`).

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `t^gamma`
    Pow(f64),
    /// `a * t`
    Lin(f64),
    /// constant `c`
    Const(f64),
}

impl Schedule {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Schedule::Pow(g) => t.powf(g),
            Schedule::Lin(a) => a * t,
            Schedule::Const(c) => c,
        }
    }

    /// True for schedules that are `o(t)`.
    pub fn is_sublinear(&self) -> bool {
        match *self {
            Schedule::Pow(g) => g < 1.0,
            Schedule::Lin(_) => false,
            Schedule::Const(_) => true,
        }
    }

    pub fn is_increasing(&self) -> bool {
        match *self {
            Schedule::Pow(g) => g > 0.0,
            Schedule::Lin(a) => a > 0.0,
            Schedule::Const(_) => false,
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Schedule(format!("'{s}' is not of the form kind:value")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Schedule(format!("'{value}' is not a number")))?;
        if !v.is_finite() {
            return Err(Error::Schedule(format!("'{value}' is not finite")));
        }
        match kind.trim() {
            "pow" => Ok(Schedule::Pow(v)),
            "lin" => Ok(Schedule::Lin(v)),
            "const" => Ok(Schedule::Const(v)),
            other => Err(Error::Schedule(format!("unknown schedule kind '{other}'"))),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Pow(g) => write!(f, "pow:{g}"),
            Schedule::Lin(a) => write!(f, "lin:{a}"),
            Schedule::Const(c) => write!(f, "const:{c}"),
        }
    }
}

impl Serialize for Schedule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
