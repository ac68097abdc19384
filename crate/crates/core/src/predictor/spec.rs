use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Version tag of the built-in predictors in this build. Archives written
/// with any other built-in tag are refused.
pub const BUILTIN_VERSION: &str = "v1";

pub const MAX_ORDER: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    Uniform,
    Order0,
    OrderK,
    External,
}

impl PredictorKind {
    fn name(self) -> &'static str {
        match self {
            PredictorKind::Uniform => "uniform",
            PredictorKind::Order0 => "order0",
            PredictorKind::OrderK => "orderK",
            PredictorKind::External => "external",
        }
    }
}

/// Identity of a predictor, serialized canonically as
/// `kind[:k=K]:S=N:tag`, e.g. `orderK:k=2:S=256:v1`.
///
/// The tag is everything after the `S=` field, so external version tags may
/// themselves contain colons.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    pub alphabet_size: usize,
    /// Context length; only meaningful for `OrderK`.
    pub order: u32,
    pub version_tag: String,
}

impl PredictorSpec {
    pub fn uniform(alphabet_size: usize) -> Self {
        Self::builtin(PredictorKind::Uniform, alphabet_size, 0)
    }

    pub fn order0(alphabet_size: usize) -> Self {
        Self::builtin(PredictorKind::Order0, alphabet_size, 0)
    }

    pub fn order_k(order: u32, alphabet_size: usize) -> Self {
        Self::builtin(PredictorKind::OrderK, alphabet_size, order)
    }

    pub fn external(alphabet_size: usize, version_tag: impl Into<String>) -> Self {
        Self {
            kind: PredictorKind::External,
            alphabet_size,
            order: 0,
            version_tag: version_tag.into(),
        }
    }

    fn builtin(kind: PredictorKind, alphabet_size: usize, order: u32) -> Self {
        Self {
            kind,
            alphabet_size,
            order,
            version_tag: BUILTIN_VERSION.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=65536).contains(&self.alphabet_size) {
            return Err(Error::InvalidSpec(format!(
                "alphabet size {} outside 2..=65536",
                self.alphabet_size
            )));
        }
        if self.order > MAX_ORDER {
            return Err(Error::InvalidSpec(format!(
                "order {} exceeds {MAX_ORDER}",
                self.order
            )));
        }
        if self.kind != PredictorKind::OrderK && self.order != 0 {
            return Err(Error::InvalidSpec(format!(
                "{} takes no order",
                self.kind.name()
            )));
        }
        if self.version_tag.is_empty() {
            return Err(Error::InvalidSpec("empty version tag".into()));
        }
        Ok(())
    }

    /// Parses user-facing shorthands as well as canonical strings:
    /// `uniform`, `order0`, `order2`, `orderK:k=3`, `external`, or any full
    /// canonical string. Shorthands get `alphabet_size` and the built-in tag.
    pub fn parse_lenient(text: &str, alphabet_size: usize) -> Result<Self> {
        if let Ok(spec) = text.parse::<PredictorSpec>() {
            return Ok(spec);
        }
        let spec = match text {
            "uniform" => Self::uniform(alphabet_size),
            "order0" => Self::order0(alphabet_size),
            "external" => Self::external(alphabet_size, "pending"),
            _ => {
                let order = text
                    .strip_prefix("orderK:k=")
                    .or_else(|| text.strip_prefix("order"))
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| Error::UnknownPredictor(text.to_string()))?;
                Self::order_k(order, alphabet_size)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for PredictorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if self.kind == PredictorKind::OrderK {
            write!(f, ":k={}", self.order)?;
        }
        write!(f, ":S={}:{}", self.alphabet_size, self.version_tag)
    }
}

impl FromStr for PredictorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownPredictor(s.to_string());
        let (kind_name, rest) = s.split_once(':').ok_or_else(unknown)?;
        let kind = match kind_name {
            "uniform" => PredictorKind::Uniform,
            "order0" => PredictorKind::Order0,
            "orderK" => PredictorKind::OrderK,
            "external" => PredictorKind::External,
            _ => return Err(unknown()),
        };
        let mut rest = rest;
        let mut order = 0;
        if kind == PredictorKind::OrderK {
            let (k, tail) = rest.split_once(':').ok_or_else(unknown)?;
            order = k
                .strip_prefix("k=")
                .and_then(|v| v.parse().ok())
                .ok_or_else(unknown)?;
            rest = tail;
        }
        let (size, tag) = rest.split_once(':').ok_or_else(unknown)?;
        let alphabet_size = size
            .strip_prefix("S=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(unknown)?;
        let spec = PredictorSpec {
            kind,
            alphabet_size,
            order,
            version_tag: tag.to_string(),
        };
        spec.validate().map_err(|_| unknown())?;
        Ok(spec)
    }
}
