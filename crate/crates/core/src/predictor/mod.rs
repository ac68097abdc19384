//! Autoregressive next-symbol predictors.
//!
//! A predictor session alternates strictly between [`Predictor::predict`]
//! and [`Predictor::observe`], starting with `predict`. Every built-in
//! model keeps its state in exact integers and only rounds once, in
//! [`quantize_distribution`], so the distribution sequence is a pure
//! function of the spec and the observed symbols on every platform.

mod builtin;
mod quantize;
mod spec;

pub use builtin::{ContextModel, Order0Model, StaticModel, UniformModel};
pub use quantize::{quantize_distribution, quantize_wide, Weight};
pub use spec::{PredictorKind, PredictorSpec, BUILTIN_VERSION, MAX_ORDER};

use crate::coder::QuantizedDistribution;
use crate::error::{Error, Result};

pub trait Predictor {
    /// Distribution of the next symbol. The session does not change until
    /// [`observe`](Predictor::observe) is called.
    fn predict(&mut self) -> Result<&QuantizedDistribution>;

    /// Conditions the session on the symbol that actually occurred.
    fn observe(&mut self, symbol: u32) -> Result<()>;
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn predict(&mut self) -> Result<&QuantizedDistribution> {
        (**self).predict()
    }

    fn observe(&mut self, symbol: u32) -> Result<()> {
        (**self).observe(symbol)
    }
}

/// Starts a fresh, empty-context session for a built-in predictor.
///
/// External predictors need a live connection; see
/// [`crate::protocol::connect`].
pub fn begin_session(spec: &PredictorSpec) -> Result<Box<dyn Predictor + Send>> {
    spec.validate()?;
    if spec.kind != PredictorKind::External && spec.version_tag != BUILTIN_VERSION {
        return Err(Error::PredictorVersion {
            expected: spec.to_string(),
            found: PredictorSpec {
                version_tag: BUILTIN_VERSION.to_string(),
                ..spec.clone()
            }
            .to_string(),
        });
    }
    let s = spec.alphabet_size;
    Ok(match spec.kind {
        PredictorKind::Uniform => Box::new(UniformModel::new(s)?),
        PredictorKind::Order0 => Box::new(Order0Model::new(s)?),
        PredictorKind::OrderK => Box::new(ContextModel::new(s, spec.order)?),
        PredictorKind::External => {
            return Err(Error::PredictorUnavailable(format!(
                "{spec} requires a predictor server"
            )))
        }
    })
}

/// Tracks the predict/observe alternation shared by all sessions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Turn {
    predicted: bool,
}

impl Turn {
    pub(crate) fn start_predict(&mut self) -> Result<()> {
        if self.predicted {
            return Err(Error::ProtocolMisuse("predict called twice without observe"));
        }
        self.predicted = true;
        Ok(())
    }

    pub(crate) fn start_observe(&mut self) -> Result<()> {
        if !self.predicted {
            return Err(Error::ProtocolMisuse("observe called without a pending predict"));
        }
        self.predicted = false;
        Ok(())
    }
}
