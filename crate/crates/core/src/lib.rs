//! t-SMILES: fragment-based tree serialization of molecules.

pub mod amt;
pub mod assemble;
pub mod chem;
pub mod codec;
pub mod corpus;
pub mod fragment;
pub mod generator;
pub mod metrics;

use thiserror::Error;

pub type Descriptors = chem::Descriptors<f64>;
pub type TokenHistogram = metrics::TokenHistogram<f64>;
pub type DepthHistogram = metrics::DepthHistogram<f64>;
pub type DistributionReport = metrics::DistributionReport<f64>;
pub type GenerationReport = generator::GenerationReport<f64>;
pub type NGramModel = generator::NGramModel<f64>;

/// Unrecognized name for a scheme, dialect, rule or similar option.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} '{value}'")]
pub struct UnknownName {
    pub kind: &'static str,
    pub value: String,
}

impl UnknownName {
    pub fn new(kind: &'static str, value: &str) -> Self {
        UnknownName { kind, value: value.to_string() }
    }
}
