//! Handcrafted networks whose mechanism is known in closed form.
//!
//! [`build_model`] realises each [`ModelSpec`] as a [`FeedForwardNet`]
//! built only from linear, rectifier and softmax layers. The constructions
//! are exact on the declared support: continuous features in `[-B, B]`,
//! categorical features in `{0, 1}` and Boolean atoms in `{-1, +1}`.
//! [`closed_form`] evaluates the same functions directly, without going
//! through a network, and [`validate_model`] compares the two.
//!
//! [`FeedForwardNet`]: crate::nn::FeedForwardNet

mod boolean;
mod build;
mod closed_form;
mod spec;

pub use boolean::{compile_boolean, parse_boolean, BoolExpr, BooleanAst, Connective};
pub use build::build_model;
pub use closed_form::{closed_form, support_probes, validate_model};
pub use spec::{
    Family, FeatureKind, InteractingPair, InteractingParams, ModelFamily, ModelSpec,
    PertinentNegativeParams, UncertaintyParams, DEFAULT_INPUT_BOUND, MIN_ABS_WEIGHT,
};
