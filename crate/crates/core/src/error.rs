use thiserror::Error;

/// Errors raised while building or querying models.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("component `{component}`: action `{action}` is declared with more than one role")]
    OverlappingAlphabet { component: String, action: String },
    #[error("component `{component}`: unknown state `{state}`")]
    UnknownState { component: String, state: String },
    #[error("component `{component}`: duplicate state `{state}`")]
    DuplicateState { component: String, state: String },
    #[error("component `{component}`: action `{action}` is not declared")]
    UndeclaredAction { component: String, action: String },
    #[error("system has no components")]
    EmptySystem,
    #[error("duplicate component name `{0}`")]
    DuplicateComponent(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("synchronisation type specification has no entry for communicating action `{0}`")]
    SpecIncomplete(String),
    #[error("interval [{min},{max}] is empty")]
    EmptyInterval { min: u32, max: u32 },
    #[error("action `{0}` is not communicating")]
    NotCommunicating(String),
    #[error("malformed label {0}")]
    MalformedLabel(String),
    #[error("state {0} is not reachable in the team automaton")]
    ForeignRequirement(String),
    #[error("global model is ill-formed: {0}")]
    IllFormedModel(String),
    #[error("signature: {0}")]
    BadSignature(String),
    #[error("composition: {0}")]
    NotComposable(String),
    #[error("feature `{0}` is not declared")]
    UnknownFeature(String),
    #[error("product {0} is not valid for the feature model")]
    InvalidProduct(String),
    #[error("{features} features exceed the enumeration cap of {cap}")]
    FeatureCapExceeded { features: usize, cap: usize },
    #[error("featured components disagree on features or feature model")]
    FeatureMismatch,
    #[error("unknown atom {0} (not in the model alphabet)")]
    UnknownAtom(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
