use thiserror::Error;

use crate::expr::SyntaxError;
use crate::fuzzy::FuzzyError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("invalid method body: {0}")]
    Syntax(#[from] SyntaxError),

    #[error("duplicate id `{id}` in `{entity}`")]
    DuplicateId { entity: String, id: String },
    #[error("class `{0}` has neither properties nor methods")]
    EmptyClass(String),
    #[error("extensional class `{0}` needs a non-empty extension")]
    ExtensionMissing(String),
    #[error("object `{object}` property `{property}` must have a concrete value")]
    AbstractValueOnObject { object: String, property: String },
    #[error("invalid value for `{property}`: {reason}")]
    InvalidValue { property: String, reason: String },
    #[error("invalid method `{method}`: {reason}")]
    InvalidMethod { method: String, reason: String },
    #[error("semantic mismatch: `{left}` vs `{right}`")]
    SemanticMismatch { left: String, right: String },

    #[error("name `{0}` is already bound")]
    DuplicateName(String),
    #[error("relation endpoint `{0}` does not exist")]
    UnknownEndpoint(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("relation {0} is already present")]
    DuplicateRelation(String),

    #[error("{op} expects {expected} arguments, got {got}")]
    ArityError {
        op: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("`{0}` appears more than once among the arguments")]
    RepeatedArgument(String),
    #[error("arguments mix objects and classes")]
    MixedKinds,
    #[error("{0} does not exist")]
    DoesNotExist(String),
    #[error("name `{0}` collides with a live entity")]
    NameCollision(String),

    #[error("modifier `{0}` has no changes")]
    EmptyChangeList(String),
    #[error("modifier `{modifier}` changes `{property}` more than once")]
    DuplicateChange { modifier: String, property: String },
    #[error("modifier `{modifier}` change on `{property}` leaves the value unchanged")]
    NoOpChange { modifier: String, property: String },
    #[error("modifier `{0}` is already defined")]
    DuplicateModifier(String),
    #[error("unknown modifier `{0}`")]
    UnknownModifier(String),
    #[error("modifier `{modifier}` is not applicable to `{entity}`: {}", reasons.join("; "))]
    NotApplicable {
        modifier: String,
        entity: String,
        reasons: Vec<String>,
    },

    #[error("`{entity}` has no method `{method}`")]
    UnknownMethod { entity: String, method: String },
    #[error("binding `{variable}` of `{method}` cannot be resolved: {reason}")]
    UnresolvedBinding {
        method: String,
        variable: String,
        reason: String,
    },
    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("document has foodn_version {found}, expected {expected}")]
    SchemaVersionMismatch { found: String, expected: u64 },
    #[error("corrupt document: {0}")]
    CorruptDocument(String),
}

impl Error {
    /// Errors that describe the knowledge itself rather than bad input.
    pub fn is_domain_error(&self) -> bool {
        !matches!(
            self,
            Error::UnknownEntity(_) | Error::UnknownModifier(_) | Error::UnknownMethod { .. }
        )
    }
}
