use thiserror::Error;

/// Faults raised by the simulation engine and its geometric queries.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("agent penetrated obstacle at ({x}, {y})")]
    PenetratedObstacle { x: f64, y: f64 },
    #[error("agent escaped arena at ({x}, {y})")]
    EscapedArena { x: f64, y: f64 },
    #[error("unknown target id {0}")]
    UnknownTarget(usize),
    #[error("factor rows have mismatched lengths: expected {expected}, got {got} in `{row}`")]
    RowLength {
        row: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid scenario: {0}")]
    Scenario(String),
}
