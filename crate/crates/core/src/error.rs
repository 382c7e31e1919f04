use thiserror::Error;

/// Errors raised while parsing Newick text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NewickError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("duplicate taxon label `{0}`")]
    DuplicateLabel(String),
    #[error("vertex of degree {degree} after unrooting (expected 1 or 3)")]
    BadDegree { degree: usize },
    #[error("tree has no leaves")]
    Empty,
}

/// Errors raised by tree construction and tree operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("taxon `{0}` is not in the tree")]
    UnknownTaxon(String),
    #[error("taxon `{0}` given more than once")]
    RepeatedTaxon(String),
    #[error("empty taxon set")]
    EmptyTaxonSet,
    #[error("trees are on different taxon sets")]
    TaxaMismatch,
    #[error("edge index {0} out of range")]
    InvalidEdge(usize),
    #[error("attachment does not fit component {side}: {msg}")]
    BadAttachment { side: usize, msg: &'static str },
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error("leaf count must be positive")]
    NoLeaves,
}

/// Errors raised by the kernelizer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("rule {rule} requires rules 1 and 2 to be exhausted first")]
    Precondition { rule: u8 },
    #[error("unknown reduction rule {0}")]
    UnknownRule(u8),
}

/// Errors raised by model construction and solving.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("instance has {taxa} taxa, oracle limit is {limit}")]
    TooLarge { taxa: usize, limit: usize },
    #[error("not a partition of the taxon set: {0}")]
    NotAPartition(String),
}

/// Errors raised by the bound computations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("character has no state for taxon `{0}`")]
    MissingState(String),
    #[error("no eligible character with minimum state size {p} on {taxa} taxa")]
    NoEligibleCharacter { p: usize, taxa: usize },
}

/// Errors raised by the experiment harness.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("statistics need at least one row")]
    EmptyTable,
}
