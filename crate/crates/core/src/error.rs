use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),

    #[error("not a permutation: {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("group closure exceeded cap of {cap} elements")]
    CapExceeded { cap: usize },

    #[error("empty generator list")]
    NoGenerators,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("index {index} out of range for degree {degree}")]
    IndexOutOfRange { index: usize, degree: usize },

    #[error("H is not a subgroup of G")]
    NotSubgroup,

    #[error("H is not normal in G")]
    NotNormal,

    #[error("G is not transitive")]
    NotTransitive,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),

    #[error("entry ({i}, {j}) is not a projection (defect {defect:e})")]
    NotProjection { i: usize, j: usize, defect: f64 },

    #[error("entry ({i}, {j}) has rank {rank} in a quasi-flat model")]
    RankTooLarge { i: usize, j: usize, rank: usize },

    #[error("rank pattern {line} {index} sums to {sum}, expected {expected}")]
    RankSumMismatch {
        line: &'static str,
        index: usize,
        sum: usize,
        expected: usize,
    },

    #[error("empty sample set")]
    EmptySamples,

    #[error("symbol {symbol} at ({i}, {j}) outside 0..={k}")]
    SymbolOutOfRange {
        i: usize,
        j: usize,
        symbol: usize,
        k: usize,
    },

    #[error("grid is not square")]
    NotSquare,

    #[error("invalid sparse Latin square: {0}")]
    InvalidSquare(String),

    #[error("permutation values coincide at point {point}")]
    ValuesCoincide { point: usize },

    #[error("invalid model family: {0}")]
    InvalidFamily(String),

    #[error("operation not supported for this family: {0}")]
    Unsupported(String),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("model point does not match family: {0}")]
    PointMismatch(String),

    #[error("element is not in the group")]
    NotInGroup,

    #[error("subgroup is not abelian")]
    NotAbelian,

    #[error("character is not multiplicative")]
    NotACharacter,

    #[error("word count exceeds cap of {cap}")]
    TooManyWords { cap: usize },

    #[error("empty model space: no admissible sparse Latin square")]
    EmptyModelSpace,

    #[error("sample count must be at least 1")]
    NoSamples,

    #[error("identity word has no survival verdict")]
    IdentityWord,

    #[error("parameter out of range: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
