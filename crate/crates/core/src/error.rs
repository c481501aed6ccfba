use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("segment {id} at ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds {
        id: usize,
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },
    #[error("segments {first} and {second} share pixel ({x}, {y})")]
    DuplicatePosition {
        first: usize,
        second: usize,
        x: u32,
        y: u32,
    },
    #[error("segment {id} has invalid descriptor {value}")]
    InvalidDescriptor { id: usize, value: f64 },
    #[error("segment id {id} out of range (field has {len} segments)")]
    UnknownSegment { id: usize, len: usize },
    #[error("window size {0} must be odd and positive")]
    InvalidWindow(usize),
    #[error("two segments share position ({0}, {1}); connecting orientation undefined")]
    CoincidentPositions(u32, u32),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("cannot build a CRF over an empty segment field")]
    EmptyField,
    #[error("labelling has {got} entries, expected {expected}")]
    LabelLength { expected: usize, got: usize },
    #[error("pairwise term ({i}, {j}) with cost {cost} violates submodularity")]
    NotSubmodular { i: usize, j: usize, cost: f64 },
    #[error("exhaustive search supports at most {max} segments, got {got}")]
    TooManySegments { max: usize, got: usize },
    #[error("map dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("image must be at least 2x2, got {0}x{1}")]
    DegenerateImage(u32, u32),
    #[error("invalid map value {value} at index {index}")]
    InvalidMapValue { index: usize, value: f64 },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("empty threshold sweep")]
    EmptySweep,
    #[error("search box is empty in dimension {0}")]
    EmptyBox(usize),
    #[error("budget {budget} is below the minimum {required}")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("could only place {placed} of {requested} clutter segments")]
    PlacementFailed { placed: usize, requested: usize },
    #[error("invalid stimulus: {0}")]
    InvalidStimulus(String),
}
