//! Exact discovery of polynomial relations on the graphs of black-box
//! functions, and reconstruction of a global rational representation `P/Q`
//! of a separately regular two-argument function from its slices.
//!
//! Everything is exact: scalars are arbitrary-precision rationals or residues
//! modulo a prime, matrices are eliminated fraction-free, and every accepted
//! relation is checked by exact evaluation at fresh random points.

pub mod annihilator;
pub mod expr;
pub mod kernel;
pub mod oracle;
pub mod poly;
pub mod reconstruct;
pub mod scalar;

pub use annihilator::{
    find_annihilator, find_annihilator_with, verify_identity, AnnihilatorError, AnnihilatorResult, NotFound,
    NotFoundReason, SearchConfig, SearchOutcome, Verification,
};
pub use kernel::{CValue, EvalMatrix, GraphPoint, GraphSample, KernelError, PointSelection};
pub use oracle::{Arity, FunctionOracle, Oracle, OracleError, SampleTable, Sampler, SamplerKind};
pub use poly::{BasisOrdering, Monomial, Poly, PolyError};
pub use reconstruct::{
    direct_reconstruct, reconstruct_separately_regular, RationalRep, ReconstructConfig, ReconstructError,
    Reconstruction, SliceProfile,
};
pub use scalar::{FieldDesc, Scalar, ScalarError, DEFAULT_PRIME, DEFAULT_RANGE};
