//! Symbols `a(x, ξ)`, admissible cut-offs, regularization and the reality,
//! parity and reversibility predicates on 2×2 matrix symbols.

mod cutoff;
mod jet;
mod profile;
mod symbol;

pub use cutoff::{admissible_cutoff, disagreement_band, CutoffConfig};
pub use jet::{factorial, Jet, MAX_DERIV};
pub use profile::Profile;
pub use symbol::{
    is_parity_preserving, is_reality_preserving, is_reversibility_preserving, mat_max_abs, mat_max_diff, mat_mul,
    mat_swap, parity_defect, reality_defect, regularize, reversibility_defect, symbol_hash, Mat2, SamplePlan, Symbol,
    SymbolMatrix2, SymbolTerm, PREDICATE_TOL,
};
