//! Operations, fractional polymorphisms, multiset structures and the LP
//! deciders for symmetric fractional polymorphisms.

mod certify;
mod check;
mod colgen;
mod decide;
mod multiset;
mod operation;

pub use certify::{certify_blp_solvability, farkas_gap_instance, ArityOutcome, ArityResult, CertifyReport, GapReport, Verdict};
pub use check::{
    check_fractional_homomorphism, check_fractional_polymorphism, check_multimorphism, check_polymorphism, Check,
    FractionalMap, InequalityViolation,
};
pub use decide::{
    find_fractional_homomorphism, find_tsfp, find_tsfp_via_homomorphism, homomorphism_to_tsfp, multiset_tuples,
    symmetric_operation_from_map, tsfp_to_homomorphism, verify_homomorphism_refutation, verify_tsfp_refutation,
    Certificate, FarkasEntry, Refutation,
};
pub use multiset::{binomial, build_multiset_structure, MultisetDomain};
pub use operation::{
    apply_componentwise, generate_clone_bounded, is_symmetric, max_op, min_op, superpose, superpose_fractional,
    CloneSearch, FractionalOperation, Operation,
};
