//! Codings that recover noncomputable information from solutions, and the sequential
//! solvers whose limits they illustrate.

mod jump;
mod kummer;
mod sequential;

pub use jump::{
    certified_homogeneous, jump_certificate, jump_coloring, jump_decode, jump_decode_one, jump_instance,
    jump_test_predicates, quantifier, BoundedPredicate, Quantifier, SkolemOracle,
};
pub use kummer::{kummer_claim_check, kummer_coloring, kummer_test_predicates, LimitPredicate, Staircase};
pub use sequential::{
    bounded_sample, limit_lift, seq_rrt1_greedy, seq_ts1_omega_solver, LiftedInstance, SeqTs1Solution,
};
