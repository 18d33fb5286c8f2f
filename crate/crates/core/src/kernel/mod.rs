//! Bit sequences, finite prefixes, oracle functionals, and the shared codecs.

mod bits;
pub mod codec;
mod functional;

pub use bits::{Point, Prefix};
pub use codec::{
    binomial, cantor_pair, cantor_unpair, column, family, interleave, rank_tuple, tuple_rank, tuples_of,
};
pub use functional::{
    check_downward_closure, evaluate, exhaust, Assignment, Computed, Ctx, Divergence, EvalOutcome, Functional,
    Halt, Leaf, Meter, Step, Tape,
};
