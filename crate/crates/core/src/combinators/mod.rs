//! Reductions as data, and the constructions that combine them.

pub mod fanout;
pub mod products;
pub mod soundness;
pub mod squash;
pub mod witness;

pub use fanout::*;
pub use products::*;
pub use soundness::*;
pub use squash::*;
pub use witness::*;
