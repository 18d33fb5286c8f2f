//! Problems: structured instances, finite-horizon verifiers, totality codings, and
//! finite-tolerance operators.

mod coloring;
mod registry;
mod structured;
mod tree;
mod verify;

pub use coloring::{
    block_bits, coloring_extent, coloring_functional, decode_color, encode_coloring, encoded_bit, read_color, read_color_tape,
    totalize_coloring, Coloring, Colors, OMEGA_CAP,
};
pub use registry::*;
pub use structured::{ads, cac, max_dependent, min_dependent, order_coloring, sher, striv, Restricted};
pub use tree::{decode_tree, encode_tree, measure_at_level, node_at, node_index, tree_extent, Tree, FULL_SCAN_DEPTH};
pub use verify::{
    prefix_members, show_set, tolerance_bound, tolerance_identity_fn, tolerance_rt, tolerance_rt_fn, tolerance_ts_fn,
    verify_homogeneous_at, verify_path_at, verify_rainbow_at, verify_thin_at, ThinSolution, Verdict,
};
