//! Point-set skinning over sphere-mesh skeletons.
//!
//! A cloud is encoded once against a rest skeleton as base-points on a
//! bundle of baselines plus heights along a detail direction field, and can
//! then be re-synthesized for any pose or anatomy change.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod deformer;
pub mod encoder;
pub mod error;
pub mod fixtures;
pub mod geom;
pub mod io;
pub mod pipeline;
pub mod reference;
pub mod sphere_mesh;

pub use error::{Error, Result};
pub use geom::Vec3;

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
pub(crate) fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
