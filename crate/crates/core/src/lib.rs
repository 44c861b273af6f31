//! Open-path percolation and increasing (accessible) paths on random
//! rooted N-ary trees.
//!
//! * [`exact`]: closed forms, recursions and asymptotic predictions.
//! * [`dp`]: exact laws of the spanning count and the longest open run.
//! * [`montecarlo`]: seeded samplers and a deterministic parallel batch runner.
//! * [`oracle`]: exhaustive enumeration at tiny scale, used to check the rest.
//! * [`stats`]: empirical laws, intervals and distribution distances.
//! * [`cli`]: the `treepath` command-line surface and verification suite.

pub mod cli;
pub mod dp;
pub mod error;
pub mod exact;
pub mod model;
pub mod montecarlo;
pub mod numeric;
pub mod oracle;
pub mod pmf;
pub mod stats;

pub use error::{Error, Result};
pub use model::{ModelParams, PathQuery, RngSpec, VertexAddr};
pub use pmf::{Pmf, NO_PATH};
