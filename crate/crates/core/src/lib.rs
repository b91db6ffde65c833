//! Covering numbers, scale-window lower-dimension estimates, and
//! certificates for lower bounds on the modified lower dimension of finite
//! metric spaces.
//!
//! The central certificate is a (k,l)-regular family ([`regular`]): a
//! finite tree of points whose verified distances prove that some subset of
//! the space has lower dimension at least `log₂ l / k` across the family's
//! scales.

pub mod covering;
pub mod error;
pub mod generators;
pub mod io;
pub mod lowerdim;
pub mod metric;
pub mod regular;
pub mod tree;

pub use covering::{covering_number, packing_number, Mode};
pub use error::{Error, Result};
pub use lowerdim::{dimension_bound, lower_dim_estimate, mod_lower_dim_bound, ScaleWindow};
pub use metric::{Metric, PointCloud, SparseVec, Subset};
pub use regular::{search_regular, verify_regular, RegularFamily};
