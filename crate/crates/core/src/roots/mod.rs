//! Zero counting, Wronskian certificates, the bound formulas and the
//! construction of perturbations with many simple zeros.

pub mod bounds;
pub mod construct;
pub mod count;
pub mod wronskian;

pub use bounds::{bound_Z, classify, BoundPair, Region};
pub use construct::{construct_lower_bound, construct_max_zeros, default_targets, Construction};
pub use count::{count_canonical, count_zeros, Multiplicity, Rigor, RootInterval, ZeroReport};
pub use wronskian::{ect_certify, wronskian_monomials};
