//! Orthogonal arrays over prime-power fields and random OA sampling.

mod array;
mod gf;

pub use array::{
    construct_oa, random_oa, verify_strength, verify_weak_strength, OrthogonalArray,
    RandomOaSample, StrengthReport, StrengthViolation,
};
pub use gf::{default_q, largest_supported_at_most, supported_orders, GaloisField};
