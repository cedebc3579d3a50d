//! Exact and numerical verification of twisted character sums modulo odd
//! prime powers, the Kloosterman delta expansion, and the oscillatory
//! kernels that accompany them.

pub mod characters;
pub mod circle_method;
pub mod classic_sums;
pub mod modarith;
pub mod oscillatory;
pub mod quadrature;
pub mod report;
pub mod sum_value;
pub mod twisted_sums;
pub mod verify;

pub use num_complex::Complex64;
pub use sum_value::SumValue;
