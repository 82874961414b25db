//! Shared numerical machinery: compensated summation, quadrature rules,
//! normal-distribution functions, and small symmetric-matrix linear algebra.

pub mod linalg;
pub mod normal;
pub mod quad;
pub mod sum;
