//! Numerical building blocks: normal distribution functions, adaptive quadrature,
//! one-dimensional root finding and minimisation.

pub mod normal;
pub mod optimize;
pub mod quadrature;

pub use normal::{normal_cdf, normal_pdf, normal_quantile, normal_survival};
pub use optimize::{bisect, geometric_grid, golden_section, GridMinimum};
pub use quadrature::{integrate, integrate_to_infinity, QuadratureOptions};
