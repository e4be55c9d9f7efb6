//! Special functions and half-line quadrature.

mod quadrature;
mod special;

pub use quadrature::{
    integrate_half_line, laguerre_rule, log_integrate_half_line, log_integrate_half_line_traced,
    LaguerreRule, QuadratureConfig, QuadratureMethod, QuadraturePath,
};
pub use special::{
    chi_square_sf, digamma, erfc, log_gamma, log_sum_exp, normal_sf, regularized_gamma_p,
    regularized_gamma_q, regularized_incomplete_beta, trigamma,
};

pub(crate) use special::{ln_factorial, ln_gamma, ln_rising, log_add_exp, lse};
