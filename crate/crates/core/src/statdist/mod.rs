//! Special functions, distribution laws, quadrature and random streams.

pub mod chisq;
pub mod fdist;
pub mod ks;
pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use chisq::{central_ln_sf, central_sf, chisq_cdf, chisq_isf, chisq_quantile, chisq_sf, ChiSquareNoncentral};
pub use fdist::{f_cdf, f_isf, f_quantile, f_sf, FNoncentral};
pub use normal::{log_normal_cdf, normal_cdf, normal_isf, normal_pdf, normal_quantile, normal_sf};
pub use quadrature::GaussHermiteRule;
pub use rng::{rng_stream, stream_id, RngStream};
