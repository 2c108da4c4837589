//! Pricing European calls under Merton-Garman stochastic volatility by Monte Carlo
//! evaluation of a velocity-space path integral, with Black-Scholes and direct SDE
//! simulation as reference pricers.

pub mod black_scholes;
pub mod cli;
pub mod engine;
pub mod error;
pub mod gauss_path;
pub mod kernel;
pub mod mc;
pub mod mean_path;
pub mod mg_alpha1;
pub mod mg_general;
pub mod params;
pub mod quadrature;
pub mod sde_oracle;

pub use engine::{ReferenceMeasure, VariantMode};
pub use error::{Error, Result};
pub use mc::PriceEstimate;
pub use params::{GridSpec, MCSpec, MGParams, MarketParams};

/// Engine version reported by the command-line front end.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
