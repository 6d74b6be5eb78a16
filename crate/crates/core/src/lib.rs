//! Multiray generalized arcsine laws and occupation-time statistics for
//! infinite-ergodic model systems.
//!
//! The crate has three layers:
//!
//! * the distribution engine — one-sided stable sampling ([`stable`]),
//!   simplex-valued generalized arcsine laws ([`gas`]) and the closed-form
//!   two-ray density/CDF ([`lamperti`]);
//! * the model systems — interval maps with indifferent fixed points
//!   ([`maps`]) and the multiray Markov chain with exact wandering-rate
//!   analytics ([`chain`]), driven at ensemble scale by [`engine`];
//! * statistical verdicts — goodness-of-fit distances ([`stats`]) and
//!   parameter recovery / limit-theorem checks ([`fit`]), bundled into
//!   reproducible named experiments ([`experiments`]).
//!
//! Everything that consumes randomness takes an explicit RNG, and ensembles
//! derive one ChaCha stream per trajectory from a master seed, so results
//! are a pure function of their configuration at any worker count.

pub mod chain;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod gas;
pub mod lamperti;
pub mod maps;
pub mod quad;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};
pub use gas::{GasParams, LaplaceQuery, SimplexSample};
