//! Online Nash social welfare maximization for divisible items.
//!
//! Items arrive one at a time; each must be split among the agents before the
//! next one is seen. The crate provides the online algorithms (Myopic Greedy,
//! Half-and-Half, Greedy with Rounded Values and their guessing variants), the
//! offline Eisenberg-Gale benchmark, and the instance generators used to
//! measure competitive ratios.
//!
//! ```
//! use nash_stream_core::{myopic_greedy, solve_eg, EgOptions, Instance, Item};
//!
//! let inst = Instance::new(2, vec![
//!     Item::new(1.0, vec![1.0, 1.0]),
//!     Item::new(1.0, vec![0.0, 1.0]),
//! ])?;
//! let alg = myopic_greedy(&inst)?;
//! let opt = solve_eg(&inst, &EgOptions::default())?;
//! assert!(alg.nash_welfare() <= opt.nash_welfare() * (1.0 + 1e-9));
//! # Ok::<(), nash_stream_core::Error>(())
//! ```

pub mod bounds;
pub mod error;
pub mod generators;
pub mod metrics;
pub mod model;
pub mod offline;
pub mod online;
pub mod waterfill;

pub use error::{Error, Result};
pub use generators::GeneratorSpec;
pub use metrics::{balance_ratio, competitive_ratio, impartiality_ratio, nash_welfare, utilities, RatioReport};
pub use model::{Allocation, Instance, Item, UtilityVector};
pub use offline::{brute_force_oracle, solve_eg, EgOptions, EgSolution, StepRule};
pub use online::{
    half_and_half, half_and_half_guessed, myopic_greedy, rounded_greedy, rounded_greedy_guessed, AuditViolation,
    RunTrace,
};
pub use waterfill::{waterfill, WaterfillResult};
