//! Coherent-state receivers for pulse position modulation (PPM).
//!
//! The crate evaluates symbol error probabilities of on/off displacement
//! receivers for `M`-ary PPM:
//!
//! * closed-form references ([`bounds`]): Helstrom bound, direct detection,
//!   conditional pulse nulling (CPN) and the strong-pulse limit of the greedy
//!   receiver;
//! * the greedy revision-ratio receiver ([`greedy`]), its lookup table and an
//!   exact decision-tree evaluation for small `M` ([`exact`]);
//! * the numerically optimal adaptive displacement receiver, solved by
//!   backward induction over a scalar sufficient statistic ([`exact`]);
//! * a seeded, order-independent Monte Carlo engine ([`montecarlo`]);
//! * sweep orchestration, CSV records and scaling fits ([`sweep`],
//!   [`record`], [`analysis`]).
//!
//! Click statistics are abstracted behind [`channel::ClickModel`]; the
//! Poissonian model with background noise and mode mismatch is
//! [`channel::PoissonClickModel`].

pub mod analysis;
pub mod bounds;
pub mod channel;
pub mod error;
pub mod exact;
pub mod greedy;
pub mod montecarlo;
pub mod record;
pub mod search;
pub mod sweep;

pub use channel::{ChannelParams, ClickModel, PoissonClickModel};
pub use error::{Error, Result};
pub use search::{GridConfig, ScalarSearchConfig};
