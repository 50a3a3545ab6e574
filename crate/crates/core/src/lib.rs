//! Utility-optimal admission control, routing and link scheduling for
//! networks carrying unicast, broadcast, multicast and anycast traffic.
//!
//! Decisions are driven by a precedence-relaxed virtual network: every
//! admitted packet is counted at each edge of its route at once, and the
//! resulting virtual queue lengths serve as edge prices. Each slot the
//! controller
//!
//! 1. routes every class on its cheapest route under virtual-queue weights,
//! 2. admits the amount minimizing `C_k x - V U_k(x)` on `[0, a_max]`,
//! 3. activates a maximum-weight interference-free set of ON links, and
//! 4. updates the virtual queues.
//!
//! The physical network then moves integer packets along the same routes,
//! resolving contention nearest-to-origin first. The [`dual`] module runs the
//! subgradient method on the dual of the static utility maximization problem;
//! with unit step size its iterates coincide with the virtual queues, which
//! [`correspondence`] checks slot by slot.

pub mod correspondence;
pub mod dual;
pub mod error;
pub mod harness;
pub mod physical;
pub mod policy;
pub mod routing;
pub mod topology;
pub mod traffic;

pub use error::{Error, Result};
