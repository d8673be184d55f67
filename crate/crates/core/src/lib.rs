//! Decentralized collision avoidance for drone swarms.
//!
//! Agents follow a modified double integrator with yaw, observe noisy
//! relative information about their nearest neighbours and share one
//! stochastic policy trained with PPO. ORCA and a force-based potential field
//! serve as classical baselines; [`eval`] turns episode traces into metrics,
//! replays and plot data.

pub mod baselines;
pub mod checkpoint;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod eval;
pub mod policy;
pub mod scenario;
pub mod sensing;
pub mod trainer;

pub use glam::{DVec2 as Vec2, DVec3 as Vec3};

pub use error::{Error, Result};
