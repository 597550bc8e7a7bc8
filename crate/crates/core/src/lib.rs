//! Low-light video enhancement with learned pixel-wise gamma curves, an
//! analytic layer-wise energy model, and a Pareto-based controller that trades
//! quality for energy by reusing computation and lowering resolution.

pub mod curves;
pub mod imageio;
pub mod net;
pub mod flow;
pub mod metrics;
pub mod energy;
pub mod scheduler;
pub mod controller;
pub mod harness;
pub mod cli;
