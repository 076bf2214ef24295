//! Steady-state degree distributions of evolving networks whose per-node
//! degree dynamics are birth-death chains with affine limit kernels
//! `F+(k) = A k + B` (gain) and `F-(k) = Abar k + Bbar` (loss).
//!
//! The crate has four layers:
//!
//! * [`kernels`]: kernel parameters, newborn degree laws, finite-time
//!   transition rates and the three generative model presets.
//! * [`quadrature`] and [`solver`]: the exact stationary distribution (head
//!   by a banded solve, tail by closed-form integrals or the minimal solution
//!   of the recurrence), classification and asymptotic prefactors.
//! * [`sim`]: graph-level simulators of the presets and a structure-free
//!   chain-ensemble simulator of the degree chains.
//! * [`analysis`] and [`cli`]: tail-exponent estimation, empirical versus
//!   analytic comparison and the `evonet` command-line tool.
//!
//! ```
//! use evonet::kernels::ModelPreset;
//! use evonet::solver::{solve_distribution, Classification};
//!
//! let preset = ModelPreset::edge_deletion(3, 4, 12).unwrap();
//! let (params, law) = preset.kernels();
//! let dist = solve_distribution(&params, &law).unwrap();
//! assert!((dist.tail_constant() - 42.75).abs() < 1e-6);
//! assert_eq!(dist.classification(), Classification::ScaleFree { gamma: 5.0 });
//! ```

pub mod analysis;
pub mod cli;
pub mod error;
pub mod kernels;
pub mod quadrature;
pub mod sim;
pub mod solver;

pub use error::Error;
