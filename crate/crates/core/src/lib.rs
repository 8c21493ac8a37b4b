//! Simulator and analyzer for two-way coherent-state continuous-variable
//! quantum key distribution under individual attacks built from one-mode
//! Gaussian quantum cloning machines.
//!
//! The crate is layered bottom-up:
//!
//! - [`math`]: scalar Gaussians, sampling, and Shannon mutual information of
//!   additive Gaussian channels.
//! - [`phase_space`]: a small dense Gaussian-state engine (means and
//!   covariance matrices, beam splitters, heterodyne, PPT test).
//! - [`cloner`]: 1→2 universal Gaussian cloners, their joint covariance
//!   matrix and trajectory samplers.
//! - [`protocol`]: the ON/OFF round machine and channel-noise estimation.
//! - [`attack`]: the forward/backward cloner attack with beam-splitter
//!   recombination of the kept clones.
//! - [`security`]: closed-form variances, mutual informations, threshold.
//! - [`cli`]: run manifests, transcript and report files, command drivers.
//!
//! Conventions: `[x, p] = i`, vacuum variance 1/2 per quadrature, a complex
//! amplitude is `(x + ip)/√2`, all logarithms base 2.
//!
//! ```
//! use cvqkd_core::attack::{as_channel_hook, AttackConfig};
//! use cvqkd_core::protocol::{run_session_parallel, ChannelModel, ProtocolConfig};
//! use cvqkd_core::security::{build_report, EmpiricalSecurity};
//!
//! let report = build_report(100.0, 0.5)?;
//! assert!(report.secure);
//!
//! let config = ProtocolConfig { rounds: 50_000, seed: 7, ..ProtocolConfig::default() };
//! let channel = ChannelModel::attacked(as_channel_hook(AttackConfig::new(0.5)?)?);
//! let transcript = run_session_parallel(&config, &channel, 4)?;
//! let stats = EmpiricalSecurity::from_transcript(&transcript)?;
//! assert!((stats.sigma_b_sq - 2.0).abs() < 0.1);
//! # Ok::<(), cvqkd_core::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod cli;
pub mod cloner;
pub mod error;
pub mod math;
pub mod phase_space;
pub mod protocol;
pub mod rng;
pub mod security;

pub use error::{Error, Result};
pub use nalgebra;
pub use phase_space::ComplexAmplitude;
