//! Phase-space quasi-probability distributions of a mechanical oscillator,
//! pulsed back-action-evading homodyne measurement with classical probe
//! noise, s-parameterized tomographic reconstruction and measurement-based
//! Gaussian conditioning.

pub mod cli;
pub mod conditioning;
pub mod error;
pub mod hilbert;
pub mod io;
pub mod phasespace;
pub mod probe;
pub mod special;
pub mod tomography;

pub use error::{QsrError, Result};
