//! Dispersive qubit readout with in-situ two-mode squeezing: closed-form
//! readout theory, spectra, parameter sweeps and a Lindblad steady-state
//! engine for the dispersive and Jaynes-Cummings models.

pub mod analytic;
pub mod error;
pub mod lindblad;
pub mod params;
pub mod special;
pub mod spectra;
pub mod sweeps;

pub use num_complex::Complex64 as C64;

pub use analytic::{DriveConfig, Readout, SnrModel, SnrResult};
pub use error::{Error, Result};
pub use lindblad::{DensityMatrix, HilbertConfig, Operator, SteadyStateResult};
pub use params::{DerivedQuantities, ParamOverrides, SystemParams, ValidityReport};
pub use spectra::{Spectrum, SpectrumKind};
pub use sweeps::{Execution, Grid, Manifest, SweepResult, SweepRow};
