//! Design and simulation toolkit for spectrally factorable, quasi-phase-matched
//! SPDC photon-pair sources.
//!
//! The crate is organized bottom-up:
//!
//! * [`dispersion`]: Sellmeier models, group velocities, poling period, GVM points.
//! * [`jsa`]: pump envelope, phasematching and discretized joint spectral amplitudes.
//! * [`schmidt`]: Schmidt decomposition, purity and an independent density-matrix check.
//! * [`fibercoupling`]: Gaussian-beam pump, single-mode collection, heralding efficiency.
//! * [`interference`]: Hong-Ou-Mandel dips and g⁽²⁾ relations.
//!
//! All quantities are SI (meters, seconds, rad/s).

// `!(x > 0.0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod error;
pub mod fibercoupling;
pub mod interference;
pub mod jsa;
pub mod numerics;
pub mod quadrature;
pub mod schmidt;
pub mod source;
pub mod units;

pub use dispersion::{
    AxisAssignment, CrystalAxis, CrystalSpec, DispersionModel, PhasematchingProfile,
};
pub use error::{Result, SpdcError};
pub use fibercoupling::{CollectionModeSpec, HeraldingResult};
pub use interference::HomiDip;
pub use jsa::{DeltaKMode, JsaMatrix, PumpSpec, SpectralGrid, UniformAxis};
pub use schmidt::SchmidtResult;
pub use source::SourceSpec;
