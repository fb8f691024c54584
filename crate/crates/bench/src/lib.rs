//! Shared benchmark fixtures.

use spdc_core::fibercoupling::{FiberCoupledSource, QuadratureSettings};
use spdc_core::jsa::{pump_fwhm_to_sigma, FwhmConvention};
use spdc_core::units::{NM, UM};
use spdc_core::{
    AxisAssignment, CollectionModeSpec, DispersionModel, PhasematchingProfile, PumpSpec, SourceSpec,
};

/// 20 mm KTP pumped at 521 nm for a 775 nm signal, 220 μm pump waist.
pub fn ktp_source(fwhm_nm: f64) -> SourceSpec {
    let sigma = pump_fwhm_to_sigma(521.0 * NM, fwhm_nm * NM, FwhmConvention::Amplitude).unwrap();
    SourceSpec::designed(
        DispersionModel::ktp_bierlein_vanherzeele(),
        PumpSpec::new(521.0 * NM, sigma, 220.0 * UM, 0.0).unwrap(),
        775.0 * NM,
        20e-3,
        AxisAssignment::TYPE_II_YZY,
        PhasematchingProfile::Sinc,
    )
    .unwrap()
}

/// The source above with 125 μm signal and 120 μm idler collection modes.
pub fn fiber_source(fwhm_nm: f64) -> FiberCoupledSource {
    FiberCoupledSource::new(
        ktp_source(fwhm_nm),
        CollectionModeSpec::new(125.0 * UM).unwrap(),
        CollectionModeSpec::new(120.0 * UM).unwrap(),
        QuadratureSettings::default(),
    )
    .unwrap()
}
