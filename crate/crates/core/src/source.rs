//! A complete plane-wave source description: crystal, dispersion model, pump
//! and the central signal wavelength that fixes the design triplet.

use crate::dispersion::{
    phase_mismatch, solve_poling_period, AxisAssignment, CrystalSpec,
    DispersionModel, PhasematchingProfile,
};
use crate::error::{Result, SpdcError};
use crate::jsa::{phasematching, DeltaKMode, PumpSpec};
use crate::units::{idler_wavelength, wavelength_to_omega, GAMMA};

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub dispersion: DispersionModel,
    pub crystal: CrystalSpec,
    pub pump: PumpSpec,
    signal_wavelength: f64,
    /// Inverse group velocities (pump, signal, idler) at the central triplet.
    k1: [f64; 3],
}

impl SourceSpec {
    pub fn new(
        dispersion: DispersionModel,
        crystal: CrystalSpec,
        pump: PumpSpec,
        signal_wavelength: f64,
    ) -> Result<Self> {
        let lambda_p = pump.center_wavelength();
        if !(signal_wavelength > lambda_p) {
            return Err(SpdcError::invalid(
                "signal wavelength must be longer than the pump wavelength",
            ));
        }
        let k1 = crate::dispersion::inverse_group_velocities(
            &dispersion,
            crystal.axes(),
            lambda_p,
            signal_wavelength,
        )?;
        Ok(Self {
            dispersion,
            crystal,
            pump,
            signal_wavelength,
            k1,
        })
    }

    /// Builds a source whose poling period phase-matches the given signal
    /// wavelength exactly.
    pub fn designed(
        dispersion: DispersionModel,
        pump: PumpSpec,
        signal_wavelength: f64,
        length: f64,
        axes: AxisAssignment,
        profile: PhasematchingProfile,
    ) -> Result<Self> {
        let period =
            solve_poling_period(&dispersion, axes, pump.center_wavelength(), signal_wavelength)?;
        let crystal = CrystalSpec::new(length, period, axes, profile)?;
        Self::new(dispersion, crystal, pump, signal_wavelength)
    }

    pub fn with_profile(mut self, profile: PhasematchingProfile) -> Self {
        self.crystal = self.crystal.with_profile(profile);
        self
    }

    pub fn with_pump(self, pump: PumpSpec) -> Result<Self> {
        Self::new(self.dispersion, self.crystal, pump, self.signal_wavelength)
    }

    /// Replaces the inverse group velocities used by first-order Δk, the
    /// dispersion parameter and the walk-off times, for synthetic studies.
    pub fn with_inverse_group_velocities(mut self, k1: [f64; 3]) -> Result<Self> {
        if k1.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(SpdcError::invalid("inverse group velocities must be positive"));
        }
        if k1[0] == k1[2] {
            return Err(SpdcError::Singular { denominator: 0.0 });
        }
        self.k1 = k1;
        Ok(self)
    }

    pub fn signal_wavelength(&self) -> f64 {
        self.signal_wavelength
    }

    pub fn idler_wavelength(&self) -> f64 {
        idler_wavelength(self.pump.center_wavelength(), self.signal_wavelength)
    }

    /// Central angular frequencies (pump, signal, idler).
    pub fn central_omegas(&self) -> (f64, f64, f64) {
        let wp = wavelength_to_omega(self.pump.center_wavelength());
        let ws = wavelength_to_omega(self.signal_wavelength);
        (wp, ws, wp - ws)
    }

    pub fn inverse_group_velocities(&self) -> [f64; 3] {
        self.k1
    }

    /// D = −(k'_p − k'_s)/(k'_p − k'_i).
    pub fn dispersion_parameter(&self) -> Result<f64> {
        let [kp, ks, ki] = self.k1;
        let den = kp - ki;
        if den.abs() < 1e-9 * kp.abs() {
            return Err(SpdcError::Singular { denominator: den });
        }
        Ok(-(kp - ks) / den)
    }

    /// Pump–idler walk-off time (k'_p − k'_i)·L.
    pub fn idler_walkoff_time(&self) -> f64 {
        (self.k1[0] - self.k1[2]) * self.crystal.length()
    }

    /// Signal walk-off time (k'_p − k'_s)·L.
    pub fn signal_walkoff_time(&self) -> f64 {
        (self.k1[0] - self.k1[1]) * self.crystal.length()
    }

    /// Phasematching bandwidth 2/(|k'_p − k'_i| L √γ) along the idler axis, rad/s.
    pub fn phasematching_bandwidth(&self) -> f64 {
        2.0 / (self.idler_walkoff_time().abs() * GAMMA.sqrt())
    }

    /// Δk at absolute frequencies (ω_s, ω_i).
    pub fn delta_k(&self, mode: DeltaKMode, omega_s: f64, omega_i: f64) -> Result<f64> {
        match mode {
            DeltaKMode::Full => phase_mismatch(
                &self.dispersion,
                self.crystal.axes(),
                omega_s + omega_i,
                omega_s,
                omega_i,
                self.crystal.grating_wavenumber(),
            ),
            DeltaKMode::FirstOrder => {
                let (_, ws0, wi0) = self.central_omegas();
                let (ds, di) = (omega_s - ws0, omega_i - wi0);
                let [kp, ks, ki] = self.k1;
                // offset is the residual mismatch at the center for a crystal
                // that is not exactly phase-matched there
                let offset = phase_mismatch(
                    &self.dispersion,
                    self.crystal.axes(),
                    ws0 + wi0,
                    ws0,
                    wi0,
                    self.crystal.grating_wavenumber(),
                )?;
                Ok(offset + kp * (ds + di) - ks * ds - ki * di)
            }
        }
    }

    /// Phasematching amplitude at absolute frequencies.
    pub fn phasematching_at(
        &self,
        profile: PhasematchingProfile,
        mode: DeltaKMode,
        omega_s: f64,
        omega_i: f64,
    ) -> Result<f64> {
        let dk = self.delta_k(mode, omega_s, omega_i)?;
        Ok(phasematching(profile, dk, self.crystal.length()))
    }
}
