//! Plane-wave joint spectral amplitudes: pump envelope × phasematching,
//! sampled on a uniform (ω_s, ω_i) grid.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::PhasematchingProfile;
use crate::error::{Result, SpdcError};
use crate::numerics::full_width_half_max;
use crate::source::SourceSpec;
use crate::units::{wavelength_to_omega, C, GAMMA};

/// Tolerance on Σ|f|²·Δω_s·Δω_i = 1 for a normalized matrix.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Edge-to-peak amplitude ratio above which a grid is reported as too small.
pub const EDGE_WARNING_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec {
    center_wavelength: f64,
    sigma: f64,
    waist: f64,
    waist_position: f64,
}

impl PumpSpec {
    /// `sigma` is the amplitude bandwidth of exp[−Ω²/σ²] in rad/s; `waist`
    /// and `waist_position` (relative to the crystal center) are only used
    /// by the fiber-coupled model.
    pub fn new(center_wavelength: f64, sigma: f64, waist: f64, waist_position: f64) -> Result<Self> {
        if !(center_wavelength > 0.0 && center_wavelength.is_finite()) {
            return Err(SpdcError::invalid("pump wavelength must be positive"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(SpdcError::invalid(format!(
                "pump bandwidth sigma must be positive, got {sigma}"
            )));
        }
        if !(waist > 0.0 && waist.is_finite()) {
            return Err(SpdcError::invalid(format!(
                "pump waist must be positive, got {waist}"
            )));
        }
        if !waist_position.is_finite() {
            return Err(SpdcError::invalid("pump waist position must be finite"));
        }
        Ok(Self {
            center_wavelength,
            sigma,
            waist,
            waist_position,
        })
    }

    pub fn center_wavelength(&self) -> f64 {
        self.center_wavelength
    }
    pub fn center_omega(&self) -> f64 {
        wavelength_to_omega(self.center_wavelength)
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn waist(&self) -> f64 {
        self.waist
    }
    pub fn waist_position(&self) -> f64 {
        self.waist_position
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        Self::new(self.center_wavelength, sigma, self.waist, self.waist_position)
    }
    pub fn with_waist(self, waist: f64) -> Result<Self> {
        Self::new(self.center_wavelength, self.sigma, waist, self.waist_position)
    }
}

/// What a quoted pump FWHM (in wavelength) refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FwhmConvention {
    /// FWHM of the amplitude envelope α = exp[−Ω²/σ²].
    #[default]
    Amplitude,
    /// FWHM of the intensity |α|² = exp[−2Ω²/σ²].
    Intensity,
}

impl FwhmConvention {
    /// Ratio Δω_FWHM / σ.
    fn width_factor(self) -> f64 {
        match self {
            // exp[−Ω²/σ²] = 1/2 at Ω = σ√ln2
            FwhmConvention::Amplitude => 2.0 * std::f64::consts::LN_2.sqrt(),
            // exp[−2Ω²/σ²] = 1/2 at Ω = σ√(ln2/2)
            FwhmConvention::Intensity => (2.0 * std::f64::consts::LN_2).sqrt(),
        }
    }
}

/// Converts a pump FWHM quoted in wavelength (meters) to the amplitude
/// bandwidth σ_p (rad/s).
///
/// Δω = 2πc·Δλ/λ² to first order in Δλ/λ, then σ_p = Δω / factor where the
/// factor depends on whether the FWHM refers to α or |α|².
pub fn pump_fwhm_to_sigma(center_wavelength: f64, fwhm: f64, convention: FwhmConvention) -> Result<f64> {
    if !(fwhm > 0.0 && fwhm.is_finite()) {
        return Err(SpdcError::invalid(format!(
            "pump FWHM must be positive, got {fwhm}"
        )));
    }
    if !(center_wavelength > 0.0) {
        return Err(SpdcError::invalid("pump wavelength must be positive"));
    }
    let d_omega = 2.0 * std::f64::consts::PI * C * fwhm / (center_wavelength * center_wavelength);
    Ok(d_omega / convention.width_factor())
}

/// Inverse of [`pump_fwhm_to_sigma`].
pub fn pump_sigma_to_fwhm(center_wavelength: f64, sigma: f64, convention: FwhmConvention) -> f64 {
    sigma * convention.width_factor() * center_wavelength * center_wavelength
        / (2.0 * std::f64::consts::PI * C)
}

/// α(Ω_s, Ω_i) = exp[−(Ω_s + Ω_i)²/σ_p²].
#[inline]
pub fn pump_envelope(sigma: f64, detuning_s: f64, detuning_i: f64) -> f64 {
    let x = (detuning_s + detuning_i) / sigma;
    (-x * x).exp()
}

#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// sinc(ΔkL/2).
#[inline]
pub fn phasematching_sinc(delta_k: f64, length: f64) -> f64 {
    sinc(0.5 * delta_k * length)
}

/// exp[−γ(ΔkL/2)²].
#[inline]
pub fn phasematching_gaussian(delta_k: f64, length: f64) -> f64 {
    let x = 0.5 * delta_k * length;
    (-GAMMA * x * x).exp()
}

#[inline]
pub fn phasematching(profile: PhasematchingProfile, delta_k: f64, length: f64) -> f64 {
    match profile {
        PhasematchingProfile::Sinc => phasematching_sinc(delta_k, length),
        PhasematchingProfile::Gaussian => phasematching_gaussian(delta_k, length),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKMode {
    /// Exact k(ω) from the Sellmeier model.
    #[default]
    Full,
    /// Linear expansion with inverse group velocities at the central triplet.
    FirstOrder,
}

/// Uniformly spaced angular-frequency samples `center + offset + k·step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformAxis {
    center: f64,
    first_detuning: f64,
    step: f64,
    len: usize,
}

impl UniformAxis {
    pub fn new(center: f64, first_detuning: f64, step: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(SpdcError::invalid(format!(
                "a spectral axis needs at least 2 samples, got {len}"
            )));
        }
        if !(step > 0.0 && step.is_finite() && center.is_finite() && first_detuning.is_finite()) {
            return Err(SpdcError::invalid(
                "spectral axis must be strictly increasing and finite",
            ));
        }
        Ok(Self {
            center,
            first_detuning,
            step,
            len,
        })
    }

    /// `len` samples spanning [center − half_span, center + half_span].
    pub fn symmetric(center: f64, half_span: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(SpdcError::invalid(format!(
                "a spectral axis needs at least 2 samples, got {len}"
            )));
        }
        Self::new(center, -half_span, 2.0 * half_span / (len - 1) as f64, len)
    }

    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn center(&self) -> f64 {
        self.center
    }
    pub fn detuning(&self, k: usize) -> f64 {
        self.first_detuning + k as f64 * self.step
    }
    pub fn omega(&self, k: usize) -> f64 {
        self.center + self.detuning(k)
    }
    pub fn detunings(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.detuning(k)).collect()
    }

    /// Same span with `len` samples.
    pub fn resampled(&self, len: usize) -> Result<Self> {
        let last = self.detuning(self.len - 1);
        Self::new(
            self.center,
            self.first_detuning,
            (last - self.first_detuning) / (len.max(2) - 1) as f64,
            len,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralGrid {
    pub signal: UniformAxis,
    pub idler: UniformAxis,
}

/// Grid extents in units of the relevant bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpans {
    /// Signal half-span in units of σ_p, added to the idler half-span.
    pub signal_pump_widths: f64,
    /// Idler half-span in units of the phasematching bandwidth.
    pub idler_pm_widths: f64,
}

impl Default for GridSpans {
    fn default() -> Self {
        Self {
            signal_pump_widths: 4.0,
            idler_pm_widths: 8.0,
        }
    }
}

impl SpectralGrid {
    pub fn new(signal: UniformAxis, idler: UniformAxis) -> Self {
        Self { signal, idler }
    }

    /// Grid centered on the design triplet. The idler half-span covers
    /// `idler_pm_widths` phasematching bandwidths plus the tilt of the
    /// phasematching ridge across ±4σ_p; the signal half-span covers
    /// `signal_pump_widths`·σ_p beyond the idler span so that the
    /// anti-diagonal pump ridge stays inside the window.
    pub fn for_source(source: &SourceSpec, ns: usize, ni: usize, spans: GridSpans) -> Result<Self> {
        let sigma = source.pump.sigma();
        let d = source.dispersion_parameter()?;
        let idler_half = spans.idler_pm_widths * source.phasematching_bandwidth() + 4.0 * d.abs() * sigma;
        let signal_half = spans.signal_pump_widths * sigma + idler_half;
        let (_, ws0, wi0) = source.central_omegas();
        Ok(Self {
            signal: UniformAxis::symmetric(ws0, signal_half, ns)?,
            idler: UniformAxis::symmetric(wi0, idler_half, ni)?,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.signal.len(), self.idler.len())
    }

    pub fn cell_area(&self) -> f64 {
        self.signal.step() * self.idler.step()
    }

    pub fn resampled(&self, ns: usize, ni: usize) -> Result<Self> {
        Ok(Self {
            signal: self.signal.resampled(ns)?,
            idler: self.idler.resampled(ni)?,
        })
    }

    pub fn transposed(&self) -> Self {
        Self {
            signal: self.idler,
            idler: self.signal,
        }
    }
}

/// Complex JSA f(ω_s, ω_i) on a uniform grid; rows index signal, columns idler.
#[derive(Debug, Clone, PartialEq)]
pub struct JsaMatrix {
    grid: SpectralGrid,
    amplitude: DMatrix<Complex64>,
    normalized: bool,
}

impl JsaMatrix {
    pub fn new(grid: SpectralGrid, amplitude: DMatrix<Complex64>) -> Result<Self> {
        if amplitude.shape() != grid.shape() {
            return Err(SpdcError::invalid(format!(
                "amplitude shape {:?} does not match grid {:?}",
                amplitude.shape(),
                grid.shape()
            )));
        }
        if amplitude.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SpdcError::invalid("JSA contains non-finite entries"));
        }
        Ok(Self {
            grid,
            amplitude,
            normalized: false,
        })
    }

    /// Evaluates `f(row, col)` on every grid point, rows in parallel.
    pub fn try_from_fn<F>(grid: SpectralGrid, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<Complex64> + Sync,
    {
        let (ns, ni) = grid.shape();
        let rows: Vec<Vec<Complex64>> = (0..ns)
            .into_par_iter()
            .map(|r| (0..ni).map(|c| f(r, c)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let amplitude = DMatrix::from_fn(ns, ni, |r, c| rows[r][c]);
        Self::new(grid, amplitude)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }
    pub fn amplitude(&self) -> &DMatrix<Complex64> {
        &self.amplitude
    }
    pub fn into_amplitude(self) -> DMatrix<Complex64> {
        self.amplitude
    }
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Σ|f|²·Δω_s·Δω_i.
    pub fn norm_squared(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n2 = self.norm_squared();
        if !(n2 > 0.0 && n2.is_finite()) {
            return Err(SpdcError::invalid("cannot normalize a zero JSA"));
        }
        let scale = 1.0 / n2.sqrt();
        self.amplitude.iter_mut().for_each(|z| *z *= scale);
        self.normalized = true;
        Ok(self)
    }

    /// Checks the flag and the actual normalization sum.
    pub fn require_normalized(&self) -> Result<()> {
        let residual = (self.norm_squared() - 1.0).abs();
        if !self.normalized || residual > NORMALIZATION_TOLERANCE {
            return Err(SpdcError::invalid(format!(
                "JSA must be normalized (flag {}, residual {residual:e})",
                self.normalized
            )));
        }
        Ok(())
    }

    pub fn intensity(&self) -> DMatrix<f64> {
        self.amplitude.map(|z| z.norm_sqr())
    }

    /// Same state with signal and idler roles swapped.
    pub fn transposed(&self) -> Self {
        Self {
            grid: self.grid.transposed(),
            amplitude: self.amplitude.transpose(),
            normalized: self.normalized,
        }
    }

    /// Flat-phase version |f|.
    pub fn modulus(&self) -> Self {
        Self {
            grid: self.grid,
            amplitude: self.amplitude.map(|z| Complex64::new(z.norm(), 0.0)),
            normalized: self.normalized,
        }
    }

    pub fn is_real(&self) -> bool {
        self.amplitude.iter().all(|z| z.im == 0.0)
    }

    /// Largest amplitude on the grid boundary relative to the peak.
    pub fn edge_ratio(&self) -> f64 {
        let (ns, ni) = self.grid.shape();
        let peak = self.amplitude.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut edge: f64 = 0.0;
        for r in 0..ns {
            edge = edge
                .max(self.amplitude[(r, 0)].norm())
                .max(self.amplitude[(r, ni - 1)].norm());
        }
        for c in 0..ni {
            edge = edge
                .max(self.amplitude[(0, c)].norm())
                .max(self.amplitude[(ns - 1, c)].norm());
        }
        edge / peak
    }

    pub fn coarse_grid_warning(&self) -> Option<String> {
        let ratio = self.edge_ratio();
        (ratio > EDGE_WARNING_RATIO).then(|| {
            format!(
                "grid may not span the JSA support: edge amplitude is {ratio:.2e} of peak (threshold {EDGE_WARNING_RATIO:.0e})"
            )
        })
    }

    pub fn signal_marginal(&self) -> Vec<f64> {
        let di = self.grid.idler.step();
        self.amplitude
            .row_iter()
            .map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>() * di)
            .collect()
    }

    pub fn idler_marginal(&self) -> Vec<f64> {
        let ds = self.grid.signal.step();
        self.amplitude
            .column_iter()
            .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>() * ds)
            .collect()
    }

    pub fn summary(&self) -> JsaSummary {
        let peak = self.amplitude.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        JsaSummary {
            signal_points: self.grid.signal.len(),
            idler_points: self.grid.idler.len(),
            signal_step: self.grid.signal.step(),
            idler_step: self.grid.idler.step(),
            peak_intensity: peak,
            signal_marginal_fwhm: full_width_half_max(
                &self.grid.signal.detunings(),
                &self.signal_marginal(),
            ),
            idler_marginal_fwhm: full_width_half_max(
                &self.grid.idler.detunings(),
                &self.idler_marginal(),
            ),
            normalization_residual: self.norm_squared() - 1.0,
            edge_ratio: self.edge_ratio(),
        }
    }

    /// Writes |f|² as CSV: header row of idler detunings (rad/s), then one
    /// row per signal detuning.
    pub fn write_intensity_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_matrix_csv(out, &self.grid, |r, c| self.amplitude[(r, c)].norm_sqr())
    }
}

/// Shared CSV layout for any real matrix on a spectral grid.
pub fn write_matrix_csv<W: Write>(
    mut out: W,
    grid: &SpectralGrid,
    value: impl Fn(usize, usize) -> f64,
) -> std::io::Result<()> {
    let (ns, ni) = grid.shape();
    write!(out, "signal_detuning_rad_s\\idler_detuning_rad_s")?;
    for c in 0..ni {
        write!(out, ",{:e}", grid.idler.detuning(c))?;
    }
    writeln!(out)?;
    for r in 0..ns {
        write!(out, "{:e}", grid.signal.detuning(r))?;
        for c in 0..ni {
            write!(out, ",{:e}", value(r, c))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsaSummary {
    pub signal_points: usize,
    pub idler_points: usize,
    pub signal_step: f64,
    pub idler_step: f64,
    pub peak_intensity: f64,
    /// FWHM of the signal marginal intensity, rad/s.
    pub signal_marginal_fwhm: Option<f64>,
    pub idler_marginal_fwhm: Option<f64>,
    pub normalization_residual: f64,
    pub edge_ratio: f64,
}

/// Pump envelope α and phasematching φ sampled separately on `grid`.
pub fn jsa_components(
    source: &SourceSpec,
    grid: &SpectralGrid,
    profile: PhasematchingProfile,
    mode: DeltaKMode,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (ns, ni) = grid.shape();
    let sigma = source.pump.sigma();
    let (_, ws0, wi0) = source.central_omegas();
    let alpha = DMatrix::from_fn(ns, ni, |r, c| {
        pump_envelope(
            sigma,
            grid.signal.omega(r) - ws0,
            grid.idler.omega(c) - wi0,
        )
    });
    let rows: Vec<Vec<f64>> = (0..ns)
        .into_par_iter()
        .map(|r| {
            (0..ni)
                .map(|c| source.phasematching_at(profile, mode, grid.signal.omega(r), grid.idler.omega(c)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let phi = DMatrix::from_fn(ns, ni, |r, c| rows[r][c]);
    Ok((alpha, phi))
}

/// Normalized plane-wave JSA f = α·φ. All phases are zero.
pub fn compute_jsa(
    source: &SourceSpec,
    grid: &SpectralGrid,
    profile: PhasematchingProfile,
    mode: DeltaKMode,
) -> Result<JsaMatrix> {
    let sigma = source.pump.sigma();
    let (_, ws0, wi0) = source.central_omegas();
    JsaMatrix::try_from_fn(*grid, |r, c| {
        let (ws, wi) = (grid.signal.omega(r), grid.idler.omega(c));
        let a = pump_envelope(sigma, ws - ws0, wi - wi0);
        let p = source.phasematching_at(profile, mode, ws, wi)?;
        Ok(Complex64::new(a * p, 0.0))
    })?
    .normalized()
}
