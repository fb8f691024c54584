//! Sellmeier refractive-index models for KTP and the phase-matching
//! quantities derived from them: wavenumbers, inverse group velocities,
//! the dispersion parameter D, the first-order poling period and the
//! group-velocity-matched wavelengths.
//!
//! Each axis uses the general form (λ in μm)
//!
//! n²(λ) = a + Σ b·λ²/(λ² − c) + Σ d/(λ² − e) − ir·λ²
//!
//! which covers the common published KTP sets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Bound, Result, SpdcError};
use crate::units::{idler_wavelength, omega_to_wavelength, wavelength_to_omega, C, NM, UM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrystalAxis {
    Y,
    Z,
}

/// `b·λ²/(λ² − c)` term, λ in μm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resonance {
    pub b: f64,
    pub c: f64,
}

/// `d/(λ² − e)` term, λ in μm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pole {
    pub d: f64,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierAxis {
    pub a: f64,
    #[serde(default)]
    pub resonances: Vec<Resonance>,
    #[serde(default)]
    pub poles: Vec<Pole>,
    /// Coefficient of the `−ir·λ²` infrared correction.
    #[serde(default)]
    pub ir: f64,
}

impl SellmeierAxis {
    /// n² as a function of u = λ² (μm²).
    fn n_squared(&self, u: f64) -> f64 {
        let mut n2 = self.a - self.ir * u;
        for r in &self.resonances {
            n2 += r.b * u / (u - r.c);
        }
        for p in &self.poles {
            n2 += p.d / (u - p.e);
        }
        n2
    }

    /// d(n²)/du, u = λ² (μm²).
    fn dn2_du(&self, u: f64) -> f64 {
        let mut d = -self.ir;
        for r in &self.resonances {
            d -= r.b * r.c / ((u - r.c) * (u - r.c));
        }
        for p in &self.poles {
            d -= p.d / ((u - p.e) * (u - p.e));
        }
        d
    }

    fn singular_points(&self) -> impl Iterator<Item = f64> + '_ {
        self.resonances
            .iter()
            .map(|r| r.c)
            .chain(self.poles.iter().map(|p| p.e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidityRange {
    pub min_um: f64,
    pub max_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxesConfig {
    y: SellmeierAxis,
    z: SellmeierAxis,
}

/// On-disk schema of a dispersion model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DispersionConfig {
    citation: String,
    validity: ValidityRange,
    axes: AxesConfig,
}

/// Per-axis Sellmeier model of a biaxial crystal propagating along X.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionModel {
    citation: String,
    validity: ValidityRange,
    y: SellmeierAxis,
    z: SellmeierAxis,
}

impl DispersionModel {
    pub fn new(
        citation: impl Into<String>,
        validity: ValidityRange,
        y: SellmeierAxis,
        z: SellmeierAxis,
    ) -> Result<Self> {
        let model = Self {
            citation: citation.into(),
            validity,
            y,
            z,
        };
        model.validate()?;
        Ok(model)
    }

    /// Flux-grown KTP, J. D. Bierlein and H. Vanherzeele,
    /// J. Opt. Soc. Am. B 6, 622 (1989).
    pub fn ktp_bierlein_vanherzeele() -> Self {
        Self::new(
            "J. D. Bierlein and H. Vanherzeele, J. Opt. Soc. Am. B 6, 622 (1989); KTP n_Y, n_Z",
            ValidityRange {
                min_um: 0.40,
                max_um: 2.50,
            },
            SellmeierAxis {
                a: 2.19229,
                resonances: vec![Resonance {
                    b: 0.83547,
                    c: 0.04970,
                }],
                poles: vec![],
                ir: 0.01621,
            },
            SellmeierAxis {
                a: 2.25411,
                resonances: vec![Resonance {
                    b: 1.06543,
                    c: 0.05486,
                }],
                poles: vec![],
                ir: 0.02140,
            },
        )
        .expect("built-in model is valid")
    }

    /// K. Kato and E. Takaoka, Appl. Opt. 41, 5040 (2002).
    pub fn ktp_kato_takaoka() -> Self {
        Self::new(
            "K. Kato and E. Takaoka, Appl. Opt. 41, 5040 (2002); KTP n_Y, n_Z",
            ValidityRange {
                min_um: 0.43,
                max_um: 3.54,
            },
            SellmeierAxis {
                a: 3.45018,
                resonances: vec![],
                poles: vec![
                    Pole {
                        d: 0.04341,
                        e: 0.04597,
                    },
                    Pole {
                        d: 16.98825,
                        e: 39.43799,
                    },
                ],
                ir: 0.0,
            },
            SellmeierAxis {
                a: 4.59423,
                resonances: vec![],
                poles: vec![
                    Pole {
                        d: 0.06206,
                        e: 0.04763,
                    },
                    Pole {
                        d: 110.80672,
                        e: 86.12171,
                    },
                ],
                ir: 0.0,
            },
        )
        .expect("built-in model is valid")
    }

    /// Looks up a built-in model by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ktp-bierlein1989" => Some(Self::ktp_bierlein_vanherzeele()),
            "ktp-kato2002" => Some(Self::ktp_kato_takaoka()),
            _ => None,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 2] = ["ktp-bierlein1989", "ktp-kato2002"];

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: DispersionConfig =
            toml::from_str(s).map_err(|e| SpdcError::InvalidModel(e.to_string()))?;
        Self::new(cfg.citation, cfg.validity, cfg.axes.y, cfg.axes.z)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpdcError::InvalidModel(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let cfg = DispersionConfig {
            citation: self.citation.clone(),
            validity: self.validity,
            axes: AxesConfig {
                y: self.y.clone(),
                z: self.z.clone(),
            },
        };
        toml::to_string(&cfg).expect("dispersion config serializes")
    }

    pub fn citation(&self) -> &str {
        &self.citation
    }

    pub fn validity(&self) -> ValidityRange {
        self.validity
    }

    fn axis(&self, axis: CrystalAxis) -> &SellmeierAxis {
        match axis {
            CrystalAxis::Y => &self.y,
            CrystalAxis::Z => &self.z,
        }
    }

    fn validate(&self) -> Result<()> {
        let ValidityRange { min_um, max_um } = self.validity;
        if !(min_um.is_finite() && max_um.is_finite() && 0.0 < min_um && min_um < max_um) {
            return Err(SpdcError::InvalidModel(format!(
                "validity range [{min_um}, {max_um}] um is not a positive interval"
            )));
        }
        let (umin, umax) = (min_um * min_um, max_um * max_um);
        for (name, axis) in [("y", &self.y), ("z", &self.z)] {
            let coeffs = std::iter::once(axis.a)
                .chain(std::iter::once(axis.ir))
                .chain(axis.resonances.iter().flat_map(|r| [r.b, r.c]))
                .chain(axis.poles.iter().flat_map(|p| [p.d, p.e]));
            if coeffs.into_iter().any(|v| !v.is_finite()) {
                return Err(SpdcError::InvalidModel(format!(
                    "axis {name}: all coefficients must be finite"
                )));
            }
            if let Some(s) = axis.singular_points().find(|&s| s >= umin && s <= umax) {
                return Err(SpdcError::InvalidModel(format!(
                    "axis {name}: pole at lambda = {:.4} um lies inside the validity range",
                    s.sqrt()
                )));
            }
            // sampled check of n > 1 and normal dispersion
            let samples = 2001;
            let mut prev = f64::INFINITY;
            for k in 0..samples {
                let lam = min_um + (max_um - min_um) * k as f64 / (samples - 1) as f64;
                let n2 = axis.n_squared(lam * lam);
                if !(n2 > 1.0) {
                    return Err(SpdcError::InvalidModel(format!(
                        "axis {name}: n <= 1 at {lam:.4} um"
                    )));
                }
                let n = n2.sqrt();
                if n >= prev || axis.dn2_du(lam * lam) >= 0.0 {
                    return Err(SpdcError::InvalidModel(format!(
                        "axis {name}: index is not decreasing at {lam:.4} um"
                    )));
                }
                prev = n;
            }
        }
        Ok(())
    }

    fn check_range(&self, lambda: f64) -> Result<f64> {
        let um = lambda / UM;
        if !um.is_finite() || um < self.validity.min_um {
            return Err(SpdcError::OutOfRange {
                wavelength_um: um,
                bound: Bound::Lower,
                limit_um: self.validity.min_um,
            });
        }
        if um > self.validity.max_um {
            return Err(SpdcError::OutOfRange {
                wavelength_um: um,
                bound: Bound::Upper,
                limit_um: self.validity.max_um,
            });
        }
        Ok(um)
    }

    /// Refractive index along `axis` at vacuum wavelength `lambda` (meters).
    pub fn refractive_index(&self, axis: CrystalAxis, lambda: f64) -> Result<f64> {
        let um = self.check_range(lambda)?;
        Ok(self.axis(axis).n_squared(um * um).sqrt())
    }

    /// Group index n_g = n − λ dn/dλ, from the analytic Sellmeier derivative.
    pub fn group_index(&self, axis: CrystalAxis, lambda: f64) -> Result<f64> {
        let um = self.check_range(lambda)?;
        let u = um * um;
        let ax = self.axis(axis);
        let n = ax.n_squared(u).sqrt();
        // dn/dλ = λ/n · d(n²)/du
        Ok(n - u / n * ax.dn2_du(u))
    }

    /// Wavenumber k = n(ω)·ω/c in 1/m.
    pub fn wavenumber(&self, axis: CrystalAxis, omega: f64) -> Result<f64> {
        let n = self.refractive_index(axis, omega_to_wavelength(omega))?;
        Ok(n * omega / C)
    }

    /// Inverse group velocity k' = dk/dω in s/m.
    pub fn inverse_group_velocity(&self, axis: CrystalAxis, omega: f64) -> Result<f64> {
        Ok(self.group_index(axis, omega_to_wavelength(omega))? / C)
    }
}

/// Crystal axis carried by each of the three interacting fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisAssignment {
    pub pump: CrystalAxis,
    pub signal: CrystalAxis,
    pub idler: CrystalAxis,
}

impl AxisAssignment {
    /// Type-II: pump along Y, signal along Z, idler along Y.
    pub const TYPE_II_YZY: Self = Self {
        pump: CrystalAxis::Y,
        signal: CrystalAxis::Z,
        idler: CrystalAxis::Y,
    };
}

impl Default for AxisAssignment {
    fn default() -> Self {
        Self::TYPE_II_YZY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhasematchingProfile {
    /// Uniform poling: sinc(ΔkL/2).
    #[default]
    Sinc,
    /// Idealized apodized poling: exp[−γ(ΔkL/2)²].
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalSpec {
    length: f64,
    poling_period: f64,
    axes: AxisAssignment,
    profile: PhasematchingProfile,
}

impl CrystalSpec {
    pub fn new(
        length: f64,
        poling_period: f64,
        axes: AxisAssignment,
        profile: PhasematchingProfile,
    ) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(SpdcError::invalid(format!(
                "crystal length must be positive, got {length}"
            )));
        }
        if !(poling_period > 0.0 && poling_period.is_finite()) {
            return Err(SpdcError::invalid(format!(
                "poling period must be positive, got {poling_period}"
            )));
        }
        Ok(Self {
            length,
            poling_period,
            axes,
            profile,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn poling_period(&self) -> f64 {
        self.poling_period
    }
    pub fn axes(&self) -> AxisAssignment {
        self.axes
    }
    pub fn profile(&self) -> PhasematchingProfile {
        self.profile
    }
    pub fn is_apodized(&self) -> bool {
        self.profile == PhasematchingProfile::Gaussian
    }
    pub fn with_profile(mut self, profile: PhasematchingProfile) -> Self {
        self.profile = profile;
        self
    }
    /// Grating wavenumber 2π/Λ.
    pub fn grating_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.poling_period
    }
}

/// Collinear mismatch Δk = k_p − k_s − k_i + 2π/Λ at the given frequencies.
pub fn phase_mismatch(
    model: &DispersionModel,
    axes: AxisAssignment,
    omega_p: f64,
    omega_s: f64,
    omega_i: f64,
    grating_wavenumber: f64,
) -> Result<f64> {
    let kp = model.wavenumber(axes.pump, omega_p)?;
    let ks = model.wavenumber(axes.signal, omega_s)?;
    let ki = model.wavenumber(axes.idler, omega_i)?;
    Ok(kp - ks - ki + grating_wavenumber)
}

/// Inverse group velocities (pump, signal, idler) at a collinear triplet.
pub fn inverse_group_velocities(
    model: &DispersionModel,
    axes: AxisAssignment,
    lambda_p: f64,
    lambda_s: f64,
) -> Result<[f64; 3]> {
    let lambda_i = idler_wavelength(lambda_p, lambda_s);
    if !(lambda_i > 0.0) {
        return Err(SpdcError::invalid(format!(
            "signal {:.3} nm is not longer than pump {:.3} nm",
            lambda_s / NM,
            lambda_p / NM
        )));
    }
    Ok([
        model.inverse_group_velocity(axes.pump, wavelength_to_omega(lambda_p))?,
        model.inverse_group_velocity(axes.signal, wavelength_to_omega(lambda_s))?,
        model.inverse_group_velocity(axes.idler, wavelength_to_omega(lambda_i))?,
    ])
}

/// D = −(k'_p − k'_s)/(k'_p − k'_i).
pub fn dispersion_parameter(
    model: &DispersionModel,
    axes: AxisAssignment,
    lambda_p: f64,
    lambda_s: f64,
) -> Result<f64> {
    let [kp, ks, ki] = inverse_group_velocities(model, axes, lambda_p, lambda_s)?;
    let denominator = kp - ki;
    if denominator.abs() < 1e-9 * kp.abs() {
        return Err(SpdcError::Singular { denominator });
    }
    Ok(-(kp - ks) / denominator)
}

/// First-order poling period that zeroes Δk at the central triplet:
/// 2π/Λ = k_s + k_i − k_p.
pub fn solve_poling_period(
    model: &DispersionModel,
    axes: AxisAssignment,
    lambda_p: f64,
    lambda_s: f64,
) -> Result<f64> {
    let lambda_i = idler_wavelength(lambda_p, lambda_s);
    if !(lambda_i > 0.0) {
        return Err(SpdcError::invalid("signal must be longer than pump"));
    }
    let kp = model.wavenumber(axes.pump, wavelength_to_omega(lambda_p))?;
    let ks = model.wavenumber(axes.signal, wavelength_to_omega(lambda_s))?;
    let ki = model.wavenumber(axes.idler, wavelength_to_omega(lambda_i))?;
    let grating = ks + ki - kp;
    if !(grating > 0.0) {
        return Err(SpdcError::NoQpm {
            grating_wavenumber: grating,
        });
    }
    Ok(2.0 * std::f64::consts::PI / grating)
}

/// Signal search bracket for the GVM point, meters.
pub const GVM_BRACKET: (f64, f64) = (700.0 * NM, 900.0 * NM);

/// Signal/idler wavelengths where D = 0 for a given pump, by bisection on
/// the signal wavelength inside `bracket`.
pub fn find_gvm_wavelengths_in(
    model: &DispersionModel,
    axes: AxisAssignment,
    lambda_p: f64,
    bracket: (f64, f64),
) -> Result<(f64, f64)> {
    let d = |ls: f64| dispersion_parameter(model, axes, lambda_p, ls);
    let (mut lo, mut hi) = bracket;
    let (mut d_lo, d_hi) = (d(lo)?, d(hi)?);
    if d_lo.signum() == d_hi.signum() || d_lo == 0.0 || d_hi == 0.0 {
        if d_lo == 0.0 {
            return Ok((lo, idler_wavelength(lambda_p, lo)));
        }
        if d_hi == 0.0 {
            return Ok((hi, idler_wavelength(lambda_p, hi)));
        }
        return Err(SpdcError::NoGvmPoint {
            lower_nm: lo / NM,
            upper_nm: hi / NM,
            d_lower: d_lo,
            d_upper: d_hi,
        });
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let d_mid = d(mid)?;
        if d_mid == 0.0 || (hi - lo) < 1e-15 {
            break;
        }
        if d_mid.signum() == d_lo.signum() {
            lo = mid;
            d_lo = d_mid;
        } else {
            hi = mid;
        }
    }
    Ok((mid, idler_wavelength(lambda_p, mid)))
}

pub fn find_gvm_wavelengths(
    model: &DispersionModel,
    axes: AxisAssignment,
    lambda_p: f64,
) -> Result<(f64, f64)> {
    find_gvm_wavelengths_in(model, axes, lambda_p, GVM_BRACKET)
}
