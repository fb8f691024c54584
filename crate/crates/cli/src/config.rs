//! Scenario files: TOML with explicit units, resolved into core types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};
use sha2::{Digest, Sha256};
use spdc_core::dispersion::find_gvm_wavelengths;
use spdc_core::fibercoupling::{CollectionModeSpec, QuadratureSettings};
use spdc_core::jsa::{pump_fwhm_to_sigma, FwhmConvention, GridSpans};
use spdc_core::{
    AxisAssignment, CrystalSpec, DeltaKMode, DispersionModel, PhasematchingProfile, PumpSpec,
    SourceSpec,
};
use toml::Spanned;

use crate::quantity::{Angle, AngularFrequency, Length, LengthDim, Positive, TimeDim};
use crate::CliError;

pub const DEFAULT_GRID_POINTS: usize = 256;
pub const DEFAULT_DELAY_POINTS: usize = 801;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub dispersion: DispersionSection,
    pub crystal: CrystalSection,
    pub pump: Spanned<PumpSection>,
    pub signal: SignalSection,
    #[serde(default)]
    pub idler: IdlerSection,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub phasematch: PhasematchSection,
    #[serde(default)]
    pub jsa: JsaSection,
    #[serde(default)]
    pub purity_scan: Option<Spanned<PurityScanSection>>,
    #[serde(default)]
    pub waist_scan: Option<Spanned<WaistScanSection>>,
    #[serde(default)]
    pub homi: HomiSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSection {
    /// Built-in model name.
    pub model: Option<String>,
    /// Model file, relative to the scenario file.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    pub length: Positive<LengthDim>,
    /// Designed from the signal wavelength when absent.
    pub poling_period: Option<Positive<LengthDim>>,
    #[serde(default)]
    pub axes: AxisAssignment,
    #[serde(default)]
    pub profile: PhasematchingProfile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub wavelength: Positive<LengthDim>,
    pub fwhm: Option<Positive<LengthDim>>,
    pub sigma: Option<AngularFrequency>,
    #[serde(default)]
    pub fwhm_convention: FwhmConvention,
    pub waist: Positive<LengthDim>,
    pub waist_position: Option<Length>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalWavelength {
    Fixed(f64),
    /// Solve for the group-velocity-matched signal at the pump wavelength.
    Gvm,
}

impl<'de> Deserialize<'de> for SignalWavelength {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        if text.trim() == "gvm" {
            return Ok(SignalWavelength::Gvm);
        }
        let q = Length::parse(&text).map_err(serde::de::Error::custom)?;
        if q.si() > 0.0 {
            Ok(SignalWavelength::Fixed(q.si()))
        } else {
            Err(serde::de::Error::custom("signal wavelength must be positive"))
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub wavelength: SignalWavelength,
    /// Collection mode waist at the crystal exit face.
    pub waist: Option<Positive<LengthDim>>,
    pub theta0: Option<Angle>,
    pub height: Option<Length>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdlerSection {
    pub waist: Option<Positive<LengthDim>>,
    pub theta0: Option<Angle>,
    pub height: Option<Length>,
}

fn grid_points<'de, D: Deserializer<'de>>(deserializer: D) -> Result<usize, D::Error> {
    let n = usize::deserialize(deserializer)?;
    if n < 2 {
        return Err(serde::de::Error::custom(format!(
            "grid needs at least 2 points per axis, got {n}"
        )));
    }
    Ok(n)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(deserialize_with = "grid_points")]
    pub points: usize,
    pub signal_pump_widths: Option<f64>,
    pub idler_pm_widths: Option<f64>,
    #[serde(default)]
    pub delta_k: DeltaKSetting,
    /// Recompute at half the points and report the purity change.
    #[serde(default = "yes")]
    pub convergence_check: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaKSetting {
    #[default]
    Full,
    FirstOrder,
}

impl From<DeltaKSetting> for DeltaKMode {
    fn from(s: DeltaKSetting) -> Self {
        match s {
            DeltaKSetting::Full => DeltaKMode::Full,
            DeltaKSetting::FirstOrder => DeltaKMode::FirstOrder,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub nodes: Option<usize>,
    pub max_nodes: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasematchSection {
    /// Pump wavelengths at which to solve for the GVM signal; defaults to
    /// the scenario pump.
    #[serde(default)]
    pub gvm_pumps: Vec<Positive<LengthDim>>,
    pub d_map: Option<Spanned<DMapSection>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DMapSection {
    pub signal_min: Positive<LengthDim>,
    pub signal_max: Positive<LengthDim>,
    pub idler_min: Positive<LengthDim>,
    pub idler_max: Positive<LengthDim>,
    #[serde(deserialize_with = "grid_points")]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JsaMode {
    #[default]
    PlaneWave,
    Fiber,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsaSection {
    #[serde(default)]
    pub mode: JsaMode,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurityScanSection {
    pub fwhm_start: Positive<LengthDim>,
    pub fwhm_stop: Positive<LengthDim>,
    pub fwhm_step: Positive<LengthDim>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaistScanSection {
    pub start: Positive<LengthDim>,
    pub stop: Positive<LengthDim>,
    pub step: Positive<LengthDim>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomiSection {
    pub idler_half_range: Option<Positive<TimeDim>>,
    pub signal_half_range: Option<Positive<TimeDim>>,
    pub delay_points: Option<usize>,
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub grid_points: Option<usize>,
    pub quadrature_nodes: Option<usize>,
}

/// A parsed scenario with its source text and resolved physics.
#[derive(Debug)]
pub struct Scenario {
    pub path: PathBuf,
    pub config: ScenarioConfig,
    pub sha256: String,
    pub dispersion: DispersionModel,
    pub source: SourceSpec,
    pub profile: PhasematchingProfile,
    pub delta_k: DeltaKMode,
    pub grid_points: usize,
    pub spans: GridSpans,
    pub convergence_check: bool,
    pub quadrature: QuadratureSettings,
    text: String,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>, overrides: Overrides) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(path, text, overrides)
    }

    pub fn parse(path: &Path, text: String, overrides: Overrides) -> Result<Self, CliError> {
        let config: ScenarioConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        let base = path.parent().unwrap_or(Path::new("."));
        let at = |span: std::ops::Range<usize>, msg: String| {
            CliError::Config(format!(
                "{}: line {}: {msg}",
                path.display(),
                line_of(&text, span.start)
            ))
        };

        let dispersion = match (&config.dispersion.model, &config.dispersion.path) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(format!(
                    "{}: [dispersion] takes either `model` or `path`, not both",
                    path.display()
                )))
            }
            (Some(name), None) => DispersionModel::builtin(name).ok_or_else(|| {
                CliError::Config(format!(
                    "{}: unknown dispersion model {name:?}; built-in models are {}",
                    path.display(),
                    DispersionModel::BUILTIN_NAMES.join(", ")
                ))
            })?,
            (None, Some(file)) => DispersionModel::from_path(base.join(file))
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
            (None, None) => DispersionModel::ktp_bierlein_vanherzeele(),
        };

        let pump_span = config.pump.span();
        let pump = config.pump.get_ref();
        let lambda_p = pump.wavelength.si();
        let sigma = match (&pump.fwhm, &pump.sigma) {
            (Some(fwhm), None) => pump_fwhm_to_sigma(lambda_p, fwhm.si(), pump.fwhm_convention)
                .map_err(|e| at(pump_span.clone(), e.to_string()))?,
            (None, Some(sigma)) => sigma.si(),
            _ => {
                return Err(at(
                    pump_span,
                    "[pump] needs exactly one of `fwhm` or `sigma`".into(),
                ))
            }
        };
        let waist_position = pump.waist_position.map_or(0.0, |z| z.si());
        let pump_spec = PumpSpec::new(lambda_p, sigma, pump.waist.si(), waist_position)
            .map_err(|e| at(pump_span.clone(), e.to_string()))?;

        let axes = config.crystal.axes;
        let lambda_s = match config.signal.wavelength {
            SignalWavelength::Fixed(l) => l,
            SignalWavelength::Gvm => find_gvm_wavelengths(&dispersion, axes, lambda_p)?.0,
        };
        let profile = config.crystal.profile;
        let length = config.crystal.length.si();
        let source = match config.crystal.poling_period {
            Some(period) => SourceSpec::new(
                dispersion.clone(),
                CrystalSpec::new(length, period.si(), axes, profile)?,
                pump_spec,
                lambda_s,
            )?,
            None => SourceSpec::designed(dispersion.clone(), pump_spec, lambda_s, length, axes, profile)?,
        };

        let defaults = GridSpans::default();
        let (grid_points, spans, delta_k, convergence_check) = match &config.grid {
            Some(g) => (
                g.points,
                GridSpans {
                    signal_pump_widths: g.signal_pump_widths.unwrap_or(defaults.signal_pump_widths),
                    idler_pm_widths: g.idler_pm_widths.unwrap_or(defaults.idler_pm_widths),
                },
                g.delta_k.into(),
                g.convergence_check,
            ),
            None => (DEFAULT_GRID_POINTS, defaults, DeltaKMode::Full, true),
        };
        if !(spans.signal_pump_widths > 0.0 && spans.idler_pm_widths > 0.0) {
            return Err(CliError::Config(format!(
                "{}: [grid] span multipliers must be positive",
                path.display()
            )));
        }
        let grid_points = match overrides.grid_points {
            Some(n) if n < 2 => {
                return Err(CliError::Config(format!("--grid must be at least 2, got {n}")))
            }
            Some(n) => n,
            None => grid_points,
        };

        let qd = QuadratureSettings::default();
        let nodes = overrides.quadrature_nodes.or(config.quadrature.nodes).unwrap_or(qd.nodes);
        let quadrature = QuadratureSettings {
            nodes,
            max_nodes: config.quadrature.max_nodes.unwrap_or(qd.max_nodes.max(nodes)),
            tolerance: config.quadrature.tolerance.unwrap_or(qd.tolerance),
        };
        quadrature
            .validate()
            .map_err(|e| CliError::Config(format!("{}: [quadrature] {e}", path.display())))?;

        if let Some(scan) = &config.purity_scan {
            let s = scan.get_ref();
            if s.fwhm_stop.si() < s.fwhm_start.si() {
                return Err(at(scan.span(), "fwhm_stop is below fwhm_start".into()));
            }
        }
        if let Some(scan) = &config.waist_scan {
            let s = scan.get_ref();
            if s.stop.si() < s.start.si() {
                return Err(at(scan.span(), "stop is below start".into()));
            }
        }
        if let Some(map) = &config.phasematch.d_map {
            let m = map.get_ref();
            if m.signal_max.si() <= m.signal_min.si() || m.idler_max.si() <= m.idler_min.si() {
                return Err(at(map.span(), "d_map ranges must have max > min".into()));
            }
        }
        if let Some(n) = config.homi.delay_points {
            if n < 3 {
                return Err(CliError::Config(format!(
                    "{}: [homi] delay_points must be at least 3",
                    path.display()
                )));
            }
        }

        Ok(Self {
            path: path.to_path_buf(),
            sha256,
            dispersion,
            source,
            profile,
            delta_k,
            grid_points,
            spans,
            convergence_check,
            quadrature,
            config,
            text,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn pump_fwhm_convention(&self) -> FwhmConvention {
        self.config.pump.get_ref().fwhm_convention
    }

    /// Collection modes for both arms; both waists must be given.
    pub fn collection_modes(&self) -> Result<(CollectionModeSpec, CollectionModeSpec), CliError> {
        let build = |name: &str,
                     waist: Option<Positive<LengthDim>>,
                     theta0: Option<Angle>,
                     height: Option<Length>|
         -> Result<CollectionModeSpec, CliError> {
            let waist = waist.ok_or_else(|| {
                CliError::Config(format!(
                    "{}: [{name}] waist is required for fiber-coupled commands",
                    self.path.display()
                ))
            })?;
            let mut spec = CollectionModeSpec::new(waist.si())?;
            spec.theta0 = theta0.map_or(0.0, |a| a.si());
            spec.height = height.map_or(0.0, |h| h.si());
            spec.validate()?;
            Ok(spec)
        };
        let (s, i) = (&self.config.signal, &self.config.idler);
        Ok((
            build("signal", s.waist, s.theta0, s.height)?,
            build("idler", i.waist, i.theta0, i.height)?,
        ))
    }

    pub fn purity_scan(&self) -> Result<&PurityScanSection, CliError> {
        self.config
            .purity_scan
            .as_ref()
            .map(|s| s.get_ref())
            .ok_or_else(|| self.missing("purity_scan"))
    }

    pub fn waist_scan(&self) -> Result<&WaistScanSection, CliError> {
        self.config
            .waist_scan
            .as_ref()
            .map(|s| s.get_ref())
            .ok_or_else(|| self.missing("waist_scan"))
    }

    pub fn homi_ranges(&self) -> (f64, f64, usize) {
        let h = &self.config.homi;
        (
            h.idler_half_range.map_or(20e-12, |t| t.si()),
            h.signal_half_range.map_or(2e-12, |t| t.si()),
            h.delay_points.unwrap_or(DEFAULT_DELAY_POINTS),
        )
    }

    fn missing(&self, section: &str) -> CliError {
        CliError::Config(format!(
            "{}: this command needs a [{section}] section",
            self.path.display()
        ))
    }
}

/// Inclusive arithmetic sequence start, start+step, ... ≤ stop.
pub fn inclusive_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| start + k as f64 * step).collect()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}
