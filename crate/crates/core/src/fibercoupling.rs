//! Single-mode fiber collection of a Gaussian-pumped source: fiber-projected
//! JSA, conditioned joint spectral intensities and heralding efficiencies.
//!
//! Transverse wavevectors are integrated with tensor-product Gauss–Hermite
//! rules matched to the Gaussian part of the integrand. The pump profile
//! exp(−w0²|q_s+q_i|²/4) and the collection modes exp(−w_f²|q|²/4) make a
//! quadratic form per Cartesian component, which a Cholesky factor maps to
//! exp(−u²−v²). The remaining factor (phasematching and phases) depends only
//! on |q_s|², |q_i|² and |q_s+q_i|², so reflecting x or y of both vectors and
//! exchanging x with y leave it unchanged; the rules keep one representative
//! per orbit.

use nalgebra::{DMatrix, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::PhasematchingProfile;
use crate::error::{Result, SpdcError};
use crate::jsa::{phasematching, pump_envelope, JsaMatrix, SpectralGrid};
use crate::quadrature::gauss_hermite;
use crate::source::SourceSpec;
use crate::units::C;

/// Pump envelope values below this are treated as exact zeros.
const ENVELOPE_CUTOFF: f64 = 1e-10;

/// Allowed excess of a heralding efficiency over one before it is reported
/// as an internal inconsistency.
pub const EFFICIENCY_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSettings {
    /// Starting nodes per transverse axis; the check compares against half.
    pub nodes: usize,
    /// Largest node count tried before giving up.
    pub max_nodes: usize,
    /// Largest accepted relative change between n/2 and n nodes.
    pub tolerance: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            nodes: 16,
            max_nodes: 64,
            tolerance: 1e-4,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        let pow2 = |n: usize| n.is_power_of_two() && (4..=128).contains(&n);
        if !pow2(self.nodes) || !pow2(self.max_nodes) || self.max_nodes < self.nodes {
            return Err(SpdcError::invalid(format!(
                "quadrature nodes must be powers of two in 4..=128 with nodes <= max_nodes, got {} and {}",
                self.nodes, self.max_nodes
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(SpdcError::invalid("quadrature tolerance must be positive"));
        }
        Ok(())
    }
}

/// Outcome of the node-doubling check for one reported integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCertificate {
    pub quantity: String,
    pub nodes: usize,
    pub relative_change: f64,
    pub tolerance: f64,
}

/// Gaussian single-mode collection at the crystal exit face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectionModeSpec {
    pub waist: f64,
    #[serde(default)]
    pub theta0: f64,
    #[serde(default)]
    pub height: f64,
    /// Mode prefactor ũ0; defaults to the value that normalizes ∫|ũ|²d²q.
    #[serde(default)]
    pub amplitude: Option<f64>,
}

impl CollectionModeSpec {
    pub fn new(waist: f64) -> Result<Self> {
        let spec = Self {
            waist,
            theta0: 0.0,
            height: 0.0,
            amplitude: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        self.amplitude = Some(amplitude);
        self.validate()?;
        Ok(self)
    }

    pub fn with_waist(mut self, waist: f64) -> Result<Self> {
        self.waist = waist;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(SpdcError::invalid(format!(
                "collection waist must be positive, got {}",
                self.waist
            )));
        }
        if !self.theta0.is_finite() || !self.height.is_finite() {
            return Err(SpdcError::invalid("collection geometry must be finite"));
        }
        if let Some(a) = self.amplitude {
            if !(a > 0.0 && a.is_finite()) {
                return Err(SpdcError::invalid("mode amplitude must be positive"));
            }
        }
        Ok(())
    }

    /// ũ0.
    pub fn normalization(&self) -> f64 {
        self.amplitude
            .unwrap_or(self.waist / (2.0 * std::f64::consts::PI).sqrt())
    }

    /// ũ(q) = ũ0 exp(−w_f²|q|²/4).
    pub fn mode(&self, q_squared: f64) -> f64 {
        self.normalization() * (-0.25 * self.waist * self.waist * q_squared).exp()
    }

    /// w_f² sec θ0 / (2π ũ0²): converts a rate computed with this mode's ũ0
    /// into one computed with a unit-norm mode.
    pub fn efficiency_factor(&self) -> f64 {
        let u0 = self.normalization();
        self.waist * self.waist / (self.theta0.cos() * 2.0 * std::f64::consts::PI * u0 * u0)
    }

    fn require_collinear(&self, arm: Arm) -> Result<()> {
        if self.theta0 != 0.0 || self.height != 0.0 {
            return Err(SpdcError::NotImplemented(format!(
                "{arm:?} collection mode with theta0 = {} rad, h = {} m: only collinear modes (theta0 = 0, h = 0) are supported",
                self.theta0, self.height
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Signal,
    Idler,
}

/// Wavenumbers and crystal data at one (ω_s, ω_i) point.
#[derive(Debug, Clone, Copy)]
struct SpectralPoint {
    kp: f64,
    ks: f64,
    ki: f64,
    /// Squared vacuum wavenumbers; larger transverse components are
    /// evanescent in air and cannot couple to a fiber.
    ks_air2: f64,
    ki_air2: f64,
    /// Collinear mismatch k_p − k_s − k_i + 2π/Λ.
    dk0: f64,
    grating: f64,
    length: f64,
    z0: f64,
    profile: PhasematchingProfile,
    envelope: f64,
}

impl SpectralPoint {
    fn new(source: &SourceSpec, omega_s: f64, omega_i: f64) -> Result<Self> {
        let axes = source.crystal.axes();
        let d = &source.dispersion;
        let kp = d.wavenumber(axes.pump, omega_s + omega_i)?;
        let ks = d.wavenumber(axes.signal, omega_s)?;
        let ki = d.wavenumber(axes.idler, omega_i)?;
        let grating = source.crystal.grating_wavenumber();
        let (_, ws0, wi0) = source.central_omegas();
        Ok(Self {
            kp,
            ks,
            ki,
            ks_air2: (omega_s / C).powi(2),
            ki_air2: (omega_i / C).powi(2),
            dk0: kp - ks - ki + grating,
            grating,
            length: source.crystal.length(),
            z0: source.pump.waist_position(),
            profile: source.crystal.profile(),
            envelope: pump_envelope(source.pump.sigma(), omega_s - ws0, omega_i - wi0),
        })
    }

    /// Phase L/2·(k_p + k_s + k_i − 2π/Λ) on axis.
    fn axial_phase(&self) -> f64 {
        0.5 * self.length * (self.kp + self.ks + self.ki - self.grating)
    }

    /// Phasematching times the transverse part of the phase, relative to
    /// the on-axis phase. Longitudinal components are exact:
    /// k_z = √(k² − q²), with k − k_z = q²/(k + k_z) for accuracy.
    #[inline]
    fn kernel(&self, qs2: f64, qi2: f64, qp2: f64) -> Complex64 {
        if qs2 >= self.ks_air2 || qi2 >= self.ki_air2 {
            return Complex64::new(0.0, 0.0);
        }
        let ksz = (self.ks * self.ks - qs2).sqrt();
        let kiz = (self.ki * self.ki - qi2).sqrt();
        let ds = qs2 / (self.ks + ksz);
        let di = qi2 / (self.ki + kiz);
        let dk = self.dk0 - qp2 / (2.0 * self.kp) + ds + di;
        let amplitude = phasematching(self.profile, dk, self.length);
        let phase = -0.5 * self.length * (ds + di) + qp2 * self.z0 / (2.0 * self.kp);
        Complex64::from_polar(amplitude, phase)
    }
}

/// Fiber-frame phasematching function for explicit transverse wavevectors
/// (longitudinal components follow from the frequencies): the pump's
/// transverse Gaussian, φ(ΔkL/2), the linear phase exp(iL/2·(k_p + k_sz +
/// k_iz − 2π/Λ)) and the waist-position phase exp(i|q_p|²z0/(2k_p)).
pub fn phasematch_3d(
    source: &SourceSpec,
    omega_s: f64,
    omega_i: f64,
    q_signal: Vector2<f64>,
    q_idler: Vector2<f64>,
) -> Result<Complex64> {
    let point = SpectralPoint::new(source, omega_s, omega_i)?;
    let qp = q_signal + q_idler;
    let (qs2, qi2, qp2) = (q_signal.norm_squared(), q_idler.norm_squared(), qp.norm_squared());
    let w0 = source.pump.waist();
    let transverse = (-0.25 * w0 * w0 * qp2).exp();
    Ok(transverse * point.kernel(qs2, qi2, qp2) * Complex64::from_polar(1.0, point.axial_phase()))
}

/// Representative (|q_s|², |q_i|², |q_s+q_i|², weight) points of the 4-D
/// rule for ∫d²q_s d²q_i exp(−¼[w0²|q_s+q_i|² + w_s²|q_s|² + w_i²|q_i|²]) g.
#[derive(Debug, Clone)]
struct JointRule {
    points: Vec<[f64; 4]>,
}

impl JointRule {
    fn new(pump_waist: f64, signal_waist: f64, idler_waist: f64, nodes: usize) -> Result<Self> {
        let gh = gauss_hermite(nodes)?;
        let (w0s, wss, wis) = (pump_waist.powi(2), signal_waist.powi(2), idler_waist.powi(2));
        // Q = ¼[[w0²+w_s², w0²], [w0², w0²+w_i²]] = RᵀR, R upper triangular
        let (q11, q12, q22) = (0.25 * (w0s + wss), 0.25 * w0s, 0.25 * (w0s + wis));
        let r11 = q11.sqrt();
        let r12 = q12 / r11;
        let r22 = (q22 - r12 * r12).sqrt();
        let jacobian = 1.0 / (r11 * r22);
        // (u, v) → (−u, −v) pairs: keep u > 0 and double
        let half: Vec<[f64; 3]> = (nodes / 2..nodes)
            .flat_map(|iu| (0..nodes).map(move |iv| (iu, iv)))
            .map(|(iu, iv)| {
                let (u, v) = (gh.nodes[iu], gh.nodes[iv]);
                let b = v / r22;
                let a = (u - r12 * b) / r11;
                [a, b, 2.0 * gh.weights[iu] * gh.weights[iv] * jacobian]
            })
            .collect();
        let mut points = Vec::with_capacity(half.len() * (half.len() + 1) / 2);
        for (p, &[ax, bx, wx]) in half.iter().enumerate() {
            for &[ay, by, wy] in &half[p..] {
                let swap = if ax == ay && bx == by { 1.0 } else { 2.0 };
                points.push([
                    ax * ax + ay * ay,
                    bx * bx + by * by,
                    (ax + bx).powi(2) + (ay + by).powi(2),
                    swap * wx * wy,
                ]);
            }
        }
        Ok(Self { points })
    }

    fn integrate(&self, g: impl Fn(f64, f64, f64) -> Complex64) -> Complex64 {
        self.points
            .iter()
            .map(|&[qs2, qi2, qp2, w]| w * g(qs2, qi2, qp2))
            .sum()
    }
}

/// Nested rule for ∫d²q_f |∫d²q_c exp(−¼[w0²|q_c+q_f|² + w_c²|q_c|²]) g|²
/// where q_c is the collected photon's transverse wavevector and q_f the
/// free one. Completing the square in q_c leaves an inner Gaussian centered
/// at −w0²q_f/(w0²+w_c²) and an outer weight exp(−½W²|q_f|²) with
/// W² = w0²w_c²/(w0²+w_c²).
#[derive(Debug, Clone)]
struct ConditionedRule {
    /// (b_x, b_y, weight) for the free photon.
    outer: Vec<[f64; 3]>,
    inner_nodes: Vec<f64>,
    inner_weights: Vec<f64>,
    shift: f64,
}

impl ConditionedRule {
    fn new(pump_waist: f64, collected_waist: f64, nodes: usize) -> Result<Self> {
        let gh = gauss_hermite(nodes)?;
        let (w0s, wcs) = (pump_waist.powi(2), collected_waist.powi(2));
        let a = 0.25 * (w0s + wcs);
        let big_w = (w0s * wcs / (w0s + wcs)).sqrt();
        let scale = std::f64::consts::SQRT_2 / big_w;
        // the inner integral is even in each of b_x, b_y and symmetric
        // under b_x ↔ b_y
        let positive: Vec<(f64, f64)> = (nodes / 2..nodes)
            .map(|k| (gh.nodes[k] * scale, 2.0 * gh.weights[k] * scale))
            .collect();
        let mut outer = Vec::new();
        for (p, &(bx, wx)) in positive.iter().enumerate() {
            for &(by, wy) in &positive[p..] {
                let swap = if bx == by { 1.0 } else { 2.0 };
                outer.push([bx, by, swap * wx * wy]);
            }
        }
        Ok(Self {
            outer,
            inner_nodes: gh.nodes.iter().map(|x| x / a.sqrt()).collect(),
            inner_weights: gh.weights.iter().map(|w| w / a.sqrt()).collect(),
            shift: w0s / (w0s + wcs),
        })
    }

    /// `g(|q_c|², |q_f|², |q_c+q_f|²)`.
    fn integrate(&self, g: impl Fn(f64, f64, f64) -> Complex64) -> f64 {
        let n = self.inner_nodes.len();
        let mut ax = vec![0.0; n];
        let mut ay = vec![0.0; n];
        self.outer
            .iter()
            .map(|&[bx, by, w_out]| {
                for k in 0..n {
                    ax[k] = self.inner_nodes[k] - self.shift * bx;
                    ay[k] = self.inner_nodes[k] - self.shift * by;
                }
                let qf2 = bx * bx + by * by;
                let mut acc = Complex64::new(0.0, 0.0);
                for (kx, &x) in ax.iter().enumerate() {
                    let wx = self.inner_weights[kx];
                    for (ky, &y) in ay.iter().enumerate() {
                        let qc2 = x * x + y * y;
                        let qp2 = (x + bx).powi(2) + (y + by).powi(2);
                        acc += wx * self.inner_weights[ky] * g(qc2, qf2, qp2);
                    }
                }
                w_out * acc.norm_sqr()
            })
            .sum()
    }
}

/// Relative change ‖fine − coarse‖₁ / ‖fine‖₁.
fn relative_change<T: Copy>(fine: &[T], coarse: &[T], abs: impl Fn(T) -> f64, diff: impl Fn(T, T) -> f64) -> f64 {
    let norm: f64 = fine.iter().map(|&v| abs(v)).sum();
    let delta: f64 = fine.iter().zip(coarse).map(|(&a, &b)| diff(a, b)).sum();
    if norm == 0.0 {
        if delta == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        delta / norm
    }
}

/// Evaluates at n/2 and n nodes, doubling n until the relative change is
/// within tolerance.
fn converge<T>(
    settings: &QuadratureSettings,
    quantity: &str,
    mut eval: impl FnMut(usize) -> Result<T>,
    change: impl Fn(&T, &T) -> f64,
) -> Result<(T, ConvergenceCertificate)> {
    settings.validate()?;
    let mut n = settings.nodes;
    let mut coarse = eval(n / 2)?;
    loop {
        let fine = eval(n)?;
        let rc = change(&fine, &coarse);
        if rc <= settings.tolerance {
            return Ok((
                fine,
                ConvergenceCertificate {
                    quantity: quantity.to_string(),
                    nodes: n,
                    relative_change: rc,
                    tolerance: settings.tolerance,
                },
            ));
        }
        if 2 * n > settings.max_nodes {
            return Err(SpdcError::NotConverged {
                nodes: n,
                relative_change: rc,
                tolerance: settings.tolerance,
            });
        }
        coarse = fine;
        n *= 2;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeraldingResult {
    /// Coincidence rate ∝ Σ|f|²Δω_sΔω_i (arbitrary units).
    pub coincidence_rate: f64,
    /// Singles rate of the signal detector (signal projected, idler free).
    pub signal_singles: f64,
    /// Singles rate of the idler detector.
    pub idler_singles: f64,
    /// Probability that the signal is collected given an idler detection.
    pub eta_signal: f64,
    /// Probability that the idler is collected given a signal detection.
    pub eta_idler: f64,
    pub certificates: Vec<ConvergenceCertificate>,
}

#[derive(Debug)]
pub struct WaistScanRow {
    pub signal_waist: f64,
    pub outcome: Result<HeraldingResult>,
}

/// A source with single-mode collection on both arms.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberCoupledSource {
    pub source: SourceSpec,
    pub signal: CollectionModeSpec,
    pub idler: CollectionModeSpec,
    pub quadrature: QuadratureSettings,
}

impl FiberCoupledSource {
    pub fn new(
        source: SourceSpec,
        signal: CollectionModeSpec,
        idler: CollectionModeSpec,
        quadrature: QuadratureSettings,
    ) -> Result<Self> {
        signal.validate()?;
        idler.validate()?;
        quadrature.validate()?;
        Ok(Self {
            source,
            signal,
            idler,
            quadrature,
        })
    }

    fn check_geometry(&self) -> Result<()> {
        self.signal.require_collinear(Arm::Signal)?;
        self.idler.require_collinear(Arm::Idler)
    }

    fn mode(&self, arm: Arm) -> &CollectionModeSpec {
        match arm {
            Arm::Signal => &self.signal,
            Arm::Idler => &self.idler,
        }
    }

    fn joint_rule(&self, nodes: usize) -> Result<JointRule> {
        JointRule::new(
            self.source.pump.waist(),
            self.signal.waist,
            self.idler.waist,
            nodes,
        )
    }

    fn conditioned_rule(&self, arm: Arm, nodes: usize) -> Result<ConditionedRule> {
        ConditionedRule::new(self.source.pump.waist(), self.mode(arm).waist, nodes)
    }

    fn amplitude_with(&self, rule: &JointRule, omega_s: f64, omega_i: f64) -> Result<Complex64> {
        let point = SpectralPoint::new(&self.source, omega_s, omega_i)?;
        if point.envelope < ENVELOPE_CUTOFF {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let overlap = rule.integrate(|qs2, qi2, qp2| point.kernel(qs2, qi2, qp2));
        let prefactor = point.envelope * self.signal.normalization() * self.idler.normalization();
        Ok(prefactor * overlap * Complex64::from_polar(1.0, point.axial_phase()))
    }

    fn conditioned_with(&self, rule: &ConditionedRule, arm: Arm, omega_s: f64, omega_i: f64) -> Result<f64> {
        let point = SpectralPoint::new(&self.source, omega_s, omega_i)?;
        if point.envelope < ENVELOPE_CUTOFF {
            return Ok(0.0);
        }
        let total = match arm {
            Arm::Signal => rule.integrate(|qc2, qf2, qp2| point.kernel(qc2, qf2, qp2)),
            Arm::Idler => rule.integrate(|qc2, qf2, qp2| point.kernel(qf2, qc2, qp2)),
        };
        let u0 = self.mode(arm).normalization();
        Ok(point.envelope * point.envelope * u0 * u0 * total)
    }

    /// Fiber-projected amplitude at a fixed node count.
    pub fn fiber_amplitude(&self, omega_s: f64, omega_i: f64, nodes: usize) -> Result<Complex64> {
        self.check_geometry()?;
        self.amplitude_with(&self.joint_rule(nodes)?, omega_s, omega_i)
    }

    /// Fiber-projected amplitude with a convergence certificate.
    pub fn fiber_jsa_at(&self, omega_s: f64, omega_i: f64) -> Result<(Complex64, ConvergenceCertificate)> {
        self.check_geometry()?;
        converge(
            &self.quadrature,
            "fiber_jsa",
            |n| self.amplitude_with(&self.joint_rule(n)?, omega_s, omega_i),
            |a, b| relative_change(&[*a], &[*b], |z| z.norm(), |x, y| (x - y).norm()),
        )
    }

    fn amplitude_grid(&self, grid: &SpectralGrid, nodes: usize) -> Result<Vec<Complex64>> {
        let rule = self.joint_rule(nodes)?;
        let (ns, ni) = grid.shape();
        let rows: Vec<Vec<Complex64>> = (0..ns)
            .into_par_iter()
            .map(|r| {
                (0..ni)
                    .map(|c| self.amplitude_with(&rule, grid.signal.omega(r), grid.idler.omega(c)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(rows.concat())
    }

    /// Unnormalized fiber-projected JSA on a grid (row-major values).
    fn raw_jsa(&self, grid: &SpectralGrid) -> Result<(Vec<Complex64>, ConvergenceCertificate)> {
        self.check_geometry()?;
        converge(
            &self.quadrature,
            "fiber_jsa",
            |n| self.amplitude_grid(grid, n),
            |a, b| relative_change(a, b, |z| z.norm(), |x, y| (x - y).norm()),
        )
    }

    /// Normalized fiber-projected JSA with its certificate.
    pub fn fiber_jsa(&self, grid: &SpectralGrid) -> Result<(JsaMatrix, ConvergenceCertificate)> {
        let (values, cert) = self.raw_jsa(grid)?;
        let (ns, ni) = grid.shape();
        let m = DMatrix::from_row_slice(ns, ni, &values);
        Ok((JsaMatrix::new(*grid, m)?.normalized()?, cert))
    }

    /// Conditioned JSI at one point: the `arm` photon is projected onto its
    /// collection mode and the partner's transverse momentum is traced out.
    pub fn conditioned_jsi_at(&self, arm: Arm, omega_s: f64, omega_i: f64) -> Result<(f64, ConvergenceCertificate)> {
        self.check_geometry()?;
        converge(
            &self.quadrature,
            conditioned_label(arm),
            |n| self.conditioned_with(&self.conditioned_rule(arm, n)?, arm, omega_s, omega_i),
            |a, b| relative_change(&[*a], &[*b], f64::abs, |x, y| (x - y).abs()),
        )
    }

    fn conditioned_grid(&self, arm: Arm, grid: &SpectralGrid, nodes: usize) -> Result<Vec<f64>> {
        let rule = self.conditioned_rule(arm, nodes)?;
        let (ns, ni) = grid.shape();
        let rows: Vec<Vec<f64>> = (0..ns)
            .into_par_iter()
            .map(|r| {
                (0..ni)
                    .map(|c| self.conditioned_with(&rule, arm, grid.signal.omega(r), grid.idler.omega(c)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(rows.concat())
    }

    /// Conditioned JSI on a grid (rows signal, columns idler).
    pub fn conditioned_jsi(&self, arm: Arm, grid: &SpectralGrid) -> Result<(DMatrix<f64>, ConvergenceCertificate)> {
        self.check_geometry()?;
        let (values, cert) = converge(
            &self.quadrature,
            conditioned_label(arm),
            |n| self.conditioned_grid(arm, grid, n),
            |a, b| relative_change(a, b, f64::abs, |x, y| (x - y).abs()),
        )?;
        let (ns, ni) = grid.shape();
        Ok((DMatrix::from_row_slice(ns, ni, &values), cert))
    }

    /// Coincidence and singles rates on `grid` and the heralding efficiencies
    /// η_i = R_c/R_s and η_s = R_c/R_i, each scaled by the partner mode's
    /// w_f² sec θ0/(2π ũ0²) so that the choice of ũ0 cancels.
    pub fn heralding_efficiency(&self, grid: &SpectralGrid) -> Result<HeraldingResult> {
        let (f, c_cert) = self.raw_jsa(grid)?;
        let (is, s_cert) = self.conditioned_jsi(Arm::Signal, grid)?;
        let (ii, i_cert) = self.conditioned_jsi(Arm::Idler, grid)?;
        let cell = grid.cell_area();
        let coincidence_rate = f.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell;
        let signal_singles = is.sum() * cell;
        let idler_singles = ii.sum() * cell;
        if !(signal_singles > 0.0 && idler_singles > 0.0) {
            return Err(SpdcError::invalid(
                "singles rates vanish on this grid; it does not cover the source spectrum",
            ));
        }
        let eta_idler = coincidence_rate / signal_singles * self.idler.efficiency_factor();
        let eta_signal = coincidence_rate / idler_singles * self.signal.efficiency_factor();
        for (name, eta) in [("eta_signal", eta_signal), ("eta_idler", eta_idler)] {
            if !(0.0..=1.0 + EFFICIENCY_SLACK).contains(&eta) {
                return Err(SpdcError::Consistency(format!(
                    "{name} = {eta} lies outside [0, 1]"
                )));
            }
        }
        Ok(HeraldingResult {
            coincidence_rate,
            signal_singles,
            idler_singles,
            eta_signal,
            eta_idler,
            certificates: vec![c_cert, s_cert, i_cert],
        })
    }

    /// Heralding efficiencies for each signal waist; failures are kept per
    /// row and do not stop the scan.
    pub fn waist_scan(&self, grid: &SpectralGrid, signal_waists: &[f64]) -> Vec<WaistScanRow> {
        signal_waists
            .iter()
            .map(|&w| WaistScanRow {
                signal_waist: w,
                outcome: self
                    .signal
                    .with_waist(w)
                    .and_then(|signal| Self::new(self.source.clone(), signal, self.idler, self.quadrature))
                    .and_then(|model| model.heralding_efficiency(grid)),
            })
            .collect()
    }
}

fn conditioned_label(arm: Arm) -> &'static str {
    match arm {
        Arm::Signal => "signal_conditioned_jsi",
        Arm::Idler => "idler_conditioned_jsi",
    }
}
