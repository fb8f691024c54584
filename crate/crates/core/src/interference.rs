//! Hong–Ou–Mandel interference between photons from two identical sources,
//! and g⁽²⁾ relations.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SpdcError};
use crate::jsa::JsaMatrix;
use crate::numerics::full_width_half_max;
use crate::quadrature::{gauss_legendre, integrate_panels};

/// Dip function ε(τ) sampled at increasing delays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomiDip {
    /// Delays τ, seconds.
    pub delays: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// ε(0).
    pub visibility: f64,
    /// FWHM of ε(τ) in seconds, if the sampled range contains it.
    pub width: Option<f64>,
}

impl HomiDip {
    fn new(delays: Vec<f64>, epsilon: Vec<f64>, visibility: f64) -> Self {
        let width = full_width_half_max(&delays, &epsilon);
        Self {
            delays,
            epsilon,
            visibility,
            width,
        }
    }

    /// Coincidence probability ½(1 − ε(τ)).
    pub fn coincidence_probability(&self) -> Vec<f64> {
        self.epsilon.iter().map(|e| 0.5 * (1.0 - e)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "delay_s,epsilon,coincidence_probability")?;
        for ((t, e), p) in self.delays.iter().zip(&self.epsilon).zip(self.coincidence_probability()) {
            writeln!(out, "{t:e},{e:e},{p:e}")?;
        }
        Ok(())
    }
}

/// `n` delays evenly spaced over [−half_range, half_range].
pub fn symmetric_delays(half_range: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(half_range > 0.0 && half_range.is_finite()) {
        return Err(SpdcError::invalid(
            "delay range needs at least 2 points and a positive half range",
        ));
    }
    let step = 2.0 * half_range / (n - 1) as f64;
    Ok((0..n).map(|k| -half_range + k as f64 * step).collect())
}

fn check_delays(delays: &[f64]) -> Result<()> {
    if delays.is_empty() || delays.iter().any(|t| !t.is_finite()) {
        return Err(SpdcError::invalid("delays must be finite and non-empty"));
    }
    if delays.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpdcError::invalid("delays must be strictly increasing"));
    }
    Ok(())
}

/// Kernel M(i1, i2) = Σ_s f(s, i1) f*(s, i2) Δω_s.
pub fn idler_kernel(jsa: &JsaMatrix) -> DMatrix<Complex64> {
    let f = jsa.amplitude();
    (f.transpose() * f.conjugate()) * Complex64::new(jsa.grid().signal.step(), 0.0)
}

/// Evaluator for ε(τ) = Σ_{i1,i2} |M(i1,i2)|² cos((Ω_i2 − Ω_i1)τ) Δω_i².
/// On a uniform grid the cosine depends only on i2 − i1, so the sum is
/// grouped by that offset once.
pub struct HomiKernel {
    /// Σ_{i1} |M(i1, i1+d)|² Δω_i², d = 0, 1, ...
    by_offset: Vec<f64>,
    step: f64,
}

impl HomiKernel {
    pub fn new(jsa: &JsaMatrix) -> Result<Self> {
        jsa.require_normalized()?;
        let m = idler_kernel(jsa);
        let n = m.nrows();
        let di = jsa.grid().idler.step();
        let by_offset = (0..n)
            .map(|d| (0..n - d).map(|i| m[(i, i + d)].norm_sqr()).sum::<f64>() * di * di)
            .collect();
        Ok(Self { by_offset, step: di })
    }

    pub fn epsilon(&self, tau: f64) -> f64 {
        // |M| is symmetric, so offsets ±d pair into 2cos
        self.by_offset[0]
            + 2.0
                * self.by_offset[1..]
                    .iter()
                    .enumerate()
                    .map(|(k, s)| s * ((k + 1) as f64 * self.step * tau).cos())
                    .sum::<f64>()
    }
}

/// HOMI dip of heralded idler photons from two copies of `jsa`.
pub fn homi_from_jsa(jsa: &JsaMatrix, delays: &[f64]) -> Result<HomiDip> {
    check_delays(delays)?;
    let kernel = HomiKernel::new(jsa)?;
    let epsilon = delays.iter().map(|&t| kernel.epsilon(t)).collect();
    Ok(HomiDip::new(delays.to_vec(), epsilon, kernel.epsilon(0.0)))
}

/// Direct quadruple sum of the four-photon overlap with phase
/// exp(−i(Ω_i2 − Ω_i1)τ); returns the complex value so callers can check
/// that the imaginary part vanishes. O(N_s²N_i²).
pub fn homi_brute_force(jsa: &JsaMatrix, tau: f64) -> Complex64 {
    let f = jsa.amplitude();
    let (ns, ni) = f.shape();
    let g = jsa.grid();
    let measure = (g.signal.step() * g.idler.step()).powi(2);
    let mut total = Complex64::new(0.0, 0.0);
    for s1 in 0..ns {
        for s2 in 0..ns {
            for i1 in 0..ni {
                for i2 in 0..ni {
                    let phase = -(g.idler.detuning(i2) - g.idler.detuning(i1)) * tau;
                    total += f[(s1, i2)].conj()
                        * f[(s2, i1)].conj()
                        * f[(s1, i1)]
                        * f[(s2, i2)]
                        * Complex64::from_polar(1.0, phase);
                }
            }
        }
    }
    total * measure
}

/// T(t, a) = a − |t| inside |t| < a.
pub fn triangle(t: f64, a: f64) -> f64 {
    (a - t.abs()).max(0.0)
}

/// Idler dip for a D ≈ 0 source: exp(−σ²(τ−t)²/4) convolved with T(t, a)²,
/// normalized to one at τ = 0. `a` is the pump–idler walk-off time.
pub fn idler_dip_model(sigma: f64, walkoff: f64, delays: &[f64]) -> Result<HomiDip> {
    check_delays(delays)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(SpdcError::invalid("pump bandwidth must be positive"));
    }
    let a = walkoff.abs();
    if !(a > 0.0 && a.is_finite()) {
        return Err(SpdcError::invalid("walk-off time must be non-zero"));
    }
    let rule = gauss_legendre(8)?;
    // the Gaussian is below 1e-17 beyond |τ − t| = 12.6/σ
    let reach = 12.6 / sigma;
    // panels no wider than a/8 or the Gaussian width 1/σ
    let max_panel = (a / 8.0).min(1.0 / sigma);
    let convolve = |tau: f64| -> f64 {
        let lo = (tau - reach).max(-a);
        let hi = (tau + reach).min(a);
        // split at the kink of T² at t = 0
        let mut edges = vec![lo];
        if lo < 0.0 && hi > 0.0 {
            edges.push(0.0);
        }
        edges.push(hi);
        edges
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let panels = ((w[1] - w[0]) / max_panel).ceil().max(1.0) as usize;
                integrate_panels(&rule, w[0], w[1], panels, |t| {
                    let u = sigma * (tau - t);
                    (-0.25 * u * u).exp() * triangle(t, a).powi(2)
                })
            })
            .sum()
    };
    let norm = convolve(0.0);
    let epsilon = delays.iter().map(|&t| convolve(t) / norm).collect();
    Ok(HomiDip::new(delays.to_vec(), epsilon, 1.0))
}

/// Signal dip for a group-velocity-matched source: exp(−σ²τ²/2).
pub fn signal_dip_model(sigma: f64, delays: &[f64]) -> Result<HomiDip> {
    check_delays(delays)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(SpdcError::invalid("pump bandwidth must be positive"));
    }
    let epsilon = delays
        .iter()
        .map(|&t| (-0.5 * (sigma * t).powi(2)).exp())
        .collect();
    Ok(HomiDip::new(delays.to_vec(), epsilon, 1.0))
}

/// Closed-form FWHM of the signal dip, 2√(2 ln 2)/σ.
pub fn signal_dip_fwhm(sigma: f64) -> f64 {
    2.0 * (2.0 * std::f64::consts::LN_2).sqrt() / sigma
}

/// g⁽²⁾(0) = 1 + P for the marginal of a pair source with purity P.
pub fn g2_from_purity(purity: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&purity) {
        return Err(SpdcError::invalid(format!(
            "purity must lie in [0, 1], got {purity}"
        )));
    }
    Ok(1.0 + purity)
}

/// g⁽²⁾(0) = C·R/(S1·S2) from coincidence rate C, singles S1, S2 and pump
/// repetition rate R (all in Hz).
pub fn g2_from_counts(coincidences: f64, singles_1: f64, singles_2: f64, repetition_rate: f64) -> Result<f64> {
    let denom = singles_1 * singles_2;
    if !(denom > 0.0 && singles_1 > 0.0) {
        return Err(SpdcError::invalid("singles rates must be positive"));
    }
    if !(coincidences >= 0.0 && repetition_rate > 0.0) {
        return Err(SpdcError::invalid(
            "coincidence rate must be non-negative and repetition rate positive",
        ));
    }
    Ok(coincidences * repetition_rate / denom)
}
