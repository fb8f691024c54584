//! Schmidt decomposition of a discretized JSA and an independent purity check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Result, SpdcError};
use crate::jsa::JsaMatrix;

/// Coefficients below this fraction of the leading one do not count towards
/// the reported number of significant modes.
pub const TRUNCATION_RATIO: f64 = 1e-12;

/// Number of coefficients included in serialized output.
pub const SERIALIZED_COEFFICIENTS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtResult {
    /// λ_k, descending, summing to one.
    pub coefficients: Vec<f64>,
    /// P = Σλ_k².
    pub purity: f64,
    /// K = 1/P.
    pub schmidt_number: f64,
    /// Count of λ_k above `TRUNCATION_RATIO`·λ_0.
    pub significant_modes: usize,
}

impl SchmidtResult {
    /// Builds the result from raw singular values in any order.
    pub fn from_singular_values(mut singular: Vec<f64>) -> Result<Self> {
        if singular.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(SpdcError::invalid("singular values must be finite and non-negative"));
        }
        singular.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = singular.iter().map(|s| s * s).sum();
        if !(total > 0.0) {
            return Err(SpdcError::invalid("cannot decompose a zero JSA"));
        }
        let coefficients: Vec<f64> = singular.iter().map(|s| s * s / total).collect();
        let purity: f64 = coefficients.iter().map(|l| l * l).sum();
        let threshold = TRUNCATION_RATIO * coefficients[0];
        Ok(Self {
            significant_modes: coefficients.iter().filter(|&&l| l >= threshold).count(),
            schmidt_number: 1.0 / purity,
            purity,
            coefficients,
        })
    }
}

impl Serialize for SchmidtResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            purity: f64,
            schmidt_number: f64,
            significant_modes: usize,
            coefficients: &'a [f64],
        }
        let n = self.coefficients.len().min(SERIALIZED_COEFFICIENTS);
        Repr {
            purity: self.purity,
            schmidt_number: self.schmidt_number,
            significant_modes: self.significant_modes,
            coefficients: &self.coefficients[..n],
        }
        .serialize(serializer)
    }
}

/// Singular values of the amplitude matrix. The uniform cell area is a
/// global factor and drops out of the normalized coefficients. Real
/// matrices take the cheaper real SVD.
pub fn singular_values(amplitude: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    if amplitude.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SpdcError::invalid("JSA contains non-finite entries"));
    }
    let values = if amplitude.iter().all(|z| z.im == 0.0) {
        amplitude.map(|z| z.re).singular_values()
    } else {
        amplitude.clone().singular_values()
    };
    Ok(values.iter().copied().collect())
}

pub fn schmidt_decompose(jsa: &JsaMatrix) -> Result<SchmidtResult> {
    jsa.require_normalized()?;
    SchmidtResult::from_singular_values(singular_values(jsa.amplitude())?)
}

/// Purity from the reduced signal density matrix
/// ρ(s, s′) = Σ_i f(s, i) f*(s′, i), trace-normalized, Tr ρ² by direct sum.
pub fn purity_oracle(jsa: &JsaMatrix) -> Result<f64> {
    jsa.require_normalized()?;
    let rho = reduced_density_matrix(jsa.amplitude());
    let n = rho.nrows();
    let mut hermiticity: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            hermiticity = hermiticity.max((rho[(r, c)] - rho[(c, r)].conj()).norm());
        }
    }
    if hermiticity > 1e-12 {
        return Err(SpdcError::Consistency(format!(
            "reduced density matrix is not Hermitian (max deviation {hermiticity:e})"
        )));
    }
    let trace: f64 = (0..n).map(|k| rho[(k, k)].re).sum();
    let sum_sq: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
    Ok(sum_sq / (trace * trace))
}

/// ρ = F F† without any decomposition, by explicit sums.
pub fn reduced_density_matrix(f: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ns, ni) = f.shape();
    let mut rho = DMatrix::<Complex64>::zeros(ns, ns);
    for r in 0..ns {
        for c in r..ns {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..ni {
                acc += f[(r, i)] * f[(c, i)].conj();
            }
            rho[(r, c)] = acc;
            rho[(c, r)] = acc.conj();
        }
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsa::{SpectralGrid, UniformAxis};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(ns: usize, ni: usize) -> SpectralGrid {
        SpectralGrid::new(
            UniformAxis::symmetric(2.4e15, 1e13, ns).unwrap(),
            UniformAxis::symmetric(1.1e15, 2e12, ni).unwrap(),
        )
    }

    fn normalized(m: DMatrix<Complex64>) -> JsaMatrix {
        let (ns, ni) = m.shape();
        JsaMatrix::new(grid(ns, ni), m).unwrap().normalized().unwrap()
    }

    fn random_complex(rng: &mut ChaCha8Rng, ns: usize, ni: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(ns, ni, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn rank_one_is_pure() {
        let a: Vec<f64> = (0..40).map(|k| (-(k as f64 - 20.0).powi(2) / 30.0).exp()).collect();
        let b: Vec<f64> = (0..30).map(|k| 1.0 / (1.0 + (k as f64 - 12.0).powi(2))).collect();
        let jsa = normalized(DMatrix::from_fn(40, 30, |r, c| Complex64::new(a[r] * b[c], 0.0)));
        let res = schmidt_decompose(&jsa).unwrap();
        assert!((res.purity - 1.0).abs() < 1e-9);
        assert!((purity_oracle(&jsa).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(res.significant_modes, 1);
    }

    #[test]
    fn diagonal_modes() {
        for m in [2usize, 5, 17] {
            let jsa = normalized(DMatrix::from_fn(m, m, |r, c| {
                Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0)
            }));
            let res = schmidt_decompose(&jsa).unwrap();
            assert!((res.purity - 1.0 / m as f64).abs() < 1e-14);
            assert!((res.schmidt_number - m as f64).abs() < 1e-12);
            assert_eq!(res.significant_modes, m);
        }
    }

    #[test]
    fn coefficients_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let jsa = normalized(random_complex(&mut rng, 20, 35));
        let res = schmidt_decompose(&jsa).unwrap();
        assert_eq!(res.coefficients.len(), 20);
        assert!((res.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(res.coefficients.windows(2).all(|w| w[0] >= w[1]));
        assert!(res.purity > 0.0 && res.purity <= 1.0);
        assert!(res.schmidt_number >= 1.0);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let m = DMatrix::from_element(4, 4, Complex64::new(1.0, 0.0));
        let jsa = JsaMatrix::new(grid(4, 4), m).unwrap();
        assert!(schmidt_decompose(&jsa).is_err());
        assert!(purity_oracle(&jsa).is_err());
    }

    #[test]
    fn nonseparable_phase_lowers_purity() {
        // Gaussian JSA with a weak intensity correlation, then a chirp
        // exp(iκ x y) that cannot be removed by local phases
        let n = 48;
        let x = |k: usize| (k as f64 - (n as f64 - 1.0) / 2.0) / 8.0;
        let base = DMatrix::from_fn(n, n, |r, c| {
            let (a, b) = (x(r), x(c));
            Complex64::new((-(a * a + b * b) / 2.0 - 0.2 * a * b).exp(), 0.0)
        });
        let flat = schmidt_decompose(&normalized(base.clone())).unwrap().purity;
        for kappa in [0.1, 0.3, 1.0] {
            let phased = DMatrix::from_fn(n, n, |r, c| {
                base[(r, c)] * Complex64::from_polar(1.0, kappa * x(r) * x(c))
            });
            let p = schmidt_decompose(&normalized(phased)).unwrap().purity;
            assert!(p < flat, "kappa {kappa}: {p} vs {flat}");
        }
    }

    #[test]
    fn serialization_truncates() {
        let res = SchmidtResult::from_singular_values((1..=100).map(|k| 1.0 / k as f64).collect()).unwrap();
        let json: serde_json::Value = serde_json::to_value(&res).unwrap();
        assert_eq!(json["coefficients"].as_array().unwrap().len(), SERIALIZED_COEFFICIENTS);
        assert_eq!(res.coefficients.len(), 100);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn svd_matches_density_matrix(seed in any::<u64>(), ns in 2usize..33, ni in 2usize..33) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let jsa = normalized(random_complex(&mut rng, ns, ni));
            let p_svd = schmidt_decompose(&jsa).unwrap().purity;
            let p_rho = purity_oracle(&jsa).unwrap();
            prop_assert!((p_svd - p_rho).abs() < 1e-8, "{} vs {}", p_svd, p_rho);
        }

        #[test]
        fn local_phases_leave_purity_unchanged(
            seed in any::<u64>(),
            re in -3.0f64..3.0,
            im in -3.0f64..3.0,
            a in -5e-12f64..5e-12,
            b in -5e-12f64..5e-12,
        ) {
            prop_assume!(re.hypot(im) > 1e-3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_complex(&mut rng, 24, 16);
            let g = grid(24, 16);
            let p0 = schmidt_decompose(&normalized(m.clone())).unwrap().purity;
            let global = Complex64::new(re, im);
            let ramped = DMatrix::from_fn(24, 16, |r, c| {
                let phase = a * g.signal.detuning(r) + b * g.idler.detuning(c);
                m[(r, c)] * global * Complex64::from_polar(1.0, phase)
            });
            let p1 = schmidt_decompose(&normalized(ramped)).unwrap().purity;
            prop_assert!((p0 - p1).abs() < 1e-10);
        }
    }
}
