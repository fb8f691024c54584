use proptest::prelude::*;
use spdc_core::dispersion::find_gvm_wavelengths;
use spdc_core::fibercoupling::{CollectionModeSpec, FiberCoupledSource, QuadratureSettings};
use spdc_core::jsa::{
    compute_jsa, phasematching_gaussian, phasematching_sinc, pump_fwhm_to_sigma, FwhmConvention,
    GridSpans, NORMALIZATION_TOLERANCE,
};
use spdc_core::schmidt::schmidt_decompose;
use spdc_core::units::{GAMMA, NM, UM};
use spdc_core::{
    AxisAssignment, DeltaKMode, DispersionModel, PhasematchingProfile, PumpSpec, SourceSpec,
    SpectralGrid, UniformAxis,
};

fn source(lambda_s: f64, sigma: f64, length: f64) -> SourceSpec {
    SourceSpec::designed(
        DispersionModel::ktp_bierlein_vanherzeele(),
        PumpSpec::new(521.0 * NM, sigma, 220.0 * UM, 0.0).unwrap(),
        lambda_s,
        length,
        AxisAssignment::TYPE_II_YZY,
        PhasematchingProfile::Sinc,
    )
    .unwrap()
}

fn sigma_for(fwhm_nm: f64) -> f64 {
    pump_fwhm_to_sigma(521.0 * NM, fwhm_nm * NM, FwhmConvention::Amplitude).unwrap()
}

fn purity(s: &SourceSpec, n: usize, profile: PhasematchingProfile) -> f64 {
    let grid = SpectralGrid::for_source(s, n, n, GridSpans::default()).unwrap();
    let jsa = compute_jsa(s, &grid, profile, DeltaKMode::Full).unwrap();
    schmidt_decompose(&jsa).unwrap().purity
}

#[test]
fn phasematching_bandwidth_is_0_4_thz() {
    let s = source(775.0 * NM, sigma_for(1.0), 0.02);
    let bw = s.phasematching_bandwidth();
    assert!((bw / 1e12 - 0.4).abs() < 0.05, "{bw:e}");
    // 1/e half-width of the Gaussian approximation; the sinc itself sits
    // within 0.05 of e⁻¹ there
    let a = s.idler_walkoff_time().abs();
    let dk = a * bw / s.crystal.length();
    let l = s.crystal.length();
    assert!((phasematching_gaussian(dk, l) - (-1.0f64).exp()).abs() < 1e-12);
    assert!((phasematching_sinc(dk, l) - (-1.0f64).exp()).abs() < 0.05);
}

/// Largest |Δk_full − Δk_first|, as an idler detuning in units of the
/// phasematching bandwidth, along the first-order ridge Ω_i = −D·Ω out to
/// |Ω| = reach, Ω = Ω_s + Ω_i.
fn ridge_deviation(s: &SourceSpec, reach: f64) -> f64 {
    let (_, ws0, wi0) = s.central_omegas();
    let k = s.inverse_group_velocities();
    let slope = (k[0] - k[2]).abs();
    let bw = s.phasematching_bandwidth();
    let d = s.dispersion_parameter().unwrap();
    let mut worst: f64 = 0.0;
    for a in -60..=60 {
        let om = reach * a as f64 / 60.0;
        let di = -d * om;
        let ds = om - di;
        let full = s.delta_k(DeltaKMode::Full, ws0 + ds, wi0 + di).unwrap();
        let first = s.delta_k(DeltaKMode::FirstOrder, ws0 + ds, wi0 + di).unwrap();
        worst = worst.max((full - first).abs() / slope / bw);
    }
    worst
}

#[test]
fn first_order_mismatch_error_is_quadratic() {
    let s = source(775.0 * NM, sigma_for(1.0), 0.02);
    let sigma = s.pump.sigma();
    let full = ridge_deviation(&s, 3.0 * sigma);
    let half = ridge_deviation(&s, 1.5 * sigma);
    assert!((half / full - 0.25).abs() < 0.02, "{}", half / full);
    // frozen grid scan: the residual at 1 nm exceeds 5% of the bandwidth
    assert!((full - 0.0613).abs() < 5e-4, "{full}");
}

#[test]
fn first_order_mismatch_preserves_purity() {
    for (fwhm, tol) in [(1.0, 1e-4), (2.1, 1e-4), (4.1, 2e-3)] {
        let s = source(775.0 * NM, sigma_for(fwhm), 0.02);
        let grid = SpectralGrid::for_source(&s, 256, 256, GridSpans::default()).unwrap();
        let p = |mode| {
            let jsa = compute_jsa(&s, &grid, PhasematchingProfile::Sinc, mode).unwrap();
            schmidt_decompose(&jsa).unwrap().purity
        };
        let (full, first) = (p(DeltaKMode::Full), p(DeltaKMode::FirstOrder));
        assert!((full - first).abs() < tol, "fwhm {fwhm}: {full} vs {first}");
    }
}

#[test]
fn synthetic_group_velocity_match_closed_form() {
    // k'_p = k'_s exactly: f = exp[−(Ω_s+Ω_i)²/σ²]·exp[−Ω_i²/b²] with
    // b = 2/(a√γ). Writing the exponent as −(x² + 2xy + (1+r)y²)/σ² with
    // r = σ²/b², the Gaussian-state purity is √(r/(1+r)).
    let base = source(775.0 * NM, 1e12, 0.02);
    let [kp, _, ki] = base.inverse_group_velocities();
    let b = base.phasematching_bandwidth();
    for ratio in [0.5, 2.0, 10.0, 1000.0] {
        let sigma = ratio * b;
        let s = base
            .clone()
            .with_pump(PumpSpec::new(521.0 * NM, sigma, 220.0 * UM, 0.0).unwrap())
            .unwrap()
            .with_inverse_group_velocities([kp, kp, ki])
            .unwrap();
        assert_eq!(s.dispersion_parameter().unwrap(), 0.0);
        let (_, ws0, wi0) = s.central_omegas();
        let n = 384;
        let idler_half = 8.0 * b;
        let signal_half = 6.0 * sigma + idler_half;
        let grid = SpectralGrid::new(
            UniformAxis::symmetric(ws0, signal_half, n).unwrap(),
            UniformAxis::symmetric(wi0, idler_half, n).unwrap(),
        );
        let jsa = compute_jsa(&s, &grid, PhasematchingProfile::Gaussian, DeltaKMode::FirstOrder).unwrap();
        let p = schmidt_decompose(&jsa).unwrap().purity;
        let r = ratio * ratio;
        let exact = (r / (1.0 + r)).sqrt();
        assert!((p - exact).abs() < 1e-6, "ratio {ratio}: {p} vs {exact}");
        if ratio >= 1000.0 {
            assert!((p - 1.0).abs() < 1e-6);
        }
    }
    // consistency of b with γ
    let a = base.idler_walkoff_time().abs();
    assert!((b - 2.0 / (a * GAMMA.sqrt())).abs() < 1e-6 * b);
}

#[test]
fn purity_falls_beyond_optimum() {
    let fwhms = [1.0, 1.5, 2.1, 2.6, 3.1, 3.6, 4.1];
    let ps: Vec<f64> = fwhms
        .iter()
        .map(|&f| purity(&source(775.0 * NM, sigma_for(f), 0.02), 256, PhasematchingProfile::Sinc))
        .collect();
    assert!(ps.windows(2).all(|w| w[1] <= w[0]), "{ps:?}");
}

#[test]
fn apodization_never_hurts() {
    for fwhm in [0.7, 1.0, 2.1, 4.1] {
        let s = source(775.0 * NM, sigma_for(fwhm), 0.02);
        let sinc = purity(&s, 192, PhasematchingProfile::Sinc);
        let gauss = purity(&s, 192, PhasematchingProfile::Gaussian);
        assert!(sinc <= gauss, "fwhm {fwhm}: {sinc} > {gauss}");
    }
}

#[test]
fn grid_doubling_is_converged() {
    for fwhm in [1.0, 2.1, 4.1] {
        let s = source(775.0 * NM, sigma_for(fwhm), 0.02);
        let coarse = purity(&s, 256, PhasematchingProfile::Sinc);
        let fine = purity(&s, 512, PhasematchingProfile::Sinc);
        assert!((coarse - fine).abs() < 1e-3, "fwhm {fwhm}: {coarse} vs {fine}");
    }
}

#[test]
fn gvm_point_gives_highest_plane_wave_purity() {
    let m = DispersionModel::ktp_bierlein_vanherzeele();
    let (ls, _) = find_gvm_wavelengths(&m, AxisAssignment::TYPE_II_YZY, 521.0 * NM).unwrap();
    let at_gvm = purity(&source(ls, 5e12, 0.02), 192, PhasematchingProfile::Sinc);
    let detuned = purity(&source(775.0 * NM, 5e12, 0.02), 192, PhasematchingProfile::Sinc);
    assert!(at_gvm > detuned, "{at_gvm} vs {detuned}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_sources_normalize(
        lambda_s in 745.0f64..800.0,
        fwhm in 0.3f64..5.0,
        length_mm in 5.0f64..30.0,
        n in 16usize..96,
        apodized in any::<bool>(),
    ) {
        let s = source(lambda_s * NM, sigma_for(fwhm), length_mm * 1e-3);
        let grid = SpectralGrid::for_source(&s, n, n + 7, GridSpans::default()).unwrap();
        let profile = if apodized { PhasematchingProfile::Gaussian } else { PhasematchingProfile::Sinc };
        let jsa = compute_jsa(&s, &grid, profile, DeltaKMode::Full).unwrap();
        prop_assert!((jsa.norm_squared() - 1.0).abs() < NORMALIZATION_TOLERANCE);
        let p = schmidt_decompose(&jsa).unwrap().purity;
        prop_assert!(p > 0.0 && p <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_collection_geometries_give_physical_efficiencies(
        w0 in 150.0f64..400.0,
        wfs in 70.0f64..300.0,
        wfi in 70.0f64..300.0,
        fwhm in 0.5f64..4.0,
    ) {
        let s = SourceSpec::designed(
            DispersionModel::ktp_bierlein_vanherzeele(),
            PumpSpec::new(521.0 * NM, sigma_for(fwhm), w0 * UM, 0.0).unwrap(),
            775.0 * NM,
            0.02,
            AxisAssignment::TYPE_II_YZY,
            PhasematchingProfile::Sinc,
        )
        .unwrap();
        let grid = SpectralGrid::for_source(&s, 6, 6, GridSpans::default()).unwrap();
        let m = FiberCoupledSource::new(
            s,
            CollectionModeSpec::new(wfs * UM).unwrap(),
            CollectionModeSpec::new(wfi * UM).unwrap(),
            QuadratureSettings::default(),
        )
        .unwrap();
        let r = m.heralding_efficiency(&grid).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.eta_idler), "{}", r.eta_idler);
        prop_assert!((0.0..=1.0).contains(&r.eta_signal), "{}", r.eta_signal);
    }
}
