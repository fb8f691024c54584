//! The six subcommands. Each writes its data files and returns a JSON summary.

use nalgebra::DMatrix;
use serde_json::{json, Value};
use spdc_core::dispersion::{dispersion_parameter, find_gvm_wavelengths, solve_poling_period};
use spdc_core::fibercoupling::{FiberCoupledSource, HeraldingResult};
use spdc_core::interference::{
    g2_from_purity, homi_from_jsa, idler_dip_model, signal_dip_fwhm, signal_dip_model,
    symmetric_delays,
};
use spdc_core::jsa::{compute_jsa, jsa_components, pump_fwhm_to_sigma, pump_sigma_to_fwhm};
use spdc_core::schmidt::schmidt_decompose;
use spdc_core::units::{pump_wavelength, NM, UM};
use spdc_core::{HomiDip, JsaMatrix, SourceSpec, SpectralGrid};

use crate::config::{inclusive_range, JsaMode, Scenario};
use crate::output::{num, Emitter, Table};
use crate::CliError;

/// What a command produced. `partial` marks runs where some points failed
/// to converge but the remaining results were still written.
#[derive(Debug)]
pub struct Outcome {
    pub summary: Value,
    pub files: Vec<std::path::PathBuf>,
    pub partial: bool,
}

fn finish(mut emitter: Emitter, summary: Value, partial: bool) -> Result<Outcome, CliError> {
    let summary = emitter.summary(summary)?;
    Ok(Outcome {
        summary,
        files: emitter.into_files(),
        partial,
    })
}

fn grid_for(sc: &Scenario, source: &SourceSpec, n: usize) -> Result<SpectralGrid, CliError> {
    Ok(SpectralGrid::for_source(source, n, n, sc.spans)?)
}

fn plane_wave(sc: &Scenario, source: &SourceSpec, n: usize) -> Result<JsaMatrix, CliError> {
    let grid = grid_for(sc, source, n)?;
    Ok(compute_jsa(source, &grid, sc.profile, sc.delta_k)?)
}

fn purity_of(jsa: &JsaMatrix) -> Result<f64, CliError> {
    Ok(schmidt_decompose(jsa)?.purity)
}

/// Λ, D, GVM points and an optional D map.
pub fn phasematch(sc: &Scenario, mut out: Emitter) -> Result<Outcome, CliError> {
    let src = &sc.source;
    let axes = src.crystal.axes();
    let lambda_p = src.pump.center_wavelength();
    let lambda_s = src.signal_wavelength();
    let designed = solve_poling_period(&sc.dispersion, axes, lambda_p, lambda_s)?;
    let pumps: Vec<f64> = if sc.config.phasematch.gvm_pumps.is_empty() {
        vec![lambda_p]
    } else {
        sc.config.phasematch.gvm_pumps.iter().map(|p| p.si()).collect()
    };
    let mut gvm = Vec::new();
    let mut table = Table::new(&["pump_wavelength_nm", "signal_wavelength_nm", "idler_wavelength_nm"]);
    for lp in pumps {
        let (ls, li) = find_gvm_wavelengths(&sc.dispersion, axes, lp)?;
        table.push(vec![num(lp / NM), num(ls / NM), num(li / NM)]);
        gvm.push(json!({
            "pump_wavelength_nm": lp / NM,
            "signal_wavelength_nm": ls / NM,
            "idler_wavelength_nm": li / NM,
        }));
    }
    out.table("gvm", &table)?;

    if let Some(map) = &sc.config.phasematch.d_map {
        let m = map.get_ref();
        let axis = |lo: f64, hi: f64| -> Vec<f64> {
            (0..m.points)
                .map(|k| lo + (hi - lo) * k as f64 / (m.points - 1) as f64)
                .collect()
        };
        let signals = axis(m.signal_min.si(), m.signal_max.si());
        let idlers = axis(m.idler_min.si(), m.idler_max.si());
        let values = DMatrix::from_fn(signals.len(), idlers.len(), |r, c| {
            let lp = pump_wavelength(signals[r], idlers[c]);
            // out-of-range or singular points are left as NaN
            dispersion_parameter(&sc.dispersion, axes, lp, signals[r]).unwrap_or(f64::NAN)
        });
        let to_nm = |v: &[f64]| v.iter().map(|x| x / NM).collect::<Vec<_>>();
        out.labelled_matrix(
            "d_map",
            "signal_wavelength_nm",
            &to_nm(&signals),
            "idler_wavelength_nm",
            &to_nm(&idlers),
            &values,
        )?;
    }

    let [kp, ks, ki] = src.inverse_group_velocities();
    let summary = json!({
        "command": "phasematch",
        "pump_wavelength_nm": lambda_p / NM,
        "signal_wavelength_nm": lambda_s / NM,
        "idler_wavelength_nm": src.idler_wavelength() / NM,
        "poling_period_um": src.crystal.poling_period() / UM,
        "designed_poling_period_um": designed / UM,
        "crystal_length_mm": src.crystal.length() * 1e3,
        "dispersion_parameter": src.dispersion_parameter()?,
        "inverse_group_velocities_s_per_m": { "pump": kp, "signal": ks, "idler": ki },
        "phasematching_bandwidth_rad_s": src.phasematching_bandwidth(),
        "idler_walkoff_s": src.idler_walkoff_time(),
        "signal_walkoff_s": src.signal_walkoff_time(),
        "gvm": gvm,
    });
    finish(out, summary, false)
}

/// Purity at half resolution and its change, when enabled.
fn grid_check(sc: &Scenario, purity: f64, coarse: impl FnOnce(usize) -> Result<f64, CliError>) -> Result<Value, CliError> {
    let half = sc.grid_points / 2;
    if !sc.convergence_check || half < 2 {
        return Ok(Value::Null);
    }
    let p = coarse(half)?;
    Ok(json!({ "coarse_points": half, "coarse_purity": p, "purity_change": (purity - p).abs() }))
}

/// α, φ and JSI matrices with the Schmidt purity.
pub fn jsa(sc: &Scenario, mut out: Emitter) -> Result<Outcome, CliError> {
    let src = &sc.source;
    let n = sc.grid_points;
    let grid = grid_for(sc, src, n)?;
    let (alpha, phi) = jsa_components(src, &grid, sc.profile, sc.delta_k)?;
    out.spectral_matrix("pump_envelope", &grid, &alpha)?;
    out.spectral_matrix("phasematching", &grid, &phi)?;
    let plane = compute_jsa(src, &grid, sc.profile, sc.delta_k)?;
    let plane_schmidt = schmidt_decompose(&plane)?;

    let mode = sc.config.jsa.mode;
    let (jsa, certificate) = match mode {
        JsaMode::PlaneWave => (plane, None),
        JsaMode::Fiber => {
            let (signal, idler) = sc.collection_modes()?;
            let model = FiberCoupledSource::new(src.clone(), signal, idler, sc.quadrature)?;
            let (jsa, cert) = model.fiber_jsa(&grid)?;
            (jsa, Some((model, cert)))
        }
    };
    out.spectral_matrix("jsi", &grid, &jsa.intensity())?;
    let schmidt = schmidt_decompose(&jsa)?;
    let check = match &certificate {
        None => grid_check(sc, schmidt.purity, |half| purity_of(&plane_wave(sc, src, half)?))?,
        Some((model, _)) => grid_check(sc, schmidt.purity, |half| {
            purity_of(&model.fiber_jsa(&grid_for(sc, src, half)?)?.0)
        })?,
    };
    let mut warnings = Vec::new();
    if let Some(w) = jsa.coarse_grid_warning() {
        warnings.push(w);
    }
    let summary = json!({
        "command": "jsa",
        "mode": match mode { JsaMode::PlaneWave => "plane-wave", JsaMode::Fiber => "fiber" },
        "profile": sc.profile,
        "pump_sigma_rad_s": src.pump.sigma(),
        "signal_wavelength_nm": src.signal_wavelength() / NM,
        "idler_wavelength_nm": src.idler_wavelength() / NM,
        "purity": schmidt.purity,
        "schmidt_number": schmidt.schmidt_number,
        "schmidt": schmidt,
        "plane_wave_purity": plane_schmidt.purity,
        "grid": jsa.summary(),
        "grid_check": check,
        "certificate": certificate.map(|(_, c)| c),
        "warnings": warnings,
    });
    finish(out, summary, false)
}

/// Plane-wave purity versus pump FWHM.
pub fn purity_scan(sc: &Scenario, mut out: Emitter) -> Result<Outcome, CliError> {
    let scan = sc.purity_scan()?;
    let convention = sc.pump_fwhm_convention();
    let lambda_p = sc.source.pump.center_wavelength();
    let fwhms = inclusive_range(scan.fwhm_start.si(), scan.fwhm_stop.si(), scan.fwhm_step.si());
    let mut table = Table::new(&["pump_fwhm_nm", "sigma_rad_s", "purity", "schmidt_number"]);
    let mut rows = Vec::new();
    for fwhm in fwhms {
        let sigma = pump_fwhm_to_sigma(lambda_p, fwhm, convention)?;
        let source = sc.source.clone().with_pump(sc.source.pump.with_sigma(sigma)?)?;
        let s = schmidt_decompose(&plane_wave(sc, &source, sc.grid_points)?)?;
        // strip step-accumulation noise such as 1.9000000000000004
        let fwhm_nm = (fwhm / NM * 1e9).round() / 1e9;
        table.push(vec![num(fwhm_nm), num(sigma), num(s.purity), num(s.schmidt_number)]);
        rows.push(json!({ "pump_fwhm_nm": fwhm_nm, "sigma_rad_s": sigma, "purity": s.purity }));
    }
    out.table("purity_scan", &table)?;
    let best = rows
        .iter()
        .max_by(|a, b| a["purity"].as_f64().unwrap().total_cmp(&b["purity"].as_f64().unwrap()))
        .cloned();
    let summary = json!({
        "command": "purity-scan",
        "profile": sc.profile,
        "fwhm_convention": convention,
        "points": rows,
        "best": best,
    });
    finish(out, summary, false)
}

fn heralding_model(sc: &Scenario) -> Result<FiberCoupledSource, CliError> {
    let (signal, idler) = sc.collection_modes()?;
    Ok(FiberCoupledSource::new(sc.source.clone(), signal, idler, sc.quadrature)?)
}

fn max_change(r: &HeraldingResult) -> f64 {
    r.certificates.iter().map(|c| c.relative_change).fold(0.0, f64::max)
}

fn max_nodes(r: &HeraldingResult) -> usize {
    r.certificates.iter().map(|c| c.nodes).max().unwrap_or(0)
}

const HERALDING_COLUMNS: [&str; 9] = [
    "signal_waist_um",
    "eta_signal",
    "eta_idler",
    "coincidence_rate",
    "signal_singles",
    "idler_singles",
    "max_relative_change",
    "max_nodes",
    "status",
];

fn heralding_row(waist: f64, r: &HeraldingResult) -> Vec<Value> {
    vec![
        num(waist / UM),
        num(r.eta_signal),
        num(r.eta_idler),
        num(r.coincidence_rate),
        num(r.signal_singles),
        num(r.idler_singles),
        num(max_change(r)),
        json!(max_nodes(r)),
        json!("ok"),
    ]
}

/// Heralding efficiencies at the configured waists.
pub fn heralding(sc: &Scenario, mut out: Emitter) -> Result<Outcome, CliError> {
    let model = heralding_model(sc)?;
    let grid = grid_for(sc, &sc.source, sc.grid_points)?;
    let r = model.heralding_efficiency(&grid)?;
    let mut table = Table::new(&HERALDING_COLUMNS);
    table.push(heralding_row(model.signal.waist, &r));
    out.table("heralding", &table)?;
    let summary = json!({
        "command": "heralding",
        "pump_waist_um": sc.source.pump.waist() / UM,
        "signal_waist_um": model.signal.waist / UM,
        "idler_waist_um": model.idler.waist / UM,
        "result": r,
    });
    finish(out, summary, false)
}

/// Heralding efficiencies versus signal collection waist. Points that fail
/// are recorded with their error and make the run partial.
pub fn waist_scan(sc: &Scenario, mut out: Emitter) -> Result<Outcome, CliError> {
    let scan = sc.waist_scan()?;
    let model = heralding_model(sc)?;
    let grid = grid_for(sc, &sc.source, sc.grid_points)?;
    let waists = inclusive_range(scan.start.si(), scan.stop.si(), scan.step.si());
    let rows = model.waist_scan(&grid, &waists);
    let mut table = Table::new(&HERALDING_COLUMNS);
    let mut points = Vec::new();
    let mut failed = 0;
    let mut peak_s: Option<(f64, f64)> = None;
    let mut peak_i: Option<(f64, f64)> = None;
    for row in rows {
        let w = row.signal_waist;
        match row.outcome {
            Ok(r) => {
                table.push(heralding_row(w, &r));
                if peak_s.is_none_or(|(_, e)| r.eta_signal > e) {
                    peak_s = Some((w, r.eta_signal));
                }
                if peak_i.is_none_or(|(_, e)| r.eta_idler > e) {
                    peak_i = Some((w, r.eta_idler));
                }
                points.push(json!({ "signal_waist_um": w / UM, "status": "ok", "result": r }));
            }
            Err(e) => {
                // propagate anything other than quadrature failure
                if !e.is_convergence() {
                    return Err(e.into());
                }
                failed += 1;
                let mut cells = vec![num(w / UM)];
                cells.extend(std::iter::repeat_n(num(f64::NAN), 7));
                cells.push(json!("not_converged"));
                table.push(cells);
                points.push(json!({
                    "signal_waist_um": w / UM,
                    "status": "not_converged",
                    "error": e.to_string(),
                }));
            }
        }
    }
    out.table("waist_scan", &table)?;
    let peak = |p: Option<(f64, f64)>| p.map(|(w, e)| json!({ "signal_waist_um": w / UM, "eta": e }));
    let summary = json!({
        "command": "waist-scan",
        "pump_waist_um": sc.source.pump.waist() / UM,
        "idler_waist_um": model.idler.waist / UM,
        "points": points,
        "failed_points": failed,
        "peak_eta_signal": peak(peak_s),
        "peak_eta_idler": peak(peak_i),
    });
    finish(out, summary, failed > 0)
}

fn dip_summary(d: &HomiDip) -> Value {
    json!({ "visibility": d.visibility, "fwhm_ps": d.width.map(|w| w / 1e-12) })
}

/// Model HOMI dips for both arms and the JSA-based dips with the
/// visibility–purity check.
pub fn homi(sc: &Scenario, mut out: Emitter) -> Result<Outcome, CliError> {
    let src = &sc.source;
    let sigma = src.pump.sigma();
    let walkoff = src.idler_walkoff_time();
    let (idler_range, signal_range, n) = sc.homi_ranges();
    let idler_delays = symmetric_delays(idler_range, n)?;
    let signal_delays = symmetric_delays(signal_range, n)?;

    let idler_model = idler_dip_model(sigma, walkoff, &idler_delays)?;
    let signal_model = signal_dip_model(sigma, &signal_delays)?;
    let jsa = plane_wave(sc, src, sc.grid_points)?;
    let purity = purity_of(&jsa)?;
    let idler_jsa = homi_from_jsa(&jsa, &idler_delays)?;
    let signal_jsa = homi_from_jsa(&jsa.transposed(), &signal_delays)?;

    for (stem, dip) in [
        ("homi_idler_model", &idler_model),
        ("homi_signal_model", &signal_model),
        ("homi_idler_jsa", &idler_jsa),
        ("homi_signal_jsa", &signal_jsa),
    ] {
        let mut t = Table::new(&["delay_ps", "epsilon", "coincidence_probability"]);
        for ((tau, e), p) in dip.delays.iter().zip(&dip.epsilon).zip(dip.coincidence_probability()) {
            t.push(vec![num(tau / 1e-12), num(*e), num(p)]);
        }
        out.table(stem, &t)?;
    }

    let ratio = match (idler_model.width, signal_model.width) {
        (Some(i), Some(s)) => Some(i / s),
        _ => None,
    };
    let summary = json!({
        "command": "homi",
        "pump_sigma_rad_s": sigma,
        "pump_fwhm_nm": pump_sigma_to_fwhm(src.pump.center_wavelength(), sigma, sc.pump_fwhm_convention()) / NM,
        "idler_walkoff_ps": walkoff / 1e-12,
        "idler_model": dip_summary(&idler_model),
        "signal_model": dip_summary(&signal_model),
        "signal_model_fwhm_closed_form_ps": signal_dip_fwhm(sigma) / 1e-12,
        "width_ratio": ratio,
        "idler_jsa": dip_summary(&idler_jsa),
        "signal_jsa": dip_summary(&signal_jsa),
        "purity": purity,
        "visibility": idler_jsa.visibility,
        "visibility_minus_purity": idler_jsa.visibility - purity,
        "g2": g2_from_purity(purity.min(1.0))?,
    });
    finish(out, summary, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;
    use crate::output::{Format, Provenance};
    use std::path::Path;

    fn scenario(extra: &str) -> Scenario {
        let text = format!(
            r#"
[crystal]
length = "20 mm"

[pump]
wavelength = "521 nm"
fwhm = "1.0 nm"
waist = "220 um"

[signal]
wavelength = "775 nm"
waist = "125 um"

[idler]
waist = "120 um"
{extra}"#
        );
        Scenario::parse(Path::new("t.toml"), text, Overrides::default()).unwrap()
    }

    fn emitter(dir: &Path, command: &str) -> Emitter {
        let prov = Provenance {
            tool: "t".into(),
            command: command.into(),
            config: "t.toml".into(),
            config_sha256: String::new(),
            dispersion: String::new(),
            quadrature: None,
            grid_points: None,
        };
        Emitter::new(dir, Format::Csv, prov).unwrap()
    }

    #[test]
    fn single_point_scan_matches_jsa() {
        let sc = scenario(
            "[grid]\npoints = 96\nconvergence_check = false\n[purity_scan]\nfwhm_start = \"2.1 nm\"\nfwhm_stop = \"2.1 nm\"\nfwhm_step = \"1 nm\"\n",
        );
        let dir = tempfile::tempdir().unwrap();
        let scan = purity_scan(&sc, emitter(dir.path(), "purity-scan")).unwrap();
        let text = sc.text().replace("fwhm = \"1.0 nm\"", "fwhm = \"2.1 nm\"");
        let sc2 = Scenario::parse(Path::new("t.toml"), text, Overrides::default()).unwrap();
        let one = jsa(&sc2, emitter(dir.path(), "jsa")).unwrap();
        assert_eq!(scan.summary["points"][0]["purity"], one.summary["purity"]);
    }

    #[test]
    fn single_point_heralding_matches_direct_call() {
        let sc = scenario("[grid]\npoints = 4\n");
        let dir = tempfile::tempdir().unwrap();
        let o = heralding(&sc, emitter(dir.path(), "heralding")).unwrap();
        let model = heralding_model(&sc).unwrap();
        let grid = SpectralGrid::for_source(&sc.source, 4, 4, sc.spans).unwrap();
        let direct = model.heralding_efficiency(&grid).unwrap();
        assert_eq!(o.summary["result"]["eta_idler"].as_f64().unwrap(), direct.eta_idler);
        assert_eq!(o.summary["result"]["eta_signal"].as_f64().unwrap(), direct.eta_signal);
    }

    #[test]
    fn non_converged_waist_is_flagged() {
        let sc = scenario(
            "[grid]\npoints = 3\n[quadrature]\nnodes = 16\nmax_nodes = 16\n[waist_scan]\nstart = \"10 um\"\nstop = \"125 um\"\nstep = \"115 um\"\n",
        );
        let dir = tempfile::tempdir().unwrap();
        let o = waist_scan(&sc, emitter(dir.path(), "waist-scan")).unwrap();
        assert!(o.partial);
        assert_eq!(o.summary["failed_points"], 1);
        assert_eq!(o.summary["points"][0]["status"], "not_converged");
        assert_eq!(o.summary["points"][1]["status"], "ok");
        let csv = std::fs::read_to_string(&o.files[0]).unwrap();
        assert!(csv.lines().any(|l| l.starts_with("1e1,nan") && l.ends_with("not_converged")), "{csv}");
    }

    #[test]
    fn d_map_marks_unsolvable_points() {
        let sc = scenario(
            "[phasematch.d_map]\nsignal_min = \"700 nm\"\nsignal_max = \"900 nm\"\nidler_min = \"1400 nm\"\nidler_max = \"1800 nm\"\npoints = 5\n",
        );
        let dir = tempfile::tempdir().unwrap();
        let o = phasematch(&sc, emitter(dir.path(), "phasematch")).unwrap();
        let map = o.files.iter().find(|p| p.ends_with("d_map.csv")).unwrap();
        let text = std::fs::read_to_string(map).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 6);
        assert!(data[0].starts_with("signal_wavelength_nm\\idler_wavelength_nm,1.4e3"));
        for line in &data[1..] {
            let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cells.len(), 6);
            assert!(cells.iter().all(|v| v.is_finite()), "{line}");
        }
    }

    #[test]
    fn homi_visibility_is_purity() {
        let sc = scenario("[grid]\npoints = 96\n[homi]\ndelay_points = 101\n");
        let dir = tempfile::tempdir().unwrap();
        let o = homi(&sc, emitter(dir.path(), "homi")).unwrap();
        assert!(o.summary["visibility_minus_purity"].as_f64().unwrap().abs() < 1e-8);
        assert_eq!(o.files.len(), 5);
    }
}
