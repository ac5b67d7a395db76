//! Subcommand implementations. Each returns data plus an exit code; the
//! binary only parses arguments and prints.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axigraph::{
    frame, frame_from_derivatives, legendre_with_derivatives, GeometryFrame, RadialProfile,
};
use crate::duality::{dual_check, DualReport, KAPPA_FLOOR};
use crate::error::{Error, ShellError};
use crate::flowcore::{residual_ev_rho, residual_ev_u, residual_trace_h, run_observed, trace_h_norm, TRACE_DT};
use crate::functionals::{minkowski_gap, minkowski_residuals, record};
use crate::spaceform::{slice_data, SliceData, WarpModel};

use super::config::{InitialProfile, Scenario};
use super::io::{read_profile, write_json, write_profile, RunReport, TraceWriter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_PROPERTY: i32 = 4;

/// Smallest fitted order accepted by the refinement checks.
pub const MIN_ORDER: f64 = 1.8;
/// Errors below this are round-off and pass regardless of order.
pub const ERROR_FLOOR: f64 = 1e-9;

pub fn exit_code(err: &ShellError) -> i32 {
    match err {
        ShellError::Config { .. } | ShellError::Scenario(_) | ShellError::Format { .. } => {
            EXIT_CONFIG
        }
        ShellError::Geometry(Error::NotConvex { .. }) => EXIT_CONFIG,
        ShellError::Geometry(_) => EXIT_GUARD,
        ShellError::Io { .. } => EXIT_IO,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub exit_code: i32,
    pub out_dir: PathBuf,
}

/// Runs one scenario and writes `trace.csv`, `report.json` and
/// `final_profile.csv` into `out_dir`.
pub fn cmd_run(scenario: &Scenario, out_dir: &Path) -> Result<RunOutcome, ShellError> {
    let profile = scenario.admitted_profile()?;
    scenario
        .flow
        .validate()
        .map_err(|e| ShellError::Scenario(e.to_string()))?;
    std::fs::create_dir_all(out_dir).map_err(|e| ShellError::io(out_dir, e))?;

    let initial = record(&profile, &frame(&profile)?, 0.0);
    let minkowski_gap_initial = minkowski_gap(profile.model(), &initial)?;

    let mut writer = TraceWriter::create(&out_dir.join("trace.csv"))?;
    let mut write_error = None;
    let trace = run_observed(&profile, &scenario.flow, |rec| {
        if write_error.is_none() {
            write_error = writer.append(rec).err();
        }
    })?;
    if let Some(err) = write_error {
        return Err(err);
    }
    write_profile(&out_dir.join("final_profile.csv"), &trace.final_profile)?;
    let report = RunReport {
        status: trace.status,
        r_infinity: trace.r_infinity,
        area0: trace.area0,
        phi1_gap: trace.phi1_gap,
        minkowski_gap_initial,
        wall_time: trace.wall_time,
    };
    write_json(&out_dir.join("report.json"), &report)?;
    let exit_code = if trace.status.is_guard_trip() {
        EXIT_GUARD
    } else {
        EXIT_OK
    };
    Ok(RunOutcome {
        report,
        exit_code,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Runs independent scenarios in parallel, each into `out_dir/<name>`.
pub fn cmd_sweep(
    scenarios: &[Scenario],
    out_dir: &Path,
) -> Vec<(String, Result<RunOutcome, ShellError>)> {
    scenarios
        .par_iter()
        .map(|s| (s.name.clone(), cmd_run(s, &out_dir.join(&s.name))))
        .collect()
}

pub fn slice_table(model: &WarpModel, radii: &[f64]) -> Result<Vec<SliceData>, Error> {
    radii.iter().map(|&r| slice_data(model, r)).collect()
}

#[derive(Debug, Serialize)]
struct SliceRow {
    r: f64,
    area: f64,
    volume: f64,
    #[serde(rename = "H1")]
    h1: f64,
    #[serde(rename = "W2")]
    w2: f64,
}

/// Writes `r, area, volume, H1, W2` for each radius as CSV.
pub fn write_slice_table<W: std::io::Write>(rows: &[SliceData], out: W) -> Result<(), csv::Error> {
    let mut table = csv::Writer::from_writer(out);
    for s in rows {
        table.serialize(SliceRow {
            r: s.radius,
            area: s.area,
            volume: s.volume,
            h1: s.mean_curvature,
            w2: s.w2,
        })?;
    }
    table.flush()?;
    Ok(())
}

/// One refinement check: errors per level (coarse to fine) and the
/// least-squares order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub levels: Vec<usize>,
    pub errors: Vec<f64>,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
    pub duality: Option<DualCheck>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCheck {
    pub passed: bool,
    pub report: DualReport,
    /// Orders of the metric, curvature-product and involution errors.
    pub orders: Vec<(String, f64)>,
}

/// Least-squares slope of `-log2(error)` against `log2(N)`.
pub fn fitted_order(levels: &[usize], errors: &[f64]) -> Option<f64> {
    if levels.len() < 2 || errors.iter().any(|e| !(*e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = levels.iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| -e.log2()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

fn suite(name: &str, levels: &[usize], errors: Vec<f64>) -> SuiteResult {
    let order = fitted_order(levels, &errors);
    let negligible = errors.last().is_some_and(|&e| e < ERROR_FLOOR);
    let passed = errors.iter().all(|e| e.is_finite())
        && (negligible || order.is_some_and(|p| p >= MIN_ORDER));
    SuiteResult {
        name: name.into(),
        passed,
        levels: levels.to_vec(),
        errors,
        order,
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Exact first and second derivatives of an analytic initial profile.
fn analytic_derivatives(initial: &InitialProfile, psi: f64) -> Option<(f64, f64)> {
    match *initial {
        InitialProfile::Slice { .. } => Some((0.0, 0.0)),
        InitialProfile::Legendre { eps, mode, .. } => {
            let (s, c) = psi.sin_cos();
            let (_, dp, d2p) = legendre_with_derivatives(mode, c);
            Some((-eps * s * dp, eps * (s * s * d2p - c * dp)))
        }
        InitialProfile::Custom { .. } => None,
    }
}

fn exact_frame(profile: &RadialProfile, initial: &InitialProfile) -> Result<GeometryFrame, Error> {
    let grid = profile.grid();
    let (d1, d2): (Vec<f64>, Vec<f64>) = grid
        .psi()
        .iter()
        .map(|&p| analytic_derivatives(initial, p).unwrap_or((0.0, 0.0)))
        .unzip();
    frame_from_derivatives(
        profile.model(),
        grid.psi(),
        profile.rho(),
        &d1,
        &d2,
        |i| grid.is_pole(i),
        0.0,
    )
}

/// Every `stride`-th node of a profile.
fn subsample(profile: &RadialProfile, stride: usize) -> Result<RadialProfile, Error> {
    let rho = profile.rho().iter().step_by(stride).copied().collect();
    RadialProfile::new(*profile.model(), rho)
}

/// Where the refinement levels of a check come from.
pub enum CheckSource<'a> {
    /// Analytic initial profile sampled at `N`, `2N`, `4N`.
    Scenario(&'a Scenario),
    /// A stored profile, subsampled to `N/4`, `N/2`, `N`.
    Profile(&'a RadialProfile),
}

/// Property suites over three refinement levels.
pub fn cmd_check(source: CheckSource) -> Result<CheckReport, ShellError> {
    let (profiles, initial) = match source {
        CheckSource::Scenario(s) if !matches!(s.initial, InitialProfile::Custom { .. }) => {
            let levels = [s.intervals, 2 * s.intervals, 4 * s.intervals];
            let profiles = levels
                .iter()
                .map(|&n| s.profile_at(n))
                .collect::<Result<Vec<_>, _>>()?;
            (profiles, Some(s.initial.clone()))
        }
        CheckSource::Scenario(s) => (subsampled_levels(&s.admitted_profile()?)?, None),
        CheckSource::Profile(p) => (subsampled_levels(p)?, None),
    };
    match run_suites(&profiles, initial.as_ref()) {
        Ok(report) => Ok(report),
        // a profile without a frame or flow speed fails every suite
        Err(err) => Ok(CheckReport {
            passed: false,
            suites: Vec::new(),
            duality: None,
            failures: vec![format!("geometry: {err}")],
        }),
    }
}

fn run_suites(
    profiles: &[RadialProfile],
    initial: Option<&InitialProfile>,
) -> Result<CheckReport, Error> {
    let levels: Vec<usize> = profiles.iter().map(RadialProfile::intervals).collect();
    let frames = profiles
        .iter()
        .map(frame)
        .collect::<Result<Vec<_>, _>>()?;

    let mut suites = Vec::new();
    suites.push(match initial {
        Some(init) => {
            let errors = profiles
                .iter()
                .zip(&frames)
                .map(|(p, f)| {
                    let exact = exact_frame(p, init)?;
                    Ok(max_abs(
                        &(0..f.len())
                            .flat_map(|i| {
                                [f.kappa_rad[i] - exact.kappa_rad[i], f.kappa_ang[i] - exact.kappa_ang[i]]
                            })
                            .collect::<Vec<_>>(),
                    ))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            suite("frame_oracle", &levels, errors)
        }
        None => {
            // self-convergence of H1 at the nodes shared with the coarser level
            let diffs: Vec<f64> = (0..frames.len() - 1)
                .map(|k| {
                    let (coarse, fine) = (&frames[k].h1, &frames[k + 1].h1);
                    let gaps: Vec<f64> =
                        coarse.iter().enumerate().map(|(i, h)| h - fine[2 * i]).collect();
                    max_abs(&gaps)
                })
                .collect();
            suite("frame_self_convergence", &levels[1..], diffs)
        }
    });

    let mink: Vec<(f64, f64)> = profiles
        .iter()
        .zip(&frames)
        .map(|(p, f)| minkowski_residuals(p, f))
        .collect();
    suites.push(suite("minkowski_k1", &levels, mink.iter().map(|m| m.0).collect()));
    suites.push(suite("minkowski_k2", &levels, mink.iter().map(|m| m.1).collect()));

    let residual = |f: &dyn Fn(&RadialProfile, &GeometryFrame) -> Result<Vec<f64>, Error>| {
        profiles
            .iter()
            .zip(&frames)
            .map(|(p, fr)| f(p, fr).map(|r| max_abs(&r)))
            .collect::<Result<Vec<f64>, Error>>()
    };
    suites.push(suite("ev_rho", &levels, residual(&residual_ev_rho)?));
    suites.push(suite("ev_u", &levels, residual(&residual_ev_u)?));
    let trace_errors = profiles
        .iter()
        .zip(&frames)
        .map(|(p, f)| residual_trace_h(p, f, TRACE_DT).map(|r| trace_h_norm(&r)))
        .collect::<Result<Vec<f64>, Error>>()?;
    suites.push(suite("trace_h", &levels, trace_errors));

    let convex = frames
        .iter()
        .all(|f| (0..f.len()).all(|i| f.kappa_rad[i].min(f.kappa_ang[i]) > KAPPA_FLOOR));
    let duality = if convex {
        Some(duality_suite(profiles, &levels)?)
    } else {
        None
    };

    let mut failures: Vec<String> = suites
        .iter()
        .filter(|s| !s.passed)
        .map(|s| s.name.clone())
        .collect();
    if duality.as_ref().is_some_and(|d| !d.passed) {
        failures.push("duality".into());
    }
    Ok(CheckReport {
        passed: failures.is_empty(),
        suites,
        duality,
        failures,
    })
}

fn subsampled_levels(profile: &RadialProfile) -> Result<Vec<RadialProfile>, ShellError> {
    let n = profile.intervals();
    if n % 4 != 0 || n / 4 < crate::axigraph::MIN_INTERVALS {
        return Err(ShellError::Scenario(format!(
            "subsampled refinement needs N divisible by 4 with N/4 >= {}, got N = {n}",
            crate::axigraph::MIN_INTERVALS
        )));
    }
    Ok(vec![
        subsample(profile, 4)?,
        subsample(profile, 2)?,
        profile.clone(),
    ])
}

/// Pointwise thresholds of the duality identities.
pub const DUAL_HYPERBOLOID_TOL: f64 = 1e-10;
pub const DUAL_SUPPORT_TOL: f64 = 1e-6;
pub const DUAL_SPEED_TOL: f64 = 1e-8;

fn duality_suite(profiles: &[RadialProfile], levels: &[usize]) -> Result<DualCheck, Error> {
    let reports = profiles
        .iter()
        .map(dual_check)
        .collect::<Result<Vec<_>, _>>()?;
    let finest = *reports.last().expect("at least one level");
    let series = |get: fn(&DualReport) -> f64| reports.iter().map(get).collect::<Vec<_>>();
    let checks: [(&str, fn(&DualReport) -> f64); 4] = [
        ("metric", |r| r.metric),
        ("radial_product", |r| r.radial_product),
        ("angular_product", |r| r.angular_product),
        ("involution", |r| r.involution),
    ];
    let mut orders = Vec::new();
    let mut passed = finest.hyperboloid < DUAL_HYPERBOLOID_TOL
        && finest.orthogonality < DUAL_HYPERBOLOID_TOL
        && finest.support < DUAL_SUPPORT_TOL
        && finest.dual_support < DUAL_SUPPORT_TOL
        && finest.speed_identity < DUAL_SPEED_TOL;
    for (name, get) in checks {
        let s = suite(name, levels, series(get));
        passed &= s.passed;
        orders.push((name.to_string(), s.order.unwrap_or(f64::INFINITY)));
    }
    Ok(DualCheck {
        passed,
        report: finest,
        orders,
    })
}

/// Duality identities of the scenario's initial profile.
pub fn cmd_dual_check(scenario: &Scenario) -> Result<DualReport, ShellError> {
    let profile = scenario.admitted_profile()?;
    Ok(dual_check(&profile)?)
}

/// Whether a dual report meets the pointwise thresholds.
pub fn dual_report_passes(r: &DualReport) -> bool {
    r.hyperboloid < DUAL_HYPERBOLOID_TOL
        && r.orthogonality < DUAL_HYPERBOLOID_TOL
        && r.support < DUAL_SUPPORT_TOL
        && r.dual_support < DUAL_SUPPORT_TOL
        && r.speed_identity < DUAL_SPEED_TOL
}

/// Loads a profile file for `check`.
pub fn load_profile(path: &Path) -> Result<RadialProfile, ShellError> {
    read_profile(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shell::config::parse_config;

    #[test]
    fn fitted_order_of_exact_power_law() {
        let levels = [100, 200, 400];
        let errors: Vec<f64> = levels.iter().map(|&n| 3.0 / (n as f64).powi(2)).collect();
        assert!((fitted_order(&levels, &errors).unwrap() - 2.0).abs() < 1e-12);
        assert!(fitted_order(&levels, &[1.0, 0.0, 1.0]).is_none());
    }

    #[test]
    fn slice_check_passes_with_negligible_residuals() {
        let s = parse_config("n = 2\nN = 50\ninitial = slice:0.8").unwrap();
        let report = cmd_check(CheckSource::Scenario(&s)).unwrap();
        assert!(report.passed, "{report:?}");
        for suite in &report.suites {
            assert!(suite.errors.last().unwrap() < &1e-10, "{suite:?}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&ShellError::Scenario("x".into())), EXIT_CONFIG);
        let guard = ShellError::Geometry(Error::StepUnderflow { dt: 0.0 });
        assert_eq!(exit_code(&guard), EXIT_GUARD);
    }

    #[test]
    fn slice_table_rows() {
        let model = WarpModel::de_sitter(2).unwrap();
        let rows = slice_table(&model, &[0.5, 1.0]).unwrap();
        let mut out = Vec::new();
        write_slice_table(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("r,area,volume,H1,W2\n"));
        assert_eq!(text.lines().count(), 3);
        assert!(slice_table(&model, &[0.0]).is_err());
    }
}
