//! `key = value` scenario files.
//!
//! ```text
//! # standard perturbed run
//! name = p2
//! n = 2
//! N = 200
//! initial = legendre:1.0:0.1:2
//! t_max = 40
//! ```
//!
//! `n`, `N` and `initial` are required; every other key falls back to the
//! flow defaults. Unknown or repeated keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::axigraph::{frame_with_floor, RadialProfile};
use crate::error::{Error, ShellError};
use crate::flowcore::FlowConfig;
use crate::spaceform::WarpModel;

use super::io::read_profile;

pub const DEFAULT_NAME: &str = "scenario";

#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    Slice { radius: f64 },
    Legendre { radius: f64, eps: f64, mode: usize },
    Custom { path: PathBuf },
}

impl InitialProfile {
    fn parse(value: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = value.split(':').map(str::trim).collect();
        let real = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{s}` is not a finite number"))
        };
        match parts.as_slice() {
            ["slice", r] => Ok(Self::Slice { radius: real(r)? }),
            ["legendre", r, eps, l] => Ok(Self::Legendre {
                radius: real(r)?,
                eps: real(eps)?,
                mode: l.parse().map_err(|_| format!("`{l}` is not a mode index"))?,
            }),
            ["custom", _, ..] => {
                let path = value.trim().split_once(':').map_or("", |(_, p)| p).trim();
                if path.is_empty() {
                    return Err("custom profile needs a path".into());
                }
                Ok(Self::Custom { path: path.into() })
            }
            _ => Err(format!(
                "expected slice:r, legendre:r:eps:l or custom:path, got `{value}`"
            )),
        }
    }

    fn canonical(&self) -> String {
        match self {
            Self::Slice { radius } => format!("slice:{radius:?}"),
            Self::Legendre { radius, eps, mode } => format!("legendre:{radius:?}:{eps:?}:{mode}"),
            Self::Custom { path } => format!("custom:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub intervals: usize,
    pub initial: InitialProfile,
    pub flow: FlowConfig,
}

impl Scenario {
    /// `ρ = 1 + 0.1 P2(cos ψ)` on `S²` with 200 intervals.
    pub fn standard() -> Self {
        Self {
            name: "standard".into(),
            dim: 2,
            intervals: 200,
            initial: InitialProfile::Legendre {
                radius: 1.0,
                eps: 0.1,
                mode: 2,
            },
            flow: FlowConfig::default(),
        }
    }

    pub fn model(&self) -> Result<WarpModel, ShellError> {
        WarpModel::de_sitter(self.dim).map_err(|e| ShellError::Scenario(e.to_string()))
    }

    /// Samples the initial profile on a grid with `intervals` intervals.
    /// Custom profiles are only available at their stored resolution.
    pub fn profile_at(&self, intervals: usize) -> Result<RadialProfile, ShellError> {
        let model = self.model()?;
        let invalid = |e: Error| ShellError::Scenario(e.to_string());
        match &self.initial {
            InitialProfile::Slice { radius } => {
                RadialProfile::slice(model, intervals, *radius).map_err(invalid)
            }
            InitialProfile::Legendre { radius, eps, mode } => {
                RadialProfile::legendre(model, intervals, *radius, *eps, *mode).map_err(invalid)
            }
            InitialProfile::Custom { path } => {
                let profile = read_profile(path)?;
                if profile.dim() != self.dim || profile.intervals() != intervals {
                    return Err(ShellError::Scenario(format!(
                        "{} holds n = {}, N = {}; scenario asks for n = {}, N = {}",
                        path.display(),
                        profile.dim(),
                        profile.intervals(),
                        self.dim,
                        intervals
                    )));
                }
                Ok(profile)
            }
        }
    }

    /// The initial profile after the spacelike and mean-convex gates.
    pub fn admitted_profile(&self) -> Result<RadialProfile, ShellError> {
        let profile = self.profile_at(self.intervals)?;
        admit(&profile, &self.flow)?;
        Ok(profile)
    }

    /// Canonical text form; parses back to an equal scenario.
    pub fn to_config_string(&self) -> String {
        let f = &self.flow;
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "n = {}", self.dim);
        let _ = writeln!(s, "N = {}", self.intervals);
        let _ = writeln!(s, "initial = {}", self.initial.canonical());
        let _ = writeln!(s, "cfl = {:?}", f.cfl);
        let _ = writeln!(s, "t_max = {:?}", f.t_max);
        let _ = writeln!(s, "osc_tol = {:?}", f.osc_tol);
        let _ = writeln!(s, "umbilic_tol = {:?}", f.umbilic_tol);
        let _ = writeln!(s, "eps_v = {:?}", f.eps_v);
        let _ = writeln!(s, "eps_H = {:?}", f.eps_h);
        let _ = writeln!(s, "record_every = {}", f.record_every);
        let _ = writeln!(s, "area_tol = {:?}", f.area_tol);
        s
    }
}

/// Spacelike and mean-convex gates on an initial profile.
pub fn admit(profile: &RadialProfile, flow: &FlowConfig) -> Result<(), ShellError> {
    let frame = frame_with_floor(profile, flow.eps_v)
        .map_err(|e| ShellError::Scenario(format!("initial profile rejected: {e}")))?;
    if frame.min_h1 <= flow.eps_h {
        let node = frame.h1.iter().position(|&h| h <= flow.eps_h).unwrap_or(0);
        let err = Error::MeanConvexityLost {
            node,
            h1: frame.h1[node],
        };
        return Err(ShellError::Scenario(format!("initial profile rejected: {err}")));
    }
    Ok(())
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

fn config_error(entry: &Entry, message: impl Into<String>) -> ShellError {
    ShellError::Config {
        line: entry.line,
        key: entry.key.to_string(),
        message: message.into(),
    }
}

fn parse_value<T: std::str::FromStr>(entry: &Entry) -> Result<T, ShellError> {
    entry
        .value
        .parse()
        .map_err(|_| config_error(entry, format!("cannot parse `{}`", entry.value)))
}

fn positive(entry: &Entry) -> Result<f64, ShellError> {
    let x: f64 = parse_value(entry)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(config_error(entry, format!("{} must be positive", entry.key)))
    }
}

const KEYS: [&str; 12] = [
    "name",
    "n",
    "N",
    "initial",
    "cfl",
    "t_max",
    "osc_tol",
    "umbilic_tol",
    "eps_v",
    "eps_H",
    "record_every",
    "area_tol",
];

/// Parses scenario text. `#` starts a comment; blank lines are ignored.
pub fn parse_config(text: &str) -> Result<Scenario, ShellError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ShellError::Config {
            line,
            key: content.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let entry = Entry {
            line,
            key: key.trim(),
            value: value.trim(),
        };
        if !KEYS.contains(&entry.key) {
            return Err(config_error(&entry, "unknown key"));
        }
        if let Some(previous) = entries.iter().find(|e| e.key == entry.key) {
            return Err(config_error(
                &entry,
                format!("duplicate key (first set on line {})", previous.line),
            ));
        }
        entries.push(entry);
    }

    let mut name = DEFAULT_NAME.to_string();
    let mut dim = None;
    let mut intervals = None;
    let mut initial = None;
    let mut flow = FlowConfig::default();
    for entry in &entries {
        match entry.key {
            "name" => {
                if entry.value.is_empty() || entry.value.contains(['/', '\\']) {
                    return Err(config_error(entry, "name must be a non-empty file name"));
                }
                name = entry.value.to_string();
            }
            "n" => {
                let n: usize = parse_value(entry)?;
                if n < 2 {
                    return Err(config_error(entry, "n must be at least 2"));
                }
                dim = Some(n);
            }
            "N" => {
                let big: usize = parse_value(entry)?;
                if big < crate::axigraph::MIN_INTERVALS {
                    return Err(config_error(
                        entry,
                        format!("N must be at least {}", crate::axigraph::MIN_INTERVALS),
                    ));
                }
                intervals = Some(big);
            }
            "initial" => {
                let parsed = InitialProfile::parse(entry.value)
                    .map_err(|message| config_error(entry, message))?;
                initial = Some(parsed);
            }
            "cfl" => {
                let cfl: f64 = parse_value(entry)?;
                if !(cfl > 0.0 && cfl <= 1.0) {
                    return Err(config_error(entry, "cfl out of (0,1]"));
                }
                flow.cfl = cfl;
            }
            "t_max" => flow.t_max = positive(entry)?,
            "osc_tol" => flow.osc_tol = positive(entry)?,
            "umbilic_tol" => flow.umbilic_tol = positive(entry)?,
            "eps_v" => flow.eps_v = positive(entry)?,
            "eps_H" => flow.eps_h = positive(entry)?,
            "area_tol" => flow.area_tol = positive(entry)?,
            "record_every" => {
                let k: usize = parse_value(entry)?;
                if k == 0 {
                    return Err(config_error(entry, "record_every must be at least 1"));
                }
                flow.record_every = k;
            }
            _ => unreachable!("keys are checked above"),
        }
    }
    let missing = |key: &str| ShellError::Config {
        line: 0,
        key: key.to_string(),
        message: "missing required key".into(),
    };
    Ok(Scenario {
        name,
        dim: dim.ok_or_else(|| missing("n"))?,
        intervals: intervals.ok_or_else(|| missing("N"))?,
        initial: initial.ok_or_else(|| missing("initial"))?,
        flow,
    })
}

/// Reads and parses a scenario file. Relative custom-profile paths are
/// resolved against the file's directory.
pub fn parse_config_file(path: &Path) -> Result<Scenario, ShellError> {
    let text = std::fs::read_to_string(path).map_err(|e| ShellError::io(path, e))?;
    let mut scenario = parse_config(&text)?;
    if let InitialProfile::Custom { path: profile } = &mut scenario.initial {
        if profile.is_relative() {
            if let Some(dir) = path.parent() {
                *profile = dir.join(&*profile);
            }
        }
    }
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse_config("n = 2\nN = 200\ninitial = legendre:1.0:0.1:2").unwrap();
        assert_eq!(
            s.initial,
            InitialProfile::Legendre {
                radius: 1.0,
                eps: 0.1,
                mode: 2
            }
        );
        assert_eq!(s.flow, FlowConfig::default());
        assert_eq!(s.name, DEFAULT_NAME);
    }

    #[test]
    fn cfl_out_of_range_is_rejected() {
        let err = parse_config("n = 2\nN = 64\ninitial = slice:1\ncfl = 1.5").unwrap_err();
        match err {
            ShellError::Config { line, key, message } => {
                assert_eq!((line, key.as_str()), (4, "cfl"));
                assert_eq!(message, "cfl out of (0,1]");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_duplicate_and_missing_keys() {
        let unknown = parse_config("n = 2\nsteps = 4").unwrap_err();
        assert!(matches!(unknown, ShellError::Config { line: 2, ref key, .. } if key == "steps"));
        let dup = parse_config("n = 2\nn = 3").unwrap_err();
        assert!(matches!(dup, ShellError::Config { line: 2, .. }));
        let missing = parse_config("n = 2\nN = 64").unwrap_err();
        assert!(matches!(missing, ShellError::Config { ref key, .. } if key == "initial"));
        let garbled = parse_config("n = 2\nN = 64\ninitial = ellipse:1").unwrap_err();
        assert!(matches!(garbled, ShellError::Config { line: 3, .. }));
    }

    #[test]
    fn comments_and_custom_paths() {
        let s = parse_config("# run\nn = 3 # dim\nN = 32\ninitial = custom:data/p.csv\n").unwrap();
        assert_eq!(
            s.initial,
            InitialProfile::Custom {
                path: "data/p.csv".into()
            }
        );
    }

    #[test]
    fn breached_initial_profile_is_rejected_before_running() {
        let s = parse_config("n = 2\nN = 64\ninitial = legendre:0.3:2.0:4").unwrap();
        assert!(matches!(s.admitted_profile(), Err(ShellError::Scenario(_))));
        let ok = parse_config("n = 2\nN = 64\ninitial = legendre:1.0:0.1:2").unwrap();
        assert!(ok.admitted_profile().is_ok());
    }

    fn scenario_strategy() -> impl Strategy<Value = Scenario> {
        let initial = prop_oneof![
            (0.01f64..5.0).prop_map(|radius| InitialProfile::Slice { radius }),
            (0.01f64..5.0, -1.0f64..1.0, 0usize..8)
                .prop_map(|(radius, eps, mode)| InitialProfile::Legendre { radius, eps, mode }),
            "[a-z]{1,8}(/[a-z]{1,8}){0,2}\\.csv"
                .prop_map(|p| InitialProfile::Custom { path: p.into() }),
        ];
        (
            "[a-z][a-z0-9_]{0,10}",
            2usize..7,
            16usize..2000,
            initial,
            1e-3f64..=1.0,
            1e-3f64..1e3,
            1e-12f64..1e-2,
            1usize..500,
        )
            .prop_map(|(name, dim, intervals, initial, cfl, t_max, tol, every)| Scenario {
                name,
                dim,
                intervals,
                initial,
                flow: FlowConfig {
                    cfl,
                    t_max,
                    osc_tol: tol,
                    umbilic_tol: tol * 0.37,
                    eps_v: tol * 3.1,
                    eps_h: tol * 0.9,
                    record_every: every,
                    area_tol: tol * 11.0,
                },
            })
    }

    proptest! {
        #[test]
        fn canonical_form_round_trips(s in scenario_strategy()) {
            let text = s.to_config_string();
            prop_assert_eq!(parse_config(&text).unwrap(), s);
        }
    }
}
