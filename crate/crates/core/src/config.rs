//! Experiment configuration: a flat key-value text format with `[section]`
//! headers, strict parsing (unknown sections, unknown keys and duplicate
//! keys are rejected, every message names the offending key), and the
//! typed `RunConfig` the drivers consume.
//!
//! ```text
//! [domain]
//! x_min = -4.0
//! x_max = 4.0
//! y_min = -4.0
//! y_max = 4.0
//!
//! [grid]
//! n1 = 32
//! n2 = 32
//!
//! [anisotropy]
//! kind = quadratic        # isotropic | quadratic | regularized_abs
//! g11 = 2.0
//! g12 = 0.0
//! g22 = 1.0
//!
//! [bc]
//! kind = dirichlet        # dirichlet | neumann
//! dirichlet_preset = mms_zeta   # zero | mms_zeta
//!
//! [initial]
//! preset = mms_zeta       # zero | sine_radial | mms_zeta | csv
//!
//! [time]
//! t_end = 0.01
//! tolerance = 1e-7
//! snapshot_count = 10
//!
//! [mms]
//! r = 4.0
//! n = 2
//! sigma = 1.0
//! tau_levels = 10
//! meshes = 16,32,64
//!
//! [output]
//! directory = out
//! formats = csv
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::anisotropy::SurfaceEnergy;
use crate::error::{Error, Result};
use crate::mms::ZetaParams;

/// Environment variable overriding `[output] directory`.
pub const OUTPUT_DIR_ENV: &str = "WILLMORE_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletPreset {
    Zero,
    /// `g1 = zeta` sampled per time, `g2 = 0`.
    MmsZeta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Zero,
    /// `sin(3 pi sqrt(x^2 + y^2))`.
    SineRadial,
    /// `zeta(., 0)`; also attaches the manufactured forcing to the run.
    MmsZeta,
    /// Re-ingest the `u` column of a snapshot CSV.
    Csv(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSpec {
    pub t_end: f64,
    pub tolerance: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub snapshot_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsSpec {
    pub params: ZetaParams,
    pub tau_levels: usize,
    pub meshes: Vec<usize>,
}

impl Default for MmsSpec {
    fn default() -> MmsSpec {
        MmsSpec {
            params: ZetaParams::default(),
            tau_levels: 10,
            meshes: vec![16, 32, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub csv: bool,
    pub vtk: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Option<DomainSpec>,
    pub grid: Option<GridSpec>,
    pub energy: SurfaceEnergy,
    pub bc_kind: BcKind,
    pub dirichlet_preset: DirichletPreset,
    pub initial: InitialSpec,
    pub time: Option<TimeSpec>,
    pub snapshot_times: Option<Vec<f64>>,
    pub mms: MmsSpec,
    pub output: OutputSpec,
    pub wulff_samples: usize,
}

impl std::str::FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<RunConfig> {
        RunConfig::parse_str(text)
    }
}

impl RunConfig {
    /// Parse a config file, applying the output directory override from
    /// the environment if set.
    pub fn from_path(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = RunConfig::parse_str(&text)?;
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            cfg.output.directory = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut sections = parse_sections(text)?;

        let domain = match sections.remove("domain") {
            Some(raw) => {
                let mut s = Section::new("domain", raw);
                let d = DomainSpec {
                    x_min: s.take_f64("x_min")?,
                    x_max: s.take_f64("x_max")?,
                    y_min: s.take_f64("y_min")?,
                    y_max: s.take_f64("y_max")?,
                };
                s.finish()?;
                if !(d.x_max > d.x_min) {
                    return Err(Error::Config("[domain] x_max must exceed x_min".into()));
                }
                if !(d.y_max > d.y_min) {
                    return Err(Error::Config("[domain] y_max must exceed y_min".into()));
                }
                Some(d)
            }
            None => None,
        };

        let grid = match sections.remove("grid") {
            Some(raw) => {
                let mut s = Section::new("grid", raw);
                let g = GridSpec {
                    n1: s.take_usize("n1")?,
                    n2: s.take_usize("n2")?,
                };
                s.finish()?;
                if g.n1 < 2 || g.n2 < 2 {
                    return Err(Error::Config(format!(
                        "[grid] n1 and n2 must be at least 2, got {} and {}",
                        g.n1, g.n2
                    )));
                }
                Some(g)
            }
            None => None,
        };

        let energy = {
            let raw = sections
                .remove("anisotropy")
                .ok_or_else(|| Error::Config("missing [anisotropy] section".into()))?;
            let mut s = Section::new("anisotropy", raw);
            let kind = s.take_str("kind")?;
            let energy = match kind.as_str() {
                "isotropic" => SurfaceEnergy::isotropic(),
                "quadratic" => {
                    let g11 = s.take_f64("g11")?;
                    let g12 = s.take_f64("g12")?;
                    let g22 = s.take_f64("g22")?;
                    SurfaceEnergy::quadratic_form(g11, g12, g22).map_err(|e| {
                        Error::Config(format!("[anisotropy] g11/g12/g22: {e}"))
                    })?
                }
                "regularized_abs" => {
                    let eps = s.take_f64("eps_abs")?;
                    SurfaceEnergy::regularized_abs(eps)
                        .map_err(|e| Error::Config(format!("[anisotropy] eps_abs: {e}")))?
                }
                other => {
                    return Err(Error::Config(format!(
                        "[anisotropy] kind must be isotropic, quadratic or regularized_abs, got '{other}'"
                    )))
                }
            };
            s.finish()?;
            energy
        };

        let (bc_kind, dirichlet_preset) = match sections.remove("bc") {
            Some(raw) => {
                let mut s = Section::new("bc", raw);
                let kind = match s.take_str("kind")?.as_str() {
                    "dirichlet" => BcKind::Dirichlet,
                    "neumann" => BcKind::Neumann,
                    other => {
                        return Err(Error::Config(format!(
                            "[bc] kind must be dirichlet or neumann, got '{other}'"
                        )))
                    }
                };
                let preset = match s.take_str_opt("dirichlet_preset")? {
                    None => DirichletPreset::Zero,
                    Some(p) => match p.as_str() {
                        "zero" => DirichletPreset::Zero,
                        "mms_zeta" => DirichletPreset::MmsZeta,
                        other => {
                            return Err(Error::Config(format!(
                                "[bc] dirichlet_preset must be zero or mms_zeta, got '{other}'"
                            )))
                        }
                    },
                };
                s.finish()?;
                (kind, preset)
            }
            None => (BcKind::Dirichlet, DirichletPreset::Zero),
        };

        let initial = match sections.remove("initial") {
            Some(raw) => {
                let mut s = Section::new("initial", raw);
                let preset = s.take_str("preset")?;
                let initial = match preset.as_str() {
                    "zero" => InitialSpec::Zero,
                    "sine_radial" => InitialSpec::SineRadial,
                    "mms_zeta" => InitialSpec::MmsZeta,
                    "csv" => InitialSpec::Csv(PathBuf::from(s.take_str("csv_path")?)),
                    other => {
                        return Err(Error::Config(format!(
                            "[initial] preset must be zero, sine_radial, mms_zeta or csv, got '{other}'"
                        )))
                    }
                };
                s.finish()?;
                initial
            }
            None => InitialSpec::Zero,
        };

        let (time, snapshot_times) = match sections.remove("time") {
            Some(raw) => {
                let mut s = Section::new("time", raw);
                let t_end = s.take_f64("t_end")?;
                let tolerance = s.take_f64("tolerance")?;
                let dt_init = s.take_f64_opt("dt_init")?.unwrap_or(1e-9);
                let dt_min = s.take_f64_opt("dt_min")?.unwrap_or(1e-16);
                let dt_max = s.take_f64_opt("dt_max")?.unwrap_or(t_end);
                let snapshot_count = s.take_usize_opt("snapshot_count")?.unwrap_or(10);
                let snapshot_times = match s.take_str_opt("snapshot_times")? {
                    Some(list) => Some(parse_f64_list("time", "snapshot_times", &list)?),
                    None => None,
                };
                s.finish()?;
                if !(t_end > 0.0) {
                    return Err(Error::Config(format!(
                        "[time] t_end must be positive, got {t_end}"
                    )));
                }
                if !(tolerance > 0.0) {
                    return Err(Error::Config(format!(
                        "[time] tolerance must be positive, got {tolerance}"
                    )));
                }
                if !(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max) {
                    return Err(Error::Config(format!(
                        "[time] need 0 < dt_min <= dt_init <= dt_max, got {dt_min} / {dt_init} / {dt_max}"
                    )));
                }
                if let Some(times) = &snapshot_times {
                    for pair in times.windows(2) {
                        if pair[1] <= pair[0] {
                            return Err(Error::Config(
                                "[time] snapshot_times must be strictly increasing".into(),
                            ));
                        }
                    }
                    if times.iter().any(|&t| t < 0.0 || t > t_end) {
                        return Err(Error::Config(
                            "[time] snapshot_times must lie within [0, t_end]".into(),
                        ));
                    }
                }
                (
                    Some(TimeSpec {
                        t_end,
                        tolerance,
                        dt_init,
                        dt_min,
                        dt_max,
                        snapshot_count,
                    }),
                    snapshot_times,
                )
            }
            None => (None, None),
        };

        let mms = match sections.remove("mms") {
            Some(raw) => {
                let mut s = Section::new("mms", raw);
                let r = s.take_f64_opt("r")?.unwrap_or(4.0);
                let n = s.take_usize_opt("n")?.unwrap_or(2);
                let sigma = s.take_f64_opt("sigma")?.unwrap_or(1.0);
                let tau_levels = s.take_usize_opt("tau_levels")?.unwrap_or(10);
                let meshes = match s.take_str_opt("meshes")? {
                    Some(list) => {
                        let vals = parse_f64_list("mms", "meshes", &list)?;
                        let mut meshes = Vec::with_capacity(vals.len());
                        for v in vals {
                            if v < 2.0 || v.fract() != 0.0 {
                                return Err(Error::Config(format!(
                                    "[mms] meshes entries must be integers >= 2, got {v}"
                                )));
                            }
                            meshes.push(v as usize);
                        }
                        meshes
                    }
                    None => vec![16, 32, 64],
                };
                s.finish()?;
                let params = ZetaParams::new(r, n as u32, sigma)
                    .map_err(|e| Error::Config(format!("[mms] r/n/sigma: {e}")))?;
                if tau_levels == 0 {
                    return Err(Error::Config("[mms] tau_levels must be positive".into()));
                }
                if meshes.is_empty() {
                    return Err(Error::Config("[mms] meshes must not be empty".into()));
                }
                MmsSpec {
                    params,
                    tau_levels,
                    meshes,
                }
            }
            None => MmsSpec::default(),
        };

        let output = {
            let raw = sections
                .remove("output")
                .ok_or_else(|| Error::Config("missing [output] section".into()))?;
            let mut s = Section::new("output", raw);
            let directory = PathBuf::from(s.take_str("directory")?);
            let formats = s.take_str_opt("formats")?.unwrap_or_else(|| "csv".into());
            s.finish()?;
            let mut csv = false;
            let mut vtk = false;
            for f in formats.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                match f {
                    "csv" => csv = true,
                    "vtk" => vtk = true,
                    other => {
                        return Err(Error::Config(format!(
                            "[output] formats entries must be csv or vtk, got '{other}'"
                        )))
                    }
                }
            }
            if !csv && !vtk {
                return Err(Error::Config("[output] formats selected no format".into()));
            }
            OutputSpec {
                directory,
                csv,
                vtk,
            }
        };

        let wulff_samples = match sections.remove("wulff") {
            Some(raw) => {
                let mut s = Section::new("wulff", raw);
                let n = s.take_usize_opt("n_samples")?.unwrap_or(360);
                s.finish()?;
                if n < 8 {
                    return Err(Error::Config(format!(
                        "[wulff] n_samples must be at least 8, got {n}"
                    )));
                }
                n
            }
            None => 360,
        };

        if let Some(name) = sections.keys().next() {
            return Err(Error::Config(format!("unknown section [{name}]")));
        }

        Ok(RunConfig {
            domain,
            grid,
            energy,
            bc_kind,
            dirichlet_preset,
            initial,
            time,
            snapshot_times,
            mms,
            output,
            wulff_samples,
        })
    }

    pub fn require_domain(&self) -> Result<DomainSpec> {
        self.domain
            .ok_or_else(|| Error::Config("missing [domain] section".into()))
    }

    pub fn require_grid(&self) -> Result<GridSpec> {
        self.grid
            .ok_or_else(|| Error::Config("missing [grid] section".into()))
    }

    pub fn require_time(&self) -> Result<TimeSpec> {
        self.time
            .ok_or_else(|| Error::Config("missing [time] section".into()))
    }
}

type RawSection = BTreeMap<String, String>;

fn parse_sections(text: &str) -> Result<BTreeMap<String, RawSection>> {
    let mut sections: BTreeMap<String, RawSection> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find(['#', ';']) {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if sections.contains_key(&name) {
                return Err(Error::Config(format!(
                    "line {}: duplicate section [{name}]",
                    lineno + 1
                )));
            }
            sections.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        let section = current.as_ref().ok_or_else(|| {
            Error::Config(format!("line {}: key outside any [section]", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let entries = sections.get_mut(section).expect("section exists");
        if entries.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key '{key}' in [{section}]",
                lineno + 1
            )));
        }
    }
    Ok(sections)
}

fn parse_f64_list(section: &str, key: &str, list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("[{section}] {key}: '{v}' is not a number")))
        })
        .collect()
}

/// Tracks which keys a section handed out; leftovers are unknown keys.
struct Section {
    name: &'static str,
    entries: RawSection,
}

impl Section {
    fn new(name: &'static str, entries: RawSection) -> Section {
        Section { name, entries }
    }

    fn take_str(&mut self, key: &str) -> Result<String> {
        self.entries
            .remove(key)
            .ok_or_else(|| Error::Config(format!("[{}] missing required key '{key}'", self.name)))
    }

    fn take_str_opt(&mut self, key: &str) -> Result<Option<String>> {
        Ok(self.entries.remove(key))
    }

    fn take_f64(&mut self, key: &str) -> Result<f64> {
        let v = self.take_str(key)?;
        v.parse::<f64>()
            .map_err(|_| Error::Config(format!("[{}] {key}: '{v}' is not a number", self.name)))
    }

    fn take_f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| {
                Error::Config(format!("[{}] {key}: '{v}' is not a number", self.name))
            }),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<usize> {
        let v = self.take_str(key)?;
        v.parse::<usize>().map_err(|_| {
            Error::Config(format!(
                "[{}] {key}: '{v}' is not a non-negative integer",
                self.name
            ))
        })
    }

    fn take_usize_opt(&mut self, key: &str) -> Result<Option<usize>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|_| {
                Error::Config(format!(
                    "[{}] {key}: '{v}' is not a non-negative integer",
                    self.name
                ))
            }),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.entries.keys().next() {
            return Err(Error::Config(format!(
                "[{}] unknown key '{key}'",
                self.name
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "
[domain]
x_min = -2.0
x_max = 2.0
y_min = -2.0
y_max = 2.0

[grid]
n1 = 10
n2 = 12

[anisotropy]
kind = quadratic
g11 = 8.0
g12 = 0.0
g22 = 1.0

[bc]
kind = neumann

[initial]
preset = sine_radial

[time]
t_end = 1e-3
tolerance = 1e-6
snapshot_times = 0, 1.6e-5, 1.28e-4

[output]
directory = out
formats = csv,vtk
";

    #[test]
    fn parses_a_full_config() {
        let cfg = RunConfig::parse_str(BASE).unwrap();
        assert_eq!(cfg.grid.unwrap().n2, 12);
        assert_eq!(cfg.bc_kind, BcKind::Neumann);
        assert_eq!(cfg.initial, InitialSpec::SineRadial);
        assert_eq!(
            cfg.snapshot_times.as_deref(),
            Some(&[0.0, 1.6e-5, 1.28e-4][..])
        );
        assert!(cfg.output.csv && cfg.output.vtk);
        assert_eq!(cfg.wulff_samples, 360);
        assert_eq!(cfg.mms.meshes, vec![16, 32, 64]);
        match cfg.energy {
            SurfaceEnergy::QuadraticForm { g11, .. } => assert_eq!(g11, 8.0),
            other => panic!("unexpected energy {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let with_bad_key = BASE.replace("n1 = 10", "n1 = 10\nn3 = 4");
        let err = RunConfig::parse_str(&with_bad_key).unwrap_err().to_string();
        assert!(err.contains("unknown key 'n3'"), "{err}");

        let with_bad_section = format!("{BASE}\n[solver]\nx = 1\n");
        let err = RunConfig::parse_str(&with_bad_section)
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown section [solver]"), "{err}");
    }

    #[test]
    fn rejects_duplicates_and_bad_values() {
        let dup = BASE.replace("n1 = 10", "n1 = 10\nn1 = 11");
        assert!(RunConfig::parse_str(&dup)
            .unwrap_err()
            .to_string()
            .contains("duplicate key 'n1'"));

        let bad = BASE.replace("t_end = 1e-3", "t_end = fast");
        let err = RunConfig::parse_str(&bad).unwrap_err().to_string();
        assert!(err.contains("[time] t_end"), "{err}");

        let neg = BASE.replace("tolerance = 1e-6", "tolerance = -1.0");
        assert!(RunConfig::parse_str(&neg).is_err());

        let small = BASE.replace("n1 = 10", "n1 = 1");
        assert!(RunConfig::parse_str(&small).is_err());

        let not_spd = BASE.replace("g11 = 8.0", "g11 = -8.0");
        let err = RunConfig::parse_str(&not_spd).unwrap_err().to_string();
        assert!(err.contains("[anisotropy]"), "{err}");

        let bad_times = BASE.replace(
            "snapshot_times = 0, 1.6e-5, 1.28e-4",
            "snapshot_times = 0, 2e-3",
        );
        let err = RunConfig::parse_str(&bad_times).unwrap_err().to_string();
        assert!(err.contains("snapshot_times"), "{err}");
    }

    #[test]
    fn missing_required_sections_are_named() {
        let err = RunConfig::parse_str("[output]\ndirectory = out\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("[anisotropy]"), "{err}");
    }

    #[test]
    fn csv_initial_requires_path() {
        let cfg = BASE.replace("preset = sine_radial", "preset = csv\ncsv_path = state.csv");
        let parsed = RunConfig::parse_str(&cfg).unwrap();
        assert_eq!(parsed.initial, InitialSpec::Csv(PathBuf::from("state.csv")));

        let missing = BASE.replace("preset = sine_radial", "preset = csv");
        let err = RunConfig::parse_str(&missing).unwrap_err().to_string();
        assert!(err.contains("csv_path"), "{err}");
    }

    #[test]
    fn mms_defaults_apply() {
        let cfg = RunConfig::parse_str(BASE).unwrap();
        assert_eq!(cfg.mms.params.r(), 4.0);
        assert_eq!(cfg.mms.params.n(), 2);
        assert_eq!(cfg.mms.tau_levels, 10);
    }
}
