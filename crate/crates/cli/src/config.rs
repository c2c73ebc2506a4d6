//! Line-based run configuration.
//!
//! ```text
//! mode = sim-det          # optional; must agree with the subcommand
//! seed = 7
//!
//! [grid]
//! geometry = torus
//! nx = 64
//! nz = 64
//!
//! [time]
//! dt = 1e-3
//! T = 0.5
//! ```
//!
//! Every key belongs to a fixed schema. Unknown keys, duplicates, type
//! mismatches and missing required keys are reported with their line.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use ism_core::dynamics::Params;
use ism_core::field::{Exponent, Geometry, NormSpec};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: unknown section `[{section}]`")]
    UnknownSection { section: String, line: usize },
    #[error("duplicate key `{key}` on lines {first} and {second}")]
    Duplicate { key: String, first: usize, second: usize },
    #[error("line {line}: `{key}` expects {expected}, found `{found}`")]
    Type { key: String, line: usize, expected: &'static str, found: String },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("{}: `{key}` {message}", line.map(|l| format!("line {l}")).unwrap_or_else(|| "config".into()))]
    Invalid { key: String, line: Option<usize>, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    SimDet,
    SimSde,
    SimTransform,
    McHitting,
    McGlobal,
    Convergence,
    Diag,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::SimDet,
        Mode::SimSde,
        Mode::SimTransform,
        Mode::McHitting,
        Mode::McGlobal,
        Mode::Convergence,
        Mode::Diag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::SimDet => "sim-det",
            Mode::SimSde => "sim-sde",
            Mode::SimTransform => "sim-transform",
            Mode::McHitting => "mc-hitting",
            Mode::McGlobal => "mc-global",
            Mode::Convergence => "convergence",
            Mode::Diag => "diag",
        }
    }

    fn needs_time(self) -> bool {
        !matches!(self, Mode::Diag)
    }

    fn needs_grid(self) -> bool {
        !matches!(self, Mode::McHitting)
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<_> = Mode::ALL.iter().map(|m| m.name()).collect();
            format!("one of {}", names.join(", "))
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub geometry: Geometry,
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
    pub lz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseChoice {
    Off,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    pub kind: NoiseChoice,
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub horizon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorConfig {
    /// Truncation radius; also arms the `Z^{1,∞}` norm monitor.
    pub radius: Option<f64>,
    /// Barrier for `Λ`.
    pub r: Option<f64>,
    pub c_tilde: f64,
    pub norm: NormSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialConfig {
    Zero,
    Smooth { amplitude: f64 },
    Analytic { amplitude: f64 },
    Random { amplitude: f64, max_mode: u32, seed: u64 },
    Checkpoint { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub diagnostics: String,
    pub checkpoint: String,
    pub stopping: String,
    pub echo: String,
    pub summary: String,
    pub stride: usize,
    /// Points of a circular material loop; zero disables circulation.
    pub loop_points: usize,
    pub loop_radius: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub levels: usize,
    pub reference_refinements: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub threads: usize,
    pub grid: Option<GridConfig>,
    pub params: Params,
    pub noise: NoiseConfig,
    pub time: Option<TimeConfig>,
    pub monitor: MonitorConfig,
    pub initial: InitialConfig,
    pub output: OutputConfig,
    pub mc: McConfig,
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Int,
    Float,
    Text,
}

impl Kind {
    fn describe(self) -> &'static str {
        match self {
            Kind::Int => "a non-negative integer",
            Kind::Float => "a number",
            Kind::Text => "a word",
        }
    }
}

const SCHEMA: &[(&str, &str, Kind)] = &[
    ("", "mode", Kind::Text),
    ("", "seed", Kind::Int),
    ("", "threads", Kind::Int),
    ("grid", "geometry", Kind::Text),
    ("grid", "nx", Kind::Int),
    ("grid", "nz", Kind::Int),
    ("grid", "lx", Kind::Float),
    ("grid", "lz", Kind::Float),
    ("params", "f", Kind::Float),
    ("params", "g", Kind::Float),
    ("params", "theta0", Kind::Float),
    ("params", "s", Kind::Float),
    ("noise", "kind", Kind::Text),
    ("noise", "alpha", Kind::Float),
    ("time", "dt", Kind::Float),
    ("time", "T", Kind::Float),
    ("monitor", "R", Kind::Float),
    ("monitor", "r", Kind::Float),
    ("monitor", "C_tilde", Kind::Float),
    ("monitor", "k", Kind::Int),
    ("monitor", "p", Kind::Text),
    ("initial", "kind", Kind::Text),
    ("initial", "amplitude", Kind::Float),
    ("initial", "max_mode", Kind::Int),
    ("initial", "seed", Kind::Int),
    ("initial", "path", Kind::Text),
    ("output", "diagnostics", Kind::Text),
    ("output", "checkpoint", Kind::Text),
    ("output", "stopping", Kind::Text),
    ("output", "echo", Kind::Text),
    ("output", "summary", Kind::Text),
    ("output", "stride", Kind::Int),
    ("output", "loop_points", Kind::Int),
    ("output", "loop_radius", Kind::Float),
    ("mc", "n_paths", Kind::Int),
    ("mc", "levels", Kind::Int),
    ("mc", "reference_refinements", Kind::Int),
];

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

struct Entry {
    value: String,
    line: usize,
    kind: Kind,
}

struct Table {
    entries: BTreeMap<(String, String), Entry>,
}

impl Table {
    fn parse(text: &str) -> Result<Table, ConfigError> {
        let mut entries: BTreeMap<(String, String), Entry> = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax { line, message: "unterminated section header".into() })?
                    .trim();
                if !SCHEMA.iter().any(|(s, _, _)| *s == name) || name.is_empty() {
                    return Err(ConfigError::UnknownSection { section: name.to_string(), line });
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, message: "empty key".into() });
            }
            let kind = SCHEMA
                .iter()
                .find(|(s, k, _)| *s == section && *k == key)
                .map(|e| e.2)
                .ok_or_else(|| ConfigError::UnknownKey { key: qualified(&section, key), line })?;
            let slot = (section.clone(), key.to_string());
            if let Some(prev) = entries.get(&slot) {
                return Err(ConfigError::Duplicate { key: qualified(&section, key), first: prev.line, second: line });
            }
            let entry = Entry { value: value.to_string(), line, kind };
            entry.check(&section, key)?;
            entries.insert(slot, entry);
        }
        Ok(Table { entries })
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries.keys().any(|(s, _)| s == section)
    }

    fn int(&self, section: &str, key: &str) -> Option<(u64, usize)> {
        self.get(section, key).map(|e| (e.value.parse().expect("checked at parse"), e.line))
    }

    fn float(&self, section: &str, key: &str) -> Option<(f64, usize)> {
        self.get(section, key).map(|e| (e.value.parse().expect("checked at parse"), e.line))
    }

    fn text(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.get(section, key).map(|e| (e.value.as_str(), e.line))
    }
}

impl Entry {
    fn check(&self, section: &str, key: &str) -> Result<(), ConfigError> {
        let ok = match self.kind {
            Kind::Int => self.value.parse::<u64>().is_ok(),
            Kind::Float => self.value.parse::<f64>().map(|v| v.is_finite()).unwrap_or(false),
            Kind::Text => !self.value.is_empty() && !self.value.contains(char::is_whitespace),
        };
        if ok {
            Ok(())
        } else {
            Err(ConfigError::Type {
                key: qualified(section, key),
                line: self.line,
                expected: self.kind.describe(),
                found: self.value.clone(),
            })
        }
    }
}

fn invalid(section: &str, key: &str, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: qualified(section, key), line, message: message.into() }
}

fn positive(t: &Table, section: &str, key: &str, default: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match t.float(section, key) {
        Some((v, line)) if v <= 0.0 => Err(invalid(section, key, Some(line), format!("must be positive, got {v}"))),
        Some((v, _)) => Ok(Some(v)),
        None => Ok(default),
    }
}

fn count(t: &Table, section: &str, key: &str, default: usize, min: usize) -> Result<usize, ConfigError> {
    match t.int(section, key) {
        Some((v, line)) if (v as usize) < min => {
            Err(invalid(section, key, Some(line), format!("must be at least {min}, got {v}")))
        }
        Some((v, _)) => Ok(v as usize),
        None => Ok(default),
    }
}

fn power_of_two(t: &Table, key: &str) -> Result<usize, ConfigError> {
    let (n, line) = t.int("grid", key).ok_or_else(|| ConfigError::Missing { key: qualified("grid", key) })?;
    if n < 4 || !n.is_power_of_two() {
        return Err(invalid("grid", key, Some(line), format!("must be a power of two (at least 4), got {n}")));
    }
    Ok(n as usize)
}

fn parse_grid(t: &Table) -> Result<GridConfig, ConfigError> {
    let geometry = match t.text("grid", "geometry") {
        None | Some(("torus", _)) => Geometry::Torus,
        Some(("square", _)) => Geometry::FreeSlipSquare,
        Some((other, line)) => {
            return Err(ConfigError::Type {
                key: "grid.geometry".into(),
                line,
                expected: "`torus` or `square`",
                found: other.into(),
            })
        }
    };
    let nx = power_of_two(t, "nx")?;
    let nz = power_of_two(t, "nz")?;
    let side = match geometry {
        Geometry::Torus => 2.0 * PI,
        Geometry::FreeSlipSquare => PI,
    };
    let lx = positive(t, "grid", "lx", Some(side))?.expect("defaulted");
    let lz = positive(t, "grid", "lz", Some(side))?.expect("defaulted");
    Ok(GridConfig { geometry, nx, nz, lx, lz })
}

fn parse_norm(t: &Table) -> Result<NormSpec, ConfigError> {
    let (k, k_line) = t.int("monitor", "k").map(|(k, l)| (k, Some(l))).unwrap_or((1, None));
    let (p, p_line) = match t.text("monitor", "p") {
        None => (Exponent::Infinity, None),
        Some(("inf", line)) => (Exponent::Infinity, Some(line)),
        Some((s, line)) => match s.parse::<f64>() {
            Ok(v) if v.is_finite() => (Exponent::Finite(v), Some(line)),
            _ => {
                return Err(ConfigError::Type {
                    key: "monitor.p".into(),
                    line,
                    expected: "a number or `inf`",
                    found: s.into(),
                })
            }
        },
    };
    NormSpec::new(k as u32, p)
        .map_err(|e| invalid("monitor", "k", k_line.or(p_line), format!("and `p` are invalid: {e}")))
}

fn parse_initial(t: &Table) -> Result<InitialConfig, ConfigError> {
    let amplitude = t.float("initial", "amplitude").map(|v| v.0).unwrap_or(0.1);
    let kind = t.text("initial", "kind");
    let allowed: &[&str] = match kind.map(|k| k.0) {
        None | Some("smooth") | Some("analytic") => &["kind", "amplitude"],
        Some("zero") => &["kind"],
        Some("random") => &["kind", "amplitude", "max_mode", "seed"],
        Some("checkpoint") => &["kind", "path"],
        Some(other) => {
            return Err(ConfigError::Type {
                key: "initial.kind".into(),
                line: kind.expect("matched").1,
                expected: "one of zero, smooth, analytic, random, checkpoint",
                found: other.into(),
            })
        }
    };
    for ((s, k), e) in &t.entries {
        if s == "initial" && !allowed.contains(&k.as_str()) {
            return Err(invalid("initial", k, Some(e.line), "does not apply to this kind of initial data"));
        }
    }
    Ok(match kind.map(|k| k.0) {
        None | Some("smooth") => InitialConfig::Smooth { amplitude },
        Some("analytic") => InitialConfig::Analytic { amplitude },
        Some("zero") => InitialConfig::Zero,
        Some("random") => InitialConfig::Random {
            amplitude,
            max_mode: t.int("initial", "max_mode").map(|v| v.0 as u32).unwrap_or(4),
            seed: t.int("initial", "seed").map(|v| v.0).unwrap_or(0),
        },
        Some("checkpoint") => InitialConfig::Checkpoint {
            path: t
                .text("initial", "path")
                .map(|v| PathBuf::from(v.0))
                .ok_or_else(|| ConfigError::Missing { key: "initial.path".into() })?,
        },
        Some(_) => unreachable!(),
    })
}

/// Parses and validates a configuration, applying every default.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let t = Table::parse(text)?;
    let mode = match t.text("", "mode") {
        None => None,
        Some((s, line)) => Some(s.parse::<Mode>().map_err(|_| ConfigError::Type {
            key: "mode".into(),
            line,
            expected: "a command name such as `sim-det`",
            found: s.into(),
        })?),
    };
    let seed = t.int("", "seed").map(|v| v.0).unwrap_or(0);
    let threads = count(&t, "", "threads", 1, 1)?;

    let grid =
        if t.has_section("grid") || mode.map(Mode::needs_grid).unwrap_or(false) { Some(parse_grid(&t)?) } else { None };

    let param = |key: &str| t.float("params", key).map(|v| v.0).unwrap_or(1.0);
    let noise_kind = match t.text("noise", "kind") {
        None | Some(("off", _)) => NoiseChoice::Off,
        Some(("linear", _)) => NoiseChoice::Linear,
        Some((other, line)) => {
            return Err(ConfigError::Type {
                key: "noise.kind".into(),
                line,
                expected: "`off` or `linear`",
                found: other.into(),
            })
        }
    };
    let alpha = t.float("noise", "alpha").map(|v| v.0).unwrap_or(0.0);
    let noise = NoiseConfig { kind: noise_kind, alpha };
    let params = Params::new(param("f"), param("g"), param("theta0"), param("s"), alpha).map_err(|e| {
        let line = t.get("params", "theta0").map(|e| e.line);
        invalid("params", "theta0", line, e.to_string())
    })?;

    let time = if t.has_section("time") || mode.map(Mode::needs_time).unwrap_or(false) {
        let dt = positive(&t, "time", "dt", None)?.ok_or_else(|| ConfigError::Missing { key: "time.dt".into() })?;
        let horizon = positive(&t, "time", "T", None)?.ok_or_else(|| ConfigError::Missing { key: "time.T".into() })?;
        Some(TimeConfig { dt, horizon })
    } else {
        None
    };

    let r = match t.float("monitor", "r") {
        Some((v, line)) if v < 1.0 => {
            return Err(invalid("monitor", "r", Some(line), format!("must be at least 1, got {v}")))
        }
        other => other.map(|v| v.0),
    };
    let monitor = MonitorConfig {
        radius: positive(&t, "monitor", "R", None)?,
        r,
        c_tilde: positive(&t, "monitor", "C_tilde", Some(1.0))?.expect("defaulted"),
        norm: parse_norm(&t)?,
    };

    let text =
        |key: &str, default: &str| t.text("output", key).map(|v| v.0.to_string()).unwrap_or_else(|| default.into());
    let output = OutputConfig {
        diagnostics: text("diagnostics", "diagnostics.csv"),
        checkpoint: text("checkpoint", "final.ckpt"),
        stopping: text("stopping", "stopping.txt"),
        echo: text("echo", "effective.cfg"),
        summary: text("summary", "summary.csv"),
        stride: count(&t, "output", "stride", 1, 1)?,
        loop_points: match t.int("output", "loop_points") {
            Some((n, line)) if n != 0 && (n as usize) < 16 => {
                return Err(invalid("output", "loop_points", Some(line), format!("must be 0 or at least 16, got {n}")))
            }
            other => other.map(|v| v.0 as usize).unwrap_or(0),
        },
        loop_radius: positive(&t, "output", "loop_radius", None)?,
    };

    let mc = McConfig {
        n_paths: count(&t, "mc", "n_paths", 1000, 1)?,
        levels: count(&t, "mc", "levels", 4, 4)?,
        reference_refinements: count(&t, "mc", "reference_refinements", 0, 0)?,
    };

    Ok(RunConfig { mode, seed, threads, grid, params, noise, time, monitor, initial: parse_initial(&t)?, output, mc })
}

impl RunConfig {
    /// Checks the keys a mode cannot run without.
    pub fn require_for(&self, mode: Mode) -> Result<(), ConfigError> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(invalid("", "mode", None, format!("is `{m}` but the `{mode}` command was run")));
            }
        }
        if mode.needs_grid() && self.grid.is_none() {
            return Err(ConfigError::Missing { key: "grid.nx".into() });
        }
        if mode.needs_time() && self.time.is_none() {
            return Err(ConfigError::Missing { key: "time.dt".into() });
        }
        let needs_noise = matches!(mode, Mode::SimSde | Mode::SimTransform | Mode::McHitting | Mode::McGlobal);
        if needs_noise && self.noise.kind != NoiseChoice::Linear {
            return Err(invalid("noise", "kind", None, format!("must be `linear` for `{mode}`")));
        }
        if matches!(mode, Mode::McHitting | Mode::McGlobal) && self.monitor.r.is_none() {
            return Err(ConfigError::Missing { key: "monitor.r".into() });
        }
        if mode == Mode::McGlobal && self.params.s != 0.0 {
            return Err(invalid("params", "s", None, format!("must be 0 for `mc-global`, got {}", self.params.s)));
        }
        Ok(())
    }

    /// The effective configuration as parseable text.
    pub fn echo(&self, mode: Mode) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "mode = {mode}");
        let _ = writeln!(o, "seed = {}", self.seed);
        let _ = writeln!(o, "threads = {}", self.threads);
        if let Some(g) = &self.grid {
            let geometry = match g.geometry {
                Geometry::Torus => "torus",
                Geometry::FreeSlipSquare => "square",
            };
            let _ = writeln!(
                o,
                "\n[grid]\ngeometry = {geometry}\nnx = {}\nnz = {}\nlx = {}\nlz = {}",
                g.nx, g.nz, g.lx, g.lz
            );
        }
        let p = &self.params;
        let _ = writeln!(o, "\n[params]\nf = {}\ng = {}\ntheta0 = {}\ns = {}", p.f, p.g, p.theta0, p.s);
        let kind = match self.noise.kind {
            NoiseChoice::Off => "off",
            NoiseChoice::Linear => "linear",
        };
        let _ = writeln!(o, "\n[noise]\nkind = {kind}\nalpha = {}", self.noise.alpha);
        if let Some(tc) = &self.time {
            let _ = writeln!(o, "\n[time]\ndt = {}\nT = {}", tc.dt, tc.horizon);
        }
        let m = &self.monitor;
        let _ = writeln!(o, "\n[monitor]");
        if let Some(r) = m.radius {
            let _ = writeln!(o, "R = {r}");
        }
        if let Some(r) = m.r {
            let _ = writeln!(o, "r = {r}");
        }
        let p_text = match m.norm.p() {
            Exponent::Infinity => "inf".to_string(),
            Exponent::Finite(v) => v.to_string(),
        };
        let _ = writeln!(o, "C_tilde = {}\nk = {}\np = {p_text}", m.c_tilde, m.norm.k());
        let _ = writeln!(o, "\n[initial]");
        let _ = match &self.initial {
            InitialConfig::Zero => writeln!(o, "kind = zero"),
            InitialConfig::Smooth { amplitude } => writeln!(o, "kind = smooth\namplitude = {amplitude}"),
            InitialConfig::Analytic { amplitude } => writeln!(o, "kind = analytic\namplitude = {amplitude}"),
            InitialConfig::Random { amplitude, max_mode, seed } => {
                writeln!(o, "kind = random\namplitude = {amplitude}\nmax_mode = {max_mode}\nseed = {seed}")
            }
            InitialConfig::Checkpoint { path } => writeln!(o, "kind = checkpoint\npath = {}", path.display()),
        };
        let out = &self.output;
        let _ = writeln!(
            o,
            "\n[output]\ndiagnostics = {}\ncheckpoint = {}\nstopping = {}\necho = {}\nsummary = {}\nstride = {}\nloop_points = {}",
            out.diagnostics, out.checkpoint, out.stopping, out.echo, out.summary, out.stride, out.loop_points
        );
        if let Some(r) = out.loop_radius {
            let _ = writeln!(o, "loop_radius = {r}");
        }
        let _ = writeln!(
            o,
            "\n[mc]\nn_paths = {}\nlevels = {}\nreference_refinements = {}",
            self.mc.n_paths, self.mc.levels, self.mc.reference_refinements
        );
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nnx = 16\nnz = 16\n[time]\ndt = 0.01\nT = 0.1\n";

    #[test]
    fn minimal_config_gets_unit_parameters() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!((c.params.f, c.params.g, c.params.theta0, c.params.s), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(c.params.alpha, 0.0);
        assert_eq!(c.grid.as_ref().unwrap().geometry, Geometry::Torus);
        assert_eq!(c.time, Some(TimeConfig { dt: 0.01, horizon: 0.1 }));
        assert_eq!(c.monitor.norm, NormSpec::W1_INF);
        c.require_for(Mode::SimDet).unwrap();
    }

    #[test]
    fn non_power_of_two_is_rejected() {
        let err = parse_config("[grid]\nnx = 7\nnz = 16\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("grid.nx") && msg.contains("power of two") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn duplicate_cites_both_lines() {
        let err = parse_config("[grid]\nnx = 16\nnz = 16\n\nnx = 32\n").unwrap_err();
        assert_eq!(err, ConfigError::Duplicate { key: "grid.nx".into(), first: 2, second: 5 });
        assert!(err.to_string().contains("lines 2 and 5"));
    }

    #[test]
    fn unknown_key_and_section() {
        assert_eq!(
            parse_config("[grid]\nny = 4\n").unwrap_err(),
            ConfigError::UnknownKey { key: "grid.ny".into(), line: 2 }
        );
        assert_eq!(
            parse_config("# hi\n[gird]\n").unwrap_err(),
            ConfigError::UnknownSection { section: "gird".into(), line: 2 }
        );
    }

    #[test]
    fn type_mismatch_names_key_and_line() {
        let err = parse_config("[time]\ndt = fast\n").unwrap_err();
        assert!(matches!(err, ConfigError::Type { ref key, line: 2, .. } if key == "time.dt"));
    }

    #[test]
    fn missing_required_key() {
        let err = parse_config("mode = sim-det\n[grid]\nnx = 16\nnz = 16\n").unwrap_err();
        assert_eq!(err, ConfigError::Missing { key: "time.dt".into() });
        let err = parse_config("[grid]\nnx = 16\n").unwrap_err();
        assert_eq!(err, ConfigError::Missing { key: "grid.nz".into() });
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\n\n[grid]   # trailing\nnx = 16 # sixteen\nnz = 8\n[time]\ndt=0.5\nT=1\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.grid.unwrap().nz, 8);
    }

    #[test]
    fn mc_global_refuses_nonzero_s() {
        let text = "[grid]\nnx = 8\nnz = 8\n[time]\ndt = 0.01\nT = 0.1\n[noise]\nkind = linear\nalpha = 40\n[monitor]\nr = 2\n";
        let c = parse_config(text).unwrap();
        let err = c.require_for(Mode::McGlobal).unwrap_err();
        assert!(err.to_string().contains("params.s"));
        let c = parse_config(&format!("{text}[params]\ns = 0\n")).unwrap();
        c.require_for(Mode::McGlobal).unwrap();
    }

    #[test]
    fn mode_must_match_command() {
        let c = parse_config(&format!("mode = diag\n{MINIMAL}")).unwrap();
        assert!(c.require_for(Mode::SimDet).is_err());
        c.require_for(Mode::Diag).unwrap();
    }

    #[test]
    fn echo_reparses_to_same_config() {
        let text = "seed = 9\n[grid]\ngeometry = square\nnx = 16\nnz = 32\n[time]\ndt = 0.001\nT = 0.25\n\
                    [noise]\nkind = linear\nalpha = 0.5\n[monitor]\nR = 3\nr = 2\np = 2\nk = 2\n\
                    [initial]\nkind = random\nmax_mode = 3\nseed = 4\n[output]\nloop_points = 64\nloop_radius = 0.4\n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.echo(Mode::SimSde)).unwrap();
        assert_eq!(again.mode, Some(Mode::SimSde));
        assert_eq!(RunConfig { mode: None, ..again }, c);
    }

    #[test]
    fn initial_keys_are_checked_against_kind() {
        let err = parse_config("[initial]\nkind = zero\namplitude = 2\n").unwrap_err();
        assert!(err.to_string().contains("initial.amplitude"));
    }
}
