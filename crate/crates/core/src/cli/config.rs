use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryPatch, Domain, P2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Exact,
    Asymptotics,
    SolveP,
    SweepP,
    EigensetSearch,
    HoleSearch,
    ShapeDerivative,
    FdCheck,
}

const DOMAIN_KEYS: &[&str] = &["domain", "N", "R", "r", "vertices", "delta", "eta", "kappa", "patch_radius"];
const SOLVER_KEYS: &[&str] = &["h", "tau", "max_iterations", "tolerance", "window", "memory"];
const SEARCH_KEYS: &[&str] = &[
    "h", "family", "iterations", "chains", "t_start", "t_end", "cap_directions", "cap_levels",
];
const HOLE_KEYS: &[&str] = &["hole_radius", "hole_center"];
const FIELD_KEYS: &[&str] = &[
    "field", "translation", "poly_x", "poly_y", "set", "cap_direction", "cap_offset", "lambda1",
    "fd_delta",
];

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Exact,
        Command::Asymptotics,
        Command::SolveP,
        Command::SweepP,
        Command::EigensetSearch,
        Command::HoleSearch,
        Command::ShapeDerivative,
        Command::FdCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Asymptotics => "asymptotics",
            Command::SolveP => "solve-p",
            Command::SweepP => "sweep-p",
            Command::EigensetSearch => "eigenset-search",
            Command::HoleSearch => "hole-search",
            Command::ShapeDerivative => "shape-derivative",
            Command::FdCheck => "fd-check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Keys accepted by this command, beyond `command`, `seed` and `out`.
    fn keys(self) -> Vec<&'static str> {
        let mut k: Vec<&'static str> = DOMAIN_KEYS.to_vec();
        match self {
            Command::Exact => {}
            Command::Asymptotics => k.push("eps"),
            Command::SolveP => {
                k.push("p");
                k.extend(SOLVER_KEYS);
                k.extend(HOLE_KEYS);
            }
            Command::SweepP => {
                k.push("schedule");
                k.extend(SOLVER_KEYS);
            }
            Command::EigensetSearch => {
                k.extend(SEARCH_KEYS);
                k.extend(HOLE_KEYS);
                k.push("trapped_volume");
            }
            Command::HoleSearch => {
                k.extend(SEARCH_KEYS);
                k.extend(["good_point", "hole_radius", "alpha", "alpha_fraction"]);
            }
            Command::ShapeDerivative | Command::FdCheck => k.extend(FIELD_KEYS),
        }
        k
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A configuration error, with the 1-based line it refers to when known.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

/// Parsed run configuration. Values are kept as written and type-checked
/// at parse time, so the echo in result records matches the input.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub out: Option<String>,
    pub params: BTreeMap<String, String>,
    #[serde(skip)]
    lines: BTreeMap<String, usize>,
}

impl PartialEq for RunConfig {
    fn eq(&self, other: &Self) -> bool {
        self.command == other.command
            && self.seed == other.seed
            && self.out == other.out
            && self.params == other.params
    }
}

impl RunConfig {
    /// Parses `key=value` lines. `#` starts a comment; `[name]` opens a
    /// section whose keys apply only when `name` is the selected command.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut global: Vec<(usize, String, String)> = Vec::new();
        let mut sections: Vec<(Command, usize, String, String)> = Vec::new();
        let mut section: Option<Command> = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let c = Command::parse(name.trim())
                    .ok_or_else(|| err(Some(ln), format!("unknown section [{}]", name.trim())))?;
                section = Some(c);
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(Some(ln), format!("expected key=value, got {line:?}")))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() {
                return Err(err(Some(ln), "empty key"));
            }
            match section {
                Some(c) => sections.push((c, ln, k, v)),
                None => global.push((ln, k, v)),
            }
        }
        let (cmd_line, cmd) = global
            .iter()
            .find(|(_, k, _)| k == "command")
            .map(|(l, _, v)| (*l, v.clone()))
            .ok_or_else(|| err(None, "missing command"))?;
        let command = Command::parse(&cmd)
            .ok_or_else(|| err(Some(cmd_line), format!("unknown command {cmd:?}")))?;

        let mut cfg = RunConfig {
            command,
            seed: 0,
            out: None,
            params: BTreeMap::new(),
            lines: BTreeMap::new(),
        };
        // Keys in other commands' sections must still be valid there.
        for (c, ln, k, _) in &sections {
            if !c.keys().contains(&k.as_str()) {
                return Err(err(Some(*ln), format!("unknown key {k:?} for {c}")));
            }
        }
        let entries = global
            .into_iter()
            .chain(sections.into_iter().filter(|s| s.0 == command).map(|(_, l, k, v)| (l, k, v)));
        let allowed = command.keys();
        for (ln, k, v) in entries {
            if cfg.lines.contains_key(&k) {
                return Err(err(Some(ln), format!("duplicate key {k:?}")));
            }
            match k.as_str() {
                "command" => {}
                "seed" => {
                    cfg.seed = v
                        .parse()
                        .map_err(|_| err(Some(ln), format!("seed must be a non-negative integer, got {v:?}")))?
                }
                "out" => cfg.out = Some(v.clone()),
                _ if allowed.contains(&k.as_str()) => {
                    cfg.params.insert(k.clone(), v.clone());
                }
                _ => return Err(err(Some(ln), format!("unknown key {k:?} for {command}"))),
            }
            cfg.lines.insert(k, ln);
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }

    pub fn has(&self, key: &str) -> bool {
        self.params.contains_key(key)
    }

    /// Optional typed value.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                err(
                    self.line(key),
                    format!("{key} = {v:?} is not a valid {}", std::any::type_name::<T>()),
                )
            }),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| err(None, format!("missing {key}")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list of numbers.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.params.get(key) else { return Ok(None) };
        v.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
            .map_err(|_| err(self.line(key), format!("{key} must be a comma-separated list of numbers")))
    }

    pub fn point(&self, key: &str) -> Result<Option<P2>, ConfigError> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some([v[0], v[1]])),
            Some(_) => Err(err(self.line(key), format!("{key} must be \"x,y\""))),
        }
    }

    /// `a b c; a b c; ...` rows of numbers.
    pub fn rows(&self, key: &str, width: usize) -> Result<Option<Vec<Vec<f64>>>, ConfigError> {
        let Some(v) = self.params.get(key) else { return Ok(None) };
        let bad = || err(self.line(key), format!("{key} must be rows of {width} numbers separated by ';'"));
        let mut out = Vec::new();
        for row in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let nums: Vec<f64> = row
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            if nums.len() != width {
                return Err(bad());
            }
            out.push(nums);
        }
        Ok(Some(out))
    }

    /// The domain described by the config.
    pub fn domain(&self) -> Result<Domain, ConfigError> {
        let kind: String = self.require("domain")?;
        let at = self.line("domain");
        let lib = |e: crate::Error| err(at, e.to_string());
        match kind.as_str() {
            "ball" | "disk" => {
                let n = if kind == "disk" { 2 } else { self.get_or("N", 2usize)? };
                let r: f64 = self.require("R")?;
                Domain::ball(n, r).map_err(lib)
            }
            "annulus" => {
                let n = self.get_or("N", 2usize)?;
                Domain::annulus(n, self.require("r")?, self.require("R")?).map_err(lib)
            }
            "square" => Ok(Domain::unit_square()),
            "polygon" => {
                let rows = self.rows("vertices", 2)?.ok_or_else(|| err(None, "missing vertices"))?;
                Domain::polygon(rows.into_iter().map(|r| [r[0], r[1]]).collect()).map_err(lib)
            }
            "square_with_appendage" => {
                Domain::square_with_appendage(self.require("delta")?, self.require("eta")?).map_err(lib)
            }
            "patch" => {
                let kappa = self.list("kappa")?.ok_or_else(|| err(None, "missing kappa"))?;
                let radius = self.get_or("patch_radius", 1.0)?;
                Domain::boundary_patch(BoundaryPatch::paraboloid(kappa, radius)).map_err(lib)
            }
            other => Err(err(at, format!("unknown domain {other:?}"))),
        }
    }

    /// Parse-time validation of required keys and value ranges.
    fn check(&self) -> Result<(), ConfigError> {
        let domain = self.domain()?;
        let planar = |what: &str| -> Result<(), ConfigError> {
            if domain.dim() != 2 || matches!(domain, Domain::BoundaryPatch(_)) {
                return Err(err(self.line("domain"), format!("{what} needs a planar domain")));
            }
            Ok(())
        };
        let positive = |key: &str| -> Result<(), ConfigError> {
            if let Some(v) = self.get::<f64>(key)? {
                if !(v > 0.0) {
                    return Err(err(self.line(key), format!("{key} must be positive")));
                }
            }
            Ok(())
        };
        for k in ["h", "tau", "tolerance", "t_start", "t_end", "fd_delta", "hole_radius", "lambda1"] {
            if k == "tau" {
                if let Some(v) = self.get::<f64>(k)? {
                    if !(v >= 0.0) {
                        return Err(err(self.line(k), "tau must be non-negative"));
                    }
                }
                continue;
            }
            positive(k)?;
        }
        for k in ["max_iterations", "window", "memory", "iterations", "chains", "cap_directions", "cap_levels"] {
            if let Some(v) = self.get::<usize>(k)? {
                if v == 0 {
                    return Err(err(self.line(k), format!("{k} must be positive")));
                }
            }
        }
        match self.command {
            Command::Exact => {}
            Command::Asymptotics => {
                if !matches!(domain, Domain::BoundaryPatch(_)) {
                    return Err(err(self.line("domain"), "asymptotics needs domain=patch"));
                }
                let eps = self.list("eps")?.ok_or_else(|| err(None, "missing eps"))?;
                if eps.iter().any(|e| !(*e > 0.0)) {
                    return Err(err(self.line("eps"), "eps values must be positive"));
                }
            }
            Command::SolveP => {
                planar("solve-p")?;
                let p: f64 = self.require("p")?;
                if !(p > 1.0) {
                    return Err(err(self.line("p"), "p must exceed 1"));
                }
                self.point("hole_center")?;
            }
            Command::SweepP => {
                planar("sweep-p")?;
                let s = self.list("schedule")?.ok_or_else(|| err(None, "missing schedule"))?;
                if s.len() < 3 || s.iter().any(|p| !(*p > 1.0)) || s.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(err(
                        self.line("schedule"),
                        "schedule must have at least three values, decreasing and above 1",
                    ));
                }
            }
            Command::EigensetSearch => {
                planar("eigenset-search")?;
                self.point("hole_center")?;
                self.family()?;
                if let Some(a) = self.get::<f64>("trapped_volume")? {
                    if !(a >= 0.0) {
                        return Err(err(self.line("trapped_volume"), "trapped_volume must be non-negative"));
                    }
                }
            }
            Command::HoleSearch => {
                planar("hole-search")?;
                self.family()?;
                self.point("good_point")?.ok_or_else(|| err(None, "missing good_point"))?;
                self.require::<f64>("hole_radius")?;
                match (self.get::<f64>("alpha")?, self.get::<f64>("alpha_fraction")?) {
                    (Some(_), Some(_)) => {
                        return Err(err(self.line("alpha_fraction"), "give alpha or alpha_fraction, not both"))
                    }
                    (None, None) => return Err(err(None, "missing alpha")),
                    _ => {}
                }
            }
            Command::ShapeDerivative | Command::FdCheck => {
                planar(self.command.name())?;
                self.field_name()?;
                match self.get_or("set", "whole".to_string())?.as_str() {
                    "whole" => {}
                    "cap" => {
                        self.point("cap_direction")?.ok_or_else(|| err(None, "missing cap_direction"))?;
                        self.require::<f64>("cap_offset")?;
                    }
                    other => return Err(err(self.line("set"), format!("unknown set {other:?}"))),
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Result<crate::isoperimetric::SearchFamily, ConfigError> {
        use crate::isoperimetric::SearchFamily;
        match self.get_or("family", "cell_annealing".to_string())?.as_str() {
            "cell_annealing" => Ok(SearchFamily::CellAnnealing),
            "boundary_caps" => Ok(SearchFamily::BoundaryCaps),
            other => Err(err(self.line("family"), format!("unknown family {other:?}"))),
        }
    }

    pub fn field_name(&self) -> Result<String, ConfigError> {
        let name: String = self.require("field")?;
        const KNOWN: &[&str] = &[
            "dilation", "translation", "rotation", "shear", "shear_trace_free",
            "tangential_polynomial", "polynomial",
        ];
        if !KNOWN.contains(&name.as_str()) {
            return Err(err(self.line("field"), format!("unknown field {name:?}")));
        }
        if name == "polynomial" {
            self.rows("poly_x", 3)?.ok_or_else(|| err(None, "missing poly_x"))?;
            self.rows("poly_y", 3)?.ok_or_else(|| err(None, "missing poly_y"))?;
        }
        if name == "translation" {
            self.point("translation")?;
        }
        Ok(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_exact_config() {
        let c = RunConfig::parse("command=exact\ndomain=ball\nN=2\nR=1").unwrap();
        assert_eq!(c.command, Command::Exact);
        assert_eq!(c.seed, 0);
        assert_eq!(c.domain().unwrap(), Domain::ball(2, 1.0).unwrap());
    }

    #[test]
    fn missing_radius() {
        let e = RunConfig::parse("command=exact\ndomain=ball\nN=2").unwrap_err();
        assert!(e.message.contains("missing R"), "{e}");
    }

    #[test]
    fn p_must_exceed_one() {
        let e = RunConfig::parse("command=solve-p\ndomain=disk\nR=1\np=0.9").unwrap_err();
        assert!(e.message.contains("p must exceed 1"));
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn unknown_key_and_command() {
        let e = RunConfig::parse("command=exact\ndomain=ball\nR=1\ncolour=blue").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(RunConfig::parse("command=frobnicate\ndomain=ball\nR=1").is_err());
        assert!(RunConfig::parse("domain=ball\nR=1").is_err());
    }

    #[test]
    fn sections_apply_per_command() {
        let text = "command=solve-p\ndomain=disk\nR=1\n[solve-p]\np=2 # exponent\n[sweep-p]\nschedule=2,1.5,1.1\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.get::<f64>("p").unwrap(), Some(2.0));
        assert!(!c.has("schedule"));
        let bad = "command=solve-p\ndomain=disk\nR=1\np=2\n[sweep-p]\np=3\n";
        assert!(RunConfig::parse(bad).is_err());
    }

    #[test]
    fn type_mismatch_names_line() {
        let e = RunConfig::parse("command=solve-p\ndomain=disk\nR=1\np=2\nmax_iterations=lots").unwrap_err();
        assert_eq!(e.line, Some(5));
    }

    #[test]
    fn duplicate_keys_rejected() {
        assert!(RunConfig::parse("command=exact\ndomain=ball\nR=1\nR=2").is_err());
    }
}
