//! Job configuration: flat `key = value` files merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ptspec_core::shooting::ShootControls;
use ptspec_core::wkb::WkbOrder;
use ptspec_core::{PtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Trajectory,
    Spectrum,
    Matrix,
    Wkb,
    Table1,
    Pinch,
    SpecialPoints,
    EmitFigure,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Trajectory,
        Command::Spectrum,
        Command::Matrix,
        Command::Wkb,
        Command::Table1,
        Command::Pinch,
        Command::SpecialPoints,
        Command::EmitFigure,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Trajectory => "trajectory",
            Command::Spectrum => "spectrum",
            Command::Matrix => "matrix",
            Command::Wkb => "wkb",
            Command::Table1 => "table1",
            Command::Pinch => "pinch",
            Command::SpecialPoints => "special-points",
            Command::EmitFigure => "emit-figure",
        }
    }
}

impl FromStr for Command {
    type Err = PtError;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| PtError::Config(format!("unknown command `{s}`")))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = PtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(PtError::Config(format!("format must be csv or json, got `{s}`"))),
        }
    }
}

/// Which potential family a job targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyParam {
    K(u32),
    P(f64),
}

/// The epsilon axis of a job: one value or a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsParam {
    Single(f64),
    Grid { min: f64, max: f64, steps: usize },
}

/// Keys accepted in config files and their flag spellings (`_` becomes `-`).
pub const KEYS: &[&str] = &[
    "command", "K", "P", "eps", "eps_min", "eps_max", "eps_steps", "levels", "trunc", "energy", "x0_re",
    "x0_im", "branch", "t_max", "order", "pair", "deltas", "figure", "steps", "action", "tol_e", "out",
    "format",
];

#[derive(Debug, Clone)]
pub struct JobConfig {
    pub command: Command,
    pub family: Option<FamilyParam>,
    pub eps: Option<EpsParam>,
    pub levels: Option<usize>,
    pub trunc: Option<usize>,
    pub energy: Option<f64>,
    pub x0: Option<(f64, f64)>,
    pub branch_minus: bool,
    pub t_max: Option<f64>,
    pub order: Option<WkbOrder>,
    pub pair: Option<(usize, usize)>,
    pub deltas: Option<Vec<f64>>,
    pub figure: Option<String>,
    pub shoot: ShootControls,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Every key that was set, normalized, for output headers.
    pub raw: BTreeMap<String, String>,
}

/// Parse `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| PtError::Config(format!("line {}: expected key = value", i + 1)))?;
        out.insert(normalize_key(k.trim())?, v.trim().to_string());
    }
    Ok(out)
}

fn normalize_key(k: &str) -> Result<String> {
    let k = k.trim_start_matches("--").replace('-', "_");
    let k = match k.as_str() {
        "k" => "K".to_string(),
        "p" => "P".to_string(),
        _ => k,
    };
    if KEYS.contains(&k.as_str()) {
        Ok(k)
    } else {
        Err(PtError::Config(format!("unknown key `{k}`")))
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| PtError::Config(format!("cannot parse {key} = `{v}`")))
}

fn finite(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(PtError::Config(format!("{key} must be finite")))
    }
}

impl JobConfig {
    /// Build from file pairs overridden by flag pairs.
    pub fn merge(file: BTreeMap<String, String>, flags: BTreeMap<String, String>) -> Result<Self> {
        let mut raw = file;
        for (k, v) in flags {
            raw.insert(normalize_key(&k)?, v);
        }
        Self::from_pairs(raw)
    }

    pub fn from_pairs(raw: BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| raw.get(k).map(String::as_str);
        let command: Command = get("command")
            .ok_or_else(|| PtError::Config("no command given".into()))?
            .parse()?;
        let family = match (get("K"), get("P")) {
            (Some(_), Some(_)) => return Err(PtError::Config("give either K or P, not both".into())),
            (Some(k), None) => {
                let k: u32 = parse("K", k)?;
                if k == 0 {
                    return Err(PtError::Config("K must be at least 1".into()));
                }
                Some(FamilyParam::K(k))
            }
            (None, Some(p)) => {
                let p = finite("P", p)?;
                if !(p > 0.0) {
                    return Err(PtError::Config("P must be positive".into()));
                }
                Some(FamilyParam::P(p))
            }
            (None, None) => None,
        };
        let grid_keys = [get("eps_min"), get("eps_max"), get("eps_steps")];
        let eps = match (get("eps"), grid_keys) {
            (Some(_), [None, None, None]) | (None, [None, None, None]) => {
                get("eps").map(|v| finite("eps", v)).transpose()?.map(EpsParam::Single)
            }
            (None, [Some(lo), Some(hi), steps]) => {
                let (min, max) = (finite("eps_min", lo)?, finite("eps_max", hi)?);
                let steps = steps.map(|s| parse("eps_steps", s)).transpose()?.unwrap_or(100);
                if !(max > min) || steps == 0 {
                    return Err(PtError::Config("need eps_max > eps_min and eps_steps >= 1".into()));
                }
                Some(EpsParam::Grid { min, max, steps })
            }
            _ => {
                return Err(PtError::Config(
                    "give eps alone, or eps_min and eps_max (with optional eps_steps)".into(),
                ))
            }
        };
        let x0 = match (get("x0_re"), get("x0_im")) {
            (None, None) => None,
            (re, im) => Some((
                re.map(|v| finite("x0_re", v)).transpose()?.unwrap_or(0.0),
                im.map(|v| finite("x0_im", v)).transpose()?.unwrap_or(0.0),
            )),
        };
        let branch_minus = match get("branch") {
            None | Some("plus") => false,
            Some("minus") => true,
            Some(b) => return Err(PtError::Config(format!("branch must be plus or minus, got `{b}`"))),
        };
        let order = match get("order") {
            None => None,
            Some("lo") | Some("leading") => Some(WkbOrder::Leading),
            Some("nlo") => Some(WkbOrder::Nlo),
            Some(o) => return Err(PtError::Config(format!("order must be lo or nlo, got `{o}`"))),
        };
        let pair = get("pair")
            .map(|v| -> Result<(usize, usize)> {
                let (a, b) = v
                    .split_once(',')
                    .ok_or_else(|| PtError::Config(format!("pair must look like 1,2, got `{v}`")))?;
                Ok((parse("pair", a.trim())?, parse("pair", b.trim())?))
            })
            .transpose()?;
        let deltas = get("deltas")
            .map(|v| v.split(',').map(|d| finite("deltas", d.trim())).collect::<Result<Vec<f64>>>())
            .transpose()?;
        let mut shoot = ShootControls::default();
        if let Some(v) = get("steps") {
            shoot.steps = parse("steps", v)?;
        }
        if let Some(v) = get("action") {
            shoot.action = finite("action", v)?;
        }
        if let Some(v) = get("tol_e") {
            shoot.tol_e = finite("tol_e", v)?;
        }
        if shoot.steps < 100 || !(shoot.action > 0.0) || !(shoot.tol_e > 0.0) {
            return Err(PtError::Config("need steps >= 100, action > 0, tol_e > 0".into()));
        }
        Ok(Self {
            command,
            family,
            eps,
            levels: get("levels").map(|v| parse("levels", v)).transpose()?,
            trunc: get("trunc").map(|v| parse("trunc", v)).transpose()?,
            energy: get("energy").map(|v| finite("energy", v)).transpose()?,
            x0,
            branch_minus,
            t_max: get("t_max").map(|v| finite("t_max", v)).transpose()?,
            order,
            pair,
            deltas,
            figure: get("figure").map(str::to_string),
            shoot,
            out: get("out").map(PathBuf::from),
            format: get("format").map(str::parse).transpose()?.unwrap_or_default(),
            raw,
        })
    }

    /// The analytic exponent `K`, defaulting to 1; rejects the `|x|^P` family.
    pub fn analytic_k(&self) -> Result<u32> {
        match self.family {
            None => Ok(1),
            Some(FamilyParam::K(k)) => Ok(k),
            Some(FamilyParam::P(_)) => Err(PtError::Config(format!(
                "{} is defined for the analytic family only",
                self.command
            ))),
        }
    }

    pub fn single_eps(&self) -> Result<Option<f64>> {
        match self.eps {
            None => Ok(None),
            Some(EpsParam::Single(e)) => Ok(Some(e)),
            Some(EpsParam::Grid { .. }) => Err(PtError::Config(format!("{} takes a single eps", self.command))),
        }
    }

    pub fn require_eps(&self) -> Result<f64> {
        self.single_eps()?
            .ok_or_else(|| PtError::Config(format!("{} needs eps", self.command)))
    }

    /// Parameters for the output header, in key order.
    pub fn header(&self) -> Vec<(String, String)> {
        let mut h: Vec<(String, String)> = self
            .raw
            .iter()
            .filter(|(k, _)| !matches!(k.as_str(), "command" | "out" | "format"))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        h.push(("steps".into(), self.shoot.steps.to_string()));
        h.push(("action".into(), self.shoot.action.to_string()));
        h.push(("tol_e".into(), self.shoot.tol_e.to_string()));
        h.sort();
        h.dedup_by(|b, a| a.0 == b.0);
        h
    }
}
