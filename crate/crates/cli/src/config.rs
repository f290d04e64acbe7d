//! Plain-text `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Lists are comma separated.
//! Every key has a per-command default, so an empty file is a valid run.
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `nonlinearity` | `constant`, `constant:<c>`, `exponential`, `power:<p>`, `table:<csv file>` | `constant` |
//! | `lambda` | λ | 1 (0.5 for `exponential`) |
//! | `sigma` | extension of the profile past ±1 | 0.1 |
//! | `k` | number of maxima | 2 |
//! | `taus` | cosh targets τ_1 < … < τ_k | `cosh(i)` |
//! | `n` | number of x-directions (theorem1, sweep) or y-directions (theorem2) | 1, theorem2: 2 |
//! | `eps` | strictly decreasing ε list | theorem1 `0.005`, theorem2 `1e-3`, sweep `0.02,0.01,0.005` |
//! | `grid` | nodes per axis, x axes first | theorem1 `1025,513`, sweep `513,257`, theorem2 `257,257,257` |
//! | `roots` | torsion roots t_1 < … < t_k | `1,2` |
//! | `eta` | slab margin η | 0.05 |
//! | `construction` | `standard` or `remark-r` (theorem1) | `standard` |
//! | `tol_psi` | allowed negative part of ψ_ε | 1e-8 |
//! | `tol_agreement` | split vs monotone solution | 1e-7 |
//! | `tol_bound` | strip comparison slack | 1e-9 |
//! | `min_slope` | required log–log expansion slope | 1.8 |
//! | `lambda_star_width` | width of the λ* bracket | 1e-3 |
//! | `lambda_star_cap` | give up bracketing above this λ | 1000 |
//! | `remark_mu1`, `remark_eps` | negative-control field parameters | 1, 1e-3 |
//! | `remark_widths` | base half-widths | `20,40,80` |
//! | `remark_doublings` | box doublings per width | 3 |
//! | `seed` | recorded for reproducibility; the pipelines are deterministic | 0 |
//! | `output` | output directory | `out` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Profile,
    Theorem1,
    Theorem2,
    Sweep,
    RemarkR,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Theorem1 => "theorem1",
            Command::Theorem2 => "theorem2",
            Command::Sweep => "sweep",
            Command::RemarkR => "remark-r",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearitySpec {
    Constant(f64),
    Exponential,
    Power(f64),
    Table { path: String, ts: Vec<f64>, fs: Vec<f64> },
}

impl NonlinearitySpec {
    pub fn build(&self) -> Result<profile1d::Nonlinearity, CliError> {
        use profile1d::Nonlinearity;
        Ok(match self {
            NonlinearitySpec::Constant(c) => Nonlinearity::constant(*c),
            NonlinearitySpec::Exponential => Nonlinearity::exponential(),
            NonlinearitySpec::Power(p) => Nonlinearity::power(*p),
            NonlinearitySpec::Table { ts, fs, .. } => {
                Nonlinearity::table(ts, fs).map_err(|e| CliError::Input(e.to_string()))?
            }
        })
    }

    fn canonical(&self) -> String {
        match self {
            NonlinearitySpec::Constant(c) => format!("constant:{c}"),
            NonlinearitySpec::Exponential => "exponential".into(),
            NonlinearitySpec::Power(p) => format!("power:{p}"),
            // The table content, not its location, defines the run.
            NonlinearitySpec::Table { ts, fs, .. } => {
                let pairs: Vec<String> = ts.iter().zip(fs).map(|(t, f)| format!("{t}:{f}")).collect();
                format!("table:{}", pairs.join(";"))
            }
        }
    }
}

/// Raw key/value pairs as read from the file and the command line.
pub type RawConfig = BTreeMap<String, String>;

const KEYS: &[&str] = &[
    "nonlinearity",
    "lambda",
    "sigma",
    "k",
    "taus",
    "n",
    "eps",
    "grid",
    "roots",
    "eta",
    "construction",
    "tol_psi",
    "tol_agreement",
    "tol_bound",
    "min_slope",
    "lambda_star_width",
    "lambda_star_cap",
    "remark_mu1",
    "remark_eps",
    "remark_widths",
    "remark_doublings",
    "seed",
    "output",
];

pub fn parse_config(text: &str) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("line {}: expected key = value", no + 1)))?;
        set_key(&mut raw, k.trim(), v.trim())?;
    }
    Ok(raw)
}

/// Inserts one `key=value` override.
pub fn set_key(raw: &mut RawConfig, key: &str, value: &str) -> Result<(), CliError> {
    if !KEYS.contains(&key) {
        return Err(CliError::Input(format!("unknown key '{key}'")));
    }
    raw.insert(key.to_string(), value.to_string());
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub nonlinearity: NonlinearitySpec,
    pub lambda: f64,
    pub sigma: f64,
    pub k: usize,
    pub taus: Option<Vec<f64>>,
    pub n: usize,
    pub eps: Vec<f64>,
    pub grid: Vec<usize>,
    pub roots: Vec<f64>,
    pub eta: f64,
    pub remark_construction: bool,
    pub tol_psi: f64,
    pub tol_agreement: f64,
    pub tol_bound: f64,
    pub min_slope: f64,
    pub lambda_star_width: f64,
    pub lambda_star_cap: f64,
    pub remark_mu1: f64,
    pub remark_eps: f64,
    pub remark_widths: Vec<f64>,
    pub remark_doublings: usize,
    pub seed: u64,
    pub output: PathBuf,
}

fn num(key: &str, v: &str) -> Result<f64, CliError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::Input(format!("{key}: '{v}' is not a finite number")))
}

fn int(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse::<usize>().map_err(|_| CliError::Input(format!("{key}: '{v}' is not a nonnegative integer")))
}

fn list<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    v.split(',').map(|s| f(key, s.trim())).collect()
}

fn parse_nonlinearity(v: &str) -> Result<NonlinearitySpec, CliError> {
    let (head, arg) = match v.split_once(':') {
        Some((h, a)) => (h.trim(), Some(a.trim())),
        None => (v.trim(), None),
    };
    Ok(match (head, arg) {
        ("constant", None) => NonlinearitySpec::Constant(1.0),
        ("constant", Some(c)) => NonlinearitySpec::Constant(num("nonlinearity", c)?),
        ("exponential", None) => NonlinearitySpec::Exponential,
        ("power", Some(p)) => NonlinearitySpec::Power(num("nonlinearity", p)?),
        ("table", Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("table {path}: {e}")))?;
            let (mut ts, mut fs) = (Vec::new(), Vec::new());
            for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols.len() != 2 {
                    return Err(CliError::Input(format!("table {path}: expected 't,f' rows, got '{line}'")));
                }
                // A header row is allowed.
                if let (Ok(t), Ok(f)) = (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                    ts.push(t);
                    fs.push(f);
                }
            }
            NonlinearitySpec::Table { path: path.to_string(), ts, fs }
        }
        _ => return Err(CliError::Input(format!("unknown nonlinearity '{v}'"))),
    })
}

impl RunConfig {
    /// Applies the per-command defaults and validates.
    pub fn resolve(command: Command, raw: &RawConfig) -> Result<Self, CliError> {
        let get = |k: &str| raw.get(k).map(String::as_str);
        let nonlinearity = parse_nonlinearity(get("nonlinearity").unwrap_or("constant"))?;
        let lambda = match get("lambda") {
            Some(v) => num("lambda", v)?,
            None if nonlinearity == NonlinearitySpec::Exponential => 0.5,
            None => 1.0,
        };
        let n = match get("n") {
            Some(v) => int("n", v)?,
            None if command == Command::Theorem2 => 2,
            None => 1,
        };
        let eps = match get("eps") {
            Some(v) => list("eps", v, num)?,
            None => match command {
                Command::Theorem2 => vec![1e-3],
                Command::Sweep => vec![0.02, 0.01, 0.005],
                _ => vec![0.005],
            },
        };
        let grid = match get("grid") {
            Some(v) => list("grid", v, int)?,
            None => match command {
                Command::Theorem2 => vec![257; n + 1],
                Command::Sweep => {
                    let mut g = vec![513; n];
                    g.push(257);
                    g
                }
                _ => {
                    let mut g = vec![1025; n];
                    g.push(513);
                    g
                }
            },
        };
        let construction = get("construction").unwrap_or("standard");
        let remark_construction = match construction {
            "standard" => false,
            "remark-r" => true,
            other => return Err(CliError::Input(format!("construction: unknown value '{other}'"))),
        };
        let cfg = RunConfig {
            command,
            nonlinearity,
            lambda,
            sigma: get("sigma").map_or(Ok(0.1), |v| num("sigma", v))?,
            k: get("k").map_or(Ok(2), |v| int("k", v))?,
            taus: get("taus").map(|v| list("taus", v, num)).transpose()?,
            n,
            eps,
            grid,
            roots: get("roots").map_or(Ok(vec![1.0, 2.0]), |v| list("roots", v, num))?,
            eta: get("eta").map_or(Ok(0.05), |v| num("eta", v))?,
            remark_construction,
            tol_psi: get("tol_psi").map_or(Ok(1e-8), |v| num("tol_psi", v))?,
            tol_agreement: get("tol_agreement").map_or(Ok(1e-7), |v| num("tol_agreement", v))?,
            tol_bound: get("tol_bound").map_or(Ok(1e-9), |v| num("tol_bound", v))?,
            min_slope: get("min_slope").map_or(Ok(1.8), |v| num("min_slope", v))?,
            lambda_star_width: get("lambda_star_width").map_or(Ok(1e-3), |v| num("lambda_star_width", v))?,
            lambda_star_cap: get("lambda_star_cap").map_or(Ok(1e3), |v| num("lambda_star_cap", v))?,
            remark_mu1: get("remark_mu1").map_or(Ok(1.0), |v| num("remark_mu1", v))?,
            remark_eps: get("remark_eps").map_or(Ok(1e-3), |v| num("remark_eps", v))?,
            remark_widths: get("remark_widths").map_or(Ok(vec![20.0, 40.0, 80.0]), |v| list("remark_widths", v, num))?,
            remark_doublings: get("remark_doublings").map_or(Ok(3), |v| int("remark_doublings", v))?,
            seed: get("seed").map_or(Ok(0), |v| v.parse::<u64>().map_err(|_| CliError::Input(format!("seed: '{v}'"))))?,
            output: PathBuf::from(get("output").unwrap_or("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Input(m));
        for (name, v) in [
            ("tol_psi", self.tol_psi),
            ("tol_agreement", self.tol_agreement),
            ("tol_bound", self.tol_bound),
            ("min_slope", self.min_slope),
            ("lambda_star_width", self.lambda_star_width),
            ("lambda_star_cap", self.lambda_star_cap),
            ("eta", self.eta),
            ("sigma", self.sigma),
            ("remark_mu1", self.remark_mu1),
            ("remark_eps", self.remark_eps),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0)) || self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!("eps list must be positive and strictly decreasing, got {:?}", self.eps));
        }
        if let Some(t) = &self.taus {
            if t.len() != self.k {
                return bad(format!("taus has {} entries but k = {}", t.len(), self.k));
            }
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        match self.command {
            Command::Theorem2 => {
                if self.n < 2 {
                    return bad(format!("theorem2 needs n >= 2 (the boundary curvature changes sign for n = 1), got n = {}", self.n));
                }
                if self.roots.len() != self.k {
                    return bad(format!("roots has {} entries but k = {}", self.roots.len(), self.k));
                }
            }
            Command::Sweep if self.eps.len() < 3 => {
                return bad(format!("sweep needs at least 3 eps values, got {}", self.eps.len()));
            }
            _ => {}
        }
        if matches!(self.command, Command::Theorem1 | Command::Theorem2 | Command::Sweep) {
            if self.grid.len() != self.n + 1 {
                return bad(format!("grid needs {} counts, got {}", self.n + 1, self.grid.len()));
            }
            if self.grid.iter().any(|&c| c < 5) {
                return bad("grid counts must be at least 5".into());
            }
        }
        if self.remark_widths.is_empty() || self.remark_widths.iter().any(|w| !(*w > 0.0)) {
            return bad("remark_widths must be positive".into());
        }
        Ok(())
    }

    /// Canonical `key=value` lines of the resolved configuration. The output
    /// directory is left out so that relocating a run does not change it.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut m = BTreeMap::new();
        m.insert("command".into(), self.command.name().into());
        m.insert("nonlinearity".into(), self.nonlinearity.canonical());
        m.insert("lambda".into(), self.lambda.to_string());
        m.insert("sigma".into(), self.sigma.to_string());
        m.insert("k".into(), self.k.to_string());
        m.insert("taus".into(), self.taus.as_deref().map_or("default".into(), join));
        m.insert("n".into(), self.n.to_string());
        m.insert("eps".into(), join(&self.eps));
        m.insert("grid".into(), self.grid.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
        m.insert("roots".into(), join(&self.roots));
        m.insert("eta".into(), self.eta.to_string());
        m.insert("construction".into(), if self.remark_construction { "remark-r" } else { "standard" }.into());
        m.insert("tol_psi".into(), self.tol_psi.to_string());
        m.insert("tol_agreement".into(), self.tol_agreement.to_string());
        m.insert("tol_bound".into(), self.tol_bound.to_string());
        m.insert("min_slope".into(), self.min_slope.to_string());
        m.insert("lambda_star_width".into(), self.lambda_star_width.to_string());
        m.insert("lambda_star_cap".into(), self.lambda_star_cap.to_string());
        m.insert("remark_mu1".into(), self.remark_mu1.to_string());
        m.insert("remark_eps".into(), self.remark_eps.to_string());
        m.insert("remark_widths".into(), join(&self.remark_widths));
        m.insert("remark_doublings".into(), self.remark_doublings.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m
    }

    /// SHA-256 of the canonical echo, hex encoded.
    pub fn hash(&self) -> String {
        let mut text = String::new();
        for (k, v) in self.echo() {
            let _ = writeln!(text, "{k}={v}");
        }
        Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn taus(&self) -> Vec<f64> {
        self.taus.clone().unwrap_or_else(|| coshcombo::default_taus(self.k))
    }
}
