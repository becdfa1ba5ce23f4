//! Flat `key = value [unit]` experiment files.
//!
//! ```text
//! # reference network
//! n_nodes        = 4
//! initial_energy = 2 J
//! period         = 30 s
//! packet_bits    = 30 bit
//! noise          = -30 dB
//! lambda         = 1 packets
//! lambdas        = 0.2, 0.4, 0.6, 0.8, 1.0 packets
//! runs           = 1000
//! seed           = 1
//! ```
//!
//! Physical quantities must carry their unit. Noise power is given either in
//! `dB` or as a linear value with unit `W`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::scheduling::StrategyKind;
use crate::sim::{SimConfig, DEFAULT_PERIOD_CAP};
use crate::solver::{Backend, SolverOptions};
use crate::types::{db_to_linear, NoiseModel};

/// Environment variable that replaces the built-in default seed.
pub const SEED_ENV: &str = "MACFAIR_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub reason: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: key `{}`: {}", self.key, self.reason),
            None => write!(f, "key `{}`: {}", self.key, self.reason),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Where the seed came from, echoed in output headers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedSource {
    Config,
    Env,
    Default,
}

impl std::fmt::Display for SeedSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedSource::Config => f.write_str("config"),
            SeedSource::Env => write!(f, "env {SEED_ENV}"),
            SeedSource::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Simulation at the first swept λ.
    pub sim: SimConfig,
    /// λ values for the lifetime sweep.
    pub lambdas: Vec<f64>,
    pub out_dir: Option<PathBuf>,
    pub seed_source: SeedSource,
}

const KEYS: &[&str] = &[
    "n_nodes",
    "initial_energy",
    "period",
    "packet_bits",
    "noise",
    "gains",
    "lambda",
    "lambdas",
    "runs",
    "seed",
    "period_cap",
    "backend",
    "tol",
    "max_iter",
    "out_dir",
];

struct Entry {
    line: usize,
    value: String,
}

struct Doc {
    entries: BTreeMap<String, Entry>,
}

impl Doc {
    fn err(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError {
            key: key.to_string(),
            line: self.entries.get(key).map(|e| e.line),
            reason: reason.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    /// Splits `value unit` and checks the unit.
    fn with_unit<'a>(&'a self, key: &str, units: &[&str]) -> Result<Option<(&'a str, &'a str)>, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let (num, unit) = match v.rsplit_once(char::is_whitespace) {
            Some((n, u)) if u.chars().all(char::is_alphabetic) => (n.trim(), u),
            _ => return Err(self.err(key, format!("missing unit, expected one of {}", units.join(", ")))),
        };
        if !units.contains(&unit) {
            return Err(self.err(key, format!("unit `{unit}` not one of {}", units.join(", "))));
        }
        Ok(Some((num, unit)))
    }

    fn parse_f64(&self, key: &str, s: &str) -> Result<f64, ConfigError> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(key, format!("`{}` is not a finite number", s.trim())))
    }

    fn positive(&self, key: &str, v: f64) -> Result<f64, ConfigError> {
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(key, format!("{v} must be positive")))
        }
    }

    fn list(&self, key: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
        s.split(',').map(|x| self.parse_f64(key, x)).collect()
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| self.err(key, format!("`{v}` is not a valid integer"))))
            .transpose()
    }
}

fn tokenize(text: &str) -> Result<Doc, ConfigError> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError {
                key: content.to_string(),
                line: Some(line),
                reason: "expected `key = value`".into(),
            });
        };
        let key = k.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError {
                key,
                line: Some(line),
                reason: "unknown key".into(),
            });
        }
        if entries.contains_key(&key) {
            return Err(ConfigError {
                key,
                line: Some(line),
                reason: "duplicate key".into(),
            });
        }
        entries.insert(
            key,
            Entry {
                line,
                value: v.trim().to_string(),
            },
        );
    }
    Ok(Doc { entries })
}

/// Parses a configuration document. `env_seed` is the value of
/// [`SEED_ENV`], if set; an explicit `seed` key wins over it.
pub fn parse_config(text: &str, env_seed: Option<&str>) -> Result<ExperimentConfig, ConfigError> {
    let doc = tokenize(text)?;
    let mut sim = SimConfig::reference();

    if let Some(n) = doc.integer::<usize>("n_nodes")? {
        if n == 0 {
            return Err(doc.err("n_nodes", "must be at least 1"));
        }
        sim.n_nodes = n;
    }
    if let Some((v, _)) = doc.with_unit("initial_energy", &["J"])? {
        let e = doc.parse_f64("initial_energy", v)?;
        if e < 0.0 {
            return Err(doc.err("initial_energy", format!("{e} is negative")));
        }
        sim.initial_energy = e;
    }
    if let Some((v, _)) = doc.with_unit("period", &["s"])? {
        sim.period = doc.positive("period", doc.parse_f64("period", v)?)?;
    }
    if let Some((v, _)) = doc.with_unit("packet_bits", &["bit", "bits"])? {
        sim.packet_bits = v
            .parse::<u32>()
            .ok()
            .filter(|&b| b > 0)
            .ok_or_else(|| doc.err("packet_bits", format!("`{v}` is not a positive integer")))?;
    }

    let sigma_sq = match doc.with_unit("noise", &["dB", "W"])? {
        Some((v, "dB")) => db_to_linear(doc.parse_f64("noise", v)?),
        Some((v, _)) => doc.positive("noise", doc.parse_f64("noise", v)?)?,
        None => sim.noise.sigma_sq(),
    };
    let gains = match doc.raw("gains") {
        Some(v) => {
            let g = doc.list("gains", v)?;
            if g.len() != sim.n_nodes {
                return Err(doc.err("gains", format!("{} gains for {} nodes", g.len(), sim.n_nodes)));
            }
            g
        }
        None => vec![1.0; sim.n_nodes],
    };
    sim.noise = NoiseModel::new(sigma_sq, gains).map_err(|e| doc.err("noise", e.to_string()))?;

    let lambdas = match doc.with_unit("lambdas", &["packets"])? {
        Some((v, _)) => {
            let ls = doc.list("lambdas", v)?;
            for &l in &ls {
                doc.positive("lambdas", l)?;
            }
            ls
        }
        None => Vec::new(),
    };
    let lambda = match doc.with_unit("lambda", &["packets"])? {
        Some((v, _)) => Some(doc.positive("lambda", doc.parse_f64("lambda", v)?)?),
        None => None,
    };
    let lambdas = match (lambda, lambdas.is_empty()) {
        (Some(l), true) => vec![l],
        (_, false) => lambdas,
        (None, true) => vec![sim.lambda],
    };
    sim.lambda = lambda.unwrap_or(lambdas[0]);

    if let Some(r) = doc.integer::<usize>("runs")? {
        if r == 0 {
            return Err(doc.err("runs", "must be at least 1"));
        }
        sim.runs = r;
    }
    let (seed, seed_source) = match (doc.integer::<u64>("seed")?, env_seed) {
        (Some(s), _) => (s, SeedSource::Config),
        (None, Some(e)) => (
            e.trim().parse::<u64>().map_err(|_| ConfigError {
                key: SEED_ENV.into(),
                line: None,
                reason: format!("`{e}` is not a valid seed"),
            })?,
            SeedSource::Env,
        ),
        (None, None) => (DEFAULT_SEED, SeedSource::Default),
    };
    sim.seed = seed;
    sim.period_cap = doc.integer::<u64>("period_cap")?.unwrap_or(DEFAULT_PERIOD_CAP);
    if sim.period_cap == 0 {
        return Err(doc.err("period_cap", "must be at least 1"));
    }

    let mut solver = SolverOptions::default();
    if let Some(b) = doc.raw("backend") {
        solver.backend = b.parse::<Backend>().map_err(|e| doc.err("backend", e.to_string()))?;
    }
    if let Some(t) = doc.raw("tol") {
        solver.tol = Some(doc.positive("tol", doc.parse_f64("tol", t)?)?);
    }
    if let Some(m) = doc.integer::<usize>("max_iter")? {
        solver.max_iter = m;
    }
    sim.solver = solver;
    sim.strategy = StrategyKind::MinMax;

    Ok(ExperimentConfig {
        sim,
        lambdas,
        out_dir: doc.raw("out_dir").map(PathBuf::from),
        seed_source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = "
        # reference network
        n_nodes        = 4
        initial_energy = 2 J
        period         = 30 s
        packet_bits    = 30 bit
        noise          = -30 dB
        lambda         = 1 packets
        runs           = 1000
        seed           = 1
    ";

    #[test]
    fn reference_config_matches_defaults() {
        let c = parse_config(REFERENCE, None).unwrap();
        assert_eq!(c.sim.n_nodes, 4);
        assert!((c.sim.noise.sigma_sq() - 1e-3).abs() < 1e-18);
        assert_eq!(c.lambdas, vec![1.0]);
        assert_eq!(c.seed_source, SeedSource::Config);
        assert_eq!(c.sim.runs, 1000);
    }

    #[test]
    fn seed_precedence() {
        let c = parse_config("runs = 3", Some("77")).unwrap();
        assert_eq!((c.sim.seed, c.seed_source.clone()), (77, SeedSource::Env));
        let c = parse_config("seed = 5", Some("77")).unwrap();
        assert_eq!((c.sim.seed, c.seed_source), (5, SeedSource::Config));
        let c = parse_config("", None).unwrap();
        assert_eq!((c.sim.seed, c.seed_source), (DEFAULT_SEED, SeedSource::Default));
        assert_eq!(parse_config("", Some("x")).unwrap_err().key, SEED_ENV);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("bogus = 1", "bogus"),
            ("period = 30", "period"),
            ("period = 30 min", "period"),
            ("noise = 0.001", "noise"),
            ("noise = -1 W", "noise"),
            ("lambda = 0 packets", "lambda"),
            ("runs = many", "runs"),
            ("runs = 0", "runs"),
            ("gains = 1, 2", "gains"),
            ("backend = simplex", "backend"),
            ("packet_bits = 2.5 bit", "packet_bits"),
            ("initial_energy = -1 J", "initial_energy"),
        ];
        for (text, key) in cases {
            let e = parse_config(text, None).unwrap_err();
            assert_eq!(e.key, key, "{text}: {e}");
        }
        let e = parse_config("runs = 1\nruns = 2", None).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("runs", Some(2)));
        assert!(parse_config("just words", None).is_err());
    }

    #[test]
    fn linear_noise_sweep_and_solver_keys() {
        let c = parse_config(
            "noise = 0.5 W\nlambdas = 0.2, 0.4 packets\nbackend = fw\ntol = 1e-12\nout_dir = figs",
            None,
        )
        .unwrap();
        assert_eq!(c.sim.noise.sigma_sq(), 0.5);
        assert_eq!(c.lambdas, vec![0.2, 0.4]);
        assert_eq!(c.sim.lambda, 0.2);
        assert_eq!(c.sim.solver.backend, Backend::FrankWolfe);
        assert_eq!(c.sim.solver.tol, Some(1e-12));
        assert_eq!(c.out_dir, Some(PathBuf::from("figs")));
    }
}
