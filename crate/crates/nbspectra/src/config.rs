//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, list values are comma separated.
//! Unknown keys, repeated keys and malformed values are errors carrying the line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentKind {
    TailRhoB,
    NormCurve,
    Crossover,
    Concentration,
    DirectedOutlier,
    MomentEnvelope,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::TailRhoB,
        ExperimentKind::NormCurve,
        ExperimentKind::Crossover,
        ExperimentKind::Concentration,
        ExperimentKind::DirectedOutlier,
        ExperimentKind::MomentEnvelope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TailRhoB => "tail-rho-b",
            ExperimentKind::NormCurve => "norm-curve",
            ExperimentKind::Crossover => "crossover",
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::DirectedOutlier => "directed-outlier",
            ExperimentKind::MomentEnvelope => "moment-envelope",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::TailRhoB => "frequency of rho(B) >= 1 + eps with Wilson intervals",
            ExperimentKind::NormCurve => "mean ||H|| against eta = sqrt(log n) / q with fitted constant",
            ExperimentKind::Crossover => "||H|| and lambda_2(A) / sqrt(d) along a degree grid",
            ExperimentKind::Concentration => "q * stddev(||H||) and row-sum tails against the Bennett envelope",
            ExperimentKind::DirectedOutlier => "centered spectral radius and outlier count for directed graphs",
            ExperimentKind::MomentEnvelope => "trace moments of B against the n^2 l^8 q^2 envelope",
        }
    }

    fn needs_hermitian(self) -> bool {
        !matches!(self, ExperimentKind::DirectedOutlier)
    }
}

/// How the `n` and `d` lists combine into grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// Every `n` with every degree.
    Product,
    /// `n[i]` with `d[i]`.
    Zip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// `hermitian-er` or `directed-er`.
    pub ensemble: String,
    pub n: Vec<usize>,
    /// Expected degrees.
    pub d: Vec<f64>,
    /// Degrees given as multiples of `ln n`.
    pub d_log: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// Row-sum tail thresholds `t` (concentration).
    pub t: Vec<f64>,
    /// Walk lengths (moment envelope).
    pub ell: Vec<usize>,
    pub grid: GridMode,
    pub normalization: Normalization,
    pub trials: usize,
    pub master_seed: u64,
    /// Random probes per stochastic trace estimate.
    pub probes: usize,
    /// Relative tolerance of the iterative eigensolvers.
    pub tol: f64,
    /// When false, `runtime_ms` is written as 0 so that output is byte-reproducible.
    pub timing: bool,
    pub output: Option<String>,
}

/// Scale of the centered matrix `A - P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `d^{-1/2}` with `d` the largest expected degree.
    Degree,
    /// `s^{-1/2}` with `s = max_i sum_j p_ij (1 - p_ij)`, so the largest expected squared
    /// row length is exactly 1.
    Variance,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::Degree => "degree",
            Normalization::Variance => "variance",
        }
    }
}

/// One grid point: dimension and expected degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub n: usize,
    pub d: f64,
}

impl ExperimentConfig {
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let degrees = |n: usize| -> Vec<f64> {
            let mut v = self.d.clone();
            v.extend(self.d_log.iter().map(|c| c * (n as f64).ln()));
            v
        };
        match self.grid {
            GridMode::Product => self.n.iter().flat_map(|&n| degrees(n).into_iter().map(move |d| GridPoint { n, d })).collect(),
            GridMode::Zip => self.n.iter().zip(&self.d).map(|(&n, &d)| GridPoint { n, d }).collect(),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let e = |m: &str| Err(err(None, m));
        if self.trials == 0 {
            return e("trials must be at least 1");
        }
        if self.n.is_empty() {
            return e("n must list at least one dimension");
        }
        if self.d.is_empty() && self.d_log.is_empty() {
            return e("d or d_log must list at least one degree");
        }
        if self.grid == GridMode::Zip && (self.d.len() != self.n.len() || !self.d_log.is_empty()) {
            return e("grid = zip needs n and d of equal length and no d_log");
        }
        if self.n.iter().any(|&n| n < 2) {
            return e("every n must be at least 2");
        }
        for p in self.grid_points() {
            if !(p.d > 0.0 && p.d <= p.n as f64) {
                return Err(err(None, format!("degree {} outside (0, n] for n = {}", p.d, p.n)));
            }
        }
        if self.epsilon.iter().any(|&x| !(x >= 0.0)) || self.t.iter().any(|&x| !(x > 0.0)) {
            return e("epsilon must be >= 0 and t > 0");
        }
        if self.ell.iter().any(|&l| l == 0) {
            return e("ell must be at least 1");
        }
        if self.probes == 0 || !(self.tol > 0.0) {
            return e("probes >= 1 and tol > 0 required");
        }
        let hermitian = self.ensemble == "hermitian-er";
        if !hermitian && self.ensemble != "directed-er" {
            return Err(err(None, format!("unknown ensemble '{}'", self.ensemble)));
        }
        if self.experiment.needs_hermitian() != hermitian {
            return Err(err(None, format!("{} needs a {} ensemble", self.experiment.name(), if hermitian { "directed" } else { "hermitian" })));
        }
        if matches!(self.experiment, ExperimentKind::TailRhoB | ExperimentKind::DirectedOutlier) && self.epsilon.is_empty() {
            return Err(err(None, format!("{} needs an epsilon list", self.experiment.name())));
        }
        Ok(())
    }
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize, key: &str, what: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| err(Some(line), format!("{key}: expected {what}, got '{s}'"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(value: &str, line: usize, key: &str, what: &str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| err(Some(line), format!("{key}: expected {what}, got '{value}'")))
}

const KEYS: [&str; 16] = [
    "experiment", "ensemble", "n", "d", "d_log", "epsilon", "t", "ell", "grid", "normalization", "trials", "master_seed",
    "probes", "tol", "timing", "output",
];

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut seen: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| err(Some(line), format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let Some(&key) = KEYS.iter().find(|&&k| k == key) else {
            return Err(err(Some(line), format!("unknown key '{key}'")));
        };
        if value.is_empty() {
            return Err(err(Some(line), format!("{key}: empty value")));
        }
        if let Some((first, _)) = seen.insert(key, (line, value)) {
            return Err(err(Some(line), format!("{key}: already set on line {first}")));
        }
    }
    let Some(&(line, name)) = seen.get("experiment") else {
        return Err(err(None, "missing experiment"));
    };
    let experiment = ExperimentKind::parse(name).ok_or_else(|| err(Some(line), format!("unknown experiment '{name}'")))?;
    let default_ensemble = if experiment.needs_hermitian() { "hermitian-er" } else { "directed-er" };
    let mut cfg = ExperimentConfig {
        experiment,
        ensemble: default_ensemble.to_string(),
        n: Vec::new(),
        d: Vec::new(),
        d_log: Vec::new(),
        epsilon: Vec::new(),
        t: if experiment == ExperimentKind::Concentration { vec![0.25, 0.5, 1.0] } else { Vec::new() },
        ell: if experiment == ExperimentKind::MomentEnvelope { vec![1, 2, 3, 4] } else { Vec::new() },
        grid: GridMode::Product,
        normalization: if experiment.needs_hermitian() { Normalization::Variance } else { Normalization::Degree },
        trials: 1,
        master_seed: 0,
        probes: 16,
        tol: 1e-10,
        timing: false,
        output: None,
    };
    for (&key, &(line, value)) in &seen {
        match key {
            "experiment" => {}
            "ensemble" => cfg.ensemble = value.to_string(),
            "n" => cfg.n = parse_list(value, line, key, "a list of integers")?,
            "d" => cfg.d = parse_list(value, line, key, "a list of numbers")?,
            "d_log" => cfg.d_log = parse_list(value, line, key, "a list of numbers")?,
            "epsilon" => cfg.epsilon = parse_list(value, line, key, "a list of numbers")?,
            "t" => cfg.t = parse_list(value, line, key, "a list of numbers")?,
            "ell" => cfg.ell = parse_list(value, line, key, "a list of integers")?,
            "grid" => {
                cfg.grid = match value {
                    "product" => GridMode::Product,
                    "zip" => GridMode::Zip,
                    _ => return Err(err(Some(line), format!("grid: expected product or zip, got '{value}'"))),
                }
            }
            "normalization" => {
                cfg.normalization = match value {
                    "degree" => Normalization::Degree,
                    "variance" => Normalization::Variance,
                    _ => return Err(err(Some(line), format!("normalization: expected degree or variance, got '{value}'"))),
                }
            }
            "trials" => cfg.trials = parse_one(value, line, key, "an integer")?,
            "master_seed" => cfg.master_seed = parse_one(value, line, key, "an unsigned integer")?,
            "probes" => cfg.probes = parse_one(value, line, key, "an integer")?,
            "tol" => cfg.tol = parse_one(value, line, key, "a number")?,
            "timing" => {
                cfg.timing = match value {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err(err(Some(line), format!("timing: expected on or off, got '{value}'"))),
                }
            }
            "output" => cfg.output = Some(value.to_string()),
            _ => unreachable!("key list and match arms agree"),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(None, format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_missing_experiment() {
        let e = parse_config("").unwrap_err();
        assert_eq!(e.to_string(), "missing experiment");
        assert_eq!(parse_config("# only a comment\n\n").unwrap_err().message, "missing experiment");
    }

    #[test]
    fn full_config() {
        let text = "experiment = tail-rho-b  # comment\nn = 100, 200\nd = 5\nd_log = 1.5\nepsilon = 0, 0.5\ntrials = 3\nmaster_seed = 9\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.experiment, ExperimentKind::TailRhoB);
        assert_eq!(c.n, vec![100, 200]);
        assert_eq!(c.trials, 3);
        let pts = c.grid_points();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[1].d, 1.5 * 100f64.ln());
        assert!(!c.timing);
        assert_eq!(c.normalization, Normalization::Variance);
        let c = parse_config("experiment = directed-outlier\nn = 10\nd = 2\nepsilon = 0.5\n").unwrap();
        assert_eq!(c.normalization, Normalization::Degree);
        assert!(parse_config("experiment = crossover\nn = 10\nd = 2\nnormalization = unit\n").unwrap_err().line == Some(4));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("experiment = crossover\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_config("experiment = crossover\nn = 10, x\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("'x'"));
        let e = parse_config("\n\nexperiment = nope\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = parse_config("experiment = crossover\ntrials = 2\ntrials = 3\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = parse_config("experiment crossover\n").unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn semantic_checks() {
        assert!(parse_config("experiment = crossover\nn = 10\n").is_err());
        assert!(parse_config("experiment = crossover\nn = 10\nd = 20\n").is_err());
        assert!(parse_config("experiment = crossover\nn = 10\nd = 2\ntrials = 0\n").is_err());
        assert!(parse_config("experiment = tail-rho-b\nn = 10\nd = 2\n").is_err());
        assert!(parse_config("experiment = directed-outlier\nn = 10\nd = 2\nepsilon = 0.5\nensemble = hermitian-er\n").is_err());
        assert!(parse_config("experiment = concentration\nn = 10, 20\nd = 2\ngrid = zip\n").is_err());
        let c = parse_config("experiment = concentration\nn = 10, 20\nd = 2, 3\ngrid = zip\n").unwrap();
        assert_eq!(c.grid_points(), vec![GridPoint { n: 10, d: 2.0 }, GridPoint { n: 20, d: 3.0 }]);
        assert_eq!(c.t, vec![0.25, 0.5, 1.0]);
    }

    #[test]
    fn every_kind_round_trips_its_name() {
        for k in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::parse(k.name()), Some(k));
        }
    }
}
