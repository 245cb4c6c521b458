//! Grid persistence (CSV, JSON, PGM), run configuration and gate specs.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{Engine, EpsilonScan, GridMeta, LightconeGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridFormat {
    Csv,
    Json,
    Pgm,
}

impl GridFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => Ok(GridFormat::Csv),
            Some("json") => Ok(GridFormat::Json),
            Some("pgm") => Ok(GridFormat::Pgm),
            _ => Err(Error::input(format!(
                "cannot infer output format from '{}'; use .csv, .json or .pgm",
                path.display()
            ))),
        }
    }
}

impl std::str::FromStr for GridFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(GridFormat::Csv),
            "json" => Ok(GridFormat::Json),
            "pgm" => Ok(GridFormat::Pgm),
            other => Err(Error::input(format!("unknown format '{other}'"))),
        }
    }
}

/// `x` with nine significant digits.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let e = x.abs().log10().floor() as i32;
    let decimals = 8 - e;
    if (0..=20).contains(&decimals) {
        format!("{:.*}", decimals as usize, x)
    } else {
        format!("{x:.8e}")
    }
}

pub fn grid_to_csv(grid: &LightconeGrid) -> String {
    let mut out = String::from("t");
    for s in 1..=grid.sites() {
        out.push(',');
        out.push_str(&s.to_string());
    }
    out.push('\n');
    for (t, row) in grid.times.iter().zip(&grid.values) {
        out.push_str(&format_sig9(*t));
        for v in row {
            out.push(',');
            out.push_str(&format_sig9(*v));
        }
        out.push('\n');
    }
    out
}

/// `epsilon,error` rows of an ε scan.
pub fn scan_to_csv(scan: &EpsilonScan) -> String {
    let mut out = String::from("epsilon,error\n");
    for (e, err) in scan.epsilons.iter().zip(&scan.errors) {
        out.push_str(&format!("{},{}\n", format_sig9(*e), format_sig9(*err)));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

/// Binary 8-bit PGM, one pixel row per time, `round(255·𝒞)`.
pub fn grid_to_pgm(grid: &LightconeGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.sites(), grid.rows()).into_bytes();
    for row in &grid.values {
        out.extend(row.iter().map(|v| (255.0 * v.clamp(0.0, 1.0)).round() as u8));
    }
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

pub fn write_grid(grid: &LightconeGrid, path: &Path, format: GridFormat) -> Result<()> {
    let bytes = match format {
        GridFormat::Csv => grid_to_csv(grid).into_bytes(),
        GridFormat::Json => {
            let mut s = serde_json::to_string_pretty(grid).map_err(|e| Error::input(e.to_string()))?;
            s.push('\n');
            s.into_bytes()
        }
        GridFormat::Pgm => grid_to_pgm(grid),
    };
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&bytes).map_err(io_err(path))
}

/// Parses the CSV layout written by [`write_grid`]; metadata is not stored
/// there, so only `n` is recovered.
pub fn parse_grid_csv(text: &str) -> Result<LightconeGrid> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::input("empty CSV"))?;
    let n = header.split(',').count() - 1;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (k, line) in lines.enumerate() {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::input(format!("CSV row {}: {e}", k + 1)))?;
        if fields.len() != n + 1 {
            return Err(Error::input(format!("CSV row {} has {} fields, expected {}", k + 1, fields.len(), n + 1)));
        }
        times.push(fields[0]);
        values.push(fields[1..].to_vec());
    }
    let meta = GridMeta {
        engine: "unknown".into(),
        n,
        nu: f64::NAN,
        epsilon: None,
        dt: f64::NAN,
        periods: 0,
        base_seed: 0,
        realizations: 0,
        b: String::new(),
        probe: String::new(),
        gates: None,
    };
    LightconeGrid::new(times, values, meta)
}

pub fn read_grid(path: &Path) -> Result<LightconeGrid> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    match GridFormat::from_path(path)? {
        GridFormat::Csv => parse_grid_csv(&text),
        GridFormat::Json => serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display()))),
        GridFormat::Pgm => Err(Error::input("PGM files are write-only")),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: Option<usize>,
    pub nu: Option<f64>,
    pub dt: Option<f64>,
    pub periods: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    /// Probe letter (`"Z"`); the probe is swept over every site.
    pub a: Option<String>,
    /// Evolved operator with its site (`"X15"`).
    pub b: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub realizations: Option<usize>,
    pub base_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: String,
    pub format: Option<GridFormat>,
}

/// Everything a run needs. Every field is optional so that a config file and
/// command-line flags can be layered.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub engine: Option<Engine>,
    #[serde(default)]
    pub model: ModelConfig,
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub observables: ObservableConfig,
    pub gates: Option<Vec<String>>,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub output: Vec<OutputConfig>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(mut self, over: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($f:ident).+) => {
                if over.$($f).+.is_some() {
                    self.$($f).+ = over.$($f).+;
                }
            };
        }
        take!(engine);
        take!(model.n);
        take!(model.nu);
        take!(model.dt);
        take!(model.periods);
        take!(epsilon);
        take!(observables.a);
        take!(observables.b);
        take!(gates);
        take!(ensemble.realizations);
        take!(ensemble.base_seed);
        take!(threads);
        if !over.output.is_empty() {
            self.output = over.output;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.model.n {
            if n < 2 {
                return Err(Error::input("model.n: need at least 2 qubits"));
            }
        }
        if let Some(nu) = self.model.nu {
            if !(nu >= 0.0 && nu.is_finite()) {
                return Err(Error::input(format!("model.nu: must be finite and ≥ 0, got {nu}")));
            }
        }
        if let Some(dt) = self.model.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::input(format!("model.dt: must be positive, got {dt}")));
            }
        }
        if self.model.periods == Some(0) {
            return Err(Error::input("model.periods: must be ≥ 1"));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::input(format!("epsilon: must be positive, got {e}")));
            }
        }
        if self.ensemble.realizations == Some(0) {
            return Err(Error::input("ensemble.realizations: must be ≥ 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::input("threads: must be ≥ 1"));
        }
        if let Some(a) = &self.observables.a {
            match parse_observable(a) {
                Ok((_, None)) => {}
                Ok((_, Some(_))) => {
                    return Err(Error::input(
                        "observables.a: the probe runs over every site; give a letter only, e.g. Z",
                    ))
                }
                Err(e) => return Err(Error::input(format!("observables.a: {e}"))),
            }
        }
        if let Some(b) = &self.observables.b {
            match parse_observable(b) {
                Ok((_, Some(_))) => {}
                Ok((_, None)) => return Err(Error::input("observables.b: needs a site, e.g. X15")),
                Err(e) => return Err(Error::input(format!("observables.b: {e}"))),
            }
        }
        for g in self.gates.iter().flatten() {
            parse_gate_spec(g).map_err(|e| Error::input(format!("gates: {e}")))?;
        }
        Ok(())
    }
}

/// `"X15"` → `('X', Some(15))`, `"Z"` → `('Z', None)`.
pub fn parse_observable(spec: &str) -> Result<(char, Option<usize>)> {
    let spec = spec.trim();
    let mut chars = spec.chars();
    let letter = chars.next().ok_or_else(|| Error::input("empty observable"))?.to_ascii_uppercase();
    if !matches!(letter, 'X' | 'Y' | 'Z') {
        return Err(Error::input(format!("observable '{spec}' must start with X, Y or Z")));
    }
    let rest = chars.as_str();
    if rest.is_empty() {
        return Ok((letter, None));
    }
    let site: usize = rest.parse().map_err(|_| Error::input(format!("bad site in observable '{spec}'")))?;
    if site == 0 {
        return Err(Error::input("sites are 1-based"));
    }
    Ok((letter, Some(site)))
}

/// `"17@4.71238898"` → `(17, 4.71238898)`.
pub fn parse_gate_spec(spec: &str) -> Result<(usize, f64)> {
    let (q, t) = spec
        .trim()
        .split_once('@')
        .ok_or_else(|| Error::input(format!("gate '{spec}' is not of the form qubit@time")))?;
    let q: usize = q.trim().parse().map_err(|_| Error::input(format!("bad qubit in gate '{spec}'")))?;
    let t: f64 = t.trim().parse().map_err(|_| Error::input(format!("bad time in gate '{spec}'")))?;
    if q == 0 || !(t > 0.0) || !t.is_finite() {
        return Err(Error::input(format!("gate '{spec}' needs qubit ≥ 1 and time > 0")));
    }
    Ok((q, t))
}

/// Snaps a gate time to the end of the nearest Gaussian layer.
pub fn snap_gate_time(t: f64, dt: f64) -> usize {
    let k = (t / dt).round();
    if (t / dt - k).abs() > 1e-6 {
        log::warn!("gate time {t} is off the layer grid; snapped to {}", k * dt);
    }
    k.max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: Vec<Vec<f64>>, times: Vec<f64>) -> LightconeGrid {
        let n = values[0].len();
        let meta = GridMeta {
            engine: "approx".into(),
            n,
            nu: 2.0,
            epsilon: Some(0.2),
            dt: 0.5,
            periods: 1,
            base_seed: 42,
            realizations: 3,
            b: "X1".into(),
            probe: "Z".into(),
            gates: None,
        };
        LightconeGrid::new(times, values, meta).unwrap()
    }

    #[test]
    fn pgm_white_pixel() {
        let g = grid(vec![vec![1.0]], vec![0.0]);
        let bytes = grid_to_pgm(&g);
        assert_eq!(bytes, b"P5\n1 1\n255\n\xff");
    }

    #[test]
    fn csv_round_trip() {
        let values = vec![vec![0.123456789012, 1.0, 0.0], vec![0.7071067811865476, 3.3e-5, 0.5]];
        let g = grid(values.clone(), vec![0.0, 0.7853981633974483]);
        let back = parse_grid_csv(&grid_to_csv(&g)).unwrap();
        for (ra, rb) in values.iter().zip(&back.values) {
            for (a, b) in ra.iter().zip(rb) {
                assert!((a - b).abs() <= 5e-9 * a.abs().max(1e-300), "{a} vs {b}");
            }
        }
        assert_eq!(grid_to_csv(&back), grid_to_csv(&g));
    }

    #[test]
    fn csv_header() {
        let g = grid(vec![vec![0.5, 0.25]], vec![0.0]);
        assert!(grid_to_csv(&g).starts_with("t,1,2\n0,0.500000000,0.250000000\n"));
    }

    #[test]
    fn json_keeps_seed() {
        let g = grid(vec![vec![0.5]], vec![0.0]);
        let s = serde_json::to_string(&g).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["meta"]["base_seed"], 42);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"engine":"approx","bogus":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"model":{"n":4,"q":1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"model":{"n":4},"epsilon":0.2}"#).is_ok());
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_json(r#"{"model":{"n":6,"nu":1.0},"epsilon":0.3}"#).unwrap();
        let flags = RunConfig { epsilon: Some(0.2), ..Default::default() };
        let m = file.merged(flags);
        assert_eq!(m.epsilon, Some(0.2));
        assert_eq!(m.model.n, Some(6));
    }

    #[test]
    fn gate_specs() {
        assert_eq!(parse_gate_spec("17@4.5").unwrap(), (17, 4.5));
        assert!(parse_gate_spec("17-4.5").is_err());
        assert!(parse_gate_spec("0@1").is_err());
        let dt = std::f64::consts::FRAC_PI_4;
        assert_eq!(snap_gate_time(4.71238898, dt), 6);
        assert_eq!(snap_gate_time(9.42477796, dt), 12);
    }

    #[test]
    fn observables() {
        assert_eq!(parse_observable("X15").unwrap(), ('X', Some(15)));
        assert_eq!(parse_observable("z").unwrap(), ('Z', None));
        assert!(parse_observable("Q1").is_err());
        assert!(parse_observable("X0").is_err());
    }
}
