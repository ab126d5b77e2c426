//! Flat `key = value` configuration. Complex numbers are written `re,im`.

use crate::CliError;
use qpurify_core::dephasing::{optimal_tau, DephasingParams};
use qpurify_core::dissipative::{DissipativeParams, Measurement};
use qpurify_core::linalg::{c64, is_density, ket_down, ket_up, projector2};
use qpurify_core::{CMat2, CVec2, C64};
use std::collections::BTreeMap;
use std::path::Path;

pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.conf");

const KNOWN_KEYS: &[&str] = &[
    "model",
    "omega",
    "omega_x",
    "omega_s",
    "g",
    "gamma",
    "gamma_tau",
    "tau",
    "delta_e",
    "delta_e2",
    "delta_eplus",
    "alpha",
    "initial_state",
    "n_steps",
    "outputs",
    "seed",
    "tol",
    "axis1",
    "axis2",
    "axis3",
    "metric",
];

/// Raw key/value pairs, later entries overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("line {}: expected key = value, got {raw:?}", i + 1))
            })?;
            map.set(k.trim(), v.trim())?;
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Usage(format!("unknown config key {key:?}")));
        }
        // gamma and gamma_tau are two spellings of one parameter
        match key {
            "gamma" => self.entries.remove("gamma_tau"),
            "gamma_tau" => self.entries.remove("gamma"),
            _ => None,
        };
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected key=value, got {assignment:?}")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Usage(format!("missing config key {key:?}")))
    }

    fn real(&self, key: &str) -> Result<f64, CliError> {
        parse_real(key, self.required(key)?)
    }

    fn real_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        self.get(key).map_or(Ok(default), |v| parse_real(key, v))
    }
}

pub fn parse_real(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{key}: {v:?} is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::Usage(format!("{key}: {v:?} is not finite")));
    }
    Ok(x)
}

pub fn parse_complex(key: &str, v: &str) -> Result<C64, CliError> {
    let (re, im) = v.split_once(',').unwrap_or((v, "0"));
    Ok(c64(parse_real(key, re)?, parse_real(key, im)?))
}

pub fn format_complex(z: C64) -> String {
    format!("{:?},{:?}", z.re, z.im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Dephasing,
    Dissipative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Dephasing(DephasingParams),
    Dissipative(DissipativeParams),
}

impl ModelParams {
    pub fn model(&self) -> Model {
        match self {
            ModelParams::Dephasing(_) => Model::Dephasing,
            ModelParams::Dissipative(_) => Model::Dissipative,
        }
    }

    pub fn gamma_tau(&self) -> f64 {
        match self {
            ModelParams::Dephasing(p) => p.gamma * p.tau,
            ModelParams::Dissipative(p) => p.gamma_tau(),
        }
    }
}

/// CSV columns of `run`, in output order.
pub const RUN_COLUMNS: [&str; 8] = [
    "n",
    "trace",
    "purity",
    "fid_target",
    "rho_uu_re",
    "rho_ud_re",
    "rho_ud_im",
    "rho_dd_re",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub initial_state: CMat2,
    pub n_steps: usize,
    pub outputs: Vec<&'static str>,
    pub seed: u64,
    pub tol: Option<f64>,
}

fn preset(name: &str) -> Option<CMat2> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match name {
        "up" => Some(projector2(&ket_up())),
        "down" => Some(projector2(&ket_down())),
        "mixed" => Some(CMat2::identity() * c64(0.5, 0.0)),
        "plusx" => Some(projector2(&CVec2::new(c64(s, 0.0), c64(s, 0.0)))),
        _ => None,
    }
}

/// `up | down | mixed | plusx`, or four complex entries `uu; ud; du; dd`.
pub fn parse_state(v: &str) -> Result<CMat2, CliError> {
    if let Some(m) = preset(v) {
        return Ok(m);
    }
    let parts: Vec<&str> = v.split(';').collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "initial_state: expected up, down, mixed, plusx or four entries 'uu; ud; du; dd', got {v:?}"
        )));
    }
    let e: Vec<C64> = parts
        .iter()
        .map(|p| parse_complex("initial_state", p.trim()))
        .collect::<Result<_, _>>()?;
    let rho = CMat2::new(e[0], e[1], e[2], e[3]);
    if !is_density(&rho, 1e-9) {
        return Err(CliError::Usage(format!(
            "initial_state {v:?} is not a density matrix"
        )));
    }
    Ok(rho)
}

fn gamma_of(map: &ConfigMap, tau: f64) -> Result<f64, CliError> {
    match (map.get("gamma"), map.get("gamma_tau")) {
        (Some(g), _) => parse_real("gamma", g),
        (None, Some(gt)) => Ok(parse_real("gamma_tau", gt)? / tau),
        (None, None) => Ok(0.0),
    }
}

fn invalid(e: qpurify_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

impl RunConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self, CliError> {
        let params = match map.get("model").unwrap_or("dissipative") {
            "dissipative" => {
                let tau = map.real("tau")?;
                let measurement = match map.get("alpha").unwrap_or("1,0") {
                    "up" | "inf" => Measurement::Up,
                    a => Measurement::Alpha(parse_complex("alpha", a)?),
                };
                let p = DissipativeParams {
                    omega: map.real("omega")?,
                    g: map.real("g")?,
                    gamma: gamma_of(map, tau)?,
                    delta_e2: map.real_or("delta_e2", 0.0)?,
                    delta_eplus: map.real_or("delta_eplus", 0.0)?,
                    tau,
                    measurement,
                };
                p.validate().map_err(invalid)?;
                ModelParams::Dissipative(p)
            }
            "dephasing" => {
                let mut p = DephasingParams {
                    omega_x: map.real("omega_x")?,
                    omega_s: map.real("omega_s")?,
                    g: map.real("g")?,
                    gamma: 0.0,
                    delta_e: map.real_or("delta_e", 0.0)?,
                    tau: 1.0,
                };
                p.tau = match map.required("tau")? {
                    "optimal" => optimal_tau(&p).map_err(invalid)?.0,
                    t => parse_real("tau", t)?,
                };
                p.gamma = gamma_of(map, p.tau)?;
                p.validate().map_err(invalid)?;
                ModelParams::Dephasing(p)
            }
            m => {
                return Err(CliError::Usage(format!(
                    "model must be dephasing or dissipative, got {m:?}"
                )))
            }
        };
        let initial_state = parse_state(map.get("initial_state").unwrap_or("mixed"))?;
        let n_steps = match map.get("n_steps") {
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Usage(format!("n_steps: {v:?} is not a count")))?,
            None => 0,
        };
        let outputs = match map.get("outputs") {
            None | Some("all") => RUN_COLUMNS.to_vec(),
            Some(list) => {
                let mut cols = Vec::new();
                for name in list.split(',').map(str::trim) {
                    let c = RUN_COLUMNS.iter().find(|c| **c == name).ok_or_else(|| {
                        CliError::Usage(format!("unknown output column {name:?}"))
                    })?;
                    cols.push(*c);
                }
                cols
            }
        };
        let seed = match map.get("seed") {
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Usage(format!("seed: {v:?} is not an integer")))?,
            None => 0,
        };
        let tol = map.get("tol").map(|v| parse_real("tol", v)).transpose()?;
        Ok(Self {
            params,
            initial_state,
            n_steps,
            outputs,
            seed,
            tol,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_resolves() {
        let cfg = RunConfig::from_map(&ConfigMap::parse(DEFAULT_CONFIG).unwrap()).unwrap();
        assert_eq!(cfg.params.model(), Model::Dissipative);
        assert!((cfg.params.gamma_tau() - 0.01).abs() < 1e-15);
        assert_eq!(cfg.outputs.len(), 8);
    }

    #[test]
    fn overrides_replace_values() {
        let mut m = ConfigMap::parse("model = dissipative\ngamma_tau = 0.1 # comment\n").unwrap();
        m.apply("gamma=0.5").unwrap();
        assert_eq!(m.get("gamma_tau"), None);
        assert_eq!(m.get("gamma"), Some("0.5"));
        assert!(m.apply("bogus=1").is_err());
        assert!(m.apply("novalue").is_err());
        assert!(ConfigMap::parse("just words").is_err());
    }

    #[test]
    fn complex_values() {
        assert_eq!(parse_complex("a", "1.5,-2").unwrap(), c64(1.5, -2.0));
        assert_eq!(parse_complex("a", "3").unwrap(), c64(3.0, 0.0));
        assert!(parse_complex("a", "x,1").is_err());
        assert!(parse_real("a", "inf").is_err());
        assert_eq!(format_complex(c64(0.1, -2.0)), "0.1,-2.0");
    }

    #[test]
    fn states() {
        assert_eq!(parse_state("up").unwrap()[(0, 0)], c64(1.0, 0.0));
        let r = parse_state("0.5,0; 0.1,0.2; 0.1,-0.2; 0.5,0").unwrap();
        assert_eq!(r[(0, 1)], c64(0.1, 0.2));
        assert!(parse_state("1,0; 0,0; 0,0; 1,0").is_err());
        assert!(parse_state("sideways").is_err());
    }

    #[test]
    fn dephasing_optimal_tau() {
        let m = ConfigMap::parse(
            "model = dephasing\nomega_x = 1\nomega_s = 1\ng = 0.5\ntau = optimal\n",
        )
        .unwrap();
        let cfg = RunConfig::from_map(&m).unwrap();
        let ModelParams::Dephasing(p) = cfg.params else {
            panic!()
        };
        assert!((p.tau - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(p.gamma, 0.0);
    }

    #[test]
    fn invalid_parameters_are_usage_errors() {
        let m = ConfigMap::parse("omega = 1\ng = 2\ntau = 1\n").unwrap();
        assert!(matches!(RunConfig::from_map(&m), Err(CliError::Usage(_))));
        let m = ConfigMap::parse("omega = 2\ng = 1\ntau = 1\noutputs = n,zzz\n").unwrap();
        assert!(RunConfig::from_map(&m).is_err());
    }
}
