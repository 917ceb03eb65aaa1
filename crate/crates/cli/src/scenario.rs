// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario documents: a JSON object with a `kind`, the parameters of that
//! kind and an optional `output` section. Unknown keys are rejected.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chiralwg::master::{build_bidirectional, build_cascaded, build_chiral, ChiralChannel, EmitterSpec, Generator};
use chiralwg::protocols::DeviceSpec;
use chiralwg::scattering::ChainEmitter;
use chiralwg::C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Scatter,
    Spectrum,
    Chain,
    Evolve,
    Steady,
    Trajectories,
    FieldMap,
    Transfer,
    DimerScan,
    Device,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::Scatter,
        Kind::Spectrum,
        Kind::Chain,
        Kind::Evolve,
        Kind::Steady,
        Kind::Trajectories,
        Kind::FieldMap,
        Kind::Transfer,
        Kind::DimerScan,
        Kind::Device,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Scatter => "scatter",
            Kind::Spectrum => "spectrum",
            Kind::Chain => "chain",
            Kind::Evolve => "evolve",
            Kind::Steady => "steady",
            Kind::Trajectories => "trajectories",
            Kind::FieldMap => "field-map",
            Kind::Transfer => "transfer",
            Kind::DimerScan => "dimer-scan",
            Kind::Device => "device",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Kind::ALL.iter().map(|k| k.as_str()).collect();
                CliError::Config(format!("unknown kind {s:?}, expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Layout of tabular results; reports are always JSON.
    #[serde(default)]
    pub format: Format,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: Format::Csv,
        }
    }
}

pub fn default_dir() -> PathBuf {
    PathBuf::from("chiralwg-out")
}

fn two_pi() -> f64 {
    2.0 * PI
}

fn zero() -> f64 {
    0.0
}

macro_rules! default_value {
    ($name:ident, $ty:ty, $v:expr) => {
        fn $name() -> $ty {
            $v
        }
    };
}

default_value!(spectrum_min, f64, -5.0);
default_value!(spectrum_max, f64, 5.0);
default_value!(spectrum_points, usize, 201);
default_value!(evolve_samples, usize, 101);
default_value!(default_atol, f64, 1e-10);
default_value!(default_rtol, f64, 1e-8);
default_value!(default_eigenvalues, usize, 8);
default_value!(default_n_traj, usize, 1000);
default_value!(default_checkpoints, usize, 10);
default_value!(default_n1, f64, 1.45);
default_value!(default_n2, f64, 1.0);
default_value!(grazing, f64, PI / 2.0);
default_value!(default_wavelength, f64, 780.0);
default_value!(default_x_min, f64, -1.0);
default_value!(default_nx, usize, 401);
default_value!(one_usize, usize, 1);
default_value!(one, f64, 1.0);
default_value!(default_t_center, f64, 10.0);
default_value!(default_ratios, Vec<f64>, vec![0.0]);
default_value!(default_phases, Vec<f64>, (0..32).map(|i| i as f64 * PI / 16.0).collect());
default_value!(
    default_inputs,
    Vec<[f64; 2]>,
    vec![[PI, 0.0], [PI / 2.0, 0.0], [PI / 2.0, PI / 2.0]]
);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterParams {
    pub beta_plus: f64,
    pub beta_minus: f64,
    /// In units of the total decay rate.
    #[serde(default)]
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub beta_plus: f64,
    pub beta_minus: f64,
    #[serde(default = "spectrum_min")]
    pub detuning_min: f64,
    #[serde(default = "spectrum_max")]
    pub detuning_max: f64,
    #[serde(default = "spectrum_points")]
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub emitters: Vec<ChainEmitter>,
    /// Propagation phase between neighbours; one fewer than emitters.
    #[serde(default)]
    pub phases: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Chiral,
    Cascaded,
    Bidirectional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterParams {
    pub position: f64,
    pub gamma_right: f64,
    #[serde(default)]
    pub gamma_left: f64,
    #[serde(default)]
    pub gamma_loss: f64,
    #[serde(default)]
    pub detuning: f64,
    /// Complex Rabi amplitude as `[re, im]`.
    #[serde(default)]
    pub drive: [f64; 2],
}

/// Builds the generator for a list of emitters on one channel.
pub fn system_generator(emitters: &[EmitterParams], wavenumber: f64, model: Model) -> Result<Generator> {
    let specs = emitters
        .iter()
        .map(|e| {
            EmitterSpec::new(e.position, e.gamma_right, e.gamma_left, e.gamma_loss)
                .with_drive(C64::new(e.drive[0], e.drive[1]), e.detuning)
        })
        .collect();
    let channel = ChiralChannel::new(specs, wavenumber)?;
    Ok(match model {
        Model::Chiral => build_chiral(&channel)?,
        Model::Cascaded => build_cascaded(&channel)?,
        Model::Bidirectional => build_bidirectional(&channel)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    pub emitters: Vec<EmitterParams>,
    #[serde(default = "two_pi")]
    pub wavenumber: f64,
    #[serde(default)]
    pub model: Model,
    /// Initial product state, one `g`/`e` label per emitter.
    pub initial: String,
    pub t_final: f64,
    #[serde(default = "evolve_samples")]
    pub samples: usize,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
}

impl EvolveParams {
    pub fn generator(&self) -> Result<Generator> {
        system_generator(&self.emitters, self.wavenumber, self.model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyParams {
    pub emitters: Vec<EmitterParams>,
    #[serde(default = "two_pi")]
    pub wavenumber: f64,
    #[serde(default)]
    pub model: Model,
    /// Number of leading Liouvillian eigenvalues reported.
    #[serde(default = "default_eigenvalues")]
    pub eigenvalues: usize,
}

impl SteadyParams {
    pub fn generator(&self) -> Result<Generator> {
        system_generator(&self.emitters, self.wavenumber, self.model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoriesParams {
    pub emitters: Vec<EmitterParams>,
    #[serde(default = "two_pi")]
    pub wavenumber: f64,
    #[serde(default)]
    pub model: Model,
    pub initial: String,
    pub t_final: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    /// Number of equally spaced averaging times in `(0, t_final]`.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
}

impl TrajectoriesParams {
    pub fn generator(&self) -> Result<Generator> {
        system_generator(&self.emitters, self.wavenumber, self.model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMapParams {
    #[serde(default = "default_n1")]
    pub n1: f64,
    #[serde(default = "default_n2")]
    pub n2: f64,
    /// Angle of incidence (rad).
    #[serde(default = "grazing")]
    pub theta: f64,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    /// Grid in wavelengths; the evanescent side is x ≤ 0.
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "zero")]
    pub x_max: f64,
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "zero")]
    pub y_min: f64,
    #[serde(default = "zero")]
    pub y_max: f64,
    #[serde(default = "one_usize")]
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferParams {
    #[serde(default = "one")]
    pub gamma_max: f64,
    /// Defaults to `gamma_max`.
    #[serde(default)]
    pub slope: Option<f64>,
    #[serde(default = "default_t_center")]
    pub t_center: f64,
    /// Defaults to `t_center`.
    #[serde(default)]
    pub t_mirror: Option<f64>,
    #[serde(default)]
    pub loss: f64,
    /// Defaults to `2·t_center + 10/gamma_max`.
    #[serde(default)]
    pub t_final: Option<f64>,
    /// Coordinate-descent sweeps over slope and mirror time; 0 keeps the
    /// pulse as given.
    #[serde(default)]
    pub optimize_sweeps: usize,
    /// Input qubits as Bloch angles `[θ, φ]`.
    #[serde(default = "default_inputs")]
    pub inputs: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimerScanParams {
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub loss: f64,
    #[serde(default)]
    pub detuning: f64,
    #[serde(default)]
    pub kx: f64,
    #[serde(default)]
    pub global_phase: f64,
    pub omegas: Vec<f64>,
    #[serde(default = "default_phases")]
    pub phases: Vec<f64>,
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    pub device: DeviceSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Scatter(ScatterParams),
    Spectrum(SpectrumParams),
    Chain(ChainParams),
    Evolve(EvolveParams),
    Steady(SteadyParams),
    Trajectories(TrajectoriesParams),
    FieldMap(FieldMapParams),
    Transfer(TransferParams),
    DimerScan(DimerScanParams),
    Device(DeviceParams),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub kind: Kind,
    pub params: Params,
    pub output: OutputSpec,
}

fn typed<T: DeserializeOwned>(kind: Kind, map: Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(map))
        .map_err(|e| CliError::Config(format!("{kind} scenario: {e}")))
}

impl Params {
    fn parse(kind: Kind, map: Map<String, Value>) -> Result<Self> {
        let mut params = match kind {
            Kind::Scatter => Params::Scatter(typed(kind, map)?),
            Kind::Spectrum => Params::Spectrum(typed(kind, map)?),
            Kind::Chain => Params::Chain(typed(kind, map)?),
            Kind::Evolve => Params::Evolve(typed(kind, map)?),
            Kind::Steady => Params::Steady(typed(kind, map)?),
            Kind::Trajectories => Params::Trajectories(typed(kind, map)?),
            Kind::FieldMap => Params::FieldMap(typed(kind, map)?),
            Kind::Transfer => Params::Transfer(typed(kind, map)?),
            Kind::DimerScan => Params::DimerScan(typed(kind, map)?),
            Kind::Device => Params::Device(typed(kind, map)?),
        };
        if let Params::Transfer(p) = &mut params {
            p.slope.get_or_insert(p.gamma_max);
            p.t_mirror.get_or_insert(p.t_center);
            let t_final = 2.0 * p.t_center + 10.0 / p.gamma_max;
            p.t_final.get_or_insert(t_final);
        }
        Ok(params)
    }

    fn to_value(&self) -> Value {
        let v = match self {
            Params::Scatter(p) => serde_json::to_value(p),
            Params::Spectrum(p) => serde_json::to_value(p),
            Params::Chain(p) => serde_json::to_value(p),
            Params::Evolve(p) => serde_json::to_value(p),
            Params::Steady(p) => serde_json::to_value(p),
            Params::Trajectories(p) => serde_json::to_value(p),
            Params::FieldMap(p) => serde_json::to_value(p),
            Params::Transfer(p) => serde_json::to_value(p),
            Params::DimerScan(p) => serde_json::to_value(p),
            Params::Device(p) => serde_json::to_value(p),
        };
        v.expect("parameter structs serialize")
    }
}

impl Scenario {
    /// Validates a scenario document. `kind` must match the document's own
    /// `kind` when both are given.
    pub fn from_value(value: Value, kind: Option<Kind>) -> Result<Self> {
        let Value::Object(mut map) = value else {
            return Err(CliError::Config("scenario must be a JSON object".into()));
        };
        let declared = match map.remove("kind") {
            None => None,
            Some(Value::String(s)) => Some(s.parse::<Kind>()?),
            Some(other) => {
                return Err(CliError::Config(format!("kind must be a string, got {other}")));
            }
        };
        let kind = match (kind, declared) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!(
                    "command kind {a} does not match scenario kind {b}"
                )));
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(CliError::Config("missing key \"kind\"".into())),
        };
        let output = match map.remove("output") {
            None => OutputSpec::default(),
            Some(v) => serde_json::from_value(v)
                .map_err(|e| CliError::Config(format!("output section: {e}")))?,
        };
        let params = Params::parse(kind, map)?;
        Ok(Self {
            kind,
            params,
            output,
        })
    }

    /// Resolved physics parameters (defaults filled) with the kind.
    pub fn params_value(&self) -> Value {
        let mut v = self.params.to_value();
        if let Value::Object(map) = &mut v {
            map.insert("kind".into(), Value::String(self.kind.as_str().into()));
        }
        v
    }

    /// Full document; parsing it again yields the same scenario.
    pub fn to_value(&self) -> Value {
        let mut v = self.params_value();
        if let Value::Object(map) = &mut v {
            map.insert(
                "output".into(),
                serde_json::to_value(&self.output).expect("output spec serializes"),
            );
        }
        v
    }
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub kind: Option<Kind>,
    /// `key=value` pairs; dotted keys address nested objects, values are
    /// JSON when they parse as JSON and strings otherwise.
    pub set: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("empty segment in key {key:?}")));
        }
        let Value::Object(map) = cur else {
            return Err(CliError::Config(format!(
                "cannot set {key:?}: {:?} is not an object",
                parts[..i].join(".")
            )));
        };
        if i + 1 == parts.len() {
            map.insert((*part).into(), value);
            return Ok(());
        }
        cur = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("split yields at least one segment")
}

pub fn apply_overrides(doc: &mut Value, overrides: &Overrides) -> Result<()> {
    for item in &overrides.set {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {item:?}")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
        set_path(doc, key.trim(), value)?;
    }
    if let Some(seed) = overrides.seed {
        set_path(doc, "seed", Value::from(seed))?;
    }
    if let Some(out) = &overrides.out {
        let dir = out
            .to_str()
            .ok_or_else(|| CliError::Config("output directory is not valid UTF-8".into()))?;
        set_path(doc, "output.dir", Value::String(dir.into()))?;
    }
    Ok(())
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario_with(path, &Overrides::default())
}

pub fn parse_scenario_with(path: &Path, overrides: &Overrides) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    apply_overrides(&mut doc, overrides)?;
    Scenario::from_value(doc, overrides.kind)
}
