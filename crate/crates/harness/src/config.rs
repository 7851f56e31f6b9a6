//! Flat `key = value` scenario configuration.
//!
//! Keys are dotted (`memory.D_cm2_s = 13.2`). Physical quantities carry their
//! unit in the key suffix; frequencies accept `_MHz` (cyclic, multiplied by
//! 2 pi) or `_Mrad_s` (angular). Giving one quantity in two unit forms, or any
//! key the parser does not know, is an error.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gem_core::modes::ModeIndex;
use gem_core::scattering::{RateForm, Side};
use gem_core::MemoryParams;

use crate::error::{HarnessError, Result};

/// Environment variable that overrides `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "GEMSIM_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    Tem00Decay,
    HetVsCcd,
    TemMnDecay,
    Tem20PeakRatio,
    SelectiveRecall,
    ImageStorage,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [
        ScenarioId::Tem00Decay,
        ScenarioId::HetVsCcd,
        ScenarioId::TemMnDecay,
        ScenarioId::Tem20PeakRatio,
        ScenarioId::SelectiveRecall,
        ScenarioId::ImageStorage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::Tem00Decay => "tem00_decay",
            ScenarioId::HetVsCcd => "het_vs_ccd",
            ScenarioId::TemMnDecay => "tem_mn_decay",
            ScenarioId::Tem20PeakRatio => "tem20_peak_ratio",
            ScenarioId::SelectiveRecall => "selective_recall",
            ScenarioId::ImageStorage => "image_storage",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str() == s.trim())
            .ok_or_else(|| HarnessError::UnknownScenario(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    Modes(Vec<ModeIndex>),
    Image { path: PathBuf, carrier_waist: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskSpec {
    Full,
    Half(Side),
    Image(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Longitudinal {
    /// Broadband closed form `(1 - exp(-2 pi beta))^2`.
    ClosedForm,
    /// One longitudinal solver run with this many z nodes.
    Solver { nz: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Factorized,
    /// Full transverse-longitudinal solver; small grids only.
    Full3d,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSpec {
    pub on: bool,
    pub mask: MaskSpec,
    pub offset: (f64, f64),
    pub rate_form: RateForm,
    /// Control-on exposure of the write and of the read, seconds each. Only
    /// the TEM-20 peak-ratio scenario burns by default.
    pub rw_exposure: f64,
    /// Upper bound on diffusion/burn split steps during storage.
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub images: bool,
    /// Normalize every image of a run to one intensity scale.
    pub shared_scale: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub params: MemoryParams,
    pub grid_n: usize,
    pub grid_extent: f64,
    pub input: InputSpec,
    pub storage_times_us: Vec<u32>,
    pub control: ControlSpec,
    pub pulse_fwhm: f64,
    pub longitudinal: Longitudinal,
    pub pipeline: Pipeline,
    pub output: OutputSpec,
    pub seed: u64,
    /// Relative multiplicative noise added to efficiencies; zero disables it.
    pub noise: f64,
}

impl ScenarioConfig {
    /// Storage times in seconds.
    pub fn storage_times(&self) -> Vec<f64> {
        self.storage_times_us
            .iter()
            .map(|&t| f64::from(t) * 1e-6)
            .collect()
    }

    /// Apply the output directory override from the environment, if set.
    pub fn with_env_output(mut self) -> Self {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            self.output.dir = PathBuf::from(dir);
        }
        self
    }
}

/// Parsed key/value pairs before interpretation. Kept so that sweeps can
/// override single keys and rebuild.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: &str| HarnessError::Syntax {
                path: origin.to_string(),
                line: i + 1,
                message: message.to_string(),
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(syntax("malformed key"));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(syntax(&format!("key `{k}` repeated")));
            }
        }
        Ok(Self {
            entries,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Override one key. The key must be one the builder understands; unit
    /// variants of the same quantity are replaced.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !is_known_key(key) {
            return Err(HarnessError::UnknownKey(key.to_string()));
        }
        if let Some(base) = quantity_base(key) {
            self.entries.retain(|k, _| quantity_base(k) != Some(base));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn build(&self) -> Result<ScenarioConfig> {
        Builder::new(self).build()
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    RawConfig::load(path)?.build()
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    RawConfig::parse(text, "<string>", ".")?.build()
}

const CYCLIC: f64 = TAU * 1e6;

/// Quantities that take a unit suffix, with the factor to SI for each.
const QUANTITIES: &[(&str, &[(&str, f64)])] = &[
    ("memory.delta", &[("MHz", CYCLIC), ("Mrad_s", 1e6)]),
    ("memory.omega_c", &[("MHz", CYCLIC), ("Mrad_s", 1e6)]),
    ("memory.gamma", &[("MHz", CYCLIC), ("Mrad_s", 1e6)]),
    ("memory.delta0", &[("MHz", CYCLIC), ("Mrad_s", 1e6)]),
    ("memory.bandwidth", &[("MHz", CYCLIC), ("Mrad_s", 1e6)]),
    ("memory.gamma0", &[("per_s", 1.0)]),
    ("memory.gamma_c", &[("per_s", 1.0)]),
    ("memory.D", &[("cm2_s", 1e-4), ("m2_s", 1.0)]),
    ("memory.length", &[("cm", 1e-2), ("m", 1.0)]),
    ("memory.density", &[("per_m3", 1.0), ("per_cm3", 1e6)]),
    ("memory.control_waist", &[("mm", 1e-3)]),
    ("memory.probe_waist", &[("mm", 1e-3)]),
    ("memory.wavelength", &[("nm", 1e-9)]),
    ("grid.extent", &[("mm", 1e-3)]),
    ("input.carrier_waist", &[("mm", 1e-3)]),
    ("control.rw_exposure", &[("us", 1e-6)]),
    ("pulse.fwhm", &[("us", 1e-6)]),
];

const PLAIN_KEYS: &[&str] = &[
    "scenario",
    "memory.beta",
    "memory.compensate_light_shift",
    "grid.n",
    "input.mode",
    "input.modes",
    "input.image",
    "storage.times_us",
    "control.on",
    "control.mask",
    "control.offset_mm",
    "control.rate_form",
    "control.max_steps",
    "longitudinal.model",
    "longitudinal.nz",
    "pipeline.mode",
    "output.dir",
    "output.images",
    "output.shared_scale",
    "seed",
    "noise.level",
];

fn quantity_base(key: &str) -> Option<&'static str> {
    QUANTITIES.iter().find_map(|(base, units)| {
        units
            .iter()
            .any(|(u, _)| key.strip_prefix(base).and_then(|r| r.strip_prefix('_')) == Some(*u))
            .then_some(*base)
    })
}

pub fn is_known_key(key: &str) -> bool {
    PLAIN_KEYS.contains(&key) || quantity_base(key).is_some()
}

/// Every key the parser accepts, for help output.
pub fn known_keys() -> Vec<String> {
    let mut keys: Vec<String> = PLAIN_KEYS.iter().map(|s| s.to_string()).collect();
    for (base, units) in QUANTITIES {
        keys.extend(units.iter().map(|(u, _)| format!("{base}_{u}")));
    }
    keys.sort();
    keys
}

struct Builder<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<String>,
}

impl<'a> Builder<'a> {
    fn new(raw: &'a RawConfig) -> Self {
        Self {
            raw,
            used: BTreeSet::new(),
        }
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        let v = self.raw.get(key)?;
        self.used.insert(key.to_string());
        Some(v)
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| HarnessError::invalid(key, format!("cannot parse `{v}`"))),
        }
    }

    fn flag(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some("true" | "on" | "yes" | "1") => Ok(Some(true)),
            Some("false" | "off" | "no" | "0") => Ok(Some(false)),
            Some(v) => Err(HarnessError::invalid(
                key,
                format!("expected a boolean, got `{v}`"),
            )),
        }
    }

    /// A physical quantity in SI units, from whichever unit form is present.
    fn quantity(&mut self, base: &str) -> Result<Option<f64>> {
        let units = QUANTITIES
            .iter()
            .find(|(b, _)| *b == base)
            .map(|(_, u)| *u)
            .expect("registered quantity");
        let mut found = None;
        for (u, factor) in units {
            let key = format!("{base}_{u}");
            if let Some(v) = self.parsed::<f64>(&key)? {
                if found.is_some() {
                    return Err(HarnessError::DuplicateKey(base.to_string()));
                }
                if !v.is_finite() {
                    return Err(HarnessError::invalid(&key, "must be finite"));
                }
                found = Some(v * factor);
            }
        }
        Ok(found)
    }

    fn path(&mut self, key: &str) -> Option<PathBuf> {
        self.take(key).map(|v| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                self.raw.base_dir.join(p)
            }
        })
    }

    fn build(mut self) -> Result<ScenarioConfig> {
        let scenario: ScenarioId = self
            .take("scenario")
            .ok_or_else(|| HarnessError::Config("missing `scenario`".into()))?
            .parse()?;
        let params = self.params()?;

        let grid_n = self.parsed("grid.n")?.unwrap_or(256);
        let grid_extent = self.quantity("grid.extent")?.unwrap_or(12e-3);
        if grid_n < 8 || !(grid_extent > 0.0) {
            return Err(HarnessError::Config(
                "grid needs n >= 8 and a positive extent".into(),
            ));
        }

        let input = self.input(scenario, grid_extent)?;
        let storage_times_us = match self.take("storage.times_us") {
            Some(v) => parse_times(v).map_err(|m| HarnessError::invalid("storage.times_us", m))?,
            None => default_times(scenario),
        };

        let control = self.control(scenario)?;
        let pulse_fwhm = self.quantity("pulse.fwhm")?.unwrap_or(1e-6);
        if !(pulse_fwhm > 0.0) {
            return Err(HarnessError::invalid("pulse.fwhm_us", "must be positive"));
        }
        let control = ControlSpec {
            rw_exposure: match self.quantity("control.rw_exposure")? {
                Some(v) => v,
                None if scenario == ScenarioId::Tem20PeakRatio => pulse_fwhm,
                None => 0.0,
            },
            ..control
        };
        if control.rw_exposure < 0.0 {
            return Err(HarnessError::invalid(
                "control.rw_exposure_us",
                "must be non-negative",
            ));
        }

        let longitudinal = match self.take("longitudinal.model").unwrap_or("solver") {
            "solver" => Longitudinal::Solver {
                nz: self.parsed("longitudinal.nz")?.unwrap_or(128),
            },
            "closed_form" => Longitudinal::ClosedForm,
            other => {
                return Err(HarnessError::invalid(
                    "longitudinal.model",
                    format!("unknown model `{other}`"),
                ))
            }
        };
        let pipeline = match self.take("pipeline.mode").unwrap_or("factorized") {
            "factorized" => Pipeline::Factorized,
            "full3d" => Pipeline::Full3d,
            other => {
                return Err(HarnessError::invalid(
                    "pipeline.mode",
                    format!("unknown pipeline `{other}`"),
                ))
            }
        };
        let output = OutputSpec {
            dir: self
                .path("output.dir")
                .unwrap_or_else(|| PathBuf::from("out")),
            images: self.flag("output.images")?.unwrap_or(true),
            shared_scale: self.flag("output.shared_scale")?.unwrap_or(false),
        };
        let seed = self.parsed("seed")?.unwrap_or(0);
        let noise: f64 = self.parsed("noise.level")?.unwrap_or(0.0);
        if !(0.0..1.0).contains(&noise) {
            return Err(HarnessError::invalid("noise.level", "must lie in [0, 1)"));
        }

        if let Some(k) = self.raw.entries.keys().find(|k| !self.used.contains(*k)) {
            return Err(HarnessError::UnknownKey(k.clone()));
        }
        Ok(ScenarioConfig {
            scenario,
            params,
            grid_n,
            grid_extent,
            input,
            storage_times_us,
            control,
            pulse_fwhm,
            longitudinal,
            pipeline,
            output,
            seed,
            noise,
        })
    }

    fn params(&mut self) -> Result<MemoryParams> {
        let mut p = MemoryParams::default();
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.delta, self.quantity("memory.delta")?);
        set(&mut p.omega_c, self.quantity("memory.omega_c")?);
        set(&mut p.gamma, self.quantity("memory.gamma")?);
        set(&mut p.gamma0, self.quantity("memory.gamma0")?);
        set(&mut p.gamma_c, self.quantity("memory.gamma_c")?);
        set(&mut p.diffusion, self.quantity("memory.D")?);
        set(&mut p.length, self.quantity("memory.length")?);
        set(&mut p.density, self.quantity("memory.density")?);
        set(&mut p.control_waist, self.quantity("memory.control_waist")?);
        set(&mut p.probe_waist, self.quantity("memory.probe_waist")?);
        if let Some(l) = self.quantity("memory.wavelength")? {
            p.k0 = TAU / l;
        }
        let bandwidth = self.quantity("memory.bandwidth")?.unwrap_or(TAU * 2e6);
        p.eta = bandwidth / p.length;
        let delta0 = self.quantity("memory.delta0")?;
        let compensate = self.flag("memory.compensate_light_shift")?.unwrap_or(true);
        match delta0 {
            Some(d) => p.delta0 = d,
            None if compensate => p.compensate_light_shift(),
            None => p.delta0 = 0.0,
        }
        let beta: f64 = self.parsed("memory.beta")?.unwrap_or(0.5);
        if !(beta >= 0.0) || p.omega_c <= 0.0 || p.density <= 0.0 {
            return Err(HarnessError::Config(
                "raman depth needs beta >= 0 and positive control and density".into(),
            ));
        }
        p.set_raman_depth(beta);
        p.validate()?;
        Ok(p)
    }

    fn input(&mut self, scenario: ScenarioId, extent: f64) -> Result<InputSpec> {
        let single = self.take("input.mode");
        let list = self.take("input.modes");
        let image = self.path("input.image");
        let carrier = self.quantity("input.carrier_waist")?;
        let given = [single.is_some(), list.is_some(), image.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if given > 1 {
            return Err(HarnessError::Config(
                "give only one of input.mode, input.modes, input.image".into(),
            ));
        }
        if let Some(path) = image {
            return Ok(InputSpec::Image {
                path,
                carrier_waist: carrier.unwrap_or(extent / 8.0),
            });
        }
        if carrier.is_some() {
            return Err(HarnessError::Config(
                "input.carrier_waist_mm needs input.image".into(),
            ));
        }
        let parse = |key: &str, s: &str| {
            s.parse::<ModeIndex>()
                .map_err(|e| HarnessError::invalid(key, e.to_string()))
        };
        if let Some(s) = single {
            return Ok(InputSpec::Modes(vec![parse("input.mode", s)?]));
        }
        if let Some(s) = list {
            let modes = s
                .split(|c: char| c.is_whitespace() || c == ';')
                .filter(|t| !t.is_empty())
                .map(|t| parse("input.modes", t))
                .collect::<Result<Vec<_>>>()?;
            if modes.is_empty() {
                return Err(HarnessError::invalid("input.modes", "empty list"));
            }
            return Ok(InputSpec::Modes(modes));
        }
        let m = |a, b| ModeIndex::new(a, b).expect("low order");
        match scenario {
            ScenarioId::Tem00Decay | ScenarioId::HetVsCcd => Ok(InputSpec::Modes(vec![m(0, 0)])),
            ScenarioId::TemMnDecay => {
                Ok(InputSpec::Modes(vec![m(0, 0), m(1, 0), m(1, 1), m(2, 0)]))
            }
            ScenarioId::Tem20PeakRatio => Ok(InputSpec::Modes(vec![m(2, 0)])),
            ScenarioId::SelectiveRecall => Ok(InputSpec::Modes(vec![m(1, 0)])),
            ScenarioId::ImageStorage => Err(HarnessError::Config(
                "image_storage needs input.image".into(),
            )),
        }
    }

    fn control(&mut self, scenario: ScenarioId) -> Result<ControlSpec> {
        let on = self.flag("control.on")?.unwrap_or(false);
        let mask = match self.take("control.mask") {
            None if scenario == ScenarioId::SelectiveRecall => MaskSpec::Half(Side::Left),
            None | Some("full") => MaskSpec::Full,
            Some("left") => MaskSpec::Half(Side::Left),
            Some("right") => MaskSpec::Half(Side::Right),
            Some("top") => MaskSpec::Half(Side::Top),
            Some("bottom") => MaskSpec::Half(Side::Bottom),
            Some(_) => MaskSpec::Image(self.path("control.mask").expect("key present")),
        };
        let offset = match self.take("control.offset_mm") {
            None => (0.0, 0.0),
            Some(v) => {
                let parts: Vec<f64> = v
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| {
                        HarnessError::invalid(
                            "control.offset_mm",
                            format!("expected `x,y`, got `{v}`"),
                        )
                    })?;
                match parts[..] {
                    [x, y] => (x * 1e-3, y * 1e-3),
                    _ => {
                        return Err(HarnessError::invalid(
                            "control.offset_mm",
                            "expected two numbers",
                        ))
                    }
                }
            }
        };
        let rate_form = match self.take("control.rate_form").unwrap_or("exact") {
            "exact" => RateForm::Exact,
            "simplified" => RateForm::Simplified,
            other => {
                return Err(HarnessError::invalid(
                    "control.rate_form",
                    format!("unknown form `{other}`"),
                ))
            }
        };
        let max_steps = self.parsed("control.max_steps")?.unwrap_or(32);
        if max_steps == 0 {
            return Err(HarnessError::invalid(
                "control.max_steps",
                "must be at least 1",
            ));
        }
        Ok(ControlSpec {
            on,
            mask,
            offset,
            rate_form,
            rw_exposure: 0.0,
            max_steps,
        })
    }
}

fn default_times(scenario: ScenarioId) -> Vec<u32> {
    match scenario {
        ScenarioId::Tem20PeakRatio => (0..=48).step_by(6).collect(),
        ScenarioId::SelectiveRecall => vec![6],
        ScenarioId::ImageStorage => vec![0, 10, 20, 40],
        _ => (0..=60).step_by(6).collect(),
    }
}

/// Comma-separated integers, where `a:step:b` expands to an inclusive range.
/// The result must be sorted and free of duplicates.
pub fn parse_times(s: &str) -> std::result::Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let nums: Vec<u32> = item
            .split(':')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| format!("`{item}` is not a whole number of microseconds"))
            })
            .collect::<std::result::Result<_, _>>()?;
        match nums[..] {
            [t] => out.push(t),
            [a, step, b] if step > 0 && a <= b => out.extend((a..=b).step_by(step as usize)),
            _ => return Err(format!("bad range `{item}`, expected start:step:end")),
        }
    }
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return Err("storage times must be sorted and unique".into());
    }
    Ok(out)
}
