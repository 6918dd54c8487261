//! JSON pipeline configuration and its up-front validation.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};

use fpm_core::forward::SubSpectrum;
use fpm_core::geometry::{make_plan, IlluminationPlan, LedArraySpec, LedIndex, PlanMode, SystemSpec};
use fpm_core::objects::{make_object, standard_test_object, ComplexObject, ObjectKind, ObjectSource};
use fpm_core::pgm::load_grayscale;
use fpm_core::recon::ReconConfig;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{in_section, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "SystemSpec::simulation_default")]
    pub system: SystemSpec,
    #[serde(default = "default_led_array")]
    pub led_array: LedArraySpec,
    #[serde(default)]
    pub object: ObjectSpec,
    #[serde(default = "default_plan")]
    pub plan: PlanMode,
    /// Keep rows i ≤ 0 instead of i ≥ 0 for half-rows.
    #[serde(default)]
    pub flip_half: bool,
    #[serde(default)]
    pub recon: ReconConfig,
    /// Gaussian noise std as a fraction of the stack maximum.
    #[serde(default)]
    pub noise_sigma: f64,
    /// LED offsets `[i, j]` compared with their point reflections.
    /// Defaults to the diagonal `(k, k)` for every ring of the array.
    #[serde(default)]
    pub pairs: Option<Vec<[i32; 2]>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_led_array() -> LedArraySpec {
    LedArraySpec {
        side_count: 15,
        led_pitch_mm: 4.0,
        distance_mm: 110.0,
    }
}

fn default_plan() -> PlanMode {
    PlanMode::Full
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_size() -> usize {
    512
}

fn default_phase_range() -> f64 {
    FRAC_PI_2
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            system: SystemSpec::simulation_default(),
            led_array: default_led_array(),
            object: ObjectSpec::default(),
            plan: default_plan(),
            flip_half: false,
            recon: ReconConfig::default(),
            noise_sigma: 0.0,
            pairs: None,
            output_dir: default_output_dir(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectSpec {
    /// Procedural bar target.
    Standard {
        #[serde(default = "default_kind")]
        kind: ObjectKind,
        #[serde(default = "default_size")]
        size_px: usize,
        #[serde(default = "default_phase_range")]
        phase_range_rad: f64,
    },
    /// Grayscale PGM maps; a missing map is uniform.
    Images {
        #[serde(default)]
        amplitude_path: Option<PathBuf>,
        #[serde(default)]
        phase_path: Option<PathBuf>,
        #[serde(default = "default_phase_range")]
        phase_range_rad: f64,
    },
}

fn default_kind() -> ObjectKind {
    ObjectKind::AmplitudeOnly
}

impl Default for ObjectSpec {
    fn default() -> Self {
        ObjectSpec::Standard {
            kind: default_kind(),
            size_px: default_size(),
            phase_range_rad: default_phase_range(),
        }
    }
}

impl ObjectSpec {
    fn phase_range(&self) -> f64 {
        match self {
            ObjectSpec::Standard { phase_range_rad, .. } | ObjectSpec::Images { phase_range_rad, .. } => {
                *phase_range_rad
            }
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub plan: Option<String>,
    pub iterations: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> CliResult<PipelineConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> CliResult<PipelineConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let field = if field == "." { "<root>".to_string() } else { field };
        CliError::config(field, e.into_inner().to_string())
    })
}

/// Which measured map carries the object's structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Amplitude,
    Phase,
}

impl Channel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Amplitude => "amplitude",
            Channel::Phase => "phase",
        }
    }
}

/// One object to push through a pipeline.
#[derive(Debug, Clone)]
pub struct Subject {
    pub label: String,
    pub object: ComplexObject,
    pub primary: Channel,
    /// Standard objects only.
    pub kind: Option<ObjectKind>,
}

/// A config that passed validation, with paths resolved and the derived
/// quantities every command needs.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub upsampling: usize,
    pub output_dir: PathBuf,
    images: Option<ImageMaps>,
}

/// Amplitude and phase maps of an image-based object.
type ImageMaps = (Option<Array2<f64>>, Option<Array2<f64>>);

impl Pipeline {
    /// Applies overrides, then checks every field. Nothing is written.
    pub fn validate(mut config: PipelineConfig, base_dir: &Path, overrides: &Overrides) -> CliResult<Self> {
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(plan) = &overrides.plan {
            config.plan = plan.parse().map_err(|e: fpm_core::error::FpmError| match e {
                fpm_core::error::FpmError::InvalidParameter { reason, .. } => CliError::config("plan", reason),
                other => CliError::config("plan", other.to_string()),
            })?;
        }
        if let Some(n) = overrides.iterations {
            config.recon.iterations = n;
        }
        let output_dir = match &overrides.out {
            Some(out) => out.clone(),
            None => base_dir.join(&config.output_dir),
        };

        config.system.validate().map_err(in_section("system"))?;
        config.led_array.validate().map_err(in_section("led_array"))?;
        config.recon.validate().map_err(in_section("recon"))?;
        if !(config.noise_sigma >= 0.0 && config.noise_sigma.is_finite()) {
            return Err(CliError::config("noise_sigma", format!("must be non-negative, got {}", config.noise_sigma)));
        }
        let range = config.object.phase_range();
        if !(range >= 0.0 && range.is_finite()) {
            return Err(CliError::config("object.phase_range_rad", format!("must be non-negative, got {range}")));
        }

        let m = config.system.camera_pixels;
        let (size, images) = match &config.object {
            ObjectSpec::Standard { size_px, .. } => {
                if *size_px < 32 {
                    return Err(CliError::config("object.size_px", format!("must be at least 32, got {size_px}")));
                }
                (*size_px, None)
            }
            ObjectSpec::Images {
                amplitude_path,
                phase_path,
                ..
            } => {
                if amplitude_path.is_none() && phase_path.is_none() {
                    return Err(CliError::config("object", "images source needs amplitude_path or phase_path"));
                }
                let amp = load_map(base_dir, amplitude_path.as_deref(), "object.amplitude_path")?;
                let ph = load_map(base_dir, phase_path.as_deref(), "object.phase_path")?;
                let dim = amp.as_ref().or(ph.as_ref()).map(|a| a.dim()).expect("one map present");
                if let (Some(a), Some(p)) = (&amp, &ph) {
                    if a.dim() != p.dim() {
                        return Err(CliError::config(
                            "object.phase_path",
                            format!("{}x{} image does not match the {}x{} amplitude", p.ncols(), p.nrows(), a.ncols(), a.nrows()),
                        ));
                    }
                }
                if dim.0 != dim.1 {
                    return Err(CliError::config("object", format!("images must be square, got {}x{}", dim.1, dim.0)));
                }
                (dim.0, Some((amp, ph)))
            }
        };
        let field = if images.is_some() { "object" } else { "object.size_px" };
        if size % m != 0 {
            return Err(CliError::config(
                field,
                format!("object grid {size} is not a multiple of system.camera_pixels {m}"),
            ));
        }
        let upsampling = size / m;

        let array = config.led_array;
        let pairs = config.pairs.clone().unwrap_or_default();
        for (k, [i, j]) in pairs.iter().enumerate() {
            let led = LedIndex::new(*i, *j);
            if !array.contains(led) {
                return Err(CliError::config(
                    format!("pairs[{k}]"),
                    format!("LED {led} lies outside the {0}x{0} array", array.side_count),
                ));
            }
            if led == LedIndex::CENTER {
                return Err(CliError::config(format!("pairs[{k}]"), "the central LED has no distinct partner"));
            }
        }

        let pipeline = Self {
            config,
            upsampling,
            output_dir,
            images,
        };
        for mode in [pipeline.config.plan, PlanMode::Full, PlanMode::HalfRows] {
            let plan = pipeline.plan(mode)?;
            for e in &plan.entries {
                SubSpectrum::locate(size, m, (e.shift_px_u, e.shift_px_v)).map_err(|_| {
                    CliError::config(
                        "led_array",
                        format!(
                            "LED ({}, {}) shifts the spectrum by ({}, {}) px, beyond a {size}-px object grid",
                            e.i, e.j, e.shift_px_u, e.shift_px_v
                        ),
                    )
                })?;
            }
        }
        check_writable(&pipeline.output_dir)?;
        Ok(pipeline)
    }

    pub fn system(&self) -> &SystemSpec {
        &self.config.system
    }

    pub fn object_pixels(&self) -> usize {
        self.config.system.camera_pixels * self.upsampling
    }

    pub fn object_pitch(&self) -> f64 {
        self.config.system.high_res_grid(self.upsampling).pitch
    }

    pub fn plan(&self, mode: PlanMode) -> CliResult<IlluminationPlan> {
        let grid = self.config.system.high_res_grid(self.upsampling).frequency_grid();
        make_plan(&self.config.led_array, mode, &self.config.system, grid, self.config.flip_half)
            .map_err(in_section("led_array"))
    }

    /// Requested pairs, or the diagonal of every ring.
    pub fn pairs(&self) -> Vec<LedIndex> {
        match &self.config.pairs {
            Some(p) => p.iter().map(|[i, j]| LedIndex::new(*i, *j)).collect(),
            None => (1..=self.config.led_array.half_extent()).map(|k| LedIndex::new(k, k)).collect(),
        }
    }

    fn standard(&self, kind: ObjectKind) -> CliResult<Subject> {
        let object = standard_test_object(
            kind,
            self.object_pixels(),
            self.config.object.phase_range(),
            self.object_pitch(),
            self.config.seed,
        )?;
        Ok(Subject {
            label: kind.as_str().to_string(),
            object,
            primary: if kind == ObjectKind::PhaseOnly { Channel::Phase } else { Channel::Amplitude },
            kind: Some(kind),
        })
    }

    fn custom(&self) -> CliResult<Subject> {
        let (amp, ph) = self.images.as_ref().expect("images source");
        let n = self.object_pixels();
        let source = |m: &Option<Array2<f64>>| match m {
            Some(img) => ObjectSource::Image(img.clone()),
            None => ObjectSource::Uniform(n),
        };
        let object = make_object(&source(amp), &source(ph), self.config.object.phase_range(), self.object_pitch())?;
        Ok(Subject {
            label: "custom".into(),
            object,
            primary: if amp.is_some() { Channel::Amplitude } else { Channel::Phase },
            kind: None,
        })
    }

    /// The configured object.
    pub fn subject(&self) -> CliResult<Subject> {
        match &self.config.object {
            ObjectSpec::Standard { kind, .. } => self.standard(*kind),
            ObjectSpec::Images { .. } => self.custom(),
        }
    }

    /// All three standard kinds, or the single image-based object.
    pub fn subjects(&self) -> CliResult<Vec<Subject>> {
        match &self.config.object {
            ObjectSpec::Standard { .. } => ObjectKind::ALL.iter().map(|&k| self.standard(k)).collect(),
            ObjectSpec::Images { .. } => Ok(vec![self.custom()?]),
        }
    }
}

fn load_map(base: &Path, path: Option<&Path>, field: &str) -> CliResult<Option<Array2<f64>>> {
    let Some(path) = path else { return Ok(None) };
    let full = base.join(path);
    if !full.is_file() {
        return Err(CliError::config(field, format!("{} does not exist", full.display())));
    }
    load_grayscale(&full)
        .map(Some)
        .map_err(|e| CliError::config(field, e.to_string()))
}

/// The directory, or its closest existing ancestor, must be a writable directory.
fn check_writable(dir: &Path) -> CliResult<()> {
    let mut probe = dir;
    loop {
        if probe.exists() {
            let meta = fs::metadata(probe).map_err(|e| CliError::config("output_dir", e.to_string()))?;
            if !meta.is_dir() {
                return Err(CliError::config("output_dir", format!("{} is not a directory", probe.display())));
            }
            if meta.permissions().readonly() {
                return Err(CliError::config("output_dir", format!("{} is read-only", probe.display())));
            }
            return Ok(());
        }
        match probe.parent() {
            Some(p) if !p.as_os_str().is_empty() => probe = p,
            _ => return Ok(()),
        }
    }
}
