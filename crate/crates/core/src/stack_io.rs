//! On-disk layouts for capture stacks and reconstruction results.
//!
//! A stack directory holds `frame_0000.pgm`, `frame_0001.pgm`, … (16-bit,
//! each frame scaled to its own maximum) and `manifest.json` with the plan,
//! the system and the per-frame maxima needed to restore intensities.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, FpmError, Result};
use crate::forward::{CaptureStack, Provenance};
use crate::geometry::{IlluminationPlan, SystemSpec};
use crate::pgm::{read_pgm, write_pgm, PgmImage};
use crate::recon::{ReconMetadata, ReconResult};
use crate::report::CsvReport;

pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT_VERSION: u32 = 1;
const LEVELS: u16 = u16::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub file: String,
    pub i: i32,
    pub j: i32,
    /// Intensity represented by gray level 65535.
    pub max_intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackManifest {
    pub format_version: u32,
    pub system: SystemSpec,
    pub upsampling: usize,
    pub plan: IlluminationPlan,
    pub frames: Vec<FrameRecord>,
}

pub fn frame_file_name(k: usize) -> String {
    format!("frame_{k:04}.pgm")
}

fn quantize(frame: &Array2<f64>) -> (PgmImage, f64) {
    let max = frame.iter().copied().fold(0.0, f64::max);
    let unit = if max > 0.0 {
        frame.mapv(|v| v / max)
    } else {
        Array2::zeros(frame.dim())
    };
    (PgmImage::from_unit(&unit, LEVELS), max)
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serializes");
    bytes.push(b'\n');
    bytes
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn export_stack(stack: &CaptureStack, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let mut records = Vec::with_capacity(stack.len());
    for (k, (frame, entry)) in stack.frames.iter().zip(&stack.plan.entries).enumerate() {
        let (image, max) = quantize(frame);
        let file = frame_file_name(k);
        write_pgm(&dir.join(&file), &image)?;
        records.push(FrameRecord {
            file,
            i: entry.i,
            j: entry.j,
            max_intensity: max,
        });
    }
    let manifest = StackManifest {
        format_version: FORMAT_VERSION,
        system: stack.system,
        upsampling: stack.upsampling,
        plan: stack.plan.clone(),
        frames: records,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, to_json(&manifest)).map_err(io_err(&path))
}

pub fn read_manifest(dir: &Path) -> Result<StackManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read(&path).map_err(io_err(&path))?;
    let manifest: StackManifest =
        serde_json::from_slice(&text).map_err(|source| FpmError::Manifest { path: path.clone(), source })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(FpmError::Inconsistent(format!(
            "{}: unsupported format_version {}",
            path.display(),
            manifest.format_version
        )));
    }
    Ok(manifest)
}

/// Reads a stack directory, checking the manifest against the frames.
pub fn import_stack(dir: &Path) -> Result<CaptureStack> {
    let manifest = read_manifest(dir)?;
    manifest.system.validate()?;
    manifest.plan.array.validate()?;
    if manifest.frames.len() != manifest.plan.len() {
        return Err(FpmError::Inconsistent(format!(
            "manifest lists {} frames for a {}-entry plan",
            manifest.frames.len(),
            manifest.plan.len()
        )));
    }
    let mut frames = Vec::with_capacity(manifest.frames.len());
    for (rec, entry) in manifest.frames.iter().zip(&manifest.plan.entries) {
        if (rec.i, rec.j) != (entry.i, entry.j) {
            return Err(FpmError::Inconsistent(format!(
                "{} is recorded for LED ({}, {}) but plan entry is ({}, {})",
                rec.file, rec.i, rec.j, entry.i, entry.j
            )));
        }
        if !manifest.plan.array.contains(entry.led()) {
            return Err(FpmError::LedOutOfBounds {
                i: entry.i,
                j: entry.j,
                side: manifest.plan.array.side_count,
            });
        }
        if !(rec.max_intensity >= 0.0 && rec.max_intensity.is_finite()) {
            return Err(FpmError::Inconsistent(format!("{}: bad max_intensity", rec.file)));
        }
        let image = read_pgm(&dir.join(&rec.file))?;
        let scale = rec.max_intensity;
        frames.push(image.to_unit().mapv(|v| v * scale));
    }
    CaptureStack::new(
        frames,
        manifest.plan,
        manifest.system,
        manifest.upsampling,
        Provenance::Loaded,
    )
}

/// How to turn the gray levels of an exported map back into values:
/// `value = offset + scale · level / 65535`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapScale {
    pub offset: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSidecar {
    pub amplitude_file: String,
    pub amplitude: MapScale,
    pub phase_file: String,
    /// Radians.
    pub phase: MapScale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultFiles {
    pub amplitude: PathBuf,
    pub phase: PathBuf,
    pub sidecar: PathBuf,
    pub residuals: PathBuf,
    pub metadata: PathBuf,
}

impl ResultFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            amplitude: dir.join("amplitude.pgm"),
            phase: dir.join("phase.pgm"),
            sidecar: dir.join("scales.json"),
            residuals: dir.join("residuals.csv"),
            metadata: dir.join("metadata.json"),
        }
    }
}

pub fn residual_report(trace: &[f64]) -> CsvReport {
    let mut t = CsvReport::new(["iteration", "residual"])
        .comment("sum over frames of mean squared intensity error, recorded during each sweep");
    for (k, r) in trace.iter().enumerate() {
        t.push([(k + 1).to_string(), r.to_string()]);
    }
    t
}

/// Writes amplitude and phase as 16-bit PGMs with their scales, the residual
/// trace and the run metadata.
pub fn export_result(result: &ReconResult, dir: &Path) -> Result<ResultFiles> {
    create_dir(dir)?;
    let files = ResultFiles::in_dir(dir);
    let pi = std::f64::consts::PI;
    let (amp_image, amp_max) = quantize(&result.amplitude);
    write_pgm(&files.amplitude, &amp_image)?;
    let phase_unit = result.phase.mapv(|p| (p + pi) / (2.0 * pi));
    write_pgm(&files.phase, &PgmImage::from_unit(&phase_unit, LEVELS))?;
    let sidecar = ResultSidecar {
        amplitude_file: "amplitude.pgm".into(),
        amplitude: MapScale {
            offset: 0.0,
            scale: amp_max,
        },
        phase_file: "phase.pgm".into(),
        phase: MapScale {
            offset: -pi,
            scale: 2.0 * pi,
        },
    };
    fs::write(&files.sidecar, to_json(&sidecar)).map_err(io_err(&files.sidecar))?;
    residual_report(&result.residual_trace).write(&files.residuals)?;
    write_metadata(&result.metadata, &files.metadata)?;
    Ok(files)
}

pub fn write_metadata(meta: &ReconMetadata, path: &Path) -> Result<()> {
    fs::write(path, to_json(meta)).map_err(io_err(path))
}
