//! Alternating-projection phase retrieval from a capture stack.

use ndarray::{s, Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FpmError, Result};
use crate::field::ComplexField2D;
use crate::forward::{camera_pupil, CaptureStack, SubSpectrum};
use crate::fourier::{dft2_array, idft2_array};
use crate::geometry::{LedIndex, PlanMode, SystemSpec};
use crate::pupil::Pupil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    UpsampledCentral,
    Ones,
}

impl InitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitMode::UpsampledCentral => "upsampled-central",
            InitMode::Ones => "ones",
        }
    }
}

impl std::str::FromStr for InitMode {
    type Err = FpmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upsampled-central" => Ok(InitMode::UpsampledCentral),
            "ones" => Ok(InitMode::Ones),
            other => Err(invalid(
                "init_mode",
                format!("unknown mode `{other}`, expected upsampled-central or ones"),
            )),
        }
    }
}

/// Sweeps always follow plan order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconConfig {
    pub iterations: usize,
    pub init_mode: InitMode,
    /// Stop once the relative change of the sweep residual drops below this.
    pub convergence_tolerance: f64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            iterations: 20,
            init_mode: InitMode::UpsampledCentral,
            convergence_tolerance: 1e-4,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        if !(self.convergence_tolerance >= 0.0 && self.convergence_tolerance.is_finite()) {
            return Err(invalid("convergence_tolerance", "must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ReconState {
    /// Centered spectrum of the high-resolution field.
    pub spectrum_estimate: ComplexField2D,
    pub pupil: Pupil,
    pub iteration: usize,
    pub residual_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconMetadata {
    pub config: ReconConfig,
    pub plan_mode: PlanMode,
    pub flipped: bool,
    pub frame_count: usize,
    pub iterations_run: usize,
    pub grid_pixels: usize,
    pub pitch_um: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconResult {
    pub amplitude: Array2<f64>,
    /// In (−π, π].
    pub phase: Array2<f64>,
    pub residual_trace: Vec<f64>,
    pub metadata: ReconMetadata,
}

impl ReconResult {
    pub fn field(&self) -> Result<ComplexField2D> {
        let samples = Zip::from(&self.amplitude)
            .and(&self.phase)
            .map_collect(|&a, &p| Complex64::from_polar(a, p));
        ComplexField2D::new(samples, self.metadata.pitch_um)
    }
}

fn check_stack(stack: &CaptureStack) -> Result<()> {
    if stack.is_empty() {
        return Err(invalid("stack", "capture stack is empty"));
    }
    let n = stack.high_res_pixels();
    let m = stack.system.camera_pixels;
    for e in &stack.plan.entries {
        SubSpectrum::locate(n, m, (e.shift_px_u, e.shift_px_v))?;
    }
    Ok(())
}

pub fn init_spectrum(stack: &CaptureStack, config: &ReconConfig) -> Result<ReconState> {
    config.validate()?;
    check_stack(stack)?;
    let n = stack.high_res_pixels();
    let m = stack.system.camera_pixels;
    let gain = n as f64 / m as f64;
    let mut spectrum = Array2::<Complex64>::zeros((n, n));
    match config.init_mode {
        InitMode::UpsampledCentral => {
            let center = stack.frame_for(LedIndex::CENTER).ok_or(FpmError::MissingFrame { i: 0, j: 0 })?;
            let low = dft2_array(&center.mapv(|v| Complex64::new(v.sqrt(), 0.0)));
            let top = n / 2 - m / 2;
            spectrum
                .slice_mut(s![top..top + m, top..top + m])
                .assign(&low.mapv(|c| c * gain));
        }
        InitMode::Ones => {
            let frame = stack.frame_for(LedIndex::CENTER).unwrap_or(&stack.frames[0]);
            let energy = frame.sum() * gain * gain;
            spectrum.fill(Complex64::new(energy.sqrt() / n as f64, 0.0));
        }
    }
    let pitch = stack.system.high_res_grid(stack.upsampling).pitch;
    Ok(ReconState {
        spectrum_estimate: ComplexField2D::new(spectrum, pitch)?,
        pupil: camera_pupil(&stack.system)?,
        iteration: 0,
        residual_trace: Vec::new(),
    })
}

/// Sets `|low|` to `√measured`, keeping the phase (phase 0 where `low` is 0).
/// Returns the summed squared intensity mismatch before replacement.
pub fn replace_modulus(low: &mut Array2<Complex64>, measured: &Array2<f64>) -> f64 {
    let mut err = 0.0;
    Zip::from(low).and(measured).for_each(|c, &i| {
        let est = c.norm_sqr();
        err += (est - i) * (est - i);
        let a = i.sqrt();
        let r = c.norm();
        *c = if r > 0.0 { *c * (a / r) } else { Complex64::new(a, 0.0) };
    });
    err
}

/// One sweep over the plan: for every frame, impose the measured modulus on
/// the low-resolution field and write the result back inside the pupil.
pub fn fpm_iterate(mut state: ReconState, stack: &CaptureStack) -> Result<ReconState> {
    let n = stack.high_res_pixels();
    let m = stack.system.camera_pixels;
    if state.spectrum_estimate.dim() != (n, n) || state.pupil.grid.pixels != m {
        return Err(FpmError::DimensionMismatch {
            expected: (n, n),
            found: state.spectrum_estimate.dim(),
        });
    }
    let down = m as f64 / n as f64;
    let up = n as f64 / m as f64;
    let mask = &state.pupil.mask;
    let spectrum = state.spectrum_estimate.samples_mut();
    let mut residual = 0.0;
    for (entry, measured) in stack.plan.entries.iter().zip(&stack.frames) {
        let w = SubSpectrum::locate(n, m, (entry.shift_px_u, entry.shift_px_v))?;
        let mut sub = w.extract(spectrum);
        Zip::from(&mut sub).and(mask).for_each(|c, &p| *c *= p * down);
        let mut low = idft2_array(&sub);
        let err = replace_modulus(&mut low, measured);
        residual += err / (m * m) as f64;
        let updated = dft2_array(&low);
        let mut view = spectrum.slice_mut(s![w.top..w.top + m, w.left..w.left + m]);
        Zip::from(&mut view)
            .and(&updated)
            .and(mask)
            .for_each(|dst, &src, &p| {
                if p > 0.0 {
                    *dst = src * up;
                }
            });
    }
    if !residual.is_finite() || !state.spectrum_estimate.is_finite() {
        return Err(FpmError::NonFinite("spectrum estimate"));
    }
    state.iteration += 1;
    state.residual_trace.push(residual);
    Ok(state)
}

pub fn reconstruct(stack: &CaptureStack, system: &SystemSpec, config: &ReconConfig) -> Result<ReconResult> {
    if *system != stack.system {
        return Err(FpmError::Inconsistent(
            "system spec differs from the one recorded with the stack".into(),
        ));
    }
    let mut state = init_spectrum(stack, config)?;
    while state.iteration < config.iterations {
        state = fpm_iterate(state, stack)?;
        if let [.., prev, last] = state.residual_trace[..] {
            let change = if prev > 0.0 { (prev - last).abs() / prev } else { 0.0 };
            if change < config.convergence_tolerance {
                break;
            }
        }
    }
    let field = idft2_array(state.spectrum_estimate.samples());
    Ok(ReconResult {
        amplitude: field.mapv(|c| c.norm()),
        phase: field.mapv(|c| c.arg()),
        metadata: ReconMetadata {
            config: *config,
            plan_mode: stack.plan.mode,
            flipped: stack.plan.flipped,
            frame_count: stack.len(),
            iterations_run: state.iteration,
            grid_pixels: field.nrows(),
            pitch_um: state.spectrum_estimate.pitch(),
        },
        residual_trace: state.residual_trace,
    })
}

/// Constant phase offset of `result` relative to `reference`, weighted by
/// both amplitudes so that dark pixels with meaningless phase do not count.
pub fn phase_offset(result: &ReconResult, reference: &ReconResult) -> Result<f64> {
    if result.phase.dim() != reference.phase.dim() {
        return Err(FpmError::DimensionMismatch {
            expected: reference.phase.dim(),
            found: result.phase.dim(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    Zip::from(&result.phase)
        .and(&reference.phase)
        .and(&result.amplitude)
        .and(&reference.amplitude)
        .for_each(|&p, &q, &a, &b| acc += Complex64::from_polar(a * b, p - q));
    if acc.norm() == 0.0 {
        return Ok(0.0);
    }
    Ok(acc.arg())
}

/// Removes the global phase offset against `reference`; amplitude is untouched.
pub fn global_phase_align(result: &ReconResult, reference: &ReconResult) -> Result<ReconResult> {
    let offset = phase_offset(result, reference)?;
    let mut aligned = result.clone();
    aligned
        .phase
        .mapv_inplace(|p| Complex64::from_polar(1.0, p - offset).arg());
    Ok(aligned)
}
