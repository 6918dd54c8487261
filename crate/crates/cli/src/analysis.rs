//! Shared computations behind the comparison commands and the acceptance suite.

use std::time::Instant;

use fpm_core::forward::{add_noise, simulate_stack, symmetric_pair_difference, CaptureStack, PairComparison};
use fpm_core::fourier::{dft2_array, idft2_array};
use fpm_core::geometry::{synthesized_na, IlluminationPlan, LedIndex, PlanMode};
use fpm_core::metrics::{
    michelson_contrast, modulation_depth, normalized_cross_correlation, raw_line_profile, rmse_gray, Axis,
    LineProfile,
};
use fpm_core::objects::{bar_target, BarGroup};
use fpm_core::recon::{global_phase_align, reconstruct, ReconResult};
use ndarray::{s, Array2};
use num_complex::Complex64;

use crate::config::{Channel, Pipeline, Subject};
use crate::error::{CliError, CliResult};

/// Simulates `subject` under `plan`, with the configured noise.
pub fn simulate(p: &Pipeline, subject: &Subject, plan: &IlluminationPlan) -> CliResult<CaptureStack> {
    let stack = simulate_stack(&subject.object, p.system(), plan)?;
    Ok(add_noise(&stack, p.config.noise_sigma, p.config.seed)?)
}

/// The frames of `stack` that `plan` asks for, in plan order.
pub fn restrict(stack: &CaptureStack, plan: &IlluminationPlan) -> CliResult<CaptureStack> {
    let frames = plan
        .leds()
        .map(|led| {
            stack
                .frame_for(led)
                .cloned()
                .ok_or(CliError::Core(fpm_core::error::FpmError::MissingFrame { i: led.i, j: led.j }))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(CaptureStack::new(
        frames,
        plan.clone(),
        stack.system,
        stack.upsampling,
        stack.provenance,
    )?)
}

/// Plan holding only the requested LEDs, their partners and the center.
pub fn pair_plan(full: &IlluminationPlan, pairs: &[LedIndex]) -> IlluminationPlan {
    let mut plan = full.clone();
    plan.entries.retain(|e| {
        let led = e.led();
        led == LedIndex::CENTER || pairs.iter().any(|&p| p == led || p.symmetric_partner() == led)
    });
    plan
}

pub fn compare_pairs(stack: &CaptureStack, pairs: &[LedIndex]) -> CliResult<Vec<PairComparison>> {
    pairs
        .iter()
        .map(|&led| symmetric_pair_difference(stack, led).map_err(CliError::from))
        .collect()
}

/// Full and half-rows reconstructions of one object, half aligned to full.
#[derive(Debug, Clone)]
pub struct FullVsHalf {
    pub label: String,
    pub primary: Channel,
    pub full: ReconResult,
    pub half: ReconResult,
    pub ncc_amplitude: f64,
    pub ncc_phase: f64,
    pub rmse_amplitude: f64,
    pub rmse_phase: f64,
    pub seconds_full: f64,
    pub seconds_half: f64,
    /// Central full-plan frame, for raw-image comparisons.
    pub central_frame: Array2<f64>,
}

impl FullVsHalf {
    /// Correlation on the channel that carries the object's structure.
    pub fn ncc_primary(&self) -> f64 {
        match self.primary {
            Channel::Amplitude => self.ncc_amplitude,
            Channel::Phase => self.ncc_phase,
        }
    }
}

/// Simulates the full plan once; the half-rows stack reuses its frames.
pub fn full_vs_half(p: &Pipeline, subject: &Subject) -> CliResult<FullVsHalf> {
    let full_plan = p.plan(PlanMode::Full)?;
    let half_plan = p.plan(PlanMode::HalfRows)?;
    let full_stack = simulate(p, subject, &full_plan)?;
    let half_stack = restrict(&full_stack, &half_plan)?;
    let timed = |stack: &CaptureStack| {
        let t = Instant::now();
        let r = reconstruct(stack, p.system(), &p.config.recon);
        (r, t.elapsed().as_secs_f64())
    };
    let ((full, seconds_full), (half, seconds_half)) = rayon::join(|| timed(&full_stack), || timed(&half_stack));
    let full = full?;
    let half = global_phase_align(&half?, &full)?;
    Ok(FullVsHalf {
        label: subject.label.clone(),
        primary: subject.primary,
        ncc_amplitude: normalized_cross_correlation(&full.amplitude, &half.amplitude)?,
        ncc_phase: normalized_cross_correlation(&full.phase, &half.phase)?,
        rmse_amplitude: rmse_gray(&full.amplitude, &half.amplitude)?,
        rmse_phase: rmse_gray(&full.phase, &half.phase)?,
        seconds_full,
        seconds_half,
        central_frame: full_stack
            .frame_for(LedIndex::CENTER)
            .cloned()
            .ok_or(CliError::Core(fpm_core::error::FpmError::MissingFrame { i: 0, j: 0 }))?,
        full,
        half,
    })
}

/// Band-limited (spectral zero-padding) interpolation by an integer factor.
pub fn upsample(image: &Array2<f64>, factor: usize) -> Array2<f64> {
    let (m, _) = image.dim();
    let n = m * factor;
    let spec = dft2_array(&image.mapv(|v| Complex64::new(v, 0.0)));
    let mut padded = Array2::<Complex64>::zeros((n, n));
    let top = n / 2 - m / 2;
    padded.slice_mut(s![top..top + m, top..top + m]).assign(&spec);
    idft2_array(&padded).mapv(|c| c.re * factor as f64)
}

/// Amplitude of the raw central frame on the object grid.
pub fn raw_amplitude(central_frame: &Array2<f64>, factor: usize) -> Array2<f64> {
    upsample(&central_frame.mapv(f64::sqrt), factor)
}

/// Bar-group contrast along one axis, full vs half reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupContrast {
    pub group: usize,
    pub axis: Axis,
    pub period_px: f64,
    pub period_um: f64,
    /// `None` where the window is too short to fit a sinusoid.
    pub depth_full: Option<f64>,
    pub depth_half: Option<f64>,
    pub depth_raw: Option<f64>,
    pub michelson_full: f64,
    pub michelson_half: f64,
}

fn profile_and_window(img: &Array2<f64>, g: &BarGroup, axis: Axis) -> CliResult<(LineProfile, std::ops::Range<usize>)> {
    let (index, window) = match axis {
        Axis::Row => (g.center_row(), g.profile_window()),
        Axis::Column => (g.center_col(), g.column_window()),
    };
    Ok((raw_line_profile(img, axis, index)?, window))
}

fn depth(img: &Array2<f64>, g: &BarGroup, axis: Axis) -> CliResult<Option<f64>> {
    let (profile, window) = profile_and_window(img, g, axis)?;
    Ok(modulation_depth(&profile.values[window], g.period).ok())
}

fn michelson(img: &Array2<f64>, g: &BarGroup, axis: Axis) -> CliResult<f64> {
    let (profile, window) = profile_and_window(img, g, axis)?;
    Ok(michelson_contrast(&profile, window)?)
}

/// The primary maps of both reconstructions and the raw frame. Phase maps
/// are offset by their joint minimum so that Michelson contrast is defined.
fn primary_maps(cmp: &FullVsHalf, upsampling: usize) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let raw = raw_amplitude(&cmp.central_frame, upsampling);
    match cmp.primary {
        Channel::Amplitude => (cmp.full.amplitude.clone(), cmp.half.amplitude.clone(), raw),
        Channel::Phase => {
            let lo = cmp
                .full
                .phase
                .iter()
                .chain(cmp.half.phase.iter())
                .copied()
                .fold(f64::INFINITY, f64::min);
            (cmp.full.phase.mapv(|v| v - lo), cmp.half.phase.mapv(|v| v - lo), raw)
        }
    }
}

/// Contrast of every bar group of the standard target along both axes.
/// Row profiles cross the vertical bars, column profiles the horizontal ones.
pub fn contrast_table(p: &Pipeline, cmp: &FullVsHalf) -> CliResult<Vec<GroupContrast>> {
    let target = bar_target(p.object_pixels(), p.config.seed);
    let (full, half, raw) = primary_maps(cmp, p.upsampling);
    let pitch = p.object_pitch();
    let mut rows = Vec::new();
    for axis in [Axis::Row, Axis::Column] {
        for (k, g) in target.groups.iter().enumerate() {
            rows.push(GroupContrast {
                group: k,
                axis,
                period_px: g.period,
                period_um: g.period * pitch,
                depth_full: depth(&full, g, axis)?,
                depth_half: depth(&half, g, axis)?,
                depth_raw: depth(&raw, g, axis)?,
                michelson_full: michelson(&full, g, axis)?,
                michelson_half: michelson(&half, g, axis)?,
            });
        }
    }
    Ok(rows)
}

/// Periods (µm) at the objective and synthesized coherent cutoffs.
pub fn cutoff_periods(p: &Pipeline) -> (f64, f64) {
    let sys = p.system();
    (
        sys.wavelength_um / sys.objective_na,
        sys.wavelength_um / synthesized_na(&p.config.led_array, sys),
    )
}

/// The group whose period is closest, on a log scale, to the geometric
/// mean of the two cutoff periods; it lies well inside the band that only
/// the synthetic aperture can pass.
pub fn designated_group<'a>(p: &Pipeline, table: &'a [GroupContrast], axis: Axis) -> Option<&'a GroupContrast> {
    let (objective, synthesized) = cutoff_periods(p);
    let target = (objective * synthesized).sqrt().ln();
    table
        .iter()
        .filter(|g| g.axis == axis)
        .min_by(|a, b| (a.period_um.ln() - target).abs().total_cmp(&(b.period_um.ln() - target).abs()))
}

/// Smallest-period group whose full reconstruction keeps depth above `threshold`.
pub fn finest_resolved(table: &[GroupContrast], axis: Axis, threshold: f64) -> Option<&GroupContrast> {
    table
        .iter()
        .filter(|g| g.axis == axis && g.depth_full.is_some_and(|d| d > threshold))
        .min_by(|a, b| a.period_px.total_cmp(&b.period_px))
}
