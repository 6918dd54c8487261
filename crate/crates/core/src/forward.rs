//! Capture-chain simulation: illumination tilt as a spectrum shift, pupil
//! truncation, camera-grid cropping and intensity detection.

use ndarray::{s, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{invalid, FpmError, Result};
use crate::fourier::{dft2, idft2_array};
use crate::geometry::{IlluminationPlan, LedIndex, PlanEntry, SystemSpec};
use crate::metrics::{line_profile, rmse_gray, Axis, LineProfile};
use crate::objects::ComplexObject;
use crate::pupil::{make_pupil, Pupil};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Simulated,
    Loaded,
}

/// Intensity frames at camera resolution, frame `k` taken under plan entry `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureStack {
    pub frames: Vec<Array2<f64>>,
    pub plan: IlluminationPlan,
    pub system: SystemSpec,
    /// Object pixels per camera pixel of the grid the plan's shifts refer to.
    pub upsampling: usize,
    pub provenance: Provenance,
}

impl CaptureStack {
    pub fn new(
        frames: Vec<Array2<f64>>,
        plan: IlluminationPlan,
        system: SystemSpec,
        upsampling: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if frames.len() != plan.len() {
            return Err(FpmError::Inconsistent(format!(
                "{} frames for a {}-entry plan",
                frames.len(),
                plan.len()
            )));
        }
        let m = system.camera_pixels;
        if let Some(f) = frames.iter().find(|f| f.dim() != (m, m)) {
            return Err(FpmError::DimensionMismatch {
                expected: (m, m),
                found: f.dim(),
            });
        }
        if frames.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FpmError::NonFinite("capture stack"));
        }
        if frames.iter().flatten().any(|&v| v < 0.0) {
            return Err(FpmError::Inconsistent("negative intensity in capture stack".into()));
        }
        if upsampling == 0 {
            return Err(invalid("upsampling", "must be at least 1"));
        }
        Ok(Self {
            frames,
            plan,
            system,
            upsampling,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_for(&self, led: LedIndex) -> Option<&Array2<f64>> {
        self.plan.position(led).map(|k| &self.frames[k])
    }

    pub fn max_intensity(&self) -> f64 {
        self.frames.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Side length of the reconstruction grid.
    pub fn high_res_pixels(&self) -> usize {
        self.system.camera_pixels * self.upsampling
    }
}

/// Object spectrum plus camera pupil, ready to render frames for any shift.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    spectrum: Array2<Complex64>,
    pupil: Pupil,
}

impl ForwardModel {
    pub fn new(object: &ComplexObject, pupil: Pupil) -> Result<Self> {
        let n = object.size();
        let m = pupil.grid.pixels;
        if m > n || n % m != 0 {
            return Err(invalid(
                "upsampling",
                format!("object grid {n} is not an integer multiple of camera grid {m}"),
            ));
        }
        Ok(Self {
            spectrum: dft2(&object.field).into_samples(),
            pupil,
        })
    }

    pub fn pupil(&self) -> &Pupil {
        &self.pupil
    }

    pub fn spectrum(&self) -> &Array2<Complex64> {
        &self.spectrum
    }

    /// Intensity image for a spectral shift of `(u, v)` high-resolution pixels.
    pub fn frame(&self, shift: (i64, i64)) -> Result<Array2<f64>> {
        let n = self.spectrum.nrows();
        let window = SubSpectrum::locate(n, self.pupil.grid.pixels, shift)?;
        let scale = window.size as f64 / n as f64;
        let mut sub = window.extract(&self.spectrum);
        ndarray::Zip::from(&mut sub)
            .and(&self.pupil.mask)
            .for_each(|s, &p| *s *= p * scale);
        Ok(idft2_array(&sub).mapv(|c| c.norm_sqr()))
    }
}

/// Camera-sized window of a centered high-resolution spectrum.
///
/// An illumination with direction sines giving a shift `(u, v)` moves the
/// object spectrum by `+(u, v)`, so the pupil samples the spectrum around
/// `−(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubSpectrum {
    pub top: usize,
    pub left: usize,
    pub size: usize,
}

impl SubSpectrum {
    pub fn locate(grid: usize, size: usize, shift: (i64, i64)) -> Result<Self> {
        let (u, v) = shift;
        let c = (grid / 2) as i64;
        let m = (size / 2) as i64;
        let top = c - v - m;
        let left = c - u - m;
        let fits = |start: i64| start >= 0 && start + size as i64 <= grid as i64;
        if !fits(top) || !fits(left) {
            return Err(FpmError::ShiftOutOfBounds {
                u,
                v,
                grid,
                window: size,
            });
        }
        Ok(Self {
            top: top as usize,
            left: left as usize,
            size,
        })
    }

    pub fn extract(&self, spectrum: &Array2<Complex64>) -> Array2<Complex64> {
        spectrum
            .slice(s![self.top..self.top + self.size, self.left..self.left + self.size])
            .to_owned()
    }
}

pub fn camera_pupil(system: &SystemSpec) -> Result<Pupil> {
    make_pupil(system.cutoff_frequency(), system.camera_grid().frequency_grid())
}

/// One captured intensity image, `|F⁻¹{H(u−u₀, v−v₀)·circ}|²`.
pub fn simulate_frame(
    object: &ComplexObject,
    shift: (i64, i64),
    pupil: &Pupil,
) -> Result<Array2<f64>> {
    ForwardModel::new(object, pupil.clone())?.frame(shift)
}

/// One frame per plan entry; frames are rendered in parallel but returned in plan order.
pub fn simulate_stack(
    object: &ComplexObject,
    system: &SystemSpec,
    plan: &IlluminationPlan,
) -> Result<CaptureStack> {
    let pupil = camera_pupil(system)?;
    let m = system.camera_pixels;
    let n = object.size();
    if n % m != 0 {
        return Err(invalid(
            "upsampling",
            format!("object grid {n} is not an integer multiple of camera grid {m}"),
        ));
    }
    let model = ForwardModel::new(object, pupil)?;
    let frames = plan
        .entries
        .par_iter()
        .map(|e: &PlanEntry| model.frame((e.shift_px_u, e.shift_px_v)))
        .collect::<Result<Vec<_>>>()?;
    CaptureStack::new(frames, plan.clone(), *system, n / m, Provenance::Simulated)
}

/// Result of comparing the frames of a point-symmetric LED pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairComparison {
    pub led: LedIndex,
    pub rmse: f64,
    pub profile_a: LineProfile,
    pub profile_b: LineProfile,
}

/// Gray-level RMSE between the frames of `led` and its point reflection,
/// plus both central-row profiles.
pub fn symmetric_pair_difference(stack: &CaptureStack, led: LedIndex) -> Result<PairComparison> {
    let partner = led.symmetric_partner();
    let a = stack
        .frame_for(led)
        .ok_or(FpmError::MissingFrame { i: led.i, j: led.j })?;
    let b = stack.frame_for(partner).ok_or(FpmError::MissingFrame {
        i: partner.i,
        j: partner.j,
    })?;
    let row = a.nrows() / 2;
    Ok(PairComparison {
        led,
        rmse: rmse_gray(a, b)?,
        profile_a: line_profile(a, Axis::Row, row)?,
        profile_b: line_profile(b, Axis::Row, row)?,
    })
}

/// Additive Gaussian noise with standard deviation `sigma × stack max`,
/// clamped at zero. Deterministic for a given seed.
pub fn add_noise(stack: &CaptureStack, sigma: f64, seed: u64) -> Result<CaptureStack> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(stack.clone());
    }
    let std = sigma * stack.max_intensity();
    let normal = Normal::new(0.0, std).map_err(|e| invalid("sigma", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = stack
        .frames
        .iter()
        .map(|f| f.mapv(|v| (v + normal.sample(&mut rng)).max(0.0)))
        .collect();
    let mut noisy = stack.clone();
    noisy.frames = frames;
    Ok(noisy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FrequencyGrid;
    use crate::geometry::{make_plan, LedArraySpec, PlanMode};
    use crate::objects::{make_object, standard_test_object, ObjectKind, ObjectSource};

    fn small_system() -> SystemSpec {
        SystemSpec {
            camera_pixels: 32,
            ..SystemSpec::simulation_default()
        }
    }

    #[test]
    fn uniform_object_gives_flat_frame() {
        let sys = small_system();
        let obj = make_object(&ObjectSource::Uniform(128), &ObjectSource::Uniform(128), 0.0, 0.40625).unwrap();
        let frame = simulate_frame(&obj, (0, 0), &camera_pupil(&sys).unwrap()).unwrap();
        for v in frame.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_object_pairs_are_identical() {
        let sys = small_system();
        let obj = standard_test_object(ObjectKind::AmplitudeOnly, 128, 0.0, 0.40625, 0).unwrap();
        let model = ForwardModel::new(&obj, camera_pupil(&sys).unwrap()).unwrap();
        for shift in [(3, 5), (12, -7), (0, 20), (-30, 30)] {
            let a = model.frame(shift).unwrap();
            let b = model.frame((-shift.0, -shift.1)).unwrap();
            let scale = a.iter().copied().fold(0.0, f64::max);
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() <= 1e-10 * scale.max(1e-300));
            }
        }
    }

    #[test]
    fn full_pupil_at_unit_upsampling_reproduces_intensity() {
        let obj = standard_test_object(ObjectKind::Complex, 32, 1.0, 1.0, 2).unwrap();
        let grid = FrequencyGrid::new(32, 1.0 / 32.0).unwrap();
        let pupil = make_pupil(10.0, grid).unwrap();
        let frame = simulate_frame(&obj, (0, 0), &pupil).unwrap();
        let expected = obj.field.intensity();
        for (a, b) in frame.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn frames_never_gain_energy() {
        let sys = small_system();
        let obj = standard_test_object(ObjectKind::Complex, 128, 1.5, 0.40625, 5).unwrap();
        let model = ForwardModel::new(&obj, camera_pupil(&sys).unwrap()).unwrap();
        let bound = obj.field.energy() / 16.0;
        for shift in [(0, 0), (10, 4), (-40, 20)] {
            let e: f64 = model.frame(shift).unwrap().sum();
            assert!(e <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn window_bounds_are_enforced() {
        assert!(SubSpectrum::locate(128, 32, (48, 0)).is_ok());
        assert!(SubSpectrum::locate(128, 32, (-48, 48)).is_ok());
        assert!(matches!(
            SubSpectrum::locate(128, 32, (49, 0)),
            Err(FpmError::ShiftOutOfBounds { .. })
        ));
        assert!(SubSpectrum::locate(128, 32, (0, -49)).is_err());
    }

    fn small_stack(kind: ObjectKind, mode: PlanMode) -> CaptureStack {
        let sys = small_system();
        let arr = LedArraySpec::new(5, 4.0, 110.0).unwrap();
        let obj = standard_test_object(kind, 128, std::f64::consts::FRAC_PI_2, 0.40625, 0).unwrap();
        let plan = make_plan(&arr, mode, &sys, sys.high_res_grid(4).frequency_grid(), false).unwrap();
        simulate_stack(&obj, &sys, &plan).unwrap()
    }

    #[test]
    fn pair_difference_needs_both_frames() {
        let full = small_stack(ObjectKind::AmplitudeOnly, PlanMode::Full);
        let cmp = symmetric_pair_difference(&full, LedIndex::new(1, 2)).unwrap();
        assert!(cmp.rmse < 1e-9);
        assert_eq!(cmp.profile_a.values.len(), 32);
        let half = small_stack(ObjectKind::AmplitudeOnly, PlanMode::HalfRows);
        assert!(matches!(
            symmetric_pair_difference(&half, LedIndex::new(1, 2)),
            Err(FpmError::MissingFrame { i: -1, j: -2 })
        ));
    }

    #[test]
    fn noise_is_seeded_and_scaled() {
        let stack = small_stack(ObjectKind::PhaseOnly, PlanMode::Full);
        assert_eq!(add_noise(&stack, 0.0, 1).unwrap(), stack);
        let a = add_noise(&stack, 0.01, 7).unwrap();
        let b = add_noise(&stack, 0.01, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.frames.iter().flatten().all(|&v| v >= 0.0));
        assert!(add_noise(&stack, -1.0, 7).is_err());
    }

    #[test]
    fn stack_rejects_mismatched_frames() {
        let stack = small_stack(ObjectKind::AmplitudeOnly, PlanMode::Full);
        let mut frames = stack.frames.clone();
        frames.pop();
        assert!(CaptureStack::new(frames, stack.plan.clone(), stack.system, 4, Provenance::Loaded).is_err());
    }
}
