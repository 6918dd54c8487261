//! LED-array illumination geometry: angles, spectral shifts, synthesized NA
//! and full/half acquisition plans.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FpmError, Result};
use crate::field::{FrequencyGrid, SpatialGrid};

/// Microscope and camera parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub objective_na: f64,
    pub magnification: f64,
    /// Informational only; pixel computations use NA/λ.
    pub focal_length_mm: f64,
    pub wavelength_um: f64,
    pub camera_pitch_um: f64,
    pub camera_pixels: usize,
}

impl SystemSpec {
    /// 4x / 0.1 NA objective, 630 nm, 128 px camera at 6.5 µm.
    pub fn simulation_default() -> Self {
        Self {
            objective_na: 0.1,
            magnification: 4.0,
            focal_length_mm: 45.0,
            wavelength_um: 0.63,
            camera_pitch_um: 6.5,
            camera_pixels: 128,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.objective_na > 0.0 && self.objective_na < 1.0) {
            return Err(invalid("objective_na", format!("must lie in (0, 1), got {}", self.objective_na)));
        }
        for (name, v) in [
            ("magnification", self.magnification),
            ("wavelength_um", self.wavelength_um),
            ("camera_pitch_um", self.camera_pitch_um),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.camera_pixels == 0 {
            return Err(invalid("camera_pixels", "must be at least 1"));
        }
        Ok(())
    }

    /// Camera pixel pitch referred to the object plane.
    pub fn object_pitch_um(&self) -> f64 {
        self.camera_pitch_um / self.magnification
    }

    /// Coherent cutoff NA/λ in cycles per micrometer.
    pub fn cutoff_frequency(&self) -> f64 {
        self.objective_na / self.wavelength_um
    }

    pub fn camera_grid(&self) -> SpatialGrid {
        SpatialGrid {
            pixels: self.camera_pixels,
            pitch: self.object_pitch_um(),
        }
    }

    /// Object grid with `upsampling` object pixels per camera pixel; spans
    /// the same field of view, so its frequency step equals the camera's.
    pub fn high_res_grid(&self, upsampling: usize) -> SpatialGrid {
        SpatialGrid {
            pixels: self.camera_pixels * upsampling,
            pitch: self.object_pitch_um() / upsampling as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedArraySpec {
    pub side_count: usize,
    pub led_pitch_mm: f64,
    pub distance_mm: f64,
}

impl LedArraySpec {
    pub fn new(side_count: usize, led_pitch_mm: f64, distance_mm: f64) -> Result<Self> {
        let spec = Self {
            side_count,
            led_pitch_mm,
            distance_mm,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.side_count == 0 || self.side_count % 2 == 0 {
            return Err(invalid(
                "side_count",
                format!("must be odd and at least 1, got {}", self.side_count),
            ));
        }
        if !(self.led_pitch_mm > 0.0 && self.led_pitch_mm.is_finite()) {
            return Err(invalid("led_pitch_mm", "must be positive"));
        }
        if !(self.distance_mm > 0.0 && self.distance_mm.is_finite()) {
            return Err(invalid("distance_mm", "must be positive"));
        }
        Ok(())
    }

    pub fn half_extent(&self) -> i32 {
        ((self.side_count - 1) / 2) as i32
    }

    pub fn contains(&self, led: LedIndex) -> bool {
        let h = self.half_extent();
        led.i.abs() <= h && led.j.abs() <= h
    }

    /// Every LED, row by row.
    pub fn all_leds(&self) -> impl Iterator<Item = LedIndex> {
        let h = self.half_extent();
        (-h..=h).flat_map(move |i| (-h..=h).map(move |j| LedIndex { i, j }))
    }
}

/// LED position relative to the central LED: `i` rows (y), `j` columns (x).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LedIndex {
    pub i: i32,
    pub j: i32,
}

impl LedIndex {
    pub const CENTER: LedIndex = LedIndex { i: 0, j: 0 };

    pub fn new(i: i32, j: i32) -> Self {
        Self { i, j }
    }

    /// Point reflection through the array center.
    pub fn symmetric_partner(self) -> Self {
        Self {
            i: -self.i,
            j: -self.j,
        }
    }
}

impl fmt::Display for LedIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

pub fn symmetric_partner(led: LedIndex) -> LedIndex {
    led.symmetric_partner()
}

/// Illumination direction of one LED.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlluminationAngle {
    /// Direction cosines of the illuminating wave vector along x and y.
    pub sin_x: f64,
    pub sin_y: f64,
    /// Angles of the beam projected onto the xz and yz planes, in degrees.
    pub theta_x_deg: f64,
    pub theta_y_deg: f64,
}

pub fn led_angle(array: &LedArraySpec, led: LedIndex) -> Result<IlluminationAngle> {
    if !array.contains(led) {
        return Err(FpmError::LedOutOfBounds {
            i: led.i,
            j: led.j,
            side: array.side_count,
        });
    }
    let x = led.j as f64 * array.led_pitch_mm;
    let y = led.i as f64 * array.led_pitch_mm;
    let d = array.distance_mm;
    let r = (x * x + y * y + d * d).sqrt();
    Ok(IlluminationAngle {
        sin_x: x / r,
        sin_y: y / r,
        theta_x_deg: x.atan2(d).to_degrees(),
        theta_y_deg: y.atan2(d).to_degrees(),
    })
}

/// Spectrum displacement caused by one illumination angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralShift {
    /// `sinθ/λ` divided by the frequency step, along u (columns) and v (rows).
    pub u: f64,
    pub v: f64,
    pub u_px: i64,
    pub v_px: i64,
}

pub fn spectral_shift(
    sin_x: f64,
    sin_y: f64,
    wavelength_um: f64,
    grid: FrequencyGrid,
) -> Result<SpectralShift> {
    if !(grid.step > 0.0 && grid.step.is_finite()) {
        return Err(invalid("step", "frequency step must be positive"));
    }
    if !(wavelength_um > 0.0) {
        return Err(invalid("wavelength_um", "must be positive"));
    }
    let u = sin_x / wavelength_um / grid.step;
    let v = sin_y / wavelength_um / grid.step;
    let (u_px, v_px) = (u.round() as i64, v.round() as i64);
    let bound = (grid.pixels / 2) as i64;
    if u_px.abs() > bound || v_px.abs() > bound {
        return Err(FpmError::ShiftOutOfBounds {
            u: u_px,
            v: v_px,
            grid: grid.pixels,
            window: 0,
        });
    }
    Ok(SpectralShift { u, v, u_px, v_px })
}

/// Objective NA plus the largest illumination direction sine (a corner LED).
pub fn synthesized_na(array: &LedArraySpec, system: &SystemSpec) -> f64 {
    let h = array.half_extent() as f64 * array.led_pitch_mm;
    let radial = h * std::f64::consts::SQRT_2;
    system.objective_na + radial / (radial * radial + array.distance_mm * array.distance_mm).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanMode {
    Full,
    HalfRows,
    MinimalCover,
}

impl PlanMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlanMode::Full => "full",
            PlanMode::HalfRows => "half-rows",
            PlanMode::MinimalCover => "minimal-cover",
        }
    }
}

impl fmt::Display for PlanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlanMode {
    type Err = FpmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(PlanMode::Full),
            "half-rows" => Ok(PlanMode::HalfRows),
            "minimal-cover" => Ok(PlanMode::MinimalCover),
            other => Err(invalid(
                "plan",
                format!("unknown mode `{other}`, expected full, half-rows or minimal-cover"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub i: i32,
    pub j: i32,
    pub sin_tx: f64,
    pub sin_ty: f64,
    pub shift_px_u: i64,
    pub shift_px_v: i64,
    /// Unrounded shifts in pixels.
    pub shift_u: f64,
    pub shift_v: f64,
    /// Illumination frequency falls inside the objective pupil.
    pub bright_field: bool,
}

impl PlanEntry {
    pub fn led(&self) -> LedIndex {
        LedIndex::new(self.i, self.j)
    }
}

/// Ordered set of LEDs to light, with their spectral shifts on the
/// high-resolution grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlluminationPlan {
    pub array: LedArraySpec,
    pub mode: PlanMode,
    /// Half-plane selection mirrored (rows i ≤ 0 instead of i ≥ 0).
    #[serde(default)]
    pub flipped: bool,
    pub entries: Vec<PlanEntry>,
}

impl IlluminationPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, led: LedIndex) -> Option<usize> {
        self.entries.iter().position(|e| e.led() == led)
    }

    pub fn leds(&self) -> impl Iterator<Item = LedIndex> + '_ {
        self.entries.iter().map(PlanEntry::led)
    }
}

/// Builds an acquisition plan, ordered outward from the central LED.
///
/// `grid` is the high-resolution object spectrum grid.
pub fn make_plan(
    array: &LedArraySpec,
    mode: PlanMode,
    system: &SystemSpec,
    grid: FrequencyGrid,
    flipped: bool,
) -> Result<IlluminationPlan> {
    array.validate()?;
    system.validate()?;
    let sign = if flipped { -1 } else { 1 };
    let keep = |led: LedIndex| -> bool {
        match mode {
            PlanMode::Full => true,
            PlanMode::HalfRows => sign * led.i >= 0,
            PlanMode::MinimalCover => {
                let partner = led.symmetric_partner();
                if flipped {
                    led >= partner
                } else {
                    led <= partner
                }
            }
        }
    };
    let mut leds: Vec<LedIndex> = array.all_leds().filter(|&l| keep(l)).collect();
    leds.sort_by(|a, b| spiral_key(*a).partial_cmp(&spiral_key(*b)).expect("finite keys"));

    let radius_px = system.cutoff_frequency() / grid.step;
    let entries = leds
        .into_iter()
        .map(|led| {
            let angle = led_angle(array, led)?;
            let shift = spectral_shift(angle.sin_x, angle.sin_y, system.wavelength_um, grid)?;
            Ok(PlanEntry {
                i: led.i,
                j: led.j,
                sin_tx: angle.sin_x,
                sin_ty: angle.sin_y,
                shift_px_u: shift.u_px,
                shift_px_v: shift.v_px,
                shift_u: shift.u,
                shift_v: shift.v,
                bright_field: shift.u.hypot(shift.v) <= radius_px,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IlluminationPlan {
        array: *array,
        mode,
        flipped,
        entries,
    })
}

/// Radius first, then counter-clockwise angle starting on +x.
fn spiral_key(led: LedIndex) -> (f64, f64) {
    let r2 = (led.i * led.i + led.j * led.j) as f64;
    let angle = (led.i as f64).atan2(led.j as f64).rem_euclid(std::f64::consts::TAU);
    (r2, angle)
}
