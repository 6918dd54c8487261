//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fpm_cli::analysis::{contrast_table, cutoff_periods, designated_group, finest_resolved, full_vs_half, FullVsHalf};
use fpm_cli::config::{Overrides, Pipeline, PipelineConfig};
use fpm_core::airy::airy_kernel;
use fpm_core::field::{ComplexField2D, FrequencyGrid, SpatialGrid};
use fpm_core::forward::{simulate_frame, simulate_stack, symmetric_pair_difference, CaptureStack};
use fpm_core::fourier::{dft2, dft2_array, idft2};
use fpm_core::geometry::{led_angle, make_plan, synthesized_na, LedArraySpec, LedIndex, PlanMode, SystemSpec};
use fpm_core::metrics::Axis;
use fpm_core::objects::{standard_test_object, ComplexObject, ObjectKind};
use fpm_core::pupil::make_pupil;
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Frozen reference values for the (2, 2) pair at phase range π/2, seed 0.
const PHASE_ONLY_RING_2: f64 = 3.4535479081;
const COMPLEX_RING_2: f64 = 6.7813388046;

type Check = Result<String, String>;

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, id: usize, name: &str, limit_s: Option<f64>, f: impl FnOnce() -> Check) {
        let t = Instant::now();
        let mut outcome = f();
        let secs = t.elapsed().as_secs_f64();
        if let (Ok(detail), Some(limit)) = (&outcome, limit_s) {
            if secs >= limit {
                outcome = Err(format!("{detail}; took {secs:.1}s, limit {limit}s"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL [{id}] {name}: {detail} ({secs:.1}s)");
            }
        }
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn reference_stack(kind: ObjectKind) -> CaptureStack {
    let sys = SystemSpec::simulation_default();
    let grid = sys.high_res_grid(4);
    let obj = standard_test_object(kind, 512, FRAC_PI_2, grid.pitch, 0).unwrap();
    let array = LedArraySpec::new(15, 4.0, 110.0).unwrap();
    let plan = make_plan(&array, PlanMode::Full, &sys, grid.frequency_grid(), false).unwrap();
    simulate_stack(&obj, &sys, &plan).unwrap()
}

fn ring(stack: &CaptureStack, k: i32) -> f64 {
    symmetric_pair_difference(stack, LedIndex::new(k, k)).unwrap().rmse
}

fn amplitude_symmetry() -> Check {
    let stack = reference_stack(ObjectKind::AmplitudeOnly);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for led in stack.plan.array.all_leds().filter(|l| *l < l.symmetric_partner()) {
        worst = worst.max(symmetric_pair_difference(&stack, led).map_err(|e| e.to_string())?.rmse);
        pairs += 1;
    }
    ensure(pairs == 112, format!("{pairs} pairs"))?;
    ensure(worst < 1e-9, format!("worst pair rmse {worst:e}"))?;
    Ok(format!("{pairs} pairs, worst rmse {worst:.1e}"))
}

fn thin_phase_trend() -> Check {
    let stack = reference_stack(ObjectKind::PhaseOnly);
    let rings: Vec<f64> = (1..=7).map(|k| ring(&stack, k)).collect();
    let shown = rings.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(", ");
    ensure(rings[3] < rings[1], format!("(4,4) {} not below (2,2) {}: [{shown}]", rings[3], rings[1]))?;
    ensure(
        rings.windows(2).all(|w| w[1] <= 1.05 * w[0]),
        format!("not non-increasing within 5%: [{shown}]"),
    )?;
    Ok(format!("rings 1..7 rmse [{shown}]"))
}

fn complex_asymmetry() -> Check {
    let complex = ring(&reference_stack(ObjectKind::Complex), 2);
    let phase = ring(&reference_stack(ObjectKind::PhaseOnly), 2);
    ensure(complex > phase, format!("complex {complex} <= phase-only {phase}"))?;
    for (name, v, r) in [("complex", complex, COMPLEX_RING_2), ("phase-only", phase, PHASE_ONLY_RING_2)] {
        ensure((v - r).abs() < 0.01 * r, format!("{name} {v} drifted from frozen {r}"))?;
    }
    Ok(format!("(2,2) rmse complex {complex:.4} > phase-only {phase:.4}, both within 1% of frozen values"))
}

fn geometry_numbers() -> Check {
    let a15 = LedArraySpec::new(15, 4.0, 110.0).unwrap();
    let mut notes = Vec::new();
    for (k, expect) in [(2, 4.2), (4, 8.3)] {
        let ang = led_angle(&a15, LedIndex::new(k, k)).unwrap();
        for theta in [ang.theta_x_deg, ang.theta_y_deg] {
            ensure((theta - expect).abs() <= 0.05, format!("LED ({k},{k}) angle {theta} vs {expect}"))?;
        }
        notes.push(format!("{:.3}°", ang.theta_x_deg));
    }
    let sys = SystemSpec::simulation_default();
    for (side, d, expect) in [(15, 108.0, 0.45), (17, 113.5, 0.48)] {
        let na = synthesized_na(&LedArraySpec::new(side, 4.0, d).unwrap(), &sys);
        ensure((na - expect).abs() <= 0.01, format!("{side}x{side} at {d} mm: NA {na} vs {expect}"))?;
        notes.push(format!("NA {na:.4}"));
    }
    for (side, full, half) in [(15, 225, 120), (17, 289, 153)] {
        let grid = sys.high_res_grid(4).frequency_grid();
        let array = LedArraySpec::new(side, 4.0, 110.0).unwrap();
        let n = |mode| make_plan(&array, mode, &sys, grid, false).unwrap().len();
        let (f, h) = (n(PlanMode::Full), n(PlanMode::HalfRows));
        ensure((f, h) == (full, half), format!("{side}x{side}: {f}/{h} frames"))?;
        notes.push(format!("{f}/{h}"));
    }
    Ok(notes.join(", "))
}

/// `|(O·tilt ⊛ K)/N|²` by direct circular convolution with the Airy kernel.
fn spatial_oracle(object: &ComplexObject, shift: (i64, i64), cutoff: f64, n: usize, m: usize) -> Array2<f64> {
    let kernel = airy_kernel(SpatialGrid::new(n, object.field.pitch()).unwrap(), cutoff).unwrap();
    let k = kernel.field.samples();
    let o = object.field.samples();
    let (u, v) = (shift.0 as f64, shift.1 as f64);
    let tilted = Array2::from_shape_fn((n, n), |(r, c)| {
        o[[r, c]] * Complex64::from_polar(1.0, TAU * (u * c as f64 + v * r as f64) / n as f64)
    });
    let (step, c0) = (n / m, n / 2);
    Array2::from_shape_fn((m, m), |(mr, mc)| {
        let (r, c) = (mr * step, mc * step);
        let mut acc = Complex64::new(0.0, 0.0);
        for ((sr, sc), t) in tilted.indexed_iter() {
            acc += t * k[[(r + n + c0 - sr) % n, (c + n + c0 - sc) % n]];
        }
        (acc / n as f64).norm_sqr()
    })
}

fn forward_oracle() -> Check {
    let (n, m, pitch) = (64, 32, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples = Array2::from_shape_fn((n, n), |_| {
        Complex64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..1.5))
    });
    let object = ComplexObject {
        field: ComplexField2D::new(samples, pitch).unwrap(),
        amplitude_source: "random".into(),
        phase_source: "random".into(),
        phase_range: 1.5,
    };
    let fgrid = FrequencyGrid::new(m, 1.0 / (n as f64 * pitch)).unwrap();
    // radius² = 22.5 px² keeps the rim clear of grid points
    let cutoff = 22.5f64.sqrt() * fgrid.step;
    let pupil = make_pupil(cutoff, fgrid).unwrap();
    let mut worst = 0.0f64;
    for shift in [(0, 0), (5, -3), (-9, 12)] {
        let fast = simulate_frame(&object, shift, &pupil).map_err(|e| e.to_string())?;
        let slow = spatial_oracle(&object, shift, cutoff, n, m);
        let num: f64 = fast.iter().zip(slow.iter()).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = slow.iter().map(|b| b * b).sum();
        worst = worst.max((num / den).sqrt());
    }
    ensure(worst < 1e-3, format!("relative L2 {worst:e}"))?;
    Ok(format!("64x64 object, 3 shifts, worst relative L2 {worst:.2e}"))
}

/// Textbook centered unitary DFT.
fn brute_force_dft(x: &Array2<Complex64>) -> Array2<Complex64> {
    let (h, w) = x.dim();
    let (ch, cw) = ((h / 2) as f64, (w / 2) as f64);
    let norm = 1.0 / ((h * w) as f64).sqrt();
    Array2::from_shape_fn((h, w), |(k1, k2)| {
        let (f1, f2) = (k1 as f64 - ch, k2 as f64 - cw);
        let mut acc = Complex64::new(0.0, 0.0);
        for ((n1, n2), v) in x.indexed_iter() {
            let arg = -TAU * (f1 * (n1 as f64 - ch) / h as f64 + f2 * (n2 as f64 - cw) / w as f64);
            acc += v * Complex64::from_polar(1.0, arg);
        }
        acc * norm
    })
}

fn transforms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut random = |n: usize| {
        Array2::from_shape_fn((n, n), |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    };
    let f = ComplexField2D::new(random(512), 0.40625).unwrap();
    let spec = dft2(&f);
    let parseval = (spec.energy() - f.energy()).abs() / f.energy();
    let back = idft2(&spec);
    let round_trip = back
        .samples()
        .iter()
        .zip(f.samples().iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let x = random(32);
    let brute = dft2_array(&x)
        .iter()
        .zip(brute_force_dft(&x).iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    ensure(parseval < 1e-12, format!("Parseval {parseval:e}"))?;
    ensure(round_trip < 1e-12, format!("round trip {round_trip:e}"))?;
    ensure(brute < 1e-10, format!("brute-force DFT {brute:e}"))?;
    Ok(format!(
        "Parseval {parseval:.1e}, round trip {round_trip:.1e}, brute-force 32x32 {brute:.1e}"
    ))
}

fn resolution_gain(p: &Pipeline, amp: &FullVsHalf) -> Check {
    let table = contrast_table(p, amp).map_err(|e| e.to_string())?;
    let (objective, synthesized) = cutoff_periods(p);
    let g = designated_group(p, &table, Axis::Row).ok_or("no bar groups")?;
    let full = g.depth_full.ok_or("window too short")?;
    let raw = g.depth_raw.ok_or("window too short")?;
    ensure(
        g.period_um < objective && g.period_um > synthesized,
        format!("group period {} µm outside ({synthesized:.2}, {objective:.2})", g.period_um),
    )?;
    ensure(full > 0.2, format!("reconstruction depth {full} at {:.2} µm", g.period_um))?;
    ensure(raw < 0.05, format!("raw frame depth {raw} at {:.2} µm", g.period_um))?;
    ensure(amp.seconds_full < 300.0, format!("full reconstruction took {:.1}s", amp.seconds_full))?;
    Ok(format!(
        "{:.2} µm bars (cutoffs {objective:.2} / {synthesized:.2} µm): depth {full:.3} reconstructed vs {raw:.3} raw; full recon {:.1}s",
        g.period_um, amp.seconds_full
    ))
}

fn half_vs_full(p: &Pipeline, runs: &[FullVsHalf]) -> Check {
    let by = |label: &str| runs.iter().find(|r| r.label == label).ok_or(format!("no {label} run"));
    let amp = by("amplitude-only")?;
    let phase = by("phase-only")?;
    let complex = by("complex")?;
    let mut notes = Vec::new();
    for r in [amp, phase] {
        let ncc = r.ncc_primary();
        ensure(ncc > 0.9, format!("{} {} ncc {ncc}", r.label, r.primary.as_str()))?;
        let table = contrast_table(p, r).map_err(|e| e.to_string())?;
        let g = finest_resolved(&table, Axis::Column, 0.2).ok_or(format!("{}: no resolved group", r.label))?;
        ensure(
            g.michelson_full >= g.michelson_half,
            format!("{} {:.2} µm: contrast full {} < half {}", r.label, g.period_um, g.michelson_full, g.michelson_half),
        )?;
        notes.push(format!(
            "{} ncc({}) {ncc:.4}, contrast at {:.2} µm {:.3} >= {:.3}",
            r.label,
            r.primary.as_str(),
            g.period_um,
            g.michelson_full,
            g.michelson_half
        ));
    }
    ensure(
        complex.ncc_primary() < amp.ncc_primary(),
        format!("complex ncc {} not below amplitude-only {}", complex.ncc_primary(), amp.ncc_primary()),
    )?;
    notes.push(format!("complex ncc {:.4} < {:.4}", complex.ncc_primary(), amp.ncc_primary()));
    Ok(notes.join("; "))
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism(scratch: &Path) -> Check {
    let small = scratch.join("small.json");
    fs::write(
        &small,
        r#"{"system": {"objective_na": 0.1, "magnification": 4.0, "focal_length_mm": 45.0,
                      "wavelength_um": 0.63, "camera_pitch_um": 6.5, "camera_pixels": 64},
            "object": {"source": "standard", "kind": "complex", "size_px": 256},
            "recon": {"iterations": 5}, "noise_sigma": 0.01, "seed": 9}"#,
    )
    .unwrap();
    let run = |out: &Path| -> Result<(), String> {
        let small = small.to_str().unwrap();
        let out = out.to_str().unwrap();
        let defaults = format!("{out}/defaults");
        let jobs: Vec<Vec<&str>> = vec![
            vec!["simulate", "--config", small, "--out", out],
            vec!["reconstruct", "--config", small, "--out", out],
            vec!["compare-symmetric", "--config", small, "--out", out],
            vec!["full-vs-half", "--config", small, "--out", out],
            vec!["simulate", "--plan", "half-rows", "--out", &defaults],
        ];
        for args in jobs {
            let o = Command::new(env!("CARGO_BIN_EXE_fpm")).args(&args).output().map_err(|e| e.to_string())?;
            if !o.status.success() {
                return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
            }
        }
        Ok(())
    };
    let (a, b) = (scratch.join("run-a"), scratch.join("run-b"));
    run(&a)?;
    run(&b)?;
    let (ta, tb) = (tree(&a), tree(&b));
    ensure(ta.len() == tb.len(), format!("{} vs {} files", ta.len(), tb.len()))?;
    for ((pa, da), (pb, db)) in ta.iter().zip(&tb) {
        ensure(pa == pb && da == db, format!("{} differs", pa.display()))?;
    }
    Ok(format!("{} files byte-identical across two runs of every verb", ta.len()))
}

fn main() {
    let scratch = tempfile::tempdir().expect("scratch dir");
    let mut suite = Suite { failures: 0 };
    suite.run(1, "amplitude-only symmetric pairs", Some(30.0), amplitude_symmetry);
    suite.run(2, "thin-phase ring trend", Some(30.0), thin_phase_trend);
    suite.run(3, "complex-object asymmetry", None, complex_asymmetry);
    suite.run(4, "geometry numbers", None, geometry_numbers);
    suite.run(5, "forward model vs spatial Airy oracle", Some(60.0), forward_oracle);
    suite.run(6, "transform correctness", None, transforms);

    let overrides = Overrides {
        out: Some(scratch.path().join("unused")),
        ..Overrides::default()
    };
    let pipeline = Pipeline::validate(PipelineConfig::default(), Path::new("."), &overrides).expect("default config");
    let t = Instant::now();
    let runs: Result<Vec<FullVsHalf>, String> = pipeline
        .subjects()
        .map_err(|e| e.to_string())
        .and_then(|subs| subs.iter().map(|s| full_vs_half(&pipeline, s).map_err(|e| e.to_string())).collect());
    let shared = t.elapsed().as_secs_f64();
    match &runs {
        Ok(runs) => {
            let amp = runs.iter().find(|r| r.label == "amplitude-only").expect("amplitude-only run");
            suite.run(7, "resolution gain", None, || resolution_gain(&pipeline, amp));
            suite.run(8, "half-rows vs full", None, || {
                half_vs_full(&pipeline, runs).and_then(|d| {
                    ensure(shared < 600.0, format!("{d}; reconstructions took {shared:.1}s"))?;
                    Ok(format!("{d}; six reconstructions {shared:.1}s"))
                })
            });
        }
        Err(e) => {
            suite.run(7, "resolution gain", None, || Err(e.clone()));
            suite.run(8, "half-rows vs full", None, || Err(e.clone()));
        }
    }
    suite.run(9, "determinism", None, || determinism(scratch.path()));

    println!("{} of 9 criteria failed", suite.failures);
    if suite.failures > 0 {
        std::process::exit(1);
    }
}
