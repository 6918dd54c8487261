//! One function per CLI verb. Each takes a validated pipeline and returns a
//! short summary for stdout.

use std::fs;
use std::path::{Path, PathBuf};

use fpm_core::error::FpmError;
use fpm_core::geometry::{led_angle, PlanMode};
use fpm_core::metrics::{joint_line_profiles, normalized_cross_correlation, rmse_gray, Axis};
use fpm_core::pgm::load_grayscale;
use fpm_core::recon::reconstruct;
use fpm_core::report::CsvReport;
use fpm_core::stack_io::{export_result, export_stack, import_stack, read_manifest};

use crate::analysis::{compare_pairs, contrast_table, full_vs_half, pair_plan, simulate, FullVsHalf};
use crate::config::Pipeline;
use crate::error::{CliError, CliResult};

pub const STACK_DIR: &str = "stack";
pub const RECON_DIR: &str = "reconstruction";
pub const SYMMETRIC_DIR: &str = "compare-symmetric";
pub const FULL_VS_HALF_DIR: &str = "full-vs-half";

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders the configured object under the configured plan and writes the stack.
pub fn simulate_cmd(p: &Pipeline, stack_dir: Option<&Path>) -> CliResult<String> {
    let dir = stack_dir.map(Path::to_path_buf).unwrap_or_else(|| p.output_dir.join(STACK_DIR));
    let subject = p.subject()?;
    let plan = p.plan(p.config.plan)?;
    let stack = simulate(p, &subject, &plan)?;
    create_dir(&dir)?;
    export_stack(&stack, &dir)?;
    Ok(format!(
        "simulated {} frames ({}, {} plan) into {}",
        stack.len(),
        subject.label,
        plan.mode,
        dir.display()
    ))
}

/// Reconstructs a stored stack after checking it against the config.
pub fn reconstruct_cmd(p: &Pipeline, stack_dir: Option<&Path>) -> CliResult<String> {
    let dir = stack_dir.map(Path::to_path_buf).unwrap_or_else(|| p.output_dir.join(STACK_DIR));
    let manifest = read_manifest(&dir)?;
    let mismatch = |what: &str| CliError::Core(FpmError::Inconsistent(format!("stack {what} differs from the config")));
    if manifest.system != *p.system() {
        return Err(mismatch("system"));
    }
    if manifest.upsampling != p.upsampling {
        return Err(mismatch("upsampling (object grid)"));
    }
    if manifest.plan.array != p.config.led_array {
        return Err(mismatch("LED array"));
    }
    let stack = import_stack(&dir)?;
    let result = reconstruct(&stack, p.system(), &p.config.recon)?;
    let out = p.output_dir.join(RECON_DIR);
    create_dir(&out)?;
    export_result(&result, &out)?;
    Ok(format!(
        "reconstructed {} frames in {} iterations into {}",
        stack.len(),
        result.metadata.iterations_run,
        out.display()
    ))
}

/// Symmetric-pair RMSE and center-row profiles for every object.
pub fn compare_symmetric_cmd(p: &Pipeline) -> CliResult<String> {
    let pairs = p.pairs();
    let plan = pair_plan(&p.plan(PlanMode::Full)?, &pairs);
    let mut rmse = CsvReport::new([
        "object", "i", "j", "partner_i", "partner_j", "theta_x_deg", "theta_y_deg", "rmse",
    ])
    .comment("gray-level RMSE between the frames of LED (i, j) and its point reflection")
    .comment("both frames mapped to [0, 255] by their joint min and max");
    let mut profiles = CsvReport::new(["object", "i", "j", "position", "profile", "partner_profile"])
        .comment("center-row profiles of both frames, each normalized to [0, 255] by its own min and max");
    let mut lines = Vec::new();
    for subject in p.subjects()? {
        let stack = simulate(p, &subject, &plan)?;
        for c in compare_pairs(&stack, &pairs)? {
            let angle = led_angle(&p.config.led_array, c.led)?;
            let partner = c.led.symmetric_partner();
            rmse.push([
                subject.label.clone(),
                c.led.i.to_string(),
                c.led.j.to_string(),
                partner.i.to_string(),
                partner.j.to_string(),
                angle.theta_x_deg.to_string(),
                angle.theta_y_deg.to_string(),
                c.rmse.to_string(),
            ]);
            for (pos, (a, b)) in c.profile_a.values.iter().zip(&c.profile_b.values).enumerate() {
                profiles.push([
                    subject.label.clone(),
                    c.led.i.to_string(),
                    c.led.j.to_string(),
                    pos.to_string(),
                    a.to_string(),
                    b.to_string(),
                ]);
            }
            lines.push(format!("{:>15} {:>8} rmse {:.6}", subject.label, c.led.to_string(), c.rmse));
        }
    }
    let out = p.output_dir.join(SYMMETRIC_DIR);
    create_dir(&out)?;
    rmse.write(&out.join("rmse.csv"))?;
    profiles.write(&out.join("profiles.csv"))?;
    lines.push(format!("wrote {}", out.display()));
    Ok(lines.join("\n"))
}

fn profile_report(cmp: &FullVsHalf, row: usize) -> CliResult<CsvReport> {
    let (fa, ha) = joint_line_profiles(&cmp.full.amplitude, &cmp.half.amplitude, Axis::Row, row)?;
    let (fp, hp) = joint_line_profiles(&cmp.full.phase, &cmp.half.phase, Axis::Row, row)?;
    let mut t = CsvReport::new(["position", "full_amplitude", "half_amplitude", "full_phase", "half_phase"])
        .comment(format!("profiles along row {row}"))
        .comment("joint normalization: each channel maps the min and max over both reconstructions to [0, 255]");
    for k in 0..fa.values.len() {
        t.push([
            k.to_string(),
            fa.values[k].to_string(),
            ha.values[k].to_string(),
            fp.values[k].to_string(),
            hp.values[k].to_string(),
        ]);
    }
    Ok(t)
}

/// Full vs half-rows reconstructions of every object, with correlation,
/// RMSE and bar-group contrast tables.
pub fn full_vs_half_cmd(p: &Pipeline) -> CliResult<String> {
    let subjects = p.subjects()?;
    let mut results = Vec::new();
    for subject in &subjects {
        let cmp = full_vs_half(p, subject)?;
        let table = match subject.kind {
            Some(_) => Some(contrast_table(p, &cmp)?),
            None => None,
        };
        results.push((cmp, table));
    }

    let out = p.output_dir.join(FULL_VS_HALF_DIR);
    let mut summary = CsvReport::new([
        "object",
        "primary",
        "frames_full",
        "frames_half",
        "ncc_amplitude",
        "ncc_phase",
        "ncc_primary",
        "rmse_amplitude",
        "rmse_phase",
    ])
    .comment("half-rows reconstruction compared with the full one after global phase alignment")
    .comment("rmse uses gray levels under a joint [0, 255] map");
    let mut contrast = CsvReport::new([
        "object",
        "group",
        "axis",
        "period_px",
        "period_um",
        "depth_full",
        "depth_half",
        "depth_raw",
        "michelson_full",
        "michelson_half",
    ])
    .comment("bar-group contrast on the primary channel; row profiles cross vertical bars, column profiles horizontal bars")
    .comment("depth: fitted sinusoid amplitude over local mean, empty when the window is too short")
    .comment("raw: band-limited interpolation of the central frame amplitude");
    let mut lines = Vec::new();
    for (cmp, table) in &results {
        let dir = out.join(&cmp.label);
        let (full_dir, half_dir) = (dir.join("full"), dir.join("half"));
        create_dir(&full_dir)?;
        create_dir(&half_dir)?;
        export_result(&cmp.full, &full_dir)?;
        export_result(&cmp.half, &half_dir)?;
        profile_report(cmp, cmp.full.amplitude.nrows() / 2)?.write(&dir.join("profiles.csv"))?;
        summary.push([
            cmp.label.clone(),
            cmp.primary.as_str().to_string(),
            cmp.full.metadata.frame_count.to_string(),
            cmp.half.metadata.frame_count.to_string(),
            cmp.ncc_amplitude.to_string(),
            cmp.ncc_phase.to_string(),
            cmp.ncc_primary().to_string(),
            cmp.rmse_amplitude.to_string(),
            cmp.rmse_phase.to_string(),
        ]);
        for g in table.iter().flatten() {
            contrast.push([
                cmp.label.clone(),
                g.group.to_string(),
                match g.axis {
                    Axis::Row => "row".to_string(),
                    Axis::Column => "column".to_string(),
                },
                g.period_px.to_string(),
                g.period_um.to_string(),
                opt(g.depth_full),
                opt(g.depth_half),
                opt(g.depth_raw),
                g.michelson_full.to_string(),
                g.michelson_half.to_string(),
            ]);
        }
        lines.push(format!(
            "{:>15} ncc {:.4} ({}) full {:.1}s half {:.1}s",
            cmp.label,
            cmp.ncc_primary(),
            cmp.primary.as_str(),
            cmp.seconds_full,
            cmp.seconds_half
        ));
    }
    summary.write(&out.join("summary.csv"))?;
    contrast.write(&out.join("contrast.csv"))?;
    lines.push(format!("wrote {}", out.display()));
    Ok(lines.join("\n"))
}

/// RMSE and correlation between two grayscale images, optionally with a
/// jointly normalized row profile.
pub fn metrics_cmd(a: &Path, b: &Path, row: Option<usize>, out: Option<&Path>) -> CliResult<String> {
    let ia = load_grayscale(a)?;
    let ib = load_grayscale(b)?;
    let rmse = rmse_gray(&ia, &ib)?;
    let ncc = normalized_cross_correlation(&ia, &ib)?;
    let mut lines = vec![format!("rmse {rmse}"), format!("ncc {ncc}")];
    if let Some(dir) = out {
        create_dir(dir)?;
        let mut t = CsvReport::new(["image_a", "image_b", "rmse", "ncc"]);
        t.push([a.display().to_string(), b.display().to_string(), rmse.to_string(), ncc.to_string()]);
        let path: PathBuf = dir.join("metrics.csv");
        t.write(&path)?;
        if let Some(r) = row {
            let (pa, pb) = joint_line_profiles(&ia, &ib, Axis::Row, r)?;
            let mut prof = CsvReport::new(["position", "a", "b"])
                .comment(format!("row {r}, joint normalization to [0, 255]"));
            for (k, (x, y)) in pa.values.iter().zip(&pb.values).enumerate() {
                prof.push([k.to_string(), x.to_string(), y.to_string()]);
            }
            prof.write(&dir.join("profile.csv"))?;
        }
        lines.push(format!("wrote {}", dir.display()));
    } else if row.is_some() {
        return Err(CliError::config("row", "--row needs --out to write the profile"));
    }
    Ok(lines.join("\n"))
}
