use std::fs;
use std::path::{Path, PathBuf};

use elastoct_core::diagnostics::{self, FieldCheckConfig};
use elastoct_core::raster::RasterFormat;
use elastoct_core::rng::{derive_seed, SplitMix64};
use elastoct_core::{
    deform as deform_image, load_image, min_jacobian, render_grid_overlay, save_image, DeformationGrid,
    DisplacementField,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{AugmentArgs, DeformArgs, FieldCheckArgs, Format};
use crate::{runtime, usage, Outcome};

fn print_json<T: Serialize>(value: &T) -> Outcome {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn check_writable_format(path: &Path) -> Outcome {
    RasterFormat::from_path(path).map_err(|e| usage(e.to_string()))?;
    Ok(())
}

#[derive(Serialize)]
struct FieldDump<'a> {
    grid: &'a DeformationGrid,
    field: &'a DisplacementField,
}

#[derive(Serialize)]
struct DeformSummary<'a> {
    input: &'a Path,
    output: &'a Path,
    width: usize,
    height: usize,
    sigma: f64,
    seed: u64,
    grid: String,
    border: String,
    mean_abs_diff: f64,
    min_jacobian: Option<f64>,
    max_displacement: f64,
}

pub fn deform(a: DeformArgs, format: Format) -> Outcome {
    check_writable_format(&a.output)?;
    let image = load_image(&a.input)?;
    let d = deform_image(&image, a.sigma, a.seed, (a.warp.grid.0, a.warp.grid.1), a.warp.border)?;
    let mean_abs_diff = d.image.mean_abs_diff(&image).unwrap_or(0.0);
    let output = match a.overlay_grid {
        Some(spacing) => render_grid_overlay(&d.image, &d.field, spacing as usize)?,
        None => d.image,
    };
    save_image(&output, &a.output)?;
    if let Some(path) = &a.dump_field {
        let json = serde_json::to_vec(&FieldDump {
            grid: &d.grid,
            field: &d.field,
        })?;
        fs::write(path, json).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    let summary = DeformSummary {
        input: &a.input,
        output: &a.output,
        width: image.width(),
        height: image.height(),
        sigma: a.sigma,
        seed: a.seed,
        grid: a.warp.grid.to_string(),
        border: a.warp.border.to_string(),
        mean_abs_diff,
        min_jacobian: min_jacobian(&d.field).ok(),
        max_displacement: d.field.max_magnitude(),
    };
    match format {
        Format::Json => print_json(&summary),
        Format::Text => {
            println!(
                "{} -> {}  sigma {} seed {} grid {}  mean |diff| {:.4}  max displacement {:.3} px",
                summary.input.display(),
                summary.output.display(),
                summary.sigma,
                summary.seed,
                summary.grid,
                summary.mean_abs_diff,
                summary.max_displacement,
            );
            Ok(())
        }
    }
}

/// Image files directly inside `dir`, sorted by file name.
pub fn image_files(dir: &Path) -> Result<Vec<PathBuf>, crate::Failure> {
    let entries = fs::read_dir(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| runtime(format!("{}: {e}", dir.display())))?.path();
        if path.is_file() && RasterFormat::from_path(&path).is_ok() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

#[derive(Debug, Serialize)]
struct AugmentEntry {
    source: String,
    output: String,
    copy: u64,
    sigma: f64,
    seed: u64,
}

pub const AUGMENT_INDEX: &str = "augment_index.json";

/// Deformation seed of copy `copy` of input `index`.
pub fn copy_seed(master: u64, index: usize, copy: u64) -> u64 {
    derive_seed(derive_seed(master, index as u64), copy)
}

/// Sigmas are drawn in (input, copy) order from their own stream.
pub fn sigma_stream(master: u64) -> SplitMix64 {
    SplitMix64::new(derive_seed(master, u64::MAX))
}

pub fn augment(a: AugmentArgs, format: Format) -> Outcome {
    if a.sigma_min > a.sigma_max {
        return Err(usage(format!(
            "--sigma-min {} exceeds --sigma-max {}",
            a.sigma_min, a.sigma_max
        )));
    }
    let inputs = image_files(&a.input_dir)?;
    if inputs.is_empty() {
        return Err(runtime(format!("no .png or .pgm images in {}", a.input_dir.display())));
    }
    fs::create_dir_all(&a.output_dir).map_err(|e| runtime(format!("{}: {e}", a.output_dir.display())))?;

    let mut sigmas = sigma_stream(a.seed);
    let mut jobs = Vec::new();
    for (index, source) in inputs.iter().enumerate() {
        let stem = source.file_stem().unwrap_or_default().to_string_lossy();
        let ext = source.extension().unwrap_or_default().to_string_lossy();
        for copy in 0..a.copies {
            let seed = copy_seed(a.seed, index, copy);
            let sigma = sigmas.uniform(a.sigma_min, a.sigma_max);
            jobs.push(AugmentEntry {
                source: source.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                output: format!("{stem}_aug{copy:03}.{ext}"),
                copy,
                sigma,
                seed,
            });
        }
    }
    let grid = (a.warp.grid.0, a.warp.grid.1);
    inputs.par_iter().enumerate().try_for_each(|(index, source)| -> Outcome {
        let image = load_image(source)?;
        let per = a.copies as usize;
        for job in &jobs[index * per..(index + 1) * per] {
            let d = deform_image(&image, job.sigma, job.seed, grid, a.warp.border)?;
            save_image(&d.image, &a.output_dir.join(&job.output))?;
        }
        Ok(())
    })?;
    let index_path = a.output_dir.join(AUGMENT_INDEX);
    fs::write(&index_path, serde_json::to_string_pretty(&jobs)? + "\n")
        .map_err(|e| runtime(format!("{}: {e}", index_path.display())))?;

    match format {
        Format::Json => print_json(&jobs),
        Format::Text => {
            println!(
                "wrote {} images ({} inputs x {} copies) to {}",
                jobs.len(),
                inputs.len(),
                a.copies,
                a.output_dir.display()
            );
            Ok(())
        }
    }
}

pub fn field_check(a: FieldCheckArgs, format: Format) -> Outcome {
    if a.width < 3 || a.height < 3 {
        return Err(usage("--width and --height must be at least 3"));
    }
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let report = diagnostics::field_check(&FieldCheckConfig {
        width: a.width,
        height: a.height,
        sigma: a.sigma,
        grid: (a.grid.0, a.grid.1),
        trials: a.trials,
        seed: a.seed,
    })?;
    match format {
        Format::Json => print_json(&report),
        Format::Text => {
            println!("trials          {}", report.trials);
            println!("fold-overs      {} ({:.4})", report.foldovers, report.foldover_rate);
            println!("min jacobian    {:.6}", report.min_jacobian);
            println!("magnitude       {:.4} .. {:.4} px", report.min_magnitude, report.max_magnitude);
            println!("max |gradient|  {:.6}", report.max_abs_gradient);
            Ok(())
        }
    }
}
