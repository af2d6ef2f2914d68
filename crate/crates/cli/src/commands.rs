use std::path::Path;

use serde::Serialize;

use qpt_core::channel::{AffineMap, ChiMatrix};
use qpt_core::document::{
    parse_config, CompareDocument, MeshDocument, ProjectionSection, RecordsDocument, ResultDocument, SCHEMA_VERSION,
};
use qpt_core::mesh::{to_obj, EllipsoidMesh};
use qpt_core::metrics::{process_distance_report, ReportContext};
use qpt_core::process_tomography::run_process_tomography;
use qpt_core::projection::{project_to_physical_with, projection_report, ProjectionOptions, ProjectionResult};
use qpt_core::simulator::{record_sets, run_experiment, ExperimentConfig, PRESETS};
use qpt_core::QptError;

use crate::error::{CliError, CliResult};
use crate::files::{read_document, read_text, sidecar_path, write_document, write_text, Staging};
use crate::ConfigArgs;

/// Runs all three built-in presets in one pipeline invocation.
const REPRO_PRESET: &str = "paper-repro";

fn apply_overrides(mut config: ExperimentConfig, args: &ConfigArgs) -> CliResult<ExperimentConfig> {
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(shots) = args.shots {
        config.shots = shots;
    }
    config.validate().map_err(|e| CliError::input("configuration", e))?;
    Ok(config)
}

fn named_preset(name: &str) -> CliResult<ExperimentConfig> {
    ExperimentConfig::preset(name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Input(format!("unknown preset '{name}' (known: {})", known.join(", ")))
    })
}

fn resolve_config(args: &ConfigArgs) -> CliResult<ExperimentConfig> {
    let base = match (&args.config, &args.preset) {
        (Some(path), _) => parse_config(&read_text(path)?).map_err(|e| CliError::input(path.display(), e))?,
        (None, Some(name)) => named_preset(name)?,
        (None, None) => return Err(CliError::Input("one of --config or --preset is required".into())),
    };
    apply_overrides(base, args)
}

pub fn simulate(args: &ConfigArgs, out: &Path) -> CliResult<()> {
    let config = resolve_config(args)?;
    let doc = simulate_document(config)?;
    write_document(out, &doc)?;
    println!("wrote {} ({} record sets)", out.display(), doc.measurements.len());
    Ok(())
}

fn simulate_document(config: ExperimentConfig) -> CliResult<RecordsDocument> {
    let measurements = run_experiment(&config).map_err(|e| CliError::input("simulation", e))?;
    Ok(RecordsDocument::new(config, measurements))
}

fn reconstruct_document(records: &RecordsDocument) -> CliResult<ResultDocument> {
    let estimate =
        run_process_tomography(&record_sets(&records.measurements)).map_err(|e| CliError::input("reconstruction", e))?;
    log::info!(
        "reconstructed chi: cp={} (min Choi eigenvalue {:.3e}), tp={}",
        estimate.cp.completely_positive,
        estimate.cp.min_choi_eigenvalue,
        estimate.tp.trace_preserving
    );
    Ok(ResultDocument::from_estimate(&estimate, Some(records.config)))
}

pub fn reconstruct(records: &Path, out: &Path) -> CliResult<()> {
    let doc = reconstruct_document(&read_document(records)?)?;
    write_document(out, &doc)?;
    println!("wrote {} (cp: {}, tp: {})", out.display(), doc.cp_flag, doc.tp_flag);
    Ok(())
}

/// Adds the projection section; `Ok(false)` means the search did not
/// converge and the section holds the best iterate.
fn project_document(doc: &mut ResultDocument, options: &ProjectionOptions) -> CliResult<bool> {
    let result: ProjectionResult = match project_to_physical_with(&doc.chi, options) {
        Ok(r) => r,
        Err(QptError::NonConvergence { best, .. }) => *best,
        Err(e) => return Err(CliError::input("projection", e)),
    };
    let report = projection_report(&doc.chi, &result).map_err(|e| CliError::input("projection report", e))?;
    log::info!(
        "projection distance {:.3e} after {} evaluations (converged: {})",
        result.distance,
        result.iterations,
        result.converged
    );
    doc.projection = Some(ProjectionSection::new(&result, report));
    Ok(result.converged)
}

fn not_converged(path: &Path) -> CliError {
    CliError::NonConvergence(format!(
        "projection did not converge; best iterate written to {} with converged=false",
        path.display()
    ))
}

pub fn project(result: &Path, out: &Path, max_evaluations: usize) -> CliResult<()> {
    let mut doc: ResultDocument = read_document(result)?;
    let options = ProjectionOptions {
        max_evaluations,
        ..ProjectionOptions::default()
    };
    let converged = project_document(&mut doc, &options)?;
    write_document(out, &doc)?;
    if !converged {
        return Err(not_converged(out));
    }
    let distance = doc.projection.as_ref().map_or(0.0, |p| p.distance);
    println!("wrote {} (projection distance {distance:.6e})", out.display());
    Ok(())
}

fn compare_processes(a: &ChiMatrix, b: &ChiMatrix, context: ReportContext) -> CliResult<CompareDocument> {
    let comparison = process_distance_report(a, b, context).map_err(|e| CliError::input("comparison", e))?;
    Ok(CompareDocument {
        schema_version: SCHEMA_VERSION,
        comparison,
    })
}

pub fn compare(first: &Path, second: &Path, out: &Path) -> CliResult<()> {
    let a: ResultDocument = read_document(first)?;
    let b: ResultDocument = read_document(second)?;
    let context = ReportContext::new(
        format!("{} ({})", first.display(), a.best_label()),
        format!("{} ({})", second.display(), b.best_label()),
    );
    let doc = compare_processes(a.best_chi(), b.best_chi(), context)?;
    write_document(out, &doc)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn render_files(doc: &ResultDocument, obj: &Path, subdivisions: u32) -> CliResult<()> {
    let mesh = |map: &AffineMap| EllipsoidMesh::new(map, subdivisions).map_err(|e| CliError::input("mesh", e));
    let mut meshes = vec![("raw", mesh(&doc.affine)?)];
    if let Some(p) = &doc.projection {
        meshes.push(("projected", mesh(&p.affine_tilde)?));
    }
    meshes.push(("reference", mesh(&AffineMap::IDENTITY)?));

    let objects: Vec<(&str, &[[f64; 3]])> = meshes.iter().map(|(n, m)| (*n, m.vertices.as_slice())).collect();
    let faces = meshes[0].1.faces();
    write_text(obj, &to_obj(&objects, faces))?;
    let sidecar = MeshDocument {
        schema_version: SCHEMA_VERSION,
        subdivisions,
        objects: meshes.iter().map(|(n, m)| m.summary(n)).collect(),
    };
    write_document(&sidecar_path(obj), &sidecar)
}

pub fn render(result: &Path, out: &Path, subdivisions: u32) -> CliResult<()> {
    let doc: ResultDocument = read_document(result)?;
    render_files(&doc, out, subdivisions)?;
    println!("wrote {} and {}", out.display(), sidecar_path(out).display());
    Ok(())
}

/// One line of the pipeline summary.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct RunSummary {
    name: String,
    decoherence_time: f64,
    raw_cp: bool,
    raw_tp: bool,
    projection_distance: f64,
    converged: bool,
    /// Diagonal of the projected Bloch map.
    projected_scaling: [f64; 3],
    projected_axis_lengths: [f64; 3],
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct PipelineSummary {
    schema_version: u32,
    runs: Vec<RunSummary>,
}

fn run_pipeline_once(name: &str, config: ExperimentConfig, dir: &Path, subdivisions: u32) -> CliResult<RunSummary> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    let records = simulate_document(config)?;
    write_document(&dir.join("records.json"), &records)?;

    let mut doc = reconstruct_document(&records)?;
    let converged = project_document(&mut doc, &ProjectionOptions::default())?;
    let context = ReportContext::new(doc.best_label(), "identity");
    doc.comparison = Some(compare_processes(doc.best_chi(), &ChiMatrix::identity(), context)?.comparison);
    write_document(&dir.join("result.json"), &doc)?;
    render_files(&doc, &dir.join("ellipsoid.obj"), subdivisions)?;

    let projection = doc.projection.as_ref().expect("projection section set above");
    let e = projection.affine_tilde.e;
    Ok(RunSummary {
        name: name.to_string(),
        decoherence_time: config.decoherence_time,
        raw_cp: doc.cp_flag,
        raw_tp: doc.tp_flag,
        projection_distance: projection.distance,
        converged,
        projected_scaling: [e[0][0], e[1][1], e[2][2]],
        projected_axis_lengths: projection.affine_tilde.axis_lengths(),
    })
}

pub fn pipeline(args: &ConfigArgs, out: &Path, subdivisions: u32) -> CliResult<()> {
    // (label, subdirectory, config); a single run writes into the output root.
    let runs: Vec<(String, String, ExperimentConfig)> = if args.preset.as_deref() == Some(REPRO_PRESET) {
        PRESETS
            .iter()
            .map(|&(name, _)| Ok((name.to_string(), name.to_string(), apply_overrides(named_preset(name)?, args)?)))
            .collect::<CliResult<_>>()?
    } else {
        let label = args.preset.clone().unwrap_or_else(|| "config".to_string());
        vec![(label, String::new(), resolve_config(args)?)]
    };

    let staging = Staging::new(out)?;
    let mut summaries = Vec::new();
    for (name, subdir, config) in &runs {
        log::info!("pipeline run '{name}'");
        let dir = staging.path().join(subdir);
        summaries.push(run_pipeline_once(name, *config, &dir, subdivisions)?);
    }
    let all_converged = summaries.iter().all(|s| s.converged);
    write_document(
        &staging.path().join("summary.json"),
        &PipelineSummary {
            schema_version: SCHEMA_VERSION,
            runs: summaries,
        },
    )?;
    staging.commit()?;
    if !all_converged {
        return Err(not_converged(out));
    }
    println!("wrote pipeline artifacts to {}", out.display());
    Ok(())
}
