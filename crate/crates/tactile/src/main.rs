//! Command-line entry point wiring the pipeline together:
//! generate -> train -> classify -> evaluate -> sensitivity -> fixation,
//! with a `pipeline` subcommand running everything end to end. All artifacts
//! are deterministic for a fixed seed and configuration.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tactile::classify::{self, hist_fit, knn_predict, map_what, map_where, KnnModel, Target};
use tactile::data::{center_grid, filter_abnormal_taps, DatasetGrid};
use tactile::eval::{
    error_by_location, percentile_summary, regression_gradient, what_rmse, Axis, Method,
    PredictionRecord,
};
use tactile::io::{
    self, fixation_to_file, load_dataset, load_model, pca_from_ser, pca_to_ser, save_dataset,
    write_dataset_csv, write_json, write_manifold_csv, write_predictions_csv,
    write_sensitivity_csv, MethodReport, ModelFile, ReportFile,
};
use tactile::pca::{self, project_grid};
use tactile::sensitivity::{sensitivity_map, AlgParams, GridShape, SensitivityMap};
use tactile::svg::{heatmap, line_plot, write_svg, Series};
use tactile::synth::{generate_grid, preset};

#[derive(Parser)]
#[command(name = "tactile", version, about = "Tactile where/what perception pipeline")]
struct Cli {
    /// Directory for artifacts without an explicit path.
    #[arg(long, global = true, env = "TACTILE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Knn,
    Prob,
    Both,
}

/// PCA and histogram-model tunables shared by `train` and `pipeline`.
#[derive(Args)]
struct TrainOpts {
    /// Stage-1 scree-gap threshold.
    #[arg(long, default_value_t = pca::DEFAULT_GAMMA1)]
    gamma1: f64,
    /// Stage-2 scree-gap threshold.
    #[arg(long, default_value_t = pca::DEFAULT_GAMMA2)]
    gamma2: f64,
    /// Histogram bins per PC component.
    #[arg(long, default_value_t = classify::DEFAULT_N_BINS)]
    n_bins: usize,
    /// Additive histogram smoothing.
    #[arg(long, default_value_t = classify::DEFAULT_EPSILON)]
    epsilon: f64,
}

/// Sensitivity-analysis tunables shared by `sensitivity`, `fixation` and
/// `pipeline`.
#[derive(Args)]
struct AlgOpts {
    /// Number of overlapping manifold sections.
    #[arg(long, default_value_t = 10)]
    sections: usize,
    /// Cone half-angle (radians) of the neighbour filter.
    #[arg(long, default_value_t = std::f64::consts::PI / 18.0)]
    theta_threshold: f64,
    /// Neighbour vectors collected per point.
    #[arg(long, default_value_t = 5)]
    n_neighbours: usize,
    /// Fraction of a section shared with its neighbour.
    #[arg(long, default_value_t = 0.5)]
    overlap_fraction: f64,
    /// Moving-median window over locations (odd).
    #[arg(long, default_value_t = 5)]
    filter_window: usize,
}

impl AlgOpts {
    fn params(&self) -> AlgParams {
        AlgParams {
            sections: self.sections,
            theta_threshold: self.theta_threshold,
            n_neighbours: self.n_neighbours,
            overlap_fraction: self.overlap_fraction,
            filter_window: self.filter_window,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic tap dataset from a named preset.
    Generate {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the preset's noise level.
        #[arg(long)]
        noise_std: Option<f64>,
        /// Dataset JSON path (default: <out-dir>/dataset.json).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also export the segments as flat CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fit the two-stage PCA and both classifiers on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        train: TrainOpts,
        /// Model JSON path (default: <out-dir>/model.json).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Training-manifold CSV path (default: <out-dir>/manifold.csv).
        #[arg(long)]
        manifold_csv: Option<PathBuf>,
        /// Export only the first N PC components to the manifold CSV.
        #[arg(long)]
        manifold_dims: Option<usize>,
    },
    /// Classify a dataset against a trained model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        /// Prediction CSV path (default: <out-dir>/predictions.csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute gradients, RMSE and error curves from prediction CSVs.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// Treat `what' values as circular (degrees on a 360 ring).
        #[arg(long)]
        circular_what: bool,
        /// Report JSON path (default: <out-dir>/report.json).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Per-location sensitivity map of a trained model's manifold.
    Sensitivity {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        alg: AlgOpts,
        /// Map CSV path (default: <out-dir>/sensitivity.csv).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Heatmap SVG path (default: <out-dir>/sensitivity.svg).
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Full map JSON path (default: <out-dir>/sensitivity.json).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Pick the fixation location from a trained model's manifold.
    Fixation {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        alg: AlgOpts,
        /// Summary JSON path (default: <out-dir>/fixation.json).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run generate -> train -> classify -> evaluate -> sensitivity ->
    /// fixation end to end with one seed (test set uses seed + 1).
    Pipeline {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        noise_std: Option<f64>,
        #[command(flatten)]
        train: TrainOpts,
        #[command(flatten)]
        alg: AlgOpts,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        #[arg(long)]
        manifold_dims: Option<usize>,
    },
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating output directory {}", cli.out_dir.display()))?;
    let out = |name: &str, explicit: Option<PathBuf>| {
        explicit.unwrap_or_else(|| cli.out_dir.join(name))
    };

    match cli.command {
        Command::Generate {
            preset: name,
            seed,
            noise_std,
            output,
            csv,
        } => {
            let grid = generate_preset(&name, seed, noise_std)?;
            let path = out("dataset.json", output);
            save_dataset(&grid, &path)?;
            println!("wrote {}", path.display());
            if let Some(csv_path) = csv {
                write_dataset_csv(&grid, &csv_path)?;
                println!("wrote {}", csv_path.display());
            }
        }
        Command::Train {
            dataset,
            train,
            model,
            manifold_csv,
            manifold_dims,
        } => {
            let grid = load_dataset(&dataset)
                .with_context(|| format!("reading {}", dataset.display()))?;
            let bundle = train_model(&grid, &train)?;
            let model_path = out("model.json", model);
            write_json(&model_path, &bundle)?;
            println!("wrote {}", model_path.display());
            let manifold_path = out("manifold.csv", manifold_csv);
            write_manifold_csv(&bundle.manifold, manifold_dims, &manifold_path)?;
            println!("wrote {}", manifold_path.display());
        }
        Command::Classify {
            model,
            dataset,
            method,
            output,
        } => {
            let bundle = load_model(&model)?;
            let grid = load_dataset(&dataset)
                .with_context(|| format!("reading {}", dataset.display()))?;
            let records = classify_grid(&bundle, &grid, method)?;
            let path = out("predictions.csv", output);
            write_predictions_csv(&records, &path)?;
            println!("wrote {}", path.display());
        }
        Command::Evaluate {
            predictions,
            circular_what,
            report,
        } => {
            let records = io::read_predictions_csv(&predictions)
                .with_context(|| format!("reading {}", predictions.display()))?;
            let path = out("report.json", report);
            evaluate(&records, circular_what, &path, &cli.out_dir)?;
        }
        Command::Sensitivity {
            model,
            alg,
            csv,
            svg,
            json,
        } => {
            let bundle = load_model(&model)?;
            let map = sensitivity_map(&bundle.manifold, &bundle.shape, &alg.params())?;
            export_sensitivity(
                &map,
                &out("sensitivity.csv", csv),
                &out("sensitivity.svg", svg),
                &out("sensitivity.json", json),
            )?;
        }
        Command::Fixation { model, alg, output } => {
            let bundle = load_model(&model)?;
            let map = sensitivity_map(&bundle.manifold, &bundle.shape, &alg.params())?;
            let path = out("fixation.json", output);
            write_json(&path, &fixation_to_file(&map))?;
            println!(
                "fixation loc_index {} (value {})",
                map.fixation_loc_index, map.fixation_loc_value
            );
            println!("wrote {}", path.display());
        }
        Command::Pipeline {
            preset: name,
            seed,
            noise_std,
            train,
            alg,
            method,
            manifold_dims,
        } => {
            pipeline(
                &cli.out_dir,
                &name,
                seed,
                noise_std,
                &train,
                &alg,
                method,
                manifold_dims,
            )?;
        }
    }
    Ok(())
}

fn generate_preset(name: &str, seed: u64, noise_std: Option<f64>) -> Result<DatasetGrid> {
    let (mut sensor, stim) = preset(name)?;
    if let Some(std) = noise_std {
        sensor.noise_std = std;
    }
    Ok(generate_grid(&sensor, &stim, seed)?)
}

/// Filter abnormal taps and center what is left.
fn preprocess(grid: &DatasetGrid) -> Result<DatasetGrid> {
    let (filtered, report) = filter_abnormal_taps(grid)?;
    if !report.dropped.is_empty() {
        eprintln!("dropped {} abnormal tap(s)", report.dropped.len());
    }
    if let Some(counts) = &report.ambiguous_mode {
        eprintln!("ambiguous modal sample count {counts:?}; kept the largest");
    }
    Ok(center_grid(&filtered)?)
}

fn train_model(grid: &DatasetGrid, opts: &TrainOpts) -> Result<ModelFile> {
    let prepped = preprocess(grid)?;
    let pca_model = pca::fit(&prepped, opts.gamma1, opts.gamma2)?;
    let manifold = project_grid(&pca_model, &prepped)?;
    let hist = hist_fit(&manifold, grid.n_loc, grid.n_id, opts.n_bins, opts.epsilon)?;
    Ok(ModelFile {
        schema_version: io::SCHEMA_VERSION,
        shape: GridShape::from(grid),
        meta: grid.meta.clone(),
        pca: pca_to_ser(&pca_model),
        manifold,
        hist,
        knn_k: 1,
    })
}

fn classify_grid(
    bundle: &ModelFile,
    grid: &DatasetGrid,
    method: MethodArg,
) -> Result<Vec<PredictionRecord>> {
    let prepped = preprocess(grid)?;
    let pca_model = pca_from_ser(&bundle.pca);
    let queries = project_grid(&pca_model, &prepped)?;

    let mut records = Vec::new();
    if matches!(method, MethodArg::Knn | MethodArg::Both) {
        let knn = KnnModel::new(bundle.manifold.clone(), Target::Id)?;
        for q in &queries {
            let pred = knn_predict(&knn, q)?;
            records.push(PredictionRecord {
                true_loc_index: q.label.loc_index,
                true_id_index: q.label.id_index,
                true_loc_value: q.label.loc_value,
                true_id_value: q.label.id_value,
                pred_loc_index: pred.loc_index,
                pred_id_index: pred.id_index,
                pred_loc_value: pred.loc_value,
                pred_id_value: pred.id_value,
                method: Method::Knn,
            });
        }
    }
    if matches!(method, MethodArg::Prob | MethodArg::Both) {
        for q in &queries {
            let (id_index, id_value) = map_what(&bundle.hist, q)?;
            let (loc_index, loc_value) = map_where(&bundle.hist, q)?;
            records.push(PredictionRecord {
                true_loc_index: q.label.loc_index,
                true_id_index: q.label.id_index,
                true_loc_value: q.label.loc_value,
                true_id_value: q.label.id_value,
                pred_loc_index: loc_index,
                pred_id_index: id_index,
                pred_loc_value: loc_value,
                pred_id_value: id_value,
                method: Method::Prob,
            });
        }
    }
    Ok(records)
}

fn write_csv_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Percentile curves of predicted vs actual values plus the identity line.
fn percentile_svg(rows: &[tactile::eval::PercentileRow], axis_name: &str, title: &str) -> String {
    let identity: Vec<(f64, f64)> = rows.iter().map(|r| (r.class_value, r.class_value)).collect();
    let series = [
        Series {
            label: "identity",
            points: identity,
            stroke: "#999999",
            dashed: true,
        },
        Series {
            label: "median",
            points: rows.iter().map(|r| (r.class_value, r.median)).collect(),
            stroke: "#1f77b4",
            dashed: false,
        },
        Series {
            label: "p25",
            points: rows.iter().map(|r| (r.class_value, r.p25)).collect(),
            stroke: "#2ca02c",
            dashed: true,
        },
        Series {
            label: "p75",
            points: rows.iter().map(|r| (r.class_value, r.p75)).collect(),
            stroke: "#d62728",
            dashed: true,
        },
    ];
    line_plot(
        &series,
        &format!("actual {axis_name}"),
        &format!("predicted {axis_name}"),
        title,
    )
}

fn evaluate(
    records: &[PredictionRecord],
    circular_what: bool,
    report_path: &Path,
    out_dir: &Path,
) -> Result<()> {
    let mut methods = Vec::new();
    let mut error_series = Vec::new();
    for method in [Method::Knn, Method::Prob] {
        let recs: Vec<PredictionRecord> = records
            .iter()
            .filter(|r| r.method == method)
            .cloned()
            .collect();
        if recs.is_empty() {
            continue;
        }
        let what_percentiles = percentile_summary(&recs, Axis::Id)?;
        let where_percentiles = percentile_summary(&recs, Axis::Loc)?;
        let by_location = error_by_location(&recs, circular_what);

        write_csv_rows(
            &what_percentiles,
            &out_dir.join(format!("percentiles_what_{method}.csv")),
        )?;
        write_csv_rows(
            &where_percentiles,
            &out_dir.join(format!("percentiles_where_{method}.csv")),
        )?;
        write_csv_rows(
            &by_location,
            &out_dir.join(format!("error_by_location_{method}.csv")),
        )?;
        write_svg(
            &out_dir.join(format!("pred_vs_actual_what_{method}.svg")),
            &percentile_svg(
                &what_percentiles,
                "what value",
                &format!("what predictions ({method})"),
            ),
        )?;
        write_svg(
            &out_dir.join(format!("pred_vs_actual_where_{method}.svg")),
            &percentile_svg(
                &where_percentiles,
                "where value",
                &format!("where predictions ({method})"),
            ),
        )?;

        error_series.push((
            method.to_string(),
            by_location
                .iter()
                .map(|e| (e.loc_value, e.mean_abs_what_error))
                .collect::<Vec<_>>(),
        ));
        methods.push(MethodReport {
            method,
            what_gradient: regression_gradient(&recs, Axis::Id)?,
            where_gradient: regression_gradient(&recs, Axis::Loc)?,
            what_rmse: what_rmse(&recs, circular_what)?,
            what_percentiles,
            where_percentiles,
            error_by_location: by_location,
        });
    }
    if methods.is_empty() {
        return Err(tactile::error::TactileError::EmptyDataset.into());
    }

    let palette = ["#1f77b4", "#d62728"];
    let series: Vec<Series> = error_series
        .iter()
        .enumerate()
        .map(|(i, (label, points))| Series {
            label,
            points: points.clone(),
            stroke: palette[i % palette.len()],
            dashed: false,
        })
        .collect();
    write_svg(
        &out_dir.join("error_by_location.svg"),
        &line_plot(
            &series,
            "location value",
            "mean abs what error",
            "what error by location",
        ),
    )?;

    let report = ReportFile {
        schema_version: io::SCHEMA_VERSION,
        circular_what,
        methods,
    };
    write_json(report_path, &report)?;
    for m in &report.methods {
        println!(
            "{}: what_gradient {:.4} where_gradient {:.4} what_rmse {:.4}",
            m.method, m.what_gradient, m.where_gradient, m.what_rmse
        );
    }
    println!("wrote {}", report_path.display());
    Ok(())
}

fn export_sensitivity(
    map: &SensitivityMap,
    csv_path: &Path,
    svg_path: &Path,
    json_path: &Path,
) -> Result<()> {
    write_sensitivity_csv(map, csv_path)?;
    write_svg(
        svg_path,
        &heatmap(
            &map.normalized.to_array(),
            &map.loc_values,
            &map.id_values,
            "normalized sensitivity",
        ),
    )?;
    write_json(json_path, map)?;
    for p in [csv_path, svg_path, json_path] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn pipeline(
    out_dir: &Path,
    name: &str,
    seed: u64,
    noise_std: Option<f64>,
    train: &TrainOpts,
    alg: &AlgOpts,
    method: MethodArg,
    manifold_dims: Option<usize>,
) -> Result<()> {
    let train_grid = generate_preset(name, seed, noise_std)?;
    let test_grid = generate_preset(name, seed + 1, noise_std)?;
    save_dataset(&train_grid, &out_dir.join("dataset_train.json"))?;
    save_dataset(&test_grid, &out_dir.join("dataset_test.json"))?;

    let bundle = train_model(&train_grid, train)?;
    write_json(&out_dir.join("model.json"), &bundle)?;
    write_manifold_csv(&bundle.manifold, manifold_dims, &out_dir.join("manifold.csv"))?;

    let records = classify_grid(&bundle, &test_grid, method)?;
    write_predictions_csv(&records, &out_dir.join("predictions.csv"))?;

    evaluate(
        &records,
        train_grid.circular_what,
        &out_dir.join("report.json"),
        out_dir,
    )?;

    let map = sensitivity_map(&bundle.manifold, &bundle.shape, &alg.params())?;
    export_sensitivity(
        &map,
        &out_dir.join("sensitivity.csv"),
        &out_dir.join("sensitivity.svg"),
        &out_dir.join("sensitivity.json"),
    )?;
    write_json(&out_dir.join("fixation.json"), &fixation_to_file(&map))?;
    println!(
        "fixation loc_index {} (value {})",
        map.fixation_loc_index, map.fixation_loc_value
    );
    Ok(())
}
