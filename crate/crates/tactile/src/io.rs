//! Versioned on-disk artifacts: dataset JSON/CSV, the trained model bundle,
//! manifold and prediction CSVs, sensitivity map CSV and the fixation and
//! evaluation reports. Every JSON document carries a `schema_version` field
//! and floats are printed at full round-trip precision, so save/load is
//! bit-exact for finite values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classify::HistModel;
use crate::data::{Array2Ser, ClassLabel, DatasetGrid, GridMeta, TactileSegment};
use crate::error::{Result, TactileError};
use crate::eval::{LocationError, Method, PercentileRow, PredictionRecord};
use crate::pca::{PcVector, PcaModel, Stage1Dim};
use crate::sensitivity::{GridShape, LocationRank, SensitivityMap};

pub const SCHEMA_VERSION: u32 = 1;

fn check_version(got: u32) -> Result<()> {
    if got != SCHEMA_VERSION {
        return Err(TactileError::SchemaVersion {
            got,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let r = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(r)?)
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetFile {
    pub schema_version: u32,
    pub header: DatasetHeader,
    pub segments: Vec<SegmentRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub sensor: String,
    pub n_dims: usize,
    pub n_id: usize,
    pub n_loc: usize,
    pub nominal_samples: usize,
    pub what_increment: f64,
    pub circular_what: bool,
    pub units: AxisPair<String>,
    pub ranges: AxisPair<(f64, f64)>,
    pub increments: AxisPair<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AxisPair<T> {
    pub loc: T,
    pub id: T,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub loc_index: usize,
    pub id_index: usize,
    pub loc_value: f64,
    pub id_value: f64,
    /// Row-major: one inner array per sensor dimension.
    pub samples: Vec<Vec<f64>>,
}

pub fn dataset_to_file(grid: &DatasetGrid) -> DatasetFile {
    DatasetFile {
        schema_version: SCHEMA_VERSION,
        header: DatasetHeader {
            sensor: grid.meta.sensor.clone(),
            n_dims: grid.n_dims,
            n_id: grid.n_id,
            n_loc: grid.n_loc,
            nominal_samples: grid.nominal_samples,
            what_increment: grid.what_increment,
            circular_what: grid.circular_what,
            units: AxisPair {
                loc: grid.meta.loc_unit.clone(),
                id: grid.meta.id_unit.clone(),
            },
            ranges: AxisPair {
                loc: grid.meta.loc_range,
                id: grid.meta.id_range,
            },
            increments: AxisPair {
                loc: grid.meta.loc_increment,
                id: grid.meta.id_increment,
            },
        },
        segments: grid
            .segments
            .iter()
            .map(|s| SegmentRecord {
                loc_index: s.label.loc_index,
                id_index: s.label.id_index,
                loc_value: s.label.loc_value,
                id_value: s.label.id_value,
                samples: s
                    .samples
                    .rows()
                    .into_iter()
                    .map(|r| r.to_vec())
                    .collect(),
            })
            .collect(),
    }
}

pub fn dataset_from_file(file: DatasetFile) -> Result<DatasetGrid> {
    check_version(file.schema_version)?;
    let h = file.header;
    let mut segments = Vec::with_capacity(file.segments.len());
    for rec in file.segments {
        let rows = rec.samples.len();
        if rows != h.n_dims {
            return Err(TactileError::ShapeMismatch(format!(
                "segment has {rows} rows, header says {}",
                h.n_dims
            )));
        }
        let cols = rec.samples.first().map_or(0, Vec::len);
        if rec.samples.iter().any(|r| r.len() != cols) {
            return Err(TactileError::ShapeMismatch(
                "ragged segment rows".into(),
            ));
        }
        let flat: Vec<f64> = rec.samples.into_iter().flatten().collect();
        segments.push(TactileSegment {
            samples: Array2::from_shape_vec((rows, cols), flat)
                .map_err(|e| TactileError::ShapeMismatch(e.to_string()))?,
            label: ClassLabel {
                loc_index: rec.loc_index,
                id_index: rec.id_index,
                loc_value: rec.loc_value,
                id_value: rec.id_value,
            },
        });
    }
    Ok(DatasetGrid {
        segments,
        n_id: h.n_id,
        n_loc: h.n_loc,
        n_dims: h.n_dims,
        nominal_samples: h.nominal_samples,
        what_increment: h.what_increment,
        circular_what: h.circular_what,
        meta: GridMeta {
            sensor: h.sensor,
            loc_unit: h.units.loc,
            id_unit: h.units.id,
            loc_range: h.ranges.loc,
            id_range: h.ranges.id,
            loc_increment: h.increments.loc,
            id_increment: h.increments.id,
        },
    })
}

pub fn save_dataset(grid: &DatasetGrid, path: &Path) -> Result<()> {
    write_json(path, &dataset_to_file(grid))
}

pub fn load_dataset(path: &Path) -> Result<DatasetGrid> {
    dataset_from_file(read_json(path)?)
}

/// One row per segment: label columns then the flattened samples
/// (dimension-major).
pub fn write_dataset_csv(grid: &DatasetGrid, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "loc_index".to_string(),
        "id_index".to_string(),
        "loc_value".to_string(),
        "id_value".to_string(),
    ];
    for k in 0..grid.n_dims {
        for j in 0..grid.nominal_samples {
            header.push(format!("s_{k}_{j}"));
        }
    }
    w.write_record(&header)?;
    for seg in &grid.segments {
        let mut row = vec![
            seg.label.loc_index.to_string(),
            seg.label.id_index.to_string(),
            seg.label.loc_value.to_string(),
            seg.label.id_value.to_string(),
        ];
        row.extend(seg.samples.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Model bundle: PCA projection, training manifold, histogram model
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub shape: GridShape,
    pub meta: GridMeta,
    pub pca: PcaSer,
    pub manifold: Vec<PcVector>,
    pub hist: HistModel,
    /// Nearest-neighbour k (only 1 is implemented).
    pub knn_k: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PcaSer {
    pub gamma1: f64,
    pub gamma2: f64,
    pub nominal_samples: usize,
    pub n_total: usize,
    pub n_reduced: usize,
    pub stage1: Vec<Stage1Ser>,
    pub stage2_means: Vec<f64>,
    pub stage2_eigenvectors: Array2Ser,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Stage1Ser {
    pub means: Vec<f64>,
    pub eigenvectors: Array2Ser,
}

pub fn pca_to_ser(model: &PcaModel) -> PcaSer {
    PcaSer {
        gamma1: model.gamma1,
        gamma2: model.gamma2,
        nominal_samples: model.nominal_samples,
        n_total: model.n_total,
        n_reduced: model.n_reduced(),
        stage1: model
            .stage1
            .iter()
            .map(|d| Stage1Ser {
                means: d.means.to_vec(),
                eigenvectors: Array2Ser::from_array(&d.eigenvectors),
            })
            .collect(),
        stage2_means: model.stage2_means.to_vec(),
        stage2_eigenvectors: Array2Ser::from_array(&model.stage2_eigenvectors),
    }
}

pub fn pca_from_ser(ser: &PcaSer) -> PcaModel {
    PcaModel {
        stage1: ser
            .stage1
            .iter()
            .map(|d| Stage1Dim {
                means: ndarray::Array1::from(d.means.clone()),
                eigenvectors: d.eigenvectors.to_array(),
            })
            .collect(),
        n_total: ser.n_total,
        stage2_means: ndarray::Array1::from(ser.stage2_means.clone()),
        stage2_eigenvectors: ser.stage2_eigenvectors.to_array(),
        gamma1: ser.gamma1,
        gamma2: ser.gamma2,
        nominal_samples: ser.nominal_samples,
    }
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let file: ModelFile = read_json(path)?;
    check_version(file.schema_version)?;
    Ok(file)
}

/// Training manifold as CSV: label columns then the first `dims` PC
/// components (all of them when `dims` is None).
pub fn write_manifold_csv(manifold: &[PcVector], dims: Option<usize>, path: &Path) -> Result<()> {
    let n_all = manifold.first().map_or(0, |p| p.components.len());
    let n = dims.map_or(n_all, |d| d.min(n_all));
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "loc_index".to_string(),
        "id_index".to_string(),
        "loc_value".to_string(),
        "id_value".to_string(),
    ];
    for r in 1..=n {
        header.push(format!("pc{r}"));
    }
    w.write_record(&header)?;
    for p in manifold {
        let mut row = vec![
            p.label.loc_index.to_string(),
            p.label.id_index.to_string(),
            p.label.loc_value.to_string(),
            p.label.id_value.to_string(),
        ];
        row.extend(p.components.iter().take(n).map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

pub fn write_predictions_csv(records: &[PredictionRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<PredictionRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sensitivity map and fixation summary
// ---------------------------------------------------------------------------

/// Normalised sensitivity as CSV: rows are locations (physical value
/// first), one column per `what' class.
pub fn write_sensitivity_csv(map: &SensitivityMap, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["loc_value".to_string()];
    header.extend(map.id_values.iter().map(|v| format!("what_{v}")));
    w.write_record(&header)?;
    let values = map.normalized.to_array();
    for (l, &loc_value) in map.loc_values.iter().enumerate() {
        let mut row = vec![loc_value.to_string()];
        row.extend((0..map.id_values.len()).map(|i| values[[l, i]].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FixationFile {
    pub schema_version: u32,
    pub fixation_loc_index: usize,
    pub fixation_value: f64,
    pub per_location: Vec<LocationRank>,
}

pub fn fixation_to_file(map: &SensitivityMap) -> FixationFile {
    FixationFile {
        schema_version: SCHEMA_VERSION,
        fixation_loc_index: map.fixation_loc_index,
        fixation_value: map.fixation_loc_value,
        per_location: map.per_location.clone(),
    }
}

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub circular_what: bool,
    pub methods: Vec<MethodReport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub what_gradient: f64,
    pub where_gradient: f64,
    pub what_rmse: f64,
    pub what_percentiles: Vec<PercentileRow>,
    pub where_percentiles: Vec<PercentileRow>,
    pub error_by_location: Vec<LocationError>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_cylinder_grid, SensorSpec, StimulusKind, StimulusSpec};
    use tempfile::tempdir;

    fn sample_grid() -> DatasetGrid {
        let sensor = SensorSpec {
            taxel_positions: (0..5).map(|i| [i as f64 - 2.0, 0.0]).collect(),
            receptive_width: 1.0,
            noise_std: 0.2,
            nominal_samples: 8,
            dims_per_taxel: 2,
        };
        let stim = StimulusSpec {
            kind: StimulusKind::Cylinder { center: 0.0 },
            id_values: vec![4.0, 6.0],
            loc_values: vec![-2.0, 0.0, 2.0],
            circular_what: false,
            reps_per_class: 2,
        };
        generate_cylinder_grid(&sensor, &stim, 17).unwrap()
    }

    #[test]
    fn dataset_roundtrip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ds.json");
        let grid = sample_grid();
        save_dataset(&grid, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(grid, back);
        // And the file itself is stable under a second round trip.
        let path2 = dir.path().join("ds2.json");
        save_dataset(&back, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn version_mismatch_rejected() {
        let mut file = dataset_to_file(&sample_grid());
        file.schema_version = 99;
        assert!(matches!(
            dataset_from_file(file),
            Err(TactileError::SchemaVersion { got: 99, .. })
        ));
    }

    #[test]
    fn predictions_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("preds.csv");
        let records = vec![PredictionRecord {
            true_loc_index: 1,
            true_id_index: 2,
            true_loc_value: 0.5,
            true_id_value: 4.0,
            pred_loc_index: 1,
            pred_id_index: 1,
            pred_loc_value: 0.5,
            pred_id_value: 2.0,
            method: Method::Prob,
        }];
        write_predictions_csv(&records, &path).unwrap();
        assert_eq!(read_predictions_csv(&path).unwrap(), records);
    }

    #[test]
    fn pca_ser_roundtrip() {
        let grid = crate::data::center_grid(&sample_grid()).unwrap();
        let model = crate::pca::fit(&grid, 0.05, 0.005).unwrap();
        let back = pca_from_ser(&pca_to_ser(&model));
        assert_eq!(model, back);
    }
}
