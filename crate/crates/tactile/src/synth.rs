//! Synthetic where/what tap grids.
//!
//! Two desk-scale experiments stand in for robot-collected data: tapping a
//! taxel array against cylinders of varying diameter while sweeping the
//! lateral position, and tapping over a straight edge while sweeping its
//! orientation and radial displacement. The contact model is quasi-static:
//! a stimulus height/coverage profile smoothed by each taxel's Gaussian
//! receptive field, scaled over time by a raised-cosine tap envelope. Each
//! taxel contributes a normal-deflection row and, with `dims_per_taxel = 2`,
//! a tangential (gradient) row. Noise-free output is a pure function of the
//! specs; noise is drawn from a seeded ChaCha8 stream so grids are
//! reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ndarray::Array2;

use crate::data::{ClassLabel, DatasetGrid, GridMeta, TactileSegment};
use crate::error::{Result, TactileError};

/// Geometry and noise of a synthetic taxel array.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSpec {
    /// Taxel centres in the sensor frame (mm).
    pub taxel_positions: Vec<[f64; 2]>,
    /// Gaussian std of a taxel's spatial response (mm).
    pub receptive_width: f64,
    /// Additive noise std in deflection units; 0 disables the RNG entirely.
    pub noise_std: f64,
    pub nominal_samples: usize,
    /// 1 = normal deflection only, 2 = normal + tangential rows per taxel.
    pub dims_per_taxel: usize,
}

impl SensorSpec {
    pub fn n_dims(&self) -> usize {
        self.taxel_positions.len() * self.dims_per_taxel
    }

    fn validate(&self) -> Result<()> {
        if self.taxel_positions.is_empty() {
            return Err(TactileError::BadParameter("no taxels".into()));
        }
        if !(self.receptive_width > 0.0) {
            return Err(TactileError::BadParameter(
                "receptive_width must be > 0".into(),
            ));
        }
        if !(self.noise_std >= 0.0) {
            return Err(TactileError::BadParameter("noise_std must be >= 0".into()));
        }
        if self.nominal_samples < 2 {
            return Err(TactileError::BadParameter(
                "nominal_samples must be >= 2".into(),
            ));
        }
        if !(self.dims_per_taxel == 1 || self.dims_per_taxel == 2) {
            return Err(TactileError::BadParameter(
                "dims_per_taxel must be 1 or 2".into(),
            ));
        }
        Ok(())
    }
}

/// What kind of stimulus the grid sweeps over.
#[derive(Debug, Clone, PartialEq)]
pub enum StimulusKind {
    /// Cylinder lying along y; `center` is its axis position on the x axis
    /// in the stimulus frame. Identity values are diameters (mm), location
    /// values are lateral sensor displacements (mm).
    Cylinder { center: f64 },
    /// Straight edge of a half-plane. Identity values are orientations
    /// (degrees), location values are radial displacements (mm).
    Edge,
}

impl StimulusKind {
    fn name(&self) -> &'static str {
        match self {
            StimulusKind::Cylinder { .. } => "cylinder",
            StimulusKind::Edge => "edge",
        }
    }
}

/// The class grid to sweep: identity and location values plus repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSpec {
    pub kind: StimulusKind,
    pub id_values: Vec<f64>,
    pub loc_values: Vec<f64>,
    pub circular_what: bool,
    /// Taps generated per (loc, id) class.
    pub reps_per_class: usize,
}

impl StimulusSpec {
    fn validate(&self) -> Result<()> {
        if self.id_values.is_empty() || self.loc_values.is_empty() {
            return Err(TactileError::BadParameter("empty class value list".into()));
        }
        if self.reps_per_class == 0 {
            return Err(TactileError::BadParameter(
                "reps_per_class must be >= 1".into(),
            ));
        }
        check_uniform("id_values", &self.id_values)?;
        check_uniform("loc_values", &self.loc_values)?;
        Ok(())
    }

    fn id_increment(&self) -> f64 {
        if self.id_values.len() > 1 {
            self.id_values[1] - self.id_values[0]
        } else {
            0.0
        }
    }

    fn loc_increment(&self) -> f64 {
        if self.loc_values.len() > 1 {
            self.loc_values[1] - self.loc_values[0]
        } else {
            0.0
        }
    }
}

fn check_uniform(name: &str, values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Ok(());
    }
    let inc = values[1] - values[0];
    if !(inc > 0.0) {
        return Err(TactileError::BadParameter(format!(
            "{name} must be strictly increasing"
        )));
    }
    for w in values.windows(2) {
        if ((w[1] - w[0]) - inc).abs() > 1e-9 * inc.max(1.0) {
            return Err(TactileError::BadParameter(format!(
                "{name} must have a uniform increment"
            )));
        }
    }
    Ok(())
}

/// Generate a cylinder-tapping grid.
pub fn generate_cylinder_grid(
    sensor: &SensorSpec,
    stim: &StimulusSpec,
    seed: u64,
) -> Result<DatasetGrid> {
    let center = match stim.kind {
        StimulusKind::Cylinder { center } => center,
        ref other => {
            return Err(TactileError::KindMismatch {
                expected: "cylinder".into(),
                got: other.name().into(),
            })
        }
    };
    generate(sensor, stim, seed, "synth-cylinder-array", "mm", |t, loc, diameter| {
        cylinder_response(t, loc, center, diameter / 2.0, sensor.receptive_width)
    })
}

/// Generate an edge-orientation grid.
pub fn generate_edge_grid(
    sensor: &SensorSpec,
    stim: &StimulusSpec,
    seed: u64,
) -> Result<DatasetGrid> {
    if !matches!(stim.kind, StimulusKind::Edge) {
        return Err(TactileError::KindMismatch {
            expected: "edge".into(),
            got: stim.kind.name().into(),
        });
    }
    generate(sensor, stim, seed, "synth-edge-array", "deg", |t, rho, theta| {
        edge_response(t, rho, theta, sensor.receptive_width)
    })
}

/// Dispatch on the stimulus kind.
pub fn generate_grid(sensor: &SensorSpec, stim: &StimulusSpec, seed: u64) -> Result<DatasetGrid> {
    match stim.kind {
        StimulusKind::Cylinder { .. } => generate_cylinder_grid(sensor, stim, seed),
        StimulusKind::Edge => generate_edge_grid(sensor, stim, seed),
    }
}

/// Static (contact, tangential-gradient) response of one taxel.
type Response = (f64, f64);

fn generate<F>(
    sensor: &SensorSpec,
    stim: &StimulusSpec,
    seed: u64,
    name: &str,
    id_unit: &str,
    response: F,
) -> Result<DatasetGrid>
where
    F: Fn(&[f64; 2], f64, f64) -> Response,
{
    sensor.validate()?;
    stim.validate()?;

    let n_samples = sensor.nominal_samples;
    let n_dims = sensor.n_dims();
    let envelope: Vec<f64> = (0..n_samples)
        .map(|j| {
            let t = j as f64 / (n_samples - 1) as f64;
            0.5 * (1.0 - (2.0 * std::f64::consts::PI * t).cos())
        })
        .collect();

    let mut rng = (sensor.noise_std > 0.0).then(|| ChaCha8Rng::seed_from_u64(seed));
    let mut segments =
        Vec::with_capacity(stim.loc_values.len() * stim.id_values.len() * stim.reps_per_class);

    for (l, &loc) in stim.loc_values.iter().enumerate() {
        for (i, &id) in stim.id_values.iter().enumerate() {
            let statics: Vec<Response> = sensor
                .taxel_positions
                .iter()
                .map(|t| response(t, loc, id))
                .collect();
            for _rep in 0..stim.reps_per_class {
                let mut samples = Array2::<f64>::zeros((n_dims, n_samples));
                for (t, &(contact, gradient)) in statics.iter().enumerate() {
                    for j in 0..n_samples {
                        let row = t * sensor.dims_per_taxel;
                        samples[[row, j]] = envelope[j] * contact;
                        if sensor.dims_per_taxel == 2 {
                            samples[[row + 1, j]] = envelope[j] * gradient;
                        }
                    }
                }
                if let Some(rng) = rng.as_mut() {
                    for v in samples.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *v += sensor.noise_std * z;
                    }
                }
                segments.push(TactileSegment {
                    samples,
                    label: ClassLabel {
                        loc_index: l + 1,
                        id_index: i + 1,
                        loc_value: loc,
                        id_value: id,
                    },
                });
            }
        }
    }

    Ok(DatasetGrid {
        segments,
        n_id: stim.id_values.len(),
        n_loc: stim.loc_values.len(),
        n_dims,
        nominal_samples: n_samples,
        what_increment: stim.id_increment(),
        circular_what: stim.circular_what,
        meta: GridMeta {
            sensor: name.into(),
            loc_unit: "mm".into(),
            id_unit: id_unit.into(),
            loc_range: (
                stim.loc_values[0],
                *stim.loc_values.last().unwrap(),
            ),
            id_range: (stim.id_values[0], *stim.id_values.last().unwrap()),
            loc_increment: stim.loc_increment(),
            id_increment: stim.id_increment(),
        },
    })
}

/// Gaussian receptive fields are truncated at this many stds: a taxel whose
/// window does not overlap the stimulus produces exactly zero contact.
const FIELD_TRUNCATION: f64 = 4.0;
const QUADRATURE_STEPS: usize = 128;

/// Smoothed height profile (and its x-gradient) of a cylinder of radius `r`
/// with axis at `center`, seen by a taxel at sensor-frame position `t` on a
/// sensor displaced laterally by `loc`.
fn cylinder_response(t: &[f64; 2], loc: f64, center: f64, r: f64, w: f64) -> Response {
    let u = loc + t[0]; // taxel position in the stimulus frame
    let lo = (center - r).max(u - FIELD_TRUNCATION * w);
    let hi = (center + r).min(u + FIELD_TRUNCATION * w);
    if lo >= hi {
        return (0.0, 0.0);
    }
    // Trapezoid quadrature of h(x) * G(x - u) and h(x) * G'(x - u).
    let h = (hi - lo) / QUADRATURE_STEPS as f64;
    let norm = 1.0 / (w * (2.0 * std::f64::consts::PI).sqrt());
    let mut contact = 0.0;
    let mut gradient = 0.0;
    for s in 0..=QUADRATURE_STEPS {
        let x = lo + s as f64 * h;
        let d = x - center;
        let height = (r * r - d * d).max(0.0).sqrt();
        let g = norm * (-(x - u) * (x - u) / (2.0 * w * w)).exp();
        let weight = if s == 0 || s == QUADRATURE_STEPS { 0.5 } else { 1.0 };
        contact += weight * height * g;
        gradient += weight * height * g * (x - u) / (w * w);
    }
    (contact * h, gradient * h)
}

/// Gaussian-smoothed coverage of a half-plane edge at orientation `theta`
/// (degrees) and radial displacement `rho`. Coverage is the Gaussian CDF of
/// the signed distance from the taxel to the edge, so orientations theta and
/// theta + 360 produce bit-identical profiles after wrapping.
fn edge_response(t: &[f64; 2], rho: f64, theta: f64, w: f64) -> Response {
    let rad = theta.rem_euclid(360.0).to_radians();
    let (nx, ny) = (rad.cos(), rad.sin());
    let z = (rho - (nx * t[0] + ny * t[1])) / w;
    let contact = 0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2));
    let pdf = (-(z * z) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let gradient = -nx * pdf / w;
    (contact, gradient)
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

pub const PRESET_NAMES: &[&str] = &[
    "cylinders-small",
    "cylinders-small-clean",
    "edge-orientation",
    "edge-orientation-clean",
];

/// Desk-scale preset bundles exposed by the CLI.
pub fn preset(name: &str) -> Result<(SensorSpec, StimulusSpec)> {
    match name {
        "cylinders-small" => Ok(cylinders_small(CYLINDER_NOISE_STD)),
        "cylinders-small-clean" => Ok(cylinders_small(0.0)),
        "edge-orientation" => Ok(edge_orientation(EDGE_NOISE_STD)),
        "edge-orientation-clean" => Ok(edge_orientation(0.0)),
        other => Err(TactileError::UnknownPreset(other.into())),
    }
}

/// ~1% of the peak noise-free deflection of the respective preset.
pub const CYLINDER_NOISE_STD: f64 = 0.18;
pub const EDGE_NOISE_STD: f64 = 0.01;

fn cylinders_small(noise_std: f64) -> (SensorSpec, StimulusSpec) {
    let sensor = SensorSpec {
        taxel_positions: (0..19).map(|i| [i as f64 - 9.0, 0.0]).collect(),
        receptive_width: 1.0,
        noise_std,
        nominal_samples: 30,
        dims_per_taxel: 2,
    };
    let stim = StimulusSpec {
        kind: StimulusKind::Cylinder { center: 30.5 },
        // Diameters 30..39 mm; the sensor sweeps from free space onto the
        // cylinder, so the first location touches nothing for any diameter.
        id_values: (0..10).map(|i| 30.0 + i as f64).collect(),
        loc_values: (0..25).map(|i| -2.0 + 2.0 * i as f64).collect(),
        circular_what: false,
        reps_per_class: 3,
    };
    (sensor, stim)
}

fn edge_orientation(noise_std: f64) -> (SensorSpec, StimulusSpec) {
    // 19 taxels: centre plus hexagonal rings of 6 (radius 4) and 12
    // (radius 8), mimicking a pin-array fingertip at desk scale.
    let mut taxels = vec![[0.0, 0.0]];
    for k in 0..6 {
        let a = (60.0 * k as f64).to_radians();
        taxels.push([4.0 * a.cos(), 4.0 * a.sin()]);
    }
    for k in 0..12 {
        let a = (30.0 * k as f64).to_radians();
        taxels.push([8.0 * a.cos(), 8.0 * a.sin()]);
    }
    let sensor = SensorSpec {
        taxel_positions: taxels,
        receptive_width: 2.0,
        noise_std,
        nominal_samples: 30,
        dims_per_taxel: 2,
    };
    let stim = StimulusSpec {
        kind: StimulusKind::Edge,
        id_values: (0..12).map(|i| 30.0 * i as f64).collect(),
        loc_values: (0..10).map(|i| -12.0 + 2.0 * i as f64).collect(),
        circular_what: true,
        reps_per_class: 3,
    };
    (sensor, stim)
}
