//! Reading and writing models (JSON), grids and tabulated densities (CSV),
//! and simulation output (CSV).
//!
//! A model file names its kind and lists atoms per measure:
//!
//! ```json
//! { "kind": "tensor", "mean": 1.0,
//!   "phi1": [{"lambda": 0.0, "mass": 0.1}],
//!   "phi2": [{"lambda": 0.0, "mass": 0.15}],
//!   "phi3": [{"lambda": 0.0, "mass": 0.25, "v1": 0.5, "v2": 0.0}] }
//! ```
//!
//! Shape-family atoms carry their own `(v1, v2)`, so shapes cannot drift
//! out of step with the atoms they belong to.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{require_valid, Error, Result};
use crate::model::{Atom, EllipsePoint, Model, ScalarModel, SpectralMeasure, TensorModel, VectorModel};
use crate::simulate::{FieldRealization, GridPoint, GridSpec, SpectralInput};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomRecord {
    lambda: f64,
    mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShapedAtomRecord {
    lambda: f64,
    mass: f64,
    v1: f64,
    v2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ModelFile {
    Scalar {
        #[serde(default)]
        mean: f64,
        phi: Vec<AtomRecord>,
    },
    Vector {
        #[serde(default)]
        phi1: Vec<AtomRecord>,
        #[serde(default)]
        phi2: Vec<AtomRecord>,
    },
    Tensor {
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        phi1: Vec<AtomRecord>,
        #[serde(default)]
        phi2: Vec<AtomRecord>,
        #[serde(default)]
        phi3: Vec<ShapedAtomRecord>,
    },
}

fn measure(r: &[AtomRecord]) -> SpectralMeasure {
    SpectralMeasure::new(r.iter().map(|a| Atom::new(a.lambda, a.mass)).collect())
}

fn records(m: &SpectralMeasure) -> Vec<AtomRecord> {
    m.atoms.iter().map(|a| AtomRecord { lambda: a.lambda, mass: a.mass }).collect()
}

impl From<ModelFile> for Model {
    fn from(f: ModelFile) -> Self {
        match f {
            ModelFile::Scalar { mean, phi } => Model::Scalar(ScalarModel { mean, phi: measure(&phi) }),
            ModelFile::Vector { phi1, phi2 } => {
                Model::Vector(VectorModel { phi1: measure(&phi1), phi2: measure(&phi2) })
            }
            ModelFile::Tensor { mean, phi1, phi2, phi3 } => Model::Tensor(TensorModel {
                mean,
                phi1: measure(&phi1),
                phi2: measure(&phi2),
                phi3: SpectralMeasure::new(phi3.iter().map(|a| Atom::new(a.lambda, a.mass)).collect()),
                shape: phi3.iter().map(|a| EllipsePoint::new(a.v1, a.v2)).collect(),
            }),
        }
    }
}

impl From<&Model> for ModelFile {
    fn from(m: &Model) -> Self {
        match m {
            Model::Scalar(s) => ModelFile::Scalar { mean: s.mean, phi: records(&s.phi) },
            Model::Vector(v) => ModelFile::Vector { phi1: records(&v.phi1), phi2: records(&v.phi2) },
            Model::Tensor(t) => ModelFile::Tensor {
                mean: t.mean,
                phi1: records(&t.phi1),
                phi2: records(&t.phi2),
                phi3: t
                    .phi3
                    .atoms
                    .iter()
                    .zip(&t.shape)
                    .map(|(a, v)| ShapedAtomRecord { lambda: a.lambda, mass: a.mass, v1: v.v1, v2: v.v2 })
                    .collect(),
            },
        }
    }
}

/// Parse a model without validating it.
pub fn parse_model_unchecked(text: &str) -> Result<Model> {
    Ok(serde_json::from_str::<ModelFile>(text)?.into())
}

/// Parse and validate a model.
pub fn parse_model(text: &str) -> Result<Model> {
    let m = parse_model_unchecked(text)?;
    require_valid(m.validate())?;
    Ok(m)
}

pub fn load_model(path: &Path) -> Result<Model> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn model_to_json(model: &Model) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ModelFile::from(model))?;
    s.push('\n');
    Ok(s)
}

/// Write `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    write_atomic(path, model_to_json(model)?.as_bytes())
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).flexible(false).from_reader(r)
}

/// Rows of numbers; a first row that does not parse is taken as a header.
fn numeric_rows<R: Read>(r: R, width: usize, what: &str) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (k, rec) in csv_reader(r).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{what}: {e}")))?;
        if rec.len() != width {
            return Err(Error::Parse(format!("{what}: line {} has {} columns, expected {width}", k + 1, rec.len())));
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => out.push(v),
            Err(_) if k == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("{what}: line {}: {e}", k + 1))),
        }
    }
    Ok(out)
}

/// A grid as CSV rows `r, theta, phi`.
pub fn parse_grid<R: Read>(r: R) -> Result<GridSpec> {
    let rows = numeric_rows(r, 3, "grid")?;
    GridSpec::new(rows.iter().map(|v| GridPoint { r: v[0], theta: v[1], phi: v[2] }).collect())
}

pub fn load_grid(path: &Path) -> Result<GridSpec> {
    parse_grid(std::fs::File::open(path)?)
}

/// A tabulated density as CSV rows `lambda, density`.
pub fn parse_density<R: Read>(r: R) -> Result<SpectralInput> {
    let rows = numeric_rows(r, 2, "density")?;
    Ok(SpectralInput::Tabulated {
        lambda: rows.iter().map(|v| v[0]).collect(),
        density: rows.iter().map(|v| v[1]).collect(),
    })
}

pub fn load_density(path: &Path) -> Result<SpectralInput> {
    parse_density(std::fs::File::open(path)?)
}

/// Column names for the values of a field of the given kind.
pub fn value_columns(kind: crate::bmodes::FieldKind) -> Vec<&'static str> {
    use crate::bmodes::FieldKind;
    match kind {
        FieldKind::Scalar => vec!["value"],
        FieldKind::Vector => vec!["u_m1", "u_0", "u_p1"],
        FieldKind::Tensor => vec!["t_m1m1", "t_00", "t_p1p1", "t_0p1", "t_m1p1", "t_m10"],
    }
}

/// Simulation output: one row per realization and grid point.
pub fn realizations_csv(grid: &GridSpec, realizations: &[FieldRealization], preamble: &[String]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for line in preamble {
        writeln!(buf, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(buf);
    let kind = match realizations.first() {
        Some(r) => r.kind,
        None => crate::bmodes::FieldKind::Scalar,
    };
    let mut header = vec!["realization", "r", "theta", "phi"];
    header.extend(value_columns(kind));
    w.write_record(&header).map_err(csv_err)?;
    for real in realizations {
        for (p, pt) in grid.points.iter().enumerate() {
            let mut row =
                vec![real.realization.to_string(), pt.r.to_string(), pt.theta.to_string(), pt.phi.to_string()];
            row.extend(real.columns(p).iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// A header row followed by numeric rows.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TENSOR: &str = r#"{
        "kind": "tensor", "mean": 2.0,
        "phi1": [{"lambda": 0.0, "mass": 0.1}, {"lambda": 1.0, "mass": 0.2}],
        "phi2": [{"lambda": 0.0, "mass": 0.15}],
        "phi3": [{"lambda": 0.0, "mass": 0.25, "v1": 1.0, "v2": 0.0},
                 {"lambda": 2.5, "mass": 0.3, "v1": 0.5, "v2": 0.1}]
    }"#;

    #[test]
    fn model_round_trip() {
        let m = parse_model(TENSOR).unwrap();
        let Model::Tensor(t) = &m else { panic!() };
        assert_eq!(t.shape[1], EllipsePoint::new(0.5, 0.1));
        assert_eq!(parse_model(&model_to_json(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn invalid_model_lists_violations() {
        let bad = r#"{"kind": "vector", "phi1": [{"lambda": 0.0, "mass": 1.0}], "phi2": []}"#;
        match parse_model(bad) {
            Err(Error::InvalidModel(v)) => assert_eq!(v[0].constraint, "atom balance at zero"),
            other => panic!("{other:?}"),
        }
        let missing = r#"{"kind": "tensor", "phi3": [{"lambda": 1.0, "mass": 1.0}]}"#;
        assert!(matches!(parse_model(missing), Err(Error::Json(_))));
    }

    #[test]
    fn grid_with_header_and_comments() {
        let g = parse_grid("# points\nr,theta,phi\n0,0,0\n1.5, 1.0, 2.0\n".as_bytes()).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.points[1], GridPoint { r: 1.5, theta: 1.0, phi: 2.0 });
        assert!(parse_grid("1,2\n".as_bytes()).is_err());
        assert!(parse_grid("-1,0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "second");
    }
}
