//! CSV and JSON serialization of every domain type.
//!
//! Floats are written with 17 significant digits, so reading a file back
//! reproduces the written values bit for bit. Loaded values are re-validated
//! by the constructors of their types.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid1d::{Grid1D, PwcFunction1D, PwlCdf, QuantileCurve};
use crate::lowrank::ModeBasis;
use crate::radon::{Extent, Image2D, RadonGeometry, Sinogram};
use crate::scenarios::ScenarioSpec;
use crate::transform::{ComponentBundle, Field};

/// Version of the manifest layouts written by this module.
pub const SCHEMA_VERSION: u32 = 1;

/// Decimal representation with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            column: 0,
            message: format!("{kind:?}"),
        },
    }
}

fn write_table<W: Write>(out: W, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if !header.is_empty() {
        w.write_record(header).map_err(csv_error)?;
    }
    for row in rows {
        w.write_record(row.iter().map(|&v| format_f64(v)))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a numeric CSV. With `header`, the first line must name exactly those columns.
fn read_table<R: Read>(input: R, header: Option<&[String]>) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(header.is_some())
        .flexible(true)
        .from_reader(input);
    let width = match header {
        Some(expected) => {
            let found = r.headers().map_err(csv_error)?.clone();
            for (i, name) in expected.iter().enumerate() {
                if found.get(i).map(str::trim) != Some(name.as_str()) {
                    let message = if found.iter().any(|f| f.trim() == name) {
                        format!("column `{name}` out of order")
                    } else {
                        format!("missing column `{name}`")
                    };
                    return Err(Error::Parse {
                        line: 1,
                        column: i + 1,
                        message,
                    });
                }
            }
            if found.len() > expected.len() {
                return Err(Error::Parse {
                    line: 1,
                    column: expected.len() + 1,
                    message: format!("unexpected column `{}`", &found[expected.len()]),
                });
            }
            Some(expected.len())
        }
        None => None,
    };
    let mut rows = Vec::new();
    let mut width = width;
    for record in r.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                line,
                column: record.len().min(expected) + 1,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    column: j + 1,
                    message: format!("`{field}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn create(path: &Path) -> Result<File> {
    Ok(File::create(path)?)
}

fn open(path: &Path) -> Result<File> {
    Ok(File::open(path)?)
}

/// Path of the JSON file accompanying a CSV file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        column: e.column(),
        message: format!("{}: {e}", path.display()),
    })
}

/// Writes a numeric table with the given column names.
pub fn write_columns(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if let Some(r) = rows.iter().find(|r| r.len() != header.len()) {
        return Err(Error::ShapeMismatch(format!(
            "row of {} values under {} columns",
            r.len(),
            header.len()
        )));
    }
    write_table(create(path)?, &names(header), rows)
}

/// Reads a numeric table whose header must match `header`.
pub fn read_columns(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    read_table(open(path)?, Some(&names(header)))
}

const DENSITY_HEADER: [&str; 3] = ["x_left", "x_right", "value"];
const QUANTILE_HEADER: [&str; 2] = ["y", "x"];
const CDF_HEADER: [&str; 2] = ["x", "U"];
const SINOGRAM_HEADER: [&str; 5] = ["angle_index", "omega_x", "omega_y", "s", "value"];
const STATS_HEADER: [&str; 3] = ["j", "mean", "std"];

pub fn write_density_to<W: Write>(out: W, u: &PwcFunction1D) -> Result<()> {
    let e = u.grid().edges();
    let rows: Vec<Vec<f64>> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![e[i], e[i + 1], v])
        .collect();
    write_table(out, &names(&DENSITY_HEADER), &rows)
}

pub fn read_density_from<R: Read>(input: R) -> Result<PwcFunction1D> {
    let rows = read_table(input, Some(&names(&DENSITY_HEADER)))?;
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut edges = column(&rows, 0);
    for (i, w) in rows.windows(2).enumerate() {
        if w[0][1].to_bits() != w[1][0].to_bits() {
            return Err(Error::InvariantViolation(format!(
                "cell {} ends at {} but cell {} starts at {}",
                i,
                w[0][1],
                i + 1,
                w[1][0]
            )));
        }
    }
    edges.push(rows[rows.len() - 1][1]);
    PwcFunction1D::new(Grid1D::new(edges)?, column(&rows, 2))
}

pub fn write_density(path: &Path, u: &PwcFunction1D) -> Result<()> {
    write_density_to(create(path)?, u)
}

pub fn read_density(path: &Path) -> Result<PwcFunction1D> {
    read_density_from(open(path)?)
}

pub fn write_quantile_to<W: Write>(out: W, q: &QuantileCurve) -> Result<()> {
    let rows: Vec<Vec<f64>> = q.y().iter().zip(q.x()).map(|(&y, &x)| vec![y, x]).collect();
    write_table(out, &names(&QUANTILE_HEADER), &rows)
}

pub fn read_quantile_from<R: Read>(input: R) -> Result<QuantileCurve> {
    let rows = read_table(input, Some(&names(&QUANTILE_HEADER)))?;
    QuantileCurve::new(column(&rows, 0), column(&rows, 1))
}

pub fn write_quantile(path: &Path, q: &QuantileCurve) -> Result<()> {
    write_quantile_to(create(path)?, q)
}

pub fn read_quantile(path: &Path) -> Result<QuantileCurve> {
    read_quantile_from(open(path)?)
}

pub fn write_cdf_to<W: Write>(out: W, c: &PwlCdf) -> Result<()> {
    let rows: Vec<Vec<f64>> = c.x().iter().zip(c.u()).map(|(&x, &u)| vec![x, u]).collect();
    write_table(out, &names(&CDF_HEADER), &rows)
}

pub fn read_cdf_from<R: Read>(input: R) -> Result<PwlCdf> {
    let rows = read_table(input, Some(&names(&CDF_HEADER)))?;
    PwlCdf::new(column(&rows, 0), column(&rows, 1))
}

pub fn write_cdf(path: &Path, c: &PwlCdf) -> Result<()> {
    write_cdf_to(create(path)?, c)
}

pub fn read_cdf(path: &Path) -> Result<PwlCdf> {
    read_cdf_from(open(path)?)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ImageSidecar {
    #[serde(rename = "D")]
    d: usize,
    extent: Extent,
    description: String,
}

/// Writes `D` rows of `D` values (row `i` at the `i`-th lowest `y`) and a JSON sidecar.
pub fn write_image(path: &Path, u: &Image2D, description: &str) -> Result<()> {
    let rows: Vec<Vec<f64>> = u.values().chunks(u.d()).map(<[f64]>::to_vec).collect();
    write_table(create(path)?, &[], &rows)?;
    write_json(
        &sidecar_path(path),
        &ImageSidecar {
            d: u.d(),
            extent: u.extent(),
            description: description.to_string(),
        },
    )
}

/// Reads an image and the description stored in its sidecar.
pub fn read_image_with_description(path: &Path) -> Result<(Image2D, String)> {
    let meta: ImageSidecar = read_json(&sidecar_path(path))?;
    let rows = read_table(open(path)?, None)?;
    if rows.len() != meta.d || rows.iter().any(|r| r.len() != meta.d) {
        return Err(Error::InvariantViolation(format!(
            "image file holds {} rows but the sidecar declares D = {}",
            rows.len(),
            meta.d
        )));
    }
    let extent = Extent::new(meta.extent.x0, meta.extent.x1, meta.extent.y0, meta.extent.y1)?;
    let image = Image2D::new(meta.d, extent, rows.concat())?;
    Ok((image, meta.description))
}

pub fn read_image(path: &Path) -> Result<Image2D> {
    read_image_with_description(path).map(|(u, _)| u)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct SinogramSidecar {
    geometry: RadonGeometry,
    description: String,
}

fn sinogram_rows(g: &Sinogram) -> Vec<Vec<f64>> {
    let geom = g.geometry();
    let s = geom.s_centers();
    let mut rows = Vec::with_capacity(g.values().len());
    for p in 0..geom.angles {
        let (ox, oy) = geom.omega(p);
        for (k, &v) in g.slice(p).iter().enumerate() {
            rows.push(vec![p as f64, ox, oy, s[k], v]);
        }
    }
    rows
}

pub fn write_sinogram(path: &Path, g: &Sinogram, description: &str) -> Result<()> {
    write_table(create(path)?, &names(&SINOGRAM_HEADER), &sinogram_rows(g))?;
    write_json(
        &sidecar_path(path),
        &SinogramSidecar {
            geometry: *g.geometry(),
            description: description.to_string(),
        },
    )
}

pub fn read_sinogram(path: &Path) -> Result<Sinogram> {
    let meta: SinogramSidecar = read_json(&sidecar_path(path))?;
    let m = meta.geometry;
    let geometry = RadonGeometry::new(
        m.d,
        Extent::new(m.extent.x0, m.extent.x1, m.extent.y0, m.extent.y1)?,
        m.angles,
        m.oversample,
    )?;
    let rows = read_table(open(path)?, Some(&names(&SINOGRAM_HEADER)))?;
    let g = Sinogram::new(geometry, column(&rows, 4))?;
    let expected = sinogram_rows(&g);
    for (i, (row, exp)) in rows.iter().zip(&expected).enumerate() {
        if let Some(j) = (0..4).find(|&j| row[j].to_bits() != exp[j].to_bits()) {
            return Err(Error::InvariantViolation(format!(
                "row {} column `{}` is {} but the geometry gives {}",
                i + 1,
                SINOGRAM_HEADER[j],
                row[j],
                exp[j]
            )));
        }
    }
    Ok(g)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ModesSidecar {
    singular_values: Vec<f64>,
}

/// Writes `y,mode_1,...,mode_r` and the singular values in a JSON sidecar.
pub fn write_modes(path: &Path, basis: &ModeBasis) -> Result<()> {
    let mut header = vec!["y".to_string()];
    header.extend((1..=basis.len()).map(|j| format!("mode_{j}")));
    let rows: Vec<Vec<f64>> = basis
        .y_grid
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            std::iter::once(y)
                .chain(basis.modes.iter().map(|m| m[i]))
                .collect()
        })
        .collect();
    write_table(create(path)?, &header, &rows)?;
    write_json(
        &sidecar_path(path),
        &ModesSidecar {
            singular_values: basis.singular_values.clone(),
        },
    )
}

pub fn read_modes(path: &Path) -> Result<ModeBasis> {
    let meta: ModesSidecar = read_json(&sidecar_path(path))?;
    let mut header = vec!["y".to_string()];
    header.extend((1..=meta.singular_values.len()).map(|j| format!("mode_{j}")));
    let rows = read_table(open(path)?, Some(&header))?;
    let y_grid = column(&rows, 0);
    if y_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvariantViolation("y column is not increasing".into()));
    }
    if meta.singular_values.windows(2).any(|w| w[0] < w[1])
        || meta.singular_values.iter().any(|&s| !(s >= 0.0))
    {
        return Err(Error::InvariantViolation(
            "singular values must be nonnegative and non-increasing".into(),
        ));
    }
    let modes = (1..=meta.singular_values.len())
        .map(|j| column(&rows, j))
        .collect();
    Ok(ModeBasis {
        modes,
        singular_values: meta.singular_values,
        y_grid,
    })
}

/// Writes `j,mean,std` with `j` counted from one.
pub fn write_singular_stats(path: &Path, stats: &[(f64, f64)]) -> Result<()> {
    let rows: Vec<Vec<f64>> = stats
        .iter()
        .enumerate()
        .map(|(j, &(m, s))| vec![(j + 1) as f64, m, s])
        .collect();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    w.write_record(STATS_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            format!("{}", r[0] as usize),
            format_f64(r[1]),
            format_f64(r[2]),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_singular_stats(path: &Path) -> Result<Vec<(f64, f64)>> {
    let rows = read_table(open(path)?, Some(&names(&STATS_HEADER)))?;
    for (i, r) in rows.iter().enumerate() {
        if r[0] != (i + 1) as f64 {
            return Err(Error::InvariantViolation(format!(
                "row {} has index {}",
                i + 1,
                r[0]
            )));
        }
    }
    Ok(rows.iter().map(|r| (r[1], r[2])).collect())
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct BundleEntry {
    name: String,
    kind: String,
    file: String,
    shape: Vec<usize>,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct BundleManifest {
    schema_version: u32,
    chain: String,
    components: Vec<BundleEntry>,
}

/// Writes one file per component into `dir` plus `manifest.json`.
pub fn write_bundle(dir: &Path, bundle: &ComponentBundle, chain: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(bundle.len());
    for (i, (name, field)) in bundle.components().iter().enumerate() {
        let file = format!("component_{i:03}.csv");
        let path = dir.join(&file);
        match field {
            Field::Line(u) => write_density(&path, u)?,
            Field::Image(u) => write_image(&path, u, name)?,
            Field::Sinogram(g) => write_sinogram(&path, g, name)?,
        }
        entries.push(BundleEntry {
            name: name.clone(),
            kind: field.kind().to_string(),
            file,
            shape: field.shape(),
        });
    }
    write_json(
        &dir.join("manifest.json"),
        &BundleManifest {
            schema_version: SCHEMA_VERSION,
            chain: chain.to_string(),
            components: entries,
        },
    )
}

/// Reads a bundle and the chain description stored with it.
pub fn read_bundle(dir: &Path) -> Result<(ComponentBundle, String)> {
    let manifest: BundleManifest = read_json(&dir.join("manifest.json"))?;
    check_schema(manifest.schema_version)?;
    let mut components = Vec::with_capacity(manifest.components.len());
    for entry in manifest.components {
        let path = dir.join(&entry.file);
        let field = match entry.kind.as_str() {
            "line" => Field::Line(read_density(&path)?),
            "image" => Field::Image(read_image(&path)?),
            "sinogram" => Field::Sinogram(read_sinogram(&path)?),
            other => {
                return Err(Error::InvariantViolation(format!(
                    "component `{}` has unknown kind `{other}`",
                    entry.name
                )))
            }
        };
        if field.shape() != entry.shape {
            return Err(Error::InvariantViolation(format!(
                "component `{}` has shape {:?}, manifest says {:?}",
                entry.name,
                field.shape(),
                entry.shape
            )));
        }
        components.push((entry.name, field));
    }
    Ok((ComponentBundle::new(components)?, manifest.chain))
}

fn check_schema(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::InvariantViolation(format!(
            "schema version {version} is not supported (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

/// Record of one command-line run.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub scenario: Option<ScenarioSpec>,
    /// Grid, geometry and flag values used by the run, defaults included.
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    /// Output files relative to the output directory.
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            scenario: None,
            parameters: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            seed: None,
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn parameter(&mut self, key: &str, value: impl serde::Serialize) -> &mut Self {
        let value = serde_json::to_value(value).expect("parameter is serializable");
        self.parameters.insert(key.to_string(), value);
        self
    }

    /// Copy with the wall-clock field cleared, for comparing runs.
    pub fn without_wall_clock(&self) -> Self {
        RunManifest {
            wall_clock_seconds: 0.0,
            ..self.clone()
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    write_json(path, manifest)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let m: RunManifest = read_json(path)?;
    check_schema(m.schema_version)?;
    if let Some(spec) = &m.scenario {
        spec.validate()?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 5e-324, f64::MAX, -0.0, 0.0] {
            let back: f64 = format_f64(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn missing_column_is_named() {
        let text = "x_left,value\n0,1\n";
        match read_density_from(text.as_bytes()) {
            Err(Error::Parse {
                line,
                column,
                message,
            }) => {
                assert_eq!((line, column), (1, 2));
                assert!(message.contains("x_right"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_position() {
        let text = "y,x\n0,0\n0.5,abc\n1,1\n";
        match read_quantile_from(text.as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decreasing_cdf_is_rejected() {
        let text = "x,U\n0,0\n0.5,0.7\n1,0.6\n";
        assert!(matches!(
            read_cdf_from(text.as_bytes()),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn gap_between_cells_is_rejected() {
        let text = "x_left,x_right,value\n0,0.5,1\n0.6,1,1\n";
        assert!(matches!(
            read_density_from(text.as_bytes()),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn density_round_trip_in_memory() {
        let g = Grid1D::uniform(0.0, 1.0, 7).unwrap();
        let u = PwcFunction1D::new(g, (0..7).map(|i| (i as f64).sqrt() / 3.0).collect()).unwrap();
        let mut buf = Vec::new();
        write_density_to(&mut buf, &u).unwrap();
        assert_eq!(read_density_from(buf.as_slice()).unwrap(), u);
    }
}
