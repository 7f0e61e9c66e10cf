//! File formats. Every artifact carries the hash of the run configuration and
//! the seed that produced it, and no other run-dependent data, so a repeated
//! run reproduces each file byte for byte.
//!
//! Floats in CSV files are written with 17 significant digits, which round
//! trips every f64 exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{QsrError, Result};
use crate::hilbert::DensityMatrix;
use crate::phasespace::{GridKind, GridSpec, Marginal, QuasiProbGrid};
use crate::probe::ProbeParams;
use crate::tomography::TomogramDataset;

/// Largest PGM sample value (16-bit).
pub const PGM_MAXVAL: u16 = u16::MAX;

/// Identifies the run that produced a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Hex SHA-256 of the canonical JSON of the resolved configuration.
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new<T: Serialize>(config: &T, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            config_hash: config_hash(config)?,
            seed,
        })
    }

    fn seed_text(&self) -> String {
        self.seed.map_or_else(|| "none".to_string(), |s| s.to_string())
    }
}

/// SHA-256 of the compact JSON encoding. Struct fields serialize in
/// declaration order, so the encoding is canonical for a given type.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&json)))
}

/// SHA-256 of a file's bytes.
pub fn file_hash(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

/// 17 significant digits.
#[inline]
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| QsrError::Parse(format!("{}: {e}", path.display())))
}

/// `# qsr <tag> {json}` first line of the CSV formats.
fn header_line<T: Serialize>(tag: &str, header: &T) -> Result<String> {
    Ok(format!("# qsr {tag} {}\n", serde_json::to_string(header)?))
}

fn parse_header<T: DeserializeOwned>(line: &str, tag: &str, path: &Path) -> Result<T> {
    let prefix = format!("# qsr {tag} ");
    let json = line
        .strip_prefix(&prefix)
        .ok_or_else(|| QsrError::Parse(format!("{}: missing '{prefix}' header", path.display())))?;
    serde_json::from_str(json.trim_end()).map_err(|e| QsrError::Parse(format!("{}: header: {e}", path.display())))
}

/// Yields the comma-separated numeric fields of each data row, with the
/// 1-based line number for error messages.
fn data_rows(
    lines: impl Iterator<Item = std::io::Result<String>>,
    columns: &[&str],
    path: &Path,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows = Vec::new();
    let mut seen_columns = false;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_columns {
            let names: Vec<&str> = line.split(',').map(str::trim).collect();
            if names != columns {
                return Err(QsrError::Parse(format!(
                    "{}:{lineno}: expected columns {}, got '{line}'",
                    path.display(),
                    columns.join(",")
                )));
            }
            seen_columns = true;
            continue;
        }
        let fields = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| QsrError::Parse(format!("{}:{lineno}: {e}", path.display())))?;
        if fields.len() != columns.len() {
            return Err(QsrError::Parse(format!(
                "{}:{lineno}: expected {} fields, got {}",
                path.display(),
                columns.len(),
                fields.len()
            )));
        }
        rows.push((lineno, fields));
    }
    Ok(rows)
}

fn open_lines(path: &Path) -> Result<(String, impl Iterator<Item = std::io::Result<String>>)> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines
        .next()
        .transpose()?
        .ok_or_else(|| QsrError::Parse(format!("{}: empty file", path.display())))?;
    Ok((first, lines))
}

/// Generic CSV: a `# qsr <tag> {json}` header line, the column names, then
/// the preformatted rows.
pub fn write_table<T: Serialize>(path: &Path, tag: &str, header: &T, columns: &[&str], rows: &[String]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(header_line(tag, header)?.as_bytes())?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixDoc {
    config_hash: String,
    seed: Option<u64>,
    dim: usize,
    /// Row-major (re, im) pairs.
    elements: Vec<[f64; 2]>,
    truncation_deficit: f64,
}

pub fn write_density_matrix(path: &Path, rho: &DensityMatrix, prov: &Provenance) -> Result<()> {
    let dim = rho.dim();
    let elements = (0..dim)
        .flat_map(|m| (0..dim).map(move |n| (m, n)))
        .map(|(m, n)| {
            let c = rho.get(m, n);
            [c.re, c.im]
        })
        .collect();
    let doc = DensityMatrixDoc {
        config_hash: prov.config_hash.clone(),
        seed: prov.seed,
        dim,
        elements,
        truncation_deficit: rho.truncation_deficit(),
    };
    write_json(path, &doc)
}

pub fn read_density_matrix(path: &Path) -> Result<(DensityMatrix, Provenance)> {
    let doc: DensityMatrixDoc = read_json(path)?;
    if doc.elements.len() != doc.dim * doc.dim {
        return Err(QsrError::Parse(format!(
            "{}: dim {} needs {} elements, found {}",
            path.display(),
            doc.dim,
            doc.dim * doc.dim,
            doc.elements.len()
        )));
    }
    let m = DMatrix::from_row_iterator(
        doc.dim,
        doc.dim,
        doc.elements.iter().map(|[re, im]| Complex64::new(*re, *im)),
    );
    let rho = DensityMatrix::from_matrix(m, doc.truncation_deficit)?;
    Ok((
        rho,
        Provenance {
            config_hash: doc.config_hash,
            seed: doc.seed,
        },
    ))
}

#[derive(Serialize, Deserialize)]
struct GridHeader {
    config_hash: String,
    seed: Option<u64>,
    s: f64,
    kind: GridKind,
    half_extent: f64,
    n: usize,
}

/// Rows `alpha_r,alpha_i,value`, α_i outer and α_r inner, both ascending.
pub fn write_grid_csv(path: &Path, grid: &QuasiProbGrid, prov: &Provenance) -> Result<()> {
    let header = GridHeader {
        config_hash: prov.config_hash.clone(),
        seed: prov.seed,
        s: grid.s,
        kind: grid.kind,
        half_extent: grid.spec.half_extent,
        n: grid.spec.n,
    };
    let mut w = create(path)?;
    w.write_all(header_line("grid", &header)?.as_bytes())?;
    writeln!(w, "alpha_r,alpha_i,value")?;
    let coords = grid.spec.coords();
    for (row, ai) in coords.iter().enumerate() {
        for (col, ar) in coords.iter().enumerate() {
            writeln!(w, "{},{},{}", num(*ar), num(*ai), num(grid.at(row, col)))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_csv(path: &Path) -> Result<(QuasiProbGrid, Provenance)> {
    let (first, lines) = open_lines(path)?;
    let header: GridHeader = parse_header(&first, "grid", path)?;
    let spec = GridSpec::new(header.half_extent, header.n)?;
    let rows = data_rows(lines, &["alpha_r", "alpha_i", "value"], path)?;
    if rows.len() != spec.n * spec.n {
        return Err(QsrError::Parse(format!(
            "{}: expected {} grid rows, found {}",
            path.display(),
            spec.n * spec.n,
            rows.len()
        )));
    }
    let h = spec.spacing();
    let mut values = Vec::with_capacity(rows.len());
    for (k, (lineno, f)) in rows.into_iter().enumerate() {
        let (ar, ai) = (spec.coord(k % spec.n), spec.coord(k / spec.n));
        if (f[0] - ar).abs() > 1e-9 * h || (f[1] - ai).abs() > 1e-9 * h {
            return Err(QsrError::Parse(format!(
                "{}:{lineno}: point ({}, {}) off the declared grid",
                path.display(),
                f[0],
                f[1]
            )));
        }
        values.push(f[2]);
    }
    let grid = QuasiProbGrid::new(header.s, spec, header.kind, values)?;
    Ok((
        grid,
        Provenance {
            config_hash: header.config_hash,
            seed: header.seed,
        },
    ))
}

/// Binary 16-bit PGM (P5, big-endian samples), top row at the largest α_i.
/// Values map linearly from [min, max] onto [0, 65535]; a constant grid
/// maps to 0.
pub fn write_grid_pgm(path: &Path, grid: &QuasiProbGrid, prov: &Provenance) -> Result<()> {
    let n = grid.spec.n;
    let (lo, hi) = (grid.min(), grid.max());
    let range = hi - lo;
    let mut w = create(path)?;
    write!(
        w,
        "P5\n# config_hash={} seed={}\n# s={} min={} max={}\n{n} {n}\n{PGM_MAXVAL}\n",
        prov.config_hash,
        prov.seed_text(),
        num(grid.s),
        num(lo),
        num(hi)
    )?;
    let mut bytes = Vec::with_capacity(2 * n * n);
    for row in (0..n).rev() {
        for col in 0..n {
            let level = if range > 0.0 {
                ((grid.at(row, col) - lo) / range * PGM_MAXVAL as f64).round() as u16
            } else {
                0
            };
            bytes.extend_from_slice(&level.to_be_bytes());
        }
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Metadata written next to a grid's CSV and PGM files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub s: f64,
    pub kind: GridKind,
    pub half_extent: f64,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    /// Riemann sum of the grid minus one.
    pub normalization_residual: f64,
    pub radially_unimodal: bool,
    /// α_i of the local maxima along the imaginary axis.
    pub imaginary_axis_maxima: Vec<f64>,
    /// PGM levels: value = pgm_min + level·(pgm_max − pgm_min)/pgm_maxval.
    pub pgm_min: f64,
    pub pgm_max: f64,
    pub pgm_maxval: u16,
}

impl GridSidecar {
    pub fn describe(grid: &QuasiProbGrid, prov: &Provenance) -> Self {
        Self {
            config_hash: prov.config_hash.clone(),
            seed: prov.seed,
            s: grid.s,
            kind: grid.kind,
            half_extent: grid.spec.half_extent,
            n: grid.spec.n,
            min: grid.min(),
            max: grid.max(),
            normalization_residual: grid.riemann_sum() - 1.0,
            radially_unimodal: grid.is_radially_unimodal(),
            imaginary_axis_maxima: grid.imaginary_axis_maxima(),
            pgm_min: grid.min(),
            pgm_max: grid.max(),
            pgm_maxval: PGM_MAXVAL,
        }
    }
}

/// Writes `<stem>.csv`, `<stem>.pgm` and `<stem>.json` into `dir`.
pub fn write_grid_files(dir: &Path, stem: &str, grid: &QuasiProbGrid, prov: &Provenance) -> Result<GridSidecar> {
    write_grid_csv(&dir.join(format!("{stem}.csv")), grid, prov)?;
    write_grid_pgm(&dir.join(format!("{stem}.pgm")), grid, prov)?;
    let sidecar = GridSidecar::describe(grid, prov);
    write_json(&dir.join(format!("{stem}.json")), &sidecar)?;
    Ok(sidecar)
}

#[derive(Serialize, Deserialize)]
struct MarginalHeader {
    config_hash: String,
    seed: Option<u64>,
    theta: f64,
}

/// Rows `x,density`.
pub fn write_marginal_csv(path: &Path, m: &Marginal, prov: &Provenance) -> Result<()> {
    let header = MarginalHeader {
        config_hash: prov.config_hash.clone(),
        seed: prov.seed,
        theta: m.theta,
    };
    let mut w = create(path)?;
    w.write_all(header_line("marginal", &header)?.as_bytes())?;
    writeln!(w, "x,density")?;
    for (x, d) in m.xs.iter().zip(&m.density) {
        writeln!(w, "{},{}", num(*x), num(*d))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_marginal_csv(path: &Path) -> Result<(Marginal, Provenance)> {
    let (first, lines) = open_lines(path)?;
    let header: MarginalHeader = parse_header(&first, "marginal", path)?;
    let rows = data_rows(lines, &["x", "density"], path)?;
    let (xs, density) = rows.into_iter().map(|(_, f)| (f[0], f[1])).unzip();
    let m = Marginal::new(header.theta, xs, density)?;
    Ok((
        m,
        Provenance {
            config_hash: header.config_hash,
            seed: header.seed,
        },
    ))
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    config_hash: String,
    seed: u64,
    state_label: String,
    probe: ProbeParams,
    angles: Vec<f64>,
    /// Samples recorded at each angle.
    counts: Vec<usize>,
}

/// Header line with probe, seed, state label and angles, then one row
/// `pulse_index,theta,P_L` per pulse, grouped by angle.
pub fn write_dataset(path: &Path, data: &TomogramDataset, config_hash: &str) -> Result<()> {
    data.validate()?;
    let header = DatasetHeader {
        config_hash: config_hash.to_string(),
        seed: data.seed,
        state_label: data.state_label.clone(),
        probe: data.probe,
        angles: data.angles.clone(),
        counts: data.samples.iter().map(Vec::len).collect(),
    };
    let mut w = create(path)?;
    w.write_all(header_line("dataset", &header)?.as_bytes())?;
    writeln!(w, "pulse_index,theta,P_L")?;
    let mut index = 0usize;
    for (theta, block) in data.angles.iter().zip(&data.samples) {
        let theta = num(*theta);
        for v in block {
            writeln!(w, "{index},{theta},{}", num(*v))?;
            index += 1;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<(TomogramDataset, String)> {
    let (first, lines) = open_lines(path)?;
    let header: DatasetHeader = parse_header(&first, "dataset", path)?;
    if header.counts.len() != header.angles.len() {
        return Err(QsrError::Parse(format!(
            "{}: {} angles but {} counts",
            path.display(),
            header.angles.len(),
            header.counts.len()
        )));
    }
    let rows = data_rows(lines, &["pulse_index", "theta", "P_L"], path)?;
    let expected: usize = header.counts.iter().sum();
    if rows.len() != expected {
        return Err(QsrError::Parse(format!(
            "{}: header announces {expected} pulses, found {}",
            path.display(),
            rows.len()
        )));
    }
    let mut samples = Vec::with_capacity(header.angles.len());
    let mut it = rows.into_iter();
    let mut index = 0usize;
    for (&theta, &count) in header.angles.iter().zip(&header.counts) {
        let mut block = Vec::with_capacity(count);
        for (lineno, f) in it.by_ref().take(count) {
            if f[0] != index as f64 || f[1] != theta {
                return Err(QsrError::Parse(format!(
                    "{}:{lineno}: expected pulse {index} at theta {theta}",
                    path.display()
                )));
            }
            block.push(f[2]);
            index += 1;
        }
        samples.push(block);
    }
    let data = TomogramDataset {
        probe: header.probe,
        angles: header.angles,
        samples,
        seed: header.seed,
        state_label: header.state_label,
    };
    data.validate()?;
    Ok((data, header.config_hash))
}
