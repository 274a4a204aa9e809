//! Binary array files and the on-disk instance layout.
//!
//! Each array file starts with a one-line ASCII header
//! `QTDM1 <f64|c128> <rows> <cols>\n`, followed by the entries in row-major
//! order as little-endian `f64` (complex entries as `re, im` pairs).

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ConfusionMatrix, Instance, InstanceParams, SeedLedger};
use crate::error::{QtdmError, Result};
use crate::qmat::{ComplexMatrix, DensityMatrix, ProbabilityVector, C64};
use crate::regions::RegionGraph;

pub const MAGIC: &str = "QTDM1";

#[derive(Clone, Debug, PartialEq)]
pub enum ArrayData {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayFile {
    pub rows: usize,
    pub cols: usize,
    pub data: ArrayData,
}

impl ArrayFile {
    pub fn real_matrix(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        Self { rows: m.nrows(), cols: m.ncols(), data: ArrayData::Real(data) }
    }

    pub fn complex_matrix(m: &ComplexMatrix) -> Self {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        Self { rows: m.nrows(), cols: m.ncols(), data: ArrayData::Complex(data) }
    }

    pub fn vector(v: &[f64]) -> Self {
        Self { rows: v.len(), cols: 1, data: ArrayData::Real(v.to_vec()) }
    }

    pub fn to_real_matrix(&self) -> Option<DMatrix<f64>> {
        match &self.data {
            ArrayData::Real(d) => Some(DMatrix::from_row_slice(self.rows, self.cols, d)),
            ArrayData::Complex(_) => None,
        }
    }

    pub fn to_complex_matrix(&self) -> Option<ComplexMatrix> {
        match &self.data {
            ArrayData::Complex(d) => Some(ComplexMatrix::from_row_slice(self.rows, self.cols, d)),
            ArrayData::Real(_) => None,
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match &self.data {
            ArrayData::Real(d) => Some(d),
            ArrayData::Complex(_) => None,
        }
    }
}

pub fn write_array(path: &Path, array: &ArrayFile) -> Result<()> {
    let mut buf = Vec::new();
    let kind = match array.data {
        ArrayData::Real(_) => "f64",
        ArrayData::Complex(_) => "c128",
    };
    writeln!(buf, "{MAGIC} {kind} {} {}", array.rows, array.cols)?;
    match &array.data {
        ArrayData::Real(d) => d.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        ArrayData::Complex(d) => d.iter().for_each(|z| {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }),
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_array(path: &Path) -> Result<ArrayFile> {
    let bad = |reason: String| QtdmError::Format { path: path.display().to_string(), reason };
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let fields: Vec<&str> = header.trim_end_matches('\n').split(' ').collect();
    let [magic, kind, rows, cols] = fields[..] else {
        return Err(bad(format!("malformed header {header:?}")));
    };
    if magic != MAGIC {
        return Err(bad(format!("bad magic {magic:?}")));
    }
    let rows: usize = rows.parse().map_err(|_| bad(format!("bad row count {rows:?}")))?;
    let cols: usize = cols.parse().map_err(|_| bad(format!("bad column count {cols:?}")))?;
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    let n = rows * cols;
    let floats = |bytes: &[u8]| -> Vec<f64> {
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
    };
    let data = match kind {
        "f64" => {
            if body.len() != 8 * n {
                return Err(bad(format!("expected {} bytes of data, found {}", 8 * n, body.len())));
            }
            ArrayData::Real(floats(&body))
        }
        "c128" => {
            if body.len() != 16 * n {
                return Err(bad(format!("expected {} bytes of data, found {}", 16 * n, body.len())));
            }
            let f = floats(&body);
            ArrayData::Complex(f.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect())
        }
        other => return Err(bad(format!("unknown element type {other:?}"))),
    };
    Ok(ArrayFile { rows, cols, data })
}

/// JSON manifest stored next to the instance arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceManifest {
    pub format: String,
    pub version: String,
    pub graph: RegionGraph,
    pub params: InstanceParams,
    pub seeds: SeedLedger,
    pub delta_c: f64,
    pub region_qubits: Vec<usize>,
    pub n_outcomes: Vec<usize>,
    pub has_global_truth: bool,
}

fn region_file(dir: &Path, r: usize, what: &str) -> std::path::PathBuf {
    dir.join(format!("region_{r:03}_{what}.bin"))
}

fn expect<T>(v: Option<T>, path: &Path, what: &str) -> Result<T> {
    v.ok_or_else(|| QtdmError::Format { path: path.display().to_string(), reason: format!("expected {what}") })
}

impl Instance {
    pub fn manifest(&self) -> InstanceManifest {
        InstanceManifest {
            format: MAGIC.to_string(),
            version: crate::VERSION.to_string(),
            graph: self.graph.clone(),
            params: self.params.clone(),
            seeds: self.seeds.clone(),
            delta_c: self.delta_c,
            region_qubits: self.graph.regions.iter().map(Vec::len).collect(),
            n_outcomes: self.empirical.iter().map(ProbabilityVector::len).collect(),
            has_global_truth: self.global_truth.is_some(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = serde_json::to_string_pretty(&self.manifest())?;
        fs::write(dir.join("manifest.json"), manifest + "\n")?;
        if let Some(g) = &self.global_truth {
            write_array(&dir.join("global_truth.bin"), &ArrayFile::complex_matrix(g.matrix()))?;
        }
        for r in 0..self.n_regions() {
            write_array(&region_file(dir, r, "truth"), &ArrayFile::complex_matrix(self.regional_truths[r].matrix()))?;
            write_array(&region_file(dir, r, "confusion"), &ArrayFile::real_matrix(self.confusions_truth[r].matrix()))?;
            let counts: Vec<f64> = self.counts[r].iter().map(|&c| c as f64).collect();
            write_array(&region_file(dir, r, "counts"), &ArrayFile::vector(&counts))?;
            write_array(&region_file(dir, r, "empirical"), &ArrayFile::vector(self.empirical[r].as_slice()))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: InstanceManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let global_truth = if manifest.has_global_truth {
            let path = dir.join("global_truth.bin");
            let m = expect(read_array(&path)?.to_complex_matrix(), &path, "complex data")?;
            Some(DensityMatrix::new((0..manifest.graph.n_sites).collect(), m)?)
        } else {
            None
        };
        let n = manifest.graph.n_regions();
        let mut regional_truths = Vec::with_capacity(n);
        let mut confusions_truth = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        let mut empirical = Vec::with_capacity(n);
        for r in 0..n {
            let p = region_file(dir, r, "truth");
            let m = expect(read_array(&p)?.to_complex_matrix(), &p, "complex data")?;
            regional_truths.push(DensityMatrix::new(manifest.graph.regions[r].clone(), m)?);
            let p = region_file(dir, r, "confusion");
            let m = expect(read_array(&p)?.to_real_matrix(), &p, "real data")?;
            confusions_truth.push(ConfusionMatrix::new(m)?);
            let p = region_file(dir, r, "counts");
            let a = read_array(&p)?;
            counts.push(expect(a.as_real(), &p, "real data")?.iter().map(|&c| c as u64).collect());
            let p = region_file(dir, r, "empirical");
            let a = read_array(&p)?;
            empirical.push(ProbabilityVector::new(expect(a.as_real(), &p, "real data")?.to_vec())?);
        }
        Ok(Self {
            graph: manifest.graph,
            params: manifest.params,
            seeds: manifest.seeds,
            global_truth,
            regional_truths,
            confusions_truth,
            counts,
            empirical,
            delta_c: manifest.delta_c,
        })
    }
}
