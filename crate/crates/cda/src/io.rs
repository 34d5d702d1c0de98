//! File formats: dataset CSV, graph JSON, augmented-set CSV.
//!
//! Floats are written with Rust's shortest round-trip representation, so
//! every value reads back bit-identical.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use cda_core::dataset::{Dataset, Matrix};
use cda_core::graph::{CausalGraph, GraphFile};
use cda_core::AugmentedSet;

use crate::error::CliError;

pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset_from(file).map_err(|e| e.context(path))
}

pub fn read_dataset_from<R: Read>(reader: R) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(CliError::csv)?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() {
        return Err(CliError::invalid("dataset has no columns"));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(CliError::csv)?;
        if record.len() != names.len() {
            return Err(CliError::invalid(format!(
                "row {} has {} fields, header has {}",
                line + 1,
                record.len(),
                names.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::invalid(format!(
                    "row {}, column '{}': not a number: '{field}'",
                    line + 1,
                    names[col]
                ))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let values = Matrix::new(rows, names.len(), data)?;
    Ok(Dataset::new(names, values)?)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_dataset_to(file, data).map_err(|e| e.context(path))
}

pub fn write_dataset_to<W: Write>(writer: W, data: &Dataset) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(data.names()).map_err(CliError::csv)?;
    let mut buf = Vec::with_capacity(data.n_cols());
    for r in 0..data.n_rows() {
        buf.clear();
        buf.extend(data.row(r).iter().map(|v| v.to_string()));
        wtr.write_record(&buf).map_err(CliError::csv)?;
    }
    wtr.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<CausalGraph, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_graph(&text).map_err(|e| e.context(path))
}

pub fn parse_graph(text: &str) -> Result<CausalGraph, CliError> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| CliError::invalid(format!("graph JSON: {e}")))?;
    Ok(CausalGraph::from_file(&file)?)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, value).map_err(|e| CliError::Io(e.to_string()))?;
    file.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Header of an augmented-set CSV with `d` variables.
pub fn augmented_header(d: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=d).map(|j| format!("z_{j}")).collect();
    h.push("weight".into());
    h.push("provenance".into());
    h
}

pub fn write_augmented(path: &Path, aug: &AugmentedSet) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_augmented_to(file, aug).map_err(|e| e.context(path))
}

/// Columns `z_1..z_d, weight, provenance`; provenance is the donor tuple
/// joined by dashes.
pub fn write_augmented_to<W: Write>(writer: W, aug: &AugmentedSet) -> Result<(), CliError> {
    let d = aug.dim();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(augmented_header(d)).map_err(CliError::csv)?;
    let mut buf = Vec::with_capacity(d + 2);
    for i in 0..aug.len() {
        buf.clear();
        buf.extend(aug.point(i).iter().map(|v| v.to_string()));
        buf.push(aug.weights()[i].to_string());
        buf.push(
            aug.provenance(i)
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join("-"),
        );
        wtr.write_record(&buf).map_err(CliError::csv)?;
    }
    wtr.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

pub fn read_augmented(path: &Path) -> Result<AugmentedSet, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_augmented_from(file).map_err(|e| e.context(path))
}

/// Reads an augmented-set CSV. The threshold is not stored in the file and
/// comes back as NaN; the source size is inferred from the largest donor index.
pub fn read_augmented_from<R: Read>(reader: R) -> Result<AugmentedSet, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(CliError::csv)?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < 3 {
        return Err(CliError::invalid(
            "augmented CSV needs z columns, weight and provenance",
        ));
    }
    let d = header.len() - 2;
    if header != augmented_header(d) {
        return Err(CliError::invalid(format!(
            "unexpected augmented CSV header {header:?}, expected {:?}",
            augmented_header(d)
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut provenance = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(CliError::csv)?;
        let bad = |what: &str| CliError::invalid(format!("row {}: bad {what}", line + 1));
        for field in record.iter().take(d) {
            points.push(field.parse::<f64>().map_err(|_| bad("value"))?);
        }
        weights.push(record[d].parse::<f64>().map_err(|_| bad("weight"))?);
        let prov: Vec<u32> = record[d + 1]
            .split('-')
            .map(|s| s.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("provenance"))?;
        if prov.len() != d {
            return Err(bad("provenance length"));
        }
        provenance.extend(prov);
    }
    let n_source = provenance.iter().max().map_or(0, |&m| m as usize + 1);
    Ok(AugmentedSet::from_parts(
        d,
        points,
        weights,
        provenance,
        f64::NAN,
        n_source,
    )?)
}
