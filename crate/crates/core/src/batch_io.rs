//! Probe batch files.
//!
//! JSON lines: the first line is the header object
//! `{"n":..,"m":..,"r_prep":..,"r_meas":..,"seed":..,"generator":".."}`,
//! followed by one `{"A":"XYZ..","R":"01.."}` object per record.
//!
//! CSV: a `n,m,r_prep,r_meas,seed,generator` row and its value row, then an
//! `A,R` row and one row per record.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliString, Readout};
use crate::spam::{ProbeBatch, ProbeRecord, SpamParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchFormat {
    Jsonl,
    Csv,
}

impl BatchFormat {
    /// `.csv` selects CSV; anything else is JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => BatchFormat::Csv,
            _ => BatchFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchHeader {
    pub n: usize,
    pub m: usize,
    pub r_prep: f64,
    pub r_meas: f64,
    pub seed: u64,
    pub generator: String,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    #[serde(rename = "A")]
    basis: String,
    #[serde(rename = "R")]
    readout: String,
}

fn header_of(batch: &ProbeBatch) -> BatchHeader {
    BatchHeader {
        n: batch.n,
        m: batch.len(),
        r_prep: batch.spam.r_prep,
        r_meas: batch.spam.r_meas,
        seed: batch.seed,
        generator: batch.generator.clone(),
    }
}

fn parse_record(basis: &str, readout: &str) -> Result<ProbeRecord> {
    ProbeRecord::new(basis.parse::<PauliString>()?, readout.parse::<Readout>()?)
}

fn finish(header: BatchHeader, records: Vec<ProbeRecord>) -> Result<ProbeBatch> {
    if records.len() != header.m {
        return Err(Error::Parse(format!(
            "header declares {} records, found {}",
            header.m,
            records.len()
        )));
    }
    let spam = SpamParams::new(header.r_prep, header.r_meas)?;
    ProbeBatch::from_records(header.n, spam, header.seed, header.generator, records)
}

pub fn write_jsonl<W: Write>(batch: &ProbeBatch, mut w: W) -> Result<()> {
    serde_json::to_writer(&mut w, &header_of(batch))?;
    w.write_all(b"\n")?;
    for r in batch.records() {
        let line = RecordLine {
            basis: r.basis().to_string(),
            readout: r.readout().to_string(),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: Read>(r: R) -> Result<ProbeBatch> {
    let mut lines = BufReader::new(r).lines();
    let header: BatchHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line?)?,
        None => return Err(Error::Parse("empty batch file".into())),
    };
    let mut records = Vec::with_capacity(header.m);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(&line)?;
        records.push(parse_record(&rec.basis, &rec.readout)?);
    }
    finish(header, records)
}

pub fn write_csv<W: Write>(batch: &ProbeBatch, w: W) -> Result<()> {
    let h = header_of(batch);
    let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
    out.write_record(["n", "m", "r_prep", "r_meas", "seed", "generator"])?;
    out.write_record([
        h.n.to_string(),
        h.m.to_string(),
        serde_json::to_string(&h.r_prep)?,
        serde_json::to_string(&h.r_meas)?,
        h.seed.to_string(),
        h.generator,
    ])?;
    out.write_record(["A", "R"])?;
    for r in batch.records() {
        out.write_record([r.basis().to_string(), r.readout().to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<ProbeBatch> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(r);
    let mut rows = rdr.records();
    let mut next_row = |what: &str| -> Result<csv::StringRecord> {
        rows.next()
            .ok_or_else(|| Error::Parse(format!("missing {what} row")))?
            .map_err(Error::from)
    };
    let names = next_row("header")?;
    if names.iter().collect::<Vec<_>>() != ["n", "m", "r_prep", "r_meas", "seed", "generator"] {
        return Err(Error::Parse("unexpected batch header columns".into()));
    }
    let values = next_row("header value")?;
    if values.len() != 6 {
        return Err(Error::Parse("header value row must have 6 fields".into()));
    }
    let num = |i: usize| -> Result<f64> {
        values[i]
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("header field {i}: {e}")))
    };
    let int = |i: usize| -> Result<u64> {
        values[i]
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("header field {i}: {e}")))
    };
    let header = BatchHeader {
        n: int(0)? as usize,
        m: int(1)? as usize,
        r_prep: num(2)?,
        r_meas: num(3)?,
        seed: int(4)?,
        generator: values[5].to_string(),
    };
    let cols = next_row("record header")?;
    if cols.iter().collect::<Vec<_>>() != ["A", "R"] {
        return Err(Error::Parse("expected A,R record header".into()));
    }
    let mut records = Vec::with_capacity(header.m);
    for row in rows {
        let row = row?;
        if row.len() != 2 {
            return Err(Error::Parse("record rows must have 2 fields".into()));
        }
        records.push(parse_record(&row[0], &row[1])?);
    }
    finish(header, records)
}

pub fn write_batch(batch: &ProbeBatch, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match BatchFormat::from_path(path) {
        BatchFormat::Jsonl => write_jsonl(batch, file),
        BatchFormat::Csv => write_csv(batch, file),
    }
}

pub fn read_batch(path: &Path) -> Result<ProbeBatch> {
    let file = std::fs::File::open(path)?;
    match BatchFormat::from_path(path) {
        BatchFormat::Jsonl => read_jsonl(file),
        BatchFormat::Csv => read_csv(file),
    }
}
