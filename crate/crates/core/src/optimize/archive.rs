use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::Individual;
use crate::error::{Error, Result};

/// Every individual of one generation, after evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub individuals: Vec<Individual>,
}

/// Per-generation history, optionally mirrored to a CSV file that grows by one generation
/// at a time so an interrupted search can be resumed.
///
/// CSV columns: `generation, index, g0..gN, f0..fM`.
#[derive(Debug, Default)]
pub struct Archive {
    pub records: Vec<GenerationRecord>,
    path: Option<PathBuf>,
}

impl Archive {
    pub fn in_memory() -> Self {
        Archive::default()
    }

    /// Start a fresh archive file at `path`, truncating any existing one.
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Archive {
            records: Vec::new(),
            path: Some(path),
        })
    }

    /// Load an existing archive file (or start one if it does not exist) and keep appending to it.
    pub fn resume(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        if !path.exists() {
            return Archive::create(path);
        }
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let records = Archive::from_csv_reader(file)?.records;
        Ok(Archive {
            records,
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn last(&self) -> Option<&GenerationRecord> {
        self.records.last()
    }

    pub fn push(&mut self, record: GenerationRecord) -> Result<()> {
        if let Some(path) = &self.path {
            let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            let mut buf = Vec::new();
            write_rows(&mut buf, &record, fresh)?;
            file.write_all(&buf).map_err(|e| Error::io(path, e))?;
            file.sync_data().map_err(|e| Error::io(path, e))?;
        }
        self.records.push(record);
        Ok(())
    }

    pub fn to_csv_writer<W: Write>(&self, mut writer: W) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            let mut buf = Vec::new();
            write_rows(&mut buf, r, i == 0)?;
            writer.write_all(&buf).map_err(|e| Error::io("<archive>", e))?;
        }
        Ok(())
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let genes = headers
            .iter()
            .filter(|h| h.starts_with('g') && h[1..].parse::<usize>().is_ok())
            .count();
        let objectives = headers
            .iter()
            .filter(|h| h.starts_with('f') && h[1..].parse::<usize>().is_ok())
            .count();
        if headers.len() != 2 + genes + objectives {
            return Err(Error::InvalidArgument(format!(
                "unrecognised archive header: {headers:?}"
            )));
        }
        let mut records: Vec<GenerationRecord> = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let num = |i: usize| -> Result<f64> {
                row[i]
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("archive value `{}`: {e}", &row[i])))
            };
            let generation = num(0)? as usize;
            let genome = (0..genes).map(|j| num(2 + j)).collect::<Result<Vec<_>>>()?;
            let objs = (0..objectives)
                .map(|j| num(2 + genes + j))
                .collect::<Result<Vec<_>>>()?;
            let ind = Individual::evaluated(genome, objs);
            match records.last_mut() {
                Some(r) if r.generation == generation => r.individuals.push(ind),
                _ => records.push(GenerationRecord {
                    generation,
                    individuals: vec![ind],
                }),
            }
        }
        Ok(Archive { records, path: None })
    }
}

fn write_rows<W: Write>(writer: W, record: &GenerationRecord, header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let first = record.individuals.first();
    if header {
        let genes = first.map_or(0, |i| i.genome.len());
        let objs = first.map_or(0, |i| i.objectives.len());
        let mut h = vec!["generation".to_string(), "index".to_string()];
        h.extend((0..genes).map(|j| format!("g{j}")));
        h.extend((0..objs).map(|j| format!("f{j}")));
        w.write_record(&h)?;
    }
    for (i, ind) in record.individuals.iter().enumerate() {
        let mut row = vec![record.generation.to_string(), i.to_string()];
        row.extend(ind.genome.iter().map(f64::to_string));
        row.extend(ind.objectives.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<archive>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut a = Archive::in_memory();
        for g in 0..3 {
            a.push(GenerationRecord {
                generation: g,
                individuals: vec![
                    Individual::evaluated(vec![0.1 * g as f64, 1.0 / 3.0], vec![f64::MAX, 2.5e-17]),
                    Individual::evaluated(vec![-7.0, 1e300], vec![0.0, -1.0]),
                ],
            })
            .unwrap();
        }
        let mut buf = Vec::new();
        a.to_csv_writer(&mut buf).unwrap();
        let b = Archive::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn file_archive_appends_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("archive.csv");
        let mut a = Archive::create(&path).unwrap();
        let rec = |g| GenerationRecord {
            generation: g,
            individuals: vec![Individual::evaluated(vec![g as f64], vec![1.0])],
        };
        a.push(rec(0)).unwrap();
        a.push(rec(1)).unwrap();
        let b = Archive::resume(&path).unwrap();
        assert_eq!(b.records, a.records);
    }
}
