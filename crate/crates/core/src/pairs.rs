//! Teacher-labeled pair datasets.
//!
//! File format: a JSON header line carrying provenance, split, band and record
//! count, then one JSON record per line with fields `i`, `j`, `y` and an
//! optional `base_sim`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FullRange,
    RangeBound,
    EmbeddingSim,
}

impl Provenance {
    pub fn is_binary(self) -> bool {
        !matches!(self, Provenance::EmbeddingSim)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Provenance::FullRange => "fr",
            Provenance::RangeBound => "rb",
            Provenance::EmbeddingSim => "emb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_sim: Option<f64>,
}

impl PairRecord {
    pub fn unordered(&self) -> (usize, usize) {
        (self.i.min(self.j), self.i.max(self.j))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset {
    pub provenance: Provenance,
    pub split: Split,
    pub band: Option<(f64, f64)>,
    pub records: Vec<PairRecord>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    provenance: Provenance,
    split: Split,
    #[serde(default)]
    band: Option<(f64, f64)>,
    count: usize,
}

impl PairDataset {
    pub fn new(
        provenance: Provenance,
        split: Split,
        band: Option<(f64, f64)>,
        records: Vec<PairRecord>,
    ) -> Result<Self> {
        let ds = PairDataset {
            provenance,
            split,
            band,
            records,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.y).collect()
    }

    /// Item ids referenced by any record.
    pub fn item_ids(&self) -> HashSet<usize> {
        self.records.iter().flat_map(|r| [r.i, r.j]).collect()
    }

    /// Checks the structural invariants for the dataset's provenance.
    pub fn validate(&self) -> Result<()> {
        if self.provenance == Provenance::RangeBound && self.band.is_none() {
            return Err(Error::invalid("range-bound dataset requires a band"));
        }
        if let Some((lo, hi)) = self.band {
            if !(lo < hi) || lo < -1.0 || hi > 1.0 {
                return Err(Error::invalid(format!("invalid band [{lo}, {hi}]")));
            }
        }
        let mut seen = HashSet::new();
        for (index, r) in self.records.iter().enumerate() {
            let bad = |reason: String| Error::InvalidRecord { index, reason };
            if r.i == r.j {
                return Err(bad(format!("self pair ({}, {})", r.i, r.j)));
            }
            if !r.y.is_finite() {
                return Err(bad("non-finite label".into()));
            }
            if self.provenance.is_binary() {
                if r.y != 0.0 && r.y != 1.0 {
                    return Err(bad(format!("binary label expected, found {}", r.y)));
                }
            } else if !(-1.0..=1.0).contains(&r.y) {
                return Err(bad(format!("similarity label {} outside [-1, 1]", r.y)));
            }
            if self.provenance == Provenance::RangeBound {
                let (lo, hi) = self.band.unwrap();
                match r.base_sim {
                    Some(s) if s >= lo && s <= hi => {}
                    Some(s) => return Err(bad(format!("base_sim {s} outside band [{lo}, {hi}]"))),
                    None => return Err(bad("range-bound record without base_sim".into())),
                }
            }
            let key = if self.provenance.is_binary() {
                r.unordered()
            } else {
                (r.i, r.j)
            };
            if !seen.insert(key) {
                return Err(bad(format!("duplicate pair ({}, {})", r.i, r.j)));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let header = Header {
            provenance: self.provenance,
            split: self.split,
            band: self.band,
            count: self.records.len(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::invalid(format!("{}: missing header", path.display())))?
            .map_err(|e| Error::io(path, e))?;
        let header: Header = serde_json::from_str(&header_line).map_err(|e| Error::Line {
            line: 1,
            message: format!("malformed header: {e}"),
        })?;
        let mut records = Vec::with_capacity(header.count);
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PairRecord = serde_json::from_str(&line).map_err(|e| Error::Line {
                line: n + 2,
                message: format!("malformed record: {e}"),
            })?;
            records.push(rec);
        }
        if records.len() != header.count {
            return Err(Error::invalid(format!(
                "{}: header announces {} records, found {}",
                path.display(),
                header.count,
                records.len()
            )));
        }
        PairDataset::new(header.provenance, header.split, header.band, records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: usize, j: usize, y: f64, base_sim: Option<f64>) -> PairRecord {
        PairRecord { i, j, y, base_sim }
    }

    #[test]
    fn rejects_self_pairs_and_duplicates() {
        let err = PairDataset::new(Provenance::FullRange, Split::Train, None, vec![rec(1, 1, 1.0, None)]);
        assert!(err.is_err());
        let err = PairDataset::new(
            Provenance::FullRange,
            Split::Train,
            None,
            vec![rec(1, 2, 1.0, None), rec(2, 1, 0.0, None)],
        );
        assert!(err.unwrap_err().to_string().contains("duplicate"));
        // ordered duplicates are the point of the embedding dataset
        PairDataset::new(
            Provenance::EmbeddingSim,
            Split::Train,
            None,
            vec![rec(1, 2, 0.3, None), rec(2, 1, 0.3, None)],
        )
        .unwrap();
    }

    #[test]
    fn rejects_out_of_band_and_non_binary() {
        let band = Some((0.65, 0.95));
        let err = PairDataset::new(Provenance::RangeBound, Split::Train, band, vec![rec(0, 1, 1.0, Some(0.99))]);
        assert!(err.unwrap_err().to_string().contains("outside band"));
        let err = PairDataset::new(Provenance::RangeBound, Split::Train, band, vec![rec(0, 1, 0.5, Some(0.7))]);
        assert!(err.is_err());
        let err = PairDataset::new(Provenance::RangeBound, Split::Train, None, vec![]);
        assert!(err.is_err());
    }

    #[test]
    fn round_trip_preserves_records() {
        let ds = PairDataset::new(
            Provenance::RangeBound,
            Split::Val,
            Some((0.65, 0.95)),
            vec![rec(0, 3, 1.0, Some(0.7123456789012345)), rec(2, 5, 0.0, Some(0.95))],
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        ds.save(f.path()).unwrap();
        assert_eq!(PairDataset::load(f.path()).unwrap(), ds);
    }
}
