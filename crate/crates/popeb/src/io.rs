//! Dataset loaders and CSV output.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::data::{Document, DocumentData, RegressionData};
use crate::error::{Error, Result};

/// Loads a whitespace- or comma-delimited numeric table where the first
/// column is the target and the remaining columns are features. Features
/// are standardized, an intercept column is appended, and targets are
/// multiplied by `target_scale` (0.01 turns a percentage into a fraction).
pub fn load_table(path: &Path, target_scale: f64) -> Result<RegressionData> {
    let text = fs::read_to_string(path)?;
    let mut targets = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        let mut values = Vec::with_capacity(cells.len());
        for cell in &cells {
            values.push(cell.parse::<f64>().map_err(|_| Error::Parse {
                line: ln + 1,
                detail: format!("cell '{cell}' is not numeric"),
            })?);
        }
        if values.len() < 2 {
            return Err(Error::Parse {
                line: ln + 1,
                detail: "need a target column plus at least one feature".into(),
            });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Parse {
                    line: ln + 1,
                    detail: format!("row has {} columns, expected {w}", values.len()),
                })
            }
            _ => {}
        }
        targets.push(values[0]);
        rows.push(values[1..].to_vec());
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            detail: "file holds no data rows".into(),
        });
    }
    RegressionData::standardized(&rows, &targets, target_scale)
}

/// Loads a bag-of-words file: three header lines with the document count,
/// vocabulary size, and nonzero count, then `docID wordID count` triples
/// with 1-based ids. Duplicate (doc, word) pairs are summed; documents with
/// no words are rejected.
pub fn load_bow(path: &Path) -> Result<DocumentData> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let mut header = [0usize; 3];
    for slot in &mut header {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::Parse {
                line: 1,
                detail: "missing header lines (docs, vocabulary, nnz)".into(),
            })?;
        *slot = line.trim().parse().map_err(|_| Error::Parse {
            line: ln + 1,
            detail: format!("header '{}' is not an integer", line.trim()),
        })?;
    }
    let [n_docs, vocab, nnz] = header;
    if n_docs == 0 || vocab == 0 {
        return Err(Error::Parse {
            line: 1,
            detail: "document count and vocabulary size must be positive".into(),
        });
    }

    let mut pairs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n_docs];
    let mut triples = 0usize;
    for (ln, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>, what: &str| -> Result<usize> {
            tok.ok_or_else(|| Error::Parse {
                line: ln + 1,
                detail: format!("missing {what}"),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                line: ln + 1,
                detail: format!("{what} is not an integer"),
            })
        };
        let doc = parse(it.next(), "docID")?;
        let word = parse(it.next(), "wordID")?;
        let count = parse(it.next(), "count")?;
        if it.next().is_some() {
            return Err(Error::Parse {
                line: ln + 1,
                detail: "expected exactly three columns".into(),
            });
        }
        if doc == 0 || doc > n_docs {
            return Err(Error::Parse {
                line: ln + 1,
                detail: format!("docID {doc} out of range 1..={n_docs}"),
            });
        }
        if word == 0 || word > vocab {
            return Err(Error::Parse {
                line: ln + 1,
                detail: format!("wordID {word} out of range 1..={vocab}"),
            });
        }
        if count == 0 {
            return Err(Error::Parse {
                line: ln + 1,
                detail: "count must be positive".into(),
            });
        }
        pairs[doc - 1].push(((word - 1) as u32, count as u32));
        triples += 1;
    }
    if triples != nnz {
        return Err(Error::Parse {
            line: 3,
            detail: format!("header declares {nnz} triples but file holds {triples}"),
        });
    }
    let docs: Vec<Document> = pairs
        .into_iter()
        .enumerate()
        .map(|(d, p)| {
            if p.is_empty() {
                Err(Error::Parse {
                    line: 1,
                    detail: format!("document {} holds no words", d + 1),
                })
            } else {
                Document::new(p, vocab)
            }
        })
        .collect::<Result<_>>()?;
    DocumentData::new(docs, vocab)
}

/// A CSV file written row by row with stable formatting: floats use Rust's
/// shortest round-trip representation, so identical values produce
/// identical bytes.
pub struct CsvWriter {
    file: fs::File,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut file = fs::File::create(path)?;
        writeln!(file, "{}", header.join(","))?;
        Ok(CsvWriter { file })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        writeln!(self.file, "{}", cells.join(","))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn table_loader_parses_and_standardizes() {
        let f = write_tmp("10.0 1.0\n20.0 3.0\n");
        let data = load_table(f.path(), 0.01).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.dim(), 2); // one feature plus intercept
        assert!((data.target(0) - 0.10).abs() < 1e-12);
        assert!((data.features(0)[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_loader_accepts_commas_and_rejects_ragged_rows() {
        let f = write_tmp("1.0,2.0,3.0\n4.0,5.0,6.0\n");
        assert_eq!(load_table(f.path(), 1.0).unwrap().dim(), 3);

        let f = write_tmp("1.0 2.0 3.0\n4.0 5.0\n");
        let err = load_table(f.path(), 1.0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn table_loader_rejects_bad_cells_and_empty_files() {
        let f = write_tmp("1.0 abc\n");
        assert!(matches!(
            load_table(f.path(), 1.0),
            Err(Error::Parse { line: 1, .. })
        ));
        let f = write_tmp("");
        assert!(load_table(f.path(), 1.0).is_err());
    }

    #[test]
    fn bow_loader_parses_uci_format() {
        let f = write_tmp("2\n3\n2\n1 1 2\n2 3 1\n");
        let corpus = load_bow(f.path()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.vocab(), 3);
        assert_eq!(corpus.doc(0).len(), 2);
        assert_eq!(corpus.doc(1).len(), 1);
    }

    #[test]
    fn bow_loader_sums_duplicates() {
        let f = write_tmp("1\n3\n2\n1 2 1\n1 2 4\n");
        let corpus = load_bow(f.path()).unwrap();
        assert_eq!(corpus.doc(0).words(), &[(1, 5)]);
    }

    #[test]
    fn bow_loader_rejects_out_of_range_and_empty_docs() {
        let f = write_tmp("2\n3\n2\n1 4 1\n2 1 1\n");
        assert!(matches!(load_bow(f.path()), Err(Error::Parse { line: 4, .. })));

        // document 2 never appears
        let f = write_tmp("2\n3\n1\n1 1 1\n");
        assert!(load_bow(f.path()).is_err());

        // nnz mismatch
        let f = write_tmp("1\n3\n5\n1 1 1\n");
        assert!(matches!(load_bow(f.path()), Err(Error::Parse { line: 3, .. })));
    }
}
