use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, IoContext, Result};
use crate::labels::LabelSpace;
use crate::textprep::{Document, Split};

/// Writes one JSON object per line.
pub fn save_dataset(docs: &[Document], path: &Path) -> Result<()> {
    let file = File::create(path).at(path)?;
    let mut w = BufWriter::new(file);
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n").at(path)?;
    }
    w.flush().at(path)
}

/// Reads a JSONL dataset, checking ids, texts, splits and that every label
/// outside the training split also occurs in it.
pub fn load_dataset(path: &Path) -> Result<Vec<Document>> {
    let reader = BufReader::new(File::open(path).at(path)?);
    let err = |line: usize, msg: String| Error::Dataset {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut docs = Vec::new();
    let mut lines = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| err(n, e.to_string()))?;
        if let Some(split) = value.get("split").and_then(|s| s.as_str()) {
            split.parse::<Split>().map_err(|e| err(n, e.to_string()))?;
        }
        let doc: Document = serde_json::from_value(value).map_err(|e| err(n, e.to_string()))?;
        if doc.raw_text.trim().is_empty() {
            return Err(err(n, "empty document".into()));
        }
        if !ids.insert(doc.id.clone()) {
            return Err(err(n, format!("duplicate id `{}`", doc.id)));
        }
        docs.push(doc);
        lines.push(n);
    }
    if docs.iter().any(|d| d.split == Split::Train) {
        let space = LabelSpace::new(
            docs.iter()
                .filter(|d| d.split == Split::Train)
                .flat_map(|d| d.labels.iter().cloned()),
        )?;
        for (d, &n) in docs.iter().zip(&lines) {
            space.check(d).map_err(|e| err(n, e.to_string()))?;
        }
    }
    Ok(docs)
}
