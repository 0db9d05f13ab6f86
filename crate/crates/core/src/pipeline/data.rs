use std::path::{Path, PathBuf};

use crate::datagen::{load_dataset, save_dataset};
use crate::error::{Error, Result};
use crate::textprep::{Document, Split};

pub fn split_file(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{split}.jsonl"))
}

/// Writes `train.jsonl`, `validation.jsonl` and `test.jsonl` into `dir`.
pub fn save_splits(docs: &[Document], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for split in Split::ALL {
        let part: Vec<Document> = docs.iter().filter(|d| d.split == split).cloned().collect();
        let path = split_file(dir, split);
        save_dataset(&part, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Loads a single JSONL file, or every split file present in a directory.
/// Label-space consistency is checked across the combined documents.
pub fn load_documents(path: &Path) -> Result<Vec<Document>> {
    let docs = if path.is_dir() {
        let mut docs = Vec::new();
        for split in Split::ALL {
            let f = split_file(path, split);
            if f.exists() {
                docs.extend(load_dataset(&f)?);
            }
        }
        docs
    } else {
        load_dataset(path)?
    };
    if docs.is_empty() {
        return Err(Error::Input(format!("no documents found at {}", path.display())));
    }
    let mut ids = std::collections::HashSet::new();
    if let Some(d) = docs.iter().find(|d| !ids.insert(d.id.as_str())) {
        return Err(Error::Input(format!("duplicate document id `{}`", d.id)));
    }
    crate::labels::LabelSpace::from_documents(&docs)?;
    Ok(docs)
}
