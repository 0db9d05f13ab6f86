//! The label space of a dataset and multi-hot encoding against it.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{Document, Split};

/// Sorted label names observed in the training split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSpace {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<String>> for LabelSpace {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<LabelSpace> for Vec<String> {
    fn from(space: LabelSpace) -> Self {
        space.names
    }
}

impl LabelSpace {
    pub fn new(names: impl IntoIterator<Item = String>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if names.is_empty() {
            return Err(Error::Config("label space is empty".into()));
        }
        let index = names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        Ok(Self { names, index })
    }

    /// Builds the space from training documents and checks that every other
    /// document only uses known labels.
    pub fn from_documents(docs: &[Document]) -> Result<Self> {
        let space = Self::new(
            docs.iter()
                .filter(|d| d.split == Split::Train)
                .flat_map(|d| d.labels.iter().cloned()),
        )?;
        for d in docs {
            space.check(d)?;
        }
        Ok(space)
    }

    pub fn check(&self, doc: &Document) -> Result<()> {
        match doc.labels.iter().find(|l| !self.index.contains_key(l.as_str())) {
            Some(l) => Err(Error::Input(format!(
                "document `{}` uses label `{l}` outside the training label space",
                doc.id
            ))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn multi_hot(&self, doc: &Document) -> Result<Vec<f64>> {
        self.check(doc)?;
        let mut v = vec![0.0; self.len()];
        for l in &doc.labels {
            v[self.index[l.as_str()]] = 1.0;
        }
        Ok(v)
    }
}
