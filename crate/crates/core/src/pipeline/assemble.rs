use std::collections::HashMap;

use crate::decoder::{DecoderInput, InputSlots, SlotKey};
use crate::encoder::{Encoding, EncodingSet};
use crate::error::{Error, Result};

/// Slot layout implied by a list of encoding sets: one fixed slot per set
/// when every set holds a single aligned strategy, otherwise one variable
/// input drawn from a single set.
pub fn slots_for(sets: &[&EncodingSet]) -> Result<InputSlots> {
    let strategies: Vec<_> = sets
        .iter()
        .map(|s| {
            let first = s.entries().first().ok_or_else(|| Error::Input("empty encoding set".into()))?;
            if s.entries().iter().any(|e| e.strategy != first.strategy) {
                return Err(Error::Input("encoding set mixes strategies".into()));
            }
            Ok(first.strategy)
        })
        .collect::<Result<_>>()?;
    if strategies.iter().all(|s| s.is_aligned()) {
        return Ok(InputSlots::Fixed(strategies.into_iter().map(|s| SlotKey::new(s, "0")).collect()));
    }
    match strategies.as_slice() {
        [one] => Ok(InputSlots::Variable(*one)),
        _ => Err(Error::Input(
            "all and paragraph encodings cannot be combined with other encoding files".into(),
        )),
    }
}

fn widen(e: &Encoding) -> Vec<f64> {
    e.vector.iter().map(|&v| f64::from(v)).collect()
}

/// Decoder inputs for `doc_ids` in order. Fixed slots must be covered for
/// every document; a document without any variable-input encoding gets a
/// single zero vector.
pub fn assemble_inputs(doc_ids: &[&str], sets: &[&EncodingSet], slots: &InputSlots) -> Result<Vec<DecoderInput>> {
    let dim = sets.first().map(|s| s.dim()).ok_or_else(|| Error::Input("no encoding sets".into()))?;
    if let Some(s) = sets.iter().find(|s| s.dim() != dim) {
        return Err(Error::DimMismatch {
            expected: dim,
            got: s.dim(),
        });
    }
    let mut by_doc: HashMap<&str, Vec<&Encoding>> = HashMap::new();
    for set in sets {
        for e in set.entries() {
            by_doc.entry(e.doc_id.as_str()).or_default().push(e);
        }
    }
    doc_ids
        .iter()
        .map(|&id| {
            let found = by_doc.get(id).map(Vec::as_slice).unwrap_or(&[]);
            match slots {
                InputSlots::Fixed(keys) => {
                    let mut vectors = Vec::with_capacity(keys.len());
                    let mut presence = Vec::with_capacity(keys.len());
                    for k in keys {
                        match found.iter().find(|e| e.strategy == k.strategy && e.position_key == k.position_key) {
                            Some(e) => {
                                vectors.push(widen(e));
                                presence.push(true);
                            }
                            None if k.strategy.is_aligned() => {
                                return Err(Error::Input(format!("no {k} encoding for document `{id}`")));
                            }
                            None => {
                                vectors.push(vec![0.0; dim]);
                                presence.push(false);
                            }
                        }
                    }
                    Ok(DecoderInput {
                        doc_id: id.to_string(),
                        vectors,
                        presence,
                    })
                }
                InputSlots::Variable(strategy) => {
                    let mut vectors: Vec<Vec<f64>> =
                        found.iter().filter(|e| e.strategy == *strategy).map(|e| widen(e)).collect();
                    if vectors.is_empty() {
                        if *strategy == crate::textprep::Strategy::All {
                            return Err(Error::Input(format!("no {strategy} encodings for document `{id}`")));
                        }
                        vectors.push(vec![0.0; dim]);
                    }
                    Ok(DecoderInput::all_present(id, vectors))
                }
            }
        })
        .collect()
}
