use crate::error::{Error, Result};

/// Lower-cases, strips decimal digits, collapses whitespace runs to one space
/// and trims. Infrequent words are kept. Input that is blank, before or
/// after digit removal, is an empty document.
pub fn preprocess_text(raw: &str) -> Result<String> {
    let out = normalize(raw);
    if out.is_empty() {
        return Err(Error::EmptyDocument);
    }
    Ok(out)
}

/// [`preprocess_text`] without the empty-input check; may return `""`.
pub fn normalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars().flat_map(char::to_lowercase) {
        if c.is_ascii_digit() {
            continue;
        }
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}
