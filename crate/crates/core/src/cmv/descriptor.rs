use super::{CmvError, VerblunskySequence};

/// Parses a TOML descriptor; errors carry `line:column` of the offending token.
pub fn parse_descriptor(text: &str) -> Result<VerblunskySequence, CmvError> {
    let seq: VerblunskySequence = toml::from_str(text).map_err(|e| CmvError::Parse(toml_diagnostic(text, &e)))?;
    seq.validate()?;
    Ok(seq)
}

pub fn write_descriptor(seq: &VerblunskySequence) -> String {
    toml::to_string(seq).expect("sequence serializes to TOML")
}

pub fn toml_diagnostic(text: &str, err: &toml::de::Error) -> String {
    let msg = err.message().trim().to_string();
    match err.span() {
        Some(span) => {
            let (line, col) = line_col(text, span.start);
            format!("{line}:{col}: {msg}")
        }
        None => match quoted_key(&msg).and_then(|k| find_key(text, k)) {
            Some((line, col)) => format!("{line}:{col}: {msg}"),
            None => format!("1:1: {msg}"),
        },
    }
}

/// First backtick-quoted name in a serde message, e.g. the field of "unknown field `x`".
fn quoted_key(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

/// Position of the first line that assigns `key`.
fn find_key(text: &str, key: &str) -> Option<(usize, usize)> {
    text.lines().enumerate().find_map(|(i, line)| {
        let trimmed = line.trim_start();
        let rest = trimmed.strip_prefix(key)?;
        rest.trim_start().starts_with('=').then(|| (i + 1, line.len() - trimmed.len() + 1))
    })
}

/// One-based line and column of a byte offset.
pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}
