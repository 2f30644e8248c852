//! Reader for the indentation-based `key: value` config layout.
//!
//! Supported: nested maps by indentation, scalar values, inline lists
//! (`[0, 1, 2]`), full-line and trailing `#` comments. A trailing comment
//! of the form `# testing: <value>` is kept as the key's test-mode value.
//! Block lists, anchors, multi-line strings and flow maps are rejected.

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(String),
    List(Vec<String>),
    Map(Vec<Entry>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    /// Value from a trailing `# testing:` comment.
    pub testing: Option<String>,
    /// 1-based source line.
    pub line: usize,
}

impl Entry {
    pub fn map(&self) -> Option<&[Entry]> {
        match &self.value {
            Value::Map(m) => Some(m),
            _ => None,
        }
    }
}

pub fn find<'a>(entries: &'a [Entry], key: &str) -> Option<&'a Entry> {
    entries.iter().find(|e| e.key == key)
}

struct Line<'a> {
    number: usize,
    indent: usize,
    key: &'a str,
    value: &'a str,
    testing: Option<String>,
}

/// Splits off a comment introduced by `#` at line start or after
/// whitespace.
fn split_comment(s: &str) -> (&str, Option<&str>) {
    let bytes = s.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return (&s[..i], Some(s[i + 1..].trim()));
        }
    }
    (s, None)
}

fn lex(text: &str) -> CliResult<Vec<Line<'_>>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let (body, comment) = split_comment(raw);
        if body.trim().is_empty() {
            continue;
        }
        if body.contains('\t') {
            return Err(CliError::parse(number, "tabs are not allowed for indentation"));
        }
        let indent = body.len() - body.trim_start().len();
        let content = body.trim();
        if content.starts_with("- ") || content == "-" {
            return Err(CliError::parse(number, "block lists are not supported; write `key: [a, b]`"));
        }
        let Some(colon) = content.find(':') else {
            return Err(CliError::parse(number, format!("expected `key: value`, found `{content}`")));
        };
        let key = content[..colon].trim();
        if key.is_empty() || key.contains(' ') {
            return Err(CliError::parse(number, format!("invalid key `{key}`")));
        }
        let value = content[colon + 1..].trim();
        let testing = comment.and_then(|c| c.strip_prefix("testing:")).map(|v| v.trim().to_string());
        out.push(Line {
            number,
            indent,
            key,
            value,
            testing,
        });
    }
    Ok(out)
}

fn parse_value(line: usize, v: &str) -> CliResult<Value> {
    if let Some(inner) = v.strip_prefix('[') {
        let Some(inner) = inner.strip_suffix(']') else {
            return Err(CliError::parse(line, "unterminated inline list"));
        };
        if inner.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
        if items.iter().any(String::is_empty) {
            return Err(CliError::parse(line, "empty item in inline list"));
        }
        return Ok(Value::List(items));
    }
    if v.starts_with('{') || v.starts_with('&') || v.starts_with('*') || v.starts_with('|') || v.starts_with('>') {
        return Err(CliError::parse(line, format!("unsupported value syntax `{v}`")));
    }
    let unquoted = v
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .or_else(|| v.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')))
        .unwrap_or(v);
    Ok(Value::Scalar(unquoted.to_string()))
}

fn parse_block(lines: &[Line<'_>], pos: &mut usize, indent: usize) -> CliResult<Vec<Entry>> {
    let mut entries: Vec<Entry> = Vec::new();
    while *pos < lines.len() {
        let l = &lines[*pos];
        if l.indent < indent {
            break;
        }
        if l.indent > indent {
            return Err(CliError::parse(l.number, "unexpected indentation"));
        }
        if entries.iter().any(|e| e.key == l.key) {
            return Err(CliError::parse(l.number, format!("duplicate key `{}`", l.key)));
        }
        *pos += 1;
        let value = if l.value.is_empty() {
            match lines.get(*pos) {
                Some(next) if next.indent > indent => {
                    let child = next.indent;
                    Value::Map(parse_block(lines, pos, child)?)
                }
                _ => return Err(CliError::parse(l.number, format!("key `{}` has no value", l.key))),
            }
        } else {
            parse_value(l.number, l.value)?
        };
        entries.push(Entry {
            key: l.key.to_string(),
            value,
            testing: l.testing.clone(),
            line: l.number,
        });
    }
    Ok(entries)
}

/// Parses a whole document into its top-level entries.
pub fn parse(text: &str) -> CliResult<Vec<Entry>> {
    let lines = lex(text)?;
    let mut pos = 0;
    let Some(first) = lines.first() else {
        return Err(CliError::parse(1, "empty document"));
    };
    if first.indent != 0 {
        return Err(CliError::parse(first.number, "document must start at column 0"));
    }
    let entries = parse_block(&lines, &mut pos, 0)?;
    if let Some(l) = lines.get(pos) {
        return Err(CliError::parse(l.number, "indentation does not match any parent key"));
    }
    Ok(entries)
}
