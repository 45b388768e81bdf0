//! JSON encoding of [`AnnotationDocument`] (schema version 1).

use serde::Serialize;
use thiserror::Error;

use super::AnnotationDocument;

pub const SCHEMA_VERSION: u32 = 1;

/// A parse failure with a machine-readable code such as
/// `missing_field:intrinsics.focal_px`.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{code} (line {line}, column {column}): {message}")]
pub struct ParseError {
    pub code: String,
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn parse(bytes: &[u8]) -> Result<AnnotationDocument, ParseError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let doc: AnnotationDocument = match serde_path_to_error::deserialize(&mut de) {
        Ok(doc) => doc,
        Err(err) => {
            let path = err.path().to_string();
            return Err(classify(path, err.into_inner()));
        }
    };
    if let Err(err) = de.end() {
        return Err(classify(".".into(), err));
    }
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ParseError {
            code: "unsupported_schema_version".into(),
            path: "schema_version".into(),
            line: 0,
            column: 0,
            message: format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                doc.schema_version
            ),
        });
    }
    Ok(doc)
}

/// Canonical encoding: compact JSON, fixed key order, shortest round-trip floats.
pub fn serialize(doc: &AnnotationDocument) -> Vec<u8> {
    serde_json::to_vec(doc).expect("annotation documents always serialize")
}

fn classify(path: String, err: serde_json::Error) -> ParseError {
    let (line, column) = (err.line(), err.column());
    let full = err.to_string();
    let message = match full.rfind(" at line ") {
        Some(i) => full[..i].to_string(),
        None => full,
    };
    let path = if path == "." { String::new() } else { path };
    let join = |field: &str| {
        if path.is_empty() {
            field.to_string()
        } else {
            format!("{path}.{field}")
        }
    };
    let code = if err.is_syntax() || err.is_eof() {
        "syntax".to_string()
    } else if let Some(field) = backticked(&message, "missing field") {
        format!("missing_field:{}", join(&field))
    } else if let Some(field) = backticked(&message, "unknown field") {
        format!("unknown_field:{}", join(&field))
    } else if message.starts_with("unknown variant") {
        format!("unknown_variant:{path}")
    } else if message.starts_with("invalid type") {
        format!("invalid_type:{path}")
    } else if message.starts_with("invalid length") {
        format!("invalid_length:{path}")
    } else {
        format!("invalid_value:{path}")
    };
    ParseError {
        code,
        path,
        line,
        column,
        message,
    }
}

fn backticked(message: &str, prefix: &str) -> Option<String> {
    let rest = message.strip_prefix(prefix)?.trim_start();
    let rest = rest.strip_prefix('`')?;
    let end = rest.find('`')?;
    Some(rest[..end].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"schema_version":1,"image_id":"img","intrinsics":{"focal_px":100.0,"width":32,"height":24},"region":[[0.0,0.0],[32.0,0.0],[32.0,24.0]],"boundaries":[],"normals":[],"planarity":[],"relations":[]}"#;

    #[test]
    fn minimal_document_round_trips_bytes() {
        let doc = parse(MINIMAL.as_bytes()).unwrap();
        assert_eq!(String::from_utf8(serialize(&doc)).unwrap(), MINIMAL);
    }

    #[test]
    fn missing_focal_reports_field_path() {
        let text = MINIMAL.replace(r#""focal_px":100.0,"#, "");
        let err = parse(text.as_bytes()).unwrap_err();
        assert_eq!(err.code, "missing_field:intrinsics.focal_px");
        assert_eq!(err.line, 1);
    }

    #[test]
    fn missing_top_level_field() {
        let text = MINIMAL.replace(r#""image_id":"img","#, "");
        let err = parse(text.as_bytes()).unwrap_err();
        assert_eq!(err.code, "missing_field:image_id");
    }

    #[test]
    fn nested_type_error_carries_path() {
        let text = MINIMAL.replace(
            r#""boundaries":[]"#,
            r#""boundaries":[{"kind":"crease","points":[]}]"#,
        );
        let err = parse(text.as_bytes()).unwrap_err();
        assert_eq!(err.code, "unknown_variant:boundaries[0].kind");
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse(b"{\n  \"schema_version\": 1,\n  oops\n}").unwrap_err();
        assert_eq!(err.code, "syntax");
        assert_eq!(err.line, 3);
    }

    #[test]
    fn wrong_version_rejected() {
        let text = MINIMAL.replace(r#""schema_version":1"#, r#""schema_version":2"#);
        assert_eq!(parse(text.as_bytes()).unwrap_err().code, "unsupported_schema_version");
    }

    #[test]
    fn optional_lists_default_to_empty() {
        let text = r#"{"schema_version":1,"image_id":"a","intrinsics":{"focal_px":1.0,"width":4,"height":4},"region":[[0,0],[4,0],[4,4]]}"#;
        let doc = parse(text.as_bytes()).unwrap();
        assert!(doc.boundaries.is_empty() && doc.relations.is_empty());
    }
}
