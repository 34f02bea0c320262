//! Flat `key = value` experiment files. Keys are the long flag names
//! (`lambda`, `label-col`, `alpha-grid`, ...); `_` and `-` are interchangeable
//! and `#` starts a comment.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |column: usize, message: &str| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            column,
            message: message.to_string(),
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(1, "expected key = value"))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(err(1, "malformed key"));
        }
        let value = value.trim().trim_matches('"').to_string();
        if entries.iter().any(|(k, _)| *k == key) {
            return Err(err(1, &format!("duplicate key {key:?}")));
        }
        entries.push((key, value));
    }
    Ok(entries)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    parse_config(&fs::read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_aliases() {
        let text = "# experiment\nmethod = rflkpc\nlabel_col = class  # trailing\n\nalpha-grid = 0,0.5,1\nout = \"r.json\"\n";
        let got = parse_config(text, Path::new("x.cfg")).unwrap();
        assert_eq!(
            got,
            vec![
                ("method".into(), "rflkpc".into()),
                ("label-col".into(), "class".into()),
                ("alpha-grid".into(), "0,0.5,1".into()),
                ("out".into(), "r.json".into()),
            ]
        );
    }

    #[test]
    fn reports_line_of_bad_entry() {
        match parse_config("k = 3\nlambda 1\n", Path::new("x.cfg")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_config("k = 3\nk = 4\n", Path::new("x.cfg")).is_err());
    }
}
