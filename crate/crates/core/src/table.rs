//! Reading the comma-separated tables written by every stage. Lines starting
//! with `#` are provenance comments; the first data line is the header.

use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) struct Row {
    pub line: usize,
    fields: Vec<String>,
}

impl Row {
    pub fn parse<T: FromStr>(&self, col: usize) -> Result<T> {
        let raw = self
            .fields
            .get(col)
            .ok_or_else(|| Error::parse(self.line, format!("missing column {col}")))?;
        raw.parse()
            .map_err(|_| Error::parse(self.line, format!("cannot parse {raw:?} in column {col}")))
    }

    pub fn text(&self, col: usize) -> Result<&str> {
        self.fields
            .get(col)
            .map(String::as_str)
            .ok_or_else(|| Error::parse(self.line, format!("missing column {col}")))
    }
}

/// Parses `text`, checking the header against `expected` column names.
pub(crate) fn read_rows(text: &str, expected: &[&str]) -> Result<Vec<Row>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != expected {
        return Err(Error::parse(
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != expected.len() {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", expected.len(), record.len()),
            ));
        }
        rows.push(Row {
            line,
            fields: record.iter().map(str::to_owned).collect(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_comments_and_checks_header() {
        let rows = read_rows("# made by test\na,b\n1,2\n# mid\n3,4\n", &["a", "b"]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].parse::<u32>(1).unwrap(), 4);
        assert!(read_rows("a,c\n1,2\n", &["a", "b"]).is_err());
        match read_rows("a,b\n1,2\n3\n", &["a", "b"]) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            Err(e) => panic!("unexpected {e}"),
            Ok(_) => panic!("short row accepted"),
        }
    }
}
