use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GroupId, GroupedDataset, Row};
use crate::error::{Error, Result};

/// Which header columns hold features, the group and (optionally) the label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub features: Vec<String>,
    pub group: String,
    #[serde(default)]
    pub label: Option<String>,
}

/// Reads a headered CSV file.
///
/// Group labels are mapped to dense ids. With `vocabulary` the mapping is
/// fixed (labels outside it are rejected); otherwise the sorted distinct
/// labels of the file define it.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema, vocabulary: Option<&[String]>) -> Result<GroupedDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, vocabulary).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema, vocabulary: Option<&[String]>) -> Result<GroupedDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let feature_cols = schema
        .features
        .iter()
        .map(|f| column(f))
        .collect::<Result<Vec<_>>>()?;
    let group_col = column(&schema.group)?;
    let label_col = schema.label.as_deref().map(column).transpose()?;
    if feature_cols.is_empty() {
        return Err(Error::Config("schema declares no feature columns".into()));
    }

    let mut raw = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(i + 2, |p| p.line() as usize);
        let cell = |col: usize, name: &str| -> Result<f64> {
            let text = record.get(col).unwrap_or("").trim();
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                row: line,
                col: name.to_string(),
                msg: format!("{text:?} is not a number"),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse {
                    row: line,
                    col: name.to_string(),
                    msg: "non-finite value".into(),
                })
            }
        };
        let x = feature_cols
            .iter()
            .zip(&schema.features)
            .map(|(&c, name)| cell(c, name))
            .collect::<Result<Vec<_>>>()?;
        let y = match (label_col, &schema.label) {
            (Some(c), Some(name)) => Some(cell(c, name)?),
            _ => None,
        };
        let group = record.get(group_col).unwrap_or("").trim().to_string();
        raw.push((i as u64, x, group, y));
    }

    let names: Vec<String> = match vocabulary {
        Some(v) => v.to_vec(),
        None => {
            let mut names: Vec<String> = raw.iter().map(|r| r.2.clone()).collect();
            names.sort();
            names.dedup();
            names
        }
    };
    let rows = raw
        .into_iter()
        .map(|(id, x, group, y)| {
            let s = names
                .iter()
                .position(|n| *n == group)
                .ok_or_else(|| Error::UnknownGroupLabel(group.clone()))?;
            Ok(Row {
                id,
                x,
                s: GroupId(s as u32),
                y,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GroupedDataset::new(schema.features.len(), names, rows)
}

/// Writes `data` with the columns named by `schema`.
pub fn write_csv<W: Write>(writer: W, data: &GroupedDataset, schema: &CsvSchema) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = schema.features.iter().map(String::as_str).collect();
    header.push(&schema.group);
    if let Some(label) = &schema.label {
        header.push(label);
    }
    wtr.write_record(&header).map_err(csv_error)?;
    for r in data.rows() {
        let mut rec: Vec<String> = r.x.iter().map(|v| v.to_string()).collect();
        rec.push(data.group_names()[r.s.index()].clone());
        if schema.label.is_some() {
            let y = r.y.ok_or_else(|| Error::MissingColumn("label".into()))?;
            rec.push(y.to_string());
        }
        wtr.write_record(&rec).map_err(csv_error)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io("<csv>", source),
        other => Error::Parse {
            row: line,
            col: String::new(),
            msg: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(label: bool) -> CsvSchema {
        CsvSchema {
            features: vec!["a".into(), "b".into()],
            group: "g".into(),
            label: label.then(|| "y".into()),
        }
    }

    #[test]
    fn reads_well_formed_file() {
        let text = "a,b,g,y\n1,2,m,3\n4,5,f,6\n7,8,m,9\n";
        let d = read_csv(text.as_bytes(), &schema(true), None).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.group_names(), &["f".to_string(), "m".to_string()]);
        assert_eq!(d.rows()[1].s, GroupId(0));
        assert_eq!(d.rows()[2].y, Some(9.0));
        assert_eq!(d.rows()[2].id, 2);
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let text = "a,b,g,y\n1,2,m,3\n4,oops,f,6\n";
        match read_csv(text.as_bytes(), &schema(true), None) {
            Err(Error::Parse { row, col, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(col, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_label_column() {
        let text = "a,b,g\n1,2,m\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &schema(true), None),
            Err(Error::MissingColumn(c)) if c == "y"
        ));
        assert!(read_csv(text.as_bytes(), &schema(false), None).is_ok());
    }

    #[test]
    fn fixed_vocabulary() {
        let vocab = vec!["x".to_string(), "m".to_string()];
        let d = read_csv("a,b,g\n1,2,m\n".as_bytes(), &schema(false), Some(&vocab)).unwrap();
        assert_eq!(d.rows()[0].s, GroupId(1));
        assert!(matches!(
            read_csv("a,b,g\n1,2,q\n".as_bytes(), &schema(false), Some(&vocab)),
            Err(Error::UnknownGroupLabel(_))
        ));
    }

    #[test]
    fn header_only_file_is_empty() {
        let d = read_csv("a,b,g\n".as_bytes(), &schema(false), None).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn write_then_read() {
        let text = "a,b,g,y\n1.5,2,m,3\n4,5.25,f,-6\n";
        let d = read_csv(text.as_bytes(), &schema(true), None).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &d, &schema(true)).unwrap();
        let back = read_csv(buf.as_slice(), &schema(true), None).unwrap();
        assert_eq!(back, d);
    }
}
