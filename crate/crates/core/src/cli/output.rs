use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Plain decimal, switching to scientific notation below `1e-4` in magnitude.
pub fn fmt_num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// A CSV table held in memory until every row is known.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Files are rendered first and written together at the end.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, String)>,
}

impl Outputs {
    pub fn csv(&mut self, dir: &Path, name: &str, table: &Table) -> Result<()> {
        self.files.push((dir.join(name), table.to_csv()?));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, dir: &Path, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        self.files.push((dir.join(name), text + "\n"));
        Ok(())
    }

    pub fn write(self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len());
        for (path, text) in self.files {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(2.5e-5), "2.5e-5");
        assert_eq!(fmt_num(-3e-7), "-3e-7");
        assert_eq!(fmt_num(1e-4), "0.0001");
    }

    #[test]
    fn csv_rendering() {
        let mut t = Table::new(&["a [x]", "b"]);
        t.push(vec!["1".into(), "two, three".into()]);
        assert_eq!(t.to_csv().unwrap(), "a [x],b\n1,\"two, three\"\n");
    }
}
