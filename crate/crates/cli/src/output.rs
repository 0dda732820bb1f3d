use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gardner_core::Field;
use serde_json::{Map, Value};

/// Floats in CSV files: 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { text: format!("{}\n", header.join(",")) }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn field_csv(field: &Field) -> Csv {
    let mut csv = Csv::new(&["x", "value"]);
    for (j, v) in field.values().iter().enumerate() {
        csv.row(&[num(field.grid().x(j)), num(*v)]);
    }
    csv
}

/// Flat JSON object, keys sorted.
#[derive(Debug, Default)]
pub struct Report {
    fields: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Report::default();
        r.put("command", command);
        r
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.fields.insert(key.to_string(), value.into());
    }

    /// Non-finite values are stored as strings.
    pub fn put_f64(&mut self, key: &str, value: f64) {
        let v = serde_json::Number::from_f64(value)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(value.to_string()));
        self.fields.insert(key.to_string(), v);
    }

    pub fn embed_config<'a>(&mut self, resolved: impl IntoIterator<Item = (&'a String, &'a String)>) {
        for (k, v) in resolved {
            self.put(&format!("config.{k}"), v.as_str());
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&Value::Object(self.fields.clone()))?;
        writeln!(text)?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).with_context(|| format!("creating output directory {}", path.display()))?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gardner_core::GridSpec;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn field_csv_layout() {
        let g = GridSpec::new(8, 4.0).unwrap();
        let csv = field_csv(&Field::constant(g, 1.5));
        let lines: Vec<&str> = csv.text.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[0], "x,value");
        assert_eq!(lines[1], "-4.0000000000000000e0,1.5000000000000000e0");
    }

    #[test]
    fn report_is_flat_and_sorted() {
        let mut r = Report::new("demo");
        r.put_f64("b", f64::NAN);
        r.put_f64("a", 0.25);
        let text = serde_json::to_string(&Value::Object(r.fields.clone())).unwrap();
        assert_eq!(text, r#"{"a":0.25,"b":"NaN","command":"demo"}"#);
    }
}
