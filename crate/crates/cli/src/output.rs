//! Stdout emission in the two supported machine-readable formats.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// A rectangular result table that can print as a JSON array of objects or
/// as CSV with a header row.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn print(&self, format: OutputFormat) {
        match format {
            OutputFormat::Csv => {
                println!("{}", self.columns.join(","));
                for row in &self.rows {
                    println!("{}", row.join(","));
                }
            }
            OutputFormat::Json => {
                let objects: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut map = serde_json::Map::new();
                        for (col, cell) in self.columns.iter().zip(row) {
                            // Numeric cells stay numeric in JSON.
                            let value = match cell.parse::<f64>() {
                                Ok(v) if v.is_finite() => serde_json::json!(v),
                                _ => serde_json::json!(cell),
                            };
                            map.insert((*col).to_string(), value);
                        }
                        serde_json::Value::Object(map)
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&objects).expect("table json"));
            }
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}
