use std::io::Write;
use std::path::Path;

/// CSV table with fixed 17-significant-digit float formatting so identical
/// configs produce byte-identical files.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => {
                if s.contains(',') || s.contains('"') || s.contains('\n') {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }
}

impl Table {
    pub fn new(header: Vec<&str>) -> Table {
        Table { header: header.into_iter().map(String::from).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        for row in &self.rows {
            let mut obj = serde_json::Map::new();
            for (k, v) in self.header.iter().zip(row) {
                let val = match v {
                    Cell::Float(x) => serde_json::json!(x),
                    Cell::Int(n) => serde_json::json!(n),
                    Cell::Text(s) => serde_json::json!(s),
                };
                obj.insert(k.clone(), val);
            }
            out.push(serde_json::Value::Object(obj));
        }
        serde_json::to_string_pretty(&serde_json::json!({ "rows": out })).unwrap()
    }
}

/// Write to the path (or stdout when none), with path context on errors.
pub fn emit(content: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .map_err(|e| format!("cannot write to stdout: {e}"))
        }
    }
}
