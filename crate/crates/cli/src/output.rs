use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;

/// A numeric table written as CSV and, when `plot` is set, as a
/// whitespace-separated gnuplot data file.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub plot: bool,
}

impl Table {
    pub fn new(name: &str, header: &[&str], plot: bool) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: vec![], plot }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn gnuplot(&self) -> String {
        let mut s = format!("# {}\n", self.header.join(" "));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(" "));
        }
        s
    }
}

/// Shortest round-trip form, so reruns compare byte for byte.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
    pub code: i32,
}

impl Outcome {
    pub fn new(result: Value) -> Self {
        Self { result, tables: vec![], code: 0 }
    }

    pub fn table(mut self, t: Table) -> Self {
        self.tables.push(t);
        self
    }

    pub fn code(mut self, code: i32) -> Self {
        self.code = code;
        self
    }
}

/// Writes `<command>.json` (build header, resolved config, result), one CSV
/// and optionally one `.dat` per table, and `config.json` with the resolved
/// config alone.
pub fn write_all(dir: &Path, command: &str, config: &Value, build: &Value, outcome: &Outcome) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let doc = serde_json::json!({ "build": build, "command": command, "config": config, "result": outcome.result });
    fs::write(dir.join(format!("{command}.json")), serde_json::to_string_pretty(&doc)? + "\n")?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(config)? + "\n")?;
    for t in &outcome.tables {
        fs::write(dir.join(format!("{}.csv", t.name)), t.csv())?;
        if t.plot {
            fs::write(dir.join(format!("{}.dat", t.name)), t.gnuplot())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        let mut t = Table::new("t", &["a", "b"], true);
        t.push(vec![num(1.0), num(0.1)]);
        assert_eq!(t.csv(), "a,b\n1.0,0.1\n");
        assert_eq!(t.gnuplot(), "# a b\n1.0 0.1\n");
    }
}
