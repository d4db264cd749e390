//! JSON-lines report with a running human summary.

use serde_json::{json, Map, Value};

pub struct Report {
    recipe: &'static str,
    lines: Vec<Value>,
    summary: Vec<String>,
    failed: usize,
}

impl Report {
    pub fn new(recipe: &'static str) -> Self {
        Self {
            recipe,
            lines: Vec::new(),
            summary: Vec::new(),
            failed: 0,
        }
    }

    fn object(&self, eq: &str, check: &str) -> Map<String, Value> {
        let mut obj = Map::new();
        obj.insert("recipe".into(), json!(self.recipe));
        obj.insert("eq".into(), json!(eq));
        obj.insert("check".into(), json!(check));
        obj
    }

    /// Tabulated data, not asserted.
    pub fn record(&mut self, eq: &str, check: &str, fields: Value) {
        let mut obj = self.object(eq, check);
        extend(&mut obj, fields);
        self.lines.push(Value::Object(obj));
    }

    /// Asserted check: passes when `value <= tolerance`.
    pub fn assert(&mut self, eq: &str, check: &str, value: f64, tolerance: f64, fields: Value) -> bool {
        let pass = value <= tolerance;
        let weight = fields.get("weight").and_then(Value::as_f64);
        let mut obj = self.object(eq, check);
        obj.insert("value".into(), json!(value));
        obj.insert("tolerance".into(), json!(tolerance));
        obj.insert("pass".into(), json!(pass));
        extend(&mut obj, fields);
        self.lines.push(Value::Object(obj));
        let label = match weight {
            Some(w) => format!("{check} (w = {w})"),
            None => check.to_string(),
        };
        self.summary.push(format!(
            "[{}] eq {eq:<3} {label}: {value:.3e} <= {tolerance:.1e}",
            if pass { "PASS" } else { "FAIL" }
        ));
        if !pass {
            self.failed += 1;
        }
        pass
    }

    /// A free-form summary line.
    pub fn note(&mut self, text: String) {
        self.summary.push(text);
    }

    /// A computation that stopped with an error.
    pub fn error(&mut self, eq: &str, message: &str) {
        let mut obj = self.object(eq, "error");
        obj.insert("message".into(), json!(message));
        obj.insert("pass".into(), json!(false));
        self.lines.push(Value::Object(obj));
        self.summary.push(format!("[FAIL] eq {eq:<3} error: {message}"));
        self.failed += 1;
    }

    pub fn failed(&self) -> usize {
        self.failed
    }

    pub fn jsonl(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!("grcalc {}\n", self.recipe);
        for line in &self.summary {
            out.push_str("  ");
            out.push_str(line);
            out.push('\n');
        }
        let checks = self.lines.iter().filter(|l| l.get("pass").is_some()).count();
        out.push_str(&format!("{} of {checks} checks passed\n", checks - self.failed));
        out
    }
}

fn extend(obj: &mut Map<String, Value>, fields: Value) {
    if let Value::Object(extra) = fields {
        obj.extend(extra);
    }
}
