//! Report files. Both renderings are deterministic for identical argv and
//! inputs: JSON keeps struct field order, text flattens the payload into
//! `path: value` lines in the same order.

use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub struct Report {
    pub command: &'static str,
    pub argv: Vec<String>,
    pub payload: Value,
}

impl Report {
    pub fn new(command: &'static str, argv: &[String], payload: impl Serialize) -> Report {
        let payload = serde_json::to_value(payload).expect("report payloads serialize");
        Report {
            command,
            argv: argv.to_vec(),
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        let file = json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "argv": self.argv,
            "payload": self.payload,
        });
        let mut s = serde_json::to_string_pretty(&file).expect("values serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("command: {}\n", self.command);
        flatten("", &self.payload, &mut out);
        out
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "none".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn inline_len(items: &[Value]) -> usize {
    items.iter().map(|i| scalar(i).len() + 2).sum()
}

fn flatten(path: &str, v: &Value, out: &mut String) {
    let child = |key: &str| {
        if path.is_empty() {
            key.to_string()
        } else {
            format!("{path}.{key}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&child(k), v, out);
            }
        }
        Value::Array(items)
            if items.iter().any(|i| i.is_object() || i.is_array()) || inline_len(items) > 100 =>
        {
            for (i, item) in items.iter().enumerate() {
                flatten(&format!("{path}[{i}]"), item, out);
            }
        }
        Value::Array(items) => {
            let joined: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{path}: [{}]\n", joined.join(", ")));
        }
        _ => out.push_str(&format!("{path}: {}\n", scalar(v))),
    }
}
