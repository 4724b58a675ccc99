//! Deterministic key:value reports, with a JSON mode.

use std::fmt::Display;

pub enum FieldValue {
    Int(u64),
    Bool(bool),
    Text(String),
}

impl From<usize> for FieldValue {
    fn from(value: usize) -> Self {
        FieldValue::Int(value as u64)
    }
}

impl From<u64> for FieldValue {
    fn from(value: u64) -> Self {
        FieldValue::Int(value)
    }
}

impl From<u32> for FieldValue {
    fn from(value: u32) -> Self {
        FieldValue::Int(u64::from(value))
    }
}

impl From<bool> for FieldValue {
    fn from(value: bool) -> Self {
        FieldValue::Bool(value)
    }
}

impl From<String> for FieldValue {
    fn from(value: String) -> Self {
        FieldValue::Text(value)
    }
}

impl From<&str> for FieldValue {
    fn from(value: &str) -> Self {
        FieldValue::Text(value.to_owned())
    }
}

impl Display for FieldValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldValue::Int(value) => write!(f, "{value}"),
            FieldValue::Bool(value) => write!(f, "{value}"),
            FieldValue::Text(value) => write!(f, "{value}"),
        }
    }
}

impl From<&FieldValue> for serde_json::Value {
    fn from(value: &FieldValue) -> Self {
        match value {
            FieldValue::Int(value) => serde_json::Value::from(*value),
            FieldValue::Bool(value) => serde_json::Value::from(*value),
            FieldValue::Text(value) => serde_json::Value::from(value.clone()),
        }
    }
}

pub struct Report {
    command: &'static str,
    json: bool,
    fields: Vec<(String, FieldValue)>,
}

impl Report {
    pub fn new(command: &'static str, json: bool) -> Self {
        Self {
            command,
            json,
            fields: Vec::new(),
        }
    }

    pub fn field(&mut self, key: impl Into<String>, value: impl Into<FieldValue>) {
        self.fields.push((key.into(), value.into()));
    }

    pub fn emit(self) {
        if self.json {
            let mut object = serde_json::Map::new();
            object.insert("command".into(), serde_json::Value::from(self.command));
            for (key, value) in &self.fields {
                object.insert(key.clone(), serde_json::Value::from(value));
            }
            println!("{}", serde_json::Value::Object(object));
        } else {
            println!("command: {}", self.command);
            for (key, value) in &self.fields {
                println!("{key}: {value}");
            }
        }
    }
}

/// Comma-joins anything displayable; the list form used in reports.
pub fn join<I>(items: I) -> String
where
    I: IntoIterator,
    I::Item: Display,
{
    items
        .into_iter()
        .map(|item| item.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
