//! Command output in text and JSON form.
//!
//! JSON documents follow `{command, inputs, convention?, result, diagnostics}`.
//! Complex numbers are `{"re": .., "im": ..}`; vectors are arrays of those.

use serde_json::{json, Map, Value};
use wirtinger_core::tensor::{format_tensor, ComplexScalar, ComplexTensor, Convention};

pub fn complex_json(z: ComplexScalar) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn tensor_json(t: &ComplexTensor) -> Value {
    match t.shape() {
        [] => complex_json(t.data()[0]),
        [_] => Value::Array(t.data().iter().map(|&z| complex_json(z)).collect()),
        [_, n] => Value::Array(
            t.data()
                .chunks((*n).max(1))
                .map(|row| Value::Array(row.iter().map(|&z| complex_json(z)).collect()))
                .collect(),
        ),
        _ => Value::Null,
    }
}

#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub inputs: Map<String, Value>,
    pub convention: Option<Convention>,
    pub result: Value,
    pub diagnostics: Map<String, Value>,
    pub text: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            inputs: Map::new(),
            convention: None,
            result: Value::Null,
            diagnostics: Map::new(),
            text: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.diagnostics.insert(key.to_string(), value.into());
        self
    }

    /// Records the convention and puts it first in the text output.
    pub fn with_convention(&mut self, conv: Convention) -> &mut Self {
        self.convention = Some(conv);
        self.text.insert(0, format!("convention: {conv}"));
        self
    }

    pub fn line(&mut self, line: impl Into<String>) -> &mut Self {
        self.text.push(line.into());
        self
    }

    pub fn labelled(&mut self, label: &str, value: &ComplexTensor) -> &mut Self {
        self.text.push(format!("{label}: {}", format_tensor(value)));
        self
    }

    pub fn to_json(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("command".into(), Value::from(self.command));
        doc.insert("inputs".into(), Value::Object(self.inputs.clone()));
        if let Some(conv) = self.convention {
            doc.insert("convention".into(), Value::from(conv.name()));
        }
        doc.insert("result".into(), self.result.clone());
        doc.insert(
            "diagnostics".into(),
            Value::Object(self.diagnostics.clone()),
        );
        Value::Object(doc)
    }

    pub fn to_text(&self) -> String {
        self.text.join("\n")
    }
}
