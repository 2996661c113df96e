//! Line-delimited result records: `key:value` pairs separated by spaces, arrays in brackets.

use std::fmt::Write as _;

use cubic_dendrite::config::Configuration;
use cubic_dendrite::numerics::{CircleAngle, C64};
use cubic_dendrite::poly::CubicPolynomial;
use cubic_dendrite::report::{Check, Report};
use serde_json::{Map, Value as Json};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Str(String),
    Num(f64),
    Int(i64),
    Bool(bool),
    List(Vec<Value>),
}

impl Value {
    fn write_text(&self, out: &mut String) {
        match self {
            Value::Str(s) => {
                if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_./+=()".contains(c)) {
                    out.push_str(s);
                } else {
                    out.push('"');
                    for c in s.chars() {
                        if c == '"' || c == '\\' {
                            out.push('\\');
                        }
                        out.push(c);
                    }
                    out.push('"');
                }
            }
            Value::Num(x) => {
                // shortest representation that parses back to the same double
                let _ = write!(out, "{x:?}");
            }
            Value::Int(n) => {
                let _ = write!(out, "{n}");
            }
            Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Value::List(items) => {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    v.write_text(out);
                }
                out.push(']');
            }
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Value::Str(s) => Json::String(s.clone()),
            Value::Num(x) => serde_json::Number::from_f64(*x).map(Json::Number).unwrap_or(Json::Null),
            Value::Int(n) => Json::from(*n),
            Value::Bool(b) => Json::Bool(*b),
            Value::List(items) => Json::Array(items.iter().map(Value::to_json).collect()),
        }
    }

    pub fn complex(z: C64) -> Value {
        Value::List(vec![Value::Num(z.re), Value::Num(z.im)])
    }

    pub fn angle(t: &CircleAngle) -> Value {
        Value::Str(t.to_string())
    }

    pub fn angles<'a>(ts: impl IntoIterator<Item = &'a CircleAngle>) -> Value {
        Value::List(ts.into_iter().map(Value::angle).collect())
    }

    /// The polynomial as `[re a, im a, re b, im b]`.
    pub fn poly(f: &CubicPolynomial) -> Value {
        let (a, b) = (f.a(), f.b());
        Value::List(vec![Value::Num(a.re), Value::Num(a.im), Value::Num(b.re), Value::Num(b.im)])
    }

    pub fn config(c: Configuration) -> Value {
        Value::List(vec![Value::Int(c.j as i64), Value::Int(c.k as i64), Value::Int(c.l as i64)])
    }
}

/// One record; the first field is always `record`.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    fields: Vec<(String, Value)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        Record {
            fields: vec![("record".into(), Value::Str(kind.into()))],
        }
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.fields.push((key.into(), value));
        self
    }

    pub fn str(self, key: &str, s: impl Into<String>) -> Self {
        self.with(key, Value::Str(s.into()))
    }

    pub fn num(self, key: &str, x: f64) -> Self {
        self.with(key, Value::Num(x))
    }

    pub fn int(self, key: &str, n: usize) -> Self {
        self.with(key, Value::Int(n as i64))
    }

    pub fn bool(self, key: &str, b: bool) -> Self {
        self.with(key, Value::Bool(b))
    }

    pub fn complex(self, key: &str, z: C64) -> Self {
        self.with(key, Value::complex(z))
    }

    pub fn poly(self, f: &CubicPolynomial) -> Self {
        let (c1, c2) = f.coefficients();
        self.with("poly", Value::poly(f)).complex("c1", c1).complex("c2", c2)
    }

    /// Non-finite numbers anywhere in the record.
    pub fn has_non_finite(&self) -> bool {
        fn bad(v: &Value) -> bool {
            match v {
                Value::Num(x) => !x.is_finite(),
                Value::List(items) => items.iter().any(bad),
                _ => false,
            }
        }
        self.fields.iter().any(|(_, v)| bad(v))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, (k, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(k);
            out.push(':');
            v.write_text(&mut out);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let map: Map<String, Json> = self.fields.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        Json::Object(map).to_string()
    }
}

pub fn check_record(scope: &str, c: &Check) -> Record {
    let mut r = Record::new("check")
        .str("scope", scope)
        .str("name", c.name.clone())
        .str("status", if c.pass { "pass" } else { "fail" })
        .num("measured", c.measured)
        .num("tolerance", c.tolerance);
    if !c.detail.is_empty() {
        r = r.str("detail", c.detail.clone());
    }
    r
}

pub fn report_records(scope: &str, rep: &Report) -> Vec<Record> {
    rep.checks.iter().map(|c| check_record(scope, c)).collect()
}
