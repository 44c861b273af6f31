//! Machine-readable run records.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One number in a results payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultItem {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<i64>,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub value: f64,
    /// Exact integer or rational rendering, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    /// Value of the swept flag, for sweep records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
}

impl ResultItem {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        ResultItem {
            name: name.into(),
            index: None,
            value,
            exact: None,
            at: None,
        }
    }

    pub fn indexed(name: impl Into<String>, index: i64, value: f64) -> Self {
        ResultItem {
            index: Some(index),
            ..ResultItem::new(name, value)
        }
    }

    pub fn with_exact(mut self, exact: impl ToString) -> Self {
        self.exact = Some(exact.to_string());
        self
    }
}

/// Non-finite doubles have no JSON number form; they travel as strings.
fn ser_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&render_f64(*v))
    }
}

fn de_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
    }
}

/// 17 significant digits: enough to round-trip any double.
pub fn render_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    pub workers: usize,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Default for Meta {
    fn default() -> Self {
        Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            base_seed: None,
            workers: 0,
            wall_time_s: 0.0,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub results: Vec<ResultItem>,
    pub meta: Meta,
}

impl RunRecord {
    pub fn new(command: impl Into<String>) -> Self {
        RunRecord {
            command: command.into(),
            params: BTreeMap::new(),
            results: Vec::new(),
            meta: Meta::default(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("parameter serializes");
        if !v.is_null() {
            self.params.insert(key.to_string(), v);
        }
    }

    pub fn push(&mut self, item: ResultItem) {
        self.results.push(item);
    }

    pub fn value(&mut self, name: &str, value: f64) {
        self.push(ResultItem::new(name, value));
    }

    pub fn first(&self, name: &str) -> Option<&ResultItem> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(format!("json: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::param("record", format!("bad json: {e}")))
    }

    /// The results payload alone, as compact JSON.
    pub fn results_json(&self) -> String {
        serde_json::to_string(&self.results).expect("results serialize")
    }

    /// One header row, then one row per result item. Sweep records gain a
    /// leading column named after the swept flag.
    pub fn to_csv(&self) -> Result<String> {
        let swept = self
            .params
            .get("vary")
            .and_then(|v| v.as_str())
            .filter(|_| self.results.iter().any(|r| r.at.is_some()));
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["command"];
        if let Some(flag) = swept {
            header.push(flag);
        }
        header.extend(["name", "index", "value", "exact"]);
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.results {
            let mut row = vec![self.command.clone()];
            if swept.is_some() {
                row.push(r.at.map(render_f64).unwrap_or_default());
            }
            row.push(r.name.clone());
            row.push(r.index.map(|i| i.to_string()).unwrap_or_default());
            row.push(render_f64(r.value));
            row.push(r.exact.clone().unwrap_or_default());
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Human-readable summary for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let idx = r.index.map(|i| format!("[{i}]")).unwrap_or_default();
            let _ = writeln!(out, "{:<28} {}", format!("{}{}", r.name, idx), render_f64(r.value));
        }
        out
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Numerical(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunRecord {
        let mut r = RunRecord::new("exact");
        r.param("branching", 2u32);
        r.param("prob", 0.75);
        r.param("absent", Option::<u32>::None);
        r.value("survival", 2.0 / 3.0);
        r.push(ResultItem::indexed("mass", -1, 0.1 + 0.2));
        r.push(ResultItem::new("path_count", 6.0).with_exact(6));
        r.value("lambda", f64::INFINITY);
        r
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = sample();
        assert!(!r.params.contains_key("absent"));
        let back = RunRecord::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_carries_the_same_numbers() {
        let r = sample();
        let csv = r.to_csv().unwrap();
        let mut rows = csv::Reader::from_reader(csv.as_bytes());
        let parsed: Vec<f64> = rows
            .records()
            .map(|row| row.unwrap()[3].parse::<f64>().unwrap())
            .collect();
        let direct: Vec<f64> = r.results.iter().map(|x| x.value).collect();
        assert_eq!(parsed, direct);
        assert!(csv.starts_with("command,name,index,value,exact\n"));
    }

    #[test]
    fn renders_seventeen_digits() {
        assert_eq!(render_f64(2.0 / 3.0), "6.6666666666666663e-1");
        assert_eq!(render_f64(f64::NEG_INFINITY), "-inf");
    }
}
