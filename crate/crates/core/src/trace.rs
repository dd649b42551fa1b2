//! Rectangular tables of samples produced by spectra, sweeps and fits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub label: String,
    pub unit: String,
}

impl Column {
    /// Header cell, e.g. `detuning [ueV]`.
    pub fn header(&self) -> String {
        format!("{} [{}]", self.label, self.unit)
    }
}

/// Named table of real-valued rows plus string metadata.
///
/// Metadata is kept in a sorted map so serialisation order is stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T = f64> {
    name: String,
    columns: Vec<Column>,
    rows: Vec<Vec<T>>,
    metadata: BTreeMap<String, String>,
}

impl<T: Real> Trace<T> {
    pub fn new(name: impl Into<String>, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.into(),
            columns: columns
                .iter()
                .map(|(l, u)| Column {
                    label: (*l).to_string(),
                    unit: (*u).to_string(),
                })
                .collect(),
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_columns(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Appends a row.
    ///
    /// # Panics
    /// If the row width differs from the column count.
    pub fn push_row(&mut self, row: Vec<T>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "trace `{}` is {} columns wide",
            self.name,
            self.columns.len()
        );
        self.rows.push(row);
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, index: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[index]).collect()
    }

    pub fn column_by_label(&self, label: &str) -> Option<Vec<T>> {
        let idx = self.columns.iter().position(|c| c.label == label)?;
        Some(self.column(idx))
    }

    /// Comma-separated body with one header row, LF line endings. Values are
    /// shortest round-trip decimals, in exponent form below 1e-5 or from 1e15.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<_> = self.columns.iter().map(Column::header).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let v = v.to_f64_lossy();
                if v != 0.0 && (v.abs() < 1e-5 || v.abs() >= 1e15) {
                    write!(out, "{v:e}").unwrap();
                } else {
                    write!(out, "{v}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}
