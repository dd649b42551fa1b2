use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ordered `(x, y[, w])` samples to be fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSeries<T> {
    x: Vec<T>,
    y: Vec<T>,
    weights: Option<Vec<T>>,
}

impl<T: Real> DataSeries<T> {
    /// Requires equal lengths, finite values, strictly increasing `x` and
    /// non-negative weights.
    pub fn new(x: Vec<T>, y: Vec<T>, weights: Option<Vec<T>>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid("data", format!("x has {} points, y has {}", x.len(), y.len())));
        }
        if let Some(w) = &weights {
            if w.len() != x.len() {
                return Err(Error::invalid("data", "weights must match x in length"));
            }
            if w.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
                return Err(Error::invalid("data", "weights must be finite and >= 0"));
            }
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("data", "non-finite sample"));
        }
        if x.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::invalid("data", "x must be strictly increasing"));
        }
        Ok(Self { x, y, weights })
    }

    /// Sorts points by `x` before validating.
    pub fn from_unordered(points: Vec<(T, T)>) -> Result<Self> {
        let mut points = points;
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let (x, y) = points.into_iter().unzip();
        Self::new(x, y, None)
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[i])
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

impl DataSeries<f64> {
    /// Parses two-column `x,y` or three-column `x,y,w` CSV.
    ///
    /// A first line with any non-numeric field is a header. Blank lines are
    /// skipped and row order is kept as is, so the file must already be
    /// sorted by `x`.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut w = Vec::new();
        let mut width = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            let values = match parsed {
                Ok(v) => v,
                Err(_) if x.is_empty() && width.is_none() => {
                    width = Some(fields.len());
                    continue;
                }
                Err(_) => {
                    return Err(Error::invalid("csv", format!("line {line_no}: non-numeric field in `{line}`")));
                }
            };
            if !(values.len() == 2 || values.len() == 3) {
                return Err(Error::invalid(
                    "csv",
                    format!("line {line_no}: expected 2 or 3 columns, got {}", values.len()),
                ));
            }
            match width {
                Some(n) if n != values.len() && !x.is_empty() => {
                    return Err(Error::invalid("csv", format!("line {line_no}: column count changed")));
                }
                _ => width = Some(values.len()),
            }
            x.push(values[0]);
            y.push(values[1]);
            if values.len() == 3 {
                w.push(values[2]);
            }
        }
        if x.is_empty() {
            return Err(Error::invalid("csv", "no data rows"));
        }
        let weights = if w.is_empty() { None } else { Some(w) };
        Self::new(x, y, weights)
    }
}
