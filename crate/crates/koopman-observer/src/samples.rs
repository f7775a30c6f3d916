//! State/derivative sample sets and their CSV form.
//!
//! The CSV schema is `x1,...,xn,xdot1,...,xdotn` with one sample per row;
//! values are written with Rust's shortest round-trip float formatting, so a
//! write → read → write cycle is byte-identical.

use std::path::Path;

use crate::error::{Error, Result};

/// d pairs (xⱼ, ẋⱼ), stored row-major.
#[derive(Debug, Clone)]
pub struct SampleSet {
    n: usize,
    states: Vec<f64>,
    derivatives: Vec<f64>,
    seed: Option<u64>,
    domain: Option<Vec<(f64, f64)>>,
}

impl SampleSet {
    pub fn new(n: usize, states: Vec<f64>, derivatives: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("state dimension is zero".into()));
        }
        if states.len() != derivatives.len() || states.len() % n != 0 {
            return Err(Error::DimensionMismatch(format!(
                "states ({}) and derivatives ({}) must both hold d×{} entries",
                states.len(),
                derivatives.len(),
                n
            )));
        }
        if states.is_empty() {
            return Err(Error::DegenerateData("sample set is empty".into()));
        }
        if !states.iter().chain(&derivatives).all(|v| v.is_finite()) {
            return Err(Error::DegenerateData(
                "sample set contains non-finite entries".into(),
            ));
        }
        Ok(SampleSet {
            n,
            states,
            derivatives,
            seed: None,
            domain: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of samples d.
    pub fn len(&self) -> usize {
        self.states.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn domain(&self) -> Option<&[(f64, f64)]> {
        self.domain.as_deref()
    }

    pub fn state(&self, j: usize) -> &[f64] {
        &self.states[j * self.n..(j + 1) * self.n]
    }

    pub fn derivative(&self, j: usize) -> &[f64] {
        &self.derivatives[j * self.n..(j + 1) * self.n]
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Csv {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
        let mut header = Vec::with_capacity(2 * self.n);
        for i in 1..=self.n {
            header.push(format!("x{i}"));
        }
        for i in 1..=self.n {
            header.push(format!("xdot{i}"));
        }
        w.write_record(&header).map_err(|e| Error::Csv {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        for j in 0..self.len() {
            let row: Vec<String> = self
                .state(j)
                .iter()
                .chain(self.derivative(j))
                .map(|v| v.to_string())
                .collect();
            w.write_record(&row).map_err(|e| Error::Csv {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
        }
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let pstr = path.display().to_string();
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::Csv {
            path: pstr.clone(),
            msg: e.to_string(),
        })?;
        let headers = r
            .headers()
            .map_err(|e| Error::Csv {
                path: pstr.clone(),
                msg: e.to_string(),
            })?
            .clone();
        let cols = headers.len();
        if cols < 2 || cols % 2 != 0 {
            return Err(Error::Csv {
                path: pstr,
                msg: format!("expected columns x1..xn,xdot1..xdotn, found {cols} columns"),
            });
        }
        let n = cols / 2;
        for i in 0..n {
            let want_x = format!("x{}", i + 1);
            let want_xd = format!("xdot{}", i + 1);
            if headers.get(i) != Some(want_x.as_str())
                || headers.get(n + i) != Some(want_xd.as_str())
            {
                return Err(Error::Csv {
                    path: pstr,
                    msg: format!(
                        "unexpected header '{},{}' at column {} (want '{},{}')",
                        headers.get(i).unwrap_or(""),
                        headers.get(n + i).unwrap_or(""),
                        i + 1,
                        want_x,
                        want_xd
                    ),
                });
            }
        }
        let mut states = Vec::new();
        let mut derivatives = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::Csv {
                path: pstr.clone(),
                msg: e.to_string(),
            })?;
            if rec.len() != cols {
                return Err(Error::Csv {
                    path: pstr,
                    msg: format!("row {} has {} fields, expected {cols}", line + 2, rec.len()),
                });
            }
            for (i, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Csv {
                    path: pstr.clone(),
                    msg: format!("row {}, column {}: '{field}' is not a number", line + 2, i + 1),
                })?;
                if i < n {
                    states.push(v);
                } else {
                    derivatives.push(v);
                }
            }
        }
        if states.is_empty() {
            return Err(Error::DegenerateData(format!(
                "{pstr}: no data rows (header only)"
            )));
        }
        SampleSet::new(n, states, derivatives)
    }
}
