//! Measured time series and their CSV form.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mps::{LatticeLayout, Mps};
use crate::tensor::DenseTensor;

/// Extra quantity sampled alongside the magnetisation.
#[derive(Clone, Debug)]
pub enum Observable {
    /// Real part of a local operator on one lattice site.
    Local {
        name: String,
        op: DenseTensor,
        site: usize,
    },
    /// Occupation of one original boson (a pair operator on a split lattice).
    BosonNumber { layout: LatticeLayout, boson: usize },
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Self::Local { name, .. } => name.clone(),
            Self::BosonNumber { boson, .. } => format!("n_{}", boson + 1),
        }
    }

    pub fn measure(&self, psi: &Mps) -> Result<f64> {
        match self {
            Self::Local { op, site, .. } => Ok(psi.expect_local(op, *site)?.re),
            Self::BosonNumber { layout, boson } => psi.expect_boson_number(layout, *boson),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub sz: f64,
    pub norm: f64,
    pub energy: f64,
    pub max_bond_entropy: f64,
    pub max_bond: usize,
    pub observables: Vec<f64>,
    /// Wall-clock time of the step that produced this row.
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    observable_names: Vec<String>,
    rows: Vec<TimeSeriesRow>,
}

impl TimeSeries {
    pub fn new(observable_names: Vec<String>) -> Self {
        Self {
            observable_names,
            rows: Vec::new(),
        }
    }

    /// Build from `(t, sz)` pairs, e.g. an oracle trajectory.
    pub fn from_sz(points: &[(f64, f64)]) -> Result<Self> {
        let mut s = Self::new(Vec::new());
        for &(t, sz) in points {
            s.push(TimeSeriesRow {
                t,
                sz,
                norm: 1.0,
                energy: f64::NAN,
                max_bond_entropy: f64::NAN,
                max_bond: 0,
                observables: Vec::new(),
                wall_ms: 0.0,
            })?;
        }
        Ok(s)
    }

    pub fn push(&mut self, row: TimeSeriesRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(Error::Parameter(format!(
                    "time {} does not follow {}",
                    row.t, last.t
                )));
            }
        }
        if row.observables.len() != self.observable_names.len() {
            return Err(Error::Parameter("observable count mismatch".into()));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[TimeSeriesRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn sz(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sz).collect()
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("t,sz,norm,energy,max_bond_entropy,max_bond");
        for name in &self.observable_names {
            h.push(',');
            h.push_str(name);
        }
        h
    }

    /// One CSV line without the wall-clock column, which lives in a separate
    /// timing file so that repeated runs produce identical data files.
    pub fn csv_row(row: &TimeSeriesRow) -> String {
        let mut line = format!(
            "{:e},{:e},{:e},{:e},{:e},{}",
            row.t, row.sz, row.norm, row.energy, row.max_bond_entropy, row.max_bond
        );
        for v in &row.observables {
            let _ = write!(line, ",{v:e}");
        }
        line
    }

    /// Full CSV; `preamble` lines are emitted first, each prefixed `# `.
    pub fn to_csv(&self, preamble: &[String]) -> String {
        let mut out = String::new();
        for p in preamble {
            let _ = writeln!(out, "# {p}");
        }
        let _ = writeln!(out, "{}", self.csv_header());
        for r in &self.rows {
            let _ = writeln!(out, "{}", Self::csv_row(r));
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("t,wall_ms\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:e},{:.3}", r.t, r.wall_ms);
        }
        out
    }
}
