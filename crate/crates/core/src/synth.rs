//! Observational sample generation and CSV exchange.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SadaError};
use crate::graph::{Dag, VariableId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Continuous,
    Discrete { num_states: usize },
}

/// `m × n` sample matrix stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    m: usize,
    columns: Vec<Vec<f64>>,
    kind: DataKind,
}

impl SampleMatrix {
    pub fn new(columns: Vec<Vec<f64>>, kind: DataKind) -> Result<Self> {
        let m = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != m) {
            return Err(SadaError::InvalidArgument("ragged sample columns".into()));
        }
        if let DataKind::Discrete { num_states } = kind {
            if num_states < 2 {
                return Err(SadaError::InvalidArgument(
                    "num_states must be at least 2".into(),
                ));
            }
            let bad = columns
                .iter()
                .flatten()
                .find(|&&x| x.fract() != 0.0 || x < 0.0 || x >= num_states as f64);
            if let Some(x) = bad {
                return Err(SadaError::DataKind(format!(
                    "value {x} is not a state in 0..{num_states}"
                )));
            }
        } else if columns.iter().flatten().any(|x| !x.is_finite()) {
            return Err(SadaError::DataKind("non-finite sample value".into()));
        }
        Ok(SampleMatrix { m, columns, kind })
    }

    /// Sample count.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Variable count.
    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn kind(&self) -> DataKind {
        self.kind
    }

    pub fn is_continuous(&self) -> bool {
        self.kind == DataKind::Continuous
    }

    pub fn num_states(&self) -> Option<usize> {
        match self.kind {
            DataKind::Discrete { num_states } => Some(num_states),
            DataKind::Continuous => None,
        }
    }

    pub fn column(&self, v: VariableId) -> &[f64] {
        &self.columns[v.0]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// All variable ids, ascending.
    pub fn variables(&self) -> Vec<VariableId> {
        (0..self.n()).map(VariableId).collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_records(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_records(&mut w)?;
        let bytes = w.into_inner().map_err(|e| SadaError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn write_records<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record((0..self.n()).map(|j| VariableId(j).to_string()))?;
        let discrete = !self.is_continuous();
        let mut row = Vec::with_capacity(self.n());
        for i in 0..self.m {
            row.clear();
            for col in &self.columns {
                row.push(if discrete {
                    format!("{}", col[i] as i64)
                } else {
                    format!("{}", col[i])
                });
            }
            w.write_record(&row)?;
        }
        Ok(())
    }

    /// Reads a CSV with a header row. `kind = None` infers the kind: all
    /// integer values give discrete data with `max + 1` states.
    pub fn read_csv(path: impl AsRef<Path>, kind: Option<DataKind>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path)?;
        let n = rdr.headers()?.len();
        let mut columns = vec![Vec::new(); n];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (j, field) in rec.iter().enumerate() {
                let x: f64 = field.trim().parse().map_err(|e| SadaError::Parse {
                    path: path.to_path_buf(),
                    // header is line 1
                    line: row + 2,
                    message: format!("column {}: {e}", j + 1),
                })?;
                columns[j].push(x);
            }
        }
        let kind = match kind {
            Some(DataKind::Discrete { num_states: 0 }) | None => {
                let integral = columns
                    .iter()
                    .flatten()
                    .all(|x| x.fract() == 0.0 && *x >= 0.0);
                match (kind, integral) {
                    (None, false) => DataKind::Continuous,
                    (Some(_), false) => {
                        return Err(SadaError::DataKind(
                            "discrete data expected but found non-integer values".into(),
                        ))
                    }
                    (_, true) => {
                        let max = columns.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
                        DataKind::Discrete {
                            num_states: (max as usize + 1).max(2),
                        }
                    }
                }
            }
            Some(k) => k,
        };
        SampleMatrix::new(columns, kind)
    }
}

/// Population-standardizes a column in place (mean 0, variance 1). Constant
/// columns are only centred.
pub fn standardize(col: &mut [f64]) {
    let m = col.len() as f64;
    let mean = col.iter().sum::<f64>() / m;
    col.iter_mut().for_each(|x| *x -= mean);
    let var = col.iter().map(|x| x * x).sum::<f64>() / m;
    if var > 0.0 {
        let sd = var.sqrt();
        col.iter_mut().for_each(|x| *x /= sd);
    }
}

/// Linear non-Gaussian data: each variable is its weighted standardized
/// uniform noise plus the sum of its (already standardized) parents, then
/// standardized again.
pub fn generate_linear_nongaussian(
    g: &Dag,
    noise_weight: f64,
    m: usize,
    seed: u64,
) -> Result<SampleMatrix> {
    if !(noise_weight > 0.0 && noise_weight <= 1.0) {
        return Err(SadaError::InvalidArgument(format!(
            "noise weight must lie in (0, 1], got {noise_weight}"
        )));
    }
    if m < 2 {
        return Err(SadaError::InvalidArgument("need at least 2 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = vec![Vec::new(); g.n()];
    for v in g.topological_order() {
        let mut noise: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        standardize(&mut noise);
        let mut col: Vec<f64> = noise.iter().map(|u| noise_weight * u).collect();
        for &p in g.parents(v) {
            for (x, y) in col.iter_mut().zip(&columns[p]) {
                *x += y;
            }
        }
        standardize(&mut col);
        columns[v.0] = col;
    }
    SampleMatrix::new(columns, DataKind::Continuous)
}

/// Conditional probability table of one variable: one row per parent
/// configuration, indexed mixed-radix over the sorted parent list with the
/// first parent most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    pub parents: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    fn row_index(&self, states: &[Vec<f64>], sample: usize, k: usize) -> usize {
        self.parents
            .iter()
            .fold(0, |acc, &p| acc * k + states[p][sample] as usize)
    }
}

/// Per-cell probability floor for random CPT rows.
const CPT_FLOOR: f64 = 0.05;

/// Draws one CPT per variable; every row is uniform on the simplex, shrunk
/// towards a floor so that no cell is (nearly) impossible.
pub fn random_cpts(g: &Dag, num_states: usize, rng: &mut impl Rng) -> Vec<Cpt> {
    let floor = CPT_FLOOR.min(0.5 / num_states as f64);
    let mass = 1.0 - floor * num_states as f64;
    (0..g.n())
        .map(|v| {
            let parents = g.parents(VariableId(v)).to_vec();
            let configs = num_states.pow(parents.len() as u32);
            let rows = (0..configs)
                .map(|_| {
                    let raw: Vec<f64> = (0..num_states)
                        .map(|_| rng.sample::<f64, _>(Exp1))
                        .collect();
                    let total: f64 = raw.iter().sum();
                    raw.iter().map(|x| floor + mass * x / total).collect()
                })
                .collect();
            Cpt { parents, rows }
        })
        .collect()
}

/// Ancestral sampling from explicit CPTs.
pub fn sample_from_cpts(
    g: &Dag,
    cpts: &[Cpt],
    num_states: usize,
    m: usize,
    rng: &mut impl Rng,
) -> Result<SampleMatrix> {
    if cpts.len() != g.n() {
        return Err(SadaError::InvalidArgument(
            "one CPT per variable required".into(),
        ));
    }
    let mut columns = vec![Vec::new(); g.n()];
    for v in g.topological_order() {
        let cpt = &cpts[v.0];
        let mut col = Vec::with_capacity(m);
        for i in 0..m {
            let row = &cpt.rows[cpt.row_index(&columns, i, num_states)];
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut state = num_states - 1;
            for (s, p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    state = s;
                    break;
                }
            }
            col.push(state as f64);
        }
        columns[v.0] = col;
    }
    SampleMatrix::new(columns, DataKind::Discrete { num_states })
}

/// Discrete data from random CPTs, sampled ancestrally.
pub fn generate_discrete(g: &Dag, num_states: usize, m: usize, seed: u64) -> Result<SampleMatrix> {
    if num_states < 2 {
        return Err(SadaError::InvalidArgument(
            "num_states must be at least 2".into(),
        ));
    }
    if m < 1 {
        return Err(SadaError::InvalidArgument("need at least 1 sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cpts = random_cpts(g, num_states, &mut rng);
    sample_from_cpts(g, &cpts, num_states, m, &mut rng)
}
