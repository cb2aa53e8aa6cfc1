//! Boolean functions `{0,1}^n -> {0,1}^m` as explicit tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest input arity that may be enumerated.
pub const MAX_TABLE_INPUTS: usize = 20;

/// A vertex of `{0,1}^n`. Serialized as an array of `0`/`1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BoolVector(Vec<bool>);

impl BoolVector {
    pub fn new(bits: Vec<bool>) -> Self {
        BoolVector(bits)
    }

    /// Rejects anything but exact `0.0` / `1.0`.
    pub fn from_reals(values: &[f64]) -> Result<Self> {
        values
            .iter()
            .map(|&v| {
                if v == 0.0 {
                    Ok(false)
                } else if v == 1.0 {
                    Ok(true)
                } else {
                    Err(Error::Domain(format!("{v} is not a Boolean value")))
                }
            })
            .collect::<Result<_>>()
            .map(BoolVector)
    }

    /// The `index`-th vertex in lexicographic order, bit 0 most significant.
    pub fn vertex(index: usize, n: usize) -> Self {
        BoolVector((0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect())
    }

    pub fn index(&self) -> usize {
        bits_to_index(&self.0)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.0.iter().map(|&b| f64::from(u8::from(b))).collect()
    }
}

impl TryFrom<Vec<u8>> for BoolVector {
    type Error = Error;

    fn try_from(raw: Vec<u8>) -> Result<Self> {
        raw.into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Domain(format!("bit {other} is not 0 or 1"))),
            })
            .collect::<Result<_>>()
            .map(BoolVector)
    }
}

impl From<BoolVector> for Vec<u8> {
    fn from(v: BoolVector) -> Self {
        v.0.into_iter().map(u8::from).collect()
    }
}

impl std::fmt::Display for BoolVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub(crate) fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}

#[derive(Deserialize)]
struct RawTable {
    n_inputs: usize,
    n_outputs: usize,
    rows: Vec<BoolVector>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct TruthTable {
    n_inputs: usize,
    n_outputs: usize,
    rows: Vec<BoolVector>,
}

impl TryFrom<RawTable> for TruthTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        TruthTable::new(raw.n_inputs, raw.n_outputs, raw.rows)
    }
}

fn check_inputs(n: usize) -> Result<()> {
    if n > MAX_TABLE_INPUTS {
        return Err(Error::Capacity(format!(
            "{n} inputs exceed the enumeration limit of {MAX_TABLE_INPUTS}"
        )));
    }
    Ok(())
}

impl TruthTable {
    pub fn new(n_inputs: usize, n_outputs: usize, rows: Vec<BoolVector>) -> Result<Self> {
        check_inputs(n_inputs)?;
        if n_outputs == 0 {
            return Err(Error::structure("a truth table needs at least one output"));
        }
        if rows.len() != 1 << n_inputs {
            return Err(Error::structure(format!(
                "{} rows given, {} inputs need {}",
                rows.len(),
                n_inputs,
                1usize << n_inputs
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n_outputs) {
            return Err(Error::structure(format!(
                "row {r} has {} bits, expected {n_outputs}",
                r.len()
            )));
        }
        Ok(TruthTable {
            n_inputs,
            n_outputs,
            rows,
        })
    }

    /// Builds a table row by row from a function of the input bits.
    pub fn from_fn(
        n_inputs: usize,
        n_outputs: usize,
        mut f: impl FnMut(&[bool]) -> Vec<bool>,
    ) -> Result<Self> {
        check_inputs(n_inputs)?;
        let rows = (0..1usize << n_inputs)
            .map(|i| BoolVector(f(BoolVector::vertex(i, n_inputs).bits())))
            .collect();
        TruthTable::new(n_inputs, n_outputs, rows)
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::structure("identity needs at least one input"));
        }
        TruthTable::from_fn(n, n, <[bool]>::to_vec)
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn rows(&self) -> &[BoolVector] {
        &self.rows
    }

    pub fn row(&self, input: &[bool]) -> Result<&BoolVector> {
        if input.len() != self.n_inputs {
            return Err(Error::structure(format!(
                "table has {} inputs, got {}",
                self.n_inputs,
                input.len()
            )));
        }
        Ok(&self.rows[bits_to_index(input)])
    }

    /// The single-output table of component `i`.
    pub fn output(&self, i: usize) -> Result<TruthTable> {
        if i >= self.n_outputs {
            return Err(Error::structure(format!(
                "output {i} out of range for {} outputs",
                self.n_outputs
            )));
        }
        let rows = self.rows.iter().map(|r| BoolVector(vec![r.0[i]])).collect();
        TruthTable::new(self.n_inputs, 1, rows)
    }

    /// Every output bit flipped.
    pub fn negated(&self) -> TruthTable {
        TruthTable {
            rows: self
                .rows
                .iter()
                .map(|r| BoolVector(r.0.iter().map(|b| !b).collect()))
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl std::fmt::Display for TruthTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, r) in self.rows.iter().enumerate() {
            writeln!(f, "{} -> {r}", BoolVector::vertex(i, self.n_inputs))?;
        }
        Ok(())
    }
}

/// `v ↦ g(f(v))`.
pub fn bool_compose(g: &TruthTable, f: &TruthTable) -> Result<TruthTable> {
    if f.n_outputs != g.n_inputs {
        return Err(Error::structure(format!(
            "cannot compose: inner table has {} outputs, outer expects {} inputs",
            f.n_outputs, g.n_inputs
        )));
    }
    let rows = f.rows.iter().map(|r| g.rows[r.index()].clone()).collect();
    TruthTable::new(f.n_inputs, g.n_outputs, rows)
}
