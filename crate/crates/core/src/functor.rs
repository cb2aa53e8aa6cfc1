//! Booleanization of fuzzy functions on the vertices of the cube, and a check
//! that booleanization commutes with composition.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{AxisCond, Cmp, FuzzyExpr, Region};
use crate::projection::Projection;
use crate::truth_table::{bool_compose, BoolVector, TruthTable, MAX_TABLE_INPUTS};

/// `v ↦ δ(f(v))` for every vertex `v ∈ {0,1}^n`.
pub fn booleanize(f: &FuzzyExpr, p: &Projection) -> Result<TruthTable> {
    if !p.is_boolean() {
        return Err(Error::invalid(format!(
            "booleanization needs a projection onto {{0,1}}, got {p}"
        )));
    }
    let n = f.in_arity();
    if n > MAX_TABLE_INPUTS {
        return Err(Error::Capacity(format!(
            "{n} inputs exceed the enumeration limit of {MAX_TABLE_INPUTS}"
        )));
    }
    let rows = (0..1usize << n)
        .into_par_iter()
        .map(|i| {
            let v = BoolVector::vertex(i, n).to_reals();
            BoolVector::from_reals(&p.apply(&f.eval_unchecked(&v)))
        })
        .collect::<Result<Vec<_>>>()?;
    TruthTable::new(n, f.out_arity(), rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FunctorLaw {
    Holds,
    /// First vertex where `(g∘f)^δ` and `g^δ ∘ f^δ` differ.
    Violated {
        witness: BoolVector,
        composite: BoolVector,
        composed: BoolVector,
    },
}

impl FunctorLaw {
    pub fn holds(&self) -> bool {
        matches!(self, FunctorLaw::Holds)
    }
}

/// Compares `booleanize(g ∘ f)` with `bool_compose(booleanize(g), booleanize(f))`
/// on every vertex.
pub fn verify_functor_law(f: &FuzzyExpr, g: &FuzzyExpr, p: &Projection) -> Result<FunctorLaw> {
    let gf = FuzzyExpr::compose(g, f)?;
    let lhs = booleanize(&gf, p)?;
    let rhs = bool_compose(&booleanize(g, p)?, &booleanize(f, p)?)?;
    let first = lhs
        .rows()
        .iter()
        .zip(rhs.rows())
        .position(|(a, b)| a != b);
    Ok(match first {
        None => FunctorLaw::Holds,
        Some(i) => FunctorLaw::Violated {
            witness: BoolVector::vertex(i, f.in_arity()),
            composite: lhs.rows()[i].clone(),
            composed: rhs.rows()[i].clone(),
        },
    })
}

/// The unary step functions `g(x) = 0 if x ≤ 0 else 1` and
/// `f(x) = 0.2 if x < 0.5 else 1`, returned as `(f, g)`. Under `δ_0.5`,
/// `(g∘f)^δ(0) = 1` while `g^δ(f^δ(0)) = 0`.
pub fn counterexample_pair() -> (FuzzyExpr, FuzzyExpr) {
    let step = |cond: AxisCond, below: f64, above: f64| {
        FuzzyExpr::piecewise(
            vec![Region {
                when: vec![cond],
                expr: FuzzyExpr::constant(1, vec![below]).expect("valid constant"),
            }],
            FuzzyExpr::constant(1, vec![above]).expect("valid constant"),
        )
        .expect("valid piecewise")
    };
    let f = step(AxisCond::new(0, Cmp::Lt, 0.5), 0.2, 1.0);
    let g = step(AxisCond::new(0, Cmp::Le, 0.0), 0.0, 1.0);
    (f, g)
}

/// Identity-shaped expressions of arity `n`: `Id`, `Coord`, `δ`, `δ∘Id`,
/// `Id∘δ`, and a `Parallel` of unary identities.
pub fn identity_shapes(n: usize, p: &Projection) -> Result<Vec<FuzzyExpr>> {
    let id = FuzzyExpr::identity(n);
    let proj = FuzzyExpr::projection(*p, n)?;
    let unary = Arc::new(FuzzyExpr::identity(1));
    Ok(vec![
        id.clone(),
        FuzzyExpr::coord(n, (0..n).collect())?,
        proj.clone(),
        FuzzyExpr::compose(&proj, &id)?,
        FuzzyExpr::compose(&id, &proj)?,
        FuzzyExpr::parallel((0..n).map(|_| unary.as_ref().clone()).collect())?,
    ])
}
