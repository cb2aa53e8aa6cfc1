//! Fuzzy functions `[0,1]^n -> [0,1]^m` as composable expression trees.
//!
//! Every [`FuzzyExpr`] carries its input and output arity; construction
//! validates the tree so evaluation can assume consistent shapes. Children
//! are reference counted, which keeps `compose` and the repair constructions
//! cheap to build on top of existing expressions.

use std::fmt;
use std::ops::Deref;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coherence::IncoherentClasses;
use crate::error::{Error, Result};
use crate::nn::MlpModel;
use crate::projection::Projection;

/// Tolerance for comparing raw (unprojected) fuzzy values.
pub const FUZZY_EPS: f64 = 1e-12;

/// A point of the unit hypercube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_unit(&values)?;
        Ok(Point(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

pub(crate) fn check_unit(values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!(
                "component {i} = {v} lies outside [0,1]"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TNorm {
    Min,
    Product,
    /// `max(0, x + y - 1)`
    Lukasiewicz,
}

impl TNorm {
    #[inline]
    pub fn apply(self, x: f64, y: f64) -> f64 {
        match self {
            TNorm::Min => x.min(y),
            TNorm::Product => x * y,
            TNorm::Lukasiewicz => (x + y - 1.0).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TConorm {
    Max,
    /// Probabilistic sum `x + y - xy`.
    ProbSum,
    /// `min(1, x + y)`
    Lukasiewicz,
}

impl TConorm {
    #[inline]
    pub fn apply(self, x: f64, y: f64) -> f64 {
        match self {
            TConorm::Max => x.max(y),
            TConorm::ProbSum => (x + y - x * y).clamp(0.0, 1.0),
            TConorm::Lukasiewicz => (x + y).min(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

/// Half-open axis-aligned predicate `x[axis] <op> value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisCond {
    pub axis: usize,
    pub op: Cmp,
    pub value: f64,
}

impl AxisCond {
    pub fn new(axis: usize, op: Cmp, value: f64) -> Self {
        AxisCond { axis, op, value }
    }

    #[inline]
    fn holds(&self, x: &[f64]) -> bool {
        let v = x[self.axis];
        match self.op {
            Cmp::Lt => v < self.value,
            Cmp::Le => v <= self.value,
            Cmp::Gt => v > self.value,
            Cmp::Ge => v >= self.value,
        }
    }
}

/// One branch of a piecewise expression: applies when every condition holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub when: Vec<AxisCond>,
    pub expr: FuzzyExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Const {
        values: Vec<f64>,
    },
    /// Output `k` is input `indices[k]`.
    Coord {
        indices: Vec<usize>,
    },
    TNorm {
        kind: TNorm,
    },
    TConorm {
        kind: TConorm,
    },
    /// `matrix * x + bias`. With `clamp` the result is clamped into `[0,1]`;
    /// without it the affine map must provably stay inside the cube.
    Affine {
        matrix: Vec<Vec<f64>>,
        bias: Vec<f64>,
        clamp: bool,
    },
    Mlp {
        model: Arc<MlpModel>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights_ref: Option<String>,
    },
    /// The projection itself, as a morphism `[0,1]^n -> [0,1]^n`.
    #[serde(rename = "projection")]
    LiftedProjection {
        projection: Projection,
    },
    /// `outer ∘ inner`
    Compose {
        outer: Arc<FuzzyExpr>,
        inner: Arc<FuzzyExpr>,
    },
    /// Product of morphisms: each part reads its own consecutive slice of the
    /// input and writes its own slice of the output.
    Parallel {
        parts: Vec<FuzzyExpr>,
    },
    /// First region whose conditions hold wins; `otherwise` covers the rest.
    Piecewise {
        regions: Vec<Region>,
        otherwise: Arc<FuzzyExpr>,
    },
    /// Domain-extension repair: component `extended[j]` reads the extra
    /// input `n + j` on every δ-class where it is incoherent.
    DomainExtension {
        base: Arc<FuzzyExpr>,
        projection: Projection,
        extended: Vec<usize>,
        incoherent: IncoherentClasses,
    },
    /// Output-modification repair: incoherent δ-classes of a component are
    /// served by the coherent `fallback`.
    OutputModification {
        base: Arc<FuzzyExpr>,
        fallback: Arc<FuzzyExpr>,
        projection: Projection,
        incoherent: IncoherentClasses,
    },
}

#[derive(Serialize, Deserialize)]
struct ExprDoc {
    in_arity: usize,
    out_arity: usize,
    #[serde(flatten)]
    node: Node,
}

/// A fuzzy function with fixed arities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExprDoc", into = "ExprDoc")]
pub struct FuzzyExpr {
    in_arity: usize,
    out_arity: usize,
    node: Node,
}

impl TryFrom<ExprDoc> for FuzzyExpr {
    type Error = Error;

    fn try_from(doc: ExprDoc) -> Result<Self> {
        FuzzyExpr::from_parts(doc.in_arity, doc.out_arity, doc.node)
    }
}

impl From<FuzzyExpr> for ExprDoc {
    fn from(e: FuzzyExpr) -> Self {
        ExprDoc {
            in_arity: e.in_arity,
            out_arity: e.out_arity,
            node: e.node,
        }
    }
}

fn arity_err(what: &str, expected: usize, got: usize) -> Error {
    Error::structure(format!("{what}: expected {expected}, got {got}"))
}

impl FuzzyExpr {
    /// Validates `node` against the declared arities.
    pub fn from_parts(in_arity: usize, out_arity: usize, node: Node) -> Result<Self> {
        if out_arity == 0 {
            return Err(Error::structure("output arity must be at least 1"));
        }
        validate(in_arity, out_arity, &node)?;
        Ok(FuzzyExpr {
            in_arity,
            out_arity,
            node,
        })
    }

    pub fn in_arity(&self) -> usize {
        self.in_arity
    }

    pub fn out_arity(&self) -> usize {
        self.out_arity
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn constant(in_arity: usize, values: Vec<f64>) -> Result<Self> {
        let out = values.len();
        FuzzyExpr::from_parts(in_arity, out, Node::Const { values })
    }

    pub fn coord(in_arity: usize, indices: Vec<usize>) -> Result<Self> {
        let out = indices.len();
        FuzzyExpr::from_parts(in_arity, out, Node::Coord { indices })
    }

    /// `Id_{[0,1]^n}` as a coordinate selection.
    pub fn identity(n: usize) -> Self {
        FuzzyExpr {
            in_arity: n,
            out_arity: n,
            node: Node::Coord {
                indices: (0..n).collect(),
            },
        }
    }

    pub fn tnorm(kind: TNorm) -> Self {
        FuzzyExpr {
            in_arity: 2,
            out_arity: 1,
            node: Node::TNorm { kind },
        }
    }

    pub fn tconorm(kind: TConorm) -> Self {
        FuzzyExpr {
            in_arity: 2,
            out_arity: 1,
            node: Node::TConorm { kind },
        }
    }

    pub fn affine(matrix: Vec<Vec<f64>>, bias: Vec<f64>, clamp: bool) -> Result<Self> {
        let out = bias.len();
        let inp = matrix.first().map_or(0, Vec::len);
        FuzzyExpr::from_parts(inp, out, Node::Affine { matrix, bias, clamp })
    }

    pub fn mlp(model: MlpModel) -> Self {
        FuzzyExpr {
            in_arity: model.in_arity(),
            out_arity: model.out_arity(),
            node: Node::Mlp {
                model: Arc::new(model),
                weights_ref: None,
            },
        }
    }

    pub fn projection(projection: Projection, n: usize) -> Result<Self> {
        FuzzyExpr::from_parts(n, n, Node::LiftedProjection { projection })
    }

    /// `g ∘ f`
    pub fn compose(g: &FuzzyExpr, f: &FuzzyExpr) -> Result<Self> {
        if f.out_arity != g.in_arity {
            return Err(Error::structure(format!(
                "cannot compose: inner output arity {} does not match outer input arity {}",
                f.out_arity, g.in_arity
            )));
        }
        Ok(FuzzyExpr {
            in_arity: f.in_arity,
            out_arity: g.out_arity,
            node: Node::Compose {
                outer: Arc::new(g.clone()),
                inner: Arc::new(f.clone()),
            },
        })
    }

    pub fn parallel(parts: Vec<FuzzyExpr>) -> Result<Self> {
        let inp = parts.iter().map(|p| p.in_arity).sum();
        let out = parts.iter().map(|p| p.out_arity).sum();
        FuzzyExpr::from_parts(inp, out, Node::Parallel { parts })
    }

    pub fn piecewise(regions: Vec<Region>, otherwise: FuzzyExpr) -> Result<Self> {
        let (inp, out) = (otherwise.in_arity, otherwise.out_arity);
        FuzzyExpr::from_parts(
            inp,
            out,
            Node::Piecewise {
                regions,
                otherwise: Arc::new(otherwise),
            },
        )
    }

    /// Evaluates at `x`, checking arity and the `[0,1]` domain.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_arity {
            return Err(arity_err("input arity", self.in_arity, x.len()));
        }
        check_unit(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without input validation. `x` must have the right length
    /// and lie in the unit cube.
    pub fn eval_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match &self.node {
            Node::Const { values } => values.clone(),
            Node::Coord { indices } => indices.iter().map(|&i| x[i]).collect(),
            Node::TNorm { kind } => vec![kind.apply(x[0], x[1])],
            Node::TConorm { kind } => vec![kind.apply(x[0], x[1])],
            Node::Affine { matrix, bias, .. } => matrix
                .iter()
                .zip(bias)
                .map(|(row, b)| {
                    let v = row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + w * xi);
                    v.clamp(0.0, 1.0)
                })
                .collect(),
            Node::Mlp { model, .. } => model.forward_unchecked(x),
            Node::LiftedProjection { projection } => projection.apply(x),
            Node::Compose { outer, inner } => outer.eval_unchecked(&inner.eval_unchecked(x)),
            Node::Parallel { parts } => {
                let mut out = Vec::with_capacity(self.out_arity);
                let mut offset = 0;
                for p in parts {
                    out.extend(p.eval_unchecked(&x[offset..offset + p.in_arity]));
                    offset += p.in_arity;
                }
                out
            }
            Node::Piecewise { regions, otherwise } => regions
                .iter()
                .find(|r| r.when.iter().all(|c| c.holds(x)))
                .map_or_else(|| otherwise.eval_unchecked(x), |r| r.expr.eval_unchecked(x)),
            Node::DomainExtension {
                base,
                projection,
                extended,
                incoherent,
            } => {
                let n = base.in_arity;
                let (point, extra) = x.split_at(n);
                let (mut y, projected_y, class) = repair_inputs(base, projection, point);
                for i in 0..y.len() {
                    let slot = extended.iter().position(|&e| e == i);
                    match slot {
                        Some(j) if incoherent.contains(i, &class) => y[i] = extra[j],
                        _ => keep_or_pull(projection, &mut y[i], projected_y[i]),
                    }
                }
                y
            }
            Node::OutputModification {
                base,
                fallback,
                projection,
                incoherent,
            } => {
                let (mut y, projected_y, class) = repair_inputs(base, projection, x);
                let mut fb: Option<Vec<f64>> = None;
                for i in 0..y.len() {
                    if incoherent.contains(i, &class) {
                        y[i] = fb.get_or_insert_with(|| fallback.eval_unchecked(x))[i];
                    } else {
                        keep_or_pull(projection, &mut y[i], projected_y[i]);
                    }
                }
                y
            }
        }
    }

    /// Depth of the tree; leaves have depth 0.
    pub fn depth(&self) -> usize {
        self.children().iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    fn children(&self) -> Vec<&FuzzyExpr> {
        match &self.node {
            Node::Compose { outer, inner } => vec![outer, inner],
            Node::Parallel { parts } => parts.iter().collect(),
            Node::Piecewise { regions, otherwise } => regions
                .iter()
                .map(|r| &r.expr)
                .chain(std::iter::once(otherwise.as_ref()))
                .collect(),
            Node::DomainExtension { base, .. } => vec![base],
            Node::OutputModification { base, fallback, .. } => vec![base, fallback],
            _ => Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads an expression file. Network nodes may give `weights_ref`, a
    /// path to a weights file relative to the expression file, in place of
    /// an inline `model`.
    pub fn load(path: &Path) -> Result<Self> {
        let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        resolve_weights(&mut doc, base)?;
        Ok(serde_json::from_value(doc)?)
    }
}

fn resolve_weights(v: &mut serde_json::Value, base: &Path) -> Result<()> {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            let is_mlp = map.get("node").and_then(Value::as_str) == Some("mlp");
            if is_mlp && !map.contains_key("model") {
                let Some(rel) = map.get("weights_ref").and_then(Value::as_str) else {
                    return Err(Error::structure("mlp node needs a model or weights_ref"));
                };
                let text = std::fs::read_to_string(base.join(rel))?;
                let model: Value = serde_json::from_str(&text)?;
                map.insert("model".into(), model);
            }
            map.values_mut().try_for_each(|c| resolve_weights(c, base))
        }
        Value::Array(items) => items.iter_mut().try_for_each(|c| resolve_weights(c, base)),
        _ => Ok(()),
    }
}

/// Evaluates the base at `x` and at `δ(x)` and returns the δ-class key of `x`.
fn repair_inputs(
    base: &FuzzyExpr,
    projection: &Projection,
    x: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<u64>) {
    let px = projection.apply(x);
    let y = base.eval_unchecked(x);
    let projected_y = base.eval_unchecked(&px);
    let class = x.iter().map(|&v| projection.level_of(v)).collect();
    (y, projected_y, class)
}

/// Keeps `y` where it is coherent with the class representative; otherwise
/// takes the representative's value so the class projects uniformly.
#[inline]
fn keep_or_pull(projection: &Projection, y: &mut f64, at_projected: f64) {
    if projection.apply_scalar(*y) != projection.apply_scalar(at_projected) {
        *y = at_projected;
    }
}

fn validate(inp: usize, out: usize, node: &Node) -> Result<()> {
    match node {
        Node::Const { values } => {
            if values.len() != out {
                return Err(arity_err("constant output arity", out, values.len()));
            }
            check_unit(values)
        }
        Node::Coord { indices } => {
            if indices.len() != out {
                return Err(arity_err("coordinate output arity", out, indices.len()));
            }
            match indices.iter().find(|&&i| i >= inp) {
                Some(i) => Err(Error::structure(format!(
                    "coordinate index {i} out of range for input arity {inp}"
                ))),
                None => Ok(()),
            }
        }
        Node::TNorm { .. } | Node::TConorm { .. } => {
            if inp != 2 || out != 1 {
                return Err(Error::structure(format!(
                    "binary connectives map 2 -> 1, declared {inp} -> {out}"
                )));
            }
            Ok(())
        }
        Node::Affine {
            matrix,
            bias,
            clamp,
        } => {
            if matrix.len() != out || bias.len() != out {
                return Err(arity_err("affine output rows", out, matrix.len()));
            }
            for row in matrix {
                if row.len() != inp {
                    return Err(arity_err("affine row length", inp, row.len()));
                }
            }
            if matrix.iter().flatten().chain(bias).any(|v| !v.is_finite()) {
                return Err(Error::invalid("affine coefficients must be finite"));
            }
            if !clamp {
                // Exact range of a linear map over the cube.
                for (row, b) in matrix.iter().zip(bias) {
                    let lo = b + row.iter().filter(|w| **w < 0.0).sum::<f64>();
                    let hi = b + row.iter().filter(|w| **w > 0.0).sum::<f64>();
                    if lo < 0.0 || hi > 1.0 {
                        return Err(Error::Contract(format!(
                            "unclamped affine row ranges over [{lo}, {hi}], outside [0,1]"
                        )));
                    }
                }
            }
            Ok(())
        }
        Node::Mlp { model, .. } => {
            if model.in_arity() != inp || model.out_arity() != out {
                return Err(Error::structure(format!(
                    "model maps {} -> {}, declared {inp} -> {out}",
                    model.in_arity(),
                    model.out_arity()
                )));
            }
            Ok(())
        }
        Node::LiftedProjection { .. } => {
            if inp != out {
                return Err(arity_err("projection arity", inp, out));
            }
            Ok(())
        }
        Node::Compose { outer, inner } => {
            if inner.out_arity != outer.in_arity {
                return Err(arity_err(
                    "composition interface",
                    outer.in_arity,
                    inner.out_arity,
                ));
            }
            if inner.in_arity != inp || outer.out_arity != out {
                return Err(Error::structure(format!(
                    "composite maps {} -> {}, declared {inp} -> {out}",
                    inner.in_arity, outer.out_arity
                )));
            }
            Ok(())
        }
        Node::Parallel { parts } => {
            if parts.is_empty() {
                return Err(Error::structure("parallel needs at least one part"));
            }
            let si: usize = parts.iter().map(|p| p.in_arity).sum();
            let so: usize = parts.iter().map(|p| p.out_arity).sum();
            if si != inp || so != out {
                return Err(Error::structure(format!(
                    "parallel maps {si} -> {so}, declared {inp} -> {out}"
                )));
            }
            Ok(())
        }
        Node::Piecewise { regions, otherwise } => {
            for e in regions.iter().map(|r| &r.expr).chain([otherwise.as_ref()]) {
                if e.in_arity != inp || e.out_arity != out {
                    return Err(Error::structure(format!(
                        "piecewise branch maps {} -> {}, declared {inp} -> {out}",
                        e.in_arity, e.out_arity
                    )));
                }
            }
            for c in regions.iter().flat_map(|r| &r.when) {
                if c.axis >= inp {
                    return Err(Error::structure(format!(
                        "region axis {} out of range for input arity {inp}",
                        c.axis
                    )));
                }
                if !c.value.is_finite() {
                    return Err(Error::invalid("region threshold must be finite"));
                }
            }
            Ok(())
        }
        Node::DomainExtension {
            base,
            extended,
            incoherent,
            ..
        } => {
            if base.in_arity + extended.len() != inp || base.out_arity != out {
                return Err(Error::structure(format!(
                    "domain extension of a {} -> {} base with {} extra inputs cannot be {inp} -> {out}",
                    base.in_arity,
                    base.out_arity,
                    extended.len()
                )));
            }
            if extended.windows(2).any(|w| w[0] >= w[1]) || extended.iter().any(|&i| i >= out) {
                return Err(Error::structure(
                    "extended components must be ascending output indices",
                ));
            }
            incoherent.validate(out, base.in_arity)
        }
        Node::OutputModification {
            base,
            fallback,
            incoherent,
            ..
        } => {
            for e in [base, fallback] {
                if e.in_arity != inp || e.out_arity != out {
                    return Err(Error::structure(format!(
                        "output modification operand maps {} -> {}, declared {inp} -> {out}",
                        e.in_arity, e.out_arity
                    )));
                }
            }
            incoherent.validate(out, inp)
        }
    }
}

impl fmt::Display for FuzzyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Const { values } => write!(f, "const{values:?}"),
            Node::Coord { indices } => write!(f, "coord{indices:?}"),
            Node::TNorm { kind } => write!(f, "tnorm:{kind:?}"),
            Node::TConorm { kind } => write!(f, "tconorm:{kind:?}"),
            Node::Affine { .. } => write!(f, "affine({}->{})", self.in_arity, self.out_arity),
            Node::Mlp { .. } => write!(f, "mlp({}->{})", self.in_arity, self.out_arity),
            Node::LiftedProjection { projection } => write!(f, "{projection}"),
            Node::Compose { outer, inner } => write!(f, "({outer} ∘ {inner})"),
            Node::Parallel { parts } => {
                write!(f, "⟨")?;
                for (k, p) in parts.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "⟩")
            }
            Node::Piecewise { regions, .. } => write!(f, "piecewise[{} regions]", regions.len()),
            Node::DomainExtension { base, extended, .. } => {
                write!(f, "extend({base}, +{})", extended.len())
            }
            Node::OutputModification { base, fallback, .. } => {
                write!(f, "modify({base}, {fallback})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn luk_or() -> FuzzyExpr {
        FuzzyExpr::tconorm(TConorm::Lukasiewicz)
    }

    #[test]
    fn connective_examples() {
        let luk_and = FuzzyExpr::tnorm(TNorm::Lukasiewicz);
        let v = luk_and.eval(&[0.6, 0.6]).unwrap()[0];
        assert!((v - 0.2).abs() < FUZZY_EPS);
        let v = luk_or().eval(&[0.2, 0.4]).unwrap()[0];
        assert!((v - 0.6).abs() < FUZZY_EPS);
        assert_eq!(luk_or().eval(&[0.7, 0.9]).unwrap(), vec![1.0]);
        let prob = FuzzyExpr::tconorm(TConorm::ProbSum);
        assert!((prob.eval(&[0.5, 0.5]).unwrap()[0] - 0.75).abs() < FUZZY_EPS);
    }

    #[test]
    fn constant_ignores_input() {
        let c = FuzzyExpr::constant(3, vec![0.7]).unwrap();
        assert_eq!(c.eval(&[0.0, 0.4, 1.0]).unwrap(), vec![0.7]);
        assert_eq!(c.eval(&[1.0, 1.0, 1.0]).unwrap(), vec![0.7]);
    }

    #[test]
    fn compose_constants_into_conorm() {
        let consts = FuzzyExpr::parallel(vec![
            FuzzyExpr::constant(0, vec![0.2]).unwrap(),
            FuzzyExpr::constant(0, vec![0.4]).unwrap(),
        ])
        .unwrap();
        let e = FuzzyExpr::compose(&luk_or(), &consts).unwrap();
        assert_eq!(e.in_arity(), 0);
        assert!((e.eval(&[]).unwrap()[0] - 0.6).abs() < FUZZY_EPS);
    }

    #[test]
    fn compose_rejects_mismatch() {
        let f = FuzzyExpr::constant(1, vec![0.3]).unwrap();
        let err = FuzzyExpr::compose(&luk_or(), &f).unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
    }

    #[test]
    fn eval_rejects_bad_input() {
        assert!(matches!(luk_or().eval(&[0.1]), Err(Error::Structure(_))));
        assert!(matches!(luk_or().eval(&[0.1, 1.2]), Err(Error::Domain(_))));
        assert!(matches!(luk_or().eval(&[f64::NAN, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn affine_clamps_or_is_checked() {
        let a = FuzzyExpr::affine(vec![vec![2.0, -1.0]], vec![0.1], true).unwrap();
        assert_eq!(a.eval(&[1.0, 0.0]).unwrap(), vec![1.0]);
        assert_eq!(a.eval(&[0.0, 1.0]).unwrap(), vec![0.0]);
        assert!(FuzzyExpr::affine(vec![vec![2.0, -1.0]], vec![0.1], false).is_err());
        let avg = FuzzyExpr::affine(vec![vec![0.5, 0.5]], vec![0.0], false).unwrap();
        assert_eq!(avg.eval(&[0.2, 0.4]).unwrap()[0], 0.30000000000000004);
    }

    #[test]
    fn piecewise_counterexample_functions() {
        // g(0) = 0, g(x) = 1 for x > 0
        let g = FuzzyExpr::piecewise(
            vec![Region {
                when: vec![AxisCond::new(0, Cmp::Le, 0.0)],
                expr: FuzzyExpr::constant(1, vec![0.0]).unwrap(),
            }],
            FuzzyExpr::constant(1, vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(g.eval(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(g.eval(&[1e-300]).unwrap(), vec![1.0]);
        assert_eq!(g.eval(&[0.2]).unwrap(), vec![1.0]);
    }

    #[test]
    fn parallel_splits_inputs() {
        let p = FuzzyExpr::parallel(vec![
            FuzzyExpr::tnorm(TNorm::Min),
            FuzzyExpr::tconorm(TConorm::Max),
        ])
        .unwrap();
        assert_eq!((p.in_arity(), p.out_arity()), (4, 2));
        assert_eq!(p.eval(&[0.2, 0.7, 0.1, 0.3]).unwrap(), vec![0.2, 0.3]);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let e = FuzzyExpr::compose(
            &FuzzyExpr::tnorm(TNorm::Min),
            &FuzzyExpr::parallel(vec![
                FuzzyExpr::projection(Projection::half(), 1).unwrap(),
                FuzzyExpr::coord(1, vec![0]).unwrap(),
            ])
            .unwrap(),
        )
        .unwrap();
        let text = e.to_json().unwrap();
        assert!(text.contains("\"node\": \"compose\""));
        let back = FuzzyExpr::from_json(&text).unwrap();
        assert_eq!(back, e);

        let bad = r#"{"node":"t_norm","in_arity":3,"out_arity":1,"kind":"min"}"#;
        assert!(FuzzyExpr::from_json(bad).is_err());
        let bad = r#"{"node":"coord","in_arity":1,"out_arity":1,"indices":[4]}"#;
        assert!(FuzzyExpr::from_json(bad).is_err());
    }

    #[test]
    fn depth_counts_nesting() {
        let id = FuzzyExpr::identity(2);
        assert_eq!(id.depth(), 0);
        let c = FuzzyExpr::compose(&FuzzyExpr::tnorm(TNorm::Min), &id).unwrap();
        assert_eq!(c.depth(), 1);
    }
}
