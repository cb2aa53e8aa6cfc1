//! Disjunctive normal forms read off truth tables, optionally minimized with
//! Quine–McCluskey prime implicants and an exact cover.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::truth_table::{BoolVector, TruthTable};

/// Largest arity accepted for minimization.
pub const MAX_MINIMIZE_INPUTS: usize = 12;

/// Intermediate product count beyond which Petrick expansion is abandoned
/// for a branch-and-bound search.
const PETRICK_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    fn sort_key(&self) -> (bool, usize) {
        (self.negated, self.var)
    }
}

/// A conjunction of literals; the empty conjunction is `TRUE`.
pub type Term = Vec<Literal>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFormula")]
pub struct DnfFormula {
    n_inputs: usize,
    /// One disjunction per output; no terms means `FALSE`.
    outputs: Vec<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct RawFormula {
    n_inputs: usize,
    outputs: Vec<Vec<Term>>,
    #[serde(default)]
    names: Option<Vec<String>>,
}

impl TryFrom<RawFormula> for DnfFormula {
    type Error = Error;

    fn try_from(raw: RawFormula) -> Result<Self> {
        let f = DnfFormula::new(raw.n_inputs, raw.outputs)?;
        match raw.names {
            Some(names) => f.with_names(names),
            None => Ok(f),
        }
    }
}

/// `x`, `y`, `z`, then `x4`, `x5`, …
pub fn default_name(var: usize) -> String {
    match var {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        i => format!("x{}", i + 1),
    }
}

fn normalize(mut terms: Vec<Term>) -> Vec<Term> {
    for t in &mut terms {
        t.sort_by_key(Literal::sort_key);
    }
    terms.sort_by(|a, b| {
        a.iter()
            .map(Literal::sort_key)
            .cmp(b.iter().map(Literal::sort_key))
    });
    terms
}

impl DnfFormula {
    pub fn new(n_inputs: usize, outputs: Vec<Vec<Term>>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::structure("a formula needs at least one output"));
        }
        for term in outputs.iter().flatten() {
            let mut seen = BTreeSet::new();
            for lit in term {
                if lit.var >= n_inputs {
                    return Err(Error::structure(format!(
                        "variable {} out of range for {n_inputs} inputs",
                        lit.var
                    )));
                }
                if !seen.insert(lit.var) {
                    return Err(Error::structure(format!(
                        "variable {} appears twice in one conjunction",
                        lit.var
                    )));
                }
            }
        }
        Ok(DnfFormula {
            n_inputs,
            outputs: outputs.into_iter().map(normalize).collect(),
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_inputs {
            return Err(Error::structure(format!(
                "{} names given for {} variables",
                names.len(),
                self.n_inputs
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn terms(&self, output: usize) -> &[Term] {
        &self.outputs[output]
    }

    pub fn term_count(&self) -> usize {
        self.outputs.iter().map(Vec::len).sum()
    }

    pub fn literal_count(&self) -> usize {
        self.outputs.iter().flatten().map(Vec::len).sum()
    }

    pub fn eval(&self, v: &[bool]) -> Result<Vec<bool>> {
        if v.len() != self.n_inputs {
            return Err(Error::structure(format!(
                "formula has {} variables, got {}",
                self.n_inputs,
                v.len()
            )));
        }
        Ok(self
            .outputs
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .any(|t| t.iter().all(|l| v[l.var] != l.negated))
            })
            .collect())
    }

    pub fn to_truth_table(&self) -> Result<TruthTable> {
        let rows = (0..1usize << self.n_inputs)
            .map(|i| self.eval(BoolVector::vertex(i, self.n_inputs).bits()).map(BoolVector::new))
            .collect::<Result<_>>()?;
        TruthTable::new(self.n_inputs, self.outputs.len(), rows)
    }

    fn name(&self, var: usize) -> String {
        self.names
            .as_ref()
            .map_or_else(|| default_name(var), |n| n[var].clone())
    }

    /// Renders one output; `ascii` swaps `∧ ∨ ¬` for `& | !`.
    pub fn render_output(&self, output: usize, ascii: bool) -> String {
        let (and, or, not) = if ascii {
            (" & ", " | ", "!")
        } else {
            (" ∧ ", " ∨ ", "¬")
        };
        let terms = &self.outputs[output];
        if terms.is_empty() {
            return "FALSE".into();
        }
        if terms.iter().any(Vec::is_empty) {
            return "TRUE".into();
        }
        let several = terms.len() > 1;
        terms
            .iter()
            .map(|t| {
                let body = t
                    .iter()
                    .map(|l| {
                        let name = self.name(l.var);
                        if l.negated {
                            format!("{not}{name}")
                        } else {
                            name
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(and);
                if several && t.len() > 1 {
                    format!("({body})")
                } else {
                    body
                }
            })
            .collect::<Vec<_>>()
            .join(or)
    }

    /// All outputs, one per line.
    pub fn render(&self, ascii: bool) -> String {
        (0..self.outputs.len())
            .map(|i| self.render_output(i, ascii))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl std::fmt::Display for DnfFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render(false))
    }
}

/// Converts every output column into a DNF. Without `simplify` each true row
/// becomes a full minterm; with it the cover is a minimum set of prime
/// implicants (fewest terms, then fewest literals).
pub fn table_to_dnf(t: &TruthTable, simplify: bool) -> Result<DnfFormula> {
    let n = t.n_inputs();
    if simplify && n > MAX_MINIMIZE_INPUTS {
        return Err(Error::Capacity(format!(
            "minimization supports at most {MAX_MINIMIZE_INPUTS} inputs, got {n}"
        )));
    }
    let outputs = (0..t.n_outputs())
        .map(|o| {
            let ones: Vec<u32> = t
                .rows()
                .iter()
                .enumerate()
                .filter(|(_, r)| r.bits()[o])
                .map(|(i, _)| i as u32)
                .collect();
            let implicants = if simplify {
                minimize(n, &ones)
            } else {
                ones.iter().map(|&m| Implicant { value: m, mask: 0 }).collect()
            };
            implicants.iter().map(|imp| imp.term(n)).collect()
        })
        .collect();
    DnfFormula::new(n, outputs)
}

/// A cube: bits set in `mask` are free; the rest must equal `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Implicant {
    value: u32,
    mask: u32,
}

impl Implicant {
    fn covers(&self, m: u32) -> bool {
        m & !self.mask == self.value
    }

    fn literals(&self, n: usize) -> usize {
        n - self.mask.count_ones() as usize
    }

    fn term(&self, n: usize) -> Term {
        (0..n)
            .filter_map(|var| {
                let bit = 1 << (n - 1 - var);
                (self.mask & bit == 0).then_some(Literal {
                    var,
                    negated: self.value & bit == 0,
                })
            })
            .collect()
    }
}

fn prime_implicants(ones: &[u32]) -> Vec<Implicant> {
    let mut current: BTreeSet<Implicant> = ones
        .iter()
        .map(|&m| Implicant { value: m, mask: 0 })
        .collect();
    let mut primes = BTreeSet::new();
    while !current.is_empty() {
        let list: Vec<Implicant> = current.iter().copied().collect();
        let mut merged = vec![false; list.len()];
        let mut next = BTreeSet::new();
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                let (a, b) = (list[i], list[j]);
                if a.mask != b.mask {
                    continue;
                }
                let diff = a.value ^ b.value;
                if diff.count_ones() == 1 {
                    merged[i] = true;
                    merged[j] = true;
                    next.insert(Implicant {
                        value: a.value & !diff,
                        mask: a.mask | diff,
                    });
                }
            }
        }
        primes.extend(list.iter().zip(&merged).filter(|(_, &m)| !m).map(|(p, _)| *p));
        current = next;
    }
    primes.into_iter().collect()
}

type Cost = (usize, usize);

fn cost(selection: &[usize], primes: &[Implicant], n: usize) -> Cost {
    (
        selection.len(),
        selection.iter().map(|&p| primes[p].literals(n)).sum(),
    )
}

fn minimize(n: usize, ones: &[u32]) -> Vec<Implicant> {
    if ones.is_empty() {
        return Vec::new();
    }
    let primes = prime_implicants(ones);
    let covering: Vec<Vec<usize>> = ones
        .iter()
        .map(|&m| (0..primes.len()).filter(|&p| primes[p].covers(m)).collect())
        .collect();

    let mut chosen: BTreeSet<usize> = covering
        .iter()
        .filter(|c| c.len() == 1)
        .map(|c| c[0])
        .collect();
    let remaining: Vec<&Vec<usize>> = covering
        .iter()
        .filter(|c| !c.iter().any(|p| chosen.contains(p)))
        .collect();

    if !remaining.is_empty() {
        let extra = petrick(&remaining, &primes, n)
            .unwrap_or_else(|| branch_and_bound(&remaining, &primes, n));
        chosen.extend(extra);
    }
    chosen.into_iter().map(|p| primes[p]).collect()
}

/// Expands the product of sums of covering primes, with absorption, and picks
/// the cheapest product. Gives up when the expansion grows past the limit.
fn petrick(clauses: &[&Vec<usize>], primes: &[Implicant], n: usize) -> Option<Vec<usize>> {
    let mut products: Vec<BTreeSet<usize>> = vec![BTreeSet::new()];
    for clause in clauses {
        let mut next: Vec<BTreeSet<usize>> = Vec::new();
        for prod in &products {
            if clause.iter().any(|p| prod.contains(p)) {
                next.push(prod.clone());
                continue;
            }
            for &p in clause.iter() {
                let mut q = prod.clone();
                q.insert(p);
                next.push(q);
            }
        }
        next.sort_by_key(BTreeSet::len);
        next.dedup();
        let mut kept: Vec<BTreeSet<usize>> = Vec::with_capacity(next.len());
        for cand in next {
            if !kept.iter().any(|k| k.is_subset(&cand)) {
                kept.push(cand);
            }
        }
        if kept.len() > PETRICK_LIMIT {
            return None;
        }
        products = kept;
    }
    products
        .into_iter()
        .map(|s| s.into_iter().collect::<Vec<_>>())
        .min_by_key(|s| cost(s, primes, n))
}

fn branch_and_bound(clauses: &[&Vec<usize>], primes: &[Implicant], n: usize) -> Vec<usize> {
    fn search(
        clauses: &[&Vec<usize>],
        primes: &[Implicant],
        n: usize,
        chosen: &mut Vec<usize>,
        best: &mut Option<(Cost, Vec<usize>)>,
    ) {
        let here = cost(chosen, primes, n);
        if let Some((b, _)) = best {
            if here.0 >= b.0 && (here.0 > b.0 || here.1 >= b.1) {
                return;
            }
        }
        let open = clauses
            .iter()
            .filter(|c| !c.iter().any(|p| chosen.contains(p)))
            .min_by_key(|c| c.len());
        match open {
            None => *best = Some((here, chosen.clone())),
            Some(clause) => {
                for &p in clause.iter() {
                    chosen.push(p);
                    search(clauses, primes, n, chosen, best);
                    chosen.pop();
                }
            }
        }
    }
    let mut best = None;
    search(clauses, primes, n, &mut Vec::new(), &mut best);
    best.map(|(_, s)| s).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(n: usize, f: impl Fn(usize) -> bool) -> TruthTable {
        TruthTable::new(
            n,
            1,
            (0..1 << n).map(|i| BoolVector::new(vec![f(i)])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn xor_renders_as_two_terms() {
        let xor = single(2, |i| i == 1 || i == 2);
        for simplify in [false, true] {
            let f = table_to_dnf(&xor, simplify).unwrap();
            assert_eq!(f.to_string(), "(x ∧ ¬y) ∨ (y ∧ ¬x)");
            assert_eq!(f.render(true), "(x & !y) | (y & !x)");
        }
    }

    #[test]
    fn or_minimizes_to_two_literals() {
        let or = single(2, |i| i != 0);
        assert_eq!(table_to_dnf(&or, true).unwrap().to_string(), "x ∨ y");
        assert_eq!(table_to_dnf(&or, false).unwrap().term_count(), 3);
    }

    #[test]
    fn constants() {
        assert_eq!(table_to_dnf(&single(2, |_| false), true).unwrap().to_string(), "FALSE");
        assert_eq!(table_to_dnf(&single(2, |_| true), true).unwrap().to_string(), "TRUE");
        assert_eq!(table_to_dnf(&single(0, |_| true), false).unwrap().to_string(), "TRUE");
        let f = table_to_dnf(&single(3, |_| true), true).unwrap();
        assert_eq!(f.eval(&[false, true, false]).unwrap(), vec![true]);
    }

    #[test]
    fn cyclic_cover_is_minimal() {
        // Minterms 0,1,2,5,6,7 over three variables have no essential primes
        // and two minimum covers of three terms each.
        let t = single(3, |i| [0, 1, 2, 5, 6, 7].contains(&i));
        let f = table_to_dnf(&t, true).unwrap();
        assert_eq!(f.term_count(), 3);
        assert_eq!(f.literal_count(), 6);
        assert_eq!(f.to_truth_table().unwrap(), t);
    }

    #[test]
    fn branch_and_bound_agrees_with_petrick() {
        let ones = [0u32, 1, 2, 5, 6, 7];
        let primes = prime_implicants(&ones);
        let covering: Vec<Vec<usize>> = ones
            .iter()
            .map(|&m| (0..primes.len()).filter(|&p| primes[p].covers(m)).collect())
            .collect();
        let refs: Vec<&Vec<usize>> = covering.iter().collect();
        let a = petrick(&refs, &primes, 3).unwrap();
        let b = branch_and_bound(&refs, &primes, 3);
        assert_eq!(cost(&a, &primes, 3), cost(&b, &primes, 3));
    }

    #[test]
    fn names_and_capacity() {
        let t = single(3, |i| i == 7);
        let f = table_to_dnf(&t, true)
            .unwrap()
            .with_names(vec!["a".into(), "b".into(), "nc".into()])
            .unwrap();
        assert_eq!(f.to_string(), "a ∧ b ∧ nc");
        assert!(f.clone().with_names(vec!["a".into()]).is_err());
        let big = single(13, |i| i % 3 == 0);
        assert!(matches!(table_to_dnf(&big, true), Err(Error::Capacity(_))));
        assert!(table_to_dnf(&big, false).is_ok());
        assert_eq!(default_name(4), "x5");
    }

    #[test]
    fn rejects_repeated_variable() {
        let lit = Literal {
            var: 0,
            negated: false,
        };
        assert!(DnfFormula::new(1, vec![vec![vec![lit, lit]]]).is_err());
    }
}
