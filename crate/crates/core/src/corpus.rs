//! Seeded random expression generators for property tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coherence::{check_coherence, SamplingSpec};
use crate::error::Result;
use crate::expr::{AxisCond, Cmp, FuzzyExpr, Region, TConorm, TNorm};
use crate::projection::Projection;

pub const MAX_ARITY: usize = 4;
pub const MAX_DEPTH: usize = 3;

fn arity(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(1..=MAX_ARITY)
}

/// Constants with values rounded to two decimals, so thresholds are hit.
fn constant(rng: &mut ChaCha8Rng, n: usize, m: usize) -> FuzzyExpr {
    let values = (0..m).map(|_| f64::from(rng.gen_range(0..=100u8)) / 100.0).collect();
    FuzzyExpr::constant(n, values).expect("values lie in [0,1]")
}

fn coord(rng: &mut ChaCha8Rng, n: usize, m: usize) -> FuzzyExpr {
    let idx = (0..m).map(|_| rng.gen_range(0..n)).collect();
    FuzzyExpr::coord(n, idx).expect("indices in range")
}

fn coherent_leaf(rng: &mut ChaCha8Rng, n: usize, m: usize, p: &Projection) -> FuzzyExpr {
    let mut options = vec![0, 1];
    if n == m {
        options.push(2);
    }
    if n == 2 && m == 1 {
        options.extend([3, 3, 4, 4]);
    }
    match *options.choose(rng).expect("non-empty") {
        0 => constant(rng, n, m),
        1 => coord(rng, n, m),
        2 => FuzzyExpr::projection(*p, n).expect("positive arity"),
        3 => FuzzyExpr::tnorm(TNorm::Min),
        _ => FuzzyExpr::tconorm(TConorm::Max),
    }
}

/// Splits `total ≥ 2` into two positive parts.
fn split(rng: &mut ChaCha8Rng, total: usize) -> (usize, usize) {
    let a = rng.gen_range(1..total);
    (a, total - a)
}

fn grow(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    depth: usize,
    leaf: &mut dyn FnMut(&mut ChaCha8Rng, usize, usize) -> FuzzyExpr,
) -> FuzzyExpr {
    let choice = if depth == 0 { 0 } else { rng.gen_range(0..4) };
    match choice {
        1 | 2 => {
            let k = arity(rng);
            let inner = grow(rng, n, k, depth - 1, leaf);
            let outer = grow(rng, k, m, depth - 1, leaf);
            FuzzyExpr::compose(&outer, &inner).expect("arities chain")
        }
        3 if n >= 2 && m >= 2 => {
            let (n1, n2) = split(rng, n);
            let (m1, m2) = split(rng, m);
            let a = grow(rng, n1, m1, depth - 1, leaf);
            let b = grow(rng, n2, m2, depth - 1, leaf);
            FuzzyExpr::parallel(vec![a, b]).expect("parts are valid")
        }
        _ => leaf(rng, n, m),
    }
}

/// A coherent expression `[0,1]^n -> [0,1]^m` built from Min, Max,
/// constants, coordinate maps and the projection, under composition and
/// parallel product, of depth at most `depth`.
pub fn coherent_expr(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    depth: usize,
    p: &Projection,
) -> FuzzyExpr {
    grow(rng, n, m, depth, &mut |r, n, m| coherent_leaf(r, n, m, p))
}

/// `count` composable pairs `(f, g)` with `g ∘ f` defined, all arities in
/// `1..=4` and depth at most 3.
pub fn coherent_pairs(count: usize, seed: u64, p: &Projection) -> Vec<(FuzzyExpr, FuzzyExpr)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let (n, k, m) = (arity(&mut rng), arity(&mut rng), arity(&mut rng));
            let df = rng.gen_range(0..=MAX_DEPTH);
            let dg = rng.gen_range(0..=MAX_DEPTH);
            let f = coherent_expr(&mut rng, n, k, df, p);
            let g = coherent_expr(&mut rng, k, m, dg, p);
            (f, g)
        })
        .collect()
}

fn fuzzy_leaf(rng: &mut ChaCha8Rng, n: usize, m: usize, p: &Projection) -> FuzzyExpr {
    let binary = n == 2 && m == 1;
    match rng.gen_range(0..6) {
        0 | 1 if binary => {
            let ops = [
                FuzzyExpr::tconorm(TConorm::Lukasiewicz),
                FuzzyExpr::tconorm(TConorm::ProbSum),
                FuzzyExpr::tnorm(TNorm::Lukasiewicz),
                FuzzyExpr::tnorm(TNorm::Product),
            ];
            ops.choose(rng).expect("non-empty").clone()
        }
        2 => {
            let matrix = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let bias = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
            FuzzyExpr::affine(matrix, bias, true).expect("shapes match")
        }
        3 => {
            let op = *[Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge].choose(rng).expect("non-empty");
            let cut = f64::from(rng.gen_range(1..=99u8)) / 100.0;
            FuzzyExpr::piecewise(
                vec![Region {
                    when: vec![AxisCond::new(rng.gen_range(0..n), op, cut)],
                    expr: constant(rng, n, m),
                }],
                constant(rng, n, m),
            )
            .expect("branches share arities")
        }
        _ => coherent_leaf(rng, n, m, p),
    }
}

/// Expressions over at most three inputs and two outputs, each with at
/// least one component that is incoherent on a random sample.
pub fn incoherent_corpus(count: usize, seed: u64, p: &Projection) -> Result<Vec<FuzzyExpr>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probe = SamplingSpec::Random {
        count: 4096,
        seed: seed ^ 0xfeed,
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=2);
        let depth = rng.gen_range(0..=2);
        let e = grow(&mut rng, n, m, depth, &mut |r, n, m| fuzzy_leaf(r, n, m, p));
        if !check_coherence(&e, p, &probe)?.is_coherent() {
            out.push(e);
        }
    }
    Ok(out)
}

/// A coherent expression with the given arities, usable as an
/// output-modification fallback.
pub fn coherent_fallback(rng: &mut ChaCha8Rng, n: usize, m: usize, p: &Projection) -> FuzzyExpr {
    coherent_expr(rng, n, m, 2, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_compose_and_respect_limits() {
        let p = Projection::half();
        let pairs = coherent_pairs(100, 1, &p);
        for (f, g) in &pairs {
            assert!(f.depth() <= MAX_DEPTH && g.depth() <= MAX_DEPTH);
            assert!(f.in_arity() <= MAX_ARITY && g.out_arity() <= MAX_ARITY);
            assert!(FuzzyExpr::compose(g, f).is_ok());
        }
        assert_eq!(pairs, coherent_pairs(100, 1, &p));
    }

    #[test]
    fn fuzz_corpus_is_incoherent() {
        let p = Projection::half();
        let corpus = incoherent_corpus(10, 2, &p).unwrap();
        assert_eq!(corpus.len(), 10);
        for e in &corpus {
            let r = check_coherence(e, &p, &SamplingSpec::random(4096, 2 ^ 0xfeed).unwrap()).unwrap();
            assert!(!r.is_coherent());
        }
    }
}
