//! Repairs that turn an arbitrary fuzzy function into a coherent one, and the
//! explanation pipeline built on them.
//!
//! Incoherence is located per δ-class from a coherence sample. On a marked
//! class the repaired component reads a fresh input (domain extension) or a
//! coherent fallback (output modification). Elsewhere the original value is
//! kept, except at points the sample missed, which are pulled to the value
//! at the class representative. The result is coherent at every point, not
//! only on the sample.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coherence::{check_coherence, scan_coherence, SamplingSpec};
use crate::dnf::{default_name, table_to_dnf, DnfFormula};
use crate::error::{Error, Result};
use crate::expr::{FuzzyExpr, Node};
use crate::functor::{booleanize, counterexample_pair};
use crate::projection::Projection;

/// Points compared by [`extensionally_equal`].
pub const EQUALITY_SAMPLES: usize = 10_000;
pub const EQUALITY_SEED: u64 = 0x5eed;
const RAW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaKind {
    DomainExtension,
    /// `fallback` must be coherent and have the arities of the repaired function.
    OutputModification { fallback: FuzzyExpr },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSpec {
    pub kind: GammaKind,
    pub projection: Projection,
    pub coherence_sampling: SamplingSpec,
}

impl GammaSpec {
    pub fn domain_extension(projection: Projection, sampling: SamplingSpec) -> Self {
        GammaSpec {
            kind: GammaKind::DomainExtension,
            projection,
            coherence_sampling: sampling,
        }
    }

    pub fn output_modification(
        fallback: FuzzyExpr,
        projection: Projection,
        sampling: SamplingSpec,
    ) -> Self {
        GammaSpec {
            kind: GammaKind::OutputModification { fallback },
            projection,
            coherence_sampling: sampling,
        }
    }

    pub fn is_extension(&self) -> bool {
        matches!(self.kind, GammaKind::DomainExtension)
    }
}

/// Domain extension: one extra input per component with incoherent classes.
/// Returns `f` itself when the sample shows no incoherence.
pub fn gamma_extend(f: &FuzzyExpr, spec: &GammaSpec) -> Result<FuzzyExpr> {
    if !spec.is_extension() {
        return Err(Error::invalid("gamma_extend needs a domain-extension spec"));
    }
    let scan = scan_coherence(f, &spec.projection, &spec.coherence_sampling, 1)?;
    if scan.classes.is_empty() {
        return Ok(f.clone());
    }
    let extended = scan.classes.marked_components();
    FuzzyExpr::from_parts(
        f.in_arity() + extended.len(),
        f.out_arity(),
        Node::DomainExtension {
            base: Arc::new(f.clone()),
            projection: spec.projection,
            extended,
            incoherent: scan.classes,
        },
    )
}

/// Output modification: incoherent classes are served by the fallback.
/// Returns `f` itself when the sample shows no incoherence.
pub fn gamma_output_mod(f: &FuzzyExpr, spec: &GammaSpec) -> Result<FuzzyExpr> {
    let GammaKind::OutputModification { fallback } = &spec.kind else {
        return Err(Error::invalid("gamma_output_mod needs an output-modification spec"));
    };
    if fallback.in_arity() != f.in_arity() || fallback.out_arity() != f.out_arity() {
        return Err(Error::structure(format!(
            "fallback maps {} -> {}, function maps {} -> {}",
            fallback.in_arity(),
            fallback.out_arity(),
            f.in_arity(),
            f.out_arity()
        )));
    }
    let fb_report = check_coherence(fallback, &spec.projection, &spec.coherence_sampling)?;
    if !fb_report.is_coherent() {
        return Err(Error::Contract(format!(
            "fallback is not coherent (fraction {:.4})",
            fb_report.min_fraction()
        )));
    }
    let scan = scan_coherence(f, &spec.projection, &spec.coherence_sampling, 1)?;
    if scan.classes.is_empty() {
        return Ok(f.clone());
    }
    FuzzyExpr::from_parts(
        f.in_arity(),
        f.out_arity(),
        Node::OutputModification {
            base: Arc::new(f.clone()),
            fallback: Arc::new(fallback.clone()),
            projection: spec.projection,
            incoherent: scan.classes,
        },
    )
}

pub fn apply_gamma(f: &FuzzyExpr, spec: &GammaSpec) -> Result<FuzzyExpr> {
    match spec.kind {
        GammaKind::DomainExtension => gamma_extend(f, spec),
        GammaKind::OutputModification { .. } => gamma_output_mod(f, spec),
    }
}

/// An equivalence class of functions with the same repair, held by its
/// coherent canonical member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientMorphism {
    pub canonical: FuzzyExpr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<FuzzyExpr>,
    pub gamma: GammaSpec,
}

impl QuotientMorphism {
    /// The class of `f`.
    pub fn of(f: &FuzzyExpr, gamma: &GammaSpec) -> Result<Self> {
        Ok(QuotientMorphism {
            canonical: apply_gamma(f, gamma)?,
            origin: Some(f.clone()),
            gamma: gamma.clone(),
        })
    }

    pub fn identity(n: usize, gamma: &GammaSpec) -> Self {
        QuotientMorphism {
            canonical: FuzzyExpr::identity(n),
            origin: None,
            gamma: gamma.clone(),
        }
    }
}

/// `[g] ∘ [f] = [Γ(g) ∘ Γ(f)]`.
pub fn quotient_compose(gq: &QuotientMorphism, fq: &QuotientMorphism) -> Result<QuotientMorphism> {
    if gq.gamma.projection != fq.gamma.projection {
        return Err(Error::invalid(format!(
            "classes use different projections ({} and {})",
            gq.gamma.projection, fq.gamma.projection
        )));
    }
    Ok(QuotientMorphism {
        canonical: FuzzyExpr::compose(&gq.canonical, &fq.canonical)?,
        origin: None,
        gamma: gq.gamma.clone(),
    })
}

/// The canonical representative `Γ(f)` of a class.
pub fn functor_gamma(fq: &QuotientMorphism) -> FuzzyExpr {
    fq.canonical.clone()
}

/// Repairs `f`, booleanizes the repair and reads off a DNF. Extra inputs
/// added by domain extension are named `c1`, `c2`, …
pub fn explain(f: &FuzzyExpr, spec: &GammaSpec, simplify: bool) -> Result<DnfFormula> {
    if !spec.projection.is_boolean() {
        return Err(Error::invalid(format!(
            "explanations need a projection onto {{0,1}}, got {}",
            spec.projection
        )));
    }
    let repaired = apply_gamma(f, spec)?;
    let table = booleanize(&repaired, &spec.projection)?;
    let n = f.in_arity();
    let names = (0..repaired.in_arity())
        .map(|i| {
            if i < n {
                default_name(i)
            } else {
                format!("c{}", i - n + 1)
            }
        })
        .collect();
    table_to_dnf(&table, simplify)?.with_names(names)
}

/// Outcome of the search for a point where repair does not commute with
/// composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum NonCompositional {
    /// `lhs = Γ(g∘f)(a)` differs from `rhs = (Γ(g)∘Γ(f))(a)`, with `f`
    /// constantly `a`.
    Witness {
        f: FuzzyExpr,
        g: FuzzyExpr,
        point: Vec<f64>,
        lhs: Vec<f64>,
        rhs: Vec<f64>,
    },
    /// `Γ(g)` takes more inputs than `f` produces, so `Γ(g)∘Γ(f)` is undefined.
    ArityMismatch {
        gamma_g_in_arity: usize,
        f_out_arity: usize,
    },
    /// `g` is coherent on the sample, so `Γ` leaves everything unchanged.
    NotApplicable,
}

/// Runs the construction on the unary step function `g(x) = 0 if x ≤ 0 else 1`.
pub fn demo_noncompositional(spec: &GammaSpec) -> Result<NonCompositional> {
    let (_, g) = counterexample_pair();
    demo_noncompositional_with(&g, spec)
}

/// Finds the first sample point `a` where `Γ(g)(a) ≠ g(a)`, takes `f` to be
/// the constant `a` and evaluates both sides at `a`.
pub fn demo_noncompositional_with(g: &FuzzyExpr, spec: &GammaSpec) -> Result<NonCompositional> {
    if !matches!(spec.projection, Projection::Threshold { .. }) {
        return Err(Error::invalid("the demonstration needs a threshold projection"));
    }
    let gamma_g = apply_gamma(g, spec)?;
    if gamma_g == *g {
        return Ok(NonCompositional::NotApplicable);
    }
    if gamma_g.in_arity() != g.in_arity() {
        return Ok(NonCompositional::ArityMismatch {
            gamma_g_in_arity: gamma_g.in_arity(),
            f_out_arity: g.in_arity(),
        });
    }
    let points = spec.coherence_sampling.points(g.in_arity())?;
    let Some(a) = points
        .into_iter()
        .find(|a| gamma_g.eval_unchecked(a) != g.eval_unchecked(a))
    else {
        return Ok(NonCompositional::NotApplicable);
    };
    let f = FuzzyExpr::constant(g.in_arity(), a.clone())?;
    let lhs = apply_gamma(&FuzzyExpr::compose(g, &f)?, spec)?.eval(&a)?;
    let rhs = FuzzyExpr::compose(&gamma_g, &apply_gamma(&f, spec)?)?.eval(&a)?;
    if lhs == rhs {
        return Ok(NonCompositional::NotApplicable);
    }
    Ok(NonCompositional::Witness {
        f,
        g: g.clone(),
        point: a,
        lhs,
        rhs,
    })
}

/// First sampled point where two expressions disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct Disagreement {
    pub point: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Compares `a` and `b` on `samples` seeded uniform points: projected outputs
/// must match exactly and raw outputs within `1e-12`. This is a sampled
/// approximation of extensional equality.
pub fn compare_on_samples(
    a: &FuzzyExpr,
    b: &FuzzyExpr,
    projection: &Projection,
    samples: usize,
    seed: u64,
) -> Result<Option<Disagreement>> {
    if a.in_arity() != b.in_arity() || a.out_arity() != b.out_arity() {
        return Err(Error::structure(format!(
            "cannot compare {} -> {} with {} -> {}",
            a.in_arity(),
            a.out_arity(),
            b.in_arity(),
            b.out_arity()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x: Vec<f64> = (0..a.in_arity()).map(|_| rng.gen()).collect();
        let (ya, yb) = (a.eval_unchecked(&x), b.eval_unchecked(&x));
        let same = ya.iter().zip(&yb).all(|(u, v)| {
            projection.apply_scalar(*u) == projection.apply_scalar(*v)
                && (u - v).abs() <= RAW_TOLERANCE
        });
        if !same {
            return Ok(Some(Disagreement {
                point: x,
                left: ya,
                right: yb,
            }));
        }
    }
    Ok(None)
}

/// [`compare_on_samples`] with the default sample size and seed.
pub fn extensionally_equal(a: &FuzzyExpr, b: &FuzzyExpr, projection: &Projection) -> Result<bool> {
    Ok(compare_on_samples(a, b, projection, EQUALITY_SAMPLES, EQUALITY_SEED)?.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{TConorm, TNorm};

    fn grid() -> SamplingSpec {
        SamplingSpec::grid(101).unwrap()
    }

    fn luk_or() -> FuzzyExpr {
        FuzzyExpr::tconorm(TConorm::Lukasiewicz)
    }

    fn output_mod(fallback: FuzzyExpr) -> GammaSpec {
        GammaSpec::output_modification(fallback, Projection::half(), grid())
    }

    #[test]
    fn extension_adds_one_input_and_reads_it_on_the_triangle() {
        let spec = GammaSpec::domain_extension(Projection::half(), grid());
        let ext = gamma_extend(&luk_or(), &spec).unwrap();
        assert_eq!(ext.in_arity(), 3);
        for c in [0.0, 0.3, 0.9] {
            assert_eq!(ext.eval(&[0.2, 0.4, c]).unwrap(), vec![c]);
            assert_eq!(ext.eval(&[0.2, 0.2, c]).unwrap(), vec![c]);
        }
        assert_eq!(ext.eval(&[0.7, 0.2, 0.0]).unwrap(), luk_or().eval(&[0.7, 0.2]).unwrap());
        assert!(check_coherence(&ext, &Projection::half(), &SamplingSpec::random(20_000, 3).unwrap())
            .unwrap()
            .is_coherent());
    }

    #[test]
    fn coherent_functions_are_fixed() {
        let min = FuzzyExpr::tnorm(TNorm::Min);
        let spec = GammaSpec::domain_extension(Projection::half(), grid());
        assert_eq!(gamma_extend(&min, &spec).unwrap(), min);
        let om = output_mod(FuzzyExpr::tconorm(TConorm::Max));
        assert_eq!(gamma_output_mod(&min, &om).unwrap(), min);
    }

    #[test]
    fn extension_touches_only_incoherent_components() {
        let f = FuzzyExpr::parallel(vec![FuzzyExpr::tnorm(TNorm::Min), luk_or()]).unwrap();
        let spec = GammaSpec::domain_extension(Projection::half(), SamplingSpec::random(50_000, 1).unwrap());
        let ext = gamma_extend(&f, &spec).unwrap();
        assert_eq!(ext.in_arity(), 5);
        let y = ext.eval(&[0.3, 0.8, 0.2, 0.4, 0.77]).unwrap();
        assert_eq!(y, vec![0.3, 0.77]);
    }

    #[test]
    fn output_modification_with_max() {
        let om = output_mod(FuzzyExpr::tconorm(TConorm::Max));
        let r = gamma_output_mod(&luk_or(), &om).unwrap();
        assert_eq!(r.eval(&[0.2, 0.4]).unwrap(), vec![0.4]);
        assert_eq!(r.eval(&[0.2, 0.2]).unwrap(), vec![0.2]);
        assert_eq!(r.eval(&[0.6, 0.3]).unwrap(), vec![0.8999999999999999]);
    }

    #[test]
    fn output_modification_with_zero_clears_the_triangle() {
        let om = output_mod(FuzzyExpr::constant(2, vec![0.0]).unwrap());
        let r = gamma_output_mod(&luk_or(), &om).unwrap();
        for (x, y) in [(0.25, 0.25), (0.4999, 0.0001), (0.1, 0.45), (0.49, 0.49)] {
            assert_eq!(r.eval(&[x, y]).unwrap(), vec![0.0]);
        }
        // Edge points with a coordinate at 0.5 are coherent and keep their value.
        assert_eq!(r.eval(&[0.5, 0.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn output_modification_contracts() {
        let bad = output_mod(luk_or());
        assert!(matches!(gamma_output_mod(&luk_or(), &bad), Err(Error::Contract(_))));
        let wrong = output_mod(FuzzyExpr::constant(1, vec![0.0]).unwrap());
        assert!(matches!(gamma_output_mod(&luk_or(), &wrong), Err(Error::Structure(_))));
        let ext = GammaSpec::domain_extension(Projection::half(), grid());
        assert!(gamma_output_mod(&luk_or(), &ext).is_err());
    }

    #[test]
    fn explanations() {
        let om = output_mod(FuzzyExpr::tconorm(TConorm::Max));
        assert_eq!(explain(&luk_or(), &om, true).unwrap().to_string(), "x ∨ y");
        let min = FuzzyExpr::tnorm(TNorm::Min);
        assert_eq!(explain(&min, &om, true).unwrap().to_string(), "x ∧ y");

        let ext = GammaSpec::domain_extension(Projection::half(), grid());
        let f = explain(&luk_or(), &ext, true).unwrap();
        assert_eq!(f.n_inputs(), 3);
        for v in [[false, false], [false, true], [true, false], [true, true]] {
            assert_eq!(f.eval(&[v[0], v[1], false]).unwrap(), vec![v[0] || v[1]]);
        }
    }

    #[test]
    fn demo_with_constant_one() {
        let spec = output_mod(FuzzyExpr::constant(1, vec![1.0]).unwrap());
        match demo_noncompositional(&spec).unwrap() {
            NonCompositional::Witness { point, lhs, rhs, g, .. } => {
                assert_eq!(lhs, g.eval(&point).unwrap());
                assert_eq!(rhs, vec![1.0]);
                assert_eq!(Projection::half().apply(&lhs), vec![0.0]);
            }
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn demo_other_branches() {
        let ext = GammaSpec::domain_extension(Projection::half(), grid());
        assert_eq!(
            demo_noncompositional(&ext).unwrap(),
            NonCompositional::ArityMismatch {
                gamma_g_in_arity: 2,
                f_out_arity: 1
            }
        );
        let spec = output_mod(FuzzyExpr::constant(1, vec![1.0]).unwrap());
        let coherent = FuzzyExpr::projection(Projection::half(), 1).unwrap();
        assert_eq!(
            demo_noncompositional_with(&coherent, &spec).unwrap(),
            NonCompositional::NotApplicable
        );
    }

    #[test]
    fn sampled_equality() {
        let p = Projection::half();
        let a = FuzzyExpr::tnorm(TNorm::Min);
        assert!(extensionally_equal(&a, &a.clone(), &p).unwrap());
        assert!(!extensionally_equal(&a, &FuzzyExpr::tnorm(TNorm::Product), &p).unwrap());
        assert!(extensionally_equal(&a, &luk_or(), &p).is_ok());
        assert!(extensionally_equal(&a, &FuzzyExpr::identity(2), &p).is_err());
    }
}
