//! Pointwise δ-coherence and sampled estimates of δ-COH(f).
//!
//! `f` is δ-coherent on `x` when `δ(f(x)) = δ(f(δ(x)))`. Over the continuum this
//! is only checkable on a sample, so a [`CoherenceReport`] is a claim about the
//! recorded [`SamplingSpec`], never a proof.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{check_unit, FuzzyExpr};
use crate::projection::Projection;

pub const DEFAULT_WITNESS_CAP: usize = 100;

/// Upper bound on the number of points a single check may evaluate.
pub const MAX_SAMPLE_POINTS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplingSpec {
    /// Uniform grid with both endpoints on every axis.
    Grid { points_per_axis: usize },
    /// Uniform draws from a ChaCha8 stream seeded with `seed`.
    Random { count: usize, seed: u64 },
}

impl SamplingSpec {
    pub fn grid(points_per_axis: usize) -> Result<Self> {
        let s = SamplingSpec::Grid { points_per_axis };
        s.validate()?;
        Ok(s)
    }

    pub fn random(count: usize, seed: u64) -> Result<Self> {
        let s = SamplingSpec::Random { count, seed };
        s.validate()?;
        Ok(s)
    }

    /// 101 points per axis up to two inputs, otherwise 10^5 random points.
    pub fn default_for(in_arity: usize) -> Self {
        if in_arity <= 2 {
            SamplingSpec::Grid {
                points_per_axis: 101,
            }
        } else {
            SamplingSpec::Random {
                count: 100_000,
                seed: 0,
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplingSpec::Grid { points_per_axis } if points_per_axis < 2 => Err(Error::invalid(
                "grid sampling needs at least 2 points per axis",
            )),
            SamplingSpec::Random { count: 0, .. } => {
                Err(Error::invalid("random sampling needs at least one point"))
            }
            _ => Ok(()),
        }
    }

    /// Number of points drawn in dimension `n`.
    pub fn len(&self, n: usize) -> Option<usize> {
        match *self {
            SamplingSpec::Grid { points_per_axis } => {
                points_per_axis.checked_pow(u32::try_from(n).ok()?)
            }
            SamplingSpec::Random { count, .. } => Some(count),
        }
    }

    /// Materializes the sample in a fixed order.
    pub fn points(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let total = self
            .len(n)
            .filter(|&t| t <= MAX_SAMPLE_POINTS)
            .ok_or_else(|| {
                Error::Capacity(format!(
                    "{self:?} in dimension {n} exceeds {MAX_SAMPLE_POINTS} points"
                ))
            })?;
        Ok(match *self {
            SamplingSpec::Grid { points_per_axis } => {
                let steps = (points_per_axis - 1) as f64;
                (0..total)
                    .map(|mut idx| {
                        let mut p = vec![0.0; n];
                        for axis in (0..n).rev() {
                            p[axis] = (idx % points_per_axis) as f64 / steps;
                            idx /= points_per_axis;
                        }
                        p
                    })
                    .collect()
            }
            SamplingSpec::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
                    .collect()
            }
        })
    }
}

/// A sampled point where `δ(f_i(x)) ≠ δ(f_i(δ(x)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Position of the point in the sample order.
    pub index: usize,
    pub point: Vec<f64>,
    /// `f_i(x)`
    pub output: f64,
    /// `δ(f_i(x))`
    pub projected: f64,
    /// `δ(f_i(δ(x)))`
    pub projected_at_projection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCoherence {
    pub component: usize,
    pub coherent_count: usize,
    pub coherent_fraction: f64,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CoherentOnSample,
    IncoherentWithWitnesses,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub projection: Projection,
    pub sampling: SamplingSpec,
    pub sample_count: usize,
    pub per_component: Vec<ComponentCoherence>,
    pub verdict: Verdict,
}

impl CoherenceReport {
    pub fn is_coherent(&self) -> bool {
        self.verdict == Verdict::CoherentOnSample
    }

    /// Smallest per-component coherent fraction.
    pub fn min_fraction(&self) -> f64 {
        self.per_component
            .iter()
            .map(|c| c.coherent_fraction)
            .fold(1.0, f64::min)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Output components whose sampled coherent fraction is below 1, ascending.
pub fn incoherent_components(report: &CoherenceReport) -> Vec<usize> {
    report
        .per_component
        .iter()
        .filter(|c| c.coherent_fraction < 1.0)
        .map(|c| c.component)
        .collect()
}

/// δ-classes (points with equal projection) on which a component was seen
/// to be incoherent. Each class is keyed by the image level of every input.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IncoherentClasses {
    components: Vec<BTreeSet<Vec<u64>>>,
}

impl IncoherentClasses {
    pub fn empty(out_arity: usize) -> Self {
        IncoherentClasses {
            components: vec![BTreeSet::new(); out_arity],
        }
    }

    pub fn contains(&self, component: usize, class: &[u64]) -> bool {
        self.components
            .get(component)
            .is_some_and(|s| s.contains(class))
    }

    pub fn insert(&mut self, component: usize, class: Vec<u64>) {
        self.components[component].insert(class);
    }

    pub fn classes(&self, component: usize) -> impl Iterator<Item = &[u64]> {
        self.components[component].iter().map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.components.iter().all(BTreeSet::is_empty)
    }

    /// Components with at least one incoherent class.
    pub fn marked_components(&self) -> Vec<usize> {
        (0..self.components.len())
            .filter(|&i| !self.components[i].is_empty())
            .collect()
    }

    pub(crate) fn validate(&self, out_arity: usize, in_arity: usize) -> Result<()> {
        if self.components.len() != out_arity {
            return Err(Error::structure(format!(
                "class table covers {} components, expected {out_arity}",
                self.components.len()
            )));
        }
        if self.components.iter().flatten().any(|k| k.len() != in_arity) {
            return Err(Error::structure(format!(
                "class keys must have length {in_arity}"
            )));
        }
        Ok(())
    }
}

/// The δ-class key of `x`.
pub fn class_of(projection: &Projection, x: &[f64]) -> Vec<u64> {
    x.iter().map(|&v| projection.level_of(v)).collect()
}

/// Tests `δ(f_i(x)) = δ(f_i(δ(x)))` with exact comparison of projected values.
pub fn is_coherent_at(
    f: &FuzzyExpr,
    projection: &Projection,
    x: &[f64],
    component: usize,
) -> Result<bool> {
    if component >= f.out_arity() {
        return Err(Error::structure(format!(
            "component {component} out of range for output arity {}",
            f.out_arity()
        )));
    }
    let y = f.eval(x)?;
    let yd = f.eval_unchecked(&projection.apply(x));
    Ok(projection.apply_scalar(y[component]) == projection.apply_scalar(yd[component]))
}

/// Result of one pass over a sample: the report and the δ-classes that
/// contain incoherent sample points.
#[derive(Debug, Clone)]
pub struct CoherenceScan {
    pub report: CoherenceReport,
    pub classes: IncoherentClasses,
}

pub fn check_coherence(
    f: &FuzzyExpr,
    projection: &Projection,
    sampling: &SamplingSpec,
) -> Result<CoherenceReport> {
    Ok(scan_coherence(f, projection, sampling, DEFAULT_WITNESS_CAP)?.report)
}

/// Evaluates `f` on every sample point (in parallel), then aggregates in
/// sample order so the result does not depend on scheduling.
pub fn scan_coherence(
    f: &FuzzyExpr,
    projection: &Projection,
    sampling: &SamplingSpec,
    witness_cap: usize,
) -> Result<CoherenceScan> {
    let points = sampling.points(f.in_arity())?;
    scan_points(f, projection, &points, *sampling, witness_cap)
}

/// Same as [`scan_coherence`] over an explicit point set.
pub fn scan_points(
    f: &FuzzyExpr,
    projection: &Projection,
    points: &[Vec<f64>],
    sampling: SamplingSpec,
    witness_cap: usize,
) -> Result<CoherenceScan> {
    let m = f.out_arity();
    for p in points {
        if p.len() != f.in_arity() {
            return Err(Error::structure(format!(
                "sample point has {} components, expected {}",
                p.len(),
                f.in_arity()
            )));
        }
        check_unit(p)?;
    }
    let outcomes: Vec<(Vec<f64>, Vec<f64>)> = points
        .par_iter()
        .map(|x| {
            let y = f.eval_unchecked(x);
            let yd = f.eval_unchecked(&projection.apply(x));
            (y, yd)
        })
        .collect();

    let mut classes = IncoherentClasses::empty(m);
    let mut incoherent: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (idx, (y, yd)) in outcomes.iter().enumerate() {
        for i in 0..m {
            if projection.apply_scalar(y[i]) != projection.apply_scalar(yd[i]) {
                incoherent[i].push(idx);
                classes.insert(i, class_of(projection, &points[idx]));
            }
        }
    }

    let total = points.len();
    let per_component: Vec<ComponentCoherence> = incoherent
        .iter()
        .enumerate()
        .map(|(i, bad)| {
            let chosen = choose_witnesses(bad, witness_cap, sampling, i);
            let witnesses = chosen
                .into_iter()
                .map(|idx| {
                    let (y, yd) = &outcomes[idx];
                    Witness {
                        index: idx,
                        point: points[idx].clone(),
                        output: y[i],
                        projected: projection.apply_scalar(y[i]),
                        projected_at_projection: projection.apply_scalar(yd[i]),
                    }
                })
                .collect();
            let coherent_count = total - bad.len();
            ComponentCoherence {
                component: i,
                coherent_count,
                coherent_fraction: if total == 0 {
                    1.0
                } else {
                    coherent_count as f64 / total as f64
                },
                witnesses,
            }
        })
        .collect();

    let verdict = if per_component.iter().any(|c| !c.witnesses.is_empty())
        || incoherent.iter().any(|b| !b.is_empty())
    {
        Verdict::IncoherentWithWitnesses
    } else {
        Verdict::CoherentOnSample
    };
    Ok(CoherenceScan {
        report: CoherenceReport {
            projection: *projection,
            sampling,
            sample_count: total,
            per_component,
            verdict,
        },
        classes,
    })
}

/// Grid samples keep the first `cap` witnesses; random samples keep a
/// uniform reservoir, seeded from the sampling seed. Returned ascending.
fn choose_witnesses(
    bad: &[usize],
    cap: usize,
    sampling: SamplingSpec,
    component: usize,
) -> Vec<usize> {
    // A zero cap would hide incoherence from the verdict.
    let cap = cap.max(1);
    if bad.len() <= cap {
        return bad.to_vec();
    }
    match sampling {
        SamplingSpec::Grid { .. } => bad[..cap].to_vec(),
        SamplingSpec::Random { seed, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15 ^ component as u64);
            let mut reservoir = bad[..cap].to_vec();
            for (k, &idx) in bad.iter().enumerate().skip(cap) {
                let j = rng.gen_range(0..=k);
                if j < cap {
                    reservoir[j] = idx;
                }
            }
            reservoir.sort_unstable();
            reservoir
        }
    }
}
