//! Exact-arithmetic dyadic stopping families on the unit interval and the
//! exponential tail bound they imply.
//!
//! All set measures are counts of finest cells over a power-of-two
//! denominator, kept as exact rationals; no floating point enters a
//! measure comparison. Values and comparison constants stay `f64`.

use num_rational::Ratio;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Exact set measure: finest-cell count over `2^depth`.
pub type Measure = Ratio<u64>;

/// Render an exact measure as `numerator/denominator`.
pub fn fraction_string(m: Measure) -> String {
    format!("{}/{}", m.numer(), m.denom())
}

const MAX_DEPTH: u32 = 20;

/// A function constant on the finest dyadic cells of `[0, 1]`, together
/// with one comparison constant per dyadic interval of every generation.
/// Constants default to exact cell averages.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicFunction {
    depth: u32,
    values: Vec<f64>,
    constants: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DyadicFunctionData {
    depth: u32,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Vec<Vec<f64>>>,
}

impl DyadicFunction {
    /// Build from finest-cell values; comparison constants are the exact
    /// interval averages (computed pairwise, so dyadic inputs stay exact).
    pub fn new(depth: u32, values: Vec<f64>) -> Result<Self> {
        Self::validate_shape(depth, &values)?;
        let mut levels: Vec<Vec<f64>> = Vec::with_capacity(depth as usize + 1);
        levels.push(values.clone());
        for _ in 0..depth {
            let prev = levels.last().unwrap();
            let next: Vec<f64> = prev
                .chunks_exact(2)
                .map(|pair| (pair[0] + pair[1]) / 2.0)
                .collect();
            levels.push(next);
        }
        levels.reverse();
        Ok(DyadicFunction {
            depth,
            values,
            constants: levels,
        })
    }

    /// Build with caller-supplied comparison constants, one vector per
    /// generation `0..=depth` with `2^d` entries each.
    pub fn with_constants(depth: u32, values: Vec<f64>, constants: Vec<Vec<f64>>) -> Result<Self> {
        Self::validate_shape(depth, &values)?;
        if constants.len() != depth as usize + 1 {
            return Err(LabError::invalid_parameter(
                "constants",
                format!("expected {} generations, got {}", depth + 1, constants.len()),
            ));
        }
        for (d, level) in constants.iter().enumerate() {
            if level.len() != 1usize << d {
                return Err(LabError::invalid_parameter(
                    "constants",
                    format!("generation {} must have {} entries", d, 1usize << d),
                ));
            }
            if level.iter().any(|v| !v.is_finite()) {
                return Err(LabError::invalid_parameter(
                    "constants",
                    "comparison constants must be finite",
                ));
            }
        }
        Ok(DyadicFunction {
            depth,
            values,
            constants,
        })
    }

    fn validate_shape(depth: u32, values: &[f64]) -> Result<()> {
        if depth > MAX_DEPTH {
            return Err(LabError::invalid_parameter(
                "depth",
                format!("depth {depth} exceeds the cell budget ({MAX_DEPTH})"),
            ));
        }
        if values.len() != 1usize << depth {
            return Err(LabError::invalid_parameter(
                "values",
                format!("expected {} cells, got {}", 1usize << depth, values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::invalid_parameter(
                "values",
                "cell values must be finite",
            ));
        }
        Ok(())
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Comparison constant of dyadic interval `(generation, index)`.
    pub fn constant(&self, generation: u32, index: u64) -> f64 {
        self.constants[generation as usize][index as usize]
    }

    /// Cells with `|f - reference| > lambda` inside interval
    /// `(generation, index)`, as an exact count.
    pub fn exceed_count(&self, generation: u32, index: u64, reference: f64, lambda: f64) -> u64 {
        let width = 1usize << (self.depth - generation);
        let start = index as usize * width;
        self.values[start..start + width]
            .iter()
            .filter(|&&v| (v - reference).abs() > lambda)
            .count() as u64
    }

    /// Exact measure of `{x in (generation, index): |f - reference| > lambda}`
    /// relative to the whole unit interval.
    pub fn exceed_measure(
        &self,
        generation: u32,
        index: u64,
        reference: f64,
        lambda: f64,
    ) -> Measure {
        Ratio::new(
            self.exceed_count(generation, index, reference, lambda),
            1u64 << self.depth,
        )
    }

    pub fn to_json(&self) -> String {
        let data = DyadicFunctionData {
            depth: self.depth,
            values: self.values.clone(),
            a: Some(self.constants.clone()),
        };
        serde_json::to_string_pretty(&data).expect("dyadic function serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: DyadicFunctionData =
            serde_json::from_str(text).map_err(|e| LabError::ConfigParse(e.to_string()))?;
        match data.a {
            Some(a) => Self::with_constants(data.depth, data.values, a),
            None => Self::new(data.depth, data.values),
        }
    }
}

/// Random dyadic martingale: every interval splits into children at
/// `parent ± increment`, with the sign orientation drawn per interval from
/// a seeded stream. Sibling increments cancel, so interval averages equal
/// the martingale values and stay exact for dyadic increments.
pub fn synth_martingale(depth: u32, increment: f64, seed: u64) -> Result<DyadicFunction> {
    if depth > MAX_DEPTH {
        return Err(LabError::invalid_parameter(
            "depth",
            format!("depth {depth} exceeds the cell budget ({MAX_DEPTH})"),
        ));
    }
    if !(increment.is_finite() && increment >= 0.0) {
        return Err(LabError::invalid_parameter(
            "increment",
            "increment must be finite and nonnegative",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = vec![0.0f64];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &v in &level {
            let flip: bool = rng.gen();
            let s = if flip { increment } else { -increment };
            next.push(v + s);
            next.push(v - s);
        }
        level = next;
    }
    DyadicFunction::new(depth, level)
}

/// Result of the per-interval smallness check: for every dyadic interval,
/// the exceed set at level `lambda` against the interval's own constant
/// must occupy less than `c` of the interval.
#[derive(Clone, Debug)]
pub struct HypothesisReport {
    pub holds: bool,
    pub c: Measure,
    pub worst_ratio: Measure,
    pub worst_generation: u32,
    pub worst_index: u64,
}

pub fn check_hypothesis(df: &DyadicFunction, lambda: f64, c: Measure) -> Result<HypothesisReport> {
    validate_lambda(lambda)?;
    if !(c > Measure::zero() && c < Ratio::new(1, 2)) {
        return Err(LabError::invalid_parameter(
            "c",
            "smallness constant must lie strictly between 0 and 1/2",
        ));
    }
    let mut worst = (Measure::zero(), 0u32, 0u64);
    for d in 0..=df.depth() {
        let cells = 1u64 << (df.depth() - d);
        for j in 0..(1u64 << d) {
            let exceed = df.exceed_count(d, j, df.constant(d, j), lambda);
            let ratio = Ratio::new(exceed, cells);
            if ratio > worst.0 {
                worst = (ratio, d, j);
            }
        }
    }
    Ok(HypothesisReport {
        holds: worst.0 < c,
        c,
        worst_ratio: worst.0,
        worst_generation: worst.1,
        worst_index: worst.2,
    })
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(LabError::invalid_parameter(
            "lambda",
            "level must be positive and finite",
        ));
    }
    Ok(())
}

/// One interval selected by the stopping rule, with the comparison
/// constant of the step it was selected under.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelectedCube {
    pub generation: u32,
    pub index: u64,
    pub reference: f64,
}

/// Stopping families, one list of pairwise-disjoint intervals per step.
#[derive(Clone, Debug)]
pub struct StoppingFamilies {
    pub lambda: f64,
    pub steps: Vec<Vec<SelectedCube>>,
}

impl StoppingFamilies {
    /// Exact total measure of one step's intervals.
    pub fn step_mass(&self, depth: u32, step: usize) -> Measure {
        let total: u64 = self.steps[step]
            .iter()
            .map(|s| 1u64 << (depth - s.generation))
            .sum();
        Ratio::new(total, 1u64 << depth)
    }
}

/// Build stopping families for `steps` iterations. Each step selects the
/// maximal dyadic intervals whose exceed set against the current
/// reference constant fills at least a third of the interval; the next
/// step recurses inside each selected interval with that interval's own
/// constant as the new reference.
///
/// The smallness hypothesis is enforced lazily, exactly where the
/// argument needs it: every reference interval must keep its own exceed
/// ratio below 1/4. A reference that violates this aborts the build.
pub fn build_families(df: &DyadicFunction, lambda: f64, steps: usize) -> Result<StoppingFamilies> {
    validate_lambda(lambda)?;
    if steps == 0 || steps > MAX_DEPTH as usize {
        return Err(LabError::invalid_parameter(
            "steps",
            format!("step count must lie in 1..={MAX_DEPTH}"),
        ));
    }
    let mut families = Vec::with_capacity(steps);
    // (generation, index) of each reference interval for the current step.
    let mut references: Vec<(u32, u64)> = vec![(0, 0)];
    for _ in 0..steps {
        let mut selected: Vec<SelectedCube> = Vec::new();
        for &(pd, pj) in &references {
            let reference = df.constant(pd, pj);
            let own_cells = 1u64 << (df.depth() - pd);
            let own_exceed = df.exceed_count(pd, pj, reference, lambda);
            if 4 * own_exceed >= own_cells {
                return Err(LabError::Precondition(format!(
                    "smallness hypothesis fails at interval ({pd}, {pj}): \
                     exceed ratio {}/{} is not below 1/4",
                    own_exceed, own_cells
                )));
            }
            // Depth-first search for maximal intervals; a selected
            // interval's subtree is never searched further.
            let mut stack = vec![(pd, pj)];
            while let Some((d, j)) = stack.pop() {
                let cells = 1u64 << (df.depth() - d);
                let exceed = df.exceed_count(d, j, reference, lambda);
                if 3 * exceed >= cells {
                    selected.push(SelectedCube {
                        generation: d,
                        index: j,
                        reference,
                    });
                    continue;
                }
                if d < df.depth() {
                    stack.push((d + 1, 2 * j + 1));
                    stack.push((d + 1, 2 * j));
                }
            }
        }
        selected.sort_by_key(|s| (s.generation, s.index));
        references = selected.iter().map(|s| (s.generation, s.index)).collect();
        families.push(selected);
    }
    Ok(StoppingFamilies {
        lambda,
        steps: families,
    })
}

/// A single property failure with its witness interval.
#[derive(Clone, Debug, Serialize)]
pub struct PropertyWitness {
    pub property: String,
    pub generation: u32,
    pub index: u64,
    pub detail: String,
}

/// Exact verification of the structural properties of built families.
#[derive(Clone, Debug)]
pub struct PropertyReport {
    /// (i) the root interval is never selected in the first step.
    pub root_excluded: bool,
    /// (ii) each selected interval's exceed ratio lies in [1/3, 2/3).
    pub exceed_band: bool,
    /// (iii) cells outside the first step satisfy |f - a| <= lambda, and
    /// cells outside step m satisfy |f - a| <= (2m+1) lambda.
    pub outside_bounded: bool,
    /// (iv) step m total measure is at most (3/4)^(m+1).
    pub mass_bound: bool,
    /// Intervals within one step are pairwise disjoint.
    pub disjoint: bool,
    /// Every interval of step m+1 lies strictly inside one of step m.
    pub nested: bool,
    /// |reference - own constant| <= 2 lambda for every selected interval.
    pub constants_close: bool,
    pub failures: Vec<PropertyWitness>,
}

impl PropertyReport {
    pub fn all_hold(&self) -> bool {
        self.root_excluded
            && self.exceed_band
            && self.outside_bounded
            && self.mass_bound
            && self.disjoint
            && self.nested
            && self.constants_close
    }
}

fn contains(outer: (u32, u64), inner: (u32, u64)) -> bool {
    inner.0 >= outer.0 && (inner.1 >> (inner.0 - outer.0)) == outer.1
}

pub fn verify_properties(
    families: &StoppingFamilies,
    df: &DyadicFunction,
) -> Result<PropertyReport> {
    let lambda = families.lambda;
    validate_lambda(lambda)?;
    let depth = df.depth();
    let mut failures = Vec::new();
    let mut fail = |property: &str, generation: u32, index: u64, detail: String| {
        failures.push(PropertyWitness {
            property: property.to_string(),
            generation,
            index,
            detail,
        });
    };

    let root_excluded = families
        .steps
        .first()
        .map(|s| !s.iter().any(|c| c.generation == 0))
        .unwrap_or(true);
    if !root_excluded {
        fail("root_excluded", 0, 0, "root selected in step 1".into());
    }

    let mut exceed_band = true;
    let mut constants_close = true;
    for step in &families.steps {
        for cube in step {
            let cells = 1u64 << (depth - cube.generation);
            let exceed = df.exceed_count(cube.generation, cube.index, cube.reference, lambda);
            if !(3 * exceed >= cells && 3 * exceed < 2 * cells) {
                exceed_band = false;
                fail(
                    "exceed_band",
                    cube.generation,
                    cube.index,
                    format!("exceed ratio {exceed}/{cells} outside [1/3, 2/3)"),
                );
            }
            let own = df.constant(cube.generation, cube.index);
            if (cube.reference - own).abs() > 2.0 * lambda + 1e-12 * lambda {
                constants_close = false;
                fail(
                    "constants_close",
                    cube.generation,
                    cube.index,
                    format!(
                        "|reference - constant| = {} exceeds 2 lambda",
                        (cube.reference - own).abs()
                    ),
                );
            }
        }
    }

    let mut disjoint = true;
    for step in &families.steps {
        for (i, a) in step.iter().enumerate() {
            for b in &step[i + 1..] {
                let pa = (a.generation, a.index);
                let pb = (b.generation, b.index);
                if contains(pa, pb) || contains(pb, pa) {
                    disjoint = false;
                    fail(
                        "disjoint",
                        b.generation,
                        b.index,
                        format!("overlaps ({}, {})", a.generation, a.index),
                    );
                }
            }
        }
    }

    let mut nested = true;
    for m in 1..families.steps.len() {
        for cube in &families.steps[m] {
            let inside = families.steps[m - 1].iter().any(|p| {
                contains((p.generation, p.index), (cube.generation, cube.index))
                    && (p.generation, p.index) != (cube.generation, cube.index)
            });
            if !inside {
                nested = false;
                fail(
                    "nested",
                    cube.generation,
                    cube.index,
                    format!("not strictly inside any step-{m} interval"),
                );
            }
        }
    }

    let mut mass_bound = true;
    for m in 0..families.steps.len() {
        let mass = families.step_mass(depth, m);
        let bound = Ratio::new(3u64.pow(m as u32 + 1), 4u64.pow(m as u32 + 1));
        if mass > bound {
            mass_bound = false;
            fail(
                "mass_bound",
                0,
                0,
                format!(
                    "step {} mass {} exceeds {}",
                    m + 1,
                    fraction_string(mass),
                    fraction_string(bound)
                ),
            );
        }
    }

    let root_constant = df.constant(0, 0);
    let mut outside_bounded = true;
    for m in 0..families.steps.len() {
        let level = (2.0 * (m as f64 + 1.0) + 1.0) * lambda;
        let level = if m == 0 { lambda } else { level };
        for cell in 0..df.cells() as u64 {
            let covered = families.steps[m]
                .iter()
                .any(|c| contains((c.generation, c.index), (depth, cell)));
            if covered {
                continue;
            }
            let v = df.values()[cell as usize];
            if (v - root_constant).abs() > level * (1.0 + 1e-12) {
                outside_bounded = false;
                fail(
                    "outside_bounded",
                    depth,
                    cell,
                    format!(
                        "|f - a| = {} outside step {} exceeds {}",
                        (v - root_constant).abs(),
                        m + 1,
                        level
                    ),
                );
                break;
            }
        }
    }

    Ok(PropertyReport {
        root_excluded,
        exceed_band,
        outside_bounded,
        mass_bound,
        disjoint,
        nested,
        constants_close,
        failures,
    })
}

/// One row of the tail table: the exact tail measure at level
/// `3 m lambda`, the exact mass of the m-th stopping family, the exact
/// geometric bound, and its exponential form.
#[derive(Clone, Debug)]
pub struct DecayRow {
    pub m: u32,
    pub threshold: f64,
    pub tail: Measure,
    pub family_mass: Measure,
    pub bound: Measure,
    pub exp_bound: f64,
    pub identity_rel_err: f64,
}

#[derive(Clone, Debug)]
pub struct DecayReport {
    pub lambda: f64,
    /// Decay rate of the exponential form: ln(4/3) / (3 lambda).
    pub c2: f64,
    pub rows: Vec<DecayRow>,
    pub holds: bool,
}

/// Exact tail table for `m = 1..=steps`: builds the stopping families and
/// checks both the measured tail and the family mass against `(3/4)^m`,
/// plus the algebraic identity `(3/4)^m = exp(-c2 * 3 m lambda)`.
pub fn decay_check(df: &DyadicFunction, lambda: f64, steps: usize) -> Result<DecayReport> {
    validate_lambda(lambda)?;
    let families = build_families(df, lambda, steps)?;
    let c2 = (4.0f64 / 3.0).ln() / (3.0 * lambda);
    let root_constant = df.constant(0, 0);
    let mut rows = Vec::with_capacity(steps);
    let mut holds = true;
    for m in 1..=steps as u32 {
        let threshold = 3.0 * m as f64 * lambda;
        let tail = df.exceed_measure(0, 0, root_constant, threshold);
        let family_mass = families.step_mass(df.depth(), m as usize - 1);
        let bound = Ratio::new(3u64.pow(m), 4u64.pow(m));
        let exp_bound = (-c2 * threshold).exp();
        let bound_f = *bound.numer() as f64 / *bound.denom() as f64;
        let identity_rel_err = (bound_f - exp_bound).abs() / bound_f;
        if tail > bound || family_mass > bound {
            holds = false;
        }
        rows.push(DecayRow {
            m,
            threshold,
            tail,
            family_mass,
            bound,
            exp_bound,
            identity_rel_err,
        });
    }
    Ok(DecayReport {
        lambda,
        c2,
        rows,
        holds,
    })
}
