//! Seeded random instances.
//!
//! Costs and values are drawn from finite rational grids so that every generated
//! instance is exact and reproducible from its seed alone.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::equilibrium::perturb_distinct_ratios;
use crate::matroid::{Matroid, MatroidError};
use crate::model::{Instance, ModelError};
use crate::scalar::Scalar;

/// Grid points per unit interval used for costs and values.
const RESOLUTION: i64 = 1000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error("no instance meeting the requirements after {0} attempts")]
    Exhausted(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Matroid(#[from] MatroidError),
}

/// The matroid family to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilySpec {
    Free,
    /// Any `k` modules.
    Uniform {
        k: usize,
    },
    /// Modules assigned uniformly to `blocks` blocks, each holding at most `cap`.
    Partition {
        blocks: usize,
        cap: usize,
    },
    /// Random edges (parallel edges allowed, no loops) on `vertices` vertices.
    Graphic {
        vertices: usize,
    },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Free => "free",
            FamilySpec::Uniform { .. } => "uniform",
            FamilySpec::Partition { .. } => "partition",
            FamilySpec::Graphic { .. } => "graphic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub n: usize,
    /// Largest cost as a fraction of the budget.
    pub lambda: Scalar,
    /// Smallest cost.
    pub min_cost: Scalar,
    pub budget: Scalar,
    /// Inclusive value range; ignored with `unit_values`.
    pub values: (Scalar, Scalar),
    pub unit_values: bool,
    pub family: FamilySpec,
}

impl GenSpec {
    /// Unit budget, costs in `[λ/5, λ]`, values in `[1, 10]`.
    pub fn new(n: usize, lambda: Scalar, family: FamilySpec) -> Self {
        let min_cost = &lambda / Scalar::from_int(5);
        GenSpec {
            n,
            lambda,
            min_cost,
            budget: Scalar::one(),
            values: (Scalar::one(), Scalar::from_int(10)),
            unit_values: false,
            family,
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: &str| Err(GenError::Spec(msg.to_string()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if !self.budget.is_positive() {
            return bad("budget must be positive");
        }
        if !self.lambda.is_positive() || self.lambda > Scalar::one() {
            return bad("lambda must lie in (0, 1]");
        }
        if self.min_cost.is_negative() || self.min_cost > &self.lambda * &self.budget {
            return bad("min_cost must lie in [0, lambda * budget]");
        }
        let (lo, hi) = &self.values;
        if !self.unit_values && (!lo.is_positive() || lo > hi) {
            return bad("value range must be positive and ordered");
        }
        match self.family {
            FamilySpec::Uniform { k: 0 } => bad("uniform rank must be positive"),
            FamilySpec::Partition { blocks, cap } if blocks == 0 || cap == 0 => {
                bad("partition needs blocks and capacity")
            }
            FamilySpec::Graphic { vertices } if vertices < 2 => bad("graphic matroids need two vertices"),
            _ => Ok(()),
        }
    }
}

fn grid_draw(rng: &mut ChaCha8Rng, lo: &Scalar, hi: &Scalar) -> Scalar {
    let k = rng.random_range(0..=RESOLUTION);
    lo + (hi - lo) * Scalar::ratio(k, RESOLUTION)
}

fn draw_matroid(rng: &mut ChaCha8Rng, n: usize, family: FamilySpec) -> Result<Matroid, GenError> {
    Ok(match family {
        FamilySpec::Free => Matroid::free(n),
        FamilySpec::Uniform { k } => Matroid::uniform(n, k),
        FamilySpec::Partition { blocks, cap } => {
            let mut members = vec![Vec::new(); blocks];
            for i in 0..n {
                members[rng.random_range(0..blocks)].push(i);
            }
            members.retain(|b| !b.is_empty());
            let caps = vec![cap; members.len()];
            Matroid::partition(n, members, caps)?
        }
        FamilySpec::Graphic { vertices } => {
            let edges = (0..n)
                .map(|_| {
                    let a = rng.random_range(0..vertices);
                    let b = (a + rng.random_range(1..vertices)) % vertices;
                    (a, b)
                })
                .collect();
            Matroid::graphic(vertices, edges)?
        }
    })
}

/// Costs on the grid over `[lo, hi]`, pairwise distinct whenever the grid is large
/// enough.
fn draw_costs(rng: &mut ChaCha8Rng, n: usize, lo: &Scalar, hi: &Scalar) -> Vec<Scalar> {
    let points = RESOLUTION as usize + 1;
    if n <= points && lo < hi {
        sample(rng, points, n)
            .into_iter()
            .map(|k| lo + (hi - lo) * Scalar::ratio(k as i64, RESOLUTION))
            .collect()
    } else {
        (0..n).map(|_| grid_draw(rng, lo, hi)).collect()
    }
}

/// A seeded instance with costs in `[m, λB]`, values in range and all `v/c` distinct.
///
/// Unit-value instances get distinct costs instead of a value perturbation; otherwise
/// values are perturbed by at most one value-grid step.
pub fn generate_instance(spec: &GenSpec, seed: u64) -> Result<Instance, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = &spec.lambda * &spec.budget;
    let costs = draw_costs(&mut rng, spec.n, &spec.min_cost, &top);
    let values = if spec.unit_values {
        vec![Scalar::one(); spec.n]
    } else {
        (0..spec.n)
            .map(|_| grid_draw(&mut rng, &spec.values.0, &spec.values.1))
            .collect()
    };
    let matroid = draw_matroid(&mut rng, spec.n, spec.family)?;
    let inst = Instance::new(values, costs, spec.budget.clone(), matroid)?;
    if spec.unit_values {
        return Ok(inst);
    }
    let step = (&spec.values.1 - &spec.values.0) / Scalar::from_int(RESOLUTION);
    let step = if step.is_positive() {
        step
    } else {
        Scalar::ratio(1, RESOLUTION)
    };
    Ok(perturb_distinct_ratios(&inst, &step).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::ratios_distinct;

    #[test]
    fn costs_respect_range() {
        let spec = GenSpec {
            min_cost: Scalar::ratio(1, 100),
            ..GenSpec::new(10, Scalar::ratio(1, 20), FamilySpec::Free)
        };
        let inst = generate_instance(&spec, 7).unwrap();
        assert!(inst
            .costs()
            .iter()
            .all(|c| *c >= Scalar::ratio(1, 100) && *c <= Scalar::ratio(1, 20)));
        assert!(ratios_distinct(&inst));
    }

    #[test]
    fn seed_determines_instance() {
        let spec = GenSpec::new(8, Scalar::ratio(1, 5), FamilySpec::Graphic { vertices: 5 });
        assert_eq!(
            generate_instance(&spec, 3).unwrap(),
            generate_instance(&spec, 3).unwrap()
        );
        assert_ne!(
            generate_instance(&spec, 3).unwrap(),
            generate_instance(&spec, 4).unwrap()
        );
    }

    #[test]
    fn unit_values_stay_unit() {
        let spec = GenSpec {
            unit_values: true,
            ..GenSpec::new(6, Scalar::ratio(1, 5), FamilySpec::Uniform { k: 3 })
        };
        let inst = generate_instance(&spec, 1).unwrap();
        assert!(inst.values().iter().all(|v| *v == Scalar::one()));
        assert!(ratios_distinct(&inst));
    }

    #[test]
    fn infeasible_specs_rejected() {
        let spec = GenSpec {
            min_cost: Scalar::one(),
            ..GenSpec::new(3, Scalar::ratio(1, 2), FamilySpec::Free)
        };
        assert!(matches!(generate_instance(&spec, 0), Err(GenError::Spec(_))));
        assert!(generate_instance(&GenSpec::new(0, Scalar::one(), FamilySpec::Free), 0).is_err());
    }
}
