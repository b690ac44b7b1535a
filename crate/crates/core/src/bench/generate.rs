use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::NrpInstance;

/// Parameters of the random instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n: usize,
    pub m: usize,
    pub max_cost: i64,
    pub max_weight: i64,
    /// Probability of each pair `(i, j)`, `i < j`, being a prerequisite.
    pub precedence_density: f64,
    /// Probability of each requirement being requested by a stakeholder.
    pub request_density: f64,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n: 14,
            m: 8,
            max_cost: 20,
            max_weight: 10,
            precedence_density: 0.1,
            request_density: 0.2,
            seed: 1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("need at least one requirement and one stakeholder")]
    Empty,
    #[error("density {0} outside [0, 1]")]
    Density(f64),
    #[error("max cost must be >= 0 and max weight >= 1")]
    Range,
}

impl GeneratorParams {
    pub fn with_seed(seed: u64) -> Self {
        GeneratorParams { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.n == 0 || self.m == 0 {
            return Err(GeneratorError::Empty);
        }
        for d in [self.precedence_density, self.request_density] {
            if !(0.0..=1.0).contains(&d) {
                return Err(GeneratorError::Density(d));
            }
        }
        if self.max_cost < 0 || self.max_weight < 1 {
            return Err(GeneratorError::Range);
        }
        Ok(())
    }
}

/// Draws an instance; the same parameters always give the same instance.
/// Prerequisites only point from lower to higher ids, and a stakeholder
/// whose draw came out empty gets one requirement picked uniformly.
pub fn generate_instance(params: &GeneratorParams) -> Result<NrpInstance, GeneratorError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let costs: Vec<i64> = (0..params.n).map(|_| rng.gen_range(0..=params.max_cost)).collect();
    let weights: Vec<i64> = (0..params.m).map(|_| rng.gen_range(1..=params.max_weight)).collect();
    let mut precedence = Vec::new();
    for i in 1..=params.n {
        for j in i + 1..=params.n {
            if rng.gen_bool(params.precedence_density) {
                precedence.push((i, j));
            }
        }
    }
    let requests = (0..params.m)
        .map(|_| {
            let mut ids: Vec<usize> = (1..=params.n).filter(|_| rng.gen_bool(params.request_density)).collect();
            if ids.is_empty() {
                ids.push(rng.gen_range(1..=params.n));
            }
            ids
        })
        .collect();
    let name = format!("gen-n{}-m{}-s{}", params.n, params.m, params.seed);
    Ok(NrpInstance::new(name, costs, weights, precedence, requests).expect("generator respects the model invariants"))
}
