//! Closed-form objectives for exercising the tuner without any training.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Evaluation, ObjectiveError};
use crate::hyper::{HyperParams, AXES};

/// A quadratic bowl over the grid with a flat floor at its optimum.
///
/// The score grows by `slope` per squared grid step away from the optimum,
/// so with the default values only points within two grid steps score at or
/// below 0.05.
#[derive(Debug, Clone, Copy)]
pub struct Bowl {
    pub optimum: HyperParams,
    pub floor: f64,
    pub slope: f64,
}

impl Bowl {
    /// A bowl centered on `optimum` with the default floor and slope.
    pub fn new(optimum: HyperParams) -> Self {
        Bowl {
            optimum,
            floor: 0.01,
            slope: 0.01,
        }
    }

    /// A bowl centered on a uniformly random grid point.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let key = [
            rng.gen_range(0..AXES[0].points),
            rng.gen_range(0..AXES[1].points),
            rng.gen_range(0..AXES[2].points),
            rng.gen_range(0..AXES[3].points),
        ];
        Bowl::new(HyperParams::from_key(key))
    }

    /// Squared distance to the optimum in grid steps.
    pub fn squared_steps(&self, hyper: &HyperParams) -> u64 {
        let a = hyper.grid_key();
        let b = self.optimum.grid_key();
        a.iter()
            .zip(b)
            .map(|(&x, y)| {
                let d = x as i64 - y as i64;
                (d * d) as u64
            })
            .sum()
    }

    /// Score of one grid point.
    pub fn score(&self, hyper: &HyperParams) -> f64 {
        self.floor + self.slope * self.squared_steps(hyper) as f64
    }

    /// The bowl as a tuner objective.
    pub fn objective(
        &self,
    ) -> impl FnMut(&HyperParams) -> Result<Evaluation<()>, ObjectiveError> + '_ {
        move |hyper| {
            Ok(Evaluation {
                score: self.score(hyper),
                artifact: Some(()),
            })
        }
    }
}
