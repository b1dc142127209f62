//! Derivative-free hyperparameter search.
//!
//! The search walks a simplex of continuous points through the parameter
//! space, snapping every candidate to the grid before it is scored and
//! caching scores per grid point. It stops at the first setting whose score
//! reaches the accuracy threshold, or returns the best setting found once
//! the evaluation budget runs out.

pub mod surrogate;

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyper::{snap_to_grid, HyperParams, AXES};
use crate::types::Thresholds;

/// Errors terminating a search outright.
#[derive(Debug, Error)]
pub enum TuneError {
    #[error("budget {0} is too small; at least 5 evaluations are required")]
    BudgetTooSmall(usize),
    #[error("objective failed: {0}")]
    Objective(String),
}

/// A hard failure inside the objective. Recoverable training problems
/// should instead be reported as an infinite score.
#[derive(Debug)]
pub struct ObjectiveError(pub String);

/// Score and optional payload produced by one objective call.
pub struct Evaluation<A> {
    /// Prediction error of the setting; `f64::INFINITY` marks a setting
    /// whose training failed.
    pub score: f64,
    pub artifact: Option<A>,
}

/// Per-axis handling during the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AxisChoice {
    Tune,
    /// Keeps the axis pinned to this grid value.
    Fix(f64),
}

/// Which axes the simplex moves along; the rest stay fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    choices: [AxisChoice; 4],
}

impl SearchSpace {
    /// All four axes tuned.
    pub fn full() -> Self {
        SearchSpace {
            choices: [AxisChoice::Tune; 4],
        }
    }

    /// Builds a space from per-axis choices. Fixed values snap to their
    /// axis grid.
    pub fn new(choices: [AxisChoice; 4]) -> Self {
        let mut snapped = choices;
        for (axis, choice) in AXES.iter().zip(snapped.iter_mut()) {
            if let AxisChoice::Fix(value) = choice {
                *value = axis.value_at(axis.snap_index(*value));
            }
        }
        SearchSpace { choices: snapped }
    }

    pub fn choices(&self) -> &[AxisChoice; 4] {
        &self.choices
    }

    /// Indexes of the tuned axes.
    pub fn free_axes(&self) -> Vec<usize> {
        (0..4)
            .filter(|&i| matches!(self.choices[i], AxisChoice::Tune))
            .collect()
    }

    /// Forces the fixed axes of `base` to their pinned values.
    pub fn apply_to(&self, base: HyperParams) -> HyperParams {
        let mut raw = base.as_raw();
        for (slot, choice) in raw.iter_mut().zip(&self.choices) {
            if let AxisChoice::Fix(value) = choice {
                *slot = *value;
            }
        }
        snap_to_grid(raw).expect("fixed values are finite")
    }

    /// Expands reduced coordinates over the tuned axes into a full point.
    fn embed(&self, reduced: &[f64]) -> [f64; 4] {
        let mut raw = [0.0; 4];
        let mut next = 0;
        for (slot, choice) in raw.iter_mut().zip(&self.choices) {
            match choice {
                AxisChoice::Tune => {
                    *slot = reduced[next];
                    next += 1;
                }
                AxisChoice::Fix(value) => *slot = *value,
            }
        }
        raw
    }

}

/// Search settings.
#[derive(Debug, Clone, Copy)]
pub struct TuneOptions {
    pub thresholds: Thresholds,
    /// Maximum number of scored grid points.
    pub budget: usize,
    /// Seed for the jitter applied when the simplex collapses.
    pub seed: u64,
    pub space: SearchSpace,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            thresholds: Thresholds::default(),
            budget: 100,
            seed: 0,
            space: SearchSpace::full(),
        }
    }
}

/// One scored grid point, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    #[serde(flatten)]
    pub hyper: HyperParams,
    pub aare: f64,
    pub wall_time_ms: u64,
}

/// Result of one search.
pub struct TuneOutcome<A> {
    pub best_hyper: HyperParams,
    pub best_aare: f64,
    /// Payload of the best evaluation, absent when every training failed.
    pub best_artifact: Option<A>,
    /// Whether the accuracy threshold was reached.
    pub satisfied: bool,
    /// Number of distinct grid points scored.
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
}

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink
const SPREAD_TOL: f64 = 1e-6;
const STALL_LIMIT: usize = 20;
const INITIAL_STEP_FRACTION: f64 = 0.10;
const MAX_RESTART_RADIUS: f64 = 16.0;

#[derive(Clone)]
struct Vertex {
    coords: Vec<f64>,
    score: f64,
}

enum Step {
    Value(f64),
    Stop,
}

struct Search<A, F> {
    objective: F,
    space: SearchSpace,
    free: Vec<usize>,
    thd: f64,
    budget: usize,
    memo: HashMap<[u32; 4], f64>,
    trace: Vec<TraceEntry>,
    best: Option<(HyperParams, f64)>,
    best_artifact: Option<A>,
    satisfied: bool,
    rng: ChaCha8Rng,
    restart_radius: f64,
    restart_best: f64,
}

impl<A, F> Search<A, F>
where
    F: FnMut(&HyperParams) -> Result<Evaluation<A>, ObjectiveError>,
{
    /// Full raw coordinates for index-unit positions over the tuned axes.
    ///
    /// The simplex lives in index units, one unit per grid step on every
    /// axis, so transformations are isotropic across the very differently
    /// scaled domains.
    fn embed_index(&self, index: &[f64]) -> [f64; 4] {
        let raw: Vec<f64> = self
            .free
            .iter()
            .zip(index)
            .map(|(&axis, x)| {
                let axis = AXES[axis];
                axis.lo + x * axis.step
            })
            .collect();
        self.space.embed(&raw)
    }

    /// Index-unit positions of a grid point over the tuned axes.
    fn index_of(&self, hyper: &HyperParams) -> Vec<f64> {
        let raw = hyper.as_raw();
        self.free
            .iter()
            .map(|&axis| (raw[axis] - AXES[axis].lo) / AXES[axis].step)
            .collect()
    }

    /// Scores the grid point nearest to `index`, consuming budget only on
    /// cache misses. `Stop` means the search is over: either the threshold
    /// was just reached or the budget is spent.
    fn eval(&mut self, index: &[f64]) -> Result<Step, TuneError> {
        let hyper = snap_to_grid(self.embed_index(index))
            .map_err(|e| TuneError::Objective(e.to_string()))?;
        let key = hyper.grid_key();
        if let Some(&score) = self.memo.get(&key) {
            return Ok(Step::Value(score));
        }
        if self.trace.len() >= self.budget {
            return Ok(Step::Stop);
        }
        let started = Instant::now();
        let evaluation = (self.objective)(&hyper).map_err(|e| TuneError::Objective(e.0))?;
        let wall_time_ms = started.elapsed().as_millis() as u64;
        let score = evaluation.score;
        if score.is_nan() {
            return Err(TuneError::Objective("objective returned NaN".into()));
        }
        self.memo.insert(key, score);
        self.trace.push(TraceEntry {
            hyper,
            aare: score,
            wall_time_ms,
        });
        if self.best.as_ref().map_or(true, |(_, b)| score < *b) {
            self.best = Some((hyper, score));
            self.best_artifact = evaluation.artifact;
        }
        if score <= self.thd {
            self.satisfied = true;
            return Ok(Step::Stop);
        }
        Ok(Step::Value(score))
    }

    /// Builds a simplex around `base`: one vertex per tuned axis, displaced
    /// by a tenth of the axis span, with collisions after snapping resolved
    /// by stepping one grid value down instead.
    /// Builds a simplex around `base` with one vertex displaced per tuned
    /// axis. `steps[slot]` gives the displacement in grid steps; collisions
    /// after snapping fall back to one step down.
    fn build_simplex(
        &mut self,
        base: &HyperParams,
        steps: &[f64],
    ) -> Result<Option<Vec<Vertex>>, TuneError> {
        let base_idx = self.index_of(base);
        let base_score = match self.eval(&base_idx)? {
            Step::Value(v) => v,
            Step::Stop => return Ok(None),
        };
        let mut simplex = vec![Vertex {
            coords: base_idx.clone(),
            score: base_score,
        }];
        let free = self.free.clone();
        for (slot, &axis_index) in free.iter().enumerate() {
            let top = (AXES[axis_index].points - 1) as f64;
            let mut coords = base_idx.clone();
            coords[slot] = (coords[slot] + steps[slot]).clamp(0.0, top);
            let occupied: Vec<[u32; 4]> = simplex
                .iter()
                .map(|v| self.key_of(&v.coords))
                .collect::<Result<_, _>>()?;
            if occupied.contains(&self.key_of(&coords)?) {
                coords[slot] = (base_idx[slot] - 1.0).clamp(0.0, top);
            }
            let score = match self.eval(&coords)? {
                Step::Value(v) => v,
                Step::Stop => return Ok(None),
            };
            simplex.push(Vertex { coords, score });
        }
        Ok(Some(simplex))
    }

    /// Initial displacements: a tenth of each tuned axis's span.
    fn opening_steps(&self) -> Vec<f64> {
        self.free
            .iter()
            .map(|&axis| INITIAL_STEP_FRACTION * (AXES[axis].points - 1) as f64)
            .collect()
    }

    fn key_of(&self, index: &[f64]) -> Result<[u32; 4], TuneError> {
        snap_to_grid(self.embed_index(index))
            .map(|h| h.grid_key())
            .map_err(|e| TuneError::Objective(e.to_string()))
    }

    /// Jitters the best point by one grid step per tuned axis and rebuilds
    /// a simplex there with the current restart radius, displacing toward
    /// whichever side of each axis has more room.
    ///
    /// The radius doubles while restart cycles keep improving the best
    /// score and halves back toward one step when they stop, so the search
    /// can cover remote regions quickly yet still polish locally.
    fn restart(&mut self) -> Result<Option<Vec<Vertex>>, TuneError> {
        let (best, best_score) = *self.best.as_ref().expect("restart after first evaluation");
        if best_score < self.restart_best {
            self.restart_radius = (self.restart_radius * 2.0).min(MAX_RESTART_RADIUS);
        } else {
            self.restart_radius = 1.0;
        }
        self.restart_best = best_score;

        let mut index = self.index_of(&best);
        let free = self.free.clone();
        let mut steps = Vec::with_capacity(free.len());
        for (slot, &axis_index) in free.iter().enumerate() {
            let top = (AXES[axis_index].points - 1) as f64;
            let jitter = if self.rng.gen::<bool>() { 1.0 } else { -1.0 };
            index[slot] = (index[slot] + jitter).clamp(0.0, top);
            let radius = self.restart_radius.min(top);
            steps.push(if index[slot] + radius <= top {
                radius
            } else {
                -radius
            });
        }
        let base = snap_to_grid(self.embed_index(&index))
            .map_err(|e| TuneError::Objective(e.to_string()))?;
        self.build_simplex(&base, &steps)
    }

    fn run(&mut self, initial: HyperParams) -> Result<(), TuneError> {
        let opening = self.opening_steps();
        let mut simplex = match self.build_simplex(&initial, &opening)? {
            Some(s) => s,
            None => return Ok(()),
        };
        let dims = self.free.len();
        let mut stall = 0usize;
        let iteration_cap = self.budget * 50 + 100;
        for _ in 0..iteration_cap {
            simplex.sort_by(|a, b| a.score.total_cmp(&b.score));
            let evals_before = self.trace.len();
            if spread(&simplex) < SPREAD_TOL || stall >= STALL_LIMIT || needle_shaped(&simplex) {
                if self.trace.len() >= self.budget {
                    return Ok(());
                }
                simplex = match self.restart()? {
                    Some(s) => s,
                    None => return Ok(()),
                };
                stall = 0;
                continue;
            }
            let mut centroid = vec![0.0; dims];
            for vertex in &simplex[..dims] {
                for (c, x) in centroid.iter_mut().zip(&vertex.coords) {
                    *c += x / dims as f64;
                }
            }
            let worst = simplex[dims].clone();
            let reflected: Vec<f64> = centroid
                .iter()
                .zip(&worst.coords)
                .map(|(c, w)| c + ALPHA * (c - w))
                .collect();
            let reflected_score = match self.eval(&reflected)? {
                Step::Value(v) => v,
                Step::Stop => return Ok(()),
            };
            if reflected_score < simplex[0].score {
                let expanded: Vec<f64> = centroid
                    .iter()
                    .zip(&reflected)
                    .map(|(c, r)| c + GAMMA * (r - c))
                    .collect();
                let expanded_score = match self.eval(&expanded)? {
                    Step::Value(v) => v,
                    Step::Stop => return Ok(()),
                };
                simplex[dims] = if expanded_score < reflected_score {
                    Vertex {
                        coords: expanded,
                        score: expanded_score,
                    }
                } else {
                    Vertex {
                        coords: reflected,
                        score: reflected_score,
                    }
                };
            } else if reflected_score < simplex[dims - 1].score {
                simplex[dims] = Vertex {
                    coords: reflected,
                    score: reflected_score,
                };
            } else if reflected_score < worst.score {
                let contracted: Vec<f64> = centroid
                    .iter()
                    .zip(&reflected)
                    .map(|(c, r)| c + RHO * (r - c))
                    .collect();
                let contracted_score = match self.eval(&contracted)? {
                    Step::Value(v) => v,
                    Step::Stop => return Ok(()),
                };
                if contracted_score <= reflected_score {
                    simplex[dims] = Vertex {
                        coords: contracted,
                        score: contracted_score,
                    };
                } else if !self.shrink(&mut simplex)? {
                    return Ok(());
                }
            } else {
                let contracted: Vec<f64> = centroid
                    .iter()
                    .zip(&worst.coords)
                    .map(|(c, w)| c + RHO * (w - c))
                    .collect();
                let contracted_score = match self.eval(&contracted)? {
                    Step::Value(v) => v,
                    Step::Stop => return Ok(()),
                };
                if contracted_score < worst.score {
                    simplex[dims] = Vertex {
                        coords: contracted,
                        score: contracted_score,
                    };
                } else if !self.shrink(&mut simplex)? {
                    return Ok(());
                }
            }
            if self.trace.len() == evals_before {
                stall += 1;
            } else {
                stall = 0;
            }
        }
        Ok(())
    }

    /// Pulls every vertex halfway toward the best one. Returns false when
    /// the search ended during rescoring.
    fn shrink(&mut self, simplex: &mut [Vertex]) -> Result<bool, TuneError> {
        let best = simplex[0].coords.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (x, b) in vertex.coords.iter_mut().zip(&best) {
                *x = b + SIGMA * (*x - b);
            }
            vertex.score = match self.eval(&vertex.coords.clone())? {
                Step::Value(v) => v,
                Step::Stop => return Ok(false),
            };
        }
        Ok(true)
    }

    fn outcome(self) -> TuneOutcome<A> {
        let (best_hyper, best_aare) = self.best.expect("at least one evaluation ran");
        TuneOutcome {
            best_hyper,
            best_aare,
            best_artifact: self.best_artifact,
            satisfied: self.satisfied,
            evaluations: self.trace.len(),
            trace: self.trace,
        }
    }
}

/// Sample standard deviation of the vertex scores.
fn spread(simplex: &[Vertex]) -> f64 {
    let n = simplex.len() as f64;
    let mean = simplex.iter().map(|v| v.score).sum::<f64>() / n;
    let var = simplex
        .iter()
        .map(|v| (v.score - mean) * (v.score - mean))
        .sum::<f64>()
        / (n - 1.0);
    var.sqrt()
}

/// True when the simplex has collapsed into a needle while still spanning
/// multiple grid steps: its volume is tiny relative to its edge lengths, so
/// reflections can no longer move some axes.
fn needle_shaped(simplex: &[Vertex]) -> bool {
    let k = simplex.len() - 1;
    let mut edges: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut norm_product = 1.0;
    let mut diameter: f64 = 0.0;
    for vertex in &simplex[1..] {
        let edge: Vec<f64> = vertex
            .coords
            .iter()
            .zip(&simplex[0].coords)
            .map(|(a, b)| a - b)
            .collect();
        let norm = edge.iter().map(|x| x * x).sum::<f64>().sqrt();
        diameter = diameter.max(norm);
        norm_product *= norm;
        edges.push(edge);
    }
    if diameter <= 2.0 || norm_product <= 0.0 {
        return false;
    }
    (determinant(&mut edges).abs() / norm_product) < 0.01
}

/// Determinant by Gaussian elimination with partial pivoting; consumes the
/// matrix.
fn determinant(mat: &mut [Vec<f64>]) -> f64 {
    let n = mat.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| mat[a][col].abs().total_cmp(&mat[b][col].abs()))
            .expect("non-empty matrix");
        if mat[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            mat.swap(pivot, col);
            det = -det;
        }
        det *= mat[col][col];
        for row in col + 1..n {
            let factor = mat[row][col] / mat[col][col];
            for entry in col..n {
                mat[row][entry] -= factor * mat[col][entry];
            }
        }
    }
    det
}

/// Searches for a grid setting whose score reaches the accuracy threshold,
/// starting from `initial`.
///
/// The first evaluation is always `initial` itself (with fixed axes
/// applied); a satisfying start returns after that single evaluation.
///
/// # Errors
///
/// `BudgetTooSmall` below 5 evaluations, and `Objective` when the objective
/// reports a hard failure.
pub fn tune<A, F>(
    mut objective: F,
    initial: HyperParams,
    opts: &TuneOptions,
) -> Result<TuneOutcome<A>, TuneError>
where
    F: FnMut(&HyperParams) -> Result<Evaluation<A>, ObjectiveError>,
{
    if opts.budget < 5 {
        return Err(TuneError::BudgetTooSmall(opts.budget));
    }
    let space = opts.space;
    let initial = space.apply_to(initial);
    let free = space.free_axes();
    let mut search = Search {
        objective: &mut objective,
        space,
        free: free.clone(),
        thd: opts.thresholds.aare,
        budget: opts.budget,
        memo: HashMap::new(),
        trace: Vec::new(),
        best: None,
        best_artifact: None,
        satisfied: false,
        rng: ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1)),
        restart_radius: 1.0,
        restart_best: f64::INFINITY,
    };
    if free.is_empty() {
        let reduced: Vec<f64> = Vec::new();
        search.eval(&reduced)?;
        return Ok(search.outcome());
    }
    search.run(initial)?;
    Ok(search.outcome())
}
