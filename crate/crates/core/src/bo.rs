//! Efficient global optimisation over a [`DesignSpace`].
//!
//! A seeded DoE is evaluated first; afterwards each iteration refits a
//! [`GpModel`] on every trial so far and evaluates the unevaluated candidate
//! with the largest expected improvement.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::gp::{FitOptions, GpModel};
use crate::kernel::{KernelConfig, ThetaLayout};
use crate::seed::{derive, StableHasher};
use crate::space::{DesignPoint, DesignSpace, DEFAULT_ENUMERATION_CAP};

/// Random candidates drawn when the space is too large to enumerate.
pub const DEFAULT_RANDOM_CANDIDATES: usize = 4096;

const DOE_STREAM: u64 = 1;
const TOPUP_STREAM: u64 = 2;
const FIT_STREAM: u64 = 1_000_000;
const CANDIDATE_STREAM: u64 = 2_000_000;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `(f_min - μ)Φ(z) + σφ(z)` with `z = (f_min - μ)/σ`; zero when `σ = 0`.
pub fn expected_improvement(mu: f64, sigma: f64, f_min: f64) -> f64 {
    if !(sigma > 0.0) {
        return 0.0;
    }
    let d = f_min - mu;
    let z = d / sigma;
    (d * std_normal_cdf(z) + sigma * std_normal_pdf(z)).max(0.0)
}

/// A black-box objective. Errors and non-finite values mark the trial as
/// failed.
pub trait Objective: Sync {
    fn evaluate(&self, point: &DesignPoint, seed: u64) -> std::result::Result<f64, String>;
}

impl<F> Objective for F
where
    F: Fn(&DesignPoint, u64) -> std::result::Result<f64, String> + Sync,
{
    fn evaluate(&self, point: &DesignPoint, seed: u64) -> std::result::Result<f64, String> {
        self(point, seed)
    }
}

/// Seed handed to the objective for `point`, stable across runs and platforms.
pub fn trial_seed(point: &DesignPoint, run_seed: u64) -> u64 {
    let mut h = StableHasher::new(run_seed);
    for k in point.key() {
        h.write_u64(k);
    }
    h.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Doe,
    Ego,
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    /// Position in the run, starting at 0.
    pub iteration: usize,
    pub phase: Phase,
    pub point: DesignPoint,
    /// Objective value; for failed trials, the imputed value.
    pub objective: f64,
    pub failed: bool,
    pub error: Option<String>,
    pub seed: u64,
    /// Seconds spent in the objective.
    pub wall_time: f64,
    /// Acquisition value at proposal time (EGO trials only).
    pub expected_improvement: Option<f64>,
}

impl TrialRecord {
    /// One JSON-lines record. `wall_time` is optional because it differs
    /// between otherwise identical runs.
    pub fn to_json(&self, space: &DesignSpace, include_wall_time: bool) -> serde_json::Value {
        let mut active = serde_json::Map::new();
        for (i, v) in space.variables().iter().enumerate() {
            active.insert(v.name.clone(), serde_json::Value::Bool(self.point.is_active(i)));
        }
        let mut m = serde_json::Map::new();
        m.insert("iteration".into(), self.iteration.into());
        m.insert("phase".into(), serde_json::to_value(self.phase).expect("phase serialises"));
        m.insert("point".into(), space.point_to_json(&self.point));
        m.insert("active".into(), serde_json::Value::Object(active));
        m.insert("objective".into(), self.objective.into());
        m.insert("failed".into(), self.failed.into());
        if let Some(e) = &self.error {
            m.insert("error".into(), e.clone().into());
        }
        m.insert("seed".into(), self.seed.into());
        if let Some(ei) = self.expected_improvement {
            m.insert("expected_improvement".into(), ei.into());
        }
        if include_wall_time {
            m.insert("wall_time".into(), self.wall_time.into());
        }
        serde_json::Value::Object(m)
    }
}

#[derive(Debug, Clone)]
pub struct EgoConfig {
    pub n_doe: usize,
    pub n_iter: usize,
    pub seed: u64,
    pub kernel: KernelConfig,
    pub fit: FitOptions,
    /// Concurrent objective evaluations during the DoE phase.
    pub workers: usize,
    pub enumeration_cap: usize,
    pub random_candidates: usize,
}

impl EgoConfig {
    pub fn new(n_doe: usize, n_iter: usize, seed: u64) -> Self {
        Self {
            n_doe,
            n_iter,
            seed,
            kernel: KernelConfig::default(),
            fit: FitOptions::default(),
            workers: 1,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            random_candidates: DEFAULT_RANDOM_CANDIDATES,
        }
    }

    /// `max(5, 2·(number of variables))`.
    pub fn default_n_doe(space: &DesignSpace) -> usize {
        (2 * space.len()).max(5)
    }
}

#[derive(Debug, Clone)]
pub struct BoResult {
    pub trials: Vec<TrialRecord>,
    best: usize,
    pub space: DesignSpace,
    pub n_doe: usize,
    pub n_iter: usize,
    /// The loop stopped early because every candidate had been evaluated.
    pub exhausted: bool,
}

impl BoResult {
    pub fn best(&self) -> &TrialRecord {
        &self.trials[self.best]
    }

    pub fn best_index(&self) -> usize {
        self.best
    }

    /// Best successful objective after each trial (`∞` until the first success).
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut cur = f64::INFINITY;
        self.trials
            .iter()
            .map(|t| {
                if !t.failed && t.objective < cur {
                    cur = t.objective;
                }
                cur
            })
            .collect()
    }
}

/// Candidate-generation settings for [`propose_next_with`].
#[derive(Debug, Clone)]
pub struct ProposalOptions {
    pub enumeration_cap: usize,
    pub random_candidates: usize,
    pub seed: u64,
    /// Incumbent; defaults to the smallest training target of the model.
    pub f_min: Option<f64>,
}

impl Default for ProposalOptions {
    fn default() -> Self {
        Self {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            random_candidates: DEFAULT_RANDOM_CANDIDATES,
            seed: 0,
            f_min: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Proposal {
    pub point: DesignPoint,
    pub expected_improvement: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Unevaluated candidates: the full enumeration when the space is finite and
/// within the cap, otherwise a seeded uniform sample.
pub fn candidates(
    space: &DesignSpace,
    evaluated: &HashSet<DesignPoint>,
    enumeration_cap: usize,
    random_candidates: usize,
    seed: u64,
) -> Vec<DesignPoint> {
    let enumerable = space.cardinality().is_some_and(|c| c <= enumeration_cap as u128);
    if enumerable {
        if let Ok(all) = space.enumerate_capped(enumeration_cap) {
            return all.into_iter().filter(|p| !evaluated.contains(p)).collect();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    space
        .sample_uniform(random_candidates, &mut rng)
        .into_iter()
        .filter(|p| !evaluated.contains(p) && seen.insert(p.clone()))
        .collect()
}

/// EI argmax with default options.
pub fn propose_next(model: &GpModel, space: &DesignSpace, evaluated: &HashSet<DesignPoint>) -> Result<DesignPoint> {
    propose_next_with(model, space, evaluated, &ProposalOptions::default()).map(|p| p.point)
}

/// EI argmax over the unevaluated candidates; ties go to the earliest
/// candidate.
pub fn propose_next_with(
    model: &GpModel,
    space: &DesignSpace,
    evaluated: &HashSet<DesignPoint>,
    options: &ProposalOptions,
) -> Result<Proposal> {
    let f_min = options.f_min.unwrap_or_else(|| model.outputs().iter().copied().fold(f64::INFINITY, f64::min));
    let cands = candidates(space, evaluated, options.enumeration_cap, options.random_candidates, options.seed);
    let mut best: Option<Proposal> = None;
    for p in cands {
        let (mean, variance) = model.predict(&space.encode(&p));
        let ei = expected_improvement(mean, variance.sqrt(), f_min);
        if best.as_ref().is_none_or(|b| ei > b.expected_improvement) {
            best = Some(Proposal { point: p, expected_improvement: ei, mean, variance });
        }
    }
    best.ok_or(Error::Exhausted)
}

type Outcome = (std::result::Result<f64, String>, f64);

fn evaluate_one(objective: &dyn Objective, point: &DesignPoint, seed: u64) -> Outcome {
    let t = Instant::now();
    let r = match objective.evaluate(point, seed) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(format!("objective returned {v}")),
        Err(e) => Err(e),
    };
    (r, t.elapsed().as_secs_f64())
}

fn evaluate_batch(objective: &dyn Objective, jobs: &[(DesignPoint, u64)], workers: usize) -> Vec<Outcome> {
    let workers = workers.max(1).min(jobs.len().max(1));
    if workers == 1 {
        return jobs.iter().map(|(p, s)| evaluate_one(objective, p, *s)).collect();
    }
    let mut slots: Vec<Option<Outcome>> = vec![None; jobs.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..jobs.len())
                        .step_by(workers)
                        .map(|i| (i, evaluate_one(objective, &jobs[i].0, jobs[i].1)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, o) in h.join().expect("objective worker panicked") {
                slots[i] = Some(o);
            }
        }
    });
    slots.into_iter().map(|o| o.expect("every job evaluated")).collect()
}

/// Value standing in for a failed evaluation: twice the worst success.
fn imputed(worst: f64) -> f64 {
    if worst > 0.0 {
        2.0 * worst
    } else {
        worst + 1.0
    }
}

fn worst_success(trials: &[TrialRecord]) -> Option<f64> {
    trials.iter().filter(|t| !t.failed).map(|t| t.objective).reduce(f64::max)
}

/// DoE points: the seeded LHS, de-duplicated, topped up with unevaluated
/// random points when duplicates collapse it.
fn initial_design(space: &DesignSpace, config: &EgoConfig) -> Vec<DesignPoint> {
    let mut seen = HashSet::new();
    let mut pts: Vec<DesignPoint> = space
        .sample_doe(config.n_doe, derive(config.seed, DOE_STREAM))
        .into_iter()
        .filter(|p| seen.insert(p.clone()))
        .collect();
    if pts.len() < config.n_doe {
        let mut rng = ChaCha8Rng::seed_from_u64(derive(config.seed, TOPUP_STREAM));
        let finite = space.cardinality().is_some_and(|c| c <= config.enumeration_cap as u128);
        if finite {
            if let Ok(mut all) = space.enumerate_capped(config.enumeration_cap) {
                all.shuffle(&mut rng);
                for p in all {
                    if pts.len() >= config.n_doe {
                        break;
                    }
                    if seen.insert(p.clone()) {
                        pts.push(p);
                    }
                }
            }
        } else {
            for _ in 0..64 {
                for p in space.sample_uniform(config.n_doe, &mut rng) {
                    if pts.len() < config.n_doe && seen.insert(p.clone()) {
                        pts.push(p);
                    }
                }
                if pts.len() >= config.n_doe {
                    break;
                }
            }
        }
    }
    pts
}

/// Runs EGO with default settings.
pub fn run_ego(
    objective: &dyn Objective,
    space: &DesignSpace,
    n_doe: usize,
    n_iter: usize,
    seed: u64,
) -> Result<BoResult> {
    run_ego_with(objective, space, &EgoConfig::new(n_doe, n_iter, seed), &mut |_| Ok(()))
}

/// Runs EGO, calling `on_trial` after every committed trial (DoE trials are
/// committed in point order once the whole batch is evaluated).
pub fn run_ego_with(
    objective: &dyn Objective,
    space: &DesignSpace,
    config: &EgoConfig,
    on_trial: &mut dyn FnMut(&TrialRecord) -> Result<()>,
) -> Result<BoResult> {
    if config.n_doe < 2 {
        return Err(Error::InvalidArgument(format!("n_doe must be >= 2, got {}", config.n_doe)));
    }
    let layout = ThetaLayout::new(space, config.kernel.categorical);
    let mut trials: Vec<TrialRecord> = Vec::new();
    let mut evaluated: HashSet<DesignPoint> = HashSet::new();

    let doe = initial_design(space, config);
    let jobs: Vec<(DesignPoint, u64)> = doe.iter().map(|p| (p.clone(), trial_seed(p, config.seed))).collect();
    let outcomes = evaluate_batch(objective, &jobs, config.workers);
    let worst = outcomes.iter().filter_map(|(r, _)| r.as_ref().ok().copied()).reduce(f64::max);
    for ((point, seed), (res, wall)) in jobs.into_iter().zip(outcomes) {
        let (objective, failed, error) = match res {
            Ok(v) => (v, false, None),
            Err(e) => (worst.map(imputed).unwrap_or(f64::NAN), true, Some(e)),
        };
        let t = TrialRecord {
            iteration: trials.len(),
            phase: Phase::Doe,
            point: point.clone(),
            objective,
            failed,
            error,
            seed,
            wall_time: wall,
            expected_improvement: None,
        };
        on_trial(&t)?;
        evaluated.insert(point);
        trials.push(t);
    }
    if worst.is_none() {
        return Err(Error::Objective(format!(
            "all {} initial evaluations failed; first error: {}",
            trials.len(),
            trials[0].error.clone().unwrap_or_default()
        )));
    }

    let mut exhausted = false;
    for it in 0..config.n_iter {
        let worst = worst_success(&trials).expect("at least one success");
        let fill = imputed(worst);
        let w: Vec<Vec<f64>> = trials.iter().map(|t| space.encode(&t.point)).collect();
        let y: Vec<f64> = trials.iter().map(|t| if t.failed { fill } else { t.objective }).collect();
        let f_min = trials.iter().filter(|t| !t.failed).map(|t| t.objective).fold(f64::INFINITY, f64::min);
        let options = ProposalOptions {
            enumeration_cap: config.enumeration_cap,
            random_candidates: config.random_candidates,
            seed: derive(config.seed, CANDIDATE_STREAM + it as u64),
            f_min: Some(f_min),
        };
        let proposal = match GpModel::fit_with(
            w,
            y,
            layout.clone(),
            config.kernel,
            derive(config.seed, FIT_STREAM + it as u64),
            config.fit,
        ) {
            Ok(model) => {
                propose_next_with(&model, space, &evaluated, &options).map(|p| (p.point, Some(p.expected_improvement)))
            }
            // surrogate unusable: fall back to the first unevaluated candidate
            Err(_) => {
                let mut c =
                    candidates(space, &evaluated, options.enumeration_cap, options.random_candidates, options.seed);
                c.shuffle(&mut ChaCha8Rng::seed_from_u64(options.seed));
                c.into_iter().next().map(|p| (p, None)).ok_or(Error::Exhausted)
            }
        };
        let (point, ei) = match proposal {
            Ok(p) => p,
            Err(Error::Exhausted) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let seed = trial_seed(&point, config.seed);
        let (res, wall) = evaluate_one(objective, &point, seed);
        let (objective, failed, error) = match res {
            Ok(v) => (v, false, None),
            Err(e) => (fill, true, Some(e)),
        };
        let t = TrialRecord {
            iteration: trials.len(),
            phase: Phase::Ego,
            point: point.clone(),
            objective,
            failed,
            error,
            seed,
            wall_time: wall,
            expected_improvement: ei,
        };
        on_trial(&t)?;
        evaluated.insert(point);
        trials.push(t);
    }

    let best = (0..trials.len())
        .filter(|&i| !trials[i].failed)
        .min_by(|&a, &b| trials[a].objective.total_cmp(&trials[b].objective).then(a.cmp(&b)))
        .expect("at least one success");
    Ok(BoResult { trials, best, space: space.clone(), n_doe: config.n_doe, n_iter: config.n_iter, exhausted })
}
