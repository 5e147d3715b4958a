//! The adaptive driver: SOLVE, ESTIMATE, MARK, REFINE until a stop rule fires,
//! with one telemetry record per level, plus rate fitting and the run-level
//! convergence diagnostics.

use crate::assembly::{assemble, energy_matrix, energy_norm, energy_norm_error, DiscreteFunction};
use crate::error::AdaptError;
use crate::estimate::{self, oscillation, EstimatorKind, LocalIndicators};
use crate::mark::{elements_to_refine, mark, MarkingStrategy};
use crate::mesh::{ElementSet, Mesh, ModifiedMeshSize};
use crate::problem::ProblemSpec;
use crate::solve::{solve_exact, solve_inexact, solve_nonlinear, SolveReport, SolverConfig, SolverMode};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use crate::clock::Stopwatch;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// Dörfler marking followed by bisection of the marked elements.
    Adaptive,
    /// Refine every element once per level (control runs).
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    /// Stop once a solved mesh has at least this many elements.
    pub max_elements: Option<usize>,
    /// Stop once `η` drops below this value.
    pub eta: Option<f64>,
    pub max_levels: Option<usize>,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_elements: Some(200_000),
            eta: Some(1e-8),
            max_levels: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveConfig {
    pub problem: String,
    pub estimator: EstimatorKind,
    pub marking: MarkingStrategy,
    pub theta: f64,
    pub refinement: Refinement,
    pub solver: SolverConfig,
    pub stop: StopRule,
    /// Patch depth of the modified mesh-size function.
    pub k: usize,
    /// Keep meshes, solutions and indicators of every level (needed by the
    /// verification checks).
    pub record_history: bool,
    /// Keep a mesh snapshot every this many levels.
    pub snapshot_every: Option<usize>,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            problem: "lshape_singular".into(),
            estimator: EstimatorKind::Residual,
            marking: MarkingStrategy::Greedy,
            theta: 0.5,
            refinement: Refinement::Adaptive,
            solver: SolverConfig::default(),
            stop: StopRule::default(),
            k: 2,
            record_history: false,
            snapshot_every: None,
        }
    }
}

impl AdaptiveConfig {
    pub fn for_problem(problem: &str) -> Self {
        AdaptiveConfig {
            problem: problem.into(),
            ..AdaptiveConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), AdaptError> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(AdaptError::Config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        let s = &self.stop;
        if s.max_elements.is_none() && s.eta.is_none() && s.max_levels.is_none() {
            return Err(AdaptError::Config("stop rule is empty".into()));
        }
        if self.snapshot_every == Some(0) {
            return Err(AdaptError::Config("snapshot_every must be positive".into()));
        }
        self.solver.validate()?;
        Ok(())
    }
}

/// Telemetry of one level; one CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub elements: usize,
    pub vertices: usize,
    pub dofs: usize,
    pub eta: f64,
    pub error: Option<f64>,
    pub osc: f64,
    pub marked: usize,
    pub refined: usize,
    pub achieved_fraction: f64,
    /// Energy distance to the solution of the next level, measured on the
    /// finer mesh.
    pub dist_next: Option<f64>,
    pub solver_iterations: usize,
    pub picard_iterations: usize,
    pub estimator_evaluations: usize,
    pub residual: f64,
    pub certified_bound: f64,
    pub min_eigenvalue: f64,
    /// Largest value of the modified mesh-size function.
    pub hmod_max: f64,
    /// Smallest ratio `h(T, k) / h_T`.
    pub hmod_min_ratio: f64,
}

/// Wall-clock times of one level, in seconds. Kept apart from
/// [`LevelRecord`] so that the latter is reproducible bit for bit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelTiming {
    pub level: usize,
    pub solve: f64,
    pub estimate: f64,
    pub mark: f64,
    pub refine: f64,
    pub total: f64,
}

/// Full state of one level.
#[derive(Clone, Debug)]
pub struct LevelState {
    pub mesh: Mesh,
    pub solution: DiscreteFunction,
    pub indicators: LocalIndicators,
    /// Elements handed to the refinement (empty on the last level).
    pub refined: ElementSet,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub level: usize,
    pub mesh: Mesh,
    pub solution: DiscreteFunction,
    /// Indicator contributions accumulated per element.
    pub indicators: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxElements,
    Eta,
    MaxLevels,
    /// The estimator vanished: the discrete solution is exact.
    Converged,
}

#[derive(Clone, Debug)]
pub struct AdaptiveRun {
    pub config: AdaptiveConfig,
    pub levels: Vec<LevelRecord>,
    pub timings: Vec<LevelTiming>,
    pub stop_reason: StopReason,
    pub history: Vec<LevelState>,
    pub snapshots: Vec<Snapshot>,
}

impl AdaptiveRun {
    pub fn initial_elements(&self) -> usize {
        self.levels[0].elements
    }

    pub fn final_level(&self) -> &LevelRecord {
        self.levels.last().expect("a run has at least one level")
    }
}

/// Runs the loop for the registered problem `config.problem` on `mesh0`.
pub fn run_adaptive(config: &AdaptiveConfig, mesh0: Mesh) -> Result<AdaptiveRun, AdaptError> {
    let problem = ProblemSpec::by_name(&config.problem).ok_or_else(|| AdaptError::UnknownProblem(config.problem.clone()))?;
    run_adaptive_with(config, &problem, mesh0)
}

/// Runs the loop for the registered problem on its default initial mesh.
pub fn run_problem(config: &AdaptiveConfig) -> Result<AdaptiveRun, AdaptError> {
    let problem = ProblemSpec::by_name(&config.problem).ok_or_else(|| AdaptError::UnknownProblem(config.problem.clone()))?;
    let mesh0 = (problem.initial_mesh)();
    run_adaptive_with(config, &problem, mesh0)
}

fn estimate_eta(kind: EstimatorKind, mesh: &Mesh, problem: &ProblemSpec, v: &DiscreteFunction) -> f64 {
    // An estimator error is reported by the regular estimate step; here it
    // only disables the inexact acceptance.
    estimate::compute(kind, mesh, problem, v).map_or(0.0, |i| i.eta())
}

/// Runs the loop for an arbitrary problem.
pub fn run_adaptive_with(config: &AdaptiveConfig, problem: &ProblemSpec, mesh0: Mesh) -> Result<AdaptiveRun, AdaptError> {
    config.validate()?;
    let mut mesh = mesh0;
    let mut hmod = ModifiedMeshSize::initial(&mesh, config.k, None);
    let mut levels: Vec<LevelRecord> = Vec::new();
    let mut timings = Vec::new();
    let mut history = Vec::new();
    let mut snapshots = Vec::new();
    let mut previous: Option<DiscreteFunction> = None;
    let mut eigen_hint: Option<f64> = None;
    let mut previous_dofs = 0usize;
    let inexact = config.solver.mode == SolverMode::Inexact;

    for level in 0.. {
        let level_start = Stopwatch::start();
        let mut timing = LevelTiming {
            level,
            ..LevelTiming::default()
        };

        // SOLVE, warm-started from the prolonged previous solution.
        let t0 = Stopwatch::start();
        let guess = match &previous {
            Some(u) => u.prolong(&mesh)?,
            None => DiscreteFunction::zeros(&mesh),
        };
        let mut eta_of = |v: &DiscreteFunction| estimate_eta(config.estimator, &mesh, problem, v);
        let (u, report, dofs): (DiscreteFunction, SolveReport, usize) = if problem.nonlinearity.is_some() {
            let est: Option<&mut dyn FnMut(&DiscreteFunction) -> f64> = if inexact { Some(&mut eta_of) } else { None };
            let (u, r) = solve_nonlinear(&mesh, problem, &guess, &config.solver, est)?;
            let dofs = assemble(&mesh, problem, Some(&u))?.dim();
            (u, r, dofs)
        } else {
            let system = assemble(&mesh, problem, None)?;
            let x0 = system.restrict(&guess);
            let hint = eigen_hint.map(|l| l * previous_dofs as f64 / system.dim().max(1) as f64);
            let (u, r) = if inexact {
                solve_inexact(&system, Some(&x0), &config.solver, hint, &mut eta_of)?
            } else {
                solve_exact(&system, Some(&x0), &config.solver)?
            };
            (u, r, system.dim())
        };
        if report.min_eigenvalue > 0.0 {
            eigen_hint = Some(match eigen_hint {
                Some(h) => report.min_eigenvalue.min(h * previous_dofs as f64 / dofs.max(1) as f64),
                None => report.min_eigenvalue,
            });
        }
        previous_dofs = dofs;
        timing.solve = t0.seconds();

        // ESTIMATE
        let t0 = Stopwatch::start();
        let indicators = estimate::compute(config.estimator, &mesh, problem, &u)?;
        let eta = indicators.eta();
        let osc = oscillation(&mesh, problem, &u)?.total();
        let error = match problem.exact {
            Some(_) => Some(energy_norm_error(&mesh, problem, &u)?),
            None => None,
        };
        if let (Some(prev), Some(record)) = (&previous, levels.last_mut()) {
            let energy = energy_matrix(&mesh, problem)?;
            let p = prev.prolong(&mesh)?;
            let diff: Vec<f64> = u.values.iter().zip(&p.values).map(|(a, b)| a - b).collect();
            record.dist_next = Some(energy_norm(&energy, &diff));
        }
        timing.estimate = t0.seconds();

        let sizes = mesh.mesh_sizes();
        let hmod_max = hmod.values().iter().copied().fold(0.0, f64::max);
        let hmod_min_ratio = hmod.values().iter().zip(&sizes).map(|(v, h)| v / h).fold(f64::INFINITY, f64::min);
        let mut record = LevelRecord {
            level,
            elements: mesh.num_triangles(),
            vertices: mesh.num_vertices(),
            dofs,
            eta,
            error,
            osc,
            marked: 0,
            refined: 0,
            achieved_fraction: 0.0,
            dist_next: None,
            solver_iterations: report.iterations,
            picard_iterations: report.picard_iterations,
            estimator_evaluations: report.estimator_evaluations,
            residual: report.residual,
            certified_bound: report.certified_bound,
            min_eigenvalue: report.min_eigenvalue,
            hmod_max,
            hmod_min_ratio,
        };

        if let Some(every) = config.snapshot_every {
            if level % every == 0 {
                snapshots.push(Snapshot {
                    level,
                    mesh: mesh.clone(),
                    solution: u.clone(),
                    indicators: indicators.per_element(mesh.num_triangles()),
                });
            }
        }

        let stop = if eta == 0.0 {
            Some(StopReason::Converged)
        } else if config.stop.eta.is_some_and(|tol| eta < tol) {
            Some(StopReason::Eta)
        } else if config.stop.max_elements.is_some_and(|n| mesh.num_triangles() >= n) {
            Some(StopReason::MaxElements)
        } else if config.stop.max_levels.is_some_and(|n| level + 1 >= n) {
            Some(StopReason::MaxLevels)
        } else {
            None
        };
        if let Some(reason) = stop {
            levels.push(record);
            timing.total = level_start.seconds();
            timings.push(timing);
            if config.record_history {
                history.push(LevelState {
                    mesh,
                    solution: u,
                    indicators,
                    refined: ElementSet::default(),
                });
            }
            return Ok(AdaptiveRun {
                config: config.clone(),
                levels,
                timings,
                stop_reason: reason,
                history,
                snapshots,
            });
        }

        // MARK
        let t0 = Stopwatch::start();
        let refined = match config.refinement {
            Refinement::Adaptive => {
                let marked = mark(config.marking, &indicators, config.theta)?;
                record.marked = marked.len();
                record.achieved_fraction = marked.achieved;
                elements_to_refine(&mesh, &marked, &indicators)?
            }
            Refinement::Uniform => {
                record.marked = indicators.len();
                record.achieved_fraction = 1.0;
                ElementSet::all(mesh.num_triangles())
            }
        };
        record.refined = refined.len();
        timing.mark = t0.seconds();

        // REFINE
        let t0 = Stopwatch::start();
        let next = match config.refinement {
            Refinement::Adaptive => mesh.refine(&refined)?,
            Refinement::Uniform => mesh.uniform_refine(),
        };
        if !refined.is_empty() && next.num_triangles() <= mesh.num_triangles() {
            return Err(AdaptError::NoProgress(level));
        }
        hmod = hmod.update(&mesh, &next)?;
        timing.refine = t0.seconds();

        levels.push(record);
        timing.total = level_start.seconds();
        timings.push(timing);
        if config.record_history {
            history.push(LevelState {
                mesh: mesh.clone(),
                solution: u.clone(),
                indicators,
                refined,
            });
        }
        previous = Some(u);
        mesh = next;
    }
    unreachable!("the level loop only exits by returning")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Estimator,
    Error,
}

/// Least-squares fit `log q ≈ a − s log(N − N₀ + 1)` with a 95% confidence
/// interval for `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

pub const MIN_LEVELS_FOR_FIT: usize = 6;

/// Fits the decay rate of `quantity` over the final half of the run.
pub fn fit_rate(run: &AdaptiveRun, quantity: Quantity) -> Result<RateFit, AdaptError> {
    let n0 = run.initial_elements();
    let mut points = Vec::with_capacity(run.levels.len());
    for l in &run.levels {
        let q = match quantity {
            Quantity::Estimator => l.eta,
            Quantity::Error => l.error.ok_or_else(|| AdaptError::Config("run has no error column".into()))?,
        };
        points.push(((l.elements - n0 + 1) as f64, q));
    }
    fit_power_law(&points)
}

/// Rate fit of `(N − N₀ + 1, q)` pairs over their final half.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<RateFit, AdaptError> {
    if points.len() < MIN_LEVELS_FOR_FIT {
        return Err(AdaptError::InsufficientLevels {
            needed: MIN_LEVELS_FOR_FIT,
            got: points.len(),
        });
    }
    let tail = &points[points.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
    let (a, b, se) = least_squares(&xs, &ys).ok_or_else(|| AdaptError::Config("degenerate rate fit: all points share one abscissa".into()))?;
    let df = (tail.len() - 2) as f64;
    let half = if df > 0.0 && se > 0.0 {
        StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom").inverse_cdf(0.975) * se
    } else {
        0.0
    };
    Ok(RateFit {
        slope: -b,
        intercept: a,
        ci_low: -b - half,
        ci_high: -b + half,
        points: tail.len(),
    })
}

/// `(intercept, slope, standard error of the slope)`.
fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let se = if xs.len() > 2 {
        let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some((a, b, se))
}

/// `η_{ℓ+j}² ≤ C ρ^j η_ℓ²` for all recorded `ℓ, j`: `ρ` from a log-linear fit
/// of `η_ℓ²` against `ℓ`, `C` the smallest constant making the bound hold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearEnvelope {
    pub rho: f64,
    pub c: f64,
}

pub fn r_linear_envelope(eta: &[f64]) -> Option<LinearEnvelope> {
    let sq: Vec<f64> = eta.iter().map(|e| e * e).collect();
    if sq.len() < 2 || sq.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = (0..sq.len()).map(|l| l as f64).collect();
    let ys: Vec<f64> = sq.iter().map(|v| v.ln()).collect();
    let (_, b, _) = least_squares(&xs, &ys)?;
    let rho = b.exp();
    let mut c: f64 = 1.0;
    for l in 0..sq.len() {
        for j in 0..sq.len() - l {
            c = c.max(sq[l + j] / (rho.powi(j as i32) * sq[l]));
        }
    }
    Some(LinearEnvelope { rho, c })
}

/// `S_ℓ = Σ_{k>ℓ} η_k² / η_ℓ²` for every level.
pub fn summability(eta: &[f64]) -> Vec<f64> {
    let sq: Vec<f64> = eta.iter().map(|e| e * e).collect();
    let mut tail = 0.0;
    let mut out = vec![0.0; sq.len()];
    for l in (0..sq.len()).rev() {
        out[l] = if sq[l] > 0.0 { tail / sq[l] } else { 0.0 };
        tail += sq[l];
    }
    out
}

/// Measured constants of `η_{ℓ+1}² ≤ q η_ℓ² + C dist(U_{ℓ+1}, U_ℓ)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReduction {
    /// `max_ℓ η_{ℓ+1}² / η_ℓ²`: the bound with `C = 0`.
    pub q_without_dist: f64,
    /// Smallest `C` for which the bound holds with `q = 1/2`.
    pub c_at_half: f64,
}

pub fn estimator_reduction(levels: &[LevelRecord]) -> EstimatorReduction {
    let mut q: f64 = 0.0;
    let mut c: f64 = 0.0;
    for w in levels.windows(2) {
        let (a, b) = (w[0].eta.powi(2), w[1].eta.powi(2));
        if a > 0.0 {
            q = q.max(b / a);
        }
        let excess = b - 0.5 * a;
        if let (true, Some(d)) = (excess > 0.0, w[0].dist_next) {
            let d2 = d * d;
            c = c.max(if d2 > 0.0 { excess / d2 } else { f64::INFINITY });
        }
    }
    EstimatorReduction {
        q_without_dist: q,
        c_at_half: c,
    }
}

/// `C_mon = max_{ℓ<ℓ'} η_ℓ' / η_ℓ`.
pub fn quasi_monotonicity(eta: &[f64]) -> f64 {
    let mut best: f64 = 1.0;
    for l in 0..eta.len() {
        for m in l + 1..eta.len() {
            if eta[l] > 0.0 {
                best = best.max(eta[m] / eta[l]);
            }
        }
    }
    best
}

/// Rates and run-level constants, written as the JSON summary of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub estimator: EstimatorKind,
    pub marking: MarkingStrategy,
    pub theta: f64,
    pub refinement: Refinement,
    pub solver_mode: SolverMode,
    pub vartheta: f64,
    pub levels: usize,
    pub final_elements: usize,
    pub final_eta: f64,
    pub final_error: Option<f64>,
    pub stop_reason: StopReason,
    pub estimator_rate: Option<RateFit>,
    pub error_rate: Option<RateFit>,
    pub envelope: Option<LinearEnvelope>,
    pub summability_sup: f64,
    pub reduction: EstimatorReduction,
    pub quasi_monotonicity: f64,
}

impl RunSummary {
    pub fn of(run: &AdaptiveRun) -> Self {
        let eta: Vec<f64> = run.levels.iter().map(|l| l.eta).collect();
        let last = run.final_level();
        RunSummary {
            problem: run.config.problem.clone(),
            estimator: run.config.estimator,
            marking: run.config.marking,
            theta: run.config.theta,
            refinement: run.config.refinement,
            solver_mode: run.config.solver.mode,
            vartheta: run.config.solver.vartheta,
            levels: run.levels.len(),
            final_elements: last.elements,
            final_eta: last.eta,
            final_error: last.error,
            stop_reason: run.stop_reason,
            estimator_rate: fit_rate(run, Quantity::Estimator).ok(),
            error_rate: fit_rate(run, Quantity::Error).ok(),
            envelope: r_linear_envelope(&eta),
            summability_sup: summability(&eta).into_iter().fold(0.0, f64::max),
            reduction: estimator_reduction(&run.levels),
            quasi_monotonicity: quasi_monotonicity(&eta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..10).map(|i| 10f64 * 2f64.powi(i)).map(|n| (n, f(n))).collect()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_power_law(&pts(|n| n.powf(-0.5))).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!(fit.ci_high - fit.ci_low < 1e-10);
        let fit = fit_power_law(&pts(|_| 3.0)).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn too_few_levels() {
        let p = pts(|n| 1.0 / n);
        assert!(matches!(
            fit_power_law(&p[..5]),
            Err(AdaptError::InsufficientLevels { needed: 6, got: 5 })
        ));
    }

    #[test]
    fn envelope_of_geometric_sequence() {
        let eta: Vec<f64> = (0..8).map(|l| 0.8f64.powi(l)).collect();
        let e = r_linear_envelope(&eta).unwrap();
        assert!((e.rho - 0.64).abs() < 1e-12);
        assert!((e.c - 1.0).abs() < 1e-9);
        // Σ_{k≥1} 0.64^k = 0.64/0.36, truncated after 8 terms.
        let s = summability(&eta);
        assert!((s[0] - (1..8).map(|k| 0.64f64.powi(k)).sum::<f64>()).abs() < 1e-12);
        assert_eq!(s[7], 0.0);
        assert_eq!(quasi_monotonicity(&eta), 1.0);
        assert_eq!(quasi_monotonicity(&[1.0, 2.0, 0.5]), 2.0);
    }

    #[test]
    fn config_validation() {
        let mut c = AdaptiveConfig::default();
        c.validate().unwrap();
        c.theta = 0.0;
        assert!(c.validate().is_err());
        c.theta = 0.5;
        c.stop = StopRule {
            max_elements: None,
            eta: None,
            max_levels: None,
        };
        assert!(c.validate().is_err());
        let c: AdaptiveConfig = serde_json::from_str(r#"{"problem": "affine", "theta": 0.3}"#).unwrap();
        assert_eq!(c.k, 2);
        assert!(serde_json::from_str::<AdaptiveConfig>(r#"{"tehta": 0.3}"#).is_err());
    }

    #[test]
    fn affine_problem_stops_at_level_zero() {
        let run = run_problem(&AdaptiveConfig::for_problem("affine")).unwrap();
        assert_eq!(run.levels.len(), 1);
        assert!(run.levels[0].eta <= 1e-10, "{}", run.levels[0].eta);
    }

    #[test]
    fn square_sine_uniform_equivalent_marking() {
        let mut c = AdaptiveConfig::for_problem("square_sine");
        c.theta = 1.0;
        c.stop.max_levels = Some(5);
        let run = run_problem(&c).unwrap();
        for w in run.levels.windows(2) {
            let growth = w[1].elements as f64 / w[0].elements as f64;
            assert!((2.0..=4.0).contains(&growth), "growth {growth}");
        }
        assert!(run.levels[..4].iter().all(|l| l.dist_next.is_some()));
    }
}
