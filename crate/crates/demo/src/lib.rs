//! Browser front end for the adaptive solver. A [`Session`] holds the current
//! mesh, discrete solution and indicators; [`AfemDemo`] exposes it to
//! JavaScript.

use afem::adapt::Refinement;
use afem::assembly::energy_norm_error;
use afem::estimate;
use afem::mark::{elements_to_refine, mark};
use afem::solve::{solve_exact, solve_nonlinear, SolverConfig};
use afem::{
    assemble, AdaptError, DiscreteFunction, ElementSet, EstimatorKind, LocalIndicators, MarkingStrategy, Mesh,
    ProblemSpec,
};
use serde_json::json;
use wasm_bindgen::prelude::*;

pub const PROBLEMS: [&str; 4] = ["lshape_singular", "square_sine", "lshape_convection", "lshape_nonlinear"];

#[derive(Clone, Debug)]
struct Step {
    elements: usize,
    eta: f64,
    error: Option<f64>,
    action: &'static str,
}

pub struct Session {
    problem: ProblemSpec,
    estimator: EstimatorKind,
    marking: MarkingStrategy,
    solver: SolverConfig,
    mesh: Mesh,
    solution: DiscreteFunction,
    indicators: LocalIndicators,
    /// Elements handed to the last refinement, as ids of the previous mesh.
    last_marked: Vec<u32>,
    /// Previous mesh, for drawing what the last step refined.
    previous: Option<Mesh>,
    history: Vec<Step>,
}

impl Session {
    pub fn new(problem: &str, estimator: EstimatorKind) -> Result<Session, AdaptError> {
        let spec = ProblemSpec::by_name(problem).ok_or_else(|| AdaptError::UnknownProblem(problem.into()))?;
        let mesh = (spec.initial_mesh)();
        let zero = DiscreteFunction::zeros(&mesh);
        let indicators = estimate::compute(estimator, &mesh, &spec, &zero)?;
        let mut s = Session {
            problem: spec,
            estimator,
            marking: MarkingStrategy::Greedy,
            solver: SolverConfig::default(),
            mesh,
            solution: zero,
            indicators,
            last_marked: Vec::new(),
            previous: None,
            history: Vec::new(),
        };
        s.solve(None, "start")?;
        Ok(s)
    }

    fn solve(&mut self, guess: Option<DiscreteFunction>, action: &'static str) -> Result<(), AdaptError> {
        let guess = guess.unwrap_or_else(|| DiscreteFunction::zeros(&self.mesh));
        self.solution = if self.problem.nonlinearity.is_some() {
            solve_nonlinear(&self.mesh, &self.problem, &guess, &self.solver, None)?.0
        } else {
            let system = assemble(&self.mesh, &self.problem, None)?;
            let x0 = system.restrict(&guess);
            solve_exact(&system, Some(&x0), &self.solver)?.0
        };
        self.estimate(action)
    }

    fn estimate(&mut self, action: &'static str) -> Result<(), AdaptError> {
        self.indicators = estimate::compute(self.estimator, &self.mesh, &self.problem, &self.solution)?;
        let error = match self.problem.exact {
            Some(_) => Some(energy_norm_error(&self.mesh, &self.problem, &self.solution)?),
            None => None,
        };
        self.history.push(Step {
            elements: self.mesh.num_triangles(),
            eta: self.indicators.eta(),
            error,
            action,
        });
        Ok(())
    }

    fn refine(&mut self, set: ElementSet, action: &'static str) -> Result<(), AdaptError> {
        let next = self.mesh.refine(&set)?;
        let guess = self.solution.prolong(&next)?;
        self.last_marked = set.ids().to_vec();
        self.previous = Some(std::mem::replace(&mut self.mesh, next));
        self.solve(Some(guess), action)
    }

    /// Bisects the element containing `(x, y)` together with its closure.
    /// Returns false if the point lies outside the domain.
    pub fn refine_at(&mut self, x: f64, y: f64) -> Result<bool, AdaptError> {
        let Some(t) = self.mesh.locate([x, y]) else {
            return Ok(false);
        };
        self.refine(std::iter::once(t as u32).collect(), "click")?;
        Ok(true)
    }

    /// One MARK and REFINE step with bulk parameter `theta`, followed by a
    /// new SOLVE and ESTIMATE.
    pub fn adaptive_step(&mut self, theta: f64, refinement: Refinement) -> Result<usize, AdaptError> {
        let set = match refinement {
            Refinement::Adaptive => {
                let marked = mark(self.marking, &self.indicators, theta)?;
                elements_to_refine(&self.mesh, &marked, &self.indicators)?
            }
            Refinement::Uniform => ElementSet::all(self.mesh.num_triangles()),
        };
        let n = set.len();
        self.refine(set, if refinement == Refinement::Uniform { "uniform" } else { "adaptive" })?;
        Ok(n)
    }

    pub fn set_estimator(&mut self, kind: EstimatorKind) -> Result<(), AdaptError> {
        self.estimator = kind;
        self.history.clear();
        self.estimate("estimator")
    }

    pub fn set_marking(&mut self, marking: MarkingStrategy) {
        self.marking = marking;
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn eta(&self) -> f64 {
        self.indicators.eta()
    }

    pub fn element_indicators(&self) -> Vec<f64> {
        self.indicators.per_element(self.mesh.num_triangles())
    }

    pub fn history_json(&self) -> String {
        let steps: Vec<_> = self
            .history
            .iter()
            .map(|s| json!({"elements": s.elements, "eta": s.eta, "error": s.error, "action": s.action}))
            .collect();
        serde_json::Value::Array(steps).to_string()
    }
}

fn js_error(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn parse_estimator(s: &str) -> Result<EstimatorKind, JsError> {
    s.parse::<EstimatorKind>().map_err(js_error)
}

#[wasm_bindgen]
pub struct AfemDemo {
    session: Session,
}

#[wasm_bindgen]
impl AfemDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(problem: &str, estimator: &str) -> Result<AfemDemo, JsError> {
        let session = Session::new(problem, parse_estimator(estimator)?).map_err(js_error)?;
        Ok(AfemDemo { session })
    }

    pub fn problems() -> Vec<String> {
        PROBLEMS.iter().map(|s| s.to_string()).collect()
    }

    pub fn click_refine(&mut self, x: f64, y: f64) -> Result<bool, JsError> {
        self.session.refine_at(x, y).map_err(js_error)
    }

    /// Returns the number of elements handed to the refinement.
    pub fn adaptive_step(&mut self, theta: f64) -> Result<usize, JsError> {
        self.session.adaptive_step(theta, Refinement::Adaptive).map_err(js_error)
    }

    pub fn uniform_step(&mut self) -> Result<usize, JsError> {
        self.session.adaptive_step(1.0, Refinement::Uniform).map_err(js_error)
    }

    pub fn set_estimator(&mut self, estimator: &str) -> Result<(), JsError> {
        self.session.set_estimator(parse_estimator(estimator)?).map_err(js_error)
    }

    pub fn set_binning(&mut self, on: bool) {
        self.session
            .set_marking(if on { MarkingStrategy::Binning } else { MarkingStrategy::Greedy });
    }

    /// Flat `x0, y0, x1, y1, ...`.
    pub fn vertices(&self) -> Vec<f64> {
        self.session.mesh().vertices().iter().flat_map(|p| [p[0], p[1]]).collect()
    }

    /// Flat vertex triples.
    pub fn triangles(&self) -> Vec<u32> {
        self.session.mesh().triangles().iter().flatten().copied().collect()
    }

    /// Squared indicator per element.
    pub fn indicators(&self) -> Vec<f64> {
        self.session.element_indicators()
    }

    /// Nodal values of the discrete solution.
    pub fn solution(&self) -> Vec<f64> {
        self.session.solution.values.clone()
    }

    /// Flat vertex triples of the elements refined by the last step, on the
    /// previous mesh.
    pub fn last_marked(&self) -> Vec<f64> {
        let Some(prev) = &self.session.previous else {
            return Vec::new();
        };
        self.session
            .last_marked
            .iter()
            .flat_map(|&t| prev.coords(t as usize))
            .flat_map(|p| [p[0], p[1]])
            .collect()
    }

    pub fn eta(&self) -> f64 {
        self.session.eta()
    }

    pub fn elements(&self) -> usize {
        self.session.mesh().num_triangles()
    }

    pub fn history(&self) -> String {
        self.session.history_json()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_problem_starts() {
        for p in PROBLEMS {
            let s = Session::new(p, EstimatorKind::Residual).unwrap();
            assert!(s.eta() > 0.0, "{p}");
        }
    }

    #[test]
    fn click_outside_the_domain_is_ignored() {
        let mut s = Session::new("lshape_singular", EstimatorKind::Residual).unwrap();
        let n = s.mesh().num_triangles();
        // The L-shape excludes the quadrant x > 0, y < 0.
        assert!(!s.refine_at(0.5, -0.5).unwrap());
        assert_eq!(s.mesh().num_triangles(), n);
        assert!(s.refine_at(-0.5, 0.5).unwrap());
        assert!(s.mesh().num_triangles() > n);
    }

    #[test]
    fn adaptive_steps_reduce_the_estimator() {
        let mut s = Session::new("square_sine", EstimatorKind::Zz).unwrap();
        let eta0 = s.eta();
        for _ in 0..6 {
            s.adaptive_step(0.5, Refinement::Adaptive).unwrap();
        }
        assert!(s.eta() < eta0);
        assert_eq!(s.element_indicators().len(), s.mesh().num_triangles());
        let h: serde_json::Value = serde_json::from_str(&s.history_json()).unwrap();
        assert_eq!(h.as_array().unwrap().len(), 7);
    }
}
