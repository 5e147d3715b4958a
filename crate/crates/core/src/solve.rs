//! Krylov solvers with a tight exact mode and an estimator-coupled inexact
//! mode, and the Picard iteration for `−div(α(|∇u|²)∇u) = f`.
//!
//! Both modes use Jacobi preconditioning. In inexact mode the energy error of
//! an iterate is bounded by `s · ‖r‖_{D⁻¹} / λ^{1/2}` where `λ` estimates the
//! smallest eigenvalue of `D⁻¹A` (or of `D⁻¹` times the symmetric part) from
//! below by its smallest Ritz value, optionally capped by a hint, and `s` is a
//! safety factor.

use crate::assembly::{assemble, energy_matrix, energy_norm, DiscreteFunction, LinearSystem};
use crate::error::SolveError;
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;
use crate::sparse::{dot, norm2, CsrMatrix};
use serde::{Deserialize, Serialize};
use crate::clock::Stopwatch;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Exact,
    Inexact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// Relative residual tolerance of exact mode.
    pub tolerance: f64,
    /// `ϑ` of the inexact stopping rule `bound ≤ ϑ η`.
    pub vartheta: f64,
    /// Iteration cap; defaults to `3·dim + 100`.
    pub max_iterations: Option<usize>,
    pub safety: f64,
    /// Inexact mode evaluates its bound every this many iterations.
    pub check_every: usize,
    pub picard_tolerance: f64,
    pub picard_max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: SolverMode::Exact,
            tolerance: 1e-12,
            vartheta: 0.1,
            max_iterations: None,
            safety: 2.0,
            check_every: 5,
            picard_tolerance: 1e-10,
            picard_max_iterations: 100,
        }
    }
}

impl SolverConfig {
    pub fn inexact(vartheta: f64) -> Self {
        SolverConfig {
            mode: SolverMode::Inexact,
            vartheta,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.mode == SolverMode::Inexact && !(self.vartheta > 0.0 && self.vartheta < 1.0) {
            return Err(SolveError::InvalidVartheta(self.vartheta));
        }
        Ok(())
    }

    fn cap(&self, dim: usize) -> usize {
        self.max_iterations.unwrap_or(3 * dim + 100)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final algebraic residual `‖b − Ax‖₂`.
    pub residual: f64,
    /// Bound on the energy distance to the exact discrete solution.
    pub certified_bound: f64,
    /// Smallest-eigenvalue estimate used for the bound.
    pub min_eigenvalue: f64,
    pub estimator_evaluations: usize,
    pub picard_iterations: usize,
    pub wall_time: f64,
}

/// Solves to relative residual `config.tolerance`.
pub fn solve_exact(
    system: &LinearSystem,
    initial: Option<&[f64]>,
    config: &SolverConfig,
) -> Result<(DiscreteFunction, SolveReport), SolveError> {
    let mut never = |_: &DiscreteFunction| -> f64 { unreachable!() };
    solve_impl(system, initial, config, None, None, &mut never)
}

/// Stops as soon as the certified bound drops below `ϑ η(Ũ)`, where
/// `estimator` returns `η` of the expanded iterate. `eigen_hint` caps the
/// smallest-eigenvalue estimate (e.g. carried over from a coarser level).
pub fn solve_inexact(
    system: &LinearSystem,
    initial: Option<&[f64]>,
    config: &SolverConfig,
    eigen_hint: Option<f64>,
    estimator: &mut dyn FnMut(&DiscreteFunction) -> f64,
) -> Result<(DiscreteFunction, SolveReport), SolveError> {
    if !(config.vartheta > 0.0 && config.vartheta < 1.0) {
        return Err(SolveError::InvalidVartheta(config.vartheta));
    }
    solve_impl(system, initial, config, Some(config.vartheta), eigen_hint, estimator)
}

fn solve_impl(
    system: &LinearSystem,
    initial: Option<&[f64]>,
    config: &SolverConfig,
    vartheta: Option<f64>,
    eigen_hint: Option<f64>,
    estimator: &mut dyn FnMut(&DiscreteFunction) -> f64,
) -> Result<(DiscreteFunction, SolveReport), SolveError> {
    let start = Stopwatch::start();
    let n = system.dim();
    let mut x = match initial {
        Some(x0) => {
            assert_eq!(x0.len(), n, "initial guess has wrong length");
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut stop = InexactStop {
        vartheta,
        safety: config.safety,
        hint: eigen_hint,
        cached_eta: None,
        evaluations: 0,
        bound: f64::INFINITY,
        system,
        estimator,
    };
    let mut report = if system.symmetric {
        cg(&system.matrix, &system.rhs, &mut x, config, &mut stop)?
    } else {
        let lambda = min_eigenvalue_estimate(&system.matrix.symmetric_part());
        bicgstab(&system.matrix, &system.rhs, &mut x, config, lambda, &mut stop)?
    };
    report.estimator_evaluations = stop.evaluations;
    report.wall_time = start.seconds();
    Ok((system.expand(&x), report))
}

struct InexactStop<'a> {
    vartheta: Option<f64>,
    safety: f64,
    hint: Option<f64>,
    cached_eta: Option<f64>,
    evaluations: usize,
    bound: f64,
    system: &'a LinearSystem,
    estimator: &'a mut dyn FnMut(&DiscreteFunction) -> f64,
}

impl InexactStop<'_> {
    fn lambda(&self, ritz: Option<f64>) -> Option<f64> {
        match (ritz, self.hint) {
            (Some(r), Some(h)) => Some(r.min(h)),
            (r, h) => r.or(h),
        }
    }

    /// Whether the iterate `x` with `r·D⁻¹r = rz` can be accepted.
    fn accept(&mut self, x: &[f64], rz: f64, ritz: Option<f64>) -> bool {
        let Some(vartheta) = self.vartheta else { return false };
        let Some(lambda) = self.lambda(ritz).filter(|&l| l > 0.0) else { return false };
        self.bound = self.safety * (rz.max(0.0) / lambda).sqrt();
        // The estimator changes slowly between iterates; only re-evaluate it
        // once the bound is below the last known value.
        if let Some(eta) = self.cached_eta {
            if self.bound > vartheta * eta {
                return false;
            }
        }
        let eta = (self.estimator)(&self.system.expand(x));
        self.evaluations += 1;
        self.cached_eta = Some(eta);
        // η = 0 cannot certify anything; fall back to the exact tolerance.
        eta > 0.0 && self.bound <= vartheta * eta
    }
}

fn jacobi(a: &CsrMatrix) -> Vec<f64> {
    a.diagonal().iter().map(|&d| 1.0 / d).collect()
}

fn cg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    config: &SolverConfig,
    stop: &mut InexactStop,
) -> Result<SolveReport, SolveError> {
    let n = b.len();
    let dinv = jacobi(a);
    let bnorm = norm2(b);
    let mut r = a.mul_vec(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut lanczos = Tridiagonal::default();
    let (mut alpha_prev, mut beta_prev) = (1.0, 0.0);
    let tol = config.tolerance * bnorm;
    let cap = config.cap(n);
    let finish = |it: usize, r: &[f64], stop: &InexactStop, lambda: f64| SolveReport {
        iterations: it,
        residual: norm2(r),
        certified_bound: stop.bound,
        min_eigenvalue: lambda,
        ..SolveReport::default()
    };
    if norm2(&r) <= tol || bnorm == 0.0 {
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            r.iter_mut().for_each(|v| *v = 0.0);
        }
        stop.bound = 0.0;
        return Ok(finish(0, &r, stop, stop.hint.unwrap_or(0.0)));
    }
    if stop.hint.is_some() && stop.accept(x, rz, None) {
        return Ok(finish(0, &r, stop, stop.hint.unwrap_or(0.0)));
    }
    for it in 1..=cap {
        a.mul_vec_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(SolveError::Breakdown(it));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        lanczos.diag.push(1.0 / alpha + beta_prev / alpha_prev);
        lanczos.off.push(beta.sqrt() / alpha);
        alpha_prev = alpha;
        beta_prev = beta;
        rz = rz_new;
        let rnorm = norm2(&r);
        if rnorm <= tol {
            let lambda = stop.lambda(Some(lanczos.min_eigenvalue())).unwrap_or(0.0);
            stop.bound = config.safety * (rz.max(0.0) / lambda).sqrt();
            return Ok(finish(it, &r, stop, lambda));
        }
        if stop.vartheta.is_some() && it % config.check_every.max(1) == 0 {
            let ritz = lanczos.min_eigenvalue();
            if stop.accept(x, rz, Some(ritz)) {
                let lambda = stop.lambda(Some(ritz)).unwrap_or(0.0);
                return Ok(finish(it, &r, stop, lambda));
            }
        }
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::NotConverged {
        iterations: cap,
        residual: norm2(&r) / bnorm,
    })
}

fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    config: &SolverConfig,
    lambda: f64,
    stop: &mut InexactStop,
) -> Result<SolveReport, SolveError> {
    let n = b.len();
    let dinv = jacobi(a);
    let bnorm = norm2(b);
    let tol = config.tolerance * bnorm;
    let mut r = a.mul_vec(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    let cap = config.cap(n);
    let lam = stop.lambda(Some(lambda)).unwrap_or(lambda);
    let rz = |r: &[f64]| r.iter().zip(&dinv).map(|(r, d)| r * r * d).sum::<f64>();
    let finish = |it: usize, r: &[f64], bound: f64| SolveReport {
        iterations: it,
        residual: norm2(r),
        certified_bound: bound,
        min_eigenvalue: lam,
        ..SolveReport::default()
    };
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(finish(0, &vec![0.0; n], 0.0));
    }
    if norm2(&r) <= tol {
        return Ok(finish(0, &r, config.safety * (rz(&r) / lam).sqrt()));
    }
    for it in 1..=cap {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            return Err(SolveError::Breakdown(it));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = dinv[i] * p[i];
        }
        a.mul_vec_into(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            return Err(SolveError::Breakdown(it));
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(finish(it, &s, config.safety * (rz(&s) / lam).sqrt()));
        }
        for i in 0..n {
            z[i] = dinv[i] * s[i];
        }
        a.mul_vec_into(&z, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(SolveError::Breakdown(it));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) <= tol {
            return Ok(finish(it, &r, config.safety * (rz(&r) / lam).sqrt()));
        }
        if stop.vartheta.is_some() && it % config.check_every.max(1) == 0 && stop.accept(x, rz(&r), Some(lambda)) {
            return Ok(finish(it, &r, stop.bound));
        }
        if omega == 0.0 {
            return Err(SolveError::Breakdown(it));
        }
    }
    Err(SolveError::NotConverged {
        iterations: cap,
        residual: norm2(&r) / bnorm,
    })
}

/// Symmetric tridiagonal matrix accumulated from the Lanczos relation.
#[derive(Default)]
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    /// Smallest eigenvalue by Sturm-sequence bisection.
    fn min_eigenvalue(&self) -> f64 {
        let m = self.diag.len();
        if m == 0 {
            return 0.0;
        }
        let off = |i: usize| if i < m - 1 { self.off[i].abs() } else { 0.0 };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let r = off(i) + if i > 0 { off(i - 1) } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        // Number of eigenvalues below `x`.
        let count = |x: f64| {
            let mut c = 0;
            let mut d = 1.0;
            for i in 0..m {
                let e2 = if i > 0 { off(i - 1).powi(2) } else { 0.0 };
                d = self.diag[i] - x - if i > 0 { e2 / d } else { 0.0 };
                if d == 0.0 {
                    d = -1e-300;
                }
                if d < 0.0 {
                    c += 1;
                }
            }
            c
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Smallest Ritz value of `D^{-1/2} A D^{-1/2}` for symmetric `A`, from a
/// Lanczos run started at `D^{1/2}·1` and stopped once the value settles.
pub fn min_eigenvalue_estimate(a: &CsrMatrix) -> f64 {
    let n = a.n_rows();
    let d: Vec<f64> = a.diagonal().iter().map(|v| v.sqrt()).collect();
    let mut q: Vec<f64> = d.clone();
    let nq = norm2(&q);
    q.iter_mut().for_each(|v| *v /= nq);
    let mut q_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut scaled = vec![0.0; n];
    let mut tri = Tridiagonal::default();
    let mut beta = 0.0;
    let mut last = f64::INFINITY;
    let steps = n.min(400);
    for k in 0..steps {
        for i in 0..n {
            scaled[i] = q[i] / d[i];
        }
        a.mul_vec_into(&scaled, &mut w);
        for i in 0..n {
            w[i] /= d[i];
        }
        let alpha = dot(&w, &q);
        for i in 0..n {
            w[i] -= alpha * q[i] + beta * q_prev[i];
        }
        tri.diag.push(alpha);
        let b = norm2(&w);
        tri.off.push(b);
        if k % 10 == 9 {
            let l = tri.min_eigenvalue();
            if (last - l).abs() <= 1e-4 * l.abs() {
                return l;
            }
            last = l;
        }
        if b <= 1e-14 * alpha.abs() {
            break;
        }
        for i in 0..n {
            q_prev[i] = q[i];
            q[i] = w[i] / b;
        }
        beta = b;
    }
    tri.min_eigenvalue()
}

/// Picard iteration `U^{j+1} = solve(A(U^j))`. In inexact mode (with an
/// estimator) it stops once the energy increment is at most `ϑ η(U^{j+1})`,
/// otherwise once the nonlinear residual is below `picard_tolerance`
/// relative to the right-hand side.
pub fn solve_nonlinear(
    mesh: &Mesh,
    problem: &ProblemSpec,
    initial: &DiscreteFunction,
    config: &SolverConfig,
    mut estimator: Option<&mut dyn FnMut(&DiscreteFunction) -> f64>,
) -> Result<(DiscreteFunction, SolveReport), SolveError> {
    let start = Stopwatch::start();
    initial.check_mesh(mesh)?;
    let energy = energy_matrix(mesh, problem)?;
    let inexact = config.mode == SolverMode::Inexact && estimator.is_some();
    let mut u = initial.clone();
    let mut report = SolveReport::default();
    let mut damping = 1.0;
    let mut last_increment = f64::INFINITY;
    let mut growth = 0;
    let inner = SolverConfig {
        mode: SolverMode::Exact,
        ..config.clone()
    };
    for j in 0..=config.picard_max_iterations {
        let system = assemble(mesh, problem, Some(&u))?;
        let x = system.restrict(&u);
        let ax = system.matrix.mul_vec(&x);
        let res: f64 = ax.iter().zip(&system.rhs).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
        let scale = norm2(&system.rhs).max(norm2(&ax));
        report.residual = res;
        if !inexact && (res <= config.picard_tolerance * scale || scale == 0.0) {
            report.picard_iterations = j;
            report.wall_time = start.seconds();
            return Ok((u, report));
        }
        if j == config.picard_max_iterations {
            break;
        }
        let (next, inner_report) = solve_exact(&system, Some(&x), &inner)?;
        report.iterations += inner_report.iterations;
        let mut values = u.values.clone();
        let mut diff = vec![0.0; values.len()];
        for i in 0..values.len() {
            diff[i] = damping * (next.values[i] - u.values[i]);
            values[i] += diff[i];
        }
        let increment = energy_norm(&energy, &diff);
        u = DiscreteFunction {
            mesh_id: mesh.id(),
            values,
        };
        if increment > last_increment {
            growth += 1;
            damping *= 0.5;
            if growth >= 5 {
                return Err(SolveError::NonContraction(j + 1));
            }
        } else {
            growth = 0;
        }
        last_increment = increment;
        report.certified_bound = increment;
        if inexact {
            let est = estimator.as_mut().unwrap();
            let eta = est(&u);
            report.estimator_evaluations += 1;
            if increment <= config.vartheta * eta || increment == 0.0 {
                report.picard_iterations = j + 1;
                report.wall_time = start.seconds();
                return Ok((u, report));
            }
        }
    }
    Err(SolveError::NotConverged {
        iterations: config.picard_max_iterations,
        residual: report.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{lshape, unit_square};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn one_by_one(a: f64, r: f64) -> LinearSystem {
        LinearSystem {
            matrix: CsrMatrix::from_triplets(1, 1, vec![(0, 0, a)]),
            rhs: vec![r],
            free: vec![0],
            dof_of_vertex: vec![0],
            lifting: vec![0.0],
            symmetric: true,
            mesh_id: 0,
        }
    }

    #[test]
    fn scalar_system() {
        let (u, rep) = solve_exact(&one_by_one(4.0, 3.0), None, &SolverConfig::default()).unwrap();
        assert_eq!(u.values, vec![0.75]);
        assert!(rep.iterations <= 1);
    }

    #[test]
    fn one_dof_square_matches_hand_galerkin_solution() {
        let p = ProblemSpec::by_name("square_sine").unwrap();
        let m = unit_square().uniform_refine();
        let s = assemble(&m, &p, None).unwrap();
        assert_eq!(s.dim(), 1);
        let (u, _) = solve_exact(&s, None, &SolverConfig::default()).unwrap();
        // Oracle: the centre hat has ∫|∇φ|² = 4 on this mesh; its load is
        // integrated with an independent midpoint rule, evaluating the hat
        // through signed areas of the containing triangle.
        let k = 4.0;
        let c = [0.5, 0.5];
        let area2 = |a: [f64; 2], b: [f64; 2], x: [f64; 2]| (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
        let nq = 400;
        let mut load = 0.0;
        for i in 0..nq {
            for j in 0..nq {
                let x = [(i as f64 + 0.5) / nq as f64, (j as f64 + 0.5) / nq as f64];
                let t = m.locate(x).unwrap();
                let v = m.coords(t);
                let hat = match v.iter().position(|&p| p == c) {
                    Some(i) => {
                        let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                        area2(a, b, x) / area2(a, b, c)
                    }
                    None => 0.0,
                };
                load += 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin() * hat / (nq * nq) as f64;
            }
        }
        let centre = m.vertices().iter().position(|x| *x == [0.5, 0.5]).unwrap();
        assert_eq!(s.matrix.get(0, 0), k);
        assert!((u.values[centre] - load / k).abs() < 1e-5, "{} vs {}", u.values[centre], load / k);
    }

    #[test]
    fn cg_reaches_tolerance_within_three_times_dimension() {
        let p = ProblemSpec::by_name("lshape_singular").unwrap();
        let mut m = (p.initial_mesh)();
        for _ in 0..3 {
            m = m.uniform_refine();
        }
        let s = assemble(&m, &p, None).unwrap();
        let cfg = SolverConfig::default();
        let (u, rep) = solve_exact(&s, None, &cfg).unwrap();
        assert!(rep.iterations <= 3 * s.dim());
        let x = s.restrict(&u);
        let r: Vec<f64> = s.matrix.mul_vec(&x).iter().zip(&s.rhs).map(|(a, b)| a - b).collect();
        assert!(norm2(&r) <= 1e-11 * norm2(&s.rhs));
        let (u2, rep2) = solve_exact(&s, None, &cfg).unwrap();
        assert_eq!(u2, u);
        assert_eq!(rep2.iterations, rep.iterations);
    }

    #[test]
    fn inexact_bound_covers_the_true_algebraic_error() {
        let p = ProblemSpec::by_name("lshape_singular").unwrap();
        let mut m = (p.initial_mesh)();
        for _ in 0..3 {
            m = m.uniform_refine();
        }
        let s = assemble(&m, &p, None).unwrap();
        let (exact, rep_exact) = solve_exact(&s, None, &SolverConfig::default()).unwrap();
        let eta = 0.05;
        let cfg = SolverConfig::inexact(0.1);
        let (approx, rep) = solve_inexact(&s, None, &cfg, None, &mut |_| eta).unwrap();
        assert!(rep.iterations < rep_exact.iterations);
        assert!(rep.certified_bound <= 0.1 * eta);
        let e: Vec<f64> = s.restrict(&exact).iter().zip(s.restrict(&approx)).map(|(a, b)| a - b).collect();
        let err = s.matrix.quadratic_form(&e).sqrt();
        assert!(err <= rep.certified_bound, "{err} > {}", rep.certified_bound);
    }

    #[test]
    fn min_eigenvalue_of_known_matrix() {
        // 1D Laplacian tridiag(−1, 2, −1) of size 50: λ_min(D⁻¹A) = 1 − cos(π/51).
        let n = 50;
        let mut trip = Vec::new();
        for i in 0..n as u32 {
            trip.push((i, i, 2.0));
            if i + 1 < n as u32 {
                trip.push((i, i + 1, -1.0));
                trip.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, trip);
        let l = min_eigenvalue_estimate(&a);
        let exact = 1.0 - (PI / 51.0).cos();
        assert!((l - exact).abs() < 1e-3 * exact, "{l} vs {exact}");
    }

    #[test]
    fn bicgstab_solves_convection_problem() {
        let p = ProblemSpec::by_name("lshape_convection").unwrap();
        let m = (p.initial_mesh)().uniform_refine().uniform_refine();
        let s = assemble(&m, &p, None).unwrap();
        assert!(!s.symmetric);
        let (u, _) = solve_exact(&s, None, &SolverConfig::default()).unwrap();
        let x = s.restrict(&u);
        let r: Vec<f64> = s.matrix.mul_vec(&x).iter().zip(&s.rhs).map(|(a, b)| a - b).collect();
        assert!(norm2(&r) <= 1e-11 * norm2(&s.rhs));
    }

    #[test]
    fn picard_on_linear_problem_takes_one_step() {
        let mut p = ProblemSpec::by_name("lshape_nonlinear").unwrap();
        p.nonlinearity.as_mut().unwrap().alpha = Arc::new(|_| 1.0);
        let m = (p.initial_mesh)();
        let (u, rep) = solve_nonlinear(&m, &p, &DiscreteFunction::zeros(&m), &SolverConfig::default(), None).unwrap();
        assert_eq!(rep.picard_iterations, 1);
        let (_, rep) = solve_nonlinear(&m, &p, &u, &SolverConfig::default(), None).unwrap();
        assert_eq!(rep.picard_iterations, 0);
    }

    #[test]
    fn picard_reaches_affine_fixed_point() {
        let mut p = ProblemSpec::by_name("lshape_nonlinear").unwrap();
        p.dirichlet = Some(Arc::new(|x| 0.5 + x[0] - 2.0 * x[1]));
        p.dirichlet_gradient = None;
        let m = lshape().uniform_refine().uniform_refine();
        let (u, rep) = solve_nonlinear(&m, &p, &DiscreteFunction::zeros(&m), &SolverConfig::default(), None).unwrap();
        assert!(rep.picard_iterations <= 30);
        for (x, v) in m.vertices().iter().zip(&u.values) {
            assert!((v - (0.5 + x[0] - 2.0 * x[1])).abs() < 1e-9);
        }
    }
}
