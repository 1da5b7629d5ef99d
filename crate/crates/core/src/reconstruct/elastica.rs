//! Inextensible elastica through pixel constraints.
//!
//! The curve is a polyline of `M` equal segments of length `h`, described by
//! its segment angles `theta_j`. The first and last segments are clamped
//! horizontal. The discrete bending energy is `sum (theta_{j+1} - theta_j)^2 / h`.
//!
//! Constraints are the far end point and the height of the polyline at each
//! interior constraint abscissa. They are enforced exactly by a Newton-KKT
//! (SQP) iteration globalized with an l1 merit function, Armijo backtracking
//! and a second-order correction. The Lagrangian Hessian is approximated by
//! its tridiagonal part, so each step costs `O(M m^2)` for `m` constraints.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SymTridiag;

/// Iterations without a 10% drop in constraint violation before the penalty
/// weight is raised.
const STALL_LIMIT: usize = 5;

/// Numerical settings for the elastica solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticaSettings {
    /// Segments per interval between consecutive constraints (at least 50).
    pub nodes_per_span: usize,
    /// Relative tolerance on constraint residuals and KKT stationarity.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ElasticaSettings {
    fn default() -> Self {
        Self {
            nodes_per_span: 50,
            tolerance: 1e-9,
            max_iterations: 200,
        }
    }
}

impl ElasticaSettings {
    pub const MIN_NODES_PER_SPAN: usize = 50;

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_span < Self::MIN_NODES_PER_SPAN {
            return Err(Error::invalid(
                "nodes_per_span",
                format!(
                    "{} is below the minimum of {}",
                    self.nodes_per_span,
                    Self::MIN_NODES_PER_SPAN
                ),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be finite and > 0"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be >= 1"));
        }
        Ok(())
    }
}

/// A solved (or best-effort) elastica.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticaSolution {
    /// `M + 1` nodes from the first constraint to the last.
    pub nodes: Vec<[f64; 2]>,
    pub segment_length: f64,
    /// Discrete bending energy `sum dtheta^2 / h` (units of 1/length).
    pub energy: f64,
    /// Interior constraint residuals followed by the end-point x and y residuals.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// l1 merit value at every accepted iterate.
    pub merit_history: Vec<f64>,
    /// Indices into `merit_history` where the penalty weight was raised.
    pub penalty_changes: Vec<usize>,
    angles: Vec<f64>,
    monotone: bool,
}

impl ElasticaSolution {
    fn from_angles(problem: &Problem, angles: Vec<f64>) -> Self {
        let nodes = problem.nodes(&angles);
        let (c, _) = problem.constraints(&angles, &nodes);
        let monotone = nodes.windows(2).all(|w| w[1][0] > w[0][0]);
        Self {
            energy: bending_energy(&angles, problem.h),
            nodes,
            segment_length: problem.h,
            residuals: c,
            iterations: 0,
            merit_history: Vec::new(),
            penalty_changes: Vec::new(),
            angles,
            monotone,
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn arc_length(&self) -> f64 {
        self.segment_length * self.angles.len() as f64
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Height of the curve above abscissa `x`, `None` outside the curve.
    ///
    /// Between nodes the curve is a cubic Hermite interpolant in `x` using
    /// node slopes from the mean of the adjacent segment angles.
    pub fn height_at(&self, x: f64) -> Option<f64> {
        let n = self.nodes.len();
        let (lo, hi) = if self.monotone {
            (self.nodes[0][0], self.nodes[n - 1][0])
        } else {
            self.nodes
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                    (a.min(p[0]), b.max(p[0]))
                })
        };
        // The far end lands on its constraint only to solver tolerance.
        let slack = 1e-6 * self.segment_length;
        if x < lo - slack || x > hi + slack {
            return None;
        }
        let x = x.clamp(lo, hi);
        let j = if self.monotone {
            let k = self.nodes.partition_point(|p| p[0] <= x);
            k.clamp(1, n - 1) - 1
        } else {
            let j = self
                .nodes
                .windows(2)
                .position(|w| w[0][0].min(w[1][0]) <= x && x <= w[0][0].max(w[1][0]))?;
            if self.nodes[j + 1][0] <= self.nodes[j][0] {
                // Overhanging segment: fall back to the chord.
                let [x0, y0] = self.nodes[j];
                let [x1, y1] = self.nodes[j + 1];
                let t = if x1 == x0 { 0.0 } else { (x - x0) / (x1 - x0) };
                return Some(y0 + t * (y1 - y0));
            }
            j
        };
        let [x0, y0] = self.nodes[j];
        let [x1, y1] = self.nodes[j + 1];
        let dx = x1 - x0;
        let t = (x - x0) / dx;
        let m0 = self.node_slope(j);
        let m1 = self.node_slope(j + 1);
        let t2 = t * t;
        let t3 = t2 * t;
        Some(
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + t) * dx * m0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * dx * m1,
        )
    }

    fn node_slope(&self, k: usize) -> f64 {
        let m = self.angles.len();
        let theta = if k == 0 {
            self.angles[0]
        } else if k == m {
            self.angles[m - 1]
        } else {
            0.5 * (self.angles[k - 1] + self.angles[k])
        };
        theta.tan()
    }
}

fn bending_energy(angles: &[f64], h: f64) -> f64 {
    angles
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .sum::<f64>()
        / h
}

/// Solve for the minimal-bending-energy curve through `constraints` whose
/// arc length exceeds the chord `x_last - x_first` by `excess`.
pub fn solve_elastica_1d(
    constraints: &[(f64, f64)],
    excess: f64,
    settings: &ElasticaSettings,
) -> Result<ElasticaSolution> {
    solve_elastica_guided(constraints, excess, settings, None)
}

/// As [`solve_elastica_1d`], with an optional target profile used only to
/// place the initial bulge when every constraint lies at the same height.
pub fn solve_elastica_guided(
    constraints: &[(f64, f64)],
    excess: f64,
    settings: &ElasticaSettings,
    guide: Option<&dyn Fn(f64) -> f64>,
) -> Result<ElasticaSolution> {
    settings.validate()?;
    if constraints.len() < 2 {
        return Err(Error::invalid(
            "constraints",
            "need at least two constraints",
        ));
    }
    if constraints
        .iter()
        .any(|c| !(c.0.is_finite() && c.1.is_finite()))
    {
        return Err(Error::invalid("constraints", "coordinates must be finite"));
    }
    if let Some(i) = constraints.windows(2).position(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid(
            "constraints",
            format!("x must be strictly increasing (entry {})", i + 1),
        ));
    }
    if !(excess.is_finite() && excess >= 0.0) {
        return Err(Error::invalid(
            "excess_length",
            format!("{excess} must be finite and >= 0"),
        ));
    }

    let problem = Problem::new(constraints, excess, settings);
    let poly: f64 = constraints
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .sum();
    let flat = constraints.iter().all(|c| c.1 == constraints[0].1);
    if flat && excess == 0.0 {
        let mut sol = ElasticaSolution::from_angles(&problem, vec![0.0; problem.m_seg]);
        sol.merit_history.push(0.0);
        return Ok(sol);
    }
    let slack = 1e-12 * problem.span;
    if problem.length <= poly + slack {
        return Err(Error::InfeasibleExcess {
            required: poly - problem.span,
            available: excess,
        });
    }

    let start = problem.initial_guess(guide);
    problem.sqp(start, settings)
}

struct Problem {
    x0: f64,
    y0: f64,
    x_end: f64,
    y_end: f64,
    interior: Vec<(f64, f64)>,
    // Arc positions of all constraints in the straight-line scaling.
    arc_marks: Vec<f64>,
    m_seg: usize,
    h: f64,
    span: f64,
    length: f64,
}

impl Problem {
    fn new(constraints: &[(f64, f64)], excess: f64, settings: &ElasticaSettings) -> Self {
        let (x0, y0) = constraints[0];
        let (x_end, y_end) = *constraints.last().unwrap();
        let span = x_end - x0;
        let length = span + excess;
        let m_seg = settings.nodes_per_span * (constraints.len() - 1);
        let scale = length / span;
        Self {
            x0,
            y0,
            x_end,
            y_end,
            interior: constraints[1..constraints.len() - 1].to_vec(),
            arc_marks: constraints.iter().map(|c| (c.0 - x0) * scale).collect(),
            m_seg,
            h: length / m_seg as f64,
            span,
            length,
        }
    }

    fn n_free(&self) -> usize {
        self.m_seg - 2
    }

    fn n_cons(&self) -> usize {
        self.interior.len() + 2
    }

    fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.m_seg);
        theta.push(0.0);
        theta.extend_from_slice(free);
        theta.push(0.0);
        theta
    }

    fn nodes(&self, theta: &[f64]) -> Vec<[f64; 2]> {
        let mut nodes = Vec::with_capacity(theta.len() + 1);
        let (mut x, mut y) = (self.x0, self.y0);
        nodes.push([x, y]);
        for &t in theta {
            x += self.h * t.cos();
            y += self.h * t.sin();
            nodes.push([x, y]);
        }
        nodes
    }

    /// Segment on which interior constraint abscissa `xi` is evaluated: the
    /// first segment spanning it, or the nearest one if the curve misses it.
    fn segment_for(&self, xi: f64, nodes: &[[f64; 2]]) -> usize {
        let m = nodes.len() - 1;
        for j in 0..m {
            let (a, b) = (nodes[j][0], nodes[j + 1][0]);
            if a.min(b) <= xi && xi <= a.max(b) {
                return j;
            }
        }
        if xi < nodes[0][0] {
            0
        } else {
            m - 1
        }
    }

    fn constraints(&self, theta: &[f64], nodes: &[[f64; 2]]) -> (Vec<f64>, Vec<usize>) {
        let mut c = Vec::with_capacity(self.n_cons());
        let mut seg = Vec::with_capacity(self.interior.len());
        for &(xi, yi) in &self.interior {
            let j = self.segment_for(xi, nodes);
            let [xj, yj] = nodes[j];
            c.push(yj + theta[j].tan() * (xi - xj) - yi);
            seg.push(j);
        }
        let last = nodes[nodes.len() - 1];
        c.push(last[0] - self.x_end);
        c.push(last[1] - self.y_end);
        (c, seg)
    }

    /// Constraint Jacobian with respect to the free angles (rows = constraints).
    fn jacobian(&self, theta: &[f64], nodes: &[[f64; 2]], seg: &[usize]) -> DMatrix<f64> {
        let n = self.n_free();
        let k_int = self.interior.len();
        let h = self.h;
        let mut jac = DMatrix::zeros(k_int + 2, n);
        for (row, (&(xi, _), &j)) in self.interior.iter().zip(seg).enumerate() {
            let cj = theta[j].cos();
            for k in 1..j.min(self.m_seg - 1) {
                jac[(row, k - 1)] = h * (theta[k] - theta[j]).cos() / cj;
            }
            if j >= 1 && j <= n {
                jac[(row, j - 1)] = (xi - nodes[j][0]) / (cj * cj);
            }
        }
        for k in 1..=n {
            jac[(k_int, k - 1)] = -h * theta[k].sin();
            jac[(k_int + 1, k - 1)] = h * theta[k].cos();
        }
        jac
    }

    fn energy_gradient(&self, theta: &[f64]) -> DVector<f64> {
        let s = 2.0 / self.h;
        DVector::from_iterator(
            self.n_free(),
            (1..=self.n_free()).map(|k| s * (2.0 * theta[k] - theta[k - 1] - theta[k + 1])),
        )
    }

    fn energy_hessian(&self) -> SymTridiag {
        let n = self.n_free();
        SymTridiag {
            diag: vec![4.0 / self.h; n],
            off: vec![-2.0 / self.h; n.saturating_sub(1)],
        }
    }

    /// Diagonal of the constraint curvature weighted by the multipliers.
    fn constraint_curvature(
        &self,
        theta: &[f64],
        nodes: &[[f64; 2]],
        seg: &[usize],
        lambda: &DVector<f64>,
    ) -> Vec<f64> {
        let n = self.n_free();
        let k_int = self.interior.len();
        let h = self.h;
        let (lx, ly) = (lambda[k_int], lambda[k_int + 1]);
        let mut d: Vec<f64> = (1..=n)
            .map(|k| -h * (lx * theta[k].cos() + ly * theta[k].sin()))
            .collect();
        for (row, (&(xi, _), &j)) in self.interior.iter().zip(seg).enumerate() {
            let li = lambda[row];
            let cj = theta[j].cos();
            for k in 1..j.min(self.m_seg - 1) {
                d[k - 1] -= li * h * (theta[k] - theta[j]).sin() / cj;
            }
            if j >= 1 && j <= n {
                d[j - 1] += li * 2.0 * theta[j].tan() * (xi - nodes[j][0]) / (cj * cj);
            }
        }
        d
    }

    fn merit(&self, theta: &[f64], nu: f64) -> (f64, Vec<f64>, Vec<[f64; 2]>) {
        let nodes = self.nodes(theta);
        let (c, _) = self.constraints(theta, &nodes);
        let l1: f64 = c.iter().map(|v| v.abs()).sum();
        (bending_energy(theta, self.h) + nu * l1, c, nodes)
    }

    fn sqp(&self, start: Vec<f64>, settings: &ElasticaSettings) -> Result<ElasticaSolution> {
        let m = self.n_cons();
        let tol = settings.tolerance;
        // Relative stationarity stalls near 1e-7 in double precision once the
        // constraints hold to 1e-12, so optimality is checked to sqrt(tol).
        let stat_tol = tol.sqrt();
        let mut theta = self.expand(&start);
        let mut nodes = self.nodes(&theta);
        let (mut c, mut seg) = self.constraints(&theta, &nodes);
        let mut jac = self.jacobian(&theta, &nodes, &seg);
        let mut grad = self.energy_gradient(&theta);
        let mut lambda =
            least_squares_multipliers(&jac, &grad).unwrap_or_else(|| DVector::zeros(m));
        let mut pen = Penalty::default();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let hess = self.energy_hessian();
        let reg0 = 1e-6 * 4.0 / self.h;

        for iter in 0..=settings.max_iterations {
            let viol = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let stat = stationarity(&jac, &grad, &lambda);
            let feasible = viol <= tol * self.span;
            // Feasible iterates rank ahead of infeasible ones.
            let score = if feasible {
                stat
            } else {
                1.0 + viol / self.span
            };
            if best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((score, theta.clone()));
            }
            if feasible && stat <= stat_tol {
                let mut sol = ElasticaSolution::from_angles(self, theta);
                sol.iterations = iter;
                sol.merit_history = pen.history;
                sol.penalty_changes = pen.changes;
                return Ok(sol);
            }
            if iter == settings.max_iterations {
                break;
            }

            // Hessian of the Lagrangian (tridiagonal part), convexified until
            // the KKT matrix has the inertia of a local minimizer. If the line
            // search then fails, the model is too poor and the shift is raised.
            let curv = self.constraint_curvature(&theta, &nodes, &seg, &lambda);
            let mut tau_floor = 0.0;
            let mut accepted = None;
            while tau_floor <= 1e20 * reg0 {
                let mut tau = tau_floor;
                let step = loop {
                    let w = SymTridiag {
                        diag: hess
                            .diag
                            .iter()
                            .zip(&curv)
                            .map(|(a, b)| a + b + tau)
                            .collect(),
                        off: hess.off.clone(),
                    };
                    if let Some(s) = kkt_step(&w, &jac, &grad, &c) {
                        break Some((s, w));
                    }
                    tau = if tau == 0.0 { reg0 } else { 10.0 * tau };
                    if tau > 1e20 * reg0 {
                        break None;
                    }
                };
                let Some(((p, lambda_new), w)) = step else {
                    break;
                };
                let model = StepModel {
                    p: &p,
                    w: &w,
                    grad: &grad,
                    jac: &jac,
                    c: &c,
                    lambda: &lambda_new,
                };
                if let Some(next) = self.line_search(&theta, &model, &mut pen) {
                    accepted = Some((next, lambda_new));
                    break;
                }
                tau_floor = (100.0 * tau).max(reg0);
            }
            let Some((next, lambda_new)) = accepted else {
                break;
            };
            let (phi_next, _, _) = self.merit(&next, pen.nu);
            pen.history.push(phi_next);

            theta = next;
            nodes = self.nodes(&theta);
            (c, seg) = self.constraints(&theta, &nodes);
            let viol_next = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !feasible && viol_next > 0.9 * viol {
                pen.stalled += 1;
            } else {
                pen.stalled = 0;
            }
            jac = self.jacobian(&theta, &nodes, &seg);
            grad = self.energy_gradient(&theta);
            lambda = lambda_new;
        }

        let (_, best_theta) = best.expect("at least one iterate");
        let mut sol = ElasticaSolution::from_angles(self, best_theta);
        sol.iterations = settings.max_iterations;
        sol.merit_history = pen.history;
        sol.penalty_changes = pen.changes;
        let residual = sol.max_residual();
        Err(Error::NotConverged {
            iterations: settings.max_iterations,
            residual,
            best: Box::new(sol),
        })
    }

    /// Update the penalty weight for the step, then backtrack on the l1 merit
    /// (trying a second-order correction at the full step).
    fn line_search(&self, theta: &[f64], model: &StepModel, pen: &mut Penalty) -> Option<Vec<f64>> {
        let n = self.n_free();
        let p = model.p;
        let l1: f64 = model.c.iter().map(|v| v.abs()).sum();
        let gp = model.grad.dot(p);
        let wp = model.w.mul(p.as_slice());
        let pwp: f64 = p.iter().zip(&wp).map(|(a, b)| a * b).sum();
        let mut required = model.lambda.amax();
        if l1 > 0.0 {
            let sigma = if pwp > 0.0 { 0.5 * pwp } else { 0.0 };
            required = required.max((gp + sigma) / (0.5 * l1));
        }
        if pen.nu < required {
            pen.nu = 2.0 * required + 1e-12;
            pen.changes.push(pen.history.len());
        } else if pen.stalled >= STALL_LIMIT {
            // Feasibility is not improving: weight it more.
            pen.nu *= 10.0;
            pen.stalled = 0;
            pen.changes.push(pen.history.len());
        }
        let nu = pen.nu;
        let phi0 = bending_energy(theta, self.h) + nu * l1;
        if pen.history.is_empty() || pen.changes.last() == Some(&pen.history.len()) {
            pen.history.push(phi0);
        }
        let slope = gp - nu * l1;

        let trial = |alpha: f64, extra: Option<&DVector<f64>>| {
            let mut t = theta.to_vec();
            for k in 0..n {
                t[k + 1] += alpha * p[k] + extra.map_or(0.0, |e| e[k]);
            }
            t
        };
        let armijo = |phi: f64, alpha: f64| phi <= phi0 + 1e-4 * alpha * slope;

        let full = trial(1.0, None);
        let (phi_full, c_full, _) = self.merit(&full, nu);
        if armijo(phi_full, 1.0) {
            return Some(full);
        }
        if let Some(corr) = soc_step(model.jac, &c_full) {
            let t = trial(1.0, Some(&corr));
            if armijo(self.merit(&t, nu).0, 1.0) {
                return Some(t);
            }
        }
        let mut alpha = 0.5;
        while alpha > 1e-12 {
            let t = trial(alpha, None);
            if armijo(self.merit(&t, nu).0, alpha) {
                return Some(t);
            }
            alpha *= 0.5;
        }
        None
    }

    /// Starting angles from the small-slope problem: minimize the quadratic
    /// energy subject to the linearized height constraints and the quadratic
    /// excess `(h/2)|theta|^2 = L - span`. The multiplier `sigma` of the
    /// excess constraint is found by bisection.
    fn initial_guess(&self, guide: Option<&dyn Fn(f64) -> f64>) -> Vec<f64> {
        let n = self.n_free();
        let h = self.h;
        let target = self.length - self.span;
        let k_int = self.interior.len();
        let mut b = DMatrix::zeros(k_int + 1, n);
        let mut r = DVector::zeros(k_int + 1);
        for (row, &(_, yi)) in self.interior.iter().enumerate() {
            let s = self.arc_marks[row + 1];
            let j = ((s / h).floor() as usize).min(self.m_seg - 1);
            for k in 1..j.min(n + 1) {
                b[(row, k - 1)] = h;
            }
            if j >= 1 && j <= n {
                b[(row, j - 1)] = s - j as f64 * h;
            }
            r[row] = yi - self.y0;
        }
        for k in 0..n {
            b[(k_int, k)] = h;
        }
        r[k_int] = self.y_end - self.y0;

        let scale_r = r.amax();
        if scale_r <= 1e-14 * self.span {
            return self.bulge(guide);
        }

        let hess = self.energy_hessian();
        let solve = |sigma: f64| -> Option<(Vec<f64>, f64)> {
            let a = SymTridiag {
                diag: hess.diag.iter().map(|d| d - sigma * h).collect(),
                off: hess.off.clone(),
            };
            let lu = a.factor()?;
            let mut ainv_bt = DMatrix::zeros(n, k_int + 1);
            for row in 0..=k_int {
                let col: Vec<f64> = b.row(row).iter().copied().collect();
                let sol = lu.solve(&col);
                ainv_bt.set_column(row, &DVector::from_vec(sol));
            }
            let mut s = &b * &ainv_bt;
            s = 0.5 * (&s + s.transpose());
            let pos = s
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .filter(|&&v| v > 0.0)
                .count();
            if a.negative_count() + pos != k_int + 1 {
                return None;
            }
            let mu = s.lu().solve(&r)?;
            let theta: Vec<f64> = (&ainv_bt * mu).iter().copied().collect();
            let e = 0.5 * h * theta.iter().map(|t| t * t).sum::<f64>();
            Some((theta, e))
        };

        let Some(at_zero) = solve(0.0) else {
            return vec![0.0; n];
        };
        let unit = 1.0 / (self.length * self.length);
        let (mut lo, mut hi);
        let mut best = at_zero.clone();
        if at_zero.1 >= target {
            hi = 0.0;
            lo = -unit;
            loop {
                match solve(lo) {
                    Some(s) if s.1 <= target => {
                        best = s;
                        break;
                    }
                    Some(s) => best = s,
                    None => {}
                }
                if lo < -1e12 * unit {
                    return best.0;
                }
                lo *= 2.0;
            }
        } else {
            lo = 0.0;
            hi = unit;
            loop {
                match solve(hi) {
                    Some(s) if s.1 < target => {
                        lo = hi;
                        best = s;
                        hi *= 2.0;
                    }
                    _ => break,
                }
                if hi > 1e12 * unit {
                    return best.0;
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match solve(mid) {
                Some(s) if s.1 <= target => {
                    lo = mid;
                    let close = (s.1 - target).abs() <= 1e-12 * target;
                    best = s;
                    if close {
                        break;
                    }
                }
                _ => hi = mid,
            }
        }
        best.0
    }

    /// Single upward raised-cosine bulge spanning one constraint interval,
    /// for constraints that carry no height information.
    fn bulge(&self, guide: Option<&dyn Fn(f64) -> f64>) -> Vec<f64> {
        let n = self.n_free();
        let target = self.length - self.span;
        if target <= 0.0 {
            return vec![0.0; n];
        }
        let spans = self.arc_marks.len() - 1;
        let mut pick = spans / 2;
        if let Some(g) = guide {
            let xs: Vec<f64> = std::iter::once(self.x0)
                .chain(self.interior.iter().map(|c| c.0))
                .chain(std::iter::once(self.x_end))
                .collect();
            let mut best = f64::NEG_INFINITY;
            for s in 0..spans {
                let v = (1..8)
                    .map(|q| g(xs[s] + (xs[s + 1] - xs[s]) * q as f64 / 8.0))
                    .fold(f64::NEG_INFINITY, f64::max);
                if v > best {
                    best = v;
                    pick = s;
                }
            }
        }
        let (a, b) = (self.arc_marks[pick], self.arc_marks[pick + 1]);
        let shape: Vec<f64> = (1..=n)
            .map(|k| {
                let s = (k as f64 + 0.5) * self.h;
                if s > a && s < b {
                    (std::f64::consts::TAU * (s - a) / (b - a)).sin()
                } else {
                    0.0
                }
            })
            .collect();
        let norm: f64 = shape.iter().map(|v| v * v).sum();
        let amp = (2.0 * target / (self.h * norm)).sqrt();
        shape.into_iter().map(|v| amp * v).collect()
    }
}

fn least_squares_multipliers(jac: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let jjt = jac * jac.transpose();
    let rhs = -(jac * grad);
    jjt.cholesky().map(|ch| ch.solve(&rhs))
}

fn stationarity(jac: &DMatrix<f64>, grad: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
    let jl = jac.transpose() * lambda;
    let r = grad + &jl;
    let denom = grad.amax().max(jl.amax());
    if denom == 0.0 {
        0.0
    } else {
        r.amax() / denom
    }
}

/// Newton-KKT step via the Schur complement `S = J W^-1 J^T`.
///
/// Returns `None` when `W` is singular or the KKT inertia is wrong.
/// l1 penalty weight and the merit values recorded for diagnostics.
#[derive(Default)]
struct Penalty {
    nu: f64,
    stalled: usize,
    history: Vec<f64>,
    changes: Vec<usize>,
}

/// A computed SQP step with the quantities the line search needs.
struct StepModel<'a> {
    p: &'a DVector<f64>,
    w: &'a SymTridiag,
    grad: &'a DVector<f64>,
    jac: &'a DMatrix<f64>,
    c: &'a [f64],
    lambda: &'a DVector<f64>,
}

fn kkt_step(
    w: &SymTridiag,
    jac: &DMatrix<f64>,
    grad: &DVector<f64>,
    c: &[f64],
) -> Option<(DVector<f64>, DVector<f64>)> {
    let (m, n) = jac.shape();
    let lu = w.factor()?;
    let mut z = DMatrix::zeros(n, m);
    for i in 0..m {
        let row: Vec<f64> = jac.row(i).iter().copied().collect();
        z.set_column(i, &DVector::from_vec(lu.solve(&row)));
    }
    let mut s = jac * &z;
    s = 0.5 * (&s + s.transpose());
    let pos = s
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&v| v > 0.0)
        .count();
    if w.negative_count() + pos != m {
        return None;
    }
    let winv_g = DVector::from_vec(lu.solve(grad.as_slice()));
    let rhs = DVector::from_column_slice(c) - jac * &winv_g;
    let lambda = s.lu().solve(&rhs)?;
    let p = -(winv_g + &z * &lambda);
    if p.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((p, lambda))
}

fn soc_step(jac: &DMatrix<f64>, c_trial: &[f64]) -> Option<DVector<f64>> {
    let jjt = jac * jac.transpose();
    let y = jjt.cholesky()?.solve(&DVector::from_column_slice(c_trial));
    Some(-(jac.transpose() * y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> ElasticaSettings {
        ElasticaSettings::default()
    }

    #[test]
    fn straight_line_for_flat_zero_excess() {
        let sol =
            solve_elastica_1d(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], 0.0, &settings()).unwrap();
        assert_eq!(sol.energy, 0.0);
        assert!(sol.nodes.iter().all(|p| p[1] == 0.0));
        assert!((sol.nodes.last().unwrap()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn settings_are_validated() {
        let s = ElasticaSettings {
            nodes_per_span: 10,
            ..settings()
        };
        assert!(solve_elastica_1d(&[(0.0, 0.0), (1.0, 0.0)], 0.1, &s).is_err());
    }

    #[test]
    fn infeasible_excess_is_reported() {
        let r = solve_elastica_1d(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)], 0.1, &settings());
        match r {
            Err(Error::InfeasibleExcess {
                required,
                available,
            }) => {
                assert!((required - (2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-12);
                assert_eq!(available, 0.1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_bump_satisfies_constraints() {
        let cons = [(0.0, 0.0), (30.0, 0.4), (60.0, 0.4), (90.0, 0.0)];
        let sol = solve_elastica_1d(&cons, 0.02, &settings()).unwrap();
        assert!(sol.max_residual() <= 1e-9 * 90.0);
        assert!((sol.arc_length() - 90.02).abs() < 1e-12);
        for w in sol.nodes.windows(2) {
            let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            assert!((len - sol.segment_length).abs() < 1e-12);
        }
        for &(x, y) in &cons[1..3] {
            assert!((sol.height_at(x).unwrap() - y).abs() < 1e-5);
        }
        // Symmetric data, symmetric curve.
        for x in [10.0, 25.0, 40.0] {
            let a = sol.height_at(x).unwrap();
            let b = sol.height_at(90.0 - x).unwrap();
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
        assert!(sol.height_at(45.0).unwrap() > 0.4);
    }

    #[test]
    fn merit_decreases_within_each_penalty_phase() {
        let cons = [
            (0.0, 0.0),
            (10.0, 1.0),
            (20.0, 2.5),
            (30.0, 0.5),
            (40.0, 0.0),
        ];
        let sol = solve_elastica_1d(&cons, 1.5, &settings()).unwrap();
        let mut bounds = sol.penalty_changes.clone();
        bounds.push(sol.merit_history.len());
        let mut start = 0;
        for &end in &bounds {
            for w in sol.merit_history[start..end].windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
            }
            start = end;
        }
    }

    #[test]
    fn zero_heights_with_excess_bulge_upward() {
        let cons = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)];
        let sol = solve_elastica_1d(&cons, 0.01, &settings()).unwrap();
        assert!(sol.height_at(1.5).unwrap() > 0.0);
        let guide = |x: f64| if x < 1.0 { 1.0 } else { 0.0 };
        let sol = solve_elastica_guided(&cons, 0.01, &settings(), Some(&guide)).unwrap();
        // The guide only seeds the start; the minimizer still spreads the
        // excess over every span.
        assert!(sol.height_at(0.5).unwrap() > 0.0);
        assert!(sol.max_residual() <= 1e-8);
    }

    #[test]
    fn unequal_end_heights() {
        let cons = [(0.0, 0.0), (1.0, 0.2), (2.0, 0.5)];
        let sol = solve_elastica_1d(&cons, 0.1, &settings()).unwrap();
        assert!(sol.max_residual() <= 1e-9 * 2.0);
    }
}
