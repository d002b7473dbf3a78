//! SRJ cycles, level controllers, and convergence metrics.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::chebyshev::AmplificationPolynomial;
use crate::csvfmt::{self, real};
use crate::problems::ProblemInstance;
use crate::schemes::{generate_srj_scheme, level_scheme, SrjScheme, MAX_LEVEL};
use crate::sparsemat::{norm_l2, SparseMatrix};
use crate::{Error, Result};

/// Residual measure used for stopping and for the level controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoppingNorm {
    /// `||b - A x||_2`
    AbsoluteL2,
    /// `||b - A x||_2 / ||b - A x0||_2`
    RelativeL2,
    /// `||x_k - x_{k-1}||_inf` of the latest sweep.
    SolutionDiffInf,
}

impl StoppingNorm {
    pub fn name(self) -> &'static str {
        match self {
            StoppingNorm::AbsoluteL2 => "absolute_l2",
            StoppingNorm::RelativeL2 => "relative_l2",
            StoppingNorm::SolutionDiffInf => "solution_diff_inf",
        }
    }
}

impl std::str::FromStr for StoppingNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute_l2" | "abs" => Ok(StoppingNorm::AbsoluteL2),
            "relative_l2" | "rel" => Ok(StoppingNorm::RelativeL2),
            "solution_diff_inf" | "diff" => Ok(StoppingNorm::SolutionDiffInf),
            _ => Err(Error::Invalid(format!("unknown norm `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub norm: StoppingNorm,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl StoppingRule {
    pub fn new(norm: StoppingNorm, tolerance: f64, max_iterations: usize) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::Invalid(format!("tolerance {tolerance} must be positive")));
        }
        if max_iterations == 0 {
            return Err(Error::Invalid("max_iterations must be positive".into()));
        }
        Ok(Self {
            norm,
            tolerance,
            max_iterations,
        })
    }
}

/// Residual-ratio thresholds of the level controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Ratios above this raise the level.
    pub hi: f64,
    /// Ratios strictly between `lo` and `hi` lower the level.
    pub lo: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { hi: 0.4, lo: 0.2 }
    }
}

/// Next level under the default thresholds (0.4 / 0.2).
pub fn heuristic_next_level(ratio: f64, level: usize) -> usize {
    heuristic_next_level_with(ratio, level, Thresholds::default())
}

/// Raise above `hi`, lower strictly between `lo` and `hi`, otherwise keep.
/// A ratio exactly equal to `hi` keeps the level. Clamped to the ladder.
pub fn heuristic_next_level_with(ratio: f64, level: usize, t: Thresholds) -> usize {
    if ratio > t.hi {
        (level + 1).min(MAX_LEVEL)
    } else if ratio > t.lo && ratio < t.hi {
        level.saturating_sub(1)
    } else {
        level.min(MAX_LEVEL)
    }
}

/// `-ln(after / before) / m`.
pub fn average_convergence_rate(r_before: f64, r_after: f64, m: usize) -> Result<f64> {
    if !(r_before > 0.0 && r_after > 0.0) {
        return Err(Error::NonPositiveResidual {
            before: r_before,
            after: r_after,
        });
    }
    if m == 0 {
        return Err(Error::Invalid("cycle length must be positive".into()));
    }
    Ok(-(r_after / r_before).ln() / m as f64)
}

/// Spectral radius below which a scheme is treated as annihilating every
/// eigenmode exactly; [`asymptotic_rate`] then returns `f64::INFINITY`.
pub const ANNIHILATION_RADIUS: f64 = 1e-13;

/// `-ln(max |G_M(lambda)|) / M` over the supplied Jacobi eigenvalues.
///
/// Returns `f64::INFINITY` when the spectral radius falls under
/// [`ANNIHILATION_RADIUS`].
pub fn asymptotic_rate(jacobi_eigs: &[f64], m: usize) -> Result<f64> {
    if jacobi_eigs.is_empty() {
        return Err(Error::NoEigenvalues);
    }
    if m == 0 {
        return Err(Error::SchemeLength(0));
    }
    let poly = AmplificationPolynomial::new(m);
    let rho = jacobi_eigs
        .iter()
        .map(|&l| poly.eval(l).abs())
        .fold(0.0, f64::max);
    if rho < ANNIHILATION_RADIUS {
        return Ok(f64::INFINITY);
    }
    Ok(-rho.ln() / m as f64)
}

/// Iterate plus controller state carried between cycles.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub level: usize,
    pub prev_residual_ratio: Option<f64>,
    pub cycle_index: usize,
    /// Sweeps executed so far, summed over cycles.
    pub total_iterations: usize,
    /// `(total_iterations, residual)` after every sweep, when recording.
    pub residual_history: Vec<(usize, f64)>,
    /// Current value of the configured residual measure.
    pub residual: f64,
    pub norm: StoppingNorm,
    initial_l2: f64,
    record_history: bool,
}

impl SolverState {
    /// State at `x0`, with the residual measured in `norm`.
    ///
    /// Under [`StoppingNorm::SolutionDiffInf`] no sweep has happened yet, so
    /// the starting value is the step an unrelaxed Jacobi sweep would take,
    /// `||D^-1 (b - A x0)||_inf`.
    pub fn new(a: &SparseMatrix, b: &[f64], x0: Vec<f64>, norm: StoppingNorm) -> Result<Self> {
        for len in [b.len(), x0.len()] {
            if len != a.n() {
                return Err(Error::Dimension {
                    expected: a.n(),
                    got: len,
                });
            }
        }
        let mut r = vec![0.0; a.n()];
        a.residual_into(&x0, b, &mut r);
        let initial_l2 = norm_l2(&r);
        let mut state = Self {
            x: x0,
            level: 0,
            prev_residual_ratio: None,
            cycle_index: 0,
            total_iterations: 0,
            residual_history: Vec::new(),
            residual: 0.0,
            norm,
            initial_l2,
            record_history: false,
        };
        state.residual = state.static_measure(&r, &a.diagonal());
        Ok(state)
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }

    fn static_measure(&self, r: &[f64], diag: &[f64]) -> f64 {
        match self.norm {
            StoppingNorm::AbsoluteL2 => norm_l2(r),
            StoppingNorm::RelativeL2 => self.relative(norm_l2(r)),
            StoppingNorm::SolutionDiffInf => r
                .iter()
                .zip(diag)
                .fold(0.0, |m, (ri, di)| m.max((ri / di).abs())),
        }
    }

    fn relative(&self, l2: f64) -> f64 {
        if self.initial_l2 > 0.0 {
            l2 / self.initial_l2
        } else {
            l2
        }
    }
}

/// Summary of one executed cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleStats {
    pub level: Option<usize>,
    pub m: usize,
    /// Sweeps actually executed (fewer than `m` after an early exit).
    pub sweeps: usize,
    pub residual_before: f64,
    pub residual_after: f64,
    /// `residual_after / residual_before`; `None` when the cycle started from
    /// an exact solution.
    pub ratio: Option<f64>,
    /// The stopping tolerance was met inside this cycle.
    pub converged: bool,
}

/// Sweep engine that keeps `b - A x` current so each sweep costs one matvec.
struct Engine<'a> {
    a: &'a SparseMatrix,
    b: &'a [f64],
    inv_diag: Vec<f64>,
    r: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(a: &'a SparseMatrix, b: &'a [f64], x: &[f64]) -> Self {
        let mut r = vec![0.0; a.n()];
        a.residual_into(x, b, &mut r);
        Self {
            a,
            b,
            inv_diag: a.diagonal().iter().map(|d| 1.0 / d).collect(),
            r,
        }
    }

    /// One relaxed sweep; returns the new residual measure.
    fn sweep(&mut self, state: &mut SolverState, omega: f64) -> f64 {
        let mut step = 0.0f64;
        for ((xi, ri), di) in state.x.iter_mut().zip(&self.r).zip(&self.inv_diag) {
            let dx = omega * ri * di;
            *xi += dx;
            step = step.max(dx.abs());
        }
        self.a.residual_into(&state.x, self.b, &mut self.r);
        match state.norm {
            StoppingNorm::AbsoluteL2 => norm_l2(&self.r),
            StoppingNorm::RelativeL2 => state.relative(norm_l2(&self.r)),
            StoppingNorm::SolutionDiffInf => step,
        }
    }

    fn cycle(
        &mut self,
        state: &mut SolverState,
        scheme: &SrjScheme,
        stop: Option<&StoppingRule>,
    ) -> Result<CycleStats> {
        let before = state.residual;
        let mut stats = CycleStats {
            level: scheme.level,
            m: scheme.m,
            sweeps: 0,
            residual_before: before,
            residual_after: before,
            ratio: None,
            converged: before == 0.0,
        };
        if before == 0.0 {
            return Ok(stats);
        }
        for (k, omega) in scheme.ordered().enumerate() {
            let measure = self.sweep(state, omega);
            state.total_iterations += 1;
            stats.sweeps += 1;
            if !measure.is_finite() || state.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    cycle: state.cycle_index,
                    level: scheme.level,
                    m: scheme.m,
                    sweep: k,
                    omega,
                });
            }
            state.residual = measure;
            if state.record_history {
                state.residual_history.push((state.total_iterations, measure));
            }
            if let Some(rule) = stop {
                if measure < rule.tolerance {
                    stats.converged = true;
                    break;
                }
                if state.total_iterations >= rule.max_iterations {
                    break;
                }
            }
        }
        stats.residual_after = state.residual;
        let ratio = state.residual / before;
        stats.ratio = Some(ratio);
        state.prev_residual_ratio = Some(ratio);
        state.cycle_index += 1;
        Ok(stats)
    }
}

/// Runs every sweep of `scheme` from `state`, in its application order.
///
/// Residuals are measured in `state.norm`; the ratio of the measure after
/// and before becomes `state.prev_residual_ratio`. A state whose residual is
/// already zero is left untouched and reported as converged.
pub fn run_cycle(
    a: &SparseMatrix,
    b: &[f64],
    state: &mut SolverState,
    scheme: &SrjScheme,
) -> Result<CycleStats> {
    if b.len() != a.n() || state.x.len() != a.n() {
        return Err(Error::Dimension {
            expected: a.n(),
            got: if b.len() != a.n() { b.len() } else { state.x.len() },
        });
    }
    Engine::new(a, b, &state.x).cycle(state, scheme, None)
}

/// How the next cycle's scheme is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    /// Start at level 0 and move by the residual-ratio rule.
    Heuristic(Thresholds),
    /// Start at level 0 and go up one level per cycle.
    Increasing,
    /// Repeat the SRJ scheme of this length.
    Fixed(usize),
    /// Unrelaxed Jacobi sweeps.
    Jacobi,
    /// Repeat a supplied scheme, typically a Chebyshev scheme fitted to the
    /// problem's eigenvalue bounds.
    Cjm(SrjScheme),
}

impl Controller {
    pub fn heuristic() -> Self {
        Controller::Heuristic(Thresholds::default())
    }

    pub fn name(&self) -> String {
        match self {
            Controller::Heuristic(t) if *t == Thresholds::default() => "heuristic".into(),
            Controller::Heuristic(t) => format!("heuristic({},{})", t.hi, t.lo),
            Controller::Increasing => "increasing".into(),
            Controller::Fixed(m) => format!("fixed:{m}"),
            Controller::Jacobi => "jacobi".into(),
            Controller::Cjm(s) => format!("cjm:{}", s.m),
        }
    }
}

/// One row of a solve report.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub level: Option<usize>,
    pub m: usize,
    pub sweeps: usize,
    pub residual_before: f64,
    pub residual_after: f64,
    /// Average rate over the executed sweeps; infinite if the residual hit
    /// zero.
    pub average_rate: f64,
    pub cum_iters: usize,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub controller: String,
    pub norm: StoppingNorm,
    pub converged: bool,
    pub total_iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub cycles: Vec<CycleRecord>,
    /// `(iteration, residual)` after every sweep.
    pub trace: Vec<(usize, f64)>,
    pub solution: Vec<f64>,
    pub wall_time: Duration,
}

impl SolveReport {
    /// Level of every cycle that ran on the ladder.
    pub fn levels(&self) -> Vec<usize> {
        self.cycles.iter().filter_map(|c| c.level).collect()
    }

    /// Per-cycle CSV with a trailing `total` row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        csvfmt::header(
            &mut w,
            &["cycle", "level", "M", "res_before", "res_after", "avg_rate", "cum_iters"],
        )?;
        for (i, c) in self.cycles.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                i,
                c.level.map(|l| l.to_string()).unwrap_or_default(),
                c.m,
                real(c.residual_before),
                real(c.residual_after),
                real(c.average_rate),
                c.cum_iters
            )?;
        }
        let overall = rate_or_inf(self.initial_residual, self.final_residual, self.total_iterations);
        writeln!(
            w,
            "total,,{},{},{},{},{}",
            if self.converged { "converged" } else { "not_converged" },
            real(self.initial_residual),
            real(self.final_residual),
            real(overall),
            self.total_iterations
        )?;
        Ok(())
    }

    /// Per-iteration residual trace.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        csvfmt::header(&mut w, &["iteration", "residual"])?;
        writeln!(w, "0,{}", real(self.initial_residual))?;
        for &(it, r) in &self.trace {
            writeln!(w, "{},{}", it, real(r))?;
        }
        Ok(())
    }
}

fn rate_or_inf(before: f64, after: f64, sweeps: usize) -> f64 {
    if sweeps == 0 || before <= 0.0 {
        0.0
    } else if after <= 0.0 {
        f64::INFINITY
    } else {
        -(after / before).ln() / sweeps as f64
    }
}

fn jacobi_scheme() -> SrjScheme {
    SrjScheme {
        m: 1,
        omegas: vec![1.0],
        application_order: vec![0],
        level: None,
    }
}

/// Solves `problem` with the chosen controller.
///
/// The stopping rule is checked after every sweep, so the last cycle may be
/// cut short; the iteration count includes every executed sweep.
pub fn solve(
    problem: &ProblemInstance,
    controller: &Controller,
    stopping: &StoppingRule,
) -> Result<SolveReport> {
    let start = Instant::now();
    let a = &problem.matrix;
    let b = &problem.rhs;
    let mut state = SolverState::new(a, b, problem.x0.clone(), stopping.norm)?.with_history();
    let initial_residual = state.residual;
    let mut engine = Engine::new(a, b, &state.x);

    let fixed = match controller {
        Controller::Fixed(m) => Some(generate_srj_scheme(*m)?),
        Controller::Jacobi => Some(jacobi_scheme()),
        Controller::Cjm(s) => Some(s.clone()),
        Controller::Heuristic(_) | Controller::Increasing => None,
    };

    let mut cycles = Vec::new();
    let mut converged = initial_residual < stopping.tolerance;
    while !converged && state.total_iterations < stopping.max_iterations {
        let scheme = match &fixed {
            Some(s) => s,
            None => level_scheme(state.level)?,
        };
        let stats = engine.cycle(&mut state, scheme, Some(stopping))?;
        converged = stats.converged;
        cycles.push(CycleRecord {
            level: stats.level,
            m: stats.m,
            sweeps: stats.sweeps,
            residual_before: stats.residual_before,
            residual_after: stats.residual_after,
            average_rate: rate_or_inf(stats.residual_before, stats.residual_after, stats.sweeps),
            cum_iters: state.total_iterations,
        });
        if let Some(ratio) = stats.ratio {
            state.level = match controller {
                Controller::Heuristic(t) => heuristic_next_level_with(ratio, state.level, *t),
                Controller::Increasing => (state.level + 1).min(MAX_LEVEL),
                _ => state.level,
            };
        }
    }

    Ok(SolveReport {
        controller: controller.name(),
        norm: stopping.norm,
        converged,
        total_iterations: state.total_iterations,
        initial_residual,
        final_residual: state.residual,
        cycles,
        trace: std::mem::take(&mut state.residual_history),
        solution: state.x,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::poisson_1d;
    use crate::sparsemat::dense_jacobi_eigenvalues;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn heuristic_rule() {
        assert_eq!(heuristic_next_level(0.5, 3), 4);
        assert_eq!(heuristic_next_level(0.3, 5), 4);
        assert_eq!(heuristic_next_level(0.1, 5), 5);
        assert_eq!(heuristic_next_level(0.3, 0), 0);
        assert_eq!(heuristic_next_level(0.4, 7), 7);
        assert_eq!(heuristic_next_level(0.2, 7), 7);
        assert_eq!(heuristic_next_level(0.9, MAX_LEVEL), MAX_LEVEL);
        assert_eq!(heuristic_next_level(0.0, 2), 2);
    }

    #[test]
    fn average_rate_examples() {
        assert!((average_convergence_rate(1.0, (-1.0f64).exp(), 1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(average_convergence_rate(1.0, 1.0, 9).unwrap(), 0.0);
        let r = average_convergence_rate(2.0, 1.0, 2).unwrap();
        assert!((r - 0.34657359).abs() < 1e-8);
        assert!(average_convergence_rate(0.0, 1.0, 1).is_err());
        assert!(average_convergence_rate(1.0, -1.0, 1).is_err());
    }

    #[test]
    fn asymptotic_rate_examples() {
        assert!((asymptotic_rate(&[0.0], 1).unwrap() - 3f64.ln()).abs() < 1e-12);
        let roots = AmplificationPolynomial::new(5).roots();
        assert_eq!(asymptotic_rate(&roots, 5).unwrap(), f64::INFINITY);
        assert!(matches!(asymptotic_rate(&[], 3), Err(Error::NoEigenvalues)));
    }

    #[test]
    fn single_factor_cycle_is_one_sweep() {
        let p = poisson_1d(6).unwrap();
        let mut st = SolverState::new(&p.matrix, &p.rhs, vec![0.1; 6], StoppingNorm::AbsoluteL2).unwrap();
        let s = level_scheme(0).unwrap();
        let stats = run_cycle(&p.matrix, &p.rhs, &mut st, s).unwrap();
        let want = p.matrix.weighted_jacobi_sweep(&[0.1; 6], &p.rhs, 2.0 / 3.0).unwrap();
        for (a, b) in st.x.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14 * b.abs().max(1.0));
        }
        assert_eq!(stats.sweeps, 1);
        assert_eq!(st.total_iterations, 1);
        assert_eq!(st.cycle_index, 1);
        assert_eq!(st.prev_residual_ratio, stats.ratio);
    }

    #[test]
    fn cycle_error_matches_dense_product() {
        let n = 30;
        let p = poisson_1d(n).unwrap();
        let a = p.matrix.to_dense().unwrap();
        let exact = a.clone().lu().solve(&DVector::from_vec(p.rhs.clone())).unwrap();
        let scheme = level_scheme(5).unwrap();
        let bj = p.matrix.dense_jacobi_matrix().unwrap();
        let mut prod = DMatrix::<f64>::identity(n, n);
        for w in scheme.ordered() {
            prod = (DMatrix::<f64>::identity(n, n) * (1.0 - w) + &bj * w) * prod;
        }
        let x0: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let e0 = DVector::from_vec(x0.clone()) - &exact;
        let predicted = &prod * e0;
        let mut st = SolverState::new(&p.matrix, &p.rhs, x0, StoppingNorm::AbsoluteL2).unwrap();
        run_cycle(&p.matrix, &p.rhs, &mut st, scheme).unwrap();
        let err = DVector::from_vec(st.x.clone()) - &exact;
        let diff = (&err - &predicted).norm();
        assert!(diff <= 1e-9 * predicted.norm(), "diff {diff}");
    }

    #[test]
    fn exact_start_short_circuits() {
        let p = poisson_1d(4).unwrap();
        let a = p.matrix.to_dense().unwrap();
        let exact = a.lu().solve(&DVector::from_vec(p.rhs.clone())).unwrap();
        // Make the start exact in floating point by choosing b = A x.
        let x: Vec<f64> = exact.iter().copied().collect();
        let b = p.matrix.matvec(&x).unwrap();
        let mut st = SolverState::new(&p.matrix, &b, x.clone(), StoppingNorm::AbsoluteL2).unwrap();
        assert_eq!(st.residual, 0.0);
        let stats = run_cycle(&p.matrix, &b, &mut st, level_scheme(3).unwrap()).unwrap();
        assert!(stats.converged);
        assert_eq!(stats.ratio, None);
        assert_eq!(stats.sweeps, 0);
        assert_eq!(st.x, x);
    }

    #[test]
    fn one_by_one_systems() {
        let a = SparseMatrix::from_triplets(1, &[(0, 0, 4.0)]).unwrap();
        let p = ProblemInstance::new(a, vec![2.0], vec![0.0], StoppingNorm::AbsoluteL2, "1x1").unwrap();
        let rule = StoppingRule::new(StoppingNorm::AbsoluteL2, 1e-12, 10_000).unwrap();
        let jac = solve(&p, &Controller::Jacobi, &rule).unwrap();
        assert!(jac.converged);
        assert_eq!(jac.total_iterations, 1);
        for c in [Controller::heuristic(), Controller::Increasing, Controller::Fixed(3)] {
            let r = solve(&p, &c, &rule).unwrap();
            assert!(r.converged, "{}", c.name());
            assert!((r.solution[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn stops_within_cycle_and_never_reports_above_tolerance() {
        let p = poisson_1d(50).unwrap();
        let rule = StoppingRule::new(StoppingNorm::AbsoluteL2, 1e-6, 100_000).unwrap();
        let r = solve(&p, &Controller::Fixed(63), &rule).unwrap();
        assert!(r.converged);
        assert!(r.final_residual < 1e-6);
        let last = r.cycles.last().unwrap();
        assert!(last.sweeps <= 63);
        assert_eq!(r.total_iterations, r.trace.last().unwrap().0);
        let check = crate::sparsemat::residual_l2(&p.matrix, &r.solution, &p.rhs).unwrap();
        assert!(check < 1e-6);
    }

    #[test]
    fn max_iterations_reported_unconverged() {
        let p = poisson_1d(100).unwrap();
        let rule = StoppingRule::new(StoppingNorm::AbsoluteL2, 1e-7, 1000).unwrap();
        let r = solve(&p, &Controller::Jacobi, &rule).unwrap();
        assert!(!r.converged);
        assert_eq!(r.total_iterations, 1000);
    }

    #[test]
    fn heuristic_is_deterministic() {
        let p = poisson_1d(40).unwrap();
        let rule = StoppingRule::new(StoppingNorm::AbsoluteL2, 1e-7, 100_000).unwrap();
        let a = solve(&p, &Controller::heuristic(), &rule).unwrap();
        let b = solve(&p, &Controller::heuristic(), &rule).unwrap();
        assert_eq!(a.cycles, b.cycles);
        assert_eq!(a.solution, b.solution);
    }

    #[test]
    fn fixed_scheme_ratio_tends_to_spectral_radius() {
        for n in [10usize, 20, 30] {
            let p = poisson_1d(n).unwrap();
            let b = &p.rhs;
            let eigs = dense_jacobi_eigenvalues(&p.matrix).unwrap();
            for m in [1usize, 2, 3, 5] {
                let poly = AmplificationPolynomial::new(m);
                let rho = eigs.iter().map(|&l| poly.eval(l).abs()).fold(0.0, f64::max);
                let scheme = generate_srj_scheme(m).unwrap();
                let mut st = SolverState::new(&p.matrix, b, p.x0.clone(), StoppingNorm::AbsoluteL2).unwrap();
                let mut last = 0.0;
                for _ in 0..10 {
                    last = run_cycle(&p.matrix, b, &mut st, &scheme).unwrap().ratio.unwrap();
                }
                assert!((last - rho).abs() < 0.05 * rho, "n={n} M={m}: {last} vs {rho}");
            }
        }
    }

    #[test]
    fn report_csv_layout() {
        let p = poisson_1d(10).unwrap();
        let rule = StoppingRule::new(StoppingNorm::AbsoluteL2, 1e-7, 100_000).unwrap();
        let r = solve(&p, &Controller::heuristic(), &rule).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# schema=1");
        assert_eq!(lines[1], "cycle,level,M,res_before,res_after,avg_rate,cum_iters");
        assert_eq!(lines.len(), r.cycles.len() + 3);
        let trailer = lines.last().unwrap();
        assert!(trailer.starts_with("total,,converged,"));
        assert!(trailer.ends_with(&format!(",{}", r.total_iterations)));
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), r.total_iterations + 3);
    }
}
