//! High-accuracy reference integrator.
//!
//! [`integrate_on`] drives an embedded Dormand-Prince 5(4) pair with
//! proportional step control and lands on every requested grid time by
//! clipping the step — grid values are integrated to, never interpolated.
//! The computation is pure f64 arithmetic in a fixed order, so identical
//! inputs produce bit-identical output. [`rk4_fixed`] is a deliberately
//! boring classical Runge-Kutta used as a cross-check oracle in tests.

use crate::error::{Error, Result};
use crate::problems::OdeSystem;
use std::io::Write;

/// Uniform time grid: row `k` at `origin + k * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub origin: f64,
    pub step: f64,
    pub count: usize,
}

impl TimeGrid {
    /// `count` rows covering `[0, horizon)` with step `horizon / count`
    /// (the collocation layout: row k at `k * horizon / count`).
    pub fn collocation(horizon: f64, count: usize) -> Self {
        TimeGrid {
            origin: 0.0,
            step: horizon / count as f64,
            count,
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.step
    }
}

/// Solution samples of an n-component system on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub problem_id: String,
    pub grid: TimeGrid,
    pub dimension: usize,
    /// Row-major `count x dimension`.
    pub values: Vec<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Right-hand-side evaluations spent producing this solution.
    pub rhs_evaluations: u64,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

impl GridSolution {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dimension..(k + 1) * self.dimension]
    }

    /// Column `l` as an owned series.
    pub fn component(&self, l: usize) -> Vec<f64> {
        (0..self.grid.count)
            .map(|k| self.values[k * self.dimension + l])
            .collect()
    }

    /// CSV with header `t,u0,...,u{n-1}`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "t")?;
        for l in 0..self.dimension {
            write!(out, ",u{l}")?;
        }
        writeln!(out)?;
        for k in 0..self.grid.count {
            write!(out, "{:.16e}", self.grid.time(k))?;
            for v in self.row(k) {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau (DOPRI5): 7 stages, FSAL, 5th-order propagation
// with embedded 4th-order error estimate.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// b - b_hat: weights of the embedded error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

struct Dopri5<'a> {
    sys: &'a OdeSystem,
    rel_tol: f64,
    abs_tol: f64,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_next: Vec<f64>,
    rhs_evals: u64,
    accepted: u64,
    rejected: u64,
}

impl<'a> Dopri5<'a> {
    fn new(sys: &'a OdeSystem, rel_tol: f64, abs_tol: f64) -> Self {
        let n = sys.dimension();
        Dopri5 {
            sys,
            rel_tol,
            abs_tol,
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_stage: vec![0.0; n],
            y_next: vec![0.0; n],
            rhs_evals: 0,
            accepted: 0,
            rejected: 0,
        }
    }

    fn eval(&mut self, y: &[f64], t: f64, stage: usize) -> Result<()> {
        self.rhs_evals += 1;
        let k = &mut self.k[stage];
        self.sys.rhs(y, t, k)
    }

    /// Weighted RMS of the embedded error estimate; <= 1 means accept.
    fn error_norm(&self, y: &[f64], h: f64) -> f64 {
        let n = y.len();
        let mut acc = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, w) in E.iter().enumerate() {
                e += w * self.k[s][i];
            }
            e *= h;
            let sc = self.abs_tol + self.rel_tol * y[i].abs().max(self.y_next[i].abs());
            let r = e / sc;
            acc += r * r;
        }
        (acc / n as f64).sqrt()
    }

    /// One attempted step from (t, y) with size h. k[0] must hold f(t, y).
    /// On success y and k[0] are advanced (FSAL).
    fn try_step(&mut self, t: f64, y: &mut [f64], h: f64) -> Result<Option<f64>> {
        let n = y.len();
        let a_rows: [&[f64]; 6] = [&A2, &A3, &A4, &A5, &A6, &A7];
        for (row, a) in a_rows.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (s, c) in a.iter().enumerate() {
                    acc += c * self.k[s][i];
                }
                self.y_stage[i] = y[i] + h * acc;
            }
            let stage = row + 1;
            let y_stage = std::mem::take(&mut self.y_stage);
            self.eval(&y_stage, t + C[stage] * h, stage)?;
            self.y_stage = y_stage;
        }
        // stage 7 argument is the 5th-order solution itself (FSAL)
        self.y_next.copy_from_slice(&self.y_stage);
        let err = self.error_norm(y, h);
        if err <= 1.0 {
            self.accepted += 1;
            y.copy_from_slice(&self.y_next);
            self.k.swap(0, 6);
            for v in y.iter() {
                if !v.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite state at t = {}",
                        t + h
                    )));
                }
            }
            Ok(Some(err))
        } else {
            self.rejected += 1;
            Ok(None)
        }
    }

    /// Initial step heuristic from the local derivative scale.
    fn initial_step(&mut self, y: &[f64], t: f64, t_end: f64) -> Result<f64> {
        let n = y.len();
        let sc = |i: usize, yi: f64| self.abs_tol + self.rel_tol * yi.abs();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..n {
            let s = sc(i, y[i]);
            d0 += (y[i] / s).powi(2);
            d1 += (self.k[0][i] / s).powi(2);
        }
        d0 = (d0 / n as f64).sqrt();
        d1 = (d1 / n as f64).sqrt();
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(t_end - t);
        // one Euler probe to estimate the second derivative scale
        let mut y1 = vec![0.0; n];
        for i in 0..n {
            y1[i] = y[i] + h0 * self.k[0][i];
        }
        self.eval(&y1, t + h0, 1)?;
        let mut d2 = 0.0;
        for i in 0..n {
            let s = sc(i, y[i]);
            d2 += ((self.k[1][i] - self.k[0][i]) / s).powi(2);
        }
        d2 = (d2 / n as f64).sqrt() / h0;
        let h1 = if d1.max(d2) < 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(t_end - t))
    }
}

/// Integrates `problem` and samples it on `grid`. Every grid time is hit
/// exactly by clipping the adaptive step.
pub fn integrate_on(problem: &OdeSystem, grid: TimeGrid, rel_tol: f64, abs_tol: f64) -> Result<GridSolution> {
    if grid.count < 2 {
        return Err(Error::config("grid must have at least 2 points".into()));
    }
    if !(rel_tol > 0.0 && rel_tol <= 1e-2 && abs_tol > 0.0 && abs_tol <= 1e-2) {
        return Err(Error::config(format!(
            "tolerances must lie in (0, 1e-2], got rel {rel_tol} abs {abs_tol}"
        )));
    }
    if grid.origin != 0.0 {
        return Err(Error::config("reference grids start at t = 0".into()));
    }
    let n = problem.dimension();
    let t_end = grid.time(grid.count - 1);
    let min_step = 1e-14 * t_end.max(problem.horizon());

    let mut solver = Dopri5::new(problem, rel_tol, abs_tol);
    let mut y = problem.initial_state().to_vec();
    let mut values = Vec::with_capacity(grid.count * n);
    values.extend_from_slice(&y);

    let mut t = 0.0;
    solver.eval(&y.clone(), t, 0)?;
    let mut h = solver.initial_step(&y, t, t_end)?;

    for row in 1..grid.count {
        let target = grid.time(row);
        while t < target {
            let clipped = h.min(target - t);
            if clipped < min_step {
                return Err(Error::StepUnderflow { t, step: clipped });
            }
            match solver.try_step(t, &mut y, clipped)? {
                Some(err) => {
                    t = if clipped == target - t { target } else { t + clipped };
                    let fac = if err == 0.0 {
                        FAC_MAX
                    } else {
                        (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                    };
                    h = clipped * fac;
                }
                None => {
                    let err = solver.error_norm(&y, clipped);
                    h = clipped * (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
                }
            }
        }
        values.extend_from_slice(&y);
    }

    Ok(GridSolution {
        problem_id: problem.id().to_string(),
        grid,
        dimension: n,
        values,
        rel_tol,
        abs_tol,
        rhs_evaluations: solver.rhs_evals,
        accepted_steps: solver.accepted,
        rejected_steps: solver.rejected,
    })
}

/// `count` rows at `k * X / count` for `k = 0 .. count-1` — the collocation
/// layout the initializers consume (the last row sits one step short of the
/// horizon).
pub fn integrate_to_grid(
    problem: &OdeSystem,
    count: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<GridSolution> {
    integrate_on(
        problem,
        TimeGrid::collocation(problem.horizon(), count),
        rel_tol,
        abs_tol,
    )
}

/// Classical fixed-step 4th-order Runge-Kutta over `[0, horizon]`.
///
/// Rows at `k * step`; the horizon is rounded to a whole number of steps.
/// Test oracle only — no adaptivity, no error control.
pub fn rk4_fixed(problem: &OdeSystem, step: f64, horizon: f64) -> Result<GridSolution> {
    if !(step > 0.0) {
        return Err(Error::config(format!("step must be positive, got {step}")));
    }
    let n_steps = (horizon / step).round() as usize;
    let n = problem.dimension();
    let mut y = problem.initial_state().to_vec();
    let mut values = Vec::with_capacity((n_steps + 1) * n);
    values.extend_from_slice(&y);
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut evals = 0u64;
    for m in 0..n_steps {
        let t = m as f64 * step;
        problem.rhs(&y, t, &mut k1)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * step * k1[i];
        }
        problem.rhs(&tmp, t + 0.5 * step, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * step * k2[i];
        }
        problem.rhs(&tmp, t + 0.5 * step, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + step * k3[i];
        }
        problem.rhs(&tmp, t + step, &mut k4)?;
        evals += 4;
        for i in 0..n {
            y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        values.extend_from_slice(&y);
    }
    Ok(GridSolution {
        problem_id: problem.id().to_string(),
        grid: TimeGrid {
            origin: 0.0,
            step,
            count: n_steps + 1,
        },
        dimension: n,
        values,
        rel_tol: 0.0,
        abs_tol: 0.0,
        rhs_evaluations: evals,
        accepted_steps: n_steps as u64,
        rejected_steps: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{harmonic_exact, OdeSystem};

    #[test]
    fn constant_problem_stays_put() {
        let sys = OdeSystem::new("still", vec![5.0, -2.0], 1.0, |_u, _t, out| {
            out.fill(0.0);
            Ok(())
        })
        .unwrap();
        let sol = rk4_fixed(&sys, 0.125, 1.0).unwrap();
        for k in 0..sol.grid.count {
            assert_eq!(sol.row(k), &[5.0, -2.0]);
        }
        let sol = integrate_to_grid(&sys, 2, 1e-9, 1e-9).unwrap();
        assert_eq!(sol.row(0), &[5.0, -2.0]);
        assert_eq!(sol.row(1), &[5.0, -2.0]);
    }

    #[test]
    fn first_row_is_initial_state() {
        let sys = OdeSystem::harmonic(1.0);
        let sol = integrate_to_grid(&sys, 2, 1e-10, 1e-10).unwrap();
        assert_eq!(sol.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn rk4_harmonic_accuracy_and_order() {
        let sys = OdeSystem::harmonic(1.0);
        // accuracy at a fine step
        let sol = rk4_fixed(&sys, 1e-4, 100.0).unwrap();
        let mut worst = 0.0_f64;
        for k in (0..sol.grid.count).step_by(997) {
            let exact = harmonic_exact(sol.grid.time(k), 1.0);
            let row = sol.row(k);
            worst = worst.max((row[0] - exact[0]).abs().max((row[1] - exact[1]).abs()));
        }
        assert!(worst <= 1e-9, "fine-step deviation {worst}");
        // order-4 convergence: halving the step cuts the error ~16x
        let err_at = |h: f64| {
            let sol = rk4_fixed(&sys, h, 100.0).unwrap();
            let last = sol.row(sol.grid.count - 1);
            let exact = harmonic_exact(100.0, 1.0);
            ((last[0] - exact[0]).powi(2) + (last[1] - exact[1]).powi(2)).sqrt()
        };
        let ratio = err_at(1e-2) / err_at(5e-3);
        assert!(
            (12.0..=20.0).contains(&ratio),
            "convergence ratio {ratio} outside [12, 20]"
        );
    }

    #[test]
    fn adaptive_harmonic_tracks_exact_solution() {
        let sys = OdeSystem::harmonic(1.0);
        let sol = integrate_to_grid(&sys, 20_001, 1e-12, 1e-12).unwrap();
        let mut worst = 0.0_f64;
        for k in 0..sol.grid.count {
            let exact = harmonic_exact(sol.grid.time(k), 1.0);
            let row = sol.row(k);
            worst = worst.max((row[0] - exact[0]).abs().max((row[1] - exact[1]).abs()));
        }
        assert!(worst <= 1e-8, "max deviation {worst}");
    }

    #[test]
    fn adaptive_agrees_with_rk4_on_lorenz_terminal_state() {
        let sys = OdeSystem::lorenz(10.0, 28.0, 8.0 / 3.0);
        let adaptive = integrate_to_grid(&sys, 20_000, 1e-12, 1e-12).unwrap();
        let horizon = adaptive.grid.time(adaptive.grid.count - 1);
        let oracle = rk4_fixed(&sys, 1e-5, horizon).unwrap();
        let a = adaptive.row(adaptive.grid.count - 1);
        let b = oracle.row(oracle.grid.count - 1);
        for i in 0..3 {
            let rel = (a[i] - b[i]).abs() / b[i].abs();
            assert!(rel <= 1e-4, "component {i}: {} vs {} (rel {rel})", a[i], b[i]);
        }
    }

    #[test]
    fn adaptive_and_fixed_agree_on_slingshot() {
        let sys = OdeSystem::slingshot(crate::problems::SlingshotParams::default());
        let adaptive = integrate_to_grid(&sys, 4000, 1e-10, 1e-10).unwrap();
        let horizon = adaptive.grid.time(adaptive.grid.count - 1);
        let oracle = rk4_fixed(&sys, 1e-6, horizon).unwrap();
        let a = adaptive.row(adaptive.grid.count - 1);
        let b = oracle.row(oracle.grid.count - 1);
        for i in 0..4 {
            assert!(
                (a[i] - b[i]).abs() <= 1e-9 * (1.0 + b[i].abs()),
                "component {i}: {} vs {}",
                a[i],
                b[i]
            );
        }
    }

    #[test]
    fn deterministic_repeat_is_bit_identical() {
        let sys = OdeSystem::lorenz(10.0, 28.0, 8.0 / 3.0);
        let one = integrate_to_grid(&sys, 512, 1e-10, 1e-10).unwrap();
        let two = integrate_to_grid(&sys, 512, 1e-10, 1e-10).unwrap();
        assert_eq!(one.values.len(), two.values.len());
        for (a, b) in one.values.iter().zip(&two.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(one.rhs_evaluations, two.rhs_evaluations);
    }

    #[test]
    fn domain_error_carries_time() {
        // slingshot driven into h <= 0 by a huge amplitude
        let p = crate::problems::SlingshotParams {
            amplitude: 1e6,
            ..Default::default()
        };
        let sys = OdeSystem::slingshot(p);
        match integrate_to_grid(&sys, 100, 1e-9, 1e-9) {
            Err(Error::RhsDomain { t, .. }) => assert!(t >= 0.0),
            Err(Error::StepUnderflow { .. }) => {}
            other => panic!("expected a domain/underflow error, got {other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let sys = OdeSystem::harmonic(1.0);
        let sol = integrate_to_grid(&sys, 4, 1e-9, 1e-9).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,u0,u1"));
        assert_eq!(lines.count(), 4);
        assert!(text.contains("e0") || text.contains("e-"));
    }

    #[test]
    fn tolerance_bounds_enforced() {
        let sys = OdeSystem::harmonic(1.0);
        assert!(integrate_to_grid(&sys, 10, 0.5, 1e-9).is_err());
        assert!(integrate_to_grid(&sys, 10, 1e-9, 0.0).is_err());
        assert!(integrate_to_grid(&sys, 1, 1e-9, 1e-9).is_err());
    }
}
