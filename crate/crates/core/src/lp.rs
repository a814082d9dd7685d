//! Thin wrapper over the interior-point solver for the two linear programs in
//! the crate: `min cᵀx` subject to sparse rows `a·x ≤ b` and `a·x = b`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};

/// Sparse row as `(variable, coefficient)` pairs.
pub(crate) type Row = Vec<(usize, f64)>;

#[derive(Default)]
pub(crate) struct LinearProgram {
    cost: Vec<f64>,
    le: Vec<(Row, f64)>,
    eq: Vec<(Row, f64)>,
}

impl LinearProgram {
    pub fn new(vars: usize) -> Self {
        LinearProgram {
            cost: vec![0.0; vars],
            ..Self::default()
        }
    }

    pub fn set_cost(&mut self, var: usize, c: f64) {
        self.cost[var] = c;
    }

    pub fn le(&mut self, row: Row, rhs: f64) {
        self.le.push((row, rhs));
    }

    pub fn ge(&mut self, row: Row, rhs: f64) {
        self.le
            .push((row.into_iter().map(|(j, a)| (j, -a)).collect(), -rhs));
    }

    pub fn eq(&mut self, row: Row, rhs: f64) {
        self.eq.push((row, rhs));
    }

    /// Minimizer, or an error carrying `what` and `hint`.
    pub fn solve(&self, what: &str, hint: &str) -> Result<Vec<f64>> {
        let n = self.cost.len();
        let (mut ri, mut ci, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, (row, rhs)) in self.eq.iter().chain(&self.le).enumerate() {
            for &(j, a) in row {
                ri.push(i);
                ci.push(j);
                vals.push(a);
            }
            b.push(*rhs);
        }
        let m = b.len();
        let a = CscMatrix::new_from_triplets(m, n, ri, ci, vals);
        let p = CscMatrix::<f64>::zeros((n, n));
        let cones = [
            SupportedConeT::ZeroConeT(self.eq.len()),
            SupportedConeT::NonnegativeConeT(self.le.len()),
        ];
        let mut last = SolverStatus::Unsolved;
        // Retry with looser tolerances; callers verify the constraints they
        // rely on.
        for (tol, equilibrate) in [(1e-12, true), (1e-10, false), (1e-8, true), (1e-8, false)] {
            let settings = DefaultSettingsBuilder::default()
                .verbose(false)
                .max_iter(500)
                .equilibrate_enable(equilibrate)
                .tol_feas(tol)
                .tol_gap_abs(tol)
                .tol_gap_rel(tol)
                .build()
                .map_err(|e| Error::Numeric {
                    message: format!("{what}: {e}"),
                    hint: hint.into(),
                })?;
            let mut solver =
                DefaultSolver::new(&p, &self.cost, &a, &b, &cones, settings).map_err(|e| {
                    Error::Numeric {
                        message: format!("{what}: {e}"),
                        hint: hint.into(),
                    }
                })?;
            solver.solve();
            match solver.solution.status {
                SolverStatus::Solved | SolverStatus::AlmostSolved => {
                    return Ok(solver.solution.x.clone())
                }
                SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                    return Err(Error::Infeasible(format!("{what} has no feasible point")))
                }
                other => last = other,
            }
        }
        Err(Error::Numeric {
            message: format!("{what} stopped with status {last:?}"),
            hint: hint.into(),
        })
    }
}
