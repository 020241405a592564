//! Convergence tables.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Errors below this are treated as dominated by round-off for solutions of
/// unit size; such rows are flagged and their rates are not meaningful.
pub const FLOATING_FLOOR: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub p: usize,
    /// Refinement level, starting at 1 for the base mesh.
    pub n: usize,
    pub error_u: f64,
    pub rate_u: Option<f64>,
    pub error_q: Option<f64>,
    pub rate_q: Option<f64>,
    pub floor: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

/// `log2(e[k-1] / e[k])` for `k >= 1`; `None` for the first entry.
pub fn rates(errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len()).map(|k| (k > 0).then(|| (errors[k - 1] / errors[k]).log2())).collect()
}

impl ConvergenceReport {
    /// Appends the rows of one degree from per-level errors.
    pub fn push_degree(&mut self, p: usize, errors_u: &[f64], errors_q: Option<&[f64]>) {
        let ru = rates(errors_u);
        let rq = errors_q.map(rates);
        for (k, &e) in errors_u.iter().enumerate() {
            let eq = errors_q.map(|q| q[k]);
            self.rows.push(ConvergenceRow {
                p,
                n: k + 1,
                error_u: e,
                rate_u: ru[k],
                error_q: eq,
                rate_q: rq.as_ref().and_then(|r| r[k]),
                floor: e < FLOATING_FLOOR || eq.is_some_and(|q| q < FLOATING_FLOOR),
            });
        }
    }

    pub fn degree(&self, p: usize) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(move |r| r.p == p)
    }

    /// Last reported rates `(rate_u, rate_q)` of degree `p`.
    pub fn final_rates(&self, p: usize) -> (Option<f64>, Option<f64>) {
        self.degree(p).last().map_or((None, None), |r| (r.rate_u, r.rate_q))
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.4}"));
        let mut s = String::from("p,n,error_u,rate_u,error_q,rate_q,floor\n");
        for r in &self.rows {
            let eq = r.error_q.map_or(String::new(), |x| format!("{x:.6e}"));
            let _ = writeln!(
                s,
                "{},{},{:.6e},{},{},{},{}",
                r.p,
                r.n,
                r.error_u,
                opt(r.rate_u),
                eq,
                opt(r.rate_q),
                if r.floor { "*" } else { "" }
            );
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
