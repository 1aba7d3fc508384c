//! Bounded-variable two-phase primal simplex on a dense tableau.
//!
//! Variables carry native lower/upper bounds (including free and fixed), so
//! bound rows never enter the constraint matrix. Every row gets a slack
//! (inequalities only) and an artificial column; the artificial block doubles
//! as an always-current copy of the basis inverse, which makes row duals and
//! appended columns cheap. Phase 1 minimizes the total artificial mass,
//! phase 2 the negated objective (the engine minimizes internally and
//! reports in maximization terms).
//!
//! Numerical discipline, in order of importance:
//! * rows are equilibrated and the objective normalized at load time;
//! * the ratio test is a two-pass scheme that spends up to half the
//!   feasibility tolerance to pick the largest eligible pivot;
//! * pricing is most-negative-reduced-cost, switching to Bland's rule after
//!   a run of degenerate steps;
//! * the tableau, basic values and reduced costs are refactorized from the
//!   original data at Bland entry, periodically, and before trusting an
//!   unbounded ray, so accumulated elimination error cannot survive;
//! * a claimed optimum is only accepted after the reduced costs are
//!   recomputed from scratch.
//!
//! The tableau is column-major: a pivot skips every column with a zero entry
//! in the pivot row, and appending a column is a plain push.

use crate::mip::{MilpModel, Sense, VarKind};
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

/// Process-wide counters for coarse profiling (nanoseconds and counts).
pub static STAT_PIVOT_NS: AtomicU64 = AtomicU64::new(0);
pub static STAT_REFACTOR_NS: AtomicU64 = AtomicU64::new(0);
pub static STAT_BUILD_NS: AtomicU64 = AtomicU64::new(0);
pub static STAT_PIVOTS: AtomicU64 = AtomicU64::new(0);
pub static STAT_REFACTORS: AtomicU64 = AtomicU64::new(0);
pub static STAT_SOLVES: AtomicU64 = AtomicU64::new(0);

const ENTER_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-7;
const REFACTOR_PERIOD: u64 = 2_000;
/// Working feasibility window at a fresh (re)factorization.
const EXPAND_BASE: f64 = 0.25 * FEAS_TOL;
/// Window growth per pivot; guarantees a strictly positive step each
/// iteration, which rules out cycling without Bland's rule.
const EXPAND_STEP: f64 = 2.5e-12;
/// Refactor and shrink the window back once it reaches this size.
const EXPAND_LIMIT: f64 = 0.5 * FEAS_TOL;
const SNAP: f64 = 1e-11;

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("iteration limit reached after {0} pivots; the tableau is likely cycling or ill-conditioned")]
    IterationLimit(u64),
    #[error("no acceptable pivot found (candidates below {PIVOT_TOL:e}); numerical breakdown")]
    NumericalBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Loc {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    FreeAtZero,
}

fn initial_loc(lo: f64, hi: f64) -> Loc {
    if lo > f64::NEG_INFINITY {
        Loc::AtLower
    } else if hi < f64::INFINITY {
        Loc::AtUpper
    } else {
        Loc::FreeAtZero
    }
}

enum StepEnd {
    Moved,
    PhaseDone,
    Unbounded,
}

pub struct SimplexEngine {
    rows: usize,
    /// Structural columns (model variables plus appended columns).
    n_struct: usize,
    ncols: usize,
    /// Column-major tableau: entry (r, j) at `tab[j * rows + r]`.
    tab: Vec<f64>,
    /// Original scaled matrix columns (sparse), the refactorization source.
    orig_cols: Vec<Vec<(u32, f64)>>,
    /// Scaled right-hand sides.
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Minimization costs (negated normalized objective) for phase 2.
    cost: Vec<f64>,
    loc: Vec<Loc>,
    basis: Vec<usize>,
    /// Current values of the basic variables, by row.
    basic_value: Vec<f64>,
    /// Reduced costs for the active phase.
    dvec: Vec<f64>,
    artificial_of_row: Vec<usize>,
    art_sign: Vec<f64>,
    /// Rows were multiplied by these factors when the tableau was built.
    row_scale: Vec<f64>,
    /// The objective was divided by this factor.
    obj_scale: f64,
    phase_one: bool,
    iterations: u64,
    expand_tol: f64,
    last_refactor: u64,
}

impl SimplexEngine {
    /// Build the tableau from a model. `overrides` replaces variable bounds
    /// by column index (used for branching).
    pub fn from_model(model: &MilpModel, overrides: &[(usize, f64, f64)]) -> Self {
        let _build_clock = StatClock::new(&STAT_BUILD_NS);
        STAT_SOLVES.fetch_add(1, Ordering::Relaxed);
        let n_model = model.num_vars();
        let rows = model.constraints().len();
        let slack_count = model
            .constraints()
            .iter()
            .filter(|c| c.sense != Sense::Eq)
            .count();
        let ncols = n_model + slack_count + rows;

        let mut lower: Vec<f64> = Vec::with_capacity(ncols);
        let mut upper: Vec<f64> = Vec::with_capacity(ncols);
        for (_, def) in model.vars() {
            lower.push(def.lower);
            upper.push(def.upper);
        }
        for &(idx, lo, hi) in overrides {
            lower[idx] = lo;
            upper[idx] = hi;
        }
        // Normalize the objective and equilibrate rows so the fixed pricing
        // and pivot tolerances are meaningful regardless of data units.
        let obj_scale = model
            .objective()
            .iter()
            .map(|&(_, c)| c.abs())
            .fold(1.0f64, f64::max);
        let mut cost = vec![0.0; n_model];
        for &(v, c) in model.objective() {
            cost[v.index()] = -c / obj_scale;
        }
        let loc: Vec<Loc> = (0..n_model)
            .map(|j| initial_loc(lower[j], upper[j]))
            .collect();
        let row_scale: Vec<f64> = model
            .constraints()
            .iter()
            .map(|c| {
                let biggest = c.terms.iter().map(|&(_, a)| a.abs()).fold(0.0f64, f64::max);
                if biggest > 0.0 {
                    1.0 / biggest
                } else {
                    1.0
                }
            })
            .collect();

        let mut orig_cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_model];
        let rhs: Vec<f64> = model
            .constraints()
            .iter()
            .enumerate()
            .map(|(r, c)| c.rhs * row_scale[r])
            .collect();
        for (r, c) in model.constraints().iter().enumerate() {
            for &(v, a) in &c.terms {
                orig_cols[v.index()].push((r as u32, a * row_scale[r]));
            }
        }
        // Slack columns.
        let mut slack_of_row: Vec<Option<usize>> = vec![None; rows];
        for (r, c) in model.constraints().iter().enumerate() {
            let (lo, hi) = match c.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => continue,
            };
            slack_of_row[r] = Some(orig_cols.len());
            orig_cols.push(vec![(r as u32, 1.0)]);
            lower.push(lo);
            upper.push(hi);
            cost.push(0.0);
        }

        let mut engine = SimplexEngine {
            rows,
            n_struct: n_model,
            ncols,
            tab: Vec::new(),
            orig_cols,
            rhs,
            lower,
            upper,
            cost,
            loc,
            basis: vec![0; rows],
            basic_value: vec![0.0; rows],
            dvec: vec![0.0; ncols],
            artificial_of_row: vec![0; rows],
            art_sign: vec![1.0; rows],
            row_scale,
            obj_scale,
            phase_one: true,
            iterations: 0,
            expand_tol: EXPAND_BASE,
            last_refactor: 0,
        };

        // Residual of each row at the initial nonbasic point (slacks at
        // their finite bound count as zero).
        let mut residual = engine.rhs.clone();
        for j in 0..engine.orig_cols.len() {
            let xj = match initial_loc(engine.lower[j], engine.upper[j]) {
                Loc::AtLower => engine.lower[j],
                Loc::AtUpper => engine.upper[j],
                _ => 0.0,
            };
            if xj != 0.0 {
                for &(r, a) in &engine.orig_cols[j] {
                    residual[r as usize] -= a * xj;
                }
            }
        }
        for j in engine.loc.len()..engine.orig_cols.len() {
            let lo = engine.lower[j];
            let hi = engine.upper[j];
            engine.loc.push(initial_loc(lo, hi));
        }
        // Artificial columns, the trailing block. Rows whose slack absorbs
        // the initial residual start with the slack basic and a permanently
        // frozen artificial.
        for r in 0..rows {
            let rho = residual[r];
            let slack_feasible = match slack_of_row[r] {
                Some(s) => rho >= engine.lower[s] - FEAS_TOL && rho <= engine.upper[s] + FEAS_TOL,
                None => rho == 0.0,
            };
            let art = engine.orig_cols.len();
            engine.artificial_of_row[r] = art;
            if slack_feasible {
                engine.art_sign[r] = 1.0;
                engine.orig_cols.push(vec![(r as u32, 1.0)]);
                engine.cost.push(0.0);
                if let Some(s) = slack_of_row[r] {
                    engine.lower.push(0.0);
                    engine.upper.push(0.0);
                    engine.loc.push(Loc::AtLower);
                    engine.basis[r] = s;
                    engine.basic_value[r] = rho;
                    engine.loc[s] = Loc::Basic(r);
                } else {
                    // Equality row already satisfied: the artificial holds
                    // the basic slot at zero.
                    engine.lower.push(0.0);
                    engine.upper.push(f64::INFINITY);
                    engine.loc.push(Loc::Basic(r));
                    engine.basis[r] = art;
                    engine.basic_value[r] = 0.0;
                }
            } else {
                let sign = if rho >= 0.0 { 1.0 } else { -1.0 };
                engine.art_sign[r] = sign;
                engine.orig_cols.push(vec![(r as u32, sign)]);
                engine.cost.push(0.0);
                engine.lower.push(0.0);
                engine.upper.push(f64::INFINITY);
                engine.loc.push(Loc::Basic(r));
                engine.basis[r] = art;
                engine.basic_value[r] = rho.abs();
            }
        }
        debug_assert_eq!(engine.orig_cols.len(), ncols);
        debug_assert_eq!(engine.loc.len(), ncols);

        // Initial tableau = B^-1 A with B = diag(slack/artificial signs).
        engine.tab = vec![0.0; ncols * rows];
        for j in 0..ncols {
            for idx in 0..engine.orig_cols[j].len() {
                let (r, a) = engine.orig_cols[j][idx];
                let sign = if engine.basis[r as usize] == engine.artificial_of_row[r as usize] {
                    engine.art_sign[r as usize]
                } else {
                    1.0
                };
                engine.tab[j * rows + r as usize] = a * sign;
            }
        }
        engine.reset_reduced_costs();
        engine
    }

    #[inline]
    fn is_artificial(&self, j: usize) -> bool {
        j >= self.ncols - self.rows
    }

    /// Phase-aware cost of a column.
    #[inline]
    fn phase_cost(&self, j: usize) -> f64 {
        if self.phase_one {
            if self.is_artificial(j) && self.upper[j] > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.cost[j]
        }
    }

    fn reset_reduced_costs(&mut self) {
        let cb: Vec<f64> = (0..self.rows)
            .map(|r| self.phase_cost(self.basis[r]))
            .collect();
        let any_cb = cb.iter().any(|&c| c != 0.0);
        for j in 0..self.ncols {
            let mut d = self.phase_cost(j);
            let colv = &self.tab[j * self.rows..(j + 1) * self.rows];
            // A column whose tableau image is pure noise interacts with
            // nothing; its honest reduced cost is its own cost. Summing the
            // noise can fabricate an entering candidate.
            let biggest = colv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if any_cb && biggest > PIVOT_TOL {
                for r in 0..self.rows {
                    if cb[r] != 0.0 {
                        d -= cb[r] * colv[r];
                    }
                }
            }
            self.dvec[j] = d;
        }
    }

    /// Rebuild the tableau, basic values and reduced costs from the original
    /// data under the current basis, discarding accumulated elimination
    /// error.
    fn refactor(&mut self) -> Result<(), SimplexError> {
        let _clock = StatClock::new(&STAT_REFACTOR_NS);
        STAT_REFACTORS.fetch_add(1, Ordering::Relaxed);
        let m = self.rows;
        self.last_refactor = self.iterations;
        self.expand_tol = EXPAND_BASE;
        if m == 0 {
            return Ok(());
        }
        // Dense basis inverse by Gauss-Jordan with partial pivoting.
        let mut work = vec![0.0; m * m]; // column-major basis matrix
        for (r, &b) in self.basis.iter().enumerate() {
            for &(row, a) in &self.orig_cols[b] {
                work[r * m + row as usize] = a;
            }
        }
        let mut inv = vec![0.0; m * m]; // row-major inverse
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        // Forward elimination with row swaps mirrored into `inv`.
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let mut best = k;
            let mut best_mag = work[k * m + perm[k]].abs();
            for i in (k + 1)..m {
                let mag = work[k * m + perm[i]].abs();
                if mag > best_mag {
                    best = i;
                    best_mag = mag;
                }
            }
            if best_mag <= 1e-12 {
                if std::env::var_os("BACKHAUL_SIMPLEX_TRACE").is_some() {
                    eprintln!("refactor: singular basis at elimination step {k} (iter {})", self.iterations);
                }
                return Err(SimplexError::NumericalBreakdown);
            }
            perm.swap(k, best);
            let prow = perm[k];
            let piv = work[k * m + prow];
            for i in 0..m {
                let target = perm[i];
                if i == k {
                    continue;
                }
                let f = work[k * m + target];
                if f == 0.0 {
                    continue;
                }
                let s = f / piv;
                for c in (k + 1)..m {
                    work[c * m + target] -= s * work[c * m + prow];
                }
                work[k * m + target] = 0.0;
                for c in 0..m {
                    inv[target * m + c] -= s * inv[prow * m + c];
                }
            }
        }
        // Back substitution: scale each pivot row; rows of `inv` indexed by
        // permuted position k correspond to basis slot k.
        let mut binv = vec![0.0; m * m]; // binv[slot * m + original_row]
        for k in 0..m {
            let prow = perm[k];
            let piv = work[k * m + prow];
            for c in 0..m {
                binv[k * m + c] = inv[prow * m + c] / piv;
            }
        }

        // Rebuild every tableau column.
        for j in 0..self.ncols {
            let colv = &mut self.tab[j * m..(j + 1) * m];
            colv.fill(0.0);
            for &(row, a) in &self.orig_cols[j] {
                let r = row as usize;
                for i in 0..m {
                    colv[i] += a * binv[i * m + r];
                }
            }
            for v in colv.iter_mut() {
                if v.abs() < SNAP {
                    *v = 0.0;
                }
            }
        }
        // Recompute basic values: x_B = B^-1 (b - A_N x_N).
        let mut v = self.rhs.clone();
        for j in 0..self.ncols {
            let xj = match self.loc[j] {
                Loc::Basic(_) => continue,
                Loc::AtLower => self.lower[j],
                Loc::AtUpper => self.upper[j],
                Loc::FreeAtZero => 0.0,
            };
            if xj != 0.0 {
                for &(row, a) in &self.orig_cols[j] {
                    v[row as usize] -= a * xj;
                }
            }
        }
        for i in 0..m {
            let mut x = 0.0;
            for k in 0..m {
                x += binv[i * m + k] * v[k];
            }
            self.basic_value[i] = x;
        }
        self.reset_reduced_costs();
        Ok(())
    }

    fn phase_one_infeasibility(&self) -> f64 {
        (0..self.rows)
            .filter(|&r| {
                let b = self.basis[r];
                self.is_artificial(b) && self.upper[b] > 0.0
            })
            .map(|r| self.basic_value[r].max(0.0))
            .sum()
    }

    #[inline]
    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.loc[j] {
            Loc::AtLower => self.lower[j],
            Loc::AtUpper => self.upper[j],
            _ => 0.0,
        }
    }

    pub fn value(&self, j: usize) -> f64 {
        match self.loc[j] {
            Loc::Basic(r) => self.basic_value[r],
            _ => self.nonbasic_value(j),
        }
    }

    /// Values of the structural columns (model variables plus appended).
    pub fn values(&self) -> Vec<f64> {
        (0..self.n_struct).map(|j| self.value(j)).collect()
    }

    /// Objective in maximization terms, recomputed from the current point.
    pub fn objective(&self) -> f64 {
        -self.obj_scale
            * (0..self.ncols)
                .filter(|&j| self.cost[j] != 0.0)
                .map(|j| self.cost[j] * self.value(j))
                .sum::<f64>()
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Row duals in maximization convention (binding `<=` rows get a
    /// nonnegative dual), read off the artificial columns' reduced costs and
    /// expressed in the model's original units.
    pub fn duals(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                self.obj_scale
                    * self.row_scale[r]
                    * self.art_sign[r]
                    * self.dvec[self.artificial_of_row[r]]
            })
            .collect()
    }

    /// Entering column and move direction (most negative reduced cost).
    fn choose_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            if self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.dvec[j];
            let dir = match self.loc[j] {
                Loc::Basic(_) => continue,
                Loc::AtLower => {
                    if d < -ENTER_TOL {
                        1.0
                    } else {
                        continue;
                    }
                }
                Loc::AtUpper => {
                    if d > ENTER_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                }
                Loc::FreeAtZero => {
                    if d < -ENTER_TOL {
                        1.0
                    } else if d > ENTER_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                }
            };
            let score = d.abs();
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// One pivot or bound flip.
    fn step(&mut self) -> StepEnd {
        let _clock = StatClock::new(&STAT_PIVOT_NS);
        STAT_PIVOTS.fetch_add(1, Ordering::Relaxed);
        let Some((enter, dir)) = self.choose_entering() else {
            return StepEnd::PhaseDone;
        };
        let col = self.tab[enter * self.rows..(enter + 1) * self.rows].to_vec();

        // Expanding-window ratio test: the entering variable moves by
        // t >= 0 in `dir`; each basic variable moves by -dir * col[r] * t.
        // Blocker bounds are relaxed by a working tolerance that grows a
        // little every pivot, and within the relaxed window the largest
        // pivot wins. Together with the enforced minimum step this makes
        // every iteration strictly improving, so the search cannot cycle,
        // and noise-sized pivots are never chosen over real ones.
        let own_range = self.upper[enter] - self.lower[enter];
        let blocker = |r: usize| -> Option<(f64, bool, f64)> {
            let alpha = dir * col[r];
            if alpha > PIVOT_TOL {
                let b = self.basis[r];
                if self.lower[b] == f64::NEG_INFINITY {
                    return None;
                }
                let room = ((self.basic_value[r] - self.lower[b]) / alpha).max(0.0);
                Some((room, false, alpha))
            } else if alpha < -PIVOT_TOL {
                let b = self.basis[r];
                if self.upper[b] == f64::INFINITY {
                    return None;
                }
                let room = ((self.upper[b] - self.basic_value[r]) / (-alpha)).max(0.0);
                Some((room, true, -alpha))
            } else {
                None
            }
        };
        self.expand_tol += EXPAND_STEP;
        let window_tol = self.expand_tol;
        let mut window = own_range;
        for r in 0..self.rows {
            if let Some((room, _, alpha)) = blocker(r) {
                window = window.min(room + window_tol / alpha);
            }
        }
        let mut t_best = own_range;
        let mut leaving: Option<(usize, bool)> = None; // (row, leaves at upper)
        if window < f64::INFINITY {
            let mut best_alpha = 0.0;
            for r in 0..self.rows {
                if let Some((room, at_upper, alpha)) = blocker(r) {
                    if room <= window && alpha > best_alpha {
                        best_alpha = alpha;
                        t_best = room;
                        leaving = Some((r, at_upper));
                    }
                }
            }
            match leaving {
                None => t_best = own_range,
                Some(_) => {
                    // The minimum step that keeps the iteration strictly
                    // improving; the incurred bound violation stays within
                    // the working tolerance.
                    t_best = t_best.max(EXPAND_STEP / best_alpha).min(window);
                }
            }
        }

        if t_best == f64::INFINITY {
            // No blocker. If the column is numerically empty its apparent
            // reduced cost was accumulated noise: restore the honest value
            // (its own cost) and let pricing move on. Otherwise the ray is
            // real.
            let biggest = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if biggest <= PIVOT_TOL {
                let honest = self.phase_cost(enter);
                if honest.abs() <= ENTER_TOL {
                    self.dvec[enter] = honest;
                    return StepEnd::Moved;
                }
            }
            return StepEnd::Unbounded;
        }

        self.iterations += 1;
        let entering_start = self.nonbasic_value(enter);
        for r in 0..self.rows {
            self.basic_value[r] -= dir * col[r] * t_best;
        }
        match leaving {
            None => {
                // The entering variable runs to its opposite bound.
                self.loc[enter] = match self.loc[enter] {
                    Loc::AtLower => Loc::AtUpper,
                    Loc::AtUpper => Loc::AtLower,
                    other => other,
                };
                StepEnd::Moved
            }
            Some((r, leaves_upper)) => {
                let old = self.basis[r];
                self.loc[old] = if leaves_upper { Loc::AtUpper } else { Loc::AtLower };
                self.basis[r] = enter;
                self.loc[enter] = Loc::Basic(r);
                self.basic_value[r] = entering_start + dir * t_best;
                self.eliminate(r, enter);
                StepEnd::Moved
            }
        }
    }

    /// Gaussian elimination around pivot (row, col), with the reduced-cost
    /// row updated in the same pass. Columns with a zero pivot-row entry are
    /// untouched, and updated entries are snapped to zero below the noise
    /// floor.
    fn eliminate(&mut self, prow: usize, pcol: usize) {
        let rows = self.rows;
        let fcol: Vec<f64> = self.tab[pcol * rows..(pcol + 1) * rows].to_vec();
        let piv = fcol[prow];
        debug_assert!(piv.abs() > PIVOT_TOL);
        let d_enter = self.dvec[pcol];
        for j in 0..self.ncols {
            let colv = &mut self.tab[j * rows..(j + 1) * rows];
            let rv = colv[prow];
            if rv == 0.0 {
                continue;
            }
            let s = rv / piv;
            for r in 0..rows {
                let nv = colv[r] - fcol[r] * s;
                colv[r] = if nv.abs() < SNAP { 0.0 } else { nv };
            }
            colv[prow] = s;
            let nd = self.dvec[j] - d_enter * s;
            self.dvec[j] = if nd.abs() < SNAP { 0.0 } else { nd };
        }
    }

    fn iteration_cap(&self) -> u64 {
        200_000 + 60 * (self.rows as u64 + self.ncols as u64)
    }

    /// Refactor when the expanding window is spent or the tableau is old.
    fn maybe_refactor(&mut self) -> Result<(), SimplexError> {
        let due_window = self.expand_tol >= EXPAND_LIMIT;
        let due_age = self.iterations - self.last_refactor >= REFACTOR_PERIOD;
        if (due_window || due_age) && self.iterations > self.last_refactor {
            self.refactor()?;
        }
        Ok(())
    }

    /// Run both phases to completion.
    pub fn solve(&mut self) -> Result<Outcome, SimplexError> {
        let cap = self.iteration_cap();
        while self.phase_one {
            if self.iterations > cap {
                return Err(SimplexError::IterationLimit(self.iterations));
            }
            self.maybe_refactor()?;
            match self.step() {
                StepEnd::Moved => {}
                StepEnd::PhaseDone => {
                    // Refactor before acting on the claim: this removes the
                    // expansion residue from the basic values and recomputes
                    // the reduced costs from scratch. Short stretches since
                    // the last factorization cannot have drifted beyond the
                    // working tolerances, so a cheap pricing reset suffices.
                    if self.iterations > self.last_refactor + 48 {
                        self.refactor()?;
                    } else {
                        self.reset_reduced_costs();
                    }
                    if self.choose_entering().is_some() {
                        continue;
                    }
                    if self.phase_one_infeasibility() > FEAS_TOL {
                        return Ok(Outcome::Infeasible);
                    }
                    for r in 0..self.rows {
                        let a = self.artificial_of_row[r];
                        self.upper[a] = 0.0;
                    }
                    self.phase_one = false;
                    self.reset_reduced_costs();
                }
                StepEnd::Unbounded => {
                    // The phase-1 objective is bounded below by zero; retry
                    // once on fresh numbers, then give up.
                    if self.iterations > self.last_refactor {
                        self.refactor()?;
                        continue;
                    }
                    if std::env::var_os("BACKHAUL_SIMPLEX_TRACE").is_some() {
                        eprintln!("phase-1 unbounded persisted after refactor (iter {})", self.iterations);
                    }
                    return Err(SimplexError::NumericalBreakdown);
                }
            }
        }
        self.reoptimize()
    }

    /// Continue phase-2 pivots (also used after columns are appended).
    pub fn reoptimize(&mut self) -> Result<Outcome, SimplexError> {
        debug_assert!(!self.phase_one);
        let cap = self.iterations + self.iteration_cap();
        loop {
            if self.iterations > cap {
                return Err(SimplexError::IterationLimit(self.iterations));
            }
            self.maybe_refactor()?;
            match self.step() {
                StepEnd::Moved => {}
                StepEnd::PhaseDone => {
                    if self.iterations > self.last_refactor + 48 {
                        self.refactor()?;
                    } else {
                        self.reset_reduced_costs();
                    }
                    if self.choose_entering().is_some() {
                        continue;
                    }
                    return Ok(Outcome::Optimal);
                }
                StepEnd::Unbounded => {
                    if self.iterations > self.last_refactor {
                        self.refactor()?;
                        continue;
                    }
                    return Ok(Outcome::Unbounded);
                }
            }
        }
    }

    /// Append a structural column after a solve. `entries` hold raw
    /// constraint coefficients by row index; the tableau image is rebuilt
    /// through the artificial block, which tracks the basis inverse.
    pub fn add_column(&mut self, objective: f64, entries: &[(usize, f64)], lo: f64, hi: f64) {
        let rows = self.rows;
        let mut image = vec![0.0; rows];
        let mut scaled_entries: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for &(r, a) in entries {
            let scaled = a * self.row_scale[r];
            scaled_entries.push((r as u32, scaled));
            let acol = self.artificial_of_row[r];
            let coef = scaled * self.art_sign[r];
            let binv = &self.tab[acol * rows..(acol + 1) * rows];
            for i in 0..rows {
                image[i] += coef * binv[i];
            }
        }
        let cost = -objective / self.obj_scale;
        let mut d = if self.phase_one { 0.0 } else { cost };
        for r in 0..rows {
            let cb = self.phase_cost(self.basis[r]);
            if cb != 0.0 {
                d -= cb * image[r];
            }
        }
        let at = self.n_struct;
        self.tab.splice(at * rows..at * rows, image);
        self.orig_cols.insert(at, scaled_entries);
        self.lower.insert(at, lo);
        self.upper.insert(at, hi);
        self.cost.insert(at, cost);
        self.loc.insert(at, initial_loc(lo, hi));
        self.dvec.insert(at, d);
        self.n_struct += 1;
        self.ncols += 1;
        for b in &mut self.basis {
            if *b >= at {
                *b += 1;
            }
        }
        for a in &mut self.artificial_of_row {
            if *a >= at {
                *a += 1;
            }
        }
    }

    /// Largest violation of the original rows at the current point; used as
    /// a self-check in tests.
    pub fn max_residual(&self, model: &MilpModel) -> f64 {
        let vals = self.values();
        let mut worst: f64 = 0.0;
        for c in model.constraints() {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * vals[v.index()]).sum();
            let r = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(r);
        }
        worst
    }
}

struct StatClock<'a> {
    target: &'a AtomicU64,
    start: std::time::Instant,
}

impl<'a> StatClock<'a> {
    fn new(target: &'a AtomicU64) -> Self {
        StatClock { target, start: std::time::Instant::now() }
    }
}

impl Drop for StatClock<'_> {
    fn drop(&mut self) {
        self.target
            .fetch_add(self.start.elapsed().as_nanos() as u64, Ordering::Relaxed);
    }
}

/// Whether the model still contains unrelaxed binaries.
pub fn has_binaries(model: &MilpModel) -> bool {
    model.vars().any(|(_, d)| d.kind == VarKind::Binary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::{MilpModel, Sense};

    fn solve_max(model: &MilpModel) -> (Outcome, f64, Vec<f64>) {
        let mut e = SimplexEngine::from_model(model, &[]);
        let out = e.solve().unwrap();
        (out, e.objective(), e.values())
    }

    #[test]
    fn single_variable_cap() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        m.set_objective(vec![(x, 1.0)]);
        m.add_constraint("c1", vec![(x, 1.0)], Sense::Le, 5.0);
        let (out, obj, vals) = solve_max(&m);
        assert_eq!(out, Outcome::Optimal);
        assert!((obj - 5.0).abs() < 1e-9);
        assert!((vals[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_pair() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.set_objective(vec![(x, 1.0)]);
        m.add_constraint("lo", vec![(x, 1.0)], Sense::Ge, 1.0);
        m.add_constraint("hi", vec![(x, 1.0)], Sense::Le, 0.0);
        let (out, _, _) = solve_max(&m);
        assert_eq!(out, Outcome::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        let y = m.add_continuous("y", 0.0, f64::INFINITY).unwrap();
        m.set_objective(vec![(x, 1.0), (y, 1.0)]);
        m.add_constraint("c", vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        let (out, _, _) = solve_max(&m);
        assert_eq!(out, Outcome::Unbounded);
    }

    #[test]
    fn bounded_variables_and_equality() {
        // max 3a + 2b st a + b = 4, a <= 3, b <= 3
        let mut m = MilpModel::new();
        let a = m.add_continuous("a", 0.0, 3.0).unwrap();
        let b = m.add_continuous("b", 0.0, 3.0).unwrap();
        m.set_objective(vec![(a, 3.0), (b, 2.0)]);
        m.add_constraint("sum", vec![(a, 1.0), (b, 1.0)], Sense::Eq, 4.0);
        let (out, obj, vals) = solve_max(&m);
        assert_eq!(out, Outcome::Optimal);
        assert!((obj - 11.0).abs() < 1e-9);
        assert!((vals[0] - 3.0).abs() < 1e-9);
        assert!((vals[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_variable_equality() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let y = m.add_continuous("y", 0.0, 10.0).unwrap();
        m.set_objective(vec![(x, 1.0)]);
        m.add_constraint("tie", vec![(x, 1.0), (y, -1.0)], Sense::Eq, -2.0);
        let (out, obj, vals) = solve_max(&m);
        assert_eq!(out, Outcome::Optimal);
        assert!((obj - 8.0).abs() < 1e-9);
        assert!((vals[0] - 8.0).abs() < 1e-9);
    }

    #[test]
    fn duals_of_binding_rows() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        let y = m.add_continuous("y", 0.0, f64::INFINITY).unwrap();
        m.set_objective(vec![(x, 1.0), (y, 1.0)]);
        m.add_constraint("cap", vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
        m.add_constraint("xcap", vec![(x, 1.0)], Sense::Le, 3.0);
        let mut e = SimplexEngine::from_model(&m, &[]);
        assert_eq!(e.solve().unwrap(), Outcome::Optimal);
        let duals = e.duals();
        assert!((duals[0] - 1.0).abs() < 1e-9, "duals {duals:?}");
        assert!(duals[1].abs() < 1e-9, "duals {duals:?}");
        assert!((e.objective() - (4.0 * duals[0] + 3.0 * duals[1])).abs() < 1e-9);
    }

    #[test]
    fn duals_scale_with_objective_and_rows() {
        // max 500x st 20x <= 60: x* = 3, objective 1500, dual = 25 in
        // original units regardless of internal scaling.
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        m.set_objective(vec![(x, 500.0)]);
        m.add_constraint("cap", vec![(x, 20.0)], Sense::Le, 60.0);
        let mut e = SimplexEngine::from_model(&m, &[]);
        assert_eq!(e.solve().unwrap(), Outcome::Optimal);
        assert!((e.objective() - 1500.0).abs() < 1e-9);
        assert!((e.duals()[0] - 25.0).abs() < 1e-9, "{:?}", e.duals());
    }

    #[test]
    fn bound_overrides_apply() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x").unwrap();
        m.set_objective(vec![(x, 1.0)]);
        let mut e = SimplexEngine::from_model(&m, &[(0, 0.0, 0.0)]);
        assert_eq!(e.solve().unwrap(), Outcome::Optimal);
        assert_eq!(e.objective(), 0.0);
    }

    #[test]
    fn column_append_reoptimizes() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        m.set_objective(vec![]);
        m.add_constraint("cap", vec![(x, 1.0)], Sense::Le, 4.0);
        let mut e = SimplexEngine::from_model(&m, &[]);
        assert_eq!(e.solve().unwrap(), Outcome::Optimal);
        assert!(e.objective().abs() < 1e-12);
        e.add_column(1.0, &[(0, 1.0)], 0.0, f64::INFINITY);
        assert_eq!(e.reoptimize().unwrap(), Outcome::Optimal);
        assert!((e.objective() - 4.0).abs() < 1e-9);
        let vals = e.values();
        assert!((vals[1] - 4.0).abs() < 1e-9, "appended column value {vals:?}");
    }

    #[test]
    fn ge_rows_and_negative_rhs() {
        // max -x - y st x + y >= 2, x - y = -1 -> x = 0.5, y = 1.5.
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        let y = m.add_continuous("y", 0.0, f64::INFINITY).unwrap();
        m.set_objective(vec![(x, -1.0), (y, -1.0)]);
        m.add_constraint("cover", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 2.0);
        m.add_constraint("tie", vec![(x, 1.0), (y, -1.0)], Sense::Eq, -1.0);
        let (out, obj, vals) = solve_max(&m);
        assert_eq!(out, Outcome::Optimal);
        assert!((obj + 2.0).abs() < 1e-9);
        assert!((vals[0] - 0.5).abs() < 1e-9);
        assert!((vals[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn refactor_preserves_solution() {
        let mut m = MilpModel::new();
        let a = m.add_continuous("a", 0.0, 3.0).unwrap();
        let b = m.add_continuous("b", 0.0, 3.0).unwrap();
        m.set_objective(vec![(a, 3.0), (b, 2.0)]);
        m.add_constraint("sum", vec![(a, 1.0), (b, 1.0)], Sense::Eq, 4.0);
        m.add_constraint("cap", vec![(a, 2.0), (b, 1.0)], Sense::Le, 7.0);
        let mut e = SimplexEngine::from_model(&m, &[]);
        assert_eq!(e.solve().unwrap(), Outcome::Optimal);
        let before = (e.objective(), e.values());
        e.refactor().unwrap();
        assert_eq!(e.choose_entering(), None, "still optimal after refactor");
        let after = (e.objective(), e.values());
        assert!((before.0 - after.0).abs() < 1e-9);
        for (x, y) in before.1.iter().zip(after.1.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(e.max_residual(&m) < 1e-9);
    }
}
