//! Dense two-phase simplex for small and medium linear programs.
//!
//! Problems are stated as: minimize `c·z` subject to sparse equality rows,
//! sparse `≤` rows and per-variable bounds (either side may be absent).
//! Pricing is Dantzig's rule until a run of degenerate pivots is seen, after
//! which Bland's rule is used to rule out cycling.

use crate::scalar::Scalar;

pub type SparseRow<T> = Vec<(usize, T)>;

#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    n_vars: usize,
    objective: Vec<T>,
    eq_rows: Vec<(SparseRow<T>, T)>,
    le_rows: Vec<(SparseRow<T>, T)>,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, objective: T },
    Infeasible,
    Unbounded,
}

impl<T> LpOutcome<T> {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    /// Phase-one objective above this value means infeasible.
    pub feasibility_tol: f64,
    /// Reduced costs above `-optimality_tol` count as non-negative.
    pub optimality_tol: f64,
    /// Entries below this magnitude are ignored as pivots.
    pub pivot_tol: f64,
    pub max_pivots: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-10,
            max_pivots: 200_000,
        }
    }
}

impl<T: Scalar> LinearProgram<T> {
    /// `n_vars` variables, all with lower bound zero and no upper bound.
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            objective: vec![T::zero(); n_vars],
            eq_rows: Vec::new(),
            le_rows: Vec::new(),
            lower: vec![Some(T::zero()); n_vars],
            upper: vec![None; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_rows(&self) -> usize {
        self.eq_rows.len() + self.le_rows.len()
    }

    pub fn set_objective(&mut self, j: usize, c: T) {
        self.objective[j] = c;
    }

    pub fn clear_objective(&mut self) {
        self.objective.iter_mut().for_each(|c| *c = T::zero());
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<T>, upper: Option<T>) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn set_free(&mut self, j: usize) {
        self.set_bounds(j, None, None);
    }

    pub fn add_eq(&mut self, row: SparseRow<T>, rhs: T) {
        self.eq_rows.push((row, rhs));
    }

    pub fn add_le(&mut self, row: SparseRow<T>, rhs: T) {
        self.le_rows.push((row, rhs));
    }

    pub fn add_ge(&mut self, row: SparseRow<T>, rhs: T) {
        let neg = row.into_iter().map(|(j, v)| (j, -v)).collect();
        self.le_rows.push((neg, -rhs));
    }

    pub fn solve(&self) -> LpOutcome<T> {
        self.solve_with(&LpOptions::default())
    }

    pub fn solve_with(&self, opts: &LpOptions) -> LpOutcome<T> {
        StandardForm::build(self).solve(opts)
    }
}

/// How an original variable maps to non-negative standard-form columns.
#[derive(Clone, Copy, Debug)]
enum VarMap<T> {
    /// x = shift + col
    Shifted { col: usize, shift: T },
    /// x = shift - col
    Mirrored { col: usize, shift: T },
    /// x = pos - neg
    Split { pos: usize, neg: usize },
}

struct StandardForm<T> {
    n_cols: usize,
    rows: Vec<(Vec<T>, T)>,
    /// Column index of a +1 slack usable as an initial basic variable.
    slack_of_row: Vec<Option<usize>>,
    cost: Vec<T>,
    cost_shift: T,
    map: Vec<VarMap<T>>,
}

impl<T: Scalar> StandardForm<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let mut n_cols = 0;
        let mut map = Vec::with_capacity(lp.n_vars);
        let mut extra_upper: Vec<(usize, T)> = Vec::new();
        for j in 0..lp.n_vars {
            match (lp.lower[j], lp.upper[j]) {
                (Some(l), u) => {
                    map.push(VarMap::Shifted { col: n_cols, shift: l });
                    if let Some(u) = u {
                        extra_upper.push((n_cols, u - l));
                    }
                    n_cols += 1;
                }
                (None, Some(u)) => {
                    map.push(VarMap::Mirrored { col: n_cols, shift: u });
                    n_cols += 1;
                }
                (None, None) => {
                    map.push(VarMap::Split {
                        pos: n_cols,
                        neg: n_cols + 1,
                    });
                    n_cols += 2;
                }
            }
        }
        let n_struct = n_cols;
        let n_slack = lp.le_rows.len() + extra_upper.len();
        let total = n_struct + n_slack;

        let expand = |row: &SparseRow<T>, rhs: T| -> (Vec<T>, T) {
            let mut dense = vec![T::zero(); total];
            let mut rhs = rhs;
            for &(j, v) in row {
                match map[j] {
                    VarMap::Shifted { col, shift } => {
                        dense[col] += v;
                        rhs -= v * shift;
                    }
                    VarMap::Mirrored { col, shift } => {
                        dense[col] -= v;
                        rhs -= v * shift;
                    }
                    VarMap::Split { pos, neg } => {
                        dense[pos] += v;
                        dense[neg] -= v;
                    }
                }
            }
            (dense, rhs)
        };

        let mut rows = Vec::with_capacity(lp.eq_rows.len() + n_slack);
        let mut slack_of_row = Vec::new();
        for (row, rhs) in &lp.eq_rows {
            rows.push(expand(row, *rhs));
            slack_of_row.push(None);
        }
        let mut slack = n_struct;
        for (row, rhs) in &lp.le_rows {
            let (mut dense, rhs) = expand(row, *rhs);
            dense[slack] = T::one();
            rows.push((dense, rhs));
            slack_of_row.push(Some(slack));
            slack += 1;
        }
        for &(col, bound) in &extra_upper {
            let mut dense = vec![T::zero(); total];
            dense[col] = T::one();
            dense[slack] = T::one();
            rows.push((dense, bound));
            slack_of_row.push(Some(slack));
            slack += 1;
        }
        for (k, (dense, rhs)) in rows.iter_mut().enumerate() {
            if *rhs < T::zero() {
                dense.iter_mut().for_each(|v| *v = -*v);
                *rhs = -*rhs;
                slack_of_row[k] = None;
            }
        }

        let mut cost = vec![T::zero(); total];
        let mut cost_shift = T::zero();
        for j in 0..lp.n_vars {
            let c = lp.objective[j];
            match map[j] {
                VarMap::Shifted { col, shift } => {
                    cost[col] += c;
                    cost_shift += c * shift;
                }
                VarMap::Mirrored { col, shift } => {
                    cost[col] -= c;
                    cost_shift += c * shift;
                }
                VarMap::Split { pos, neg } => {
                    cost[pos] += c;
                    cost[neg] -= c;
                }
            }
        }
        StandardForm {
            n_cols: total,
            rows,
            slack_of_row,
            cost,
            cost_shift,
            map,
        }
    }

    fn solve(self, opts: &LpOptions) -> LpOutcome<T> {
        let m = self.rows.len();
        let n_real = self.n_cols;
        let n_art = self.slack_of_row.iter().filter(|s| s.is_none()).count();
        let width = n_real + n_art;
        let mut tab = Tableau {
            m,
            width,
            a: vec![T::zero(); m * (width + 1)],
            basis: vec![0; m],
            is_basic: vec![false; width],
            eligible: vec![true; width],
            pivot_tol: T::lit(opts.pivot_tol),
            opt_tol: T::lit(opts.optimality_tol),
            pivots: 0,
            max_pivots: opts.max_pivots,
        };
        let mut art = n_real;
        for (r, (dense, rhs)) in self.rows.iter().enumerate() {
            for (c, &v) in dense.iter().enumerate() {
                tab.a[r * (width + 1) + c] = v;
            }
            tab.a[r * (width + 1) + width] = *rhs;
            match self.slack_of_row[r] {
                Some(s) => tab.basis[r] = s,
                None => {
                    tab.a[r * (width + 1) + art] = T::one();
                    tab.basis[r] = art;
                    art += 1;
                }
            }
            tab.is_basic[tab.basis[r]] = true;
        }

        if n_art > 0 {
            let mut phase1 = vec![T::zero(); width];
            for c in phase1.iter_mut().skip(n_real) {
                *c = T::one();
            }
            match tab.optimize(&phase1) {
                Ok(()) => {}
                Err(Stop::Unbounded) => return LpOutcome::Infeasible,
                Err(Stop::Limit) => return LpOutcome::Infeasible,
            }
            let infeas = tab.objective_value(&phase1);
            if infeas > T::lit(opts.feasibility_tol) {
                return LpOutcome::Infeasible;
            }
            for c in n_real..width {
                tab.eligible[c] = false;
            }
            tab.drive_out_artificials(n_real);
        }

        let mut cost = self.cost.clone();
        cost.resize(width, T::zero());
        match tab.optimize(&cost) {
            Ok(()) => {}
            Err(Stop::Unbounded) => return LpOutcome::Unbounded,
            Err(Stop::Limit) => return LpOutcome::Infeasible,
        }
        let mut z = vec![T::zero(); width];
        for r in 0..tab.m {
            let b = tab.basis[r];
            z[b] = tab.rhs(r);
        }
        let x: Vec<T> = self
            .map
            .iter()
            .map(|vm| match *vm {
                VarMap::Shifted { col, shift } => shift + z[col],
                VarMap::Mirrored { col, shift } => shift - z[col],
                VarMap::Split { pos, neg } => z[pos] - z[neg],
            })
            .collect();
        let objective = self
            .cost
            .iter()
            .zip(&z)
            .fold(self.cost_shift, |acc, (&c, &v)| acc + c * v);
        LpOutcome::Optimal { x, objective }
    }
}

enum Stop {
    Unbounded,
    Limit,
}

struct Tableau<T> {
    m: usize,
    width: usize,
    /// Row-major, `width + 1` columns; the last column is the right-hand side.
    a: Vec<T>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    eligible: Vec<bool>,
    pivot_tol: T,
    opt_tol: T,
    pivots: usize,
    max_pivots: usize,
}

impl<T: Scalar> Tableau<T> {
    #[inline]
    fn at(&self, r: usize, c: usize) -> T {
        self.a[r * (self.width + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> T {
        self.a[r * (self.width + 1) + self.width]
    }

    fn objective_value(&self, cost: &[T]) -> T {
        (0..self.m).fold(T::zero(), |acc, r| acc + cost[self.basis[r]] * self.rhs(r))
    }

    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        let mut d = cost.to_vec();
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb == T::zero() {
                continue;
            }
            let row = &self.a[r * (self.width + 1)..r * (self.width + 1) + self.width];
            for (dc, &v) in d.iter_mut().zip(row) {
                if v != T::zero() {
                    *dc -= cb * v;
                }
            }
        }
        d
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width + 1;
        let p = self.a[pr * w + pc];
        for c in 0..w {
            self.a[pr * w + c] /= p;
        }
        self.a[pr * w + pc] = T::one();
        let prow: Vec<(usize, T)> = (0..w)
            .filter_map(|c| {
                let v = self.a[pr * w + c];
                (v != T::zero()).then_some((c, v))
            })
            .collect();
        for r in 0..self.m {
            if r == pr {
                continue;
            }
            let f = self.a[r * w + pc];
            if f == T::zero() {
                continue;
            }
            for &(c, v) in &prow {
                self.a[r * w + c] -= f * v;
            }
            self.a[r * w + pc] = T::zero();
        }
        self.is_basic[self.basis[pr]] = false;
        self.is_basic[pc] = true;
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Primal simplex on the current basis, which must be feasible.
    fn optimize(&mut self, cost: &[T]) -> Result<(), Stop> {
        let mut d = self.reduced_costs(cost);
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.pivots >= self.max_pivots {
                return Err(Stop::Limit);
            }
            let mut entering = None;
            let mut best = -self.opt_tol;
            for c in 0..self.width {
                if !self.eligible[c] || d[c] >= best {
                    continue;
                }
                if self.is_basic[c] {
                    continue;
                }
                entering = Some(c);
                if bland {
                    break;
                }
                best = d[c];
            }
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, T)> = None;
            for r in 0..self.m {
                let v = self.at(r, pc);
                if v <= self.pivot_tol {
                    continue;
                }
                let ratio = self.rhs(r).max_of(T::zero()) / v;
                match leaving {
                    None => leaving = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= self.pivot_tol * (T::one() + lratio.abs());
                        if ratio < lratio && !tie
                            || tie && (self.basis[r] < self.basis[lr] || !bland && v > self.at(lr, pc))
                        {
                            leaving = Some((r, ratio));
                        }
                    }
                }
            }
            let Some((pr, ratio)) = leaving else {
                return Err(Stop::Unbounded);
            };
            if ratio <= self.pivot_tol {
                degenerate_run += 1;
                if degenerate_run > 50 {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
            let f = d[pc];
            if f != T::zero() {
                let w = self.width + 1;
                for (c, dc) in d.iter_mut().enumerate() {
                    let v = self.a[pr * w + c];
                    if v != T::zero() {
                        *dc -= f * v;
                    }
                }
            }
            d[pc] = T::zero();
        }
    }

    /// Pivots basic artificial columns (index ≥ `n_real`) out of the basis
    /// where possible; rows where that fails are redundant and are zeroed.
    fn drive_out_artificials(&mut self, n_real: usize) {
        for r in 0..self.m {
            if self.basis[r] < n_real {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for c in 0..n_real {
                if self.is_basic[c] {
                    continue;
                }
                let v = self.at(r, c).abs();
                if v > self.pivot_tol && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((c, v));
                }
            }
            match best {
                Some((c, _)) => self.pivot(r, c),
                None => {
                    let w = self.width + 1;
                    let art = self.basis[r];
                    for c in 0..w {
                        self.a[r * w + c] = T::zero();
                    }
                    self.a[r * w + art] = T::one();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn optimum(out: LpOutcome<f64>) -> (Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18
        let mut lp = LinearProgram::<f64>::new(2);
        lp.set_objective(0, -3.0);
        lp.set_objective(1, -5.0);
        lp.add_le(vec![(0, 1.0)], 4.0);
        lp.add_le(vec![(1, 2.0)], 12.0);
        lp.add_le(vec![(0, 3.0), (1, 2.0)], 18.0);
        let (x, obj) = optimum(lp.solve());
        assert!((obj + 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x - y, x + y = 2, x - y ≥ -4, y free, x ∈ [0, 3]
        let mut lp = LinearProgram::<f64>::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, -1.0);
        lp.set_bounds(0, Some(0.0), Some(3.0));
        lp.set_free(1);
        lp.add_eq(vec![(0, 1.0), (1, 1.0)], 2.0);
        lp.add_ge(vec![(0, 1.0), (1, -1.0)], -4.0);
        let (x, obj) = optimum(lp.solve());
        // x - y ≥ -4 is slack at the optimum; x hits its lower bound
        assert!((obj + 2.0).abs() < 1e-9, "{obj}");
        assert!(x[0].abs() < 1e-9 && (x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.add_le(vec![(0, 1.0)], -1.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let mut lp = LinearProgram::<f64>::new(1);
        lp.set_objective(0, -1.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn rational_arithmetic_is_exact() {
        type Q = Ratio<i64>;
        let mut lp = LinearProgram::<Q>::new(2);
        lp.set_objective(0, Q::from_integer(-1));
        lp.set_objective(1, Q::from_integer(-1));
        lp.add_le(vec![(0, Q::from_integer(3)), (1, Q::from_integer(1))], Q::from_integer(1));
        lp.add_le(vec![(0, Q::from_integer(1)), (1, Q::from_integer(3))], Q::from_integer(1));
        match lp.solve() {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(objective, Q::new(-1, 2));
                assert_eq!(x, vec![Q::new(1, 4), Q::new(1, 4)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_redundant_equalities() {
        let mut lp = LinearProgram::<f64>::new(3);
        lp.set_objective(2, 1.0);
        lp.add_eq(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 1.0);
        lp.add_eq(vec![(0, 2.0), (1, 2.0), (2, 2.0)], 2.0);
        lp.add_eq(vec![(0, 1.0), (1, -1.0)], 0.0);
        let (x, obj) = optimum(lp.solve());
        assert!(obj.abs() < 1e-12);
        assert!((x[0] - 0.5).abs() < 1e-9);
    }
}
