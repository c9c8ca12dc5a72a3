//! Numerical feasibility back ends: a dense phase-1 simplex for linear
//! feasibility with rigorous Farkas infeasibility certificates, and Dykstra
//! alternating projections for PSD-cone ∩ affine-subspace problems.
//!
//! The alternating-projection solver never certifies infeasibility of the
//! conic part; it either finds a point, proves the affine system itself
//! inconsistent, or stalls with a residual.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::mat::{c, cr, herm_eig, psd_project, Mat, MatError};
use crate::Tol;

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// Shapes of A, b, bounds disagree.
    ShapeMismatch,
    /// Input contained NaN or infinity.
    NonFinite,
    /// Pivoting lost too much precision to trust either answer.
    NumericalBreakdown,
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::ShapeMismatch => write!(f, "constraint shapes disagree"),
            SolveError::NonFinite => write!(f, "problem data contains non-finite entries"),
            SolveError::NumericalBreakdown => write!(f, "solver lost numerical precision"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolveError {}

/// Linear feasibility: find x with A x = b, x_j ≥ 0 where `nonneg[j]`,
/// x_j free otherwise.
#[derive(Clone, Debug)]
pub struct LinearFeasibilityProblem {
    /// Dense rows of A; every row has `nonneg.len()` entries.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub nonneg: Vec<bool>,
}

#[derive(Clone, Debug)]
pub enum LpStatus {
    /// A vertex of the feasible region (basic solution).
    Feasible(Vec<f64>),
    /// Farkas ray y: yᵀA ≥ 0 on nonnegative columns, yᵀA = 0 on free
    /// columns, yᵀb < 0. Its existence proves infeasibility.
    Infeasible { ray: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct LpReport {
    pub status: LpStatus,
    pub pivots: usize,
}

/// Max residual of a candidate solution: constraint violation and negative
/// mass on sign-constrained variables.
pub fn check_lp(p: &LinearFeasibilityProblem, x: &[f64]) -> f64 {
    let mut r: f64 = 0.0;
    for (row, &bi) in p.a.iter().zip(&p.b) {
        let ax: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        r = r.max((ax - bi).abs());
    }
    for (j, &nn) in p.nonneg.iter().enumerate() {
        if nn {
            r = r.max(-x[j]);
        }
    }
    r
}

/// Farkas certificate quality: returns (worst violation of yᵀA ≥ 0 resp.
/// yᵀA = 0, value of yᵀb). A valid ray has the first ≈ 0 and the second < 0.
pub fn check_farkas(p: &LinearFeasibilityProblem, y: &[f64]) -> (f64, f64) {
    let n = p.nonneg.len();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let yaj: f64 = p.a.iter().zip(y).map(|(row, &yi)| row[j] * yi).sum();
        if p.nonneg[j] {
            worst = worst.max(-yaj);
        } else {
            worst = worst.max(yaj.abs());
        }
    }
    let yb: f64 = p.b.iter().zip(y).map(|(b, &yi)| b * yi).sum();
    (worst, yb)
}

struct Tableau {
    width: usize,
    m: usize,
    t: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn pivot(&mut self, ir: usize, jc: usize) {
        let inv = 1.0 / self.at(ir, jc);
        for j in 0..self.width {
            self.t[ir * self.width + j] *= inv;
        }
        self.t[ir * self.width + jc] = 1.0;
        for i in 0..self.m {
            if i == ir {
                continue;
            }
            let f = self.at(i, jc);
            if f == 0.0 {
                continue;
            }
            for j in 0..self.width {
                self.t[i * self.width + j] -= f * self.t[ir * self.width + j];
            }
            self.t[i * self.width + jc] = 0.0;
        }
        let f = self.cost[jc];
        if f != 0.0 {
            for j in 0..self.width {
                self.cost[j] -= f * self.t[ir * self.width + j];
            }
            self.cost[jc] = 0.0;
        }
        self.basis[ir] = jc;
    }
}

/// Phase-1 simplex deciding feasibility of A x = b, x ≥ 0 on the flagged
/// columns, with Dantzig pricing and a largest-pivot ratio test.
///
/// Floating-point tableaus drift, and on the degenerate systems produced by
/// measurement-splitting queries the drift is chaotic, so the solver trusts
/// only the combinatorial part of its state: every `REFACTOR_EVERY` pivots
/// the tableau is rebuilt exactly from the original data at the current
/// basis, terminal conditions are evaluated on freshly rebuilt data only,
/// and one wholesale restart from the artificial basis repairs a rebuild
/// that exposes negative basic values. Both outcomes are recomputed from
/// the original data and validated (`check_lp`, `check_farkas`) before
/// being returned, so a wrong answer cannot survive; irrecoverable drift
/// surfaces as `NumericalBreakdown`. Deterministic: identical inputs take
/// identical pivot sequences and return identical reports.
pub fn lp_feasible(p: &LinearFeasibilityProblem, tol: &Tol) -> Result<LpReport, SolveError> {
    const REFACTOR_EVERY: usize = 100;
    let m = p.b.len();
    let n = p.nonneg.len();
    if p.a.len() != m || p.a.iter().any(|r| r.len() != n) {
        return Err(SolveError::ShapeMismatch);
    }
    if !p.a.iter().flatten().chain(p.b.iter()).all(|v| v.is_finite()) {
        return Err(SolveError::NonFinite);
    }

    // Free variables split as differences of nonnegative pairs.
    let mut colmap: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        colmap.push((j, 1.0));
        if !p.nonneg[j] {
            colmap.push((j, -1.0));
        }
    }
    let nc = colmap.len();
    let width = nc + m + 1;
    let rhs = nc + m;

    let flip: Vec<f64> = p.b.iter().map(|&bi| if bi < 0.0 { -1.0 } else { 1.0 }).collect();
    let bscale = 1.0 + p.b.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let ascale = 1.0 + p.a.iter().flatten().fold(0.0f64, |a, &x| a.max(x.abs()));

    let mut basis: Vec<usize> = (nc..nc + m).collect();
    // Columns whose reduced cost went negative while no admissible pivot
    // row existed; such costs are rounding noise (the phase-1 objective is
    // bounded below by zero), and retirement is permanent to keep the
    // rebuild loop finite.
    let mut retired = vec![false; nc + m];
    let mut eps_cost = 1e-9;
    let eps_piv = 1e-11;
    let mut pivots = 0usize;
    let cap = 200_000;
    let mut best_value = f64::INFINITY;
    let mut since_improved = 0usize;
    let stall_cap = 1_000 + 4 * (nc + m);
    let mut restarted = false;

    loop {
        // Exact tableau at the current basis: T = B⁻¹ [A' | I | b'] in the
        // sign-flipped frame, with the phase-1 cost row priced out.
        let mut bmat = vec![0.0f64; m * m];
        for (k, &bk) in basis.iter().enumerate() {
            if bk < nc {
                let (j, sg) = colmap[bk];
                for i in 0..m {
                    bmat[i * m + k] = flip[i] * sg * p.a[i][j];
                }
            } else {
                bmat[(bk - nc) * m + k] = 1.0;
            }
        }
        let bmat_copy = bmat.clone();
        let factored = lu_factor(bmat, m);
        let lu = match factored {
            Some(lu) => lu,
            None => {
                if restarted {
                    return Err(SolveError::NumericalBreakdown);
                }
                restarted = true;
                basis = (nc..nc + m).collect();
                continue;
            }
        };
        let mut t = vec![0.0f64; m * width];
        let mut col = vec![0.0f64; m];
        for (cidx, &(j, sg)) in colmap.iter().enumerate() {
            for i in 0..m {
                col[i] = flip[i] * sg * p.a[i][j];
            }
            lu.solve(&mut col);
            for i in 0..m {
                t[i * width + cidx] = col[i];
            }
        }
        for a in 0..m {
            for v in col.iter_mut() {
                *v = 0.0;
            }
            col[a] = 1.0;
            lu.solve(&mut col);
            for i in 0..m {
                t[i * width + nc + a] = col[i];
            }
        }
        for i in 0..m {
            col[i] = flip[i] * p.b[i];
        }
        lu.solve(&mut col);
        let min_basic = col.iter().fold(0.0f64, |a, &v| a.min(v));
        for i in 0..m {
            t[i * width + rhs] = col[i];
        }
        if min_basic < -1e-9 * bscale {
            // The drifted pivot path left the feasible region; restart once
            // from the artificial basis with accurate arithmetic.
            if restarted {
                return Err(SolveError::NumericalBreakdown);
            }
            restarted = true;
            basis = (nc..nc + m).collect();
            continue;
        }
        let cb: Vec<f64> = basis.iter().map(|&bk| if bk >= nc { 1.0 } else { 0.0 }).collect();
        let mut cost = vec![0.0f64; width];
        for j in 0..width {
            let priced: f64 = (0..m).map(|i| cb[i] * t[i * width + j]).sum();
            let direct = if j >= nc && j < rhs { 1.0 } else { 0.0 };
            cost[j] = direct - priced;
        }
        for &bk in &basis {
            cost[bk] = 0.0;
        }
        let mut tab = Tableau { width, m, t, cost, basis: basis.clone() };

        // Terminal checks run on freshly rebuilt data only.
        let value = -tab.cost[rhs];
        let attractive = (0..nc + m).any(|j| !retired[j] && tab.cost[j] < -eps_cost);
        if value <= 1e-12 * bscale || !attractive {
            if value <= 1e-9 * bscale {
                // Feasible side: basic values are the exact rhs column.
                let mut x = vec![0.0f64; n];
                for (k, &bk) in tab.basis.iter().enumerate() {
                    if bk < nc {
                        let (j, sg) = colmap[bk];
                        x[j] += sg * tab.at(k, rhs);
                    }
                }
                if check_lp(p, &x) <= tol.feas {
                    return Ok(LpReport { status: LpStatus::Feasible(x), pivots });
                }
                if value <= 1e-12 * bscale {
                    return Err(SolveError::NumericalBreakdown);
                }
            }
            // Infeasible side: the phase-1 dual from a fresh transpose
            // solve is the Farkas ray candidate.
            let mut bt = vec![0.0f64; m * m];
            for i in 0..m {
                for k in 0..m {
                    bt[k * m + i] = bmat_copy[i * m + k];
                }
            }
            let mut ray_ok = false;
            let mut ray = vec![0.0f64; m];
            if let Some(lut) = lu_factor(bt, m) {
                let mut y = cb.clone();
                lut.solve(&mut y);
                for i in 0..m {
                    ray[i] = -flip[i] * y[i];
                }
                let ymax = ray.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
                if ymax > 0.0 {
                    for v in &mut ray {
                        *v /= ymax;
                    }
                }
                let (worst, yb) = check_farkas(p, &ray);
                ray_ok = worst <= 1e-7 * ascale && yb <= -1e-10;
            }
            if ray_ok {
                return Ok(LpReport { status: LpStatus::Infeasible { ray }, pivots });
            }
            return Err(SolveError::NumericalBreakdown);
        }

        // Pivot burst between refactorizations.
        let mut burst = 0usize;
        loop {
            let value_now = -tab.cost[rhs];
            if value_now <= 1e-12 * bscale {
                break;
            }
            if value_now < best_value - 1e-12 * bscale {
                best_value = value_now;
                since_improved = 0;
            } else {
                since_improved += 1;
                if since_improved > stall_cap {
                    // A long degenerate stall means the remaining attractive
                    // columns are numerically indistinguishable from zero
                    // cost; coarsen the pricing threshold.
                    since_improved = 0;
                    eps_cost *= 100.0;
                    if eps_cost > 1e-4 {
                        break;
                    }
                }
            }
            // Entering column: most negative reduced cost.
            let mut enter = None;
            let mut most = -eps_cost;
            for j in 0..nc + m {
                if !retired[j] && tab.cost[j] < most {
                    most = tab.cost[j];
                    enter = Some(j);
                }
            }
            let Some(jc) = enter else { break };
            // A column whose whole tableau column sits at rounding level is
            // an artifact of drift (its attractive cost is noise for the
            // same reason); pivoting on such an entry would amplify noise
            // by ten orders of magnitude, so retire the column instead.
            let mut colmax = 0.0f64;
            for i in 0..m {
                let v = tab.at(i, jc).abs();
                if v > colmax {
                    colmax = v;
                }
            }
            if colmax <= 1e-9 {
                retired[jc] = true;
                tab.cost[jc] = 0.0;
                continue;
            }
            // Admissible pivots must also be large relative to the column's
            // scale, or the division would swamp the row with noise.
            let piv_floor = (1e-6 * colmax).min(1e-2).max(eps_piv);
            // Leaving row, two passes: find the minimum ratio, then among
            // rows tied with it (to rounding) pivot on the largest entry,
            // which protects the tableau from near-threshold divisions.
            // Numerators are clamped at zero: a basic value that drifted a
            // hair below zero must yield a degenerate step, not a negative
            // one that would drive the basis out of the feasible region.
            let mut rmin = f64::INFINITY;
            for i in 0..m {
                let a = tab.at(i, jc);
                if a > piv_floor {
                    rmin = rmin.min(tab.at(i, rhs).max(0.0) / a);
                }
            }
            if !rmin.is_finite() {
                retired[jc] = true;
                tab.cost[jc] = 0.0;
                continue;
            }
            let slack = 1e-9 * (1.0 + rmin.abs());
            let mut leave = 0usize;
            let mut best_piv = 0.0f64;
            for i in 0..m {
                let a = tab.at(i, jc);
                if a > piv_floor && tab.at(i, rhs).max(0.0) / a <= rmin + slack && a > best_piv {
                    best_piv = a;
                    leave = i;
                }
            }
            tab.pivot(leave, jc);
            pivots += 1;
            if pivots > cap {
                return Err(SolveError::NumericalBreakdown);
            }
            burst += 1;
            if burst >= REFACTOR_EVERY {
                break;
            }
        }
        basis = tab.basis;
    }
}

/// Dense LU factorization with partial pivoting for the basis systems the
/// simplex endgame re-solves from original data.
struct DenseLu {
    lu: Vec<f64>,
    perm: Vec<usize>,
    size: usize,
}

impl DenseLu {
    fn solve(&self, b: &mut [f64]) {
        let s = self.size;
        // Row interchanges were applied to whole rows during factorization,
        // so the stored multipliers live in final row coordinates: permute
        // the right-hand side completely before eliminating.
        for k in 0..s {
            b.swap(k, self.perm[k]);
        }
        for k in 0..s {
            for i in k + 1..s {
                b[i] -= self.lu[i * s + k] * b[k];
            }
        }
        for k in (0..s).rev() {
            let mut v = b[k];
            for j in k + 1..s {
                v -= self.lu[k * s + j] * b[j];
            }
            b[k] = v / self.lu[k * s + k];
        }
    }
}

/// Returns None when elimination meets an effectively singular pivot.
fn lu_factor(mut a: Vec<f64>, size: usize) -> Option<DenseLu> {
    let mut perm = vec![0usize; size];
    for k in 0..size {
        let mut best = k;
        let mut mag = a[k * size + k].abs();
        for i in k + 1..size {
            let v = a[i * size + k].abs();
            if v > mag {
                mag = v;
                best = i;
            }
        }
        if mag < 1e-13 {
            return None;
        }
        perm[k] = best;
        if best != k {
            for j in 0..size {
                a.swap(k * size + j, best * size + j);
            }
        }
        let inv = 1.0 / a[k * size + k];
        for i in k + 1..size {
            let f = a[i * size + k] * inv;
            a[i * size + k] = f;
            if f == 0.0 {
                continue;
            }
            for j in k + 1..size {
                a[i * size + j] -= f * a[k * size + j];
            }
        }
    }
    Some(DenseLu { lu: a, perm, size })
}

/// Feasibility over Hermitian X: X ⪰ 0 and Re Tr[A_i X] = b_i for every
/// constraint pair (A_i, b_i) with Hermitian A_i.
#[derive(Clone, Debug)]
pub struct PsdAffineProblem {
    pub dim: usize,
    pub constraints: Vec<(Mat, f64)>,
}

#[derive(Clone, Debug)]
pub enum PsdStatus {
    /// A PSD matrix meeting every affine constraint within `tol.feas`.
    Feasible(Mat),
    /// The affine system alone is inconsistent (rigorous: no Hermitian
    /// solution exists, PSD or not).
    InfeasibleCertified { residual: f64 },
    /// Projections plateaued; nothing is certified either way.
    Stalled { residual: f64, iterations: usize },
}

#[derive(Clone, Debug)]
pub struct PsdReport {
    pub status: PsdStatus,
    pub iterations: usize,
    /// Affine residual of the PSD-side iterate, one entry per iteration.
    pub residuals: Vec<f64>,
    /// Frobenius distance between successive affine-side iterates; after
    /// burn-in this sequence is non-increasing.
    pub steps: Vec<f64>,
}

/// Independent feasibility checker: (max affine residual, smallest eigenvalue).
pub fn check_psd_affine(p: &PsdAffineProblem, x: &Mat, tol: &Tol) -> Result<(f64, f64), MatError> {
    let mut r: f64 = 0.0;
    for (ai, bi) in &p.constraints {
        r = r.max((inner(ai, x) - bi).abs());
    }
    let eig = herm_eig(x, tol)?;
    Ok((r, eig.values.first().copied().unwrap_or(0.0)))
}

/// Re Tr[A X] for Hermitian A, X.
fn inner(a: &Mat, x: &Mat) -> f64 {
    debug_assert_eq!(a.rows(), x.rows());
    let mut acc = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let z = a.get(i, j).conj() * x.get(i, j);
            acc += z.re;
        }
    }
    acc
}

struct AffineProjector {
    ops: Vec<Mat>,
    targets: Vec<f64>,
    pinv: Vec<f64>, // k×k pseudo-inverse of the Gram matrix, row-major
    k: usize,
}

impl AffineProjector {
    fn new(p: &PsdAffineProblem, tol: &Tol) -> Result<AffineProjector, MatError> {
        let k = p.constraints.len();
        let ops: Vec<Mat> = p.constraints.iter().map(|(a, _)| a.hermitize()).collect();
        let targets: Vec<f64> = p.constraints.iter().map(|&(_, b)| b).collect();
        let mut gram = Mat::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let g = inner(&ops[i], &ops[j]);
                gram.set(i, j, cr(g));
                gram.set(j, i, cr(g));
            }
        }
        let eig = herm_eig(&gram, tol)?;
        let lmax = eig.values.last().copied().unwrap_or(0.0).max(0.0);
        let cut = 1e-12 * lmax.max(1.0);
        let mut pinv = vec![0.0f64; k * k];
        for (idx, &l) in eig.values.iter().enumerate() {
            if l <= cut {
                continue;
            }
            let col = eig.vectors.col(idx);
            let inv = 1.0 / l;
            for i in 0..k {
                for j in 0..k {
                    pinv[i * k + j] += inv * (col[i] * col[j].conj()).re;
                }
            }
        }
        Ok(AffineProjector { ops, targets, pinv, k })
    }

    fn residuals(&self, x: &Mat) -> Vec<f64> {
        self.ops
            .iter()
            .zip(&self.targets)
            .map(|(a, b)| b - inner(a, x))
            .collect()
    }

    fn max_residual(&self, x: &Mat) -> f64 {
        self.residuals(x).iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Least-squares projection onto the affine subspace.
    fn project(&self, x: &Mat) -> Mat {
        let r = self.residuals(x);
        let mut coef = vec![0.0f64; self.k];
        for i in 0..self.k {
            let mut acc = 0.0;
            for j in 0..self.k {
                acc += self.pinv[i * self.k + j] * r[j];
            }
            coef[i] = acc;
        }
        let mut out = x.clone();
        for (ci, op) in coef.iter().zip(&self.ops) {
            if *ci != 0.0 {
                out = out.add(&op.scale_re(*ci));
            }
        }
        out
    }
}

/// Dykstra alternating projections between the PSD cone and the affine
/// subspace. Detects inconsistent affine systems up front (rigorous
/// infeasibility). Otherwise returns Feasible or Stalled; a stall never
/// proves anything about the conic problem.
///
/// Instances whose solutions sit on a low-rank face of the cone make the
/// two sets meet tangentially and the plain iteration crawls, so the loop
/// periodically seeds a factored refinement C = WW† from the iterate's
/// dominant eigenvectors and polishes it with Gauss–Newton, which is fast
/// and exact near such solutions. Every candidate produced that way is
/// revalidated against the original constraints before it is returned; a
/// failed refinement proves nothing and the iteration continues.
pub fn psd_affine_feasible(p: &PsdAffineProblem, tol: &Tol) -> Result<PsdReport, MatError> {
    let d = p.dim;
    for (a, _) in &p.constraints {
        if a.rows() != d || a.cols() != d {
            return Err(MatError::DimensionMismatch { expected: d, got: a.rows() });
        }
        if !a.is_finite() {
            return Err(MatError::NonFinite);
        }
        let scale = a.max_abs().max(1.0);
        if a.herm_residual() > tol.herm * scale {
            return Err(MatError::NonHermitian { residual: a.herm_residual() });
        }
    }

    let proj = AffineProjector::new(p, tol)?;
    let bscale = 1.0 + proj.targets.iter().fold(0.0f64, |m, b| m.max(b.abs()));

    // Least-norm affine point; if even the affine system is inconsistent the
    // instance is infeasible outright.
    let x0 = proj.project(&Mat::zeros(d, d));
    let incon = proj.max_residual(&x0);
    if incon > tol.feas * bscale {
        return Ok(PsdReport {
            status: PsdStatus::InfeasibleCertified { residual: incon },
            iterations: 0,
            residuals: vec![incon],
            steps: Vec::new(),
        });
    }

    let mut x = x0;
    let mut pcorr = Mat::zeros(d, d);
    let mut qcorr = Mat::zeros(d, d);
    let mut residuals: Vec<f64> = Vec::new();
    let mut steps: Vec<f64> = Vec::new();

    let mut next_finish = 200usize;
    let mut last_finish_r = f64::INFINITY;

    for iter in 0..tol.max_iter {
        let y_in = x.add(&pcorr);
        let y = psd_project(&y_in, tol)?;
        pcorr = y_in.sub(&y);

        let r = proj.max_residual(&y);
        residuals.push(r);
        if r <= tol.feas {
            let (rr, lmin) = check_psd_affine(p, &y, tol)?;
            if rr <= tol.feas && lmin >= -tol.feas {
                return Ok(PsdReport {
                    status: PsdStatus::Feasible(y),
                    iterations: iter + 1,
                    residuals,
                    steps,
                });
            }
        }

        // Re-attempting the refinement pays only while the base iteration
        // still makes progress; infeasible instances floor and get one try.
        if iter + 1 == next_finish {
            next_finish *= 2;
            if r < 0.5 * last_finish_r {
                last_finish_r = r;
                if let Some(c) = face_finish(p, &y, tol)? {
                    return Ok(PsdReport {
                        status: PsdStatus::Feasible(c),
                        iterations: iter + 1,
                        residuals,
                        steps,
                    });
                }
            }
        }

        let x_in = y.add(&qcorr);
        let x_new = proj.project(&x_in);
        qcorr = x_in.sub(&x_new);
        steps.push(x_new.sub(&x).fro_norm());
        x = x_new;

        let w = tol.plateau_window;
        if residuals.len() > w {
            let old = residuals[residuals.len() - 1 - w];
            let now = *residuals.last().unwrap();
            if old - now < tol.plateau_rel * old.max(1e-300) {
                if let Some(report) =
                    finish_or_accept(p, &y, &x, tol, iter + 1, &residuals, &steps)?
                {
                    return Ok(report);
                }
                return Ok(PsdReport {
                    status: PsdStatus::Stalled { residual: now, iterations: iter + 1 },
                    iterations: iter + 1,
                    residuals,
                    steps,
                });
            }
        }
    }
    let y_last = psd_project(&x.add(&pcorr), tol)?;
    if let Some(report) =
        finish_or_accept(p, &y_last, &x, tol, tol.max_iter, &residuals, &steps)?
    {
        return Ok(report);
    }
    let last = residuals.last().copied().unwrap_or(f64::INFINITY);
    let n = residuals.len();
    Ok(PsdReport {
        status: PsdStatus::Stalled { residual: last, iterations: n },
        iterations: n,
        residuals,
        steps,
    })
}

/// Last-chance acceptance before declaring a stall: try the factored
/// refinement once more, then fall back to the affine-side iterate, which
/// meets the affine constraints exactly and is acceptable as soon as its
/// most negative eigenvalue is within tolerance.
fn finish_or_accept(
    p: &PsdAffineProblem,
    y: &Mat,
    x: &Mat,
    tol: &Tol,
    iterations: usize,
    residuals: &[f64],
    steps: &[f64],
) -> Result<Option<PsdReport>, MatError> {
    if let Some(c) = face_finish(p, y, tol)? {
        return Ok(Some(PsdReport {
            status: PsdStatus::Feasible(c),
            iterations,
            residuals: residuals.to_vec(),
            steps: steps.to_vec(),
        }));
    }
    let (rr, lmin) = check_psd_affine(p, x, tol)?;
    if rr <= tol.feas && lmin >= -tol.feas {
        return Ok(Some(PsdReport {
            status: PsdStatus::Feasible(x.clone()),
            iterations,
            residuals: residuals.to_vec(),
            steps: steps.to_vec(),
        }));
    }
    Ok(None)
}

/// Seed a factored candidate from the iterate's dominant eigenvectors (one
/// attempt per spectral cutoff) and polish it. Candidates are validated
/// against the original constraints with a margin below `tol.feas`, so
/// whatever downstream reconstruction truncates still revalidates. Failure
/// certifies nothing about the instance.
fn face_finish(p: &PsdAffineProblem, y: &Mat, tol: &Tol) -> Result<Option<Mat>, MatError> {
    let m = p.dim;
    let eig = herm_eig(y, tol)?;
    let lmax = eig.values.last().copied().unwrap_or(0.0);
    if lmax <= tol.psd {
        return Ok(None);
    }
    // Tangential slowdown is a low-rank-face phenomenon; a near-full-rank
    // candidate means the base iteration is the better tool, and the
    // Gauss–Newton normal matrix would be needlessly large.
    let kmax = (2.0 * (m as f64).sqrt()).ceil() as usize;
    let mut tried: Vec<usize> = Vec::new();
    for theta in [1e-2, 1e-4] {
        let keep: Vec<usize> = (0..m).filter(|&i| eig.values[i] > theta * lmax).collect();
        let k = keep.len();
        if k == 0 || k > kmax || tried.contains(&k) {
            continue;
        }
        tried.push(k);
        let w0 = Mat::from_fn(m, k, |r, c| {
            eig.vectors.get(r, keep[c]).scale(eig.values[keep[c]].sqrt())
        });
        if let Some(c) = low_rank_refine(p, w0, tol)? {
            let (rr, lmin) = check_psd_affine(p, &c, tol)?;
            if rr <= tol.feas / (2.0 * (m as f64).sqrt()) && lmin >= -tol.psd {
                return Ok(Some(c));
            }
        }
    }
    Ok(None)
}

/// Gauss–Newton on the factored feasibility system ⟨A_i, WW†⟩ = b_i over
/// W ∈ C^{m×k}. The candidate WW† is positive semidefinite by construction,
/// so only the affine residual has to be driven down; near a rank-k
/// solution the convergence is quadratic. The normal matrix is singular
/// along the W ↦ WU gauge orbit, which the pseudo-inverse handles. Returns
/// `None` when the residual refuses to collapse — in particular on
/// instances whose solutions have rank above k and on infeasible ones.
fn low_rank_refine(p: &PsdAffineProblem, w0: Mat, tol: &Tol) -> Result<Option<Mat>, MatError> {
    let m = p.dim;
    let k = w0.cols();
    let q = 2 * m * k;
    let nc = p.constraints.len();
    let bscale = 1.0 + p.constraints.iter().fold(0.0f64, |mx, (_, b)| mx.max(b.abs()));
    let target = 1e-11 * bscale;

    let resid = |w: &Mat| -> Vec<f64> {
        let c = w.mul(&w.adjoint());
        p.constraints.iter().map(|(a, b)| inner(a, &c) - b).collect()
    };
    let max_abs = |f: &[f64]| f.iter().fold(0.0f64, |mx, r| mx.max(r.abs()));

    let mut w = w0;
    let mut f = resid(&w);
    let mut fmax = max_abs(&f);
    for _ in 0..40 {
        if fmax <= target {
            return Ok(Some(w.mul(&w.adjoint()).hermitize()));
        }
        // Row i of the Jacobian over the real parameters (Re W, Im W) is
        // 2·(Re[(A_i W)_{rc}], Im[(A_i W)_{rc}]); assemble normal equations.
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(nc);
        for (a, _) in &p.constraints {
            let g = a.mul(&w);
            let mut row = Vec::with_capacity(q);
            for r in 0..m {
                for c in 0..k {
                    let z = g.get(r, c);
                    row.push(2.0 * z.re);
                    row.push(2.0 * z.im);
                }
            }
            rows.push(row);
        }
        let mut normal = Mat::zeros(q, q);
        let mut grad = vec![0.0f64; q];
        for (row, fi) in rows.iter().zip(&f) {
            for i in 0..q {
                if row[i] == 0.0 {
                    continue;
                }
                grad[i] += row[i] * fi;
                for j in i..q {
                    let v = normal.get(i, j).re + row[i] * row[j];
                    normal.set(i, j, cr(v));
                }
            }
        }
        for i in 0..q {
            for j in 0..i {
                normal.set(i, j, normal.get(j, i));
            }
        }
        let neig = herm_eig(&normal, tol)?;
        let nmax = neig.values.last().copied().unwrap_or(0.0).max(0.0);
        let cut = 1e-12 * nmax.max(1.0);
        let mut delta = vec![0.0f64; q];
        for (idx, &l) in neig.values.iter().enumerate() {
            if l <= cut {
                continue;
            }
            let col = neig.vectors.col(idx);
            let mut proj = 0.0;
            for i in 0..q {
                proj += col[i].re * grad[i];
            }
            let scale = proj / l;
            for i in 0..q {
                delta[i] -= scale * col[i].re;
            }
        }
        // Backtracking on the residual sup-norm keeps the step a descent.
        let mut improved = false;
        let mut t = 1.0f64;
        for _ in 0..16 {
            let w_try = Mat::from_fn(m, k, |r, cc| {
                let base = w.get(r, cc);
                let idx = 2 * (r * k + cc);
                base + c(t * delta[idx], t * delta[idx + 1])
            });
            let f_try = resid(&w_try);
            let fmax_try = max_abs(&f_try);
            if fmax_try < 0.9 * fmax {
                w = w_try;
                f = f_try;
                fmax = fmax_try;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            return Ok(None);
        }
    }
    Ok(None)
}
