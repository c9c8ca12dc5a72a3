//! Decision procedures for the relations between measurements: classical
//! post-processing order, quantum pre-processing order, range order for
//! commuting targets, the two equivalences (two-sided and unitary), and
//! cleanness classification.
//!
//! Every decider dispatches exact structural rules first — interval tests,
//! rank-one and informational-completeness preservation, spectral-interval
//! nesting, unit-peak constructions — and only then falls back on numerical
//! feasibility. `Fails` is reserved for rigorous certificates; a stalled
//! solver yields `Unknown` with its residual.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // inherent f64 methods cover this when std is linked
use num_traits::Float;

use crate::channel::{
    stinespring_to_target, unit_peak_connector, Channel, ChannelError, OperatorMap,
};
use crate::fixtures::observable;
use crate::mat::{c, cr, herm_eig, vdot, Mat, MatError, C64};
use crate::povm::{Povm, PovmError};
use crate::rng::Rng;
use crate::solver::{
    lp_feasible, psd_affine_feasible, LinearFeasibilityProblem, LpStatus, PsdAffineProblem,
    PsdStatus, SolveError,
};
use crate::verdict::{certs, Status, Verdict, Witness};
use crate::Tol;

#[derive(Debug, Clone, PartialEq)]
pub enum OrderError {
    DimensionMismatch { expected: usize, got: usize },
    InvalidStochastic { residual: f64 },
    Measurement(PovmError),
    Map(ChannelError),
    Numerics(MatError),
    Solver(SolveError),
}

impl fmt::Display for OrderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            OrderError::InvalidStochastic { residual } => {
                write!(f, "not a column-stochastic matrix (residual {residual:.3e})")
            }
            OrderError::Measurement(e) => write!(f, "measurement: {e}"),
            OrderError::Map(e) => write!(f, "map: {e}"),
            OrderError::Numerics(e) => write!(f, "numerics: {e}"),
            OrderError::Solver(e) => write!(f, "solver: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OrderError {}

impl From<PovmError> for OrderError {
    fn from(e: PovmError) -> OrderError {
        OrderError::Measurement(e)
    }
}

impl From<ChannelError> for OrderError {
    fn from(e: ChannelError) -> OrderError {
        OrderError::Map(e)
    }
}

impl From<MatError> for OrderError {
    fn from(e: MatError) -> OrderError {
        OrderError::Numerics(e)
    }
}

impl From<SolveError> for OrderError {
    fn from(e: SolveError) -> OrderError {
        OrderError::Solver(e)
    }
}

/// Conditional-probability table p(i|j): rows follow the coarse-grained
/// measurement's outcomes i, columns the source's outcomes j. Entries are
/// nonnegative and every column sums to one (within `feas`).
#[derive(Clone, Debug)]
pub struct StochasticMatrix {
    entries: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl StochasticMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>, tol: &Tol) -> Result<StochasticMatrix, OrderError> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(OrderError::DimensionMismatch { expected: rows * cols, got: entries.len() });
        }
        let mut worst: f64 = 0.0;
        for &e in &entries {
            if !e.is_finite() {
                return Err(OrderError::InvalidStochastic { residual: f64::INFINITY });
            }
            if e < 0.0 {
                worst = worst.max(-e);
            }
        }
        for j in 0..cols {
            let sum: f64 = (0..rows).map(|i| entries[i * cols + j]).sum();
            worst = worst.max((sum - 1.0).abs());
        }
        if worst > tol.feas {
            return Err(OrderError::InvalidStochastic { residual: worst });
        }
        Ok(StochasticMatrix { entries, rows, cols })
    }

    pub fn identity(n: usize) -> StochasticMatrix {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        StochasticMatrix { entries, rows: n, cols: n }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// Coarse-grain: Q_i = Σ_j p(i|j) P_j.
    pub fn apply(&self, p: &Povm, tol: &Tol) -> Result<Povm, OrderError> {
        if p.len() != self.cols {
            return Err(OrderError::DimensionMismatch { expected: self.cols, got: p.len() });
        }
        let d = p.dim();
        let mut elements = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = Mat::zeros(d, d);
            for j in 0..self.cols {
                let w = self.get(i, j);
                if w != 0.0 {
                    acc = acc.add(&p.element(j).scale_re(w));
                }
            }
            elements.push(acc.hermitize());
        }
        Povm::new(elements, tol).map_err(OrderError::Measurement)
    }
}

/// Hermitian basis of d×d space: diagonal units, then symmetric and
/// antisymmetric off-diagonal pairs — d² operators, pairwise orthogonal
/// under ⟨A,B⟩ = Tr[AB].
fn herm_basis(d: usize) -> Vec<Mat> {
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut m = Mat::zeros(d, d);
        m.set(i, i, cr(1.0));
        basis.push(m);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut re = Mat::zeros(d, d);
            re.set(i, j, cr(1.0));
            re.set(j, i, cr(1.0));
            basis.push(re);
            let mut im = Mat::zeros(d, d);
            im.set(i, j, c(0.0, -1.0));
            im.set(j, i, c(0.0, 1.0));
            basis.push(im);
        }
    }
    basis
}

/// Real coordinates Tr[G_α h] of a Hermitian h against `herm_basis`.
fn herm_coords(h: &Mat, basis: &[Mat]) -> Vec<f64> {
    basis.iter().map(|g| g.mul(h).trace().re).collect()
}

fn max_element_gap(p: &Povm, q: &Povm) -> f64 {
    p.elements()
        .iter()
        .zip(q.elements())
        .map(|(a, b)| a.sub(b).max_abs())
        .fold(0.0, f64::max)
}

/// Does there exist a conditional-probability table with Q_i = Σ_j p(i|j)P_j?
/// Decided exactly by linear feasibility; infeasibility carries a dual
/// certificate.
pub fn post_order(p: &Povm, q: &Povm, tol: &Tol) -> Result<Verdict, OrderError> {
    if p.dim() != q.dim() {
        return Err(OrderError::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let d = p.dim();
    let np = p.len();
    let nq = q.len();

    if np == nq && max_element_gap(p, q) <= 1e-12 {
        return Ok(Verdict::holds()
            .with_witness(Witness::Stochastic(StochasticMatrix::identity(np)))
            .with_certificate(certs::EXACT_EQUALITY)
            .with_residual(0.0));
    }

    let basis = herm_basis(d);
    let pc: Vec<Vec<f64>> = p.elements().iter().map(|e| herm_coords(e, &basis)).collect();
    let qc: Vec<Vec<f64>> = q.elements().iter().map(|e| herm_coords(e, &basis)).collect();

    // Variables m_ij ≥ 0 at index i·np + j.
    let nv = nq * np;
    let mut a = Vec::with_capacity(np + nq * d * d);
    let mut b = Vec::with_capacity(np + nq * d * d);
    for j in 0..np {
        let mut row = vec![0.0; nv];
        for i in 0..nq {
            row[i * np + j] = 1.0;
        }
        a.push(row);
        b.push(1.0);
    }
    for i in 0..nq {
        for alpha in 0..d * d {
            let mut row = vec![0.0; nv];
            for j in 0..np {
                row[i * np + j] = pc[j][alpha];
            }
            a.push(row);
            b.push(qc[i][alpha]);
        }
    }
    let prob = LinearFeasibilityProblem { a, b, nonneg: vec![true; nv] };
    let report = lp_feasible(&prob, tol)?;
    match report.status {
        LpStatus::Feasible(x) => {
            let m = StochasticMatrix::new(nq, np, x, tol)?;
            let image = m.apply(p, tol)?;
            let worst = max_element_gap(&image, q);
            if worst > tol.feas {
                return Ok(Verdict::unknown(worst));
            }
            Ok(Verdict::holds().with_witness(Witness::Stochastic(m)).with_residual(worst))
        }
        LpStatus::Infeasible { .. } => Ok(Verdict::fails(certs::LP_FARKAS)),
    }
}

/// Extremal eigenvalue intervals of Q nest inside those of P, element by
/// element — necessary for any unital completely positive map carrying
/// P onto Q.
fn intervals_nest(pp: &[(f64, f64)], qp: &[(f64, f64)], slack: f64) -> bool {
    pp.iter()
        .zip(qp)
        .all(|(&(pm, px), &(qm, qx))| pm <= qm + slack && qx <= px + slack)
}

/// Outcome of the Choi-matrix feasibility route.
enum FeasOutcome {
    Feasible(Channel, f64),
    /// The affine system alone has no Hermitian solution — no linear map of
    /// any kind connects the two families.
    Inconsistent(f64),
    Stalled(f64),
}

/// Search for a unital completely positive map with E(P_e) = Q_e via PSD ∩
/// affine feasibility on the Choi matrix. Requires equal cardinalities and
/// dimensions (caller pads).
fn choi_feasibility(p: &Povm, q: &Povm, tol: &Tol) -> Result<FeasOutcome, OrderError> {
    let d = p.dim();
    let basis = herm_basis(d);
    let id = Mat::identity(d);
    let mut constraints = Vec::with_capacity(d * d * (p.len() + 1));
    for g in &basis {
        constraints.push((id.kron(g), g.trace().re));
    }
    for (pe, qe) in p.elements().iter().zip(q.elements()) {
        let pet = pe.transpose();
        for g in &basis {
            constraints.push((pet.kron(g), g.mul(qe).trace().re));
        }
    }
    let prob = PsdAffineProblem { dim: d * d, constraints };
    let report = psd_affine_feasible(&prob, tol)?;
    match report.status {
        PsdStatus::Feasible(choi) => {
            let slack = tol.psd.max(2.0 * tol.feas);
            let ch = match Channel::from_choi_with_slack(&choi, d, d, tol, slack) {
                Ok(ch) => ch,
                Err(_) => return Ok(FeasOutcome::Stalled(tol.feas)),
            };
            let mut worst = ch.unital_residual();
            for (pe, qe) in p.elements().iter().zip(q.elements()) {
                worst = worst.max(ch.apply(pe)?.sub(qe).max_abs());
            }
            if worst <= tol.feas {
                Ok(FeasOutcome::Feasible(ch, worst))
            } else {
                Ok(FeasOutcome::Stalled(worst))
            }
        }
        PsdStatus::InfeasibleCertified { residual } => Ok(FeasOutcome::Inconsistent(residual)),
        PsdStatus::Stalled { residual, .. } => Ok(FeasOutcome::Stalled(residual)),
    }
}

/// The bare numerical route, with none of the exact-rule dispatch: search
/// for a unital completely positive map with E(P_e) = Q_e and report
/// Holds (revalidated witness), Fails (affine system provably
/// inconsistent), or Unknown (solver plateau). Exists as an independent
/// code path so the exact rules can be cross-checked against it.
pub fn connecting_channel(p: &Povm, q: &Povm, tol: &Tol) -> Result<Verdict, OrderError> {
    if p.dim() != q.dim() {
        return Err(OrderError::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let n = p.len().max(q.len());
    let p = p.padded(n);
    let q = q.padded(n);
    Ok(match choi_feasibility(&p, &q, tol)? {
        FeasOutcome::Feasible(ch, worst) => Verdict::holds()
            .with_witness(Witness::Channel(ch))
            .with_certificate(certs::CHOI_FEASIBILITY)
            .with_residual(worst),
        FeasOutcome::Inconsistent(r) => {
            Verdict::fails(certs::AFFINE_INCONSISTENCY).with_residual(r)
        }
        FeasOutcome::Stalled(r) => Verdict::unknown(r),
    })
}

/// Does a unital completely positive map carry P onto Q (outcome by
/// outcome)? Unequal cardinalities are padded with vanishing elements.
///
/// Dispatch: two-outcome interval rule, exact preservation prefilters,
/// unit-peak construction, then Choi feasibility. `Fails` only ever carries
/// an exact certificate; a stalled solver reports `Unknown`.
pub fn pre_order(p: &Povm, q: &Povm, tol: &Tol) -> Result<Verdict, OrderError> {
    if p.dim() != q.dim() {
        return Err(OrderError::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let n = p.len().max(q.len());
    let p = p.padded(n);
    let q = q.padded(n);
    let d = p.dim();

    if max_element_gap(&p, &q) <= 1e-12 {
        return Ok(Verdict::holds()
            .with_witness(Witness::Channel(Channel::identity(d)))
            .with_certificate(certs::EXACT_EQUALITY)
            .with_residual(0.0));
    }

    let pp = p.eig_profile(tol)?;
    let qp = q.eig_profile(tol)?;

    // Two-outcome families: nesting of the extremal-eigenvalue intervals is
    // necessary and sufficient. The witness still comes from the solver; a
    // stall leaves the verdict standing with the witness pending.
    if n == 2 {
        if !intervals_nest(&pp.per_element, &qp.per_element, tol.eig) {
            return Ok(Verdict::fails(certs::EFFECT_INTERVAL_INCLUSION));
        }
        let verdict = Verdict::holds().with_certificate(certs::EFFECT_INTERVAL_INCLUSION);
        return Ok(match choi_feasibility(&p, &q, tol)? {
            FeasOutcome::Feasible(ch, worst) => {
                verdict.with_witness(Witness::Channel(ch)).with_residual(worst)
            }
            FeasOutcome::Inconsistent(r) | FeasOutcome::Stalled(r) => {
                verdict.with_residual(r).pending()
            }
        });
    }

    // Exact necessary conditions.
    if !intervals_nest(&pp.per_element, &qp.per_element, tol.eig) {
        return Ok(Verdict::fails(certs::SPECTRUM_WIDTH_VIOLATION));
    }
    let pf = p.classify(tol)?;
    let qf = q.classify(tol)?;
    if qf.rank_one {
        if !pf.rank_one {
            return Ok(Verdict::fails(certs::RANK_ONE_PRESERVATION));
        }
        let trace_gap = p
            .elements()
            .iter()
            .zip(q.elements())
            .map(|(a, b)| (a.trace().re - b.trace().re).abs())
            .fold(0.0, f64::max);
        if trace_gap > 1e-8 {
            return Ok(Verdict::fails(certs::RANK_ONE_TRACE_MISMATCH));
        }
    }
    if qf.infocomplete && !pf.infocomplete {
        return Ok(Verdict::fails(certs::INFOCOMPLETE_PRESERVATION));
    }

    // Every element of P peaks at 1 and there are at most d outcomes: the
    // isometry construction maps P onto any same-cardinality target.
    if n <= d && pp.all_unit_peaks(tol) {
        if let Ok(ch) = unit_peak_connector(&p, &q, tol) {
            let mut worst = ch.unital_residual();
            for (pe, qe) in p.elements().iter().zip(q.elements()) {
                worst = worst.max(ch.apply(pe)?.sub(qe).max_abs());
            }
            if worst <= tol.feas {
                return Ok(Verdict::holds()
                    .with_witness(Witness::Channel(ch))
                    .with_certificate(certs::UNIT_PEAK_CONSTRUCTION)
                    .with_residual(worst));
            }
        }
    }

    Ok(match choi_feasibility(&p, &q, tol)? {
        FeasOutcome::Feasible(ch, worst) => Verdict::holds()
            .with_witness(Witness::Channel(ch))
            .with_certificate(certs::CHOI_FEASIBILITY)
            .with_residual(worst),
        FeasOutcome::Inconsistent(r) => {
            Verdict::fails(certs::AFFINE_INCONSISTENCY).with_residual(r)
        }
        FeasOutcome::Stalled(r) => Verdict::unknown(r),
    })
}

/// Result of a unitary-equivalence test: a witness, a rigorous refusal, or
/// an inconclusive outcome.
#[derive(Clone, Debug)]
pub enum UnitaryEquivalence {
    Unitary(Mat),
    No,
    Undecided,
}

/// Find U with Q_e = U P_e U† for all e, or rule it out.
///
/// Spanning families pin the connecting linear map uniquely, so the answer
/// is decisive there; rank-one families are aligned through their Gram
/// matrices; anything else is undecided.
pub fn unitary_equivalent(p: &Povm, q: &Povm, tol: &Tol) -> Result<UnitaryEquivalence, OrderError> {
    if p.dim() != q.dim() {
        return Err(OrderError::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    if p.len() != q.len() {
        return Err(OrderError::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    let d = p.dim();
    let n = p.len();
    if max_element_gap(p, q) <= 1e-12 {
        return Ok(UnitaryEquivalence::Unitary(Mat::identity(d)));
    }
    let pf = p.classify(tol)?;
    let qf = q.classify(tol)?;

    if pf.infocomplete {
        // Columns |P_e⟩⟩ span operator space, so T·|P_e⟩⟩ = |Q_e⟩⟩ has at
        // most one solution: T = MQ·MP⁺. Inconsistency or a non-unitary T
        // rules the equivalence out.
        let mp = Mat::from_fn(d * d, n, |r, e| p.element(e).data()[r]);
        let mq = Mat::from_fn(d * d, n, |r, e| q.element(e).data()[r]);
        let h = mp.mul(&mp.adjoint());
        let b = mq.mul(&mp.adjoint());
        // T·H = B for Hermitian invertible H: T = (H⁻¹B†)†.
        let tdag = match crate::mat::solve(&h, &b.adjoint()) {
            Ok(x) => x,
            Err(_) => return Ok(UnitaryEquivalence::Undecided),
        };
        let t = tdag.adjoint();
        let scale = mq.max_abs().max(1.0);
        if t.mul(&mp).sub(&mq).max_abs() > 1e-7 * scale {
            return Ok(UnitaryEquivalence::No);
        }
        let om = OperatorMap::from_matrix(t, d, d)?;
        let k = match om.to_unitary(tol) {
            Some(k) => k,
            None => return Ok(UnitaryEquivalence::No),
        };
        // The recovered operator conjugates one way or the other; take the
        // orientation that matches.
        for u in [k.adjoint(), k.clone()] {
            let worst = p
                .elements()
                .iter()
                .zip(q.elements())
                .map(|(pe, qe)| u.mul(pe).mul(&u.adjoint()).sub(qe).max_abs())
                .fold(0.0, f64::max);
            if worst <= 1e-8 {
                return Ok(UnitaryEquivalence::Unitary(crate::channel::phase_normalize(&u)));
            }
        }
        return Ok(UnitaryEquivalence::No);
    }

    if pf.rank_one && qf.rank_one {
        return rank_one_alignment(p, q, tol);
    }
    Ok(UnitaryEquivalence::Undecided)
}

/// Align two rank-one families: equal Gram moduli are necessary; phases are
/// propagated over the overlap graph and U = W′V† (V V† = I by completeness).
fn rank_one_alignment(p: &Povm, q: &Povm, tol: &Tol) -> Result<UnitaryEquivalence, OrderError> {
    let d = p.dim();
    let n = p.len();
    let vs = rank_one_vectors(p, tol)?;
    let ws = rank_one_vectors(q, tol)?;
    let mut gp = Mat::zeros(n, n);
    let mut gq = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gp.set(i, j, vdot(&vs[i], &vs[j]));
            gq.set(i, j, vdot(&ws[i], &ws[j]));
        }
    }
    let mut moduli_gap: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            moduli_gap = moduli_gap.max((gp.get(i, j).norm() - gq.get(i, j).norm()).abs());
        }
    }
    if moduli_gap > 1e-7 {
        // A unitary preserves all overlap magnitudes.
        return Ok(UnitaryEquivalence::No);
    }

    // Phase propagation: w_i = θ_i U v_i forces θ_j = θ_i·G^Q_ij/G^P_ij on
    // every significant overlap; breadth-first over the overlap graph.
    let mut theta: Vec<Option<C64>> = vec![None; n];
    let eps = 1e-7;
    for start in 0..n {
        if theta[start].is_some() || gp.get(start, start).norm() <= eps {
            continue;
        }
        theta[start] = Some(cr(1.0));
        let mut queue = vec![start];
        while let Some(i) = queue.pop() {
            let ti = theta[i].unwrap();
            for j in 0..n {
                if theta[j].is_none() && gp.get(i, j).norm() > eps {
                    let ratio = gq.get(i, j) / gp.get(i, j);
                    let ratio = ratio / cr(ratio.norm());
                    theta[j] = Some(ti * ratio);
                    queue.push(j);
                }
            }
        }
    }

    // U = Σ_i (θ_i⁻¹ w_i) v_i†; completeness makes V V† the identity.
    let mut u = Mat::zeros(d, d);
    for i in 0..n {
        let ti = match theta[i] {
            Some(t) => t,
            None => continue, // vanishing element
        };
        let wprime: Vec<C64> = ws[i].iter().map(|z| z * ti.conj()).collect();
        u = u.add(&Mat::outer(&wprime, &vs[i]));
    }
    if u.adjoint().mul(&u).sub(&Mat::identity(d)).max_abs() > 1e-8 {
        return Ok(UnitaryEquivalence::Undecided);
    }
    let worst = p
        .elements()
        .iter()
        .zip(q.elements())
        .map(|(pe, qe)| u.mul(pe).mul(&u.adjoint()).sub(qe).max_abs())
        .fold(0.0, f64::max);
    if worst <= 1e-8 {
        Ok(UnitaryEquivalence::Unitary(crate::channel::phase_normalize(&u)))
    } else {
        Ok(UnitaryEquivalence::Undecided)
    }
}

/// Scaled eigenvectors √λ·u for rank-one elements (zero vector for
/// vanishing elements).
fn rank_one_vectors(p: &Povm, tol: &Tol) -> Result<Vec<Vec<C64>>, OrderError> {
    let d = p.dim();
    let mut out = Vec::with_capacity(p.len());
    for e in p.elements() {
        let eig = herm_eig(e, tol)?;
        let top = *eig.values.last().unwrap();
        if top <= tol.rank {
            out.push(vec![cr(0.0); d]);
        } else {
            let u = eig.vectors.col(eig.values.len() - 1);
            out.push(u.into_iter().map(|z| z * cr(top.sqrt())).collect());
        }
    }
    Ok(out)
}

/// Global minimization of Σ_e‖Q_e − UP_eU†‖_F² over qubit unitaries, in
/// closed form. Qubit conjugation fixes the trace part of each element and
/// acts as a proper rotation on its coordinate 3-vector, so the optimal
/// unitary is the best rotational alignment of the two vector families.
/// That alignment problem is solved exactly: the optimal rotation, encoded
/// as a unit quaternion, is the top eigenvector of the 4×4 symmetric gain
/// matrix assembled from the cross-correlation of the families, and the
/// quaternion coefficients are the entries of the unitary itself. Because
/// the optimum is global, a large residual here rules out every qubit
/// unitary, not just the ones a local search happened to visit.
fn qubit_unitary_search(p: &Povm, q: &Povm, tol: &Tol) -> Result<(Mat, f64), OrderError> {
    // Coordinate 3-vector of a 2×2 Hermitian matrix (trace part dropped).
    fn coords(e: &Mat) -> [f64; 3] {
        [
            e.get(0, 1).re,
            -e.get(0, 1).im,
            0.5 * (e.get(0, 0).re - e.get(1, 1).re),
        ]
    }
    // Cross-correlation B = Σ_e target_e · source_eᵀ.
    let mut b = [[0.0f64; 3]; 3];
    for (pe, qe) in p.elements().iter().zip(q.elements()) {
        let s = coords(pe);
        let t = coords(qe);
        for i in 0..3 {
            for j in 0..3 {
                b[i][j] += t[i] * s[j];
            }
        }
    }
    // Quadratic gain: tr(R Bᵀ) = ⟨(w, v), K (w, v)⟩ for the rotation R with
    // quaternion (w, v). Maximizing over unit quaternions is an eigenproblem.
    let sigma = b[0][0] + b[1][1] + b[2][2];
    let z = [b[2][1] - b[1][2], b[0][2] - b[2][0], b[1][0] - b[0][1]];
    let mut k = Mat::zeros(4, 4);
    k.set(0, 0, cr(sigma));
    for i in 0..3 {
        k.set(0, i + 1, cr(z[i]));
        k.set(i + 1, 0, cr(z[i]));
        for j in 0..3 {
            let val = b[i][j] + b[j][i] - if i == j { sigma } else { 0.0 };
            k.set(i + 1, j + 1, cr(val));
        }
    }
    let eig = herm_eig(&k, tol)?;
    let top = eig.vectors.col(eig.values.len() - 1);
    // The eigensolver works in complex arithmetic; rotate the dominant
    // component of the (real) eigenvector back onto the real axis.
    let lead = top
        .iter()
        .copied()
        .fold(cr(0.0), |a, v| if v.norm_sqr() > a.norm_sqr() { v } else { a });
    let phase = lead.conj() / cr(lead.norm_sqr().sqrt().max(1e-300));
    let quat: Vec<f64> = top.iter().map(|v| (v * phase).re).collect();
    let norm = quat.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let (w, v1, v2, v3) =
        (quat[0] / norm, quat[1] / norm, quat[2] / norm, quat[3] / norm);
    // U = w·I − i(v1 σx + v2 σy + v3 σz); unit quaternions give unitaries.
    let u = Mat::from_data(
        2,
        2,
        vec![c(w, -v3), c(-v2, -v1), c(v2, -v1), c(w, v3)],
    );
    let worst = p
        .elements()
        .iter()
        .zip(q.elements())
        .map(|(pe, qe)| u.mul(pe).mul(&u.adjoint()).sub(qe).max_abs())
        .fold(0.0, f64::max);
    Ok((u, worst))
}

/// Two-sided pre-processing equivalence. Exact prefilters (extremal
/// eigenvalue profiles, rank-one and informational-completeness parity)
/// come first; qubits are decided by unitary search, spanning families by
/// the unique connecting map, rank-one targets by one-sided domination;
/// the general fallback combines both one-sided queries.
pub fn pre_equiv(p: &Povm, q: &Povm, tol: &Tol) -> Result<Verdict, OrderError> {
    if p.dim() != q.dim() {
        return Err(OrderError::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let n = p.len().max(q.len());
    let p = p.padded(n);
    let q = q.padded(n);
    let d = p.dim();

    if max_element_gap(&p, &q) <= 1e-12 {
        return Ok(Verdict::holds()
            .with_witness(Witness::Unitary(Mat::identity(d)))
            .with_certificate(certs::EXACT_EQUALITY)
            .with_residual(0.0));
    }

    // Equivalent measurements share both extremal eigenvalues element-wise.
    let pp = p.eig_profile(tol)?;
    let qp = q.eig_profile(tol)?;
    let profile_gap = pp
        .per_element
        .iter()
        .zip(&qp.per_element)
        .map(|(&(pm, px), &(qm, qx))| (pm - qm).abs().max((px - qx).abs()))
        .fold(0.0, f64::max);
    if profile_gap > tol.feas {
        return Ok(Verdict::fails(certs::EIGENPROFILE_MISMATCH));
    }
    let pf = p.classify(tol)?;
    let qf = q.classify(tol)?;
    if pf.rank_one != qf.rank_one {
        return Ok(Verdict::fails(certs::RANK_ONE_PRESERVATION));
    }
    if pf.infocomplete != qf.infocomplete {
        return Ok(Verdict::fails(certs::INFOCOMPLETE_PRESERVATION));
    }

    // Qubits: equivalence collapses to unitary equivalence; the exact
    // alignment solve decides it.
    if d == 2 {
        let (u, worst) = qubit_unitary_search(&p, &q, tol)?;
        if worst <= 1e-7 {
            return Ok(Verdict::holds()
                .with_witness(Witness::Unitary(u))
                .with_certificate(certs::QUBIT_UNITARY_SEARCH)
                .with_residual(worst));
        }
        return Ok(Verdict::fails(certs::QUBIT_UNITARY_SEARCH).with_residual(worst));
    }

    // Spanning families: the connecting map is unique, so equivalence holds
    // exactly when that map is a unitary conjugation.
    if pf.infocomplete && qf.infocomplete {
        match unitary_equivalent(&p, &q, tol)? {
            UnitaryEquivalence::Unitary(u) => {
                return Ok(Verdict::holds()
                    .with_witness(Witness::Unitary(u))
                    .with_certificate(certs::UNIQUE_TRANSFER_MAP));
            }
            UnitaryEquivalence::No => {
                return Ok(Verdict::fails(certs::UNIQUE_TRANSFER_MAP));
            }
            UnitaryEquivalence::Undecided => {}
        }
    }

    // Rank-one targets are clean: one-sided domination already implies
    // equivalence (and in fact unitary equivalence).
    if qf.rank_one {
        let forward = pre_order(&p, &q, tol)?;
        match forward.status {
            Status::Holds => {
                if let UnitaryEquivalence::Unitary(u) = unitary_equivalent(&p, &q, tol)? {
                    return Ok(Verdict::holds()
                        .with_witness(Witness::Unitary(u))
                        .with_certificate(certs::RANK_ONE_EQUIVALENCE));
                }
                let back = choi_feasibility(&q, &p, tol)?;
                let verdict = Verdict::holds().with_certificate(certs::RANK_ONE_EQUIVALENCE);
                return Ok(match (forward.witness, back) {
                    (Some(Witness::Channel(f)), FeasOutcome::Feasible(g, worst)) => verdict
                        .with_witness(Witness::ChannelPair(Box::new(f), Box::new(g)))
                        .with_residual(worst),
                    (Some(w), _) => verdict.with_witness(w).pending(),
                    _ => verdict.pending(),
                });
            }
            Status::Fails => {
                return Ok(Verdict::fails(
                    forward.certificate.unwrap_or(certs::RANK_ONE_EQUIVALENCE),
                ));
            }
            Status::Unknown => {}
        }
    }

    let forward = pre_order(&p, &q, tol)?;
    if forward.status == Status::Fails {
        return Ok(Verdict::fails(forward.certificate.unwrap_or(certs::SPECTRUM_WIDTH_VIOLATION)));
    }
    let backward = pre_order(&q, &p, tol)?;
    if backward.status == Status::Fails {
        return Ok(Verdict::fails(backward.certificate.unwrap_or(certs::SPECTRUM_WIDTH_VIOLATION)));
    }
    if forward.status == Status::Holds && backward.status == Status::Holds {
        let residual = forward.residual.unwrap_or(0.0).max(backward.residual.unwrap_or(0.0));
        let pending = forward.witness_pending || backward.witness_pending;
        let verdict = match (forward.witness, backward.witness) {
            (Some(Witness::Channel(f)), Some(Witness::Channel(g))) => Verdict::holds()
                .with_witness(Witness::ChannelPair(Box::new(f), Box::new(g))),
            (Some(w), _) | (_, Some(w)) => Verdict::holds().with_witness(w),
            _ => Verdict::holds(),
        };
        let verdict = verdict.with_residual(residual);
        return Ok(if pending { verdict.pending() } else { verdict });
    }
    let residual = forward
        .residual
        .unwrap_or(0.0)
        .max(backward.residual.unwrap_or(0.0));
    Ok(Verdict::unknown(residual))
}

/// Range inclusion Rng(Q) ⊆ Rng(P) for commuting Q, tested on the joint
/// eigenvalue vertices (the range of a commuting family is exactly their
/// convex hull). For commuting targets range inclusion coincides with
/// pre-processing domination, so a positive verdict also tries to attach a
/// channel witness.
pub fn range_order_abelian(p: &Povm, q: &Povm, tol: &Tol) -> Result<Verdict, OrderError> {
    if p.dim() != q.dim() {
        return Err(OrderError::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    if p.len() != q.len() {
        return Err(OrderError::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    let table = q.joint_eigen_table(tol)?;
    let mut worst_unknown: Option<f64> = None;
    for vertex in &table.vertices {
        let v = p.range_membership(vertex, tol)?;
        match v.status {
            Status::Holds => {}
            Status::Fails => {
                return Ok(Verdict::fails(certs::RANGE_VERTEX_OUTSIDE));
            }
            Status::Unknown => {
                let r = v.residual.unwrap_or(f64::INFINITY);
                worst_unknown = Some(worst_unknown.map_or(r, |w: f64| w.max(r)));
            }
        }
    }
    if let Some(r) = worst_unknown {
        return Ok(Verdict::unknown(r));
    }
    let verdict = Verdict::holds().with_certificate(certs::ABELIAN_RANGE_VERTICES);
    Ok(match choi_feasibility(p, q, tol)? {
        FeasOutcome::Feasible(ch, worst) => {
            verdict.with_witness(Witness::Channel(ch)).with_residual(worst)
        }
        FeasOutcome::Inconsistent(r) | FeasOutcome::Stalled(r) => verdict.with_residual(r).pending(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CleanVerdict {
    Clean,
    NotClean,
    Unknown,
}

/// Cleanness decision plus, for negative verdicts, a measurement P′ and the
/// witness mapping it onto the input.
#[derive(Clone, Debug)]
pub struct CleanReport {
    pub verdict: CleanVerdict,
    pub reason: &'static str,
    pub dominating: Option<(Povm, Witness)>,
}

/// Cleanness under classical post-processing: holds exactly for rank-one
/// measurements. Otherwise the eigen-refinement (splitting every element
/// into rank-one pieces) strictly dominates, with the identification table
/// as witness.
pub fn post_clean(p: &Povm, tol: &Tol) -> Result<CleanReport, OrderError> {
    let flags = p.classify(tol)?;
    if flags.rank_one {
        return Ok(CleanReport { verdict: CleanVerdict::Clean, reason: "rank-one", dominating: None });
    }
    let (refinement, table) = eigen_refinement(p, tol)?;
    let image = table.apply(&refinement, tol)?;
    let worst = max_element_gap(&image, p);
    if worst > tol.feas {
        return Err(OrderError::InvalidStochastic { residual: worst });
    }
    Ok(CleanReport {
        verdict: CleanVerdict::NotClean,
        reason: "eigen-refinement",
        dominating: Some((refinement, Witness::Stochastic(table))),
    })
}

/// Split every element into its rank-one spectral pieces; the returned
/// table identifies pieces back to their parent outcome.
pub fn eigen_refinement(p: &Povm, tol: &Tol) -> Result<(Povm, StochasticMatrix), OrderError> {
    let d = p.dim();
    let mut pieces = Vec::new();
    let mut parent = Vec::new();
    for (e, el) in p.elements().iter().enumerate() {
        let eig = herm_eig(el, tol)?;
        for (k, &l) in eig.values.iter().enumerate() {
            if l > 1e-12 {
                let u = eig.vectors.col(k);
                pieces.push(Mat::outer(&u, &u).scale_re(l));
                parent.push(e);
            }
        }
    }
    let cols = pieces.len();
    let refinement = Povm::new(pieces, tol)?;
    let mut entries = vec![0.0; p.len() * cols];
    for (j, &e) in parent.iter().enumerate() {
        entries[e * cols + j] = 1.0;
    }
    let table = StochasticMatrix::new(p.len(), cols, entries, tol)?;
    let _ = d;
    Ok((refinement, table))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CleanMode {
    /// Compare only against measurements with the same number of outcomes.
    FixedCardinality,
    /// Compare against measurements of any cardinality.
    VariableCardinality,
}

/// Cleanness under quantum pre-processing.
///
/// Fixed cardinality, n ≤ d: clean iff every element peaks at eigenvalue 1
/// (with the implied kernel structure verified); otherwise a unit-peak
/// block observable dominates strictly. Variable cardinality: fewer
/// outcomes than dimensions is never clean (a smaller-space observable
/// dominates through the preparation isometry), n = d demands an
/// observable, and beyond that rank-one families are clean while spanning
/// non-rank-one families face a randomized falsification search.
pub fn clean_classify(p: &Povm, mode: CleanMode, tol: &Tol) -> Result<CleanReport, OrderError> {
    let n = p.len();
    let d = p.dim();
    match mode {
        CleanMode::FixedCardinality => {
            if n <= d {
                let prof = p.eig_profile(tol)?;
                if prof.all_unit_peaks(tol) {
                    if unit_peak_structure_ok(p, tol)? {
                        return Ok(CleanReport {
                            verdict: CleanVerdict::Clean,
                            reason: "unit-peak",
                            dominating: None,
                        });
                    }
                    return Ok(CleanReport {
                        verdict: CleanVerdict::Unknown,
                        reason: "unit-peak-structure-unverified",
                        dominating: None,
                    });
                }
                // A unit-peak source maps onto P but P cannot reach it:
                // its peaks are below 1 and conjugation never raises them.
                let source = block_observable(n, d);
                let ch = unit_peak_connector(&source, p, tol)?;
                return Ok(CleanReport {
                    verdict: CleanVerdict::NotClean,
                    reason: "unit-peak-missing",
                    dominating: Some((source, Witness::Channel(ch))),
                });
            }
            many_outcome_cleanness(p, tol)
        }
        CleanMode::VariableCardinality => {
            if n < d {
                // P is reached from the n-outcome observable on the
                // n-dimensional space; P itself cannot be rank-one (total
                // rank must reach d), so it dominates no rank-one family.
                let source = observable(n);
                let ch = stinespring_to_target(p, tol)?;
                return Ok(CleanReport {
                    verdict: CleanVerdict::NotClean,
                    reason: "too-few-outcomes",
                    dominating: Some((source, Witness::Channel(ch))),
                });
            }
            if n == d {
                let flags = p.classify(tol)?;
                if flags.observable {
                    return Ok(CleanReport {
                        verdict: CleanVerdict::Clean,
                        reason: "observable",
                        dominating: None,
                    });
                }
                let source = observable(n);
                let ch = stinespring_to_target(p, tol)?;
                return Ok(CleanReport {
                    verdict: CleanVerdict::NotClean,
                    reason: "not-observable",
                    dominating: Some((source, Witness::Channel(ch))),
                });
            }
            many_outcome_cleanness(p, tol)
        }
    }
}

/// n > d tail shared by both modes: rank-one families are clean; spanning
/// families are attacked by inverting random well-conditioned unital
/// channels; anything else stays undecided.
fn many_outcome_cleanness(p: &Povm, tol: &Tol) -> Result<CleanReport, OrderError> {
    let flags = p.classify(tol)?;
    if flags.rank_one {
        return Ok(CleanReport { verdict: CleanVerdict::Clean, reason: "rank-one", dominating: None });
    }
    if flags.infocomplete {
        if let Some((pre, ch)) = falsify_clean(p, tol)? {
            return Ok(CleanReport {
                verdict: CleanVerdict::NotClean,
                reason: "falsified-by-invertible-channel",
                dominating: Some((pre, Witness::Channel(ch))),
            });
        }
        return Ok(CleanReport {
            verdict: CleanVerdict::Unknown,
            reason: "falsification-exhausted",
            dominating: None,
        });
    }
    Ok(CleanReport { verdict: CleanVerdict::Unknown, reason: "undecided-structure", dominating: None })
}

/// Try to exhibit P′ = E⁻¹(P) as a valid measurement for a non-unitary
/// invertible unital E. Success proves P is not clean: E(P′) = P, and a
/// spanning P admits only one connecting map back — E⁻¹, which is not
/// completely positive unless E is unitary.
fn falsify_clean(p: &Povm, tol: &Tol) -> Result<Option<(Povm, Channel)>, OrderError> {
    let d = p.dim();
    let mut rng = Rng::new(0xc1ea_5eed_0f0a_1001);
    for attempt in 0..256u32 {
        let kraus_count = 2 + (attempt as usize % d.max(2));
        let ch = crate::fixtures::random_unital_channel(d, kraus_count, &mut rng, tol);
        if ch.as_unitary(tol).is_some() {
            continue;
        }
        let om = OperatorMap::from_channel(&ch);
        let inv = match om.inverse(tol) {
            Ok((inv, _)) => inv,
            Err(_) => continue,
        };
        let mut pre = Vec::with_capacity(p.len());
        let mut ok = true;
        for e in p.elements() {
            match inv.apply(e) {
                Ok(m) => pre.push(m.hermitize()),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let candidate = match Povm::new(pre, tol) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let mut worst: f64 = 0.0;
        for (ce, pe) in candidate.elements().iter().zip(p.elements()) {
            worst = worst.max(ch.apply(ce)?.sub(pe).max_abs());
        }
        if worst <= tol.feas {
            return Ok(Some((candidate, ch)));
        }
    }
    Ok(None)
}

/// Verify the structure a unit-peak family with n ≤ d must have: every
/// element's kernel has dimension at least n−1, and each unit eigenvector
/// is annihilated by all other elements.
fn unit_peak_structure_ok(p: &Povm, tol: &Tol) -> Result<bool, OrderError> {
    let n = p.len();
    let mut units = Vec::with_capacity(n);
    for e in p.elements() {
        let eig = herm_eig(e, tol)?;
        let zero_mult = eig.values.iter().filter(|&&l| l.abs() <= 1e-6).count();
        if n >= 1 && zero_mult < n - 1 {
            return Ok(false);
        }
        units.push(eig.vectors.col(eig.values.len() - 1));
    }
    for (i, u) in units.iter().enumerate() {
        for (j, e) in p.elements().iter().enumerate() {
            if i != j {
                let img = e.mul_vec(u);
                let norm: f64 = img.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// n-outcome unit-peak family on dimension d ≥ n: basis projectors, with
/// the last element absorbing the remaining basis directions.
pub fn block_observable(n: usize, d: usize) -> Povm {
    let mut elements = Vec::with_capacity(n);
    for i in 0..n {
        let mut m = Mat::zeros(d, d);
        if i + 1 < n {
            m.set(i, i, cr(1.0));
        } else {
            for k in (n - 1)..d {
                m.set(k, k, cr(1.0));
            }
        }
        elements.push(m);
    }
    Povm::new_unchecked(elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        haar_unitary, observable, random_abelian, random_effect, random_povm,
        random_rank_one_infocomplete, random_unital_channel, sic2,
    };

    fn tol() -> Tol {
        Tol::default()
    }

    fn assert_holds(v: &Verdict) {
        assert_eq!(v.status, Status::Holds, "expected Holds, got {:?}", v);
        assert!(
            v.witness.is_some() || v.witness_pending,
            "Holds must carry or promise a witness"
        );
    }

    fn depolarize(p: &Povm, q: f64) -> Povm {
        let d = p.dim();
        let id = Mat::identity(d);
        let elements = p
            .elements()
            .iter()
            .map(|e| {
                e.scale_re(1.0 - q)
                    .add(&id.scale_re(q * e.trace().re / d as f64))
                    .hermitize()
            })
            .collect();
        Povm::new(elements, &tol()).unwrap()
    }

    #[test]
    fn post_order_reflexive_and_permutation() {
        let p = sic2();
        let v = post_order(&p, &p, &tol()).unwrap();
        assert_holds(&v);
        if let Some(Witness::Stochastic(m)) = &v.witness {
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((m.get(i, j) - want).abs() <= 1e-12);
                }
            }
        } else {
            panic!("expected stochastic witness");
        }

        // Permuted outcomes.
        let perm = Povm::new(
            vec![
                p.element(2).clone(),
                p.element(0).clone(),
                p.element(3).clone(),
                p.element(1).clone(),
            ],
            &tol(),
        )
        .unwrap();
        let v = post_order(&p, &perm, &tol()).unwrap();
        assert_holds(&v);
        let m = match &v.witness {
            Some(Witness::Stochastic(m)) => m,
            _ => panic!("expected stochastic witness"),
        };
        let image = m.apply(&p, &tol()).unwrap();
        assert!(max_element_gap(&image, &perm) <= 1e-9);
    }

    #[test]
    fn post_order_rejects_sic_from_observable() {
        let p = observable(2);
        let q = sic2();
        let v = post_order(&p, &q.padded(4), &tol()).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert_eq!(v.certificate, Some(certs::LP_FARKAS));
    }

    #[test]
    fn post_order_coarse_graining_holds() {
        let mut rng = Rng::new(101);
        let p = random_povm(3, 5, &mut rng, &tol());
        // Coarse-grain by merging outcomes {0,1} and {2,3,4}.
        let q = Povm::new(
            vec![
                p.element(0).add(p.element(1)).hermitize(),
                p.element(2).add(p.element(3)).add(p.element(4)).hermitize(),
            ],
            &tol(),
        )
        .unwrap();
        let v = post_order(&p, &q, &tol()).unwrap();
        assert_holds(&v);
    }

    #[test]
    fn post_clean_detects_rank() {
        let r = post_clean(&sic2(), &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::Clean);
        assert_eq!(r.reason, "rank-one");

        let r = post_clean(&observable(3), &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::Clean);

        let trivial = Povm::new(
            vec![Mat::identity(2).scale_re(0.5), Mat::identity(2).scale_re(0.5)],
            &tol(),
        )
        .unwrap();
        let r = post_clean(&trivial, &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::NotClean);
        let (refinement, w) = r.dominating.unwrap();
        assert_eq!(refinement.len(), 4);
        let m = match w {
            Witness::Stochastic(m) => m,
            _ => panic!("expected identification table"),
        };
        // Forward: the table maps the refinement onto the input.
        let image = m.apply(&refinement, &tol()).unwrap();
        assert!(max_element_gap(&image, &trivial) <= 1e-9);
        // Reverse fails: the input cannot post-process into its refinement.
        let back = post_order(&trivial, &refinement, &tol()).unwrap();
        assert_eq!(back.status, Status::Fails);
    }

    #[test]
    fn post_clean_refinement_round_trip_random() {
        let mut rng = Rng::new(103);
        for d in 2..=3 {
            let p = random_povm(d, 3, &mut rng, &tol());
            let r = post_clean(&p, &tol()).unwrap();
            if let Some((refinement, Witness::Stochastic(m))) = r.dominating {
                let fwd = post_order(&refinement, &p, &tol()).unwrap();
                assert_holds(&fwd);
                let image = m.apply(&refinement, &tol()).unwrap();
                assert!(max_element_gap(&image, &p) <= 1e-9);
            }
        }
    }

    #[test]
    fn pre_order_reflexive_with_identity_witness() {
        let p = sic2();
        let v = pre_order(&p, &p, &tol()).unwrap();
        assert_holds(&v);
        match &v.witness {
            Some(Witness::Channel(ch)) => {
                assert_eq!(ch.kraus().len(), 1);
                assert!(ch.kraus()[0].sub(&Mat::identity(2)).max_abs() <= 1e-12);
            }
            _ => panic!("expected channel witness"),
        }
    }

    #[test]
    fn pre_order_positive_instance_revalidates() {
        let mut rng = Rng::new(107);
        for d in 2..=3 {
            let p = random_povm(d, d, &mut rng, &tol());
            let e = random_unital_channel(d, 2, &mut rng, &tol());
            let q = e.apply_povm(&p, &tol()).unwrap();
            let v = pre_order(&p, &q, &tol()).unwrap();
            assert_holds(&v);
            if let Some(Witness::Channel(ch)) = &v.witness {
                let mut worst: f64 = ch.unital_residual();
                for (pe, qe) in p.elements().iter().zip(q.elements()) {
                    worst = worst.max(ch.apply(pe).unwrap().sub(qe).max_abs());
                }
                assert!(worst <= tol().feas, "witness residual {worst}");
            }
        }
    }

    #[test]
    fn pre_order_effect_intervals_decide_both_directions() {
        let a = Mat::diag_re(&[1.0, 0.0, 0.0]);
        let b = Mat::diag_re(&[0.8, 0.55, 0.3]);
        let p = crate::fixtures::pair_from_effect(&a, &tol()).unwrap();
        let q = crate::fixtures::pair_from_effect(&b, &tol()).unwrap();
        let v = pre_order(&p, &q, &tol()).unwrap();
        assert_eq!(v.status, Status::Holds);
        assert_eq!(v.certificate, Some(certs::EFFECT_INTERVAL_INCLUSION));
        let back = pre_order(&q, &p, &tol()).unwrap();
        assert_eq!(back.status, Status::Fails);
        assert_eq!(back.certificate, Some(certs::EFFECT_INTERVAL_INCLUSION));
    }

    #[test]
    fn pre_order_prefilters_fire() {
        // Rank-one target from a non-rank-one source.
        let mut rng = Rng::new(109);
        let p = Povm::new(
            vec![Mat::identity(3).scale_re(0.5), Mat::identity(3).scale_re(0.5)],
            &tol(),
        )
        .unwrap();
        let q = random_rank_one_infocomplete(3, &mut rng, &tol());
        // Pad to common cardinality happens inside.
        let v = pre_order(&p, &q, &tol()).unwrap();
        assert_eq!(v.status, Status::Fails);

        // Spectrum widening is impossible.
        let narrow = crate::fixtures::pair_from_effect(&Mat::diag_re(&[0.6, 0.4, 0.5]), &tol())
            .unwrap()
            .padded(3);
        let wide = crate::fixtures::pair_from_effect(&Mat::diag_re(&[0.9, 0.1, 0.5]), &tol())
            .unwrap()
            .padded(3);
        let v = pre_order(&narrow, &wide, &tol()).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert_eq!(v.certificate, Some(certs::SPECTRUM_WIDTH_VIOLATION));
    }

    #[test]
    fn pre_order_unit_peak_path_dominates_everything() {
        let mut rng = Rng::new(113);
        let p = observable(3);
        for _ in 0..3 {
            let q = random_povm(3, 3, &mut rng, &tol());
            let v = pre_order(&p, &q, &tol()).unwrap();
            assert_holds(&v);
            assert_eq!(v.certificate, Some(certs::UNIT_PEAK_CONSTRUCTION));
        }
    }

    #[test]
    fn pre_order_transposed_sic_stays_unknown() {
        let p = sic2();
        let q = Povm::new(p.elements().iter().map(|e| e.transpose()).collect(), &tol()).unwrap();
        let v = pre_order(&p, &q, &tol()).unwrap();
        assert_eq!(v.status, Status::Unknown);
        assert!(v.residual.unwrap() > 0.01, "residual {:?}", v.residual);
    }

    #[test]
    fn pre_order_transitivity_composes() {
        let mut rng = Rng::new(127);
        let p = random_povm(2, 3, &mut rng, &tol());
        let e1 = random_unital_channel(2, 2, &mut rng, &tol());
        let q = e1.apply_povm(&p, &tol()).unwrap();
        let e2 = random_unital_channel(2, 2, &mut rng, &tol());
        let r = e2.apply_povm(&q, &tol()).unwrap();
        let vpq = pre_order(&p, &q, &tol()).unwrap();
        let vqr = pre_order(&q, &r, &tol()).unwrap();
        assert_holds(&vpq);
        assert_holds(&vqr);
        if let (Some(Witness::Channel(f)), Some(Witness::Channel(g))) = (&vpq.witness, &vqr.witness)
        {
            let mut worst: f64 = 0.0;
            for (pe, re) in p.elements().iter().zip(r.elements()) {
                let img = g.apply(&f.apply(pe).unwrap()).unwrap();
                worst = worst.max(img.sub(re).max_abs());
            }
            assert!(worst <= 2.0 * tol().feas, "composed residual {worst}");
        }
    }

    #[test]
    fn unitary_equivalence_recovers_conjugation() {
        let mut rng = Rng::new(131);
        for d in 2..=3 {
            let p = random_rank_one_infocomplete(d, &mut rng, &tol());
            let u = haar_unitary(d, &mut rng);
            let q = Povm::new(
                p.elements().iter().map(|e| u.mul(e).mul(&u.adjoint()).hermitize()).collect(),
                &tol(),
            )
            .unwrap();
            match unitary_equivalent(&p, &q, &tol()).unwrap() {
                UnitaryEquivalence::Unitary(got) => {
                    let worst = p
                        .elements()
                        .iter()
                        .zip(q.elements())
                        .map(|(pe, qe)| got.mul(pe).mul(&got.adjoint()).sub(qe).max_abs())
                        .fold(0.0, f64::max);
                    assert!(worst <= 1e-8, "recovered unitary residual {worst}");
                }
                other => panic!("expected unitary, got {other:?}"),
            }
        }
    }

    #[test]
    fn unitary_equivalence_rules_out_non_unitary_transfer() {
        let mut rng = Rng::new(137);
        let p = random_rank_one_infocomplete(3, &mut rng, &tol());
        let e = random_unital_channel(3, 3, &mut rng, &tol());
        if e.as_unitary(&tol()).is_some() {
            return;
        }
        let q = e.apply_povm(&p, &tol()).unwrap();
        assert!(matches!(
            unitary_equivalent(&p, &q, &tol()).unwrap(),
            UnitaryEquivalence::No
        ));

        let id = observable(2);
        assert!(matches!(
            unitary_equivalent(&id, &id, &tol()).unwrap(),
            UnitaryEquivalence::Unitary(_)
        ));
    }

    #[test]
    fn pre_equiv_unitary_rotation_holds() {
        let mut rng = Rng::new(139);
        let p = sic2();
        let u = haar_unitary(2, &mut rng);
        let q = Povm::new(
            p.elements().iter().map(|e| u.mul(e).mul(&u.adjoint()).hermitize()).collect(),
            &tol(),
        )
        .unwrap();
        let v = pre_equiv(&p, &q, &tol()).unwrap();
        assert_holds(&v);
        assert!(matches!(v.witness, Some(Witness::Unitary(_))));
    }

    #[test]
    fn pre_equiv_depolarized_fails_on_profile() {
        let p = sic2();
        let q = depolarize(&p, 0.3);
        let v = pre_equiv(&p, &q, &tol()).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert_eq!(v.certificate, Some(certs::EIGENPROFILE_MISMATCH));
    }

    #[test]
    fn pre_equiv_effects_with_matching_extremes_but_distinct_middle() {
        // d = 3 effects sharing λ_m and λ_M: equivalent through channels
        // though no unitary relates them (different middle eigenvalue).
        let a = Mat::diag_re(&[0.9, 0.5, 0.1]);
        let b = Mat::diag_re(&[0.9, 0.3, 0.1]);
        let p = crate::fixtures::pair_from_effect(&a, &tol()).unwrap();
        let q = crate::fixtures::pair_from_effect(&b, &tol()).unwrap();
        let v = pre_equiv(&p, &q, &tol()).unwrap();
        assert_eq!(v.status, Status::Holds, "verdict {v:?}");
    }

    #[test]
    fn range_order_abelian_matches_interval_rule_on_effects() {
        let mut rng = Rng::new(149);
        for trial in 0..30 {
            let d = 2 + (trial % 3);
            let a = random_effect(d, 0.0, 1.0, &mut rng, &tol());
            let b = random_effect(d, 0.1, 0.9, &mut rng, &tol());
            let p = crate::fixtures::pair_from_effect(&a, &tol()).unwrap();
            let q = crate::fixtures::pair_from_effect(&b, &tol()).unwrap();
            let ea = herm_eig(&a, &tol()).unwrap().values;
            let eb = herm_eig(&b, &tol()).unwrap().values;
            let nested = ea[0] <= eb[0] + 1e-9 && *eb.last().unwrap() <= ea.last().unwrap() + 1e-9;
            let v = range_order_abelian(&p, &q, &tol()).unwrap();
            match v.status {
                Status::Holds => assert!(nested, "range holds but intervals do not nest"),
                Status::Fails => assert!(!nested, "range fails but intervals nest"),
                Status::Unknown => panic!("vertex membership must be decisive on effects"),
            }
        }
    }

    #[test]
    fn range_order_abelian_examples() {
        // Coarse-grained eigenbasis observable is inside the range.
        let mut rng = Rng::new(151);
        let u = haar_unitary(3, &mut rng);
        let p = Povm::new(
            (0..3)
                .map(|i| {
                    let col = u.col(i);
                    Mat::outer(&col, &col)
                })
                .collect(),
            &tol(),
        )
        .unwrap();
        // Q measures outcome 0 vs rest, in the same eigenbasis, padded to |P|.
        let q = Povm::new(
            vec![
                p.element(0).clone(),
                p.element(1).add(p.element(2)).hermitize(),
                Mat::zeros(3, 3),
            ],
            &tol(),
        )
        .unwrap();
        let v = range_order_abelian(&p, &q, &tol()).unwrap();
        assert_eq!(v.status, Status::Holds);

        // A trivial measurement's range is one point; observables escape it.
        let trivial = Povm::new(
            vec![Mat::identity(2).scale_re(0.5), Mat::identity(2).scale_re(0.5)],
            &tol(),
        )
        .unwrap();
        let v = range_order_abelian(&trivial, &observable(2), &tol()).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert_eq!(v.certificate, Some(certs::RANGE_VERTEX_OUTSIDE));
    }

    #[test]
    fn range_order_agrees_with_pre_order_for_abelian_targets() {
        let mut rng = Rng::new(157);
        for _ in 0..5 {
            let p = random_povm(2, 3, &mut rng, &tol());
            let q = random_abelian(2, 3, &mut rng, &tol());
            let range = range_order_abelian(&p, &q, &tol()).unwrap();
            let pre = pre_order(&p, &q, &tol()).unwrap();
            // Range inclusion and domination coincide for commuting targets;
            // allow Unknown from the numerical side.
            match (range.status, pre.status) {
                (Status::Holds, Status::Fails) | (Status::Fails, Status::Holds) => {
                    panic!("range and pre-processing verdicts contradict")
                }
                _ => {}
            }
        }
    }

    #[test]
    fn clean_fixed_mode_unit_peak_rule() {
        let obs = observable(3);
        let r = clean_classify(&obs, CleanMode::FixedCardinality, &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::Clean);

        // Block family: unit peaks, n = 2 ≤ d = 3.
        let block = Povm::new(
            vec![Mat::diag_re(&[1.0, 0.0, 0.0]), Mat::diag_re(&[0.0, 1.0, 1.0])],
            &tol(),
        )
        .unwrap();
        let r = clean_classify(&block, CleanMode::FixedCardinality, &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::Clean);
        assert_eq!(r.reason, "unit-peak");
        // Same family under the variable-cardinality rules: not an
        // observable, hence not clean.
        let r = clean_classify(&block, CleanMode::VariableCardinality, &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::NotClean);

        // Smeared two-outcome family on a qubit: no unit peaks.
        let smeared = Povm::new(
            vec![Mat::diag_re(&[0.8, 0.3]), Mat::diag_re(&[0.2, 0.7])],
            &tol(),
        )
        .unwrap();
        let r = clean_classify(&smeared, CleanMode::FixedCardinality, &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::NotClean);
        let (source, w) = r.dominating.unwrap();
        let ch = match w {
            Witness::Channel(ch) => ch,
            _ => panic!("expected channel witness"),
        };
        let mut worst: f64 = 0.0;
        for (se, pe) in source.elements().iter().zip(smeared.elements()) {
            worst = worst.max(ch.apply(se).unwrap().sub(pe).max_abs());
        }
        assert!(worst <= 1e-8);
        // And the smeared family cannot reach the unit-peak source.
        let back = pre_order(&smeared, &source, &tol()).unwrap();
        assert_eq!(back.status, Status::Fails);
    }

    #[test]
    fn clean_variable_mode_cardinality_rules() {
        // Fewer outcomes than dimensions: never clean.
        let block = Povm::new(
            vec![Mat::diag_re(&[1.0, 0.0, 0.0]), Mat::diag_re(&[0.0, 1.0, 1.0])],
            &tol(),
        )
        .unwrap();
        let r = clean_classify(&block, CleanMode::VariableCardinality, &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::NotClean);
        assert_eq!(r.reason, "too-few-outcomes");
        let (source, w) = r.dominating.unwrap();
        assert_eq!(source.dim(), 2);
        if let Witness::Channel(ch) = w {
            for (i, pe) in block.elements().iter().enumerate() {
                let mut basis = Mat::zeros(2, 2);
                basis.set(i, i, cr(1.0));
                assert!(ch.apply(&basis).unwrap().sub(pe).max_abs() <= 1e-8);
            }
        } else {
            panic!("expected channel witness");
        }

        // n = d: observables and only observables.
        let mut rng = Rng::new(163);
        let u = haar_unitary(3, &mut rng);
        let rotated = Povm::new(
            (0..3)
                .map(|i| {
                    let col = u.col(i);
                    Mat::outer(&col, &col)
                })
                .collect(),
            &tol(),
        )
        .unwrap();
        let r = clean_classify(&rotated, CleanMode::VariableCardinality, &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::Clean);
        assert_eq!(r.reason, "observable");

        let trivial = Povm::new(
            vec![Mat::identity(2).scale_re(0.5), Mat::identity(2).scale_re(0.5)],
            &tol(),
        )
        .unwrap();
        let r = clean_classify(&trivial, CleanMode::VariableCardinality, &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::NotClean);
        assert_eq!(r.reason, "not-observable");

        // n > d rank-one: clean.
        let r = clean_classify(&sic2(), CleanMode::VariableCardinality, &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::Clean);
        assert_eq!(r.reason, "rank-one");
    }

    #[test]
    fn clean_falsification_finds_preimage_for_smeared_sic() {
        // Depolarized SIC: spanning, not rank-one — the search should find
        // an invertible channel whose inverse image is a valid measurement.
        let p = depolarize(&sic2(), 0.2);
        let flags = p.classify(&tol()).unwrap();
        assert!(flags.infocomplete && !flags.rank_one);
        let r = clean_classify(&p, CleanMode::VariableCardinality, &tol()).unwrap();
        assert_eq!(r.verdict, CleanVerdict::NotClean);
        assert_eq!(r.reason, "falsified-by-invertible-channel");
        let (pre, w) = r.dominating.unwrap();
        if let Witness::Channel(ch) = w {
            let mut worst: f64 = 0.0;
            for (ce, pe) in pre.elements().iter().zip(p.elements()) {
                worst = worst.max(ch.apply(ce).unwrap().sub(pe).max_abs());
            }
            assert!(worst <= tol().feas);
            assert!(ch.as_unitary(&tol()).is_none());
        } else {
            panic!("expected channel witness");
        }
    }

    #[test]
    fn stochastic_matrix_validation() {
        assert!(StochasticMatrix::new(2, 2, vec![0.5, 0.0, 0.5, 1.0], &tol()).is_ok());
        assert!(matches!(
            StochasticMatrix::new(2, 2, vec![0.5, 0.0, 0.4, 1.0], &tol()),
            Err(OrderError::InvalidStochastic { .. })
        ));
        assert!(matches!(
            StochasticMatrix::new(2, 2, vec![1.5, 0.0, -0.5, 1.0], &tol()),
            Err(OrderError::InvalidStochastic { .. })
        ));
    }

    #[test]
    fn herm_basis_spans_and_separates() {
        for d in 2..=4 {
            let basis = herm_basis(d);
            assert_eq!(basis.len(), d * d);
            let mut rng = Rng::new(d as u64);
            let h = crate::fixtures::random_hermitian(d, &mut rng);
            let coords = herm_coords(&h, &basis);
            // Orthogonal (not orthonormal) basis: rebuild via Gram scaling.
            let mut rebuilt = Mat::zeros(d, d);
            for (g, &x) in basis.iter().zip(&coords) {
                let gram = g.mul(g).trace().re;
                rebuilt = rebuilt.add(&g.scale_re(x / gram));
            }
            assert!(rebuilt.sub(&h).max_abs() <= 1e-10);
        }
    }
}
