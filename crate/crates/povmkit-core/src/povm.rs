//! POVM data model: validation, structural predicates, eigenvalue profiles,
//! joint eigenbases of commuting families, and range geometry.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::mat::{crank, herm_eig, Mat, MatError, C64};
use crate::rng::Rng;
use crate::solver::{
    lp_feasible, psd_affine_feasible, LinearFeasibilityProblem, LpStatus, PsdAffineProblem,
    PsdStatus, SolveError,
};
use crate::verdict::{certs, Verdict, Witness};
use crate::Tol;

#[derive(Debug, Clone, PartialEq)]
pub enum PovmError {
    Empty,
    /// Element `index` is not square of the common dimension.
    DimensionMismatch { index: usize, expected: usize, got: usize },
    NonFinite { index: usize },
    NotHermitian { index: usize, residual: f64 },
    NotPositive { index: usize, lambda_min: f64 },
    NotComplete { residual: f64 },
    LabelCount { expected: usize, got: usize },
    /// Query point length differs from the outcome count.
    PointLength { expected: usize, got: usize },
    NotAbelian { worst_commutator: f64 },
    Numerics(MatError),
    Solver(SolveError),
}

impl fmt::Display for PovmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PovmError::Empty => write!(f, "no elements"),
            PovmError::DimensionMismatch { index, expected, got } => {
                write!(f, "element {index} is {got}x{got}, expected {expected}x{expected}")
            }
            PovmError::NonFinite { index } => write!(f, "element {index} has non-finite entries"),
            PovmError::NotHermitian { index, residual } => {
                write!(f, "element {index} is not Hermitian (residual {residual:.3e})")
            }
            PovmError::NotPositive { index, lambda_min } => {
                write!(f, "element {index} has negative eigenvalue {lambda_min:.3e}")
            }
            PovmError::NotComplete { residual } => {
                write!(f, "elements do not sum to identity (residual {residual:.3e})")
            }
            PovmError::LabelCount { expected, got } => {
                write!(f, "{got} labels for {expected} elements")
            }
            PovmError::PointLength { expected, got } => {
                write!(f, "point has {got} entries, expected {expected}")
            }
            PovmError::NotAbelian { worst_commutator } => {
                write!(f, "elements do not commute (worst commutator {worst_commutator:.3e})")
            }
            PovmError::Numerics(e) => write!(f, "numerics: {e}"),
            PovmError::Solver(e) => write!(f, "solver: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PovmError {}

impl From<MatError> for PovmError {
    fn from(e: MatError) -> PovmError {
        PovmError::Numerics(e)
    }
}

impl From<SolveError> for PovmError {
    fn from(e: SolveError) -> PovmError {
        PovmError::Solver(e)
    }
}

/// Finite-outcome positive operator-valued measure: Hermitian PSD elements
/// summing to the identity.
#[derive(Clone, Debug)]
pub struct Povm {
    dim: usize,
    elements: Vec<Mat>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<Mat>, tol: &Tol) -> Result<Povm, PovmError> {
        let labels = (0..elements.len()).map(|i| format!("{i}")).collect();
        Povm::with_labels(elements, labels, tol)
    }

    pub fn with_labels(
        elements: Vec<Mat>,
        labels: Vec<String>,
        tol: &Tol,
    ) -> Result<Povm, PovmError> {
        validate_povm(&elements, tol)?;
        if labels.len() != elements.len() {
            return Err(PovmError::LabelCount { expected: elements.len(), got: labels.len() });
        }
        let dim = elements[0].rows();
        Ok(Povm { dim, elements, labels })
    }

    /// Caller guarantees validity (used where it is preserved by
    /// construction, e.g. zero-padding).
    pub fn new_unchecked(elements: Vec<Mat>) -> Povm {
        let dim = elements[0].rows();
        let labels = (0..elements.len()).map(|i| format!("{i}")).collect();
        Povm { dim, elements, labels }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Mat] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Mat {
        &self.elements[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Same measurement with zero elements appended up to `n` outcomes.
    pub fn padded(&self, n: usize) -> Povm {
        debug_assert!(n >= self.len());
        let mut elements = self.elements.clone();
        let mut labels = self.labels.clone();
        for i in self.len()..n {
            elements.push(Mat::zeros(self.dim, self.dim));
            labels.push(format!("{i}"));
        }
        Povm { dim: self.dim, elements, labels }
    }

    /// Outcome distribution Tr[ρ P_e] in a state ρ.
    pub fn probabilities(&self, rho: &Mat) -> Vec<f64> {
        self.elements
            .iter()
            .map(|p| {
                let mut acc = 0.0;
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        acc += (rho.get(i, j) * p.get(j, i)).re;
                    }
                }
                acc
            })
            .collect()
    }

    pub fn eig_profile(&self, tol: &Tol) -> Result<EigProfile, MatError> {
        let mut per_element = Vec::with_capacity(self.len());
        for p in &self.elements {
            let eig = herm_eig(p, tol)?;
            let lm = eig.values.first().copied().unwrap_or(0.0);
            let lmx = eig.values.last().copied().unwrap_or(0.0);
            per_element.push((lm, lmx));
        }
        Ok(EigProfile { per_element })
    }

    pub fn classify(&self, tol: &Tol) -> Result<StructureFlags, MatError> {
        let d = self.dim;
        let n = self.len();

        let mut rank_one = true;
        let mut projectors = true;
        for p in &self.elements {
            if p.max_abs() <= tol.rank {
                // Vanishing element: fine for rank-one, breaks observable.
                projectors = false;
                continue;
            }
            let eig = herm_eig(p, tol)?;
            let above: usize = eig.values.iter().filter(|&&l| l > tol.rank).count();
            if above != 1 {
                rank_one = false;
                projectors = false;
            } else {
                let top = *eig.values.last().unwrap();
                if (top - 1.0).abs() > tol.psd {
                    projectors = false;
                }
            }
        }
        let observable = n == d && rank_one && projectors;

        let abelian = self.worst_commutator() <= tol.psd;

        let rows: Vec<Vec<C64>> = self.elements.iter().map(|p| p.data().to_vec()).collect();
        let infocomplete = n >= d * d && crank(&rows, tol.rank) == d * d;

        let mut trivial = true;
        for p in &self.elements {
            let mean = p.trace().re / d as f64;
            let dev = p.sub(&Mat::identity(d).scale_re(mean)).max_abs();
            if dev > tol.psd {
                trivial = false;
                break;
            }
        }

        Ok(StructureFlags {
            observable,
            effect_pair: n == 2,
            rank_one,
            abelian,
            infocomplete,
            trivial,
        })
    }

    fn worst_commutator(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                worst = worst.max(self.elements[i].commutator(&self.elements[j]).max_abs());
            }
        }
        worst
    }

    /// Common orthonormal eigenbasis and the joint eigenvalue vectors of a
    /// commuting family. A generic mixing combination splits the joint
    /// eigenspaces first; individual elements refine any leftover ties.
    pub fn joint_eigen_table(&self, tol: &Tol) -> Result<JointEigenTable, PovmError> {
        let worst = self.worst_commutator();
        if worst > tol.psd {
            return Err(PovmError::NotAbelian { worst_commutator: worst });
        }
        let d = self.dim;
        let n = self.len();

        let mut rng = Rng::new(0x4a5f_9d31_7b62_e801);
        let mut mix = Mat::zeros(d, d);
        for p in &self.elements {
            mix = mix.add(&p.scale_re(rng.gaussian()));
        }
        let mix = mix.hermitize();

        let mut basis = Mat::identity(d);
        let mut clusters: Vec<Vec<usize>> = vec![(0..d).collect()];
        refine_basis(&mut basis, &mut clusters, &mix, tol)?;
        for p in &self.elements {
            refine_basis(&mut basis, &mut clusters, p, tol)?;
        }

        let mut vertices = vec![vec![0.0f64; n]; d];
        for (e, p) in self.elements.iter().enumerate() {
            let m = basis.adjoint().mul(p).mul(&basis);
            let scale = 1.0 + p.max_abs();
            for a in 0..d {
                for b in 0..d {
                    if a != b && m.get(a, b).norm() > 1e-8 * scale {
                        return Err(PovmError::Numerics(MatError::NoConvergence {
                            off_diagonal: m.get(a, b).norm(),
                        }));
                    }
                }
                vertices[a][e] = m.get(a, a).re;
            }
        }
        Ok(JointEigenTable { basis, vertices })
    }

    /// Is a probability vector realized by some state? Commuting families get
    /// the exact vertex-hull LP (rigorous both ways); everything else falls
    /// back on PSD-affine feasibility, which can only certify membership.
    pub fn range_membership(&self, point: &[f64], tol: &Tol) -> Result<Verdict, PovmError> {
        if point.len() != self.len() {
            return Err(PovmError::PointLength { expected: self.len(), got: point.len() });
        }
        if self.worst_commutator() <= tol.psd {
            let table = self.joint_eigen_table(tol)?;
            return self.vertex_hull_membership(&table, point, tol);
        }
        self.range_membership_general(point, tol)
    }

    fn vertex_hull_membership(
        &self,
        table: &JointEigenTable,
        point: &[f64],
        tol: &Tol,
    ) -> Result<Verdict, PovmError> {
        let d = self.dim;
        let n = self.len();
        // Convex weights over the joint eigenvalue vertices.
        let mut a = Vec::with_capacity(n + 1);
        a.push(vec![1.0f64; d]);
        for e in 0..n {
            a.push((0..d).map(|al| table.vertices[al][e]).collect());
        }
        let mut b = vec![1.0f64];
        b.extend_from_slice(point);
        let lp = LinearFeasibilityProblem { a, b, nonneg: vec![true; d] };
        match lp_feasible(&lp, tol)?.status {
            LpStatus::Feasible(w) => {
                let mut rho = Mat::zeros(d, d);
                for (al, &wa) in w.iter().enumerate() {
                    let col = table.basis.col(al);
                    let mut v = Mat::zeros(d, 1);
                    for (i, z) in col.iter().enumerate() {
                        v.set(i, 0, *z);
                    }
                    rho = rho.add(&Mat::outer(&v.data().to_vec(), &v.data().to_vec()).scale_re(wa));
                }
                let probs = self.probabilities(&rho);
                let res = probs
                    .iter()
                    .zip(point)
                    .fold(0.0f64, |m, (got, want)| m.max((got - want).abs()));
                Ok(Verdict::holds()
                    .with_witness(Witness::State(rho))
                    .with_certificate(certs::ABELIAN_RANGE_VERTICES)
                    .with_residual(res))
            }
            LpStatus::Infeasible { .. } => Ok(Verdict::fails(certs::ABELIAN_RANGE_VERTICES)),
        }
    }

    /// Solver route, exposed separately so commuting instances can be
    /// cross-checked against the vertex LP.
    pub fn range_membership_general(&self, point: &[f64], tol: &Tol) -> Result<Verdict, PovmError> {
        if point.len() != self.len() {
            return Err(PovmError::PointLength { expected: self.len(), got: point.len() });
        }
        let d = self.dim;
        let mut constraints = vec![(Mat::identity(d), 1.0)];
        for (p, &pe) in self.elements.iter().zip(point) {
            constraints.push((p.clone(), pe));
        }
        let prob = PsdAffineProblem { dim: d, constraints };
        match psd_affine_feasible(&prob, tol)?.status {
            PsdStatus::Feasible(rho) => {
                let probs = self.probabilities(&rho);
                let res = probs
                    .iter()
                    .zip(point)
                    .fold(0.0f64, |m, (got, want)| m.max((got - want).abs()));
                Ok(Verdict::holds().with_witness(Witness::State(rho)).with_residual(res))
            }
            PsdStatus::InfeasibleCertified { residual } => {
                Ok(Verdict::fails(certs::AFFINE_INCONSISTENCY).with_residual(residual))
            }
            PsdStatus::Stalled { residual, .. } => Ok(Verdict::unknown(residual)),
        }
    }
}

pub fn validate_povm(elements: &[Mat], tol: &Tol) -> Result<(), PovmError> {
    if elements.is_empty() {
        return Err(PovmError::Empty);
    }
    let d = elements[0].rows();
    for (i, p) in elements.iter().enumerate() {
        if !p.is_square() || p.rows() != d {
            return Err(PovmError::DimensionMismatch { index: i, expected: d, got: p.rows() });
        }
        if !p.is_finite() {
            return Err(PovmError::NonFinite { index: i });
        }
        let scale = p.max_abs().max(1.0);
        let hres = p.herm_residual();
        if hres > tol.herm * scale {
            return Err(PovmError::NotHermitian { index: i, residual: hres });
        }
    }
    for (i, p) in elements.iter().enumerate() {
        let eig = herm_eig(p, tol).map_err(PovmError::Numerics)?;
        let lmin = eig.values.first().copied().unwrap_or(0.0);
        if lmin < -tol.psd {
            return Err(PovmError::NotPositive { index: i, lambda_min: lmin });
        }
    }
    let mut sum = Mat::zeros(d, d);
    for p in elements {
        sum = sum.add(p);
    }
    let residual = sum.sub(&Mat::identity(d)).max_abs();
    if residual > tol.psd {
        return Err(PovmError::NotComplete { residual });
    }
    Ok(())
}

/// Extremal eigenvalues (λ_min, λ_max) per outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct EigProfile {
    pub per_element: Vec<(f64, f64)>,
}

impl EigProfile {
    /// Do all elements have a unit top eigenvalue?
    pub fn all_unit_peaks(&self, tol: &Tol) -> bool {
        self.per_element.iter().all(|&(_, lmx)| (lmx - 1.0).abs() <= tol.unit_peak)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructureFlags {
    pub observable: bool,
    pub effect_pair: bool,
    pub rank_one: bool,
    pub abelian: bool,
    pub infocomplete: bool,
    pub trivial: bool,
}

/// Shared eigenbasis (columns of `basis`) and joint eigenvalue vectors:
/// `vertices[α][e]` is the eigenvalue of element e on basis vector α. Each
/// `vertices[α]` is a probability vector, and for a commuting family the
/// range is exactly their convex hull.
#[derive(Clone, Debug)]
pub struct JointEigenTable {
    pub basis: Mat,
    pub vertices: Vec<Vec<f64>>,
}

/// One refinement pass: diagonalize `op` inside every current cluster,
/// rotate the basis, split clusters at eigenvalue gaps.
fn refine_basis(
    basis: &mut Mat,
    clusters: &mut Vec<Vec<usize>>,
    op: &Mat,
    tol: &Tol,
) -> Result<(), PovmError> {
    let d = basis.rows();
    let gap_tol = 1e-7 * (1.0 + op.max_abs());
    let mut next: Vec<Vec<usize>> = Vec::new();
    for cl in clusters.iter() {
        if cl.len() == 1 {
            next.push(cl.clone());
            continue;
        }
        let k = cl.len();
        let vc = Mat::from_fn(d, k, |i, j| basis.get(i, cl[j]));
        let small = vc.adjoint().mul(op).mul(&vc).hermitize();
        let eig = herm_eig(&small, tol).map_err(PovmError::Numerics)?;
        let rot = vc.mul(&eig.vectors);
        for (j, &col) in cl.iter().enumerate() {
            for i in 0..d {
                basis.set(i, col, rot.get(i, j));
            }
        }
        let mut start = 0;
        for j in 1..=k {
            if j == k || eig.values[j] - eig.values[j - 1] > gap_tol {
                next.push(cl[start..j].to_vec());
                start = j;
            }
        }
    }
    *clusters = next;
    Ok(())
}
