//! Quantum channels in the Heisenberg picture — X ↦ Σ_k E_k† X E_k — with
//! Kraus↔Choi conversion, structural flags, constructive isometry-based
//! maps between measurements, extremality of a channel given the
//! measurement it must reproduce, and the negativity witness for inverses
//! of non-unitary invertible maps.
//!
//! Kraus operators are stored as din×dout matrices: the map eats operators
//! on a din-dimensional space and emits operators on a dout-dimensional
//! one. The Choi matrix lives on the din·dout product space with the input
//! factor first, so unitality is Tr₁[C] = I and trace preservation is
//! Tr₂[C] = I.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // inherent f64 methods cover this when std is linked
use num_traits::Float;

use crate::fixtures;
use crate::mat::{cr, herm_eig, sqrt_psd, vdot, vnorm, Mat, MatError, C64};
use crate::povm::{Povm, PovmError};
use crate::rng::Rng;
use crate::Tol;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    EmptyKraus,
    DimensionMismatch { expected: usize, got: usize },
    NonFinite,
    NotCompletelyPositive { min_eigenvalue: f64 },
    NotUnital { residual: f64 },
    TooManyOutcomes { outcomes: usize, dim: usize },
    NoUnitEigenvalue { index: usize, lambda_max: f64 },
    /// The map's action on operator space is singular or too ill-conditioned
    /// to invert.
    NotInvertible { condition: f64 },
    /// The map is unitary, so its inverse is a channel and no negativity
    /// witness exists.
    UnitaryChannel,
    /// Search exhausted; `best` is the most negative expectation seen.
    NoWitnessFound { best: f64 },
    /// A constructive map failed its own verification.
    ConstructionResidual { residual: f64 },
    InvalidMeasurement(PovmError),
    Numerics(MatError),
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::EmptyKraus => write!(f, "no Kraus operators"),
            ChannelError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            ChannelError::NonFinite => write!(f, "non-finite entries"),
            ChannelError::NotCompletelyPositive { min_eigenvalue } => {
                write!(f, "Choi matrix has negative eigenvalue {min_eigenvalue:.3e}")
            }
            ChannelError::NotUnital { residual } => {
                write!(f, "channel is not unital (residual {residual:.3e})")
            }
            ChannelError::TooManyOutcomes { outcomes, dim } => {
                write!(f, "{outcomes} outcomes exceed dimension {dim}")
            }
            ChannelError::NoUnitEigenvalue { index, lambda_max } => {
                write!(f, "element {index} peaks at {lambda_max}, not 1")
            }
            ChannelError::NotInvertible { condition } => {
                write!(f, "operator-space action not invertible (condition {condition:.3e})")
            }
            ChannelError::UnitaryChannel => write!(f, "channel is unitary"),
            ChannelError::NoWitnessFound { best } => {
                write!(f, "no negativity witness found (best expectation {best:.3e})")
            }
            ChannelError::ConstructionResidual { residual } => {
                write!(f, "constructed map failed verification (residual {residual:.3e})")
            }
            ChannelError::InvalidMeasurement(e) => write!(f, "output measurement invalid: {e}"),
            ChannelError::Numerics(e) => write!(f, "numerics: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ChannelError {}

impl From<MatError> for ChannelError {
    fn from(e: MatError) -> ChannelError {
        ChannelError::Numerics(e)
    }
}

/// Completely positive map in Kraus form with structural flags computed at
/// construction. Immutable afterwards.
#[derive(Clone, Debug)]
pub struct Channel {
    kraus: Vec<Mat>,
    din: usize,
    dout: usize,
    unital: bool,
    trace_preserving: bool,
}

impl Channel {
    pub fn from_kraus(kraus: Vec<Mat>, tol: &Tol) -> Result<Channel, ChannelError> {
        if kraus.is_empty() {
            return Err(ChannelError::EmptyKraus);
        }
        let din = kraus[0].rows();
        let dout = kraus[0].cols();
        for k in &kraus {
            if k.rows() != din || k.cols() != dout {
                return Err(ChannelError::DimensionMismatch { expected: din, got: k.rows() });
            }
            if !k.is_finite() {
                return Err(ChannelError::NonFinite);
            }
        }
        let (unital, trace_preserving) = flags_from_kraus(&kraus, din, dout, tol);
        Ok(Channel { kraus, din, dout, unital, trace_preserving })
    }

    pub fn identity(d: usize) -> Channel {
        Channel {
            kraus: vec![Mat::identity(d)],
            din: d,
            dout: d,
            unital: true,
            trace_preserving: true,
        }
    }

    pub fn unitary(u: &Mat, tol: &Tol) -> Result<Channel, ChannelError> {
        Channel::from_kraus(vec![u.clone()], tol)
    }

    /// Reconstruct Kraus operators from a Choi matrix by spectral
    /// decomposition, keeping eigenvalues above 1e−9 of the largest. The
    /// resulting operators are linearly independent by construction.
    pub fn from_choi(c: &Mat, din: usize, dout: usize, tol: &Tol) -> Result<Channel, ChannelError> {
        Channel::from_choi_with_slack(c, din, dout, tol, tol.psd)
    }

    /// Same, with an explicit negativity allowance for Choi matrices that
    /// come out of iterative solvers.
    pub fn from_choi_with_slack(
        c: &Mat,
        din: usize,
        dout: usize,
        tol: &Tol,
        psd_slack: f64,
    ) -> Result<Channel, ChannelError> {
        if c.rows() != din * dout
            || !c.is_square() {
            return Err(ChannelError::DimensionMismatch { expected: din * dout, got: c.rows() });
        }
        if !c.is_finite() {
            return Err(ChannelError::NonFinite);
        }
        let scale = c.max_abs().max(1.0);
        let hres = c.herm_residual();
        if hres > tol.herm * scale {
            return Err(ChannelError::Numerics(MatError::NonHermitian { residual: hres }));
        }
        let h = c.hermitize();
        let eig = herm_eig(&h, tol)?;
        let lmin = eig.values.first().copied().unwrap_or(0.0);
        if lmin < -psd_slack {
            return Err(ChannelError::NotCompletelyPositive { min_eigenvalue: lmin });
        }
        let lmax = eig.values.last().copied().unwrap_or(0.0);
        let cutoff = 1e-9 * lmax.max(0.0);
        let mut kraus = Vec::new();
        for (idx, &l) in eig.values.iter().enumerate() {
            if l > cutoff && l > 0.0 {
                let v = eig.vectors.col(idx);
                let e = Mat::from_data(din, dout, v).conj().scale_re(l.sqrt());
                kraus.push(e);
            }
        }
        let (unital, trace_preserving) = flags_from_kraus(&kraus, din, dout, tol);
        let ch = Channel { kraus, din, dout, unital, trace_preserving };
        // Truncation legitimately discards eigenvalue mass down to −psd_slack
        // on up to din·dout directions; anything beyond that is a bug.
        let budget = 1e-8 * scale + psd_slack * (din * dout) as f64;
        let residual = ch.choi().sub(&h).max_abs();
        if residual > budget {
            return Err(ChannelError::ConstructionResidual { residual });
        }
        Ok(ch)
    }

    pub fn kraus(&self) -> &[Mat] {
        &self.kraus
    }

    /// Dimension of the space whose operators the map consumes.
    pub fn din(&self) -> usize {
        self.din
    }

    /// Dimension of the space whose operators the map produces.
    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn unital_residual(&self) -> f64 {
        let mut s = Mat::zeros(self.dout, self.dout);
        for k in &self.kraus {
            s = s.add(&k.adjoint().mul(k));
        }
        s.sub(&Mat::identity(self.dout)).max_abs()
    }

    pub fn apply(&self, x: &Mat) -> Result<Mat, ChannelError> {
        if x.rows() != self.din || x.cols() != self.din {
            return Err(ChannelError::DimensionMismatch { expected: self.din, got: x.rows() });
        }
        let mut out = Mat::zeros(self.dout, self.dout);
        for k in &self.kraus {
            out = out.add(&k.adjoint().mul(x).mul(k));
        }
        Ok(out)
    }

    /// Same action through the Choi contraction E(X) = Tr₁[C(Xᵀ⊗I)];
    /// kept as an independent route for cross-checks.
    pub fn apply_via_choi(&self, x: &Mat) -> Result<Mat, ChannelError> {
        if x.rows() != self.din || x.cols() != self.din {
            return Err(ChannelError::DimensionMismatch { expected: self.din, got: x.rows() });
        }
        let c = self.choi();
        let prod = c.mul(&x.transpose().kron(&Mat::identity(self.dout)));
        Ok(prod.partial_trace(1, self.din, self.dout)?)
    }

    pub fn apply_povm(&self, p: &Povm, tol: &Tol) -> Result<Povm, ChannelError> {
        if !self.unital {
            return Err(ChannelError::NotUnital { residual: self.unital_residual() });
        }
        let mut elements = Vec::with_capacity(p.len());
        for e in p.elements() {
            elements.push(self.apply(e)?.hermitize());
        }
        Povm::new(elements, tol).map_err(ChannelError::InvalidMeasurement)
    }

    /// Choi matrix C = Σ_k |E_k*⟩⟩⟨⟨E_k*| on the din·dout space.
    pub fn choi(&self) -> Mat {
        let n = self.din * self.dout;
        let mut c = Mat::zeros(n, n);
        for k in &self.kraus {
            let v = k.conj().double_ket();
            c = c.add(&Mat::outer(&v, &v));
        }
        c
    }

    /// Action on row-major flattened operators: T = Σ_k E_k† ⊗ E_kᵀ,
    /// mapping |X⟩⟩ to |E(X)⟩⟩.
    pub fn transfer(&self) -> Mat {
        let mut t = Mat::zeros(self.dout * self.dout, self.din * self.din);
        for k in &self.kraus {
            t = t.add(&k.adjoint().kron(&k.transpose()));
        }
        t
    }

    /// Linearly independent Kraus form via the Choi spectral decomposition.
    pub fn canonical(&self, tol: &Tol) -> Result<Channel, ChannelError> {
        Channel::from_choi(&self.choi(), self.din, self.dout, tol)
    }

    /// Schrödinger-picture counterpart: adjoint every Kraus operator.
    /// Unitality and trace preservation swap roles.
    pub fn dual(&self) -> Channel {
        Channel {
            kraus: self.kraus.iter().map(|k| k.adjoint()).collect(),
            din: self.dout,
            dout: self.din,
            unital: self.trace_preserving,
            trace_preserving: self.unital,
        }
    }

    /// If the Choi matrix has numerical rank one and the single Kraus
    /// operator is an isometry, return it phase-normalized.
    pub fn as_unitary(&self, tol: &Tol) -> Option<Mat> {
        if self.din != self.dout {
            return None;
        }
        let eig = herm_eig(&self.choi().hermitize(), tol).ok()?;
        let top = *eig.values.last()?;
        if top <= 0.0 {
            return None;
        }
        if eig.values.len() > 1 && eig.values[eig.values.len() - 2] > 1e-9 * top {
            return None;
        }
        let v = eig.vectors.col(eig.values.len() - 1);
        let k = Mat::from_data(self.din, self.dout, v).conj().scale_re(top.sqrt());
        let res = k.adjoint().mul(&k).sub(&Mat::identity(self.din)).max_abs();
        if res > 1e-8 {
            return None;
        }
        Some(phase_normalize(&k))
    }
}

fn flags_from_kraus(kraus: &[Mat], din: usize, dout: usize, tol: &Tol) -> (bool, bool) {
    let mut ktk = Mat::zeros(dout, dout);
    let mut kkt = Mat::zeros(din, din);
    for k in kraus {
        ktk = ktk.add(&k.adjoint().mul(k));
        kkt = kkt.add(&k.mul(&k.adjoint()));
    }
    let unital = ktk.sub(&Mat::identity(dout)).max_abs() <= tol.psd;
    let tp = kkt.sub(&Mat::identity(din)).max_abs() <= tol.psd;
    (unital, tp)
}

/// Multiply by a global phase so the first entry of significant magnitude
/// is real positive; makes recovered unitaries comparable.
pub fn phase_normalize(u: &Mat) -> Mat {
    let scale = u.max_abs();
    for z in u.data() {
        if z.norm() > 1e-9 * scale.max(1.0) {
            let phase = z / cr(z.norm());
            return u.scale(phase.conj());
        }
    }
    u.clone()
}

/// Does conjugation by the channel keep every eigenvalue of X inside X's
/// spectral interval (within a small slack)? A property of every unital
/// completely positive map, and a cheap necessary condition for ordering.
pub fn spectrum_width_check(e: &Channel, x: &Mat, tol: &Tol) -> Result<bool, ChannelError> {
    let ex = e.apply(x)?.hermitize();
    let src = herm_eig(&x.hermitize(), tol)?;
    let img = herm_eig(&ex, tol)?;
    let slack = tol.eig;
    let (sm, sx) = (src.values[0], *src.values.last().unwrap());
    let (im, ix) = (img.values[0], *img.values.last().unwrap());
    Ok(im >= sm - slack && ix <= sx + slack)
}

/// Measure-and-prepare map sending the first n basis projectors of an
/// n-dimensional space to the elements of P: M(X) = V†(I⊗X)V with
/// V = Σ_i √P_i ⊗ |i⟩. Unital and completely positive by construction.
pub fn stinespring_to_target(p: &Povm, tol: &Tol) -> Result<Channel, ChannelError> {
    let n = p.len();
    let d = p.dim();
    if n > d {
        return Err(ChannelError::TooManyOutcomes { outcomes: n, dim: d });
    }
    let mut roots = Vec::with_capacity(n);
    for e in p.elements() {
        roots.push(sqrt_psd(e, tol)?);
    }
    let kraus: Vec<Mat> = (0..d)
        .map(|m| Mat::from_fn(n, d, |i, c| roots[i].get(m, c)))
        .collect();
    let ch = Channel::from_kraus(kraus, tol)?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut basis = Mat::zeros(n, n);
        basis.set(i, i, cr(1.0));
        worst = worst.max(ch.apply(&basis)?.sub(p.element(i)).max_abs());
    }
    if worst > 1e-8 {
        return Err(ChannelError::ConstructionResidual { residual: worst });
    }
    Ok(ch)
}

/// Connector from a measurement whose every element has a unit eigenvalue
/// onto an arbitrary same-cardinality target: F(X) = W†(I⊗X)W with
/// W = Σ_i √target_i ⊗ |u_i⟩, u_i the unit-eigenvalue eigenvectors of the
/// source. Those eigenvectors are automatically orthonormal, which makes F
/// unital; F(source_i) = target_i is verified before returning.
pub fn unit_peak_connector(
    source: &Povm,
    target: &Povm,
    tol: &Tol,
) -> Result<Channel, ChannelError> {
    let n = source.len();
    if target.len() != n {
        return Err(ChannelError::DimensionMismatch { expected: n, got: target.len() });
    }
    let ds = source.dim();
    let dt = target.dim();
    if n > ds {
        return Err(ChannelError::TooManyOutcomes { outcomes: n, dim: ds });
    }
    let mut peaks: Vec<Vec<C64>> = Vec::with_capacity(n);
    for (i, s) in source.elements().iter().enumerate() {
        let eig = herm_eig(s, tol)?;
        let lmax = *eig.values.last().unwrap();
        if (lmax - 1.0).abs() > tol.unit_peak {
            return Err(ChannelError::NoUnitEigenvalue { index: i, lambda_max: lmax });
        }
        peaks.push(eig.vectors.col(eig.values.len() - 1));
    }
    // Orthonormal up to the unit-peak slack; tighten for conditioning.
    for i in 0..n {
        for j in 0..i {
            let ov = vdot(&peaks[j], &peaks[i]);
            let (pj, pi) = {
                let (a, b) = peaks.split_at_mut(i);
                (&a[j], &mut b[0])
            };
            for (x, y) in pi.iter_mut().zip(pj.iter()) {
                *x -= ov * y;
            }
            let _ = pj;
        }
        let nr = vnorm(&peaks[i]);
        for x in peaks[i].iter_mut() {
            *x /= cr(nr);
        }
    }
    let mut roots = Vec::with_capacity(n);
    for t in target.elements() {
        roots.push(sqrt_psd(t, tol)?);
    }
    let kraus: Vec<Mat> = (0..dt)
        .map(|m| {
            Mat::from_fn(ds, dt, |nn, cc| {
                let mut acc = cr(0.0);
                for i in 0..n {
                    acc += peaks[i][nn] * roots[i].get(m, cc);
                }
                acc
            })
        })
        .collect();
    let ch = Channel::from_kraus(kraus, tol)?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        worst = worst.max(ch.apply(source.element(i))?.sub(target.element(i)).max_abs());
    }
    if worst > tol.witness {
        return Err(ChannelError::ConstructionResidual { residual: worst });
    }
    Ok(ch)
}

/// Arbitrary linear map on operator space in flattened coordinates —
/// inverses of channels live here since they need not be completely
/// positive. Nothing about positivity is verified.
#[derive(Clone, Debug)]
pub struct OperatorMap {
    matrix: Mat,
    din: usize,
    dout: usize,
}

impl OperatorMap {
    pub fn from_channel(e: &Channel) -> OperatorMap {
        OperatorMap { matrix: e.transfer(), din: e.din(), dout: e.dout() }
    }

    pub fn from_matrix(matrix: Mat, din: usize, dout: usize) -> Result<OperatorMap, ChannelError> {
        if matrix.rows() != dout * dout || matrix.cols() != din * din {
            return Err(ChannelError::DimensionMismatch {
                expected: dout * dout,
                got: matrix.rows(),
            });
        }
        Ok(OperatorMap { matrix, din, dout })
    }

    pub fn identity(d: usize) -> OperatorMap {
        OperatorMap { matrix: Mat::identity(d * d), din: d, dout: d }
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn din(&self) -> usize {
        self.din
    }

    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn apply(&self, x: &Mat) -> Result<Mat, ChannelError> {
        if x.rows() != self.din || x.cols() != self.din {
            return Err(ChannelError::DimensionMismatch { expected: self.din, got: x.rows() });
        }
        let v = self.matrix.mul_vec(&x.double_ket());
        Ok(Mat::from_data(self.dout, self.dout, v))
    }

    /// Composition: apply `self` first, then `next`.
    pub fn then(&self, next: &OperatorMap) -> Result<OperatorMap, ChannelError> {
        if next.din != self.dout {
            return Err(ChannelError::DimensionMismatch { expected: self.dout, got: next.din });
        }
        Ok(OperatorMap { matrix: next.matrix.mul(&self.matrix), din: self.din, dout: next.dout })
    }

    /// Spectral condition number of the flattened action; infinite when
    /// singular to working precision.
    pub fn condition(&self, tol: &Tol) -> Result<f64, ChannelError> {
        let gram = self.matrix.adjoint().mul(&self.matrix).hermitize();
        let eig = herm_eig(&gram, tol)?;
        let lmax = eig.values.last().copied().unwrap_or(0.0);
        let lmin = eig.values.first().copied().unwrap_or(0.0);
        if lmin <= 1e-28 * lmax.max(1.0) {
            return Ok(f64::INFINITY);
        }
        Ok((lmax / lmin).sqrt())
    }

    /// Inverse of the operator-space action together with its condition
    /// number. The inverse is not certified positive in any sense.
    pub fn inverse(&self, tol: &Tol) -> Result<(OperatorMap, f64), ChannelError> {
        if self.din != self.dout {
            return Err(ChannelError::DimensionMismatch { expected: self.din, got: self.dout });
        }
        let cond = self.condition(tol)?;
        if !cond.is_finite() {
            return Err(ChannelError::NotInvertible { condition: cond });
        }
        let n = self.matrix.rows();
        let inv = crate::mat::solve(&self.matrix, &Mat::identity(n))
            .map_err(|_| ChannelError::NotInvertible { condition: cond })?;
        Ok((OperatorMap { matrix: inv, din: self.dout, dout: self.din }, cond))
    }

    /// Reshuffle the flattened action into Choi form:
    /// C[(m,a),(n,b)] = T[(a,b),(m,n)].
    pub fn reshuffle_to_choi(&self) -> Mat {
        let s = self.din;
        let t = self.dout;
        Mat::from_fn(s * t, s * t, |row, colidx| {
            let (m, a) = (row / t, row % t);
            let (n, b) = (colidx / t, colidx % t);
            self.matrix.get(a * t + b, m * s + n)
        })
    }

    /// If this map is conjugation by a unitary, recover it (phase
    /// normalized). Decided through the reshuffled Choi form: Hermitian,
    /// numerical rank one, isometric Kraus. Callers verify the recovered
    /// unitary against their own data; thresholds here are intentionally
    /// forgiving.
    pub fn to_unitary(&self, tol: &Tol) -> Option<Mat> {
        if self.din != self.dout {
            return None;
        }
        let c = self.reshuffle_to_choi();
        let scale = c.max_abs().max(1.0);
        if c.herm_residual() > 1e-6 * scale {
            return None;
        }
        let eig = herm_eig(&c.hermitize(), tol).ok()?;
        let top = *eig.values.last()?;
        if top <= 0.0 {
            return None;
        }
        if eig.values.len() > 1 && eig.values[eig.values.len() - 2].abs() > 1e-6 * top {
            return None;
        }
        let v = eig.vectors.col(eig.values.len() - 1);
        let k = Mat::from_data(self.din, self.dout, v).conj().scale_re(top.sqrt());
        if k.adjoint().mul(&k).sub(&Mat::identity(self.din)).max_abs() > 1e-6 {
            return None;
        }
        Some(phase_normalize(&k))
    }
}

/// Pure state on which the inverse map's image of some measurement element
/// has a negative expectation — evidence the inverse is not completely
/// positive (hence the channel not unitary).
#[derive(Clone, Debug)]
pub struct WignerWitness {
    pub psi: Vec<C64>,
    pub violation: f64,
    pub element: usize,
}

/// Search for a negativity witness of E⁻¹ following the constructive route:
/// push a rank-one informationally complete measurement through the inverse
/// and look for negative eigenvalues, then sweep random pure states. The
/// qubit fixture is deterministic; higher dimensions draw from `seed`.
pub fn wigner_witness(e: &Channel, tol: &Tol, seed: u64) -> Result<WignerWitness, ChannelError> {
    if e.din() != e.dout() {
        return Err(ChannelError::DimensionMismatch { expected: e.din(), got: e.dout() });
    }
    let d = e.din();
    if e.as_unitary(tol).is_some() {
        return Err(ChannelError::UnitaryChannel);
    }
    let om = OperatorMap::from_channel(e);
    let (inv, _cond) = om.inverse(tol)?;

    let mut rng = Rng::new(seed);
    let fixture = if d == 2 {
        fixtures::sic2()
    } else {
        fixtures::random_rank_one_infocomplete(d, &mut rng, tol)
    };
    let mut qs = Vec::with_capacity(fixture.len());
    for p in fixture.elements() {
        qs.push(inv.apply(p)?.hermitize());
    }

    let mut best_val = 0.0f64;
    let mut best: Option<(Vec<C64>, usize)> = None;
    for (i, q) in qs.iter().enumerate() {
        let eig = herm_eig(q, tol)?;
        let lm = eig.values[0];
        if lm < best_val {
            best_val = lm;
            best = Some((eig.vectors.col(0), i));
        }
    }
    if best_val >= -tol.witness {
        for _ in 0..64 {
            let psi = fixtures::random_pure(d, &mut rng);
            for (i, q) in qs.iter().enumerate() {
                let val = vdot(&psi, &q.mul_vec(&psi)).re;
                if val < best_val {
                    best_val = val;
                    best = Some((psi.clone(), i));
                }
            }
        }
    }
    match best {
        Some((psi, element)) if best_val < -tol.witness => {
            Ok(WignerWitness { psi, violation: best_val, element })
        }
        _ => Err(ChannelError::NoWitnessFound { best: best_val }),
    }
}

/// Is E extremal among channels reproducing the given measurement from its
/// image? True iff for some element P_k the family {E_i† P_k E_j} over the
/// canonical Kraus operators is linearly independent.
pub fn extremal_in_cpq(e: &Channel, p: &Povm, tol: &Tol) -> Result<bool, ChannelError> {
    if p.dim() != e.din() {
        return Err(ChannelError::DimensionMismatch { expected: e.din(), got: p.dim() });
    }
    let ce = e.canonical(tol)?;
    let r = ce.kraus().len();
    if r == 0 {
        return Ok(false);
    }
    let dout = ce.dout();
    if r * r > dout * dout {
        return Ok(false);
    }
    for pk in p.elements() {
        let mut rows: Vec<Vec<C64>> = Vec::with_capacity(r * r);
        for ei in ce.kraus() {
            for ej in ce.kraus() {
                rows.push(ei.adjoint().mul(pk).mul(ej).data().to_vec());
            }
        }
        if crate::mat::crank(&rows, tol.rank) == r * r {
            return Ok(true);
        }
    }
    Ok(false)
}
