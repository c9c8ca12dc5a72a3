//! Dense complex matrices sized for measurement work (dim ≤ ~25, enough for
//! Choi matrices of channels on C^5), plus the spectral routines everything
//! else is built on: a cyclic Jacobi Hermitian eigensolver, PSD projection,
//! Kronecker products, partial traces and the double-ket calculus
//! |A⟩⟩ = Σ_mn A_mn |m⟩|n⟩.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex;
#[allow(unused_imports)] // inherent f64 methods cover this when std is linked
use num_traits::Float;

use crate::Tol;

pub type C64 = Complex<f64>;

/// Complex number from real and imaginary parts.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Real number embedded as a complex one.
#[inline]
pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatError {
    /// ‖M − M†‖_max exceeded the hermiticity tolerance.
    NonHermitian { residual: f64 },
    /// Jacobi sweeps did not reduce the off-diagonal mass below threshold.
    NoConvergence { off_diagonal: f64 },
    /// Input contained NaN or infinity.
    NonFinite,
    /// Shape of an argument does not match what the operation needs.
    DimensionMismatch { expected: usize, got: usize },
    /// Linear system has no unique solution at working precision.
    Singular,
    /// Matrix has an eigenvalue below −psd tolerance where PSD was required.
    NotPsd { min_eigenvalue: f64 },
}

impl fmt::Display for MatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatError::NonHermitian { residual } => {
                write!(f, "matrix is not Hermitian (residual {residual:.3e})")
            }
            MatError::NoConvergence { off_diagonal } => {
                write!(f, "eigensolver did not converge (off-diagonal {off_diagonal:.3e})")
            }
            MatError::NonFinite => write!(f, "matrix contains non-finite entries"),
            MatError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            MatError::Singular => write!(f, "linear system is singular at working precision"),
            MatError::NotPsd { min_eigenvalue } => {
                write!(f, "matrix is not positive semidefinite (λ_min {min_eigenvalue:.3e})")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MatError {}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, cr(1.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Mat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Row-major construction; `data.len()` must equal `rows * cols`.
    pub fn from_data(rows: usize, cols: usize, data: Vec<C64>) -> Mat {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn diag_re(d: &[f64]) -> Mat {
        let n = d.len();
        Mat::from_fn(n, n, |i, j| if i == j { cr(d[i]) } else { cr(0.0) })
    }

    pub fn diag(d: &[C64]) -> Mat {
        let n = d.len();
        Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { cr(0.0) })
    }

    /// Outer product u v†.
    pub fn outer(u: &[C64], v: &[C64]) -> Mat {
        Mat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn add(&self, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "add shape mismatch");
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "sub shape mismatch");
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: C64) -> Mat {
        let data = self.data.iter().map(|a| a * s).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_re(&self, s: f64) -> Mat {
        self.scale(cr(s))
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows, "mul shape mismatch");
        let mut out = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..o.cols {
                    let v = out.get(i, j) + a * o.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        let mut out = vec![cr(0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = cr(0.0);
            for j in 0..self.cols {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> Mat {
        let data = self.data.iter().map(|z| z.conj()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).fold(cr(0.0), |a, b| a + b)
    }

    /// Entrywise max modulus, ‖M‖_max.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖M − M†‖_max; zero for exactly Hermitian input.
    pub fn herm_residual(&self) -> f64 {
        assert!(self.is_square(), "hermiticity of non-square matrix");
        let mut r = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                if d > r {
                    r = d;
                }
            }
        }
        r
    }

    /// (M + M†)/2.
    pub fn hermitize(&self) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * cr(0.5)
        })
    }

    pub fn commutator(&self, o: &Mat) -> Mat {
        self.mul(o).sub(&o.mul(self))
    }

    /// Kronecker product; block (i,j) of the result is A_ij · B.
    pub fn kron(&self, o: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows * o.rows, self.cols * o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for k in 0..o.rows {
                    for l in 0..o.cols {
                        out.set(i * o.rows + k, j * o.cols + l, a * o.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// Partial trace over tensor factor 1 or 2 of a (d1·d2)×(d1·d2) matrix,
    /// with row index (m,n) = m·d2 + n. Tr_1 leaves a d2×d2 matrix, Tr_2 a
    /// d1×d1 one. Satisfies Tr_1[|A⟩⟩⟨⟨B|] = Aᵀ B* and Tr_2[|A⟩⟩⟨⟨B|] = A B†.
    pub fn partial_trace(&self, factor: usize, d1: usize, d2: usize) -> Result<Mat, MatError> {
        let n = d1 * d2;
        if self.rows != n || self.cols != n {
            return Err(MatError::DimensionMismatch { expected: n, got: self.rows });
        }
        match factor {
            1 => {
                let mut out = Mat::zeros(d2, d2);
                for a in 0..d2 {
                    for b in 0..d2 {
                        let mut acc = cr(0.0);
                        for m in 0..d1 {
                            acc += self.get(m * d2 + a, m * d2 + b);
                        }
                        out.set(a, b, acc);
                    }
                }
                Ok(out)
            }
            2 => {
                let mut out = Mat::zeros(d1, d1);
                for m in 0..d1 {
                    for p in 0..d1 {
                        let mut acc = cr(0.0);
                        for a in 0..d2 {
                            acc += self.get(m * d2 + a, p * d2 + a);
                        }
                        out.set(m, p, acc);
                    }
                }
                Ok(out)
            }
            _ => Err(MatError::DimensionMismatch { expected: 2, got: factor }),
        }
    }

    /// |A⟩⟩ = Σ_mn A_mn |m⟩|n⟩, the row-major flattening as a column vector.
    pub fn double_ket(&self) -> Vec<C64> {
        assert!(self.is_square(), "double ket of non-square matrix");
        self.data.clone()
    }

    /// Inverse of `double_ket` for a d×d matrix.
    pub fn from_double_ket(v: &[C64], d: usize) -> Mat {
        assert_eq!(v.len(), d * d, "double ket length mismatch");
        Mat::from_data(d, d, v.to_vec())
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Operator (spectral) norm via the Gram matrix M†M.
    pub fn op_norm(&self) -> f64 {
        let g = self.adjoint().mul(self);
        let eig = herm_eig(&g, &Tol::default()).expect("Gram matrix is Hermitian");
        eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }
}

/// Eigendecomposition of a Hermitian matrix: H = V diag(values) V†,
/// values ascending, column k of `vectors` is the k-th eigenvector.
#[derive(Clone, Debug)]
pub struct EigResult {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl EigResult {
    pub fn reconstruct(&self) -> Mat {
        let v = &self.vectors;
        let d = Mat::diag_re(&self.values);
        v.mul(&d).mul(&v.adjoint())
    }
}

/// Hermitian eigendecomposition by cyclic Jacobi with complex plane
/// rotations. Deterministic; reconstruction and orthonormality residuals stay
/// below `tol.eig` for dimensions up to ~25.
pub fn herm_eig(h: &Mat, tol: &Tol) -> Result<EigResult, MatError> {
    if !h.is_square() {
        return Err(MatError::DimensionMismatch { expected: h.rows, got: h.cols });
    }
    if !h.is_finite() {
        return Err(MatError::NonFinite);
    }
    let res = h.herm_residual();
    let scale = h.max_abs().max(1.0);
    if res > tol.herm * scale {
        return Err(MatError::NonHermitian { residual: res });
    }
    let n = h.rows();
    let mut a = h.hermitize();
    let mut v = Mat::identity(n);
    if n <= 1 {
        let values = if n == 1 { vec![a.get(0, 0).re] } else { vec![] };
        return Ok(EigResult { values, vectors: v });
    }

    let fro = a.fro_norm().max(f64::MIN_POSITIVE);
    let target = 1e-14 * fro;
    let mut converged = false;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j).norm_sqr();
            }
        }
        let off = (2.0 * off).sqrt();
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let g = apq.norm();
                if g <= 1e-300 || g <= 1e-18 * fro {
                    continue;
                }
                let phi = apq / cr(g);
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * g);
                // Small root of t² − 2τt − 1 = 0 for a bounded rotation angle.
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                // Columns p,q: right-multiply by J with J_pp = c, J_pq = −s·φ,
                // J_qp = s·φ̄, J_qq = c.
                for k in 0..n {
                    let hp = a.get(k, p);
                    let hq = a.get(k, q);
                    a.set(k, p, cr(cth) * hp + cr(sth) * phi.conj() * hq);
                    a.set(k, q, cr(cth) * hq - cr(sth) * phi * hp);
                }
                // Rows p,q: left-multiply by J†.
                for k in 0..n {
                    let hp = a.get(p, k);
                    let hq = a.get(q, k);
                    a.set(p, k, cr(cth) * hp + cr(sth) * phi * hq);
                    a.set(q, k, cr(cth) * hq - cr(sth) * phi.conj() * hp);
                }
                for k in 0..n {
                    let vp = v.get(k, p);
                    let vq = v.get(k, q);
                    v.set(k, p, cr(cth) * vp + cr(sth) * phi.conj() * vq);
                    v.set(k, q, cr(cth) * vq - cr(sth) * phi * vp);
                }
            }
        }
    }
    if !converged {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j).norm_sqr();
            }
        }
        let off = (2.0 * off).sqrt();
        if off > tol.eig * fro {
            return Err(MatError::NoConvergence { off_diagonal: off });
        }
    }

    // Ascending sort, stable on ties so the result is deterministic.
    let mut idx: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    idx.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("finite eigenvalues"));
    let values: Vec<f64> = idx.iter().map(|&i| diag[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c_| v.get(r, idx[c_]));
    Ok(EigResult { values, vectors })
}

/// Nearest positive semidefinite matrix in Frobenius norm: eigenvalues
/// clipped at zero, eigenvectors kept.
pub fn psd_project(h: &Mat, tol: &Tol) -> Result<Mat, MatError> {
    let eig = herm_eig(h, tol)?;
    let clipped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let d = Mat::diag_re(&clipped);
    Ok(eig.vectors.mul(&d).mul(&eig.vectors.adjoint()).hermitize())
}

/// Hermitian square root of a PSD matrix. Eigenvalues below −tol.psd·scale
/// are rejected; small negatives from rounding are clipped to zero.
pub fn sqrt_psd(h: &Mat, tol: &Tol) -> Result<Mat, MatError> {
    let eig = herm_eig(h, tol)?;
    let scale = eig.values.last().map(|l| l.abs()).unwrap_or(0.0).max(1.0);
    if let Some(&min) = eig.values.first() {
        if min < -tol.psd * scale {
            return Err(MatError::NotPsd { min_eigenvalue: min });
        }
    }
    let roots: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let d = Mat::diag_re(&roots);
    Ok(eig.vectors.mul(&d).mul(&eig.vectors.adjoint()).hermitize())
}

/// Numerical rank over ℂ of a set of row vectors, by Gaussian elimination
/// with full pivoting; pivots below `rel_tol` times the largest initial
/// entry count as zero.
pub fn crank(rows: &[Vec<C64>], rel_tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut m: Vec<Vec<C64>> = rows.to_vec();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if scale <= 0.0 {
        return 0;
    }
    let cut = rel_tol * scale;
    let nrows = m.len();
    let mut rank = 0;
    let mut used_col = vec![false; ncols];
    for _ in 0..nrows.min(ncols) {
        // Full pivot among remaining rows/columns.
        let mut best = (0usize, 0usize, 0.0f64);
        for (i, row) in m.iter().enumerate().skip(rank) {
            for j in 0..ncols {
                if used_col[j] {
                    continue;
                }
                let a = row[j].norm();
                if a > best.2 {
                    best = (i, j, a);
                }
            }
        }
        if best.2 <= cut {
            break;
        }
        let (pi, pj, _) = best;
        m.swap(rank, pi);
        used_col[pj] = true;
        let pivot = m[rank][pj];
        for i in (rank + 1)..nrows {
            let f = m[i][pj] / pivot;
            if f.norm() == 0.0 {
                continue;
            }
            for j in 0..ncols {
                let s = m[rank][j];
                m[i][j] -= f * s;
            }
        }
        rank += 1;
    }
    rank
}

/// Solve A X = B by Gaussian elimination with partial pivoting.
pub fn solve(a: &Mat, b: &Mat) -> Result<Mat, MatError> {
    if !a.is_square() {
        return Err(MatError::DimensionMismatch { expected: a.rows, got: a.cols });
    }
    if a.rows != b.rows {
        return Err(MatError::DimensionMismatch { expected: a.rows, got: b.rows });
    }
    let n = a.rows;
    let mut lhs = a.clone();
    let mut rhs = b.clone();
    let scale = lhs.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut piv = k;
        let mut best = lhs.get(k, k).norm();
        for i in (k + 1)..n {
            let v = lhs.get(i, k).norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= 1e-13 * scale {
            return Err(MatError::Singular);
        }
        if piv != k {
            for j in 0..n {
                let t = lhs.get(k, j);
                lhs.set(k, j, lhs.get(piv, j));
                lhs.set(piv, j, t);
            }
            for j in 0..rhs.cols {
                let t = rhs.get(k, j);
                rhs.set(k, j, rhs.get(piv, j));
                rhs.set(piv, j, t);
            }
        }
        let pivot = lhs.get(k, k);
        for i in (k + 1)..n {
            let f = lhs.get(i, k) / pivot;
            if f.norm() == 0.0 {
                continue;
            }
            for j in k..n {
                let v = lhs.get(i, j) - f * lhs.get(k, j);
                lhs.set(i, j, v);
            }
            for j in 0..rhs.cols {
                let v = rhs.get(i, j) - f * rhs.get(k, j);
                rhs.set(i, j, v);
            }
        }
    }
    let mut x = Mat::zeros(n, rhs.cols);
    for j in 0..rhs.cols {
        for i in (0..n).rev() {
            let mut acc = rhs.get(i, j);
            for k in (i + 1)..n {
                acc -= lhs.get(i, k) * x.get(k, j);
            }
            x.set(i, j, acc / lhs.get(i, i));
        }
    }
    Ok(x)
}

/// ⟨a|b⟩ with the physics convention: conjugate-linear in the first slot.
pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len(), "vdot length mismatch");
    a.iter().zip(b).map(|(x, y)| x.conj() * y).fold(cr(0.0), |s, t| s + t)
}

pub fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tol {
        Tol::default()
    }

    fn mat2(a: [[C64; 2]; 2]) -> Mat {
        Mat::from_fn(2, 2, |i, j| a[i][j])
    }

    #[test]
    fn eig_of_diagonal_is_sorted() {
        let h = Mat::diag_re(&[1.0, 0.0]);
        let e = herm_eig(&h, &tol()).unwrap();
        assert!((e.values[0] - 0.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_of_pauli_x() {
        let x = mat2([[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]]);
        let e = herm_eig(&x, &tol()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        assert!(e.reconstruct().sub(&x).max_abs() < 1e-12);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        // Fixed pseudo-random Hermitian, d = 4.
        let mut seed = 0x243F6A8885A308D3u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let g = Mat::from_fn(4, 4, |_, _| c(next(), next()));
        let h = g.hermitize();
        let e = herm_eig(&h, &tol()).unwrap();
        assert!(e.reconstruct().sub(&h).max_abs() <= 1e-10);
        let vtv = e.vectors.adjoint().mul(&e.vectors);
        assert!(vtv.sub(&Mat::identity(4)).max_abs() <= 1e-10);
        // Ascending order.
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1] + 1e-14);
        }
    }

    #[test]
    fn eig_handles_dim_25() {
        let mut seed = 0x452821E638D01377u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let g = Mat::from_fn(25, 25, |_, _| c(next(), next()));
        let h = g.hermitize();
        let e = herm_eig(&h, &tol()).unwrap();
        assert!(e.reconstruct().sub(&h).max_abs() <= 1e-9 * h.max_abs().max(1.0));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = mat2([[cr(0.0), cr(1.0)], [cr(0.0), cr(0.0)]]);
        match herm_eig(&m, &tol()) {
            Err(MatError::NonHermitian { .. }) => {}
            other => panic!("expected NonHermitian, got {other:?}"),
        }
    }

    #[test]
    fn eig_is_deterministic() {
        let h = mat2([[cr(0.3), c(0.1, -0.2)], [c(0.1, 0.2), cr(-0.7)]]);
        let a = herm_eig(&h, &tol()).unwrap();
        let b = herm_eig(&h, &tol()).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.vectors.sub(&b.vectors).max_abs() == 0.0);
    }

    #[test]
    fn kron_mixed_product() {
        let a = mat2([[cr(1.0), c(0.0, 1.0)], [cr(2.0), cr(0.5)]]);
        let b = mat2([[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]]);
        let cm = mat2([[cr(0.3), cr(0.0)], [c(0.0, -1.0), cr(1.0)]]);
        let d = mat2([[cr(1.0), cr(1.0)], [cr(0.0), cr(1.0)]]);
        let lhs = a.kron(&b).mul(&cm.kron(&d));
        let rhs = a.mul(&cm).kron(&b.mul(&d));
        assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
    }

    #[test]
    fn kron_of_identities() {
        let i2 = Mat::identity(2);
        let i3 = Mat::identity(3);
        assert!(i2.kron(&i3).sub(&Mat::identity(6)).max_abs() == 0.0);
    }

    #[test]
    fn partial_trace_of_kron_factors() {
        let a = mat2([[cr(1.0), c(0.2, 0.1)], [c(0.2, -0.1), cr(0.5)]]);
        let b = mat2([[cr(0.7), cr(0.0)], [cr(0.0), cr(0.3)]]);
        let ab = a.kron(&b);
        let t2 = ab.partial_trace(2, 2, 2).unwrap();
        let t1 = ab.partial_trace(1, 2, 2).unwrap();
        assert!(t2.sub(&a.scale(b.trace())).max_abs() <= 1e-12);
        assert!(t1.sub(&b.scale(a.trace())).max_abs() <= 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let m = Mat::from_fn(6, 6, |i, j| c((i + 1) as f64 * 0.1, (j as f64) * 0.05));
        let t = m.partial_trace(1, 2, 3).unwrap();
        assert!((t.trace() - m.trace()).norm() <= 1e-12);
    }

    #[test]
    fn double_ket_identities() {
        let a = mat2([[cr(1.0), c(0.0, 2.0)], [cr(-0.5), cr(0.25)]]);
        let b = mat2([[c(0.1, 0.1), cr(1.0)], [cr(0.0), c(0.0, -1.0)]]);
        let cm = mat2([[cr(0.4), cr(0.6)], [c(0.2, 0.2), cr(-1.0)]]);

        // ⟨⟨A|B⟩⟩ = Tr[A†B]
        let ip = vdot(&a.double_ket(), &b.double_ket());
        assert!((ip - a.adjoint().mul(&b).trace()).norm() <= 1e-13);

        // (A ⊗ Bᵀ)|C⟩⟩ = |A C B⟩⟩
        let lhs = a.kron(&b.transpose()).mul_vec(&cm.double_ket());
        let rhs = a.mul(&cm).mul(&b).double_ket();
        for (x, y) in lhs.iter().zip(&rhs) {
            assert!((x - y).norm() <= 1e-12);
        }

        // Tr_1[|A⟩⟩⟨⟨B|] = Aᵀ B*, Tr_2[|A⟩⟩⟨⟨B|] = A B†
        let ketbra = Mat::outer(&a.double_ket(), &b.double_ket());
        let t1 = ketbra.partial_trace(1, 2, 2).unwrap();
        let t2 = ketbra.partial_trace(2, 2, 2).unwrap();
        assert!(t1.sub(&a.transpose().mul(&b.conj())).max_abs() <= 1e-12);
        assert!(t2.sub(&a.mul(&b.adjoint())).max_abs() <= 1e-12);

        // Round trip.
        let back = Mat::from_double_ket(&a.double_ket(), 2);
        assert!(back.sub(&a).max_abs() == 0.0);
    }

    #[test]
    fn psd_project_clips_negative_branch() {
        let h = Mat::diag_re(&[1.0, -1.0]);
        let p = psd_project(&h, &tol()).unwrap();
        assert!(p.sub(&Mat::diag_re(&[1.0, 0.0])).max_abs() <= 1e-12);
    }

    #[test]
    fn psd_project_fixes_psd_input() {
        let g = mat2([[cr(1.0), c(0.3, 0.2)], [cr(0.0), cr(0.5)]]);
        let p0 = g.mul(&g.adjoint());
        let p1 = psd_project(&p0, &tol()).unwrap();
        assert!(p1.sub(&p0).max_abs() <= 1e-10);
    }

    #[test]
    fn psd_project_matches_diagonal_clipping_oracle() {
        // For a matrix diagonal in a known basis, projection = clipping there.
        let u = {
            let s = 1.0 / 2.0f64.sqrt();
            mat2([[cr(s), cr(s)], [cr(s), cr(-s)]])
        };
        let h = u.mul(&Mat::diag_re(&[0.7, -0.4])).mul(&u.adjoint());
        let expect = u.mul(&Mat::diag_re(&[0.7, 0.0])).mul(&u.adjoint());
        let p = psd_project(&h, &tol()).unwrap();
        assert!(p.sub(&expect).max_abs() <= 1e-10);
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let g = mat2([[cr(1.0), c(0.2, -0.4)], [cr(0.3), cr(0.8)]]);
        let p = g.mul(&g.adjoint());
        let r = sqrt_psd(&p, &tol()).unwrap();
        assert!(r.mul(&r).sub(&p).max_abs() <= 1e-10);
    }

    #[test]
    fn crank_detects_dependence() {
        let r1 = vec![cr(1.0), cr(0.0), cr(2.0)];
        let r2 = vec![cr(0.0), cr(1.0), cr(1.0)];
        let r3 = vec![cr(2.0), cr(2.0), cr(6.0)]; // 2·r1 + 2·r2
        assert_eq!(crank(&[r1.clone(), r2.clone(), r3], 1e-8), 2);
        assert_eq!(crank(&[r1, r2], 1e-8), 2);
    }

    #[test]
    fn solve_matches_known_inverse() {
        let a = mat2([[cr(2.0), cr(1.0)], [cr(1.0), cr(1.0)]]);
        let x = solve(&a, &Mat::identity(2)).unwrap();
        let expect = mat2([[cr(1.0), cr(-1.0)], [cr(-1.0), cr(2.0)]]);
        assert!(x.sub(&expect).max_abs() <= 1e-12);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = mat2([[cr(1.0), cr(2.0)], [cr(2.0), cr(4.0)]]);
        assert!(matches!(solve(&a, &Mat::identity(2)), Err(MatError::Singular)));
    }

    #[test]
    fn op_norm_of_nilpotent_block() {
        let m = mat2([[cr(0.0), cr(2.0)], [cr(0.0), cr(0.0)]]);
        assert!((m.op_norm() - 2.0).abs() <= 1e-10);
    }
}
