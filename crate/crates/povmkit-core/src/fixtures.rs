//! Reference measurements and seeded random ensembles. Every randomized
//! construction is a pure function of the caller's generator state, so a
//! fixed seed reproduces the same bytes on every platform.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods cover this when std is linked
use num_traits::Float;

use crate::channel::{Channel, OperatorMap};
use crate::mat::{c, cr, herm_eig, vdot, vnorm, Mat, C64};
use crate::povm::Povm;
use crate::rng::Rng;
use crate::Tol;

/// Computational-basis projective measurement.
pub fn observable(d: usize) -> Povm {
    let elements = (0..d)
        .map(|i| Mat::from_fn(d, d, |r, s| if r == i && s == i { cr(1.0) } else { cr(0.0) }))
        .collect();
    Povm::new_unchecked(elements)
}

/// Qubit tetrahedron measurement: four subnormalized rank-one elements with
/// Bloch vectors at the vertices of a regular tetrahedron.
pub fn sic2() -> Povm {
    let s3 = 3.0f64.sqrt();
    let dirs = [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ];
    let elements = dirs
        .iter()
        .map(|v| {
            let (x, y, z) = (v[0] / s3, v[1] / s3, v[2] / s3);
            Mat::from_data(
                2,
                2,
                vec![
                    c((1.0 + z) / 4.0, 0.0),
                    c(x / 4.0, -y / 4.0),
                    c(x / 4.0, y / 4.0),
                    c((1.0 - z) / 4.0, 0.0),
                ],
            )
        })
        .collect();
    Povm::new_unchecked(elements)
}

/// Two-outcome measurement {E, I−E} from a single effect.
pub fn pair_from_effect(e: &Mat, tol: &Tol) -> Result<Povm, crate::povm::PovmError> {
    let d = e.rows();
    Povm::new(vec![e.clone(), Mat::identity(d).sub(e)], tol)
}

/// Haar-random unitary via modified Gram–Schmidt on a complex Gaussian
/// matrix (positive-diagonal R convention).
pub fn haar_unitary(d: usize, rng: &mut Rng) -> Mat {
    let a = rng.gaussian_mat(d, d);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for k in 0..d {
        let mut v = a.col(k);
        for q in cols.iter() {
            let ov = vdot(q, &v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= ov * qi;
            }
        }
        let n = vnorm(&v);
        for vi in v.iter_mut() {
            *vi /= cr(n);
        }
        cols.push(v);
    }
    Mat::from_fn(d, d, |i, j| cols[j][i])
}

/// Haar-random pure state as a unit column vector.
pub fn random_pure(d: usize, rng: &mut Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..d).map(|_| rng.c_gaussian()).collect();
    let n = vnorm(&v);
    for vi in v.iter_mut() {
        *vi /= cr(n);
    }
    v
}

/// Full-rank random density matrix (Wishart, trace-normalized).
pub fn random_density(d: usize, rng: &mut Rng) -> Mat {
    let a = rng.gaussian_mat(d, d);
    let w = a.mul(&a.adjoint());
    w.scale_re(1.0 / w.trace().re)
}

pub fn random_hermitian(d: usize, rng: &mut Rng) -> Mat {
    let a = rng.gaussian_mat(d, d);
    a.add(&a.adjoint()).scale_re(0.5)
}

/// Random n-outcome measurement on dimension d via a Haar isometry: the
/// blocks of the first d columns of a Haar unitary on d·n give operators
/// A_i with Σ A_i†A_i = I; the elements are P_i = A_i†A_i.
pub fn random_povm(d: usize, n: usize, rng: &mut Rng, tol: &Tol) -> Povm {
    let u = haar_unitary(d * n, rng);
    let elements: Vec<Mat> = (0..n)
        .map(|i| {
            let a = Mat::from_fn(d, d, |r, s| u.get(i * d + r, s));
            a.adjoint().mul(&a).hermitize()
        })
        .collect();
    Povm::new(elements, tol).expect("isometry blocks form a valid measurement")
}

fn inv_sqrt_psd(m: &Mat, tol: &Tol) -> Option<Mat> {
    let eig = herm_eig(m, tol).ok()?;
    let lmax = eig.values.last().copied()?;
    if eig.values[0] <= 1e-12 * lmax.max(1.0) {
        return None;
    }
    let d = m.rows();
    let mut out = Mat::zeros(d, d);
    for (idx, &l) in eig.values.iter().enumerate() {
        let col = eig.vectors.col(idx);
        out = out.add(&Mat::outer(&col, &col).scale_re(1.0 / l.sqrt()));
    }
    Some(out)
}

/// d² Haar-random rank-one elements, frame-normalized so they sum to the
/// identity. Generic draws span all of operator space.
pub fn random_rank_one_infocomplete(d: usize, rng: &mut Rng, tol: &Tol) -> Povm {
    for _ in 0..32 {
        let states: Vec<Vec<C64>> = (0..d * d).map(|_| random_pure(d, rng)).collect();
        let mut g = Mat::zeros(d, d);
        for s in &states {
            g = g.add(&Mat::outer(s, s));
        }
        let Some(gi) = inv_sqrt_psd(&g.hermitize(), tol) else { continue };
        let elements: Vec<Mat> = states
            .iter()
            .map(|s| {
                let w = gi.mul_vec(s);
                Mat::outer(&w, &w).hermitize()
            })
            .collect();
        let Ok(p) = Povm::new(elements, tol) else { continue };
        if p.classify(tol).map(|f| f.infocomplete).unwrap_or(false) {
            return p;
        }
    }
    panic!("random rank-one frame failed to become informationally complete");
}

/// Random Hermitian with spectrum affinely rescaled into [lo, hi].
pub fn random_effect(d: usize, lo: f64, hi: f64, rng: &mut Rng, tol: &Tol) -> Mat {
    let h = random_hermitian(d, rng);
    let eig = herm_eig(&h, tol).expect("random Hermitian eigendecomposition");
    let lmin = eig.values[0];
    let lmax = *eig.values.last().unwrap();
    if lmax - lmin < 1e-9 {
        return Mat::identity(d).scale_re(0.5 * (lo + hi));
    }
    let mut out = Mat::zeros(d, d);
    for (idx, &l) in eig.values.iter().enumerate() {
        let col = eig.vectors.col(idx);
        let nl = lo + (hi - lo) * (l - lmin) / (lmax - lmin);
        out = out.add(&Mat::outer(&col, &col).scale_re(nl));
    }
    out.hermitize()
}

/// Random commuting family: shared Haar eigenbasis, random probability
/// vector across outcomes on each basis vector.
pub fn random_abelian(d: usize, n: usize, rng: &mut Rng, tol: &Tol) -> Povm {
    let v = haar_unitary(d, rng);
    let mut table = vec![vec![0.0f64; n]; d];
    for row in table.iter_mut() {
        let mut s = 0.0;
        for x in row.iter_mut() {
            *x = -(1.0 - rng.f64()).ln();
            s += *x;
        }
        for x in row.iter_mut() {
            *x /= s;
        }
    }
    let elements: Vec<Mat> = (0..n)
        .map(|e| {
            let mut m = Mat::zeros(d, d);
            for a in 0..d {
                let col = v.col(a);
                m = m.add(&Mat::outer(&col, &col).scale_re(table[a][e]));
            }
            m.hermitize()
        })
        .collect();
    Povm::new(elements, tol).expect("shared-eigenbasis family is a valid measurement")
}

/// Random invertible unital completely positive map: Gaussian Kraus
/// operators normalized to unitality, then blended toward the identity
/// channel strongly enough to keep the action on operator space invertible
/// and well-conditioned.
pub fn random_unital_channel(d: usize, kraus_count: usize, rng: &mut Rng, tol: &Tol) -> Channel {
    for _ in 0..40 {
        let raw: Vec<Mat> = (0..kraus_count).map(|_| rng.gaussian_mat(d, d)).collect();
        let mut s = Mat::zeros(d, d);
        for e in &raw {
            s = s.add(&e.adjoint().mul(e));
        }
        let Some(si) = inv_sqrt_psd(&s.hermitize(), tol) else { continue };
        let kraus: Vec<Mat> = raw.iter().map(|e| e.mul(&si)).collect();
        let Ok(base) = Channel::from_kraus(kraus, tol) else { continue };
        let t = rng.range(0.55, 0.95);
        let choi = base
            .choi()
            .scale_re(1.0 - t)
            .add(&Channel::identity(d).choi().scale_re(t));
        let Ok(ch) = Channel::from_choi(&choi, d, d, tol) else { continue };
        let om = OperatorMap::from_channel(&ch);
        match om.condition(tol) {
            Ok(cond) if cond < 100.0 => return ch,
            _ => continue,
        }
    }
    panic!("failed to draw a well-conditioned invertible unital map");
}
