//! Dense complex operators on small Hilbert spaces.
//!
//! Everything downstream (spectral CD fields, Floquet synthesis, propagation)
//! consumes these. Matrices are dense `nalgebra` storage; system dimensions in
//! this crate are ≤ ~16 (two qubits × truncated resonator), so dense
//! eigendecomposition is the right tool throughout.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = nalgebra::DVector<C64>;

/// Relative tolerance for the Hermiticity invariant.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Absolute tolerance for the unitarity invariant, max |U†U − I|.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    General,
}

/// A dense complex square matrix tagged with what it is supposed to be.
///
/// The tag is enforced at construction: `hermitian` and `unitary` reject
/// matrices violating their invariant (hard error, not a warning — every
/// downstream formula assumes it).
#[derive(Debug, Clone)]
pub struct Operator {
    mat: CMat,
    kind: OperatorKind,
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// max |M − M†|, the Hermiticity defect.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// max |U†U − I|, the unitarity defect.
pub fn unitarity_defect(m: &CMat) -> f64 {
    let p = m.adjoint() * m;
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

impl Operator {
    /// Wrap a matrix asserting Hermiticity: max|M − M†| ≤ 1e-12·max|M|.
    pub fn hermitian(mat: CMat) -> Result<Self> {
        assert_square(&mat);
        let scale = max_abs(&mat);
        let asym = hermiticity_defect(&mat);
        if asym > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian { asym, scale });
        }
        Ok(Self { mat, kind: OperatorKind::Hermitian })
    }

    /// Wrap a matrix asserting unitarity: max|U†U − I| ≤ 1e-10.
    pub fn unitary(mat: CMat) -> Result<Self> {
        assert_square(&mat);
        let defect = unitarity_defect(&mat);
        if defect > UNITARITY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self { mat, kind: OperatorKind::Unitary })
    }

    /// Wrap a matrix with no structural claim.
    pub fn general(mat: CMat) -> Self {
        assert_square(&mat);
        Self { mat, kind: OperatorKind::General }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn adjoint(&self) -> Operator {
        Operator { mat: self.mat.adjoint(), kind: self.kind }
    }

    pub fn identity(n: usize) -> Operator {
        Operator { mat: CMat::identity(n, n), kind: OperatorKind::Hermitian }
    }

    pub fn zeros(n: usize) -> Operator {
        Operator { mat: CMat::zeros(n, n), kind: OperatorKind::Hermitian }
    }
}

fn assert_square(m: &CMat) {
    assert_eq!(m.nrows(), m.ncols(), "operator matrices must be square");
}

fn check_dims(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// Commutator AB − BA. Anti-Hermitian when A, B are Hermitian.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    check_dims(a, b)?;
    Ok(Operator::general(commutator_raw(a.matrix(), b.matrix())))
}

pub fn commutator_raw(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Hilbert-Schmidt inner product Tr(A†B).
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<C64> {
    check_dims(a, b)?;
    Ok(hs_inner_raw(a.matrix(), b.matrix()))
}

pub fn hs_inner_raw(a: &CMat, b: &CMat) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

/// Frobenius norm.
pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// exp(−i·s·H) for Hermitian H, computed via eigendecomposition. The result
/// carries the `Unitary` tag.
pub fn expm_i(h: &Operator, s: f64) -> Result<Operator> {
    if h.kind() != OperatorKind::Hermitian {
        // allow untagged matrices that are numerically Hermitian
        let scale = max_abs(h.matrix());
        let asym = hermiticity_defect(h.matrix());
        if asym > HERMITICITY_TOL * scale.max(1e-300) {
            return Err(Error::NotHermitian { asym, scale });
        }
    }
    Operator::unitary(expm_i_raw(h.matrix(), s))
}

/// Internal fast path: exp(−i·s·H) on raw storage, H assumed Hermitian.
/// 2×2 inputs use the closed-form Pauli rotation; larger ones go through
/// `SymmetricEigen`.
pub fn expm_i_raw(h: &CMat, s: f64) -> CMat {
    let n = h.nrows();
    if n == 2 {
        return expm_i_2x2(h, s);
    }
    let se = h.clone().symmetric_eigen();
    let mut out = CMat::zeros(n, n);
    // V diag(e^{-i s E}) V†
    for k in 0..n {
        let phase = C64::from_polar(1.0, -s * se.eigenvalues[k]);
        let col = se.eigenvectors.column(k);
        for i in 0..n {
            let li = col[i] * phase;
            for j in 0..n {
                out[(i, j)] += li * col[j].conj();
            }
        }
    }
    out
}

/// Closed-form exp(−i s (c0·I + a·σ)) for a 2×2 Hermitian matrix.
fn expm_i_2x2(h: &CMat, s: f64) -> CMat {
    let ax = h[(0, 1)].re;
    let ay = -h[(0, 1)].im;
    let az = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let c0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let r = (ax * ax + ay * ay + az * az).sqrt();
    let phase = C64::from_polar(1.0, -s * c0);
    let (cosr, sinc) = if r * s.abs() < 1e-300 {
        (1.0, s) // sin(s r)/r → s
    } else {
        ((s * r).cos(), (s * r).sin() / r)
    };
    let i = C64::i();
    let mut out = CMat::zeros(2, 2);
    out[(0, 0)] = phase * (C64::new(cosr, 0.0) - i * sinc * az);
    out[(1, 1)] = phase * (C64::new(cosr, 0.0) + i * sinc * az);
    out[(0, 1)] = phase * (-i * sinc * C64::new(ax, -ay));
    out[(1, 0)] = phase * (-i * sinc * C64::new(ax, ay));
    out
}

/// Kronecker product A ⊗ B.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let mat = a.matrix().kronecker(b.matrix());
    let kind = match (a.kind(), b.kind()) {
        (OperatorKind::Hermitian, OperatorKind::Hermitian) => OperatorKind::Hermitian,
        (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
        _ => OperatorKind::General,
    };
    Operator { mat, kind }
}

/// Bosonic lowering operator truncated at `n` levels: a|k⟩ = √k |k−1⟩.
pub fn build_ladder(n: usize) -> Result<Operator> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("ladder needs dim ≥ 2, got {n}")));
    }
    let mut m = CMat::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    Ok(Operator::general(m))
}

/// Photon number operator a†a on `n` levels.
pub fn number_op(n: usize) -> Operator {
    let mut m = CMat::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = C64::new(k as f64, 0.0);
    }
    Operator { mat: m, kind: OperatorKind::Hermitian }
}

pub fn sigma_x() -> Operator {
    Operator {
        mat: CMat::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0), C64::new(1.0, 0.0),
            C64::new(1.0, 0.0), C64::new(0.0, 0.0),
        ]),
        kind: OperatorKind::Hermitian,
    }
}

pub fn sigma_y() -> Operator {
    Operator {
        mat: CMat::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0), C64::new(0.0, -1.0),
            C64::new(0.0, 1.0), C64::new(0.0, 0.0),
        ]),
        kind: OperatorKind::Hermitian,
    }
}

pub fn sigma_z() -> Operator {
    Operator {
        mat: CMat::from_row_slice(2, 2, &[
            C64::new(1.0, 0.0), C64::new(0.0, 0.0),
            C64::new(0.0, 0.0), C64::new(-1.0, 0.0),
        ]),
        kind: OperatorKind::Hermitian,
    }
}

/// Raising operator σ⁺ = (σx + iσy)/2. With σz = diag(1, −1) the excited
/// state (σz = +1) sits at basis index 0, so σ⁺ maps index 1 → index 0.
pub fn sigma_plus() -> Operator {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = C64::new(1.0, 0.0);
    Operator::general(m)
}

pub fn sigma_minus() -> Operator {
    let mut m = CMat::zeros(2, 2);
    m[(1, 0)] = C64::new(1.0, 0.0);
    Operator::general(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_mat_close(a: &CMat, b: &CMat, tol: f64) {
        assert_eq!(a.nrows(), b.nrows());
        let worst = (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(worst <= tol, "matrices differ by {worst:.3e} > {tol:.3e}\na = {a}\nb = {b}");
    }

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> Operator {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        Operator::hermitian(m).unwrap()
    }

    #[test]
    fn pauli_commutator() {
        // [σx, σz] = −2i σy
        let c = commutator(&sigma_x(), &sigma_z()).unwrap();
        let expect = sigma_y().matrix() * C64::new(0.0, -2.0);
        assert_mat_close(c.matrix(), &expect, 1e-15);
    }

    #[test]
    fn commutator_of_self_is_zero() {
        let a = sigma_x();
        let c = commutator(&a, &a).unwrap();
        assert_mat_close(c.matrix(), &CMat::zeros(2, 2), 0.0);
    }

    #[test]
    fn ladder_commutator_is_sigma_z() {
        // [σ+, σ−] = σz with σ± = (σx ± iσy)/2
        let c = commutator(&sigma_plus(), &sigma_minus()).unwrap();
        assert_mat_close(c.matrix(), sigma_z().matrix(), 1e-15);
    }

    #[test]
    fn commutator_dim_mismatch() {
        let a = sigma_x();
        let b = Operator::identity(3);
        assert!(matches!(commutator(&a, &b), Err(Error::DimensionMismatch(2, 3))));
    }

    #[test]
    fn hs_inner_paulis() {
        let z = hs_inner(&sigma_x(), &sigma_y()).unwrap();
        assert!(z.norm() < 1e-15);
        let n = hs_inner(&sigma_x(), &sigma_x()).unwrap();
        assert!((n - C64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hs_inner_identity_gives_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 4);
        let tr: C64 = (0..4).map(|i| h.matrix()[(i, i)]).sum();
        let ip = hs_inner(&Operator::identity(4), &h).unwrap();
        assert!((ip - tr).norm() < 1e-14);
    }

    #[test]
    fn expm_pauli_x_quarter_turn() {
        // exp(−i π/2 σx) = −i σx
        let u = expm_i(&sigma_x(), std::f64::consts::FRAC_PI_2).unwrap();
        let expect = sigma_x().matrix() * C64::new(0.0, -1.0);
        assert_mat_close(u.matrix(), &expect, 1e-14);
    }

    #[test]
    fn expm_zero_angle_is_identity() {
        let u = expm_i(&sigma_y(), 0.0).unwrap();
        assert_mat_close(u.matrix(), &CMat::identity(2, 2), 1e-15);
    }

    #[test]
    fn expm_sigma_z_is_diagonal_phases() {
        let th = 0.773;
        let u = expm_i(&sigma_z(), th).unwrap();
        let mut expect = CMat::zeros(2, 2);
        expect[(0, 0)] = C64::from_polar(1.0, -th);
        expect[(1, 1)] = C64::from_polar(1.0, th);
        assert_mat_close(u.matrix(), &expect, 1e-14);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let a = Operator::general(sigma_plus().matrix().clone());
        assert!(matches!(expm_i(&a, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn tensor_identities() {
        let i4 = tensor(&Operator::identity(2), &Operator::identity(2));
        assert_mat_close(i4.matrix(), &CMat::identity(4, 4), 0.0);
        let zi = tensor(&sigma_z(), &Operator::identity(2));
        let diag: Vec<f64> = (0..4).map(|i| zi.matrix()[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn ladder_action() {
        // a|2⟩ = √2 |1⟩ at dim 3
        let a = build_ladder(3).unwrap();
        let mut ket2 = CVec::zeros(3);
        ket2[2] = C64::new(1.0, 0.0);
        let out = a.matrix() * ket2;
        assert!((out[1] - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!(out[0].norm() < 1e-15 && out[2].norm() < 1e-15);
        assert!(build_ladder(1).is_err());
    }

    #[test]
    fn hermitian_constructor_rejects_bad_input() {
        let mut m = sigma_x().into_matrix();
        m[(0, 1)] += C64::new(1e-6, 0.0);
        assert!(Operator::hermitian(m).is_err());
    }

    #[test]
    fn unitary_constructor_rejects_bad_input() {
        let m = sigma_x().into_matrix() * C64::new(1.1, 0.0);
        assert!(Operator::unitary(m).is_err());
    }

    // Invariant: hs_inner(A, [A,B]) has zero real part (cyclic trace).
    #[test]
    fn hs_inner_with_commutator_is_imaginary() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.gen_range(2..=6);
            let a = random_hermitian(&mut rng, n);
            let b = random_hermitian(&mut rng, n);
            let c = commutator(&a, &b).unwrap();
            let ip = hs_inner(&a, &c).unwrap();
            assert!(ip.re.abs() < 1e-10, "Re Tr(A†[A,B]) = {:.3e}", ip.re);
        }
    }

    // Invariant: expm_i(H,s)·expm_i(H,−s) = I for dims up to 12.
    #[test]
    fn expm_inverse_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2usize, 3, 5, 8, 12] {
            let h = random_hermitian(&mut rng, n);
            let s = rng.gen_range(-3.0..3.0);
            let u = expm_i(&h, s).unwrap();
            let v = expm_i(&h, -s).unwrap();
            let prod = u.matrix() * v.matrix();
            assert_mat_close(&prod, &CMat::identity(n, n), 1e-10);
        }
    }

    // Invariant: commutator antisymmetry, exactly.
    #[test]
    fn commutator_antisymmetry_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(&mut rng, 5);
        let b = random_hermitian(&mut rng, 5);
        let ab = commutator(&a, &b).unwrap();
        let ba = commutator(&b, &a).unwrap();
        let sum = ab.matrix() + ba.matrix();
        assert!(sum.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn expm_2x2_matches_eigen_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 2);
            let s = rng.gen_range(-4.0..4.0);
            let fast = expm_i_raw(h.matrix(), s);
            // force the generic path by embedding in a 2x2 block of itself
            let se = h.matrix().clone().symmetric_eigen();
            let mut slow = CMat::zeros(2, 2);
            for k in 0..2 {
                let ph = C64::from_polar(1.0, -s * se.eigenvalues[k]);
                let col = se.eigenvectors.column(k);
                for i in 0..2 {
                    for j in 0..2 {
                        slow[(i, j)] += col[i] * ph * col[j].conj();
                    }
                }
            }
            assert_mat_close(&fast, &slow, 1e-13);
        }
    }
}
