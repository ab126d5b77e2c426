//! Fixed-size complex linear algebra for one and two qubits.
//!
//! Two-qubit operators use the basis order `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩` with the
//! measured qubit X as the first (most significant) factor and the target
//! qubit S second, so that the index of `|x s⟩` is `2 x + s` with `↑ = 0`,
//! `↓ = 1`.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat2 = Matrix2<C64>;
pub type CMat4 = Matrix4<C64>;
pub type CVec2 = Vector2<C64>;
pub type CVec4 = Vector4<C64>;

/// Default relative tolerance below which two eigenvalues of a 2×2 matrix are
/// treated as coincident.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn ket_up() -> CVec2 {
    CVec2::new(ONE, ZERO)
}

#[inline]
pub fn ket_down() -> CVec2 {
    CVec2::new(ZERO, ONE)
}

/// Two-qubit product ket `|x⟩_X ⊗ |s⟩_S`.
pub fn ket_xs(x: &CVec2, s: &CVec2) -> CVec4 {
    CVec4::new(x[0] * s[0], x[0] * s[1], x[1] * s[0], x[1] * s[1])
}

/// `|a⟩⟨b|`
pub fn outer2(a: &CVec2, b: &CVec2) -> CMat2 {
    a * b.adjoint()
}

/// `|a⟩⟨b|`
pub fn outer4(a: &CVec4, b: &CVec4) -> CMat4 {
    a * b.adjoint()
}

/// `|ψ⟩⟨ψ|`
pub fn projector2(psi: &CVec2) -> CMat2 {
    outer2(psi, psi)
}

/// Kronecker product `x ⊗ s` in the X-major basis order.
pub fn kron(x: &CMat2, s: &CMat2) -> CMat4 {
    CMat4::from_fn(|r, c| x[(r / 2, c / 2)] * s[(r % 2, c % 2)])
}

/// `a ρ a†`
#[inline]
pub fn sandwich2(a: &CMat2, rho: &CMat2) -> CMat2 {
    a * rho * a.adjoint()
}

/// `a ρ a†`
#[inline]
pub fn sandwich4(a: &CMat4, rho: &CMat4) -> CMat4 {
    a * rho * a.adjoint()
}

pub fn is_finite2(m: &CMat2) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_finite4(m: &CMat4) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff2(a: &CMat2, b: &CMat2) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff4(a: &CMat4, b: &CMat4) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Hermitian part `(m + m†) / 2`.
pub fn hermitian_part2(m: &CMat2) -> CMat2 {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues2(m: &CMat2) -> [f64; 2] {
    let h = hermitian_part2(m);
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - radius, mean + radius]
}

/// Smallest eigenvalue of the Hermitian part of a 4×4 matrix.
pub fn min_eigenvalue4(m: &CMat4) -> f64 {
    let h = (m + m.adjoint()) * c64(0.5, 0.0);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Whether `rho` is a (possibly subnormalized) qubit density matrix: Hermitian
/// within `tol`, eigenvalues `≥ -tol`, and `0 < tr ρ ≤ 1 + tol`.
pub fn is_density(rho: &CMat2, tol: f64) -> bool {
    if !is_finite2(rho) {
        return false;
    }
    let herm_err = max_abs_diff2(rho, &rho.adjoint());
    if herm_err > tol {
        return false;
    }
    let tr = rho.trace();
    if tr.im.abs() > tol || tr.re <= 0.0 || tr.re > 1.0 + tol {
        return false;
    }
    hermitian_eigenvalues2(rho)[0] >= -tol
}

fn nonzero_trace(rho: &CMat2) -> Result<f64> {
    let tr = rho.trace().re;
    if !(tr.abs() > 0.0) {
        return Err(Error::EmptyState);
    }
    Ok(tr)
}

/// `tr ρ² / (tr ρ)²`, invariant under rescaling of `ρ`.
pub fn purity(rho: &CMat2) -> Result<f64> {
    let tr = nonzero_trace(rho)?;
    let tr2 = (rho * rho.adjoint()).trace().re;
    Ok(tr2 / (tr * tr))
}

/// `⟨ψ|ρ|ψ⟩ / (tr ρ ⟨ψ|ψ⟩)`
pub fn fidelity_pure(rho: &CMat2, psi: &CVec2) -> Result<f64> {
    let tr = nonzero_trace(rho)?;
    let nrm = psi.norm_squared();
    if !(nrm > 0.0) {
        return Err(Error::ZeroVector);
    }
    let num = (psi.adjoint() * rho * psi)[(0, 0)].re;
    Ok(num / (tr * nrm))
}

/// Trace distance `½ ‖a − b‖₁` between two Hermitian matrices.
pub fn trace_distance(a: &CMat2, b: &CMat2) -> f64 {
    let [e0, e1] = hermitian_eigenvalues2(&(a - b));
    0.5 * (e0.abs() + e1.abs())
}

/// Scales `rho` to unit trace.
pub fn normalized(rho: &CMat2) -> Result<CMat2> {
    let tr = nonzero_trace(rho)?;
    Ok(rho / c64(tr, 0.0))
}

/// Reduced state of S: `Σ_x ⟨x|ρ_XS|x⟩_X`. Preserves the trace.
pub fn partial_trace_x(rho_xs: &CMat4) -> CMat2 {
    CMat2::from_fn(|s, t| rho_xs[(s, t)] + rho_xs[(2 + s, 2 + t)])
}

/// Normalized measurement state `(α|↑⟩ + |↓⟩)/√(1+|α|²)` of qubit X.
pub fn measurement_vector(alpha: C64) -> CVec2 {
    let n = (1.0 + alpha.norm_sqr()).sqrt();
    CVec2::new(alpha / n, c64(1.0 / n, 0.0))
}

/// Unnormalized state of S after confirming X in `|φ⟩`:
/// `⟨φ|ρ_XS|φ⟩_X`. `phi` is used as given (callers normalize it).
pub fn project_x_onto(rho_xs: &CMat4, phi: &CVec2) -> CMat2 {
    CMat2::from_fn(|s, t| {
        let mut acc = ZERO;
        for x in 0..2 {
            for y in 0..2 {
                acc += phi[x].conj() * rho_xs[(2 * x + s, 2 * y + t)] * phi[y];
            }
        }
        acc
    })
}

/// `⟨α|ρ_XS|α⟩_X` with the normalized measurement vector of [`measurement_vector`].
pub fn project_x(rho_xs: &CMat4, alpha: C64) -> CMat2 {
    project_x_onto(rho_xs, &measurement_vector(alpha))
}

/// `|φ⟩⟨φ|_X ⊗ ρ_S`
pub fn embed_x(phi: &CVec2, rho_s: &CMat2) -> CMat4 {
    kron(&projector2(phi), rho_s)
}

/// Eigen-decomposition of a diagonalizable (generally non-normal) 2×2
/// matrix with biorthonormal right and left eigenvectors.
///
/// `u[i]` are unit right eigenvectors whose largest-modulus component is made
/// real and positive. `v[i]` hold the components of the bras `⟨v_i|`, so that
/// `⟨v_i|x⟩ = v[i]ᵀ x` (no conjugation), `v[i]ᵀ M = λ_i v[i]ᵀ`, and
/// `v[i]ᵀ u[j] = δ_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigensystemV {
    /// Ordered by `|λ₁| ≥ |λ₂|`.
    pub lambda: [C64; 2],
    pub u: [CVec2; 2],
    pub v: [CVec2; 2],
    /// `|λ₁| − |λ₂|`
    pub gap: f64,
}

impl EigensystemV {
    /// `Λ_ab = λ_a λ_b*`
    #[inline]
    pub fn lambda_prod(&self, a: usize, b: usize) -> C64 {
        self.lambda[a] * self.lambda[b].conj()
    }

    /// `|u_i⟩⟨v_i|`
    pub fn projector(&self, i: usize) -> CMat2 {
        self.u[i] * self.v[i].transpose()
    }

    /// `⟨v_a|y⟩` for a ket `y`.
    #[inline]
    pub fn bra_v(&self, a: usize, y: &CVec2) -> C64 {
        self.v[a].dot(y)
    }

    /// `⟨v_a| m |v_b⟩`, where `|v_b⟩` is the ket dual to the stored bra.
    pub fn v_sandwich(&self, a: usize, m: &CMat2, b: usize) -> C64 {
        (self.v[a].transpose() * m * self.v[b].conjugate())[(0, 0)]
    }

    /// `Σ_i λ_i^k |u_i⟩⟨v_i|`
    pub fn power(&self, k: u32) -> CMat2 {
        let k = k as i32;
        self.projector(0) * self.lambda[0].powi(k) + self.projector(1) * self.lambda[1].powi(k)
    }

    /// `Σ_i λ_i |u_i⟩⟨v_i|`
    pub fn reconstruct(&self) -> CMat2 {
        self.power(1)
    }
}

fn fix_phase(u: CVec2) -> CVec2 {
    let u = u / c64(u.norm(), 0.0);
    let pivot = if u[1].norm() > u[0].norm() {
        u[1]
    } else {
        u[0]
    };
    let phase = pivot.conj() / c64(pivot.norm(), 0.0);
    u * phase
}

fn right_eigenvector(m: &CMat2, lambda: C64) -> CVec2 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let from_row0 = CVec2::new(b, lambda - a);
    let from_row1 = CVec2::new(lambda - d, c);
    let pick = if from_row1.norm() > from_row0.norm() {
        from_row1
    } else {
        from_row0
    };
    if pick.norm() > 0.0 {
        pick
    } else {
        // m = λ·1 in this direction; any vector works, take the first basis vector.
        ket_up()
    }
}

/// Eigen-decomposition of a 2×2 complex matrix via its characteristic
/// quadratic. Fails with [`Error::NearDegenerate`] when
/// `|λ₁ − λ₂| < degeneracy_tol · max(|λ₁|, 1)`.
pub fn eig2(m: &CMat2, degeneracy_tol: f64) -> Result<EigensystemV> {
    if !is_finite2(m) {
        return Err(Error::InvalidParameter(
            "matrix has non-finite entries".into(),
        ));
    }
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_tr = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let (mut l1, mut l2) = (half_tr + disc, half_tr - disc);
    if l2.norm() > l1.norm() {
        std::mem::swap(&mut l1, &mut l2);
    }
    if (l1 - l2).norm() < degeneracy_tol * l1.norm().max(1.0) {
        return Err(Error::NearDegenerate {
            lambda1: l1,
            lambda2: l2,
        });
    }
    let u1 = fix_phase(right_eigenvector(m, l1));
    let u2 = fix_phase(right_eigenvector(m, l2));
    let det = u1[0] * u2[1] - u2[0] * u1[1];
    if det.norm() < degeneracy_tol {
        return Err(Error::NearDegenerate {
            lambda1: l1,
            lambda2: l2,
        });
    }
    // rows of [u1 u2]^{-1}
    let v1 = CVec2::new(u2[1] / det, -u2[0] / det);
    let v2 = CVec2::new(-u1[1] / det, u1[0] / det);
    Ok(EigensystemV {
        lambda: [l1, l2],
        u: [u1, u2],
        v: [v1, v2],
        gap: l1.norm() - l2.norm(),
    })
}
