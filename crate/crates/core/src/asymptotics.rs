//! Large-N behaviour of the dissipative projected dynamics: dominant-term
//! vectors, weak and intermediate dissipation estimates, the strong
//! dissipation limit, and fidelity scans.
//!
//! Every prediction here is an approximation; direct iteration in
//! [`crate::dissipative::iterate`] is the reference it is checked against.

use crate::closedform::{coherent_term, series_ak_bk, CoefficientTensors};
use crate::dissipative::{build_projected_map, iterate, DissipativeParams};
use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_part2, ket_down, outer2, projector2, CMat2, CVec2, C64};

/// Weak regime: `γτ` below this value ...
pub const WEAK_MAX_GAMMA_TAU: f64 = 0.1;
/// ... and `n·γτ` at most this value.
pub const WEAK_MAX_N_GAMMA_TAU: f64 = 1.0;
/// Proxy for the `γτ → ∞` limit.
pub const STRONG_MIN_GAMMA_TAU: f64 = 5.0;
/// Allowed ratio between the observed and predicted success probability.
pub const YIELD_FACTOR: f64 = 3.0;
/// Largest `n` for the explicit binomial sums (binomials overflow beyond).
pub const DIRECT_SUM_MAX_N: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Weak,
    Intermediate,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    pub m11: CVec2,
    pub m22: CVec2,
    pub m12: CVec2,
    /// Unit-trace predicted state.
    pub rho_pred: CMat2,
    pub fid_u1_pred: f64,
    pub yield_pred: f64,
    /// Small parameter controlling the approximation: `nγτ` (weak) or
    /// `n(γτ)²` (intermediate).
    pub validity: f64,
}

fn powc(z: C64, k: usize) -> C64 {
    z.powu(k as u32)
}

fn mat_pow(m: &CMat2, k: usize) -> CMat2 {
    let mut out = CMat2::identity();
    let mut base = *m;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            out *= base;
        }
        base *= base;
        e >>= 1;
    }
    out
}

fn scaled_identity(z: C64) -> CMat2 {
    CMat2::identity() * z
}

fn inverse(m: &CMat2, what: &'static str) -> Result<CMat2> {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let det = m.determinant();
    if !(det.norm() > 1e-13 * scale * scale) {
        return Err(Error::SingularResummation(what));
    }
    m.try_inverse().ok_or(Error::SingularResummation(what))
}

/// `f(M)` for a 2×2 matrix with distinct eigenvalues (Sylvester's formula).
///
/// Every `𝒞^{ab}` is an outer product, hence singular, so factors such as
/// `𝒞⁻¹[1 − (1+𝒞/Λ)^{n−1}]` are evaluated as functions of `𝒞` with the
/// removable singularity at zero handled inside `f`.
fn matrix_function(m: &CMat2, f: impl Fn(C64) -> Result<C64>) -> Result<CMat2> {
    let scale = m.norm();
    if scale == 0.0 {
        return Ok(scaled_identity(f(C64::new(0.0, 0.0))?));
    }
    let tr = m.trace();
    let disc = (tr * tr - m.determinant() * 4.0).sqrt();
    let (mu1, mu2) = ((tr + disc) * 0.5, (tr - disc) * 0.5);
    if (mu1 - mu2).norm() <= 1e-8 * scale {
        return Err(Error::SingularResummation("confluent eigenvalues of C"));
    }
    let id = CMat2::identity();
    Ok(((m - id * mu2) * f(mu1)? - (m - id * mu1) * f(mu2)?) / (mu1 - mu2))
}

/// `((1+w)^m − 1)/w`, continuous at `w = 0`.
fn pow_ratio(w: C64, m: usize) -> C64 {
    if w.norm() * m as f64 >= 0.5 {
        return (powc(C64::new(1.0, 0.0) + w, m) - 1.0) / w;
    }
    // Σ_{j=1}^{m} C(m,j) w^{j−1}
    let mut term = C64::new(m as f64, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for j in 1..=m {
        acc += term;
        if term.norm() <= 1e-18 * acc.norm() {
            break;
        }
        term *= w * ((m - j) as f64 / (j + 1) as f64);
    }
    acc
}

/// `(e^{mw} − 1)/w`, continuous at `w = 0`.
fn exp_ratio(w: C64, m: f64) -> C64 {
    if w.norm() * m >= 0.5 {
        return ((w * m).exp() - 1.0) / w;
    }
    let mut term = C64::new(m, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    let mut j = 1.0;
    while term.norm() > 1e-18 * acc.norm().max(f64::MIN_POSITIVE) {
        acc += term;
        j += 1.0;
        term *= w * (m / j);
    }
    acc
}

fn nonzero(z: C64, what: &'static str) -> Result<C64> {
    if z.norm() < 1e-12 {
        Err(Error::SingularResummation(what))
    } else {
        Ok(z)
    }
}

/// `(Λ − A₀)⁻¹(Λⁿ − A₀ⁿ)b₀`
fn geometric_term(t: &CoefficientTensors, lam: C64, n: usize) -> Result<CVec2> {
    let (a0, b0) = series_ak_bk(t, 0);
    let lhs = inverse(&(scaled_identity(lam) - a0), "Lambda - A0")?;
    Ok(lhs * (scaled_identity(powc(lam, n)) - mat_pow(&a0, n)) * b0)
}

/// `−Λⁿ𝒞⁻¹(1+𝒞/Λ)[1−(1+𝒞/Λ)^{n−1}]d − Λ^{n−2}𝒞(1−𝒞/Λ)⁻¹[1−(𝒞/Λ)^{n−1}]d`,
/// the resummed `Σ_{k=1}^{n−1}Σ_{ℓ<k} C(k,ℓ) Λ^{n−1−ℓ} 𝒞^ℓ d`.
fn binomial_term(lam: C64, c: &CMat2, d: &CVec2, n: usize, what: &'static str) -> Result<CVec2> {
    let one = C64::new(1.0, 0.0);
    let f = |z: C64| -> Result<C64> {
        let w = z / lam;
        let first = powc(lam, n - 1) * (one + w) * pow_ratio(w, n - 1);
        let second = powc(lam, n - 2) * z * (one - powc(w, n - 1)) / nonzero(one - w, what)?;
        Ok(first - second)
    };
    Ok(matrix_function(c, f)? * d)
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "n = {n}: dominant-term vectors need n >= 2"
        )));
    }
    Ok(())
}

/// Dominant-term vectors `[ℳ₁₁, ℳ₂₂, ℳ₁₂]` in resummed closed form.
pub fn m_resummed(t: &CoefficientTensors, n: usize) -> Result<[CVec2; 3]> {
    check_n(n)?;
    let (l11, l22, l12) = (t.lambda[0], t.lambda[3], t.lambda[1]);
    let (c11, c12) = (t.c[0], t.c[1]);
    let (d11, d12) = (t.d[0], t.d[1]);
    let one = C64::new(1.0, 0.0);

    let m11 = geometric_term(t, l11, n)? + binomial_term(l11, &c11, &d11, n, "1 - C11/L11")?;
    let m12 = geometric_term(t, l12, n)? + binomial_term(l12, &c12, &d12, n, "1 - C12/L12")?;

    let r = l22 / l11;
    let tail = |z: C64| -> Result<C64> {
        let w = z / l11;
        let y = z / l22;
        let grow = powc((one + w) / r, n - 1) - one;
        let a = (one + w) / nonzero(one + w - r, "1 + C11/L11 - L22/L11")? * grow;
        let b = y / nonzero(one - y, "1 - C11/L22")? * (one - powc(y, n - 1));
        Ok(powc(l22, n - 1) * (a - b))
    };
    let m22 = geometric_term(t, l22, n)? + matrix_function(&c11, tail)? * d11;
    Ok([m11, m22, m12])
}

fn binom_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Same vectors as [`m_resummed`] through explicit binomial sums; used when
/// a resummation factor is singular.
pub fn m_direct(t: &CoefficientTensors, n: usize) -> Result<[CVec2; 3]> {
    check_n(n)?;
    if n > DIRECT_SUM_MAX_N {
        return Err(Error::LimitExceeded {
            what: "n",
            value: n,
            limit: DIRECT_SUM_MAX_N,
            hint: "",
        });
    }
    let (l11, l22, l12) = (t.lambda[0], t.lambda[3], t.lambda[1]);
    let (a0, b0) = series_ak_bk(t, 0);
    let geometric = |lam: C64| {
        let mut acc = CVec2::zeros();
        let mut v = b0;
        for l in 0..n {
            acc += v * powc(lam, n - 1 - l);
            v = a0 * v;
        }
        acc
    };
    // Σ_{k=ℓ+1}^{n−1} C(k,ℓ) = C(n,ℓ+1) − 1
    let diag = |lam: C64, c: &CMat2, d: &CVec2| {
        let mut acc = CVec2::zeros();
        let mut v = *d;
        for l in 0..n {
            let w = binom_f64(n, l + 1) - 1.0;
            if w != 0.0 {
                acc += v * (powc(lam, n - 1 - l) * w);
            }
            v = c * v;
        }
        acc
    };
    let m11 = geometric(l11) + diag(l11, &t.c[0], &t.d[0]);
    let m12 = geometric(l12) + diag(l12, &t.c[1], &t.d[1]);
    let mut m22 = geometric(l22);
    let ratio = l11 / l22;
    let mut v = t.d[0];
    for l in 0..n {
        let mut s = C64::new(0.0, 0.0);
        for k in l + 1..n {
            s += powc(ratio, k - l) * binom_f64(k, l);
        }
        m22 += v * (s * powc(l22, n - 1 - l));
        v = t.c[0] * v;
    }
    Ok([m11, m22, m12])
}

/// [`m_resummed`], falling back to [`m_direct`] on a singular factor.
pub fn m_vectors(t: &CoefficientTensors, n: usize) -> Result<[CVec2; 3]> {
    match m_resummed(t, n) {
        Err(Error::SingularResummation(_)) => m_direct(t, n),
        other => other,
    }
}

/// `|u₁⟩⟨u₁|(…)ℳ₁₁ + |u₂⟩⟨u₂|(…)ℳ₂₂ + (|u₁⟩⟨u₂|(…)ℳ₁₂ + h.c.)`
pub fn dominant_feed_term(t: &CoefficientTensors, m: &[CVec2; 3]) -> CMat2 {
    let eig = &t.eig;
    let (rdd, ras) = (t.rho_down(), t.rho_alpha_star());
    let row = |i: usize, j: usize, v: &CVec2| {
        eig.v_sandwich(i, &rdd, j) * v[0] + eig.v_sandwich(i, &ras, j) * v[1]
    };
    let p11 = outer2(&eig.u[0], &eig.u[0]) * row(0, 0, &m[0]);
    let p22 = outer2(&eig.u[1], &eig.u[1]) * row(1, 1, &m[1]);
    let p12 = outer2(&eig.u[0], &eig.u[1]) * row(0, 1, &m[2]);
    p11 + p22 + p12 + p12.adjoint()
}

/// Single-index-set part of the feed sum for pair `q`:
/// `Σ_ℓ C(n, ℓ+1) Λ_q^{n−1−ℓ} (𝒞^q)^ℓ d^q`.
pub fn dominant_partial_sum(t: &CoefficientTensors, q: usize, n: usize) -> CVec2 {
    let mut acc = CVec2::zeros();
    let mut v = t.d[q];
    for l in 0..n {
        acc += v * (powc(t.lambda[q], n - 1 - l) * binom_f64(n, l + 1));
        v = t.c[q] * v;
    }
    acc
}

fn unit(u: &CVec2) -> CVec2 {
    u / c64(u.norm(), 0.0)
}

fn fidelity_to(rho: &CMat2, u: &CVec2) -> f64 {
    let tr = rho.trace().re;
    if !(tr > 0.0) {
        return f64::NAN;
    }
    let u = unit(u);
    ((u.adjoint() * rho * u)[(0, 0)].re / tr).clamp(0.0, 1.0)
}

/// Pure-state estimate `ρ_n ≈ |u₁⟩⟨u₁|` with error `O(γτ, |λ₂/λ₁|^n)`.
pub fn predict_weak(t: &CoefficientTensors, n: usize) -> Result<RegimeReport> {
    let gt = t.gamma_tau;
    let ngt = n as f64 * gt;
    if !(gt < WEAK_MAX_GAMMA_TAU && ngt <= WEAK_MAX_N_GAMMA_TAU) {
        return Err(Error::Regime(format!(
            "weak regime needs gamma*tau < {WEAK_MAX_GAMMA_TAU} and n*gamma*tau <= {WEAK_MAX_N_GAMMA_TAU} \
             (got {gt}, {ngt}); use predict_intermediate or strong_limit_state"
        )));
    }
    check_n(n)?;
    let eig = &t.eig;
    let (l11, l12) = (t.lambda[0], t.lambda[1]);
    let nm1 = (n - 1) as f64;
    let m11 = t.d[0] * (powc(l11, n - 1) * nm1);
    let m22 = t.d[0] * powc(l11, n - 1);
    let m12 = t.d[1] * (powc(l12, n - 1) * nm1);
    let u1 = unit(&eig.u[0]);
    let ratio = (eig.lambda[1].norm() / eig.lambda[0].norm()).powi(n as i32);
    Ok(RegimeReport {
        regime: Regime::Weak,
        m11,
        m22,
        m12,
        rho_pred: outer2(&u1, &u1),
        fid_u1_pred: (1.0 - gt - ratio).clamp(0.0, 1.0),
        yield_pred: (1.0 + ngt) * l11.re.powi(n as i32),
        validity: ngt,
    })
}

/// Exponentiated estimate for `1/γτ < n < 1/(γτ)²`, where the off-dominant
/// coefficients no longer shrink relative to the dominant one.
pub fn predict_intermediate(t: &CoefficientTensors, n: usize) -> Result<RegimeReport> {
    let gt = t.gamma_tau;
    let nf = n as f64;
    if !(gt > 0.0 && nf * gt > 1.0 && nf * gt * gt < 1.0) {
        return Err(Error::Regime(format!(
            "intermediate regime needs 1/(gamma*tau) < n < 1/(gamma*tau)^2 (gamma*tau = {gt}, n = {n}); \
             use predict_weak or strong_limit_state"
        )));
    }
    let (l11, l12) = (t.lambda[0], t.lambda[1]);
    let (c11, c12) = (t.c[0], t.c[1]);
    let nm1 = (n - 1) as f64;
    // Λ^{n−1}(e^{(n−1)𝒞/Λ} − 1)(𝒞/Λ)⁻¹ d: the exponentiated form of (n−1)Λ^{n−1}d
    let grow = |lam: C64| move |z: C64| -> Result<C64> { Ok(exp_ratio(z / lam, nm1)) };
    let m11 = matrix_function(&c11, grow(l11))? * t.d[0] * powc(l11, n - 1);
    let m22 = matrix_function(&c11, |z| Ok((z / l11 * nm1).exp()))? * t.d[0] * powc(l11, n - 1);
    let m12 = matrix_function(&c12, grow(l12))? * t.d[1] * powc(l12, n - 1);
    let m = [m11, m22, m12];
    let raw = hermitian_part2(&(coherent_term(t, n) + dominant_feed_term(t, &m)));
    let tr = raw.trace().re;
    if !(tr > 0.0 && tr.is_finite()) {
        return Err(Error::SingularResummation(
            "intermediate prediction has no positive trace",
        ));
    }
    Ok(RegimeReport {
        regime: Regime::Intermediate,
        m11,
        m22,
        m12,
        rho_pred: raw / c64(tr, 0.0),
        fid_u1_pred: fidelity_to(&raw, &t.eig.u[0]),
        yield_pred: tr,
        validity: nf * gt * gt,
    })
}

/// Unit-trace strong-dissipation prediction built from the scalar
/// `(𝒞^{11})₁₁`, `(𝒞^{12})₁₁`, `(d^{ab})₁` powers. If every term vanishes (the
/// `α = 0` sector), the down state is returned.
pub fn strong_limit_state(t: &CoefficientTensors, n: usize) -> Result<CMat2> {
    if t.gamma_tau < STRONG_MIN_GAMMA_TAU {
        return Err(Error::Regime(format!(
            "strong limit needs gamma*tau >= {STRONG_MIN_GAMMA_TAU}, got {}",
            t.gamma_tau
        )));
    }
    check_n(n)?;
    let eig = &t.eig;
    let rdd = t.rho_down();
    let c11 = t.c[0][(0, 0)];
    let c12 = t.c[1][(0, 0)];
    let k11 = powc(c11, n - 2) * t.d[0][0];
    let k12 = powc(c12, n - 2) * t.d[1][0];
    let cross = outer2(&eig.u[0], &eig.u[1]) * (eig.v_sandwich(0, &rdd, 1) * k12);
    let raw = outer2(&eig.u[0], &eig.u[0]) * (eig.v_sandwich(0, &rdd, 0) * k11)
        + cross
        + cross.adjoint()
        + outer2(&eig.u[1], &eig.u[1]) * (eig.v_sandwich(1, &rdd, 1) * k11)
        + rdd * k11;
    let raw = hermitian_part2(&raw) * c64(n as f64 * eig.lambda[0].norm_sqr(), 0.0);
    let tr = raw.trace().re;
    if tr > 0.0 && tr.is_finite() {
        Ok(raw / c64(tr, 0.0))
    } else {
        Ok(projector2(&ket_down()))
    }
}

/// `(|u₁⟩⟨u₂| + |u₂⟩⟨u₁|)/(⟨u₂|u₁⟩ + ⟨u₁|u₂⟩)`
pub fn cross_term_matrix(u1: &CVec2, u2: &CVec2) -> Result<CMat2> {
    let den = u2.dotc(u1) + u1.dotc(u2);
    if den.norm() < 1e-14 {
        return Err(Error::SingularResummation("orthogonal eigenvectors"));
    }
    Ok((outer2(u1, u2) + outer2(u2, u1)) / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub fid_u1: f64,
    pub purity: f64,
    pub trace: f64,
}

/// Per-step fidelity to `|u₁⟩`, purity and success probability from direct
/// iteration, `n = 0..=n_max`.
pub fn fidelity_curve(
    rho0: &CMat2,
    p: &DissipativeParams,
    n_max: usize,
) -> Result<Vec<CurvePoint>> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    build_projected_map(p).eigensystem()?;
    Ok(iterate(rho0, p, n_max)
        .steps
        .iter()
        .map(|s| CurvePoint {
            n: s.n,
            fid_u1: s.fid_target,
            purity: s.purity,
            trace: s.trace,
        })
        .collect())
}

/// `(n, fid)` at the first maximum of the fidelity.
pub fn curve_peak(curve: &[CurvePoint]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for pt in curve {
        if !pt.fid_u1.is_nan() && best.is_none_or(|(_, f)| pt.fid_u1 > f) {
            best = Some((pt.n, pt.fid_u1));
        }
    }
    best
}
