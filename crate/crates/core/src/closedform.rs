//! Exact N-step solution of the dissipative projected map in terms of the
//! eigen-decomposition of `V`.
//!
//! Writing `f_k = (F(ρ_k), G(ρ_k))`, the feed weights obey
//! `f_N = Σ_{k<N} A_{N−1−k} f_k + b_N` with `A_m = Σ_ab Λ_ab^m 𝒞^{ab}` and
//! `b_m = Σ_ab Λ_ab^m d^{ab}`. Unrolling the recursion turns every chain of
//! `ℓ` coefficient matrices into a complete homogeneous polynomial of the
//! `Λ`'s involved, which is what [`nested_sum_closed`] evaluates.

use crate::dissipative::{build_projected_map, DissipativeParams, FeedCoefficients, ProjectedMap};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, ket_down, ket_up, outer2, projector2, sandwich2, CMat2, CVec2, EigensystemV, C64,
};

/// Largest step count for the exact chain expansion.
pub const CLOSED_FORM_MAX_N: usize = 12;
pub const BRUTE_MAX_L: usize = 6;
pub const BRUTE_MAX_K: usize = 25;
/// Relative separation below which points are treated as confluent and the
/// grouped polynomial evaluation is used instead of the partial-fraction form.
pub const CONFLUENT_REL_TOL: f64 = 1e-3;

/// Index pairs `(a, b)` flattened as `2a + b`.
pub const PAIRS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientTensors {
    /// `Λ_ab = λ_a λ_b*`, indexed by flattened pair.
    pub lambda: [C64; 4],
    /// `𝒞^{ab}`; column 1 multiplies `F`, column 2 multiplies `G`.
    pub c: [CMat2; 4],
    pub d: [CVec2; 4],
    /// `(F(ρ₀), G(ρ₀))` computed directly from `ρ₀`.
    pub seed: [f64; 2],
    pub gamma_tau: f64,
    pub eig: EigensystemV,
    pub feed: FeedCoefficients,
    pub rho0: CMat2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FgSeries {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

/// `⟨x|u_a⟩⟨v_a|Y|v_b⟩⟨u_b|x⟩`
fn t_elem(eig: &EigensystemV, x: &CVec2, a: usize, b: usize, y: &CMat2) -> C64 {
    let xu_a = x.dotc(&eig.u[a]);
    let xu_b = x.dotc(&eig.u[b]);
    xu_a * eig.v_sandwich(a, y, b) * xu_b.conj()
}

impl CoefficientTensors {
    pub fn rho_down(&self) -> CMat2 {
        projector2(&ket_down())
    }

    pub fn rho_alpha_star(&self) -> CMat2 {
        self.feed.rho_alpha_star()
    }

    /// Largest deviation between `Σ_ab d^{ab}` and the directly computed seed.
    pub fn b0_consistency(&self) -> f64 {
        let b0: CVec2 = self.d.iter().sum();
        (b0[0] - c64(self.seed[0], 0.0))
            .norm()
            .max((b0[1] - c64(self.seed[1], 0.0)).norm())
    }
}

pub fn tensors(eig: &EigensystemV, p: &DissipativeParams, rho0: &CMat2) -> CoefficientTensors {
    let feed = build_projected_map(p).feed;
    tensors_with_feed(eig, &feed, p.gamma_tau(), rho0)
}

fn tensors_with_feed(
    eig: &EigensystemV,
    feed: &FeedCoefficients,
    gamma_tau: f64,
    rho0: &CMat2,
) -> CoefficientTensors {
    let up = ket_up();
    let astar = feed.alpha_star;
    let rdd = projector2(&ket_down());
    let ras = projector2(&astar);
    let (wc0, wc1, wg) = (
        c64(feed.down_alpha, 0.0),
        c64(feed.down_up, 0.0),
        c64(feed.alpha_up, 0.0),
    );
    let mut lambda = [C64::new(0.0, 0.0); 4];
    let mut c = [CMat2::zeros(); 4];
    let mut d = [CVec2::zeros(); 4];
    for (q, &(a, b)) in PAIRS.iter().enumerate() {
        lambda[q] = eig.lambda_prod(a, b);
        let fpart =
            |y: &CMat2| wc0 * t_elem(eig, &astar, a, b, y) + wc1 * t_elem(eig, &up, a, b, y);
        let gpart = |y: &CMat2| wg * t_elem(eig, &up, a, b, y);
        c[q] = CMat2::new(fpart(&rdd), fpart(&ras), gpart(&rdd), gpart(&ras));
        d[q] = CVec2::new(fpart(rho0), gpart(rho0));
    }
    CoefficientTensors {
        lambda,
        c,
        d,
        seed: [feed.f(rho0), feed.g(rho0)],
        gamma_tau,
        eig: *eig,
        feed: *feed,
        rho0: *rho0,
    }
}

fn powk(z: C64, k: usize) -> C64 {
    z.powu(k as u32)
}

/// `(A_k, b_k) = (Σ_ab Λ_ab^k 𝒞^{ab}, Σ_ab Λ_ab^k d^{ab})`
pub fn series_ak_bk(t: &CoefficientTensors, k: usize) -> (CMat2, CVec2) {
    let mut a = CMat2::zeros();
    let mut b = CVec2::zeros();
    for q in 0..4 {
        let w = powk(t.lambda[q], k);
        a += t.c[q] * w;
        b += t.d[q] * w;
    }
    (a, b)
}

fn feed_vec(feed: &FeedCoefficients, y: &CMat2) -> CVec2 {
    CVec2::new(c64(feed.f(y), 0.0), c64(feed.g(y), 0.0))
}

/// Recursion coefficients `A_m`, `b_m` (`m < n` and `m ≤ n` respectively)
/// assembled from explicit powers of `V`, without any eigen-decomposition.
pub fn direct_recursion_terms(
    map: &ProjectedMap,
    rho0: &CMat2,
    n: usize,
) -> (Vec<CMat2>, Vec<CVec2>) {
    let rdd = projector2(&ket_down());
    let ras = map.feed.rho_alpha_star();
    let (mut ydd, mut yas, mut y0) = (rdd, ras, *rho0);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n + 1);
    for m in 0..=n {
        b.push(feed_vec(&map.feed, &y0));
        if m < n {
            let c1 = feed_vec(&map.feed, &ydd);
            let c2 = feed_vec(&map.feed, &yas);
            a.push(CMat2::new(c1[0], c2[0], c1[1], c2[1]));
        }
        ydd = sandwich2(&map.v, &ydd);
        yas = sandwich2(&map.v, &yas);
        y0 = sandwich2(&map.v, &y0);
    }
    (a, b)
}

fn run_recursion(seed: [f64; 2], a: &[CMat2], b: &[CVec2], n: usize) -> Vec<CVec2> {
    let mut f = Vec::with_capacity(n + 1);
    f.push(CVec2::new(c64(seed[0], 0.0), c64(seed[1], 0.0)));
    for big_n in 1..=n {
        let mut acc = b[big_n];
        for (k, fk) in f.iter().enumerate() {
            acc += a[big_n - 1 - k] * fk;
        }
        f.push(acc);
    }
    f
}

fn to_series(f: &[CVec2]) -> FgSeries {
    FgSeries {
        f: f.iter().map(|v| v[0].re).collect(),
        g: f.iter().map(|v| v[1].re).collect(),
    }
}

/// `F(ρ_N), G(ρ_N)` for `N = 0..=n` through the O(n²) recursion.
pub fn fg_by_recursion(t: &CoefficientTensors, n: usize) -> FgSeries {
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let (am, bm) = series_ak_bk(t, m);
        if m < n {
            a.push(am);
        }
        b.push(bm);
    }
    to_series(&run_recursion(t.seed, &a, &b, n))
}

/// Literal nested sum `Σ_{k₁}Σ_{k₂}⋯ x₁^{k₁}⋯x_ℓ^{k_ℓ} x_{ℓ+1}^{k−ℓ−Σk_i}`
/// over non-negative exponents. Exponential cost.
pub fn nested_sum_brute(xs: &[C64], k: usize) -> Result<C64> {
    if xs.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one point is required".into(),
        ));
    }
    let l = xs.len() - 1;
    if l > BRUTE_MAX_L {
        return Err(Error::LimitExceeded {
            what: "l",
            value: l,
            limit: BRUTE_MAX_L,
            hint: "",
        });
    }
    if k > BRUTE_MAX_K {
        return Err(Error::LimitExceeded {
            what: "k",
            value: k,
            limit: BRUTE_MAX_K,
            hint: "",
        });
    }
    if k < l {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be >= l = {l}"
        )));
    }
    fn rec(xs: &[C64], rest: usize) -> C64 {
        if xs.len() == 1 {
            return xs[0].powu(rest as u32);
        }
        let mut acc = C64::new(0.0, 0.0);
        let mut p = C64::new(1.0, 0.0);
        for used in 0..=rest {
            acc += p * rec(&xs[1..], rest - used);
            p *= xs[0];
        }
        acc
    }
    Ok(rec(xs, k - l))
}

/// Partial-fraction evaluation `Σ_m x_m^k / Π_{n≠m}(x_m − x_n)`.
pub fn nested_sum_closed(xs: &[C64], k: usize, tol: f64) -> Result<C64> {
    if xs.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one point is required".into(),
        ));
    }
    let l = xs.len() - 1;
    if k < l {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be >= l = {l}"
        )));
    }
    let scale = xs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    for m in 0..xs.len() {
        for n in m + 1..xs.len() {
            if (xs[m] - xs[n]).norm() <= tol * scale {
                return Err(Error::ConfluentPoints(m, n));
            }
        }
    }
    let mut acc = C64::new(0.0, 0.0);
    for (m, &xm) in xs.iter().enumerate() {
        let mut den = C64::new(1.0, 0.0);
        for (n, &xn) in xs.iter().enumerate() {
            if n != m {
                den *= xm - xn;
            }
        }
        acc += xm.powu(k as u32) / den;
    }
    Ok(acc)
}

/// Complete homogeneous polynomial `h_m` of a multiset given as
/// `(point, multiplicity)` pairs. Exact for coincident points.
pub fn complete_homogeneous(points: &[(C64, usize)], m: usize) -> C64 {
    let mut h = vec![C64::new(0.0, 0.0); m + 1];
    h[0] = C64::new(1.0, 0.0);
    for &(x, mult) in points {
        for _ in 0..mult {
            for i in 1..=m {
                let prev = h[i - 1];
                h[i] += x * prev;
            }
        }
    }
    h[m]
}

/// `h_m` of the multiset holding `lambda[q]` `counts[q]` times; partial
/// fractions when all points are distinct and well separated.
fn h_multiset(lambda: &[C64; 4], counts: &[usize; 4], m: usize) -> C64 {
    let pts: Vec<(C64, usize)> = (0..4)
        .filter(|&q| counts[q] > 0)
        .map(|q| (lambda[q], counts[q]))
        .collect();
    if pts.iter().all(|&(_, c)| c == 1) {
        let xs: Vec<C64> = pts.iter().map(|&(x, _)| x).collect();
        let l = xs.len() - 1;
        if let Ok(v) = nested_sum_closed(&xs, m + l, CONFLUENT_REL_TOL) {
            return v;
        }
    }
    complete_homogeneous(&pts, m)
}

/// All count vectors over four indices with the given total, in
/// lexicographic order.
fn count_vectors(total: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..=total {
        for b in 0..=total - a {
            for c in 0..=total - a - b {
                out.push([a, b, c, total - a - b - c]);
            }
        }
    }
    out
}

/// Sum of all ordered products `𝒞^{q₁}⋯𝒞^{q_ℓ} d^{p}` whose index multiset has
/// counts `c`, for every `c` with `|c| ≤ max_total`.
struct ChainTable {
    max_total: usize,
    w: Vec<CVec2>,
}

impl ChainTable {
    fn key(&self, c: &[usize; 4]) -> usize {
        let b = self.max_total + 1;
        ((c[0] * b + c[1]) * b + c[2]) * b + c[3]
    }

    fn get(&self, c: &[usize; 4]) -> CVec2 {
        self.w[self.key(c)]
    }

    fn build(t: &CoefficientTensors, max_total: usize) -> Self {
        let b = max_total + 1;
        let mut table = ChainTable {
            max_total,
            w: vec![CVec2::zeros(); b * b * b * b],
        };
        for total in 1..=max_total {
            for c in count_vectors(total) {
                let val = if total == 1 {
                    let p = c.iter().position(|&x| x == 1).expect("unit vector");
                    t.d[p]
                } else {
                    let mut acc = CVec2::zeros();
                    for q in 0..4 {
                        if c[q] > 0 {
                            let mut rest = c;
                            rest[q] -= 1;
                            acc += t.c[q] * table.get(&rest);
                        }
                    }
                    acc
                };
                let key = table.key(&c);
                table.w[key] = val;
            }
        }
        table
    }
}

fn closed_limit(k: usize) -> Result<()> {
    if k > CLOSED_FORM_MAX_N {
        return Err(Error::LimitExceeded {
            what: "n",
            value: k,
            limit: CLOSED_FORM_MAX_N,
            hint: "; use the recursion path",
        });
    }
    Ok(())
}

/// `(F(ρ_k), G(ρ_k))` from the fully unrolled recursion: every chain of `ℓ`
/// coefficient matrices contributes `h_{k−ℓ}` of its `Λ`'s.
pub fn fg_closed(t: &CoefficientTensors, k: usize) -> Result<(f64, f64)> {
    closed_limit(k)?;
    let table = ChainTable::build(t, k + 1);
    let mut acc = CVec2::zeros();
    for l in 0..=k {
        for c in count_vectors(l + 1) {
            acc += table.get(&c) * h_multiset(&t.lambda, &c, k - l);
        }
    }
    Ok((acc[0].re, acc[1].re))
}

/// Unnormalized `ρ_n` from the eigen-decomposition of `V`. Falls back to the
/// explicit-power recursion when `V` is not safely diagonalizable.
pub fn rho_n_closed(rho0: &CMat2, p: &DissipativeParams, n: usize) -> Result<CMat2> {
    closed_limit(n)?;
    let map = build_projected_map(p);
    match map.eigensystem() {
        Ok(eig) => rho_n_from_tensors(&tensors_with_feed(&eig, &map.feed, p.gamma_tau(), rho0), n),
        Err(Error::NearDegenerate { .. }) => Ok(rho_n_direct(&map, rho0, n)),
        Err(e) => Err(e),
    }
}

/// `S_ij = Σ_{k<n} Λ_ij^{n−1−k} (F(ρ_k), G(ρ_k))` for every pair `ij`, from
/// the unrolled chains (the geometric factor adds `Λ_ij` as one more point).
pub fn feed_sums(t: &CoefficientTensors, n: usize) -> Result<[CVec2; 4]> {
    closed_limit(n)?;
    let mut out = [CVec2::zeros(); 4];
    if n == 0 {
        return Ok(out);
    }
    let table = ChainTable::build(t, n);
    for (q, s) in out.iter_mut().enumerate() {
        for l in 0..n {
            for mut c in count_vectors(l + 1) {
                let w = table.get(&c);
                c[q] += 1;
                *s += w * h_multiset(&t.lambda, &c, n - 1 - l);
            }
        }
    }
    Ok(out)
}

/// `Σ_ij |u_i⟩⟨u_j| (⟨v_i|ρ↓↓|v_j⟩, ⟨v_i|ρ_{α*}|v_j⟩)·s[ij]`
pub fn assemble_feed_term(t: &CoefficientTensors, s: &[CVec2; 4]) -> CMat2 {
    let eig = &t.eig;
    let (rdd, ras) = (t.rho_down(), t.rho_alpha_star());
    let mut out = CMat2::zeros();
    for (q, &(i, j)) in PAIRS.iter().enumerate() {
        let coeff = eig.v_sandwich(i, &rdd, j) * s[q][0] + eig.v_sandwich(i, &ras, j) * s[q][1];
        out += outer2(&eig.u[i], &eig.u[j]) * coeff;
    }
    out
}

/// `Σ_ij Λ_ij^n |u_i⟩⟨v_i|ρ₀|v_j⟩⟨u_j|`, the coherent part `V^nρ₀V†^n`.
pub fn coherent_term(t: &CoefficientTensors, n: usize) -> CMat2 {
    let eig = &t.eig;
    let mut out = CMat2::zeros();
    for (q, &(i, j)) in PAIRS.iter().enumerate() {
        out +=
            outer2(&eig.u[i], &eig.u[j]) * (powk(t.lambda[q], n) * eig.v_sandwich(i, &t.rho0, j));
    }
    out
}

fn rho_n_from_tensors(t: &CoefficientTensors, n: usize) -> Result<CMat2> {
    let s = feed_sums(t, n)?;
    Ok(coherent_term(t, n) + assemble_feed_term(t, &s))
}

/// `V^nρ₀V†^n + Σ_k V^{n−1−k}(F_kρ↓↓ + G_kρ_{α*})V†^{n−1−k}` with `F_k`, `G_k`
/// from the recursion on explicit powers of `V`.
fn rho_n_direct(map: &ProjectedMap, rho0: &CMat2, n: usize) -> CMat2 {
    let (a, b) = direct_recursion_terms(map, rho0, n);
    let seed = [map.feed.f(rho0), map.feed.g(rho0)];
    let f = run_recursion(seed, &a, &b, n);
    let rdd = projector2(&ket_down());
    let ras = map.feed.rho_alpha_star();
    // Horner-like accumulation: R ← V R V† + (F_k ρ↓↓ + G_k ρ_{α*})
    let mut acc = *rho0;
    for fk in f.iter().take(n) {
        acc = sandwich2(&map.v, &acc) + rdd * c64(fk[0].re, 0.0) + ras * c64(fk[1].re, 0.0);
    }
    acc
}

/// Number of non-negative compositions counted by the rearranged sums:
/// `binomial(n, l+1)`.
pub fn composition_count(n: usize, l: usize) -> Result<u128> {
    if n == 0 || l > n - 1 {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= l <= n-1, got n = {n}, l = {l}"
        )));
    }
    let r = (l + 1).min(n - l - 1) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    Ok(acc)
}
