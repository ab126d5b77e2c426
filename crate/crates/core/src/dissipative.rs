//! Zero-temperature dissipative environment at resonance (`ω = Ω`): exact
//! joint Kraus map, the projected one-step map on S for repeated confirmation
//! of X in `|α⟩`, and iteration.

use crate::error::{Error, Result};
use crate::linalg::{
    c64, eig2, embed_x, measurement_vector, outer4, project_x_onto, projector2, sandwich2,
    sandwich4, CMat2, CMat4, CVec2, CVec4, EigensystemV, C64, DEFAULT_DEGENERACY_TOL,
};
use crate::trajectory::{propagate, Trajectory};
use std::f64::consts::FRAC_1_SQRT_2;

/// Which X state is confirmed at each measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measurement {
    /// `(α|↑⟩ + |↓⟩)/√(1+|α|²)`
    Alpha(C64),
    /// `|↑⟩`, the `|α| → ∞` limit, built directly.
    Up,
}

impl Measurement {
    pub fn vector(&self) -> CVec2 {
        match *self {
            Measurement::Alpha(a) => measurement_vector(a),
            Measurement::Up => crate::linalg::ket_up(),
        }
    }

    pub fn is_down(&self) -> bool {
        matches!(*self, Measurement::Alpha(a) if a == C64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativeParams {
    /// Common splitting Ω of both qubits.
    pub omega: f64,
    pub g: f64,
    pub gamma: f64,
    /// Shift of `|2⟩`.
    pub delta_e2: f64,
    /// Shift of `|+⟩`.
    pub delta_eplus: f64,
    pub tau: f64,
    pub measurement: Measurement,
}

impl DissipativeParams {
    pub fn new(omega: f64, g: f64, gamma: f64, tau: f64, alpha: C64) -> Result<Self> {
        let p = Self {
            omega,
            g,
            gamma,
            delta_e2: 0.0,
            delta_eplus: 0.0,
            tau,
            measurement: Measurement::Alpha(alpha),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_shifts(mut self, delta_e2: f64, delta_eplus: f64) -> Self {
        self.delta_e2 = delta_e2;
        self.delta_eplus = delta_eplus;
        self
    }

    pub fn with_measurement(mut self, m: Measurement) -> Self {
        self.measurement = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega,
            self.g,
            self.gamma,
            self.delta_e2,
            self.delta_eplus,
            self.tau,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite dissipative parameter".into(),
            ));
        }
        if let Measurement::Alpha(a) = self.measurement {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::InvalidParameter(
                    "alpha must be finite; use the up measurement".into(),
                ));
            }
        }
        if !(self.omega > self.g && self.g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need omega > g > 0, got omega = {}, g = {}",
                self.omega, self.g
            )));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} must be >= 0",
                self.gamma
            )));
        }
        if self.tau <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tau = {} must be > 0",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn gamma_tau(&self) -> f64 {
        self.gamma * self.tau
    }

    /// `[Ẽ₂, E₀, Ẽ₊, E₋]` with `E₂ = Ω = −E₀`, `E₊ = g = −E₋`.
    pub fn energies(&self) -> [f64; 4] {
        [
            self.omega + self.delta_e2,
            -self.omega,
            self.g + self.delta_eplus,
            -self.g,
        ]
    }

    /// Normalized `|α*⟩ = (|↑⟩ + α*|↓⟩)/√(1+|α|²)`; `|↓⟩` in the up limit.
    pub fn alpha_star(&self) -> CVec2 {
        match self.measurement {
            Measurement::Alpha(a) => {
                let n = (1.0 + a.norm_sqr()).sqrt();
                CVec2::new(c64(1.0 / n, 0.0), a.conj() / n)
            }
            Measurement::Up => crate::linalg::ket_down(),
        }
    }
}

/// `[w₀, w₁, w₂] = [1−e^{−x}, 1−e^{−x}−x e^{−x}, x e^{−x}]`, evaluated so that
/// `w₀ = w₁ + w₂` holds to rounding for small `x`.
pub fn decay_weights(x: f64) -> [f64; 3] {
    let w0 = -(-x).exp_m1();
    let w2 = x * (-x).exp();
    let w1 = if x < 0.1 {
        // 1 − e^{−x}(1+x) = Σ_{k≥2} (−1)^k (k−1) x^k / k!
        let mut term = x * x / 2.0;
        let mut sum = 0.0f64;
        let mut k = 2.0f64;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += (k - 1.0) * term;
            k += 1.0;
            term *= -x / k;
        }
        sum
    } else {
        w0 - w2
    };
    [w0, w1, w2]
}

/// Joint eigenstates `[|2⟩, |0⟩, |+⟩, |−⟩]` with `|±⟩ = (|↑↓⟩ ± |↓↑⟩)/√2`.
pub fn joint_states() -> [CVec4; 4] {
    let z = c64(0.0, 0.0);
    let s = c64(FRAC_1_SQRT_2, 0.0);
    [
        CVec4::new(c64(1.0, 0.0), z, z, z),
        CVec4::new(z, z, z, c64(1.0, 0.0)),
        CVec4::new(z, s, s, z),
        CVec4::new(z, s, -s, z),
    ]
}

/// Joint map `ρ ↦ e^{At}ρe^{A†t} + w₀B₀ρB₀† + w₁(B₀B₁)ρ(B₀B₁)† + w₂B₁ρB₁†`
/// with `B₀ = |0⟩⟨+|`, `B₁ = |+⟩⟨2|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativeChannel {
    pub e_at: CMat4,
    pub b0: CMat4,
    pub b0b1: CMat4,
    pub b1: CMat4,
    pub weights: [f64; 3],
}

impl DissipativeChannel {
    pub fn apply(&self, rho_xs: &CMat4) -> CMat4 {
        let [w0, w1, w2] = self.weights;
        sandwich4(&self.e_at, rho_xs)
            + sandwich4(&self.b0, rho_xs) * c64(w0, 0.0)
            + sandwich4(&self.b0b1, rho_xs) * c64(w1, 0.0)
            + sandwich4(&self.b1, rho_xs) * c64(w2, 0.0)
    }
}

pub fn dissipative_kraus_joint(p: &DissipativeParams, t: f64) -> Result<DissipativeChannel> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let st = joint_states();
    let e = p.energies();
    let gt = p.gamma * t;
    let amp = [
        C64::from_polar((-0.5 * gt).exp(), -e[0] * t),
        C64::from_polar(1.0, -e[1] * t),
        C64::from_polar((-0.5 * gt).exp(), -e[2] * t),
        C64::from_polar(1.0, -e[3] * t),
    ];
    let mut e_at = CMat4::zeros();
    for i in 0..4 {
        e_at += outer4(&st[i], &st[i]) * amp[i];
    }
    Ok(DissipativeChannel {
        e_at,
        b0: outer4(&st[1], &st[2]),
        b0b1: outer4(&st[1], &st[0]),
        b1: outer4(&st[2], &st[0]),
        weights: decay_weights(gt),
    })
}

/// Scalar weights of the incoherent feed in one step:
/// `F(ρ) = down_alpha·⟨α*|ρ|α*⟩ + down_up·ρ↑↑`, `G(ρ) = alpha_up·ρ↑↑`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedCoefficients {
    pub down_alpha: f64,
    pub down_up: f64,
    pub alpha_up: f64,
    pub alpha_star: CVec2,
}

impl FeedCoefficients {
    pub fn f(&self, rho: &CMat2) -> f64 {
        let a = self.alpha_star;
        let sand = (a.adjoint() * rho * a)[(0, 0)].re;
        self.down_alpha * sand + self.down_up * rho[(0, 0)].re
    }

    pub fn g(&self, rho: &CMat2) -> f64 {
        self.alpha_up * rho[(0, 0)].re
    }

    /// `|α*⟩⟨α*|`
    pub fn rho_alpha_star(&self) -> CMat2 {
        projector2(&self.alpha_star)
    }
}

/// One measurement step on S: `ρ ↦ VρV† + w₀C₀ρC₀† + w₁C₁ρC₁† + w₂C₂ρC₂†`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedMap {
    pub v: CMat2,
    pub c0: CMat2,
    pub c1: CMat2,
    pub c2: CMat2,
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub feed: FeedCoefficients,
}

impl ProjectedMap {
    /// Four-term Kraus form.
    pub fn apply_kraus(&self, rho: &CMat2) -> CMat2 {
        sandwich2(&self.v, rho)
            + sandwich2(&self.c0, rho) * c64(self.w0, 0.0)
            + sandwich2(&self.c1, rho) * c64(self.w1, 0.0)
            + sandwich2(&self.c2, rho) * c64(self.w2, 0.0)
    }

    pub fn eigensystem(&self) -> Result<EigensystemV> {
        eig2(&self.v, DEFAULT_DEGENERACY_TOL)
    }
}

pub fn build_projected_map(p: &DissipativeParams) -> ProjectedMap {
    let [e2, e0, ep, em] = p.energies();
    let t = p.tau;
    let gt = p.gamma_tau();
    let x2 = C64::from_polar((-0.5 * gt).exp(), -e2 * t);
    let xp = C64::from_polar((-0.5 * gt).exp(), -ep * t);
    let xm = C64::from_polar(1.0, -em * t);
    let x0 = C64::from_polar(1.0, -e0 * t);
    let [w0, w1, w2] = decay_weights(gt);
    let half = c64(0.5, 0.0);
    let z = c64(0.0, 0.0);
    let one = c64(1.0, 0.0);
    let alpha_star = p.alpha_star();

    match p.measurement {
        Measurement::Alpha(a) => {
            let a2 = a.norm_sqr();
            let nrm = 1.0 / (1.0 + a2);
            let v = CMat2::new(
                x2 * a2 + (xp + xm) * half,
                a * (xp - xm) * half,
                a.conj() * (xp - xm) * half,
                (xp + xm) * half * a2 + x0,
            ) * c64(nrm, 0.0);
            let c0 = CMat2::new(z, z, one, a) * c64(nrm * FRAC_1_SQRT_2, 0.0);
            let c1 = CMat2::new(z, z, one, z) * (a * nrm);
            let c2 = CMat2::new(one, z, a.conj(), z) * (a * nrm * FRAC_1_SQRT_2);
            ProjectedMap {
                v,
                c0,
                c1,
                c2,
                w0,
                w1,
                w2,
                feed: FeedCoefficients {
                    down_alpha: w0 * nrm / 2.0,
                    down_up: a2 * w1 * nrm * nrm,
                    alpha_up: a2 * w2 * nrm / 2.0,
                    alpha_star,
                },
            }
        }
        Measurement::Up => ProjectedMap {
            v: CMat2::new(x2, z, z, (xp + xm) * half),
            c0: CMat2::zeros(),
            c1: CMat2::zeros(),
            c2: CMat2::new(z, z, c64(FRAC_1_SQRT_2, 0.0), z),
            w0,
            w1,
            w2,
            feed: FeedCoefficients {
                down_alpha: 0.0,
                down_up: 0.0,
                alpha_up: w2 / 2.0,
                alpha_star,
            },
        },
    }
}

/// `(F(ρ), G(ρ))` for one step with parameters `p`.
pub fn coefficients_fg(rho: &CMat2, p: &DissipativeParams) -> (f64, f64) {
    let feed = build_projected_map(p).feed;
    (feed.f(rho), feed.g(rho))
}

/// `VρV† + F(ρ)|↓⟩⟨↓| + G(ρ)|α*⟩⟨α*|`
pub fn step_dissipative(rho: &CMat2, map: &ProjectedMap) -> CMat2 {
    let mut out = sandwich2(&map.v, rho) + map.feed.rho_alpha_star() * c64(map.feed.g(rho), 0.0);
    out[(1, 1)] += map.feed.f(rho);
    out
}

/// Diagnostics after each of `n` steps; the fidelity target is the dominant
/// right eigenvector `|u₁⟩` of `V` (absent if `V` is degenerate).
pub fn iterate(rho0: &CMat2, p: &DissipativeParams, n: usize) -> Trajectory {
    let map = build_projected_map(p);
    let target = map.eigensystem().ok().map(|e| e.u[0]);
    propagate(
        rho0,
        n,
        target,
        |r| step_dissipative(r, &map),
        |r| (map.feed.f(r), map.feed.g(r)),
    )
}

/// Independent 4×4 reference: tensor with `|α⟩⟨α|_X`, evolve for `τ` with the
/// joint map, project X back onto `|α⟩`, `n` times.
pub fn joint_oracle_dissipative(rho0: &CMat2, p: &DissipativeParams, n: usize) -> Result<CMat2> {
    let ch = dissipative_kraus_joint(p, p.tau)?;
    let phi = p.measurement.vector();
    let mut rho = *rho0;
    for _ in 0..n {
        rho = project_x_onto(&ch.apply(&embed_x(&phi, &rho)), &phi);
    }
    Ok(rho)
}

/// True if some unit vector is an eigenvector of all four step operators at
/// once (up to `tol` residual). Candidates are the eigenvectors of `V`.
pub fn has_common_eigenstate(map: &ProjectedMap, tol: f64) -> bool {
    let cands: Vec<CVec2> = match map.eigensystem() {
        Ok(e) => e.u.to_vec(),
        Err(_) => vec![crate::linalg::ket_up(), crate::linalg::ket_down()],
    };
    cands.iter().any(|u| {
        [map.v, map.c0, map.c1, map.c2].iter().all(|m| {
            let mu = m * u;
            // residual of mu against its projection onto u
            let coeff = u.dotc(&mu);
            (mu - u * coeff).norm() < tol
        })
    })
}
