//! Dephasing environment: exact Kraus channel on the joint X⊗S system and the
//! reduced map on S obtained by confirming X in `|↑⟩` every `τ`.

use crate::error::{Error, Result};
use crate::linalg::{
    c64, ket_up, outer4, project_x_onto, sandwich2, sandwich4, CMat2, CMat4, CVec4, C64,
};
use crate::trajectory::{propagate, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingParams {
    /// Splitting ω of the measured qubit X.
    pub omega_x: f64,
    /// Splitting Ω of the target qubit S.
    pub omega_s: f64,
    pub g: f64,
    pub gamma: f64,
    /// Common shift ΔE of the `|2⟩`, `|0⟩` levels.
    pub delta_e: f64,
    pub tau: f64,
}

impl DephasingParams {
    pub fn new(omega_x: f64, omega_s: f64, g: f64, gamma: f64, tau: f64) -> Result<Self> {
        let p = Self {
            omega_x,
            omega_s,
            g,
            gamma,
            delta_e: 0.0,
            tau,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_delta_e(mut self, delta_e: f64) -> Self {
        self.delta_e = delta_e;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega_x,
            self.omega_s,
            self.g,
            self.gamma,
            self.delta_e,
            self.tau,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite dephasing parameter".into(),
            ));
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
        if self.e_plus() <= 0.0 {
            return Err(Error::InvalidParameter(
                "g and omega_x - omega_s both zero: E+ vanishes".into(),
            ));
        }
        Ok(())
    }

    /// `E₂ = (ω+Ω)/2 = −E₀`
    pub fn e2(&self) -> f64 {
        0.5 * (self.omega_x + self.omega_s)
    }

    /// `E₊ = √((ω−Ω)²/4 + g²) = −E₋`
    pub fn e_plus(&self) -> f64 {
        (0.5 * (self.omega_x - self.omega_s)).hypot(self.g)
    }

    /// `δ = (ω−Ω)/2E₊`, in [−1, 1].
    pub fn detuning_ratio(&self) -> f64 {
        0.5 * (self.omega_x - self.omega_s) / self.e_plus()
    }

    /// Joint Hamiltonian `ω/2 σz⊗1 + Ω/2 1⊗σz + g(σ+⊗σ− + h.c.)` in the
    /// `|↑↑⟩,|↑↓⟩,|↓↑⟩,|↓↓⟩` basis (no shifts).
    pub fn hamiltonian(&self) -> CMat4 {
        let mut h = CMat4::zeros();
        h[(0, 0)] = c64(self.e2(), 0.0);
        h[(3, 3)] = c64(-self.e2(), 0.0);
        let d = 0.5 * (self.omega_x - self.omega_s);
        h[(1, 1)] = c64(d, 0.0);
        h[(2, 2)] = c64(-d, 0.0);
        h[(1, 2)] = c64(self.g, 0.0);
        h[(2, 1)] = c64(self.g, 0.0);
        h
    }
}

/// Eigen-energies and eigenstates of the joint Hamiltonian, ordered
/// `[|2⟩, |0⟩, |+⟩, |−⟩]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointEigensystem {
    pub energies: [f64; 4],
    pub states: [CVec4; 4],
}

impl JointEigensystem {
    pub fn projector(&self, i: usize) -> CMat4 {
        outer4(&self.states[i], &self.states[i])
    }
}

/// `|±⟩ = (√(1±δ)|↑↓⟩ ± sgn(g)√(1∓δ)|↓↑⟩)/√2`. The sign factor keeps the
/// states eigenvectors for negative couplings too.
pub fn dephasing_eigensystem(p: &DephasingParams) -> JointEigensystem {
    let e2 = p.e2();
    let ep = p.e_plus();
    let delta = p.detuning_ratio();
    let sgn = if p.g < 0.0 { -1.0 } else { 1.0 };
    let a = ((1.0 + delta).max(0.0) / 2.0).sqrt();
    let b = ((1.0 - delta).max(0.0) / 2.0).sqrt();
    let z = c64(0.0, 0.0);
    let r = |x: f64| c64(x, 0.0);
    JointEigensystem {
        energies: [e2, -e2, ep, -ep],
        states: [
            CVec4::new(r(1.0), z, z, z),
            CVec4::new(z, z, z, r(1.0)),
            CVec4::new(z, r(a), r(sgn * b), z),
            CVec4::new(z, r(b), r(-sgn * a), z),
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingChannel {
    pub k0: CMat4,
    pub kplus: CMat4,
    pub kminus: CMat4,
}

impl DephasingChannel {
    pub fn apply(&self, rho_xs: &CMat4) -> CMat4 {
        sandwich4(&self.k0, rho_xs)
            + sandwich4(&self.kplus, rho_xs)
            + sandwich4(&self.kminus, rho_xs)
    }

    /// `Σ_i K_i†K_i`
    pub fn completeness(&self) -> CMat4 {
        self.k0.adjoint() * self.k0
            + self.kplus.adjoint() * self.kplus
            + self.kminus.adjoint() * self.kminus
    }
}

fn phase(e: f64, t: f64) -> C64 {
    C64::from_polar(1.0, -e * t)
}

/// Kraus operators of the dephasing master equation after time `t`.
pub fn kraus_dephasing(p: &DephasingParams, t: f64) -> Result<DephasingChannel> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let es = dephasing_eigensystem(p);
    let gt = p.gamma * t;
    let ph2 = phase(es.energies[0] + p.delta_e, t);
    let ph0 = phase(es.energies[1] + p.delta_e, t);
    let (p2, p0) = (es.projector(0), es.projector(1));
    let damp = (-0.5 * gt).exp();
    // e^{-γt/2}√(cosh γt − 1) and e^{-γt/2}√(sinh γt), rewritten to stay finite
    let a_plus = -(-gt).exp_m1() / std::f64::consts::SQRT_2;
    let a_minus = (-(-2.0 * gt).exp_m1() / 2.0).sqrt();

    let k0 = (p2 * ph2 + p0 * ph0) * c64(damp, 0.0)
        + es.projector(2) * phase(es.energies[2], t)
        + es.projector(3) * phase(es.energies[3], t);
    let kplus = (p2 * ph2 + p0 * ph0) * c64(a_plus, 0.0);
    let kminus = (p2 * ph2 - p0 * ph0) * c64(a_minus, 0.0);
    Ok(DephasingChannel { k0, kplus, kminus })
}

/// `ξ = cos E₊τ + iδ sin E₊τ`.
///
/// The `|↓⟩⟨↓|` entry of the projected no-jump operator is `ξ*`; only `|ξ|²`
/// enters populations.
pub fn xi(p: &DephasingParams) -> C64 {
    let (s, c) = (p.e_plus() * p.tau).sin_cos();
    c64(c, p.detuning_ratio() * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedDephasing {
    pub v0: CMat2,
    pub vplus: CMat2,
    pub vminus: CMat2,
}

/// `⟨↑|K_i(τ)|↑⟩_X` for the three Kraus operators.
pub fn projected_ops_up(p: &DephasingParams) -> ProjectedDephasing {
    let gt = p.gamma * p.tau;
    let ph2 = phase(p.e2() + p.delta_e, p.tau);
    let mut v0 = CMat2::zeros();
    v0[(0, 0)] = ph2 * (-0.5 * gt).exp();
    v0[(1, 1)] = xi(p).conj();
    let up = |w: f64| {
        let mut m = CMat2::zeros();
        m[(0, 0)] = ph2 * w;
        m
    };
    ProjectedDephasing {
        v0,
        vplus: up(-(-gt).exp_m1() / std::f64::consts::SQRT_2),
        vminus: up((-(-2.0 * gt).exp_m1() / 2.0).sqrt()),
    }
}

pub fn step_dephasing(rho: &CMat2, ops: &ProjectedDephasing) -> CMat2 {
    sandwich2(&ops.v0, rho) + sandwich2(&ops.vplus, rho) + sandwich2(&ops.vminus, rho)
}

/// Unnormalized S-state after `n` confirmations, in closed form.
pub fn rho_n_dephasing_closed(rho0: &CMat2, p: &DephasingParams, n: usize) -> CMat2 {
    let x = xi(p);
    let ud = C64::from_polar(
        (-0.5 * p.gamma * p.tau).exp(),
        -(p.e2() + p.delta_e) * p.tau,
    ) * x;
    let pw = |z: C64| -> C64 {
        // powu takes u32; n beyond that is never reached in practice but stay exact
        match u32::try_from(n) {
            Ok(k) => z.powu(k),
            Err(_) => z.powf(n as f64),
        }
    };
    let mut out = CMat2::zeros();
    out[(0, 0)] = rho0[(0, 0)];
    out[(1, 1)] = rho0[(1, 1)] * pw(c64(x.norm_sqr(), 0.0));
    out[(0, 1)] = rho0[(0, 1)] * pw(ud);
    out[(1, 0)] = rho0[(1, 0)] * pw(ud.conj());
    out
}

/// Shortest interval with `cos E₊τ = 0` and the minimum `|ξ|²` reached there.
pub fn optimal_tau(p: &DephasingParams) -> Result<(f64, f64)> {
    if p.g == 0.0 {
        return Err(Error::NoPurification);
    }
    let d2 = (p.omega_x - p.omega_s).powi(2);
    let tau = std::f64::consts::FRAC_PI_2 / p.e_plus();
    Ok((tau, d2 / (d2 + 4.0 * p.g * p.g)))
}

/// Independent 4×4 reference: re-tensor with `|↑⟩⟨↑|_X`, apply the joint
/// Kraus channel for `τ`, project X back onto `|↑⟩`, `n` times.
pub fn joint_oracle_dephasing(rho0: &CMat2, p: &DephasingParams, n: usize) -> Result<CMat2> {
    let ch = kraus_dephasing(p, p.tau)?;
    let up = ket_up();
    let mut rho = *rho0;
    for _ in 0..n {
        let joint = crate::linalg::embed_x(&up, &rho);
        rho = project_x_onto(&ch.apply(&joint), &up);
    }
    Ok(rho)
}

/// Per-step diagnostics of the projected dephasing dynamics; the target is `|↑⟩`.
pub fn iterate_dephasing(rho0: &CMat2, p: &DephasingParams, n: usize) -> Trajectory {
    let ops = projected_ops_up(p);
    propagate(
        rho0,
        n,
        Some(ket_up()),
        |r| step_dephasing(r, &ops),
        |_| (0.0, 0.0),
    )
}
