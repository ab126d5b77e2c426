//! Step-by-step records of a repeatedly projected qubit.
//!
//! The propagated state is kept at unit trace and the cumulative success
//! probability is carried separately as a log-trace, so long runs with small
//! success probabilities do not underflow the diagnostics.

use crate::linalg::{c64, fidelity_pure, ket_down, purity, CMat2, CVec2};

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    /// Unnormalized state; its trace is the probability that every
    /// measurement so far confirmed the target outcome. May underflow to zero
    /// for very long runs, see `log_trace`.
    pub rho_unnormalized: CMat2,
    /// Unit-trace state (zero matrix once the success probability is exactly 0).
    pub rho_normalized: CMat2,
    pub trace: f64,
    pub log_trace: f64,
    /// NaN when the state has been annihilated.
    pub purity: f64,
    /// Fidelity with the target vector (`|u₁⟩` for the dissipative model,
    /// `|↑⟩` for the dephasing model); NaN if undefined.
    pub fid_target: f64,
    pub fid_down: f64,
    /// Incoherent feed weights `F(ρ_n)`, `G(ρ_n)` of the unnormalized state.
    /// Zero for the dephasing model, which has no feed.
    pub f: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub target: Option<CVec2>,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn last(&self) -> &StepRecord {
        self.steps
            .last()
            .expect("trajectory always holds the initial record")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Index of the step with the highest target fidelity (first one on ties).
    pub fn peak_fidelity(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for s in &self.steps {
            if s.fid_target.is_nan() {
                continue;
            }
            if best.is_none_or(|(_, f)| s.fid_target > f) {
                best = Some((s.n, s.fid_target));
            }
        }
        best
    }
}

fn record(
    n: usize,
    rho_norm: &CMat2,
    log_trace: f64,
    target: Option<&CVec2>,
    feed: &impl Fn(&CMat2) -> (f64, f64),
) -> StepRecord {
    let trace = log_trace.exp();
    let alive = log_trace > f64::NEG_INFINITY;
    let (purity, fid_target, fid_down) = if alive {
        (
            purity(rho_norm).unwrap_or(f64::NAN),
            target.map_or(f64::NAN, |t| fidelity_pure(rho_norm, t).unwrap_or(f64::NAN)),
            fidelity_pure(rho_norm, &ket_down()).unwrap_or(f64::NAN),
        )
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let (f, g) = feed(rho_norm);
    StepRecord {
        n,
        rho_unnormalized: rho_norm * c64(trace, 0.0),
        rho_normalized: *rho_norm,
        trace,
        log_trace,
        purity,
        fid_target,
        fid_down,
        f: f * trace,
        g: g * trace,
    }
}

/// Applies `step` `n` times starting from `rho0`, renormalizing after each
/// application and accumulating the log of the trace.
pub(crate) fn propagate(
    rho0: &CMat2,
    n: usize,
    target: Option<CVec2>,
    step: impl Fn(&CMat2) -> CMat2,
    feed: impl Fn(&CMat2) -> (f64, f64),
) -> Trajectory {
    let mut steps = Vec::with_capacity(n + 1);
    let tr0 = rho0.trace().re;
    let (mut rho, mut log_trace) = if tr0 > 0.0 {
        (rho0 / c64(tr0, 0.0), tr0.ln())
    } else {
        (CMat2::zeros(), f64::NEG_INFINITY)
    };
    steps.push(record(0, &rho, log_trace, target.as_ref(), &feed));
    for k in 1..=n {
        if log_trace > f64::NEG_INFINITY {
            let next = step(&rho);
            let tr = next.trace().re;
            if tr > 0.0 && tr.is_finite() {
                rho = next / c64(tr, 0.0);
                log_trace += tr.ln();
            } else {
                rho = CMat2::zeros();
                log_trace = f64::NEG_INFINITY;
            }
        }
        steps.push(record(k, &rho, log_trace, target.as_ref(), &feed));
    }
    Trajectory { target, steps }
}
