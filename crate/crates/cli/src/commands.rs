//! `run`, `sweep`, `check` and `identity-test`.

use crate::config::{format_complex, parse_complex, parse_real, ConfigMap, ModelParams, RunConfig};
use crate::CliError;
use qpurify_core::closedform::{
    fg_by_recursion, fg_closed, nested_sum_brute, nested_sum_closed, rho_n_closed, tensors,
    BRUTE_MAX_K, BRUTE_MAX_L, CLOSED_FORM_MAX_N,
};
use qpurify_core::dephasing::{
    iterate_dephasing, joint_oracle_dephasing, projected_ops_up, rho_n_dephasing_closed,
    step_dephasing,
};
use qpurify_core::dissipative::{
    build_projected_map, dissipative_kraus_joint, iterate, joint_oracle_dissipative,
    step_dissipative,
};
use qpurify_core::linalg::{
    c64, embed_x, ket_up, max_abs_diff2, outer4, project_x_onto, projector2,
};
use qpurify_core::{CMat4, CVec4, Trajectory, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;

pub const MAX_GRID: usize = 1_000_000;
pub const MAX_AXES: usize = 3;

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory(cfg: &RunConfig) -> Trajectory {
    match &cfg.params {
        ModelParams::Dephasing(p) => iterate_dephasing(&cfg.initial_state, p, cfg.n_steps),
        ModelParams::Dissipative(p) => iterate(&cfg.initial_state, p, cfg.n_steps),
    }
}

/// One CSV row per step; the state columns refer to the unit-trace state.
pub fn run(cfg: &RunConfig, out: &mut impl Write) -> Result<(), CliError> {
    writeln!(out, "{}", cfg.outputs.join(","))?;
    for s in &trajectory(cfg).steps {
        let rho = s.rho_normalized;
        let row: Vec<String> = cfg
            .outputs
            .iter()
            .map(|c| match *c {
                "n" => s.n.to_string(),
                "trace" => real(s.trace),
                "purity" => real(s.purity),
                "fid_target" => real(s.fid_target),
                "rho_uu_re" => real(rho[(0, 0)].re),
                "rho_ud_re" => real(rho[(0, 1)].re),
                "rho_ud_im" => real(rho[(0, 1)].im),
                "rho_dd_re" => real(rho[(1, 1)].re),
                other => unreachable!("column {other} validated in config"),
            })
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisName {
    GammaTau,
    AlphaRe,
    AlphaIm,
    Tau,
    N,
}

impl AxisName {
    fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "gamma_tau" => Self::GammaTau,
            "alpha_re" => Self::AlphaRe,
            "alpha_im" => Self::AlphaIm,
            "tau" => Self::Tau,
            "n" => Self::N,
            _ => {
                return Err(CliError::Usage(format!(
                    "axis {s:?}: expected gamma_tau, alpha_re, alpha_im, tau or n"
                )))
            }
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::GammaTau => "gamma_tau",
            Self::AlphaRe => "alpha_re",
            Self::AlphaIm => "alpha_im",
            Self::Tau => "tau",
            Self::N => "n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
}

impl Axis {
    /// `name:min:max:count[:lin|log]`
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(CliError::Usage(format!(
                "axis {spec:?}: expected name:min:max:count[:lin|log]"
            )));
        }
        let name = AxisName::parse(parts[0])?;
        let min = parse_real("axis min", parts[1])?;
        let max = parse_real("axis max", parts[2])?;
        let count: usize = parts[3]
            .parse()
            .map_err(|_| CliError::Usage(format!("axis {spec:?}: bad count {:?}", parts[3])))?;
        let log = match parts.get(4).copied().unwrap_or("lin") {
            "lin" | "linear" => false,
            "log" => true,
            s => {
                return Err(CliError::Usage(format!(
                    "axis {spec:?}: spacing must be lin or log, got {s:?}"
                )))
            }
        };
        if count < 2 {
            return Err(CliError::Usage(format!(
                "axis {spec:?}: count must be >= 2"
            )));
        }
        if log && !(min > 0.0 && max > 0.0) {
            return Err(CliError::Usage(format!(
                "axis {spec:?}: log spacing needs positive bounds"
            )));
        }
        if name == AxisName::N && min < 0.0 {
            return Err(CliError::Usage(format!("axis {spec:?}: n must be >= 0")));
        }
        Ok(Self {
            name,
            min,
            max,
            count,
            log,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let s = i as f64 / last;
                let v = if i == 0 {
                    self.min
                } else if i + 1 == self.count {
                    self.max
                } else if self.log {
                    (self.min.ln() + s * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + s * (self.max - self.min)
                };
                if self.name == AxisName::N {
                    v.round()
                } else {
                    v
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    MaxFidU1,
    ArgmaxN,
    FinalPurity,
    Yield,
    FidU1,
}

impl Metric {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "max_fid_u1" => Self::MaxFidU1,
            "argmax_n" => Self::ArgmaxN,
            "final_purity" => Self::FinalPurity,
            "yield" => Self::Yield,
            "fid_u1" => Self::FidU1,
            _ => {
                return Err(CliError::Usage(format!(
                    "metric {s:?}: expected max_fid_u1, argmax_n, final_purity, yield or fid_u1"
                )))
            }
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MaxFidU1 => "max_fid_u1",
            Self::ArgmaxN => "argmax_n",
            Self::FinalPurity => "final_purity",
            Self::Yield => "yield",
            Self::FidU1 => "fid_u1",
        }
    }

    fn eval(self, tr: &Trajectory) -> String {
        let peak = tr.peak_fidelity();
        match self {
            Self::MaxFidU1 => real(peak.map_or(f64::NAN, |p| p.1)),
            Self::ArgmaxN => peak.map_or("NaN".into(), |p| p.0.to_string()),
            Self::FinalPurity => real(tr.last().purity),
            Self::Yield => real(tr.last().trace),
            Self::FidU1 => real(tr.last().fid_target),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axes: Vec<Axis>,
    pub metrics: Vec<Metric>,
}

impl SweepConfig {
    /// Axes from `axis1..axis3` in the config, replaced by `cli_axes` if any
    /// are given; likewise for metrics.
    pub fn resolve(
        map: &ConfigMap,
        cli_axes: &[String],
        cli_metrics: &[String],
    ) -> Result<Self, CliError> {
        let specs: Vec<String> = if cli_axes.is_empty() {
            ["axis1", "axis2", "axis3"]
                .iter()
                .filter_map(|k| map.get(k).map(str::to_string))
                .collect()
        } else {
            cli_axes.to_vec()
        };
        if specs.is_empty() || specs.len() > MAX_AXES {
            return Err(CliError::Usage(format!(
                "sweep needs 1 to {MAX_AXES} axes, got {}",
                specs.len()
            )));
        }
        let axes: Vec<Axis> = specs
            .iter()
            .map(|s| Axis::parse(s))
            .collect::<Result<_, _>>()?;
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(CliError::Usage(format!(
                    "axis {} given twice",
                    a.name.as_str()
                )));
            }
        }
        let metric_list: Vec<String> = if cli_metrics.is_empty() {
            map.get("metric")
                .unwrap_or("max_fid_u1")
                .split(',')
                .map(|s| s.trim().to_string())
                .collect()
        } else {
            cli_metrics.to_vec()
        };
        let metrics = metric_list
            .iter()
            .map(|m| Metric::parse(m))
            .collect::<Result<_, _>>()?;
        Ok(Self { axes, metrics })
    }

    pub fn grid_size(&self) -> Option<usize> {
        self.axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.count))
    }
}

fn set_axis(map: &mut ConfigMap, axis: AxisName, v: f64) -> Result<(), CliError> {
    match axis {
        AxisName::GammaTau => map.set("gamma_tau", &format!("{v:?}")),
        AxisName::Tau => map.set("tau", &format!("{v:?}")),
        AxisName::N => map.set("n_steps", &format!("{}", v as u64)),
        AxisName::AlphaRe | AxisName::AlphaIm => {
            if map.get("model").unwrap_or("dissipative") != "dissipative" {
                return Err(CliError::Usage(
                    "alpha axes need the dissipative model".into(),
                ));
            }
            let cur = map.get("alpha").unwrap_or("1,0");
            if cur == "up" || cur == "inf" {
                return Err(CliError::Usage("alpha axes need a finite alpha".into()));
            }
            let a = parse_complex("alpha", cur)?;
            let a = if axis == AxisName::AlphaRe {
                c64(v, a.im)
            } else {
                c64(a.re, v)
            };
            map.set("alpha", &format_complex(a))
        }
    }
}

/// Evaluates every grid point (in parallel) and writes the rows in
/// lexicographic order of axis indices, first axis slowest.
pub fn sweep(base: &ConfigMap, sw: &SweepConfig, out: &mut impl Write) -> Result<(), CliError> {
    let size = sw.grid_size().filter(|&s| s <= MAX_GRID).ok_or_else(|| {
        CliError::Usage(format!(
            "grid has more than {MAX_GRID} points; reduce the axis counts"
        ))
    })?;
    let values: Vec<Vec<f64>> = sw.axes.iter().map(Axis::values).collect();
    let mut points = Vec::with_capacity(size);
    for flat in 0..size {
        let mut rem = flat;
        let mut idx = vec![0usize; sw.axes.len()];
        for d in (0..sw.axes.len()).rev() {
            idx[d] = rem % sw.axes[d].count;
            rem /= sw.axes[d].count;
        }
        let mut map = base.clone();
        // tau before gamma_tau so the product is taken with the swept tau
        let mut order: Vec<usize> = (0..sw.axes.len()).collect();
        order.sort_by_key(|&d| sw.axes[d].name != AxisName::Tau);
        for d in order {
            set_axis(&mut map, sw.axes[d].name, values[d][idx[d]])?;
        }
        if sw.axes.iter().any(|a| a.name == AxisName::Tau)
            && map.get("gamma_tau").is_none()
            && map.get("gamma").is_none()
        {
            map.set("gamma", "0")?;
        }
        let cfg = RunConfig::from_map(&map)?;
        let coords: Vec<f64> = idx.iter().enumerate().map(|(d, &i)| values[d][i]).collect();
        points.push((coords, cfg));
    }

    let rows: Vec<String> = points
        .par_iter()
        .map(|(coords, cfg)| {
            let tr = trajectory(cfg);
            let mut cells: Vec<String> = coords
                .iter()
                .zip(&sw.axes)
                .map(|(v, a)| {
                    if a.name == AxisName::N {
                        format!("{}", *v as u64)
                    } else {
                        real(*v)
                    }
                })
                .collect();
            cells.extend(sw.metrics.iter().map(|m| m.eval(&tr)));
            cells.join(",")
        })
        .collect();

    let header: Vec<&str> = sw
        .axes
        .iter()
        .map(|a| a.name.as_str())
        .chain(sw.metrics.iter().map(|m| m.as_str()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub deviation: f64,
    pub tol: f64,
    pub note: Option<String>,
}

impl CheckLine {
    pub fn passed(&self) -> bool {
        self.deviation < self.tol
    }
}

pub const TOL_STEP: f64 = 1e-12;
pub const TOL_ITERATE: f64 = 1e-10;
pub const TOL_CLOSED: f64 = 1e-8;
pub const TOL_FIXED_POINT: f64 = 1e-14;

fn random_state4(rng: &mut ChaCha8Rng) -> CMat4 {
    let mut m = CMat4::zeros();
    for _ in 0..4 {
        let v =
            CVec4::from_fn(|_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        m += outer4(&v, &v);
    }
    m / m.trace()
}

/// Oracle-equivalence checks for the configured model. `tol` replaces every
/// per-check tolerance when given.
pub fn check(cfg: &RunConfig, tol: Option<f64>) -> Result<Vec<CheckLine>, CliError> {
    let line = |name, deviation, default: f64| CheckLine {
        name,
        deviation,
        tol: tol.unwrap_or(default),
        note: None,
    };
    let n = cfg.n_steps;
    let n_closed = n.min(CLOSED_FORM_MAX_N);
    let rho0 = cfg.initial_state;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    match &cfg.params {
        ModelParams::Dephasing(p) => {
            let ops = projected_ops_up(p);
            let up = projector2(&ket_up());
            out.push(line(
                "fixed_point_up",
                max_abs_diff2(&step_dephasing(&up, &ops), &up),
                TOL_FIXED_POINT,
            ));
            let tr = iterate_dephasing(&rho0, p, n);
            let mut dev_it = 0.0f64;
            for s in &tr.steps {
                dev_it = dev_it.max(max_abs_diff2(
                    &rho_n_dephasing_closed(&rho0, p, s.n),
                    &s.rho_unnormalized,
                ));
            }
            out.push(line("closed_vs_iterate", dev_it, TOL_ITERATE));
            let joint =
                joint_oracle_dephasing(&rho0, p, n).map_err(|e| CliError::Usage(e.to_string()))?;
            out.push(line(
                "closed_vs_joint",
                max_abs_diff2(&rho_n_dephasing_closed(&rho0, p, n), &joint),
                TOL_ITERATE,
            ));
        }
        ModelParams::Dissipative(p) => {
            let ch =
                dissipative_kraus_joint(p, p.tau).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut dev = 0.0f64;
            for _ in 0..20 {
                dev = dev.max((ch.apply(&random_state4(&mut rng)).trace() - 1.0).norm());
            }
            out.push(line("joint_trace", dev, TOL_STEP));

            let map = build_projected_map(p);
            let phi = p.measurement.vector();
            let tr = iterate(&rho0, p, n);
            let mut dev = 0.0f64;
            for s in &tr.steps {
                let joint = project_x_onto(&ch.apply(&embed_x(&phi, &s.rho_normalized)), &phi);
                dev = dev.max(max_abs_diff2(
                    &step_dissipative(&s.rho_normalized, &map),
                    &joint,
                ));
            }
            out.push(line("step_vs_joint", dev, TOL_STEP));
            let joint = joint_oracle_dissipative(&rho0, p, n)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            out.push(line(
                "iterate_vs_joint",
                max_abs_diff2(&tr.last().rho_unnormalized, &joint),
                TOL_ITERATE,
            ));

            let closed =
                rho_n_closed(&rho0, p, n_closed).map_err(|e| CliError::Usage(e.to_string()))?;
            out.push(line(
                "closed_vs_iterate",
                max_abs_diff2(&closed, &tr.steps[n_closed].rho_unnormalized),
                TOL_CLOSED,
            ));

            match map.eigensystem() {
                Ok(eig) => {
                    let t = tensors(&eig, p, &rho0);
                    let rec = fg_by_recursion(&t, n_closed);
                    let (mut d_closed, mut d_traj) = (0.0f64, 0.0f64);
                    for k in 0..=n_closed {
                        let (f, g) =
                            fg_closed(&t, k).map_err(|e| CliError::Usage(e.to_string()))?;
                        d_closed = d_closed.max((f - rec.f[k]).abs()).max((g - rec.g[k]).abs());
                        let s = &tr.steps[k];
                        d_traj = d_traj
                            .max((s.f - rec.f[k]).abs())
                            .max((s.g - rec.g[k]).abs());
                    }
                    out.push(line("fg_closed_vs_recursion", d_closed, TOL_CLOSED));
                    out.push(line("fg_recursion_vs_trajectory", d_traj, TOL_CLOSED));
                }
                Err(e) => {
                    let mut l = line("fg_closed_vs_recursion", 0.0, TOL_CLOSED);
                    l.note = Some(format!("skipped: {e}"));
                    out.push(l);
                }
            }
        }
    }
    Ok(out)
}

pub fn write_check(
    lines: &[CheckLine],
    n_closed: usize,
    out: &mut impl Write,
) -> Result<bool, CliError> {
    writeln!(out, "closed-form legs use n = {n_closed}")?;
    let mut failed = 0;
    for l in lines {
        let verdict = if l.passed() { "PASS" } else { "FAIL" };
        if !l.passed() {
            failed += 1;
        }
        write!(
            out,
            "{:<28} max_dev={:.3e} tol={:.1e} {verdict}",
            l.name, l.deviation, l.tol
        )?;
        match &l.note {
            Some(n) => writeln!(out, " ({n})")?,
            None => writeln!(out)?,
        }
    }
    if failed == 0 {
        writeln!(out, "check: PASS")?;
    } else {
        writeln!(out, "check: FAIL ({failed} of {})", lines.len())?;
    }
    Ok(failed == 0)
}

pub const IDENTITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub trials: usize,
    pub max_rel_dev: f64,
    /// `(l, k, brute value)` of the worst trial.
    pub worst: Option<(usize, usize, C64)>,
    pub tol: f64,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.max_rel_dev < self.tol
    }
}

fn rel_dev(closed: C64, brute: C64) -> f64 {
    let d = (closed - brute).norm();
    if d == 0.0 {
        0.0
    } else {
        d / brute.norm()
    }
}

/// `l + 1` points with moduli in [0.5, 1.5] and pairwise distances of at
/// least 0.3, so the partial-fraction form stays well conditioned.
pub fn separated_points(rng: &mut impl Rng, count: usize) -> Vec<C64> {
    let mut pts: Vec<C64> = Vec::with_capacity(count);
    while pts.len() < count {
        let z = C64::from_polar(
            rng.random_range(0.5..1.5),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        if pts.iter().all(|p| (p - z).norm() >= 0.3) {
            pts.push(z);
        }
    }
    pts
}

fn identity_error(e: qpurify_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn identity_test(
    l_max: usize,
    k_max: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<IdentityReport, CliError> {
    if l_max > BRUTE_MAX_L || k_max > BRUTE_MAX_K {
        return Err(CliError::Usage(format!(
            "need l_max <= {BRUTE_MAX_L} and k_max <= {BRUTE_MAX_K}"
        )));
    }
    if k_max < l_max {
        return Err(CliError::Usage(format!(
            "k_max = {k_max} must be >= l_max = {l_max}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = IdentityReport {
        trials,
        max_rel_dev: 0.0,
        worst: None,
        tol,
    };
    for _ in 0..trials {
        let l = rng.random_range(0..=l_max);
        let k = rng.random_range(l..=k_max);
        let xs = separated_points(&mut rng, l + 1);
        let brute = nested_sum_brute(&xs, k).map_err(identity_error)?;
        let closed = nested_sum_closed(&xs, k, 0.0).map_err(identity_error)?;
        let d = rel_dev(closed, brute);
        if report.worst.is_none() || d > report.max_rel_dev {
            report.max_rel_dev = d;
            report.worst = Some((l, k, brute));
        }
    }
    Ok(report)
}

/// Both evaluations at user-supplied points; returns `(brute, closed, relative deviation)`.
pub fn identity_at(xs: &[C64], k: usize) -> Result<(C64, C64, f64), CliError> {
    let brute = nested_sum_brute(xs, k).map_err(identity_error)?;
    let closed = nested_sum_closed(xs, k, 0.0).map_err(identity_error)?;
    Ok((brute, closed, rel_dev(closed, brute)))
}
