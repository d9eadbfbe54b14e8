//! Explicit time integration: forward Euler, classical RK4 and the
//! Dormand–Prince 5(4) embedded pair with adaptive step control.
//!
//! All schemes integrate autonomous systems `dx/dt = f(x)` from `t = 0` to
//! `t_end`. Output times ("stops") are the multiples of `record_interval`
//! plus `t_end`; every scheme lands exactly on each stop, so no dense
//! interpolation is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::StateMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    Rk4,
    #[default]
    Dopri5,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Scheme::Euler),
            "rk4" => Ok(Scheme::Rk4),
            "dopri5" => Ok(Scheme::Dopri5),
            other => Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Fixed step for euler / rk4.
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    pub t_end: f64,
    pub max_steps: usize,
    /// Snapshot spacing; `None` records every step.
    pub record_interval: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Dopri5,
            step: 0.1,
            rtol: 1e-6,
            atol: 1e-8,
            t_end: 1.0,
            max_steps: 100_000,
            record_interval: None,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed(scheme: Scheme, step: f64, t_end: f64) -> Self {
        Self {
            scheme,
            step,
            t_end,
            ..Self::default()
        }
    }

    pub fn dopri5(rtol: f64, atol: f64, t_end: f64) -> Self {
        Self {
            scheme: Scheme::Dopri5,
            rtol,
            atol,
            t_end,
            ..Self::default()
        }
    }

    pub fn recording_every(mut self, interval: f64) -> Self {
        self.record_interval = Some(interval);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("t_end", self.t_end)?;
        match self.scheme {
            Scheme::Euler | Scheme::Rk4 => positive("step", self.step)?,
            Scheme::Dopri5 => {
                positive("rtol", self.rtol)?;
                positive("atol", self.atol)?;
            }
        }
        if let Some(r) = self.record_interval {
            positive("record_interval", r)?;
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }

    fn stops(&self) -> Vec<f64> {
        let mut stops = Vec::new();
        if let Some(r) = self.record_interval {
            let mut k = 1;
            loop {
                let t = k as f64 * r;
                if t >= self.t_end * (1.0 - 1e-12) {
                    break;
                }
                stops.push(t);
                k += 1;
            }
        }
        stops.push(self.t_end);
        stops
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    /// Largest scaled error estimate among accepted DOPRI5 steps.
    pub max_accepted_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateMatrix>,
    /// Optional per-snapshot Dirichlet energy.
    pub energies: Option<Vec<f64>>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn from_snapshots(times: Vec<f64>, states: Vec<StateMatrix>) -> Self {
        Self {
            times,
            states,
            energies: None,
            stats: IntegrationStats::default(),
        }
    }

    pub fn last(&self) -> &StateMatrix {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `x + h * sum(coef * k)` over the given stages.
fn combine(x: &StateMatrix, h: f64, stages: &[(f64, &StateMatrix)]) -> StateMatrix {
    let mut out = x.clone();
    let data = out.as_mut_slice();
    for &(c, k) in stages {
        if c == 0.0 {
            continue;
        }
        let hc = h * c;
        for (o, v) in data.iter_mut().zip(k.as_slice()) {
            *o += hc * v;
        }
    }
    out
}

pub fn euler_step<F>(rhs: &mut F, x: &StateMatrix, h: f64) -> Result<StateMatrix>
where
    F: FnMut(&StateMatrix) -> Result<StateMatrix>,
{
    let k = rhs(x)?;
    Ok(combine(x, h, &[(1.0, &k)]))
}

pub fn rk4_step<F>(rhs: &mut F, x: &StateMatrix, h: f64) -> Result<StateMatrix>
where
    F: FnMut(&StateMatrix) -> Result<StateMatrix>,
{
    let k1 = rhs(x)?;
    let k2 = rhs(&combine(x, h, &[(0.5, &k1)]))?;
    let k3 = rhs(&combine(x, h, &[(0.5, &k2)]))?;
    let k4 = rhs(&combine(x, h, &[(1.0, &k3)]))?;
    Ok(combine(x, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]))
}

mod tableau {
    pub const A21: f64 = 1.0 / 5.0;
    pub const A31: f64 = 3.0 / 40.0;
    pub const A32: f64 = 9.0 / 40.0;
    pub const A41: f64 = 44.0 / 45.0;
    pub const A42: f64 = -56.0 / 15.0;
    pub const A43: f64 = 32.0 / 9.0;
    pub const A51: f64 = 19372.0 / 6561.0;
    pub const A52: f64 = -25360.0 / 2187.0;
    pub const A53: f64 = 64448.0 / 6561.0;
    pub const A54: f64 = -212.0 / 729.0;
    pub const A61: f64 = 9017.0 / 3168.0;
    pub const A62: f64 = -355.0 / 33.0;
    pub const A63: f64 = 46732.0 / 5247.0;
    pub const A64: f64 = 49.0 / 176.0;
    pub const A65: f64 = -5103.0 / 18656.0;
    // fifth-order weights, also the last stage row (FSAL)
    pub const B1: f64 = 35.0 / 384.0;
    pub const B3: f64 = 500.0 / 1113.0;
    pub const B4: f64 = 125.0 / 192.0;
    pub const B5: f64 = -2187.0 / 6784.0;
    pub const B6: f64 = 11.0 / 84.0;
    // fifth minus fourth order weights
    pub const E1: f64 = 71.0 / 57600.0;
    pub const E3: f64 = -71.0 / 16695.0;
    pub const E4: f64 = 71.0 / 1920.0;
    pub const E5: f64 = -17253.0 / 339200.0;
    pub const E6: f64 = 22.0 / 525.0;
    pub const E7: f64 = -1.0 / 40.0;
}

/// Result of one Dormand–Prince attempt.
#[derive(Debug, Clone)]
pub struct Dopri5Step {
    pub state: StateMatrix,
    /// `f(state)`, reusable as the first stage of the next step.
    pub derivative: StateMatrix,
    /// `max |err| / (atol + rtol * max(|x|, |x_new|))`; accept when `<= 1`.
    pub error: f64,
}

/// One Dormand–Prince 5(4) attempt from `x` with `k1 = f(x)` supplied.
pub fn dopri5_step<F>(rhs: &mut F, x: &StateMatrix, k1: &StateMatrix, h: f64, rtol: f64, atol: f64) -> Result<Dopri5Step>
where
    F: FnMut(&StateMatrix) -> Result<StateMatrix>,
{
    use tableau::*;
    let k2 = rhs(&combine(x, h, &[(A21, k1)]))?;
    let k3 = rhs(&combine(x, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = rhs(&combine(x, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = rhs(&combine(x, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = rhs(&combine(x, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let state = combine(x, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = rhs(&state)?;
    let err = combine(
        &StateMatrix::zeros(x.rows(), x.cols()),
        h,
        &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
    );
    let error = err
        .as_slice()
        .iter()
        .zip(x.as_slice().iter().zip(state.as_slice()))
        .map(|(e, (a, b))| e.abs() / (atol + rtol * a.abs().max(b.abs())))
        .fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) });
    Ok(Dopri5Step {
        state,
        derivative: k7,
        error,
    })
}

fn max_scaled(v: &StateMatrix, scale: &StateMatrix, rtol: f64, atol: f64) -> f64 {
    v.as_slice()
        .iter()
        .zip(scale.as_slice())
        .map(|(a, s)| a.abs() / (atol + rtol * s.abs()))
        .fold(0.0, f64::max)
}

/// Curvature-based starting step (Hairer, Nørsett & Wanner), capped at
/// `t_end / 100`.
fn initial_step<F>(rhs: &mut F, x0: &StateMatrix, f0: &StateMatrix, cfg: &IntegratorConfig) -> Result<f64>
where
    F: FnMut(&StateMatrix) -> Result<StateMatrix>,
{
    let d0 = max_scaled(x0, x0, cfg.rtol, cfg.atol);
    let d1 = max_scaled(f0, x0, cfg.rtol, cfg.atol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let f1 = rhs(&combine(x0, h0, &[(1.0, f0)]))?;
    let d2 = max_scaled(&f1.sub(f0), x0, cfg.rtol, cfg.atol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    Ok((100.0 * h0).min(h1).min(cfg.t_end / 100.0))
}

/// What an observer did with the state it was shown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observed {
    Unchanged,
    Modified,
}

/// Integrates and hands each output point (including `t = 0`) to
/// `observer`, which may modify the state in place before integration
/// continues.
pub fn integrate_observed<F, O>(mut rhs: F, x0: &StateMatrix, cfg: &IntegratorConfig, mut observer: O) -> Result<IntegrationStats>
where
    F: FnMut(&StateMatrix) -> Result<StateMatrix>,
    O: FnMut(f64, &mut StateMatrix) -> Observed,
{
    cfg.validate()?;
    if !x0.is_finite() {
        return Err(Error::NonFiniteState { last_finite_time: 0.0 });
    }
    let record_all = cfg.record_interval.is_none();
    let mut x = x0.clone();
    let mut stats = IntegrationStats::default();
    observer(0.0, &mut x);
    let mut t = 0.0;
    let counted = |f: &mut F, s: &StateMatrix, stats: &mut IntegrationStats| {
        if !s.is_finite() {
            // stage blew up; the caller fills in the time
            return Err(Error::NonFiniteState { last_finite_time: f64::NAN });
        }
        stats.rhs_evaluations += 1;
        f(s)
    };
    let at = |t: f64| {
        move |e: Error| match e {
            Error::NonFiniteState { last_finite_time } if last_finite_time.is_nan() => Error::NonFiniteState { last_finite_time: t },
            e => e,
        }
    };

    match cfg.scheme {
        Scheme::Euler | Scheme::Rk4 => {
            for stop in cfg.stops() {
                let span = stop - t;
                let n = ((span / cfg.step) - 1e-9).ceil().max(1.0) as usize;
                let h = span / n as f64;
                let t_start = t;
                for k in 1..=n {
                    if stats.accepted >= cfg.max_steps {
                        return Err(Error::StepLimitExceeded {
                            max_steps: cfg.max_steps,
                            time: t,
                        });
                    }
                    let mut f = |s: &StateMatrix| counted(&mut rhs, s, &mut stats);
                    let next = match cfg.scheme {
                        Scheme::Euler => euler_step(&mut f, &x, h),
                        _ => rk4_step(&mut f, &x, h),
                    }
                    .map_err(at(t))?;
                    if !next.is_finite() {
                        return Err(Error::NonFiniteState { last_finite_time: t });
                    }
                    stats.accepted += 1;
                    x = next;
                    t = if k == n { stop } else { t_start + k as f64 * h };
                    if record_all || k == n {
                        observer(t, &mut x);
                    }
                }
            }
        }
        Scheme::Dopri5 => {
            let mut k1 = counted(&mut rhs, &x, &mut stats)?;
            let mut h = initial_step(&mut |s: &StateMatrix| counted(&mut rhs, s, &mut stats), &x, &k1, cfg).map_err(at(0.0))?;
            let mut attempts = 0usize;
            for stop in cfg.stops() {
                while t < stop {
                    if attempts >= cfg.max_steps {
                        return Err(Error::StepLimitExceeded {
                            max_steps: cfg.max_steps,
                            time: t,
                        });
                    }
                    attempts += 1;
                    let remaining = stop - t;
                    let lands = h >= remaining * (1.0 - 1e-12);
                    let h_try = if lands { remaining } else { h };
                    if h_try <= f64::EPSILON * t.abs().max(1.0) {
                        return Err(Error::StepSizeUnderflow { time: t });
                    }
                    let step = dopri5_step(
                        &mut |s: &StateMatrix| counted(&mut rhs, s, &mut stats),
                        &x,
                        &k1,
                        h_try,
                        cfg.rtol,
                        cfg.atol,
                    )
                    .map_err(at(t))?;
                    if !step.error.is_finite() || !step.state.is_finite() {
                        return Err(Error::NonFiniteState { last_finite_time: t });
                    }
                    let factor = if step.error == 0.0 {
                        5.0
                    } else {
                        (0.9 * step.error.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if step.error <= 1.0 {
                        stats.accepted += 1;
                        stats.max_accepted_error = stats.max_accepted_error.max(step.error);
                        t = if lands { stop } else { t + h_try };
                        x = step.state;
                        k1 = step.derivative;
                        // a truncated landing step says little about the natural size
                        h = if lands { h.max(h_try * factor) } else { h_try * factor };
                        if (record_all || t == stop) && observer(t, &mut x) == Observed::Modified {
                            k1 = counted(&mut rhs, &x, &mut stats)?;
                        }
                    } else {
                        stats.rejected += 1;
                        h = h_try * factor.min(1.0);
                    }
                }
            }
        }
    }
    Ok(stats)
}

/// Integrates `dx/dt = rhs(x)` and records the trajectory.
pub fn integrate<F>(rhs: F, x0: &StateMatrix, cfg: &IntegratorConfig) -> Result<Trajectory>
where
    F: FnMut(&StateMatrix) -> Result<StateMatrix>,
{
    let mut times = Vec::new();
    let mut states = Vec::new();
    let stats = integrate_observed(rhs, x0, cfg, |t, x| {
        times.push(t);
        states.push(x.clone());
        Observed::Unchanged
    })?;
    Ok(Trajectory {
        times,
        states,
        energies: None,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(x: &StateMatrix) -> Result<StateMatrix> {
        Ok(x.scaled(-1.0))
    }

    fn end_error(scheme: Scheme, h: f64) -> f64 {
        let x0 = StateMatrix::column(&[1.0]);
        let traj = integrate(decay, &x0, &IntegratorConfig::fixed(scheme, h, 1.0)).unwrap();
        (traj.last().get(0, 0) - (-1.0f64).exp()).abs()
    }

    #[test]
    fn rk4_hits_exponential() {
        assert!(end_error(Scheme::Rk4, 0.01) < 1e-8);
    }

    #[test]
    fn rk4_error_ratio_on_halving() {
        let ratio = end_error(Scheme::Rk4, 0.1) / end_error(Scheme::Rk4, 0.05);
        assert!((12.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn zero_rhs_is_constant_for_every_scheme() {
        let x0 = StateMatrix::from_rows(&[vec![1.5, -2.0], vec![0.25, 3.0]]).unwrap();
        for scheme in [Scheme::Euler, Scheme::Rk4, Scheme::Dopri5] {
            let cfg = IntegratorConfig { scheme, t_end: 2.0, ..Default::default() };
            let traj = integrate(|x: &StateMatrix| Ok(StateMatrix::zeros(x.rows(), x.cols())), &x0, &cfg).unwrap();
            assert!(traj.states.iter().all(|s| s == &x0), "{scheme:?}");
            assert_eq!(*traj.times.last().unwrap(), 2.0);
        }
    }

    #[test]
    fn times_increase_from_zero() {
        let x0 = StateMatrix::column(&[1.0]);
        for scheme in [Scheme::Euler, Scheme::Rk4, Scheme::Dopri5] {
            let cfg = IntegratorConfig { scheme, step: 0.3, t_end: 1.0, ..Default::default() };
            let traj = integrate(decay, &x0, &cfg).unwrap();
            assert_eq!(traj.times[0], 0.0);
            assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
            assert_eq!(*traj.times.last().unwrap(), 1.0);
        }
        let traj = integrate(decay, &x0, &IntegratorConfig::fixed(Scheme::Euler, 0.3, 1.0)).unwrap();
        assert_eq!(traj.len(), 5);
    }

    #[test]
    fn record_interval_lands_on_grid() {
        let x0 = StateMatrix::column(&[1.0]);
        for scheme in [Scheme::Rk4, Scheme::Dopri5] {
            let cfg = IntegratorConfig { scheme, step: 0.07, t_end: 3.0, ..Default::default() }.recording_every(0.5);
            let traj = integrate(decay, &x0, &cfg).unwrap();
            assert_eq!(traj.times, vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
            for (t, x) in traj.times.iter().zip(&traj.states) {
                assert!((x.get(0, 0) - (-t).exp()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn dopri5_meets_tolerance_and_is_self_consistent() {
        let x0 = StateMatrix::column(&[1.0]);
        let traj = integrate(decay, &x0, &IntegratorConfig::dopri5(1e-6, 1e-8, 1.0)).unwrap();
        assert!((traj.last().get(0, 0) - (-1.0f64).exp()).abs() < 1e-5);
        assert!(traj.stats.max_accepted_error <= 1.0);
        assert!(traj.stats.accepted > 3);
    }

    #[test]
    fn dopri5_oscillator_stays_accurate() {
        let x0 = StateMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let rot = |x: &StateMatrix| StateMatrix::from_rows(&[vec![x.get(0, 1), -x.get(0, 0)]]);
        let traj = integrate(rot, &x0, &IntegratorConfig::dopri5(1e-9, 1e-12, 10.0)).unwrap();
        let end = traj.last();
        assert!((end.get(0, 0) - 10f64.cos()).abs() < 1e-7);
        assert!((end.get(0, 1) + 10f64.sin()).abs() < 1e-7);
        assert!(traj.stats.max_accepted_error <= 1.0);
    }

    #[test]
    fn blow_up_is_reported() {
        let x0 = StateMatrix::column(&[1.0]);
        let cube = |x: &StateMatrix| Ok(StateMatrix::column(&[x.get(0, 0).powi(3)]));
        let err = integrate(cube, &x0, &IntegratorConfig::fixed(Scheme::Euler, 0.1, 10.0)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }), "{err}");
        let grow = |x: &StateMatrix| Ok(x.scaled(100.0));
        let err = integrate(grow, &x0, &IntegratorConfig::dopri5(1e-6, 1e-8, 20.0)).unwrap_err();
        match err {
            Error::NonFiniteState { last_finite_time } => assert!(last_finite_time > 5.0 && last_finite_time < 7.2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn step_limit() {
        let x0 = StateMatrix::column(&[1.0]);
        let cfg = IntegratorConfig { max_steps: 5, ..IntegratorConfig::fixed(Scheme::Euler, 0.01, 1.0) };
        assert!(matches!(integrate(decay, &x0, &cfg), Err(Error::StepLimitExceeded { .. })));
    }

    #[test]
    fn invalid_configs() {
        let x0 = StateMatrix::column(&[1.0]);
        for cfg in [
            IntegratorConfig::fixed(Scheme::Rk4, 0.0, 1.0),
            IntegratorConfig::fixed(Scheme::Rk4, 0.1, -1.0),
            IntegratorConfig::dopri5(0.0, 1e-8, 1.0),
        ] {
            assert!(matches!(integrate(decay, &x0, &cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn observer_can_clamp() {
        let x0 = StateMatrix::column(&[1.0, 0.0]);
        let pull = |x: &StateMatrix| Ok(StateMatrix::column(&[x.get(1, 0) - x.get(0, 0), x.get(0, 0) - x.get(1, 0)]));
        for scheme in [Scheme::Rk4, Scheme::Dopri5] {
            let mut last = StateMatrix::column(&[0.0, 0.0]);
            let cfg = IntegratorConfig { scheme, step: 0.05, t_end: 20.0, ..Default::default() };
            integrate_observed(pull, &x0, &cfg, |_, x| {
                x.set(0, 0, 1.0);
                last = x.clone();
                Observed::Modified
            })
            .unwrap();
            assert!((last.get(1, 0) - 1.0).abs() < 1e-5, "{scheme:?} {last:?}");
        }
    }
}
