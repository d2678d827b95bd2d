//! Adaptive Runge-Kutta-Merson stepping for the method-of-lines system
//! `du/dt = f(u, t)`.
//!
//! The classical five-stage Merson 4(5) pair drives both the update and the
//! embedded error estimate:
//!
//! ```text
//! k1 = f(u, t)
//! k2 = f(u + dt k1 / 3,             t + dt/3)
//! k3 = f(u + dt (k1 + k2) / 6,      t + dt/3)
//! k4 = f(u + dt (k1 + 3 k3) / 8,    t + dt/2)
//! k5 = f(u + dt (k1 - 3 k3 + 4 k4) / 2, t + dt)
//!
//! u' = u + dt (k1 + 4 k4 + k5) / 6
//! err = max-norm of dt (2 k1 - 9 k3 + 8 k4 - k5) / 30
//! ```
//!
//! A step is accepted iff `err <= tolerance`; the next step is
//! `safety * dt * (tolerance / err)^(1/5)`, growth capped at 2x and shrink
//! at 0.1x, clamped into `[dt_min, dt_max]`. Fixed-step runs use
//! `dt_min = dt_max` with an infinite tolerance.

use crate::error::{Error, Result};

/// Controller settings for the adaptive stepper.
#[derive(Debug, Clone)]
pub struct StepperConfig {
    /// Per-step error target in the max-norm.
    pub tolerance: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Controller safety factor in (0, 1].
    pub safety: f64,
}

impl StepperConfig {
    pub fn new(tolerance: f64, dt_init: f64, dt_min: f64, dt_max: f64) -> Result<StepperConfig> {
        let cfg = StepperConfig {
            tolerance,
            dt_init,
            dt_min,
            dt_max,
            safety: 0.8,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Accept-all configuration with a constant step, for order studies.
    pub fn fixed_step(dt: f64) -> Result<StepperConfig> {
        StepperConfig::new(f64::INFINITY, dt, dt, dt)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Contract(format!(
                "stepper tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(Error::Contract(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            )));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::Contract(format!(
                "safety must lie in (0, 1], got {}",
                self.safety
            )));
        }
        Ok(())
    }
}

/// Result of one attempted step.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub accepted: bool,
    pub dt_used: f64,
    /// Next step proposal, clamped into `[dt_min, dt_max]`.
    pub dt_next: f64,
    /// Embedded max-norm error estimate of the attempted step.
    pub error_estimate: f64,
}

struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    k5: Vec<f64>,
    stage: Vec<f64>,
    out: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Workspace {
        Workspace {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            k5: vec![0.0; n],
            stage: vec![0.0; n],
            out: vec![0.0; n],
        }
    }
}

fn check_finite(k: &[f64], t: f64) -> Result<()> {
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { t });
    }
    Ok(())
}

#[allow(clippy::needless_range_loop)] // lockstep stage updates over several buffers
fn step_into<F>(
    f: &mut F,
    u: &[f64],
    t: f64,
    dt: f64,
    cfg: &StepperConfig,
    ws: &mut Workspace,
) -> Result<StepOutcome>
where
    F: FnMut(&[f64], f64) -> Result<Vec<f64>>,
{
    let n = u.len();
    debug_assert_eq!(ws.k1.len(), n);

    ws.k1 = f(u, t)?;
    check_finite(&ws.k1, t)?;

    for i in 0..n {
        ws.stage[i] = u[i] + dt * ws.k1[i] / 3.0;
    }
    ws.k2 = f(&ws.stage, t + dt / 3.0)?;
    check_finite(&ws.k2, t)?;

    for i in 0..n {
        ws.stage[i] = u[i] + dt * (ws.k1[i] + ws.k2[i]) / 6.0;
    }
    ws.k3 = f(&ws.stage, t + dt / 3.0)?;
    check_finite(&ws.k3, t)?;

    for i in 0..n {
        ws.stage[i] = u[i] + dt * (ws.k1[i] + 3.0 * ws.k3[i]) / 8.0;
    }
    ws.k4 = f(&ws.stage, t + dt / 2.0)?;
    check_finite(&ws.k4, t)?;

    for i in 0..n {
        ws.stage[i] = u[i] + dt * (ws.k1[i] - 3.0 * ws.k3[i] + 4.0 * ws.k4[i]) / 2.0;
    }
    ws.k5 = f(&ws.stage, t + dt)?;
    check_finite(&ws.k5, t)?;

    let mut err = 0.0f64;
    for i in 0..n {
        ws.out[i] = u[i] + dt * (ws.k1[i] + 4.0 * ws.k4[i] + ws.k5[i]) / 6.0;
        let e = dt * (2.0 * ws.k1[i] - 9.0 * ws.k3[i] + 8.0 * ws.k4[i] - ws.k5[i]) / 30.0;
        err = err.max(e.abs());
    }

    let accepted = err <= cfg.tolerance;
    let dt_next = if err == 0.0 {
        (2.0 * dt).min(cfg.dt_max)
    } else {
        let raw = cfg.safety * dt * (cfg.tolerance / err).powf(0.2);
        let capped = raw.clamp(0.1 * dt, 2.0 * dt);
        if !accepted && capped < cfg.dt_min {
            return Err(Error::StepFailure {
                t,
                dt_min: cfg.dt_min,
            });
        }
        capped.clamp(cfg.dt_min, cfg.dt_max)
    };

    Ok(StepOutcome {
        accepted,
        dt_used: dt,
        dt_next,
        error_estimate: err,
    })
}

/// One Merson step attempt; returns the candidate state and the outcome.
/// The candidate only advances the solution when `outcome.accepted`.
pub fn rkm_step<F>(
    f: &mut F,
    u: &[f64],
    t: f64,
    dt: f64,
    cfg: &StepperConfig,
) -> Result<(Vec<f64>, StepOutcome)>
where
    F: FnMut(&[f64], f64) -> Result<Vec<f64>>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Contract(format!(
            "step size must be positive, got {dt}"
        )));
    }
    cfg.validate()?;
    let mut ws = Workspace::new(u.len());
    let outcome = step_into(f, u, t, dt, cfg, &mut ws)?;
    Ok((std::mem::take(&mut ws.out), outcome))
}

#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub final_state: Vec<f64>,
    /// Deep copies of the state at the requested snapshot times, in order.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

/// A failed run with the last good state attached for post-mortem output.
#[derive(Debug)]
pub struct IntegrationFailure {
    pub error: Error,
    pub t: f64,
    pub last_state: Vec<f64>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

pub type IntegrationOutcome = std::result::Result<IntegrationResult, Box<IntegrationFailure>>;

/// Advance `u0` from `t0` to `t_end`, truncating steps to land exactly on
/// every snapshot time and on `t_end`. The observer runs after each
/// accepted step and may mutate the state in place (boundary condition
/// refresh); snapshots are recorded after the observer.
pub fn integrate<F, O>(
    f: &mut F,
    u0: &[f64],
    t0: f64,
    t_end: f64,
    cfg: &StepperConfig,
    snapshot_times: &[f64],
    observer: &mut O,
) -> IntegrationOutcome
where
    F: FnMut(&[f64], f64) -> Result<Vec<f64>>,
    O: FnMut(f64, &mut [f64], &StepOutcome),
{
    let fail = |error: Error, t: f64, state: &[f64], snaps: Vec<(f64, Vec<f64>)>| {
        Box::new(IntegrationFailure {
            error,
            t,
            last_state: state.to_vec(),
            snapshots: snaps,
        })
    };

    if let Err(e) = cfg.validate() {
        return Err(fail(e, t0, u0, Vec::new()));
    }
    if t_end < t0 {
        return Err(fail(
            Error::Contract(format!("t_end = {t_end} precedes t0 = {t0}")),
            t0,
            u0,
            Vec::new(),
        ));
    }
    for pair in snapshot_times.windows(2) {
        if pair[1] <= pair[0] {
            return Err(fail(
                Error::Contract("snapshot times must be strictly increasing".into()),
                t0,
                u0,
                Vec::new(),
            ));
        }
    }
    if snapshot_times.iter().any(|&s| s < t0 || s > t_end) {
        return Err(fail(
            Error::Contract("snapshot times must lie within [t0, t_end]".into()),
            t0,
            u0,
            Vec::new(),
        ));
    }

    let mut snapshots: Vec<(f64, Vec<f64>)> = Vec::with_capacity(snapshot_times.len());
    let mut next_snap = 0usize;
    if snapshot_times.first() == Some(&t0) {
        snapshots.push((t0, u0.to_vec()));
        next_snap = 1;
    }

    let mut state = u0.to_vec();
    let mut t = t0;
    if t_end == t0 {
        return Ok(IntegrationResult {
            final_state: state,
            snapshots,
            steps_accepted: 0,
            steps_rejected: 0,
        });
    }

    let mut ws = Workspace::new(state.len());
    let mut dt_ctrl = cfg.dt_init;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    while t < t_end {
        let stop = snapshot_times
            .get(next_snap)
            .copied()
            .filter(|&s| s > t)
            .unwrap_or(t_end)
            .min(t_end);
        let landing = t + dt_ctrl >= stop;
        let dt_exec = if landing { stop - t } else { dt_ctrl };

        let outcome = match step_into(f, &state, t, dt_exec, cfg, &mut ws) {
            Ok(o) => o,
            Err(e) => return Err(fail(e, t, &state, snapshots)),
        };

        if outcome.accepted {
            accepted += 1;
            std::mem::swap(&mut state, &mut ws.out);
            t = if landing { stop } else { t + dt_exec };
            observer(t, &mut state, &outcome);
            if snapshot_times.get(next_snap) == Some(&t) {
                snapshots.push((t, state.clone()));
                next_snap += 1;
            }
            // a truncated landing step says nothing about accuracy at the
            // controller scale, keep the controller dt in that case
            if !landing {
                dt_ctrl = outcome.dt_next;
            } else {
                dt_ctrl = dt_ctrl.max(outcome.dt_next).min(cfg.dt_max);
            }
        } else {
            rejected += 1;
            dt_ctrl = outcome.dt_next;
        }
    }

    Ok(IntegrationResult {
        final_state: state,
        snapshots,
        steps_accepted: accepted,
        steps_rejected: rejected,
    })
}
