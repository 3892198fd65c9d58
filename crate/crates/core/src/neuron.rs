//! Quadratic spiking neuron: two half-millisecond Euler steps on `v`, one
//! full step on `u`, then threshold test and after-spike reset.

use thiserror::Error;

/// Spike threshold in mV; a neuron has fired iff `v >= FIRING_THRESHOLD`.
pub const FIRING_THRESHOLD: f64 = 30.0;

/// Boundary states with `|v|` above this are treated as numerical blow-up.
pub const DIVERGENCE_BOUND: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuronError {
    #[error("simulation diverged at neuron {neuron}, iteration {iter}: v={v}, u={u}")]
    Diverged { neuron: usize, iter: u64, v: f64, u: f64 },
    #[error("reset applied to a neuron that has not fired (v={v})")]
    NotFired { v: f64 },
}

/// Per-neuron constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronParams {
    /// Time scale of the recovery variable.
    pub a: f64,
    /// Sensitivity of `u` to `v`.
    pub b: f64,
    /// After-spike reset potential (mV).
    pub c: f64,
    /// After-spike increment of `u`.
    pub d: f64,
}

impl NeuronParams {
    /// `a > 0`, `b > 0`, `c < 30`, `d >= 0`.
    pub fn is_valid(&self) -> bool {
        self.a > 0.0 && self.b > 0.0 && self.c < FIRING_THRESHOLD && self.d >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    /// Membrane potential (mV).
    pub v: f64,
    /// Membrane recovery variable.
    pub u: f64,
}

impl NeuronState {
    /// Resting state on the `u = b·v` nullcline.
    pub fn resting(v: f64, params: &NeuronParams) -> Self {
        Self { v, u: params.b * v }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.u.is_finite()
    }
}

/// Total input current for one millisecond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapticInput(pub f64);

#[inline]
fn dv_dt(v: f64, u: f64, input: f64) -> f64 {
    0.04 * v * v + 5.0 * v + 140.0 - u + input
}

/// Advance one millisecond without any threshold handling.
///
/// `v` takes two Euler half-steps with `u` and the input held fixed, then `u`
/// takes one full step using the new `v`.
#[inline]
pub fn step(state: NeuronState, params: &NeuronParams, input: SynapticInput) -> NeuronState {
    let NeuronState { mut v, u } = state;
    v += 0.5 * dv_dt(v, u, input.0);
    v += 0.5 * dv_dt(v, u, input.0);
    let u = u + params.a * (params.b * v - u);
    NeuronState { v, u }
}

#[inline]
pub fn fired(state: &NeuronState) -> bool {
    state.v >= FIRING_THRESHOLD
}

/// After-spike reset: `v <- c`, `u <- u + d`.
pub fn reset(state: NeuronState, params: &NeuronParams) -> Result<NeuronState, NeuronError> {
    if !fired(&state) {
        return Err(NeuronError::NotFired { v: state.v });
    }
    Ok(NeuronState {
        v: params.c,
        u: state.u + params.d,
    })
}

/// Result of one full millisecond for one neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance {
    /// State at the step boundary, after any reset.
    pub state: NeuronState,
    pub fired: bool,
}

/// `step`, then `fired`, then `reset` when it fired, with divergence checks.
///
/// The pre-reset peak of a spike routinely overshoots `DIVERGENCE_BOUND`, so
/// the bound is applied to the post-reset boundary state; the peak itself
/// only has to be finite.
pub fn advance(
    neuron: usize,
    iter: u64,
    state: NeuronState,
    params: &NeuronParams,
    input: SynapticInput,
) -> Result<Advance, NeuronError> {
    let next = step(state, params, input);
    let diverged = |s: NeuronState| NeuronError::Diverged {
        neuron,
        iter,
        v: s.v,
        u: s.u,
    };
    if !next.is_finite() {
        return Err(diverged(next));
    }
    let did_fire = fired(&next);
    let boundary = if did_fire { reset(next, params)? } else { next };
    if !boundary.is_finite() || boundary.v.abs() > DIVERGENCE_BOUND {
        return Err(diverged(boundary));
    }
    Ok(Advance {
        state: boundary,
        fired: did_fire,
    })
}
