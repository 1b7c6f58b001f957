//! Dual-channel pulse-coupled neural networks.
//!
//! Each pixel is a neuron with two dendritic channels, one per source
//! image. Per iteration:
//!
//! ```text
//! R   = K * Y(n-1)                       (linking term)
//! H_A = S_A + R,  H_B = S_B + R          (channels)
//! U   = pool(wA, H_A, wB, H_B)           (fusion pool)
//! fire where U > T(n-1):  Y = U - R - 1, T = V_T
//! otherwise:              Y = 0,         T = e^{-alpha_T} T(n-1)
//! ```
//!
//! The additive pool ([`AdditivePool`]) is the improved model; the
//! multiplicative pool ([`MultiplicativePool`]) is the dual-channel baseline.
//! With complementary weights (`wA + wB = 1`) the additive pool yields
//! `Y = wA*S_A + wB*S_B` on firing, independent of `R`.

mod pool;

use std::fmt;
use std::str::FromStr;

pub use pool::{AdditivePool, FusionPool, MultiplicativePool};

use crate::error::{ensure_same_dims, FusionError, Result};
use crate::grid::{convolve3x3, Kernel3x3, ScalarField};

/// Upper bound of the additive internal activity under normalized stimuli,
/// weights in [0, 1] and the default kernel: `1 + 1 + sum(K)`.
pub const ACTIVITY_BOUND: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcnnConfig {
    /// Threshold decay constant alpha_T; each non-firing step scales T by `e^{-alpha_T}`.
    pub time_constant: f64,
    /// Threshold V_T assigned to a neuron when it fires.
    pub threshold_reset: f64,
    pub max_iterations: usize,
    pub kernel: Kernel3x3,
    /// Tolerance used by the output rule's equality tests.
    pub equality_tolerance: f64,
    /// Level factor sigma of the multiplicative pool; unused by the additive pool.
    pub level_factor: f64,
}

impl Default for PcnnConfig {
    fn default() -> Self {
        Self {
            time_constant: 0.2,
            threshold_reset: 20.0,
            max_iterations: 200,
            kernel: Kernel3x3::LINKING,
            equality_tolerance: 1e-9,
            level_factor: 0.0,
        }
    }
}

impl PcnnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FusionError::InvalidInput(msg));
        if !(self.time_constant.is_finite() && self.time_constant > 0.0) {
            return bad(format!(
                "time constant must be positive, got {}",
                self.time_constant
            ));
        }
        if !(self.threshold_reset.is_finite() && self.threshold_reset > ACTIVITY_BOUND) {
            return bad(format!(
                "threshold reset must exceed {ACTIVITY_BOUND}, got {}",
                self.threshold_reset
            ));
        }
        if self.max_iterations == 0 {
            return bad("max iterations must be at least 1".into());
        }
        if !(self.equality_tolerance.is_finite() && self.equality_tolerance >= 0.0) {
            return bad(format!(
                "equality tolerance must be nonnegative, got {}",
                self.equality_tolerance
            ));
        }
        if !self.level_factor.is_finite() {
            return bad("level factor must be finite".into());
        }
        Ok(())
    }
}

/// Which fusion pool drives the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ModelKind {
    /// Additive pool, no level factor.
    #[default]
    Idc,
    /// Multiplicative pool with level factor.
    Dc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Idc, ModelKind::Dc];

    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::Idc => "idc",
            ModelKind::Dc => "dc",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "idc" => Ok(ModelKind::Idc),
            "dc" => Ok(ModelKind::Dc),
            other => Err(FusionError::InvalidInput(format!(
                "unknown model '{other}'"
            ))),
        }
    }
}

/// Fusion-pool arithmetic tallies for one run.
///
/// Only the pool itself is counted: the channel sums `S + R` and the pulse
/// generator are excluded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub fusion_pool_multiplications: u64,
    pub fusion_pool_additions: u64,
    pub iterations: u64,
}

/// Per-pixel dynamic state of one network run.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    pub activity: ScalarField,
    pub threshold: ScalarField,
    pub pulse: ScalarField,
    pub output: ScalarField,
    /// Set once a neuron has fired; never cleared.
    pub fired: Vec<bool>,
    /// Neurons that fired during the most recent iteration.
    pub pulsed: Vec<bool>,
    pub iteration: usize,
}

impl NeuronState {
    /// `U = O = Y = 0`, `T = 1`.
    pub fn initial(width: usize, height: usize) -> Result<Self> {
        let zeros = ScalarField::zeros(width, height)?;
        Ok(Self {
            activity: zeros.clone(),
            threshold: ScalarField::filled(width, height, 1.0)?,
            pulse: zeros.clone(),
            output: zeros,
            fired: vec![false; width * height],
            pulsed: vec![false; width * height],
            iteration: 0,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.activity.dims()
    }

    pub fn fired_count(&self) -> usize {
        self.fired.iter().filter(|&&f| f).count()
    }

    pub fn fired_fraction(&self) -> f64 {
        self.fired_count() as f64 / self.fired.len() as f64
    }

    pub fn all_fired(&self) -> bool {
        self.fired.iter().all(|&f| f)
    }
}

/// Stimuli and weights driving the network, validated once.
#[derive(Debug, Clone, Copy)]
pub struct NetworkInputs<'a> {
    stimulus_a: &'a ScalarField,
    stimulus_b: &'a ScalarField,
    weight_a: &'a ScalarField,
    weight_b: &'a ScalarField,
}

impl<'a> NetworkInputs<'a> {
    /// Stimuli and weights must share dimensions and lie in [0, 1].
    pub fn new(
        stimulus_a: &'a ScalarField,
        stimulus_b: &'a ScalarField,
        weight_a: &'a ScalarField,
        weight_b: &'a ScalarField,
    ) -> Result<Self> {
        let dims = stimulus_a.dims();
        for other in [stimulus_b, weight_a, weight_b] {
            ensure_same_dims(dims, other.dims())?;
        }
        for (name, field) in [
            ("stimulus A", stimulus_a),
            ("stimulus B", stimulus_b),
            ("weight A", weight_a),
            ("weight B", weight_b),
        ] {
            if field.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(FusionError::InvalidInput(format!(
                    "{name} values must lie in [0, 1]"
                )));
            }
        }
        Ok(Self {
            stimulus_a,
            stimulus_b,
            weight_a,
            weight_b,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.stimulus_a.dims()
    }
}

/// What happened during one iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepSummary {
    pub newly_fired: usize,
    /// Neurons that fired again after an earlier firing.
    pub refired: usize,
    /// Newly fired neurons whose negative pulse was clamped to 0 before output.
    pub clamped: usize,
}

/// Result of running a network until every neuron has fired.
#[derive(Debug, Clone, PartialEq)]
pub struct PcnnRun {
    /// Fused output before quantization.
    pub output: ScalarField,
    pub counters: OpCounters,
    /// Total negative pulses clamped at output assignment.
    pub clamped: usize,
}

/// A network stepping synchronously over a fixed set of inputs.
#[derive(Debug, Clone)]
pub struct Network<'a, P: FusionPool> {
    inputs: NetworkInputs<'a>,
    pool: P,
    cfg: PcnnConfig,
    state: NeuronState,
    counters: OpCounters,
    clamped: usize,
}

impl<'a, P: FusionPool> Network<'a, P> {
    pub fn new(inputs: NetworkInputs<'a>, pool: P, cfg: PcnnConfig) -> Result<Self> {
        cfg.validate()?;
        let (w, h) = inputs.dims();
        Ok(Self {
            inputs,
            pool,
            cfg,
            state: NeuronState::initial(w, h)?,
            counters: OpCounters::default(),
            clamped: 0,
        })
    }

    pub fn state(&self) -> &NeuronState {
        &self.state
    }

    pub fn counters(&self) -> OpCounters {
        self.counters
    }

    /// One synchronous iteration. Every pixel reads the previous iteration's
    /// pulses only, so the visit order does not affect the result.
    pub fn step(&mut self) -> StepSummary {
        let summary = advance(&mut self.state, &self.inputs, &self.pool, &self.cfg);
        let pixels = self.state.fired.len() as u64;
        self.counters.fusion_pool_multiplications += P::MULTIPLICATIONS * pixels;
        self.counters.fusion_pool_additions += P::ADDITIONS * pixels;
        self.counters.iterations += 1;
        self.clamped += summary.clamped;
        summary
    }

    /// Steps until all neurons have fired or the iteration cap is reached.
    pub fn run(mut self) -> Result<PcnnRun> {
        while !self.state.all_fired() {
            if self.state.iteration >= self.cfg.max_iterations {
                return Err(FusionError::IncompleteFiring {
                    iterations: self.state.iteration,
                    fired_fraction: self.state.fired_fraction(),
                });
            }
            self.step();
        }
        Ok(PcnnRun {
            output: self.state.output,
            counters: self.counters,
            clamped: self.clamped,
        })
    }
}

fn advance<P: FusionPool>(
    state: &mut NeuronState,
    inputs: &NetworkInputs<'_>,
    pool: &P,
    cfg: &PcnnConfig,
) -> StepSummary {
    let linking = convolve3x3(&state.pulse, &cfg.kernel);
    let decay = (-cfg.time_constant).exp();
    let eps = cfg.equality_tolerance;

    let sa = inputs.stimulus_a.data();
    let sb = inputs.stimulus_b.data();
    let wa = inputs.weight_a.data();
    let wb = inputs.weight_b.data();
    let r = linking.data();

    let mut activity = Vec::with_capacity(r.len());
    let mut threshold = Vec::with_capacity(r.len());
    let mut pulse = Vec::with_capacity(r.len());
    let mut output = state.output.data().to_vec();
    let prev_threshold = state.threshold.data();
    let mut summary = StepSummary::default();

    for i in 0..r.len() {
        let u = pool.internal_activity(wa[i], sa[i] + r[i], wb[i], sb[i] + r[i]);
        activity.push(u);
        let fires = u > prev_threshold[i];
        state.pulsed[i] = fires;
        if fires {
            let y = u - r[i] - 1.0;
            pulse.push(y);
            threshold.push(cfg.threshold_reset);
            if state.fired[i] {
                summary.refired += 1;
            } else {
                state.fired[i] = true;
                summary.newly_fired += 1;
                output[i] = if (sa[i] - sb[i]).abs() <= eps || (wa[i] - wb[i]).abs() <= eps {
                    sa[i]
                } else if y < 0.0 {
                    summary.clamped += 1;
                    0.0
                } else {
                    y
                };
            }
        } else {
            pulse.push(0.0);
            threshold.push(decay * prev_threshold[i]);
        }
    }

    let (w, h) = state.dims();
    state.activity = ScalarField::from_raw(w, h, activity);
    state.threshold = ScalarField::from_raw(w, h, threshold);
    state.pulse = ScalarField::from_raw(w, h, pulse);
    state.output = ScalarField::from_raw(w, h, output);
    state.iteration += 1;
    summary
}

/// One improved-model iteration applied to a copy of `state`.
pub fn idc_step(
    state: &NeuronState,
    stimulus_a: &ScalarField,
    stimulus_b: &ScalarField,
    weight_a: &ScalarField,
    weight_b: &ScalarField,
    cfg: &PcnnConfig,
) -> Result<(NeuronState, StepSummary)> {
    cfg.validate()?;
    let inputs = NetworkInputs::new(stimulus_a, stimulus_b, weight_a, weight_b)?;
    ensure_same_dims(state.dims(), inputs.dims())?;
    let mut next = state.clone();
    let summary = advance(&mut next, &inputs, &AdditivePool, cfg);
    Ok((next, summary))
}

/// Runs the improved (additive) model to completion.
pub fn run_idc(
    stimulus_a: &ScalarField,
    stimulus_b: &ScalarField,
    weight_a: &ScalarField,
    weight_b: &ScalarField,
    cfg: &PcnnConfig,
) -> Result<PcnnRun> {
    let inputs = NetworkInputs::new(stimulus_a, stimulus_b, weight_a, weight_b)?;
    Network::new(inputs, AdditivePool, *cfg)?.run()
}

/// Runs the multiplicative baseline to completion.
pub fn run_dc(
    stimulus_a: &ScalarField,
    stimulus_b: &ScalarField,
    weight_a: &ScalarField,
    weight_b: &ScalarField,
    cfg: &PcnnConfig,
) -> Result<PcnnRun> {
    let inputs = NetworkInputs::new(stimulus_a, stimulus_b, weight_a, weight_b)?;
    let pool = MultiplicativePool {
        level_factor: cfg.level_factor,
    };
    Network::new(inputs, pool, *cfg)?.run()
}

pub fn run_model(
    model: ModelKind,
    stimulus_a: &ScalarField,
    stimulus_b: &ScalarField,
    weight_a: &ScalarField,
    weight_b: &ScalarField,
    cfg: &PcnnConfig,
) -> Result<PcnnRun> {
    match model {
        ModelKind::Idc => run_idc(stimulus_a, stimulus_b, weight_a, weight_b, cfg),
        ModelKind::Dc => run_dc(stimulus_a, stimulus_b, weight_a, weight_b, cfg),
    }
}
