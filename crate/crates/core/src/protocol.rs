//! The two-way coherent-state protocol.
//!
//! Each round Bob sends a randomly displaced coherent reference `|β⟩` to
//! Alice. In an ON round Alice adds her signal displacement `α` and returns
//! the state; Bob heterodynes and subtracts `β`. In an OFF round Alice
//! heterodynes the reference herself and sends back a fresh coherent state
//! `|ϑ⟩`, so the two channel directions can be characterised separately.
//!
//! States travel as coherent-state labels. The vacuum and detector noise
//! (½ + ½ per quadrature) is added once, at each heterodyne.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::EveRecord;
use crate::error::{domain, Error, Result};
use crate::math::ComplexModulation;
use crate::phase_space::{heterodyne_coherent, ComplexAmplitude};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Alice's per-quadrature modulation variance `Σ²`.
    pub signal_var: f64,
    /// Per-quadrature variance of Bob's reference `β`.
    pub reference_var: f64,
    /// Probability `c` of an OFF round.
    pub off_probability: f64,
    pub rounds: u64,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            signal_var: 100.0,
            reference_var: 1000.0,
            off_probability: 0.1,
            rounds: 100_000,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.signal_var > 0.0) || !self.signal_var.is_finite() {
            return Err(domain(format!(
                "signal_var must be > 0, got {}",
                self.signal_var
            )));
        }
        if !(self.reference_var > 0.0) || !self.reference_var.is_finite() {
            return Err(domain(format!(
                "reference_var must be > 0, got {}",
                self.reference_var
            )));
        }
        if !(0.0..=1.0).contains(&self.off_probability) {
            return Err(domain(format!(
                "off_probability must be in [0, 1], got {}",
                self.off_probability
            )));
        }
        if self.rounds < 1 {
            return Err(domain("rounds must be >= 1"));
        }
        Ok(())
    }
}

/// An eavesdropper that replaces the channel on both passes of a round.
pub trait ChannelHook: Send + Sync + fmt::Debug {
    /// Bob → Alice pass. Returns what reaches Alice.
    fn forward(
        &self,
        input: ComplexAmplitude,
        rng: &mut Stream,
        eve: &mut EveRecord,
    ) -> Result<ComplexAmplitude>;
    /// Alice → Bob pass. Returns what reaches Bob.
    fn backward(
        &self,
        input: ComplexAmplitude,
        rng: &mut Stream,
        eve: &mut EveRecord,
    ) -> Result<ComplexAmplitude>;
    /// Called once both passes are done.
    fn finish(&self, eve: &mut EveRecord, rng: &mut Stream) -> Result<()>;
}

/// Per-quadrature Gaussian noise on each pass, or an eavesdropper hook
/// that replaces both.
#[derive(Debug, Clone, Default)]
pub struct ChannelModel {
    pub forward_noise: f64,
    pub backward_noise: f64,
    pub hook: Option<Arc<dyn ChannelHook>>,
}

impl ChannelModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn plain(forward_noise: f64, backward_noise: f64) -> Result<Self> {
        let ch = Self {
            forward_noise,
            backward_noise,
            hook: None,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn attacked(hook: impl ChannelHook + 'static) -> Self {
        Self {
            forward_noise: 0.0,
            backward_noise: 0.0,
            hook: Some(Arc::new(hook)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.forward_noise, self.backward_noise] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(domain(format!("channel noise must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Total plain noise `σ² + σ′²`.
    pub fn total_noise(&self) -> f64 {
        self.forward_noise + self.backward_noise
    }

    fn pass(
        &self,
        forward: bool,
        input: ComplexAmplitude,
        rng: &mut Stream,
        eve: &mut Option<EveRecord>,
    ) -> Result<ComplexAmplitude> {
        match (&self.hook, eve) {
            (Some(h), Some(rec)) if forward => h.forward(input, rng, rec),
            (Some(h), Some(rec)) => h.backward(input, rng, rec),
            _ => {
                let v = if forward {
                    self.forward_noise
                } else {
                    self.backward_noise
                };
                Ok(input + ComplexModulation::new(v)?.sample(rng))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundKind {
    On,
    Off,
}

impl fmt::Display for RoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoundKind::On => "ON",
            RoundKind::Off => "OFF",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub index: u64,
    pub kind: RoundKind,
    pub beta: ComplexAmplitude,
    /// ON only.
    pub alpha: Option<ComplexAmplitude>,
    /// Alice's heterodyne outcome `β′` (OFF only).
    pub alice_outcome: Option<ComplexAmplitude>,
    /// Re-prepared amplitude `ϑ` (OFF only).
    pub retransmit: Option<ComplexAmplitude>,
    /// Bob's heterodyne outcome `ζ`.
    pub bob_outcome: ComplexAmplitude,
    /// `α′ = ζ − β` (ON only).
    pub bob_estimate: Option<ComplexAmplitude>,
    pub eve_record: Option<EveRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub config: ProtocolConfig,
    pub records: Vec<RoundRecord>,
}

impl Transcript {
    pub fn on_rounds(&self) -> impl Iterator<Item = &RoundRecord> {
        self.records.iter().filter(|r| r.kind == RoundKind::On)
    }

    pub fn off_rounds(&self) -> impl Iterator<Item = &RoundRecord> {
        self.records.iter().filter(|r| r.kind == RoundKind::Off)
    }

    pub fn off_count(&self) -> usize {
        self.off_rounds().count()
    }

    pub fn on_count(&self) -> usize {
        self.on_rounds().count()
    }
}

/// One protocol round drawing everything from `rng`.
pub fn run_round(
    config: &ProtocolConfig,
    channel: &ChannelModel,
    rng: &mut Stream,
) -> Result<RoundRecord> {
    run_round_at(0, config, channel, rng)
}

fn run_round_at(
    index: u64,
    config: &ProtocolConfig,
    channel: &ChannelModel,
    rng: &mut Stream,
) -> Result<RoundRecord> {
    let off = rng.random_bool(config.off_probability);
    let reference = ComplexModulation::new(config.reference_var)?;
    let mut eve = channel.hook.as_ref().map(|_| EveRecord::default());

    let beta = reference.sample(rng);
    let at_alice = channel.pass(true, beta, rng, &mut eve)?;

    let record = if off {
        let alice_outcome = heterodyne_coherent(at_alice, rng);
        let theta = reference.sample(rng);
        let at_bob = channel.pass(false, theta, rng, &mut eve)?;
        let zeta = heterodyne_coherent(at_bob, rng);
        RoundRecord {
            index,
            kind: RoundKind::Off,
            beta,
            alpha: None,
            alice_outcome: Some(alice_outcome),
            retransmit: Some(theta),
            bob_outcome: zeta,
            bob_estimate: None,
            eve_record: None,
        }
    } else {
        let alpha = ComplexModulation::new(config.signal_var)?.sample(rng);
        let at_bob = channel.pass(false, at_alice + alpha, rng, &mut eve)?;
        let zeta = heterodyne_coherent(at_bob, rng);
        RoundRecord {
            index,
            kind: RoundKind::On,
            beta,
            alpha: Some(alpha),
            alice_outcome: None,
            retransmit: None,
            bob_outcome: zeta,
            bob_estimate: Some(zeta - beta),
            eve_record: None,
        }
    };

    let eve_record = match (&channel.hook, eve) {
        (Some(h), Some(mut rec)) => {
            h.finish(&mut rec, rng)?;
            Some(rec)
        }
        _ => None,
    };
    Ok(RoundRecord {
        eve_record,
        ..record
    })
}

/// Round `index` of a session, drawn from its own substream.
pub fn run_indexed_round(
    config: &ProtocolConfig,
    channel: &ChannelModel,
    index: u64,
) -> Result<RoundRecord> {
    let mut rng = substream(config.seed, index);
    run_round_at(index, config, channel, &mut rng)
}

/// Runs all rounds serially.
pub fn run_session(config: &ProtocolConfig, channel: &ChannelModel) -> Result<Transcript> {
    config.validate()?;
    channel.validate()?;
    let records = (0..config.rounds)
        .map(|i| run_indexed_round(config, channel, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Transcript {
        config: *config,
        records,
    })
}

/// Runs all rounds on `workers` threads. The transcript is identical to
/// [`run_session`] for any worker count.
pub fn run_session_parallel(
    config: &ProtocolConfig,
    channel: &ChannelModel,
    workers: usize,
) -> Result<Transcript> {
    config.validate()?;
    channel.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::State(format!("thread pool: {e}")))?;
    let records = pool.install(|| {
        (0..config.rounds)
            .into_par_iter()
            .map(|i| run_indexed_round(config, channel, i))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Transcript {
        config: *config,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    /// `σ̂²`, forward path.
    pub forward: f64,
    /// `σ̂′²`, backward path.
    pub backward: f64,
    pub total: f64,
    /// Error samples per quadrature in each estimate.
    pub forward_samples: usize,
    pub backward_samples: usize,
}

fn pooled_error_variance(
    pairs: impl Iterator<Item = (ComplexAmplitude, ComplexAmplitude)>,
) -> (f64, usize) {
    let mut sx = crate::math::SampleStats::new();
    let mut sp = crate::math::SampleStats::new();
    for (truth, est) in pairs {
        let e = est - truth;
        sx.push(e.x);
        sp.push(e.p);
    }
    let v = 0.5 * (sx.variance().unwrap_or(f64::NAN) + sp.variance().unwrap_or(f64::NAN));
    (v, sx.count() as usize)
}

/// Channel noise from OFF rounds: `Var(β′ − β) − 1` forward and
/// `Var(ζ − ϑ) − 1` backward, pooled over the two quadratures.
pub fn estimate_channel_noise(transcript: &Transcript) -> Result<NoiseEstimate> {
    let off = transcript.off_count();
    if off < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: off,
        });
    }
    let (fwd, nf) = pooled_error_variance(
        transcript
            .off_rounds()
            .filter_map(|r| Some((r.beta, r.alice_outcome?))),
    );
    let (bwd, nb) = pooled_error_variance(
        transcript
            .off_rounds()
            .filter_map(|r| Some((r.retransmit?, r.bob_outcome))),
    );
    let (forward, backward) = (fwd - 1.0, bwd - 1.0);
    Ok(NoiseEstimate {
        forward,
        backward,
        total: forward + backward,
        forward_samples: nf,
        backward_samples: nb,
    })
}

/// `(true, estimate)` pairs, one stream per quadrature.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadraturePairs {
    pub x: Vec<(f64, f64)>,
    pub p: Vec<(f64, f64)>,
}

impl QuadraturePairs {
    fn from_iter(it: impl Iterator<Item = (ComplexAmplitude, ComplexAmplitude)>) -> Self {
        let mut out = QuadraturePairs::default();
        for (t, e) in it {
            out.x.push((t.x, e.x));
            out.p.push((t.p, e.p));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Alice's `α` against Bob's `α′` over the ON rounds.
pub fn extract_on_pairs(transcript: &Transcript) -> Result<QuadraturePairs> {
    let pairs = QuadraturePairs::from_iter(
        transcript
            .on_rounds()
            .filter_map(|r| Some((r.alpha?, r.bob_estimate?))),
    );
    if pairs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(pairs)
}

/// Alice's `α` against Eve's estimate over the ON rounds.
pub fn extract_eve_pairs(transcript: &Transcript) -> Result<QuadraturePairs> {
    let pairs = QuadraturePairs::from_iter(
        transcript
            .on_rounds()
            .filter_map(|r| Some((r.alpha?, r.eve_record.as_ref()?.alpha_estimate?))),
    );
    if pairs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(pairs)
}
