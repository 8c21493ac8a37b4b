//! Individual attack with one optimal cloner per direction.
//!
//! On the forward pass Eve runs the symmetric optimal cloner `M`
//! (`σ₁² = σ₂² = ½`), sends clone 1 to Alice and keeps clone 2. On the
//! backward pass she runs the asymmetric optimal cloner `M′`, sends clone 1′
//! (noise `ω²`) to Bob and keeps clone 2′ (noise `1/(4ω²)`). She then either
//! mixes her two clones on a beam splitter and heterodynes the `−` port, or
//! heterodynes both clones directly.

use serde::{Deserialize, Serialize};

use crate::cloner::{
    sample_asymmetric_kept_clone, sample_asymmetric_sent_clone, sample_symmetric_pair, GqcmParams,
};
use crate::error::{domain, Error, Result};
use crate::phase_space::{heterodyne_coherent, BeamSplitter, ComplexAmplitude};
use crate::protocol::ChannelHook;
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Strategy {
    /// Beam splitter on the two kept clones, heterodyne both output ports.
    #[default]
    BsCombine,
    /// Heterodyne each kept clone separately.
    DirectHeterodyne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// `ω²`: noise of the clone `M′` forwards to Bob.
    pub omega_sq: f64,
    pub bs: BeamSplitter,
    pub strategy: Strategy,
}

impl AttackConfig {
    pub fn new(omega_sq: f64) -> Result<Self> {
        let cfg = Self {
            omega_sq,
            bs: BeamSplitter::balanced(),
            strategy: Strategy::BsCombine,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_bs(self, bs: BeamSplitter) -> Self {
        Self { bs, ..self }
    }

    pub fn with_strategy(self, strategy: Strategy) -> Self {
        Self { strategy, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        GqcmParams::optimal(self.omega_sq)?;
        BeamSplitter::new(self.bs.t(), self.bs.r())?;
        Ok(())
    }

    /// The backward cloner `M′`.
    pub fn backward_cloner(&self) -> Result<GqcmParams> {
        GqcmParams::optimal(self.omega_sq)
    }
}

/// What Eve holds and measures in one round.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EveRecord {
    /// Clone 2 of `M`.
    pub kept_forward_clone: Option<ComplexAmplitude>,
    /// Clone 2′ of `M′`.
    pub kept_backward_clone: Option<ComplexAmplitude>,
    pub minus_port_outcome: Option<ComplexAmplitude>,
    pub plus_port_outcome: Option<ComplexAmplitude>,
    /// Direct strategy only.
    pub forward_clone_outcome: Option<ComplexAmplitude>,
    /// Direct strategy only.
    pub backward_clone_outcome: Option<ComplexAmplitude>,
    pub alpha_estimate: Option<ComplexAmplitude>,
}

/// Symmetric optimal cloning of the forward state.
/// Returns `(to_alice, eve_kept)`; both are `input + μ`, `μ ~ Ω_{1/2}`.
pub fn intercept_forward(
    input: ComplexAmplitude,
    rng: &mut Stream,
) -> (ComplexAmplitude, ComplexAmplitude) {
    let pair = sample_symmetric_pair(input, rng);
    (pair.clone1, pair.clone2)
}

/// Asymmetric optimal cloning of the backward state.
/// Returns `(to_bob, eve_kept)` with noises `ω²` and `1/(4ω²)`.
pub fn intercept_backward(
    input: ComplexAmplitude,
    cfg: &AttackConfig,
    rng: &mut Stream,
) -> Result<(ComplexAmplitude, ComplexAmplitude)> {
    let to_bob = sample_asymmetric_sent_clone(input, cfg.omega_sq, rng)?;
    let kept = sample_asymmetric_kept_clone(input, cfg.omega_sq, rng)?;
    Ok((to_bob, kept))
}

fn kept_clones(record: &EveRecord) -> Result<(ComplexAmplitude, ComplexAmplitude)> {
    match (record.kept_backward_clone, record.kept_forward_clone) {
        (Some(b), Some(f)) => Ok((b, f)),
        _ => Err(Error::State(
            "both kept clones are required before measurement".into(),
        )),
    }
}

/// Mixes clone 2′ (first input) with clone 2 (second input) and
/// heterodynes both ports. The signal estimate is `minus / t`, i.e.
/// `√2 · minus` for the balanced splitter, whose `−` port carries
/// `(α + λ)/√2` with the reference cancelled.
pub fn combine_and_measure(
    record: &EveRecord,
    cfg: &AttackConfig,
    rng: &mut Stream,
) -> Result<EveRecord> {
    let (backward, forward) = kept_clones(record)?;
    let (plus, minus) = cfg.bs.apply(backward, forward);
    let minus_out = heterodyne_coherent(minus, rng);
    let plus_out = heterodyne_coherent(plus, rng);
    let t = cfg.bs.t();
    Ok(EveRecord {
        minus_port_outcome: Some(minus_out),
        plus_port_outcome: Some(plus_out),
        alpha_estimate: (t > 0.0).then(|| minus_out * (1.0 / t)),
        ..*record
    })
}

/// Heterodynes both kept clones; the estimate is the backward outcome minus
/// the forward outcome, which removes `β + μ`.
pub fn direct_heterodyne(record: &EveRecord, rng: &mut Stream) -> Result<EveRecord> {
    let (backward, forward) = kept_clones(record)?;
    let b = heterodyne_coherent(backward, rng);
    let f = heterodyne_coherent(forward, rng);
    Ok(EveRecord {
        backward_clone_outcome: Some(b),
        forward_clone_outcome: Some(f),
        alpha_estimate: Some(b - f),
        ..*record
    })
}

/// Runs the measurement selected by `cfg.strategy`.
pub fn measure(record: &EveRecord, cfg: &AttackConfig, rng: &mut Stream) -> Result<EveRecord> {
    match cfg.strategy {
        Strategy::BsCombine => combine_and_measure(record, cfg, rng),
        Strategy::DirectHeterodyne => direct_heterodyne(record, rng),
    }
}

/// The attack as a protocol channel hook. It runs identically in ON and OFF
/// rounds.
#[derive(Debug, Clone, Copy)]
pub struct AttackHook {
    cfg: AttackConfig,
}

impl AttackHook {
    pub fn config(&self) -> &AttackConfig {
        &self.cfg
    }
}

pub fn as_channel_hook(cfg: AttackConfig) -> Result<AttackHook> {
    cfg.validate()?;
    Ok(AttackHook { cfg })
}

impl ChannelHook for AttackHook {
    fn forward(
        &self,
        input: ComplexAmplitude,
        rng: &mut Stream,
        eve: &mut EveRecord,
    ) -> Result<ComplexAmplitude> {
        let (to_alice, kept) = intercept_forward(input, rng);
        eve.kept_forward_clone = Some(kept);
        Ok(to_alice)
    }

    fn backward(
        &self,
        input: ComplexAmplitude,
        rng: &mut Stream,
        eve: &mut EveRecord,
    ) -> Result<ComplexAmplitude> {
        let (to_bob, kept) = intercept_backward(input, &self.cfg, rng)?;
        eve.kept_backward_clone = Some(kept);
        Ok(to_bob)
    }

    fn finish(&self, eve: &mut EveRecord, rng: &mut Stream) -> Result<()> {
        *eve = measure(eve, &self.cfg, rng)?;
        Ok(())
    }
}

/// Beam splitter from its power transmissivity, for CLI and FFI callers.
pub fn beam_splitter(transmissivity: f64) -> Result<BeamSplitter> {
    BeamSplitter::from_transmissivity(transmissivity)
        .map_err(|_| domain(format!("invalid transmissivity {transmissivity}")))
}
