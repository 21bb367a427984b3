//! Negative log-likelihood terms and the uncertainty-weighted multi-task
//! combination of the four module losses.

use thiserror::Error;

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("gold index {index} out of range for a distribution of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("misaligned inputs: {dists} distributions, {golds} gold indices, {tokens} decoder tokens")]
    Misaligned {
        dists: usize,
        golds: usize,
        tokens: usize,
    },
    #[error("loss bundle has a non-finite or negative entry")]
    InvalidBundle,
}

/// `-ln(max(dist[gold], PROB_FLOOR))`.
pub fn nll(dist: &[f64], gold: usize) -> Result<f64, LossError> {
    let p = *dist.get(gold).ok_or(LossError::IndexOutOfRange {
        index: gold,
        len: dist.len(),
    })?;
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(LossError::NotNormalized(total));
    }
    Ok(-libm::log(p.max(PROB_FLOOR)))
}

/// Sum of the per-step NLL over the decoding steps whose gold decoder token
/// is `type` or `predicate`; the graph module is only supervised there.
pub fn masked_nll_g<D: AsRef<[f64]>, T: AsRef<str>>(
    dists: &[D],
    golds: &[usize],
    decoder_tokens: &[T],
) -> Result<f64, LossError> {
    if dists.len() != golds.len() || dists.len() != decoder_tokens.len() {
        return Err(LossError::Misaligned {
            dists: dists.len(),
            golds: golds.len(),
            tokens: decoder_tokens.len(),
        });
    }
    let mut total = 0.0;
    for ((dist, &gold), token) in dists.iter().zip(golds).zip(decoder_tokens) {
        if matches!(token.as_ref(), "type" | "predicate") {
            total += nll(dist.as_ref(), gold)?;
        }
    }
    Ok(total)
}

/// The four module losses with their learned log standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBundle {
    pub decoder: f64,
    pub entity_detection: f64,
    pub filtering: f64,
    pub graph: f64,
    /// `s_i`, one per loss above, in the same order.
    pub log_stds: [f64; 4],
}

impl LossBundle {
    pub fn losses(&self) -> [f64; 4] {
        [self.decoder, self.entity_detection, self.filtering, self.graph]
    }

    /// Effective task weights `λ_i = exp(-s_i)`.
    pub fn weights(&self) -> [f64; 4] {
        self.log_stds.map(|s| libm::exp(-s))
    }

    fn validate(&self) -> Result<(), LossError> {
        let losses_ok = self.losses().iter().all(|l| l.is_finite() && *l >= 0.0);
        let stds_ok = self.log_stds.iter().all(|s| s.is_finite());
        if losses_ok && stds_ok {
            Ok(())
        } else {
            Err(LossError::InvalidBundle)
        }
    }
}

/// `Σ_i exp(-s_i) · L_i + s_i`.
pub fn multitask_loss(bundle: &LossBundle) -> Result<f64, LossError> {
    bundle.validate()?;
    Ok(bundle
        .losses()
        .iter()
        .zip(bundle.weights())
        .zip(bundle.log_stds)
        .map(|((l, w), s)| w * l + s)
        .sum())
}

/// `∂/∂s_i` of [`multitask_loss`]: `1 - exp(-s_i) · L_i`.
pub fn multitask_log_std_gradient(bundle: &LossBundle) -> Result<[f64; 4], LossError> {
    bundle.validate()?;
    let l = bundle.losses();
    let w = bundle.weights();
    Ok([0, 1, 2, 3].map(|i| 1.0 - w[i] * l[i]))
}
