//! Model architecture configuration.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// How the two pooled encoder outputs feed the classification head.
///
/// `Concat` keeps the two orderings distinct (the head may still learn an
/// order-sensitive function); `Symmetric` sums them, making the logits
/// exactly invariant under input swap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadMode {
    Concat,
    Symmetric,
}

/// Transformer encoder + pair head dimensions. Parameter shapes are fully
/// determined by this struct, which is why `head_mode` lives here: the
/// head's dense layer is `2*model_dim` wide under `Concat` and `model_dim`
/// wide under `Symmetric`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub max_len: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub model_dim: usize,
    pub ff_dim: usize,
    pub dropout_rate: f64,
    pub num_classes: usize,
    pub head_mode: HeadMode,
    /// Parameter-initialization seed.
    pub seed: u64,
}

impl ModelConfig {
    /// The desk-scale configuration: 2 layers, 4 heads, width 64.
    pub fn desk_default(vocab_size: usize, seed: u64) -> Self {
        ModelConfig {
            vocab_size,
            max_len: 512,
            num_layers: 2,
            num_heads: 4,
            model_dim: 64,
            ff_dim: 256,
            dropout_rate: 0.1,
            num_classes: 2,
            head_mode: HeadMode::Concat,
            seed,
        }
    }

    /// The full-scale configuration: 6 layers, 12 heads, width 768.
    pub fn paper_scale(vocab_size: usize, seed: u64) -> Self {
        ModelConfig {
            vocab_size,
            max_len: 512,
            num_layers: 6,
            num_heads: 12,
            model_dim: 768,
            ff_dim: 3072,
            dropout_rate: 0.1,
            num_classes: 2,
            head_mode: HeadMode::Concat,
            seed,
        }
    }

    /// A minimal configuration for numerical tests: 1 layer, 1 head,
    /// width 8, no dropout.
    pub fn tiny(vocab_size: usize, max_len: usize, seed: u64) -> Self {
        ModelConfig {
            vocab_size,
            max_len,
            num_layers: 1,
            num_heads: 1,
            model_dim: 8,
            ff_dim: 32,
            dropout_rate: 0.0,
            num_classes: 2,
            head_mode: HeadMode::Concat,
            seed,
        }
    }

    pub fn with_head_mode(mut self, head_mode: HeadMode) -> Self {
        self.head_mode = head_mode;
        self
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.num_heads
    }

    /// Width of the pair-head dense input.
    pub fn head_in_dim(&self) -> usize {
        match self.head_mode {
            HeadMode::Concat => 2 * self.model_dim,
            HeadMode::Symmetric => self.model_dim,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.vocab_size == 0 || self.max_len == 0 || self.num_layers == 0 {
            return Err(ModelError::InvalidConfig(
                "vocab_size, max_len, and num_layers must be positive".into(),
            ));
        }
        if self.num_heads == 0 || self.model_dim % self.num_heads != 0 {
            return Err(ModelError::InvalidConfig(format!(
                "model_dim {} must be divisible by num_heads {}",
                self.model_dim, self.num_heads
            )));
        }
        if self.ff_dim == 0 {
            return Err(ModelError::InvalidConfig("ff_dim must be positive".into()));
        }
        if self.num_classes != 2 {
            return Err(ModelError::InvalidConfig(format!(
                "num_classes must be 2, got {}",
                self.num_classes
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(ModelError::InvalidConfig(format!(
                "dropout_rate {} must lie in [0,1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        assert!(ModelConfig::desk_default(31, 0).validate().is_ok());
        assert!(ModelConfig::paper_scale(31, 0).validate().is_ok());
        assert!(ModelConfig::tiny(10, 16, 0).validate().is_ok());
    }

    #[test]
    fn bad_configs_rejected() {
        let mut cfg = ModelConfig::desk_default(31, 0);
        cfg.num_heads = 5;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::desk_default(31, 0);
        cfg.num_classes = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::desk_default(31, 0);
        cfg.dropout_rate = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn head_in_dim_tracks_mode() {
        let cfg = ModelConfig::desk_default(31, 0);
        assert_eq!(cfg.head_in_dim(), 128);
        assert_eq!(
            cfg.with_head_mode(HeadMode::Symmetric).head_in_dim(),
            64
        );
    }
}
