//! Model and training hyper-parameters with their defaults, plus the
//! key=value config-file format (flags override file values downstream).

use std::collections::HashMap;

use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Word embedding dimension.
    pub word_dim: usize,
    /// Character embedding dimension.
    pub char_dim: usize,
    /// POS embedding dimension; 0 disables POS input entirely.
    pub pos_dim: usize,
    pub cnn_window: usize,
    pub cnn_filters: usize,
    pub encoder_layers: usize,
    /// Encoder size per direction; states are twice this wide.
    pub encoder_hidden: usize,
    pub decoder_layers: usize,
    pub decoder_hidden: usize,
    pub arc_mlp_dim: usize,
    pub label_mlp_dim: usize,
    /// Dropout on embeddings and recurrent layer outputs.
    pub dropout: f64,
    /// Dimension of precomputed external token vectors; 0 disables them.
    pub external_dim: usize,

    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch_size: usize,
    /// Learning-rate multiplier applied when the dev metric plateaus.
    pub decay_rate: f64,
    pub gradient_clip: f64,
    /// Probability of replacing a singleton word by UNK during training.
    pub unk_probability: f64,
    pub epochs: usize,
    /// Enforce the non-crossing constraint when decoding regular
    /// dependencies / constituents (auto-detected from training data).
    pub dep_projective: bool,
    pub const_projective: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            word_dim: 100,
            char_dim: 100,
            pos_dim: 100,
            cnn_window: 3,
            cnn_filters: 50,
            encoder_layers: 3,
            encoder_hidden: 512,
            decoder_layers: 1,
            decoder_hidden: 512,
            arc_mlp_dim: 512,
            label_mlp_dim: 128,
            dropout: 0.33,
            external_dim: 0,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.9,
            batch_size: 32,
            decay_rate: 0.75,
            gradient_clip: 5.0,
            unk_probability: 0.5,
            epochs: 100,
            dep_projective: false,
            const_projective: false,
        }
    }
}

impl ModelConfig {
    /// Width of the token representation fed to the first encoder layer.
    pub fn input_dim(&self) -> usize {
        self.cnn_filters + self.word_dim + self.pos_dim + self.external_dim
    }

    /// Width of one encoder state (both directions).
    pub fn state_dim(&self) -> usize {
        2 * self.encoder_hidden
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let required = [
            ("word_dim", self.word_dim),
            ("char_dim", self.char_dim),
            ("cnn_window", self.cnn_window),
            ("cnn_filters", self.cnn_filters),
            ("encoder_layers", self.encoder_layers),
            ("encoder_hidden", self.encoder_hidden),
            ("decoder_layers", self.decoder_layers),
            ("decoder_hidden", self.decoder_hidden),
            ("arc_mlp_dim", self.arc_mlp_dim),
            ("label_mlp_dim", self.label_mlp_dim),
            ("batch_size", self.batch_size),
        ];
        for (name, value) in required {
            if value == 0 {
                return Err(ModelError::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        let bad = |e: &dyn std::fmt::Display| {
            ModelError::Config(format!("bad value {value:?} for {key}: {e}"))
        };
        macro_rules! parse {
            ($field:ident) => {
                self.$field = value.parse().map_err(|e| bad(&e))?
            };
        }
        match key {
            "word_dim" => parse!(word_dim),
            "char_dim" => parse!(char_dim),
            "pos_dim" => parse!(pos_dim),
            "cnn_window" => parse!(cnn_window),
            "cnn_filters" => parse!(cnn_filters),
            "encoder_layers" => parse!(encoder_layers),
            "encoder_hidden" => parse!(encoder_hidden),
            "decoder_layers" => parse!(decoder_layers),
            "decoder_hidden" => parse!(decoder_hidden),
            "arc_mlp_dim" => parse!(arc_mlp_dim),
            "label_mlp_dim" => parse!(label_mlp_dim),
            "dropout" => parse!(dropout),
            "external_dim" => parse!(external_dim),
            "learning_rate" => parse!(learning_rate),
            "beta1" => parse!(beta1),
            "beta2" => parse!(beta2),
            "batch_size" => parse!(batch_size),
            "decay_rate" => parse!(decay_rate),
            "gradient_clip" => parse!(gradient_clip),
            "unk_probability" => parse!(unk_probability),
            "epochs" => parse!(epochs),
            "dep_projective" => parse!(dep_projective),
            "const_projective" => parse!(const_projective),
            _ => return Err(ModelError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` comments and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut config = ModelConfig::default();
        config.apply(text)?;
        Ok(config)
    }

    pub fn apply(&mut self, text: &str) -> Result<(), ModelError> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ModelError::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        self.validate()
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("word_dim".into(), self.word_dim.to_string()),
            ("char_dim".into(), self.char_dim.to_string()),
            ("pos_dim".into(), self.pos_dim.to_string()),
            ("cnn_window".into(), self.cnn_window.to_string()),
            ("cnn_filters".into(), self.cnn_filters.to_string()),
            ("encoder_layers".into(), self.encoder_layers.to_string()),
            ("encoder_hidden".into(), self.encoder_hidden.to_string()),
            ("decoder_layers".into(), self.decoder_layers.to_string()),
            ("decoder_hidden".into(), self.decoder_hidden.to_string()),
            ("arc_mlp_dim".into(), self.arc_mlp_dim.to_string()),
            ("label_mlp_dim".into(), self.label_mlp_dim.to_string()),
            ("dropout".into(), self.dropout.to_string()),
            ("external_dim".into(), self.external_dim.to_string()),
            ("learning_rate".into(), self.learning_rate.to_string()),
            ("beta1".into(), self.beta1.to_string()),
            ("beta2".into(), self.beta2.to_string()),
            ("batch_size".into(), self.batch_size.to_string()),
            ("decay_rate".into(), self.decay_rate.to_string()),
            ("gradient_clip".into(), self.gradient_clip.to_string()),
            ("unk_probability".into(), self.unk_probability.to_string()),
            ("epochs".into(), self.epochs.to_string()),
            ("dep_projective".into(), self.dep_projective.to_string()),
            ("const_projective".into(), self.const_projective.to_string()),
        ]
    }

    pub fn from_pairs(pairs: &HashMap<String, String>) -> Result<Self, ModelError> {
        let mut config = ModelConfig::default();
        for (k, v) in pairs {
            config.set(k, v)?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_hyperparameter_table() {
        let c = ModelConfig::default();
        assert_eq!(c.cnn_window, 3);
        assert_eq!(c.cnn_filters, 50);
        assert_eq!(c.encoder_layers, 3);
        assert_eq!(c.encoder_hidden, 512);
        assert_eq!(c.decoder_layers, 1);
        assert_eq!(c.decoder_hidden, 512);
        assert_eq!(c.dropout, 0.33);
        assert_eq!(c.word_dim, 100);
        assert_eq!(c.arc_mlp_dim, 512);
        assert_eq!(c.label_mlp_dim, 128);
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!((c.beta1, c.beta2), (0.9, 0.9));
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.decay_rate, 0.75);
        assert_eq!(c.gradient_clip, 5.0);
        assert_eq!(c.unk_probability, 0.5);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn parse_and_round_trip() {
        let parsed = ModelConfig::parse("word_dim = 16\nencoder_hidden=8\n# note\n").unwrap();
        assert_eq!(parsed.word_dim, 16);
        assert_eq!(parsed.encoder_hidden, 8);
        let text: String = parsed
            .to_pairs()
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        assert_eq!(ModelConfig::parse(&text).unwrap(), parsed);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ModelConfig::parse("beam_size=10\n").is_err());
    }

    #[test]
    fn zero_required_dim_rejected() {
        assert!(ModelConfig::parse("word_dim=0\n").is_err());
        // pos_dim and external_dim may be zero (disabled).
        assert!(ModelConfig::parse("pos_dim=0\nexternal_dim=0\n").is_ok());
    }
}
