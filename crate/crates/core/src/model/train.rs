//! Multitask training: every sentence of the parallel corpus contributes
//! one example to each task per epoch (both losses are computed on every
//! sentence). Model selection keeps the checkpoint with the highest
//! harmonic mean of the two dev LAS values; the learning rate decays by
//! the configured factor after two consecutive epochs without improvement.

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::is_projective;
use crate::eval::{attachment_scores_corpus, EvalConfig};
use crate::nn::Adam;
use crate::tree::{AugmentedDepTree, DependencyTree};

use super::network::{Model, PredictOptions, SentenceInput};
use super::vocab::Vocab;
use super::{ModelConfig, ModelError};

/// One training sentence carrying both gold representations (and optional
/// precomputed external vectors).
#[derive(Debug, Clone)]
pub struct ParallelSentence {
    pub dep: DependencyTree,
    pub aug: AugmentedDepTree,
    pub external: Option<Vec<Vec<f64>>>,
}

impl ParallelSentence {
    pub fn new(dep: DependencyTree, aug: AugmentedDepTree) -> Result<Self, ModelError> {
        if dep.len() != aug.len() {
            return Err(ModelError::Data(format!(
                "gold trees disagree on sentence length ({} vs {})",
                dep.len(),
                aug.len()
            )));
        }
        for (a, b) in dep.tokens().iter().zip(aug.base.tokens()) {
            if a.form != b.form {
                return Err(ModelError::Data(format!(
                    "gold trees disagree on token {} ({:?} vs {:?})",
                    a.index, a.form, b.form
                )));
            }
        }
        Ok(ParallelSentence {
            dep,
            aug,
            external: None,
        })
    }

    pub fn with_external(mut self, vectors: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        if vectors.len() != self.dep.len() {
            return Err(ModelError::ExternalAlignment {
                tokens: self.dep.len(),
                vectors: vectors.len(),
            });
        }
        self.external = Some(vectors);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.dep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dep.is_empty()
    }

    /// External vectors converted to the model's float width.
    pub fn external_as<F: Float>(&self) -> Option<Vec<Vec<F>>> {
        self.external.as_ref().map(|sent| {
            sent.iter()
                .map(|v| v.iter().map(|&x| F::from(x).unwrap()).collect())
                .collect()
        })
    }
}

/// Development data for model selection; the two sides may hold different
/// sentences (they are evaluated independently).
#[derive(Debug, Clone, Default)]
pub struct DevSets {
    pub dep: Vec<DependencyTree>,
    pub aug: Vec<AugmentedDepTree>,
    pub dep_external: Option<Vec<Vec<Vec<f64>>>>,
    pub aug_external: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_las_dep: f64,
    pub dev_las_aug: f64,
    pub harmonic: f64,
    pub learning_rate: f64,
}

/// How many epochs without dev improvement trigger one decay step.
const DECAY_PATIENCE: usize = 2;

/// Trains a multitask model, returning the dev-selected checkpoint and the
/// per-epoch statistics.
pub fn train(
    corpus: &[ParallelSentence],
    dev: &DevSets,
    config: &ModelConfig,
    seed: u64,
    mut progress: impl FnMut(&EpochStats),
) -> Result<(Model<f32>, Vec<EpochStats>), ModelError> {
    if corpus.is_empty() {
        return Err(ModelError::Data("training corpus is empty".into()));
    }
    let mut config = config.clone();
    config.validate()?;
    // The constraint flags mirror the training data: continuous treebanks
    // come out fully projective and are decoded under the non-crossing
    // constraint.
    config.dep_projective = corpus.iter().all(|s| is_projective(&s.dep));
    config.const_projective = corpus.iter().all(|s| is_projective(&s.aug.base));

    let vocab = Vocab::build(corpus);
    let mut model: Model<f32> = Model::new(config.clone(), vocab, seed)?;
    let mut adam = Adam::new(
        model.params(),
        config.learning_rate as f32,
        config.beta1 as f32,
        config.beta2 as f32,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);

    let select_by_dev = !(dev.dep.is_empty() && dev.aug.is_empty());
    let mut best: Option<(f64, crate::nn::Params<f32>, usize)> = None;
    let mut since_improvement = 0usize;
    let mut stats = Vec::new();

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let mut inputs = Vec::with_capacity(chunk.len());
            for &idx in chunk {
                let sent = &corpus[idx];
                let mut input = SentenceInput::from_tokens(
                    &model.vocab,
                    &model.config,
                    sent.dep.tokens(),
                    sent.external_as::<f32>().as_deref(),
                )?;
                // Singleton words become UNK with the configured probability.
                for id in input.word_ids.iter_mut() {
                    if model.vocab.singletons[*id]
                        && rng.gen::<f64>() < config.unk_probability
                    {
                        *id = 0;
                    }
                }
                let gold = model.gold_ids(sent);
                inputs.push((input, gold));
            }
            let dropout_seed = rng.gen::<u64>();
            let (loss, mut grads) = model.training_gradients(&inputs, dropout_seed)?;
            if !loss.is_finite() {
                return Err(ModelError::NanLoss {
                    epoch,
                    batch: batches + 1,
                });
            }
            adam.step(
                model.params_mut(),
                &mut grads,
                Some(config.gradient_clip as f32),
            );
            epoch_loss += loss as f64;
            batches += 1;
        }

        let (dev_las_dep, dev_las_aug) = evaluate_dev(&model, dev)?;
        let harmonic = crate::eval::harmonic_mean(dev_las_dep, dev_las_aug);
        let epoch_stats = EpochStats {
            epoch,
            train_loss: epoch_loss / batches as f64,
            dev_las_dep,
            dev_las_aug,
            harmonic,
            learning_rate: adam.lr() as f64,
        };
        progress(&epoch_stats);
        stats.push(epoch_stats);

        if select_by_dev {
            let improved = best.as_ref().is_none_or(|(h, _, _)| harmonic > *h);
            if improved {
                best = Some((harmonic, model.params().clone(), epoch));
                since_improvement = 0;
            } else {
                since_improvement += 1;
                if since_improvement >= DECAY_PATIENCE {
                    adam.set_lr(adam.lr() * config.decay_rate as f32);
                    since_improvement = 0;
                }
            }
        }
    }

    if let Some((_, params, _)) = best {
        *model.params_mut() = params;
    }
    Ok((model, stats))
}

/// LAS of the current model on both dev sets (100 for an absent side, so
/// the harmonic mean reduces to the other side's behaviour).
fn evaluate_dev(model: &Model<f32>, dev: &DevSets) -> Result<(f64, f64), ModelError> {
    let mut dep_pred = Vec::with_capacity(dev.dep.len());
    for (i, gold) in dev.dep.iter().enumerate() {
        let external = dev
            .dep_external
            .as_ref()
            .map(|e| to_f32(&e[i]));
        let pred = model.predict(
            gold.tokens(),
            external.as_deref(),
            PredictOptions::default(),
        )?;
        dep_pred.push(pred.dependency);
    }
    let (_, las_dep) =
        attachment_scores_corpus(&dev.dep, &dep_pred, &EvalConfig::include_all())
            .map_err(|e| ModelError::Data(e.to_string()))?;

    let aug_gold: Vec<DependencyTree> = dev.aug.iter().map(|a| a.base.clone()).collect();
    let mut aug_pred = Vec::with_capacity(dev.aug.len());
    for (i, gold) in dev.aug.iter().enumerate() {
        let external = dev
            .aug_external
            .as_ref()
            .map(|e| to_f32(&e[i]));
        let pred = model.predict(
            gold.base.tokens(),
            external.as_deref(),
            PredictOptions::default(),
        )?;
        aug_pred.push(pred.augmented.base);
    }
    let (_, las_aug) =
        attachment_scores_corpus(&aug_gold, &aug_pred, &EvalConfig::include_all())
            .map_err(|e| ModelError::Data(e.to_string()))?;
    Ok((las_dep, las_aug))
}

fn to_f32(vectors: &[Vec<f64>]) -> Vec<Vec<f32>> {
    vectors
        .iter()
        .map(|v| v.iter().map(|&x| x as f32).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Token;

    fn sentence(forms: &[&str], heads: &[usize]) -> ParallelSentence {
        let tokens: Vec<Token> = forms
            .iter()
            .enumerate()
            .map(|(i, f)| Token::with_pos(i + 1, *f, "T"))
            .collect();
        let labels: Vec<String> = heads
            .iter()
            .map(|&h| if h == 0 { "root".into() } else { "dep".into() })
            .collect();
        let aug_labels: Vec<String> = heads
            .iter()
            .map(|&h| if h == 0 { "root".into() } else { "X#1".into() })
            .collect();
        let dep = DependencyTree::new(tokens.clone(), heads.to_vec(), labels).unwrap();
        let aug = AugmentedDepTree::without_unaries(
            DependencyTree::new(tokens, heads.to_vec(), aug_labels).unwrap(),
        );
        ParallelSentence::new(
            dep,
            AugmentedDepTree::new(aug.base, vec![None; forms.len()]).unwrap(),
        )
        .unwrap()
    }

    fn tiny_config() -> ModelConfig {
        let mut c = ModelConfig::default();
        c.word_dim = 8;
        c.char_dim = 6;
        c.pos_dim = 4;
        c.cnn_filters = 6;
        c.encoder_layers = 1;
        c.encoder_hidden = 8;
        c.decoder_hidden = 8;
        c.arc_mlp_dim = 8;
        c.label_mlp_dim = 6;
        c.dropout = 0.0;
        c.batch_size = 4;
        c.learning_rate = 0.01;
        c.epochs = 3;
        c
    }

    #[test]
    fn empty_corpus_rejected() {
        let err = train(&[], &DevSets::default(), &tiny_config(), 1, |_| {}).unwrap_err();
        assert!(matches!(err, ModelError::Data(_)));
    }

    #[test]
    fn misaligned_parallel_sentence_rejected() {
        let a = sentence(&["x", "y"], &[0, 1]);
        let b = sentence(&["x", "z"], &[0, 1]);
        assert!(ParallelSentence::new(a.dep, b.aug).is_err());
    }

    #[test]
    fn loss_decreases_over_epochs() {
        let corpus = vec![
            sentence(&["the", "dog", "runs"], &[2, 3, 0]),
            sentence(&["a", "cat", "sleeps"], &[2, 3, 0]),
        ];
        let dev = DevSets {
            dep: corpus.iter().map(|s| s.dep.clone()).collect(),
            aug: corpus.iter().map(|s| s.aug.clone()).collect(),
            dep_external: None,
            aug_external: None,
        };
        let (_, stats) = train(&corpus, &dev, &tiny_config(), 11, |_| {}).unwrap();
        assert!(stats.last().unwrap().train_loss < stats[0].train_loss);
    }

    #[test]
    fn projectivity_autodetected() {
        let proj = vec![sentence(&["a", "b"], &[2, 0])];
        let (model, _) = train(&proj, &DevSets::default(), &tiny_config(), 1, |_| {}).unwrap();
        assert!(model.config.dep_projective);
        let nonproj = vec![sentence(&["a", "b", "c", "d"], &[3, 0, 2, 1])];
        let (model, _) =
            train(&nonproj, &DevSets::default(), &tiny_config(), 1, |_| {}).unwrap();
        assert!(!model.config.dep_projective);
    }
}
