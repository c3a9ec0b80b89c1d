//! The multitask network: a shared BiLSTM-CNN encoder over character,
//! word, POS and optional external embeddings; two task-specific LSTM
//! decoders (constituent-encoding and regular dependencies), each with a
//! biaffine pointer and a biaffine labeler; and a leaf-unary tag head over
//! the encoder states.
//!
//! Layout per step t (focus word w_t): the decoder LSTM reads the encoder
//! state of w_t and emits s_t; the pointer scores every position j in
//! 0..=n as `f1(s_t)^T W f2(h_j) + U^T f1(s_t) + V^T f2(h_j) + b` with
//! single-layer ELU perceptrons f1/f2; the labeler scores every label with
//! its own bilinear form over (g1(s_t), g2(h_p)) at the chosen head p.
//! Dropout (training only) applies to the concatenated input embeddings
//! and to the output of every recurrent layer.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nn::{embedding_init, glorot, Binding, Graph, ParamId, Params, Tensor, Value};
use crate::transition::{greedy_heads, ParseOptions};
use crate::tree::{AugmentedDepTree, ConstituentTree, DependencyTree, Token};

use super::config::ModelConfig;
use super::train::ParallelSentence;
use super::vocab::{Vocab, NONE_TAG};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Const,
    Dep,
}

impl Task {
    fn key(self) -> &'static str {
        match self {
            Task::Const => "const",
            Task::Dep => "dep",
        }
    }
}

#[derive(Clone, Copy)]
struct MlpIds {
    w: ParamId,
    b: ParamId,
}

#[derive(Clone, Copy)]
struct LstmCellIds {
    w: ParamId,
    u: ParamId,
    b: ParamId,
    hidden: usize,
}

#[derive(Clone, Copy)]
struct PointerIds {
    f1: MlpIds,
    f2: MlpIds,
    w: ParamId,
    u: ParamId,
    v: ParamId,
    b: ParamId,
}

#[derive(Clone, Copy)]
struct LabelerIds {
    g1: MlpIds,
    g2: MlpIds,
    /// `[L * dim, dim]`: rows grouped per label.
    w: ParamId,
    /// `[L, dim]`
    u: ParamId,
    /// `[L, dim]`
    v: ParamId,
    /// `[L]`
    b: ParamId,
    labels: usize,
}

struct DecoderIds {
    lstm: Vec<LstmCellIds>,
    pointer: PointerIds,
    labeler: LabelerIds,
}

struct NetIds {
    word_emb: ParamId,
    char_emb: ParamId,
    pos_emb: Option<ParamId>,
    cnn_w: ParamId,
    cnn_b: ParamId,
    root_state: ParamId,
    encoder: Vec<(LstmCellIds, LstmCellIds)>,
    dec_const: DecoderIds,
    dec_dep: DecoderIds,
    unary_w: ParamId,
    unary_b: ParamId,
}

/// The full parameter set plus its configuration and vocabularies.
pub struct Model<F> {
    pub config: ModelConfig,
    pub vocab: Vocab,
    params: Params<F>,
    ids: NetIds,
}

impl<F: Float> std::fmt::Debug for Model<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("config", &self.config)
            .field("parameters", &self.params.scalar_count())
            .finish()
    }
}

/// Decode-time switches; `None` falls back to the configuration flags
/// recorded at training time.
#[derive(Debug, Clone, Copy, Default)]
pub struct PredictOptions {
    pub projective: Option<bool>,
    pub single_root: bool,
}

/// Both output trees for one sentence.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub dependency: DependencyTree,
    pub constituent: ConstituentTree,
    pub augmented: AugmentedDepTree,
}

/// Token-level inputs after vocabulary lookup.
pub struct SentenceInput<F> {
    pub word_ids: Vec<usize>,
    pub char_ids: Vec<Vec<usize>>,
    pub pos_ids: Vec<usize>,
    pub external: Option<Vec<Vec<F>>>,
}

impl<F: Float> SentenceInput<F> {
    pub fn from_tokens(
        vocab: &Vocab,
        config: &ModelConfig,
        tokens: &[Token],
        external: Option<&[Vec<F>]>,
    ) -> Result<Self, ModelError> {
        let external = match (config.external_dim, external) {
            (0, _) => None,
            (dim, Some(vecs)) => {
                if vecs.len() != tokens.len() {
                    return Err(ModelError::ExternalAlignment {
                        tokens: tokens.len(),
                        vectors: vecs.len(),
                    });
                }
                for v in vecs {
                    if v.len() != dim {
                        return Err(ModelError::Dimension {
                            what: "external vector",
                            expected: dim,
                            got: v.len(),
                        });
                    }
                }
                Some(vecs.to_vec())
            }
            (dim, None) => {
                return Err(ModelError::Dimension {
                    what: "external vectors (required by external_dim)",
                    expected: dim,
                    got: 0,
                })
            }
        };
        Ok(SentenceInput {
            word_ids: vocab.word_ids(tokens),
            char_ids: tokens.iter().map(|t| vocab.char_ids(&t.form)).collect(),
            pos_ids: vocab.pos_ids(tokens),
            external,
        })
    }

    pub fn len(&self) -> usize {
        self.word_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_ids.is_empty()
    }
}

enum RunMode {
    Train { dropout: f64, seed: u64 },
    Grad,
    Inference,
}

struct Runner<'m, F: Float + 'static> {
    model: &'m Model<F>,
    graph: Graph<F>,
    binding: Binding,
    dropout: Option<(f64, ChaCha8Rng)>,
}

struct PointerPrep {
    /// Per position j: f2(h_j), W f2(h_j), V^T f2(h_j).
    f2: Vec<Value>,
    wf2: Vec<Value>,
    vf2: Vec<Value>,
}

impl<F: Float + 'static> Model<F> {
    pub fn new(config: ModelConfig, vocab: Vocab, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        if vocab.dep_labels.is_empty() || vocab.const_labels.is_empty() {
            return Err(ModelError::Data(
                "label sets are empty; was the vocabulary built from training data?".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params: Params<F> = Params::new();
        let c = &config;

        let word_emb = params.add(
            "embed.word",
            embedding_init(vocab.words.len(), c.word_dim, &mut rng),
        );
        let char_emb = params.add(
            "embed.char",
            embedding_init(vocab.chars.len(), c.char_dim, &mut rng),
        );
        let pos_emb = (c.pos_dim > 0).then(|| {
            params.add(
                "embed.pos",
                embedding_init(vocab.pos.len(), c.pos_dim, &mut rng),
            )
        });
        let cnn_w = params.add(
            "charcnn.w",
            glorot(&[c.cnn_filters, c.cnn_window * c.char_dim], &mut rng),
        );
        let cnn_b = params.add("charcnn.b", Tensor::zeros(&[c.cnn_filters]));
        let root_state = params.add(
            "encoder.root",
            crate::nn::uniform(&[c.state_dim()], (3.0 / c.state_dim() as f64).sqrt(), &mut rng),
        );

        let lstm_cell = |params: &mut Params<F>,
                             rng: &mut ChaCha8Rng,
                             name: String,
                             input: usize,
                             hidden: usize| {
            let w = params.add(format!("{name}.w"), glorot(&[4 * hidden, input], rng));
            let u = params.add(format!("{name}.u"), glorot(&[4 * hidden, hidden], rng));
            // Forget-gate bias starts at one.
            let mut bias = Tensor::zeros(&[4 * hidden]);
            for x in &mut bias.data_mut()[hidden..2 * hidden] {
                *x = F::one();
            }
            let b = params.add(format!("{name}.b"), bias);
            LstmCellIds { w, u, b, hidden }
        };

        let mut encoder = Vec::new();
        for layer in 0..c.encoder_layers {
            let input = if layer == 0 { c.input_dim() } else { c.state_dim() };
            let fwd = lstm_cell(
                &mut params,
                &mut rng,
                format!("encoder.l{layer}.fwd"),
                input,
                c.encoder_hidden,
            );
            let bwd = lstm_cell(
                &mut params,
                &mut rng,
                format!("encoder.l{layer}.bwd"),
                input,
                c.encoder_hidden,
            );
            encoder.push((fwd, bwd));
        }

        let mlp = |params: &mut Params<F>,
                       rng: &mut ChaCha8Rng,
                       name: String,
                       out: usize,
                       input: usize| MlpIds {
            w: params.add(format!("{name}.w"), glorot(&[out, input], rng)),
            b: params.add(format!("{name}.b"), Tensor::zeros(&[out])),
        };

        let decoder = |params: &mut Params<F>, rng: &mut ChaCha8Rng, task: Task, labels: usize| {
            let key = task.key();
            let mut lstm = Vec::new();
            for layer in 0..c.decoder_layers {
                let input = if layer == 0 { c.state_dim() } else { c.decoder_hidden };
                lstm.push(lstm_cell(
                    params,
                    rng,
                    format!("decoder.{key}.l{layer}"),
                    input,
                    c.decoder_hidden,
                ));
            }
            let pointer = PointerIds {
                f1: mlp(
                    params,
                    rng,
                    format!("pointer.{key}.f1"),
                    c.arc_mlp_dim,
                    c.decoder_hidden,
                ),
                f2: mlp(
                    params,
                    rng,
                    format!("pointer.{key}.f2"),
                    c.arc_mlp_dim,
                    c.state_dim(),
                ),
                w: params.add(
                    format!("pointer.{key}.w"),
                    glorot(&[c.arc_mlp_dim, c.arc_mlp_dim], rng),
                ),
                u: params.add(format!("pointer.{key}.u"), Tensor::zeros(&[c.arc_mlp_dim])),
                v: params.add(format!("pointer.{key}.v"), Tensor::zeros(&[c.arc_mlp_dim])),
                b: params.add(format!("pointer.{key}.b"), Tensor::zeros(&[1])),
            };
            let labeler = LabelerIds {
                g1: mlp(
                    params,
                    rng,
                    format!("labeler.{key}.g1"),
                    c.label_mlp_dim,
                    c.decoder_hidden,
                ),
                g2: mlp(
                    params,
                    rng,
                    format!("labeler.{key}.g2"),
                    c.label_mlp_dim,
                    c.state_dim(),
                ),
                w: params.add(
                    format!("labeler.{key}.w"),
                    glorot(&[labels * c.label_mlp_dim, c.label_mlp_dim], rng),
                ),
                u: params.add(
                    format!("labeler.{key}.u"),
                    glorot(&[labels, c.label_mlp_dim], rng),
                ),
                v: params.add(
                    format!("labeler.{key}.v"),
                    glorot(&[labels, c.label_mlp_dim], rng),
                ),
                b: params.add(format!("labeler.{key}.b"), Tensor::zeros(&[labels])),
                labels,
            };
            DecoderIds {
                lstm,
                pointer,
                labeler,
            }
        };

        let dec_const = decoder(&mut params, &mut rng, Task::Const, vocab.const_labels.len());
        let dec_dep = decoder(&mut params, &mut rng, Task::Dep, vocab.dep_labels.len());

        let unary_w = params.add(
            "unary.w",
            glorot(&[vocab.unary_tags.len(), c.state_dim()], &mut rng),
        );
        let unary_b = params.add("unary.b", Tensor::zeros(&[vocab.unary_tags.len()]));

        let ids = NetIds {
            word_emb,
            char_emb,
            pos_emb,
            cnn_w,
            cnn_b,
            root_state,
            encoder,
            dec_const,
            dec_dep,
            unary_w,
            unary_b,
        };
        Ok(Model {
            config,
            vocab,
            params,
            ids,
        })
    }

    pub fn params(&self) -> &Params<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params<F> {
        &mut self.params
    }

    fn runner(&self, mode: RunMode) -> Runner<'_, F> {
        let (graph, dropout) = match mode {
            RunMode::Train { dropout, seed } => (
                Graph::new(),
                (dropout > 0.0).then(|| (dropout, ChaCha8Rng::seed_from_u64(seed))),
            ),
            RunMode::Grad => (Graph::new(), None),
            RunMode::Inference => (Graph::inference(), None),
        };
        let mut graph = graph;
        let binding = self.params.bind(&mut graph);
        Runner {
            model: self,
            graph,
            binding,
            dropout,
        }
    }

    /// Materialised encoder states (h_0..h_n), for inspection and tests.
    pub fn encode_states(
        &self,
        tokens: &[Token],
        external: Option<&[Vec<F>]>,
    ) -> Result<Vec<Vec<F>>, ModelError> {
        let input = SentenceInput::from_tokens(&self.vocab, &self.config, tokens, external)?;
        let mut run = self.runner(RunMode::Inference);
        let states = run.encode(&input);
        Ok(states
            .iter()
            .map(|&v| run.graph.value(v).data().to_vec())
            .collect())
    }

    /// Raw pointer score rows (one per focus word, each over 0..=n).
    pub fn pointer_score_rows(
        &self,
        tokens: &[Token],
        external: Option<&[Vec<F>]>,
        task: Task,
    ) -> Result<Vec<Vec<F>>, ModelError> {
        let input = SentenceInput::from_tokens(&self.vocab, &self.config, tokens, external)?;
        let mut run = self.runner(RunMode::Inference);
        let states = run.encode(&input);
        let rows = run.pointer_rows(task, &states);
        Ok(rows
            .iter()
            .map(|&v| run.graph.value(v).data().to_vec())
            .collect())
    }

    /// Softmaxed pointer distributions (the attention vectors).
    pub fn pointer_distributions(
        &self,
        tokens: &[Token],
        external: Option<&[Vec<F>]>,
        task: Task,
    ) -> Result<Vec<Vec<F>>, ModelError> {
        let input = SentenceInput::from_tokens(&self.vocab, &self.config, tokens, external)?;
        let mut run = self.runner(RunMode::Inference);
        let states = run.encode(&input);
        let rows = run.pointer_rows(task, &states);
        Ok(rows
            .into_iter()
            .map(|v| {
                let soft = run.graph.softmax(v);
                run.graph.value(soft).data().to_vec()
            })
            .collect())
    }

    /// Leaf-unary tag scores per token.
    pub fn leaf_unary_score_rows(
        &self,
        tokens: &[Token],
        external: Option<&[Vec<F>]>,
    ) -> Result<Vec<Vec<F>>, ModelError> {
        let input = SentenceInput::from_tokens(&self.vocab, &self.config, tokens, external)?;
        let mut run = self.runner(RunMode::Inference);
        let states = run.encode(&input);
        Ok((1..=input.len())
            .map(|i| {
                let s = run.unary_scores(states[i]);
                run.graph.value(s).data().to_vec()
            })
            .collect())
    }

    /// Summed multitask loss over a batch under teacher forcing, without
    /// dropout or UNK replacement (the deterministic objective).
    pub fn loss(&self, batch: &[ParallelSentence]) -> Result<F, ModelError> {
        let mut run = self.runner(RunMode::Inference);
        let loss = run.batch_loss(batch, None)?;
        Ok(run.graph.value(loss).item())
    }

    /// Per-objective losses of a single sentence.
    pub fn loss_breakdown(&self, sent: &ParallelSentence) -> Result<LossBreakdown<F>, ModelError> {
        let mut run = self.runner(RunMode::Inference);
        let input = SentenceInput::from_tokens(
            &self.vocab,
            &self.config,
            sent.dep.tokens(),
            sent.external_as::<F>().as_deref(),
        )?;
        let gold = self.gold_ids(sent);
        let terms = run.sentence_loss_terms(&input, &gold)?;
        let sum = |vals: &[Value]| -> F {
            vals.iter()
                .map(|&v| run.graph.value(v).item())
                .fold(F::zero(), |a, b| a + b)
        };
        Ok(LossBreakdown {
            pointer_const: sum(&terms.pointer_const),
            labeler_const: sum(&terms.labeler_const),
            pointer_dep: sum(&terms.pointer_dep),
            labeler_dep: sum(&terms.labeler_dep),
            leaf_unary: sum(&terms.unary),
        })
    }

    /// Deterministic loss plus its gradient for every parameter.
    pub fn loss_and_gradients(
        &self,
        batch: &[ParallelSentence],
    ) -> Result<(F, Vec<Tensor<F>>), ModelError> {
        let mut run = self.runner(RunMode::Grad);
        let loss = run.batch_loss(batch, None)?;
        let value = run.graph.value(loss).item();
        let grads = run.graph.backward(loss);
        Ok((value, run.binding.gradients(&self.params, &grads)))
    }

    /// Training-mode loss and gradients: dropout active, word ids already
    /// UNK-replaced by the caller.
    pub(super) fn training_gradients(
        &self,
        inputs: &[(SentenceInput<F>, GoldIds)],
        dropout_seed: u64,
    ) -> Result<(F, Vec<Tensor<F>>), ModelError> {
        let mut run = self.runner(RunMode::Train {
            dropout: self.config.dropout,
            seed: dropout_seed,
        });
        let mut terms = Vec::new();
        for (input, gold) in inputs {
            terms.push(run.sentence_loss(input, gold)?);
        }
        let sum = run.graph.add_n(&terms);
        let loss = run
            .graph
            .scale(sum, F::from(1.0 / inputs.len() as f64).unwrap());
        let value = run.graph.value(loss).item();
        let grads = run.graph.backward(loss);
        Ok((value, run.binding.gradients(&self.params, &grads)))
    }

    /// Parses one sentence into both representations.
    pub fn predict(
        &self,
        tokens: &[Token],
        external: Option<&[Vec<F>]>,
        options: PredictOptions,
    ) -> Result<Prediction, ModelError> {
        if tokens.is_empty() {
            return Err(ModelError::Data("cannot parse an empty sentence".into()));
        }
        let n = tokens.len();
        let input = SentenceInput::from_tokens(&self.vocab, &self.config, tokens, external)?;
        let mut run = self.runner(RunMode::Inference);
        let states = run.encode(&input);

        let decode_task = |task: Task, run: &mut Runner<'_, F>| {
            let prep = run.pointer_prep(task, &states);
            let decoder_states = run.decoder_states(task, &states);
            let score_rows: Vec<Vec<f64>> = decoder_states
                .iter()
                .map(|&s_t| {
                    let row = run.pointer_scores(task, s_t, &prep);
                    run.graph
                        .value(row)
                        .data()
                        .iter()
                        .map(|x| x.to_f64().unwrap())
                        .collect()
                })
                .collect();
            let projective = options.projective.unwrap_or(match task {
                Task::Const => self.config.const_projective,
                Task::Dep => self.config.dep_projective,
            });
            let opts = ParseOptions {
                projective,
                single_root: options.single_root,
            };
            let heads = greedy_heads(n, |state| score_rows[state.focus() - 1].clone(), opts);
            let lexicon = match task {
                Task::Const => &self.vocab.const_labels,
                Task::Dep => &self.vocab.dep_labels,
            };
            let labels: Vec<String> = (0..n)
                .map(|t| {
                    let scores = run.label_scores(task, decoder_states[t], states[heads[t]]);
                    let data = run.graph.value(scores).data();
                    let best = argmax(data);
                    lexicon.entry(best).to_string()
                })
                .collect();
            (heads, labels)
        };

        let (dep_heads, dep_labels) = decode_task(Task::Dep, &mut run);
        let dependency = DependencyTree::new(tokens.to_vec(), dep_heads, dep_labels)
            .expect("greedy decoding yields a valid tree");

        let (aug_heads, aug_labels) = decode_task(Task::Const, &mut run);
        let base = DependencyTree::new(tokens.to_vec(), aug_heads, aug_labels)
            .expect("greedy decoding yields a valid tree");
        let leaf_unaries: Vec<Option<String>> = (1..=n)
            .map(|i| {
                let scores = run.unary_scores(states[i]);
                let tag = self
                    .vocab
                    .unary_tags
                    .entry(argmax(run.graph.value(scores).data()));
                (tag != NONE_TAG).then(|| tag.to_string())
            })
            .collect();
        let augmented = AugmentedDepTree::new(base, leaf_unaries).expect("aligned by construction");
        let constituent = crate::encoding::decode(&augmented).into_tree();
        Ok(Prediction {
            dependency,
            constituent,
            augmented,
        })
    }

    /// Builds the teacher-forcing targets for one sentence.
    pub(super) fn gold_ids(&self, sent: &ParallelSentence) -> GoldIds {
        GoldIds {
            dep_heads: sent.dep.heads().to_vec(),
            dep_labels: sent
                .dep
                .labels()
                .iter()
                .map(|l| self.vocab.dep_labels.id_or_unk(l))
                .collect(),
            aug_heads: sent.aug.base.heads().to_vec(),
            aug_labels: sent
                .aug
                .base
                .labels()
                .iter()
                .map(|l| self.vocab.const_labels.id_or_unk(l))
                .collect(),
            unary: sent
                .aug
                .leaf_unaries
                .iter()
                .map(|lu| lu.as_deref().map_or(0, |c| self.vocab.unary_tags.id_or_unk(c)))
                .collect(),
        }
    }
}

fn argmax<F: Float>(data: &[F]) -> usize {
    let mut best = 0;
    for (i, &x) in data.iter().enumerate().skip(1) {
        if x > data[best] {
            best = i;
        }
    }
    best
}

/// Gold targets as vocabulary ids.
pub(super) struct GoldIds {
    pub dep_heads: Vec<usize>,
    pub dep_labels: Vec<usize>,
    pub aug_heads: Vec<usize>,
    pub aug_labels: Vec<usize>,
    pub unary: Vec<usize>,
}

#[derive(Default)]
struct LossTerms {
    pointer_const: Vec<Value>,
    labeler_const: Vec<Value>,
    pointer_dep: Vec<Value>,
    labeler_dep: Vec<Value>,
    unary: Vec<Value>,
}

impl LossTerms {
    fn all(&self) -> Vec<Value> {
        let mut out = Vec::new();
        out.extend(&self.pointer_const);
        out.extend(&self.labeler_const);
        out.extend(&self.pointer_dep);
        out.extend(&self.labeler_dep);
        out.extend(&self.unary);
        out
    }
}

/// Per-objective loss values for one sentence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<F> {
    pub pointer_const: F,
    pub labeler_const: F,
    pub pointer_dep: F,
    pub labeler_dep: F,
    pub leaf_unary: F,
}

impl<F: Float> LossBreakdown<F> {
    pub fn total(&self) -> F {
        self.pointer_const + self.labeler_const + self.pointer_dep + self.labeler_dep
            + self.leaf_unary
    }
}

impl<'m, F: Float + 'static> Runner<'m, F> {
    fn maybe_dropout(&mut self, v: Value) -> Value {
        let Some((p, rng)) = self.dropout.as_mut() else {
            return v;
        };
        let p = *p;
        let keep = F::from(1.0 / (1.0 - p)).unwrap();
        let len = self.graph.value(v).len();
        let mask: Vec<F> = (0..len)
            .map(|_| {
                if rng.gen::<f64>() < p {
                    F::zero()
                } else {
                    keep
                }
            })
            .collect();
        let mask = self.graph.leaf(Tensor::vector(mask));
        self.graph.mul(v, mask)
    }

    fn mlp(&mut self, ids: MlpIds, x: Value) -> Value {
        let wx = self.graph.matvec(self.binding[ids.w], x);
        let pre = self.graph.add(wx, self.binding[ids.b]);
        self.graph.elu(pre)
    }

    fn lstm_step(
        &mut self,
        cell: LstmCellIds,
        x: Value,
        h_prev: Value,
        c_prev: Value,
    ) -> (Value, Value) {
        let hidden = cell.hidden;
        let wx = self.graph.matvec(self.binding[cell.w], x);
        let uh = self.graph.matvec(self.binding[cell.u], h_prev);
        let sum = self.graph.add(wx, uh);
        let pre = self.graph.add(sum, self.binding[cell.b]);
        let i_pre = self.graph.slice(pre, 0, hidden);
        let f_pre = self.graph.slice(pre, hidden, hidden);
        let g_pre = self.graph.slice(pre, 2 * hidden, hidden);
        let o_pre = self.graph.slice(pre, 3 * hidden, hidden);
        let i = self.graph.sigmoid(i_pre);
        let f = self.graph.sigmoid(f_pre);
        let g = self.graph.tanh(g_pre);
        let o = self.graph.sigmoid(o_pre);
        let fc = self.graph.mul(f, c_prev);
        let ig = self.graph.mul(i, g);
        let c = self.graph.add(fc, ig);
        let tc = self.graph.tanh(c);
        let h = self.graph.mul(o, tc);
        (h, c)
    }

    fn lstm_pass(&mut self, cell: LstmCellIds, inputs: &[Value], reverse: bool) -> Vec<Value> {
        let zero = self.graph.leaf(Tensor::zeros(&[cell.hidden]));
        let (mut h, mut c) = (zero, zero);
        let mut out = vec![zero; inputs.len()];
        let order: Vec<usize> = if reverse {
            (0..inputs.len()).rev().collect()
        } else {
            (0..inputs.len()).collect()
        };
        for t in order {
            let (nh, nc) = self.lstm_step(cell, inputs[t], h, c);
            h = nh;
            c = nc;
            out[t] = h;
        }
        out
    }

    /// Character CNN: embed, pad with `window - 1` zero vectors on each
    /// side, convolve, tanh, max-pool over positions.
    fn char_repr(&mut self, char_ids: &[usize]) -> Value {
        let c = &self.model.config;
        let table = self.binding[self.model.ids.char_emb];
        let zero = self.graph.leaf(Tensor::zeros(&[c.char_dim]));
        let pad = c.cnn_window - 1;
        let mut seq = vec![zero; pad];
        for &id in char_ids {
            let e = self.graph.row(table, id);
            seq.push(e);
        }
        seq.extend(std::iter::repeat(zero).take(pad));
        let mut positions = Vec::new();
        for window in seq.windows(c.cnn_window) {
            let cat = self.graph.concat(window);
            let conv = self.graph.matvec(self.binding[self.model.ids.cnn_w], cat);
            let pre = self.graph.add(conv, self.binding[self.model.ids.cnn_b]);
            positions.push(self.graph.tanh(pre));
        }
        self.graph.max_elem(&positions)
    }

    /// Encoder states h_0..h_n (h_0 is the learned ROOT vector).
    fn encode(&mut self, input: &SentenceInput<F>) -> Vec<Value> {
        let n = input.len();
        let mut xs = Vec::with_capacity(n);
        for i in 0..n {
            let mut parts = Vec::with_capacity(4);
            parts.push(self.char_repr(&input.char_ids[i]));
            let word_table = self.binding[self.model.ids.word_emb];
            parts.push(self.graph.row(word_table, input.word_ids[i]));
            if let Some(pos_emb) = self.model.ids.pos_emb {
                let pos_table = self.binding[pos_emb];
                parts.push(self.graph.row(pos_table, input.pos_ids[i]));
            }
            if let Some(external) = &input.external {
                parts.push(self.graph.leaf(Tensor::vector(external[i].clone())));
            }
            let x = self.graph.concat(&parts);
            xs.push(self.maybe_dropout(x));
        }
        let mut seq = xs;
        for &(fwd, bwd) in &self.model.ids.encoder {
            let f = self.lstm_pass(fwd, &seq, false);
            let b = self.lstm_pass(bwd, &seq, true);
            seq = f
                .into_iter()
                .zip(b)
                .map(|(hf, hb)| {
                    let h = self.graph.concat(&[hf, hb]);
                    self.maybe_dropout(h)
                })
                .collect();
        }
        let root = self.binding[self.model.ids.root_state];
        let mut states = Vec::with_capacity(seq.len() + 1);
        states.push(root);
        states.extend(seq);
        states
    }

    fn decoder_ids(&self, task: Task) -> &'m DecoderIds {
        match task {
            Task::Const => &self.model.ids.dec_const,
            Task::Dep => &self.model.ids.dec_dep,
        }
    }

    /// Decoder states s_1..s_n; step t reads the encoder state of the
    /// focus word w_t.
    fn decoder_states(&mut self, task: Task, states: &[Value]) -> Vec<Value> {
        let cells = self.decoder_ids(task).lstm.clone();
        let mut seq: Vec<Value> = states[1..].to_vec();
        for cell in cells {
            seq = self.lstm_pass(cell, &seq, false);
            seq = seq.into_iter().map(|h| self.maybe_dropout(h)).collect();
        }
        seq
    }

    fn pointer_prep(&mut self, task: Task, states: &[Value]) -> PointerPrep {
        let ptr = self.decoder_ids(task).pointer;
        let mut f2 = Vec::with_capacity(states.len());
        let mut wf2 = Vec::with_capacity(states.len());
        let mut vf2 = Vec::with_capacity(states.len());
        for &h in states {
            let f = self.mlp(ptr.f2, h);
            f2.push(f);
            wf2.push(self.graph.matvec(self.binding[ptr.w], f));
            vf2.push(self.graph.dot(self.binding[ptr.v], f));
        }
        PointerPrep { f2, wf2, vf2 }
    }

    fn pointer_scores(&mut self, task: Task, s_t: Value, prep: &PointerPrep) -> Value {
        let ptr = self.decoder_ids(task).pointer;
        let f1 = self.mlp(ptr.f1, s_t);
        let uf1 = self.graph.dot(self.binding[ptr.u], f1);
        let bias = self.binding[ptr.b];
        let scores: Vec<Value> = (0..prep.f2.len())
            .map(|j| {
                let bilinear = self.graph.dot(f1, prep.wf2[j]);
                let a = self.graph.add(bilinear, uf1);
                let b = self.graph.add(a, prep.vf2[j]);
                self.graph.add(b, bias)
            })
            .collect();
        self.graph.concat(&scores)
    }

    /// All pointer score rows for a sentence (step t over positions 0..=n).
    fn pointer_rows(&mut self, task: Task, states: &[Value]) -> Vec<Value> {
        let prep = self.pointer_prep(task, states);
        let decoder_states = self.decoder_states(task, states);
        decoder_states
            .into_iter()
            .map(|s_t| self.pointer_scores(task, s_t, &prep))
            .collect()
    }

    /// Per-label biaffine scores for the arc (s_t, h_p).
    fn label_scores(&mut self, task: Task, s_t: Value, h_p: Value) -> Value {
        let lab = self.decoder_ids(task).labeler;
        let dim = self.model.config.label_mlp_dim;
        let g1 = self.mlp(lab.g1, s_t);
        let g2 = self.mlp(lab.g2, h_p);
        let wg2 = self.graph.matvec(self.binding[lab.w], g2);
        let bilinear: Vec<Value> = (0..lab.labels)
            .map(|l| {
                let wl = self.graph.slice(wg2, l * dim, dim);
                self.graph.dot(g1, wl)
            })
            .collect();
        let bilinear = self.graph.concat(&bilinear);
        let ug1 = self.graph.matvec(self.binding[lab.u], g1);
        let vg2 = self.graph.matvec(self.binding[lab.v], g2);
        let a = self.graph.add(bilinear, ug1);
        let b = self.graph.add(a, vg2);
        self.graph.add(b, self.binding[lab.b])
    }

    fn unary_scores(&mut self, h_i: Value) -> Value {
        let w = self.binding[self.model.ids.unary_w];
        let b = self.binding[self.model.ids.unary_b];
        let wx = self.graph.matvec(w, h_i);
        self.graph.add(wx, b)
    }

    /// The four cross-entropy term groups of one sentence (plus the
    /// leaf-unary tagger terms), under teacher forcing.
    fn sentence_loss_terms(
        &mut self,
        input: &SentenceInput<F>,
        gold: &GoldIds,
    ) -> Result<LossTerms, ModelError> {
        let n = input.len();
        if n == 0 {
            return Err(ModelError::Data("empty sentence in training batch".into()));
        }
        let states = self.encode(input);
        let mut terms = LossTerms::default();
        for (task, heads, labels) in [
            (Task::Const, &gold.aug_heads, &gold.aug_labels),
            (Task::Dep, &gold.dep_heads, &gold.dep_labels),
        ] {
            let prep = self.pointer_prep(task, &states);
            let decoder_states = self.decoder_states(task, &states);
            let (pointer, labeler) = match task {
                Task::Const => (&mut terms.pointer_const, &mut terms.labeler_const),
                Task::Dep => (&mut terms.pointer_dep, &mut terms.labeler_dep),
            };
            for t in 0..n {
                let scores = self.pointer_scores(task, decoder_states[t], &prep);
                pointer.push(self.graph.cross_entropy(scores, heads[t]));
                let label_scores = self.label_scores(task, decoder_states[t], states[heads[t]]);
                labeler.push(self.graph.cross_entropy(label_scores, labels[t]));
            }
        }
        for t in 0..n {
            let scores = self.unary_scores(states[t + 1]);
            terms.unary.push(self.graph.cross_entropy(scores, gold.unary[t]));
        }
        Ok(terms)
    }

    fn sentence_loss(
        &mut self,
        input: &SentenceInput<F>,
        gold: &GoldIds,
    ) -> Result<Value, ModelError> {
        let terms = self.sentence_loss_terms(input, gold)?;
        Ok(self.graph.add_n(&terms.all()))
    }

    fn batch_loss(
        &mut self,
        batch: &[ParallelSentence],
        scale: Option<F>,
    ) -> Result<Value, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::Data("empty batch".into()));
        }
        let mut terms = Vec::new();
        for sent in batch {
            let input = SentenceInput::from_tokens(
                &self.model.vocab,
                &self.model.config,
                sent.dep.tokens(),
                sent.external_as::<F>().as_deref(),
            )?;
            let gold = self.model.gold_ids(sent);
            terms.push(self.sentence_loss(&input, &gold)?);
        }
        let sum = self.graph.add_n(&terms);
        Ok(match scale {
            Some(s) => self.graph.scale(sum, s),
            None => sum,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::train::ParallelSentence;
    use crate::tree::{AugmentedDepTree, DependencyTree};

    fn tiny_config() -> ModelConfig {
        let mut c = ModelConfig::default();
        c.word_dim = 6;
        c.char_dim = 5;
        c.pos_dim = 4;
        c.cnn_filters = 7;
        c.encoder_layers = 2;
        c.encoder_hidden = 8;
        c.decoder_hidden = 8;
        c.arc_mlp_dim = 6;
        c.label_mlp_dim = 5;
        c.dropout = 0.0;
        c
    }

    fn toy_sentence(forms: &[&str]) -> ParallelSentence {
        let tokens: Vec<Token> = forms
            .iter()
            .enumerate()
            .map(|(i, f)| Token::with_pos(i + 1, *f, "T"))
            .collect();
        let n = forms.len();
        let heads: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { 1 }).collect();
        let labels: Vec<String> = (0..n)
            .map(|i| if i == 0 { "root".into() } else { "dep".into() })
            .collect();
        let dep = DependencyTree::new(tokens, heads, labels).unwrap();
        let aug_labels: Vec<String> = (0..n)
            .map(|i| if i == 0 { "root".into() } else { "X#1".into() })
            .collect();
        let aug = AugmentedDepTree::new(
            DependencyTree::new(dep.tokens().to_vec(), dep.heads().to_vec(), aug_labels).unwrap(),
            vec![None; n],
        )
        .unwrap();
        ParallelSentence::new(dep, aug).unwrap()
    }

    fn tiny_model() -> Model<f32> {
        let corpus = vec![toy_sentence(&["a", "bb", "c"]), toy_sentence(&["dd", "e"])];
        let vocab = Vocab::build(&corpus);
        Model::new(tiny_config(), vocab, 7).unwrap()
    }

    #[test]
    fn encoder_shapes() {
        let model = tiny_model();
        let tokens: Vec<Token> = ["a", "bb", "c", "zz", "q"]
            .iter()
            .enumerate()
            .map(|(i, f)| Token::with_pos(i + 1, *f, "T"))
            .collect();
        let states = model.encode_states(&tokens, None).unwrap();
        assert_eq!(states.len(), 6);
        for s in &states {
            assert_eq!(s.len(), 2 * model.config.encoder_hidden);
        }
    }

    #[test]
    fn one_char_words_are_supported() {
        let model = tiny_model();
        let tokens = vec![Token::with_pos(1, "a", "T")];
        let states = model.encode_states(&tokens, None).unwrap();
        assert_eq!(states.len(), 2);
    }

    #[test]
    fn pointer_rows_have_length_n_plus_one_and_normalise() {
        let model = tiny_model();
        let tokens: Vec<Token> = ["a", "bb", "c"]
            .iter()
            .enumerate()
            .map(|(i, f)| Token::with_pos(i + 1, *f, "T"))
            .collect();
        let dists = model
            .pointer_distributions(&tokens, None, Task::Const)
            .unwrap();
        assert_eq!(dists.len(), 3);
        for row in dists {
            assert_eq!(row.len(), 4);
            let sum: f32 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zeroed_biaffine_gives_uniform_attention() {
        let mut model = tiny_model();
        for name in ["pointer.dep.w", "pointer.dep.u", "pointer.dep.v"] {
            let id = model.params().id_of(name).unwrap();
            let shape = model.params().get(id).shape().to_vec();
            *model.params_mut().get_mut(id) = Tensor::zeros(&shape);
        }
        let b = model.params().id_of("pointer.dep.b").unwrap();
        *model.params_mut().get_mut(b) = Tensor::scalar(0.7);
        let tokens: Vec<Token> = ["a", "bb"]
            .iter()
            .enumerate()
            .map(|(i, f)| Token::with_pos(i + 1, *f, "T"))
            .collect();
        let rows = model.pointer_score_rows(&tokens, None, Task::Dep).unwrap();
        for row in &rows {
            for &x in row {
                assert!((x - 0.7).abs() < 1e-6);
            }
        }
        let dists = model
            .pointer_distributions(&tokens, None, Task::Dep)
            .unwrap();
        for row in dists {
            for &p in &row {
                assert!((p - 1.0 / 3.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn single_label_set_always_predicts_it() {
        let model = tiny_model();
        // The toy corpus has exactly one dep label besides root.
        let tokens: Vec<Token> = ["a", "bb", "c"]
            .iter()
            .enumerate()
            .map(|(i, f)| Token::with_pos(i + 1, *f, "T"))
            .collect();
        let pred = model
            .predict(&tokens, None, PredictOptions::default())
            .unwrap();
        for i in 1..=3 {
            let label = pred.dependency.label(i);
            assert!(label == "root" || label == "dep");
        }
    }

    #[test]
    fn prediction_is_structurally_valid_and_deterministic() {
        let model = tiny_model();
        let tokens: Vec<Token> = ["zz", "bb", "c", "a"]
            .iter()
            .enumerate()
            .map(|(i, f)| Token::with_pos(i + 1, *f, "T"))
            .collect();
        let p1 = model
            .predict(&tokens, None, PredictOptions::default())
            .unwrap();
        let p2 = model
            .predict(&tokens, None, PredictOptions::default())
            .unwrap();
        assert_eq!(p1.dependency, p2.dependency);
        assert_eq!(p1.constituent, p2.constituent);
        assert_eq!(p1.constituent.len(), 4);
    }

    #[test]
    fn external_vectors_require_alignment() {
        let corpus = vec![toy_sentence(&["a", "bb"])];
        let vocab = Vocab::build(&corpus);
        let mut config = tiny_config();
        config.external_dim = 3;
        let model: Model<f32> = Model::new(config, vocab, 1).unwrap();
        let tokens: Vec<Token> = ["a", "bb", "c", "d", "e"]
            .iter()
            .enumerate()
            .map(|(i, f)| Token::with_pos(i + 1, *f, "T"))
            .collect();
        // 5 tokens, 4 vectors.
        let short: Vec<Vec<f32>> = vec![vec![0.0; 3]; 4];
        let err = model
            .predict(&tokens, Some(&short), PredictOptions::default())
            .unwrap_err();
        assert!(matches!(err, ModelError::ExternalAlignment { .. }));
    }

    #[test]
    fn loss_decreases_under_gradient_steps() {
        let corpus = vec![toy_sentence(&["a", "bb", "c"])];
        let vocab = Vocab::build(&corpus);
        let mut model: Model<f64> = Model::new(tiny_config(), vocab, 3).unwrap();
        let before = model.loss(&corpus).unwrap();
        let mut adam = crate::nn::Adam::new(model.params(), 0.01, 0.9, 0.9);
        for _ in 0..30 {
            let (_, mut grads) = model.loss_and_gradients(&corpus).unwrap();
            adam.step(model.params_mut(), &mut grads, Some(5.0));
        }
        let after = model.loss(&corpus).unwrap();
        assert!(after < before, "{after} !< {before}");
    }
}
