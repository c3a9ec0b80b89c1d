//! Named parameter storage and graph binding.

use std::collections::HashMap;
use std::ops::Index;

use num_traits::Float;
use rand::Rng;

use super::graph::{Gradients, Graph, Value};
use super::tensor::Tensor;

/// Index of a parameter within a [`Params`] set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(usize);

/// An ordered set of uniquely named tensors. The order is stable, so
/// optimizer state, bindings and checkpoints all align by index.
#[derive(Clone)]
pub struct Params<F> {
    entries: Vec<(String, Tensor<F>)>,
    by_name: HashMap<String, usize>,
}

impl<F: Float> Params<F> {
    pub fn new() -> Self {
        Params {
            entries: Vec::new(),
            by_name: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor<F>) -> ParamId {
        let name = name.into();
        assert!(
            !self.by_name.contains_key(&name),
            "duplicate parameter name {name:?}"
        );
        self.by_name.insert(name.clone(), self.entries.len());
        self.entries.push((name, tensor));
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<F> {
        &self.entries[id.0].1
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.entries[id.0].1
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].0
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<F>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }
}

impl<F: Float + 'static> Params<F> {
    /// Copies every parameter into `graph` as a leaf; gradients for the
    /// whole set can then be collected with [`Binding::gradients`].
    pub fn bind(&self, graph: &mut Graph<F>) -> Binding {
        Binding {
            values: self.entries.iter().map(|(_, t)| graph.leaf(t.clone())).collect(),
        }
    }
}

impl<F: Float> Default for Params<F> {
    fn default() -> Self {
        Params::new()
    }
}

/// The per-graph leaf handles of a bound parameter set.
pub struct Binding {
    values: Vec<Value>,
}

impl Index<ParamId> for Binding {
    type Output = Value;

    fn index(&self, id: ParamId) -> &Value {
        &self.values[id.0]
    }
}

impl Binding {
    /// One gradient tensor per parameter (zeros where the loss did not
    /// touch the parameter).
    pub fn gradients<F: Float + 'static>(
        &self,
        params: &Params<F>,
        grads: &Gradients<F>,
    ) -> Vec<Tensor<F>> {
        self.values
            .iter()
            .zip(params.entries.iter())
            .map(|(&v, (_, t))| match grads.get(v) {
                Some(g) => g.clone(),
                None => Tensor::zeros(t.shape()),
            })
            .collect()
    }
}

/// Glorot-uniform initialisation for 2-D weights.
pub fn glorot<F: Float>(shape: &[usize], rng: &mut impl Rng) -> Tensor<F> {
    let (fan_out, fan_in) = (shape[0], shape[1]);
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(shape, bound, rng)
}

/// Uniform initialisation in `[-bound, bound]`.
pub fn uniform<F: Float>(shape: &[usize], bound: f64, rng: &mut impl Rng) -> Tensor<F> {
    let data = (0..shape.iter().product::<usize>())
        .map(|_| F::from(rng.gen_range(-bound..=bound)).unwrap())
        .collect();
    Tensor::from_vec(shape, data)
}

/// Embedding-style initialisation with variance `1 / dim`.
pub fn embedding_init<F: Float>(rows: usize, dim: usize, rng: &mut impl Rng) -> Tensor<F> {
    uniform(&[rows, dim], (3.0 / dim as f64).sqrt(), rng)
}
