//! Reverse-mode automatic differentiation on a tape.
//!
//! Every operation appends a node holding its value, its parents and a
//! backward closure mapping the output gradient to parent gradients.
//! [`Graph::backward`] replays the tape in reverse, accumulating gradients
//! by node id. Graphs built with gradients disabled skip all bookkeeping
//! and only compute values.

use num_traits::Float;

use super::tensor::Tensor;

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Value(usize);

type BackFn<F> = Box<dyn Fn(&[&Tensor<F>], &Tensor<F>, &Tensor<F>) -> Vec<Tensor<F>>>;

struct Node<F> {
    value: Tensor<F>,
    parents: Vec<usize>,
    back: Option<BackFn<F>>,
}

pub struct Graph<F> {
    nodes: Vec<Node<F>>,
    grad_enabled: bool,
}

/// Per-node gradients produced by a backward pass.
pub struct Gradients<F> {
    grads: Vec<Option<Tensor<F>>>,
}

impl<F: Float> Gradients<F> {
    pub fn get(&self, v: Value) -> Option<&Tensor<F>> {
        self.grads[v.0].as_ref()
    }
}

impl<F: Float + 'static> Graph<F> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            grad_enabled: true,
        }
    }

    /// A graph that records no backward closures; `backward` is unavailable.
    pub fn inference() -> Self {
        Graph {
            nodes: Vec::new(),
            grad_enabled: false,
        }
    }

    pub fn value(&self, v: Value) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<F>, parents: Vec<usize>, back: BackFn<F>) -> Value {
        let node = if self.grad_enabled {
            Node {
                value,
                parents,
                back: Some(back),
            }
        } else {
            Node {
                value,
                parents: Vec::new(),
                back: None,
            }
        };
        self.nodes.push(node);
        Value(self.nodes.len() - 1)
    }

    /// A leaf holding `t`; gradients accumulate here.
    pub fn leaf(&mut self, t: Tensor<F>) -> Value {
        self.nodes.push(Node {
            value: t,
            parents: Vec::new(),
            back: None,
        });
        Value(self.nodes.len() - 1)
    }

    pub fn add(&mut self, a: Value, b: Value) -> Value {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(
            out,
            vec![a.0, b.0],
            Box::new(|_, _, g| vec![g.clone(), g.clone()]),
        )
    }

    /// Elementwise sum of several same-shaped tensors.
    pub fn add_n(&mut self, terms: &[Value]) -> Value {
        assert!(!terms.is_empty());
        let mut out = self.value(terms[0]).clone();
        for &t in &terms[1..] {
            out.add_assign(self.value(t));
        }
        let k = terms.len();
        self.push(
            out,
            terms.iter().map(|v| v.0).collect(),
            Box::new(move |_, _, g| vec![g.clone(); k]),
        )
    }

    pub fn mul(&mut self, a: Value, b: Value) -> Value {
        let (va, vb) = (self.value(a), self.value(b));
        debug_assert_eq!(va.shape(), vb.shape());
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(&x, &y)| x * y)
            .collect();
        let out = Tensor::from_vec(va.shape(), data);
        self.push(
            out,
            vec![a.0, b.0],
            Box::new(|parents, _, g| {
                let ga = g
                    .data()
                    .iter()
                    .zip(parents[1].data())
                    .map(|(&gi, &y)| gi * y)
                    .collect();
                let gb = g
                    .data()
                    .iter()
                    .zip(parents[0].data())
                    .map(|(&gi, &x)| gi * x)
                    .collect();
                vec![
                    Tensor::from_vec(g.shape(), ga),
                    Tensor::from_vec(g.shape(), gb),
                ]
            }),
        )
    }

    pub fn scale(&mut self, a: Value, c: F) -> Value {
        let out = self.value(a).map(|x| x * c);
        self.push(
            out,
            vec![a.0],
            Box::new(move |_, _, g| vec![g.map(|x| x * c)]),
        )
    }

    /// `W x` for a 2-D weight and 1-D input.
    pub fn matvec(&mut self, w: Value, x: Value) -> Value {
        let (vw, vx) = (self.value(w), self.value(x));
        let (m, k) = (vw.rows(), vw.cols());
        debug_assert_eq!(k, vx.len());
        let mut out = vec![F::zero(); m];
        for r in 0..m {
            let row = vw.row(r);
            let mut acc = F::zero();
            for (wv, xv) in row.iter().zip(vx.data()) {
                acc = acc + *wv * *xv;
            }
            out[r] = acc;
        }
        self.push(
            Tensor::vector(out),
            vec![w.0, x.0],
            Box::new(move |parents, _, g| {
                let (w, x) = (parents[0], parents[1]);
                let mut gw = vec![F::zero(); m * k];
                let mut gx = vec![F::zero(); k];
                for r in 0..m {
                    let gr = g.data()[r];
                    let row = w.row(r);
                    for c in 0..k {
                        gw[r * k + c] = gr * x.data()[c];
                        gx[c] = gx[c] + gr * row[c];
                    }
                }
                vec![
                    Tensor::from_vec(&[m, k], gw),
                    Tensor::vector(gx),
                ]
            }),
        )
    }

    pub fn dot(&mut self, a: Value, b: Value) -> Value {
        let (va, vb) = (self.value(a), self.value(b));
        debug_assert_eq!(va.len(), vb.len());
        let mut acc = F::zero();
        for (&x, &y) in va.data().iter().zip(vb.data()) {
            acc = acc + x * y;
        }
        self.push(
            Tensor::scalar(acc),
            vec![a.0, b.0],
            Box::new(|parents, _, g| {
                let g0 = g.item();
                vec![
                    parents[1].map(|y| y * g0),
                    parents[0].map(|x| x * g0),
                ]
            }),
        )
    }

    pub fn concat(&mut self, parts: &[Value]) -> Value {
        assert!(!parts.is_empty());
        let mut data = Vec::new();
        let mut lens = Vec::with_capacity(parts.len());
        for &p in parts {
            let v = self.value(p);
            lens.push(v.len());
            data.extend_from_slice(v.data());
        }
        self.push(
            Tensor::vector(data),
            parts.iter().map(|v| v.0).collect(),
            Box::new(move |_, _, g| {
                let mut out = Vec::with_capacity(lens.len());
                let mut offset = 0;
                for &len in &lens {
                    out.push(Tensor::vector(g.data()[offset..offset + len].to_vec()));
                    offset += len;
                }
                out
            }),
        )
    }

    pub fn slice(&mut self, a: Value, start: usize, len: usize) -> Value {
        let v = self.value(a);
        let total = v.len();
        debug_assert!(start + len <= total);
        let out = Tensor::vector(v.data()[start..start + len].to_vec());
        self.push(
            out,
            vec![a.0],
            Box::new(move |_, _, g| {
                let mut full = vec![F::zero(); total];
                full[start..start + len].copy_from_slice(g.data());
                vec![Tensor::vector(full)]
            }),
        )
    }

    /// Row `index` of a 2-D table (embedding lookup).
    pub fn row(&mut self, table: Value, index: usize) -> Value {
        let t = self.value(table);
        let (rows, cols) = (t.rows(), t.cols());
        debug_assert!(index < rows);
        let out = Tensor::vector(t.row(index).to_vec());
        self.push(
            out,
            vec![table.0],
            Box::new(move |_, _, g| {
                let mut full = Tensor::zeros(&[rows, cols]);
                full.data_mut()[index * cols..(index + 1) * cols].copy_from_slice(g.data());
                vec![full]
            }),
        )
    }

    pub fn sigmoid(&mut self, a: Value) -> Value {
        let one = F::one();
        let out = self.value(a).map(|x| one / (one + (-x).exp()));
        self.push(
            out,
            vec![a.0],
            Box::new(|_, value, g| {
                let data = g
                    .data()
                    .iter()
                    .zip(value.data())
                    .map(|(&gi, &y)| gi * y * (F::one() - y))
                    .collect();
                vec![Tensor::from_vec(g.shape(), data)]
            }),
        )
    }

    pub fn tanh(&mut self, a: Value) -> Value {
        let out = self.value(a).map(|x| x.tanh());
        self.push(
            out,
            vec![a.0],
            Box::new(|_, value, g| {
                let data = g
                    .data()
                    .iter()
                    .zip(value.data())
                    .map(|(&gi, &y)| gi * (F::one() - y * y))
                    .collect();
                vec![Tensor::from_vec(g.shape(), data)]
            }),
        )
    }

    /// ELU with alpha = 1: `x` for positive inputs, `exp(x) - 1` otherwise.
    pub fn elu(&mut self, a: Value) -> Value {
        let out = self
            .value(a)
            .map(|x| if x > F::zero() { x } else { x.exp() - F::one() });
        self.push(
            out,
            vec![a.0],
            Box::new(|parents, value, g| {
                let data = g
                    .data()
                    .iter()
                    .zip(parents[0].data().iter().zip(value.data()))
                    .map(|(&gi, (&x, &y))| {
                        if x > F::zero() {
                            gi
                        } else {
                            gi * (y + F::one())
                        }
                    })
                    .collect();
                vec![Tensor::from_vec(g.shape(), data)]
            }),
        )
    }

    /// Elementwise maximum over same-shaped inputs; gradients flow to the
    /// first argmax.
    pub fn max_elem(&mut self, parts: &[Value]) -> Value {
        assert!(!parts.is_empty());
        let len = self.value(parts[0]).len();
        let mut data = self.value(parts[0]).data().to_vec();
        let mut argmax = vec![0usize; len];
        for (pi, &p) in parts.iter().enumerate().skip(1) {
            for (j, &x) in self.value(p).data().iter().enumerate() {
                if x > data[j] {
                    data[j] = x;
                    argmax[j] = pi;
                }
            }
        }
        let k = parts.len();
        self.push(
            Tensor::vector(data),
            parts.iter().map(|v| v.0).collect(),
            Box::new(move |_, _, g| {
                let mut out = vec![Tensor::vector(vec![F::zero(); len]); k];
                for (j, &src) in argmax.iter().enumerate() {
                    out[src].data_mut()[j] = g.data()[j];
                }
                out
            }),
        )
    }

    /// Numerically stable softmax.
    pub fn softmax(&mut self, a: Value) -> Value {
        let v = self.value(a);
        let max = v
            .data()
            .iter()
            .cloned()
            .fold(F::neg_infinity(), F::max);
        let exps: Vec<F> = v.data().iter().map(|&x| (x - max).exp()).collect();
        let sum = exps.iter().fold(F::zero(), |acc, &x| acc + x);
        let out: Vec<F> = exps.iter().map(|&e| e / sum).collect();
        self.push(
            Tensor::vector(out),
            vec![a.0],
            Box::new(|_, value, g| {
                let y = value.data();
                let mut inner = F::zero();
                for (&gi, &yi) in g.data().iter().zip(y) {
                    inner = inner + gi * yi;
                }
                let data = g
                    .data()
                    .iter()
                    .zip(y)
                    .map(|(&gi, &yi)| yi * (gi - inner))
                    .collect();
                vec![Tensor::from_vec(g.shape(), data)]
            }),
        )
    }

    /// `-log softmax(scores)[target]`, the pointer/labeler loss term.
    pub fn cross_entropy(&mut self, scores: Value, target: usize) -> Value {
        let v = self.value(scores);
        debug_assert!(target < v.len());
        let max = v
            .data()
            .iter()
            .cloned()
            .fold(F::neg_infinity(), F::max);
        let sum = v
            .data()
            .iter()
            .fold(F::zero(), |acc, &x| acc + (x - max).exp());
        let loss = max + sum.ln() - v.data()[target];
        self.push(
            Tensor::scalar(loss),
            vec![scores.0],
            Box::new(move |parents, _, g| {
                let x = parents[0];
                let g0 = g.item();
                let max = x
                    .data()
                    .iter()
                    .cloned()
                    .fold(F::neg_infinity(), F::max);
                let exps: Vec<F> = x.data().iter().map(|&xi| (xi - max).exp()).collect();
                let sum = exps.iter().fold(F::zero(), |acc, &e| acc + e);
                let mut data: Vec<F> = exps.iter().map(|&e| g0 * (e / sum)).collect();
                data[target] = data[target] - g0;
                vec![Tensor::vector(data)]
            }),
        )
    }

    /// Runs the tape backwards from `from` (a scalar), returning one
    /// gradient per reachable node.
    pub fn backward(&self, from: Value) -> Gradients<F> {
        assert!(self.grad_enabled, "gradients are disabled on this graph");
        assert_eq!(self.nodes[from.0].value.len(), 1, "backward needs a scalar");
        let mut grads: Vec<Option<Tensor<F>>> = vec![None; self.nodes.len()];
        grads[from.0] = Some(Tensor::scalar(F::one()));
        for id in (0..=from.0).rev() {
            let Some(back) = self.nodes[id].back.as_ref() else {
                continue;
            };
            if grads[id].is_none() {
                continue;
            }
            let parents = &self.nodes[id].parents;
            let parent_values: Vec<&Tensor<F>> =
                parents.iter().map(|&p| &self.nodes[p].value).collect();
            let g = grads[id].as_ref().unwrap();
            let parent_grads = back(&parent_values, &self.nodes[id].value, g);
            debug_assert_eq!(parent_grads.len(), parents.len());
            for (&p, pg) in parents.iter().zip(parent_grads) {
                match &mut grads[p] {
                    Some(acc) => acc.add_assign(&pg),
                    slot => *slot = Some(pg),
                }
            }
        }
        Gradients { grads }
    }
}

impl<F: Float + 'static> Default for Graph<F> {
    fn default() -> Self {
        Graph::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g64() -> Graph<f64> {
        Graph::new()
    }

    #[test]
    fn dot_gradients() {
        let mut g = g64();
        let a = g.leaf(Tensor::vector(vec![1.0, 2.0]));
        let b = g.leaf(Tensor::vector(vec![3.0, 4.0]));
        let d = g.dot(a, b);
        assert_eq!(g.value(d).item(), 11.0);
        let grads = g.backward(d);
        assert_eq!(grads.get(a).unwrap().data(), &[3.0, 4.0]);
        assert_eq!(grads.get(b).unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn matvec_forward_and_backward() {
        let mut g = g64();
        let w = g.leaf(Tensor::from_vec(&[2, 3], vec![1., 2., 3., 4., 5., 6.]));
        let x = g.leaf(Tensor::vector(vec![1., 0., -1.]));
        let y = g.matvec(w, x);
        assert_eq!(g.value(y).data(), &[-2.0, -2.0]);
        let s = g.dot(y, y);
        let grads = g.backward(s);
        // d(y.y)/dx = 2 W^T y
        assert_eq!(grads.get(x).unwrap().data(), &[-20.0, -28.0, -36.0]);
    }

    #[test]
    fn gradient_accumulates_over_reuse() {
        let mut g = g64();
        let a = g.leaf(Tensor::vector(vec![2.0]));
        let sq = g.mul(a, a);
        let grads = g.backward(sq);
        assert_eq!(grads.get(a).unwrap().data(), &[4.0]);
    }

    #[test]
    fn cross_entropy_matches_log_softmax() {
        let mut g = g64();
        let s = g.leaf(Tensor::vector(vec![1.0, 2.0, 3.0]));
        let loss = g.cross_entropy(s, 1);
        let z: f64 = (1f64.exp() + 2f64.exp() + 3f64.exp()).ln();
        assert!((g.value(loss).item() - (z - 2.0)).abs() < 1e-12);
        let grads = g.backward(loss);
        let gs = grads.get(s).unwrap().data().to_vec();
        // softmax - onehot
        let sm: Vec<f64> = [1.0, 2.0, 3.0]
            .iter()
            .map(|x| (x - z).exp())
            .collect();
        assert!((gs[0] - sm[0]).abs() < 1e-12);
        assert!((gs[1] - (sm[1] - 1.0)).abs() < 1e-12);
        assert!((gs[2] - sm[2]).abs() < 1e-12);
    }

    #[test]
    fn softmax_normalizes() {
        let mut g = g64();
        let s = g.leaf(Tensor::vector(vec![0.5, -1.0, 2.0, 0.0]));
        let p = g.softmax(s);
        let sum: f64 = g.value(p).data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_elem_routes_gradient() {
        let mut g = g64();
        let a = g.leaf(Tensor::vector(vec![1.0, 5.0]));
        let b = g.leaf(Tensor::vector(vec![3.0, 2.0]));
        let m = g.max_elem(&[a, b]);
        assert_eq!(g.value(m).data(), &[3.0, 5.0]);
        let ones = g.leaf(Tensor::vector(vec![1.0, 1.0]));
        let s = g.dot(m, ones);
        let grads = g.backward(s);
        assert_eq!(grads.get(a).unwrap().data(), &[0.0, 1.0]);
        assert_eq!(grads.get(b).unwrap().data(), &[1.0, 0.0]);
    }

    #[test]
    fn inference_graph_skips_tape() {
        let mut g: Graph<f32> = Graph::inference();
        let a = g.leaf(Tensor::vector(vec![1.0, 2.0]));
        let b = g.sigmoid(a);
        assert_eq!(g.value(b).len(), 2);
    }
}
