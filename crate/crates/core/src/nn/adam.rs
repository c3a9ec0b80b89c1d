//! Adam optimizer with global-norm gradient clipping.

use num_traits::Float;

use super::params::Params;
use super::tensor::Tensor;

pub struct Adam<F> {
    lr: F,
    beta1: F,
    beta2: F,
    eps: F,
    step: u64,
    m: Vec<Tensor<F>>,
    v: Vec<Tensor<F>>,
}

impl<F: Float> Adam<F> {
    pub fn new(params: &Params<F>, lr: F, beta1: F, beta2: F) -> Self {
        let zeros: Vec<Tensor<F>> = params.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();
        Adam {
            lr,
            beta1,
            beta2,
            eps: F::from(1e-8).unwrap(),
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn lr(&self) -> F {
        self.lr
    }

    pub fn set_lr(&mut self, lr: F) {
        self.lr = lr;
    }

    /// Applies one update. `grads` must align with `params`; when `clip`
    /// is set, gradients are rescaled so their global L2 norm is at most
    /// that value.
    pub fn step(&mut self, params: &mut Params<F>, grads: &mut [Tensor<F>], clip: Option<F>) {
        assert_eq!(grads.len(), params.len());
        if let Some(max_norm) = clip {
            let mut sq = F::zero();
            for g in grads.iter() {
                for &x in g.data() {
                    sq = sq + x * x;
                }
            }
            let norm = sq.sqrt();
            if norm > max_norm {
                let factor = max_norm / norm;
                for g in grads.iter_mut() {
                    for x in g.data_mut() {
                        *x = *x * factor;
                    }
                }
            }
        }
        self.step += 1;
        let t = F::from(self.step as f64).unwrap();
        let bias1 = F::one() - self.beta1.powf(t);
        let bias2 = F::one() - self.beta2.powf(t);
        let ids: Vec<_> = params.ids().collect();
        for (i, id) in ids.into_iter().enumerate() {
            let g = &grads[i];
            let m = &mut self.m[i];
            for (mi, &gi) in m.data_mut().iter_mut().zip(g.data()) {
                *mi = self.beta1 * *mi + (F::one() - self.beta1) * gi;
            }
            let v = &mut self.v[i];
            for (vi, &gi) in v.data_mut().iter_mut().zip(g.data()) {
                *vi = self.beta2 * *vi + (F::one() - self.beta2) * gi * gi;
            }
            let p = params.get_mut(id);
            for ((pi, &mi), &vi) in p.data_mut().iter_mut().zip(self.m[i].data()).zip(self.v[i].data())
            {
                let mhat = mi / bias1;
                let vhat = vi / bias2;
                *pi = *pi - self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_descends_a_quadratic() {
        // minimize (x - 3)^2 by hand-fed gradients 2(x - 3).
        let mut params: Params<f64> = Params::new();
        let id = params.add("x", Tensor::scalar(0.0));
        let mut adam = Adam::new(&params, 0.05, 0.9, 0.9);
        for _ in 0..2000 {
            let x = params.get(id).item();
            let mut grads = vec![Tensor::scalar(2.0 * (x - 3.0))];
            adam.step(&mut params, &mut grads, Some(5.0));
        }
        // Adam hovers near the optimum at the scale of the learning rate.
        assert!((params.get(id).item() - 3.0).abs() < 0.1);
    }

    #[test]
    fn clipping_bounds_the_norm() {
        let mut params: Params<f64> = Params::new();
        params.add("a", Tensor::vector(vec![0.0, 0.0]));
        let mut adam = Adam::new(&params, 0.0, 0.9, 0.999);
        let mut grads = vec![Tensor::vector(vec![30.0, 40.0])];
        adam.step(&mut params, &mut grads, Some(5.0));
        let norm: f64 = grads[0].data().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 5.0).abs() < 1e-12);
    }
}
