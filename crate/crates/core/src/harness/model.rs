use rand::Rng;
use rayon::prelude::*;

use crate::classical::{
    adam_step, build_head, build_preprocessor, AdamState, HeadKind, InputShape, LayerStack, Param,
    Tensor,
};
use crate::error::{Error, Result};
use crate::qnn::{init_params, Circuit};

use super::config::ModelConfig;

#[derive(Clone, Debug)]
struct QuantumLayer {
    circuit: Circuit,
    theta: Param,
    /// Circuit inputs of the last forward pass, one row per sample.
    inputs: Option<Tensor>,
}

/// Pre-processing stack, optional QNN, and a head producing one logit per
/// sample.
#[derive(Clone, Debug)]
pub struct Model {
    preproc: LayerStack,
    quantum: Option<QuantumLayer>,
    head: LayerStack,
    sample: InputShape,
    optim: Vec<AdamState>,
}

impl Model {
    /// Builds a fresh model for samples of shape `sample_shape`; every axis
    /// is spatial with one channel.
    pub fn new<R: Rng + ?Sized>(
        config: &ModelConfig,
        sample_shape: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let sample = InputShape::single_channel(sample_shape);
        let preproc = build_preprocessor(
            config.preproc,
            &sample,
            config.latent_dim,
            config.tanh_pi,
            rng,
        )?;
        let (quantum, head) = match (&config.qnn, config.head) {
            (Some(arch), _) => {
                let circuit = arch.build(config.latent_dim)?;
                let theta = Param::new(init_params(circuit.n_params(), rng));
                let out = circuit.output_len();
                let head = build_head(HeadKind::LinearOut, out, out, rng)?;
                let q = QuantumLayer {
                    circuit,
                    theta,
                    inputs: None,
                };
                (Some(q), head)
            }
            (None, Some(kind)) => (
                None,
                build_head(kind, config.latent_dim, config.latent_dim, rng)?,
            ),
            (None, None) => return Err(Error::Config("model has neither QNN nor head".into())),
        };
        let mut model = Self {
            preproc,
            quantum,
            head,
            sample,
            optim: Vec::new(),
        };
        model.optim = model
            .params_mut()
            .iter()
            .map(|p| AdamState::new(p.len()))
            .collect();
        Ok(model)
    }

    pub fn circuit(&self) -> Option<&Circuit> {
        self.quantum.as_ref().map(|q| &q.circuit)
    }

    pub fn preproc(&self) -> &LayerStack {
        &self.preproc
    }

    pub fn head(&self) -> &LayerStack {
        &self.head
    }

    pub fn n_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Fixed order: pre-processing, circuit angles, head.
    pub fn params(&self) -> Vec<&Param> {
        let mut v = self.preproc.params();
        if let Some(q) = &self.quantum {
            v.push(&q.theta);
        }
        v.extend(self.head.params());
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.preproc.params_mut();
        if let Some(q) = &mut self.quantum {
            v.push(&mut q.theta);
        }
        v.extend(self.head.params_mut());
        v
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Logits for a `[batch, sample...]` tensor.
    pub fn forward(&mut self, x: &Tensor, training: bool) -> Result<Vec<f64>> {
        let mut shape = vec![x.batch()];
        shape.extend(self.sample.to_vec());
        let x = x.clone().reshape(shape)?;
        let latent = self.preproc.forward(&x, training)?;
        let features = match &mut self.quantum {
            Some(q) => {
                let rows: Vec<Vec<f64>> = (0..latent.batch())
                    .into_par_iter()
                    .map(|i| q.circuit.forward(latent.row(i), &q.theta.value))
                    .collect::<Result<_>>()?;
                let out = q.circuit.output_len();
                q.inputs = Some(latent.clone());
                Tensor::new(vec![rows.len(), out], rows.concat())?
            }
            None => latent,
        };
        Ok(self.head.forward(&features, training)?.into_data())
    }

    /// Backpropagates `d loss / d logit`, accumulates every parameter
    /// gradient and returns the gradient with respect to the input, shaped
    /// `[batch, 1, sample...]`.
    pub fn backward(&mut self, grad_logits: &[f64]) -> Result<Tensor> {
        let g = Tensor::new(vec![grad_logits.len(), 1], grad_logits.to_vec())?;
        let mut g = self.head.backward(&g)?;
        if let Some(q) = &mut self.quantum {
            let inputs = q.inputs.take().ok_or(Error::NoForward("QNN"))?;
            let grads: Vec<_> = (0..inputs.batch())
                .into_par_iter()
                .map(|i| q.circuit.backward(inputs.row(i), &q.theta.value, g.row(i)))
                .collect::<Result<_>>()?;
            // summed in sample order so results do not depend on scheduling
            let mut latent_grad = Vec::with_capacity(inputs.len());
            for cg in grads {
                for (acc, v) in q.theta.grad.iter_mut().zip(&cg.params) {
                    *acc += v;
                }
                latent_grad.extend(cg.inputs);
            }
            g = Tensor::new(inputs.shape().to_vec(), latent_grad)?;
        }
        self.preproc.backward(&g)
    }

    /// One Adam update from the accumulated gradients.
    pub fn step(&mut self) -> Result<()> {
        let mut optim = std::mem::take(&mut self.optim);
        let result = self
            .params_mut()
            .into_iter()
            .zip(optim.iter_mut())
            .try_for_each(|(p, s)| adam_step(&mut p.value, &p.grad, s));
        self.optim = optim;
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::Preproc;
    use crate::qnn::{QnnArch, QnnKind, Readout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let arch = QnnArch::new(QnnKind::AmpGen, true, Readout::Global).unwrap();
        let m = Model::new(
            &ModelConfig::hybrid(Preproc::Conv0, 16, false, arch, 0),
            &[360],
            &mut rng,
        )
        .unwrap();
        // FC 360→16, 48 angles, FC 1→1
        assert_eq!(m.n_params(), 360 * 16 + 16 + 48 + 2);
        let cfg = ModelConfig::classical(Preproc::Conv0, 16, HeadKind::Fcrelu, 0);
        let m = Model::new(&cfg, &[360], &mut rng).unwrap();
        assert_eq!(m.n_params(), 360 * 16 + 16 + 289);
    }

    #[test]
    fn forward_shapes_and_backward_guard() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let arch = QnnArch::new(QnnKind::AngRy, true, Readout::Local).unwrap();
        let cfg = ModelConfig::hybrid(Preproc::Conv1, 4, true, arch, 0);
        let mut m = Model::new(&cfg, &[8, 8], &mut rng).unwrap();
        assert!(m.backward(&[0.0; 3]).is_err());
        let x = Tensor::zeros(vec![3, 8, 8]);
        assert_eq!(m.forward(&x, true).unwrap().len(), 3);
        m.backward(&[0.1, -0.2, 0.3]).unwrap();
        m.step().unwrap();
    }
}
