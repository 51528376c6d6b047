//! Dense softmax output layer mapping a context vector to intent
//! probabilities.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{softmax_slice, Tensor};

/// Classifier parameters: weights `w` [K×k], bias `b` [K].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub w: Tensor,
    pub b: Tensor,
}

impl ClassifierParams {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot(input_dim: usize, classes: usize, rng: &mut Rng) -> Self {
        let wl = (6.0 / (input_dim + classes) as f64).sqrt();
        ClassifierParams {
            w: Tensor::matrix(classes, input_dim, rng.uniform_vec(classes * input_dim, -wl, wl))
                .expect("positive dims"),
            b: Tensor::zeros(&[classes]),
        }
    }

    pub fn classes(&self) -> usize {
        self.w.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }
}

/// Gradients with respect to the classifier parameters.
#[derive(Debug, Clone)]
pub struct ClassifierGrads {
    pub w: Tensor,
    pub b: Tensor,
}

impl ClassifierGrads {
    pub fn zeros(p: &ClassifierParams) -> Self {
        ClassifierGrads {
            w: Tensor::zeros(p.w.shape()),
            b: Tensor::zeros(p.b.shape()),
        }
    }
}

/// softmax(W_c context + b_c). The result sums to 1 within 1e-9.
pub fn classify(context: &[f64], p: &ClassifierParams) -> Result<Vec<f64>> {
    if context.len() != p.input_dim() {
        return Err(Error::Shape(format!(
            "classifier expects context of width {}, got {}",
            p.input_dim(),
            context.len()
        )));
    }
    let mut logits = p.w.matvec(context)?;
    for (l, b) in logits.iter_mut().zip(p.b.data()) {
        *l += b;
    }
    softmax_slice(&logits)
}

/// Backward pass from the logit gradient. For cross-entropy against a
/// one-hot label the caller supplies the fused identity
/// `d_logits = probs - onehot`, skipping an explicit softmax jacobian.
///
/// Accumulates into `grads` and returns the gradient on the context.
pub fn classifier_backward(
    p: &ClassifierParams,
    context: &[f64],
    d_logits: &[f64],
    grads: &mut ClassifierGrads,
) -> Vec<f64> {
    assert_eq!(d_logits.len(), p.classes(), "logit gradient width mismatch");
    grads.w.add_outer(d_logits, context);
    for (b, d) in grads.b.data_mut().iter_mut().zip(d_logits) {
        *b += d;
    }
    p.w.matvec_t(d_logits).expect("shapes fixed by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_uniform_probabilities() {
        let p = ClassifierParams {
            w: Tensor::zeros(&[4, 3]),
            b: Tensor::zeros(&[4]),
        };
        let probs = classify(&[0.5, -1.0, 2.0], &p).unwrap();
        for v in &probs {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_bias_saturates() {
        let p = ClassifierParams {
            w: Tensor::zeros(&[2, 2]),
            b: Tensor::vector(vec![10.0, -10.0]),
        };
        let probs = classify(&[1.0, 1.0], &p).unwrap();
        assert!((probs[0] - 1.0).abs() < 1e-8);
        assert!(probs[1] < 1e-8);
    }

    /// Oracle: explicit matvec + stable softmax, composed by hand.
    #[test]
    fn matches_matvec_softmax_oracle() {
        let mut rng = Rng::new(5);
        let p = ClassifierParams::glorot(3, 4, &mut rng);
        let context = rng.uniform_vec(3, -2.0, 2.0);

        let probs = classify(&context, &p).unwrap();

        let mut logits = [0.0; 4];
        for i in 0..4 {
            logits[i] = p.b.data()[i];
            for j in 0..3 {
                logits[i] += p.w.at(i, j) * context[j];
            }
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        for (a, e) in probs.iter().zip(&exps) {
            assert!((a - e / z).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = Rng::new(6);
        let p = ClassifierParams::glorot(5, 7, &mut rng);
        let probs = classify(&rng.uniform_vec(5, -3.0, 3.0), &p).unwrap();
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn width_mismatch_is_a_shape_error() {
        let mut rng = Rng::new(7);
        let p = ClassifierParams::glorot(3, 2, &mut rng);
        assert!(matches!(classify(&[1.0, 2.0], &p).unwrap_err(), Error::Shape(_)));
    }

    /// The fused cross-entropy gradient at the logits is probs - onehot;
    /// check the resulting parameter gradients against finite differences
    /// of -log p_label.
    #[test]
    fn cross_entropy_gradients_match_finite_differences() {
        use crate::gradcheck::grad_check;

        let mut rng = Rng::new(8);
        let (k, classes) = (3, 2);
        let p0 = ClassifierParams::glorot(k, classes, &mut rng);
        let context = rng.uniform_vec(k, -1.0, 1.0);
        let label = 1usize;

        let unpack = |theta: &[f64]| ClassifierParams {
            w: Tensor::matrix(classes, k, theta[..classes * k].to_vec()).unwrap(),
            b: Tensor::vector(theta[classes * k..].to_vec()),
        };
        let theta: Vec<f64> = p0.w.data().iter().chain(p0.b.data()).copied().collect();

        let mut f = |t: &[f64]| {
            let p = unpack(t);
            let probs = classify(&context, &p)?;
            Ok(-probs[label].ln())
        };

        let probs = classify(&context, &p0).unwrap();
        let mut d_logits = probs.clone();
        d_logits[label] -= 1.0;
        let mut grads = ClassifierGrads::zeros(&p0);
        classifier_backward(&p0, &context, &d_logits, &mut grads);
        let analytic: Vec<f64> = grads.w.data().iter().chain(grads.b.data()).copied().collect();

        let err = grad_check(&mut f, &theta, &analytic, &mut Rng::new(9)).unwrap();
        assert!(err < 1e-4, "max rel err {err}");
    }

    /// Same check for the context gradient.
    #[test]
    fn context_gradient_matches_finite_differences() {
        use crate::gradcheck::grad_check;

        let mut rng = Rng::new(10);
        let p = ClassifierParams::glorot(4, 3, &mut rng);
        let context0 = rng.uniform_vec(4, -1.0, 1.0);
        let label = 2usize;

        let mut f = |c: &[f64]| {
            let probs = classify(c, &p)?;
            Ok(-probs[label].ln())
        };

        let probs = classify(&context0, &p).unwrap();
        let mut d_logits = probs.clone();
        d_logits[label] -= 1.0;
        let mut grads = ClassifierGrads::zeros(&p);
        let d_context = classifier_backward(&p, &context0, &d_logits, &mut grads);

        let err = grad_check(&mut f, &context0, &d_context, &mut Rng::new(11)).unwrap();
        assert!(err < 1e-4, "max rel err {err}");
    }
}
