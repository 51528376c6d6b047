//! Additive self-attention over encoder hidden states.
//!
//! Each position t of the encoder output H [T×k] is scored against a
//! learned query:
//!
//! ```text
//! e_t     = v_a . tanh(W_a h_t + b_a)
//! weights = softmax(e)          (masked positions scored -inf => weight 0)
//! context = sum_t weights_t h_t
//! ```
//!
//! The context vector summarizes the utterance and is what the classifier
//! consumes. Masking works by score substitution: padded positions get a
//! score of -inf before the softmax, which maps them to exactly zero
//! weight without a separate renormalization path.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{softmax_slice, Tensor};

/// Attention parameters: projection `w` [k_a×k], bias `b` [k_a], scoring
/// vector `v` [k_a]. The attention width k_a defaults to the encoder
/// output width k.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w: Tensor,
    pub b: Tensor,
    pub v: Tensor,
}

impl AttentionParams {
    /// Glorot-uniform `w` and `v`, zero bias.
    pub fn glorot(encoder_width: usize, attention_width: usize, rng: &mut Rng) -> Self {
        let wl = (6.0 / (encoder_width + attention_width) as f64).sqrt();
        let vl = (6.0 / (attention_width + 1) as f64).sqrt();
        AttentionParams {
            w: Tensor::matrix(
                attention_width,
                encoder_width,
                rng.uniform_vec(attention_width * encoder_width, -wl, wl),
            )
            .expect("positive dims"),
            b: Tensor::zeros(&[attention_width]),
            v: Tensor::vector(rng.uniform_vec(attention_width, -vl, vl)),
        }
    }

    pub fn encoder_width(&self) -> usize {
        self.w.cols()
    }

    pub fn attention_width(&self) -> usize {
        self.w.rows()
    }
}

/// Forward activations cached for [`attention_backward`].
#[derive(Debug, Clone)]
pub struct AttentionCache {
    h: Tensor,
    mask: Vec<bool>,
    /// tanh(W_a h_t + b_a), one row per timestep.
    u: Tensor,
    weights: Vec<f64>,
}

/// Gradients with respect to the attention parameters.
#[derive(Debug, Clone)]
pub struct AttentionGrads {
    pub w: Tensor,
    pub b: Tensor,
    pub v: Tensor,
}

impl AttentionGrads {
    pub fn zeros(p: &AttentionParams) -> Self {
        AttentionGrads {
            w: Tensor::zeros(p.w.shape()),
            b: Tensor::zeros(p.b.shape()),
            v: Tensor::zeros(p.v.shape()),
        }
    }
}

/// Scores, normalizes, and pools the hidden states into a context vector.
///
/// `mask[t]` is true for real positions; at least one entry must be true.
/// Returns the context [k], the weights [T] (masked entries exactly 0),
/// and the cache for the backward pass.
pub fn self_attention(
    h: &Tensor,
    mask: &[bool],
    p: &AttentionParams,
) -> Result<(Vec<f64>, Vec<f64>, AttentionCache)> {
    let t_len = h.rows();
    let k = h.cols();
    if k != p.encoder_width() {
        return Err(Error::Shape(format!(
            "attention expects encoder width {}, got hidden states {:?}",
            p.encoder_width(),
            h.shape()
        )));
    }
    if mask.len() != t_len {
        return Err(Error::Shape(format!(
            "mask length {} does not match {} timesteps",
            mask.len(),
            t_len
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::Invalid(
            "attention requires at least one unmasked position".into(),
        ));
    }

    let ka = p.attention_width();
    let mut u = Vec::with_capacity(t_len * ka);
    let mut scores = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut a = p.w.matvec(h.row(t))?;
        for (av, bv) in a.iter_mut().zip(p.b.data()) {
            *av = (*av + bv).tanh();
        }
        let e: f64 = a.iter().zip(p.v.data()).map(|(x, y)| x * y).sum();
        scores.push(if mask[t] { e } else { f64::NEG_INFINITY });
        u.extend_from_slice(&a);
    }

    let weights = softmax_slice(&scores)?;
    let mut context = vec![0.0; k];
    for t in 0..t_len {
        if weights[t] == 0.0 {
            continue;
        }
        for (cv, hv) in context.iter_mut().zip(h.row(t)) {
            *cv += weights[t] * hv;
        }
    }

    let cache = AttentionCache {
        h: h.clone(),
        mask: mask.to_vec(),
        u: Tensor::matrix(t_len, ka, u)?,
        weights: weights.clone(),
    };
    Ok((context, weights, cache))
}

/// Backward pass. `d_context` [k] is the upstream gradient on the context
/// vector; returns parameter gradients and the gradient on the hidden
/// states [T×k]. Masked positions receive exactly zero input gradient.
pub fn attention_backward(
    p: &AttentionParams,
    cache: &AttentionCache,
    d_context: &[f64],
) -> (AttentionGrads, Tensor) {
    let t_len = cache.h.rows();
    let k = cache.h.cols();
    assert_eq!(d_context.len(), k, "upstream gradient width mismatch");

    let mut grads = AttentionGrads::zeros(p);
    let mut d_h = Tensor::zeros(&[t_len, k]);

    // d_alpha_t = d_context . h_t ; softmax jacobian folds them into
    // d_e_t = alpha_t (d_alpha_t - sum_s alpha_s d_alpha_s).
    let alpha = &cache.weights;
    let d_alpha: Vec<f64> = (0..t_len)
        .map(|t| d_context.iter().zip(cache.h.row(t)).map(|(a, b)| a * b).sum())
        .collect();
    let pooled: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();

    for t in 0..t_len {
        // Pooling term: context += alpha_t h_t.
        if alpha[t] != 0.0 {
            for (dv, up) in d_h.row_mut(t).iter_mut().zip(d_context) {
                *dv += alpha[t] * up;
            }
        }

        if !cache.mask[t] {
            // alpha_t is exactly 0 and the -inf score blocks the chain,
            // so no score gradient flows at padded positions.
            continue;
        }
        let d_e = alpha[t] * (d_alpha[t] - pooled);
        if d_e == 0.0 {
            continue;
        }

        // e_t = v . u_t with u_t = tanh(W h_t + b).
        let u_t = cache.u.row(t);
        let mut d_pre = vec![0.0; u_t.len()];
        for j in 0..u_t.len() {
            grads.v.data_mut()[j] += d_e * u_t[j];
            d_pre[j] = d_e * p.v.data()[j] * (1.0 - u_t[j] * u_t[j]);
            grads.b.data_mut()[j] += d_pre[j];
        }
        grads.w.add_outer(&d_pre, cache.h.row(t));
        let back = p.w.matvec_t(&d_pre).expect("shapes fixed by construction");
        for (dv, bv) in d_h.row_mut(t).iter_mut().zip(&back) {
            *dv += bv;
        }
    }

    (grads, d_h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_for(k: usize, seed: u64) -> AttentionParams {
        AttentionParams::glorot(k, k, &mut Rng::new(seed))
    }

    #[test]
    fn single_unmasked_position_passes_through() {
        let p = params_for(3, 1);
        let h = Tensor::matrix(1, 3, vec![0.5, -0.25, 2.0]).unwrap();
        let (context, weights, _) = self_attention(&h, &[true], &p).unwrap();
        assert_eq!(weights, vec![1.0]);
        assert_eq!(context, vec![0.5, -0.25, 2.0]);
    }

    #[test]
    fn identical_rows_give_uniform_weights() {
        let p = params_for(2, 2);
        let row = [0.3, -0.7];
        let mut data = Vec::new();
        for _ in 0..4 {
            data.extend_from_slice(&row);
        }
        let h = Tensor::matrix(4, 2, data).unwrap();
        let (context, weights, _) = self_attention(&h, &[true; 4], &p).unwrap();
        for w in &weights {
            assert!((w - 0.25).abs() < 1e-12);
        }
        for (c, r) in context.iter().zip(&row) {
            assert!((c - r).abs() < 1e-12);
        }
    }

    /// Direct three-line oracle: score each row, softmax, weighted sum.
    #[test]
    fn matches_direct_formula_oracle() {
        let mut rng = Rng::new(7);
        let (t_len, k) = (4, 3);
        let p = AttentionParams::glorot(k, k, &mut rng);
        let h = Tensor::matrix(t_len, k, rng.uniform_vec(t_len * k, -2.0, 2.0)).unwrap();

        let (context, weights, _) = self_attention(&h, &[true; 4], &p).unwrap();

        let mut scores = Vec::new();
        for t in 0..t_len {
            let mut e = 0.0;
            for j in 0..k {
                let mut pre = p.b.data()[j];
                for c in 0..k {
                    pre += p.w.at(j, c) * h.at(t, c);
                }
                e += p.v.data()[j] * pre.tanh();
            }
            scores.push(e);
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        let expect_w: Vec<f64> = exps.iter().map(|e| e / z).collect();
        let mut expect_c = vec![0.0; k];
        for t in 0..t_len {
            for j in 0..k {
                expect_c[j] += expect_w[t] * h.at(t, j);
            }
        }

        for (a, b) in weights.iter().zip(&expect_w) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in context.iter().zip(&expect_c) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn masked_positions_get_exactly_zero_weight() {
        let mut rng = Rng::new(9);
        let p = AttentionParams::glorot(2, 2, &mut rng);
        let h = Tensor::matrix(4, 2, rng.uniform_vec(8, -1.0, 1.0)).unwrap();
        let mask = [true, false, true, false];
        let (_, weights, _) = self_attention(&h, &mask, &p).unwrap();
        assert_eq!(weights[1], 0.0);
        assert_eq!(weights[3], 0.0);
        let live: f64 = weights[0] + weights[2];
        assert!((live - 1.0).abs() < 1e-9);
    }

    #[test]
    fn all_masked_is_rejected() {
        let p = params_for(2, 3);
        let h = Tensor::matrix(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(
            self_attention(&h, &[false, false], &p).unwrap_err(),
            Error::Invalid(_)
        ));
    }

    /// Appending masked pad rows must not move the context at all.
    #[test]
    fn padded_positions_do_not_change_context() {
        let mut rng = Rng::new(11);
        let p = AttentionParams::glorot(3, 3, &mut rng);
        let h = Tensor::matrix(3, 3, rng.uniform_vec(9, -1.0, 1.0)).unwrap();
        let (c_short, _, _) = self_attention(&h, &[true; 3], &p).unwrap();

        let mut padded = h.data().to_vec();
        padded.extend_from_slice(&[9.0, 9.0, 9.0, -9.0, -9.0, -9.0]);
        let h_pad = Tensor::matrix(5, 3, padded).unwrap();
        let (c_pad, w_pad, _) = self_attention(&h_pad, &[true, true, true, false, false], &p)
            .unwrap();

        for (a, b) in c_short.iter().zip(&c_pad) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(w_pad[3], 0.0);
        assert_eq!(w_pad[4], 0.0);
    }

    /// Finite-difference check over (w, b, v) with objective sum(context).
    #[test]
    fn parameter_gradients_match_finite_differences() {
        use crate::gradcheck::grad_check;

        let mut rng = Rng::new(13);
        let (t_len, k) = (3, 2);
        let p0 = AttentionParams::glorot(k, k, &mut rng);
        let h = Tensor::matrix(t_len, k, rng.uniform_vec(t_len * k, -1.0, 1.0)).unwrap();
        let mask = [true, true, false];

        let unpack = |theta: &[f64]| AttentionParams {
            w: Tensor::matrix(k, k, theta[..k * k].to_vec()).unwrap(),
            b: Tensor::vector(theta[k * k..k * k + k].to_vec()),
            v: Tensor::vector(theta[k * k + k..].to_vec()),
        };
        let theta: Vec<f64> = p0
            .w
            .data()
            .iter()
            .chain(p0.b.data())
            .chain(p0.v.data())
            .copied()
            .collect();

        let mut f = |t: &[f64]| {
            let p = unpack(t);
            let (context, _, _) = self_attention(&h, &mask, &p)?;
            Ok(context.iter().sum())
        };

        let (_, _, cache) = self_attention(&h, &mask, &p0).unwrap();
        let (grads, _) = attention_backward(&p0, &cache, &[1.0; 2]);
        let analytic: Vec<f64> = grads
            .w
            .data()
            .iter()
            .chain(grads.b.data())
            .chain(grads.v.data())
            .copied()
            .collect();

        let err = grad_check(&mut f, &theta, &analytic, &mut Rng::new(14)).unwrap();
        assert!(err < 1e-4, "max rel err {err}");
    }

    /// Finite-difference check on the hidden-state gradient.
    #[test]
    fn hidden_state_gradients_match_finite_differences() {
        use crate::gradcheck::grad_check;

        let mut rng = Rng::new(15);
        let (t_len, k) = (4, 3);
        let p = AttentionParams::glorot(k, k, &mut rng);
        let h0 = rng.uniform_vec(t_len * k, -1.0, 1.0);
        let mask = [true, false, true, true];

        let mut f = |hs: &[f64]| {
            let h = Tensor::matrix(t_len, k, hs.to_vec())?;
            let (context, _, _) = self_attention(&h, &mask, &p)?;
            Ok(context.iter().sum())
        };

        let h = Tensor::matrix(t_len, k, h0.clone()).unwrap();
        let (_, _, cache) = self_attention(&h, &mask, &p).unwrap();
        let (_, d_h) = attention_backward(&p, &cache, &[1.0; 3]);

        let err = grad_check(&mut f, &h0, d_h.data(), &mut Rng::new(16)).unwrap();
        assert!(err < 1e-4, "max rel err {err}");

        // Masked row must receive exactly zero gradient.
        assert!(d_h.row(1).iter().all(|&g| g == 0.0));
    }
}
