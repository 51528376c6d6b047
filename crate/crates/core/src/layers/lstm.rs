//! LSTM and Bi-LSTM encoders with hand-derived backward passes.
//!
//! Gate order is fixed as (input i, forget f, cell g, output o), packed
//! along the leading dimension of the weight arrays. Per timestep, with
//! pre-activations `a = W x_t + U h_{t-1} + b` split into four u-sized
//! blocks:
//!
//! ```text
//! i = sigmoid(a_i),  f = sigmoid(a_f),  g = tanh(a_g),  o = sigmoid(a_o)
//! c_t = f * c_{t-1} + i * g
//! h_t = o * tanh(c_t)
//! ```
//!
//! Since `|o| < 1` and `|tanh(c_t)| < 1`, every hidden-state entry is
//! strictly inside (-1, 1) on finite inputs.
//!
//! The backward pass is standard backpropagation through time over the
//! cached gate activations; it accepts an upstream gradient for every
//! timestep because the attention layer consumes all hidden states.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{sigmoid, Tensor};

/// LSTM parameters: input weights `w` [4u×d], recurrent weights `u`
/// [4u×u], bias `b` [4u].
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
    pub units: usize,
}

impl LstmParams {
    /// Glorot-uniform weights, zero biases except the forget-gate block,
    /// which is initialized to 1.0.
    pub fn glorot(input_dim: usize, units: usize, rng: &mut Rng) -> Self {
        let wl = (6.0 / (input_dim + units) as f64).sqrt();
        let ul = (6.0 / (units + units) as f64).sqrt();
        let w = Tensor::matrix(4 * units, input_dim, rng.uniform_vec(4 * units * input_dim, -wl, wl))
            .expect("positive dims");
        let u = Tensor::matrix(4 * units, units, rng.uniform_vec(4 * units * units, -ul, ul))
            .expect("positive dims");
        let mut b = Tensor::zeros(&[4 * units]);
        for x in &mut b.data_mut()[units..2 * units] {
            *x = 1.0;
        }
        LstmParams { w, u, b, units }
    }

    /// All-zero parameters; with these, every hidden state is exactly zero.
    pub fn zeros(input_dim: usize, units: usize) -> Self {
        LstmParams {
            w: Tensor::zeros(&[4 * units, input_dim]),
            u: Tensor::zeros(&[4 * units, units]),
            b: Tensor::zeros(&[4 * units]),
            units,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }
}

/// Per-timestep activations cached by the forward pass for backward.
#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Tensor,
    // Each entry is one timestep's vector of length `units`.
    i: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    o: Vec<Vec<f64>>,
    c_prev: Vec<Vec<f64>>,
    h_prev: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
}

/// Gradients with respect to one direction's LSTM parameters.
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
}

impl LstmGrads {
    pub fn zeros(p: &LstmParams) -> Self {
        LstmGrads {
            w: Tensor::zeros(p.w.shape()),
            u: Tensor::zeros(p.u.shape()),
            b: Tensor::zeros(p.b.shape()),
        }
    }
}

/// Runs the recurrence over `x` [T×d] from zero initial state, returning
/// hidden states [T×u] and the cache needed by [`lstm_backward`].
pub fn lstm_forward(x: &Tensor, p: &LstmParams) -> Result<(Tensor, LstmCache)> {
    let t_len = x.rows();
    let d = x.cols();
    let u = p.units;
    if x.rank() != 2 || d != p.input_dim() {
        return Err(Error::Shape(format!(
            "lstm input shape {:?} does not match input_dim {}",
            x.shape(),
            p.input_dim()
        )));
    }

    let mut cache = LstmCache {
        x: x.clone(),
        i: Vec::with_capacity(t_len),
        f: Vec::with_capacity(t_len),
        g: Vec::with_capacity(t_len),
        o: Vec::with_capacity(t_len),
        c_prev: Vec::with_capacity(t_len),
        h_prev: Vec::with_capacity(t_len),
        tanh_c: Vec::with_capacity(t_len),
    };

    let mut h = vec![0.0; u];
    let mut c = vec![0.0; u];
    let mut hidden = Vec::with_capacity(t_len * u);

    for t in 0..t_len {
        // a = W x_t + U h_{t-1} + b
        let mut a = p.w.matvec(x.row(t))?;
        let rec = p.u.matvec(&h)?;
        for (av, (rv, bv)) in a.iter_mut().zip(rec.iter().zip(p.b.data())) {
            *av += rv + bv;
        }

        cache.h_prev.push(h.clone());
        cache.c_prev.push(c.clone());

        let mut gi = vec![0.0; u];
        let mut gf = vec![0.0; u];
        let mut gg = vec![0.0; u];
        let mut go = vec![0.0; u];
        for k in 0..u {
            gi[k] = sigmoid(a[k]);
            gf[k] = sigmoid(a[u + k]);
            gg[k] = a[2 * u + k].tanh();
            go[k] = sigmoid(a[3 * u + k]);
        }

        let mut tanh_c = vec![0.0; u];
        for k in 0..u {
            c[k] = gf[k] * c[k] + gi[k] * gg[k];
            tanh_c[k] = c[k].tanh();
            h[k] = go[k] * tanh_c[k];
        }
        hidden.extend_from_slice(&h);

        cache.i.push(gi);
        cache.f.push(gf);
        cache.g.push(gg);
        cache.o.push(go);
        cache.tanh_c.push(tanh_c);
    }

    Ok((Tensor::matrix(t_len, u, hidden)?, cache))
}

/// Backpropagation through time.
///
/// `d_h` [T×u] is the upstream gradient on every hidden state. Returns
/// parameter gradients and the gradient with respect to the input [T×d].
pub fn lstm_backward(p: &LstmParams, cache: &LstmCache, d_h: &Tensor) -> (LstmGrads, Tensor) {
    let t_len = cache.x.rows();
    let d = cache.x.cols();
    let u = p.units;
    assert_eq!(
        d_h.shape(),
        &[t_len, u],
        "upstream gradient shape does not match cached forward pass"
    );

    let mut grads = LstmGrads::zeros(p);
    let mut d_x = Tensor::zeros(&[t_len, d]);
    let mut dh_next = vec![0.0; u];
    let mut dc_next = vec![0.0; u];

    for t in (0..t_len).rev() {
        let (gi, gf, gg, go) = (&cache.i[t], &cache.f[t], &cache.g[t], &cache.o[t]);
        let tanh_c = &cache.tanh_c[t];
        let c_prev = &cache.c_prev[t];
        let h_prev = &cache.h_prev[t];

        // d_a packs the pre-activation gradients in gate order (i, f, g, o).
        let mut d_a = vec![0.0; 4 * u];
        let mut dc = vec![0.0; u];
        for k in 0..u {
            let dh = d_h.at(t, k) + dh_next[k];
            let dok = dh * tanh_c[k];
            dc[k] = dh * go[k] * (1.0 - tanh_c[k] * tanh_c[k]) + dc_next[k];
            let dik = dc[k] * gg[k];
            let dfk = dc[k] * c_prev[k];
            let dgk = dc[k] * gi[k];
            d_a[k] = dik * gi[k] * (1.0 - gi[k]);
            d_a[u + k] = dfk * gf[k] * (1.0 - gf[k]);
            d_a[2 * u + k] = dgk * (1.0 - gg[k] * gg[k]);
            d_a[3 * u + k] = dok * go[k] * (1.0 - go[k]);
        }

        grads.w.add_outer(&d_a, cache.x.row(t));
        grads.u.add_outer(&d_a, h_prev);
        for (b, a) in grads.b.data_mut().iter_mut().zip(&d_a) {
            *b += a;
        }

        let dx_t = p.w.matvec_t(&d_a).expect("shapes fixed by construction");
        d_x.row_mut(t).copy_from_slice(&dx_t);
        dh_next = p.u.matvec_t(&d_a).expect("shapes fixed by construction");
        for k in 0..u {
            dc_next[k] = dc[k] * gf[k];
        }
    }

    (grads, d_x)
}

/// Cache for the bidirectional encoder: one cache per direction, with the
/// backward direction's cache built over the reversed input.
#[derive(Debug, Clone)]
pub struct BilstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
}

/// Bidirectional encoder: row t is `concat(fwd_h_t, bwd_h_t)` where the
/// backward LSTM runs over the reversed sequence and its outputs are
/// re-reversed to align with t. Output shape [T×2u].
pub fn bilstm_forward(
    x: &Tensor,
    p_fwd: &LstmParams,
    p_bwd: &LstmParams,
) -> Result<(Tensor, BilstmCache)> {
    if p_fwd.units != p_bwd.units {
        return Err(Error::Config(format!(
            "bilstm directions disagree on units: {} vs {}",
            p_fwd.units, p_bwd.units
        )));
    }
    let t_len = x.rows();
    let u = p_fwd.units;

    let (h_fwd, cache_fwd) = lstm_forward(x, p_fwd)?;
    let x_rev = reverse_rows(x);
    let (h_bwd_rev, cache_bwd) = lstm_forward(&x_rev, p_bwd)?;

    let mut data = Vec::with_capacity(t_len * 2 * u);
    for t in 0..t_len {
        data.extend_from_slice(h_fwd.row(t));
        data.extend_from_slice(h_bwd_rev.row(t_len - 1 - t));
    }
    Ok((
        Tensor::matrix(t_len, 2 * u, data)?,
        BilstmCache {
            fwd: cache_fwd,
            bwd: cache_bwd,
        },
    ))
}

/// Backward pass of the bidirectional encoder. `d_h` is [T×2u]; returns
/// per-direction parameter gradients and the input gradient [T×d].
pub fn bilstm_backward(
    p_fwd: &LstmParams,
    p_bwd: &LstmParams,
    cache: &BilstmCache,
    d_h: &Tensor,
) -> (LstmGrads, LstmGrads, Tensor) {
    let t_len = d_h.rows();
    let u = p_fwd.units;
    assert_eq!(d_h.cols(), 2 * u);

    let mut d_fwd = Vec::with_capacity(t_len * u);
    let mut d_bwd_rev = vec![0.0; t_len * u];
    for t in 0..t_len {
        let row = d_h.row(t);
        d_fwd.extend_from_slice(&row[..u]);
        // Upstream for the reversed run: position t of the original maps to
        // position T-1-t of the reversed sequence.
        d_bwd_rev[(t_len - 1 - t) * u..(t_len - t) * u].copy_from_slice(&row[u..]);
    }
    let d_fwd = Tensor::matrix(t_len, u, d_fwd).expect("positive dims");
    let d_bwd_rev = Tensor::matrix(t_len, u, d_bwd_rev).expect("positive dims");

    let (g_fwd, dx_fwd) = lstm_backward(p_fwd, &cache.fwd, &d_fwd);
    let (g_bwd, dx_bwd_rev) = lstm_backward(p_bwd, &cache.bwd, &d_bwd_rev);

    let mut d_x = dx_fwd;
    let dx_bwd = reverse_rows(&dx_bwd_rev);
    d_x.add_scaled(&dx_bwd, 1.0);
    (g_fwd, g_bwd, d_x)
}

/// Reverses the row order of a rank-2 tensor.
pub fn reverse_rows(x: &Tensor) -> Tensor {
    let (r, c) = (x.rows(), x.cols());
    let mut data = Vec::with_capacity(r * c);
    for t in (0..r).rev() {
        data.extend_from_slice(x.row(t));
    }
    Tensor::matrix(r, c, data).expect("same shape")
}
