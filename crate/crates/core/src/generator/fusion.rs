//! Embedding-space fusion primitives: the compositional de-attention (CoDA)
//! operator and the fused-encoding container.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ToxgenError};
use crate::scalar::Scalar;

/// Encoder outputs before and after fusion.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FusedEncoding<S: Scalar> {
    pub h_utter: Array2<S>,
    pub h_toxic: Array2<S>,
    pub fused: Array2<S>,
}

/// CoDA attention:
/// `psi = (tanh(Q K^T / sqrt(d_k)) .* sigmoid(phi(Q, K) / sqrt(d_k))) V`
/// with `phi` the negative scaled pairwise L1 distance,
/// `phi[i][j] = -alpha * sum_d |q_i - k_j|`.
pub fn coda_attention<S: Scalar>(
    q: &Array2<S>,
    k: &Array2<S>,
    v: &Array2<S>,
    alpha: f64,
) -> Result<Array2<S>> {
    if q.ncols() != k.ncols() {
        return Err(ToxgenError::Shape(format!(
            "coda: query width {} != key width {}",
            q.ncols(),
            k.ncols()
        )));
    }
    if k.nrows() != v.nrows() {
        return Err(ToxgenError::Shape(format!(
            "coda: {} keys but {} value rows",
            k.nrows(),
            v.nrows()
        )));
    }
    let d_k = S::from_usize_(q.ncols());
    let scale = S::one() / d_k.sqrt();
    let a = S::from_f64_(alpha);

    let affinity = q.dot(&k.t()).mapv(|x| (x * scale).tanh());
    let mut gate = Array2::zeros((q.nrows(), k.nrows()));
    for i in 0..q.nrows() {
        for j in 0..k.nrows() {
            let mut dist = S::zero();
            for d in 0..q.ncols() {
                dist += (q[[i, d]] - k[[j, d]]).abs();
            }
            let phi = -a * dist;
            gate[[i, j]] = S::one() / (S::one() + (-(phi * scale)).exp());
        }
    }
    Ok((&affinity * &gate).dot(v))
}
