// SPDX-License-Identifier: Apache-2.0
//
// Forward pass, loss and hand-written reverse pass of the conditional
// autoencoder, batched column-wise (one column per example).
//
//   encoder:  GRU over embedded tokens, PAD steps leave the state unchanged
//   heads:    mu, logvar, class logits from the final encoder state
//   latents:  z = mu + exp(logvar/2) * eps,  c = softmax((logits + g) / tau)
//   decoder:  h0 = W_init [z; c] + b_init, teacher-forced GRU, softmax(W_out h / tau)
//   loss:     rec + gamma * (KL(q(z|x) || N(0,I)) + KL(q(c|x) || U)) - alpha_y log q(y|x)
//
// GRU cell (gate rows ordered reset, update, candidate):
//   r = sig(Wr x + br + Ur h + cr)      u = sig(Wu x + bu + Uu h + cu)
//   n = tanh(Wn x + bn + r * (Un h + cn))
//   h' = (1 - u) * n + u * h

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvaegen/cvae/config.hpp"
#include "cvaegen/cvae/latent.hpp"
#include "cvaegen/cvae/params.hpp"
#include "cvaegen/corpus.hpp"
#include "cvaegen/error.hpp"

namespace cvaegen::cvae {

/// Batch means of the loss terms; total = rec + gamma (kl_gauss + kl_cat) + cat.
struct LossBreakdown {
  double rec = 0.0;
  double kl_gauss = 0.0;
  double kl_cat = 0.0;
  double cat = 0.0;
  double gamma = 0.0;
  double total = 0.0;
};

/// Externally supplied noise, so a loss evaluation is a pure function of
/// (params, batch, noise): gaussian is Z x B standard normal, uniform is
/// C x B in the open interval (0, 1).
template <typename Real>
struct LatentNoise {
  Mat<Real> gaussian;
  Mat<Real> uniform;

  static LatentNoise draw(int z_dim, int n_classes, int batch, Rng& rng) {
    LatentNoise n{Mat<Real>(z_dim, batch), Mat<Real>(n_classes, batch)};
    for (int b = 0; b < batch; ++b) {
      for (int i = 0; i < z_dim; ++i) n.gaussian(i, b) = static_cast<Real>(rng.normal());
      for (int i = 0; i < n_classes; ++i) {
        Real u;
        do {
          u = static_cast<Real>(rng.uniform_open());
        } while (!(u > Real(0) && u < Real(1)));  // float rounding can reach 1
        n.uniform(i, b) = u;
      }
    }
    return n;
  }
};

/// Token ids (max_len x B, column per example) and class indices.
struct Batch {
  Eigen::MatrixXi ids;
  std::vector<int> classes;

  int size() const { return static_cast<int>(ids.cols()); }

  static Batch from_sequences(const std::vector<const std::vector<int>*>& seqs, const std::vector<int>& classes) {
    Batch b;
    if (seqs.empty()) return b;
    const auto len = static_cast<Eigen::Index>(seqs.front()->size());
    b.ids.resize(len, static_cast<Eigen::Index>(seqs.size()));
    for (std::size_t j = 0; j < seqs.size(); ++j) {
      if (static_cast<Eigen::Index>(seqs[j]->size()) != len) throw ValidationError("Batch: ragged sequences");
      for (Eigen::Index t = 0; t < len; ++t) b.ids(t, static_cast<Eigen::Index>(j)) = (*seqs[j])[static_cast<std::size_t>(t)];
    }
    b.classes = classes;
    return b;
  }
};

namespace detail {

template <typename Real>
inline Mat<Real> sigmoid(const Mat<Real>& x) {
  return (Real(1) / (Real(1) + (-x.array()).exp())).matrix();
}

/// Column-wise softmax and log-softmax.
template <typename Real>
inline void softmax_columns(const Mat<Real>& logits, Mat<Real>& probs, Mat<Real>& log_probs) {
  const Eigen::Matrix<Real, 1, Eigen::Dynamic> peak = logits.colwise().maxCoeff();
  log_probs = logits.rowwise() - peak;
  const Eigen::Matrix<Real, 1, Eigen::Dynamic> lse = log_probs.array().exp().colwise().sum().log().matrix();
  log_probs.rowwise() -= lse;
  probs = log_probs.array().exp().matrix();
}

template <typename Real>
struct GruStepCache {
  Mat<Real> h_prev, r, u, n, hh_n;
};

/// One GRU step for a batch; `ax` holds W x + b for this step (3H x B).
template <typename Real>
inline Mat<Real> gru_step(const GruWeights<Real>& w, const Mat<Real>& ax, const Mat<Real>& h, GruStepCache<Real>* cache) {
  const Eigen::Index hd = h.rows();
  Mat<Real> hh = w.w_hidden * h;
  hh.colwise() += w.b_hidden.col(0);
  Mat<Real> r = sigmoid<Real>(ax.topRows(hd) + hh.topRows(hd));
  Mat<Real> u = sigmoid<Real>(ax.middleRows(hd, hd) + hh.middleRows(hd, hd));
  Mat<Real> n = (ax.bottomRows(hd).array() + r.array() * hh.bottomRows(hd).array()).tanh().matrix();
  Mat<Real> h_new = ((Real(1) - u.array()) * n.array() + u.array() * h.array()).matrix();
  if (cache) {
    cache->h_prev = h;
    cache->r = std::move(r);
    cache->u = std::move(u);
    cache->n = std::move(n);
    cache->hh_n = hh.bottomRows(hd);
  }
  return h_new;
}

/// Reverse of gru_step. Accumulates into dw_hidden / db_hidden, writes the
/// input-side pre-activation gradient into d_ax and returns dL/dh_prev.
template <typename Real>
inline Mat<Real> gru_step_backward(const GruWeights<Real>& w, const GruStepCache<Real>& c, const Mat<Real>& dh_new,
                                   Mat<Real>& d_ax, GruWeights<Real>& dw) {
  const Eigen::Index hd = c.h_prev.rows();
  const auto u = c.u.array();
  const auto r = c.r.array();
  const auto n = c.n.array();
  const auto dh = dh_new.array();
  Mat<Real> dn_pre = (dh * (Real(1) - u) * (Real(1) - n.square())).matrix();
  Mat<Real> du_pre = (dh * (c.h_prev.array() - n) * u * (Real(1) - u)).matrix();
  Mat<Real> dr_pre = (dn_pre.array() * c.hh_n.array() * r * (Real(1) - r)).matrix();
  d_ax.resize(3 * hd, c.h_prev.cols());
  d_ax.topRows(hd) = dr_pre;
  d_ax.middleRows(hd, hd) = du_pre;
  d_ax.bottomRows(hd) = dn_pre;
  Mat<Real> d_hh(3 * hd, c.h_prev.cols());
  d_hh.topRows(hd) = dr_pre;
  d_hh.middleRows(hd, hd) = du_pre;
  d_hh.bottomRows(hd) = (dn_pre.array() * r).matrix();
  dw.w_hidden.noalias() += d_hh * c.h_prev.transpose();
  dw.b_hidden.col(0) += d_hh.rowwise().sum();
  Mat<Real> dh_prev = (dh * u).matrix();
  dh_prev.noalias() += w.w_hidden.transpose() * d_hh;
  return dh_prev;
}

template <typename Real>
inline Mat<Real> gather_embeddings(const Mat<Real>& embedding, const Eigen::MatrixXi& ids, int first_step, int steps) {
  const Eigen::Index b = ids.cols();
  Mat<Real> x(embedding.rows(), steps * b);
  for (int t = 0; t < steps; ++t) {
    for (Eigen::Index j = 0; j < b; ++j) {
      const int id = ids(first_step + t, j);
      if (id < 0 || id >= embedding.cols()) {
        throw IndexError("token id " + std::to_string(id) + " outside vocabulary of size " +
                         std::to_string(embedding.cols()));
      }
      x.col(t * b + j) = embedding.col(id);
    }
  }
  return x;
}

template <typename Real>
inline void scatter_embedding_grad(Mat<Real>& d_embedding, const Eigen::MatrixXi& ids, int first_step, int steps,
                                   const Mat<Real>& dx) {
  const Eigen::Index b = ids.cols();
  for (int t = 0; t < steps; ++t) {
    for (Eigen::Index j = 0; j < b; ++j) d_embedding.col(ids(first_step + t, j)) += dx.col(t * b + j);
  }
}

/// Number of leading steps that contain at least one non-PAD token.
inline int active_steps(const Eigen::MatrixXi& ids) {
  int last = -1;
  for (Eigen::Index t = 0; t < ids.rows(); ++t) {
    if ((ids.row(t).array() != Vocabulary::kPad).any()) last = static_cast<int>(t);
  }
  return last + 1;
}

}  // namespace detail

/// Encoder output for one batch: heads applied to the final masked state.
template <typename Real>
struct EncoderOutput {
  Mat<Real> mu, logvar, class_logits;  // Z x B, Z x B, C x B
};

/// Runs the encoder GRU and the three linear heads.
template <typename Real>
EncoderOutput<Real> encode_batch(const CvaeParams<Real>& p, const Eigen::MatrixXi& ids) {
  const int hd = static_cast<int>(p.encoder.w_hidden.cols());
  const Eigen::Index b = ids.cols();
  const int steps = detail::active_steps(ids);
  Mat<Real> h = Mat<Real>::Zero(hd, b);
  if (steps > 0) {
    Mat<Real> ax = p.encoder.w_input * detail::gather_embeddings(p.embedding, ids, 0, steps);
    ax.colwise() += p.encoder.b_input.col(0);
    for (int t = 0; t < steps; ++t) {
      Mat<Real> h_new = detail::gru_step<Real>(p.encoder, ax.middleCols(t * b, b), h, nullptr);
      for (Eigen::Index j = 0; j < b; ++j) {
        if (ids(t, j) != Vocabulary::kPad) h.col(j) = h_new.col(j);
      }
    }
  }
  EncoderOutput<Real> out;
  out.mu = (p.mu_w * h).colwise() + p.mu_b.col(0);
  out.logvar = (p.logvar_w * h).colwise() + p.logvar_b.col(0);
  out.class_logits = (p.class_w * h).colwise() + p.class_b.col(0);
  return out;
}

/// Single-sequence encode: returns (mu, logvar, class_logits).
template <typename Real>
EncoderOutput<Real> encode(const CvaeParams<Real>& p, const std::vector<int>& ids) {
  Eigen::MatrixXi m(static_cast<Eigen::Index>(ids.size()), 1);
  for (std::size_t t = 0; t < ids.size(); ++t) m(static_cast<Eigen::Index>(t), 0) = ids[t];
  return encode_batch(p, m);
}

/// Loss of one batch; when `grad` is non-null it is overwritten with the
/// exact gradient of the total loss for the given noise.
template <typename Real>
LossBreakdown evaluate_batch(const CvaeParams<Real>& p, const Batch& batch, const std::vector<double>& alpha,
                             double gamma, Real tau, const LatentNoise<Real>& noise, CvaeParams<Real>* grad) {
  const int bsz = batch.size();
  if (bsz == 0) throw ValidationError("evaluate_batch: empty batch");
  const int hd = static_cast<int>(p.encoder.w_hidden.cols());
  const int zd = static_cast<int>(p.mu_w.rows());
  const int nc = static_cast<int>(p.class_w.rows());
  if (static_cast<int>(alpha.size()) != nc) throw ValidationError("evaluate_batch: alpha length != n_classes");
  if (static_cast<int>(batch.classes.size()) != bsz) throw ValidationError("evaluate_batch: classes/batch mismatch");
  for (int y : batch.classes) {
    if (y < 0 || y >= nc) throw IndexError("class index " + std::to_string(y) + " outside [0, " + std::to_string(nc) + ")");
  }
  if (noise.gaussian.rows() != zd || noise.gaussian.cols() != bsz || noise.uniform.rows() != nc ||
      noise.uniform.cols() != bsz) {
    throw ValidationError("evaluate_batch: noise shape mismatch");
  }
  const Eigen::MatrixXi& ids = batch.ids;
  const Real inv_b = Real(1) / static_cast<Real>(bsz);

  // ---- encoder ----
  const int enc_steps = detail::active_steps(ids);
  Mat<Real> enc_x, enc_ax;
  std::vector<detail::GruStepCache<Real>> enc_cache(static_cast<std::size_t>(enc_steps));
  Mat<Real> h = Mat<Real>::Zero(hd, bsz);
  if (enc_steps > 0) {
    enc_x = detail::gather_embeddings(p.embedding, ids, 0, enc_steps);
    enc_ax = p.encoder.w_input * enc_x;
    enc_ax.colwise() += p.encoder.b_input.col(0);
  }
  for (int t = 0; t < enc_steps; ++t) {
    Mat<Real> h_new = detail::gru_step<Real>(p.encoder, enc_ax.middleCols(t * bsz, bsz), h, &enc_cache[static_cast<std::size_t>(t)]);
    for (int j = 0; j < bsz; ++j) {
      if (ids(t, j) != Vocabulary::kPad) h.col(j) = h_new.col(j);
    }
  }
  const Mat<Real> h_enc = h;

  // ---- heads and latents ----
  const Mat<Real> mu = (p.mu_w * h_enc).colwise() + p.mu_b.col(0);
  const Mat<Real> logvar = (p.logvar_w * h_enc).colwise() + p.logvar_b.col(0);
  const Mat<Real> logits = (p.class_w * h_enc).colwise() + p.class_b.col(0);
  Mat<Real> q, log_q;
  detail::softmax_columns<Real>(logits, q, log_q);
  const Mat<Real> std_dev = (logvar.array() * Real(0.5)).exp().matrix();
  const Mat<Real> z = (mu.array() + std_dev.array() * noise.gaussian.array()).matrix();
  const Mat<Real> gumbel = (-(-noise.uniform.array().log()).log()).matrix();
  Mat<Real> c_hat, log_c_hat;
  detail::softmax_columns<Real>(((logits + gumbel) / tau).eval(), c_hat, log_c_hat);
  Mat<Real> s(zd + nc, bsz);
  s.topRows(zd) = z;
  s.bottomRows(nc) = c_hat;

  // ---- decoder ----
  const int dec_steps = std::max(0, enc_steps - 1);
  Mat<Real> dec_x, dec_ax, dec_h;
  std::vector<detail::GruStepCache<Real>> dec_cache(static_cast<std::size_t>(dec_steps));
  Mat<Real> hdec = (p.init_w * s).colwise() + p.init_b.col(0);
  if (dec_steps > 0) {
    dec_x = detail::gather_embeddings(p.embedding, ids, 0, dec_steps);
    dec_ax = p.decoder.w_input * dec_x;
    dec_ax.colwise() += p.decoder.b_input.col(0);
    dec_h.resize(hd, dec_steps * bsz);
  }
  for (int t = 0; t < dec_steps; ++t) {
    hdec = detail::gru_step<Real>(p.decoder, dec_ax.middleCols(t * bsz, bsz), hdec, &dec_cache[static_cast<std::size_t>(t)]);
    dec_h.middleCols(t * bsz, bsz) = hdec;
  }

  // ---- reconstruction ----
  std::vector<int> n_targets(static_cast<std::size_t>(bsz), 0);
  for (int t = 0; t < dec_steps; ++t) {
    for (int j = 0; j < bsz; ++j) {
      if (ids(t + 1, j) != Vocabulary::kPad) ++n_targets[static_cast<std::size_t>(j)];
    }
  }
  Mat<Real> out_probs, out_log_probs;
  std::vector<double> rec_per(static_cast<std::size_t>(bsz), 0.0);
  if (dec_steps > 0) {
    Mat<Real> out_logits = p.out_w * dec_h;
    out_logits.colwise() += p.out_b.col(0);
    out_logits /= tau;
    detail::softmax_columns<Real>(out_logits, out_probs, out_log_probs);
    for (int t = 0; t < dec_steps; ++t) {
      for (int j = 0; j < bsz; ++j) {
        const int target = ids(t + 1, j);
        if (target == Vocabulary::kPad) continue;
        rec_per[static_cast<std::size_t>(j)] -= static_cast<double>(out_log_probs(target, t * bsz + j));
      }
    }
  }

  LossBreakdown loss;
  loss.gamma = gamma;
  for (int j = 0; j < bsz; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const double rec = n_targets[uj] > 0 ? rec_per[uj] / n_targets[uj] : 0.0;
    double klg = 0.0;
    for (int i = 0; i < zd; ++i) {
      const double m = mu(i, j), lv = logvar(i, j);
      klg += 0.5 * (m * m + std::exp(lv) - lv - 1.0);
    }
    double klc = 0.0;
    for (int i = 0; i < nc; ++i) {
      if (q(i, j) > Real(0)) klc += static_cast<double>(q(i, j)) * (static_cast<double>(log_q(i, j)) + std::log(static_cast<double>(nc)));
    }
    const int y = batch.classes[uj];
    const double cat = alpha[static_cast<std::size_t>(y)] == 0.0 ? 0.0 : -alpha[static_cast<std::size_t>(y)] * static_cast<double>(log_q(y, j));
    loss.rec += rec;
    loss.kl_gauss += klg;
    loss.kl_cat += klc;
    loss.cat += cat;
  }
  loss.rec /= bsz;
  loss.kl_gauss /= bsz;
  loss.kl_cat /= bsz;
  loss.cat /= bsz;
  loss.total = loss.rec + gamma * (loss.kl_gauss + loss.kl_cat) + loss.cat;

  if (!grad) return loss;

  // =================== reverse pass ===================
  CvaeParams<Real>& g = *grad;
  g = p.zeros_like();
  const Real gam = static_cast<Real>(gamma);

  // ---- output layer ----
  Mat<Real> d_hdec = Mat<Real>::Zero(hd, bsz);
  Mat<Real> d_dec_h;
  if (dec_steps > 0) {
    Mat<Real> d_out = out_probs;
    for (int t = 0; t < dec_steps; ++t) {
      for (int j = 0; j < bsz; ++j) {
        const int target = ids(t + 1, j);
        const int col = t * bsz + j;
        if (target == Vocabulary::kPad) {
          d_out.col(col).setZero();
          continue;
        }
        d_out(target, col) -= Real(1);
        d_out.col(col) *= inv_b / (static_cast<Real>(n_targets[static_cast<std::size_t>(j)]) * tau);
      }
    }
    g.out_w.noalias() = d_out * dec_h.transpose();
    g.out_b.col(0) = d_out.rowwise().sum();
    d_dec_h.noalias() = p.out_w.transpose() * d_out;

    // ---- decoder BPTT ----
    Mat<Real> d_dec_ax(3 * hd, dec_steps * bsz);
    Mat<Real> d_ax_t;
    for (int t = dec_steps - 1; t >= 0; --t) {
      d_hdec += d_dec_h.middleCols(t * bsz, bsz);
      d_hdec = detail::gru_step_backward<Real>(p.decoder, dec_cache[static_cast<std::size_t>(t)], d_hdec, d_ax_t, g.decoder);
      d_dec_ax.middleCols(t * bsz, bsz) = d_ax_t;
    }
    g.decoder.w_input.noalias() = d_dec_ax * dec_x.transpose();
    g.decoder.b_input.col(0) = d_dec_ax.rowwise().sum();
    const Mat<Real> d_dec_x = p.decoder.w_input.transpose() * d_dec_ax;
    detail::scatter_embedding_grad<Real>(g.embedding, ids, 0, dec_steps, d_dec_x);
  }

  // ---- decoder initial state ----
  g.init_w.noalias() = d_hdec * s.transpose();
  g.init_b.col(0) = d_hdec.rowwise().sum();
  const Mat<Real> d_s = p.init_w.transpose() * d_hdec;
  const Mat<Real> d_z = d_s.topRows(zd);
  const Mat<Real> d_c_hat = d_s.bottomRows(nc);

  // ---- latents ----
  Mat<Real> d_mu = d_z + gam * inv_b * mu;
  Mat<Real> d_logvar = (d_z.array() * noise.gaussian.array() * std_dev.array() * Real(0.5) +
                        gam * inv_b * Real(0.5) * (logvar.array().exp() - Real(1)))
                           .matrix();
  // Gumbel softmax: dy = c (dc - <dc, c>), dlogits = dy / tau
  const Eigen::Matrix<Real, 1, Eigen::Dynamic> dot_c = (d_c_hat.array() * c_hat.array()).colwise().sum();
  Mat<Real> d_logits = ((d_c_hat.rowwise() - dot_c).array() * c_hat.array() / tau).matrix();
  // KL(q || U): dlogits_j = q_j (log q_j - sum_i q_i log q_i)
  const Eigen::Matrix<Real, 1, Eigen::Dynamic> neg_entropy = (q.array() * log_q.array()).colwise().sum();
  d_logits += (gam * inv_b) * ((log_q.rowwise() - neg_entropy).array() * q.array()).matrix();
  // supervision: alpha_y (q - onehot_y)
  for (int j = 0; j < bsz; ++j) {
    const int y = batch.classes[static_cast<std::size_t>(j)];
    const Real a = static_cast<Real>(alpha[static_cast<std::size_t>(y)]);
    if (a == Real(0)) continue;
    Eigen::Matrix<Real, Eigen::Dynamic, 1> col = q.col(j);
    col[y] -= Real(1);
    d_logits.col(j) += a * inv_b * col;
  }

  // ---- heads ----
  g.mu_w.noalias() = d_mu * h_enc.transpose();
  g.mu_b.col(0) = d_mu.rowwise().sum();
  g.logvar_w.noalias() = d_logvar * h_enc.transpose();
  g.logvar_b.col(0) = d_logvar.rowwise().sum();
  g.class_w.noalias() = d_logits * h_enc.transpose();
  g.class_b.col(0) = d_logits.rowwise().sum();
  Mat<Real> d_h = p.mu_w.transpose() * d_mu;
  d_h.noalias() += p.logvar_w.transpose() * d_logvar;
  d_h.noalias() += p.class_w.transpose() * d_logits;

  // ---- encoder BPTT with PAD masking ----
  if (enc_steps > 0) {
    Mat<Real> d_enc_ax(3 * hd, enc_steps * bsz);
    Mat<Real> d_ax_t;
    for (int t = enc_steps - 1; t >= 0; --t) {
      Mat<Real> d_new = d_h;
      for (int j = 0; j < bsz; ++j) {
        if (ids(t, j) == Vocabulary::kPad) d_new.col(j).setZero();
      }
      Mat<Real> d_prev = detail::gru_step_backward<Real>(p.encoder, enc_cache[static_cast<std::size_t>(t)], d_new, d_ax_t, g.encoder);
      for (int j = 0; j < bsz; ++j) {
        if (ids(t, j) != Vocabulary::kPad) d_h.col(j) = d_prev.col(j);
      }
      d_enc_ax.middleCols(t * bsz, bsz) = d_ax_t;
    }
    g.encoder.w_input.noalias() = d_enc_ax * enc_x.transpose();
    g.encoder.b_input.col(0) = d_enc_ax.rowwise().sum();
    const Mat<Real> d_enc_x = p.encoder.w_input.transpose() * d_enc_ax;
    detail::scatter_embedding_grad<Real>(g.embedding, ids, 0, enc_steps, d_enc_x);
  }
  return loss;
}

template <typename Real>
LossBreakdown batch_loss(const CvaeParams<Real>& p, const Batch& batch, const std::vector<double>& alpha, double gamma,
                         Real tau, const LatentNoise<Real>& noise) {
  return evaluate_batch<Real>(p, batch, alpha, gamma, tau, noise, nullptr);
}

template <typename Real>
std::pair<LossBreakdown, CvaeParams<Real>> backward(const CvaeParams<Real>& p, const Batch& batch,
                                                    const std::vector<double>& alpha, double gamma, Real tau,
                                                    const LatentNoise<Real>& noise) {
  CvaeParams<Real> g;
  auto loss = evaluate_batch<Real>(p, batch, alpha, gamma, tau, noise, &g);
  return {loss, std::move(g)};
}

}  // namespace cvaegen::cvae
