#include "ospar/scorer.hpp"

#include <cmath>
#include <numeric>

namespace ospar {

namespace {

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

void glorot(Tensor& t, Rng& rng) {
  const double limit = std::sqrt(6.0 / (t.rows() + t.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : t.data) v = dist(rng);
}

}  // namespace

Tensor::Tensor(std::string name_, std::vector<int> shape_) : name(std::move(name_)), shape(std::move(shape_)) {
  std::size_t n = 1;
  for (int s : shape) n *= static_cast<std::size_t>(s);
  data.assign(n, 0.0);
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out = *this;
  out.set_zero();
  return out;
}

void ParameterSet::set_zero() {
  for (auto& t : tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
}

void ParameterSet::add_scaled(const ParameterSet& other, double scale) {
  if (other.tensors.size() != tensors.size()) throw std::invalid_argument("parameter set layout mismatch");
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto& dst = tensors[t].data;
    const auto& src = other.tensors[t].data;
    if (dst.size() != src.size()) throw std::invalid_argument("parameter tensor size mismatch: " + tensors[t].name);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * src[k];
  }
}

std::size_t ParameterSet::num_values() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

double& ParameterSet::value(std::size_t coordinate) {
  for (auto& t : tensors) {
    if (coordinate < t.size()) return t.data[coordinate];
    coordinate -= t.size();
  }
  throw std::out_of_range("parameter coordinate out of range");
}

bool ParameterSet::all_finite() const {
  for (const auto& t : tensors)
    for (double v : t.data)
      if (!std::isfinite(v)) return false;
  return true;
}

SentenceTooLong::SentenceTooLong(int n, int max_len)
    : std::runtime_error("sentence of length " + std::to_string(n) + " exceeds model limit " +
                         std::to_string(max_len - 1)) {}

ScorerModel::ScorerModel(ScorerConfig config, Vocabulary tokens, Vocabulary labels)
    : config_(config), tokens_(std::move(tokens)), labels_(std::move(labels)) {
  const int d = config_.embed_dim, h = config_.hidden_dim, L = labels_.size();
  if (d <= 0 || d % 2 != 0) throw std::invalid_argument("embedding dimension must be positive and even");
  if (h <= 0 || config_.max_len <= 0) throw std::invalid_argument("hidden dimension and max length must be positive");
  auto& ts = params_.tensors;
  ts.emplace_back("token_embedding", std::vector<int>{tokens_.size(), d});
  ts.emplace_back("position_embedding", std::vector<int>{config_.max_len + 1, d});
  ts.emplace_back("mix.weight", std::vector<int>{d, 2 * d});
  ts.emplace_back("mix.bias", std::vector<int>{d});
  for (const char* o : {"left", "right"}) {
    const std::string p = std::string("head.") + o + ".";
    ts.emplace_back(p + "w1", std::vector<int>{h, d});
    ts.emplace_back(p + "b1", std::vector<int>{h});
    ts.emplace_back(p + "ln_gain", std::vector<int>{h});
    ts.emplace_back(p + "ln_bias", std::vector<int>{h});
    ts.emplace_back(p + "w2", std::vector<int>{L, h});
    ts.emplace_back(p + "b2", std::vector<int>{L});
  }
  for (Order o : {Order::Left, Order::Right}) {
    auto& g = tensor(head_slot(o, kLnGain)).data;
    std::fill(g.begin(), g.end(), 1.0);
  }
}

ScorerModel ScorerModel::random(ScorerConfig config, Vocabulary tokens, Vocabulary labels, Rng& rng) {
  ScorerModel m(config, std::move(tokens), std::move(labels));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int slot : {kTokenEmb, kPositionEmb})
    for (auto& v : m.tensor(slot).data) v = normal(rng);
  glorot(m.tensor(kMixWeight), rng);
  for (Order o : {Order::Left, Order::Right}) {
    glorot(m.tensor(head_slot(o, kW1)), rng);
    glorot(m.tensor(head_slot(o, kW2)), rng);
  }
  return m;
}

std::vector<int> ScorerModel::token_ids(std::span<const std::string> words) const {
  const int unk = tokens_.id(kUnknownToken);
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(tokens_.id_or(w, unk));
  return ids;
}

Encoding encode(const ScorerModel& model, std::span<const int> word_ids, ForwardCache* cache) {
  const auto& cfg = model.config();
  const int n = static_cast<int>(word_ids.size());
  if (n >= cfg.max_len) throw SentenceTooLong(n, cfg.max_len);
  const int d = cfg.embed_dim, half = d / 2, width = 2 * d;
  const int vocab = model.tokens().size();

  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(n) + 2);
  ids.push_back(model.tokens().id(kStartToken));
  for (int w : word_ids) {
    if (w < 0 || w >= vocab) throw std::out_of_range("token id outside vocabulary");
    ids.push_back(w);
  }
  ids.push_back(model.tokens().id(kStopToken));
  if (ids.front() < 0 || ids.back() < 0) throw std::invalid_argument("token vocabulary lacks sentinel symbols");

  const auto& tok = model.tensor(ScorerModel::kTokenEmb);
  const auto& pos = model.tensor(ScorerModel::kPositionEmb);
  const auto& mw = model.tensor(ScorerModel::kMixWeight);
  const auto& mb = model.tensor(ScorerModel::kMixBias);

  const int T = n + 2;
  std::vector<double> inputs(static_cast<std::size_t>(T) * width);
  std::vector<double> mixed(static_cast<std::size_t>(T) * d);
  for (int t = 0; t < T; ++t) {
    double* e = &inputs[static_cast<std::size_t>(t) * width];
    auto tr = tok.row(ids[static_cast<std::size_t>(t)]);
    auto pr = pos.row(t);
    std::copy(tr.begin(), tr.end(), e);
    std::copy(pr.begin(), pr.end(), e + d);
    double* r = &mixed[static_cast<std::size_t>(t) * d];
    for (int u = 0; u < d; ++u) r[u] = std::tanh(mb.data[static_cast<std::size_t>(u)] + dot(mw.row(u).data(), e, width));
  }

  Encoding enc;
  enc.n = n;
  enc.dim = d;
  enc.fenceposts.resize(static_cast<std::size_t>(n + 1) * d);
  for (int k = 0; k <= n; ++k) {
    double* h = &enc.fenceposts[static_cast<std::size_t>(k) * d];
    const double* left = &mixed[static_cast<std::size_t>(k) * d];
    const double* right = &mixed[static_cast<std::size_t>(k + 1) * d];
    std::copy(left, left + half, h);
    std::copy(right + half, right + d, h + half);
  }

  if (cache) {
    cache->token_ids = std::move(ids);
    cache->inputs = std::move(inputs);
    cache->mixed = std::move(mixed);
    cache->encoding = enc;
  }
  return enc;
}

std::vector<double> span_vector(const Encoding& encoding, int i, int j) {
  if (i < 0 || j > encoding.n || i >= j)
    throw std::out_of_range("span (" + std::to_string(i) + "," + std::to_string(j) + ") outside sentence of length " +
                            std::to_string(encoding.n));
  const int d = encoding.dim, half = d / 2;
  auto hi = encoding.fencepost(i), hj = encoding.fencepost(j);
  std::vector<double> v(static_cast<std::size_t>(d));
  for (int c = 0; c < half; ++c) {
    v[static_cast<std::size_t>(c)] = hj[static_cast<std::size_t>(c)] - hi[static_cast<std::size_t>(c)];
    v[static_cast<std::size_t>(half + c)] = hi[static_cast<std::size_t>(half + c)] - hj[static_cast<std::size_t>(half + c)];
  }
  return v;
}

void layer_norm(std::span<const double> in, std::span<double> out, double eps, double* inv_std) {
  const double n = static_cast<double>(in.size());
  const double mean = std::accumulate(in.begin(), in.end(), 0.0) / n;
  double var = 0.0;
  for (double x : in) var += (x - mean) * (x - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = (in[k] - mean) * inv;
  if (inv_std) *inv_std = inv;
}

SpanScoreChart score_spans(const ScorerModel& model, std::span<const int> word_ids, ForwardCache* cache,
                           ScoreHeads heads) {
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.valid = false;
  const Encoding enc = encode(model, word_ids, &fc);
  const auto& cfg = model.config();
  const int n = enc.n, d = cfg.embed_dim, half = d / 2, h = cfg.hidden_dim, L = model.num_labels();
  SpanScoreChart chart(n, L);
  const std::size_t spans = chart.num_spans();
  fc.heads = heads;

  std::vector<double> z(static_cast<std::size_t>(h));
  for (Order o : {Order::Left, Order::Right}) {
    auto& hc = fc.head[order_index(o)];
    if (o == Order::Right && heads == ScoreHeads::LeftOnly) {
      hc = {};
      continue;
    }
    const auto& w1 = model.tensor(ScorerModel::head_slot(o, ScorerModel::kW1));
    const auto& b1 = model.tensor(ScorerModel::head_slot(o, ScorerModel::kB1)).data;
    const auto& gain = model.tensor(ScorerModel::head_slot(o, ScorerModel::kLnGain)).data;
    const auto& bias = model.tensor(ScorerModel::head_slot(o, ScorerModel::kLnBias)).data;
    const auto& w2 = model.tensor(ScorerModel::head_slot(o, ScorerModel::kW2));
    const auto& b2 = model.tensor(ScorerModel::head_slot(o, ScorerModel::kB2)).data;

    // W1 v(i,j) = q_j - q_i with q_k = W1_fwd fwd(h_k) - W1_bwd bwd(h_k).
    hc.projected.assign(static_cast<std::size_t>(n + 1) * h, 0.0);
    for (int k = 0; k <= n; ++k) {
      const double* hk = enc.fencepost(k).data();
      double* q = &hc.projected[static_cast<std::size_t>(k) * h];
      for (int r = 0; r < h; ++r) {
        const double* wr = w1.row(r).data();
        q[r] = dot(wr, hk, half) - dot(wr + half, hk + half, half);
      }
    }
    hc.normalized.assign(spans * h, 0.0);
    hc.activated.assign(spans * h, 0.0);
    hc.inv_std.assign(spans, 0.0);
    for (int w = 1; w <= n; ++w)
      for (int i = 0; i + w <= n; ++i) {
        const int j = i + w;
        const std::size_t c = chart.cell(i, j);
        const double* qi = &hc.projected[static_cast<std::size_t>(i) * h];
        const double* qj = &hc.projected[static_cast<std::size_t>(j) * h];
        for (int r = 0; r < h; ++r) z[static_cast<std::size_t>(r)] = qj[r] - qi[r] + b1[static_cast<std::size_t>(r)];
        double* zh = &hc.normalized[c * h];
        layer_norm(z, {zh, static_cast<std::size_t>(h)}, cfg.ln_eps, &hc.inv_std[c]);
        double* a = &hc.activated[c * h];
        for (int r = 0; r < h; ++r) {
          const double y = gain[static_cast<std::size_t>(r)] * zh[r] + bias[static_cast<std::size_t>(r)];
          a[r] = y > 0.0 ? y : 0.0;
        }
        for (int l = 0; l < L; ++l) chart(i, j, l, o) = b2[static_cast<std::size_t>(l)] + dot(w2.row(l).data(), a, h);
      }
  }
  fc.valid = true;
  return chart;
}

void backward(const ScorerModel& model, const ForwardCache& cache, const SpanScoreChart& output_grad,
              ParameterSet& grads) {
  if (!cache.valid) throw NoCachedForward();
  const auto& cfg = model.config();
  const auto& enc = cache.encoding;
  const int n = enc.n, d = cfg.embed_dim, half = d / 2, h = cfg.hidden_dim, L = model.num_labels();
  if (output_grad.length() != n || output_grad.num_labels() != L)
    throw std::invalid_argument("output gradient chart does not match the cached forward pass");
  if (grads.tensors.size() != model.parameters().tensors.size())
    throw std::invalid_argument("gradient set layout does not match the model");
  auto gt = [&](int slot) -> Tensor& { return grads.tensors[static_cast<std::size_t>(slot)]; };

  // d loss / d fencepost
  std::vector<double> dfence(static_cast<std::size_t>(n + 1) * d, 0.0);
  std::vector<double> dzh(static_cast<std::size_t>(h));
  std::vector<double> dq(static_cast<std::size_t>(n + 1) * h);

  for (Order o : {Order::Left, Order::Right}) {
    if (o == Order::Right && cache.heads == ScoreHeads::LeftOnly) continue;
    const auto& hc = cache.head[order_index(o)];
    const auto& w1 = model.tensor(ScorerModel::head_slot(o, ScorerModel::kW1));
    const auto& gain = model.tensor(ScorerModel::head_slot(o, ScorerModel::kLnGain)).data;
    const auto& w2 = model.tensor(ScorerModel::head_slot(o, ScorerModel::kW2));
    auto& gw1 = gt(ScorerModel::head_slot(o, ScorerModel::kW1));
    auto& gb1 = gt(ScorerModel::head_slot(o, ScorerModel::kB1)).data;
    auto& ggain = gt(ScorerModel::head_slot(o, ScorerModel::kLnGain)).data;
    auto& gbias = gt(ScorerModel::head_slot(o, ScorerModel::kLnBias)).data;
    auto& gw2 = gt(ScorerModel::head_slot(o, ScorerModel::kW2));
    auto& gb2 = gt(ScorerModel::head_slot(o, ScorerModel::kB2)).data;

    std::fill(dq.begin(), dq.end(), 0.0);
    for (int w = 1; w <= n; ++w)
      for (int i = 0; i + w <= n; ++i) {
        const int j = i + w;
        const std::size_t c = output_grad.cell(i, j);
        const double* a = &hc.activated[c * h];
        const double* zh = &hc.normalized[c * h];
        std::fill(dzh.begin(), dzh.end(), 0.0);
        bool any = false;
        for (int l = 0; l < L; ++l) {
          const double g = output_grad(i, j, l, o);
          if (g == 0.0) continue;
          any = true;
          gb2[static_cast<std::size_t>(l)] += g;
          double* gw = gw2.row(l).data();
          const double* wl = w2.row(l).data();
          for (int r = 0; r < h; ++r) {
            gw[r] += g * a[r];
            dzh[static_cast<std::size_t>(r)] += g * wl[r];  // d/da for now
          }
        }
        if (!any) continue;
        // through ReLU and the gain/bias
        for (int r = 0; r < h; ++r) {
          const double da = a[r] > 0.0 ? dzh[static_cast<std::size_t>(r)] : 0.0;
          ggain[static_cast<std::size_t>(r)] += da * zh[r];
          gbias[static_cast<std::size_t>(r)] += da;
          dzh[static_cast<std::size_t>(r)] = da * gain[static_cast<std::size_t>(r)];
        }
        double mean_dzh = 0.0, mean_dzh_zh = 0.0;
        for (int r = 0; r < h; ++r) {
          mean_dzh += dzh[static_cast<std::size_t>(r)];
          mean_dzh_zh += dzh[static_cast<std::size_t>(r)] * zh[r];
        }
        mean_dzh /= h;
        mean_dzh_zh /= h;
        const double inv = hc.inv_std[c];
        double* dqi = &dq[static_cast<std::size_t>(i) * h];
        double* dqj = &dq[static_cast<std::size_t>(j) * h];
        for (int r = 0; r < h; ++r) {
          const double g = inv * (dzh[static_cast<std::size_t>(r)] - mean_dzh - zh[r] * mean_dzh_zh);
          gb1[static_cast<std::size_t>(r)] += g;
          dqj[r] += g;
          dqi[r] -= g;
        }
      }
    for (int k = 0; k <= n; ++k) {
      const double* hk = enc.fencepost(k).data();
      const double* dqk = &dq[static_cast<std::size_t>(k) * h];
      double* dh = &dfence[static_cast<std::size_t>(k) * d];
      for (int r = 0; r < h; ++r) {
        const double g = dqk[r];
        if (g == 0.0) continue;
        double* gw = gw1.row(r).data();
        const double* wr = w1.row(r).data();
        for (int c = 0; c < half; ++c) {
          gw[c] += g * hk[c];
          gw[half + c] -= g * hk[half + c];
          dh[c] += g * wr[c];
          dh[half + c] -= g * wr[half + c];
        }
      }
    }
  }

  // fenceposts -> tanh outputs -> mixing layer -> embeddings
  const int T = n + 2, width = 2 * d;
  std::vector<double> dmixed(static_cast<std::size_t>(T) * d, 0.0);
  for (int k = 0; k <= n; ++k) {
    const double* dh = &dfence[static_cast<std::size_t>(k) * d];
    double* dl = &dmixed[static_cast<std::size_t>(k) * d];
    double* dr = &dmixed[static_cast<std::size_t>(k + 1) * d];
    for (int c = 0; c < half; ++c) {
      dl[c] += dh[c];
      dr[half + c] += dh[half + c];
    }
  }
  const auto& mw = model.tensor(ScorerModel::kMixWeight);
  auto& gmw = gt(ScorerModel::kMixWeight);
  auto& gmb = gt(ScorerModel::kMixBias).data;
  auto& gtok = gt(ScorerModel::kTokenEmb);
  auto& gpos = gt(ScorerModel::kPositionEmb);
  std::vector<double> de(static_cast<std::size_t>(width));
  for (int t = 0; t < T; ++t) {
    const double* r = &cache.mixed[static_cast<std::size_t>(t) * d];
    const double* e = &cache.inputs[static_cast<std::size_t>(t) * width];
    const double* dr = &dmixed[static_cast<std::size_t>(t) * d];
    std::fill(de.begin(), de.end(), 0.0);
    bool any = false;
    for (int u = 0; u < d; ++u) {
      const double du = dr[u] * (1.0 - r[u] * r[u]);
      if (du == 0.0) continue;
      any = true;
      gmb[static_cast<std::size_t>(u)] += du;
      double* gw = gmw.row(u).data();
      const double* wu = mw.row(u).data();
      for (int c = 0; c < width; ++c) {
        gw[c] += du * e[c];
        de[static_cast<std::size_t>(c)] += du * wu[c];
      }
    }
    if (!any) continue;
    double* gtr = gtok.row(cache.token_ids[static_cast<std::size_t>(t)]).data();
    double* gpr = gpos.row(t).data();
    for (int c = 0; c < d; ++c) {
      gtr[c] += de[static_cast<std::size_t>(c)];
      gpr[c] += de[static_cast<std::size_t>(d + c)];
    }
  }
}

}  // namespace ospar
