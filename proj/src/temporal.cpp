#include "arlp/temporal.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "arlp/errors.hpp"
#include "arlp/kernels.hpp"

namespace arlp {

LstmLayer::LstmLayer(const std::string& name, int in, int hidden_)
    : in_dim(in),
      hidden(hidden_),
      wx(name + ".wx", {4 * hidden_, in}),
      wh(name + ".wh", {4 * hidden_, hidden_}),
      b(name + ".b", {4 * hidden_}, true) {}

void LstmLayer::forward(const std::vector<std::vector<double>>& xs, Cache& cache) const {
  const auto& k = kernels::active();
  const int h = hidden;
  const std::size_t gh = static_cast<std::size_t>(4) * h;
  const int steps = static_cast<int>(xs.size());
  if (steps == 0) throw std::invalid_argument("lstm needs at least one step");

  cache.steps.resize(steps);
  std::vector<double> hidden_state(h, 0.0), cell(h, 0.0);
  std::vector<double> pre(gh), pre_x(gh), pre_h(gh);

  for (int t = 0; t < steps; ++t) {
    StepCache& st = cache.steps[t];
    if (static_cast<int>(xs[t].size()) != in_dim)
      throw std::invalid_argument("lstm input width mismatch");
    st.x = xs[t];
    st.h_prev = hidden_state;
    st.c_prev = cell;

    k.matvec(wx.value.data(), st.x.data(), b.value.data(), pre_x.data(), gh,
             static_cast<std::size_t>(in_dim));
    k.matvec(wh.value.data(), st.h_prev.data(), nullptr, pre_h.data(), gh,
             static_cast<std::size_t>(h));
    k.vadd(pre_x.data(), pre_h.data(), pre.data(), gh);

    st.gates.resize(gh);
    k.sigmoid(pre.data(), st.gates.data(), static_cast<std::size_t>(2) * h);
    k.vtanh(pre.data() + 2 * h, st.gates.data() + 2 * h, h);
    k.sigmoid(pre.data() + 3 * h, st.gates.data() + 3 * h, h);

    const double* gi = st.gates.data();
    const double* gf = st.gates.data() + h;
    const double* gg = st.gates.data() + 2 * h;
    const double* go = st.gates.data() + 3 * h;

    st.c.resize(h);
    for (int j = 0; j < h; ++j) st.c[j] = gf[j] * st.c_prev[j] + gi[j] * gg[j];
    st.tanh_c.resize(h);
    k.vtanh(st.c.data(), st.tanh_c.data(), h);
    for (int j = 0; j < h; ++j) hidden_state[j] = go[j] * st.tanh_c[j];
    cell = st.c;
  }
  cache.h_last = hidden_state;
}

void LstmLayer::backward(const Cache& cache, const double* g_h_last,
                         std::vector<std::vector<double>>* g_xs) {
  const auto& k = kernels::active();
  const int h = hidden;
  const std::size_t gh4 = static_cast<std::size_t>(4) * h;
  const int steps = static_cast<int>(cache.steps.size());

  std::vector<double> ghid(g_h_last, g_h_last + h);
  std::vector<double> gcell(h, 0.0);
  std::vector<double> gpre(gh4), ghid_prev(h);

  for (int t = steps - 1; t >= 0; --t) {
    const StepCache& st = cache.steps[t];
    const double* gi = st.gates.data();
    const double* gf = st.gates.data() + h;
    const double* gg = st.gates.data() + 2 * h;
    const double* go = st.gates.data() + 3 * h;

    for (int j = 0; j < h; ++j) {
      const double g_o = ghid[j] * st.tanh_c[j];
      const double g_tanh = ghid[j] * go[j];
      const double gc = gcell[j] + g_tanh * (1.0 - st.tanh_c[j] * st.tanh_c[j]);
      const double g_i = gc * gg[j];
      const double g_g = gc * gi[j];
      const double g_f = gc * st.c_prev[j];
      gpre[j] = g_i * gi[j] * (1.0 - gi[j]);
      gpre[h + j] = g_f * gf[j] * (1.0 - gf[j]);
      gpre[2 * h + j] = g_g * (1.0 - gg[j] * gg[j]);
      gpre[3 * h + j] = g_o * go[j] * (1.0 - go[j]);
      gcell[j] = gc * gf[j];
    }

    k.ger_acc(wx.grad.data(), gpre.data(), st.x.data(), gh4,
              static_cast<std::size_t>(in_dim));
    k.ger_acc(wh.grad.data(), gpre.data(), st.h_prev.data(), gh4,
              static_cast<std::size_t>(h));
    k.vadd(b.grad.data(), gpre.data(), b.grad.data(), gh4);

    if (g_xs)
      k.matvec_t_acc(wx.value.data(), gpre.data(), (*g_xs)[t].data(), gh4,
                     static_cast<std::size_t>(in_dim));

    std::fill(ghid_prev.begin(), ghid_prev.end(), 0.0);
    k.matvec_t_acc(wh.value.data(), gpre.data(), ghid_prev.data(), gh4,
                   static_cast<std::size_t>(h));
    ghid = ghid_prev;
  }
}

void LstmLayer::register_params(ParamSet& set) {
  set.add(&wx);
  set.add(&wh);
  set.add(&b);
}

DayAttentionOutcome day_attention(const std::vector<std::vector<double>>& h) {
  if (h.empty()) throw std::invalid_argument("day attention needs at least one state");
  const auto& k = kernels::active();
  const std::size_t dim = h.back().size();
  DayAttentionOutcome out;
  out.numerators.resize(h.size());
  out.normalizer = 0.0;
  for (std::size_t m = 0; m < h.size(); ++m) {
    out.numerators[m] = k.dot(h[m].data(), h.back().data(), dim);
    out.normalizer += out.numerators[m];
  }
  out.alpha.resize(h.size());
  if (std::abs(out.normalizer) <= 1e-8) {
    out.fallback = true;
    std::fill(out.alpha.begin(), out.alpha.end(), 1.0 / static_cast<double>(h.size()));
  } else {
    for (std::size_t m = 0; m < h.size(); ++m)
      out.alpha[m] = out.numerators[m] / out.normalizer;
  }
  return out;
}

void day_attention_backward(const std::vector<std::vector<double>>& h,
                            const DayAttentionOutcome& att,
                            std::span<const double> g_alpha,
                            std::vector<std::vector<double>>& g_h) {
  if (att.fallback) return;  // uniform weights carry no gradient
  const auto& k = kernels::active();
  const std::size_t days = h.size();
  const std::size_t dim = h.back().size();
  const double z = att.normalizer;

  double weighted = 0.0;
  for (std::size_t m = 0; m < days; ++m) weighted += g_alpha[m] * att.numerators[m];

  // d(loss)/d(numerator_m), then numerator_m = h_m . h_last
  for (std::size_t m = 0; m < days; ++m) {
    const double gn = g_alpha[m] / z - weighted / (z * z);
    k.axpy(gn, h.back().data(), g_h[m].data(), dim);
    k.axpy(gn, h[m].data(), g_h[days - 1].data(), dim);
  }
}

MlpHead::MlpHead(const std::string& name, int in, int hidden_)
    : l1(name + ".fc1", in, hidden_),
      l2(name + ".fc2", hidden_, hidden_),
      l3(name + ".fc3", hidden_, 1),
      in_dim(in),
      hidden(hidden_) {}

double MlpHead::forward(const double* x, Cache& cache) const {
  const auto& k = kernels::active();
  cache.in.assign(x, x + in_dim);
  cache.pre1.resize(hidden);
  l1.forward(x, cache.pre1.data());
  cache.act1.resize(hidden);
  k.relu(cache.pre1.data(), cache.act1.data(), hidden);
  cache.pre2.resize(hidden);
  l2.forward(cache.act1.data(), cache.pre2.data());
  cache.act2.resize(hidden);
  k.relu(cache.pre2.data(), cache.act2.data(), hidden);
  double pre3;
  l3.forward(cache.act2.data(), &pre3);
  cache.pre3 = pre3;
  return pre3 > 0.0 ? pre3 : 0.0;
}

void MlpHead::backward(const Cache& cache, double g_pred, double* g_in) {
  const auto& k = kernels::active();
  const double g3 = cache.pre3 > 0.0 ? g_pred : 0.0;
  std::vector<double> g_act2(hidden, 0.0), g_pre2(hidden, 0.0);
  std::vector<double> g_act1(hidden, 0.0), g_pre1(hidden, 0.0);
  l3.backward(cache.act2.data(), &g3, g_act2.data());
  k.relu_mask_acc(g_act2.data(), cache.pre2.data(), g_pre2.data(), hidden);
  l2.backward(cache.act1.data(), g_pre2.data(), g_act1.data());
  k.relu_mask_acc(g_act1.data(), cache.pre1.data(), g_pre1.data(), hidden);
  l1.backward(cache.in.data(), g_pre1.data(), g_in);
}

void MlpHead::register_params(ParamSet& set) {
  l1.register_params(set);
  l2.register_params(set);
  l3.register_params(set);
}

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::CurrentDay: return "arlp";
    case ModelKind::MultiDay: return "advanced";
    case ModelKind::GapLstm: return "lstm";
  }
  return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "arlp") return ModelKind::CurrentDay;
  if (name == "advanced") return ModelKind::MultiDay;
  if (name == "lstm") return ModelKind::GapLstm;
  throw ConfigError("unknown model '" + name + "' (expected arlp, advanced or lstm)");
}

GapModel::GapModel(ModelKind kind, const GridSpec& grid, const ModelConfig& cfg)
    : kind_(kind), grid_(grid), cfg_(cfg) {
  grid_.validate();
  if (cfg.conv_hidden < 1 || cfg.spatial_dim < 1 || cfg.lstm_hidden < 1)
    throw ConfigError("model dimensions must be positive");
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0))
    throw ConfigError("hard attention factor beta must lie in (0, 1)");
  if (kind_ == ModelKind::MultiDay && grid_.history < 2)
    throw ConfigError("the multi-day model needs a history of at least 2 days");

  const bool semantic = kind_ != ModelKind::GapLstm;
  if (semantic)
    spatial = SpatialStage(grid_.neighborhood, cfg.conv_hidden, cfg.spatial_dim);
  lstm = LstmLayer("temporal.lstm", lstm_input_dim(), cfg.lstm_hidden);
  head = MlpHead("head", head_input_dim(), cfg.lstm_hidden);

  if (semantic) {
    params_.add(&mix_w);
    params_.add(&mix_b);
    spatial.register_params(params_);
  }
  lstm.register_params(params_);
  head.register_params(params_);
}

int GapModel::lstm_input_dim() const {
  return kind_ == ModelKind::GapLstm ? 1 : 4 * cfg_.spatial_dim + 1;
}

int GapModel::head_input_dim() const {
  return kind_ == ModelKind::MultiDay ? 2 * cfg_.lstm_hidden : cfg_.lstm_hidden;
}

void GapModel::init(std::uint64_t seed) {
  init_params(params_, seed);
  // Equal channel mix keeps the target's own similarity score at least the
  // squared norm of its ACF vector, so the sample-attention anchor starts
  // well away from zero.
  std::fill(mix_w.value.begin(), mix_w.value.end(), 0.25);
  mix_b.value[0] = 0.0;
  // Positive final bias keeps the output relu live on normalized targets.
  head.l3.b.value[0] = 0.5;
}

void GapModel::run_day(const CityCube& cube, int day, int t0, int region,
                       SampleCache::DayPass& pass) const {
  pass.day = day;
  pass.window = extract_window(cube, day, t0, grid_.window);
  pass.semantic =
      semantic_forward(pass.window, region, mix_w.value.data(), mix_b.value[0],
                       cfg_.beta, cfg_.renormalize_synth, grid_.acf_lags);
  const int gdim = spatial.output_dim();
  pass.spatial.resize(grid_.window);
  pass.lstm_inputs.resize(grid_.window);
  for (int j = 0; j < grid_.window; ++j) {
    pass.lstm_inputs[j].resize(gdim + 1);
    spatial.forward(cube, day, t0 + j, region, pass.lstm_inputs[j].data(),
                    pass.spatial[j]);
    pass.lstm_inputs[j][gdim] = pass.semantic.synthesized[j];
  }
  lstm.forward(pass.lstm_inputs, pass.lstm);
}

double GapModel::forward(const CityCube& cube, const SampleWindow& s,
                         SampleCache& cache) const {
  const int last_t = s.t0 + grid_.window;
  if (s.t0 < 0 || last_t > cube.intervals_per_day() - 1)
    throw std::invalid_argument("sample window and target do not fit inside the day");
  if (s.region < 0 || s.region >= grid_.cells())
    throw std::invalid_argument("sample region outside the grid");
  if (s.day < 0 || s.day >= cube.days())
    throw std::invalid_argument("sample day outside the cube");

  cache.sample = s;
  if (kind_ == ModelKind::GapLstm) {
    cache.days.resize(1);
    auto& pass = cache.days[0];
    pass.day = s.day;
    pass.lstm_inputs.assign(grid_.window, std::vector<double>(1));
    for (int j = 0; j < grid_.window; ++j)
      pass.lstm_inputs[j][0] = cube.at_cell(Channel::Gap, s.day, s.t0 + j, s.region);
    lstm.forward(pass.lstm_inputs, pass.lstm);
    cache.head_in = pass.lstm.h_last;
    return head.forward(cache.head_in.data(), cache.head);
  }

  if (kind_ == ModelKind::CurrentDay) {
    cache.days.resize(1);
    run_day(cube, s.day, s.t0, s.region, cache.days[0]);
    cache.head_in = cache.days[0].lstm.h_last;
    return head.forward(cache.head_in.data(), cache.head);
  }

  // multi-day: aligned windows on days [day - D + 1, day]
  const int d_hist = grid_.history;
  if (s.day - (d_hist - 1) < 0)
    throw std::invalid_argument("multi-day sample needs " + std::to_string(d_hist) +
                                " days of history");
  cache.days.resize(d_hist);
  std::vector<std::vector<double>> h(d_hist);
  for (int k = 0; k < d_hist; ++k) {
    run_day(cube, s.day - (d_hist - 1) + k, s.t0, s.region, cache.days[k]);
    h[k] = cache.days[k].lstm.h_last;
  }
  cache.attention = day_attention(h);
  if (cache.attention.fallback) ++attention_fallbacks_;

  const int dh = cfg_.lstm_hidden;
  cache.head_in.assign(2 * dh, 0.0);
  std::copy(h.back().begin(), h.back().end(), cache.head_in.begin());
  for (int k = 0; k < d_hist; ++k)
    kernels::active().axpy(cache.attention.alpha[k], h[k].data(),
                           cache.head_in.data() + dh, dh);
  return head.forward(cache.head_in.data(), cache.head);
}

void GapModel::backward(const SampleCache& cache, double g_pred) {
  const int dh = cfg_.lstm_hidden;
  std::vector<double> g_head_in(cache.head_in.size(), 0.0);
  head.backward(cache.head, g_pred, g_head_in.data());

  // per-day gradients on the final hidden states
  const int d_hist = static_cast<int>(cache.days.size());
  std::vector<std::vector<double>> g_h(d_hist, std::vector<double>(dh, 0.0));
  if (kind_ == ModelKind::MultiDay) {
    const double* g_long = g_head_in.data() + dh;
    std::vector<double> g_alpha(d_hist, 0.0);
    std::vector<std::vector<double>> h(d_hist);
    for (int k = 0; k < d_hist; ++k) {
      h[k] = cache.days[k].lstm.h_last;
      g_alpha[k] = kernels::active().dot(h[k].data(), g_long, dh);
      kernels::active().axpy(cache.attention.alpha[k], g_long, g_h[k].data(), dh);
    }
    day_attention_backward(h, cache.attention, g_alpha, g_h);
    kernels::active().vadd(g_h[d_hist - 1].data(), g_head_in.data(),
                           g_h[d_hist - 1].data(), dh);
  } else {
    g_h[0] = g_head_in;
  }

  for (int k = 0; k < d_hist; ++k) {
    const auto& pass = cache.days[k];
    if (kind_ == ModelKind::GapLstm) {
      lstm.backward(pass.lstm, g_h[k].data(), nullptr);
      continue;
    }
    std::vector<std::vector<double>> g_xs(grid_.window,
                                          std::vector<double>(lstm_input_dim(), 0.0));
    lstm.backward(pass.lstm, g_h[k].data(), &g_xs);

    const int gdim = spatial.output_dim();
    std::vector<double> g_series(grid_.window);
    for (int j = 0; j < grid_.window; ++j) {
      spatial.backward(pass.spatial[j], g_xs[j].data());
      g_series[j] = g_xs[j][gdim];
    }
    semantic_backward(pass.semantic, pass.window, cache.sample.region, g_series,
                      cfg_.renormalize_synth, mix_w.grad.data(), mix_b.grad[0]);
  }
}

}  // namespace arlp
