#include "fetchrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fetchrl/ppo_loss.hpp"

namespace fetchrl {

namespace {

struct ConvShape {
  int in_ch, in_size, out_ch, kernel, stride, out_size;
};

std::vector<ConvShape> conv_shapes(const NetworkSpec& spec) {
  std::vector<ConvShape> out;
  int ch = spec.input_channels;
  int size = spec.window;
  for (const auto& l : spec.conv_layers) {
    const int next = (size - l.kernel) / l.stride + 1;
    out.push_back({ch, size, l.out_channels, l.kernel, l.stride, next});
    ch = l.out_channels;
    size = next;
  }
  return out;
}

// out[o] = b[o] + sum_i W[o][i] (*) in[i], valid padding.
void conv_forward(const ConvShape& s, const double* in, const double* w,
                  const double* b, double* out) {
  const int n = s.out_size;
  for (int o = 0; o < s.out_ch; ++o) {
    double* dst_plane = out + static_cast<std::size_t>(o) * n * n;
    std::fill(dst_plane, dst_plane + n * n, b[o]);
    for (int i = 0; i < s.in_ch; ++i) {
      const double* src_plane = in + static_cast<std::size_t>(i) * s.in_size * s.in_size;
      const double* wk = w + (static_cast<std::size_t>(o) * s.in_ch + i) * s.kernel * s.kernel;
      for (int ky = 0; ky < s.kernel; ++ky) {
        for (int kx = 0; kx < s.kernel; ++kx) {
          const double wv = wk[ky * s.kernel + kx];
          for (int y = 0; y < n; ++y) {
            const double* src = src_plane + (y * s.stride + ky) * s.in_size + kx;
            double* dst = dst_plane + y * n;
            if (s.stride == 1) {
              for (int x = 0; x < n; ++x) dst[x] += wv * src[x];
            } else {
              for (int x = 0; x < n; ++x) dst[x] += wv * src[x * s.stride];
            }
          }
        }
      }
    }
  }
}

// Accumulates dW, db and (optionally) d_in from d_out (already ReLU-masked).
void conv_backward(const ConvShape& s, const double* in, const double* w,
                   const double* d_out, double* dw, double* db, double* d_in) {
  const int n = s.out_size;
  for (int o = 0; o < s.out_ch; ++o) {
    const double* g_plane = d_out + static_cast<std::size_t>(o) * n * n;
    double bsum = 0.0;
    for (int k = 0; k < n * n; ++k) bsum += g_plane[k];
    db[o] += bsum;
    for (int i = 0; i < s.in_ch; ++i) {
      const double* src_plane = in + static_cast<std::size_t>(i) * s.in_size * s.in_size;
      double* din_plane =
          d_in ? d_in + static_cast<std::size_t>(i) * s.in_size * s.in_size : nullptr;
      const std::size_t wbase = (static_cast<std::size_t>(o) * s.in_ch + i) * s.kernel * s.kernel;
      for (int ky = 0; ky < s.kernel; ++ky) {
        for (int kx = 0; kx < s.kernel; ++kx) {
          const double wv = w[wbase + ky * s.kernel + kx];
          double acc = 0.0;
          for (int y = 0; y < n; ++y) {
            const int row = (y * s.stride + ky) * s.in_size + kx;
            const double* src = src_plane + row;
            const double* g = g_plane + y * n;
            if (s.stride == 1) {
              for (int x = 0; x < n; ++x) acc += g[x] * src[x];
              if (din_plane) {
                double* di = din_plane + row;
                for (int x = 0; x < n; ++x) di[x] += wv * g[x];
              }
            } else {
              for (int x = 0; x < n; ++x) acc += g[x] * src[x * s.stride];
              if (din_plane) {
                double* di = din_plane + row;
                for (int x = 0; x < n; ++x) di[x * s.stride] += wv * g[x];
              }
            }
          }
          dw[wbase + ky * s.kernel + kx] += acc;
        }
      }
    }
  }
}

void require_finite(std::span<const double> v, const char* layer) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericalError(std::string("non-finite value in layer '") + layer + "'");
    }
  }
}

void check_inputs(const NetworkSpec& spec, std::span<const double> features,
                  std::span<const double> context) {
  const std::size_t expect =
      static_cast<std::size_t>(spec.input_channels) * spec.window * spec.window;
  if (features.size() != expect) {
    throw ShapeMismatch("forward: features have " + std::to_string(features.size()) +
                        " values, network expects " + std::to_string(spec.input_channels) +
                        "x" + std::to_string(spec.window) + "x" +
                        std::to_string(spec.window));
  }
  if (context.size() != static_cast<std::size_t>(spec.context_units)) {
    throw ShapeMismatch("forward: context has " + std::to_string(context.size()) +
                        " values, network expects " + std::to_string(spec.context_units));
  }
}

// Per-sample loss pieces shared by evaluate_loss and backward.
struct SampleLoss {
  SurrogateTerm surrogate;
  double log_prob = 0.0;
  double value_err = 0.0;
};

SampleLoss sample_loss(const PolicyOutput& out, const TrainingSample& s,
                       const LossSpec& loss) {
  if (s.action < 0 || s.action >= kActionCount) {
    throw ShapeMismatch("training sample action out of range");
  }
  SampleLoss r;
  double max_logit = *std::max_element(out.logits.begin(), out.logits.end());
  double z = 0.0;
  for (double l : out.logits) z += std::exp(l - max_logit);
  r.log_prob = out.logits[s.action] - max_logit - std::log(z);
  r.surrogate = clipped_surrogate(r.log_prob, s.old_log_prob, s.advantage, loss.clip_epsilon);
  r.value_err = out.value - s.return_target;
  return r;
}

}  // namespace

void NetworkSpec::validate() const {
  if (input_channels < 1) throw ShapeMismatch("network: input_channels must be >= 1");
  if (window < 1) throw ShapeMismatch("network: window must be >= 1");
  if (hidden_units < 1) throw ShapeMismatch("network: hidden_units must be >= 1");
  if (context_units < 0) throw ShapeMismatch("network: context_units must be >= 0");
  if (action_count != kActionCount) {
    throw ShapeMismatch("network: action_count must be " + std::to_string(kActionCount));
  }
  int size = window;
  for (std::size_t l = 0; l < conv_layers.size(); ++l) {
    const auto& c = conv_layers[l];
    if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1) {
      throw ShapeMismatch("network: conv layer " + std::to_string(l) +
                          " needs positive channels, kernel and stride");
    }
    if (c.kernel > size) {
      throw ShapeMismatch("network: conv layer " + std::to_string(l) + " kernel " +
                          std::to_string(c.kernel) + " exceeds input size " +
                          std::to_string(size));
    }
    size = (size - c.kernel) / c.stride + 1;
  }
}

std::vector<int> NetworkSpec::spatial_sizes() const {
  std::vector<int> out{window};
  for (const auto& s : conv_shapes(*this)) out.push_back(s.out_size);
  return out;
}

int NetworkSpec::flat_features() const {
  const int size = spatial_sizes().back();
  const int ch = conv_layers.empty() ? input_channels : conv_layers.back().out_channels;
  return ch * size * size;
}

std::size_t NetworkSpec::parameter_count() const { return ParamLayout::of(*this).total; }

ParamLayout ParamLayout::of(const NetworkSpec& spec) {
  spec.validate();
  ParamLayout p;
  std::size_t off = 0;
  auto take = [&off](std::size_t w, std::size_t b) {
    LayerSlice s{off, w, off + w, b};
    off += w + b;
    return s;
  };
  for (const auto& s : conv_shapes(spec)) {
    p.conv.push_back(take(static_cast<std::size_t>(s.out_ch) * s.in_ch * s.kernel * s.kernel,
                          static_cast<std::size_t>(s.out_ch)));
  }
  const std::size_t joint = static_cast<std::size_t>(spec.flat_features() + spec.context_units);
  const std::size_t h = static_cast<std::size_t>(spec.hidden_units);
  p.hidden = take(h * joint, h);
  p.policy = take(static_cast<std::size_t>(spec.action_count) * h,
                  static_cast<std::size_t>(spec.action_count));
  p.value = take(h, 1);
  p.total = off;
  return p;
}

PolicyParams::PolicyParams(NetworkSpec spec)
    : spec_(std::move(spec)), layout_(ParamLayout::of(spec_)), values_(layout_.total, 0.0) {}

PolicyParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  PolicyParams params(spec);
  Rng rng(derive_seed(seed, 0x1417));
  auto values = params.values();
  auto fill = [&](const LayerSlice& s, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < s.weight_size; ++i) {
      values[s.weight + i] = bound * (2.0 * uniform01(rng) - 1.0);
    }
  };
  const auto shapes = conv_shapes(spec);
  const ParamLayout& layout = params.layout();
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    fill(layout.conv[l],
         static_cast<std::size_t>(shapes[l].in_ch) * shapes[l].kernel * shapes[l].kernel);
  }
  fill(layout.hidden, static_cast<std::size_t>(spec.flat_features() + spec.context_units));
  fill(layout.policy, static_cast<std::size_t>(spec.hidden_units));
  fill(layout.value, static_cast<std::size_t>(spec.hidden_units));
  return params;
}

const PolicyOutput& forward(const PolicyParams& params, std::span<const double> features,
                            std::span<const double> context, ForwardCache& cache) {
  const NetworkSpec& spec = params.spec();
  const ParamLayout& layout = params.layout();
  check_inputs(spec, features, context);
  const auto shapes = conv_shapes(spec);
  const double* p = params.values().data();

  cache.conv_out.resize(shapes.size());
  const double* in = features.data();
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const ConvShape& s = shapes[l];
    auto& out = cache.conv_out[l];
    out.resize(static_cast<std::size_t>(s.out_ch) * s.out_size * s.out_size);
    conv_forward(s, in, p + layout.conv[l].weight, p + layout.conv[l].bias, out.data());
    for (double& v : out) {
      // NaN compares false and would pass through the ReLU as 0.
      if (!std::isfinite(v)) {
        throw NumericalError("non-finite value in layer 'conv" + std::to_string(l) + "'");
      }
      v = v > 0.0 ? v : 0.0;
    }
    in = out.data();
  }

  const std::size_t flat = static_cast<std::size_t>(spec.flat_features());
  cache.joint.resize(flat + context.size());
  std::copy(in, in + flat, cache.joint.begin());
  std::copy(context.begin(), context.end(), cache.joint.begin() + flat);

  const std::size_t h = static_cast<std::size_t>(spec.hidden_units);
  const std::size_t j = cache.joint.size();
  cache.hidden.resize(h);
  const double* wh = p + layout.hidden.weight;
  const double* bh = p + layout.hidden.bias;
  for (std::size_t u = 0; u < h; ++u) {
    const double* row = wh + u * j;
    double acc = bh[u];
    for (std::size_t k = 0; k < j; ++k) acc += row[k] * cache.joint[k];
    if (!std::isfinite(acc)) throw NumericalError("non-finite value in layer 'hidden'");
    cache.hidden[u] = acc > 0.0 ? acc : 0.0;
  }

  PolicyOutput& out = cache.output;
  const double* wp = p + layout.policy.weight;
  const double* bp = p + layout.policy.bias;
  for (int a = 0; a < kActionCount; ++a) {
    double acc = bp[a];
    const double* row = wp + static_cast<std::size_t>(a) * h;
    for (std::size_t u = 0; u < h; ++u) acc += row[u] * cache.hidden[u];
    out.logits[a] = acc;
  }
  const double* wv = p + layout.value.weight;
  double v = p[layout.value.bias];
  for (std::size_t u = 0; u < h; ++u) v += wv[u] * cache.hidden[u];
  out.value = v;

  require_finite(out.logits, "policy_head");
  if (!std::isfinite(out.value)) throw NumericalError("non-finite value in layer 'value_head'");

  const double max_logit = *std::max_element(out.logits.begin(), out.logits.end());
  double z = 0.0;
  for (int a = 0; a < kActionCount; ++a) {
    out.probs[a] = std::exp(out.logits[a] - max_logit);
    z += out.probs[a];
  }
  const double log_z = std::log(z);
  out.entropy = 0.0;
  for (int a = 0; a < kActionCount; ++a) {
    out.probs[a] /= z;
    const double logp = out.logits[a] - max_logit - log_z;
    out.entropy -= out.probs[a] * logp;
  }
  return out;
}

PolicyOutput forward(const PolicyParams& params, std::span<const double> features,
                     std::span<const double> context) {
  ForwardCache cache;
  return forward(params, features, context, cache);
}

SampledAction sample_action(const PolicyOutput& output, Rng& rng) {
  const double u = uniform01(rng);
  double cdf = 0.0;
  int chosen = kActionCount - 1;
  for (int a = 0; a < kActionCount; ++a) {
    cdf += output.probs[a];
    if (u < cdf) {
      chosen = a;
      break;
    }
  }
  // Rounding can leave the tail with zero mass; never return such an action.
  while (output.probs[chosen] <= 0.0 && chosen > 0) --chosen;
  return {chosen, std::log(output.probs[chosen])};
}

SampledAction greedy_action(const PolicyOutput& output) {
  int best = 0;
  for (int a = 1; a < kActionCount; ++a) {
    if (output.probs[a] > output.probs[best]) best = a;
  }
  return {best, std::log(output.probs[best])};
}

LossStats evaluate_loss(const PolicyParams& params, std::span<const TrainingSample> minibatch,
                        const LossSpec& loss) {
  if (minibatch.empty()) throw ShapeMismatch("evaluate_loss: empty minibatch");
  LossStats st;
  ForwardCache cache;
  for (const TrainingSample& s : minibatch) {
    const PolicyOutput& out = forward(params, s.features, s.context, cache);
    const SampleLoss sl = sample_loss(out, s, loss);
    st.policy_loss += sl.surrogate.value;
    st.value_loss += sl.value_err * sl.value_err;
    st.entropy += out.entropy;
    st.clip_fraction += sl.surrogate.clipped ? 1.0 : 0.0;
    st.approx_kl += (sl.surrogate.ratio - 1.0) - std::log(sl.surrogate.ratio);
  }
  const double inv = 1.0 / static_cast<double>(minibatch.size());
  st.policy_loss *= inv;
  st.value_loss *= inv;
  st.entropy *= inv;
  st.clip_fraction *= inv;
  st.approx_kl *= inv;
  st.loss = st.policy_loss + loss.value_coef * st.value_loss - loss.entropy_coef * st.entropy;
  return st;
}

BackwardResult backward(const PolicyParams& params, std::span<const TrainingSample> minibatch,
                        const LossSpec& loss) {
  if (minibatch.empty()) throw ShapeMismatch("backward: empty minibatch");
  const NetworkSpec& spec = params.spec();
  const ParamLayout& layout = params.layout();
  const auto shapes = conv_shapes(spec);
  const double* p = params.values().data();
  const double inv_n = 1.0 / static_cast<double>(minibatch.size());

  BackwardResult result;
  result.gradient.assign(params.size(), 0.0);
  double* g = result.gradient.data();
  LossStats& st = result.stats;

  const std::size_t h = static_cast<std::size_t>(spec.hidden_units);
  const std::size_t flat = static_cast<std::size_t>(spec.flat_features());
  ForwardCache cache;
  std::vector<double> d_hidden(h);
  std::vector<double> d_flat(flat);
  std::vector<std::vector<double>> d_conv(shapes.size());

  for (const TrainingSample& s : minibatch) {
    const PolicyOutput& out = forward(params, s.features, s.context, cache);
    const SampleLoss sl = sample_loss(out, s, loss);
    st.policy_loss += sl.surrogate.value;
    st.value_loss += sl.value_err * sl.value_err;
    st.entropy += out.entropy;
    st.clip_fraction += sl.surrogate.clipped ? 1.0 : 0.0;
    st.approx_kl += (sl.surrogate.ratio - 1.0) - std::log(sl.surrogate.ratio);

    // Heads.
    std::array<double, kActionCount> d_logits{};
    for (int a = 0; a < kActionCount; ++a) {
      const double pa = out.probs[a];
      const double onehot = a == s.action ? 1.0 : 0.0;
      const double logp = pa > 0.0 ? std::log(pa) : 0.0;
      d_logits[a] = (sl.surrogate.grad_log_prob * (onehot - pa) +
                     loss.entropy_coef * pa * (logp + out.entropy)) *
                    inv_n;
    }
    const double d_value = 2.0 * loss.value_coef * sl.value_err * inv_n;

    std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
    const double* wp = p + layout.policy.weight;
    for (int a = 0; a < kActionCount; ++a) {
      double* gw = g + layout.policy.weight + static_cast<std::size_t>(a) * h;
      const double* row = wp + static_cast<std::size_t>(a) * h;
      for (std::size_t u = 0; u < h; ++u) {
        gw[u] += d_logits[a] * cache.hidden[u];
        d_hidden[u] += d_logits[a] * row[u];
      }
      g[layout.policy.bias + a] += d_logits[a];
    }
    const double* wv = p + layout.value.weight;
    for (std::size_t u = 0; u < h; ++u) {
      g[layout.value.weight + u] += d_value * cache.hidden[u];
      d_hidden[u] += d_value * wv[u];
    }
    g[layout.value.bias] += d_value;

    // Shared hidden layer.
    const std::size_t j = cache.joint.size();
    const double* wh = p + layout.hidden.weight;
    std::fill(d_flat.begin(), d_flat.end(), 0.0);
    for (std::size_t u = 0; u < h; ++u) {
      if (cache.hidden[u] <= 0.0) continue;
      const double du = d_hidden[u];
      if (du == 0.0) continue;
      double* gw = g + layout.hidden.weight + u * j;
      for (std::size_t k = 0; k < j; ++k) gw[k] += du * cache.joint[k];
      g[layout.hidden.bias + u] += du;
      if (!shapes.empty()) {
        const double* row = wh + u * j;
        for (std::size_t k = 0; k < flat; ++k) d_flat[k] += du * row[k];
      }
    }

    // Conv stack, last layer first.
    for (std::size_t li = shapes.size(); li-- > 0;) {
      const ConvShape& sh = shapes[li];
      std::vector<double>& d_out = d_conv[li];
      if (li + 1 == shapes.size()) {
        d_out.assign(d_flat.begin(), d_flat.end());
      }
      const std::vector<double>& act = cache.conv_out[li];
      for (std::size_t k = 0; k < d_out.size(); ++k) {
        if (act[k] <= 0.0) d_out[k] = 0.0;
      }
      const double* in = li == 0 ? s.features.data() : cache.conv_out[li - 1].data();
      double* d_in = nullptr;
      if (li > 0) {
        d_conv[li - 1].assign(cache.conv_out[li - 1].size(), 0.0);
        d_in = d_conv[li - 1].data();
      }
      conv_backward(sh, in, p + layout.conv[li].weight, d_out.data(),
                    g + layout.conv[li].weight, g + layout.conv[li].bias, d_in);
    }
  }

  st.policy_loss *= inv_n;
  st.value_loss *= inv_n;
  st.entropy *= inv_n;
  st.clip_fraction *= inv_n;
  st.approx_kl *= inv_n;
  st.loss = st.policy_loss + loss.value_coef * st.value_loss - loss.entropy_coef * st.entropy;

  for (std::size_t l = 0; l < layout.conv.size(); ++l) {
    const auto& sl = layout.conv[l];
    const std::string name = "conv" + std::to_string(l);
    require_finite({g + sl.weight, sl.weight_size + sl.bias_size}, name.c_str());
  }
  require_finite({g + layout.hidden.weight, layout.hidden.weight_size + layout.hidden.bias_size},
                 "hidden");
  require_finite({g + layout.policy.weight, layout.policy.weight_size + layout.policy.bias_size},
                 "policy_head");
  require_finite({g + layout.value.weight, layout.value.weight_size + layout.value.bias_size},
                 "value_head");
  return result;
}

}  // namespace fetchrl
