// Copyright 2026 The pixrf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pixrf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "pixrf/error.hpp"

namespace pixrf {

WeightStore::WeightStore(std::span<const NamedTensor> tensors) {
  for (const auto& [name, t] : tensors) {
    auto dot = name.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == name.size()) {
      throw Error(ErrorKind::MissingWeights, "tensor name '" + name + "' is not <node>.<param>");
    }
    set(name.substr(0, dot), name.substr(dot + 1), t);
  }
}

bool WeightStore::has(std::string_view node_id, std::string_view param) const {
  auto it = params_.find(node_id);
  return it != params_.end() && it->second.find(param) != it->second.end();
}

const Tensor& WeightStore::get(std::string_view node_id, std::string_view param) const {
  auto it = params_.find(node_id);
  if (it != params_.end()) {
    auto p = it->second.find(param);
    if (p != it->second.end()) return p->second;
  }
  throw Error(ErrorKind::MissingWeights, "no '" + std::string(param) + "' for node '" + std::string(node_id) + "'");
}

void WeightStore::set(const std::string& node_id, const std::string& param, Tensor t) {
  auto [it, inserted] = params_[node_id].insert_or_assign(param, std::move(t));
  (void)it;
  (void)inserted;
}

std::size_t WeightStore::tensor_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, m] : params_) n += m.size();
  return n;
}

std::vector<NamedTensor> WeightStore::to_named() const {
  std::vector<NamedTensor> out;
  for (const auto& [node, m] : params_) {
    for (const auto& [param, t] : m) out.push_back({node + "." + param, t});
  }
  return out;
}

WeightStore load_weights(std::span<const std::byte> bytes) {
  return WeightStore(read_container(bytes));
}

WeightStore load_weights(const std::filesystem::path& path) {
  return WeightStore(load_container(path));
}

namespace {

void expect_dims(const Node& n, std::string_view param, const Tensor& t, const Shape& want) {
  if (t.dims() != want) {
    throw Error(ErrorKind::ShapeMismatch, "node '" + n.id + "' param '" + std::string(param) + "' has dims " +
                                              shape_to_string(t.dims()) + ", expected " + shape_to_string(want));
  }
}

const Shape& input_shape_of(const GraphIR& g, const Node& n, std::size_t i = 0) {
  return g.node(n.inputs[i]).shape;
}

}  // namespace

void validate_weights(const GraphIR& g, const WeightStore& w) {
  for (const auto& n : g.nodes()) {
    switch (n.op) {
      case OpKind::Conv2d: {
        auto cin = input_shape_of(g, n)[0];
        expect_dims(n, "weight", w.get(n.id, "weight"), {n.attrs.out_channels, cin, n.attrs.kernel.h, n.attrs.kernel.w});
        if (n.attrs.bias) expect_dims(n, "bias", w.get(n.id, "bias"), {n.attrs.out_channels});
        break;
      }
      case OpKind::BatchNorm2d: {
        Shape c{input_shape_of(g, n)[0]};
        for (auto p : {"weight", "bias", "running_mean", "running_var"}) expect_dims(n, p, w.get(n.id, p), c);
        break;
      }
      case OpKind::Linear: {
        auto in = input_shape_of(g, n)[0];
        expect_dims(n, "weight", w.get(n.id, "weight"), {n.attrs.out_features, in});
        if (n.attrs.bias) expect_dims(n, "bias", w.get(n.id, "bias"), {n.attrs.out_features});
        break;
      }
      default:
        break;
    }
  }
}

namespace {

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias, const Node& n) {
  const auto& a = n.attrs;
  const auto cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const auto cout = n.shape[0], oh_n = n.shape[1], ow_n = n.shape[2];
  Tensor y(n.shape);
  for (std::int64_t oc = 0; oc < cout; ++oc) {
    float* out = y.data().data() + oc * oh_n * ow_n;
    if (bias) std::fill(out, out + oh_n * ow_n, (*bias)[oc]);
    for (std::int64_t ic = 0; ic < cin; ++ic) {
      const float* in = x.data().data() + ic * h * w;
      for (std::int64_t kr = 0; kr < a.kernel.h; ++kr) {
        for (std::int64_t kc = 0; kc < a.kernel.w; ++kc) {
          const float wv = weight[((oc * cin + ic) * a.kernel.h + kr) * a.kernel.w + kc];
          const auto col_off = kc * a.dilation.w - a.padding.w;
          // Output columns whose tap lands inside the input.
          std::int64_t ow_lo = col_off >= 0 ? 0 : (-col_off + a.stride.w - 1) / a.stride.w;
          std::int64_t ow_hi = (w - 1 - col_off) < 0 ? -1 : (w - 1 - col_off) / a.stride.w;
          ow_hi = std::min(ow_hi, ow_n - 1);
          for (std::int64_t oh = 0; oh < oh_n; ++oh) {
            const auto ih = oh * a.stride.h - a.padding.h + kr * a.dilation.h;
            if (ih < 0 || ih >= h) continue;
            const float* row = in + ih * w;
            float* orow = out + oh * ow_n;
            for (std::int64_t ow = ow_lo; ow <= ow_hi; ++ow) orow[ow] += wv * row[ow * a.stride.w + col_off];
          }
        }
      }
    }
  }
  return y;
}

struct PoolWindow {
  std::int64_t kh, kw, sh, sw, ph, pw, dh, dw;
};

PoolWindow pool_window(const Node& n, const Tensor& x) {
  const auto& a = n.attrs;
  if (n.op == OpKind::AdaptiveAvgPool2d) {
    auto kh = x.dim(1) / a.output_size.h, kw = x.dim(2) / a.output_size.w;
    return {kh, kw, kh, kw, 0, 0, 1, 1};
  }
  if (n.op == OpKind::AvgPool2d) return {a.kernel.h, a.kernel.w, a.stride.h, a.stride.w, a.padding.h, a.padding.w, 1, 1};
  return {a.kernel.h, a.kernel.w, a.stride.h, a.stride.w, a.padding.h, a.padding.w, a.dilation.h, a.dilation.w};
}

Tensor max_pool(const Tensor& x, const Node& n) {
  const auto k = pool_window(n, x);
  const auto c_n = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y(n.shape);
  for (std::int64_t c = 0; c < c_n; ++c) {
    for (std::int64_t oh = 0; oh < n.shape[1]; ++oh) {
      for (std::int64_t ow = 0; ow < n.shape[2]; ++ow) {
        float m = -std::numeric_limits<float>::infinity();
        for (std::int64_t i = 0; i < k.kh; ++i) {
          auto ih = oh * k.sh - k.ph + i * k.dh;
          if (ih < 0 || ih >= h) continue;
          for (std::int64_t j = 0; j < k.kw; ++j) {
            auto iw = ow * k.sw - k.pw + j * k.dw;
            if (iw < 0 || iw >= w) continue;
            m = std::max(m, x.at(c, ih, iw));
          }
        }
        y.at(c, oh, ow) = m;
      }
    }
  }
  return y;
}

Tensor avg_pool(const Tensor& x, const Node& n) {
  const auto k = pool_window(n, x);
  const bool include_pad = n.op == OpKind::AdaptiveAvgPool2d || n.attrs.count_include_pad;
  const auto c_n = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y(n.shape);
  for (std::int64_t c = 0; c < c_n; ++c) {
    for (std::int64_t oh = 0; oh < n.shape[1]; ++oh) {
      for (std::int64_t ow = 0; ow < n.shape[2]; ++ow) {
        auto h0 = oh * k.sh - k.ph, w0 = ow * k.sw - k.pw;
        auto h1 = std::min(h0 + k.kh, h + k.ph), w1 = std::min(w0 + k.kw, w + k.pw);
        auto divisor = (h1 - h0) * (w1 - w0);
        auto hs = std::max<std::int64_t>(h0, 0), ws = std::max<std::int64_t>(w0, 0);
        auto he = std::min(h1, h), we = std::min(w1, w);
        if (!include_pad) divisor = (he - hs) * (we - ws);
        float sum = 0.0f;
        for (auto ih = hs; ih < he; ++ih) {
          for (auto iw = ws; iw < we; ++iw) sum += x.at(c, ih, iw);
        }
        y.at(c, oh, ow) = sum / static_cast<float>(divisor);
      }
    }
  }
  return y;
}

Tensor batch_norm(const Tensor& x, const Node& n, const WeightStore& w) {
  const auto& gamma = w.get(n.id, "weight");
  const auto& beta = w.get(n.id, "bias");
  const auto& mean = w.get(n.id, "running_mean");
  const auto& var = w.get(n.id, "running_var");
  Tensor y(x.dims());
  const auto plane = x.dim(1) * x.dim(2);
  for (std::int64_t c = 0; c < x.dim(0); ++c) {
    const auto scale = static_cast<float>(static_cast<double>(gamma[c]) /
                                          std::sqrt(static_cast<double>(var[c]) + n.attrs.eps));
    for (std::int64_t i = 0; i < plane; ++i) {
      auto idx = c * plane + i;
      y[idx] = (x[idx] - mean[c]) * scale + beta[c];
    }
  }
  return y;
}

Tensor linear(const Tensor& x, const Node& n, const WeightStore& w) {
  const auto& weight = w.get(n.id, "weight");
  const Tensor* bias = n.attrs.bias ? &w.get(n.id, "bias") : nullptr;
  const auto in = x.dim(0);
  Tensor y(n.shape);
  for (std::int64_t o = 0; o < n.shape[0]; ++o) {
    float acc = bias ? (*bias)[o] : 0.0f;
    const float* row = weight.data().data() + o * in;
    for (std::int64_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
  return y;
}

Tensor permute(const Tensor& x, const Node& n) {
  const auto& order = n.attrs.order;
  const auto rank = x.rank();
  std::vector<std::int64_t> strides(rank, 1);
  for (std::size_t d = rank - 1; d-- > 0;) strides[d] = strides[d + 1] * x.dim(d + 1);
  Tensor y(n.shape);
  std::vector<std::int64_t> idx(rank, 0);
  for (std::int64_t flat = 0; flat < y.size(); ++flat) {
    std::int64_t s = 0;
    for (std::size_t d = 0; d < rank; ++d) s += idx[d] * strides[static_cast<std::size_t>(order[d])];
    y[flat] = x[s];
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < n.shape[d]) break;
      idx[d] = 0;
    }
  }
  return y;
}

Tensor eval_node(const Node& n, const std::vector<const Tensor*>& in, const WeightStore& w) {
  switch (n.op) {
    case OpKind::Input:
      return *in[0];
    case OpKind::Conv2d:
      return conv2d(*in[0], w.get(n.id, "weight"), n.attrs.bias ? &w.get(n.id, "bias") : nullptr, n);
    case OpKind::MaxPool2d:
      return max_pool(*in[0], n);
    case OpKind::AvgPool2d:
    case OpKind::AdaptiveAvgPool2d:
      return avg_pool(*in[0], n);
    case OpKind::Relu: {
      Tensor y = *in[0];
      for (auto& v : y.data()) v = v > 0.0f ? v : 0.0f;
      return y;
    }
    case OpKind::Sigmoid: {
      Tensor y = *in[0];
      for (auto& v : y.data()) v = 1.0f / (1.0f + std::exp(-v));
      return y;
    }
    case OpKind::BatchNorm2d:
      return batch_norm(*in[0], n, w);
    case OpKind::Linear:
      return linear(*in[0], n, w);
    case OpKind::Add: {
      Tensor y = *in[0];
      for (std::size_t k = 1; k < in.size(); ++k) {
        auto src = in[k]->data();
        auto dst = y.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
      return y;
    }
    case OpKind::Concat: {
      std::vector<float> data;
      data.reserve(static_cast<std::size_t>(num_elements(n.shape)));
      for (const auto* t : in) data.insert(data.end(), t->data().begin(), t->data().end());
      return Tensor(n.shape, std::move(data));
    }
    case OpKind::Flatten:
    case OpKind::DropoutIdentity:
      return in[0]->reshaped(n.shape);
    case OpKind::Permute:
      return permute(*in[0], n);
  }
  throw Error(ErrorKind::UnknownOp, "cannot evaluate node '" + n.id + "'");
}

void check_finite(const Node& n, const Tensor& t) {
  for (auto v : t.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteActivation, "node '" + n.id + "' produced a non-finite value");
  }
}

Tensor run_sorted(const GraphIR& g, const WeightStore& w, const Tensor& x, std::string_view upto) {
  if (x.dims() != g.input_shape()) {
    throw Error(ErrorKind::ShapeMismatch, "input " + shape_to_string(x.dims()) + " does not match graph input " +
                                              shape_to_string(g.input_shape()));
  }
  const auto needed = ancestors_of(g, upto);
  std::vector<int> uses(g.size(), 0);
  for (auto i : needed) {
    for (const auto& in : g.nodes()[i].inputs) ++uses[g.index_of(in)];
  }
  std::vector<std::optional<Tensor>> values(g.size());
  const auto target = g.index_of(upto);
  for (auto i : needed) {
    const auto& n = g.nodes()[i];
    std::vector<const Tensor*> in;
    if (n.op == OpKind::Input) {
      in.push_back(&x);
    } else {
      for (const auto& id : n.inputs) in.push_back(&*values[g.index_of(id)]);
    }
    Tensor y = eval_node(n, in, w);
    check_finite(n, y);
    for (const auto& id : n.inputs) {
      auto k = g.index_of(id);
      if (--uses[k] == 0 && k != target) values[k].reset();
    }
    values[i] = std::move(y);
  }
  return std::move(*values[target]);
}

}  // namespace

Tensor forward(const GraphIR& graph, const WeightStore& w, const Tensor& x, std::string_view upto) {
  if (is_topologically_sorted(graph)) {
    validate_weights(graph, w);
    return run_sorted(graph, w, x, upto);
  }
  const GraphIR g = topo_sort(graph);
  validate_weights(g, w);
  return run_sorted(g, w, x, upto);
}

std::vector<Tensor> forward_batch(const GraphIR& g, const WeightStore& w, std::span<const Tensor> xs,
                                  std::string_view upto) {
  Network net(g, w);
  std::vector<Tensor> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(net.run(x, upto));
  return out;
}

Network::Network(GraphIR graph, WeightStore weights)
    : graph_(is_topologically_sorted(graph) ? std::move(graph) : topo_sort(graph)), weights_(std::move(weights)) {
  validate_weights(graph_, weights_);
}

Tensor Network::run(const Tensor& x, std::string_view upto) const {
  return run_sorted(graph_, weights_, x, upto);
}

}  // namespace pixrf
