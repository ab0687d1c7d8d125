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

#include "pixrf/graph_ir.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pixrf/error.hpp"

namespace pixrf {
namespace {

using nlohmann::json;

struct OpInfo {
  OpKind op;
  std::string_view name;
  std::vector<std::string_view> required;
  std::vector<std::string_view> optional;
};

const std::vector<OpInfo>& op_table() {
  static const std::vector<OpInfo> table = {
      {OpKind::Input, "input", {}, {}},
      {OpKind::Conv2d, "conv2d", {"kernel", "out_channels"}, {"stride", "padding", "dilation", "bias"}},
      {OpKind::MaxPool2d, "maxpool2d", {"kernel"}, {"stride", "padding", "dilation", "ceil_mode"}},
      {OpKind::AvgPool2d, "avgpool2d", {"kernel"}, {"stride", "padding", "ceil_mode", "count_include_pad"}},
      {OpKind::AdaptiveAvgPool2d, "adaptive_avgpool2d", {"output_size"}, {}},
      {OpKind::Relu, "relu", {}, {}},
      {OpKind::Sigmoid, "sigmoid", {}, {}},
      {OpKind::BatchNorm2d, "batchnorm2d", {}, {"eps"}},
      {OpKind::Linear, "linear", {"out_features"}, {"bias"}},
      {OpKind::Add, "add", {}, {}},
      {OpKind::Concat, "concat", {}, {"axis"}},
      {OpKind::Flatten, "flatten", {}, {}},
      {OpKind::Permute, "permute", {"order"}, {}},
      {OpKind::DropoutIdentity, "dropout_identity", {}, {}},
  };
  return table;
}

const OpInfo& info(OpKind op) {
  for (const auto& i : op_table()) {
    if (i.op == op) return i;
  }
  throw Error(ErrorKind::UnknownOp, "unregistered op");
}

[[noreturn]] void fail(ErrorKind kind, const Node& n, const std::string& what) {
  throw Error(kind, "node '" + n.id + "' (" + std::string(to_string(n.op)) + "): " + what);
}

std::int64_t conv_out(std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t p,
                      std::int64_t d, bool ceil_mode) {
  std::int64_t span = in + 2 * p - d * (k - 1) - 1;
  if (span < 0) return 0;
  std::int64_t out = (ceil_mode ? (span + s - 1) / s : span / s) + 1;
  // A ceil-mode window must start inside the input or left padding.
  if (ceil_mode && (out - 1) * s >= in + p) --out;
  return out;
}

void check_positive(const Node& n, const Extent2& e, const char* what) {
  if (e.h < 1 || e.w < 1) fail(ErrorKind::MalformedGraph, n, std::string(what) + " must be >= 1");
}

Shape infer_shape(const Node& n, const std::vector<const Shape*>& in, const Shape& input_shape) {
  const auto& a = n.attrs;
  auto require_rank3 = [&](const Shape& s) {
    if (s.size() != 3) fail(ErrorKind::ShapeMismatch, n, "expects a (C,H,W) input, got " + shape_to_string(s));
  };
  switch (n.op) {
    case OpKind::Input:
      return input_shape;
    case OpKind::Conv2d:
    case OpKind::MaxPool2d:
    case OpKind::AvgPool2d: {
      const Shape& s = *in[0];
      require_rank3(s);
      check_positive(n, a.kernel, "kernel");
      check_positive(n, a.stride, "stride");
      check_positive(n, a.dilation, "dilation");
      if (a.padding.h < 0 || a.padding.w < 0) fail(ErrorKind::MalformedGraph, n, "padding must be >= 0");
      if (n.op != OpKind::Conv2d) {
        auto eff_h = a.dilation.h * (a.kernel.h - 1) + 1;
        auto eff_w = a.dilation.w * (a.kernel.w - 1) + 1;
        if (2 * a.padding.h > eff_h || 2 * a.padding.w > eff_w) {
          fail(ErrorKind::ShapeMismatch, n, "pool padding exceeds half the kernel");
        }
      } else if (a.out_channels < 1) {
        fail(ErrorKind::MalformedGraph, n, "out_channels must be >= 1");
      }
      bool ceil = n.op != OpKind::Conv2d && a.ceil_mode;
      auto oh = conv_out(s[1], a.kernel.h, a.stride.h, a.padding.h, a.dilation.h, ceil);
      auto ow = conv_out(s[2], a.kernel.w, a.stride.w, a.padding.w, a.dilation.w, ceil);
      if (oh < 1 || ow < 1) {
        fail(ErrorKind::ShapeMismatch, n, "window does not fit input " + shape_to_string(s));
      }
      return {n.op == OpKind::Conv2d ? a.out_channels : s[0], oh, ow};
    }
    case OpKind::AdaptiveAvgPool2d: {
      const Shape& s = *in[0];
      require_rank3(s);
      check_positive(n, a.output_size, "output_size");
      if (s[1] % a.output_size.h != 0 || s[2] % a.output_size.w != 0) {
        fail(ErrorKind::ShapeMismatch, n, "only integer-ratio targets are supported for input " + shape_to_string(s));
      }
      return {s[0], a.output_size.h, a.output_size.w};
    }
    case OpKind::BatchNorm2d:
      require_rank3(*in[0]);
      if (!(a.eps > 0.0)) fail(ErrorKind::MalformedGraph, n, "eps must be > 0");
      return *in[0];
    case OpKind::Relu:
    case OpKind::Sigmoid:
    case OpKind::DropoutIdentity:
      return *in[0];
    case OpKind::Linear:
      if (in[0]->size() != 1) fail(ErrorKind::ShapeMismatch, n, "expects a flat input, got " + shape_to_string(*in[0]));
      if (a.out_features < 1) fail(ErrorKind::MalformedGraph, n, "out_features must be >= 1");
      return {a.out_features};
    case OpKind::Add:
      for (const auto* s : in) {
        if (*s != *in[0]) fail(ErrorKind::ShapeMismatch, n, "operand shapes differ: " + shape_to_string(*in[0]) + " vs " + shape_to_string(*s));
      }
      return *in[0];
    case OpKind::Concat: {
      if (a.axis != 0) fail(ErrorKind::ShapeMismatch, n, "concat is only supported along the channel axis");
      Shape out = *in[0];
      for (std::size_t i = 1; i < in.size(); ++i) {
        const Shape& s = *in[i];
        if (s.size() != out.size() || !std::equal(s.begin() + 1, s.end(), out.begin() + 1)) {
          fail(ErrorKind::ShapeMismatch, n, "operand " + shape_to_string(s) + " incompatible with " + shape_to_string(*in[0]));
        }
        out[0] += s[0];
      }
      return out;
    }
    case OpKind::Flatten:
      return {num_elements(*in[0])};
    case OpKind::Permute: {
      const Shape& s = *in[0];
      if (a.order.size() != s.size()) fail(ErrorKind::ShapeMismatch, n, "order rank differs from input rank");
      std::vector<bool> seen(s.size(), false);
      Shape out(s.size());
      for (std::size_t i = 0; i < a.order.size(); ++i) {
        auto o = a.order[i];
        if (o < 0 || o >= static_cast<std::int64_t>(s.size()) || seen[o]) {
          fail(ErrorKind::MalformedGraph, n, "order is not a permutation");
        }
        seen[o] = true;
        out[i] = s[o];
      }
      return out;
    }
  }
  fail(ErrorKind::UnknownOp, n, "no shape rule");
}

std::size_t expected_arity(OpKind op) {
  switch (op) {
    case OpKind::Input: return 0;
    case OpKind::Add:
    case OpKind::Concat: return 2;  // minimum
    default: return 1;
  }
}

// Kahn's algorithm; returns indices in order, or throws CycleDetected.
std::vector<std::size_t> kahn_order(const std::vector<Node>& nodes,
                                    const std::unordered_map<std::string, std::size_t>& index) {
  std::vector<std::size_t> indegree(nodes.size(), 0);
  std::vector<std::vector<std::size_t>> users(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& in : nodes[i].inputs) {
      users[index.at(in)].push_back(i);
      ++indegree[i];
    }
  }
  auto by_id = [&](std::size_t a, std::size_t b) { return nodes[a].id > nodes[b].id; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(by_id)> ready(by_id);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(nodes.size());
  while (!ready.empty()) {
    auto i = ready.top();
    ready.pop();
    order.push_back(i);
    for (auto u : users[i]) {
      if (--indegree[u] == 0) ready.push(u);
    }
  }
  if (order.size() != nodes.size()) {
    std::string stuck;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (indegree[i] > 0) {
        stuck = nodes[i].id;
        break;
      }
    }
    throw Error(ErrorKind::CycleDetected, "graph has a cycle through node '" + stuck + "'");
  }
  return order;
}

Extent2 parse_extent(const Node& n, const json& v, const char* key) {
  try {
    if (v.is_number_integer()) {
      auto x = v.get<std::int64_t>();
      return {x, x};
    }
    if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer()) {
      return {v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
    }
  } catch (const json::exception&) {
  }
  fail(ErrorKind::MalformedGraph, n, std::string("attr '") + key + "' must be an int or [h, w]");
}

std::int64_t parse_int(const Node& n, const json& v, const char* key) {
  if (!v.is_number_integer()) fail(ErrorKind::MalformedGraph, n, std::string("attr '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

bool parse_bool(const Node& n, const json& v, const char* key) {
  if (!v.is_boolean()) fail(ErrorKind::MalformedGraph, n, std::string("attr '") + key + "' must be a boolean");
  return v.get<bool>();
}

void parse_attrs(Node& n, const json& attrs) {
  const auto& oi = info(n.op);
  if (!attrs.is_object()) fail(ErrorKind::MalformedGraph, n, "attrs must be an object");
  for (auto it = attrs.begin(); it != attrs.end(); ++it) {
    const auto& k = it.key();
    bool known = std::find(oi.required.begin(), oi.required.end(), k) != oi.required.end() ||
                 std::find(oi.optional.begin(), oi.optional.end(), k) != oi.optional.end();
    if (!known) fail(ErrorKind::MalformedGraph, n, "unknown attr '" + k + "'");
  }
  for (auto k : oi.required) {
    if (!attrs.contains(std::string(k))) fail(ErrorKind::MalformedGraph, n, "missing required attr '" + std::string(k) + "'");
  }
  auto& a = n.attrs;
  // Pool stride defaults to the kernel.
  if (n.op == OpKind::MaxPool2d || n.op == OpKind::AvgPool2d) {
    a.kernel = parse_extent(n, attrs.at("kernel"), "kernel");
    a.stride = a.kernel;
  }
  for (auto it = attrs.begin(); it != attrs.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    if (k == "kernel") a.kernel = parse_extent(n, v, "kernel");
    else if (k == "stride") a.stride = parse_extent(n, v, "stride");
    else if (k == "padding") a.padding = parse_extent(n, v, "padding");
    else if (k == "dilation") a.dilation = parse_extent(n, v, "dilation");
    else if (k == "output_size") a.output_size = parse_extent(n, v, "output_size");
    else if (k == "out_channels") a.out_channels = parse_int(n, v, "out_channels");
    else if (k == "out_features") a.out_features = parse_int(n, v, "out_features");
    else if (k == "axis") a.axis = parse_int(n, v, "axis");
    else if (k == "bias") a.bias = parse_bool(n, v, "bias");
    else if (k == "ceil_mode") a.ceil_mode = parse_bool(n, v, "ceil_mode");
    else if (k == "count_include_pad") a.count_include_pad = parse_bool(n, v, "count_include_pad");
    else if (k == "eps") {
      if (!v.is_number()) fail(ErrorKind::MalformedGraph, n, "attr 'eps' must be a number");
      a.eps = v.get<double>();
    } else if (k == "order") {
      if (!v.is_array()) fail(ErrorKind::MalformedGraph, n, "attr 'order' must be an array");
      a.order.clear();
      for (const auto& e : v) a.order.push_back(parse_int(n, e, "order"));
    }
  }
}

json extent_json(const Extent2& e) { return json::array({e.h, e.w}); }

json attrs_json(const Node& n) {
  const auto& a = n.attrs;
  json j = json::object();
  switch (n.op) {
    case OpKind::Conv2d:
      j["kernel"] = extent_json(a.kernel);
      j["stride"] = extent_json(a.stride);
      j["padding"] = extent_json(a.padding);
      j["dilation"] = extent_json(a.dilation);
      j["out_channels"] = a.out_channels;
      j["bias"] = a.bias;
      break;
    case OpKind::MaxPool2d:
      j["kernel"] = extent_json(a.kernel);
      j["stride"] = extent_json(a.stride);
      j["padding"] = extent_json(a.padding);
      j["dilation"] = extent_json(a.dilation);
      j["ceil_mode"] = a.ceil_mode;
      break;
    case OpKind::AvgPool2d:
      j["kernel"] = extent_json(a.kernel);
      j["stride"] = extent_json(a.stride);
      j["padding"] = extent_json(a.padding);
      j["ceil_mode"] = a.ceil_mode;
      j["count_include_pad"] = a.count_include_pad;
      break;
    case OpKind::AdaptiveAvgPool2d:
      j["output_size"] = extent_json(a.output_size);
      break;
    case OpKind::BatchNorm2d:
      j["eps"] = a.eps;
      break;
    case OpKind::Linear:
      j["out_features"] = a.out_features;
      j["bias"] = a.bias;
      break;
    case OpKind::Concat:
      j["axis"] = a.axis;
      break;
    case OpKind::Permute:
      j["order"] = a.order;
      break;
    default:
      break;
  }
  return j;
}

}  // namespace

std::string_view to_string(OpKind op) noexcept {
  for (const auto& i : op_table()) {
    if (i.op == op) return i.name;
  }
  return "?";
}

std::optional<OpKind> op_from_string(std::string_view name) noexcept {
  for (const auto& i : op_table()) {
    if (i.name == name) return i.op;
  }
  return std::nullopt;
}

bool GraphIR::contains(std::string_view id) const {
  return index_.find(std::string(id)) != index_.end();
}

std::size_t GraphIR::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error(ErrorKind::UnknownNode, "no node '" + std::string(id) + "'");
  return it->second;
}

void GraphIR::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    index_.emplace(nodes_[i].id, i);
    if (nodes_[i].op == OpKind::Input) input_index_ = i;
  }
}

GraphIR build_graph(std::string name, Shape input_shape, std::vector<Node> nodes) {
  if (input_shape.size() != 3 || std::any_of(input_shape.begin(), input_shape.end(), [](auto d) { return d < 1; })) {
    throw Error(ErrorKind::MalformedGraph, "input_shape must be three positive extents, got " + shape_to_string(input_shape));
  }
  std::unordered_map<std::string, std::size_t> index;
  std::size_t input_count = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.id.empty()) throw Error(ErrorKind::MalformedGraph, "node " + std::to_string(i) + " has an empty id");
    if (!index.emplace(n.id, i).second) throw Error(ErrorKind::MalformedGraph, "duplicate node id '" + n.id + "'");
    if (n.op == OpKind::Input) ++input_count;
  }
  if (input_count != 1) {
    throw Error(ErrorKind::MalformedGraph, "graph must have exactly one input node, found " + std::to_string(input_count));
  }
  for (const auto& n : nodes) {
    auto arity = expected_arity(n.op);
    bool variadic = n.op == OpKind::Add || n.op == OpKind::Concat;
    if (variadic ? n.inputs.size() < arity : n.inputs.size() != arity) {
      fail(ErrorKind::MalformedGraph, n, "wrong number of inputs (" + std::to_string(n.inputs.size()) + ")");
    }
    for (const auto& in : n.inputs) {
      if (!index.contains(in)) fail(ErrorKind::MalformedGraph, n, "references unknown input '" + in + "'");
    }
  }
  auto order = kahn_order(nodes, index);
  for (auto i : order) {
    auto& n = nodes[i];
    std::vector<const Shape*> in;
    for (const auto& id : n.inputs) in.push_back(&nodes[index.at(id)].shape);
    n.shape = infer_shape(n, in, input_shape);
  }
  GraphIR g;
  g.name_ = std::move(name);
  g.input_shape_ = std::move(input_shape);
  g.nodes_ = std::move(nodes);
  g.reindex();
  return g;
}

GraphIR parse_graph(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::MalformedGraph, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::MalformedGraph, "top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "name" && it.key() != "input_shape" && it.key() != "nodes") {
      throw Error(ErrorKind::MalformedGraph, "unknown top-level key '" + it.key() + "'");
    }
  }
  if (!j.contains("name") || !j["name"].is_string()) throw Error(ErrorKind::MalformedGraph, "missing string 'name'");
  if (!j.contains("input_shape") || !j["input_shape"].is_array()) {
    throw Error(ErrorKind::MalformedGraph, "missing array 'input_shape'");
  }
  if (!j.contains("nodes") || !j["nodes"].is_array()) throw Error(ErrorKind::MalformedGraph, "missing array 'nodes'");

  Shape input_shape;
  for (const auto& d : j["input_shape"]) {
    if (!d.is_number_integer()) throw Error(ErrorKind::MalformedGraph, "input_shape entries must be integers");
    input_shape.push_back(d.get<std::int64_t>());
  }

  std::vector<Node> nodes;
  for (const auto& jn : j["nodes"]) {
    if (!jn.is_object() || !jn.contains("id") || !jn["id"].is_string() || !jn.contains("op") || !jn["op"].is_string()) {
      throw Error(ErrorKind::MalformedGraph, "node " + std::to_string(nodes.size()) + " needs string 'id' and 'op'");
    }
    Node n;
    n.id = jn["id"].get<std::string>();
    for (auto it = jn.begin(); it != jn.end(); ++it) {
      if (it.key() != "id" && it.key() != "op" && it.key() != "attrs" && it.key() != "inputs") {
        throw Error(ErrorKind::MalformedGraph, "node '" + n.id + "': unknown key '" + it.key() + "'");
      }
    }
    auto op_name = jn["op"].get<std::string>();
    auto op = op_from_string(op_name);
    if (!op) throw Error(ErrorKind::UnknownOp, "node '" + n.id + "': unknown op '" + op_name + "'");
    n.op = *op;
    parse_attrs(n, jn.value("attrs", json::object()));
    if (jn.contains("inputs")) {
      if (!jn["inputs"].is_array()) fail(ErrorKind::MalformedGraph, n, "'inputs' must be an array");
      for (const auto& in : jn["inputs"]) {
        if (!in.is_string()) fail(ErrorKind::MalformedGraph, n, "input ids must be strings");
        n.inputs.push_back(in.get<std::string>());
      }
    }
    nodes.push_back(std::move(n));
  }
  return build_graph(j["name"].get<std::string>(), std::move(input_shape), std::move(nodes));
}

GraphIR load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_graph(ss.str());
}

std::string serialize_graph(const GraphIR& g) {
  json j;
  j["name"] = g.name();
  j["input_shape"] = g.input_shape();
  j["nodes"] = json::array();
  for (const auto& n : g.nodes()) {
    json jn;
    jn["id"] = n.id;
    jn["op"] = std::string(to_string(n.op));
    jn["attrs"] = attrs_json(n);
    jn["inputs"] = n.inputs;
    j["nodes"].push_back(std::move(jn));
  }
  return j.dump(2);
}

GraphIR topo_sort(const GraphIR& g) {
  auto order = kahn_order(g.nodes_, g.index_);
  GraphIR out;
  out.name_ = g.name_;
  out.input_shape_ = g.input_shape_;
  out.nodes_.reserve(order.size());
  for (auto i : order) out.nodes_.push_back(g.nodes_[i]);
  out.reindex();
  return out;
}

bool is_topologically_sorted(const GraphIR& g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (const auto& in : g.nodes()[i].inputs) {
      if (g.index_of(in) >= i) return false;
    }
  }
  return true;
}

const Shape& output_shape(const GraphIR& g, std::string_view node_id) {
  return g.node(node_id).shape;
}

std::vector<std::size_t> ancestors_of(const GraphIR& g, std::string_view target) {
  std::vector<bool> needed(g.size(), false);
  std::vector<std::size_t> stack{g.index_of(target)};
  while (!stack.empty()) {
    auto i = stack.back();
    stack.pop_back();
    if (needed[i]) continue;
    needed[i] = true;
    for (const auto& in : g.nodes()[i].inputs) stack.push_back(g.index_of(in));
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (needed[i]) out.push_back(i);
  }
  return out;
}

}  // namespace pixrf
