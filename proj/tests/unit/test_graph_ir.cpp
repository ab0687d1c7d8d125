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

#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "pixrf/error.hpp"
#include "pixrf/graph_ir.hpp"
#include "test_support.hpp"

using namespace pixrf;
using pixrf::testing::error_kind;
using pixrf::testing::fixture;

namespace {

std::string graph_json(const std::string& nodes, const std::string& shape = "[3, 32, 32]") {
  return R"({"name": "t", "input_shape": )" + shape + R"(, "nodes": [)" + nodes + "]}";
}

const std::string kInput = R"({"id": "input", "op": "input", "attrs": {}, "inputs": []})";

std::vector<std::string> ids(const GraphIR& g) {
  std::vector<std::string> out;
  for (const auto& n : g.nodes()) out.push_back(n.id);
  return out;
}

// Independent check: every input of every node appears strictly earlier.
bool dependencies_respected(const GraphIR& g) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < g.size(); ++i) pos[g.nodes()[i].id] = i;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (const auto& in : g.nodes()[i].inputs) {
      if (!pos.contains(in) || pos[in] >= i) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("single input node") {
  auto g = parse_graph(graph_json(kInput, "[3, 224, 224]"));
  CHECK(g.size() == 1);
  CHECK(output_shape(g, "input") == Shape{3, 224, 224});
  CHECK(g.input_shape() == Shape{3, 224, 224});
}

TEST_CASE("conv shape arithmetic") {
  auto g = parse_graph(graph_json(kInput + R"(, {"id": "c", "op": "conv2d", "attrs": {"kernel": 5, "stride": 1,
      "padding": 0, "out_channels": 8}, "inputs": ["input"]})"));
  CHECK(output_shape(g, "c") == Shape{8, 28, 28});
}

TEST_CASE("maxpool k2 s2 on (8,28,28)") {
  auto g = parse_graph(graph_json(kInput + R"(,
      {"id": "c", "op": "conv2d", "attrs": {"kernel": 5, "out_channels": 8}, "inputs": ["input"]},
      {"id": "p", "op": "maxpool2d", "attrs": {"kernel": 2, "stride": 2}, "inputs": ["c"]})"));
  CHECK(output_shape(g, "p") == Shape{8, 14, 14});
  CHECK(output_shape(g, "input") == Shape{3, 32, 32});
  CHECK(error_kind([&] { output_shape(g, "nope"); }) == ErrorKind::UnknownNode);
}

TEST_CASE("VGG16 reference graph") {
  auto g = load_graph(fixture("graphs/vgg16.json"));
  // 31 layer nodes plus the input node.
  CHECK(g.size() == 32);
  CHECK(g.nodes().back().id == "maxpool5");
  CHECK(output_shape(g, "maxpool5") == Shape{512, 7, 7});
  CHECK(output_shape(g, "maxpool4") == Shape{512, 14, 14});
  int convs = 0;
  for (const auto& n : g.nodes()) convs += n.op == OpKind::Conv2d;
  CHECK(convs == 13);
  // Independent shape walk from the layer listing.
  std::int64_t side = 224;
  for (const auto& n : g.nodes()) {
    if (n.op == OpKind::MaxPool2d) side /= 2;
    if (n.op != OpKind::Input) CHECK(n.shape[1] == side);
  }
}

TEST_CASE("other reference graphs") {
  CHECK(output_shape(load_graph(fixture("graphs/vgg19.json")), "maxpool5") == Shape{512, 7, 7});
  CHECK(output_shape(load_graph(fixture("graphs/vgg13.json")), "maxpool4") == Shape{512, 14, 14});
  CHECK(output_shape(load_graph(fixture("graphs/vgg11.json")), "maxpool5") == Shape{512, 7, 7});
  auto d = load_graph(fixture("graphs/denseblock.json"));
  CHECK(output_shape(d, "cat2") == Shape{16, 16, 16});
  CHECK(output_shape(d, "head_fc") == Shape{5});
  auto p = load_graph(fixture("graphs/permute_demo.json"));
  CHECK(output_shape(p, "transpose") == Shape{4, 8, 8});
}

TEST_CASE("topo_sort") {
  SUBCASE("sorted chain unchanged") {
    auto g = load_graph(fixture("graphs/vgg16.json"));
    CHECK(is_topologically_sorted(g));
    CHECK(topo_sort(g) == g);
  }
  SUBCASE("diamond with lexicographic tie-break") {
    auto g = parse_graph(graph_json(kInput + R"(,
        {"id": "add", "op": "add", "attrs": {}, "inputs": ["a", "b"]},
        {"id": "b", "op": "relu", "attrs": {}, "inputs": ["input"]},
        {"id": "a", "op": "sigmoid", "attrs": {}, "inputs": ["input"]})"));
    CHECK(ids(g) == std::vector<std::string>{"input", "add", "b", "a"});
    CHECK_FALSE(is_topologically_sorted(g));
    auto s = topo_sort(g);
    CHECK(ids(s) == std::vector<std::string>{"input", "a", "b", "add"});
  }
  SUBCASE("dense block") {
    auto g = load_graph(fixture("graphs/denseblock.json"));
    auto s = topo_sort(g);
    CHECK(dependencies_respected(s));
    auto a = ids(g), b = ids(s);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(topo_sort(s) == s);
  }
}

TEST_CASE("ancestors") {
  auto g = topo_sort(load_graph(fixture("graphs/denseblock.json")));
  auto anc = ancestors_of(g, "cat1");
  std::set<std::string> names;
  for (auto i : anc) names.insert(g.nodes()[i].id);
  CHECK(names == std::set<std::string>{"input", "stem", "l1_bn", "l1_relu", "l1_conv", "cat1"});
}

TEST_CASE("parse, serialize, parse is a fixed point") {
  for (const char* f : {"vgg11", "vgg13", "vgg16", "vgg19", "denseblock", "permute_demo", "identity"}) {
    CAPTURE(f);
    auto g = load_graph(fixture(std::string("graphs/") + f + ".json"));
    auto text = serialize_graph(g);
    auto g2 = parse_graph(text);
    CHECK(g2 == g);
    CHECK(serialize_graph(g2) == text);
  }
  auto ops = load_graph(fixture("reference/opsnet.json"));
  CHECK(parse_graph(serialize_graph(ops)) == ops);
}

TEST_CASE("rejections") {
  auto conv = [](const std::string& attrs) {
    return graph_json(kInput + R"(, {"id": "c", "op": "conv2d", "attrs": )" + attrs + R"(, "inputs": ["input"]})");
  };
  CHECK(error_kind([] { parse_graph("{not json"); }) == ErrorKind::MalformedGraph);
  CHECK(error_kind([] { parse_graph(R"({"name": "t", "nodes": []})"); }) == ErrorKind::MalformedGraph);
  CHECK(error_kind([&] { parse_graph(conv(R"({"kernel": 3})")); }) == ErrorKind::MalformedGraph);
  CHECK(error_kind([&] { parse_graph(conv(R"({"kernel": 3, "out_channels": 4, "groups": 2})")); }) ==
        ErrorKind::MalformedGraph);
  CHECK(error_kind([&] { parse_graph(conv(R"({"kernel": 0, "out_channels": 4})")); }) == ErrorKind::MalformedGraph);
  CHECK(error_kind([&] { parse_graph(conv(R"({"kernel": 3, "padding": -1, "out_channels": 4})")); }) ==
        ErrorKind::MalformedGraph);
  CHECK(error_kind([&] { parse_graph(conv(R"({"kernel": 40, "out_channels": 4})")); }) == ErrorKind::ShapeMismatch);
  CHECK(error_kind([] { load_graph(fixture("graphs/bad.json")); }) == ErrorKind::UnknownOp);
  try {
    load_graph(fixture("graphs/bad.json"));
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("warp") != std::string::npos);
  }
  // Two input nodes.
  CHECK(error_kind([] {
          parse_graph(graph_json(kInput + R"(, {"id": "in2", "op": "input", "attrs": {}, "inputs": []})"));
        }) == ErrorKind::MalformedGraph);
  // Unknown input reference.
  CHECK(error_kind([] {
          parse_graph(graph_json(kInput + R"(, {"id": "r", "op": "relu", "attrs": {}, "inputs": ["ghost"]})"));
        }) == ErrorKind::MalformedGraph);
  // Cycle a -> b -> a.
  CHECK(error_kind([] {
          parse_graph(graph_json(kInput + R"(, {"id": "a", "op": "add", "attrs": {}, "inputs": ["input", "b"]},
              {"id": "b", "op": "relu", "attrs": {}, "inputs": ["a"]})"));
        }) == ErrorKind::CycleDetected);
  // Concat along a spatial axis.
  CHECK(error_kind([] {
          parse_graph(graph_json(kInput + R"(, {"id": "k", "op": "concat", "attrs": {"axis": 1},
              "inputs": ["input", "input"]})"));
        }) == ErrorKind::ShapeMismatch);
  // Add of mismatched shapes.
  CHECK(error_kind([] {
          parse_graph(graph_json(kInput + R"(, {"id": "p", "op": "maxpool2d", "attrs": {"kernel": 2}, "inputs": ["input"]},
              {"id": "a", "op": "add", "attrs": {}, "inputs": ["input", "p"]})"));
        }) == ErrorKind::ShapeMismatch);
  // Adaptive pooling to a non-divisor size.
  CHECK(error_kind([] {
          parse_graph(graph_json(kInput + R"(, {"id": "p", "op": "adaptive_avgpool2d", "attrs": {"output_size": 5},
              "inputs": ["input"]})"));
        }) == ErrorKind::ShapeMismatch);
  // Pool padding above half the kernel.
  CHECK(error_kind([] {
          parse_graph(graph_json(kInput + R"(, {"id": "p", "op": "maxpool2d", "attrs": {"kernel": 2, "padding": 2},
              "inputs": ["input"]})"));
        }) == ErrorKind::ShapeMismatch);
  // Permute order that is not a permutation.
  CHECK(error_kind([] {
          parse_graph(graph_json(kInput + R"(, {"id": "t", "op": "permute", "attrs": {"order": [0, 0, 1]},
              "inputs": ["input"]})"));
        }) == ErrorKind::MalformedGraph);
}

TEST_CASE("ceil_mode and dropout") {
  auto g = parse_graph(graph_json(kInput + R"(,
      {"id": "p", "op": "maxpool2d", "attrs": {"kernel": 3, "stride": 2, "ceil_mode": true}, "inputs": ["input"]},
      {"id": "d", "op": "dropout_identity", "attrs": {}, "inputs": ["p"]})", "[2, 8, 8]"));
  // floor((8-3)/2)+1 = 3; ceil gives 4 (last window starts at 6 < 8).
  CHECK(output_shape(g, "p") == Shape{2, 4, 4});
  CHECK(output_shape(g, "d") == Shape{2, 4, 4});
}
