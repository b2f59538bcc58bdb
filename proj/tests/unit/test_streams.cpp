#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <doctest.h>

#include "driftbench/streams.hpp"

using namespace driftbench;

namespace {

const char* kCsv =
    "a,b,class\n"
    "1.0,2.5,yes\n"
    "-3,4e-1,no\n"
    "0.5,0,yes\n";

const char* kArff =
    "% comment\n"
    "@relation toy\n"
    "@attribute a numeric\n"
    "@attribute 'b' REAL\n"
    "@attribute class {yes,no}\n"
    "@data\n"
    "1.0,2.5,yes\n"
    "-3,4e-1,no\n"
    "0.5,0,yes\n";

Stream csv(const std::string& text, std::optional<std::size_t> max = std::nullopt) {
  std::istringstream in(text);
  return parse_csv(in, "toy.csv", max);
}

std::size_t error_line(const std::string& text) {
  try {
    csv(text);
  } catch (const ParseError& err) {
    return err.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("csv: three rows of two features") {
  const Stream s = csv(kCsv);
  CHECK(s.feature_count() == 2);
  CHECK(s.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(s.label_name == "class");
  REQUIRE(s.instances.size() == 3);
  CHECK(s.instances[1].features == FeatureVector{-3.0, 0.4});
  CHECK(s.labels == std::vector<std::string>{"yes", "no"});
  CHECK(s.instances[0].label == 0);
  CHECK(s.instances[1].label == 1);
  CHECK(s.instances[2].label == 0);
  CHECK(s.instances[2].index == 2);
  CHECK_FALSE(s.truth.has_value());
}

TEST_CASE("csv and arff with the same content load identically") {
  std::istringstream in(kArff);
  const Stream a = parse_arff(in, "toy.arff");
  const Stream c = csv(kCsv);
  CHECK(a.instances == c.instances);
  CHECK(a.feature_names == c.feature_names);
  CHECK(a.labels == c.labels);
}

TEST_CASE("max_instances truncates") {
  CHECK(csv(kCsv, 2).instances.size() == 2);
  CHECK(csv(kCsv, 10).instances.size() == 3);
}

TEST_CASE("csv errors carry the line number") {
  CHECK(error_line("a,b,c\n1,2,x\n1,2\n") == 3);
  CHECK(error_line("a,b,c\n1,2,x\n1,,x\n") == 3);
  CHECK(error_line("a,b,c\n1,2,x\n1,?,x\n") == 3);
  CHECK(error_line("a,b,c\n1,2,x\n1,2,x\n1,zz,y\n") == 4);
  CHECK(error_line("") == 1);
  CHECK_THROWS_AS(csv("a,b,c\n1,2,?\n"), ParseError);
}

TEST_CASE("nominal feature columns are encoded by first appearance") {
  const Stream s = csv("color,size,y\nred,1,a\nblue,2,b\nred,3,a\n");
  CHECK(s.instances[0].features[0] == 0.0);
  CHECK(s.instances[1].features[0] == 1.0);
  CHECK(s.instances[2].features[0] == 0.0);
}

TEST_CASE("arff: unsupported constructs are rejected") {
  auto arff = [](const std::string& text) {
    std::istringstream in(text);
    return parse_arff(in, "t.arff");
  };
  CHECK_THROWS_AS(arff("@relation r\n@attribute s string\n@attribute c {a}\n@data\nx,a\n"), ParseError);
  CHECK_THROWS_AS(arff("@relation r\n@attribute x numeric\n@attribute c {a,b}\n@data\n{0 1}\n"), ParseError);
  CHECK_THROWS_AS(arff("@relation r\n@attribute x numeric\n@attribute c {a,b}\n@data\n1,z\n"), ParseError);
  CHECK_THROWS_AS(arff("@relation r\n@attribute x numeric\n@attribute c {a,b}\n"), ParseError);
  const Stream ok = arff("@relation r\n@attribute x integer\n@attribute c {b,a}\n@data\n\n1,a\n% note\n2,b\n");
  CHECK(ok.instances.size() == 2);
  CHECK(ok.labels == std::vector<std::string>{"a", "b"});
}

TEST_CASE("format detection") {
  CHECK(format_from_path("x/y.arff") == FileFormat::arff);
  CHECK(format_from_path("x/y.csv") == FileFormat::csv);
  CHECK(file_format_from_string("arff") == FileFormat::arff);
  CHECK_THROWS_AS(file_format_from_string("xlsx"), UsageError);
  CHECK_THROWS(load_stream("/nonexistent/file.csv"));
}

TEST_CASE("synthetic A,B,A: change points and determinism") {
  SynthSpec spec;
  spec.order = {"A", "B", "A"};
  spec.seed = 3;
  const Stream a = synth_recurring(spec);
  const Stream b = synth_recurring(spec);
  CHECK(a.instances.size() == 6000);
  REQUIRE(a.truth.has_value());
  CHECK(a.truth->change_points() == std::vector<std::size_t>{2000, 4000});
  CHECK(a.truth->segments[2].concept_name == "A");
  CHECK(a.instances == b.instances);
  spec.seed = 4;
  CHECK_FALSE(synth_recurring(spec).instances == a.instances);
  const bool binary = a.labels == std::vector<std::string>{"0", "1"} || a.labels == std::vector<std::string>{"1", "0"};
  CHECK(binary);
}

TEST_CASE("synthetic concepts are separable from batch means") {
  SynthSpec spec;
  spec.order = {"A", "B", "C", "A", "C", "B"};
  spec.lengths = {1000};
  spec.seed = 5;
  const Stream s = synth_recurring(spec);
  // Reference means from the first 200 instances of each concept.
  std::map<std::string, std::vector<double>> centre;
  for (const auto& seg : s.truth->segments) {
    if (centre.count(seg.concept_name)) continue;
    std::vector<double> m(spec.features, 0.0);
    for (std::size_t i = seg.start; i < seg.start + 200; ++i) {
      for (std::size_t f = 0; f < spec.features; ++f) m[f] += s.instances[i].features[f] / 200.0;
    }
    centre[seg.concept_name] = m;
  }
  std::size_t batches = 0, correct = 0;
  const std::size_t b = 10;
  for (const auto& seg : s.truth->segments) {
    for (std::size_t start = seg.start; start + b <= seg.start + seg.length; start += b) {
      std::vector<double> m(spec.features, 0.0);
      for (std::size_t i = start; i < start + b; ++i) {
        for (std::size_t f = 0; f < spec.features; ++f) m[f] += s.instances[i].features[f] / double(b);
      }
      std::string best;
      double best_d = INFINITY;
      for (const auto& [name, c] : centre) {
        double d = 0;
        for (std::size_t f = 0; f < spec.features; ++f) d += (m[f] - c[f]) * (m[f] - c[f]);
        if (d < best_d) best_d = d, best = name;
      }
      ++batches;
      correct += best == seg.concept_name ? 1 : 0;
    }
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(batches) >= 0.99);
}

TEST_CASE("synthetic linear concept labels follow the concept's own feature") {
  SynthSpec spec;
  spec.order = {"A", "B"};
  spec.lengths = {500};
  const Stream s = synth_recurring(spec);
  // A thresholds feature 0 and B feature 1, each at the concept mean.
  std::size_t agree_a = 0, agree_b = 0;
  for (std::size_t i = 0; i < 500; ++i) {
    const double mean = 0.5 * spec.separation * hadamard_sign(1, 0);
    agree_a += (s.labels[std::size_t(s.instances[i].label)] == "1") == (s.instances[i].features[0] > mean) ? 1 : 0;
  }
  for (std::size_t i = 500; i < 1000; ++i) {
    const double mean = 0.5 * spec.separation * hadamard_sign(2, 1);
    agree_b += (s.labels[std::size_t(s.instances[i].label)] == "1") == (s.instances[i].features[1] > mean) ? 1 : 0;
  }
  CHECK(agree_a == 500);
  CHECK(agree_b == 500);
}

TEST_CASE("gaussian concept with three labels") {
  SynthSpec spec;
  spec.order = {"G"};
  spec.lengths = {300};
  spec.concepts["G"] = ConceptSpec{ConceptKind::gaussian, 2, 3, 6.0};
  const Stream s = synth_recurring(spec);
  CHECK(s.label_count() == 3);
}

TEST_CASE("write_csv round trip is exact") {
  SynthSpec spec;
  spec.order = {"A", "B"};
  spec.lengths = {300};
  spec.features = 5;
  const Stream s = synth_recurring(spec);
  std::stringstream buf;
  write_csv(s, buf);
  const Stream back = parse_csv(buf, "round.csv");
  CHECK(back.instances == s.instances);
  CHECK(back.feature_names == s.feature_names);
  CHECK(back.labels == s.labels);
  const auto path = std::filesystem::temp_directory_path() / "driftbench_roundtrip.csv";
  write_csv(s, path);
  CHECK(load_stream(path).instances == s.instances);
  std::filesystem::remove(path);
}

TEST_CASE("ground truth json round trip") {
  GroundTruth t{{{0, 100, "A"}, {100, 50, "B"}}};
  CHECK(GroundTruth::from_json(nlohmann::json::parse(t.to_json().dump())) == t);
  CHECK(t.to_json().at("change_points") == nlohmann::json::array({100}));
}

TEST_CASE("synth spec grammar") {
  std::istringstream in(
      "# recurring\n"
      "features = 8\n"
      "order = A, B, A\n"
      "lengths = 300,400,500\n"
      "concept.B.kind = gaussian\n"
      "concept.B.labels = 4\n"
      "concept.B.feature = 3\n");
  const SynthSpec spec = SynthSpec::parse(in, "s.cfg");
  CHECK(spec.features == 8);
  CHECK(spec.order == std::vector<std::string>{"A", "B", "A"});
  CHECK(spec.segment_length(2) == 500);
  CHECK(spec.concepts.at("B").kind == ConceptKind::gaussian);
  CHECK(spec.concepts.at("B").feature == 3u);
  CHECK(synth_recurring(spec).truth->change_points() == std::vector<std::size_t>{300, 700});

  std::istringstream bad("features = 8\nbogus = 1\n");
  try {
    SynthSpec::parse(bad, "s.cfg");
    FAIL("expected a ParseError");
  } catch (const ParseError& err) {
    CHECK(err.line() == 2);
  }
  SynthSpec tiny;
  tiny.lengths = {50};
  CHECK_THROWS_AS(tiny.validate(150), UsageError);
  SynthSpec unused;
  unused.concepts["Z"] = {};
  CHECK_THROWS_AS(unused.validate(), UsageError);
}
