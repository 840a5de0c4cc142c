#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lazyflow/config.hpp"
#include "lazyflow/errors.hpp"
#include "lazyflow/io.hpp"
#include "lazyflow/rng.hpp"

using namespace lazyflow;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "lazyflow-unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string error_path(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<none>";
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("doubles round-trip through text") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  }

  TEST_CASE("CSV tables") {
    CsvTable t({"a", "b"});
    t.add_row({CsvTable::cell(1L), CsvTable::cell(0.5)});
    CHECK(t.str() == "a,b\n1,0.5\n");
    CHECK_THROWS(t.add_row({"only one"}));
  }

  TEST_CASE("npy files round-trip and carry a NumPy v1.0 header") {
    RowMatrix M(3, 4);
    for (int i = 0; i < 12; ++i) M.data()[i] = i * 0.25 - 1.0;
    const auto path = scratch("m.npy");
    write_npy(path, M);
    CHECK(read_npy(path) == M);
    std::ifstream in(path, std::ios::binary);
    std::string head(10, '\0');
    in.read(head.data(), 10);
    CHECK(head.substr(1, 5) == "NUMPY");
    CHECK(head[6] == 1);
    CHECK(head[7] == 0);
    const unsigned header_len = static_cast<unsigned char>(head[8]) | (static_cast<unsigned char>(head[9]) << 8);
    CHECK((10 + header_len) % 64 == 0);
    CHECK(std::filesystem::file_size(path) == 10 + header_len + 12 * sizeof(double));
  }
}

TEST_SUITE("rng") {
  TEST_CASE("derived seeds separate streams") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
    CHECK(derive_seed(1, {0}) != derive_seed(1, {0, 0}));
  }

  TEST_CASE("sphere samples have unit norm and no preferred direction") {
    Engine rng(60);
    const Matrix X = sample_sphere(10000, 7, rng);
    CHECK((X.rowwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);
    Vector e = Vector::Zero(7);
    e(3) = 1.0;
    CHECK(std::abs((X * e).mean()) < 0.05);
    const Vector u = Vector::Ones(7).normalized();
    CHECK(std::abs((X * u).mean()) < 0.05);
  }
}

TEST_SUITE("config") {
  TEST_CASE("defaults and a round trip") {
    const ExperimentConfig c = parse_config(json{{"seed", 3}});
    CHECK(c.seed == 3);
    CHECK(c.student.width == 50);
    CHECK(c.flow.step_factor == 0.5);
    CHECK(c.data.n_test == 2000);
    const json echo = to_json(c);
    CHECK(to_json(parse_config(echo)) == echo);
  }

  TEST_CASE("a full student block") {
    const json j = {{"seed", 1},
                    {"student",
                     {{"width", 8},
                      {"activation", "softplus"},
                      {"beta", 5},
                      {"scale_rule", "inv_sqrt_width"},
                      {"init", {{"dist", "normal"}, {"std", 0.3}}},
                      {"wrappers", {"symmetrized", "centered", "scaled:10"}}}},
                    {"sweep", {{"variable", "m"}, {"grid", {4, 8}}, {"repeats", 2}, {"scale_rules", {"1/m", "1/sqrt(m)"}}}}};
    const ExperimentConfig c = parse_config(j);
    CHECK(c.student.activation.kind == compute::ActivationKind::softplus);
    CHECK(c.student.activation.beta == 5.0);
    CHECK(c.student.symmetrized);
    CHECK(c.student.centered);
    CHECK(*c.student.scaled == 10.0);
    CHECK(c.student.init_std == 0.3);
    CHECK(c.sweep->variable == SweepVariable::width);
    CHECK(c.sweep->scale_rules.size() == 2);
    CHECK(to_json(parse_config(to_json(c))) == to_json(c));
  }

  TEST_CASE("violations carry field paths") {
    CHECK(error_path(json::object()) == "/seed");
    CHECK(error_path({{"seed", 1}, {"flow", {{"step_factor", 2.0}}}}) == "/flow/step_factor");
    CHECK(error_path({{"seed", 1}, {"flow", {{"integrator", "leapfrog"}}}}) == "/flow/integrator");
    CHECK(error_path({{"seed", 1}, {"student", {{"wrappers", {"centered", "scaled:-1"}}}}}) == "/student/wrappers/1");
    CHECK(error_path({{"seed", 1}, {"student", {{"widht", 3}}}}) == "/student/widht");
    CHECK(error_path({{"seed", 1}, {"data", {{"n_train", "many"}}}}) == "/data/n_train");
    CHECK(error_path({{"seed", 1}, {"student", {{"width", 5}, {"wrappers", {"symmetrized"}}}}}) == "/student/width");
    CHECK(error_path({{"seed", 1}, {"sweep", {{"variable", "beta"}, {"grid", {1}}}}}) == "/sweep/variable");
    CHECK(error_path({{"seed", 1}, {"sweep", {{"grid", json::array()}}}}) == "/sweep/grid");
    CHECK(error_path({{"seed", 1}, {"outputs", {{"neuron_cloud", true}}}, {"data", {{"input_dim", 3}}}}) ==
          "/outputs/neuron_cloud");
  }

  TEST_CASE("loading from disk") {
    const auto path = scratch("bad.json");
    write_text(path, "{ \"seed\": 1, ");
    CHECK_THROWS_AS(load_config(path), ConfigError);
    CHECK_THROWS_AS(load_config(scratch("missing.json")), ConfigError);
    write_text(path, "{ \"seed\": 4, \"name\": \"x\" }");
    CHECK(load_config(path).name == "x");
  }
}
