#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "genmetric/error.hpp"
#include "genmetric/experiment.hpp"
#include "genmetric/serialize.hpp"
#include "support.hpp"

using namespace genmetric;
namespace fs = std::filesystem;

namespace {

const std::string kCli = GENMETRIC_CLI_PATH;
const std::string kFixtures = GENMETRIC_FIXTURE_DIR;
const std::string kIris = std::string(GENMETRIC_FIXTURE_DIR) + "/../../data/iris.csv";

Json minimal_config() {
  return Json{{"schema_version", 1},
              {"name", "mini"},
              {"dataset", {{"csv", kIris}}},
              {"methods", {"euclidean"}},
              {"split", {{"repeats", 1}, {"base_seed", 3}}},
              {"grids", {{"k", {1, 3}}}}};
}

int run_cli(const std::string& args) {
  const int status = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Json strip_timing(Json j) {
  j.erase("timing");
  for (auto& m : j["methods"]) m.erase("timing");
  return j;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("m_uni").kind == MethodKind::MUni);
  CHECK(parse_method("cluster_uni").measure() == "rand");
  CHECK(parse_method("isomap").measure() == "residual_variance");
  CHECK(parse_method("glm_int").measure() == "error");
  const auto mkl = parse_method("mkl_metric(3)");
  CHECK(mkl.kind == MethodKind::MklMetric);
  CHECK(mkl.regions == 3);
  CHECK(mkl.name() == "mkl_metric(3)");
  CHECK_THROWS_AS(parse_method("lmnn"), Error);
  CHECK_THROWS_AS(parse_method("mkl_metric(0)"), Error);
  CHECK_THROWS_AS(parse_method("mkl_metric(x)"), Error);
  CHECK_THROWS_AS(parse_method("m_uni(2)"), Error);
}

TEST_CASE("config parsing is strict") {
  const auto cfg = parse_config(minimal_config());
  CHECK(cfg.repeats == 1);
  CHECK(cfg.base_seed == 3);
  CHECK(cfg.methods.size() == 1);
  CHECK(cfg.grids.k == std::vector<int>{1, 3});

  auto bad = minimal_config();
  bad["extra"] = 1;
  CHECK_THROWS_AS(parse_config(bad), Error);
  bad = minimal_config();
  bad["split"]["folds"] = 5;
  CHECK_THROWS_AS(parse_config(bad), Error);
  bad = minimal_config();
  bad["schema_version"] = 2;
  CHECK_THROWS_AS(parse_config(bad), Error);
  bad = minimal_config();
  bad["methods"] = {"nearest_mean"};
  CHECK_THROWS_AS(parse_config(bad), Error);
  bad = minimal_config();
  bad["split"]["repeats"] = 0;
  CHECK_THROWS_AS(parse_config(bad), Error);
}

TEST_CASE("minimal experiment report") {
  const auto report = run_experiment(parse_config(minimal_config()), 1);
  REQUIRE(report.methods.size() == 1);
  CHECK(report.methods[0].name == "euclidean");
  CHECK(report.methods[0].repeats.size() == 1);
  CHECK(report.methods[0].repeats[0].seed == 3);
  CHECK(report.points == 150);

  const auto dir = testing_support::temp_dir("report");
  write_report(report, dir.string());
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(fs::exists(dir / "table.txt"));
  CHECK(load_json((dir / "report.json").string())["methods"].size() == 1);
}

TEST_CASE("reports do not depend on the thread count") {
  auto j = minimal_config();
  j["methods"] = {"euclidean", "m_uni", "m_uni_energy"};
  j["split"]["repeats"] = 4;
  const auto cfg = parse_config(j);
  const auto one = strip_timing(to_json(run_experiment(cfg, 1)));
  const auto two = strip_timing(to_json(run_experiment(cfg, 2)));
  CHECK(one.dump() == two.dump());
}

TEST_CASE("standard error equals sample std over sqrt(n)") {
  auto j = minimal_config();
  j["split"]["repeats"] = 5;
  const auto json = to_json(run_experiment(parse_config(j), 1));
  const auto& m = json["methods"][0];
  std::vector<double> v;
  for (const auto& r : m["repeats"]) v.push_back(r["value"].get<double>());
  REQUIRE(v.size() == 5);
  double mean = 0.0;
  for (double x : v) mean += x / 5.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  CHECK(m["mean"].get<double>() == doctest::Approx(mean).epsilon(1e-12));
  CHECK(m["standard_error"].get<double>() == doctest::Approx(std::sqrt(ss / 4.0) / std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("average ranks") {
  const auto t = average_ranks({"d1", "d2"}, {{{"A", 0.1}, {"B", 0.2}}, {{"A", 0.05}, {"B", 0.3}}});
  REQUIRE(t.methods == std::vector<std::string>{"A", "B"});
  CHECK(t.average[0] == 1.0);
  CHECK(t.average[1] == 2.0);

  const auto ties = average_ranks({"d"}, {{{"A", 0.1}, {"B", 0.1}, {"C", 0.3}}});
  CHECK(ties.ranks[0] == std::vector<double>{1.5, 1.5, 3.0});

  // Methods missing from a dataset are left out.
  const auto partial = average_ranks({"d1", "d2"}, {{{"A", 0.1}, {"B", 0.2}}, {{"A", 0.1}}});
  CHECK(partial.methods == std::vector<std::string>{"A"});
}

TEST_CASE("serialization round trips") {
  std::mt19937_64 rng(3);
  MetricMatrix m = MetricMatrix::global(testing_support::random_spd(3, rng), "UNI");
  m.det_normalized = true;
  const auto back = metric_from_json(Json::parse(to_json(m).dump()));
  CHECK(back.matrix == m.matrix);
  CHECK(back.method == "UNI");
  CHECK(back.provenance == Provenance::Global);
  CHECK(back.det_normalized);

  const auto ds = testing_support::blobs(10, 2, 3, 2.0, 4);
  const auto ms = fit_gaussian_models(ds);
  const auto ms2 = models_from_json(Json::parse(to_json(ms).dump()));
  CHECK(ms2.class_ids == ms.class_ids);
  CHECK(ms2.models[1].covariance == ms.models[1].covariance);
  CHECK(ms2.models[1].prior == ms.models[1].prior);

  FittedMetric f;
  f.metric = m;
  f.scale = fit_scale(ds);
  f.source = "x";
  const auto path = (testing_support::temp_dir("ser") / "f.json").string();
  save_json(path, to_json(f));
  const auto g = fitted_metric_from_json(load_json(path));
  CHECK(g.preprocess(ds.features) == f.preprocess(ds.features));
  CHECK_FALSE(g.projection.has_value());
}

TEST_CASE("cli embed on the three-point fixture") {
  const auto out = testing_support::temp_dir("cli_embed") / "e.csv";
  REQUIRE(run_cli("embed --data " + kFixtures + "/line3.csv --neighbors 2 --dim 1 --no-scale --out " + out.string()) == 0);
  const auto rows = read_rows(out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"id", "x0", "label"});
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].size() == 3);
}

TEST_CASE("cli fit-metric then classify equals the in-process pipeline") {
  const auto dir = testing_support::temp_dir("cli_roundtrip");
  const auto iris = load_csv(kIris, std::string("label"));
  SplitSpec spec;
  spec.seed = 9;
  const auto s = split(iris, spec);
  write_csv((dir / "train.csv").string(), s.train);
  write_csv((dir / "test.csv").string(), s.test);

  const auto metric = (dir / "metric.json").string();
  const auto preds = (dir / "pred.csv").string();
  REQUIRE(run_cli("fit-metric --data " + (dir / "train.csv").string() + " --out " + metric) == 0);
  REQUIRE(run_cli("classify --metric " + metric + " --train " + (dir / "train.csv").string() + " --data " +
                  (dir / "test.csv").string() + " -k 3 --out " + preds) == 0);

  const auto train = load_csv((dir / "train.csv").string(), std::string("label"));
  const auto test = load_csv((dir / "test.csv").string(), std::string("label"));
  const auto scale = fit_scale(train);
  const auto strain = scale.apply(train);
  const auto m = fit_uniform_metric(strain);
  const auto expected = knn_predict_batch(strain, KnnConfig{3, m}, scale.apply(test.features));

  const auto rows = read_rows(preds);
  REQUIRE(rows.size() == expected.size() + 1);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(std::stod(rows[i + 1][1]) == strain.label_values[static_cast<std::size_t>(expected[i])]);
  }
}

TEST_CASE("cli exit codes") {
  const auto dir = testing_support::temp_dir("cli_exit");
  {
    std::ofstream f(dir / "bad.json");
    f << R"({"schema_version": 1, "methods": ["euclidean"], "bogus": true})";
  }
  CHECK(run_cli("benchmark " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("no-such-command") != 0);
}

TEST_CASE("cli rank orders methods") {
  const auto dir = testing_support::temp_dir("cli_rank");
  auto report = [](const std::string& name, double a, double b) {
    return Json{{"name", name},
                {"methods",
                 {{{"name", "A"}, {"measure", "error"}, {"mean", a}, {"successful_repeats", 1}},
                  {{"name", "B"}, {"measure", "error"}, {"mean", b}, {"successful_repeats", 1}}}}};
  };
  save_json((dir / "r1.json").string(), report("one", 0.1, 0.2));
  save_json((dir / "r2.json").string(), report("two", 0.05, 0.3));
  const auto t = rank_reports({load_json((dir / "r1.json").string()), load_json((dir / "r2.json").string())});
  CHECK(t.average == std::vector<double>{1.0, 2.0});
  const auto out = dir / "ranks.txt";
  CHECK(run_cli("rank " + (dir / "r1.json").string() + " " + (dir / "r2.json").string() + " --out " + out.string()) == 0);
  CHECK(fs::file_size(out) > 0);
}
