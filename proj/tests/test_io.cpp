#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "dqlm/io/config.hpp"
#include "dqlm/io/csv.hpp"
#include "dqlm/io/runner.hpp"
#include "dqlm/simulate.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "dqlm_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path);
  out << contents;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(DQLM_CLI_PATH) + " " + args +
                                  " > /dev/null 2>&1")
                                     .c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("csv ingestion") {
  const fs::path dir = temp_dir("csv");
  SECTION("three-row file") {
    write_file(dir / "ok.csv", "t,y\n1,1.5\n2,2.5\n3,-0.25\n");
    auto data = dqlm::ingest_csv((dir / "ok.csv").string());
    REQUIRE(data.length() == 3);
    CHECK(data.y[2] == -0.25);
    CHECK(data.time_labels[1] == "2");
  }
  SECTION("iso dates are accepted and ordered") {
    write_file(dir / "dates.csv", "t,y\n2001-01-31,1\n2001-02-28,2\n");
    auto data = dqlm::ingest_csv((dir / "dates.csv").string());
    CHECK(data.length() == 2);
    CHECK(data.label(0) == "2001-01-31");
  }
  SECTION("non-numeric y names the line") {
    write_file(dir / "bad.csv",
               "t,y\n1,1\n2,2\n3,3\n4,4\n5,5\n6,oops\n");
    try {
      dqlm::ingest_csv((dir / "bad.csv").string());
      FAIL("expected DomainError");
    } catch (const dqlm::DomainError& e) {
      CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }
  }
  SECTION("missing y names the line") {
    write_file(dir / "missing.csv", "t,y\n1,1\n2,\n");
    try {
      dqlm::ingest_csv((dir / "missing.csv").string());
      FAIL("expected DomainError");
    } catch (const dqlm::DomainError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
      CHECK(std::string(e.what()).find("missing y") != std::string::npos);
    }
  }
  SECTION("duplicate timestamps rejected") {
    write_file(dir / "dup.csv", "t,y\n1,1\n1,2\n");
    CHECK_THROWS_AS(dqlm::ingest_csv((dir / "dup.csv").string()),
                    dqlm::DomainError);
  }
  SECTION("decreasing timestamps rejected") {
    write_file(dir / "dec.csv", "t,y\n2,1\n1,2\n");
    CHECK_THROWS_AS(dqlm::ingest_csv((dir / "dec.csv").string()),
                    dqlm::DomainError);
  }
  SECTION("missing column rejected") {
    write_file(dir / "nocol.csv", "t,value\n1,1\n");
    CHECK_THROWS_AS(dqlm::ingest_csv((dir / "nocol.csv").string()),
                    dqlm::DomainError);
  }
  SECTION("covariate columns") {
    write_file(dir / "cov.csv", "t,y,x\n1,1,2.5\n2,2,3.5\n");
    dqlm::ColumnMapping map;
    map.covariate_columns = {"x"};
    auto data = dqlm::ingest_csv((dir / "cov.csv").string(), map);
    REQUIRE(data.covariates.rows() == 2);
    CHECK(data.covariates(1, 0) == 3.5);
  }
}

TEST_CASE("written tables round trip exactly") {
  const fs::path dir = temp_dir("roundtrip");
  dqlm::CsvTable table;
  table.header = {"a", "b"};
  const double values[] = {1.0 / 3.0, -2.718281828459045e-17, 49.0,
                           1e300, 0.1};
  for (double v : values) {
    table.add_row({dqlm::format_double(v), dqlm::format_double(v * 3.0)});
  }
  dqlm::write_csv((dir / "t.csv").string(), table);
  auto back = dqlm::read_csv((dir / "t.csv").string());
  REQUIRE(back.rows.size() == 5);
  for (size_t i = 0; i < 5; ++i) {
    CHECK(std::stod(back.rows[i][0]) == values[i]);
    CHECK(std::stod(back.rows[i][1]) == values[i] * 3.0);
    CHECK(back.rows[i][0] == table.rows[i][0]);
  }
}

TEST_CASE("run config") {
  SECTION("json round trip") {
    dqlm::RunConfig c;
    c.engine = "sequential";
    c.quantiles = {0.2, 0.8};
    c.model_type = "trend-seasonal";
    c.evolution_policy = "discount";
    c.delta = 0.9;
    c.seed = 77;
    auto back = dqlm::RunConfig::from_json(c.to_json());
    CHECK(back.engine == "sequential");
    CHECK(back.quantiles == std::vector<double>{0.2, 0.8});
    CHECK(back.model_type == "trend-seasonal");
    CHECK(back.delta == 0.9);
    CHECK(back.seed == 77);
  }
  SECTION("validation") {
    dqlm::RunConfig c;
    c.quantiles = {0.5, 0.1};
    CHECK_THROWS_AS(c.validate(), dqlm::DomainError);
    c.quantiles = {0.1, 0.5};
    c.engine = "both";
    CHECK_THROWS_AS(c.validate(), dqlm::DomainError);
    c.engine = "sequential";
    c.evolution_policy = "inverse-wishart";
    CHECK_THROWS_AS(c.validate(), dqlm::DomainError);
    c.evolution_policy = "discount";
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("fit writes the declared artifact set") {
  const fs::path dir = temp_dir("fit_smoke");
  dqlm::Rng rng(21);
  auto path = dqlm::simulate_al_dlm(
      dqlm::build_local_level(), 0.01 * Eigen::MatrixXd::Identity(1, 1), 1.0,
      0.5, Eigen::VectorXd::Zero(1), 20, rng);

  dqlm::RunConfig config;
  config.engine = "mcmc";
  config.model_type = "local-level";
  config.evolution_policy = "discount";
  config.quantiles = {0.1, 0.5, 0.9};
  config.mcmc = {300, 100, 1, 5};
  config.output_dir = (dir / "out").string();
  config.seed = 33;

  auto artifacts = dqlm::run_fit(config, path.data);
  for (const auto& f : artifacts.files) {
    CHECK(fs::exists(artifacts.directory / f));
  }
  CHECK(fs::exists(artifacts.directory / "manifest.json"));
  CHECK(fs::exists(artifacts.directory / "iqr.csv"));

  // manifest reproduces the run bit for bit
  std::ifstream mf(artifacts.directory / "manifest.json");
  dqlm::Json manifest;
  mf >> manifest;
  auto config2 = dqlm::RunConfig::from_json(manifest.at("config"));
  config2.output_dir = (dir / "out2").string();
  auto artifacts2 = dqlm::run_fit(config2, path.data);
  for (const auto& name : {"fit_tau0.500.csv", "draws_tau0.100.csv"}) {
    std::ifstream a(artifacts.directory / name);
    std::ifstream b(artifacts2.directory / name);
    const std::string sa((std::istreambuf_iterator<char>(a)),
                         std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(b)),
                         std::istreambuf_iterator<char>());
    CHECK(sa == sb);
  }
}

TEST_CASE("forecast from artifacts") {
  const fs::path dir = temp_dir("forecast_io");
  dqlm::Rng rng(22);
  auto path = dqlm::simulate_al_dlm(
      dqlm::build_local_level(), 0.01 * Eigen::MatrixXd::Identity(1, 1), 1.0,
      0.5, Eigen::VectorXd::Zero(1), 20, rng);

  dqlm::RunConfig config;
  config.engine = "sequential";
  config.model_type = "local-level";
  config.evolution_policy = "discount";
  config.quantiles = {0.5};
  config.output_dir = (dir / "out").string();
  auto artifacts = dqlm::run_fit(config, path.data);

  CHECK_THROWS_AS(dqlm::run_forecast(artifacts.directory.string(), 0),
                  dqlm::DomainError);
  auto files = dqlm::run_forecast(artifacts.directory.string(), 4, 2);
  CHECK(files.size() == 2);
  auto table =
      dqlm::read_csv((artifacts.directory / "forecast_tau0.500.csv").string());
  REQUIRE(table.rows.size() == 4);
  // interval widths are non-decreasing in the horizon for a local level
  double prev_width = 0.0;
  for (const auto& row : table.rows) {
    const double width = std::stod(row[5]) - std::stod(row[4]);
    CHECK(width >= prev_width - 1e-9);
    prev_width = width;
  }
}

TEST_CASE("cli exit codes") {
  const fs::path dir = temp_dir("cli");
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("simulate --preset local-level-al --T 10 --out " +
                (dir / "sim").string()) == 0);
  // good fit
  CHECK(run_cli("fit --input " + (dir / "sim" / "data.csv").string() +
                " --engine mcmc --model local-level --evolution discount "
                "--tau 0.5 --sweeps 60 --burn-in 20 --thin 1 --out-dir " +
                (dir / "fit").string()) == 0);
  // config errors
  CHECK(run_cli("fit --engine mcmc") == 2);                    // no input
  CHECK(run_cli("fit --input /nonexistent.csv") == 2);         // bad path
  CHECK(run_cli("fit --badflag") == 2);                        // parse error
  CHECK(run_cli("forecast --fit-dir " + (dir / "fit").string() +
                " --horizon 0") == 2);
  CHECK(run_cli("replicate unknown-preset") == 2);
  // bad numeric config inside a valid file
  write_file(dir / "bad.json", "{\"quantiles\": [0.9, 0.1]}");
  CHECK(run_cli("fit --config " + (dir / "bad.json").string() + " --input " +
                (dir / "sim" / "data.csv").string()) == 2);
  write_file(dir / "broken.json", "{not json");
  CHECK(run_cli("fit --config " + (dir / "broken.json").string()) == 2);
}
