#include "cli.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace ss = style_space;
namespace cli = style_space::cli;
using ss::testing::temp_dir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// Small four-category set written as JSONL; returns its path.
std::string small_dataset(const std::filesystem::path& dir, std::size_t categories = 4) {
  const std::string path = (dir / "small.jsonl").string();
  const auto r = run({"gen-synth", "--clusters", std::to_string(categories), "--dim", "3", "--n", "25", "--seed", "3",
                      "--out", path});
  EXPECT_EQ(r.code, 0) << r.err;
  return path;
}

}  // namespace

TEST(CliGenSynth, CorpusShapedDataset) {
  const auto dir = temp_dir("cli_gen");
  const auto a = (dir / "a.jsonl").string(), b = (dir / "b.jsonl").string();
  ASSERT_EQ(run({"gen-synth", "--clusters", "4", "--dim", "40", "--n", "740", "--seed", "7", "--out", a}).code, 0);
  ASSERT_EQ(run({"gen-synth", "--clusters", "4", "--dim", "40", "--n", "740", "--seed", "7", "--out", b}).code, 0);
  const auto bytes = cli::read_file(a);
  EXPECT_EQ(line_count(bytes), 2960u);
  EXPECT_EQ(bytes, cli::read_file(b));
  EXPECT_TRUE(std::filesystem::exists(cli::manifest_path(a)));
  EXPECT_FALSE(std::filesystem::exists(a + ".tmp"));
}

TEST(CliGenSynth, UsageErrors) {
  const auto missing_out = run({"gen-synth", "--clusters", "4"});
  EXPECT_EQ(missing_out.code, 2);
  EXPECT_NE(missing_out.err.find("--out"), std::string::npos);
  EXPECT_EQ(run({"gen-synth", "--clusters", "0", "--out", "x.jsonl"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST(CliGenSynth, SpecFileAndConflict) {
  const auto dir = temp_dir("cli_spec");
  const auto spec = (dir / "spec.json").string();
  std::ofstream(spec) << ss::to_json(ss::testing::two_cluster_benchmark_spec()).dump();
  const auto out = (dir / "d.csv").string();
  ASSERT_EQ(run({"gen-synth", "--spec", spec, "--out", out}).code, 0);
  EXPECT_EQ(ss::load_dataset(out), ss::generate_synthetic(ss::testing::two_cluster_benchmark_spec()));
  EXPECT_EQ(run({"gen-synth", "--spec", spec, "--dim", "3", "--out", out}).code, 2);
}

TEST(CliManifest, DigestsMatchFiles) {
  const auto dir = temp_dir("cli_manifest");
  const auto data = small_dataset(dir);
  const auto reps = (dir / "reps.json").string();
  ASSERT_EQ(run({"reps", "--input", data, "--method", "i2i", "--out", reps}).code, 0);
  const auto m = nlohmann::json::parse(cli::read_file(cli::manifest_path(reps)));
  EXPECT_EQ(m["command"], "reps");
  EXPECT_EQ(m["version"], ss::kVersion);
  EXPECT_EQ(m["inputs"][0]["sha256"], cli::sha256_hex(cli::read_file(data)));
  EXPECT_EQ(m["outputs"][0]["sha256"], cli::sha256_hex(cli::read_file(reps)));
  EXPECT_TRUE(m["config"]["solver"].contains("shrinkage"));
  EXPECT_EQ(cli::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CliReps, MeanIsCentroid) {
  const auto dir = temp_dir("cli_mean");
  const auto data = small_dataset(dir);
  const auto out = (dir / "reps.json").string();
  ASSERT_EQ(run({"reps", "--input", data, "--method", "mean", "--out", out}).code, 0);
  const auto reps = ss::representatives_from_json(nlohmann::json::parse(cli::read_file(out)));
  const auto clusters = ss::partition(ss::load_dataset(data));
  ASSERT_EQ(reps.size(), 4u);
  for (const auto& r : reps) {
    EXPECT_EQ(r.method, ss::RepresentativeMethod::mean);
    EXPECT_LT((r.vector - ss::centroid(clusters.at(r.label))).norm(), 1e-12);
  }
}

TEST(CliReps, I2ISchemaAndDegenerateWarning) {
  const auto dir = temp_dir("cli_i2i");
  const auto data = small_dataset(dir, 2);
  const auto out = (dir / "reps.json").string();
  const auto r = run({"reps", "--input", data, "--method", "i2i", "--out", out});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("degenerate"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  const auto j = nlohmann::json::parse(cli::read_file(out));
  ASSERT_TRUE(j.is_array());
  for (const auto& rep : j) {
    for (const auto* key : {"label", "vector", "method", "objective", "boundary_margin", "closest", "farthest"})
      EXPECT_TRUE(rep.contains(key)) << key;
    EXPECT_TRUE(rep["degenerate"].get<bool>());
  }
  EXPECT_EQ(run({"reps", "--input", data, "--method", "mean", "--no-refine", "--out", out}).code, 2);
}

TEST(CliReps, NanRecordFails) {
  const auto dir = temp_dir("cli_nan");
  const auto data = (dir / "nan.jsonl").string();
  std::ofstream(data) << R"({"id":"a","label":"neutral","weights":[1,2]}
{"id":"b","label":"anger","weights":["NaN",2]}
{"id":"c","label":"sadness","weights":[4,2]}
)";
  const auto r = run({"reps", "--input", data, "--out", (dir / "r.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("'b'"), std::string::npos);
}

TEST(CliSchedule, LinearAndSaI2I) {
  const auto dir = temp_dir("cli_sched");
  const auto data = small_dataset(dir);
  const auto labels = ss::load_dataset(data).labels();
  const auto lin = (dir / "lin.json").string(), sa = (dir / "sa.json").string();
  ASSERT_EQ(run({"schedule", "--input", data, "--emotion", "anger", "--method", "linear", "--ts",
                 "0,0.2,0.4,0.6,0.8,1", "--out", lin})
                .code,
            0);
  EXPECT_EQ(ss::schedule_from_json(nlohmann::json::parse(cli::read_file(lin))).levels.size(), 6u);

  const auto r = run({"schedule", "--input", data, "--emotion", "anger", "--method", "sa-i2i", "--levels", "4",
                      "--out", sa});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = ss::schedule_from_json(nlohmann::json::parse(cli::read_file(sa)));
  ASSERT_EQ(s.levels.size(), 4u);
  EXPECT_EQ(s.levels.front().alpha, *s.anchor);
  EXPECT_EQ(s.levels.back().alpha, 1.0);
}

TEST(CliSchedule, FlagConflictsAndMissingLabels) {
  const auto dir = temp_dir("cli_sched_err");
  const auto data = small_dataset(dir);
  const auto out = (dir / "s.json").string();
  EXPECT_EQ(run({"schedule", "--input", data, "--emotion", "anger", "--method", "linear", "--levels", "4", "--out", out})
                .code,
            2);
  EXPECT_EQ(run({"schedule", "--input", data, "--emotion", "anger", "--method", "sa-i2i", "--ts", "0,1", "--out", out})
                .code,
            2);
  EXPECT_EQ(run({"schedule", "--input", data, "--emotion", "anger", "--method", "linear", "--ts", "0.5,0.2", "--out",
                 out})
                .code,
            2);
  EXPECT_EQ(run({"schedule", "--input", data, "--emotion", "fear", "--method", "linear", "--out", out}).code, 1);
  EXPECT_EQ(run({"schedule", "--input", data, "--emotion", "anger", "--neutral", "calm", "--method", "sa-i2i", "--out",
                 out})
                .code,
            1);
  EXPECT_FALSE(std::filesystem::exists(out));
}

TEST(CliPlot, GlyphsCsvAndDimensionMismatch) {
  const auto dir = temp_dir("cli_plot");
  const auto data = small_dataset(dir);
  const auto mean = (dir / "mean.json").string(), i2i = (dir / "i2i.json").string(), both = (dir / "both.json").string();
  ASSERT_EQ(run({"reps", "--input", data, "--method", "mean", "--out", mean}).code, 0);
  ASSERT_EQ(run({"reps", "--input", data, "--method", "i2i", "--out", i2i}).code, 0);
  auto merged = nlohmann::json::parse(cli::read_file(mean));
  for (const auto& r : nlohmann::json::parse(cli::read_file(i2i))) merged.push_back(r);
  std::ofstream(both) << merged.dump();

  const auto svg = (dir / "p.svg").string();
  ASSERT_EQ(run({"plot", "--input", data, "--reps", both, "--format", "svg", "--out", svg}).code, 0);
  const auto text = cli::read_file(svg);
  EXPECT_NE(text.find("rep-mean"), std::string::npos);
  EXPECT_NE(text.find("rep-i2i"), std::string::npos);

  const auto csv = (dir / "p.csv").string();
  ASSERT_EQ(run({"plot", "--input", data, "--format", "csv", "--out", csv}).code, 0);
  const auto rows = cli::read_file(csv);
  EXPECT_EQ(rows.substr(0, rows.find('\n')), "x,y,label,kind");
  EXPECT_EQ(line_count(rows), 101u);

  const auto other = (dir / "other.jsonl").string();
  ASSERT_EQ(run({"gen-synth", "--clusters", "3", "--dim", "5", "--n", "10", "--out", other}).code, 0);
  EXPECT_EQ(run({"plot", "--input", other, "--reps", mean, "--format", "svg", "--out", svg}).code, 1);
  EXPECT_EQ(run({"plot", "--input", data, "--format", "png", "--out", svg}).code, 2);
}

TEST(CliValidate, ExitCodes) {
  const auto dir = temp_dir("cli_validate");
  const auto data = small_dataset(dir);
  const auto ok = run({"validate", "--input", data, "--min-per-category", "10"});
  EXPECT_EQ(ok.code, 0);
  EXPECT_TRUE(nlohmann::json::parse(ok.out)["schedulable"].get<bool>());

  const auto no_neutral = (dir / "no_neutral.jsonl").string();
  std::ofstream(no_neutral) << R"({"id":"a","label":"anger","weights":[1,2]}
{"id":"b","label":"sadness","weights":[3,2]}
)";
  const auto missing = run({"validate", "--input", no_neutral});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.out.find("neutral"), std::string::npos);

  const auto nan = (dir / "nan.jsonl").string();
  std::ofstream(nan) << R"({"id":"n","label":"neutral","weights":[1,2]}
{"id":"bad-one","label":"anger","weights":["NaN",2]}
)";
  const auto r = run({"validate", "--input", nan});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("bad-one"), std::string::npos);

  EXPECT_EQ(run({"validate", "--input", (dir / "absent.jsonl").string()}).code, 2);
}
