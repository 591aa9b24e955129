#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "diffreg/grid.hpp"
#include "diffreg/problems.hpp"
#include "diffreg/volume_file.hpp"

namespace diffreg {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("diffreg_cli_" + name);
  fs::remove_all(p);
  return p;
}

struct RunResult {
  int status;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::string meta_value(const fs::path& dir, const std::string& key) {
  for (const auto& l : lines(slurp(dir / "run.meta")))
    if (l.rfind(key + "=", 0) == 0) return l.substr(key.size() + 1);
  return {};
}

std::vector<double> csv_column(const fs::path& file, const std::string& name) {
  const auto ls = lines(slurp(file));
  std::vector<std::string> header;
  {
    std::istringstream h(ls.at(0));
    for (std::string c; std::getline(h, c, ',');) header.push_back(c);
  }
  const auto col = std::find(header.begin(), header.end(), name) - header.begin();
  std::vector<double> out;
  for (std::size_t r = 1; r < ls.size(); ++r) {
    std::istringstream row(ls[r]);
    std::string c;
    for (long k = 0; k <= col; ++k) std::getline(row, c, ',');
    out.push_back(std::stod(c));
  }
  return out;
}

const std::vector<std::string> kOutputs{"velocity.dvf", "deformed_template.dvf", "residual.dvf",
                                        "det_grad.dvf", "convergence.csv", "cost_model.txt"};

TEST(Cli, SyntheticRunWritesOutputs) {
  const auto dir = scratch("synthetic16");
  const auto r = run_cli({"--synthetic", "--n", "16", "--beta", "1e-2", "--gtol", "1e-2", "--out",
                          dir.string()});
  EXPECT_EQ(r.status, cli::kConverged) << r.err;
  for (const auto& f : kOutputs) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_TRUE(fs::exists(dir / "run.meta"));
  const auto header = lines(slurp(dir / "convergence.csv")).at(0);
  EXPECT_EQ(header.rfind("iter,J,misfit,reg,rel_grad,pcg_iters,step_length,cum_matvecs", 0), 0u);
  EXPECT_LE(csv_column(dir / "convergence.csv", "rel_grad").back(), 1e-2);
  // --nt omitted: default 4, echoed in the log header and metadata.
  EXPECT_NE(r.out.find("n_t=4"), std::string::npos);
  EXPECT_EQ(meta_value(dir, "nt"), "4");
  const auto v = to_vector_field(read_volume(dir / "velocity.dvf"));
  EXPECT_EQ(v.grid(), Grid(16));
  EXPECT_NE(slurp(dir / "cost_model.txt").find("accounting_holds=true"), std::string::npos);
}

TEST(Cli, IdenticalInputFilesConvergeAtIterationZero) {
  const auto dir = scratch("identical");
  fs::create_directories(dir);
  const Grid g(16);
  write_volume(dir / "a.dvf", to_volume(synthetic_template(g)));
  const auto r = run_cli({"--template", (dir / "a.dvf").string(), "--reference",
                          (dir / "a.dvf").string(), "--pad", "0", "0", "0", "--out",
                          (dir / "out").string()});
  EXPECT_EQ(r.status, cli::kConverged) << r.err;
  EXPECT_EQ(meta_value(dir / "out", "newton_iterations"), "0");
  const auto v = to_vector_field(read_volume(dir / "out" / "velocity.dvf"));
  for (int c = 0; c < 3; ++c)
    for (double x : v[c].values()) EXPECT_EQ(x, 0.0);
}

TEST(Cli, FileInputIsPaddedAndRecorded) {
  const auto dir = scratch("padded");
  fs::create_directories(dir);
  const Grid g(16);
  const auto syn = make_synthetic(g, false, 4);
  write_volume(dir / "t.dvf", to_volume(syn.problem.template_image));
  write_volume(dir / "r.dvf", to_volume(syn.problem.reference));
  const auto r = run_cli({"--template", (dir / "t.dvf").string(), "--reference",
                          (dir / "r.dvf").string(), "--max-newton", "2", "--out",
                          (dir / "out").string()});
  EXPECT_NE(r.status, cli::kInputError) << r.err;
  EXPECT_EQ(meta_value(dir / "out", "pad"), "2,2,2");
  EXPECT_EQ(meta_value(dir / "out", "dims"), "20,20,20");
}

TEST(Cli, IncompressibleRun) {
  const auto dir = scratch("incompressible");
  const auto r = run_cli({"--synthetic", "--n", "16", "--incompressible", "--out", dir.string()});
  EXPECT_EQ(r.status, cli::kConverged) << r.err;
  for (double d : csv_column(dir / "convergence.csv", "rel_div")) EXPECT_LE(d, 1e-10);
  EXPECT_LT(std::stod(meta_value(dir, "max_det_deviation")), 0.05);
}

TEST(Cli, IterationLimitExitsWithTwo) {
  const auto dir = scratch("limit");
  const auto r = run_cli({"--synthetic", "--n", "16", "--beta", "1e-3", "--gtol", "1e-6",
                          "--max-newton", "1", "--out", dir.string()});
  EXPECT_EQ(r.status, cli::kNotConverged) << r.err;
  EXPECT_EQ(meta_value(dir, "termination"), "max_iterations");
}

TEST(Cli, InputErrors) {
  const auto dir = scratch("errors");
  EXPECT_EQ(run_cli({"--synthetic", "--template", "a.dvf", "--reference", "b.dvf"}).status,
            cli::kInputError);
  EXPECT_EQ(run_cli({"--template", "a.dvf"}).status, cli::kInputError);
  EXPECT_EQ(run_cli({}).status, cli::kInputError);
  EXPECT_EQ(run_cli({"--synthetic", "--n", "15", "--out", dir.string()}).status,
            cli::kInputError);
  EXPECT_EQ(run_cli({"--synthetic", "--n", "16", "--tasks", "3x1", "--out", dir.string()}).status,
            cli::kInputError);
  EXPECT_EQ(run_cli({"--synthetic", "--n", "16", "--tasks", "2by2"}).status, cli::kInputError);
  EXPECT_EQ(run_cli({"--synthetic", "--beta", "-1"}).status, cli::kInputError);
  EXPECT_EQ(run_cli({"--synthetic", "--mode", "newton"}).status, cli::kInputError);
  EXPECT_EQ(run_cli({"--synthetic", "--beta", "1e-2", "--beta-schedule", "1e-1,1e-2"}).status,
            cli::kInputError);
  EXPECT_EQ(run_cli({"--synthetic", "--n", "16", "--beta-schedule", "1e-2,1e-1", "--out",
                     dir.string()})
                .status,
            cli::kInputError);

  const auto conflict = run_cli({"--synthetic", "--template", "x.dvf", "--reference", "y.dvf"});
  EXPECT_NE(conflict.err.find("Usage"), std::string::npos);

  fs::create_directories(dir);
  EXPECT_EQ(run_cli({"--template", (dir / "missing.dvf").string(), "--reference",
                     (dir / "missing.dvf").string(), "--out", dir.string()})
                .status,
            cli::kInputError);
  {
    std::ofstream bad(dir / "bad.dvf", std::ios::binary);
    bad << "not a volume";
  }
  write_volume(dir / "a.dvf", to_volume(ScalarField(Grid(8))));
  EXPECT_EQ(run_cli({"--template", (dir / "bad.dvf").string(), "--reference",
                     (dir / "a.dvf").string(), "--out", dir.string()})
                .status,
            cli::kInputError);
  write_volume(dir / "b.dvf", to_volume(ScalarField(Grid(16))));
  const auto mismatch = run_cli({"--template", (dir / "a.dvf").string(), "--reference",
                                 (dir / "b.dvf").string(), "--out", dir.string()});
  EXPECT_EQ(mismatch.status, cli::kInputError);
  EXPECT_NE(mismatch.err.find("dimensions"), std::string::npos);
}

TEST(Cli, TaskPartitionDoesNotChangeOutputs) {
  const auto a = scratch("tasks11");
  const auto b = scratch("tasks22");
  ASSERT_EQ(run_cli({"--synthetic", "--n", "16", "--tasks", "1x1", "--out", a.string()}).status,
            cli::kConverged);
  ASSERT_EQ(run_cli({"--synthetic", "--n", "16", "--tasks", "2x2", "--out", b.string()}).status,
            cli::kConverged);
  for (const auto& f : {"velocity.dvf", "deformed_template.dvf", "residual.dvf", "det_grad.dvf",
                        "convergence.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, DeterministicOutputs) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  const std::vector<std::string> base{"--synthetic", "--n", "16", "--beta", "1e-2", "--out"};
  auto args_a = base, args_b = base;
  args_a.push_back(a.string());
  args_b.push_back(b.string());
  ASSERT_EQ(run_cli(args_a).status, cli::kConverged);
  ASSERT_EQ(run_cli(args_b).status, cli::kConverged);
  for (const auto& f : kOutputs) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_EQ(slurp(a / "run.meta"), slurp(b / "run.meta"));
}

TEST(Cli, BetaScheduleRunsContinuation) {
  const auto dir = scratch("schedule");
  const auto r = run_cli({"--synthetic", "--n", "16", "--beta-schedule", "1e-1,1e-2", "--out",
                          dir.string()});
  EXPECT_EQ(r.status, cli::kConverged) << r.err;
  const auto betas = csv_column(dir / "convergence.csv", "beta");
  EXPECT_EQ(betas.front(), 1e-1);
  EXPECT_EQ(betas.back(), 1e-2);
  const auto matvecs = csv_column(dir / "convergence.csv", "cum_matvecs");
  for (std::size_t k = 1; k < matvecs.size(); ++k) EXPECT_GE(matvecs[k], matvecs[k - 1]);
}

TEST(Cli, HelpExitsCleanly) {
  const auto r = run_cli({"--help"});
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("--synthetic"), std::string::npos);
}

}  // namespace
}  // namespace diffreg
