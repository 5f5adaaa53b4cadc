#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lbm/bench.hpp"
#include "lbm/cli.hpp"
#include "lbm/dataio.hpp"
#include "lbm/error.hpp"
#include "lbm/evalstats.hpp"

namespace lbm {

namespace {

namespace fs = std::filesystem;

// Command-phase errors that should exit with code 2.
struct UsageError : Error {
  using Error::Error;
};

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

struct SynthArgs {
  std::string kind = "nonlinear_manifold";
  size_t voxels = 512;
  size_t genes = 200;
  size_t r = 2;
  double noise_sd = 0.0;
  size_t targets = 0;
  uint64_t seed = 0;
  std::string out = "out/synth";
  std::string format = "csv";
};

int run_synth(const SynthArgs& args) {
  SynthSpec spec;
  if (args.kind == "linear_rank_r")
    spec.kind = SynthKind::linear_rank_r;
  else if (args.kind == "nonlinear_manifold")
    spec.kind = SynthKind::nonlinear_manifold;
  else
    throw UsageError("unknown synth kind: " + args.kind);
  if (args.voxels < 2) throw UsageError("need at least 2 voxels");
  if (args.r == 0) throw UsageError("intrinsic dim must be >= 1");
  if (args.r >= args.genes)
    throw UsageError("intrinsic dim must be smaller than the gene count");
  if (args.format != "csv" && args.format != "lbm")
    throw UsageError("format must be csv or lbm");
  spec.n_voxels = args.voxels;
  spec.n_genes = args.genes;
  spec.intrinsic_dim = args.r;
  spec.noise_sd = args.noise_sd;
  spec.n_targets = args.targets;
  spec.seed = args.seed;

  const SynthResult res = synth_dataset(spec);
  fs::create_directories(args.out);
  const bool csv = args.format == "csv";
  const std::string ext = csv ? ".csv" : ".lbm";
  const MatrixFormat mf = csv ? MatrixFormat::csv : MatrixFormat::lbm_binary;
  const fs::path out(args.out);
  save_matrix(res.dataset.values, (out / ("expr" + ext)).string(), mf);
  save_coords(res.dataset.coords, (out / "coords.csv").string());
  std::vector<std::string> target_files;
  for (size_t i = 0; i < res.targets.size(); ++i) {
    const std::string name = "target_" + std::to_string(i) + ".csv";
    save_target(res.targets[i], (out / name).string());
    target_files.push_back(name);
  }

  std::ostringstream manifest;
  manifest << "lbm synth manifest\n";
  manifest << "kind " << args.kind << "\n";
  manifest << "voxels " << spec.n_voxels << "\n";
  manifest << "genes " << spec.n_genes << "\n";
  manifest << "intrinsic_dim " << spec.intrinsic_dim << "\n";
  manifest << "noise_sd " << g17(spec.noise_sd) << "\n";
  manifest << "seed " << spec.seed << "\n";
  manifest << "matrix expr" << ext << "\n";
  manifest << "coords coords.csv\n";
  for (const std::string& t : target_files) manifest << "target " << t << "\n";
  write_text((out / "manifest.txt").string(), manifest.str());
  std::cout << manifest.str();
  return 0;
}

struct BenchArgs {
  std::string config;
  std::string out_override;
};

int run_bench_cmd(const BenchArgs& args) {
  BenchConfig cfg;
  try {
    cfg = parse_bench_config(args.config);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (!args.out_override.empty()) cfg.out_dir = args.out_override;
  const BenchResult result = run_bench(cfg);
  for (const std::string& f : result.failures) std::cerr << "cell failed: " << f << "\n";
  if (!result.cells.empty() && result.failures.size() == result.cells.size()) {
    std::cerr << "error: all " << result.cells.size() << " cells failed\n";
    return 1;
  }
  return 0;
}

struct ExportArgs {
  std::string kind;
  std::string latent, target, coords, matrix;
  std::string format = "csv";
  size_t component = 0;
  size_t bins = 64;
  std::string out;
};

Matrix load_by_format(const std::string& path, const std::string& format) {
  if (format == "csv") return load_matrix(path, MatrixFormat::csv);
  if (format == "lbm") return load_matrix(path, MatrixFormat::lbm_binary);
  throw UsageError("format must be csv or lbm");
}

int run_export(const ExportArgs& args) {
  if (args.out.empty()) throw UsageError("--out is required");
  if (args.kind == "density") {
    if (args.latent.empty()) throw UsageError("density export needs --latent");
    if (args.bins == 0) throw UsageError("--bins must be >= 1");
    const Matrix z = load_by_format(args.latent, args.format);
    if (z.cols() != 2) throw InvalidInput("density export needs a 2-column latent");
    double lo[2], hi[2];
    for (size_t d = 0; d < 2; ++d) {
      lo[d] = z(0, d);
      hi[d] = z(0, d);
      for (size_t i = 0; i < z.rows(); ++i) {
        lo[d] = std::min(lo[d], z(i, d));
        hi[d] = std::max(hi[d], z(i, d));
      }
    }
    std::vector<size_t> counts(args.bins * args.bins, 0);
    auto bin_of = [&](double v, size_t d) {
      const double width = (hi[d] - lo[d]) / static_cast<double>(args.bins);
      if (width <= 0.0) return size_t{0};
      return std::min(args.bins - 1,
                      static_cast<size_t>(std::floor((v - lo[d]) / width)));
    };
    for (size_t i = 0; i < z.rows(); ++i)
      ++counts[bin_of(z(i, 0), 0) * args.bins + bin_of(z(i, 1), 1)];
    std::ostringstream csv;
    csv << "x_bin,y_bin,count\n";
    for (size_t x = 0; x < args.bins; ++x)
      for (size_t y = 0; y < args.bins; ++y)
        csv << x << "," << y << "," << counts[x * args.bins + y] << "\n";
    write_text(args.out, csv.str());
    return 0;
  }
  if (args.kind == "annotate") {
    if (args.latent.empty() || args.target.empty())
      throw UsageError("annotate export needs --latent and --target");
    const Matrix z = load_by_format(args.latent, args.format);
    if (z.cols() != 2) throw InvalidInput("annotate export needs a 2-column latent");
    const TargetMap t = load_target(args.target);
    if (t.values.size() != z.rows())
      throw InvalidInput("annotate export: target length does not match latent rows");
    std::ostringstream csv;
    csv << "dim1,dim2," << (t.name.empty() ? "value" : t.name) << "\n";
    for (size_t i = 0; i < z.rows(); ++i)
      csv << g17(z(i, 0)) << "," << g17(z(i, 1)) << "," << g17(t.values[i]) << "\n";
    write_text(args.out, csv.str());
    return 0;
  }
  if (args.kind == "volume") {
    if (args.latent.empty() || args.coords.empty())
      throw UsageError("volume export needs --latent and --coords");
    const Matrix z = load_by_format(args.latent, args.format);
    const auto coords = load_coords(args.coords);
    if (args.component >= z.cols())
      throw InvalidInput("volume export: component out of range");
    std::vector<double> column(z.rows());
    for (size_t i = 0; i < z.rows(); ++i) column[i] = z(i, args.component);
    export_volume(coords, column, args.out);
    return 0;
  }
  if (args.kind == "histogram") {
    if (args.matrix.empty()) throw UsageError("histogram export needs --matrix");
    if (args.bins == 0) throw UsageError("--bins must be >= 1");
    const Matrix x = load_by_format(args.matrix, args.format);
    const Histogram h = histogram(x, args.bins);
    std::ostringstream csv;
    csv << "bin_lo,bin_hi,count\n";
    for (size_t b = 0; b < h.counts.size(); ++b)
      csv << g17(h.bin_edges[b]) << "," << g17(h.bin_edges[b + 1]) << "," << h.counts[b]
          << "\n";
    write_text(args.out, csv.str());
    return 0;
  }
  throw UsageError("unknown export kind: " + args.kind);
}

struct StatsArgs {
  std::string cells_dir;
  std::string metric = "rmse";
  std::string out = "out/stats";
};

int run_stats(const StatsArgs& args) {
  if (args.metric != "rmse" && args.metric != "r2")
    throw UsageError("metric must be rmse or r2");
  if (!fs::is_directory(args.cells_dir))
    throw UsageError("not a directory: " + args.cells_dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(args.cells_dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no cell json files in " + args.cells_dir);

  std::vector<std::string> names;
  std::vector<std::vector<double>> groups;
  for (const std::string& file : files) {
    std::ifstream in(file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw MalformedFile("cannot parse " + file + ": " + e.what());
    }
    const std::string method = j.at("method").get<std::string>();
    std::vector<double> vals;
    if (args.metric == "rmse") {
      if (j.contains("test_rmse") && !j["test_rmse"].is_null())
        vals.push_back(j["test_rmse"].get<double>());
    } else if (j.contains("per_target")) {
      for (const auto& t : j["per_target"]) vals.push_back(t.at("test_r2").get<double>());
    }
    if (vals.empty()) continue;
    const auto it = std::find(names.begin(), names.end(), method);
    if (it == names.end()) {
      names.push_back(method);
      groups.push_back(std::move(vals));
    } else {
      auto& g = groups[static_cast<size_t>(it - names.begin())];
      g.insert(g.end(), vals.begin(), vals.end());
    }
  }
  size_t usable = 0;
  for (const auto& g : groups)
    if (g.size() >= 2) ++usable;
  if (names.size() < 2 || usable < names.size())
    throw UsageError("need >= 2 groups with >= 2 cells each; got " +
                     std::to_string(names.size()) + " group(s) for metric " + args.metric);

  const StatsReport report = make_stats_report(names, groups);
  fs::create_directories(args.out);

  nlohmann::ordered_json j;
  j["metric"] = args.metric;
  j["groups"] = report.groups;
  j["f"] = report.f_stat;
  j["p"] = report.p_value;
  nlohmann::ordered_json pairwise = nlohmann::ordered_json::array();
  std::ostringstream csv;
  csv << "a,b,mean_diff,q,p_adj\n";
  for (const TukeyRow& row : report.pairwise) {
    nlohmann::ordered_json rj;
    rj["a"] = report.groups[row.a];
    rj["b"] = report.groups[row.b];
    rj["mean_diff"] = row.mean_diff;
    rj["q"] = row.q;
    rj["p_adj"] = row.p_adj;
    pairwise.push_back(rj);
    csv << report.groups[row.a] << "," << report.groups[row.b] << ","
        << g17(row.mean_diff) << "," << g17(row.q) << "," << g17(row.p_adj) << "\n";
  }
  j["pairwise"] = pairwise;
  write_text((fs::path(args.out) / "stats.json").string(), j.dump(2) + "\n");
  write_text((fs::path(args.out) / "stats.csv").string(), csv.str());
  std::cout << "stats: metric " << args.metric << " F=" << report.f_stat
            << " p=" << report.p_value << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"voxel transcriptomics representation benchmark"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--kind", synth_args.kind, "linear_rank_r | nonlinear_manifold");
  synth->add_option("--voxels", synth_args.voxels, "number of voxels");
  synth->add_option("--genes", synth_args.genes, "number of genes");
  synth->add_option("--r", synth_args.r, "intrinsic latent dimension");
  synth->add_option("--noise", synth_args.noise_sd, "noise standard deviation");
  synth->add_option("--targets", synth_args.targets, "number of target maps");
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_option("--out", synth_args.out, "output directory");
  synth->add_option("--format", synth_args.format, "matrix file format: csv | lbm");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "run the representation benchmark");
  bench->add_option("--config", bench_args.config, "config file path")->required();
  bench->add_option("--out", bench_args.out_override, "override the output directory");

  ExportArgs export_args;
  CLI::App* exp = app.add_subcommand("export", "export plot-ready data files");
  exp->add_option("--kind", export_args.kind, "density | annotate | volume | histogram")
      ->required();
  exp->add_option("--latent", export_args.latent, "latent matrix file");
  exp->add_option("--target", export_args.target, "target map file");
  exp->add_option("--coords", export_args.coords, "coords csv file");
  exp->add_option("--matrix", export_args.matrix, "matrix file");
  exp->add_option("--format", export_args.format, "matrix file format: csv | lbm");
  exp->add_option("--component", export_args.component, "latent column for volume export");
  exp->add_option("--bins", export_args.bins, "bin count");
  exp->add_option("--out", export_args.out, "output file");

  StatsArgs stats_args;
  CLI::App* stats = app.add_subcommand("stats", "ANOVA + Tukey over benchmark cells");
  stats->add_option("--cells", stats_args.cells_dir, "cells directory")->required();
  stats->add_option("--metric", stats_args.metric, "rmse | r2");
  stats->add_option("--out", stats_args.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (bench->parsed()) return run_bench_cmd(bench_args);
    if (exp->parsed()) return run_export(export_args);
    if (stats->parsed()) return run_stats(stats_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace lbm
