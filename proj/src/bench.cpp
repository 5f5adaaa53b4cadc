#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "lbm/bench.hpp"
#include "lbm/boosting.hpp"
#include "lbm/error.hpp"
#include "lbm/rng.hpp"

namespace lbm {

namespace {

using Json = nlohmann::ordered_json;
using IniMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Flat key-value format: `key = value`, `[section]` headers, `#` comments.
IniMap parse_ini(const std::string& text) {
  IniMap out;
  std::string section;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw MalformedFile("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(t.substr(1, t.size() - 2));
      out[section];
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw MalformedFile("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw MalformedFile("config line " + std::to_string(lineno) + ": empty key");
    if (!out[section].emplace(key, value).second)
      throw MalformedFile("config line " + std::to_string(lineno) + ": duplicate key " + key);
  }
  return out;
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw MalformedFile("config: " + key + " is not a number: " + value);
  }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return static_cast<uint64_t>(v);
  } catch (const std::exception&) {
    throw MalformedFile("config: " + key + " is not a nonnegative integer: " + value);
  }
}

size_t parse_size(const std::string& key, const std::string& value) {
  return static_cast<size_t>(parse_u64(key, value));
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw MalformedFile("config: " + key + " must be 0/1/true/false");
}

void check_keys(const IniMap& ini, const std::string& section,
                std::initializer_list<const char*> allowed) {
  const auto it = ini.find(section);
  if (it == ini.end()) return;
  for (const auto& [key, value] : it->second) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok)
      throw MalformedFile("config: unknown key '" + key + "' in [" +
                          (section.empty() ? "top level" : section) + "]");
  }
}

const std::string* find(const IniMap& ini, const std::string& section,
                        const std::string& key) {
  const auto sec = ini.find(section);
  if (sec == ini.end()) return nullptr;
  const auto it = sec->second.find(key);
  return it == sec->second.end() ? nullptr : &it->second;
}

void require_exists(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw MalformedFile("config: path does not exist: " + path);
}

}  // namespace

BenchConfig parse_bench_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();

  BenchConfig cfg;
  cfg.echo = buffer.str();
  const IniMap ini = parse_ini(cfg.echo);

  for (const auto& [section, keys] : ini) {
    static const std::vector<std::string> known = {"",     "data", "synth", "kpca", "nmf",
                                                   "tsne", "umap", "ae",    "gbm"};
    if (std::find(known.begin(), known.end(), section) == known.end())
      throw MalformedFile("config: unknown section [" + section + "]");
  }
  check_keys(ini, "", {"out", "seed", "split_seed", "methods", "dims", "workers",
                       "predict_all_dims"});
  check_keys(ini, "data", {"matrix", "coords", "targets", "resolution", "format", "clamp"});
  check_keys(ini, "synth",
             {"kind", "voxels", "genes", "intrinsic_dim", "noise_sd", "targets", "seed"});
  check_keys(ini, "kpca", {"gamma", "ridge"});
  check_keys(ini, "nmf", {"max_iters", "tol"});
  check_keys(ini, "tsne", {"perplexity", "iters", "learning_rate"});
  check_keys(ini, "umap", {"neighbors", "min_dist", "epochs", "spectral_max_n"});
  check_keys(ini, "ae", {"hidden", "lr", "batch_size", "l2_lambda", "max_epochs",
                         "min_epoch", "patience", "folds"});
  check_keys(ini, "gbm", {"folds"});

  if (const auto* v = find(ini, "", "out")) cfg.out_dir = *v;
  if (const auto* v = find(ini, "", "seed")) cfg.seed = parse_u64("seed", *v);
  if (const auto* v = find(ini, "", "split_seed"))
    cfg.split_seed = parse_u64("split_seed", *v);
  if (const auto* v = find(ini, "", "workers")) cfg.workers = parse_size("workers", *v);
  if (const auto* v = find(ini, "", "predict_all_dims"))
    cfg.predict_all_dims = parse_bool("predict_all_dims", *v);

  const auto* methods = find(ini, "", "methods");
  if (!methods) throw MalformedFile("config: missing 'methods'");
  for (const std::string& name : parse_list(*methods))
    cfg.methods.push_back(method_from_name(name));
  if (cfg.methods.empty()) throw MalformedFile("config: 'methods' is empty");

  const auto* dims = find(ini, "", "dims");
  if (!dims) throw MalformedFile("config: missing 'dims'");
  for (const std::string& d : parse_list(*dims)) {
    const size_t dim = parse_size("dims", d);
    static const size_t allowed[] = {2, 4, 8, 16, 32, 64, 128};
    if (std::find(std::begin(allowed), std::end(allowed), dim) == std::end(allowed))
      throw MalformedFile("config: dim must be one of 2,4,8,16,32,64,128");
    cfg.dims.push_back(dim);
  }
  if (cfg.dims.empty()) throw MalformedFile("config: 'dims' is empty");

  if (const auto* v = find(ini, "data", "matrix")) {
    cfg.matrix_path = *v;
    require_exists(cfg.matrix_path);
    if (const auto* fmt = find(ini, "data", "format")) {
      if (*fmt == "csv")
        cfg.matrix_format = MatrixFormat::csv;
      else if (*fmt == "lbm")
        cfg.matrix_format = MatrixFormat::lbm_binary;
      else
        throw MalformedFile("config: format must be csv or lbm");
    }
    if (const auto* c = find(ini, "data", "coords")) {
      cfg.coords_path = *c;
      require_exists(cfg.coords_path);
    }
    if (const auto* t = find(ini, "data", "targets"))
      for (const std::string& p : parse_list(*t)) {
        require_exists(p);
        cfg.target_paths.push_back(p);
      }
    if (const auto* r = find(ini, "data", "resolution")) cfg.resolution = *r;
    if (const auto* c = find(ini, "data", "clamp")) cfg.clamp = parse_bool("clamp", *c);
  } else {
    cfg.synth.seed = cfg.seed;
    if (const auto* v = find(ini, "synth", "kind")) {
      if (*v == "linear_rank_r")
        cfg.synth.kind = SynthKind::linear_rank_r;
      else if (*v == "nonlinear_manifold")
        cfg.synth.kind = SynthKind::nonlinear_manifold;
      else
        throw MalformedFile("config: unknown synth kind: " + *v);
    }
    if (const auto* v = find(ini, "synth", "voxels"))
      cfg.synth.n_voxels = parse_size("voxels", *v);
    if (const auto* v = find(ini, "synth", "genes"))
      cfg.synth.n_genes = parse_size("genes", *v);
    if (const auto* v = find(ini, "synth", "intrinsic_dim"))
      cfg.synth.intrinsic_dim = parse_size("intrinsic_dim", *v);
    if (const auto* v = find(ini, "synth", "noise_sd"))
      cfg.synth.noise_sd = parse_double("noise_sd", *v);
    if (const auto* v = find(ini, "synth", "targets"))
      cfg.synth.n_targets = parse_size("targets", *v);
    if (const auto* v = find(ini, "synth", "seed"))
      cfg.synth.seed = parse_u64("synth seed", *v);
  }

  if (const auto* v = find(ini, "kpca", "gamma"))
    cfg.params.kpca_gamma = parse_double("gamma", *v);
  if (const auto* v = find(ini, "kpca", "ridge"))
    cfg.params.kpca_ridge = parse_double("ridge", *v);
  if (const auto* v = find(ini, "nmf", "max_iters"))
    cfg.params.nmf_max_iters = parse_size("max_iters", *v);
  if (const auto* v = find(ini, "nmf", "tol")) cfg.params.nmf_tol = parse_double("tol", *v);
  if (const auto* v = find(ini, "tsne", "perplexity"))
    cfg.params.tsne_perplexity = parse_double("perplexity", *v);
  if (const auto* v = find(ini, "tsne", "iters"))
    cfg.params.tsne_iters = parse_size("iters", *v);
  if (const auto* v = find(ini, "tsne", "learning_rate"))
    cfg.params.tsne_learning_rate = parse_double("learning_rate", *v);
  if (const auto* v = find(ini, "umap", "neighbors"))
    cfg.params.umap_neighbors = parse_size("neighbors", *v);
  if (const auto* v = find(ini, "umap", "min_dist"))
    cfg.params.umap_min_dist = parse_double("min_dist", *v);
  if (const auto* v = find(ini, "umap", "epochs"))
    cfg.params.umap_epochs = parse_size("epochs", *v);
  if (const auto* v = find(ini, "umap", "spectral_max_n"))
    cfg.params.umap_spectral_max_n = parse_size("spectral_max_n", *v);
  if (const auto* v = find(ini, "ae", "hidden")) {
    cfg.ae_hidden.clear();
    for (const std::string& h : parse_list(*v))
      cfg.ae_hidden.push_back(parse_size("hidden", h));
  }
  if (const auto* v = find(ini, "ae", "lr"))
    cfg.ae_cfg.learning_rate = parse_double("lr", *v);
  if (const auto* v = find(ini, "ae", "batch_size"))
    cfg.ae_cfg.batch_size = parse_size("batch_size", *v);
  if (const auto* v = find(ini, "ae", "l2_lambda"))
    cfg.ae_cfg.l2_lambda = parse_double("l2_lambda", *v);
  if (const auto* v = find(ini, "ae", "max_epochs"))
    cfg.ae_cfg.max_epochs = parse_size("max_epochs", *v);
  if (const auto* v = find(ini, "ae", "min_epoch"))
    cfg.ae_cfg.early_stop_min_epoch = parse_size("min_epoch", *v);
  if (const auto* v = find(ini, "ae", "patience"))
    cfg.ae_cfg.patience = parse_size("patience", *v);
  if (const auto* v = find(ini, "ae", "folds"))
    cfg.ae_cfg.folds = parse_size("folds", *v);
  if (const auto* v = find(ini, "gbm", "folds")) cfg.gbm_folds = parse_size("folds", *v);
  return cfg;
}

namespace {

std::unique_ptr<Embedder> fit_method(Method m, size_t dim, const Matrix& x_train,
                                     const BenchConfig& cfg, uint64_t cell_seed) {
  switch (m) {
    case Method::pca:
      return pca_fit(x_train, dim);
    case Method::kpca:
      return kpca_fit(x_train, dim, cfg.params.kpca_gamma, cfg.params.kpca_ridge);
    case Method::nmf:
      return nmf_fit(x_train, dim, cfg.params.nmf_max_iters, cfg.params.nmf_tol);
    case Method::tsne:
      return tsne_fit(x_train, dim, cfg.params.tsne_perplexity, cell_seed, cfg.params);
    case Method::umap:
      return umap_fit(x_train, dim, cell_seed, cfg.params);
    case Method::ae: {
      AeTrainConfig ae_cfg = cfg.ae_cfg;
      ae_cfg.seed = cell_seed;
      return ae_fit_embedder(x_train, dim, cfg.ae_hidden, ae_cfg);
    }
  }
  throw InvalidInput("fit_method: unknown method");
}

Json cell_to_json(const BenchCell& cell, const std::string& echo) {
  Json j;
  j["method"] = cell.method;
  j["latent_dim"] = cell.latent_dim;
  j["resolution"] = cell.resolution;
  j["seed"] = cell.seed;
  j["recon_status"] = cell.recon_status;
  if (cell.test_rmse)
    j["test_rmse"] = *cell.test_rmse;
  else
    j["test_rmse"] = nullptr;
  Json targets = Json::array();
  for (const TargetScore& t : cell.per_target) {
    Json tj;
    tj["target"] = t.target;
    tj["test_rmse"] = t.test_rmse;
    tj["test_r2"] = t.test_r2;
    targets.push_back(tj);
  }
  j["per_target"] = targets;
  j["wall_time_s"] = cell.wall_time_s;
  j["config_echo"] = echo;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

}  // namespace

BenchResult run_bench(const BenchConfig& cfg) {
  namespace fs = std::filesystem;

  Matrix values;
  std::vector<TargetMap> targets;
  std::string resolution = cfg.resolution;
  if (!cfg.matrix_path.empty()) {
    values = load_matrix(cfg.matrix_path, cfg.matrix_format);
    if (cfg.clamp) values = clamp_percentiles(values);
    for (const std::string& p : cfg.target_paths) targets.push_back(load_target(p));
  } else {
    SynthResult synth = synth_dataset(cfg.synth);
    values = std::move(synth.dataset.values);
    targets = std::move(synth.targets);
    resolution = "synthetic";
  }
  const size_t n = values.rows();
  for (const TargetMap& t : targets)
    if (t.values.size() != n)
      throw InvalidInput("bench: target '" + t.name + "' length does not match voxels");

  const SplitIndex sp = split(n, cfg.split_seed);
  const Matrix x_train = select_rows(values, sp.train_rows);
  const Matrix x_test = select_rows(values, sp.test_rows);

  struct Job {
    Method method;
    size_t dim;
  };
  std::vector<Job> jobs;
  for (Method m : cfg.methods)
    for (size_t d : cfg.dims) jobs.push_back({m, d});

  BenchResult result;
  result.cells.resize(jobs.size());
  std::vector<std::string> failures(jobs.size());

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t j = next.fetch_add(1);
      if (j >= jobs.size()) break;
      const Method m = jobs[j].method;
      const size_t dim = jobs[j].dim;
      BenchCell& cell = result.cells[j];
      cell.method = method_name(m);
      cell.latent_dim = dim;
      cell.resolution = resolution;
      cell.seed = mix_seed(mix_seed(cfg.seed, method_name(m)), dim);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const std::unique_ptr<Embedder> model = fit_method(m, dim, x_train, cfg, cell.seed);
        if (model->can_inverse()) {
          const Matrix recon = inverse(*model, transform(*model, x_test));
          cell.test_rmse = rmse_all(x_test, recon);
          cell.recon_status = "ok";
        } else {
          cell.recon_status = "unsupported: no inverse transform";
        }
        if (!targets.empty() && (dim == 2 || cfg.predict_all_dims)) {
          const Matrix z_tr = transform(*model, x_train);
          const Matrix z_te = transform(*model, x_test);
          const std::vector<GbmConfig> grid = default_grid();
          for (const TargetMap& t : targets) {
            std::vector<double> y_tr(sp.train_rows.size()), y_te(sp.test_rows.size());
            for (size_t i = 0; i < sp.train_rows.size(); ++i)
              y_tr[i] = t.values[sp.train_rows[i]];
            for (size_t i = 0; i < sp.test_rows.size(); ++i)
              y_te[i] = t.values[sp.test_rows[i]];
            const GbmGridResult fit = gbm_grid_search(z_tr, y_tr, grid, cfg.gbm_folds,
                                                      mix_seed(cell.seed, "gbm_" + t.name));
            const std::vector<double> pred = gbm_predict(fit.model, z_te);
            cell.per_target.push_back({t.name, rmse(y_te, pred), r2(y_te, pred)});
          }
        }
      } catch (const std::exception& e) {
        cell.recon_status = std::string("failed: ") + e.what();
        cell.test_rmse.reset();
        cell.per_target.clear();
        failures[j] = cell.method + " dim " + std::to_string(dim) + ": " + e.what();
      }
      cell.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      char line[160];
      std::snprintf(line, sizeof line, "[bench] cell %s dim %zu %s (%.2fs elapsed)\n",
                    cell.method.c_str(), dim,
                    failures[j].empty() ? "done" : "FAILED", cell.wall_time_s);
      std::cout << line << std::flush;
    }
  };

  size_t n_workers = cfg.workers ? cfg.workers
                                 : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min(n_workers, jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::string& f : failures)
    if (!f.empty()) result.failures.push_back(f);

  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "cells");
  write_text((out / "config.txt").string(), cfg.echo);
  for (const BenchCell& cell : result.cells) {
    const std::string name = cell.method + "_d" + std::to_string(cell.latent_dim) + ".json";
    write_text((out / "cells" / name).string(),
               cell_to_json(cell, cfg.echo).dump(2) + "\n");
  }
  write_text((out / "aggregate.csv").string(), aggregate_csv(aggregate(result.cells)));

  // StatsReport: downstream R^2 grouped by method when targets ran,
  // reconstruction RMSE otherwise.
  const bool use_r2 = !targets.empty();
  std::vector<std::string> names;
  std::vector<std::vector<double>> groups;
  for (const BenchCell& cell : result.cells) {
    std::vector<double> vals;
    if (use_r2) {
      for (const TargetScore& t : cell.per_target) vals.push_back(t.test_r2);
    } else if (cell.test_rmse) {
      vals.push_back(*cell.test_rmse);
    }
    if (vals.empty()) continue;
    const auto it = std::find(names.begin(), names.end(), cell.method);
    if (it == names.end()) {
      names.push_back(cell.method);
      groups.push_back(std::move(vals));
    } else {
      auto& g = groups[static_cast<size_t>(it - names.begin())];
      g.insert(g.end(), vals.begin(), vals.end());
    }
  }
  Json stats;
  stats["metric"] = use_r2 ? "r2" : "rmse";
  try {
    const StatsReport report = make_stats_report(names, groups);
    stats["groups"] = report.groups;
    stats["f"] = report.f_stat;
    stats["p"] = report.p_value;
    Json pairwise = Json::array();
    for (const TukeyRow& row : report.pairwise) {
      Json rj;
      rj["a"] = report.groups[row.a];
      rj["b"] = report.groups[row.b];
      rj["mean_diff"] = row.mean_diff;
      rj["q"] = row.q;
      rj["p_adj"] = row.p_adj;
      pairwise.push_back(rj);
    }
    stats["pairwise"] = pairwise;
  } catch (const std::exception& e) {
    stats["skipped"] = e.what();
  }
  stats["config_echo"] = cfg.echo;
  write_text((out / "stats.json").string(), stats.dump(2) + "\n");
  return result;
}

}  // namespace lbm
