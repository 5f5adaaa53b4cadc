#include "lbm/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include "lbm/error.hpp"
#include "lbm/rng.hpp"

namespace lbm {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0';
}

void write_u64_le(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

Matrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> data;
  size_t cols = 0;
  size_t data_row = 0;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto toks = split_csv_line(line);
    if (first) {
      first = false;
      // A single leading header row is allowed: skip it when any token
      // fails to parse as a number.
      bool numeric = true;
      double tmp;
      for (const auto& t : toks)
        if (!parse_double(t, tmp)) {
          numeric = false;
          break;
        }
      if (!numeric) continue;
    }
    if (cols == 0) cols = toks.size();
    if (toks.size() != cols)
      throw MalformedFile(path + ": row " + std::to_string(data_row + 1) + " has " +
                          std::to_string(toks.size()) + " columns, expected " +
                          std::to_string(cols));
    for (size_t c = 0; c < toks.size(); ++c) {
      double v;
      if (!parse_double(toks[c], v))
        throw MalformedFile(path + ": unparseable value at row " +
                            std::to_string(data_row + 1) + ", col " + std::to_string(c + 1));
      if (!std::isfinite(v))
        throw NonFiniteValue(path + ": non-finite value at row " +
                             std::to_string(data_row + 1) + ", col " + std::to_string(c + 1));
      data.push_back(v);
    }
    ++data_row;
  }
  if (data_row == 0) throw MalformedFile(path + ": no data rows");
  return Matrix(data_row, cols, std::move(data));
}

void save_matrix_csv(const Matrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (size_t i = 0; i < m.rows(); ++i) {
    for (size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << fmt_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

constexpr char kMagic[4] = {'L', 'B', 'M', 'X'};
constexpr unsigned char kVersion = 0x01;

Matrix load_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw MalformedFile(path + ": bad magic (not an LBMX file)");
  char version = 0;
  in.read(&version, 1);
  if (!in || static_cast<unsigned char>(version) != kVersion)
    throw MalformedFile(path + ": unsupported LBMX version");
  const uint64_t rows = read_u64_le(in);
  const uint64_t cols = read_u64_le(in);
  if (!in) throw MalformedFile(path + ": truncated header");
  std::vector<double> data(rows * cols);
  for (uint64_t i = 0; i < rows * cols; ++i) {
    const uint64_t bits = read_u64_le(in);
    if (!in)
      throw MalformedFile(path + ": shape mismatch, expected " +
                          std::to_string(rows * cols) + " values");
    double v;
    std::memcpy(&v, &bits, 8);
    if (!std::isfinite(v))
      throw NonFiniteValue(path + ": non-finite value at row " +
                           std::to_string(i / cols + 1) + ", col " +
                           std::to_string(i % cols + 1));
    data[i] = v;
  }
  char extra;
  if (in.read(&extra, 1))
    throw MalformedFile(path + ": trailing bytes after declared shape");
  return Matrix(rows, cols, std::move(data));
}

void save_matrix_binary(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  const char version = static_cast<char>(kVersion);
  out.write(&version, 1);
  write_u64_le(out, m.rows());
  write_u64_le(out, m.cols());
  for (size_t i = 0; i < m.size(); ++i) {
    uint64_t bits;
    std::memcpy(&bits, m.data() + i, 8);
    write_u64_le(out, bits);
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

void ExpressionDataset::validate() const {
  if (coords.size() != n_voxels())
    throw InvalidInput("dataset: coords length != n_voxels");
  if (!gene_ids.empty() && gene_ids.size() != n_genes())
    throw InvalidInput("dataset: gene_ids length != n_genes");
  for (size_t i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (v < 0.0 || v > 1.0)
      throw InvalidInput("dataset: value outside [0,1] at flat index " + std::to_string(i));
  }
  std::set<std::array<int, 3>> uniq(coords.begin(), coords.end());
  if (uniq.size() != coords.size())
    throw InvalidInput("dataset: duplicate voxel coordinates");
}

Matrix load_matrix(const std::string& path, MatrixFormat format) {
  return format == MatrixFormat::csv ? load_matrix_csv(path) : load_matrix_binary(path);
}

void save_matrix(const Matrix& m, const std::string& path, MatrixFormat format) {
  if (format == MatrixFormat::csv)
    save_matrix_csv(m, path);
  else
    save_matrix_binary(m, path);
}

std::vector<std::array<int, 3>> load_coords(const std::string& path) {
  const Matrix m = load_matrix_csv(path);
  if (m.cols() != 3) throw MalformedFile(path + ": coords need exactly 3 columns (i,j,k)");
  std::vector<std::array<int, 3>> coords(m.rows());
  for (size_t i = 0; i < m.rows(); ++i)
    for (size_t j = 0; j < 3; ++j) {
      const double v = m(i, j);
      if (v != std::floor(v))
        throw MalformedFile(path + ": non-integer coordinate at row " + std::to_string(i + 1));
      coords[i][j] = static_cast<int>(v);
    }
  return coords;
}

void save_coords(const std::vector<std::array<int, 3>>& coords, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "i,j,k\n";
  for (const auto& c : coords) out << c[0] << ',' << c[1] << ',' << c[2] << '\n';
  if (!out) throw IoError("write failed: " + path);
}

TargetMap load_target(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  TargetMap t;
  t.name = std::filesystem::path(path).stem().string();
  std::string line;
  bool first = true;
  size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto toks = split_csv_line(line);
    if (toks.size() != 1)
      throw MalformedFile(path + ": target map needs exactly one column");
    double v;
    if (!parse_double(toks[0], v)) {
      if (first) {
        first = false;
        t.name = toks[0];  // header row carries the target name
        continue;
      }
      throw MalformedFile(path + ": unparseable value at row " + std::to_string(row + 1));
    }
    first = false;
    if (!std::isfinite(v))
      throw NonFiniteValue(path + ": non-finite target value at row " + std::to_string(row + 1));
    t.values.push_back(v);
    ++row;
  }
  if (t.values.empty()) throw MalformedFile(path + ": no target values");
  return t;
}

void save_target(const TargetMap& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << t.name << '\n';
  for (const double v : t.values) out << fmt_double(v) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

Matrix clamp_percentiles(const Matrix& x, double lo_pct, double hi_pct) {
  if (!(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 100.0))
    throw InvalidInput("clamp_percentiles: need 0 <= lo_pct < hi_pct <= 100");
  if (x.size() == 0) throw InvalidInput("clamp_percentiles: empty matrix");
  if (!x.all_finite()) throw InvalidInput("clamp_percentiles: non-finite input");

  std::vector<double> sorted(x.values());
  std::sort(sorted.begin(), sorted.end());
  const auto percentile = [&sorted](double pct) {
    // multiply before dividing so integral rank positions come out exact
    const double pos = pct * static_cast<double>(sorted.size() - 1) / 100.0;
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  };
  const double q_lo = percentile(lo_pct);
  const double q_hi = percentile(hi_pct);

  Matrix out = x;
  for (size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::min(std::max(out.data()[i], q_lo), q_hi);
  return out;
}

SplitIndex split(size_t n, uint64_t seed, double train_fraction) {
  if (n < 5) throw InvalidInput("split: need at least 5 rows");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidInput("split: train_fraction must be in (0,1)");
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  size_t n_train = static_cast<size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::min(std::max<size_t>(n_train, 1), n - 1);
  SplitIndex s;
  s.seed = seed;
  s.train_rows.assign(perm.begin(), perm.begin() + n_train);
  s.test_rows.assign(perm.begin() + n_train, perm.end());
  std::sort(s.train_rows.begin(), s.train_rows.end());
  std::sort(s.test_rows.begin(), s.test_rows.end());
  return s;
}

namespace {

// First n lattice points by distance from the origin, shifted to start at 0.
std::vector<std::array<int, 3>> blob_coords(size_t n) {
  const double radius = std::cbrt(3.0 * static_cast<double>(n) / (4.0 * 3.14159265)) + 2.0;
  const int r = static_cast<int>(std::ceil(radius));
  std::vector<std::array<int, 3>> pts;
  pts.reserve(static_cast<size_t>((2 * r + 1) * (2 * r + 1) * (2 * r + 1)));
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j)
      for (int k = -r; k <= r; ++k) pts.push_back({i, j, k});
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    const long ra = long(a[0]) * a[0] + long(a[1]) * a[1] + long(a[2]) * a[2];
    const long rb = long(b[0]) * b[0] + long(b[1]) * b[1] + long(b[2]) * b[2];
    if (ra != rb) return ra < rb;
    return a < b;
  });
  pts.resize(n);
  std::array<int, 3> mn = pts[0];
  for (const auto& p : pts)
    for (int d = 0; d < 3; ++d) mn[d] = std::min(mn[d], p[d]);
  for (auto& p : pts)
    for (int d = 0; d < 3; ++d) p[d] -= mn[d];
  return pts;
}

// Fixed smooth expansion of the latent: coordinates, sines, squares and
// pairwise products, each scaled to roughly unit variance under N(0,1).
Matrix expand_latent(const Matrix& latent) {
  const size_t n = latent.rows();
  const size_t r = latent.cols();
  const size_t m = r + r + r + r * (r - 1) / 2;
  Matrix phi(n, m);
  for (size_t i = 0; i < n; ++i) {
    size_t c = 0;
    for (size_t a = 0; a < r; ++a) phi(i, c++) = latent(i, a);
    for (size_t a = 0; a < r; ++a) phi(i, c++) = std::sin(2.0 * latent(i, a)) / std::sqrt(0.5);
    for (size_t a = 0; a < r; ++a)
      phi(i, c++) = (latent(i, a) * latent(i, a) - 1.0) / std::sqrt(2.0);
    for (size_t a = 0; a < r; ++a)
      for (size_t b = a + 1; b < r; ++b) phi(i, c++) = latent(i, a) * latent(i, b);
  }
  return phi;
}

}  // namespace

SynthResult synth_dataset(const SynthSpec& spec) {
  if (spec.intrinsic_dim >= spec.n_genes)
    throw InvalidInput("synth_dataset: intrinsic_dim must be < n_genes");
  if (spec.intrinsic_dim == 0) throw InvalidInput("synth_dataset: intrinsic_dim must be >= 1");
  if (spec.noise_sd < 0.0) throw InvalidInput("synth_dataset: noise_sd must be >= 0");
  if (spec.n_voxels == 0) throw InvalidInput("synth_dataset: n_voxels must be >= 1");

  Rng latent_rng(mix_seed(spec.seed, "latent"));
  Rng map_rng(mix_seed(spec.seed, "map"));
  Rng noise_rng(mix_seed(spec.seed, "noise"));
  Rng target_rng(mix_seed(spec.seed, "targets"));

  SynthResult out;
  out.latent = gaussian_matrix(spec.n_voxels, spec.intrinsic_dim, latent_rng);

  Matrix features;
  if (spec.kind == SynthKind::linear_rank_r)
    features = out.latent;
  else
    features = expand_latent(out.latent);

  const Matrix map = gaussian_matrix(features.cols(), spec.n_genes, map_rng,
                                     1.0 / std::sqrt(static_cast<double>(features.cols())));
  Matrix pre = matmul(features, map);
  if (spec.noise_sd > 0.0)
    for (size_t i = 0; i < pre.size(); ++i) pre.data()[i] += spec.noise_sd * noise_rng.normal();
  for (size_t i = 0; i < pre.size(); ++i) pre.data()[i] = sigmoid(pre.data()[i]);

  out.dataset.values = std::move(pre);
  out.dataset.coords = blob_coords(spec.n_voxels);
  out.dataset.resolution = "synthetic";
  out.dataset.gene_ids.resize(spec.n_genes);
  for (size_t g = 0; g < spec.n_genes; ++g)
    out.dataset.gene_ids[g] = "g" + std::to_string(g);

  // Companion targets: sigmoid of a random linear blend of smooth latent
  // features, so a faithful 2D chart of the manifold predicts them well.
  const size_t r = spec.intrinsic_dim;
  for (size_t t = 0; t < spec.n_targets; ++t) {
    std::vector<double> w(3 * r);
    for (auto& v : w) v = target_rng.normal();
    TargetMap tm;
    tm.name = "synth_t" + std::to_string(t);
    tm.values.resize(spec.n_voxels);
    for (size_t i = 0; i < spec.n_voxels; ++i) {
      double z = 0.0;
      for (size_t a = 0; a < r; ++a) {
        z += w[3 * a] * out.latent(i, a);
        z += w[3 * a + 1] * std::sin(out.latent(i, a));
        z += w[3 * a + 2] * std::cos(out.latent(i, a));
      }
      tm.values[i] = sigmoid(z / std::sqrt(static_cast<double>(3 * r)));
    }
    out.targets.push_back(std::move(tm));
  }

  out.dataset.validate();
  return out;
}

void export_volume(const std::vector<std::array<int, 3>>& coords,
                   const std::vector<double>& values, const std::string& path) {
  if (coords.size() != values.size())
    throw InvalidInput("export_volume: values length != n_voxels");
  if (coords.empty()) throw InvalidInput("export_volume: no voxels");

  std::array<int, 3> mn = coords[0], mx = coords[0];
  for (const auto& c : coords)
    for (int d = 0; d < 3; ++d) {
      mn[d] = std::min(mn[d], c[d]);
      mx[d] = std::max(mx[d], c[d]);
    }
  const size_t nx = static_cast<size_t>(mx[0] - mn[0] + 1);
  const size_t ny = static_cast<size_t>(mx[1] - mn[1] + 1);
  const size_t nz = static_cast<size_t>(mx[2] - mn[2] + 1);

  std::vector<double> grid(nx * ny * nz, -1.0);
  for (size_t v = 0; v < coords.size(); ++v) {
    const size_t x = static_cast<size_t>(coords[v][0] - mn[0]);
    const size_t y = static_cast<size_t>(coords[v][1] - mn[1]);
    const size_t z = static_cast<size_t>(coords[v][2] - mn[2]);
    grid[x + nx * (y + ny * z)] = values[v];
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "LBVOL " << nx << ' ' << ny << ' ' << nz << " fill=-1\n";
  for (size_t z = 0; z < nz; ++z)
    for (size_t y = 0; y < ny; ++y) {
      for (size_t x = 0; x < nx; ++x) {
        if (x) out << ' ';
        out << fmt_double(grid[x + nx * (y + ny * z)]);
      }
      out << '\n';
    }
  if (!out) throw IoError("write failed: " + path);
}

Volume import_volume(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw MalformedFile(path + ": empty file");
  std::istringstream hs(header);
  std::string magic, fill_tok;
  Volume v;
  if (!(hs >> magic >> v.nx >> v.ny >> v.nz >> fill_tok) || magic != "LBVOL")
    throw MalformedFile(path + ": bad LBVOL header");
  if (fill_tok.rfind("fill=", 0) != 0)
    throw MalformedFile(path + ": missing fill= in header");
  v.fill = std::stod(fill_tok.substr(5));
  const size_t total = v.nx * v.ny * v.nz;
  v.values.resize(total);
  for (size_t i = 0; i < total; ++i)
    if (!(in >> v.values[i]))
      throw MalformedFile(path + ": expected " + std::to_string(total) + " values");
  return v;
}

Histogram histogram(const Matrix& x, size_t n_bins) {
  if (n_bins < 1) throw InvalidInput("histogram: need n_bins >= 1");
  if (x.size() == 0) throw InvalidInput("histogram: empty matrix");
  double mn = x.data()[0], mx = x.data()[0];
  for (size_t i = 0; i < x.size(); ++i) {
    mn = std::min(mn, x.data()[i]);
    mx = std::max(mx, x.data()[i]);
  }
  Histogram h;
  h.bin_edges.resize(n_bins + 1);
  const double width = mx - mn;
  for (size_t b = 0; b <= n_bins; ++b)
    h.bin_edges[b] = mn + width * static_cast<double>(b) / static_cast<double>(n_bins);
  h.counts.assign(n_bins, 0);
  for (size_t i = 0; i < x.size(); ++i) {
    size_t idx = 0;
    if (width > 0.0) {
      idx = static_cast<size_t>((x.data()[i] - mn) / width * static_cast<double>(n_bins));
      idx = std::min(idx, n_bins - 1);  // max lands in the last bin
    }
    ++h.counts[idx];
  }
  return h;
}

}  // namespace lbm
