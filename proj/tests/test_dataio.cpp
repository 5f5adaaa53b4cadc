#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "lbm/dataio.hpp"
#include "lbm/embedder.hpp"
#include "lbm/error.hpp"
#include "lbm/linalg.hpp"
#include "lbm/matrix.hpp"
#include "lbm/rng.hpp"
#include "testutil.hpp"

using namespace lbm;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// linear-interpolation percentile on a copy, independent of clamp_percentiles
double sort_percentile(std::vector<double> v, double pct) {
  std::sort(v.begin(), v.end());
  const double pos = pct * static_cast<double>(v.size() - 1) / 100.0;
  const size_t lo = static_cast<size_t>(std::floor(pos));
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}  // namespace

TEST_CASE("load_matrix parses plain and headered csv") {
  testutil::TempDir tmp("dataio_csv");
  write_file(tmp.file("id.csv"), "1,0\n0,1\n");
  const Matrix id = load_matrix(tmp.file("id.csv"), MatrixFormat::csv);
  CHECK(id == Matrix::from_rows({{1, 0}, {0, 1}}));

  write_file(tmp.file("hdr.csv"), "g0,g1\n0.25,0.5\n0.75,1.0\n");
  const Matrix m = load_matrix(tmp.file("hdr.csv"), MatrixFormat::csv);
  CHECK(m == Matrix::from_rows({{0.25, 0.5}, {0.75, 1.0}}));
}

TEST_CASE("load_matrix rejects nan, ragged rows and missing files") {
  testutil::TempDir tmp("dataio_bad");
  write_file(tmp.file("nan.csv"), "1,nan\n0,1\n");
  CHECK_THROWS_AS(load_matrix(tmp.file("nan.csv"), MatrixFormat::csv), NonFiniteValue);

  write_file(tmp.file("ragged.csv"), "1,2\n3\n");
  CHECK_THROWS_AS(load_matrix(tmp.file("ragged.csv"), MatrixFormat::csv), MalformedFile);

  CHECK_THROWS_AS(load_matrix(tmp.file("absent.csv"), MatrixFormat::csv), IoError);

  write_file(tmp.file("magic.lbm"), "NOPE....garbage");
  CHECK_THROWS_AS(load_matrix(tmp.file("magic.lbm"), MatrixFormat::lbm_binary), MalformedFile);
}

TEST_CASE("matrix files round-trip") {
  testutil::TempDir tmp("dataio_rt");
  Rng rng(17);
  Matrix m(9, 5);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();

  save_matrix(m, tmp.file("m.lbm"), MatrixFormat::lbm_binary);
  const Matrix back = load_matrix(tmp.file("m.lbm"), MatrixFormat::lbm_binary);
  CHECK(back == m);  // bit-identical

  save_matrix(m, tmp.file("m.csv"), MatrixFormat::csv);
  const Matrix csv_back = load_matrix(tmp.file("m.csv"), MatrixFormat::csv);
  CHECK(csv_back == m);  // %.17g preserves doubles exactly

  // saving the same matrix twice produces identical bytes
  save_matrix(m, tmp.file("m2.lbm"), MatrixFormat::lbm_binary);
  CHECK(read_file(tmp.file("m.lbm")) == read_file(tmp.file("m2.lbm")));
}

TEST_CASE("coords and target files round-trip") {
  testutil::TempDir tmp("dataio_ct");
  const std::vector<std::array<int, 3>> coords = {{0, 1, 2}, {-3, 4, 5}, {6, 0, -1}};
  save_coords(coords, tmp.file("c.csv"));
  CHECK(load_coords(tmp.file("c.csv")) == coords);

  TargetMap t;
  t.name = "density";
  t.values = {0.5, -1.25, 3.75};
  save_target(t, tmp.file("t.csv"));
  const TargetMap back = load_target(tmp.file("t.csv"));
  CHECK(back.name == "density");
  CHECK(back.values == t.values);
}

TEST_CASE("clamp_percentiles leaves constant or interior data unchanged") {
  Matrix constant(3, 4);
  for (size_t i = 0; i < constant.size(); ++i) constant.data()[i] = 0.7;
  CHECK(clamp_percentiles(constant) == constant);

  // entries strictly inside (q_lo, q_hi) stay put
  Rng rng(23);
  Matrix x(20, 25);
  for (size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  const Matrix clamped = clamp_percentiles(x);
  const double q_lo = sort_percentile({x.values().begin(), x.values().end()}, 0.01);
  const double q_hi = sort_percentile({x.values().begin(), x.values().end()}, 99.9);
  for (size_t i = 0; i < x.size(); ++i)
    if (x.values()[i] > q_lo && x.values()[i] < q_hi)
      CHECK(clamped.values()[i] == x.values()[i]);
}

TEST_CASE("clamp_percentiles matches the sort oracle on 10000 uniforms") {
  Rng rng(31);
  Matrix x(100, 100);
  for (size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  const double q_lo = sort_percentile({x.values().begin(), x.values().end()}, 0.01);
  const double q_hi = sort_percentile({x.values().begin(), x.values().end()}, 99.9);

  const Matrix clamped = clamp_percentiles(x);
  size_t n_clamped = 0, oracle_clamped = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double expect = std::min(std::max(x.values()[i], q_lo), q_hi);
    CHECK(clamped.values()[i] == expect);
    if (clamped.values()[i] != x.values()[i]) ++n_clamped;
    if (x.values()[i] < q_lo || x.values()[i] > q_hi) ++oracle_clamped;
  }
  CHECK(n_clamped == oracle_clamped);
  CHECK(n_clamped > 0);
}

TEST_CASE("clamp_percentiles is idempotent when percentile positions are integral") {
  // 10001 entries puts the 0.01th and 99.9th percentiles exactly on sorted
  // ranks 1 and 9990, so a second clamp reproduces the first bit-for-bit.
  Rng rng(37);
  Matrix x(73, 137);
  for (size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const Matrix once = clamp_percentiles(x);
  const Matrix twice = clamp_percentiles(once);
  CHECK(once == twice);
}

TEST_CASE("split produces the 80/20 partition") {
  const SplitIndex s = split(10, 4);
  CHECK(s.train_rows.size() == 8);
  CHECK(s.test_rows.size() == 2);

  const SplitIndex a = split(100, 7), b = split(100, 7);
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.test_rows == b.test_rows);

  std::vector<bool> seen(100, false);
  for (size_t r : a.train_rows) seen[r] = true;
  for (size_t r : a.test_rows) {
    CHECK_FALSE(seen[r]);  // disjoint
    seen[r] = true;
  }
  CHECK(std::count(seen.begin(), seen.end(), true) == 100);

  const SplitIndex c = split(100, 8);
  CHECK(a.train_rows != c.train_rows);  // seed matters

  CHECK_THROWS_AS(split(4, 1), InvalidInput);
}

TEST_CASE("synth linear_rank_r without noise has pre-squash rank r") {
  SynthSpec spec;
  spec.kind = SynthKind::linear_rank_r;
  spec.n_voxels = 60;
  spec.n_genes = 30;
  spec.intrinsic_dim = 2;
  spec.noise_sd = 0.0;
  spec.seed = 5;
  const SynthResult r = synth_dataset(spec);

  Matrix pre(60, 30);  // invert the sigmoid squash
  for (size_t i = 0; i < pre.size(); ++i) {
    const double v = r.dataset.values.values()[i];
    pre.data()[i] = std::log(v / (1.0 - v));
  }
  const SvdResult s = svd(pre);
  CHECK(s.s[2] < 1e-8 * s.s[0]);
  CHECK(s.s[1] > 1e-3 * s.s[0]);  // genuinely 2-dimensional, not less
}

TEST_CASE("synth datasets stay in [0,1], are deterministic and carry distinct coords") {
  for (SynthKind kind : {SynthKind::linear_rank_r, SynthKind::nonlinear_manifold}) {
    SynthSpec spec;
    spec.kind = kind;
    spec.n_voxels = 50;
    spec.n_genes = 12;
    spec.intrinsic_dim = 3;
    spec.noise_sd = 0.05;
    spec.seed = 9;
    spec.n_targets = 2;
    const SynthResult a = synth_dataset(spec);
    for (double v : a.dataset.values.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(a.dataset.coords.size() == 50);
    auto coords = a.dataset.coords;
    std::sort(coords.begin(), coords.end());
    CHECK(std::adjacent_find(coords.begin(), coords.end()) == coords.end());
    REQUIRE(a.targets.size() == 2);
    CHECK(a.targets[0].values.size() == 50);

    const SynthResult b = synth_dataset(spec);
    CHECK(a.dataset.values == b.dataset.values);
    CHECK(a.latent == b.latent);
    CHECK(a.targets[1].values == b.targets[1].values);
  }
}

TEST_CASE("nonlinear manifold leaves PCA-2 headroom against a latent-neighbor oracle") {
  SynthSpec spec;
  spec.kind = SynthKind::nonlinear_manifold;
  spec.n_voxels = 512;
  spec.n_genes = 200;
  spec.intrinsic_dim = 2;
  spec.noise_sd = 0.02;
  spec.seed = 20260815;
  const SynthResult r = synth_dataset(spec);
  const SplitIndex si = split(512, 99);
  const Matrix xtr = select_rows(r.dataset.values, si.train_rows);
  const Matrix xte = select_rows(r.dataset.values, si.test_rows);

  const auto pca = pca_fit(xtr, 2);
  const double pca_rmse = rmse_all(inverse(*pca, pca->transform(xte)), xte);

  // regression from the generative latent: average the 10 nearest training
  // rows in true-latent space; beats any 2-component linear code if the data
  // really is a smooth 2-dim manifold
  const Matrix ltr = select_rows(r.latent, si.train_rows);
  const Matrix lte = select_rows(r.latent, si.test_rows);
  Matrix pred(xte.rows(), xte.cols());
  for (size_t i = 0; i < lte.rows(); ++i) {
    std::vector<std::pair<double, size_t>> dist;
    for (size_t j = 0; j < ltr.rows(); ++j) {
      double d2 = 0.0;
      for (size_t k = 0; k < 2; ++k) {
        const double diff = lte(i, k) - ltr(j, k);
        d2 += diff * diff;
      }
      dist.emplace_back(d2, j);
    }
    std::partial_sort(dist.begin(), dist.begin() + 10, dist.end());
    for (size_t g = 0; g < xte.cols(); ++g) {
      double acc = 0.0;
      for (size_t m = 0; m < 10; ++m) acc += xtr(dist[m].second, g);
      pred(i, g) = acc / 10.0;
    }
  }
  const double oracle_rmse = rmse_all(pred, xte);
  CHECK(pca_rmse > oracle_rmse);
}

TEST_CASE("export_volume writes a single-voxel volume and round-trips") {
  testutil::TempDir tmp("dataio_vol");
  export_volume({{0, 0, 0}}, {5.0}, tmp.file("one.vol"));
  const Volume one = import_volume(tmp.file("one.vol"));
  CHECK(one.nx == 1);
  CHECK(one.ny == 1);
  CHECK(one.nz == 1);
  CHECK(one.fill == -1.0);
  REQUIRE(one.values.size() == 1);
  CHECK(one.values[0] == 5.0);

  // sparse coords: occupied cells carry their values, absent cells the fill
  const std::vector<std::array<int, 3>> coords = {{2, 3, 4}, {4, 3, 4}, {2, 5, 6}};
  const std::vector<double> vals = {0.125, 0.25, 0.5};
  export_volume(coords, vals, tmp.file("sparse.vol"));
  const Volume v = import_volume(tmp.file("sparse.vol"));
  CHECK(v.nx == 3);
  CHECK(v.ny == 3);
  CHECK(v.nz == 3);
  size_t occupied = 0;
  for (double x : v.values)
    if (x != v.fill) ++occupied;
  CHECK(occupied == 3);
  for (size_t i = 0; i < coords.size(); ++i) {
    const size_t x = static_cast<size_t>(coords[i][0] - 2);
    const size_t y = static_cast<size_t>(coords[i][1] - 3);
    const size_t z = static_cast<size_t>(coords[i][2] - 4);
    CHECK(v.values[x + v.nx * (y + v.ny * z)] == vals[i]);
  }
}

TEST_CASE("export_volume occupied-cell count matches at 3670 voxels") {
  testutil::TempDir tmp("dataio_vol_count");
  SynthSpec spec;
  spec.n_voxels = 3670;
  spec.n_genes = 4;
  spec.intrinsic_dim = 2;
  spec.seed = 3;
  const SynthResult r = synth_dataset(spec);
  std::vector<double> vals(3670);
  for (size_t i = 0; i < vals.size(); ++i) vals[i] = r.dataset.values(i, 0);
  export_volume(r.dataset.coords, vals, tmp.file("big.vol"));
  const Volume v = import_volume(tmp.file("big.vol"));
  size_t occupied = 0;
  for (double x : v.values)
    if (x != v.fill) ++occupied;
  CHECK(occupied == 3670);
}

TEST_CASE("histogram basics and binning oracle") {
  Matrix constant(2, 10);
  for (size_t i = 0; i < constant.size(); ++i) constant.data()[i] = 1.5;
  const Histogram flat = histogram(constant, 4);
  REQUIRE(flat.counts.size() == 4);
  size_t nonzero = 0, total = 0;
  for (size_t c : flat.counts) {
    if (c) ++nonzero;
    total += c;
  }
  CHECK(nonzero == 1);
  CHECK(total == 20);

  Rng rng(41);
  Matrix x(50, 40);
  for (size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const Histogram h = histogram(x, 16);
  REQUIRE(h.bin_edges.size() == 17);
  const double lo = *std::min_element(x.values().begin(), x.values().end());
  const double hi = *std::max_element(x.values().begin(), x.values().end());
  CHECK(h.bin_edges.front() == doctest::Approx(lo).epsilon(1e-12));
  CHECK(h.bin_edges.back() == doctest::Approx(hi).epsilon(1e-12));

  std::vector<size_t> oracle(16, 0);
  const double width = (hi - lo) / 16.0;
  for (double v : x.values()) {
    size_t b = v >= hi ? 15 : static_cast<size_t>((v - lo) / width);
    if (b > 15) b = 15;
    ++oracle[b];
  }
  size_t sum = 0;
  for (size_t b = 0; b < 16; ++b) {
    CHECK(h.counts[b] == oracle[b]);
    sum += h.counts[b];
  }
  CHECK(sum == x.size());
}
