/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "kgp/dense_gp.hpp"
#include "kgp/error.hpp"
#include "kgp/grid_gp.hpp"

namespace kgp {

namespace {

template <typename F>
double fastest(std::size_t repeats, F&& body) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(1, repeats); ++r) {
    const auto start = std::chrono::steady_clock::now();
    body();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

std::string field(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(6);
  os << *v;
  return os.str();
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchOptions& options) {
  if (options.sizes.empty()) throw UsageError("bench needs at least one size");
  if (options.n_params == 0 || options.n_times == 0) throw_validation("bench needs positive N and N_t");
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vector params = Vector::LinSpaced(static_cast<Eigen::Index>(options.n_params), 0.0, 1.0);
  const Vector times = Vector::LinSpaced(static_cast<Eigen::Index>(options.n_times), 0.0, 1.0);

  std::vector<BenchRow> rows;
  for (std::size_t M : options.sizes) {
    if (M < 2) throw UsageError("bench sizes must be at least 2");
    const Vector x = Vector::LinSpaced(static_cast<Eigen::Index>(M), 0.0, 1.0);
    ProductGrid grid = make_grid(params, {x}, &times);
    ProductKernelSpec spec = stationary_spec(grid, options.family);
    for (auto& f : spec.factors) f.base.log_lengthscales.setConstant(std::log(0.3));
    const double sigma2 = 1e-2;
    Vector yv(static_cast<Eigen::Index>(grid.size()));
    for (Eigen::Index i = 0; i < yv.size(); ++i) yv[i] = normal(rng);
    FieldTensor y(grid.shape(), yv);

    const Vector x_test = (x.array() + 0.5 / static_cast<double>(M)).matrix();
    ProductGrid test = make_grid(params, {x_test}, &times);

    BenchRow row;
    row.M = M;
    row.points = grid.size();
    double sink = 0.0;
    row.nlml_seconds = fastest(options.repeats, [&] { sink += grid_nlml(spec, grid, y, sigma2); });
    FittedModel model = fit(spec, grid, y, sigma2);
    row.predict_seconds = fastest(options.repeats, [&] {
      sink += predict_mean(model, test).values[0];
      sink += predict_var(model, test).variance.values[0];
    });
    if (grid.size() <= options.dense_cap) {
      row.dense_seconds = fastest(1, [&] {
        DenseGP gp(grid.lattice_points(), y.values, spec, sigma2, options.dense_cap);
        sink += dense_nlml(gp);
      });
    }
    if (!std::isfinite(sink)) throw_numerical("bench produced a non-finite objective");
    if (!rows.empty() && rows.back().M * 2 == M) {
      const BenchRow& prev = rows.back();
      row.nlml_ratio = row.nlml_seconds / prev.nlml_seconds;
      row.predict_ratio = row.predict_seconds / prev.predict_seconds;
      if (row.dense_seconds && prev.dense_seconds) row.dense_ratio = *row.dense_seconds / *prev.dense_seconds;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "M,points,grid_nlml_s,predict_s,ratio,predict_ratio,dense_nlml_s,dense_ratio\n";
  for (const auto& r : rows)
    os << r.M << ',' << r.points << ',' << field(r.nlml_seconds) << ',' << field(r.predict_seconds) << ','
       << field(r.nlml_ratio) << ',' << field(r.predict_ratio) << ',' << field(r.dense_seconds) << ','
       << field(r.dense_ratio) << '\n';
  return os.str();
}

std::vector<std::size_t> parse_sizes(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      throw UsageError("invalid size '" + item + "' in --sizes");
    }
    if (pos != item.size() || v == 0) throw UsageError("invalid size '" + item + "' in --sizes");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw UsageError("--sizes needs at least one value");
  return out;
}

}  // namespace kgp
