#include "pcvqa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "pcvqa/error.hpp"
#include "pcvqa/random.hpp"

namespace pcvqa {
namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_n) {
  if (x.size() != y.size()) {
    throw ValidationError("input lengths differ (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
  if (x.size() < min_n) {
    throw ValidationError("need at least " + std::to_string(min_n) + " samples, got " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ValidationError("inputs must be finite");
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("correlation is undefined for a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

bool all_equal(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

// Number of tied pairs within runs of equal values of an already-sorted key.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal) {
  std::int64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      total += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Sorts v ascending and returns the number of inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
    // Positions i..j-1 share the mean of ranks i+1..j.
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  if (all_equal(x) || all_equal(y)) throw UndefinedStatistic("SRCC is undefined for a constant input");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double krcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t tx = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[idx[a]] == x[idx[b]]; });
  const std::int64_t txy = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[idx[a]] == x[idx[b]] && y[idx[a]] == y[idx[b]];
  });
  std::vector<double> ys(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  const std::int64_t swaps = merge_count(ys, tmp, 0, n);
  const std::int64_t ty = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });
  // concordant - discordant = n0 - tx - ty + txy - 2 * discordant
  const std::int64_t numerator = n0 - tx - ty + txy - 2 * swaps;
  const std::int64_t dx = n0 - tx;
  const std::int64_t dy = n0 - ty;
  if (dx == 0 || dy == 0) throw UndefinedStatistic("KRCC is undefined: every pair is tied in one input");
  return std::clamp(static_cast<double>(numerator) /
                        std::sqrt(static_cast<double>(dx) * static_cast<double>(dy)),
                    -1.0, 1.0);
}

double plcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  return pearson(x, y);
}

double rmse(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(sum / static_cast<double>(x.size()));
}

// ---------------------------------------------------------------------------
// Logistic mapping

double logistic_map(double y, const LogisticParams& p) {
  const auto& b = p.beta;
  const double e = std::clamp(b[1] * (y - b[2]), -500.0, 500.0);
  return b[0] * (0.5 - 1.0 / (1.0 + std::exp(e))) + b[3] * y + b[4];
}

double logistic_sse(std::span<const double> pred, std::span<const double> mos, const LogisticParams& p) {
  double sse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = mos[i] - logistic_map(pred[i], p);
    sse += r * r;
  }
  return sse;
}

namespace {

struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;  // population std, or 1 for constant data
  bool constant = false;
};

Standardizer standardizer(std::span<const double> v) {
  Standardizer s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (const double x : v) var += (x - s.mean) * (x - s.mean);
  var /= n;
  s.constant = !(var > 0.0);
  s.scale = s.constant ? 1.0 : std::sqrt(var);
  return s;
}

// Parameters in standardized coordinates (zp = (pred - mp)/sp, zm = (mos - mm)/sm)
// mapped back to raw coordinates.
LogisticParams to_raw(const std::array<double, 5>& z, const Standardizer& sp, const Standardizer& sm) {
  LogisticParams p;
  p.beta[0] = sm.scale * z[0];
  p.beta[1] = z[1] / sp.scale;
  p.beta[2] = sp.mean + sp.scale * z[2];
  p.beta[3] = sm.scale * z[3] / sp.scale;
  p.beta[4] = sm.scale * (z[4] - z[3] * sp.mean / sp.scale) + sm.mean;
  return p;
}

class NelderMead {
 public:
  using Point = std::array<double, 5>;

  template <typename F>
  Point minimize(F&& f, Point start, double tol, int& budget) {
    constexpr std::size_t d = 5;
    std::array<Point, d + 1> pts;
    std::array<double, d + 1> val;
    pts[0] = start;
    for (std::size_t i = 0; i < d; ++i) {
      pts[i + 1] = start;
      pts[i + 1][i] += std::max(0.1 * std::abs(start[i]), 0.05);
    }
    for (std::size_t i = 0; i <= d; ++i) {
      val[i] = f(pts[i]);
      --budget;
    }
    std::array<std::size_t, d + 1> order;
    while (budget > 0) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
      const std::size_t best = order[0], worst = order[d], second = order[d - 1];
      double diameter = 0.0;
      for (std::size_t i = 1; i <= d; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += (pts[order[i]][k] - pts[best][k]) * (pts[order[i]][k] - pts[best][k]);
        diameter = std::max(diameter, std::sqrt(s));
      }
      if (diameter < tol) break;

      Point centroid{};
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[order[i]][k] / static_cast<double>(d);
      }
      const auto along = [&](double t) {
        Point p;
        for (std::size_t k = 0; k < d; ++k) p[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
        return p;
      };
      const Point reflected = along(-1.0);
      const double fr = f(reflected);
      --budget;
      if (fr < val[best]) {
        const Point expanded = along(-2.0);
        const double fe = f(expanded);
        --budget;
        if (fe < fr) {
          pts[worst] = expanded;
          val[worst] = fe;
        } else {
          pts[worst] = reflected;
          val[worst] = fr;
        }
        continue;
      }
      if (fr < val[second]) {
        pts[worst] = reflected;
        val[worst] = fr;
        continue;
      }
      const bool outside = fr < val[worst];
      const Point contracted = along(outside ? -0.5 : 0.5);
      const double fc = f(contracted);
      --budget;
      if (fc < (outside ? fr : val[worst])) {
        pts[worst] = contracted;
        val[worst] = fc;
        continue;
      }
      for (std::size_t i = 1; i <= d; ++i) {
        Point& p = pts[order[i]];
        for (std::size_t k = 0; k < d; ++k) p[k] = pts[best][k] + 0.5 * (p[k] - pts[best][k]);
        val[order[i]] = f(p);
        --budget;
      }
    }
    const auto it = std::min_element(val.begin(), val.end());
    return pts[static_cast<std::size_t>(it - val.begin())];
  }
};

void check_fit_input(std::span<const double> pred, std::span<const double> mos) {
  if (pred.size() != mos.size()) throw ValidationError("prediction and MOS counts differ");
  if (pred.size() < 5) {
    throw ValidationError("logistic fit needs at least 5 samples, got " + std::to_string(pred.size()));
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(mos[i])) throw ValidationError("logistic fit inputs must be finite");
  }
}

std::array<double, 5> standardized_guess(std::span<const double> zp, std::span<const double> zm,
                                         std::span<const double> mos, const Standardizer& sp,
                                         const Standardizer& sm) {
  const auto [lo, hi] = std::minmax_element(mos.begin(), mos.end());
  double slope = 0.0;
  if (!sp.constant) {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < zp.size(); ++i) {
      sxy += zp[i] * zm[i];
      sxx += zp[i] * zp[i];
    }
    slope = sxy / sxx;
  }
  // zp and zm are centered, so the least-squares intercept is zero.
  return {(*hi - *lo) / sm.scale, sp.constant ? 0.0 : 1.0, 0.0, slope, 0.0};
}

}  // namespace

LogisticParams logistic_initial_guess(std::span<const double> pred, std::span<const double> mos) {
  check_fit_input(pred, mos);
  const Standardizer sp = standardizer(pred);
  const Standardizer sm = standardizer(mos);
  std::vector<double> zp(pred.size()), zm(mos.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    zp[i] = (pred[i] - sp.mean) / sp.scale;
    zm[i] = (mos[i] - sm.mean) / sm.scale;
  }
  return to_raw(standardized_guess(zp, zm, mos, sp, sm), sp, sm);
}

LogisticParams fit_logistic(std::span<const double> pred, std::span<const double> mos,
                            const LogisticFitOptions& opts) {
  check_fit_input(pred, mos);
  const Standardizer sp = standardizer(pred);
  const Standardizer sm = standardizer(mos);
  std::vector<double> zp(pred.size()), zm(mos.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    zp[i] = (pred[i] - sp.mean) / sp.scale;
    zm[i] = (mos[i] - sm.mean) / sm.scale;
  }
  const auto sse = [&](const std::array<double, 5>& z) {
    LogisticParams p;
    p.beta = z;
    return logistic_sse(zp, zm, p);
  };
  const std::array<double, 5> start = standardized_guess(zp, zm, mos, sp, sm);
  const double start_sse = sse(start);

  // Descend from the initial guess and from steeper, shallower and shifted
  // variants of it; a single start can slide into the flat tail of the sigmoid.
  std::vector<std::array<double, 5>> starts{start};
  for (const double shift : {0.0, -1.0, 1.0}) {
    for (const double k : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      if (shift == 0.0 && k == 1.0) continue;
      std::array<double, 5> s = start;
      s[1] = start[1] == 0.0 ? k : start[1] * k;
      s[2] += shift;
      starts.push_back(s);
    }
  }
  NelderMead nm;
  std::array<double, 5> best = start;
  double best_sse = start_sse;
  for (const auto& s : starts) {
    // Restart from the incumbent until a restart no longer improves it.
    std::array<double, 5> local = s;
    double local_sse = sse(s);
    int budget = opts.max_evaluations;
    while (budget > 0) {
      const auto candidate = nm.minimize(sse, local, opts.simplex_tolerance, budget);
      const double c = sse(candidate);
      const bool improved = c < local_sse * (1.0 - 1e-12);
      if (c < local_sse) {
        local = candidate;
        local_sse = c;
      }
      if (!improved || local_sse == 0.0) break;
    }
    if (local_sse < best_sse) {
      best = local;
      best_sse = local_sse;
    }
    if (best_sse == 0.0) break;
  }
  // The descent only accepts improvements, but keep the contract explicit.
  if (!(best_sse <= start_sse)) best = start;
  return to_raw(best, sp, sm);
}

EvaluationReport evaluate(std::span<const double> pred, std::span<const double> mos, MappingMode mode) {
  check_fit_input(pred, mos);
  EvaluationReport r;
  r.n = pred.size();
  r.logistic = fit_logistic(pred, mos);
  std::vector<double> mapped(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) mapped[i] = logistic_map(pred[i], r.logistic);
  const std::span<const double> ranked = mode == MappingMode::all_criteria ? std::span<const double>(mapped) : pred;
  r.srcc = srcc(ranked, mos);
  r.krcc = krcc(ranked, mos);
  r.plcc = plcc(mapped, mos);
  r.rmse = rmse(mapped, mos);
  return r;
}

void write_report_text(std::ostream& os, const EvaluationReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "n     %zu\nSRCC  %.6g\nKRCC  %.6g\nPLCC  %.6g\nRMSE  %.6g\n"
                "beta  %.6g %.6g %.6g %.6g %.6g\n",
                r.n, r.srcc, r.krcc, r.plcc, r.rmse, r.logistic.beta[0], r.logistic.beta[1],
                r.logistic.beta[2], r.logistic.beta[3], r.logistic.beta[4]);
  os << buf;
}

void write_report_csv_header(std::ostream& os, bool with_label) {
  if (with_label) os << "label,";
  os << "srcc,krcc,plcc,rmse,beta1,beta2,beta3,beta4,beta5,n\n";
}

void write_report_csv_row(std::ostream& os, const EvaluationReport& r, const std::string& label) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%zu\n", r.srcc, r.krcc, r.plcc,
                r.rmse, r.logistic.beta[0], r.logistic.beta[1], r.logistic.beta[2], r.logistic.beta[3],
                r.logistic.beta[4], r.n);
  if (!label.empty()) os << label << ',';
  os << buf;
}

// ---------------------------------------------------------------------------
// Manifests

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("manifest is empty (expected header path,mos,group)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  const auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError(std::string("manifest is missing column '") + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cp = column("path"), cm = column("mos"), cg = column("group");
  std::vector<ManifestEntry> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ValidationError("manifest line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                            " fields, header has " + std::to_string(header.size()));
    }
    ManifestEntry e;
    e.path = cells[cp];
    if (e.path.is_relative() && !base_dir.empty()) e.path = base_dir / e.path;
    char* end = nullptr;
    e.mos = std::strtod(cells[cm].c_str(), &end);
    if (cells[cm].empty() || end != cells[cm].c_str() + cells[cm].size() || !std::isfinite(e.mos)) {
      throw ValidationError("manifest line " + std::to_string(lineno) + ": invalid mos '" + cells[cm] + "'");
    }
    e.group = cells[cg];
    if (e.group.empty()) throw ValidationError("manifest line " + std::to_string(lineno) + ": empty group");
    if (cells[cp].empty()) throw ValidationError("manifest line " + std::to_string(lineno) + ": empty path");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open manifest '" + csv.string() + "'");
  return parse_manifest(in, csv.parent_path());
}

void write_manifest(std::ostream& os, std::span<const ManifestEntry> entries) {
  os << "path,mos,group\n";
  char buf[64];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%.17g", e.mos);
    os << e.path.generic_string() << ',' << buf << ',' << e.group << '\n';
  }
}

std::vector<Fold> kfold_split(std::span<const ManifestEntry> manifest, int k, std::uint64_t seed) {
  std::vector<std::string> groups;
  std::map<std::string, std::size_t> slot;
  for (const auto& e : manifest) {
    if (slot.emplace(e.group, groups.size()).second) groups.push_back(e.group);
  }
  if (k < 2) throw ValidationError("k-fold split needs k >= 2");
  if (static_cast<std::size_t>(k) > groups.size()) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds the " + std::to_string(groups.size()) +
                          " distinct content groups");
  }
  std::vector<std::size_t> perm(groups.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "kfold-groups"));
  shuffle(std::span<std::size_t>(perm), rng);
  std::vector<std::size_t> fold_of(groups.size());
  for (std::size_t p = 0; p < perm.size(); ++p) fold_of[perm[p]] = p % static_cast<std::size_t>(k);

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const std::size_t f = fold_of[slot.at(manifest[i].group)];
    for (std::size_t j = 0; j < folds.size(); ++j) (j == f ? folds[j].test : folds[j].train).push_back(i);
  }
  return folds;
}

}  // namespace pcvqa
