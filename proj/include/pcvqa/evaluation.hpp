#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pcvqa {

/// Spearman correlation: Pearson correlation of average ranks. Throws
/// UndefinedStatistic when either input is constant, ValidationError when
/// n < 2 or lengths differ.
double srcc(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b in O(n log n). Throws UndefinedStatistic on a zero denominator.
double krcc(std::span<const double> x, std::span<const double> y);

double plcc(std::span<const double> x, std::span<const double> y);
double rmse(std::span<const double> x, std::span<const double> y);

/// Average (fractional) ranks starting at 1.
std::vector<double> average_ranks(std::span<const double> v);

struct LogisticParams {
  std::array<double, 5> beta{};
};

/// beta1 * (0.5 - 1 / (1 + exp(beta2 * (y - beta3)))) + beta4 * y + beta5, with the
/// exponent clamped to [-500, 500].
double logistic_map(double y, const LogisticParams& p);

/// Sum of squared residuals of mos against logistic_map(pred).
double logistic_sse(std::span<const double> pred, std::span<const double> mos, const LogisticParams& p);

/// Starting point of the fit: beta1 = range(mos), beta2 = 1/std(pred) (0 for
/// constant pred), beta3 = mean(pred), beta4/beta5 from least squares.
LogisticParams logistic_initial_guess(std::span<const double> pred, std::span<const double> mos);

struct LogisticFitOptions {
  double simplex_tolerance = 1e-8;
  int max_evaluations = 20000;
};

/// Least-squares fit of the five-parameter logistic by Nelder-Mead simplex
/// descent (run in standardized coordinates). Never returns parameters worse
/// than the initial guess. Requires n >= 5 and finite inputs.
LogisticParams fit_logistic(std::span<const double> pred, std::span<const double> mos,
                            const LogisticFitOptions& opts = {});

struct EvaluationReport {
  double srcc = 0.0;
  double krcc = 0.0;
  double plcc = 0.0;
  double rmse = 0.0;
  LogisticParams logistic;
  std::size_t n = 0;
};

enum class MappingMode {
  correlation_only,  // rank criteria on raw scores, PLCC/RMSE on mapped scores
  all_criteria,      // every criterion on mapped scores
};

EvaluationReport evaluate(std::span<const double> pred, std::span<const double> mos,
                          MappingMode mode = MappingMode::correlation_only);

void write_report_text(std::ostream& os, const EvaluationReport& r);
void write_report_csv_header(std::ostream& os, bool with_label = false);
void write_report_csv_row(std::ostream& os, const EvaluationReport& r, const std::string& label = {});

// ---------------------------------------------------------------------------
// Manifests and grouped folds

struct ManifestEntry {
  std::filesystem::path path;
  double mos = 0.0;
  std::string group;
};

/// Reads a "path,mos,group" CSV (columns in any order). Relative paths are
/// resolved against the manifest's directory. Missing columns raise a
/// ValidationError naming the column.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& csv);
std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
void write_manifest(std::ostream& os, std::span<const ManifestEntry> entries);

struct Fold {
  std::vector<std::size_t> train;  // ascending entry indices
  std::vector<std::size_t> test;
};

/// Groups shuffled with the seed and dealt round-robin into k folds. Throws
/// ValidationError when k exceeds the number of distinct groups or k < 2.
std::vector<Fold> kfold_split(std::span<const ManifestEntry> manifest, int k, std::uint64_t seed);

}  // namespace pcvqa
