#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace texgram {

enum class EntropyMethod { kPlugin, kNsb };

std::string_view to_string(EntropyMethod method);
EntropyMethod parse_entropy_method(std::string_view text);  // "plugin" | "nsb"

// Joint counts of two labelings; counts is k_x x k_y, row-major.
struct ContingencyTable {
  std::size_t k_x = 0;
  std::size_t k_y = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t n = 0;

  std::uint64_t at(std::size_t x, std::size_t y) const { return counts[x * k_y + y]; }
  std::vector<std::uint64_t> row_marginals() const;
  std::vector<std::uint64_t> column_marginals() const;
  ContingencyTable transposed() const;
  void validate() const;
};

struct EntropyEstimate {
  double value = 0.0;  // bits
  EntropyMethod method = EntropyMethod::kPlugin;
  std::optional<double> posterior_sd;  // bits, NSB only
};

ContingencyTable contingency_table(std::span<const int> x_labels, std::span<const int> y_labels,
                                   std::size_t k_x, std::size_t k_y);

// -sum (c/n) log2(c/n) over nonzero counts.
EntropyEstimate plugin_entropy(std::span<const std::uint64_t> counts);

// Posterior-mean entropy under the Nemenman-Shafee-Bialek prior (mixture of
// symmetric Dirichlet priors, flat in the a-priori expected entropy) over an
// alphabet of `alphabet_size` symbols. Counts beyond the observed bins are
// treated as zero; throws DataError if more nonzero bins than symbols, and
// NumericalError if the quadrature does not converge.
EntropyEstimate nsb_entropy(std::span<const std::uint64_t> counts, std::uint64_t alphabet_size);

// H(X) + H(Y) - H(X,Y). The NSB joint entropy uses an alphabet of k_x * k_y.
// With `clamp_at_zero` negative estimates are reported as 0.
EntropyEstimate mutual_information(const ContingencyTable& table, EntropyMethod method,
                                   bool clamp_at_zero = false);

struct MiReportRow {
  std::string model;
  int layer_index = 0;
  EntropyMethod method = EntropyMethod::kPlugin;
  double mi_bits = 0.0;
  std::optional<double> posterior_sd;
};

// model,layer_index,method,mi_bits,posterior_sd (empty sd for plug-in rows)
std::string mi_report_csv(std::span<const MiReportRow> rows);

}  // namespace texgram
