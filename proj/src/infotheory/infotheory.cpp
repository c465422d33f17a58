#include "texgram/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "texgram/error.hpp"

namespace texgram {

std::string_view to_string(EntropyMethod method) {
  return method == EntropyMethod::kNsb ? "nsb" : "plugin";
}

EntropyMethod parse_entropy_method(std::string_view text) {
  if (text == "plugin") return EntropyMethod::kPlugin;
  if (text == "nsb") return EntropyMethod::kNsb;
  throw ConfigError("unknown MI method '" + std::string(text) + "' (expected plugin or nsb)");
}

std::vector<std::uint64_t> ContingencyTable::row_marginals() const {
  std::vector<std::uint64_t> out(k_x, 0);
  for (std::size_t x = 0; x < k_x; ++x) {
    for (std::size_t y = 0; y < k_y; ++y) out[x] += at(x, y);
  }
  return out;
}

std::vector<std::uint64_t> ContingencyTable::column_marginals() const {
  std::vector<std::uint64_t> out(k_y, 0);
  for (std::size_t x = 0; x < k_x; ++x) {
    for (std::size_t y = 0; y < k_y; ++y) out[y] += at(x, y);
  }
  return out;
}

ContingencyTable ContingencyTable::transposed() const {
  ContingencyTable t{k_y, k_x, std::vector<std::uint64_t>(counts.size()), n};
  for (std::size_t x = 0; x < k_x; ++x) {
    for (std::size_t y = 0; y < k_y; ++y) t.counts[y * k_x + x] = at(x, y);
  }
  return t;
}

void ContingencyTable::validate() const {
  if (k_x < 1 || k_y < 1) throw DataError("contingency table needs alphabets of size >= 1");
  if (counts.size() != k_x * k_y) throw DataError("contingency table has the wrong number of cells");
  std::uint64_t total = 0;
  for (std::uint64_t c : counts) total += c;
  if (total != n) throw DataError("contingency table counts do not sum to n");
}

ContingencyTable contingency_table(std::span<const int> x_labels, std::span<const int> y_labels,
                                   std::size_t k_x, std::size_t k_y) {
  if (x_labels.size() != y_labels.size()) {
    throw DataError("label sequences differ in length (" + std::to_string(x_labels.size()) +
                    " vs " + std::to_string(y_labels.size()) + ")");
  }
  if (k_x < 1 || k_y < 1) throw DataError("alphabet sizes must be >= 1");
  ContingencyTable table{k_x, k_y, std::vector<std::uint64_t>(k_x * k_y, 0), x_labels.size()};
  for (std::size_t i = 0; i < x_labels.size(); ++i) {
    const int x = x_labels[i];
    const int y = y_labels[i];
    if (x < 0 || static_cast<std::size_t>(x) >= k_x || y < 0 ||
        static_cast<std::size_t>(y) >= k_y) {
      throw DataError("label out of range at position " + std::to_string(i));
    }
    ++table.counts[static_cast<std::size_t>(x) * k_y + static_cast<std::size_t>(y)];
  }
  return table;
}

EntropyEstimate plugin_entropy(std::span<const std::uint64_t> counts) {
  // Sorted so the result does not depend on bin order.
  std::vector<std::uint64_t> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t total = 0;
  for (std::uint64_t c : sorted) total += c;
  if (total == 0) throw DataError("entropy of all-zero counts");
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (std::uint64_t c : sorted) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return {h, EntropyMethod::kPlugin, std::nullopt};
}

EntropyEstimate mutual_information(const ContingencyTable& table, EntropyMethod method,
                                   bool clamp_at_zero) {
  table.validate();
  if (table.n == 0) throw DataError("mutual information of an empty table");
  const auto rows = table.row_marginals();
  const auto cols = table.column_marginals();

  EntropyEstimate hx, hy, hxy;
  if (method == EntropyMethod::kPlugin) {
    hx = plugin_entropy(rows);
    hy = plugin_entropy(cols);
    hxy = plugin_entropy(table.counts);
  } else {
    hx = nsb_entropy(rows, table.k_x);
    hy = nsb_entropy(cols, table.k_y);
    hxy = nsb_entropy(table.counts, static_cast<std::uint64_t>(table.k_x) * table.k_y);
  }

  EntropyEstimate mi{hx.value + hy.value - hxy.value, method, std::nullopt};
  if (method == EntropyMethod::kNsb) {
    const double sx = hx.posterior_sd.value_or(0.0);
    const double sy = hy.posterior_sd.value_or(0.0);
    const double sxy = hxy.posterior_sd.value_or(0.0);
    mi.posterior_sd = std::sqrt(sx * sx + sy * sy + sxy * sxy);
  }
  if (clamp_at_zero && mi.value < 0.0) mi.value = 0.0;
  return mi;
}

std::string mi_report_csv(std::span<const MiReportRow> rows) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "model,layer_index,method,mi_bits,posterior_sd\n";
  for (const MiReportRow& row : rows) {
    csv << row.model << ',' << row.layer_index << ',' << to_string(row.method) << ','
        << row.mi_bits << ',';
    if (row.posterior_sd) csv << *row.posterior_sd;
    csv << '\n';
  }
  return csv.str();
}

}  // namespace texgram
