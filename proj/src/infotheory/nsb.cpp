#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "texgram/error.hpp"
#include "texgram/infotheory.hpp"

namespace texgram {

namespace {

using boost::math::digamma;
using boost::math::trigamma;

constexpr std::size_t kNodesPerPanel = 32;
constexpr std::size_t kPanels = 16;
constexpr std::size_t kGridPoints = 128;
constexpr double kSupportDrop = 40.0;   // log-evidence drop defining the integration range
constexpr double kTolerance = 1e-7;     // nats, agreement between 256- and 512-node rules

struct GaussLegendreRule {
  std::array<double, kNodesPerPanel> nodes{};    // on [-1, 1]
  std::array<double, kNodesPerPanel> weights{};
};

const GaussLegendreRule& legendre_rule() {
  static const GaussLegendreRule rule = [] {
    GaussLegendreRule r;
    const std::size_t n = kNodesPerPanel;
    for (std::size_t i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                          (static_cast<double>(n) + 0.5));
      double dp = 1.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
          p0 = p1;
          p1 = pk;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      r.nodes[i] = x;
      r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
  }();
  return rule;
}

// sum_{j<n} log(x + j) = lgamma(x + n) - lgamma(x)
double log_rising(double x, std::uint64_t n) {
  if (n == 0) return 0.0;
  if (n <= 32) {
    double s = 0.0;
    for (std::uint64_t j = 0; j < n; ++j) s += std::log(x + static_cast<double>(j));
    return s;
  }
  return boost::math::lgamma(x + static_cast<double>(n)) - boost::math::lgamma(x);
}

struct CountGroup {
  double count;
  double multiplicity;
};

class NsbPosterior {
 public:
  NsbPosterior(std::vector<CountGroup> groups, double alphabet, double total)
      : groups_(std::move(groups)), k_(alphabet), n_(total), log_k_(std::log(alphabet)) {}

  double max_xi() const { return log_k_; }

  // A-priori expected entropy of a symmetric Dirichlet with concentration beta.
  double xi(double beta) const { return digamma(k_ * beta + 1.0) - digamma(beta + 1.0); }

  // Solves xi(beta) = target by safeguarded Newton on log(beta).
  double beta_for(double target) const {
    double lo = -60.0, hi = 60.0;
    double u = std::log(std::max(1e-300, target / (k_ - 1.0) * 6.0 / (std::numbers::pi * std::numbers::pi)));
    if (target > 0.5 * log_k_) u = std::log((k_ - 1.0) / (2.0 * std::max(1e-300, log_k_ - target)) / k_);
    u = std::clamp(u, lo, hi);
    const double f_tol = 1e-15 * (log_k_ + 1.0);
    for (int iter = 0; iter < 200; ++iter) {
      const double beta = std::exp(u);
      const double f = xi(beta) - target;
      if (std::abs(f) <= f_tol) return beta;
      if (f > 0) hi = u; else lo = u;
      const double df = beta * (k_ * trigamma(k_ * beta + 1.0) - trigamma(beta + 1.0));
      double next = u - f / df;
      if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
      if (std::abs(next - u) < 1e-14 * std::max(1.0, std::abs(u))) return std::exp(next);
      u = next;
    }
    return std::exp(u);
  }

  // Log marginal likelihood of the counts under Dirichlet(beta), up to a constant.
  double log_evidence(double beta) const {
    double l = -log_rising(k_ * beta, static_cast<std::uint64_t>(n_));
    for (const CountGroup& g : groups_) {
      l += g.multiplicity * log_rising(beta, static_cast<std::uint64_t>(g.count));
    }
    return l;
  }

  double log_evidence_at_xi(double x) const { return log_evidence(beta_for(clamp_xi(x))); }

  // First and second posterior moments of the entropy (nats) given beta.
  std::pair<double, double> entropy_moments(double beta) const {
    const double a_total = n_ + k_ * beta;
    const double psi_a1 = digamma(a_total + 1.0);
    const double psi_a2 = digamma(a_total + 2.0);
    const double tri_a2 = trigamma(a_total + 2.0);
    double mean_sum = 0.0, u_sum = 0.0, u_sq = 0.0, a_sq = 0.0, diag = 0.0;
    for (const CountGroup& g : groups_) {
      const double a = g.count + beta;
      const double m = g.multiplicity;
      mean_sum += m * a * digamma(a + 1.0);
      const double u = a * (digamma(a + 1.0) - psi_a2);
      u_sum += m * u;
      u_sq += m * u * u;
      a_sq += m * a * a;
      const double d = digamma(a + 2.0) - psi_a2;
      diag += m * a * (a + 1.0) * (d * d + trigamma(a + 2.0) - tri_a2);
    }
    const double mean = psi_a1 - mean_sum / a_total;
    const double off = (u_sum * u_sum - u_sq) - tri_a2 * (a_total * a_total - a_sq);
    const double second = (off + diag) / (a_total * (a_total + 1.0));
    return {mean, second};
  }

  double clamp_xi(double x) const {
    return std::clamp(x, log_k_ * 1e-12, log_k_ * (1.0 - 1e-12));
  }

 private:
  std::vector<CountGroup> groups_;
  double k_;
  double n_;
  double log_k_;
};

struct Moments {
  double mean = 0.0;
  double second = 0.0;
};

Moments integrate(const NsbPosterior& post, double lo, double hi, double peak_log_evidence,
                  std::size_t panels) {
  const GaussLegendreRule& rule = legendre_rule();
  const double width = (hi - lo) / static_cast<double>(panels);
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double centre = lo + (static_cast<double>(p) + 0.5) * width;
    for (std::size_t i = 0; i < kNodesPerPanel; ++i) {
      const double x = post.clamp_xi(centre + 0.5 * width * rule.nodes[i]);
      const double beta = post.beta_for(x);
      // Weights relative to the peak keep the exponent bounded.
      const double w = 0.5 * width * rule.weights[i] *
                       std::exp(post.log_evidence(beta) - peak_log_evidence);
      const auto [mean, second] = post.entropy_moments(beta);
      z += w;
      m1 += w * mean;
      m2 += w * second;
    }
  }
  if (!(z > 0.0) || !std::isfinite(z)) return {std::nan(""), std::nan("")};
  return {m1 / z, m2 / z};
}

}  // namespace

EntropyEstimate nsb_entropy(std::span<const std::uint64_t> counts, std::uint64_t alphabet_size) {
  if (alphabet_size < 1) throw DataError("alphabet size must be >= 1");
  std::map<std::uint64_t, std::uint64_t> by_count;
  std::uint64_t total = 0, occupied = 0;
  for (std::uint64_t c : counts) {
    total += c;
    if (c > 0) {
      ++occupied;
      ++by_count[c];
    }
  }
  if (total == 0) throw DataError("entropy of all-zero counts");
  if (occupied > alphabet_size) {
    throw DataError("alphabet size " + std::to_string(alphabet_size) + " is smaller than the " +
                    std::to_string(occupied) + " observed bins");
  }
  if (alphabet_size == 1) return {0.0, EntropyMethod::kNsb, 0.0};

  std::vector<CountGroup> groups;
  if (alphabet_size > occupied) {
    groups.push_back({0.0, static_cast<double>(alphabet_size - occupied)});
  }
  for (const auto& [c, m] : by_count) {
    groups.push_back({static_cast<double>(c), static_cast<double>(m)});
  }
  const NsbPosterior post(std::move(groups), static_cast<double>(alphabet_size),
                          static_cast<double>(total));
  const double top = post.max_xi();

  // Coarse scan for the posterior peak over xi.
  std::vector<double> grid(kGridPoints), grid_l(kGridPoints);
  std::size_t best = 0;
  for (std::size_t i = 0; i < kGridPoints; ++i) {
    grid[i] = top * (static_cast<double>(i) + 0.5) / static_cast<double>(kGridPoints);
    grid_l[i] = post.log_evidence_at_xi(grid[i]);
    if (grid_l[i] > grid_l[best]) best = i;
  }

  // Golden-section refinement inside the neighbouring grid cells.
  double a = best == 0 ? 0.0 : grid[best - 1];
  double b = best + 1 == kGridPoints ? top : grid[best + 1];
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = post.log_evidence_at_xi(c), fd = post.log_evidence_at_xi(d);
  for (int iter = 0; iter < 200 && (b - a) > 1e-14 * top; ++iter) {
    if (fc >= fd) {
      b = d; d = c; fd = fc;
      c = b - ratio * (b - a);
      fc = post.log_evidence_at_xi(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + ratio * (b - a);
      fd = post.log_evidence_at_xi(d);
    }
  }
  double peak = fc >= fd ? c : d;
  double peak_l = std::max(fc, fd);
  if (grid_l[best] > peak_l) {
    peak = grid[best];
    peak_l = grid_l[best];
  }

  // Support: where the log evidence has dropped by kSupportDrop.
  const double cutoff = peak_l - kSupportDrop;
  const auto bisect = [&](double inside, double outside) {
    for (int iter = 0; iter < 200 && std::abs(outside - inside) > 1e-15 * top; ++iter) {
      const double mid = 0.5 * (inside + outside);
      (post.log_evidence_at_xi(mid) > cutoff ? inside : outside) = mid;
    }
    return outside;
  };
  double lo = 0.0, hi = top;
  for (std::size_t i = 0; i < kGridPoints; ++i) {
    if (grid[i] < peak && grid_l[i] < cutoff) lo = grid[i];
  }
  for (std::size_t i = kGridPoints; i-- > 0;) {
    if (grid[i] > peak && grid_l[i] < cutoff) hi = grid[i];
  }
  if (lo > 0.0 || post.log_evidence_at_xi(0.0) < cutoff) lo = bisect(peak, lo);
  if (hi < top || post.log_evidence_at_xi(top) < cutoff) hi = bisect(peak, hi);

  const Moments fine = integrate(post, lo, hi, peak_l, kPanels);
  const Moments coarse = integrate(post, lo, hi, peak_l, kPanels / 2);
  if (!std::isfinite(fine.mean) || !std::isfinite(coarse.mean) ||
      std::abs(fine.mean - coarse.mean) > kTolerance * std::max(1.0, std::abs(fine.mean))) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "NSB quadrature did not converge (K=" << alphabet_size << ", N=" << total
        << ", xi range [" << lo << ", " << hi << "], peak " << peak << ", estimates "
        << fine.mean << " vs " << coarse.mean << " nats)";
    throw NumericalError(msg.str());
  }

  const double variance = std::max(0.0, fine.second - fine.mean * fine.mean);
  return {fine.mean / std::numbers::ln2, EntropyMethod::kNsb,
          std::sqrt(variance) / std::numbers::ln2};
}

}  // namespace texgram
