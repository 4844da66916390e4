#include "chi2r/stat.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "chi2r/errors.hpp"
#include "summation.hpp"

namespace chi2r {

namespace {

void check_dimensions(const CellDistribution& d, const SampleCounts& c, const char* op) {
  if (d.cells() != c.cells()) {
    std::ostringstream msg;
    msg << op << ": counts are over " << c.cells() << " cells but the distribution has "
        << d.cells();
    throw InvalidInput(msg.str());
  }
}

// Counts from raw draws.  A dense tally is used when m is small relative to
// n; otherwise the draws are sorted and run-length encoded.
std::vector<CellCount> tally(std::vector<std::uint64_t> draws, std::uint64_t m) {
  std::vector<CellCount> out;
  if (m <= 4 * draws.size() && m <= kDenseCellCap) {
    std::vector<std::uint64_t> dense(m, 0);
    for (auto x : draws) ++dense[x - 1];
    for (std::uint64_t i = 0; i < m; ++i) {
      if (dense[i] != 0) out.push_back({i + 1, dense[i]});
    }
    return out;
  }
  std::sort(draws.begin(), draws.end());
  for (std::size_t k = 0; k < draws.size();) {
    std::size_t j = k;
    while (j < draws.size() && draws[j] == draws[k]) ++j;
    out.push_back({draws[k], j - k});
    k = j;
  }
  return out;
}

}  // namespace

SampleCounts::SampleCounts(std::uint64_t m, std::vector<CellCount> entries) : m_(m) {
  if (m == 0) throw InvalidParameter("SampleCounts: m must be at least 1");
  std::erase_if(entries, [](const CellCount& e) { return e.count == 0; });
  std::sort(entries.begin(), entries.end(),
            [](const CellCount& a, const CellCount& b) { return a.cell < b.cell; });
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].cell < 1 || entries[k].cell > m) {
      std::ostringstream msg;
      msg << "SampleCounts: cell index " << entries[k].cell << " outside 1.." << m;
      throw InvalidInput(msg.str());
    }
    if (k > 0 && entries[k].cell == entries[k - 1].cell) {
      std::ostringstream msg;
      msg << "SampleCounts: cell index " << entries[k].cell << " listed twice";
      throw InvalidInput(msg.str());
    }
    n_ += entries[k].count;
  }
  if (n_ == 0) throw InvalidInput("SampleCounts: total count must be positive");
  entries_ = std::move(entries);
}

SampleSequence::SampleSequence(std::uint64_t m, std::vector<std::uint64_t> values)
    : m_(m), values_(std::move(values)) {
  if (m == 0) throw InvalidParameter("SampleSequence: m must be at least 1");
  if (values_.empty()) throw InvalidInput("SampleSequence: sequence is empty");
  for (auto x : values_) {
    if (x < 1 || x > m) {
      std::ostringstream msg;
      msg << "SampleSequence: value " << x << " outside 1.." << m;
      throw InvalidInput(msg.str());
    }
  }
}

SampleCounts to_counts(const SampleSequence& s) {
  std::vector<std::uint64_t> draws(s.values().begin(), s.values().end());
  return SampleCounts(s.cells(), tally(std::move(draws), s.cells()));
}

std::string to_string(Convention convention) {
  return convention == Convention::theorem ? "theorem" : "classical";
}

Convention parse_convention(const std::string& text) {
  if (text == "theorem") return Convention::theorem;
  if (text == "classical") return Convention::classical;
  throw InvalidParameter("unknown standardization convention '" + text +
                         "' (expected theorem or classical)");
}

SampleCounts draw_counts(const CellDistribution& d, std::uint64_t n, Stream& stream) {
  if (n == 0) throw InvalidParameter("draw_counts: n must be at least 1");
  std::vector<std::uint64_t> draws(n);
  for (auto& x : draws) x = d.sample(stream);
  return SampleCounts(d.cells(), tally(std::move(draws), d.cells()));
}

SampleSequence draw_sequence(const CellDistribution& d, std::uint64_t n, Stream& stream) {
  if (n == 0) throw InvalidParameter("draw_sequence: n must be at least 1");
  std::vector<std::uint64_t> draws(n);
  for (auto& x : draws) x = d.sample(stream);
  return SampleSequence(d.cells(), std::move(draws));
}

double chi_square(const CellDistribution& d, const SampleCounts& c) {
  check_dimensions(d, c, "chi_square");
  if (d.family() == Family::custom) return chi_square_dense(d, c);

  const double n = static_cast<double>(c.n());
  detail::CompensatedSum occupied;
  detail::CompensatedSum occupied_mass;
  for (const auto& e : c.occupied()) {
    const double p = d.prob(e.cell);
    const double expected = n * p;
    const double diff = static_cast<double>(e.count) - expected;
    occupied.add(diff * diff / expected);
    occupied_mass.add(p);
  }
  // Each empty cell contributes (0 - n p_i)^2 / (n p_i) = n p_i.
  double empty_mass;
  if (d.is_uniform()) {
    const auto empty_cells = c.cells() - c.occupied().size();
    empty_mass = static_cast<double>(empty_cells) / static_cast<double>(c.cells());
  } else {
    empty_mass = std::max(0.0, 1.0 - occupied_mass.value());
  }
  return occupied.value() + n * empty_mass;
}

double chi_square_dense(const CellDistribution& d, const SampleCounts& c) {
  check_dimensions(d, c, "chi_square_dense");
  if (d.cells() > kDenseCellCap) {
    throw ResourceError("chi_square_dense: m exceeds the dense cap of 1e7 cells");
  }
  const double n = static_cast<double>(c.n());
  const auto occupied = c.occupied();
  std::size_t next = 0;
  detail::CompensatedSum sum;
  for (std::uint64_t i = 1; i <= d.cells(); ++i) {
    double count = 0.0;
    if (next < occupied.size() && occupied[next].cell == i) {
      count = static_cast<double>(occupied[next].count);
      ++next;
    }
    const double expected = n * d.prob(i);
    const double diff = count - expected;
    sum.add(diff * diff / expected);
  }
  return sum.value();
}

double u_statistic(const CellDistribution& d, const SampleCounts& c) {
  check_dimensions(d, c, "u_statistic");
  detail::CompensatedSum sum;
  for (const auto& e : c.occupied()) {
    if (e.count < 2) continue;
    const double pairs = static_cast<double>(e.count) * static_cast<double>(e.count - 1);
    sum.add(pairs * d.inv_prob(e.cell));
  }
  return sum.value();
}

double s_statistic(const CellDistribution& d, const SampleCounts& c) {
  check_dimensions(d, c, "s_statistic");
  if (d.is_uniform()) return static_cast<double>(c.n()) * static_cast<double>(c.cells());
  detail::CompensatedSum sum;
  for (const auto& e : c.occupied()) sum.add(static_cast<double>(e.count) * d.inv_prob(e.cell));
  return sum.value();
}

Chi2Breakdown decompose(const CellDistribution& d, const SampleCounts& c) {
  Chi2Breakdown b;
  b.chi2 = chi_square(d, c);
  b.u_stat = u_statistic(d, c);
  b.s_stat = s_statistic(d, c);
  b.n = c.n();
  b.m = c.cells();
  return b;
}

double standardize(double chi2, std::uint64_t m, Convention convention) {
  if (convention == Convention::classical) {
    if (m < 2) throw InvalidParameter("standardize: classical convention needs m >= 2");
    const double df = static_cast<double>(m - 1);
    return (chi2 - df) / std::sqrt(2.0 * df);
  }
  const double mm = static_cast<double>(m);
  return (chi2 - mm) / std::sqrt(2.0 * mm);
}

double standardize(const Chi2Breakdown& b, Convention convention) {
  return standardize(b.chi2, b.m, convention);
}

std::uint64_t collision_pairs(const SampleCounts& c) {
  std::uint64_t pairs = 0;
  for (const auto& e : c.occupied()) pairs += e.count * (e.count - 1) / 2;
  return pairs;
}

std::vector<double> sequential_a(const CellDistribution& d, const SampleSequence& s) {
  if (d.cells() != s.cells()) {
    throw InvalidInput("sequential_a: sequence and distribution disagree on m");
  }
  const double m = static_cast<double>(d.cells());
  std::vector<double> a(s.n(), 0.0);
  const auto values = s.values();

  auto fill = [&](auto& seen) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      auto& prior = seen[values[k]];
      a[k] = static_cast<double>(prior) * d.inv_prob(values[k]) / m;
      ++prior;
    }
  };
  if (d.cells() <= 4 * values.size() && d.cells() <= kDenseCellCap) {
    std::vector<std::uint64_t> seen(d.cells() + 1, 0);
    fill(seen);
  } else {
    std::unordered_map<std::uint64_t, std::uint64_t> seen;
    seen.reserve(values.size());
    fill(seen);
  }
  return a;
}

}  // namespace chi2r
