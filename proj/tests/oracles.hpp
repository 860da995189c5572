#pragma once

// Independent brute-force implementations used as test oracles. None of
// these share code with the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <vector>

#include "mrinet/metrics.hpp"
#include "mrinet/preprocess.hpp"
#include "mrinet/rng.hpp"
#include "mrinet/tensor.hpp"

namespace oracle {

using mrinet::BasicTensor;
using mrinet::Label;
using mrinet::Shape;

// Direct 3x3 cross-correlation, zero padding 1, six nested loops.
template <typename T>
BasicTensor<T> conv3x3(const BasicTensor<T>& x, const BasicTensor<T>& w,
                       const BasicTensor<T>& b) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(0);
  BasicTensor<T> y({N, O, H, W});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
          double acc = b[o];
          for (std::size_t c = 0; c < C; ++c)
            for (int ki = 0; ki < 3; ++ki)
              for (int kj = 0; kj < 3; ++kj) {
                const long r = static_cast<long>(i) + ki - 1;
                const long s = static_cast<long>(j) + kj - 1;
                if (r < 0 || s < 0 || r >= static_cast<long>(H) || s >= static_cast<long>(W))
                  continue;
                acc += static_cast<double>(x[((n * C + c) * H + r) * W + s]) *
                       static_cast<double>(w[((o * C + c) * 3 + ki) * 3 + kj]);
              }
          y[((n * O + o) * H + i) * W + j] = static_cast<T>(acc);
        }
  return y;
}

template <typename T>
BasicTensor<T> random_tensor(const Shape& shape, mrinet::Rng& rng, double scale = 1.0) {
  BasicTensor<T> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal() * scale);
  return t;
}

// Central differences of f with respect to every element of `param`.
inline std::vector<double> numeric_grad(BasicTensor<double>& param,
                                        const std::function<double()>& f,
                                        double h = 1e-5) {
  std::vector<double> g(param.size());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param[i];
    param[i] = saved + h;
    const double up = f();
    param[i] = saved - h;
    const double down = f();
    param[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Largest elementwise |a - n| / max(|a|, |n|), with a floor on the
// denominator so entries that are zero in both stay finite.
inline double max_rel_error(const BasicTensor<double>& analytic,
                            const std::vector<double>& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), 1e-6});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

inline double weighted_sum(const BasicTensor<double>& y, const BasicTensor<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

// Mann-Whitney: P(score_pos > score_neg) + 0.5 P(tie) over all pairs.
inline double mann_whitney(const std::vector<mrinet::ScoredSample>& s) {
  double wins = 0.0;
  std::uint64_t pos = 0, neg = 0;
  for (const auto& a : s) (a.truth == Label::Yes ? pos : neg)++;
  for (const auto& a : s) {
    if (a.truth != Label::Yes) continue;
    for (const auto& b : s) {
      if (b.truth != Label::No) continue;
      if (a.score > b.score) wins += 1.0;
      else if (a.score == b.score) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

struct Counts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Counts count_at(const std::vector<mrinet::ScoredSample>& s, double t) {
  Counts c;
  for (const auto& a : s) {
    const bool yes = a.score >= t;
    if (a.truth == Label::Yes) (yes ? c.tp : c.fn)++;
    else (yes ? c.fp : c.tn)++;
  }
  return c;
}

inline std::vector<double> thresholds_desc(const std::vector<mrinet::ScoredSample>& s) {
  std::set<double, std::greater<>> t;
  for (const auto& a : s) t.insert(a.score);
  return {t.begin(), t.end()};
}

// Every threshold evaluated by direct counting.
inline std::vector<mrinet::RocPoint> roc(const std::vector<mrinet::ScoredSample>& s) {
  std::vector<mrinet::RocPoint> out{{HUGE_VAL, 0.0, 0.0}};
  for (double t : thresholds_desc(s)) {
    const Counts c = count_at(s, t);
    out.push_back({t, static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn),
                   static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)});
  }
  return out;
}

// Step-interpolated AP with long double accumulation.
inline double average_precision(const std::vector<mrinet::ScoredSample>& s) {
  long double ap = 0.0L;
  long double prev_recall = 0.0L;
  for (double t : thresholds_desc(s)) {
    const Counts c = count_at(s, t);
    const long double recall =
        static_cast<long double>(c.tp) / static_cast<long double>(c.tp + c.fn);
    const long double precision =
        static_cast<long double>(c.tp) / static_cast<long double>(c.tp + c.fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return static_cast<double>(ap);
}

// Kappa as an exact fraction num/den. Chance agreement enumerates all N^2
// (truth_i, prediction_j) pairs.
struct Fraction {
  __int128 num = 0;
  __int128 den = 1;
};

inline Fraction kappa(const std::vector<Label>& truth, const std::vector<Label>& pred) {
  const __int128 n = static_cast<__int128>(truth.size());
  __int128 agree = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) agree += truth[i] == pred[i] ? 1 : 0;
  __int128 chance_pairs = 0;
  for (Label t : truth)
    for (Label p : pred) chance_pairs += t == p ? 1 : 0;
  // (agree/n - chance/n^2) / (1 - chance/n^2)
  return {agree * n - chance_pairs, n * n - chance_pairs};
}

// 8-connected component sizes by flood fill, scanning row-major.
inline std::vector<std::size_t> component_sizes(const mrinet::BinaryMask& m) {
  std::vector<std::uint8_t> seen(m.bits.size(), 0);
  std::vector<std::size_t> sizes;
  for (std::size_t start = 0; start < m.bits.size(); ++start) {
    if (!m.bits[start] || seen[start]) continue;
    std::size_t size = 0;
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      const long r = static_cast<long>(p / m.width), c = static_cast<long>(p % m.width);
      for (long dr = -1; dr <= 1; ++dr)
        for (long dc = -1; dc <= 1; ++dc) {
          const long rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(m.height) ||
              cc >= static_cast<long>(m.width))
            continue;
          const std::size_t q = static_cast<std::size_t>(rr) * m.width + static_cast<std::size_t>(cc);
          if (m.bits[q] && !seen[q]) {
            seen[q] = 1;
            stack.push_back(q);
          }
        }
    }
    sizes.push_back(size);
  }
  return sizes;
}

inline std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace oracle
