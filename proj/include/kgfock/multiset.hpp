#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

namespace kgfock {

/**
 * @brief Lexicographic ranking of sorted index tuples i_1 <= ... <= i_p over K symbols.
 *
 * These are the independent entries of a symmetric order-p tensor; there are
 * C(K+p-1, p) of them.
 */
class MultisetIndex {
 public:
  MultisetIndex(int K, int p) : K_(K), p_(p) {
    if (K <= 0 || p < 0) throw std::invalid_argument("MultisetIndex needs K > 0, p >= 0");
    // prefix_[len][v] = number of sorted tuples of length len+1 whose first entry is < v
    prefix_.assign(p > 0 ? p : 1, std::vector<std::uint64_t>(K + 1, 0));
    for (int len = 0; len < p; ++len) {
      for (int v = 0; v < K; ++v) prefix_[len][v + 1] = prefix_[len][v] + count(K - v, len);
    }
    size_ = count(K, p);
  }

  int symbols() const { return K_; }
  int order() const { return p_; }
  std::size_t size() const { return static_cast<std::size_t>(size_); }

  /// Number of sorted tuples of length len over `symbols` values.
  static std::uint64_t count(int symbols, int len) {
    if (len == 0) return 1;
    if (symbols <= 0) return 0;
    std::uint64_t c = 1;
    for (int j = 1; j <= len; ++j) c = c * static_cast<std::uint64_t>(symbols - 1 + j) / static_cast<std::uint64_t>(j);
    return c;
  }

  std::size_t rank(const int* idx) const {
    std::uint64_t r = 0;
    int prev = 0;
    for (int j = 0; j < p_; ++j) {
      const auto& tab = prefix_[p_ - 1 - j];
      r += tab[idx[j]] - tab[prev];
      prev = idx[j];
    }
    return static_cast<std::size_t>(r);
  }
  std::size_t rank(const std::vector<int>& idx) const { return rank(idx.data()); }

  std::vector<int> first() const { return std::vector<int>(p_, 0); }

  /// Advances to the lexicographic successor; false after the last tuple.
  bool next(std::vector<int>& idx) const {
    for (int j = p_ - 1; j >= 0; --j) {
      if (idx[j] < K_ - 1) {
        const int v = idx[j] + 1;
        for (int k = j; k < p_; ++k) idx[k] = v;
        return true;
      }
    }
    return false;
  }

  /// p! / prod(multiplicity!), the number of index orderings of a sorted tuple.
  static double multinomial(const int* idx, int p) {
    double w = 1.0;
    int run = 1;
    for (int j = 1; j <= p; ++j) {
      w *= j;
      if (j < p && idx[j] == idx[j - 1]) {
        ++run;
        w /= run;
      } else {
        run = 1;
      }
    }
    return w;
  }

 private:
  int K_;
  int p_;
  std::uint64_t size_ = 0;
  std::vector<std::vector<std::uint64_t>> prefix_;
};

/// Process-wide cache of rank tables keyed by (K, p).
inline const MultisetIndex& multiset_index(int K, int p) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<MultisetIndex>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{K, p}];
  if (!slot) slot = std::make_unique<MultisetIndex>(K, p);
  return *slot;
}

/**
 * @brief Rank of R + {a} among order-(L+1) tuples, for every order-L tuple R and symbol a.
 *
 * Stored row-major as table[rank(R) * K + a], together with the multiplicity of a in R + {a}.
 */
class ExtensionTable {
 public:
  ExtensionTable(int K, int L) : K_(K), L_(L) {
    const auto& src = multiset_index(K, L);
    const auto& dst = multiset_index(K, L + 1);
    rank_.resize(src.size() * K);
    mult_.resize(src.size() * K);
    std::vector<int> R = src.first();
    std::vector<int> m(L + 1);
    std::size_t r = 0;
    do {
      for (int a = 0; a < K; ++a) {
        int c = 1;
        int j = 0, k = 0;
        bool placed = false;
        while (k < L + 1) {
          if (!placed && (j == L || a <= R[j])) {
            m[k++] = a;
            placed = true;
          } else {
            if (R[j] == a) ++c;
            m[k++] = R[j++];
          }
        }
        rank_[r * K + a] = static_cast<std::uint32_t>(dst.rank(m));
        mult_[r * K + a] = static_cast<std::uint8_t>(c);
      }
      ++r;
    } while (src.next(R));
  }

  std::uint32_t rank(std::size_t row, int a) const { return rank_[row * K_ + a]; }
  int multiplicity(std::size_t row, int a) const { return mult_[row * K_ + a]; }
  const std::uint32_t* row(std::size_t r) const { return rank_.data() + r * K_; }

 private:
  int K_;
  int L_;
  std::vector<std::uint32_t> rank_;
  std::vector<std::uint8_t> mult_;
};

inline const ExtensionTable& extension_table(int K, int L) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<ExtensionTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{K, L}];
  if (!slot) slot = std::make_unique<ExtensionTable>(K, L);
  return *slot;
}

/**
 * @brief For every order-L tuple R and order-q tuple Q: rank of the merged tuple and the number of
 * ways to choose q positions of the merge carrying Q.
 */
class MergeTable {
 public:
  MergeTable(int K, int L, int q) : rows_(multiset_index(K, L).size()), cols_(multiset_index(K, q).size()) {
    const auto& iR = multiset_index(K, L);
    const auto& iQ = multiset_index(K, q);
    const auto& iM = multiset_index(K, L + q);
    rank_.resize(rows_ * cols_);
    weight_.resize(rows_ * cols_);
    std::vector<int> R = iR.first();
    std::vector<int> m(L + q);
    std::size_t r = 0;
    do {
      std::vector<int> Q = iQ.first();
      std::size_t c = 0;
      do {
        std::merge(R.begin(), R.end(), Q.begin(), Q.end(), m.begin());
        rank_[r * cols_ + c] = static_cast<std::uint32_t>(iM.rank(m));
        double w = 1.0;
        std::size_t j = 0;
        while (j < Q.size()) {
          std::size_t k = j;
          while (k < Q.size() && Q[k] == Q[j]) ++k;
          const int inQ = static_cast<int>(k - j);
          const int inM = static_cast<int>(std::count(m.begin(), m.end(), Q[j]));
          for (int i = 0; i < inQ; ++i) w = w * (inM - i) / (i + 1);
          j = k;
        }
        weight_[r * cols_ + c] = static_cast<float>(w);
        ++c;
      } while (iQ.next(Q));
      ++r;
    } while (iR.next(R));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::uint32_t* rank_row(std::size_t r) const { return rank_.data() + r * cols_; }
  const float* weight_row(std::size_t r) const { return weight_.data() + r * cols_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint32_t> rank_;
  std::vector<float> weight_;
};

inline const MergeTable& merge_table(int K, int L, int q) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, std::unique_ptr<MergeTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{K, L, q}];
  if (!slot) slot = std::make_unique<MergeTable>(K, L, q);
  return *slot;
}

}  // namespace kgfock
