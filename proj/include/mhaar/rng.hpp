#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhaar {

// Philox4x32-10 block function.
using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

// Thrown by the path enumerator when a kernel asks for a continuous draw.
class NotEnumerable : public std::runtime_error {
 public:
  explicit NotEnumerable(const std::string& what)
      : std::runtime_error("draw is not enumerable: " + what) {}
};

// Source of randomness used by every kernel. Finite draws go through
// choose() so that a kernel can be enumerated exactly.
class Rng {
 public:
  virtual ~Rng() = default;

  // Uniform on the open interval (0,1).
  virtual double uniform(const char* what = "uniform") = 0;
  virtual double normal(const char* what = "normal") = 0;
  // Gamma with unit scale.
  virtual double gamma(double shape, const char* what = "gamma") = 0;
  // Index i with probability weights[i] / sum(weights). Weights need not
  // be normalised; zero weights are never selected.
  virtual std::size_t choose(std::span<const double> weights,
                             const char* what = "choose") = 0;
  // Independent child streams, one per estimator.
  virtual std::vector<std::unique_ptr<Rng>> split(std::size_t n) = 0;
  // Whether children may be consumed concurrently.
  virtual bool concurrent() const = 0;

  // Accept with probability min{1, exp(log_ratio)}.
  bool accept(double log_ratio, const char* what = "accept");
  virtual bool bernoulli(double p, const char* what = "bernoulli");
  virtual std::size_t uniform_index(std::size_t n, const char* what = "index");
  std::size_t categorical_log(std::span<const double> log_weights,
                              const char* what = "categorical");
  // out.size() independent draws from the same weights; each gives the
  // same result as one call to choose().
  virtual void choose_many(std::span<const double> weights, std::span<std::size_t> out,
                           const char* what = "choose");
  void categorical_log_many(std::span<const double> log_weights, std::span<std::size_t> out,
                            const char* what = "categorical");
};

// Counter-based stream. The key is the master seed, the high half of the
// counter is the stream id, the low half counts blocks.
class StreamRng final : public Rng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t stream_id);

  double uniform(const char* what = "uniform") override;
  double normal(const char* what = "normal") override;
  double gamma(double shape, const char* what = "gamma") override;
  std::size_t choose(std::span<const double> weights,
                     const char* what = "choose") override;
  void choose_many(std::span<const double> weights, std::span<std::size_t> out,
                   const char* what = "choose") override;
  std::vector<std::unique_ptr<Rng>> split(std::size_t n) override;
  bool concurrent() const override { return true; }
  bool bernoulli(double p, const char* what = "bernoulli") override;
  std::size_t uniform_index(std::size_t n, const char* what = "index") override;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // UniformRandomBitGenerator, so std distributions can run on the stream.
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::uint64_t spawned_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
  std::normal_distribution<double> normal_;
};

// Walks every finite random path of a procedure by depth-first replay.
// Each run() of the procedure follows the recorded prefix and then takes
// the first admissible outcome; next() advances to the following path.
class PathEnumerator final : public Rng {
 public:
  explicit PathEnumerator(bool reverse_order = false)
      : reverse_(reverse_order) {}

  double uniform(const char* what = "uniform") override;
  double normal(const char* what = "normal") override;
  double gamma(double shape, const char* what = "gamma") override;
  std::size_t choose(std::span<const double> weights,
                     const char* what = "choose") override;
  std::vector<std::unique_ptr<Rng>> split(std::size_t n) override;
  bool concurrent() const override { return false; }

  // Call before each replay of the procedure.
  void begin();
  // Probability of the path just replayed.
  double probability() const { return prob_; }
  // Moves to the next path; false once all paths have been visited.
  bool next();

 private:
  struct Frame {
    std::vector<double> probs;
    std::size_t choice;
  };
  bool admissible_after(const Frame& f, std::size_t& out) const;

  bool reverse_;
  std::vector<Frame> stack_;
  std::size_t depth_ = 0;
  double prob_ = 1.0;
};

// Calls run(rng) on every path and returns (probability, result) pairs.
template <class R, class Run>
std::vector<std::pair<double, R>> enumerate_outcomes(Run&& run,
                                                     bool reverse_order = false) {
  PathEnumerator e(reverse_order);
  std::vector<std::pair<double, R>> out;
  do {
    e.begin();
    R r = run(static_cast<Rng&>(e));
    out.emplace_back(e.probability(), std::move(r));
  } while (e.next());
  return out;
}

}  // namespace mhaar
