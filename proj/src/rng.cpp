#include "mhaar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mhaar {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline Philox4x32Counter philox_round(const Philox4x32Counter& c,
                                      const Philox4x32Key& k) {
  const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
  const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
  return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0],
          static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1],
          static_cast<std::uint32_t>(p0)};
}

void check_weights(std::span<const double> w, const char* what, double& total) {
  total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || std::isinf(x))
      throw std::invalid_argument(std::string("invalid weight in ") + what);
    total += x;
  }
  if (!(total > 0.0))
    throw std::invalid_argument(std::string("all weights zero in ") + what);
}

// Child stream that forwards every draw to the enumerator owning the path.
class ForwardingRng final : public Rng {
 public:
  explicit ForwardingRng(Rng& parent) : parent_(parent) {}
  double uniform(const char* w) override { return parent_.uniform(w); }
  double normal(const char* w) override { return parent_.normal(w); }
  double gamma(double s, const char* w) override { return parent_.gamma(s, w); }
  std::size_t choose(std::span<const double> p, const char* w) override {
    return parent_.choose(p, w);
  }
  std::vector<std::unique_ptr<Rng>> split(std::size_t n) override {
    return parent_.split(n);
  }
  bool concurrent() const override { return false; }

 private:
  Rng& parent_;
};

}  // namespace

Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) {
  ctr = philox_round(ctr, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kW0;
    key[1] += kW1;
    ctr = philox_round(ctr, key);
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632BE59BD9B4E019ull));
}

bool Rng::accept(double log_ratio, const char* what) {
  if (std::isnan(log_ratio))
    throw std::domain_error(std::string("NaN log ratio in ") + what);
  const double p = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
  const double w[2] = {p, 1.0 - p};
  return choose(w, what) == 0;
}

bool Rng::bernoulli(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument(std::string("probability out of range in ") + what);
  const double w[2] = {p, 1.0 - p};
  return choose(w, what) == 0;
}

std::size_t Rng::uniform_index(std::size_t n, const char* what) {
  std::vector<double> w(n, 1.0);
  return choose(w, what);
}

std::size_t Rng::categorical_log(std::span<const double> log_weights,
                                 const char* what) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double l : log_weights) {
    if (std::isnan(l)) throw std::domain_error(std::string("NaN weight in ") + what);
    mx = std::max(mx, l);
  }
  if (mx == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument(std::string("degenerate categorical in ") + what);
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - mx);
  return choose(w, what);
}

void Rng::choose_many(std::span<const double> weights, std::span<std::size_t> out,
                      const char* what) {
  for (auto& o : out) o = choose(weights, what);
}

void Rng::categorical_log_many(std::span<const double> log_weights, std::span<std::size_t> out,
                               const char* what) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double l : log_weights) {
    if (std::isnan(l)) throw std::domain_error(std::string("NaN weight in ") + what);
    mx = std::max(mx, l);
  }
  if (mx == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument(std::string("degenerate categorical in ") + what);
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - mx);
  choose_many(w, out, what);
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

StreamRng::result_type StreamRng::operator()() {
  if (used_ >= 4) {
    const Philox4x32Counter ctr{static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32),
                                static_cast<std::uint32_t>(stream_id_),
                                static_cast<std::uint32_t>(stream_id_ >> 32)};
    const Philox4x32Key key{static_cast<std::uint32_t>(seed_),
                            static_cast<std::uint32_t>(seed_ >> 32)};
    buf_ = philox4x32_10(ctr, key);
    ++block_;
    used_ = 0;
  }
  const std::uint64_t hi = buf_[used_];
  const std::uint64_t lo = buf_[used_ + 1];
  used_ += 2;
  return (hi << 32) | lo;
}

double StreamRng::uniform(const char*) {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double StreamRng::normal(const char*) { return normal_(*this); }

double StreamRng::gamma(double shape, const char*) {
  std::gamma_distribution<double> d(shape, 1.0);
  return d(*this);
}

std::size_t StreamRng::choose(std::span<const double> weights, const char* what) {
  double total;
  check_weights(weights, what, total);
  const double u = uniform() * total;
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cum += weights[i];
    last = i;
    if (cum > u) return i;
  }
  return last;
}

void StreamRng::choose_many(std::span<const double> weights, std::span<std::size_t> out,
                            const char* what) {
  double total;
  check_weights(weights, what, total);
  // running sums in the same order as choose(), so each draw agrees with it
  std::vector<double> cum(weights.size());
  double c = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) {
      c += weights[i];
      last = i;
    }
    cum[i] = c;
  }
  for (auto& o : out) {
    const double u = uniform() * total;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    o = it == cum.end() ? last : static_cast<std::size_t>(it - cum.begin());
  }
}

bool StreamRng::bernoulli(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument(std::string("probability out of range in ") + what);
  return uniform() < p;
}

std::size_t StreamRng::uniform_index(std::size_t n, const char* what) {
  if (n == 0) throw std::invalid_argument(std::string("empty range in ") + what);
  const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return std::min(i, n - 1);
}

std::vector<std::unique_ptr<Rng>> StreamRng::split(std::size_t n) {
  const std::uint64_t base = hash_combine(stream_id_, spawned_++);
  std::vector<std::unique_ptr<Rng>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(std::make_unique<StreamRng>(seed_, hash_combine(base, i)));
  return out;
}

double PathEnumerator::uniform(const char* what) { throw NotEnumerable(what); }
double PathEnumerator::normal(const char* what) { throw NotEnumerable(what); }
double PathEnumerator::gamma(double, const char* what) { throw NotEnumerable(what); }

void PathEnumerator::begin() {
  depth_ = 0;
  prob_ = 1.0;
}

bool PathEnumerator::admissible_after(const Frame& f, std::size_t& out) const {
  const std::size_t n = f.probs.size();
  if (!reverse_) {
    for (std::size_t i = f.choice + 1; i < n; ++i)
      if (f.probs[i] > 0.0) return out = i, true;
  } else {
    for (std::size_t i = f.choice; i-- > 0;)
      if (f.probs[i] > 0.0) return out = i, true;
  }
  return false;
}

std::size_t PathEnumerator::choose(std::span<const double> weights,
                                   const char* what) {
  double total;
  check_weights(weights, what, total);
  if (depth_ < stack_.size()) {
    Frame& f = stack_[depth_];
    if (f.probs.size() != weights.size())
      throw std::logic_error(std::string("path replay diverged at ") + what);
    ++depth_;
    prob_ *= weights[f.choice] / total;
    return f.choice;
  }
  Frame f;
  f.probs.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) f.probs[i] = weights[i] / total;
  const std::size_t n = weights.size();
  f.choice = n;
  if (!reverse_) {
    for (std::size_t i = 0; i < n; ++i)
      if (f.probs[i] > 0.0) { f.choice = i; break; }
  } else {
    for (std::size_t i = n; i-- > 0;)
      if (f.probs[i] > 0.0) { f.choice = i; break; }
  }
  prob_ *= f.probs[f.choice];
  const std::size_t c = f.choice;
  stack_.push_back(std::move(f));
  ++depth_;
  return c;
}

bool PathEnumerator::next() {
  stack_.resize(depth_);
  while (!stack_.empty()) {
    std::size_t alt;
    if (admissible_after(stack_.back(), alt)) {
      stack_.back().choice = alt;
      return true;
    }
    stack_.pop_back();
  }
  return false;
}

std::vector<std::unique_ptr<Rng>> PathEnumerator::split(std::size_t n) {
  std::vector<std::unique_ptr<Rng>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::make_unique<ForwardingRng>(*this));
  return out;
}

}  // namespace mhaar
