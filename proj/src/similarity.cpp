#include <algorithm>
#include <charconv>
#include <map>
#include <ostream>
#include <string>

#include "hashlab/errors.hpp"
#include "hashlab/io.hpp"
#include "hashlab/rng.hpp"
#include "hashlab/scan.hpp"
#include "hashlab/supervised.hpp"

namespace hashlab {

namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Collects unordered pairs as packed (min, max) keys, deduplicating whenever the
// buffer grows so memory stays proportional to the cap.
class PairCollector {
 public:
  explicit PairCollector(std::size_t cap) : cap_(cap) {}

  void add(std::size_t a, std::size_t b) {
    if (a == b) return;
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    keys_.push_back((lo << 32) | hi);
    ++candidates_;
    if (keys_.size() > 2 * cap_ + 1024) compact();
  }

  /// Distinct keys in ascending order; the collector is empty afterwards.
  std::vector<std::uint64_t> finish() {
    compact();
    duplicates_ = candidates_ - keys_.size();
    return std::move(keys_);
  }

  std::size_t duplicates() const { return duplicates_; }

 private:
  void compact() {
    std::sort(keys_.begin(), keys_.end());
    keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
    if (keys_.size() > cap_) {
      throw InvalidArgument("similarity encoding exceeds the pair cap of " + std::to_string(cap_) + " pairs");
    }
  }

  std::size_t cap_;
  std::size_t candidates_ = 0;
  std::size_t duplicates_ = 0;
  std::vector<std::uint64_t> keys_;
};

}  // namespace

std::string EncodingScheme::name() const {
  switch (kind) {
    case Kind::None:
      return "none";
    case Kind::HardTriplets:
      return "hard";
    case Kind::Knn:
      return "knn:" + std::to_string(knn);
    case Kind::FastHashBudget:
      return "fasthash:" + std::to_string(knn) + ":" + std::to_string(dissimilar_budget);
  }
  return "none";
}

void EncodingScheme::validate() const {
  if ((kind == Kind::Knn || kind == Kind::FastHashBudget) && knn < 1) {
    throw InvalidArgument("encoding scheme: neighbour count must be >= 1");
  }
  if (kind == Kind::FastHashBudget && dissimilar_budget < 1) {
    throw InvalidArgument("encoding scheme: dissimilar budget must be >= 1");
  }
  if (max_pairs < 1) throw InvalidArgument("encoding scheme: pair cap must be >= 1");
}

std::optional<EncodingScheme> parse_scheme(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  const auto head = parts[0];
  std::vector<int> args;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto v = parse_int(parts[i]);
    if (!v || *v < 1) return std::nullopt;
    args.push_back(*v);
  }
  if ((head == "none" || head == "hard" || head == "hardtriplets") && args.empty()) {
    return head == "none" ? EncodingScheme::none() : EncodingScheme::hard_triplets();
  }
  if ((head == "knn" || head == "nn") && args.size() <= 1) {
    return EncodingScheme::nearest(args.empty() ? 20 : args[0]);
  }
  if (head == "20nn" && args.empty()) return EncodingScheme::nearest(20);
  if (head == "fasthash" && args.size() <= 2) {
    return EncodingScheme::fasthash(args.empty() ? 20 : args[0], args.size() < 2 ? 100 : args[1]);
  }
  return std::nullopt;
}

SimilarityPairs encode_similarity(const LabeledDataset& data, const EncodingScheme& scheme, std::uint64_t seed) {
  data.validate();
  scheme.validate();
  SimilarityPairs out;
  if (scheme.kind == EncodingScheme::Kind::None) return out;
  const std::size_t n = data.size();
  if (n > (std::size_t{1} << 32)) throw InvalidArgument("similarity encoding supports at most 2^32 records");

  const PackedCodes codes(data.descriptors);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  PairCollector collect(scheme.max_pairs);

  switch (scheme.kind) {
    case EncodingScheme::Kind::None:
      break;
    case EncodingScheme::Kind::HardTriplets: {
      const auto hits = parallel::closest_by_label(codes, data.labels, all);
      for (std::size_t i = 0; i < n; ++i) {
        if (hits[i].same == LabelledNeighbours::npos) {
          ++out.skipped_singletons;
          continue;
        }
        collect.add(i, hits[i].same);
        if (hits[i].other != LabelledNeighbours::npos) collect.add(i, hits[i].other);
      }
      break;
    }
    case EncodingScheme::Kind::Knn: {
      const auto nn = parallel::knn(codes, all, static_cast<std::size_t>(scheme.knn));
      for (std::size_t i = 0; i < n; ++i) {
        for (auto j : nn[i]) collect.add(i, j);
      }
      break;
    }
    case EncodingScheme::Kind::FastHashBudget: {
      const auto nn = parallel::knn(codes, all, static_cast<std::size_t>(scheme.knn));
      for (std::size_t i = 0; i < n; ++i) {
        for (auto j : nn[i]) collect.add(i, j);
      }

      // Every same-label pair.
      std::vector<std::size_t> order = all;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return data.labels[a] < data.labels[b]; });
      std::map<Label, std::size_t> label_count;
      for (std::size_t g = 0; g < n;) {
        std::size_t end = g;
        while (end < n && data.labels[order[end]] == data.labels[order[g]]) ++end;
        label_count[data.labels[order[g]]] = end - g;
        for (std::size_t a = g; a < end; ++a) {
          for (std::size_t b = a + 1; b < end; ++b) collect.add(order[a], order[b]);
        }
        g = end;
      }

      // Random other-label partners, drawn in record order from one stream; all of
      // them when there are no more than the budget.
      Rng rng(seed);
      const auto budget = static_cast<std::size_t>(scheme.dissimilar_budget);
      std::vector<std::size_t> picked;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t others = n - label_count[data.labels[i]];
        picked.clear();
        if (others <= budget) {
          for (std::size_t j = 0; j < n; ++j) {
            if (data.labels[j] != data.labels[i]) picked.push_back(j);
          }
        } else {
          while (picked.size() < budget) {
            const auto j = static_cast<std::size_t>(rng.index(n));
            if (data.labels[j] == data.labels[i]) continue;
            if (std::find(picked.begin(), picked.end(), j) != picked.end()) continue;
            picked.push_back(j);
          }
        }
        for (auto j : picked) collect.add(i, j);
      }
      break;
    }
  }

  const auto keys = collect.finish();
  out.duplicates = collect.duplicates();
  out.pairs.reserve(keys.size());
  for (auto k : keys) {
    Pair p;
    p.i = static_cast<std::uint32_t>(k >> 32);
    p.j = static_cast<std::uint32_t>(k & 0xffffffffu);
    p.relation = data.labels[p.i] == data.labels[p.j] ? Relation::Similar : Relation::Dissimilar;
    out.pairs.push_back(p);
  }
  return out;
}

void write_pairs_csv(const SimilarityPairs& pairs, std::ostream& out) {
  out << "i,j,relation\n";
  for (const auto& p : pairs.pairs) {
    out << p.i << ',' << p.j << ',' << (p.relation == Relation::Similar ? "similar" : "dissimilar") << '\n';
  }
}

void save_pairs_csv(const SimilarityPairs& pairs, const std::filesystem::path& path) {
  write_file_atomically(path, [&](std::ostream& out) { write_pairs_csv(pairs, out); });
}

}  // namespace hashlab
