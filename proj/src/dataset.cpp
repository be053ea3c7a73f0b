#include "hashlab/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hashlab/errors.hpp"
#include "hashlab/io.hpp"
#include "hashlab/rng.hpp"

namespace hashlab {

void LabeledDataset::validate() const {
  if (descriptors.empty()) throw InvalidArgument("dataset is empty");
  if (descriptors.size() != labels.size()) {
    throw InvalidArgument("dataset has " + std::to_string(descriptors.size()) + " descriptors but " +
                          std::to_string(labels.size()) + " labels");
  }
  const int len = descriptors.front().length();
  if (len < 1) throw InvalidArgument("dataset descriptors have zero length");
  for (const auto& d : descriptors) {
    if (d.length() != len) throw InvalidArgument("dataset descriptors have mixed lengths");
  }
}

LabeledDataset LabeledDataset::select(const std::vector<std::size_t>& indices) const {
  LabeledDataset out;
  out.descriptors.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    out.descriptors.push_back(descriptors.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

void SyntheticConfig::validate() const {
  if (n_landmarks < 2) throw InvalidArgument("synthetic: n_landmarks must be >= 2");
  if (min_per_landmark < 1 || max_per_landmark < min_per_landmark) {
    throw InvalidArgument("synthetic: need 1 <= min_per_landmark <= max_per_landmark");
  }
  if (!(base_flip_prob >= 0.0 && base_flip_prob < 0.5)) {
    throw InvalidArgument("synthetic: base flip probability must be in [0, 0.5)");
  }
  if (!(flip_prob_slope >= 0.0 && flip_prob_slope < 0.5)) {
    throw InvalidArgument("synthetic: flip probability slope must be in [0, 0.5)");
  }
  if (descriptor_length < 1 || descriptor_length > kMaxBits) {
    throw InvalidArgument("synthetic: descriptor length must be in [1, 512]");
  }
}

double SyntheticConfig::flip_probability(int bit) const {
  return std::min(0.49, base_flip_prob + flip_prob_slope * bit);
}

LabeledDataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const int len = config.descriptor_length;
  std::vector<double> flip(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) flip[static_cast<std::size_t>(i)] = config.flip_probability(i);

  LabeledDataset out;
  for (int l = 0; l < config.n_landmarks; ++l) {
    BinaryCode centroid(len);
    for (int i = 0; i < len; ++i) centroid.set_bit(i, rng.next_u64() >> 63);
    const auto count = rng.range(config.min_per_landmark, config.max_per_landmark);
    for (std::int64_t c = 0; c < count; ++c) {
      BinaryCode d = centroid;
      for (int i = 0; i < len; ++i) {
        if (rng.bernoulli(flip[static_cast<std::size_t>(i)])) d.set_bit(i, !d.bit(i));
      }
      out.descriptors.push_back(d);
      out.labels.push_back(static_cast<Label>(l));
    }
  }
  return out;
}

void write_dataset(const LabeledDataset& dataset, std::ostream& out) {
  dataset.validate();
  const int len = dataset.code_length();
  out.write("BHDS", 4);
  binio::put_u16(out, kDatasetVersion);
  binio::put_u16(out, static_cast<std::uint16_t>(len));
  binio::put_u64(out, dataset.size());
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(bytes_for_bits(len)));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    binio::put_u64(out, dataset.labels[i]);
    dataset.descriptors[i].to_bytes(bytes);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
}

LabeledDataset read_dataset(std::istream& in) {
  using Kind = FormatError::Kind;
  char magic[4];
  binio::get_bytes(in, magic, 4);
  if (std::memcmp(magic, "BHDS", 4) != 0) throw FormatError(Kind::BadMagic, "not a BHDS file (bad magic)");
  const auto version = binio::get_u16(in);
  if (version != kDatasetVersion) {
    throw FormatError(Kind::BadVersion, "unsupported BHDS version " + std::to_string(version));
  }
  const int len = binio::get_u16(in);
  if (len < 1 || len > kMaxBits) {
    throw FormatError(Kind::Inconsistent, "BHDS descriptor length " + std::to_string(len) + " outside [1, 512]");
  }
  const auto count = binio::get_u64(in);
  if (count == 0) throw FormatError(Kind::Inconsistent, "BHDS file declares zero records");

  const auto nbytes = static_cast<std::size_t>(bytes_for_bits(len));
  LabeledDataset out;
  std::vector<std::uint8_t> bytes(nbytes);
  for (std::uint64_t r = 0; r < count; ++r) {
    try {
      out.labels.push_back(binio::get_u64(in));
      binio::get_bytes(in, reinterpret_cast<char*>(bytes.data()), nbytes);
    } catch (const FormatError&) {
      throw FormatError(Kind::Truncated, "BHDS file truncated: header declares " + std::to_string(count) +
                                             " records, found " + std::to_string(r));
    }
    // Padding bits in the last byte must be zero.
    if (len % 8 != 0 && (bytes.back() & ((1u << (8 - len % 8)) - 1)) != 0) {
      throw FormatError(Kind::Inconsistent, "BHDS record " + std::to_string(r) + " has nonzero padding bits");
    }
    out.descriptors.push_back(BinaryCode::from_bytes(bytes, len));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(Kind::Inconsistent, "BHDS file has trailing bytes beyond the declared record count");
  }
  return out;
}

void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& path) {
  write_file_atomically(path, [&](std::ostream& out) { write_dataset(dataset, out); });
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return read_dataset(in);
}

void export_csv(const LabeledDataset& dataset, std::ostream& out) {
  out << "label,hex_descriptor\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.labels[i] << ',' << to_hex(dataset.descriptors[i]) << '\n';
  }
}

std::pair<LabeledDataset, LabeledDataset> split_by_landmark(const LabeledDataset& dataset,
                                                            double train_fraction,
                                                            std::uint64_t seed) {
  dataset.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split: train fraction must be in (0, 1)");
  }
  std::map<Label, std::size_t> counts;
  for (auto l : dataset.labels) ++counts[l];
  if (counts.size() < 2) throw InvalidArgument("split: dataset needs at least two distinct labels");

  std::vector<Label> order;
  order.reserve(counts.size());
  for (const auto& [label, _] : counts) order.push_back(label);
  Rng rng(seed);
  rng.shuffle(order);

  const double total = static_cast<double>(dataset.size());
  std::unordered_set<Label> train_labels;
  std::size_t taken = 0;
  // The last label always goes to the test side.
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    train_labels.insert(order[i]);
    taken += counts[order[i]];
    if (static_cast<double>(taken) / total >= train_fraction) break;
  }

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (train_labels.contains(dataset.labels[i]) ? train_idx : test_idx).push_back(i);
  }
  return {dataset.select(train_idx), dataset.select(test_idx)};
}

std::vector<std::size_t> sample_queries(const LabeledDataset& dataset, std::size_t n,
                                        bool require_mate, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample_queries: n must be >= 1");
  std::vector<std::size_t> eligible;
  if (require_mate) {
    std::unordered_map<Label, std::size_t> counts;
    for (auto l : dataset.labels) ++counts[l];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (counts[dataset.labels[i]] >= 2) eligible.push_back(i);
    }
    if (eligible.empty()) throw InvalidArgument("sample_queries: no record has a same-label mate");
  } else {
    eligible.resize(dataset.size());
    for (std::size_t i = 0; i < eligible.size(); ++i) eligible[i] = i;
  }
  if (n >= eligible.size()) return eligible;

  Rng rng(seed);
  auto picks = rng.sample_without_replacement(eligible.size(), n);
  std::vector<std::size_t> out;
  out.reserve(n);
  for (auto p : picks) out.push_back(eligible[p]);
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t fingerprint(const LabeledDataset& dataset) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(dataset.code_length()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    mix(dataset.labels[i]);
    for (auto w : dataset.descriptors[i].words()) mix(w);
  }
  return h;
}

DatasetSummary summarize(const LabeledDataset& dataset, std::uint64_t seed) {
  dataset.validate();
  DatasetSummary s;
  s.records = dataset.size();
  std::map<Label, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.size(); ++i) groups[dataset.labels[i]].push_back(i);
  s.distinct_labels = groups.size();

  double intra_sum = 0.0;
  std::size_t intra_n = 0;
  for (const auto& [_, idx] : groups) {
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        intra_sum += hamming(dataset.descriptors[idx[a]], dataset.descriptors[idx[b]]);
        ++intra_n;
      }
    }
  }
  s.mean_intra_distance = intra_n ? intra_sum / static_cast<double>(intra_n) : 0.0;

  if (groups.size() >= 2) {
    Rng rng(seed);
    double inter_sum = 0.0;
    std::size_t inter_n = 0;
    const std::size_t target = 20000;
    for (std::size_t attempt = 0; attempt < 4 * target && inter_n < target; ++attempt) {
      const auto a = static_cast<std::size_t>(rng.index(dataset.size()));
      const auto b = static_cast<std::size_t>(rng.index(dataset.size()));
      if (dataset.labels[a] == dataset.labels[b]) continue;
      inter_sum += hamming(dataset.descriptors[a], dataset.descriptors[b]);
      ++inter_n;
    }
    s.mean_inter_distance = inter_n ? inter_sum / static_cast<double>(inter_n) : 0.0;
  }
  return s;
}

bool labels_overlap(const LabeledDataset& a, const LabeledDataset& b) {
  std::unordered_set<Label> left(a.labels.begin(), a.labels.end());
  return std::any_of(b.labels.begin(), b.labels.end(), [&](Label l) { return left.contains(l); });
}

}  // namespace hashlab
