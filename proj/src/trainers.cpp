#include "hashlab/trainers.hpp"

#include "hashlab/errors.hpp"

namespace hashlab {

bool uses_pairs(Method method) {
  return method == Method::Splh || method == Method::Btsplh || method == Method::FastHash;
}

HashModel train_method(Method method, const LabeledDataset& data, const TrainConfig& config,
                       const SimilarityPairs* pairs) {
  static const SimilarityPairs no_pairs;
  const SimilarityPairs& p = pairs != nullptr ? *pairs : no_pairs;
  switch (method) {
    case Method::Truncation:
      config.validate();
      data.validate();
      if (config.code_length > data.code_length()) {
        throw InvalidArgument("truncation: code length " + std::to_string(config.code_length) +
                              " exceeds descriptor length " + std::to_string(data.code_length()));
      }
      return make_truncation_model(data.code_length(), config.code_length);
    case Method::Lsh:
      return train_lsh(data, config);
    case Method::Sh:
      return train_sh(data, config);
    case Method::Itq:
      return train_itq(data, config);
    case Method::IsoH:
      return train_isoh(data, config);
    case Method::Dsh:
      return train_dsh(data, config);
    case Method::Sph:
      return train_sph(data, config);
    case Method::Klsh:
      return train_klsh(data, config);
    case Method::Splh:
      return train_splh(data, p, config);
    case Method::Btsplh:
      return train_btsplh(data, p, config);
    case Method::FastHash:
      return train_fasthash(data, p, config);
  }
  throw InvalidArgument("unknown method");
}

}  // namespace hashlab
