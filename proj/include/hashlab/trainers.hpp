#pragma once

#include "hashlab/dataset.hpp"
#include "hashlab/hash_model.hpp"
#include "hashlab/supervised.hpp"
#include "hashlab/train_config.hpp"
#include "hashlab/unsupervised.hpp"

namespace hashlab {

/// SPLH and BTSPLH take pairs optionally, FastHash requires them.
bool uses_pairs(Method method);

/**
 * Trains `method` at config.code_length. `pairs` is ignored by methods that do not
 * use them; a null pointer means no pairs. Truncation needs no training and
 * returns the prefix model.
 */
HashModel train_method(Method method, const LabeledDataset& data, const TrainConfig& config,
                       const SimilarityPairs* pairs = nullptr);

}  // namespace hashlab
