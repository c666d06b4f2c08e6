#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpfl/matrix.hpp"

namespace hpfl {

struct IdxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IdxMagicError : IdxError {
  using IdxError::IdxError;
};
struct IdxTruncatedError : IdxError {
  using IdxError::IdxError;
};
struct IdxDimensionError : IdxError {
  using IdxError::IdxError;
};

// Raw IDX tensor: unsigned-byte payload plus its dimension sizes.
struct RawTensor {
  std::vector<int> dims;
  std::vector<std::uint8_t> bytes;

  friend bool operator==(const RawTensor&, const RawTensor&) = default;
};

// IDX container: 0x00000803 magic for 3-D image files, 0x00000801 for 1-D
// label files, big-endian 32-bit dimension sizes, then the payload.
RawTensor parse_idx(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> serialize_idx(const RawTensor& t);

// zlib wrappers; gzip_decompress handles the gzip header/trailer framing.
std::vector<std::uint8_t> gzip_compress(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> gzip_decompress(const std::vector<std::uint8_t>& bytes);

// Reads a file, transparently gunzipping when it starts with the gzip magic.
RawTensor load_idx_file(const std::string& path);

// pixel/255 and row-major flatten of an n x h x w image tensor.
MatrixF normalize(const RawTensor& images);
std::vector<int> labels_from(const RawTensor& labels);

struct LabeledSet {
  MatrixF images;           // n x d, values in [0,1]
  std::vector<int> labels;  // class indices

  int size() const { return images.rows; }
};

struct UnlabeledSet {
  MatrixF images;

  int size() const { return images.rows; }
};

// Loads an image/label IDX file pair; counts must agree, labels must be 0-9.
LabeledSet load_labeled(const std::string& images_path, const std::string& labels_path);

// Shuffles indices with the seed and peels off the first unlabeled_n examples
// as unlabeled data; the rest stay labeled.
std::pair<UnlabeledSet, LabeledSet> split_at(const LabeledSet& train, std::uint64_t seed,
                                             int unlabeled_n);

// The standard split: 60,000 training pairs -> 20,000 unlabeled + 40,000 labeled.
std::pair<UnlabeledSet, LabeledSet> split_train(const LabeledSet& train, std::uint64_t seed);

LabeledSet take(const LabeledSet& s, int n);
UnlabeledSet take(const UnlabeledSet& s, int n);

// n x classes one-hot targets; throws if a label falls outside [0, classes).
MatrixF one_hot(const std::vector<int>& labels, int classes);

}  // namespace hpfl
