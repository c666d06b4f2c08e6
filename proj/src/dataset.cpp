#include "hpfl/dataset.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <utility>

#include "hpfl/rng.hpp"

namespace hpfl {

namespace {

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

constexpr int kMaxDim = 100'000'000;
constexpr std::uint64_t kMaxPayload = 2'000'000'000;

}  // namespace

RawTensor parse_idx(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) {
    throw IdxTruncatedError("idx: expected at least 4 header bytes, got " +
                            std::to_string(bytes.size()));
  }
  const std::uint32_t magic = read_be32(bytes.data());
  if ((magic >> 16) != 0 || ((magic >> 8) & 0xff) != 0x08) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", magic);
    throw IdxMagicError(std::string("idx: bad magic ") + buf +
                        " (want 0x00000803 images or 0x00000801 labels)");
  }
  const int ndims = magic & 0xff;
  if (ndims < 1 || ndims > 3) {
    throw IdxDimensionError("idx: unsupported dimension count " + std::to_string(ndims));
  }
  const std::size_t header = 4 + 4 * static_cast<std::size_t>(ndims);
  if (bytes.size() < header) {
    throw IdxTruncatedError("idx: expected " + std::to_string(header) +
                            " header bytes, got " + std::to_string(bytes.size()));
  }
  RawTensor t;
  std::uint64_t total = 1;
  for (int i = 0; i < ndims; ++i) {
    const std::uint32_t d = read_be32(bytes.data() + 4 + 4 * i);
    if (d == 0 || d > kMaxDim) {
      throw IdxDimensionError("idx: dimension " + std::to_string(i) + " = " +
                              std::to_string(d) + " out of range");
    }
    t.dims.push_back(static_cast<int>(d));
    total *= d;
    if (total > kMaxPayload) {
      throw IdxDimensionError("idx: payload size overflows limit (" +
                              std::to_string(total) + " elements)");
    }
  }
  const std::uint64_t got = bytes.size() - header;
  if (got != total) {
    throw IdxTruncatedError("idx: expected " + std::to_string(total) +
                            " payload bytes, got " + std::to_string(got));
  }
  t.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

std::vector<std::uint8_t> serialize_idx(const RawTensor& t) {
  if (t.dims.empty() || t.dims.size() > 3) {
    throw IdxDimensionError("idx: can only serialize 1-3 dimensions");
  }
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * t.dims.size() + t.bytes.size());
  write_be32(out, 0x0800u | static_cast<std::uint32_t>(t.dims.size()));
  std::uint64_t total = 1;
  for (int d : t.dims) {
    write_be32(out, static_cast<std::uint32_t>(d));
    total *= static_cast<std::uint64_t>(d);
  }
  if (total != t.bytes.size()) {
    throw IdxTruncatedError("idx: dims imply " + std::to_string(total) +
                            " payload bytes, have " + std::to_string(t.bytes.size()));
  }
  out.insert(out.end(), t.bytes.begin(), t.bytes.end());
  return out;
}

std::vector<std::uint8_t> gzip_compress(const std::vector<std::uint8_t>& bytes) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw std::runtime_error("gzip: deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, bytes.size()) + 32);
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw std::runtime_error("gzip: deflate failed");
  out.resize(out.size() - zs.avail_out);
  return out;
}

std::vector<std::uint8_t> gzip_decompress(const std::vector<std::uint8_t>& bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) {
    throw std::runtime_error("gzip: inflateInit2 failed");
  }
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> buf(1 << 20);
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  do {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw std::runtime_error("gzip: inflate failed (code " + std::to_string(rc) + ")");
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

RawTensor load_idx_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open dataset file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    bytes = gzip_decompress(bytes);
  }
  try {
    return parse_idx(bytes);
  } catch (const IdxMagicError& e) {
    throw IdxMagicError(path + ": " + e.what());
  } catch (const IdxTruncatedError& e) {
    throw IdxTruncatedError(path + ": " + e.what());
  } catch (const IdxDimensionError& e) {
    throw IdxDimensionError(path + ": " + e.what());
  }
}

MatrixF normalize(const RawTensor& images) {
  if (images.dims.size() != 3) {
    throw IdxDimensionError("normalize: expected 3-D image tensor, got " +
                            std::to_string(images.dims.size()) + "-D");
  }
  const int n = images.dims[0];
  const int d = images.dims[1] * images.dims[2];
  MatrixF m(n, d);
  for (std::size_t i = 0; i < images.bytes.size(); ++i) {
    m.v[i] = static_cast<float>(images.bytes[i]) / 255.0f;
  }
  return m;
}

std::vector<int> labels_from(const RawTensor& labels) {
  if (labels.dims.size() != 1) {
    throw IdxDimensionError("labels: expected 1-D tensor, got " +
                            std::to_string(labels.dims.size()) + "-D");
  }
  return std::vector<int>(labels.bytes.begin(), labels.bytes.end());
}

LabeledSet load_labeled(const std::string& images_path, const std::string& labels_path) {
  LabeledSet s;
  s.images = normalize(load_idx_file(images_path));
  s.labels = labels_from(load_idx_file(labels_path));
  if (s.images.rows != static_cast<int>(s.labels.size())) {
    throw std::runtime_error("dataset: " + std::to_string(s.images.rows) + " images vs " +
                             std::to_string(s.labels.size()) + " labels");
  }
  for (int l : s.labels) {
    if (l < 0 || l > 9) throw std::runtime_error("dataset: label " + std::to_string(l) +
                                                 " outside 0-9");
  }
  return s;
}

std::pair<UnlabeledSet, LabeledSet> split_at(const LabeledSet& train, std::uint64_t seed,
                                             int unlabeled_n) {
  const int n = train.size();
  if (unlabeled_n < 0 || unlabeled_n > n) {
    throw std::invalid_argument("split: unlabeled size " + std::to_string(unlabeled_n) +
                                " not in [0, " + std::to_string(n) + "]");
  }
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(idx);

  const int d = train.images.cols;
  UnlabeledSet u;
  u.images = MatrixF(unlabeled_n, d);
  LabeledSet l;
  l.images = MatrixF(n - unlabeled_n, d);
  l.labels.resize(n - unlabeled_n);
  for (int i = 0; i < unlabeled_n; ++i) {
    std::memcpy(u.images.row(i), train.images.row(idx[i]), sizeof(float) * d);
  }
  for (int i = unlabeled_n; i < n; ++i) {
    std::memcpy(l.images.row(i - unlabeled_n), train.images.row(idx[i]), sizeof(float) * d);
    l.labels[i - unlabeled_n] = train.labels[idx[i]];
  }
  return {std::move(u), std::move(l)};
}

std::pair<UnlabeledSet, LabeledSet> split_train(const LabeledSet& train, std::uint64_t seed) {
  if (train.size() != 60'000) {
    throw std::invalid_argument("split_train: expected exactly 60,000 pairs, got " +
                                std::to_string(train.size()));
  }
  return split_at(train, seed, 20'000);
}

LabeledSet take(const LabeledSet& s, int n) {
  if (n < 0 || n > s.size()) {
    throw std::invalid_argument("take: " + std::to_string(n) + " of " +
                                std::to_string(s.size()));
  }
  LabeledSet out;
  out.images = MatrixF(n, s.images.cols);
  std::memcpy(out.images.data(), s.images.data(),
              sizeof(float) * static_cast<std::size_t>(n) * s.images.cols);
  out.labels.assign(s.labels.begin(), s.labels.begin() + n);
  return out;
}

UnlabeledSet take(const UnlabeledSet& s, int n) {
  if (n < 0 || n > s.size()) {
    throw std::invalid_argument("take: " + std::to_string(n) + " of " +
                                std::to_string(s.size()));
  }
  UnlabeledSet out;
  out.images = MatrixF(n, s.images.cols);
  std::memcpy(out.images.data(), s.images.data(),
              sizeof(float) * static_cast<std::size_t>(n) * s.images.cols);
  return out;
}

MatrixF one_hot(const std::vector<int>& labels, int classes) {
  MatrixF t(static_cast<int>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw std::invalid_argument("one_hot: label " + std::to_string(labels[i]) +
                                  " outside [0, " + std::to_string(classes) + ")");
    }
    t(static_cast<int>(i), labels[i]) = 1.0f;
  }
  return t;
}

}  // namespace hpfl
