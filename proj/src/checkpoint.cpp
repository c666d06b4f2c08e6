#include "hpfl/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace hpfl {

namespace {

using nlohmann::json;

const char kMagic[4] = {'H', 'P', 'F', 'L'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (pos + n > bytes.size()) {
      throw std::runtime_error(std::string("checkpoint truncated reading ") + what);
    }
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v =
        static_cast<std::uint16_t>(bytes[pos]) | (static_cast<std::uint16_t>(bytes[pos + 1]) << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

// per-layer bit order: W row-major, then b, LSB-first
void pack_mask_layer(std::vector<std::uint8_t>& out, const MaskLayer& layer) {
  std::uint8_t cur = 0;
  int nbits = 0;
  auto push_bit = [&](std::uint8_t bit) {
    cur |= static_cast<std::uint8_t>((bit & 1) << nbits);
    if (++nbits == 8) {
      out.push_back(cur);
      cur = 0;
      nbits = 0;
    }
  };
  for (std::uint8_t b : layer.w.v) push_bit(b);
  for (std::uint8_t b : layer.b) push_bit(b);
  if (nbits > 0) out.push_back(cur);
}

void unpack_mask_layer(Reader& r, MaskLayer& layer) {
  const std::size_t bits = layer.w.size() + layer.b.size();
  const std::size_t nbytes = (bits + 7) / 8;
  r.need(nbytes, "mask");
  std::size_t bit = 0;
  auto next_bit = [&]() -> std::uint8_t {
    const std::uint8_t v = (r.bytes[r.pos + bit / 8] >> (bit % 8)) & 1;
    ++bit;
    return v;
  };
  for (auto& m : layer.w.v) m = next_bit();
  for (auto& m : layer.b) m = next_bit();
  r.pos += nbytes;
}

}  // namespace

std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& c) {
  c.arch.validate();
  if (!c.params.shape_matches(c.arch) || !shape_matches(c.params, c.mask)) {
    throw std::invalid_argument("checkpoint: shape mismatch");
  }
  json meta = c.meta;
  json acts = json::array();
  for (Activation a : c.arch.activations) acts.push_back(std::string(to_string(a)));
  meta["activations"] = std::move(acts);
  const std::string meta_str = meta.dump();

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(c.arch.layer_dims.size()));
  for (int d : c.arch.layer_dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (const MaskLayer& layer : c.mask.layers) pack_mask_layer(out, layer);
  for (const Layer<float>& layer : c.params.layers) {
    for (float v : layer.w.v) put_f32(out, v);
    for (float v : layer.b) put_f32(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(meta_str.size()));
  out.insert(out.end(), meta_str.begin(), meta_str.end());
  return out;
}

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes};
  r.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic (not an HPFL checkpoint)");
  }
  r.pos = 4;
  const std::uint16_t version = r.u16("version");
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) +
                             " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t dim_count = r.u32("dim count");
  if (dim_count < 2 || dim_count > 64) {
    throw std::runtime_error("checkpoint: implausible dim count " + std::to_string(dim_count));
  }
  Checkpoint c;
  for (std::uint32_t i = 0; i < dim_count; ++i) {
    const std::uint32_t d = r.u32("dims");
    if (d == 0 || d > 1'000'000) {
      throw std::runtime_error("checkpoint: implausible layer dim " + std::to_string(d));
    }
    c.arch.layer_dims.push_back(static_cast<int>(d));
  }
  // activations arrive in the metadata; parse the fixed-size sections first
  Architecture dims_only = c.arch;
  dims_only.activations.assign(dim_count - 1, Activation::linear);
  c.mask = Mask::ones(dims_only);
  c.params = ParamSetF::zeros(dims_only);
  for (MaskLayer& layer : c.mask.layers) unpack_mask_layer(r, layer);
  for (Layer<float>& layer : c.params.layers) {
    for (float& v : layer.w.v) v = r.f32("params");
    for (float& v : layer.b) v = r.f32("params");
  }
  const std::uint32_t meta_len = r.u32("meta length");
  r.need(meta_len, "metadata");
  try {
    c.meta = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(r.pos + meta_len));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: bad metadata JSON: ") + e.what());
  }
  r.pos += meta_len;
  if (r.pos != bytes.size()) {
    throw std::runtime_error("checkpoint: " + std::to_string(bytes.size() - r.pos) +
                             " trailing bytes");
  }

  if (!c.meta.contains("activations")) {
    throw std::runtime_error("checkpoint: metadata missing activations");
  }
  for (const json& a : c.meta["activations"]) {
    c.arch.activations.push_back(activation_from_string(a.get<std::string>()));
  }
  c.meta.erase("activations");
  c.arch.validate();
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  const std::vector<std::uint8_t> bytes = checkpoint_bytes(c);
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f.flush()) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_checkpoint(bytes);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace hpfl
