#include "hpfl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "hpfl/rng.hpp"

namespace hpfl {

namespace {

constexpr int kSide = 28;
constexpr int kPixels = kSide * kSide;

using Stroke = std::vector<std::pair<double, double>>;

// Fixed skeletons, one per digit, as polylines in the 28x28 box. Keeping the
// ten shapes structurally distinct is what makes the corpus learnable; the
// per-seed anchor jitter below varies the handwriting without merging classes.
std::vector<Stroke> digit_skeleton(int digit) {
  switch (digit) {
    case 0: {
      Stroke ring;
      for (int i = 0; i <= 12; ++i) {
        const double a = 2.0 * M_PI * i / 12;
        ring.push_back({14 + 5.0 * std::sin(a), 14 - 8.0 * std::cos(a)});
      }
      return {ring};
    }
    case 1:
      return {{{11, 8}, {14, 5}, {14, 23}}};
    case 2:
      return {{{9, 8}, {12, 5}, {16, 5}, {19, 8}, {19, 11}, {9, 21}, {9, 23}, {19, 23}}};
    case 3:
      return {{{9, 6}, {13, 4}, {17, 6}, {18, 9}, {14, 13}},
              {{14, 13}, {18, 16}, {18, 20}, {13, 23}, {9, 21}}};
    case 4:
      return {{{15, 4}, {8, 16}, {20, 16}}, {{16, 8}, {16, 23}}};
    case 5:
      return {{{18, 5}, {9, 5}, {9, 12}, {15, 12}, {18, 15}, {18, 19}, {14, 23}, {9, 21}}};
    case 6:
      return {{{17, 4}, {11, 9}, {9, 15}, {9, 19}, {12, 23}, {16, 23}, {18, 19}, {18, 15},
               {14, 12}, {9, 15}}};
    case 7:
      return {{{9, 5}, {19, 5}, {13, 23}}, {{11, 14}, {17, 14}}};
    case 8: {
      Stroke top, bottom;
      for (int i = 0; i <= 10; ++i) {
        const double a = 2.0 * M_PI * i / 10;
        top.push_back({14 + 4.0 * std::sin(a), 8.5 - 4.0 * std::cos(a)});
        bottom.push_back({14 + 5.0 * std::sin(a), 18.0 - 5.0 * std::cos(a)});
      }
      return {top, bottom};
    }
    default: {  // 9
      Stroke ring;
      for (int i = 0; i <= 10; ++i) {
        const double a = 2.0 * M_PI * i / 10;
        ring.push_back({14 + 4.5 * std::sin(a), 9.5 - 4.5 * std::cos(a)});
      }
      return {ring, {{18.5, 9.5}, {17, 23}}};
    }
  }
}

// Renders one digit's blurred-stroke prototype; the seed nudges the anchors
// so different corpora get different handwriting for the same class.
std::vector<float> make_prototype(std::uint64_t seed, int digit) {
  Rng rng(derive_seed(seed, "synth_proto", static_cast<std::uint64_t>(digit)));
  std::vector<Stroke> strokes = digit_skeleton(digit);
  for (Stroke& s : strokes) {
    for (auto& [x, y] : s) {
      x += rng.gaussian(0.0, 0.6);
      y += rng.gaussian(0.0, 0.6);
    }
  }
  std::vector<float> img(kPixels, 0.0f);
  const double radius = rng.uniform(1.0, 1.4);
  for (const Stroke& s : strokes) {
    for (std::size_t a = 0; a + 1 < s.size(); ++a) {
      const double len = std::hypot(s[a + 1].first - s[a].first, s[a + 1].second - s[a].second);
      const int steps = std::max(2, static_cast<int>(len * 2));
      for (int t = 0; t <= steps; ++t) {
        const double f = static_cast<double>(t) / steps;
        const double cx = s[a].first + f * (s[a + 1].first - s[a].first);
        const double cy = s[a].second + f * (s[a + 1].second - s[a].second);
        for (int y = 0; y < kSide; ++y) {
          for (int x = 0; x < kSide; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            img[y * kSide + x] += static_cast<float>(std::exp(-d2 / (2 * radius * radius)));
          }
        }
      }
    }
  }
  const float mx = *std::max_element(img.begin(), img.end());
  if (mx > 0) {
    for (float& p : img) p = std::min(1.0f, p / mx);
  }
  return img;
}

}  // namespace

LabeledSet make_synthetic_digits(int n, std::uint64_t seed) {
  std::vector<std::vector<float>> protos;
  protos.reserve(10);
  for (int c = 0; c < 10; ++c) protos.push_back(make_prototype(seed, c));

  Rng rng(derive_seed(seed, "synth_samples"));
  LabeledSet out;
  out.images = MatrixF(n, kPixels);
  out.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.index(10));
    out.labels[i] = c;
    const int dx = static_cast<int>(rng.index(5)) - 2;
    const int dy = static_cast<int>(rng.index(5)) - 2;
    const float scale = static_cast<float>(rng.uniform(0.75, 1.0));
    float* row = out.images.row(i);
    const std::vector<float>& proto = protos[c];
    for (int y = 0; y < kSide; ++y) {
      for (int x = 0; x < kSide; ++x) {
        const int sx = x - dx;
        const int sy = y - dy;
        float p = 0.0f;
        if (sx >= 0 && sx < kSide && sy >= 0 && sy < kSide) {
          p = proto[sy * kSide + sx] * scale;
        }
        p += static_cast<float>(rng.gaussian(0.0, 0.05));
        p = std::clamp(p, 0.0f, 1.0f);
        // snap to the 8-bit grid so IDX round-trips are lossless
        row[y * kSide + x] = std::round(p * 255.0f) / 255.0f;
      }
    }
  }
  return out;
}

std::pair<RawTensor, RawTensor> make_synthetic_idx(int n, std::uint64_t seed) {
  const LabeledSet set = make_synthetic_digits(n, seed);
  RawTensor images;
  images.dims = {n, kSide, kSide};
  images.bytes.resize(static_cast<std::size_t>(n) * kPixels);
  for (std::size_t i = 0; i < images.bytes.size(); ++i) {
    images.bytes[i] = static_cast<std::uint8_t>(std::lround(set.images.v[i] * 255.0f));
  }
  RawTensor labels;
  labels.dims = {n};
  labels.bytes.resize(n);
  for (int i = 0; i < n; ++i) labels.bytes[i] = static_cast<std::uint8_t>(set.labels[i]);
  return {std::move(images), std::move(labels)};
}

}  // namespace hpfl
