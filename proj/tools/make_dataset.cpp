// Writes a synthetic digit dataset in the standard four-file IDX layout, for
// hermetic tests and demos on machines without the real scans.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "hpfl/dataset.hpp"
#include "hpfl/rng.hpp"
#include "hpfl/synth.hpp"

namespace {

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f.flush()) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic digit dataset as IDX files"};
  std::string out_dir = "data";
  int train_n = 60'000;
  int test_n = 10'000;
  std::uint64_t seed = 1234;
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--train", train_n, "training examples")->check(CLI::PositiveNumber);
  app.add_option("--test", test_n, "test examples")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    auto [train_images, train_labels] = hpfl::make_synthetic_idx(train_n, seed);
    write_file(dir / "train-images-idx3-ubyte", hpfl::serialize_idx(train_images));
    write_file(dir / "train-labels-idx1-ubyte", hpfl::serialize_idx(train_labels));

    auto [test_images, test_labels] =
        hpfl::make_synthetic_idx(test_n, hpfl::derive_seed(seed, "test_set"));
    write_file(dir / "t10k-images-idx3-ubyte", hpfl::serialize_idx(test_images));
    write_file(dir / "t10k-labels-idx1-ubyte", hpfl::serialize_idx(test_labels));

    std::printf("wrote %d train + %d test examples to %s\n", train_n, test_n, out_dir.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
