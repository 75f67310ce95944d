#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "layertopic/embedding.hpp"
#include "layertopic/matrix.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("layertopic_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline layertopic::embedding::HiddenStateDoc random_doc(std::mt19937_64& rng, std::size_t slices,
                                                        std::size_t tokens, std::size_t dim,
                                                        std::uint64_t id = 0) {
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  layertopic::embedding::HiddenStateDoc doc;
  doc.doc_id = id;
  doc.num_layer_slices = slices;
  doc.num_tokens = tokens;
  doc.hidden_dim = dim;
  doc.states.resize(slices * tokens * dim);
  for (auto& v : doc.states) v = u(rng);
  return doc;
}

inline layertopic::embedding::HiddenStateDoc make_doc(std::size_t slices, std::size_t tokens, std::size_t dim,
                                                      std::vector<float> states) {
  layertopic::embedding::HiddenStateDoc doc;
  doc.num_layer_slices = slices;
  doc.num_tokens = tokens;
  doc.hidden_dim = dim;
  doc.states = std::move(states);
  return doc;
}

struct Blobs {
  layertopic::MatrixD points;
  std::vector<int> labels;
};

/// Isotropic Gaussian blobs around well-separated random centres.
inline Blobs make_blobs(std::uint64_t seed, std::size_t blobs, std::size_t per_blob, std::size_t dim,
                        double spread = 10.0, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> centre(-spread, spread);
  Blobs out;
  out.points.resize(static_cast<Eigen::Index>(blobs * per_blob), static_cast<Eigen::Index>(dim));
  std::vector<std::vector<double>> centres(blobs, std::vector<double>(dim));
  for (auto& c : centres)
    for (auto& v : c) v = centre(rng);
  for (std::size_t b = 0; b < blobs; ++b)
    for (std::size_t i = 0; i < per_blob; ++i) {
      const auto r = static_cast<Eigen::Index>(b * per_blob + i);
      for (std::size_t k = 0; k < dim; ++k)
        out.points(r, static_cast<Eigen::Index>(k)) = centres[b][k] + sd * normal(rng);
      out.labels.push_back(static_cast<int>(b));
    }
  return out;
}

}  // namespace testutil
