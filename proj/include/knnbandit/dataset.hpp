#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "knnbandit/environments.hpp"
#include "knnbandit/rng.hpp"

namespace knnbandit {

// IDX is the MNIST container format: a big-endian magic word, big-endian
// dimension sizes, then raw bytes.
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;  // u8, 3 dims
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;  // u8, 1 dim

class IdxParseError : public std::runtime_error {
 public:
  IdxParseError(std::size_t offset, const std::string& what)
      : std::runtime_error("idx parse error at byte offset " +
                           std::to_string(offset) + ": " + what),
        offset(offset) {}
  std::size_t offset;
};

namespace detail {
inline std::uint32_t read_u32_be(std::span<const std::uint8_t> data,
                                 std::size_t offset, const char* field) {
  if (offset + 4 > data.size())
    throw IdxParseError(offset, std::string("truncated while reading ") + field);
  return (static_cast<std::uint32_t>(data[offset]) << 24) |
         (static_cast<std::uint32_t>(data[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(data[offset + 2]) << 8) |
         static_cast<std::uint32_t>(data[offset + 3]);
}
inline void write_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
}  // namespace detail

struct RawIdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols bytes, row-major

  bool operator==(const RawIdxImages&) const = default;
};

inline RawIdxImages parse_idx_images(std::span<const std::uint8_t> data) {
  const std::uint32_t magic = detail::read_u32_be(data, 0, "magic");
  if (magic != kIdxImagesMagic)
    throw IdxParseError(0, "bad image magic " + std::to_string(magic) +
                               ", expected " + std::to_string(kIdxImagesMagic));
  RawIdxImages out;
  out.count = detail::read_u32_be(data, 4, "image count");
  out.rows = detail::read_u32_be(data, 8, "row count");
  out.cols = detail::read_u32_be(data, 12, "column count");
  const std::size_t need = static_cast<std::size_t>(out.count) * out.rows * out.cols;
  if (data.size() < 16 + need)
    throw IdxParseError(data.size(),
                        "truncated pixel data: need " + std::to_string(need) +
                            " bytes, have " + std::to_string(data.size() - 16));
  if (data.size() > 16 + need)
    throw IdxParseError(16 + need, "trailing bytes after pixel data");
  out.pixels.assign(data.begin() + 16, data.end());
  return out;
}

inline std::vector<std::uint8_t> parse_idx_labels(
    std::span<const std::uint8_t> data) {
  const std::uint32_t magic = detail::read_u32_be(data, 0, "magic");
  if (magic != kIdxLabelsMagic)
    throw IdxParseError(0, "bad label magic " + std::to_string(magic) +
                               ", expected " + std::to_string(kIdxLabelsMagic));
  const std::uint32_t count = detail::read_u32_be(data, 4, "label count");
  if (data.size() < 8 + static_cast<std::size_t>(count))
    throw IdxParseError(data.size(),
                        "truncated label data: need " + std::to_string(count) +
                            " bytes, have " + std::to_string(data.size() - 8));
  if (data.size() > 8 + static_cast<std::size_t>(count))
    throw IdxParseError(8 + count, "trailing bytes after label data");
  return {data.begin() + 8, data.end()};
}

inline std::vector<std::uint8_t> serialize_idx_images(const RawIdxImages& img) {
  const std::size_t need =
      static_cast<std::size_t>(img.count) * img.rows * img.cols;
  if (img.pixels.size() != need)
    throw std::invalid_argument("serialize_idx_images: pixel count mismatch");
  std::vector<std::uint8_t> out;
  out.reserve(16 + need);
  detail::write_u32_be(out, kIdxImagesMagic);
  detail::write_u32_be(out, img.count);
  detail::write_u32_be(out, img.rows);
  detail::write_u32_be(out, img.cols);
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

inline std::vector<std::uint8_t> serialize_idx_labels(
    std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  detail::write_u32_be(out, kIdxLabelsMagic);
  detail::write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

// Images as flat double vectors in [0, 1] plus integer class labels.
struct LabeledImageSet {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t num_classes = 10;
  std::vector<double> pixels;  // count * rows * cols, image-major
  std::vector<int> labels;     // count entries in [0, num_classes)

  std::size_t dim() const { return rows * cols; }
  std::span<const double> image(std::size_t i) const {
    return {pixels.data() + i * dim(), dim()};
  }
};

inline LabeledImageSet make_labeled_set(const RawIdxImages& img,
                                        std::span<const std::uint8_t> labels) {
  if (labels.size() != img.count)
    throw std::invalid_argument(
        "make_labeled_set: image count " + std::to_string(img.count) +
        " != label count " + std::to_string(labels.size()));
  if (img.count == 0)
    throw std::invalid_argument("make_labeled_set: empty image set");
  if (img.rows == 0 || img.cols == 0)
    throw std::invalid_argument("make_labeled_set: zero image dimensions");
  LabeledImageSet set;
  set.count = img.count;
  set.rows = img.rows;
  set.cols = img.cols;
  set.pixels.resize(set.count * set.dim());
  for (std::size_t i = 0; i < set.pixels.size(); ++i)
    set.pixels[i] = static_cast<double>(img.pixels[i]) / 255.0;
  set.labels.resize(set.count);
  for (std::size_t i = 0; i < set.count; ++i) {
    const int lab = labels[i];
    if (lab >= static_cast<int>(set.num_classes))
      throw std::invalid_argument("make_labeled_set: label " +
                                  std::to_string(lab) + " at index " +
                                  std::to_string(i) + " exceeds 9");
    set.labels[i] = lab;
  }
  return set;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("read failed: " + path);
  return data;
}

// Loads an IDX image/label pair; `subsample` > 0 keeps only the first n pairs.
inline LabeledImageSet load_labeled_set(const std::string& images_path,
                                        const std::string& labels_path,
                                        std::size_t subsample = 0) {
  RawIdxImages img = parse_idx_images(read_file_bytes(images_path));
  std::vector<std::uint8_t> labels =
      parse_idx_labels(read_file_bytes(labels_path));
  if (labels.size() != img.count)
    throw std::invalid_argument("load_labeled_set: image count " +
                                std::to_string(img.count) + " != label count " +
                                std::to_string(labels.size()));
  if (subsample > 0 && subsample < img.count) {
    img.count = static_cast<std::uint32_t>(subsample);
    img.pixels.resize(static_cast<std::size_t>(img.count) * img.rows * img.cols);
    labels.resize(subsample);
  }
  return make_labeled_set(img, labels);
}

// Bandit-ified classification: contexts are dataset images served in a
// per-epoch shuffled order, arms are class predictions, reward is exact-match
// 0/1. Rewards are deterministic given the image, so sigma = 0.
class ClassificationEnv : public Environment {
 public:
  explicit ClassificationEnv(std::shared_ptr<const LabeledImageSet> set)
      : set_(std::move(set)) {
    if (!set_ || set_->count == 0)
      throw std::invalid_argument("ClassificationEnv: empty dataset");
    order_.resize(set_->count);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    pos_ = set_->count;  // force a shuffle on the first draw
  }

  std::size_t dim() const override { return set_->dim(); }
  std::size_t num_actions() const override { return set_->num_classes; }

  std::vector<double> sample_context(Rng& rng) override {
    if (pos_ == set_->count) {
      std::shuffle(order_.begin(), order_.end(), rng);
      pos_ = 0;
    }
    current_ = order_[pos_++];
    const std::span<const double> img = set_->image(current_);
    return {img.begin(), img.end()};
  }

  // The mean reward of the most recently served context; the image uniquely
  // determines the label within one epoch pass.
  double mean_reward(std::size_t action, std::span<const double>) const override {
    return action == static_cast<std::size_t>(set_->labels[current_]) ? 1.0
                                                                      : 0.0;
  }
  double optimal_reward(std::span<const double>) const override { return 1.0; }
  double sample_reward(std::size_t action, std::span<const double> x,
                       Rng&) override {
    return mean_reward(action, x);
  }
  double noise_sigma() const override { return 0.0; }
  std::optional<double> lipschitz() const override { return std::nullopt; }

 private:
  std::shared_ptr<const LabeledImageSet> set_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::size_t current_ = 0;
};

}  // namespace knnbandit
