#include <fstream>
#include <iterator>
#include <stdexcept>

#include "intel_latent/errors.hpp"
#include "intel_latent/synthdata.hpp"

namespace intel_latent::synth {

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

void need(const std::vector<unsigned char>& b, std::size_t bytes, const std::filesystem::path& path) {
  if (b.size() < bytes) {
    throw FormatError(path.string() + ": truncated (" + std::to_string(b.size()) + " bytes, need " +
                      std::to_string(bytes) + ")");
  }
}

}  // namespace

std::filesystem::path idx_labels_path(const std::filesystem::path& images) {
  std::string name = images.filename().string();
  for (const auto& [from, to] : {std::pair<std::string, std::string>{"images", "labels"}, {"idx3", "idx1"}}) {
    if (const auto pos = name.find(from); pos != std::string::npos) name.replace(pos, from.size(), to);
  }
  if (name == images.filename().string()) {
    throw std::invalid_argument("cannot derive a label file name from " + images.string());
  }
  return images.parent_path() / name;
}

LabeledBatch load_idx(const std::filesystem::path& images, const IdxOptions& options) {
  const auto img = read_all(images);
  need(img, 16, images);
  if (const auto magic = be32(img, 0); magic != kIdxImageMagic) {
    throw FormatError(images.string() + ": bad image magic " + std::to_string(magic) + " (expected 2051)");
  }
  const std::size_t count = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  need(img, 16 + count * rows * cols, images);

  const auto label_path = options.labels_path.empty() ? idx_labels_path(images) : options.labels_path;
  const auto lab = read_all(label_path);
  need(lab, 8, label_path);
  if (const auto magic = be32(lab, 0); magic != kIdxLabelMagic) {
    throw FormatError(label_path.string() + ": bad label magic " + std::to_string(magic) + " (expected 2049)");
  }
  if (be32(lab, 4) != count) throw FormatError(label_path.string() + ": label count differs from image count");
  need(lab, 8 + count, label_path);

  const bool pool = options.downsample;
  if (pool && (rows % 2 != 0 || cols % 2 != 0)) throw FormatError(images.string() + ": odd image size, cannot pool");
  const std::size_t out_rows = pool ? rows / 2 : rows, out_cols = pool ? cols / 2 : cols;
  const std::size_t dim = out_rows * out_cols;

  std::vector<double> data;
  std::vector<int> labels;
  for (std::size_t i = 0; i < count; ++i) {
    const int label = lab[8 + i];
    if (options.class_filter && !options.class_filter->contains(label)) continue;
    const unsigned char* px = img.data() + 16 + i * rows * cols;
    for (std::size_t r = 0; r < out_rows; ++r) {
      for (std::size_t c = 0; c < out_cols; ++c) {
        double v;
        if (pool) {
          const std::size_t r0 = 2 * r, c0 = 2 * c;
          v = (px[r0 * cols + c0] + px[r0 * cols + c0 + 1] + px[(r0 + 1) * cols + c0] +
               px[(r0 + 1) * cols + c0 + 1]) /
              (4.0 * 255.0);
        } else {
          v = px[r * cols + c] / 255.0;
        }
        data.push_back(v >= options.binarize_threshold ? 1.0 : 0.0);
      }
    }
    labels.push_back(label);
  }
  if (labels.empty()) throw std::invalid_argument(images.string() + ": no images left after the class filter");
  return {Tensor({labels.size(), dim}, std::move(data)), std::move(labels)};
}

}  // namespace intel_latent::synth
