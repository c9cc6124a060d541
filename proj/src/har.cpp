#include "anamac/har.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace anamac {
namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

std::vector<float> parse_row(const std::string& line, const std::filesystem::path& path, std::size_t lineno) {
  std::vector<float> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    float v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
    }
    out.push_back(v);
  }
  return out;
}

Dataset load_split(const std::filesystem::path& dir, const std::string& split) {
  const auto labels_path = dir / split / ("y_" + split + ".txt");
  const auto label_lines = read_lines(labels_path);
  Dataset d;
  d.classes = kHarClasses;
  for (std::size_t i = 0; i < label_lines.size(); ++i) {
    const auto row = parse_row(label_lines[i], labels_path, i + 1);
    if (row.size() != 1) throw Error(ErrorCode::RaggedRow, labels_path.string() + ": one label per line");
    const int label = static_cast<int>(row[0]);
    if (row[0] != static_cast<float>(label) || label < 1 || label > static_cast<int>(kHarClasses)) {
      throw Error(ErrorCode::LabelOutOfRange, labels_path.string() + ":" + std::to_string(i + 1) + ": label " +
                                                  label_lines[i]);
    }
    d.labels.push_back(label - 1);
  }
  const std::size_t n = d.labels.size();
  std::vector<float> x(n * kHarChannels * kHarLength);
  for (std::size_t c = 0; c < kHarChannels; ++c) {
    const auto path = dir / split / "Inertial Signals" / (std::string(har_signal_names()[c]) + "_" + split + ".txt");
    const auto lines = read_lines(path);
    if (lines.size() != n) {
      throw Error(ErrorCode::LengthMismatch, path.string() + " has " + std::to_string(lines.size()) +
                                                 " rows, labels have " + std::to_string(n));
    }
    for (std::size_t s = 0; s < n; ++s) {
      const auto row = parse_row(lines[s], path, s + 1);
      if (row.size() != kHarLength) {
        throw Error(ErrorCode::RaggedRow, path.string() + ":" + std::to_string(s + 1) + " has " +
                                              std::to_string(row.size()) + " columns, expected 128");
      }
      std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>((s * kHarChannels + c) * kHarLength));
    }
  }
  d.x = Tensor(Shape{n, kHarChannels, kHarLength}, std::move(x));
  return d;
}

}  // namespace

Dataset Dataset::subset(const std::vector<std::size_t>& idx) const {
  const std::size_t row = x.size() / std::max<std::size_t>(1, size());
  const auto xv = x.values<float>();
  Dataset out;
  out.classes = classes;
  std::vector<float> data;
  data.reserve(idx.size() * row);
  for (auto i : idx) {
    if (i >= size()) throw Error(ErrorCode::ShapeMismatch, "sample index out of range");
    data.insert(data.end(), xv.begin() + static_cast<std::ptrdiff_t>(i * row),
                xv.begin() + static_cast<std::ptrdiff_t>((i + 1) * row));
    out.labels.push_back(labels[i]);
  }
  Shape shape = x.shape();
  shape[0] = idx.size();
  out.x = Tensor(shape, std::move(data));
  return out;
}

const std::array<const char*, kHarChannels>& har_signal_names() {
  static const std::array<const char*, kHarChannels> names{
      "body_acc_x", "body_acc_y", "body_acc_z", "body_gyro_x", "body_gyro_y",
      "body_gyro_z", "total_acc_x", "total_acc_y", "total_acc_z"};
  return names;
}

HarDataset load_har(const std::filesystem::path& dir) {
  HarDataset h;
  h.train = load_split(dir, "train");
  h.test = load_split(dir, "test");
  return h;
}

namespace {

void apply_affine(Dataset& d, const std::vector<double>& lo, const std::vector<double>& span) {
  const std::size_t n = d.size(), channels = lo.size(), len = d.x.size() / std::max<std::size_t>(1, n * channels);
  std::vector<float> x(d.x.values<float>().begin(), d.x.values<float>().end());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < len; ++t) {
        float& v = x[(s * channels + c) * len + t];
        v = static_cast<float>(std::clamp((v - lo[c]) / span[c], 0.0, 1.0));
      }
    }
  }
  d.x = Tensor(d.x.shape(), std::move(x));
}

}  // namespace

void normalize_channels(Dataset& reference, Dataset& other) {
  if (reference.x.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "expected [samples, channels, length]");
  const std::size_t n = reference.size(), channels = reference.x.dim(1), len = reference.x.dim(2);
  const auto xv = reference.x.values<float>();
  std::vector<double> lo(channels), span(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0, sq = 0;
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t t = 0; t < len; ++t) {
        const double v = xv[(s * channels + c) * len + t];
        sum += v;
        sq += v * v;
      }
    }
    const double count = static_cast<double>(n * len);
    const double mean = sum / count;
    const double sd = std::sqrt(std::max(0.0, sq / count - mean * mean));
    lo[c] = mean - 3 * sd;
    span[c] = sd > 0 ? 6 * sd : 1.0;
  }
  apply_affine(reference, lo, span);
  apply_affine(other, lo, span);
}

Dataset augment_stride_shift(const Dataset& data, std::size_t shift) {
  if (data.x.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "expected [samples, channels, length]");
  const std::size_t n = data.size(), channels = data.x.dim(1), len = data.x.dim(2);
  const auto xv = data.x.values<float>();
  std::vector<float> x(xv.begin(), xv.end());
  x.resize(2 * xv.size(), 0.0f);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t + shift < len; ++t) {
        x[((n + s) * channels + c) * len + t] = xv[(s * channels + c) * len + t + shift];
      }
    }
  }
  Dataset out;
  out.classes = data.classes;
  out.labels = data.labels;
  out.labels.insert(out.labels.end(), data.labels.begin(), data.labels.end());
  out.x = Tensor(Shape{2 * n, channels, len}, std::move(x));
  return out;
}

}  // namespace anamac
