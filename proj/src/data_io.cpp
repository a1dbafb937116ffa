#include "deunet/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "deunet/rng.hpp"

namespace deunet {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("file-open: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

bool is_gzip(const std::vector<unsigned char>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in) {
  z_stream strm{};
  if (inflateInit2(&strm, 15 + 32) != Z_OK) {  // auto-detect gzip/zlib wrapper
    throw std::runtime_error("gzip-decode: inflateInit failed");
  }
  std::vector<unsigned char> out;
  out.reserve(in.size() * 4);
  std::vector<unsigned char> buf(1 << 16);
  strm.next_in = const_cast<unsigned char*>(in.data());
  strm.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    strm.next_out = buf.data();
    strm.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&strm, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&strm);
      throw std::runtime_error("gzip-decode: corrupt stream (zlib rc " + std::to_string(rc) +
                               ")");
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - strm.avail_out));
  }
  inflateEnd(&strm);
  return out;
}

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

std::vector<unsigned char> load_maybe_gzip(const std::string& path) {
  std::vector<unsigned char> bytes = read_file(path);
  if (is_gzip(bytes)) bytes = gunzip(bytes);
  return bytes;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

}  // namespace

void Dataset::validate() const {
  if (static_cast<int>(labels.size()) != features.rows) {
    throw std::invalid_argument("dataset: label count does not match feature rows");
  }
  if (num_classes <= 0) throw std::invalid_argument("dataset: num_classes must be positive");
  for (int l : labels) {
    if (l < 0 || l >= num_classes) throw std::invalid_argument("dataset: label out of range");
  }
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const std::vector<unsigned char> img = load_maybe_gzip(images_path);
  if (img.size() < 4) throw std::runtime_error("idx-truncated: image header incomplete in " + images_path);
  const std::uint32_t img_magic = be32(img.data());
  if (img_magic != 2051) {
    throw std::runtime_error("idx-wrong-magic: expected 2051 (images), got " +
                             std::to_string(img_magic) + " in " + images_path);
  }
  if (img.size() < 16) throw std::runtime_error("idx-truncated: image header incomplete in " + images_path);
  const std::uint32_t n = be32(img.data() + 4);
  const std::uint32_t rows = be32(img.data() + 8);
  const std::uint32_t cols = be32(img.data() + 12);
  const std::size_t pixels = std::size_t(n) * rows * cols;
  if (img.size() < 16 + pixels) {
    throw std::runtime_error("idx-truncated: image payload incomplete in " + images_path);
  }

  const std::vector<unsigned char> lab = load_maybe_gzip(labels_path);
  if (lab.size() < 4) throw std::runtime_error("idx-truncated: label header incomplete in " + labels_path);
  const std::uint32_t lab_magic = be32(lab.data());
  if (lab_magic != 2049) {
    throw std::runtime_error("idx-wrong-magic: expected 2049 (labels), got " +
                             std::to_string(lab_magic) + " in " + labels_path);
  }
  if (lab.size() < 8) throw std::runtime_error("idx-truncated: label header incomplete in " + labels_path);
  const std::uint32_t n_lab = be32(lab.data() + 4);
  if (lab.size() < 8 + n_lab) {
    throw std::runtime_error("idx-truncated: label payload incomplete in " + labels_path);
  }
  if (n != n_lab) {
    throw std::runtime_error("idx-count-mismatch: " + std::to_string(n) + " images vs " +
                             std::to_string(n_lab) + " labels");
  }

  Dataset ds;
  ds.features = Tensor2D(static_cast<int>(n), static_cast<int>(rows * cols));
  for (std::size_t i = 0; i < pixels; ++i) {
    ds.features.data[i] = img[16 + i] / 255.0;
  }
  ds.labels.resize(n);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  ds.validate();
  return ds;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("file-open: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv-empty: " + path);
  const std::vector<std::string> header = split_csv_line(line);
  const int n_cols = static_cast<int>(header.size());

  int label_idx = -1;
  for (int j = 0; j < n_cols; ++j) {
    if (header[j] == label_column) {
      label_idx = j;
      break;
    }
  }
  if (label_idx < 0) {
    int parsed = -1;
    const auto [p, ec] = std::from_chars(label_column.data(),
                                         label_column.data() + label_column.size(), parsed);
    if (ec == std::errc() && p == label_column.data() + label_column.size() && parsed >= 0 &&
        parsed < n_cols) {
      label_idx = parsed;
    } else {
      throw std::runtime_error("csv-label-column: '" + label_column +
                               "' matches no header and is not a valid column index");
    }
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != n_cols) {
      throw std::runtime_error("csv-ragged-row: line " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(n_cols));
    }
    std::vector<double> feat;
    feat.reserve(n_cols - 1);
    for (int j = 0; j < n_cols; ++j) {
      if (j == label_idx) continue;
      errno = 0;
      char* endp = nullptr;
      const double v = std::strtod(cells[j].c_str(), &endp);
      if (endp == cells[j].c_str() || *endp != '\0' || errno == ERANGE ||
          !std::isfinite(v)) {
        throw std::runtime_error("csv-non-numeric: line " + std::to_string(line_no) +
                                 " column '" + header[j] + "'");
      }
      feat.push_back(v);
    }
    rows.push_back(std::move(feat));
    raw_labels.push_back(cells[label_idx]);
  }
  if (rows.empty()) throw std::runtime_error("csv-empty: no data rows in " + path);

  const int d = n_cols - 1;
  Dataset ds;
  ds.features = Tensor2D(static_cast<int>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), ds.features.row(static_cast<int>(i)));
  }

  // Dense label indices in first-appearance order.
  std::vector<std::string> seen;
  ds.labels.reserve(raw_labels.size());
  for (const std::string& s : raw_labels) {
    const auto it = std::find(seen.begin(), seen.end(), s);
    if (it == seen.end()) {
      seen.push_back(s);
      ds.labels.push_back(static_cast<int>(seen.size()) - 1);
    } else {
      ds.labels.push_back(static_cast<int>(it - seen.begin()));
    }
  }
  ds.num_classes = static_cast<int>(seen.size());
  if (ds.num_classes < 2) {
    std::cerr << "warning: csv-single-class: " << path << " contains only one label value\n";
  }

  // Standardize per feature; constant columns shift to zero with scale 1.
  ds.normalization.shift.assign(d, 0.0);
  ds.normalization.scale.assign(d, 1.0);
  const int n = ds.features.rows;
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += ds.features(i, j);
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dv = ds.features(i, j) - mean;
      var += dv * dv;
    }
    var /= n;
    const double sd = std::sqrt(var);
    const double scale = sd > 1e-12 ? sd : 1.0;
    ds.normalization.shift[j] = mean;
    ds.normalization.scale[j] = scale;
    for (int i = 0; i < n; ++i) {
      ds.features(i, j) = (ds.features(i, j) - mean) / scale;
    }
  }
  ds.validate();
  return ds;
}

std::optional<SyntheticKind> synthetic_kind_from_string(std::string_view s) {
  if (s == "moons") return SyntheticKind::Moons;
  if (s == "circles") return SyntheticKind::Circles;
  if (s == "spirals") return SyntheticKind::Spirals;
  return std::nullopt;
}

const char* to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::Moons:   return "moons";
    case SyntheticKind::Circles: return "circles";
    case SyntheticKind::Spirals: return "spirals";
  }
  return "?";
}

Dataset make_synthetic(SyntheticKind kind, int n, double noise, std::uint64_t seed) {
  if (n < 4) throw std::invalid_argument("synthetic: need at least 4 samples");
  if (!(noise >= 0.0)) throw std::invalid_argument("synthetic: noise must be >= 0");

  Rng rng(seed);
  Dataset ds;
  ds.features = Tensor2D(n, 2);
  ds.labels.resize(n);
  ds.num_classes = 2;

  const int n0 = n - n / 2;  // class 0 gets the extra sample when n is odd
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2 == 0 ? 0 : 1;
    const int idx = i / 2;
    const int per_class = cls == 0 ? n0 : n / 2;
    const double u = per_class > 1 ? static_cast<double>(idx) / (per_class - 1) : 0.0;
    double x = 0.0, y = 0.0;
    switch (kind) {
      case SyntheticKind::Moons: {
        const double th = 3.141592653589793 * u;
        if (cls == 0) {
          x = std::cos(th);
          y = std::sin(th);
        } else {
          x = 1.0 - std::cos(th);
          y = 0.5 - std::sin(th);
        }
        break;
      }
      case SyntheticKind::Circles: {
        const double th = 2.0 * 3.141592653589793 * u;
        const double r = cls == 0 ? 1.0 : 0.5;
        x = r * std::cos(th);
        y = r * std::sin(th);
        break;
      }
      case SyntheticKind::Spirals: {
        const double th = 3.0 * 3.141592653589793 * u + (cls == 1 ? 3.141592653589793 : 0.0);
        const double r = 0.2 + 0.8 * u;
        x = r * std::cos(th);
        y = r * std::sin(th);
        break;
      }
    }
    ds.features(i, 0) = x + noise * rng.normal();
    ds.features(i, 1) = y + noise * rng.normal();
    ds.labels[i] = cls;
  }
  ds.validate();
  return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double first_fraction,
                                          std::uint64_t seed) {
  ds.validate();
  if (!(first_fraction > 0.0 && first_fraction < 1.0)) {
    throw std::invalid_argument("split: fraction must be in (0, 1)");
  }
  const int n = ds.size();
  if (n < 2) throw std::invalid_argument("split: need at least 2 samples");
  std::vector<std::size_t> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(perm);
  int n_first = static_cast<int>(std::lround(first_fraction * n));
  n_first = std::clamp(n_first, 1, n - 1);

  auto take = [&](int begin, int count) {
    Dataset part;
    part.features = Tensor2D(count, ds.features.cols);
    part.labels.resize(count);
    part.num_classes = ds.num_classes;
    part.normalization = ds.normalization;
    for (int i = 0; i < count; ++i) {
      const std::size_t src = perm[begin + i];
      std::copy(ds.features.row(static_cast<int>(src)),
                ds.features.row(static_cast<int>(src)) + ds.features.cols,
                part.features.row(i));
      part.labels[i] = ds.labels[src];
    }
    return part;
  };
  return {take(0, n_first), take(n_first, n - n_first)};
}

BatchIterator::BatchIterator(const Dataset& dataset, int batch_size, std::uint64_t seed)
    : dataset_(&dataset), batch_size_(batch_size), seed_(seed) {
  if (batch_size < 1) throw std::invalid_argument("batch-iterator: batch_size must be >= 1");
  dataset.validate();
  perm_.resize(dataset.size());
  for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
}

void BatchIterator::start_epoch(long epoch) {
  for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
  Rng rng(seed_, static_cast<std::uint64_t>(epoch));
  rng.shuffle(perm_);
  pos_ = 0;
}

long BatchIterator::batches_per_epoch() const {
  const long n = dataset_->size();
  return (n + batch_size_ - 1) / batch_size_;
}

std::optional<Batch> BatchIterator::next() {
  if (pos_ >= perm_.size()) return std::nullopt;
  const std::size_t count = std::min<std::size_t>(batch_size_, perm_.size() - pos_);
  Batch batch;
  batch.x = Tensor2D(static_cast<int>(count), dataset_->features.cols);
  batch.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t src = perm_[pos_ + i];
    std::copy(dataset_->features.row(static_cast<int>(src)),
              dataset_->features.row(static_cast<int>(src)) + dataset_->features.cols,
              batch.x.row(static_cast<int>(i)));
    batch.labels[i] = dataset_->labels[src];
  }
  pos_ += count;
  return batch;
}

}  // namespace deunet
