#include "qksvm/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "qksvm/errors.hpp"
#include "qksvm/rng.hpp"

namespace qksvm {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

double parse_double(const std::string& cell, const std::string& path, std::size_t lineno) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw DataError(path + ":" + std::to_string(lineno) + ": bad numeric value '" + cell + "'");
  return v;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label")
    throw DataError(path + ": header must start with id,label,e0,...");
  const std::size_t dim = header.size() - 2;

  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    ids.push_back(cells[0]);
    const std::string& lab = cells[1];
    if (lab == "0")
      labels.push_back(0);
    else if (lab == "1")
      labels.push_back(1);
    else
      throw DataError(path + ":" + std::to_string(lineno) + ": label must be 0 or 1");
    for (std::size_t c = 2; c < cells.size(); ++c)
      values.push_back(parse_double(cells[c], path, lineno));
  }

  std::set<std::string> unique_ids(ids.begin(), ids.end());
  if (unique_ids.size() != ids.size()) throw DataError(path + ": duplicate sample ids");

  Dataset ds;
  ds.ids = std::move(ids);
  ds.labels = std::move(labels);
  ds.features = Matrix(ds.labels.size(), dim);
  ds.features.data() = std::move(values);
  if (!ds.features.all_finite()) throw DataError(path + ": non-finite feature value");
  return ds;
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << "id,label";
  for (std::size_t c = 0; c < ds.features.cols(); ++c) out << ",e" << c;
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.ids[i] << "," << ds.labels[i];
    for (std::size_t c = 0; c < ds.features.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, c));
      out << "," << buf;
    }
    out << "\n";
  }
}

std::optional<DatasetManifest> load_manifest(const std::string& csv_path) {
  std::ifstream in(csv_path + ".json");
  if (!in) return std::nullopt;
  nlohmann::json j = nlohmann::json::parse(in, nullptr, true, true);
  DatasetManifest m;
  m.model_name = j.value("model_name", "");
  m.dim = j.value("dim", std::size_t{0});
  m.seed_tag = j.value("seed_tag", "");
  return m;
}

namespace {

// Largest-remainder apportionment of `total` slots across class counts,
// proportional to fraction; ties go to the lower class index.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& class_sizes,
                                   double fraction, std::size_t total) {
  const std::size_t k = class_sizes.size();
  std::vector<std::size_t> base(k);
  std::vector<double> remainder(k);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double want = fraction * static_cast<double>(class_sizes[c]);
    base[c] = static_cast<std::size_t>(want);
    remainder[c] = want - static_cast<double>(base[c]);
    assigned += base[c];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total && i < k; ++i) {
    ++base[order[i]];
    ++assigned;
  }
  if (assigned != total)
    throw NumericalError("split: apportionment failed");  // cannot happen for 2 classes
  return base;
}

}  // namespace

SplitIndices split_dataset(const Dataset& ds, std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (n < 10) throw DataError("split: need at least 10 samples");

  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < n; ++i) {
    if (ds.labels[i] != 0 && ds.labels[i] != 1)
      throw DataError("split: labels must be 0 or 1");
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  for (const auto& cls : by_class)
    if (cls.size() < 3) throw DataError("split: every class needs at least 3 samples");

  const std::size_t n_train = static_cast<std::size_t>(0.8 * static_cast<double>(n));
  const std::size_t n_val = static_cast<std::size_t>(0.1 * static_cast<double>(n));

  const std::vector<std::size_t> class_sizes = {by_class[0].size(), by_class[1].size()};
  const auto train_per_class = apportion(class_sizes, 0.8, n_train);
  const auto val_per_class = apportion(class_sizes, 0.1, n_val);

  Rng rng(seed);
  SplitIndices out;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto perm = shuffled_indices(by_class[c].size(), rng);
    const std::size_t tr = train_per_class[c];
    const std::size_t va = val_per_class[c];
    if (tr + va > by_class[c].size())
      throw DataError("split: class too small for an 80/10/10 split");
    for (std::size_t i = 0; i < by_class[c].size(); ++i) {
      const std::size_t sample = by_class[c][perm[i]];
      if (i < tr)
        out.train.push_back(sample);
      else if (i < tr + va)
        out.val.push_back(sample);
      else
        out.test.push_back(sample);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = m.row(idx[i]);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

std::vector<int> take_labels(std::span<const int> labels, std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
  return out;
}

FittedPipeline FittedPipeline::fit(const Matrix& features,
                                   std::span<const std::size_t> train_idx, std::size_t q) {
  const std::size_t n = train_idx.size();
  const std::size_t d = features.cols();
  if (n == 0) throw std::invalid_argument("pipeline fit: empty training set");
  if (q < 1 || q > std::min(n, d))
    throw std::invalid_argument("pipeline fit: q must be in [1, min(n_train, D)]");

  FittedPipeline p;
  p.means_.assign(d, 0.0);
  p.stds_.assign(d, 0.0);
  for (std::size_t i : train_idx) {
    const auto row = features.row(i);
    for (std::size_t c = 0; c < d; ++c) p.means_[c] += row[c];
  }
  for (double& m : p.means_) m /= static_cast<double>(n);
  for (std::size_t i : train_idx) {
    const auto row = features.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = row[c] - p.means_[c];
      p.stds_[c] += diff * diff;
    }
  }
  for (double& s : p.stds_) {
    s = std::sqrt(s / static_cast<double>(n));
    // degenerate columns keep their index; they contribute nothing after
    // centering
    if (s < 1e-12) s = 1e-12;
  }

  Matrix z(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = features.row(train_idx[i]);
    for (std::size_t c = 0; c < d; ++c) z(i, c) = (row[c] - p.means_[c]) / p.stds_[c];
  }

  // PCA from whichever of Z^T Z / n (D x D) or Z Z^T / n (n x n) is smaller;
  // both share the nonzero spectrum and total variance.
  std::vector<double> eigenvalues;
  p.components_ = Matrix(q, d);
  double total_variance = 0.0;
  if (d <= n) {
    Matrix cov(d, d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += z(i, a) * z(i, b);
        s /= static_cast<double>(n);
        cov(a, b) = s;
        cov(b, a) = s;
      }
    total_variance = trace(cov);
    auto eig = sym_eigen(cov);
    eigenvalues = std::move(eig.eigenvalues);
    for (std::size_t k = 0; k < q; ++k)
      for (std::size_t c = 0; c < d; ++c) p.components_(k, c) = eig.eigenvectors(c, k);
  } else {
    Matrix gram(n, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += z(a, c) * z(b, c);
        s /= static_cast<double>(n);
        gram(a, b) = s;
        gram(b, a) = s;
      }
    total_variance = trace(gram);
    auto eig = sym_eigen(gram);
    eigenvalues = std::move(eig.eigenvalues);
    for (std::size_t k = 0; k < q; ++k) {
      // component = Z^T u / ||Z^T u||
      std::vector<double> comp(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = eig.eigenvectors(i, k);
        if (u == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) comp[c] += u * z(i, c);
      }
      double norm = 0.0;
      for (double v : comp) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-300)
        throw NumericalError("pipeline fit: PCA direction with zero variance at q=" +
                             std::to_string(k + 1));
      for (std::size_t c = 0; c < d; ++c) p.components_(k, c) = comp[c] / norm;
    }
  }

  // Canonical sign: the largest-magnitude coordinate of each component is
  // positive, so refits reproduce identical projections.
  for (std::size_t k = 0; k < q; ++k) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double mag = std::abs(p.components_(k, c));
      if (mag > best) {
        best = mag;
        arg = c;
      }
    }
    if (p.components_(k, arg) < 0.0)
      for (std::size_t c = 0; c < d; ++c) p.components_(k, c) = -p.components_(k, c);
  }

  p.explained_.assign(q, 0.0);
  if (total_variance > 0.0)
    for (std::size_t k = 0; k < q; ++k)
      p.explained_[k] = std::max(eigenvalues[k], 0.0) / total_variance;

  Matrix projected = matmul(z, transpose(p.components_));
  p.lo_.assign(q, 0.0);
  p.hi_.assign(q, 0.0);
  for (std::size_t k = 0; k < q; ++k) {
    double lo = projected(0, k), hi = projected(0, k);
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, projected(i, k));
      hi = std::max(hi, projected(i, k));
    }
    p.lo_[k] = lo;
    p.hi_[k] = hi;
  }
  return p;
}

Matrix FittedPipeline::transform(const Matrix& rows) const {
  const std::size_t d = means_.size();
  const std::size_t q = components_.rows();
  if (rows.cols() != d)
    throw std::invalid_argument("pipeline transform: expected " + std::to_string(d) +
                                " columns");
  for (std::size_t k = 0; k < q; ++k)
    if (hi_[k] == lo_[k])
      throw NumericalError("pipeline transform: degenerate min-max range on component " +
                           std::to_string(k));

  Matrix out(rows.rows(), q);
  std::vector<double> zrow(d);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto row = rows.row(i);
    for (std::size_t c = 0; c < d; ++c) zrow[c] = (row[c] - means_[c]) / stds_[c];
    for (std::size_t k = 0; k < q; ++k) {
      double v = 0.0;
      const auto comp = components_.row(k);
      for (std::size_t c = 0; c < d; ++c) v += zrow[c] * comp[c];
      out(i, k) = 2.0 * (v - lo_[k]) / (hi_[k] - lo_[k]) - 1.0;
    }
  }
  return out;
}

double minmax_overflow(const Matrix& transformed) {
  double worst = 0.0;
  for (double v : transformed.data()) worst = std::max(worst, std::abs(v) - 1.0);
  return std::max(worst, 0.0);
}

}  // namespace qksvm
