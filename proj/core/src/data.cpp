#include "saldl/data.hpp"
#include "saldl/error.hpp"
#include "saldl/numeric_text.hpp"
#include "saldl/staging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace saldl {

Dataset::Dataset(LabelSupport support, std::size_t feature_dim, std::vector<Sample> samples)
    : support_(support), feature_dim_(feature_dim) {
  samples_.reserve(samples.size());
  for (auto& s : samples) add(std::move(s));
}

void Dataset::add(Sample sample) {
  if (sample.features.size() != feature_dim_) {
    throw Error(ErrorKind::shape_error, "sample '" + sample.id + "' has " +
                                            std::to_string(sample.features.size()) +
                                            " features, dataset expects " +
                                            std::to_string(feature_dim_));
  }
  support_.index_of(sample.label);
  samples_.push_back(std::move(sample));
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.label);
  return out;
}

void Dataset::require_non_empty(const char* role) const {
  if (samples_.empty()) throw Error(ErrorKind::empty_input, std::string(role) + " set is empty");
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller on our own uniforms, so datasets do not depend on the standard
// library's normal_distribution.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - unit_uniform(rng_);  // (0, 1]
    const double u2 = unit_uniform(rng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n)));
}

}  // namespace

void AmbiguityProfile::validate() const {
  if (boundaries.empty() || boundaries.size() != levels.size()) {
    throw Error(ErrorKind::invalid_parameter,
                "ambiguity profile needs one level per stage boundary");
  }
  // Reuses the partition rules: first stage at the support minimum, strictly increasing.
  StagePartition(support, boundaries, PartitionProvenance::manual);
  for (double level : levels) {
    if (!(level > 0.0) || !std::isfinite(level)) {
      throw Error(ErrorKind::invalid_parameter, "ambiguity levels must be positive and finite");
    }
  }
  if (feature_dim < 2) {
    throw Error(ErrorKind::invalid_parameter, "synthetic features need at least two dimensions");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw Error(ErrorKind::invalid_parameter, "noise scale must be finite and non-negative");
  }
}

nlohmann::json AmbiguityProfile::to_json() const {
  return nlohmann::json{{"min_label", support.min_label()},
                        {"max_label", support.max_label()},
                        {"boundaries", boundaries},
                        {"levels", levels},
                        {"feature_dim", feature_dim},
                        {"noise", noise}};
}

AmbiguityProfile AmbiguityProfile::from_json(const nlohmann::json& doc) {
  static const char* const kKeys[] = {"min_label", "max_label", "boundaries",
                                      "levels",    "feature_dim", "noise"};
  try {
    for (const auto& [key, _] : doc.items()) {
      if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
        throw Error(ErrorKind::config_error, "unknown ambiguity profile key '" + key + "'");
      }
    }
    AmbiguityProfile p;
    p.support = LabelSupport(doc.value("min_label", 0), doc.value("max_label", 100));
    p.boundaries = doc.at("boundaries").get<std::vector<int>>();
    p.levels = doc.at("levels").get<std::vector<double>>();
    p.feature_dim = doc.value("feature_dim", std::size_t{16});
    p.noise = doc.value("noise", 0.05);
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config_error, std::string("malformed ambiguity profile: ") + e.what());
  }
}

std::vector<std::vector<double>> prototype_curve(const AmbiguityProfile& profile) {
  profile.validate();
  const StagePartition stages(profile.support, profile.boundaries, PartitionProvenance::manual);
  const std::size_t n = profile.support.size();
  const std::size_t pairs = profile.feature_dim / 2;
  const double inv_norm = 1.0 / std::sqrt(static_cast<double>(pairs));

  // Position along the curve: cumulative steps, each inversely proportional to
  // the ambiguity level of the stage the step starts in. Level 1 everywhere
  // spans t in [0, 1].
  std::vector<double> t(n, 0.0);
  const double base_step = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    const int from = profile.support.label_at(i - 1);
    t[i] = t[i - 1] + base_step / profile.levels[stages.stage_of(from)];
  }

  // Each (cos, sin) pair turns at its own fixed rate; the cosine similarity of
  // two prototypes is mean_j cos(omega_j * dt), a function of dt alone.
  std::vector<std::vector<double>> out(n, std::vector<double>(profile.feature_dim, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < pairs; ++j) {
      const double omega = 0.5 * std::numbers::pi * static_cast<double>(j + 1);
      out[i][2 * j] = std::cos(omega * t[i]) * inv_norm;
      out[i][2 * j + 1] = std::sin(omega * t[i]) * inv_norm;
    }
  }
  return out;
}

Dataset generate_synthetic(const AmbiguityProfile& profile, std::size_t n_per_label,
                           std::uint64_t seed) {
  if (n_per_label < 1) {
    throw Error(ErrorKind::invalid_parameter, "n_per_label must be at least 1");
  }
  const auto prototypes = prototype_curve(profile);
  GaussianSource noise(seed);
  Dataset out(profile.support, profile.feature_dim);
  for (std::size_t i = 0; i < prototypes.size(); ++i) {
    const int label = profile.support.label_at(i);
    for (std::size_t r = 0; r < n_per_label; ++r) {
      Sample s;
      s.label = label;
      s.id = "a" + std::to_string(label) + "_" + std::to_string(r);
      s.features = prototypes[i];
      for (double& f : s.features) f += profile.noise * noise.next();
      out.add(std::move(s));
    }
  }
  return out;
}

std::string to_csv(const Dataset& dataset) {
  std::string out = "id,age";
  for (std::size_t d = 0; d < dataset.feature_dim(); ++d) out += ",f" + std::to_string(d);
  out += '\n';
  for (const auto& s : dataset.samples()) {
    if (s.id.find_first_of(",\n\r") != std::string::npos) {
      throw Error(ErrorKind::invalid_input, "sample id '" + s.id + "' cannot be written to CSV");
    }
    out += s.id;
    out += ',';
    out += std::to_string(s.label);
    for (double f : s.features) {
      out += ',';
      out += format_double(f);
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::io_error, "cannot open " + path.string() + " for writing");
  file << to_csv(dataset);
  if (!file) throw Error(ErrorKind::io_error, "failed writing " + path.string());
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail_at(ErrorKind kind, std::size_t line_no, const std::string& what) {
  throw Error(kind, "line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

Dataset parse_csv(const std::string& text, const LabelSupport& support) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw Error(ErrorKind::parse_error, "line 1: missing CSV header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "age") {
    fail_at(ErrorKind::parse_error, line_no, "header must be id,age,f0,...");
  }
  for (std::size_t d = 2; d < header.size(); ++d) {
    if (header[d] != "f" + std::to_string(d - 2)) {
      fail_at(ErrorKind::parse_error, line_no,
              "expected column f" + std::to_string(d - 2) + ", found '" + std::string(header[d]) +
                  "'");
    }
  }
  const std::size_t dim = header.size() - 2;

  Dataset out(support, dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      fail_at(ErrorKind::parse_error, line_no,
              "expected " + std::to_string(header.size()) + " fields, found " +
                  std::to_string(fields.size()));
    }
    Sample s;
    s.id = std::string(fields[0]);
    if (!parse_int(fields[1], s.label)) {
      fail_at(ErrorKind::parse_error, line_no, "age '" + std::string(fields[1]) + "' is not an integer");
    }
    if (!support.contains(s.label)) {
      fail_at(ErrorKind::invalid_label, line_no,
              "age " + std::to_string(s.label) + " outside the label support");
    }
    s.features.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      if (!parse_double(fields[d + 2], s.features[d]) || !std::isfinite(s.features[d])) {
        fail_at(ErrorKind::parse_error, line_no,
                "feature f" + std::to_string(d) + " '" + std::string(fields[d + 2]) +
                    "' is not a finite number");
      }
    }
    out.add(std::move(s));
  }
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const LabelSupport& support) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << file.rdbuf();
  try {
    return parse_csv(buf.str(), support);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

DatasetSplit split(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed) {
  const double f[3] = {fractions.train, fractions.val, fractions.test};
  for (double x : f) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw Error(ErrorKind::invalid_parameter, "split fractions must all be positive");
    }
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw Error(ErrorKind::invalid_parameter, "split fractions must sum to 1");
  }
  const std::size_t n = dataset.size();
  const auto n_train = static_cast<std::size_t>(std::llround(f[0] * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(f[1] * static_cast<double>(n)));
  if (n_train + n_val >= n || n_train == 0 || n_val == 0) {
    throw Error(ErrorKind::stratification_error,
                "cannot give every split at least one of " + std::to_string(n) + " samples");
  }
  const std::size_t target[3] = {n_train, n_val, n - n_train - n_val};

  // Order samples by label, shuffled within each label, then deal split tags
  // along that order by largest deficit against the exact global quotas. Each
  // label's run therefore receives splits in proportion.
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < n; ++i) by_label[dataset[i].label].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (auto& [label, idx] : by_label) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    order.insert(order.end(), idx.begin(), idx.end());
  }

  std::vector<int> tag(n, 0);
  std::size_t count[3] = {0, 0, 0};
  for (std::size_t pos = 0; pos < n; ++pos) {
    int best = 0;
    double best_deficit = -INFINITY;
    for (int j = 0; j < 3; ++j) {
      const double deficit = static_cast<double>(target[j]) * static_cast<double>(pos + 1) /
                                 static_cast<double>(n) -
                             static_cast<double>(count[j]);
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = j;
      }
    }
    tag[order[pos]] = best;
    ++count[best];
  }

  // Labels with three or more samples must be represented in train; borrow a
  // train slot from the label with the most train samples to spare.
  for (const auto& [label, idx] : by_label) {
    if (idx.size() < 3) continue;
    if (std::any_of(idx.begin(), idx.end(), [&](std::size_t i) { return tag[i] == 0; })) continue;
    std::size_t donor = n;
    std::size_t donor_train = 1;
    for (const auto& [other, oidx] : by_label) {
      if (other == label) continue;
      const auto c = static_cast<std::size_t>(
          std::count_if(oidx.begin(), oidx.end(), [&](std::size_t i) { return tag[i] == 0; }));
      if (c > donor_train) {
        donor_train = c;
        donor = *std::find_if(oidx.begin(), oidx.end(), [&](std::size_t i) { return tag[i] == 0; });
      }
    }
    if (donor == n) {
      throw Error(ErrorKind::stratification_error,
                  "label " + std::to_string(label) + " cannot be represented in the train split");
    }
    std::swap(tag[donor], tag[idx.front()]);
  }

  DatasetSplit out{Dataset(dataset.support(), dataset.feature_dim()),
                   Dataset(dataset.support(), dataset.feature_dim()),
                   Dataset(dataset.support(), dataset.feature_dim())};
  for (std::size_t i = 0; i < n; ++i) {
    Dataset& dst = tag[i] == 0 ? out.train : tag[i] == 1 ? out.val : out.test;
    dst.add(dataset[i]);
  }
  return out;
}

}  // namespace saldl
