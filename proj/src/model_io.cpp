#include "xdnn/model_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>
#include <unordered_map>

#include "json.hpp"
#include "xdnn/megaclouds.hpp"

namespace xdnn {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Little-endian primitives

void put_u16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xFF);
  out += static_cast<char>(v >> 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out += static_cast<char>((v >> (8 * k)) & 0xFF);
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out += static_cast<char>((v >> (8 * k)) & 0xFF);
}

void put_string(std::string& out, const std::string& s) {
  if (s.size() > 0xFFFFFFFFull) throw DataError("string too long for feature file");
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  std::string_view take(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw FormatError(std::string("feature file truncated at byte offset ") + std::to_string(pos_) +
                        " while reading " + what + ": expected " + std::to_string(n) + " bytes, got " +
                        std::to_string(remaining()));
    }
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint64_t uint(std::size_t bytes, const char* what) {
    auto s = take(bytes, what);
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < bytes; ++k) v |= std::uint64_t(static_cast<unsigned char>(s[k])) << (8 * k);
    return v;
  }

  std::string string(const char* what) {
    const auto len = static_cast<std::size_t>(uint(4, what));
    return std::string(take(len, what));
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return data;
}

void check_finite_row(const Dataset& d, std::size_t i) {
  if (!d.features.row(static_cast<Eigen::Index>(i)).allFinite()) {
    throw DataError("sample " + std::to_string(i) + " (\"" + d.refs[i] + "\") has a NaN or infinite component");
  }
}

bool is_csv(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".csv";
}

// ---------------------------------------------------------------------------
// CSV

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"' && cur.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += ch;
    }
  }
  if (quoted) throw FormatError("csv line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

double parse_double(std::string_view s, std::size_t line_no, std::size_t col) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("csv line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                      ": not a number: \"" + std::string(s) + "\"");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Model document helpers

json vec_to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index j = 0; j < v.size(); ++j) a.push_back(v(j));
  return a;
}

VectorXd vec_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw FormatError(std::string("model: ") + what + " is not an array");
  VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!a[j].is_number()) throw FormatError(std::string("model: ") + what + "[" + std::to_string(j) + "] is not a number");
    v(static_cast<Eigen::Index>(j)) = a[j].get<double>();
    if (!std::isfinite(v(static_cast<Eigen::Index>(j)))) {
      throw FormatError(std::string("model: ") + what + " has a non-finite entry");
    }
  }
  return v;
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object()) throw FormatError(std::string("model: expected an object holding \"") + key + "\"");
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(std::string("model: missing field \"") + key + "\"");
  return *it;
}

double number(const json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_number()) throw FormatError(std::string("model: field \"") + key + "\" is not a number");
  return v.get<double>();
}

std::uint64_t count(const json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_number_unsigned()) throw FormatError(std::string("model: field \"") + key + "\" is not a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string text(const json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_string()) throw FormatError(std::string("model: field \"") + key + "\" is not a string");
  return v.get<std::string>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Features

void write_features_binary(const Dataset& d, std::ostream& os) {
  d.check();
  std::string out = "XDNF";
  put_u16(out, kFeatureFormatVersion);
  put_u64(out, d.size());
  put_u32(out, static_cast<std::uint32_t>(d.dimension()));
  put_u32(out, static_cast<std::uint32_t>(d.label_names.size()));
  for (const auto& name : d.label_names) put_string(out, name);
  for (std::size_t i = 0; i < d.size(); ++i) {
    put_u32(out, d.labels[i]);
    put_string(out, d.refs[i]);
    for (Eigen::Index j = 0; j < d.dimension(); ++j) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(d.features(static_cast<Eigen::Index>(i), j))));
    }
  }
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("failed to write feature data");
}

Dataset read_features_binary(std::istream& is) {
  const std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  if (r.take(4, "magic") != "XDNF") throw FormatError("feature file: bad magic (expected \"XDNF\")");
  const auto version = r.uint(2, "version");
  if (version != kFeatureFormatVersion) {
    throw FormatError("feature file: unsupported version " + std::to_string(version));
  }
  const auto n_samples = r.uint(8, "n_samples");
  const auto n_dims = static_cast<std::uint32_t>(r.uint(4, "n_dims"));
  const auto label_count = static_cast<std::uint32_t>(r.uint(4, "label_count"));

  Dataset d;
  for (std::uint32_t k = 0; k < label_count; ++k) d.label_names.push_back(r.string("label name"));

  // Every record is at least 8 + 4*n_dims bytes; reject impossible counts before allocating.
  const std::uint64_t min_record = 8 + 4ull * n_dims;
  if (n_samples > r.remaining() / min_record) {
    throw FormatError("feature file truncated at byte offset " + std::to_string(r.offset()) + ": header declares " +
                      std::to_string(n_samples) + " samples of at least " + std::to_string(min_record) +
                      " bytes, only " + std::to_string(r.remaining()) + " bytes remain");
  }
  d.features.resize(static_cast<Eigen::Index>(n_samples), n_dims);
  d.labels.reserve(n_samples);
  d.refs.reserve(n_samples);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    const auto label = static_cast<std::uint32_t>(r.uint(4, "class index"));
    if (label >= label_count) {
      throw FormatError("feature file: sample " + std::to_string(i) + " has class index " + std::to_string(label) +
                        " >= label_count " + std::to_string(label_count));
    }
    d.labels.push_back(label);
    d.refs.push_back(r.string("source_ref"));
    const auto raw = r.take(4ull * n_dims, "feature values");
    for (std::uint32_t j = 0; j < n_dims; ++j) {
      std::uint32_t bits = 0;
      for (int k = 0; k < 4; ++k) bits |= std::uint32_t(static_cast<unsigned char>(raw[4 * j + k])) << (8 * k);
      d.features(static_cast<Eigen::Index>(i), j) = static_cast<double>(std::bit_cast<float>(bits));
    }
    check_finite_row(d, i);
  }
  if (r.remaining() != 0) {
    throw FormatError("feature file: " + std::to_string(r.remaining()) + " trailing bytes after " +
                      std::to_string(n_samples) + " declared samples (byte offset " + std::to_string(r.offset()) + ")");
  }
  return d;
}

void write_features_csv(const Dataset& d, std::ostream& os) {
  d.check();
  os << "label,source_ref";
  for (Eigen::Index j = 0; j < d.dimension(); ++j) os << ",f" << j;
  os << '\n';
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i < d.size(); ++i) {
    os << csv_quote(d.label_names[d.labels[i]]) << ',' << csv_quote(d.refs[i]);
    for (Eigen::Index j = 0; j < d.dimension(); ++j) os << ',' << d.features(static_cast<Eigen::Index>(i), j);
    os << '\n';
  }
  os.precision(old_precision);
  if (!os) throw IoError("failed to write csv features");
}

Dataset read_features_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("csv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line, 1);
  if (header.size() < 2 || header[0] != "label" || header[1] != "source_ref") {
    throw FormatError("csv: header must start with \"label,source_ref\"");
  }
  const std::size_t n_dims = header.size() - 2;
  std::unordered_map<std::string, std::uint32_t> index;
  Dataset d;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size()) {
      throw FormatError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    auto [it, inserted] = index.try_emplace(fields[0], static_cast<std::uint32_t>(d.label_names.size()));
    if (inserted) d.label_names.push_back(fields[0]);
    d.labels.push_back(it->second);
    d.refs.push_back(fields[1]);
    for (std::size_t j = 0; j < n_dims; ++j) values.push_back(parse_double(fields[j + 2], line_no, j + 3));
  }
  d.features = Eigen::Map<const SampleMatrixXd>(values.data(), static_cast<Eigen::Index>(d.labels.size()),
                                                static_cast<Eigen::Index>(n_dims));
  for (std::size_t i = 0; i < d.size(); ++i) check_finite_row(d, i);
  return d;
}

Dataset read_features(const std::filesystem::path& path) {
  std::istringstream in(slurp(path));
  return is_csv(path) ? read_features_csv(in) : read_features_binary(in);
}

void write_features(const Dataset& dataset, const std::filesystem::path& path) {
  std::ostringstream out;
  if (is_csv(path)) {
    write_features_csv(dataset, out);
  } else {
    write_features_binary(dataset, out);
  }
  write_file_atomic(path, out.str());
}

// ---------------------------------------------------------------------------
// Models

std::string model_to_string(const Model& model) {
  if (model.classes.empty()) throw StateError("save_model: model has no classes");
  for (const auto& cm : model.classes) {
    if (cm.clouds.empty() || cm.stats.empty()) {
      throw StateError("save_model: class " + std::to_string(cm.class_id) + " was never trained");
    }
  }
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["dimension"] = model.dimension;
  doc["config"] = {{"initial_radius_sq", model.config.initial_radius_sq},
                   {"tie_break", "lowest_index"},
                   {"fingerprint", fingerprint(model.config)}};
  doc["label_names"] = model.label_names;
  doc["normalization"] = {{"mean", vec_to_json(model.normalization.mean)},
                          {"std", vec_to_json(model.normalization.std)},
                          {"min", vec_to_json(model.normalization.min)},
                          {"max", vec_to_json(model.normalization.max)}};
  json classes = json::array();
  for (const auto& cm : model.classes) {
    json c;
    c["class_id"] = cm.class_id;
    c["stats"] = {{"count", cm.stats.count},
                  {"mean_sq_norm", cm.stats.mean_sq_norm},
                  {"mean", vec_to_json(cm.stats.mean)}};
    json clouds = json::array();
    for (const auto& cl : cm.clouds) {
      clouds.push_back({{"source_ref", cl.source_ref},
                        {"support", cl.support},
                        {"radius_sq", cl.radius_sq},
                        {"prototype", vec_to_json(cl.prototype)}});
    }
    c["clouds"] = std::move(clouds);
    classes.push_back(std::move(c));
  }
  doc["classes"] = std::move(classes);

  const auto mcs = merge_megaclouds(model, build_adjacency(model));
  json megaclouds = json::array();
  for (const auto& mc : mcs) {
    megaclouds.push_back({{"id", mc.id}, {"class_id", mc.class_id}, {"members", mc.member_cloud_ids}});
  }
  doc["megaclouds"] = std::move(megaclouds);
  return doc.dump(1) + "\n";
}

Model model_from_string(const std::string& text_doc) {
  json doc;
  try {
    doc = json::parse(text_doc);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: not a valid JSON document: ") + e.what());
  }
  const auto version = count(doc, "format_version");
  if (version != static_cast<std::uint64_t>(kModelFormatVersion)) {
    throw FormatError("model: unsupported format_version " + std::to_string(version));
  }
  Model m;
  m.dimension = static_cast<Eigen::Index>(count(doc, "dimension"));
  if (m.dimension < 1) throw FormatError("model: dimension must be >= 1");

  const auto& cfg = field(doc, "config");
  m.config.initial_radius_sq = number(cfg, "initial_radius_sq");
  if (text(cfg, "tie_break") != "lowest_index") throw FormatError("model: unknown tie_break");
  try {
    validate(m.config);
  } catch (const StateError& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
  if (text(cfg, "fingerprint") != fingerprint(m.config)) {
    throw FormatError("model: config fingerprint does not match config fields");
  }

  const auto& names = field(doc, "label_names");
  if (!names.is_array()) throw FormatError("model: label_names is not an array");
  for (const auto& n : names) {
    if (!n.is_string()) throw FormatError("model: label name is not a string");
    m.label_names.push_back(n.get<std::string>());
  }

  const auto& norm = field(doc, "normalization");
  m.normalization.mean = vec_from_json(field(norm, "mean"), "normalization.mean");
  m.normalization.std = vec_from_json(field(norm, "std"), "normalization.std");
  m.normalization.min = vec_from_json(field(norm, "min"), "normalization.min");
  m.normalization.max = vec_from_json(field(norm, "max"), "normalization.max");
  const auto nd = m.normalization.mean.size();
  if (m.normalization.std.size() != nd || m.normalization.min.size() != nd || m.normalization.max.size() != nd ||
      (nd != 0 && nd != m.dimension)) {
    throw FormatError("model: normalization vectors have inconsistent sizes");
  }

  const auto& classes = field(doc, "classes");
  if (!classes.is_array() || classes.empty()) throw FormatError("model: classes must be a non-empty array");
  for (const auto& c : classes) {
    ClassModel<double> cm;
    const auto id = count(c, "class_id");
    if (id > 0xFFFFFFFFull) throw FormatError("model: class_id out of range");
    cm.class_id = static_cast<std::uint32_t>(id);
    if (!m.classes.empty() && cm.class_id <= m.classes.back().class_id) {
      throw FormatError("model: classes must be listed in strictly ascending class_id order");
    }
    const auto& st = field(c, "stats");
    cm.stats.count = count(st, "count");
    cm.stats.mean_sq_norm = number(st, "mean_sq_norm");
    cm.stats.mean = vec_from_json(field(st, "mean"), "stats.mean");
    if (cm.stats.mean.size() != m.dimension) throw FormatError("model: stats.mean has wrong dimension");
    if (!std::isfinite(cm.stats.mean_sq_norm) || cm.stats.mean_sq_norm < 0.0) {
      throw FormatError("model: stats.mean_sq_norm is invalid");
    }
    const auto& clouds = field(c, "clouds");
    if (!clouds.is_array() || clouds.empty()) throw FormatError("model: class " + std::to_string(id) + " has no clouds");
    for (const auto& cl : clouds) {
      DataCloud<double> cloud;
      cloud.class_id = cm.class_id;
      cloud.source_ref = text(cl, "source_ref");
      cloud.support = count(cl, "support");
      cloud.radius_sq = number(cl, "radius_sq");
      cloud.prototype = vec_from_json(field(cl, "prototype"), "prototype");
      if (cloud.support < 1) throw FormatError("model: cloud support must be >= 1");
      if (!std::isfinite(cloud.radius_sq) || cloud.radius_sq < 0.0) throw FormatError("model: radius_sq is invalid");
      if (cloud.prototype.size() != m.dimension) throw FormatError("model: prototype has wrong dimension");
      cm.clouds.push_back(std::move(cloud));
    }
    if (cm.total_support() != cm.stats.count) {
      throw FormatError("model: class " + std::to_string(id) + " supports do not sum to its sample count");
    }
    m.classes.push_back(std::move(cm));
  }

  // MegaCloud assignments are derived data; they must still form a partition of the clouds.
  const auto& mcs = field(doc, "megaclouds");
  if (!mcs.is_array()) throw FormatError("model: megaclouds is not an array");
  std::vector<int> seen(m.cloud_count(), 0);
  for (const auto& mc : mcs) {
    const auto& members = field(mc, "members");
    if (!members.is_array() || members.empty()) throw FormatError("model: megacloud without members");
    for (const auto& id : members) {
      if (!id.is_number_unsigned() || id.get<std::uint64_t>() >= seen.size()) {
        throw FormatError("model: megacloud member out of range");
      }
      ++seen[id.get<std::size_t>()];
    }
  }
  for (int s : seen) {
    if (s != 1) throw FormatError("model: megaclouds do not partition the clouds");
  }
  return m;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_string(model));
}

Model load_model(const std::filesystem::path& path) { return model_from_string(slurp(path)); }

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

}  // namespace xdnn
