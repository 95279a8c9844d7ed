#pragma once

// JSON operator files. Complex entries are [re, im] pairs in row-major
// nested arrays; labels are listed explicitly and dims are keyed by label.
//
//   {"kind": "comb", "labels": [0, 1, 2, 3], "dims": {"0": 2, "1": 4, ...},
//    "data": [[[re, im], ...], ...], "metadata": "..."}
//
// kind "tester" carries "uses", "elements" and "chain" (lists of labeled
// operators); kind "channel" carries "in_dim", "out_dim" and "kraus" (list
// of data arrays); kind "matrix" needs only "data".

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcomb/testers.hpp"

namespace qcomb {

using Json = nlohmann::json;

enum class FileKind { matrix, choi, comb, tester, channel };

inline const char* to_string(FileKind k) {
  switch (k) {
    case FileKind::matrix: return "matrix";
    case FileKind::choi: return "choi";
    case FileKind::comb: return "comb";
    case FileKind::tester: return "tester";
    default: return "channel";
  }
}

struct OperatorFile {
  FileKind kind = FileKind::matrix;
  ComplexMatrix matrix;      // kind matrix
  LabeledOperator op;        // kinds choi, comb
  Tester tester;             // kind tester
  Channel channel;           // kind channel
  std::string metadata;
};

namespace detail {

inline Json matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing field \"" + key + "\"");
  return j.at(key);
}

inline double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) throw FormatError(where + ": expected a number");
  return j.get<double>();
}

inline ComplexMatrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw FormatError(where + ": expected a nonempty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw FormatError(where + "/0: expected an array of [re, im] pairs");
  const std::size_t cols = j[0].size();
  ComplexMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string wi = where + "/" + std::to_string(i);
    if (!j[i].is_array() || j[i].size() != cols) throw FormatError(wi + ": row length differs from the first row");
    for (std::size_t k = 0; k < cols; ++k) {
      const Json& e = j[i][k];
      const std::string wk = wi + "/" + std::to_string(k);
      if (!e.is_array() || e.size() != 2) throw FormatError(wk + ": expected [re, im]");
      m(i, k) = cplx(number_at(e[0], wk + "/0"), number_at(e[1], wk + "/1"));
    }
  }
  return m;
}

inline Json labeled_to_json(const LabeledOperator& op) {
  Json j;
  j["labels"] = op.labels();
  Json dims = Json::object();
  for (std::size_t k = 0; k < op.labels().size(); ++k) dims[std::to_string(op.labels()[k])] = op.dims()[k];
  j["dims"] = dims;
  j["data"] = matrix_to_json(op.matrix());
  return j;
}

inline LabeledOperator labeled_from_json(const Json& j, const std::string& where) {
  const Json& jl = require(j, "labels", where);
  const Json& jd = require(j, "dims", where);
  if (!jl.is_array()) throw FormatError(where + "/labels: expected an array of integers");
  if (!jd.is_object()) throw FormatError(where + "/dims: expected an object mapping labels to dimensions");
  std::vector<Label> labels;
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < jl.size(); ++k) {
    if (!jl[k].is_number_integer()) throw FormatError(where + "/labels/" + std::to_string(k) + ": expected an integer");
    const Label l = jl[k].get<Label>();
    const std::string key = std::to_string(l);
    if (!jd.contains(key)) throw FormatError(where + "/dims: no dimension given for label " + key);
    const Json& dv = jd.at(key);
    if (!dv.is_number_integer() || dv.get<long long>() <= 0)
      throw FormatError(where + "/dims/" + key + ": dimension of label " + key + " must be a positive integer");
    labels.push_back(l);
    dims.push_back(dv.get<std::size_t>());
  }
  for (auto it = jd.begin(); it != jd.end(); ++it) {
    bool listed = false;
    for (auto l : labels) listed = listed || std::to_string(l) == it.key();
    if (!listed) throw FormatError(where + "/dims: label " + it.key() + " is not listed in labels");
  }
  ComplexMatrix m = matrix_from_json(require(j, "data", where), where + "/data");
  std::size_t side = 1;
  for (auto d : dims) side *= d;
  if (m.rows() != side || m.cols() != side)
    throw FormatError(where + ": data is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                      " but the dims multiply to " + std::to_string(side));
  try {
    return LabeledOperator(std::move(m), std::move(labels), std::move(dims));
  } catch (const ShapeError& e) {
    throw FormatError(where + ": " + e.what());
  }
}

inline void require_psd(const ComplexMatrix& m, const std::string& where) {
  if (!is_hermitian(m, 1e-10)) throw FormatError(where + ": operator is not Hermitian");
  const double scale = std::max(1.0, m.max_abs());
  if (psd_lower_bound(m.hermitian_part()) < -1e-9 * scale) throw FormatError(where + ": operator is not positive semidefinite");
}

}  // namespace detail

inline Json to_json(const ComplexMatrix& m) { return detail::matrix_to_json(m); }
inline Json to_json(const LabeledOperator& op) { return detail::labeled_to_json(op); }

inline Json to_json(const OperatorFile& f) {
  Json j;
  j["kind"] = to_string(f.kind);
  switch (f.kind) {
    case FileKind::matrix:
      j["data"] = detail::matrix_to_json(f.matrix);
      break;
    case FileKind::choi:
    case FileKind::comb: {
      const Json body = detail::labeled_to_json(f.op);
      for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
      break;
    }
    case FileKind::tester: {
      j["uses"] = f.tester.uses();
      Json el = Json::array(), ch = Json::array();
      for (const auto& e : f.tester.elements) el.push_back(detail::labeled_to_json(e));
      for (const auto& x : f.tester.chain) ch.push_back(detail::labeled_to_json(x));
      j["elements"] = el;
      j["chain"] = ch;
      break;
    }
    case FileKind::channel: {
      j["in_dim"] = f.channel.in_dim();
      j["out_dim"] = f.channel.out_dim();
      Json ks = Json::array();
      for (const auto& k : f.channel.kraus()) ks.push_back(detail::matrix_to_json(k));
      j["kraus"] = ks;
      break;
    }
  }
  j["metadata"] = f.metadata;
  return j;
}

inline OperatorFile from_json(const Json& j, const std::string& source = "file") {
  if (!j.is_object()) throw FormatError(source + ": top level must be an object");
  const Json& jk = detail::require(j, "kind", source);
  if (!jk.is_string()) throw FormatError(source + "/kind: expected a string");
  const std::string kind = jk.get<std::string>();
  OperatorFile f;
  if (j.contains("metadata")) {
    if (!j["metadata"].is_string()) throw FormatError(source + "/metadata: expected a string");
    f.metadata = j["metadata"].get<std::string>();
  }
  if (kind == "matrix") {
    f.kind = FileKind::matrix;
    f.matrix = detail::matrix_from_json(detail::require(j, "data", source), source + "/data");
  } else if (kind == "choi" || kind == "comb") {
    f.kind = kind == "choi" ? FileKind::choi : FileKind::comb;
    f.op = detail::labeled_from_json(j, source);
    detail::require_psd(f.op.matrix(), source);
  } else if (kind == "tester") {
    f.kind = FileKind::tester;
    std::vector<std::string> missing;
    for (const char* key : {"uses", "elements", "chain"})
      if (!j.contains(key)) missing.push_back(key);
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
      throw FormatError(source + ": tester is missing required fields: " + list + " (required: uses, elements, chain)");
    }
    const Json& je = j["elements"];
    const Json& jc = j["chain"];
    if (!je.is_array() || je.empty()) throw FormatError(source + "/elements: expected a nonempty array");
    if (!jc.is_array() || jc.empty()) throw FormatError(source + "/chain: expected a nonempty array");
    if (!j["uses"].is_number_integer() || j["uses"].get<long long>() != static_cast<long long>(jc.size()))
      throw FormatError(source + "/uses: must equal the length of chain");
    for (std::size_t k = 0; k < je.size(); ++k) {
      const std::string w = source + "/elements/" + std::to_string(k);
      f.tester.elements.push_back(detail::labeled_from_json(je[k], w));
      detail::require_psd(f.tester.elements.back().matrix(), w);
    }
    for (std::size_t k = 0; k < jc.size(); ++k) {
      const std::string w = source + "/chain/" + std::to_string(k);
      f.tester.chain.push_back(detail::labeled_from_json(jc[k], w));
      detail::require_psd(f.tester.chain.back().matrix(), w);
    }
  } else if (kind == "channel") {
    f.kind = FileKind::channel;
    const Json& jks = detail::require(j, "kraus", source);
    const Json& jin = detail::require(j, "in_dim", source);
    const Json& jout = detail::require(j, "out_dim", source);
    if (!jin.is_number_integer() || !jout.is_number_integer()) throw FormatError(source + ": in_dim/out_dim must be integers");
    if (!jks.is_array() || jks.empty()) throw FormatError(source + "/kraus: expected a nonempty array");
    std::vector<ComplexMatrix> ks;
    for (std::size_t k = 0; k < jks.size(); ++k)
      ks.push_back(detail::matrix_from_json(jks[k], source + "/kraus/" + std::to_string(k)));
    try {
      f.channel = Channel(std::move(ks), jin.get<std::size_t>(), jout.get<std::size_t>());
    } catch (const Error& e) {
      throw FormatError(source + ": " + e.what());
    }
  } else {
    throw FormatError(source + "/kind: unknown kind \"" + kind + "\" (expected matrix, choi, comb, tester or channel)");
  }
  return f;
}

inline std::string dump(const OperatorFile& f) { return to_json(f).dump(1); }

inline OperatorFile parse(const std::string& text, const std::string& source = "file") {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(source + ": JSON parse error: " + e.what());
  }
  return from_json(j, source);
}

inline OperatorFile load_operator_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

inline void save_operator_file(const std::string& path, const OperatorFile& f) {
  std::ofstream out(path);
  if (!out) throw FormatError(path + ": cannot open file for writing");
  out << dump(f) << '\n';
  if (!out) throw FormatError(path + ": write failed");
}

inline OperatorFile comb_file(const MemoryChannel& mc, std::string metadata = {}) {
  OperatorFile f;
  f.kind = mc.uses() == 1 ? FileKind::choi : FileKind::comb;
  f.op = mc.choi();
  f.metadata = std::move(metadata);
  return f;
}

inline OperatorFile tester_file(const Tester& t, std::string metadata = {}) {
  OperatorFile f;
  f.kind = FileKind::tester;
  f.tester = t;
  f.metadata = std::move(metadata);
  return f;
}

inline OperatorFile matrix_file(const ComplexMatrix& m, std::string metadata = {}) {
  OperatorFile f;
  f.kind = FileKind::matrix;
  f.matrix = m;
  f.metadata = std::move(metadata);
  return f;
}

/// Memory channel described by a file of kind choi, comb or channel.
inline MemoryChannel memory_channel_of(const OperatorFile& f) {
  switch (f.kind) {
    case FileKind::choi:
    case FileKind::comb:
      return MemoryChannel(f.op);
    case FileKind::channel:
      return comb_from_sequence({f.channel});
    default:
      throw FormatError(std::string("expected a choi, comb or channel file, got kind ") + to_string(f.kind));
  }
}

}  // namespace qcomb
