#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "fetalscreen/classifier.hpp"
#include "fetalscreen/error.hpp"

namespace fetalscreen {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_field(const std::string& s) {
  if (s.empty() || s.find_first_of(",\n\r\"") != std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "identifier '" + s + "' cannot be written to CSV");
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
    start = end + 1;
  }
  return out;
}

double parse_probability(const std::string& s, std::size_t line_no) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    throw Error(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + ": '" + s + "' is not a number");
  if (v < 0.0 || v > 1.0)
    throw Error(ErrorCode::ProbabilityOutOfRange,
                "line " + std::to_string(line_no) + ": probability " + s + " outside [0, 1]");
  return v;
}

template <typename Fn>
auto wrap_parse(std::size_t line_no, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument)
      throw Error(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + ": " + e.detail());
    throw;
  }
}

}  // namespace

std::string lesion_predictions_csv(std::span<const LesionPredictionRow> rows) {
  std::string out(kLesionCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    check_field(r.study_id);
    check_field(r.frame_id);
    if (!(r.p_abnormal >= 0.0 && r.p_abnormal <= 1.0))
      throw Error(ErrorCode::ProbabilityOutOfRange, "probability outside [0, 1]");
    out += r.study_id + ',' + r.frame_id + ',' + std::string(view_name(r.view)) + ',' + std::string(task_name(r.task)) +
           ',' + fmt(r.p_abnormal) + '\n';
  }
  return out;
}

std::string view_predictions_csv(std::span<const ViewPredictionRow> rows) {
  std::string out(kViewCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    check_field(r.study_id);
    check_field(r.frame_id);
    out += r.study_id + ',' + r.frame_id + ',' + std::string(view_name(r.view));
    for (double p : r.probabilities) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::ProbabilityOutOfRange, "probability outside [0, 1]");
      out += ',' + fmt(p);
    }
    out += '\n';
  }
  return out;
}

std::vector<LesionPredictionRow> parse_lesion_predictions(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != kLesionCsvHeader)
    throw Error(ErrorCode::MalformedFile, "expected header '" + std::string(kLesionCsvHeader) + "'");
  std::vector<LesionPredictionRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i]);
    if (f.size() != 5) throw Error(ErrorCode::MalformedFile, "line " + std::to_string(i + 1) + ": expected 5 fields");
    if (f[0].empty() || f[1].empty()) throw Error(ErrorCode::MalformedFile, "line " + std::to_string(i + 1) + ": empty id");
    LesionPredictionRow r;
    r.study_id = f[0];
    r.frame_id = f[1];
    r.view = wrap_parse(i + 1, [&] { return parse_view(f[2]); });
    r.task = wrap_parse(i + 1, [&] { return parse_task(f[3]); });
    r.p_abnormal = parse_probability(f[4], i + 1);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ViewPredictionRow> parse_view_predictions(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != kViewCsvHeader)
    throw Error(ErrorCode::MalformedFile, "expected header '" + std::string(kViewCsvHeader) + "'");
  std::vector<ViewPredictionRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i]);
    if (f.size() != 3 + kViewCount)
      throw Error(ErrorCode::MalformedFile, "line " + std::to_string(i + 1) + ": expected 8 fields");
    if (f[0].empty() || f[1].empty()) throw Error(ErrorCode::MalformedFile, "line " + std::to_string(i + 1) + ": empty id");
    ViewPredictionRow r;
    r.study_id = f[0];
    r.frame_id = f[1];
    r.view = wrap_parse(i + 1, [&] { return parse_view(f[2]); });
    for (std::size_t v = 0; v < kViewCount; ++v) r.probabilities[v] = parse_probability(f[3 + v], i + 1);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ViewPredictionSet> group_predictions(std::span<const LesionPredictionRow> rows) {
  std::vector<ViewPredictionSet> out;
  std::map<std::pair<std::string, DiagnosticTask>, std::size_t> where;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.study_id, r.task);
    auto it = where.find(key);
    if (it == where.end()) {
      it = where.emplace(key, out.size()).first;
      out.push_back({r.study_id, r.task, {}});
    }
    out[it->second].probabilities[view_index(r.view)].push_back(r.p_abnormal);
  }
  return out;
}

std::vector<ViewPredictionSet> import_predictions(const std::filesystem::path& path) {
  const auto rows = parse_lesion_predictions(read_text_file(path));
  return group_predictions(rows);
}

}  // namespace fetalscreen
