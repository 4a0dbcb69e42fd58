#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "pretrends/event_study.hpp"

namespace pretrends {

namespace {

constexpr std::string_view kHeader = "unit,period,treatment,outcome";

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, const char* name, std::size_t line) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && field.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw ParseError(std::string("invalid ") + name + " '" + std::string(field) + "'", line);
  }
  return value;
}

}  // namespace

PanelData parse_panel(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;

  if (!std::getline(in, raw)) throw ParseError("missing header", 1);
  ++line;
  std::string_view header = trim_cr(raw);
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  if (header != kHeader) {
    throw ParseError("expected header '" + std::string(kHeader) + "'", line);
  }

  std::vector<Observation> rows;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view s = trim_cr(raw);
    if (s.empty()) continue;

    std::string_view fields[4];
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const std::size_t comma = s.find(',', start);
      if (f < 3 && comma == std::string_view::npos) throw ParseError("expected 4 fields", line);
      if (f == 3 && comma != std::string_view::npos) throw ParseError("expected 4 fields", line);
      fields[f] = s.substr(start, f < 3 ? comma - start : std::string_view::npos);
      start = comma + 1;
    }

    Observation obs;
    if (fields[0].empty()) throw ParseError("empty unit id", line);
    obs.unit = std::string(fields[0]);
    obs.period = parse_number<int>(fields[1], "period", line);
    if (fields[2] == "1") {
      obs.treated = true;
    } else if (fields[2] == "0") {
      obs.treated = false;
    } else {
      throw ParseError("treatment must be 0 or 1, got '" + std::string(fields[2]) + "'", line);
    }
    obs.outcome = parse_number<double>(fields[3], "outcome", line);
    if (!std::isfinite(obs.outcome)) throw ParseError("outcome must be finite", line);
    rows.push_back(std::move(obs));
  }
  return PanelData(std::move(rows));
}

PanelData load_panel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open input file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_panel(buf.str());
}

std::string format_panel(const PanelData& data) {
  std::string out(kHeader);
  out += '\n';
  char num[32];
  for (const auto& r : data.rows()) {
    out += r.unit;
    out += ',';
    out += std::to_string(r.period);
    out += r.treated ? ",1," : ",0,";
    auto [end, ec] = std::to_chars(num, num + sizeof num, r.outcome);
    out.append(num, end);
    out += '\n';
  }
  return out;
}

void write_panel(const PanelData& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file " + path.string());
  out << format_panel(data);
}

}  // namespace pretrends
