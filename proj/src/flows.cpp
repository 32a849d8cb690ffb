#include "migra/flows.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "csv.hpp"

namespace migra {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::IoError, "write failed for '" + path.string() + "'");
}

namespace {

template <class V>
std::map<int, BasicFlowMatrix<V>> parse_any(std::string_view text, const ZoneTablePtr& zones) {
  using Entry = typename BasicFlowMatrix<V>::Entry;
  std::map<int, std::vector<Entry>> by_year;
  bool header_seen = false;
  csv::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    auto fields = csv::split(line, line_no);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != 4 || fields[0] != "year" || fields[1] != "origin_id" || fields[2] != "destination_id" ||
          fields[3] != "count")
        throw Error(Errc::ParseError, "line " + std::to_string(line_no) +
                                          ": header must be year,origin_id,destination_id,count");
      return;
    }
    if (fields.size() != 4)
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                        std::to_string(fields.size()));
    const auto year = csv::parse_int(fields[0], line_no, "year");
    const auto origin = zones->find(fields[1]);
    const auto destination = zones->find(fields[2]);
    if (!origin || !destination)
      throw Error(Errc::UnknownZone, "line " + std::to_string(line_no) + ": unknown zone '" +
                                         (origin ? fields[2] : fields[1]) + "'");
    if (*origin == *destination)
      throw Error(Errc::DiagonalEntry, "line " + std::to_string(line_no) + ": within-zone flow for '" + fields[1] + "'");
    V value;
    if constexpr (std::is_integral_v<V>) {
      value = csv::parse_int(fields[3], line_no, "count");
    } else {
      value = csv::parse_double(fields[3], line_no, "count");
      if (!std::isfinite(value)) throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": non-finite count");
    }
    if (value < V{0}) throw Error(Errc::NegativeCount, "line " + std::to_string(line_no) + ": negative count");
    by_year[static_cast<int>(year)].push_back(
        {static_cast<std::uint32_t>(*origin), static_cast<std::uint32_t>(*destination), value});
  });
  if (!header_seen) throw Error(Errc::ParseError, "flow file is empty");
  std::map<int, BasicFlowMatrix<V>> out;
  for (auto& [year, entries] : by_year) out.emplace(year, BasicFlowMatrix<V>(zones, year, std::move(entries)));
  return out;
}

template <class V>
std::string to_csv(std::span<const BasicFlowMatrix<V>> years) {
  std::string out = "year,origin_id,destination_id,count\n";
  for (const auto& m : years) {
    const std::string year = std::to_string(m.year());
    for (const auto& e : m.entries()) {
      out += year;
      out += ',';
      out += csv::quote(m.zones().id(e.origin));
      out += ',';
      out += csv::quote(m.zones().id(e.destination));
      out += ',';
      if constexpr (std::is_integral_v<V>)
        out += std::to_string(e.value);
      else
        out += csv::format_double(e.value);
      out += '\n';
    }
  }
  return out;
}

}  // namespace

std::map<int, FlowMatrix> parse_flows(std::string_view text, const ZoneTablePtr& zones) {
  return parse_any<std::int64_t>(text, zones);
}

std::map<int, FlowMatrix> load_flows(const std::filesystem::path& path, const ZoneTablePtr& zones) {
  return parse_flows(read_text_file(path), zones);
}

std::map<int, PredictedFlows> parse_predicted_flows(std::string_view text, const ZoneTablePtr& zones) {
  return parse_any<double>(text, zones);
}

std::map<int, PredictedFlows> load_predicted_flows(const std::filesystem::path& path, const ZoneTablePtr& zones) {
  return parse_predicted_flows(read_text_file(path), zones);
}

std::string flows_to_csv(std::span<const FlowMatrix> years) { return to_csv(years); }
std::string flows_to_csv(std::span<const PredictedFlows> years) { return to_csv(years); }

void save_flows(std::span<const FlowMatrix> years, const std::filesystem::path& path) {
  write_text_file(path, flows_to_csv(years));
}
void save_flows(std::span<const PredictedFlows> years, const std::filesystem::path& path) {
  write_text_file(path, flows_to_csv(years));
}

}  // namespace migra
