#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "csma_aoi/errors.hpp"
#include "csma_aoi/sweep.hpp"

namespace csma_aoi {

namespace {

using Column = std::optional<double> SweepRow::*;

struct NumericColumn {
  const char* name;
  Column member;
};

const NumericColumn kColumns[] = {
    {"ptx_a", &SweepRow::ptx_a}, {"pcl_a", &SweepRow::pcl_a},
    {"pidle_a", &SweepRow::pidle_a}, {"mu_a", &SweepRow::mu_a},
    {"aoi_a", &SweepRow::aoi_a}, {"ptx_s", &SweepRow::ptx_s},
    {"pcl_s", &SweepRow::pcl_s}, {"mu_s", &SweepRow::mu_s},
    {"aoi_s", &SweepRow::aoi_s}, {"aoi_s_se", &SweepRow::aoi_s_se},
};

double parse_number(const std::string& s, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    fail(ErrorKind::invalid_spec, std::string("bad number in column ") + what + ": '" + s + "'");
  }
  return v;
}

double rounded(double x) { return std::strtod(format_number(x).c_str(), nullptr); }

}  // namespace

std::string csv_header() {
  return "var,p,N,w0,ptx_a,pcl_a,pidle_a,mu_a,aoi_a,ptx_s,pcl_s,mu_s,aoi_s,aoi_s_se,seed,status";
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string to_csv(const std::vector<SweepRow>& rows) {
  std::string out = csv_header() + "\n";
  for (const auto& r : rows) {
    out += r.var + "," + format_number(r.p) + "," + std::to_string(r.n) + "," +
           std::to_string(r.w0);
    for (const auto& c : kColumns) {
      out += ",";
      if (r.*c.member) out += format_number(*(r.*c.member));
    }
    out += "," + std::to_string(r.seed) + "," + r.status + "\n";
  }
  return out;
}

std::string to_json(const std::vector<SweepRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["var"] = r.var;
    o["p"] = rounded(r.p);
    o["N"] = r.n;
    o["w0"] = r.w0;
    for (const auto& c : kColumns) {
      const auto& v = r.*c.member;
      o[c.name] = v ? nlohmann::ordered_json(rounded(*v)) : nlohmann::ordered_json(nullptr);
    }
    o["seed"] = r.seed;
    o["status"] = r.status;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::vector<SweepRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) {
    fail(ErrorKind::invalid_spec, "CSV header mismatch");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.push_back("");
    if (f.size() != 16) fail(ErrorKind::invalid_spec, "CSV row has " + std::to_string(f.size()) + " fields");
    SweepRow r;
    r.var = f[0];
    r.p = parse_number(f[1], "p");
    r.n = static_cast<int>(parse_number(f[2], "N"));
    r.w0 = static_cast<int>(parse_number(f[3], "w0"));
    for (std::size_t k = 0; k < std::size(kColumns); ++k) {
      const std::string& s = f[4 + k];
      if (!s.empty()) r.*kColumns[k].member = parse_number(s, kColumns[k].name);
    }
    r.seed = std::strtoull(f[14].c_str(), nullptr, 10);
    r.status = f[15];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SweepRow> parse_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_spec, std::string("bad JSON: ") + e.what());
  }
  if (!arr.is_array()) fail(ErrorKind::invalid_spec, "JSON rows must be an array");
  std::vector<SweepRow> rows;
  try {
    for (const auto& o : arr) {
      SweepRow r;
      r.var = o.at("var").get<std::string>();
      r.p = o.at("p").get<double>();
      r.n = o.at("N").get<int>();
      r.w0 = o.at("w0").get<int>();
      for (const auto& c : kColumns) {
        const auto& v = o.at(c.name);
        if (!v.is_null()) r.*c.member = v.get<double>();
      }
      r.seed = o.at("seed").get<std::uint64_t>();
      r.status = o.at("status").get<std::string>();
      rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_spec, std::string("bad JSON row: ") + e.what());
  }
  return rows;
}

void emit(const std::vector<SweepRow>& rows, const std::string& format,
          const std::string& path) {
  if (format != "csv" && format != "json") {
    fail(ErrorKind::invalid_spec, "format must be csv or json");
  }
  if (rows.empty()) fail(ErrorKind::domain, "nothing to emit");
  const std::string body = format == "csv" ? to_csv(rows) : to_json(rows);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << body;
  out.flush();
  if (!out) fail(ErrorKind::io, "write to '" + path + "' failed");
}

}  // namespace csma_aoi
