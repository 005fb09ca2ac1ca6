#include "uscx/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "uscx/extreal.hpp"

namespace uscx {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed numeric token: '" + s + "'");
  }
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string to_token(ExtReal x) {
  if (x.is_pos_inf()) return "+inf";
  if (x.is_neg_inf()) return "-inf";
  return format_double(x.raw());
}

ExtReal extreal_from_token(const std::string& token) {
  if (token == "+inf" || token == "inf") return ExtReal::pos_inf();
  if (token == "-inf") return ExtReal::neg_inf();
  return ExtReal(parse_double(token));
}

std::string field_to_csv(const GridField& field) {
  const Domain& d = field.domain;
  std::ostringstream out;
  out << (d.dim() == 2 ? "s1,s2,value\n" : "s1,value\n");
  for (int i0 = 0; i0 < d.res(0); ++i0) {
    for (int i1 = 0; i1 < d.res(1); ++i1) {
      out << format_double(d.coord(0, i0));
      if (d.dim() == 2) out << ',' << format_double(d.coord(1, i1));
      out << ',' << to_token(field.at(i0, i1)) << '\n';
    }
  }
  return out.str();
}

GridField field_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_row(line);
    break;
  }
  int dim = 0;
  if (header.size() == 2 && header[0] == "s1" && header[1] == "value") dim = 1;
  if (header.size() == 3 && header[0] == "s1" && header[1] == "s2" && header[2] == "value") dim = 2;
  if (dim == 0) throw std::invalid_argument("field CSV: bad header row");

  std::vector<std::array<double, 2>> coords;
  std::vector<ExtReal> values;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_row(line);
    if (static_cast<int>(cells.size()) != dim + 1) {
      throw std::invalid_argument("field CSV: wrong column count");
    }
    std::array<double, 2> c{parse_double(cells[0]), 0.0};
    if (dim == 2) c[1] = parse_double(cells[1]);
    coords.push_back(c);
    values.push_back(extreal_from_token(cells[dim]));
  }
  if (coords.size() < 2) throw std::invalid_argument("field CSV: too few rows");

  // Recover per-axis node lists from row-major order, then check regularity.
  std::vector<double> axis0, axis1;
  for (const auto& c : coords) {
    if (axis0.empty() || c[0] != axis0.back()) axis0.push_back(c[0]);
  }
  if (dim == 2) {
    for (const auto& c : coords) {
      if (c[0] != coords[0][0]) break;
      axis1.push_back(c[1]);
    }
  } else {
    axis1.push_back(0.0);
  }
  const int n0 = static_cast<int>(axis0.size());
  const int n1 = static_cast<int>(axis1.size());
  if (coords.size() != static_cast<std::size_t>(n0) * n1) {
    throw std::invalid_argument("field CSV: incomplete grid");
  }

  Domain d = dim == 2 ? Domain::make2d(axis0.front(), axis0.back(), n0, axis1.front(),
                                       axis1.back(), n1)
                      : Domain::make1d(axis0.front(), axis0.back(), n0);
  for (int i = 0; i < n0; ++i) {
    if (d.coord(0, i) != axis0[i]) throw std::invalid_argument("field CSV: irregular grid");
  }
  if (dim == 2) {
    for (int i = 0; i < n1; ++i) {
      if (d.coord(1, i) != axis1[i]) throw std::invalid_argument("field CSV: irregular grid");
    }
  }
  for (std::size_t k = 0; k < coords.size(); ++k) {
    auto ij = d.unflat(k);
    if (coords[k][0] != d.coord(0, ij[0]) ||
        (dim == 2 && coords[k][1] != d.coord(1, ij[1]))) {
      throw std::invalid_argument("field CSV: rows not in row-major order");
    }
  }

  GridField f(d);
  f.values = std::move(values);
  return f;
}

void write_field_csv(const std::filesystem::path& path, const GridField& field,
                     const std::string& comment) {
  std::string body = field_to_csv(field);
  if (!comment.empty()) body = "# " + comment + "\n" + body;
  write_text_file(path, body);
}

GridField read_field_csv(const std::filesystem::path& path) {
  return field_from_csv(read_text_file(path));
}

nlohmann::json domain_to_json(const Domain& d) {
  nlohmann::json bounds = nlohmann::json::array();
  nlohmann::json resolution = nlohmann::json::array();
  for (int axis = 0; axis < d.dim(); ++axis) {
    bounds.push_back({d.lo(axis), d.hi(axis)});
    resolution.push_back(d.res(axis));
  }
  return {{"dim", d.dim()}, {"bounds", bounds}, {"resolution", resolution}};
}

Domain domain_from_json(const nlohmann::json& j) {
  const int dim = j.at("dim").get<int>();
  const auto& bounds = j.at("bounds");
  const auto& res = j.at("resolution");
  if (dim == 1) {
    return Domain::make1d(bounds.at(0).at(0), bounds.at(0).at(1), res.at(0));
  }
  if (dim == 2) {
    return Domain::make2d(bounds.at(0).at(0), bounds.at(0).at(1), res.at(0),
                          bounds.at(1).at(0), bounds.at(1).at(1), res.at(1));
  }
  throw std::invalid_argument("domain JSON: dim must be 1 or 2");
}

nlohmann::json probe_to_json(const CompactProbe& probe, int dim) {
  nlohmann::json parts = nlohmann::json::array();
  for (const ProbePart& p : probe.parts) {
    nlohmann::json box = nlohmann::json::array();
    for (int axis = 0; axis < dim; ++axis) box.push_back({p.box.lo[axis], p.box.hi[axis]});
    parts.push_back({{"box", box}, {"level", p.level}});
  }
  return {{"parts", parts}};
}

CompactProbe probe_from_json(const nlohmann::json& j) {
  CompactProbe probe;
  for (const auto& part : j.at("parts")) {
    ProbePart p;
    const auto& box = part.at("box");
    for (std::size_t axis = 0; axis < box.size() && axis < 2; ++axis) {
      p.box.lo[axis] = box.at(axis).at(0).get<double>();
      p.box.hi[axis] = box.at(axis).at(1).get<double>();
    }
    p.level = part.at("level").get<double>();
    probe.parts.push_back(p);
  }
  return probe;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
}

}  // namespace uscx
