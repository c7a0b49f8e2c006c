#include "bilab/field_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "bilab/error.hpp"

namespace bilab {

FieldFormatError::FieldFormatError(int line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

void write_field(std::ostream& os, const ScalarField& f) {
  const DomainGrid& g = f.grid();
  os << "# " << g.nx() << ',' << g.ny() << '\n';
  os << std::setprecision(17) << "# " << g.hx() << ',' << g.hy() << '\n';
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) os << i << ',' << j << ',' << f.at(i, j) << '\n';
  }
}

void save_field(const std::string& path, const ScalarField& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_field(os, f);
  if (!os) throw Error("write failed: " + path);
}

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

template <class T>
T parse_number(const std::string& text, int line) {
  std::size_t b = text.find_first_not_of(" \t\r");
  std::size_t e = text.find_last_not_of(" \t\r");
  if (b == std::string::npos) throw FieldFormatError(line, "empty number");
  std::string t = text.substr(b, e - b + 1);
  T value{};
  if constexpr (std::is_integral_v<T>) {
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw FieldFormatError(line, "bad integer '" + t + "'");
    }
  } else {
    char* end = nullptr;
    value = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw FieldFormatError(line, "bad number '" + t + "'");
  }
  return value;
}

std::vector<std::string> header_fields(const std::string& s, int line) {
  if (s.size() < 2 || s[0] != '#') throw FieldFormatError(line, "expected '#' header line");
  auto parts = split_commas(s.substr(1));
  if (parts.size() != 2) throw FieldFormatError(line, "header needs two comma-separated values");
  return parts;
}

}  // namespace

ScalarField read_field(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FieldFormatError(1, "missing '# nx,ny' header");
  auto shape = header_fields(line, 1);
  int nx = parse_number<int>(shape[0], 1);
  int ny = parse_number<int>(shape[1], 1);
  if (!std::getline(is, line)) throw FieldFormatError(2, "missing '# hx,hy' header");
  auto spacing = header_fields(line, 2);
  double hx = parse_number<double>(spacing[0], 2);
  double hy = parse_number<double>(spacing[1], 2);

  GridPtr grid;
  try {
    grid = DomainGrid::make(nx, ny);
  } catch (const PreconditionError& e) {
    throw FieldFormatError(1, e.what());
  }
  if (std::abs(hx - grid->hx()) > 1e-12 || std::abs(hy - grid->hy()) > 1e-12) {
    throw FieldFormatError(2, "spacing does not match node counts");
  }

  ScalarField f(grid);
  std::vector<char> seen(grid->size(), 0);
  int lineno = 2;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto parts = split_commas(line);
    if (parts.size() != 3) throw FieldFormatError(lineno, "expected 'i,j,value'");
    int i = parse_number<int>(parts[0], lineno);
    int j = parse_number<int>(parts[1], lineno);
    double v = parse_number<double>(parts[2], lineno);
    if (i < 0 || j < 0 || i >= nx || j >= ny) throw FieldFormatError(lineno, "node index out of range");
    std::size_t k = grid->index(i, j);
    if (seen[k]) throw FieldFormatError(lineno, "duplicate node");
    if (!std::isfinite(v)) throw FieldFormatError(lineno, "non-finite value");
    seen[k] = 1;
    f[k] = v;
    ++rows;
  }
  if (rows != grid->size()) {
    throw FieldFormatError(lineno, "expected " + std::to_string(grid->size()) + " rows, got " +
                                       std::to_string(rows));
  }
  return f;
}

ScalarField load_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return read_field(is);
}

ScalarField load_field(const std::string& path, const GridPtr& expected) {
  ScalarField f = load_field(path);
  if (!(f.grid() == *expected)) {
    throw PreconditionError("grid mismatch loading " + path + ": file is " +
                            std::to_string(f.grid().nx()) + "x" + std::to_string(f.grid().ny()) +
                            ", slot is " + std::to_string(expected->nx()) + "x" +
                            std::to_string(expected->ny()));
  }
  return ScalarField(expected, std::vector<double>(f.values().begin(), f.values().end()));
}

}  // namespace bilab
