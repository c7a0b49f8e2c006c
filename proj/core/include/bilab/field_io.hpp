#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "bilab/grid.hpp"

namespace bilab {

// CSV layout:
//   # nx,ny
//   # hx,hy
//   i,j,value      (nx*ny rows, row-major, 17 significant digits)
void write_field(std::ostream& os, const ScalarField& f);
void save_field(const std::string& path, const ScalarField& f);

// Reads a field and builds a fresh grid from the header.
ScalarField read_field(std::istream& is);
ScalarField load_field(const std::string& path);

// Reads into a slot of known shape; a header that disagrees with `expected`
// is an error.
ScalarField load_field(const std::string& path, const GridPtr& expected);

class FieldFormatError : public std::runtime_error {
 public:
  FieldFormatError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace bilab
