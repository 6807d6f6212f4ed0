#pragma once

// LLBFIELD v1 snapshots: one ASCII header line
//   "LLBFIELD v1 <dim> <nx> [<ny> [<nz>]]\n"
// followed by little-endian IEEE-754 doubles, three per node, x fastest.

#include <filesystem>
#include <iosfwd>

#include "llb/grid.hpp"

namespace llb {

void write_field(std::ostream& out, const VectorField& f);
void write_field(const std::filesystem::path& path, const VectorField& f);

/// Reads a snapshot onto `grid`; the header shape must match the grid exactly.
VectorField read_field(std::istream& in, const Grid& grid);
VectorField read_field(const std::filesystem::path& path, const Grid& grid);

}  // namespace llb
