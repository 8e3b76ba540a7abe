#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "krono/ensembles.hpp"
#include "krono/types.hpp"

// Exchange container for unitaries and projection bases.
//
// Binary layout (little endian):
//   8 bytes   magic "KRONOMAT"
//   4 bytes   uint32 header length L
//   L bytes   JSON header: {"schema":"krono.matrix/1","rows":R,"cols":C,"dtype":"complex128",
//                           "order":"row-major","n":..,"k":..,"seed":..,"kind":".."}
//   R*C*16    row-major complex128 entries, (re, im) pairs of IEEE doubles
//
// JSON layout: the same header fields plus "re" and "im" as arrays of rows.
namespace krono::io {

struct MatrixHeader {
  Index n = 0;
  int k = 1;
  std::optional<Seed> seed;
  std::string kind;
};

struct StoredMatrix {
  MatrixHeader header;
  CMatrix entries;
};

void write_matrix_binary(const std::filesystem::path& path, const CMatrix& entries, const MatrixHeader& header);
void write_matrix_json(const std::filesystem::path& path, const CMatrix& entries, const MatrixHeader& header);
// Chooses the layout from the extension: ".json" is JSON, anything else binary.
void write_matrix(const std::filesystem::path& path, const CMatrix& entries, const MatrixHeader& header);

StoredMatrix read_matrix(const std::filesystem::path& path);

void save_unitary(const std::filesystem::path& path, const ensembles::UnitaryMatrix& u, int k = 1);
// Throws DataError when the stored matrix is not unitary to 1e-10.
ensembles::UnitaryMatrix load_unitary(const std::filesystem::path& path);

// Stores the range basis (N x r) of the projection.
void save_projection(const std::filesystem::path& path, const ensembles::Projection& pi);
ensembles::Projection load_projection(const std::filesystem::path& path);

}  // namespace krono::io
