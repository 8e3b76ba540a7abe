#include "krono/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "krono/errors.hpp"

namespace krono::io {

namespace {

using nlohmann::json;
constexpr std::array<char, 8> kMagic{'K', 'R', 'O', 'N', 'O', 'M', 'A', 'T'};
constexpr const char* kSchema = "krono.matrix/1";

static_assert(std::endian::native == std::endian::little, "binary container assumes a little-endian host");

json header_json(const CMatrix& entries, const MatrixHeader& header) {
  json h;
  h["schema"] = kSchema;
  h["rows"] = entries.rows();
  h["cols"] = entries.cols();
  h["dtype"] = "complex128";
  h["order"] = "row-major";
  h["n"] = header.n;
  h["k"] = header.k;
  h["seed"] = header.seed ? json(*header.seed) : json(nullptr);
  h["kind"] = header.kind;
  return h;
}

MatrixHeader parse_header(const json& h, const std::filesystem::path& path, Index& rows, Index& cols) {
  try {
    if (h.at("schema").get<std::string>() != kSchema) {
      throw DataError(fmt::format("{}: unsupported schema '{}'", path.string(), h.at("schema").get<std::string>()));
    }
    rows = h.at("rows").get<Index>();
    cols = h.at("cols").get<Index>();
    if (rows < 0 || cols < 0) throw DataError(fmt::format("{}: negative shape", path.string()));
    MatrixHeader header;
    header.n = h.value("n", Index{0});
    header.k = h.value("k", 1);
    if (h.contains("seed") && !h["seed"].is_null()) header.seed = h["seed"].get<Seed>();
    header.kind = h.value("kind", std::string{});
    return header;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: malformed matrix header: {}", path.string(), e.what()));
  }
}

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

bool is_json_path(const std::filesystem::path& path) { return path.extension() == ".json"; }

}  // namespace

void write_matrix_binary(const std::filesystem::path& path, const CMatrix& entries, const MatrixHeader& header) {
  const std::string text = header_json(entries, header).dump();
  auto out = open_for_write(path, std::ios::binary | std::ios::trunc);
  out.write(kMagic.data(), kMagic.size());
  const auto length = static_cast<std::uint32_t>(text.size());
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (Index i = 0; i < entries.rows(); ++i) {
    for (Index j = 0; j < entries.cols(); ++j) {
      const std::array<double, 2> pair{entries(i, j).real(), entries(i, j).imag()};
      out.write(reinterpret_cast<const char*>(pair.data()), sizeof(pair));
    }
  }
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

void write_matrix_json(const std::filesystem::path& path, const CMatrix& entries, const MatrixHeader& header) {
  json doc = header_json(entries, header);
  json re = json::array();
  json im = json::array();
  for (Index i = 0; i < entries.rows(); ++i) {
    json re_row = json::array();
    json im_row = json::array();
    for (Index j = 0; j < entries.cols(); ++j) {
      re_row.push_back(entries(i, j).real());
      im_row.push_back(entries(i, j).imag());
    }
    re.push_back(std::move(re_row));
    im.push_back(std::move(im_row));
  }
  doc["re"] = std::move(re);
  doc["im"] = std::move(im);
  auto out = open_for_write(path, std::ios::trunc);
  out << doc.dump(1) << '\n';
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

void write_matrix(const std::filesystem::path& path, const CMatrix& entries, const MatrixHeader& header) {
  if (is_json_path(path)) {
    write_matrix_json(path, entries, header);
  } else {
    write_matrix_binary(path, entries, header);
  }
}

StoredMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  StoredMatrix stored;
  Index rows = 0;
  Index cols = 0;
  if (is_json_path(path)) {
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
    stored.header = parse_header(doc, path, rows, cols);
    stored.entries.resize(rows, cols);
    try {
      const auto& re = doc.at("re");
      const auto& im = doc.at("im");
      if (re.size() != static_cast<std::size_t>(rows) || im.size() != static_cast<std::size_t>(rows)) {
        throw DataError(fmt::format("{}: row count does not match header", path.string()));
      }
      for (Index i = 0; i < rows; ++i) {
        const auto& re_row = re.at(static_cast<std::size_t>(i));
        const auto& im_row = im.at(static_cast<std::size_t>(i));
        if (re_row.size() != static_cast<std::size_t>(cols) || im_row.size() != static_cast<std::size_t>(cols)) {
          throw DataError(fmt::format("{}: row {} has the wrong length", path.string(), i));
        }
        for (Index j = 0; j < cols; ++j) {
          stored.entries(i, j) = Complex(re_row.at(static_cast<std::size_t>(j)).get<double>(),
                                         im_row.at(static_cast<std::size_t>(j)).get<double>());
        }
      }
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return stored;
  }

  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError(fmt::format("{}: not a KRONOMAT container", path.string()));
  std::uint32_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (!in || length > (1u << 20)) throw DataError(fmt::format("{}: bad header length", path.string()));
  std::string text(length, '\0');
  in.read(text.data(), length);
  if (!in) throw DataError(fmt::format("{}: truncated header", path.string()));
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
  stored.header = parse_header(header, path, rows, cols);
  stored.entries.resize(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      std::array<double, 2> pair{};
      in.read(reinterpret_cast<char*>(pair.data()), sizeof(pair));
      if (!in) throw DataError(fmt::format("{}: truncated at entry ({}, {})", path.string(), i, j));
      stored.entries(i, j) = Complex(pair[0], pair[1]);
    }
  }
  return stored;
}

void save_unitary(const std::filesystem::path& path, const ensembles::UnitaryMatrix& u, int k) {
  write_matrix(path, u.matrix(), MatrixHeader{u.dimension(), k, u.seed(), "unitary:" + u.label()});
}

ensembles::UnitaryMatrix load_unitary(const std::filesystem::path& path) {
  auto stored = read_matrix(path);
  return ensembles::UnitaryMatrix::from_matrix(std::move(stored.entries), "file:" + path.string());
}

void save_projection(const std::filesystem::path& path, const ensembles::Projection& pi) {
  write_matrix(path, pi.basis(),
               MatrixHeader{pi.ambient_dimension(), 1, pi.seed(), "projection:" + ensembles::to_string(pi.kind())});
}

ensembles::Projection load_projection(const std::filesystem::path& path) {
  auto stored = read_matrix(path);
  return ensembles::Projection::from_basis(std::move(stored.entries));
}

}  // namespace krono::io
