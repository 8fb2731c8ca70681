#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "featboot/bootstrap.hpp"
#include "featboot/linalg.hpp"
#include "featboot/rcf.hpp"

namespace featboot::io {

using json = nlohmann::ordered_json;

/// Shortest decimal round-trip formatting (up to 17 significant digits).
std::string format_double(double v);

/// Write bytes to a temp file in the target directory, then rename into
/// place, so partial outputs are never observed.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

/// CSV with a header row, UTF-8, '.' decimal. Default header f1..fL.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& X,
                      std::vector<std::string> header = {});
Matrix read_matrix_csv(const std::filesystem::path& path,
                       std::vector<std::string>* header = nullptr);

void write_vector_csv(const std::filesystem::path& path, const Vector& v,
                      const std::string& name);
Vector read_vector_csv(const std::filesystem::path& path);

/// Raw tensor file: three little-endian uint32 dims (h, w, c) followed by
/// row-major float32 values.
void write_tensor(const std::filesystem::path& path, const ImageTensor& t);
ImageTensor read_tensor(const std::filesystem::path& path);

/// 8-bit RGB PNG for inspection; channels beyond 3 are dropped, values are
/// clamped to [0, 1].
void write_png(const std::filesystem::path& path, const ImageTensor& t);

/// Long format: replicate, sample, dim, value.
void write_aligned_coords_csv(const std::filesystem::path& path,
                              const ReplicateSet& reps);
std::vector<Matrix> read_aligned_coords_csv(const std::filesystem::path& path);

json ellipses_to_json(const ConfidenceEllipseSet& e);
ConfidenceEllipseSet ellipses_from_json(const json& j);

/// Static SVG scatter of consensus coordinates with their confidence
/// ellipses, optionally shaded by a response value.
std::string render_ellipse_svg(const ConfidenceEllipseSet& e,
                               const Matrix& coords, const Vector* shade);

}  // namespace featboot::io
