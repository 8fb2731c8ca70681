#include "featboot/io.hpp"

#include <zlib.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace featboot::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) {
  atomic_write(path, j.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

void write_matrix_csv(const fs::path& path, const Matrix& X,
                      std::vector<std::string> header) {
  if (header.empty())
    for (int j = 0; j < X.cols(); ++j)
      header.push_back("f" + std::to_string(j + 1));
  if (static_cast<int>(header.size()) != X.cols())
    throw std::invalid_argument("write_matrix_csv: header size mismatch");

  std::ostringstream out;
  for (std::size_t j = 0; j < header.size(); ++j)
    out << (j ? "," : "") << header[j];
  out << "\n";
  for (int i = 0; i < X.rows(); ++i) {
    for (int j = 0; j < X.cols(); ++j)
      out << (j ? "," : "") << format_double(X(i, j));
    out << "\n";
  }
  atomic_write(path, out.str());
}

Matrix read_matrix_csv(const fs::path& path,
                       std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty CSV: " + path.string());
  std::vector<std::string> head;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) head.push_back(cell);
  }
  if (header) *header = head;

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != head.size())
      throw std::runtime_error("malformed CSV row in " + path.string());
    ++rows;
  }
  Matrix X(rows, head.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < head.size(); ++j)
      X(static_cast<int>(i), static_cast<int>(j)) = values[i * head.size() + j];
  return X;
}

void write_vector_csv(const fs::path& path, const Vector& v,
                      const std::string& name) {
  write_matrix_csv(path, v, {name});
}

Vector read_vector_csv(const fs::path& path) {
  Matrix m = read_matrix_csv(path);
  if (m.cols() != 1)
    throw std::runtime_error("expected single-column CSV: " + path.string());
  return m.col(0);
}

namespace {

void push_u32le(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t read_u32le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}

}  // namespace

void write_tensor(const fs::path& path, const ImageTensor& t) {
  std::string bytes;
  bytes.reserve(12 + t.data.size() * 4);
  push_u32le(bytes, static_cast<std::uint32_t>(t.h));
  push_u32le(bytes, static_cast<std::uint32_t>(t.w));
  push_u32le(bytes, static_cast<std::uint32_t>(t.c));
  for (float v : t.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    push_u32le(bytes, bits);
  }
  atomic_write(path, bytes);
}

ImageTensor read_tensor(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ImageTensor t;
  t.h = static_cast<int>(read_u32le(in));
  t.w = static_cast<int>(read_u32le(in));
  t.c = static_cast<int>(read_u32le(in));
  const std::size_t count =
      static_cast<std::size_t>(t.h) * t.w * t.c;
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = read_u32le(in);
    std::memcpy(&t.data[i], &bits, 4);
  }
  if (!in) throw std::runtime_error("truncated tensor file: " + path.string());
  return t;
}

namespace {

void png_chunk(std::string& out, const char type[4], const std::string& data) {
  std::string chunk(type, 4);
  chunk += data;
  for (int i = 3; i >= 0; --i)
    out.push_back(static_cast<char>((data.size() >> (8 * i)) & 0xff));
  out += chunk;
  const auto crc =
      crc32(0, reinterpret_cast<const Bytef*>(chunk.data()), chunk.size());
  for (int i = 3; i >= 0; --i)
    out.push_back(static_cast<char>((crc >> (8 * i)) & 0xff));
}

}  // namespace

void write_png(const fs::path& path, const ImageTensor& t) {
  std::string raw;
  raw.reserve(static_cast<std::size_t>(t.h) * (t.w * 3 + 1));
  for (int y = 0; y < t.h; ++y) {
    raw.push_back('\0');  // filter: none
    for (int x = 0; x < t.w; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        const float v = ch < t.c ? t.at(y, x, ch) : 0.0f;
        raw.push_back(static_cast<char>(
            std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
      }
  }
  uLongf comp_size = compressBound(raw.size());
  std::string comp(comp_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(comp.data()), &comp_size,
                reinterpret_cast<const Bytef*>(raw.data()), raw.size(),
                9) != Z_OK)
    throw std::runtime_error("png deflate failed");
  comp.resize(comp_size);

  std::string ihdr;
  for (int i = 3; i >= 0; --i)
    ihdr.push_back(static_cast<char>((t.w >> (8 * i)) & 0xff));
  for (int i = 3; i >= 0; --i)
    ihdr.push_back(static_cast<char>((t.h >> (8 * i)) & 0xff));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  png_chunk(out, "IHDR", ihdr);
  png_chunk(out, "IDAT", comp);
  png_chunk(out, "IEND", "");
  atomic_write(path, out);
}

void write_aligned_coords_csv(const fs::path& path, const ReplicateSet& reps) {
  std::ostringstream out;
  out << "replicate,sample,dim,value\n";
  for (std::size_t b = 0; b < reps.coords.size(); ++b)
    for (int i = 0; i < reps.coords[b].rows(); ++i)
      for (int k = 0; k < reps.coords[b].cols(); ++k)
        out << b << "," << i << "," << k << ","
            << format_double(reps.coords[b](i, k)) << "\n";
  atomic_write(path, out.str());
}

std::vector<Matrix> read_aligned_coords_csv(const fs::path& path) {
  std::vector<std::string> header;
  Matrix longfmt = read_matrix_csv(path, &header);
  if (header != std::vector<std::string>{"replicate", "sample", "dim", "value"})
    throw std::runtime_error("unexpected aligned-coords header in " +
                             path.string());
  int B = 0, n = 0, K = 0;
  for (int r = 0; r < longfmt.rows(); ++r) {
    B = std::max(B, static_cast<int>(longfmt(r, 0)) + 1);
    n = std::max(n, static_cast<int>(longfmt(r, 1)) + 1);
    K = std::max(K, static_cast<int>(longfmt(r, 2)) + 1);
  }
  std::vector<Matrix> coords(B, Matrix::Zero(n, K));
  for (int r = 0; r < longfmt.rows(); ++r)
    coords[static_cast<int>(longfmt(r, 0))](static_cast<int>(longfmt(r, 1)),
                                            static_cast<int>(longfmt(r, 2))) =
        longfmt(r, 3);
  return coords;
}

json ellipses_to_json(const ConfidenceEllipseSet& e) {
  json j;
  j["level"] = e.level;
  j["quantile"] = e.quantile;
  j["K"] = e.K;
  j["samples"] = json::array();
  const int n = static_cast<int>(e.means.rows());
  for (int i = 0; i < n; ++i) {
    json s;
    s["mean"] = std::vector<double>(e.means.row(i).begin(), e.means.row(i).end());
    std::vector<std::vector<double>> cov;
    for (int a = 0; a < e.K; ++a)
      cov.emplace_back(e.covariances[i].row(a).begin(),
                       e.covariances[i].row(a).end());
    s["covariance"] = cov;
    s["regularization"] = e.regularization[i];
    j["samples"].push_back(std::move(s));
  }
  std::vector<std::vector<double>> consensus;
  for (int i = 0; i < e.consensus.rows(); ++i)
    consensus.emplace_back(e.consensus.row(i).begin(), e.consensus.row(i).end());
  j["consensus"] = consensus;
  return j;
}

ConfidenceEllipseSet ellipses_from_json(const json& j) {
  ConfidenceEllipseSet e;
  e.level = j.at("level").get<double>();
  e.quantile = j.at("quantile").get<double>();
  e.K = j.at("K").get<int>();
  const auto& samples = j.at("samples");
  const int n = static_cast<int>(samples.size());
  e.means.resize(n, e.K);
  e.covariances.resize(n);
  e.regularization.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& s = samples[i];
    for (int k = 0; k < e.K; ++k)
      e.means(i, k) = s.at("mean")[k].get<double>();
    e.covariances[i].resize(e.K, e.K);
    for (int a = 0; a < e.K; ++a)
      for (int b = 0; b < e.K; ++b)
        e.covariances[i](a, b) = s.at("covariance")[a][b].get<double>();
    e.regularization[i] = s.at("regularization").get<double>();
  }
  const auto& consensus = j.at("consensus");
  e.consensus.resize(static_cast<int>(consensus.size()), e.K);
  for (int i = 0; i < e.consensus.rows(); ++i)
    for (int k = 0; k < e.K; ++k)
      e.consensus(i, k) = consensus[i][k].get<double>();
  return e;
}

namespace {

std::string shade_color(double t) {
  // dark blue to yellow ramp
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(40 + 215 * t));
  const int g = static_cast<int>(std::lround(50 + 170 * t));
  const int b = static_cast<int>(std::lround(140 - 100 * t));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string render_ellipse_svg(const ConfidenceEllipseSet& e,
                               const Matrix& coords, const Vector* shade) {
  if (e.K != 2)
    throw std::invalid_argument("render_ellipse_svg: K = 2 required");
  if (e.means.rows() == 0)
    throw std::invalid_argument("render_ellipse_svg: empty ellipse set");

  const int n = static_cast<int>(e.means.rows());
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (int i = 0; i < n; ++i) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(e.covariances[i]);
    const double r = std::sqrt(e.quantile * eig.eigenvalues().maxCoeff());
    xmin = std::min(xmin, e.means(i, 0) - r);
    xmax = std::max(xmax, e.means(i, 0) + r);
    ymin = std::min(ymin, e.means(i, 1) - r);
    ymax = std::max(ymax, e.means(i, 1) + r);
  }
  const double pad = 0.05 * std::max(xmax - xmin, ymax - ymin) + 1e-9;
  xmin -= pad; xmax += pad; ymin -= pad; ymax += pad;

  const double W = 720, H = 720;
  auto sx = [&](double x) { return (x - xmin) / (xmax - xmin) * W; };
  auto sy = [&](double y) { return H - (y - ymin) / (ymax - ymin) * H; };
  const double scale = W / (xmax - xmin);

  double smin = 0, smax = 1;
  if (shade && shade->size() == n) {
    smin = shade->minCoeff();
    smax = shade->maxCoeff();
    if (smax - smin < 1e-300) smax = smin + 1;
  }

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i = 0; i < n; ++i) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(e.covariances[i]);
    const double l1 = eig.eigenvalues()(1), l0 = eig.eigenvalues()(0);
    const Vector v1 = eig.eigenvectors().col(1);
    const double angle = std::atan2(v1(1), v1(0)) * 180.0 / 3.14159265358979;
    const double rx = std::sqrt(e.quantile * std::max(l1, 0.0)) * scale;
    const double ry = std::sqrt(e.quantile * std::max(l0, 0.0)) * scale;
    const std::string color =
        shade && shade->size() == n
            ? shade_color(((*shade)(i)-smin) / (smax - smin))
            : std::string("#4060a0");
    out << "<ellipse cx=\"" << sx(e.means(i, 0)) << "\" cy=\""
        << sy(e.means(i, 1)) << "\" rx=\"" << rx << "\" ry=\"" << ry
        << "\" transform=\"rotate(" << -angle << " " << sx(e.means(i, 0))
        << " " << sy(e.means(i, 1)) << ")\" fill=\"" << color
        << "\" fill-opacity=\"0.25\" stroke=\"" << color
        << "\" stroke-width=\"0.6\"/>\n";
  }
  for (int i = 0; i < std::min<int>(n, static_cast<int>(coords.rows())); ++i)
    out << "<circle cx=\"" << sx(coords(i, 0)) << "\" cy=\""
        << sy(coords(i, 1)) << "\" r=\"1.6\" fill=\"#202020\"/>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace featboot::io
