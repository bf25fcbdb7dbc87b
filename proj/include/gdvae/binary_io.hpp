#pragma once

// Versioned little-endian binary container shared by checkpoints and ROMs.

#include "gdvae/errors.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace gdvae::io {

static_assert(std::endian::native == std::endian::little, "binary containers are written in host order");

class BinaryWriter {
 public:
  BinaryWriter(const std::string& path, const char (&magic)[8], std::uint64_t version) : os_(path, std::ios::binary) {
    if (!os_) throw MissingArtifactError("cannot open " + path + " for writing");
    os_.write(magic, 8);
    u64(version);
  }

  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void doubles(std::span<const double> v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(double));
  }
  void u64s(const std::vector<std::uint64_t>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(std::uint64_t));
  }
  template <class Derived>
  void matrix(const Eigen::DenseBase<Derived>& m) {
    const Eigen::MatrixXd dense = m.template cast<double>();
    u64(static_cast<std::uint64_t>(dense.rows()));
    u64(static_cast<std::uint64_t>(dense.cols()));
    raw(dense.data(), static_cast<std::size_t>(dense.size()) * sizeof(double));
  }
  void close() {
    os_.close();
    if (!os_) throw MissingArtifactError("write failed");
  }

 private:
  void raw(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  std::ofstream os_;
};

class BinaryReader {
 public:
  BinaryReader(const std::string& path, const char (&magic)[8], std::uint64_t version) : path_(path), is_(path, std::ios::binary) {
    if (!is_) throw MissingArtifactError("missing artifact " + path);
    char m[8];
    is_.read(m, 8);
    if (!is_ || std::memcmp(m, magic, 8) != 0) throw MissingArtifactError("bad magic in " + path);
    if (u64() != version) throw MissingArtifactError("unsupported container version in " + path);
  }

  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    std::string s(checked(u64(), 1), '\0');
    raw(s.data(), s.size());
    return s;
  }
  std::vector<double> doubles() {
    std::vector<double> v(checked(u64(), sizeof(double)));
    raw(v.data(), v.size() * sizeof(double));
    return v;
  }
  std::vector<std::uint64_t> u64s() {
    std::vector<std::uint64_t> v(checked(u64(), sizeof(std::uint64_t)));
    raw(v.data(), v.size() * sizeof(std::uint64_t));
    return v;
  }
  Eigen::MatrixXd matrix() {
    const auto r = u64(), c = u64();
    checked(r * c, sizeof(double));
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    return m;
  }

 private:
  std::size_t checked(std::uint64_t n, std::size_t unit) {
    if (n > (std::uint64_t{1} << 36) / unit) throw MissingArtifactError("corrupt length field in " + path_);
    return static_cast<std::size_t>(n);
  }
  void raw(void* p, std::size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is_) throw MissingArtifactError("truncated artifact " + path_);
  }
  std::string path_;
  std::ifstream is_;
};

}  // namespace gdvae::io
