#include "gdvae/rom/baselines.hpp"

#include "gdvae/binary_io.hpp"
#include "gdvae/errors.hpp"

#include <Eigen/Eigenvalues>

namespace gdvae::rom {

namespace {

constexpr char kMagic[8] = {'G', 'D', 'R', 'O', 'M', '1', 0, 0};
constexpr std::uint64_t kVersion = 1;

struct Centered {
  Vec mean;
  Mat data;
};

Centered center_columns(const Mat& x, bool center) {
  Centered c;
  c.mean = center ? Vec(x.rowwise().mean()) : Vec::Zero(x.rows());
  c.data = x.colwise() - c.mean;
  return c;
}

void check_pairs(const Mat& inputs, const Mat& targets) {
  if (inputs.rows() != targets.rows() || inputs.cols() != targets.cols())
    throw ShapeError("snapshot pairs: inputs and targets differ in shape");
}

void check_rank(const Vec& s, std::size_t r, const char* who) {
  if (r == 0) throw ConfigError("baselines.rank", "rank must be positive");
  if (r > static_cast<std::size_t>(s.size()))
    throw ConfigError("baselines.rank", std::string(who) + ": rank exceeds min(n, snapshots)");
  const double s_r = s(static_cast<Eigen::Index>(r - 1));
  if (!(s_r > 1e-12 * s(0)))
    throw SolverError(std::string(who) + ": snapshot matrix has rank below " + std::to_string(r));
}

}  // namespace

const char* to_string(RomKind k) { return k == RomKind::pod ? "pod" : "dmd"; }

Vec LinearROM::encode(const Vec& x) const {
  if (x.size() != basis.rows()) throw ShapeError("LinearROM::encode: state size mismatch");
  return basis.transpose() * (x - mean);
}

Vec LinearROM::decode(const Vec& a) const {
  if (a.size() != basis.cols()) throw ShapeError("LinearROM::decode: coordinate size mismatch");
  return mean + basis * a;
}

std::vector<Vec> LinearROM::predict(const Vec& x0, std::size_t steps) const {
  std::vector<Vec> out;
  out.reserve(steps + 1);
  if (kind == RomKind::pod) {
    if (reduced.size() == 0) throw ConfigError("baselines.pod", "POD model has no reduced operator");
    Vec a = encode(x0);
    out.push_back(decode(a));
    for (std::size_t s = 0; s < steps; ++s) {
      a = reduced * a;
      out.push_back(decode(a));
    }
    return out;
  }
  if (x0.size() != modes.rows()) throw ShapeError("LinearROM::predict: state size mismatch");
  const Eigen::VectorXcd rhs = (x0 - mean).cast<std::complex<double>>();
  Eigen::VectorXcd b = modes.colPivHouseholderQr().solve(rhs);
  for (std::size_t s = 0; s <= steps; ++s) {
    out.push_back(mean + (modes * b).real());
    b = b.cwiseProduct(eigenvalues);
  }
  return out;
}

LinearROM pod(const Mat& snapshots, std::size_t r, bool center) {
  const Centered c = center_columns(snapshots, center);
  Eigen::BDCSVD<Mat> svd(c.data, Eigen::ComputeThinU);
  check_rank(svd.singularValues(), r, "pod");
  LinearROM rom;
  rom.kind = RomKind::pod;
  rom.mean = c.mean;
  rom.centered = center;
  rom.basis = svd.matrixU().leftCols(static_cast<Eigen::Index>(r));
  rom.singular_values = svd.singularValues();
  return rom;
}

LinearROM pod(const Mat& inputs, const Mat& targets, std::size_t r, bool center) {
  check_pairs(inputs, targets);
  LinearROM rom = pod(inputs, r, center);
  const Mat a = rom.basis.transpose() * (inputs.colwise() - rom.mean);
  const Mat a_next = rom.basis.transpose() * (targets.colwise() - rom.mean);
  // min ||A a - a_next||_F, solved row-wise as a^T A^T = a_next^T
  rom.reduced = a.transpose().colPivHouseholderQr().solve(a_next.transpose()).transpose();
  rom.eigenvalues = Eigen::EigenSolver<Mat>(rom.reduced, false).eigenvalues();
  return rom;
}

LinearROM dmd(const Mat& inputs, const Mat& targets, std::size_t r, bool center) {
  check_pairs(inputs, targets);
  const Centered x = center_columns(inputs, center);
  const Mat xp = targets.colwise() - x.mean;
  Eigen::BDCSVD<Mat> svd(x.data, Eigen::ComputeThinU | Eigen::ComputeThinV);
  check_rank(svd.singularValues(), r, "dmd");
  const auto rr = static_cast<Eigen::Index>(r);
  const Mat u = svd.matrixU().leftCols(rr);
  const Mat v = svd.matrixV().leftCols(rr);
  const Vec s_inv = svd.singularValues().head(rr).cwiseInverse();
  const Mat xp_v_sinv = xp * v * s_inv.asDiagonal();

  LinearROM rom;
  rom.kind = RomKind::dmd;
  rom.mean = x.mean;
  rom.centered = center;
  rom.basis = u;
  rom.singular_values = svd.singularValues();
  rom.reduced = u.transpose() * xp_v_sinv;
  Eigen::EigenSolver<Mat> eig(rom.reduced, true);
  if (eig.info() != Eigen::Success) throw SolverError("dmd: eigendecomposition failed");
  rom.eigenvalues = eig.eigenvalues();
  rom.modes = xp_v_sinv.cast<std::complex<double>>() * eig.eigenvectors();
  return rom;
}

double reconstruction_error(const LinearROM& rom, const Mat& snapshots) {
  const Mat c = snapshots.colwise() - rom.mean;
  return (c - rom.basis * (rom.basis.transpose() * c)).squaredNorm();
}

pde::Field1D cole_hopf_rom(const pde::Field1D& u0, double nu, double t, std::size_t n_f, std::size_t modes) {
  if (n_f % 2 != 0) throw ConfigError("baselines.cole_hopf.n_f", "n_f must be even");
  const pde::SpectralBurgers full(u0, nu, modes);
  return full.truncated(n_f / 2).evaluate(t, static_cast<std::size_t>(u0.size()));
}

PcaEmbedding pca_embed(const Mat& snapshots, std::size_t d) {
  if (d == 0 || static_cast<Eigen::Index>(d) > snapshots.cols() || static_cast<Eigen::Index>(d) > snapshots.rows())
    throw ConfigError("analysis.pca.d", "embedding dimension exceeds snapshot count or state size");
  const Centered c = center_columns(snapshots, true);
  Eigen::BDCSVD<Mat> svd(c.data, Eigen::ComputeThinU);
  const auto dd = static_cast<Eigen::Index>(d);
  PcaEmbedding out;
  out.mean = c.mean;
  out.basis = svd.matrixU().leftCols(dd);
  out.coords = out.basis.transpose() * c.data;
  out.singular_values = svd.singularValues();
  const double total = out.singular_values.squaredNorm();
  out.variance_captured = total > 0.0 ? out.singular_values.head(dd).squaredNorm() / total : 1.0;
  return out;
}

void LinearROM::save(const std::filesystem::path& path) const {
  io::BinaryWriter w(path.string(), kMagic, kVersion);
  w.str(to_string(kind));
  w.u64(centered ? 1 : 0);
  w.matrix(mean);
  w.matrix(basis);
  w.matrix(reduced);
  w.matrix(eigenvalues.real());
  w.matrix(eigenvalues.imag());
  w.matrix(modes.real());
  w.matrix(modes.imag());
  w.matrix(singular_values);
  w.close();
}

LinearROM LinearROM::load(const std::filesystem::path& path) {
  io::BinaryReader r(path.string(), kMagic, kVersion);
  LinearROM rom;
  const std::string kind = r.str();
  if (kind != "pod" && kind != "dmd") throw MissingArtifactError("unknown ROM kind '" + kind + "' in " + path.string());
  rom.kind = kind == "pod" ? RomKind::pod : RomKind::dmd;
  rom.centered = r.u64() != 0;
  rom.mean = r.matrix();
  rom.basis = r.matrix();
  rom.reduced = r.matrix();
  const Mat er = r.matrix(), ei = r.matrix();
  rom.eigenvalues = Eigen::VectorXcd(er.size());
  for (Eigen::Index i = 0; i < er.size(); ++i) rom.eigenvalues(i) = {er(i), ei(i)};
  const Mat mr = r.matrix(), mi = r.matrix();
  rom.modes = Eigen::MatrixXcd(mr.rows(), mr.cols());
  rom.modes.real() = mr;
  rom.modes.imag() = mi;
  rom.singular_values = r.matrix();
  return rom;
}

}  // namespace gdvae::rom
