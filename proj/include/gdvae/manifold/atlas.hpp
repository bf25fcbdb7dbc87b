#pragma once

#include "gdvae/manifold/chart.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>

namespace gdvae::manifold {

enum class AtlasTag { circle, product_of_circles, cylinder_axis, torus3d, klein4d };

std::string to_string(AtlasTag tag);
AtlasTag atlas_tag_from_string(const std::string& s);

/// Sample points z_j = sigma^{k_j}(u_j), one per column.
struct PointCloudSeed {
  Mat points;                    // N x M
  Mat coords;                    // m x M
  std::vector<std::size_t> chart;  // M
  std::size_t size() const { return chart.size(); }
};

/// Immutable description of a latent manifold. Shareable across threads.
class ManifoldAtlas {
 public:
  static ManifoldAtlas circle();
  static ManifoldAtlas clifford_torus(std::size_t circles = 2);
  /// `circles` unit circles times `axes` real lines, axes last.
  static ManifoldAtlas cylinder(std::size_t circles = 1, std::size_t axes = 1);
  static ManifoldAtlas torus3d(double major = 2.0, double minor = 1.0);
  static ManifoldAtlas klein4d(double a = 2.0, double b = 1.0, std::size_t cloud_resolution = 100);

  AtlasTag tag() const { return tag_; }
  std::size_t intrinsic_dim() const { return m_; }
  std::size_t embed_dim() const { return n_; }
  std::size_t chart_count() const { return charts_.size(); }
  const Chart& chart(std::size_t k) const { return *charts_.at(k); }
  bool has_analytic_projector() const { return tag_ != AtlasTag::klein4d; }
  const std::optional<PointCloudSeed>& cloud() const { return cloud_; }
  ManifoldAtlas with_cloud(std::size_t resolution) const;

  std::size_t circles() const { return circles_; }
  std::size_t axes() const { return axes_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }

  /// Distance-like residual of the defining constraint; 0 on the manifold.
  /// For the Klein bottle this is the distance to the chart-projected point.
  double constraint_residual(const Vec& z) const;

  nlohmann::json to_json() const;
  static ManifoldAtlas from_json(const nlohmann::json& j);

 private:
  ManifoldAtlas() = default;

  AtlasTag tag_ = AtlasTag::circle;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::size_t circles_ = 0;
  std::size_t axes_ = 0;
  double a_ = 0.0;  // torus R or Klein a
  double b_ = 0.0;  // torus r or Klein b
  std::size_t cloud_resolution_ = 0;
  std::vector<std::shared_ptr<const Chart>> charts_;
  std::optional<PointCloudSeed> cloud_;
};

PointCloudSeed build_point_cloud(const ManifoldAtlas& atlas, std::size_t resolution);

void write_point_cloud_csv(std::ostream& os, const PointCloudSeed& cloud);
PointCloudSeed read_point_cloud_csv(std::istream& is);

}  // namespace gdvae::manifold
