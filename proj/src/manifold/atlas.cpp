#include "gdvae/manifold/atlas.hpp"

#include "gdvae/errors.hpp"
#include "gdvae/manifold/projection.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace gdvae::manifold {

std::string to_string(AtlasTag tag) {
  switch (tag) {
    case AtlasTag::circle: return "circle";
    case AtlasTag::product_of_circles: return "product-of-circles";
    case AtlasTag::cylinder_axis: return "cylinder-axis";
    case AtlasTag::torus3d: return "torus3d";
    case AtlasTag::klein4d: return "klein4d";
  }
  return "unknown";
}

AtlasTag atlas_tag_from_string(const std::string& s) {
  for (AtlasTag t : {AtlasTag::circle, AtlasTag::product_of_circles, AtlasTag::cylinder_axis, AtlasTag::torus3d,
                     AtlasTag::klein4d}) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError("manifold.tag", "unknown manifold '" + s + "'");
}

ManifoldAtlas ManifoldAtlas::circle() {
  ManifoldAtlas a = cylinder(1, 0);
  a.tag_ = AtlasTag::circle;
  return a;
}

ManifoldAtlas ManifoldAtlas::clifford_torus(std::size_t circles) {
  if (circles < 1) throw ConfigError("manifold.circles", "need at least one circle");
  ManifoldAtlas a = cylinder(circles, 0);
  a.tag_ = circles == 1 ? AtlasTag::circle : AtlasTag::product_of_circles;
  return a;
}

ManifoldAtlas ManifoldAtlas::cylinder(std::size_t circles, std::size_t axes) {
  if (circles < 1) throw ConfigError("manifold.circles", "need at least one circle");
  ManifoldAtlas a;
  a.tag_ = AtlasTag::cylinder_axis;
  a.circles_ = circles;
  a.axes_ = axes;
  a.m_ = circles + axes;
  a.n_ = 2 * circles + axes;
  a.charts_.push_back(std::make_shared<CirclesTimesLines>(circles, axes));
  return a;
}

ManifoldAtlas ManifoldAtlas::torus3d(double major, double minor) {
  ManifoldAtlas a;
  a.tag_ = AtlasTag::torus3d;
  a.m_ = 2;
  a.n_ = 3;
  a.a_ = major;
  a.b_ = minor;
  a.charts_.push_back(std::make_shared<TorusChart>(major, minor));
  return a.with_cloud(64);
}

ManifoldAtlas ManifoldAtlas::klein4d(double a_const, double b_const, std::size_t cloud_resolution) {
  ManifoldAtlas a;
  a.tag_ = AtlasTag::klein4d;
  a.m_ = 2;
  a.n_ = 4;
  a.a_ = a_const;
  a.b_ = b_const;
  a.charts_.push_back(std::make_shared<KleinChart>(a_const, b_const));
  return a.with_cloud(cloud_resolution);
}

ManifoldAtlas ManifoldAtlas::with_cloud(std::size_t resolution) const {
  ManifoldAtlas out = *this;
  out.cloud_ = build_point_cloud(*this, resolution);
  out.cloud_resolution_ = resolution;
  return out;
}

double ManifoldAtlas::constraint_residual(const Vec& z) const {
  if (static_cast<std::size_t>(z.size()) != n_) throw ShapeError("constraint_residual: wrong embedding dimension");
  switch (tag_) {
    case AtlasTag::circle:
    case AtlasTag::product_of_circles:
    case AtlasTag::cylinder_axis: {
      double worst = 0.0;
      for (std::size_t c = 0; c < circles_; ++c) {
        worst = std::max(worst, std::abs(z.segment(static_cast<Eigen::Index>(2 * c), 2).norm() - 1.0));
      }
      return worst;
    }
    case AtlasTag::torus3d: {
      const double rho = std::hypot(z(0), z(1));
      return std::abs(std::hypot(rho - a_, z(2)) - b_);
    }
    case AtlasTag::klein4d: return (z - project_chart(z, *this).z).norm();
  }
  return 0.0;
}

nlohmann::json ManifoldAtlas::to_json() const {
  nlohmann::json j;
  j["tag"] = to_string(tag_);
  j["intrinsic_dim"] = m_;
  j["embed_dim"] = n_;
  if (tag_ == AtlasTag::torus3d) {
    j["R"] = a_;
    j["r"] = b_;
  } else if (tag_ == AtlasTag::klein4d) {
    j["a"] = a_;
    j["b"] = b_;
  } else {
    j["circles"] = circles_;
    j["axes"] = axes_;
  }
  j["cloud_resolution"] = cloud_resolution_;
  nlohmann::json charts = nlohmann::json::array();
  for (std::size_t k = 0; k < charts_.size(); ++k) {
    const Chart& c = *charts_[k];
    nlohmann::json cj;
    cj["id"] = k;
    cj["lower"] = std::vector<double>(c.lower().data(), c.lower().data() + c.lower().size());
    cj["upper"] = std::vector<double>(c.upper().data(), c.upper().data() + c.upper().size());
    std::vector<bool> periodic;
    for (std::size_t i = 0; i < c.intrinsic_dim(); ++i) periodic.push_back(c.periodic(i));
    cj["periodic"] = periodic;
    charts.push_back(cj);
  }
  j["charts"] = charts;
  return j;
}

ManifoldAtlas ManifoldAtlas::from_json(const nlohmann::json& j) {
  if (!j.contains("tag")) throw ConfigError("manifold.tag", "missing");
  const AtlasTag tag = atlas_tag_from_string(j.at("tag").get<std::string>());
  const std::size_t res = j.value("cloud_resolution", std::size_t{0});
  ManifoldAtlas a;
  switch (tag) {
    case AtlasTag::circle: a = circle(); break;
    case AtlasTag::product_of_circles: a = clifford_torus(j.value("circles", std::size_t{2})); break;
    case AtlasTag::cylinder_axis: a = cylinder(j.value("circles", std::size_t{1}), j.value("axes", std::size_t{1})); break;
    case AtlasTag::torus3d: a = torus3d(j.value("R", 2.0), j.value("r", 1.0)); break;
    case AtlasTag::klein4d: return klein4d(j.value("a", 2.0), j.value("b", 1.0), res > 0 ? res : 100);
  }
  if (res > 0 && res != a.cloud_resolution_) a = a.with_cloud(res);
  return a;
}

PointCloudSeed build_point_cloud(const ManifoldAtlas& atlas, std::size_t resolution) {
  if (resolution < 2) throw ConfigError("cloud_resolution", "need at least 2 samples per axis");
  const std::size_t m = atlas.intrinsic_dim();
  std::size_t per_chart = 1;
  for (std::size_t i = 0; i < m; ++i) per_chart *= resolution;
  const std::size_t total = per_chart * atlas.chart_count();

  PointCloudSeed cloud;
  cloud.points.resize(static_cast<Eigen::Index>(atlas.embed_dim()), static_cast<Eigen::Index>(total));
  cloud.coords.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(total));
  cloud.chart.reserve(total);

  std::size_t col = 0;
  for (std::size_t k = 0; k < atlas.chart_count(); ++k) {
    const Chart& chart = atlas.chart(k);
    Vec u(static_cast<Eigen::Index>(m));
    for (std::size_t flat = 0; flat < per_chart; ++flat) {
      std::size_t rem = flat;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t idx = rem % resolution;
        rem /= resolution;
        const auto ii = static_cast<Eigen::Index>(i);
        const double lo = chart.lower()(ii), hi = chart.upper()(ii);
        // Periodic axes exclude the endpoint, which duplicates the start.
        const double denom = chart.periodic(i) ? static_cast<double>(resolution) : static_cast<double>(resolution - 1);
        u(ii) = lo + (hi - lo) * static_cast<double>(idx) / denom;
      }
      cloud.points.col(static_cast<Eigen::Index>(col)) = chart.eval(u).sigma;
      cloud.coords.col(static_cast<Eigen::Index>(col)) = u;
      cloud.chart.push_back(k);
      ++col;
    }
  }
  return cloud;
}

void write_point_cloud_csv(std::ostream& os, const PointCloudSeed& cloud) {
  const auto m = cloud.coords.rows(), n = cloud.points.rows();
  os << "k";
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i + 1;
  for (Eigen::Index i = 0; i < n; ++i) os << ",z" << i + 1;
  os << '\n' << std::setprecision(17);
  for (std::size_t c = 0; c < cloud.size(); ++c) {
    const auto cc = static_cast<Eigen::Index>(c);
    os << cloud.chart[c];
    for (Eigen::Index i = 0; i < m; ++i) os << ',' << cloud.coords(i, cc);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << cloud.points(i, cc);
    os << '\n';
  }
}

PointCloudSeed read_point_cloud_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw MissingArtifactError("point cloud CSV: empty input");
  std::size_t m = 0, n = 0;
  {
    std::stringstream hs(line);
    std::string cell;
    std::getline(hs, cell, ',');
    if (cell != "k") throw MissingArtifactError("point cloud CSV: header must start with k");
    while (std::getline(hs, cell, ',')) {
      if (!cell.empty() && cell[0] == 'u') ++m;
      else if (!cell.empty() && cell[0] == 'z') ++n;
      else throw MissingArtifactError("point cloud CSV: unexpected column " + cell);
    }
  }
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> charts;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    charts.push_back(static_cast<std::size_t>(std::stoul(cell)));
    std::vector<double> r;
    while (std::getline(ls, cell, ',')) r.push_back(std::stod(cell));
    if (r.size() != m + n) throw MissingArtifactError("point cloud CSV: ragged row");
    rows.push_back(std::move(r));
  }
  PointCloudSeed cloud;
  cloud.coords.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(rows.size()));
  cloud.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    for (std::size_t i = 0; i < m; ++i) cloud.coords(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[c][i];
    for (std::size_t i = 0; i < n; ++i)
      cloud.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[c][m + i];
  }
  cloud.chart = std::move(charts);
  return cloud;
}

}  // namespace gdvae::manifold
