#include "hda/embedding.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "hda/csv.hpp"
#include "hda/errors.hpp"

namespace hda {

Projection2D fit_pca2(const Dense& points) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (n == 0 || d == 0) throw ShapeError("fit_pca2 needs a non-empty matrix");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points(i, j);
    }
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("PCA eigen-decomposition failed");

  Projection2D p;
  p.mean.assign(mu.data(), mu.data() + d);
  p.axes = Dense({2, d});
  // Eigenvalues come back ascending.
  for (std::size_t k = 0; k < 2; ++k) {
    if (k >= d) {
      p.variances.push_back(0.0);
      continue;
    }
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - k);
    Eigen::VectorXd axis = eig.eigenvectors().col(col);
    Eigen::Index big = 0;
    for (Eigen::Index j = 1; j < axis.size(); ++j) {
      if (std::abs(axis(j)) > std::abs(axis(big))) big = j;
    }
    if (axis(big) < 0) axis = -axis;
    for (std::size_t j = 0; j < d; ++j) p.axes(k, j) = axis(static_cast<Eigen::Index>(j));
    p.variances.push_back(std::max(0.0, eig.eigenvalues()(col)));
  }
  return p;
}

Dense project(const Projection2D& proj, const Dense& points) {
  const std::size_t d = points.cols();
  if (d != proj.mean.size()) throw ShapeError("projection fitted on a different width");
  Dense out({points.rows(), 2});
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += (points(i, j) - proj.mean[j]) * proj.axes(k, j);
      out(i, k) = acc;
    }
  }
  return out;
}

void export_embeddings(const std::filesystem::path& path, const ModelParams& params,
                       const Dataset& source, const Dataset& target,
                       const PseudoState* pseudo, int epoch, Precision precision) {
  if (pseudo != nullptr && pseudo->labels.size() != target.size()) {
    throw ShapeError("pseudo state does not cover the target set");
  }
  const Dense phi_s = extract_features(params, source.feature_matrix(), precision);
  const Dense phi_t = extract_features(params, target.feature_matrix(), precision);
  const std::size_t k = phi_s.cols();

  Dense pooled({source.size() + target.size(), k});
  std::copy(phi_s.data.begin(), phi_s.data.end(), pooled.data.begin());
  std::copy(phi_t.data.begin(), phi_t.data.end(),
            pooled.data.begin() + static_cast<std::ptrdiff_t>(phi_s.size()));
  const Dense pcs = project(fit_pca2(pooled), pooled);

  std::vector<std::string> header{"epoch", "id", "domain", "label"};
  for (std::size_t j = 0; j < k; ++j) header.push_back("phi_" + std::to_string(j));
  header.push_back("pc1");
  header.push_back("pc2");
  CsvWriter csv(path, header);

  std::vector<std::string> fields;
  for (std::size_t r = 0; r < pooled.rows(); ++r) {
    const bool is_source = r < source.size();
    const std::size_t i = is_source ? r : r - source.size();
    const Sample& s = is_source ? source[i] : target[i];
    const int label = is_source ? s.label : (pseudo ? pseudo->labels[i] : -1);
    fields.assign({std::to_string(epoch), std::to_string(s.id), domain_name(s.domain),
                   std::to_string(label)});
    for (std::size_t j = 0; j < k; ++j) fields.push_back(format_real(pooled(r, j)));
    fields.push_back(format_real(pcs(r, 0)));
    fields.push_back(format_real(pcs(r, 1)));
    csv.row_fields(fields);
  }
}

}  // namespace hda
