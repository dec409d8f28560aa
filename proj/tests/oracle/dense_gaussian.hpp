#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "evoglm/state_space.hpp"
#include "evoglm/triangle.hpp"

namespace evoglm::oracle {

// Brute-force joint Gaussian of the whole model. Every latent quantity and
// every cell is written as mean + L z with z a vector of independent
// standard normals: the first gamma block and h_1 per line, every gamma
// random-walk shock, every calendar shock (line and common) and every cell's
// observation noise. Conditioning then needs nothing but the joint
// covariance L L'.
struct DenseSetup {
  ModelParams params;
  int dim = 0;
  bool extended = false;
  std::vector<Eigen::VectorXd> gamma_mean;  // per line, first block
  std::vector<Eigen::MatrixXd> gamma_cov;
  Eigen::VectorXd h1_mean;
  Eigen::VectorXd h1_var;
};

struct Affine {
  Eigen::VectorXd mean;
  Eigen::MatrixXd load;
};

struct DenseModel {
  std::vector<Affine> gamma;  // gamma[i-1]: stacked blocks of accident year i
  Affine psi;                 // line-major h_1..h_I
  Affine cells;               // every upper-triangle cell, rows ordered (i, line, j)
  std::vector<int> cell_row;  // accident index of each cell
  std::vector<int> cell_line;
  std::vector<int> cell_dev;
};

inline Eigen::MatrixXd sqrt_factor(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

inline DenseModel build_dense(const DenseSetup& s) {
  const int n_lines = s.params.line_count();
  const int dim = s.dim;
  const int k = s.extended ? 5 : 3;
  const int nk = n_lines * k;
  int n_cells = 0;
  for (int i = 1; i <= dim; ++i) n_cells += n_lines * (dim - i + 1);
  const int nz = nk + n_lines + (dim - 1) * nk + (dim - 1) * (n_lines + 1) + n_cells;

  int z_at = 0;
  auto take = [&](int count) {
    const int at = z_at;
    z_at += count;
    return at;
  };

  DenseModel m;
  // First accident-year block.
  Affine g;
  g.mean = Eigen::VectorXd::Zero(nk);
  g.load = Eigen::MatrixXd::Zero(nk, nz);
  const int g1 = take(nk);
  for (int n = 0; n < n_lines; ++n) {
    g.mean.segment(n * k, k) = s.gamma_mean[static_cast<std::size_t>(n)];
    g.load.block(n * k, g1 + n * k, k, k) = sqrt_factor(s.gamma_cov[static_cast<std::size_t>(n)]);
  }
  m.gamma.push_back(g);

  // Calendar factors.
  m.psi.mean = Eigen::VectorXd::Zero(n_lines * dim);
  m.psi.load = Eigen::MatrixXd::Zero(n_lines * dim, nz);
  const int h1 = take(n_lines);
  for (int n = 0; n < n_lines; ++n) {
    m.psi.mean(n * dim) = s.h1_mean(n);
    m.psi.load(n * dim, h1 + n) = std::sqrt(s.h1_var(n));
  }

  // Gamma random-walk shocks for i = 2..I.
  for (int i = 2; i <= dim; ++i) {
    Affine next = m.gamma.back();
    const int at = take(nk);
    for (int n = 0; n < n_lines; ++n) {
      const Eigen::VectorXd v = gamma_step_variances(s.params.lines[static_cast<std::size_t>(n)], s.extended);
      for (int c = 0; c < k; ++c) next.load(n * k + c, at + n * k + c) += std::sqrt(v(c));
    }
    m.gamma.push_back(next);
  }

  // Calendar shocks for t = 2..I.
  for (int t = 2; t <= dim; ++t) {
    const int at = take(n_lines + 1);
    for (int n = 0; n < n_lines; ++n) {
      const auto& lp = s.params.lines[static_cast<std::size_t>(n)];
      const int row = n * dim + t - 1;
      m.psi.mean(row) = m.psi.mean(row - 1);
      m.psi.load.row(row) = m.psi.load.row(row - 1);
      m.psi.load(row, at + n) += std::sqrt(lp.sigma2_h);
      m.psi.load(row, at + n_lines) += lp.lambda * std::sqrt(s.params.sigma2_h_tilde);
    }
  }

  // Cells.
  m.cells.mean = Eigen::VectorXd::Zero(n_cells);
  m.cells.load = Eigen::MatrixXd::Zero(n_cells, nz);
  int c = 0;
  for (int i = 1; i <= dim; ++i) {
    for (int n = 0; n < n_lines; ++n) {
      for (int j = 1; j <= dim - i + 1; ++j) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
        x(0) = 1.0;
        x(1) = std::log(static_cast<double>(j));
        x(2) = j;
        if (s.extended) {
          x(3) = j == 1 ? 1.0 : 0.0;
          x(4) = j == 2 ? 1.0 : 0.0;
        }
        const Affine& gi = m.gamma[static_cast<std::size_t>(i - 1)];
        const int t = i + j - 1;
        m.cells.mean(c) = x.dot(gi.mean.segment(n * k, k)) + m.psi.mean(n * dim + t - 1);
        m.cells.load.row(c) = x.transpose() * gi.load.middleRows(n * k, k) + m.psi.load.row(n * dim + t - 1);
        const int noise = take(1);
        m.cells.load(c, noise) = std::sqrt(s.params.lines[static_cast<std::size_t>(n)].phi);
        m.cell_row.push_back(i);
        m.cell_line.push_back(n);
        m.cell_dev.push_back(j);
        ++c;
      }
    }
  }
  return m;
}

struct Conditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Law of `x` given the observed cells of accident rows 1..upto.
struct Posterior {
  Conditional gamma;
  Conditional psi;
  Eigen::MatrixXd cross;  // Cov(gamma, psi | data)
  double log_likelihood = 0.0;
};

inline Posterior condition(const DenseModel& m, const TrianglePanel& panel, int upto) {
  std::vector<int> keep;
  for (std::size_t c = 0; c < m.cell_row.size(); ++c) {
    if (m.cell_row[c] <= upto && panel.observed(m.cell_line[c], m.cell_row[c], m.cell_dev[c])) {
      keep.push_back(static_cast<int>(c));
    }
  }
  const auto d = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd ly(d, m.cells.load.cols());
  Eigen::VectorXd my(d), y(d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const int c = keep[static_cast<std::size_t>(r)];
    ly.row(r) = m.cells.load.row(c);
    my(r) = m.cells.mean(c);
    y(r) = panel.value(m.cell_line[static_cast<std::size_t>(c)], m.cell_row[static_cast<std::size_t>(c)],
                       m.cell_dev[static_cast<std::size_t>(c)]);
  }
  const Affine& g = m.gamma[static_cast<std::size_t>(upto - 1)];
  const Eigen::MatrixXd cyy = ly * ly.transpose();
  const Eigen::LDLT<Eigen::MatrixXd> f(cyy);
  const Eigen::VectorXd resid = y - my;
  const Eigen::VectorXd alpha = f.solve(resid);

  Posterior out;
  const Eigen::MatrixXd cgy = g.load * ly.transpose();
  const Eigen::MatrixXd cpy = m.psi.load * ly.transpose();
  out.gamma.mean = g.mean + cgy * alpha;
  out.gamma.cov = g.load * g.load.transpose() - cgy * f.solve(cgy.transpose());
  out.psi.mean = m.psi.mean + cpy * alpha;
  out.psi.cov = m.psi.load * m.psi.load.transpose() - cpy * f.solve(cpy.transpose());
  out.cross = g.load * m.psi.load.transpose() - cgy * f.solve(cpy.transpose());
  const double logdet = f.vectorD().array().log().sum();
  out.log_likelihood = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + logdet + resid.dot(alpha));
  return out;
}

}  // namespace evoglm::oracle
