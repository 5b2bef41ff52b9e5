#include "cbso/synthetic.hpp"

#include <cmath>
#include <sstream>

#include "cbso/objectives.hpp"

namespace cbso {

namespace {

ParamVector scalar(double v) {
  ParamVector out(1);
  out[0] = v;
  return out;
}

void check_gradient_gate(const SyntheticProblem& p) {
  Rng rng(make_stream(0x5eedf00d, "synthetic/gate", derive_stream_id(p.name)));
  constexpr int kPoints = 100;
  constexpr double kTol = 1e-5;
  auto central = [](const std::function<double(double)>& f1d, double v) {
    const double step = 1e-6 * std::max(1.0, std::abs(v));
    return (f1d(v + step) - f1d(v - step)) / (2.0 * step);
  };
  for (int n = 0; n < kPoints; ++n) {
    ParamVector x(p.dim_x), y(p.dim_y);
    for (int i = 0; i < p.dim_x; ++i) x[i] = rng.uniform(p.x_lo[i], p.x_hi[i]);
    for (int i = 0; i < p.dim_y; ++i) y[i] = rng.uniform(p.y_lo[i], p.y_hi[i]);
    const ParamVector fx = p.f_x(x, y), fy = p.f_y(x, y);
    const ParamVector gx = p.g_x(x, y), gy = p.g_y(x, y);
    const ParamVector hy = p.h_y(y);
    for (int i = 0; i < p.dim_x; ++i) {
      auto fox = [&](double v) {
        ParamVector xx = x;
        xx[i] = v;
        return p.f(xx, y);
      };
      auto gox = [&](double v) {
        ParamVector xx = x;
        xx[i] = v;
        return p.g(xx, y);
      };
      require(std::abs(fx[i] - central(fox, x[i])) <= kTol,
              ErrorCode::ConfigError, p.name + ": f_x fails gradient gate");
      require(std::abs(gx[i] - central(gox, x[i])) <= kTol,
              ErrorCode::ConfigError, p.name + ": g_x fails gradient gate");
    }
    for (int i = 0; i < p.dim_y; ++i) {
      auto foy = [&](double v) {
        ParamVector yy = y;
        yy[i] = v;
        return p.f(x, yy);
      };
      auto goy = [&](double v) {
        ParamVector yy = y;
        yy[i] = v;
        return p.g(x, yy);
      };
      auto hoy = [&](double v) {
        ParamVector yy = y;
        yy[i] = v;
        return p.h(yy);
      };
      require(std::abs(fy[i] - central(foy, y[i])) <= kTol,
              ErrorCode::ConfigError, p.name + ": f_y fails gradient gate");
      require(std::abs(gy[i] - central(goy, y[i])) <= kTol,
              ErrorCode::ConfigError, p.name + ": g_y fails gradient gate");
      require(std::abs(hy[i] - central(hoy, y[i])) <= kTol,
              ErrorCode::ConfigError, p.name + ": h_y fails gradient gate");
    }
  }
}

SyntheticProblem build_p1() {
  SyntheticProblem p;
  p.name = "P1";
  p.dim_x = 1;
  p.dim_y = 1;
  p.f = [](const ParamVector&, const ParamVector& y) {
    return (y[0] - 1.0) * (y[0] - 1.0);
  };
  p.g = [](const ParamVector& x, const ParamVector& y) {
    const double d = y[0] * y[0] - x[0];
    return d * d;
  };
  p.h = [](const ParamVector& y) { return -y[0]; };
  p.f_x = [](const ParamVector&, const ParamVector&) { return scalar(0.0); };
  p.f_y = [](const ParamVector&, const ParamVector& y) {
    return scalar(2.0 * (y[0] - 1.0));
  };
  p.g_x = [](const ParamVector& x, const ParamVector& y) {
    return scalar(-2.0 * (y[0] * y[0] - x[0]));
  };
  p.g_y = [](const ParamVector& x, const ParamVector& y) {
    return scalar(4.0 * y[0] * (y[0] * y[0] - x[0]));
  };
  p.h_y = [](const ParamVector&) { return scalar(-1.0); };
  p.c0 = 0.0;
  p.x_lo = scalar(-2.0);
  p.x_hi = scalar(2.0);
  p.y_lo = scalar(-2.0);
  p.y_hi = scalar(2.0);
  return p;
}

SyntheticProblem build_p2() {
  SyntheticProblem p = build_p1();
  p.name = "P2";
  p.h = [](const ParamVector& y) {
    return std::sin(3.0 * y[0]) + y[0] * y[0];
  };
  p.h_y = [](const ParamVector& y) {
    return scalar(3.0 * std::cos(3.0 * y[0]) + 2.0 * y[0]);
  };
  p.c0 = 0.8;
  return p;
}

SyntheticProblem build_p3() {
  SyntheticProblem p;
  p.name = "P3";
  p.dim_x = 2;
  p.dim_y = 2;
  p.f = [](const ParamVector&, const ParamVector& y) {
    const double a = y[0] - 1.0;
    const double b = y[1] + 0.5;
    return a * a + b * b;
  };
  p.g = [](const ParamVector& x, const ParamVector& y) {
    return (y - x).squaredNorm() + 0.3 * std::cos(2.0 * y[0] + y[1]);
  };
  p.h = [](const ParamVector& y) { return y[0] + y[1] * y[1]; };
  p.f_x = [](const ParamVector&, const ParamVector&) {
    return ParamVector::Zero(2).eval();
  };
  p.f_y = [](const ParamVector&, const ParamVector& y) {
    ParamVector g(2);
    g[0] = 2.0 * (y[0] - 1.0);
    g[1] = 2.0 * (y[1] + 0.5);
    return g;
  };
  p.g_x = [](const ParamVector& x, const ParamVector& y) {
    return (-2.0 * (y - x)).eval();
  };
  p.g_y = [](const ParamVector& x, const ParamVector& y) {
    ParamVector g = 2.0 * (y - x);
    const double s = -0.3 * std::sin(2.0 * y[0] + y[1]);
    g[0] += 2.0 * s;
    g[1] += s;
    return g;
  };
  p.h_y = [](const ParamVector& y) {
    ParamVector g(2);
    g[0] = 1.0;
    g[1] = 2.0 * y[1];
    return g;
  };
  p.c0 = 0.5;
  p.x_lo = ParamVector::Constant(2, -2.0);
  p.x_hi = ParamVector::Constant(2, 2.0);
  p.y_lo = ParamVector::Constant(2, -2.0);
  p.y_hi = ParamVector::Constant(2, 2.0);
  return p;
}

}  // namespace

std::vector<std::string> synthetic_catalog_names() { return {"P1", "P2", "P3"}; }

SyntheticProblem make_problem(const std::string& name) {
  SyntheticProblem p;
  if (name == "P1")
    p = build_p1();
  else if (name == "P2")
    p = build_p2();
  else if (name == "P3")
    p = build_p3();
  else
    throw Error(ErrorCode::UnknownProblem, "unknown synthetic problem: " + name);
  check_gradient_gate(p);
  return p;
}

ParamVector noisy_grad(const SyntheticProblem& p, GradSelector which,
                       const ParamVector& x, const ParamVector& y,
                       RngStream stream) {
  Rng rng(stream);
  switch (which) {
    case GradSelector::FX:
      return p.f_x(x, y) + rng.normal_vector(p.dim_x, p.sigma_f);
    case GradSelector::FY:
      return p.f_y(x, y) + rng.normal_vector(p.dim_y, p.sigma_f);
    case GradSelector::GX:
      return p.g_x(x, y) + rng.normal_vector(p.dim_x, p.sigma_g);
    case GradSelector::GY:
      return p.g_y(x, y) + rng.normal_vector(p.dim_y, p.sigma_g);
    case GradSelector::HY:
      return p.h_y(y) + rng.normal_vector(p.dim_y, p.sigma_h);
  }
  throw Error(ErrorCode::ConfigError, "bad gradient selector");
}

ParamVector noisy_subgrad_hplus(const SyntheticProblem& p, const ParamVector& y,
                                RngStream stream, double* tau_out) {
  const double hv = p.h(y);
  double tau;
  if (hv > p.c0)
    tau = 1.0;
  else if (hv < p.c0)
    tau = 0.0;
  else
    tau = 0.5;
  if (tau_out != nullptr) *tau_out = tau;
  if (tau == 0.0) {
    // Skip the noise draw: the subgradient is exactly zero on the strictly
    // feasible side.
    return ParamVector::Zero(p.dim_y);
  }
  Rng rng(stream);
  return tau * (p.h_y(y) + rng.normal_vector(p.dim_y, p.sigma_h));
}

namespace {

// Row-major lattice over a box, points_per_dim per axis (dim <= 2).
class Lattice {
 public:
  Lattice(const ParamVector& lo, const ParamVector& hi, int points_per_dim)
      : lo_(lo), hi_(hi), n_(points_per_dim), dim_(static_cast<int>(lo.size())) {
    require(dim_ >= 1 && dim_ <= 2, ErrorCode::ConfigError,
            "grid oracle supports 1-D or 2-D variables only");
    total_ = 1;
    for (int d = 0; d < dim_; ++d) total_ *= n_;
  }
  int size() const { return total_; }
  int dim() const { return dim_; }
  int points_per_dim() const { return n_; }
  ParamVector point(int idx) const {
    ParamVector v(dim_);
    for (int d = dim_ - 1; d >= 0; --d) {
      const int i = idx % n_;
      idx /= n_;
      v[d] = n_ == 1 ? lo_[d]
                     : lo_[d] + (hi_[d] - lo_[d]) * static_cast<double>(i) /
                                    static_cast<double>(n_ - 1);
    }
    return v;
  }
  // Indices of axis-neighbors with larger coordinate, for resolution scans.
  void forward_neighbors(int idx, int* out, int* count) const {
    *count = 0;
    int rem = idx;
    int coords[2] = {0, 0};
    for (int d = dim_ - 1; d >= 0; --d) {
      coords[d] = rem % n_;
      rem /= n_;
    }
    int stride = 1;
    for (int d = dim_ - 1; d >= 0; --d) {
      if (coords[d] + 1 < n_) out[(*count)++] = idx + stride;
      stride *= n_;
    }
  }

 private:
  ParamVector lo_, hi_;
  int n_;
  int dim_;
  int total_;
};

}  // namespace

GridOracleResult grid_bilevel_oracle(const SyntheticProblem& p,
                                     const PenaltyCoefficients& k,
                                     const GridResolution& res) {
  const Lattice xg(p.x_lo, p.x_hi, res.x_points_per_dim);
  const Lattice yg(p.y_lo, p.y_hi, res.y_points_per_dim);

  // h over the y lattice plus the grid h-resolution used to realize the
  // strict inequality h < c0.
  Eigen::VectorXd h_vals(yg.size());
  for (int j = 0; j < yg.size(); ++j) h_vals[j] = p.h(yg.point(j));
  double h_res = 0.0;
  int nbr[2];
  int nn = 0;
  for (int j = 0; j < yg.size(); ++j) {
    yg.forward_neighbors(j, nbr, &nn);
    for (int q = 0; q < nn; ++q)
      h_res = std::max(h_res, std::abs(h_vals[nbr[q]] - h_vals[j]));
  }
  const double margin = 0.5 * h_res;
  bool any_feasible = false;
  for (int j = 0; j < yg.size(); ++j)
    if (h_vals[j] <= p.c0 - margin) {
      any_feasible = true;
      break;
    }
  require(any_feasible, ErrorCode::InfeasibleEverywhere,
          p.name + ": no grid point satisfies h < c0");

  GridOracleResult r;
  r.feasibility_margin = margin;
  r.x_points.resize(xg.size(), p.dim_x);
  r.y_feasible_star.resize(xg.size(), p.dim_y);
  r.y_penalty_star.resize(xg.size(), p.dim_y);
  r.z_penalty_star.resize(xg.size(), p.dim_y);
  r.phi.resize(xg.size());
  r.f_at_feasible.resize(xg.size());
  r.h1_min.resize(xg.size());
  r.h2_min.resize(xg.size());

  double best_phi = std::numeric_limits<double>::infinity();
  double best_bilevel = std::numeric_limits<double>::infinity();
  double c_f = 0.0, c_g = 0.0;
  for (int i = 0; i < xg.size(); ++i) {
    const ParamVector x = xg.point(i);
    r.x_points.row(i) = x.transpose();
    double g_feas_min = std::numeric_limits<double>::infinity();
    double h1_min = std::numeric_limits<double>::infinity();
    double h2_min = std::numeric_limits<double>::infinity();
    int j_feas = -1, j_h1 = -1, j_h2 = -1;
    for (int j = 0; j < yg.size(); ++j) {
      const ParamVector y = yg.point(j);
      const double fv = p.f(x, y);
      const double gv = p.g(x, y);
      const double hp = hinge(h_vals[j], p.c0);
      c_f = std::max(c_f, std::abs(fv));
      c_g = std::max(c_g, std::abs(gv));
      const double h1v = fv + (gv + hp / k.sigma3) / k.sigma1;
      const double h2v = gv + hp / k.sigma2;
      if (h1v < h1_min) {
        h1_min = h1v;
        j_h1 = j;
      }
      if (h2v < h2_min) {
        h2_min = h2v;
        j_h2 = j;
      }
      if (h_vals[j] <= p.c0 - margin && gv < g_feas_min) {
        g_feas_min = gv;
        j_feas = j;
      }
    }
    r.y_feasible_star.row(i) = yg.point(j_feas).transpose();
    r.y_penalty_star.row(i) = yg.point(j_h1).transpose();
    r.z_penalty_star.row(i) = yg.point(j_h2).transpose();
    r.h1_min[i] = h1_min;
    r.h2_min[i] = h2_min;
    r.phi[i] = h1_min - h2_min / k.sigma1;
    r.f_at_feasible[i] = p.f(x, yg.point(j_feas));
    if (r.phi[i] < best_phi) {
      best_phi = r.phi[i];
      r.best_x = x;
    }
    if (r.f_at_feasible[i] < best_bilevel) {
      best_bilevel = r.f_at_feasible[i];
      r.best_x_bilevel = x;
    }
  }
  r.c_f = c_f;
  r.c_g = c_g;
  double h_abs_max = 0.0;
  for (int j = 0; j < yg.size(); ++j)
    h_abs_max = std::max(h_abs_max, std::abs(h_vals[j]));
  r.c_h = h_abs_max + std::abs(p.c0);
  return r;
}

std::string grid_oracle_to_csv(const GridOracleResult& r) {
  std::ostringstream out;
  const int dx = static_cast<int>(r.x_points.cols());
  const int dy = static_cast<int>(r.y_feasible_star.cols());
  for (int d = 0; d < dx; ++d) out << "x" << d << ",";
  for (int d = 0; d < dy; ++d) out << "y_feasible" << d << ",";
  for (int d = 0; d < dy; ++d) out << "y_penalty" << d << ",";
  for (int d = 0; d < dy; ++d) out << "z_penalty" << d << ",";
  out << "phi,f_at_feasible,h1_min,h2_min\n";
  char buf[40];
  auto emit = [&](double v, bool comma) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
    if (comma) out << ",";
  };
  for (int i = 0; i < r.x_points.rows(); ++i) {
    for (int d = 0; d < dx; ++d) emit(r.x_points(i, d), true);
    for (int d = 0; d < dy; ++d) emit(r.y_feasible_star(i, d), true);
    for (int d = 0; d < dy; ++d) emit(r.y_penalty_star(i, d), true);
    for (int d = 0; d < dy; ++d) emit(r.z_penalty_star(i, d), true);
    emit(r.phi[i], true);
    emit(r.f_at_feasible[i], true);
    emit(r.h1_min[i], true);
    emit(r.h2_min[i], false);
    out << "\n";
  }
  return out.str();
}

PhiOracle make_synthetic_phi_oracle(const SyntheticProblem& p,
                                    const PenaltyCoefficients& k,
                                    int y_points_per_dim) {
  // Shared scan: arg-minimizers of h1 and h2 over the y lattice.
  auto minimizers = [p, k, y_points_per_dim](const ParamVector& x) {
    const Lattice yg(p.y_lo, p.y_hi, y_points_per_dim);
    double h1_min = std::numeric_limits<double>::infinity();
    double h2_min = std::numeric_limits<double>::infinity();
    ParamVector y_star, z_star;
    for (int j = 0; j < yg.size(); ++j) {
      const ParamVector y = yg.point(j);
      const double gv = p.g(x, y);
      const double hp = hinge(p.h(y), p.c0);
      const double h1v = p.f(x, y) + (gv + hp / k.sigma3) / k.sigma1;
      const double h2v = gv + hp / k.sigma2;
      if (h1v < h1_min) {
        h1_min = h1v;
        y_star = y;
      }
      if (h2v < h2_min) {
        h2_min = h2v;
        z_star = y;
      }
    }
    struct Out {
      double h1, h2;
      ParamVector y_star, z_star;
    };
    return Out{h1_min, h2_min, y_star, z_star};
  };
  PhiOracle oracle;
  oracle.value = [minimizers, k](const ParamVector& x) {
    const auto m = minimizers(x);
    return m.h1 - m.h2 / k.sigma1;
  };
  oracle.subgrad = [minimizers, p, k](const ParamVector& x) {
    const auto m = minimizers(x);
    return (p.f_x(x, m.y_star) +
            (p.g_x(x, m.y_star) - p.g_x(x, m.z_star)) / k.sigma1)
        .eval();
  };
  return oracle;
}

}  // namespace cbso
