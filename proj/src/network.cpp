#include "gridforge/network.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace gridforge {

namespace {

void kron2_add(Eigen::MatrixXd& dst, Eigen::Index row0, Eigen::Index col0,
               const Eigen::MatrixXd& m, const Eigen::Matrix2d& blk) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) dst.block<2, 2>(row0 + 2 * i, col0 + 2 * j) += m(i, j) * blk;
}

}  // namespace

NetworkModel build_network(int bus_count, const std::vector<Line>& lines) {
  if (bus_count < 1) throw std::invalid_argument("build_network: bus_count must be >= 1");

  int edges = 0, caps = 0;
  std::set<std::pair<int, int>> seen;
  for (const auto& line : lines) {
    if (line.sections.empty())
      throw std::invalid_argument("build_network: line has no sections");
    if (line.from_bus == line.to_bus)
      throw std::invalid_argument("build_network: line endpoints coincide");
    if (line.from_bus < 1 || line.from_bus > bus_count || line.to_bus < 1 ||
        line.to_bus > bus_count)
      throw std::invalid_argument("build_network: bus id out of range");
    double z2 = 0.0;
    for (std::size_t k = 0; k < line.sections.size(); ++k) {
      const auto& s = line.sections[k];
      if (!(s.r > 0.0) || !(s.l > 0.0))
        throw std::invalid_argument("build_network: nonpositive R or L");
      if (s.g < 0.0) throw std::invalid_argument("build_network: negative G");
      const bool internal = k + 1 < line.sections.size();
      if (internal && !(s.c > 0.0))
        throw std::invalid_argument("build_network: internal section needs c > 0");
      z2 += s.r * s.r + s.l * s.l;
    }
    auto key = std::minmax(line.from_bus, line.to_bus);
    if (z2 == 0.0 && !seen.insert({key.first, key.second}).second)
      throw std::invalid_argument("build_network: duplicate zero-impedance edge");
    edges += static_cast<int>(line.sections.size());
    caps += static_cast<int>(line.sections.size()) - 1;
  }

  NetworkModel net;
  net.bus_count = bus_count;
  net.lines = lines;
  const int nodes = bus_count + caps;
  net.h = Eigen::MatrixXd::Zero(nodes, edges);
  net.r = Eigen::VectorXd::Zero(edges);
  net.l = Eigen::VectorXd::Zero(edges);
  net.g = Eigen::VectorXd::Zero(caps);
  net.c = Eigen::VectorXd::Zero(caps);

  int e = 0, cn = 0;
  for (const auto& line : lines) {
    const int n = static_cast<int>(line.sections.size());
    for (int k = 0; k < n; ++k) {
      const auto& s = line.sections[k];
      const int from_node = (k == 0) ? line.from_bus - 1 : bus_count + cn + k - 1;
      const int to_node = (k == n - 1) ? line.to_bus - 1 : bus_count + cn + k;
      net.h(from_node, e) = 1.0;
      net.h(to_node, e) = -1.0;
      net.r(e) = s.r;
      net.l(e) = s.l;
      if (k + 1 < n) {
        net.g(cn + k) = s.g;
        net.c(cn + k) = s.c;
      }
      ++e;
    }
    cn += n - 1;
  }
  net.h_b = net.h.topRows(bus_count);
  net.h_c = net.h.bottomRows(caps);
  return net;
}

LineStateSpace assemble_line_statespace(const NetworkModel& net, const SyncFrame& frame) {
  const int ne = net.edge_count();
  const int nc = net.cap_count();
  const int nb = net.bus_count;
  for (int i = 0; i < ne; ++i)
    if (!(net.l(i) > 0.0))
      throw std::invalid_argument("assemble_line_statespace: singular inductance");
  for (int i = 0; i < nc; ++i)
    if (!(net.c(i) > 0.0))
      throw std::invalid_argument("assemble_line_statespace: singular capacitance");

  const Eigen::Matrix2d i2 = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d& j = rotation_j();
  const int ns = 2 * ne + 2 * nc;

  LineStateSpace ss;
  ss.edge_count = ne;
  ss.cap_count = nc;
  ss.a = Eigen::MatrixXd::Zero(ns, ns);
  ss.b = Eigen::MatrixXd::Zero(ns, 2 * nb);
  ss.c = Eigen::MatrixXd::Zero(2 * nb, ns);

  // Current rows: L dI/dt = -(R + ws L J) I + H_C^T V_C + H_B^T V.
  for (int e = 0; e < ne; ++e) {
    const double linv = 1.0 / net.l(e);
    ss.a.block<2, 2>(2 * e, 2 * e) += -(net.r(e) * linv) * i2 - frame.omega_s * j;
  }
  kron2_add(ss.a, 0, 2 * ne, net.h_c.transpose(), i2);
  for (int e = 0; e < ne; ++e) {
    const double linv = 1.0 / net.l(e);
    ss.a.block(2 * e, 2 * ne, 2, 2 * nc) *= linv;
  }
  kron2_add(ss.b, 0, 0, net.h_b.transpose(), i2);
  for (int e = 0; e < ne; ++e) ss.b.middleRows<2>(2 * e) *= 1.0 / net.l(e);

  // Capacitor rows: C dV_C/dt = -(G + ws C J) V_C - H_C I. The sign of the
  // coupling follows the incidence convention (edge entering a node carries
  // -1), so the current into a capacitor node is -(H_C I).
  for (int cn = 0; cn < nc; ++cn) {
    const double cinv = 1.0 / net.c(cn);
    ss.a.block<2, 2>(2 * ne + 2 * cn, 2 * ne + 2 * cn) +=
        -(net.g(cn) * cinv) * i2 - frame.omega_s * j;
  }
  kron2_add(ss.a, 2 * ne, 0, -net.h_c, i2);
  for (int cn = 0; cn < nc; ++cn)
    ss.a.block(2 * ne + 2 * cn, 0, 2, 2 * ne) *= 1.0 / net.c(cn);

  // Output: I_DQ = (H_B kron I2) I^N.
  kron2_add(ss.c, 0, 0, net.h_b, i2);
  return ss;
}

double line_energy(const NetworkModel& net, const Eigen::VectorXd& state,
                   const Eigen::VectorXd& state_eq) {
  const int ne = net.edge_count();
  const int nc = net.cap_count();
  const int ns = 2 * ne + 2 * nc;
  if (state.size() != ns || state_eq.size() != ns)
    throw std::invalid_argument("line_energy: state dimension mismatch");
  const Eigen::VectorXd d = state - state_eq;
  double e = 0.0;
  for (int k = 0; k < ne; ++k) e += 0.5 * net.l(k) * d.segment<2>(2 * k).squaredNorm();
  for (int k = 0; k < nc; ++k)
    e += 0.5 * net.c(k) * d.segment<2>(2 * ne + 2 * k).squaredNorm();
  return e;
}

std::vector<std::string> validate_network(const NetworkModel& net) {
  std::vector<std::string> issues;
  const int ne = net.edge_count();
  const int nc = net.cap_count();

  for (int e = 0; e < ne; ++e) {
    int plus = 0, minus = 0;
    for (Eigen::Index i = 0; i < net.h.rows(); ++i) {
      if (net.h(i, e) == 1.0) ++plus;
      else if (net.h(i, e) == -1.0) ++minus;
      else if (net.h(i, e) != 0.0)
        issues.push_back("incidence entry not in {-1,0,1} in column " + std::to_string(e));
    }
    if (plus != 1 || minus != 1)
      issues.push_back("incidence column sum != 0 in column " + std::to_string(e));
  }
  if (net.h_b.rows() != net.bus_count || net.h_c.rows() != nc ||
      (net.h - (Eigen::MatrixXd(net.h.rows(), ne) << net.h_b, net.h_c).finished())
              .cwiseAbs()
              .maxCoeff() != 0.0)
    issues.push_back("H != [H_B; H_C]");
  for (int e = 0; e < ne; ++e) {
    if (!(net.r(e) > 0.0)) issues.push_back("nonpositive resistance on edge " + std::to_string(e));
    if (!(net.l(e) > 0.0)) issues.push_back("nonpositive inductance on edge " + std::to_string(e));
  }
  for (int k = 0; k < nc; ++k) {
    if (!(net.c(k) > 0.0))
      issues.push_back("nonpositive capacitance at internal node " + std::to_string(k));
    if (net.g(k) < 0.0)
      issues.push_back("negative conductance at internal node " + std::to_string(k));
  }

  int expect_edges = 0, expect_caps = 0;
  for (const auto& line : net.lines) {
    if (line.sections.empty()) {
      issues.push_back("line with no sections");
      continue;
    }
    expect_edges += static_cast<int>(line.sections.size());
    expect_caps += static_cast<int>(line.sections.size()) - 1;
    for (const auto& s : line.sections)
      if (!(s.l > 0.0)) issues.push_back("nonpositive inductance");
  }
  if (expect_edges != ne) issues.push_back("edge ordering/count mismatch with line list");
  if (expect_caps != nc) issues.push_back("capacitor node count mismatch with line list");
  return issues;
}

}  // namespace gridforge
