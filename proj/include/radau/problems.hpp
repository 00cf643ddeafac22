#pragma once

// Stiff benchmark problems: Oregonator, Robertson, Hires and Pollution, each
// with an analytic Jacobian and its default tolerance-sweep protocol.

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "radau/errors.hpp"
#include "radau/solver.hpp"

namespace radau {

// Tolerance sweep: rtol = 10^e for each exponent e, atol = 10^(e + offset),
// reference solved with rtol = atol = 10^ref_exponent.
struct SweepProtocol {
  std::vector<int> rtol_exponents;
  int atol_offset = 0;
  int ref_exponent = -14;
};

template <class T>
struct NamedProblem {
  std::string name;
  OdeProblem<T> prob;
  SweepProtocol protocol;
};

inline std::vector<int> exponent_range(int from, int to) {
  std::vector<int> out;
  for (int e = from; from >= to ? e >= to : e <= to; e += from >= to ? -1 : 1) out.push_back(e);
  return out;
}

// Mass-action kinetics: each reaction has rate k * y_a (* y_b) and a list of
// net stoichiometric effects. f and its exact Jacobian follow from the table.
template <class T>
struct MassAction {
  struct Reaction {
    T k;
    int a;
    int b;  // -1 for first-order reactions
    std::vector<std::pair<int, int>> effects;  // (species, coefficient)
  };
  std::vector<Reaction> reactions;

  T rate(const Reaction& r, std::span<const T> y) const {
    return r.b < 0 ? T(r.k * y[r.a]) : T(r.k * y[r.a] * y[r.b]);
  }

  void rhs(std::span<const T> y, std::span<T> dy) const {
    for (auto& v : dy) v = T(0);
    for (const auto& r : reactions) {
      const T w = rate(r, y);
      for (auto [sp, coef] : r.effects) multiply_add(dy[sp], T(coef), w);
    }
  }

  void jacobian(std::span<const T> y, Matrix<T>& J) const {
    for (auto& v : J.data()) v = T(0);
    for (const auto& r : reactions) {
      // Partial derivatives of the rate with respect to its reactants.
      std::array<std::pair<int, T>, 2> partials{std::pair<int, T>{r.a, T(0)}, std::pair<int, T>{-1, T(0)}};
      if (r.b < 0) {
        partials[0].second = r.k;
      } else {
        partials[0].second = r.k * y[r.b];
        partials[1] = {r.b, T(r.k * y[r.a])};
      }
      for (auto [sp, coef] : r.effects)
        for (const auto& [col, d] : partials)
          if (col >= 0) multiply_add(J(sp, col), T(coef), d);
    }
  }
};

template <class T>
OdeProblem<T> from_kinetics(MassAction<T> kin, Vector<T> y0, T tf) {
  OdeProblem<T> p;
  auto shared = std::make_shared<const MassAction<T>>(std::move(kin));
  p.f = [shared](const T&, std::span<const T> y, std::span<T> dy) { shared->rhs(y, dy); };
  p.jac = [shared](const T&, std::span<const T> y, Matrix<T>& J) { shared->jacobian(y, J); };
  p.y0 = std::move(y0);
  p.t0 = T(0);
  p.tf = std::move(tf);
  return p;
}

// y1' = k1 (y2 + y1 (1 - k2 y1 - y2))
// y2' = (y3 - (1 + y1) y2) / k1
// y3' = k3 (y1 - y3)
template <class T>
NamedProblem<T> oregonator() {
  const T k1 = constant<T>("77.27");
  const T k2 = constant<T>("8.375e-3");
  const T k3 = constant<T>("0.161");
  OdeProblem<T> p;
  p.f = [=](const T&, std::span<const T> y, std::span<T> dy) {
    dy[0] = k1 * (y[1] + y[0] * (T(1) - k2 * y[0] - y[1]));
    dy[1] = (y[2] - (T(1) + y[0]) * y[1]) / k1;
    dy[2] = k3 * (y[0] - y[2]);
  };
  p.jac = [=](const T&, std::span<const T> y, Matrix<T>& J) {
    J(0, 0) = k1 * (T(1) - T(2) * k2 * y[0] - y[1]);
    J(0, 1) = k1 * (T(1) - y[0]);
    J(0, 2) = T(0);
    J(1, 0) = -y[1] / k1;
    J(1, 1) = -(T(1) + y[0]) / k1;
    J(1, 2) = T(1) / k1;
    J(2, 0) = k3;
    J(2, 1) = T(0);
    J(2, 2) = -k3;
  };
  p.y0 = {T(1), T(2), T(3)};
  p.t0 = T(0);
  p.tf = T(30);
  return {"oregonator", std::move(p), {exponent_range(-5, -12), -2, -14}};
}

// y1' = -k1 y1 + k3 y2 y3
// y2' =  k1 y1 - k2 y2^2 - k3 y2 y3
// y3' =  k2 y2^2
template <class T>
NamedProblem<T> robertson() {
  MassAction<T> kin;
  kin.reactions = {
      {constant<T>("0.04"), 0, -1, {{0, -1}, {1, 1}}},
      {constant<T>("3e7"), 1, 1, {{1, -1}, {2, 1}}},
      {constant<T>("1e4"), 1, 2, {{0, 1}, {1, -1}}},
  };
  return {"robertson", from_kinetics(std::move(kin), {T(1), T(0), T(0)}, T(100000)),
          {exponent_range(-4, -8), -5, -14}};
}

template <class T>
NamedProblem<T> hires() {
  auto c = [](const char* text) { return constant<T>(text); };
  const T a171 = c("1.71"), a043 = c("0.43"), a832 = c("8.32"), a00007 = c("0.0007"), a875 = c("8.75"),
          a1003 = c("10.03"), a035 = c("0.35"), a112 = c("1.12"), a1745 = c("1.745"), a280 = c("280"),
          a069 = c("0.69"), a181 = c("1.81");
  OdeProblem<T> p;
  p.f = [=](const T&, std::span<const T> y, std::span<T> dy) {
    const T r = a280 * y[5] * y[7];
    dy[0] = -a171 * y[0] + a043 * y[1] + a832 * y[2] + a00007;
    dy[1] = a171 * y[0] - a875 * y[1];
    dy[2] = -a1003 * y[2] + a043 * y[3] + a035 * y[4];
    dy[3] = a832 * y[1] + a171 * y[2] - a112 * y[3];
    dy[4] = -a1745 * y[4] + a043 * y[5] + a043 * y[6];
    dy[5] = -r + a069 * y[3] + a171 * y[4] - a043 * y[5] + a069 * y[6];
    dy[6] = r - a181 * y[6];
    dy[7] = -r + a181 * y[6];
  };
  p.jac = [=](const T&, std::span<const T> y, Matrix<T>& J) {
    for (auto& v : J.data()) v = T(0);
    J(0, 0) = -a171;
    J(0, 1) = a043;
    J(0, 2) = a832;
    J(1, 0) = a171;
    J(1, 1) = -a875;
    J(2, 2) = -a1003;
    J(2, 3) = a043;
    J(2, 4) = a035;
    J(3, 1) = a832;
    J(3, 2) = a171;
    J(3, 3) = -a112;
    J(4, 4) = -a1745;
    J(4, 5) = a043;
    J(4, 6) = a043;
    const T d6 = a280 * y[7], d8 = a280 * y[5];
    J(5, 3) = a069;
    J(5, 4) = a171;
    J(5, 5) = -d6 - a043;
    J(5, 6) = a069;
    J(5, 7) = -d8;
    J(6, 5) = d6;
    J(6, 6) = -a181;
    J(6, 7) = d8;
    J(7, 5) = -d6;
    J(7, 6) = a181;
    J(7, 7) = -d8;
  };
  p.y0 = Vector<T>(8, T(0));
  p.y0[0] = T(1);
  p.y0[7] = c("0.0057");
  p.t0 = T(0);
  p.tf = c("321.8122");
  return {"hires", std::move(p), {exponent_range(-5, -10), -2, -14}};
}

// Air-pollution kinetics with 20 species and 25 reactions. Species and rate
// constants are 1-based in the comments (r_j = k_j * reactants).
template <class T>
NamedProblem<T> pollution() {
  const std::array<const char*, 25> k_text{
      "0.25",   "26.6",    "12300.0", "0.00086", "0.00082", "15000.0", "0.00013", "24000.0", "16500.0",
      "9000.0", "0.022",   "12000.0", "1.88",    "16300.0", "4.8e6",  "0.00035", "0.0175",  "1.0e8",
      "4.44e11", "1240.0", "2.1",     "5.78",    "0.0474",  "1780.0", "3.12"};
  std::array<T, 25> k;
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = constant<T>(k_text[i]);
  // Convert 1-based species numbers to indices.
  auto sp = [](int i) { return i - 1; };
  using E = std::vector<std::pair<int, int>>;
  auto effects = [&](std::initializer_list<std::pair<int, int>> list) {
    E out;
    for (auto [s, c] : list) out.emplace_back(sp(s), c);
    return out;
  };
  MassAction<T> kin;
  kin.reactions = {
      {k[0], sp(1), -1, effects({{1, -1}, {2, 1}, {3, 1}})},
      {k[1], sp(2), sp(4), effects({{1, 1}, {2, -1}, {4, -1}})},
      {k[2], sp(5), sp(2), effects({{1, 1}, {2, -1}, {5, -1}, {6, 1}})},
      {k[3], sp(7), -1, effects({{5, 2}, {7, -1}, {8, 1}})},
      {k[4], sp(7), -1, effects({{7, -1}, {8, 1}})},
      {k[5], sp(7), sp(6), effects({{5, 1}, {6, -1}, {7, -1}, {8, 1}})},
      {k[6], sp(9), -1, effects({{5, 1}, {8, 1}, {9, -1}, {10, 1}})},
      {k[7], sp(9), sp(6), effects({{6, -1}, {9, -1}, {11, 1}})},
      {k[8], sp(11), sp(2), effects({{1, 1}, {2, -1}, {10, 1}, {11, -1}, {12, 1}})},
      {k[9], sp(11), sp(1), effects({{1, -1}, {11, -1}, {13, 1}})},
      {k[10], sp(13), -1, effects({{1, 1}, {11, 1}, {13, -1}})},
      {k[11], sp(10), sp(2), effects({{1, 1}, {2, -1}, {10, -1}, {14, 1}})},
      {k[12], sp(14), -1, effects({{5, 1}, {7, 1}, {14, -1}})},
      {k[13], sp(1), sp(6), effects({{1, -1}, {6, -1}, {15, 1}})},
      {k[14], sp(3), -1, effects({{3, -1}, {4, 1}})},
      {k[15], sp(4), -1, effects({{4, -1}, {16, 1}})},
      {k[16], sp(4), -1, effects({{3, 1}, {4, -1}})},
      {k[17], sp(16), -1, effects({{6, 2}, {16, -1}})},
      {k[18], sp(16), -1, effects({{3, 1}, {16, -1}})},
      {k[19], sp(17), sp(6), effects({{5, 1}, {6, -1}, {17, -1}, {18, 1}})},
      {k[20], sp(19), -1, effects({{2, 1}, {19, -1}})},
      {k[21], sp(19), -1, effects({{1, 1}, {3, 1}, {19, -1}})},
      {k[22], sp(1), sp(4), effects({{1, -1}, {4, -1}, {19, 1}})},
      {k[23], sp(19), sp(1), effects({{1, -1}, {19, -1}, {20, 1}})},
      {k[24], sp(20), -1, effects({{1, 1}, {19, 1}, {20, -1}})},
  };
  Vector<T> y0(20, T(0));
  y0[sp(2)] = constant<T>("0.2");
  y0[sp(4)] = constant<T>("0.04");
  y0[sp(7)] = constant<T>("0.1");
  y0[sp(8)] = constant<T>("0.3");
  y0[sp(9)] = constant<T>("0.017");
  y0[sp(17)] = constant<T>("0.007");
  return {"pollution", from_kinetics(std::move(kin), std::move(y0), T(60)),
          {exponent_range(-4, -9), -4, -14}};
}

inline const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"oregonator", "robertson", "hires", "pollution"};
  return names;
}

template <class T>
NamedProblem<T> make_problem(std::string_view name) {
  if (name == "oregonator") return oregonator<T>();
  if (name == "robertson") return robertson<T>();
  if (name == "hires") return hires<T>();
  if (name == "pollution") return pollution<T>();
  throw UnknownProblem(std::string(name));
}

template <class T>
std::map<std::string, NamedProblem<T>> problem_registry() {
  std::map<std::string, NamedProblem<T>> out;
  for (const auto& name : problem_names()) out.emplace(name, make_problem<T>(name));
  return out;
}

}  // namespace radau
