/* Copyright 2026 The GradDiv Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "gdl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "gdl/diagnostics.hpp"
#include "gdl/dirstats.hpp"

namespace gdl::eval {
namespace {

double row_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Cross-entropy per row from logits, via log-sum-exp.
std::vector<double> row_losses(const net::SampleModel& model, const Tensor& x, std::span<const int> labels) {
  const Tensor z = model.logits(x);
  std::vector<double> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto row = z.row_span(i);
    const double m = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - m);
    out[i] = m + std::log(s) - row[static_cast<std::size_t>(labels[i])];
  }
  return out;
}

std::vector<int> model_predictions(const net::SampleModel& model, const Tensor& x) {
  return net::argmax_rows(model.logits(x));
}

double fraction_correct(const std::vector<int>& predicted, std::span<const int> labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return labels.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

double clean_accuracy(const net::StochasticNet& net, const data::Dataset& test, std::size_t ensemble,
                      RngStream& rng) {
  return fraction_correct(net::argmax_rows(net::ensemble_predict(net, test.x, ensemble, rng)), test.y);
}

double AttackOutcome::accuracy() const {
  if (robust.empty()) return 0.0;
  return static_cast<double>(std::count(robust.begin(), robust.end(), 1)) / static_cast<double>(robust.size());
}

std::vector<AttackOutcome> attack_outcomes(const net::StochasticNet& net, const data::Dataset& test,
                                           const attacks::AttackSpec& spec,
                                           std::span<const std::uint64_t> seeds) {
  std::vector<AttackOutcome> out;
  for (std::uint64_t seed : seeds) {
    RngStream rng = RngStream::for_purpose(seed, purpose::kEvalAttack);
    AttackOutcome o{spec, seed, {}};
    if (spec.epsilon == 0.0) {
      const auto predicted = net::argmax_rows(net::ensemble_predict(net, test.x, spec.ensemble, rng));
      for (std::size_t i = 0; i < test.size(); ++i) o.robust.push_back(predicted[i] == test.y[i]);
    } else {
      const attacks::AttackResult r = attacks::run_attack(net, test.x, test.y, spec, rng);
      for (char s : r.success) o.robust.push_back(s ? 0 : 1);
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<RobustnessRow> robust_accuracy(const net::StochasticNet& net, const data::Dataset& test,
                                           const attacks::AttackSpec& spec,
                                           std::span<const std::uint64_t> seeds) {
  std::vector<RobustnessRow> rows;
  for (const AttackOutcome& o : attack_outcomes(net, test, spec, seeds)) {
    rows.push_back({attacks::to_string(spec.family), attacks::to_string(spec.effective_mode()),
                    attacks::to_string(spec.norm), spec.epsilon, o.seed, o.accuracy()});
  }
  return rows;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

MeanStd worst_case_total(std::span<const AttackOutcome> outcomes) {
  std::map<std::uint64_t, std::vector<char>> by_seed;
  for (const AttackOutcome& o : outcomes) {
    auto [it, fresh] = by_seed.try_emplace(o.seed, o.robust);
    if (fresh) continue;
    if (it->second.size() != o.robust.size()) {
      throw std::invalid_argument("worst_case_total: outcomes cover different example counts");
    }
    for (std::size_t i = 0; i < o.robust.size(); ++i) it->second[i] = it->second[i] && o.robust[i];
  }
  std::vector<double> accs;
  for (const auto& [seed, robust] : by_seed) {
    accs.push_back(robust.empty() ? 0.0
                                  : static_cast<double>(std::count(robust.begin(), robust.end(), 1)) /
                                        static_cast<double>(robust.size()));
  }
  return mean_std(accs);
}

std::vector<std::uint64_t> default_seeds(std::size_t count) {
  std::vector<std::uint64_t> s(count);
  std::iota(s.begin(), s.end(), std::uint64_t{1});
  return s;
}

std::vector<net::SampleModel> draw_models(const net::StochasticNet& net, std::size_t n, RngStream& rng) {
  std::vector<net::SampleModel> models;
  models.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    RngStream stream = rng.fork();
    models.push_back(net::sample_model(net, stream));
  }
  return models;
}

Tensor expected_gradient(std::span<const net::SampleModel> models, const Tensor& x,
                         std::span<const int> labels) {
  if (models.empty()) throw std::invalid_argument("expected_gradient: no models");
  Tensor sum(x.shape());
  for (const net::SampleModel& m : models) {
    const Tensor g = m.loss_and_input_gradient(x, labels).gradients;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += g[i];
  }
  const double inv = 1.0 / static_cast<double>(models.size());
  for (double& v : sum.data()) v *= inv;
  return sum;
}

std::vector<double> loss_increase(std::span<const net::SampleModel> models, const Tensor& x,
                                  std::span<const int> labels, const Tensor& direction, double alpha) {
  if (models.empty()) throw std::invalid_argument("loss_increase: no models");
  if (!(alpha >= 0.0)) throw std::invalid_argument("loss_increase: alpha must be >= 0");
  if (direction.shape() != x.shape()) throw ShapeError("loss_increase", direction.shape(), x.shape());
  std::vector<double> delta(x.rows(), 0.0);
  if (alpha == 0.0) return delta;
  Tensor moved = x;
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += alpha * direction[i];
  for (const net::SampleModel& m : models) {
    const auto base = row_losses(m, x, labels);
    const auto up = row_losses(m, moved, labels);
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += up[i] - base[i];
  }
  for (double& d : delta) d /= static_cast<double>(models.size());
  return delta;
}

std::vector<double> first_order_residual(std::span<const net::SampleModel> models, const Tensor& x,
                                         std::span<const int> labels, double alpha) {
  const Tensor g_hat = expected_gradient(models, x, labels);
  Tensor unit(x.shape());
  std::vector<double> norms(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    norms[i] = row_norm(g_hat.row_span(i));
    if (norms[i] == 0.0) continue;
    auto src = g_hat.row_span(i);
    auto dst = unit.row_span(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] / norms[i];
  }
  const auto delta = loss_increase(models, x, labels, unit, alpha);
  std::vector<double> out;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (norms[i] == 0.0) {
      warn("first_order_residual: skipping row " + std::to_string(i) + " with a zero expected gradient");
      continue;
    }
    out.push_back(std::abs(delta[i] - alpha * norms[i]) / (alpha * norms[i]));
  }
  return out;
}

std::vector<RotationPoint> rotation_sweep(std::span<const net::SampleModel> models, const Tensor& x,
                                          std::span<const int> labels, std::span<const double> degrees,
                                          double alpha, RngStream& rng) {
  const Tensor g_hat = expected_gradient(models, x, labels);
  // One axis stream per row, replayed for every angle so each row rotates in
  // a single fixed plane.
  std::vector<RngStream> axes;
  for (std::size_t i = 0; i < x.rows(); ++i) axes.push_back(rng.fork());
  std::vector<RotationPoint> out;
  for (double theta : degrees) {
    Tensor dir(x.shape());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double n = row_norm(g_hat.row_span(i));
      if (n == 0.0) continue;
      RngStream axis = axes[i];
      const auto r = attacks::rotate_gradient(g_hat.row_span(i), theta, axis);
      auto dst = dir.row_span(i);
      for (std::size_t j = 0; j < r.size(); ++j) dst[j] = r[j] / n;
    }
    const auto delta = loss_increase(models, x, labels, dir, alpha);
    const double mean = std::accumulate(delta.begin(), delta.end(), 0.0) / static_cast<double>(delta.size());
    out.push_back({theta, mean, std::cos(theta * M_PI / 180.0)});
  }
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal series of length >= 2");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::vector<BoundCheck> loss_bound_check(std::span<const net::SampleModel> models, const Tensor& x,
                                       std::span<const int> labels, attacks::Norm ball, double alpha,
                                       std::size_t random_directions, RngStream& rng) {
  if (models.empty()) throw std::invalid_argument("loss_bound_check: no models");
  const std::size_t rows = x.rows(), p = x.cols();
  const double q = ball == attacks::Norm::kLinf ? 1.0 : 2.0;
  std::vector<Tensor> grads;
  for (const net::SampleModel& m : models) grads.push_back(m.loss_and_input_gradient(x, labels).gradients);

  std::vector<BoundCheck> out(rows);
  Tensor g_hat(x.shape());
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> v_bar(p, 0.0);
    for (const Tensor& g : grads) {
      const auto row = g.row_span(i);
      const double n = row_norm(row);
      out[i].m_x = std::max(out[i].m_x, n);
      for (std::size_t j = 0; j < p; ++j) {
        g_hat.at(i, j) += row[j] / static_cast<double>(grads.size());
        if (n > 0.0) v_bar[j] += row[j] / n / static_cast<double>(grads.size());
      }
    }
    out[i].rho_q = stats::lq_norm(v_bar, q);
    out[i].bound = alpha * out[i].m_x * out[i].rho_q;
    out[i].delta_max = -std::numeric_limits<double>::infinity();
  }

  auto score = [&](const Tensor& dir) {
    const auto delta = loss_increase(models, x, labels, dir, alpha);
    for (std::size_t i = 0; i < rows; ++i) out[i].delta_max = std::max(out[i].delta_max, delta[i]);
  };
  score(attacks::steepest_step(g_hat, ball, 1.0));
  for (std::size_t k = 0; k < random_directions; ++k) {
    Tensor dir(x.shape());
    if (ball == attacks::Norm::kLinf) {
      for (double& v : dir.data()) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
    } else {
      for (double& v : dir.data()) v = rng.normal();
      dir = attacks::project_ball(dir, attacks::Norm::kL2, 1.0);
      for (std::size_t i = 0; i < rows; ++i) {
        const double n = row_norm(dir.row_span(i));
        for (double& v : dir.row_span(i)) v /= n;
      }
    }
    score(dir);
  }
  return out;
}

std::vector<KappaRow> kappa_density(const net::StochasticNet& net, const data::Dataset& test,
                                    std::size_t n_grads, RngStream& rng) {
  if (n_grads < 2) throw std::invalid_argument("kappa_density: n_grads must be >= 2");
  std::vector<Tensor> grads;
  for (std::size_t k = 0; k < n_grads; ++k) {
    RngStream stream = rng.fork();
    grads.push_back(net::sample_model(net, stream).loss_and_input_gradient(test.x, test.y).gradients);
  }
  std::vector<KappaRow> out;
  const std::size_t p = test.dim();
  for (std::size_t i = 0; i < test.size(); ++i) {
    Tensor g({n_grads, p});
    for (std::size_t k = 0; k < n_grads; ++k) {
      const auto src = grads[k].row_span(i);
      std::copy(src.begin(), src.end(), g.row_span(k).begin());
    }
    try {
      const stats::GradientBatch batch = stats::GradientBatch::from_gradients(g, "input " + std::to_string(i));
      const double rho = stats::sample_mrl(batch);
      out.push_back({i, stats::estimate_kappa(rho, p), rho});
    } catch (const std::invalid_argument&) {
      warn("kappa_density: skipping input " + std::to_string(i) + ", every gradient sample vanished");
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Tensor transfer_matrix(std::span<const net::SampleModel> models, const data::Dataset& test,
                       const attacks::AttackSpec& spec, RngStream& rng) {
  const std::size_t k = models.size();
  if (k < 2) throw std::invalid_argument("transfer_matrix: need k >= 2 models");
  attacks::AttackSpec pgd = spec;
  pgd.family = attacks::Family::kPgd;
  pgd.validate();
  Tensor out({k, k});
  for (std::size_t i = 0; i < k; ++i) {
    const attacks::GradientSource source = attacks::model_source(models[i]);
    const Tensor adv = attacks::pgd(source, test.x, test.y, pgd, rng).adversarial;
    for (std::size_t j = 0; j < k; ++j) out.at(i, j) = fraction_correct(model_predictions(models[j], adv), test.y);
  }
  return out;
}

Tensor transfer_matrix(const net::StochasticNet& net, const data::Dataset& test, std::size_t k,
                       const attacks::AttackSpec& spec, RngStream& rng) {
  if (k < 2) throw std::invalid_argument("transfer_matrix: need k >= 2 models");
  const auto models = draw_models(net, k, rng);
  return transfer_matrix(models, test, spec, rng);
}

double off_diagonal_mean(const Tensor& m) {
  if (m.rows() != m.cols() || m.rows() < 2) throw ShapeError("off_diagonal_mean", m.shape(), "need square k >= 2");
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j) s += m.at(i, j);
  return s / static_cast<double>(m.rows() * (m.rows() - 1));
}

bool ChecklistReport::all_pass() const {
  return std::all_of(items.begin(), items.end(), [](const ChecklistItem& it) { return it.pass; });
}

ChecklistReport obfuscation_checklist(const net::StochasticNet& net, const data::Dataset& test,
                                      const ChecklistSettings& s) {
  auto spec_for = [&](attacks::Family family, double eps) {
    attacks::AttackSpec a;
    a.family = family;
    a.norm = attacks::Norm::kLinf;
    a.epsilon = eps;
    a.step = eps / 4.0;
    a.iterations = s.iterations;
    a.eot_samples = s.eot_samples;
    a.mode = attacks::SamplingMode::kEot;
    a.ensemble = s.ensemble;
    return a;
  };
  auto run = [&](const attacks::AttackSpec& a, const data::Dataset& d) {
    RngStream rng = RngStream::for_purpose(s.seed, purpose::kEvalAttack);
    return attacks::run_attack(net, d.x, d.y, a, rng);
  };

  ChecklistReport report;
  const attacks::AttackResult pgd = run(spec_for(attacks::Family::kEotPgd, s.epsilon), test);
  const double pgd_rate = pgd.success_rate();

  const double fgm_rate = run(spec_for(attacks::Family::kFgm, s.epsilon), test).success_rate();
  report.items.push_back({"iterative attacks beat one-step attacks", pgd_rate >= fgm_rate,
                          "eot-pgd success " + fmt(pgd_rate) + " vs eot-fgm " + fmt(fgm_rate) + " at eps " +
                              fmt(s.epsilon)});

  attacks::AttackSpec blackbox = spec_for(attacks::Family::kRandomSearch, s.epsilon);
  blackbox.trials = s.blackbox_trials;
  const double bb_rate = run(blackbox, test).success_rate();
  report.items.push_back({"white-box attacks beat black-box attacks", pgd_rate >= bb_rate,
                          "eot-pgd success " + fmt(pgd_rate) + " vs random search (" +
                              std::to_string(s.blackbox_trials) + " trials) " + fmt(bb_rate) +
                              "; square attack out of scope"});

  const double box_rate = run(spec_for(attacks::Family::kEotPgd, 1.0), test).success_rate();
  report.items.push_back({"unbounded attacks reach full success", box_rate >= s.full_box_success,
                          "eot-pgd success " + fmt(box_rate) + " at eps 1 (full box), threshold " +
                              fmt(s.full_box_success)});

  std::vector<std::size_t> resistant;
  for (std::size_t i = 0; i < test.size() && resistant.size() < s.brute_force_points; ++i)
    if (!pgd.success[i]) resistant.push_back(i);
  std::size_t found = 0;
  if (!resistant.empty()) {
    attacks::AttackSpec brute = spec_for(attacks::Family::kRandomSearch, s.epsilon);
    brute.trials = s.brute_force_trials;
    const attacks::AttackResult r = run(brute, test.select(resistant));
    found = static_cast<std::size_t>(std::count(r.success.begin(), r.success.end(), 1));
  }
  report.items.push_back({"random search finds nothing eot-pgd missed", found == 0,
                          std::to_string(found) + " of " + std::to_string(resistant.size()) +
                              " eot-pgd-resistant points broken by " + std::to_string(s.brute_force_trials) +
                              "-trial random search"});

  std::string curve;
  bool monotone = true;
  double previous = -1.0;
  for (double eps : s.epsilon_grid) {
    const double rate = eps == 0.0 ? 0.0 : run(spec_for(attacks::Family::kEotPgd, eps), test).success_rate();
    monotone = monotone && rate >= previous;
    previous = rate;
    curve += (curve.empty() ? "" : ", ") + fmt(eps) + ":" + fmt(rate);
  }
  report.items.push_back({"success grows with the budget", monotone, "eot-pgd success by eps {" + curve + "}"});
  return report;
}

DecisionGrid decision_grid(std::span<const net::SampleModel> models, std::span<const double> center,
                           std::span<const double> d1, std::span<const double> d2, double extent,
                           std::size_t resolution) {
  if (resolution < 2) throw std::invalid_argument("decision_grid: resolution must be >= 2");
  if (d1.size() != center.size() || d2.size() != center.size()) {
    throw std::invalid_argument("decision_grid: direction and center sizes differ");
  }
  const double n1 = row_norm(d1), n2 = row_norm(d2);
  double dot = 0.0;
  for (std::size_t j = 0; j < d1.size(); ++j) dot += d1[j] * d2[j];
  if (n1 == 0.0 || n2 == 0.0 || std::abs(dot) >= (1.0 - 1e-12) * n1 * n2) {
    throw std::invalid_argument("decision_grid: directions are parallel or zero");
  }
  DecisionGrid grid;
  grid.extent = extent;
  grid.resolution = resolution;
  const std::size_t p = center.size();
  Tensor points({resolution * resolution, p});
  for (std::size_t i = 0; i < resolution; ++i) {
    const double a = -extent + 2.0 * extent * static_cast<double>(i) / static_cast<double>(resolution - 1);
    for (std::size_t k = 0; k < resolution; ++k) {
      const double b = -extent + 2.0 * extent * static_cast<double>(k) / static_cast<double>(resolution - 1);
      grid.a.push_back(a);
      grid.b.push_back(b);
      auto row = points.row_span(i * resolution + k);
      for (std::size_t j = 0; j < p; ++j) row[j] = center[j] + a * d1[j] + b * d2[j];
    }
  }
  for (const net::SampleModel& m : models) grid.labels.push_back(model_predictions(m, points));
  return grid;
}

double disagreement(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("disagreement: grids differ in size");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

}  // namespace gdl::eval
