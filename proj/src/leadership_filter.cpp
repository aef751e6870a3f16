#include "stackelberg/leadership_filter.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace stackelberg {
namespace {

constexpr double kLikelihoodFloor = 1e-300;
constexpr std::uint64_t kResampleStream = ~std::uint64_t{0};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t particle, std::uint64_t timestep) {
  return splitmix64(splitmix64(splitmix64(seed) ^ particle) ^ timestep);
}

void FilterConfig::validate(int n) const {
  if (num_particles < 1) throw std::invalid_argument("filter.num_particles must be >= 1");
  if (horizon < 2) throw std::invalid_argument("filter.horizon must be >= 2");
  if (!(p_trans >= 0.0 && p_trans <= 1.0)) throw std::invalid_argument("filter.p_trans must be in [0, 1]");
  if (!(prior_leader_one >= 0.0 && prior_leader_one <= 1.0))
    throw std::invalid_argument("filter.prior_leader_one must be in [0, 1]");
  if (!(resample_fraction >= 0.0 && resample_fraction <= 1.0))
    throw std::invalid_argument("filter.resample_fraction must be in [0, 1]");
  if (workers < 1) throw std::invalid_argument("filter.workers must be >= 1");
  if (process_noise.rows() != n || process_noise.cols() != n)
    throw std::invalid_argument("filter.process_noise must be " + std::to_string(n) + "x" + std::to_string(n));
  if (measurement_noise.rows() != n || measurement_noise.cols() != n)
    throw std::invalid_argument("filter.measurement_noise must be " + std::to_string(n) + "x" + std::to_string(n));
  if (min_eigenvalue(0.5 * (process_noise + process_noise.transpose())) < -1e-12)
    throw std::invalid_argument("filter.process_noise must be positive semidefinite");
  if (Eigen::LLT<Matrix>(measurement_noise).info() != Eigen::Success)
    throw std::invalid_argument("filter.measurement_noise must be positive definite");
  for (int i : compare_indices)
    if (i < 0 || i >= n) throw std::invalid_argument("filter.compare index out of range: " + std::to_string(i));
  solver.validate();
}

GaussianSampler::GaussianSampler(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  const Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  L_ = es.eigenvectors() * d.asDiagonal();
}

Vector GaussianSampler::operator()(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal;
  Vector z(L_.cols());
  for (int i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return L_ * z;
}

void propagate(ParticleSet& particles, const std::array<Vector, 2>& controls, const DynamicsModel& model,
               const GaussianSampler& process_noise, double p_trans, std::uint64_t seed, int t) {
  for (std::size_t k = 0; k < particles.size(); ++k) {
    Particle& p = particles[k];
    std::mt19937_64 rng(stream_seed(seed, k, t));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    p.previous_leader = p.leader;
    if (unif(rng) < p_trans) p.leader = other(p.leader);
    p.previous = p.state;
    p.state = model.step(p.previous, controls[0], controls[1], t - 1) + process_noise(rng);
  }
}

JointControls get_nominal_trajectory(int horizon, const std::array<Vector, 2>* last, int m1, int m2) {
  if (!last) return zero_controls(horizon, m1, m2);
  JointControls c;
  c.seq[0].assign(horizon, (*last)[0]);
  c.seq[1].assign(horizon, (*last)[1]);
  return c;
}

MeasurementTrajectory expected_measurement(const Particle& particle, const MeasurementModel& mm,
                                           const JointControls& nominal, const FilterConfig& cfg) {
  GameDefinition game{mm.model, mm.costs, cfg.horizon, particle.previous_leader};
  SolveResult r = solve(game, particle.previous, nominal, cfg.solver);
  MeasurementTrajectory out;
  out.converged = r.converged;
  out.domain_failure = r.status == SolveStatus::kDomainViolation || r.status == SolveStatus::kLQFailure;
  out.states = std::move(r.states);
  if (!out.domain_failure) out.expected = out.states[1];
  return out;
}

UpdateReport measurement_update(ParticleSet& particles, const std::vector<Vector>& expected, const Vector& y,
                                const Matrix& sigma, const std::vector<int>& idx) {
  if (expected.size() != particles.size()) throw std::invalid_argument("measurement_update: size mismatch");
  const int n = static_cast<int>(y.size());
  std::vector<int> sel = idx;
  if (sel.empty())
    for (int i = 0; i < n; ++i) sel.push_back(i);
  const int d = static_cast<int>(sel.size());
  Matrix S(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) S(i, j) = sigma(sel[i], sel[j]);
  const Eigen::LLT<Matrix> llt(S);

  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> loglik(particles.size(), neg_inf);
  double best = neg_inf;
  for (std::size_t k = 0; k < particles.size(); ++k) {
    if (expected[k].size() != n) continue;
    Vector r(d);
    for (int i = 0; i < d; ++i) r(i) = y(sel[i]) - expected[k](sel[i]);
    const double l = -0.5 * r.dot(llt.solve(r));
    if (std::isfinite(l)) loglik[k] = l;
    best = std::max(best, loglik[k]);
  }

  UpdateReport report;
  double total = 0.0;
  if (std::isfinite(best)) {
    for (std::size_t k = 0; k < particles.size(); ++k) {
      particles[k].weight *= std::max(std::exp(loglik[k] - best), kLikelihoodFloor);
      total += particles[k].weight;
    }
  }
  // No particle produced a usable likelihood, or every weight underflowed.
  if (!(total > 0.0) || !std::isfinite(total)) {
    report.uniform_fallback = true;
    for (auto& p : particles) p.weight = 1.0 / particles.size();
    return report;
  }
  for (auto& p : particles) p.weight /= total;
  return report;
}

double effective_sample_size(const ParticleSet& particles) {
  double s = 0.0;
  for (const auto& p : particles) s += p.weight * p.weight;
  return 1.0 / s;
}

void resample(ParticleSet& particles, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("resample: offset must be in [0, 1)");
  const std::size_t N = particles.size();
  ParticleSet out;
  out.reserve(N);
  double cum = particles[0].weight;
  std::size_t j = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double pos = (u + static_cast<double>(i)) / static_cast<double>(N);
    while (pos >= cum && j + 1 < N) cum += particles[++j].weight;
    out.push_back(particles[j]);
    out.back().weight = 1.0 / static_cast<double>(N);
  }
  particles = std::move(out);
}

void resample(ParticleSet& particles, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  resample(particles, unif(rng));
}

std::array<double, 2> leadership_belief(const ParticleSet& particles) {
  double s1 = 0.0, s2 = 0.0;
  for (const auto& p : particles) (p.leader == Agent::kOne ? s1 : s2) += p.weight;
  // Normalizing by the total makes a unanimous set report exactly 1.
  const double b1 = s1 + s2 > 0.0 ? std::clamp(s1 / (s1 + s2), 0.0, 1.0) : 0.5;
  return {b1, 1.0 - b1};
}

void parallel_for(int n, int workers, const std::function<void(int)>& body) {
  const int w = std::max(1, std::min(workers, n));
  if (w == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < w - 1; ++k) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

void diagnostics(const ParticleSet& particles, FilterStep& step) {
  const int n = static_cast<int>(particles[0].state.size());
  step.belief = leadership_belief(particles);
  step.mean_state = Vector::Zero(n);
  for (const auto& p : particles) step.mean_state += p.weight * p.state;
  step.state_variance = Vector::Zero(n);
  for (const auto& p : particles) step.state_variance += p.weight * (p.state - step.mean_state).cwiseAbs2();
}

}  // namespace

FilterResult run_filter(const MeasurementModel& mm, const std::vector<Measurement>& ms, const FilterConfig& cfg,
                        std::uint64_t seed, const FilterHooks& hooks) {
  if (!mm.model || !mm.costs[0] || !mm.costs[1]) throw std::invalid_argument("run_filter: incomplete game");
  const DynamicsModel& model = *mm.model;
  const int n = model.state_dim();
  cfg.validate(n);
  if (ms.empty()) throw std::invalid_argument("run_filter: no measurements");
  for (const auto& m : ms)
    if (m.y.size() != n || m.controls[0].size() != model.control_dim(Agent::kOne) ||
        m.controls[1].size() != model.control_dim(Agent::kTwo))
      throw std::invalid_argument("run_filter: measurement dimensions do not match the model");

  const GaussianSampler init_noise(cfg.measurement_noise), process_noise(cfg.process_noise);
  const int N = cfg.num_particles;
  ParticleSet particles(N);
  for (int k = 0; k < N; ++k) {
    std::mt19937_64 rng(stream_seed(seed, k, 0));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Particle& p = particles[k];
    p.state = ms[0].y + init_noise(rng);
    p.previous = p.state;
    p.leader = unif(rng) < cfg.prior_leader_one ? Agent::kOne : Agent::kTwo;
    p.previous_leader = p.leader;
    p.weight = 1.0 / N;
  }

  FilterResult result;
  {
    FilterStep s;
    s.t = 0;
    s.ess = effective_sample_size(particles);
    diagnostics(particles, s);
    result.steps.push_back(s);
    if (hooks.on_step) hooks.on_step(s, particles, {});
  }

  std::vector<MeasurementTrajectory> trajs(N);
  std::vector<Vector> expected(N);
  for (int t = 1; t < static_cast<int>(ms.size()); ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    FilterStep s;
    s.t = t;
    propagate(particles, ms[t - 1].controls, model, process_noise, cfg.p_trans, seed, t);
    const JointControls nominal = get_nominal_trajectory(cfg.horizon, &ms[t - 1].controls,
                                                         model.control_dim(Agent::kOne), model.control_dim(Agent::kTwo));
    parallel_for(N, cfg.workers, [&](int k) { trajs[k] = expected_measurement(particles[k], mm, nominal, cfg); });
    for (int k = 0; k < N; ++k) {
      expected[k] = trajs[k].expected;
      s.nonconverged_solves += !trajs[k].converged;
      s.domain_failures += trajs[k].domain_failure;
    }
    s.uniform_fallback = measurement_update(particles, expected, ms[t].y, cfg.measurement_noise,
                                            cfg.compare_indices).uniform_fallback;
    s.ess = effective_sample_size(particles);
    if (s.ess < cfg.resample_fraction * N) {
      std::mt19937_64 rng(stream_seed(seed, kResampleStream, t));
      resample(particles, rng);
      s.resampled = true;
    }
    diagnostics(particles, s);
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.steps.push_back(s);
    if (hooks.on_step) hooks.on_step(s, particles, trajs);
  }
  return result;
}

}  // namespace stackelberg
