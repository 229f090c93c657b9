// Copyright 2026 The RMP2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rmp2/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>
#include <random>
#include <stdexcept>

#include "rmp2/naive.h"
#include "rmp2/rmp2.h"
#include "rmp2/rmpflow.h"

namespace rmp2 {

const char* BenchAlgorithmName(BenchAlgorithm a) {
  switch (a) {
    case BenchAlgorithm::kRmp2: return "rmp2";
    case BenchAlgorithm::kNaive: return "naive";
    case BenchAlgorithm::kNaiveMemorySafe: return "naive_memory_safe";
    case BenchAlgorithm::kRmpflow: return "rmpflow";
  }
  return "unknown";
}

BenchAlgorithm ParseBenchAlgorithm(const std::string& name) {
  for (BenchAlgorithm a : {BenchAlgorithm::kRmp2, BenchAlgorithm::kNaive,
                           BenchAlgorithm::kNaiveMemorySafe, BenchAlgorithm::kRmpflow}) {
    if (name == BenchAlgorithmName(a)) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + name +
                              "' (rmp2, naive, naive_memory_safe, rmpflow)");
}

void BenchSpec::Validate() const {
  if (lengths.empty()) throw std::invalid_argument("bench: no lengths");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1) throw std::invalid_argument("bench: lengths must be >= 1");
    if (i > 0 && lengths[i] <= lengths[i - 1]) {
      throw std::invalid_argument("bench: lengths must be strictly ascending");
    }
  }
  if (branching < 1 || dim < 1) throw std::invalid_argument("bench: b and d must be >= 1");
  if (trials < 1) throw std::invalid_argument("bench: trials must be >= 1");
  if (algorithms.empty()) throw std::invalid_argument("bench: no algorithms");
  if (warmup < 0) throw std::invalid_argument("bench: warmup must be >= 0");
  if (!(min_batch_seconds >= 0.0)) throw std::invalid_argument("bench: bad min_batch_seconds");
}

BenchProblem MakeBenchProblem(int length, int branching, int dim, std::uint64_t seed) {
  BenchProblem p;
  p.graph = ChainBenchmarkGraph(length, branching, dim, seed);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
  for (int leaf : p.graph.leaves()) p.rmps.push_back({leaf, ConstantRmp(identity, zero)});
  return p;
}

namespace {

ConfigState Origin(int dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
}

// Keeps a recorded tape alive and refreshes it on new inputs.
struct RecordedEvaluator {
  ad::Tape tape;
  RecordedPolicy rec;

  Eigen::VectorXd operator()(const ConfigState& s) {
    tape.SetValue(rec.q, s.q);
    tape.SetValue(rec.qd, s.qd);
    tape.Replay();
    return Resolve({rec.force.vector(), rec.metric.value()});
  }
};

}  // namespace

PolicyEvaluator MakeEvaluator(const BenchProblem& problem, BenchAlgorithm algorithm,
                              bool replay) {
  const int d = problem.graph.root_dim();
  if (algorithm == BenchAlgorithm::kRmpflow) {
    auto tree = std::make_shared<RmpTree>(problem.graph, problem.rmps);
    return [tree](const ConfigState& s) { return RmpflowPolicy(*tree, s).accel; };
  }
  if (replay) {
    auto ev = std::make_shared<RecordedEvaluator>();
    if (algorithm == BenchAlgorithm::kRmp2) {
      ev->rec = RecordRmp2(ev->tape, problem.graph, problem.rmps, Origin(d), true);
    } else {
      const NaiveVariant v = algorithm == BenchAlgorithm::kNaive ? NaiveVariant::kDirect
                                                                 : NaiveVariant::kMemorySafe;
      ev->rec = RecordNaive(ev->tape, problem.graph, problem.rmps, Origin(d), v, true);
    }
    return [ev](const ConfigState& s) { return (*ev)(s); };
  }
  const BenchProblem* p = &problem;
  switch (algorithm) {
    case BenchAlgorithm::kRmp2:
      return [p](const ConfigState& s) { return Rmp2Policy(p->graph, p->rmps, s).accel; };
    case BenchAlgorithm::kNaive:
      return [p](const ConfigState& s) { return NaivePolicy(p->graph, p->rmps, s).accel; };
    default:
      return [p](const ConfigState& s) {
        return NaivePolicyMemorySafe(p->graph, p->rmps, s).accel;
      };
  }
}

std::size_t TapeFootprint(const BenchProblem& problem, BenchAlgorithm algorithm) {
  const ConfigState s = Origin(problem.graph.root_dim());
  switch (algorithm) {
    case BenchAlgorithm::kRmp2: return Rmp2Policy(problem.graph, problem.rmps, s).tape_nodes;
    case BenchAlgorithm::kNaive: return NaivePolicy(problem.graph, problem.rmps, s).tape_nodes;
    case BenchAlgorithm::kNaiveMemorySafe:
      return NaivePolicyMemorySafe(problem.graph, problem.rmps, s).tape_nodes;
    case BenchAlgorithm::kRmpflow: {
      RmpTree tree(problem.graph, problem.rmps);
      return RmpflowPolicy(tree, s).tape_nodes;
    }
  }
  return 0;
}

namespace {

using Clock = std::chrono::steady_clock;

ConfigState RandomState(std::mt19937_64& rng, int dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ConfigState s{Eigen::VectorXd(dim), Eigen::VectorXd(dim)};
  for (int i = 0; i < dim; ++i) s.q(i) = u(rng);
  for (int i = 0; i < dim; ++i) s.qd(i) = u(rng);
  return s;
}

double Seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

BenchRow TimeAlgorithm(const BenchSpec& spec, const BenchProblem& problem,
                       BenchAlgorithm algorithm, int length, std::mt19937_64& rng) {
  const int d = spec.dim;
  PolicyEvaluator eval = MakeEvaluator(problem, algorithm, spec.replay);
  volatile double sink = 0.0;

  for (int i = 0; i < spec.warmup; ++i) sink = sink + eval(RandomState(rng, d))(0);

  // Grow the batch until it clears the timer floor.
  int reps = 1;
  std::vector<ConfigState> inputs;
  for (;;) {
    inputs.clear();
    for (int i = 0; i < reps; ++i) inputs.push_back(RandomState(rng, d));
    const auto t0 = Clock::now();
    for (const ConfigState& s : inputs) sink = sink + eval(s)(0);
    if (Seconds(Clock::now() - t0) >= spec.min_batch_seconds || reps >= (1 << 20)) break;
    reps *= 2;
  }

  std::vector<double> times;
  times.reserve(spec.trials);
  for (int t = 0; t < spec.trials; ++t) {
    inputs.clear();
    for (int i = 0; i < reps; ++i) inputs.push_back(RandomState(rng, d));
    const auto t0 = Clock::now();
    for (const ConfigState& s : inputs) sink = sink + eval(s)(0);
    times.push_back(Seconds(Clock::now() - t0) / reps);
  }

  BenchRow row;
  row.algorithm = algorithm;
  row.length = length;
  row.nodes = static_cast<int>(problem.graph.node_count());
  row.trials = spec.trials;
  row.repetitions = reps;
  double sum = 0.0;
  for (double t : times) sum += t;
  row.mean_s = sum / spec.trials;
  double var = 0.0;
  for (double t : times) var += (t - row.mean_s) * (t - row.mean_s);
  row.std_s = spec.trials > 1 ? std::sqrt(var / (spec.trials - 1)) : 0.0;
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  row.median_s = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
  return row;
}

}  // namespace

BenchResult RunBenchmark(const BenchSpec& spec, const BenchProgress& progress) {
  spec.Validate();
  BenchResult result;
  std::mt19937_64 rng(spec.seed);
  for (int length : spec.lengths) {
    const BenchProblem problem = MakeBenchProblem(length, spec.branching, spec.dim, spec.seed);
    for (BenchAlgorithm algo : spec.algorithms) {
      result.rows.push_back(TimeAlgorithm(spec, problem, algo, length, rng));
      if (progress) progress(result.rows.back());
    }
  }
  if (spec.lengths.size() >= 2) {
    for (BenchAlgorithm algo : spec.algorithms) {
      std::vector<std::pair<double, double>> points;
      for (const BenchRow& r : result.rows) {
        if (r.algorithm == algo) points.emplace_back(r.nodes, r.mean_s);
      }
      result.fits.push_back({algo, FitLogLogSlope(points)});
    }
  }
  return result;
}

LogLogFit FitLogLogSlope(std::span<const std::pair<double, double>> points) {
  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("log-log fit: values must be > 0");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx, dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (points.size() < 2 || sxx == 0.0) {
    throw std::invalid_argument("log-log fit: need two distinct x values");
  }
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  return fit;
}

void WriteBenchCsv(std::ostream& out, const BenchResult& result) {
  out << "algorithm,length,N,trials,mean_s,std_s,median_s\n";
  const auto old = out.precision(9);
  for (const BenchRow& r : result.rows) {
    out << BenchAlgorithmName(r.algorithm) << ',' << r.length << ',' << r.nodes << ','
        << r.trials << ',' << r.mean_s << ',' << r.std_s << ',' << r.median_s << '\n';
  }
  out.precision(old);
}

void WriteGnuplotData(std::ostream& out, const BenchResult& result) {
  std::vector<BenchAlgorithm> seen;
  for (const BenchRow& r : result.rows) {
    if (std::find(seen.begin(), seen.end(), r.algorithm) == seen.end()) {
      seen.push_back(r.algorithm);
    }
  }
  const auto old = out.precision(9);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (i > 0) out << "\n\n";
    out << "# " << BenchAlgorithmName(seen[i]) << ": N mean_s std_s median_s\n";
    for (const BenchRow& r : result.rows) {
      if (r.algorithm == seen[i]) {
        out << r.nodes << ' ' << r.mean_s << ' ' << r.std_s << ' ' << r.median_s << '\n';
      }
    }
  }
  out.precision(old);
}

}  // namespace rmp2
