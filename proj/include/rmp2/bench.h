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

// Runtime scaling of the policy algorithms on chain benchmark graphs.

#ifndef RMP2_BENCH_H_
#define RMP2_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rmp2/policy.h"
#include "rmp2/taskmaps.h"

namespace rmp2 {

enum class BenchAlgorithm { kRmp2, kNaive, kNaiveMemorySafe, kRmpflow };
const char* BenchAlgorithmName(BenchAlgorithm a);
BenchAlgorithm ParseBenchAlgorithm(const std::string& name);

struct BenchSpec {
  std::vector<int> lengths = {4, 8, 12, 16, 20, 24, 28, 32, 36};
  int branching = 3;
  int dim = 3;
  int trials = 1000;
  std::vector<BenchAlgorithm> algorithms = {BenchAlgorithm::kRmp2, BenchAlgorithm::kNaive};
  std::uint64_t seed = 0;
  // Record the tape once per length and time Tape::Replay on new inputs.
  // RMPflow builds its per-edge tapes on every call in either mode.
  bool replay = true;
  int warmup = 10;
  // Evaluations are batched until one timed batch lasts at least this long.
  double min_batch_seconds = 2e-4;

  // Throws std::invalid_argument.
  void Validate() const;
};

struct BenchRow {
  BenchAlgorithm algorithm;
  int length = 0;
  int nodes = 0;  // N = 1 + (b + 1) l
  int trials = 0;
  int repetitions = 1;  // evaluations per timed batch
  double mean_s = 0.0;
  double std_s = 0.0;
  double median_s = 0.0;
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

struct AlgorithmFit {
  BenchAlgorithm algorithm;
  LogLogFit fit;  // log mean_s against log N
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<AlgorithmFit> fits;
};

// Chain graph with a constant RMP (M = I, a = 0) on every leaf.
struct BenchProblem {
  TaskGraph graph{1};
  std::vector<RmpBinding> rmps;
};
BenchProblem MakeBenchProblem(int length, int branching, int dim, std::uint64_t seed);

// Callable evaluating the policy at a new state, prepared once per graph.
using PolicyEvaluator = std::function<Eigen::VectorXd(const ConfigState&)>;
PolicyEvaluator MakeEvaluator(const BenchProblem& problem, BenchAlgorithm algorithm,
                              bool replay);

// Tape nodes recorded by one dynamic evaluation.
std::size_t TapeFootprint(const BenchProblem& problem, BenchAlgorithm algorithm);

// Called after each (algorithm, length) row.
using BenchProgress = std::function<void(const BenchRow&)>;
BenchResult RunBenchmark(const BenchSpec& spec, const BenchProgress& progress = {});

// Ordinary least squares on (log x, log y). Needs two distinct positive x.
LogLogFit FitLogLogSlope(std::span<const std::pair<double, double>> points);

// algorithm,length,N,trials,mean_s,std_s,median_s
void WriteBenchCsv(std::ostream& out, const BenchResult& result);
// One whitespace-separated block "N mean_s std_s median_s" per algorithm,
// blocks separated by two blank lines.
void WriteGnuplotData(std::ostream& out, const BenchResult& result);

}  // namespace rmp2

#endif  // RMP2_BENCH_H_
