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

// Reverse-mode automatic differentiation on a dynamic tape.
//
// Every operation on a `Var` is recorded eagerly on the owning `Tape`: the
// primal value is computed immediately and the node remembers its parents.
// `Gradient` runs one reverse sweep. With `create_graph = true` the sweep
// itself is recorded with the same primitives, so its result can be
// differentiated again; `Jvp` relies on this (two nested sweeps with an
// all-ones dummy vector, no Jacobian is ever formed).
//
// Values are dense `Eigen::MatrixXd`. Vectors are n x 1 and scalars are any
// value with a single element. There is no broadcasting: scalar-times-tensor
// goes through `scalar_mul`, everything else requires identical shapes.

#ifndef RMP2_AUTODIFF_H_
#define RMP2_AUTODIFF_H_

#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rmp2::ad {

using Tensor = Eigen::MatrixXd;
using NodeId = std::int32_t;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Op : std::uint8_t {
  kInput,
  kCopy,
  kAdd,
  kSub,
  kNeg,
  kScale,      // x * c
  kShift,      // x + c
  kScalarMul,  // s * x, s has one element
  kMul,        // elementwise
  kMatVec,
  kMatMul,
  kTranspose,
  kOuter,
  kDot,  // sum of elementwise products
  kSum,
  kBroadcast,
  kConcat,
  kSlice,
  kPad,
  kSin,
  kCos,
  kTanh,
  kExp,
  kLog,
  kSquare,
  kSqrt,
  kReciprocal,
  kPower,
  kMaxConst,
  kMinConst,
  kAbs,
  kStep,  // indicator / sign, zero derivative
  kSolve,
};

const char* OpName(Op op);

// Modes of kStep.
enum class StepMode : std::int32_t { kGreater = 0, kLess = 1, kSign = 2 };

struct NodeHeader {
  Op op = Op::kInput;
  std::uint8_t rank = 1;
  NodeId parent0 = -1;
  NodeId parent1 = -1;
  double c = 0.0;
  std::int32_t i0 = 0;
  std::int32_t i1 = 0;
};

class Tape;

// Handle to one node of a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  Tape& tape() const;
  NodeId id() const { return id_; }

  const Tensor& value() const;
  Eigen::VectorXd vector() const;  // value as a column vector (copies)
  double scalar() const;           // requires a single element
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Eigen::Index size() const { return value().size(); }
  // {} for scalars, {n} for vectors, {r, c} for matrices.
  std::vector<Eigen::Index> shape() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = -1;
};

struct SweepStats {
  std::int64_t sweeps = 0;
  std::int64_t nodes_visited = 0;  // cumulative
  std::int64_t last_visited = 0;   // visits in the most recent sweep
  std::int64_t last_segment = 0;   // segment length of the most recent sweep
};

// Append-only record of a computation. Not copyable or movable since Vars
// refer to it by address. Values live in a deque so references returned by
// `value` stay valid while more nodes are recorded.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf nodes. Non-finite entries are rejected with DomainError.
  Var input(const Eigen::VectorXd& value);
  Var input_matrix(const Eigen::MatrixXd& value);
  Var scalar(double value);

  std::size_t size() const { return headers_.size(); }
  const NodeHeader& header(NodeId id) const { return headers_[id]; }
  const Tensor& value(NodeId id) const { return values_[id]; }

  // Overwrites an input node; call `Replay` afterwards to refresh every
  // dependent value. Shape must match.
  void SetValue(const Var& input, const Tensor& value);
  // Recomputes every non-input node in recording order. The recorded
  // structure is reused as is, so value-dependent choices made during
  // recording (which parent a sweep skipped) are not revisited.
  void Replay();

  const SweepStats& stats() const { return stats_; }
  SweepStats& mutable_stats() { return stats_; }

  // Low-level: record a node whose value is computed from its parents.
  Var Record(const NodeHeader& header);

 private:
  Var Push(const NodeHeader& header, Tensor value);

  std::deque<NodeHeader> headers_;
  std::deque<Tensor> values_;
  SweepStats stats_;
};

// Forward evaluation of one primitive; shared by recording and replay.
Tensor EvaluatePrimitive(const NodeHeader& h, const Tensor* a, const Tensor* b);

// ---------------------------------------------------------------------------
// Primitives. All operands must live on the same tape.

Var copy(const Var& x);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var shift(const Var& a, double c);
Var scalar_mul(const Var& s, const Var& a);
Var mul(const Var& a, const Var& b);
Var matvec(const Var& m, const Var& x);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& m);
Var outer(const Var& u, const Var& v);
Var dot(const Var& a, const Var& b);
Var sum(const Var& a);
Var broadcast(const Var& s, Eigen::Index rows, Eigen::Index cols);
Var concat(const Var& a, const Var& b);
Var concat(std::span<const Var> parts);
Var slice(const Var& a, Eigen::Index start, Eigen::Index length);
Var pad(const Var& a, Eigen::Index start, Eigen::Index total);
Var sin(const Var& x);
Var cos(const Var& x);
Var tanh(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var square(const Var& x);
Var sqrt(const Var& x);
Var reciprocal(const Var& x);
Var power(const Var& x, double p);
Var max_const(const Var& x, double c);
Var min_const(const Var& x, double c);
Var abs(const Var& x);
Var step(const Var& x, double c, StepMode mode);
// Solves m * y = f with a full-pivot LU; m must be square and invertible.
Var solve(const Var& m, const Var& f);

// Composites.
Var div(const Var& a, const Var& b);  // scalar divisor broadcasts
Var squared_norm(const Var& a);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator*(const Var& a, const Var& b);  // elementwise, or scalar * tensor
Var operator*(const Var& a, double c);
Var operator*(double c, const Var& a);
Var operator+(const Var& a, double c);
Var operator+(double c, const Var& a);
Var operator-(const Var& a, double c);
Var operator-(double c, const Var& a);
Var operator/(const Var& a, const Var& b);
Var operator/(const Var& a, double c);

// ---------------------------------------------------------------------------
// Differentiation oracles.

// d s / d u for a single-element `s`. Zeros if `u` does not influence `s`.
Var Gradient(const Var& s, const Var& u, bool create_graph = false);

// Gradients with respect to several inputs in one reverse sweep.
std::vector<Var> Gradients(const Var& s, std::span<const Var> wrt,
                           bool create_graph = false);

// Vector-Jacobian product seedᵀ (d v / d u), one sweep.
Var Backward(const Var& v, const Tensor& seed, const Var& u,
             bool create_graph = false);

// Jacobian of a vector `v` (m) with respect to a vector `u` (n) as an m x n
// matrix, one one-hot seeded sweep per row.
Var Jacobian(const Var& v, const Var& u, bool create_graph = false);

// (d v / d u) w by reverse accumulation: with a tracked all-ones dummy λ,
// g = ∇_u(λᵀv) is recorded, then ∇_λ(gᵀw) = J w.
Var Jvp(const Var& v, const Var& u, const Var& w, bool create_graph = false);
Var Jvp(const Var& v, const Var& u, const Eigen::VectorXd& w,
        bool create_graph = false);
// Same for a set of outputs sharing one pair of sweeps.
std::vector<Var> Jvp(std::span<const Var> vs, const Var& u, const Var& w,
                     bool create_graph = false);

}  // namespace rmp2::ad

#endif  // RMP2_AUTODIFF_H_
