#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tsdiff/common/errors.hpp"

namespace tsdiff {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
class Graph;

// Named trainable tensor. Lives outside any graph; gradients accumulate
// across graphs (and batch shards) until the optimizer consumes them.
template <typename S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

// Owns parameters with stable addresses and unique names.
template <typename S>
class ParamStore {
 public:
  Param<S>& add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    for (const auto& p : params_)
      if (p->name == name) throw std::logic_error("duplicate parameter name: " + name);
    auto p = std::make_unique<Param<S>>();
    p->name = name;
    p->value.setZero(rows, cols);
    p->grad.setZero(rows, cols);
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Param<S>* find(const std::string& name) {
    for (auto& p : params_)
      if (p->name == name) return p.get();
    return nullptr;
  }

  std::size_t size() const { return params_.size(); }
  Param<S>& operator[](std::size_t i) { return *params_[i]; }
  const Param<S>& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grads() {
    for (auto& p : params_) p->zero_grad();
  }

  Eigen::Index total_size() const {
    Eigen::Index n = 0;
    for (const auto& p : params_) n += p->size();
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Param<S>>> params_;
};

// Handle to a node in a Graph.
template <typename S>
struct Var {
  Graph<S>* g = nullptr;
  int id = -1;

  bool valid() const { return g != nullptr && id >= 0; }
  const Mat<S>& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Define-by-run reverse-mode tape over dense matrices. Creation order is a
// topological order, so backward() simply walks nodes in reverse. Values
// and gradients are released as backward consumes them, keeping peak
// memory near the forward footprint.
template <typename S>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph<S>&, int)>;

  explicit Graph(bool record = true) : record_(record) {}

  bool recording() const { return record_; }

  Var<S> input(Mat<S> v) {
    nodes_.push_back(Node{std::move(v), {}, nullptr, nullptr});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  Var<S> param(Param<S>& p) {
    nodes_.push_back(Node{p.value, {}, nullptr, record_ ? &p : nullptr});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  Var<S> make(Mat<S> value, BackwardFn backward) {
    nodes_.push_back(
        Node{std::move(value), {}, record_ ? std::move(backward) : nullptr, nullptr});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  const Mat<S>& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Mat<S>& value(Var<S> v) const { return value(v.id); }

  // Gradient accumulation used by op backward closures.
  template <typename Expr>
  void acc_grad(int id, const Expr& e) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
    n.grad += e;
  }

  const Mat<S>& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool has_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad.size() != 0; }

  // Runs reverse-mode accumulation seeded with d(out)=seed. After this call
  // the graph's values are released; build a fresh graph for the next pass.
  void backward(Var<S> out, const Mat<S>& seed) {
    if (!record_) throw std::logic_error("backward on a non-recording graph");
    if (out.g != this) throw std::logic_error("backward: var from another graph");
    acc_grad(out.id, seed);
    for (int i = out.id; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (n.grad.size() != 0) {
        if (n.backward) n.backward(*this, i);
        if (n.param) n.param->grad += n.grad;
      }
      n.value.resize(0, 0);
      n.grad.resize(0, 0);
      n.backward = nullptr;
    }
  }

  // Scalar-loss entry point.
  void backward(Var<S> loss) {
    if (loss.value().rows() != 1 || loss.value().cols() != 1)
      throw std::logic_error("backward: loss must be 1x1");
    Mat<S> seed(1, 1);
    seed(0, 0) = S(1);
    backward(loss, seed);
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Mat<S> value;
    Mat<S> grad;
    BackwardFn backward;
    Param<S>* param;
  };
  std::vector<Node> nodes_;
  bool record_;
};

template <typename S>
const Mat<S>& Var<S>::value() const {
  return g->value(id);
}

}  // namespace tsdiff
