#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bodyfit/errors.hpp"

namespace bodyfit::ad {

class Tape;

// Handle to one scalar node on a tape. Cheap to copy; invalid until assigned
// from a Tape factory or an operator.
class Value {
public:
    Value() = default;
    double value() const;
    std::uint32_t id() const { return id_; }
    Tape* tape() const { return tape_; }

private:
    friend class Tape;
    Value(Tape* t, std::uint32_t id) : tape_(t), id_(id) {}
    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

// Adjoints of one backward() sweep, indexed by node handle.
class Gradients {
public:
    double operator[](Value v) const { return adj_[v.id()]; }
    double at_id(std::uint32_t id) const { return adj_[id]; }
    std::size_t size() const { return adj_.size(); }
    bool all_finite() const;

private:
    friend class Tape;
    std::vector<double> adj_;
};

enum class Op : std::uint8_t {
    Leaf,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    AddC,   // x + aux
    MulC,   // x * aux
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Sigmoid,
    Softplus,
    LeakyRelu,  // slope in aux
    Sum,        // n-ary sum, unit partials
    Dot,        // args are [a0,b0,a1,b1,...], value = sum a_i*b_i
};

// Flat arena of scalar nodes recording one forward pass. Argument indices are
// stored; local partials are recomputed from node values during backward, so a
// tape can be forward re-evaluated after set_value() on its leaves.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Value var(double v) { return push0(Op::Leaf, v); }
    Value constant(double v) { return push0(Op::Const, v); }

    std::size_t size() const { return val_.size(); }
    double value(std::uint32_t id) const { return val_[id]; }

    // Drops all nodes, keeps allocated capacity.
    void clear();

    // Leaf/Const payload update; recompute() propagates it forward.
    void set_value(Value v, double x);
    void recompute();

    // Reverse accumulation seeded at root. Root must live on this tape.
    Gradients backward(Value root) const;

    // --- op builders (used by the free operators below) ---
    Value binary(Op op, Value a, Value b);
    Value unary(Op op, Value a, double aux = 0.0);
    Value sum(std::span<const Value> xs);
    Value dot(std::span<const Value> a, std::span<const Value> b);

private:
    Value push0(Op op, double v);
    void check_owns(Value v) const;
    double eval_node(std::uint32_t i) const;

    std::vector<double> val_;
    std::vector<Op> op_;
    std::vector<double> aux_;
    std::vector<std::uint32_t> arg_begin_;
    std::vector<std::uint32_t> arg_count_;
    std::vector<std::uint32_t> args_;
};

inline double Value::value() const {
    if (!tape_) throw ContractViolation("Value::value: unbound handle");
    return tape_->value(id_);
}

// --- arithmetic ---

inline Value operator+(Value a, Value b) { return a.tape()->binary(Op::Add, a, b); }
inline Value operator-(Value a, Value b) { return a.tape()->binary(Op::Sub, a, b); }
inline Value operator*(Value a, Value b) { return a.tape()->binary(Op::Mul, a, b); }
inline Value operator/(Value a, Value b) { return a.tape()->binary(Op::Div, a, b); }
inline Value operator-(Value a) { return a.tape()->unary(Op::Neg, a); }

inline Value operator+(Value a, double c) { return a.tape()->unary(Op::AddC, a, c); }
inline Value operator+(double c, Value a) { return a + c; }
inline Value operator-(Value a, double c) { return a + (-c); }
inline Value operator-(double c, Value a) { return (-a) + c; }
inline Value operator*(Value a, double c) { return a.tape()->unary(Op::MulC, a, c); }
inline Value operator*(double c, Value a) { return a * c; }
inline Value operator/(Value a, double c) { return a * (1.0 / c); }
inline Value operator/(double c, Value a) { return a.tape()->constant(c) / a; }

inline Value& operator+=(Value& a, Value b) { a = a + b; return a; }
inline Value& operator-=(Value& a, Value b) { a = a - b; return a; }
inline Value& operator*=(Value& a, Value b) { a = a * b; return a; }

inline Value exp(Value a) { return a.tape()->unary(Op::Exp, a); }
inline Value log(Value a) { return a.tape()->unary(Op::Log, a); }
inline Value sin(Value a) { return a.tape()->unary(Op::Sin, a); }
inline Value cos(Value a) { return a.tape()->unary(Op::Cos, a); }
inline Value sqrt(Value a) { return a.tape()->unary(Op::Sqrt, a); }
inline Value sigmoid(Value a) { return a.tape()->unary(Op::Sigmoid, a); }
inline Value softplus(Value a) { return a.tape()->unary(Op::Softplus, a); }
inline Value leaky_relu(Value a, double slope) { return a.tape()->unary(Op::LeakyRelu, a, slope); }
inline Value square(Value a) { return a * a; }

inline Value sum(std::span<const Value> xs) {
    if (xs.empty()) throw ContractViolation("ad::sum: empty span");
    return xs.front().tape()->sum(xs);
}

inline Value dot(std::span<const Value> a, std::span<const Value> b) {
    if (a.empty() || a.size() != b.size())
        throw ContractViolation("ad::dot: size mismatch or empty");
    return a.front().tape()->dot(a, b);
}

}  // namespace bodyfit::ad
