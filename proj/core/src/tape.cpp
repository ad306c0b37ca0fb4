#include "bodyfit/ad/tape.hpp"

#include <cmath>

namespace bodyfit::ad {

namespace {

double stable_softplus(double x) {
    // log(1 + e^x) without overflow on large |x|
    return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

}  // namespace

bool Gradients::all_finite() const {
    for (double g : adj_)
        if (!std::isfinite(g)) return false;
    return true;
}

void Tape::clear() {
    val_.clear();
    op_.clear();
    aux_.clear();
    arg_begin_.clear();
    arg_count_.clear();
    args_.clear();
}

void Tape::check_owns(Value v) const {
    if (v.tape() != this) throw ContractViolation("ad: value belongs to a different tape");
}

Value Tape::push0(Op op, double v) {
    val_.push_back(v);
    op_.push_back(op);
    aux_.push_back(0.0);
    arg_begin_.push_back(static_cast<std::uint32_t>(args_.size()));
    arg_count_.push_back(0);
    return Value(this, static_cast<std::uint32_t>(val_.size() - 1));
}

Value Tape::binary(Op op, Value a, Value b) {
    check_owns(a);
    check_owns(b);
    const double x = val_[a.id()], y = val_[b.id()];
    double v = 0.0;
    switch (op) {
        case Op::Add: v = x + y; break;
        case Op::Sub: v = x - y; break;
        case Op::Mul: v = x * y; break;
        case Op::Div: v = x / y; break;
        default: throw ContractViolation("ad: not a binary op");
    }
    val_.push_back(v);
    op_.push_back(op);
    aux_.push_back(0.0);
    arg_begin_.push_back(static_cast<std::uint32_t>(args_.size()));
    arg_count_.push_back(2);
    args_.push_back(a.id());
    args_.push_back(b.id());
    return Value(this, static_cast<std::uint32_t>(val_.size() - 1));
}

Value Tape::unary(Op op, Value a, double aux) {
    check_owns(a);
    const double x = val_[a.id()];
    double v = 0.0;
    switch (op) {
        case Op::Neg: v = -x; break;
        case Op::AddC: v = x + aux; break;
        case Op::MulC: v = x * aux; break;
        case Op::Exp: v = std::exp(x); break;
        case Op::Log: v = std::log(x); break;
        case Op::Sin: v = std::sin(x); break;
        case Op::Cos: v = std::cos(x); break;
        case Op::Sqrt: v = std::sqrt(x); break;
        case Op::Sigmoid: v = 1.0 / (1.0 + std::exp(-x)); break;
        case Op::Softplus: v = stable_softplus(x); break;
        case Op::LeakyRelu: v = x > 0.0 ? x : aux * x; break;
        default: throw ContractViolation("ad: not a unary op");
    }
    val_.push_back(v);
    op_.push_back(op);
    aux_.push_back(aux);
    arg_begin_.push_back(static_cast<std::uint32_t>(args_.size()));
    arg_count_.push_back(1);
    args_.push_back(a.id());
    return Value(this, static_cast<std::uint32_t>(val_.size() - 1));
}

Value Tape::sum(std::span<const Value> xs) {
    double v = 0.0;
    const auto begin = static_cast<std::uint32_t>(args_.size());
    for (Value x : xs) {
        check_owns(x);
        v += val_[x.id()];
        args_.push_back(x.id());
    }
    val_.push_back(v);
    op_.push_back(Op::Sum);
    aux_.push_back(0.0);
    arg_begin_.push_back(begin);
    arg_count_.push_back(static_cast<std::uint32_t>(xs.size()));
    return Value(this, static_cast<std::uint32_t>(val_.size() - 1));
}

Value Tape::dot(std::span<const Value> a, std::span<const Value> b) {
    double v = 0.0;
    const auto begin = static_cast<std::uint32_t>(args_.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        check_owns(a[i]);
        check_owns(b[i]);
        v += val_[a[i].id()] * val_[b[i].id()];
        args_.push_back(a[i].id());
        args_.push_back(b[i].id());
    }
    val_.push_back(v);
    op_.push_back(Op::Dot);
    aux_.push_back(0.0);
    arg_begin_.push_back(begin);
    arg_count_.push_back(static_cast<std::uint32_t>(2 * a.size()));
    return Value(this, static_cast<std::uint32_t>(val_.size() - 1));
}

void Tape::set_value(Value v, double x) {
    check_owns(v);
    const Op op = op_[v.id()];
    if (op != Op::Leaf && op != Op::Const)
        throw ContractViolation("ad: set_value on a non-leaf node");
    val_[v.id()] = x;
}

double Tape::eval_node(std::uint32_t i) const {
    const std::uint32_t* a = args_.data() + arg_begin_[i];
    switch (op_[i]) {
        case Op::Leaf:
        case Op::Const: return val_[i];
        case Op::Add: return val_[a[0]] + val_[a[1]];
        case Op::Sub: return val_[a[0]] - val_[a[1]];
        case Op::Mul: return val_[a[0]] * val_[a[1]];
        case Op::Div: return val_[a[0]] / val_[a[1]];
        case Op::Neg: return -val_[a[0]];
        case Op::AddC: return val_[a[0]] + aux_[i];
        case Op::MulC: return val_[a[0]] * aux_[i];
        case Op::Exp: return std::exp(val_[a[0]]);
        case Op::Log: return std::log(val_[a[0]]);
        case Op::Sin: return std::sin(val_[a[0]]);
        case Op::Cos: return std::cos(val_[a[0]]);
        case Op::Sqrt: return std::sqrt(val_[a[0]]);
        case Op::Sigmoid: return 1.0 / (1.0 + std::exp(-val_[a[0]]));
        case Op::Softplus: return stable_softplus(val_[a[0]]);
        case Op::LeakyRelu: {
            const double x = val_[a[0]];
            return x > 0.0 ? x : aux_[i] * x;
        }
        case Op::Sum: {
            double s = 0.0;
            for (std::uint32_t k = 0; k < arg_count_[i]; ++k) s += val_[a[k]];
            return s;
        }
        case Op::Dot: {
            double s = 0.0;
            for (std::uint32_t k = 0; k < arg_count_[i]; k += 2) s += val_[a[k]] * val_[a[k + 1]];
            return s;
        }
    }
    return 0.0;
}

void Tape::recompute() {
    for (std::uint32_t i = 0; i < val_.size(); ++i) val_[i] = eval_node(i);
}

Gradients Tape::backward(Value root) const {
    check_owns(root);
    Gradients g;
    g.adj_.assign(val_.size(), 0.0);
    g.adj_[root.id()] = 1.0;
    std::vector<double>& adj = g.adj_;
    for (std::uint32_t i = root.id() + 1; i-- > 0;) {
        const double gi = adj[i];
        if (gi == 0.0) continue;
        const std::uint32_t* a = args_.data() + arg_begin_[i];
        switch (op_[i]) {
            case Op::Leaf:
            case Op::Const: break;
            case Op::Add:
                adj[a[0]] += gi;
                adj[a[1]] += gi;
                break;
            case Op::Sub:
                adj[a[0]] += gi;
                adj[a[1]] -= gi;
                break;
            case Op::Mul:
                adj[a[0]] += gi * val_[a[1]];
                adj[a[1]] += gi * val_[a[0]];
                break;
            case Op::Div: {
                const double y = val_[a[1]];
                adj[a[0]] += gi / y;
                adj[a[1]] -= gi * val_[a[0]] / (y * y);
                break;
            }
            case Op::Neg: adj[a[0]] -= gi; break;
            case Op::AddC: adj[a[0]] += gi; break;
            case Op::MulC: adj[a[0]] += gi * aux_[i]; break;
            case Op::Exp: adj[a[0]] += gi * val_[i]; break;
            case Op::Log: adj[a[0]] += gi / val_[a[0]]; break;
            case Op::Sin: adj[a[0]] += gi * std::cos(val_[a[0]]); break;
            case Op::Cos: adj[a[0]] -= gi * std::sin(val_[a[0]]); break;
            case Op::Sqrt: adj[a[0]] += gi * 0.5 / val_[i]; break;
            case Op::Sigmoid: adj[a[0]] += gi * val_[i] * (1.0 - val_[i]); break;
            case Op::Softplus: adj[a[0]] += gi / (1.0 + std::exp(-val_[a[0]])); break;
            case Op::LeakyRelu: adj[a[0]] += gi * (val_[a[0]] > 0.0 ? 1.0 : aux_[i]); break;
            case Op::Sum:
                for (std::uint32_t k = 0; k < arg_count_[i]; ++k) adj[a[k]] += gi;
                break;
            case Op::Dot:
                for (std::uint32_t k = 0; k < arg_count_[i]; k += 2) {
                    adj[a[k]] += gi * val_[a[k + 1]];
                    adj[a[k + 1]] += gi * val_[a[k]];
                }
                break;
        }
    }
    return g;
}

}  // namespace bodyfit::ad
