#include "noma/tensorcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "noma/error.hpp"
#include "noma/tensorcore/kernels.hpp"

namespace noma::tensor {

void Tape::clear() {
  nodes_.clear();
  values_.clear();
  aux_.clear();
  lists_.clear();
}

Var Tape::push(Node n, std::size_t length) {
  n.offset = values_.size();
  n.length = length;
  values_.resize(values_.size() + length, 0.0);
  nodes_.push_back(n);
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw UsageError("tape: handle does not belong to this recording");
  return nodes_[v.id];
}

std::span<const double> Tape::value(Var v) const {
  const Node& n = node(v);
  return {val(n), n.length};
}

double Tape::scalar(Var v) const {
  const Node& n = node(v);
  if (n.length != 1) throw UsageError("tape: value is not a scalar");
  return *val(n);
}

Var Tape::input(std::span<const double> values) {
  Var out = push({Op::Input}, values.size());
  std::copy(values.begin(), values.end(), val(nodes_.back()));
  return out;
}

Var Tape::param(ParamRef p) {
  Node n{Op::Param};
  n.p1 = p;
  Var out = push(n, p.size());
  auto src = params_->view(p);
  std::copy(src.begin(), src.end(), val(nodes_.back()));
  return out;
}

Var Tape::affine(ParamRef weights, Var x) { return affine(weights, x, ParamRef{kNoParam, 0, 0}); }

Var Tape::affine(ParamRef weights, Var x, ParamRef bias) {
  const Node& in = node(x);
  if (weights.cols != in.length)
    throw UsageError("affine: weight has " + std::to_string(weights.cols) + " columns, input has " +
                     std::to_string(in.length) + " entries");
  const bool has_bias = bias.offset != kNoParam;
  if (has_bias && bias.size() != weights.rows) throw UsageError("affine: bias size mismatch");
  Node n{Op::Affine};
  n.a = x.id;
  n.p1 = weights;
  n.p2 = bias;
  Var out = push(n, weights.rows);
  const Node& o = nodes_.back();
  const double* xv = val(nodes_[x.id]);
  const double* w = params_->flat().data() + weights.offset;
  const double* b = has_bias ? params_->flat().data() + bias.offset : nullptr;
  double* y = val(o);
  for (std::size_t r = 0; r < weights.rows; ++r) {
    const double* wr = w + r * weights.cols;
    double acc = b ? b[r] : 0.0;
    for (std::size_t c = 0; c < weights.cols; ++c) acc += wr[c] * xv[c];
    y[r] = acc;
  }
  return out;
}

Var Tape::add(Var a, Var b) {
  if (node(a).length != node(b).length) throw UsageError("add: length mismatch");
  Node n{Op::Add};
  n.a = a.id;
  n.b = b.id;
  Var out = push(n, nodes_[a.id].length);
  const double* x = val(nodes_[a.id]);
  const double* y = val(nodes_[b.id]);
  double* z = val(nodes_.back());
  for (std::size_t i = 0; i < nodes_.back().length; ++i) z[i] = x[i] + y[i];
  return out;
}

Var Tape::mul(Var a, Var b) {
  if (node(a).length != node(b).length) throw UsageError("mul: length mismatch");
  Node n{Op::Mul};
  n.a = a.id;
  n.b = b.id;
  Var out = push(n, nodes_[a.id].length);
  const double* x = val(nodes_[a.id]);
  const double* y = val(nodes_[b.id]);
  double* z = val(nodes_.back());
  for (std::size_t i = 0; i < nodes_.back().length; ++i) z[i] = x[i] * y[i];
  return out;
}

Var Tape::tanh(Var a) {
  Node n{Op::Tanh};
  n.a = a.id;
  Var out = push(n, node(a).length);
  const double* x = val(nodes_[a.id]);
  double* z = val(nodes_.back());
  for (std::size_t i = 0; i < nodes_.back().length; ++i) z[i] = std::tanh(x[i]);
  return out;
}

Var Tape::sigmoid(Var a) {
  Node n{Op::Sigmoid};
  n.a = a.id;
  Var out = push(n, node(a).length);
  const double* x = val(nodes_[a.id]);
  double* z = val(nodes_.back());
  for (std::size_t i = 0; i < nodes_.back().length; ++i) z[i] = tensor::sigmoid(x[i]);
  return out;
}

Var Tape::sum(Var a) {
  Node n{Op::Sum};
  n.a = a.id;
  const std::size_t len = node(a).length;
  Var out = push(n, 1);
  const double* x = val(nodes_[a.id]);
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) acc += x[i];
  *val(nodes_.back()) = acc;
  return out;
}

Var Tape::slice(Var a, std::size_t offset, std::size_t length) {
  if (offset + length > node(a).length) throw UsageError("slice: out of range");
  Node n{Op::Slice};
  n.a = a.id;
  n.extra = offset;
  Var out = push(n, length);
  const double* x = val(nodes_[a.id]) + offset;
  std::copy(x, x + length, val(nodes_.back()));
  return out;
}

Var Tape::stack(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("stack: nothing to stack");
  const std::size_t part_len = node(parts[0]).length;
  Node n{Op::Stack};
  n.extra = lists_.size();
  n.b = static_cast<std::uint32_t>(parts.size());
  for (Var p : parts) {
    if (node(p).length != part_len) throw UsageError("stack: parts differ in length");
    lists_.push_back(p.id);
  }
  Var out = push(n, part_len * parts.size());
  double* z = val(nodes_.back());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double* x = val(nodes_[parts[i].id]);
    std::copy(x, x + part_len, z + i * part_len);
  }
  return out;
}

Var Tape::add_scalars(std::span<const Var> parts) {
  Node n{Op::AddScalars};
  n.extra = lists_.size();
  n.b = static_cast<std::uint32_t>(parts.size());
  double acc = 0.0;
  for (Var p : parts) {
    if (node(p).length != 1) throw UsageError("add_scalars: part is not a scalar");
    lists_.push_back(p.id);
    acc += *val(nodes_[p.id]);
  }
  Var out = push(n, 1);
  *val(nodes_.back()) = acc;
  return out;
}

Var Tape::lstm(Var x, Var state, ParamRef weights, ParamRef bias) {
  const std::size_t xd = node(x).length;
  const std::size_t two_h = node(state).length;
  const std::size_t hd = two_h / 2;
  if (two_h % 2 != 0 || weights.rows != 4 * hd || weights.cols != xd + hd || bias.size() != 4 * hd)
    throw UsageError("lstm: dimension mismatch (input " + std::to_string(xd) + ", state " +
                     std::to_string(two_h) + ", weights " + std::to_string(weights.rows) + "x" +
                     std::to_string(weights.cols) + ")");
  Node n{Op::Lstm};
  n.a = x.id;
  n.b = state.id;
  n.p1 = weights;
  n.p2 = bias;
  n.aux = aux_.size();
  aux_.resize(aux_.size() + 5 * hd);
  Var out = push(n, two_h);
  const double* xv = val(nodes_[x.id]);
  const double* sv = val(nodes_[state.id]);
  double* o = val(nodes_.back());
  double* aux = aux_.data() + nodes_.back().aux;
  detail::lstm_forward({xv, xd}, {sv, hd}, {sv + hd, hd}, params_->view(weights), params_->view(bias),
                       aux, aux + 4 * hd, o, o + hd);
  return out;
}

Var Tape::attend(Var keys, Var query, ParamRef v, std::size_t count) {
  const std::size_t hd = node(query).length;
  if (node(keys).length != count * hd || v.size() != hd)
    throw UsageError("attend: dimension mismatch");
  Node n{Op::Attend};
  n.a = keys.id;
  n.b = query.id;
  n.p1 = v;
  n.extra = count;
  n.aux = aux_.size();
  aux_.resize(aux_.size() + count * hd);
  Var out = push(n, count);
  const double* k = val(nodes_[keys.id]);
  const double* q = val(nodes_[query.id]);
  const double* vv = params_->flat().data() + v.offset;
  double* t = aux_.data() + nodes_.back().aux;
  double* y = val(nodes_.back());
  for (std::size_t j = 0; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hd; ++i) {
      const double th = std::tanh(k[j * hd + i] + q[i]);
      t[j * hd + i] = th;
      acc += vv[i] * th;
    }
    y[j] = acc;
  }
  return out;
}

Var Tape::log_softmax_pick(Var logits, std::span<const unsigned char> mask, std::size_t index,
                           std::vector<double>* probs_out) {
  const std::size_t len = node(logits).length;
  if (mask.size() != len) throw UsageError("log_softmax_pick: mask size mismatch");
  if (index >= len || !mask[index]) throw UsageError("log_softmax_pick: picked entry is masked");
  const std::span<const double> l{val(nodes_[logits.id]), len};
  std::vector<double> p = masked_softmax(l, mask);
  double top = -INFINITY;
  for (std::size_t j = 0; j < len; ++j)
    if (mask[j]) top = std::max(top, l[j]);
  double total = 0.0;
  for (std::size_t j = 0; j < len; ++j)
    if (mask[j]) total += std::exp(l[j] - top);

  Node n{Op::LogSoftmaxPick};
  n.a = logits.id;
  n.extra = index;
  n.aux = aux_.size();
  aux_.insert(aux_.end(), p.begin(), p.end());
  Var out = push(n, 1);
  *val(nodes_.back()) = l[index] - top - std::log(total);
  if (probs_out) *probs_out = std::move(p);
  return out;
}

void Tape::backward(Var output, double seed, std::span<double> param_grad) {
  if (nodes_.empty()) throw UsageError("backward called before any forward recording");
  const Node& out = node(output);
  if (param_grad.size() != params_->size())
    throw UsageError("backward: gradient buffer size does not match the parameter store");

  adjoints_.assign(values_.size(), 0.0);
  std::fill(adjoints_.begin() + out.offset, adjoints_.begin() + out.offset + out.length, seed);
  const double* pv = params_->flat().data();
  double* pg = param_grad.data();

  for (std::size_t id = output.id + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    const double* g = adjoints_.data() + n.offset;
    const double* y = values_.data() + n.offset;
    switch (n.op) {
      case Op::Input:
        break;
      case Op::Param: {
        double* dst = pg + n.p1.offset;
        for (std::size_t i = 0; i < n.length; ++i) dst[i] += g[i];
        break;
      }
      case Op::Affine: {
        const Node& in = nodes_[n.a];
        const double* x = values_.data() + in.offset;
        double* dx = adjoints_.data() + in.offset;
        const double* w = pv + n.p1.offset;
        double* dw = pg + n.p1.offset;
        const std::size_t cols = n.p1.cols;
        for (std::size_t r = 0; r < n.p1.rows; ++r) {
          const double gr = g[r];
          if (gr == 0.0) continue;
          const double* wr = w + r * cols;
          double* dwr = dw + r * cols;
          for (std::size_t c = 0; c < cols; ++c) {
            dwr[c] += gr * x[c];
            dx[c] += gr * wr[c];
          }
        }
        if (n.p2.offset != kNoParam) {
          double* db = pg + n.p2.offset;
          for (std::size_t r = 0; r < n.p1.rows; ++r) db[r] += g[r];
        }
        break;
      }
      case Op::Add: {
        double* da = adjoints_.data() + nodes_[n.a].offset;
        double* db = adjoints_.data() + nodes_[n.b].offset;
        for (std::size_t i = 0; i < n.length; ++i) {
          da[i] += g[i];
          db[i] += g[i];
        }
        break;
      }
      case Op::Mul: {
        const double* a = values_.data() + nodes_[n.a].offset;
        const double* b = values_.data() + nodes_[n.b].offset;
        double* da = adjoints_.data() + nodes_[n.a].offset;
        double* db = adjoints_.data() + nodes_[n.b].offset;
        for (std::size_t i = 0; i < n.length; ++i) {
          da[i] += g[i] * b[i];
          db[i] += g[i] * a[i];
        }
        break;
      }
      case Op::Tanh: {
        double* da = adjoints_.data() + nodes_[n.a].offset;
        for (std::size_t i = 0; i < n.length; ++i) da[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Op::Sigmoid: {
        double* da = adjoints_.data() + nodes_[n.a].offset;
        for (std::size_t i = 0; i < n.length; ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      }
      case Op::Sum: {
        double* da = adjoints_.data() + nodes_[n.a].offset;
        for (std::size_t i = 0; i < nodes_[n.a].length; ++i) da[i] += g[0];
        break;
      }
      case Op::Slice: {
        double* da = adjoints_.data() + nodes_[n.a].offset + n.extra;
        for (std::size_t i = 0; i < n.length; ++i) da[i] += g[i];
        break;
      }
      case Op::Stack: {
        const std::size_t part_len = n.length / n.b;
        for (std::size_t p = 0; p < n.b; ++p) {
          double* da = adjoints_.data() + nodes_[lists_[n.extra + p]].offset;
          for (std::size_t i = 0; i < part_len; ++i) da[i] += g[p * part_len + i];
        }
        break;
      }
      case Op::AddScalars: {
        for (std::size_t p = 0; p < n.b; ++p) adjoints_[nodes_[lists_[n.extra + p]].offset] += g[0];
        break;
      }
      case Op::Lstm: {
        const Node& xn = nodes_[n.a];
        const Node& sn = nodes_[n.b];
        const std::size_t hd = n.length / 2;
        const std::size_t xd = xn.length;
        const std::size_t cols = xd + hd;
        const double* gates = aux_.data() + n.aux;
        const double* tanh_c = gates + 4 * hd;
        const double* c_prev = values_.data() + sn.offset + hd;
        const double* dh = g;
        const double* dc_out = g + hd;
        double* ds = adjoints_.data() + sn.offset;
        double* dx = adjoints_.data() + xn.offset;

        scratch_.assign(4 * hd, 0.0);
        double* dz = scratch_.data();
        for (std::size_t j = 0; j < hd; ++j) {
          const double i = gates[j], f = gates[hd + j], gg = gates[2 * hd + j], o = gates[3 * hd + j];
          const double dc = dc_out[j] + dh[j] * o * (1.0 - tanh_c[j] * tanh_c[j]);
          dz[j] = dc * gg * i * (1.0 - i);
          dz[hd + j] = dc * c_prev[j] * f * (1.0 - f);
          dz[2 * hd + j] = dc * i * (1.0 - gg * gg);
          dz[3 * hd + j] = dh[j] * tanh_c[j] * o * (1.0 - o);
          ds[hd + j] += dc * f;
        }
        const double* x = values_.data() + xn.offset;
        const double* h = values_.data() + sn.offset;
        const double* w = pv + n.p1.offset;
        double* dw = pg + n.p1.offset;
        double* db = pg + n.p2.offset;
        for (std::size_t r = 0; r < 4 * hd; ++r) {
          const double gr = dz[r];
          db[r] += gr;
          if (gr == 0.0) continue;
          const double* wr = w + r * cols;
          double* dwr = dw + r * cols;
          for (std::size_t c = 0; c < xd; ++c) {
            dwr[c] += gr * x[c];
            dx[c] += gr * wr[c];
          }
          for (std::size_t c = 0; c < hd; ++c) {
            dwr[xd + c] += gr * h[c];
            ds[c] += gr * wr[xd + c];
          }
        }
        break;
      }
      case Op::Attend: {
        const std::size_t count = n.extra;
        const std::size_t hd = n.p1.size();
        const double* t = aux_.data() + n.aux;
        const double* v = pv + n.p1.offset;
        double* dv = pg + n.p1.offset;
        double* dk = adjoints_.data() + nodes_[n.a].offset;
        double* dq = adjoints_.data() + nodes_[n.b].offset;
        for (std::size_t j = 0; j < count; ++j) {
          const double gj = g[j];
          if (gj == 0.0) continue;
          for (std::size_t i = 0; i < hd; ++i) {
            const double th = t[j * hd + i];
            dv[i] += gj * th;
            const double pre = gj * v[i] * (1.0 - th * th);
            dk[j * hd + i] += pre;
            dq[i] += pre;
          }
        }
        break;
      }
      case Op::LogSoftmaxPick: {
        const Node& ln = nodes_[n.a];
        const double* p = aux_.data() + n.aux;
        double* dl = adjoints_.data() + ln.offset;
        // Masked entries have p == 0 and receive nothing.
        for (std::size_t j = 0; j < ln.length; ++j) dl[j] -= g[0] * p[j];
        dl[n.extra] += g[0];
        break;
      }
    }
  }
}

}  // namespace noma::tensor
