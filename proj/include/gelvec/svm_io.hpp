#ifndef GELVEC_SVM_IO_HPP
#define GELVEC_SVM_IO_HPP

#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "svm.hpp"

namespace gelvec {

// Text model format, newline-delimited:
//
//   gelvec-svm v1
//   kernel linear            | kernel rbf <gamma>
//   <C> <bias> <dim> <n_sv>
//   <label> <alpha> <x_1> ... <x_dim>        (n_sv lines)
//   scaling none             | scaling minmax
//   <lo_1> ... <lo_dim>                      (minmax only)
//   <hi_1> ... <hi_dim>                      (minmax only)
//
// Reals use the shortest representation that round-trips exactly.

namespace detail {

inline void put_real(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline void put_row(std::string& out, const std::vector<double>& row) {
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k) out.push_back(' ');
    put_real(out, row[k]);
  }
}

class LineReader {
public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::string_view line(const char* what) {
    if (pos_ >= text_.size()) throw FormatError(std::string("model file truncated: missing ") + what);
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    std::string_view l = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    return l;
  }

  bool done() const {
    for (std::size_t i = pos_; i < text_.size(); ++i)
      if (text_[i] != '\n' && text_[i] != '\r' && text_[i] != ' ') return false;
    return true;
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline std::vector<std::string_view> split(std::string_view l) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < l.size()) {
    while (i < l.size() && (l[i] == ' ' || l[i] == '\t')) ++i;
    const std::size_t s = i;
    while (i < l.size() && l[i] != ' ' && l[i] != '\t') ++i;
    if (i > s) out.push_back(l.substr(s, i - s));
  }
  return out;
}

template <class T>
T parse_token(std::string_view tok, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw FormatError(std::string("bad ") + what + " '" + std::string(tok) + "'");
  return v;
}

inline std::vector<double> parse_row(std::string_view l, std::size_t n, const char* what) {
  const auto toks = split(l);
  if (toks.size() != n)
    throw FormatError(std::string(what) + ": expected " + std::to_string(n) + " values, got " +
                      std::to_string(toks.size()));
  std::vector<double> row;
  row.reserve(n);
  for (auto t : toks) row.push_back(parse_token<double>(t, what));
  return row;
}

}  // namespace detail

inline std::string serialize_model(const SvmModel& m) {
  std::string out = "gelvec-svm v1\n";
  if (const auto* rbf = std::get_if<RbfKernel>(&m.kernel)) {
    out += "kernel rbf ";
    detail::put_real(out, rbf->gamma);
    out += "\n";
  } else {
    out += "kernel linear\n";
  }
  detail::put_real(out, m.C);
  out.push_back(' ');
  detail::put_real(out, m.bias);
  out += " " + std::to_string(m.dim) + " " + std::to_string(m.support_vectors.size()) + "\n";
  for (std::size_t s = 0; s < m.support_vectors.size(); ++s) {
    out += m.support_labels[s] > 0 ? "1 " : "-1 ";
    detail::put_real(out, m.support_alphas[s]);
    if (m.dim) out.push_back(' ');
    detail::put_row(out, m.support_vectors[s]);
    out.push_back('\n');
  }
  if (m.scaling) {
    out += "scaling minmax\n";
    detail::put_row(out, m.scaling->lo());
    out.push_back('\n');
    detail::put_row(out, m.scaling->hi());
    out.push_back('\n');
  } else {
    out += "scaling none\n";
  }
  return out;
}

inline SvmModel parse_model(std::string_view text) {
  detail::LineReader in(text);
  if (in.line("header") != "gelvec-svm v1") throw FormatError("not a gelvec-svm v1 model");

  SvmModel m;
  const auto kernel = detail::split(in.line("kernel"));
  if (kernel.size() == 2 && kernel[0] == "kernel" && kernel[1] == "linear") {
    m.kernel = LinearKernel{};
  } else if (kernel.size() == 3 && kernel[0] == "kernel" && kernel[1] == "rbf") {
    m.kernel = RbfKernel{detail::parse_token<double>(kernel[2], "gamma")};
  } else {
    throw FormatError("bad kernel line");
  }

  const auto head = detail::split(in.line("parameters"));
  if (head.size() != 4) throw FormatError("parameter line needs C, bias, dim, n_sv");
  m.C = detail::parse_token<double>(head[0], "C");
  m.bias = detail::parse_token<double>(head[1], "bias");
  m.dim = detail::parse_token<std::size_t>(head[2], "dim");
  const auto n_sv = detail::parse_token<std::size_t>(head[3], "n_sv");

  for (std::size_t s = 0; s < n_sv; ++s) {
    const auto l = in.line("support vector");
    const auto row = detail::parse_row(l, m.dim + 2, "support vector");
    if (row[0] != 1.0 && row[0] != -1.0) throw FormatError("support label must be +1 or -1");
    m.support_labels.push_back(row[0] > 0 ? 1 : -1);
    m.support_alphas.push_back(row[1]);
    m.support_vectors.emplace_back(row.begin() + 2, row.end());
  }

  const auto scaling = in.line("scaling");
  if (scaling == "scaling minmax") {
    auto lo = detail::parse_row(in.line("scaling lo"), m.dim, "scaling lo");
    auto hi = detail::parse_row(in.line("scaling hi"), m.dim, "scaling hi");
    m.scaling = MinMaxScaler(std::move(lo), std::move(hi));
  } else if (scaling != "scaling none") {
    throw FormatError("bad scaling line");
  }
  if (!in.done()) throw FormatError("trailing data after model");
  return m;
}

}  // namespace gelvec

#endif  // GELVEC_SVM_IO_HPP
