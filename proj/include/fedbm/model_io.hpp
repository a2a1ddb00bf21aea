/*
 * Copyright 2026 The fedbm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fedbm/dbm.hpp"
#include "fedbm/monitor.hpp"
#include "fedbm/numeric.hpp"
#include "fedbm/rbm.hpp"

namespace fedbm {

// Versioned textual model container: dimensions plus row-major weight values
// as round-trip-exact decimal doubles. Only ever written under the explicit
// model-export gate.
//
//   fedbm-model 1
//   <rbm|dbm> <n_layers>
//   layer <n_visible> <n_hidden>
//   visbias <values...>
//   hidbias <values...>
//   weights
//   <row 0 values...>
//   ...

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline void write_vector(std::ostream& out, const char* tag, const Vector& v) {
  out << tag;
  for (Index i = 0; i < v.size(); ++i) {
    out << " " << format_double(v(i));
  }
  out << "\n";
}

inline void write_rbm_body(std::ostream& out, const Rbm& m) {
  out << "layer " << m.n_visible() << " " << m.n_hidden() << "\n";
  write_vector(out, "visbias", m.visbias);
  write_vector(out, "hidbias", m.hidbias);
  out << "weights\n";
  for (Index i = 0; i < m.n_visible(); ++i) {
    for (Index j = 0; j < m.n_hidden(); ++j) {
      out << (j ? " " : "") << format_double(m.weights(i, j));
    }
    out << "\n";
  }
}

inline std::string expect_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) {
    throw std::runtime_error(std::string("model container: missing ") + what);
  }
  return tok;
}

inline void expect_keyword(std::istream& in, const std::string& kw) {
  const std::string tok = expect_token(in, kw.c_str());
  if (tok != kw) {
    throw std::runtime_error("model container: expected '" + kw + "', got '" +
                             tok + "'");
  }
}

inline double read_double(std::istream& in) {
  double x = 0.0;
  if (!(in >> x)) {
    throw std::runtime_error("model container: malformed number");
  }
  return x;
}

inline Rbm read_rbm_body(std::istream& in) {
  expect_keyword(in, "layer");
  Index nv = 0, nh = 0;
  if (!(in >> nv >> nh) || nv < 1 || nh < 1) {
    throw std::runtime_error("model container: bad layer dimensions");
  }
  Vector a(nv), b(nh);
  expect_keyword(in, "visbias");
  for (Index i = 0; i < nv; ++i) a(i) = read_double(in);
  expect_keyword(in, "hidbias");
  for (Index j = 0; j < nh; ++j) b(j) = read_double(in);
  expect_keyword(in, "weights");
  Matrix w(nv, nh);
  for (Index i = 0; i < nv; ++i) {
    for (Index j = 0; j < nh; ++j) {
      w(i, j) = read_double(in);
    }
  }
  return Rbm(std::move(w), std::move(a), std::move(b));
}

inline std::string read_header(std::istream& in, Index& n_layers) {
  expect_keyword(in, "fedbm-model");
  int version = 0;
  if (!(in >> version) || version != kModelFormatVersion) {
    throw std::runtime_error("model container: unsupported version");
  }
  const std::string kind = expect_token(in, "model kind");
  if (kind != "rbm" && kind != "dbm") {
    throw std::runtime_error("model container: unknown kind '" + kind + "'");
  }
  if (!(in >> n_layers) || n_layers < 1) {
    throw std::runtime_error("model container: bad layer count");
  }
  return kind;
}

}  // namespace detail

inline void save_model(const Rbm& m, std::ostream& out) {
  out << "fedbm-model " << kModelFormatVersion << "\nrbm 1\n";
  detail::write_rbm_body(out, m);
}

inline void save_model(const Dbm& m, std::ostream& out) {
  out << "fedbm-model " << kModelFormatVersion << "\ndbm " << m.layers.size()
      << "\n";
  for (const Rbm& r : m.layers) {
    detail::write_rbm_body(out, r);
  }
}

template <typename Model>
inline std::string model_to_string(const Model& m) {
  std::ostringstream out;
  save_model(m, out);
  return out.str();
}

using AnyModel = std::variant<Rbm, Dbm>;

inline AnyModel load_model(std::istream& in) {
  Index n_layers = 0;
  const std::string kind = detail::read_header(in, n_layers);
  if (kind == "rbm") {
    if (n_layers != 1) {
      throw std::runtime_error("model container: rbm must have one layer");
    }
    return detail::read_rbm_body(in);
  }
  std::vector<Rbm> layers;
  layers.reserve(static_cast<std::size_t>(n_layers));
  for (Index i = 0; i < n_layers; ++i) {
    layers.push_back(detail::read_rbm_body(in));
  }
  return Dbm(std::move(layers));
}

inline AnyModel model_from_string(const std::string& text) {
  std::istringstream in(text);
  return load_model(in);
}

}  // namespace fedbm
