#include "sdkn/model_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sdkn {

namespace {

template <class T>
constexpr const char* scalar_tag() {
  if constexpr (std::is_same_v<T, double>)
    return "binary64";
  else
    return "binary128";
}

double parse_double(const std::string& tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw DataError("model file: bad number '" + tok + "'");
  return v;
}

template <class T>
T parse_scalar(const std::string& tok) {
  if constexpr (std::is_same_v<T, double>) {
    return parse_double(tok);
  } else {
    try {
      return Quad(tok);
    } catch (const std::exception&) {
      throw DataError("model file: bad number '" + tok + "'");
    }
  }
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string tok;
    if (!(in_ >> tok)) throw DataError("model file: unexpected end of input");
    return tok;
  }

  void expect(const std::string& keyword) {
    const std::string tok = word();
    if (tok != keyword) throw DataError("model file: expected '" + keyword + "', found '" + tok + "'");
  }

  Index count() {
    const std::string tok = word();
    Index v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 0)
      throw DataError("model file: bad count '" + tok + "'");
    return v;
  }

  template <class T>
  Mat<T> matrix(Index rows, Index cols) {
    Mat<T> m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = parse_scalar<T>(word());
    return m;
  }

 private:
  std::istream& in_;
};

template <class T>
void write_matrix(std::ostream& out, const Mat<T>& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_number(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_number: buffer too small");
  return std::string(buf, ptr);
}

std::string format_number(const Quad& v) {
  return v.str(std::numeric_limits<Quad>::max_digits10, std::ios_base::scientific);
}

template <class T>
void write_model(std::ostream& out, const BasicModel<T>& model) {
  out << "sdkn-model 1 " << scalar_tag<T>() << '\n';
  out << "dims";
  for (Index d : model.dims()) out << ' ' << d;
  out << '\n';
  out << "centers " << model.num_centers() << ' ' << model.input_dim() << '\n';
  write_matrix(out, model.centers());
  for (Index k = 0; k < static_cast<Index>(model.linears().size()); ++k) {
    const auto& w = model.linear(k).weights;
    out << "linear " << w.rows() << ' ' << w.cols() << '\n';
    write_matrix(out, w);
    if (k < model.depth()) {
      const auto& act = model.activation(k);
      out << "activation " << act.num_centers() << ' ' << act.dim() << '\n';
      for (const auto& kern : act.kernels)
        out << "kernel " << family_name(kern.family) << ' ' << format_number(kern.epsilon) << '\n';
      write_matrix(out, act.coefficients);
    }
  }
  out << "end\n";
}

template <class T>
BasicModel<T> read_model(std::istream& in) {
  Reader r(in);
  r.expect("sdkn-model");
  const std::string version = r.word();
  if (version != "1") throw DataError("model file: unsupported format version " + version);
  const std::string tag = r.word();
  if (tag != scalar_tag<T>())
    throw DataError(std::string("model file: scalar type ") + tag + " does not match requested " +
                    scalar_tag<T>());
  r.expect("dims");
  std::vector<Index> dims;
  std::string tok = r.word();
  while (tok != "centers") {
    Index v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) throw DataError("model file: bad dimension '" + tok + "'");
    dims.push_back(v);
    tok = r.word();
  }
  const Index m = r.count();
  const Index d0 = r.count();
  Mat<T> centers = r.matrix<T>(m, d0);

  std::vector<BasicLinearLayer<T>> linears;
  std::vector<BasicActivationLayer<T>> activations;
  for (;;) {
    const std::string block = r.word();
    if (block == "end") break;
    if (block == "linear") {
      const Index rows = r.count();
      const Index cols = r.count();
      linears.push_back({r.matrix<T>(rows, cols)});
    } else if (block == "activation") {
      const Index rows = r.count();
      const Index cols = r.count();
      BasicActivationLayer<T> act;
      for (Index j = 0; j < cols; ++j) {
        r.expect("kernel");
        Kernel1D kern;
        kern.family = parse_family(r.word());
        kern.epsilon = parse_double(r.word());
        act.kernels.push_back(kern);
      }
      act.coefficients = r.matrix<T>(rows, cols);
      activations.push_back(std::move(act));
    } else {
      throw DataError("model file: unknown block '" + block + "'");
    }
  }
  try {
    BasicModel<T> model(std::move(linears), std::move(activations), std::move(centers));
    if (model.dims() != dims) throw DataError("model file: dims line does not match the layer blocks");
    return model;
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

template <class T>
void save_model(const std::filesystem::path& path, const BasicModel<T>& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_model(out, model);
  if (!out) throw DataError("failed writing " + path.string());
}

template <class T>
BasicModel<T> load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  return read_model<T>(in);
}

std::string model_scalar_tag(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  std::string magic, version, tag;
  if (!(in >> magic >> version >> tag) || magic != "sdkn-model")
    throw DataError(path.string() + " is not an sdkn model file");
  return tag;
}

SdknModel load_model_as_double(const std::filesystem::path& path) {
  if (model_scalar_tag(path) == "binary64") return load_model<double>(path);
  const QuadModel q = load_model<Quad>(path);
  std::vector<LinearLayer> linears;
  std::vector<ActivationLayer> activations;
  for (const auto& l : q.linears()) linears.push_back({cast_matrix<double>(l.weights)});
  for (const auto& a : q.activations()) activations.push_back({cast_matrix<double>(a.coefficients), a.kernels});
  return SdknModel(std::move(linears), std::move(activations), cast_matrix<double>(q.centers()));
}

template void write_model(std::ostream&, const BasicModel<double>&);
template void write_model(std::ostream&, const BasicModel<Quad>&);
template BasicModel<double> read_model(std::istream&);
template BasicModel<Quad> read_model(std::istream&);
template void save_model(const std::filesystem::path&, const BasicModel<double>&);
template void save_model(const std::filesystem::path&, const BasicModel<Quad>&);
template BasicModel<double> load_model(const std::filesystem::path&);
template BasicModel<Quad> load_model(const std::filesystem::path&);

}  // namespace sdkn
