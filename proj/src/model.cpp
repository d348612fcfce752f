#include "loa/model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "loa/errors.hpp"

namespace loa {

using nlohmann::json;

std::size_t ModelWeights::parameter_count() const {
  std::size_t c = 0;
  for (const auto& m : layers) c += m.size();
  return c;
}

void ModelWeights::validate() const {
  for (std::size_t i = 0; i < kLayerCount; ++i) {
    const auto& s = kLayerShapes[i];
    if (layers[i].rows() != s.rows || layers[i].cols() != s.cols)
      throw FormatError(std::string("layer ") + s.name + " has shape " + std::to_string(layers[i].rows()) + "x" +
                        std::to_string(layers[i].cols()) + ", expected " + std::to_string(s.rows) + "x" +
                        std::to_string(s.cols));
  }
  if (parameter_count() != kParameterCount) throw FormatError("parameter count is not 216");
}

ModelWeights init_random(Rng& rng, double scale) {
  ModelWeights w;
  for (std::size_t i = 0; i < kLayerCount; ++i) {
    const auto& s = kLayerShapes[i];
    Rng r = rng.substream(s.name);
    const double bound = scale * std::sqrt(1.0 / static_cast<double>(s.rows));
    Matrix m(s.rows, s.cols);
    for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = r.uniform(-bound, bound);
    w.layers[i] = std::move(m);
  }
  return w;
}

ModelWeights init_bfgs_coincident(Rng& rng) {
  ModelWeights w = init_random(rng);
  w.layers[4] = Matrix(12, 1);
  w.layers[kSkipLayer] = Matrix(6, 1);
  w.layers[kSkipLayer](4, 0) = 1.0;
  return w;
}

ModelWeights init_near_coincident(Rng& rng, double sigma) {
  Rng base = rng.substream("coincident");
  Rng noise = rng.substream("perturbation");
  ModelWeights w = init_bfgs_coincident(base);
  const ModelWeights p = init_random(noise, sigma);
  for (std::size_t i = 0; i < kLayerCount; ++i) w.layers[i] += p.layers[i];
  return w;
}

Vector forward(const ModelWeights& w, const Matrix& input) {
  if (input.cols() != 3) throw ShapeError("model input must have 3 columns, got " + std::to_string(input.cols()));
  return as_vector(model_forward(w.layers, input));
}

void save_weights(const ModelWeights& w, std::ostream& out, int epoch, double mean_loss) {
  w.validate();
  json j;
  j["format"] = "loa-weights";
  j["version"] = 1;
  json layers = json::array();
  for (std::size_t i = 0; i < kLayerCount; ++i)
    layers.push_back({{"name", kLayerShapes[i].name},
                      {"rows", kLayerShapes[i].rows},
                      {"cols", kLayerShapes[i].cols},
                      {"data", w.layers[i].values()}});
  j["layers"] = std::move(layers);
  if (epoch >= 0) {
    j["epoch"] = epoch;
    j["mean_loss"] = mean_loss;
  }
  // nlohmann writes doubles with round-trip precision.
  out << j.dump(1) << '\n';
}

ModelWeights load_weights(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("weights are not valid JSON: ") + ex.what());
  }
  try {
    if (j.value("version", 0) != 1) throw FormatError("unsupported weights version");
    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.size() != kLayerCount) throw FormatError("expected 6 layers");
    ModelWeights w;
    for (std::size_t i = 0; i < kLayerCount; ++i) {
      const auto& l = layers[i];
      if (l.at("name").get<std::string>() != kLayerShapes[i].name)
        throw FormatError("layer " + std::to_string(i) + " should be " + kLayerShapes[i].name);
      const auto rows = l.at("rows").get<std::size_t>();
      const auto cols = l.at("cols").get<std::size_t>();
      auto data = l.at("data").get<std::vector<double>>();
      if (data.size() != rows * cols) throw FormatError("layer data length does not match its shape");
      w.layers[i] = Matrix(rows, cols, std::move(data));
    }
    w.validate();
    return w;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("bad weights field: ") + ex.what());
  }
}

void save_weights_file(const ModelWeights& w, const std::string& path, int epoch, double mean_loss) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  save_weights(w, out, epoch, mean_loss);
}

ModelWeights load_weights_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return load_weights(in);
}

}  // namespace loa
