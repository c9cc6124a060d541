#include <fstream>
#include <json.hpp>

#include "anamac/tensor_io.hpp"
#include "anamac/train.hpp"

namespace anamac {
namespace {

using nlohmann::json;

std::string weight_file(const std::filesystem::path& manifest, std::size_t layer, std::size_t copy, bool copies) {
  std::string name = manifest.stem().string() + ".layer" + std::to_string(layer);
  if (copies) name += ".copy" + std::to_string(copy);
  return name + ".atns";
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& manifest) {
  const auto dir = manifest.parent_path();
  json layers = json::array();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    json j{{"kind", to_string(l.kind)},
           {"in", l.matmul.in},
           {"out", l.matmul.out},
           {"input_scale", l.matmul.input_scale},
           {"signed", l.matmul.signed_weights},
           {"num_sends", l.matmul.params.num_sends},
           {"wait_between_events", l.matmul.params.wait_between_events},
           {"relu", l.relu}};
    if (l.kind == LayerKind::Conv1d) {
      j["conv"] = {{"in_channels", l.conv.in_channels},
                   {"out_channels", l.conv.out_channels},
                   {"kernel", l.conv.kernel[0]},
                   {"stride", l.conv.stride[0]},
                   {"length", l.conv.extent[0]},
                   {"keep_positions", l.keep_positions}};
    }
    if (l.expansion) {
      j["copies"] = l.copies.size();
      json files = json::array();
      for (std::size_t c = 0; c < l.copies.size(); ++c) {
        const auto name = weight_file(manifest, i, c, true);
        write_tensor(Tensor(Shape{l.matmul.in, l.matmul.out}, l.copies[c]), dir / name);
        files.push_back(name);
      }
      j["weights"] = files;
    } else {
      const auto name = weight_file(manifest, i, 0, false);
      write_tensor(Tensor(Shape{l.matmul.in, l.matmul.out}, l.matmul.weights), dir / name);
      j["weights"] = name;
    }
    layers.push_back(std::move(j));
  }
  std::ofstream out(manifest);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + manifest.string());
  out << json{{"format", "anamac-model"}, {"version", 1}, {"layers", layers}}.dump(2) << "\n";
}

Model load_model(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + manifest.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, manifest.string() + ": " + e.what());
  }
  const auto dir = manifest.parent_path();
  auto read_weights = [&](const std::string& name, std::size_t in_dim, std::size_t out_dim) {
    const Tensor t = read_tensor(dir / name);
    if (t.shape() != Shape{in_dim, out_dim}) {
      throw Error(ErrorCode::ShapeMismatch, name + " has shape " + shape_string(t.shape()));
    }
    const auto v = t.values<float>();
    return std::vector<float>(v.begin(), v.end());
  };
  Model model;
  try {
    if (root.at("format") != "anamac-model") throw Error(ErrorCode::ParseError, "not a model manifest");
    if (root.at("version") != 1) throw Error(ErrorCode::UnsupportedVersion, "model manifest version");
    for (const auto& j : root.at("layers")) {
      LayerParams l;
      l.kind = layer_kind_from_string(j.at("kind").get<std::string>());
      l.matmul.in = j.at("in");
      l.matmul.out = j.at("out");
      l.matmul.input_scale = j.at("input_scale");
      l.matmul.signed_weights = j.at("signed");
      l.matmul.params.num_sends = j.at("num_sends");
      l.matmul.params.wait_between_events = j.at("wait_between_events");
      l.relu = j.at("relu");
      if (l.kind == LayerKind::Conv1d) {
        const auto& c = j.at("conv");
        l.conv = ConvSpec::conv1d(c.at("in_channels"), c.at("out_channels"), c.at("kernel"), c.at("stride"),
                                  c.at("length"));
        l.keep_positions = c.at("keep_positions");
      }
      if (j.contains("copies")) {
        // The packed height of P copies reproduces exactly P under the planner.
        const std::size_t copies = j.at("copies");
        if (copies == 0) throw Error(ErrorCode::ParseError, "expanded layer without copies");
        const std::size_t cap = (copies - 1) * l.conv.stride[0] * l.conv.in_channels + l.conv.matrix_rows();
        l.expansion = plan_expansion(l.conv, cap);
        for (const auto& name : j.at("weights")) {
          l.copies.push_back(read_weights(name.get<std::string>(), l.matmul.in, l.matmul.out));
        }
        if (l.copies.size() != l.expansion->copies) throw Error(ErrorCode::ShapeMismatch, "copy count");
        l.matmul.weights = l.copies.front();
      } else {
        l.matmul.weights = read_weights(j.at("weights").get<std::string>(), l.matmul.in, l.matmul.out);
      }
      model.layers.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, manifest.string() + ": " + e.what());
  }
  return model;
}

}  // namespace anamac
