#include "fedsim/model_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fedsim/errors.hpp"

namespace fedsim {

using nlohmann::json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "model binary format assumes a little-endian host");

void save_model(const std::string& json_path, const SavedModel& model) {
  fs::path jp(json_path);
  fs::path bin = jp;
  bin.replace_extension(".bin");

  json header;
  header["kind"] = to_string(model.spec.kind);
  header["feature_dim"] = model.spec.feature_dim;
  header["num_classes"] = model.spec.num_classes;
  if (model.spec.kind == ModelKind::Mlp) header["hidden_dim"] = model.spec.hidden_dim;
  header["class_order"] = model.class_order;
  header["params_file"] = bin.filename().string();
  header["param_count"] = model.params.size();

  std::ofstream hout(jp);
  if (!hout) throw DataError("cannot write model header: " + json_path);
  hout << header.dump(2) << "\n";

  std::ofstream bout(bin, std::ios::binary);
  if (!bout) throw DataError("cannot write model parameters: " + bin.string());
  bout.write(reinterpret_cast<const char*>(model.params.values.data()),
             static_cast<std::streamsize>(model.params.size() * sizeof(double)));
}

SavedModel load_model(const std::string& json_path) {
  std::ifstream hin(json_path);
  if (!hin) throw DataError("cannot open model header: " + json_path);
  json header;
  try {
    hin >> header;
  } catch (const json::exception& e) {
    throw DataError("model header " + json_path + ": " + e.what());
  }

  SavedModel m;
  m.spec.kind = model_kind_from_string(header.at("kind").get<std::string>());
  m.spec.feature_dim = header.at("feature_dim").get<int>();
  m.spec.num_classes = header.at("num_classes").get<int>();
  m.spec.hidden_dim = header.value("hidden_dim", 0);
  m.spec.validate();
  m.class_order = header.at("class_order").get<std::vector<std::string>>();
  if (static_cast<int>(m.class_order.size()) != m.spec.num_classes)
    throw DataError("model header: class_order length does not match num_classes");

  fs::path bin = fs::path(json_path).parent_path() / header.at("params_file").get<std::string>();
  std::ifstream bfile(bin, std::ios::binary);
  if (!bfile) throw DataError("cannot open model parameters: " + bin.string());

  const std::size_t expected = m.spec.param_count();
  if (header.at("param_count").get<std::size_t>() != expected)
    throw DataError("model header: param_count does not match spec layout");
  m.params.values.resize(expected);
  bfile.read(reinterpret_cast<char*>(m.params.values.data()),
             static_cast<std::streamsize>(expected * sizeof(double)));
  if (static_cast<std::size_t>(bfile.gcount()) != expected * sizeof(double))
    throw DataError("model parameter file truncated: " + bin.string());
  return m;
}

}  // namespace fedsim
