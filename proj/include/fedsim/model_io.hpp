#pragma once

#include <string>
#include <vector>

#include "fedsim/model.hpp"
#include "fedsim/param_vector.hpp"

namespace fedsim {

struct SavedModel {
  ModelSpec spec;
  std::vector<std::string> class_order;
  ParamVector params;
};

// Writes <path> (JSON header: spec, class_order, params_file) and a sibling
// binary file of little-endian 64-bit floats holding the flat parameters.
void save_model(const std::string& json_path, const SavedModel& model);

SavedModel load_model(const std::string& json_path);

}  // namespace fedsim
