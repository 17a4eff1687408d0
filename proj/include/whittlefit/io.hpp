#pragma once

#include "whittlefit/diagnostics.hpp"
#include "whittlefit/inference.hpp"
#include "whittlefit/spectral.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace wf::io {

// Grid data files are raw little-endian 64-bit floats in colexicographic
// order, with a JSON sidecar at <path>.json:
//   {"dims": [...], "spacing": [...], "missing": "nan"|"mask",
//    "mask_path": optional, "domain": "space"|"frequency"}
struct FieldMeta {
  std::vector<int> dims;
  std::vector<double> spacing;
  std::string missing = "nan";
  std::optional<std::string> mask_path;
  std::string domain = "space";
  bool centered = false;  // frequencies recentred to (-pi, pi] for plotting
};

void write_field(const std::string& path, const GridSpec& grid, const ArrayXd& values,
                 const FieldMeta& meta);
RealField read_field(const std::string& path, FieldMeta* meta = nullptr);

// Mask in the same raw format: values clamped to [0,1], NaN -> 0.
Modulation mask_from_file(const std::string& path);

struct Dataset {
  RealField data;
  Modulation mod;
  bool demeaned = false;
};

// NaN sites become g = 0 with value 0; an explicit mask multiplies in on top
// (from `mask_path` here, or else the sidecar's). With demean, the weighted
// sample mean is removed at observed sites.
Dataset load_dataset(const std::string& data_path,
                     const std::optional<std::string>& mask_path, bool demean);

nlohmann::json fit_result_json(const FitResult& result);
nlohmann::json scc_report_json(const SccReport& report);

}  // namespace wf::io
