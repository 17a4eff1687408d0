#include "whittlefit/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace wf::io {

using nlohmann::json;

namespace {

std::string sidecar_path(const std::string& path) { return path + ".json"; }

json read_sidecar(const std::string& path) {
  std::ifstream in(sidecar_path(path));
  if (!in) throw std::runtime_error("missing sidecar file " + sidecar_path(path));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed sidecar " + sidecar_path(path) + ": " + e.what());
  }
  return j;
}

ArrayXd read_raw(const std::string& path, std::int64_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open data file " + path);
  ArrayXd values(expected);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(expected * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(expected * sizeof(double)))
    throw std::runtime_error("data file " + path + " is shorter than the declared grid");
  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error("data file " + path + " is longer than the declared grid");
  return values;
}

}  // namespace

void write_field(const std::string& path, const GridSpec& grid, const ArrayXd& values,
                 const FieldMeta& meta) {
  if (values.size() != grid.total_points())
    throw std::invalid_argument("write_field: value count does not match grid");
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  }
  json j;
  j["dims"] = grid.dims();
  j["spacing"] = grid.spacing();
  j["missing"] = meta.missing;
  if (meta.mask_path) j["mask_path"] = *meta.mask_path;
  j["domain"] = meta.domain;
  if (meta.centered) j["centered"] = true;
  if (meta.domain == "frequency") {
    // bin k maps to physical frequency 2 pi k / (n_i delta_i)
    std::vector<double> step(grid.dim());
    for (int i = 0; i < grid.dim(); ++i)
      step[i] = 2.0 * 3.14159265358979323846 / (grid.dims()[i] * grid.spacing()[i]);
    j["frequency_step"] = step;
  }
  std::ofstream out(sidecar_path(path));
  if (!out) throw std::runtime_error("cannot write " + sidecar_path(path));
  out << j.dump(2) << "\n";
}

RealField read_field(const std::string& path, FieldMeta* meta) {
  const json j = read_sidecar(path);
  if (!j.contains("dims") || !j["dims"].is_array() || j["dims"].empty())
    throw std::runtime_error("malformed sidecar " + sidecar_path(path) +
                             ": missing dims");
  std::vector<int> dims = j["dims"].get<std::vector<int>>();
  std::vector<double> spacing =
      j.contains("spacing") ? j["spacing"].get<std::vector<double>>()
                            : std::vector<double>(dims.size(), 1.0);
  GridSpec grid(dims, spacing);
  ArrayXd values = read_raw(path, grid.total_points());
  if (meta) {
    meta->dims = dims;
    meta->spacing = spacing;
    meta->missing = j.value("missing", std::string("nan"));
    if (j.contains("mask_path")) meta->mask_path = j["mask_path"].get<std::string>();
    meta->domain = j.value("domain", std::string("space"));
    meta->centered = j.value("centered", false);
  }
  return RealField(std::move(grid), std::move(values));
}

Modulation mask_from_file(const std::string& path) {
  FieldMeta meta;
  RealField raw = read_field(path, &meta);
  ArrayXd g = raw.values;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    double v = g[i];
    if (std::isnan(v)) v = 0.0;
    g[i] = std::clamp(v, 0.0, 1.0);
  }
  return Modulation(raw.grid, std::move(g));
}

Dataset load_dataset(const std::string& data_path,
                     const std::optional<std::string>& mask_path, bool demean_flag) {
  FieldMeta meta;
  RealField field = read_field(data_path, &meta);

  ArrayXd g = ArrayXd::Ones(field.grid.total_points());
  ArrayXd values = field.values;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) {
      values[i] = 0.0;
      g[i] = 0.0;
    }
  }
  std::optional<std::string> mask_file = mask_path;
  if (!mask_file && meta.missing == "mask") {
    if (!meta.mask_path)
      throw std::runtime_error("sidecar declares missing=\"mask\" without mask_path");
    mask_file = meta.mask_path;
  }
  if (mask_file) {
    Modulation m = mask_from_file(*mask_file);
    if (!(m.grid() == field.grid))
      throw std::runtime_error("mask dims do not match the data grid");
    g *= m.values();
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (g[i] == 0.0) values[i] = 0.0;
  }

  Dataset ds{RealField(field.grid, std::move(values)),
             Modulation(field.grid, std::move(g)), false};
  if (demean_flag) {
    ds.data = demean(ds.data, ds.mod);
    ds.demeaned = true;
  }
  return ds;
}

json fit_result_json(const FitResult& result) {
  json j;
  json theta = json::object();
  for (int i = 0; i < result.theta_hat.size(); ++i)
    theta[result.theta_hat.names[i]] = result.theta_hat.values[i];
  j["theta"] = theta;
  j["nll"] = result.nll;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  if (result.sandwich_cov) {
    json cov = json::array();
    for (int r = 0; r < result.sandwich_cov->rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < result.sandwich_cov->cols(); ++c)
        row.push_back((*result.sandwich_cov)(r, c));
      cov.push_back(row);
    }
    j["cov"] = cov;
  }
  if (!result.ci.empty()) {
    json ci = json::object();
    const auto free_idx = result.theta_hat.free_indices();
    for (std::size_t k = 0; k < result.ci.size() && k < free_idx.size(); ++k)
      ci[result.theta_hat.names[free_idx[k]]] = {result.ci[k].first,
                                                 result.ci[k].second};
    j["ci"] = ci;
  }
  j["rate_rk"] = result.rate_rk;
  j["hscc_min_eig"] = result.hscc_min_eig;
  j["identifiability_warning"] = result.identifiability_warning;
  j["at_bound_warning"] = result.at_bound_warning;
  return j;
}

json scc_report_json(const SccReport& report) {
  json j;
  j["info_ratio"] = report.info_ratio;
  j["rate_rk"] = report.rate_rk;
  if (report.separation) j["separation"] = *report.separation;
  j["hscc_min_eig"] = report.hscc_min_eig;
  j["hscc_trace"] = report.hscc_trace;
  j["n_free"] = report.n_free;
  j["identifiability_warning"] = report.identifiability_warning;
  return j;
}

}  // namespace wf::io
