#include <cmath>
#include <ostream>

#include "intel_latent/errors.hpp"
#include "intel_latent/metrics.hpp"

namespace intel_latent::metrics {

std::string MetricReport::to_json_line() const {
  if (!std::isfinite(value)) throw NumericError("metric '" + name + "' has a non-finite value");
  nlohmann::ordered_json j;
  j["name"] = name;
  j["value"] = value;
  if (stderr_) j["stderr"] = *stderr_;
  j["n"] = n;
  j["details"] = details;
  return j.dump();
}

MetricReport metric_report_from_json(const nlohmann::ordered_json& j) {
  MetricReport r;
  try {
    r.name = j.at("name").get<std::string>();
    r.value = j.at("value").get<double>();
    if (j.contains("stderr")) r.stderr_ = j.at("stderr").get<double>();
    r.n = j.at("n").get<std::size_t>();
    if (j.contains("details")) r.details = j.at("details");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metric report: ") + e.what());
  }
  return r;
}

void write_reports(std::ostream& out, const std::vector<MetricReport>& reports) {
  for (const auto& r : reports) out << r.to_json_line() << '\n';
}

}  // namespace intel_latent::metrics
